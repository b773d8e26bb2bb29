use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{column_commitment, Assignment, ColumnKind, ConstraintSystem};
use crate::field::PrimeField;

/// Summary of everything the verifier can see about a circuit's shape.
/// Never depends on advice values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeDigest {
    pub fixed_columns: usize,
    pub advice_columns: usize,
    pub instance_columns: usize,
    pub row_count: usize,
    pub gates: Vec<(String, usize)>,
    pub lookup_count: usize,
    pub copy_count: usize,
    /// Hash of all fixed-column contents.
    pub fixed_hash: String,
    /// Hash of column metadata, gate and lookup expressions, copies and
    /// grand-product recipes.
    pub structure_hash: String,
}

impl ShapeDigest {
    /// One hex string covering every field.
    pub fn combined(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("digest serializes"));
        hex::encode(h.finalize())
    }
}

pub fn structure_hash<F: PrimeField>(cs: &ConstraintSystem<F>) -> String {
    let mut h = Sha256::new();
    let mut put = |s: &str| {
        h.update((s.len() as u64).to_be_bytes());
        h.update(s.as_bytes());
    };
    for kind in [ColumnKind::Fixed, ColumnKind::Advice, ColumnKind::Instance] {
        for m in cs.columns(kind) {
            put(&format!("{kind:?}|{}|{:?}|{}|{}", m.name, m.role, m.phase, m.used_rows));
        }
    }
    for g in cs.gates() {
        put(&format!("gate|{}|{}", g.name, g.selector.index));
        for c in &g.constraints {
            put(&c.to_string());
        }
    }
    for l in cs.lookups() {
        put(&format!("lookup|{}|{}", l.name, l.selector.index));
        if let Some(c) = &l.condition {
            put(&c.to_string());
        }
        for e in &l.inputs {
            put(&e.to_string());
        }
        put(&format!("{:?}|{:?}", l.table, l.table_selector));
    }
    for c in cs.copies() {
        put(&format!("copy|{:?}|{:?}", c.left, c.right));
    }
    for gp in cs.grand_products() {
        put(&format!("gp|{}|{:?}|{}|{}|{}", gp.name, gp.z, gp.numerator, gp.denominator, gp.rows));
    }
    for c in cs.challenges() {
        put(&format!("challenge|{c}"));
    }
    hex::encode(h.finalize())
}

pub fn shape_digest<F: PrimeField>(cs: &ConstraintSystem<F>, asg: &Assignment<F>) -> ShapeDigest {
    let mut fh = Sha256::new();
    for col in asg.columns(ColumnKind::Fixed) {
        fh.update(column_commitment(col));
    }
    ShapeDigest {
        fixed_columns: cs.columns(ColumnKind::Fixed).len(),
        advice_columns: cs.columns(ColumnKind::Advice).len(),
        instance_columns: cs.columns(ColumnKind::Instance).len(),
        row_count: asg.row_count(),
        gates: cs.gates().iter().map(|g| (g.name.clone(), g.constraints.len())).collect(),
        lookup_count: cs.lookups().len(),
        copy_count: cs.copies().len(),
        fixed_hash: hex::encode(fh.finalize()),
        structure_hash: structure_hash(cs),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCount {
    pub name: String,
    pub constraints_per_row: usize,
    pub active_rows: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupCount {
    pub name: String,
    pub active_rows: usize,
}

/// Active-row constraint counts per gate and lookup.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub gates: Vec<GateCount>,
    pub lookups: Vec<LookupCount>,
    pub copies: usize,
}

impl ConstraintReport {
    /// Total gate constraints over gates whose name satisfies `pred`.
    pub fn gate_total(&self, pred: impl Fn(&str) -> bool) -> usize {
        self.gates.iter().filter(|g| pred(&g.name)).map(|g| g.total).sum()
    }

    /// Total active gate rows (not multiplied by constraint count).
    pub fn gate_rows(&self, pred: impl Fn(&str) -> bool) -> usize {
        self.gates.iter().filter(|g| pred(&g.name)).map(|g| g.active_rows).sum()
    }

    pub fn lookup_rows(&self, pred: impl Fn(&str) -> bool) -> usize {
        self.lookups.iter().filter(|l| pred(&l.name)).map(|l| l.active_rows).sum()
    }
}

pub fn count_constraints<F: PrimeField>(cs: &ConstraintSystem<F>) -> ConstraintReport {
    let active = |sel: super::ColumnId| {
        cs.fixed_values()
            .get(sel.index)
            .map_or(0, |v| v.iter().filter(|x| !x.is_zero()).count())
    };
    ConstraintReport {
        gates: cs
            .gates()
            .iter()
            .map(|g| {
                let rows = active(g.selector);
                GateCount {
                    name: g.name.clone(),
                    constraints_per_row: g.constraints.len(),
                    active_rows: rows,
                    total: rows * g.constraints.len(),
                }
            })
            .collect(),
        lookups: cs
            .lookups()
            .iter()
            .map(|l| LookupCount { name: l.name.clone(), active_rows: active(l.selector) })
            .collect(),
        copies: cs.copies().len(),
    }
}
