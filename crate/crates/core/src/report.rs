//! Constraint counts next to the closed-form expectations for each gate.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{count_constraints, ConstraintReport};
use crate::compile::CompiledQuery;
use crate::field::PrimeField;
use crate::sql::{JoinMode, Op};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expectation {
    pub scope: String,
    pub item: String,
    pub formula: String,
    pub expected: usize,
    pub counted: usize,
    pub matches: bool,
}

impl Expectation {
    pub fn new(scope: &str, item: &str, formula: String, expected: usize, counted: usize) -> Self {
        Expectation { scope: scope.into(), item: item.into(), formula, expected, counted, matches: expected == counted }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub counts: ConstraintReport,
    pub expectations: Vec<Expectation>,
}

impl ComplexityReport {
    pub fn all_match(&self) -> bool {
        self.expectations.iter().all(|e| e.matches)
    }
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<44} {:>6} {:>8} {:>8}", "gate", "per", "rows", "total")?;
        for g in &self.counts.gates {
            writeln!(f, "{:<44} {:>6} {:>8} {:>8}", g.name, g.constraints_per_row, g.active_rows, g.total)?;
        }
        writeln!(f, "{:<44} {:>15} {:>8}", "lookup", "", "rows")?;
        for l in &self.counts.lookups {
            writeln!(f, "{:<44} {:>15} {:>8}", l.name, "", l.active_rows)?;
        }
        writeln!(f, "copies {}", self.counts.copies)?;
        writeln!(f)?;
        writeln!(f, "{:<22} {:<28} {:<22} {:>8} {:>8}  match", "scope", "item", "formula", "expected", "counted")?;
        for e in &self.expectations {
            writeln!(
                f,
                "{:<22} {:<28} {:<22} {:>8} {:>8}  {}",
                e.scope,
                e.item,
                e.formula,
                e.expected,
                e.counted,
                if e.matches { "match" } else { "MISMATCH" }
            )?;
        }
        Ok(())
    }
}

fn exact(name: &str) -> impl Fn(&str) -> bool + '_ {
    move |n| n == name
}

/// Batched range check of `|P|` values against a `|Q|`-entry table: one
/// sorted-permutation row per `max(|P|, |Q|)`.
pub fn batch_range_expectations(r: &ConstraintReport, name: &str, p: usize, q: usize) -> Vec<Expectation> {
    let counted = r.gate_rows(exact(&format!("{name}/first"))) + r.gate_rows(exact(&format!("{name}/adjacent")));
    vec![Expectation::new(name, "eq1 rows", format!("max({p},{q})"), p.max(q), counted)]
}

/// Byte-limb range check of `|P|` values below `2^bits`.
pub fn u8_range_expectations(r: &ConstraintReport, name: &str, p: usize, bits: u32) -> Vec<Expectation> {
    let limbs = bits.div_ceil(8) as usize;
    let top = usize::from(bits % 8 != 0);
    let lookups = r.lookup_rows(|n| n.strip_prefix(name).is_some_and(|s| s.starts_with("/limb") || s == "/top"));
    vec![
        Expectation::new(name, "limb lookup rows", format!("{}|P|, |P|={p}", limbs + top), (limbs + top) * p, lookups),
        Expectation::new(name, "decompose", format!("|P|={p}"), p, r.gate_total(exact(&format!("{name}/decompose")))),
    ]
}

/// The less-than gadget: the byte-limb range check of its shifted
/// difference plus one shift constraint per row.
pub fn less_than_expectations(r: &ConstraintReport, name: &str, p: usize, bits: u32) -> Vec<Expectation> {
    let mut out = u8_range_expectations(r, &format!("{name}/range"), p, bits);
    out.push(Expectation::new(name, "shift", format!("|P|={p}"), p, r.gate_total(exact(&format!("{name}/shift")))));
    out
}

pub fn sort_expectations(r: &ConstraintReport, name: &str, d: usize) -> Vec<Expectation> {
    vec![
        Expectation::new(name, "permutation rows", format!("|D|={d}"), d, r.gate_rows(exact(&format!("{name}/perm/z")))),
        Expectation::new(name, "adjacency checks", format!("|D|-1={}", d.saturating_sub(1)), d.saturating_sub(1), r.gate_rows(exact(&format!("{name}/sorted")))),
    ]
}

pub fn group_by_expectations(r: &ConstraintReport, name: &str, d: usize) -> Vec<Expectation> {
    let mut out = sort_expectations(r, &format!("{name}/sort"), d);
    out.push(Expectation::new(
        name,
        "boundary is_zero",
        format!("2|D|={}", 2 * d),
        2 * d,
        r.gate_total(exact(&format!("{name}/seg/same/is_zero"))),
    ));
    out
}

/// The five constraint categories of the join gate for inputs of `t1` and
/// `t2` padded rows.
pub fn join_expectations(r: &ConstraintReport, name: &str, t1: usize, t2: usize, mode: JoinMode) -> Vec<Expectation> {
    let sides: &[&str] = match mode {
        JoinMode::Pkfk => &["left_unmatched"],
        JoinMode::General => &["left_unmatched", "right_unmatched"],
    };
    let k = sides.len();
    let dedup: usize = sides
        .iter()
        .map(|s| r.lookup_rows(exact(&format!("{name}/{s}/dedup_a"))) + r.lookup_rows(exact(&format!("{name}/{s}/dedup_b"))))
        .sum();
    let strict: usize = sides.iter().map(|s| r.gate_rows(exact(&format!("{name}/{s}/strict")))).sum();
    let perm = r.gate_rows(exact(&format!("{name}/left/perm/z"))) + r.gate_rows(exact(&format!("{name}/right/perm/z")));
    let (eq_formula, eq_expected, eq_counted, src_formula, src_expected, src_counted) = match mode {
        JoinMode::Pkfk => (
            format!("|T1|={t1}"),
            t1,
            r.gate_rows(exact(&format!("{name}/pair"))),
            format!("|T1|={t1}"),
            t1,
            r.lookup_rows(exact(&format!("{name}/source"))),
        ),
        JoinMode::General => (
            format!("|T1||T2|={}", t1 * t2),
            t1 * t2,
            r.gate_rows(exact(&format!("{name}/key_eq/is_zero"))),
            format!("|T1||T2|={}", t1 * t2),
            t1 * t2,
            r.gate_rows(exact(&format!("{name}/emit"))),
        ),
    };
    vec![
        Expectation::new(name, "permutation rows", format!("|T1|+|T2|={}", t1 + t2), t1 + t2, perm),
        Expectation::new(name, "dedup lookup rows", format!("{k}(|T1|+|T2|)={}", k * (t1 + t2)), k * (t1 + t2), dedup),
        Expectation::new(name, "strict sortedness", format!("{k}(|T1|+|T2|-1)={}", k * (t1 + t2 - 1)), k * (t1 + t2 - 1), strict),
        Expectation::new(name, "equality rows", eq_formula, eq_expected, eq_counted),
        Expectation::new(name, "source verification", src_formula, src_expected, src_counted),
    ]
}

/// Expectations for every operator of a compiled query.
pub fn query_report<F: PrimeField>(compiled: &CompiledQuery<F>) -> ComplexityReport {
    let counts = count_constraints(&compiled.cs);
    let rows_of = |i: usize| compiled.tables.get(i).cloned().flatten().map_or(0, |t| t.rows);
    let mut expectations = Vec::new();
    for (idx, step) in compiled.plan.steps.iter().enumerate() {
        let name = format!("step{idx}");
        match &step.op {
            Op::Filter { input, cmp, .. } if !matches!(cmp, crate::sql::CmpOp::Eq) => {
                expectations.extend(less_than_expectations(&counts, &format!("{name}/filter/cmp"), rows_of(*input), crate::gates::ATTR_BITS));
            }
            Op::Sort { input, .. } => expectations.extend(sort_expectations(&counts, &format!("{name}/sort"), rows_of(*input))),
            Op::GroupBy { input, .. } => expectations.extend(group_by_expectations(&counts, &format!("{name}/group"), rows_of(*input))),
            Op::Join { left, right, mode, .. } => {
                expectations.extend(join_expectations(&counts, &format!("{name}/join"), rows_of(*left), rows_of(*right), *mode))
            }
            _ => {}
        }
    }
    ComplexityReport { counts, expectations }
}
