use serde::{Deserialize, Serialize};

use super::expr::{ChallengeId, Expr};
use super::{Cell, ColumnId, ColumnKind};
use crate::field::PrimeField;
use crate::{Error, Result};

/// Maximum number of cell factors in any gate constraint.
pub const MAX_DEGREE: usize = 3;

/// What a column holds; drives serialization visibility and the tamper harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    /// Fixed 0/1 column gating a gate or lookup.
    Selector,
    /// Fixed lookup table or public constant.
    Constant,
    /// Private input data (scanned tables, operator inputs).
    Input,
    /// Witness value uniquely determined by the inputs.
    Internal,
    /// Prover hint that is not uniquely determined (e.g. the inverse in is-zero).
    Hint,
    /// Public output.
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub role: ColumnRole,
    /// 0 for ordinary advice, 1 for columns filled after challenges are drawn.
    pub phase: u8,
    /// Number of leading rows the owning gadget reads or writes.
    pub used_rows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate<F> {
    pub name: String,
    pub selector: ColumnId,
    pub constraints: Vec<Expr<F>>,
}

/// Every active input tuple must appear among the table's row tuples.
///
/// A row is active when `selector` is 1 and, if present, `condition`
/// evaluates to a nonzero value. Table rows are restricted to those where
/// `table_selector` is nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct Lookup<F> {
    pub name: String,
    pub selector: ColumnId,
    pub condition: Option<Expr<F>>,
    pub inputs: Vec<Expr<F>>,
    pub table: Vec<ColumnId>,
    pub table_selector: Option<ColumnId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopyConstraint {
    pub left: Cell,
    pub right: Cell,
}

/// Fill recipe for a running-product column: `z[0] = 1`,
/// `z[i+1] = z[i] * numerator(i) / denominator(i)` for `i < rows`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrandProduct<F> {
    pub name: String,
    pub z: ColumnId,
    pub numerator: Expr<F>,
    pub denominator: Expr<F>,
    pub rows: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateHandle(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LookupHandle(pub usize);

/// Circuit shape: column declarations, gates, copies, lookups and the
/// contents of fixed columns.
#[derive(Clone, Debug, Default)]
pub struct ConstraintSystem<F> {
    pub(crate) fixed: Vec<ColumnMeta>,
    pub(crate) advice: Vec<ColumnMeta>,
    pub(crate) instance: Vec<ColumnMeta>,
    pub(crate) fixed_values: Vec<Vec<F>>,
    pub(crate) gates: Vec<Gate<F>>,
    pub(crate) lookups: Vec<Lookup<F>>,
    pub(crate) copies: Vec<CopyConstraint>,
    pub(crate) challenges: Vec<String>,
    pub(crate) grand_products: Vec<GrandProduct<F>>,
    pub(crate) row_count: Option<usize>,
}

impl<F: PrimeField> ConstraintSystem<F> {
    pub fn new() -> Self {
        ConstraintSystem {
            fixed: Vec::new(),
            advice: Vec::new(),
            instance: Vec::new(),
            fixed_values: Vec::new(),
            gates: Vec::new(),
            lookups: Vec::new(),
            copies: Vec::new(),
            challenges: Vec::new(),
            grand_products: Vec::new(),
            row_count: None,
        }
    }

    fn ensure_open(&self) -> Result<()> {
        if self.row_count.is_some() {
            Err(Error::FrozenSystem)
        } else {
            Ok(())
        }
    }

    /// Declares an anonymous column of the given kind.
    pub fn declare_column(&mut self, kind: ColumnKind) -> Result<ColumnId> {
        let role = match kind {
            ColumnKind::Fixed => ColumnRole::Constant,
            ColumnKind::Advice => ColumnRole::Internal,
            ColumnKind::Instance => ColumnRole::Output,
        };
        let n = self.columns(kind).len();
        self.declare(kind, &format!("{kind:?}{n}").to_lowercase(), role, 0, 0)
    }

    pub fn declare(
        &mut self,
        kind: ColumnKind,
        name: &str,
        role: ColumnRole,
        phase: u8,
        used_rows: usize,
    ) -> Result<ColumnId> {
        self.ensure_open()?;
        let meta = ColumnMeta { name: name.to_string(), role, phase, used_rows };
        let list = match kind {
            ColumnKind::Fixed => {
                self.fixed_values.push(Vec::new());
                &mut self.fixed
            }
            ColumnKind::Advice => &mut self.advice,
            ColumnKind::Instance => &mut self.instance,
        };
        list.push(meta);
        Ok(ColumnId { kind, index: list.len() - 1 })
    }

    pub fn advice(&mut self, name: &str, role: ColumnRole, rows: usize) -> Result<ColumnId> {
        self.declare(ColumnKind::Advice, name, role, 0, rows)
    }

    /// Advice column filled after the challenges are squeezed.
    pub fn advice_late(&mut self, name: &str, rows: usize) -> Result<ColumnId> {
        self.declare(ColumnKind::Advice, name, ColumnRole::Internal, 1, rows)
    }

    pub fn instance(&mut self, name: &str, rows: usize) -> Result<ColumnId> {
        self.declare(ColumnKind::Instance, name, ColumnRole::Output, 0, rows)
    }

    /// Fixed column holding `values` in its leading rows.
    pub fn fixed(&mut self, name: &str, role: ColumnRole, values: Vec<F>) -> Result<ColumnId> {
        let col = self.declare(ColumnKind::Fixed, name, role, 0, values.len())?;
        self.fixed_values[col.index] = values;
        Ok(col)
    }

    /// Selector that is 1 on `rows` and 0 elsewhere.
    pub fn selector(&mut self, name: &str, rows: std::ops::Range<usize>) -> Result<ColumnId> {
        let mut values = vec![F::zero(); rows.end];
        for v in &mut values[rows] {
            *v = F::one();
        }
        self.fixed(name, ColumnRole::Selector, values)
    }

    pub fn challenge(&mut self, name: &str) -> Result<ChallengeId> {
        self.ensure_open()?;
        self.challenges.push(name.to_string());
        Ok(ChallengeId(self.challenges.len() - 1))
    }

    fn check_column(&self, col: ColumnId) -> Result<()> {
        if col.index < self.columns(col.kind).len() {
            Ok(())
        } else {
            Err(Error::UnknownColumn(format!("{:?} {}", col.kind, col.index)))
        }
    }

    fn check_expr(&self, expr: &Expr<F>) -> Result<()> {
        let mut err = None;
        expr.for_each_cell(&mut |c, rot| {
            if err.is_some() {
                return;
            }
            if let Err(e) = self.check_column(c) {
                err = Some(e);
            } else if !(-1..=1).contains(&rot) {
                err = Some(Error::InvalidRotation(rot));
            }
        });
        let mut walk = vec![expr];
        while let Some(e) = walk.pop() {
            match e {
                Expr::Challenge(c) if c.0 >= self.challenges.len() => {
                    return Err(Error::UnknownColumn(format!("challenge {}", c.0)));
                }
                Expr::Sum(a, b) | Expr::Product(a, b) => {
                    walk.push(a);
                    walk.push(b);
                }
                Expr::Negated(a) => walk.push(a),
                _ => {}
            }
        }
        err.map_or(Ok(()), Err)
    }

    pub fn add_gate(&mut self, gate: Gate<F>) -> Result<GateHandle> {
        self.ensure_open()?;
        if gate.selector.kind != ColumnKind::Fixed {
            return Err(Error::UnknownColumn(format!(
                "selector of gate `{}` must be a fixed column",
                gate.name
            )));
        }
        self.check_column(gate.selector)?;
        for c in &gate.constraints {
            self.check_expr(c)?;
            let degree = c.degree();
            if degree > MAX_DEGREE {
                return Err(Error::DegreeTooHigh { gate: gate.name.clone(), degree, max: MAX_DEGREE });
            }
        }
        self.gates.push(gate);
        Ok(GateHandle(self.gates.len() - 1))
    }

    /// Shorthand for a gate with several constraints under one selector.
    pub fn gate(&mut self, name: &str, selector: ColumnId, constraints: Vec<Expr<F>>) -> Result<GateHandle> {
        self.add_gate(Gate { name: name.to_string(), selector, constraints })
    }

    pub fn add_lookup(&mut self, lookup: Lookup<F>) -> Result<LookupHandle> {
        self.ensure_open()?;
        if lookup.inputs.len() != lookup.table.len() {
            return Err(Error::ShapeMismatch(format!(
                "lookup `{}` has {} inputs but {} table columns",
                lookup.name,
                lookup.inputs.len(),
                lookup.table.len()
            )));
        }
        self.check_column(lookup.selector)?;
        for e in lookup.inputs.iter().chain(lookup.condition.iter()) {
            self.check_expr(e)?;
        }
        for c in lookup.table.iter().chain(lookup.table_selector.iter()) {
            self.check_column(*c)?;
        }
        self.lookups.push(lookup);
        Ok(LookupHandle(self.lookups.len() - 1))
    }

    pub fn copy(&mut self, left: Cell, right: Cell) -> Result<()> {
        self.ensure_open()?;
        self.check_column(left.column)?;
        self.check_column(right.column)?;
        self.copies.push(CopyConstraint { left, right });
        Ok(())
    }

    pub fn add_grand_product(&mut self, gp: GrandProduct<F>) -> Result<()> {
        self.ensure_open()?;
        self.check_expr(&gp.numerator)?;
        self.check_expr(&gp.denominator)?;
        self.grand_products.push(gp);
        Ok(())
    }

    /// Fixes the row count to the smallest power of two covering every
    /// column's used rows (and at least `min_rows`), padding fixed columns
    /// with zeros.
    pub fn freeze(&mut self, min_rows: usize) -> Result<usize> {
        self.ensure_open()?;
        let used = self
            .fixed
            .iter()
            .chain(&self.advice)
            .chain(&self.instance)
            .map(|c| c.used_rows)
            .chain(self.fixed_values.iter().map(Vec::len))
            .chain(self.copies.iter().flat_map(|c| [c.left.row + 1, c.right.row + 1]))
            .max()
            .unwrap_or(0)
            .max(min_rows)
            .max(1);
        let n = used.next_power_of_two();
        for v in &mut self.fixed_values {
            v.resize(n, F::zero());
        }
        self.row_count = Some(n);
        Ok(n)
    }

    pub fn is_frozen(&self) -> bool {
        self.row_count.is_some()
    }

    /// Row count once frozen.
    pub fn row_count(&self) -> Option<usize> {
        self.row_count
    }

    pub fn columns(&self, kind: ColumnKind) -> &[ColumnMeta] {
        match kind {
            ColumnKind::Fixed => &self.fixed,
            ColumnKind::Advice => &self.advice,
            ColumnKind::Instance => &self.instance,
        }
    }

    pub fn column_meta(&self, col: ColumnId) -> &ColumnMeta {
        &self.columns(col.kind)[col.index]
    }

    pub fn fixed_values(&self) -> &[Vec<F>] {
        &self.fixed_values
    }

    pub fn fixed_value(&self, col: ColumnId, row: usize) -> F {
        self.fixed_values[col.index].get(row).copied().unwrap_or_else(F::zero)
    }

    pub fn gates(&self) -> &[Gate<F>] {
        &self.gates
    }

    pub fn lookups(&self) -> &[Lookup<F>] {
        &self.lookups
    }

    pub fn copies(&self) -> &[CopyConstraint] {
        &self.copies
    }

    pub fn challenges(&self) -> &[String] {
        &self.challenges
    }

    pub fn grand_products(&self) -> &[GrandProduct<F>] {
        &self.grand_products
    }
}
