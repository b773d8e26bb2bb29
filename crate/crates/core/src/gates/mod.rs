//! Operator-level circuits built from gadgets: scan, filter, sort,
//! group-by with aggregates, join, projection and set operations.
//!
//! Every operator works on padded tables: a fixed budget of rows, a 0/1
//! validity column, and dummy rows wherever validity is 0.

mod filter;
mod groupby;
mod join;
mod project;
mod setop;
mod sort;

pub use filter::FilterConfig;
pub use groupby::{AggregateSpec, GroupByConfig};
pub use join::JoinConfig;
pub use project::ProjectConfig;
pub use setop::SetOpConfig;
pub use sort::{SortConfig, SortSpec};

use crate::circuit::{not, Assignment, ColumnId, ColumnRole, Expr};
use crate::gadgets::{eval_at, CircuitBuilder};
use crate::field::PrimeField;
use crate::{Error, Result};

/// Width of one attribute in composite keys and comparisons.
pub const ATTR_BITS: u32 = 64;

/// A padded table living in circuit columns, rows `0..rows`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableRef {
    pub valid: ColumnId,
    pub cols: Vec<ColumnId>,
    pub rows: usize,
}

impl TableRef {
    /// Declares `1 + arity` fresh advice columns.
    pub fn declare<F: PrimeField>(
        b: &mut CircuitBuilder<F>,
        name: &str,
        arity: usize,
        rows: usize,
        role: ColumnRole,
    ) -> Result<Self> {
        let valid = b.cs.advice(&format!("{name}/valid"), role, rows)?;
        let cols = (0..arity)
            .map(|j| b.cs.advice(&format!("{name}/c{j}"), role, rows))
            .collect::<Result<_>>()?;
        Ok(TableRef { valid, cols, rows })
    }

    /// `[valid, cols...]` at the current row.
    pub fn tuple<F: PrimeField>(&self) -> Vec<Expr<F>> {
        std::iter::once(self.valid).chain(self.cols.iter().copied()).map(|c| c.cur()).collect()
    }

    pub fn columns(&self) -> Vec<ColumnId> {
        std::iter::once(self.valid).chain(self.cols.iter().copied()).collect()
    }

    /// Rows as `[valid, cols...]`.
    pub fn read<F: PrimeField>(&self, asg: &Assignment<F>) -> Vec<Vec<F>> {
        let cols = self.columns();
        (0..self.rows).map(|r| cols.iter().map(|c| asg.get(*c, r)).collect()).collect()
    }

    /// Valid rows only, without the flag.
    pub fn read_valid<F: PrimeField>(&self, asg: &Assignment<F>) -> Vec<Vec<F>> {
        self.read(asg).into_iter().filter(|r| !r[0].is_zero()).map(|r| r[1..].to_vec()).collect()
    }

    /// Writes `[valid, cols...]` rows, padding with all-zero dummies.
    pub fn write<F: PrimeField>(&self, asg: &mut Assignment<F>, rows: &[Vec<F>]) -> Result<()> {
        if rows.len() > self.rows {
            return Err(Error::InternalInconsistency(format!("{} rows into a {}-row table", rows.len(), self.rows)));
        }
        for (j, c) in self.columns().into_iter().enumerate() {
            for r in 0..self.rows {
                asg.set(c, r, rows.get(r).map_or(F::zero(), |row| row[j]))?;
            }
        }
        Ok(())
    }
}

/// One component of a composite key.
#[derive(Clone, Debug)]
pub struct KeyPart<F> {
    pub expr: Expr<F>,
    pub bits: u32,
    pub descending: bool,
}

impl<F: PrimeField> KeyPart<F> {
    pub fn asc(expr: Expr<F>) -> Self {
        KeyPart { expr, bits: ATTR_BITS, descending: false }
    }
}

/// Big-endian concatenation `(1 - valid) || part_0 || ... || part_{m-1}`,
/// with descending parts stored as `2^bits - 1 - v`. Dummy rows therefore
/// order after every valid row. Returns the expression and its bit width.
pub fn composite<F: PrimeField>(valid: &Expr<F>, parts: &[KeyPart<F>]) -> (Expr<F>, u32) {
    let mut acc = Expr::zero();
    let mut offset = 0u32;
    for p in parts.iter().rev() {
        let v = if p.descending { Expr::Constant(F::pow2(p.bits) - F::one()) - p.expr.clone() } else { p.expr.clone() };
        acc = acc + v * Expr::Constant(F::pow2(offset));
        offset += p.bits;
    }
    (acc + not(valid.clone()) * Expr::Constant(F::pow2(offset)), offset + 1)
}

/// A base table loaded from the database; dummy rows are all zero and
/// valid rows form a prefix.
#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub table: TableRef,
}

impl ScanConfig {
    pub fn configure<F: PrimeField>(b: &mut CircuitBuilder<F>, name: &str, arity: usize, rows: usize) -> Result<Self> {
        let table = TableRef::declare(b, name, arity, rows, ColumnRole::Input)?;
        let q = b.cs.selector(&format!("{name}/q"), 0..rows)?;
        let v = table.valid.cur();
        let mut cs = vec![v.clone() * not(v.clone())];
        cs.extend(table.cols.iter().map(|c| not(v.clone()) * c.cur()));
        b.cs.gate(&format!("{name}/dummy"), q, cs)?;
        let q_prefix = b.cs.selector(&format!("{name}/q_prefix"), 0..rows.saturating_sub(1))?;
        b.cs.gate(&format!("{name}/prefix"), q_prefix, vec![table.valid.next() * not(v)])?;
        Ok(ScanConfig { table })
    }

    pub fn assign<F: PrimeField>(&self, asg: &mut Assignment<F>, name: &str, rows: &[Vec<u128>]) -> Result<()> {
        if rows.len() > self.table.rows {
            return Err(Error::BudgetExceeded { step: format!("scan {name}"), rows: rows.len(), budget: self.table.rows });
        }
        let mut out = Vec::with_capacity(rows.len());
        for r in rows {
            let mut row = vec![F::one()];
            for &v in r {
                let v = u64::try_from(v).map_err(|_| Error::InvalidData(format!("{name}: value {v} exceeds 64 bits")))?;
                row.push(F::from_u64(v));
            }
            out.push(row);
        }
        self.table.write(asg, &out)
    }
}

/// Evaluates `expr` on rows `0..rows`.
pub(crate) fn eval_rows<F: PrimeField>(asg: &Assignment<F>, expr: &Expr<F>, rows: usize) -> Vec<F> {
    (0..rows).map(|r| eval_at(asg, expr, r)).collect()
}

pub(crate) fn bit<F: PrimeField>(b: bool) -> F {
    if b {
        F::one()
    } else {
        F::zero()
    }
}
