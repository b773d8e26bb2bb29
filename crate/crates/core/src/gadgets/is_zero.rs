use super::{eval_at, CircuitBuilder};
use crate::circuit::{Assignment, ColumnId, ColumnRole, Expr};
use crate::field::PrimeField;
use crate::Result;

/// Equality flag `b = [v1 == v2]` via an inverse hint `p`:
/// `b = 1 - (v1 - v2) * p` and `b * (v1 - v2) = 0`.
#[derive(Clone, Debug)]
pub struct IsZeroConfig<F> {
    pub flag: ColumnId,
    pub inverse: ColumnId,
    pub selector: ColumnId,
    v1: Expr<F>,
    v2: Expr<F>,
    rows: usize,
}

impl<F: PrimeField> IsZeroConfig<F> {
    /// `v1` and `v2` must be degree-1 expressions.
    pub fn configure(b: &mut CircuitBuilder<F>, name: &str, v1: Expr<F>, v2: Expr<F>, rows: usize) -> Result<Self> {
        let flag = b.cs.advice(&format!("{name}/b"), ColumnRole::Internal, rows)?;
        let inverse = b.cs.advice(&format!("{name}/p"), ColumnRole::Hint, rows)?;
        let selector = b.cs.selector(&format!("{name}/q"), 0..rows)?;
        let diff = v1.clone() - v2.clone();
        b.cs.gate(
            &format!("{name}/is_zero"),
            selector,
            vec![flag.cur() - Expr::one() + diff.clone() * inverse.cur(), flag.cur() * diff],
        )?;
        Ok(IsZeroConfig { flag, inverse, selector, v1, v2, rows })
    }

    pub fn flag(&self) -> Expr<F> {
        self.flag.cur()
    }

    pub fn assign(&self, asg: &mut Assignment<F>) -> Result<()> {
        for row in 0..self.rows {
            let d = eval_at(asg, &self.v1, row) - eval_at(asg, &self.v2, row);
            let (b, p) = match d.invert() {
                Some(inv) => (F::zero(), inv),
                None => (F::one(), F::zero()),
            };
            asg.set(self.flag, row, b)?;
            asg.set(self.inverse, row, p)?;
        }
        Ok(())
    }
}
