//! Reusable sub-circuits. Each gadget has a `configure` step that depends
//! only on sizes (so circuit shape never depends on private data) and an
//! `assign` step that reads its inputs from the assignment and fills the
//! witness columns it owns.

mod accumulator;
mod is_zero;
mod less_than;
mod permutation;
mod range;

pub use accumulator::{AccumulatorConfig, AccumulatorKind};
pub use is_zero::IsZeroConfig;
pub use less_than::LessThanConfig;
pub use permutation::{ShuffleConfig, SubsetConfig};
pub use range::{BatchRangeCheckConfig, U8RangeCheckConfig, MAX_RANGE_BITS};

use crate::circuit::{Assignment, ChallengeId, ColumnId, ColumnRole, ConstraintSystem, Expr};
use crate::field::PrimeField;
use crate::Result;

/// Random challenges shared by every permutation argument in a circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Challenges {
    pub alpha: ChallengeId,
    pub beta: ChallengeId,
    /// Weight for folding multi-column rows into one fingerprint.
    pub gamma: ChallengeId,
}

/// Constraint system under construction plus circuit-wide shared columns.
#[derive(Debug)]
pub struct CircuitBuilder<F> {
    pub cs: ConstraintSystem<F>,
    u8_table: Option<ColumnId>,
    challenges: Option<Challenges>,
}

impl<F: PrimeField> Default for CircuitBuilder<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: PrimeField> CircuitBuilder<F> {
    pub fn new() -> Self {
        CircuitBuilder { cs: ConstraintSystem::new(), u8_table: None, challenges: None }
    }

    /// The fixed 256-entry table `[0, 255]`, created on first use.
    pub fn u8_table(&mut self) -> Result<ColumnId> {
        if let Some(t) = self.u8_table {
            return Ok(t);
        }
        let values = (0..256u64).map(F::from_u64).collect();
        let t = self.cs.fixed("u8_table", ColumnRole::Constant, values)?;
        self.u8_table = Some(t);
        Ok(t)
    }

    pub fn challenges(&mut self) -> Result<Challenges> {
        if let Some(c) = self.challenges {
            return Ok(c);
        }
        let c = Challenges {
            alpha: self.cs.challenge("alpha")?,
            beta: self.cs.challenge("beta")?,
            gamma: self.cs.challenge("gamma")?,
        };
        self.challenges = Some(c);
        Ok(c)
    }

    /// Fixed column holding `value` on rows `0..rows`.
    pub fn constant_column(&mut self, name: &str, value: F, rows: usize) -> Result<ColumnId> {
        self.cs.fixed(name, ColumnRole::Constant, vec![value; rows])
    }

    pub fn finish(mut self, min_rows: usize) -> Result<ConstraintSystem<F>> {
        self.cs.freeze(min_rows)?;
        Ok(self.cs)
    }
}

/// Evaluates a challenge-free expression at `row`.
pub(crate) fn eval_at<F: PrimeField>(asg: &Assignment<F>, expr: &Expr<F>, row: usize) -> F {
    let cell = |c, rot| asg.get_rotated(c, row, rot);
    let ch = |c: ChallengeId| asg.challenges().get(c.0).copied().unwrap_or_else(F::zero);
    expr.evaluate(&cell, &ch)
}

/// Rewrites every cell reference in `expr` to the given rotation offset.
pub fn rotate<F: Clone>(expr: &Expr<F>, by: i32) -> Expr<F> {
    match expr {
        Expr::Cell { column, rotation } => Expr::Cell { column: *column, rotation: rotation + by },
        Expr::Sum(a, b) => Expr::Sum(Box::new(rotate(a, by)), Box::new(rotate(b, by))),
        Expr::Product(a, b) => Expr::Product(Box::new(rotate(a, by)), Box::new(rotate(b, by))),
        Expr::Negated(a) => Expr::Negated(Box::new(rotate(a, by))),
        other => other.clone(),
    }
}
