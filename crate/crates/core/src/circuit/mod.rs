//! PLONKish constraint systems: column declarations, polynomial gates,
//! copy constraints and lookups, plus the satisfaction checker that stands
//! in for a prover/verifier pair.

mod assignment;
mod check;
mod digest;
mod expr;
mod system;

use serde::{Deserialize, Serialize};

pub use assignment::{column_commitment, squeeze_challenges, Assignment};
pub use check::{check_satisfied, Failure, Verdict};
pub use digest::{count_constraints, shape_digest, structure_hash, ConstraintReport, GateCount, LookupCount, ShapeDigest};
pub use expr::{not, ChallengeId, Expr};
pub use system::{
    ColumnMeta, ColumnRole, ConstraintSystem, CopyConstraint, Gate, GateHandle, GrandProduct, Lookup,
    LookupHandle, MAX_DEGREE,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Fixed,
    Advice,
    Instance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnId {
    pub kind: ColumnKind,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub column: ColumnId,
    pub row: usize,
}

impl Cell {
    pub fn new(column: ColumnId, row: usize) -> Self {
        Cell { column, row }
    }
}
