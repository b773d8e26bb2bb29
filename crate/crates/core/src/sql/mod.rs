//! SQL subset front end: parsing and planning.

mod parser;
mod plan;

pub use parser::{parse_sql, AggFunc, CmpOp, Query, SetOpKind};
pub use plan::{parse, plan, AggArg, FilterRhs, JoinMode, Op, PlanStep, QueryPlan, SortKey, MAX_KEY_COLUMNS};
