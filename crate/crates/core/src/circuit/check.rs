use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Assignment, Cell, ColumnKind, ConstraintSystem};
use crate::field::PrimeField;
use crate::{Error, Result};

/// One violated constraint.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Failure {
    Gate { gate: usize, name: String, constraint: usize, row: usize },
    Lookup { lookup: usize, name: String, row: usize },
    Copy { index: usize, left: Cell, right: Cell },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Gate { name, constraint, row, .. } => {
                write!(f, "gate `{name}` constraint {constraint} at row {row}")
            }
            Failure::Lookup { name, row, .. } => write!(f, "lookup `{name}` at row {row}"),
            Failure::Copy { index, left, right } => write!(
                f,
                "copy #{index} {:?}[{}] = {:?}[{}]",
                left.column.kind, left.row, right.column.kind, right.row
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub failures: Vec<Failure>,
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }

    /// Converts to `Err(ConstraintFailure)` listing the first few locations.
    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            return Ok(());
        }
        let shown: Vec<String> = self.failures.iter().take(8).map(|f| f.to_string()).collect();
        let more = self.failures.len().saturating_sub(shown.len());
        let mut msg = shown.join("; ");
        if more > 0 {
            msg.push_str(&format!("; and {more} more"));
        }
        Err(Error::ConstraintFailure(msg))
    }
}

fn check_shape<F: PrimeField>(cs: &ConstraintSystem<F>, asg: &Assignment<F>) -> Result<usize> {
    let n = cs
        .row_count()
        .ok_or_else(|| Error::ShapeMismatch("constraint system is not frozen".into()))?;
    if asg.row_count() != n {
        return Err(Error::ShapeMismatch(format!(
            "assignment has {} rows, circuit has {n}",
            asg.row_count()
        )));
    }
    for kind in [ColumnKind::Fixed, ColumnKind::Advice, ColumnKind::Instance] {
        let declared = cs.columns(kind).len();
        let cols = asg.columns(kind);
        if cols.len() != declared {
            return Err(Error::ShapeMismatch(format!(
                "{kind:?}: {} columns assigned, {declared} declared",
                cols.len()
            )));
        }
        if let Some(bad) = cols.iter().position(|c| c.len() != n) {
            return Err(Error::ShapeMismatch(format!("{kind:?} column {bad} is not {n} rows")));
        }
    }
    if asg.columns(ColumnKind::Fixed) != cs.fixed_values() {
        return Err(Error::ShapeMismatch("fixed column contents differ from the circuit".into()));
    }
    if asg.challenges().len() != cs.challenges().len() {
        return Err(Error::ShapeMismatch(format!(
            "{} challenges supplied, {} declared",
            asg.challenges().len(),
            cs.challenges().len()
        )));
    }
    Ok(n)
}

/// Evaluates every gate, lookup and copy constraint against `asg`.
///
/// Rotations wrap modulo the row count. Failures are sorted, so the verdict
/// does not depend on evaluation order.
pub fn check_satisfied<F: PrimeField>(cs: &ConstraintSystem<F>, asg: &Assignment<F>) -> Result<Verdict> {
    let n = check_shape(cs, asg)?;
    let challenge = |c: super::ChallengeId| asg.challenge(c);

    let gate_failures = cs.gates().par_iter().enumerate().flat_map_iter(|(gi, gate)| {
        let sel = &cs.fixed_values()[gate.selector.index];
        let mut out = Vec::new();
        for (row, s) in sel.iter().enumerate().take(n) {
            if s.is_zero() {
                continue;
            }
            let cell = |c, rot| asg.get_rotated(c, row, rot);
            for (ci, expr) in gate.constraints.iter().enumerate() {
                if !(*s * expr.evaluate(&cell, &challenge)).is_zero() {
                    out.push(Failure::Gate { gate: gi, name: gate.name.clone(), constraint: ci, row });
                }
            }
        }
        out
    });

    let lookup_failures = cs.lookups().par_iter().enumerate().flat_map_iter(|(li, lk)| {
        let mut table: HashSet<Vec<F>> = HashSet::new();
        for row in 0..n {
            if let Some(ts) = lk.table_selector {
                if asg.get(ts, row).is_zero() {
                    continue;
                }
            }
            table.insert(lk.table.iter().map(|c| asg.get(*c, row)).collect());
        }
        let sel = &cs.fixed_values()[lk.selector.index];
        let mut out = Vec::new();
        for row in 0..n {
            if sel[row].is_zero() {
                continue;
            }
            let cell = |c, rot| asg.get_rotated(c, row, rot);
            if let Some(cond) = &lk.condition {
                if cond.evaluate(&cell, &challenge).is_zero() {
                    continue;
                }
            }
            let tuple: Vec<F> = lk.inputs.iter().map(|e| e.evaluate(&cell, &challenge)).collect();
            if !table.contains(&tuple) {
                out.push(Failure::Lookup { lookup: li, name: lk.name.clone(), row });
            }
        }
        out
    });

    let mut failures: Vec<Failure> = gate_failures.chain(lookup_failures).collect();
    for (index, c) in cs.copies().iter().enumerate() {
        if asg.get(c.left.column, c.left.row) != asg.get(c.right.column, c.right.row) {
            failures.push(Failure::Copy { index, left: c.left, right: c.right });
        }
    }
    failures.sort();
    Ok(Verdict { failures })
}
