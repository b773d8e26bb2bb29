//! Plain in-memory evaluation of a plan with multiset semantics. Shares no
//! code with the circuit path and serves as its oracle.

use std::collections::{BTreeMap, HashMap};

use crate::data::{Database, Relation};
use crate::sql::{AggArg, AggFunc, FilterRhs, Op, QueryPlan, SetOpKind};
use crate::{Error, Result};

type Row = Vec<u128>;

fn overflow() -> Error {
    Error::InvalidData("aggregate overflows 128 bits".into())
}

fn arg_value(arg: AggArg, row: &[u128]) -> Result<u128> {
    Ok(match arg {
        AggArg::Star => 1,
        AggArg::Column { index } => row[index],
        AggArg::Product { left, right } => row[left].checked_mul(row[right]).ok_or_else(overflow)?,
    })
}

fn aggregate(func: AggFunc, arg: AggArg, rows: &[Row]) -> Result<u128> {
    let vals: Vec<u128> = rows.iter().map(|r| arg_value(arg, r)).collect::<Result<_>>()?;
    let sum = || vals.iter().try_fold(0u128, |a, &v| a.checked_add(v)).ok_or_else(overflow);
    Ok(match func {
        AggFunc::Sum => sum()?,
        AggFunc::Count => vals.len() as u128,
        AggFunc::Avg => {
            if vals.is_empty() {
                return Err(Error::DivisionByZeroGroup);
            }
            sum()? / vals.len() as u128
        }
        AggFunc::Min => *vals.iter().min().ok_or(Error::DivisionByZeroGroup)?,
        AggFunc::Max => *vals.iter().max().ok_or(Error::DivisionByZeroGroup)?,
    })
}

fn counts(rows: &[Row]) -> HashMap<&Row, usize> {
    let mut m = HashMap::new();
    for r in rows {
        *m.entry(r).or_insert(0) += 1;
    }
    m
}

/// Evaluates every step; returns the result relation (last step).
pub fn evaluate_reference(plan: &QueryPlan, db: &Database) -> Result<Relation> {
    let mut out: Vec<Vec<Row>> = Vec::with_capacity(plan.steps.len());
    // groups of each GroupBy step, keyed by step index
    let mut groups: HashMap<usize, Vec<(Row, Vec<Row>)>> = HashMap::new();
    for (idx, step) in plan.steps.iter().enumerate() {
        let rows: Vec<Row> = match &step.op {
            Op::Scan { table } => {
                db.table(table).ok_or_else(|| Error::InvalidData(format!("missing table `{table}`")))?.rows.clone()
            }
            Op::Filter { input, column, cmp, rhs } => out[*input]
                .iter()
                .filter(|r| {
                    let b = match rhs {
                        FilterRhs::Literal { value } => *value as u128,
                        FilterRhs::Column { index } => r[*index],
                    };
                    cmp.holds(r[*column], b)
                })
                .cloned()
                .collect(),
            Op::Join { left, right, left_key, right_key, .. } => {
                let mut v = Vec::new();
                for l in &out[*left] {
                    for r in &out[*right] {
                        if l[*left_key] == r[*right_key] {
                            v.push(l.iter().chain(r).copied().collect());
                        }
                    }
                }
                v
            }
            Op::GroupBy { input, keys, .. } => {
                let mut map: BTreeMap<Row, Vec<Row>> = BTreeMap::new();
                for r in &out[*input] {
                    map.entry(keys.iter().map(|&k| r[k]).collect()).or_default().push(r.clone());
                }
                let g: Vec<(Row, Vec<Row>)> = map.into_iter().collect();
                let rows = g.iter().map(|(k, _)| k.clone()).collect();
                groups.insert(idx, g);
                rows
            }
            Op::Aggregate { input, func, arg } => {
                let g = &groups[&plan.group_of(idx)];
                out[*input]
                    .iter()
                    .zip(g)
                    .map(|(prev, (_, members))| {
                        let mut r = prev.clone();
                        r.push(aggregate(*func, *arg, members)?);
                        Ok(r)
                    })
                    .collect::<Result<_>>()?
            }
            Op::Sort { input, keys } => {
                let mut v = out[*input].clone();
                v.sort_by(|a, b| {
                    keys.iter()
                        .map(|k| {
                            let o = a[k.column].cmp(&b[k.column]);
                            if k.descending {
                                o.reverse()
                            } else {
                                o
                            }
                        })
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                v
            }
            Op::Project { input, columns } => {
                out[*input].iter().map(|r| columns.iter().map(|&c| r[c]).collect()).collect()
            }
            Op::SetOp { left, right, kind } => {
                let (l, r) = (&out[*left], &out[*right]);
                let (cl, cr) = (counts(l), counts(r));
                match kind {
                    SetOpKind::Union => {
                        let mut v = l.clone();
                        for (row, &n) in &cr {
                            let have = cl.get(row).copied().unwrap_or(0);
                            v.extend(std::iter::repeat((*row).clone()).take(n.saturating_sub(have)));
                        }
                        v
                    }
                    SetOpKind::Intersect => {
                        let mut v = Vec::new();
                        for (row, &n) in &cl {
                            let m = cr.get(row).copied().unwrap_or(0);
                            v.extend(std::iter::repeat((*row).clone()).take(n.min(m)));
                        }
                        v
                    }
                    SetOpKind::Equality => vec![vec![u128::from(cl == cr)]],
                    SetOpKind::Disjoint => vec![vec![u128::from(cl.keys().all(|k| !cr.contains_key(k)))]],
                }
            }
        };
        out.push(rows);
    }
    let last = plan.result();
    Ok(Relation { name: "result".into(), columns: plan.steps[last].output.clone(), rows: out.swap_remove(last) })
}
