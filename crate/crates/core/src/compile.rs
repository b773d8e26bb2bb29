//! Chains the gates of a query plan into one constraint system.
//!
//! Every step reads its input step's output columns directly, so the
//! composition needs no extra copies between operators. The final output is
//! copied into Instance columns.

use std::collections::BTreeMap;

use crate::circuit::{Cell, ConstraintSystem};
use crate::data::Database;
use crate::field::PrimeField;
use crate::gadgets::CircuitBuilder;
use crate::gates::{
    AggregateSpec, FilterConfig, GroupByConfig, JoinConfig, ProjectConfig, ScanConfig, SetOpConfig, SortConfig,
    SortSpec, TableRef, ATTR_BITS,
};
use crate::sql::{Op, QueryPlan};
use crate::{Error, Result};

/// The smallest circuit height; covers the 256-row u8 table.
pub const MIN_ROWS: usize = 256;

/// Padded row budget per scanned table.
pub type Budgets = BTreeMap<String, usize>;

#[derive(Clone, Debug)]
pub enum StepCircuit<F> {
    Scan { table: String, config: ScanConfig },
    Filter(FilterConfig<F>),
    Join(JoinConfig<F>),
    GroupBy(GroupByConfig<F>),
    /// Evaluated inside the owning GroupBy.
    Aggregate,
    Sort(SortConfig<F>),
    Project(ProjectConfig),
    SetOp(SetOpConfig<F>),
}

#[derive(Clone, Debug)]
pub struct CompiledQuery<F> {
    pub plan: QueryPlan,
    pub budgets: Budgets,
    pub cs: ConstraintSystem<F>,
    pub steps: Vec<StepCircuit<F>>,
    /// Output table of every step; `None` for GroupBy steps whose result is
    /// carried by their last Aggregate.
    pub tables: Vec<Option<TableRef>>,
    /// Public copy of the result: validity then one column per output name.
    pub instance: TableRef,
}

impl<F> CompiledQuery<F> {
    pub fn output_names(&self) -> &[String] {
        &self.plan.steps[self.plan.result()].output
    }
}

/// Parses `name=rows,name=rows`.
pub fn parse_budgets(spec: &str) -> Result<Budgets> {
    let mut out = Budgets::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidData(format!("budget `{part}` is not `table=rows`")))?;
        let rows: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidData(format!("budget `{part}` has a non-numeric row count")))?;
        out.insert(k.trim().to_string(), rows);
    }
    Ok(out)
}

/// Scanned table names, in first-scan order.
pub fn scanned_tables(plan: &QueryPlan) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in &plan.steps {
        if let Op::Scan { table } = &s.op {
            if !out.iter().any(|t| t.eq_ignore_ascii_case(table)) {
                out.push(table.clone());
            }
        }
    }
    out
}

/// The next power of two at or above each scanned table's row count.
pub fn default_budgets(plan: &QueryPlan, db: &Database) -> Result<Budgets> {
    scanned_tables(plan)
        .into_iter()
        .map(|t| {
            let rel = db.table(&t).ok_or_else(|| Error::InvalidData(format!("missing table `{t}`")))?;
            Ok((t, rel.row_count().max(1).next_power_of_two()))
        })
        .collect()
}

fn budget_of(budgets: &Budgets, table: &str) -> Result<usize> {
    let rows = budgets
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(table))
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::InvalidData(format!("no row budget for table `{table}`")))?;
    if rows == 0 || !rows.is_power_of_two() {
        return Err(Error::InvalidData(format!("budget {rows} for `{table}` is not a power of two")));
    }
    Ok(rows)
}

/// Builds the circuit for `plan`. The shape depends only on the plan, the
/// budgets and the literals, never on table contents.
pub fn compile<F: PrimeField>(plan: &QueryPlan, budgets: &Budgets) -> Result<CompiledQuery<F>> {
    let mut b = CircuitBuilder::<F>::new();
    let mut steps = Vec::with_capacity(plan.steps.len());
    let mut tables: Vec<Option<TableRef>> = Vec::with_capacity(plan.steps.len());
    let input = |tables: &[Option<TableRef>], i: usize| -> Result<TableRef> {
        tables
            .get(i)
            .cloned()
            .flatten()
            .ok_or_else(|| Error::InternalInconsistency(format!("step input {i} has no table")))
    };
    for (idx, step) in plan.steps.iter().enumerate() {
        let name = format!("step{idx}");
        let (circuit, table) = match &step.op {
            Op::Scan { table } => {
                let rows = budget_of(budgets, table)?;
                let config = ScanConfig::configure(&mut b, &format!("{name}/scan"), step.output.len(), rows)?;
                let t = config.table.clone();
                (StepCircuit::Scan { table: table.clone(), config }, Some(t))
            }
            Op::Filter { input: i, column, cmp, rhs } => {
                let c = FilterConfig::configure(&mut b, &format!("{name}/filter"), &input(&tables, *i)?, *column, *cmp, *rhs)?;
                let t = c.out.clone();
                (StepCircuit::Filter(c), Some(t))
            }
            Op::Join { left, right, left_key, right_key, mode } => {
                let (l, r) = (input(&tables, *left)?, input(&tables, *right)?);
                let c = JoinConfig::configure(&mut b, &format!("{name}/join"), &l, &r, *left_key, *right_key, *mode)?;
                let t = c.out.clone();
                (StepCircuit::Join(c), Some(t))
            }
            Op::GroupBy { input: i, keys, ordered_by } => {
                let aggs: Vec<AggregateSpec> = plan
                    .aggregates_of(idx)
                    .into_iter()
                    .map(|a| match plan.steps[a].op {
                        Op::Aggregate { func, arg, .. } => AggregateSpec { func, arg },
                        _ => unreachable!("aggregates_of returns Aggregate steps"),
                    })
                    .collect();
                let c = GroupByConfig::configure(&mut b, &format!("{name}/group"), &input(&tables, *i)?, keys, *ordered_by, &aggs)?;
                let t = if aggs.is_empty() { Some(c.out.clone()) } else { None };
                (StepCircuit::GroupBy(c), t)
            }
            Op::Aggregate { .. } => {
                let group = plan.group_of(idx);
                let last = *plan.aggregates_of(group).last().expect("chain contains this step");
                let t = match (&steps[group], last == idx) {
                    (StepCircuit::GroupBy(g), true) => Some(g.out.clone()),
                    _ => None,
                };
                (StepCircuit::Aggregate, t)
            }
            Op::Sort { input: i, keys } => {
                let spec: Vec<SortSpec> =
                    keys.iter().map(|k| SortSpec { column: k.column, descending: k.descending, bits: ATTR_BITS }).collect();
                let c = SortConfig::configure(&mut b, &format!("{name}/sort"), &input(&tables, *i)?, &spec)?;
                let t = c.out.clone();
                (StepCircuit::Sort(c), Some(t))
            }
            Op::Project { input: i, columns } => {
                let c = ProjectConfig::configure(&mut b, &format!("{name}/project"), &input(&tables, *i)?, columns)?;
                let t = c.out.clone();
                (StepCircuit::Project(c), Some(t))
            }
            Op::SetOp { left, right, kind } => {
                let (l, r) = (input(&tables, *left)?, input(&tables, *right)?);
                let c = SetOpConfig::configure(&mut b, &format!("{name}/setop"), &l, &r, *kind)?;
                let t = c.out.clone();
                (StepCircuit::SetOp(c), Some(t))
            }
        };
        steps.push(circuit);
        tables.push(table);
    }
    let out = input(&tables, plan.result())?;
    let names = &plan.steps[plan.result()].output;
    let valid = b.cs.instance("out/valid", out.rows)?;
    let cols = names
        .iter()
        .map(|n| b.cs.instance(&format!("out/{n}"), out.rows))
        .collect::<Result<Vec<_>>>()?;
    let instance = TableRef { valid, cols, rows: out.rows };
    for (src, dst) in out.columns().into_iter().zip(instance.columns()) {
        for r in 0..out.rows {
            b.cs.copy(Cell::new(src, r), Cell::new(dst, r))?;
        }
    }
    let cs = b.finish(MIN_ROWS)?;
    Ok(CompiledQuery { plan: plan.clone(), budgets: budgets.clone(), cs, steps, tables, instance })
}
