//! Logical plans: a canonical, dataflow-ordered list of gate-level steps.

use serde::{Deserialize, Serialize};

use super::parser::{
    parse_sql, AggArgAst, AggFunc, ColRef, CmpOp, ItemExpr, Operand, PredicateAst, Query, Select, SetOpKind,
};
use crate::data::{parse_scaled, Schema};
use crate::{Error, Result};

/// Composite sort keys are limited to three 64-bit attributes.
pub const MAX_KEY_COLUMNS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinMode {
    /// The right key is unique: every left row has at most one partner.
    Pkfk,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterRhs {
    Literal { value: u64 },
    Column { index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggArg {
    Star,
    Column { index: usize },
    Product { left: usize, right: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortKey {
    pub column: usize,
    pub descending: bool,
}

/// Column indices refer to the output columns of the step's input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Scan { table: String },
    Filter { input: usize, column: usize, cmp: CmpOp, rhs: FilterRhs },
    /// Output is the left columns followed by the right columns; in pkfk
    /// mode the right key is unique.
    Join { left: usize, right: usize, left_key: usize, right_key: usize, mode: JoinMode },
    /// Output is the key columns. `ordered_by` is the single MIN/MAX
    /// argument column, used as the last sort key inside each group.
    GroupBy { input: usize, keys: Vec<usize>, ordered_by: Option<usize> },
    /// `input` is the GroupBy step or the preceding Aggregate step; `arg`
    /// indexes the GroupBy's input. Output appends one column.
    Aggregate { input: usize, func: AggFunc, arg: AggArg },
    Sort { input: usize, keys: Vec<SortKey> },
    Project { input: usize, columns: Vec<usize> },
    SetOp { left: usize, right: usize, kind: SetOpKind },
}

impl Op {
    pub fn inputs(&self) -> Vec<usize> {
        match self {
            Op::Scan { .. } => vec![],
            Op::Filter { input, .. }
            | Op::GroupBy { input, .. }
            | Op::Aggregate { input, .. }
            | Op::Sort { input, .. }
            | Op::Project { input, .. } => vec![*input],
            Op::Join { left, right, .. } | Op::SetOp { left, right, .. } => vec![*left, *right],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    #[serde(flatten)]
    pub op: Op,
    pub output: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub steps: Vec<PlanStep>,
}

impl QueryPlan {
    /// Index of the step producing the query result.
    pub fn result(&self) -> usize {
        self.steps.len() - 1
    }

    /// Index of the GroupBy step an Aggregate chain hangs off.
    pub fn group_of(&self, mut step: usize) -> usize {
        while let Op::Aggregate { input, .. } = self.steps[step].op {
            step = input;
        }
        step
    }

    /// The Aggregate steps of a GroupBy, in order.
    pub fn aggregates_of(&self, group: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = group;
        while let Some(next) = self
            .steps
            .iter()
            .position(|s| matches!(s.op, Op::Aggregate { input, .. } if input == cur))
        {
            out.push(next);
            cur = next;
        }
        out
    }
}

/// One intermediate relation during planning.
#[derive(Clone, Debug)]
struct Rel {
    step: usize,
    /// Qualified `alias.column` names, or aggregate labels.
    names: Vec<String>,
    scales: Vec<u32>,
    unique: Vec<bool>,
}

impl Rel {
    fn resolve(&self, c: &ColRef) -> Result<usize> {
        let hits: Vec<usize> = (0..self.names.len())
            .filter(|&i| {
                let n = &self.names[i];
                match &c.table {
                    Some(t) => n.eq_ignore_ascii_case(&format!("{t}.{}", c.column)),
                    None => {
                        n.eq_ignore_ascii_case(&c.column)
                            || n.rsplit_once('.').is_some_and(|(_, col)| col.eq_ignore_ascii_case(&c.column))
                    }
                }
            })
            .collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(Error::UnknownColumn(display_col(c))),
            _ => Err(Error::Schema(format!("ambiguous column `{}`", display_col(c)))),
        }
    }
}

fn display_col(c: &ColRef) -> String {
    match &c.table {
        Some(t) => format!("{t}.{}", c.column),
        None => c.column.clone(),
    }
}

fn scale_literal(lit: &str, scale: u32) -> Result<u64> {
    parse_scaled(lit, scale).map_err(|_| {
        Error::InvalidData(format!("literal {lit} does not fit a 64-bit value with {scale} decimals"))
    })
}

struct Planner<'a> {
    schema: &'a Schema,
    steps: Vec<PlanStep>,
}

impl Planner<'_> {
    fn push(&mut self, op: Op, output: Vec<String>) -> usize {
        self.steps.push(PlanStep { op, output });
        self.steps.len() - 1
    }

    fn filter(&mut self, rel: &mut Rel, column: usize, cmp: CmpOp, rhs: FilterRhs) {
        rel.step = self.push(Op::Filter { input: rel.step, column, cmp, rhs }, rel.names.clone());
    }

    /// Applies `col op literal` or same-relation `col op col`.
    fn apply_local(&mut self, rel: &mut Rel, p: &PredicateAst) -> Result<()> {
        match (&p.lhs, &p.rhs) {
            (Operand::Column(a), Operand::Column(b)) => {
                let (i, j) = (rel.resolve(a)?, rel.resolve(b)?);
                if rel.scales[i] != rel.scales[j] {
                    return Err(Error::UnsupportedFeature(format!(
                        "comparing columns of different scales: {} and {}",
                        display_col(a),
                        display_col(b)
                    )));
                }
                self.filter(rel, i, p.op, FilterRhs::Column { index: j });
            }
            (Operand::Column(a), Operand::Literal(l)) => {
                let i = rel.resolve(a)?;
                let value = scale_literal(l, rel.scales[i])?;
                self.filter(rel, i, p.op, FilterRhs::Literal { value });
            }
            (Operand::Literal(l), Operand::Column(a)) => {
                let i = rel.resolve(a)?;
                let value = scale_literal(l, rel.scales[i])?;
                self.filter(rel, i, p.op.flip(), FilterRhs::Literal { value });
            }
            (Operand::Literal(_), Operand::Literal(_)) => {
                return Err(Error::UnsupportedFeature("predicates without columns".into()));
            }
        }
        Ok(())
    }

    fn scan(&mut self, table: &str, alias: &str) -> Result<Rel> {
        let t = self.schema.table(table).ok_or_else(|| Error::UnknownColumn(format!("table {table}")))?;
        let names: Vec<String> = t.columns.iter().map(|c| format!("{alias}.{}", c.name)).collect();
        let step = self.push(Op::Scan { table: t.name.clone() }, names.clone());
        Ok(Rel {
            step,
            scales: t.columns.iter().map(|c| c.scale).collect(),
            unique: t.columns.iter().map(|c| t.primary_key.as_ref().is_some_and(|k| k.eq_ignore_ascii_case(&c.name))).collect(),
            names,
        })
    }

    fn join(&mut self, cur: Rel, new: Rel, cur_key: usize, new_key: usize) -> Result<Rel> {
        if cur.scales[cur_key] != new.scales[new_key] {
            return Err(Error::UnsupportedFeature("join keys of different scales".into()));
        }
        let (fk, pk, fk_key, pk_key, mode) = if new.unique[new_key] {
            (cur, new, cur_key, new_key, JoinMode::Pkfk)
        } else if cur.unique[cur_key] {
            (new, cur, new_key, cur_key, JoinMode::Pkfk)
        } else {
            (cur, new, cur_key, new_key, JoinMode::General)
        };
        let names: Vec<String> = fk.names.iter().chain(&pk.names).cloned().collect();
        let keep_pk_unique = mode == JoinMode::Pkfk && fk.unique[fk_key];
        let unique = match mode {
            JoinMode::Pkfk => fk.unique.iter().copied().chain(pk.unique.iter().map(|&u| u && keep_pk_unique)).collect(),
            JoinMode::General => vec![false; names.len()],
        };
        let step = self.push(
            Op::Join { left: fk.step, right: pk.step, left_key: fk_key, right_key: pk_key, mode },
            names.clone(),
        );
        Ok(Rel { step, names, scales: fk.scales.iter().chain(&pk.scales).copied().collect(), unique })
    }

    fn select(&mut self, s: &Select) -> Result<Rel> {
        let aliases: Vec<String> = s.from.iter().map(|f| f.alias.clone().unwrap_or_else(|| f.table.clone())).collect();
        for (i, a) in aliases.iter().enumerate() {
            if aliases[..i].iter().any(|b| b.eq_ignore_ascii_case(a)) {
                return Err(Error::Schema(format!("table alias `{a}` used twice")));
            }
        }
        let mut rels: Vec<Rel> =
            s.from.iter().zip(&aliases).map(|(f, a)| self.scan(&f.table, a)).collect::<Result<_>>()?;

        // Which FROM items a predicate touches.
        let owner = |rels: &[Rel], c: &ColRef| -> Result<usize> {
            let hits: Vec<usize> = (0..rels.len()).filter(|&i| rels[i].resolve(c).is_ok()).collect();
            match hits.as_slice() {
                [i] => Ok(*i),
                [] => Err(Error::UnknownColumn(display_col(c))),
                _ => Err(Error::Schema(format!("ambiguous column `{}`", display_col(c)))),
            }
        };
        let mut deferred: Vec<(usize, usize, &PredicateAst)> = Vec::new();
        let mut pushed = vec![Vec::new(); rels.len()];
        for p in &s.predicates {
            match (&p.lhs, &p.rhs) {
                (Operand::Column(a), Operand::Column(b)) => {
                    let (i, j) = (owner(&rels, a)?, owner(&rels, b)?);
                    if i == j {
                        pushed[i].push(p);
                    } else {
                        deferred.push((i, j, p));
                    }
                }
                (Operand::Column(a), _) | (_, Operand::Column(a)) => pushed[owner(&rels, a)?].push(p),
                _ => return Err(Error::UnsupportedFeature("predicates without columns".into())),
            }
        }
        for (rel, preds) in rels.iter_mut().zip(&pushed) {
            for p in preds {
                self.apply_local(rel, p)?;
            }
        }

        let mut rels = rels.into_iter();
        let mut cur = rels.next().expect("FROM has one table");
        let mut joined = vec![0usize];
        for (k, new) in rels.enumerate() {
            let k = k + 1;
            let link = deferred.iter().position(|(i, j, p)| {
                p.op == CmpOp::Eq && ((joined.contains(i) && *j == k) || (joined.contains(j) && *i == k))
            });
            let Some(link) = link else {
                return Err(Error::UnsupportedFeature(format!("cross join with `{}`", aliases[k])));
            };
            let (i, _, p) = deferred.remove(link);
            let (Operand::Column(a), Operand::Column(b)) = (&p.lhs, &p.rhs) else { unreachable!() };
            let (cur_col, new_col) = if joined.contains(&i) { (a, b) } else { (b, a) };
            let (ck, nk) = (cur.resolve(cur_col)?, new.resolve(new_col)?);
            cur = self.join(cur, new, ck, nk)?;
            joined.push(k);
        }
        for (_, _, p) in deferred {
            self.apply_local(&mut cur, p)?;
        }

        let items = s.items.clone();
        let has_agg = items
            .as_ref()
            .is_some_and(|v| v.iter().any(|it| matches!(it.expr, ItemExpr::Agg(..))));
        // Columns of `cur` addressed by the final projection, after grouping.
        let mut labels: Vec<Option<String>> = Vec::new();
        let mut item_cols: Vec<usize> = Vec::new();
        if has_agg || !s.group_by.is_empty() {
            let keys: Vec<usize> = s.group_by.iter().map(|c| cur.resolve(c)).collect::<Result<_>>()?;
            let items = items.ok_or_else(|| Error::UnsupportedFeature("SELECT * with GROUP BY".into()))?;
            let mut minmax: Option<usize> = None;
            let mut aggs: Vec<(AggFunc, AggArg, String, u32)> = Vec::new();
            for it in &items {
                match &it.expr {
                    ItemExpr::Column(c) => {
                        let i = cur.resolve(c)?;
                        let pos = keys.iter().position(|&k| k == i).ok_or_else(|| {
                            Error::Schema(format!("`{}` must appear in GROUP BY", display_col(c)))
                        })?;
                        item_cols.push(pos);
                        labels.push(Some(it.alias.clone().unwrap_or_else(|| c.column.clone())));
                    }
                    ItemExpr::Agg(f, arg) => {
                        let (arg, scale, text) = match arg {
                            AggArgAst::Star => (AggArg::Star, 0, "*".to_string()),
                            AggArgAst::Column(c) => {
                                let i = cur.resolve(c)?;
                                (AggArg::Column { index: i }, cur.scales[i], display_col(c))
                            }
                            AggArgAst::Product(a, b) => {
                                let (i, j) = (cur.resolve(a)?, cur.resolve(b)?);
                                let text = format!("{}*{}", display_col(a), display_col(b));
                                (AggArg::Product { left: i, right: j }, cur.scales[i] + cur.scales[j], text)
                            }
                        };
                        if matches!(f, AggFunc::Min | AggFunc::Max) {
                            let AggArg::Column { index } = arg else {
                                return Err(Error::UnsupportedFeature("MIN/MAX over expressions".into()));
                            };
                            if minmax.is_some_and(|m| m != index) {
                                return Err(Error::UnsupportedFeature("MIN/MAX over more than one column".into()));
                            }
                            minmax = Some(index);
                        }
                        let scale = if *f == AggFunc::Count { 0 } else { scale };
                        let name = it.alias.clone().unwrap_or_else(|| format!("{f:?}({text})").to_uppercase());
                        item_cols.push(keys.len() + aggs.len());
                        labels.push(Some(name.clone()));
                        aggs.push((*f, arg, name, scale));
                    }
                }
            }
            if keys.len() + usize::from(minmax.is_some()) > MAX_KEY_COLUMNS {
                return Err(Error::UnsupportedFeature(format!(
                    "more than {MAX_KEY_COLUMNS} grouping and ordering columns"
                )));
            }
            let mut names: Vec<String> = keys.iter().map(|&k| cur.names[k].clone()).collect();
            let mut scales: Vec<u32> = keys.iter().map(|&k| cur.scales[k]).collect();
            let mut step = self.push(Op::GroupBy { input: cur.step, keys: keys.clone(), ordered_by: minmax }, names.clone());
            for (func, arg, name, scale) in aggs {
                names.push(name);
                scales.push(scale);
                step = self.push(Op::Aggregate { input: step, func, arg }, names.clone());
            }
            let mut unique = vec![false; names.len()];
            if keys.len() == 1 {
                unique[0] = true;
            }
            cur = Rel { step, names, scales, unique };
        } else {
            match &items {
                None => {
                    item_cols = (0..cur.names.len()).collect();
                    labels = vec![None; cur.names.len()];
                }
                Some(items) => {
                    for it in items {
                        let ItemExpr::Column(c) = &it.expr else { unreachable!() };
                        item_cols.push(cur.resolve(c)?);
                        labels.push(Some(it.alias.clone().unwrap_or_else(|| c.column.clone())));
                    }
                }
            }
        }

        if !s.order_by.is_empty() {
            if s.order_by.len() > MAX_KEY_COLUMNS {
                return Err(Error::UnsupportedFeature(format!("more than {MAX_KEY_COLUMNS} ORDER BY keys")));
            }
            let mut keys = Vec::new();
            for (c, desc) in &s.order_by {
                let by_alias = (c.table.is_none())
                    .then(|| labels.iter().position(|l| l.as_ref().is_some_and(|l| l.eq_ignore_ascii_case(&c.column))))
                    .flatten();
                let column = match by_alias {
                    Some(k) => item_cols[k],
                    None => cur.resolve(c)?,
                };
                keys.push(SortKey { column, descending: *desc });
            }
            cur.step = self.push(Op::Sort { input: cur.step, keys }, cur.names.clone());
        }

        let output: Vec<String> = item_cols
            .iter()
            .zip(&labels)
            .map(|(&i, l)| l.clone().unwrap_or_else(|| cur.names[i].clone()))
            .collect();
        let step = self.push(Op::Project { input: cur.step, columns: item_cols.clone() }, output.clone());
        Ok(Rel {
            step,
            scales: item_cols.iter().map(|&i| cur.scales[i]).collect(),
            unique: item_cols.iter().map(|&i| cur.unique[i]).collect(),
            names: output,
        })
    }
}

/// Parses `sql` and plans it against `schema`.
pub fn parse(sql: &str, schema: &Schema) -> Result<QueryPlan> {
    plan(&parse_sql(sql)?, schema)
}

pub fn plan(q: &Query, schema: &Schema) -> Result<QueryPlan> {
    let mut p = Planner { schema, steps: Vec::new() };
    match q {
        Query::Select(s) => {
            p.select(s)?;
        }
        Query::SetOp { kind, left, right } => {
            let l = p.select(left)?;
            let r = p.select(right)?;
            if l.names.len() != r.names.len() {
                return Err(Error::Schema(format!(
                    "set operation over {} and {} columns",
                    l.names.len(),
                    r.names.len()
                )));
            }
            if l.names.len() > MAX_KEY_COLUMNS {
                return Err(Error::UnsupportedFeature(format!("set operations over more than {MAX_KEY_COLUMNS} columns")));
            }
            if l.scales != r.scales {
                return Err(Error::Schema("set operation over columns of different scales".into()));
            }
            let output = match kind {
                SetOpKind::Union | SetOpKind::Intersect => l.names.clone(),
                SetOpKind::Equality | SetOpKind::Disjoint => vec!["holds".to_string()],
            };
            p.push(Op::SetOp { left: l.step, right: r.step, kind: *kind }, output);
        }
    }
    Ok(QueryPlan { steps: p.steps })
}
