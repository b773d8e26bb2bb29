use super::{bit, composite, eval_rows, KeyPart, SortConfig, SortSpec, TableRef, ATTR_BITS};
use crate::circuit::{not, Assignment, ColumnId, ColumnRole, Expr};
use crate::field::PrimeField;
use crate::gadgets::{
    rotate, AccumulatorConfig, AccumulatorKind, CircuitBuilder, IsZeroConfig, LessThanConfig, U8RangeCheckConfig,
};
use crate::sql::{AggArg, AggFunc};
use crate::{Error, Result};

/// Boundary flags of runs of equal `key` over sorted rows:
/// `start_i = [key_i != key_{i-1}]` (row 0 always starts) and
/// `end_i = start_{i+1}` with the last row always ending.
#[derive(Clone, Debug)]
pub(super) struct Segments<F> {
    pub prev_key: ColumnId,
    pub same: IsZeroConfig<F>,
    pub start: ColumnId,
    pub end: ColumnId,
    key: Expr<F>,
    rows: usize,
}

impl<F: PrimeField> Segments<F> {
    pub fn configure(b: &mut CircuitBuilder<F>, name: &str, key: Expr<F>, rows: usize) -> Result<Self> {
        let prev_key = b.cs.advice(&format!("{name}/prev_key"), ColumnRole::Internal, rows)?;
        let q_first = b.cs.selector(&format!("{name}/q_first"), 0..1)?;
        let q_rest = b.cs.selector(&format!("{name}/q_rest"), 1..rows)?;
        b.cs.gate(&format!("{name}/prev_first"), q_first, vec![prev_key.cur() - key.clone() - Expr::one()])?;
        b.cs.gate(&format!("{name}/prev"), q_rest, vec![prev_key.cur() - rotate(&key, -1)])?;
        let same = IsZeroConfig::configure(b, &format!("{name}/same"), key.clone(), prev_key.cur(), rows)?;
        let start = b.cs.advice(&format!("{name}/start"), ColumnRole::Internal, rows)?;
        let end = b.cs.advice(&format!("{name}/end"), ColumnRole::Internal, rows)?;
        b.cs.gate(&format!("{name}/start"), same.selector, vec![start.cur() - not(same.flag())])?;
        let q_inner = b.cs.selector(&format!("{name}/q_inner"), 0..rows - 1)?;
        let q_last = b.cs.selector(&format!("{name}/q_last"), rows - 1..rows)?;
        b.cs.gate(&format!("{name}/end"), q_inner, vec![end.cur() - start.next()])?;
        b.cs.gate(&format!("{name}/end_last"), q_last, vec![end.cur() - Expr::one()])?;
        Ok(Segments { prev_key, same, start, end, key, rows })
    }

    pub fn assign(&self, asg: &mut Assignment<F>) -> Result<()> {
        let keys = eval_rows(asg, &self.key, self.rows);
        for r in 0..self.rows {
            let pk = if r == 0 { keys[0] + F::one() } else { keys[r - 1] };
            asg.set(self.prev_key, r, pk)?;
        }
        self.same.assign(asg)?;
        for r in 0..self.rows {
            let start = r == 0 || keys[r] != keys[r - 1];
            asg.set(self.start, r, bit(start))?;
        }
        for r in 0..self.rows {
            let end = r + 1 == self.rows || keys[r] != keys[r + 1];
            asg.set(self.end, r, bit(end))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AggregateSpec {
    pub func: AggFunc,
    pub arg: AggArg,
}

#[derive(Clone, Debug)]
enum AggCircuit<F> {
    /// SUM, COUNT and MIN: the running value at the group's last row.
    Running(AccumulatorConfig<F>),
    /// MAX: the group is sorted ascending on the argument, so its last row.
    Last(Expr<F>),
    /// AVG: `sum = q * count + r` with `0 <= r < count` and `q < 2^64`.
    Average {
        sum: AccumulatorConfig<F>,
        count: AccumulatorConfig<F>,
        q: ColumnId,
        r: ColumnId,
        rem: LessThanConfig<F>,
        q_range: U8RangeCheckConfig<F>,
    },
}

impl<F: PrimeField> AggCircuit<F> {
    fn value(&self) -> Expr<F> {
        match self {
            AggCircuit::Running(acc) => acc.acc.cur(),
            AggCircuit::Last(e) => e.clone(),
            AggCircuit::Average { q, .. } => q.cur(),
        }
    }
}

/// Groups rows by `keys` and evaluates aggregates per group.
///
/// The input is sorted by the keys (then by the MIN/MAX argument), runs of
/// equal keys are delimited, and each aggregate is read at the run's last
/// row. Output rows stay at those positions: valid exactly at the last row
/// of each valid group, all other rows zeroed. Columns are the keys followed
/// by the aggregates.
#[derive(Clone, Debug)]
pub struct GroupByConfig<F> {
    pub out: TableRef,
    pub sort: SortConfig<F>,
    segments: Segments<F>,
    products: Vec<(ColumnId, usize, usize)>,
    aggs: Vec<AggCircuit<F>>,
    keys: Vec<usize>,
}

impl<F: PrimeField> GroupByConfig<F> {
    pub fn configure(
        b: &mut CircuitBuilder<F>,
        name: &str,
        input: &TableRef,
        keys: &[usize],
        ordered_by: Option<usize>,
        aggs: &[AggregateSpec],
    ) -> Result<Self> {
        let rows = input.rows;
        let mut spec: Vec<SortSpec> = keys.iter().map(|&k| SortSpec::asc(k)).collect();
        spec.extend(ordered_by.map(SortSpec::asc));
        let sort = SortConfig::configure(b, &format!("{name}/sort"), input, &spec)?;
        let sd = sort.out.clone();
        let parts: Vec<KeyPart<F>> = keys.iter().map(|&k| KeyPart::asc(sd.cols[k].cur())).collect();
        let (group_key, _) = composite(&sd.valid.cur(), &parts);
        let segments = Segments::configure(b, &format!("{name}/seg"), group_key, rows)?;
        let reset = segments.start.cur();
        let q_all = segments.same.selector;

        let mut products = Vec::new();
        let mut circuits = Vec::with_capacity(aggs.len());
        for (i, a) in aggs.iter().enumerate() {
            let aname = format!("{name}/agg{i}");
            let value = match a.arg {
                AggArg::Star => Expr::one(),
                AggArg::Column { index } => sd.cols[index].cur(),
                AggArg::Product { left, right } => {
                    let w = b.cs.advice(&format!("{aname}/product"), ColumnRole::Internal, rows)?;
                    b.cs.gate(&format!("{aname}/product"), q_all, vec![w.cur() - sd.cols[left].cur() * sd.cols[right].cur()])?;
                    products.push((w, left, right));
                    w.cur()
                }
            };
            let acc = |b: &mut CircuitBuilder<F>, n: &str, v: Expr<F>, kind| {
                AccumulatorConfig::configure(b, &format!("{aname}/{n}"), v, reset.clone(), kind, rows)
            };
            let c = match a.func {
                AggFunc::Sum => AggCircuit::Running(acc(b, "sum", value, AccumulatorKind::Sum)?),
                AggFunc::Count => AggCircuit::Running(acc(b, "count", Expr::one(), AccumulatorKind::Sum)?),
                AggFunc::Min => {
                    check_ordered(a.arg, ordered_by)?;
                    AggCircuit::Running(acc(b, "min", value, AccumulatorKind::CarryFirst)?)
                }
                AggFunc::Max => {
                    check_ordered(a.arg, ordered_by)?;
                    AggCircuit::Last(value)
                }
                AggFunc::Avg => {
                    let sum = acc(b, "sum", value, AccumulatorKind::Sum)?;
                    let count = acc(b, "count", Expr::one(), AccumulatorKind::Sum)?;
                    let q = b.cs.advice(&format!("{aname}/quotient"), ColumnRole::Internal, rows)?;
                    let r = b.cs.advice(&format!("{aname}/remainder"), ColumnRole::Internal, rows)?;
                    b.cs.gate(
                        &format!("{aname}/divide"),
                        q_all,
                        vec![sum.acc.cur() - q.cur() * count.acc.cur() - r.cur()],
                    )?;
                    let rem = LessThanConfig::configure(b, &format!("{aname}/rem"), r.cur(), count.acc.cur(), rows, ATTR_BITS)?;
                    b.cs.gate(&format!("{aname}/rem_below"), rem.selector, vec![rem.ge()])?;
                    let q_range = U8RangeCheckConfig::configure(b, &format!("{aname}/q_range"), q.cur(), rows, ATTR_BITS)?;
                    AggCircuit::Average { sum, count, q, r, rem, q_range }
                }
            };
            circuits.push(c);
        }

        let out = TableRef::declare(b, name, keys.len() + aggs.len(), rows, ColumnRole::Internal)?;
        let ov = out.valid.cur();
        let mut cs = vec![ov.clone() - segments.end.cur() * sd.valid.cur()];
        for (j, &k) in keys.iter().enumerate() {
            cs.push(out.cols[j].cur() - ov.clone() * sd.cols[k].cur());
        }
        for (i, c) in circuits.iter().enumerate() {
            cs.push(out.cols[keys.len() + i].cur() - ov.clone() * c.value());
        }
        b.cs.gate(&format!("{name}/emit"), q_all, cs)?;
        Ok(GroupByConfig { out, sort, segments, products, aggs: circuits, keys: keys.to_vec() })
    }

    pub fn assign(&self, asg: &mut Assignment<F>) -> Result<()> {
        self.sort.assign(asg)?;
        self.segments.assign(asg)?;
        let sd = &self.sort.out;
        let rows = sd.rows;
        for &(w, l, r) in &self.products {
            for row in 0..rows {
                let v = asg.get(sd.cols[l], row) * asg.get(sd.cols[r], row);
                asg.set(w, row, v)?;
            }
        }
        for c in &self.aggs {
            match c {
                AggCircuit::Running(acc) => acc.assign(asg)?,
                AggCircuit::Last(_) => {}
                AggCircuit::Average { sum, count, q, r, rem, q_range } => {
                    sum.assign(asg)?;
                    count.assign(asg)?;
                    for row in 0..rows {
                        let s = asg.get(sum.acc, row).to_u128().ok_or_else(|| Error::OutOfRange("AVG sum exceeds 128 bits".into()))?;
                        let n = asg.get(count.acc, row).to_u128().unwrap_or(1).max(1);
                        asg.set(*q, row, F::from_u128(s / n))?;
                        asg.set(*r, row, F::from_u128(s % n))?;
                    }
                    rem.assign_forced(asg, true)?;
                    q_range.assign(asg)?;
                }
            }
        }
        let values: Vec<Vec<F>> = self.aggs.iter().map(|c| eval_rows(asg, &c.value(), rows)).collect();
        let mut out = Vec::with_capacity(rows);
        for row in 0..rows {
            let v = asg.get(self.segments.end, row) * asg.get(sd.valid, row);
            let mut r = vec![v];
            r.extend(self.keys.iter().map(|&k| v * asg.get(sd.cols[k], row)));
            r.extend(values.iter().map(|col| v * col[row]));
            out.push(r);
        }
        self.out.write(asg, &out)
    }
}

fn check_ordered(arg: AggArg, ordered_by: Option<usize>) -> Result<()> {
    match (arg, ordered_by) {
        (AggArg::Column { index }, Some(o)) if index == o => Ok(()),
        _ => Err(Error::UnsupportedFeature("MIN/MAX needs its column as the group's secondary sort key".into())),
    }
}
