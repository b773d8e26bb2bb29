use super::TableRef;
use crate::circuit::{Assignment, ColumnId, ColumnRole, Lookup};
use crate::field::PrimeField;
use crate::gadgets::CircuitBuilder;
use crate::Result;

/// Keeps the listed columns (in list order, repeats allowed). Every input
/// column is masked by a fixed keep flag and the row validity, so dropped
/// columns and dummy rows read as zero; a lookup ties the kept tuples back
/// to the valid input rows.
#[derive(Clone, Debug)]
pub struct ProjectConfig {
    pub out: TableRef,
    masked: Vec<ColumnId>,
    input: TableRef,
}

impl ProjectConfig {
    pub fn configure<F: PrimeField>(b: &mut CircuitBuilder<F>, name: &str, input: &TableRef, columns: &[usize]) -> Result<Self> {
        let rows = input.rows;
        let q = b.cs.selector(&format!("{name}/q"), 0..rows)?;
        let mut masked = Vec::with_capacity(input.cols.len());
        let mut cs = Vec::new();
        for (j, c) in input.cols.iter().enumerate() {
            let keep = if columns.contains(&j) { F::one() } else { F::zero() };
            let m = b.cs.fixed(&format!("{name}/keep{j}"), ColumnRole::Constant, vec![keep; rows])?;
            let o = b.cs.advice(&format!("{name}/c{j}"), ColumnRole::Internal, rows)?;
            cs.push(o.cur() - m.cur() * input.valid.cur() * c.cur());
            masked.push(o);
        }
        b.cs.gate(&format!("{name}/mask"), q, cs)?;
        let kept: Vec<usize> = {
            let mut k = columns.to_vec();
            k.sort_unstable();
            k.dedup();
            k
        };
        let mut inputs = vec![input.valid.cur()];
        inputs.extend(kept.iter().map(|&j| masked[j].cur()));
        let mut table = vec![input.valid];
        table.extend(kept.iter().map(|&j| input.cols[j]));
        b.cs.add_lookup(Lookup {
            name: format!("{name}/source"),
            selector: q,
            condition: Some(input.valid.cur()),
            inputs,
            table,
            table_selector: None,
        })?;
        let out = TableRef { valid: input.valid, cols: columns.iter().map(|&j| masked[j]).collect(), rows };
        Ok(ProjectConfig { out, masked, input: input.clone() })
    }

    pub fn assign<F: PrimeField>(&self, asg: &mut Assignment<F>) -> Result<()> {
        for (j, &o) in self.masked.iter().enumerate() {
            let kept = self.out.cols.contains(&o);
            for r in 0..self.input.rows {
                let v = if kept { asg.get(self.input.valid, r) * asg.get(self.input.cols[j], r) } else { F::zero() };
                asg.set(o, r, v)?;
            }
        }
        Ok(())
    }
}
