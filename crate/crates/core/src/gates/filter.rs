use super::{eval_rows, TableRef, ATTR_BITS};
use crate::circuit::{Assignment, ColumnRole, Expr};
use crate::field::PrimeField;
use crate::gadgets::{CircuitBuilder, IsZeroConfig, LessThanConfig};
use crate::sql::{CmpOp, FilterRhs};
use crate::Result;

#[derive(Clone, Debug)]
enum Predicate<F> {
    Less(LessThanConfig<F>),
    Equal(IsZeroConfig<F>),
}

/// Clears the validity of rows failing `column cmp rhs` and zeroes their
/// attributes; the output keeps the input's row positions.
#[derive(Clone, Debug)]
pub struct FilterConfig<F> {
    pub out: TableRef,
    input: TableRef,
    pred: Predicate<F>,
    keep: Expr<F>,
}

impl<F: PrimeField> FilterConfig<F> {
    pub fn configure(
        b: &mut CircuitBuilder<F>,
        name: &str,
        input: &TableRef,
        column: usize,
        cmp: CmpOp,
        rhs: FilterRhs,
    ) -> Result<Self> {
        let rows = input.rows;
        let x = input.cols[column].cur();
        let y = match rhs {
            FilterRhs::Literal { value } => b.constant_column(&format!("{name}/literal"), F::from_u64(value), rows)?.cur(),
            FilterRhs::Column { index } => input.cols[index].cur(),
        };
        let less = |b: &mut CircuitBuilder<F>, x, y| LessThanConfig::configure(b, &format!("{name}/cmp"), x, y, rows, ATTR_BITS);
        let (pred, keep) = match cmp {
            CmpOp::Lt => {
                let lt = less(b, x, y)?;
                let k = lt.lt();
                (Predicate::Less(lt), k)
            }
            CmpOp::Ge => {
                let lt = less(b, x, y)?;
                let k = lt.ge();
                (Predicate::Less(lt), k)
            }
            CmpOp::Gt => {
                let lt = less(b, y, x)?;
                let k = lt.lt();
                (Predicate::Less(lt), k)
            }
            CmpOp::Le => {
                let lt = less(b, y, x)?;
                let k = lt.ge();
                (Predicate::Less(lt), k)
            }
            CmpOp::Eq => {
                let eq = IsZeroConfig::configure(b, &format!("{name}/eq"), x, y, rows)?;
                let k = eq.flag();
                (Predicate::Equal(eq), k)
            }
        };
        let out = TableRef::declare(b, name, input.cols.len(), rows, ColumnRole::Internal)?;
        let q = b.cs.selector(&format!("{name}/q"), 0..rows)?;
        let mut cs = vec![out.valid.cur() - input.valid.cur() * keep.clone()];
        cs.extend(out.cols.iter().zip(&input.cols).map(|(o, i)| o.cur() - out.valid.cur() * i.cur()));
        b.cs.gate(&format!("{name}/mask"), q, cs)?;
        Ok(FilterConfig { out, input: input.clone(), pred, keep })
    }

    pub fn assign(&self, asg: &mut Assignment<F>) -> Result<()> {
        match &self.pred {
            Predicate::Less(lt) => lt.assign(asg)?,
            Predicate::Equal(eq) => eq.assign(asg)?,
        }
        let keep = eval_rows(asg, &self.keep, self.input.rows);
        let rows: Vec<Vec<F>> = self
            .input
            .read(asg)
            .into_iter()
            .zip(keep)
            .map(|(r, k)| {
                let v = r[0] * k;
                std::iter::once(v).chain(r[1..].iter().map(|x| v * *x)).collect()
            })
            .collect();
        self.out.write(asg, &rows)
    }
}
