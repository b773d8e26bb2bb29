use super::{eval_at, CircuitBuilder};
use crate::circuit::{not, Assignment, ColumnId, ColumnRole, Expr};
use crate::field::PrimeField;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccumulatorKind {
    /// `M_i = reset_i * v_i + (1 - reset_i) * (M_{i-1} + v_i)`
    Sum,
    /// `M_i = reset_i * v_i + (1 - reset_i) * M_{i-1}`; carries the first
    /// value of each segment.
    CarryFirst,
}

/// Segmented running accumulator over `rows` rows.
///
/// Row 0 always starts a segment regardless of `reset`.
#[derive(Clone, Debug)]
pub struct AccumulatorConfig<F> {
    pub acc: ColumnId,
    value: Expr<F>,
    reset: Expr<F>,
    kind: AccumulatorKind,
    rows: usize,
}

impl<F: PrimeField> AccumulatorConfig<F> {
    /// `value` and `reset` must be degree-1 expressions over current-row cells.
    pub fn configure(
        b: &mut CircuitBuilder<F>,
        name: &str,
        value: Expr<F>,
        reset: Expr<F>,
        kind: AccumulatorKind,
        rows: usize,
    ) -> Result<Self> {
        let acc = b.cs.advice(&format!("{name}/acc"), ColumnRole::Internal, rows)?;
        let first = b.cs.selector(&format!("{name}/q_first"), 0..rows.min(1))?;
        let rest = b.cs.selector(&format!("{name}/q_step"), rows.min(1)..rows)?;
        b.cs.gate(&format!("{name}/first"), first, vec![acc.cur() - value.clone()])?;
        let carried = match kind {
            AccumulatorKind::Sum => value.clone(),
            AccumulatorKind::CarryFirst => reset.clone() * value.clone(),
        };
        b.cs.gate(
            &format!("{name}/step"),
            rest,
            vec![acc.cur() - carried - not(reset.clone()) * acc.prev()],
        )?;
        Ok(AccumulatorConfig { acc, value, reset, kind, rows })
    }

    pub fn assign(&self, asg: &mut Assignment<F>) -> Result<()> {
        let mut m = F::zero();
        for row in 0..self.rows {
            let v = eval_at(asg, &self.value, row);
            let reset = row == 0 || !eval_at(asg, &self.reset, row).is_zero();
            m = match (self.kind, reset) {
                (_, true) => v,
                (AccumulatorKind::Sum, false) => m + v,
                (AccumulatorKind::CarryFirst, false) => m,
            };
            asg.set(self.acc, row, m)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::check_satisfied;
    use crate::field::Fr;

    fn run(kind: AccumulatorKind, values: &[u64], resets: &[u64]) -> (Vec<Fr>, bool, Assignment<Fr>, ColumnId) {
        let mut b = CircuitBuilder::<Fr>::new();
        let n = values.len();
        let v = b.cs.advice("v", ColumnRole::Input, n).unwrap();
        let r = b.cs.advice("r", ColumnRole::Input, n).unwrap();
        let cfg = AccumulatorConfig::configure(&mut b, "acc", v.cur(), r.cur(), kind, n).unwrap();
        let cs = b.finish(n).unwrap();
        let mut asg = Assignment::new(&cs).unwrap();
        asg.set_u64s(v, values).unwrap();
        asg.set_u64s(r, resets).unwrap();
        cfg.assign(&mut asg).unwrap();
        let ok = check_satisfied(&cs, &asg).unwrap().is_ok();
        (asg.column(cfg.acc)[..n].to_vec(), ok, asg, cfg.acc)
    }

    fn fr(xs: &[u64]) -> Vec<Fr> {
        xs.iter().map(|&x| Fr::from_u64(x)).collect()
    }

    #[test]
    fn segmented_sum() {
        let (m, ok, _, _) = run(AccumulatorKind::Sum, &[4, 1, 1, 2], &[1, 0, 1, 0]);
        assert!(ok);
        assert_eq!(m, fr(&[4, 5, 1, 3]));
    }

    #[test]
    fn carry_first() {
        let (m, ok, _, _) = run(AccumulatorKind::CarryFirst, &[4, 1, 7, 2], &[1, 0, 1, 0]);
        assert!(ok);
        assert_eq!(m, fr(&[4, 4, 7, 7]));
    }

    #[test]
    fn tampered_sum_fails() {
        let mut b = CircuitBuilder::<Fr>::new();
        let v = b.cs.advice("v", ColumnRole::Input, 4).unwrap();
        let r = b.cs.advice("r", ColumnRole::Input, 4).unwrap();
        let cfg = AccumulatorConfig::configure(&mut b, "acc", v.cur(), r.cur(), AccumulatorKind::Sum, 4).unwrap();
        let cs = b.finish(4).unwrap();
        for row in 0..4 {
            let mut asg = Assignment::new(&cs).unwrap();
            asg.set_u64s(v, &[4, 1, 1, 2]).unwrap();
            asg.set_u64s(r, &[1, 0, 1, 0]).unwrap();
            cfg.assign(&mut asg).unwrap();
            let x = asg.get(cfg.acc, row);
            asg.set(cfg.acc, row, x + Fr::from_u64(1)).unwrap();
            assert!(!check_satisfied(&cs, &asg).unwrap().is_ok(), "row {row}");
        }
    }
}
