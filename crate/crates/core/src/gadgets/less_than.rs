use super::{eval_at, CircuitBuilder, U8RangeCheckConfig};
use crate::circuit::{not, Assignment, ColumnId, ColumnRole, Expr};
use crate::field::PrimeField;
use crate::{Error, Result};

/// Comparison flag `check = [x < t]` for `x, t` in `[0, u)`, `u = 2^bits`.
///
/// Enforces `diff = x - t`, `shifted = diff + check * u` and
/// `0 <= shifted < u`; since `x - t` lies in `(-u, u)`, exactly one value of
/// the boolean `check` satisfies the range.
#[derive(Clone, Debug)]
pub struct LessThanConfig<F> {
    pub check: ColumnId,
    pub diff: ColumnId,
    pub shifted: ColumnId,
    pub range: U8RangeCheckConfig<F>,
    pub selector: ColumnId,
    x: Expr<F>,
    t: Expr<F>,
    rows: usize,
    u: F,
}

impl<F: PrimeField> LessThanConfig<F> {
    /// `x` and `t` must be degree-1 expressions.
    pub fn configure(
        b: &mut CircuitBuilder<F>,
        name: &str,
        x: Expr<F>,
        t: Expr<F>,
        rows: usize,
        bits: u32,
    ) -> Result<Self> {
        let check = b.cs.advice(&format!("{name}/check"), ColumnRole::Internal, rows)?;
        let diff = b.cs.advice(&format!("{name}/diff"), ColumnRole::Internal, rows)?;
        let shifted = b.cs.advice(&format!("{name}/shifted"), ColumnRole::Internal, rows)?;
        let selector = b.cs.selector(&format!("{name}/q"), 0..rows)?;
        let u = F::pow2(bits);
        b.cs.gate(&format!("{name}/bool"), selector, vec![check.cur() * not(check.cur())])?;
        b.cs.gate(&format!("{name}/diff"), selector, vec![x.clone() - t.clone() - diff.cur()])?;
        b.cs.gate(
            &format!("{name}/shift"),
            selector,
            vec![shifted.cur() - diff.cur() - check.cur() * Expr::Constant(u)],
        )?;
        let range = U8RangeCheckConfig::configure(b, &format!("{name}/range"), shifted.cur(), rows, bits)?;
        Ok(LessThanConfig { check, diff, shifted, range, selector, x, t, rows, u })
    }

    /// The flag as an expression; `1` iff `x < t`.
    pub fn lt(&self) -> Expr<F> {
        self.check.cur()
    }

    /// The flag as an expression; `1` iff `x >= t`.
    pub fn ge(&self) -> Expr<F> {
        not(self.check.cur())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn assign(&self, asg: &mut Assignment<F>) -> Result<()> {
        self.fill(asg, None)
    }

    /// Fills the gadget with `check` forced on every row. Cells are always
    /// written; the result is `WitnessInfeasible` when the forced flag is
    /// inconsistent with the inputs.
    pub fn assign_forced(&self, asg: &mut Assignment<F>, check: bool) -> Result<()> {
        self.fill(asg, Some(check))
    }

    fn fill(&self, asg: &mut Assignment<F>, forced: Option<bool>) -> Result<()> {
        for row in 0..self.rows {
            let x = eval_at(asg, &self.x, row);
            let t = eval_at(asg, &self.t, row);
            if forced.is_none() && (x >= self.u || t >= self.u) {
                return Err(Error::OutOfRange(format!("comparison operand at row {row} exceeds the gadget range")));
            }
            let c = forced.unwrap_or(x < t);
            let diff = x - t;
            let shifted = if c { diff + self.u } else { diff };
            asg.set(self.check, row, if c { F::one() } else { F::zero() })?;
            asg.set(self.diff, row, diff)?;
            asg.set(self.shifted, row, shifted)?;
        }
        self.range.assign(asg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{check_satisfied, ConstraintSystem};
    use crate::field::Fr;

    fn circuit(rows: usize) -> (ConstraintSystem<Fr>, ColumnId, ColumnId, LessThanConfig<Fr>) {
        let mut b = CircuitBuilder::<Fr>::new();
        let x = b.cs.advice("x", ColumnRole::Input, rows).unwrap();
        let t = b.cs.advice("t", ColumnRole::Input, rows).unwrap();
        let cfg = LessThanConfig::configure(&mut b, "lt", x.cur(), t.cur(), rows, 4).unwrap();
        (b.finish(256).unwrap(), x, t, cfg)
    }

    #[test]
    fn exhaustive_over_small_domain() {
        let pairs: Vec<(u64, u64)> = (0..16).flat_map(|a| (0..16).map(move |c| (a, c))).collect();
        let (cs, x, t, cfg) = circuit(pairs.len());
        let mut asg = Assignment::new(&cs).unwrap();
        asg.set_u64s(x, &pairs.iter().map(|p| p.0).collect::<Vec<_>>()).unwrap();
        asg.set_u64s(t, &pairs.iter().map(|p| p.1).collect::<Vec<_>>()).unwrap();
        cfg.assign(&mut asg).unwrap();
        assert!(check_satisfied(&cs, &asg).unwrap().is_ok());
        for (row, (a, c)) in pairs.iter().enumerate() {
            assert_eq!(asg.get(cfg.check, row), Fr::from_u64((a < c) as u64), "{a} < {c}");
        }
    }

    #[test]
    fn range_edges() {
        let (cs, x, t, cfg) = circuit(4);
        let mut asg = Assignment::new(&cs).unwrap();
        asg.set_u64s(x, &[0, 15, 0, 15]).unwrap();
        asg.set_u64s(t, &[15, 0, 0, 15]).unwrap();
        cfg.assign(&mut asg).unwrap();
        assert!(check_satisfied(&cs, &asg).unwrap().is_ok());
        assert_eq!(asg.column(cfg.check)[..4], [1u64, 0, 0, 0].map(Fr::from_u64));

        asg.set(x, 0, Fr::from_u64(16)).unwrap();
        assert!(matches!(cfg.assign(&mut asg), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn forcing_the_wrong_flag_is_infeasible_and_rejected() {
        let (cs, x, t, cfg) = circuit(1);
        for (a, c, wrong) in [(5u64, 3u64, true), (3, 5, false), (4, 4, true)] {
            let mut asg = Assignment::new(&cs).unwrap();
            asg.set_u64s(x, &[a]).unwrap();
            asg.set_u64s(t, &[c]).unwrap();
            assert!(matches!(cfg.assign_forced(&mut asg, wrong), Err(Error::WitnessInfeasible(_))));
            assert!(!check_satisfied(&cs, &asg).unwrap().is_ok());
        }
    }

    #[test]
    fn flag_tamper_rejected() {
        let (cs, x, t, cfg) = circuit(16);
        let mut asg = Assignment::new(&cs).unwrap();
        asg.set_u64s(x, &(0..16).collect::<Vec<_>>()).unwrap();
        asg.set_u64s(t, &[7; 16]).unwrap();
        cfg.assign(&mut asg).unwrap();
        for row in 0..16 {
            let mut bad = asg.clone();
            let c = bad.get(cfg.check, row);
            bad.set(cfg.check, row, Fr::from_u64(1) - c).unwrap();
            assert!(!check_satisfied(&cs, &bad).unwrap().is_ok());
        }
    }
}
