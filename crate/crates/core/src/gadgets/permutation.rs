use std::collections::HashMap;

use super::{eval_at, CircuitBuilder};
use crate::circuit::{Assignment, ColumnId, ColumnRole, Expr, GrandProduct};
use crate::field::PrimeField;
use crate::{Error, Result};

/// Adds `z[0] = z[len] = 1` and the running-product step
/// `z[i+1] * den(i) = z[i] * num(i)` on rows `0..len`.
fn grand_product<F: PrimeField>(
    b: &mut CircuitBuilder<F>,
    name: &str,
    numerator: Expr<F>,
    denominator: Expr<F>,
    len: usize,
) -> Result<ColumnId> {
    let z = b.cs.advice_late(&format!("{name}/z"), len + 1)?;
    let q_z = b.cs.selector(&format!("{name}/q_z"), 0..len)?;
    let mut ends = vec![F::zero(); len + 1];
    ends[0] = F::one();
    ends[len] = F::one();
    let q_ends = b.cs.fixed(&format!("{name}/q_z_ends"), ColumnRole::Selector, ends)?;
    b.cs.gate(
        &format!("{name}/z"),
        q_z,
        vec![z.next() * denominator.clone() - z.cur() * numerator.clone()],
    )?;
    b.cs.gate(&format!("{name}/z_ends"), q_ends, vec![z.cur() - Expr::one()])?;
    b.cs.add_grand_product(GrandProduct { name: name.to_string(), z, numerator, denominator, rows: len })?;
    Ok(z)
}

/// Shows every value of `p` occurs in `q` over the first `len` rows, by
/// exhibiting a sorted permutation `p'` of `p` and an aligned permutation
/// `q'` of `q` with `p'_0 = q'_0` and
/// `(p'_i - q'_i)(p'_i - p'_{i-1}) = 0` for `1 <= i < len`.
#[derive(Clone, Debug)]
pub struct SubsetConfig<F> {
    pub p_sorted: ColumnId,
    pub q_aligned: ColumnId,
    pub z: ColumnId,
    p: Expr<F>,
    q: Expr<F>,
    len: usize,
}

impl<F: PrimeField> SubsetConfig<F> {
    /// `p` and `q` must be degree-1 expressions over current-row cells.
    pub fn configure(b: &mut CircuitBuilder<F>, name: &str, p: Expr<F>, q: Expr<F>, len: usize) -> Result<Self> {
        let ch = b.challenges()?;
        let p_sorted = b.cs.advice(&format!("{name}/p_sorted"), ColumnRole::Internal, len)?;
        let q_aligned = b.cs.advice(&format!("{name}/q_aligned"), ColumnRole::Internal, len)?;
        let q_first = b.cs.selector(&format!("{name}/q_first"), 0..len.min(1))?;
        let q_rest = b.cs.selector(&format!("{name}/q_rest"), len.min(1)..len)?;
        b.cs.gate(&format!("{name}/first"), q_first, vec![p_sorted.cur() - q_aligned.cur()])?;
        b.cs.gate(
            &format!("{name}/adjacent"),
            q_rest,
            vec![(p_sorted.cur() - q_aligned.cur()) * (p_sorted.cur() - p_sorted.prev())],
        )?;
        let (alpha, beta) = (ch.alpha.expr(), ch.beta.expr());
        let num = (p.clone() + alpha.clone()) * (q.clone() + beta.clone());
        let den = (p_sorted.cur() + alpha) * (q_aligned.cur() + beta);
        let z = grand_product(b, name, num, den, len)?;
        Ok(SubsetConfig { p_sorted, q_aligned, z, p, q, len })
    }

    /// Fills `p'` and `q'`; fails with `WitnessInfeasible` when some value
    /// of `p` is missing from `q`.
    pub fn assign(&self, asg: &mut Assignment<F>) -> Result<()> {
        if self.assign_unchecked(asg)? {
            Ok(())
        } else {
            Err(Error::WitnessInfeasible("subset argument: value of P not found in Q".into()))
        }
    }

    /// Best-effort fill that always writes a witness. Returns whether it is
    /// honest (every value of `p` found in `q`).
    pub fn assign_unchecked(&self, asg: &mut Assignment<F>) -> Result<bool> {
        let mut p: Vec<F> = (0..self.len).map(|r| eval_at(asg, &self.p, r)).collect();
        let q: Vec<F> = (0..self.len).map(|r| eval_at(asg, &self.q, r)).collect();
        p.sort();
        let mut remaining: HashMap<F, usize> = HashMap::new();
        for v in &q {
            *remaining.entry(*v).or_default() += 1;
        }
        let mut aligned: Vec<Option<F>> = vec![None; self.len];
        let mut feasible = true;
        for i in 0..self.len {
            if i > 0 && p[i] == p[i - 1] {
                continue;
            }
            match remaining.get_mut(&p[i]) {
                Some(c) if *c > 0 => {
                    *c -= 1;
                    aligned[i] = Some(p[i]);
                }
                _ => feasible = false,
            }
        }
        let mut leftover: Vec<F> = remaining
            .into_iter()
            .flat_map(|(v, c)| std::iter::repeat(v).take(c))
            .collect();
        leftover.sort();
        let mut leftover = leftover.into_iter();
        for (row, slot) in aligned.into_iter().enumerate() {
            let v = match slot {
                Some(v) => v,
                None => leftover.next().ok_or_else(|| Error::InternalInconsistency("subset alignment".into()))?,
            };
            asg.set(self.q_aligned, row, v)?;
            asg.set(self.p_sorted, row, p[row])?;
        }
        Ok(feasible)
    }
}

/// Shows the `permuted` row tuples are a permutation of the `original` row
/// tuples over the first `len` rows. Tuples are folded with powers of
/// gamma, then `z[i+1] = z[i] * (permuted_i + alpha) / (original_i + alpha)`.
#[derive(Clone, Debug)]
pub struct ShuffleConfig {
    pub z: ColumnId,
}

impl ShuffleConfig {
    pub fn configure<F: PrimeField>(
        b: &mut CircuitBuilder<F>,
        name: &str,
        original: &[Expr<F>],
        permuted: &[Expr<F>],
        len: usize,
    ) -> Result<Self> {
        if original.len() != permuted.len() {
            return Err(Error::ShapeMismatch(format!(
                "shuffle `{name}`: {} original columns vs {} permuted",
                original.len(),
                permuted.len()
            )));
        }
        let ch = b.challenges()?;
        let gamma = ch.gamma.expr();
        let den = Expr::linear_combination(original, &gamma) + ch.alpha.expr();
        let num = Expr::linear_combination(permuted, &gamma) + ch.alpha.expr();
        let z = grand_product(b, name, num, den, len)?;
        Ok(ShuffleConfig { z })
    }
}
