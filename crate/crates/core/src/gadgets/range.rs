use super::{eval_at, CircuitBuilder, SubsetConfig};
use crate::circuit::{Assignment, ColumnId, ColumnRole, Expr, Lookup};
use crate::field::PrimeField;
use crate::{Error, Result};

/// Largest supported range `2^bits`; stays below the modulus.
pub const MAX_RANGE_BITS: u32 = 248;

/// Range check `0 <= v < 2^bits` by decomposing `v = sum c_j 2^(8j)` into
/// `ceil(bits / 8)` byte limbs, each looked up in the shared `[0, 255]`
/// table. When `bits` is not a multiple of 8 the top limb `c` is also
/// bounded by looking up `c * 2^(8 - r)`, `r = bits mod 8`.
#[derive(Clone, Debug)]
pub struct U8RangeCheckConfig<F> {
    pub limbs: Vec<ColumnId>,
    pub selector: ColumnId,
    value: Expr<F>,
    rows: usize,
    bits: u32,
}

impl<F: PrimeField> U8RangeCheckConfig<F> {
    pub fn configure(b: &mut CircuitBuilder<F>, name: &str, value: Expr<F>, rows: usize, bits: u32) -> Result<Self> {
        if bits == 0 || bits > MAX_RANGE_BITS {
            return Err(Error::UnsupportedFeature(format!("range check of {bits} bits")));
        }
        let limbs = bits.div_ceil(8) as usize;
        let table = b.u8_table()?;
        let selector = b.cs.selector(&format!("{name}/q"), 0..rows)?;
        let cols = (0..limbs)
            .map(|j| b.cs.advice(&format!("{name}/limb{j}"), ColumnRole::Internal, rows))
            .collect::<Result<Vec<_>>>()?;
        let recomposed = cols
            .iter()
            .enumerate()
            .map(|(j, c)| c.cur() * Expr::Constant(F::pow2(8 * j as u32)))
            .reduce(|a, e| a + e)
            .expect("at least one limb");
        b.cs.gate(&format!("{name}/decompose"), selector, vec![value.clone() - recomposed])?;
        for (j, c) in cols.iter().enumerate() {
            b.cs.add_lookup(Lookup {
                name: format!("{name}/limb{j}"),
                selector,
                condition: None,
                inputs: vec![c.cur()],
                table: vec![table],
                table_selector: None,
            })?;
        }
        if bits % 8 != 0 {
            let top = cols[limbs - 1];
            b.cs.add_lookup(Lookup {
                name: format!("{name}/top"),
                selector,
                condition: None,
                inputs: vec![top.cur() * Expr::Constant(F::pow2(8 - bits % 8))],
                table: vec![table],
                table_selector: None,
            })?;
        }
        Ok(U8RangeCheckConfig { limbs: cols, selector, value, rows, bits })
    }

    pub fn assign(&self, asg: &mut Assignment<F>) -> Result<()> {
        match self.assign_unchecked(asg)? {
            None => Ok(()),
            Some(row) => Err(Error::WitnessInfeasible(format!(
                "value at row {row} exceeds 2^{}",
                self.bits
            ))),
        }
    }

    /// Writes the low bytes of every value; returns the first row whose
    /// value does not fit.
    pub fn assign_unchecked(&self, asg: &mut Assignment<F>) -> Result<Option<usize>> {
        let mut bad = None;
        for row in 0..self.rows {
            let bytes = eval_at(asg, &self.value, row).to_le_bytes();
            let k = self.limbs.len();
            let top_ok = self.bits % 8 == 0 || bytes[k - 1] >> (self.bits % 8) == 0;
            if bad.is_none() && (!top_ok || bytes[k..].iter().any(|&x| x != 0)) {
                bad = Some(row);
            }
            for (j, c) in self.limbs.iter().enumerate() {
                asg.set(*c, row, F::from_u64(bytes[j] as u64))?;
            }
        }
        Ok(bad)
    }
}

/// Range check `0 <= v <= t` for a batch of values through one subset
/// argument against the fixed table `[0, t]`; both sides are padded to
/// `max(count, t + 1)` rows.
#[derive(Clone, Debug)]
pub struct BatchRangeCheckConfig<F> {
    /// Values to check; rows past `count` are padding.
    pub values: ColumnId,
    pub table: ColumnId,
    pub subset: SubsetConfig<F>,
    pub len: usize,
}

impl<F: PrimeField> BatchRangeCheckConfig<F> {
    pub fn configure(b: &mut CircuitBuilder<F>, name: &str, count: usize, t: u64) -> Result<Self> {
        let len = count.max(t as usize + 1);
        let mut entries: Vec<F> = (0..=t).map(F::from_u64).collect();
        entries.resize(len, F::zero());
        let table = b.cs.fixed(&format!("{name}/table"), ColumnRole::Constant, entries)?;
        let values = b.cs.advice(&format!("{name}/values"), ColumnRole::Input, len)?;
        let subset = SubsetConfig::configure(b, name, values.cur(), table.cur(), len)?;
        Ok(BatchRangeCheckConfig { values, table, subset, len })
    }

    pub fn assign(&self, asg: &mut Assignment<F>, values: &[F]) -> Result<()> {
        self.write(asg, values)?;
        self.subset.assign(asg)
    }

    pub fn assign_unchecked(&self, asg: &mut Assignment<F>, values: &[F]) -> Result<bool> {
        self.write(asg, values)?;
        self.subset.assign_unchecked(asg)
    }

    fn write(&self, asg: &mut Assignment<F>, values: &[F]) -> Result<()> {
        if values.len() > self.len {
            return Err(Error::BudgetExceeded { step: "range check".into(), rows: values.len(), budget: self.len });
        }
        for row in 0..self.len {
            asg.set(self.values, row, values.get(row).copied().unwrap_or_else(F::zero))?;
        }
        Ok(())
    }
}
