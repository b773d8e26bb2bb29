use super::{composite, eval_rows, KeyPart, TableRef, ATTR_BITS};
use crate::circuit::{Assignment, ColumnRole, Expr};
use crate::field::PrimeField;
use crate::gadgets::{rotate, CircuitBuilder, LessThanConfig, ShuffleConfig, MAX_RANGE_BITS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SortSpec {
    pub column: usize,
    pub descending: bool,
    /// Values of this column are below `2^bits`.
    pub bits: u32,
}

impl SortSpec {
    pub fn asc(column: usize) -> Self {
        SortSpec { column, descending: false, bits: ATTR_BITS }
    }
}

/// A permutation of the input rows whose composite key is non-decreasing,
/// dummy rows last. Ties keep their input order in the witness, but the
/// circuit does not pin the order among equal keys.
#[derive(Clone, Debug)]
pub struct SortConfig<F> {
    pub out: TableRef,
    /// Composite key over `out`, current row.
    pub key: Expr<F>,
    pub order: Option<LessThanConfig<F>>,
    input: TableRef,
    keys: Vec<SortSpec>,
}

impl<F: PrimeField> SortConfig<F> {
    pub fn configure(b: &mut CircuitBuilder<F>, name: &str, input: &TableRef, keys: &[SortSpec]) -> Result<Self> {
        let rows = input.rows;
        let out = TableRef::declare(b, name, input.cols.len(), rows, ColumnRole::Internal)?;
        ShuffleConfig::configure(b, &format!("{name}/perm"), &input.tuple(), &out.tuple(), rows)?;
        let parts: Vec<KeyPart<F>> = keys
            .iter()
            .map(|k| KeyPart { expr: out.cols[k.column].cur(), bits: k.bits, descending: k.descending })
            .collect();
        let (key, bits) = composite(&out.valid.cur(), &parts);
        if bits > MAX_RANGE_BITS {
            return Err(Error::UnsupportedFeature(format!("sort key of {bits} bits exceeds {MAX_RANGE_BITS}")));
        }
        let order = if rows >= 2 {
            // K_{i+1} < K_i must be false for every adjacent pair
            let lt = LessThanConfig::configure(b, &format!("{name}/order"), rotate(&key, 1), key.clone(), rows - 1, bits)?;
            b.cs.gate(&format!("{name}/sorted"), lt.selector, vec![lt.lt()])?;
            Some(lt)
        } else {
            None
        };
        Ok(SortConfig { out, key, order, input: input.clone(), keys: keys.to_vec() })
    }

    pub fn assign(&self, asg: &mut Assignment<F>) -> Result<()> {
        let rows = self.input.read(asg);
        for (r, row) in rows.iter().enumerate() {
            for k in &self.keys {
                if !row[0].is_zero() && row[1 + k.column] >= F::pow2(k.bits) {
                    return Err(Error::OutOfRange(format!("sort key at row {r} exceeds {} bits", k.bits)));
                }
            }
        }
        // evaluate the key on the unsorted rows, then reorder
        self.out.write(asg, &rows)?;
        let keys = eval_rows(asg, &self.key, rows.len());
        let mut idx: Vec<usize> = (0..rows.len()).collect();
        idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
        let sorted: Vec<Vec<F>> = idx.into_iter().map(|i| rows[i].clone()).collect();
        self.out.write(asg, &sorted)?;
        match &self.order {
            Some(lt) => lt.assign_forced(asg, false),
            None => Ok(()),
        }
    }
}
