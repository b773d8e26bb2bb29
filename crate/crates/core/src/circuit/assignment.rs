use sha2::{Digest, Sha256};

use super::{ColumnId, ColumnKind, ConstraintSystem};
use crate::field::{batch_invert, PrimeField, Transcript};
use crate::{Error, Result};

/// The rectangular matrix of values filling every declared column.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<F> {
    pub(crate) row_count: usize,
    pub(crate) fixed: Vec<Vec<F>>,
    pub(crate) advice: Vec<Vec<F>>,
    pub(crate) instance: Vec<Vec<F>>,
    pub(crate) challenges: Vec<F>,
}

/// SHA-256 over the little-endian encodings of a column's cells.
pub fn column_commitment<F: PrimeField>(values: &[F]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((values.len() as u64).to_be_bytes());
    for v in values {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}

impl<F: PrimeField> Assignment<F> {
    /// Empty assignment for a frozen system; fixed columns are copied in.
    pub fn new(cs: &ConstraintSystem<F>) -> Result<Self> {
        let n = cs
            .row_count()
            .ok_or_else(|| Error::ShapeMismatch("constraint system is not frozen".into()))?;
        Ok(Assignment {
            row_count: n,
            fixed: cs.fixed_values().to_vec(),
            advice: vec![vec![F::zero(); n]; cs.columns(ColumnKind::Advice).len()],
            instance: vec![vec![F::zero(); n]; cs.columns(ColumnKind::Instance).len()],
            challenges: Vec::new(),
        })
    }

    /// Builds an assignment from raw parts (deserialization).
    pub fn from_parts(
        row_count: usize,
        fixed: Vec<Vec<F>>,
        advice: Vec<Vec<F>>,
        instance: Vec<Vec<F>>,
        challenges: Vec<F>,
    ) -> Self {
        Assignment { row_count, fixed, advice, instance, challenges }
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    fn columns_of(&self, kind: ColumnKind) -> &Vec<Vec<F>> {
        match kind {
            ColumnKind::Fixed => &self.fixed,
            ColumnKind::Advice => &self.advice,
            ColumnKind::Instance => &self.instance,
        }
    }

    pub fn columns(&self, kind: ColumnKind) -> &[Vec<F>] {
        self.columns_of(kind)
    }

    pub fn column(&self, col: ColumnId) -> &[F] {
        &self.columns_of(col.kind)[col.index]
    }

    pub fn get(&self, col: ColumnId, row: usize) -> F {
        self.columns_of(col.kind)[col.index][row]
    }

    /// Value at `row + rotation`, wrapping modulo the row count.
    pub fn get_rotated(&self, col: ColumnId, row: usize, rotation: i32) -> F {
        let n = self.row_count as i64;
        let r = (row as i64 + rotation as i64).rem_euclid(n) as usize;
        self.get(col, r)
    }

    pub fn set(&mut self, col: ColumnId, row: usize, value: F) -> Result<()> {
        if row >= self.row_count {
            return Err(Error::OutOfRange(format!("row {row} >= {}", self.row_count)));
        }
        let target = match col.kind {
            ColumnKind::Fixed => {
                return Err(Error::ShapeMismatch("fixed columns are set by the circuit".into()))
            }
            ColumnKind::Advice => &mut self.advice,
            ColumnKind::Instance => &mut self.instance,
        };
        let column = target
            .get_mut(col.index)
            .ok_or_else(|| Error::UnknownColumn(format!("{:?} {}", col.kind, col.index)))?;
        column[row] = value;
        Ok(())
    }

    pub fn set_column(&mut self, col: ColumnId, values: &[F]) -> Result<()> {
        for (row, v) in values.iter().enumerate() {
            self.set(col, row, *v)?;
        }
        Ok(())
    }

    pub fn set_u64s(&mut self, col: ColumnId, values: &[u64]) -> Result<()> {
        for (row, v) in values.iter().enumerate() {
            self.set(col, row, F::from_u64(*v))?;
        }
        Ok(())
    }

    pub fn challenges(&self) -> &[F] {
        &self.challenges
    }

    pub fn challenge(&self, id: super::ChallengeId) -> F {
        self.challenges[id.0]
    }

    /// Commitments of the phase-0 advice columns, in declaration order.
    pub fn advice_commitments(&self, cs: &ConstraintSystem<F>) -> Vec<[u8; 32]> {
        cs.columns(ColumnKind::Advice)
            .iter()
            .zip(&self.advice)
            .filter(|(m, _)| m.phase == 0)
            .map(|(_, v)| column_commitment(v))
            .collect()
    }

    /// Absorbs fixed, instance and phase-0 advice commitments, then squeezes
    /// every declared challenge.
    pub fn derive_challenges(&mut self, cs: &ConstraintSystem<F>, transcript: &mut Transcript<F>) {
        let commitments = self.advice_commitments(cs);
        self.challenges = squeeze_challenges(cs, &self.fixed, &self.instance, &commitments, transcript);
    }

    /// Fills every grand-product column from the current phase-0 values and
    /// challenges.
    pub fn fill_grand_products(&mut self, cs: &ConstraintSystem<F>) -> Result<()> {
        if self.challenges.len() != cs.challenges().len() {
            return Err(Error::InternalInconsistency("challenges not derived".into()));
        }
        for gp in cs.grand_products() {
            let mut num = Vec::with_capacity(gp.rows);
            let mut den = Vec::with_capacity(gp.rows);
            for row in 0..gp.rows {
                let cell = |c: ColumnId, rot: i32| self.get_rotated(c, row, rot);
                let ch = |c: super::ChallengeId| self.challenges[c.0];
                num.push(gp.numerator.evaluate(&cell, &ch));
                den.push(gp.denominator.evaluate(&cell, &ch));
            }
            if den.iter().any(|d| d.is_zero()) {
                return Err(Error::WitnessInfeasible(format!(
                    "grand product `{}` hit a zero denominator",
                    gp.name
                )));
            }
            batch_invert(&mut den);
            let mut z = F::one();
            self.set(gp.z, 0, z)?;
            for row in 0..gp.rows {
                z = z * num[row] * den[row];
                self.set(gp.z, row + 1, z)?;
            }
        }
        Ok(())
    }
}

/// Transcript schedule shared by prover and verifier.
pub fn squeeze_challenges<F: PrimeField>(
    cs: &ConstraintSystem<F>,
    fixed: &[Vec<F>],
    instance: &[Vec<F>],
    advice_commitments: &[[u8; 32]],
    transcript: &mut Transcript<F>,
) -> Vec<F> {
    for col in fixed {
        transcript.absorb(b"fixed", &column_commitment(col));
    }
    for col in instance {
        transcript.absorb(b"instance", &column_commitment(col));
    }
    for c in advice_commitments {
        transcript.absorb(b"advice", c);
    }
    cs.challenges().iter().map(|name| transcript.challenge(name.as_bytes())).collect()
}
