//! Fills a compiled query's assignment from a database.

use rand::Rng;

use crate::circuit::{check_satisfied, shape_digest, Assignment, Cell, ColumnKind, ColumnRole, ConstraintSystem, ShapeDigest};
use crate::compile::{CompiledQuery, StepCircuit};
use crate::data::{Database, Relation};
use crate::field::{PrimeField, Transcript};
use crate::gates::TableRef;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessBundle<F> {
    pub assignment: Assignment<F>,
    pub public_result: Relation,
    pub digest: ShapeDigest,
}

/// Transcript domain for query circuits; `seed` salts it in tests.
pub fn query_transcript<F: PrimeField>(seed: Option<&str>) -> Transcript<F> {
    let mut t = Transcript::new(b"plonkql/query/v1");
    if let Some(s) = seed {
        t.absorb(b"seed", s.as_bytes());
    }
    t
}

/// Runs every step's witness generation, binds the output to the Instance
/// columns, draws the challenges, fills the grand products and checks the
/// result. A failing check on honest input is reported as
/// `InternalInconsistency`.
pub fn generate_witness<F: PrimeField>(
    compiled: &CompiledQuery<F>,
    db: &Database,
    transcript: &mut Transcript<F>,
) -> Result<WitnessBundle<F>> {
    let cs = &compiled.cs;
    let mut asg = Assignment::new(cs)?;
    for step in &compiled.steps {
        match step {
            StepCircuit::Scan { table, config } => {
                let rel = db.table(table).ok_or_else(|| Error::InvalidData(format!("missing table `{table}`")))?;
                config.assign(&mut asg, table, &rel.rows)?;
            }
            StepCircuit::Filter(c) => c.assign(&mut asg)?,
            StepCircuit::Join(c) => c.assign(&mut asg)?,
            StepCircuit::GroupBy(c) => c.assign(&mut asg)?,
            StepCircuit::Aggregate => {}
            StepCircuit::Sort(c) => c.assign(&mut asg)?,
            StepCircuit::Project(c) => c.assign(&mut asg)?,
            StepCircuit::SetOp(c) => c.assign(&mut asg)?,
        }
    }
    let out = compiled.tables[compiled.plan.result()]
        .clone()
        .ok_or_else(|| Error::InternalInconsistency("result step has no table".into()))?;
    for (src, dst) in out.columns().into_iter().zip(compiled.instance.columns()) {
        for r in 0..out.rows {
            let v = asg.get(src, r);
            asg.set(dst, r, v)?;
        }
    }
    asg.derive_challenges(cs, transcript);
    asg.fill_grand_products(cs)?;
    let verdict = check_satisfied(cs, &asg)?;
    if !verdict.is_ok() {
        let first: Vec<String> = verdict.failures.iter().take(5).map(|f| format!("{f:?}")).collect();
        return Err(Error::InternalInconsistency(format!(
            "honest witness fails {} constraint(s): {}",
            verdict.failures.len(),
            first.join("; ")
        )));
    }
    let public_result = read_result(compiled, &asg)?;
    let digest = shape_digest(cs, &asg);
    Ok(WitnessBundle { assignment: asg, public_result, digest })
}

/// The valid Instance rows as a relation, in row order.
pub fn read_result<F: PrimeField>(compiled: &CompiledQuery<F>, asg: &Assignment<F>) -> Result<Relation> {
    read_table(&compiled.instance, compiled.output_names(), asg)
}

pub(crate) fn read_table<F: PrimeField>(t: &TableRef, names: &[String], asg: &Assignment<F>) -> Result<Relation> {
    let mut rel = Relation::new("result", names.to_vec());
    for r in 0..t.rows {
        let v = asg.get(t.valid, r);
        if v.is_zero() {
            continue;
        }
        if v != F::one() {
            return Err(Error::InvalidData(format!("output validity at row {r} is not 0/1")));
        }
        let row = t
            .cols
            .iter()
            .map(|c| asg.get(*c, r).to_u128().ok_or_else(|| Error::OutOfRange(format!("output cell at row {r} exceeds 128 bits"))))
            .collect::<Result<Vec<_>>>()?;
        rel.rows.push(row);
    }
    Ok(rel)
}

/// Returns a copy with one Advice or Instance cell replaced.
pub fn tamper<F: PrimeField>(bundle: &WitnessBundle<F>, cell: Cell, value: F) -> Result<WitnessBundle<F>> {
    if cell.column.kind == ColumnKind::Fixed {
        return Err(Error::OutOfRange("fixed cells are part of the circuit, not the witness".into()));
    }
    let asg = &bundle.assignment;
    let count = match cell.column.kind {
        ColumnKind::Advice => asg.columns(ColumnKind::Advice).len(),
        _ => asg.columns(ColumnKind::Instance).len(),
    };
    if cell.column.index >= count || cell.row >= asg.row_count() {
        return Err(Error::OutOfRange(format!("cell {:?} row {} outside the assignment", cell.column, cell.row)));
    }
    let mut out = bundle.clone();
    out.assignment.set(cell.column, cell.row, value)?;
    Ok(out)
}

/// Advice and Instance cells on rows their owning gadget constrains,
/// excluding scanned inputs (bound by the commitment, not by gates) and
/// free hints such as is-zero inverses.
pub fn constrained_cells<F: PrimeField>(cs: &ConstraintSystem<F>) -> Vec<Cell> {
    let mut out = Vec::new();
    for kind in [ColumnKind::Advice, ColumnKind::Instance] {
        for (index, meta) in cs.columns(kind).iter().enumerate() {
            if matches!(meta.role, ColumnRole::Input | ColumnRole::Hint) {
                continue;
            }
            let column = crate::circuit::ColumnId { kind, index };
            out.extend((0..meta.used_rows).map(|row| Cell::new(column, row)));
        }
    }
    out
}

/// Tampers `count` random constrained cells one at a time and returns how
/// many of the tampered assignments still pass `check_satisfied`.
pub fn tamper_probe<F: PrimeField, R: Rng>(
    cs: &ConstraintSystem<F>,
    bundle: &WitnessBundle<F>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Cell>> {
    let cells = constrained_cells(cs);
    let mut accepted = Vec::new();
    if cells.is_empty() {
        return Ok(accepted);
    }
    for _ in 0..count {
        let cell = cells[rng.gen_range(0..cells.len())];
        let old = bundle.assignment.get(cell.column, cell.row);
        let new = if rng.gen_bool(0.5) { old + F::one() } else { F::from_u64(rng.gen()) };
        let new = if new == old { old + F::one() } else { new };
        let t = tamper(bundle, cell, new)?;
        if check_satisfied(cs, &t.assignment)?.is_ok() {
            accepted.push(cell);
        }
    }
    Ok(accepted)
}
