//! Prove and verify runs, and their on-disk bundle and manifest formats.
//!
//! A bundle's public part carries everything a verifier needs to recompile
//! the circuit and re-derive the transcript: query text, schema, budgets,
//! the circuit document, Instance values, advice column commitments and the
//! database root. The private part adds the Advice values and the opening
//! that rebinds the scanned rows to the root.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::circuit::{
    check_satisfied, shape_digest, squeeze_challenges, Assignment, ColumnId, ColumnKind, ColumnMeta,
    ConstraintSystem, CopyConstraint, ShapeDigest,
};
use crate::commitment::{commit_database, CommitmentRoot, Opening, TableOpening};
use crate::compile::{compile, scanned_tables, Budgets, CompiledQuery, StepCircuit};
use crate::data::{Database, Relation, Schema};
use crate::field::{Fr, PrimeField};
use crate::report::{query_report, ComplexityReport};
use crate::sql::parse;
use crate::witness::{generate_witness, query_transcript, read_result, WitnessBundle};
use crate::{Error, Result};

pub const BUNDLE_FORMAT: &str = "plonkql-bundle/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDoc {
    pub kind: ColumnKind,
    pub index: usize,
    #[serde(flatten)]
    pub meta: ColumnMeta,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDoc {
    pub name: String,
    pub selector: usize,
    pub constraints: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupDoc {
    pub name: String,
    pub selector: usize,
    pub condition: Option<String>,
    pub inputs: Vec<String>,
    pub table: Vec<ColumnId>,
    pub table_selector: Option<usize>,
}

/// Serializable view of a constraint system; expressions are s-expressions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitDoc {
    pub row_count: usize,
    pub columns: Vec<ColumnDoc>,
    pub gates: Vec<GateDoc>,
    pub lookups: Vec<LookupDoc>,
    pub copies: Vec<CopyConstraint>,
    pub challenges: Vec<String>,
}

impl CircuitDoc {
    pub fn new<F: PrimeField>(cs: &ConstraintSystem<F>) -> Self {
        let columns = [ColumnKind::Fixed, ColumnKind::Advice, ColumnKind::Instance]
            .into_iter()
            .flat_map(|kind| cs.columns(kind).iter().enumerate().map(move |(index, m)| ColumnDoc { kind, index, meta: m.clone() }))
            .collect();
        CircuitDoc {
            row_count: cs.row_count().unwrap_or(0),
            columns,
            gates: cs
                .gates()
                .iter()
                .map(|g| GateDoc {
                    name: g.name.clone(),
                    selector: g.selector.index,
                    constraints: g.constraints.iter().map(|c| c.to_string()).collect(),
                })
                .collect(),
            lookups: cs
                .lookups()
                .iter()
                .map(|l| LookupDoc {
                    name: l.name.clone(),
                    selector: l.selector.index,
                    condition: l.condition.as_ref().map(|c| c.to_string()),
                    inputs: l.inputs.iter().map(|e| e.to_string()).collect(),
                    table: l.table.clone(),
                    table_selector: l.table_selector.map(|c| c.index),
                })
                .collect(),
            copies: cs.copies().to_vec(),
            challenges: cs.challenges().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateSection {
    /// Every Advice column, decimal strings.
    pub advice_values: Vec<Vec<String>>,
    pub opening: Opening,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub format: String,
    pub query: String,
    pub schema: Schema,
    pub budgets: Budgets,
    pub seed: Option<String>,
    pub commitment: CommitmentRoot,
    pub digest: ShapeDigest,
    pub circuit: CircuitDoc,
    pub instance: Vec<Vec<String>>,
    pub challenges: Vec<String>,
    /// Hex SHA-256 of each phase-0 Advice column.
    pub advice_commitments: Vec<String>,
    pub result: Relation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub private: Option<PrivateSection>,
}

fn decimal<F: PrimeField>(cols: &[Vec<F>]) -> Vec<Vec<String>> {
    cols.iter().map(|c| c.iter().map(|v| v.to_string()).collect()).collect()
}

fn parse_decimal<F: PrimeField>(cols: &[Vec<String>]) -> Result<Vec<Vec<F>>> {
    cols.iter().map(|c| c.iter().map(|s| s.parse()).collect()).collect()
}

impl Bundle {
    /// The bundle with the private section removed.
    pub fn public(&self) -> Bundle {
        Bundle { private: None, ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Replaces one Instance cell, leaving the recorded result alone; for
    /// exercising the verifier.
    pub fn with_instance_cell(&self, column: usize, row: usize, value: &str) -> Result<Bundle> {
        let mut out = self.clone();
        let cell = out
            .instance
            .get_mut(column)
            .and_then(|c| c.get_mut(row))
            .ok_or_else(|| Error::OutOfRange(format!("instance cell ({column}, {row})")))?;
        *cell = value.to_string();
        Ok(out)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub commit_ms: f64,
    pub compile_ms: f64,
    pub witness_ms: f64,
    pub check_ms: f64,
}

/// Everything needed to replay a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub query: String,
    pub schema_path: String,
    pub db_path: String,
    pub budgets: Budgets,
    pub seed: Option<String>,
    pub commitment_root: String,
    pub encoding_version: u32,
    pub shape_digest: String,
    pub verdict: String,
    pub report: ComplexityReport,
    pub timings: Timings,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub struct ProveOutput {
    pub bundle: Bundle,
    pub compiled: CompiledQuery<Fr>,
    pub witness: WitnessBundle<Fr>,
    pub report: ComplexityReport,
    pub timings: Timings,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Parses, compiles, generates and checks the witness, and assembles the
/// full bundle bound to `db`'s commitment.
pub fn prove(query: &str, schema: &Schema, db: &Database, budgets: &Budgets, seed: Option<&str>) -> Result<ProveOutput> {
    let t = Instant::now();
    let commitment = commit_database(db)?;
    let commit_ms = ms(t);
    let t = Instant::now();
    let plan = parse(query, schema)?;
    let compiled = compile::<Fr>(&plan, budgets)?;
    let compile_ms = ms(t);
    let t = Instant::now();
    let witness = generate_witness(&compiled, db, &mut query_transcript(seed))?;
    let witness_ms = ms(t);
    // generate_witness already ran the full check; time a second pass for the manifest
    let t = Instant::now();
    check_satisfied(&compiled.cs, &witness.assignment)?.into_result()?;
    let check_ms = ms(t);
    let asg = &witness.assignment;
    let bundle = Bundle {
        format: BUNDLE_FORMAT.into(),
        query: query.into(),
        schema: schema.clone(),
        budgets: budgets.clone(),
        seed: seed.map(str::to_string),
        commitment,
        digest: witness.digest.clone(),
        circuit: CircuitDoc::new(&compiled.cs),
        instance: decimal(asg.columns(ColumnKind::Instance)),
        challenges: asg.challenges().iter().map(|c| c.to_string()).collect(),
        advice_commitments: asg.advice_commitments(&compiled.cs).iter().map(hex::encode).collect(),
        result: witness.public_result.clone(),
        private: Some(PrivateSection {
            advice_values: decimal(asg.columns(ColumnKind::Advice)),
            opening: Opening::new(db, &scanned_tables(&compiled.plan))?,
        }),
    };
    let report = query_report(&compiled);
    Ok(ProveOutput { bundle, compiled, witness, report, timings: Timings { commit_ms, compile_ms, witness_ms, check_ms } })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub result: Relation,
    /// Whether Advice values were checked against every constraint.
    pub full: bool,
}

fn mismatch(what: &str) -> Error {
    Error::ConstraintFailure(format!("{what} disagrees with the recompiled circuit"))
}

/// Verifies a bundle against a published commitment.
///
/// Always: the root and encoding match, the circuit recompiled from the
/// bundle's query, schema and budgets has the recorded shape, the result
/// is what the Instance columns encode, and the transcript reproduces the
/// recorded challenges. With `full`, additionally the Advice values match
/// their commitments, satisfy every constraint, and their scanned rows
/// rebuild the committed root.
pub fn verify(bundle: &Bundle, commitment: &CommitmentRoot, full: bool) -> Result<VerifyOutcome> {
    if bundle.format != BUNDLE_FORMAT {
        return Err(Error::InvalidData(format!("unknown bundle format `{}`", bundle.format)));
    }
    commitment.ensure_matches(&bundle.commitment)?;
    let plan = parse(&bundle.query, &bundle.schema)?;
    let compiled = compile::<Fr>(&plan, &bundle.budgets)?;
    let cs = &compiled.cs;
    let n = cs.row_count().ok_or_else(|| Error::InternalInconsistency("compiled system is not frozen".into()))?;
    let blank = Assignment::new(cs)?;
    if shape_digest(cs, &blank) != bundle.digest {
        return Err(Error::ShapeMismatch("recorded shape digest differs from the recompiled circuit".into()));
    }
    if CircuitDoc::new(cs) != bundle.circuit {
        return Err(Error::ShapeMismatch("circuit document differs from the recompiled circuit".into()));
    }

    let instance: Vec<Vec<Fr>> = parse_decimal(&bundle.instance)?;
    if instance.len() != cs.columns(ColumnKind::Instance).len() || instance.iter().any(|c| c.len() != n) {
        return Err(Error::ShapeMismatch("instance dimensions differ from the circuit".into()));
    }
    let fixed = cs.fixed_values().to_vec();
    let commitments = bundle
        .advice_commitments
        .iter()
        .map(|h| {
            let mut out = [0u8; 32];
            hex::decode_to_slice(h, &mut out).map_err(|_| Error::InvalidData(format!("bad advice commitment `{h}`")))?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let challenges = squeeze_challenges(cs, &fixed, &instance, &commitments, &mut query_transcript(bundle.seed.as_deref()));
    let recorded: Vec<Fr> = bundle.challenges.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    if challenges != recorded {
        return Err(mismatch("transcript"));
    }
    let public_view = Assignment::from_parts(n, fixed.clone(), Vec::new(), instance.clone(), challenges.clone());
    let result = read_result(&compiled, &public_view).map_err(|e| Error::ConstraintFailure(format!("instance: {e}")))?;
    if result != bundle.result {
        return Err(Error::ConstraintFailure("recorded result differs from the Instance columns".into()));
    }
    if !full {
        return Ok(VerifyOutcome { result, full: false });
    }

    let private = bundle
        .private
        .as_ref()
        .ok_or_else(|| Error::InvalidData("full verification needs a bundle with Advice values".into()))?;
    let advice: Vec<Vec<Fr>> = parse_decimal(&private.advice_values)?;
    if advice.len() != cs.columns(ColumnKind::Advice).len() || advice.iter().any(|c| c.len() != n) {
        return Err(Error::ShapeMismatch("advice dimensions differ from the circuit".into()));
    }
    let asg = Assignment::from_parts(n, fixed, advice, instance, challenges);
    let recomputed: Vec<[u8; 32]> = asg.advice_commitments(cs);
    if recomputed != commitments {
        return Err(mismatch("advice commitment"));
    }
    let verdict = check_satisfied(cs, &asg)?;
    if !verdict.is_ok() {
        let shown: Vec<String> = verdict.failures.iter().take(8).map(|f| f.to_string()).collect();
        return Err(Error::ConstraintFailure(format!("{} failure(s): {}", verdict.failures.len(), shown.join("; "))));
    }
    for t in scanned_tables(&compiled.plan) {
        let opened = private.opening.tables.iter().any(|o| matches!(o, TableOpening::Scanned { name } if name.eq_ignore_ascii_case(&t)));
        if !opened {
            return Err(Error::CommitmentMismatch(format!("opening does not bind scanned table `{t}`")));
        }
    }
    let rebuilt = private.opening.recompute(|name| scanned_rows(&compiled, &asg, name))?;
    commitment.ensure_matches(&rebuilt)?;
    Ok(VerifyOutcome { result, full: true })
}

/// Valid rows of every scan of `table`, which must agree.
fn scanned_rows<F: PrimeField>(compiled: &CompiledQuery<F>, asg: &Assignment<F>, table: &str) -> Result<Vec<Vec<u64>>> {
    let mut found: Option<Vec<Vec<u64>>> = None;
    for step in &compiled.steps {
        let StepCircuit::Scan { table: t, config } = step else { continue };
        if !t.eq_ignore_ascii_case(table) {
            continue;
        }
        let rows = config
            .table
            .read_valid(asg)
            .into_iter()
            .map(|r| {
                r.iter()
                    .map(|v| v.to_u64().ok_or_else(|| Error::CommitmentMismatch(format!("scanned `{table}` cell exceeds 64 bits"))))
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        match &found {
            Some(prev) if *prev != rows => {
                return Err(Error::CommitmentMismatch(format!("scans of `{table}` disagree")));
            }
            _ => found = Some(rows),
        }
    }
    found.ok_or_else(|| Error::CommitmentMismatch(format!("opening marks `{table}` as scanned but the query never scans it")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::parse_budgets;

    fn setup() -> (Schema, Database) {
        let schema = Schema::from_json(
            r#"{"tables":[
                {"name":"T","columns":[{"name":"D1"},{"name":"D2"}]},
                {"name":"Other","columns":[{"name":"x"}]}
            ]}"#,
        )
        .unwrap();
        let mut db = Database::new();
        let mut t = Relation::new("T", vec!["D1".into(), "D2".into()]);
        t.rows = vec![vec![1, 2], vec![2, 5], vec![1, 3], vec![3, 4]];
        let mut o = Relation::new("Other", vec!["x".into()]);
        o.rows = vec![vec![9]];
        db.insert(t);
        db.insert(o);
        (schema, db)
    }

    const Q: &str = "SELECT D1, SUM(D2) FROM T GROUP BY D1";

    fn run() -> (Bundle, CommitmentRoot, Database, Schema) {
        let (schema, db) = setup();
        let out = prove(Q, &schema, &db, &parse_budgets("T=4").unwrap(), None).unwrap();
        (out.bundle, commit_database(&db).unwrap(), db, schema)
    }

    #[test]
    fn honest_run_verifies_both_ways() {
        let (b, c, _, _) = run();
        let public = verify(&b.public(), &c, false).unwrap();
        assert_eq!(public.result.sorted_rows(), vec![vec![1, 5], vec![2, 5], vec![3, 4]]);
        assert!(verify(&b, &c, true).unwrap().full);
        let back = Bundle::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(back, b);
        assert!(matches!(verify(&b.public(), &c, true), Err(Error::InvalidData(_))));
    }

    #[test]
    fn public_bundle_has_no_advice_values() {
        let (b, _, _, _) = run();
        let json = b.public().to_json().unwrap();
        assert!(!json.contains("\"private\""));
        assert!(!json.contains("advice_values"));
        assert!(b.to_json().unwrap().contains("advice_values"));
    }

    #[test]
    fn edited_instance_fails() {
        let (b, c, _, _) = run();
        let v: Fr = b.instance[1][0].parse().unwrap();
        let t = b.with_instance_cell(1, 0, &(v + Fr::from_u64(1)).to_string()).unwrap();
        assert!(matches!(verify(&t.public(), &c, false), Err(Error::ConstraintFailure(_))));
        assert!(matches!(verify(&t, &c, true), Err(Error::ConstraintFailure(_))));
        // editing the result alone is caught by the Instance comparison
        let mut r = b.clone();
        r.result.rows[0][1] += 1;
        assert!(matches!(verify(&r, &c, false), Err(Error::ConstraintFailure(_))));
    }

    #[test]
    fn edited_advice_fails_full_check() {
        let (b, c, _, _) = run();
        let mut t = b.clone();
        let adv = &mut t.private.as_mut().unwrap().advice_values;
        let col = adv.iter().position(|c| c.iter().any(|v| v != "0")).unwrap();
        adv[col][0] = "12345".into();
        assert!(matches!(verify(&t, &c, true), Err(Error::ConstraintFailure(_))));
    }

    #[test]
    fn commitment_binding() {
        let (b, c, db, schema) = run();
        let mut swapped = c.clone();
        swapped.root = "00".repeat(32);
        assert!(matches!(verify(&b, &swapped, false), Err(Error::CommitmentMismatch(_))));
        let mut version = c.clone();
        version.encoding_version += 1;
        assert!(matches!(verify(&b, &version, false), Err(Error::CommitmentMismatch(_))));

        // proving over an altered database, then claiming the original root
        let mut fake = db.clone();
        fake.tables.get_mut("T").unwrap().rows[0][1] = 100;
        let mut forged = prove(Q, &schema, &fake, &parse_budgets("T=4").unwrap(), None).unwrap().bundle;
        assert!(matches!(verify(&forged, &c, true), Err(Error::CommitmentMismatch(_))));
        forged.commitment = c.clone();
        assert!(matches!(verify(&forged, &c, true), Err(Error::CommitmentMismatch(_))));
        // an opening that hides the scanned table behind leaf hashes
        let mut hidden = b.clone();
        hidden.private.as_mut().unwrap().opening = Opening::new(&db, &[]).unwrap();
        assert!(matches!(verify(&hidden, &c, true), Err(Error::CommitmentMismatch(_))));
    }

    #[test]
    fn shape_changes_are_caught() {
        let (b, c, _, _) = run();
        let mut t = b.clone();
        t.budgets = parse_budgets("T=8").unwrap();
        assert!(matches!(verify(&t, &c, false), Err(Error::ShapeMismatch(_))));
        let mut q = b.clone();
        q.query = "SELECT D1, SUM(D2) FROM T WHERE D2 > 2 GROUP BY D1".into();
        assert!(matches!(verify(&q, &c, false), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn bundles_are_deterministic() {
        let (a, _, _, _) = run();
        let (b, _, _, _) = run();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let (schema, db) = setup();
        let salted = prove(Q, &schema, &db, &parse_budgets("T=4").unwrap(), Some("s")).unwrap().bundle;
        assert_ne!(salted.challenges, a.challenges);
        assert!(verify(&salted, &commit_database(&db).unwrap(), true).is_ok());
    }
}
