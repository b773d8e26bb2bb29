//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Tolerances and runtime limits are fixed below.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use plonkql::circuit::{check_satisfied, count_constraints, Assignment, ColumnRole, ConstraintSystem, Lookup};
use plonkql::commitment::commit_database;
use plonkql::compile::{compile, default_budgets, parse_budgets, Budgets};
use plonkql::data::{Database, Relation, Schema};
use plonkql::field::{PrimeField, Transcript};
use plonkql::gadgets::{BatchRangeCheckConfig, CircuitBuilder, IsZeroConfig, LessThanConfig};
use plonkql::pipeline::{prove, verify};
use plonkql::reference::evaluate_reference;
use plonkql::report::{batch_range_expectations, group_by_expectations, join_expectations, less_than_expectations, sort_expectations, Expectation};
use plonkql::sql::{parse, JoinMode};
use plonkql::witness::{generate_witness, query_transcript, tamper_probe};
use plonkql::{tpch, Error, Fr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(n: u32, title: &str, limit: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let elapsed = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; exceeded the {:.0} s limit", limit.as_secs_f64())),
        Err(e) => (false, e),
    };
    println!(
        "criterion {n} [{title}]: {} ({:.2} s of {:.0} s; {detail})",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    ok
}

fn fr(v: u64) -> Fr {
    Fr::from_u64(v)
}

// ---------------------------------------------------------------- criterion 1

fn gadget_brute_force() -> Check {
    // less-than, u = 16: the satisfiable flag values are exactly {x < t}
    let mut b = CircuitBuilder::<Fr>::new();
    let x = b.cs.advice("x", ColumnRole::Input, 1).map_err(|e| e.to_string())?;
    let t = b.cs.advice("t", ColumnRole::Input, 1).map_err(|e| e.to_string())?;
    let lt = LessThanConfig::configure(&mut b, "lt", x.cur(), t.cur(), 1, 4).map_err(|e| e.to_string())?;
    let cs = b.finish(256).map_err(|e| e.to_string())?;
    for xv in 0..16u64 {
        for tv in 0..16u64 {
            let mut satisfiable = Vec::new();
            for forced in [false, true] {
                let mut asg = Assignment::new(&cs).map_err(|e| e.to_string())?;
                asg.set(x, 0, fr(xv)).map_err(|e| e.to_string())?;
                asg.set(t, 0, fr(tv)).map_err(|e| e.to_string())?;
                // an inconsistent flag makes assignment report infeasibility;
                // the cells are written regardless and judged by the checker
                let _ = lt.assign_forced(&mut asg, forced);
                if check_satisfied(&cs, &asg).map_err(|e| e.to_string())?.is_ok() {
                    satisfiable.push(forced);
                }
            }
            ensure(satisfiable == [xv < tv], || format!("less-than ({xv}, {tv}): satisfiable flags {satisfiable:?}"))?;
        }
    }

    // is_zero over [0, 8)^2
    let pairs: Vec<(u64, u64)> = (0..8).flat_map(|a| (0..8).map(move |c| (a, c))).collect();
    let mut b = CircuitBuilder::<Fr>::new();
    let v1 = b.cs.advice("v1", ColumnRole::Input, 1).map_err(|e| e.to_string())?;
    let v2 = b.cs.advice("v2", ColumnRole::Input, 1).map_err(|e| e.to_string())?;
    let iz = IsZeroConfig::configure(&mut b, "iz", v1.cur(), v2.cur(), 1).map_err(|e| e.to_string())?;
    let cs = b.finish(1).map_err(|e| e.to_string())?;
    let mut adversarial = 0;
    for &(a, c) in &pairs {
        let mut asg = Assignment::new(&cs).map_err(|e| e.to_string())?;
        asg.set(v1, 0, fr(a)).map_err(|e| e.to_string())?;
        asg.set(v2, 0, fr(c)).map_err(|e| e.to_string())?;
        iz.assign(&mut asg).map_err(|e| e.to_string())?;
        ensure(check_satisfied(&cs, &asg).map_err(|e| e.to_string())?.is_ok(), || format!("is_zero honest ({a}, {c}) rejected"))?;
        ensure(asg.get(iz.flag, 0) == fr(u64::from(a == c)), || format!("is_zero flag wrong at ({a}, {c})"))?;
        if a != c {
            for flag in [0, 1] {
                let mut bad = asg.clone();
                bad.set(iz.inverse, 0, Fr::zero()).map_err(|e| e.to_string())?;
                bad.set(iz.flag, 0, fr(flag)).map_err(|e| e.to_string())?;
                ensure(!check_satisfied(&cs, &bad).map_err(|e| e.to_string())?.is_ok(), || {
                    format!("is_zero accepted p=0, b={flag} on ({a}, {c})")
                })?;
                adversarial += 1;
            }
        }
    }

    // u8 decomposition of 1000 random 64-bit values
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let values: Vec<u64> = (0..1000).map(|_| rng.gen()).collect();
    let mut b = CircuitBuilder::<Fr>::new();
    let v = b.cs.advice("v", ColumnRole::Input, values.len()).map_err(|e| e.to_string())?;
    let rc = plonkql::gadgets::U8RangeCheckConfig::configure(&mut b, "rc", v.cur(), values.len(), 64).map_err(|e| e.to_string())?;
    let cs = b.finish(256).map_err(|e| e.to_string())?;
    let mut asg = Assignment::new(&cs).map_err(|e| e.to_string())?;
    asg.set_u64s(v, &values).map_err(|e| e.to_string())?;
    rc.assign(&mut asg).map_err(|e| e.to_string())?;
    ensure(check_satisfied(&cs, &asg).map_err(|e| e.to_string())?.is_ok(), || "u8 decomposition rejected".into())?;
    for (row, &value) in values.iter().enumerate() {
        let limbs: Vec<u64> = rc.limbs.iter().map(|&c| asg.get(c, row).to_u64().unwrap_or(u64::MAX)).collect();
        ensure(limbs.iter().all(|&l| l < 256), || format!("limb out of range at row {row}"))?;
        let recomposed = limbs.iter().rev().fold(0u128, |acc, &l| (acc << 8) | l as u128);
        ensure(recomposed == value as u128, || format!("recompose({value}) = {recomposed}"))?;
    }
    Ok(format!("256 less-than pairs, 64 is_zero pairs with {adversarial} adversarial hints, 1000 u8 decompositions"))
}

// ---------------------------------------------------------------- criterion 2

fn permutation_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..200 {
        let t: u64 = rng.gen_range(0..48);
        let len = rng.gen_range(1..=40usize);
        let overshoot = if rng.gen_bool(0.5) { 0 } else { rng.gen_range(1..4) };
        let p: Vec<u64> = (0..len).map(|_| rng.gen_range(0..=t + overshoot)).collect();
        let literal = p.iter().all(|&v| v <= t);

        // sorted-permutation encoding
        let mut b = CircuitBuilder::<Fr>::new();
        let batch = BatchRangeCheckConfig::configure(&mut b, "batch", len, t).map_err(|e| e.to_string())?;
        let cs = b.finish(1).map_err(|e| e.to_string())?;
        let mut asg = Assignment::new(&cs).map_err(|e| e.to_string())?;
        let pv: Vec<Fr> = p.iter().map(|&v| fr(v)).collect();
        batch.assign_unchecked(&mut asg, &pv).map_err(|e| e.to_string())?;
        asg.derive_challenges(&cs, &mut Transcript::new(b"acceptance/perm"));
        asg.fill_grand_products(&cs).map_err(|e| e.to_string())?;
        let encoded = check_satisfied(&cs, &asg).map_err(|e| e.to_string())?.is_ok();

        // literal membership through a lookup
        let mut lcs = ConstraintSystem::<Fr>::new();
        let col = lcs.advice("p", ColumnRole::Input, len).map_err(|e| e.to_string())?;
        let table = lcs.fixed("table", ColumnRole::Constant, (0..=t).map(fr).collect()).map_err(|e| e.to_string())?;
        let q = lcs.selector("q", 0..len).map_err(|e| e.to_string())?;
        let q_table = lcs.selector("q_table", 0..t as usize + 1).map_err(|e| e.to_string())?;
        lcs.add_lookup(Lookup {
            name: "member".into(),
            selector: q,
            condition: None,
            inputs: vec![col.cur()],
            table: vec![table],
            table_selector: Some(q_table),
        })
        .map_err(|e| e.to_string())?;
        lcs.freeze(1).map_err(|e| e.to_string())?;
        let mut lasg = Assignment::new(&lcs).map_err(|e| e.to_string())?;
        lasg.set_u64s(col, &p).map_err(|e| e.to_string())?;
        let looked_up = check_satisfied(&lcs, &lasg).map_err(|e| e.to_string())?.is_ok();

        ensure(encoded == looked_up && looked_up == literal, || {
            format!("instance {i}: t={t} p={p:?} encoded={encoded} lookup={looked_up} literal={literal}")
        })?;
        if encoded {
            let z = asg.get(batch.subset.z, batch.len);
            ensure(z.is_one(), || format!("instance {i}: Z[len] = {z}"))?;
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    Ok(format!("200 instances agree ({sat} satisfiable with Z[len]=1, {unsat} not)"))
}

// ------------------------------------------------------- operator workloads

const OP_SCHEMA: &str = r#"{"tables":[
  {"name":"R","columns":[{"name":"a"},{"name":"b"}]},
  {"name":"S","columns":[{"name":"a"},{"name":"b"}]},
  {"name":"K","columns":[{"name":"k"},{"name":"v"}],"primary_key":"k"}
]}"#;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Claim {
    None,
    Equal,
    Disjoint,
}

struct Operator {
    name: &'static str,
    sql: &'static str,
    claim: Claim,
}

fn operators() -> Vec<Operator> {
    let op = |name, sql, claim| Operator { name, sql, claim };
    vec![
        op("sort", "SELECT a, b FROM R ORDER BY a DESC, b", Claim::None),
        op("group-sum", "SELECT a, SUM(b) FROM R GROUP BY a", Claim::None),
        op("group-count", "SELECT a, COUNT(*) FROM R GROUP BY a", Claim::None),
        op("group-avg", "SELECT a, AVG(b) FROM R GROUP BY a", Claim::None),
        op("group-min", "SELECT a, MIN(b) FROM R GROUP BY a", Claim::None),
        op("group-max", "SELECT a, MAX(b) FROM R GROUP BY a", Claim::None),
        op("pkfk-join", "SELECT R.a, R.b, K.v FROM R, K WHERE R.a = K.k", Claim::None),
        op("general-join", "SELECT R.b, S.b FROM R, S WHERE R.a = S.a", Claim::None),
        op("union", "SELECT a, b FROM R UNION SELECT a, b FROM S", Claim::None),
        op("intersect", "SELECT a, b FROM R INTERSECT SELECT a, b FROM S", Claim::None),
        op("equality", "SELECT a, b FROM R EQUALS SELECT a, b FROM S", Claim::Equal),
        op("disjointness", "SELECT a, b FROM R DISJOINT SELECT a, b FROM S", Claim::Disjoint),
    ]
}

/// Up to 64 rows with values below 2^16; keys come from a small domain
/// often enough to form groups and matches.
fn random_db(rng: &mut ChaCha8Rng, claim: Claim) -> Database {
    let domain: u128 = *[4u128, 16, 65536].get(rng.gen_range(0..3)).unwrap_or(&16);
    let table = |name: &str, cols: [&str; 2], rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(0..=64);
        let mut rel = Relation::new(name, cols.iter().map(|c| c.to_string()).collect());
        rel.rows = (0..n).map(|_| vec![rng.gen_range(0..domain), rng.gen_range(0..65536)]).collect();
        rel
    };
    let r = table("R", ["a", "b"], rng);
    let mut s = table("S", ["a", "b"], rng);
    match claim {
        Claim::Equal if rng.gen_bool(0.5) => {
            s.rows = r.rows.clone();
            // a permutation of R
            for i in (1..s.rows.len()).rev() {
                let j = rng.gen_range(0..=i);
                s.rows.swap(i, j);
            }
        }
        Claim::Disjoint if rng.gen_bool(0.5) => {
            let left: BTreeSet<Vec<u128>> = r.rows.iter().cloned().collect();
            s.rows.retain(|row| !left.contains(row));
        }
        Claim::Disjoint if !r.rows.is_empty() => {
            // a shared row makes the claim false
            let shared = r.rows[rng.gen_range(0..r.rows.len())].clone();
            if s.rows.is_empty() {
                s.rows.push(shared);
            } else {
                let j = rng.gen_range(0..s.rows.len());
                s.rows[j] = shared;
            }
        }
        _ => {}
    }
    let mut keys: Vec<u128> = (0..domain.min(4096)).collect();
    for i in (1..keys.len()).rev() {
        let j = rng.gen_range(0..=i);
        keys.swap(i, j);
    }
    let mut k = Relation::new("K", vec!["k".into(), "v".into()]);
    k.rows = keys.into_iter().take(rng.gen_range(0..=64)).map(|key| vec![key, rng.gen_range(0..65536)]).collect();
    let mut db = Database::new();
    for t in [r, s, k] {
        db.insert(t);
    }
    db
}

fn op_schema() -> Schema {
    Schema::from_json(OP_SCHEMA).expect("operator schema parses")
}

// ---------------------------------------------------------------- criterion 3

fn operator_oracles() -> Check {
    let schema = op_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut summary = Vec::new();
    for op in operators() {
        let plan = parse(op.sql, &schema).map_err(|e| format!("{}: {e}", op.name))?;
        let (mut proved, mut refused) = (0, 0);
        for i in 0..100 {
            let db = random_db(&mut rng, op.claim);
            let budgets = default_budgets(&plan, &db).map_err(|e| e.to_string())?;
            let compiled = compile::<Fr>(&plan, &budgets).map_err(|e| format!("{}: {e}", op.name))?;
            let expected = evaluate_reference(&plan, &db).map_err(|e| e.to_string())?;
            let claim_false = op.claim != Claim::None && expected.rows == vec![vec![0]];
            match generate_witness(&compiled, &db, &mut query_transcript(None)) {
                Ok(w) => {
                    ensure(!claim_false, || format!("{} #{i}: proved a false claim", op.name))?;
                    let verdict = check_satisfied(&compiled.cs, &w.assignment).map_err(|e| e.to_string())?;
                    ensure(verdict.is_ok(), || format!("{} #{i}: check failed", op.name))?;
                    let ordered = op.sql.contains("ORDER BY");
                    let same = if ordered {
                        w.public_result.rows == expected.rows
                    } else {
                        w.public_result.sorted_rows() == expected.sorted_rows()
                    };
                    ensure(same, || {
                        format!("{} #{i}: circuit {:?} vs reference {:?}", op.name, w.public_result.rows, expected.rows)
                    })?;
                    proved += 1;
                }
                Err(Error::WitnessInfeasible(_)) if claim_false => refused += 1,
                Err(e) => return Err(format!("{} #{i}: {e}", op.name)),
            }
        }
        summary.push(if refused > 0 { format!("{} {proved}+{refused} refused", op.name) } else { format!("{} {proved}", op.name) });
    }
    Ok(summary.join(", "))
}

// ---------------------------------------------------------------- criterion 4

fn soundness_probes() -> Check {
    let schema = op_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut total = 0;
    for op in operators() {
        let plan = parse(op.sql, &schema).map_err(|e| e.to_string())?;
        let mut done = 0;
        let mut attempts = 0;
        // five provable instances, ten tampers each
        while done < 50 {
            attempts += 1;
            ensure(attempts < 200, || format!("{}: no provable instances", op.name))?;
            let db = random_db(&mut rng, op.claim);
            let budgets = default_budgets(&plan, &db).map_err(|e| e.to_string())?;
            let compiled = compile::<Fr>(&plan, &budgets).map_err(|e| e.to_string())?;
            let Ok(w) = generate_witness(&compiled, &db, &mut query_transcript(None)) else { continue };
            let accepted = tamper_probe(&compiled.cs, &w, 10, &mut rng).map_err(|e| e.to_string())?;
            ensure(accepted.is_empty(), || {
                let names: Vec<String> = accepted
                    .iter()
                    .map(|c| format!("{} row {}", compiled.cs.column_meta(c.column).name, c.row))
                    .collect();
                format!("{}: {} tamper(s) accepted: {}", op.name, accepted.len(), names.join(", "))
            })?;
            done += 10;
        }
        total += done;
    }
    Ok(format!("{total} single-cell tampers over {} operators, 0 accepted", operators().len()))
}

// ---------------------------------------------------------------- criterion 5

fn expect_all(label: &str, got: &[Expectation], expected: &[usize]) -> Result<(), String> {
    ensure(got.len() == expected.len(), || format!("{label}: {} items, wanted {}", got.len(), expected.len()))?;
    for (e, &want) in got.iter().zip(expected) {
        ensure(e.expected == want && e.counted == want, || {
            format!("{label} {}: formula {want}, report expected {} counted {}", e.item, e.expected, e.counted)
        })?;
    }
    Ok(())
}

fn constraint_counts() -> Check {
    let mut checked = 0;
    // batched range check: max(|P|, |Q|) rows
    for (p, q) in [(1, 1), (16, 256), (256, 16), (100, 100), (7, 300), (300, 7), (64, 65), (1, 512), (512, 2), (33, 32)] {
        let mut b = CircuitBuilder::<Fr>::new();
        BatchRangeCheckConfig::configure(&mut b, "batch", p, q as u64 - 1).map_err(|e| e.to_string())?;
        let cs = b.finish(1).map_err(|e| e.to_string())?;
        expect_all(&format!("batch({p},{q})"), &batch_range_expectations(&count_constraints(&cs), "batch", p, q), &[p.max(q)])?;
        checked += 1;
    }
    // u8 path of 64-bit values: 8|P| lookups, |P| decompositions, |P| shifts
    for p in [1, 2, 3, 10, 17, 64, 100, 255, 256, 1000] {
        let mut b = CircuitBuilder::<Fr>::new();
        let x = b.cs.advice("x", ColumnRole::Input, p).map_err(|e| e.to_string())?;
        let t = b.cs.advice("t", ColumnRole::Input, p).map_err(|e| e.to_string())?;
        LessThanConfig::configure(&mut b, "lt", x.cur(), t.cur(), p, 64).map_err(|e| e.to_string())?;
        let cs = b.finish(256).map_err(|e| e.to_string())?;
        expect_all(&format!("u8({p})"), &less_than_expectations(&count_constraints(&cs), "lt", p, 64), &[8 * p, p, p])?;
        checked += 1;
    }
    let schema = op_schema();
    let budgets = |spec: &str| parse_budgets(spec).expect("budget literal");
    let sort = parse("SELECT a, b FROM R ORDER BY a", &schema).map_err(|e| e.to_string())?;
    let group = parse("SELECT a, SUM(b) FROM R GROUP BY a", &schema).map_err(|e| e.to_string())?;
    for d in [1usize, 2, 4, 8, 16, 32, 64, 128, 256, 512] {
        let c = compile::<Fr>(&sort, &budgets(&format!("R={d}"))).map_err(|e| e.to_string())?;
        expect_all(&format!("sort({d})"), &sort_expectations(&count_constraints(&c.cs), "step1/sort", d), &[d, d - 1])?;
        let c = compile::<Fr>(&group, &budgets(&format!("R={d}"))).map_err(|e| e.to_string())?;
        expect_all(&format!("group({d})"), &group_by_expectations(&count_constraints(&c.cs), "step1/group", d), &[d, d - 1, 2 * d])?;
        checked += 2;
    }
    // join: permutation, dedup, strict sortedness, equality, source
    let pkfk = parse("SELECT R.a, K.v FROM R, K WHERE R.a = K.k", &schema).map_err(|e| e.to_string())?;
    let general = parse("SELECT R.b, S.b FROM R, S WHERE R.a = S.a", &schema).map_err(|e| e.to_string())?;
    for (t1, t2) in [(1, 1), (2, 1), (1, 2), (4, 4), (8, 2), (2, 8), (16, 16), (32, 8), (8, 32), (64, 64)] {
        let c = compile::<Fr>(&pkfk, &budgets(&format!("R={t1},K={t2}"))).map_err(|e| e.to_string())?;
        let r = join_expectations(&count_constraints(&c.cs), "step2/join", t1, t2, JoinMode::Pkfk);
        expect_all(&format!("pkfk({t1},{t2})"), &r, &[t1 + t2, t1 + t2, t1 + t2 - 1, t1, t1])?;
        let c = compile::<Fr>(&general, &budgets(&format!("R={t1},S={t2}"))).map_err(|e| e.to_string())?;
        let r = join_expectations(&count_constraints(&c.cs), "step2/join", t1, t2, JoinMode::General);
        expect_all(&format!("general({t1},{t2})"), &r, &[t1 + t2, 2 * (t1 + t2), 2 * (t1 + t2 - 1), t1 * t2, t1 * t2])?;
        checked += 2;
    }
    Ok(format!("{checked} size configurations, every count exact"))
}

// ---------------------------------------------------------------- criterion 6

fn tpch_suite() -> Check {
    let schema = tpch::schema();
    let db = tpch::generate(1000, 6);
    let root = commit_database(&db).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (name, sql) in tpch::queries() {
        let t = Instant::now();
        let plan = parse(sql, &schema).map_err(|e| format!("{name}: {e}"))?;
        let budgets = default_budgets(&plan, &db).map_err(|e| e.to_string())?;
        let out = prove(sql, &schema, &db, &budgets, None).map_err(|e| format!("{name}: {e}"))?;
        let expected = evaluate_reference(&plan, &db).map_err(|e| e.to_string())?;
        ensure(out.bundle.result.rows == expected.rows, || format!("{name}: result differs from the reference"))?;
        ensure(!expected.rows.is_empty(), || format!("{name}: empty result"))?;
        verify(&out.bundle.public(), &root, false).map_err(|e| format!("{name} public: {e}"))?;
        verify(&out.bundle, &root, true).map_err(|e| format!("{name} full: {e}"))?;
        let v: Fr = out.bundle.instance[1][0].parse().map_err(|e: Error| e.to_string())?;
        let tampered = out.bundle.with_instance_cell(1, 0, &(v + Fr::one()).to_string()).map_err(|e| e.to_string())?;
        for full in [false, true] {
            let r = verify(&tampered, &root, full);
            ensure(matches!(r, Err(Error::ConstraintFailure(_))), || format!("{name}: tampered output gave {r:?}"))?;
        }
        lines.push(format!("{name} {} rows {:.1}s", expected.rows.len(), t.elapsed().as_secs_f64()));
    }
    Ok(lines.join(", "))
}

// ---------------------------------------------------------------- criterion 7

fn obliviousness() -> Check {
    let schema = tpch::schema();
    let lineitems = 200;
    let budgets: Budgets = tpch::sizes(lineitems).iter().map(|&(t, n)| (t.to_string(), n.next_power_of_two())).collect();
    let mut grown = budgets.clone();
    grown.insert("lineitem".into(), 2 * budgets["lineitem"]);
    let mut checked = 0;
    for (name, sql) in tpch::queries() {
        let plan = parse(sql, &schema).map_err(|e| e.to_string())?;
        let scanned: Budgets = plonkql::compile::scanned_tables(&plan).into_iter().map(|t| (t.clone(), budgets[&t])).collect();
        let compiled = compile::<Fr>(&plan, &scanned).map_err(|e| e.to_string())?;
        let mut first = None;
        for seed in 0..20 {
            let db = tpch::generate(lineitems, 1000 + seed);
            let w = generate_witness(&compiled, &db, &mut query_transcript(None)).map_err(|e| format!("{name} seed {seed}: {e}"))?;
            match &first {
                None => first = Some(w.digest),
                Some(d) => ensure(*d == w.digest, || format!("{name}: digest changed with database seed {seed}"))?,
            }
        }
        let big: Budgets = plonkql::compile::scanned_tables(&plan).into_iter().map(|t| (t.clone(), grown[&t])).collect();
        let compiled = compile::<Fr>(&plan, &big).map_err(|e| e.to_string())?;
        let w = generate_witness(&compiled, &tpch::generate(lineitems, 1000), &mut query_transcript(None)).map_err(|e| e.to_string())?;
        ensure(first.as_ref() != Some(&w.digest), || format!("{name}: digest ignores the budget"))?;
        checked += 1;
    }
    Ok(format!("{checked} queries, 20 databases each share one digest; doubled budgets change it"))
}

// ---------------------------------------------------------------- criterion 8

fn commitment_binding() -> Check {
    let base = tpch::generate(200, 8);
    let root = commit_database(&base).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let names: Vec<String> = base.tables.keys().cloned().collect();
    let mut edited = None;
    for i in 0..1000 {
        let mut db = base.clone();
        let name = &names[rng.gen_range(0..names.len())];
        let t = db.tables.get_mut(name).expect("table");
        let r = rng.gen_range(0..t.rows.len());
        let c = rng.gen_range(0..t.columns.len());
        t.rows[r][c] ^= rng.gen_range(1..1u128 << 20);
        let other = commit_database(&db).map_err(|e| e.to_string())?;
        ensure(other.root != root.root, || format!("edit {i} kept the root"))?;
        if edited.is_none() && name == "lineitem" {
            edited = Some(db);
        }
    }
    let fake = edited.ok_or("no lineitem edit drawn")?;
    let schema = tpch::schema();
    let sql = tpch::queries()[0].1;
    let plan = parse(sql, &schema).map_err(|e| e.to_string())?;
    let budgets = default_budgets(&plan, &base).map_err(|e| e.to_string())?;

    let honest = prove(sql, &schema, &base, &budgets, None).map_err(|e| e.to_string())?.bundle;
    verify(&honest, &root, true).map_err(|e| format!("honest bundle: {e}"))?;
    let fake_root = commit_database(&fake).map_err(|e| e.to_string())?;
    let r = verify(&honest.public(), &fake_root, false);
    ensure(matches!(r, Err(Error::CommitmentMismatch(_))), || format!("mismatched root gave {r:?}"))?;

    // a prover holding a different database claims the published root
    let mut forged = prove(sql, &schema, &fake, &budgets, None).map_err(|e| e.to_string())?.bundle;
    forged.commitment = root.clone();
    let r = verify(&forged, &root, true);
    ensure(matches!(r, Err(Error::CommitmentMismatch(_))), || format!("forged bundle gave {r:?}"))?;
    Ok("1000 single edits all move the root; mismatched and forged bindings rejected".into())
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        run(1, "gadget brute force", secs(10), gadget_brute_force),
        run(2, "permutation argument equivalence", secs(10), permutation_equivalence),
        run(3, "operator oracle equivalence", secs(120), operator_oracles),
        run(4, "soundness probes", secs(120), soundness_probes),
        run(5, "constraint count reproduction", secs(60), constraint_counts),
        run(6, "TPC-H-like end to end", secs(600), tpch_suite),
        run(7, "obliviousness", secs(300), obliviousness),
        run(8, "commitment binding", secs(120), commitment_binding),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
