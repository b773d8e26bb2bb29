use plonkql::commitment::commit_database;
use plonkql::compile::default_budgets;
use plonkql::pipeline::{prove, verify};
use plonkql::reference::evaluate_reference;
use plonkql::sql::parse;
use plonkql::tpch;

fn run_all(lineitems: usize, seed: u64, nonempty: bool) {
    let schema = tpch::schema();
    let db = tpch::generate(lineitems, seed);
    let root = commit_database(&db).unwrap();
    for (name, sql) in tpch::queries() {
        let plan = parse(sql, &schema).unwrap();
        let budgets = default_budgets(&plan, &db).unwrap();
        let t = std::time::Instant::now();
        let out = prove(sql, &schema, &db, &budgets, None).unwrap_or_else(|e| panic!("{name}: {e}"));
        let expected = evaluate_reference(&plan, &db).unwrap();
        assert_eq!(out.bundle.result.rows, expected.rows, "{name}");
        assert!(!nonempty || !expected.rows.is_empty(), "{name} selects nothing");
        verify(&out.bundle, &root, true).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(out.report.all_match(), "{name}\n{}", out.report);
        eprintln!("{name}: rows {} circuit {} in {:?}", expected.rows.len(), out.compiled.cs.row_count().unwrap(), t.elapsed());
    }
}

#[test]
fn six_queries_prove_and_verify_at_small_scale() {
    run_all(120, 11, false);
}

#[test]
fn six_queries_at_one_thousand_rows() {
    run_all(1000, 7, true);
}
