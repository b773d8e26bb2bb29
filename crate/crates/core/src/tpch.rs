//! A small TPC-H-flavoured schema, a seeded data generator and six queries
//! mirroring the operator mixes of Q1, Q3, Q5, Q8, Q9 and Q18.
//!
//! Dates are day numbers from 0 (about seven years), money has two
//! decimals. Categorical strings become small integer codes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Database, Relation, Schema};

pub const SCHEMA_JSON: &str = r#"{"tables":[
  {"name":"lineitem","columns":[
    {"name":"l_orderkey"},{"name":"l_partkey"},{"name":"l_suppkey"},
    {"name":"l_quantity"},{"name":"l_extendedprice","scale":2},{"name":"l_discount","scale":2},
    {"name":"l_returnflag"},{"name":"l_linestatus"},{"name":"l_shipdate"}],
   "foreign_keys":[{"column":"l_orderkey","references":"orders"},{"column":"l_partkey","references":"part"},
                   {"column":"l_suppkey","references":"supplier"}]},
  {"name":"orders","columns":[
    {"name":"o_orderkey"},{"name":"o_custkey"},{"name":"o_totalprice","scale":2},
    {"name":"o_orderdate"},{"name":"o_year"},{"name":"o_shippriority"}],
   "primary_key":"o_orderkey","foreign_keys":[{"column":"o_custkey","references":"customer"}]},
  {"name":"customer","columns":[{"name":"c_custkey"},{"name":"c_nationkey"},{"name":"c_mktsegment"}],
   "primary_key":"c_custkey","foreign_keys":[{"column":"c_nationkey","references":"nation"}]},
  {"name":"supplier","columns":[{"name":"s_suppkey"},{"name":"s_nationkey"}],
   "primary_key":"s_suppkey","foreign_keys":[{"column":"s_nationkey","references":"nation"}]},
  {"name":"part","columns":[{"name":"p_partkey"},{"name":"p_type"}],"primary_key":"p_partkey"},
  {"name":"nation","columns":[{"name":"n_nationkey"},{"name":"n_regionkey"}],"primary_key":"n_nationkey"}
]}"#;

pub fn schema() -> Schema {
    Schema::from_json(SCHEMA_JSON).expect("built-in schema parses")
}

/// Table sizes for a lineitem count; the other tables scale down from it.
pub fn sizes(lineitems: usize) -> [(&'static str, usize); 6] {
    let orders = (lineitems / 4).max(1);
    [
        ("lineitem", lineitems),
        ("orders", orders),
        ("customer", (orders / 5).max(1)),
        ("supplier", (lineitems / 50).max(1)),
        ("part", (lineitems / 10).max(1)),
        ("nation", 25),
    ]
}

/// Seeded database with `lineitems` line items and referentially intact
/// foreign keys.
pub fn generate(lineitems: usize, seed: u64) -> Database {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [_, (_, n_orders), (_, n_cust), (_, n_supp), (_, n_part), (_, n_nation)] = sizes(lineitems);
    let s = schema();
    let rel = |name: &str| Relation::new(name, s.table(name).expect("table").columns.iter().map(|c| c.name.clone()).collect());

    let mut nation = rel("nation");
    nation.rows = (0..n_nation as u128).map(|k| vec![k, k % 5]).collect();
    let mut customer = rel("customer");
    customer.rows = (0..n_cust as u128).map(|k| vec![k, rng.gen_range(0..n_nation as u128), rng.gen_range(0..5)]).collect();
    let mut supplier = rel("supplier");
    supplier.rows = (0..n_supp as u128).map(|k| vec![k, rng.gen_range(0..n_nation as u128)]).collect();
    let mut part = rel("part");
    part.rows = (0..n_part as u128).map(|k| vec![k, rng.gen_range(0..6)]).collect();

    let mut orders = rel("orders");
    let mut dates = Vec::with_capacity(n_orders);
    for k in 0..n_orders as u128 {
        let date: u128 = rng.gen_range(0..2557);
        dates.push(date);
        orders.rows.push(vec![k, rng.gen_range(0..n_cust as u128), 0, date, 1992 + date / 365, rng.gen_range(0..3)]);
    }
    let mut lineitem = rel("lineitem");
    for i in 0..lineitems {
        // every order gets at least one line
        let o = if i < n_orders { i } else { rng.gen_range(0..n_orders) };
        let qty: u128 = rng.gen_range(1..51);
        let price: u128 = qty * rng.gen_range(90_000..200_000) / 100;
        let ship = dates[o] + rng.gen_range(1..122);
        lineitem.rows.push(vec![
            o as u128,
            rng.gen_range(0..n_part as u128),
            rng.gen_range(0..n_supp as u128),
            qty,
            price,
            rng.gen_range(0..11),
            rng.gen_range(0..3),
            u128::from(ship > 2190),
            ship,
        ]);
        orders.rows[o][2] += price;
    }
    let mut db = Database::new();
    for t in [lineitem, orders, customer, supplier, part, nation] {
        db.insert(t);
    }
    db
}

/// (label, SQL) for the six benchmark shapes.
pub fn queries() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "q1",
            "SELECT l_returnflag, l_linestatus, SUM(l_quantity) AS sum_qty, SUM(l_extendedprice) AS sum_price, \
             AVG(l_quantity) AS avg_qty, COUNT(*) AS count_order \
             FROM lineitem WHERE l_shipdate <= 2400 \
             GROUP BY l_returnflag, l_linestatus ORDER BY l_returnflag, l_linestatus",
        ),
        (
            "q3",
            "SELECT l_orderkey, o_orderdate, SUM(l_extendedprice * l_discount) AS revenue \
             FROM customer, orders, lineitem \
             WHERE c_mktsegment = 1 AND c_custkey = o_custkey AND l_orderkey = o_orderkey AND o_orderdate < 1500 \
             GROUP BY l_orderkey, o_orderdate ORDER BY revenue DESC",
        ),
        (
            "q5",
            "SELECT n_nationkey, SUM(l_extendedprice) AS revenue \
             FROM lineitem, orders, customer, nation \
             WHERE l_orderkey = o_orderkey AND o_custkey = c_custkey AND c_nationkey = n_nationkey \
             AND n_regionkey = 2 AND o_orderdate >= 365 AND o_orderdate < 730 \
             GROUP BY n_nationkey ORDER BY revenue DESC",
        ),
        (
            "q8",
            "SELECT o_year, SUM(l_extendedprice) AS volume, COUNT(*) AS lines \
             FROM part, lineitem, orders \
             WHERE p_partkey = l_partkey AND l_orderkey = o_orderkey AND p_type = 3 \
             GROUP BY o_year ORDER BY o_year",
        ),
        (
            "q9",
            "SELECT n_nationkey, o_year, SUM(l_extendedprice * l_discount) AS profit \
             FROM lineitem, part, supplier, orders, nation \
             WHERE l_partkey = p_partkey AND l_suppkey = s_suppkey AND l_orderkey = o_orderkey \
             AND s_nationkey = n_nationkey AND p_type >= 4 \
             GROUP BY n_nationkey, o_year ORDER BY n_nationkey, o_year DESC",
        ),
        (
            "q18",
            "SELECT l_orderkey, SUM(l_quantity) AS total_qty, MAX(l_quantity) AS max_qty \
             FROM lineitem, orders WHERE l_orderkey = o_orderkey AND o_totalprice > 2500 \
             GROUP BY l_orderkey ORDER BY total_qty DESC",
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::{parse, JoinMode, Op};

    #[test]
    fn generation_is_seeded() {
        assert_eq!(generate(100, 1), generate(100, 1));
        assert_ne!(generate(100, 1), generate(100, 2));
        let db = generate(1000, 0);
        assert_eq!(db.table("lineitem").unwrap().row_count(), 1000);
        assert_eq!(db.table("orders").unwrap().row_count(), 250);
    }

    #[test]
    fn foreign_keys_resolve() {
        let db = generate(200, 5);
        let orders = db.table("orders").unwrap().row_count() as u128;
        assert!(db.table("lineitem").unwrap().rows.iter().all(|r| r[0] < orders));
        let totals: u128 = db.table("orders").unwrap().column(2).sum();
        let prices: u128 = db.table("lineitem").unwrap().column(4).sum();
        assert_eq!(totals, prices);
    }

    #[test]
    fn every_query_plans_with_key_joins_only() {
        let s = schema();
        for (name, sql) in queries() {
            let plan = parse(sql, &s).unwrap_or_else(|e| panic!("{name}: {e}"));
            for step in &plan.steps {
                if let Op::Join { mode, .. } = step.op {
                    assert_eq!(mode, JoinMode::Pkfk, "{name}");
                }
            }
        }
    }
}
