use std::collections::BTreeSet;

use super::{bit, composite, eval_rows, KeyPart, TableRef};
use crate::circuit::{not, Assignment, Cell, ColumnId, ColumnRole, Expr, Lookup};
use crate::field::PrimeField;
use crate::gadgets::{rotate, CircuitBuilder, IsZeroConfig, LessThanConfig, ShuffleConfig};
use crate::sql::JoinMode;
use crate::{Error, Result};

/// A permuted copy of one join input with a per-row "has a partner" flag
/// `p`, constrained boolean and zero on dummy rows.
#[derive(Clone, Debug)]
struct Side {
    input: TableRef,
    perm: TableRef,
    p: ColumnId,
    key: usize,
}

impl Side {
    fn configure<F: PrimeField>(b: &mut CircuitBuilder<F>, name: &str, input: &TableRef, key: usize) -> Result<Self> {
        let rows = input.rows;
        let perm = TableRef::declare(b, name, input.cols.len(), rows, ColumnRole::Internal)?;
        ShuffleConfig::configure(b, &format!("{name}/perm"), &input.tuple(), &perm.tuple(), rows)?;
        let p = b.cs.advice(&format!("{name}/p"), ColumnRole::Internal, rows)?;
        let q = b.cs.selector(&format!("{name}/q"), 0..rows)?;
        b.cs.gate(
            &format!("{name}/flag"),
            q,
            vec![p.cur() * not(p.cur()), p.cur() * not(perm.valid.cur())],
        )?;
        Ok(Side { input: input.clone(), perm, p, key })
    }

    fn key<F: PrimeField>(&self) -> Expr<F> {
        self.perm.cols[self.key].cur()
    }

    /// Copies the input unchanged and sets `p` from the partner keys.
    fn assign<F: PrimeField>(&self, asg: &mut Assignment<F>, partners: &BTreeSet<F>) -> Result<()> {
        let rows = self.input.read(asg);
        self.perm.write(asg, &rows)?;
        for (r, row) in rows.iter().enumerate() {
            let matched = !row[0].is_zero() && partners.contains(&row[1 + self.key]);
            asg.set(self.p, r, bit(matched))?;
        }
        Ok(())
    }

    fn rows<F: PrimeField>(&self, asg: &Assignment<F>) -> Vec<(bool, bool, F)> {
        (0..self.perm.rows)
            .map(|r| {
                let valid = !asg.get(self.perm.valid, r).is_zero();
                let p = !asg.get(self.p, r).is_zero();
                (valid, p, asg.get(self.perm.cols[self.key], r))
            })
            .collect()
    }

    fn valid_keys<F: PrimeField>(&self, asg: &Assignment<F>) -> BTreeSet<F> {
        self.input.read_valid(asg).into_iter().map(|r| r[self.key]).collect()
    }
}

/// Shows the key set of `a`'s unmatched valid rows is disjoint from the key
/// set of all of `b`'s valid rows.
///
/// Both sets are deduplicated into one merged column pair (`a`'s part on
/// rows `0..Ba`, `b`'s on `Ba..Ba+Bb`) by lookups; a sorted permutation of
/// the merged rows then has strictly increasing valid keys.
#[derive(Clone, Debug)]
struct Disjoint<F> {
    merged: TableRef,
    sorted: TableRef,
    strict: LessThanConfig<F>,
    split: usize,
}

impl<F: PrimeField> Disjoint<F> {
    fn configure(b: &mut CircuitBuilder<F>, name: &str, a: &Side, other: &Side) -> Result<Self> {
        let (ba, bb) = (a.perm.rows, other.perm.rows);
        let len = ba + bb;
        let merged = TableRef::declare(b, &format!("{name}/dedup"), 1, len, ColumnRole::Internal)?;
        let q_m = b.cs.selector(&format!("{name}/q_dedup"), 0..len)?;
        let mv = merged.valid.cur();
        b.cs.gate(
            &format!("{name}/dedup"),
            q_m,
            vec![mv.clone() * not(mv.clone()), not(mv) * merged.cols[0].cur()],
        )?;
        let sel_a = b.cs.selector(&format!("{name}/q_part_a"), 0..ba)?;
        let mut part_b = vec![F::zero(); len];
        part_b[ba..].iter_mut().for_each(|v| *v = F::one());
        let sel_b = b.cs.fixed(&format!("{name}/q_part_b"), ColumnRole::Selector, part_b)?;
        let q_a = b.cs.selector(&format!("{name}/q_a"), 0..ba)?;
        b.cs.add_lookup(Lookup {
            name: format!("{name}/dedup_a"),
            selector: q_a,
            condition: Some(a.perm.valid.cur() * not(a.p.cur())),
            inputs: vec![Expr::one(), a.key()],
            table: merged.columns(),
            table_selector: Some(sel_a),
        })?;
        let q_b = b.cs.selector(&format!("{name}/q_b"), 0..bb)?;
        b.cs.add_lookup(Lookup {
            name: format!("{name}/dedup_b"),
            selector: q_b,
            condition: Some(other.perm.valid.cur()),
            inputs: vec![Expr::one(), other.key()],
            table: merged.columns(),
            table_selector: Some(sel_b),
        })?;
        let sorted = TableRef::declare(b, &format!("{name}/sorted"), 1, len, ColumnRole::Internal)?;
        ShuffleConfig::configure(b, &format!("{name}/sorted/perm"), &merged.tuple(), &sorted.tuple(), len)?;
        let (key, bits) = composite(&sorted.valid.cur(), &[KeyPart::asc(sorted.cols[0].cur())]);
        let strict = LessThanConfig::configure(b, &format!("{name}/strict"), key.clone(), rotate(&key, 1), len - 1, bits)?;
        let sv_next = sorted.valid.next();
        b.cs.gate(
            &format!("{name}/strict"),
            strict.selector,
            vec![sv_next.clone() * strict.ge(), sv_next * not(sorted.valid.cur())],
        )?;
        Ok(Disjoint { merged, sorted, strict, split: ba })
    }

    fn assign(&self, asg: &mut Assignment<F>, a: &Side, other: &Side) -> Result<()> {
        let unmatched: BTreeSet<F> = a.rows(asg).into_iter().filter(|&(v, p, _)| v && !p).map(|r| r.2).collect();
        let all: BTreeSet<F> = other.rows(asg).into_iter().filter(|r| r.0).map(|r| r.2).collect();
        if unmatched.intersection(&all).next().is_some() {
            return Err(Error::WitnessInfeasible("join partner flags leave a matching key unmarked".into()));
        }
        let mut rows: Vec<Vec<F>> = vec![vec![F::zero(), F::zero()]; self.merged.rows];
        for (i, k) in unmatched.iter().enumerate() {
            rows[i] = vec![F::one(), *k];
        }
        for (i, k) in all.iter().enumerate() {
            rows[self.split + i] = vec![F::one(), *k];
        }
        self.merged.write(asg, &rows)?;
        let mut sorted: Vec<Vec<F>> = unmatched.union(&all).map(|k| vec![F::one(), *k]).collect();
        sorted.resize(self.sorted.rows, vec![F::zero(), F::zero()]);
        self.sorted.write(asg, &sorted)?;
        self.strict.assign(asg)
    }
}

/// Every row of `a` with `p = 1` has a key held by some row of `b` with `p = 1`.
fn partner_lookup<F: PrimeField>(b: &mut CircuitBuilder<F>, name: &str, a: &Side, other: &Side) -> Result<()> {
    let q = b.cs.selector(&format!("{name}/q"), 0..a.perm.rows)?;
    let sel = b.cs.selector(&format!("{name}/q_table"), 0..other.perm.rows)?;
    b.cs.add_lookup(Lookup {
        name: name.to_string(),
        selector: q,
        condition: Some(a.p.cur()),
        inputs: vec![Expr::one(), a.key()],
        table: vec![other.p, other.perm.cols[other.key]],
        table_selector: Some(sel),
    })?;
    Ok(())
}

#[derive(Clone, Debug)]
enum Pairing<F> {
    /// Right side has unique keys: each left row carries its partner's
    /// attributes `h`, checked by a lookup into the marked right rows.
    Pkfk { h: Vec<ColumnId>, left_out: Vec<ColumnId> },
    /// Every (left, right) pair gets a row holding copies of both tuples.
    General {
        left: Vec<ColumnId>,
        right: Vec<ColumnId>,
        same: IsZeroConfig<F>,
        products: usize,
    },
}

/// Equi-join `left.cols[left_key] = right.cols[right_key]`; output columns
/// are the left's followed by the right's.
///
/// Pkfk mode relies on the right key being unique, which the schema's
/// primary key declares and witness generation checks; output rows stay at
/// the left's (permuted) positions. General mode emits one row per
/// (left, right) pair.
#[derive(Clone, Debug)]
pub struct JoinConfig<F> {
    pub out: TableRef,
    left: Side,
    right: Side,
    unmatched_left: Disjoint<F>,
    unmatched_right: Option<Disjoint<F>>,
    pairing: Pairing<F>,
}

impl<F: PrimeField> JoinConfig<F> {
    pub fn configure(
        b: &mut CircuitBuilder<F>,
        name: &str,
        left: &TableRef,
        right: &TableRef,
        left_key: usize,
        right_key: usize,
        mode: JoinMode,
    ) -> Result<Self> {
        let l = Side::configure(b, &format!("{name}/left"), left, left_key)?;
        let r = Side::configure(b, &format!("{name}/right"), right, right_key)?;
        let unmatched_left = Disjoint::configure(b, &format!("{name}/left_unmatched"), &l, &r)?;
        // a marked right row has a marked left partner; in pkfk mode the
        // source lookup already gives the converse
        partner_lookup(b, &format!("{name}/right_partner"), &r, &l)?;
        if mode == JoinMode::General {
            partner_lookup(b, &format!("{name}/left_partner"), &l, &r)?;
        }
        let (b1, b2) = (left.rows, right.rows);
        let (m1, m2) = (left.cols.len(), right.cols.len());
        match mode {
            JoinMode::Pkfk => {
                let h = (0..m2)
                    .map(|j| b.cs.advice(&format!("{name}/partner{j}"), ColumnRole::Internal, b1))
                    .collect::<Result<Vec<_>>>()?;
                let left_out = (0..m1)
                    .map(|j| b.cs.advice(&format!("{name}/out{j}"), ColumnRole::Internal, b1))
                    .collect::<Result<Vec<_>>>()?;
                let q = b.cs.selector(&format!("{name}/q"), 0..b1)?;
                let p1 = l.p.cur();
                let mut cs = vec![p1.clone() * (l.key() - h[right_key].cur())];
                cs.extend(h.iter().map(|c| not(p1.clone()) * c.cur()));
                cs.extend(left_out.iter().zip(&l.perm.cols).map(|(o, c)| o.cur() - p1.clone() * c.cur()));
                b.cs.gate(&format!("{name}/pair"), q, cs)?;
                let sel_r = b.cs.selector(&format!("{name}/q_source"), 0..b2)?;
                let mut table = vec![r.p];
                table.extend(&r.perm.cols);
                let mut inputs = vec![Expr::one()];
                inputs.extend(h.iter().map(|c| c.cur()));
                b.cs.add_lookup(Lookup {
                    name: format!("{name}/source"),
                    selector: q,
                    condition: Some(p1),
                    inputs,
                    table,
                    table_selector: Some(sel_r),
                })?;
                let out = TableRef { valid: l.p, cols: left_out.iter().chain(&h).copied().collect(), rows: b1 };
                Ok(JoinConfig { out, left: l, right: r, unmatched_left, unmatched_right: None, pairing: Pairing::Pkfk { h, left_out } })
            }
            JoinMode::General => {
                let unmatched_right = Disjoint::configure(b, &format!("{name}/right_unmatched"), &r, &l)?;
                let n = b1.checked_mul(b2).ok_or_else(|| Error::UnsupportedFeature("join output size overflows".into()))?;
                // pair row i * b2 + j holds (p, cols) of left row i and right row j
                let left_cols: Vec<ColumnId> = std::iter::once(l.p).chain(l.perm.cols.iter().copied()).collect();
                let right_cols: Vec<ColumnId> = std::iter::once(r.p).chain(r.perm.cols.iter().copied()).collect();
                let lp = (0..=m1)
                    .map(|j| b.cs.advice(&format!("{name}/pair_l{j}"), ColumnRole::Internal, n))
                    .collect::<Result<Vec<_>>>()?;
                let rp = (0..=m2)
                    .map(|j| b.cs.advice(&format!("{name}/pair_r{j}"), ColumnRole::Internal, n))
                    .collect::<Result<Vec<_>>>()?;
                for i in 0..b1 {
                    for j in 0..b2 {
                        let row = i * b2 + j;
                        for (src, dst) in left_cols.iter().zip(&lp) {
                            b.cs.copy(Cell::new(*src, i), Cell::new(*dst, row))?;
                        }
                        for (src, dst) in right_cols.iter().zip(&rp) {
                            b.cs.copy(Cell::new(*src, j), Cell::new(*dst, row))?;
                        }
                    }
                }
                let same = IsZeroConfig::configure(b, &format!("{name}/key_eq"), lp[1 + left_key].cur(), rp[1 + right_key].cur(), n)?;
                let out = TableRef::declare(b, name, m1 + m2, n, ColumnRole::Internal)?;
                let ov = out.valid.cur();
                let mut cs = vec![ov.clone() - lp[0].cur() * rp[0].cur() * same.flag()];
                for (o, c) in out.cols.iter().zip(lp[1..].iter().chain(&rp[1..])) {
                    cs.push(o.cur() - ov.clone() * c.cur());
                }
                b.cs.gate(&format!("{name}/emit"), same.selector, cs)?;
                let pairing = Pairing::General { left: lp, right: rp, same, products: n };
                Ok(JoinConfig { out, left: l, right: r, unmatched_left, unmatched_right: Some(unmatched_right), pairing })
            }
        }
    }

    pub fn assign(&self, asg: &mut Assignment<F>) -> Result<()> {
        let left_keys = self.left.valid_keys(asg);
        let right_keys = self.right.valid_keys(asg);
        self.left.assign(asg, &right_keys)?;
        self.right.assign(asg, &left_keys)?;
        self.unmatched_left.assign(asg, &self.left, &self.right)?;
        if let Some(d) = &self.unmatched_right {
            d.assign(asg, &self.right, &self.left)?;
        }
        match &self.pairing {
            Pairing::Pkfk { h, left_out } => {
                let right_rows = self.right.perm.read(asg);
                let mut partner = std::collections::BTreeMap::new();
                for r in right_rows.iter().filter(|r| !r[0].is_zero()) {
                    if partner.insert(r[1 + self.right.key], r[1..].to_vec()).is_some() {
                        return Err(Error::WitnessInfeasible("key-side join input has duplicate keys".into()));
                    }
                }
                let left_rows = self.left.perm.read(asg);
                for (i, row) in left_rows.iter().enumerate() {
                    let matched = !asg.get(self.left.p, i).is_zero();
                    let hv = if matched { partner[&row[1 + self.left.key]].clone() } else { vec![F::zero(); h.len()] };
                    for (c, v) in h.iter().zip(hv) {
                        asg.set(*c, i, v)?;
                    }
                    for (j, c) in left_out.iter().enumerate() {
                        asg.set(*c, i, if matched { row[1 + j] } else { F::zero() })?;
                    }
                }
                Ok(())
            }
            Pairing::General { left, right, same, products } => {
                let b2 = self.right.perm.rows;
                let lsrc: Vec<ColumnId> = std::iter::once(self.left.p).chain(self.left.perm.cols.iter().copied()).collect();
                let rsrc: Vec<ColumnId> = std::iter::once(self.right.p).chain(self.right.perm.cols.iter().copied()).collect();
                for row in 0..*products {
                    let (i, j) = (row / b2, row % b2);
                    for (s, d) in lsrc.iter().zip(left) {
                        asg.set(*d, row, asg.get(*s, i))?;
                    }
                    for (s, d) in rsrc.iter().zip(right) {
                        asg.set(*d, row, asg.get(*s, j))?;
                    }
                }
                same.assign(asg)?;
                let flags = eval_rows(asg, &same.flag(), *products);
                let mut out = Vec::with_capacity(*products);
                for (row, e) in flags.into_iter().enumerate() {
                    let v = asg.get(left[0], row) * asg.get(right[0], row) * e;
                    let mut r = vec![v];
                    r.extend(left[1..].iter().chain(&right[1..]).map(|c| v * asg.get(*c, row)));
                    out.push(r);
                }
                self.out.write(asg, &out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fr;
    use crate::gates::testutil::{seal, to_u128, Harness};
    use proptest::prelude::*;

    fn oracle(l: &[Vec<u128>], r: &[Vec<u128>], lk: usize, rk: usize) -> Vec<Vec<u128>> {
        let mut v: Vec<Vec<u128>> = l
            .iter()
            .flat_map(|a| r.iter().filter(move |b| a[lk] == b[rk]).map(move |b| a.iter().chain(b).copied().collect()))
            .collect();
        v.sort();
        v
    }

    fn run(l: Vec<Vec<u128>>, r: Vec<Vec<u128>>, mode: JoinMode) -> (Vec<Vec<u128>>, bool) {
        let mut h = Harness::new();
        let tl = h.scan(2, 4, l);
        let tr = h.scan(2, 4, r);
        let cfg = JoinConfig::configure(&mut h.b, "j", &tl, &tr, 0, 0, mode).unwrap();
        let (cs, mut asg) = h.finish();
        cfg.assign(&mut asg).unwrap();
        let ok = seal(&cs, &mut asg).is_ok();
        (to_u128(cfg.out.read_valid(&asg)), ok)
    }

    #[test]
    fn pkfk_worked_example() {
        let l = vec![vec![1, 100], vec![2, 200], vec![5, 500], vec![2, 201]];
        let r = vec![vec![1, 11], vec![2, 22], vec![3, 33]];
        let (out, ok) = run(l.clone(), r.clone(), JoinMode::Pkfk);
        assert!(ok);
        assert_eq!(out, oracle(&l, &r, 0, 0));
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn general_many_to_many() {
        let l = vec![vec![1, 100], vec![1, 101], vec![4, 400]];
        let r = vec![vec![1, 7], vec![1, 8], vec![9, 9]];
        let (out, ok) = run(l.clone(), r.clone(), JoinMode::General);
        assert!(ok);
        assert_eq!(out, oracle(&l, &r, 0, 0));
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn hiding_a_match_is_caught() {
        let mut h = Harness::new();
        let tl = h.scan(2, 4, vec![vec![1, 100], vec![2, 200]]);
        let tr = h.scan(2, 4, vec![vec![1, 11], vec![2, 22]]);
        let cfg = JoinConfig::configure(&mut h.b, "j", &tl, &tr, 0, 0, JoinMode::Pkfk).unwrap();
        let (cs, mut asg) = h.finish();
        cfg.assign(&mut asg).unwrap();
        // drop row 0 from the output and rebuild everything downstream honestly
        asg.set(cfg.left.p, 0, Fr::from_u64(0)).unwrap();
        let Pairing::Pkfk { h, left_out } = &cfg.pairing else { unreachable!() };
        for c in h.iter().chain(left_out) {
            asg.set(*c, 0, Fr::from_u64(0)).unwrap();
        }
        assert!(cfg.unmatched_left.assign(&mut asg, &cfg.left, &cfg.right).is_err());
        assert!(!seal(&cs, &mut asg).is_ok());
    }

    #[test]
    fn wrong_partner_is_caught() {
        let mut h = Harness::new();
        let tl = h.scan(2, 4, vec![vec![1, 100]]);
        let tr = h.scan(2, 4, vec![vec![1, 11], vec![2, 22]]);
        let cfg = JoinConfig::configure(&mut h.b, "j", &tl, &tr, 0, 0, JoinMode::Pkfk).unwrap();
        let (cs, mut asg) = h.finish();
        cfg.assign(&mut asg).unwrap();
        let Pairing::Pkfk { h, .. } = &cfg.pairing else { unreachable!() };
        asg.set(h[1], 0, Fr::from_u64(22)).unwrap();
        assert!(!seal(&cs, &mut asg).is_ok());
    }

    #[test]
    fn marking_an_unmatched_row_is_caught() {
        for mode in [JoinMode::Pkfk, JoinMode::General] {
            let mut h = Harness::new();
            let tl = h.scan(2, 4, vec![vec![1, 100], vec![7, 700]]);
            let tr = h.scan(2, 4, vec![vec![1, 11], vec![3, 33]]);
            let cfg = JoinConfig::configure(&mut h.b, "j", &tl, &tr, 0, 0, mode).unwrap();
            let (cs, asg) = h.finish();
            let mut asg = asg;
            cfg.assign(&mut asg).unwrap();
            let mut bad = asg.clone();
            bad.set(cfg.right.p, 1, Fr::from_u64(1)).unwrap();
            assert!(!seal(&cs, &mut bad).is_ok(), "{mode:?} right");
            if mode == JoinMode::General {
                let mut bad = asg.clone();
                bad.set(cfg.left.p, 1, Fr::from_u64(1)).unwrap();
                assert!(!seal(&cs, &mut bad).is_ok(), "{mode:?} left");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn general_matches_nested_loop(
            l in prop::collection::vec((0u128..4, 0u128..9), 0..5),
            r in prop::collection::vec((0u128..4, 0u128..9), 0..5),
        ) {
            let l: Vec<Vec<u128>> = l.into_iter().map(|(a, b)| vec![a, b]).collect();
            let r: Vec<Vec<u128>> = r.into_iter().map(|(a, b)| vec![a, b]).collect();
            let mut h = Harness::new();
            let tl = h.scan(2, 4, l.clone());
            let tr = h.scan(2, 4, r.clone());
            let cfg = JoinConfig::configure(&mut h.b, "j", &tl, &tr, 0, 0, JoinMode::General).unwrap();
            let (cs, mut asg) = h.finish();
            cfg.assign(&mut asg).unwrap();
            prop_assert!(seal(&cs, &mut asg).is_ok());
            prop_assert_eq!(to_u128(cfg.out.read_valid(&asg)), oracle(&l, &r, 0, 0));
        }

        #[test]
        fn pkfk_matches_nested_loop(
            l in prop::collection::vec((0u128..5, 0u128..9), 0..5),
            r in prop::collection::btree_map(0u128..5, 0u128..9, 0..5),
        ) {
            let l: Vec<Vec<u128>> = l.into_iter().map(|(a, b)| vec![a, b]).collect();
            let r: Vec<Vec<u128>> = r.into_iter().map(|(a, b)| vec![a, b]).collect();
            let (out, ok) = run(l.clone(), r.clone(), JoinMode::Pkfk);
            prop_assert!(ok);
            prop_assert_eq!(out, oracle(&l, &r, 0, 0));
        }
    }
}
