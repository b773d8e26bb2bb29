//! Merkle commitment to a database.
//!
//! Leaf encoding (version 1), hashed with SHA-256:
//! `"leaf" || u64 len(table) || table || u64 row || u64 arity || u64 value*`,
//! all integers big-endian. Leaves are ordered by table name, then row.
//! Interior nodes hash `"node" || left || right`; an odd level duplicates
//! its last node. An empty database commits to the empty-marker leaf.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Database, Relation};
use crate::{Error, Result};

pub const ENCODING_VERSION: u32 = 1;

pub type Hash = [u8; 32];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentRoot {
    /// Lowercase hex of the 32-byte root.
    pub root: String,
    pub leaf_count: usize,
    pub encoding_version: u32,
}

impl CommitmentRoot {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// `commitment.json` next to the database directory.
    pub fn default_path(db_dir: &Path) -> PathBuf {
        let dir = db_dir.components().as_path();
        match dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.join("commitment.json"),
            _ => PathBuf::from("commitment.json"),
        }
    }

    /// Errors with `CommitmentMismatch` unless `other` names the same root
    /// under the same encoding.
    pub fn ensure_matches(&self, other: &CommitmentRoot) -> Result<()> {
        if self.encoding_version != other.encoding_version {
            return Err(Error::CommitmentMismatch(format!(
                "encoding version {} differs from {}",
                self.encoding_version, other.encoding_version
            )));
        }
        if self.root != other.root || self.leaf_count != other.leaf_count {
            return Err(Error::CommitmentMismatch(format!("root {} differs from {}", self.root, other.root)));
        }
        Ok(())
    }
}

pub fn leaf_hash(table: &str, row: usize, values: &[u64]) -> Hash {
    let mut h = Sha256::new();
    h.update(b"leaf");
    h.update((table.len() as u64).to_be_bytes());
    h.update(table.as_bytes());
    h.update((row as u64).to_be_bytes());
    h.update((values.len() as u64).to_be_bytes());
    for v in values {
        h.update(v.to_be_bytes());
    }
    h.finalize().into()
}

pub fn empty_leaf() -> Hash {
    Sha256::digest(b"empty").into()
}

fn node(a: &Hash, b: &Hash) -> Hash {
    let mut h = Sha256::new();
    h.update(b"node");
    h.update(a);
    h.update(b);
    h.finalize().into()
}

fn row_u64s(rel: &Relation, r: usize) -> Result<Vec<u64>> {
    rel.rows[r]
        .iter()
        .map(|&v| u64::try_from(v).map_err(|_| Error::InvalidData(format!("{} row {r}: value exceeds 64 bits", rel.name))))
        .collect()
}

/// Leaf hashes of one table, in row order.
pub fn table_leaves(rel: &Relation) -> Result<Vec<Hash>> {
    (0..rel.rows.len()).map(|r| Ok(leaf_hash(&rel.name, r, &row_u64s(rel, r)?))).collect()
}

/// Leaf hashes of every table, ordered by table name.
pub fn database_leaves(db: &Database) -> Result<Vec<(String, Vec<Hash>)>> {
    db.tables.values().map(|rel| Ok((rel.name.clone(), table_leaves(rel)?))).collect()
}

/// Binary hash tree with every level stored, so single leaves can be
/// replaced by rehashing one path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleTree {
    levels: Vec<Vec<Hash>>,
}

impl MerkleTree {
    pub fn new(leaves: Vec<Hash>) -> Self {
        let leaves = if leaves.is_empty() { vec![empty_leaf()] } else { leaves };
        let mut levels = vec![leaves];
        while levels.last().expect("at least one level").len() > 1 {
            let cur = levels.last().expect("at least one level");
            let next = cur.chunks(2).map(|p| node(&p[0], p.get(1).unwrap_or(&p[0]))).collect();
            levels.push(next);
        }
        MerkleTree { levels }
    }

    pub fn root(&self) -> Hash {
        self.levels.last().expect("at least one level")[0]
    }

    pub fn leaf_count(&self) -> usize {
        self.levels[0].len()
    }

    /// Replaces leaf `index` and rehashes its path to the root.
    pub fn update(&mut self, mut index: usize, leaf: Hash) -> Result<()> {
        if index >= self.leaf_count() {
            return Err(Error::OutOfRange(format!("leaf {index} of {}", self.leaf_count())));
        }
        self.levels[0][index] = leaf;
        for l in 1..self.levels.len() {
            let below = &self.levels[l - 1];
            let left = index & !1;
            let h = node(&below[left], below.get(left + 1).unwrap_or(&below[left]));
            index /= 2;
            self.levels[l][index] = h;
        }
        Ok(())
    }
}

/// Root over leaves grouped by table; the groups must already be in table
/// name order.
pub fn commit_leaves(tables: &[(String, Vec<Hash>)]) -> CommitmentRoot {
    let leaves: Vec<Hash> = tables.iter().flat_map(|(_, l)| l.iter().copied()).collect();
    let leaf_count = leaves.len();
    CommitmentRoot { root: hex::encode(MerkleTree::new(leaves).root()), leaf_count, encoding_version: ENCODING_VERSION }
}

pub fn commit_database(db: &Database) -> Result<CommitmentRoot> {
    Ok(commit_leaves(&database_leaves(db)?))
}

/// A database tree that tracks where each table's leaves start, for cheap
/// single-row updates.
#[derive(Clone, Debug)]
pub struct DatabaseTree {
    tree: MerkleTree,
    offsets: Vec<(String, usize, usize)>,
    leaf_count: usize,
}

impl DatabaseTree {
    pub fn new(db: &Database) -> Result<Self> {
        let mut offsets = Vec::new();
        let mut leaves = Vec::new();
        for (name, l) in database_leaves(db)? {
            offsets.push((name, leaves.len(), l.len()));
            leaves.extend(l);
        }
        let leaf_count = leaves.len();
        Ok(DatabaseTree { tree: MerkleTree::new(leaves), offsets, leaf_count })
    }

    pub fn commitment(&self) -> CommitmentRoot {
        CommitmentRoot { root: hex::encode(self.tree.root()), leaf_count: self.leaf_count, encoding_version: ENCODING_VERSION }
    }

    /// Replaces the committed values of an existing row.
    pub fn update_row(&mut self, table: &str, row: usize, values: &[u64]) -> Result<()> {
        let (name, start, len) = self
            .offsets
            .iter()
            .find(|(n, _, _)| n == table)
            .ok_or_else(|| Error::InvalidData(format!("no committed table `{table}`")))?;
        if row >= *len {
            return Err(Error::OutOfRange(format!("row {row} of table `{table}` with {len} rows")));
        }
        let leaf = leaf_hash(name, row, values);
        self.tree.update(start + row, leaf)
    }
}

/// What the full verifier needs beyond the scan columns to rebuild the
/// root: leaf hashes of every table the query does not scan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Opening {
    pub tables: Vec<TableOpening>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TableOpening {
    /// Rows are the valid prefix of the query's scan of this table.
    Scanned { name: String },
    Hashed { name: String, leaves: Vec<String> },
}

impl Opening {
    pub fn new(db: &Database, scanned: &[String]) -> Result<Self> {
        let tables = db
            .tables
            .values()
            .map(|rel| {
                if scanned.iter().any(|s| s.eq_ignore_ascii_case(&rel.name)) {
                    Ok(TableOpening::Scanned { name: rel.name.clone() })
                } else {
                    Ok(TableOpening::Hashed { name: rel.name.clone(), leaves: table_leaves(rel)?.iter().map(hex::encode).collect() })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Opening { tables })
    }

    /// Rebuilds the root, taking scanned tables' rows from `scanned_rows`.
    pub fn recompute(&self, scanned_rows: impl Fn(&str) -> Result<Vec<Vec<u64>>>) -> Result<CommitmentRoot> {
        let mut groups = Vec::with_capacity(self.tables.len());
        for t in &self.tables {
            match t {
                TableOpening::Scanned { name } => {
                    let rows = scanned_rows(name)?;
                    groups.push((name.clone(), rows.iter().enumerate().map(|(r, v)| leaf_hash(name, r, v)).collect()));
                }
                TableOpening::Hashed { name, leaves } => {
                    let leaves = leaves
                        .iter()
                        .map(|h| {
                            let mut out = [0u8; 32];
                            hex::decode_to_slice(h, &mut out)
                                .map_err(|_| Error::InvalidData(format!("bad leaf hash `{h}` in opening of `{name}`")))?;
                            Ok(out)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    groups.push((name.clone(), leaves));
                }
            }
        }
        if groups.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::CommitmentMismatch("opening tables are not in name order".into()));
        }
        Ok(commit_leaves(&groups))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn db() -> Database {
        let mut db = Database::new();
        let mut t = Relation::new("T", vec!["a".into(), "b".into()]);
        t.rows = vec![vec![1, 2], vec![3, 4], vec![5, 6]];
        let mut u = Relation::new("U", vec!["x".into()]);
        u.rows = vec![vec![7], vec![8]];
        db.insert(t);
        db.insert(u);
        db
    }

    /// Recursive halving; agrees with the tree on power-of-two widths.
    fn oracle_root(leaves: &[Hash]) -> Hash {
        match leaves.len() {
            1 => leaves[0],
            n => {
                let (l, r) = leaves.split_at(n / 2);
                node(&oracle_root(l), &oracle_root(r))
            }
        }
    }

    #[test]
    fn deterministic_and_counts_leaves() {
        let a = commit_database(&db()).unwrap();
        assert_eq!(a, commit_database(&db()).unwrap());
        assert_eq!(a.leaf_count, 5);
        assert_eq!(a.root.len(), 64);
        assert!(a.root.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
    }

    #[test]
    fn power_of_two_trees_match_recursive_definition() {
        for n in [1usize, 2, 4, 8, 16] {
            let leaves: Vec<Hash> = (0..n).map(|i| leaf_hash("t", i, &[i as u64])).collect();
            assert_eq!(MerkleTree::new(leaves.clone()).root(), oracle_root(&leaves));
        }
        // three leaves: the odd one pairs with itself
        let l: Vec<Hash> = (0..3).map(|i| leaf_hash("t", i, &[])).collect();
        assert_eq!(MerkleTree::new(l.clone()).root(), node(&node(&l[0], &l[1]), &node(&l[2], &l[2])));
    }

    #[test]
    fn empty_database_is_the_marker() {
        let c = commit_database(&Database::new()).unwrap();
        assert_eq!(c.root, hex::encode(empty_leaf()));
        assert_eq!(c.leaf_count, 0);
    }

    #[test]
    fn structural_changes_move_the_root() {
        let base = commit_database(&db()).unwrap().root;
        let mut reordered = db();
        reordered.tables.get_mut("T").unwrap().rows.swap(0, 1);
        assert_ne!(commit_database(&reordered).unwrap().root, base);
        let mut renamed = db();
        let mut t = renamed.tables.remove("U").unwrap();
        t.name = "V".into();
        renamed.insert(t);
        assert_ne!(commit_database(&renamed).unwrap().root, base);
        // moving a value between columns of one row
        let mut shifted = db();
        shifted.tables.get_mut("T").unwrap().rows[0] = vec![2, 1];
        assert_ne!(commit_database(&shifted).unwrap().root, base);
    }

    #[test]
    fn single_edits_change_root() {
        let base = commit_database(&db()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut d = db();
            let name = if rng.gen_bool(0.5) { "T" } else { "U" };
            let t = d.tables.get_mut(name).unwrap();
            let r = rng.gen_range(0..t.rows.len());
            let c = rng.gen_range(0..t.rows[r].len());
            t.rows[r][c] ^= 1 + rng.gen_range(0..1000u128);
            assert_ne!(commit_database(&d).unwrap().root, base.root);
        }
    }

    #[test]
    fn incremental_update_matches_rebuild() {
        let mut tree = DatabaseTree::new(&db()).unwrap();
        tree.update_row("U", 1, &[80]).unwrap();
        let mut d = db();
        d.tables.get_mut("U").unwrap().rows[1] = vec![80];
        assert_eq!(tree.commitment(), commit_database(&d).unwrap());
        tree.update_row("T", 2, &[0, 0]).unwrap();
        d.tables.get_mut("T").unwrap().rows[2] = vec![0, 0];
        assert_eq!(tree.commitment(), commit_database(&d).unwrap());
        assert!(tree.update_row("T", 3, &[0, 0]).is_err());
        assert!(tree.update_row("W", 0, &[]).is_err());
    }

    #[test]
    fn opening_recomputes_root() {
        let d = db();
        let c = commit_database(&d).unwrap();
        let o = Opening::new(&d, &["t".into()]).unwrap();
        let rows = |n: &str| Ok(d.table(n).unwrap().rows.iter().map(|r| r.iter().map(|&v| v as u64).collect()).collect());
        c.ensure_matches(&o.recompute(rows).unwrap()).unwrap();
        let altered = |_: &str| Ok(vec![vec![1, 2], vec![3, 4], vec![5, 7]]);
        assert!(matches!(c.ensure_matches(&o.recompute(altered).unwrap()), Err(Error::CommitmentMismatch(_))));
    }

    #[test]
    fn version_guard() {
        let c = commit_database(&db()).unwrap();
        let mut v = c.clone();
        v.encoding_version = 2;
        assert!(matches!(c.ensure_matches(&v), Err(Error::CommitmentMismatch(_))));
    }

    #[test]
    fn default_path_sits_beside_db_dir() {
        assert_eq!(CommitmentRoot::default_path(Path::new("data/db")), PathBuf::from("data/commitment.json"));
        assert_eq!(CommitmentRoot::default_path(Path::new("db/")), PathBuf::from("commitment.json"));
    }
}
