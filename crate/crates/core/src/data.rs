//! Schemas, relations and on-disk databases (one CSV file per table).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    /// Decimal digits kept when integerizing: stored value = `v * 10^scale`.
    #[serde(default)]
    pub scale: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub column: String,
    pub references: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<ColumnSchema>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_key: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub foreign_keys: Vec<ForeignKey>,
}

impl TableSchema {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub tables: Vec<TableSchema>,
}

impl Schema {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Schema = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn table(&self, name: &str) -> Option<&TableSchema> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    fn validate(&self) -> Result<()> {
        for (i, t) in self.tables.iter().enumerate() {
            if self.tables[..i].iter().any(|o| o.name.eq_ignore_ascii_case(&t.name)) {
                return Err(Error::Schema(format!("duplicate table `{}`", t.name)));
            }
            if t.columns.is_empty() {
                return Err(Error::Schema(format!("table `{}` has no columns", t.name)));
            }
            for (j, c) in t.columns.iter().enumerate() {
                if t.columns[..j].iter().any(|o| o.name.eq_ignore_ascii_case(&c.name)) {
                    return Err(Error::Schema(format!("duplicate column `{}.{}`", t.name, c.name)));
                }
                if c.scale > 18 {
                    return Err(Error::Schema(format!("scale of `{}.{}` exceeds 18", t.name, c.name)));
                }
            }
            let keys = t.primary_key.iter().chain(t.foreign_keys.iter().map(|f| &f.column));
            for k in keys {
                if t.column_index(k).is_none() {
                    return Err(Error::Schema(format!("key column `{}.{k}` not declared", t.name)));
                }
            }
        }
        Ok(())
    }
}

/// A table of non-negative integers with multiset semantics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub columns: Vec<String>,
    /// Row-major cells.
    pub rows: Vec<Vec<u128>>,
}

impl Relation {
    pub fn new(name: &str, columns: Vec<String>) -> Self {
        Relation { name: name.to_string(), columns, rows: Vec::new() }
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, i: usize) -> impl Iterator<Item = u128> + '_ {
        self.rows.iter().map(move |r| r[i])
    }

    /// Rows in lexicographic order; equal for multiset-equal relations.
    pub fn sorted_rows(&self) -> Vec<Vec<u128>> {
        let mut rows = self.rows.clone();
        rows.sort();
        rows
    }
}

/// Parses a CSV cell as a non-negative decimal scaled by `10^scale`.
pub fn parse_scaled(cell: &str, scale: u32) -> Result<u64> {
    let cell = cell.trim();
    let bad = || Error::InvalidData(format!("`{cell}` is not a non-negative number with at most {scale} decimals"));
    let (int, frac) = match cell.split_once('.') {
        Some((i, f)) => (i, f),
        None => (cell, ""),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || (!frac.is_empty() && !digits(frac)) || frac.len() > scale as usize {
        return Err(bad());
    }
    let mut padded = frac.to_string();
    padded.extend(std::iter::repeat('0').take(scale as usize - frac.len()));
    let factor = 10u128.pow(scale);
    let v = int.parse::<u128>().map_err(|_| bad())? * factor + if scale == 0 { 0 } else { padded.parse::<u128>().map_err(|_| bad())? };
    u64::try_from(v).map_err(|_| Error::InvalidData(format!("`{cell}` exceeds 64 bits after scaling")))
}

/// Tables keyed by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    pub tables: BTreeMap<String, Relation>,
}

impl Database {
    pub fn new() -> Self {
        Database { tables: BTreeMap::new() }
    }

    pub fn insert(&mut self, rel: Relation) {
        self.tables.insert(rel.name.clone(), rel);
    }

    pub fn table(&self, name: &str) -> Option<&Relation> {
        self.tables.get(name).or_else(|| self.tables.values().find(|t| t.name.eq_ignore_ascii_case(name)))
    }

    /// Reads `<dir>/<table>.csv` for every schema table.
    pub fn load(dir: &Path, schema: &Schema) -> Result<Self> {
        let mut db = Database::new();
        for t in &schema.tables {
            let path = dir.join(format!("{}.csv", t.name));
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            db.insert(Self::parse_csv(t, &text)?);
        }
        Ok(db)
    }

    pub fn parse_csv(t: &TableSchema, text: &str) -> Result<Relation> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let order = t
            .columns
            .iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| h.eq_ignore_ascii_case(&c.name))
                    .ok_or_else(|| Error::InvalidData(format!("table `{}` has no column `{}`", t.name, c.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rel = Relation::new(&t.name, t.columns.iter().map(|c| c.name.clone()).collect());
        for record in reader.records() {
            let record = record?;
            let row = order
                .iter()
                .zip(&t.columns)
                .map(|(&i, c)| {
                    let cell = record.get(i).unwrap_or("");
                    parse_scaled(cell, c.scale)
                        .map(u128::from)
                        .map_err(|e| Error::InvalidData(format!("{}.{}: {e}", t.name, c.name)))
                })
                .collect::<Result<Vec<_>>>()?;
            rel.rows.push(row);
        }
        Ok(rel)
    }

    /// Writes every table as `<dir>/<table>.csv` (integer cells).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for rel in self.tables.values() {
            let path = dir.join(format!("{}.csv", rel.name));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(&rel.columns)?;
            for row in &rel.rows {
                w.write_record(row.iter().map(|v| v.to_string()))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

impl Default for Database {
    fn default() -> Self {
        Self::new()
    }
}
