//! Lexer and recursive-descent parser for the supported SQL subset.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    offset: usize,
}

const SYMBOLS: [&str; 13] = ["<=", ">=", "<>", "!=", "<", ">", "=", ",", ".", "(", ")", "*", ";"];

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            // trailing primes are part of the name: D1'
            while i < bytes.len() && bytes[i] == b'\'' {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), offset: start });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            out.push(Token { tok: Tok::Number(src[start..i].to_string()), offset: start });
        } else if c == b'\'' {
            let start = i;
            i += 1;
            while i < bytes.len() && bytes[i] != b'\'' {
                i += 1;
            }
            if i == bytes.len() {
                return Err(Error::Parse { offset: start, message: "unterminated string literal".into() });
            }
            i += 1;
            out.push(Token { tok: Tok::Str(src[start + 1..i - 1].to_string()), offset: start });
        } else if let Some(s) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            out.push(Token { tok: Tok::Sym(s), offset: i });
            i += s.len();
        } else {
            return Err(Error::Parse { offset: i, message: format!("unexpected character `{}`", c as char) });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColRef {
    pub table: Option<String>,
    pub column: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AggFunc {
    Sum,
    Count,
    Avg,
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AggArgAst {
    Star,
    Column(ColRef),
    Product(ColRef, ColRef),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ItemExpr {
    Column(ColRef),
    Agg(AggFunc, AggArgAst),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectItem {
    pub expr: ItemExpr,
    pub alias: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl CmpOp {
    /// The operator with its operands swapped.
    pub fn flip(self) -> Self {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Gt => CmpOp::Lt,
        }
    }

    pub fn holds<T: Ord>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Column(ColRef),
    Literal(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateAst {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FromItem {
    pub table: String,
    pub alias: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Select {
    /// `None` for `SELECT *`.
    pub items: Option<Vec<SelectItem>>,
    pub from: Vec<FromItem>,
    pub predicates: Vec<PredicateAst>,
    pub group_by: Vec<ColRef>,
    /// `(key, descending)`
    pub order_by: Vec<(ColRef, bool)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetOpKind {
    /// Multiset union: each tuple appears `max(count_R, count_S)` times.
    Union,
    /// Multiset intersection: each tuple appears `min(count_R, count_S)` times.
    Intersect,
    /// Claim that both sides are equal multisets.
    Equality,
    /// Claim that no tuple occurs on both sides.
    Disjoint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    Select(Select),
    SetOp { kind: SetOpKind, left: Select, right: Select },
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: usize,
}

const RESERVED: [&str; 22] = [
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "ORDER", "ASC", "DESC", "AND", "AS", "UNION", "INTERSECT",
    "EQUALS", "DISJOINT", "ALL", "JOIN", "INNER", "ON", "OR", "LIKE", "HAVING", "LIMIT",
];

const UNSUPPORTED: [&str; 12] =
    ["OR", "LIKE", "NOT", "IN", "BETWEEN", "HAVING", "LIMIT", "EXCEPT", "DISTINCT", "LEFT", "RIGHT", "OUTER"];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.offset(), message: message.into() })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected {kw}"))
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn reject_unsupported(&self) -> Result<()> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if UNSUPPORTED.iter().any(|k| s.eq_ignore_ascii_case(k)) {
                return Err(Error::UnsupportedFeature(s.to_uppercase()));
            }
        }
        if let Some(Tok::Sym(s @ ("<>" | "!="))) = self.peek() {
            return Err(Error::UnsupportedFeature(format!("operator {s}")));
        }
        if let Some(Tok::Str(_)) = self.peek() {
            return Err(Error::UnsupportedFeature("string literals".into()));
        }
        Ok(())
    }

    fn ident(&mut self) -> Result<String> {
        self.reject_unsupported()?;
        match self.peek() {
            Some(Tok::Ident(s)) if !RESERVED.iter().any(|k| s.eq_ignore_ascii_case(k)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn colref(&mut self) -> Result<ColRef> {
        let first = self.ident()?;
        if self.eat_sym(".") {
            Ok(ColRef { table: Some(first), column: self.ident()? })
        } else {
            Ok(ColRef { table: None, column: first })
        }
    }

    fn agg_func(&self) -> Option<AggFunc> {
        let Some(Tok::Ident(s)) = self.peek() else { return None };
        let f = match s.to_ascii_uppercase().as_str() {
            "SUM" => AggFunc::Sum,
            "COUNT" => AggFunc::Count,
            "AVG" => AggFunc::Avg,
            "MIN" => AggFunc::Min,
            "MAX" => AggFunc::Max,
            _ => return None,
        };
        matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Sym("("))).then_some(f)
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        let expr = if let Some(f) = self.agg_func() {
            self.pos += 2;
            let arg = if self.eat_sym("*") {
                AggArgAst::Star
            } else {
                let a = self.colref()?;
                if self.eat_sym("*") {
                    AggArgAst::Product(a, self.colref()?)
                } else {
                    AggArgAst::Column(a)
                }
            };
            self.expect_sym(")")?;
            if arg == AggArgAst::Star && f != AggFunc::Count {
                return Err(Error::UnsupportedFeature(format!("{f:?}(*)").to_uppercase()));
            }
            ItemExpr::Agg(f, arg)
        } else if matches!(self.peek(), Some(Tok::Sym("("))) {
            return Err(Error::UnsupportedFeature("parenthesized expressions and subqueries".into()));
        } else {
            ItemExpr::Column(self.colref()?)
        };
        let alias = if self.eat_kw("AS") { Some(self.ident()?) } else { None };
        Ok(SelectItem { expr, alias })
    }

    fn operand(&mut self) -> Result<Operand> {
        self.reject_unsupported()?;
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(Operand::Literal(n))
            }
            Some(Tok::Sym("(")) => Err(Error::UnsupportedFeature("parenthesized expressions and subqueries".into())),
            _ => Ok(Operand::Column(self.colref()?)),
        }
    }

    fn predicate(&mut self) -> Result<PredicateAst> {
        let lhs = self.operand()?;
        self.reject_unsupported()?;
        let op = match self.peek() {
            Some(Tok::Sym("<")) => CmpOp::Lt,
            Some(Tok::Sym("<=")) => CmpOp::Le,
            Some(Tok::Sym("=")) => CmpOp::Eq,
            Some(Tok::Sym(">=")) => CmpOp::Ge,
            Some(Tok::Sym(">")) => CmpOp::Gt,
            _ => return self.err("expected comparison operator"),
        };
        self.pos += 1;
        let rhs = self.operand()?;
        Ok(PredicateAst { lhs, op, rhs })
    }

    fn conjunction(&mut self, out: &mut Vec<PredicateAst>) -> Result<()> {
        out.push(self.predicate()?);
        while self.eat_kw("AND") {
            out.push(self.predicate()?);
        }
        self.reject_unsupported()
    }

    fn from_item(&mut self) -> Result<FromItem> {
        if matches!(self.peek(), Some(Tok::Sym("("))) {
            return Err(Error::UnsupportedFeature("subqueries".into()));
        }
        let table = self.ident()?;
        self.eat_kw("AS");
        let alias = match self.peek() {
            Some(Tok::Ident(s)) if !RESERVED.iter().any(|k| s.eq_ignore_ascii_case(k)) => Some(self.ident()?),
            _ => None,
        };
        Ok(FromItem { table, alias })
    }

    fn select(&mut self) -> Result<Select> {
        self.expect_kw("SELECT")?;
        self.reject_unsupported()?;
        let items = if self.eat_sym("*") {
            None
        } else {
            let mut v = vec![self.select_item()?];
            while self.eat_sym(",") {
                v.push(self.select_item()?);
            }
            Some(v)
        };
        self.expect_kw("FROM")?;
        let mut from = vec![self.from_item()?];
        let mut predicates = Vec::new();
        loop {
            if self.eat_sym(",") {
                from.push(self.from_item()?);
            } else if self.is_kw("JOIN") || self.is_kw("INNER") {
                self.eat_kw("INNER");
                self.expect_kw("JOIN")?;
                from.push(self.from_item()?);
                self.expect_kw("ON")?;
                self.conjunction(&mut predicates)?;
            } else {
                break;
            }
        }
        if self.eat_kw("WHERE") {
            self.conjunction(&mut predicates)?;
        }
        let mut group_by = Vec::new();
        if self.eat_kw("GROUP") {
            self.expect_kw("BY")?;
            group_by.push(self.colref()?);
            while self.eat_sym(",") {
                group_by.push(self.colref()?);
            }
        }
        let mut order_by = Vec::new();
        if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            loop {
                let c = self.colref()?;
                let desc = if self.eat_kw("DESC") {
                    true
                } else {
                    self.eat_kw("ASC");
                    false
                };
                order_by.push((c, desc));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.reject_unsupported()?;
        Ok(Select { items, from, predicates, group_by, order_by })
    }

    fn query(&mut self) -> Result<Query> {
        let left = self.select()?;
        let kind = if self.eat_kw("UNION") {
            Some(SetOpKind::Union)
        } else if self.eat_kw("INTERSECT") {
            Some(SetOpKind::Intersect)
        } else if self.eat_kw("EQUALS") {
            Some(SetOpKind::Equality)
        } else if self.eat_kw("DISJOINT") {
            Some(SetOpKind::Disjoint)
        } else {
            None
        };
        let q = match kind {
            None => Query::Select(left),
            Some(kind) => {
                self.eat_kw("ALL");
                let right = self.select()?;
                Query::SetOp { kind, left, right }
            }
        };
        self.eat_sym(";");
        if self.pos < self.toks.len() {
            self.reject_unsupported()?;
            return self.err("unexpected trailing input");
        }
        Ok(q)
    }
}

/// Parses one statement into an AST.
pub fn parse_sql(src: &str) -> Result<Query> {
    let toks = lex(src)?;
    Parser { toks, pos: 0, end: src.len() }.query()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(t: Option<&str>, c: &str) -> ColRef {
        ColRef { table: t.map(str::to_string), column: c.to_string() }
    }

    #[test]
    fn group_by_query() {
        let Query::Select(s) = parse_sql("SELECT SUM(D2) FROM T GROUP BY D1").unwrap() else { panic!() };
        assert_eq!(s.items.unwrap()[0].expr, ItemExpr::Agg(AggFunc::Sum, AggArgAst::Column(col(None, "D2"))));
        assert_eq!(s.group_by, vec![col(None, "D1")]);
    }

    #[test]
    fn primed_identifiers() {
        let Query::Select(s) = parse_sql("SELECT T1.D1, T2.D2' FROM T1, T2 WHERE T1.D1 = T2.D1'").unwrap() else {
            panic!()
        };
        assert_eq!(s.from.len(), 2);
        assert_eq!(s.predicates[0].rhs, Operand::Column(col(Some("T2"), "D1'")));
    }

    #[test]
    fn rejects_unsupported() {
        for q in [
            "SELECT * FROM T WHERE a LIKE 'x%'",
            "SELECT * FROM T WHERE a = 1 OR b = 2",
            "SELECT * FROM T WHERE a <> 1",
            "SELECT a FROM T HAVING a > 1",
            "SELECT * FROM (SELECT a FROM T)",
        ] {
            assert!(matches!(parse_sql(q), Err(Error::UnsupportedFeature(_))), "{q}");
        }
    }

    #[test]
    fn reports_offsets() {
        match parse_sql("SELECT a FROM") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 13),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_sql("SELECT a FROM t WHERE a ="), Err(Error::Parse { .. })));
    }

    #[test]
    fn set_ops_and_order() {
        let q = parse_sql("SELECT a FROM r UNION ALL SELECT b FROM s").unwrap();
        assert!(matches!(q, Query::SetOp { kind: SetOpKind::Union, .. }));
        let Query::Select(s) = parse_sql("select a, b from t order by a desc, b").unwrap() else { panic!() };
        assert_eq!(s.order_by, vec![(col(None, "a"), true), (col(None, "b"), false)]);
    }
}
