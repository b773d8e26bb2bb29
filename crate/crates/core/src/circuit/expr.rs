use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};


use super::{ColumnId, ColumnKind};
use crate::field::PrimeField;

/// Handle of a verifier challenge squeezed after the first advice phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChallengeId(pub usize);

/// Multivariate polynomial over cells at relative rotations.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr<F> {
    Constant(F),
    Cell { column: ColumnId, rotation: i32 },
    Challenge(ChallengeId),
    Sum(Box<Expr<F>>, Box<Expr<F>>),
    Product(Box<Expr<F>>, Box<Expr<F>>),
    Negated(Box<Expr<F>>),
}

impl<F: PrimeField> Expr<F> {
    pub fn constant(v: u64) -> Self {
        Expr::Constant(F::from_u64(v))
    }

    pub fn zero() -> Self {
        Expr::Constant(F::zero())
    }

    pub fn one() -> Self {
        Expr::Constant(F::one())
    }

    /// Number of cell factors in the largest monomial.
    pub fn degree(&self) -> usize {
        match self {
            Expr::Constant(_) | Expr::Challenge(_) => 0,
            Expr::Cell { .. } => 1,
            Expr::Sum(a, b) => a.degree().max(b.degree()),
            Expr::Product(a, b) => a.degree() + b.degree(),
            Expr::Negated(a) => a.degree(),
        }
    }

    /// Visits every cell reference.
    pub fn for_each_cell(&self, f: &mut impl FnMut(ColumnId, i32)) {
        match self {
            Expr::Constant(_) | Expr::Challenge(_) => {}
            Expr::Cell { column, rotation } => f(*column, *rotation),
            Expr::Sum(a, b) | Expr::Product(a, b) => {
                a.for_each_cell(f);
                b.for_each_cell(f);
            }
            Expr::Negated(a) => a.for_each_cell(f),
        }
    }

    pub fn evaluate(
        &self,
        cell: &impl Fn(ColumnId, i32) -> F,
        challenge: &impl Fn(ChallengeId) -> F,
    ) -> F {
        match self {
            Expr::Constant(c) => *c,
            Expr::Cell { column, rotation } => cell(*column, *rotation),
            Expr::Challenge(c) => challenge(*c),
            Expr::Sum(a, b) => a.evaluate(cell, challenge) + b.evaluate(cell, challenge),
            Expr::Product(a, b) => {
                let lhs = a.evaluate(cell, challenge);
                if lhs.is_zero() {
                    return lhs;
                }
                lhs * b.evaluate(cell, challenge)
            }
            Expr::Negated(a) => -a.evaluate(cell, challenge),
        }
    }

    /// Sum of `terms[j] * weight^j`, with `weight^0 = 1`.
    pub fn linear_combination(terms: &[Expr<F>], weight: &Expr<F>) -> Expr<F> {
        let mut acc: Option<Expr<F>> = None;
        for t in terms.iter().rev() {
            acc = Some(match acc {
                None => t.clone(),
                Some(a) => a * weight.clone() + t.clone(),
            });
        }
        acc.unwrap_or_else(Expr::zero)
    }
}

impl ColumnId {
    pub fn cur<F>(self) -> Expr<F> {
        Expr::Cell { column: self, rotation: 0 }
    }
    pub fn prev<F>(self) -> Expr<F> {
        Expr::Cell { column: self, rotation: -1 }
    }
    pub fn next<F>(self) -> Expr<F> {
        Expr::Cell { column: self, rotation: 1 }
    }
}

impl ChallengeId {
    pub fn expr<F>(self) -> Expr<F> {
        Expr::Challenge(self)
    }
}

impl<F> Add for Expr<F> {
    type Output = Expr<F>;
    fn add(self, rhs: Expr<F>) -> Expr<F> {
        Expr::Sum(Box::new(self), Box::new(rhs))
    }
}

impl<F> Sub for Expr<F> {
    type Output = Expr<F>;
    fn sub(self, rhs: Expr<F>) -> Expr<F> {
        Expr::Sum(Box::new(self), Box::new(Expr::Negated(Box::new(rhs))))
    }
}

impl<F> Mul for Expr<F> {
    type Output = Expr<F>;
    fn mul(self, rhs: Expr<F>) -> Expr<F> {
        Expr::Product(Box::new(self), Box::new(rhs))
    }
}

impl<F> Neg for Expr<F> {
    type Output = Expr<F>;
    fn neg(self) -> Expr<F> {
        Expr::Negated(Box::new(self))
    }
}

impl<F: PrimeField> Add<u64> for Expr<F> {
    type Output = Expr<F>;
    fn add(self, rhs: u64) -> Expr<F> {
        self + Expr::constant(rhs)
    }
}

impl<F: PrimeField> Sub<u64> for Expr<F> {
    type Output = Expr<F>;
    fn sub(self, rhs: u64) -> Expr<F> {
        self - Expr::constant(rhs)
    }
}

/// `1 - e`
pub fn not<F: PrimeField>(e: Expr<F>) -> Expr<F> {
    Expr::one() - e
}

fn kind_tag(kind: ColumnKind) -> &'static str {
    match kind {
        ColumnKind::Fixed => "fixed",
        ColumnKind::Advice => "advice",
        ColumnKind::Instance => "instance",
    }
}

/// S-expression rendering, e.g. `(* (cell advice 0 0) (- (cell advice 1 -1)))`.
impl<F: fmt::Display> fmt::Display for Expr<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Constant(c) => write!(f, "{c}"),
            Expr::Cell { column, rotation } => {
                write!(f, "(cell {} {} {})", kind_tag(column.kind), column.index, rotation)
            }
            Expr::Challenge(c) => write!(f, "(challenge {})", c.0),
            Expr::Sum(a, b) => write!(f, "(+ {a} {b})"),
            Expr::Product(a, b) => write!(f, "(* {a} {b})"),
            Expr::Negated(a) => write!(f, "(- {a})"),
        }
    }
}
