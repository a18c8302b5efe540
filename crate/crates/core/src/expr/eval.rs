//! Evaluation in two numeric regimes: IEEE doubles and exact rationals.

use std::collections::HashMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::{Expr, Func, Node, Rational, VarKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of a non-positive number")]
    LogDomain,
    #[error("square root of a negative number")]
    SqrtDomain,
    #[error("fractional power of a negative number")]
    PowDomain,
    #[error("no value assigned to variable `{0}`")]
    Unbound(String),
    #[error("exactness unavailable")]
    Inexact,
    #[error("non-finite result")]
    NonFinite,
}

/// Numeric field the evaluator runs in.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &Rational) -> Self;
    /// Exact scalars refuse floating inputs with [`EvalError::Inexact`].
    fn try_from_f64(x: f64) -> Result<Self, EvalError>;
    fn as_f64(&self) -> f64;
    /// The exact rational this value denotes (a double's full binary expansion).
    fn to_exact(&self) -> Option<Rational>;
    fn vanishes(&self) -> bool;
    fn abs(&self) -> Self;
    fn checked_div(&self, rhs: &Self) -> Result<Self, EvalError>;
    fn powi(&self, e: i64) -> Result<Self, EvalError>;
    fn powr(&self, e: &Rational) -> Result<Self, EvalError>;
    fn apply(f: Func, x: &Self) -> Result<Self, EvalError>;

    /// Treats values within `tol` of zero as zero in floating point; exact for rationals.
    fn is_negligible(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.vanishes()
        } else {
            self.as_f64().abs() <= tol
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn try_from_f64(x: f64) -> Result<Self, EvalError> {
        Ok(x)
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn to_exact(&self) -> Option<Rational> {
        <Rational as FromPrimitive>::from_f64(*self)
    }
    fn vanishes(&self) -> bool {
        *self == 0.0
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn checked_div(&self, rhs: &Self) -> Result<Self, EvalError> {
        if *rhs == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        finite(self / rhs)
    }
    fn powi(&self, e: i64) -> Result<Self, EvalError> {
        if *self == 0.0 && e < 0 {
            return Err(EvalError::DivisionByZero);
        }
        finite(match i32::try_from(e) {
            Ok(e) => f64::powi(*self, e),
            Err(_) => f64::powf(*self, e as f64),
        })
    }
    fn powr(&self, e: &Rational) -> Result<Self, EvalError> {
        if e.is_integer() {
            return Scalar::powi(self, e.to_integer().to_i64().ok_or(EvalError::NonFinite)?);
        }
        if *self < 0.0 {
            return Err(EvalError::PowDomain);
        }
        if *self == 0.0 && e.is_negative() {
            return Err(EvalError::DivisionByZero);
        }
        finite(self.powf(ToPrimitive::to_f64(e).unwrap_or(f64::NAN)))
    }
    fn apply(f: Func, x: &Self) -> Result<Self, EvalError> {
        finite(match f {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => {
                if *x <= 0.0 {
                    return Err(EvalError::LogDomain);
                }
                x.ln()
            }
            Func::Sqrt => {
                if *x < 0.0 {
                    return Err(EvalError::SqrtDomain);
                }
                x.sqrt()
            }
        })
    }
}

fn finite(x: f64) -> Result<f64, EvalError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn try_from_f64(_: f64) -> Result<Self, EvalError> {
        Err(EvalError::Inexact)
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_exact(&self) -> Option<Rational> {
        Some(self.clone())
    }
    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn checked_div(&self, rhs: &Self) -> Result<Self, EvalError> {
        if Zero::is_zero(rhs) {
            return Err(EvalError::DivisionByZero);
        }
        Ok(self / rhs)
    }
    fn powi(&self, e: i64) -> Result<Self, EvalError> {
        if Zero::is_zero(self) && e < 0 {
            return Err(EvalError::DivisionByZero);
        }
        let mag = usize::try_from(e.unsigned_abs()).map_err(|_| EvalError::NonFinite)?;
        let base = if e < 0 { self.recip() } else { self.clone() };
        Ok(num_traits::pow(base, mag))
    }
    fn powr(&self, e: &Rational) -> Result<Self, EvalError> {
        if e.is_integer() {
            return Scalar::powi(self, e.to_integer().to_i64().ok_or(EvalError::NonFinite)?);
        }
        Err(EvalError::Inexact)
    }
    fn apply(f: Func, x: &Self) -> Result<Self, EvalError> {
        match f {
            Func::Log if !x.is_positive() => Err(EvalError::LogDomain),
            Func::Sqrt if x.is_negative() => Err(EvalError::SqrtDomain),
            _ => match Expr::unary(f, Expr::constant(x.clone())).as_const() {
                Some(c) => Ok(c.clone()),
                None => Err(EvalError::Inexact),
            },
        }
    }
}

/// Source of variable values for [`evaluate`].
pub trait Assignment<S> {
    fn value(&self, var: &VarKind) -> Option<S>;
}

impl<S: Clone> Assignment<S> for HashMap<VarKind, S> {
    fn value(&self, var: &VarKind) -> Option<S> {
        self.get(var).cloned()
    }
}

/// A point in space plus an optional lookup for jet coordinates.
pub struct PointAssignment<'a, S, J = fn(usize, &crate::multi_index::MultiIndex) -> Option<S>> {
    pub point: &'a [S],
    pub jets: Option<J>,
}

impl<'a, S> PointAssignment<'a, S> {
    pub fn space_only(point: &'a [S]) -> Self {
        PointAssignment { point, jets: None }
    }
}

impl<'a, S, J> Assignment<S> for PointAssignment<'a, S, J>
where
    S: Clone,
    J: Fn(usize, &crate::multi_index::MultiIndex) -> Option<S>,
{
    fn value(&self, var: &VarKind) -> Option<S> {
        match var {
            VarKind::Space(i) => self.point.get(*i).cloned(),
            VarKind::Jet { unknown, index } => self.jets.as_ref().and_then(|j| j(*unknown, index)),
        }
    }
}

pub fn evaluate<S: Scalar, A: Assignment<S> + ?Sized>(e: &Expr, a: &A) -> Result<S, EvalError> {
    match e.node() {
        Node::Const(c) => Ok(S::from_rational(c)),
        Node::Var(v) => a
            .value(v.kind())
            .ok_or_else(|| EvalError::Unbound(v.name())),
        Node::Sum(ts) => {
            let mut acc = S::zero();
            for t in ts {
                acc = acc + evaluate(t, a)?;
            }
            Ok(acc)
        }
        Node::Product(fs) => {
            let mut acc = S::one();
            for f in fs {
                acc = acc * evaluate(f, a)?;
            }
            Ok(acc)
        }
        Node::Pow(b, k) => evaluate(b, a)?.powr(k),
        Node::Quotient(n, d) => {
            let n = evaluate(n, a)?;
            let d = evaluate(d, a)?;
            n.checked_div(&d)
        }
        Node::Unary(f, arg) => S::apply(*f, &evaluate(arg, a)?),
        Node::Bump(b) => {
            let point: Vec<S> = (0..b.deriv.dim())
                .map(|i| {
                    a.value(&VarKind::Space(i))
                        .ok_or_else(|| EvalError::Unbound(b.naming().space[i].clone()))
                })
                .collect::<Result<_, _>>()?;
            b.bump.evaluate(&b.deriv, &point)
        }
    }
}

pub fn evaluate_float(e: &Expr, assignment: &HashMap<VarKind, f64>) -> Result<f64, EvalError> {
    evaluate(e, assignment)
}

pub fn evaluate_exact(
    e: &Expr,
    assignment: &HashMap<VarKind, Rational>,
) -> Result<Rational, EvalError> {
    evaluate(e, assignment)
}

/// Exact rational of a finite double (its binary expansion, no rounding).
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    <Rational as FromPrimitive>::from_f64(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Naming, Variable};

    fn setup() -> (Expr, HashMap<VarKind, f64>) {
        let n = Naming::new(["x"], ["u"]);
        (Expr::var(Variable::space(0, &n)), HashMap::new())
    }

    #[test]
    fn float_examples() {
        let (x, mut a) = setup();
        a.insert(VarKind::Space(0), 3.0);
        let e = Expr::powi(x.clone() - Expr::one(), 2);
        assert_eq!(evaluate_float(&e, &a).unwrap(), 4.0);
        a.insert(VarKind::Space(0), 0.0);
        let inv = Expr::quotient(Expr::one(), x.clone());
        assert_eq!(evaluate_float(&inv, &a), Err(EvalError::DivisionByZero));
        let ex = Expr::unary(Func::Exp, Expr::zero());
        assert_eq!(evaluate_float(&ex, &a).unwrap(), 1.0);
        let lg = Expr::unary(Func::Log, x);
        assert_eq!(evaluate_float(&lg, &a), Err(EvalError::LogDomain));
    }

    #[test]
    fn exact_examples() {
        let (x, _) = setup();
        let mut a = HashMap::new();
        a.insert(VarKind::Space(0), Rational::new(1.into(), 2.into()));
        let e = Expr::ratio(1, 3) * x.clone();
        assert_eq!(evaluate_exact(&e, &a).unwrap(), Rational::new(1.into(), 6.into()));
        a.insert(VarKind::Space(0), Rational::from_integer(2.into()));
        let s = Expr::unary(Func::Sqrt, x.clone());
        assert_eq!(evaluate_exact(&s, &a), Err(EvalError::Inexact));
        a.insert(VarKind::Space(0), Rational::from_integer(4.into()));
        assert_eq!(evaluate_exact(&s, &a).unwrap(), Rational::from_integer(2.into()));
    }

    #[test]
    fn unbound_variable_is_reported() {
        let (x, a) = setup();
        assert_eq!(evaluate_float(&x, &a), Err(EvalError::Unbound("x".into())));
    }
}
