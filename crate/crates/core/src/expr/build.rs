//! Smart constructors. Each one assumes canonical children and returns a canonical node.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{raw, BumpRef, Expr, Func, Naming, Node, Rational, Variable};
use crate::constructor::bump::BumpFunction;
use crate::multi_index::MultiIndex;

impl Expr {
    pub fn constant(c: Rational) -> Expr {
        raw(Node::Const(c))
    }

    pub fn int(i: i64) -> Expr {
        Expr::constant(Rational::from_integer(i.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::constant(Rational::new(num.into(), den.into()))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(v: Variable) -> Expr {
        raw(Node::Var(v))
    }

    pub fn bump(bump: Arc<BumpFunction>, deriv: MultiIndex, naming: Arc<Naming>) -> Expr {
        raw(Node::Bump(BumpRef { bump, deriv, naming }))
    }

    /// Flattened, like-term-collected, sorted sum. Rational multiples of nested sums
    /// are distributed. The empty sum is `0`.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut constant = Rational::zero();
        let mut coeffs: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut stack: Vec<(Rational, Expr)> = terms.into_iter().map(|t| (Rational::one(), t)).collect();
        while let Some((k, t)) = stack.pop() {
            match t.node() {
                Node::Const(c) => constant += k * c,
                Node::Sum(inner) => stack.extend(inner.iter().map(|u| (k.clone(), u.clone()))),
                _ => {
                    let (c, rest) = split_coefficient(&t);
                    let kc = k * c;
                    match rest.node() {
                        Node::Sum(inner) => stack.extend(inner.iter().map(|u| (kc.clone(), u.clone()))),
                        _ => *coeffs.entry(rest).or_insert_with(Rational::zero) += kc,
                    }
                }
            }
        }
        let mut out: Vec<Expr> = coeffs
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(rest, c)| scale(rest, c))
            .collect();
        if !constant.is_zero() {
            out.push(Expr::constant(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => {
                out.sort();
                raw(Node::Sum(out))
            }
        }
    }

    /// Flattened product with constants folded and equal bases merged into powers.
    /// The empty product is `1`.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut constant = Rational::one();
        let mut bases: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut push = |f: &Expr, constant: &mut Rational| match f.node() {
            Node::Const(c) => *constant *= c,
            Node::Pow(b, e) => *bases.entry(b.clone()).or_insert_with(Rational::zero) += e,
            _ => *bases.entry(f.clone()).or_insert_with(Rational::zero) += Rational::one(),
        };
        for f in &factors {
            match f.node() {
                Node::Product(inner) => inner.iter().for_each(|g| push(g, &mut constant)),
                _ => push(f, &mut constant),
            }
        }
        if constant.is_zero() {
            return Expr::zero();
        }
        let mut out = Vec::with_capacity(bases.len() + 1);
        let mut needs_merge = false;
        for (b, e) in bases {
            if e.is_zero() {
                continue;
            }
            let p = Expr::pow(b, e);
            match p.node() {
                Node::Const(c) => constant *= c,
                Node::Product(inner) => {
                    needs_merge = true;
                    for g in inner {
                        match g.node() {
                            Node::Const(c) => constant *= c,
                            _ => out.push(g.clone()),
                        }
                    }
                }
                _ => out.push(p),
            }
        }
        if constant.is_zero() {
            return Expr::zero();
        }
        if needs_merge {
            out.push(Expr::constant(constant));
            return Expr::product(out);
        }
        if out.is_empty() {
            return Expr::constant(constant);
        }
        if !constant.is_one() {
            out.push(Expr::constant(constant));
        }
        if out.len() == 1 {
            return out.pop().unwrap();
        }
        out.sort();
        raw(Node::Product(out))
    }

    /// `base^exponent`. Integer powers of products are distributed over the factors;
    /// powers of sums are never expanded.
    pub fn pow(base: Expr, exponent: Rational) -> Expr {
        if exponent.is_zero() {
            return Expr::one();
        }
        if exponent.is_one() {
            return base;
        }
        match base.node() {
            Node::Const(c) => {
                if exponent.is_integer() {
                    if c.is_zero() && exponent.is_negative() {
                        return raw(Node::Pow(base.clone(), exponent));
                    }
                    if let Some(e) = exponent.to_integer().to_i32() {
                        return Expr::constant(pow_rational(c, e));
                    }
                } else if let Some(r) = exact_root(c, &exponent) {
                    return Expr::constant(r);
                }
                raw(Node::Pow(base.clone(), exponent))
            }
            Node::Pow(inner, e) if exponent.is_integer() => Expr::pow(inner.clone(), e * &exponent),
            Node::Product(fs) if exponent.is_integer() => {
                Expr::product(fs.iter().map(|f| Expr::pow(f.clone(), exponent.clone())).collect())
            }
            _ => raw(Node::Pow(base, exponent)),
        }
    }

    pub fn powi(base: Expr, exponent: i64) -> Expr {
        Expr::pow(base, Rational::from_integer(exponent.into()))
    }

    /// `numer / denom`. Constant denominators become a reciprocal factor; a literal
    /// zero denominator is kept as `0^-1` so that evaluation reports the division.
    pub fn quotient(numer: Expr, denom: Expr) -> Expr {
        if let Some(c) = denom.as_const() {
            if c.is_zero() {
                return Expr::product(vec![numer, raw(Node::Pow(denom, -Rational::one()))]);
            }
            return Expr::product(vec![numer, Expr::constant(c.recip())]);
        }
        if numer.is_zero() {
            return Expr::zero();
        }
        if numer == denom {
            return Expr::one();
        }
        raw(Node::Quotient(numer, denom))
    }

    pub fn unary(f: Func, arg: Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            let folded = match f {
                Func::Sin if c.is_zero() => Some(Rational::zero()),
                Func::Cos | Func::Exp if c.is_zero() => Some(Rational::one()),
                Func::Log if c.is_one() => Some(Rational::zero()),
                Func::Sqrt => exact_root(c, &Rational::new(1.into(), 2.into())),
                _ => None,
            };
            if let Some(r) = folded {
                return Expr::constant(r);
            }
        }
        raw(Node::Unary(f, arg))
    }

    pub fn negated(e: Expr) -> Expr {
        Expr::product(vec![Expr::int(-1), e])
    }

    pub fn difference(a: Expr, b: Expr) -> Expr {
        Expr::sum(vec![a, Expr::negated(b)])
    }

    pub fn scaled(self, c: &Rational) -> Expr {
        Expr::product(vec![Expr::constant(c.clone()), self])
    }
}

/// Splits a non-constant term into its rational coefficient and the remaining factor.
pub(crate) fn split_coefficient(t: &Expr) -> (Rational, Expr) {
    if let Node::Product(fs) = t.node() {
        if let Some(c) = fs[0].as_const() {
            let rest = if fs.len() == 2 {
                fs[1].clone()
            } else {
                raw(Node::Product(fs[1..].to_vec()))
            };
            return (c.clone(), rest);
        }
    }
    (Rational::one(), t.clone())
}

fn scale(rest: Expr, c: Rational) -> Expr {
    if c.is_one() {
        return rest;
    }
    let mut factors = vec![Expr::constant(c)];
    match rest.node() {
        Node::Product(fs) => factors.extend(fs.iter().cloned()),
        _ => factors.push(rest),
    }
    factors.sort();
    raw(Node::Product(factors))
}

fn pow_rational(c: &Rational, e: i32) -> Rational {
    if e >= 0 {
        num_traits::pow(c.clone(), e as usize)
    } else {
        num_traits::pow(c.recip(), (-e) as usize)
    }
}

/// `c^e` when it is rational (perfect powers only).
fn exact_root(c: &Rational, e: &Rational) -> Option<Rational> {
    if c.is_negative() {
        return None;
    }
    let q = e.denom().to_u32()?;
    let p = e.numer().to_i32()?;
    let root = |v: &BigInt| -> Option<BigInt> {
        let r = v.nth_root(q);
        (num_traits::pow(r.clone(), q as usize) == *v).then_some(r)
    };
    let base = Rational::new(root(c.numer())?, root(c.denom())?);
    if base.is_zero() && p < 0 {
        return None;
    }
    Some(pow_rational(&base, p))
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::difference(self, rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::negated(self)
    }
}
