use std::collections::{BTreeSet, HashMap};

use num_traits::One;

use super::{Expr, Func, Node, Rational, VarKind, Variable};

/// Partial derivative with respect to `v`, treating every other variable as an
/// independent symbol. Bump nodes differentiate along space axes into higher bump
/// derivatives and are constant in jet coordinates.
pub fn differentiate(e: &Expr, v: &VarKind) -> Expr {
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(w) => {
            if w.kind() == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Sum(terms) => Expr::sum(terms.iter().map(|t| differentiate(t, v)).collect()),
        Node::Product(fs) => {
            let mut terms = Vec::with_capacity(fs.len());
            for (i, f) in fs.iter().enumerate() {
                let df = differentiate(f, v);
                if df.is_zero() {
                    continue;
                }
                let mut factors = fs.clone();
                factors[i] = df;
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms)
        }
        Node::Pow(b, k) => {
            let db = differentiate(b, v);
            if db.is_zero() {
                return Expr::zero();
            }
            let lowered = Expr::pow(b.clone(), k - Rational::one());
            Expr::product(vec![Expr::constant(k.clone()), lowered, db])
        }
        Node::Quotient(a, b) => {
            let da = differentiate(a, v);
            let db = differentiate(b, v);
            if da.is_zero() && db.is_zero() {
                return Expr::zero();
            }
            let numer = Expr::difference(
                Expr::product(vec![da, b.clone()]),
                Expr::product(vec![a.clone(), db]),
            );
            Expr::quotient(numer, Expr::powi(b.clone(), 2))
        }
        Node::Unary(f, a) => {
            let da = differentiate(a, v);
            if da.is_zero() {
                return Expr::zero();
            }
            let outer = match f {
                Func::Sin => Expr::unary(Func::Cos, a.clone()),
                Func::Cos => Expr::negated(Expr::unary(Func::Sin, a.clone())),
                Func::Exp => e.clone(),
                Func::Log => Expr::powi(a.clone(), -1),
                Func::Sqrt => Expr::quotient(Expr::ratio(1, 2), e.clone()),
            };
            Expr::product(vec![outer, da])
        }
        Node::Bump(b) => match v {
            VarKind::Space(axis) if *axis < b.deriv.dim() => Expr::bump(
                b.bump.clone(),
                b.deriv.raised(*axis),
                b.naming().clone(),
            ),
            _ => Expr::zero(),
        },
    }
}

/// Every variable occurring in `e`, in canonical order.
pub fn free_variables(e: &Expr) -> BTreeSet<Variable> {
    let mut out = BTreeSet::new();
    collect(e, &mut out);
    out
}

fn collect(e: &Expr, out: &mut BTreeSet<Variable>) {
    match e.node() {
        Node::Var(v) => {
            out.insert(v.clone());
        }
        Node::Bump(b) => {
            for axis in 0..b.deriv.dim() {
                out.insert(Variable::space(axis, b.naming()));
            }
        }
        _ => e.children().into_iter().for_each(|c| collect(c, out)),
    }
}

/// The jet coordinates occurring in `e`.
pub fn jet_variables(e: &Expr) -> BTreeSet<Variable> {
    free_variables(e)
        .into_iter()
        .filter(|v| matches!(v.kind(), VarKind::Jet { .. }))
        .collect()
}

/// Simultaneous substitution; variables missing from `map` are left alone.
pub fn substitute(e: &Expr, map: &HashMap<VarKind, Expr>) -> Expr {
    if map.is_empty() {
        return e.clone();
    }
    match e.node() {
        Node::Const(_) => e.clone(),
        Node::Var(v) => map.get(v.kind()).cloned().unwrap_or_else(|| e.clone()),
        Node::Bump(b) => {
            let touched = (0..b.deriv.dim()).any(|i| map.contains_key(&VarKind::Space(i)));
            assert!(
                !touched,
                "substituting a space variable inside a bump primitive is not supported"
            );
            e.clone()
        }
        Node::Sum(ts) => Expr::sum(ts.iter().map(|t| substitute(t, map)).collect()),
        Node::Product(fs) => Expr::product(fs.iter().map(|f| substitute(f, map)).collect()),
        Node::Pow(b, k) => Expr::pow(substitute(b, map), k.clone()),
        Node::Quotient(a, b) => Expr::quotient(substitute(a, map), substitute(b, map)),
        Node::Unary(f, a) => Expr::unary(*f, substitute(a, map)),
    }
}
