use num_traits::{One, Signed, Zero};

use crate::expr::{evaluate, rational_text, EvalError, Expr, PointAssignment, Rational};
use crate::jet::{jet_of_function, PdeOperator};

use super::assemble::{make_bumps, AssembledFunction, Background, Piece};
use super::ConstructError;

const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone)]
pub struct BracketResult {
    pub function: AssembledFunction,
    pub lambdas: Vec<Rational>,
    /// `|T U(a) - f(a)|` of the assembled function at each point.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Value {
    Exact(Rational),
    Float(f64),
}

impl Value {
    fn as_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => crate::expr::Scalar::as_f64(r),
            Value::Float(v) => *v,
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_zero(),
            Value::Float(v) => *v == 0.0,
        }
    }

    fn is_negative(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_negative(),
            Value::Float(v) => *v < 0.0,
        }
    }

    fn is_positive(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_positive(),
            Value::Float(v) => *v > 0.0,
        }
    }
}

fn eval_at<S: crate::expr::Scalar>(op: &PdeOperator, f: &Expr, u: &Expr, a: &[Rational]) -> Result<S, EvalError> {
    let x: Vec<S> = a.iter().map(S::from_rational).collect();
    let jet = jet_of_function(u, &x, op.order())?;
    let g: S = evaluate(&op.equations()[0], &jet.at(&x))?;
    let fa: S = evaluate(f, &PointAssignment::space_only(&x))?;
    Ok(g - fa)
}

/// `T U(a) - f(a)`, exactly when every value is rational.
fn defect(op: &PdeOperator, f: &Expr, u: &Expr, a: &[Rational]) -> Result<Value, EvalError> {
    match eval_at::<Rational>(op, f, u, a) {
        Ok(v) => Ok(Value::Exact(v)),
        Err(EvalError::Inexact) => eval_at::<f64>(op, f, u, a).map(Value::Float),
        Err(e) => Err(e),
    }
}

fn blend(minus: &Expr, plus: &Expr, lambda: &Rational) -> Expr {
    minus.clone().scaled(&(Rational::one() - lambda)) + plus.clone().scaled(lambda)
}

/// Interpolates between `U₋` and `U₊` with `T U₋ <= f <= T U₊` on the points: per point a
/// bisection on `λ` for `T U_λ(a) = f(a)` with `U_λ = (1 - λ) U₋ + λ U₊`, then
/// `U = Σ_a ψ_a U_{λ_a}` for the partition of unity `ψ_a = φ_a + (1 - Σ_b φ_b)/|A|`
/// built from disjoint plateau bumps `φ_a` inside the max-norm ball `B(center, radius)`.
#[allow(clippy::too_many_arguments)]
pub fn bracket_interpolate(
    op: &PdeOperator,
    f: &Expr,
    minus: &Expr,
    plus: &Expr,
    points: &[Vec<Rational>],
    center: &[Rational],
    radius: &Rational,
    tol: f64,
) -> Result<BracketResult, ConstructError> {
    if op.unknowns() != 1 || op.equations().len() != 1 {
        return Err(ConstructError::NotScalar);
    }
    let ball: Vec<(Rational, Rational)> = center.iter().map(|c| (c - radius, c + radius)).collect();
    let bumps = make_bumps(points, &ball, &Rational::new(1.into(), 2.into()))?;
    let mut lambdas = Vec::with_capacity(points.len());
    for (i, a) in points.iter().enumerate() {
        let lo_v = defect(op, f, minus, a)?;
        let hi_v = defect(op, f, plus, a)?;
        if lo_v.is_positive() || hi_v.is_negative() {
            return Err(ConstructError::BracketViolated {
                point_index: i,
                point: a.iter().map(rational_text).collect(),
                minus: lo_v.as_f64(),
                plus: hi_v.as_f64(),
            });
        }
        lambdas.push(bisect(op, f, minus, plus, a, i, lo_v, hi_v, tol)?);
    }
    let count = Rational::from_integer((points.len() as i64).into());
    let mean = lambdas.iter().fold(Rational::zero(), |s, l| s + l) / count;
    let pieces = bumps
        .into_iter()
        .zip(&lambdas)
        .map(|(bump, l)| Piece { bump, function: blend(minus, plus, l) })
        .collect();
    let background = Background { lambda: mean, minus: minus.clone(), plus: plus.clone() };
    let function = AssembledFunction::new(op.naming().clone(), pieces, Some(background));
    let u = function.to_expr();
    let residuals = points
        .iter()
        .map(|a| defect(op, f, &u, a).map(|v| v.as_f64().abs()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BracketResult { function, lambdas, residuals })
}

#[allow(clippy::too_many_arguments)]
fn bisect(
    op: &PdeOperator,
    f: &Expr,
    minus: &Expr,
    plus: &Expr,
    a: &[Rational],
    index: usize,
    lo_v: Value,
    hi_v: Value,
    tol: f64,
) -> Result<Rational, ConstructError> {
    let (mut lo, mut hi) = (Rational::zero(), Rational::one());
    if lo_v.is_zero() || lo_v.as_f64().abs() <= tol {
        return Ok(lo);
    }
    if hi_v.is_zero() || hi_v.as_f64().abs() <= tol {
        return Ok(hi);
    }
    let two = Rational::from_integer(2.into());
    let mut last = f64::INFINITY;
    for _ in 0..MAX_BISECTIONS {
        let mid = (&lo + &hi) / &two;
        let v = defect(op, f, &blend(minus, plus, &mid), a)?;
        last = v.as_f64().abs();
        if v.is_zero() || last <= tol {
            return Ok(mid);
        }
        if v.is_negative() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(ConstructError::BisectionStalled { point_index: index, residual: last })
}
