use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::expr::{evaluate, EvalError, Expr, Naming, PointAssignment, Rational, Variable};
use crate::jet::AnyJet;
use crate::multi_index::MultiIndex;

use super::bump::BumpFunction;
use super::ConstructError;

/// `P_a(x) = Σ_p ξ_{a,p} (x - a)^p / p!` for each unknown. Floating jets enter with
/// the exact value of each double.
pub fn taylor_from_jet(a: &[Rational], jet: &AnyJet, naming: &Arc<Naming>) -> Vec<Expr> {
    let exact = jet.to_exact();
    let layout = exact.layout();
    let shifts: Vec<Expr> = a
        .iter()
        .enumerate()
        .map(|(i, ai)| Expr::var(Variable::space(i, naming)) - Expr::constant(ai.clone()))
        .collect();
    (0..layout.unknowns())
        .map(|u| {
            let terms = MultiIndex::up_to(layout.dim(), layout.order())
                .into_iter()
                .filter_map(|p| {
                    let xi = exact.get(u, &p).expect("dense jet");
                    if xi.is_zero() {
                        return None;
                    }
                    let c = xi / Rational::from_integer(p.factorial());
                    let mut factors = vec![Expr::constant(c)];
                    for (axis, &k) in p.entries().iter().enumerate() {
                        if k > 0 {
                            factors.push(Expr::powi(shifts[axis].clone(), k as i64));
                        }
                    }
                    Some(Expr::product(factors))
                })
                .collect();
            Expr::sum(terms)
        })
        .collect()
}

fn linf(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or_else(Rational::zero)
}

/// Plateau bumps with pairwise disjoint supports inside `domain`:
/// `r_out = shrink · min(half the nearest-neighbour distance, distance to the boundary)`
/// in the max-norm, and `r_in = r_out / 2`.
pub fn make_bumps(
    points: &[Vec<Rational>],
    domain: &[(Rational, Rational)],
    shrink: &Rational,
) -> Result<Vec<Arc<BumpFunction>>, ConstructError> {
    if !shrink.is_positive() || *shrink >= Rational::one() {
        return Err(ConstructError::Shrink(crate::expr::rational_text(shrink)));
    }
    let two = Rational::from_integer(2.into());
    let mut out = Vec::with_capacity(points.len());
    for (i, a) in points.iter().enumerate() {
        let inside = a.len() == domain.len() && a.iter().zip(domain).all(|(x, (lo, hi))| lo < x && x < hi);
        if !inside {
            return Err(ConstructError::OutsideDomain { index: i });
        }
        let mut r = a
            .iter()
            .zip(domain)
            .map(|(x, (lo, hi))| (x - lo).min(hi - x))
            .min()
            .expect("at least one axis");
        for (j, b) in points.iter().enumerate() {
            if j == i {
                continue;
            }
            let d = linf(a, b);
            if d.is_zero() {
                return Err(ConstructError::DuplicatePoint { first: i.min(j), second: i.max(j) });
            }
            r = r.min(d / &two);
        }
        let r_out = r * shrink;
        let r_in = &r_out / &two;
        out.push(Arc::new(BumpFunction::new(a.clone(), r_in, r_out)));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub bump: Arc<BumpFunction>,
    pub function: Expr,
}

/// The global part `(1 - Σ ψ_a) · ((1 - λ) U₋ + λ U₊)` used by bracket interpolation.
#[derive(Debug, Clone)]
pub struct Background {
    pub lambda: Rational,
    pub minus: Expr,
    pub plus: Expr,
}

impl Background {
    pub fn function(&self) -> Expr {
        let one_minus = Rational::one() - &self.lambda;
        self.minus.clone().scaled(&one_minus) + self.plus.clone().scaled(&self.lambda)
    }
}

/// `U = Σ_a ψ_a P_a`, plus an optional background filling the complement of the
/// plateaus.
#[derive(Debug, Clone)]
pub struct AssembledFunction {
    naming: Arc<Naming>,
    pieces: Vec<Piece>,
    background: Option<Background>,
}

impl AssembledFunction {
    pub fn new(naming: Arc<Naming>, pieces: Vec<Piece>, background: Option<Background>) -> Self {
        AssembledFunction { naming, pieces, background }
    }

    pub fn naming(&self) -> &Arc<Naming> {
        &self.naming
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn background(&self) -> Option<&Background> {
        self.background.as_ref()
    }

    fn bump_expr(&self, b: &Arc<BumpFunction>) -> Expr {
        Expr::bump(b.clone(), MultiIndex::zero(self.naming.dim()), self.naming.clone())
    }

    pub fn to_expr(&self) -> Expr {
        let mut terms: Vec<Expr> =
            self.pieces.iter().map(|p| self.bump_expr(&p.bump) * p.function.clone()).collect();
        if let Some(bg) = &self.background {
            let mut weight = vec![Expr::one()];
            weight.extend(self.pieces.iter().map(|p| -self.bump_expr(&p.bump)));
            terms.push(Expr::sum(weight) * bg.function());
        }
        Expr::sum(terms)
    }

    pub fn evaluate<S: crate::expr::Scalar>(&self, point: &[S]) -> Result<S, EvalError> {
        evaluate(&self.to_expr(), &PointAssignment::space_only(point))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{differentiate, evaluate, VarKind};
    use crate::jet::{Jet, JetLayout};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn naming1() -> Arc<Naming> {
        Naming::new(["x"], ["u"])
    }

    #[test]
    fn taylor_examples() {
        let jet = AnyJet::Exact(Jet::from_values(JetLayout::new(1, 1, 2), vec![q(1, 1), q(2, 1), q(6, 1)]));
        let p = taylor_from_jet(&[q(0, 1)], &jet, &naming1());
        assert_eq!(p[0].to_string(), "2*x + 3*x^2 + 1");
        let zero = AnyJet::Exact(Jet::zeros(JetLayout::new(1, 1, 3)));
        assert!(taylor_from_jet(&[q(1, 2)], &zero, &naming1())[0].is_zero());
        let n2 = Naming::new(["x", "y"], ["u"]);
        let layout = JetLayout::new(2, 1, 2);
        let mut j = Jet::zeros(layout);
        j.set(0, &MultiIndex::new([1, 1]), q(4, 1));
        let p = taylor_from_jet(&[q(0, 1), q(0, 1)], &AnyJet::Exact(j), &n2);
        assert_eq!(p[0].to_string(), "4*x*y");
    }

    #[test]
    fn taylor_reproduces_the_jet() {
        let n2 = Naming::new(["x", "y"], ["u", "v"]);
        let layout = JetLayout::new(2, 2, 3);
        let values: Vec<Rational> = (0..layout.len()).map(|i| q(i as i64 * 7 % 11 - 5, 1 + i as i64 % 4)).collect();
        let jet = Jet::from_values(layout.clone(), values);
        let a = [q(1, 3), q(-2, 5)];
        let polys = taylor_from_jet(&a, &AnyJet::Exact(jet.clone()), &n2);
        for (u, p) in layout.coords() {
            let mut d = polys[*u].clone();
            for (axis, &k) in p.entries().iter().enumerate() {
                for _ in 0..k {
                    d = differentiate(&d, &VarKind::Space(axis));
                }
            }
            let v: Rational = evaluate(&d, &PointAssignment::space_only(&a)).unwrap();
            assert_eq!(&v, jet.get(*u, p).unwrap());
        }
    }

    #[test]
    fn bump_examples() {
        let d = [(q(0, 1), q(1, 1))];
        let b = make_bumps(&[vec![q(1, 4)], vec![q(3, 4)]], &d, &q(1, 2)).unwrap();
        assert!(b.iter().all(|b| b.r_out == q(1, 8) && b.r_in == q(1, 16)));
        let b = make_bumps(&[vec![q(1, 2)]], &d, &q(1, 2)).unwrap();
        assert_eq!(b[0].r_out, q(1, 4));
        assert!(matches!(
            make_bumps(&[vec![q(1, 2)], vec![q(1, 2)]], &d, &q(1, 2)),
            Err(ConstructError::DuplicatePoint { first: 0, second: 1 })
        ));
        assert!(matches!(make_bumps(&[vec![q(1, 1)]], &d, &q(1, 2)), Err(ConstructError::OutsideDomain { index: 0 })));
    }

    #[test]
    fn supports_are_disjoint_in_2d() {
        let d = vec![(q(0, 1), q(1, 1)); 2];
        let pts = crate::constructor::enumerate_dense(&d, crate::constructor::DenseScheme::Dyadic, 12).unwrap();
        let b = make_bumps(&pts, &d, &q(1, 2)).unwrap();
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                let dist2: Rational = pts[i].iter().zip(&pts[j]).map(|(x, y)| (x - y) * (x - y)).sum();
                let reach = &b[i].r_out + &b[j].r_out;
                assert!(dist2 > &reach * &reach);
            }
        }
    }

    #[test]
    fn assembled_function_is_zero_off_support_and_polynomial_on_plateau() {
        let n = naming1();
        let d = [(q(0, 1), q(1, 1))];
        let pts = vec![vec![q(1, 4)], vec![q(3, 4)]];
        let bumps = make_bumps(&pts, &d, &q(1, 2)).unwrap();
        let x = Expr::var(Variable::space(0, &n));
        let pieces = vec![
            Piece { bump: bumps[0].clone(), function: x.clone() },
            Piece { bump: bumps[1].clone(), function: x.clone() * x.clone() },
        ];
        let f = AssembledFunction::new(n, pieces, None);
        assert_eq!(f.evaluate(&[q(1, 2)]).unwrap(), q(0, 1));
        assert_eq!(f.evaluate(&[0.5f64]).unwrap(), 0.0);
        assert_eq!(f.evaluate(&[q(3, 4)]).unwrap(), q(9, 16));
        assert_eq!(f.evaluate(&[q(1, 4) + q(1, 32)]).unwrap(), q(9, 32));
        let v: f64 = f.evaluate(&[0.25 + 0.1]).unwrap();
        assert!(v > 0.0 && v < 0.35);
    }

    #[test]
    fn background_fills_the_gaps() {
        let n = naming1();
        let d = [(q(-1, 1), q(1, 1))];
        let bumps = make_bumps(&[vec![q(0, 1)]], &d, &q(1, 2)).unwrap();
        let bg = Background { lambda: q(1, 4), minus: Expr::int(-1), plus: Expr::int(1) };
        let f = AssembledFunction::new(n, vec![Piece { bump: bumps[0].clone(), function: Expr::int(5) }], Some(bg));
        assert_eq!(f.evaluate(&[q(0, 1)]).unwrap(), q(5, 1));
        assert_eq!(f.evaluate(&[q(9, 10)]).unwrap(), q(-1, 2));
    }
}
