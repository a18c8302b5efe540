//! Truncated, point-wise checks of the vanishing ideal: a sequence `w` belongs
//! to it at `x` when, for every order `l`, all `D^p w_μ(x)` with `|p| <= l` vanish
//! for every `μ` past some witness `ν`.

mod verify;

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{
    differentiate, evaluate, rational_text, substitute, EvalError, Expr, Naming, PointAssignment, Rational,
    Scalar, VarKind, Variable,
};
use crate::jet::{Arithmetic, ArithmeticMode, PdeOperator};
use crate::multi_index::MultiIndex;
use crate::par;

pub use verify::{
    diagonal_probe, family_closure_check, verify_solution, ClosureReport, VerifyFailure, VerifyReport,
};

/// Zero tolerance for floating point vanishing checks.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdealError {
    #[error("the sequence is one-dimensional only; got {0} space variables")]
    NotOneDimensional(usize),
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("point {0} is not strictly inside the box")]
    OutsideDomain(usize),
    #[error("{points} points for {orders} orders")]
    LengthMismatch { points: usize, orders: usize },
    #[error("term {term} at point {point_index}: {error}")]
    Eval { term: usize, point_index: usize, error: EvalError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Constructed,
    PowerProduct,
    Diagonal,
    User,
    Derived,
}

/// `w_0, …, w_N`: a truncation of a sequence of smooth functions.
#[derive(Debug, Clone)]
pub struct FunctionSequence {
    pub naming: Arc<Naming>,
    pub terms: Vec<Expr>,
    pub provenance: Provenance,
}

impl FunctionSequence {
    pub fn new(naming: Arc<Naming>, terms: Vec<Expr>, provenance: Provenance) -> Self {
        FunctionSequence { naming, terms, provenance }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(ψ, ψ, …, ψ)` with `len` terms.
    pub fn constant(naming: Arc<Naming>, psi: Expr, len: usize) -> Self {
        FunctionSequence { naming, terms: vec![psi; len], provenance: Provenance::Diagonal }
    }

    /// Termwise `D^q w_ν`.
    pub fn derivative(&self, q: &MultiIndex) -> Self {
        let terms = par::map(&self.terms, |t| space_derivative(t, q));
        FunctionSequence { naming: self.naming.clone(), terms, provenance: Provenance::Derived }
    }

    /// Termwise `a_ν · w_ν`; the shorter length wins.
    pub fn product(&self, other: &FunctionSequence) -> Self {
        let terms = self.terms.iter().zip(&other.terms).map(|(a, b)| a.clone() * b.clone()).collect();
        FunctionSequence { naming: self.naming.clone(), terms, provenance: Provenance::Derived }
    }
}

fn space_derivative(e: &Expr, q: &MultiIndex) -> Expr {
    let mut d = e.clone();
    for (axis, &k) in q.entries().iter().enumerate() {
        for _ in 0..k {
            d = differentiate(&d, &VarKind::Space(axis));
        }
    }
    d
}

/// Test points of `X \ Σ`: a finite set of distinct points inside a box.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityComplement {
    pub domain: Vec<(Rational, Rational)>,
    pub points: Vec<Vec<Rational>>,
}

impl SingularityComplement {
    pub fn new(domain: Vec<(Rational, Rational)>, points: Vec<Vec<Rational>>) -> Result<Self, IdealError> {
        for (i, p) in points.iter().enumerate() {
            let inside = p.len() == domain.len() && p.iter().zip(&domain).all(|(x, (lo, hi))| lo < x && x < hi);
            if !inside {
                return Err(IdealError::OutsideDomain(i));
            }
            if let Some(j) = points[..i].iter().position(|q| q == p) {
                return Err(IdealError::DuplicatePoint(j, i));
            }
        }
        Ok(SingularityComplement { domain, points })
    }

    pub fn truncated(&self, len: usize) -> Self {
        SingularityComplement { domain: self.domain.clone(), points: self.points.iter().take(len).cloned().collect() }
    }

    pub fn point_set(&self) -> BTreeSet<Vec<Rational>> {
        self.points.iter().cloned().collect()
    }

    pub fn is_subset_of(&self, other: &SingularityComplement) -> bool {
        let o = other.point_set();
        self.points.iter().all(|p| o.contains(p))
    }
}

/// `w_ν = G_j(x, D^q s_ν(x))` for each equation `j`: one sequence per equation.
pub fn error_sequence(op: &PdeOperator, s: &crate::constructor::SolutionSequence) -> Vec<FunctionSequence> {
    let per_stage: Vec<Vec<Expr>> = par::map(&s.stages, |stage| {
        let funcs: Vec<Expr> = stage.functions.iter().map(|f| f.to_expr()).collect();
        error_terms(op, &funcs)
    });
    (0..op.equations().len())
        .map(|j| {
            FunctionSequence::new(
                op.naming().clone(),
                per_stage.iter().map(|w| w[j].clone()).collect(),
                Provenance::Constructed,
            )
        })
        .collect()
}

/// `G_j` with every jet coordinate `ξ_{u,q}` replaced by `D^q u`.
pub fn error_terms(op: &PdeOperator, us: &[Expr]) -> Vec<Expr> {
    let mut memo: HashMap<VarKind, Expr> = HashMap::new();
    for g in op.equations() {
        for v in crate::expr::jet_variables(g) {
            if let VarKind::Jet { unknown, index } = v.kind() {
                memo.entry(v.kind().clone()).or_insert_with(|| space_derivative(&us[*unknown], index));
            }
        }
    }
    op.equations().iter().map(|g| substitute(g, &memo)).collect()
}

/// `w_ν(x) = Π_{i <= ν} (x - x_i)^{l_ν}`.
pub fn power_product_sequence(points: &[Vec<Rational>], schedule: &[u32]) -> Result<FunctionSequence, IdealError> {
    if let Some(p) = points.iter().find(|p| p.len() != 1) {
        return Err(IdealError::NotOneDimensional(p.len()));
    }
    if points.len() != schedule.len() {
        return Err(IdealError::LengthMismatch { points: points.len(), orders: schedule.len() });
    }
    for (i, p) in points.iter().enumerate() {
        if let Some(j) = points[..i].iter().position(|q| q == p) {
            return Err(IdealError::DuplicatePoint(j, i));
        }
    }
    let naming = Naming::new(["x"], Vec::<String>::new());
    let x = Expr::var(Variable::space(0, &naming));
    let terms = (0..points.len())
        .map(|nu| {
            let factors = points[..=nu]
                .iter()
                .map(|p| Expr::powi(x.clone() - Expr::constant(p[0].clone()), schedule[nu] as i64))
                .collect();
            Expr::product(factors)
        })
        .collect();
    Ok(FunctionSequence::new(naming, terms, Provenance::PowerProduct))
}

/// First non-vanishing derivative of a term at a point, by graded order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nonzero {
    pub index: Vec<u32>,
    pub value: String,
}

/// How far a term vanishes at a point: every `D^p` with `|p| < order` is zero.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Profile {
    pub arithmetic: Arithmetic,
    /// `None`: all derivatives up to the probed order vanish.
    pub first_nonzero: Option<(MultiIndex, String)>,
}

impl Profile {
    /// Whether all `D^p` with `|p| <= l` vanish.
    pub fn vanishes_to(&self, l: u32) -> bool {
        self.first_nonzero.as_ref().is_none_or(|(p, _)| p.order() > l)
    }
}

fn values_of<S: Scalar>(exprs: &[(MultiIndex, Expr)], x: &[S]) -> Result<Vec<S>, EvalError> {
    let a = PointAssignment::space_only(x);
    exprs.iter().map(|(_, e)| evaluate(e, &a)).collect()
}

/// Vanishing profiles of `term` at each point, probing orders up to `max_order`.
/// Exact arithmetic is tried first per point and abandoned on inexact values.
pub(crate) fn profiles(
    term: &Expr,
    points: &[Vec<Rational>],
    max_order: u32,
    mode: ArithmeticMode,
    tol: f64,
) -> Result<Vec<Profile>, (usize, EvalError)> {
    let n = points.first().map_or(0, Vec::len);
    let mut memo: HashMap<MultiIndex, Expr> = HashMap::new();
    memo.insert(MultiIndex::zero(n), term.clone());
    let mut out: Vec<Option<Profile>> = vec![None; points.len()];
    let mut arith = vec![
        match mode {
            ArithmeticMode::Exact => Arithmetic::Exact,
            ArithmeticMode::Float => Arithmetic::Float,
        };
        points.len()
    ];
    for s in 0..=max_order {
        let open: Vec<usize> = (0..points.len()).filter(|&i| out[i].is_none()).collect();
        if open.is_empty() {
            break;
        }
        let level: Vec<(MultiIndex, Expr)> = MultiIndex::of_order(n, s)
            .into_iter()
            .map(|p| {
                let e = match p.first_axis() {
                    None => term.clone(),
                    Some(axis) => {
                        let parent = &memo[&p.lowered(axis).expect("nonzero")];
                        differentiate(parent, &VarKind::Space(axis))
                    }
                };
                (p, e)
            })
            .collect();
        for (p, e) in &level {
            memo.insert(p.clone(), e.clone());
        }
        let found = par::map(&open, |&i| {
            let x = &points[i];
            if arith[i] == Arithmetic::Exact {
                match values_of::<Rational>(&level, x) {
                    Ok(vals) => {
                        let nz = vals.iter().position(|v| !v.vanishes());
                        return Ok((Arithmetic::Exact, nz.map(|k| (level[k].0.clone(), rational_text(&vals[k])))));
                    }
                    Err(EvalError::Inexact) => {}
                    Err(e) => return Err((i, e)),
                }
            }
            let xf: Vec<f64> = x.iter().map(Scalar::as_f64).collect();
            let vals = values_of::<f64>(&level, &xf).map_err(|e| (i, e))?;
            let nz = vals.iter().position(|v| v.abs() > tol || v.is_nan());
            Ok((Arithmetic::Float, nz.map(|k| (level[k].0.clone(), format!("{:?}", vals[k])))))
        });
        for (&i, r) in open.iter().zip(found) {
            let (a, nz) = r?;
            arith[i] = a;
            if let Some(first) = nz {
                out[i] = Some(Profile { arithmetic: a, first_nonzero: Some(first) });
            }
        }
    }
    Ok(out
        .into_iter()
        .zip(arith)
        .map(|(p, a)| p.unwrap_or(Profile { arithmetic: a, first_nonzero: None }))
        .collect())
}

/// `profiles` for every term: `table[μ][i]`.
pub(crate) fn profile_table(
    w: &FunctionSequence,
    points: &[Vec<Rational>],
    max_orders: &[u32],
    mode: ArithmeticMode,
    tol: f64,
) -> Result<Vec<Vec<Profile>>, IdealError> {
    let jobs: Vec<usize> = (0..w.len()).collect();
    let rows = par::map(&jobs, |&mu| profiles(&w.terms[mu], points, max_orders[mu], mode, tol));
    rows.into_iter()
        .enumerate()
        .map(|(term, r)| r.map_err(|(point_index, error)| IdealError::Eval { term, point_index, error }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingEntry {
    pub point_index: usize,
    pub point: Vec<String>,
    pub order: u32,
    /// Least `ν` with `D^p w_μ(x) = 0` for all `μ ∈ [ν, N]`, `|p| <= order`.
    pub witness: Option<usize>,
    pub verified_range: Option<[usize; 2]>,
    pub arithmetic: Arithmetic,
    /// The last term that does not vanish, with its first non-zero derivative.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocking_term: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocking: Option<Nonzero>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingReport {
    /// Index `N` of the last term inspected.
    pub truncation: Option<usize>,
    pub arithmetic: Arithmetic,
    pub tolerance: f64,
    pub entries: Vec<VanishingEntry>,
}

impl VanishingReport {
    pub fn all_witnessed(&self) -> bool {
        self.entries.iter().all(|e| e.witness.is_some())
    }

    pub fn witness(&self, point_index: usize, order: u32) -> Option<Option<usize>> {
        self.entries
            .iter()
            .find(|e| e.point_index == point_index && e.order == order)
            .map(|e| e.witness)
    }
}

pub(crate) fn report_from_table(
    table: &[Vec<Profile>],
    points: &[Vec<Rational>],
    orders: &[u32],
    tol: f64,
) -> VanishingReport {
    let n_terms = table.len();
    let mut entries = Vec::with_capacity(points.len() * orders.len());
    for (i, x) in points.iter().enumerate() {
        let arithmetic = if table.iter().all(|row| row[i].arithmetic == Arithmetic::Exact) {
            Arithmetic::Exact
        } else {
            Arithmetic::Float
        };
        for &l in orders {
            let blocking_term = (0..n_terms).rev().find(|&mu| !table[mu][i].vanishes_to(l));
            let witness = match blocking_term {
                None => Some(0),
                Some(mu) if mu + 1 < n_terms => Some(mu + 1),
                Some(_) => None,
            };
            let blocking = blocking_term.and_then(|mu| {
                table[mu][i]
                    .first_nonzero
                    .as_ref()
                    .map(|(p, v)| Nonzero { index: p.entries().to_vec(), value: v.clone() })
            });
            entries.push(VanishingEntry {
                point_index: i,
                point: x.iter().map(rational_text).collect(),
                order: l,
                witness,
                verified_range: witness.map(|nu| [nu, n_terms - 1]),
                arithmetic,
                blocking_term,
                blocking,
            });
        }
    }
    let arithmetic = if entries.iter().all(|e| e.arithmetic == Arithmetic::Exact) {
        Arithmetic::Exact
    } else {
        Arithmetic::Float
    };
    VanishingReport { truncation: n_terms.checked_sub(1), arithmetic, tolerance: tol, entries }
}

/// For every `(x, l)`: the least witness `ν` such that every term from `ν` to `N`
/// vanishes at `x` to order `l`, checked for every term in that range.
pub fn check_vanishing(
    w: &FunctionSequence,
    z: &SingularityComplement,
    orders: &[u32],
    mode: ArithmeticMode,
    tol: f64,
) -> Result<VanishingReport, IdealError> {
    let top = orders.iter().copied().max().unwrap_or(0);
    let table = profile_table(w, &z.points, &vec![top; w.len()], mode, tol)?;
    Ok(report_from_table(&table, &z.points, orders, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructor::{construct_sequence, enumerate_dense, linear_schedule, ConstructOptions, DenseScheme};
    use crate::expr::{parse_expression, ParseContext};
    use crate::jet::parse_pde;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn unit() -> Vec<(Rational, Rational)> {
        vec![(q(0, 1), q(1, 1))]
    }

    fn dyadic(count: usize) -> SingularityComplement {
        SingularityComplement::new(unit(), enumerate_dense(&unit(), DenseScheme::Dyadic, count).unwrap()).unwrap()
    }

    fn x1() -> Arc<Naming> {
        Naming::new(["x"], Vec::<String>::new())
    }

    #[test]
    fn zero_and_constant_sequences() {
        let z = dyadic(4);
        let zero = FunctionSequence::constant(x1(), Expr::zero(), 5);
        let r = check_vanishing(&zero, &z, &[0, 1, 3], ArithmeticMode::Exact, DEFAULT_ZERO_TOL).unwrap();
        assert!(r.entries.iter().all(|e| e.witness == Some(0)));
        assert_eq!(r.arithmetic, Arithmetic::Exact);
        let one = FunctionSequence::constant(x1(), Expr::one(), 5);
        let r = check_vanishing(&one, &z, &[0, 2], ArithmeticMode::Exact, DEFAULT_ZERO_TOL).unwrap();
        assert!(r.entries.iter().all(|e| e.witness.is_none() && e.blocking_term == Some(4)));
    }

    #[test]
    fn power_product_sequence_first_term() {
        let w = power_product_sequence(&[vec![q(1, 2)]], &[1]).unwrap();
        assert_eq!(w.terms[0].to_string(), "x - 1/2");
        assert!(power_product_sequence(&[vec![q(1, 2), q(1, 3)]], &[1]).is_err());
        assert!(power_product_sequence(&[vec![q(1, 2)], vec![q(1, 2)]], &[1, 2]).is_err());
    }

    /// `max(j, min{ν : l_ν > l})`, read off the factorisation of `w_μ`.
    fn expected_witness(j: usize, l: u32, schedule: &[u32]) -> Option<usize> {
        let first = schedule.iter().position(|&lv| lv > l)?;
        Some(j.max(first))
    }

    #[test]
    fn power_product_sequence_witnesses_match_factorisation() {
        let z = dyadic(6);
        let schedule: Vec<u32> = (1..=6).collect();
        let w = power_product_sequence(&z.points, &schedule).unwrap();
        let orders: Vec<u32> = (0..=6).collect();
        let r = check_vanishing(&w, &z, &orders, ArithmeticMode::Exact, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(r.arithmetic, Arithmetic::Exact);
        for e in &r.entries {
            assert_eq!(e.witness, expected_witness(e.point_index, e.order, &schedule), "{e:?}");
        }
    }

    #[test]
    fn transcendental_terms_fall_back_to_float() {
        let z = dyadic(3);
        let ctx = ParseContext::new(x1());
        let w = FunctionSequence::new(x1(), vec![parse_expression("sin(x)*0 + exp(x) - exp(x)", &ctx).unwrap()], Provenance::User);
        let r = check_vanishing(&w, &z, &[1], ArithmeticMode::Exact, DEFAULT_ZERO_TOL).unwrap();
        assert!(r.all_witnessed());
    }

    #[test]
    fn constructed_error_sequence_vanishes_at_stage_points() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x = 1\n").unwrap();
        let pts = enumerate_dense(op.domain(), DenseScheme::Dyadic, 3).unwrap();
        let seq = construct_sequence(&op, &pts, &linear_schedule(3), &ConstructOptions::default()).unwrap();
        let w = error_sequence(&op, &seq);
        assert_eq!(w.len(), 1);
        let table = profile_table(&w[0], &pts, &[0, 1, 2], ArithmeticMode::Exact, DEFAULT_ZERO_TOL).unwrap();
        for (mu, row) in table.iter().enumerate() {
            for p in &row[..=mu] {
                assert!(p.vanishes_to(mu as u32) && p.arithmetic == Arithmetic::Exact, "{mu}: {p:?}");
            }
        }
    }

    #[test]
    fn global_solution_error_is_zero() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x = 1\n").unwrap();
        let ctx = ParseContext::new(op.naming().clone());
        let w = error_terms(&op, &[parse_expression("x", &ctx).unwrap()]);
        assert!(w[0].is_zero());
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x\n").unwrap();
        assert!(error_terms(&op, &[Expr::zero()])[0].is_zero());
    }

    #[test]
    fn complements_validate() {
        assert!(SingularityComplement::new(unit(), vec![vec![q(1, 2)], vec![q(1, 2)]]).is_err());
        assert!(SingularityComplement::new(unit(), vec![vec![q(1, 1)]]).is_err());
        let z = dyadic(5);
        assert!(z.truncated(2).is_subset_of(&z));
        assert!(!z.is_subset_of(&z.truncated(2)));
    }
}
