//! Level-by-level jet solving.
//!
//! Level 0 solves the base equations for the jets they mention; every further
//! level `s` is affine in the jets of order `m + s`, which are found by a
//! least-norm linear solve with all lower jets held fixed.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::expr::{differentiate, evaluate, jet_variables, EvalError, Expr, Rational, Scalar, VarKind};
use crate::jet::{AnyJet, ArithmeticMode, Jet, ProlongedSystem};
use crate::linalg::{least_norm_solve, Matrix, FLOAT_RANK_TOL};

use super::linear::{assemble_linear_system, linearize};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveFailure {
    #[error("no solution at level {level}; residual floor {residual:.3e}")]
    NoSolution { level: u32, residual: f64 },
    #[error("solver failed at level {level}; best residual {residual:.3e}")]
    SolverFailed { level: u32, residual: f64 },
    #[error("evaluation failed: {0}")]
    Eval(EvalError),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Accepted residual on every prolonged equation (floating point runs).
    pub tol: f64,
    /// Residual at which a Newton run counts as converged.
    pub newton_tol: f64,
    pub max_iterations: usize,
    pub mode: ArithmeticMode,
    /// Pinned jet values; dropped if they make the system inconsistent.
    pub seed: Vec<(VarKind, Rational)>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-9, newton_tol: 1e-12, max_iterations: 200, mode: ArithmeticMode::Exact, seed: Vec::new() }
    }
}

enum Block {
    Failed(SolveFailure),
    NeedsFloat,
}

impl From<EvalError> for Block {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Inexact => Block::NeedsFloat,
            other => Block::Failed(SolveFailure::Eval(other)),
        }
    }
}

/// A jet of order `m + l` on which every `F_{j,p}` vanishes (exactly, or to `tol`).
pub fn solve_jets_triangular(
    sys: &ProlongedSystem,
    x: &[Rational],
    opts: &SolveOptions,
) -> Result<AnyJet, SolveFailure> {
    let first = solve_pinned(sys, x, opts, !opts.seed.is_empty());
    let result = match first {
        Err(_) if !opts.seed.is_empty() => solve_pinned(sys, x, opts, false),
        other => other,
    };
    match result {
        Err(SolveFailure::NoSolution { .. }) => global_linear(sys, x, opts).unwrap_or(result),
        other => other,
    }
}

fn solve_pinned(sys: &ProlongedSystem, x: &[Rational], opts: &SolveOptions, pin: bool) -> Result<AnyJet, SolveFailure> {
    if opts.mode == ArithmeticMode::Exact {
        match triangular::<Rational>(sys, x, opts, pin) {
            Ok(j) => return Ok(AnyJet::Exact(j)),
            Err(Block::Failed(f)) => return Err(f),
            Err(Block::NeedsFloat) => {}
        }
    }
    match triangular::<f64>(sys, x, opts, pin) {
        Ok(j) => Ok(AnyJet::Float(j)),
        Err(Block::Failed(f)) => Err(f),
        Err(Block::NeedsFloat) => unreachable!("floating point never asks for itself"),
    }
}

/// For linear systems the whole prolonged system is solved at once when the
/// level-by-level route is blocked by a lower-order choice.
fn global_linear(sys: &ProlongedSystem, x: &[Rational], opts: &SolveOptions) -> Option<Result<AnyJet, SolveFailure>> {
    let dec = linearize(sys).ok()?;
    if opts.mode == ArithmeticMode::Exact {
        if let Ok((p, q)) = assemble_linear_system::<Rational>(&dec, x) {
            let b: Vec<Rational> = (0..q.rows()).map(|i| q.get(i, q.cols() - 1).clone()).collect();
            let sol = least_norm_solve(&p, &b, FLOAT_RANK_TOL).ok()?;
            return Some(Ok(AnyJet::Exact(Jet::from_values(dec.layout.clone(), sol))));
        }
    }
    let xf: Vec<f64> = x.iter().map(Scalar::as_f64).collect();
    let (p, q) = assemble_linear_system::<f64>(&dec, &xf).ok()?;
    let b: Vec<f64> = (0..q.rows()).map(|i| *q.get(i, q.cols() - 1)).collect();
    let sol = least_norm_solve(&p, &b, FLOAT_RANK_TOL).ok()?;
    let jet = Jet::from_values(dec.layout.clone(), sol);
    check_residuals(sys, &jet, &xf, opts.tol).ok()?;
    Some(Ok(AnyJet::Float(jet)))
}

fn triangular<S: Scalar>(sys: &ProlongedSystem, x: &[Rational], opts: &SolveOptions, pin: bool) -> Result<Jet<S>, Block> {
    let layout = sys.jet_layout();
    let point: Vec<S> = x.iter().map(S::from_rational).collect();
    let mut jet: Jet<S> = Jet::zeros(layout.clone());
    let mut pinned = vec![false; layout.len()];
    let mut start = vec![None; layout.len()];
    for (kind, v) in &opts.seed {
        if let Some(i) = layout.position_of(kind) {
            start[i] = Some(v.as_f64());
            if pin {
                jet.set_at(i, S::from_rational(v));
                pinned[i] = true;
            }
        }
    }
    let m = sys.top_order - sys.level;
    for s in 0..=sys.level {
        let eqs: Vec<&Expr> = sys.of_level(s).map(|e| &e.expr).collect();
        let mut unknowns = BTreeSet::new();
        for e in &eqs {
            for v in jet_variables(e) {
                let i = layout.position_of(v.kind()).expect("jet within the prolonged order");
                let new = if s == 0 { true } else { v.kind().jet_order() == Some(m + s) };
                if new && !pinned[i] {
                    unknowns.insert(i);
                }
            }
        }
        let unknowns: Vec<usize> = unknowns.into_iter().collect();
        solve_block(&eqs, &unknowns, &mut jet, &point, &start, s, opts)?;
    }
    if !S::EXACT {
        let xf: Vec<f64> = point.iter().map(Scalar::as_f64).collect();
        check_residuals(sys, &jet.to_f64(), &xf, opts.tol).map_err(Block::Failed)?;
    } else {
        for e in &sys.equations {
            let v: S = evaluate(&e.expr, &jet.at(&point))?;
            if !v.vanishes() {
                return Err(Block::Failed(SolveFailure::NoSolution { level: e.index.order(), residual: v.as_f64().abs() }));
            }
        }
    }
    Ok(jet)
}

fn check_residuals(sys: &ProlongedSystem, jet: &Jet<f64>, x: &[f64], tol: f64) -> Result<(), SolveFailure> {
    for e in &sys.equations {
        let v: f64 = evaluate(&e.expr, &jet.at(x)).map_err(SolveFailure::Eval)?;
        if v.abs() > tol {
            return Err(SolveFailure::NoSolution { level: e.index.order(), residual: v.abs() });
        }
    }
    Ok(())
}

fn solve_block<S: Scalar>(
    eqs: &[&Expr],
    unknowns: &[usize],
    jet: &mut Jet<S>,
    point: &[S],
    start: &[Option<f64>],
    level: u32,
    opts: &SolveOptions,
) -> Result<(), Block> {
    let layout = jet.layout().clone();
    let kinds: Vec<VarKind> = unknowns.iter().map(|&i| layout.kind(i)).collect();
    let derivs: Vec<Vec<Expr>> = eqs.iter().map(|e| kinds.iter().map(|k| differentiate(e, k)).collect()).collect();
    let affine = derivs.iter().flatten().all(|d| {
        jet_variables(d).iter().all(|v| layout.position_of(v.kind()).is_none_or(|i| !unknowns.contains(&i)))
    });
    for &i in unknowns {
        jet.set_at(i, S::zero());
    }
    if affine {
        let mut a = Matrix::zeros(eqs.len(), unknowns.len());
        let mut b = Vec::with_capacity(eqs.len());
        for (r, e) in eqs.iter().enumerate() {
            for (c, d) in derivs[r].iter().enumerate() {
                a.set(r, c, evaluate(d, &jet.at(point))?);
            }
            b.push(-evaluate::<S, _>(e, &jet.at(point))?);
        }
        let sol = least_norm_solve(&a, &b, FLOAT_RANK_TOL)
            .map_err(|inc| Block::Failed(SolveFailure::NoSolution { level, residual: inc.residual }))?;
        for (&i, v) in unknowns.iter().zip(sol) {
            jet.set_at(i, v);
        }
        return Ok(());
    }
    if S::EXACT {
        return Err(Block::NeedsFloat);
    }
    let base: Jet<f64> = jet.to_f64();
    let xf: Vec<f64> = point.iter().map(Scalar::as_f64).collect();
    let problem = Newton { eqs, derivs: &derivs, unknowns, base: &base, x: &xf };
    let seed: Vec<f64> = unknowns.iter().map(|&i| start[i].unwrap_or(0.0)).collect();
    let has_seed = unknowns.iter().any(|&i| start[i].is_some());
    let root = problem.multistart(has_seed.then_some(seed), opts, level).map_err(Block::Failed)?;
    for (&i, v) in unknowns.iter().zip(root) {
        jet.set_at(i, S::try_from_f64(v).map_err(Block::from)?);
    }
    Ok(())
}

struct Newton<'a> {
    eqs: &'a [&'a Expr],
    derivs: &'a [Vec<Expr>],
    unknowns: &'a [usize],
    base: &'a Jet<f64>,
    x: &'a [f64],
}

enum RunEnd {
    Converged(Vec<f64>),
    Stationary(f64),
    Exhausted(f64),
}

const GRID: usize = 8;
/// Consecutive iterations without relative progress before a run is declared stationary.
const STALL: usize = 30;

impl Newton<'_> {
    fn jet_at(&self, z: &[f64]) -> Jet<f64> {
        let mut j = self.base.clone();
        for (&i, v) in self.unknowns.iter().zip(z) {
            j.set_at(i, *v);
        }
        j
    }

    fn residual(&self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        let j = self.jet_at(z);
        self.eqs.iter().map(|e| evaluate(e, &j.at(self.x))).collect()
    }

    fn jacobian(&self, z: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        let j = self.jet_at(z);
        self.derivs
            .iter()
            .map(|row| row.iter().map(|d| evaluate(d, &j.at(self.x))).collect())
            .collect()
    }

    /// Deterministic starts: the seed, then `8·d` points whose coordinates walk the
    /// grid `-2 + 4k/7` with axis-dependent strides.
    fn starts(&self, seed: Option<Vec<f64>>) -> Vec<Vec<f64>> {
        let d = self.unknowns.len();
        let grid: Vec<f64> = (0..GRID).map(|k| -2.0 + 4.0 * k as f64 / (GRID - 1) as f64).collect();
        let mut out: Vec<Vec<f64>> = seed.into_iter().collect();
        for s in 0..GRID * d.max(1) {
            let (block, b) = (s / GRID, s % GRID);
            out.push((0..d).map(|i| grid[(b + i * (2 * block + 1)) % GRID]).collect());
        }
        out
    }

    fn multistart(&self, seed: Option<Vec<f64>>, opts: &SolveOptions, level: u32) -> Result<Vec<f64>, SolveFailure> {
        let mut roots = Vec::new();
        let mut stationary: Option<f64> = None;
        let mut best = f64::INFINITY;
        for z0 in self.starts(seed) {
            match self.run(z0, opts) {
                Ok(RunEnd::Converged(z)) => roots.push(z),
                Ok(RunEnd::Stationary(r)) => {
                    stationary = Some(stationary.map_or(r, |s: f64| s.min(r)));
                    best = best.min(r);
                }
                Ok(RunEnd::Exhausted(r)) => best = best.min(r),
                Err(_) => {}
            }
        }
        if roots.is_empty() {
            return Err(match stationary {
                Some(r) if r <= best => SolveFailure::NoSolution { level, residual: r },
                _ => SolveFailure::SolverFailed { level, residual: best },
            });
        }
        Ok(pick_root(roots))
    }

    /// Levenberg–Marquardt in least-norm form, `δ = -Jᵀ (J Jᵀ + μ I)⁻¹ R`, with
    /// gain-ratio damping updates.
    fn run(&self, mut z: Vec<f64>, opts: &SolveOptions) -> Result<RunEnd, EvalError> {
        let mut r = self.residual(&z)?;
        let mut mu: Option<f64> = None;
        let mut nu = 2.0;
        let mut stalled = 0;
        for _ in 0..opts.max_iterations {
            if inf_norm(&r) <= opts.newton_tol {
                return Ok(RunEnd::Converged(z));
            }
            let j = self.jacobian(&z)?;
            let grad: Vec<f64> = (0..z.len()).map(|c| j.iter().zip(&r).map(|(row, ri)| row[c] * ri).sum()).collect();
            let sq = dot(&r, &r);
            if inf_norm(&grad) <= 1e-10 * (1.0 + sq.sqrt()) {
                return Ok(RunEnd::Stationary(sq.sqrt()));
            }
            let damping = *mu.get_or_insert_with(|| {
                let diag = j.iter().map(|row| dot(row, row)).fold(0.0, f64::max);
                1e-8 * diag.max(1.0)
            });
            let Some(step) = lm_step(&j, &r, damping) else {
                mu = Some(damping * nu);
                nu *= 2.0;
                continue;
            };
            let model: Vec<f64> = j.iter().zip(&r).map(|(row, ri)| ri + dot(row, &step)).collect();
            let predicted = sq - dot(&model, &model);
            let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + b).collect();
            let rt = self.residual(&trial).ok();
            let actual = rt.as_ref().map_or(f64::NEG_INFINITY, |rt| sq - dot(rt, rt));
            let rho = if predicted > 0.0 { actual / predicted } else { -1.0 };
            if rho > 0.0 && actual > 1e-12 * sq {
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= STALL {
                    return Ok(RunEnd::Stationary(sq.sqrt()));
                }
            }
            if rho > 0.0 {
                z = trial;
                r = rt.expect("accepted trial has a residual");
                mu = Some(damping * (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3)));
                nu = 2.0;
            } else {
                mu = Some(damping * nu);
                nu *= 2.0;
            }
        }
        if inf_norm(&r) <= opts.newton_tol {
            return Ok(RunEnd::Converged(z));
        }
        Ok(RunEnd::Exhausted(dot(&r, &r).sqrt()))
    }
}

fn lm_step(j: &[Vec<f64>], r: &[f64], mu: f64) -> Option<Vec<f64>> {
    let n = r.len();
    let d = j.first().map_or(0, Vec::len);
    let mut g: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| dot(&j[a], &j[b])).collect()).collect();
    for (i, row) in g.iter_mut().enumerate() {
        row[i] += mu;
    }
    let gm = Matrix::from_rows(g);
    let y = least_norm_solve(&gm, r, 1e-14).ok()?;
    Some((0..d).map(|c| -(0..n).map(|a| j[a][c] * y[a]).sum::<f64>()).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Smallest norm; among equal norms, lexicographically larger coordinates.
fn pick_root(roots: Vec<Vec<f64>>) -> Vec<f64> {
    let norm = |z: &[f64]| dot(z, z).sqrt();
    let min = roots.iter().map(|z| norm(z)).fold(f64::INFINITY, f64::min);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    roots
        .into_iter()
        .filter(|z| close(norm(z), min))
        .max_by(|a, b| {
            for (x, y) in a.iter().zip(b) {
                if !close(*x, *y) {
                    return x.partial_cmp(y).unwrap_or(Ordering::Equal);
                }
            }
            Ordering::Equal
        })
        .expect("at least one root")
}
