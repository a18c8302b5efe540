//! Explicit smooth sequences: Taylor polynomials with solved jets glued by
//! disjoint plateau bumps, stage by stage over a growing dense point set.

mod assemble;
mod bracket;
pub mod bump;
mod dense;
mod manifest;

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{rational_text, EvalError, Rational, Scalar};
use crate::jet::{prolong, AnyJet, PdeOperator, ProlongedSystem};
use crate::multi_index::MultiIndex;
use crate::par;
use crate::range::{solve_jets_triangular, SolveFailure, SolveOptions};

pub use assemble::{make_bumps, taylor_from_jet, AssembledFunction, Background, Piece};
pub use bracket::{bracket_interpolate, BracketResult};
pub use bump::{BumpFunction, BumpRegion};
pub use dense::{enumerate_dense, enumerate_dense_in, midpoint, DenseError, DensePointStream, DenseScheme};
pub use manifest::{FailureRecord, Manifest, ManifestError, RadiusRecord, StageRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructError {
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error("points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },
    #[error("point {index} is not strictly inside the domain")]
    OutsideDomain { index: usize },
    #[error("shrink factor {0} is not in (0, 1)")]
    Shrink(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("no jet at point {point_index} ({}): {failure}", .point.join(", "))]
    PointFailed { point_index: usize, point: Vec<String>, failure: SolveFailure },
    #[error("bracket violated at point {point_index} ({}): T U- - f = {minus:.3e}, T U+ - f = {plus:.3e}", .point.join(", "))]
    BracketViolated { point_index: usize, point: Vec<String>, minus: f64, plus: f64 },
    #[error("bisection stalled at point {point_index} with residual {residual:.3e}")]
    BisectionStalled { point_index: usize, residual: f64 },
    #[error("bracket interpolation needs a single equation in a single unknown")]
    NotScalar,
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone)]
pub struct ConstructOptions {
    pub solve: SolveOptions,
    pub shrink: Rational,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions { solve: SolveOptions::default(), shrink: Rational::new(1.into(), 2.into()) }
    }
}

/// One `s_ν`: jets of order `m + l_ν` at `z_0..z_ν` and the assembled function for
/// each unknown.
#[derive(Debug, Clone)]
pub struct Stage {
    pub index: usize,
    pub level: u32,
    pub points: Vec<Vec<Rational>>,
    pub bumps: Vec<Arc<BumpFunction>>,
    pub jets: Vec<AnyJet>,
    pub functions: Vec<AssembledFunction>,
}

impl Stage {
    /// Glue Taylor polynomials of `jets` with the given bumps.
    pub fn from_parts(
        op: &PdeOperator,
        index: usize,
        level: u32,
        points: Vec<Vec<Rational>>,
        bumps: Vec<Arc<BumpFunction>>,
        jets: Vec<AnyJet>,
    ) -> Stage {
        let polys: Vec<Vec<_>> =
            points.iter().zip(&jets).map(|(a, j)| taylor_from_jet(a, j, op.naming())).collect();
        let functions = (0..op.unknowns())
            .map(|u| {
                let pieces = bumps
                    .iter()
                    .zip(&polys)
                    .map(|(b, p)| Piece { bump: b.clone(), function: p[u].clone() })
                    .collect();
                AssembledFunction::new(op.naming().clone(), pieces, None)
            })
            .collect();
        Stage { index, level, points, bumps, jets, functions }
    }

    pub fn is_exact(&self) -> bool {
        self.jets.iter().all(|j| j.as_exact().is_some())
    }

    /// Values on a uniform grid of `per_axis` points per axis (endpoints excluded),
    /// as `(point, unknown, value)` rows.
    pub fn samples(&self, domain: &[(Rational, Rational)], per_axis: usize) -> Result<Vec<(Vec<f64>, usize, f64)>, EvalError> {
        let axes: Vec<Vec<f64>> = domain
            .iter()
            .map(|(lo, hi)| {
                let (lo, hi) = (lo.as_f64(), hi.as_f64());
                (1..=per_axis).map(|k| lo + (hi - lo) * k as f64 / (per_axis + 1) as f64).collect()
            })
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        let grid: Vec<Vec<f64>> = (0..total)
            .map(|mut flat| {
                let mut p = vec![0.0; axes.len()];
                for i in (0..axes.len()).rev() {
                    p[i] = axes[i][flat % per_axis];
                    flat /= per_axis;
                }
                p
            })
            .collect();
        let exprs: Vec<_> = self.functions.iter().map(AssembledFunction::to_expr).collect();
        let rows = par::map(&grid, |p| {
            let a = crate::expr::PointAssignment::space_only(p);
            exprs
                .iter()
                .enumerate()
                .map(|(u, e)| crate::expr::evaluate::<f64, _>(e, &a).map(|v| (p.clone(), u, v)))
                .collect::<Result<Vec<_>, _>>()
        });
        Ok(rows.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().flatten().collect())
    }
}

fn point_text(x: &[Rational]) -> Vec<String> {
    x.iter().map(rational_text).collect()
}

fn solve_points(
    sys: &ProlongedSystem,
    points: &[Vec<Rational>],
    opts: &SolveOptions,
) -> Result<Vec<AnyJet>, ConstructError> {
    let results = par::map(points, |x| solve_jets_triangular(sys, x, opts));
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|failure| ConstructError::PointFailed { point_index: i, point: point_text(&points[i]), failure })
        })
        .collect()
}

/// Jets of order `m + level` at every point of `points`, glued into one function
/// per unknown; on each plateau the function equals the Taylor polynomial of its jet.
pub fn solve_on_discrete_set(
    op: &PdeOperator,
    points: &[Vec<Rational>],
    level: u32,
    opts: &ConstructOptions,
) -> Result<Stage, ConstructError> {
    let bumps = make_bumps(points, op.domain(), &opts.shrink)?;
    let jets = solve_points(&prolong(op, level), points, &opts.solve)?;
    Ok(Stage::from_parts(op, 0, level, points.to_vec(), bumps, jets))
}

/// `s = (s_0, …, s_N)` with `s_ν` built on `z_0..z_ν` at level `l_ν`.
#[derive(Debug, Clone)]
pub struct SolutionSequence {
    pub op: PdeOperator,
    pub points: Vec<Vec<Rational>>,
    pub schedule: Vec<u32>,
    pub shrink: Rational,
    pub stages: Vec<Stage>,
}

impl SolutionSequence {
    pub fn is_exact(&self) -> bool {
        self.stages.iter().all(Stage::is_exact)
    }
}

/// A construction that stopped early, with the stages completed before the failure.
#[derive(Debug, Clone)]
pub struct SequenceFailure {
    pub partial: SolutionSequence,
    pub stage: usize,
    pub error: ConstructError,
}

/// Checks `l_0 <= l_1 <= …`; returns a warning when the schedule never grows.
pub fn validate_schedule(schedule: &[u32]) -> Result<Option<String>, ConstructError> {
    if schedule.is_empty() {
        return Err(ConstructError::Schedule("at least one stage is required".into()));
    }
    if let Some(w) = schedule.windows(2).position(|w| w[1] < w[0]) {
        return Err(ConstructError::Schedule(format!(
            "l_{} = {} exceeds l_{} = {}",
            w,
            schedule[w],
            w + 1,
            schedule[w + 1]
        )));
    }
    let flat = schedule.len() > 1 && schedule.first() == schedule.last();
    Ok(flat.then(|| "the order schedule does not grow over the declared stages".to_string()))
}

/// The default schedule `l_ν = ν`.
pub fn linear_schedule(stages: usize) -> Vec<u32> {
    (0..stages as u32).collect()
}

pub fn construct_sequence(
    op: &PdeOperator,
    z: &[Vec<Rational>],
    schedule: &[u32],
    opts: &ConstructOptions,
) -> Result<SolutionSequence, Box<SequenceFailure>> {
    let mut seq = SolutionSequence {
        op: op.clone(),
        points: z.to_vec(),
        schedule: schedule.to_vec(),
        shrink: opts.shrink.clone(),
        stages: Vec::with_capacity(schedule.len()),
    };
    let fail = |seq: SolutionSequence, stage, error| Err(Box::new(SequenceFailure { partial: seq, stage, error }));
    if let Err(e) = validate_schedule(schedule) {
        return fail(seq, 0, e);
    }
    if z.len() < schedule.len() {
        let e = ConstructError::Schedule(format!("{} stages need {} points, got {}", schedule.len(), schedule.len(), z.len()));
        return fail(seq, 0, e);
    }
    let top = *schedule.last().expect("validated non-empty");
    let full = prolong(op, top);
    let mut systems: HashMap<u32, ProlongedSystem> = HashMap::new();
    let mut cache: HashMap<(usize, u32), AnyJet> = HashMap::new();
    for (nu, &level) in schedule.iter().enumerate() {
        let points = z[..=nu].to_vec();
        let bumps = match make_bumps(&points, op.domain(), &opts.shrink) {
            Ok(b) => b,
            Err(e) => return fail(seq, nu, e),
        };
        let sys = systems.entry(level).or_insert_with(|| full.restricted(level));
        let missing: Vec<usize> = (0..=nu).filter(|j| !cache.contains_key(&(*j, level))).collect();
        let fresh: Vec<Vec<Rational>> = missing.iter().map(|&j| points[j].clone()).collect();
        match solve_points(sys, &fresh, &opts.solve) {
            Ok(jets) => {
                for (j, jet) in missing.into_iter().zip(jets) {
                    cache.insert((j, level), jet);
                }
            }
            Err(ConstructError::PointFailed { point_index, point, failure }) => {
                let e = ConstructError::PointFailed { point_index: missing[point_index], point, failure };
                return fail(seq, nu, e);
            }
            Err(e) => return fail(seq, nu, e),
        }
        let jets = (0..=nu).map(|j| cache[&(j, level)].clone()).collect();
        seq.stages.push(Stage::from_parts(op, nu, level, points, bumps, jets));
    }
    Ok(seq)
}

/// `D^p` of every prolonged equation at each stage point, read off the stage jets:
/// the values `D^p (T s_ν - f)(z_j)` for `|p| <= l_ν`.
pub fn stage_residual_jets(seq: &SolutionSequence) -> Vec<Vec<Vec<(usize, MultiIndex, f64)>>> {
    seq.stages
        .iter()
        .map(|stage| {
            let sys = prolong(&seq.op, stage.level);
            stage
                .points
                .iter()
                .zip(&stage.jets)
                .map(|(x, jet)| {
                    let xf: Vec<f64> = x.iter().map(Scalar::as_f64).collect();
                    let jf = jet.to_f64();
                    sys.equations
                        .iter()
                        .map(|e| {
                            let v = crate::expr::evaluate::<f64, _>(&e.expr, &jf.at(&xf)).unwrap_or(f64::NAN);
                            (e.equation, e.index.clone(), v)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{evaluate, PointAssignment};
    use crate::jet::{apply_operator, parse_pde};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn single_point_solution() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x = 1\n").unwrap();
        let a = vec![q(1, 2)];
        let stage = solve_on_discrete_set(&op, std::slice::from_ref(&a), 0, &ConstructOptions::default()).unwrap();
        let u = stage.functions[0].to_expr();
        let v: Vec<Rational> = apply_operator(&op, std::slice::from_ref(&u), &a).unwrap();
        assert_eq!(v, vec![q(0, 1)]);
        let at: Rational = evaluate(&u, &PointAssignment::space_only(&a)).unwrap();
        let xi = stage.jets[0].as_exact().unwrap().values()[0].clone();
        assert_eq!(at, xi);
    }

    #[test]
    fn empty_range_fails_at_first_point() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x^2 = -1\n").unwrap();
        let pts = enumerate_dense(op.domain(), DenseScheme::Dyadic, 3).unwrap();
        match solve_on_discrete_set(&op, &pts, 0, &ConstructOptions::default()) {
            Err(ConstructError::PointFailed { point_index: 0, failure: SolveFailure::NoSolution { residual, .. }, .. }) => {
                assert!(residual > 0.5)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stages_vanish_at_their_points() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x = 0\n").unwrap();
        let z = enumerate_dense(op.domain(), DenseScheme::Dyadic, 4).unwrap();
        let seq = construct_sequence(&op, &z, &linear_schedule(4), &ConstructOptions::default()).unwrap();
        assert_eq!(seq.stages.len(), 4);
        for (nu, stage) in seq.stages.iter().enumerate() {
            assert_eq!(stage.points.len(), nu + 1);
            assert_eq!(stage.level, nu as u32);
            assert!(stage.is_exact());
        }
        assert!(stage_residual_jets(&seq).iter().flatten().flatten().all(|(_, _, v)| *v == 0.0));
    }

    #[test]
    fn stage_failure_keeps_the_completed_prefix() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (-1,1)\neq: x*u_x = 1\n").unwrap();
        let z = vec![vec![q(1, 2)], vec![q(0, 1)], vec![q(-1, 2)]];
        let f = construct_sequence(&op, &z, &[0, 0, 0], &ConstructOptions::default()).unwrap_err();
        assert_eq!(f.stage, 1);
        assert_eq!(f.partial.stages.len(), 1);
        assert!(matches!(f.error, ConstructError::PointFailed { point_index: 1, .. }));
    }

    #[test]
    fn schedules_are_validated() {
        assert!(validate_schedule(&[0, 1, 1, 3]).unwrap().is_none());
        assert!(validate_schedule(&[2, 2]).unwrap().is_some());
        assert!(validate_schedule(&[1, 0]).is_err());
        assert!(validate_schedule(&[]).is_err());
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x = 0\n").unwrap();
        let z = enumerate_dense(op.domain(), DenseScheme::Dyadic, 2).unwrap();
        assert!(construct_sequence(&op, &z, &[1, 0], &ConstructOptions::default()).is_err());
        assert!(construct_sequence(&op, &z, &[0, 1, 2], &ConstructOptions::default()).is_err());
    }

    #[test]
    fn single_stage_is_a_single_point_instance() {
        let op = parse_pde("vars: x, y\nunknowns: u\norder: 2\ndomain: (0,1),(0,1)\neq: u_xx + u_yy = 1 + x*y\n").unwrap();
        let z = enumerate_dense(op.domain(), DenseScheme::Dyadic, 1).unwrap();
        let seq = construct_sequence(&op, &z, &[0], &ConstructOptions::default()).unwrap();
        assert_eq!(seq.stages.len(), 1);
        let u = seq.stages[0].functions[0].to_expr();
        let v: Vec<Rational> = apply_operator(&op, &[u], &z[0]).unwrap();
        assert_eq!(v, vec![q(0, 1)]);
    }

    #[test]
    fn samples_cover_the_grid() {
        let op = parse_pde("vars: x, y\nunknowns: u, v\norder: 1\ndomain: (0,1),(0,1)\neq: u_x - v_y\neq: u_y + v_x\n").unwrap();
        let z = enumerate_dense(op.domain(), DenseScheme::Dyadic, 2).unwrap();
        let stage = solve_on_discrete_set(&op, &z, 1, &ConstructOptions::default()).unwrap();
        let rows = stage.samples(op.domain(), 5).unwrap();
        assert_eq!(rows.len(), 50);
        assert!(rows.iter().all(|(_, _, v)| v.is_finite()));
    }
}
