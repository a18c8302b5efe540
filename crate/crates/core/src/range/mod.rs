//! Range conditions: constructive jet solving and linear rank certificates.

mod linear;
mod solve;

use serde::Serialize;

use crate::expr::{rational_text, Rational, Scalar};
use crate::jet::{prolong, AnyJet, Arithmetic, JetEntry, PdeOperator};
use crate::linalg::least_squares_residual;
use crate::par;

pub use linear::{
    assemble_linear_system, linearize, rank_condition, LinearDecomposition, LinearRow, NotLinear,
    RankCertificate, RankError,
};
pub use solve::{solve_jets_triangular, SolveFailure, SolveOptions};

/// Serialized jet: values as exact fractions or floats, with their regime.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct JetRecord {
    pub arithmetic: Arithmetic,
    pub values: Vec<JetEntry>,
}

impl JetRecord {
    pub fn new(jet: &AnyJet, op: &PdeOperator) -> Self {
        JetRecord { arithmetic: jet.arithmetic(), values: jet.entries(op.naming()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Solved,
    RankCertified,
    NoSolution { level: u32, residual: f64 },
    SolverFailed { level: u32, residual: f64 },
    EvaluationError { message: String },
}

impl Outcome {
    pub fn holds(&self) -> bool {
        matches!(self, Outcome::Solved | Outcome::RankCertified)
    }

    fn from_failure(f: SolveFailure) -> Self {
        match f {
            SolveFailure::NoSolution { level, residual } => Outcome::NoSolution { level, residual },
            SolveFailure::SolverFailed { level, residual } => Outcome::SolverFailed { level, residual },
            SolveFailure::Eval(e) => Outcome::EvaluationError { message: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeEntry {
    pub point_index: usize,
    pub point: Vec<String>,
    pub level: u32,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<RankCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jet: Option<JetRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeReport {
    pub linear: bool,
    pub max_level: u32,
    pub tolerance: f64,
    pub entries: Vec<RangeEntry>,
}

impl RangeReport {
    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.outcome.holds())
    }

    pub fn all_strict(&self) -> bool {
        self.entries.iter().all(|e| e.certificate.as_ref().is_some_and(|c| c.strict))
    }
}

/// Every point, every level `l <= max_level`: rank certificates for linear
/// operators, triangular jet solves otherwise.
pub fn range_condition_check(
    op: &PdeOperator,
    points: &[Vec<Rational>],
    max_level: u32,
    opts: &SolveOptions,
) -> RangeReport {
    let full = prolong(op, max_level);
    let dec = linearize(&full).ok();
    let jobs: Vec<(usize, u32)> =
        (0..points.len()).flat_map(|i| (0..=max_level).map(move |l| (i, l))).collect();
    let entries = par::map(&jobs, |&(i, l)| {
        let x = &points[i];
        let sys = full.restricted(l);
        let point: Vec<String> = x.iter().map(rational_text).collect();
        let solved = solve_jets_triangular(&sys, x, opts);
        let jet = solved.as_ref().ok().map(|j| JetRecord::new(j, op));
        let (outcome, certificate) = match &dec {
            Some(dec) => {
                let dec = dec.restricted(l);
                match linear::certificate(&dec, x, opts.mode) {
                    Ok(c) if c.holds => (Outcome::RankCertified, Some(c)),
                    Ok(c) => {
                        let residual = floor(&dec, x);
                        (Outcome::NoSolution { level: l, residual }, Some(c))
                    }
                    Err(e) => (Outcome::EvaluationError { message: e.to_string() }, None),
                }
            }
            None => match solved {
                Ok(_) => (Outcome::Solved, None),
                Err(f) => (Outcome::from_failure(f), None),
            },
        };
        RangeEntry { point_index: i, point, level: l, outcome, certificate, jet }
    });
    RangeReport { linear: dec.is_some(), max_level, tolerance: opts.tol, entries }
}

fn floor(dec: &LinearDecomposition, x: &[Rational]) -> f64 {
    let xf: Vec<f64> = x.iter().map(Scalar::as_f64).collect();
    match assemble_linear_system::<f64>(dec, &xf) {
        Ok((p, q)) => {
            let b: Vec<f64> = (0..q.rows()).map(|i| *q.get(i, q.cols() - 1)).collect();
            least_squares_residual(&p, &b)
        }
        Err(_) => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::parse_pde;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn pts2() -> Vec<Vec<Rational>> {
        vec![
            vec![q(1, 2), q(1, 2)],
            vec![q(1, 4), q(1, 3)],
            vec![q(3, 4), q(1, 5)],
            vec![q(2, 7), q(5, 6)],
            vec![q(9, 10), q(7, 8)],
        ]
    }

    #[test]
    fn laplace_all_strict() {
        let op = parse_pde("vars: x, y\nunknowns: u\norder: 2\ndomain: (0,1),(0,1)\neq: u_xx + u_yy = 1 + x*y\n").unwrap();
        let r = range_condition_check(&op, &pts2(), 2, &SolveOptions::default());
        assert!(r.linear && r.all_hold() && r.all_strict());
        assert_eq!(r.entries.len(), 15);
    }

    #[test]
    fn eikonal_all_solved() {
        let op = parse_pde("vars: x, y\nunknowns: u\norder: 1\ndomain: (0,1),(0,1)\neq: u_x^2 + u_y^2 = 1 + x^2\n").unwrap();
        let r = range_condition_check(&op, &pts2(), 2, &SolveOptions::default());
        assert!(!r.linear);
        assert!(r.all_hold(), "{:?}", r.entries.iter().find(|e| !e.outcome.holds()));
    }

    #[test]
    fn empty_range_everywhere() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x^2 = -1\n").unwrap();
        let pts: Vec<Vec<Rational>> = (1..=3).map(|k| vec![q(k, 4)]).collect();
        let r = range_condition_check(&op, &pts, 1, &SolveOptions::default());
        assert!(r.entries.iter().all(|e| matches!(e.outcome, Outcome::NoSolution { .. })));
    }

    #[test]
    fn rank_agrees_with_solve_on_linear_corpus() {
        let corpus = [
            "vars: x\nunknowns: u\norder: 1\ndomain: (-1,1)\neq: u_x = x\n",
            "vars: x\nunknowns: u\norder: 1\ndomain: (-1,1)\neq: x*u_x = 1\n",
            "vars: x\nunknowns: u\norder: 0\ndomain: (-1,1)\neq: 0*u = 1\n",
            "vars: x\nunknowns: u\norder: 2\ndomain: (-1,1)\neq: x*u_xx + u = x^2\n",
            "vars: x, y\nunknowns: u\norder: 1\ndomain: (-1,1),(-1,1)\neq: y*u_x - x*u_y = 1\n",
            "vars: x, y\nunknowns: u, v\norder: 1\ndomain: (-1,1),(-1,1)\neq: u_x - v_y = 0\neq: u_y + v_x = x\n",
        ];
        let points = [vec![q(0, 1)], vec![q(1, 2)], vec![q(-1, 3)]];
        for text in corpus {
            let op = parse_pde(text).unwrap();
            for x in &points {
                let x: Vec<Rational> = (0..op.dim()).map(|i| x[0].clone() * q(i as i64 + 1, 1)).collect();
                for l in 0..=2 {
                    let c = rank_condition(&op, &x, l, crate::jet::ArithmeticMode::Exact).unwrap();
                    let s = solve_jets_triangular(&prolong(&op, l), &x, &SolveOptions::default());
                    assert_eq!(c.holds, s.is_ok(), "{text} at {x:?}, l={l}");
                }
            }
        }
    }
}
