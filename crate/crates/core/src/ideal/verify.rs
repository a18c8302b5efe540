use std::sync::Arc;

use serde::Serialize;

use crate::constructor::SolutionSequence;
use crate::expr::{rational_text, Expr, Naming};
use crate::jet::{Arithmetic, ArithmeticMode};

use super::{
    check_vanishing, error_sequence, profile_table, report_from_table, FunctionSequence, IdealError,
    SingularityComplement, VanishingReport,
};

/// A stage whose error does not vanish at one of its own points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyFailure {
    pub equation: usize,
    pub stage: usize,
    pub point_index: usize,
    pub point: Vec<String>,
    pub index: Vec<u32>,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    /// No stages: the pass is vacuous.
    pub degenerate: bool,
    pub arithmetic: Arithmetic,
    pub tolerance: f64,
    pub schedule: Vec<u32>,
    /// `(stage, point)` pairs checked, each to the stage's full order.
    pub checked: usize,
    pub failures: Vec<VerifyFailure>,
    /// Per equation, witnesses at every stage point for orders `0..=l_N`.
    pub vanishing: Vec<VanishingReport>,
}

/// Checks `D^p (T s_ν - f)(z_j) = 0` for every stage `ν`, every `j <= ν` and
/// `|p| <= l_ν`. Sequences with floating point jets are checked in floating point.
pub fn verify_solution(seq: &SolutionSequence, mode: ArithmeticMode, tol: f64) -> Result<VerifyReport, IdealError> {
    let Some(last) = seq.stages.last() else {
        return Ok(VerifyReport {
            pass: true,
            degenerate: true,
            arithmetic: Arithmetic::Exact,
            tolerance: tol,
            schedule: Vec::new(),
            checked: 0,
            failures: Vec::new(),
            vanishing: Vec::new(),
        });
    };
    let mode = if seq.is_exact() { mode } else { ArithmeticMode::Float };
    let points = &last.points;
    let schedule: Vec<u32> = seq.stages.iter().map(|s| s.level).collect();
    let top = *schedule.iter().max().expect("non-empty");
    let orders: Vec<u32> = (0..=top).collect();
    let mut failures = Vec::new();
    let mut vanishing = Vec::new();
    let mut exact = true;
    let mut checked = 0;
    for (eq, w) in error_sequence(&seq.op, seq).iter().enumerate() {
        let table = profile_table(w, points, &vec![top; w.len()], mode, tol)?;
        for (mu, row) in table.iter().enumerate() {
            let level = schedule[mu];
            for (j, prof) in row.iter().enumerate().take(mu + 1) {
                checked += 1;
                exact &= prof.arithmetic == Arithmetic::Exact;
                if prof.vanishes_to(level) {
                    continue;
                }
                let (p, value) = prof.first_nonzero.clone().expect("non-vanishing profile");
                failures.push(VerifyFailure {
                    equation: eq,
                    stage: mu,
                    point_index: j,
                    point: points[j].iter().map(rational_text).collect(),
                    index: p.entries().to_vec(),
                    value,
                });
            }
        }
        vanishing.push(report_from_table(&table, points, &orders, tol));
    }
    Ok(VerifyReport {
        pass: failures.is_empty(),
        degenerate: false,
        arithmetic: if exact { Arithmetic::Exact } else { Arithmetic::Float },
        tolerance: tol,
        schedule,
        checked,
        failures,
        vanishing,
    })
}

/// Whether the constant sequence `(ψ, ψ, …)` of `len` terms passes the vanishing
/// check to order `l` at every point of `z`.
pub fn diagonal_probe(
    naming: &Arc<Naming>,
    psi: &Expr,
    z: &SingularityComplement,
    l: u32,
    len: usize,
    mode: ArithmeticMode,
    tol: f64,
) -> Result<bool, IdealError> {
    let w = FunctionSequence::constant(naming.clone(), psi.clone(), len.max(1));
    Ok(check_vanishing(&w, z, &[l], mode, tol)?.all_witnessed())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairClosure {
    pub first: usize,
    pub second: usize,
    /// A member contained in both, if any.
    pub witness: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub closed: bool,
    pub truncation: usize,
    pub pairs: Vec<PairClosure>,
}

impl ClosureReport {
    pub fn open_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().filter(|p| p.witness.is_none()).map(|p| (p.first, p.second)).collect()
    }
}

/// For every pair of members, looks for a member whose first `truncation` points
/// lie in both: the complement form of `Σ ∪ Σ' ⊆ Σ''`.
pub fn family_closure_check(family: &[SingularityComplement], truncation: usize) -> ClosureReport {
    let cut: Vec<SingularityComplement> = family.iter().map(|z| z.truncated(truncation)).collect();
    let mut pairs = Vec::new();
    for a in 0..cut.len() {
        for b in a..cut.len() {
            let (sa, sb) = (cut[a].point_set(), cut[b].point_set());
            let witness = (0..cut.len())
                .find(|&c| cut[c].points.iter().all(|p| sa.contains(p) && sb.contains(p)));
            pairs.push(PairClosure { first: a, second: b, witness });
        }
    }
    ClosureReport { closed: pairs.iter().all(|p| p.witness.is_some()), truncation, pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructor::{construct_sequence, enumerate_dense, linear_schedule, ConstructOptions, DenseScheme};
    use crate::expr::{parse_expression, ParseContext, Rational};
    use crate::ideal::DEFAULT_ZERO_TOL;
    use crate::jet::{parse_pde, AnyJet};
    use crate::multi_index::MultiIndex;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn unit() -> Vec<(Rational, Rational)> {
        vec![(q(0, 1), q(1, 1))]
    }

    fn sequence(text: &str, stages: usize) -> SolutionSequence {
        let op = parse_pde(text).unwrap();
        let z = enumerate_dense(op.domain(), DenseScheme::Dyadic, stages).unwrap();
        construct_sequence(&op, &z, &linear_schedule(stages), &ConstructOptions::default()).unwrap()
    }

    #[test]
    fn constructed_sequence_passes_exactly() {
        let seq = sequence("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x = 1 + x^2\n", 3);
        let r = verify_solution(&seq, ArithmeticMode::Exact, DEFAULT_ZERO_TOL).unwrap();
        assert!(r.pass && !r.degenerate, "{:?}", r.failures);
        assert_eq!(r.arithmetic, Arithmetic::Exact);
        assert_eq!(r.checked, 6);
    }

    #[test]
    fn perturbed_jet_fails_with_location() {
        let mut seq = sequence("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x = 1 + x^2\n", 3);
        let stage = &mut seq.stages[2];
        let mut jet = stage.jets[1].as_exact().unwrap().clone();
        let p = MultiIndex::new([2]);
        let v = jet.get(0, &p).unwrap() + q(1, 1000);
        jet.set(0, &p, v);
        stage.jets[1] = AnyJet::Exact(jet);
        let rebuilt = crate::constructor::Stage::from_parts(
            &seq.op,
            2,
            stage.level,
            stage.points.clone(),
            stage.bumps.clone(),
            stage.jets.clone(),
        );
        seq.stages[2] = rebuilt;
        let r = verify_solution(&seq, ArithmeticMode::Exact, DEFAULT_ZERO_TOL).unwrap();
        assert!(!r.pass);
        let f = &r.failures[0];
        assert_eq!((f.stage, f.point_index, f.index.clone()), (2, 1, vec![1]));
        assert_eq!(f.value, "1/1000");
    }

    #[test]
    fn empty_sequence_is_degenerate() {
        let mut seq = sequence("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x\n", 1);
        seq.stages.clear();
        let r = verify_solution(&seq, ArithmeticMode::Exact, DEFAULT_ZERO_TOL).unwrap();
        assert!(r.pass && r.degenerate);
    }

    #[test]
    fn diagonal_probe_examples() {
        let n = Naming::new(["x"], Vec::<String>::new());
        let ctx = ParseContext::new(n.clone());
        let z = SingularityComplement::new(unit(), enumerate_dense(&unit(), DenseScheme::Dyadic, 4).unwrap()).unwrap();
        let mode = ArithmeticMode::Exact;
        assert!(diagonal_probe(&n, &Expr::zero(), &z, 3, 5, mode, DEFAULT_ZERO_TOL).unwrap());
        let x = parse_expression("x", &ctx).unwrap();
        assert!(!diagonal_probe(&n, &x, &z, 0, 5, mode, DEFAULT_ZERO_TOL).unwrap());
        let cube = parse_expression("(x - 1/2)^3", &ctx).unwrap();
        let single = SingularityComplement::new(unit(), vec![vec![q(1, 2)]]).unwrap();
        assert!(diagonal_probe(&n, &cube, &single, 2, 5, mode, DEFAULT_ZERO_TOL).unwrap());
        assert!(!diagonal_probe(&n, &cube, &single, 3, 5, mode, DEFAULT_ZERO_TOL).unwrap());
        assert!(!diagonal_probe(&n, &cube, &z, 0, 5, mode, DEFAULT_ZERO_TOL).unwrap());
    }

    #[test]
    fn closure_examples() {
        let pts = enumerate_dense(&unit(), DenseScheme::Dyadic, 8).unwrap();
        let z = SingularityComplement::new(unit(), pts.clone()).unwrap();
        assert!(family_closure_check(&[z.clone(), z.clone()], 8).closed);
        let evens = SingularityComplement::new(unit(), pts.iter().step_by(2).cloned().collect()).unwrap();
        let odds = SingularityComplement::new(unit(), pts.iter().skip(1).step_by(2).cloned().collect()).unwrap();
        let r = family_closure_check(&[evens.clone(), odds.clone()], 8);
        assert_eq!(r.open_pairs(), vec![(0, 1)]);
        let zp = SingularityComplement::new(unit(), pts[2..6].to_vec()).unwrap();
        let inter = SingularityComplement::new(unit(), pts[2..5].to_vec()).unwrap();
        let r = family_closure_check(&[z.truncated(5), zp, inter], 8);
        assert!(r.closed, "{r:?}");
    }
}
