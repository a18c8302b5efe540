use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{
    differentiate, evaluate, jet_variables, rational_text, EvalError, Expr, PointAssignment,
    Rational, Scalar,
};
use crate::jet::{prolong, Arithmetic, ArithmeticMode, JetLayout, PdeOperator, ProlongedSystem};
use crate::linalg::{Matrix, FLOAT_RANK_TOL};
use crate::multi_index::MultiIndex;
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("equation {equation} differentiated along {index} is not affine in `{variable}`")]
pub struct NotLinear {
    pub equation: usize,
    pub index: MultiIndex,
    pub variable: String,
}

/// `F_{j,p} = d_p + Σ_i d_{p,i} ξ_i`.
#[derive(Debug, Clone)]
pub struct LinearRow {
    pub equation: usize,
    pub index: MultiIndex,
    pub offset: Expr,
    /// Sparse `(layout position, coefficient)` pairs in layout order.
    pub coefficients: Vec<(usize, Expr)>,
}

#[derive(Debug, Clone)]
pub struct LinearDecomposition {
    pub level: u32,
    pub layout: Arc<JetLayout>,
    pub rows: Vec<LinearRow>,
}

impl LinearDecomposition {
    /// `d_p + Σ d_{p,i} ξ_i` for each row.
    pub fn reassemble(&self, sys: &ProlongedSystem) -> Vec<Expr> {
        self.rows
            .iter()
            .map(|row| {
                let mut terms = vec![row.offset.clone()];
                for (i, c) in &row.coefficients {
                    let v = crate::expr::Variable::new(self.layout.kind(*i), sys.naming.clone());
                    terms.push(c.clone() * Expr::var(v));
                }
                Expr::sum(terms)
            })
            .collect()
    }

    /// Rows with `|p| <= level`, columns of order `<= m + level`.
    pub fn restricted(&self, level: u32) -> LinearDecomposition {
        let level = level.min(self.level);
        let top = self.layout.order() - self.level + level;
        let layout = JetLayout::new(self.layout.dim(), self.layout.unknowns(), top);
        let rows = self.rows.iter().filter(|r| r.index.order() <= level).cloned().collect();
        LinearDecomposition { level, layout, rows }
    }
}

pub fn linearize(sys: &ProlongedSystem) -> Result<LinearDecomposition, NotLinear> {
    let layout = sys.jet_layout();
    let rows = par::map(&sys.equations, |eq| {
        let jets = jet_variables(&eq.expr);
        let mut coefficients = Vec::with_capacity(jets.len());
        let mut zero = HashMap::with_capacity(jets.len());
        for v in &jets {
            let d = differentiate(&eq.expr, v.kind());
            if d.contains_jets() {
                return Err(NotLinear { equation: eq.equation, index: eq.index.clone(), variable: v.name() });
            }
            let pos = layout.position_of(v.kind()).expect("jet within the prolonged order");
            coefficients.push((pos, d));
            zero.insert(v.kind().clone(), Expr::zero());
        }
        coefficients.sort_by_key(|(i, _)| *i);
        let offset = crate::expr::substitute(&eq.expr, &zero);
        Ok(LinearRow { equation: eq.equation, index: eq.index.clone(), offset, coefficients })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(LinearDecomposition { level: sys.level, layout, rows })
}

/// `P` (one column per jet coordinate of order `<= m + l`) and `Q = [P | -d]`.
pub fn assemble_linear_system<S: Scalar>(
    dec: &LinearDecomposition,
    x: &[S],
) -> Result<(Matrix<S>, Matrix<S>), EvalError> {
    let a = PointAssignment::space_only(x);
    let mut p = Matrix::zeros(dec.rows.len(), dec.layout.len());
    let mut rhs = Vec::with_capacity(dec.rows.len());
    for (r, row) in dec.rows.iter().enumerate() {
        for (i, c) in &row.coefficients {
            p.set(r, *i, evaluate(c, &a)?);
        }
        rhs.push(-evaluate::<S, _>(&row.offset, &a)?);
    }
    let q = p.augmented(&rhs);
    Ok((p, q))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankCertificate {
    pub point: Vec<String>,
    pub level: u32,
    pub rows: usize,
    pub columns: usize,
    pub rank_p: usize,
    pub rank_q: usize,
    /// `rank P = rank Q`.
    pub holds: bool,
    /// Both ranks equal the number of prolonged equations.
    pub strict: bool,
    pub arithmetic: Arithmetic,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error(transparent)]
    NotLinear(#[from] NotLinear),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

pub(crate) fn certificate(
    dec: &LinearDecomposition,
    x: &[Rational],
    mode: ArithmeticMode,
) -> Result<RankCertificate, EvalError> {
    let point = x.iter().map(rational_text).collect();
    let exact = match mode {
        ArithmeticMode::Exact => match assemble_linear_system::<Rational>(dec, x) {
            Ok(pq) => Some(pq),
            Err(EvalError::Inexact) => None,
            Err(e) => return Err(e),
        },
        ArithmeticMode::Float => None,
    };
    let (rank_p, rank_q, rows, columns, arithmetic, tolerance) = match exact {
        Some((p, q)) => (p.rank(), q.rank(), p.rows(), p.cols(), Arithmetic::Exact, None),
        None => {
            let xf: Vec<f64> = x.iter().map(Scalar::as_f64).collect();
            let (p, q) = assemble_linear_system::<f64>(dec, &xf)?;
            (p.rank(), q.rank(), p.rows(), p.cols(), Arithmetic::Float, Some(FLOAT_RANK_TOL))
        }
    };
    Ok(RankCertificate {
        point,
        level: dec.level,
        rows,
        columns,
        rank_p,
        rank_q,
        holds: rank_p == rank_q,
        strict: rank_p == rank_q && rank_p == rows,
        arithmetic,
        tolerance,
    })
}

/// Ranks of `P^l(x)` and `Q^l(x)`, exact when every entry is rational.
pub fn rank_condition(
    op: &PdeOperator,
    x: &[Rational],
    level: u32,
    mode: ArithmeticMode,
) -> Result<RankCertificate, RankError> {
    let dec = linearize(&prolong(op, level))?;
    Ok(certificate(&dec, x, mode)?)
}
