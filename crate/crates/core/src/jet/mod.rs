//! Jets, PDE operators and prolongation.

mod operator;
mod prolong;

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::expr::{Assignment, Naming, Rational, Scalar, VarKind};
use crate::multi_index::{binomial, MultiIndex};

pub use operator::{normalize_homogeneous, parse_pde, FileDiagnostic, JetError, PdeOperator};
pub use prolong::{
    apply_operator, jet_of_function, jet_of_functions, prolong, sum_of_squares, total_derivative,
    ProlongedEquation, ProlongedSystem,
};

/// Coordinate order of a dense jet: by multi-index (graded-lex), then by unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetLayout {
    n: usize,
    k: usize,
    order: u32,
    coords: Vec<(usize, MultiIndex)>,
    index: HashMap<(usize, MultiIndex), usize>,
}

impl JetLayout {
    pub fn new(n: usize, k: usize, order: u32) -> Arc<Self> {
        let coords: Vec<(usize, MultiIndex)> = MultiIndex::up_to(n, order)
            .into_iter()
            .flat_map(|p| (0..k).map(move |u| (u, p.clone())))
            .collect();
        let index = coords.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        Arc::new(JetLayout { n, k, order, coords, index })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn unknowns(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[(usize, MultiIndex)] {
        &self.coords
    }

    pub fn position(&self, unknown: usize, p: &MultiIndex) -> Option<usize> {
        self.index.get(&(unknown, p.clone())).copied()
    }

    pub fn position_of(&self, kind: &VarKind) -> Option<usize> {
        match kind {
            VarKind::Jet { unknown, index } => self.position(*unknown, index),
            VarKind::Space(_) => None,
        }
    }

    /// Number of coordinates of order `<= s`; these form a prefix of the layout.
    pub fn count_up_to(&self, s: u32) -> usize {
        self.k * binomial(self.n + s as usize, self.n)
    }

    pub fn kind(&self, i: usize) -> VarKind {
        let (u, p) = &self.coords[i];
        VarKind::jet(*u, p.clone())
    }
}

/// Values for every jet coordinate up to the layout's order.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<S> {
    layout: Arc<JetLayout>,
    values: Vec<S>,
}

impl<S: Scalar> Jet<S> {
    pub fn zeros(layout: Arc<JetLayout>) -> Self {
        let values = vec![S::zero(); layout.len()];
        Jet { layout, values }
    }

    pub fn from_values(layout: Arc<JetLayout>, values: Vec<S>) -> Self {
        assert_eq!(layout.len(), values.len());
        Jet { layout, values }
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn order(&self) -> u32 {
        self.layout.order
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn get(&self, unknown: usize, p: &MultiIndex) -> Option<&S> {
        self.layout.position(unknown, p).map(|i| &self.values[i])
    }

    pub fn set(&mut self, unknown: usize, p: &MultiIndex, v: S) {
        let i = self.layout.position(unknown, p).expect("coordinate outside the jet");
        self.values[i] = v;
    }

    pub fn set_at(&mut self, i: usize, v: S) {
        self.values[i] = v;
    }

    /// The same jet cut down to coordinates of order `<= order`.
    pub fn truncated(&self, order: u32) -> Jet<S> {
        let layout = JetLayout::new(self.layout.n, self.layout.k, order.min(self.order()));
        let values = self.values[..layout.len()].to_vec();
        Jet { layout, values }
    }

    pub fn to_f64(&self) -> Jet<f64> {
        Jet { layout: self.layout.clone(), values: self.values.iter().map(Scalar::as_f64).collect() }
    }

    /// Assignment of this jet together with a space point.
    pub fn at<'a>(&'a self, point: &'a [S]) -> JetPoint<'a, S> {
        JetPoint { point, jet: self }
    }
}

/// A space point plus a jet, usable as an evaluation [`Assignment`].
pub struct JetPoint<'a, S> {
    pub point: &'a [S],
    pub jet: &'a Jet<S>,
}

impl<S: Scalar> Assignment<S> for JetPoint<'_, S> {
    fn value(&self, var: &VarKind) -> Option<S> {
        match var {
            VarKind::Space(i) => self.point.get(*i).cloned(),
            VarKind::Jet { unknown, index } => self.jet.get(*unknown, index).cloned(),
        }
    }
}

/// Arithmetic regime a computation ran in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Exact,
    Float,
}

/// Requested regime. `Exact` falls back to floating point where a value has no
/// exact rational form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArithmeticMode {
    #[default]
    Exact,
    Float,
}

impl std::str::FromStr for ArithmeticMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(ArithmeticMode::Exact),
            "float" => Ok(ArithmeticMode::Float),
            other => Err(format!("unknown arithmetic `{other}` (expected exact or float)")),
        }
    }
}

/// A jet in whichever regime produced it.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyJet {
    Exact(Jet<Rational>),
    Float(Jet<f64>),
}

impl AnyJet {
    pub fn arithmetic(&self) -> Arithmetic {
        match self {
            AnyJet::Exact(_) => Arithmetic::Exact,
            AnyJet::Float(_) => Arithmetic::Float,
        }
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        match self {
            AnyJet::Exact(j) => j.layout(),
            AnyJet::Float(j) => j.layout(),
        }
    }

    pub fn to_f64(&self) -> Jet<f64> {
        match self {
            AnyJet::Exact(j) => j.to_f64(),
            AnyJet::Float(j) => j.clone(),
        }
    }

    /// Exact rationals, converting doubles by their binary expansion.
    pub fn to_exact(&self) -> Jet<Rational> {
        match self {
            AnyJet::Exact(j) => j.clone(),
            AnyJet::Float(j) => Jet {
                layout: j.layout.clone(),
                values: j.values.iter().map(|v| v.to_exact().unwrap_or_else(num_traits::Zero::zero)).collect(),
            },
        }
    }

    pub fn as_exact(&self) -> Option<&Jet<Rational>> {
        match self {
            AnyJet::Exact(j) => Some(j),
            AnyJet::Float(_) => None,
        }
    }

    pub fn truncated(&self, order: u32) -> AnyJet {
        match self {
            AnyJet::Exact(j) => AnyJet::Exact(j.truncated(order)),
            AnyJet::Float(j) => AnyJet::Float(j.truncated(order)),
        }
    }

    /// Entries as `{label, unknown, index, value}` records; exact values print as
    /// fractions, floats in shortest round-trip form.
    pub fn entries(&self, naming: &Naming) -> Vec<JetEntry> {
        let layout = self.layout();
        (0..layout.len())
            .map(|i| {
                let (u, p) = &layout.coords()[i];
                let value = match self {
                    AnyJet::Exact(j) => crate::expr::rational_text(&j.values[i]),
                    AnyJet::Float(j) => format!("{:?}", j.values[i]),
                };
                JetEntry {
                    label: naming.jet_label(*u, p),
                    unknown: *u,
                    index: p.entries().to_vec(),
                    value,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct JetEntry {
    pub label: String,
    pub unknown: usize,
    pub index: Vec<u32>,
    pub value: String,
}
