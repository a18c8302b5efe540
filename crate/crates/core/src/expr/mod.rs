//! Symbolic expressions over space variables and jet coordinates.
//!
//! Expressions are immutable trees behind an [`Arc`], so cloning is cheap and
//! subtrees are shared freely. Every node is built through the smart
//! constructors in [`build`](self::build), which keep sums and products
//! flattened, constant-folded and sorted. Two expressions that denote the same
//! canonical form are therefore structurally equal.

mod build;
mod diff;
mod display;
mod eval;
mod parse;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_rational::BigRational;

use crate::constructor::bump::BumpFunction;
use crate::multi_index::MultiIndex;

pub use diff::{differentiate, free_variables, jet_variables, substitute};
pub use eval::{
    evaluate, evaluate_exact, evaluate_float, rational_from_f64, Assignment, EvalError, PointAssignment,
    Scalar,
};
pub use display::rational_text;
pub use parse::{parse_expression, ParseContext, ParseDiagnostic};

/// Exact rational scalar used for every literal in the tree.
pub type Rational = BigRational;

/// Display names for the space axes and the unknowns of a problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Naming {
    pub space: Vec<String>,
    pub unknowns: Vec<String>,
}

impl Naming {
    pub fn new(space: impl IntoIterator<Item = impl Into<String>>, unknowns: impl IntoIterator<Item = impl Into<String>>) -> Arc<Self> {
        Arc::new(Naming {
            space: space.into_iter().map(Into::into).collect(),
            unknowns: unknowns.into_iter().map(Into::into).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn unknown_count(&self) -> usize {
        self.unknowns.len()
    }

    /// `u_xy`-style label of a jet coordinate; the bare unknown name at order zero.
    pub fn jet_label(&self, unknown: usize, index: &MultiIndex) -> String {
        let mut s = self.unknowns[unknown].clone();
        if !index.is_zero() {
            s.push('_');
            s.push_str(&self.subscript(index));
        }
        s
    }

    pub fn subscript(&self, index: &MultiIndex) -> String {
        let mut s = String::new();
        for (axis, &e) in index.entries().iter().enumerate() {
            for _ in 0..e {
                s.push_str(&self.space[axis]);
            }
        }
        s
    }
}

/// What a variable stands for. Axes and unknowns are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Space(usize),
    Jet { unknown: usize, index: MultiIndex },
}

impl VarKind {
    pub fn jet(unknown: usize, index: MultiIndex) -> Self {
        VarKind::Jet { unknown, index }
    }

    pub fn jet_order(&self) -> Option<u32> {
        match self {
            VarKind::Jet { index, .. } => Some(index.order()),
            VarKind::Space(_) => None,
        }
    }
}

/// A variable together with the naming table used to print it.
///
/// Equality, ordering and hashing only look at the [`VarKind`].
#[derive(Clone)]
pub struct Variable {
    kind: VarKind,
    naming: Arc<Naming>,
}

impl Variable {
    pub fn new(kind: VarKind, naming: Arc<Naming>) -> Self {
        Variable { kind, naming }
    }

    pub fn space(axis: usize, naming: &Arc<Naming>) -> Self {
        Variable::new(VarKind::Space(axis), naming.clone())
    }

    pub fn jet(unknown: usize, index: MultiIndex, naming: &Arc<Naming>) -> Self {
        Variable::new(VarKind::Jet { unknown, index }, naming.clone())
    }

    pub fn kind(&self) -> &VarKind {
        &self.kind
    }

    pub fn naming(&self) -> &Arc<Naming> {
        &self.naming
    }

    pub fn name(&self) -> String {
        match &self.kind {
            VarKind::Space(axis) => self.naming.space[*axis].clone(),
            VarKind::Jet { unknown, index } => self.naming.jet_label(*unknown, index),
        }
    }

    /// Same variable kind with a different naming table attached.
    pub fn with_kind(&self, kind: VarKind) -> Self {
        Variable::new(kind, self.naming.clone())
    }
}

impl PartialEq for Variable {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Variable {}

impl Hash for Variable {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind.hash(state)
    }
}

impl PartialOrd for Variable {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Variable {
    fn cmp(&self, other: &Self) -> Ordering {
        self.kind.cmp(&other.kind)
    }
}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Smooth unary primitives. `abs` is deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// A (possibly differentiated) bump function applied to the space variables.
#[derive(Clone)]
pub struct BumpRef {
    pub bump: Arc<BumpFunction>,
    pub deriv: MultiIndex,
    naming: Arc<Naming>,
}

impl BumpRef {
    pub fn naming(&self) -> &Arc<Naming> {
        &self.naming
    }
}

impl PartialEq for BumpRef {
    fn eq(&self, other: &Self) -> bool {
        self.deriv == other.deriv && (Arc::ptr_eq(&self.bump, &other.bump) || self.bump == other.bump)
    }
}

impl Eq for BumpRef {}

impl Hash for BumpRef {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bump.hash(state);
        self.deriv.hash(state);
    }
}

impl PartialOrd for BumpRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BumpRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bump
            .as_ref()
            .cmp(other.bump.as_ref())
            .then_with(|| self.deriv.cmp(&other.deriv))
    }
}

impl fmt::Debug for BumpRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bump{:?}@{:?}", self.deriv, self.bump)
    }
}

/// Expression node. Construct through the `Expr` smart constructors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Const(Rational),
    Var(Variable),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Base raised to a rational exponent; integer exponents may be negative.
    Pow(Expr, Rational),
    Quotient(Expr, Expr),
    Unary(Func, Expr),
    Bump(BumpRef),
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(num_traits::Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(num_traits::One::is_one)
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::Bump(_) => Vec::new(),
            Node::Sum(v) | Node::Product(v) => v.iter().collect(),
            Node::Pow(b, _) => vec![b],
            Node::Quotient(a, b) => vec![a, b],
            Node::Unary(_, a) => vec![a],
        }
    }

    /// True iff the tree has no unary node, no bump node and no non-integer exponent,
    /// i.e. it evaluates exactly at every rational point where it is defined.
    pub fn is_rational_closed(&self) -> bool {
        match self.node() {
            Node::Const(_) | Node::Var(_) => true,
            Node::Unary(..) | Node::Bump(_) => false,
            Node::Pow(b, e) => e.is_integer() && b.is_rational_closed(),
            _ => self.children().into_iter().all(Expr::is_rational_closed),
        }
    }

    pub fn contains_jets(&self) -> bool {
        match self.node() {
            Node::Var(v) => matches!(v.kind(), VarKind::Jet { .. }),
            _ => self.children().into_iter().any(Expr::contains_jets),
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }

    pub fn space_variables(&self) -> BTreeSet<usize> {
        free_variables(self)
            .into_iter()
            .filter_map(|v| match v.kind() {
                VarKind::Space(i) => Some(*i),
                _ => None,
            })
            .collect()
    }

    /// Highest order of a jet coordinate present, if any.
    pub fn max_jet_order(&self) -> Option<u32> {
        jet_variables(self).iter().filter_map(|v| v.kind().jet_order()).max()
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.cmp(&other.0)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Rebuilds `e` bottom-up through the smart constructors.
///
/// Expressions built by this crate are already canonical, so this is the identity on
/// them; it matters for trees assembled from raw nodes.
pub fn simplify(e: &Expr) -> Expr {
    match e.node() {
        Node::Const(_) | Node::Var(_) | Node::Bump(_) => e.clone(),
        Node::Sum(v) => Expr::sum(v.iter().map(simplify).collect()),
        Node::Product(v) => Expr::product(v.iter().map(simplify).collect()),
        Node::Pow(b, k) => Expr::pow(simplify(b), k.clone()),
        Node::Quotient(a, b) => Expr::quotient(simplify(a), simplify(b)),
        Node::Unary(f, a) => Expr::unary(*f, simplify(a)),
    }
}

/// Wraps a raw node without any normalization. Used by tests that need
/// non-canonical input for [`simplify`].
pub fn raw(node: Node) -> Expr {
    Expr(Arc::new(node))
}
