use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{parse_expression, rational_text, Expr, Naming, ParseContext, Rational};
use crate::multi_index::binomial;

use super::JetLayout;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("right-hand side depends on jet variables")]
    RhsHasJets,
    #[error("equation {equation} uses a jet of order {found}, above the declared order {declared}")]
    OrderExceeded { equation: usize, found: u32, declared: u32 },
    #[error("an operator needs at least one equation")]
    NoEquations,
    #[error("domain has {found} intervals for {dim} space variables")]
    DomainMismatch { dim: usize, found: usize },
    #[error("empty domain interval on axis {0}")]
    EmptyInterval(usize),
}

/// `F - f`, for an `f` free of jet coordinates.
pub fn normalize_homogeneous(f_lhs: &Expr, rhs: &Expr) -> Result<Expr, JetError> {
    if rhs.contains_jets() {
        return Err(JetError::RhsHasJets);
    }
    Ok(Expr::difference(f_lhs.clone(), rhs.clone()))
}

/// A system `G_j(x, jets) = 0` of order `m` on an open box.
#[derive(Debug, Clone)]
pub struct PdeOperator {
    naming: Arc<Naming>,
    order: u32,
    equations: Vec<Expr>,
    domain: Vec<(Rational, Rational)>,
}

impl PdeOperator {
    pub fn new(
        naming: Arc<Naming>,
        order: u32,
        equations: Vec<Expr>,
        domain: Vec<(Rational, Rational)>,
    ) -> Result<Self, JetError> {
        if equations.is_empty() {
            return Err(JetError::NoEquations);
        }
        if domain.len() != naming.dim() {
            return Err(JetError::DomainMismatch { dim: naming.dim(), found: domain.len() });
        }
        if let Some(axis) = domain.iter().position(|(a, b)| a >= b) {
            return Err(JetError::EmptyInterval(axis));
        }
        for (j, g) in equations.iter().enumerate() {
            if let Some(found) = g.max_jet_order() {
                if found > order {
                    return Err(JetError::OrderExceeded { equation: j, found, declared: order });
                }
            }
        }
        Ok(PdeOperator { naming, order, equations, domain })
    }

    pub fn naming(&self) -> &Arc<Naming> {
        &self.naming
    }

    pub fn dim(&self) -> usize {
        self.naming.dim()
    }

    pub fn unknowns(&self) -> usize {
        self.naming.unknown_count()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn equations(&self) -> &[Expr] {
        &self.equations
    }

    pub fn domain(&self) -> &[(Rational, Rational)] {
        &self.domain
    }

    /// `m* = k·C(n+m, n)`, the number of jet arguments of the equations.
    pub fn m_star(&self) -> usize {
        self.unknowns() * binomial(self.dim() + self.order as usize, self.dim())
    }

    pub fn jet_layout(&self, extra: u32) -> Arc<JetLayout> {
        JetLayout::new(self.dim(), self.unknowns(), self.order + extra)
    }

    /// Strictly inside the domain box.
    pub fn contains(&self, point: &[Rational]) -> bool {
        point.len() == self.dim() && point.iter().zip(&self.domain).all(|(x, (a, b))| a < x && x < b)
    }

    /// Notes where the declared order disagrees with the jets actually present.
    pub fn arity_warnings(&self) -> Vec<String> {
        let present = self.equations.iter().filter_map(Expr::max_jet_order).max();
        match present {
            None => vec![format!("no jet coordinates appear; declared order {} is unused", self.order)],
            Some(p) if p < self.order => vec![format!(
                "declared order {} but the highest jet present has order {p}; m* counts {} arguments",
                self.order,
                self.m_star()
            )],
            _ => Vec::new(),
        }
    }

    /// The operator in PDE-file syntax; [`parse_pde`] reads it back.
    pub fn to_file_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("dim: {}\n", self.dim()));
        s.push_str(&format!("vars: {}\n", self.naming.space.join(", ")));
        s.push_str(&format!("unknowns: {}\n", self.naming.unknowns.join(", ")));
        s.push_str(&format!("order: {}\n", self.order));
        let dom: Vec<String> = self
            .domain
            .iter()
            .map(|(a, b)| format!("({}, {})", rational_text(a), rational_text(b)))
            .collect();
        s.push_str(&format!("domain: {}\n", dom.join(", ")));
        for g in &self.equations {
            s.push_str(&format!("eq: {g} = 0\n"));
        }
        s
    }
}

/// Error in a PDE file, with 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for FileDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for FileDiagnostic {}

fn diag<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, FileDiagnostic> {
    Err(FileDiagnostic { line, column, message: message.into() })
}

struct Field<'a> {
    line: usize,
    column: usize,
    value: &'a str,
}

fn names(f: &Field<'_>) -> Result<Vec<String>, FileDiagnostic> {
    let out: Vec<String> = f.value.split(',').map(|s| s.trim().to_string()).collect();
    for name in &out {
        let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && name.chars().all(|c| c.is_ascii_alphanumeric());
        if !ok {
            return diag(f.line, f.column, format!("invalid name `{name}`"));
        }
    }
    Ok(out)
}

fn number(f: &Field<'_>) -> Result<u32, FileDiagnostic> {
    f.value
        .trim()
        .parse()
        .or_else(|_| diag(f.line, f.column, format!("expected a non-negative integer, found `{}`", f.value.trim())))
}

fn constant(text: &str, line: usize, column: usize) -> Result<Rational, FileDiagnostic> {
    let ctx = ParseContext::new(Naming::new(Vec::<String>::new(), Vec::<String>::new()));
    let e = parse_expression(text, &ctx)
        .or_else(|d| diag(line, column + d.position, d.message))?;
    match e.as_const() {
        Some(c) => Ok(c.clone()),
        None => diag(line, column, "interval bounds must be rational constants"),
    }
}

fn intervals(f: &Field<'_>) -> Result<Vec<(Rational, Rational)>, FileDiagnostic> {
    let chars: Vec<char> = f.value.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            c if c.is_whitespace() || c == ',' => i += 1,
            '(' => {
                let close = (i..chars.len())
                    .find(|&j| chars[j] == ')')
                    .map_or_else(|| diag(f.line, f.column + i, "unclosed interval"), Ok)?;
                let inner: String = chars[i + 1..close].iter().collect();
                let Some((a, b)) = inner.split_once(',') else {
                    return diag(f.line, f.column + i, "interval needs two bounds `(a, b)`");
                };
                let a_col = f.column + i + 1;
                let b_col = a_col + a.chars().count() + 1;
                out.push((constant(a, f.line, a_col)?, constant(b, f.line, b_col)?));
                i = close + 1;
            }
            _ => return diag(f.line, f.column + i, "expected `(a, b)`"),
        }
    }
    Ok(out)
}

/// Reads a PDE file:
///
/// ```text
/// # Laplace
/// dim: 2
/// vars: x, y
/// unknowns: u
/// order: 2
/// domain: (0, 1), (0, 1)
/// eq: u_xx + u_yy = 1 + x*y
/// ```
///
/// Each `eq:` is folded to homogeneous form `lhs - rhs`; the right-hand side may
/// not contain jets.
pub fn parse_pde(text: &str) -> Result<PdeOperator, FileDiagnostic> {
    let mut dim = None;
    let mut vars = None;
    let mut unknowns = None;
    let mut order = None;
    let mut domain = None;
    let mut eqs = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once(':') else {
            let col = body.len() - body.trim_start().len() + 1;
            return diag(line, col, "expected `key: value`");
        };
        let key_col = body.len() - body.trim_start().len() + 1;
        let lead = value.chars().take_while(|c| c.is_whitespace()).count();
        let field = Field { line, column: key.chars().count() + 2 + lead, value: value.trim_start() };
        match key.trim() {
            "dim" => dim = Some((number(&field)?, line, field.column)),
            "vars" => vars = Some(names(&field)?),
            "unknowns" => unknowns = Some(names(&field)?),
            "order" => order = Some(number(&field)?),
            "domain" => domain = Some((intervals(&field)?, line, field.column)),
            "eq" => eqs.push((line, field.column, field.value.to_string())),
            other => return diag(line, key_col, format!("unknown header `{other}`")),
        }
    }
    let Some(vars) = vars else { return diag(1, 1, "missing `vars:` line") };
    let Some(unknowns) = unknowns else { return diag(1, 1, "missing `unknowns:` line") };
    let Some(order) = order else { return diag(1, 1, "missing `order:` line") };
    let Some((domain, dom_line, dom_col)) = domain else { return diag(1, 1, "missing `domain:` line") };
    if let Some((d, l, c)) = dim {
        if d as usize != vars.len() {
            return diag(l, c, format!("dim is {d} but {} variables are declared", vars.len()));
        }
    }
    if eqs.is_empty() {
        return diag(1, 1, "no `eq:` lines");
    }
    if domain.len() != vars.len() {
        return diag(dom_line, dom_col, format!("{} intervals for {} variables", domain.len(), vars.len()));
    }
    let naming = Naming::new(vars, unknowns);
    let ctx = ParseContext { naming: naming.clone(), max_jet_order: Some(order) };
    let mut equations = Vec::new();
    for (line, col, text) in eqs {
        let (lhs_text, rhs) = match text.split_once('=') {
            Some((l, r)) => (l.to_string(), Some((r.to_string(), l.chars().count() + 1))),
            None => (text.clone(), None),
        };
        let lhs = parse_expression(&lhs_text, &ctx).or_else(|d| diag(line, col + d.position, d.message))?;
        let g = match rhs {
            None => lhs,
            Some((r, off)) => {
                let rhs = parse_expression(&r, &ctx).or_else(|d| diag(line, col + off + d.position, d.message))?;
                normalize_homogeneous(&lhs, &rhs).or_else(|e| diag(line, col + off, e.to_string()))?
            }
        };
        equations.push(g);
    }
    PdeOperator::new(naming, order, equations, domain).or_else(|e| diag(dom_line, dom_col, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAPLACE: &str = "# Laplace\ndim: 2\nvars: x, y\nunknowns: u\norder: 2\ndomain: (0, 1), (-1/2, 1)\neq: u_xx + u_yy = 1 + x*y\n";

    #[test]
    fn loads_and_folds_rhs() {
        let op = parse_pde(LAPLACE).unwrap();
        assert_eq!(op.dim(), 2);
        assert_eq!(op.order(), 2);
        assert_eq!(op.m_star(), 6);
        assert_eq!(op.equations()[0].to_string(), "u_xx + u_yy - x*y - 1");
        assert_eq!(op.domain()[1].0, Rational::new((-1).into(), 2.into()));
    }

    #[test]
    fn file_text_round_trips() {
        let op = parse_pde(LAPLACE).unwrap();
        let again = parse_pde(&op.to_file_text()).unwrap();
        assert_eq!(again.equations(), op.equations());
        assert_eq!(again.domain(), op.domain());
    }

    #[test]
    fn diagnostics_carry_positions() {
        let bad = LAPLACE.replace("u_xx + u_yy", "u_xx + u_yq");
        let d = parse_pde(&bad).unwrap_err();
        assert_eq!((d.line, d.column), (7, 15));
        let bad = LAPLACE.replace("1 + x*y", "u_x");
        let d = parse_pde(&bad).unwrap_err();
        assert_eq!(d.line, 7);
        assert!(d.message.contains("jet"));
        let bad = LAPLACE.replace("u_xx + u_yy", "u_xxx");
        assert!(parse_pde(&bad).unwrap_err().message.contains("order"));
    }

    #[test]
    fn normalize_examples() {
        let naming = Naming::new(["x"], ["u"]);
        let ctx = ParseContext::new(naming);
        let p = |s: &str| parse_expression(s, &ctx).unwrap();
        assert_eq!(normalize_homogeneous(&p("u_xx"), &p("exp(x)")).unwrap(), p("u_xx - exp(x)"));
        assert_eq!(normalize_homogeneous(&p("u_xx"), &p("0")).unwrap(), p("u_xx"));
        assert_eq!(normalize_homogeneous(&p("u_xx"), &p("u")), Err(JetError::RhsHasJets));
    }

    #[test]
    fn arity_flag() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 2\ndomain: (0,1)\neq: u_x = 1\n").unwrap();
        assert_eq!(op.arity_warnings().len(), 1);
        let op = parse_pde(LAPLACE).unwrap();
        assert!(op.arity_warnings().is_empty());
    }
}
