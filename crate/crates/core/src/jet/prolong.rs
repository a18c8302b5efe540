use std::collections::HashMap;
use std::sync::Arc;

use crate::expr::{
    differentiate, evaluate, jet_variables, EvalError, Expr, Naming, PointAssignment, Scalar, VarKind,
};
use crate::multi_index::MultiIndex;
use crate::par;

use super::{Jet, JetLayout, PdeOperator};

/// `D_i e = ∂e/∂x_i + Σ ξ_{u,q+e_i} ∂e/∂ξ_{u,q}`.
pub fn total_derivative(e: &Expr, axis: usize) -> Expr {
    let mut terms = vec![differentiate(e, &VarKind::Space(axis))];
    for v in jet_variables(e) {
        let VarKind::Jet { unknown, index } = v.kind() else { continue };
        let d = differentiate(e, v.kind());
        if d.is_zero() {
            continue;
        }
        let up = Expr::var(v.with_kind(VarKind::jet(*unknown, index.raised(axis))));
        terms.push(Expr::product(vec![up, d]));
    }
    Expr::sum(terms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedEquation {
    pub equation: usize,
    pub index: MultiIndex,
    pub expr: Expr,
}

/// `F_{j,p} = D^p G_j` for `|p| <= level`, ordered by `p` (graded-lex) then `j`.
#[derive(Debug, Clone)]
pub struct ProlongedSystem {
    pub level: u32,
    pub top_order: u32,
    pub naming: Arc<Naming>,
    pub equations: Vec<ProlongedEquation>,
}

impl ProlongedSystem {
    pub fn get(&self, equation: usize, p: &MultiIndex) -> Option<&Expr> {
        self.equations
            .iter()
            .find(|e| e.equation == equation && &e.index == p)
            .map(|e| &e.expr)
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn of_level(&self, s: u32) -> impl Iterator<Item = &ProlongedEquation> {
        self.equations.iter().filter(move |e| e.index.order() == s)
    }

    /// The subsystem with `|p| <= level`.
    pub fn restricted(&self, level: u32) -> ProlongedSystem {
        ProlongedSystem {
            level: level.min(self.level),
            top_order: self.top_order - self.level + level.min(self.level),
            naming: self.naming.clone(),
            equations: self.equations.iter().filter(|e| e.index.order() <= level).cloned().collect(),
        }
    }

    pub fn jet_layout(&self) -> Arc<JetLayout> {
        JetLayout::new(self.naming.dim(), self.naming.unknown_count(), self.top_order)
    }
}

pub fn prolong(op: &PdeOperator, level: u32) -> ProlongedSystem {
    let n = op.dim();
    let indices = MultiIndex::up_to(n, level);
    let per_equation: Vec<Vec<Expr>> = par::map(op.equations(), |g| {
        let mut memo: HashMap<MultiIndex, Expr> = HashMap::with_capacity(indices.len());
        let mut out = Vec::with_capacity(indices.len());
        for p in &indices {
            let e = match p.first_axis() {
                None => g.clone(),
                Some(axis) => {
                    let parent = p.lowered(axis).expect("axis is nonzero");
                    total_derivative(&memo[&parent], axis)
                }
            };
            memo.insert(p.clone(), e.clone());
            out.push(e);
        }
        out
    });
    let mut equations = Vec::with_capacity(indices.len() * op.equations().len());
    for (k, p) in indices.iter().enumerate() {
        for (j, exprs) in per_equation.iter().enumerate() {
            equations.push(ProlongedEquation { equation: j, index: p.clone(), expr: exprs[k].clone() });
        }
    }
    ProlongedSystem { level, top_order: op.order() + level, naming: op.naming().clone(), equations }
}

/// `Σ_{j,p} F_{j,p}²`.
pub fn sum_of_squares(sys: &ProlongedSystem) -> Expr {
    Expr::sum(sys.equations.iter().map(|e| Expr::powi(e.expr.clone(), 2)).collect())
}

/// `D^p u_i(a)` for every unknown `i` and `|p| <= order`.
pub fn jet_of_functions<S: Scalar>(us: &[Expr], a: &[S], order: u32) -> Result<Jet<S>, EvalError> {
    let layout = JetLayout::new(a.len(), us.len(), order);
    let assignment = PointAssignment::space_only(a);
    let mut jet = Jet::zeros(layout);
    for (u, f) in us.iter().enumerate() {
        let mut memo: HashMap<MultiIndex, Expr> = HashMap::new();
        for p in MultiIndex::up_to(a.len(), order) {
            let d = match p.first_axis() {
                None => f.clone(),
                Some(axis) => differentiate(&memo[&p.lowered(axis).expect("nonzero")], &VarKind::Space(axis)),
            };
            jet.set(u, &p, evaluate(&d, &assignment)?);
            memo.insert(p, d);
        }
    }
    Ok(jet)
}

pub fn jet_of_function<S: Scalar>(u: &Expr, a: &[S], order: u32) -> Result<Jet<S>, EvalError> {
    jet_of_functions(std::slice::from_ref(u), a, order)
}

/// Values `G_j(x, D^p u(x))`.
pub fn apply_operator<S: Scalar>(op: &PdeOperator, us: &[Expr], x: &[S]) -> Result<Vec<S>, EvalError> {
    let jet = jet_of_functions(us, x, op.order())?;
    op.equations().iter().map(|g| evaluate(g, &jet.at(x))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, substitute, ParseContext, Rational};
    use crate::jet::parse_pde;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn ctx1() -> ParseContext {
        ParseContext::new(Naming::new(["x"], ["u"]))
    }

    fn p1(s: &str) -> Expr {
        parse_expression(s, &ctx1()).unwrap()
    }

    #[test]
    fn total_derivative_examples() {
        assert_eq!(total_derivative(&p1("u"), 0), p1("u_x"));
        assert_eq!(total_derivative(&p1("u^2"), 0), p1("2*u*u_x"));
        assert_eq!(total_derivative(&p1("x*u_x"), 0), p1("u_x + x*u_xx"));
    }

    #[test]
    fn prolong_exponential_ode() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (-1, 1)\neq: u_x - u\n").unwrap();
        let sys = prolong(&op, 2);
        let shown: Vec<String> = sys.equations.iter().map(|e| e.expr.to_string()).collect();
        assert_eq!(shown, ["u_x - u", "u_xx - u_x", "u_xxx - u_xx"]);
        let zero = prolong(&op, 0);
        assert_eq!(zero.equations[0].expr, op.equations()[0]);
    }

    #[test]
    fn prolongation_nests() {
        let op = parse_pde("vars: x, y\nunknowns: u\norder: 1\ndomain: (0,1),(0,1)\neq: u_x^2 + x*u_y*u = y\n").unwrap();
        let big = prolong(&op, 3);
        let small = prolong(&op, 2);
        assert_eq!(big.restricted(2).equations, small.equations);
    }

    #[test]
    fn sum_of_squares_examples() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (-1, 1)\neq: u_x - u\n").unwrap();
        let sys = prolong(&op, 0);
        assert_eq!(sum_of_squares(&sys), Expr::powi(op.equations()[0].clone(), 2));
        let sys = prolong(&op, 2);
        let sos = sum_of_squares(&sys);
        let layout = sys.jet_layout();
        let ones = Jet::from_values(layout.clone(), vec![q(1, 1); layout.len()]);
        let x = [q(0, 1)];
        assert_eq!(evaluate(&sos, &ones.at(&x)).unwrap(), q(0, 1));
        let other = Jet::from_values(layout, vec![q(1, 1), q(2, 1), q(0, 1), q(5, 1)]);
        assert!(evaluate(&sos, &other.at(&x)).unwrap() > q(0, 1));
    }

    #[test]
    fn jet_of_function_examples() {
        let j: Jet<Rational> = jet_of_function(&p1("x^2"), &[q(3, 1)], 2).unwrap();
        assert_eq!(j.values(), &[q(9, 1), q(6, 1), q(2, 1)]);
        let j: Jet<Rational> = jet_of_function(&p1("x^3"), &[q(0, 1)], 3).unwrap();
        assert_eq!(j.values(), &[q(0, 1), q(0, 1), q(0, 1), q(6, 1)]);
        let j: Jet<Rational> = jet_of_function(&p1("7/2"), &[q(1, 5)], 2).unwrap();
        assert_eq!(j.values(), &[q(7, 2), q(0, 1), q(0, 1)]);
    }

    #[test]
    fn apply_operator_examples() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (-1, 1)\neq: u_x - u\n").unwrap();
        let v: Vec<f64> = apply_operator(&op, &[p1("exp(x)")], &[0.3]).unwrap();
        assert!(v[0].abs() < 1e-15);
        let op = parse_pde("vars: x, y\nunknowns: u\norder: 2\ndomain: (-1, 1), (-1, 1)\neq: u_xx + u_yy\n").unwrap();
        let u = parse_expression("x^2 - y^2", &ParseContext::new(op.naming().clone())).unwrap();
        let v: Vec<Rational> = apply_operator(&op, &[u], &[q(1, 3), q(-2, 7)]).unwrap();
        assert_eq!(v, vec![q(0, 1)]);
    }

    #[test]
    fn leibniz_and_commutation() {
        let ctx = ParseContext::new(Naming::new(["x", "y"], ["u", "v"]));
        let a = parse_expression("x*u_x + v^2", &ctx).unwrap();
        let b = parse_expression("y*u*v_y - 1/3", &ctx).unwrap();
        let layout = JetLayout::new(2, 2, 3);
        let values: Vec<Rational> = (0..layout.len()).map(|i| q(i as i64 % 5 - 2, 1 + i as i64 % 3)).collect();
        let jet = Jet::from_values(layout, values);
        let x = [q(1, 2), q(-3, 4)];
        let ev = |e: &Expr| evaluate::<Rational, _>(e, &jet.at(&x)).unwrap();
        let lhs = total_derivative(&(a.clone() * b.clone()), 1);
        let rhs = total_derivative(&a, 1) * b.clone() + a.clone() * total_derivative(&b, 1);
        assert_eq!(ev(&lhs), ev(&rhs));
        let xy = total_derivative(&total_derivative(&a, 0), 1);
        let yx = total_derivative(&total_derivative(&a, 1), 0);
        assert_eq!(ev(&xy), ev(&yx));
    }

    #[test]
    fn chain_rule_against_substitution() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (-1, 1)\neq: u_x^2 - x*u = 1\n").unwrap();
        let u = p1("x^3 - 2*x + 1/2");
        let sys = prolong(&op, 3);
        let a = [q(1, 3)];
        let jet: Jet<Rational> = jet_of_function(&u, &a, 4).unwrap();
        let mut map = HashMap::new();
        map.insert(VarKind::jet(0, MultiIndex::new([0])), u.clone());
        map.insert(VarKind::jet(0, MultiIndex::new([1])), differentiate(&u, &VarKind::Space(0)));
        let mut composed = substitute(&op.equations()[0], &map);
        for k in 0..=3u32 {
            let f = sys.get(0, &MultiIndex::new([k])).unwrap();
            let lhs: Rational = evaluate(f, &jet.at(&a)).unwrap();
            let rhs: Rational = evaluate(&composed, &PointAssignment::space_only(&a)).unwrap();
            assert_eq!(lhs, rhs, "order {k}");
            composed = differentiate(&composed, &VarKind::Space(0));
        }
    }
}
