use std::sync::Arc;

use gensol_core::expr::{
    differentiate, evaluate, raw, simplify, Expr, Func, Naming, Node, PointAssignment, Rational, VarKind, Variable,
};
use proptest::prelude::*;

fn naming() -> Arc<Naming> {
    Naming::new(["x", "y"], Vec::<String>::new())
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-6i64..=6, 1i64..=5).prop_map(|(n, d)| raw(Node::Const(q(n, d)))),
        (0usize..2).prop_map(|axis| raw(Node::Var(Variable::space(axis, &naming())))),
    ]
}

/// Raw, non-canonical trees; denominators are kept away from zero by construction.
fn tree(transcendental: bool) -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 3, move |inner| {
        let base = prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(|v| raw(Node::Sum(v))),
            prop::collection::vec(inner.clone(), 2..3).prop_map(|v| raw(Node::Product(v))),
            (inner.clone(), 1i64..=3).prop_map(|(b, k)| raw(Node::Pow(b, q(k, 1)))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| {
                let denom = raw(Node::Sum(vec![raw(Node::Const(q(1, 1))), raw(Node::Pow(b, q(2, 1)))]));
                raw(Node::Quotient(a, denom))
            }),
        ];
        if transcendental {
            prop_oneof![
                4 => base,
                1 => (prop::sample::select(vec![Func::Sin, Func::Cos]), inner.clone()).prop_map(|(f, a)| raw(Node::Unary(f, a))),
                1 => inner.prop_map(|a| {
                    let bounded = raw(Node::Unary(Func::Sin, a));
                    raw(Node::Unary(Func::Exp, bounded))
                }),
            ]
            .boxed()
        } else {
            base.boxed()
        }
    })
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    [-1.0f64..1.0, -1.0f64..1.0]
}

fn rational_point() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-7i64..=7, 1i64..=6).prop_map(|(n, d)| q(n, d)), 2)
}

fn eval(e: &Expr, p: &[f64]) -> f64 {
    evaluate(e, &PointAssignment::space_only(p)).unwrap()
}

fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(scale).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn differentiation_is_linear(
        e1 in tree(true), e2 in tree(true),
        a in (-5i64..=5, 1i64..=4), b in (-5i64..=5, 1i64..=4),
        axis in 0usize..2, p in point(),
    ) {
        let (a, b) = (q(a.0, a.1), q(b.0, b.1));
        let v = VarKind::Space(axis);
        let lhs = differentiate(&(simplify(&e1).scaled(&a) + simplify(&e2).scaled(&b)), &v);
        let rhs = differentiate(&simplify(&e1), &v).scaled(&a) + differentiate(&simplify(&e2), &v).scaled(&b);
        let (l, r) = (eval(&lhs, &p), eval(&rhs, &p));
        let (d1, d2) = (eval(&differentiate(&simplify(&e1), &v), &p), eval(&differentiate(&simplify(&e2), &v), &p));
        prop_assert!(close(l, r, 1e-12, d1.abs() + d2.abs()), "{l} vs {r}");
    }

    #[test]
    fn exact_and_float_evaluation_agree(e in tree(false), p in rational_point()) {
        let e = simplify(&e);
        let exact: Rational = evaluate(&e, &PointAssignment::space_only(&p)).unwrap();
        let pf: Vec<f64> = p.iter().map(gensol_core::expr::Scalar::as_f64).collect();
        let float = eval(&e, &pf);
        let exact = gensol_core::expr::Scalar::as_f64(&exact);
        prop_assert!(close(exact, float, 1e-13, 0.0), "{e}: {exact} vs {float}");
    }

    #[test]
    fn simplify_preserves_values(e in tree(true), p in point()) {
        let s = simplify(&e);
        let (a, b) = (eval(&e, &p), eval(&s, &p));
        prop_assert!(close(a, b, 1e-12, 0.0), "{e} -> {s}: {a} vs {b}");
        prop_assert_eq!(simplify(&s), s);
    }
}
