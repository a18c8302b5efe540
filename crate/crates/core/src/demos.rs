//! Built-in problems.

use crate::jet::{parse_pde, FileDiagnostic, PdeOperator};

/// `L = D_x + i D_y - 2(x + i y) D_z` on `U = v + i w` with `L U = f_re + i f_im`,
/// split into real and imaginary parts on `(-1, 1)^3`.
pub fn lewy_text(f_re: &str, f_im: &str) -> String {
    format!(
        "# Lewy operator, real form\n\
         vars: x, y, z\n\
         unknowns: v, w\n\
         order: 1\n\
         domain: (-1, 1), (-1, 1), (-1, 1)\n\
         eq: v_x - w_y - 2*x*v_z + 2*y*w_z = {f_re}\n\
         eq: w_x + v_y - 2*x*w_z - 2*y*v_z = {f_im}\n"
    )
}

pub fn lewy_operator(f_re: &str, f_im: &str) -> Result<PdeOperator, FileDiagnostic> {
    parse_pde(&lewy_text(f_re, f_im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, ParseContext, Rational};
    use crate::jet::apply_operator;

    #[test]
    fn real_split_matches_complex_operator() {
        let op = lewy_operator("0", "0").unwrap();
        let ctx = ParseContext::new(op.naming().clone());
        // x + iy and z + x^2 + y^2 are annihilated, hence so is their product.
        let v = parse_expression("x*(z + x^2 + y^2)", &ctx).unwrap();
        let w = parse_expression("y*(z + x^2 + y^2)", &ctx).unwrap();
        let x = [Rational::new(1.into(), 3.into()), Rational::new((-1).into(), 2.into()), Rational::new(1.into(), 5.into())];
        let r: Vec<Rational> = apply_operator(&op, &[v, w], &x).unwrap();
        assert!(r.iter().all(|v| *v == Rational::from_integer(0.into())));
    }

    #[test]
    fn right_hand_side_is_carried() {
        let op = lewy_operator("x", "0").unwrap();
        assert_eq!(op.equations().len(), 2);
        assert!(op.to_file_text().contains("v_x"));
    }
}
