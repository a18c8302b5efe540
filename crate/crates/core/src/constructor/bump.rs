//! Smooth plateau bump functions.
//!
//! With `t = |x - a|^2` and `σ(s) = exp(-1/s)` for `s > 0` (zero otherwise),
//!
//! ```text
//! ψ(x) = σ(R² - t) / (σ(R² - t) + σ(t - r²))
//! ```
//!
//! equals 1 on the closed ball of radius `r` and 0 outside the open ball of radius
//! `R`. Both regions are decided with exact rational comparisons where possible,
//! so exact evaluation never touches a transcendental. In the transition shell
//! derivatives are computed in floating point by truncated Taylor arithmetic.

use num_traits::Signed;

use crate::expr::{EvalError, Rational, Scalar};
use crate::multi_index::MultiIndex;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BumpFunction {
    pub center: Vec<Rational>,
    pub r_in: Rational,
    pub r_out: Rational,
}

/// Where a point sits relative to a bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpRegion {
    Plateau,
    Transition,
    Exterior,
}

impl BumpFunction {
    /// # Panics
    /// If the radii are not `0 < r_in < r_out`.
    pub fn new(center: Vec<Rational>, r_in: Rational, r_out: Rational) -> Self {
        assert!(r_in.is_positive() && r_in < r_out, "bump radii must satisfy 0 < r_in < r_out");
        BumpFunction { center, r_in, r_out }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn region<S: Scalar>(&self, point: &[S]) -> BumpRegion {
        let mut t = S::zero();
        for (x, c) in point.iter().zip(&self.center) {
            let d = x.clone() - S::from_rational(c);
            t = t + d.clone() * d;
        }
        let inner = S::from_rational(&(&self.r_in * &self.r_in));
        let outer = S::from_rational(&(&self.r_out * &self.r_out));
        if t <= inner {
            BumpRegion::Plateau
        } else if t >= outer {
            BumpRegion::Exterior
        } else {
            BumpRegion::Transition
        }
    }

    /// `D^deriv ψ` at `point`. Exact scalars report [`EvalError::Inexact`] inside the
    /// transition shell.
    pub fn evaluate<S: Scalar>(&self, deriv: &MultiIndex, point: &[S]) -> Result<S, EvalError> {
        match self.region(point) {
            BumpRegion::Plateau if deriv.is_zero() => Ok(S::one()),
            BumpRegion::Plateau | BumpRegion::Exterior => Ok(S::zero()),
            BumpRegion::Transition => {
                let x: Vec<f64> = point.iter().map(Scalar::as_f64).collect();
                S::try_from_f64(self.derivative_f64(deriv, &x))
            }
        }
    }

    /// Floating-point `D^deriv ψ(x)` valid everywhere.
    pub fn derivative_f64(&self, deriv: &MultiIndex, x: &[f64]) -> f64 {
        let c: Vec<f64> = self.center.iter().map(Scalar::as_f64).collect();
        let d: Vec<f64> = x.iter().zip(&c).map(|(xi, ci)| xi - ci).collect();
        let t0: f64 = d.iter().map(|v| v * v).sum();
        let r2 = Scalar::as_f64(&(&self.r_in * &self.r_in));
        let big_r2 = Scalar::as_f64(&(&self.r_out * &self.r_out));
        let order = deriv.order() as usize;
        if t0 <= r2 {
            return if order == 0 { 1.0 } else { 0.0 };
        }
        if t0 >= big_r2 {
            return 0.0;
        }
        // Univariate Taylor coefficients of φ(t0 + δ).
        let a = sigma_series(big_r2 - t0, order, -1.0);
        let b = sigma_series(t0 - r2, order, 1.0);
        let denom: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
        let phi = series_div(&a, &denom);
        if order == 0 {
            return phi[0];
        }
        // Compose with δ(h) = Σ 2 d_i h_i + h_i² over multi-indices below `deriv`.
        let boxed = deriv.below();
        let pos = |q: &MultiIndex| boxed.iter().position(|r| r == q);
        let n = deriv.dim();
        let mut delta = vec![0.0; boxed.len()];
        for (axis, da) in d.iter().enumerate().take(n) {
            if let Some(i) = pos(&MultiIndex::unit(n, axis)) {
                delta[i] += 2.0 * da;
            }
            let sq = MultiIndex::unit(n, axis).raised(axis);
            if let Some(i) = pos(&sq) {
                delta[i] += 1.0;
            }
        }
        let mut power = vec![0.0; boxed.len()];
        power[pos(&MultiIndex::zero(n)).unwrap()] = 1.0;
        let target = pos(deriv).unwrap();
        let mut coeff = phi[0] * power[target];
        for phi_k in phi.iter().skip(1) {
            power = box_mul(&boxed, &power, &delta);
            coeff += phi_k * power[target];
        }
        let fact: f64 = deriv
            .entries()
            .iter()
            .map(|&e| (1..=e).map(f64::from).product::<f64>())
            .product();
        coeff * fact
    }

    /// Center as floats.
    pub fn center_f64(&self) -> Vec<f64> {
        self.center.iter().map(Scalar::as_f64).collect()
    }
}

/// Taylor coefficients in `δ` of `σ(s0 + sign·δ)`, `σ(s) = exp(-1/s)` on `s > 0`.
fn sigma_series(s0: f64, order: usize, sign: f64) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    if s0 <= 0.0 {
        return out;
    }
    // g(δ) = -1/(s0 + sign δ) = Σ_k -(-sign)^k δ^k / s0^{k+1}
    let g: Vec<f64> = (0..=order)
        .map(|k| -(-sign).powi(k as i32) / s0.powi(k as i32 + 1))
        .collect();
    out[0] = g[0].exp();
    for k in 1..=order {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += j as f64 * g[j] * out[k - j];
        }
        out[k] = acc / k as f64;
    }
    out
}

fn series_div(a: &[f64], c: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; a.len()];
    for k in 0..a.len() {
        let mut acc = a[k];
        for j in 1..=k {
            acc -= c[j] * q[k - j];
        }
        q[k] = acc / c[0];
    }
    q
}

/// Product of two polynomials truncated to the multi-indices in `boxed`.
fn box_mul(boxed: &[MultiIndex], a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; boxed.len()];
    for (i, p) in boxed.iter().enumerate() {
        if a[i] == 0.0 {
            continue;
        }
        for (j, q) in boxed.iter().enumerate() {
            if b[j] == 0.0 {
                continue;
            }
            let s = p.add(q);
            if let Some(k) = boxed.iter().position(|r| *r == s) {
                out[k] += a[i] * b[j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn bump1d() -> BumpFunction {
        BumpFunction::new(vec![r(0, 1)], r(1, 4), r(1, 2))
    }

    #[test]
    fn plateau_rule_exact() {
        let b = bump1d();
        let v: Rational = b.evaluate(&MultiIndex::zero(1), &[r(1, 8)]).unwrap();
        assert_eq!(v, r(1, 1));
        let d: Rational = b.evaluate(&MultiIndex::new([2]), &[r(1, 8)]).unwrap();
        assert!(d.is_zero());
        let out: Rational = b.evaluate(&MultiIndex::zero(1), &[r(3, 4)]).unwrap();
        assert!(out.is_zero());
        let shell: Result<Rational, _> = b.evaluate(&MultiIndex::zero(1), &[r(3, 8)]);
        assert_eq!(shell, Err(EvalError::Inexact));
    }

    #[test]
    fn values_in_unit_interval() {
        let b = bump1d();
        for i in 0..200 {
            let x = -0.6 + 1.2 * i as f64 / 199.0;
            let v = b.derivative_f64(&MultiIndex::zero(1), &[x]);
            assert!((0.0..=1.0).contains(&v), "value {v} at {x}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = BumpFunction::new(vec![r(1, 10), r(-1, 5)], r(1, 5), r(3, 5));
        let x = [0.35, 0.05];
        let h = 1e-5;
        for p in MultiIndex::up_to(2, 2) {
            let exact = b.derivative_f64(&p, &x);
            let mut found = false;
            for axis in 0..2 {
                if let Some(lower) = p.lowered(axis) {
                    let mut xp = x;
                    let mut xm = x;
                    xp[axis] += h;
                    xm[axis] -= h;
                    let fd = (b.derivative_f64(&lower, &xp) - b.derivative_f64(&lower, &xm)) / (2.0 * h);
                    assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{p:?}: {fd} vs {exact}");
                    found = true;
                    break;
                }
            }
            assert!(found || p.is_zero());
        }
    }
}
