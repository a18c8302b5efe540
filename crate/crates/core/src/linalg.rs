//! Dense matrices over a [`Scalar`], exact and floating rank, least-norm solves.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::expr::{Rational, Scalar};

/// Relative pivot tolerance for floating elimination.
pub const FLOAT_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    /// # Panics
    /// If the rows have different lengths.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        let n = rows.len();
        Matrix { rows: n, cols, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `[self | column]`.
    pub fn augmented(&self, column: &[S]) -> Self {
        assert_eq!(column.len(), self.rows);
        let rows = (0..self.rows)
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.push(column[i].clone());
                r
            })
            .collect();
        Matrix::from_rows(rows).with_cols(self.cols + 1)
    }

    fn with_cols(mut self, cols: usize) -> Self {
        self.cols = cols;
        self
    }

    pub fn transpose(&self) -> Self {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(Scalar::as_f64).collect() }
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64().abs()).fold(0.0, f64::max)
    }

    /// Rank by fraction-free elimination for exact scalars, pivoted floating
    /// elimination otherwise.
    pub fn rank(&self) -> usize {
        if S::EXACT {
            let m = Matrix {
                rows: self.rows,
                cols: self.cols,
                data: self.data.iter().map(|v| v.to_exact().expect("exact scalar")).collect(),
            };
            rank_exact(&m)
        } else {
            rank_float(&self.to_f64(), FLOAT_RANK_TOL)
        }
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Exact rank via Bareiss elimination on integer-scaled rows.
pub fn rank_exact(m: &Matrix<Rational>) -> usize {
    let mut a: Vec<Vec<BigInt>> = (0..m.rows)
        .map(|i| {
            let row = m.row(i);
            let l = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            row.iter().map(|v| v.numer() * (&l / v.denom())).collect()
        })
        .collect();
    let (rows, cols) = (m.rows, m.cols);
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for i in rank + 1..rows {
            for j in col + 1..cols {
                let v = (&a[i][j] * &a[rank][col] - &a[i][col] * &a[rank][j]) / &prev;
                a[i][j] = v;
            }
            a[i][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Rank by complete pivoting; pivots below `rel_tol` times the largest are zero.
pub fn rank_float(m: &Matrix<f64>, rel_tol: f64) -> usize {
    let mut a = m.to_rows();
    let (rows, cols) = (m.rows, m.cols);
    let mut used_cols = vec![false; cols];
    let mut reference = 0.0f64;
    let mut rank = 0;
    for r in 0..rows.min(cols) {
        let mut best = (0.0, r, 0);
        for (i, row) in a.iter().enumerate().skip(r) {
            for (j, v) in row.iter().enumerate() {
                if !used_cols[j] && v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        if r == 0 {
            reference = best.0;
        }
        if best.0 == 0.0 || best.0 <= rel_tol * reference {
            break;
        }
        let (_, pi, pj) = best;
        a.swap(r, pi);
        used_cols[pj] = true;
        let (top, rest) = a.split_at_mut(r + 1);
        let pivot = &top[r];
        for row in rest.iter_mut().take(rows - r - 1) {
            let f = row[pj] / pivot[pj];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(pivot).take(cols) {
                    *x -= f * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Indices of a maximal independent subset of rows, chosen greedily in order.
pub fn independent_rows<S: Scalar>(m: &Matrix<S>, rel_tol: f64) -> Vec<usize> {
    let scale = m.max_abs();
    let mut basis: Vec<(Vec<S>, usize)> = Vec::new();
    let mut chosen = Vec::new();
    for i in 0..m.rows {
        let mut r = m.row(i).to_vec();
        for (v, pc) in &basis {
            if r[*pc].vanishes() {
                continue;
            }
            let f = r[*pc].checked_div(&v[*pc]).expect("nonzero pivot");
            for (x, y) in r.iter_mut().zip(v) {
                *x = x.clone() - f.clone() * y.clone();
            }
        }
        let pivot = r
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(j, _)| j);
        let Some(pc) = pivot else { continue };
        let dependent = if S::EXACT {
            r[pc].vanishes()
        } else {
            r[pc].as_f64().abs() <= rel_tol * scale.max(f64::MIN_POSITIVE)
        };
        if !dependent {
            basis.push((r, pc));
            chosen.push(i);
        }
    }
    chosen
}

/// Gaussian elimination with partial pivoting on a square system.
fn solve_square<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Option<Vec<S>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| {
            a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[p][c].vanishes() {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        let pivot = a[c].clone();
        for i in c + 1..n {
            if a[i][c].vanishes() {
                continue;
            }
            let f = a[i][c].checked_div(&pivot[c]).ok()?;
            for (x, p) in a[i].iter_mut().zip(&pivot).take(n).skip(c) {
                *x = x.clone() - f.clone() * p.clone();
            }
            let v = b[i].clone() - f * b[c].clone();
            b[i] = v;
        }
    }
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i].clone();
        for j in i + 1..n {
            acc = acc - a[i][j].clone() * x[j].clone();
        }
        x[i] = acc.checked_div(&a[i][i]).ok()?;
    }
    Some(x)
}

/// No solution of `A x = b`; `residual` is the least-squares floor `min |A x - b|₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inconsistent {
    pub residual: f64,
}

/// Minimum-norm solution of `A x = b`, computed as `x = Bᵀ (B Bᵀ)⁻¹ b_B` over a
/// maximal independent row subset `B`.
pub fn least_norm_solve<S: Scalar>(a: &Matrix<S>, b: &[S], rel_tol: f64) -> Result<Vec<S>, Inconsistent> {
    assert_eq!(a.rows, b.len());
    let sel = independent_rows(a, rel_tol);
    let gram: Vec<Vec<S>> = sel
        .iter()
        .map(|&i| sel.iter().map(|&j| dot(a.row(i), a.row(j))).collect())
        .collect();
    let rhs: Vec<S> = sel.iter().map(|&i| b[i].clone()).collect();
    let y = solve_square(gram, rhs).ok_or_else(|| Inconsistent { residual: least_squares_residual(a, b) })?;
    let mut x = vec![S::zero(); a.cols];
    for (yk, &i) in y.iter().zip(&sel) {
        for (xj, aij) in x.iter_mut().zip(a.row(i)) {
            *xj = xj.clone() + yk.clone() * aij.clone();
        }
    }
    let r = a.mul_vec(&x);
    let consistent = if S::EXACT {
        r.iter().zip(b).all(|(u, v)| (u.clone() - v.clone()).vanishes())
    } else {
        let bmax = b.iter().map(|v| v.as_f64().abs()).fold(0.0, f64::max);
        let xmax = x.iter().map(|v| v.as_f64().abs()).fold(0.0, f64::max);
        let bound = rel_tol * (1.0 + bmax + a.max_abs() * xmax);
        r.iter().zip(b).all(|(u, v)| (u.as_f64() - v.as_f64()).abs() <= bound)
    };
    if consistent {
        Ok(x)
    } else {
        Err(Inconsistent { residual: least_squares_residual(a, b) })
    }
}

/// `min_x |A x - b|₂`, via the normal equations on independent columns.
pub fn least_squares_residual<S: Scalar>(a: &Matrix<S>, b: &[S]) -> f64 {
    let at = a.transpose();
    let cols = independent_rows(&at, FLOAT_RANK_TOL);
    let gram: Vec<Vec<S>> = cols
        .iter()
        .map(|&i| cols.iter().map(|&j| dot(at.row(i), at.row(j))).collect())
        .collect();
    let rhs: Vec<S> = cols.iter().map(|&i| dot(at.row(i), b)).collect();
    let z = solve_square(gram, rhs).unwrap_or_else(|| vec![S::zero(); cols.len()]);
    let mut fit = vec![S::zero(); a.rows];
    for (zk, &c) in z.iter().zip(&cols) {
        for (f, v) in fit.iter_mut().zip(at.row(c)) {
            *f = f.clone() + zk.clone() * v.clone();
        }
    }
    let ss = fit
        .iter()
        .zip(b)
        .fold(S::zero(), |acc, (f, v)| {
            let d = f.clone() - v.clone();
            acc + d.clone() * d
        });
    ss.as_f64().max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn qm(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| q(v, 1)).collect()).collect())
    }

    #[test]
    fn exact_rank_small_cases() {
        assert_eq!(rank_exact(&qm(&[&[0]])), 0);
        assert_eq!(rank_exact(&qm(&[&[0, -1]])), 1);
        assert_eq!(rank_exact(&qm(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]])), 2);
        assert_eq!(rank_exact(&qm(&[&[0, 0, 1], &[0, 1, 0], &[1, 0, 0]])), 3);
        let m = Matrix::from_rows(vec![vec![q(1, 3), q(1, 2)], vec![q(2, 3), q(1, 1)]]);
        assert_eq!(rank_exact(&m), 1);
    }

    #[test]
    fn least_norm_underdetermined() {
        let a = qm(&[&[1, 1]]);
        let x = least_norm_solve(&a, &[q(1, 1)], FLOAT_RANK_TOL).unwrap();
        assert_eq!(x, vec![q(1, 2), q(1, 2)]);
    }

    #[test]
    fn least_norm_redundant_rows() {
        let a = qm(&[&[1, 0], &[2, 0], &[0, 1]]);
        let x = least_norm_solve(&a, &[q(1, 1), q(2, 1), q(3, 1)], FLOAT_RANK_TOL).unwrap();
        assert_eq!(x, vec![q(1, 1), q(3, 1)]);
    }

    #[test]
    fn inconsistent_reports_floor() {
        let a = qm(&[&[0]]);
        let e = least_norm_solve(&a, &[q(-1, 1)], FLOAT_RANK_TOL).unwrap_err();
        assert!((e.residual - 1.0).abs() < 1e-12);
        let a = qm(&[&[1], &[1]]);
        let e = least_norm_solve(&a, &[q(0, 1), q(2, 1)], FLOAT_RANK_TOL).unwrap_err();
        assert!((e.residual - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn float_solve_matches_exact() {
        let a = qm(&[&[2, 1, 0], &[0, 1, 3]]);
        let b = [q(1, 1), q(2, 1)];
        let exact = least_norm_solve(&a, &b, FLOAT_RANK_TOL).unwrap();
        let fa = a.to_f64();
        let fx = least_norm_solve(&fa, &[1.0, 2.0], FLOAT_RANK_TOL).unwrap();
        for (e, f) in exact.iter().zip(&fx) {
            assert!((e.as_f64() - f).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn exact_and_float_rank_agree(
            entries in proptest::collection::vec(-4i64..=4, 12),
            dup in any::<bool>(),
        ) {
            let mut rows: Vec<Vec<Rational>> = entries
                .chunks(4)
                .map(|c| c.iter().map(|&v| q(v, 1 + v.rem_euclid(3))).collect())
                .collect();
            if dup {
                let r: Vec<Rational> = rows[0].iter().zip(&rows[1]).map(|(a, b)| a * q(3, 2) - b).collect();
                rows.push(r);
            }
            let m = Matrix::from_rows(rows);
            prop_assert_eq!(rank_exact(&m), rank_float(&m.to_f64(), FLOAT_RANK_TOL));
        }
    }
}
