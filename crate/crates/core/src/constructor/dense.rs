//! Deterministic enumerations of dense rational point sets in a box.

use std::str::FromStr;

use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenseScheme {
    /// Level `k` contributes the points with every unit coordinate an odd multiple of
    /// `2^-k`, in lexicographic order.
    #[default]
    Dyadic,
    /// Reduced fractions `p/q` ordered by denominator, combined across axes along
    /// Cantor diagonals.
    Diagonal,
}

impl FromStr for DenseScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dyadic" => Ok(DenseScheme::Dyadic),
            "diagonal" => Ok(DenseScheme::Diagonal),
            other => Err(format!("unknown point scheme `{other}` (expected dyadic or diagonal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DenseError {
    #[error("the box has no axes")]
    NoAxes,
    #[error("empty interval on axis {0}")]
    EmptyInterval(usize),
    #[error("only {found} of {wanted} points lie in the region among the first {scanned}")]
    RegionTooSparse { wanted: usize, found: usize, scanned: usize },
}

/// Lazily extended, duplicate-free stream of points strictly inside a box.
#[derive(Debug, Clone)]
pub struct DensePointStream {
    domain: Vec<(Rational, Rational)>,
    scheme: DenseScheme,
    emitted: Vec<Vec<Rational>>,
    // Dyadic: current level and the next odd-numerator tuple.
    level: u32,
    odd: Vec<u64>,
    // Diagonal: unit fractions seen so far and the current diagonal walk.
    fractions: Vec<Rational>,
    next_denominator: u64,
    diagonal: u64,
    tuple: Vec<u64>,
}

impl DensePointStream {
    pub fn new(domain: Vec<(Rational, Rational)>, scheme: DenseScheme) -> Result<Self, DenseError> {
        if domain.is_empty() {
            return Err(DenseError::NoAxes);
        }
        if let Some(axis) = domain.iter().position(|(a, b)| a >= b) {
            return Err(DenseError::EmptyInterval(axis));
        }
        let n = domain.len();
        Ok(DensePointStream {
            domain,
            scheme,
            emitted: Vec::new(),
            level: 1,
            odd: vec![1; n],
            fractions: Vec::new(),
            next_denominator: 2,
            diagonal: 0,
            tuple: first_composition(n, 0),
        })
    }

    pub fn domain(&self) -> &[(Rational, Rational)] {
        &self.domain
    }

    pub fn scheme(&self) -> DenseScheme {
        self.scheme
    }

    /// The first `count` points, extending the stream as needed.
    pub fn prefix(&mut self, count: usize) -> &[Vec<Rational>] {
        while self.emitted.len() < count {
            let unit = match self.scheme {
                DenseScheme::Dyadic => self.next_dyadic(),
                DenseScheme::Diagonal => self.next_diagonal(),
            };
            let p = self
                .domain
                .iter()
                .zip(unit)
                .map(|((lo, hi), t)| lo + (hi - lo) * t)
                .collect();
            self.emitted.push(p);
        }
        &self.emitted[..count]
    }

    /// The first `count` stream points satisfying `region`, looking at no more than
    /// `scan_limit` stream points.
    pub fn prefix_in(
        &mut self,
        count: usize,
        region: impl Fn(&[Rational]) -> bool,
        scan_limit: usize,
    ) -> Result<Vec<Vec<Rational>>, DenseError> {
        let mut found = Vec::with_capacity(count);
        let mut scanned = 0;
        while found.len() < count {
            if scanned == scan_limit {
                return Err(DenseError::RegionTooSparse { wanted: count, found: found.len(), scanned });
            }
            scanned += 1;
            let p = &self.prefix(scanned)[scanned - 1];
            if region(p) {
                found.push(p.clone());
            }
        }
        Ok(found)
    }

    fn next_dyadic(&mut self) -> Vec<Rational> {
        let den = 1u64 << self.level;
        let out = self.odd.iter().map(|&k| Rational::new(k.into(), den.into())).collect();
        // Advance the odd-numerator odometer, last axis fastest.
        let mut i = self.odd.len();
        loop {
            if i == 0 {
                self.level += 1;
                self.odd.iter_mut().for_each(|k| *k = 1);
                break;
            }
            i -= 1;
            if self.odd[i] + 2 < den {
                self.odd[i] += 2;
                break;
            }
            self.odd[i] = 1;
        }
        out
    }

    fn unit_fraction(&mut self, i: usize) -> Rational {
        while self.fractions.len() <= i {
            let q = self.next_denominator;
            for p in 1..q {
                if p.gcd(&q) == 1 {
                    self.fractions.push(Rational::new(p.into(), q.into()));
                }
            }
            self.next_denominator += 1;
        }
        self.fractions[i].clone()
    }

    fn next_diagonal(&mut self) -> Vec<Rational> {
        let tuple = self.tuple.clone();
        let out = tuple.iter().map(|&i| self.unit_fraction(i as usize)).collect();
        match next_composition(&self.tuple) {
            Some(t) => self.tuple = t,
            None => {
                self.diagonal += 1;
                self.tuple = first_composition(self.tuple.len(), self.diagonal);
            }
        }
        out
    }
}

/// `(0, …, 0, s)`: the lexicographically first tuple of `n` naturals summing to `s`.
fn first_composition(n: usize, s: u64) -> Vec<u64> {
    let mut t = vec![0; n];
    t[n - 1] = s;
    t
}

/// Lexicographic successor among tuples with the same sum.
fn next_composition(t: &[u64]) -> Option<Vec<u64>> {
    let n = t.len();
    if n < 2 {
        return None;
    }
    // Rightmost position before the last that can be raised by taking from the tail.
    let tail_from = |i: usize| t[i + 1..].iter().sum::<u64>();
    for i in (0..n - 1).rev() {
        if tail_from(i) > 0 {
            let mut out = t[..=i].to_vec();
            out[i] += 1;
            let rest = tail_from(i) - 1;
            out.extend(std::iter::repeat_n(0, n - i - 2));
            out.push(rest);
            return Some(out);
        }
    }
    None
}

/// The first `count` points of the stream over `domain`.
pub fn enumerate_dense(
    domain: &[(Rational, Rational)],
    scheme: DenseScheme,
    count: usize,
) -> Result<Vec<Vec<Rational>>, DenseError> {
    let mut s = DensePointStream::new(domain.to_vec(), scheme)?;
    Ok(s.prefix(count).to_vec())
}

/// The first `count` points of the stream over `domain` that satisfy `region`.
pub fn enumerate_dense_in(
    domain: &[(Rational, Rational)],
    scheme: DenseScheme,
    count: usize,
    region: impl Fn(&[Rational]) -> bool,
    scan_limit: usize,
) -> Result<Vec<Vec<Rational>>, DenseError> {
    DensePointStream::new(domain.to_vec(), scheme)?.prefix_in(count, region, scan_limit)
}

/// Midpoint of a box; the first point of either scheme.
pub fn midpoint(domain: &[(Rational, Rational)]) -> Vec<Rational> {
    let two = Rational::one() + Rational::one();
    domain.iter().map(|(a, b)| (a + b) / &two).collect()
}
