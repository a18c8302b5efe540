//! Multi-indices `p ∈ N^n` addressing mixed partial derivatives.

use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

/// A multi-index of fixed dimension. The total order `|p|` is the sum of the entries.
///
/// Ordering is graded lexicographic: first by `|p|`, then by the entries with larger
/// leading entries first, so in two dimensions the order-2 indices come out as
/// `(2,0), (1,1), (0,2)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(SmallVec<[u32; 4]>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, n))
    }

    pub fn new(entries: impl IntoIterator<Item = u32>) -> Self {
        MultiIndex(entries.into_iter().collect())
    }

    /// The unit index `e_axis`.
    pub fn unit(n: usize, axis: usize) -> Self {
        let mut p = Self::zero(n);
        p.0[axis] = 1;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `p + e_axis`
    pub fn raised(&self, axis: usize) -> Self {
        let mut p = self.clone();
        p.0[axis] += 1;
        p
    }

    /// `p - e_axis`, or `None` when that entry is already zero.
    pub fn lowered(&self, axis: usize) -> Option<Self> {
        if self.0[axis] == 0 {
            return None;
        }
        let mut p = self.clone();
        p.0[axis] -= 1;
        Some(p)
    }

    pub fn add(&self, other: &MultiIndex) -> Self {
        MultiIndex(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    /// Componentwise `self - other`, `None` unless `other <= self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<Self> {
        let mut out = SmallVec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            out.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(out))
    }

    pub fn le_componentwise(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    /// First axis with a nonzero entry.
    pub fn first_axis(&self) -> Option<usize> {
        self.0.iter().position(|&e| e > 0)
    }

    /// `p! = Π p_i!`
    pub fn factorial(&self) -> num_bigint::BigInt {
        let mut acc = num_bigint::BigInt::from(1u32);
        for &e in self.0.iter() {
            for k in 2..=e {
                acc *= k;
            }
        }
        acc
    }

    /// All indices of dimension `n` with `|p| == order`, in graded-lex order.
    pub fn of_order(n: usize, order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = SmallVec::from_elem(0u32, n);
        fill(&mut out, &mut cur, 0, order);
        out
    }

    /// All indices of dimension `n` with `|p| <= max_order`, in graded-lex order.
    pub fn up_to(n: usize, max_order: u32) -> Vec<MultiIndex> {
        (0..=max_order).flat_map(|k| Self::of_order(n, k)).collect()
    }

    /// All indices `q` with `q <= self` componentwise (any order of enumeration).
    pub fn below(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero(self.dim())];
        for axis in 0..self.dim() {
            let mut next = Vec::with_capacity(out.len() * (self.0[axis] as usize + 1));
            for q in &out {
                for k in 0..=self.0[axis] {
                    let mut r = q.clone();
                    r.0[axis] = k;
                    next.push(r);
                }
            }
            out = next;
        }
        out
    }
}

fn fill(out: &mut Vec<MultiIndex>, cur: &mut SmallVec<[u32; 4]>, axis: usize, remaining: u32) {
    let n = cur.len();
    if n == 0 {
        if remaining == 0 {
            out.push(MultiIndex(cur.clone()));
        }
        return;
    }
    if axis == n - 1 {
        cur[axis] = remaining;
        out.push(MultiIndex(cur.clone()));
        cur[axis] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[axis] = e;
        fill(out, cur, axis + 1, remaining - e);
    }
    cur[axis] = 0;
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order_2d() {
        let idx = MultiIndex::up_to(2, 2);
        let shown: Vec<_> = idx.iter().map(|p| format!("{p}")).collect();
        assert_eq!(
            shown,
            ["(0,0)", "(1,0)", "(0,1)", "(2,0)", "(1,1)", "(0,2)"]
        );
        let mut sorted = idx.clone();
        sorted.sort();
        assert_eq!(sorted, idx);
    }

    #[test]
    fn counts_match_binomials() {
        for n in 1..=3 {
            for m in 0..=5u32 {
                assert_eq!(
                    MultiIndex::up_to(n, m).len(),
                    binomial(n + m as usize, n)
                );
            }
        }
    }

    #[test]
    fn below_enumerates_box() {
        let p = MultiIndex::new([2, 1]);
        let mut b = p.below();
        b.sort();
        assert_eq!(b.len(), 6);
        assert!(b.iter().all(|q| q.le_componentwise(&p)));
    }

    #[test]
    fn factorial_and_sub() {
        let p = MultiIndex::new([3, 2]);
        assert_eq!(p.factorial(), 12.into());
        assert_eq!(p.checked_sub(&MultiIndex::new([1, 2])), Some(MultiIndex::new([2, 0])));
        assert_eq!(p.checked_sub(&MultiIndex::new([0, 3])), None);
    }
}
