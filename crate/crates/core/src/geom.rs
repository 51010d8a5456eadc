//! Axis-aligned boxes, open box domains, and derivative multi-indices.
//!
//! Everything downstream (expression supports, singularity primitives,
//! series validity regions, compact exhaustions) is built from the two
//! box types here, so the containment/distance conventions are fixed in
//! one place: `BoxN` is closed, `DomainBox` is open, and all distances
//! are sup-norm (per-axis) distances.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Closed axis-aligned box, possibly with infinite extents on some axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxN {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxN {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bound length mismatch");
        debug_assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b));
        BoxN { lo, hi }
    }

    /// Cube of half-width `r` around `x`.
    pub fn cube(x: &[f64], r: f64) -> Self {
        BoxN {
            lo: x.iter().map(|v| v - r).collect(),
            hi: x.iter().map(|v| v + r).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, v)| self.lo[i] <= *v && *v <= self.hi[i])
    }

    pub fn contains_strict(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, v)| self.lo[i] < *v && *v < self.hi[i])
    }

    pub fn contains_box(&self, other: &BoxN) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| 0.5 * (self.lo[i] + self.hi[i])).collect()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn intersect(&self, other: &BoxN) -> Option<BoxN> {
        let lo: Vec<f64> = (0..self.dim()).map(|i| self.lo[i].max(other.lo[i])).collect();
        let hi: Vec<f64> = (0..self.dim()).map(|i| self.hi[i].min(other.hi[i])).collect();
        if lo.iter().zip(&hi).all(|(a, b)| a <= b) {
            Some(BoxN { lo, hi })
        } else {
            None
        }
    }

    pub fn disjoint(&self, other: &BoxN) -> bool {
        self.intersect(other).is_none()
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &BoxN) -> BoxN {
        BoxN {
            lo: (0..self.dim()).map(|i| self.lo[i].min(other.lo[i])).collect(),
            hi: (0..self.dim()).map(|i| self.hi[i].max(other.hi[i])).collect(),
        }
    }

    /// Sup-norm distance from `x` to the box; 0 when `x` lies inside.
    pub fn linf_dist(&self, x: &[f64]) -> f64 {
        (0..self.dim())
            .map(|i| {
                if x[i] < self.lo[i] {
                    self.lo[i] - x[i]
                } else if x[i] > self.hi[i] {
                    x[i] - self.hi[i]
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    /// Sup-norm gap between two boxes; 0 when they intersect.
    pub fn linf_gap(&self, other: &BoxN) -> f64 {
        (0..self.dim())
            .map(|i| {
                if other.hi[i] < self.lo[i] {
                    self.lo[i] - other.hi[i]
                } else if other.lo[i] > self.hi[i] {
                    other.lo[i] - self.hi[i]
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn dilate(&self, r: f64) -> BoxN {
        BoxN {
            lo: self.lo.iter().map(|v| v - r).collect(),
            hi: self.hi.iter().map(|v| v + r).collect(),
        }
    }

    /// Shrink by `r` per side; axes that would invert collapse to their midpoint.
    pub fn shrink(&self, r: f64) -> BoxN {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let (a, b) = (self.lo[i] + r, self.hi[i] - r);
            if a <= b {
                lo.push(a);
                hi.push(b);
            } else {
                let m = 0.5 * (self.lo[i] + self.hi[i]);
                lo.push(m);
                hi.push(m);
            }
        }
        BoxN { lo, hi }
    }

    pub fn clip_to(&self, outer: &BoxN) -> BoxN {
        BoxN {
            lo: (0..self.dim()).map(|i| self.lo[i].max(outer.lo[i])).collect(),
            hi: (0..self.dim()).map(|i| self.hi[i].min(outer.hi[i])).collect(),
        }
    }
}

/// The ambient domain X: a nonvoid open box in R^n, axis 0 is t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox(BoxN);

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeomError {
    #[error("domain needs at least one axis")]
    EmptyDomain,
    #[error("axis {axis}: lower bound {lo} is not below upper bound {hi}")]
    BadInterval { axis: usize, lo: f64, hi: f64 },
}

impl DomainBox {
    pub fn new(intervals: &[(f64, f64)]) -> Result<Self, GeomError> {
        if intervals.is_empty() {
            return Err(GeomError::EmptyDomain);
        }
        for (axis, &(lo, hi)) in intervals.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(GeomError::BadInterval { axis, lo, hi });
            }
        }
        Ok(DomainBox(BoxN {
            lo: intervals.iter().map(|p| p.0).collect(),
            hi: intervals.iter().map(|p| p.1).collect(),
        }))
    }

    /// 1-d domain (t only).
    pub fn line(lo: f64, hi: f64) -> Result<Self, GeomError> {
        DomainBox::new(&[(lo, hi)])
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn axis(&self, i: usize) -> (f64, f64) {
        (self.0.lo[i], self.0.hi[i])
    }

    /// Open containment.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.0.contains_strict(x)
    }

    /// Containment in the closure.
    pub fn contains_closure(&self, x: &[f64]) -> bool {
        self.0.contains(x)
    }

    pub fn as_box(&self) -> &BoxN {
        &self.0
    }

    pub fn min_width(&self) -> f64 {
        (0..self.dim()).map(|i| self.0.width(i)).fold(f64::INFINITY, f64::min)
    }
}

/// Derivative multi-index p in N^n; |p| is the total order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, axis: usize) -> Self {
        let mut v = vec![0; n];
        v[axis] = 1;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

// Graded lexicographic order: by total degree first, then lexicographic.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// Enumerate all multi-indices of length `n` with total degree ≤ `max_order`,
/// in graded-lex order.
pub fn multi_indices_up_to(n: usize, max_order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    for total in 0..=max_order {
        emit(n, total, 0, &mut cur, &mut out);
    }
    return out;

    fn emit(n: usize, remaining: u32, axis: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if axis == n - 1 {
            cur[axis] = remaining;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for k in 0..=remaining {
            cur[axis] = k;
            emit(n, remaining - k, axis + 1, cur, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_rejects_bad_intervals() {
        assert_eq!(
            DomainBox::new(&[(1.0, 1.0)]),
            Err(GeomError::BadInterval { axis: 0, lo: 1.0, hi: 1.0 })
        );
        assert_eq!(DomainBox::new(&[]), Err(GeomError::EmptyDomain));
        assert!(DomainBox::new(&[(0.0, 1.0), (0.0, 2.0)]).is_ok());
    }

    #[test]
    fn linf_distances() {
        let b = BoxN::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(b.linf_dist(&[0.5, 0.5]), 0.0);
        assert_eq!(b.linf_dist(&[2.0, 0.5]), 1.0);
        assert_eq!(b.linf_dist(&[-0.25, 1.5]), 0.5);
        let c = BoxN::new(vec![2.0, 0.0], vec![3.0, 1.0]);
        assert_eq!(b.linf_gap(&c), 1.0);
        assert!(b.disjoint(&c));
    }

    #[test]
    fn graded_lex_enumeration() {
        let idx = multi_indices_up_to(2, 2);
        let orders: Vec<u32> = idx.iter().map(|m| m.order()).collect();
        assert_eq!(orders, vec![0, 1, 1, 2, 2, 2]);
        assert_eq!(idx.len(), 6);
        let mut sorted = idx.clone();
        sorted.sort();
        assert_eq!(idx, sorted);
    }
}
