//! Multivariate truncated Taylor series: the local analytic solution
//! representation and its arithmetic.
//!
//! Coefficients are stored densely in graded-lex rank order (layouts are
//! cached per dimension/order), total degree is truncated at `order`,
//! and every operation is a pure function producing a fresh table, so
//! identical inputs give bit-identical coefficient vectors.

pub mod ck;

use crate::expr::{Node, SmoothExpr};
use crate::geom::{multi_indices_up_to, BoxN, DomainBox, MultiIndex};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SeriesError {
    #[error("series centers differ: {0:?} vs {1:?}")]
    CenterMismatch(Vec<f64>, Vec<f64>),
    #[error("series dimensions or orders differ")]
    ShapeMismatch,
    #[error("division by a series with zero constant term")]
    NonInvertible,
    #[error("expansion center sits on a kernel support boundary")]
    AtSupportBoundary,
    #[error("outer series of a scalar composition must be univariate")]
    OuterNotUnivariate,
    #[error("scalar composition needs the outer center to match the inner constant term")]
    CompositionCenter,
    #[error("cannot expand node into a series: {0}")]
    Unsupported(String),
    #[error("variable {0} has no series assignment")]
    MissingAssignment(usize),
}

pub(crate) struct Layout {
    pub indices: Vec<MultiIndex>,
    pub rank: HashMap<Vec<u32>, usize>,
}

fn layout(dim: usize, order: u32) -> Arc<Layout> {
    static LAYOUTS: OnceLock<Mutex<HashMap<(usize, u32), Arc<Layout>>>> = OnceLock::new();
    let cache = LAYOUTS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((dim, order))
        .or_insert_with(|| {
            let indices = multi_indices_up_to(dim, order);
            let rank = indices
                .iter()
                .enumerate()
                .map(|(r, idx)| (idx.0.clone(), r))
                .collect();
            Arc::new(Layout { indices, rank })
        })
        .clone()
}

/// Multivariate Taylor polynomial around `center`, truncated at total
/// degree `order`.
#[derive(Clone)]
pub struct TruncatedSeries {
    center: Vec<f64>,
    order: u32,
    coeffs: Vec<f64>,
    validity: Option<BoxN>,
    layout: Arc<Layout>,
}

impl std::fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TruncatedSeries(center={:?}, order={}", self.center, self.order)?;
        for (idx, c) in self.rows() {
            write!(f, ", {idx}:{c}")?;
        }
        write!(f, ")")
    }
}

impl PartialEq for TruncatedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center && self.order == other.order && self.coeffs == other.coeffs
    }
}

/// Value of a series evaluation together with an extrapolation notice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Set when the point lies outside the validity box; the value is
    /// still returned.
    pub extrapolated: bool,
}

impl TruncatedSeries {
    pub fn zero(center: &[f64], order: u32) -> Self {
        let layout = layout(center.len(), order);
        TruncatedSeries {
            center: center.to_vec(),
            order,
            coeffs: vec![0.0; layout.indices.len()],
            validity: None,
            layout,
        }
    }

    pub fn constant(center: &[f64], order: u32, v: f64) -> Self {
        let mut s = Self::zero(center, order);
        s.coeffs[0] = v;
        s
    }

    /// The coordinate function x_axis as a series: center + delta.
    pub fn coordinate(center: &[f64], order: u32, axis: usize) -> Self {
        let mut s = Self::constant(center, order, center[axis]);
        if order >= 1 {
            let r = s.layout.rank[&MultiIndex::unit(center.len(), axis).0];
            s.coeffs[r] = 1.0;
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn validity(&self) -> Option<&BoxN> {
        self.validity.as_ref()
    }

    pub fn set_validity(&mut self, b: Option<BoxN>) {
        self.validity = b;
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        self.layout.rank.get(&idx.0).map_or(0.0, |&r| self.coeffs[r])
    }

    pub fn set_coeff(&mut self, idx: &MultiIndex, v: f64) {
        let r = self.layout.rank[&idx.0];
        self.coeffs[r] = v;
    }

    /// Nonzero coefficients in graded-lex order.
    pub fn rows(&self) -> Vec<(MultiIndex, f64)> {
        self.layout
            .indices
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (i.clone(), *c))
            .collect()
    }

    pub fn from_rows(center: &[f64], order: u32, rows: &[(MultiIndex, f64)]) -> Self {
        let mut s = Self::zero(center, order);
        for (idx, c) in rows {
            if idx.order() <= order {
                s.set_coeff(idx, *c);
            }
        }
        s
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }

    fn check_shape(&self, other: &Self) -> Result<(), SeriesError> {
        if self.center != other.center {
            return Err(SeriesError::CenterMismatch(self.center.clone(), other.center.clone()));
        }
        if self.order != other.order || self.dim() != other.dim() {
            return Err(SeriesError::ShapeMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.validity = None;
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.validity = None;
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.validity = None;
        for c in &mut out.coeffs {
            *c *= k;
        }
        out
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_shape(other)?;
        let mut out = Self::zero(&self.center, self.order);
        let idx = &self.layout.indices;
        for i in 0..self.coeffs.len() {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            let deg_i = idx[i].order();
            for j in 0..other.coeffs.len() {
                let b = other.coeffs[j];
                if b == 0.0 {
                    continue;
                }
                if deg_i + idx[j].order() > self.order {
                    continue;
                }
                let sum = idx[i].add(&idx[j]);
                let r = self.layout.rank[&sum.0];
                out.coeffs[r] += a * b;
            }
        }
        Ok(out)
    }

    /// Series division; `other` must have a nonzero constant term.
    pub fn div(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_shape(other)?;
        let b0 = other.constant_term();
        if b0 == 0.0 {
            return Err(SeriesError::NonInvertible);
        }
        let mut q = Self::zero(&self.center, self.order);
        let idx = &self.layout.indices;
        // ranks ascend in total degree, so every needed q entry exists
        for g in 0..self.coeffs.len() {
            let mut acc = self.coeffs[g];
            let gamma = &idx[g];
            for b in 1..other.coeffs.len() {
                let bc = other.coeffs[b];
                if bc == 0.0 {
                    continue;
                }
                let beta = &idx[b];
                if beta.order() > gamma.order() {
                    break;
                }
                if !componentwise_le(beta, gamma) {
                    continue;
                }
                let diff: Vec<u32> = gamma.0.iter().zip(&beta.0).map(|(x, y)| x - y).collect();
                let r = self.layout.rank[&diff];
                acc -= bc * q.coeffs[r];
            }
            q.coeffs[g] = acc / b0;
        }
        Ok(q)
    }

    pub fn powi(&self, k: u32) -> Result<Self, SeriesError> {
        let mut acc = Self::constant(&self.center, self.order, 1.0);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Formal mixed partial derivative; truncation order is kept.
    pub fn derive(&self, p: &MultiIndex) -> Self {
        let mut out = Self::zero(&self.center, self.order);
        for (r, idx) in self.layout.indices.iter().enumerate() {
            let c = self.coeffs[r];
            if c == 0.0 {
                continue;
            }
            if !componentwise_le(p, idx) {
                continue;
            }
            let mut factor = 1.0;
            let mut target = Vec::with_capacity(self.dim());
            for i in 0..self.dim() {
                let (k, d) = (idx.get(i), p.get(i));
                for step in 0..d {
                    factor *= (k - step) as f64;
                }
                target.push(k - d);
            }
            let tr = self.layout.rank[&target];
            out.coeffs[tr] += c * factor;
        }
        out
    }

    /// Taylor shift along one axis (exact re-centering of the polynomial).
    pub fn shift_axis(&self, axis: usize, delta: f64) -> Self {
        let mut new_center = self.center.clone();
        new_center[axis] += delta;
        let mut out = Self::zero(&new_center, self.order);
        // c'_{j} = sum_{i >= j} c_i C(i, j) delta^{i-j}, axiswise
        for (r, idx) in self.layout.indices.iter().enumerate() {
            let c = self.coeffs[r];
            if c == 0.0 {
                continue;
            }
            let k = idx.get(axis);
            let mut binom = 1.0;
            let mut dpow = 1.0;
            for j in (0..=k).rev() {
                // binomial C(k, j) built incrementally from the top
                let mut target = idx.0.clone();
                target[axis] = j;
                let tr = self.layout.rank[&target];
                out.coeffs[tr] += c * binom * dpow;
                if j > 0 {
                    binom = binom * j as f64 / (k - j + 1) as f64;
                    dpow *= delta;
                }
            }
        }
        out
    }

    /// Exact polynomial re-centering at a new point.
    pub fn recenter(&self, new_center: &[f64]) -> Self {
        let mut out = self.clone();
        out.validity = None;
        for axis in 0..self.dim() {
            let delta = new_center[axis] - out.center[axis];
            if delta != 0.0 {
                out = out.shift_axis(axis, delta);
            } else {
                out.center[axis] = new_center[axis];
            }
        }
        out
    }

    /// Nested Horner evaluation; reports (but does not refuse) points
    /// outside the validity box.
    pub fn evaluate(&self, x: &[f64]) -> SeriesValue {
        let delta: Vec<f64> = (0..self.dim()).map(|i| x[i] - self.center[i]).collect();
        let rows: Vec<(&[u32], f64)> = self
            .layout
            .indices
            .iter()
            .zip(&self.coeffs)
            .map(|(i, c)| (i.0.as_slice(), *c))
            .collect();
        let value = horner(&rows, &delta, 0, self.order);
        let extrapolated = match &self.validity {
            Some(b) => !b.contains(x),
            None => false,
        };
        SeriesValue { value, extrapolated }
    }
}

fn componentwise_le(a: &MultiIndex, b: &MultiIndex) -> bool {
    a.0.iter().zip(&b.0).all(|(x, y)| x <= y)
}

fn horner(rows: &[(&[u32], f64)], delta: &[f64], axis: usize, max_pow: u32) -> f64 {
    if axis == delta.len() {
        return rows.iter().map(|(_, c)| *c).sum();
    }
    let mut acc = 0.0;
    for k in (0..=max_pow).rev() {
        let sub: Vec<(&[u32], f64)> = rows
            .iter()
            .filter(|(idx, c)| idx[axis] == k && *c != 0.0)
            .map(|(idx, c)| (*idx, *c))
            .collect();
        let part = if sub.is_empty() { 0.0 } else { horner(&sub, delta, axis + 1, max_pow - k) };
        acc = acc * delta[axis] + part;
    }
    acc
}

// ---------------------------------------------------------------------
// univariate composition

/// Composition f(inner) for a univariate outer series f; the outer
/// expansion point must equal the inner constant term exactly.
pub fn series_compose_scalar(
    outer: &TruncatedSeries,
    inner: &TruncatedSeries,
) -> Result<TruncatedSeries, SeriesError> {
    if outer.dim() != 1 {
        return Err(SeriesError::OuterNotUnivariate);
    }
    if outer.center[0] != inner.constant_term() {
        return Err(SeriesError::CompositionCenter);
    }
    let n = inner.order;
    let mut shifted = inner.clone();
    shifted.coeffs[0] = 0.0;
    let mut acc = TruncatedSeries::constant(&inner.center, n, outer.coeff(&MultiIndex(vec![n])));
    for k in (0..n).rev() {
        acc = acc.mul(&shifted)?;
        acc.coeffs[0] += outer.coeff(&MultiIndex(vec![k]));
    }
    Ok(acc)
}

fn univariate(at: f64, order: u32, derivs: impl Fn(u32) -> f64) -> TruncatedSeries {
    let mut out = TruncatedSeries::zero(&[at], order);
    let mut fact = 1.0;
    for k in 0..=order {
        if k > 0 {
            fact *= k as f64;
        }
        out.coeffs[k as usize] = derivs(k) / fact;
    }
    out
}

/// Taylor series of exp at the point `at`.
pub fn exp_series(at: f64, order: u32) -> TruncatedSeries {
    let e = at.exp();
    univariate(at, order, |_| e)
}

pub fn sin_series(at: f64, order: u32) -> TruncatedSeries {
    let (s, c) = at.sin_cos();
    univariate(at, order, |k| match k % 4 {
        0 => s,
        1 => c,
        2 => -s,
        _ => -c,
    })
}

pub fn cos_series(at: f64, order: u32) -> TruncatedSeries {
    let (s, c) = at.sin_cos();
    univariate(at, order, |k| match k % 4 {
        0 => c,
        1 => -s,
        2 => -c,
        _ => s,
    })
}

// ---------------------------------------------------------------------
// expression -> series

/// Expand an expression into its Taylor series at `center`, to total
/// degree `order`. Bump kernels expand away from their support boundary;
/// steps and differentiated kernels are not needed in analytic data and
/// are rejected.
pub fn expr_to_series(
    e: &SmoothExpr,
    center: &[f64],
    order: u32,
) -> Result<TruncatedSeries, SeriesError> {
    let coords: Vec<TruncatedSeries> = (0..center.len())
        .map(|i| TruncatedSeries::coordinate(center, order, i))
        .collect();
    eval_on_series(e, &coords)
}

/// Evaluate an expression tree in series arithmetic, substituting the
/// given series for each variable index.
pub fn eval_on_series(
    e: &SmoothExpr,
    assign: &[TruncatedSeries],
) -> Result<TruncatedSeries, SeriesError> {
    let probe = assign.first().ok_or(SeriesError::MissingAssignment(0))?;
    let (center, order) = (probe.center.clone(), probe.order);
    match e.as_node() {
        Node::Var(i) => assign
            .get(*i)
            .cloned()
            .ok_or(SeriesError::MissingAssignment(*i)),
        Node::Const(c) => Ok(TruncatedSeries::constant(&center, order, *c)),
        Node::Add(cs) => {
            let mut acc = TruncatedSeries::zero(&center, order);
            for c in cs {
                acc = acc.add(&eval_on_series(c, assign)?)?;
            }
            Ok(acc)
        }
        Node::Mul(cs) => {
            let mut acc = TruncatedSeries::constant(&center, order, 1.0);
            for c in cs {
                acc = acc.mul(&eval_on_series(c, assign)?)?;
            }
            Ok(acc)
        }
        Node::Div(a, b) => eval_on_series(a, assign)?.div(&eval_on_series(b, assign)?),
        Node::Pow(a, k) => {
            let base = eval_on_series(a, assign)?;
            if *k >= 0 {
                base.powi(*k as u32)
            } else {
                TruncatedSeries::constant(&center, order, 1.0).div(&base.powi(k.unsigned_abs())?)
            }
        }
        Node::Sin(a) => {
            let inner = eval_on_series(a, assign)?;
            series_compose_scalar(&sin_series(inner.constant_term(), order), &inner)
        }
        Node::Cos(a) => {
            let inner = eval_on_series(a, assign)?;
            series_compose_scalar(&cos_series(inner.constant_term(), order), &inner)
        }
        Node::Exp(a) => {
            let inner = eval_on_series(a, assign)?;
            series_compose_scalar(&exp_series(inner.constant_term(), order), &inner)
        }
        Node::Bump(b) => {
            if !b.orders.is_zero() {
                return Err(SeriesError::Unsupported("differentiated bump kernel".into()));
            }
            let mut s = TruncatedSeries::zero(&center, order);
            for (i, ci) in b.center.iter().enumerate() {
                let z = assign
                    .get(i)
                    .ok_or(SeriesError::MissingAssignment(i))?
                    .add(&TruncatedSeries::constant(&center, order, -ci))?
                    .scale(1.0 / b.radius);
                s = s.add(&z.mul(&z)?)?;
            }
            let s0 = s.constant_term();
            if s0 > 1.0 {
                return Ok(TruncatedSeries::zero(&center, order));
            }
            if (1.0 - s0).abs() < 1e-12 {
                return Err(SeriesError::AtSupportBoundary);
            }
            let one = TruncatedSeries::constant(&center, order, 1.0);
            let u = one.sub(&s)?;
            let minus_inv = TruncatedSeries::zero(&center, order).sub(&one.div(&u)?)?;
            series_compose_scalar(&exp_series(minus_inv.constant_term(), order), &minus_inv)
        }
        Node::Step(_) => Err(SeriesError::Unsupported("smooth step".into())),
    }
}

// ---------------------------------------------------------------------
// radius estimation

/// Per-axis convergence radius estimates from a root test on the top
/// coefficient shells, scaled by the safety factor. A series with no
/// high-degree mass along an axis gets an unbounded estimate.
pub fn root_test_radii(s: &TruncatedSeries, safety: f64) -> Vec<f64> {
    let n = s.dim();
    let mut out = Vec::with_capacity(n);
    for axis in 0..n {
        // max |coefficient| per power along this axis
        let mut shell = vec![0.0f64; s.order as usize + 1];
        for (r, idx) in s.layout.indices.iter().enumerate() {
            let k = idx.get(axis) as usize;
            shell[k] = shell[k].max(s.coeffs[r].abs());
        }
        // root test on the top two nonzero shells of the truncation
        // tail; no tail mass means the series is polynomial-like along
        // this axis and the estimate is unbounded
        let tail_start = s.order as usize / 2 + 1;
        let mut est: f64 = 0.0;
        let mut seen = 0;
        for k in (tail_start..shell.len()).rev() {
            if shell[k] > 0.0 {
                est = est.max(shell[k].powf(1.0 / k as f64));
                seen += 1;
                if seen == 2 {
                    break;
                }
            }
        }
        out.push(if est > 0.0 { safety / est } else { f64::INFINITY });
    }
    out
}

/// Validity box from the root-test radii, clipped to the domain.
pub fn estimate_radius(
    s: &TruncatedSeries,
    domain: &DomainBox,
    safety: f64,
) -> Result<BoxN, SeriesError> {
    if s.order < 4 {
        return Err(SeriesError::Unsupported("radius estimation needs order >= 4".into()));
    }
    let radii = root_test_radii(s, safety);
    let n = s.dim();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for axis in 0..n {
        let (dlo, dhi) = domain.axis(axis);
        lo.push((s.center[axis] - radii[axis]).max(dlo));
        hi.push((s.center[axis] + radii[axis]).min(dhi));
    }
    Ok(BoxN::new(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn cauchy_product_truncates() {
        // (1 + t)(1 - t) at N = 2 -> 1 - t^2
        let one_plus = TruncatedSeries::from_rows(&[0.0], 2, &[(mi(&[0]), 1.0), (mi(&[1]), 1.0)]);
        let one_minus = TruncatedSeries::from_rows(&[0.0], 2, &[(mi(&[0]), 1.0), (mi(&[1]), -1.0)]);
        let p = one_plus.mul(&one_minus).unwrap();
        assert_eq!(p.rows(), vec![(mi(&[0]), 1.0), (mi(&[2]), -1.0)]);
    }

    #[test]
    fn add_identity() {
        let s = TruncatedSeries::from_rows(&[0.0, 0.0], 3, &[(mi(&[1, 2]), 4.5)]);
        let z = TruncatedSeries::zero(&[0.0, 0.0], 3);
        assert_eq!(s.add(&z).unwrap(), s);
    }

    #[test]
    fn geometric_times_one_minus_t() {
        // (sum t^k, k <= 5)(1 - t) -> 1 after truncation at N = 5
        let geo = TruncatedSeries::from_rows(
            &[0.0],
            5,
            &(0..=5).map(|k| (mi(&[k]), 1.0)).collect::<Vec<_>>(),
        );
        let one_minus = TruncatedSeries::from_rows(&[0.0], 5, &[(mi(&[0]), 1.0), (mi(&[1]), -1.0)]);
        let p = geo.mul(&one_minus).unwrap();
        assert_eq!(p.rows(), vec![(mi(&[0]), 1.0)]);
    }

    #[test]
    fn center_mismatch_rejected() {
        let a = TruncatedSeries::zero(&[0.0], 3);
        let b = TruncatedSeries::zero(&[1.0], 3);
        assert!(matches!(a.add(&b), Err(SeriesError::CenterMismatch(..))));
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = TruncatedSeries::from_rows(
            &[0.0, 0.0],
            4,
            &[(mi(&[0, 0]), 2.0), (mi(&[1, 0]), 1.0), (mi(&[0, 2]), -0.5)],
        );
        let b = TruncatedSeries::from_rows(
            &[0.0, 0.0],
            4,
            &[(mi(&[0, 0]), 1.0), (mi(&[1, 1]), 3.0)],
        );
        let q = a.mul(&b).unwrap().div(&b).unwrap();
        for (idx, c) in q.rows() {
            assert!((c - a.coeff(&idx)).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_polynomial() {
        // y + t at (1, 2) -> 3
        let s = TruncatedSeries::from_rows(&[0.0, 0.0], 3, &[(mi(&[1, 0]), 1.0), (mi(&[0, 1]), 1.0)]);
        assert_eq!(s.evaluate(&[1.0, 2.0]).value, 3.0);
        // value at the center is the constant coefficient
        let c = TruncatedSeries::from_rows(&[0.3, -0.2], 3, &[(mi(&[0, 0]), 7.5), (mi(&[2, 1]), 3.0)]);
        assert_eq!(c.evaluate(&[0.3, -0.2]).value, 7.5);
    }

    #[test]
    fn evaluate_partial_geometric_sum() {
        // 1/(1-t) truncated at N = 10, at t = 0.5 -> 2 - 2^-10
        let s = TruncatedSeries::from_rows(
            &[0.0],
            10,
            &(0..=10).map(|k| (mi(&[k]), 1.0)).collect::<Vec<_>>(),
        );
        let v = s.evaluate(&[0.5]).value;
        assert!((v - 1.9990234375).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn extrapolation_is_flagged() {
        let mut s = TruncatedSeries::from_rows(&[0.0], 4, &[(mi(&[1]), 1.0)]);
        s.set_validity(Some(BoxN::new(vec![-0.5], vec![0.5])));
        assert!(!s.evaluate(&[0.25]).extrapolated);
        assert!(s.evaluate(&[0.75]).extrapolated);
    }

    #[test]
    fn expr_expansion_matches_closed_form() {
        // sin(t + y) at the origin
        let e = expr::sin(&expr::add(&expr::t(), &expr::y(1)));
        let s = expr_to_series(&e, &[0.0, 0.0], 6).unwrap();
        // coefficient of t^j y^q is sin^{(j+q)}(0) / (j! q!)
        let fact = |k: u32| (1..=k).map(|v| v as f64).product::<f64>();
        for (idx, c) in s.rows() {
            let k = idx.order();
            let expect = match k % 4 {
                1 => 1.0,
                3 => -1.0,
                _ => 0.0,
            } / (fact(idx.get(0)) * fact(idx.get(1)));
            assert!((c - expect).abs() < 1e-14, "{idx} -> {c} vs {expect}");
        }
    }

    #[test]
    fn bump_series_derivatives_match_symbolic() {
        let e = expr::bump_unchecked(&[0.0], 1.0);
        let s = expr_to_series(&e, &[0.25], 6).unwrap();
        let fact = |k: u32| (1..=k).map(|v| v as f64).product::<f64>();
        for k in 0..=4u32 {
            let d = e.differentiate(&mi(&[k]));
            let sym = d.evaluate(&[0.25]).unwrap();
            let from_series = s.coeff(&mi(&[k])) * fact(k);
            assert!(
                (sym - from_series).abs() < 1e-9 * sym.abs().max(1.0),
                "k={k}: {sym} vs {from_series}"
            );
        }
    }

    #[test]
    fn shift_recenters_polynomial_exactly() {
        // p = (t - 1)^2 + 3 y expanded at 0, recentred at (1, 2)
        let p = TruncatedSeries::from_rows(
            &[0.0, 0.0],
            4,
            &[(mi(&[0, 0]), 1.0), (mi(&[1, 0]), -2.0), (mi(&[2, 0]), 1.0), (mi(&[0, 1]), 3.0)],
        );
        let q = p.recenter(&[1.0, 2.0]);
        assert_eq!(q.coeff(&mi(&[0, 0])), 6.0);
        assert_eq!(q.coeff(&mi(&[1, 0])), 0.0);
        assert_eq!(q.coeff(&mi(&[2, 0])), 1.0);
        assert_eq!(q.coeff(&mi(&[0, 1])), 3.0);
        for x in [[0.3, -1.0], [1.5, 0.25]] {
            assert!((p.evaluate(&x).value - q.evaluate(&x).value).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_estimates() {
        let dom = DomainBox::new(&[(-5.0, 5.0)]).unwrap();
        // geometric coefficients 1,1,1,... -> radius about safety * 1
        let geo = TruncatedSeries::from_rows(
            &[0.0],
            8,
            &(0..=8).map(|k| (mi(&[k]), 1.0)).collect::<Vec<_>>(),
        );
        let b = estimate_radius(&geo, &dom, 0.8).unwrap();
        assert!((b.hi[0] - 0.8).abs() < 1e-12, "got {:?}", b);

        // finite polynomial -> whole domain
        let poly = TruncatedSeries::from_rows(&[0.0], 8, &[(mi(&[1]), 1.0)]);
        let b = estimate_radius(&poly, &dom, 0.8).unwrap();
        assert_eq!((b.lo[0], b.hi[0]), (-5.0, 5.0));

        // cos t at N = 8 under safety 0.8 -> t-radius at least 2
        let cos8 = expr_to_series(&expr::cos(&expr::t()), &[0.0], 8).unwrap();
        let b = estimate_radius(&cos8, &dom, 0.8).unwrap();
        assert!(b.hi[0] >= 2.0, "got {:?}", b);
    }
}
