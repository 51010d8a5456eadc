//! The Cauchy-Kovalevskaya coefficient recursion.
//!
//! For a system in normal form D_t^m U = G(t, y, ..., D_t^p D_y^q U, ...)
//! with 0 ≤ p < m and p + |q| ≤ m, the Taylor coefficients of U at a
//! hypersurface point are determined degree by degree: t-degrees below m
//! come straight from the initial data, and equating the t-degree-j row
//! of D_t^m U with the same row of G (expanded in series arithmetic over
//! the current jet of U) yields the t-degree m+j coefficients. The row
//! being solved only ever consumes rows that are already known.

use super::{eval_on_series, expr_to_series, SeriesError, TruncatedSeries};
use crate::expr::SmoothExpr;
use crate::geom::{DomainBox, MultiIndex};

/// The analytic IVP in normal form. Variables 0..n of `rhs` are the
/// coordinates (t, y); variable n + k stands for the jet `jets[k]`.
#[derive(Debug, Clone)]
pub struct PdeSystem {
    pub order_m: u32,
    pub rhs: SmoothExpr,
    pub jets: Vec<(u32, MultiIndex)>,
    pub domain: DomainBox,
    pub t0: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PdeError {
    #[error("equation order m must be at least 1")]
    OrderZero,
    #[error("jet J[{p},{q}] violates p < m (m = {m})")]
    JetTimeOrder { p: u32, q: MultiIndex, m: u32 },
    #[error("jet J[{p},{q}] violates p + |q| <= m (m = {m})")]
    JetTotalOrder { p: u32, q: MultiIndex, m: u32 },
    #[error("jet multi-index {q} must have length {want} (one entry per y axis)")]
    JetDimension { q: MultiIndex, want: usize },
    #[error("right-hand side references variable {var}, but only {avail} are available")]
    RhsUnknownVar { var: usize, avail: usize },
    #[error("hypersurface coordinate t0 = {t0} lies outside the domain t-range [{lo}, {hi}]")]
    T0Outside { t0: f64, lo: f64, hi: f64 },
}

impl PdeSystem {
    pub fn new(
        order_m: u32,
        rhs: SmoothExpr,
        jets: Vec<(u32, MultiIndex)>,
        domain: DomainBox,
        t0: f64,
    ) -> Result<Self, PdeError> {
        if order_m == 0 {
            return Err(PdeError::OrderZero);
        }
        let n = domain.dim();
        let (tlo, thi) = domain.axis(0);
        if !(tlo <= t0 && t0 <= thi) {
            return Err(PdeError::T0Outside { t0, lo: tlo, hi: thi });
        }
        for (p, q) in &jets {
            if q.len() != n - 1 {
                return Err(PdeError::JetDimension { q: q.clone(), want: n - 1 });
            }
            if *p >= order_m {
                return Err(PdeError::JetTimeOrder { p: *p, q: q.clone(), m: order_m });
            }
            if p + q.order() > order_m {
                return Err(PdeError::JetTotalOrder { p: *p, q: q.clone(), m: order_m });
            }
        }
        if let Some(v) = rhs.max_var() {
            if v >= n + jets.len() {
                return Err(PdeError::RhsUnknownVar { var: v, avail: n + jets.len() });
            }
        }
        Ok(PdeSystem { order_m, rhs, jets, domain, t0 })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Full-dimension derivative multi-index of jet k.
    pub fn jet_multi_index(&self, k: usize) -> MultiIndex {
        let (p, q) = &self.jets[k];
        let mut v = Vec::with_capacity(self.dim());
        v.push(*p);
        v.extend_from_slice(&q.0);
        MultiIndex(v)
    }
}

/// Cauchy data on the hypersurface t = t0: D_t^p U(t0, y) = g_p(y).
#[derive(Debug, Clone)]
pub struct InitialData {
    pub g: Vec<SmoothExpr>,
    pub t0: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CkError {
    #[error("radius collapse: coefficient overflow while solving degree {degree}")]
    RadiusCollapse { degree: u32 },
    #[error("series expansion failed: {0}")]
    Expansion(#[from] SeriesError),
    #[error("initial data: {0}")]
    Data(String),
    #[error("expansion center t = {t} is not on the hypersurface t = {t0}")]
    OffHypersurface { t0: f64, t: f64 },
}

const OVERFLOW_GUARD: f64 = 1e80;

/// Local analytic solution of the IVP as a Taylor polynomial at `center`
/// (which must lie on the hypersurface).
pub fn ck_solve_local(
    pde: &PdeSystem,
    data: &InitialData,
    center: &[f64],
    order: u32,
) -> Result<TruncatedSeries, CkError> {
    let m = pde.order_m as usize;
    if data.g.len() != m {
        return Err(CkError::Data(format!(
            "need {m} data functions for an order-{m} equation, got {}",
            data.g.len()
        )));
    }
    if (center[0] - data.t0).abs() > 1e-12 {
        return Err(CkError::OffHypersurface { t0: data.t0, t: center[0] });
    }
    let n = pde.dim();
    for g in &data.g {
        if g.uses_var(0) {
            return Err(CkError::Data(format!("data function `{g}` depends on t")));
        }
        if let Some(v) = g.max_var() {
            if v >= n {
                return Err(CkError::Data(format!(
                    "data function `{g}` references variable {v} outside the domain"
                )));
            }
        }
    }
    let rows: Result<Vec<TruncatedSeries>, SeriesError> =
        data.g.iter().map(|g| expr_to_series(g, center, order)).collect();
    ck_solve_from_rows(pde, &rows?, center, order)
}

/// Same recursion from already-expanded data rows: rows[p] is the series
/// of D_t^p U on the hypersurface (t-degree-0 coefficients only).
pub fn ck_solve_from_rows(
    pde: &PdeSystem,
    rows: &[TruncatedSeries],
    center: &[f64],
    order: u32,
) -> Result<TruncatedSeries, CkError> {
    let m = pde.order_m;
    let n = pde.dim();
    let mut u = TruncatedSeries::zero(center, order);

    // t-degrees below m are Taylor coefficients of the data
    let mut p_fact = 1.0;
    for (p, row) in rows.iter().enumerate() {
        if p > 0 {
            p_fact *= p as f64;
        }
        for (idx, c) in row.rows() {
            if idx.get(0) != 0 {
                return Err(CkError::Data("data row has t-dependence".into()));
            }
            let mut full = idx.0.clone();
            full[0] = p as u32;
            let full = MultiIndex(full);
            if full.order() <= order {
                u.set_coeff(&full, c / p_fact);
            }
        }
        if !row.max_abs_coeff().is_finite() || row.max_abs_coeff() > OVERFLOW_GUARD {
            return Err(CkError::RadiusCollapse { degree: p as u32 });
        }
    }

    if order < m {
        return Ok(u);
    }

    let coords: Vec<TruncatedSeries> =
        (0..n).map(|i| TruncatedSeries::coordinate(center, order, i)).collect();

    for j in 0..=(order - m) {
        // jets of the partially known solution; rows of t-degree j only
        // depend on coefficients with t-degree < m + j, all known
        let mut assigns = coords.clone();
        for k in 0..pde.jets.len() {
            assigns.push(u.derive(&pde.jet_multi_index(k)));
        }
        let rhs = eval_on_series(&pde.rhs, &assigns)?;

        // j! / (m+j)!
        let mut ratio = 1.0;
        for i in (j + 1)..=(m + j) {
            ratio /= i as f64;
        }
        let mut worst: f64 = 0.0;
        for (idx, c) in rhs.rows() {
            if idx.get(0) != j {
                continue;
            }
            if idx.order() + m > order {
                continue;
            }
            let mut full = idx.0.clone();
            full[0] = m + j;
            let v = c * ratio;
            u.set_coeff(&MultiIndex(full), v);
            worst = worst.max(v.abs());
        }
        if !worst.is_finite() || worst > OVERFLOW_GUARD {
            return Err(CkError::RadiusCollapse { degree: m + j });
        }
    }
    Ok(u)
}

/// Data rows induced on the shifted hypersurface t = center_t + delta:
/// the jet of `s` there, one row per t-derivative order below m.
pub fn induced_rows(s: &TruncatedSeries, delta: f64, m: u32) -> Vec<TruncatedSeries> {
    let shifted = s.shift_axis(0, delta);
    let mut rows = Vec::with_capacity(m as usize);
    let mut fact = 1.0;
    for p in 0..m {
        if p > 0 {
            fact *= p as f64;
        }
        let mut row = TruncatedSeries::zero(shifted.center(), s.order());
        for (idx, c) in shifted.rows() {
            if idx.get(0) == p {
                let mut flat = idx.0.clone();
                flat[0] = 0;
                row.set_coeff(&MultiIndex(flat), c * fact);
            }
        }
        rows.push(row);
    }
    rows
}

/// Residual series of the equation on a candidate solution: the series
/// of D_t^m U - G(..., jets of U, ...) at the expansion center.
pub fn residual_series(pde: &PdeSystem, u: &TruncatedSeries) -> Result<TruncatedSeries, SeriesError> {
    let n = pde.dim();
    let mut assigns: Vec<TruncatedSeries> =
        (0..n).map(|i| TruncatedSeries::coordinate(u.center(), u.order(), i)).collect();
    for k in 0..pde.jets.len() {
        assigns.push(u.derive(&pde.jet_multi_index(k)));
    }
    let rhs = eval_on_series(&pde.rhs, &assigns)?;
    let mut dtm = vec![0u32; n];
    dtm[0] = pde.order_m;
    u.derive(&MultiIndex(dtm)).sub(&rhs)
}
