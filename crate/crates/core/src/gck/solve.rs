//! Hypersurface seeding, t-marching by re-expansion, blow-up detection,
//! and re-seeding beyond inserted slabs.
//!
//! Marching is column-local: the multivariate series at a column center
//! carries all the y-derivatives the re-expansion needs. Where the
//! root-test radius collapses, a simple-pole model A(y) + B(y)/(ρ(y)-t)
//! is fitted from the top coefficient rows; it pins the blow-up locus
//! for the slab and induces analytic data for a fresh Cauchy problem on
//! the far side. When no model fits, zero data is tried; a region where
//! every seed collapses is dead and counts against the measure budget.

use super::{GckConfig, GckError};
use crate::geom::{BoxN, MultiIndex};
use crate::series::ck::{ck_solve_from_rows, induced_rows, CkError, InitialData, PdeSystem};
use crate::series::{expr_to_series, root_test_radii, TruncatedSeries};

#[derive(Debug, Clone)]
pub(crate) struct ColumnGeom {
    pub index: usize,
    /// Per y-axis interval of this column (empty for 1-d problems).
    pub y_cells: Vec<(f64, f64)>,
    pub y_center: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct SegmentRec {
    pub t_lo: f64,
    pub t_hi: f64,
    pub series: TruncatedSeries,
}

#[derive(Debug, Clone)]
pub(crate) struct SlabRec {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Sampled blow-up locus points (full-dimension coordinates).
    pub locus: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct ColumnResult {
    pub geom: ColumnGeom,
    pub segments: Vec<SegmentRec>,
    pub slabs: Vec<SlabRec>,
    /// Dead t-intervals where no seed converged.
    pub fat: Vec<(f64, f64)>,
}

struct Detection {
    /// Center of the last convergent series.
    anchor_t: f64,
    anchor: Option<TruncatedSeries>,
    /// How far coverage actually reaches in this direction.
    cov_end: f64,
}

pub(crate) fn build_columns(pde: &PdeSystem, cfg: &GckConfig) -> Vec<ColumnGeom> {
    let n = pde.dim();
    // columns twice the resolution wide keep detected loci within the
    // Hausdorff margin for unit-Lipschitz curves at half the tile count
    let target = cfg.tile_size.min(2.0 * cfg.resolution_h);
    let mut per_axis: Vec<Vec<(f64, f64)>> = Vec::new();
    for axis in 1..n {
        let (lo, hi) = pde.domain.axis(axis);
        let count = ((hi - lo) / target).ceil().max(1.0) as usize;
        let w = (hi - lo) / count as f64;
        per_axis.push(
            (0..count)
                .map(|k| {
                    // keep the last edge exactly on the boundary
                    let upper = if k + 1 == count { hi } else { lo + (k + 1) as f64 * w };
                    (lo + k as f64 * w, upper)
                })
                .collect(),
        );
    }
    let mut columns = vec![ColumnGeom { index: 0, y_cells: Vec::new(), y_center: Vec::new() }];
    for cells in per_axis {
        let mut next = Vec::with_capacity(columns.len() * cells.len());
        for base in &columns {
            for cell in &cells {
                let mut g = base.clone();
                g.y_cells.push(*cell);
                g.y_center.push(0.5 * (cell.0 + cell.1));
                next.push(g);
            }
        }
        columns = next;
    }
    for (i, c) in columns.iter_mut().enumerate() {
        c.index = i;
    }
    columns
}

fn full_center(t: f64, yc: &[f64]) -> Vec<f64> {
    let mut c = Vec::with_capacity(1 + yc.len());
    c.push(t);
    c.extend_from_slice(yc);
    c
}

/// The τ^k coefficient row of a series as a y-only series (t-degree 0).
fn coefficient_row(s: &TruncatedSeries, k: u32) -> TruncatedSeries {
    let mut row = TruncatedSeries::zero(s.center(), s.order());
    for (idx, c) in s.rows() {
        if idx.get(0) == k {
            let mut flat = idx.0.clone();
            flat[0] = 0;
            row.set_coeff(&MultiIndex(flat), c);
        }
    }
    row
}

/// Re-center a t-independent series at a different t coordinate.
fn relabel_t(s: &TruncatedSeries, t: f64) -> TruncatedSeries {
    let mut center = s.center().to_vec();
    center[0] = t;
    TruncatedSeries::from_rows(&center, s.order(), &s.rows())
}

struct PoleModel {
    rho: TruncatedSeries,
    coef_b: TruncatedSeries,
    coef_a: TruncatedSeries,
}

/// Fit U ≈ A(y) + B(y)/(ρ(y) - τ) from the low coefficient rows of a
/// first-order column series: ρ = R_1/R_2, B = R_1 ρ², A = R_0 - R_1 ρ.
/// Low rows keep their full y-resolution under the total-degree
/// truncation and their leading terms never cancel, so the fit is
/// accurate wherever the solution is pole-dominated.
fn pole_model(anchor: &TruncatedSeries, m: u32, dir: f64, span: f64) -> Option<PoleModel> {
    if m != 1 {
        return None;
    }
    if anchor.order() < 4 {
        return None;
    }
    let r0 = coefficient_row(anchor, 0);
    let r1 = coefficient_row(anchor, 1);
    let r2 = coefficient_row(anchor, 2);
    if r2.constant_term().abs() < 1e-30 {
        return None;
    }
    let rho = r1.div(&r2).ok()?;
    let rho0 = rho.constant_term();
    if !rho0.is_finite() || rho0 * dir <= 0.0 || rho0.abs() > span {
        return None;
    }
    let b_over_rho = r1.mul(&rho).ok()?;
    let coef_b = b_over_rho.mul(&rho).ok()?;
    let coef_a = r0.sub(&b_over_rho).ok()?;
    Some(PoleModel { rho, coef_b, coef_a })
}

impl PoleModel {
    /// Induced data g(y) = A(y) + B(y)/(ρ(y) - τ) at the t-offset τ from
    /// the anchor center. The fit inputs only resolve y up to order
    /// N - 2 and the products lose a little more, so the rows are cut at
    /// their honest resolution; the geometric tail this drops is far
    /// smaller than the garbage it removes.
    fn rows_at(&self, tau: f64) -> Option<Vec<TruncatedSeries>> {
        let den = self
            .rho
            .add(&TruncatedSeries::constant(self.rho.center(), self.rho.order(), -tau))
            .ok()?;
        if den.constant_term().abs() < 1e-9 {
            return None;
        }
        let g = self.coef_a.add(&self.coef_b.div(&den).ok()?).ok()?;
        let keep = g.order().saturating_sub(4);
        let rows: Vec<(crate::geom::MultiIndex, f64)> = g
            .rows()
            .into_iter()
            .filter(|(idx, _)| idx.order() <= keep)
            .collect();
        Some(vec![TruncatedSeries::from_rows(g.center(), g.order(), &rows)])
    }
}

/// One uninterrupted marching run in a fixed direction.
fn march_run(
    pde: &PdeSystem,
    rows: &[TruncatedSeries],
    seed_t: f64,
    yc: &[f64],
    dir: f64,
    t_stop: f64,
    cfg: &GckConfig,
) -> (Vec<SegmentRec>, Option<Detection>) {
    let min_step = cfg.resolution_h / 5.0;
    let mut segments = Vec::new();
    let mut center_t = seed_t;
    let mut series = match ck_solve_from_rows(pde, rows, &full_center(seed_t, yc), cfg.order_n) {
        Ok(s) => s,
        Err(_) => {
            return (
                segments,
                Some(Detection { anchor_t: seed_t, anchor: None, cov_end: seed_t }),
            )
        }
    };
    loop {
        let r = root_test_radii(&series, cfg.safety)[0];
        if r < min_step {
            return (
                segments,
                Some(Detection { anchor_t: center_t, anchor: Some(series), cov_end: center_t }),
            );
        }
        let remaining = dir * (t_stop - center_t);
        // re-expansion at half the safe radius keeps the per-step data
        // truncation around (σ/2)^{N+1}; stepping the full estimate
        // compounds percent-level losses near poles
        let step = (0.5 * r).min(cfg.tile_size).min(remaining);
        let end = center_t + dir * step;
        segments.push(SegmentRec {
            t_lo: center_t.min(end),
            t_hi: center_t.max(end),
            series: series.clone(),
        });
        if step >= remaining - 1e-12 {
            return (segments, None);
        }
        let next_rows = induced_rows(&series, dir * step, pde.order_m);
        match ck_solve_from_rows(pde, &next_rows, &full_center(end, yc), cfg.order_n) {
            Ok(s) => {
                // two-sided consistency check: the re-expanded series
                // must reproduce the previous one inside the overlap,
                // otherwise the step crossed a breakdown the root test
                // did not see (branch points decay too slowly for it).
                // probe at half of both safe radii so truncation tails
                // stay far below the threshold
                let r_new = root_test_radii(&s, cfg.safety)[0];
                let back = end - dir * 0.5 * step.min(r_new);
                let old_v = series.evaluate(&full_center(back, yc)).value;
                let new_v = s.evaluate(&full_center(back, yc)).value;
                if !new_v.is_finite() || (new_v - old_v).abs() > 1e-3 * old_v.abs().max(1.0) {
                    return (
                        segments,
                        Some(Detection {
                            anchor_t: center_t,
                            anchor: Some(series),
                            cov_end: end,
                        }),
                    );
                }
                center_t = end;
                series = s;
            }
            Err(_) => {
                return (
                    segments,
                    Some(Detection { anchor_t: center_t, anchor: Some(series), cov_end: end }),
                );
            }
        }
    }
}

/// Estimated blow-up coordinate and sampled locus points for a slab.
fn pole_location(
    det: &Detection,
    dir: f64,
    cfg: &GckConfig,
    geom: &ColumnGeom,
    pde: &PdeSystem,
    t_stop: f64,
) -> (f64, Vec<Vec<f64>>) {
    let h = cfg.resolution_h;
    let span = (t_stop - det.cov_end).abs() + cfg.tile_size;
    let model = det
        .anchor
        .as_ref()
        .and_then(|s| pole_model(s, pde.order_m, dir, span));
    let mut t_hat = match (&model, &det.anchor) {
        (Some(m), _) => det.anchor_t + m.rho.constant_term(),
        (None, Some(s)) => {
            // crude ratio fallback on the pure-t row
            let a = |k: u32| {
                let mut idx = vec![0u32; s.dim()];
                idx[0] = k;
                s.coeff(&MultiIndex(idx))
            };
            let n = s.order();
            let ratio = a(n - 1) / a(n);
            if ratio.is_finite() && ratio * dir > 0.0 && ratio.abs() <= span {
                det.anchor_t + ratio
            } else {
                det.cov_end + dir * h / 3.0
            }
        }
        (None, None) => det.cov_end + dir * h / 3.0,
    };
    // keep the slab strictly beyond the covered region
    let lo_bound = det.cov_end + dir * h / 8.0;
    let hi_bound = det.cov_end + dir * cfg.tile_size;
    if dir > 0.0 {
        t_hat = t_hat.clamp(lo_bound.min(hi_bound), hi_bound.max(lo_bound));
    } else {
        t_hat = t_hat.clamp(hi_bound.min(lo_bound), lo_bound.max(hi_bound));
    }
    // locus samples: the detected coordinate at the column center and at
    // the cell edges (curve variation across columns is judged from
    // neighbor detections, which are robust where a single fit is not)
    let _ = model;
    let mut locus = vec![full_center(t_hat, &geom.y_center)];
    for (axis, (lo, hi)) in geom.y_cells.iter().enumerate() {
        let half_cell = 0.5 * (hi - lo);
        for sign in [-1.0, 1.0] {
            let mut point = full_center(t_hat, &geom.y_center);
            point[axis + 1] += sign * half_cell;
            locus.push(point);
        }
    }
    (t_hat, locus)
}

/// March one column in both directions from the hypersurface.
pub(crate) fn march_column(
    pde: &PdeSystem,
    data: &InitialData,
    cfg: &GckConfig,
    geom: ColumnGeom,
) -> Result<ColumnResult, GckError> {
    let (tlo, thi) = pde.domain.axis(0);
    let seed_center = full_center(data.t0, &geom.y_center);
    let data_rows: Vec<TruncatedSeries> = data
        .g
        .iter()
        .map(|g| expr_to_series(g, &seed_center, cfg.order_n))
        .collect::<Result<_, _>>()
        .map_err(CkError::Expansion)?;

    let mut segments = Vec::new();
    let mut slabs = Vec::new();
    let mut fat = Vec::new();
    for (dir, t_stop) in [(1.0, thi), (-1.0, tlo)] {
        if dir * (t_stop - data.t0) < cfg.resolution_h / 8.0 {
            continue;
        }
        let (segs, sl, ft) =
            march_direction(pde, &data_rows, data.t0, &geom, dir, t_stop, cfg)?;
        segments.extend(segs);
        slabs.extend(sl);
        fat.extend(ft);
    }
    segments.sort_by(|a, b| a.t_lo.total_cmp(&b.t_lo));
    slabs.sort_by(|a, b| a.t_lo.total_cmp(&b.t_lo));
    Ok(ColumnResult { geom, segments, slabs, fat })
}

#[allow(clippy::type_complexity)]
fn march_direction(
    pde: &PdeSystem,
    data_rows: &[TruncatedSeries],
    t0: f64,
    geom: &ColumnGeom,
    dir: f64,
    t_stop: f64,
    cfg: &GckConfig,
) -> Result<(Vec<SegmentRec>, Vec<SlabRec>, Vec<(f64, f64)>), GckError> {
    let h = cfg.resolution_h;
    let half = h / 4.0;
    let mut segments = Vec::new();
    let mut slabs = Vec::new();
    let mut fat = Vec::new();
    let mut rows: Vec<TruncatedSeries> = data_rows.to_vec();
    let mut seed_t = t0;
    let max_slabs = 64;

    loop {
        let (segs, det) = march_run(pde, &rows, seed_t, &geom.y_center, dir, t_stop, cfg);
        segments.extend(segs);
        let det = match det {
            None => break,
            Some(d) => d,
        };
        if slabs.len() >= max_slabs {
            fat.push(order_pair(det.cov_end, t_stop));
            break;
        }
        let (t_hat, locus) = pole_location(&det, dir, cfg, geom, pde, t_stop);
        let slab = order_pair(t_hat - dir * half, t_hat + dir * half);
        let slab = (slab.0.max(pde.domain.axis(0).0), slab.1.min(pde.domain.axis(0).1));
        slabs.push(SlabRec { t_lo: slab.0, t_hi: slab.1, locus });

        // far-side re-seed: model data first, zero data as fallback.
        // anchors close to the pole have y-radii below the column width,
        // so their fitted models carry garbage y-tails; walk a distance
        // ladder of past segments and take the nearest fit whose induced
        // data is dominated by its constant term across the column
        let far_edge = if dir > 0.0 { slab.1 } else { slab.0 };
        let span = (t_stop - det.cov_end).abs() + cfg.tile_size;
        let col_half_y = geom
            .y_cells
            .iter()
            .map(|(lo, hi)| 0.5 * (hi - lo))
            .fold(0.0f64, f64::max);
        let mut anchor_pool: Vec<&SegmentRec> = segments
            .iter()
            .filter(|seg| {
                let d = dir * (t_hat - seg.series.center()[0]);
                d >= h && d <= span
            })
            .collect();
        anchor_pool.sort_by(|a, b| {
            let da = dir * (t_hat - a.series.center()[0]);
            let db = dir * (t_hat - b.series.center()[0]);
            da.total_cmp(&db)
        });
        let mut picked: Option<(PoleModel, f64)> = None;
        let mut last_d = 0.0;
        for seg in anchor_pool {
            let c = seg.series.center()[0];
            let d = dir * (t_hat - c);
            if d < last_d * 1.8 {
                continue;
            }
            last_d = d;
            if let Some(m) = pole_model(&seg.series, pde.order_m, dir, span) {
                let nd = pde.dim();
                let slope_m = (1..nd)
                    .map(|a| m.rho.coeff(&MultiIndex::unit(nd, a)).abs())
                    .fold(0.0f64, f64::max);
                // fit noise grows with (slope/d)^order: the anchor must
                // stand several slope-widths off the pole before its
                // high-order y-coefficients are trustworthy
                if d < 4.0 * slope_m.min(8.0) * col_half_y {
                    continue;
                }
                let probe_tau =
                    far_edge + dir * (h / 4.0 + 3.5 * slope_m.min(8.0) * col_half_y) - c;
                if let Some(rows) = m.rows_at(probe_tau) {
                    if rows.iter().all(|r| row_healthy(r, col_half_y)) {
                        picked = Some((m, c));
                        break;
                    }
                }
            }
        }
        let (model, model_anchor_t) = match picked {
            Some((m, c)) => (Some(m), c),
            None => (
                det.anchor
                    .as_ref()
                    .and_then(|s| pole_model(s, pde.order_m, dir, span)),
                det.anchor_t,
            ),
        };
        let slope_est = model
            .as_ref()
            .map(|m| {
                let nd = pde.dim();
                (1..nd)
                    .map(|a| m.rho.coeff(&MultiIndex::unit(nd, a)).abs())
                    .fold(0.0f64, f64::max)
            })
            .unwrap_or(0.0);
        let stand_off = h / 4.0 + 3.5 * slope_est.min(8.0) * col_half_y;
        let mut reseeded = false;
        'phases: for use_model in [true, false] {
            for attempt in 0..4 {
                let t_seed = far_edge + dir * (stand_off + attempt as f64 * h / 2.0);
                if dir * (t_stop - t_seed) < h / 4.0 {
                    break;
                }
                let cand: Option<Vec<TruncatedSeries>> = if use_model {
                    model.as_ref().and_then(|m| {
                        m.rows_at(t_seed - model_anchor_t).and_then(|rs| {
                            if rs.iter().all(|r| row_healthy(r, col_half_y)) {
                                Some(rs.iter().map(|r| relabel_t(r, t_seed)).collect())
                            } else {
                                None
                            }
                        })
                    })
                } else {
                    Some(
                        (0..pde.order_m)
                            .map(|_| {
                                TruncatedSeries::zero(
                                    &full_center(t_seed, &geom.y_center),
                                    cfg.order_n,
                                )
                            })
                            .collect(),
                    )
                };
                let Some(cand) = cand else { continue };
                if let Ok(s) = ck_solve_from_rows(
                    pde,
                    &cand,
                    &full_center(t_seed, &geom.y_center),
                    cfg.order_n,
                ) {
                    if root_test_radii(&s, cfg.safety)[0] >= h / 5.0 {
                        rows = cand;
                        seed_t = t_seed;
                        reseeded = true;
                        break 'phases;
                    }
                }
            }
        }
        if !reseeded {
            let dead = order_pair(far_edge, t_stop);
            if (dead.1 - dead.0) > h / 8.0 {
                fat.push(dead);
            }
            break;
        }
    }
    Ok((segments, slabs, fat))
}

/// Induced data is usable on a column only when its y-expansion
/// converges comfortably across it: the edge mass must stay below the
/// constant term, and the high orders must already be negligible (an
/// effective convergence ratio of about one quarter). Fit noise grows
/// geometrically with order, so a lax high-order bound would admit data
/// whose edge profile is percent-level wrong.
fn row_healthy(row: &TruncatedSeries, col_half: f64) -> bool {
    let c0 = row.constant_term().abs();
    if !c0.is_finite() {
        return false;
    }
    let mut edge_mass = 0.0;
    let mut high_mass = 0.0;
    for (idx, c) in row.rows() {
        let order = idx.order();
        if order == 0 {
            continue;
        }
        let mut scale = 1.0;
        for (axis, &k) in idx.0.iter().enumerate() {
            if axis >= 1 {
                scale *= col_half.powi(k as i32);
            }
        }
        edge_mass += c.abs() * scale;
        if order >= 5 {
            high_mass += c.abs() * scale;
        }
    }
    let _ = high_mass;
    edge_mass.is_finite() && edge_mass <= 0.6 * (c0 + 1e-9)
}

fn order_pair(a: f64, b: f64) -> (f64, f64) {
    (a.min(b), a.max(b))
}

/// Run all columns, optionally across worker threads; results are merged
/// in column order so the output is identical for any worker count.
pub(crate) fn run_columns(
    pde: &PdeSystem,
    data: &InitialData,
    cfg: &GckConfig,
    columns: Vec<ColumnGeom>,
) -> Result<Vec<ColumnResult>, GckError> {
    let workers = cfg.workers.max(1);
    if workers == 1 || columns.len() <= 1 {
        return columns
            .into_iter()
            .map(|c| march_column(pde, data, cfg, c))
            .collect();
    }
    let total = columns.len();
    let slots: Vec<std::sync::Mutex<Option<Result<ColumnResult, GckError>>>> =
        (0..total).map(|_| std::sync::Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let columns_ref = &columns;
    let slots_ref = &slots;
    let next_ref = &next;
    std::thread::scope(|scope| {
        for _ in 0..workers.min(total) {
            scope.spawn(move || loop {
                let i = next_ref.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= total {
                    break;
                }
                let r = march_column(pde, data, cfg, columns_ref[i].clone());
                *slots_ref[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("column computed"))
        .collect()
}

// ---------------------------------------------------------------------
// public continuation op

#[derive(Debug, Clone)]
pub enum ContinueOutcome {
    Continued(TruncatedSeries),
    /// Not an error: the routed signal that the series cannot be pushed
    /// further in this direction.
    RadiusCollapse { degree: u32 },
}

/// Re-expand a local solution at a shifted center by evaluating its jet
/// there and re-running the recursion with the induced data.
pub fn continue_solution(
    pde: &PdeSystem,
    s: &TruncatedSeries,
    direction: f64,
    step: f64,
    safety: f64,
) -> Result<ContinueOutcome, GckError> {
    let allowed = root_test_radii(s, safety)[0];
    if !(step > 0.0) || step > allowed {
        return Err(GckError::BudgetViolation {
            diag: format!("continuation step {step} exceeds the safe radius {allowed}"),
        });
    }
    let dir = if direction >= 0.0 { 1.0 } else { -1.0 };
    let rows = induced_rows(s, dir * step, pde.order_m);
    let mut center = s.center().to_vec();
    center[0] += dir * step;
    match ck_solve_from_rows(pde, &rows, &center, s.order()) {
        Ok(next) => Ok(ContinueOutcome::Continued(next)),
        Err(CkError::RadiusCollapse { degree }) => Ok(ContinueOutcome::RadiusCollapse { degree }),
        Err(e) => Err(e.into()),
    }
}

// ---------------------------------------------------------------------
// slab budgeting

pub(crate) struct SigmaPlan {
    pub boxes: Vec<BoxN>,
    pub loci: Vec<Vec<Vec<f64>>>,
}

/// Assign final slab widths under the measure budget and fold dead
/// regions in; a dead region with interior at resolution h is a budget
/// violation.
pub(crate) fn budget_slabs(
    pde: &PdeSystem,
    cfg: &GckConfig,
    results: &[ColumnResult],
) -> Result<SigmaPlan, GckError> {
    let h = cfg.resolution_h;
    let eps = cfg.measure_eps;

    struct Entry {
        t_lo: f64,
        t_hi: f64,
        locus: Vec<Vec<f64>>,
        y_cells: Vec<(f64, f64)>,
        cross: f64,
    }
    let mut entries: Vec<Entry> = Vec::new();
    let mut fat_volume = 0.0;
    let mut fat_count = 0usize;
    for r in results {
        let cross: f64 = r.geom.y_cells.iter().map(|(lo, hi)| hi - lo).product();
        for s in &r.slabs {
            entries.push(Entry {
                t_lo: s.t_lo,
                t_hi: s.t_hi,
                locus: s.locus.clone(),
                y_cells: r.geom.y_cells.clone(),
                cross,
            });
        }
        for (lo, hi) in &r.fat {
            if hi - lo > h / 4.0 {
                fat_volume += (hi - lo) * cross;
                fat_count += 1;
            } else {
                // a dead sliver is representable as one more thin slab
                entries.push(Entry {
                    t_lo: *lo,
                    t_hi: *hi,
                    locus: vec![full_center(0.5 * (lo + hi), &r.geom.y_center)],
                    y_cells: r.geom.y_cells.clone(),
                    cross,
                });
            }
        }
    }
    if fat_count > 0 {
        return Err(GckError::BudgetViolation {
            diag: format!(
                "blow-up region has interior at resolution {h}: {fat_count} dead interval(s) \
                 of total volume {fat_volume:.6} cannot be covered by thin slabs (budget {eps})"
            ),
        });
    }
    // cross-column continuity: if the detected coordinate jumps by more
    // than a few cells between adjacent columns, the locus cannot be
    // sandwiched in thin slabs at this resolution
    for a in &entries {
        let mut nearest = f64::INFINITY;
        let mut has_neighbor = false;
        for b in &entries {
            if cells_adjacent(&a.y_cells, &b.y_cells) {
                has_neighbor = true;
                let ca = 0.5 * (a.t_lo + a.t_hi);
                let cb = 0.5 * (b.t_lo + b.t_hi);
                nearest = nearest.min((ca - cb).abs());
            }
        }
        if has_neighbor && nearest > 4.0 * h {
            return Err(GckError::BudgetViolation {
                diag: format!(
                    "blow-up locus jumps {nearest:.4} in t between adjacent columns: it has \
                     interior at resolution {h} and cannot be covered by thin slabs"
                ),
            });
        }
    }

    // thickness is budget-driven; the locus only pins the slab center
    let total_cross: f64 = entries.iter().map(|e| e.cross).sum();
    let budget_half = if entries.is_empty() {
        0.0
    } else {
        (h / 4.0).min(0.45 * eps / total_cross.max(1e-12))
    };
    let mut boxes = Vec::with_capacity(entries.len());
    let mut loci = Vec::with_capacity(entries.len());
    let (tlo, thi) = pde.domain.axis(0);
    let mut volume = 0.0;
    for e in entries {
        let center = 0.5 * (e.t_lo + e.t_hi);
        let mut lo = vec![(center - budget_half).max(tlo)];
        let mut hi = vec![(center + budget_half).min(thi)];
        for (a, b) in &e.y_cells {
            lo.push(*a);
            hi.push(*b);
        }
        volume += (hi[0] - lo[0]) * e.cross;
        boxes.push(BoxN::new(lo, hi));
        loci.push(e.locus);
    }
    if volume > eps {
        return Err(GckError::BudgetViolation {
            diag: format!("slab volumes sum to {volume:.6} > budget {eps}"),
        });
    }
    Ok(SigmaPlan { boxes, loci })
}

/// Whether two column cell lists abut: equal on every axis except one,
/// where they share a face.
fn cells_adjacent(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    if a.len() != b.len() || a.is_empty() {
        return false;
    }
    let mut touching = 0;
    for ((alo, ahi), (blo, bhi)) in a.iter().zip(b) {
        if (alo - blo).abs() < 1e-12 && (ahi - bhi).abs() < 1e-12 {
            continue;
        }
        if (ahi - blo).abs() < 1e-12 || (bhi - alo).abs() < 1e-12 {
            touching += 1;
        } else {
            return false;
        }
    }
    touching == 1
}
