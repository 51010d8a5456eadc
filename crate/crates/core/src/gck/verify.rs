//! Residual verification of glued solutions and measure tightening.

use super::glue::GlobalSolution;
use super::{GckConfig, GckError};
use crate::expr::SmoothExpr;
use crate::geom::{BoxN, MultiIndex};
use crate::sets::{measure_bound, DenseCheckCfg, SingPrimitive, SingularitySet};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct StageResidual {
    pub stage: usize,
    pub points: usize,
    pub stabilization_index: usize,
    /// sup-residual per evaluated ν (parallel to `nu_schedule`).
    pub sup_by_nu: Vec<f64>,
    /// The residual values on this stage are bit-identical for every
    /// ν at or past the stabilization index.
    pub constant_past_stabilization: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub nu_schedule: Vec<usize>,
    pub stages: Vec<StageResidual>,
    pub skipped_near_sigma: usize,
    pub unassigned: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Evaluate D_t^m ψ_ν − G(..., jets of ψ_ν, ...) on a grid, per
/// exhaustion stage, for a schedule of ν. Points within h of Σ are
/// skipped with a notice; points in no stage (transition strips) are
/// counted as unassigned.
pub fn verify_residual(
    sol: &GlobalSolution,
    grid_per_axis: usize,
    tolerance: f64,
) -> Result<ResidualReport, GckError> {
    let pde = &sol.pde;
    let n = pde.dim();
    let h = sol.config.resolution_h;
    let sigma_prims = sol.sigma.primitives(1 << 20);

    // derivative multi-indices needed: D_t^m and every jet
    let mut dtm = vec![0u32; n];
    dtm[0] = pde.order_m;
    let mut needed: Vec<MultiIndex> = vec![MultiIndex(dtm)];
    for k in 0..pde.jets.len() {
        needed.push(pde.jet_multi_index(k));
    }

    let rings = sol.rings;
    let nu_schedule: Vec<usize> = {
        let mut v: Vec<usize> = (0..rings).collect();
        v.push(rings);
        v.push(rings + 1);
        v
    };

    // grid points surviving the skip rules, tagged with their stage
    let mut points: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut skipped = 0usize;
    let mut unassigned = 0usize;
    let counts = vec![grid_per_axis; n];
    let mut idx = vec![0usize; n];
    loop {
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let (lo, hi) = pde.domain.axis(i);
                lo + (hi - lo) * (idx[i] as f64 + 0.5) / counts[i] as f64
            })
            .collect();
        let near_sigma = sigma_prims.iter().any(|p| p.linf_dist(&x) <= h);
        if near_sigma {
            skipped += 1;
        } else {
            match (0..rings).find(|&mu| sol.exhaustion.contains(mu, &x)) {
                Some(mu) => points.push((mu, x)),
                None => unassigned += 1,
            }
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
            if axis == 0 {
                break;
            }
        }
        if idx.iter().all(|&v| v == 0) {
            break;
        }
    }

    let bare: Vec<Vec<f64>> = points.iter().map(|(_, x)| x.clone()).collect();
    let jets = stream_jet_values(sol, &bare, &needed, &nu_schedule)?;

    // residuals per (scheduled nu, point); evaluation failures below the
    // stabilization index are expected (partial sums can sit on singular
    // loci of G) and recorded as NaN
    let mut residual_rows: Vec<Vec<f64>> = Vec::with_capacity(nu_schedule.len());
    for (si, nu) in nu_schedule.iter().enumerate() {
        let mut row = Vec::with_capacity(points.len());
        for (pi, (stage, x)) in points.iter().enumerate() {
            let values = &jets[si][pi];
            let lhs = values[0];
            let mut ext = x.clone();
            ext.extend_from_slice(&values[1..]);
            match pde.rhs.evaluate(&ext) {
                Ok(rhs) => row.push(lhs - rhs),
                Err(_) if *nu < sol.stabilization[*stage] => row.push(f64::NAN),
                Err(e) => {
                    return Err(GckError::BudgetViolation {
                        diag: format!("rhs evaluation failed: {e}"),
                    })
                }
            }
        }
        residual_rows.push(row);
    }

    let mut stages = Vec::with_capacity(rings);
    let mut pass = true;
    for mu in 0..rings {
        let stab = sol.stabilization[mu];
        let members: Vec<usize> = points
            .iter()
            .enumerate()
            .filter(|(_, (stage, _))| *stage == mu)
            .map(|(pi, _)| pi)
            .collect();
        let sup_by_nu: Vec<f64> = residual_rows
            .iter()
            .map(|row| {
                members
                    .iter()
                    .map(|&pi| row[pi].abs())
                    .filter(|v| v.is_finite())
                    .fold(0.0, f64::max)
            })
            .collect();
        let past: Vec<usize> = nu_schedule
            .iter()
            .enumerate()
            .filter(|(_, &nu)| nu >= stab)
            .map(|(slot, _)| slot)
            .collect();
        let constant = past.windows(2).all(|w| {
            members
                .iter()
                .all(|&pi| residual_rows[w[0]][pi].to_bits() == residual_rows[w[1]][pi].to_bits())
        });
        let final_sup = *sup_by_nu.last().unwrap_or(&0.0);
        if !members.is_empty() && (!constant || final_sup > tolerance) {
            pass = false;
        }
        stages.push(StageResidual {
            stage: mu,
            points: members.len(),
            stabilization_index: stab,
            sup_by_nu,
            constant_past_stabilization: constant,
        });
    }
    Ok(ResidualReport {
        nu_schedule,
        stages,
        skipped_near_sigma: skipped,
        unassigned,
        tolerance,
        pass,
    })
}

/// Stream the needed derivatives of ψ_ν over the tiles: each tile is
/// differentiated once, evaluated on the points its coverage contains,
/// and dropped. Returns values[nu_slot][point][derivative_slot].
fn stream_jet_values(
    sol: &GlobalSolution,
    points: &[Vec<f64>],
    needed: &[MultiIndex],
    nus: &[usize],
) -> Result<Vec<Vec<Vec<f64>>>, GckError> {
    let mut acc = vec![vec![vec![0.0f64; needed.len()]; points.len()]; nus.len()];
    for tile in &sol.tiles {
        let derived: Vec<SmoothExpr> =
            needed.iter().map(|p| tile.piece.differentiate(p)).collect();
        for (pi, x) in points.iter().enumerate() {
            if tile.coverage.linf_dist(x) > 0.0 {
                continue;
            }
            for (slot, d) in derived.iter().enumerate() {
                let v = d.evaluate(x).map_err(|e| GckError::BudgetViolation {
                    diag: format!("evaluation failed: {e}"),
                })?;
                for (si, nu) in nus.iter().enumerate() {
                    if tile.ring <= *nu {
                        acc[si][pi][slot] += v;
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Tile-local evaluation of ψ_ν (sums only the pieces whose coverage
/// contains the point).
pub fn eval_psi(sol: &GlobalSolution, nu: usize, x: &[f64]) -> Result<f64, GckError> {
    let mut acc = 0.0;
    for t in &sol.tiles {
        if t.ring > nu || t.coverage.linf_dist(x) > 0.0 {
            continue;
        }
        acc += t.piece.evaluate(x).map_err(|e| GckError::BudgetViolation {
            diag: format!("evaluation failed: {e}"),
        })?;
    }
    Ok(acc)
}

/// One grid row of the sample table emitted next to solve reports.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRow {
    pub x: Vec<f64>,
    pub psi: f64,
    pub oracle: Option<f64>,
    pub residual: f64,
}

/// Values, oracle comparisons, and residuals of the final ψ on a grid,
/// skipping points within h of Σ or outside the glued coverage.
pub fn sample_table(
    sol: &GlobalSolution,
    grid_per_axis: usize,
    oracle: Option<&SmoothExpr>,
) -> Result<Vec<SampleRow>, GckError> {
    let pde = &sol.pde;
    let n = pde.dim();
    let h = sol.config.resolution_h;
    let sigma_prims = sol.sigma.primitives(1 << 20);
    let nu = sol.rings + 1;
    // slot 0 is ψ itself, slot 1 its m-th t-derivative, then the jets
    let mut needed: Vec<MultiIndex> = vec![MultiIndex(vec![0; n])];
    let mut dtm = vec![0u32; n];
    dtm[0] = pde.order_m;
    needed.push(MultiIndex(dtm));
    for k in 0..pde.jets.len() {
        needed.push(pde.jet_multi_index(k));
    }

    let mut points = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let (lo, hi) = pde.domain.axis(i);
                lo + (hi - lo) * (idx[i] as f64 + 0.5) / grid_per_axis as f64
            })
            .collect();
        let near_sigma = sigma_prims.iter().any(|p| p.linf_dist(&x) <= h);
        let covered = (0..sol.rings).any(|mu| sol.exhaustion.contains(mu, &x));
        if !near_sigma && covered {
            points.push(x);
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < grid_per_axis {
                break;
            }
            idx[axis] = 0;
            if axis == 0 {
                break;
            }
        }
        if idx.iter().all(|&v| v == 0) {
            break;
        }
    }

    let jets = stream_jet_values(sol, &points, &needed, &[nu])?;
    let mut rows = Vec::with_capacity(points.len());
    for (pi, x) in points.into_iter().enumerate() {
        let values = &jets[0][pi];
        let psi = values[0];
        let lhs = values[1];
        let mut ext = x.clone();
        ext.extend_from_slice(&values[2..]);
        let rhs = pde.rhs.evaluate(&ext).map_err(|e| GckError::BudgetViolation {
            diag: format!("rhs evaluation failed: {e}"),
        })?;
        let oracle_v = match oracle {
            Some(e) => Some(e.evaluate(&x).map_err(|err| GckError::BudgetViolation {
                diag: format!("oracle evaluation failed: {err}"),
            })?),
            None => None,
        };
        rows.push(SampleRow { x, psi, oracle: oracle_v, residual: lhs - rhs });
    }
    Ok(rows)
}

/// Initial-data reproduction: sup over hypersurface grid points of
/// |D_t^p ψ_ν(t0, y) − g_p(y)| for p below the equation order, with the
/// final ν.
pub fn verify_initial_data(sol: &GlobalSolution, grid_per_axis: usize) -> Result<f64, GckError> {
    let pde = &sol.pde;
    let n = pde.dim();
    let t0 = sol.data.t0;
    let sigma_prims = sol.sigma.primitives(1 << 20);
    let h = sol.config.resolution_h;
    let nu = sol.rings + 1;

    // hypersurface grid, restricted to covered points away from Σ
    let mut points = Vec::new();
    let mut odo = vec![0usize; n.saturating_sub(1)];
    loop {
        let mut x = vec![t0];
        for (i, &k) in odo.iter().enumerate() {
            let (lo, hi) = pde.domain.axis(i + 1);
            x.push(lo + (hi - lo) * (k as f64 + 0.5) / grid_per_axis as f64);
        }
        let covered = sol
            .exhaustion
            .stage(sol.rings.saturating_sub(1))
            .iter()
            .any(|b| b.contains(&x));
        let near_sigma = sigma_prims.iter().any(|q| q.linf_dist(&x) <= h);
        if covered && !near_sigma {
            points.push(x);
        }
        if odo.is_empty() {
            break;
        }
        let mut axis = odo.len();
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            odo[axis] += 1;
            if odo[axis] < grid_per_axis {
                break;
            }
            odo[axis] = 0;
            if axis == 0 {
                break;
            }
        }
        if odo.iter().all(|&v| v == 0) {
            break;
        }
    }

    let needed: Vec<MultiIndex> = (0..pde.order_m)
        .map(|p| {
            let mut idxs = vec![0u32; n];
            idxs[0] = p;
            MultiIndex(idxs)
        })
        .collect();
    let jets = stream_jet_values(sol, &points, &needed, &[nu])?;
    let mut worst: f64 = 0.0;
    for (pi, x) in points.iter().enumerate() {
        for (slot, _) in needed.iter().enumerate() {
            let got = jets[0][pi][slot];
            let want = sol.data.g[slot].evaluate(x).map_err(|e| GckError::BudgetViolation {
                diag: format!("data evaluation failed: {e}"),
            })?;
            worst = worst.max((got - want).abs());
        }
    }
    Ok(worst)
}

/// Rescale slab thicknesses to the geometric widths ε/2^{k+1} while
/// preserving coverage of the detected blow-up loci at resolution h.
pub fn shrink_measure(
    sigma: &SingularitySet,
    loci: &[Vec<Vec<f64>>],
    eps: f64,
    cfg: &GckConfig,
) -> Result<SingularitySet, GckError> {
    let h = cfg.resolution_h;
    let prims = sigma.primitives(1 << 20);
    let mut out = Vec::with_capacity(prims.len());
    for (k, prim) in prims.iter().enumerate() {
        let b = match prim {
            SingPrimitive::Slab(b) => b.clone(),
            SingPrimitive::Point(_) => {
                return Err(GckError::CoverageLoss {
                    h,
                    diag: format!("primitive {k} is a point, not an adjustable slab"),
                })
            }
        };
        let center_t = 0.5 * (b.lo[0] + b.hi[0]);
        let width = eps / 2f64.powi(k as i32 + 1);
        let mut lo = b.lo.clone();
        let mut hi = b.hi.clone();
        lo[0] = center_t - width / 2.0;
        hi[0] = center_t + width / 2.0;
        let shrunk = BoxN::new(lo, hi);
        if let Some(points) = loci.get(k) {
            for pt in points {
                if shrunk.linf_dist(pt) > h {
                    return Err(GckError::CoverageLoss {
                        h,
                        diag: format!(
                            "slab {k} at width {width} no longer covers the locus point {pt:?}"
                        ),
                    });
                }
            }
        }
        out.push(SingPrimitive::Slab(shrunk));
    }
    let gate = DenseCheckCfg {
        enum_budget: (out.len() as u64 + 8).max(512),
        samples_per_cell: 12,
        ..DenseCheckCfg::at_resolution(h)
    };
    let mut shrunk = SingularitySet::nowhere_dense(&sigma.ambient, out, &gate)?;
    shrunk.measure_budget = Some(eps);
    shrunk.label = format!("{}-shrunk", sigma.label);
    let mb = measure_bound(&shrunk, gate.enum_budget);
    if mb.bound > eps {
        return Err(GckError::BudgetViolation {
            diag: format!("shrunk slabs still sum to {} > {eps}", mb.bound),
        });
    }
    Ok(shrunk)
}
