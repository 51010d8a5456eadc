//! Cutoff gluing: local series become a stabilizing sequence (ψ_ν).
//!
//! Within every column the t-segments share a telescoping family of
//! smooth steps, and the y-columns share one per axis, so the tile
//! cutoffs sum to exactly 1 on the covered region away from transition
//! strips. ψ_ν adds tiles ring by ring (rings order tiles by distance
//! from Σ), which makes the sequence exactly constant on each compact of
//! the exhaustion once its ring is complete: later tiles have supports
//! disjoint from it.

use super::solve::{budget_slabs, build_columns, run_columns, ColumnResult, SegmentRec};
use super::{GckConfig, GckError};
use crate::expr::{self, SmoothExpr, Support};
use crate::geom::BoxN;
use crate::nets::{retag, GenFunction, IdealMember, IdealSpec, IndexPoset, Net};
use crate::series::ck::{InitialData, PdeSystem};
use crate::series::TruncatedSeries;
use crate::sets::{
    constant_representation, measure_bound, DenseCheckCfg, MeasureBound, SetClass, SingPrimitive,
    SingularitySet,
};

/// One glued tile: a local series, its cutoff, and the geometry needed
/// for stabilization bookkeeping.
#[derive(Debug, Clone)]
pub struct Tile {
    pub index: usize,
    pub ring: usize,
    pub column: usize,
    /// Segment × column cell.
    pub bbox: BoxN,
    /// Where the cutoff may be nonzero.
    pub coverage: BoxN,
    /// Plateau region contributed to the compact exhaustion.
    pub core: BoxN,
    pub series: TruncatedSeries,
    pub chi: SmoothExpr,
    pub piece: SmoothExpr,
}

/// Nested compacts K_0 ⊆ K_1 ⊆ ... exhausting X∖Σ up to the resolution
/// (transition strips of width below h stay out by construction).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CompactExhaustion {
    pub stages: Vec<Vec<BoxN>>,
}

impl CompactExhaustion {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stage(&self, nu: usize) -> &[BoxN] {
        &self.stages[nu.min(self.stages.len() - 1)]
    }

    pub fn contains(&self, nu: usize, x: &[f64]) -> bool {
        self.stage(nu).iter().any(|b| b.contains(x))
    }
}

/// The three tagged views of the constructed solution (Theorem 1's
/// homomorphism ladder).
#[derive(Debug, Clone)]
pub struct SolutionTags {
    pub a_nd: GenFunction,
    pub a_baire: GenFunction,
    pub b_baire: GenFunction,
}

#[derive(Debug, Clone)]
pub struct GlobalSolution {
    pub pde: PdeSystem,
    pub data: InitialData,
    pub config: GckConfig,
    pub sigma: SingularitySet,
    /// Detected blow-up locus samples, parallel to Σ's primitives.
    pub sigma_loci: Vec<Vec<Vec<f64>>>,
    pub tiles: Vec<Tile>,
    pub rings: usize,
    pub psi: Net,
    pub exhaustion: CompactExhaustion,
    /// For each stage ν: the index from which the terms agree on K_ν.
    pub stabilization: Vec<usize>,
    pub tags: SolutionTags,
    pub measure: MeasureBound,
}

impl GlobalSolution {
    pub fn psi_term(&self, nu: usize) -> SmoothExpr {
        self.psi.term(&crate::poset::PosetElem::nat(nu as u64))
    }

    /// ψ_ν restricted to stage μ: the sum of the pieces that can be
    /// nonzero there. Exact structural object used by the
    /// eventual-agreement checks.
    pub fn psi_restricted(&self, nu: usize, stage: usize) -> SmoothExpr {
        let boxes = self.exhaustion.stage(stage);
        let pieces: Vec<SmoothExpr> = self
            .tiles
            .iter()
            .filter(|t| t.ring <= nu)
            .filter(|t| tile_visible(t, boxes, self.pde.dim()))
            .map(|t| t.piece.clone())
            .collect();
        expr::sum(&pieces)
    }
}

fn tile_visible(tile: &Tile, stage: &[BoxN], dim: usize) -> bool {
    if matches!(tile.piece.support(dim), Support::Empty) {
        return false;
    }
    stage.iter().any(|b| !b.disjoint(&tile.coverage))
}

// ---------------------------------------------------------------------
// cutoff construction

#[derive(Debug, Clone, Copy)]
struct Edge {
    pos: f64,
    half: f64,
}

/// Cutoff factor along one axis between two optional step edges.
fn axis_cutoff(axis: usize, left: Option<Edge>, right: Option<Edge>) -> Option<SmoothExpr> {
    let rise = |e: &Edge| expr::step(axis, e.pos - e.half, e.pos + e.half).expect("edge widths");
    match (left, right) {
        (None, None) => None,
        (Some(l), None) => Some(rise(&l)),
        (None, Some(r)) => Some(expr::sub(&expr::constant(1.0), &rise(&r))),
        (Some(l), Some(r)) => Some(expr::sub(&rise(&l), &rise(&r))),
    }
}

fn series_to_expr(s: &TruncatedSeries) -> SmoothExpr {
    let center = s.center();
    let terms: Vec<SmoothExpr> = s
        .rows()
        .into_iter()
        .map(|(idx, c)| {
            let mut factors = vec![expr::constant(c)];
            for (axis, &k) in idx.0.iter().enumerate() {
                if k > 0 {
                    let shifted = if center[axis] == 0.0 {
                        expr::var(axis)
                    } else {
                        expr::sub(&expr::var(axis), &expr::constant(center[axis]))
                    };
                    factors.push(expr::pow(&shifted, k as i32));
                }
            }
            expr::product(&factors)
        })
        .collect();
    expr::sum(&terms)
}

// ---------------------------------------------------------------------
// assembly

/// The full constructor: seed, march, budget the slabs, validate Σ, glue
/// the tiles, and tag the result.
pub fn construct_global_solution(
    pde: &PdeSystem,
    data: &InitialData,
    cfg: &GckConfig,
) -> Result<GlobalSolution, GckError> {
    let columns = build_columns(pde, cfg);
    let results = run_columns(pde, data, cfg, columns)?;
    if results.iter().all(|r| r.segments.is_empty()) {
        return Err(GckError::NoSeed);
    }
    let plan = budget_slabs(pde, cfg, &results)?;

    let gate = DenseCheckCfg {
        enum_budget: (plan.boxes.len() as u64 + 8).max(512),
        // slab bands can cross cells diagonally; a few extra samples keep
        // the density gate decisive
        samples_per_cell: 12,
        ..DenseCheckCfg::at_resolution(cfg.resolution_h)
    };
    let mut sigma = SingularitySet::nowhere_dense(
        &pde.domain,
        plan.boxes.iter().cloned().map(SingPrimitive::Slab).collect(),
        &gate,
    )?;
    sigma.measure_budget = Some(cfg.measure_eps);
    sigma.label = "blow-up-slabs".into();
    let measure = measure_bound(&sigma, gate.enum_budget);
    if measure.bound > cfg.measure_eps {
        return Err(GckError::BudgetViolation {
            diag: format!(
                "slab volumes sum to {} > budget {}",
                measure.bound, cfg.measure_eps
            ),
        });
    }
    assemble(pde, data, cfg, results, sigma, plan.loci, measure)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    pde: &PdeSystem,
    data: &InitialData,
    cfg: &GckConfig,
    results: Vec<ColumnResult>,
    sigma: SingularitySet,
    sigma_loci: Vec<Vec<Vec<f64>>>,
    measure: MeasureBound,
) -> Result<GlobalSolution, GckError> {
    let n = pde.dim();
    let h = cfg.resolution_h;
    let (tlo, thi) = pde.domain.axis(0);

    let mut tiles: Vec<Tile> = Vec::new();
    for r in &results {
        // contiguous segments form covered intervals with shared edges
        let mut intervals: Vec<Vec<&SegmentRec>> = Vec::new();
        for seg in &r.segments {
            match intervals.last_mut() {
                Some(group) if (group.last().unwrap().t_hi - seg.t_lo).abs() < 1e-9 => {
                    group.push(seg)
                }
                _ => intervals.push(vec![seg]),
            }
        }
        for group in intervals {
            let start = group.first().unwrap().t_lo;
            let end = group.last().unwrap().t_hi;
            let at_domain_lo = (start - tlo).abs() < 1e-9;
            let at_domain_hi = (end - thi).abs() < 1e-9;
            for (k, seg) in group.iter().enumerate() {
                let seg_w = seg.t_hi - seg.t_lo;
                let left = if k == 0 {
                    if at_domain_lo {
                        None
                    } else {
                        // terminal transition tucked inside the h-margin
                        Some(Edge { pos: start + h / 4.0, half: h / 4.0 })
                    }
                } else {
                    let prev_w = group[k - 1].t_hi - group[k - 1].t_lo;
                    Some(Edge {
                        pos: seg.t_lo,
                        half: 0.125 * seg_w.min(prev_w).min(h),
                    })
                };
                let right = if k == group.len() - 1 {
                    if at_domain_hi {
                        None
                    } else {
                        Some(Edge { pos: end - h / 4.0, half: h / 4.0 })
                    }
                } else {
                    let next_w = group[k + 1].t_hi - group[k + 1].t_lo;
                    Some(Edge {
                        pos: seg.t_hi,
                        half: 0.125 * seg_w.min(next_w).min(h),
                    })
                };

                let mut chi_factors = Vec::new();
                if let Some(f) = axis_cutoff(0, left, right) {
                    chi_factors.push(f);
                }
                // y-axis cutoffs from the shared gridline edges
                let mut cov_lo = vec![match left {
                    Some(e) => e.pos - e.half,
                    None => tlo,
                }];
                let mut cov_hi = vec![match right {
                    Some(e) => e.pos + e.half,
                    None => thi,
                }];
                let mut core_lo = vec![match left {
                    Some(e) => e.pos + 1.5 * e.half,
                    None => tlo + h / 100.0,
                }];
                let mut core_hi = vec![match right {
                    Some(e) => e.pos - 1.5 * e.half,
                    None => thi - h / 100.0,
                }];
                for axis in 1..n {
                    let (clo, chi_) = r.geom.y_cells[axis - 1];
                    let w = 0.125 * (chi_ - clo).min(h);
                    let (alo, ahi) = pde.domain.axis(axis);
                    let le = if (clo - alo).abs() < 1e-12 {
                        None
                    } else {
                        Some(Edge { pos: clo, half: w })
                    };
                    let re = if (chi_ - ahi).abs() < 1e-12 {
                        None
                    } else {
                        Some(Edge { pos: chi_, half: w })
                    };
                    if let Some(f) = axis_cutoff(axis, le, re) {
                        chi_factors.push(f);
                    }
                    cov_lo.push(le.map_or(alo, |e| e.pos - e.half));
                    cov_hi.push(re.map_or(ahi, |e| e.pos + e.half));
                    core_lo.push(le.map_or(alo + h / 100.0, |e| e.pos + 1.5 * e.half));
                    core_hi.push(re.map_or(ahi - h / 100.0, |e| e.pos - 1.5 * e.half));
                }

                let chi = expr::product(&chi_factors);
                let poly = series_to_expr(&seg.series);
                let piece = expr::mul(&chi, &poly);
                let mut bbox_lo = vec![seg.t_lo];
                let mut bbox_hi = vec![seg.t_hi];
                for (clo, chi_) in &r.geom.y_cells {
                    bbox_lo.push(*clo);
                    bbox_hi.push(*chi_);
                }
                // collapse inverted cores (tiny segments) to their center
                let core = BoxN::new(
                    core_lo
                        .iter()
                        .zip(&core_hi)
                        .map(|(a, b)| if a <= b { *a } else { 0.5 * (a + b) })
                        .collect(),
                    core_lo
                        .iter()
                        .zip(&core_hi)
                        .map(|(a, b)| if a <= b { *b } else { 0.5 * (a + b) })
                        .collect(),
                );
                tiles.push(Tile {
                    index: 0,
                    ring: 0,
                    column: r.geom.index,
                    bbox: BoxN::new(bbox_lo, bbox_hi),
                    coverage: BoxN::new(cov_lo, cov_hi),
                    core,
                    series: seg.series.clone(),
                    chi,
                    piece,
                });
            }
        }
    }
    assemble_from_tiles(pde, data, cfg, tiles, sigma, sigma_loci, measure)
}

/// Rings, the ψ net, the exhaustion, the stabilization table, and the
/// tag ladder, all recomputed deterministically from the tiles.
pub(crate) fn assemble_from_tiles(
    pde: &PdeSystem,
    data: &InitialData,
    cfg: &GckConfig,
    mut tiles: Vec<Tile>,
    sigma: SingularitySet,
    sigma_loci: Vec<Vec<Vec<f64>>>,
    measure: MeasureBound,
) -> Result<GlobalSolution, GckError> {
    let n = pde.dim();
    let h = cfg.resolution_h;
    let slab_boxes: Vec<BoxN> = sigma
        .primitives(1 << 20)
        .iter()
        .map(|p| p.as_box())
        .collect();

    // rings: distance-to-Σ buckets, ring 0 farthest
    let d0 = cfg.tile_size.max(4.0 * h);
    for t in &mut tiles {
        t.ring = if slab_boxes.is_empty() {
            0
        } else {
            let d = slab_boxes
                .iter()
                .map(|s| s.linf_gap(&t.bbox))
                .fold(f64::INFINITY, f64::min);
            if d >= d0 {
                0
            } else {
                (((d0 / d.max(1e-9)).log2().ceil()) as usize).clamp(1, 12)
            }
        };
    }
    tiles.sort_by(|a, b| {
        a.ring
            .cmp(&b.ring)
            .then(a.column.cmp(&b.column))
            .then(a.bbox.lo[0].total_cmp(&b.bbox.lo[0]))
    });
    for (i, t) in tiles.iter_mut().enumerate() {
        t.index = i;
    }
    let rings = tiles.iter().map(|t| t.ring).max().unwrap_or(0) + 1;

    // cumulative ring sums back the ψ net
    let mut ring_sums: Vec<SmoothExpr> = Vec::with_capacity(rings);
    for nu in 0..rings {
        let pieces: Vec<SmoothExpr> = tiles
            .iter()
            .filter(|t| t.ring <= nu)
            .map(|t| t.piece.clone())
            .collect();
        ring_sums.push(expr::sum(&pieces));
    }
    let poset = IndexPoset::naturals();
    let sums = ring_sums.clone();
    let psi = Net::new(
        pde.domain.clone(),
        poset.clone(),
        "psi",
        move |lambda| sums[(lambda.level as usize).min(sums.len() - 1)].clone(),
    );

    // exhaustion stages and the stabilization table
    let stages: Vec<Vec<BoxN>> = (0..rings)
        .map(|nu| {
            tiles
                .iter()
                .filter(|t| t.ring <= nu)
                .map(|t| t.core.clone())
                .collect()
        })
        .collect();
    let exhaustion = CompactExhaustion { stages };
    let stabilization: Vec<usize> = (0..rings)
        .map(|mu| {
            tiles
                .iter()
                .filter(|t| tile_visible(t, exhaustion.stage(mu), n))
                .map(|t| t.ring)
                .max()
                .unwrap_or(0)
        })
        .collect();

    // the tagged ladder A_nd -> A_BaireI -> B_BaireI
    let budget = 1 << 12;
    let a_nd_tag = IdealSpec::i_family(
        &poset,
        vec![IdealMember {
            sigma: sigma.clone(),
            repr: Some(constant_representation(&sigma, budget)),
        }],
        "A_nd",
        budget,
    )?;
    let sigma_b = sigma.retag_class(SetClass::BaireFirst)?;
    let a_baire_tag = IdealSpec::i_family(
        &poset,
        vec![IdealMember {
            sigma: sigma_b.clone(),
            repr: Some(constant_representation(&sigma_b, budget)),
        }],
        "A_BaireI",
        budget,
    )?;
    let b_baire_tag = IdealSpec::j_family(&poset, vec![sigma_b], "B_BaireI", budget)?;
    let a_nd = GenFunction::new(psi.clone(), a_nd_tag)?;
    let a_baire = retag(&a_nd, &a_baire_tag, budget)?;
    let b_baire = retag(&a_baire, &b_baire_tag, budget)?;

    Ok(GlobalSolution {
        pde: pde.clone(),
        data: data.clone(),
        config: cfg.clone(),
        sigma,
        sigma_loci,
        tiles,
        rings,
        psi,
        exhaustion,
        stabilization,
        tags: SolutionTags { a_nd, a_baire, b_baire },
        measure,
    })
}
