//! On-disk representation of a constructed solution.
//!
//! Everything a later verification run needs is stored: the original
//! spec text, the config, Σ in its text form, the per-tile series
//! tables and cutoff/piece expressions (as parseable strings), and the
//! detected loci. Reconstruction re-runs the deterministic assembly, so
//! a reloaded solution is structurally identical to the solved one.

use super::glue::{assemble_from_tiles, GlobalSolution, Tile};
use super::{parse_pde, GckConfig, GckError};
use crate::expr::parse_expr;
use crate::geom::{BoxN, MultiIndex};
use crate::series::TruncatedSeries;
use crate::sets::{measure_bound, MeasureBound, SingularitySet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TileRepr {
    pub ring: usize,
    pub column: usize,
    pub bbox: BoxN,
    pub coverage: BoxN,
    pub core: BoxN,
    pub series_center: Vec<f64>,
    pub series_order: u32,
    pub series_rows: Vec<(Vec<u32>, f64)>,
    pub chi: String,
    pub piece: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub spec_text: String,
    pub config: GckConfig,
    pub sigma_text: String,
    pub sigma_loci: Vec<Vec<Vec<f64>>>,
    pub measure: MeasureBound,
    pub rings: usize,
    pub stabilization: Vec<usize>,
    pub tiles: Vec<TileRepr>,
}

impl SolutionFile {
    pub fn from_solution(sol: &GlobalSolution, spec_text: &str) -> Self {
        SolutionFile {
            spec_text: spec_text.to_string(),
            config: sol.config.clone(),
            sigma_text: sol.sigma.to_text(1 << 20),
            sigma_loci: sol.sigma_loci.clone(),
            measure: sol.measure,
            rings: sol.rings,
            stabilization: sol.stabilization.clone(),
            tiles: sol
                .tiles
                .iter()
                .map(|t| TileRepr {
                    ring: t.ring,
                    column: t.column,
                    bbox: t.bbox.clone(),
                    coverage: t.coverage.clone(),
                    core: t.core.clone(),
                    series_center: t.series.center().to_vec(),
                    series_order: t.series.order(),
                    series_rows: t
                        .series
                        .rows()
                        .into_iter()
                        .map(|(idx, c)| (idx.0, c))
                        .collect(),
                    chi: t.chi.to_string(),
                    piece: t.piece.to_string(),
                })
                .collect(),
        }
    }

    pub fn to_solution(&self) -> Result<GlobalSolution, GckError> {
        let spec = parse_pde(&self.spec_text)?;
        let mut sigma = SingularitySet::from_text(&self.sigma_text)?;
        sigma.measure_budget = Some(self.config.measure_eps);
        sigma.label = "blow-up-slabs".into();
        let parse = |what: &str, text: &str| {
            parse_expr(text).map_err(|e| GckError::MissingArtifact(format!("{what}: {e}")))
        };
        let tiles: Vec<Tile> = self
            .tiles
            .iter()
            .map(|t| {
                Ok(Tile {
                    index: 0,
                    ring: t.ring,
                    column: t.column,
                    bbox: t.bbox.clone(),
                    coverage: t.coverage.clone(),
                    core: t.core.clone(),
                    series: TruncatedSeries::from_rows(
                        &t.series_center,
                        t.series_order,
                        &t.series_rows
                            .iter()
                            .map(|(idx, c)| (MultiIndex(idx.clone()), *c))
                            .collect::<Vec<_>>(),
                    ),
                    chi: parse("tile cutoff", &t.chi)?,
                    piece: parse("tile piece", &t.piece)?,
                })
            })
            .collect::<Result<_, GckError>>()?;
        let measure = measure_bound(&sigma, 1 << 20);
        assemble_from_tiles(
            &spec.pde,
            &spec.data,
            &self.config,
            tiles,
            sigma,
            self.sigma_loci.clone(),
            measure,
        )
    }
}
