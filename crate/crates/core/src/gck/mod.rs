//! The global Cauchy-Kovalevskaya constructor.
//!
//! Pipeline: seed local series on the hypersurface at column centers,
//! march in ±t by re-expansion, drop a thin slab into Σ wherever
//! continuation collapses (re-seeding beyond it from a fitted simple-pole
//! model when possible), glue the local polynomials with a smooth
//! partition of unity into a stabilizing sequence (ψ_ν), and hand back
//! the compact exhaustion, the stabilization table, and the tagged
//! generalized functions.

mod glue;
mod io;
mod solve;
mod verify;

pub use glue::{construct_global_solution, CompactExhaustion, GlobalSolution, SolutionTags, Tile};
pub use io::SolutionFile;
pub use solve::{continue_solution, ContinueOutcome};
pub use verify::{
    eval_psi, sample_table, shrink_measure, verify_initial_data, verify_residual, ResidualReport,
    SampleRow, StageResidual,
};

pub use crate::series::ck::{InitialData, PdeSystem};

use crate::expr::{parse_pde_rhs, SmoothExpr};
use crate::geom::DomainBox;
use crate::nets::CheckConfig;
use crate::series::ck::{CkError, PdeError};

/// Tuning knobs of the constructor.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GckConfig {
    /// Truncation order N of the local series.
    pub order_n: u32,
    /// Largest t-step and target y-column width.
    pub tile_size: f64,
    /// Safety factor σ applied to root-test radii.
    pub safety: f64,
    /// Grid resolution h (density checks, slab geometry, skip margins).
    pub resolution_h: f64,
    /// Measure budget ε for the singularity set.
    pub measure_eps: f64,
    pub workers: usize,
}

impl Default for GckConfig {
    fn default() -> Self {
        GckConfig {
            order_n: 10,
            tile_size: 0.5,
            safety: 0.8,
            resolution_h: 0.05,
            measure_eps: 0.05,
            workers: 1,
        }
    }
}

impl GckConfig {
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let bad = |v: &str| format!("bad value `{v}` for config key");
        match key {
            "order_n" => self.order_n = value.parse().map_err(|_| bad(value))?,
            "tile_size" => self.tile_size = value.parse().map_err(|_| bad(value))?,
            "safety" => self.safety = value.parse().map_err(|_| bad(value))?,
            "resolution_h" => self.resolution_h = value.parse().map_err(|_| bad(value))?,
            "measure_eps" => self.measure_eps = value.parse().map_err(|_| bad(value))?,
            "workers" => self.workers = value.parse().map_err(|_| bad(value))?,
            _ => return Err(format!("unknown config key `{key}`")),
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(format!("safety factor must be in (0,1), got {}", self.safety));
        }
        Ok(())
    }

    pub fn check_config(&self) -> CheckConfig {
        CheckConfig::default()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GckError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no tile admits a convergent seed")]
    NoSeed,
    #[error("measure budget violation: {diag}")]
    BudgetViolation { diag: String },
    #[error("coverage loss at resolution {h}: {diag}")]
    CoverageLoss { h: f64, diag: String },
    #[error("missing solve artifact: {0}")]
    MissingArtifact(String),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Ck(#[from] CkError),
    #[error(transparent)]
    Sets(#[from] crate::sets::SetsError),
    #[error(transparent)]
    Nets(#[from] crate::nets::NetsError),
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
}

/// A parsed PDE spec file: the system, its Cauchy data, an optional
/// closed-form oracle for error reporting, and config overrides.
#[derive(Debug, Clone)]
pub struct ParsedSpec {
    pub pde: PdeSystem,
    pub data: InitialData,
    pub oracle: Option<SmoothExpr>,
    pub config: GckConfig,
}

/// Parse the line-oriented PDE spec format: `dim n`, `domain l1 u1 ...`,
/// `order m`, `t0 v`, `G <expr with J[p,(q)] jets>`, `g0 <expr>` ...,
/// optional `oracle <expr>` and `config key value` lines. `#` comments.
pub fn parse_pde(text: &str) -> Result<ParsedSpec, GckError> {
    let mut dim: Option<usize> = None;
    let mut domain: Option<DomainBox> = None;
    let mut order_m: Option<u32> = None;
    let mut t0: Option<f64> = None;
    let mut rhs: Option<(SmoothExpr, Vec<(u32, crate::geom::MultiIndex)>, usize)> = None;
    let mut g: Vec<(usize, SmoothExpr)> = Vec::new();
    let mut oracle = None;
    let mut config = GckConfig::default();

    let perr = |line: usize, msg: String| GckError::Parse { line, msg };

    for (lno, raw) in text.lines().enumerate() {
        let line = lno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
        let rest = rest.trim();
        match key {
            "dim" => {
                dim = Some(
                    rest.parse::<usize>()
                        .ok()
                        .filter(|n| *n >= 1)
                        .ok_or_else(|| perr(line, format!("bad dimension `{rest}`")))?,
                )
            }
            "domain" => {
                let vals: Vec<f64> = rest
                    .split_whitespace()
                    .map(|w| {
                        w.parse::<f64>()
                            .map_err(|_| perr(line, format!("bad domain bound `{w}`")))
                    })
                    .collect::<Result<_, _>>()?;
                if vals.is_empty() || vals.len() % 2 != 0 {
                    return Err(perr(line, "domain needs pairs of bounds".into()));
                }
                let intervals: Vec<(f64, f64)> = vals.chunks(2).map(|c| (c[0], c[1])).collect();
                domain = Some(
                    DomainBox::new(&intervals).map_err(|e| perr(line, e.to_string()))?,
                );
            }
            "order" => {
                order_m = Some(
                    rest.parse::<u32>()
                        .map_err(|_| perr(line, format!("bad equation order `{rest}`")))?,
                )
            }
            "t0" => {
                t0 = Some(
                    rest.parse::<f64>()
                        .map_err(|_| perr(line, format!("bad hypersurface coordinate `{rest}`")))?,
                )
            }
            "G" => {
                let n = dim.ok_or_else(|| perr(line, "`dim` must come before `G`".into()))?;
                let (e, jets) =
                    parse_pde_rhs(rest, n).map_err(|e| perr(line, e.to_string()))?;
                rhs = Some((e, jets, n));
            }
            "oracle" => {
                oracle = Some(
                    crate::expr::parse_expr(rest).map_err(|e| perr(line, e.to_string()))?,
                );
            }
            "config" => {
                let (k, v) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| perr(line, "config needs `key value`".into()))?;
                config.apply(k, v.trim()).map_err(|msg| perr(line, msg))?;
            }
            _ if key.starts_with('g') => {
                let idx: usize = key[1..]
                    .parse()
                    .map_err(|_| perr(line, format!("unknown line `{key}`")))?;
                let e = crate::expr::parse_expr(rest).map_err(|e| perr(line, e.to_string()))?;
                g.push((idx, e));
            }
            _ => return Err(perr(line, format!("unknown line `{key}`"))),
        }
    }

    let dim = dim.ok_or_else(|| perr(0, "missing `dim` line".into()))?;
    let domain = domain.ok_or_else(|| perr(0, "missing `domain` line".into()))?;
    if domain.dim() != dim {
        return Err(perr(0, format!("domain has {} axes, dim says {dim}", domain.dim())));
    }
    let order_m = order_m.ok_or_else(|| perr(0, "missing `order` line".into()))?;
    let t0 = t0.ok_or_else(|| perr(0, "missing `t0` line".into()))?;
    let (rhs, jets, n) = rhs.ok_or_else(|| perr(0, "missing `G` line".into()))?;
    if n != dim {
        return Err(perr(0, "`G` was parsed against a different dimension".into()));
    }
    let pde = PdeSystem::new(order_m, rhs, jets, domain, t0)?;

    g.sort_by_key(|(i, _)| *i);
    let expected: Vec<usize> = (0..order_m as usize).collect();
    let got: Vec<usize> = g.iter().map(|(i, _)| *i).collect();
    if got != expected {
        return Err(perr(
            0,
            format!("need data lines g0..g{}, got indices {got:?}", order_m - 1),
        ));
    }
    let data = InitialData { g: g.into_iter().map(|(_, e)| e).collect(), t0 };
    Ok(ParsedSpec { pde, data, oracle, config })
}
