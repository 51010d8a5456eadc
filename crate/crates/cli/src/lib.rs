//! Batch front end: parse specs, run constructions and checkers, emit
//! reports and plot-ready data.
//!
//! Everything here is deterministic: reports carry no wall-clock data
//! under `--frozen-clock`, artifact files are written atomically
//! (temp + rename), and worker counts never change any emitted byte.

use foamck_core::expr::{self, SmoothExpr};
use foamck_core::gck::{
    construct_global_solution, parse_pde, sample_table, verify_initial_data, verify_residual,
    GckConfig, GckError, SolutionFile,
};
use foamck_core::nets::{
    check_i_membership, check_j_membership, diagonal_embed, example_one_net, sample_outside,
    CheckConfig, IndexPoset, MembershipVerdict, Net, Outcome, RadiusSchedule,
};
use foamck_core::sets::{constant_representation, measure_bound, SingularitySet};
use foamck_core::DomainBox;
use serde::Serialize;
use std::path::{Path, PathBuf};

pub mod exit_code {
    pub const OK: i32 = 0;
    pub const REFUTED: i32 = 1;
    pub const FAILED: i32 = 1;
    pub const BUDGET_VIOLATION: i32 = 2;
    pub const PARSE_ERROR: i32 = 3;
    pub const INCONCLUSIVE: i32 = 4;
    pub const MISSING_ARTIFACT: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Gck(#[from] GckError),
    #[error("{0}")]
    Nets(#[from] foamck_core::nets::NetsError),
    #[error("{0}")]
    Sets(#[from] foamck_core::sets::SetsError),
    #[error("line {line}: {msg}")]
    Spec { line: usize, msg: String },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Gck(GckError::BudgetViolation { .. }) => exit_code::BUDGET_VIOLATION,
            CliError::Gck(GckError::Parse { .. }) | CliError::Spec { .. } => {
                exit_code::PARSE_ERROR
            }
            CliError::Sets(foamck_core::sets::SetsError::Parse { .. }) => exit_code::PARSE_ERROR,
            CliError::Gck(GckError::MissingArtifact(_)) => exit_code::MISSING_ARTIFACT,
            CliError::Io(e) if e.kind() == std::io::ErrorKind::NotFound => {
                exit_code::MISSING_ARTIFACT
            }
            _ => exit_code::FAILED,
        }
    }
}

/// All tuning knobs of a batch run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub gck: GckConfig,
    pub check: CheckConfig,
    /// Sample count for membership checks.
    pub samples: usize,
    /// Required sup-norm margin of samples from Σ.
    pub sample_margin: f64,
    /// Residual/sample grid points per axis.
    pub grid: usize,
    pub residual_tol: f64,
    pub seed: u64,
    /// Example-one bump radius schedule.
    pub schedule: RadiusSchedule,
    #[serde(skip)]
    pub frozen_clock: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gck: GckConfig::default(),
            check: CheckConfig::default(),
            samples: 40,
            sample_margin: 0.01,
            grid: 50,
            residual_tol: 1e-6,
            seed: 0x0f0a,
            schedule: RadiusSchedule { initial: 0.25, ratio: 0.5 },
            frozen_clock: false,
        }
    }
}

impl RunConfig {
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let bad = |v: &str| format!("bad value `{v}`");
        match key {
            "order_n" | "tile_size" | "safety" | "resolution_h" | "measure_eps" | "workers" => {
                return self.gck.apply(key, value)
            }
            "derivative_cap" => self.check.derivative_cap = value.parse().map_err(|_| bad(value))?,
            "tail_budget" => self.check.tail_budget = value.parse().map_err(|_| bad(value))?,
            "enum_budget" => self.check.enum_budget = value.parse().map_err(|_| bad(value))?,
            "numeric_tol" => self.check.numeric_tol = value.parse().map_err(|_| bad(value))?,
            "samples" => self.samples = value.parse().map_err(|_| bad(value))?,
            "sample_margin" => self.sample_margin = value.parse().map_err(|_| bad(value))?,
            "grid" => self.grid = value.parse().map_err(|_| bad(value))?,
            "residual_tol" => self.residual_tol = value.parse().map_err(|_| bad(value))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(value))?,
            "schedule_initial" => {
                self.schedule.initial = value.parse().map_err(|_| bad(value))?
            }
            "schedule_ratio" => self.schedule.ratio = value.parse().map_err(|_| bad(value))?,
            _ => return Err(format!("unknown config key `{key}`")),
        }
        Ok(())
    }

    /// Line-oriented `key value` config file; `#` comments.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)?;
        for (lno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(char::is_whitespace)
                .ok_or(CliError::Spec { line: lno + 1, msg: "expected `key value`".into() })?;
            self.apply(k, v.trim())
                .map_err(|msg| CliError::Spec { line: lno + 1, msg })?;
        }
        Ok(())
    }
}

fn timestamp(frozen: bool) -> String {
    if frozen {
        "frozen".into()
    } else {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        format!("unix:{secs}")
    }
}

/// Atomic file write: temp in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------------
// solve

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub generated_at: String,
    pub spec: String,
    pub config: GckConfig,
    pub sigma_class: String,
    pub sigma_primitives: usize,
    pub sigma: Vec<serde_json::Value>,
    pub measure_bound: f64,
    pub measure_partial: bool,
    pub rings: usize,
    pub tiles: usize,
    pub stabilization: Vec<usize>,
    pub residual: foamck_core::gck::ResidualReport,
    pub initial_data_error: f64,
    pub oracle_sup_error: Option<f64>,
}

pub struct SolveOutcome {
    pub report_path: PathBuf,
    pub solution_path: PathBuf,
    pub samples_path: PathBuf,
    pub residual_pass: bool,
}

/// Override precedence: spec-file `config` lines, then any caller knobs
/// that differ from the defaults.
fn merge_gck_config(spec_cfg: &GckConfig, cli: &GckConfig) -> GckConfig {
    let defaults = GckConfig::default();
    let mut out = spec_cfg.clone();
    if cli.order_n != defaults.order_n {
        out.order_n = cli.order_n;
    }
    if cli.tile_size != defaults.tile_size {
        out.tile_size = cli.tile_size;
    }
    if cli.safety != defaults.safety {
        out.safety = cli.safety;
    }
    if cli.resolution_h != defaults.resolution_h {
        out.resolution_h = cli.resolution_h;
    }
    if cli.measure_eps != defaults.measure_eps {
        out.measure_eps = cli.measure_eps;
    }
    out.workers = cli.workers;
    out
}

pub fn cmd_solve(
    spec_path: &Path,
    out_dir: &Path,
    cfg: &RunConfig,
) -> Result<SolveOutcome, CliError> {
    let spec_text = std::fs::read_to_string(spec_path)?;
    let parsed = parse_pde(&spec_text)?;
    let gck_cfg = merge_gck_config(&parsed.config, &cfg.gck);

    let sol = construct_global_solution(&parsed.pde, &parsed.data, &gck_cfg)?;
    let residual = verify_residual(&sol, cfg.grid, cfg.residual_tol)?;
    let initial_data_error = verify_initial_data(&sol, cfg.grid)?;
    let rows = sample_table(&sol, cfg.grid, parsed.oracle.as_ref())?;
    let oracle_sup_error = parsed.oracle.as_ref().map(|_| {
        rows.iter()
            .filter_map(|r| r.oracle.map(|o| (r.psi - o).abs()))
            .fold(0.0f64, f64::max)
    });

    // worker count must not influence any emitted byte
    let mut canonical_cfg = gck_cfg.clone();
    canonical_cfg.workers = 0;

    let report = SolveReport {
        generated_at: timestamp(cfg.frozen_clock),
        spec: spec_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        config: canonical_cfg.clone(),
        sigma_class: sol.sigma.class.tag().to_string(),
        sigma_primitives: sol.sigma.primitives(1 << 20).len(),
        sigma: sol
            .sigma
            .primitives(1 << 20)
            .iter()
            .map(|p| serde_json::to_value(p).unwrap())
            .collect(),
        measure_bound: sol.measure.bound.max(0.0),
        measure_partial: sol.measure.partial,
        rings: sol.rings,
        tiles: sol.tiles.len(),
        stabilization: sol.stabilization.clone(),
        residual: residual.clone(),
        initial_data_error,
        oracle_sup_error,
    };

    let report_path = out_dir.join("report.json");
    write_atomic(&report_path, &(serde_json::to_string_pretty(&report)? + "\n").into_bytes())?;

    let mut file = SolutionFile::from_solution(&sol, &spec_text);
    file.config = canonical_cfg;
    let solution_path = out_dir.join("solution.json");
    write_atomic(&solution_path, &(serde_json::to_string(&file)? + "\n").into_bytes())?;

    write_atomic(&out_dir.join("sigma.txt"), sol.sigma.to_text(1 << 20).as_bytes())?;

    let mut csv = String::new();
    for i in 0..parsed.pde.dim() {
        if i == 0 {
            csv.push('t');
        } else {
            csv.push_str(&format!(",y{i}"));
        }
    }
    csv.push_str(",psi,oracle,residual\n");
    for r in &rows {
        for (i, v) in r.x.iter().enumerate() {
            if i > 0 {
                csv.push(',');
            }
            csv.push_str(&format!("{v:?}"));
        }
        match r.oracle {
            Some(o) => csv.push_str(&format!(",{:?},{:?},{:?}\n", r.psi, o, r.residual)),
            None => csv.push_str(&format!(",{:?},,{:?}\n", r.psi, r.residual)),
        }
    }
    let samples_path = out_dir.join("samples.csv");
    write_atomic(&samples_path, csv.as_bytes())?;

    Ok(SolveOutcome { report_path, solution_path, samples_path, residual_pass: residual.pass })
}

// ---------------------------------------------------------------------
// check-ideal

#[derive(Debug)]
enum NetBuilder {
    Diagonal(SmoothExpr),
    ExampleOne,
    File(Vec<SmoothExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IdealChoice {
    J,
    I,
}

struct NetSpec {
    domain: DomainBox,
    builder: NetBuilder,
    ideal: IdealChoice,
    schedule: Option<RadiusSchedule>,
}

fn parse_net_spec(text: &str) -> Result<NetSpec, CliError> {
    let mut domain = None;
    let mut builder_name: Option<String> = None;
    let mut expr_text = None;
    let mut terms = Vec::new();
    let mut ideal = IdealChoice::I;
    let mut schedule = None;
    for (lno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| CliError::Spec { line: lno + 1, msg };
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match key {
            "domain" => {
                let vals: Vec<f64> = rest
                    .split_whitespace()
                    .map(|w| w.parse::<f64>().map_err(|_| err(format!("bad bound `{w}`"))))
                    .collect::<Result<_, _>>()?;
                if vals.len() % 2 != 0 || vals.is_empty() {
                    return Err(err("domain needs pairs of bounds".into()));
                }
                let intervals: Vec<(f64, f64)> = vals.chunks(2).map(|c| (c[0], c[1])).collect();
                domain = Some(DomainBox::new(&intervals).map_err(|e| err(e.to_string()))?);
            }
            "builder" => builder_name = Some(rest.to_string()),
            "expr" => expr_text = Some(expr::parse_expr(rest).map_err(|e| err(e.to_string()))?),
            "term" => terms.push(expr::parse_expr(rest).map_err(|e| err(e.to_string()))?),
            "ideal" => {
                ideal = match rest {
                    "J" | "j" => IdealChoice::J,
                    "I" | "i" => IdealChoice::I,
                    other => return Err(err(format!("unknown ideal `{other}`"))),
                }
            }
            "schedule" => {
                let vals: Vec<f64> = rest
                    .split_whitespace()
                    .map(|w| w.parse::<f64>().map_err(|_| err(format!("bad number `{w}`"))))
                    .collect::<Result<_, _>>()?;
                if vals.len() != 2 {
                    return Err(err("schedule needs `initial ratio`".into()));
                }
                schedule = Some(RadiusSchedule { initial: vals[0], ratio: vals[1] });
            }
            other => return Err(err(format!("unknown line `{other}`"))),
        }
    }
    let domain = domain.ok_or(CliError::Spec { line: 0, msg: "missing `domain`".into() })?;
    let builder = match builder_name.as_deref() {
        Some("diagonal") => NetBuilder::Diagonal(expr_text.ok_or(CliError::Spec {
            line: 0,
            msg: "diagonal builder needs an `expr` line".into(),
        })?),
        Some("example-one") => NetBuilder::ExampleOne,
        Some("file") => {
            if terms.is_empty() {
                return Err(CliError::Spec {
                    line: 0,
                    msg: "file builder needs `term` lines".into(),
                });
            }
            NetBuilder::File(terms)
        }
        other => {
            return Err(CliError::Spec {
                line: 0,
                msg: format!("builder must be diagonal | example-one | file, got {other:?}"),
            })
        }
    };
    Ok(NetSpec { domain, builder, ideal, schedule })
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub generated_at: String,
    pub builder: String,
    pub ideal: String,
    pub sigma_label: String,
    pub samples: usize,
    pub verdict: MembershipVerdict,
}

pub struct CheckOutcome {
    pub verdict: MembershipVerdict,
    pub report_path: PathBuf,
}

/// Samples outside Σ; dense enumerations may not admit the configured
/// margin, in which case it is halved until sampling succeeds.
fn adaptive_samples(
    sigma: &SingularitySet,
    domain: &DomainBox,
    cfg: &RunConfig,
) -> Result<Vec<Vec<f64>>, CliError> {
    let mut margin = cfg.sample_margin;
    for _ in 0..8 {
        match sample_outside(sigma, domain, cfg.samples, margin, cfg.seed, cfg.check.enum_budget)
        {
            Ok(s) => return Ok(s),
            Err(_) => margin /= 2.0,
        }
    }
    Ok(sample_outside(sigma, domain, cfg.samples, margin, cfg.seed, cfg.check.enum_budget)?)
}

pub fn cmd_check_ideal(
    net_path: &Path,
    sigma_path: &Path,
    out_dir: &Path,
    cfg: &RunConfig,
) -> Result<CheckOutcome, CliError> {
    let net_spec = parse_net_spec(&std::fs::read_to_string(net_path)?)?;
    let sigma = SingularitySet::from_text(&std::fs::read_to_string(sigma_path)?)?;
    if sigma.ambient != net_spec.domain {
        return Err(CliError::Spec {
            line: 0,
            msg: "net and singularity set live on different domains".into(),
        });
    }
    let domain = &net_spec.domain;
    let samples = adaptive_samples(&sigma, domain, cfg)?;

    let (builder_name, ran_ideal, verdict) = match &net_spec.builder {
        NetBuilder::Diagonal(psi) => {
            let poset = IndexPoset::naturals();
            let net = diagonal_embed(psi, &poset, domain);
            let v = run_check(&net, &sigma, net_spec.ideal, &samples, cfg)?;
            ("diagonal", net_spec.ideal, v)
        }
        NetBuilder::File(terms) => {
            let poset = IndexPoset::naturals();
            let terms = terms.clone();
            let net = Net::new(domain.clone(), poset, "file", move |l| {
                terms[(l.level as usize).min(terms.len() - 1)].clone()
            });
            let v = run_check(&net, &sigma, net_spec.ideal, &samples, cfg)?;
            ("file", net_spec.ideal, v)
        }
        NetBuilder::ExampleOne => {
            let schedule = net_spec.schedule.unwrap_or(cfg.schedule);
            let (_poset, net, family) =
                example_one_net(&sigma, domain, schedule, cfg.check.enum_budget)?;
            let v = check_i_membership(&net, &sigma, &family, &samples, &cfg.check)?;
            ("example-one", IdealChoice::I, v)
        }
    };

    let report = CheckReport {
        generated_at: timestamp(cfg.frozen_clock),
        builder: builder_name.to_string(),
        ideal: match ran_ideal {
            IdealChoice::J => "J".into(),
            IdealChoice::I => "I".into(),
        },
        sigma_label: sigma.label.clone(),
        samples: samples.len(),
        verdict: verdict.clone(),
    };
    let report_path = out_dir.join("verdict.json");
    write_atomic(&report_path, &(serde_json::to_string_pretty(&report)? + "\n").into_bytes())?;
    Ok(CheckOutcome { verdict, report_path })
}

fn run_check(
    net: &Net,
    sigma: &SingularitySet,
    ideal: IdealChoice,
    samples: &[Vec<f64>],
    cfg: &RunConfig,
) -> Result<MembershipVerdict, CliError> {
    Ok(match ideal {
        IdealChoice::J => check_j_membership(net, sigma, samples, &cfg.check)?,
        IdealChoice::I => {
            let repr = constant_representation(sigma, cfg.check.enum_budget);
            check_i_membership(net, sigma, &repr, samples, &cfg.check)?
        }
    })
}

pub fn verdict_exit_code(v: &MembershipVerdict) -> i32 {
    match v.outcome {
        Outcome::VerifiedAtScale => exit_code::OK,
        Outcome::Refuted => exit_code::REFUTED,
        Outcome::Inconclusive => exit_code::INCONCLUSIVE,
    }
}

// ---------------------------------------------------------------------
// example-one

#[derive(Debug, Serialize)]
pub struct ExampleOneReport {
    pub generated_at: String,
    pub sigma_label: String,
    pub points: usize,
    pub poset: String,
    pub schedule: RadiusSchedule,
    pub sample_terms: Vec<String>,
    pub verdict: MembershipVerdict,
}

pub fn cmd_example_one(
    sigma_path: &Path,
    out_dir: &Path,
    cfg: &RunConfig,
) -> Result<CheckOutcome, CliError> {
    let sigma = SingularitySet::from_text(&std::fs::read_to_string(sigma_path)?)?;
    let domain = sigma.ambient.clone();
    let (poset, net, family) =
        example_one_net(&sigma, &domain, cfg.schedule, cfg.check.enum_budget)?;
    let samples = adaptive_samples(&sigma, &domain, cfg)?;
    let verdict = check_i_membership(&net, &sigma, &family, &samples, &cfg.check)?;
    let sample_terms: Vec<String> = (0..3)
        .map(|j| {
            let l = poset.chain(j);
            format!("w*_{l} = {}", net.term(&l))
        })
        .collect();
    let report = ExampleOneReport {
        generated_at: timestamp(cfg.frozen_clock),
        sigma_label: sigma.label.clone(),
        points: sigma.primitives(cfg.check.enum_budget).len(),
        poset: poset.label.clone(),
        schedule: cfg.schedule,
        sample_terms,
        verdict: verdict.clone(),
    };
    let report_path = out_dir.join("example-one.json");
    write_atomic(&report_path, &(serde_json::to_string_pretty(&report)? + "\n").into_bytes())?;
    Ok(CheckOutcome { verdict, report_path })
}

// ---------------------------------------------------------------------
// verify

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub generated_at: String,
    pub residual: foamck_core::gck::ResidualReport,
    pub initial_data_error: f64,
    pub measure_bound: f64,
    pub pass: bool,
}

pub struct VerifyOutcome {
    pub pass: bool,
    pub report_path: PathBuf,
}

pub fn cmd_verify(
    solution_dir: &Path,
    grid: usize,
    tol: f64,
    cfg: &RunConfig,
) -> Result<VerifyOutcome, CliError> {
    let solution_path = solution_dir.join("solution.json");
    if !solution_path.exists() {
        return Err(CliError::Gck(GckError::MissingArtifact(
            solution_path.display().to_string(),
        )));
    }
    let file: SolutionFile = serde_json::from_str(&std::fs::read_to_string(&solution_path)?)?;
    let sol = file.to_solution()?;
    let residual = verify_residual(&sol, grid, tol)?;
    let initial_data_error = verify_initial_data(&sol, grid)?;
    let mb = measure_bound(&sol.sigma, 1 << 20);
    let pass = residual.pass && initial_data_error <= 1e-9 && mb.bound <= sol.config.measure_eps;
    let report = VerifyReport {
        generated_at: timestamp(cfg.frozen_clock),
        residual,
        initial_data_error,
        measure_bound: mb.bound.max(0.0),
        pass,
    };
    let report_path = solution_dir.join("residual_report.json");
    write_atomic(&report_path, &(serde_json::to_string_pretty(&report)? + "\n").into_bytes())?;
    Ok(VerifyOutcome { pass, report_path })
}

// ---------------------------------------------------------------------
// report

/// Render one of our JSON reports as a text summary.
pub fn cmd_report(path: &Path) -> Result<String, CliError> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let mut out = String::new();
    out.push_str(&format!("report: {}\n", path.display()));
    if let Some(obj) = value.as_object() {
        for (k, v) in obj {
            match v {
                serde_json::Value::Array(a) => {
                    out.push_str(&format!("  {k}: [{} entries]\n", a.len()))
                }
                serde_json::Value::Object(o) => {
                    let keys: Vec<&str> = o.keys().map(|s| s.as_str()).collect();
                    out.push_str(&format!("  {k}: {{{}}}\n", keys.join(", ")));
                }
                other => out.push_str(&format!("  {k}: {other}\n")),
            }
        }
    }
    Ok(out)
}
