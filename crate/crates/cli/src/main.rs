use clap::{Parser, Subcommand};
use foamck_cli::{
    cmd_check_ideal, cmd_example_one, cmd_report, cmd_solve, cmd_verify, exit_code,
    verdict_exit_code, RunConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "foamck",
    about = "Symbolic-numeric kernel for nets of smooth functions, vanishing ideals, \
             and globally glued analytic PDE solutions"
)]
struct Cli {
    /// Config file with `key value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for reports and artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for column marching.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Emit reports without wall-clock timestamps.
    #[arg(long, global = true)]
    frozen_clock: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a global solution from a PDE spec file.
    Solve { spec: PathBuf },
    /// Run an ideal-membership checker on a net spec against a
    /// singularity-set file.
    CheckIdeal { net: PathBuf, sigma: PathBuf },
    /// Re-verify residuals and data reproduction from solve artifacts.
    Verify {
        dir: PathBuf,
        #[arg(long, default_value_t = 40)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Build the example-one net for a singularity set and check it.
    ExampleOne { sigma: PathBuf },
    /// Summarize a JSON report.
    Report { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        if let Err(e) = cfg.load_file(path) {
            eprintln!("foamck: config: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    if let Some(w) = cli.workers {
        cfg.gck.workers = w;
    }
    cfg.frozen_clock = cli.frozen_clock;

    let result: Result<i32, foamck_cli::CliError> = match &cli.command {
        Command::Solve { spec } => cmd_solve(spec, &cli.out, &cfg).map(|o| {
            println!("report: {}", o.report_path.display());
            if o.residual_pass {
                exit_code::OK
            } else {
                exit_code::FAILED
            }
        }),
        Command::CheckIdeal { net, sigma } => cmd_check_ideal(net, sigma, &cli.out, &cfg).map(|o| {
            println!("verdict: {:?} -> {}", o.verdict.outcome, o.report_path.display());
            verdict_exit_code(&o.verdict)
        }),
        Command::Verify { dir, grid, tol } => cmd_verify(dir, *grid, *tol, &cfg).map(|o| {
            println!("report: {}", o.report_path.display());
            if o.pass {
                exit_code::OK
            } else {
                exit_code::FAILED
            }
        }),
        Command::ExampleOne { sigma } => cmd_example_one(sigma, &cli.out, &cfg).map(|o| {
            println!("verdict: {:?} -> {}", o.verdict.outcome, o.report_path.display());
            verdict_exit_code(&o.verdict)
        }),
        Command::Report { file } => cmd_report(file).map(|text| {
            print!("{text}");
            exit_code::OK
        }),
    };

    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("foamck: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
