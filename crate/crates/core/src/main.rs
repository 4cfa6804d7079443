use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdstab::par::Exec;
use sdstab::scenarios::{
    bracket_info, build, clf_check, format_bracket_info, format_clf_report, format_gains_check, gains_check, load_config,
    parse_annulus, parse_point, run_many, run_scenario, RunReport, ScenarioConfig, DEFAULT_CLF_ANNULUS,
    DEFAULT_RANK_POINTS,
};
use sdstab::Error;

/// Sampled-data stabilization from control Lyapunov functions.
#[derive(Debug, Parser)]
#[command(name = "sdstab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Builtin scenario: example1, example2 or custom (custom needs --config).
    scenario: Option<String>,
    /// TOML scenario document.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Machine-readable CSV on stdout instead of a table.
    #[arg(long)]
    csv: bool,
    /// Output directory for simulation artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the closed loop and write trajectory.csv, ledger.csv, summary.txt
    /// and phase.svg.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial state, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long)]
        max_events: Option<usize>,
        #[arg(long)]
        stop_phi: Option<f64>,
        /// Several TOML configs run concurrently, each into <out>/<file stem>.
        #[arg(long, num_args = 1..)]
        batch: Vec<PathBuf>,
    },
    /// Check the CLF implication on an annulus grid.
    CheckClf {
        #[command(flatten)]
        common: Common,
        /// rmin:rmax:n
        #[arg(long, default_value_t = format!("{}:{}:{}", DEFAULT_CLF_ANNULUS.0, DEFAULT_CLF_ANNULUS.1, DEFAULT_CLF_ANNULUS.2))]
        grid_annulus: String,
    },
    /// Check the small-gain inequality and the Lie-rank conditions.
    CheckGains {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_RANK_POINTS)]
        rank_points: usize,
    },
    /// Print f, g, [f,g], fPhi, gPhi and [f,g]Phi at a point.
    Bracket {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
}

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_FAILED: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_USAGE: u8 = 64;

fn error_exit(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        _ => EXIT_FAILED,
    }
}

fn read_config(path: &Path) -> Result<ScenarioConfig, Error> {
    load_config(&std::fs::read_to_string(path)?)
}

fn resolve(common: &Common) -> Result<ScenarioConfig, Error> {
    match (&common.config, &common.scenario) {
        (Some(path), name) => {
            let cfg = read_config(path)?;
            match name {
                Some(n) if *n != cfg.scenario => Err(Error::Validation(format!(
                    "scenario: command line names {n:?} but the config names {:?}",
                    cfg.scenario
                ))),
                _ => Ok(cfg),
            }
        }
        (None, Some(name)) => ScenarioConfig::builtin(name),
        (None, None) => Err(Error::Validation("scenario: name a scenario or pass --config".into())),
    }
}

fn out_dir(common: &Common, cfg: &ScenarioConfig) -> PathBuf {
    common.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn report(r: &RunReport) {
    println!(
        "{}: {} after {} events, final value {:e} ({})",
        r.scenario,
        r.verdict.name(),
        r.events,
        r.final_value,
        r.output_dir.display()
    );
}

fn simulate(common: &Common, x0: &Option<String>, max_events: Option<usize>, stop_phi: Option<f64>, batch: &[PathBuf]) -> Result<u8, Error> {
    if !batch.is_empty() {
        let root = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        let jobs = batch
            .iter()
            .map(|p| {
                let stem = p.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
                Ok((read_config(p)?, root.join(stem)))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let mut worst = 0;
        for (res, (_, dir)) in run_many(Exec::available(), &jobs).into_iter().zip(&jobs) {
            let code = match res {
                Ok(r) => {
                    report(&r);
                    r.exit_code() as u8
                }
                Err(e) => {
                    eprintln!("{}: {e}", dir.display());
                    error_exit(&e)
                }
            };
            worst = worst.max(code);
        }
        return Ok(worst);
    }
    let mut cfg = resolve(common)?;
    if let Some(x0) = x0 {
        cfg.x0 = Some(parse_point(x0)?.as_slice().to_vec());
    }
    if let Some(m) = max_events {
        cfg.max_events = m;
    }
    if let Some(s) = stop_phi {
        cfg.stop_phi = s;
    }
    cfg.validate()?;
    let dir = out_dir(common, &cfg);
    let r = run_scenario(&cfg, &dir)?;
    report(&r);
    if let sdstab::sampled_loop::Verdict::Failed(msg) = &r.verdict {
        eprintln!("run failed: {msg}");
    }
    Ok(r.exit_code() as u8)
}

fn dispatch(cmd: &Command) -> Result<u8, Error> {
    match cmd {
        Command::Simulate {
            common,
            x0,
            max_events,
            stop_phi,
            batch,
        } => simulate(common, x0, *max_events, *stop_phi, batch),
        Command::CheckClf { common, grid_annulus } => {
            let cfg = resolve(common)?;
            let r = clf_check(&build(&cfg)?, parse_annulus(grid_annulus)?, cfg.tolerances.classification)?;
            print!("{}", format_clf_report(&r, common.csv));
            Ok(if r.passed() { 0 } else { EXIT_VIOLATIONS })
        }
        Command::CheckGains { common, rank_points } => {
            let cfg = resolve(common)?;
            let g = gains_check(&build(&cfg)?, *rank_points, cfg.seed)?;
            print!("{}", format_gains_check(&g, common.csv));
            Ok(if g.passed() { 0 } else { EXIT_VIOLATIONS })
        }
        Command::Bracket { common, point } => {
            let cfg = resolve(common)?;
            let b = bracket_info(&build(&cfg)?, &parse_point(point)?)?;
            print!("{}", format_bracket_info(&b, common.csv));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit(&e))
        }
    }
}
