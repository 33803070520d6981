//! `netprice`: generate networks, simulate runs, and run named experiments.
//!
//! Exit codes: 0 success, 1 usage, config or I/O error, 2 numerical or
//! model-assumption failure.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netprice::ensemble::{paired_sweep, SweepParameter};
use netprice::export;
use netprice::netgen::{build_economy, knn_slope, Economy};
use netprice::pipeline::RunOutput;
use netprice::{monetary, pricing, spectral, stats};
use serde_json::json;

use config::{parse_value, RunConfig};
use output::OutDir;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numerical { stage: String, message: String },
}

impl CliError {
    pub fn from_core(stage: &str, e: netprice::Error) -> CliError {
        if e.is_numerical() {
            CliError::Numerical { stage: stage.into(), message: e.to_string() }
        } else {
            CliError::Usage(format!("{stage}: {e}"))
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numerical { .. } => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical { stage, message } => write!(f, "{stage} stage failed: {message}"),
        }
    }
}

/// Attaches a stage name to a core error.
pub fn at<T>(stage: &str, r: netprice::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from_core(stage, e))
}

/// Options accepted both before and after the subcommand. Scalars given
/// after it win; `--set` entries accumulate in command-line order.
#[derive(Args, Clone, Default)]
struct Common {
    /// TOML config with sections network, monetary, hazard, stats, ensemble, output.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for the network draw and the ensemble base seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Override one config key, e.g. --set network.alpha=3.0. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn merge(&self, later: &Common) -> Common {
        Common {
            config: later.config.clone().or_else(|| self.config.clone()),
            seed: later.seed.or(self.seed),
            out: later.out.clone().or_else(|| self.out.clone()),
            jobs: later.jobs.or(self.jobs),
            set: self.set.iter().chain(&later.set).cloned().collect(),
        }
    }
}

#[derive(Parser)]
#[command(name = "netprice", version, about = "Monetary propagation on production networks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a network and write its snapshot and spectral summary.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Run money, prices and statistics on one network.
    Simulate {
        /// Economy snapshot from `generate`; drawn from the config when absent.
        #[arg(long, value_name = "PATH")]
        economy: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a named experiment and record PASS/FAIL with its data.
    Experiment {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Paired sweep of one parameter under common random numbers.
    Sweep {
        /// alpha, nu, theta, pi or g_scale.
        #[arg(long)]
        parameter: String,
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Ensemble report: summary statistics and per-replication CSVs.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Generate { common }
            | Command::Simulate { common, .. }
            | Command::Experiment { common, .. }
            | Command::Sweep { common, .. }
            | Command::Report { common } => common,
        }
    }
}

fn resolve(opts: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &opts.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            RunConfig::from_toml(&text).map_err(CliError::Usage)?
        }
        None => RunConfig::default(),
    };
    let mut overrides = Vec::new();
    for s in &opts.set {
        let (k, v) = s.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        overrides.push((k.trim().to_string(), parse_value(v.trim())));
    }
    if let Some(seed) = opts.seed {
        overrides.push(("network.seed".into(), toml::Value::Integer(seed as i64)));
        overrides.push(("ensemble.base_seed".into(), toml::Value::Integer(seed as i64)));
    }
    if let Some(out) = &opts.out {
        overrides.push(("output.dir".into(), toml::Value::String(out.display().to_string())));
    }
    cfg = cfg.with_overrides(&overrides).map_err(CliError::Usage)?;
    Ok(cfg)
}

fn generate(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let economy = at("generate", build_economy(&cfg.network))?;
    let s = at("spectral", spectral::subdominant_pair(&economy))?;
    let mut out = OutDir::create(cfg, cfg.network.seed)?;
    out.write("economy.json", at("output", economy.to_json())?.as_bytes())?;
    let d = &economy.degrees;
    let summary = json!({
        "n": economy.n(),
        "seed": cfg.network.seed,
        "lambda2": s.lambda2,
        "gap": s.gap,
        "relaxation_time": s.relaxation_time,
        "iterations": s.iterations,
        "degrees": {
            "min": d.iter().min(),
            "max": d.iter().max(),
            "mean": d.iter().sum::<usize>() as f64 / d.len() as f64,
        },
        "knn_slope": knn_slope(&economy),
        "knn_target": -economy.params.nu,
        "tilt": economy.params.tilt,
    });
    out.write("summary.json", (serde_json::to_string_pretty(&summary).unwrap() + "\n").as_bytes())?;
    println!("lambda2 {:.6} gap {:.6} relaxation time {:.3}", s.lambda2, s.gap, s.relaxation_time);
    out.finish()
}

fn load_economy(path: &PathBuf) -> Result<Economy, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Economy::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn simulate(cfg: &RunConfig, economy_path: Option<&PathBuf>) -> Result<PathBuf, CliError> {
    let spec = cfg.run_spec();
    at("config", spec.validate())?;
    let economy = match economy_path {
        Some(p) => load_economy(p)?,
        None => at("generate", build_economy(&cfg.network))?,
    };
    let summary = at("spectral", spectral::subdominant_pair(&economy))?;
    let trajectory = at("monetary", monetary::simulate(&economy, &spec.monetary(&economy)))?;
    let steady = monetary::gamma_steady(&economy, spec.theta, economy.params.nu);
    let flexible = at("pricing", pricing::flexible_prices(&economy, &trajectory))?;
    let flexible_stats =
        at("stats", stats::distortion_record(&economy, &flexible, spec.zeta, spec.window, spec.numeraire))?;
    let (sticky, sticky_stats) = match &spec.hazard {
        Some(h) => {
            let path = at("pricing", pricing::sticky_prices(&economy, &trajectory, h, spec.price_seed))?;
            let st = at("stats", stats::distortion_record(&economy, &path, spec.zeta, spec.window, spec.numeraire))?;
            (Some(path), Some(st))
        }
        None => (None, None),
    };
    let run = RunOutput { economy, spectral: summary, trajectory, steady, flexible, sticky, flexible_stats, sticky_stats };

    // The echoed config describes the economy actually simulated.
    let mut resolved = cfg.clone();
    resolved.network = run.economy.params.clone();
    let mut out = OutDir::create(&resolved, run.economy.params.seed)?;
    out.csv("trajectory.csv", |w| export::write_trajectory(w, &run.trajectory))?;
    out.csv("series.csv", |w| export::write_series(w, &run.trajectory))?;
    out.csv("prices_flexible.csv", |w| export::write_price_path(w, &run.flexible))?;
    out.csv("distortion_flexible.csv", |w| export::write_distortions(w, &run.flexible_stats))?;
    if let (Some(path), Some(st)) = (&run.sticky, &run.sticky_stats) {
        out.csv("prices_sticky.csv", |w| export::write_price_path(w, path))?;
        out.csv("resets_sticky.csv", |w| export::write_reset_events(w, path))?;
        out.csv("distortion_sticky.csv", |w| export::write_distortions(w, st))?;
    }

    let theory = run.theory(&spec, &cfg.baselines());
    let s = run.summary();
    let pi = spec.pi;
    let (a, b) = spec.window;
    let window_mean = |v: &[f64]| v[a - 1..b].iter().sum::<f64>() / (b - a + 1) as f64;
    let c_window = run.trajectory.misalignment[a..=b].iter().sum::<f64>() / (b - a + 1) as f64;
    let delta = |sim: f64, pred: Option<f64>| json!({ "simulated": sim, "predicted": pred, "delta": pred.map(|p| sim - p) });
    let report = json!({
        "seed": s.seed,
        "pi": pi,
        "spectral": {
            "lambda2": run.spectral.lambda2,
            "gap": run.spectral.gap,
            "relaxation_time": run.spectral.relaxation_time,
            "iterations": run.spectral.iterations,
        },
        "flexible": export::distortion_header(&run.flexible_stats),
        "sticky": run.sticky_stats.as_ref().map(export::distortion_header),
        "sticky_reset_frequency": run.sticky.as_ref().map(|p| p.reset_frequency()),
        "final_mass": s.final_mass,
        // First-order predictions: ω ≈ π W_ω, ψ ≈ π² W_ψ, C_t → C_ub.
        "theory_vs_simulation": {
            "phi_window": delta(window_mean(&s.phi), Some(pi.ln_1p())),
            "omega_bar": delta(s.omega_bar, theory.w_omega.map(|w| pi * w)),
            "psi_bar": delta(s.psi_bar, theory.w_psi.map(|w| pi * pi * w)),
            "misalignment_window": delta(c_window, Some(theory.c_ub)),
            "final_mass": delta(s.final_mass, Some((1.0 + pi).powi(spec.horizon as i32) * run.trajectory.mass[0])),
        },
        "theory": theory,
    });
    out.json("report.json", &report)?;
    println!(
        "lambda2 {:.6}  omega_bar {:.4e}  psi_bar {:.4e}{}",
        s.lambda2,
        s.omega_bar,
        s.psi_bar,
        s.sticky_omega_bar.map(|x| format!("  sticky omega_bar {x:.4e}")).unwrap_or_default()
    );
    out.finish()
}

fn sweep(cfg: &RunConfig, parameter: &str, values: &[f64]) -> Result<PathBuf, CliError> {
    let p = SweepParameter::parse(parameter).map_err(|e| CliError::Usage(e.to_string()))?;
    let table = at("sweep", paired_sweep(&cfg.ensemble_spec(), p, values))?;
    let mut out = OutDir::create(cfg, cfg.ensemble.base_seed)?;
    out.csv("sweep.csv", |w| experiments::write_sweep_rows(w, &table))?;
    out.csv("arms.csv", |w| experiments::write_sweep_arms(w, &table))?;
    let verdicts: Vec<_> = table
        .rows
        .iter()
        .map(|r| {
            json!({
                "from": r.from, "to": r.to, "statistic": r.statistic,
                "expected_sign": r.expected_sign, "agreement": r.agreement,
                "pass": r.agreement.map(|a| a >= experiments::SIGN_AGREEMENT),
            })
        })
        .collect();
    out.json(
        "report.json",
        &json!({ "parameter": table.parameter, "values": table.values, "excluded": table.excluded, "rows": verdicts }),
    )?;
    for r in &table.rows {
        let a = r.agreement.map(|a| format!("{a:.2}")).unwrap_or_else(|| "n/a".into());
        println!("{} {} -> {}: {} agreement {a}", table.parameter, r.from, r.to, r.statistic);
    }
    out.finish()
}

fn report(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let rep = at("ensemble", netprice::ensemble::run(&cfg.ensemble_spec()))?;
    let mut out = OutDir::create(cfg, cfg.ensemble.base_seed)?;
    out.csv("replications.csv", |w| export::write_summaries(w, &rep.runs))?;
    out.csv("paths.csv", |w| export::write_summary_paths(w, &rep.runs))?;
    out.json(
        "report.json",
        &json!({
            "replications": rep.replications,
            "included": rep.included,
            "excluded": rep.excluded,
            "failures": rep.failures,
            "statistics": rep.statistics,
        }),
    )?;
    println!("{} of {} replications included", rep.included, rep.replications);
    out.finish()
}

fn dispatch(cli: &Cli) -> Result<PathBuf, CliError> {
    if let Command::Experiment { name, .. } = &cli.command {
        experiments::check_name(name)?;
    }
    let opts = cli.common.merge(cli.command.common());
    let cfg = resolve(&opts)?;
    if let Some(jobs) = opts.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    }
    match &cli.command {
        Command::Generate { .. } => generate(&cfg),
        Command::Simulate { economy, .. } => simulate(&cfg, economy.as_ref()),
        Command::Experiment { name, .. } => experiments::run(name, &cfg),
        Command::Sweep { parameter, values, .. } => sweep(&cfg, parameter, values),
        Command::Report { .. } => report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
