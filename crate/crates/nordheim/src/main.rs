//! Command-line driver.
//!
//! Exit codes: 0 completed, 10 blow-up detected, 11 step underflow,
//! 12 positivity violation, 2 configuration error, 1 any other failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use nordheim::{
    build_initial, collide_collocation, collide_conservative, fit_exponent, parse_config,
    partition_measure, plot_dyadic, plot_loglog, plot_moments, read_atoms, read_snapshot, run,
    write_json, write_series, write_snapshot, Error, PartitionCase, Result, RunStatus,
    RunSummary, SimConfig,
};

#[derive(Parser)]
#[command(
    name = "nordheim",
    version,
    about = "Discrete-energy laboratory for the isotropic bosonic Nordheim equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a config file.
    Simulate {
        /// Path of the config file.
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
    },
    /// Measure the collision residual of the configured initial state.
    CheckEquilibrium {
        /// Path of the config file.
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
    },
    /// Partition an atom list into concentrated or separated pieces.
    Partition {
        /// Atom CSV (`location,mass`, header optional).
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        /// Base of the geometric interval family.
        #[arg(long = "b", default_value_t = 2.0)]
        b: f64,
        /// Mass-fraction threshold of the stopping rule.
        #[arg(long = "delta", default_value_t = 0.4)]
        delta: f64,
        /// Also draw the interval masses as an SVG bar plot.
        #[arg(long = "plot")]
        plot: Option<PathBuf>,
    },
    /// Fit a power-law exponent to a snapshot over an energy window.
    FitExponent {
        /// Snapshot CSV (`eps,f,g`, header optional).
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        /// Lower edge of the fit window.
        #[arg(long)]
        lo: f64,
        /// Upper edge of the fit window.
        #[arg(long)]
        hi: f64,
    },
    /// Re-run one config across a parameter grid, one summary row per value.
    Sweep {
        /// Path of the base config file.
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        /// Parameter to vary (n, eps_max, dt0, t_end, m, e, rho, beta, alpha).
        #[arg(long)]
        param: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Simulate { config } => cmd_simulate(&config),
        Command::CheckEquilibrium { config } => cmd_check_equilibrium(&config),
        Command::Partition { input, b, delta, plot } => {
            cmd_partition(&input, b, delta, plot.as_deref())
        }
        Command::FitExponent { input, lo, hi } => cmd_fit_exponent(&input, lo, hi),
        Command::Sweep { config, param, values } => cmd_sweep(&config, &param, &values),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Honor NORDHEIM_THREADS as the worker count of the shared thread pool.
fn init_thread_pool() -> Result<()> {
    let Ok(raw) = std::env::var("NORDHEIM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "NORDHEIM_THREADS must be a positive integer, got \"{raw}\""
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::DataFormat {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_config(&text)
}

/// Run one configuration to completion and write its configured artifacts.
fn execute(cfg: &SimConfig) -> Result<RunSummary> {
    let (_, d0) = build_initial(cfg)?;
    let outcome = run(d0.clone(), &cfg.to_run_params())?;
    if let Some(series_path) = &cfg.series_path {
        let path = Path::new(series_path);
        write_series(path, &outcome.series, &cfg.mass_below, cfg.fit_window.is_some())?;
        warn_if_empty(plot_moments(&svg_sibling(path), &outcome.series));
    }
    if let Some(snapshot_path) = &cfg.snapshot_path {
        let path = Path::new(snapshot_path);
        let final_d = outcome.final_state.distribution();
        write_snapshot(path, final_d)?;
        warn_if_empty(plot_loglog(&svg_sibling(path), final_d));
    }
    let summary = RunSummary::new(&d0, &outcome, cfg.convention);
    if let Some(summary_path) = &cfg.summary_path {
        write_json(Path::new(summary_path), &summary)?;
    }
    Ok(summary)
}

fn svg_sibling(path: &Path) -> PathBuf {
    let mut name = path.to_path_buf().into_os_string();
    name.push(".svg");
    PathBuf::from(name)
}

/// Plots of degenerate data are skipped with a notice, not treated as run
/// failures.
fn warn_if_empty(result: Result<()>) {
    match result {
        Ok(()) | Err(Error::EmptyData(_)) => {}
        Err(e) => eprintln!("warning: plot not written: {e}"),
    }
}

fn cmd_simulate(config: &Path) -> Result<u8> {
    let cfg = load_config(config)?;
    let summary = execute(&cfg)?;
    println!("status: {}", summary.status);
    println!("t_final: {}", summary.t_final);
    println!("steps: {}", summary.steps);
    if let Some(t) = summary.t_detect {
        println!("t_detect: {t}");
    }
    println!(
        "mass drift: {:e}",
        (summary.conserved_mass_final - summary.conserved_mass_initial).abs()
    );
    println!(
        "energy drift: {:e}",
        (summary.conserved_energy_final - summary.conserved_energy_initial).abs()
    );
    Ok(summary.exit_code as u8)
}

/// Relative residual threshold below which a state counts as an equilibrium.
const EQUILIBRIUM_TOL: f64 = 1e-12;

fn cmd_check_equilibrium(config: &Path) -> Result<u8> {
    let cfg = load_config(config)?;
    let (_, d) = build_initial(&cfg)?;
    let mut all_pass = true;
    for (name, rates) in [
        ("conservative", collide_conservative(&d, false)),
        ("collocation", collide_collocation(&d)),
    ] {
        let residual = rates.abs_rate();
        let scale = rates.abs_mass_scale();
        let pass = residual <= EQUILIBRIUM_TOL * scale;
        all_pass &= pass;
        println!(
            "{name}: residual = {residual:.3e}, scale = {scale:.3e}, ratio = {:.3e} -> {}",
            residual / scale,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_partition(input: &Path, b: f64, delta: f64, plot: Option<&Path>) -> Result<u8> {
    let m = read_atoms(input)?;
    let p = partition_measure(&m, b, delta)?;
    p.verify(&m)?;
    let case = match &p.case {
        PartitionCase::Concentrated { k, extended_mass } => serde_json::json!({
            "case": "concentrated",
            "k": k,
            "extended_mass": extended_mass,
        }),
        PartitionCase::Separated { u1, u2, eta, u1_mass, u2_mass } => serde_json::json!({
            "case": "separated",
            "u1": u1,
            "u2": u2,
            "eta": eta,
            "u1_mass": u1_mass,
            "u2_mass": u2_mass,
        }),
    };
    let report = serde_json::json!({
        "b": p.family.b(),
        "scale": p.family.scale(),
        "delta": p.delta,
        "total": p.total,
        "partition": case,
        "verified": true,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("JSON encoding"));
    if let Some(plot_path) = plot {
        plot_dyadic(plot_path, &m, b)?;
    }
    Ok(0)
}

fn cmd_fit_exponent(input: &Path, lo: f64, hi: f64) -> Result<u8> {
    let d = read_snapshot(input)?;
    let fit = fit_exponent(&d, lo, hi)?;
    let report = serde_json::json!({
        "lo": lo,
        "hi": hi,
        "exponent": fit.exponent,
        "r_squared": fit.r_squared,
        "nodes_used": fit.nodes_used,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("JSON encoding"));
    Ok(0)
}

/// One line of a sweep report.
#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    param: String,
    value: f64,
    status: String,
    exit_code: i32,
    steps: u64,
    t_final: f64,
    t_detect: Option<f64>,
    f_sup_final: f64,
}

fn cmd_sweep(config: &Path, param: &str, values: &[f64]) -> Result<u8> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let base = load_config(config)?;
    // Per-run artifact paths would collide across the fan-out; the sweep
    // reports summaries only.
    let configs: Vec<SimConfig> = values
        .iter()
        .map(|&v| {
            let mut cfg = base.apply_override(param, v)?;
            cfg.series_path = None;
            cfg.snapshot_path = None;
            cfg.summary_path = None;
            Ok(cfg)
        })
        .collect::<Result<_>>()?;
    let summaries: Vec<RunSummary> = std::thread::scope(|scope| {
        let handles: Vec<_> =
            configs.iter().map(|cfg| scope.spawn(move || execute(cfg))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Result<_>>()
    })?;
    let rows: Vec<SweepRow> = values
        .iter()
        .zip(&summaries)
        .map(|(&value, s)| SweepRow {
            param: param.to_string(),
            value,
            status: s.status.clone(),
            exit_code: s.exit_code,
            steps: s.steps,
            t_final: s.t_final,
            t_detect: s.t_detect,
            f_sup_final: s.f_sup_final,
        })
        .collect();
    println!("param,value,status,exit_code,steps,t_final,t_detect,f_sup_final");
    for row in &rows {
        println!(
            "{},{},{},{},{},{:e},{},{:e}",
            row.param,
            row.value,
            row.status,
            row.exit_code,
            row.steps,
            row.t_final,
            row.t_detect.map(|t| format!("{t:e}")).unwrap_or_default(),
            row.f_sup_final,
        );
    }
    if let Some(summary_path) = &base.summary_path {
        write_json(Path::new(summary_path), &rows)?;
    }
    let all_ran = rows
        .iter()
        .all(|row| RunStatus::Completed.exit_code() == row.exit_code || row.exit_code == 10);
    Ok(if all_ran { 0 } else { 1 })
}
