//! `eaimp` — run, compare, plot and validate unscrewing scenarios.
//!
//! Exit codes: 0 pass, 1 invariant violation (or failed task), 2 bad
//! configuration / input, 3 divergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eaimp_core::control::ControllerKind;
use eaimp_core::scenario::{
    self, audit, compare, extract_plot_series, plot, preset_text, run_scenario, write_figure_series, Comparison,
    RunOptions, RunOutput, ScenarioConfig,
};
use eaimp_core::sim::LogTable;
use eaimp_core::Error;

#[derive(Parser)]
#[command(name = "eaimp", version, about = "Energy-aware impedance control scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its log and report.
    Run(RunArgs),
    /// Run every controller listed in the config and compare them.
    Compare(RunArgs),
    /// Extract per-figure series from a log.
    Plot(PlotArgs),
    /// Check a configuration, and optionally audit a log against it.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file, or the name of a bundled preset.
    #[arg(long)]
    config: String,
    /// Output directory (defaults to `output.dir` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the controller kind.
    #[arg(long)]
    controller: Option<ControllerKind>,
    /// Override the time step [s].
    #[arg(long)]
    dt: Option<f64>,
    /// Reserved; scenarios are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Abort on the first invariant violation.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Log written by `run` or `compare`.
    log: PathBuf,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
    /// Scenario file; adds the workbench height to the position series.
    #[arg(long)]
    config: Option<String>,
    /// Comma-separated columns for a custom `series.csv` instead of the
    /// standard figures.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: String,
    /// Log to re-audit against the configuration.
    log: Option<PathBuf>,
}

const PASS: u8 = 0;
const VIOLATION: u8 = 1;
const CONFIG: u8 = 2;
const DIVERGENCE: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::SingularMassMatrix(_) => DIVERGENCE,
        Error::InvariantViolation { .. } | Error::Scenario(_) => VIOLATION,
        _ => CONFIG,
    }
}

fn load(source: &str) -> eaimp_core::Result<ScenarioConfig> {
    let path = Path::new(source);
    if !path.exists() {
        if let Ok(text) = preset_text(source) {
            return ScenarioConfig::from_toml_str(text);
        }
    }
    scenario::load_config(path)
}

fn configure(a: &RunArgs) -> eaimp_core::Result<ScenarioConfig> {
    let mut cfg = load(&a.config)?;
    if let Some(k) = a.controller {
        cfg = cfg.with_controller(k)?;
    }
    if let Some(dt) = a.dt {
        cfg = cfg.with_dt(dt)?;
    }
    if let Some(seed) = a.seed {
        cfg.sim.seed = seed;
    }
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> eaimp_core::Result<()> {
    fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn out_dir(a: &RunArgs, cfg: &ScenarioConfig) -> eaimp_core::Result<PathBuf> {
    let dir = a.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
    Ok(dir)
}

fn save_run(dir: &Path, out: &RunOutput) -> eaimp_core::Result<()> {
    let name = out.report.controller.as_str();
    write(&dir.join(format!("{name}.csv")), &out.csv())?;
    let json = serde_json::to_string_pretty(&out.report).map_err(|e| Error::Scenario(e.to_string()))?;
    write(&dir.join(format!("{name}_report.json")), &json)
}

fn run_status(out: &RunOutput) -> u8 {
    match &out.failure {
        Some(e) => exit_code(e),
        None if out.report.violations > 0 => VIOLATION,
        None => PASS,
    }
}

fn cmd_run(a: &RunArgs) -> eaimp_core::Result<u8> {
    let cfg = configure(a)?;
    let dir = out_dir(a, &cfg)?;
    let out = run_scenario(&cfg, RunOptions { strict: a.strict })?;
    save_run(&dir, &out)?;
    print!("{}", Comparison { runs: vec![out.report.clone()], reductions: vec![] }.to_table());
    if let Some(e) = &out.failure {
        eprintln!("run stopped: {e}");
    }
    if let Some(v) = &out.report.first_violation {
        eprintln!("{} invariant violation(s), first at {v}", out.report.violations);
    }
    Ok(run_status(&out))
}

fn cmd_compare(a: &RunArgs) -> eaimp_core::Result<u8> {
    let cfg = configure(a)?;
    let dir = out_dir(a, &cfg)?;
    let (cmp, outs) = compare(&cfg, RunOptions { strict: a.strict })?;
    for o in &outs {
        save_run(&dir, o)?;
    }
    write(&dir.join("compare.json"), &cmp.to_json()?)?;
    let table = cmp.to_table();
    write(&dir.join("compare.txt"), &table)?;
    print!("{table}");
    Ok(outs.iter().map(run_status).max().unwrap_or(PASS))
}

fn cmd_plot(a: &PlotArgs) -> eaimp_core::Result<u8> {
    let table = LogTable::read(&a.log)?;
    match &a.columns {
        Some(cols) => {
            let names: Vec<&str> = cols.iter().map(String::as_str).collect();
            let series = extract_plot_series(&table, &names)?;
            fs::create_dir_all(&a.out).map_err(|e| Error::Io { path: a.out.clone(), source: e })?;
            let path = a.out.join("series.csv");
            write(&path, &plot::series_to_csv(&series))?;
            println!("{}", path.display());
        }
        None => {
            let z_wb = a.config.as_deref().map(load).transpose()?.map(|c| scenario::workbench_height(&c)).transpose()?;
            for p in write_figure_series(&table, z_wb, &a.out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(PASS)
}

fn cmd_validate(a: &ValidateArgs) -> eaimp_core::Result<u8> {
    let cfg = load(&a.config)?;
    println!("{}: ok ({})", a.config, cfg.controller_kinds().iter().map(|k| k.as_str()).collect::<Vec<_>>().join(", "));
    let Some(log) = &a.log else { return Ok(PASS) };
    let records = LogTable::read(log)?.records()?;
    let report = audit(&records, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Scenario(e.to_string()))?);
    Ok(if report.violations > 0 { VIOLATION } else { PASS })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match &e {
                Error::Config(issues) => {
                    eprintln!("invalid configuration ({} issue(s)):", issues.len());
                    for i in issues {
                        eprintln!("  {i}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
