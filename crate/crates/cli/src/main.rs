//! `renev` command line: simulate, analyze, compare, validate.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use renev_core::analysis::model::analyze;
use renev_core::config::{parse_override, Config};
use renev_core::montecarlo::run_campaign;
use renev_core::validate::run_checks;
use renev_core::Error;

#[derive(Parser)]
#[command(
    name = "renev",
    version,
    about = "Two-tier HetNet RB-transfer simulator and analytic model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo campaign; writes metrics.csv, metrics.json, cdf.csv, messages.csv.
    Simulate(Common),
    /// Evaluate the closed forms; writes analysis.json.
    Analyze(Common),
    /// Simulate and analyze, then write compare.csv next to both outputs.
    Compare(Common),
    /// Run the cross-checks; writes validate.txt, non-zero exit on failure.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override one configuration key, e.g. `--set renev=false`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Base seed, overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_MISSING_FILE: u8 = 3;
const EXIT_SCHEMA: u8 = 4;
const EXIT_CAP: u8 = 5;
const EXIT_VALIDATION: u8 = 6;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING_FILE,
        Error::InvalidConfig { .. } | Error::McsTable(_) | Error::UnknownOverride(_) | Error::Json(_) => EXIT_SCHEMA,
        Error::UnknownSlice { .. } => EXIT_SCHEMA,
        Error::StateSpaceTooLarge { .. } => EXIT_CAP,
        Error::Iteration { source, .. } => exit_code(source),
        _ => EXIT_FAILURE,
    }
}

fn load(c: &Common) -> Result<Config, Error> {
    if let Some(p) = &c.config {
        if !p.exists() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("config file {} not found", p.display()),
            )));
        }
    }
    let overrides = c
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut config = Config::load(c.config.as_deref(), &overrides)?;
    if let Some(s) = c.seed {
        config.seed = s;
    }
    Ok(config)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn simulate(config: &Config, out: &Path) -> Result<renev_core::montecarlo::MetricsReport, Error> {
    let campaign = run_campaign(config)?;
    let report = campaign.report;
    let mut w = create(out, "metrics.csv")?;
    report.write_csv(&mut w, true)?;
    w.flush()?;
    let mut w = create(out, "cdf.csv")?;
    report.write_cdf_csv(&mut w, true)?;
    w.flush()?;
    let mut w = create(out, "metrics.json")?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    let mut w = create(out, "messages.csv")?;
    writeln!(w, "load_mbps,iteration,seq,kind,src,dst")?;
    for (li, it, log) in &campaign.logs {
        let prefix = format!("{:.6},{},", config.loads_bps[*li] / 1e6, it);
        log.write_csv_rows(&prefix, &mut w)?;
    }
    w.flush()?;
    Ok(report)
}

fn run(cmd: Command) -> Result<u8, Error> {
    let (common, kind) = match &cmd {
        Command::Simulate(c) => (c, "simulate"),
        Command::Analyze(c) => (c, "analyze"),
        Command::Compare(c) => (c, "compare"),
        Command::Validate(c) => (c, "validate"),
    };
    let config = load(common)?;
    if let Some(j) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    }
    fs::create_dir_all(&common.out)?;
    let out = common.out.as_path();
    match kind {
        "simulate" => {
            let report = simulate(&config, out)?;
            for p in &report.points {
                println!(
                    "{:>6.1} Mbps  T = {:>7.3} ± {:.3} Mbps",
                    p.load_bps / 1e6,
                    p.throughput_bps.mean / 1e6,
                    p.throughput_bps.ci95 / 1e6
                );
            }
        }
        "analyze" => {
            let report = analyze(&config, true, &[])?;
            let mut w = create(out, "analysis.json")?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
            for p in &report.points {
                println!(
                    "{:>6.1} Mbps  T_R = {:>7.3}  T_NR = {:>7.3} Mbps",
                    p.load_bps / 1e6,
                    p.T_R / 1e6,
                    p.T_NR / 1e6
                );
            }
        }
        "compare" => {
            let report = simulate(&config, out)?;
            let ana = analyze(&config, true, &[])?;
            let mut w = create(out, "analysis.json")?;
            serde_json::to_writer_pretty(&mut w, &ana)?;
            writeln!(w)?;
            w.flush()?;
            let mut w = create(out, "compare.csv")?;
            writeln!(w, "load_mbps,simulated_mbps,analytic_mbps,relative_gap,simulated_messages_per_sc,analytic_messages_per_sc")?;
            let n_sc = config.scenario.n_small_cells as f64;
            for (p, a) in report.points.iter().zip(&ana.points) {
                let bound = if config.renev { a.T_R } else { a.T_NR };
                let gap = (p.throughput_bps.mean - bound).abs() / bound.max(f64::MIN_POSITIVE);
                let msgs = a.signaling.as_ref().map(|s| s.E_I / n_sc).unwrap_or(0.0);
                writeln!(
                    w,
                    "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    p.load_bps / 1e6,
                    p.throughput_bps.mean / 1e6,
                    bound / 1e6,
                    gap,
                    p.messages_per_sc.mean,
                    msgs
                )?;
                println!(
                    "{:>6.1} Mbps  sim {:>7.3}  analytic {:>7.3}  gap {:>5.2}%",
                    p.load_bps / 1e6,
                    p.throughput_bps.mean / 1e6,
                    bound / 1e6,
                    gap * 100.0
                );
            }
            w.flush()?;
        }
        _ => {
            let checks = run_checks(&config)?;
            let mut w = create(out, "validate.txt")?;
            for c in &checks {
                writeln!(w, "{c}")?;
                println!("{c}");
            }
            w.flush()?;
            if checks.iter().any(|c| !c.passed) {
                return Ok(EXIT_VALIDATION);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
