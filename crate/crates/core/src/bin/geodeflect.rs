//! Experiment runner: `geodeflect --scenario udg_density_sweep --out results.csv`.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use geodeflect::experiment::{run_scenario, RangeCalibration, Scenario, ScenarioConfig};
use geodeflect::topology::Connectivity;
use geodeflect::Policy;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    #[value(name = "udg_density_sweep", alias = "udg-density-sweep")]
    UdgDensitySweep,
    #[value(name = "proxigraph_void", alias = "proxigraph-void")]
    ProxigraphVoid,
    #[value(name = "k_sweep", alias = "k-sweep")]
    KSweep,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConnectivityArg {
    /// Resample disconnected graphs, fail after 100 attempts.
    Resample,
    /// Keep only the largest connected component.
    LargestComponent,
    /// Resample, then fall back to the largest component.
    ResampleThenLargest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CalibrationArg {
    /// Mean range equals the UDG radius for the same density.
    Nominal,
    /// Mean range tuned to the target measured mean degree.
    MatchedDegree,
}

#[derive(Debug, Parser)]
#[command(version, about = "Greedy geographic routing with reactive deflection: ideal-MAC experiments")]
struct Args {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long, default_value_t = 1000)]
    nodes: usize,
    /// Mean neighbor counts (comma list). Defaults depend on the scenario.
    #[arg(long, value_delimiter = ',')]
    density: Option<Vec<f64>>,
    /// Hello scope in hops (comma list for k_sweep).
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',', default_value = "greedy,deflection,deflection_optimized")]
    policy: Vec<String>,
    #[arg(long, default_value_t = 20)]
    replications: usize,
    #[arg(long, default_value_t = 1000)]
    flows: usize,
    #[arg(long, default_value_t = 10)]
    packets_per_flow: usize,
    /// Sector merge tolerance on d_min, in disk-radius units.
    #[arg(long, default_value_t = 0.0)]
    delta_d: f64,
    /// Guard angle around forbidden sectors, in degrees.
    #[arg(long, default_value_t = 0.0)]
    guard_angle: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Proxi-graph range standard deviation as a fraction of the mean range.
    #[arg(long, default_value_t = 0.25)]
    std_fraction: f64,
    #[arg(long, value_enum, default_value = "resample-then-largest")]
    connectivity: ConnectivityArg,
    /// Proxi-graph mean range calibration.
    #[arg(long, value_enum, default_value = "matched-degree")]
    range_calibration: CalibrationArg,
    /// Apply blocked knowledge to exact destinations only (no sector generalization).
    #[arg(long)]
    exact_blocking: bool,
    /// Clear all routing state before each flow.
    #[arg(long)]
    reset_per_flow: bool,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory receiving every generated topology in text form.
    #[arg(long)]
    dump_topologies: Option<PathBuf>,
}

fn config(args: &Args) -> Result<ScenarioConfig> {
    let scenario = match args.scenario {
        ScenarioArg::UdgDensitySweep => Scenario::UdgDensitySweep,
        ScenarioArg::ProxigraphVoid => Scenario::ProxigraphVoid,
        ScenarioArg::KSweep => Scenario::KSweep,
    };
    let mut cfg = ScenarioConfig::new(scenario);
    cfg.n_nodes = args.nodes;
    if let Some(d) = &args.density {
        cfg.densities = d.clone();
    }
    if let Some(k) = &args.k {
        cfg.ks = k.clone();
    }
    cfg.policies = args
        .policy
        .iter()
        .map(|p| p.parse::<Policy>())
        .collect::<Result<_, _>>()
        .context("parsing --policy")?;
    cfg.replications = args.replications;
    cfg.n_flows = args.flows;
    cfg.packets_per_flow = args.packets_per_flow;
    cfg.delta_d = args.delta_d;
    cfg.guard_angle = args.guard_angle.to_radians();
    cfg.seed = args.seed;
    cfg.std_fraction = args.std_fraction;
    cfg.connectivity = match args.connectivity {
        ConnectivityArg::Resample => Connectivity::Resample,
        ConnectivityArg::LargestComponent => Connectivity::LargestComponent,
        ConnectivityArg::ResampleThenLargest => Connectivity::ResampleThenLargest,
    };
    cfg.range_calibration = match args.range_calibration {
        CalibrationArg::Nominal => RangeCalibration::NominalRange,
        CalibrationArg::MatchedDegree => RangeCalibration::MatchedDegree,
    };
    cfg.exact_blocking = args.exact_blocking;
    cfg.reset_per_flow = args.reset_per_flow;
    cfg.dump_topologies = args.dump_topologies.clone();
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<()> {
    let cfg = config(args)?;
    let report = run_scenario(&cfg)?;
    for (density, rep, reason) in &report.failures {
        eprintln!("warning: density {density} replication {rep}: {reason}");
    }
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            report.write_csv(BufWriter::new(file))?;
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
