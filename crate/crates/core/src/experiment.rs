//! Evaluation matrix runner: topologies per parameter point and replication,
//! every policy on the same topology and flow list, aggregated into means with
//! 95% Student-t confidence intervals and emitted as CSV.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::routing::{Policy, RoutingConfig};
use crate::simulator::{generate_flows, run_flows, RunMetrics};
use crate::topology::{
    proxigraph_range_for_density, udg_radius_for_density, Connectivity, Generator, RngSeed, Topology, TopologyError,
    VoidRegion,
};

pub const CSV_HEADER: [&str; 8] = ["scenario", "policy", "density", "k", "metric", "mean", "ci95", "n"];

/// Density grid used when none is given.
pub const DEFAULT_DENSITIES: [f64; 7] = [4.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid scenario configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    UdgDensitySweep,
    ProxigraphVoid,
    KSweep,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::UdgDensitySweep => "udg_density_sweep",
            Scenario::ProxigraphVoid => "proxigraph_void",
            Scenario::KSweep => "k_sweep",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "udg_density_sweep" => Ok(Scenario::UdgDensitySweep),
            "proxigraph_void" => Ok(Scenario::ProxigraphVoid),
            "k_sweep" => Ok(Scenario::KSweep),
            other => Err(ExperimentError::Config(format!("unknown scenario `{other}`"))),
        }
    }
}

/// How the proxi-graph mean range is tied to a density value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangeCalibration {
    /// Mean range equals the void-free UDG radius for the same density.
    NominalRange,
    /// Mean range tuned so the measured mean degree equals the density.
    #[default]
    MatchedDegree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n_nodes: usize,
    pub densities: Vec<f64>,
    /// Hello scope values; only `k_sweep` uses more than one.
    pub ks: Vec<u32>,
    pub policies: Vec<Policy>,
    pub replications: usize,
    pub n_flows: usize,
    pub packets_per_flow: usize,
    pub delta_d: f64,
    /// Radians.
    pub guard_angle: f64,
    pub seed: u64,
    /// Proxi-graph range deviation as a fraction of the mean range.
    pub std_fraction: f64,
    pub connectivity: Connectivity,
    pub range_calibration: RangeCalibration,
    /// Use blocked knowledge for exact destinations only.
    pub exact_blocking: bool,
    /// Clear node state before every flow.
    pub reset_per_flow: bool,
    pub dump_topologies: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        let (densities, ks) = match scenario {
            Scenario::KSweep => (vec![8.0], vec![1, 2, 3, 4, 5]),
            _ => (DEFAULT_DENSITIES.to_vec(), vec![3]),
        };
        Self {
            scenario,
            n_nodes: 1000,
            densities,
            ks,
            policies: Policy::ALL.to_vec(),
            replications: 20,
            n_flows: 1000,
            packets_per_flow: 10,
            delta_d: 0.0,
            guard_angle: 0.0,
            seed: 1,
            std_fraction: 0.25,
            connectivity: Connectivity::ResampleThenLargest,
            range_calibration: RangeCalibration::default(),
            exact_blocking: false,
            reset_per_flow: false,
            dump_topologies: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.n_nodes < 2 {
            return bad(format!("need at least 2 nodes, got {}", self.n_nodes));
        }
        if self.densities.is_empty() || self.ks.is_empty() || self.policies.is_empty() {
            return bad("density, k and policy lists must be non-empty".into());
        }
        if self.replications == 0 || self.n_flows == 0 || self.packets_per_flow == 0 {
            return bad("replications, flows and packets per flow must be positive".into());
        }
        for &d in &self.densities {
            if !d.is_finite() || d <= 0.0 || d > (self.n_nodes - 1) as f64 {
                return bad(format!("density {d} infeasible for {} nodes", self.n_nodes));
            }
        }
        if !(0.0..1.0).contains(&self.std_fraction) {
            return bad(format!("std fraction {} not in [0, 1)", self.std_fraction));
        }
        for &k in &self.ks {
            self.routing(Policy::Deflection, k).validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        Ok(())
    }

    fn routing(&self, policy: Policy, k: u32) -> RoutingConfig {
        RoutingConfig {
            k,
            delta_d: self.delta_d,
            guard_angle: self.guard_angle,
            policy,
            sector_generalization: !self.exact_blocking,
            persist_state: !self.reset_per_flow,
        }
    }

    fn void(&self) -> Option<VoidRegion> {
        (self.scenario == Scenario::ProxigraphVoid).then(|| VoidRegion::central_square(1.0))
    }
}

/// Mean with a 95% confidence half-width (absent for a single sample).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub ci95: Option<f64>,
    pub n: usize,
}

/// Student-t 95% interval around the sample mean. `None` for no samples.
pub fn aggregate(samples: &[f64]) -> Option<Summary> {
    let n = samples.len();
    if n == 0 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ci95 = (n >= 2).then(|| {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive dof").inverse_cdf(0.975);
        t * (var / n as f64).sqrt()
    });
    Some(Summary { mean, ci95, n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterPoint {
    pub density: f64,
    pub k: u32,
    pub policy: Policy,
}

/// Aggregated results of one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub point: ParameterPoint,
    pub loss: Option<Summary>,
    pub route_length: Option<Summary>,
    pub stretch: Option<Summary>,
    pub transmissions: Option<Summary>,
    /// Mean node count of the topologies used.
    pub nodes: Option<Summary>,
    pub safety_cap_aborts: usize,
    pub duplicate_forwards: usize,
    pub replications: usize,
    pub failed_replications: usize,
}

/// Raw result of one policy on one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationResult {
    pub point: ParameterPoint,
    pub replication: usize,
    pub nodes: usize,
    pub metrics: RunMetrics,
    pub duplicate_forwards: usize,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub records: Vec<MetricsRecord>,
    pub runs: Vec<ReplicationResult>,
    /// (density, replication, reason) of topologies that could not be built.
    pub failures: Vec<(f64, usize, String)>,
}

impl ScenarioReport {
    pub fn record(&self, density: f64, k: u32, policy: Policy) -> Option<&MetricsRecord> {
        self.records
            .iter()
            .find(|r| r.point.density == density && r.point.k == k && r.point.policy == policy)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ExperimentError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        let scenario = self.config.scenario.as_str();
        for r in &self.records {
            let policy = r.point.policy.as_str();
            let density = r.point.density.to_string();
            let k = r.point.k.to_string();
            let mut row = |metric: &str, mean: String, ci: String, n: String| {
                out.write_record([scenario, policy, &density, &k, metric, &mean, &ci, &n])
            };
            let summaries = [
                ("loss", r.loss),
                ("route_length", r.route_length),
                ("stretch", r.stretch),
                ("transmissions", r.transmissions),
                ("nodes", r.nodes),
            ];
            for (metric, s) in summaries {
                match s {
                    Some(s) => row(metric, s.mean.to_string(), s.ci95.map(|c| c.to_string()).unwrap_or_default(), s.n.to_string())?,
                    None => row(metric, String::new(), String::new(), "0".into())?,
                }
            }
            let n = r.replications.to_string();
            row("safety_cap_aborts", r.safety_cap_aborts.to_string(), String::new(), n.clone())?;
            row("duplicate_forwards", r.duplicate_forwards.to_string(), String::new(), n.clone())?;
            if r.failed_replications > 0 {
                row("generation_failed", r.failed_replications.to_string(), String::new(), n)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, ExperimentError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

fn derive_seed(base: u64, point: u64, replication: u64, purpose: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream((point << 40) | (replication << 8) | purpose);
    rng.next_u64()
}

enum Recipe {
    Udg(f64),
    Proxi(f64),
}

fn build_topology(cfg: &ScenarioConfig, recipe: &Recipe, seed: RngSeed) -> Result<Topology, TopologyError> {
    let generator = Generator::new(cfg.n_nodes).with_void(cfg.void()).with_connectivity(cfg.connectivity);
    match *recipe {
        Recipe::Udg(r) => generator.udg(r, seed),
        Recipe::Proxi(m) => Ok(generator.proxigraph(m, cfg.std_fraction, seed)?.topology),
    }
}

/// Runs the whole matrix. Generation failures are recorded per replication
/// and do not abort the run.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport, ExperimentError> {
    cfg.validate()?;
    if let Some(dir) = &cfg.dump_topologies {
        fs::create_dir_all(dir)?;
    }
    let recipes: Vec<Result<Recipe, String>> = cfg
        .densities
        .par_iter()
        .map(|&density| {
            let recipe = match cfg.scenario {
                Scenario::ProxigraphVoid => match cfg.range_calibration {
                    RangeCalibration::NominalRange => udg_radius_for_density(cfg.n_nodes, density, 1.0, None),
                    RangeCalibration::MatchedDegree => {
                        proxigraph_range_for_density(cfg.n_nodes, density, cfg.std_fraction, 1.0, cfg.void())
                    }
                }
                .map(Recipe::Proxi),
                _ => udg_radius_for_density(cfg.n_nodes, density, 1.0, cfg.void()).map(Recipe::Udg),
            };
            recipe.map_err(|e| e.to_string())
        })
        .collect();

    let jobs: Vec<(usize, usize)> =
        (0..cfg.densities.len()).flat_map(|d| (0..cfg.replications).map(move |r| (d, r))).collect();
    let results: Vec<Result<Vec<ReplicationResult>, (f64, usize, String)>> = jobs
        .par_iter()
        .map(|&(di, rep)| {
            let density = cfg.densities[di];
            let fail = |msg: String| (density, rep, msg);
            let recipe = recipes[di].as_ref().map_err(|e| fail(e.clone()))?;
            let topo_seed = RngSeed(derive_seed(cfg.seed, di as u64, rep as u64, 0));
            let topology = build_topology(cfg, recipe, topo_seed).map_err(|e| fail(e.to_string()))?;
            if let Some(dir) = &cfg.dump_topologies {
                let path = dir.join(format!("{}_d{}_r{}.topo", cfg.scenario, density, rep));
                fs::write(&path, topology.to_text()).map_err(|e| fail(format!("{}: {e}", path.display())))?;
            }
            let flow_seed = RngSeed(derive_seed(cfg.seed, di as u64, rep as u64, 1));
            let flows = generate_flows(&topology, cfg.n_flows, flow_seed);
            let mut out = Vec::new();
            for &k in &cfg.ks {
                for &policy in &cfg.policies {
                    let run = run_flows(&topology, &cfg.routing(policy, k), flows.clone(), cfg.packets_per_flow, flow_seed);
                    out.push(ReplicationResult {
                        point: ParameterPoint { density, k, policy },
                        replication: rep,
                        nodes: topology.len(),
                        metrics: run.metrics(),
                        duplicate_forwards: run.duplicate_forwards,
                    });
                }
            }
            log::info!("{} density={density} replication={rep} done", cfg.scenario);
            Ok(out)
        })
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(v) => runs.extend(v),
            Err(f) => {
                log::warn!("generation failed at density {} replication {}: {}", f.0, f.1, f.2);
                failures.push(f);
            }
        }
    }

    let mut records = Vec::new();
    for &density in &cfg.densities {
        let failed = failures.iter().filter(|f| f.0 == density).count();
        for &k in &cfg.ks {
            for &policy in &cfg.policies {
                let point = ParameterPoint { density, k, policy };
                let mine: Vec<&ReplicationResult> = runs.iter().filter(|r| r.point == point).collect();
                let collect = |f: &dyn Fn(&ReplicationResult) -> Option<f64>| -> Option<Summary> {
                    aggregate(&mine.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
                };
                records.push(MetricsRecord {
                    point,
                    loss: collect(&|r| Some(r.metrics.loss)),
                    route_length: collect(&|r| r.metrics.route_length),
                    stretch: collect(&|r| r.metrics.stretch),
                    transmissions: collect(&|r| Some(r.metrics.transmissions)),
                    nodes: collect(&|r| Some(r.nodes as f64)),
                    safety_cap_aborts: mine.iter().map(|r| r.metrics.safety_cap_aborts).sum(),
                    duplicate_forwards: mine.iter().map(|r| r.duplicate_forwards).sum(),
                    replications: mine.len(),
                    failed_replications: failed,
                });
            }
        }
    }
    Ok(ScenarioReport { config: cfg.clone(), records, runs, failures })
}

/// Per-replication values of one metric at one point, for paired analyses.
pub fn samples_by_replication(
    report: &ScenarioReport,
    point: ParameterPoint,
    metric: impl Fn(&RunMetrics) -> Option<f64>,
) -> BTreeMap<usize, f64> {
    report
        .runs
        .iter()
        .filter(|r| r.point == point)
        .filter_map(|r| metric(&r.metrics).map(|v| (r.replication, v)))
        .collect()
}
