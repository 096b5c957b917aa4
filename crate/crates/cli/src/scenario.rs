//! Scenario files: a full `SimConfig` plus optional failure/arrival
//! schedules and sweep axes, and the runner that executes every sweep
//! combination and writes the report artifacts.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use coopcache_core::engine::{run, Schedule};
use coopcache_core::{validate_config, DiscoveryPolicy, NodeId, SimConfig};

use crate::report::{row_from_metrics, Report};
use crate::trace_out::render_events;

#[derive(Clone, Debug, Default, Deserialize)]
pub struct SweepAxes {
    #[serde(default)]
    pub policies: Option<Vec<DiscoveryPolicy>>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub cache_capacities: Option<Vec<u32>>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ScenarioFile {
    #[serde(flatten)]
    pub config: SimConfig,
    /// `(tick, node)` pairs; the node silently disappears at that tick.
    #[serde(default)]
    pub failures: Vec<(u64, u32)>,
    /// `(tick, node)` pairs; a fresh node spawns at that tick.
    #[serde(default)]
    pub arrivals: Vec<(u64, u32)>,
    #[serde(default)]
    pub sweep: Option<SweepAxes>,
}

#[derive(Debug)]
pub enum ScenarioError {
    /// Unparseable or invalid input (exit 2).
    Input(String),
    /// A run violated an internal invariant (exit 3).
    Invariant(String),
    Io(std::io::Error),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Input(m) => write!(f, "{m}"),
            ScenarioError::Invariant(m) => write!(f, "{m}"),
            ScenarioError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        ScenarioError::Io(e)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub seed_override: Option<u64>,
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed_override: None,
            trace: true,
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let scenario: ScenarioFile =
        serde_json::from_str(text).map_err(|e| ScenarioError::Input(e.to_string()))?;
    for (_, node) in scenario.failures.iter().chain(scenario.arrivals.iter()) {
        if *node == 0 {
            return Err(ScenarioError::Input(String::from(
                "failures/arrivals: node id 0 is the server and cannot be scheduled",
            )));
        }
    }
    if let Some(sweep) = &scenario.sweep {
        for (name, empty) in [
            (
                "sweep.policies",
                sweep.policies.as_ref().is_some_and(|v| v.is_empty()),
            ),
            (
                "sweep.seeds",
                sweep.seeds.as_ref().is_some_and(|v| v.is_empty()),
            ),
            (
                "sweep.cache_capacities",
                sweep
                    .cache_capacities
                    .as_ref()
                    .is_some_and(|v| v.is_empty()),
            ),
        ] {
            if empty {
                return Err(ScenarioError::Input(format!("{name} must not be empty")));
            }
        }
    }
    Ok(scenario)
}

/// The per-run configurations of every sweep combination, in a fixed
/// order: policies, then seeds, then capacities, each as listed.
pub fn expand_sweep(scenario: &ScenarioFile, options: &RunOptions) -> Vec<SimConfig> {
    let sweep = scenario.sweep.clone().unwrap_or_default();
    let policies = sweep
        .policies
        .unwrap_or_else(|| vec![scenario.config.policy]);
    let seeds = match options.seed_override {
        Some(s) => vec![s],
        None => sweep.seeds.unwrap_or_else(|| vec![scenario.config.seed]),
    };
    let capacities = sweep
        .cache_capacities
        .unwrap_or_else(|| vec![scenario.config.cache_capacity]);

    let mut configs = Vec::new();
    for policy in &policies {
        for seed in &seeds {
            for capacity in &capacities {
                let mut cfg = scenario.config.clone();
                cfg.policy = *policy;
                cfg.seed = *seed;
                cfg.cache_capacity = *capacity;
                configs.push(cfg);
            }
        }
    }
    configs
}

fn trace_file_name(cfg: &SimConfig, single: bool) -> String {
    if single {
        String::from("trace.jsonl")
    } else {
        format!(
            "trace_{}_s{}_c{}.jsonl",
            cfg.policy, cfg.seed, cfg.cache_capacity
        )
    }
}

/// Execute every sweep combination and write `report.csv`,
/// `summary.json` and trace files into `out_dir`.
pub fn run_scenario(
    path: &Path,
    out_dir: &Path,
    options: &RunOptions,
) -> Result<Report, ScenarioError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ScenarioError::Input(format!("cannot read {}: {e}", path.display())))?;
    let scenario = parse_scenario(&text)?;
    let configs = expand_sweep(&scenario, options);

    for cfg in &configs {
        let violations = validate_config(cfg);
        if !violations.is_empty() {
            return Err(ScenarioError::Input(format!(
                "invalid configuration (policy {}, seed {}): {}",
                cfg.policy,
                cfg.seed,
                violations.join("; ")
            )));
        }
    }

    let schedule = Schedule {
        failures: scenario
            .failures
            .iter()
            .map(|(t, n)| (*t, NodeId(*n)))
            .collect(),
        arrivals: scenario
            .arrivals
            .iter()
            .map(|(t, n)| (*t, NodeId(*n)))
            .collect(),
    };

    fs::create_dir_all(out_dir)?;
    let single = configs.len() == 1;
    let mut report = Report { rows: Vec::new() };

    for cfg in &configs {
        let result = run(cfg, &schedule, options.trace).map_err(|v| {
            ScenarioError::Input(format!("invalid configuration: {}", v.join("; ")))
        })?;
        if !result.metrics.conservation_holds() {
            return Err(ScenarioError::Invariant(format!(
                "hits_by_level plus failures do not partition requests_issued \
                 (policy {}, seed {})",
                cfg.policy, cfg.seed
            )));
        }
        if options.trace {
            let name = trace_file_name(cfg, single);
            fs::write(out_dir.join(name), render_events(&result.trace))?;
        }
        report.rows.push(row_from_metrics(
            cfg.policy,
            cfg.seed,
            cfg.cache_capacity,
            &result.metrics,
        ));
    }

    report.validate().map_err(ScenarioError::Invariant)?;

    fs::write(out_dir.join("report.csv"), report.to_csv())?;
    fs::write(out_dir.join("summary.json"), report.to_summary_json())?;
    Ok(report)
}
