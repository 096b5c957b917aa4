//! coopcache: run cooperative cache discovery scenarios and compare
//! policies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coopcache_cli::report::compare_report;
use coopcache_cli::scenario::{run_scenario, RunOptions, ScenarioError};

const CSV_COLUMNS: &str = "policy, seed, cache_capacity, requests_issued, requests_failed, \
hits_local, hits_prereq, hits_home_cluster, hits_path_local, hits_path_prereq, \
hits_path_cluster, hits_server, total_hops, total_control_messages, total_data_messages, \
hit_ratio, avg_hops, avg_messages_per_request";

#[derive(Parser)]
#[command(
    name = "coopcache",
    about = "Deterministic simulator of cooperative cache discovery in mobile ad-hoc networks",
    long_about = None,
    after_help = concat!(
        "Scenario files are JSON. Required fields: world_width, world_height, \
         transmission_range, node_count, catalog_size, cache_capacity, prereq_capacity, \
         ticks, request_rate, zipf_exponent, lease_duration, seed, policy \
         (\"NC\" | \"HopByHop\" | \"Hybrid\").\n\
         Optional: election_weights {w1..w5}, min_speed, max_speed, pause_ticks, \
         threshold_ticks, item_size_min/max, item_ttl_min/max, battery_costs, \
         server_x, server_y, failures [[tick, node]...], arrivals [[tick, node]...], \
         sweep {policies, seeds, cache_capacities}.\n\n\
         Exit codes: 0 ok, 2 scenario parse/validation error, 3 run invariant violation."
    )
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (every sweep combination) and write report.csv,
    /// summary.json and per-run trace files into the output directory.
    #[command(after_help = concat!(
        "report.csv columns, in order:\n  ",
        "policy, seed, cache_capacity, requests_issued, requests_failed, \
         hits_local, hits_prereq, hits_home_cluster, hits_path_local, hits_path_prereq, \
         hits_path_cluster, hits_server, total_hops, total_control_messages, \
         total_data_messages, hit_ratio, avg_hops, avg_messages_per_request\n\
         A single-run scenario writes trace.jsonl; sweeps write \
         trace_<policy>_s<seed>_c<capacity>.jsonl per run."
    ))]
    Run {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Replace the scenario's seed (and any seed sweep) with one seed.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Trace emission: on (default) or off.
        #[arg(long, default_value = "on", value_parser = ["on", "off"])]
        trace: String,
    },
    /// Summarize a report.csv: per-seed paired deltas against the first
    /// policy listed, then means across seeds.
    Compare {
        /// report.csv produced by `run`.
        report: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed_override,
            trace,
        } => {
            let options = RunOptions {
                seed_override,
                trace: trace == "on",
            };
            match run_scenario(&scenario, &out, &options) {
                Ok(report) => {
                    println!(
                        "wrote {} run(s) to {} (columns: {})",
                        report.rows.len(),
                        out.display(),
                        CSV_COLUMNS
                    );
                    ExitCode::SUCCESS
                }
                Err(ScenarioError::Input(msg)) => {
                    eprintln!("scenario error: {msg}");
                    ExitCode::from(2)
                }
                Err(ScenarioError::Invariant(msg)) => {
                    eprintln!("invariant violation: {msg}");
                    ExitCode::from(3)
                }
                Err(ScenarioError::Io(e)) => {
                    eprintln!("io error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Compare { report } => match compare_report(&report) {
            Ok(table) => {
                print!("{table}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("compare error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
