//! Report rows, the CSV/JSON writers and the policy comparison table.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use coopcache_core::{DiscoveryPolicy, Level, MetricsAccumulator};

/// One run of one sweep combination. Field order is the CSV column order.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub policy: String,
    pub seed: u64,
    pub cache_capacity: u32,
    pub requests_issued: u64,
    pub requests_failed: u64,
    pub hits_local: u64,
    pub hits_prereq: u64,
    pub hits_home_cluster: u64,
    pub hits_path_local: u64,
    pub hits_path_prereq: u64,
    pub hits_path_cluster: u64,
    pub hits_server: u64,
    pub total_hops: u64,
    pub total_control_messages: u64,
    pub total_data_messages: u64,
    pub hit_ratio: f64,
    pub avg_hops: f64,
    pub avg_messages_per_request: f64,
    /// hops -> count; summary.json only.
    pub latency_hops: Vec<(u64, u64)>,
}

pub const CSV_HEADER: &str = "policy,seed,cache_capacity,requests_issued,requests_failed,\
hits_local,hits_prereq,hits_home_cluster,hits_path_local,hits_path_prereq,hits_path_cluster,\
hits_server,total_hops,total_control_messages,total_data_messages,hit_ratio,avg_hops,\
avg_messages_per_request";

pub fn row_from_metrics(
    policy: DiscoveryPolicy,
    seed: u64,
    cache_capacity: u32,
    m: &MetricsAccumulator,
) -> ReportRow {
    let issued = m.requests_issued;
    let div = |n: u64| {
        if issued == 0 {
            0.0
        } else {
            n as f64 / issued as f64
        }
    };
    ReportRow {
        policy: policy.name().to_string(),
        seed,
        cache_capacity,
        requests_issued: issued,
        requests_failed: m.requests_failed,
        hits_local: m.hits(Level::LocalCache),
        hits_prereq: m.hits(Level::PreReq),
        hits_home_cluster: m.hits(Level::HomeCluster),
        hits_path_local: m.hits(Level::RoutingPathLocal),
        hits_path_prereq: m.hits(Level::RoutingPathPreReq),
        hits_path_cluster: m.hits(Level::RoutingPathCluster),
        hits_server: m.hits(Level::Server),
        total_hops: m.total_hops,
        total_control_messages: m.total_control_messages,
        total_data_messages: m.total_data_messages,
        hit_ratio: m.hit_ratio(),
        avg_hops: div(m.total_hops),
        avg_messages_per_request: div(m.total_control_messages + m.total_data_messages),
        latency_hops: m.latency_hops.iter().map(|(h, c)| (*h, *c)).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.policy,
                r.seed,
                r.cache_capacity,
                r.requests_issued,
                r.requests_failed,
                r.hits_local,
                r.hits_prereq,
                r.hits_home_cluster,
                r.hits_path_local,
                r.hits_path_prereq,
                r.hits_path_cluster,
                r.hits_server,
                r.total_hops,
                r.total_control_messages,
                r.total_data_messages,
                fmt_f64(r.hit_ratio),
                fmt_f64(r.avg_hops),
                fmt_f64(r.avg_messages_per_request),
            ));
        }
        out
    }

    pub fn to_summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.rows).expect("rows serialize");
        s.push('\n');
        s
    }

    /// Every derived ratio must be recomputable from the raw counts in
    /// its own row.
    pub fn validate(&self) -> Result<(), String> {
        for (i, r) in self.rows.iter().enumerate() {
            let served: u64 = r.hits_local
                + r.hits_prereq
                + r.hits_home_cluster
                + r.hits_path_local
                + r.hits_path_prereq
                + r.hits_path_cluster
                + r.hits_server;
            if served + r.requests_failed != r.requests_issued {
                return Err(format!("row {i}: level counts do not partition requests"));
            }
            let issued = r.requests_issued;
            let expect_ratio = if issued == 0 {
                0.0
            } else {
                1.0 - (r.hits_server + r.requests_failed) as f64 / issued as f64
            };
            let expect_hops = if issued == 0 {
                0.0
            } else {
                r.total_hops as f64 / issued as f64
            };
            let expect_msgs = if issued == 0 {
                0.0
            } else {
                (r.total_control_messages + r.total_data_messages) as f64 / issued as f64
            };
            for (name, got, expect) in [
                ("hit_ratio", r.hit_ratio, expect_ratio),
                ("avg_hops", r.avg_hops, expect_hops),
                (
                    "avg_messages_per_request",
                    r.avg_messages_per_request,
                    expect_msgs,
                ),
            ] {
                if (got - expect).abs() > 1e-9 {
                    return Err(format!("row {i}: {name} does not match its raw counts"));
                }
            }
        }
        Ok(())
    }
}

/// Parsed back from report.csv; only the fields compare needs.
#[derive(Clone, Debug)]
struct ParsedRow {
    policy: String,
    seed: u64,
    cache_capacity: u32,
    hit_ratio: f64,
    avg_hops: f64,
    avg_messages: f64,
}

fn parse_report_csv(text: &str) -> Result<Vec<ParsedRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty report"))?;
    if header != CSV_HEADER {
        bail!("unexpected report header; was this file produced by `coopcache run`?");
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 18 {
            bail!("row {}: expected 18 fields, got {}", i + 1, f.len());
        }
        rows.push(ParsedRow {
            policy: f[0].to_string(),
            seed: f[1]
                .parse()
                .with_context(|| format!("row {}: seed", i + 1))?,
            cache_capacity: f[2]
                .parse()
                .with_context(|| format!("row {}: cache_capacity", i + 1))?,
            hit_ratio: f[15]
                .parse()
                .with_context(|| format!("row {}: hit_ratio", i + 1))?,
            avg_hops: f[16]
                .parse()
                .with_context(|| format!("row {}: avg_hops", i + 1))?,
            avg_messages: f[17]
                .parse()
                .with_context(|| format!("row {}: avg_messages_per_request", i + 1))?,
        });
    }
    Ok(rows)
}

/// Per-seed paired deltas of hit ratio, average hops and average messages
/// against the first policy in the report, then means across seeds.
pub fn compare_report(path: &Path) -> Result<String> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let rows = parse_report_csv(&text)?;
    if rows.is_empty() {
        bail!("report has no rows");
    }

    // policies in order of first appearance
    let mut policies: Vec<String> = Vec::new();
    for r in &rows {
        if !policies.contains(&r.policy) {
            policies.push(r.policy.clone());
        }
    }
    if policies.len() < 2 && rows.len() < 2 {
        bail!("need at least two runs to compare");
    }

    // key: (seed, capacity)
    let mut by_policy: BTreeMap<String, BTreeMap<(u64, u32), ParsedRow>> = BTreeMap::new();
    for r in &rows {
        by_policy
            .entry(r.policy.clone())
            .or_default()
            .insert((r.seed, r.cache_capacity), r.clone());
    }

    let baseline = &policies[0];
    let baseline_keys: Vec<(u64, u32)> = by_policy[baseline].keys().copied().collect();

    let mut missing: Vec<String> = Vec::new();
    for p in &policies {
        for key in &baseline_keys {
            if !by_policy[p].contains_key(key) {
                missing.push(format!("({p}, seed {}, capacity {})", key.0, key.1));
            }
        }
        for key in by_policy[p].keys() {
            if !baseline_keys.contains(key) {
                missing.push(format!("({baseline}, seed {}, capacity {})", key.0, key.1));
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        bail!(
            "mismatched seed sets; missing pairs: {}",
            missing.join(", ")
        );
    }

    let mut out = String::new();
    out.push_str(&format!("baseline: {baseline}\n"));
    out.push_str("per-run deltas vs baseline (hit_ratio, avg_hops, avg_messages):\n");
    for key in &baseline_keys {
        let base = &by_policy[baseline][key];
        for p in &policies {
            let r = &by_policy[p][key];
            out.push_str(&format!(
                "  seed {} cap {} {:>10}: {:+.6} {:+.6} {:+.6}\n",
                key.0,
                key.1,
                p,
                r.hit_ratio - base.hit_ratio,
                r.avg_hops - base.avg_hops,
                r.avg_messages - base.avg_messages,
            ));
        }
    }

    out.push_str("means across runs (hit_ratio, avg_hops, avg_messages, deltas vs baseline):\n");
    let n = baseline_keys.len() as f64;
    let mean = |p: &String, f: fn(&ParsedRow) -> f64| -> f64 {
        baseline_keys
            .iter()
            .map(|k| f(&by_policy[p][k]))
            .sum::<f64>()
            / n
    };
    let base_means = (
        mean(baseline, |r| r.hit_ratio),
        mean(baseline, |r| r.avg_hops),
        mean(baseline, |r| r.avg_messages),
    );
    for p in &policies {
        let m = (
            mean(p, |r| r.hit_ratio),
            mean(p, |r| r.avg_hops),
            mean(p, |r| r.avg_messages),
        );
        out.push_str(&format!(
            "  {:>10}: {:.6} {:.6} {:.6}  ({:+.6} {:+.6} {:+.6})\n",
            p,
            m.0,
            m.1,
            m.2,
            m.0 - base_means.0,
            m.1 - base_means.1,
            m.2 - base_means.2,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics_with(server: u64, local: u64, failed: u64) -> MetricsAccumulator {
        use coopcache_core::{DataId, NodeId, RequestOutcome};
        let mut m = MetricsAccumulator::default();
        let mk = |level: Level| {
            let served = !matches!(level, Level::LocalCache | Level::Failed);
            RequestOutcome {
                requester: NodeId(1),
                data_id: DataId(0),
                served_by: level,
                serving_node: None,
                hops_traveled: if served { 2 } else { 0 },
                control_messages: 1,
                data_messages: if served { 1 } else { 0 },
            }
        };
        for _ in 0..server {
            m.record_outcome(&mk(Level::Server));
        }
        for _ in 0..local {
            m.record_outcome(&mk(Level::LocalCache));
        }
        for _ in 0..failed {
            m.record_outcome(&mk(Level::Failed));
        }
        m
    }

    #[test]
    fn csv_round_trips_through_the_parser() {
        let m = metrics_with(3, 5, 1);
        let report = Report {
            rows: vec![row_from_metrics(DiscoveryPolicy::NC, 7, 100, &m)],
        };
        report.validate().unwrap();
        let parsed = parse_report_csv(&report.to_csv()).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].policy, "NC");
        assert_eq!(parsed[0].seed, 7);
        assert!((parsed[0].hit_ratio - m.hit_ratio()).abs() < 1e-6);
    }

    #[test]
    fn validate_rejects_tampered_ratios() {
        let m = metrics_with(2, 2, 0);
        let mut row = row_from_metrics(DiscoveryPolicy::NC, 1, 10, &m);
        row.hit_ratio += 0.25;
        let report = Report { rows: vec![row] };
        assert!(report.validate().is_err());
    }
}
