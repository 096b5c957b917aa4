//! Run-level counters: request totals, per-level hits, message volumes
//! and the hop-latency histogram.

use alloc::collections::BTreeMap;

use crate::discovery::{Level, RequestOutcome};

#[derive(Clone, PartialEq, Debug, Default)]
pub struct MetricsAccumulator {
    pub requests_issued: u64,
    pub requests_failed: u64,
    /// Counts per serving level; `Failed` outcomes go to `requests_failed`
    /// instead, so the two partitions sum to `requests_issued`.
    pub hits_by_level: BTreeMap<Level, u64>,
    pub total_hops: u64,
    /// Control traffic: request, lookup, ack, confirm and election/
    /// maintenance messages, one count per hop traveled.
    pub total_control_messages: u64,
    /// Data-bearing traffic, one count per hop traveled.
    pub total_data_messages: u64,
    /// Distribution of `hops_traveled` over all requests.
    pub latency_hops: BTreeMap<u64, u64>,
}

impl MetricsAccumulator {
    pub fn record_outcome(&mut self, outcome: &RequestOutcome) {
        debug_assert!(
            outcome.served_by != Level::LocalCache || outcome.hops_traveled == 0,
            "local hits travel no hops"
        );
        debug_assert!(
            outcome.served_by != Level::Failed || outcome.data_messages == 0,
            "failed requests carry no data"
        );
        self.requests_issued += 1;
        if outcome.served_by == Level::Failed {
            self.requests_failed += 1;
        } else {
            *self.hits_by_level.entry(outcome.served_by).or_insert(0) += 1;
        }
        self.total_hops += outcome.hops_traveled;
        self.total_control_messages += outcome.control_messages;
        self.total_data_messages += outcome.data_messages;
        *self.latency_hops.entry(outcome.hops_traveled).or_insert(0) += 1;
    }

    /// Maintenance traffic outside any single request.
    pub fn add_protocol_control(&mut self, messages: u64) {
        self.total_control_messages += messages;
    }

    pub fn add_protocol_data(&mut self, messages: u64) {
        self.total_data_messages += messages;
    }

    pub fn hits(&self, level: Level) -> u64 {
        self.hits_by_level.get(&level).copied().unwrap_or(0)
    }

    /// Served levels plus failures must partition the issued requests.
    pub fn conservation_holds(&self) -> bool {
        let served: u64 = self.hits_by_level.values().sum();
        served + self.requests_failed == self.requests_issued
    }

    /// Fraction of requests answered by any cache level (not the server,
    /// not failed).
    pub fn hit_ratio(&self) -> f64 {
        if self.requests_issued == 0 {
            return 0.0;
        }
        let non_hits = self.hits(Level::Server) + self.requests_failed;
        1.0 - non_hits as f64 / self.requests_issued as f64
    }
}
