//! Shared identifiers, physical quantities and run configuration.
//!
//! All quantities are abstract simulation units: lengths are plain `f64`
//! units, time is integer ticks, cache space is integer capacity units.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Deserialize;

use crate::discovery::DiscoveryPolicy;
use crate::election::BatteryCosts;

/// Identifier of a node, unique for the lifetime of a run and never reused.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

/// Identifier of a data item; indexes the server's catalog.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Deserialize)]
#[serde(transparent)]
pub struct DataId(pub u32);

/// A point in the world rectangle.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }
}

/// Euclidean distance between two positions.
pub fn distance(a: Position, b: Position) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    libm::sqrt(dx * dx + dy * dy)
}

/// A cacheable unit of content. `size` is in cache-capacity units, `ttl`
/// is the validity duration in ticks assigned by the data server.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DataItem {
    pub id: DataId,
    pub size: u32,
    pub ttl: u64,
}

/// Weighing factors of the head-election formula. Must sum to 1.
#[derive(Clone, Copy, PartialEq, Debug, Deserialize)]
pub struct Weights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub w5: f64,
}

impl Weights {
    pub fn sum(&self) -> f64 {
        self.w1 + self.w2 + self.w3 + self.w4 + self.w5
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            w1: 0.5,
            w2: 0.3,
            w3: 0.1,
            w4: 0.05,
            w5: 0.05,
        }
    }
}

/// Full configuration of a single run. Loadable from a JSON scenario file
/// with exactly these snake_case field names.
#[derive(Clone, PartialEq, Debug, Deserialize)]
pub struct SimConfig {
    pub world_width: f64,
    pub world_height: f64,
    /// Radio transmission range `r`; two nodes are linked iff their
    /// distance is at most `r`.
    pub transmission_range: f64,
    pub node_count: u32,
    pub catalog_size: u32,
    /// Local cache capacity per node, in capacity units.
    pub cache_capacity: u32,
    /// Maximum number of PreReq entries per node.
    pub prereq_capacity: u32,
    pub ticks: u64,
    /// Mean number of requests issued per tick (Poisson).
    pub request_rate: f64,
    pub zipf_exponent: f64,
    #[serde(default)]
    pub election_weights: Weights,
    /// Lease duration in ticks for head/member failure detection.
    pub lease_duration: u64,
    pub seed: u64,
    pub policy: DiscoveryPolicy,

    #[serde(default = "default_min_speed")]
    pub min_speed: f64,
    #[serde(default = "default_max_speed")]
    pub max_speed: f64,
    #[serde(default)]
    pub pause_ticks: u64,
    /// Ticks a node entering an empty cluster waits for a reply before
    /// claiming headship.
    #[serde(default = "default_threshold_ticks")]
    pub threshold_ticks: u64,

    /// Catalog item sizes are drawn uniformly from this range at init.
    #[serde(default = "default_one_u32")]
    pub item_size_min: u32,
    #[serde(default = "default_one_u32")]
    pub item_size_max: u32,
    /// Server-assigned TTLs are drawn uniformly from this range at init.
    #[serde(default = "default_ttl")]
    pub item_ttl_min: u64,
    #[serde(default = "default_ttl")]
    pub item_ttl_max: u64,

    #[serde(default)]
    pub battery_costs: BatteryCosts,

    /// The stationary data server sits at this position.
    #[serde(default)]
    pub server_x: f64,
    #[serde(default)]
    pub server_y: f64,
}

fn default_min_speed() -> f64 {
    0.5
}

fn default_max_speed() -> f64 {
    2.0
}

fn default_threshold_ticks() -> u64 {
    1
}

fn default_one_u32() -> u32 {
    1
}

fn default_ttl() -> u64 {
    100
}

impl SimConfig {
    /// A small, valid configuration; useful as a test baseline.
    pub fn example() -> Self {
        SimConfig {
            world_width: 500.0,
            world_height: 500.0,
            transmission_range: 100.0,
            node_count: 20,
            catalog_size: 50,
            cache_capacity: 10,
            prereq_capacity: 10,
            ticks: 100,
            request_rate: 0.5,
            zipf_exponent: 0.8,
            election_weights: Weights::default(),
            lease_duration: 20,
            seed: 1,
            policy: DiscoveryPolicy::Hybrid,
            min_speed: default_min_speed(),
            max_speed: default_max_speed(),
            pause_ticks: 0,
            threshold_ticks: 1,
            item_size_min: 1,
            item_size_max: 1,
            item_ttl_min: 100,
            item_ttl_max: 100,
            battery_costs: BatteryCosts::default(),
            server_x: 0.0,
            server_y: 0.0,
        }
    }
}

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Checks every configuration invariant and returns one description per
/// violation. An empty result means the configuration is valid.
// Negated comparisons are load-bearing here: NaN fields must register as
// violations, and `!(x > 0.0)` is true for NaN where `x <= 0.0` is not.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_config(cfg: &SimConfig) -> Vec<String> {
    let mut violations = Vec::new();

    if !(cfg.world_width > 0.0) || !cfg.world_width.is_finite() {
        violations.push(String::from("world_width must be > 0 and finite"));
    }
    if !(cfg.world_height > 0.0) || !cfg.world_height.is_finite() {
        violations.push(String::from("world_height must be > 0 and finite"));
    }
    if !(cfg.transmission_range > 0.0) {
        violations.push(String::from("transmission_range must be > 0"));
    }
    if cfg.node_count < 1 {
        violations.push(String::from("node_count must be >= 1"));
    }
    if cfg.catalog_size < 1 {
        violations.push(String::from("catalog_size must be >= 1"));
    }
    if cfg.cache_capacity < 1 {
        violations.push(String::from("cache_capacity must be >= 1"));
    }
    if cfg.prereq_capacity < 1 {
        violations.push(String::from("prereq_capacity must be >= 1"));
    }
    if !(cfg.request_rate >= 0.0) || !cfg.request_rate.is_finite() {
        violations.push(String::from("request_rate must be >= 0 and finite"));
    }
    if !(cfg.zipf_exponent >= 0.0) || !cfg.zipf_exponent.is_finite() {
        violations.push(String::from("zipf_exponent must be >= 0 and finite"));
    }

    let w = &cfg.election_weights;
    if !(w.w1 >= 0.0 && w.w2 >= 0.0 && w.w3 >= 0.0 && w.w4 >= 0.0 && w.w5 >= 0.0) {
        violations.push(String::from("election_weights must all be non-negative"));
    }
    let sum = w.sum();
    if !(libm::fabs(sum - 1.0) <= WEIGHT_SUM_TOLERANCE) {
        violations.push(format!("election_weights must sum to 1 (got {sum})"));
    }

    if cfg.lease_duration < 1 {
        violations.push(String::from("lease_duration must be >= 1"));
    }
    if !(cfg.min_speed >= 0.0) {
        violations.push(String::from("min_speed must be >= 0"));
    }
    if !(cfg.max_speed >= cfg.min_speed) || !cfg.max_speed.is_finite() {
        violations.push(String::from("max_speed must be >= min_speed and finite"));
    }
    if cfg.threshold_ticks < 1 {
        violations.push(String::from("threshold_ticks must be >= 1"));
    }
    if cfg.item_size_min < 1 {
        violations.push(String::from("item_size_min must be >= 1"));
    }
    if cfg.item_size_max < cfg.item_size_min {
        violations.push(String::from("item_size_max must be >= item_size_min"));
    }
    if cfg.item_ttl_min < 1 {
        violations.push(String::from("item_ttl_min must be >= 1"));
    }
    if cfg.item_ttl_max < cfg.item_ttl_min {
        violations.push(String::from("item_ttl_max must be >= item_ttl_min"));
    }

    let b = &cfg.battery_costs;
    if !(b.idle_tick >= 0.0
        && b.message_sent >= 0.0
        && b.message_received >= 0.0
        && b.head_tick >= 0.0)
    {
        violations.push(String::from("battery_costs must all be non-negative"));
    }
    if !(b.head_tick > b.idle_tick) {
        violations.push(String::from(
            "battery_costs.head_tick must exceed battery_costs.idle_tick",
        ));
    }

    if !(cfg.server_x >= 0.0 && cfg.server_x <= cfg.world_width) {
        violations.push(String::from("server_x must lie within [0, world_width]"));
    }
    if !(cfg.server_y >= 0.0 && cfg.server_y <= cfg.world_height) {
        violations.push(String::from("server_y must lie within [0, world_height]"));
    }

    violations
}
