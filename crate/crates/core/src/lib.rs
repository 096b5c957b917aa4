//! Simulation core for cooperative cache discovery in mobile ad-hoc networks.
//!
//! The crate models a flat world of mobile nodes with unit-disk radio
//! connectivity, grid clustering with an elected cache-state head per
//! cluster, per-node LRU caches with TTL expiry, and a request-history
//! (PreReq) table that supplies location hints. On top of that state it
//! implements three request-resolution policies:
//!
//! * `NC` — local cache, else the origin server;
//! * `HopByHop` — nodes on the forwarding route may serve from cache;
//! * `Hybrid` — local cache, PreReq hints, home-cluster head, then the
//!   routing path (with per-relay cache/PreReq/head checks), then the
//!   server.
//!
//! Everything is deterministic: time is integer ticks, all randomness
//! flows from seed-derived ChaCha streams, and all collections iterate in
//! key order. The crate is `no_std` (alloc required); IO, file formats and
//! the CLI live in the companion `coopcache-cli` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod cache;
pub mod cluster;
pub mod discovery;
pub mod election;
pub mod engine;
pub mod metrics;
pub mod mobility;
pub mod model;
pub mod prereq;
pub mod rng;
pub mod topology;
pub mod trace;
pub mod world;

pub use discovery::{DiscoveryPolicy, Level, RequestOutcome};
pub use engine::{RunResult, Schedule, Simulation};
pub use metrics::MetricsAccumulator;
pub use model::{validate_config, DataId, DataItem, NodeId, Position, SimConfig, Weights};
pub use world::{World, WorldBuilder};
