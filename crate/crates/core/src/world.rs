//! Mutable simulation state: node states, cluster records, the catalog,
//! the topology snapshot of the current tick, metrics and the trace sink.
//!
//! The engine drives this state tick by tick; the discovery resolvers
//! mutate it while answering one request. `WorldBuilder` constructs fully
//! specified worlds for tests and experiments.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha12Rng;

use crate::cache::LocalCache;
use crate::cluster::{ClusterCacheStateTable, LeaseTimer};
use crate::discovery::RequestOutcome;
use crate::election::NodeMetrics;
use crate::metrics::MetricsAccumulator;
use crate::mobility::{mobility_metric, MobilityParams, SpeedHistory, WaypointState};
use crate::model::{DataId, DataItem, NodeId, Position, SimConfig};
use crate::prereq::{InvalidateEffect, PreReqTable, RecordEffect};
use crate::rng::{derive_stream, uniform_u64_inclusive, StreamDomain, ZipfSampler};
use crate::topology::{cluster_of, shortest_path, ClusterId, PathResult, TopologySnapshot};
use crate::trace::{PreReqOp, TraceEvent, TraceSink};

/// The stationary data server. It holds the whole catalog, never moves
/// and takes part in routing, but it is not a cluster member and has no
/// battery budget.
pub const SERVER_ID: NodeId = NodeId(0);

#[derive(Clone, PartialEq, Debug)]
pub struct NodeState {
    pub waypoint: WaypointState,
    pub history: SpeedHistory,
    pub cache: LocalCache,
    pub prereq: PreReqTable,
    pub cluster: ClusterId,
    /// The head this node believes in; `None` while headless (freshly
    /// entered an empty cluster).
    pub head: Option<NodeId>,
    /// This node's failure-detection lease on its head.
    pub head_lease: Option<LeaseTimer>,
    pub last_sent_to_head: u64,
    /// Tick at which this node claims headship of its cluster unless a
    /// head appears first.
    pub pending_claim: Option<u64>,
    /// Battery power consumed so far.
    pub battery: f64,
    pub(crate) rng: ChaCha12Rng,
}

impl NodeState {
    pub fn position(&self) -> Position {
        self.waypoint.current
    }
}

/// Per-cluster protocol state owned by the current head.
#[derive(Clone, PartialEq, Debug)]
pub struct ClusterRecord {
    pub head: NodeId,
    pub table: ClusterCacheStateTable,
    /// The head's leases on its members.
    pub member_leases: BTreeMap<NodeId, LeaseTimer>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct World {
    pub cfg: SimConfig,
    pub tick: u64,
    pub(crate) nodes: BTreeMap<NodeId, NodeState>,
    pub(crate) clusters: BTreeMap<ClusterId, ClusterRecord>,
    catalog: Vec<DataItem>,
    snapshot: TopologySnapshot,
    pub(crate) metrics: MetricsAccumulator,
    pub(crate) trace: TraceSink,
    pub(crate) workload_rng: ChaCha12Rng,
    pub(crate) zipf: ZipfSampler,
}

impl World {
    /// Assemble a world from explicit node placements. Clusters are not
    /// formed here; call [`World::bootstrap_clusters`] (the builder and
    /// the engine do).
    pub(crate) fn from_parts(
        cfg: SimConfig,
        placements: BTreeMap<NodeId, Position>,
        catalog_override: Option<Vec<DataItem>>,
        trace_enabled: bool,
    ) -> World {
        assert!(
            !placements.contains_key(&SERVER_ID),
            "node id 0 is reserved for the server"
        );
        let catalog = catalog_override.unwrap_or_else(|| generate_catalog(&cfg));
        let grid = crate::topology::grid_size(cfg.transmission_range);

        let nodes: BTreeMap<NodeId, NodeState> = placements
            .iter()
            .map(|(id, pos)| {
                (
                    *id,
                    NodeState {
                        waypoint: WaypointState::at(*pos),
                        history: SpeedHistory::starting_at(*pos),
                        cache: LocalCache::new(cfg.cache_capacity),
                        prereq: PreReqTable::new(cfg.prereq_capacity),
                        cluster: cluster_of(*pos, grid),
                        head: None,
                        head_lease: None,
                        last_sent_to_head: 0,
                        pending_claim: None,
                        battery: 0.0,
                        rng: derive_stream(cfg.seed, StreamDomain::NodeMobility, id.0 as u64),
                    },
                )
            })
            .collect();

        let mut positions: BTreeMap<NodeId, Position> =
            placements.iter().map(|(id, p)| (*id, *p)).collect();
        positions.insert(SERVER_ID, Position::new(cfg.server_x, cfg.server_y));
        let snapshot = TopologySnapshot::new(positions, cfg.transmission_range, SERVER_ID);

        let workload_rng = derive_stream(cfg.seed, StreamDomain::Workload, 0);
        let zipf = ZipfSampler::new(cfg.catalog_size, cfg.zipf_exponent);

        World {
            cfg,
            tick: 0,
            nodes,
            clusters: BTreeMap::new(),
            catalog,
            snapshot,
            metrics: MetricsAccumulator::default(),
            trace: TraceSink::new(trace_enabled),
            workload_rng,
            zipf,
        }
    }

    pub fn snapshot(&self) -> &TopologySnapshot {
        &self.snapshot
    }

    pub(crate) fn rebuild_snapshot(&mut self) {
        let mut positions: BTreeMap<NodeId, Position> = self
            .nodes
            .iter()
            .map(|(id, n)| (*id, n.position()))
            .collect();
        positions.insert(
            SERVER_ID,
            Position::new(self.cfg.server_x, self.cfg.server_y),
        );
        self.snapshot = TopologySnapshot::new(positions, self.cfg.transmission_range, SERVER_ID);
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeState> {
        self.nodes.get(&id)
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeState> {
        self.nodes.get_mut(&id)
    }

    pub fn is_live(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn live_node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn cluster_record(&self, c: ClusterId) -> Option<&ClusterRecord> {
        self.clusters.get(&c)
    }

    pub fn clusters(&self) -> &BTreeMap<ClusterId, ClusterRecord> {
        &self.clusters
    }

    /// Ground-truth head map used when answering entry broadcasts.
    pub fn heads_view(&self) -> BTreeMap<ClusterId, NodeId> {
        self.clusters.iter().map(|(c, r)| (*c, r.head)).collect()
    }

    pub fn metrics(&self) -> &MetricsAccumulator {
        &self.metrics
    }

    pub fn trace_events(&self) -> &[TraceEvent] {
        self.trace.events()
    }

    pub fn catalog_item(&self, d: DataId) -> DataItem {
        self.catalog[d.0 as usize]
    }

    pub fn catalog_len(&self) -> usize {
        self.catalog.len()
    }

    /// Live occupants of a cluster cell, by current position.
    pub fn occupants(&self, c: ClusterId) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|(_, n)| cluster_of(n.position(), self.snapshot.grid) == c)
            .map(|(id, _)| *id)
            .collect()
    }

    /// Point a node at a target with a given speed. Intended for staged
    /// experiments and tests; the node resumes random waypoints after
    /// arriving.
    pub fn steer(&mut self, id: NodeId, target: Position, speed: f64) {
        if let Some(n) = self.nodes.get_mut(&id) {
            n.waypoint.target = target;
            n.waypoint.speed = speed;
            n.waypoint.pause_remaining = 0;
        }
    }

    /// Election inputs for a node, computed from its live state.
    pub fn node_metrics(&self, id: NodeId) -> NodeMetrics {
        let Some(n) = self.nodes.get(&id) else {
            return NodeMetrics::default();
        };
        NodeMetrics {
            cs: n.cache.free_capacity(self.tick),
            d: crate::election::sum_neighbor_distances(id, &self.snapshot),
            m: mobility_metric(&n.history),
            bp: n.battery,
            p: n.prereq.total_popularity(),
        }
    }

    pub(crate) fn mobility_params(&self) -> MobilityParams {
        MobilityParams {
            world_width: self.cfg.world_width,
            world_height: self.cfg.world_height,
            min_speed: self.cfg.min_speed,
            max_speed: self.cfg.max_speed,
            pause_ticks: self.cfg.pause_ticks,
        }
    }

    // ------------------------------------------------------------------
    // Messaging helpers
    // ------------------------------------------------------------------

    /// Route between two live endpoints on the current snapshot.
    pub(crate) fn route(&self, from: NodeId, to: NodeId) -> Option<Vec<NodeId>> {
        match shortest_path(from, to, &self.snapshot) {
            Ok(PathResult::Path(p)) => Some(p),
            _ => None,
        }
    }

    pub(crate) fn server_route(&self, from: NodeId) -> Option<Vec<NodeId>> {
        self.route(from, SERVER_ID)
    }

    /// Battery charges for a unicast traveling the given node sequence:
    /// each hop costs the sender a send and the receiver a receive. The
    /// server is exempt.
    pub(crate) fn charge_path(&mut self, path: &[NodeId]) {
        let costs = self.cfg.battery_costs;
        for w in path.windows(2) {
            if let Some(n) = self.nodes.get_mut(&w[0]) {
                n.battery += costs.message_sent;
            }
            if let Some(n) = self.nodes.get_mut(&w[1]) {
                n.battery += costs.message_received;
            }
        }
    }

    /// Battery charges for one broadcast transmission.
    pub(crate) fn charge_broadcast(&mut self, sender: NodeId, receivers: &[NodeId]) {
        let costs = self.cfg.battery_costs;
        if let Some(n) = self.nodes.get_mut(&sender) {
            n.battery += costs.message_sent;
        }
        for r in receivers {
            if let Some(n) = self.nodes.get_mut(r) {
                n.battery += costs.message_received;
            }
        }
    }

    // ------------------------------------------------------------------
    // PreReq wrappers (traced)
    // ------------------------------------------------------------------

    pub(crate) fn prereq_lookup(&mut self, id: NodeId, d: DataId) -> Vec<(NodeId, u32)> {
        let now = self.tick;
        let Some(n) = self.nodes.get(&id) else {
            return Vec::new();
        };
        let candidates = n.prereq.lookup(d, now);
        self.trace.push(TraceEvent::PreReq {
            tick: now,
            node: id,
            op: PreReqOp::Lookup,
            data_id: d,
            outcome: format!("candidates:{}", candidates.len()),
        });
        candidates
    }

    /// A node observed a request for `d` (as relay, target or head).
    pub(crate) fn observe_request(&mut self, id: NodeId, d: DataId, holder: Option<(NodeId, u32)>) {
        if id == SERVER_ID {
            return;
        }
        let now = self.tick;
        let Some(n) = self.nodes.get_mut(&id) else {
            return;
        };
        let effect = n.prereq.record(d, holder, now);
        let outcome = match effect {
            RecordEffect::Created => String::from("created"),
            RecordEffect::Updated => String::from("updated"),
            RecordEffect::CreatedEvicting(victim) => format!("overwrote:{}", victim.0),
        };
        self.trace.push(TraceEvent::PreReq {
            tick: now,
            node: id,
            op: PreReqOp::Record,
            data_id: d,
            outcome,
        });
    }

    /// A data reply passed through `id`; merge the confirmed holder hint.
    pub(crate) fn merge_hint(&mut self, id: NodeId, d: DataId, holder: Option<(NodeId, u32)>) {
        if id == SERVER_ID {
            return;
        }
        let Some(h) = holder else {
            return;
        };
        let now = self.tick;
        let Some(n) = self.nodes.get_mut(&id) else {
            return;
        };
        let effect = n.prereq.merge_hint(d, h, now);
        let outcome = match effect {
            RecordEffect::Created => String::from("hint_created"),
            RecordEffect::Updated => String::from("hint_merged"),
            RecordEffect::CreatedEvicting(victim) => format!("hint_overwrote:{}", victim.0),
        };
        self.trace.push(TraceEvent::PreReq {
            tick: now,
            node: id,
            op: PreReqOp::Record,
            data_id: d,
            outcome,
        });
    }

    /// Refresh the LRU stamp of a serving node's entry.
    pub(crate) fn touch_cache(&mut self, id: NodeId, d: DataId) {
        let now = self.tick;
        if let Some(n) = self.nodes.get_mut(&id) {
            let _ = n.cache.lookup(d, now);
        }
    }

    /// A delivered member-to-head exchange renews both leases.
    pub(crate) fn renew_contact(&mut self, member: NodeId, head: NodeId) {
        let now = self.tick;
        let lease = self.cfg.lease_duration;
        let Some(n) = self.nodes.get_mut(&member) else {
            return;
        };
        let cluster = n.cluster;
        n.last_sent_to_head = now;
        if let Some(t) = n.head_lease.as_mut() {
            t.renew(now, lease);
        }
        if let Some(record) = self.clusters.get_mut(&cluster) {
            if record.head == head {
                if let Some(t) = record.member_leases.get_mut(&member) {
                    t.renew(now, lease);
                }
            }
        }
    }

    pub(crate) fn prereq_invalidate(&mut self, id: NodeId, d: DataId, holder: NodeId) {
        let now = self.tick;
        let Some(n) = self.nodes.get_mut(&id) else {
            return;
        };
        let effect = n.prereq.invalidate(d, holder);
        let outcome = match effect {
            InvalidateEffect::RemovedHolder => "removed_holder",
            InvalidateEffect::EntryDropped => "entry_dropped",
            InvalidateEffect::Noop => "noop",
        };
        self.trace.push(TraceEvent::PreReq {
            tick: now,
            node: id,
            op: PreReqOp::Invalidate,
            data_id: d,
            outcome: String::from(outcome),
        });
    }

    // ------------------------------------------------------------------
    // Cache admission and the head-consistency update
    // ------------------------------------------------------------------

    /// Cache a fetched item at `id`. Under a cooperative policy the node
    /// also notes the copy in its own PreReq and reports its new cache
    /// row to its head. Items larger than the whole cache are simply not
    /// admitted.
    pub(crate) fn admit_after_fetch(
        &mut self,
        id: NodeId,
        item: DataItem,
        served_by: Option<(NodeId, u32)>,
        cooperative: bool,
    ) {
        let now = self.tick;
        let Some(n) = self.nodes.get_mut(&id) else {
            return;
        };
        let Ok(evicted) = n.cache.insert(item, now) else {
            return;
        };
        if cooperative {
            for gone in &evicted {
                n.prereq.clear_local_copy(*gone);
            }
            let deadline = now + item.ttl;
            let source = served_by.filter(|(s, _)| *s != SERVER_ID && *s != id);
            n.prereq
                .note_fetched(item.id, source, item.size, deadline, now);
            self.send_row_update(id);
        }
    }

    /// Report `id`'s current cache row to its head (the consistency
    /// scheme). Free when the node is its own head; one control message
    /// otherwise, which also renews both leases. Lost without effect when
    /// the head is gone.
    pub(crate) fn send_row_update(&mut self, id: NodeId) {
        let now = self.tick;
        let lease = self.cfg.lease_duration;
        let Some(n) = self.nodes.get(&id) else {
            return;
        };
        let Some(head) = n.head else {
            return;
        };
        let report = n.cache.report(now);
        let cluster = n.cluster;

        if head == id {
            if let Some(record) = self.clusters.get_mut(&cluster) {
                let _ = record.table.update(id, report);
            }
            return;
        }

        self.metrics.add_protocol_control(1);
        self.charge_path(&[id, head]);
        let delivered = self
            .clusters
            .get(&cluster)
            .is_some_and(|r| r.head == head && self.nodes.contains_key(&head));
        if delivered {
            let record = self.clusters.get_mut(&cluster).unwrap();
            let _ = record.table.update(id, report);
            if let Some(t) = record.member_leases.get_mut(&id) {
                t.renew(now, lease);
            }
            let n = self.nodes.get_mut(&id).unwrap();
            n.last_sent_to_head = now;
            if let Some(t) = n.head_lease.as_mut() {
                t.renew(now, lease);
            }
        }
    }

    // ------------------------------------------------------------------
    // Request bookkeeping
    // ------------------------------------------------------------------

    pub(crate) fn record_request_outcome(&mut self, outcome: &RequestOutcome) {
        self.metrics.record_outcome(outcome);
        self.trace.push(TraceEvent::Request {
            tick: self.tick,
            outcome: outcome.clone(),
        });
    }

    // ------------------------------------------------------------------
    // Cluster bootstrap and invariants
    // ------------------------------------------------------------------

    /// Form clusters from current positions and elect one head per
    /// occupied cell. Metric overrides replace the live computation for
    /// the listed nodes (an experiment/test hook).
    pub fn bootstrap_clusters(&mut self, overrides: &BTreeMap<NodeId, NodeMetrics>) {
        let now = self.tick;
        let lease = self.cfg.lease_duration;
        let weights = self.cfg.election_weights;

        let mut by_cluster: BTreeMap<ClusterId, Vec<NodeId>> = BTreeMap::new();
        for (id, n) in &self.nodes {
            by_cluster
                .entry(cluster_of(n.position(), self.snapshot.grid))
                .or_default()
                .push(*id);
        }

        for (c, members) in by_cluster {
            let metrics_map: BTreeMap<NodeId, NodeMetrics> = members
                .iter()
                .map(|id| {
                    (
                        *id,
                        overrides
                            .get(id)
                            .copied()
                            .unwrap_or_else(|| self.node_metrics(*id)),
                    )
                })
                .collect();
            let result = crate::election::elect_head(c, &metrics_map, &weights);
            let head = result.head;

            let mut table = ClusterCacheStateTable::new(head);
            let mut member_leases = BTreeMap::new();
            for id in &members {
                let report = self.nodes[id].cache.report(now);
                if *id == head {
                    let _ = table.update(head, report);
                } else {
                    table.insert_member(*id, report);
                }
                member_leases.insert(
                    *id,
                    LeaseTimer {
                        peer: *id,
                        expires_at: now + lease,
                    },
                );
                let n = self.nodes.get_mut(id).unwrap();
                n.cluster = c;
                n.head = Some(head);
                n.head_lease = Some(LeaseTimer {
                    peer: head,
                    expires_at: now + lease,
                });
                n.last_sent_to_head = now;
                n.pending_claim = None;
            }

            // Election exchange: one broadcast plus per-member deliveries,
            // weight replies, a selection broadcast with deliveries, and
            // cache reports from everyone but the head.
            let m = members.len() as u64;
            let messages = 2 + 4 * (m - 1);
            self.metrics.add_protocol_control(messages);
            self.trace.push(TraceEvent::Election {
                tick: now,
                cluster: c,
                head,
                initiator: None,
                weights: result.weights_table.iter().map(|(n, w)| (*n, *w)).collect(),
                messages,
            });

            self.clusters.insert(
                c,
                ClusterRecord {
                    head,
                    table,
                    member_leases,
                },
            );
        }
    }

    /// Violations of the cluster-protocol invariants at the current
    /// instant. At quiescence (no motion for a lease duration) this must
    /// be empty: every occupied cell has exactly one live head and every
    /// occupant points at it.
    pub fn cluster_invariants(&self) -> Vec<String> {
        let mut violations = Vec::new();
        let mut by_cluster: BTreeMap<ClusterId, Vec<NodeId>> = BTreeMap::new();
        for (id, n) in &self.nodes {
            by_cluster
                .entry(cluster_of(n.position(), self.snapshot.grid))
                .or_default()
                .push(*id);
        }

        for (c, occupants) in &by_cluster {
            let Some(record) = self.clusters.get(c) else {
                violations.push(format!("cluster {c} is occupied but has no head record"));
                continue;
            };
            if !occupants.contains(&record.head) {
                violations.push(format!(
                    "cluster {c} head {} is not among its occupants",
                    record.head.0
                ));
            }
            for id in occupants {
                let n = &self.nodes[id];
                if n.head != Some(record.head) {
                    violations.push(format!(
                        "node {} in cluster {c} points at {:?}, expected {}",
                        id.0,
                        n.head.map(|h| h.0),
                        record.head.0
                    ));
                }
            }
            // Table soundness: rows with live deadlines must match the
            // member's actual cache.
            if self.nodes.contains_key(&record.head) {
                for member in record.table.members().copied().collect::<Vec<_>>() {
                    let Some(row) = record.table.row(member) else {
                        continue;
                    };
                    let Some(n) = self.nodes.get(&member) else {
                        continue;
                    };
                    for (d, deadline) in row {
                        if *deadline > self.tick && !n.cache.has_valid(*d, self.tick) {
                            violations.push(format!(
                                "table row ({}, {}) in cluster {c} has no live backing entry",
                                member.0, d.0
                            ));
                        }
                    }
                }
            }
        }

        violations
    }

    /// A short printable digest of observable state, used by determinism
    /// tests.
    pub fn state_digest(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("tick={} nodes={}\n", self.tick, self.nodes.len()));
        for (id, n) in &self.nodes {
            s.push_str(&format!(
                "n{} pos=({:.6},{:.6}) cluster={} head={:?} cache_used={} bp={:.3} prereq={}\n",
                id.0,
                n.position().x,
                n.position().y,
                n.cluster,
                n.head.map(|h| h.0),
                n.cache.used(),
                n.battery,
                n.prereq.len(),
            ));
        }
        for (c, r) in &self.clusters {
            s.push_str(&format!(
                "cluster {c} head={} rows={}\n",
                r.head.0,
                r.table.members().count()
            ));
        }
        s
    }
}

fn generate_catalog(cfg: &SimConfig) -> Vec<DataItem> {
    let mut rng = derive_stream(cfg.seed, StreamDomain::Catalog, 0);
    (0..cfg.catalog_size)
        .map(|i| DataItem {
            id: DataId(i),
            size: uniform_u64_inclusive(
                &mut rng,
                cfg.item_size_min as u64,
                cfg.item_size_max as u64,
            ) as u32,
            ttl: uniform_u64_inclusive(&mut rng, cfg.item_ttl_min, cfg.item_ttl_max),
        })
        .collect()
}

/// Constructs worlds with explicit placements, cache contents and PreReq
/// state; the deterministic way to set up experiments and tests.
pub struct WorldBuilder {
    cfg: SimConfig,
    placements: BTreeMap<NodeId, Position>,
    catalog: Option<Vec<DataItem>>,
    cache_preloads: Vec<(NodeId, DataId, u64)>,
    hints: Vec<(NodeId, DataId, NodeId, u32)>,
    metric_overrides: BTreeMap<NodeId, NodeMetrics>,
    trace_enabled: bool,
    bootstrap: bool,
}

impl WorldBuilder {
    pub fn new(cfg: SimConfig) -> Self {
        WorldBuilder {
            cfg,
            placements: BTreeMap::new(),
            catalog: None,
            cache_preloads: Vec::new(),
            hints: Vec::new(),
            metric_overrides: BTreeMap::new(),
            trace_enabled: false,
            bootstrap: true,
        }
    }

    /// Place a node at an exact, initially stationary position. Ids must
    /// be nonzero (0 is the server).
    pub fn node(mut self, id: u32, x: f64, y: f64) -> Self {
        assert!(id != 0, "node id 0 is reserved for the server");
        self.placements.insert(NodeId(id), Position::new(x, y));
        self
    }

    /// Replace the generated catalog.
    pub fn catalog(mut self, items: Vec<DataItem>) -> Self {
        self.cfg.catalog_size = items.len() as u32;
        self.catalog = Some(items);
        self
    }

    /// Preload a catalog item into a node's cache as if fetched at
    /// `cached_at`.
    pub fn cache_item(mut self, node: u32, d: u32, cached_at: u64) -> Self {
        self.cache_preloads
            .push((NodeId(node), DataId(d), cached_at));
        self
    }

    /// Preload a PreReq holder hint.
    pub fn hint(mut self, node: u32, d: u32, holder: u32, hops: u32) -> Self {
        self.hints
            .push((NodeId(node), DataId(d), NodeId(holder), hops));
        self
    }

    /// Replace the live metric computation for one node in the bootstrap
    /// election.
    pub fn metric_override(mut self, node: u32, metrics: NodeMetrics) -> Self {
        self.metric_overrides.insert(NodeId(node), metrics);
        self
    }

    pub fn trace(mut self, enabled: bool) -> Self {
        self.trace_enabled = enabled;
        self
    }

    /// Skip cluster formation (for worlds driven only by NC/hop-by-hop).
    pub fn without_clusters(mut self) -> Self {
        self.bootstrap = false;
        self
    }

    pub fn build(self) -> World {
        let mut world =
            World::from_parts(self.cfg, self.placements, self.catalog, self.trace_enabled);
        for (node, d, cached_at) in self.cache_preloads {
            let item = world.catalog_item(d);
            let n = world
                .nodes
                .get_mut(&node)
                .expect("preload for unknown node");
            n.cache
                .insert(item, cached_at)
                .expect("preloaded item must fit");
            let deadline = cached_at + item.ttl;
            n.prereq
                .note_fetched(item.id, None, item.size, deadline, cached_at);
        }
        for (node, d, holder, hops) in self.hints {
            let n = world.nodes.get_mut(&node).expect("hint for unknown node");
            n.prereq.record(d, Some((holder, hops)), 0);
        }
        if self.bootstrap {
            world.bootstrap_clusters(&self.metric_overrides);
        }
        world
    }
}
