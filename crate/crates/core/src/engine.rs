//! The deterministic event loop. Each tick runs, in a fixed order:
//! scheduled failures, mobility, cluster maintenance (crossings, arrivals,
//! pending head claims), lease upkeep (keepalives, head and member
//! timeouts), then workload requests in ascending requester order.
//!
//! Cluster maintenance and leases run only under the hybrid policy; the
//! baselines have no cluster machinery to maintain.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cluster::{self, ClusterCacheStateTable, JoinOutcome, LeaseTimer, RescuePlacement};
use crate::discovery::{self, DiscoveryPolicy, RequestOutcome};
use crate::election::NodeMetrics;
use crate::metrics::MetricsAccumulator;
use crate::mobility::{mobility_step, update_speed_history};
use crate::model::{validate_config, DataId, DataItem, NodeId, Position, SimConfig};
use crate::rng::{derive_stream, poisson, uniform_f64, uniform_index, StreamDomain};
use crate::topology::{cluster_of, ClusterId};
use crate::trace::{ProtocolKind, TraceEvent};
use crate::world::{ClusterRecord, World, SERVER_ID};

/// Scheduled node failures and arrivals: `(tick, node id)` pairs. Failed
/// nodes vanish silently; arriving nodes spawn at a seed-derived uniform
/// position and run the entry protocol.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Schedule {
    pub failures: Vec<(u64, NodeId)>,
    pub arrivals: Vec<(u64, NodeId)>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct RunResult {
    pub metrics: MetricsAccumulator,
    pub trace: Vec<TraceEvent>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Role {
    Head,
    Member,
    Outsider,
}

/// A stepping simulation around one [`World`].
#[derive(Clone, PartialEq, Debug)]
pub struct Simulation {
    pub world: World,
    failures: BTreeMap<u64, Vec<NodeId>>,
    arrivals: BTreeMap<u64, Vec<NodeId>>,
}

/// Place `node_count` nodes uniformly at random, pin the server, and (for
/// the hybrid policy) form clusters and elect the initial heads. Worlds
/// with pinned placements or election-metric overrides come from
/// [`crate::WorldBuilder`] instead.
pub fn init_world(cfg: &SimConfig, trace_enabled: bool) -> Result<World, Vec<String>> {
    let violations = validate_config(cfg);
    if !violations.is_empty() {
        return Err(violations);
    }
    let mut placement_rng = derive_stream(cfg.seed, StreamDomain::Placement, 0);
    let placements: BTreeMap<NodeId, Position> = (1..=cfg.node_count)
        .map(|i| {
            (
                NodeId(i),
                Position::new(
                    uniform_f64(&mut placement_rng, 0.0, cfg.world_width),
                    uniform_f64(&mut placement_rng, 0.0, cfg.world_height),
                ),
            )
        })
        .collect();
    let mut world = World::from_parts(cfg.clone(), placements, None, trace_enabled);
    if cfg.policy == DiscoveryPolicy::Hybrid {
        world.bootstrap_clusters(&BTreeMap::new());
    }
    Ok(world)
}

/// Draw one request: a uniform live requester and a Zipf-ranked item.
pub fn draw_request(world: &mut World) -> Option<(NodeId, DataId)> {
    let live = world.live_node_ids();
    if live.is_empty() {
        return None;
    }
    let requester = live[uniform_index(&mut world.workload_rng, live.len())];
    let rank = world.zipf.sample(&mut world.workload_rng);
    Some((requester, DataId(rank - 1)))
}

impl Simulation {
    pub fn new(
        cfg: &SimConfig,
        schedule: &Schedule,
        trace_enabled: bool,
    ) -> Result<Self, Vec<String>> {
        let world = init_world(cfg, trace_enabled)?;
        Ok(Self::around(world, schedule))
    }

    /// Wrap an already-built world (e.g. from [`crate::WorldBuilder`]).
    pub fn around(world: World, schedule: &Schedule) -> Self {
        let mut failures: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
        for (t, n) in &schedule.failures {
            failures.entry(*t).or_default().push(*n);
        }
        let mut arrivals: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
        for (t, n) in &schedule.arrivals {
            arrivals.entry(*t).or_default().push(*n);
        }
        Simulation {
            world,
            failures,
            arrivals,
        }
    }

    /// One full tick.
    pub fn step(&mut self) {
        self.tick_inner(true);
    }

    /// One tick with mobility suppressed; everything else (maintenance,
    /// leases, requests) still runs. Used to let the protocol quiesce.
    pub fn step_frozen(&mut self) {
        self.tick_inner(false);
    }

    pub fn run_to_completion(&mut self) {
        for _ in 0..self.world.cfg.ticks {
            self.step();
        }
    }

    pub fn into_result(self) -> RunResult {
        RunResult {
            metrics: self.world.metrics.clone(),
            trace: self.world.trace.clone().into_events(),
        }
    }

    fn tick_inner(&mut self, with_mobility: bool) {
        let hybrid = self.world.cfg.policy == DiscoveryPolicy::Hybrid;

        self.phase_failures();
        if with_mobility {
            self.phase_mobility();
        }
        if hybrid {
            self.phase_maintenance();
            self.phase_leases();
        } else {
            self.phase_arrivals_plain();
        }
        self.phase_requests();
        self.world.tick += 1;
    }

    // ------------------------------------------------------------------
    // Failures and arrivals
    // ------------------------------------------------------------------

    fn phase_failures(&mut self) {
        let now = self.world.tick;
        let Some(ids) = self.failures.remove(&now) else {
            return;
        };
        let mut removed = false;
        for id in ids {
            if self.world.nodes.remove(&id).is_some() {
                removed = true;
            }
        }
        if removed {
            self.world.rebuild_snapshot();
        }
    }

    fn spawn_node(&mut self, id: NodeId) -> bool {
        if id == SERVER_ID || self.world.is_live(id) {
            return false;
        }
        let cfg = self.world.cfg.clone();
        let mut rng = derive_stream(cfg.seed, StreamDomain::ArrivalPlacement, id.0 as u64);
        let pos = Position::new(
            uniform_f64(&mut rng, 0.0, cfg.world_width),
            uniform_f64(&mut rng, 0.0, cfg.world_height),
        );
        let grid = self.world.snapshot().grid;
        let node = crate::world::NodeState {
            waypoint: crate::mobility::WaypointState::at(pos),
            history: crate::mobility::SpeedHistory::starting_at(pos),
            cache: crate::cache::LocalCache::new(cfg.cache_capacity),
            prereq: crate::prereq::PreReqTable::new(cfg.prereq_capacity),
            cluster: cluster_of(pos, grid),
            head: None,
            head_lease: None,
            last_sent_to_head: 0,
            pending_claim: None,
            battery: 0.0,
            rng: derive_stream(cfg.seed, StreamDomain::NodeMobility, id.0 as u64),
        };
        self.world.nodes.insert(id, node);
        self.world.rebuild_snapshot();
        true
    }

    /// Arrivals under the baselines: the node just appears.
    fn phase_arrivals_plain(&mut self) {
        let now = self.world.tick;
        let Some(ids) = self.arrivals.remove(&now) else {
            return;
        };
        for id in ids {
            self.spawn_node(id);
        }
    }

    // ------------------------------------------------------------------
    // Mobility
    // ------------------------------------------------------------------

    fn phase_mobility(&mut self) {
        let params = self.world.mobility_params();
        let costs = self.world.cfg.battery_costs;
        for id in self.world.live_node_ids() {
            let is_head = {
                let n = self.world.node(id).unwrap();
                n.head == Some(id)
            };
            let n = self.world.node_mut(id).unwrap();
            n.battery += if is_head {
                costs.head_tick
            } else {
                costs.idle_tick
            };
            mobility_step(&mut n.waypoint, &params, &mut n.rng);
            let pos = n.waypoint.current;
            update_speed_history(&mut n.history, pos);
        }
        self.world.rebuild_snapshot();
    }

    // ------------------------------------------------------------------
    // Cluster maintenance (hybrid only)
    // ------------------------------------------------------------------

    fn phase_maintenance(&mut self) {
        let now = self.world.tick;
        let grid = self.world.snapshot().grid;

        // cluster crossings, in ascending node id order
        for id in self.world.live_node_ids() {
            let (old_c, new_c) = {
                let n = self.world.node(id).unwrap();
                (n.cluster, cluster_of(n.position(), grid))
            };
            if old_c != new_c {
                self.process_crossing(id, old_c, new_c);
            }
        }

        // scheduled arrivals join via the entry protocol
        if let Some(ids) = self.arrivals.remove(&now) {
            for id in ids {
                if self.spawn_node(id) {
                    let c = self.world.node(id).unwrap().cluster;
                    self.enter_cluster(id, c);
                }
            }
        }

        // pending head claims that come due
        for id in self.world.live_node_ids() {
            let due = {
                let n = self.world.node(id).unwrap();
                matches!(n.pending_claim, Some(t) if t <= now) && n.head.is_none()
            };
            if due {
                self.resolve_pending_claim(id);
            }
        }
    }

    fn process_crossing(&mut self, id: NodeId, old_c: ClusterId, new_c: ClusterId) {
        self.world.node_mut(id).unwrap().pending_claim = None;

        let role = self.world.clusters.get(&old_c).map(|r| {
            if r.head == id {
                Role::Head
            } else if r.table.has_member(id) {
                Role::Member
            } else {
                Role::Outsider
            }
        });

        match role {
            Some(Role::Head) => self.head_departs(id, old_c),
            Some(Role::Member) => self.member_departs(id, old_c),
            _ => {}
        }

        self.enter_cluster(id, new_c);
    }

    /// Maintenance case: a non-head member crosses out. It informs the
    /// head, which rescues any data not already present in the cluster.
    fn member_departs(&mut self, id: NodeId, old_c: ClusterId) {
        let now = self.world.tick;
        let mut messages = 0u64;

        let head = self.world.clusters.get(&old_c).map(|r| r.head);
        let Some(head) = head else {
            return;
        };

        // the departing node informs its head
        messages += 1;
        self.world.charge_path(&[id, head]);

        let leaving_items: Vec<DataItem> = self
            .world
            .node(id)
            .map(|n| {
                n.cache
                    .entries()
                    .filter(|(_, e)| e.is_valid(now))
                    .map(|(_, e)| e.item)
                    .collect()
            })
            .unwrap_or_default();

        // free space of the remaining members, head included
        let remaining: Vec<NodeId> = self
            .world
            .clusters
            .get(&old_c)
            .map(|r| r.table.members().copied().filter(|m| *m != id).collect())
            .unwrap_or_default();
        let free_capacity: BTreeMap<NodeId, u32> = remaining
            .iter()
            .filter_map(|m| {
                self.world
                    .node(*m)
                    .map(|n| (*m, n.cache.free_capacity(now)))
            })
            .collect();

        let actions = {
            let record = self.world.clusters.get_mut(&old_c).unwrap();
            record.member_leases.remove(&id);
            cluster::member_leave(&mut record.table, id, &leaving_items, &free_capacity, now)
        };

        for action in actions {
            let target = match action.placement {
                RescuePlacement::AlreadyInCluster => continue,
                RescuePlacement::CacheAt(n) => n,
                RescuePlacement::CacheAtHeadEvicting => head,
            };
            if !self.world.is_live(target) {
                continue;
            }
            // one data transfer from the departing node at the boundary
            messages += 1;
            self.world.metrics.add_protocol_data(1);
            self.world.charge_path(&[id, target]);
            let item = action.item;
            let inserted = {
                let n = self.world.node_mut(target).unwrap();
                match n.cache.insert(item, now) {
                    Ok(evicted) => {
                        for gone in &evicted {
                            n.prereq.clear_local_copy(*gone);
                        }
                        let deadline = now + item.ttl;
                        n.prereq
                            .note_fetched(item.id, None, item.size, deadline, now);
                        true
                    }
                    Err(_) => false,
                }
            };
            if inserted {
                let report = self.world.node(target).unwrap().cache.report(now);
                if target != head {
                    // consistency update to the head
                    messages += 1;
                    self.world.metrics.add_protocol_control(1);
                    self.world.charge_path(&[target, head]);
                }
                if let Some(record) = self.world.clusters.get_mut(&old_c) {
                    let _ = record.table.update(target, report);
                }
            }
        }

        self.world.metrics.add_protocol_control(1); // the inform message
        self.world.node_mut(id).unwrap().head = None;
        self.world.node_mut(id).unwrap().head_lease = None;
        self.world.trace.push(TraceEvent::Protocol {
            tick: now,
            kind: ProtocolKind::Leave,
            cluster: old_c,
            actor: id,
            messages,
        });
    }

    /// Maintenance case: the head crosses out. It hands the table to the
    /// next most qualified member before entering its new cluster.
    fn head_departs(&mut self, id: NodeId, old_c: ClusterId) {
        let now = self.world.tick;
        let record = self.world.clusters.remove(&old_c).unwrap();
        let table = record.table;

        let survivors: Vec<NodeId> = self
            .world
            .nodes
            .iter()
            .filter(|(n, state)| **n != id && state.cluster == old_c)
            .map(|(n, _)| *n)
            .collect();

        self.world.node_mut(id).unwrap().head = None;
        self.world.node_mut(id).unwrap().head_lease = None;

        if survivors.is_empty() {
            self.world.trace.push(TraceEvent::Protocol {
                tick: now,
                kind: ProtocolKind::Leave,
                cluster: old_c,
                actor: id,
                messages: 0,
            });
            return;
        }

        let metrics_map: BTreeMap<NodeId, NodeMetrics> = survivors
            .iter()
            .map(|n| (*n, self.world.node_metrics(*n)))
            .collect();
        let weights = self.world.cfg.election_weights;
        let (result, table) =
            cluster::head_leave(id, &metrics_map, table, old_c, &weights).expect("survivors exist");
        let new_head = result.head;

        // one table transfer at the boundary, one change multicast, one
        // delivery per member other than the new head
        let deliveries = (survivors.len() - 1) as u64;
        let messages = 1 + 1 + deliveries;
        self.world.metrics.add_protocol_control(messages);
        self.world.charge_path(&[id, new_head]);
        let receivers: Vec<NodeId> = survivors
            .iter()
            .copied()
            .filter(|n| *n != new_head)
            .collect();
        self.world.charge_broadcast(new_head, &receivers);

        let lease = self.world.cfg.lease_duration;
        let member_leases: BTreeMap<NodeId, LeaseTimer> = survivors
            .iter()
            .map(|n| {
                (
                    *n,
                    LeaseTimer {
                        peer: *n,
                        expires_at: now + lease,
                    },
                )
            })
            .collect();
        for n in &survivors {
            let state = self.world.node_mut(*n).unwrap();
            state.head = Some(new_head);
            state.head_lease = Some(LeaseTimer {
                peer: new_head,
                expires_at: now + lease,
            });
            state.last_sent_to_head = now;
            state.pending_claim = None;
        }
        self.world.clusters.insert(
            old_c,
            ClusterRecord {
                head: new_head,
                table,
                member_leases,
            },
        );

        self.world.trace.push(TraceEvent::Election {
            tick: now,
            cluster: old_c,
            head: new_head,
            initiator: Some(id),
            weights: result.weights_table.iter().map(|(n, w)| (*n, *w)).collect(),
            messages,
        });
        self.world.trace.push(TraceEvent::Protocol {
            tick: now,
            kind: ProtocolKind::Handover,
            cluster: old_c,
            actor: id,
            messages,
        });
    }

    /// Maintenance case: entering a cluster. With a valid head around the
    /// node joins at once; otherwise it waits `threshold_ticks` before
    /// claiming headship.
    fn enter_cluster(&mut self, id: NodeId, c: ClusterId) {
        let now = self.world.tick;
        let lease = self.world.cfg.lease_duration;
        {
            let n = self.world.node_mut(id).unwrap();
            n.cluster = c;
            n.head = None;
            n.head_lease = None;
        }

        let pos = self.world.node(id).unwrap().position();
        let heads = self.world.heads_view();
        let outcome = cluster::node_enter(id, pos, self.world.snapshot(), &heads);

        match outcome {
            JoinOutcome::Joined(head) => {
                let repliers: Vec<NodeId> = self
                    .world
                    .nodes
                    .iter()
                    .filter(|(n, state)| **n != id && state.cluster == c)
                    .map(|(n, _)| *n)
                    .collect();
                // entry broadcast + one reply per same-cluster neighbour +
                // the cache report to the head
                let messages = 1 + repliers.len() as u64 + 1;
                self.world.metrics.add_protocol_control(messages);
                self.world.charge_broadcast(id, &repliers);
                for r in &repliers {
                    self.world.charge_path(&[*r, id]);
                }
                self.world.charge_path(&[id, head]);

                let report = self.world.node(id).unwrap().cache.report(now);
                if let Some(record) = self.world.clusters.get_mut(&c) {
                    record.table.insert_member(id, report);
                    record.member_leases.insert(
                        id,
                        LeaseTimer {
                            peer: id,
                            expires_at: now + lease,
                        },
                    );
                }
                let n = self.world.node_mut(id).unwrap();
                n.head = Some(head);
                n.head_lease = Some(LeaseTimer {
                    peer: head,
                    expires_at: now + lease,
                });
                n.last_sent_to_head = now;
                self.world.trace.push(TraceEvent::Protocol {
                    tick: now,
                    kind: ProtocolKind::Join,
                    cluster: c,
                    actor: id,
                    messages,
                });
            }
            JoinOutcome::BecameHead => {
                // the entry broadcast went unanswered
                self.world.metrics.add_protocol_control(1);
                self.world.charge_broadcast(id, &[]);
                self.world.node_mut(id).unwrap().pending_claim =
                    Some(now + self.world.cfg.threshold_ticks);
                self.world.trace.push(TraceEvent::Protocol {
                    tick: now,
                    kind: ProtocolKind::Join,
                    cluster: c,
                    actor: id,
                    messages: 1,
                });
            }
        }
    }

    /// The silence threshold ran out: claim headship, unless a head
    /// appeared in the meantime (then join it).
    fn resolve_pending_claim(&mut self, id: NodeId) {
        let now = self.world.tick;
        let lease = self.world.cfg.lease_duration;
        let c = self.world.node(id).unwrap().cluster;
        self.world.node_mut(id).unwrap().pending_claim = None;

        let heads = self.world.heads_view();
        let pos = self.world.node(id).unwrap().position();
        match cluster::node_enter(id, pos, self.world.snapshot(), &heads) {
            JoinOutcome::Joined(head) => {
                // late join: one cache report
                self.world.metrics.add_protocol_control(1);
                self.world.charge_path(&[id, head]);
                let report = self.world.node(id).unwrap().cache.report(now);
                if let Some(record) = self.world.clusters.get_mut(&c) {
                    record.table.insert_member(id, report);
                    record.member_leases.insert(
                        id,
                        LeaseTimer {
                            peer: id,
                            expires_at: now + lease,
                        },
                    );
                }
                let n = self.world.node_mut(id).unwrap();
                n.head = Some(head);
                n.head_lease = Some(LeaseTimer {
                    peer: head,
                    expires_at: now + lease,
                });
                n.last_sent_to_head = now;
                self.world.trace.push(TraceEvent::Protocol {
                    tick: now,
                    kind: ProtocolKind::Join,
                    cluster: c,
                    actor: id,
                    messages: 1,
                });
            }
            JoinOutcome::BecameHead => {
                let report = self.world.node(id).unwrap().cache.report(now);
                let mut table = ClusterCacheStateTable::new(id);
                let _ = table.update(id, report);
                self.world.clusters.insert(
                    c,
                    ClusterRecord {
                        head: id,
                        table,
                        member_leases: BTreeMap::new(),
                    },
                );
                let n = self.world.node_mut(id).unwrap();
                n.head = Some(id);
                n.head_lease = None;
                self.world.trace.push(TraceEvent::Protocol {
                    tick: now,
                    kind: ProtocolKind::HeadClaim,
                    cluster: c,
                    actor: id,
                    messages: 0,
                });
            }
        }
    }

    // ------------------------------------------------------------------
    // Leases (hybrid only)
    // ------------------------------------------------------------------

    fn phase_leases(&mut self) {
        self.send_keepalives();
        self.detect_head_timeouts();
        self.detect_member_timeouts();
    }

    /// Members ping their head halfway through the lease; any delivered
    /// contact renews both sides.
    fn send_keepalives(&mut self) {
        let now = self.world.tick;
        let cadence = (self.world.cfg.lease_duration / 2).max(1);
        for id in self.world.live_node_ids() {
            let head = {
                let n = self.world.node(id).unwrap();
                match n.head {
                    Some(h) if h != id && now - n.last_sent_to_head >= cadence => Some(h),
                    _ => None,
                }
            };
            let Some(head) = head else {
                continue;
            };
            self.world.metrics.add_protocol_control(1);
            self.world.node_mut(id).unwrap().last_sent_to_head = now;
            let cluster = self.world.node(id).unwrap().cluster;
            let delivered = self.world.is_live(head)
                && self
                    .world
                    .clusters
                    .get(&cluster)
                    .is_some_and(|r| r.head == head);
            if delivered {
                self.world.charge_path(&[id, head]);
                self.world.renew_contact(id, head);
            } else {
                // transmission into the void; only the sender pays
                let costs = self.world.cfg.battery_costs;
                if let Some(n) = self.world.node_mut(id) {
                    n.battery += costs.message_sent;
                }
            }
        }
    }

    /// Maintenance case: a head stopped answering. If the cluster record
    /// meanwhile names a live head (a newcomer claimed it), orphaned
    /// members simply rejoin it; otherwise the smallest-id detector runs
    /// the election and survivors rebuild the table from fresh reports.
    fn detect_head_timeouts(&mut self) {
        let now = self.world.tick;
        let lease = self.world.cfg.lease_duration;
        let weights = self.world.cfg.election_weights;

        let cluster_ids: Vec<ClusterId> = self.world.clusters.keys().copied().collect();
        for c in cluster_ids {
            let head = self.world.clusters[&c].head;
            let occupants = self.world.occupants(c);
            let detectors: Vec<NodeId> = occupants
                .iter()
                .copied()
                .filter(|id| {
                    let n = self.world.node(*id).unwrap();
                    n.head.is_some()
                        && n.head != Some(*id)
                        && n.head_lease.is_some_and(|t| t.expired(now))
                })
                .collect();
            if detectors.is_empty() {
                continue;
            }

            let record_head_alive = self
                .world
                .node(head)
                .is_some_and(|n| n.cluster == c && n.head == Some(head));
            if record_head_alive {
                // lost members attach to the head that is already there
                for m in detectors {
                    self.rejoin_head(m, c, head);
                }
                continue;
            }

            let initiator = detectors[0];
            let survivors: Vec<NodeId> =
                occupants.iter().copied().filter(|id| *id != head).collect();
            if survivors.is_empty() {
                self.world.clusters.remove(&c);
                continue;
            }

            let metrics_map: BTreeMap<NodeId, NodeMetrics> = survivors
                .iter()
                .map(|n| (*n, self.world.node_metrics(*n)))
                .collect();
            let result = cluster::head_timeout(initiator, &metrics_map, c, &weights);
            let new_head = result.head;

            // election broadcast + deliveries, weight replies, selection
            // broadcast + deliveries, cache reports to the new head
            let s = survivors.len() as u64;
            let messages = 2 + 4 * (s - 1);
            self.world.metrics.add_protocol_control(messages);
            let others: Vec<NodeId> = survivors
                .iter()
                .copied()
                .filter(|n| *n != initiator)
                .collect();
            self.world.charge_broadcast(initiator, &others);
            for n in &others {
                self.world.charge_path(&[*n, initiator]);
            }
            let non_heads: Vec<NodeId> = survivors
                .iter()
                .copied()
                .filter(|n| *n != new_head)
                .collect();
            self.world.charge_broadcast(new_head, &non_heads);
            for n in &non_heads {
                self.world.charge_path(&[*n, new_head]);
            }

            let mut table = ClusterCacheStateTable::new(new_head);
            let mut member_leases = BTreeMap::new();
            for n in &survivors {
                let report = self.world.node(*n).unwrap().cache.report(now);
                if *n == new_head {
                    let _ = table.update(new_head, report);
                } else {
                    table.insert_member(*n, report);
                }
                member_leases.insert(
                    *n,
                    LeaseTimer {
                        peer: *n,
                        expires_at: now + lease,
                    },
                );
                let state = self.world.node_mut(*n).unwrap();
                state.head = Some(new_head);
                state.head_lease = Some(LeaseTimer {
                    peer: new_head,
                    expires_at: now + lease,
                });
                state.last_sent_to_head = now;
                state.pending_claim = None;
            }
            self.world.clusters.insert(
                c,
                ClusterRecord {
                    head: new_head,
                    table,
                    member_leases,
                },
            );

            self.world.trace.push(TraceEvent::Election {
                tick: now,
                cluster: c,
                head: new_head,
                initiator: Some(initiator),
                weights: result.weights_table.iter().map(|(n, w)| (*n, *w)).collect(),
                messages,
            });
            self.world.trace.push(TraceEvent::Protocol {
                tick: now,
                kind: ProtocolKind::HeadTimeout,
                cluster: c,
                actor: initiator,
                messages,
            });
        }
    }

    /// A member whose old head vanished attaches to the cluster's current
    /// head with a fresh cache report.
    fn rejoin_head(&mut self, m: NodeId, c: ClusterId, head: NodeId) {
        let now = self.world.tick;
        let lease = self.world.cfg.lease_duration;
        self.world.metrics.add_protocol_control(1);
        self.world.charge_path(&[m, head]);
        let report = self.world.node(m).unwrap().cache.report(now);
        if let Some(record) = self.world.clusters.get_mut(&c) {
            record.table.insert_member(m, report);
            record.member_leases.insert(
                m,
                LeaseTimer {
                    peer: m,
                    expires_at: now + lease,
                },
            );
        }
        let n = self.world.node_mut(m).unwrap();
        n.head = Some(head);
        n.head_lease = Some(LeaseTimer {
            peer: head,
            expires_at: now + lease,
        });
        n.last_sent_to_head = now;
        self.world.trace.push(TraceEvent::Protocol {
            tick: now,
            kind: ProtocolKind::Join,
            cluster: c,
            actor: m,
            messages: 1,
        });
    }

    /// Maintenance case: a member stopped renewing; the head drops its
    /// rows without rescue.
    fn detect_member_timeouts(&mut self) {
        let now = self.world.tick;
        let cluster_ids: Vec<ClusterId> = self.world.clusters.keys().copied().collect();
        for c in cluster_ids {
            let expired: Vec<NodeId> = self.world.clusters[&c]
                .member_leases
                .iter()
                .filter(|(m, t)| **m != self.world.clusters[&c].head && t.expired(now))
                .map(|(m, _)| *m)
                .collect();
            for m in expired {
                let record = self.world.clusters.get_mut(&c).unwrap();
                cluster::member_timeout(&mut record.table, m);
                record.member_leases.remove(&m);
                self.world.trace.push(TraceEvent::Protocol {
                    tick: now,
                    kind: ProtocolKind::MemberTimeout,
                    cluster: c,
                    actor: m,
                    messages: 0,
                });
            }
        }
    }

    // ------------------------------------------------------------------
    // Requests
    // ------------------------------------------------------------------

    fn phase_requests(&mut self) {
        let rate = self.world.cfg.request_rate;
        let count = poisson(&mut self.world.workload_rng, rate);
        let mut requests: Vec<(NodeId, DataId)> = Vec::new();
        for _ in 0..count {
            if let Some(r) = draw_request(&mut self.world) {
                requests.push(r);
            }
        }
        requests.sort_by_key(|(requester, _)| *requester);
        for (requester, d) in requests {
            if !self.world.is_live(requester) {
                continue;
            }
            let outcome: RequestOutcome = discovery::resolve(&mut self.world, requester, d);
            self.world.record_request_outcome(&outcome);
        }
    }
}

/// Run a whole scenario to completion.
pub fn run(
    cfg: &SimConfig,
    schedule: &Schedule,
    trace_enabled: bool,
) -> Result<RunResult, Vec<String>> {
    let mut sim = Simulation::new(cfg, schedule, trace_enabled)?;
    sim.run_to_completion();
    Ok(sim.into_result())
}
