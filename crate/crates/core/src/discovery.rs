//! Request resolution under the three policies.
//!
//! `NC` consults only the requester's cache and then the server.
//! `HopByHop` lets nodes on the forwarding route serve from their caches.
//! `Hybrid` works through the discovery levels in strict order: own
//! cache, own PreReq hints, the home-cluster head, then the routing path
//! toward the server where every relay checks its cache, its PreReq and
//! its own head before forwarding, and finally the server itself.
//!
//! Message accounting charges one count per hop a message travels.
//! `hops_traveled` in the outcome covers only the successful serving
//! sequence; control spent on consultations that did not serve still
//! shows up in `control_messages`.
//!
//! PreReq learning along the way: a node receiving a request (relay,
//! fetch target or consulted head) records it before looking at its own
//! cache, so serving a neighbour's request still counts toward the
//! popularity of the held item. Relays on a data reply path merge a
//! confirmed holder hint (serving node plus hop distance) without
//! touching popularity; pure signalling legs (ack, nack, resume) teach
//! nothing.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::Deserialize;

use crate::model::{DataId, NodeId};
use crate::prereq::{choose_target, FetchTarget};
use crate::world::{World, SERVER_ID};

/// Which resolution scheme a run uses.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Deserialize)]
pub enum DiscoveryPolicy {
    NC,
    HopByHop,
    Hybrid,
}

impl DiscoveryPolicy {
    pub fn name(self) -> &'static str {
        match self {
            DiscoveryPolicy::NC => "NC",
            DiscoveryPolicy::HopByHop => "HopByHop",
            DiscoveryPolicy::Hybrid => "Hybrid",
        }
    }
}

impl fmt::Display for DiscoveryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiscoveryPolicy {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NC" => Ok(DiscoveryPolicy::NC),
            "HopByHop" => Ok(DiscoveryPolicy::HopByHop),
            "Hybrid" => Ok(DiscoveryPolicy::Hybrid),
            other => Err(alloc::format!("unknown policy: {other}")),
        }
    }
}

/// Which level of the scheme served (or failed) a request.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Level {
    LocalCache,
    PreReq,
    HomeCluster,
    RoutingPathLocal,
    RoutingPathPreReq,
    RoutingPathCluster,
    Server,
    Failed,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::LocalCache => "local_cache",
            Level::PreReq => "prereq",
            Level::HomeCluster => "home_cluster",
            Level::RoutingPathLocal => "routing_path_local",
            Level::RoutingPathPreReq => "routing_path_prereq",
            Level::RoutingPathCluster => "routing_path_cluster",
            Level::Server => "server",
            Level::Failed => "failed",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Full accounting of one resolved request.
#[derive(Clone, PartialEq, Debug)]
pub struct RequestOutcome {
    pub requester: NodeId,
    pub data_id: DataId,
    pub served_by: Level,
    pub serving_node: Option<NodeId>,
    pub hops_traveled: u64,
    pub control_messages: u64,
    pub data_messages: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MsgKind {
    Control,
    Data,
}

/// Sum message events into (control, data) hop counts.
pub fn account_messages(events: &[(MsgKind, u64)]) -> (u64, u64) {
    let mut control = 0;
    let mut data = 0;
    for (kind, hops) in events {
        match kind {
            MsgKind::Control => control += hops,
            MsgKind::Data => data += hops,
        }
    }
    (control, data)
}

/// Running message ledger for one request.
#[derive(Clone, Debug, Default)]
struct MessageLedger {
    events: Vec<(MsgKind, u64)>,
}

impl MessageLedger {
    fn new() -> Self {
        MessageLedger::default()
    }

    fn control(&mut self, hops: u64) {
        if hops > 0 {
            self.events.push((MsgKind::Control, hops));
        }
    }

    fn data(&mut self, hops: u64) {
        if hops > 0 {
            self.events.push((MsgKind::Data, hops));
        }
    }

    fn totals(&self) -> (u64, u64) {
        account_messages(&self.events)
    }
}

fn finish(
    requester: NodeId,
    data_id: DataId,
    served_by: Level,
    serving_node: Option<NodeId>,
    hops_traveled: u64,
    ledger: &MessageLedger,
) -> RequestOutcome {
    let (control_messages, data_messages) = ledger.totals();
    RequestOutcome {
        requester,
        data_id,
        served_by,
        serving_node,
        hops_traveled,
        control_messages,
        data_messages,
    }
}

/// Resolve one request under the world's configured policy.
pub fn resolve(world: &mut World, requester: NodeId, d: DataId) -> RequestOutcome {
    match world.cfg.policy {
        DiscoveryPolicy::NC => resolve_nc(world, requester, d),
        DiscoveryPolicy::HopByHop => resolve_hop_by_hop(world, requester, d),
        DiscoveryPolicy::Hybrid => resolve_hybrid(world, requester, d),
    }
}

/// Non-cooperative: local cache, else the server, no matter who sits on
/// the route.
pub fn resolve_nc(world: &mut World, requester: NodeId, d: DataId) -> RequestOutcome {
    let now = world.tick;
    let mut ledger = MessageLedger::new();

    if world
        .node_mut(requester)
        .expect("requester must be live")
        .cache
        .lookup(d, now)
        .is_hit()
    {
        return finish(requester, d, Level::LocalCache, Some(requester), 0, &ledger);
    }

    let Some(path) = world.server_route(requester) else {
        return finish(requester, d, Level::Failed, None, 0, &ledger);
    };
    let h = (path.len() - 1) as u64;
    ledger.control(h);
    world.charge_path(&path);

    let mut back = path;
    back.reverse();
    ledger.data(h);
    world.charge_path(&back);

    let item = world.catalog_item(d);
    world.admit_after_fetch(requester, item, None, false);
    finish(requester, d, Level::Server, Some(SERVER_ID), 2 * h, &ledger)
}

/// Hop-by-hop: the request walks the route to the server and the first
/// node holding a live copy answers. Off-path neighbours never serve.
pub fn resolve_hop_by_hop(world: &mut World, requester: NodeId, d: DataId) -> RequestOutcome {
    let now = world.tick;
    let mut ledger = MessageLedger::new();

    if world
        .node_mut(requester)
        .expect("requester must be live")
        .cache
        .lookup(d, now)
        .is_hit()
    {
        return finish(requester, d, Level::LocalCache, Some(requester), 0, &ledger);
    }

    let Some(path) = world.server_route(requester) else {
        return finish(requester, d, Level::Failed, None, 0, &ledger);
    };

    for i in 1..path.len() {
        let node = path[i];
        ledger.control(1);
        world.charge_path(&path[i - 1..=i]);

        let serves = if node == SERVER_ID {
            true
        } else {
            world.node_mut(node).unwrap().cache.lookup(d, now).is_hit()
        };
        if serves {
            let mut back: Vec<NodeId> = path[..=i].to_vec();
            back.reverse();
            ledger.data(i as u64);
            world.charge_path(&back);
            let item = world.catalog_item(d);
            world.admit_after_fetch(requester, item, None, false);
            let level = if node == SERVER_ID {
                Level::Server
            } else {
                Level::RoutingPathLocal
            };
            return finish(requester, d, level, Some(node), 2 * i as u64, &ledger);
        }
    }
    unreachable!("the walk always ends at the server");
}

enum FetchResult {
    /// The target held a live copy; the data traveled back `hops` hops.
    Served { hops: u64 },
    /// The target answered but no longer holds the item.
    Stale,
    /// No route to the target; nothing was sent.
    Unreachable,
}

/// Targeted fetch of `d` from `target`, driven by the requester. Request
/// relays observe the request; reply relays learn a confirmed hint.
fn attempt_fetch(
    world: &mut World,
    requester: NodeId,
    target: NodeId,
    d: DataId,
    ledger: &mut MessageLedger,
) -> FetchResult {
    if target == requester || target == SERVER_ID {
        return FetchResult::Unreachable;
    }
    let Some(path) = world.route(requester, target) else {
        return FetchResult::Unreachable;
    };
    let j = (path.len() - 1) as u64;
    ledger.control(j);
    world.charge_path(&path);
    for node in &path[1..] {
        world.observe_request(*node, d, None);
    }

    let now = world.tick;
    let hit = world
        .node_mut(target)
        .unwrap()
        .cache
        .lookup(d, now)
        .is_hit();
    let mut back = path;
    back.reverse();
    if hit {
        ledger.data(j);
        world.charge_path(&back);
        learn_from_reply(world, &back, d, Some(target));
        FetchResult::Served { hops: j }
    } else {
        // negative answer travels back
        ledger.control(j);
        world.charge_path(&back);
        FetchResult::Stale
    }
}

/// Relays strictly between the serving node and the requester merge a
/// confirmed holder hint: (holder, own hop distance to it).
fn learn_from_reply(world: &mut World, reply_path: &[NodeId], d: DataId, holder: Option<NodeId>) {
    if reply_path.len() < 3 {
        return;
    }
    for (k, node) in reply_path
        .iter()
        .enumerate()
        .skip(1)
        .take(reply_path.len() - 2)
    {
        world.merge_hint(*node, d, holder.map(|h| (h, k as u32)));
    }
}

enum HeadInfo {
    NoInfo,
    /// The head itself holds the item and will reply with data.
    HasData {
        head: NodeId,
    },
    /// The head acknowledged with the id of a member holding the item.
    Holder {
        head: NodeId,
        holder: NodeId,
    },
}

/// Ask `asker`'s believed head about `d`. Accounts the lookup leg and a
/// no-id reply; acks and data replies are routed by the caller since they
/// differ between the requester and on-path relays. Heads are consulted
/// at most once per request.
fn consult_head(
    world: &mut World,
    asker: NodeId,
    d: DataId,
    consulted: &mut BTreeSet<NodeId>,
    ledger: &mut MessageLedger,
) -> HeadInfo {
    let now = world.tick;
    let Some(node) = world.node(asker) else {
        return HeadInfo::NoInfo;
    };
    let Some(head) = node.head else {
        return HeadInfo::NoInfo;
    };
    if !consulted.insert(head) {
        return HeadInfo::NoInfo;
    }
    let cluster = node.cluster;

    if head == asker {
        // own table, no messages
        let holder = world
            .cluster_record(cluster)
            .filter(|r| r.head == head)
            .and_then(|r| r.table.lookup(d, now));
        return match holder {
            Some(m) if m != asker => HeadInfo::Holder { head, holder: m },
            _ => HeadInfo::NoInfo,
        };
    }

    // lookup message; one hop inside the cluster
    ledger.control(1);
    world.charge_path(&[asker, head]);
    let delivered = world.is_live(head)
        && world
            .cluster_record(cluster)
            .is_some_and(|r| r.head == head);
    if !delivered {
        return HeadInfo::NoInfo;
    }

    world.observe_request(head, d, None);
    world.renew_contact(asker, head);

    let holder = world
        .cluster_record(cluster)
        .and_then(|r| r.table.lookup(d, now));
    match holder {
        Some(m) if m == head => HeadInfo::HasData { head },
        Some(m) if m == asker => HeadInfo::NoInfo,
        Some(m) => HeadInfo::Holder { head, holder: m },
        None => {
            ledger.control(1);
            world.charge_path(&[head, asker]);
            HeadInfo::NoInfo
        }
    }
}

/// The four-level hybrid scheme, ending at the server.
pub fn resolve_hybrid(world: &mut World, requester: NodeId, d: DataId) -> RequestOutcome {
    let now = world.tick;
    let mut ledger = MessageLedger::new();
    let mut consulted: BTreeSet<NodeId> = BTreeSet::new();

    // Level 1: own cache.
    if world
        .node_mut(requester)
        .expect("requester must be live")
        .cache
        .lookup(d, now)
        .is_hit()
    {
        return finish(requester, d, Level::LocalCache, Some(requester), 0, &ledger);
    }

    // Level 2: own PreReq hints; one attempt at the closest, then move on.
    let candidates = world.prereq_lookup(requester, d);
    if !candidates.is_empty() {
        let server_hops = world
            .server_route(requester)
            .map(|p| (p.len() - 1) as u32)
            .unwrap_or(u32::MAX);
        if let FetchTarget::Target(t) = choose_target(&candidates, server_hops) {
            match attempt_fetch(world, requester, t, d, &mut ledger) {
                FetchResult::Served { hops } => {
                    let item = world.catalog_item(d);
                    world.admit_after_fetch(requester, item, Some((t, hops as u32)), true);
                    return finish(requester, d, Level::PreReq, Some(t), 2 * hops, &ledger);
                }
                FetchResult::Stale | FetchResult::Unreachable => {
                    world.prereq_invalidate(requester, d, t);
                }
            }
        }
    }

    // Level 3: the home-cluster head.
    match consult_head(world, requester, d, &mut consulted, &mut ledger) {
        HeadInfo::HasData { head } => {
            ledger.data(1);
            world.charge_path(&[head, requester]);
            world.touch_cache(head, d);
            let item = world.catalog_item(d);
            world.admit_after_fetch(requester, item, Some((head, 1)), true);
            return finish(requester, d, Level::HomeCluster, Some(head), 2, &ledger);
        }
        HeadInfo::Holder { head, holder } => {
            if let Some(confirm) = world.route(requester, holder) {
                let j = (confirm.len() - 1) as u64;
                let ack_hops = if head == requester { 0 } else { 1 };
                ledger.control(ack_hops);
                if ack_hops > 0 {
                    world.charge_path(&[head, requester]);
                }
                ledger.control(j);
                world.charge_path(&confirm);
                for n in &confirm[1..] {
                    world.observe_request(*n, d, None);
                }
                if world
                    .node_mut(holder)
                    .unwrap()
                    .cache
                    .lookup(d, now)
                    .is_hit()
                {
                    let mut back = confirm;
                    back.reverse();
                    ledger.data(j);
                    world.charge_path(&back);
                    learn_from_reply(world, &back, d, Some(holder));
                    let item = world.catalog_item(d);
                    world.admit_after_fetch(requester, item, Some((holder, j as u32)), true);
                    let lookup_hops = if head == requester { 0 } else { 1 };
                    let hops = lookup_hops + ack_hops + 2 * j;
                    return finish(
                        requester,
                        d,
                        Level::HomeCluster,
                        Some(holder),
                        hops,
                        &ledger,
                    );
                }
            }
            // dead or unreachable holder: the walk continues
        }
        HeadInfo::NoInfo => {}
    }

    // Levels 4 and 5: the routing path toward the server.
    let Some(path) = world.server_route(requester) else {
        return finish(requester, d, Level::Failed, None, 0, &ledger);
    };
    let h = path.len() - 1;

    for i in 1..=h {
        let hop_node = path[i];
        ledger.control(1);
        world.charge_path(&path[i - 1..=i]);

        if hop_node == SERVER_ID {
            let mut back: Vec<NodeId> = path[..=i].to_vec();
            back.reverse();
            ledger.data(i as u64);
            world.charge_path(&back);
            learn_from_reply(world, &back, d, None);
            let item = world.catalog_item(d);
            world.admit_after_fetch(requester, item, None, true);
            return finish(
                requester,
                d,
                Level::Server,
                Some(SERVER_ID),
                2 * h as u64,
                &ledger,
            );
        }

        world.observe_request(hop_node, d, None);

        // (a) the relay's own cache
        if world
            .node_mut(hop_node)
            .unwrap()
            .cache
            .lookup(d, now)
            .is_hit()
        {
            let mut back: Vec<NodeId> = path[..=i].to_vec();
            back.reverse();
            ledger.data(i as u64);
            world.charge_path(&back);
            learn_from_reply(world, &back, d, Some(hop_node));
            let item = world.catalog_item(d);
            world.admit_after_fetch(requester, item, Some((hop_node, i as u32)), true);
            return finish(
                requester,
                d,
                Level::RoutingPathLocal,
                Some(hop_node),
                2 * i as u64,
                &ledger,
            );
        }

        // (b) the relay's PreReq
        let candidates = world.prereq_lookup(hop_node, d);
        if !candidates.is_empty() {
            let remaining = (h - i) as u32;
            if let FetchTarget::Target(t) = choose_target(&candidates, remaining) {
                // ack with the holder id travels back to the requester
                let mut ack: Vec<NodeId> = path[..=i].to_vec();
                ack.reverse();
                ledger.control(i as u64);
                world.charge_path(&ack);
                match attempt_fetch(world, requester, t, d, &mut ledger) {
                    FetchResult::Served { hops: j } => {
                        let item = world.catalog_item(d);
                        world.admit_after_fetch(requester, item, Some((t, j as u32)), true);
                        return finish(
                            requester,
                            d,
                            Level::RoutingPathPreReq,
                            Some(t),
                            2 * i as u64 + 2 * j,
                            &ledger,
                        );
                    }
                    FetchResult::Stale | FetchResult::Unreachable => {
                        world.prereq_invalidate(hop_node, d, t);
                        // resume: the requester tells the relay to push on
                        ledger.control(i as u64);
                        world.charge_path(&path[..=i]);
                    }
                }
            }
        }

        // (c) the relay's own head. When the relay is its own head the
        // lookup and the head->relay legs vanish.
        match consult_head(world, hop_node, d, &mut consulted, &mut ledger) {
            HeadInfo::HasData { head } => {
                let extra = if head == hop_node { 0u64 } else { 1u64 };
                let mut data_path: Vec<NodeId> = Vec::new();
                if extra == 1 {
                    data_path.push(head);
                }
                let mut back: Vec<NodeId> = path[..=i].to_vec();
                back.reverse();
                data_path.extend(back);
                ledger.data(extra + i as u64);
                world.charge_path(&data_path);
                world.touch_cache(head, d);
                learn_from_reply(world, &data_path, d, Some(head));
                let item = world.catalog_item(d);
                world.admit_after_fetch(
                    requester,
                    item,
                    Some((head, (extra + i as u64) as u32)),
                    true,
                );
                return finish(
                    requester,
                    d,
                    Level::RoutingPathCluster,
                    Some(head),
                    2 * i as u64 + 2 * extra,
                    &ledger,
                );
            }
            HeadInfo::Holder { head, holder } => {
                // ack head -> relay -> requester
                let extra = if head == hop_node { 0u64 } else { 1u64 };
                let mut ack: Vec<NodeId> = Vec::new();
                if extra == 1 {
                    ack.push(head);
                }
                let mut back: Vec<NodeId> = path[..=i].to_vec();
                back.reverse();
                ack.extend(back);
                ledger.control(extra + i as u64);
                world.charge_path(&ack);
                match attempt_fetch(world, requester, holder, d, &mut ledger) {
                    FetchResult::Served { hops: j } => {
                        let item = world.catalog_item(d);
                        world.admit_after_fetch(requester, item, Some((holder, j as u32)), true);
                        return finish(
                            requester,
                            d,
                            Level::RoutingPathCluster,
                            Some(holder),
                            2 * i as u64 + 2 * j + 2 * extra,
                            &ledger,
                        );
                    }
                    FetchResult::Stale | FetchResult::Unreachable => {
                        // sound tables make stale impossible; a partition can
                        // still hide the holder. Resume the walk.
                        ledger.control(i as u64);
                        world.charge_path(&path[..=i]);
                    }
                }
            }
            HeadInfo::NoInfo => {}
        }
    }
    unreachable!("the walk always ends at the server");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn account_messages_sums_by_kind() {
        assert_eq!(account_messages(&[]), (0, 0));
        assert_eq!(
            account_messages(&[(MsgKind::Control, 1), (MsgKind::Data, 1)]),
            (1, 1)
        );
        assert_eq!(
            account_messages(&[
                (MsgKind::Control, 1),
                (MsgKind::Control, 1),
                (MsgKind::Control, 3),
                (MsgKind::Data, 3),
            ]),
            (5, 3)
        );
    }

    #[test]
    fn policy_names_round_trip() {
        for p in [
            DiscoveryPolicy::NC,
            DiscoveryPolicy::HopByHop,
            DiscoveryPolicy::Hybrid,
        ] {
            assert_eq!(p.name().parse::<DiscoveryPolicy>().unwrap(), p);
        }
        assert!("nc".parse::<DiscoveryPolicy>().is_err());
    }
}
