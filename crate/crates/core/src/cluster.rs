//! The cluster cache state table kept by the elected head, lease timers,
//! and the decision logic of the maintenance cases: moves inside a
//! cluster, graceful member and head departures, first-node head claims,
//! and lease-expiry failure handling.
//!
//! Everything here is pure state manipulation; the engine wires these
//! decisions to message accounting, battery charges and the trace.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::election::{elect_head, ElectionResult, NodeMetrics};
use crate::model::{DataId, DataItem, NodeId, Position, Weights};
use crate::topology::{cluster_of, ClusterId, TopologySnapshot};

/// Registry of which cluster member caches which items, with their expiry
/// deadlines. The owner (current head) has a row like everyone else.
#[derive(Clone, PartialEq, Debug)]
pub struct ClusterCacheStateTable {
    pub owner: NodeId,
    rows: BTreeMap<NodeId, Vec<(DataId, u64)>>,
}

/// A renewable failure-detection timer on a peer.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LeaseTimer {
    pub peer: NodeId,
    pub expires_at: u64,
}

impl LeaseTimer {
    pub fn renew(&mut self, now: u64, lease_duration: u64) {
        self.expires_at = now + lease_duration;
    }

    pub fn expired(&self, now: u64) -> bool {
        now >= self.expires_at
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct UnknownMember(pub NodeId);

impl fmt::Display for UnknownMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {} has no row in the state table", self.0 .0)
    }
}

impl ClusterCacheStateTable {
    pub fn new(owner: NodeId) -> Self {
        let mut rows = BTreeMap::new();
        rows.insert(owner, Vec::new());
        ClusterCacheStateTable { owner, rows }
    }

    pub fn members(&self) -> impl Iterator<Item = &NodeId> {
        self.rows.keys()
    }

    pub fn has_member(&self, n: NodeId) -> bool {
        self.rows.contains_key(&n)
    }

    pub fn row(&self, n: NodeId) -> Option<&[(DataId, u64)]> {
        self.rows.get(&n).map(|r| r.as_slice())
    }

    /// Add a new member with its reported cache contents.
    pub fn insert_member(&mut self, member: NodeId, cached: Vec<(DataId, u64)>) {
        self.rows.insert(member, cached);
    }

    /// Drop a member's row entirely.
    pub fn remove_member(&mut self, member: NodeId) -> Option<Vec<(DataId, u64)>> {
        self.rows.remove(&member)
    }

    /// Replace a known member's row wholesale with a fresh report.
    /// Reports from departed nodes are rejected and change nothing.
    pub fn update(
        &mut self,
        member: NodeId,
        cached: Vec<(DataId, u64)>,
    ) -> Result<(), UnknownMember> {
        match self.rows.get_mut(&member) {
            Some(row) => {
                *row = cached;
                Ok(())
            }
            None => Err(UnknownMember(member)),
        }
    }

    /// Who holds a live copy of `d`: the owner's row is consulted first,
    /// then the other members in ascending id order.
    pub fn lookup(&self, d: DataId, now: u64) -> Option<NodeId> {
        let holds = |n: &NodeId| {
            self.rows
                .get(n)
                .is_some_and(|row| row.iter().any(|(id, deadline)| *id == d && now < *deadline))
        };
        if holds(&self.owner) {
            return Some(self.owner);
        }
        self.rows
            .keys()
            .filter(|n| **n != self.owner)
            .find(|n| holds(n))
            .copied()
    }

    /// True when any row lists a live copy of `d`.
    pub fn anyone_holds(&self, d: DataId, now: u64) -> bool {
        self.lookup(d, now).is_some()
    }
}

/// Where one item left behind by a departing member should go.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RescuePlacement {
    /// The data is already cached somewhere in the cluster; do nothing.
    AlreadyInCluster,
    /// Cache at this node; it reported enough free space.
    CacheAt(NodeId),
    /// Nobody has room: the head caches it, evicting via replacement.
    CacheAtHeadEvicting,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RescueAction {
    pub item: DataItem,
    pub placement: RescuePlacement,
}

/// A member leaves gracefully: its row is dropped and each item it held
/// is placed per the rescue rules — skip if present elsewhere in the
/// cluster, else head with free space, else the smallest member with free
/// space, else the head with eviction. `free_capacity` maps the remaining
/// members (head included) to their free space; the plan debits it as it
/// assigns items.
pub fn member_leave(
    table: &mut ClusterCacheStateTable,
    leaving: NodeId,
    leaving_items: &[DataItem],
    free_capacity: &BTreeMap<NodeId, u32>,
    now: u64,
) -> Vec<RescueAction> {
    table.remove_member(leaving);

    let mut free = free_capacity.clone();
    let head = table.owner;
    let mut actions = Vec::new();

    for item in leaving_items {
        let placement = if table.anyone_holds(item.id, now) {
            RescuePlacement::AlreadyInCluster
        } else if free.get(&head).copied().unwrap_or(0) >= item.size {
            *free.get_mut(&head).unwrap() -= item.size;
            RescuePlacement::CacheAt(head)
        } else if let Some(n) = free
            .iter()
            .filter(|(n, space)| **n != head && **space >= item.size)
            .map(|(n, _)| *n)
            .next()
        {
            *free.get_mut(&n).unwrap() -= item.size;
            RescuePlacement::CacheAt(n)
        } else {
            RescuePlacement::CacheAtHeadEvicting
        };
        actions.push(RescueAction {
            item: *item,
            placement,
        });
    }
    actions
}

/// Outcome of a node's entry broadcast into a cluster.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum JoinOutcome {
    /// A same-cluster neighbour replied with the head's id; join it.
    Joined(NodeId),
    /// No reply: the node is the first in this cluster and will claim
    /// headship after the silence threshold.
    BecameHead,
}

/// Decide how a node entering at `pos` joins its new cluster. A head is
/// only advertised when it is alive and still located in this cluster;
/// neighbours in range but in other cells never reply.
pub fn node_enter(
    _entering: NodeId,
    pos: Position,
    snap: &TopologySnapshot,
    heads: &BTreeMap<ClusterId, NodeId>,
) -> JoinOutcome {
    let cluster = cluster_of(pos, snap.grid);
    if let Some(head) = heads.get(&cluster) {
        if let Some(head_pos) = snap.position(*head) {
            if cluster_of(head_pos, snap.grid) == cluster {
                return JoinOutcome::Joined(*head);
            }
        }
    }
    JoinOutcome::BecameHead
}

/// The head leaves gracefully: the next most qualified remaining member
/// is elected and receives the full table (minus the departed row).
/// Returns `None` when the head was alone and the cluster empties.
pub fn head_leave(
    old_head: NodeId,
    members_metrics: &BTreeMap<NodeId, NodeMetrics>,
    mut table: ClusterCacheStateTable,
    cluster: ClusterId,
    weights: &Weights,
) -> Option<(ElectionResult, ClusterCacheStateTable)> {
    table.remove_member(old_head);
    if members_metrics.is_empty() {
        return None;
    }
    let result = elect_head(cluster, members_metrics, weights);
    table.owner = result.head;
    if !table.has_member(result.head) {
        table.insert_member(result.head, Vec::new());
    }
    Some((result, table))
}

/// A member's lease on the head expired: the detector gathers weights
/// from the survivors and selects the new head. The caller rebuilds the
/// table from fresh cache reports.
pub fn head_timeout(
    _detector: NodeId,
    members_metrics: &BTreeMap<NodeId, NodeMetrics>,
    cluster: ClusterId,
    weights: &Weights,
) -> ElectionResult {
    elect_head(cluster, members_metrics, weights)
}

/// The head's lease on a member expired: the row is dropped with no data
/// rescue.
pub fn member_timeout(table: &mut ClusterCacheStateTable, silent: NodeId) {
    table.remove_member(silent);
}
