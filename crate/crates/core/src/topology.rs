//! Unit-disk connectivity, grid clustering and minimum-hop routing.
//!
//! The world is tiled by square grid cells of edge `g = r / sqrt(2)`, so
//! any two nodes in the same cell are within one radio hop of each other.
//! Cells at the world border keep the nominal edge length; the grid simply
//! tiles the plane.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;
use core::fmt;

use crate::model::{distance, NodeId, Position};

/// Grid cell identifier: column and row of the cell containing a position.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ClusterId {
    pub gx: i64,
    pub gy: i64,
}

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.gx, self.gy)
    }
}

/// Immutable positions-plus-parameters view of the world at one tick.
#[derive(Clone, PartialEq, Debug)]
pub struct TopologySnapshot {
    pub positions: BTreeMap<NodeId, Position>,
    pub range: f64,
    pub grid: f64,
    pub server_node: NodeId,
}

impl TopologySnapshot {
    pub fn new(positions: BTreeMap<NodeId, Position>, range: f64, server_node: NodeId) -> Self {
        let grid = grid_size(range);
        TopologySnapshot {
            positions,
            range,
            grid,
            server_node,
        }
    }

    pub fn position(&self, n: NodeId) -> Option<Position> {
        self.positions.get(&n).copied()
    }

    pub fn cluster(&self, n: NodeId) -> Option<ClusterId> {
        self.position(n).map(|p| cluster_of(p, self.grid))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct UnknownNode(pub NodeId);

impl fmt::Display for UnknownNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {} is not in the snapshot", self.0 .0)
    }
}

/// Grid cell edge for transmission range `r`. The cell diagonal then equals
/// `r`, which makes every same-cell pair mutually reachable in one hop.
pub fn grid_size(range: f64) -> f64 {
    range / libm::sqrt(2.0)
}

/// Cell containing `p` for grid edge `g`. Boundaries are lower-inclusive:
/// a coordinate exactly at `k*g` belongs to cell `k`.
pub fn cluster_of(p: Position, g: f64) -> ClusterId {
    ClusterId {
        gx: libm::floor(p.x / g) as i64,
        gy: libm::floor(p.y / g) as i64,
    }
}

/// All nodes within transmission range of `n`, excluding `n` itself.
/// The relation is symmetric and the range boundary is inclusive.
pub fn neighbors(n: NodeId, snap: &TopologySnapshot) -> Result<BTreeSet<NodeId>, UnknownNode> {
    let own = snap.position(n).ok_or(UnknownNode(n))?;
    Ok(snap
        .positions
        .iter()
        .filter(|(m, p)| **m != n && distance(own, **p) <= snap.range)
        .map(|(m, _)| *m)
        .collect())
}

/// Result of a shortest-path query.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PathResult {
    /// Node sequence from source to destination, inclusive.
    Path(Vec<NodeId>),
    Unreachable,
}

impl PathResult {
    /// Hop count of the path, if one exists.
    pub fn hops(&self) -> Option<usize> {
        match self {
            PathResult::Path(p) => Some(p.len() - 1),
            PathResult::Unreachable => None,
        }
    }

    pub fn nodes(&self) -> Option<&[NodeId]> {
        match self {
            PathResult::Path(p) => Some(p),
            PathResult::Unreachable => None,
        }
    }
}

/// Minimum-hop path over the unit-disk graph. Among equal-hop paths the
/// lexicographically smallest node sequence is returned: the BFS expands
/// neighbours in ascending id order and fixes each node's parent at first
/// discovery, which makes the parent chain the smallest prefix.
pub fn shortest_path(
    src: NodeId,
    dst: NodeId,
    snap: &TopologySnapshot,
) -> Result<PathResult, UnknownNode> {
    if snap.position(src).is_none() {
        return Err(UnknownNode(src));
    }
    if snap.position(dst).is_none() {
        return Err(UnknownNode(dst));
    }
    if src == dst {
        return Ok(PathResult::Path(alloc::vec![src]));
    }

    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    parent.insert(src, src);
    queue.push_back(src);

    while let Some(u) = queue.pop_front() {
        if u == dst {
            break;
        }
        // neighbors() yields ascending NodeId order.
        for v in neighbors(u, snap).expect("node came from the snapshot") {
            if let alloc::collections::btree_map::Entry::Vacant(e) = parent.entry(v) {
                e.insert(u);
                queue.push_back(v);
            }
        }
    }

    if !parent.contains_key(&dst) {
        return Ok(PathResult::Unreachable);
    }
    let mut path = alloc::vec![dst];
    let mut cur = dst;
    while cur != src {
        cur = parent[&cur];
        path.push(cur);
    }
    path.reverse();
    Ok(PathResult::Path(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, uniform_f64, StreamDomain};
    use proptest::prelude::*;

    fn snap(points: &[(u32, f64, f64)], range: f64) -> TopologySnapshot {
        let positions = points
            .iter()
            .map(|(id, x, y)| (NodeId(*id), Position::new(*x, *y)))
            .collect();
        TopologySnapshot::new(positions, range, NodeId(0))
    }

    #[test]
    fn grid_size_matches_closed_form() {
        assert!((grid_size(100.0) - 70.71068).abs() < 1e-4);
        assert!((grid_size(core::f64::consts::SQRT_2) - 1.0).abs() < 1e-12);
        assert!((grid_size(250.0) - 176.7767).abs() < 1e-3);
    }

    #[test]
    fn cluster_boundaries_are_lower_inclusive() {
        let g = 70.71;
        assert_eq!(
            cluster_of(Position::new(0.0, 0.0), g),
            ClusterId { gx: 0, gy: 0 }
        );
        assert_eq!(
            cluster_of(Position::new(70.71, 0.0), g),
            ClusterId { gx: 1, gy: 0 }
        );
    }

    #[test]
    fn single_node_has_no_neighbors() {
        let s = snap(&[(1, 0.0, 0.0)], 10.0);
        assert!(neighbors(NodeId(1), &s).unwrap().is_empty());
    }

    #[test]
    fn range_boundary_is_inclusive() {
        let s = snap(&[(1, 0.0, 0.0), (2, 10.0, 0.0)], 10.0);
        assert!(neighbors(NodeId(1), &s).unwrap().contains(&NodeId(2)));
        assert!(neighbors(NodeId(2), &s).unwrap().contains(&NodeId(1)));
    }

    #[test]
    fn collinear_line_neighbor_counts() {
        let s = snap(&[(1, 0.0, 0.0), (2, 10.0, 0.0), (3, 20.0, 0.0)], 10.0);
        assert_eq!(neighbors(NodeId(1), &s).unwrap().len(), 1);
        assert_eq!(neighbors(NodeId(2), &s).unwrap().len(), 2);
        assert_eq!(neighbors(NodeId(3), &s).unwrap().len(), 1);
    }

    #[test]
    fn unknown_node_is_an_error() {
        let s = snap(&[(1, 0.0, 0.0)], 10.0);
        assert_eq!(neighbors(NodeId(9), &s), Err(UnknownNode(NodeId(9))));
    }

    #[test]
    fn path_to_self_is_trivial() {
        let s = snap(&[(1, 0.0, 0.0)], 10.0);
        let p = shortest_path(NodeId(1), NodeId(1), &s).unwrap();
        assert_eq!(p, PathResult::Path(alloc::vec![NodeId(1)]));
        assert_eq!(p.hops(), Some(0));
    }

    #[test]
    fn line_path_and_unreachable() {
        let s = snap(
            &[
                (1, 0.0, 0.0),
                (2, 10.0, 0.0),
                (3, 20.0, 0.0),
                (9, 500.0, 0.0),
            ],
            10.0,
        );
        let p = shortest_path(NodeId(1), NodeId(3), &s).unwrap();
        assert_eq!(
            p,
            PathResult::Path(alloc::vec![NodeId(1), NodeId(2), NodeId(3)])
        );
        assert_eq!(
            shortest_path(NodeId(1), NodeId(9), &s).unwrap(),
            PathResult::Unreachable
        );
    }

    #[test]
    fn equal_hop_tie_breaks_lexicographically() {
        // Two 2-hop routes 1->2->4 and 1->3->4; the relay with the smaller
        // id must win.
        let s = snap(
            &[(1, 0.0, 0.0), (2, 8.0, 4.0), (3, 8.0, -4.0), (4, 16.0, 0.0)],
            10.0,
        );
        let p = shortest_path(NodeId(1), NodeId(4), &s).unwrap();
        assert_eq!(
            p,
            PathResult::Path(alloc::vec![NodeId(1), NodeId(2), NodeId(4)])
        );
    }

    /// Plain BFS distance with no tie-breaking, used as an oracle.
    fn bfs_distance(src: NodeId, dst: NodeId, s: &TopologySnapshot) -> Option<usize> {
        let mut dist: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut queue = VecDeque::new();
        dist.insert(src, 0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            for v in neighbors(u, s).unwrap() {
                if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist.get(&dst).copied()
    }

    proptest! {
        #[test]
        fn same_cell_pairs_are_within_range(seed in 0u64..1000) {
            let mut rng = derive_stream(seed, StreamDomain::Placement, 99);
            let r = 100.0;
            let g = grid_size(r);
            for _ in 0..50 {
                let cell_x = uniform_f64(&mut rng, 0.0, 4.0) as i64 as f64;
                let cell_y = uniform_f64(&mut rng, 0.0, 4.0) as i64 as f64;
                let a = Position::new(
                    (cell_x + uniform_f64(&mut rng, 0.0, 1.0)) * g,
                    (cell_y + uniform_f64(&mut rng, 0.0, 1.0)) * g,
                );
                let b = Position::new(
                    (cell_x + uniform_f64(&mut rng, 0.0, 1.0)) * g,
                    (cell_y + uniform_f64(&mut rng, 0.0, 1.0)) * g,
                );
                prop_assert_eq!(cluster_of(a, g), cluster_of(b, g));
                prop_assert!(distance(a, b) <= r);
            }
        }

        #[test]
        fn hop_count_matches_bfs_oracle(seed in 0u64..500) {
            let mut rng = derive_stream(seed, StreamDomain::Placement, 7);
            let n = 2 + (seed % 10) as u32;
            let positions: BTreeMap<NodeId, Position> = (1..=n)
                .map(|i| {
                    (
                        NodeId(i),
                        Position::new(
                            uniform_f64(&mut rng, 0.0, 120.0),
                            uniform_f64(&mut rng, 0.0, 120.0),
                        ),
                    )
                })
                .collect();
            let s = TopologySnapshot::new(positions, 40.0, NodeId(1));
            for src in 1..=n {
                for dst in 1..=n {
                    let got = shortest_path(NodeId(src), NodeId(dst), &s).unwrap();
                    prop_assert_eq!(got.hops(), bfs_distance(NodeId(src), NodeId(dst), &s));
                }
            }
        }

        #[test]
        fn neighbor_relation_is_symmetric_irreflexive(seed in 0u64..300) {
            let mut rng = derive_stream(seed, StreamDomain::Placement, 13);
            let positions: BTreeMap<NodeId, Position> = (1..=8u32)
                .map(|i| {
                    (
                        NodeId(i),
                        Position::new(
                            uniform_f64(&mut rng, 0.0, 100.0),
                            uniform_f64(&mut rng, 0.0, 100.0),
                        ),
                    )
                })
                .collect();
            let s = TopologySnapshot::new(positions, 35.0, NodeId(1));
            for i in 1..=8u32 {
                let ni = neighbors(NodeId(i), &s).unwrap();
                prop_assert!(!ni.contains(&NodeId(i)));
                for j in ni {
                    prop_assert!(neighbors(j, &s).unwrap().contains(&NodeId(i)));
                }
            }
        }
    }
}
