//! Resolution behavior on hand-built topologies with hand-enumerated
//! message counts.
//!
//! Geometry used throughout: r = 100, so the grid edge is 70.71 and two
//! nodes in the same cell are always one hop apart.

use coopcache_core::discovery::{resolve_hop_by_hop, resolve_hybrid, resolve_nc};
use coopcache_core::trace::{PreReqOp, TraceEvent};
use coopcache_core::{DataId, DataItem, DiscoveryPolicy, Level, NodeId, SimConfig, WorldBuilder};

fn base_cfg() -> SimConfig {
    let mut cfg = SimConfig::example();
    cfg.world_width = 800.0;
    cfg.world_height = 200.0;
    cfg.transmission_range = 100.0;
    cfg.catalog_size = 10;
    cfg.cache_capacity = 10;
    cfg.prereq_capacity = 10;
    cfg.policy = DiscoveryPolicy::Hybrid;
    cfg
}

fn catalog10() -> Vec<DataItem> {
    (0..10)
        .map(|i| DataItem {
            id: DataId(i),
            size: 1,
            ttl: 1000,
        })
        .collect()
}

/// Server at the origin, nodes 1..=7 spaced exactly r apart on a line.
/// Every node ends up alone in its own grid cell.
fn line_world() -> WorldBuilder {
    let mut b = WorldBuilder::new(base_cfg())
        .catalog(catalog10())
        .trace(true);
    for i in 1..=7u32 {
        b = b.node(i, i as f64 * 100.0, 0.0);
    }
    b
}

/// One three-node cluster in cell (1,0); node 3 wins the bootstrap
/// election (smallest neighbour-distance sum). The server is two hops
/// from node 2 via node 1.
fn cluster_world() -> WorldBuilder {
    WorldBuilder::new(base_cfg())
        .catalog(catalog10())
        .trace(true)
        .node(1, 75.0, 5.0)
        .node(2, 140.0, 60.0)
        .node(3, 100.0, 30.0)
}

/// A chain of singleton clusters plus a two-node cluster {3, 4} whose
/// head is 3; requester 4 reaches the server in three hops via 2 and 1.
fn chain_world() -> WorldBuilder {
    WorldBuilder::new(base_cfg())
        .catalog(catalog10())
        .trace(true)
        .node(1, 75.0, 5.0)
        .node(2, 150.0, 10.0)
        .node(3, 225.0, 15.0)
        .node(4, 226.0, 16.0)
}

/// `chain_world` plus node 5 in relay 2's cluster (cell (2,0), head 2).
fn chain_world_with_sidekick() -> WorldBuilder {
    chain_world().node(5, 152.0, 60.0)
}

#[test]
fn nc_ignores_on_route_copies() {
    // An up-path node holds the item; non-cooperative resolution still
    // travels all the way to the server.
    let mut w = line_world().cache_item(4, 5, 0).build();
    let o = resolve_nc(&mut w, NodeId(7), DataId(5));
    assert_eq!(o.served_by, Level::Server);
    assert_eq!(o.serving_node, Some(NodeId(0)));
    assert_eq!((o.control_messages, o.data_messages), (7, 7));
    assert_eq!(o.hops_traveled, 14);
}

#[test]
fn nc_serves_locally_when_possible() {
    let mut w = line_world().cache_item(7, 5, 0).build();
    let o = resolve_nc(&mut w, NodeId(7), DataId(5));
    assert_eq!(o.served_by, Level::LocalCache);
    assert_eq!(o.hops_traveled, 0);
    assert_eq!((o.control_messages, o.data_messages), (0, 0));
}

#[test]
fn unreachable_server_fails_under_every_policy() {
    let cfg = base_cfg();
    for resolver in [resolve_nc, resolve_hop_by_hop, resolve_hybrid] {
        let mut w = WorldBuilder::new(cfg.clone())
            .catalog(catalog10())
            .node(1, 300.0, 150.0)
            .build();
        let o = resolver(&mut w, NodeId(1), DataId(2));
        assert_eq!(o.served_by, Level::Failed);
        assert_eq!(o.serving_node, None);
        assert_eq!(o.data_messages, 0);
        assert_eq!(o.hops_traveled, 0);
    }
}

#[test]
fn hop_by_hop_serves_from_the_up_path_copy() {
    let mut w = line_world().cache_item(4, 5, 0).build();
    let o = resolve_hop_by_hop(&mut w, NodeId(7), DataId(5));
    assert_eq!(o.served_by, Level::RoutingPathLocal);
    assert_eq!(o.serving_node, Some(NodeId(4)));
    assert_eq!((o.control_messages, o.data_messages), (3, 3));
    assert_eq!(o.hops_traveled, 6); // strictly fewer than NC's 14
}

#[test]
fn hop_by_hop_never_uses_off_path_neighbors() {
    // Node 9 is an immediate neighbour of the requester but off the
    // forwarding route; the request still goes to the server.
    let mut b = WorldBuilder::new(base_cfg())
        .catalog(catalog10())
        .trace(true);
    b = b
        .node(1, 100.0, 0.0)
        .node(2, 200.0, 0.0)
        .node(3, 300.0, 0.0)
        .node(9, 300.0, 80.0)
        .cache_item(9, 5, 0);
    let mut w = b.build();
    let o = resolve_hop_by_hop(&mut w, NodeId(3), DataId(5));
    assert_eq!(o.served_by, Level::Server);
    assert_eq!((o.control_messages, o.data_messages), (3, 3));
}

#[test]
fn hop_by_hop_reaches_the_server_when_nothing_is_cached() {
    let mut w = line_world().build();
    let o = resolve_hop_by_hop(&mut w, NodeId(3), DataId(2));
    assert_eq!(o.served_by, Level::Server);
    assert_eq!((o.control_messages, o.data_messages), (3, 3));
    assert_eq!(o.hops_traveled, 6);
}

#[test]
fn hybrid_local_hit_matches_nc() {
    let mut w1 = line_world().cache_item(7, 5, 0).build();
    let mut w2 = line_world().cache_item(7, 5, 0).build();
    let a = resolve_nc(&mut w1, NodeId(7), DataId(5));
    let b = resolve_hybrid(&mut w2, NodeId(7), DataId(5));
    assert_eq!(a.served_by, Level::LocalCache);
    assert_eq!(b.served_by, Level::LocalCache);
    assert_eq!(a.hops_traveled, b.hops_traveled);
    assert_eq!(a.control_messages, b.control_messages);
}

#[test]
fn hybrid_prereq_hint_fetch() {
    // Requester 6 knows of a live two-hop holder while the server is six
    // hops away: served at the PreReq level, two hops out and two back.
    let mut w = line_world().cache_item(4, 5, 0).hint(6, 5, 4, 2).build();
    let o = resolve_hybrid(&mut w, NodeId(6), DataId(5));
    assert_eq!(o.served_by, Level::PreReq);
    assert_eq!(o.serving_node, Some(NodeId(4)));
    assert_eq!(o.hops_traveled, 4);
    assert_eq!((o.control_messages, o.data_messages), (2, 2));

    // the serving node counted the observed request against its copy
    let popularity = w
        .node(NodeId(4))
        .unwrap()
        .prereq
        .get(DataId(5))
        .unwrap()
        .popularity;
    assert_eq!(popularity, 1);
    // the relay on the reply path learned a confirmed one-hop hint
    let hints = w.node(NodeId(5)).unwrap().prereq.lookup(DataId(5), 0);
    assert_eq!(hints, vec![(NodeId(4), 1)]);
}

#[test]
fn hybrid_stale_hint_is_invalidated_then_falls_through() {
    // The hint points at node 4, which does not hold the item.
    let mut w = line_world().hint(6, 5, 4, 2).build();
    let o = resolve_hybrid(&mut w, NodeId(6), DataId(5));
    assert_eq!(o.served_by, Level::Server);
    // stale attempt: 2 out + 2 nack; then the plain 6-hop walk
    assert_eq!((o.control_messages, o.data_messages), (10, 6));
    assert_eq!(o.hops_traveled, 12);

    assert!(w
        .node(NodeId(6))
        .unwrap()
        .prereq
        .lookup(DataId(5), 0)
        .is_empty());
    let invalidated = w.trace_events().iter().any(|e| {
        matches!(e, TraceEvent::PreReq { node, op: PreReqOp::Invalidate, data_id, .. }
            if *node == NodeId(6) && *data_id == DataId(5))
    });
    assert!(
        invalidated,
        "the failed fetch must be traced as an invalidation"
    );
}

#[test]
fn hybrid_home_cluster_head_serves_directly() {
    let mut w = cluster_world().cache_item(3, 5, 0).build();
    assert_eq!(
        w.cluster_record(w.node(NodeId(2)).unwrap().cluster)
            .unwrap()
            .head,
        NodeId(3)
    );
    let o = resolve_hybrid(&mut w, NodeId(2), DataId(5));
    assert_eq!(o.served_by, Level::HomeCluster);
    assert_eq!(o.serving_node, Some(NodeId(3)));
    // lookup out, data back
    assert_eq!(o.hops_traveled, 2);
    assert_eq!((o.control_messages, o.data_messages), (1, 1));
}

#[test]
fn hybrid_home_cluster_member_serves_after_confirm() {
    let mut w = cluster_world().cache_item(1, 5, 0).build();
    let o = resolve_hybrid(&mut w, NodeId(2), DataId(5));
    assert_eq!(o.served_by, Level::HomeCluster);
    assert_eq!(o.serving_node, Some(NodeId(1)));
    // lookup + ack + confirm + data, all one-hop
    assert_eq!(o.hops_traveled, 4);
    assert_eq!((o.control_messages, o.data_messages), (3, 1));
}

#[test]
fn hybrid_head_requester_uses_its_own_table_silently() {
    let mut w = cluster_world().cache_item(1, 5, 0).build();
    let o = resolve_hybrid(&mut w, NodeId(3), DataId(5));
    assert_eq!(o.served_by, Level::HomeCluster);
    assert_eq!(o.serving_node, Some(NodeId(1)));
    // no lookup, no ack; just confirm + data
    assert_eq!(o.hops_traveled, 2);
    assert_eq!((o.control_messages, o.data_messages), (1, 1));
}

#[test]
fn hybrid_cold_world_costs_nc_plus_the_head_consultation() {
    let mut w_nc = cluster_world().build();
    let mut w_hy = cluster_world().build();
    let nc = resolve_nc(&mut w_nc, NodeId(2), DataId(5));
    let hy = resolve_hybrid(&mut w_hy, NodeId(2), DataId(5));
    assert_eq!(nc.served_by, Level::Server);
    assert_eq!(hy.served_by, Level::Server);
    assert_eq!(nc.hops_traveled, hy.hops_traveled);
    assert_eq!(nc.data_messages, hy.data_messages);
    // the lookup and the no-id reply are the only extra traffic
    assert_eq!(hy.control_messages, nc.control_messages + 2);
}

#[test]
fn hybrid_consultation_miss_then_three_hop_server_fetch() {
    // Requester 4's head is node 3; relays 2 and 1 are their own heads,
    // so their consultations are free. Control: 2 (lookup + no-id) plus
    // the 3-hop walk; data: the 3-hop reply.
    let mut w = chain_world().build();
    let o = resolve_hybrid(&mut w, NodeId(4), DataId(5));
    assert_eq!(o.served_by, Level::Server);
    assert_eq!((o.control_messages, o.data_messages), (5, 3));
    assert_eq!(o.hops_traveled, 6);
}

#[test]
fn hybrid_on_path_cluster_discovery() {
    // Node 5 sits off-path in relay 2's cluster and holds the item; the
    // relay is its own head, so the consult is free and the ack is one
    // hop. The requester then confirms directly with node 5.
    let mut w = chain_world_with_sidekick().cache_item(5, 7, 0).build();
    let mut w_hbh = w.clone();
    let o = resolve_hybrid(&mut w, NodeId(4), DataId(7));
    assert_eq!(o.served_by, Level::RoutingPathCluster);
    assert_eq!(o.serving_node, Some(NodeId(5)));
    // L3 miss (2) + walk to relay (1) + ack (1) + confirm (1) = 5 control
    assert_eq!((o.control_messages, o.data_messages), (5, 1));
    assert_eq!(o.hops_traveled, 4);

    // the off-path copy is invisible to hop-by-hop, which pays the full
    // server route; the cluster holder cuts the data path
    let hbh = resolve_hop_by_hop(&mut w_hbh, NodeId(4), DataId(7));
    assert_eq!(hbh.served_by, Level::Server);
    assert!(o.data_messages < hbh.data_messages);
}

#[test]
fn hybrid_on_path_prereq_ack_wins_over_cluster() {
    // Same topology, but the relay also has a PreReq hint for the item;
    // the hint level is checked before the relay's head.
    let mut w = chain_world_with_sidekick()
        .cache_item(5, 7, 0)
        .hint(2, 7, 5, 1)
        .build();
    let o = resolve_hybrid(&mut w, NodeId(4), DataId(7));
    assert_eq!(o.served_by, Level::RoutingPathPreReq);
    assert_eq!(o.serving_node, Some(NodeId(5)));
    assert_eq!((o.control_messages, o.data_messages), (5, 1));
    assert_eq!(o.hops_traveled, 4);
}

#[test]
fn hybrid_stale_on_path_hint_invalidates_at_the_relay() {
    let mut w = chain_world_with_sidekick().hint(2, 7, 5, 1).build();
    let o = resolve_hybrid(&mut w, NodeId(4), DataId(7));
    assert_eq!(o.served_by, Level::Server);
    // L3 (2) + walk (3) + ack (1) + confirm (1) + nack (1) + resume (1)
    assert_eq!((o.control_messages, o.data_messages), (9, 3));
    assert_eq!(o.hops_traveled, 6);
    assert!(w
        .node(NodeId(2))
        .unwrap()
        .prereq
        .lookup(DataId(7), 0)
        .is_empty());
}

#[test]
fn hybrid_requester_caches_what_it_fetched() {
    let mut w = line_world().build();
    let first = resolve_hybrid(&mut w, NodeId(3), DataId(2));
    assert_eq!(first.served_by, Level::Server);
    assert!(matches!(
        w.node(NodeId(3)).unwrap().cache.get(DataId(2)),
        Some(e) if e.is_valid(w.tick)
    ));
    let second = resolve_hybrid(&mut w, NodeId(3), DataId(2));
    assert_eq!(second.served_by, Level::LocalCache);
    assert_eq!(second.hops_traveled, 0);
}

#[test]
fn hop_by_hop_never_travels_farther_than_nc() {
    use coopcache_core::rng::{derive_stream, uniform_f64, uniform_index, StreamDomain};
    for seed in 0..200u64 {
        let mut rng = derive_stream(seed, StreamDomain::Workload, 4242);
        let n = 3 + uniform_index(&mut rng, 10) as u32;
        let mut cfg = base_cfg();
        cfg.world_width = 300.0;
        cfg.world_height = 300.0;
        let mut b = WorldBuilder::new(cfg).catalog(catalog10());
        for id in 1..=n {
            b = b.node(
                id,
                uniform_f64(&mut rng, 0.0, 300.0),
                uniform_f64(&mut rng, 0.0, 300.0),
            );
        }
        for id in 1..=n {
            for item in 0..10u32 {
                if uniform_index(&mut rng, 5) == 0 {
                    b = b.cache_item(id, item, 0);
                }
            }
        }
        let frozen = b.build();
        let requester = NodeId(1 + uniform_index(&mut rng, n as usize) as u32);
        let item = DataId(uniform_index(&mut rng, 10) as u32);

        let mut w_nc = frozen.clone();
        let mut w_hbh = frozen;
        let nc = resolve_nc(&mut w_nc, requester, item);
        let hbh = resolve_hop_by_hop(&mut w_hbh, requester, item);
        assert!(
            hbh.hops_traveled <= nc.hops_traveled,
            "seed {seed}: hop-by-hop {} > nc {}",
            hbh.hops_traveled,
            nc.hops_traveled
        );
    }
}

#[test]
fn expired_copies_never_serve() {
    // The holder's copy expires before the request is made.
    let mut builder = line_world().cache_item(4, 5, 0);
    builder = builder.hint(6, 5, 4, 2);
    let mut w = builder.build();
    w.tick = 2000; // past the 1000-tick TTL
    let o = resolve_hybrid(&mut w, NodeId(6), DataId(5));
    assert_ne!(o.served_by, Level::PreReq);
    assert_eq!(o.served_by, Level::Server);
    // and the local cache agrees the copy is dead
    assert!(!w.node(NodeId(4)).unwrap().cache.has_valid(DataId(5), 2000));
}
