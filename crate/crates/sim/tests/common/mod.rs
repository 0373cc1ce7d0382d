#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use fanet_sim::config::AreaBounds;
use fanet_sim::engine::{Connection, Setup};
use fanet_sim::mobility::{NodeState, Vec3};
use fanet_sim::{NodeId, SimConfig, SimTime};

pub fn area() -> AreaBounds {
    AreaBounds::new([10_000.0, 10_000.0, 300.0])
}

/// Config for hand-built static layouts of `uavs` UAVs.
pub fn static_config(uavs: usize, duration_s: f64) -> SimConfig {
    SimConfig {
        area: area(),
        duration_s,
        node_count: uavs,
        traffic_connections: 0,
        gm_noise_scale: 0.0,
        window_s: 1.0,
        ..SimConfig::default()
    }
}

pub fn uav(id: NodeId, p: Vec3) -> NodeState {
    NodeState {
        id,
        position: p,
        velocity: Vec3::ZERO,
        mean_velocity: Vec3::ZERO,
        alpha: 0.5,
        is_attacker: false,
        is_gbs: false,
    }
}

/// Ground station parked far from everything else.
pub fn far_gbs() -> NodeState {
    NodeState { position: Vec3::new(9_900.0, 9_900.0, 0.0), ..NodeState::ground_station(0, &area()) }
}

/// UAVs 1..=n on a line, `spacing` meters apart.
pub fn line(n: usize, spacing: f64) -> Vec<NodeState> {
    let mut nodes = vec![far_gbs()];
    for i in 1..=n {
        nodes.push(uav(i, Vec3::new(100.0 + spacing * (i - 1) as f64, 100.0, 100.0)));
    }
    nodes
}

pub fn setup(nodes: Vec<NodeState>, flows: &[(NodeId, NodeId)], attackers: &[NodeId]) -> Setup {
    let mut nodes = nodes;
    for a in attackers {
        nodes[*a].is_attacker = true;
    }
    Setup {
        nodes,
        connections: flows
            .iter()
            .map(|&(source, destination)| Connection { source, destination, start: SimTime::from_secs_f64(0.5) })
            .collect(),
        attackers: attackers.iter().copied().collect(),
        frozen: false,
    }
}

/// Breadth-first hop distances from `src` over the unit-disk graph.
pub fn bfs_hops(nodes: &[NodeState], range: f64, src: NodeId) -> Vec<Option<u32>> {
    let mut dist = vec![None; nodes.len()];
    dist[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for v in 0..nodes.len() {
            if v != u && dist[v].is_none() && nodes[u].position.distance_sq(nodes[v].position) <= range * range {
                dist[v] = Some(dist[u].unwrap() + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

pub fn set(ids: &[NodeId]) -> BTreeSet<NodeId> {
    ids.iter().copied().collect()
}
