//! Unit-disk radio: two nodes hear each other iff their 3D distance is at
//! most the transmission range (boundary inclusive). Transmissions take
//! `bits / bandwidth` seconds of airtime; there are no collisions or fading.

use std::collections::BTreeSet;

use crate::event::SimTime;
use crate::mobility::NodeState;
use crate::{NodeId, SimError};

/// Neighbors of `node_id`: every other node within `tx_range_m`.
pub fn neighbors_of(node_id: NodeId, nodes: &[NodeState], tx_range_m: f64) -> Result<BTreeSet<NodeId>, SimError> {
    let me = nodes.iter().find(|n| n.id == node_id).ok_or(SimError::UnknownNode(node_id))?;
    let r2 = tx_range_m * tx_range_m;
    Ok(nodes
        .iter()
        .filter(|n| n.id != node_id && me.position.distance_sq(n.position) <= r2)
        .map(|n| n.id)
        .collect())
}

/// Adjacency lists for all nodes, indexed by node id. `nodes[i].id` must be `i`.
pub fn neighbor_table(nodes: &[NodeState], tx_range_m: f64) -> Vec<Vec<NodeId>> {
    let r2 = tx_range_m * tx_range_m;
    let mut adj = vec![Vec::new(); nodes.len()];
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if nodes[i].position.distance_sq(nodes[j].position) <= r2 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Serialization delay of a packet, rounded to the nearest nanosecond.
pub fn tx_delay(size_bytes: u32, bandwidth_bps: f64) -> SimTime {
    SimTime::from_secs_f64(size_bytes as f64 * 8.0 / bandwidth_bps)
}
