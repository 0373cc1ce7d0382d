//! Per-node windowed feature extraction and labeling.
//!
//! Each node owns a [`WindowAccumulator`]. The protocol and the engine feed it
//! typed [`NodeEvent`]s; at every window close the accumulator is finalized
//! into a 31-wide [`FeatureVector`] and reset.
//!
//! Column order is part of the on-disk CSV contract (`f01..f31`) and must not
//! change.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::aodv::RouteTable;
use crate::config::{AttackKind, LabelRule};
use crate::event::SimTime;
use crate::packet::SeqNo;
use crate::{NodeId, SimError};

pub const FEATURE_COUNT: usize = 31;

/// Feature columns, in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(usize)]
pub enum Feature {
    // AODV control counters
    RreqSent,
    RreqRecv,
    RreqFwd,
    RrepSent,
    RrepRecv,
    RrepFwd,
    RerrSent,
    RerrRecv,
    RerrFwd,
    RreqOriginated,
    RrepOriginated,
    DuplicateRreqDropped,
    // data plane
    DataOriginated,
    DataRecvAsDest,
    DataFwd,
    DataDropped,
    DataBuffered,
    DeliveryRatioWindow,
    // routing table dynamics
    RoutesAdded,
    RoutesInvalidated,
    ActiveRoutes,
    AvgHopCount,
    MaxDestSeqSeen,
    AvgDestSeqDelta,
    RerrDestinationsListed,
    // topology / mobility
    NeighborCount,
    NeighborAdded,
    NeighborRemoved,
    AvgSpeedMps,
    DistanceTraveledM,
    LinkBreaksDetected,
}

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::RreqSent,
        Feature::RreqRecv,
        Feature::RreqFwd,
        Feature::RrepSent,
        Feature::RrepRecv,
        Feature::RrepFwd,
        Feature::RerrSent,
        Feature::RerrRecv,
        Feature::RerrFwd,
        Feature::RreqOriginated,
        Feature::RrepOriginated,
        Feature::DuplicateRreqDropped,
        Feature::DataOriginated,
        Feature::DataRecvAsDest,
        Feature::DataFwd,
        Feature::DataDropped,
        Feature::DataBuffered,
        Feature::DeliveryRatioWindow,
        Feature::RoutesAdded,
        Feature::RoutesInvalidated,
        Feature::ActiveRoutes,
        Feature::AvgHopCount,
        Feature::MaxDestSeqSeen,
        Feature::AvgDestSeqDelta,
        Feature::RerrDestinationsListed,
        Feature::NeighborCount,
        Feature::NeighborAdded,
        Feature::NeighborRemoved,
        Feature::AvgSpeedMps,
        Feature::DistanceTraveledM,
        Feature::LinkBreaksDetected,
    ];

    pub fn name(self) -> &'static str {
        FEATURE_NAMES[self as usize]
    }
}

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "rreq_sent",
    "rreq_recv",
    "rreq_fwd",
    "rrep_sent",
    "rrep_recv",
    "rrep_fwd",
    "rerr_sent",
    "rerr_recv",
    "rerr_fwd",
    "rreq_originated",
    "rrep_originated",
    "duplicate_rreq_dropped",
    "data_originated",
    "data_recv_as_dest",
    "data_fwd",
    "data_dropped",
    "data_buffered",
    "delivery_ratio_window",
    "routes_added",
    "routes_invalidated",
    "active_routes",
    "avg_hop_count",
    "max_dest_seq_seen",
    "avg_dest_seq_delta",
    "rerr_destinations_listed",
    "neighbor_count",
    "neighbor_added",
    "neighbor_removed",
    "avg_speed_mps",
    "distance_traveled_m",
    "link_breaks_detected",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn get(&self, f: Feature) -> f64 {
        self.0[f as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    fn bump(&mut self, f: Feature, by: f64) {
        self.0[f as usize] += by;
    }

    fn set(&mut self, f: Feature, v: f64) {
        self.0[f as usize] = v;
    }
}

impl std::ops::Index<Feature> for FeatureVector {
    type Output = f64;
    fn index(&self, f: Feature) -> &f64 {
        &self.0[f as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Benign = 0,
    Malicious = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::Benign),
            1 => Some(Label::Malicious),
            _ => None,
        }
    }
}

/// One (node, window) observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub topology_id: u32,
    pub attack_kind: AttackKind,
    pub attacker_ratio: f64,
    pub node_id: NodeId,
    pub window_start_s: f64,
    pub features: FeatureVector,
    pub label: Label,
}

/// Typed per-node events. Several map to more than one counter, e.g. a
/// forwarded RREQ is also a sent RREQ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeEvent {
    RreqOriginated,
    RreqForwarded,
    RreqReceived { duplicate: bool },
    RrepOriginated,
    RrepForwarded,
    RrepReceived { dest_seq: SeqNo },
    RerrOriginated { destinations: usize },
    RerrForwarded { destinations: usize },
    RerrReceived,
    DataOriginated,
    DataDelivered,
    DataForwarded,
    DataDropped,
    DataBuffered,
    RouteAdded { seq_delta: u32 },
    RouteInvalidated,
    LinkBreak,
    NeighborAdded,
    NeighborRemoved,
    Moved { distance_m: f64, speed_mps: f64 },
    /// A packet created by `creator` was received by this node.
    PacketProcessed { creator: NodeId },
    /// A control packet could not be handled (e.g. RREP without reverse route).
    ControlDropped,
    /// Sinkhole reply; carries the triggering request's known sequence number.
    ForgedRrep { trigger_known: Option<SeqNo>, dest_seq: SeqNo, hop_count: u32 },
}

/// Snapshot of node state the accumulator needs at window close.
#[derive(Debug, Clone, Copy)]
pub struct WindowContext<'a> {
    pub neighbor_count: usize,
    pub routes: &'a RouteTable,
    pub now: SimTime,
}

/// Running counters for one node and one window `[start, end)`.
#[derive(Debug, Clone)]
pub struct WindowAccumulator {
    node: NodeId,
    start: SimTime,
    end: SimTime,
    counters: FeatureVector,
    seq_delta_sum: f64,
    seq_delta_n: u64,
    rrep_seq_max: SeqNo,
    speed_sum: f64,
    speed_n: u64,
    distance: f64,
    creators: BTreeSet<NodeId>,
}

impl WindowAccumulator {
    pub fn new(node: NodeId, start: SimTime, end: SimTime) -> Self {
        Self {
            node,
            start,
            end,
            counters: FeatureVector::default(),
            seq_delta_sum: 0.0,
            seq_delta_n: 0,
            rrep_seq_max: 0,
            speed_sum: 0.0,
            speed_n: 0,
            distance: 0.0,
            creators: BTreeSet::new(),
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn window(&self) -> (SimTime, SimTime) {
        (self.start, self.end)
    }

    /// Creators of every packet this node processed in the window.
    pub fn creators(&self) -> &BTreeSet<NodeId> {
        &self.creators
    }

    pub fn accumulate(&mut self, time: SimTime, event: &NodeEvent) -> Result<(), SimError> {
        if time < self.start || time >= self.end {
            return Err(SimError::OutsideWindow {
                at_s: time.as_secs_f64(),
                start_s: self.start.as_secs_f64(),
                end_s: self.end.as_secs_f64(),
            });
        }
        use Feature as F;
        let c = &mut self.counters;
        match *event {
            NodeEvent::RreqOriginated => {
                c.bump(F::RreqOriginated, 1.0);
                c.bump(F::RreqSent, 1.0);
            }
            NodeEvent::RreqForwarded => {
                c.bump(F::RreqFwd, 1.0);
                c.bump(F::RreqSent, 1.0);
            }
            NodeEvent::RreqReceived { duplicate } => {
                c.bump(F::RreqRecv, 1.0);
                if duplicate {
                    c.bump(F::DuplicateRreqDropped, 1.0);
                }
            }
            NodeEvent::RrepOriginated => {
                c.bump(F::RrepOriginated, 1.0);
                c.bump(F::RrepSent, 1.0);
            }
            NodeEvent::RrepForwarded => {
                c.bump(F::RrepFwd, 1.0);
                c.bump(F::RrepSent, 1.0);
            }
            NodeEvent::RrepReceived { dest_seq } => {
                c.bump(F::RrepRecv, 1.0);
                self.rrep_seq_max = self.rrep_seq_max.max(dest_seq);
            }
            NodeEvent::RerrOriginated { destinations } => {
                c.bump(F::RerrSent, 1.0);
                c.bump(F::RerrDestinationsListed, destinations as f64);
            }
            NodeEvent::RerrForwarded { destinations } => {
                c.bump(F::RerrFwd, 1.0);
                c.bump(F::RerrSent, 1.0);
                c.bump(F::RerrDestinationsListed, destinations as f64);
            }
            NodeEvent::RerrReceived => c.bump(F::RerrRecv, 1.0),
            NodeEvent::DataOriginated => c.bump(F::DataOriginated, 1.0),
            NodeEvent::DataDelivered => c.bump(F::DataRecvAsDest, 1.0),
            NodeEvent::DataForwarded => c.bump(F::DataFwd, 1.0),
            NodeEvent::DataDropped => c.bump(F::DataDropped, 1.0),
            NodeEvent::DataBuffered => c.bump(F::DataBuffered, 1.0),
            NodeEvent::RouteAdded { seq_delta } => {
                c.bump(F::RoutesAdded, 1.0);
                self.seq_delta_sum += seq_delta as f64;
                self.seq_delta_n += 1;
            }
            NodeEvent::RouteInvalidated => c.bump(F::RoutesInvalidated, 1.0),
            NodeEvent::LinkBreak => c.bump(F::LinkBreaksDetected, 1.0),
            NodeEvent::NeighborAdded => c.bump(F::NeighborAdded, 1.0),
            NodeEvent::NeighborRemoved => c.bump(F::NeighborRemoved, 1.0),
            NodeEvent::Moved { distance_m, speed_mps } => {
                self.distance += distance_m;
                self.speed_sum += speed_mps;
                self.speed_n += 1;
            }
            NodeEvent::PacketProcessed { creator } => {
                self.creators.insert(creator);
            }
            NodeEvent::ControlDropped | NodeEvent::ForgedRrep { .. } => {}
        }
        Ok(())
    }

    /// Close the window, returning its features, and reset the accumulator
    /// to the next window of the same length.
    pub fn finalize(&mut self, ctx: WindowContext<'_>) -> FeatureVector {
        use Feature as F;
        let mut fv = self.counters;
        let handled = fv[F::DataFwd] + fv[F::DataRecvAsDest];
        fv.set(F::DeliveryRatioWindow, ratio(handled, handled + fv[F::DataDropped]));

        let mut active = 0usize;
        let mut hop_sum = 0.0;
        let mut seq_max = self.rrep_seq_max;
        for e in ctx.routes.entries() {
            seq_max = seq_max.max(e.dest_seq);
            if e.is_usable(ctx.now) {
                active += 1;
                hop_sum += e.hop_count as f64;
            }
        }
        fv.set(F::ActiveRoutes, active as f64);
        fv.set(F::AvgHopCount, ratio(hop_sum, active as f64));
        fv.set(F::MaxDestSeqSeen, seq_max as f64);
        fv.set(F::AvgDestSeqDelta, ratio(self.seq_delta_sum, self.seq_delta_n as f64));
        fv.set(F::NeighborCount, ctx.neighbor_count as f64);
        fv.set(F::AvgSpeedMps, ratio(self.speed_sum, self.speed_n as f64));
        fv.set(F::DistanceTraveledM, self.distance);

        let len = SimTime::from_nanos(self.end.as_nanos() - self.start.as_nanos());
        *self = WindowAccumulator::new(self.node, self.end, self.end + len);
        fv
    }
}

/// `num / den` with the 0/0 -> 0 convention.
pub fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Label one window of `node`.
pub fn label_sample(
    node: NodeId,
    attackers: &BTreeSet<NodeId>,
    creators: &BTreeSet<NodeId>,
    rule: LabelRule,
) -> Label {
    let malicious = attackers.contains(&node)
        || (rule == LabelRule::AttackerTraffic && creators.iter().any(|c| attackers.contains(c)));
    if malicious {
        Label::Malicious
    } else {
        Label::Benign
    }
}
