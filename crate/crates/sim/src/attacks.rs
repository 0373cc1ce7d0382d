//! Attacker behaviors and attacker selection.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::aodv::{AodvNode, Outbox};
use crate::config::AttackKind;
use crate::packet::{Rrep, Rreq};
use crate::{seed, NodeId, SimError, GBS_ID};

/// Per-node protocol personality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Behavior {
    #[default]
    Honest,
    Sinkhole,
    Blackhole,
    Flooding,
}

impl Behavior {
    pub fn for_attack(kind: AttackKind) -> Behavior {
        match kind {
            AttackKind::None => Behavior::Honest,
            AttackKind::Sinkhole => Behavior::Sinkhole,
            AttackKind::Blackhole => Behavior::Blackhole,
            AttackKind::Flooding => Behavior::Flooding,
        }
    }

    /// Answers every foreign RREQ with a forged one-hop RREP.
    pub fn forges_replies(self) -> bool {
        matches!(self, Behavior::Sinkhole | Behavior::Blackhole)
    }

    /// Discards every data packet handed to it.
    pub fn drops_data(self) -> bool {
        self == Behavior::Blackhole
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackerAssignment {
    pub attack_kind: AttackKind,
    pub attacker_ids: BTreeSet<NodeId>,
    pub ratio: f64,
}

/// Attacker count for `ratio` of `uavs`, rounding halves away from zero.
pub fn attacker_count(ratio: f64, uavs: usize) -> usize {
    (ratio * uavs as f64).round() as usize
}

/// Pick attackers among UAVs that are not traffic endpoints. The draw is keyed
/// by `(topology_seed, ratio)` only, so every attack kind gets the same set.
pub fn assign_attackers(
    topology_seed: u64,
    ratio: f64,
    attack_kind: AttackKind,
    traffic_pairs: &[(NodeId, NodeId)],
    uav_ids: &[NodeId],
) -> Result<AttackerAssignment, SimError> {
    let needed = attacker_count(ratio, uav_ids.len());
    let endpoints: BTreeSet<NodeId> = traffic_pairs.iter().flat_map(|&(s, d)| [s, d]).collect();
    let eligible: Vec<NodeId> =
        uav_ids.iter().copied().filter(|id| *id != GBS_ID && !endpoints.contains(id)).collect();
    if needed > eligible.len() {
        return Err(SimError::InsufficientEligible { needed, eligible: eligible.len() });
    }
    let key = format!("attackers/{}", (ratio * 1e6).round() as u64);
    let mut rng = seed::rng(seed::derive(topology_seed, &key));
    let attacker_ids = eligible.choose_multiple(&mut rng, needed).copied().collect();
    Ok(AttackerAssignment { attack_kind, attacker_ids, ratio })
}

/// Forged reply: claims one hop to the destination with a boosted sequence
/// number. An unknown requested sequence number counts as 0.
pub fn sinkhole_on_rreq(_attacker: NodeId, rreq: &Rreq, seq_boost: u32) -> Rrep {
    Rrep {
        destination: rreq.destination,
        dest_seq: rreq.dest_seq_known.unwrap_or(0).saturating_add(seq_boost.max(1)),
        hop_count: 1,
        origin: rreq.origin,
    }
}

/// One flooding burst: `burst` back-to-back RREQs to one random destination
/// drawn from `candidates` (which must exclude the attacker). Returns the
/// destination.
pub fn flooding_tick<R: Rng + ?Sized>(
    attacker: &mut AodvNode,
    candidates: &[NodeId],
    burst: u32,
    rng: &mut R,
    out: &mut Outbox,
) -> Option<NodeId> {
    let dest = *candidates.choose(rng)?;
    for _ in 0..burst {
        attacker.emit_unsolicited_rreq(dest, out);
    }
    Some(dest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aodv::Transmission;
    use crate::config::AodvParams;
    use crate::packet::PacketBody;

    fn uavs() -> Vec<NodeId> {
        (1..=50).collect()
    }

    fn pairs() -> Vec<(NodeId, NodeId)> {
        (0..10).map(|i| (1 + 2 * i, 2 + 2 * i)).collect()
    }

    #[test]
    fn zero_ratio_is_empty() {
        let a = assign_attackers(7, 0.0, AttackKind::None, &pairs(), &uavs()).unwrap();
        assert!(a.attacker_ids.is_empty());
    }

    #[test]
    fn ten_percent_of_fifty_is_five_non_endpoints() {
        let a = assign_attackers(7, 0.10, AttackKind::Sinkhole, &pairs(), &uavs()).unwrap();
        assert_eq!(a.attacker_ids.len(), 5);
        assert!(a.attacker_ids.iter().all(|id| *id > 20));
    }

    #[test]
    fn kind_does_not_affect_selection() {
        let s = assign_attackers(7, 0.15, AttackKind::Sinkhole, &pairs(), &uavs()).unwrap();
        let f = assign_attackers(7, 0.15, AttackKind::Flooding, &pairs(), &uavs()).unwrap();
        assert_eq!(s.attacker_ids, f.attacker_ids);
    }

    #[test]
    fn insufficient_eligible_errors() {
        let all: Vec<_> = (0..25).map(|i| (1 + 2 * i, 2 + 2 * i)).collect();
        assert!(matches!(
            assign_attackers(7, 0.1, AttackKind::Blackhole, &all, &uavs()),
            Err(SimError::InsufficientEligible { needed: 5, eligible: 0 })
        ));
    }

    #[test]
    fn forged_reply_boosts_seq_and_claims_one_hop() {
        let rreq = Rreq { origin: 1, origin_seq: 3, rreq_id: 0, destination: 9, dest_seq_known: Some(12), hop_count: 2 };
        let r = sinkhole_on_rreq(5, &rreq, 100);
        assert_eq!(r, Rrep { destination: 9, dest_seq: 112, hop_count: 1, origin: 1 });
    }

    #[test]
    fn burst_uses_consecutive_ids() {
        let mut node = AodvNode::new(3, 6, AodvParams::default()).with_behavior(Behavior::Flooding, 0);
        let mut out = Outbox::new();
        let dest = flooding_tick(&mut node, &[1, 2, 4, 5], 10, &mut seed::rng(1), &mut out).unwrap();
        let ids: Vec<u32> = out
            .sends
            .iter()
            .map(|s| match s {
                Transmission::Broadcast(p) => match &p.body {
                    PacketBody::Rreq(r) => {
                        assert_eq!(r.destination, dest);
                        r.rreq_id
                    }
                    _ => panic!("not an rreq"),
                },
                _ => panic!("not a broadcast"),
            })
            .collect();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
    }
}
