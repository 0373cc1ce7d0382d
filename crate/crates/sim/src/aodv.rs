//! Reactive routing: RREQ/RREP/RERR with destination sequence numbers.
//!
//! A simplified RFC 3561 state machine. Handlers never touch the radio; they
//! append the packets to transmit and the typed counter events to an
//! [`Outbox`] that the engine drains.

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::attacks::{self, Behavior};
use crate::config::AodvParams;
use crate::event::SimTime;
use crate::features::NodeEvent;
use crate::packet::{DataPacket, Packet, PacketBody, Rerr, Rrep, Rreq, SeqNo};
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub dest_seq: SeqNo,
    /// False when the route was learned without a destination sequence number.
    pub seq_valid: bool,
    pub valid: bool,
    pub expiry: SimTime,
}

impl RouteEntry {
    pub fn new(destination: NodeId, next_hop: NodeId, hop_count: u32, dest_seq: SeqNo, expiry: SimTime) -> Self {
        Self { destination, next_hop, hop_count, dest_seq, seq_valid: true, valid: true, expiry }
    }

    pub fn is_usable(&self, now: SimTime) -> bool {
        self.valid && self.expiry > now
    }
}

/// Routing table indexed by destination id.
#[derive(Debug, Clone, Default)]
pub struct RouteTable {
    slots: Vec<Option<RouteEntry>>,
}

impl RouteTable {
    pub fn new(nodes: usize) -> Self {
        Self { slots: vec![None; nodes] }
    }

    pub fn get(&self, dest: NodeId) -> Option<&RouteEntry> {
        self.slots.get(dest).and_then(|s| s.as_ref())
    }

    fn get_mut(&mut self, dest: NodeId) -> Option<&mut RouteEntry> {
        self.slots.get_mut(dest).and_then(|s| s.as_mut())
    }

    /// Insert or overwrite without the freshness rules. Test setup only;
    /// protocol code goes through [`AodvNode::offer_route`].
    pub fn put(&mut self, e: RouteEntry) {
        if e.destination >= self.slots.len() {
            self.slots.resize(e.destination + 1, None);
        }
        self.slots[e.destination] = Some(e);
    }

    /// Entries in destination order.
    pub fn entries(&self) -> impl Iterator<Item = &RouteEntry> {
        self.slots.iter().flatten()
    }

    pub fn usable(&self, dest: NodeId, now: SimTime) -> Option<&RouteEntry> {
        self.get(dest).filter(|e| e.is_usable(now))
    }
}

/// One transmission requested by a handler.
#[derive(Debug, Clone, PartialEq)]
pub enum Transmission {
    Broadcast(Packet),
    Unicast { to: NodeId, packet: Packet },
}

#[derive(Debug, Default)]
pub struct Outbox {
    pub sends: Vec<Transmission>,
    pub events: Vec<NodeEvent>,
    /// Data packets that reached their destination at this node.
    pub delivered: Vec<DataPacket>,
}

impl Outbox {
    pub fn new() -> Self {
        Self::default()
    }

    fn ev(&mut self, e: NodeEvent) {
        self.events.push(e);
    }

    pub fn clear(&mut self) {
        self.sends.clear();
        self.events.clear();
        self.delivered.clear();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pending {
    deadline: SimTime,
    retries: u32,
}

#[derive(Debug, Clone)]
pub struct AodvNode {
    id: NodeId,
    own_seq: SeqNo,
    next_rreq_id: u32,
    table: RouteTable,
    seen: HashSet<(NodeId, u32)>,
    pending: BTreeMap<NodeId, Pending>,
    buffer: VecDeque<DataPacket>,
    params: AodvParams,
    behavior: Behavior,
    seq_boost: u32,
}

impl AodvNode {
    pub fn new(id: NodeId, nodes: usize, params: AodvParams) -> Self {
        Self {
            id,
            own_seq: 0,
            next_rreq_id: 0,
            table: RouteTable::new(nodes),
            seen: HashSet::new(),
            pending: BTreeMap::new(),
            buffer: VecDeque::new(),
            params,
            behavior: Behavior::Honest,
            seq_boost: 0,
        }
    }

    pub fn with_behavior(mut self, behavior: Behavior, seq_boost: u32) -> Self {
        self.behavior = behavior;
        self.seq_boost = seq_boost;
        self
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn behavior(&self) -> Behavior {
        self.behavior
    }

    pub fn own_seq(&self) -> SeqNo {
        self.own_seq
    }

    pub fn table(&self) -> &RouteTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut RouteTable {
        &mut self.table
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// A discovery stays pending until the timer tick after its deadline
    /// retries or abandons it.
    pub fn discovery_pending(&self, dest: NodeId) -> bool {
        self.pending.contains_key(&dest)
    }

    fn lifetime(&self, now: SimTime) -> SimTime {
        now + SimTime::from_secs_f64(self.params.route_lifetime_s)
    }

    /// Apply the freshness rules: a newer sequence number wins; on a tie the
    /// shorter path wins, and an unusable entry is always replaceable. Returns
    /// whether the entry changed.
    pub fn offer_route(
        &mut self,
        dest: NodeId,
        next_hop: NodeId,
        hops: u32,
        seq: Option<SeqNo>,
        now: SimTime,
        out: &mut Outbox,
    ) -> bool {
        if dest == self.id {
            return false;
        }
        let expiry = self.lifetime(now);
        let Some(e) = self.table.get_mut(dest) else {
            let mut fresh = RouteEntry::new(dest, next_hop, hops, seq.unwrap_or(0), expiry);
            fresh.seq_valid = seq.is_some();
            self.table.put(fresh);
            out.ev(NodeEvent::RouteAdded { seq_delta: 0 });
            return true;
        };
        let usable = e.is_usable(now);
        let accept = match seq {
            Some(s) => {
                !e.seq_valid || s > e.dest_seq || (s == e.dest_seq && (hops < e.hop_count || !usable))
            }
            None => !usable || hops < e.hop_count,
        };
        if !accept {
            if usable && e.next_hop == next_hop && e.hop_count == hops {
                e.expiry = e.expiry.max(expiry);
            }
            return false;
        }
        let new_seq = match seq {
            Some(s) if e.seq_valid => e.dest_seq.max(s),
            Some(s) => s,
            None => e.dest_seq,
        };
        let seq_delta = if e.seq_valid { new_seq - e.dest_seq } else { 0 };
        e.next_hop = next_hop;
        e.hop_count = hops;
        e.dest_seq = new_seq;
        e.seq_valid |= seq.is_some();
        e.valid = true;
        e.expiry = expiry;
        out.ev(NodeEvent::RouteAdded { seq_delta });
        true
    }

    fn learn_neighbor(&mut self, neighbor: NodeId, now: SimTime, out: &mut Outbox) {
        self.offer_route(neighbor, neighbor, 1, None, now, out);
    }

    fn emit_rreq(&mut self, dest: NodeId, out: &mut Outbox) -> Rreq {
        self.own_seq += 1;
        let rreq_id = self.next_rreq_id;
        self.next_rreq_id += 1;
        self.seen.insert((self.id, rreq_id));
        let rreq = Rreq {
            origin: self.id,
            origin_seq: self.own_seq,
            rreq_id,
            destination: dest,
            dest_seq_known: self.table.get(dest).filter(|e| e.seq_valid).map(|e| e.dest_seq),
            hop_count: 0,
        };
        out.sends.push(Transmission::Broadcast(Packet::new(self.id, PacketBody::Rreq(rreq))));
        out.ev(NodeEvent::RreqOriginated);
        rreq
    }

    /// Emit an RREQ bypassing discovery suppression (flooding attackers).
    pub fn emit_unsolicited_rreq(&mut self, dest: NodeId, out: &mut Outbox) -> Rreq {
        self.emit_rreq(dest, out)
    }

    /// Start a route discovery. Returns false when a usable route exists or a
    /// discovery for `dest` is still pending.
    pub fn originate_route_discovery(&mut self, dest: NodeId, now: SimTime, out: &mut Outbox) -> bool {
        if dest == self.id || self.table.usable(dest, now).is_some() || self.discovery_pending(dest) {
            return false;
        }
        self.emit_rreq(dest, out);
        let deadline = now + SimTime::from_secs_f64(self.params.discovery_timeout_s);
        self.pending.insert(dest, Pending { deadline, retries: 0 });
        true
    }

    pub fn handle_rreq(&mut self, rreq: &Rreq, from: NodeId, now: SimTime, out: &mut Outbox) {
        let duplicate = self.seen.contains(&(rreq.origin, rreq.rreq_id));
        out.ev(NodeEvent::RreqReceived { duplicate });
        if duplicate {
            return;
        }
        self.seen.insert((rreq.origin, rreq.rreq_id));
        self.learn_neighbor(from, now, out);
        self.offer_route(rreq.origin, from, rreq.hop_count + 1, Some(rreq.origin_seq), now, out);

        if rreq.destination == self.id {
            if let Some(k) = rreq.dest_seq_known {
                self.own_seq = self.own_seq.max(k);
            }
            let rrep = Rrep { destination: self.id, dest_seq: self.own_seq, hop_count: 0, origin: rreq.origin };
            self.send_rrep(rrep, from, out);
            return;
        }
        if self.behavior.forges_replies() {
            let rrep = attacks::sinkhole_on_rreq(self.id, rreq, self.seq_boost);
            out.ev(NodeEvent::ForgedRrep {
                trigger_known: rreq.dest_seq_known,
                dest_seq: rrep.dest_seq,
                hop_count: rrep.hop_count,
            });
            self.send_rrep(rrep, from, out);
            return;
        }
        // Never answer with a route that leads back through the requester.
        let cached = self
            .table
            .usable(rreq.destination, now)
            .filter(|e| e.seq_valid && e.next_hop != from && rreq.dest_seq_known.is_none_or(|k| e.dest_seq >= k))
            .copied();
        if let Some(e) = cached {
            let rrep =
                Rrep { destination: rreq.destination, dest_seq: e.dest_seq, hop_count: e.hop_count, origin: rreq.origin };
            self.send_rrep(rrep, from, out);
            return;
        }
        let fwd = Rreq { hop_count: rreq.hop_count + 1, ..*rreq };
        out.sends.push(Transmission::Broadcast(Packet::new(rreq.origin, PacketBody::Rreq(fwd))));
        out.ev(NodeEvent::RreqForwarded);
    }

    fn send_rrep(&mut self, rrep: Rrep, to: NodeId, out: &mut Outbox) {
        out.sends.push(Transmission::Unicast { to, packet: Packet::new(self.id, PacketBody::Rrep(rrep)) });
        out.ev(NodeEvent::RrepOriginated);
    }

    /// `creator` is the node that generated the reply; forwarding keeps it.
    pub fn handle_rrep(&mut self, rrep: &Rrep, from: NodeId, creator: NodeId, now: SimTime, out: &mut Outbox) {
        out.ev(NodeEvent::RrepReceived { dest_seq: rrep.dest_seq });
        self.learn_neighbor(from, now, out);
        if rrep.destination == self.id {
            return;
        }
        let updated = self.offer_route(rrep.destination, from, rrep.hop_count + 1, Some(rrep.dest_seq), now, out);
        if rrep.origin == self.id {
            self.pending.remove(&rrep.destination);
            self.flush_buffer(rrep.destination, now, out);
            return;
        }
        if !updated {
            return;
        }
        let Some(back) = self.table.usable(rrep.origin, now).map(|e| e.next_hop) else {
            out.ev(NodeEvent::ControlDropped);
            return;
        };
        let fwd = Rrep { hop_count: rrep.hop_count + 1, ..*rrep };
        out.sends.push(Transmission::Unicast { to: back, packet: Packet::new(creator, PacketBody::Rrep(fwd)) });
        out.ev(NodeEvent::RrepForwarded);
    }

    pub fn handle_rerr(&mut self, rerr: &Rerr, from: NodeId, now: SimTime, out: &mut Outbox) {
        out.ev(NodeEvent::RerrReceived);
        let mut lost = Vec::new();
        for &(dest, seq) in &rerr.unreachable {
            if let Some(e) = self.table.get_mut(dest) {
                if e.is_usable(now) && e.next_hop == from {
                    e.valid = false;
                    e.dest_seq = e.dest_seq.max(seq);
                    lost.push((dest, e.dest_seq));
                    out.ev(NodeEvent::RouteInvalidated);
                }
            }
        }
        if !lost.is_empty() {
            out.ev(NodeEvent::RerrForwarded { destinations: lost.len() });
            out.sends.push(Transmission::Broadcast(Packet::new(self.id, PacketBody::Rerr(Rerr { unreachable: lost }))));
        }
    }

    /// Invalidate every usable route through `neighbor`. Emits one RERR
    /// listing them all, or nothing if the neighbor carried no route.
    pub fn handle_link_break(&mut self, neighbor: NodeId, now: SimTime, out: &mut Outbox) -> bool {
        let mut lost = Vec::new();
        for slot in self.table.slots.iter_mut().flatten() {
            if slot.is_usable(now) && slot.next_hop == neighbor {
                slot.valid = false;
                if slot.seq_valid {
                    slot.dest_seq += 1;
                }
                lost.push((slot.destination, slot.dest_seq));
                out.ev(NodeEvent::RouteInvalidated);
            }
        }
        if lost.is_empty() {
            return false;
        }
        out.ev(NodeEvent::LinkBreak);
        out.ev(NodeEvent::RerrOriginated { destinations: lost.len() });
        out.sends.push(Transmission::Broadcast(Packet::new(self.id, PacketBody::Rerr(Rerr { unreachable: lost }))));
        true
    }

    /// Originate (`from = None`) or relay a data packet.
    pub fn forward_data(&mut self, pkt: DataPacket, from: Option<NodeId>, now: SimTime, out: &mut Outbox) {
        match from {
            None => out.ev(NodeEvent::DataOriginated),
            Some(prev) => {
                self.learn_neighbor(prev, now, out);
                if self.behavior.drops_data() {
                    out.ev(NodeEvent::DataDropped);
                    return;
                }
            }
        }
        if pkt.destination == self.id {
            out.ev(NodeEvent::DataDelivered);
            out.delivered.push(pkt);
            return;
        }
        if from.is_some() && pkt.ttl == 0 {
            out.ev(NodeEvent::DataDropped);
            return;
        }
        let lifetime = self.lifetime(now);
        if let Some(e) = self.table.slots.get_mut(pkt.destination).and_then(|s| s.as_mut()).filter(|e| e.is_usable(now))
        {
            e.expiry = e.expiry.max(lifetime);
            let to = e.next_hop;
            let mut next = pkt;
            if from.is_some() {
                next.ttl -= 1;
            }
            out.sends.push(Transmission::Unicast { to, packet: Packet::new(pkt.source, PacketBody::Data(next)) });
            if from.is_some() {
                out.ev(NodeEvent::DataForwarded);
            }
            return;
        }
        // Sinkholes attract traffic for routes they never had; they discover
        // like a source instead of reporting an error.
        if from.is_none() || self.behavior.forges_replies() {
            self.buffer_packet(pkt, out);
            self.originate_route_discovery(pkt.destination, now, out);
            return;
        }
        out.ev(NodeEvent::DataDropped);
        let seq = self.table.get(pkt.destination).map_or(0, |e| e.dest_seq);
        out.ev(NodeEvent::RerrOriginated { destinations: 1 });
        out.sends.push(Transmission::Broadcast(Packet::new(
            self.id,
            PacketBody::Rerr(Rerr { unreachable: vec![(pkt.destination, seq)] }),
        )));
    }

    fn buffer_packet(&mut self, pkt: DataPacket, out: &mut Outbox) {
        if self.buffer.len() >= self.params.buffer_capacity {
            self.buffer.pop_front();
            out.ev(NodeEvent::DataDropped);
        }
        self.buffer.push_back(pkt);
        out.ev(NodeEvent::DataBuffered);
    }

    fn flush_buffer(&mut self, dest: NodeId, now: SimTime, out: &mut Outbox) {
        let Some(to) = self.table.usable(dest, now).map(|e| e.next_hop) else {
            return;
        };
        let mut kept = VecDeque::with_capacity(self.buffer.len());
        for pkt in self.buffer.drain(..) {
            if pkt.destination == dest {
                out.sends.push(Transmission::Unicast { to, packet: Packet::new(pkt.source, PacketBody::Data(pkt)) });
                if pkt.source != self.id {
                    out.ev(NodeEvent::DataForwarded);
                }
            } else {
                kept.push_back(pkt);
            }
        }
        self.buffer = kept;
    }

    /// Timer maintenance: expire routes and retry or abandon discoveries.
    pub fn tick(&mut self, now: SimTime, out: &mut Outbox) {
        for slot in self.table.slots.iter_mut().flatten() {
            if slot.valid && slot.expiry <= now {
                slot.valid = false;
                out.ev(NodeEvent::RouteInvalidated);
            }
        }
        let due: Vec<(NodeId, Pending)> =
            self.pending.iter().filter(|(_, p)| p.deadline <= now).map(|(d, p)| (*d, *p)).collect();
        for (dest, p) in due {
            self.pending.remove(&dest);
            let waiting = self.buffer.iter().any(|b| b.destination == dest);
            if !waiting {
                continue;
            }
            if self.table.usable(dest, now).is_some() {
                self.flush_buffer(dest, now, out);
            } else if p.retries < self.params.discovery_retries {
                self.emit_rreq(dest, out);
                let deadline = now + SimTime::from_secs_f64(self.params.discovery_timeout_s);
                self.pending.insert(dest, Pending { deadline, retries: p.retries + 1 });
            } else {
                let before = self.buffer.len();
                self.buffer.retain(|b| b.destination != dest);
                for _ in self.buffer.len()..before {
                    out.ev(NodeEvent::DataDropped);
                }
            }
        }
    }
}
