//! Discrete-event loop.
//!
//! Same-time ordering: every `WindowClose` is queued at construction, before
//! any other event, so at a shared timestamp the window closes first and the
//! remaining events count toward the next window. A mobility tick at `t`
//! moves nodes to their `t + dt` positions and is attributed to the window
//! containing `t`.
//!
//! Each node serializes its own transmissions (`tx_free_at`), so arrivals on
//! any link are FIFO.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::seq::IndexedRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aodv::{AodvNode, Outbox, Transmission};
use crate::attacks::{self, Behavior};
use crate::config::{AttackKind, SimConfig};
use crate::event::{EventKind, EventQueue, Payload, SimTime};
use crate::features::{label_sample, FeatureVector, NodeEvent, Sample, WindowAccumulator, WindowContext, FEATURE_COUNT};
use crate::mobility::{GaussMarkov, NodeState};
use crate::packet::{DataPacket, Packet, PacketBody, SeqNo, DATA_TTL};
use crate::radio::{neighbor_table, tx_delay};
use crate::{seed, NodeId, SimError, GBS_ID};

/// One UDP constant-bit-rate flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub source: NodeId,
    pub destination: NodeId,
    /// Time of the first packet.
    pub start: SimTime,
}

/// Initial world state. [`Setup::from_config`] draws it from the topology
/// seed; tests may build one by hand.
#[derive(Debug, Clone)]
pub struct Setup {
    /// Indexed by node id; `nodes[0]` is the ground station.
    pub nodes: Vec<NodeState>,
    pub connections: Vec<Connection>,
    pub attackers: BTreeSet<NodeId>,
    /// Skip mobility updates (positions stay fixed).
    pub frozen: bool,
}

impl Setup {
    pub fn from_config(cfg: &SimConfig) -> Result<Setup, SimError> {
        cfg.validate()?;
        let mut mob = seed::rng(seed::derive(cfg.seed, "mobility/spawn"));
        let mut nodes = vec![NodeState::ground_station(GBS_ID, &cfg.area)];
        for id in 1..=cfg.node_count {
            nodes.push(NodeState::spawn_uav(id, &cfg.area, cfg.avg_speed_mps, cfg.alpha_range, &mut mob));
        }

        let uavs: Vec<NodeId> = (1..=cfg.node_count).collect();
        let mut traffic = seed::rng(seed::derive(cfg.seed, "traffic"));
        let endpoints: Vec<NodeId> = uavs.choose_multiple(&mut traffic, 2 * cfg.traffic_connections).copied().collect();
        let period = 1.0 / cfg.packet_rate_hz;
        let connections: Vec<Connection> = endpoints
            .chunks_exact(2)
            .map(|p| Connection {
                source: p[0],
                destination: p[1],
                start: SimTime::from_secs_f64(traffic.random_range(0.0..period)),
            })
            .collect();

        let attackers = if cfg.attack_kind == AttackKind::None {
            BTreeSet::new()
        } else {
            let pairs: Vec<_> = connections.iter().map(|c| (c.source, c.destination)).collect();
            attacks::assign_attackers(cfg.seed, cfg.attacker_ratio, cfg.attack_kind, &pairs, &uavs)?.attacker_ids
        };
        for id in &attackers {
            nodes[*id].is_attacker = true;
        }
        Ok(Setup { nodes, connections, attackers, frozen: false })
    }

    pub fn traffic_pairs(&self) -> Vec<(NodeId, NodeId)> {
        self.connections.iter().map(|c| (c.source, c.destination)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForgedReply {
    pub attacker: NodeId,
    pub time: SimTime,
    pub trigger_known: Option<SeqNo>,
    pub dest_seq: SeqNo,
    pub hop_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloodBurst {
    pub time: SimTime,
    pub destination: NodeId,
    pub rreqs: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConnectionStats {
    pub sent: u64,
    pub delivered: u64,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    /// Digest over every processed event and every emitted sample.
    pub digest: u64,
    /// Processed events per [`EventKind`], in `EventKind::ALL` order.
    pub event_counts: [u64; 5],
    /// UAV samples ordered by (window, node).
    pub samples: Vec<Sample>,
    pub attackers: BTreeSet<NodeId>,
    pub connections: Vec<Connection>,
    pub connection_stats: Vec<ConnectionStats>,
    pub forged_replies: Vec<ForgedReply>,
    pub floods: BTreeMap<NodeId, Vec<FloodBurst>>,
    /// Per-node counters summed over all closed windows. Only the counting
    /// columns are meaningful; averaged columns are sums of window values.
    pub totals: Vec<FeatureVector>,
    /// Arrivals that overtook an earlier arrival on the same link. Always 0.
    pub link_order_violations: u64,
}

impl SimTrace {
    pub fn event_count(&self, kind: EventKind) -> u64 {
        self.event_counts[kind.index()]
    }
}

pub struct Simulation {
    cfg: SimConfig,
    now: SimTime,
    end: SimTime,
    queue: EventQueue,
    nodes: Vec<NodeState>,
    aodv: Vec<AodvNode>,
    acc: Vec<WindowAccumulator>,
    neighbors: Vec<BTreeSet<NodeId>>,
    tx_free_at: Vec<SimTime>,
    last_arrival: BTreeMap<(NodeId, NodeId), SimTime>,
    frozen: bool,
    gm: GaussMarkov,
    mobility_rng: ChaCha8Rng,
    flood_rng: BTreeMap<NodeId, ChaCha8Rng>,
    data_seq: Vec<u64>,
    hasher: Sha256,
    trace: SimTrace,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        let setup = Setup::from_config(&cfg)?;
        Self::from_setup(cfg, setup)
    }

    pub fn from_setup(cfg: SimConfig, setup: Setup) -> Result<Self, SimError> {
        cfg.validate()?;
        let n = setup.nodes.len();
        for (i, node) in setup.nodes.iter().enumerate() {
            if node.id != i {
                return Err(SimError::UnknownNode(node.id));
            }
        }
        for c in &setup.connections {
            for id in [c.source, c.destination] {
                if id >= n {
                    return Err(SimError::UnknownNode(id));
                }
            }
        }
        let behavior = Behavior::for_attack(cfg.attack_kind);
        let aodv = (0..n)
            .map(|id| {
                let node = AodvNode::new(id, n, cfg.aodv);
                if setup.attackers.contains(&id) {
                    node.with_behavior(behavior, cfg.attack.seq_boost)
                } else {
                    node
                }
            })
            .collect();
        let window = SimTime::from_secs_f64(cfg.window_s);
        let acc = (0..n).map(|id| WindowAccumulator::new(id, SimTime::ZERO, window)).collect();
        let neighbors = neighbor_table(&setup.nodes, cfg.tx_range_m)
            .into_iter()
            .map(|v| v.into_iter().collect())
            .collect();

        let mut queue = EventQueue::new();
        for k in 1..=cfg.window_count() as u64 {
            queue.push(SimTime::from_nanos(window.as_nanos() * k), Payload::WindowClose);
        }
        queue.push(SimTime::ZERO, Payload::MobilityTick);
        for (i, c) in setup.connections.iter().enumerate() {
            queue.push(c.start, Payload::TrafficTick { connection: i });
        }
        let mut flood_rng = BTreeMap::new();
        if behavior == Behavior::Flooding {
            for &a in &setup.attackers {
                let phase = seed::rng(seed::derive_indexed(cfg.seed, "flood/phase", a as u64))
                    .random_range(0.0..cfg.attack.flood_period_s);
                queue.push(SimTime::from_secs_f64(phase), Payload::AttackTick { attacker: a });
                flood_rng.insert(a, seed::rng(seed::derive_indexed(cfg.seed, "flood/dest", a as u64)));
            }
        }

        let trace = SimTrace {
            digest: 0,
            event_counts: [0; 5],
            samples: Vec::new(),
            attackers: setup.attackers.clone(),
            connections: setup.connections.clone(),
            connection_stats: vec![ConnectionStats::default(); setup.connections.len()],
            forged_replies: Vec::new(),
            floods: BTreeMap::new(),
            totals: vec![FeatureVector::default(); n],
            link_order_violations: 0,
        };
        Ok(Self {
            now: SimTime::ZERO,
            end: SimTime::from_secs_f64(cfg.duration_s),
            queue,
            aodv,
            acc,
            neighbors,
            tx_free_at: vec![SimTime::ZERO; n],
            last_arrival: BTreeMap::new(),
            frozen: setup.frozen,
            gm: GaussMarkov {
                mean_speed: cfg.avg_speed_mps,
                noise_scale: cfg.gm_noise_scale,
                dt: cfg.mobility_dt_s,
                bounds: cfg.area,
            },
            mobility_rng: seed::rng(seed::derive(cfg.seed, "mobility/steps")),
            flood_rng,
            data_seq: vec![0; setup.connections.len()],
            nodes: setup.nodes,
            hasher: Sha256::new(),
            trace,
            cfg,
        })
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn aodv(&self, id: NodeId) -> &AodvNode {
        &self.aodv[id]
    }

    pub fn neighbors(&self, id: NodeId) -> &BTreeSet<NodeId> {
        &self.neighbors[id]
    }

    pub fn trace(&self) -> &SimTrace {
        &self.trace
    }

    pub fn run(self) -> Result<SimTrace, SimError> {
        self.run_observed(|_, _| {})
    }

    /// Run to the configured duration, calling `observe` after every event.
    pub fn run_observed(mut self, mut observe: impl FnMut(&Simulation, EventKind)) -> Result<SimTrace, SimError> {
        loop {
            let Some(t) = self.queue.peek_time() else {
                return Err(SimError::QueueExhausted {
                    at_s: self.now.as_secs_f64(),
                    duration_s: self.cfg.duration_s,
                });
            };
            if t > self.end {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            if t == self.end && !matches!(ev.payload, Payload::WindowClose) {
                break;
            }
            self.now = t;
            let kind = ev.payload.kind();
            self.trace.event_counts[kind.index()] += 1;
            self.hash_event(&ev.payload);
            self.dispatch(ev.payload)?;
            observe(&self, kind);
        }
        for s in &self.trace.samples {
            self.hasher.update((s.node_id as u64).to_le_bytes());
            self.hasher.update(s.window_start_s.to_bits().to_le_bytes());
            for v in s.features.as_slice() {
                self.hasher.update(v.to_bits().to_le_bytes());
            }
            self.hasher.update([s.label.as_u8()]);
        }
        let out = self.hasher.finalize();
        self.trace.digest = u64::from_le_bytes(out[..8].try_into().expect("sha256 output is 32 bytes"));
        Ok(self.trace)
    }

    fn hash_event(&mut self, p: &Payload) {
        let h = &mut self.hasher;
        h.update(self.now.as_nanos().to_le_bytes());
        h.update([p.kind().index() as u8]);
        match p {
            Payload::PacketArrival { to, from, packet } => {
                h.update((*to as u64).to_le_bytes());
                h.update((*from as u64).to_le_bytes());
                h.update((packet.creator as u64).to_le_bytes());
                h.update([packet.body.tag()]);
                match &packet.body {
                    PacketBody::Rreq(r) => {
                        for v in [r.origin as u64, r.rreq_id as u64, r.destination as u64, r.hop_count as u64] {
                            h.update(v.to_le_bytes());
                        }
                    }
                    PacketBody::Rrep(r) => {
                        for v in [r.destination as u64, r.dest_seq as u64, r.hop_count as u64, r.origin as u64] {
                            h.update(v.to_le_bytes());
                        }
                    }
                    PacketBody::Rerr(r) => {
                        for (d, s) in &r.unreachable {
                            h.update((*d as u64).to_le_bytes());
                            h.update(s.to_le_bytes());
                        }
                    }
                    PacketBody::Data(d) => {
                        h.update((d.connection as u64).to_le_bytes());
                        h.update(d.seq.to_le_bytes());
                    }
                }
            }
            Payload::TrafficTick { connection } => h.update((*connection as u64).to_le_bytes()),
            Payload::AttackTick { attacker } => h.update((*attacker as u64).to_le_bytes()),
            Payload::MobilityTick | Payload::WindowClose => {}
        }
    }

    fn dispatch(&mut self, payload: Payload) -> Result<(), SimError> {
        match payload {
            Payload::MobilityTick => self.on_mobility(),
            Payload::PacketArrival { to, from, packet } => self.on_arrival(to, from, packet),
            Payload::TrafficTick { connection } => self.on_traffic(connection),
            Payload::AttackTick { attacker } => self.on_attack(attacker),
            Payload::WindowClose => {
                self.on_window_close();
                Ok(())
            }
        }
    }

    fn on_mobility(&mut self) -> Result<(), SimError> {
        let now = self.now;
        if !self.frozen {
            for i in 0..self.nodes.len() {
                let next = self.gm.step(&self.nodes[i], &mut self.mobility_rng);
                if !next.is_gbs {
                    let distance_m = (next.position - self.nodes[i].position).norm();
                    let speed_mps = next.velocity.norm();
                    self.acc[i].accumulate(now, &NodeEvent::Moved { distance_m, speed_mps })?;
                }
                self.nodes[i] = next;
            }
            let fresh: Vec<BTreeSet<NodeId>> = neighbor_table(&self.nodes, self.cfg.tx_range_m)
                .into_iter()
                .map(|v| v.into_iter().collect())
                .collect();
            for (i, new) in fresh.iter().enumerate() {
                for _ in new.difference(&self.neighbors[i]) {
                    self.acc[i].accumulate(now, &NodeEvent::NeighborAdded)?;
                }
                let gone: Vec<NodeId> = self.neighbors[i].difference(new).copied().collect();
                self.neighbors[i] = new.clone();
                for g in gone {
                    self.acc[i].accumulate(now, &NodeEvent::NeighborRemoved)?;
                    let mut out = Outbox::new();
                    self.aodv[i].handle_link_break(g, now, &mut out);
                    self.flush(i, out)?;
                }
            }
        }
        for i in 0..self.nodes.len() {
            let mut out = Outbox::new();
            self.aodv[i].tick(now, &mut out);
            self.flush(i, out)?;
        }
        self.queue.push(now + SimTime::from_secs_f64(self.cfg.mobility_dt_s), Payload::MobilityTick);
        Ok(())
    }

    fn on_arrival(&mut self, to: NodeId, from: NodeId, packet: Packet) -> Result<(), SimError> {
        let now = self.now;
        let last = self.last_arrival.entry((from, to)).or_insert(SimTime::ZERO);
        if now < *last {
            self.trace.link_order_violations += 1;
        }
        *last = now;
        self.acc[to].accumulate(now, &NodeEvent::PacketProcessed { creator: packet.creator })?;
        let mut out = Outbox::new();
        let node = &mut self.aodv[to];
        match packet.body {
            PacketBody::Rreq(r) => node.handle_rreq(&r, from, now, &mut out),
            PacketBody::Rrep(r) => node.handle_rrep(&r, from, packet.creator, now, &mut out),
            PacketBody::Rerr(r) => node.handle_rerr(&r, from, now, &mut out),
            PacketBody::Data(d) => node.forward_data(d, Some(from), now, &mut out),
        }
        self.flush(to, out)
    }

    fn on_traffic(&mut self, connection: usize) -> Result<(), SimError> {
        let c = self.trace.connections[connection];
        let pkt = DataPacket {
            source: c.source,
            destination: c.destination,
            connection,
            seq: self.data_seq[connection],
            created_at: self.now,
            ttl: DATA_TTL,
        };
        self.data_seq[connection] += 1;
        self.trace.connection_stats[connection].sent += 1;
        let mut out = Outbox::new();
        self.aodv[c.source].forward_data(pkt, None, self.now, &mut out);
        self.flush(c.source, out)?;
        self.queue
            .push(self.now + SimTime::from_secs_f64(1.0 / self.cfg.packet_rate_hz), Payload::TrafficTick { connection });
        Ok(())
    }

    fn on_attack(&mut self, attacker: NodeId) -> Result<(), SimError> {
        let candidates: Vec<NodeId> = (1..self.nodes.len()).filter(|&id| id != attacker).collect();
        let rng = self.flood_rng.get_mut(&attacker).ok_or(SimError::UnknownNode(attacker))?;
        let mut out = Outbox::new();
        let burst = self.cfg.attack.flood_burst;
        if let Some(destination) = attacks::flooding_tick(&mut self.aodv[attacker], &candidates, burst, rng, &mut out) {
            self.trace.floods.entry(attacker).or_default().push(FloodBurst { time: self.now, destination, rreqs: burst });
        }
        self.flush(attacker, out)?;
        self.queue
            .push(self.now + SimTime::from_secs_f64(self.cfg.attack.flood_period_s), Payload::AttackTick { attacker });
        Ok(())
    }

    fn on_window_close(&mut self) {
        let now = self.now;
        for i in 0..self.nodes.len() {
            let (start, _) = self.acc[i].window();
            let label = label_sample(i, &self.trace.attackers, self.acc[i].creators(), self.cfg.label_rule);
            let ctx = WindowContext { neighbor_count: self.neighbors[i].len(), routes: self.aodv[i].table(), now };
            let features = self.acc[i].finalize(ctx);
            for k in 0..FEATURE_COUNT {
                self.trace.totals[i].0[k] += features.0[k];
            }
            if self.nodes[i].is_gbs {
                continue;
            }
            self.trace.samples.push(Sample {
                topology_id: self.cfg.topology_id,
                attack_kind: self.cfg.attack_kind,
                attacker_ratio: self.cfg.attacker_ratio,
                node_id: i,
                window_start_s: start.as_secs_f64(),
                features,
                label,
            });
        }
    }

    /// Record a handler's events and put its transmissions on the air.
    fn flush(&mut self, node: NodeId, out: Outbox) -> Result<(), SimError> {
        let now = self.now;
        for e in &out.events {
            self.acc[node].accumulate(now, e)?;
            if let NodeEvent::ForgedRrep { trigger_known, dest_seq, hop_count } = *e {
                self.trace.forged_replies.push(ForgedReply { attacker: node, time: now, trigger_known, dest_seq, hop_count });
            }
        }
        for d in &out.delivered {
            self.trace.connection_stats[d.connection].delivered += 1;
        }
        for send in out.sends {
            match send {
                Transmission::Broadcast(packet) => {
                    let arrival = self.airtime(node, &packet);
                    for &nb in &self.neighbors[node] {
                        self.queue.push(arrival, Payload::PacketArrival { to: nb, from: node, packet: packet.clone() });
                    }
                }
                Transmission::Unicast { to, packet } => {
                    if self.neighbors[node].contains(&to) {
                        let arrival = self.airtime(node, &packet);
                        self.queue.push(arrival, Payload::PacketArrival { to, from: node, packet });
                    } else {
                        if packet.body.is_data() {
                            self.acc[node].accumulate(now, &NodeEvent::DataDropped)?;
                        }
                        let mut repair = Outbox::new();
                        self.aodv[node].handle_link_break(to, now, &mut repair);
                        self.flush(node, repair)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn airtime(&mut self, node: NodeId, packet: &Packet) -> SimTime {
        let start = self.tx_free_at[node].max(self.now);
        let arrival = start + tx_delay(packet.size_bytes(self.cfg.packet_size_bytes), self.cfg.bandwidth_bps);
        self.tx_free_at[node] = arrival;
        arrival
    }
}

/// Build the world from `config` and run it to completion.
pub fn run_simulation(config: &SimConfig) -> Result<SimTrace, SimError> {
    Simulation::new(config.clone())?.run()
}
