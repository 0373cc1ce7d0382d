//! Wire-level packets. Sizes follow the RFC 3561 message formats for control
//! traffic; data packets carry the configured UDP payload size.

use serde::{Deserialize, Serialize};

use crate::event::SimTime;
use crate::NodeId;

pub type SeqNo = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rreq {
    pub origin: NodeId,
    pub origin_seq: SeqNo,
    pub rreq_id: u32,
    pub destination: NodeId,
    /// Last destination sequence number known to the origin, if any.
    pub dest_seq_known: Option<SeqNo>,
    pub hop_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rrep {
    pub destination: NodeId,
    pub dest_seq: SeqNo,
    pub hop_count: u32,
    pub origin: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rerr {
    pub unreachable: Vec<(NodeId, SeqNo)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DataPacket {
    pub source: NodeId,
    pub destination: NodeId,
    pub connection: usize,
    pub seq: u64,
    pub created_at: SimTime,
    /// Remaining hops before the packet is discarded. Bounds transient loops
    /// that forged routes can create.
    pub ttl: u8,
}

/// Initial data-packet TTL.
pub const DATA_TTL: u8 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PacketBody {
    Rreq(Rreq),
    Rrep(Rrep),
    Rerr(Rerr),
    Data(DataPacket),
}

impl PacketBody {
    pub fn is_data(&self) -> bool {
        matches!(self, PacketBody::Data(_))
    }

    pub fn tag(&self) -> u8 {
        match self {
            PacketBody::Rreq(_) => 1,
            PacketBody::Rrep(_) => 2,
            PacketBody::Rerr(_) => 3,
            PacketBody::Data(_) => 4,
        }
    }
}

/// A packet plus the provenance metadata the labeler needs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Packet {
    /// Node that created this packet (not the last hop). Forwarding keeps it.
    pub creator: NodeId,
    pub body: PacketBody,
}

pub const RREQ_BYTES: u32 = 24;
pub const RREP_BYTES: u32 = 20;

impl Packet {
    pub fn new(creator: NodeId, body: PacketBody) -> Self {
        Self { creator, body }
    }

    pub fn size_bytes(&self, data_bytes: u32) -> u32 {
        match &self.body {
            PacketBody::Rreq(_) => RREQ_BYTES,
            PacketBody::Rrep(_) => RREP_BYTES,
            PacketBody::Rerr(e) => 4 + 8 * e.unreachable.len() as u32,
            PacketBody::Data(_) => data_bytes,
        }
    }
}
