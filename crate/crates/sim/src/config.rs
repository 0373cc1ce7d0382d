//! Simulation parameters.
//!
//! Defaults reproduce the reference FANET setting: a 12 km x 12 km x 300 m
//! box, 50 UAVs plus the ground station, 1800 s runs, 100 m/s average speed,
//! 250 m radio range, 11 Mbps links and ten 512-byte/1 Hz UDP connections.

use serde::{Deserialize, Serialize};

use crate::mobility::Vec3;
use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    None,
    Sinkhole,
    Blackhole,
    Flooding,
}

impl AttackKind {
    pub const ATTACKS: [AttackKind; 3] = [AttackKind::Sinkhole, AttackKind::Blackhole, AttackKind::Flooding];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::Sinkhole => "sinkhole",
            AttackKind::Blackhole => "blackhole",
            AttackKind::Flooding => "flooding",
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(AttackKind::None),
            "sinkhole" => Ok(AttackKind::Sinkhole),
            "blackhole" => Ok(AttackKind::Blackhole),
            "flooding" => Ok(AttackKind::Flooding),
            other => Err(format!("unknown attack kind `{other}`")),
        }
    }
}

/// How window samples are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelRule {
    /// Malicious iff the node is an attacker or it processed at least one
    /// packet created by an attacker during the window.
    #[default]
    AttackerTraffic,
    /// Malicious iff the node is an attacker.
    AttackerNodeOnly,
}

/// Axis-aligned simulation box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaBounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl AreaBounds {
    pub fn new(max: [f64; 3]) -> Self {
        Self { min: [0.0; 3], max }
    }

    pub fn lo(&self) -> Vec3 {
        Vec3::from(self.min)
    }

    pub fn hi(&self) -> Vec3 {
        Vec3::from(self.max)
    }

    pub fn center(&self) -> Vec3 {
        (self.lo() + self.hi()) * 0.5
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let p = p.to_array();
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

impl Default for AreaBounds {
    fn default() -> Self {
        Self::new([12_000.0, 12_000.0, 300.0])
    }
}

/// AODV timer and buffer constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AodvParams {
    /// Soft route expiry, refreshed whenever the route carries data.
    pub route_lifetime_s: f64,
    /// How long a discovery stays pending before another may be issued.
    pub discovery_timeout_s: f64,
    /// Discovery retries for buffered packets before they are dropped.
    pub discovery_retries: u32,
    /// Shared per-node data buffer for packets awaiting a route.
    pub buffer_capacity: usize,
}

impl Default for AodvParams {
    fn default() -> Self {
        Self { route_lifetime_s: 10.0, discovery_timeout_s: 2.8, discovery_retries: 2, buffer_capacity: 64 }
    }
}

/// Attacker tunables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackParams {
    /// Added to the requested destination sequence number in forged replies.
    pub seq_boost: u32,
    /// RREQs per flooding burst.
    pub flood_burst: u32,
    /// Seconds between flooding bursts.
    pub flood_period_s: f64,
}

impl Default for AttackParams {
    fn default() -> Self {
        Self { seq_boost: 100, flood_burst: 10, flood_period_s: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub area: AreaBounds,
    pub duration_s: f64,
    /// Number of UAVs. The ground station is added on top as node 0.
    pub node_count: usize,
    pub avg_speed_mps: f64,
    pub tx_range_m: f64,
    pub bandwidth_bps: f64,
    pub traffic_connections: usize,
    pub packet_size_bytes: u32,
    pub packet_rate_hz: f64,
    pub alpha_range: [f64; 2],
    pub attacker_ratio: f64,
    pub attack_kind: AttackKind,
    /// Topology seed. Mobility, traffic endpoints and attacker selection all
    /// derive from it, so attack-free and attacked twins share a topology.
    pub seed: u64,
    pub topology_id: u32,
    pub mobility_dt_s: f64,
    /// Standard deviation of the Gauss-Markov innovation, as a fraction of
    /// `avg_speed_mps`.
    pub gm_noise_scale: f64,
    /// Feature collection period.
    pub window_s: f64,
    pub label_rule: LabelRule,
    pub aodv: AodvParams,
    pub attack: AttackParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            area: AreaBounds::default(),
            duration_s: 1800.0,
            node_count: 50,
            avg_speed_mps: 100.0,
            tx_range_m: 250.0,
            bandwidth_bps: 11e6,
            traffic_connections: 10,
            packet_size_bytes: 512,
            packet_rate_hz: 1.0,
            alpha_range: [0.25, 0.7],
            attacker_ratio: 0.0,
            attack_kind: AttackKind::None,
            seed: 0,
            topology_id: 0,
            mobility_dt_s: 1.0,
            gm_noise_scale: 0.25,
            window_s: 5.0,
            label_rule: LabelRule::AttackerTraffic,
            aodv: AodvParams::default(),
            attack: AttackParams::default(),
        }
    }
}

impl SimConfig {
    /// Total node count including the ground station.
    pub fn total_nodes(&self) -> usize {
        self.node_count + 1
    }

    /// Number of whole collection windows in the run.
    pub fn window_count(&self) -> usize {
        (self.duration_s / self.window_s).floor() as usize
    }

    pub fn with_attack(mut self, kind: AttackKind, ratio: f64) -> Self {
        self.attack_kind = kind;
        self.attacker_ratio = ratio;
        self
    }

    /// Collects every violated invariant instead of stopping at the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut positive = |name: &str, x: f64| {
            if !(x.is_finite() && x > 0.0) {
                v.push(format!("{name} must be finite and > 0 (got {x})"));
            }
        };
        positive("duration_s", self.duration_s);
        positive("avg_speed_mps", self.avg_speed_mps);
        positive("tx_range_m", self.tx_range_m);
        positive("bandwidth_bps", self.bandwidth_bps);
        positive("packet_size_bytes", self.packet_size_bytes as f64);
        positive("packet_rate_hz", self.packet_rate_hz);
        positive("mobility_dt_s", self.mobility_dt_s);
        positive("window_s", self.window_s);
        positive("aodv.route_lifetime_s", self.aodv.route_lifetime_s);
        positive("aodv.discovery_timeout_s", self.aodv.discovery_timeout_s);
        positive("attack.flood_period_s", self.attack.flood_period_s);
        if !(self.gm_noise_scale.is_finite() && self.gm_noise_scale >= 0.0) {
            v.push(format!("gm_noise_scale must be finite and >= 0 (got {})", self.gm_noise_scale));
        }
        for i in 0..3 {
            if !(self.area.min[i].is_finite() && self.area.max[i].is_finite() && self.area.max[i] > self.area.min[i]) {
                v.push(format!("area axis {i} must satisfy min < max (got [{}, {}])", self.area.min[i], self.area.max[i]));
            }
        }
        if self.node_count < 2 {
            v.push(format!("node_count must be >= 2 (got {})", self.node_count));
        }
        let [a0, a1] = self.alpha_range;
        if !(a0 > 0.0 && a1 < 1.0 && a0 <= a1) {
            v.push(format!("alpha_range must be a sub-interval of (0, 1) (got [{a0}, {a1}])"));
        }
        if !(0.0..=0.25).contains(&self.attacker_ratio) {
            v.push(format!("attacker_ratio must lie in [0, 0.25] (got {})", self.attacker_ratio));
        }
        if self.attack_kind == AttackKind::None && self.attacker_ratio != 0.0 {
            v.push("attacker_ratio must be 0 when attack_kind = none".to_string());
        }
        if self.aodv.buffer_capacity == 0 {
            v.push("aodv.buffer_capacity must be >= 1".to_string());
        }
        if self.attack.flood_burst == 0 {
            v.push("attack.flood_burst must be >= 1".to_string());
        }
        if 2 * self.traffic_connections > self.node_count {
            v.push(format!(
                "traffic_connections ({}) needs {} distinct UAV endpoints but only {} UAVs exist",
                self.traffic_connections,
                2 * self.traffic_connections,
                self.node_count
            ));
        }
        if self.window_s.is_finite() && self.window_s > 0.0 && self.window_count() == 0 {
            v.push("duration_s must cover at least one collection window".to_string());
        }
        v
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(v))
        }
    }
}
