//! 3D Gauss-Markov mobility.
//!
//! Each axis follows the first-order recurrence
//! `v' = a*v + (1 - a)*vbar + sqrt(1 - a^2) * xi` with `xi ~ N(0, sigma^2)`
//! and `sigma = noise_scale * mean_speed`. Positions advance by `v' * dt`
//! and reflect off the box walls; a reflection flips both the velocity and
//! the mean-velocity component of that axis so nodes do not pile up at a wall.

use std::ops::{Add, Mul, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::AreaBounds;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance_sq(self, other: Vec3) -> f64 {
        (self - other).norm_sq()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: NodeId,
    pub position: Vec3,
    pub velocity: Vec3,
    /// Gauss-Markov mean velocity (the drift the process relaxes toward).
    pub mean_velocity: Vec3,
    /// Memory parameter, fixed per node at spawn.
    pub alpha: f64,
    pub is_attacker: bool,
    pub is_gbs: bool,
}

impl NodeState {
    /// The immobile ground base station at the area center.
    pub fn ground_station(id: NodeId, bounds: &AreaBounds) -> Self {
        Self {
            id,
            position: bounds.center(),
            velocity: Vec3::ZERO,
            mean_velocity: Vec3::ZERO,
            alpha: 1.0,
            is_attacker: false,
            is_gbs: true,
        }
    }

    /// A UAV at a uniformly random position, heading in a uniformly random
    /// horizontal direction at `mean_speed`, with alpha drawn from `alpha_range`.
    pub fn spawn_uav<R: Rng + ?Sized>(
        id: NodeId,
        bounds: &AreaBounds,
        mean_speed: f64,
        alpha_range: [f64; 2],
        rng: &mut R,
    ) -> Self {
        let position = Vec3::new(
            rng.random_range(bounds.min[0]..=bounds.max[0]),
            rng.random_range(bounds.min[1]..=bounds.max[1]),
            rng.random_range(bounds.min[2]..=bounds.max[2]),
        );
        let heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let mean_velocity = Vec3::new(heading.cos() * mean_speed, heading.sin() * mean_speed, 0.0);
        let alpha = if alpha_range[0] < alpha_range[1] {
            rng.random_range(alpha_range[0]..=alpha_range[1])
        } else {
            alpha_range[0]
        };
        Self {
            id,
            position,
            velocity: mean_velocity,
            mean_velocity,
            alpha,
            is_attacker: false,
            is_gbs: false,
        }
    }
}

/// Parameters of one Gauss-Markov step.
#[derive(Debug, Clone, Copy)]
pub struct GaussMarkov {
    pub mean_speed: f64,
    pub noise_scale: f64,
    pub dt: f64,
    pub bounds: AreaBounds,
}

impl GaussMarkov {
    /// Advance `node` by one step using the node's own alpha.
    /// The ground station never moves.
    pub fn step<R: Rng + ?Sized>(&self, node: &NodeState, rng: &mut R) -> NodeState {
        self.step_with_alpha(node, node.alpha, rng)
    }

    pub fn step_with_alpha<R: Rng + ?Sized>(&self, node: &NodeState, alpha: f64, rng: &mut R) -> NodeState {
        let mut next = node.clone();
        if node.is_gbs {
            return next;
        }
        let sigma = self.noise_scale * self.mean_speed;
        let memory = (1.0 - alpha * alpha).max(0.0).sqrt();
        let v = node.velocity.to_array();
        let vbar = node.mean_velocity.to_array();
        let p = node.position.to_array();
        let mut nv = [0.0; 3];
        let mut nvbar = vbar;
        let mut np = [0.0; 3];
        for axis in 0..3 {
            // Draw unconditionally so the stream advances identically for any alpha.
            let xi: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            let vel = alpha * v[axis] + (1.0 - alpha) * vbar[axis] + memory * xi;
            let (pos, flipped) = reflect(p[axis] + vel * self.dt, self.bounds.min[axis], self.bounds.max[axis]);
            np[axis] = pos;
            nv[axis] = if flipped { -vel } else { vel };
            if flipped {
                nvbar[axis] = -vbar[axis];
            }
        }
        next.position = Vec3::from(np);
        next.velocity = Vec3::from(nv);
        next.mean_velocity = Vec3::from(nvbar);
        next
    }
}

/// Fold `x` back into `[lo, hi]` by mirror reflection. Returns the folded
/// coordinate and whether an odd number of reflections happened.
pub fn reflect(x: f64, lo: f64, hi: f64) -> (f64, bool) {
    if (lo..=hi).contains(&x) {
        return (x, false);
    }
    let width = hi - lo;
    let folds = ((x - lo) / width).floor();
    let mut q = (x - lo).rem_euclid(2.0 * width);
    if q > width {
        q = 2.0 * width - q;
    }
    let odd = (folds as i64).rem_euclid(2) == 1;
    ((lo + q).clamp(lo, hi), odd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn uav(position: Vec3, velocity: Vec3, mean_velocity: Vec3) -> NodeState {
        NodeState { id: 1, position, velocity, mean_velocity, alpha: 0.5, is_attacker: false, is_gbs: false }
    }

    fn model() -> GaussMarkov {
        GaussMarkov { mean_speed: 100.0, noise_scale: 0.25, dt: 1.0, bounds: AreaBounds::default() }
    }

    #[test]
    fn alpha_one_keeps_velocity() {
        let n = uav(Vec3::new(100.0, 500.0, 100.0), Vec3::new(30.0, -20.0, 1.0), Vec3::new(100.0, 0.0, 0.0));
        let mut rng = seed::rng(1);
        let m = model();
        let mut cur = n.clone();
        for _ in 0..5 {
            cur = m.step_with_alpha(&cur, 1.0, &mut rng);
            assert_eq!(cur.velocity, n.velocity);
        }
        assert_eq!(cur.position, Vec3::new(250.0, 400.0, 105.0));
    }

    #[test]
    fn alpha_zero_mean_velocity_matches_drift() {
        // Monte-Carlo oracle: with alpha = 0 the new velocity is vbar + xi,
        // so its sample mean converges to vbar.
        let n = uav(Vec3::new(6000.0, 6000.0, 150.0), Vec3::new(-40.0, 10.0, 0.0), Vec3::new(100.0, 0.0, 0.0));
        let m = model();
        let mut rng = seed::rng(42);
        let draws = 10_000;
        let mut sum = Vec3::ZERO;
        for _ in 0..draws {
            sum = sum + m.step_with_alpha(&n, 0.0, &mut rng).velocity;
        }
        let mean = sum * (1.0 / draws as f64);
        assert!((mean.x - 100.0).abs() < 2.0, "mean vx {}", mean.x);
        assert!(mean.y.abs() < 2.0 && mean.z.abs() < 2.0);
    }

    #[test]
    fn reflection_at_upper_x_wall() {
        // 11990 + 50 = 12040 overshoots by 40 and mirrors to 11960.
        let n = uav(Vec3::new(11_990.0, 500.0, 100.0), Vec3::new(50.0, 0.0, 0.0), Vec3::new(50.0, 0.0, 0.0));
        let out = model().step_with_alpha(&n, 1.0, &mut seed::rng(3));
        assert_eq!(out.position.x, 11_960.0);
        assert_eq!(out.velocity.x, -50.0);
        assert_eq!(out.mean_velocity.x, -50.0);
    }

    #[test]
    fn reflect_handles_multiple_folds() {
        assert_eq!(reflect(5.0, 0.0, 10.0), (5.0, false));
        assert_eq!(reflect(12.0, 0.0, 10.0), (8.0, true));
        assert_eq!(reflect(-3.0, 0.0, 10.0), (3.0, true));
        assert_eq!(reflect(23.0, 0.0, 10.0), (3.0, false));
        assert_eq!(reflect(-13.0, 0.0, 10.0), (7.0, false));
    }

    #[test]
    fn ground_station_is_immobile() {
        let b = AreaBounds::default();
        let g = NodeState::ground_station(0, &b);
        let out = model().step(&g, &mut seed::rng(0));
        assert_eq!(out, g);
        assert_eq!(g.position, Vec3::new(6000.0, 6000.0, 150.0));
    }

    proptest::proptest! {
        #[test]
        fn positions_stay_in_bounds(seed_v in 0u64..500, alpha in 0.01f64..0.99, steps in 1usize..200) {
            let b = AreaBounds::default();
            let m = model();
            let mut rng = seed::rng(seed_v);
            let mut n = NodeState::spawn_uav(1, &b, 100.0, [alpha, alpha], &mut rng);
            for _ in 0..steps {
                n = m.step(&n, &mut rng);
                proptest::prop_assert!(b.contains(n.position));
            }
        }
    }
}
