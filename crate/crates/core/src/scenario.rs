//! Static network description: room, AP and user placement, optics, QoS.

use nalgebra::Point3;
use rand::Rng;

use crate::channel::{PhysParams, WallGrid};
use crate::effective_rate::QosProfile;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    /// Extent along x in m.
    pub length: f64,
    /// Extent along y in m.
    pub width: f64,
    /// Ceiling height in m.
    pub height: f64,
}

impl Room {
    pub fn new(length: f64, width: f64, height: f64) -> Self {
        Self { length, width, height }
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0.0..=self.length).contains(&p.x) && (0.0..=self.width).contains(&p.y) && (0.0..=self.height).contains(&p.z)
    }

    pub fn floor_area(&self) -> f64 {
        self.length * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub room: Room,
    pub ap_positions: Vec<Point3<f64>>,
    pub user_positions: Vec<Point3<f64>>,
    pub phys: PhysParams,
    pub qos: Vec<QosProfile>,
    pub walls: WallGrid,
    /// Probability β that a user's LoS paths are clear in a slot.
    pub unblocked_prob: f64,
}

impl Scenario {
    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("room.length", self.room.length),
            ("room.width", self.room.width),
            ("room.height", self.room.height),
        ];
        for (key, v) in dims {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.ap_positions.is_empty() {
            return Err(Error::config("layout.ap_positions", "need at least one AP"));
        }
        if self.user_positions.is_empty() {
            return Err(Error::config("layout.users", "need at least one user"));
        }
        for (i, p) in self.ap_positions.iter().enumerate() {
            if !self.room.contains(p) {
                return Err(Error::config(
                    "layout.ap_positions",
                    format!("AP {i} at {p} lies outside the room"),
                ));
            }
        }
        for (j, p) in self.user_positions.iter().enumerate() {
            if !self.room.contains(p) {
                return Err(Error::config(
                    "layout.user_positions",
                    format!("user {j} at {p} lies outside the room"),
                ));
            }
        }
        if !(self.walls.patch_width > 0.0 && self.walls.patch_height > 0.0) {
            return Err(Error::config("walls", "patch dimensions must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.unblocked_prob) {
            return Err(Error::config("channel.unblocked_prob", "must be in [0, 1]"));
        }
        if self.qos.len() != self.user_positions.len() {
            return Err(Error::config(
                "qos",
                format!("{} profiles for {} users", self.qos.len(), self.user_positions.len()),
            ));
        }
        for (j, q) in self.qos.iter().enumerate() {
            if !(q.theta.is_finite() && q.theta > 0.0) {
                return Err(Error::config("qos.theta", format!("user {j}: must be > 0")));
            }
            if !(q.effective_bandwidth.is_finite() && q.effective_bandwidth >= 0.0) {
                return Err(Error::config("qos.be_bps", format!("user {j}: must be >= 0")));
            }
        }
        self.phys.validate()
    }
}

/// `per_side × per_side` APs at ceiling height, one per cell of a uniform
/// grid over the floor.
pub fn grid_ap_positions(room: &Room, per_side: usize) -> Vec<Point3<f64>> {
    let dx = room.length / per_side as f64;
    let dy = room.width / per_side as f64;
    let mut out = Vec::with_capacity(per_side * per_side);
    for ix in 0..per_side {
        for iy in 0..per_side {
            out.push(Point3::new((ix as f64 + 0.5) * dx, (iy as f64 + 0.5) * dy, room.height));
        }
    }
    out
}

/// Users dropped uniformly over the floor at receiver height.
pub fn random_user_positions(room: &Room, count: usize, height: f64, seed: u64) -> Vec<Point3<f64>> {
    let mut r = rng::stream(seed, &[rng::TAG_LAYOUT]);
    (0..count)
        .map(|_| Point3::new(r.gen_range(0.0..room.length), r.gen_range(0.0..room.width), height))
        .collect()
}

/// Per-user QoS spread by index: θ log-uniform between the two exponents,
/// effective bandwidth linear between the two rates. Inputs are per bit and
/// in bits/s.
pub fn qos_by_index(count: usize, theta_bits: (f64, f64), be_bps: (f64, f64), bandwidth: f64) -> Vec<QosProfile> {
    (0..count)
        .map(|j| {
            let f = if count > 1 { j as f64 / (count - 1) as f64 } else { 0.0 };
            let theta = (theta_bits.0.ln() + f * (theta_bits.1.ln() - theta_bits.0.ln())).exp();
            let be = be_bps.0 + f * (be_bps.1 - be_bps.0);
            QosProfile::from_bits(theta, be, bandwidth)
        })
        .collect()
}

impl Scenario {
    /// 16 × 16 × 2.5 m room, 8 × 8 APs, users at 0.5 m, β = 0.7, θ from 1e-10
    /// to 1e-7 per bit and effective bandwidth from 0.1 to 1 Mbit/s.
    pub fn reference(users: usize, layout_seed: u64) -> Self {
        let room = Room::new(16.0, 16.0, 2.5);
        let phys = PhysParams::default();
        Self {
            ap_positions: grid_ap_positions(&room, 8),
            user_positions: random_user_positions(&room, users, 0.5, layout_seed),
            qos: qos_by_index(users, (1e-10, 1e-7), (1e5, 1e6), phys.bandwidth),
            room,
            phys,
            walls: WallGrid::default(),
            unblocked_prob: 0.7,
        }
    }
}

/// Small room with `aps` (a perfect square) APs on a 2 m pitch.
#[cfg(test)]
pub(crate) fn test_scenario(aps: usize, users: usize, seed: u64) -> Scenario {
    let side = (aps as f64).sqrt().round() as usize;
    assert_eq!(side * side, aps);
    let room = Room::new(2.0 * side as f64, 2.0 * side as f64, 2.5);
    let phys = PhysParams::default();
    Scenario {
        ap_positions: grid_ap_positions(&room, side),
        user_positions: random_user_positions(&room, users, 0.5, seed),
        qos: qos_by_index(users, (1e-10, 1e-7), (1e5, 1e6), phys.bandwidth),
        room,
        phys,
        walls: WallGrid::default(),
        unblocked_prob: 0.7,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_layout_is_valid() {
        let s = Scenario::reference(10, 1);
        s.validate().unwrap();
        assert_eq!(s.num_aps(), 64);
        assert_eq!(s.ap_positions[0], Point3::new(1.0, 1.0, 2.5));
        assert_eq!(s.num_users(), 10);
    }

    #[test]
    fn qos_spread_hits_endpoints() {
        let q = qos_by_index(10, (1e-10, 1e-7), (1e5, 1e6), 20e6);
        let back = |p: &QosProfile| p.theta_bits(20e6);
        assert!((back(&q[0]) / 1e-10 - 1.0).abs() < 1e-12);
        assert!((back(&q[9]) / 1e-7 - 1.0).abs() < 1e-12);
        assert!((q[9].effective_bandwidth_bps(20e6) - 1e6).abs() < 1e-6);
        assert!(q.windows(2).all(|w| w[0].theta < w[1].theta));
    }

    #[test]
    fn validation_names_the_key() {
        let mut s = Scenario::reference(3, 1);
        s.user_positions[1].x = 99.0;
        match s.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "layout.user_positions"),
            other => panic!("unexpected {other:?}"),
        }
        let mut s = Scenario::reference(3, 1);
        s.phys.modulation_index = 1.5;
        assert!(matches!(s.validate(), Err(Error::Config { .. })));
    }

    #[test]
    fn layout_is_seeded() {
        let room = Room::new(16.0, 16.0, 2.5);
        assert_eq!(
            random_user_positions(&room, 5, 0.5, 3),
            random_user_positions(&room, 5, 0.5, 3)
        );
        assert_ne!(
            random_user_positions(&room, 5, 0.5, 3),
            random_user_positions(&room, 5, 0.5, 4)
        );
    }
}
