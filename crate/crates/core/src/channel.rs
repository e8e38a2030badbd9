//! Indoor VLC channel: Lambertian LoS gains, first-reflection wall gains,
//! capable-AP sets and per-slot blockage sampling.
//!
//! Geometry conventions: LEDs face straight down (−z), photodetectors face
//! straight up (+z). All gains are composite DC path gains in V/A, i.e. they
//! already include LED efficiency, PD responsivity and amplifier gain.

use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Room, Scenario};

/// Optical front-end and noise constants shared by every AP and receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Modulation bandwidth in Hz.
    pub bandwidth: f64,
    /// LEDs per AP array. Their optical outputs add, so the AP drive is
    /// `leds_per_ap` times the per-LED amplitude.
    pub leds_per_ap: u32,
    /// DC bias current in A.
    pub dc_current: f64,
    /// Modulation index γ ∈ [0, 1].
    pub modulation_index: f64,
    /// Current-to-light conversion efficiency η in W/A.
    pub conversion_efficiency: f64,
    /// PD responsivity in A/W.
    pub responsivity: f64,
    /// Transimpedance amplifier gain in V/A.
    pub amplifier_gain: f64,
    /// Detector area in m².
    pub pd_area: f64,
    /// Concentrator refractive index.
    pub refractive_index: f64,
    /// LED semi-angle at half illumination, radians.
    pub semi_angle: f64,
    /// Receiver acceptance half-angle φ_c, radians.
    pub fov_half: f64,
    /// Wall reflectance ρ ∈ [0, 1].
    pub reflectance: f64,
    /// Noise power spectral density N₀ in A²/Hz.
    pub noise_psd: f64,
}

impl Default for PhysParams {
    /// Reference indoor parameters (20 MHz, 700 mA bias, γ = 0.2, 70° LEDs,
    /// 100° acceptance half-angle).
    fn default() -> Self {
        Self {
            bandwidth: 20e6,
            leds_per_ap: 400,
            dc_current: 0.7,
            modulation_index: 0.2,
            conversion_efficiency: 0.44,
            responsivity: 0.54,
            amplifier_gain: 1.0,
            pd_area: 1e-4,
            refractive_index: 1.5,
            semi_angle: 70f64.to_radians(),
            fov_half: 100f64.to_radians(),
            reflectance: 0.8,
            noise_psd: 1e-22,
        }
    }
}

impl PhysParams {
    /// Per-LED peak signal amplitude A = γ·I_DC in A.
    pub fn peak_amplitude(&self) -> f64 {
        self.modulation_index * self.dc_current
    }

    /// Peak amplitude of a whole AP array, m·γ·I_DC.
    pub fn ap_amplitude(&self) -> f64 {
        self.leds_per_ap as f64 * self.peak_amplitude()
    }

    /// Receiver noise variance σ² = N₀·B in A².
    pub fn noise_variance(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }

    pub fn lambertian_order(&self) -> Result<f64> {
        lambertian_order(self.semi_angle)
    }

    /// η(L_a + 1)δϖT / 2π, the geometry-free prefactor shared by LoS and
    /// reflected links.
    fn link_prefactor(&self, order: f64) -> f64 {
        self.conversion_efficiency * (order + 1.0) * self.pd_area * self.responsivity * self.amplifier_gain / (2.0 * PI)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("phys.bandwidth_hz", self.bandwidth),
            ("phys.dc_current_a", self.dc_current),
            ("phys.modulation_index", self.modulation_index),
            ("phys.conversion_efficiency", self.conversion_efficiency),
            ("phys.responsivity", self.responsivity),
            ("phys.amplifier_gain", self.amplifier_gain),
            ("phys.pd_area_m2", self.pd_area),
            ("phys.refractive_index", self.refractive_index),
            ("phys.semi_angle_deg", self.semi_angle),
            ("phys.fov_deg", self.fov_half),
            ("phys.reflectance", self.reflectance),
            ("phys.noise_psd", self.noise_psd),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.leds_per_ap == 0 {
            return Err(Error::config("phys.leds_per_ap", "must be >= 1"));
        }
        if self.modulation_index > 1.0 {
            return Err(Error::config("phys.modulation_index", "must be in [0, 1]"));
        }
        if self.reflectance > 1.0 {
            return Err(Error::config("phys.reflectance", "must be in [0, 1]"));
        }
        if self.semi_angle >= PI / 2.0 {
            return Err(Error::config("phys.semi_angle_deg", "must be below 90°"));
        }
        if self.fov_half >= PI {
            return Err(Error::config("phys.fov_deg", "half-angle must be below 180°"));
        }
        Ok(())
    }
}

/// Wall discretization for the first-reflection integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallGrid {
    /// Horizontal patch extent in m.
    pub patch_width: f64,
    /// Vertical patch extent in m.
    pub patch_height: f64,
}

impl Default for WallGrid {
    fn default() -> Self {
        Self {
            patch_width: 0.1,
            patch_height: 0.05,
        }
    }
}

/// Lambertian emission order L_a = −ln 2 / ln cos φ_½.
pub fn lambertian_order(semi_angle: f64) -> Result<f64> {
    let c = semi_angle.cos();
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!(
            "semi-angle {semi_angle} rad gives cos = {c}; need 0 < cos < 1"
        )));
    }
    Ok(-(2f64.ln()) / c.ln())
}

/// Optical concentrator gain: a²/sin²φ_c inside the acceptance cone, 0 outside.
pub fn concentrator_gain(incidence: f64, refractive_index: f64, fov_half: f64) -> f64 {
    if incidence <= fov_half {
        let s = fov_half.sin();
        refractive_index * refractive_index / (s * s)
    } else {
        0.0
    }
}

/// Line-of-sight DC gain from a downward LED to an upward detector.
pub fn los_gain(ap: &Point3<f64>, user: &Point3<f64>, phys: &PhysParams) -> f64 {
    let order = match phys.lambertian_order() {
        Ok(o) => o,
        Err(_) => return 0.0,
    };
    los_gain_with_order(ap, user, phys, order)
}

fn los_gain_with_order(ap: &Point3<f64>, user: &Point3<f64>, phys: &PhysParams, order: f64) -> f64 {
    let d = (ap - user).norm();
    let dz = ap.z - user.z;
    if d <= 0.0 || dz <= 0.0 {
        return 0.0;
    }
    // Vertical orientation on both ends: irradiance angle == incidence angle.
    let cos_angle = dz / d;
    let incidence = cos_angle.clamp(-1.0, 1.0).acos();
    let g = concentrator_gain(incidence, phys.refractive_index, phys.fov_half);
    if g == 0.0 {
        return 0.0;
    }
    phys.link_prefactor(order) / (d * d) * g * cos_angle.powf(order) * cos_angle
}

/// Centres, inward normals and area of the wall patches of a room.
#[derive(Debug, Clone)]
pub struct WallPatches {
    pub centers: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub area: Vec<f64>,
}

impl WallPatches {
    pub fn new(room: &Room, grid: &WallGrid) -> Self {
        let nz = ((room.height / grid.patch_height).round() as usize).max(1);
        let dz = room.height / nz as f64;
        let mut centers = Vec::new();
        let mut normals = Vec::new();
        let mut area = Vec::new();
        // (wall span, fixed coordinate, inward normal, along-x?)
        let walls: [(f64, Point3<f64>, Vector3<f64>, bool); 4] = [
            (
                room.length,
                Point3::new(0.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                true,
            ),
            (
                room.length,
                Point3::new(0.0, room.width, 0.0),
                Vector3::new(0.0, -1.0, 0.0),
                true,
            ),
            (
                room.width,
                Point3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                false,
            ),
            (
                room.width,
                Point3::new(room.length, 0.0, 0.0),
                Vector3::new(-1.0, 0.0, 0.0),
                false,
            ),
        ];
        for (span, origin, normal, along_x) in walls {
            let ns = ((span / grid.patch_width).round() as usize).max(1);
            let ds = span / ns as f64;
            for s in 0..ns {
                let u = (s as f64 + 0.5) * ds;
                for k in 0..nz {
                    let z = (k as f64 + 0.5) * dz;
                    let c = if along_x {
                        Point3::new(u, origin.y, z)
                    } else {
                        Point3::new(origin.x, u, z)
                    };
                    centers.push(c);
                    normals.push(normal);
                    area.push(ds * dz);
                }
            }
        }
        Self { centers, normals, area }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Transmitter-side factor of every patch term: everything in the
    /// reflected-link integrand that depends only on the AP and the patch.
    fn source_factors(&self, ap: &Point3<f64>, phys: &PhysParams, order: f64) -> Vec<f64> {
        let pre = phys.link_prefactor(order) * phys.reflectance;
        (0..self.len())
            .map(|p| {
                let v = self.centers[p] - ap;
                let d2 = v.norm();
                let cos_irr = -v.z / d2;
                let cos_wall_in = -v.dot(&self.normals[p]) / d2;
                if cos_irr <= 0.0 || cos_wall_in <= 0.0 {
                    0.0
                } else {
                    pre * cos_irr.powf(order) * cos_wall_in / (d2 * d2) * self.area[p]
                }
            })
            .collect()
    }

    /// Receiver-side factor of every patch term.
    fn receiver_factors(&self, user: &Point3<f64>, phys: &PhysParams) -> Vec<f64> {
        (0..self.len())
            .map(|p| receiver_factor(&self.centers[p], &self.normals[p], user, phys))
            .collect()
    }
}

fn receiver_factor(center: &Point3<f64>, normal: &Vector3<f64>, user: &Point3<f64>, phys: &PhysParams) -> f64 {
    let v = user - center;
    let d1 = v.norm();
    let cos_wall_out = v.dot(normal) / d1;
    let cos_in = -v.z / d1;
    if cos_wall_out <= 0.0 || cos_in <= 0.0 {
        return 0.0;
    }
    let incidence = cos_in.clamp(-1.0, 1.0).acos();
    let g = concentrator_gain(incidence, phys.refractive_index, phys.fov_half);
    cos_wall_out * g * cos_in / (d1 * d1)
}

/// First-reflection gain of one link, summed patch by patch.
pub fn nlos_gain(ap: &Point3<f64>, user: &Point3<f64>, phys: &PhysParams, room: &Room, grid: &WallGrid) -> f64 {
    let order = match phys.lambertian_order() {
        Ok(o) => o,
        Err(_) => return 0.0,
    };
    let patches = WallPatches::new(room, grid);
    let pre = phys.link_prefactor(order) * phys.reflectance;
    let mut total = 0.0;
    for p in 0..patches.len() {
        let c = patches.centers[p];
        let n = patches.normals[p];
        let to_patch = c - ap;
        let d2 = to_patch.norm();
        let to_user = user - c;
        let d1 = to_user.norm();
        let cos_irr = -to_patch.z / d2;
        let cos_w1 = -to_patch.dot(&n) / d2;
        let cos_w2 = to_user.dot(&n) / d1;
        let cos_in = -to_user.z / d1;
        if cos_irr <= 0.0 || cos_w1 <= 0.0 || cos_w2 <= 0.0 || cos_in <= 0.0 {
            continue;
        }
        let g = concentrator_gain(cos_in.acos(), phys.refractive_index, phys.fov_half);
        total += pre / (d1 * d1 * d2 * d2) * cos_w1 * cos_w2 * cos_irr.powf(order) * g * cos_in * patches.area[p];
    }
    total
}

/// Deterministic LoS and reflected gains for every (AP, user) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    num_aps: usize,
    num_users: usize,
    los: Vec<f64>,
    nlos: Vec<f64>,
}

impl LinkGains {
    pub fn compute(scenario: &Scenario) -> Result<Self> {
        let order = scenario.phys.lambertian_order()?;
        let patches = WallPatches::new(&scenario.room, &scenario.walls);
        let aps = &scenario.ap_positions;
        let users = &scenario.user_positions;
        let sources: Vec<Vec<f64>> = aps
            .iter()
            .map(|ap| patches.source_factors(ap, &scenario.phys, order))
            .collect();
        let mut los = Vec::with_capacity(aps.len() * users.len());
        let mut nlos = Vec::with_capacity(aps.len() * users.len());
        let receivers: Vec<Vec<f64>> = users
            .iter()
            .map(|u| patches.receiver_factors(u, &scenario.phys))
            .collect();
        for (i, ap) in aps.iter().enumerate() {
            for (j, user) in users.iter().enumerate() {
                los.push(los_gain_with_order(ap, user, &scenario.phys, order));
                nlos.push(dot(&sources[i], &receivers[j]));
            }
        }
        Ok(Self {
            num_aps: aps.len(),
            num_users: users.len(),
            los,
            nlos,
        })
    }

    pub fn num_aps(&self) -> usize {
        self.num_aps
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn los(&self, ap: usize, user: usize) -> f64 {
        self.los[ap * self.num_users + user]
    }

    pub fn nlos(&self, ap: usize, user: usize) -> f64 {
        self.nlos[ap * self.num_users + user]
    }

    /// Unblocked total gain LoS + NLoS.
    pub fn total(&self, ap: usize, user: usize) -> f64 {
        self.los(ap, user) + self.nlos(ap, user)
    }

    /// Gain under a blockage draw: LoS only counts when unblocked.
    pub fn realized(&self, ap: usize, user: usize, unblocked: bool) -> f64 {
        if unblocked {
            self.total(ap, user)
        } else {
            self.nlos(ap, user)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Receiving-plane positions on a regular grid, cell-centred, at `height`.
pub fn receiving_plane(room: &Room, height: f64, spacing: f64) -> Vec<Point3<f64>> {
    let nx = ((room.length / spacing).round() as usize).max(1);
    let ny = ((room.width / spacing).round() as usize).max(1);
    let (dx, dy) = (room.length / nx as f64, room.width / ny as f64);
    let mut pts = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        for iy in 0..ny {
            pts.push(Point3::new((ix as f64 + 0.5) * dx, (iy as f64 + 0.5) * dy, height));
        }
    }
    pts
}

/// For each position, the reflected gain summed over all APs.
pub fn nlos_sum_at(
    positions: &[Point3<f64>],
    aps: &[Point3<f64>],
    phys: &PhysParams,
    room: &Room,
    grid: &WallGrid,
) -> Result<Vec<f64>> {
    let order = phys.lambertian_order()?;
    let patches = WallPatches::new(room, grid);
    let mut source = vec![0.0; patches.len()];
    for ap in aps {
        for (acc, f) in source.iter_mut().zip(patches.source_factors(ap, phys, order)) {
            *acc += f;
        }
    }
    Ok(positions
        .iter()
        .map(|u| {
            (0..patches.len())
                .map(|p| {
                    if source[p] == 0.0 {
                        0.0
                    } else {
                        source[p] * receiver_factor(&patches.centers[p], &patches.normals[p], u, phys)
                    }
                })
                .sum()
        })
        .collect())
}

/// Ω_j: APs whose unblocked total gain to `user` exceeds `epsilon`.
pub fn capable_ap_set(gains: &LinkGains, user: usize, epsilon: f64) -> Vec<usize> {
    (0..gains.num_aps())
        .filter(|&i| gains.total(i, user) > epsilon)
        .collect()
}

pub fn capable_ap_sets(gains: &LinkGains, epsilon: f64) -> Vec<Vec<usize>> {
    (0..gains.num_users())
        .map(|j| capable_ap_set(gains, j, epsilon))
        .collect()
}

/// One slot's realized channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub slot: usize,
    /// ξ_j: true when user j's LoS paths are clear this slot.
    pub unblocked: Vec<bool>,
    /// h[j]: gains from the APs of Ω_j to user j, in Ω_j order.
    pub h: Vec<Vec<f64>>,
    /// h_e[j][k]: gains from the APs of Ω_j to eavesdropper k (empty for k == j).
    pub h_e: Vec<Vec<Vec<f64>>>,
}

impl ChannelState {
    pub fn num_users(&self) -> usize {
        self.h.len()
    }

    /// Wiretap vectors of user j's cell, one per eavesdropper k != j.
    pub fn eavesdroppers(&self, j: usize) -> impl Iterator<Item = (usize, &[f64])> {
        self.h_e[j]
            .iter()
            .enumerate()
            .filter(move |(k, _)| *k != j)
            .map(|(k, v)| (k, v.as_slice()))
    }
}

/// Draws one blockage indicator per user (unblocked with probability
/// `unblocked_prob`) and assembles the legitimate and wiretap vectors.
pub fn sample_slot_channel<R: Rng + ?Sized>(
    gains: &LinkGains,
    capable: &[Vec<usize>],
    unblocked_prob: f64,
    slot: usize,
    rng: &mut R,
) -> ChannelState {
    let n = gains.num_users();
    let unblocked: Vec<bool> = (0..n).map(|_| rng.gen_bool(unblocked_prob)).collect();
    let h = (0..n)
        .map(|j| capable[j].iter().map(|&i| gains.realized(i, j, unblocked[j])).collect())
        .collect();
    let h_e = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    if k == j {
                        Vec::new()
                    } else {
                        capable[j].iter().map(|&i| gains.realized(i, k, unblocked[k])).collect()
                    }
                })
                .collect()
        })
        .collect();
    ChannelState {
        slot,
        unblocked,
        h,
        h_e,
    }
}
