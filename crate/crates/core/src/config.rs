//! TOML experiment files. Every section and key is optional; omitted values
//! take the reference-scenario defaults. Angles are in degrees, rates in
//! bits/s, QoS exponents per bit.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::channel::{PhysParams, WallGrid};
use crate::effective_rate::QosProfile;
use crate::error::{Error, Result};
use crate::pso::PsoConfig;
use crate::rng;
use crate::scenario::{grid_ap_positions, qos_by_index, random_user_positions, Room, Scenario};
use crate::scheduler::SchedulerConfig;
use crate::sim::{Algorithm, SimSettings};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub room: RoomSection,
    pub layout: LayoutSection,
    pub phys: PhysSection,
    pub channel: ChannelSection,
    pub walls: WallSection,
    pub qos: QosSection,
    pub scheduler: SchedulerSection,
    pub pso: PsoSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoomSection {
    pub length_m: f64,
    pub width_m: f64,
    pub height_m: f64,
}

impl Default for RoomSection {
    fn default() -> Self {
        Self {
            length_m: 16.0,
            width_m: 16.0,
            height_m: 2.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutSection {
    /// APs per side of the ceiling grid (ignored when `ap_positions` is set).
    pub aps_per_side: usize,
    /// Number of randomly placed users (ignored when `user_positions` is set).
    pub users: usize,
    pub receiver_height_m: f64,
    pub seed: u64,
    pub ap_positions: Option<Vec<[f64; 3]>>,
    pub user_positions: Option<Vec<[f64; 3]>>,
}

impl Default for LayoutSection {
    fn default() -> Self {
        Self {
            aps_per_side: 8,
            users: 10,
            receiver_height_m: 0.5,
            seed: 1,
            ap_positions: None,
            user_positions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysSection {
    pub bandwidth_hz: f64,
    pub leds_per_ap: u32,
    pub dc_current_a: f64,
    pub modulation_index: f64,
    pub conversion_efficiency: f64,
    pub responsivity: f64,
    pub amplifier_gain: f64,
    pub pd_area_m2: f64,
    pub refractive_index: f64,
    pub semi_angle_deg: f64,
    /// Receiver acceptance half-angle.
    pub fov_deg: f64,
    pub reflectance: f64,
    pub noise_psd: f64,
}

impl Default for PhysSection {
    fn default() -> Self {
        let p = PhysParams::default();
        Self {
            bandwidth_hz: p.bandwidth,
            leds_per_ap: p.leds_per_ap,
            dc_current_a: p.dc_current,
            modulation_index: p.modulation_index,
            conversion_efficiency: p.conversion_efficiency,
            responsivity: p.responsivity,
            amplifier_gain: p.amplifier_gain,
            pd_area_m2: p.pd_area,
            refractive_index: p.refractive_index,
            semi_angle_deg: p.semi_angle.to_degrees(),
            fov_deg: p.fov_half.to_degrees(),
            reflectance: p.reflectance,
            noise_psd: p.noise_psd,
        }
    }
}

impl PhysSection {
    pub fn to_params(&self) -> PhysParams {
        PhysParams {
            bandwidth: self.bandwidth_hz,
            leds_per_ap: self.leds_per_ap,
            dc_current: self.dc_current_a,
            modulation_index: self.modulation_index,
            conversion_efficiency: self.conversion_efficiency,
            responsivity: self.responsivity,
            amplifier_gain: self.amplifier_gain,
            pd_area: self.pd_area_m2,
            refractive_index: self.refractive_index,
            semi_angle: self.semi_angle_deg.to_radians(),
            fov_half: self.fov_deg.to_radians(),
            reflectance: self.reflectance,
            noise_psd: self.noise_psd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    /// Probability that a user's LoS paths are clear in a slot.
    pub unblocked_prob: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self { unblocked_prob: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WallSection {
    pub patch_width_m: f64,
    pub patch_height_m: f64,
}

impl Default for WallSection {
    fn default() -> Self {
        let w = WallGrid::default();
        Self {
            patch_width_m: w.patch_width,
            patch_height_m: w.patch_height,
        }
    }
}

/// Per-user QoS. Without explicit lists, θ is spread log-uniformly and B_e
/// linearly over user index between the min and max values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QosSection {
    pub theta_min: f64,
    pub theta_max: f64,
    pub be_min_bps: f64,
    pub be_max_bps: f64,
    pub theta: Option<Vec<f64>>,
    pub be_bps: Option<Vec<f64>>,
}

impl Default for QosSection {
    fn default() -> Self {
        Self {
            theta_min: 1e-10,
            theta_max: 1e-7,
            be_min_bps: 1e5,
            be_max_bps: 1e6,
            theta: None,
            be_bps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerSection {
    pub epsilon_quantile: f64,
    pub grid_spacing_m: f64,
    pub plane_height_m: f64,
    /// Acceptance half-angle used only for the capability threshold.
    pub epsilon_fov_deg: Option<f64>,
    pub pf_window: f64,
    pub an_alpha: f64,
}

impl Default for SchedulerSection {
    fn default() -> Self {
        let s = SchedulerConfig::default();
        Self {
            epsilon_quantile: s.epsilon_quantile,
            grid_spacing_m: s.grid_spacing,
            plane_height_m: s.plane_height,
            epsilon_fov_deg: s.epsilon_fov_half.map(f64::to_degrees),
            pf_window: s.pf_window,
            an_alpha: s.an_alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoSection {
    pub swarm_size: usize,
    pub max_iters: usize,
    pub stall_threshold: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for PsoSection {
    fn default() -> Self {
        let p = PsoConfig::default();
        Self {
            swarm_size: p.swarm_size,
            max_iters: p.max_iters,
            stall_threshold: p.stall_threshold,
            c1: p.c1,
            c2: p.c2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub algorithm: String,
    pub slots: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// `axis=v1,v2,...`
    pub sweep: Option<String>,
    pub reps: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            algorithm: "dpp".into(),
            slots: 150,
            seed: 1,
            out: PathBuf::from("out"),
            sweep: None,
            reps: 1,
        }
    }
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// QoS exponent per bit, applied to every user.
    Theta,
    /// Receiver acceptance half-angle in degrees.
    Fov,
    UserCount,
    /// Probability of an unblocked slot.
    Beta,
    /// Effective bandwidth in bits/s, applied to every user.
    Be,
    /// Signal power fraction of the artificial-noise baselines.
    Alpha,
}

impl SweepAxis {
    pub fn tag(self) -> &'static str {
        match self {
            SweepAxis::Theta => "theta",
            SweepAxis::Fov => "fov",
            SweepAxis::UserCount => "user_count",
            SweepAxis::Beta => "beta",
            SweepAxis::Be => "be",
            SweepAxis::Alpha => "alpha",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "theta" => SweepAxis::Theta,
            "fov" => SweepAxis::Fov,
            "user_count" | "users" => SweepAxis::UserCount,
            "beta" => SweepAxis::Beta,
            "be" | "b_e" => SweepAxis::Be,
            "alpha" | "alpha_fixed" => SweepAxis::Alpha,
            other => {
                return Err(Error::config(
                    "run.sweep",
                    format!("unknown axis `{other}` (expected theta, fov, user_count, beta, be or alpha)"),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (axis, values) = s
            .split_once('=')
            .ok_or_else(|| Error::config("run.sweep", format!("expected AXIS=v1,v2,... got `{s}`")))?;
        let axis: SweepAxis = axis.parse()?;
        let values = values
            .split(',')
            .filter(|v| !v.trim().is_empty())
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config("run.sweep", format!("`{v}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::config("run.sweep", "no values given"));
        }
        Ok(Self { axis, values })
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|source| Error::ConfigParse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        self.run.algorithm.parse()
    }

    pub fn sweep(&self) -> Result<Option<SweepSpec>> {
        self.run.sweep.as_deref().map(str::parse).transpose()
    }

    pub fn num_users(&self) -> usize {
        self.layout.user_positions.as_ref().map_or(self.layout.users, Vec::len)
    }

    /// Copy with one sweep coordinate applied.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match axis {
            SweepAxis::Theta => {
                c.qos.theta = Some(vec![value; c.num_users()]);
            }
            SweepAxis::Be => {
                c.qos.be_bps = Some(vec![value; c.num_users()]);
            }
            SweepAxis::Fov => c.phys.fov_deg = value,
            SweepAxis::Beta => c.channel.unblocked_prob = value,
            SweepAxis::Alpha => c.scheduler.an_alpha = value,
            SweepAxis::UserCount => {
                if c.layout.user_positions.is_some() {
                    return Err(Error::config(
                        "run.sweep",
                        "user_count cannot be swept with explicit layout.user_positions",
                    ));
                }
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::config(
                        "run.sweep",
                        format!("user count `{value}` is not a whole number"),
                    ));
                }
                c.layout.users = value as usize;
                // explicit per-user lists no longer match the count
                if c.qos.theta.as_ref().is_some_and(|v| v.len() != c.layout.users) {
                    let t = c.qos.theta.as_ref().unwrap()[0];
                    c.qos.theta = Some(vec![t; c.layout.users]);
                }
                if c.qos.be_bps.as_ref().is_some_and(|v| v.len() != c.layout.users) {
                    let b = c.qos.be_bps.as_ref().unwrap()[0];
                    c.qos.be_bps = Some(vec![b; c.layout.users]);
                }
            }
        }
        Ok(c)
    }

    /// Scenario for replication `rep`; random layouts draw from a
    /// rep-specific stream.
    pub fn scenario(&self, rep: u64) -> Result<Scenario> {
        let room = Room::new(self.room.length_m, self.room.width_m, self.room.height_m);
        let phys = self.phys.to_params();
        let to_points = |v: &Vec<[f64; 3]>| v.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect::<Vec<_>>();
        let ap_positions = match &self.layout.ap_positions {
            Some(v) => to_points(v),
            None => {
                if self.layout.aps_per_side == 0 {
                    return Err(Error::config("layout.aps_per_side", "must be >= 1"));
                }
                grid_ap_positions(&room, self.layout.aps_per_side)
            }
        };
        let user_positions = match &self.layout.user_positions {
            Some(v) => to_points(v),
            None => random_user_positions(
                &room,
                self.layout.users,
                self.layout.receiver_height_m,
                rng::derive_seed(self.layout.seed, &[rep]),
            ),
        };
        let k = user_positions.len();
        let qos = self.qos_profiles(k, phys.bandwidth)?;
        let scenario = Scenario {
            room,
            ap_positions,
            user_positions,
            phys,
            qos,
            walls: WallGrid {
                patch_width: self.walls.patch_width_m,
                patch_height: self.walls.patch_height_m,
            },
            unblocked_prob: self.channel.unblocked_prob,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn qos_profiles(&self, k: usize, bandwidth: f64) -> Result<Vec<QosProfile>> {
        let q = &self.qos;
        for (key, v) in [("qos.theta_min", q.theta_min), ("qos.theta_max", q.theta_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be finite and > 0"));
            }
        }
        for (key, v) in [("qos.be_min_bps", q.be_min_bps), ("qos.be_max_bps", q.be_max_bps)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be finite and >= 0"));
            }
        }
        let mut profiles = qos_by_index(k, (q.theta_min, q.theta_max), (q.be_min_bps, q.be_max_bps), bandwidth);
        if let Some(theta) = &q.theta {
            if theta.len() != k {
                return Err(Error::config(
                    "qos.theta",
                    format!("{} values for {k} users", theta.len()),
                ));
            }
            for (p, &t) in profiles.iter_mut().zip(theta) {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::config("qos.theta", "every value must be > 0"));
                }
                p.theta = QosProfile::from_bits(t, 0.0, bandwidth).theta;
            }
        }
        if let Some(be) = &q.be_bps {
            if be.len() != k {
                return Err(Error::config(
                    "qos.be_bps",
                    format!("{} values for {k} users", be.len()),
                ));
            }
            for (p, &b) in profiles.iter_mut().zip(be) {
                if !(b >= 0.0 && b.is_finite()) {
                    return Err(Error::config("qos.be_bps", "every value must be >= 0"));
                }
                p.effective_bandwidth = QosProfile::from_bits(1.0, b, bandwidth).effective_bandwidth;
            }
        }
        Ok(profiles)
    }

    pub fn scheduler_config(&self) -> SchedulerConfig {
        let s = &self.scheduler;
        SchedulerConfig {
            epsilon_quantile: s.epsilon_quantile,
            grid_spacing: s.grid_spacing_m,
            plane_height: s.plane_height_m,
            epsilon_fov_half: s.epsilon_fov_deg.map(f64::to_radians),
            pf_window: s.pf_window,
            an_alpha: s.an_alpha,
        }
    }

    pub fn pso_config(&self) -> PsoConfig {
        PsoConfig {
            swarm_size: self.pso.swarm_size,
            max_iters: self.pso.max_iters,
            stall_threshold: self.pso.stall_threshold,
            c1: self.pso.c1,
            c2: self.pso.c2,
            seed: self.run.seed,
        }
    }

    pub fn settings(&self, rep: u64) -> Result<SimSettings> {
        let s = SimSettings {
            algorithm: self.algorithm()?,
            slots: self.run.slots,
            seed: self.run.seed,
            rep,
            pso: self.pso_config(),
            scheduler: self.scheduler_config(),
        };
        s.validate()?;
        if self.run.reps < 1 {
            return Err(Error::config("run.reps", "must be >= 1"));
        }
        Ok(s)
    }

    /// Checks everything a run needs without simulating.
    pub fn validate(&self) -> Result<()> {
        self.settings(0)?;
        let sweep = self.sweep()?;
        match sweep {
            Some(spec) => {
                for &v in &spec.values {
                    self.with_axis(spec.axis, v)?.scenario(0)?;
                }
            }
            None => {
                self.scenario(0)?;
            }
        }
        Ok(())
    }
}
