//! Artificial-noise secure cells: nullspace jamming directions and the
//! entropy-power lower bound on the secrecy rate under amplitude constraints.
//!
//! All rates are nats per channel use.

use std::f64::consts::{E, LN_2, PI};

use nalgebra::DMatrix;

use crate::channel::ChannelState;
use crate::error::{Error, Result};

/// Power split, precoder and jamming basis of one secure cell for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SecureCellParams {
    /// Fraction of the peak amplitude carrying data; the rest jams.
    pub alpha: f64,
    /// Precoder over the cell's APs, ‖w‖∞ ≤ 1.
    pub w: Vec<f64>,
    /// n × (n − 1) jamming basis, `None` for a single-AP cell.
    pub basis: Option<DMatrix<f64>>,
}

impl SecureCellParams {
    /// Builds the cell for legitimate channel `h`. Single-AP cells carry no
    /// jamming, so α is forced to 1 there.
    pub fn new(alpha: f64, w: Vec<f64>, h: &[f64]) -> Result<Self> {
        if w.len() != h.len() {
            return Err(Error::Dimension(format!(
                "precoder has {} entries for a {}-AP cell",
                w.len(),
                h.len()
            )));
        }
        if h.len() == 1 {
            return Ok(Self {
                alpha: 1.0,
                w,
                basis: None,
            });
        }
        Ok(Self {
            alpha,
            w,
            basis: Some(nullspace_basis(h)?),
        })
    }
}

/// Orthogonal complement of span{h}, columns rescaled to unit L1 norm and
/// signed so the first nonzero entry is positive.
pub fn nullspace_basis(h: &[f64]) -> Result<DMatrix<f64>> {
    let n = h.len();
    if n < 2 {
        return Err(Error::Dimension(format!(
            "nullspace of a {n}-dimensional channel has no jamming directions"
        )));
    }
    let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Domain("nullspace of a zero channel".into()));
    }
    // Householder reflector taking h/‖h‖ onto ∓e1; its other columns span h⊥.
    let mut v: Vec<f64> = h.iter().map(|x| x / norm).collect();
    v[0] += if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut basis = DMatrix::zeros(n, n - 1);
    for c in 1..n {
        let mut col: Vec<f64> = (0..n).map(|r| (r == c) as u8 as f64 - 2.0 * v[r] * v[c] / vv).collect();
        let l1: f64 = col.iter().map(|x| x.abs()).sum();
        let lead = col.iter().copied().find(|x| x.abs() > 1e-15 * l1).unwrap_or(1.0);
        let scale = lead.signum() / l1;
        for x in col.iter_mut() {
            *x *= scale;
        }
        for (r, x) in col.into_iter().enumerate() {
            basis[(r, c - 1)] = x;
        }
    }
    Ok(basis)
}

/// Jamming energy seen through wiretap channel `h_e`: Σ_l (Γ̂_lᵀ h_e)².
pub fn jamming_energy(basis: Option<&DMatrix<f64>>, h_e: &[f64]) -> f64 {
    match basis {
        None => 0.0,
        Some(b) => (0..b.ncols())
            .map(|l| {
                let p: f64 = (0..b.nrows()).map(|r| b[(r, l)] * h_e[r]).sum();
                p * p
            })
            .sum(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Useful and per-direction jamming amplitudes for a cell of `n` APs.
fn split_amplitudes(alpha: f64, n: usize, amplitude: f64) -> (f64, f64) {
    if n <= 1 {
        (amplitude, 0.0)
    } else {
        (alpha * amplitude, (1.0 - alpha) * amplitude / (n - 1) as f64)
    }
}

/// Lower bound on the secrecy rate of a cell against one eavesdropper,
/// clamped at zero.
pub fn pairwise_secrecy_rate_lb(
    params: &SecureCellParams,
    h: &[f64],
    h_e: &[f64],
    amplitude: f64,
    noise_var: f64,
) -> f64 {
    let n = h.len();
    let alpha = if n <= 1 { 1.0 } else { params.alpha };
    let (a_u, a_a) = split_amplitudes(alpha, n, amplitude);
    let a = dot(&params.w, h);
    let b = dot(&params.w, h_e);
    let jam = jamming_energy(params.basis.as_ref(), h_e) * a_a * a_a;
    let c = 2.0 * PI * E * noise_var;
    let legit = 0.5 * (4.0 * a * a * a_u * a_u + c).ln() - 0.5 * c.ln();
    let eve =
        -0.5 * ((2.0 * PI * E / 3.0) * (b * b * a_u * a_u + jam + 3.0 * noise_var)).ln() + 0.5 * (4.0 * jam + c).ln();
    (legit + eve).max(0.0)
}

/// Secrecy rate of user `j`: zero when unscheduled, else the worst case over
/// every other user acting as eavesdropper.
pub fn achievable_secrecy_rate(
    j: usize,
    params: &SecureCellParams,
    scheduled: bool,
    channel: &ChannelState,
    amplitude: f64,
    noise_var: f64,
) -> f64 {
    if !scheduled || channel.h[j].is_empty() {
        return 0.0;
    }
    let h = &channel.h[j];
    let mut best: Option<f64> = None;
    for (_, h_e) in channel.eavesdroppers(j) {
        let r = pairwise_secrecy_rate_lb(params, h, h_e, amplitude, noise_var);
        best = Some(best.map_or(r, |b: f64| b.min(r)));
    }
    best.unwrap_or_else(|| pairwise_secrecy_rate_lb(params, h, &vec![0.0; h.len()], amplitude, noise_var))
}

pub fn rate_to_bits_per_second(r_nats: f64, bandwidth: f64) -> f64 {
    r_nats * bandwidth / LN_2
}

/// Maximum-ratio precoder under the sup-norm constraint: h/‖h‖∞.
pub fn mrt_precoder(h: &[f64]) -> Vec<f64> {
    let m = h.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if m > 0.0 {
        h.iter().map(|x| x / m).collect()
    } else {
        vec![1.0; h.len()]
    }
}

/// Per-slot evaluator of one cell's secrecy rate as a function of (α, w).
///
/// The jamming basis depends only on h, so the jamming energies toward each
/// eavesdropper are computed once; each evaluation then costs one log.
#[derive(Debug, Clone)]
pub struct CellEvaluator {
    h: Vec<f64>,
    eves: Vec<Vec<f64>>,
    jam_energy: Vec<f64>,
    basis: Option<DMatrix<f64>>,
    amplitude: f64,
    noise_var: f64,
}

impl CellEvaluator {
    pub fn new(j: usize, channel: &ChannelState, amplitude: f64, noise_var: f64) -> Self {
        let h = channel.h[j].clone();
        let basis = if h.len() >= 2 { nullspace_basis(&h).ok() } else { None };
        let eves: Vec<Vec<f64>> = channel.eavesdroppers(j).map(|(_, v)| v.to_vec()).collect();
        let jam_energy = eves.iter().map(|e| jamming_energy(basis.as_ref(), e)).collect();
        Self {
            h,
            eves,
            jam_energy,
            basis,
            amplitude,
            noise_var,
        }
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn channel(&self) -> &[f64] {
        &self.h
    }

    pub fn basis(&self) -> Option<&DMatrix<f64>> {
        self.basis.as_ref()
    }

    pub fn params(&self, alpha: f64, w: Vec<f64>) -> SecureCellParams {
        SecureCellParams {
            alpha: if self.h.len() <= 1 { 1.0 } else { alpha },
            w,
            basis: self.basis.clone(),
        }
    }

    /// Secrecy rate against the worst eavesdropper at (α, w).
    pub fn rate(&self, alpha: f64, w: &[f64]) -> f64 {
        let n = self.h.len();
        if n == 0 {
            return 0.0;
        }
        let alpha = if n <= 1 || self.basis.is_none() { 1.0 } else { alpha };
        let (a_u, a_a) = split_amplitudes(alpha, n, self.amplitude);
        let c = 2.0 * PI * E * self.noise_var;
        let a = dot(w, &self.h);
        let legit = 0.5 * ((4.0 * a * a * a_u * a_u + c) / c).ln();
        if self.eves.is_empty() {
            return legit.max(0.0);
        }
        let mut worst = f64::INFINITY;
        for (e, s) in self.eves.iter().zip(&self.jam_energy) {
            let b = dot(w, e);
            let jam = s * a_a * a_a;
            let ratio = (4.0 * jam + c) / ((2.0 * PI * E / 3.0) * (b * b * a_u * a_u + jam + 3.0 * self.noise_var));
            worst = worst.min(ratio);
        }
        (legit + 0.5 * worst.ln()).max(0.0)
    }
}
