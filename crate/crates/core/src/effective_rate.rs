//! Effective secrecy rate: −(1/θ)·ln E[e^{−θR}], batch and running forms.
//!
//! Rates are in nats per channel use. Everything goes through a shifted
//! log-mean-exp so that large θR neither underflows nor loses the small-θ
//! limit to cancellation.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// Delay-QoS requirement of one user, stored in nats per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosProfile {
    /// QoS exponent θ in 1/nat.
    pub theta: f64,
    /// Effective bandwidth B_e in nats per channel use.
    pub effective_bandwidth: f64,
}

impl QosProfile {
    pub fn new(theta: f64, effective_bandwidth: f64) -> Self {
        Self {
            theta,
            effective_bandwidth,
        }
    }

    /// From θ per bit and B_e in bits/s. The product θ·R is unit-free, so θ
    /// scales by B/ln 2 whenever rates scale by ln 2/B.
    pub fn from_bits(theta_per_bit: f64, be_bps: f64, bandwidth: f64) -> Self {
        Self {
            theta: theta_per_bit * bandwidth / LN_2,
            effective_bandwidth: be_bps * LN_2 / bandwidth,
        }
    }

    pub fn theta_bits(&self, bandwidth: f64) -> f64 {
        self.theta * LN_2 / bandwidth
    }

    pub fn effective_bandwidth_bps(&self, bandwidth: f64) -> f64 {
        self.effective_bandwidth * bandwidth / LN_2
    }

    /// e^{−θ·B_e}, the per-slot service of the virtual queue.
    pub fn service(&self) -> f64 {
        (-self.theta * self.effective_bandwidth).exp()
    }
}

/// ESR of an empirical rate distribution.
pub fn esr_expectation(rates: &[f64], theta: f64) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::Domain("ESR of an empty sample set".into()));
    }
    if theta.is_nan() || theta <= 0.0 {
        return Err(Error::Domain(format!("QoS exponent must be > 0, got {theta}")));
    }
    let mut acc = EsrAccumulator::new(theta);
    for &r in rates {
        acc.push(r);
    }
    Ok(acc.value().expect("nonempty"))
}

/// ESR over the first `t` slots of a history.
pub fn esr_running(history: &[f64], t: usize, theta: f64) -> Result<f64> {
    if t == 0 || t > history.len() {
        return Err(Error::Domain(format!(
            "running ESR needs 1 <= t <= {}, got {t}",
            history.len()
        )));
    }
    esr_expectation(&history[..t], theta)
}

/// Incremental ESR. Tracks x = −θR as (shift m, Σ expm1(x − m), count) so
/// ln mean e^x = m + ln_1p(mean expm1(x − m)) stays exact for small spreads.
#[derive(Debug, Clone, PartialEq)]
pub struct EsrAccumulator {
    theta: f64,
    shift: f64,
    excess: f64,
    count: u64,
}

impl EsrAccumulator {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            shift: f64::NEG_INFINITY,
            excess: 0.0,
            count: 0,
        }
    }

    pub fn push(&mut self, rate: f64) {
        let x = -self.theta * rate;
        if self.count == 0 {
            self.shift = x;
        } else if x > self.shift {
            let d = self.shift - x;
            self.excess = d.exp() * self.excess + self.count as f64 * d.exp_m1();
            self.shift = x;
        } else {
            self.excess += (x - self.shift).exp_m1();
        }
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Current ESR, or `None` before the first sample.
    pub fn value(&self) -> Option<f64> {
        if self.count == 0 {
            return None;
        }
        let ln_mean = self.shift + (self.excess / self.count as f64).ln_1p();
        Some(-ln_mean / self.theta)
    }
}
