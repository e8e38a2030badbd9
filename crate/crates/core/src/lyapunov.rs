//! Virtual queues for the long-term ESR constraints and the per-slot
//! drift-plus-penalty objective.

use crate::effective_rate::QosProfile;
use crate::error::{Error, Result};
use crate::scheduler::InterferenceGraph;

/// F(t+1) = max(F(t) + e^{−θR} − e^{−θB_e}, 0).
pub fn queue_update(backlog: f64, rate: f64, qos: &QosProfile) -> f64 {
    (backlog + (-qos.theta * rate).exp() - qos.service()).max(0.0)
}

/// One user's share of the per-slot objective: −R + F·(e^{−θR} − e^{−θB_e}).
pub fn dpp_user_term(backlog: f64, rate: f64, qos: &QosProfile) -> f64 {
    -rate + backlog * ((-qos.theta * rate).exp() - qos.service())
}

/// Per-user backlogs, all starting empty.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueues {
    backlog: Vec<f64>,
    slot: usize,
}

impl VirtualQueues {
    pub fn new(users: usize) -> Self {
        Self {
            backlog: vec![0.0; users],
            slot: 0,
        }
    }

    pub fn backlog(&self) -> &[f64] {
        &self.backlog
    }

    pub fn get(&self, j: usize) -> f64 {
        self.backlog[j]
    }

    /// Slots applied so far.
    pub fn slot(&self) -> usize {
        self.slot
    }

    /// Applies one slot of realized rates to every queue.
    pub fn update(&mut self, rates: &[f64], qos: &[QosProfile]) {
        for ((f, &r), q) in self.backlog.iter_mut().zip(rates).zip(qos) {
            *f = queue_update(*f, r, q);
        }
        self.slot += 1;
    }
}

/// Sum of every user's term for one slot. Fails when two scheduled users
/// are adjacent in the interference graph.
pub fn dpp_total(
    scheduled: &[bool],
    rates: &[f64],
    backlogs: &[f64],
    qos: &[QosProfile],
    graph: &InterferenceGraph,
) -> Result<f64> {
    if let Some((j, k)) = graph.first_conflict(scheduled) {
        return Err(Error::InfeasibleSchedule(j, k));
    }
    Ok((0..scheduled.len())
        .map(|j| {
            let r = if scheduled[j] { rates[j] } else { 0.0 };
            dpp_user_term(backlogs[j], r, &qos[j])
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// F_j(T)/T.
    pub normalized_backlog: Vec<f64>,
    /// Least-squares slope of F_j(t) over the second half of the horizon.
    pub late_slope: Vec<f64>,
}

impl StabilityReport {
    pub fn max_normalized(&self) -> f64 {
        self.normalized_backlog.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_normalized(&self) -> f64 {
        let n = self.normalized_backlog.len().max(1);
        self.normalized_backlog.iter().sum::<f64>() / n as f64
    }
}

/// `history[t][j]` is F_j after slot t (so F(T) is the last row).
pub fn stability_check(history: &[Vec<f64>]) -> Result<StabilityReport> {
    let horizon = history.len();
    if horizon < 100 {
        return Err(Error::Domain(format!(
            "stability check needs at least 100 slots, got {horizon}"
        )));
    }
    let users = history[0].len();
    let last = &history[horizon - 1];
    let normalized_backlog = last.iter().map(|f| f / horizon as f64).collect();
    let start = horizon / 2;
    let n = (horizon - start) as f64;
    let t_mean = (start..horizon).map(|t| t as f64).sum::<f64>() / n;
    let sxx: f64 = (start..horizon).map(|t| (t as f64 - t_mean).powi(2)).sum();
    let late_slope = (0..users)
        .map(|j| {
            let f_mean = (start..horizon).map(|t| history[t][j]).sum::<f64>() / n;
            (start..horizon)
                .map(|t| (t as f64 - t_mean) * (history[t][j] - f_mean))
                .sum::<f64>()
                / sxx
        })
        .collect();
    Ok(StabilityReport {
        normalized_backlog,
        late_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qos_with(theta: f64, service: f64) -> QosProfile {
        // e^{−θB_e} = service
        QosProfile::new(theta, -service.ln() / theta)
    }

    #[test]
    fn queue_arithmetic() {
        let q = qos_with(1.0, 0.1);
        let r = -(0.3f64).ln();
        assert!((queue_update(0.5, r, &q) - 0.7).abs() < 1e-12);
        let q = QosProfile::new(2.0, 0.4);
        assert_eq!(queue_update(0.0, 0.5, &q), 0.0);
        let mut f = 0.0;
        for t in 1..=10 {
            f = queue_update(f, 0.0, &q);
            assert!((f - t as f64 * (1.0 - (-0.8f64).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn dpp_term_identities() {
        let q = QosProfile::new(1.5, 0.7);
        assert_eq!(dpp_user_term(0.0, 0.9, &q), -0.9);
        let f = 3.2;
        assert!((dpp_user_term(f, 0.0, &q) - f * (1.0 - (-1.05f64).exp())).abs() < 1e-12);
        let q = QosProfile::new(1.0, 0.5);
        let expected = -1.0 + 2.0 * ((-1.0f64).exp() - (-0.5f64).exp());
        assert!((dpp_user_term(2.0, 1.0, &q) - expected).abs() < 1e-12);
    }

    #[test]
    fn dpp_total_matches_brute_force_on_toy_graph() {
        // path 0-1-2 plus isolated 3
        let graph = InterferenceGraph::from_edges(4, &[(0, 1), (1, 2)]);
        let qos: Vec<QosProfile> = (0..4).map(|j| QosProfile::new(0.5 + j as f64, 0.2)).collect();
        let rates = [0.9, 1.4, 0.3, 0.6];
        let backlogs = [0.0, 2.0, 0.5, 1.0];
        for mask in 0u32..16 {
            let sched: Vec<bool> = (0..4).map(|j| mask >> j & 1 == 1).collect();
            let feasible = !(sched[0] && sched[1]) && !(sched[1] && sched[2]);
            let res = dpp_total(&sched, &rates, &backlogs, &qos, &graph);
            if !feasible {
                assert!(matches!(res, Err(Error::InfeasibleSchedule(_, _))));
                continue;
            }
            let mut expected = 0.0;
            for j in 0..4 {
                let r = if sched[j] { rates[j] } else { 0.0 };
                let arrival = (-qos[j].theta * r).exp();
                expected += (arrival.ln() / qos[j].theta)
                    + backlogs[j] * (arrival - (-qos[j].theta * qos[j].effective_bandwidth).exp());
            }
            assert!((res.unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn nobody_scheduled_total() {
        let graph = InterferenceGraph::from_edges(2, &[(0, 1)]);
        let qos = [QosProfile::new(1.0, 0.3), QosProfile::new(2.0, 0.1)];
        let f = [1.0, 4.0];
        let expected: f64 = (0..2).map(|j| f[j] * (1.0 - qos[j].service())).sum();
        let got = dpp_total(&[false, false], &[1.0, 1.0], &f, &qos, &graph).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn stability_reports() {
        assert!(stability_check(&vec![vec![0.0]; 99]).is_err());
        let zero = stability_check(&vec![vec![0.0, 0.0]; 200]).unwrap();
        assert_eq!(zero.max_normalized(), 0.0);
        let lin: Vec<Vec<f64>> = (1..=1000).map(|t| vec![0.3 * t as f64]).collect();
        let rep = stability_check(&lin).unwrap();
        assert!((rep.normalized_backlog[0] - 0.3).abs() < 1e-12);
        assert!((rep.late_slope[0] - 0.3).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn queue_stays_nonnegative_and_telescopes(
            rates in prop::collection::vec(0.0f64..3.0, 1..200),
            theta in 0.01f64..5.0,
            be in 0.0f64..3.0,
        ) {
            let q = QosProfile::new(theta, be);
            let mut f = 0.0;
            let mut drift = 0.0;
            for (t, &r) in rates.iter().enumerate() {
                f = queue_update(f, r, &q);
                prop_assert!(f >= 0.0);
                drift += (-theta * r).exp() - q.service();
                let n = (t + 1) as f64;
                prop_assert!(drift / n <= f / n + 1e-12);
            }
        }

        #[test]
        fn dpp_term_strictly_decreasing_in_rate(
            f in 0.0f64..10.0, r in 0.0f64..5.0, dr in 1e-6f64..1.0, theta in 0.01f64..5.0,
        ) {
            let q = QosProfile::new(theta, 0.5);
            prop_assert!(dpp_user_term(f, r + dr, &q) < dpp_user_term(f, r, &q));
        }
    }
}
