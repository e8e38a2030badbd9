use crate::effective_rate::QosProfile;
use crate::lyapunov::dpp_user_term;
use crate::secrecy::{mrt_precoder, CellEvaluator};

use super::swarm::{pso_minimize, PsoConfig, SearchBox};

/// Best (α, w) found for one candidate cell in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct IntraCellSolution {
    pub alpha: f64,
    pub w: Vec<f64>,
    /// Secrecy rate at (α, w) in nats per channel use.
    pub rate: f64,
    /// Drift-plus-penalty term at that rate.
    pub value: f64,
}

/// Outcome for a user: a cell solution, or no capable AP at all.
#[derive(Debug, Clone, PartialEq)]
pub enum IntraCell {
    Solved(IntraCellSolution),
    /// Empty AP set; the user keeps the constant unscheduled term.
    Unschedulable {
        value: f64,
    },
}

impl IntraCell {
    pub fn value(&self) -> f64 {
        match self {
            IntraCell::Solved(s) => s.value,
            IntraCell::Unschedulable { value } => *value,
        }
    }

    pub fn solution(&self) -> Option<&IntraCellSolution> {
        match self {
            IntraCell::Solved(s) => Some(s),
            IntraCell::Unschedulable { .. } => None,
        }
    }
}

/// Minimizes the user's drift-plus-penalty term over the precoder in
/// [−1, 1]^n and the power split in [0, 1]. Single-AP cells search the scalar
/// precoder only, at full signal power.
pub fn solve_intra_cell(cell: &CellEvaluator, backlog: f64, qos: &QosProfile, config: &PsoConfig) -> IntraCell {
    let n = cell.dim();
    if n == 0 {
        return IntraCell::Unschedulable {
            value: dpp_user_term(backlog, 0.0, qos),
        };
    }
    let ones = vec![1.0; n];
    let mrt = mrt_precoder(cell.channel());

    let (best, _) = if n == 1 {
        let bounds = SearchBox::new(vec![-1.0], vec![1.0]).expect("valid box");
        let fitness = |x: &[f64]| dpp_user_term(backlog, cell.rate(1.0, x), qos);
        let out = pso_minimize(fitness, &bounds, config, &[vec![1.0]]);
        (vec![out.best[0], 1.0], out.best_fitness)
    } else {
        let mut lower = vec![-1.0; n + 1];
        let mut upper = vec![1.0; n + 1];
        lower[n] = 0.0;
        upper[n] = 1.0;
        let mut bounds = SearchBox::new(lower, upper).expect("valid box");
        bounds.perturbable = 0..n;
        let fitness = |x: &[f64]| dpp_user_term(backlog, cell.rate(x[n], &x[..n]), qos);
        let with_alpha = |w: &[f64], a: f64| {
            let mut v = w.to_vec();
            v.push(a);
            v
        };
        let seeds = [with_alpha(&ones, 0.7), with_alpha(&mrt, 0.7), with_alpha(&ones, 1.0)];
        let out = pso_minimize(fitness, &bounds, config, &seeds);
        (out.best, out.best_fitness)
    };

    let w = best[..n].to_vec();
    let alpha = best[n];
    let rate = cell.rate(alpha, &w);
    IntraCell::Solved(IntraCellSolution {
        alpha: if n == 1 { 1.0 } else { alpha },
        w,
        rate,
        value: dpp_user_term(backlog, rate, qos),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelState;

    const A: f64 = 0.14;
    const SIGMA2: f64 = 2e-15;

    fn cell(h: Vec<f64>, eves: Vec<Vec<f64>>) -> CellEvaluator {
        let k = eves.len() + 1;
        let mut hs = vec![h.clone()];
        hs.extend((1..k).map(|_| vec![1e-6; h.len()]));
        let mut h_e = vec![vec![Vec::new(); k]; k];
        for (e, v) in eves.into_iter().enumerate() {
            h_e[0][e + 1] = v;
        }
        let ch = ChannelState {
            slot: 0,
            unblocked: vec![true; k],
            h: hs,
            h_e,
        };
        CellEvaluator::new(0, &ch, A, SIGMA2)
    }

    #[test]
    fn no_eavesdropper_signal_drives_full_power() {
        let c = cell(vec![2e-6, 1e-6, 5e-7], vec![vec![1e-15; 3], vec![0.0; 3]]);
        let q = QosProfile::new(1.0, 0.2);
        let sol = solve_intra_cell(&c, 0.0, &q, &PsoConfig::default());
        let s = sol.solution().unwrap();
        assert!(s.alpha > 0.95, "alpha = {}", s.alpha);
        assert!(s.w.iter().all(|x| x.abs() > 0.95), "w = {:?}", s.w);
    }

    #[test]
    fn empty_backlog_value_is_negated_rate() {
        let c = cell(vec![2e-6, 1e-6], vec![vec![8e-7, 1.5e-6]]);
        let q = QosProfile::new(1.0, 0.2);
        let s = solve_intra_cell(&c, 0.0, &q, &PsoConfig::default());
        let s = s.solution().unwrap();
        assert_eq!(s.value, -s.rate);
        assert!(s.rate > 0.0);
    }

    #[test]
    fn never_worse_than_the_fixed_operating_point() {
        let q = QosProfile::new(3.0, 0.4);
        for (i, f) in [0.0, 0.5, 4.0].into_iter().enumerate() {
            let c = cell(
                vec![2e-6, 1e-6, 3e-7],
                vec![vec![1e-6, 2e-6, 1e-6], vec![3e-7, 2e-7, 1e-6]],
            );
            let cfg = PsoConfig {
                seed: i as u64,
                ..PsoConfig::default()
            };
            let s = solve_intra_cell(&c, f, &q, &cfg);
            let fixed = dpp_user_term(f, c.rate(0.7, &[1.0; 3]), &q);
            assert!(s.value() <= fixed);
        }
    }

    #[test]
    fn unschedulable_user_keeps_constant_term() {
        let c = cell(vec![], vec![vec![]]);
        let q = QosProfile::new(2.0, 0.3);
        let s = solve_intra_cell(&c, 1.5, &q, &PsoConfig::default());
        assert_eq!(
            s,
            IntraCell::Unschedulable {
                value: 1.5 * (1.0 - (-0.6f64).exp())
            }
        );
    }

    #[test]
    fn single_ap_cell_uses_full_power() {
        let c = cell(vec![2e-6], vec![vec![5e-7]]);
        let q = QosProfile::new(1.0, 0.2);
        let s = solve_intra_cell(&c, 0.0, &q, &PsoConfig::default());
        let s = s.solution().unwrap();
        assert_eq!(s.alpha, 1.0);
        assert!((s.w[0].abs() - 1.0).abs() < 1e-6);
    }
}
