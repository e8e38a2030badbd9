//! Slot-by-slot simulation: sample channels, tune cells, schedule, realize
//! secrecy rates, update queues, record.

use std::fmt;
use std::str::FromStr;

use crate::channel::{capable_ap_sets, sample_slot_channel, ChannelState, LinkGains};
use crate::effective_rate::EsrAccumulator;
use crate::error::{Error, Result};
use crate::lyapunov::{dpp_user_term, stability_check, VirtualQueues};
use crate::pso::{solve_intra_cell, IntraCell, PsoConfig};
use crate::rng;
use crate::scenario::Scenario;
use crate::scheduler::{
    epsilon_threshold, greedy_max_weight_is, greedy_min_weight_is, mr_rate, pf_priority_update, pf_weight,
    InterferenceGraph, Schedule, SchedulerConfig,
};
use crate::secrecy::{rate_to_bits_per_second, CellEvaluator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Swarm-tuned cells, min-weight drift-plus-penalty scheduling.
    Dpp,
    /// Max-rate scheduling, no jamming.
    Mr,
    /// Proportional-fair scheduling, no jamming.
    Pf,
    /// Max-rate scheduling, fixed-split jamming.
    MrAn,
    /// Proportional-fair scheduling, fixed-split jamming.
    PfAn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Dpp,
        Algorithm::Mr,
        Algorithm::Pf,
        Algorithm::MrAn,
        Algorithm::PfAn,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Dpp => "dpp",
            Algorithm::Mr => "mr",
            Algorithm::Pf => "pf",
            Algorithm::MrAn => "mr-an",
            Algorithm::PfAn => "pf-an",
        }
    }

    fn uses_pf(self) -> bool {
        matches!(self, Algorithm::Pf | Algorithm::PfAn)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::config(
                    "run.algorithm",
                    format!("unknown algorithm `{s}` (expected dpp, mr, pf, mr-an or pf-an)"),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub algorithm: Algorithm,
    pub slots: usize,
    pub seed: u64,
    /// Replication index; selects an independent channel stream.
    pub rep: u64,
    pub pso: PsoConfig,
    pub scheduler: SchedulerConfig,
}

impl SimSettings {
    pub fn new(algorithm: Algorithm, slots: usize, seed: u64) -> Self {
        Self {
            algorithm,
            slots,
            seed,
            rep: 0,
            pso: PsoConfig::default(),
            scheduler: SchedulerConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots < 1 {
            return Err(Error::config("run.slots", "must be >= 1"));
        }
        self.pso.validate()?;
        self.scheduler.validate()
    }
}

/// Static per-scenario quantities: gains, threshold, AP sets, graph.
#[derive(Debug, Clone)]
pub struct Network {
    pub scenario: Scenario,
    pub gains: LinkGains,
    pub epsilon: f64,
    pub capable: Vec<Vec<usize>>,
    pub graph: InterferenceGraph,
}

impl Network {
    pub fn build(scenario: Scenario, rules: &SchedulerConfig) -> Result<Self> {
        scenario.validate()?;
        let gains = LinkGains::compute(&scenario)?;
        let epsilon = match rules.epsilon_fov_half {
            Some(fov) => {
                let mut reference = scenario.clone();
                reference.phys.fov_half = fov;
                epsilon_threshold(
                    &reference,
                    rules.grid_spacing,
                    rules.plane_height,
                    rules.epsilon_quantile,
                )?
            }
            None => epsilon_threshold(
                &scenario,
                rules.grid_spacing,
                rules.plane_height,
                rules.epsilon_quantile,
            )?,
        };
        let capable = capable_ap_sets(&gains, epsilon);
        for (j, c) in capable.iter().enumerate() {
            if c.is_empty() {
                log::warn!("user {j} has no capable AP above the threshold and will never be scheduled");
            }
        }
        let graph = InterferenceGraph::from_capable_sets(&capable);
        Ok(Self {
            scenario,
            gains,
            epsilon,
            capable,
            graph,
        })
    }

    pub fn num_users(&self) -> usize {
        self.scenario.num_users()
    }
}

/// Per-slot log. Per-user vectors are indexed by user.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub t: usize,
    pub scheduled: Vec<bool>,
    /// Power split of the user's candidate cell; `None` without capable APs.
    pub alpha: Vec<Option<f64>>,
    /// Realized secrecy rate, nats per channel use (0 when unscheduled).
    pub rate_nats: Vec<f64>,
    /// Drift-plus-penalty term of the candidate cell before scheduling.
    pub dpp_weight: Vec<f64>,
    /// Backlog after this slot's update.
    pub backlog: Vec<f64>,
    /// ESR over slots 0..=t in bits/s.
    pub esr_running_bps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub rep: u64,
    pub horizon: usize,
    pub num_users: usize,
    pub epsilon: f64,
    pub edges: usize,
    /// ESR over the horizon, bits/s.
    pub esr_bps: Vec<f64>,
    /// Time-averaged secrecy rate, bits/s.
    pub mean_rate_bps: Vec<f64>,
    pub schedule_fraction: Vec<f64>,
    /// F_j(T)/T.
    pub normalized_backlog: Vec<f64>,
}

impl RunSummary {
    pub fn mean_esr_bps(&self) -> f64 {
        mean(&self.esr_bps)
    }

    pub fn mean_rate_bps(&self) -> f64 {
        mean(&self.mean_rate_bps)
    }

    pub fn mean_schedule_fraction(&self) -> f64 {
        mean(&self.schedule_fraction)
    }

    pub fn max_normalized_backlog(&self) -> f64 {
        self.normalized_backlog.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_normalized_backlog(&self) -> f64 {
        mean(&self.normalized_backlog)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<SlotRecord>,
    pub summary: RunSummary,
}

impl RunOutput {
    /// `history[t][j]` = F_j after slot t.
    pub fn backlog_history(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.backlog.clone()).collect()
    }

    pub fn stability(&self) -> Result<crate::lyapunov::StabilityReport> {
        stability_check(&self.backlog_history())
    }
}

/// The channel states a run with these settings sees, one per slot.
pub fn channel_sequence<'a>(network: &'a Network, settings: &SimSettings) -> impl Iterator<Item = ChannelState> + 'a {
    let mut rng = rng::stream(settings.seed, &[rng::TAG_CHANNEL, settings.rep]);
    (0..).map(move |t| {
        sample_slot_channel(
            &network.gains,
            &network.capable,
            network.scenario.unblocked_prob,
            t,
            &mut rng,
        )
    })
}

pub fn run(scenario: Scenario, settings: &SimSettings) -> Result<RunOutput> {
    let network = Network::build(scenario, &settings.scheduler)?;
    run_network(&network, settings)
}

pub fn run_network(network: &Network, settings: &SimSettings) -> Result<RunOutput> {
    settings.validate()?;
    let k = network.num_users();
    if k < 2 {
        return Err(Error::config(
            "layout.users",
            "need >= 2 users: every secrecy rate is taken against the other users",
        ));
    }
    let scenario = &network.scenario;
    let amplitude = scenario.phys.ap_amplitude();
    let noise_var = scenario.phys.noise_variance();
    let bandwidth = scenario.phys.bandwidth;
    let qos = &scenario.qos;
    let algo = settings.algorithm;
    let fixed_alpha = match algo {
        Algorithm::MrAn | Algorithm::PfAn => settings.scheduler.an_alpha,
        _ => 1.0,
    };

    let mut queues = VirtualQueues::new(k);
    let mut esr: Vec<EsrAccumulator> = qos.iter().map(|q| EsrAccumulator::new(q.theta)).collect();
    let mut pf_avg: Vec<f64> = vec![0.0; k];
    let mut rate_sum = vec![0.0; k];
    let mut sched_count = vec![0usize; k];
    let mut records = Vec::with_capacity(settings.slots);

    for (t, channel) in channel_sequence(network, settings).take(settings.slots).enumerate() {
        let mut candidate_rate = vec![0.0; k];
        let mut alpha = vec![None; k];
        let mut dpp_weight = vec![0.0; k];
        let mut weights = vec![0.0; k];
        let mut mr = vec![0.0; k];

        for j in 0..k {
            let f = queues.get(j);
            let cell = CellEvaluator::new(j, &channel, amplitude, noise_var);
            if algo == Algorithm::Dpp {
                let pso = PsoConfig {
                    seed: rng::derive_seed(settings.seed, &[rng::TAG_SWARM, settings.rep, t as u64, j as u64]),
                    ..settings.pso.clone()
                };
                let solved = solve_intra_cell(&cell, f, &qos[j], &pso);
                if let IntraCell::Solved(s) = &solved {
                    candidate_rate[j] = s.rate;
                    alpha[j] = Some(s.alpha);
                }
                weights[j] = solved.value();
                dpp_weight[j] = solved.value();
            } else {
                if cell.dim() > 0 {
                    let ones = vec![1.0; cell.dim()];
                    let a = if cell.dim() == 1 { 1.0 } else { fixed_alpha };
                    candidate_rate[j] = cell.rate(a, &ones);
                    alpha[j] = Some(a);
                }
                mr[j] = mr_rate(&channel.h[j], amplitude, noise_var);
                if t == 0 {
                    pf_avg[j] = mr[j];
                }
                weights[j] = if algo.uses_pf() {
                    pf_weight(mr[j], pf_avg[j])
                } else {
                    mr[j]
                };
                dpp_weight[j] = dpp_user_term(f, candidate_rate[j], &qos[j]);
            }
        }

        let chosen = if algo == Algorithm::Dpp {
            greedy_min_weight_is(&network.graph, &weights)
        } else {
            greedy_max_weight_is(&network.graph, &weights)
        };
        let schedule = Schedule::new(chosen, &network.capable, network.gains.num_aps());
        if !schedule.is_feasible(&network.graph) {
            let (a, b) = network.graph.first_conflict(&schedule.scheduled).unwrap_or((0, 0));
            return Err(Error::InfeasibleSchedule(a, b));
        }

        let rates: Vec<f64> = (0..k)
            .map(|j| if schedule.scheduled[j] { candidate_rate[j] } else { 0.0 })
            .collect();
        queues.update(&rates, qos);
        if algo.uses_pf() {
            for j in 0..k {
                pf_avg[j] = pf_priority_update(pf_avg[j], mr[j], schedule.scheduled[j], settings.scheduler.pf_window);
            }
        }
        for j in 0..k {
            esr[j].push(rates[j]);
            rate_sum[j] += rates[j];
            sched_count[j] += schedule.scheduled[j] as usize;
        }
        records.push(SlotRecord {
            t,
            scheduled: schedule.scheduled,
            alpha,
            rate_nats: rates,
            dpp_weight,
            backlog: queues.backlog().to_vec(),
            esr_running_bps: esr
                .iter()
                .map(|e| rate_to_bits_per_second(e.value().unwrap_or(0.0), bandwidth))
                .collect(),
        });
    }

    let horizon = settings.slots as f64;
    let summary = RunSummary {
        algorithm: algo,
        seed: settings.seed,
        rep: settings.rep,
        horizon: settings.slots,
        num_users: k,
        epsilon: network.epsilon,
        edges: network.graph.edges().len(),
        esr_bps: records.last().map(|r| r.esr_running_bps.clone()).unwrap_or_default(),
        mean_rate_bps: rate_sum
            .iter()
            .map(|s| rate_to_bits_per_second(s / horizon, bandwidth))
            .collect(),
        schedule_fraction: sched_count.iter().map(|&c| c as f64 / horizon).collect(),
        normalized_backlog: queues.backlog().iter().map(|f| f / horizon).collect(),
    };
    Ok(RunOutput { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective_rate::QosProfile;
    use crate::scenario::test_scenario;
    use nalgebra::Point3;

    fn quick(algo: Algorithm, slots: usize) -> SimSettings {
        SimSettings {
            pso: PsoConfig {
                swarm_size: 10,
                max_iters: 15,
                ..PsoConfig::default()
            },
            ..SimSettings::new(algo, slots, 7)
        }
    }

    #[test]
    fn algorithm_tags_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.tag().parse::<Algorithm>().unwrap(), a);
        }
        assert!(matches!("greedy".parse::<Algorithm>(), Err(Error::Config { .. })));
    }

    #[test]
    fn single_user_is_rejected() {
        let s = test_scenario(4, 1, 1);
        match run(s, &quick(Algorithm::Dpp, 1)) {
            Err(Error::Config { key, reason }) => {
                assert_eq!(key, "layout.users");
                assert!(reason.contains(">= 2 users"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fixed_seed_reproduces_records() {
        for algo in Algorithm::ALL {
            let a = run(test_scenario(9, 4, 3), &quick(algo, 12)).unwrap();
            let b = run(test_scenario(9, 4, 3), &quick(algo, 12)).unwrap();
            assert_eq!(a.records, b.records);
            assert_eq!(a.summary, b.summary);
        }
    }

    #[test]
    fn records_respect_invariants() {
        for algo in Algorithm::ALL {
            let out = run(test_scenario(9, 5, 8), &quick(algo, 25)).unwrap();
            let net = Network::build(test_scenario(9, 5, 8), &SchedulerConfig::default()).unwrap();
            for r in &out.records {
                assert!(net.graph.is_independent(&r.scheduled));
                for j in 0..5 {
                    if !r.scheduled[j] {
                        assert_eq!(r.rate_nats[j], 0.0);
                    }
                    assert!(r.backlog[j] >= 0.0);
                }
            }
            let s = &out.summary;
            assert!(s.schedule_fraction.iter().all(|f| (0.0..=1.0).contains(f)));
            for j in 0..5 {
                assert!(s.esr_bps[j] <= s.mean_rate_bps[j] * (1.0 + 1e-9) + 1e-9);
            }
        }
    }

    fn two_far_users(be_bps: f64) -> Scenario {
        let mut s = test_scenario(16, 2, 1);
        s.user_positions = vec![Point3::new(1.0, 1.0, 0.5), Point3::new(7.0, 7.0, 0.5)];
        s.qos = vec![QosProfile::from_bits(1e-8, be_bps, s.phys.bandwidth); 2];
        s.unblocked_prob = 1.0;
        s
    }

    #[test]
    fn disjoint_users_both_scheduled_at_first_slot() {
        let out = run(two_far_users(1e5), &quick(Algorithm::Dpp, 1)).unwrap();
        assert_eq!(out.summary.edges, 0);
        assert_eq!(out.records[0].scheduled, vec![true, true]);
    }

    #[test]
    fn unattainable_demand_grows_linearly() {
        let scenario = two_far_users(1e12);
        let qos = scenario.qos.clone();
        let out = run(scenario, &quick(Algorithm::Dpp, 200)).unwrap();
        let rep = out.stability().unwrap();
        for (j, q) in qos.iter().enumerate() {
            // Service is e^{-1e4} = 0, so every slot adds e^{-θR}.
            let per_slot = out
                .records
                .iter()
                .map(|r| (-q.theta * r.rate_nats[j]).exp())
                .sum::<f64>()
                / 200.0;
            assert!(per_slot > 0.05);
            assert!(rep.late_slope[j] > 0.5 * per_slot);
            assert!(rep.normalized_backlog[j] > 0.1);
        }
    }
}
