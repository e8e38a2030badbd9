//! Interference graph, greedy independent-set scheduling and the MR/PF
//! baseline weights.

use std::f64::consts::{E, PI};
use std::io::Write;

use nalgebra::DMatrix;

use crate::channel::{nlos_sum_at, receiving_plane};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Knobs for capability thresholds and the baseline schedulers.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerConfig {
    /// Fraction of receiving-plane positions that must reach the threshold.
    pub epsilon_quantile: f64,
    /// Receiving-plane grid pitch in m.
    pub grid_spacing: f64,
    /// Receiving-plane height in m.
    pub plane_height: f64,
    /// When set, the threshold is computed with this acceptance half-angle
    /// (radians) instead of the scenario's own.
    pub epsilon_fov_half: Option<f64>,
    /// PF averaging window in slots.
    pub pf_window: f64,
    /// Signal power fraction used by the artificial-noise baselines.
    pub an_alpha: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            epsilon_quantile: 0.9,
            grid_spacing: 0.5,
            plane_height: 0.5,
            epsilon_fov_half: None,
            pf_window: 100.0,
            an_alpha: 0.7,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_quantile > 0.0 && self.epsilon_quantile <= 1.0) {
            return Err(Error::config("scheduler.epsilon_quantile", "must be in (0, 1]"));
        }
        if !(self.grid_spacing > 0.0 && self.grid_spacing.is_finite()) {
            return Err(Error::config("scheduler.grid_spacing_m", "must be > 0"));
        }
        if !(self.plane_height >= 0.0 && self.plane_height.is_finite()) {
            return Err(Error::config("scheduler.plane_height_m", "must be >= 0"));
        }
        if !(self.pf_window >= 1.0 && self.pf_window.is_finite()) {
            return Err(Error::config("scheduler.pf_window", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.an_alpha) {
            return Err(Error::config("scheduler.an_alpha", "must be in [0, 1]"));
        }
        if let Some(f) = self.epsilon_fov_half {
            if !(f > 0.0 && f < PI) {
                return Err(Error::config("scheduler.epsilon_fov_deg", "must be in (0, 180)"));
            }
        }
        Ok(())
    }
}

/// Users as vertices; an edge joins two users whose capable-AP sets overlap.
/// Users with no capable AP are inactive and never scheduled.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceGraph {
    adjacency: Vec<Vec<usize>>,
    active: Vec<bool>,
}

impl InterferenceGraph {
    pub fn from_capable_sets(capable: &[Vec<usize>]) -> Self {
        let n = capable.len();
        let mut adjacency = vec![Vec::new(); n];
        for j in 0..n {
            for k in (j + 1)..n {
                if capable[j].iter().any(|i| capable[k].contains(i)) {
                    adjacency[j].push(k);
                    adjacency[k].push(j);
                }
            }
        }
        for a in adjacency.iter_mut() {
            a.sort_unstable();
        }
        Self {
            adjacency,
            active: capable.iter().map(|c| !c.is_empty()).collect(),
        }
    }

    /// Graph with the given undirected edges; every vertex active.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b && !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for a in adjacency.iter_mut() {
            a.sort_unstable();
        }
        Self {
            adjacency,
            active: vec![true; n],
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn is_active(&self, v: usize) -> bool {
        self.active[v]
    }

    /// Edges as (low, high) pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nb) in self.adjacency.iter().enumerate() {
            out.extend(nb.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    /// First pair of adjacent users that are both marked.
    pub fn first_conflict(&self, scheduled: &[bool]) -> Option<(usize, usize)> {
        self.edges().into_iter().find(|&(a, b)| scheduled[a] && scheduled[b])
    }

    pub fn is_independent(&self, set: &[bool]) -> bool {
        self.first_conflict(set).is_none()
    }

    /// Independent, and no active vertex outside the set can be added.
    pub fn is_maximal_independent(&self, set: &[bool]) -> bool {
        self.is_independent(set)
            && (0..self.num_vertices()).all(|v| set[v] || !self.active[v] || self.adjacency[v].iter().any(|&u| set[u]))
    }

    /// Plain-text edge list: a header comment, then one `j k` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# vertices {}", self.num_vertices())?;
        let inactive: Vec<String> = (0..self.num_vertices())
            .filter(|&v| !self.active[v])
            .map(|v| v.to_string())
            .collect();
        if !inactive.is_empty() {
            writeln!(out, "# inactive {}", inactive.join(" "))?;
        }
        for (a, b) in self.edges() {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }
}

/// Scheduled users and the AP-to-user association matrix Π (K_a × K_u).
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub scheduled: Vec<bool>,
    pub association: DMatrix<u8>,
}

impl Schedule {
    pub fn new(scheduled: Vec<bool>, capable: &[Vec<usize>], num_aps: usize) -> Self {
        let mut association = DMatrix::zeros(num_aps, scheduled.len());
        for (j, &on) in scheduled.iter().enumerate() {
            if on {
                for &i in &capable[j] {
                    association[(i, j)] = 1;
                }
            }
        }
        Self { scheduled, association }
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.scheduled.len()).filter(|&j| self.scheduled[j]).collect()
    }

    /// Σ_i π_ij · Σ_i π_ik = 0 on every edge.
    pub fn is_feasible(&self, graph: &InterferenceGraph) -> bool {
        let load: Vec<u32> = (0..self.association.ncols())
            .map(|j| self.association.column(j).iter().map(|&x| x as u32).sum())
            .collect();
        graph.edges().into_iter().all(|(a, b)| load[a] * load[b] == 0)
    }
}

fn greedy_is(graph: &InterferenceGraph, weights: &[f64], pick_max: bool) -> Vec<bool> {
    let n = graph.num_vertices();
    let mut alive: Vec<bool> = (0..n).map(|v| graph.is_active(v)).collect();
    let mut chosen = vec![false; n];
    loop {
        let mut best: Option<usize> = None;
        for v in (0..n).filter(|&v| alive[v]) {
            best = match best {
                None => Some(v),
                Some(b) => {
                    let better = if pick_max {
                        weights[v].total_cmp(&weights[b]).is_gt()
                    } else {
                        weights[v].total_cmp(&weights[b]).is_lt()
                    };
                    Some(if better { v } else { b })
                }
            };
        }
        let Some(v) = best else { break };
        chosen[v] = true;
        alive[v] = false;
        for &u in graph.neighbors(v) {
            alive[u] = false;
        }
    }
    chosen
}

/// Repeatedly takes the lightest remaining vertex and deletes its
/// neighbourhood. Ties go to the lowest index.
pub fn greedy_min_weight_is(graph: &InterferenceGraph, weights: &[f64]) -> Vec<bool> {
    greedy_is(graph, weights, false)
}

/// Heaviest-first counterpart used by the rate-driven baselines.
pub fn greedy_max_weight_is(graph: &InterferenceGraph, weights: &[f64]) -> Vec<bool> {
    greedy_is(graph, weights, true)
}

/// Largest v such that at least a fraction `quantile` of `sums` is ≥ v.
pub fn epsilon_from_sums(sums: &[f64], quantile: f64) -> f64 {
    if sums.is_empty() {
        return 0.0;
    }
    let mut sorted = sums.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let need = ((quantile * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[n - need]
}

/// Capability threshold from the reflected-gain map over the receiving plane.
pub fn epsilon_threshold(scenario: &Scenario, spacing: f64, plane_height: f64, quantile: f64) -> Result<f64> {
    let plane = receiving_plane(&scenario.room, plane_height, spacing);
    let sums = nlos_sum_at(
        &plane,
        &scenario.ap_positions,
        &scenario.phys,
        &scenario.room,
        &scenario.walls,
    )?;
    Ok(epsilon_from_sums(&sums, quantile))
}

/// Full-power single-user rate ½ln(1 + 4‖h‖²A²/(2πeσ²)).
pub fn mr_rate(h: &[f64], amplitude: f64, noise_var: f64) -> f64 {
    let hh: f64 = h.iter().map(|x| x * x).sum();
    0.5 * (4.0 * hh * amplitude * amplitude / (2.0 * PI * E * noise_var)).ln_1p()
}

/// Moving-average throughput with window `window`.
pub fn pf_priority_update(avg: f64, rate: f64, scheduled: bool, window: f64) -> f64 {
    let keep = 1.0 - 1.0 / window;
    if scheduled {
        keep * avg + rate / window
    } else {
        keep * avg
    }
}

/// PF weight r/C; a user with no throughput history gets r / tiny.
pub fn pf_weight(rate: f64, avg: f64) -> f64 {
    rate / avg.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn edge_rule() {
        let disjoint = InterferenceGraph::from_capable_sets(&[vec![0], vec![1], vec![2]]);
        assert!(disjoint.edges().is_empty());
        let shared = InterferenceGraph::from_capable_sets(&[vec![0, 1], vec![1], vec![1, 2]]);
        assert_eq!(shared.edges(), vec![(0, 1), (0, 2), (1, 2)]);
        let path = InterferenceGraph::from_capable_sets(&[vec![0, 1], vec![1, 2], vec![2, 3]]);
        assert_eq!(path.edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn greedy_hand_traces() {
        let empty = InterferenceGraph::from_edges(4, &[]);
        assert_eq!(greedy_min_weight_is(&empty, &[3.0, 1.0, 2.0, 0.0]), vec![true; 4]);
        let tri = InterferenceGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(greedy_min_weight_is(&tri, &[1.0, 2.0, 3.0]), vec![true, false, false]);
        assert_eq!(greedy_max_weight_is(&tri, &[1.0, 2.0, 3.0]), vec![false, false, true]);
        let path = InterferenceGraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(greedy_min_weight_is(&path, &[5.0, 1.0, 5.0]), vec![false, true, false]);
        assert_eq!(greedy_min_weight_is(&path, &[1.0, 5.0, 1.0]), vec![true, false, true]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let tri = InterferenceGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(greedy_min_weight_is(&tri, &[2.0, 2.0, 2.0]), vec![true, false, false]);
        assert_eq!(greedy_max_weight_is(&tri, &[2.0, 2.0, 2.0]), vec![true, false, false]);
    }

    #[test]
    fn isolated_users_never_scheduled() {
        let g = InterferenceGraph::from_capable_sets(&[vec![0], vec![], vec![1]]);
        assert!(!g.is_active(1));
        assert_eq!(greedy_min_weight_is(&g, &[0.0, -10.0, 0.0]), vec![true, false, true]);
        assert!(g.is_maximal_independent(&[true, false, true]));
    }

    #[test]
    fn association_matrix_and_feasibility() {
        let capable = vec![vec![0, 1], vec![1, 2], vec![3]];
        let g = InterferenceGraph::from_capable_sets(&capable);
        let s = Schedule::new(vec![true, false, true], &capable, 4);
        assert_eq!(s.association[(0, 0)], 1);
        assert_eq!(s.association[(1, 0)], 1);
        assert_eq!(s.association[(1, 1)], 0);
        assert_eq!(s.association[(3, 2)], 1);
        assert!(s.is_feasible(&g));
        assert!(!Schedule::new(vec![true, true, false], &capable, 4).is_feasible(&g));
        assert_eq!(s.members(), vec![0, 2]);
    }

    #[test]
    fn edge_list_export() {
        let g = InterferenceGraph::from_capable_sets(&[vec![0, 1], vec![1], vec![]]);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# vertices 3\n# inactive 2\n0 1\n");
    }

    #[test]
    fn epsilon_quantile_rule() {
        assert_eq!(epsilon_from_sums(&[0.7; 50], 0.9), 0.7);
        let sums: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        // 90 of 100 values are >= 11
        assert_eq!(epsilon_from_sums(&sums, 0.9), 11.0);
        let reversed: Vec<f64> = sums.iter().rev().copied().collect();
        assert_eq!(epsilon_from_sums(&reversed, 0.9), 11.0);
    }

    #[test]
    fn epsilon_vanishes_without_reflection() {
        let mut s = crate::scenario::test_scenario(4, 2, 1);
        s.phys.reflectance = 0.0;
        assert_eq!(epsilon_threshold(&s, 0.5, 0.5, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn mr_rate_values() {
        assert_eq!(mr_rate(&[0.0, 0.0], 0.14, 2e-15), 0.0);
        let sigma2 = 2e-15;
        let a = 0.14;
        let h = (2.0 * PI * E * sigma2 / (4.0 * a * a)).sqrt();
        assert!((mr_rate(&[h], a, sigma2) - 0.5 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn pf_recursion() {
        assert_eq!(pf_priority_update(0.3, 0.8, true, 1.0), 0.8);
        let mut c = 1.0;
        for t in 1..=10 {
            c = pf_priority_update(c, 5.0, false, 4.0);
            assert!((c - 0.75f64.powi(t)).abs() < 1e-12);
        }
        let mut c = 0.0;
        for t in 0..200 {
            c = pf_priority_update(c, 1.0, t % 2 == 0, 2.0);
        }
        // after the scheduled step of each pair the average sits at 2/3
        let after_sched = pf_priority_update(c, 1.0, true, 2.0);
        assert!((after_sched - 2.0 / 3.0).abs() < 1e-12);
        // starvation: weight grows as the average decays
        let (mut avg, mut last) = (1.0, 0.0);
        for _ in 0..20 {
            avg = pf_priority_update(avg, 1.0, false, 100.0);
            let w = pf_weight(1.0, avg);
            assert!(w > last);
            last = w;
        }
    }

    fn random_graph(r: &mut impl Rng) -> (InterferenceGraph, Vec<f64>) {
        let n = r.gen_range(1..=20);
        let p: f64 = r.gen();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if r.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        let w = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
        (InterferenceGraph::from_edges(n, &edges), w)
    }

    #[test]
    fn greedy_always_maximal_independent() {
        let mut r = rng::stream(2024, &[]);
        for _ in 0..2000 {
            let (g, w) = random_graph(&mut r);
            assert!(g.is_maximal_independent(&greedy_min_weight_is(&g, &w)));
            assert!(g.is_maximal_independent(&greedy_max_weight_is(&g, &w)));
        }
    }

    proptest! {
        #[test]
        fn graph_is_symmetric_and_loop_free(
            capable in prop::collection::vec(prop::collection::btree_set(0usize..8, 0..4), 1..10)
        ) {
            let sets: Vec<Vec<usize>> = capable.into_iter().map(|s| s.into_iter().collect()).collect();
            let g = InterferenceGraph::from_capable_sets(&sets);
            for a in 0..sets.len() {
                prop_assert!(!g.has_edge(a, a));
                for b in 0..sets.len() {
                    let overlap = a != b && sets[a].iter().any(|i| sets[b].contains(i));
                    prop_assert_eq!(g.has_edge(a, b), overlap);
                    prop_assert_eq!(g.has_edge(a, b), g.has_edge(b, a));
                }
            }
            let w = vec![0.0; sets.len()];
            let sched = greedy_min_weight_is(&g, &w);
            prop_assert!(Schedule::new(sched, &sets, 8).is_feasible(&g));
        }
    }
}
