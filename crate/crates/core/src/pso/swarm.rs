use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_iters: usize,
    /// Iterations without a gbest move before the perturbation step fires.
    pub stall_threshold: usize,
    pub c1: f64,
    pub c2: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 40,
            max_iters: 100,
            stall_threshold: 5,
            c1: 1.0,
            c2: 1.0,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::config("pso.swarm_size", "must be >= 2"));
        }
        if self.max_iters < 1 {
            return Err(Error::config("pso.max_iters", "must be >= 1"));
        }
        if self.stall_threshold < 1 {
            return Err(Error::config("pso.stall_threshold", "must be >= 1"));
        }
        if !(self.c1.is_finite() && self.c1 >= 0.0 && self.c2.is_finite() && self.c2 >= 0.0) {
            return Err(Error::config("pso.c1", "learning factors must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Box constraints plus the coordinates the stall perturbation may touch.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Coordinates eligible for the stall perturbation.
    pub perturbable: std::ops::Range<usize>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Dimension(format!(
                "box bounds of length {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
            return Err(Error::Domain("box has a lower bound above its upper bound".into()));
        }
        let n = lower.len();
        Ok(Self {
            lower,
            upper,
            perturbable: 0..n,
        })
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    /// Largest squared distance between two points of the box.
    pub fn diameter_sq(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| (u - l).powi(2)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOutcome {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    /// gbest fitness after initialization, then after every iteration.
    pub trace: Vec<f64>,
    /// Iterations at which the stall perturbation fired.
    pub perturbations: Vec<usize>,
    pub perturbations_accepted: usize,
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() || f == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        f
    }
}

/// Minimizes `fitness` over the box with the modified swarm. `seeds` are
/// injected as the first particles (clamped); the rest start uniformly.
pub fn pso_minimize<F>(fitness: F, bounds: &SearchBox, config: &PsoConfig, seeds: &[Vec<f64>]) -> PsoOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = rng::stream(config.seed, &[rng::TAG_SWARM]);
    minimize_with(&fitness, bounds, config, seeds, &mut rng)
}

fn minimize_with<F>(
    fitness: &F,
    bounds: &SearchBox,
    config: &PsoConfig,
    seeds: &[Vec<f64>],
    rng: &mut SimRng,
) -> PsoOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let dims = bounds.dims();
    let eval = |x: &[f64]| sanitize(fitness(x));
    let count = config.swarm_size.max(seeds.len()).max(1);

    let mut pos: Vec<Vec<f64>> = Vec::with_capacity(count);
    for s in seeds.iter().take(count) {
        let mut x = s.clone();
        x.resize(dims, 0.0);
        bounds.clamp(&mut x);
        pos.push(x);
    }
    while pos.len() < count {
        pos.push(
            (0..dims)
                .map(|d| lerp(bounds.lower[d], bounds.upper[d], rng.gen::<f64>()))
                .collect(),
        );
    }
    let mut vel: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            (0..dims)
                .map(|d| {
                    let w = bounds.upper[d] - bounds.lower[d];
                    lerp(-w, w, rng.gen::<f64>())
                })
                .collect()
        })
        .collect();
    let mut fit: Vec<f64> = pos.iter().map(|x| eval(x)).collect();
    let mut pbest = pos.clone();
    let mut pbest_fit = fit.clone();
    let mut g = 0;
    for i in 1..count {
        if fit[i] < fit[g] {
            g = i;
        }
    }
    let mut gbest = pos[g].clone();
    let mut gbest_fit = fit[g];

    let mut trace = Vec::with_capacity(config.max_iters + 1);
    trace.push(gbest_fit);
    let mut perturbations = Vec::new();
    let mut accepted = 0;
    let mut stall = 0;

    for n in 1..=config.max_iters {
        let inertia = 0.9 - 0.5 * n as f64 / config.max_iters as f64;
        let before = gbest.clone();
        for p in 0..count {
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            for d in 0..dims {
                vel[p][d] = inertia * vel[p][d]
                    + config.c1 * r1 * (pbest[p][d] - pos[p][d])
                    + config.c2 * r2 * (gbest[d] - pos[p][d]);
                pos[p][d] += vel[p][d];
                if pos[p][d] < bounds.lower[d] || pos[p][d] > bounds.upper[d] {
                    vel[p][d] = 0.0;
                }
            }
            bounds.clamp(&mut pos[p]);
            fit[p] = eval(&pos[p]);
            if fit[p] < pbest_fit[p] {
                pbest_fit[p] = fit[p];
                pbest[p].clone_from(&pos[p]);
                if fit[p] < gbest_fit {
                    gbest_fit = fit[p];
                    gbest.clone_from(&pos[p]);
                }
            }
        }
        if gbest == before {
            stall += 1;
        } else {
            stall = 0;
        }
        if stall == config.stall_threshold && !bounds.perturbable.is_empty() {
            stall = 0;
            perturbations.push(n);
            let at_top: Vec<usize> = bounds
                .perturbable
                .clone()
                .filter(|&m| (gbest[m] - bounds.upper[m]).abs() < 1e-6)
                .collect();
            let m = if at_top.is_empty() {
                rng.gen_range(bounds.perturbable.clone())
            } else {
                at_top[rng.gen_range(0..at_top.len())]
            };
            let r3: f64 = rng.gen();
            let mut trial = gbest.clone();
            trial[m] *= 1.0 - 0.1 * r3;
            bounds.clamp(&mut trial);
            let f = eval(&trial);
            if f < gbest_fit {
                gbest_fit = f;
                gbest = trial;
                accepted += 1;
            }
        }
        trace.push(gbest_fit);
    }

    PsoOutcome {
        best: gbest,
        best_fitness: gbest_fit,
        trace,
        perturbations,
        perturbations_accepted: accepted,
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}
