//! Particle swarm search over simplex-parameterized instantiations.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::PmcChecker;
use crate::error::{Error, Result};
use crate::models::instantiation::Instantiation;
use crate::models::model::Pmc;
use crate::models::polynomial::Var;
use crate::models::rational::{to_f64, Rational};
use crate::models::spec::{Specification, Value};
use crate::par::Execution;

/// Fitness assigned to divergent rewards when they are undesired.
pub const DIVERGENCE_PENALTY: f64 = 1e9;

const VELOCITY_CLAMP: f64 = 4.0;
const GRID_BITS: u32 = 40;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub swarm_size: usize,
    pub max_iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Every group coordinate, including the completion, is at least this.
    pub epsilon: Rational,
    pub seed: u64,
    pub time_budget: Option<Duration>,
    /// Stop as soon as a satisfying instantiation is found.
    pub stop_on_satisfied: bool,
    /// Re-check the best instantiation in exact arithmetic.
    pub exact_verify: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            swarm_size: 40,
            max_iterations: 500,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            epsilon: Rational::new(1.into(), 10_000.into()),
            seed: 0,
            time_budget: None,
            stop_on_satisfied: true,
            exact_verify: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::InvalidArgument("swarm size must be at least 2".into()));
        }
        let half = Rational::new(1.into(), 2.into());
        if self.epsilon <= Rational::from_integer(0.into()) || self.epsilon >= half {
            return Err(Error::InvalidArgument("epsilon must lie in (0, 1/2)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsoResult {
    pub instantiation: Instantiation,
    /// Float value of the best instantiation.
    pub value_f64: f64,
    /// Exact value of the best instantiation, when verified.
    pub exact: Option<Value>,
    pub satisfied: bool,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

/// Maps unconstrained particle positions to ε-preserving instantiations.
///
/// A group of `m` parameters owns `m + 1` coordinates; their softmax `s` is
/// rounded down to a dyadic grid and parameter `i` becomes
/// `ε + (1 - (m+1)ε)·s_i`, so the implicit completion is at least `ε` too.
#[derive(Clone, Debug)]
pub struct SimplexEncoding {
    groups: Vec<Vec<Var>>,
    num_params: usize,
    epsilon: Rational,
}

impl SimplexEncoding {
    pub fn new(d: &Pmc, epsilon: Rational) -> Result<Self> {
        let groups = d.all_groups();
        for g in &groups {
            if Rational::from_integer((g.len() + 1).into()) * &epsilon >= Rational::one() {
                return Err(Error::InvalidArgument(format!(
                    "epsilon too large for a group of {} parameters",
                    g.len()
                )));
            }
        }
        Ok(SimplexEncoding { groups, num_params: d.num_params(), epsilon })
    }

    pub fn dimension(&self) -> usize {
        self.groups.iter().map(|g| g.len() + 1).sum()
    }

    fn grid(&self, x: &[f64]) -> Vec<Vec<u64>> {
        let scale = (1u64 << GRID_BITS) as f64;
        let mut out = Vec::with_capacity(self.groups.len());
        let mut at = 0;
        for g in &self.groups {
            let xs = &x[at..at + g.len() + 1];
            at += g.len() + 1;
            let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = xs.iter().map(|v| (v - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            out.push(exps[..g.len()].iter().map(|e| ((e / total) * scale).floor() as u64).collect());
        }
        out
    }

    /// Float parameter values of a position.
    pub fn decode_f64(&self, x: &[f64]) -> Vec<f64> {
        let eps = to_f64(&self.epsilon);
        let scale = (1u64 << GRID_BITS) as f64;
        let mut u = vec![0.0; self.num_params];
        for (g, cells) in self.groups.iter().zip(self.grid(x)) {
            let spread = 1.0 - (g.len() as f64 + 1.0) * eps;
            for (v, c) in g.iter().zip(cells) {
                u[v.index()] = eps + spread * (c as f64 / scale);
            }
        }
        u
    }

    /// Exact parameter values of a position.
    pub fn decode(&self, x: &[f64]) -> Instantiation {
        let denom = BigInt::from(1u64 << GRID_BITS);
        let mut u = vec![Rational::from_integer(0.into()); self.num_params];
        for (g, cells) in self.groups.iter().zip(self.grid(x)) {
            let spread = Rational::one() - Rational::from_integer((g.len() + 1).into()) * &self.epsilon;
            for (v, c) in g.iter().zip(cells) {
                u[v.index()] = &self.epsilon + &spread * Rational::new(BigInt::from(c), denom.clone());
            }
        }
        Instantiation::new(u)
    }
}

fn fitness(spec: &Specification, value: f64) -> f64 {
    let f = if value.is_nan() {
        f64::NEG_INFINITY
    } else if value.is_infinite() {
        DIVERGENCE_PENALTY
    } else {
        value
    };
    if spec.maximizing() {
        f
    } else {
        -f
    }
}

struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best_x: Vec<f64>,
    best: f64,
}

/// Searches for an instantiation of `d` satisfying `spec`.
///
/// Deterministic for a fixed seed: all random numbers are drawn on the
/// calling thread, and only fitness evaluations use `exec`.
pub fn pso_search(d: &Pmc, spec: &Specification, cfg: &SearchConfig, exec: Execution) -> Result<PsoResult> {
    cfg.validate()?;
    let start = Instant::now();
    let checker = PmcChecker::new(d, spec)?;
    let enc = SimplexEncoding::new(d, cfg.epsilon.clone())?;
    let dim = enc.dimension();
    let mut evaluations = 0;
    let evaluate = |xs: &[Vec<f64>]| -> Vec<f64> { exec.map(xs, |x| checker.value_f64(&enc.decode_f64(x))) };

    let finish = |x: &[f64], value: f64, trace: Vec<f64>, evaluations: usize, budget_exhausted: bool| -> Result<PsoResult> {
        let instantiation = enc.decode(x);
        let exact = if cfg.exact_verify { Some(checker.value(&instantiation)?) } else { None };
        let satisfied = match &exact {
            Some(v) => spec.satisfied(v),
            None => spec.satisfied_f64(value),
        };
        Ok(PsoResult { instantiation, value_f64: value, exact, satisfied, trace, evaluations, budget_exhausted })
    };

    if dim == 0 {
        let value = evaluate(&[Vec::new()])[0];
        return finish(&[], value, vec![value], 1, false);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Particle 0 starts at the uniform distribution of every group.
    let mut particles: Vec<Particle> = (0..cfg.swarm_size)
        .map(|i| {
            let x: Vec<f64> = if i == 0 { vec![0.0; dim] } else { (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect() };
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            Particle { best_x: x.clone(), x, v, best: f64::NEG_INFINITY }
        })
        .collect();
    let mut best_x = particles[0].x.clone();
    let mut best = f64::NEG_INFINITY;
    let mut best_value = f64::NAN;
    let mut trace = Vec::new();
    let mut budget_exhausted = false;

    for iteration in 0..=cfg.max_iterations {
        if iteration > 0 {
            for p in particles.iter_mut() {
                for j in 0..dim {
                    let r1: f64 = rng.random();
                    let r2: f64 = rng.random();
                    let v = cfg.inertia * p.v[j]
                        + cfg.cognitive * r1 * (p.best_x[j] - p.x[j])
                        + cfg.social * r2 * (best_x[j] - p.x[j]);
                    p.v[j] = v.clamp(-VELOCITY_CLAMP, VELOCITY_CLAMP);
                    p.x[j] += p.v[j];
                }
            }
        }
        let positions: Vec<Vec<f64>> = particles.iter().map(|p| p.x.clone()).collect();
        let values = evaluate(&positions);
        evaluations += values.len();
        for (p, &value) in particles.iter_mut().zip(&values) {
            let f = fitness(spec, value);
            if f > p.best {
                p.best = f;
                p.best_x = p.x.clone();
            }
            if f > best {
                best = f;
                best_x = p.x.clone();
                best_value = value;
            }
        }
        trace.push(best_value);
        if cfg.stop_on_satisfied && spec.satisfied_f64(best_value) {
            let result = finish(&best_x, best_value, trace.clone(), evaluations, false)?;
            if result.satisfied {
                return Ok(result);
            }
        }
        if cfg.time_budget.is_some_and(|t| start.elapsed() >= t) {
            budget_exhausted = iteration < cfg.max_iterations;
            break;
        }
    }
    finish(&best_x, best_value, trace, evaluations, budget_exhausted)
}

/// How far `value` falls short of the threshold; negative when it passes.
pub fn gap(spec: &Specification, value: f64) -> f64 {
    let t = to_f64(&spec.threshold);
    if spec.maximizing() {
        t - value
    } else {
        value - t
    }
}
