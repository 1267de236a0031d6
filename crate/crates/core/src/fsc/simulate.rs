//! Monte-Carlo runs of a controller on a POMDP.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dist, Fsc};
use crate::error::Result;
use crate::models::model::Pomdp;
use crate::models::rational::to_f64;
use crate::models::spec::Specification;
use crate::par::Execution;

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    pub episodes: usize,
    /// Episodes that reached the goal before a bad state and the horizon.
    pub reached: usize,
    /// Episodes cut off by the horizon.
    pub truncated: usize,
    pub frequency: f64,
    /// Mean reward accumulated until the goal, bad state or horizon.
    pub mean_reward: f64,
}

fn sample(rng: &mut ChaCha8Rng, d: &Dist) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (item, p) in d {
        acc += to_f64(p);
        if x < acc {
            return *item;
        }
    }
    d.last().expect("non-empty distribution").0
}

enum Outcome {
    Goal,
    Bad,
    Truncated,
}

/// Runs `episodes` episodes of at most `horizon` steps. Episode `i` uses
/// stream `i` of a generator seeded with `seed`, so the result does not
/// depend on `exec`.
pub fn simulate(
    m: &Pomdp,
    fsc: &Fsc,
    spec: &Specification,
    episodes: usize,
    horizon: usize,
    seed: u64,
    exec: Execution,
) -> Result<SimulationResult> {
    fsc.validate(m)?;
    let goal = m.mdp.mask(spec.goal())?;
    let bad = match spec.bad() {
        Some(b) => m.mdp.mask(b)?,
        None => vec![false; m.num_states()],
    };
    let runs = exec.map_range(episodes, |e| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(e as u64);
        let (mut s, mut n) = (m.mdp.initial, fsc.initial);
        let mut reward = 0.0;
        for _ in 0..horizon {
            if goal[s] {
                return (Outcome::Goal, reward);
            }
            if bad[s] {
                return (Outcome::Bad, reward);
            }
            let z = m.observation[s];
            let a = sample(&mut rng, &fsc.action_map[n][z]);
            let c = m.mdp.choice(s, a).expect("validated controller");
            reward += to_f64(&c.reward);
            let s2 = sample(&mut rng, &c.successors);
            n = sample(&mut rng, fsc.memory(n, z, a).expect("validated controller"));
            s = s2;
        }
        if goal[s] {
            (Outcome::Goal, reward)
        } else {
            (Outcome::Truncated, reward)
        }
    });
    let mut reached = 0;
    let mut truncated = 0;
    let mut total = 0.0;
    for (o, r) in &runs {
        match o {
            Outcome::Goal => reached += 1,
            Outcome::Bad => {}
            Outcome::Truncated => truncated += 1,
        }
        total += r;
    }
    let denom = episodes.max(1) as f64;
    Ok(SimulationResult {
        episodes,
        reached,
        truncated,
        frequency: reached as f64 / denom,
        mean_reward: total / denom,
    })
}
