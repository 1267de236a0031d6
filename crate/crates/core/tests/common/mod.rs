//! Fixtures and random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use fscsynth::models::format::{parse_pmc, parse_pomdp};
use fscsynth::models::model::{Chain, Labels, Pmc, Pomdp, PomdpBuilder};
use fscsynth::models::polynomial::{Polynomial, Var};
use fscsynth::models::rational::{frac, int, Rational};
use fscsynth::models::Instantiation;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two observations: `s1`, `s3` share `z0`; `s2`, `s4`, `s5` are absorbing
/// under `z1`. State ids are shifted down by one.
pub const FRAGMENT: &str = "\
pomdp
states 5
initial 0
observations 2
obs 0 0
obs 1 1
obs 2 0
obs 3 1
obs 4 1
trans 0 a1 1 3/5
trans 0 a1 2 2/5
trans 0 a2 3 7/10
trans 0 a2 4 3/10
trans 2 a1 2 1
trans 2 a2 2 1
trans 1 a1 1 1
trans 3 a1 3 1
trans 4 a1 4 1
label goal 1
label bad 3 4
";

/// Three actions at `s0`; `s1` and `s3` share an observation.
pub const THREE_ACTIONS: &str = "\
pomdp
states 4
initial 0
observations 3
obs 0 0
obs 1 1
obs 2 2
obs 3 1
trans 0 a1 1 1
trans 0 a2 2 1/2
trans 0 a2 3 1/2
trans 0 a3 3 1
trans 1 a1 2 1
trans 1 a2 0 1/2
trans 1 a2 2 1/2
trans 3 a1 2 1
trans 3 a2 3 1
trans 2 a1 2 1
label goal 2
";

/// Binary POMDP whose actions have probabilistic outcomes.
pub const BINARY: &str = "\
pomdp
states 3
initial 0
observations 2
obs 0 0
obs 1 1
obs 2 1
trans 0 a 1 1/5
trans 0 a 2 4/5
trans 0 b 1 1/2
trans 0 b 2 1/2
trans 1 a 1 1
trans 2 a 2 1
label goal 2
";

/// The simple pMC with `s0 -p-> s_a`, `s0 -(1-p)-> s_b`.
pub const SIMPLE_PMC: &str = "\
pmc
states 5
initial 0
params p
trans 0 3 p
trans 0 4 1-p
trans 3 1 1/5
trans 3 2 4/5
trans 4 1 1/2
trans 4 2 1/2
trans 1 1 1
trans 2 2 1
label goal 2
";

/// One observation; `a1` moves to the goal, `a2` stays.
pub const ZERO_PROB: &str = "\
pomdp
states 2
initial 0
observations 1
obs 0 0
obs 1 0
trans 0 a1 1 1
trans 0 a2 0 1
trans 1 a1 1 1
trans 1 a2 1 1
label goal 1
";

/// Three indistinguishable states needing `a`, `b`, `a` in turn; any
/// deterministic memoryless choice fails while `P(a) = 2/3` reaches the
/// goal with probability `4/27`.
pub const XOR: &str = "\
pomdp
states 6
initial 0
observations 2
obs 0 0
obs 1 1
obs 2 1
obs 3 1
obs 4 0
obs 5 0
trans 0 go 1 1
trans 1 a 2 1
trans 1 b 5 1
trans 2 b 3 1
trans 2 a 5 1
trans 3 a 4 1
trans 3 b 5 1
trans 4 go 4 1
trans 5 go 5 1
label goal 4
label bad 5
";

/// Three-state cycle used for unfolding.
pub const CYCLE: &str = "\
pomdp
states 3
initial 0
observations 2
obs 0 0
obs 1 1
obs 2 1
trans 0 a 1 1
trans 0 b 2 1
trans 1 a 2 1/2
trans 1 a 0 1/2
trans 1 b 1 1
trans 2 a 0 1
trans 2 b 2 1
label goal 2
";

pub fn pomdp(text: &str) -> Pomdp {
    parse_pomdp(text).expect("fixture parses")
}

pub fn pmc(text: &str) -> Pmc {
    parse_pmc(text).expect("fixture parses")
}

/// A probability distribution over `n` items with small denominators.
pub fn random_dist(rng: &mut impl Rng, n: usize, allow_zero: bool) -> Vec<Rational> {
    loop {
        let lo = if allow_zero { 0 } else { 1 };
        let w: Vec<i64> = (0..n).map(|_| rng.random_range(lo..=6)).collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return w.into_iter().map(|x| frac(x, total)).collect();
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PomdpShape {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_observations: usize,
    pub rewards: bool,
}

impl Default for PomdpShape {
    fn default() -> Self {
        PomdpShape { max_states: 8, max_actions: 3, max_observations: 4, rewards: false }
    }
}

/// A random POMDP with labels `goal` and `bad` (the latter possibly empty).
pub fn random_pomdp(rng: &mut impl Rng, shape: PomdpShape) -> Pomdp {
    let n = rng.random_range(2..=shape.max_states.max(2));
    let zs = rng.random_range(1..=shape.max_observations.min(n));
    let mut observation: Vec<usize> = (0..n).map(|s| if s < zs { s } else { rng.random_range(0..zs) }).collect();
    observation.shuffle(rng);
    let counts: Vec<usize> = (0..zs).map(|_| rng.random_range(1..=shape.max_actions)).collect();
    let mut b = PomdpBuilder::new(observation.clone(), rng.random_range(0..n)).num_observations(zs);
    for s in 0..n {
        for a in 0..counts[observation[s]] {
            let label = format!("a{a}");
            let width = rng.random_range(1..=3.min(n));
            let mut targets: Vec<usize> = (0..n).collect();
            targets.shuffle(rng);
            targets.truncate(width);
            for (t, p) in targets.iter().zip(random_dist(rng, width, false)) {
                b.add_trans(s, &label, *t, p);
            }
            if shape.rewards && rng.random_bool(0.7) {
                b.add_reward(s, &label, int(rng.random_range(1..=4)));
            }
        }
    }
    let mut states: Vec<usize> = (0..n).collect();
    states.shuffle(rng);
    let goals = rng.random_range(1..=2.min(n));
    let bads = if shape.rewards { 0 } else { rng.random_range(0..=(n - goals).min(2)) };
    b = b.label("goal", &states[..goals]).label("bad", &states[goals..goals + bads]);
    b.build().expect("generated POMDP is valid")
}

/// A well-defined instantiation of `d` that respects its parameter groups.
/// With `allow_zero`, coordinates (including completions) may be 0.
pub fn random_instantiation(rng: &mut impl Rng, d: &Pmc, allow_zero: bool) -> Instantiation {
    let mut values = vec![Rational::from_integer(0.into()); d.num_params()];
    for g in d.all_groups() {
        let dist = random_dist(rng, g.len() + 1, allow_zero);
        for (v, p) in g.iter().zip(dist) {
            values[v.index()] = p;
        }
    }
    Instantiation::new(values)
}

/// A random simple pMC in which every parameter occurs and every state has
/// a successor.
pub fn random_simple_pmc(rng: &mut impl Rng, max_states: usize, max_params: usize) -> Pmc {
    let n = rng.random_range(2..=max_states.max(2));
    let np = rng.random_range(0..=max_params.min(n));
    let mut param_states: Vec<usize> = (0..n).collect();
    param_states.shuffle(rng);
    // The first `np` shuffled states carry one parameter each; others may reuse one.
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, &s) in param_states.iter().enumerate() {
        if i < np {
            owner.insert(s, i);
        } else if np > 0 && rng.random_bool(0.3) {
            owner.insert(s, rng.random_range(0..np));
        }
    }
    let mut transitions = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    for s in 0..n {
        let mut row: BTreeMap<usize, Polynomial> = BTreeMap::new();
        match owner.get(&s) {
            Some(&v) => {
                let t1 = rng.random_range(0..n);
                let mut t2 = rng.random_range(0..n - 1);
                if t2 >= t1 {
                    t2 += 1;
                }
                row.insert(t1, Polynomial::var(Var(v as u32)));
                row.insert(t2, Polynomial::one_minus_sum([Var(v as u32)]));
            }
            None => {
                let width = rng.random_range(1..=3.min(n));
                let mut targets: Vec<usize> = (0..n).collect();
                targets.shuffle(rng);
                for (t, p) in targets[..width].iter().zip(random_dist(rng, width, false)) {
                    row.insert(*t, Polynomial::constant(p));
                }
            }
        }
        transitions.push(row.into_iter().collect());
        rewards.push(if rng.random_bool(0.3) { Polynomial::constant(int(rng.random_range(1..=3))) } else { Polynomial::zero() });
    }
    let mut states: Vec<usize> = (0..n).collect();
    states.shuffle(rng);
    let mut labels = Labels::new();
    labels.insert("goal".into(), states[..1].iter().copied().collect());
    labels.insert("bad".into(), states[1..1 + rng.random_range(0..=1)].iter().copied().collect());
    Pmc {
        chain: Chain { initial: rng.random_range(0..n), transitions, rewards, labels },
        params: (0..np).map(|i| format!("x{i}")).collect(),
        groups: Vec::new(),
    }
}

/// Uniformly random rational point of `[lo, hi]` with denominator `den`.
pub fn random_in(rng: &mut impl Rng, lo: &Rational, hi: &Rational, den: i64) -> Rational {
    let t = frac(rng.random_range(0..=den), den);
    lo + (hi - lo) * t
}
