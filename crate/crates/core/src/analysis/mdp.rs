//! Optimal values on fully observable MDPs by exact policy iteration.

use num_traits::{One, Zero};

use super::mc::{expected_reward_values, reach_avoid_values};
use super::qualitative::{backward_closure, predecessors};
use crate::error::Result;
use crate::models::model::Mdp;
use crate::models::rational::{to_f64, Rational};
use crate::models::spec::{Direction, SpecKind, Specification, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct MdpOptimum {
    /// Value from the initial state.
    pub value: Value,
    pub values: Vec<Value>,
    /// Chosen position in `mdp.choices[s]` for every state.
    pub strategy: Vec<usize>,
}

fn choice_graph(mdp: &Mdp) -> Vec<Vec<usize>> {
    mdp.choices
        .iter()
        .map(|cs| {
            let mut v: Vec<usize> = cs.iter().flat_map(|c| c.successors.iter().map(|(t, _)| *t)).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect()
}

/// States from which some strategy reaches `target` (through `through`) with positive probability.
fn exists_reach(mdp: &Mdp, target: &[bool], through: impl Fn(usize) -> bool) -> Vec<bool> {
    let pre = predecessors(&choice_graph(mdp));
    backward_closure(&pre, target, through)
}

/// States from which every strategy reaches `target` with positive probability.
fn forall_reach(mdp: &Mdp, target: &[bool], through: impl Fn(usize) -> bool) -> Vec<bool> {
    let n = mdp.num_states();
    let mut r = target.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if r[s] || !through(s) {
                continue;
            }
            if mdp.choices[s].iter().all(|c| c.successors.iter().any(|(t, _)| r[*t])) {
                r[s] = true;
                changed = true;
            }
        }
        if !changed {
            return r;
        }
    }
}

/// States from which some strategy reaches `goal` almost surely.
fn prob1_exists(mdp: &Mdp, goal: &[bool]) -> Vec<bool> {
    let n = mdp.num_states();
    let mut u = vec![true; n];
    loop {
        let mut r = goal.to_vec();
        loop {
            let mut changed = false;
            for s in 0..n {
                if r[s] || !u[s] {
                    continue;
                }
                let ok = mdp.choices[s].iter().any(|c| {
                    c.successors.iter().all(|(t, _)| u[*t]) && c.successors.iter().any(|(t, _)| r[*t])
                });
                if ok {
                    r[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if r == u {
            return u;
        }
        u = r;
    }
}

fn q_value(mdp: &Mdp, s: usize, c: usize, v: &[Rational], with_reward: bool) -> Rational {
    let choice = &mdp.choices[s][c];
    let mut acc = if with_reward { choice.reward.clone() } else { Rational::zero() };
    for (t, p) in &choice.successors {
        acc += p * &v[*t];
    }
    acc
}

fn dirac(mdp: &Mdp, strategy: &[usize]) -> Vec<Vec<Rational>> {
    strategy
        .iter()
        .enumerate()
        .map(|(s, &c)| {
            (0..mdp.choices[s].len()).map(|i| if i == c { Rational::one() } else { Rational::zero() }).collect()
        })
        .collect()
}

/// Float value iteration used to pick a good starting strategy.
fn warm_start(mdp: &Mdp, goal: &[bool], bad: &[bool], maximize: bool, active: &[bool]) -> Vec<usize> {
    let n = mdp.num_states();
    let probs: Vec<Vec<Vec<(usize, f64)>>> = mdp
        .choices
        .iter()
        .map(|cs| cs.iter().map(|c| c.successors.iter().map(|(t, p)| (*t, to_f64(p))).collect()).collect())
        .collect();
    let mut v: Vec<f64> = (0..n).map(|s| if goal[s] { 1.0 } else { 0.0 }).collect();
    let mut strategy = vec![0; n];
    for _ in 0..10_000 {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if goal[s] || bad[s] || !active[s] {
                continue;
            }
            let mut best = None;
            for (c, succ) in probs[s].iter().enumerate() {
                let q: f64 = succ.iter().map(|(t, p)| p * v[*t]).sum();
                let better = match best {
                    None => true,
                    Some((_, b)) => if maximize { q > b + 1e-15 } else { q < b - 1e-15 },
                };
                if better {
                    best = Some((c, q));
                }
            }
            let (c, q) = best.expect("no deadlocks");
            strategy[s] = c;
            delta = delta.max((q - v[s]).abs());
            v[s] = q;
        }
        if delta < 1e-12 {
            break;
        }
    }
    strategy
}

/// Optimal reach-avoid probability or expected reward on an MDP.
///
/// Probability specifications with `>`/`>=` maximize and with `<`/`<=`
/// minimize; reward specifications follow `Emin`/`Emax`.
pub fn mdp_optimal(mdp: &Mdp, spec: &Specification) -> Result<MdpOptimum> {
    let n = mdp.num_states();
    let goal = mdp.mask(spec.goal())?;
    match &spec.kind {
        SpecKind::ReachAvoid { bad, .. } => {
            let bad = match bad {
                Some(b) => mdp.mask(b)?,
                None => vec![false; n],
            };
            Ok(optimal_reach(mdp, &goal, &bad, spec.maximizing()))
        }
        SpecKind::ExpectedReward { direction, .. } => Ok(optimal_reward(mdp, &goal, *direction == Direction::Max)),
    }
}

pub fn optimal_reach(mdp: &Mdp, goal: &[bool], bad: &[bool], maximize: bool) -> MdpOptimum {
    let n = mdp.num_states();
    // States with optimal value 0 are fixed; elsewhere policy iteration is sound.
    let zero: Vec<bool> = if maximize {
        exists_reach(mdp, goal, |s| !bad[s] && !goal[s]).iter().map(|r| !r).collect()
    } else {
        forall_reach(mdp, goal, |s| !bad[s] && !goal[s]).iter().map(|r| !r).collect()
    };
    let active: Vec<bool> = (0..n).map(|s| !zero[s] && !goal[s]).collect();
    let mut strategy = warm_start(mdp, goal, bad, maximize, &active);
    if !maximize {
        // Zero states must keep avoiding the goal: pick a choice staying in the zero set.
        for s in 0..n {
            if zero[s] && !bad[s] {
                if let Some(c) = mdp.choices[s].iter().position(|c| c.successors.iter().all(|(t, _)| zero[*t])) {
                    strategy[s] = c;
                }
            }
        }
    }
    loop {
        let mc = mdp.induced_chain(&dirac(mdp, &strategy));
        let mut v = reach_avoid_values(&mc, goal, bad);
        for s in 0..n {
            if zero[s] {
                v[s] = Rational::zero();
            }
        }
        let mut changed = false;
        for s in 0..n {
            if !active[s] {
                continue;
            }
            let current = q_value(mdp, s, strategy[s], &v, false);
            let mut best = (strategy[s], current);
            for c in 0..mdp.choices[s].len() {
                let q = q_value(mdp, s, c, &v, false);
                let better = if maximize { q > best.1 } else { q < best.1 };
                if better {
                    best = (c, q);
                }
            }
            if best.0 != strategy[s] {
                strategy[s] = best.0;
                changed = true;
            }
        }
        if !changed {
            let values: Vec<Value> = v.into_iter().map(Value::Finite).collect();
            return MdpOptimum { value: values[mdp.initial].clone(), values, strategy };
        }
    }
}

pub fn optimal_reward(mdp: &Mdp, goal: &[bool], maximize: bool) -> MdpOptimum {
    let n = mdp.num_states();
    // Finite region: Emin needs some almost-surely reaching strategy, Emax needs all strategies to reach.
    let finite: Vec<bool> = if maximize {
        let avoid = forall_reach(mdp, goal, |s| !goal[s]).iter().map(|r| !r).collect::<Vec<bool>>();
        exists_reach(mdp, &avoid, |s| !goal[s]).iter().map(|r| !r).collect()
    } else {
        prob1_exists(mdp, goal)
    };
    let allowed = |s: usize, c: usize| mdp.choices[s][c].successors.iter().all(|(t, _)| finite[*t]);
    // Initial strategy: attractor towards the goal inside the finite region.
    let mut strategy = vec![0; n];
    let mut done = goal.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if done[s] || !finite[s] {
                continue;
            }
            if let Some(c) = (0..mdp.choices[s].len())
                .find(|&c| allowed(s, c) && mdp.choices[s][c].successors.iter().any(|(t, _)| done[*t]))
            {
                strategy[s] = c;
                done[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    loop {
        let mc = mdp.induced_chain(&dirac(mdp, &strategy));
        let raw = expected_reward_values(&mc, goal);
        let v: Vec<Rational> = raw.iter().map(|x| x.clone().unwrap_or_else(Rational::zero)).collect();
        let mut changed = false;
        for s in 0..n {
            if goal[s] || !finite[s] {
                continue;
            }
            let current = q_value(mdp, s, strategy[s], &v, true);
            let mut best = (strategy[s], current);
            for c in 0..mdp.choices[s].len() {
                if !allowed(s, c) {
                    continue;
                }
                let q = q_value(mdp, s, c, &v, true);
                let better = if maximize { q > best.1 } else { q < best.1 };
                if better {
                    best = (c, q);
                }
            }
            if best.0 != strategy[s] {
                strategy[s] = best.0;
                changed = true;
            }
        }
        if !changed {
            let values: Vec<Value> = (0..n)
                .map(|s| if finite[s] { Value::Finite(v[s].clone()) } else { Value::Infinite })
                .collect();
            return MdpOptimum { value: values[mdp.initial].clone(), values, strategy };
        }
    }
}
