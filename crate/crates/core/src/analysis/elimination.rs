//! Closed forms over the parameters by state elimination.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::mc::spec_masks;
use super::qualitative::{forward_reach, qualitative};
use crate::error::Result;
use crate::models::model::Pmc;
use crate::models::polynomial::Polynomial;
use crate::models::ratfunc::RationalFunction;
use crate::models::spec::{SpecKind, Specification};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EliminationOrder {
    /// Smallest in-degree times out-degree first, recomputed after every step.
    #[default]
    MinDegree,
    Index,
    Reverse,
}

/// Result of [`closed_form`]: a function of the parameters or divergence.
#[derive(Clone, Debug, PartialEq)]
pub enum ClosedForm {
    Function(RationalFunction),
    Infinite,
}

impl ClosedForm {
    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a ClosedForm, &'a [String]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self.0 {
                    ClosedForm::Function(r) => write!(f, "{}", r.display(self.1)),
                    ClosedForm::Infinite => write!(f, "inf"),
                }
            }
        }
        D(self, names)
    }
}

struct Graph {
    out: Vec<BTreeMap<usize, RationalFunction>>,
    pre: Vec<BTreeSet<usize>>,
    /// Value collected by leaving a state: probability mass into the
    /// probability-1 set, or reward.
    base: Vec<RationalFunction>,
}

impl Graph {
    fn self_loop(&self, s: usize) -> Option<&RationalFunction> {
        self.out[s].get(&s)
    }

    fn degree(&self, s: usize) -> usize {
        let ins = self.pre[s].iter().filter(|&&t| t != s).count();
        let outs = self.out[s].keys().filter(|&&t| t != s).count();
        ins * outs
    }

    fn eliminate(&mut self, s: usize) {
        let out_s = std::mem::take(&mut self.out[s]);
        let factor = match out_s.get(&s) {
            Some(l) => RationalFunction::one().sub(l).recip(),
            None => RationalFunction::one(),
        };
        let base_s = std::mem::replace(&mut self.base[s], RationalFunction::zero());
        let preds: Vec<usize> = self.pre[s].iter().copied().filter(|&t| t != s).collect();
        for &t in &preds {
            let w = self.out[t].remove(&s).expect("predecessor edge");
            let w = w.mul(&factor);
            for (&u, p) in &out_s {
                if u == s {
                    continue;
                }
                let add = w.mul(p);
                match self.out[t].get_mut(&u) {
                    Some(e) => *e = e.add(&add),
                    None => {
                        self.out[t].insert(u, add);
                        self.pre[u].insert(t);
                    }
                }
            }
            if !base_s.is_zero() {
                self.base[t] = self.base[t].add(&w.mul(&base_s));
            }
        }
        for &u in out_s.keys() {
            self.pre[u].remove(&s);
        }
        self.pre[s].clear();
    }
}

fn run(mut g: Graph, working: &[usize], initial: usize, order: EliminationOrder) -> RationalFunction {
    let mut remaining: Vec<usize> = working.iter().copied().filter(|&s| s != initial).collect();
    if order == EliminationOrder::Reverse {
        remaining.reverse();
    }
    if order == EliminationOrder::MinDegree {
        while !remaining.is_empty() {
            let (pos, _) = remaining
                .iter()
                .enumerate()
                .min_by_key(|(_, &s)| g.degree(s))
                .expect("non-empty");
            let s = remaining.swap_remove(pos);
            g.eliminate(s);
        }
    } else {
        for s in remaining {
            g.eliminate(s);
        }
    }
    let result = match g.self_loop(initial) {
        Some(l) => g.base[initial].div(&RationalFunction::one().sub(l)),
        None => g.base[initial].clone(),
    };
    RationalFunction::canonical(result.numerator().clone(), result.denominator().clone())
}

fn build(d: &Pmc, working: &[bool], target: impl Fn(usize) -> bool, base: impl Fn(usize) -> Polynomial) -> Graph {
    let n = d.num_states();
    let mut out = vec![BTreeMap::new(); n];
    let mut pre = vec![BTreeSet::new(); n];
    let mut bases = vec![RationalFunction::zero(); n];
    for s in 0..n {
        if !working[s] {
            continue;
        }
        let mut b = base(s);
        for (t, f) in &d.chain.transitions[s] {
            if working[*t] {
                out[s].insert(*t, RationalFunction::from_poly(f.clone()));
                pre[*t].insert(s);
            } else if target(*t) {
                b = &b + f;
            }
        }
        bases[s] = RationalFunction::from_poly(b);
    }
    Graph { out, pre, base: bases }
}

/// Reach-avoid probability as a function of the parameters, valid for every
/// graph-preserving well-defined instantiation.
pub fn state_eliminate(d: &Pmc, goal: &[bool], bad: &[bool]) -> RationalFunction {
    state_eliminate_with(d, goal, bad, EliminationOrder::MinDegree)
}

pub fn state_eliminate_with(d: &Pmc, goal: &[bool], bad: &[bool], order: EliminationOrder) -> RationalFunction {
    let n = d.num_states();
    let init = d.chain.initial;
    let q = qualitative(&d.chain.graph(), goal, bad);
    if q.s_one[init] {
        return RationalFunction::one();
    }
    if q.s_zero[init] {
        return RationalFunction::zero();
    }
    let fixed: Vec<bool> = (0..n).map(|s| q.s_zero[s] || q.s_one[s]).collect();
    let reach = forward_reach(&d.chain.graph(), init, &fixed);
    let working: Vec<bool> = (0..n).map(|s| reach[s] && !fixed[s]).collect();
    let states: Vec<usize> = (0..n).filter(|&s| working[s]).collect();
    let g = build(d, &working, |t| q.s_one[t], |_| Polynomial::zero());
    run(g, &states, init, order)
}

/// Expected reward until `goal` as a function of the parameters; `None` if
/// the goal is missed with positive probability under graph-preserving values.
pub fn state_eliminate_reward(d: &Pmc, goal: &[bool], order: EliminationOrder) -> Option<RationalFunction> {
    let n = d.num_states();
    let init = d.chain.initial;
    if goal[init] {
        return Some(RationalFunction::zero());
    }
    let q = qualitative(&d.chain.graph(), goal, &vec![false; n]);
    if !q.s_one[init] {
        return None;
    }
    let reach = forward_reach(&d.chain.graph(), init, goal);
    let working: Vec<bool> = (0..n).map(|s| reach[s] && !goal[s]).collect();
    let states: Vec<usize> = (0..n).filter(|&s| working[s]).collect();
    let g = build(d, &working, |_| false, |s| d.chain.rewards[s].clone());
    Some(run(g, &states, init, order))
}

/// Closed form of a specification's value over the parameters.
pub fn closed_form(d: &Pmc, spec: &Specification) -> Result<ClosedForm> {
    let (goal, bad) = spec_masks(&d.chain, spec)?;
    Ok(match spec.kind {
        SpecKind::ReachAvoid { .. } => ClosedForm::Function(state_eliminate(d, &goal, &bad)),
        SpecKind::ExpectedReward { .. } => match state_eliminate_reward(d, &goal, EliminationOrder::MinDegree) {
            Some(f) => ClosedForm::Function(f),
            None => ClosedForm::Infinite,
        },
    })
}
