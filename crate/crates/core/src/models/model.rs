//! Explicit-state Markov chains (concrete and parametric), MDPs and POMDPs.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::polynomial::{Polynomial, Var};
use super::rational::{format_rational, to_f64, Rational};
use crate::error::{Error, Result};

/// Named state sets, e.g. `goal` and `bad`.
pub type Labels = BTreeMap<String, BTreeSet<usize>>;

/// A Markov chain with transition weights of type `W`.
///
/// Rows are sorted by target and never hold an explicit zero entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain<W> {
    pub initial: usize,
    pub transitions: Vec<Vec<(usize, W)>>,
    /// Reward collected when leaving a state.
    pub rewards: Vec<W>,
    pub labels: Labels,
}

pub type Mc = Chain<Rational>;
pub type FloatMc = Chain<f64>;

impl<W> Chain<W> {
    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    /// Membership vector of a label; unknown labels are an error.
    pub fn mask(&self, label: &str) -> Result<Vec<bool>> {
        label_mask(&self.labels, label, self.num_states())
    }

    /// Successor lists, ignoring weights.
    pub fn graph(&self) -> Vec<Vec<usize>> {
        self.transitions
            .iter()
            .map(|row| row.iter().map(|&(t, _)| t).collect())
            .collect()
    }

    pub fn map<V>(&self, mut f: impl FnMut(&W) -> V) -> Chain<V> {
        Chain {
            initial: self.initial,
            transitions: self
                .transitions
                .iter()
                .map(|row| row.iter().map(|(t, w)| (*t, f(w))).collect())
                .collect(),
            rewards: self.rewards.iter().map(&mut f).collect(),
            labels: self.labels.clone(),
        }
    }
}

pub fn label_mask(labels: &Labels, label: &str, n: usize) -> Result<Vec<bool>> {
    let set = labels.get(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
    let mut mask = vec![false; n];
    for &s in set {
        mask[s] = true;
    }
    Ok(mask)
}

impl Mc {
    pub fn to_float(&self) -> FloatMc {
        self.map(to_f64)
    }

    /// Checks that every row is a distribution, exactly.
    pub fn is_stochastic(&self) -> bool {
        self.transitions.iter().all(|row| {
            row.iter().all(|(_, p)| p > &Rational::zero() && p <= &Rational::one())
                && row.iter().map(|(_, p)| p).sum::<Rational>() == Rational::one()
        })
    }
}

/// A parametric Markov chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmc {
    pub chain: Chain<Polynomial>,
    /// Parameter names, indexed by [`Var`].
    pub params: Vec<String>,
    /// Parameter groups that form sub-distributions: the members and the
    /// implicit remainder `1 - Σ members` must all be non-negative.
    /// Parameters outside every group are treated as singleton groups.
    pub groups: Vec<Vec<Var>>,
}

impl Pmc {
    pub fn num_states(&self) -> usize {
        self.chain.num_states()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn param_index(&self, name: &str) -> Option<Var> {
        self.params.iter().position(|n| n == name).map(|i| Var(i as u32))
    }

    /// Groups including singleton groups for ungrouped parameters, in the
    /// order of their smallest member.
    pub fn all_groups(&self) -> Vec<Vec<Var>> {
        let mut seen = vec![false; self.params.len()];
        let mut groups: Vec<Vec<Var>> = Vec::new();
        for g in &self.groups {
            for v in g {
                seen[v.index()] = true;
            }
            groups.push(g.clone());
        }
        for (i, s) in seen.iter().enumerate() {
            if !s {
                groups.push(vec![Var(i as u32)]);
            }
        }
        groups.sort_by_key(|g| g.iter().min().copied());
        groups
    }

    /// Every entry is a constant, a parameter `p`, or `1 - p`.
    pub fn is_simple(&self) -> bool {
        self.chain.transitions.iter().flatten().all(|(_, f)| simple_entry(f).is_some())
    }

    /// Each row sums to the constant polynomial 1.
    pub fn rows_sum_to_one(&self) -> bool {
        self.chain.transitions.iter().all(|row| {
            let sum = row.iter().fold(Polynomial::zero(), |acc, (_, f)| &acc + f);
            sum.is_one()
        })
    }

    /// Parameters occurring in some transition or reward.
    pub fn used_params(&self) -> BTreeSet<Var> {
        let mut used = BTreeSet::new();
        for (_, f) in self.chain.transitions.iter().flatten() {
            used.extend(f.vars());
        }
        for r in &self.chain.rewards {
            used.extend(r.vars());
        }
        used
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_states();
        if n == 0 {
            return Err(Error::semantic("model has no states"));
        }
        if self.chain.initial >= n {
            return Err(Error::semantic(format!("initial state {} out of range", self.chain.initial)));
        }
        if self.chain.rewards.len() != n {
            return Err(Error::semantic("reward vector length differs from state count"));
        }
        for (s, row) in self.chain.transitions.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::semantic(format!("deadlock state {s}: no outgoing transitions")));
            }
            for (t, f) in row {
                if *t >= n {
                    return Err(Error::semantic(format!("transition {s} -> {t}: dangling target")));
                }
                if f.var_bound() > self.params.len() {
                    return Err(Error::semantic(format!("transition {s} -> {t}: unknown parameter")));
                }
                if row.len() == 1 && !f.is_one() {
                    return Err(Error::semantic(format!(
                        "state {s}: single successor with probability other than 1"
                    )));
                }
            }
            let sum = row.iter().fold(Polynomial::zero(), |acc, (_, f)| &acc + f);
            if !sum.is_one() {
                return Err(Error::semantic(format!(
                    "state {s}: outgoing transitions sum to {} instead of 1",
                    sum.display(&self.params)
                )));
            }
        }
        let mut grouped = BTreeSet::new();
        for g in &self.groups {
            for v in g {
                if v.index() >= self.params.len() || !grouped.insert(*v) {
                    return Err(Error::semantic(format!("parameter group {g:?} is invalid")));
                }
            }
        }
        validate_labels(&self.chain.labels, n)
    }
}

pub(crate) fn validate_labels(labels: &Labels, n: usize) -> Result<()> {
    for (name, set) in labels {
        if let Some(&s) = set.iter().find(|&&s| s >= n) {
            return Err(Error::semantic(format!("label {name}: state {s} out of range")));
        }
    }
    if let (Some(g), Some(b)) = (labels.get("goal"), labels.get("bad")) {
        if let Some(s) = g.intersection(b).next() {
            return Err(Error::semantic(format!("state {s} is labelled both goal and bad")));
        }
    }
    Ok(())
}

/// Classification of a simple-pMC entry.
#[derive(Clone, Debug, PartialEq)]
pub enum SimpleEntry {
    Constant(Rational),
    Param(Var),
    OneMinus(Var),
}

pub fn simple_entry(f: &Polynomial) -> Option<SimpleEntry> {
    if let Some(c) = f.constant_value() {
        return Some(SimpleEntry::Constant(c));
    }
    let vars = f.vars();
    if vars.len() != 1 || f.total_degree() != 1 {
        return None;
    }
    let v = vars[0];
    if *f == Polynomial::var(v) {
        Some(SimpleEntry::Param(v))
    } else if *f == Polynomial::one_minus_sum([v]) {
        Some(SimpleEntry::OneMinus(v))
    } else {
        None
    }
}

/// One enabled action of an MDP state.
#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    /// Index into the global action table.
    pub action: usize,
    pub successors: Vec<(usize, Rational)>,
    pub reward: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mdp {
    pub initial: usize,
    /// Global action labels, sorted.
    pub actions: Vec<String>,
    /// Enabled choices per state, sorted by action index.
    pub choices: Vec<Vec<Choice>>,
    pub labels: Labels,
}

impl Mdp {
    pub fn num_states(&self) -> usize {
        self.choices.len()
    }

    pub fn mask(&self, label: &str) -> Result<Vec<bool>> {
        label_mask(&self.labels, label, self.num_states())
    }

    pub fn action_index(&self, label: &str) -> Option<usize> {
        self.actions.binary_search_by(|a| a.as_str().cmp(label)).ok()
    }

    pub fn choice(&self, s: usize, action: usize) -> Option<&Choice> {
        self.choices[s].iter().find(|c| c.action == action)
    }

    /// The chain obtained when every state has exactly one choice.
    pub fn as_chain(&self) -> Option<Mc> {
        if self.choices.iter().any(|c| c.len() != 1) {
            return None;
        }
        Some(Chain {
            initial: self.initial,
            transitions: self.choices.iter().map(|c| c[0].successors.clone()).collect(),
            rewards: self.choices.iter().map(|c| c[0].reward.clone()).collect(),
            labels: self.labels.clone(),
        })
    }

    /// The chain induced by a memoryless randomized strategy
    /// (`strategy[s]` maps choice positions to probabilities).
    pub fn induced_chain(&self, strategy: &[Vec<Rational>]) -> Mc {
        let mut transitions = Vec::with_capacity(self.num_states());
        let mut rewards = Vec::with_capacity(self.num_states());
        for (s, choices) in self.choices.iter().enumerate() {
            let mut row: BTreeMap<usize, Rational> = BTreeMap::new();
            let mut reward = Rational::zero();
            for (c, w) in choices.iter().zip(&strategy[s]) {
                if w.is_zero() {
                    continue;
                }
                reward += w * &c.reward;
                for (t, p) in &c.successors {
                    *row.entry(*t).or_insert_with(Rational::zero) += w * p;
                }
            }
            transitions.push(row.into_iter().filter(|(_, p)| !p.is_zero()).collect());
            rewards.push(reward);
        }
        Chain { initial: self.initial, transitions, rewards, labels: self.labels.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_states();
        if n == 0 {
            return Err(Error::semantic("model has no states"));
        }
        if self.initial >= n {
            return Err(Error::semantic(format!("initial state {} out of range", self.initial)));
        }
        if !self.actions.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::semantic("action table is not sorted and unique"));
        }
        for (s, choices) in self.choices.iter().enumerate() {
            if choices.is_empty() {
                return Err(Error::semantic(format!("deadlock state {s}: no enabled action")));
            }
            if !choices.windows(2).all(|w| w[0].action < w[1].action) {
                return Err(Error::semantic(format!("state {s}: choices not sorted by action")));
            }
            for c in choices {
                let label = self.actions.get(c.action).ok_or_else(|| {
                    Error::semantic(format!("state {s}: action index {} out of range", c.action))
                })?;
                if c.successors.is_empty() {
                    return Err(Error::semantic(format!("state {s}, action {label}: no successors")));
                }
                let mut sum = Rational::zero();
                for (t, p) in &c.successors {
                    if *t >= n {
                        return Err(Error::semantic(format!(
                            "state {s}, action {label}: dangling successor {t}"
                        )));
                    }
                    if p <= &Rational::zero() || p > &Rational::one() {
                        return Err(Error::semantic(format!(
                            "state {s}, action {label}: probability {} outside (0,1]",
                            format_rational(p)
                        )));
                    }
                    sum += p;
                }
                if !sum.is_one() {
                    return Err(Error::semantic(format!(
                        "state {s}, action {label}: probabilities sum to {}",
                        format_rational(&sum)
                    )));
                }
                if c.reward < Rational::zero() {
                    return Err(Error::semantic(format!("state {s}, action {label}: negative reward")));
                }
            }
        }
        validate_labels(&self.labels, n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pomdp {
    pub mdp: Mdp,
    pub num_observations: usize,
    /// Observation of each state.
    pub observation: Vec<usize>,
}

impl Pomdp {
    pub fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn actions(&self) -> &[String] {
        &self.mdp.actions
    }

    /// Enabled action indices of state `s`, ascending.
    pub fn enabled(&self, s: usize) -> Vec<usize> {
        self.mdp.choices[s].iter().map(|c| c.action).collect()
    }

    /// Enabled actions per observation; empty for observations no state carries.
    pub fn observation_actions(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_observations];
        let mut seen = vec![false; self.num_observations];
        for s in 0..self.num_states() {
            let z = self.observation[s];
            if !seen[z] {
                seen[z] = true;
                out[z] = self.enabled(s);
            }
        }
        out
    }

    /// Observations carried by at least one state.
    pub fn used_observations(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.observation.iter().copied().collect();
        set.into_iter().collect()
    }

    pub fn has_rewards(&self) -> bool {
        self.mdp.choices.iter().flatten().any(|c| !c.reward.is_zero())
    }

    pub fn validate(&self) -> Result<()> {
        self.mdp.validate()?;
        if self.observation.len() != self.num_states() {
            return Err(Error::semantic("observation function is not total"));
        }
        let mut first: Vec<Option<usize>> = vec![None; self.num_observations];
        for (s, &z) in self.observation.iter().enumerate() {
            if z >= self.num_observations {
                return Err(Error::semantic(format!("state {s}: observation {z} out of range")));
            }
            match first[z] {
                None => first[z] = Some(s),
                Some(r) => {
                    if self.enabled(r) != self.enabled(s) {
                        return Err(Error::semantic(format!(
                            "states {r} and {s} share observation {z} but enable different actions"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Convenience builder used by transformations and tests.
#[derive(Clone, Debug, Default)]
pub struct PomdpBuilder {
    initial: usize,
    observation: Vec<usize>,
    num_observations: usize,
    trans: BTreeMap<(usize, String), Vec<(usize, Rational)>>,
    rewards: BTreeMap<(usize, String), Rational>,
    labels: Labels,
}

impl PomdpBuilder {
    pub fn new(observation: Vec<usize>, initial: usize) -> Self {
        let num_observations = observation.iter().map(|z| z + 1).max().unwrap_or(0);
        PomdpBuilder { initial, observation, num_observations, ..Default::default() }
    }

    pub fn num_observations(mut self, m: usize) -> Self {
        self.num_observations = self.num_observations.max(m);
        self
    }

    pub fn trans(mut self, s: usize, action: &str, target: usize, p: Rational) -> Self {
        self.add_trans(s, action, target, p);
        self
    }

    pub fn add_trans(&mut self, s: usize, action: &str, target: usize, p: Rational) {
        let row = self.trans.entry((s, action.to_string())).or_default();
        match row.iter_mut().find(|(t, _)| *t == target) {
            Some(entry) => entry.1 += p,
            None => row.push((target, p)),
        }
    }

    pub fn reward(mut self, s: usize, action: &str, r: Rational) -> Self {
        self.add_reward(s, action, r);
        self
    }

    pub fn add_reward(&mut self, s: usize, action: &str, r: Rational) {
        self.rewards.insert((s, action.to_string()), r);
    }

    pub fn label(mut self, name: &str, states: &[usize]) -> Self {
        self.labels.entry(name.to_string()).or_default().extend(states.iter().copied());
        self
    }

    pub fn add_label(&mut self, name: &str, s: usize) {
        self.labels.entry(name.to_string()).or_default().insert(s);
    }

    pub fn build(self) -> Result<Pomdp> {
        let n = self.observation.len();
        let action_set: BTreeSet<&String> = self.trans.keys().map(|(_, a)| a).collect();
        let actions: Vec<String> = action_set.into_iter().cloned().collect();
        let mut choices: Vec<Vec<Choice>> = vec![Vec::new(); n];
        for ((s, a), mut succ) in self.trans {
            if s >= n {
                return Err(Error::semantic(format!("transition from unknown state {s}")));
            }
            succ.retain(|(_, p)| !p.is_zero());
            succ.sort_by_key(|&(t, _)| t);
            let action = actions.binary_search(&a).expect("action collected");
            let reward = self.rewards.get(&(s, a.clone())).cloned().unwrap_or_else(Rational::zero);
            choices[s].push(Choice { action, successors: succ, reward });
        }
        for (s, a) in self.rewards.keys() {
            if *s >= n || !actions.contains(a) || choices[*s].iter().all(|c| actions[c.action] != *a) {
                return Err(Error::semantic(format!("reward for state {s}, action {a} without transitions")));
            }
        }
        for c in &mut choices {
            c.sort_by_key(|c| c.action);
        }
        let pomdp = Pomdp {
            mdp: Mdp { initial: self.initial, actions, choices, labels: self.labels },
            num_observations: self.num_observations,
            observation: self.observation,
        };
        pomdp.validate()?;
        Ok(pomdp)
    }
}

/// Builds a chain from `(source, target, weight)` triples, merging duplicates.
pub fn chain_from_edges<W: Clone + Default + std::ops::AddAssign + PartialEq>(
    n: usize,
    initial: usize,
    edges: impl IntoIterator<Item = (usize, usize, W)>,
    labels: Labels,
) -> Chain<W> {
    let mut rows: Vec<BTreeMap<usize, W>> = vec![BTreeMap::new(); n];
    for (s, t, w) in edges {
        *rows[s].entry(t).or_default() += w;
    }
    let zero = W::default();
    Chain {
        initial,
        transitions: rows
            .into_iter()
            .map(|r| r.into_iter().filter(|(_, w)| *w != zero).collect())
            .collect(),
        rewards: vec![W::default(); n],
        labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::rational::frac;

    #[test]
    fn builder_rejects_inconsistent_observations() {
        let err = PomdpBuilder::new(vec![0, 0, 1], 0)
            .trans(0, "a", 2, frac(1, 1))
            .trans(1, "b", 2, frac(1, 1))
            .trans(2, "a", 2, frac(1, 1))
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("states 0 and 1"), "{err}");
    }

    #[test]
    fn builder_rejects_deadlock_and_bad_sums() {
        let err = PomdpBuilder::new(vec![0, 0], 0).trans(0, "a", 1, frac(1, 1)).build().unwrap_err();
        assert!(err.to_string().contains("deadlock"));
        let err = PomdpBuilder::new(vec![0], 0).trans(0, "a", 0, frac(1, 2)).build().unwrap_err();
        assert!(err.to_string().contains("sum to 1/2"));
    }

    #[test]
    fn simple_entries_are_classified() {
        let p = Polynomial::var(Var(0));
        assert_eq!(simple_entry(&p), Some(SimpleEntry::Param(Var(0))));
        assert_eq!(simple_entry(&Polynomial::one_minus_sum([Var(0)])), Some(SimpleEntry::OneMinus(Var(0))));
        assert_eq!(simple_entry(&p.scale(&frac(1, 2))), None);
        assert_eq!(simple_entry(&Polynomial::constant(frac(1, 3))), Some(SimpleEntry::Constant(frac(1, 3))));
    }
}
