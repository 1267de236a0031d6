//! Normal forms of POMDPs: binary, simple, and intermediate-state insertion.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::models::model::{Pomdp, PomdpBuilder};
use crate::models::rational::Rational;

/// Description of every observation of a transformed POMDP in terms of the
/// observations of its input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub observations: Vec<String>,
}

impl Provenance {
    /// Identity provenance: observation `z` is named `z`.
    pub fn identity(m: &Pomdp) -> Self {
        Provenance { observations: (0..m.num_observations).map(|z| z.to_string()).collect() }
    }

    fn extend(base: &Provenance, fresh: &[(usize, &str, usize)]) -> Self {
        let mut observations = base.observations.clone();
        for (z, tag, i) in fresh {
            observations.push(format!("({}, {tag}, {i})", base.observations[*z]));
        }
        Provenance { observations }
    }

    /// Provenance of applying a transformation with provenance `later` to
    /// the output of this one.
    pub fn then(&self, later: &Provenance) -> Provenance {
        let resolve = |z: &str| z.parse::<usize>().ok().and_then(|z| self.observations.get(z)).cloned();
        let observations = later
            .observations
            .iter()
            .map(|name| {
                if let Some(n) = resolve(name) {
                    return n;
                }
                if let Some((head, tail)) = name.strip_prefix('(').and_then(|r| r.split_once(',')) {
                    if let Some(n) = resolve(head) {
                        return format!("({n},{tail}");
                    }
                }
                name.clone()
            })
            .collect();
        Provenance { observations }
    }

    /// Header comment lines, one per observation.
    pub fn header(&self) -> String {
        self.observations.iter().enumerate().map(|(i, n)| format!("# observation {i} = {n}\n")).collect()
    }
}

/// A label not yet in `taken`, obtained by appending underscores.
fn fresh_label(base: String, taken: &BTreeSet<String>) -> String {
    let mut label = base;
    while taken.contains(&label) {
        label.push('_');
    }
    label
}

fn copy_labels(b: &mut PomdpBuilder, m: &Pomdp) {
    for (name, set) in &m.mdp.labels {
        for &s in set {
            b.add_label(name, s);
        }
    }
}

fn builder_with_observations(m: &Pomdp, extra: &[usize], initial: usize) -> PomdpBuilder {
    let mut obs = m.observation.clone();
    obs.extend_from_slice(extra);
    PomdpBuilder::new(obs, initial)
}

fn finish(b: PomdpBuilder, m: &Pomdp) -> Result<Pomdp> {
    let mut out = b.build()?;
    for name in m.mdp.labels.keys() {
        out.mdp.labels.entry(name.clone()).or_default();
    }
    Ok(out)
}

/// Splits states with more than two actions into chains of binary choices.
///
/// A state with actions `a_1 < … < a_m` keeps `a_1` and a fresh action
/// leading to an auxiliary state, which in turn offers `a_2` and the next
/// auxiliary action, and so on; the last auxiliary state offers `a_{m-1}`
/// and `a_m`. Auxiliary states at depth `d` below observation `z` share the
/// fresh observation `(z, binary, d)`.
pub fn make_binary(m: &Pomdp) -> Result<(Pomdp, Provenance)> {
    let acts = m.observation_actions();
    let mut taken: BTreeSet<String> = m.actions().iter().cloned().collect();
    // Fresh observation and auxiliary action label per (observation, depth).
    let mut fresh_obs: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut aux_label: BTreeMap<(usize, usize), String> = BTreeMap::new();
    for z in m.used_observations() {
        let count = acts[z].len();
        for d in 1..count.saturating_sub(1) {
            let id = m.num_observations + fresh_obs.len();
            fresh_obs.insert((z, d), id);
            let label = fresh_label(format!("aux_z{z}_{d}"), &taken);
            taken.insert(label.clone());
            aux_label.insert((z, d), label);
        }
    }
    if fresh_obs.is_empty() {
        return Ok((m.clone(), Provenance::identity(m)));
    }
    // Auxiliary states in order of (state, depth).
    let mut aux_state: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut extra_obs = Vec::new();
    for s in 0..m.num_states() {
        let z = m.observation[s];
        for d in 1..acts[z].len().saturating_sub(1) {
            aux_state.insert((s, d), m.num_states() + extra_obs.len());
            extra_obs.push(fresh_obs[&(z, d)]);
        }
    }
    let mut b = builder_with_observations(m, &extra_obs, m.mdp.initial)
        .num_observations(m.num_observations + fresh_obs.len());
    for s in 0..m.num_states() {
        let z = m.observation[s];
        let choices = &m.mdp.choices[s];
        let count = choices.len();
        let place = |b: &mut PomdpBuilder, at: usize, i: usize| {
            let c = &choices[i];
            let label = &m.actions()[c.action];
            for (t, p) in &c.successors {
                b.add_trans(at, label, *t, p.clone());
            }
            if !c.reward.is_zero() {
                b.add_reward(at, label, c.reward.clone());
            }
        };
        if count <= 2 {
            for i in 0..count {
                place(&mut b, s, i);
            }
            continue;
        }
        let mut at = s;
        for d in 0..count - 2 {
            place(&mut b, at, d);
            let next = aux_state[&(s, d + 1)];
            b.add_trans(at, &aux_label[&(z, d + 1)], next, Rational::one());
            at = next;
        }
        place(&mut b, at, count - 2);
        place(&mut b, at, count - 1);
    }
    copy_labels(&mut b, m);
    let fresh: Vec<(usize, &str, usize)> = fresh_obs.keys().map(|&(z, d)| (z, "binary", d)).collect();
    Ok((finish(b, m)?, Provenance::extend(&Provenance::identity(m), &fresh)))
}

fn is_dirac(successors: &[(usize, Rational)]) -> bool {
    successors.len() == 1
}

/// Makes every outcome of a two-action state deterministic by delaying the
/// probabilistic branching to an auxiliary single-action state. Auxiliary
/// states below observation `z` share the fresh observation `(z, simple, 0)`.
pub fn make_simple(m: &Pomdp) -> Result<(Pomdp, Provenance)> {
    if m.mdp.choices.iter().any(|c| c.len() > 2) {
        return Err(Error::Unsupported("make_simple needs a binary POMDP; apply make_binary first".into()));
    }
    let needs = |s: usize| m.mdp.choices[s].len() == 2 && m.mdp.choices[s].iter().any(|c| !is_dirac(&c.successors));
    let sources: BTreeSet<usize> = (0..m.num_states()).filter(|&s| needs(s)).map(|s| m.observation[s]).collect();
    let fresh_obs: BTreeMap<usize, usize> =
        sources.into_iter().enumerate().map(|(i, z)| (z, m.num_observations + i)).collect();
    if fresh_obs.is_empty() {
        return Ok((m.clone(), Provenance::identity(m)));
    }
    let taken: BTreeSet<String> = m.actions().iter().cloned().collect();
    let tau = fresh_label("tau".into(), &taken);
    let mut aux: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut extra_obs = Vec::new();
    for s in 0..m.num_states() {
        if needs(s) {
            for (i, c) in m.mdp.choices[s].iter().enumerate() {
                if !is_dirac(&c.successors) {
                    aux.insert((s, i), m.num_states() + extra_obs.len());
                    extra_obs.push(fresh_obs[&m.observation[s]]);
                }
            }
        }
    }
    let mut b = builder_with_observations(m, &extra_obs, m.mdp.initial)
        .num_observations(m.num_observations + fresh_obs.len());
    for s in 0..m.num_states() {
        for (i, c) in m.mdp.choices[s].iter().enumerate() {
            let label = &m.actions()[c.action];
            if !c.reward.is_zero() {
                b.add_reward(s, label, c.reward.clone());
            }
            match aux.get(&(s, i)) {
                Some(&x) => {
                    b.add_trans(s, label, x, Rational::one());
                    for (t, p) in &c.successors {
                        b.add_trans(x, &tau, *t, p.clone());
                    }
                }
                None => {
                    for (t, p) in &c.successors {
                        b.add_trans(s, label, *t, p.clone());
                    }
                }
            }
        }
    }
    copy_labels(&mut b, m);
    let fresh: Vec<(usize, &str, usize)> = fresh_obs.keys().map(|&z| (z, "simple", 0)).collect();
    Ok((finish(b, m)?, Provenance::extend(&Provenance::identity(m), &fresh)))
}

/// Routes every transition through an intermediate state that reveals the
/// successor's observation.
///
/// For each state `s`, action `a` and observation `z'` among the successors,
/// a fresh state with a single action `tau` carries the normalized part of
/// `P(s, a, ·)` on states observed as `z'`. Intermediate states carry the
/// observation `(z', a)`, so a controller updating its memory there sees
/// the next observation together with the action just played.
pub fn insert_intermediate_states(m: &Pomdp) -> Result<(Pomdp, Provenance)> {
    let taken: BTreeSet<String> = m.actions().iter().cloned().collect();
    let tau = fresh_label("tau".into(), &taken);
    let mut fresh_obs: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut inter: Vec<(usize, usize, usize, Rational, Vec<(usize, Rational)>)> = Vec::new();
    for s in 0..m.num_states() {
        for c in &m.mdp.choices[s] {
            let mut classes: BTreeMap<usize, Vec<(usize, Rational)>> = BTreeMap::new();
            for (t, p) in &c.successors {
                classes.entry(m.observation[*t]).or_default().push((*t, p.clone()));
            }
            for (z2, succ) in classes {
                let mass: Rational = succ.iter().map(|(_, p)| p).sum();
                inter.push((s, c.action, z2, mass, succ));
            }
        }
    }
    for &(_, a, z2, _, _) in &inter {
        let next = m.num_observations + fresh_obs.len();
        fresh_obs.entry((z2, a)).or_insert(next);
    }
    let extra_obs: Vec<usize> = inter.iter().map(|&(_, a, z2, _, _)| fresh_obs[&(z2, a)]).collect();
    let mut b = builder_with_observations(m, &extra_obs, m.mdp.initial)
        .num_observations(m.num_observations + fresh_obs.len());
    for (i, (s, a, _, mass, succ)) in inter.iter().enumerate() {
        let x = m.num_states() + i;
        let label = &m.actions()[*a];
        b.add_trans(*s, label, x, mass.clone());
        for (t, p) in succ {
            b.add_trans(x, &tau, *t, p / mass);
        }
    }
    for s in 0..m.num_states() {
        for c in &m.mdp.choices[s] {
            if !c.reward.is_zero() {
                b.add_reward(s, &m.actions()[c.action], c.reward.clone());
            }
        }
    }
    copy_labels(&mut b, m);
    let mut observations = Provenance::identity(m).observations;
    let mut by_id: Vec<(usize, String)> = fresh_obs
        .iter()
        .map(|(&(z2, a), &id)| (id, format!("({z2}, next, {})", m.actions()[a])))
        .collect();
    by_id.sort();
    observations.extend(by_id.into_iter().map(|(_, n)| n));
    Ok((finish(b, m)?, Provenance { observations }))
}
