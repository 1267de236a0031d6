//! Finite-state controllers and their product with a POMDP.

mod simulate;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num_traits::{One, Zero};

pub use simulate::{simulate, SimulationResult};

use crate::error::{Error, Result};
use crate::models::instantiation::Instantiation;
use crate::models::model::{Chain, Labels, Mc, Pomdp};
use crate::models::rational::{format_rational, parse_rational, Rational};
use crate::transforms::induced::{InducedPmc, Role, Variant};

/// Which memory updates a controller may perform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Topology {
    /// Any node may follow any node.
    #[default]
    Full,
    /// Node `n` is followed by `n` or `n + 1`; the last node only by itself.
    Counter,
}

impl Topology {
    /// Allowed successor nodes of `n`, ascending.
    pub fn targets(self, n: usize, k: usize) -> Vec<usize> {
        match self {
            Topology::Full => (0..k).collect(),
            Topology::Counter if n + 1 < k => vec![n, n + 1],
            Topology::Counter => vec![n],
        }
    }

    /// Node receiving the remaining memory-update mass.
    pub fn remaining(self, n: usize, k: usize) -> usize {
        match self {
            Topology::Full => k - 1,
            Topology::Counter => (n + 1).min(k - 1),
        }
    }

    pub fn parse(s: &str) -> Option<Topology> {
        match s {
            "full" => Some(Topology::Full),
            "counter" => Some(Topology::Counter),
            _ => None,
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Full => "full",
            Topology::Counter => "counter",
        })
    }
}

/// Distribution as `(item, probability)` pairs with positive probabilities.
pub type Dist = Vec<(usize, Rational)>;

/// A `k`-node controller.
///
/// `action_map[n][z]` is the action distribution at node `n` under
/// observation `z`; `memory_update[n][z]` lists for each action in its
/// support the distribution over successor nodes. Entries for observations
/// no state carries are empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fsc {
    pub num_nodes: usize,
    pub initial: usize,
    pub action_map: Vec<Vec<Dist>>,
    pub memory_update: Vec<Vec<Vec<(usize, Dist)>>>,
}

fn sums_to_one(d: &Dist) -> bool {
    d.iter().map(|(_, p)| p).sum::<Rational>().is_one() && d.iter().all(|(_, p)| p > &Rational::zero())
}

impl Fsc {
    /// The controller picking actions and successor nodes uniformly.
    pub fn uniform(m: &Pomdp, k: usize, topology: Topology) -> Fsc {
        let acts = m.observation_actions();
        let mut action_map = vec![vec![Vec::new(); m.num_observations]; k];
        let mut memory_update = vec![vec![Vec::new(); m.num_observations]; k];
        for n in 0..k {
            let targets = topology.targets(n, k);
            let pn = Rational::new(1.into(), (targets.len() as i64).into());
            for z in m.used_observations() {
                let pa = Rational::new(1.into(), (acts[z].len() as i64).into());
                action_map[n][z] = acts[z].iter().map(|&a| (a, pa.clone())).collect();
                memory_update[n][z] =
                    acts[z].iter().map(|&a| (a, targets.iter().map(|&t| (t, pn.clone())).collect())).collect();
            }
        }
        Fsc { num_nodes: k, initial: 0, action_map, memory_update }
    }

    pub fn memory(&self, n: usize, z: usize, a: usize) -> Option<&Dist> {
        self.memory_update[n][z].iter().find(|(b, _)| *b == a).map(|(_, d)| d)
    }

    /// Checks supports, sums and shape against `m`.
    pub fn validate(&self, m: &Pomdp) -> Result<()> {
        let k = self.num_nodes;
        if k == 0 || self.initial >= k {
            return Err(Error::semantic("controller needs at least one node and a valid initial node"));
        }
        if self.action_map.len() != k || self.memory_update.len() != k {
            return Err(Error::semantic("controller tables do not match the node count"));
        }
        let acts = m.observation_actions();
        for n in 0..k {
            if self.action_map[n].len() != m.num_observations || self.memory_update[n].len() != m.num_observations {
                return Err(Error::semantic("controller tables do not match the observation count"));
            }
            for z in m.used_observations() {
                let gamma = &self.action_map[n][z];
                if !sums_to_one(gamma) {
                    return Err(Error::semantic(format!("action distribution at node {n}, observation {z} is not a distribution")));
                }
                for (a, _) in gamma {
                    if !acts[z].contains(a) {
                        return Err(Error::semantic(format!(
                            "action '{}' is not enabled under observation {z}",
                            m.actions()[*a]
                        )));
                    }
                    let delta = self.memory(n, z, *a).ok_or_else(|| {
                        Error::semantic(format!("no memory update at node {n}, observation {z}, action '{}'", m.actions()[*a]))
                    })?;
                    if !sums_to_one(delta) || delta.iter().any(|(t, _)| *t >= k) {
                        return Err(Error::semantic(format!(
                            "memory update at node {n}, observation {z}, action '{}' is not a distribution over nodes",
                            m.actions()[*a]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether every memory update stays within the topology.
    pub fn respects(&self, topology: Topology) -> bool {
        let k = self.num_nodes;
        self.memory_update.iter().enumerate().all(|(n, per_z)| {
            let allowed = topology.targets(n, k);
            per_z.iter().flatten().all(|(_, d)| d.iter().all(|(t, _)| allowed.contains(t)))
        })
    }

    /// The same controller with one extra node that is never entered.
    pub fn lift(&self) -> Fsc {
        let mut out = self.clone();
        let k = self.num_nodes;
        out.num_nodes = k + 1;
        out.action_map.push(self.action_map[0].clone());
        let fresh: Vec<Vec<(usize, Dist)>> = self.action_map[0]
            .iter()
            .map(|gamma| gamma.iter().map(|(a, _)| (*a, vec![(k, Rational::one())])).collect())
            .collect();
        out.memory_update.push(fresh);
        out
    }

    /// Parses the text format; action labels are resolved against `m`.
    pub fn parse<'a>(text: &'a str, m: &Pomdp) -> Result<Fsc> {
        let mut k: Option<usize> = None;
        let mut initial: Option<usize> = None;
        let mut act: BTreeMap<(usize, usize), Dist> = BTreeMap::new();
        let mut upd: BTreeMap<(usize, usize), Vec<(usize, Dist)>> = BTreeMap::new();
        let mut seen_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Syntax {
                line: line_no,
                column: line.find(|c: char| !c.is_whitespace()).unwrap_or(0) + 1,
                message: msg,
            };
            if !seen_header {
                if toks != ["fsc"] {
                    return Err(err("expected header 'fsc'".into()));
                }
                seen_header = true;
                continue;
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(format!("expected a natural number, found '{s}'")));
            let action = |s: &str| {
                m.mdp.action_index(s).ok_or_else(|| err(format!("unknown action '{s}'")))
            };
            let pair = |s: &'a str| -> Result<(&'a str, Rational)> {
                let (a, p) = s.split_once(':').ok_or_else(|| err(format!("expected 'item:probability', found '{s}'")))?;
                let p = parse_rational(p).ok_or_else(|| err(format!("invalid probability '{p}'")))?;
                Ok((a, p))
            };
            match toks[0] {
                "nodes" if toks.len() == 2 => k = Some(num(toks[1])?),
                "init" if toks.len() == 2 => initial = Some(num(toks[1])?),
                "act" if toks.len() >= 4 => {
                    let key = (num(toks[1])?, num(toks[2])?);
                    let mut d = Vec::new();
                    for t in &toks[3..] {
                        let (a, p) = pair(t)?;
                        d.push((action(a)?, p));
                    }
                    d.sort();
                    if act.insert(key, d).is_some() {
                        return Err(err("duplicate 'act' line".into()));
                    }
                }
                "upd" if toks.len() >= 5 => {
                    let key = (num(toks[1])?, num(toks[2])?);
                    let a = action(toks[3])?;
                    let mut d = Vec::new();
                    for t in &toks[4..] {
                        let (n, p) = pair(t)?;
                        d.push((num(n)?, p));
                    }
                    d.sort();
                    let entry = upd.entry(key).or_default();
                    if entry.iter().any(|(b, _)| *b == a) {
                        return Err(err("duplicate 'upd' line".into()));
                    }
                    entry.push((a, d));
                    entry.sort_by_key(|(b, _)| *b);
                }
                other => return Err(err(format!("unexpected line starting with '{other}'"))),
            }
        }
        let k = k.ok_or_else(|| Error::semantic("missing 'nodes' line"))?;
        let initial = initial.ok_or_else(|| Error::semantic("missing 'init' line"))?;
        let zs = m.num_observations;
        let mut fsc = Fsc {
            num_nodes: k,
            initial,
            action_map: vec![vec![Vec::new(); zs]; k],
            memory_update: vec![vec![Vec::new(); zs]; k],
        };
        for ((n, z), d) in act {
            if n >= k || z >= zs {
                return Err(Error::semantic(format!("'act' entry for node {n}, observation {z} out of range")));
            }
            fsc.action_map[n][z] = d;
        }
        for ((n, z), d) in upd {
            if n >= k || z >= zs {
                return Err(Error::semantic(format!("'upd' entry for node {n}, observation {z} out of range")));
            }
            fsc.memory_update[n][z] = d;
        }
        fsc.validate(m)?;
        Ok(fsc)
    }

    pub fn write(&self, m: &Pomdp) -> String {
        let mut s = format!("fsc\nnodes {}\ninit {}\n", self.num_nodes, self.initial);
        for n in 0..self.num_nodes {
            for (z, gamma) in self.action_map[n].iter().enumerate() {
                if gamma.is_empty() {
                    continue;
                }
                s.push_str(&format!("act {n} {z}"));
                for (a, p) in gamma {
                    s.push_str(&format!(" {}:{}", m.actions()[*a], format_rational(p)));
                }
                s.push('\n');
            }
        }
        for n in 0..self.num_nodes {
            for (z, per_a) in self.memory_update[n].iter().enumerate() {
                for (a, d) in per_a {
                    s.push_str(&format!("upd {n} {z} {}", m.actions()[*a]));
                    for (t, p) in d {
                        s.push_str(&format!(" {t}:{}", format_rational(p)));
                    }
                    s.push('\n');
                }
            }
        }
        s
    }
}

/// The reachable part of a POMDP-controller product.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductMc {
    pub mc: Mc,
    /// `(state, node)` of each chain state, sorted by `state·k + node`.
    pub states: Vec<(usize, usize)>,
}

/// Builds the Markov chain induced by running `fsc` on `m`.
pub fn induced_mc(m: &Pomdp, fsc: &Fsc) -> Result<ProductMc> {
    fsc.validate(m)?;
    let k = fsc.num_nodes;
    let start = m.mdp.initial * k + fsc.initial;
    let mut seen = vec![false; m.num_states() * k];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut rows: BTreeMap<usize, (BTreeMap<usize, Rational>, Rational)> = BTreeMap::new();
    while let Some(x) = queue.pop_front() {
        let (s, n) = (x / k, x % k);
        let z = m.observation[s];
        let mut row: BTreeMap<usize, Rational> = BTreeMap::new();
        let mut reward = Rational::zero();
        for (a, pa) in &fsc.action_map[n][z] {
            let c = m.mdp.choice(s, *a).ok_or_else(|| {
                Error::semantic(format!("action '{}' is not enabled in state {s}", m.actions()[*a]))
            })?;
            reward += pa * &c.reward;
            let delta = fsc.memory(n, z, *a).expect("validated");
            for (s2, p) in &c.successors {
                for (n2, pn) in delta {
                    *row.entry(s2 * k + n2).or_insert_with(Rational::zero) += pa * p * pn;
                }
            }
        }
        for &y in row.keys() {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
        rows.insert(x, (row, reward));
    }
    let order: Vec<usize> = rows.keys().copied().collect();
    let index: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let mut transitions = Vec::with_capacity(order.len());
    let mut rewards = Vec::with_capacity(order.len());
    for (_, (row, reward)) in rows {
        transitions.push(row.into_iter().map(|(y, p)| (index[&y], p)).collect());
        rewards.push(reward);
    }
    let mut labels = Labels::new();
    for (name, set) in &m.mdp.labels {
        let lifted = order.iter().enumerate().filter(|(_, &x)| set.contains(&(x / k))).map(|(i, _)| i).collect();
        labels.insert(name.clone(), lifted);
    }
    Ok(ProductMc {
        mc: Chain { initial: index[&start], transitions, rewards, labels },
        states: order.iter().map(|&x| (x / k, x % k)).collect(),
    })
}

/// The controller described by a well-defined instantiation of an induced pMC.
///
/// For the substituted variant the action probability is the sum of the
/// joint coordinates and the memory update their normalization; where an
/// action has probability 0 the update moves to the remaining node.
pub fn fsc_from_instantiation(m: &Pomdp, d: &InducedPmc, u: &Instantiation) -> Result<Fsc> {
    if d.variant == Variant::NextObs {
        return Err(Error::Unsupported("next-observation parameters do not describe an observation-based controller".into()));
    }
    d.pmc.apply(u)?;
    let k = d.k;
    let acts = m.observation_actions();
    let remain = |z: usize| d.remain.action[z].expect("used observation");
    let value = |role: Role, z: usize, n: usize, a: Option<usize>, t: Option<usize>| -> Rational {
        let name = crate::transforms::induced::ParamName { role, observation: z, node: n, action: a, target: t };
        u.get(d.find(&name).expect("parameter exists")).clone()
    };
    let zs = m.num_observations;
    let mut fsc = Fsc {
        num_nodes: k,
        initial: 0,
        action_map: vec![vec![Vec::new(); zs]; k],
        memory_update: vec![vec![Vec::new(); zs]; k],
    };
    for z in m.used_observations() {
        for n in 0..k {
            let targets = d.topology.targets(n, k);
            let rho = d.topology.remaining(n, k);
            let mut gamma: Dist = Vec::new();
            let mut updates: Vec<(usize, Dist)> = Vec::new();
            let joint = |a: usize, t: usize| -> Rational {
                if a == remain(z) && t == rho {
                    let mut rest = Rational::one();
                    for &b in &acts[z] {
                        for &t2 in &targets {
                            if !(b == remain(z) && t2 == rho) {
                                rest -= value(Role::R, z, n, Some(b), Some(t2));
                            }
                        }
                    }
                    rest
                } else {
                    value(Role::R, z, n, Some(a), Some(t))
                }
            };
            for &a in &acts[z] {
                let pa = match d.variant {
                    Variant::Substituted => targets.iter().map(|&t| joint(a, t)).sum(),
                    _ if a == remain(z) => {
                        Rational::one()
                            - acts[z].iter().filter(|&&b| b != remain(z)).map(|&b| value(Role::P, z, n, Some(b), None)).sum::<Rational>()
                    }
                    _ => value(Role::P, z, n, Some(a), None),
                };
                let qa = if d.variant == Variant::ActionRestricted { None } else { Some(a) };
                let mut delta: Dist = Vec::new();
                for &t in &targets {
                    let pt = match d.variant {
                        Variant::Substituted if pa.is_zero() => {
                            if t == rho { Rational::one() } else { Rational::zero() }
                        }
                        Variant::Substituted => joint(a, t) / &pa,
                        _ if t == rho => {
                            Rational::one()
                                - targets.iter().filter(|&&t2| t2 != rho).map(|&t2| value(Role::Q, z, n, qa, Some(t2))).sum::<Rational>()
                        }
                        _ => value(Role::Q, z, n, qa, Some(t)),
                    };
                    if !pt.is_zero() {
                        delta.push((t, pt));
                    }
                }
                if !pa.is_zero() {
                    gamma.push((a, pa));
                    updates.push((a, delta));
                }
            }
            fsc.action_map[n][z] = gamma;
            fsc.memory_update[n][z] = updates;
        }
    }
    Ok(fsc)
}

/// Parameter values of an induced pMC that reproduce `fsc`.
///
/// Memory updates of actions the controller never plays are taken to be
/// the Dirac distribution on the remaining node.
pub fn instantiation_from_fsc(m: &Pomdp, d: &InducedPmc, fsc: &Fsc) -> Result<Instantiation> {
    fsc.validate(m)?;
    if fsc.num_nodes != d.k || fsc.initial != 0 {
        return Err(Error::InvalidArgument("controller does not match the induced pMC's memory bound".into()));
    }
    if !fsc.respects(d.topology) {
        return Err(Error::InvalidArgument(format!("controller does not respect the {} topology", d.topology)));
    }
    let gamma = |n: usize, z: usize, a: usize| -> Rational {
        fsc.action_map[n][z].iter().find(|(b, _)| *b == a).map(|(_, p)| p.clone()).unwrap_or_else(Rational::zero)
    };
    let delta = |n: usize, z: usize, a: usize, t: usize| -> Rational {
        match fsc.memory(n, z, a) {
            Some(dist) => dist.iter().find(|(x, _)| *x == t).map(|(_, p)| p.clone()).unwrap_or_else(Rational::zero),
            None if t == d.topology.remaining(n, d.k) => Rational::one(),
            None => Rational::zero(),
        }
    };
    let mut values = Vec::with_capacity(d.names.len());
    for p in &d.names {
        let (z, n) = (p.observation, p.node);
        let v = match (p.role, d.variant) {
            (Role::P, _) => gamma(n, z, p.action.expect("action parameter")),
            (Role::R, _) => {
                let a = p.action.expect("action");
                gamma(n, z, a) * delta(n, z, a, p.target.expect("target"))
            }
            (Role::Q, Variant::ActionRestricted) => {
                // Shared update: every played action must agree.
                let t = p.target.expect("target");
                let mut shared: Option<Rational> = None;
                for (a, _) in &fsc.action_map[n][z] {
                    let v = delta(n, z, *a, t);
                    match &shared {
                        Some(s) if *s != v => {
                            return Err(Error::InvalidArgument(
                                "controller updates memory differently per action".into(),
                            ))
                        }
                        _ => shared = Some(v),
                    }
                }
                shared.unwrap_or_else(Rational::zero)
            }
            (Role::Q, Variant::NextObs) => {
                return Err(Error::Unsupported("next-observation parameters do not describe an observation-based controller".into()))
            }
            (Role::Q, _) => delta(n, z, p.action.expect("action"), p.target.expect("target")),
        };
        values.push(v);
    }
    Ok(Instantiation::new(values))
}
