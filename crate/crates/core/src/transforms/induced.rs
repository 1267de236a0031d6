//! The pMC whose instantiations are the `k`-node controllers of a POMDP.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fsc::Topology;
use crate::models::model::{Chain, Labels, Pmc, Pomdp};
use crate::models::polynomial::{Polynomial, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Variant {
    /// Separate action (`p`) and memory (`q`) parameters.
    #[default]
    Standard,
    /// One parameter `r` per action and successor node.
    Substituted,
    /// Memory update shared by all actions of an observation and node.
    ActionRestricted,
    /// Memory update keyed by the successor's observation.
    NextObs,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "standard" => Some(Variant::Standard),
            "substituted" => Some(Variant::Substituted),
            "action-restricted" => Some(Variant::ActionRestricted),
            "next-obs" => Some(Variant::NextObs),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Standard => "standard",
            Variant::Substituted => "substituted",
            Variant::ActionRestricted => "action-restricted",
            Variant::NextObs => "next-obs",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Action probability.
    P,
    /// Memory update probability.
    Q,
    /// Joint action and memory update probability.
    R,
}

/// What a parameter of an induced pMC stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamName {
    pub role: Role,
    /// Observation; for memory parameters of the next-observation variant,
    /// the successor's observation.
    pub observation: usize,
    pub node: usize,
    /// Absent only for the shared memory parameters of the action-restricted variant.
    pub action: Option<usize>,
    pub target: Option<usize>,
}

impl ParamName {
    pub fn render(&self, actions: &[String]) -> String {
        let prefix = match self.role {
            Role::P => "p",
            Role::Q => "q",
            Role::R => "r",
        };
        let mut s = format!("{prefix}_z{}_n{}", self.observation, self.node);
        if let Some(a) = self.action {
            s.push('_');
            s.push_str(&actions[a]);
        }
        if let Some(t) = self.target {
            s.push_str(&format!("_m{t}"));
        }
        s
    }
}

/// The action receiving the remaining probability mass at each observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemainMap {
    /// Indexed by observation; `None` for observations no state carries.
    pub action: Vec<Option<usize>>,
}

impl RemainMap {
    /// The last enabled action (in label order) of every observation.
    pub fn last_action(m: &Pomdp) -> Self {
        RemainMap { action: m.observation_actions().iter().map(|a| a.last().copied()).collect() }
    }

    pub fn with(mut self, z: usize, action: usize) -> Self {
        self.action[z] = Some(action);
        self
    }

    fn validate(&self, m: &Pomdp) -> Result<()> {
        let acts = m.observation_actions();
        for z in m.used_observations() {
            match self.action.get(z).copied().flatten() {
                Some(a) if acts[z].contains(&a) => {}
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "remaining action of observation {z} is not enabled there"
                    )))
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InducedOptions {
    pub k: usize,
    pub topology: Topology,
    pub variant: Variant,
    /// Defaults to [`RemainMap::last_action`].
    pub remain: Option<RemainMap>,
}

impl InducedOptions {
    pub fn new(k: usize) -> Self {
        InducedOptions { k, topology: Topology::Full, variant: Variant::Standard, remain: None }
    }

    pub fn topology(mut self, t: Topology) -> Self {
        self.topology = t;
        self
    }

    pub fn variant(mut self, v: Variant) -> Self {
        self.variant = v;
        self
    }

    pub fn remain(mut self, r: RemainMap) -> Self {
        self.remain = Some(r);
        self
    }
}

/// An induced pMC with the meaning of its parameters.
///
/// State `⟨s, n⟩` of the product has index `s·k + n`.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedPmc {
    pub pmc: Pmc,
    pub names: Vec<ParamName>,
    pub k: usize,
    pub topology: Topology,
    pub variant: Variant,
    pub remain: RemainMap,
}

impl InducedPmc {
    pub fn state(&self, s: usize, n: usize) -> usize {
        s * self.k + n
    }

    pub fn product_state(&self, index: usize) -> (usize, usize) {
        (index / self.k, index % self.k)
    }

    /// Index of the parameter with the given meaning.
    pub fn find(&self, name: &ParamName) -> Option<Var> {
        self.names.iter().position(|n| n == name).map(|i| Var(i as u32))
    }
}

struct Table<'a> {
    actions: &'a [String],
    names: Vec<ParamName>,
    index: BTreeMap<(u8, usize, usize, Option<usize>, Option<usize>), Var>,
    groups: Vec<Vec<Var>>,
}

impl<'a> Table<'a> {
    fn new(actions: &'a [String]) -> Self {
        Table { actions, names: Vec::new(), index: BTreeMap::new(), groups: Vec::new() }
    }

    fn key(p: &ParamName) -> (u8, usize, usize, Option<usize>, Option<usize>) {
        (p.role as u8, p.observation, p.node, p.action, p.target)
    }

    fn add(&mut self, p: ParamName) -> Var {
        let v = Var(self.names.len() as u32);
        self.index.insert(Self::key(&p), v);
        self.names.push(p);
        v
    }

    fn add_group(&mut self, members: Vec<ParamName>) {
        let vars: Vec<Var> = members.into_iter().map(|p| self.add(p)).collect();
        if !vars.is_empty() {
            self.groups.push(vars);
        }
    }

    fn get(&self, role: Role, z: usize, n: usize, a: Option<usize>, t: Option<usize>) -> Var {
        let p = ParamName { role, observation: z, node: n, action: a, target: t };
        self.index[&Self::key(&p)]
    }

    fn finish(self) -> (Vec<String>, Vec<ParamName>, Vec<Vec<Var>>) {
        let params = self.names.iter().map(|p| p.render(self.actions)).collect();
        (params, self.names, self.groups)
    }
}

fn pname(role: Role, z: usize, n: usize, a: Option<usize>, t: Option<usize>) -> ParamName {
    ParamName { role, observation: z, node: n, action: a, target: t }
}

/// `x` if `x` is a free coordinate, otherwise one minus the free coordinates.
fn completion(free: &[Var], own: Option<Var>) -> Polynomial {
    match own {
        Some(v) => Polynomial::var(v),
        None => Polynomial::one_minus_sum(free.iter().copied()),
    }
}

/// Builds the induced pMC of `m` for the given options.
pub fn build_induced(m: &Pomdp, opts: &InducedOptions) -> Result<InducedPmc> {
    let k = opts.k;
    if k == 0 {
        return Err(Error::InvalidArgument("memory bound must be at least 1".into()));
    }
    let remain = opts.remain.clone().unwrap_or_else(|| RemainMap::last_action(m));
    remain.validate(m)?;
    let acts = m.observation_actions();
    let used = m.used_observations();
    let topo = opts.topology;
    let rem = |z: usize| remain.action[z].expect("validated");
    let free_targets = |n: usize| -> Vec<usize> {
        let r = topo.remaining(n, k);
        topo.targets(n, k).into_iter().filter(|&t| t != r).collect()
    };

    let mut table = Table::new(m.actions());
    match opts.variant {
        Variant::Standard => {
            for &z in &used {
                for n in 0..k {
                    let ps = acts[z].iter().filter(|&&a| a != rem(z)).map(|&a| pname(Role::P, z, n, Some(a), None)).collect();
                    table.add_group(ps);
                    for &a in &acts[z] {
                        let qs = free_targets(n).into_iter().map(|t| pname(Role::Q, z, n, Some(a), Some(t))).collect();
                        table.add_group(qs);
                    }
                }
            }
        }
        Variant::Substituted => {
            for &z in &used {
                for n in 0..k {
                    let r = topo.remaining(n, k);
                    let mut rs = Vec::new();
                    for &a in &acts[z] {
                        for t in topo.targets(n, k) {
                            if !(a == rem(z) && t == r) {
                                rs.push(pname(Role::R, z, n, Some(a), Some(t)));
                            }
                        }
                    }
                    table.add_group(rs);
                }
            }
        }
        Variant::ActionRestricted => {
            for &z in &used {
                for n in 0..k {
                    let ps = acts[z].iter().filter(|&&a| a != rem(z)).map(|&a| pname(Role::P, z, n, Some(a), None)).collect();
                    table.add_group(ps);
                    let qs = free_targets(n).into_iter().map(|t| pname(Role::Q, z, n, None, Some(t))).collect();
                    table.add_group(qs);
                }
            }
        }
        Variant::NextObs => {
            for &z in &used {
                for n in 0..k {
                    let ps = acts[z].iter().filter(|&&a| a != rem(z)).map(|&a| pname(Role::P, z, n, Some(a), None)).collect();
                    table.add_group(ps);
                }
            }
            let mut triples = std::collections::BTreeSet::new();
            for s in 0..m.num_states() {
                for c in &m.mdp.choices[s] {
                    for (t, _) in &c.successors {
                        triples.insert((m.observation[*t], c.action));
                    }
                }
            }
            let mut keyed: Vec<(usize, usize, usize)> = Vec::new();
            for &(z2, a) in &triples {
                for n in 0..k {
                    keyed.push((z2, n, a));
                }
            }
            keyed.sort();
            for (z2, n, a) in keyed {
                let qs = free_targets(n).into_iter().map(|t| pname(Role::Q, z2, n, Some(a), Some(t))).collect();
                table.add_group(qs);
            }
        }
    }

    let ns = m.num_states();
    let mut rows: Vec<BTreeMap<usize, Polynomial>> = vec![BTreeMap::new(); ns * k];
    let mut rewards = vec![Polynomial::zero(); ns * k];
    for s in 0..ns {
        let z = m.observation[s];
        let choices = &m.mdp.choices[s];
        for n in 0..k {
            let row = &mut rows[s * k + n];
            let targets = topo.targets(n, k);
            let r = topo.remaining(n, k);
            let free = free_targets(n);
            let p_vars: Vec<Var> = if opts.variant == Variant::Substituted {
                Vec::new()
            } else {
                acts[z].iter().filter(|&&a| a != rem(z)).map(|&a| table.get(Role::P, z, n, Some(a), None)).collect()
            };
            let act_factor = |a: usize| -> Polynomial {
                if a == rem(z) {
                    completion(&p_vars, None)
                } else {
                    completion(&p_vars, Some(table.get(Role::P, z, n, Some(a), None)))
                }
            };
            let mut reward = Polynomial::zero();
            for c in choices {
                let a = c.action;
                match opts.variant {
                    Variant::Substituted => {
                        let all: Vec<Var> = acts[z]
                            .iter()
                            .flat_map(|&b| targets.iter().map(move |&t| (b, t)))
                            .filter(|&(b, t)| !(b == rem(z) && t == r))
                            .map(|(b, t)| table.get(Role::R, z, n, Some(b), Some(t)))
                            .collect();
                        let mut action_mass = Polynomial::zero();
                        for &t in &targets {
                            let own = if a == rem(z) && t == r { None } else { Some(table.get(Role::R, z, n, Some(a), Some(t))) };
                            let joint = completion(&all, own);
                            action_mass = &action_mass + &joint;
                            for (s2, prob) in &c.successors {
                                let e = row.entry(s2 * k + t).or_insert_with(Polynomial::zero);
                                *e = &*e + &joint.scale(prob);
                            }
                        }
                        if !c.reward.is_zero() {
                            reward = &reward + &action_mass.scale(&c.reward);
                        }
                    }
                    _ => {
                        let af = act_factor(a);
                        for (s2, prob) in &c.successors {
                            let (qz, qa) = match opts.variant {
                                Variant::NextObs => (m.observation[*s2], Some(a)),
                                Variant::ActionRestricted => (z, None),
                                _ => (z, Some(a)),
                            };
                            let q_vars: Vec<Var> = free.iter().map(|&t| table.get(Role::Q, qz, n, qa, Some(t))).collect();
                            for &t in &targets {
                                let own = if t == r { None } else { Some(table.get(Role::Q, qz, n, qa, Some(t))) };
                                let mf = completion(&q_vars, own);
                                let h = (&af * &mf).scale(prob);
                                let e = row.entry(s2 * k + t).or_insert_with(Polynomial::zero);
                                *e = &*e + &h;
                            }
                        }
                        if !c.reward.is_zero() {
                            reward = &reward + &af.scale(&c.reward);
                        }
                    }
                }
            }
            rewards[s * k + n] = reward;
        }
    }
    let transitions = rows
        .into_iter()
        .map(|r| r.into_iter().filter(|(_, f)| !f.is_zero()).collect())
        .collect();
    let mut labels = Labels::new();
    for (name, set) in &m.mdp.labels {
        labels.insert(name.clone(), set.iter().flat_map(|&s| (0..k).map(move |n| s * k + n)).collect());
    }
    let (params, names, groups) = table.finish();
    let pmc = Pmc {
        chain: Chain { initial: m.mdp.initial * k, transitions, rewards, labels },
        params,
        groups,
    };
    Ok(InducedPmc { pmc, names, k, topology: topo, variant: opts.variant, remain })
}

/// Standard induced pMC with the default remaining actions.
pub fn induced_pmc(m: &Pomdp, k: usize, topology: Topology) -> Result<InducedPmc> {
    build_induced(m, &InducedOptions::new(k).topology(topology))
}

pub fn substituted_pmc(m: &Pomdp, k: usize) -> Result<InducedPmc> {
    build_induced(m, &InducedOptions::new(k).variant(Variant::Substituted))
}

pub fn action_restricted_pmc(m: &Pomdp, k: usize) -> Result<InducedPmc> {
    build_induced(m, &InducedOptions::new(k).variant(Variant::ActionRestricted))
}

pub fn next_obs_pmc(m: &Pomdp, k: usize) -> Result<InducedPmc> {
    build_induced(m, &InducedOptions::new(k).variant(Variant::NextObs))
}

/// Number of parameters of the standard induced pMC with full topology.
pub fn param_count(m: &Pomdp, k: usize) -> usize {
    let acts = m.observation_actions();
    m.used_observations()
        .into_iter()
        .map(|z| {
            let a = acts[z].len();
            k * (a - 1) + k * (k - 1) * a
        })
        .sum()
}
