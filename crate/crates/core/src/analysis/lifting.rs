//! Sound bounds over parameter regions by relaxing parameter dependencies.
//!
//! Every row of the pMC becomes an independent choice of parameter values
//! from the region (restricted so that each group still sums to at most 1).
//! Solving the resulting robust MDP for both players bounds the value of
//! every instantiation in the region.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::mc::{expected_reward_values, reach_avoid_values, spec_masks};
use crate::error::{Error, Result};
use crate::models::model::{Chain, Mc, Pmc};
use crate::models::polynomial::Polynomial;
use crate::models::rational::{format_rational, parse_rational, Rational};
use crate::models::spec::{Comparison, SpecKind, Specification, Value};

/// A box of closed intervals, one per parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub lo: Vec<Rational>,
    pub hi: Vec<Rational>,
}

impl Region {
    pub fn new(lo: Vec<Rational>, hi: Vec<Rational>) -> Self {
        Region { lo, hi }
    }

    /// The same interval for every parameter.
    pub fn uniform(n: usize, lo: Rational, hi: Rational) -> Self {
        Region { lo: vec![lo; n], hi: vec![hi; n] }
    }

    pub fn point(values: &[Rational]) -> Self {
        Region { lo: values.to_vec(), hi: values.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, u: &[Rational]) -> bool {
        u.len() == self.dim() && u.iter().enumerate().all(|(i, v)| &self.lo[i] <= v && v <= &self.hi[i])
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Splits the widest dimension (lowest index on ties) in half.
    pub fn split(&self) -> (Region, Region) {
        let mut best = 0;
        for i in 1..self.dim() {
            if &self.hi[i] - &self.lo[i] > &self.hi[best] - &self.lo[best] {
                best = i;
            }
        }
        let mid = (&self.lo[best] + &self.hi[best]) / Rational::from_integer(2.into());
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[best] = mid.clone();
        right.lo[best] = mid;
        (left, right)
    }

    /// Parses `name in [lo, hi]` lines; every parameter must be covered once.
    pub fn parse(text: &str, params: &[String]) -> Result<Region> {
        let mut lo: Vec<Option<Rational>> = vec![None; params.len()];
        let mut hi: Vec<Option<Rational>> = vec![None; params.len()];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::semantic_at(i + 1, m.to_string());
            let (name, rest) = line.split_once(" in ").ok_or_else(|| err("expected 'name in [lo, hi]'"))?;
            let name = name.trim();
            let rest = rest.trim();
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| err("expected an interval '[lo, hi]'"))?;
            let (a, b) = inner.split_once(',').ok_or_else(|| err("expected an interval '[lo, hi]'"))?;
            let a = parse_rational(a.trim()).ok_or_else(|| err("invalid lower bound"))?;
            let b = parse_rational(b.trim()).ok_or_else(|| err("invalid upper bound"))?;
            let idx = params
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| err(&format!("unknown parameter '{name}'")))?;
            if lo[idx].is_some() {
                return Err(err(&format!("duplicate interval for '{name}'")));
            }
            lo[idx] = Some(a);
            hi[idx] = Some(b);
        }
        let mut out = Region { lo: Vec::new(), hi: Vec::new() };
        for (i, name) in params.iter().enumerate() {
            out.lo.push(lo[i].take().ok_or_else(|| Error::MissingParameter(name.clone()))?);
            out.hi.push(hi[i].take().expect("set with lo"));
        }
        Ok(out)
    }

    pub fn write(&self, params: &[String]) -> String {
        let mut s = String::new();
        for (i, p) in params.iter().enumerate() {
            s.push_str(&format!("{p} in [{}, {}]\n", format_rational(&self.lo[i]), format_rational(&self.hi[i])));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Value,
    pub upper: Value,
}

/// Affine function `constant + Σ coeff·x`.
#[derive(Clone, Debug, Default)]
struct Affine {
    constant: Rational,
    coeffs: BTreeMap<u32, Rational>,
}

impl Affine {
    fn of(p: &Polynomial) -> Option<Affine> {
        if !p.is_affine() {
            return None;
        }
        let mut a = Affine::default();
        for (m, c) in p.terms() {
            match m.pairs() {
                [] => a.constant = c.clone(),
                [(v, 1)] => {
                    a.coeffs.insert(*v, c.clone());
                }
                _ => return None,
            }
        }
        Some(a)
    }

    fn add_scaled(&mut self, other: &Affine, w: &Rational) {
        if w.is_zero() {
            return;
        }
        self.constant += &other.constant * w;
        for (v, c) in &other.coeffs {
            let e = self.coeffs.entry(*v).or_insert_with(Rational::zero);
            *e += c * w;
        }
    }

    fn eval(&self, x: &BTreeMap<u32, Rational>) -> Rational {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * &x[v];
        }
        acc
    }
}

struct Row {
    entries: Vec<(usize, Affine)>,
    reward: Affine,
}

/// The relaxed model: per-row affine entries plus the region geometry.
struct Relaxed<'a> {
    rows: Vec<Row>,
    region: &'a Region,
    /// Group index of each parameter, if grouped.
    group_of: Vec<Option<usize>>,
    /// `1 - Σ lo` over the members of each group.
    budget: Vec<Rational>,
}

impl<'a> Relaxed<'a> {
    fn new(d: &Pmc, region: &'a Region) -> Result<Self> {
        let np = d.num_params();
        if region.dim() != np {
            return Err(Error::Region(format!("region has {} dimensions, the pMC {} parameters", region.dim(), np)));
        }
        for i in 0..np {
            let (lo, hi) = (&region.lo[i], &region.hi[i]);
            if lo > hi {
                return Err(Error::Region(format!("empty interval for '{}'", d.params[i])));
            }
            if !lo.is_positive() || hi >= &Rational::one() {
                return Err(Error::Region(format!("interval for '{}' is not inside (0, 1)", d.params[i])));
            }
        }
        let mut group_of = vec![None; np];
        let mut budget = Vec::new();
        for (g, members) in d.groups.iter().enumerate() {
            let mut b = Rational::one();
            for v in members {
                if group_of[v.index()].is_some() {
                    return Err(Error::Unsupported(format!("parameter '{}' is in several groups", d.params[v.index()])));
                }
                group_of[v.index()] = Some(g);
                b -= &region.lo[v.index()];
            }
            if b.is_negative() {
                return Err(Error::Region(format!("lower bounds of group {g} sum to more than 1")));
            }
            budget.push(b);
        }
        let mut rows = Vec::with_capacity(d.num_states());
        for (s, row) in d.chain.transitions.iter().enumerate() {
            let entries = row
                .iter()
                .map(|(t, f)| {
                    Affine::of(f)
                        .map(|a| (*t, a))
                        .ok_or_else(|| Error::Unsupported(format!("transition {s} -> {t} is not affine in the parameters")))
                })
                .collect::<Result<Vec<_>>>()?;
            let reward = Affine::of(&d.chain.rewards[s])
                .ok_or_else(|| Error::Unsupported(format!("reward of state {s} is not affine in the parameters")))?;
            rows.push(Row { entries, reward });
        }
        let relaxed = Relaxed { rows, region, group_of, budget };
        for (s, row) in relaxed.rows.iter().enumerate() {
            for (t, a) in &row.entries {
                let (min, _) = relaxed.optimize(a, false);
                if min.is_negative() {
                    return Err(Error::Region(format!("transition {s} -> {t} can become negative in the region")));
                }
            }
        }
        Ok(relaxed)
    }

    /// Optimum of an affine objective over the feasible row-local parameter
    /// values, together with a maximizing (or minimizing) assignment.
    fn optimize(&self, obj: &Affine, maximize: bool) -> (Rational, BTreeMap<u32, Rational>) {
        let r = self.region;
        let mut x: BTreeMap<u32, Rational> = BTreeMap::new();
        let mut grouped: BTreeMap<usize, Vec<(u32, Rational)>> = BTreeMap::new();
        for (v, c) in &obj.coeffs {
            let i = *v as usize;
            let gain = if maximize { c.clone() } else { -c.clone() };
            match self.group_of[i] {
                Some(g) => grouped.entry(g).or_default().push((*v, gain)),
                None => {
                    let value = if gain.is_positive() { r.hi[i].clone() } else { r.lo[i].clone() };
                    x.insert(*v, value);
                }
            }
        }
        for (g, mut members) in grouped {
            // Highest gain first; stable sort keeps lower indices ahead on ties.
            members.sort_by(|a, b| b.1.cmp(&a.1));
            let mut budget = self.budget[g].clone();
            for (v, gain) in members {
                let i = v as usize;
                let mut value = r.lo[i].clone();
                if gain.is_positive() && budget.is_positive() {
                    let room = &r.hi[i] - &r.lo[i];
                    let take = if room < budget { room } else { budget.clone() };
                    budget -= &take;
                    value += take;
                }
                x.insert(v, value);
            }
        }
        (obj.eval(&x), x)
    }

    fn objective(&self, s: usize, v: &[Rational], with_reward: bool) -> Affine {
        let row = &self.rows[s];
        let mut obj = if with_reward { row.reward.clone() } else { Affine::default() };
        for (t, a) in &row.entries {
            obj.add_scaled(a, &v[*t]);
            for var in a.coeffs.keys() {
                obj.coeffs.entry(*var).or_insert_with(Rational::zero);
            }
        }
        for var in row.reward.coeffs.keys() {
            obj.coeffs.entry(*var).or_insert_with(Rational::zero);
        }
        obj
    }

    /// Concrete row distribution and reward at an assignment.
    fn vertex(&self, s: usize, x: &BTreeMap<u32, Rational>) -> (Vec<(usize, Rational)>, Rational) {
        let row = &self.rows[s];
        let dist = row
            .entries
            .iter()
            .map(|(t, a)| (*t, a.eval(x)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        (dist, row.reward.eval(x))
    }

    fn indicator_mass(&self, s: usize, set: &[bool], maximize: bool) -> Rational {
        let v: Vec<Rational> = set.iter().map(|&b| if b { Rational::one() } else { Rational::zero() }).collect();
        self.optimize(&self.objective(s, &v, false), maximize).0
    }

    /// States from which every choice reaches `target` with positive probability.
    fn forall_reach(&self, target: &[bool], through: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut r = target.to_vec();
        loop {
            let mut changed = false;
            for s in 0..r.len() {
                if !r[s] && through(s) && self.indicator_mass(s, &r, false).is_positive() {
                    r[s] = true;
                    changed = true;
                }
            }
            if !changed {
                return r;
            }
        }
    }

    /// States from which some choice reaches `target` with positive probability.
    fn exists_reach(&self, target: &[bool], through: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut r = target.to_vec();
        loop {
            let mut changed = false;
            for s in 0..r.len() {
                if !r[s] && through(s) && self.indicator_mass(s, &r, true).is_positive() {
                    r[s] = true;
                    changed = true;
                }
            }
            if !changed {
                return r;
            }
        }
    }

    fn chain(&self, d: &Pmc, choice: &[BTreeMap<u32, Rational>]) -> Mc {
        let mut transitions = Vec::with_capacity(self.rows.len());
        let mut rewards = Vec::with_capacity(self.rows.len());
        for (s, x) in choice.iter().enumerate() {
            let (dist, rew) = self.vertex(s, x);
            transitions.push(dist);
            rewards.push(rew);
        }
        Chain { initial: d.chain.initial, transitions, rewards, labels: d.chain.labels.clone() }
    }

    /// Robust policy iteration on the states in `active`; `fixed` values
    /// elsewhere come from the evaluation of the chosen rows.
    fn iterate(
        &self,
        d: &Pmc,
        active: &[bool],
        mut choice: Vec<BTreeMap<u32, Rational>>,
        maximize: bool,
        with_reward: bool,
        evaluate: impl Fn(&Mc) -> Vec<Rational>,
    ) -> Vec<Rational> {
        loop {
            let v = evaluate(&self.chain(d, &choice));
            let mut changed = false;
            for s in 0..self.rows.len() {
                if !active[s] {
                    continue;
                }
                let obj = self.objective(s, &v, with_reward);
                let current = obj.eval(&choice[s]);
                let (best, x) = self.optimize(&obj, maximize);
                let better = if maximize { best > current } else { best < current };
                if better {
                    choice[s] = x;
                    changed = true;
                }
            }
            if !changed {
                return v;
            }
        }
    }

    fn initial_choice(&self, maximize: bool) -> Vec<BTreeMap<u32, Rational>> {
        (0..self.rows.len()).map(|s| self.optimize(&self.objective(s, &vec![Rational::zero(); self.rows.len()], true), maximize).1).collect()
    }

    fn reach_bound(&self, d: &Pmc, goal: &[bool], bad: &[bool], maximize: bool) -> Rational {
        let n = self.rows.len();
        let through = |s: usize| !bad[s] && !goal[s];
        let zero: Vec<bool> = if maximize {
            self.exists_reach(goal, through).iter().map(|r| !r).collect()
        } else {
            self.forall_reach(goal, through).iter().map(|r| !r).collect()
        };
        let init = d.chain.initial;
        if goal[init] {
            return Rational::one();
        }
        if zero[init] {
            return Rational::zero();
        }
        let mut choice = self.initial_choice(maximize);
        if !maximize {
            // Keep zero states inside the zero set.
            let nonzero: Vec<bool> = zero.iter().map(|z| !z).collect();
            for s in 0..n {
                if zero[s] && through(s) {
                    let v: Vec<Rational> = nonzero.iter().map(|&b| if b { Rational::one() } else { Rational::zero() }).collect();
                    choice[s] = self.optimize(&self.objective(s, &v, false), false).1;
                }
            }
        }
        let active: Vec<bool> = (0..n).map(|s| !zero[s] && through(s)).collect();
        let v = self.iterate(d, &active, choice, maximize, false, |mc| {
            let mut v = reach_avoid_values(mc, goal, bad);
            for s in 0..n {
                if zero[s] {
                    v[s] = Rational::zero();
                }
            }
            v
        });
        v[init].clone()
    }

    fn reward_bounds(&self, d: &Pmc, goal: &[bool]) -> Bounds {
        let n = self.rows.len();
        let init = d.chain.initial;
        if goal[init] {
            return Bounds { lower: Value::Finite(Rational::zero()), upper: Value::Finite(Rational::zero()) };
        }
        let not_goal = |s: usize| !goal[s];
        let can_avoid: Vec<bool> = self.forall_reach(goal, not_goal).iter().map(|r| !r).collect();
        let may_fail = self.exists_reach(&can_avoid, not_goal);
        if may_fail[init] {
            return Bounds { lower: Value::Finite(Rational::zero()), upper: Value::Infinite };
        }
        let active: Vec<bool> = (0..n).map(|s| !goal[s] && !may_fail[s]).collect();
        let eval = |mc: &Mc| expected_reward_values(mc, goal).into_iter().map(|x| x.unwrap_or_else(Rational::zero)).collect();
        let lo = self.iterate(d, &active, self.initial_choice(false), false, true, eval);
        let hi = self.iterate(d, &active, self.initial_choice(true), true, true, eval);
        Bounds { lower: Value::Finite(lo[init].clone()), upper: Value::Finite(hi[init].clone()) }
    }
}

/// Lower and upper bounds on the value of `spec` over every instantiation
/// in `region` whose rows are well-defined.
pub fn region_bounds(d: &Pmc, spec: &Specification, region: &Region) -> Result<Bounds> {
    let relaxed = Relaxed::new(d, region)?;
    let (goal, bad) = spec_masks(&d.chain, spec)?;
    Ok(match spec.kind {
        SpecKind::ReachAvoid { .. } => Bounds {
            lower: Value::Finite(relaxed.reach_bound(d, &goal, &bad, false)),
            upper: Value::Finite(relaxed.reach_bound(d, &goal, &bad, true)),
        },
        SpecKind::ExpectedReward { .. } => relaxed.reward_bounds(d, &goal),
    })
}

/// Whether the bounds exclude every satisfying instantiation.
pub fn excludes(spec: &Specification, bounds: &Bounds) -> bool {
    let t = Value::Finite(spec.threshold.clone());
    match spec.comparison {
        Comparison::Greater => bounds.upper <= t,
        Comparison::GreaterEq => bounds.upper < t,
        Comparison::Less => bounds.lower >= t,
        Comparison::LessEq => bounds.lower > t,
    }
}

/// Whether the bounds show that every instantiation satisfies the spec.
pub fn certifies(spec: &Specification, bounds: &Bounds) -> bool {
    spec.satisfied(&bounds.lower) && spec.satisfied(&bounds.upper)
}

#[derive(Clone, Debug, PartialEq)]
pub enum AbsenceResult {
    /// No instantiation in the region satisfies the spec.
    NoFsc { regions: usize },
    /// Some sub-region could not be excluded; carries its bounds.
    Inconclusive { region: Region, bounds: Bounds },
}

impl AbsenceResult {
    pub fn is_proven(&self) -> bool {
        matches!(self, AbsenceResult::NoFsc { .. })
    }
}

fn group_feasible(d: &Pmc, region: &Region) -> bool {
    d.groups.iter().all(|g| {
        let sum: Rational = g.iter().map(|v| region.lo[v.index()].clone()).sum();
        sum <= Rational::one()
    })
}

/// Tries to prove that no instantiation in `region` satisfies `spec`,
/// splitting the region up to `depth` times along its widest dimension.
pub fn prove_absence(d: &Pmc, spec: &Specification, region: &Region, depth: usize) -> Result<AbsenceResult> {
    let bounds = region_bounds(d, spec, region)?;
    if excludes(spec, &bounds) {
        return Ok(AbsenceResult::NoFsc { regions: 1 });
    }
    if depth == 0 || region.lo == region.hi {
        return Ok(AbsenceResult::Inconclusive { region: region.clone(), bounds });
    }
    let (a, b) = region.split();
    let mut regions = 0;
    for part in [a, b] {
        if !group_feasible(d, &part) {
            regions += 1;
            continue;
        }
        match prove_absence(d, spec, &part, depth - 1)? {
            AbsenceResult::NoFsc { regions: r } => regions += r,
            inconclusive => return Ok(inconclusive),
        }
    }
    Ok(AbsenceResult::NoFsc { regions })
}
