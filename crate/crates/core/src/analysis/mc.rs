//! Reach-avoid probabilities and expected rewards on Markov chains.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_traits::{One, Zero};

use super::linear::{solve_exact, solve_f64, FloatSolver, System};
use super::qualitative::{forward_reach, qualitative, QualitativeSets};
use crate::error::Result;
use crate::models::instantiation::Instantiation;
use crate::models::model::{Chain, FloatMc, Mc, Pmc};
use crate::models::rational::Rational;
use crate::models::spec::{SpecKind, Specification, Value};

/// Goal and bad masks of a specification on a chain.
pub fn spec_masks<W>(chain: &Chain<W>, spec: &Specification) -> Result<(Vec<bool>, Vec<bool>)> {
    let goal = chain.mask(spec.goal())?;
    let bad = match spec.bad() {
        Some(b) => chain.mask(b)?,
        None => vec![false; chain.num_states()],
    };
    Ok((goal, bad))
}

/// Unknowns of a chain system and the index map from states.
struct Unknowns {
    states: Vec<usize>,
    index: Vec<Option<usize>>,
}

fn unknowns(n: usize, initial: Option<usize>, graph: &[Vec<usize>], fixed: &[bool]) -> Unknowns {
    let keep: Vec<bool> = match initial {
        Some(i) => {
            let r = forward_reach(graph, i, fixed);
            (0..n).map(|s| r[s] && !fixed[s]).collect()
        }
        None => fixed.iter().map(|f| !f).collect(),
    };
    let mut index = vec![None; n];
    let mut states = Vec::new();
    for s in 0..n {
        if keep[s] {
            index[s] = Some(states.len());
            states.push(s);
        }
    }
    Unknowns { states, index }
}

fn reach_system<W: Clone + Zero + std::ops::AddAssign>(
    chain: &Chain<W>,
    qual: &QualitativeSets,
    u: &Unknowns,
) -> System<W> {
    let mut sys = System { rows: Vec::new(), rhs: Vec::new() };
    for &s in &u.states {
        let mut row = Vec::new();
        let mut rhs = W::zero();
        for (t, p) in &chain.transitions[s] {
            if qual.s_one[*t] {
                rhs += p.clone();
            } else if let Some(j) = u.index[*t] {
                row.push((j, p.clone()));
            }
        }
        sys.rows.push(row);
        sys.rhs.push(rhs);
    }
    sys
}

fn reward_system<W: Clone + Zero + std::ops::AddAssign>(chain: &Chain<W>, u: &Unknowns) -> System<W> {
    let mut sys = System { rows: Vec::new(), rhs: Vec::new() };
    for &s in &u.states {
        let row = chain.transitions[s]
            .iter()
            .filter_map(|(t, p)| u.index[*t].map(|j| (j, p.clone())))
            .collect();
        sys.rows.push(row);
        sys.rhs.push(chain.rewards[s].clone());
    }
    sys
}

fn fixed_for_reach(q: &QualitativeSets) -> Vec<bool> {
    q.s_zero.iter().zip(&q.s_one).map(|(a, b)| *a || *b).collect()
}

/// Reach-avoid probability of every state.
pub fn reach_avoid_values(mc: &Mc, goal: &[bool], bad: &[bool]) -> Vec<Rational> {
    let q = qualitative(&mc.graph(), goal, bad);
    reach_values_with(mc, &q, None)
}

fn reach_values_with(mc: &Mc, q: &QualitativeSets, initial: Option<usize>) -> Vec<Rational> {
    let n = mc.num_states();
    let u = unknowns(n, initial, &mc.graph(), &fixed_for_reach(q));
    let x = solve_exact(&reach_system(mc, q, &u));
    let mut out: Vec<Rational> =
        (0..n).map(|s| if q.s_one[s] { Rational::one() } else { Rational::zero() }).collect();
    for (i, &s) in u.states.iter().enumerate() {
        out[s] = x[i].clone();
    }
    out
}

/// Reach-avoid probability from the initial state, exact.
pub fn reach_avoid_prob(mc: &Mc, goal: &[bool], bad: &[bool]) -> Rational {
    let q = qualitative(&mc.graph(), goal, bad);
    reach_avoid_prob_with(mc, &q)
}

pub fn reach_avoid_prob_with(mc: &Mc, q: &QualitativeSets) -> Rational {
    reach_values_with(mc, q, Some(mc.initial)).swap_remove(mc.initial)
}

pub fn reach_avoid_prob_f64(mc: &FloatMc, goal: &[bool], bad: &[bool], solver: FloatSolver) -> f64 {
    let q = qualitative(&mc.graph(), goal, bad);
    reach_avoid_prob_f64_with(mc, &q, solver)
}

pub fn reach_avoid_prob_f64_with(mc: &FloatMc, q: &QualitativeSets, solver: FloatSolver) -> f64 {
    let i = mc.initial;
    if q.s_one[i] {
        return 1.0;
    }
    if q.s_zero[i] {
        return 0.0;
    }
    let u = unknowns(mc.num_states(), Some(i), &mc.graph(), &fixed_for_reach(q));
    let x = solve_f64(&reach_system(mc, q, &u), solver);
    x[u.index[i].expect("initial is an unknown")].clamp(0.0, 1.0)
}

/// Expected reward of every state until `goal`; `None` marks divergence.
pub fn expected_reward_values(mc: &Mc, goal: &[bool]) -> Vec<Option<Rational>> {
    let n = mc.num_states();
    let q = qualitative(&mc.graph(), goal, &vec![false; n]);
    let fixed: Vec<bool> = (0..n).map(|s| goal[s] || !q.s_one[s]).collect();
    let u = unknowns(n, None, &mc.graph(), &fixed);
    let x = solve_exact(&reward_system(mc, &u));
    (0..n)
        .map(|s| match u.index[s] {
            Some(i) => Some(x[i].clone()),
            None if goal[s] => Some(Rational::zero()),
            None => None,
        })
        .collect()
}

pub fn expected_reward(mc: &Mc, goal: &[bool]) -> Value {
    let n = mc.num_states();
    let q = qualitative(&mc.graph(), goal, &vec![false; n]);
    expected_reward_with(mc, goal, &q)
}

/// `q` must be computed for `goal` without bad states.
pub fn expected_reward_with(mc: &Mc, goal: &[bool], q: &QualitativeSets) -> Value {
    let n = mc.num_states();
    let i = mc.initial;
    if goal[i] {
        return Value::Finite(Rational::zero());
    }
    if !q.s_one[i] {
        return Value::Infinite;
    }
    let fixed: Vec<bool> = (0..n).map(|s| goal[s] || !q.s_one[s]).collect();
    let u = unknowns(n, Some(i), &mc.graph(), &fixed);
    let x = solve_exact(&reward_system(mc, &u));
    Value::Finite(x[u.index[i].expect("initial is an unknown")].clone())
}

pub fn expected_reward_f64(mc: &FloatMc, goal: &[bool], solver: FloatSolver) -> f64 {
    let n = mc.num_states();
    let q = qualitative(&mc.graph(), goal, &vec![false; n]);
    expected_reward_f64_with(mc, goal, &q, solver)
}

pub fn expected_reward_f64_with(mc: &FloatMc, goal: &[bool], q: &QualitativeSets, solver: FloatSolver) -> f64 {
    let n = mc.num_states();
    let i = mc.initial;
    if goal[i] {
        return 0.0;
    }
    if !q.s_one[i] {
        return f64::INFINITY;
    }
    let fixed: Vec<bool> = (0..n).map(|s| goal[s] || !q.s_one[s]).collect();
    let u = unknowns(n, Some(i), &mc.graph(), &fixed);
    let x = solve_f64(&reward_system(mc, &u), solver);
    x[u.index[i].expect("initial is an unknown")]
}

/// Exact value of `spec` on a chain.
pub fn check_mc(mc: &Mc, spec: &Specification) -> Result<Value> {
    let (goal, bad) = spec_masks(mc, spec)?;
    Ok(match spec.kind {
        SpecKind::ReachAvoid { .. } => Value::Finite(reach_avoid_prob(mc, &goal, &bad)),
        SpecKind::ExpectedReward { .. } => expected_reward(mc, &goal),
    })
}

pub fn check_mc_f64(mc: &FloatMc, spec: &Specification) -> Result<f64> {
    let (goal, bad) = spec_masks(mc, spec)?;
    Ok(match spec.kind {
        SpecKind::ReachAvoid { .. } => reach_avoid_prob_f64(mc, &goal, &bad, FloatSolver::Auto),
        SpecKind::ExpectedReward { .. } => expected_reward_f64(mc, &goal, FloatSolver::Auto),
    })
}

/// Model checker for many instantiations of one pMC.
///
/// Qualitative sets are computed once for the graph in which every
/// parametric transition is positive. An instantiation that zeroes a
/// transition changes the graph; its sets are recomputed and counted.
pub struct PmcChecker<'a> {
    pmc: &'a Pmc,
    spec: Specification,
    goal: Vec<bool>,
    bad: Vec<bool>,
    cached: QualitativeSets,
    edges: usize,
    recomputations: AtomicUsize,
    pub solver: FloatSolver,
}

impl<'a> PmcChecker<'a> {
    pub fn new(pmc: &'a Pmc, spec: &Specification) -> Result<Self> {
        let (goal, bad) = spec_masks(&pmc.chain, spec)?;
        let bad = if spec.is_probability() { bad } else { vec![false; goal.len()] };
        let cached = qualitative(&pmc.chain.graph(), &goal, &bad);
        Ok(PmcChecker {
            pmc,
            spec: spec.clone(),
            goal,
            bad,
            cached,
            edges: pmc.chain.num_transitions(),
            recomputations: AtomicUsize::new(0),
            solver: FloatSolver::Auto,
        })
    }

    pub fn pmc(&self) -> &Pmc {
        self.pmc
    }

    pub fn spec(&self) -> &Specification {
        &self.spec
    }

    pub fn qualitative(&self) -> &QualitativeSets {
        &self.cached
    }

    /// Number of instantiations whose graph differed from the parametric one.
    pub fn recomputations(&self) -> usize {
        self.recomputations.load(Ordering::Relaxed)
    }

    fn sets_for<W>(&self, chain: &Chain<W>) -> std::borrow::Cow<'_, QualitativeSets> {
        if chain.num_transitions() == self.edges {
            std::borrow::Cow::Borrowed(&self.cached)
        } else {
            self.recomputations.fetch_add(1, Ordering::Relaxed);
            std::borrow::Cow::Owned(qualitative(&chain.graph(), &self.goal, &self.bad))
        }
    }

    /// Exact value; fails for instantiations that are not well-defined.
    pub fn value(&self, u: &Instantiation) -> Result<Value> {
        let mc = self.pmc.apply(u)?;
        Ok(self.value_of_mc(&mc))
    }

    pub fn value_of_mc(&self, mc: &Mc) -> Value {
        let q = self.sets_for(mc);
        match self.spec.kind {
            SpecKind::ReachAvoid { .. } => Value::Finite(reach_avoid_prob_with(mc, &q)),
            SpecKind::ExpectedReward { .. } => expected_reward_with(mc, &self.goal, &q),
        }
    }

    /// Float value without well-definedness checks.
    pub fn value_f64(&self, u: &[f64]) -> f64 {
        let mc = self.pmc.apply_f64(u);
        let q = self.sets_for(&mc);
        match self.spec.kind {
            SpecKind::ReachAvoid { .. } => reach_avoid_prob_f64_with(&mc, &q, self.solver),
            SpecKind::ExpectedReward { .. } => expected_reward_f64_with(&mc, &self.goal, &q, self.solver),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::model::{chain_from_edges, Labels};
    use crate::models::rational::{frac, int};

    fn labels(goal: &[usize]) -> Labels {
        let mut l = Labels::new();
        l.insert("goal".into(), goal.iter().copied().collect());
        l
    }

    #[test]
    fn geometric_reach_is_one() {
        let mc = chain_from_edges(2, 0, [(0, 1, frac(3, 10)), (0, 0, frac(7, 10)), (1, 1, int(1))], labels(&[1]));
        let goal = mc.mask("goal").unwrap();
        assert_eq!(reach_avoid_prob(&mc, &goal, &[false, false]), int(1));
    }

    #[test]
    fn rewards_follow_expected_steps() {
        let mut mc = chain_from_edges(2, 0, [(0, 1, frac(1, 2)), (0, 0, frac(1, 2)), (1, 1, int(1))], labels(&[1]));
        mc.rewards[0] = int(1);
        let goal = mc.mask("goal").unwrap();
        assert_eq!(expected_reward(&mc, &goal), Value::Finite(int(2)));
        let mut chain = chain_from_edges(2, 0, [(0, 1, int(1)), (1, 1, int(1))], labels(&[1]));
        chain.rewards[0] = int(3);
        assert_eq!(expected_reward(&chain, &goal), Value::Finite(int(3)));
        let mut lost = chain_from_edges(3, 0, [(0, 1, frac(1, 2)), (0, 2, frac(1, 2)), (1, 1, int(1)), (2, 2, int(1))], labels(&[1]));
        lost.rewards[0] = int(1);
        assert_eq!(expected_reward(&lost, &[false, true, false]), Value::Infinite);
    }

    #[test]
    fn initial_goal_is_trivial() {
        let mc = chain_from_edges(1, 0, [(0, 0, int(1))], labels(&[0]));
        assert_eq!(reach_avoid_prob(&mc, &[true], &[false]), int(1));
        assert_eq!(expected_reward(&mc, &[true]), Value::Finite(int(0)));
    }

    #[test]
    fn float_and_exact_agree() {
        let mc = chain_from_edges(
            4,
            0,
            [(0, 1, frac(1, 3)), (0, 2, frac(2, 3)), (1, 0, frac(1, 2)), (1, 3, frac(1, 2)), (2, 2, int(1)), (3, 3, int(1))],
            labels(&[3]),
        );
        let goal = mc.mask("goal").unwrap();
        let bad = vec![false; 4];
        let exact = reach_avoid_prob(&mc, &goal, &bad);
        assert_eq!(exact, frac(1, 5));
        let f = reach_avoid_prob_f64(&mc.to_float(), &goal, &bad, FloatSolver::GaussSeidel);
        assert!((f - 0.2).abs() < 1e-10);
    }
}
