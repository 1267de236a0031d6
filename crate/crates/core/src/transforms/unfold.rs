//! Moving controller memory into the state space.

use num_traits::One;

use super::induced::InducedPmc;
use crate::error::{Error, Result};
use crate::fsc::{fsc_from_instantiation, instantiation_from_fsc, Fsc, Topology};
use crate::models::instantiation::Instantiation;
use crate::models::model::{Labels, Pomdp, PomdpBuilder};
use crate::models::rational::Rational;

/// Label of action `a` combined with successor node `n`.
pub fn unfolded_action(label: &str, n: usize, k: usize) -> String {
    let width = (k - 1).to_string().len();
    format!("{label}_m{n:0width$}")
}

/// The POMDP whose memoryless controllers are the `k`-node controllers of `m`.
///
/// State `⟨s, n⟩` has index `s·k + n` and observation `O(s)·k + n`; action
/// `⟨a, n'⟩` behaves like `a` and moves the memory to `n'`.
pub fn unfold(m: &Pomdp, k: usize, topology: Topology) -> Result<Pomdp> {
    if k < 2 {
        return Err(Error::InvalidArgument("unfolding needs a memory bound of at least 2".into()));
    }
    let observation = (0..m.num_states() * k).map(|x| m.observation[x / k] * k + x % k).collect();
    let mut b = PomdpBuilder::new(observation, m.mdp.initial * k).num_observations(m.num_observations * k);
    for s in 0..m.num_states() {
        for c in &m.mdp.choices[s] {
            let label = &m.actions()[c.action];
            for n in 0..k {
                for t in topology.targets(n, k) {
                    let action = unfolded_action(label, t, k);
                    for (s2, p) in &c.successors {
                        b.add_trans(s * k + n, &action, s2 * k + t, p.clone());
                    }
                    if c.reward != Rational::from_integer(0.into()) {
                        b.add_reward(s * k + n, &action, c.reward.clone());
                    }
                }
            }
        }
    }
    let mut out = b.build()?;
    let mut labels = Labels::new();
    for (name, set) in &m.mdp.labels {
        labels.insert(name.clone(), set.iter().flat_map(|&s| (0..k).map(move |n| s * k + n)).collect());
    }
    out.mdp.labels = labels;
    Ok(out)
}

/// Maps an instantiation of an induced pMC of `m` with memory `k` to the
/// 1-node induced pMC `target` of `unfold(m, k)`: the joint choice of action
/// and successor node at `⟨z, n⟩` becomes the action choice at observation
/// `z·k + n`.
pub fn map_unfolding_instantiation(
    m: &Pomdp,
    source: &InducedPmc,
    u: &Instantiation,
    unfolded: &Pomdp,
    target: &InducedPmc,
) -> Result<Instantiation> {
    let k = source.k;
    let fsc = fsc_from_instantiation(m, source, u)?;
    let zs = unfolded.num_observations;
    let mut one = Fsc {
        num_nodes: 1,
        initial: 0,
        action_map: vec![vec![Vec::new(); zs]],
        memory_update: vec![vec![Vec::new(); zs]],
    };
    for z in m.used_observations() {
        for n in 0..k {
            let mut gamma = Vec::new();
            for (a, pa) in &fsc.action_map[n][z] {
                let delta = fsc.memory(n, z, *a).expect("controller is complete");
                for (t, pt) in delta {
                    let label = unfolded_action(&m.actions()[*a], *t, k);
                    let idx = unfolded
                        .mdp
                        .action_index(&label)
                        .ok_or_else(|| Error::InvalidArgument(format!("unfolded model lacks action '{label}'")))?;
                    gamma.push((idx, pa * pt));
                }
            }
            gamma.sort();
            one.memory_update[0][z * k + n] = gamma.iter().map(|(a, _)| (*a, vec![(0, Rational::one())])).collect();
            one.action_map[0][z * k + n] = gamma;
        }
    }
    instantiation_from_fsc(unfolded, target, &one)
}
