//! Simple pMCs as POMDPs.

use crate::error::{Error, Result};
use crate::models::model::{Pmc, Pomdp, PomdpBuilder, SimpleEntry, simple_entry};
use crate::models::polynomial::Var;

/// The simple POMDP whose 1-node induced pMC is `d`.
///
/// A state with outgoing `p` and `1 - p` gets observation `p`'s index and
/// actions `a` (to the `p` successor) and `b` (to the `1 - p` successor);
/// parameter-free states share one extra observation and the action `tau`.
/// Every parameter must occur, and rewards must be constant.
pub fn pmc_to_pomdp(d: &Pmc) -> Result<Pomdp> {
    let n = d.num_states();
    let np = d.num_params();
    let mut observation = vec![np; n];
    let mut used = vec![false; np];
    let mut rows: Vec<Option<(Var, usize, usize)>> = vec![None; n];
    for (s, row) in d.chain.transitions.iter().enumerate() {
        if row.iter().all(|(_, f)| f.is_constant()) {
            continue;
        }
        let not_simple = || Error::Unsupported(format!("state {s}: outgoing transitions are not of the form p, 1 - p"));
        if row.len() != 2 {
            return Err(not_simple());
        }
        let (e0, e1) = (simple_entry(&row[0].1), simple_entry(&row[1].1));
        let (v, yes, no) = match (e0, e1) {
            (Some(SimpleEntry::Param(v)), Some(SimpleEntry::OneMinus(w))) if v == w => (v, row[0].0, row[1].0),
            (Some(SimpleEntry::OneMinus(w)), Some(SimpleEntry::Param(v))) if v == w => (v, row[1].0, row[0].0),
            _ => return Err(not_simple()),
        };
        observation[s] = v.index();
        used[v.index()] = true;
        rows[s] = Some((v, yes, no));
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(Error::Unsupported(format!("parameter '{}' does not occur in any transition", d.params[i])));
    }
    let mut b = PomdpBuilder::new(observation, d.chain.initial).num_observations(np + 1);
    for s in 0..n {
        let reward = d.chain.rewards[s]
            .constant_value()
            .ok_or_else(|| Error::Unsupported(format!("state {s}: parametric reward")))?;
        let has_reward = reward != num_traits::Zero::zero();
        match rows[s] {
            Some((_, yes, no)) => {
                b.add_trans(s, "a", yes, num_traits::One::one());
                b.add_trans(s, "b", no, num_traits::One::one());
                if has_reward {
                    b.add_reward(s, "a", reward.clone());
                    b.add_reward(s, "b", reward);
                }
            }
            None => {
                for (t, f) in &d.chain.transitions[s] {
                    b.add_trans(s, "tau", *t, f.constant_value().expect("constant row"));
                }
                if has_reward {
                    b.add_reward(s, "tau", reward);
                }
            }
        }
    }
    for (name, set) in &d.chain.labels {
        for &s in set {
            b.add_label(name, s);
        }
    }
    let mut m = b.build()?;
    for name in d.chain.labels.keys() {
        m.mdp.labels.entry(name.clone()).or_default();
    }
    Ok(m)
}
