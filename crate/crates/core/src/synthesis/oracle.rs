//! Exhaustive search over deterministic controllers.

use num_traits::One;

use crate::analysis::check_mc;
use crate::error::{Error, Result};
use crate::fsc::{induced_mc, Fsc, Topology};
use crate::models::model::Pomdp;
use crate::models::rational::Rational;
use crate::models::spec::{Specification, Value};
use crate::par::Execution;

/// Largest number of controllers [`brute_force_oracle`] enumerates.
pub const ENUMERATION_BOUND: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub fsc: Fsc,
    pub value: Value,
    pub enumerated: u128,
}

/// Number of deterministic `k`-node controllers: one (action, successor)
/// pair per node and observation.
pub fn deterministic_count(m: &Pomdp, k: usize, topology: Topology) -> u128 {
    let acts = m.observation_actions();
    let mut count: u128 = 1;
    for z in m.used_observations() {
        for n in 0..k {
            let options = (acts[z].len() * topology.targets(n, k).len()) as u128;
            count = count.saturating_mul(options);
        }
    }
    count
}

fn decode(m: &Pomdp, k: usize, topology: Topology, acts: &[Vec<usize>], mut index: u128) -> Fsc {
    let zs = m.num_observations;
    let mut fsc = Fsc {
        num_nodes: k,
        initial: 0,
        action_map: vec![vec![Vec::new(); zs]; k],
        memory_update: vec![vec![Vec::new(); zs]; k],
    };
    for z in m.used_observations() {
        for n in 0..k {
            let targets = topology.targets(n, k);
            let options = (acts[z].len() * targets.len()) as u128;
            let choice = (index % options) as usize;
            index /= options;
            let a = acts[z][choice / targets.len()];
            let t = targets[choice % targets.len()];
            fsc.action_map[n][z] = vec![(a, Rational::one())];
            fsc.memory_update[n][z] = vec![(a, vec![(t, Rational::one())])];
        }
    }
    fsc
}

/// The best deterministic `k`-node controller for `spec`, found by exact
/// model checking of every candidate. Ties go to the first candidate in
/// enumeration order.
pub fn brute_force_oracle(
    m: &Pomdp,
    k: usize,
    topology: Topology,
    spec: &Specification,
    exec: Execution,
) -> Result<OracleResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("memory bound must be at least 1".into()));
    }
    let count = deterministic_count(m, k, topology);
    if count > ENUMERATION_BOUND {
        return Err(Error::EnumerationBound(count));
    }
    let acts = m.observation_actions();
    let values = exec.map_range(count as usize, |i| -> Result<Value> {
        let fsc = decode(m, k, topology, &acts, i as u128);
        check_mc(&induced_mc(m, &fsc)?.mc, spec)
    });
    let mut best: Option<(usize, Value)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        let better = match &best {
            None => true,
            Some((_, b)) if spec.maximizing() => v > *b,
            Some((_, b)) => v < *b,
        };
        if better {
            best = Some((i, v));
        }
    }
    let (i, value) = best.expect("at least one controller");
    Ok(OracleResult { fsc: decode(m, k, topology, &acts, i as u128), value, enumerated: count })
}
