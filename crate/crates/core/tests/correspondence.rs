mod common;

use std::collections::BTreeMap;

use common::*;
use fscsynth::analysis::{check_mc, PmcChecker};
use fscsynth::fsc::{fsc_from_instantiation, induced_mc, instantiation_from_fsc, Topology};
use fscsynth::models::rational::Rational;
use fscsynth::models::{Instantiation, Mc, Pmc, Pomdp, Specification, Value};
use fscsynth::transforms::{
    build_induced, induced_pmc, map_unfolding_instantiation, param_count, pmc_to_pomdp, substituted_pmc, unfold,
    InducedOptions, InducedPmc, ParamName, Role, Variant,
};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn reach() -> Specification {
    Specification::parse("P>= 0 [!bad U goal]").unwrap()
}

fn reward() -> Specification {
    Specification::parse("Emin<= 5 [F goal]").unwrap()
}

fn pmc_value(d: &Pmc, u: &Instantiation, spec: &Specification) -> Value {
    PmcChecker::new(d, spec).unwrap().value(u).unwrap()
}

/// The rows of `mc`, keyed by product state, over the states listed in `states`.
fn product_rows(mc: &Mc, states: &[(usize, usize)], k: usize) -> BTreeMap<usize, BTreeMap<usize, Rational>> {
    states
        .iter()
        .enumerate()
        .map(|(i, &(s, n))| {
            let row = mc.transitions[i].iter().map(|(j, p)| (states[*j].0 * k + states[*j].1, p.clone())).collect();
            (s * k + n, row)
        })
        .collect()
}

fn check_correspondence(m: &Pomdp, d: &InducedPmc, u: &Instantiation, spec: &Specification) {
    let fsc = fsc_from_instantiation(m, d, u).unwrap();
    let product = induced_mc(m, &fsc).unwrap();
    let applied = d.pmc.apply(u).unwrap();
    // Edge for edge on the reachable fragment.
    for (x, row) in product_rows(&product.mc, &product.states, d.k) {
        let expected: BTreeMap<usize, Rational> = applied.transitions[x].iter().cloned().collect();
        assert_eq!(row, expected, "row of product state {x}");
        assert_eq!(product.mc.rewards[product.states.iter().position(|&(s, n)| s * d.k + n == x).unwrap()], applied.rewards[x]);
    }
    assert_eq!(check_mc(&product.mc, spec).unwrap(), pmc_value(&d.pmc, u, spec));
}

#[test]
fn controller_product_matches_instantiated_pmc() {
    let mut r = rng(1);
    let mut cases = 0;
    for i in 0..120 {
        let shape = PomdpShape { rewards: i % 4 == 3, ..Default::default() };
        let m = random_pomdp(&mut r, shape);
        let spec = if shape.rewards { reward() } else { reach() };
        for k in 1..=3 {
            for topology in [Topology::Full, Topology::Counter] {
                let d = induced_pmc(&m, k, topology).unwrap();
                assert!(d.pmc.rows_sum_to_one());
                let u = random_instantiation(&mut r, &d.pmc, i % 2 == 0);
                check_correspondence(&m, &d, &u, &spec);
                cases += 1;
            }
        }
    }
    assert!(cases >= 100);
}

#[test]
fn variants_correspond_to_controllers() {
    let mut r = rng(2);
    for _ in 0..60 {
        let m = random_pomdp(&mut r, PomdpShape::default());
        for k in 1..=3 {
            for variant in [Variant::Substituted, Variant::ActionRestricted] {
                let d = build_induced(&m, &InducedOptions::new(k).variant(variant)).unwrap();
                assert!(d.pmc.rows_sum_to_one());
                let u = random_instantiation(&mut r, &d.pmc, false);
                check_correspondence(&m, &d, &u, &reach());
            }
        }
    }
}

#[test]
fn controllers_round_trip_through_instantiations() {
    let mut r = rng(3);
    for _ in 0..60 {
        let m = random_pomdp(&mut r, PomdpShape::default());
        for k in 1..=3 {
            let d = induced_pmc(&m, k, Topology::Full).unwrap();
            let u = random_instantiation(&mut r, &d.pmc, false);
            let fsc = fsc_from_instantiation(&m, &d, &u).unwrap();
            assert_eq!(instantiation_from_fsc(&m, &d, &fsc).unwrap(), u);
        }
    }
}

#[test]
fn unfolding_preserves_values() {
    let mut r = rng(4);
    for i in 0..50 {
        let shape = PomdpShape { rewards: i % 5 == 4, ..Default::default() };
        let spec = if shape.rewards { reward() } else { reach() };
        let m = random_pomdp(&mut r, shape);
        let k = 2 + i % 2;
        let source = induced_pmc(&m, k, Topology::Full).unwrap();
        let unfolded = unfold(&m, k, Topology::Full).unwrap();
        assert_eq!(unfolded.num_states(), m.num_states() * k);
        assert_eq!(unfolded.num_observations, m.num_observations * k);
        let target = induced_pmc(&unfolded, 1, Topology::Full).unwrap();
        assert_eq!(target.pmc.num_states(), source.pmc.num_states());
        let u = random_instantiation(&mut r, &source.pmc, i % 3 == 0);
        let v = map_unfolding_instantiation(&m, &source, &u, &unfolded, &target).unwrap();
        assert_eq!(pmc_value(&source.pmc, &u, &spec), pmc_value(&target.pmc, &v, &spec), "case {i}");
    }
}

/// Value of the standard-pMC coordinate `(role, z, n, a, t)` under `u`,
/// completing remainders.
fn coordinate(d: &InducedPmc, m: &Pomdp, u: &Instantiation, z: usize, n: usize, a: usize, t: usize) -> Rational {
    let acts = &m.observation_actions()[z];
    let remain = d.remain.action[z].unwrap();
    let get = |role, a: Option<usize>, t: Option<usize>| {
        let name = ParamName { role, observation: z, node: n, action: a, target: t };
        u.get(d.find(&name).unwrap()).clone()
    };
    let act = if a == remain {
        Rational::one() - acts.iter().filter(|&&b| b != remain).map(|&b| get(Role::P, Some(b), None)).sum::<Rational>()
    } else {
        get(Role::P, Some(a), None)
    };
    let last = d.k - 1;
    let mem = if t == last {
        Rational::one() - (0..last).map(|t2| get(Role::Q, Some(a), Some(t2))).sum::<Rational>()
    } else {
        get(Role::Q, Some(a), Some(t))
    };
    act * mem
}

#[test]
fn substitution_preserves_values() {
    let mut r = rng(5);
    for i in 0..50 {
        let m = random_pomdp(&mut r, PomdpShape::default());
        let k = 1 + i % 3;
        let standard = induced_pmc(&m, k, Topology::Full).unwrap();
        let subst = substituted_pmc(&m, k).unwrap();
        let u = random_instantiation(&mut r, &standard.pmc, i % 2 == 0);
        let values: Vec<Rational> = subst
            .names
            .iter()
            .map(|p| coordinate(&standard, &m, &u, p.observation, p.node, p.action.unwrap(), p.target.unwrap()))
            .collect();
        let v = Instantiation::new(values);
        assert_eq!(pmc_value(&standard.pmc, &u, &reach()), pmc_value(&subst.pmc, &v, &reach()), "case {i}");
        // And the other way: a random joint instantiation is reproduced by its controller.
        let w = random_instantiation(&mut r, &subst.pmc, false);
        let fsc = fsc_from_instantiation(&m, &subst, &w).unwrap();
        let back = instantiation_from_fsc(&m, &standard, &fsc).unwrap();
        assert_eq!(pmc_value(&subst.pmc, &w, &reach()), pmc_value(&standard.pmc, &back, &reach()));
    }
}

#[test]
fn simple_pmcs_round_trip_through_pomdps() {
    let mut r = rng(6);
    for _ in 0..100 {
        let d = random_simple_pmc(&mut r, 30, 6);
        assert!(d.is_simple());
        let m = pmc_to_pomdp(&d).unwrap();
        let back = induced_pmc(&m, 1, Topology::Full).unwrap();
        assert_eq!(back.pmc.chain, d.chain);
        assert_eq!(back.pmc.num_params(), d.num_params());
    }
}

#[test]
fn non_simple_pmcs_are_rejected() {
    let d = pmc("pmc\nstates 2\ninitial 0\nparams p\ntrans 0 1 p*p\ntrans 0 0 1-p*p\ntrans 1 1 1\nlabel goal 1\n");
    assert!(pmc_to_pomdp(&d).is_err());
    let unused = pmc("pmc\nstates 1\ninitial 0\nparams p\ntrans 0 0 1\nlabel goal 0\n");
    assert!(pmc_to_pomdp(&unused).is_err());
}

/// Parameter count by direct enumeration of the index sets.
fn count_by_index_sets(m: &Pomdp, k: usize) -> usize {
    let acts = m.observation_actions();
    let mut count = 0;
    for z in m.used_observations() {
        for _n in 0..k {
            count += acts[z].len() - 1;
            for _a in &acts[z] {
                count += k - 1;
            }
        }
    }
    count
}

#[test]
fn parameter_count_matches_table_over_the_grid() {
    let mut r = rng(7);
    for states in 1..=6 {
        for observations in 1..=states.min(3) {
            for actions in 1..=3 {
                let m = loop {
                    let m = random_pomdp(
                        &mut r,
                        PomdpShape { max_states: states, max_actions: actions, max_observations: observations, rewards: false },
                    );
                    if m.num_states() == states.max(2) || states < 2 {
                        break m;
                    }
                };
                for k in 1..=3 {
                    let table = induced_pmc(&m, k, Topology::Full).unwrap().pmc.num_params();
                    let acts = m.observation_actions();
                    let formula: usize = m
                        .used_observations()
                        .into_iter()
                        .map(|z| k * (acts[z].len() - 1) + k * (k - 1) * acts[z].len())
                        .sum();
                    assert_eq!(table, formula);
                    assert_eq!(table, param_count(&m, k));
                    assert_eq!(table, count_by_index_sets(&m, k));
                }
            }
        }
    }
}

#[test]
fn counter_topology_only_moves_forward() {
    let mut r = rng(8);
    for _ in 0..30 {
        let m = random_pomdp(&mut r, PomdpShape::default());
        let d = induced_pmc(&m, 3, Topology::Counter).unwrap();
        for (x, row) in d.pmc.chain.transitions.iter().enumerate() {
            let n = x % 3;
            assert!(row.iter().all(|(y, _)| y % 3 == n || y % 3 == n + 1));
        }
        let u = random_instantiation(&mut r, &d.pmc, false);
        let fsc = fsc_from_instantiation(&m, &d, &u).unwrap();
        assert!(fsc.respects(Topology::Counter));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn induced_rows_sum_to_one_symbolically(seed in any::<u64>(), k in 1usize..=3) {
        let m = random_pomdp(&mut rng(seed), PomdpShape::default());
        for variant in [Variant::Standard, Variant::Substituted, Variant::ActionRestricted, Variant::NextObs] {
            let d = build_induced(&m, &InducedOptions::new(k).variant(variant)).unwrap();
            prop_assert!(d.pmc.rows_sum_to_one());
        }
    }

    #[test]
    fn product_is_stochastic_and_small(seed in any::<u64>(), k in 1usize..=3) {
        let mut r = rng(seed);
        let m = random_pomdp(&mut r, PomdpShape::default());
        let d = induced_pmc(&m, k, Topology::Full).unwrap();
        let u = random_instantiation(&mut r, &d.pmc, true);
        let fsc = fsc_from_instantiation(&m, &d, &u).unwrap();
        let product = induced_mc(&m, &fsc).unwrap();
        prop_assert!(product.mc.is_stochastic());
        prop_assert!(product.mc.num_states() <= m.num_states() * k);
        prop_assert!(product.mc.transitions.iter().flatten().all(|(_, p)| !p.is_zero()));
    }
}
