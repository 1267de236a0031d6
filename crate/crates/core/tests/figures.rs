mod common;

use std::collections::BTreeMap;

use common::*;
use fscsynth::analysis::{
    check_mc, mdp_optimal, prove_absence, region_bounds, state_eliminate, PmcChecker, Region,
};
use fscsynth::fsc::{induced_mc, simulate, Fsc, Topology};
use fscsynth::models::expr::{parse_polynomial, table_lookup};
use fscsynth::models::polynomial::Polynomial;
use fscsynth::models::rational::{frac, int};
use fscsynth::models::{Instantiation, Specification, Value};
use fscsynth::par::Execution;
use fscsynth::transforms::{
    action_restricted_pmc, build_induced, induced_pmc, make_simple, next_obs_pmc, param_count, pmc_to_pomdp,
    substituted_pmc, InducedOptions, RemainMap,
};

fn row(d: &fscsynth::models::Pmc, s: usize) -> BTreeMap<usize, Polynomial> {
    d.chain.transitions[s].iter().cloned().collect()
}

fn expect_row(d: &fscsynth::models::Pmc, s: usize, expected: &[(usize, &str)]) {
    let want: BTreeMap<usize, Polynomial> = expected
        .iter()
        .map(|(t, e)| (*t, parse_polynomial(e, &mut table_lookup(&d.params)).unwrap()))
        .collect();
    assert_eq!(row(d, s), want, "row of state {s}; params {:?}", d.params);
}

fn spec(text: &str) -> Specification {
    Specification::parse(text).unwrap()
}

#[test]
fn uniform_two_node_controller_gives_edge_three_twentieths() {
    let m = pomdp(FRAGMENT);
    assert_eq!((m.num_states(), m.num_observations), (5, 2));
    let fsc = Fsc::uniform(&m, 2, Topology::Full);
    let product = induced_mc(&m, &fsc).unwrap();
    let from = product.states.iter().position(|&x| x == (0, 0)).unwrap();
    let to = product.states.iter().position(|&x| x == (1, 0)).unwrap();
    assert_eq!(from, product.mc.initial);
    let p = product.mc.transitions[from].iter().find(|(t, _)| *t == to).unwrap().1.clone();
    assert_eq!(p, frac(3, 20));
    assert!(product.mc.is_stochastic());
}

#[test]
fn three_action_pomdp_gives_figure_polynomials() {
    let m = pomdp(THREE_ACTIONS);
    let a1 = m.mdp.action_index("a1").unwrap();
    let remain = RemainMap::last_action(&m).with(1, a1);
    let d = build_induced(&m, &InducedOptions::new(1).remain(remain)).unwrap();
    assert_eq!(d.pmc.params, ["p_z0_n0_a1", "p_z0_n0_a2", "p_z1_n0_a2"]);
    let p = &d.pmc;
    expect_row(p, 0, &[(1, "p_z0_n0_a1"), (2, "0.5*p_z0_n0_a2"), (3, "0.5*p_z0_n0_a2 + (1 - p_z0_n0_a1 - p_z0_n0_a2)")]);
    expect_row(p, 1, &[(0, "0.5*p_z1_n0_a2"), (2, "1 - 0.5*p_z1_n0_a2")]);
    expect_row(p, 3, &[(3, "p_z1_n0_a2"), (2, "1 - p_z1_n0_a2")]);
    expect_row(p, 2, &[(2, "1")]);
    assert!(p.rows_sum_to_one());
}

#[test]
fn fragment_induced_pmc_has_the_eight_product_terms() {
    let m = pomdp(FRAGMENT);
    let d = induced_pmc(&m, 2, Topology::Full).unwrap();
    // ⟨s, n⟩ has index 2s + n; p is a1's probability, q1/q2 the update to n1 under a1/a2.
    expect_row(
        &d.pmc,
        0,
        &[
            (2, "0.6*p_z0_n0_a1*q_z0_n0_a1_m0"),
            (3, "0.6*p_z0_n0_a1*(1-q_z0_n0_a1_m0)"),
            (4, "0.4*p_z0_n0_a1*q_z0_n0_a1_m0"),
            (5, "0.4*p_z0_n0_a1*(1-q_z0_n0_a1_m0)"),
            (6, "0.7*(1-p_z0_n0_a1)*q_z0_n0_a2_m0"),
            (7, "0.7*(1-p_z0_n0_a1)*(1-q_z0_n0_a2_m0)"),
            (8, "0.3*(1-p_z0_n0_a1)*q_z0_n0_a2_m0"),
            (9, "0.3*(1-p_z0_n0_a1)*(1-q_z0_n0_a2_m0)"),
        ],
    );
}

#[test]
fn fragment_substituted_pmc_matches_substituted_column() {
    let m = pomdp(FRAGMENT);
    let d = substituted_pmc(&m, 2).unwrap();
    let (r1, r2, r3) = ("r_z0_n0_a1_m0", "r_z0_n0_a1_m1", "r_z0_n0_a2_m0");
    let rest = format!("(1 - {r1} - {r2} - {r3})");
    expect_row(
        &d.pmc,
        0,
        &[
            (2, &format!("0.6*{r1}")),
            (3, &format!("0.6*{r2}")),
            (4, &format!("0.4*{r1}")),
            (5, &format!("0.4*{r2}")),
            (6, &format!("0.7*{r3}")),
            (7, &format!("0.7*{rest}")),
            (8, &format!("0.3*{r3}")),
            (9, &format!("0.3*{rest}")),
        ],
    );
}

#[test]
fn action_restricted_pmc_shares_the_update() {
    let m = pomdp(FRAGMENT);
    let d = action_restricted_pmc(&m, 2).unwrap();
    expect_row(
        &d.pmc,
        0,
        &[
            (2, "0.6*p_z0_n0_a1*q_z0_n0_m0"),
            (3, "0.6*p_z0_n0_a1*(1-q_z0_n0_m0)"),
            (4, "0.4*p_z0_n0_a1*q_z0_n0_m0"),
            (5, "0.4*p_z0_n0_a1*(1-q_z0_n0_m0)"),
            (6, "0.7*(1-p_z0_n0_a1)*q_z0_n0_m0"),
            (7, "0.7*(1-p_z0_n0_a1)*(1-q_z0_n0_m0)"),
            (8, "0.3*(1-p_z0_n0_a1)*q_z0_n0_m0"),
            (9, "0.3*(1-p_z0_n0_a1)*(1-q_z0_n0_m0)"),
        ],
    );
}

#[test]
fn next_observation_pmc_keys_updates_by_successor_observation() {
    let m = pomdp(FRAGMENT);
    let d = next_obs_pmc(&m, 2).unwrap();
    // s2 carries z1 and s3 carries z0, so the two a1 branches use different updates.
    expect_row(
        &d.pmc,
        0,
        &[
            (2, "0.6*p_z0_n0_a1*q_z1_n0_a1_m0"),
            (3, "0.6*p_z0_n0_a1*(1-q_z1_n0_a1_m0)"),
            (4, "0.4*p_z0_n0_a1*q_z0_n0_a1_m0"),
            (5, "0.4*p_z0_n0_a1*(1-q_z0_n0_a1_m0)"),
            (6, "0.7*(1-p_z0_n0_a1)*q_z1_n0_a2_m0"),
            (7, "0.7*(1-p_z0_n0_a1)*(1-q_z1_n0_a2_m0)"),
            (8, "0.3*(1-p_z0_n0_a1)*q_z1_n0_a2_m0"),
            (9, "0.3*(1-p_z0_n0_a1)*(1-q_z1_n0_a2_m0)"),
        ],
    );
}

#[test]
fn parameter_counts_of_two_binary_observations() {
    let m = pomdp(BINARY_TWO_OBS);
    assert_eq!(param_count(&m, 1), 2);
    assert_eq!(param_count(&m, 2), 12);
    assert_eq!(induced_pmc(&m, 2, Topology::Full).unwrap().pmc.num_params(), 12);
    let single = pomdp(CYCLE_SINGLE_ACTION);
    assert_eq!(param_count(&single, 1), 0);
}

const BINARY_TWO_OBS: &str = "\
pomdp
states 2
initial 0
observations 2
obs 0 0
obs 1 1
trans 0 a 1 1
trans 0 b 0 1
trans 1 a 0 1
trans 1 b 1 1
label goal 1
";

const CYCLE_SINGLE_ACTION: &str = "\
pomdp
states 2
initial 0
observations 1
obs 0 0
obs 1 0
trans 0 a 1 1
trans 1 a 0 1
label goal 1
";

#[test]
fn binary_pomdp_becomes_the_simple_pmc() {
    let m = pomdp(BINARY);
    let (simple, prov) = make_simple(&m).unwrap();
    assert_eq!(simple.num_states(), 5);
    assert_eq!(prov.observations, ["0", "1", "(0, simple, 0)"]);
    // s0 plays a or b and moves surely to s_a (3) or s_b (4).
    let a = simple.mdp.action_index("a").unwrap();
    let b = simple.mdp.action_index("b").unwrap();
    assert_eq!(simple.mdp.choice(0, a).unwrap().successors, vec![(3, int(1))]);
    assert_eq!(simple.mdp.choice(0, b).unwrap().successors, vec![(4, int(1))]);
    assert_eq!(simple.observation[3], 2);
    assert_eq!(simple.observation[4], 2);
    let d = induced_pmc(&simple, 1, Topology::Full).unwrap();
    assert!(d.pmc.is_simple());
    let mut expected = pmc(SIMPLE_PMC);
    expected.params = d.pmc.params.clone();
    assert_eq!(d.pmc.chain, expected.chain);
    // Back to a POMDP: actions a and b with Dirac outcomes under observation z_p.
    let back = pmc_to_pomdp(&d.pmc).unwrap();
    assert_eq!(back.mdp.choices[0].len(), 2);
    assert!(back.mdp.choices[0].iter().all(|c| c.successors.len() == 1));
    assert_eq!(induced_pmc(&back, 1, Topology::Full).unwrap().pmc.chain, d.pmc.chain);
}

#[test]
fn simple_pmc_closed_form_and_bounds() {
    let d = pmc(SIMPLE_PMC);
    let goal = d.chain.mask("goal").unwrap();
    let f = state_eliminate(&d, &goal, &[false; 5]);
    assert_eq!(f.display(&d.params).to_string(), "(5 + 3*p)/10");
    let region = Region::uniform(1, frac(1, 10), frac(9, 10));
    let b = region_bounds(&d, &spec("P> 0.5 [F goal]"), &region).unwrap();
    assert_eq!((b.lower.clone(), b.upper.clone()), (Value::Finite(frac(53, 100)), Value::Finite(frac(77, 100))));
    let region = Region::uniform(1, frac(1, 100), frac(99, 100));
    let b = region_bounds(&d, &spec("P> 0.8 [F goal]"), &region).unwrap();
    assert_eq!(b.upper, Value::Finite(frac(797, 1000)));
    assert!(prove_absence(&d, &spec("P> 0.8 [F goal]"), &region, 0).unwrap().is_proven());
    assert!(!prove_absence(&d, &spec("P> 0.5 [F goal]"), &region, 4).unwrap().is_proven());
}

#[test]
fn zero_probability_action_is_a_discontinuity() {
    let m = pomdp(ZERO_PROB);
    let d = induced_pmc(&m, 1, Topology::Full).unwrap();
    assert_eq!(d.pmc.params, ["p_z0_n0_a1"]);
    let s = spec("P> 0.5 [F goal]");
    let checker = PmcChecker::new(&d.pmc, &s).unwrap();
    for p in [frac(1, 1_000_000), frac(1, 1000), frac(1, 2)] {
        assert_eq!(checker.value(&Instantiation::new(vec![p])).unwrap(), Value::Finite(int(1)));
    }
    assert_eq!(checker.recomputations(), 0);
    assert_eq!(checker.value(&Instantiation::new(vec![int(0)])).unwrap(), Value::Finite(int(0)));
    assert_eq!(checker.recomputations(), 1);

    // The same through a controller and by simulation.
    let mut fsc = Fsc::uniform(&m, 1, Topology::Full);
    let product = induced_mc(&m, &fsc).unwrap();
    assert_eq!(check_mc(&product.mc, &s).unwrap(), Value::Finite(int(1)));
    let a2 = m.mdp.action_index("a2").unwrap();
    fsc.action_map[0][0] = vec![(a2, int(1))];
    fsc.memory_update[0][0] = vec![(a2, vec![(0, int(1))])];
    let sim = simulate(&m, &fsc, &s, 200, 50, 7, Execution::Sequential).unwrap();
    assert_eq!(sim.reached, 0);
    assert_eq!(sim.truncated, 200);
}

#[test]
fn underlying_mdp_reaches_the_target_surely() {
    let m = pomdp(THREE_ACTIONS);
    let opt = mdp_optimal(&m.mdp, &spec("P> 0.5 [F goal]")).unwrap();
    assert_eq!(opt.value, Value::Finite(int(1)));
}
