//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeMap;
use std::panic;
use std::time::{Duration, Instant};

use common::*;
use fscsynth::analysis::{
    check_mc, closed_form, mdp_optimal, prove_absence, region_bounds, state_eliminate, ClosedForm, PmcChecker, Region,
};
use fscsynth::fsc::{fsc_from_instantiation, induced_mc, Fsc, Topology};
use fscsynth::models::expr::{parse_polynomial, table_lookup};
use fscsynth::models::polynomial::Polynomial;
use fscsynth::models::rational::{frac, int, to_f64, Rational};
use fscsynth::models::{Instantiation, Pmc, Pomdp, Specification, Value};
use fscsynth::par::Execution;
use fscsynth::synthesis::{brute_force_oracle, pso_search, SearchConfig};
use fscsynth::transforms::{
    build_induced, induced_pmc, make_simple, map_unfolding_instantiation, param_count, pmc_to_pomdp, substituted_pmc,
    unfold, InducedOptions, InducedPmc, ParamName, RemainMap, Role,
};
use num_traits::One;
use rand::Rng;

fn spec(text: &str) -> Specification {
    Specification::parse(text).unwrap()
}

fn reach() -> Specification {
    spec("P>= 0 [!bad U goal]")
}

fn value(d: &Pmc, u: &Instantiation, s: &Specification) -> Value {
    PmcChecker::new(d, s).unwrap().value(u).unwrap()
}

fn expect_row(d: &Pmc, s: usize, expected: &[(usize, &str)]) {
    let got: BTreeMap<usize, Polynomial> = d.chain.transitions[s].iter().cloned().collect();
    let want: BTreeMap<usize, Polynomial> = expected
        .iter()
        .map(|(t, e)| (*t, parse_polynomial(e, &mut table_lookup(&d.params)).unwrap()))
        .collect();
    assert_eq!(got, want, "row of state {s}");
}

fn correspondence() {
    let start = Instant::now();
    let mut r = rng(101);
    let mut cases = 0;
    for _ in 0..120 {
        let m = random_pomdp(&mut r, PomdpShape::default());
        for k in 1..=3 {
            let d = induced_pmc(&m, k, Topology::Full).unwrap();
            let u = random_instantiation(&mut r, &d.pmc, true);
            let fsc = fsc_from_instantiation(&m, &d, &u).unwrap();
            let product = check_mc(&induced_mc(&m, &fsc).unwrap().mc, &reach()).unwrap();
            assert_eq!(product, value(&d.pmc, &u, &reach()));
            cases += 1;
        }
    }
    assert!(cases >= 300);
    assert!(start.elapsed() <= Duration::from_secs(60), "took {:?}", start.elapsed());
}

fn golden_figures() {
    // Uniform 2-FSC on the fragment: edge ⟨s1,n1⟩ → ⟨s2,n1⟩ has probability 3/20.
    let m = pomdp(FRAGMENT);
    let product = induced_mc(&m, &Fsc::uniform(&m, 2, Topology::Full)).unwrap();
    let from = product.states.iter().position(|&x| x == (0, 0)).unwrap();
    let to = product.states.iter().position(|&x| x == (1, 0)).unwrap();
    assert_eq!(product.mc.transitions[from].iter().find(|(t, _)| *t == to).unwrap().1, frac(3, 20));

    // Edge polynomials of the three-action POMDP.
    let m3 = pomdp(THREE_ACTIONS);
    let remain = RemainMap::last_action(&m3).with(1, m3.mdp.action_index("a1").unwrap());
    let d = build_induced(&m3, &InducedOptions::new(1).remain(remain)).unwrap().pmc;
    expect_row(&d, 0, &[(1, "p_z0_n0_a1"), (2, "0.5*p_z0_n0_a2"), (3, "0.5*p_z0_n0_a2 + (1 - p_z0_n0_a1 - p_z0_n0_a2)")]);
    expect_row(&d, 1, &[(0, "0.5*p_z1_n0_a2"), (2, "1 - 0.5*p_z1_n0_a2")]);
    expect_row(&d, 3, &[(3, "p_z1_n0_a2"), (2, "1 - p_z1_n0_a2")]);

    // Substituted column of the fragment.
    let d = substituted_pmc(&m, 2).unwrap().pmc;
    let (r1, r2, r3) = ("r_z0_n0_a1_m0", "r_z0_n0_a1_m1", "r_z0_n0_a2_m0");
    let rest = format!("(1 - {r1} - {r2} - {r3})");
    let terms = [
        (2, format!("0.6*{r1}")),
        (3, format!("0.6*{r2}")),
        (4, format!("0.4*{r1}")),
        (5, format!("0.4*{r2}")),
        (6, format!("0.7*{r3}")),
        (7, format!("0.7*{rest}")),
        (8, format!("0.3*{r3}")),
        (9, format!("0.3*{rest}")),
    ];
    let terms: Vec<(usize, &str)> = terms.iter().map(|(t, e)| (*t, e.as_str())).collect();
    expect_row(&d, 0, &terms);

    // Binary POMDP → simple POMDP → simple pMC.
    let (simple, _) = make_simple(&pomdp(BINARY)).unwrap();
    assert_eq!(simple.num_states(), 5);
    let d = induced_pmc(&simple, 1, Topology::Full).unwrap().pmc;
    assert!(d.is_simple());
    assert_eq!(d.chain, pmc(SIMPLE_PMC).chain);
}

fn unfolding() {
    let mut r = rng(103);
    for i in 0..50 {
        let m = random_pomdp(&mut r, PomdpShape::default());
        let k = 2 + i % 2;
        let source = induced_pmc(&m, k, Topology::Full).unwrap();
        let unfolded = unfold(&m, k, Topology::Full).unwrap();
        let target = induced_pmc(&unfolded, 1, Topology::Full).unwrap();
        let u = random_instantiation(&mut r, &source.pmc, i % 3 == 0);
        let v = map_unfolding_instantiation(&m, &source, &u, &unfolded, &target).unwrap();
        assert_eq!(value(&source.pmc, &u, &reach()), value(&target.pmc, &v, &reach()), "case {i}");
    }
}

/// `r = p·q` for the standard coordinate `(z, n, a, t)`, completing remainders.
fn joint(d: &InducedPmc, m: &Pomdp, u: &Instantiation, z: usize, n: usize, a: usize, t: usize) -> Rational {
    let remain = d.remain.action[z].unwrap();
    let get = |role, a: Option<usize>, t: Option<usize>| {
        u.get(d.find(&ParamName { role, observation: z, node: n, action: a, target: t }).unwrap()).clone()
    };
    let act = if a == remain {
        Rational::one()
            - m.observation_actions()[z].iter().filter(|&&b| b != remain).map(|&b| get(Role::P, Some(b), None)).sum::<Rational>()
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

fn substitution() {
    let mut r = rng(104);
    for i in 0..50 {
        let m = random_pomdp(&mut r, PomdpShape::default());
        let k = 1 + i % 3;
        let standard = induced_pmc(&m, k, Topology::Full).unwrap();
        let subst = substituted_pmc(&m, k).unwrap();
        let u = random_instantiation(&mut r, &standard.pmc, i % 2 == 0);
        let v = Instantiation::new(
            subst
                .names
                .iter()
                .map(|p| joint(&standard, &m, &u, p.observation, p.node, p.action.unwrap(), p.target.unwrap()))
                .collect(),
        );
        assert_eq!(value(&standard.pmc, &u, &reach()), value(&subst.pmc, &v, &reach()), "case {i}");
    }
}

fn round_trip() {
    let mut r = rng(105);
    for _ in 0..100 {
        let d = random_simple_pmc(&mut r, 30, 6);
        let back = induced_pmc(&pmc_to_pomdp(&d).unwrap(), 1, Topology::Full).unwrap().pmc;
        assert_eq!(back.chain, d.chain);
        assert_eq!(back.num_params(), d.num_params());
    }
}

fn closed_form_fidelity() {
    let mut r = rng(106);
    for i in 0..24 {
        let d = if i % 2 == 0 {
            random_simple_pmc(&mut r, 10, 4)
        } else {
            let shape = PomdpShape { max_states: 4, max_actions: 2, max_observations: 2, rewards: false };
            induced_pmc(&random_pomdp(&mut r, shape), 1 + i % 4 / 2, Topology::Full).unwrap().pmc
        };
        let s = reach();
        let checker = PmcChecker::new(&d, &s).unwrap();
        let ClosedForm::Function(f) = closed_form(&d, &s).unwrap() else { panic!("probabilities are finite") };
        for _ in 0..50 {
            let u = random_instantiation(&mut r, &d, false);
            let x: Vec<Rational> = (0..u.len()).map(|j| u.get(fscsynth::models::polynomial::Var(j as u32)).clone()).collect();
            assert_eq!(Value::Finite(f.eval(&x).unwrap()), checker.value(&u).unwrap(), "model {i}");
        }
    }
    let d = pmc(SIMPLE_PMC);
    let f = state_eliminate(&d, &d.chain.mask("goal").unwrap(), &vec![false; d.num_states()]);
    assert_eq!(f.display(&d.params).to_string(), "(5 + 3*p)/10");
}

fn parameter_count() {
    let mut r = rng(107);
    for states in 1..=6 {
        for observations in 1..=states.min(3) {
            for actions in 1..=3 {
                let shape = PomdpShape { max_states: states, max_actions: actions, max_observations: observations, rewards: false };
                let m = random_pomdp(&mut r, shape);
                let acts = m.observation_actions();
                for k in 1..=3 {
                    let formula: usize =
                        m.used_observations().into_iter().map(|z| k * (acts[z].len() - 1) + k * (k - 1) * acts[z].len()).sum();
                    assert_eq!(induced_pmc(&m, k, Topology::Full).unwrap().pmc.num_params(), formula);
                    assert_eq!(param_count(&m, k), formula);
                }
            }
        }
    }
}

fn discontinuity() {
    let m = pomdp(ZERO_PROB);
    let d = induced_pmc(&m, 1, Topology::Full).unwrap();
    let checker = PmcChecker::new(&d.pmc, &spec("P> 0.5 [F goal]")).unwrap();
    for p in [frac(1, 1_000_000), frac(1, 1000), frac(1, 2)] {
        assert_eq!(checker.value(&Instantiation::new(vec![p])).unwrap(), Value::Finite(int(1)));
    }
    assert_eq!(checker.recomputations(), 0);
    assert_eq!(checker.value(&Instantiation::new(vec![int(0)])).unwrap(), Value::Finite(int(0)));
    assert_eq!(checker.recomputations(), 1);
}

fn absence() {
    let mut r = rng(109);
    let mut models = 0;
    let mut proven = 0;
    while models < 20 {
        let d = random_simple_pmc(&mut r, 12, 4);
        if d.num_params() == 0 {
            continue;
        }
        models += 1;
        let region = {
            let (lo, hi): (Vec<_>, Vec<_>) = (0..d.num_params())
                .map(|_| {
                    let a = frac(r.random_range(1..=19), 20);
                    let b = frac(r.random_range(1..=19), 20);
                    (a.clone().min(b.clone()), a.max(b))
                })
                .unzip();
            Region::new(lo, hi)
        };
        let b = region_bounds(&d, &reach(), &region).unwrap();
        let (lo, hi) = (b.lower.finite().unwrap().clone(), b.upper.finite().unwrap().clone());
        let lambda = (&hi - (&hi - &lo) * frac(r.random_range(0..=4), 10)).min(Rational::one());
        let s = Specification { threshold: lambda, ..spec("P> 0 [!bad U goal]") };
        if !prove_absence(&d, &s, &region, 8).unwrap().is_proven() {
            continue;
        }
        proven += 1;
        let checker = PmcChecker::new(&d, &s).unwrap();
        let t = to_f64(&s.threshold);
        for _ in 0..10_000 {
            let p = (0..d.num_params()).map(|i| random_in(&mut r, &region.lo[i], &region.hi[i], 1000)).collect();
            let u = Instantiation::new(p);
            if checker.value_f64(&u.to_f64()) > t - 1e-9 {
                assert!(!s.satisfied(&checker.value(&u).unwrap()), "sample contradicts an absence proof");
            }
        }
    }
    assert!(proven > 0);
    let d = pmc(SIMPLE_PMC);
    let region = Region::uniform(1, frac(1, 100), frac(99, 100));
    let s = spec("P> 0.8 [F goal]");
    assert_eq!(region_bounds(&d, &s, &region).unwrap().upper, Value::Finite(frac(797, 1000)));
    assert!(prove_absence(&d, &s, &region, 0).unwrap().is_proven());
}

fn synthesis() {
    let m = pomdp(XOR);
    let s = reach();
    let oracle = brute_force_oracle(&m, 1, Topology::Full, &s, Execution::Parallel).unwrap();
    let d = induced_pmc(&m, 1, Topology::Full).unwrap();
    let ClosedForm::Function(f) = closed_form(&d.pmc, &s).unwrap() else { panic!("probabilities are finite") };
    let optimum = (0..=3000).map(|i| f.eval(&[frac(i, 3000)]).unwrap()).max().unwrap();
    assert!(oracle.value < Value::Finite(optimum.clone()), "randomization must help");
    let mut hits = 0;
    for seed in 0..10 {
        let cfg = SearchConfig { seed, max_iterations: 100, stop_on_satisfied: false, ..Default::default() };
        let start = Instant::now();
        let found = pso_search(&d.pmc, &s, &cfg, Execution::Parallel).unwrap();
        assert!(start.elapsed() <= Duration::from_secs(30));
        if (found.value_f64 - to_f64(&optimum)).abs() <= 0.01 {
            hits += 1;
        }
    }
    assert!(hits >= 8, "{hits}/10 seeds");
}

fn mdp_dominance() {
    let mut r = rng(111);
    for i in 0..30u64 {
        let rewards = i % 3 == 2;
        let m = random_pomdp(&mut r, PomdpShape { rewards, ..Default::default() });
        let s = if rewards { spec("Emin<= 1 [F goal]") } else { spec("P>= 1/2 [!bad U goal]") };
        let mdp = mdp_optimal(&m.mdp, &s).unwrap().value;
        for k in 1..=2 {
            let d = if k == 1 { induced_pmc(&m, 1, Topology::Full).unwrap() } else { substituted_pmc(&m, k).unwrap() };
            let cfg = SearchConfig { seed: i, max_iterations: 20, swarm_size: 10, ..Default::default() };
            let found = pso_search(&d.pmc, &s, &cfg, Execution::Parallel).unwrap();
            let fsc = fsc_from_instantiation(&m, &d, &found.instantiation).unwrap();
            let v = check_mc(&induced_mc(&m, &fsc).unwrap().mc, &s).unwrap();
            if rewards {
                assert!(v >= mdp, "{v} below {mdp}");
            } else {
                assert!(v <= mdp, "{v} above {mdp}");
            }
        }
    }
}

fn main() {
    let criteria: [(&str, fn()); 11] = [
        ("controller product equals instantiated pMC", correspondence),
        ("golden figure values", golden_figures),
        ("unfolding equivalence", unfolding),
        ("substitution equivalence", substitution),
        ("simple pMC round trip", round_trip),
        ("closed form fidelity", closed_form_fidelity),
        ("parameter count", parameter_count),
        ("discontinuity at zero", discontinuity),
        ("absence proving soundness", absence),
        ("synthesis effectiveness", synthesis),
        ("MDP dominance", mdp_dominance),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match panic::catch_unwind(check) {
            Ok(()) => println!("PASS {:>2} {name} ({:.2?})", i + 1, start.elapsed()),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL {:>2} {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
