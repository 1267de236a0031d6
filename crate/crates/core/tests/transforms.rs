mod common;

use common::*;
use fscsynth::analysis::mdp_optimal;
use fscsynth::fsc::Topology;
use fscsynth::models::{Pomdp, Specification};
use fscsynth::transforms::{induced_pmc, insert_intermediate_states, make_binary, make_simple, pmc_to_pomdp};
use proptest::prelude::*;

fn optima(m: &Pomdp, rewards: bool) -> Vec<fscsynth::models::Value> {
    let specs: &[&str] = if rewards {
        &["Emax<= 5 [F goal]", "Emin<= 5 [F goal]"]
    } else {
        &["P>= 0 [!bad U goal]", "P<= 1/2 [!bad U goal]"]
    };
    specs.iter().map(|t| mdp_optimal(&m.mdp, &Specification::parse(t).unwrap()).unwrap().value).collect()
}

fn shape(rewards: bool) -> PomdpShape {
    PomdpShape { max_states: 6, max_actions: 4, max_observations: 3, rewards }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn normal_forms_preserve_mdp_optima(seed in any::<u64>(), rewards in any::<bool>()) {
        let m = random_pomdp(&mut rng(seed), shape(rewards));
        let (b, pb) = make_binary(&m).unwrap();
        prop_assert!(b.mdp.choices.iter().all(|c| c.len() <= 2));
        prop_assert_eq!(pb.observations.len(), b.num_observations);
        let (s, ps) = make_simple(&b).unwrap();
        prop_assert_eq!(ps.observations.len(), s.num_observations);
        let expected = optima(&m, rewards);
        prop_assert_eq!(optima(&b, rewards), expected.clone());
        prop_assert_eq!(optima(&s, rewards), expected);
        // Original states keep their ids and observations.
        prop_assert_eq!(&s.observation[..m.num_states()], &m.observation[..]);
    }

    #[test]
    fn simple_pomdps_induce_simple_pmcs(seed in any::<u64>()) {
        let m = random_pomdp(&mut rng(seed), shape(false));
        let (s, _) = make_simple(&make_binary(&m).unwrap().0).unwrap();
        for c in &s.mdp.choices {
            if c.len() == 2 {
                prop_assert!(c.iter().all(|ch| ch.successors.len() == 1));
            }
        }
        let d = induced_pmc(&s, 1, Topology::Full).unwrap();
        prop_assert!(d.pmc.is_simple());
        // A simple pMC whose parameters all occur maps back to a POMDP with the same chain.
        if d.pmc.used_params().len() == d.pmc.num_params() {
            let back = induced_pmc(&pmc_to_pomdp(&d.pmc).unwrap(), 1, Topology::Full).unwrap();
            prop_assert_eq!(back.pmc.chain, d.pmc.chain);
        }
    }

    #[test]
    fn intermediate_states_reveal_the_next_observation(seed in any::<u64>(), rewards in any::<bool>()) {
        let m = random_pomdp(&mut rng(seed), shape(rewards));
        let (t, prov) = insert_intermediate_states(&m).unwrap();
        prop_assert_eq!(prov.observations.len(), t.num_observations);
        prop_assert_eq!(optima(&t, rewards), optima(&m, rewards));
        let n = m.num_states();
        for x in n..t.num_states() {
            // One action, and every successor is an original state with a single observation.
            prop_assert_eq!(t.mdp.choices[x].len(), 1);
            let succ = &t.mdp.choices[x][0].successors;
            prop_assert!(succ.iter().all(|(s, _)| *s < n));
            let z = t.observation[succ[0].0];
            prop_assert!(succ.iter().all(|(s, _)| t.observation[*s] == z));
            let prefix = format!("({}, next, ", z);
            prop_assert!(prov.observations[t.observation[x]].starts_with(&prefix));
        }
        for s in 0..n {
            prop_assert!(t.mdp.choices[s].iter().flat_map(|c| &c.successors).all(|(x, _)| *x >= n));
        }
    }
}

#[test]
fn binary_provenance_names_depths() {
    let m = pomdp(THREE_ACTIONS);
    let (b, prov) = make_binary(&m).unwrap();
    assert!(b.num_states() > m.num_states());
    assert_eq!(prov.observations[m.num_observations], "(0, binary, 1)");
    assert!(prov.header().starts_with("# observation 0 = 0\n"));
}
