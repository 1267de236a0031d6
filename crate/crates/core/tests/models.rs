mod common;

use common::*;
use fscsynth::fsc::Topology;
use fscsynth::models::format::{parse_pmc, parse_pomdp, write_pmc, write_pomdp};
use fscsynth::models::polynomial::{Monomial, Polynomial};
use fscsynth::models::ratfunc::gcd;
use fscsynth::models::rational::{frac, Rational};
use fscsynth::transforms::induced_pmc;
use proptest::prelude::*;
use rand::Rng;

fn random_poly(r: &mut impl Rng, vars: u32, terms: usize, degree: u32) -> Polynomial {
    let mut p = Polynomial::zero();
    for _ in 0..r.random_range(1..=terms) {
        let pairs: Vec<(u32, u32)> = (0..vars).map(|v| (v, r.random_range(0..=degree))).filter(|&(_, e)| e > 0).collect();
        let c = frac(r.random_range(-9..=9), r.random_range(1..=4));
        p.add_term(Monomial::from_pairs(pairs), c);
    }
    p
}

fn point(r: &mut impl Rng, vars: u32) -> Vec<Rational> {
    (0..vars).map(|_| frac(r.random_range(-20..=20), r.random_range(1..=7))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn polynomials_form_a_ring(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_poly(&mut r, 3, 5, 3);
        let b = random_poly(&mut r, 3, 5, 3);
        let c = random_poly(&mut r, 3, 5, 3);
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        let x = point(&mut r, 3);
        prop_assert_eq!((&a * &b).eval(&x), a.eval(&x) * b.eval(&x));
        prop_assert_eq!((&a + &c).eval(&x), a.eval(&x) + c.eval(&x));
    }

    #[test]
    fn exact_division_inverts_multiplication(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_poly(&mut r, 3, 4, 3);
        let b = random_poly(&mut r, 3, 4, 3);
        prop_assume!(!b.is_zero());
        prop_assert_eq!((&a * &b).div_exact(&b), Some(a));
    }

    #[test]
    fn gcd_keeps_common_factors(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_poly(&mut r, 3, 4, 2);
        let b = random_poly(&mut r, 3, 4, 2);
        let c = random_poly(&mut r, 3, 3, 2);
        prop_assume!(!a.is_zero() && !b.is_zero() && !c.is_zero());
        let f = &a * &c;
        let g = &b * &c;
        let h = gcd(&f, &g);
        prop_assert!(f.div_exact(&h).is_some());
        prop_assert!(g.div_exact(&h).is_some());
        prop_assert!(h.div_exact(&c).is_some(), "common factor lost");
    }

    #[test]
    fn pomdps_round_trip_through_text(seed in any::<u64>(), rewards in any::<bool>()) {
        let m = random_pomdp(&mut rng(seed), PomdpShape { rewards, ..Default::default() });
        let text = write_pomdp(&m);
        prop_assert_eq!(parse_pomdp(&text).unwrap(), m);
    }

    #[test]
    fn pmcs_round_trip_through_text(seed in any::<u64>(), k in 1usize..=2) {
        let mut r = rng(seed);
        let d = random_simple_pmc(&mut r, 12, 4);
        prop_assert_eq!(parse_pmc(&write_pmc(&d)).unwrap(), d);
        let shape = PomdpShape { rewards: r.random_bool(0.5), ..Default::default() };
        let induced = induced_pmc(&random_pomdp(&mut r, shape), k, Topology::Full).unwrap().pmc;
        prop_assert_eq!(parse_pmc(&write_pmc(&induced)).unwrap(), induced);
    }
}

#[test]
fn malformed_inputs_are_rejected() {
    for text in [
        "",
        "pomdp\nstates 2\ninitial 0\nobservations 1\nobs 0 0\nobs 1 0\ntrans 0 a 1 1/2\ntrans 1 a 1 1\n",
        "pomdp\nstates 1\ninitial 3\nobservations 1\nobs 0 0\ntrans 0 a 0 1\n",
        "pomdp\nstates 2\ninitial 0\nobservations 1\nobs 0 0\nobs 1 0\ntrans 0 a 1 1\ntrans 1 b 1 1\n",
    ] {
        assert!(parse_pomdp(text).is_err(), "accepted:\n{text}");
    }
    for text in [
        "pmc\nstates 2\ninitial 0\nparams p\ntrans 0 1 p\ntrans 1 1 1\n",
        "pmc\nstates 1\ninitial 0\nparams p\ntrans 0 0 q\n",
    ] {
        assert!(parse_pmc(text).is_err(), "accepted:\n{text}");
    }
}
