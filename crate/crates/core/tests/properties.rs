use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use team_disclosure::binary::{BinaryEnv, BinaryParams, Shape};
use team_disclosure::config::parse_protocol;
use team_disclosure::equilibrium::{
    find_equilibria, full_disclosure_equilibrium, verify_equilibrium, Classification,
};
use team_disclosure::outcomes::{fosd_dominates, JointDistribution};
use team_disclosure::protocol::{Coalition, DeliberationProtocol};
use team_disclosure::rational::{parse_rational, ratio, to_exact_string, Rational};
use team_disclosure::theorem_lab::gen;
use team_disclosure::SearchCaps;

fn prob() -> impl Strategy<Value = Rational> {
    (1i64..50).prop_map(|k| ratio(k, 50))
}

fn params(n: usize) -> impl Strategy<Value = BinaryParams> {
    (prob(), prob(), prob(), prob())
        .prop_map(move |(p, t, o, q)| BinaryParams::new(n, p, t, o, q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rationals_round_trip(num in -10_000i64..10_000, den in 1i64..10_000) {
        let r = ratio(num, den);
        prop_assert_eq!(parse_rational(&to_exact_string(&r)).unwrap(), r);
    }

    #[test]
    fn k_majority_counts_votes(n in 1usize..=6, k_off in 0usize..6, mask in 0u32..64) {
        let k = 1 + k_off % n;
        let d = DeliberationProtocol::k_majority(n, k).unwrap();
        let yes = Coalition(mask & ((1 << n) - 1));
        prop_assert_eq!(d.is_winning(yes), yes.len() >= k);
        prop_assert_eq!(parse_protocol(&format!("k_majority:{n},{k}")).unwrap(), d.clone());
        prop_assert_eq!(d.disclosure_requires_more_consensus(), 2 * k >= n + 2);
    }

    #[test]
    fn random_protocols_are_monotone(seed in any::<u64>(), n in 1usize..=4) {
        let d = gen::protocol(&mut ChaCha8Rng::seed_from_u64(seed), n);
        for s in Coalition::all(n) {
            for i in 0..n {
                prop_assert!(!d.is_winning(s) || d.is_winning(s.with(i)));
            }
        }
    }

    #[test]
    fn full_disclosure_always_verifies(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = gen::protocol(&mut rng, n);
        let space = gen::space(&mut rng, n, &[2, 3]);
        let f = gen::distribution(&mut rng, &space);
        let eq = full_disclosure_equilibrium(&d, &f).unwrap();
        let report = verify_equilibrium(&d, &f, &eq.profile, &eq.posteriors).unwrap();
        prop_assert!(report.is_equilibrium());
    }

    #[test]
    fn found_equilibria_verify_and_use_thresholds(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = gen::protocol(&mut rng, n);
        let space = gen::space(&mut rng, n, &[2, 3]);
        let f = gen::distribution(&mut rng, &space);
        let eqs = find_equilibria(&d, &f, &SearchCaps::default()).unwrap();
        prop_assert!(eqs.iter().any(|e| e.classification == Classification::Full));
        for e in &eqs {
            let report = verify_equilibrium(&d, &f, &e.profile, &e.posteriors).unwrap();
            prop_assert!(report.is_equilibrium());
            prop_assert!(e.profile.is_threshold_form(&space, &e.posteriors));
        }
    }

    #[test]
    fn distributions_dominate_themselves_weakly_only(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = gen::space(&mut rng, n, &[2, 3]);
        let f = gen::distribution(&mut rng, &space);
        prop_assert!(fosd_dominates(&f, &f, false).unwrap());
        prop_assert!(!fosd_dominates(&f, &f, true).unwrap());
        let total: Rational = f.pmf().iter().sum();
        prop_assert!(total.is_one());
    }

    #[test]
    fn mixtures_keep_probability(seed in any::<u64>(), w in 0i64..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = gen::space(&mut rng, 2, &[2, 3]);
        let f = gen::distribution(&mut rng, &space);
        let g = gen::distribution(&mut rng, &space);
        let m = JointDistribution::mix(&f, &g, &ratio(w, 10)).unwrap();
        let total: Rational = m.pmf().iter().sum();
        prop_assert!(total.is_one());
        for i in 0..2 {
            let expected = f.mean(i) * ratio(10 - w, 10) + g.mean(i) * ratio(w, 10);
            prop_assert_eq!(m.mean(i), expected);
        }
    }

    #[test]
    fn binary_probabilities_are_coherent(b in (1usize..=6).prop_flat_map(params), k_off in 0usize..6) {
        let k = 1 + k_off % b.members();
        let nd = b.prob_nd(k).unwrap();
        let high = b.prob_high_and_nd(k).unwrap();
        prop_assert!(nd > Rational::zero() && nd <= Rational::one());
        prop_assert!(high >= Rational::zero() && high <= nd);
        prop_assert_eq!(b.cond_mean_nd(k).unwrap(), b.cond_mean_nd_inverted(k).unwrap());
        prop_assert_eq!(b.is_interior(k).unwrap(), k >= 2);
    }

    #[test]
    fn no_gain_without_an_effort_effect(b in (2usize..=6).prop_flat_map(params)) {
        let env = BinaryEnv::new(b.clone(), b).unwrap();
        for g in env.gains().unwrap() {
            prop_assert!(g.is_zero());
        }
        prop_assert_eq!(env.optimal_k().unwrap(), 1);
    }

    #[test]
    fn sorted_sequences_have_monotone_shapes(mut seq in proptest::collection::vec(1usize..8, 0..12)) {
        seq.sort_unstable();
        prop_assert!(Shape::Increasing.holds(&seq));
        seq.reverse();
        prop_assert!(Shape::Decreasing.holds(&seq));
    }
}
