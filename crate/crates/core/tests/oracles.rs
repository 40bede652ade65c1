//! Library results against brute-force enumerations written from the definitions.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use team_disclosure::binary::{k_majority_rule, BinaryEnv, BinaryParams};
use team_disclosure::equilibrium::{find_equilibria, Classification, TeamRule};
use team_disclosure::incentives::{
    effort_gain, effort_gain_cov, effort_gain_with_posterior, Effort, EffortModel,
};
use team_disclosure::outcomes::{more_correlated, JointDistribution};
use team_disclosure::protocol::{Coalition, DeliberationProtocol};
use team_disclosure::rational::{ratio, Rational};
use team_disclosure::theorem_lab::gen;
use team_disclosure::SearchCaps;

type Q = Rational;

fn q(n: i64, d: i64) -> Q {
    ratio(n, d)
}

/// Probability of a binary outcome vector in the common mixture, member 0 focal.
fn mixture_prob(n: usize, mask: u32, p: &Q, qt: &Q, own: &Q, other: &Q) -> Q {
    let all = (1u32 << n) - 1;
    let common = if mask == all {
        qt.clone()
    } else if mask == 0 {
        Q::one() - qt
    } else {
        Q::zero()
    };
    let independent: Q = (0..n)
        .map(|i| {
            let hi = if i == 0 { own } else { other };
            if mask >> i & 1 == 1 {
                hi.clone()
            } else {
                Q::one() - hi
            }
        })
        .product();
    p * common + (Q::one() - p) * independent
}

/// `(P(ND), P(w_0 high and ND))` when the team discloses on `k` or more highs.
fn brute_binary(n: usize, k: usize, p: &Q, qt: &Q, own: &Q, other: &Q) -> (Q, Q) {
    let mut nd = Q::zero();
    let mut high_nd = Q::zero();
    for mask in 0..1u32 << n {
        if (mask.count_ones() as usize) < k {
            let pr = mixture_prob(n, mask, p, qt, own, other);
            if mask & 1 == 1 {
                high_nd += &pr;
            }
            nd += pr;
        }
    }
    (nd, high_nd)
}

#[test]
fn binary_worked_instance() {
    let h = q(1, 2);
    let b = BinaryParams::new(3, h.clone(), h.clone(), h.clone(), h.clone()).unwrap();
    let (nd, high_nd) = brute_binary(3, 2, &h, &h, &h, &h);
    assert_eq!((nd.clone(), high_nd.clone()), (q(1, 2), q(1, 16)));
    assert_eq!(b.prob_nd(2).unwrap(), nd);
    assert_eq!(b.prob_high_and_nd(2).unwrap(), high_nd);
    assert_eq!(b.cond_mean_nd(2).unwrap(), q(1, 8));
}

#[test]
fn binary_closed_forms_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..400 {
        let n = rng.gen_range(1..=6);
        let draw = |rng: &mut ChaCha8Rng| q(rng.gen_range(1..20), 20);
        let (p, qt, own, other) = (
            draw(&mut rng),
            draw(&mut rng),
            draw(&mut rng),
            draw(&mut rng),
        );
        let b = BinaryParams::new(n, p.clone(), qt.clone(), own.clone(), other.clone()).unwrap();
        for k in 1..=n {
            let (nd, high_nd) = brute_binary(n, k, &p, &qt, &own, &other);
            assert_eq!(b.prob_nd(k).unwrap(), nd, "n={n} k={k}");
            assert_eq!(b.prob_high_and_nd(k).unwrap(), high_nd, "n={n} k={k}");
            assert_eq!(b.cond_mean_nd(k).unwrap(), &high_nd / &nd, "n={n} k={k}");
            assert_eq!(
                b.cond_mean_nd_inverted(k).unwrap(),
                &high_nd / &nd,
                "n={n} k={k}"
            );
        }
    }
}

#[test]
fn binary_gain_matches_general_effort_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..60 {
        let n = rng.gen_range(2..=4);
        let draw = |rng: &mut ChaCha8Rng| q(rng.gen_range(2..19), 20);
        let full = BinaryParams::new(
            n,
            draw(&mut rng),
            draw(&mut rng),
            draw(&mut rng),
            draw(&mut rng),
        )
        .unwrap();
        let dev = BinaryParams::new(
            n,
            draw(&mut rng),
            draw(&mut rng),
            draw(&mut rng),
            draw(&mut rng),
        )
        .unwrap();
        let env = BinaryEnv::new(full.clone(), dev.clone()).unwrap();
        let mut dists = BTreeMap::new();
        dists.insert(Effort::full(n), full.joint_distribution(0).unwrap());
        for j in 0..n {
            dists.insert(Effort::all_but(n, j), dev.joint_distribution(j).unwrap());
        }
        let model = EffortModel::without_productivity_check(dists, vec![Q::one(); n]).unwrap();
        for k in 1..=n {
            let rule = k_majority_rule(n, k).unwrap();
            assert_eq!(
                env.gain(k).unwrap(),
                effort_gain(&model, &rule, 0).unwrap(),
                "n={n} k={k}"
            );
        }
    }
}

/// Disclosure probability of a protocol under independent mixed votes.
fn multilinear(protocol: &DeliberationProtocol, x: &[Q]) -> Q {
    let n = x.len();
    (0..1u32 << n)
        .filter(|&s| protocol.is_winning(Coalition(s)))
        .map(|s| {
            (0..n)
                .map(|i| {
                    if s >> i & 1 == 1 {
                        x[i].clone()
                    } else {
                        Q::one() - &x[i]
                    }
                })
                .product::<Q>()
        })
        .sum()
}

/// Coalition-proofness and Bayes consistency checked cell by cell.
fn oracle_is_equilibrium(
    protocol: &DeliberationProtocol,
    dist: &JointDistribution,
    votes: &[Vec<Q>],
    posteriors: &[Q],
) -> bool {
    let space = dist.space();
    let n = space.members();
    let mut nd = Q::zero();
    let mut concealed = vec![Q::zero(); n];
    for (cell, outcome) in space.cells().enumerate() {
        let x: Vec<Q> = (0..n).map(|i| votes[i][outcome[i]].clone()).collect();
        let d = multilinear(protocol, &x);
        let miss = dist.prob(cell) * (Q::one() - &d);
        for i in 0..n {
            concealed[i] += &miss * &space.grid(i)[outcome[i]];
        }
        nd += miss;
        for coalition in 1..1u32 << n {
            let members: Vec<usize> = (0..n).filter(|&i| coalition >> i & 1 == 1).collect();
            let (mut yes, mut no) = (x.clone(), x.clone());
            for &i in &members {
                yes[i] = Q::one();
                no[i] = Q::zero();
            }
            if multilinear(protocol, &yes) <= multilinear(protocol, &no) {
                continue;
            }
            let value = |i: usize| &space.grid(i)[outcome[i]];
            if members.iter().all(|&i| value(i) > &posteriors[i])
                && members.iter().any(|&i| !x[i].is_one())
            {
                return false;
            }
            if members.iter().all(|&i| value(i) < &posteriors[i])
                && members.iter().any(|&i| !x[i].is_zero())
            {
                return false;
            }
        }
    }
    nd.is_zero() || (0..n).all(|i| &concealed[i] / &nd == posteriors[i])
}

/// Rules of every on-path deterministic equilibrium, by exhaustive profile search.
fn oracle_deterministic_rules(
    protocol: &DeliberationProtocol,
    dist: &JointDistribution,
) -> BTreeSet<Vec<Q>> {
    let space = dist.space();
    let n = space.members();
    let sizes: Vec<usize> = (0..n).map(|i| space.size(i)).collect();
    let bits: usize = sizes.iter().sum();
    let mut rules = BTreeSet::new();
    for code in 0..1u64 << bits {
        let mut offset = 0;
        let votes: Vec<Vec<Q>> = sizes
            .iter()
            .map(|&m| {
                let v = (0..m)
                    .map(|k| {
                        if code >> (offset + k) & 1 == 1 {
                            Q::one()
                        } else {
                            Q::zero()
                        }
                    })
                    .collect();
                offset += m;
                v
            })
            .collect();
        let rule: Vec<Q> = space
            .cells()
            .map(|o| {
                multilinear(
                    protocol,
                    &(0..n).map(|i| votes[i][o[i]].clone()).collect::<Vec<_>>(),
                )
            })
            .collect();
        let nd: Q = rule
            .iter()
            .enumerate()
            .map(|(c, d)| dist.prob(c) * (Q::one() - d))
            .sum();
        if nd.is_zero() {
            continue;
        }
        let posteriors: Vec<Q> = (0..n)
            .map(|i| {
                let mass: Q = rule
                    .iter()
                    .enumerate()
                    .map(|(c, d)| dist.prob(c) * (Q::one() - d) * space.value(c, i))
                    .sum();
                mass / &nd
            })
            .collect();
        if oracle_is_equilibrium(protocol, dist, &votes, &posteriors) {
            rules.insert(rule);
        }
    }
    rules
}

#[test]
fn consensus_example_has_interior_equilibrium_at_one_third() {
    let d = DeliberationProtocol::k_majority(2, 2).unwrap();
    let f = JointDistribution::independent_binary(&[q(1, 2), q(1, 2)]).unwrap();
    let eqs = find_equilibria(&d, &f, &SearchCaps::default()).unwrap();
    let interior: Vec<_> = eqs
        .iter()
        .filter(|e| e.classification == Classification::Interior)
        .collect();
    assert_eq!(interior.len(), 1);
    assert_eq!(interior[0].posteriors, vec![q(1, 3), q(1, 3)]);
}

#[test]
fn equilibrium_search_covers_brute_force_and_passes_it() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let caps = SearchCaps::default();
    for n in 2..=3 {
        for protocol in DeliberationProtocol::enumerate_all(n).unwrap() {
            for _ in 0..4 {
                let space = gen::space(&mut rng, n, &[2]);
                let dist = gen::distribution(&mut rng, &space);
                let eqs = find_equilibria(&protocol, &dist, &caps).unwrap();
                for e in &eqs {
                    assert!(
                        oracle_is_equilibrium(&protocol, &dist, e.profile.votes(), &e.posteriors),
                        "{protocol}: library equilibrium rejected by oracle"
                    );
                }
                let found: BTreeSet<Vec<Q>> =
                    eqs.iter().map(|e| e.rule.values().to_vec()).collect();
                for rule in oracle_deterministic_rules(&protocol, &dist) {
                    assert!(found.contains(&rule), "{protocol}: missed rule {rule:?}");
                }
            }
        }
    }
}

#[test]
fn gain_forms_equal_payoff_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..150 {
        let n = rng.gen_range(1..=3);
        let model = gen::arbitrary_model(&mut rng, n, &[2, 3]);
        let space = model.space().clone();
        let mut values: Vec<Q> = (0..space.cell_count())
            .map(|_| q(rng.gen_range(0..=2), 2))
            .collect();
        values[0] = Q::zero();
        let rule = TeamRule::new(values.clone()).unwrap();
        for i in 0..n {
            let full = model.full_effort();
            let nd: Q = full
                .pmf()
                .iter()
                .zip(&values)
                .map(|(p, d)| p * (Q::one() - d))
                .sum();
            let post: Q = full
                .pmf()
                .iter()
                .zip(&values)
                .enumerate()
                .map(|(c, (p, d))| p * (Q::one() - d) * space.value(c, i))
                .sum::<Q>()
                / nd;
            let payoff = |f: &JointDistribution| -> Q {
                f.pmf()
                    .iter()
                    .zip(&values)
                    .enumerate()
                    .map(|(c, (p, d))| p * (d * space.value(c, i) + (Q::one() - d) * &post))
                    .sum()
            };
            let direct = payoff(full) - payoff(model.deviation(i).unwrap());
            assert_eq!(effort_gain(&model, &rule, i).unwrap(), direct);
            assert_eq!(effort_gain_cov(&model, &rule, i).unwrap(), direct);
            assert_eq!(
                effort_gain_with_posterior(&model, &rule, i, &post).unwrap(),
                direct
            );
        }
    }
}

#[test]
fn pairwise_correlation_can_lower_aligned_disclosure_with_three_members() {
    let pmf = [
        q(7, 24),
        q(1, 24),
        q(1, 24),
        q(1, 24),
        q(1, 12),
        q(5, 24),
        q(1, 6),
        q(1, 8),
    ];
    let f = JointDistribution::new(
        team_disclosure::outcomes::OutcomeSpace::binary(3).unwrap(),
        pmf.to_vec(),
    )
    .unwrap();
    let coupling = gen::comonotone_coupling(&f);
    let g = JointDistribution::mix(&f, &coupling, &q(1, 4)).unwrap();
    assert!(more_correlated(&g, &f).unwrap());
    let rule = k_majority_rule(3, 2).unwrap();
    let aligned =
        |d: &JointDistribution| -> Q { (4..8).map(|c| d.prob(c) * &rule.values()[c]).sum() };
    assert_eq!(aligned(&f), q(1, 2));
    assert_eq!(aligned(&g), q(23, 48));
    let caps = SearchCaps::default();
    let majority = DeliberationProtocol::k_majority(3, 2).unwrap();
    let interior = |d: &JointDistribution| -> Vec<Vec<Q>> {
        find_equilibria(&majority, d, &caps)
            .unwrap()
            .into_iter()
            .filter(|e| e.classification == Classification::Interior)
            .map(|e| e.rule.values().to_vec())
            .collect()
    };
    assert!(interior(&f).contains(&rule.values().to_vec()));
    assert!(interior(&g).contains(&rule.values().to_vec()));
}
