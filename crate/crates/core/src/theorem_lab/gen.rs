//! Random instances with full support and monotone protocols by construction.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::incentives::{Effort, EffortModel};
use crate::outcomes::{JointDistribution, Measure, OutcomeSpace};
use crate::protocol::{Coalition, DeliberationProtocol};
use crate::rational::{ratio, Rational};

/// Largest pmf numerator before normalization.
pub const NUMERATOR_RANGE: i64 = 9;

/// Strictly increasing integer grid of `size` values.
pub fn grid<R: Rng>(rng: &mut R, size: usize) -> Vec<Rational> {
    let mut v = rng.gen_range(0..=2i64);
    (0..size)
        .map(|_| {
            let out = Rational::from_integer(v.into());
            v += rng.gen_range(1..=3i64);
            out
        })
        .collect()
}

/// Normalized positive weights with numerators uniform on `1..=NUMERATOR_RANGE`.
pub fn weights<R: Rng>(rng: &mut R, len: usize) -> Vec<Rational> {
    let raw: Vec<i64> = (0..len)
        .map(|_| rng.gen_range(1..=NUMERATOR_RANGE))
        .collect();
    let total: i64 = raw.iter().sum();
    raw.into_iter().map(|w| ratio(w, total)).collect()
}

/// Outcome space with per-member grid sizes drawn from `sizes`.
pub fn space<R: Rng>(rng: &mut R, n: usize, sizes: &[usize]) -> OutcomeSpace {
    let grids = (0..n)
        .map(|_| {
            let size = *sizes.choose(rng).expect("nonempty size list");
            grid(rng, size)
        })
        .collect();
    OutcomeSpace::new(grids).expect("valid grids")
}

/// Full-support distribution on `space`.
pub fn distribution<R: Rng>(rng: &mut R, space: &OutcomeSpace) -> JointDistribution {
    let pmf = weights(rng, space.cell_count());
    JointDistribution::new(space.clone(), pmf).expect("normalized positive pmf")
}

/// Full-support distribution on the binary space of `n` members.
pub fn binary_distribution<R: Rng>(rng: &mut R, n: usize) -> JointDistribution {
    distribution(rng, &OutcomeSpace::binary(n).expect("n >= 1"))
}

/// Monotone protocol from a random antichain of nonempty coalitions.
pub fn protocol<R: Rng>(rng: &mut R, n: usize) -> DeliberationProtocol {
    let full = (1u32 << n) - 1;
    let mut antichain: Vec<Coalition> = Vec::new();
    for _ in 0..rng.gen_range(1..=n.max(1) + 1) {
        let c = Coalition(rng.gen_range(1..=full));
        if antichain
            .iter()
            .all(|a| !a.is_subset_of(c) && !c.is_subset_of(*a))
        {
            antichain.push(c);
        }
    }
    DeliberationProtocol::from_winning_sets(n, antichain).expect("members in range")
}

/// Probability strictly inside the unit interval on the grid `k / denominator`.
pub fn open_probability<R: Rng>(rng: &mut R, denominator: i64) -> Rational {
    ratio(rng.gen_range(1..denominator), denominator)
}

/// Comonotone coupling of the binary marginals of `f`: one uniform draw decides
/// every member, low when it falls below that member's low probability.
pub fn comonotone_coupling(f: &JointDistribution) -> Measure {
    let space = f.space().clone();
    let n = space.members();
    let low: Vec<Rational> = (0..n)
        .map(|i| Rational::one() - f.marginal(&[i]).expect("member").pmf()[1].clone())
        .collect();
    let mut breaks: Vec<Rational> = low.clone();
    breaks.push(Rational::zero());
    breaks.push(Rational::one());
    breaks.sort();
    breaks.dedup();
    let mut pmf = vec![Rational::zero(); space.cell_count()];
    for w in breaks.windows(2) {
        let outcome: Vec<usize> = low.iter().map(|l| usize::from(*l <= w[0])).collect();
        pmf[space.index_of(&outcome)] += &w[1] - &w[0];
    }
    Measure::new(space, pmf).expect("coupling is a probability measure")
}

/// Independent members whose own effort moves their own marginal toward the top
/// outcome; everyone else is unaffected.
pub fn self_improving_model<R: Rng>(rng: &mut R, n: usize, sizes: &[usize]) -> EffortModel {
    let space = space(rng, n, sizes);
    let lazy: Vec<Vec<Rational>> = (0..n).map(|i| weights(rng, space.size(i))).collect();
    let shift = open_probability(rng, 5);
    let worked: Vec<Vec<Rational>> = lazy
        .iter()
        .map(|m| {
            let top = m.len() - 1;
            m.iter()
                .enumerate()
                .map(|(k, w)| {
                    let point = if k == top {
                        Rational::one()
                    } else {
                        Rational::zero()
                    };
                    (Rational::one() - &shift) * w + &shift * point
                })
                .collect()
        })
        .collect();
    model_from(n, &space, |e, i| {
        if e.contains(i) {
            worked[i].clone()
        } else {
            lazy[i].clone()
        }
    })
}

/// Independent members whose marginals improve with the number of teammates
/// working; own effort leaves one's own marginal unchanged.
pub fn team_improving_model<R: Rng>(rng: &mut R, n: usize, sizes: &[usize]) -> EffortModel {
    let space = space(rng, n, sizes);
    let lazy: Vec<Vec<Rational>> = (0..n).map(|i| weights(rng, space.size(i))).collect();
    let per_helper = open_probability(rng, 5) / Rational::from_integer((n.max(2) - 1).into());
    model_from(n, &space, |e, i| {
        let helpers = e.0.members().filter(|&j| j != i).count();
        let shift = &per_helper * Rational::from_integer(helpers.into());
        let top = lazy[i].len() - 1;
        lazy[i]
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let point = if k == top {
                    Rational::one()
                } else {
                    Rational::zero()
                };
                (Rational::one() - &shift) * w + &shift * point
            })
            .collect()
    })
}

fn model_from(
    n: usize,
    space: &OutcomeSpace,
    marginal: impl Fn(Effort, usize) -> Vec<Rational>,
) -> EffortModel {
    let mut dists = BTreeMap::new();
    for mask in 0..1u32 << n {
        let e = Effort(Coalition(mask));
        let marginals: Vec<Vec<Rational>> = (0..n).map(|i| marginal(e, i)).collect();
        let f = JointDistribution::independent(space.grids().to_vec(), &marginals)
            .expect("positive marginals");
        dists.insert(e, f);
    }
    EffortModel::new(dists, vec![Rational::one(); n]).expect("productive by construction")
}

/// Model whose distributions are drawn independently at full effort and at each
/// single deviation, with no productivity requirement.
pub fn arbitrary_model<R: Rng>(rng: &mut R, n: usize, sizes: &[usize]) -> EffortModel {
    let space = space(rng, n, sizes);
    let mut dists = BTreeMap::new();
    dists.insert(Effort::full(n), distribution(rng, &space));
    for i in 0..n {
        dists.insert(Effort::all_but(n, i), distribution(rng, &space));
    }
    EffortModel::without_productivity_check(dists, vec![Rational::one(); n])
        .expect("all required profiles present")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn comonotone_coupling_keeps_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3 {
            let f = binary_distribution(&mut rng, n);
            let c = comonotone_coupling(&f);
            for i in 0..n {
                assert_eq!(
                    c.marginal(&[i]).unwrap().pmf(),
                    f.marginal(&[i]).unwrap().pmf()
                );
            }
        }
    }

    #[test]
    fn random_protocols_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = protocol(&mut rng, 3);
            assert!(d.is_winning(Coalition::full(3)));
            assert!(!d.is_winning(Coalition(0)));
        }
    }
}
