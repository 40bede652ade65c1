//! Off-path beliefs consistent with deliberation.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use super::search::{mixed_radix, ScaledMasses};
use super::{
    check_team, classify, verify_equilibrium, Classification, DisclosureProfile, Equilibrium,
    EquilibriumError, TeamRule,
};
use crate::outcomes::JointDistribution;
use crate::protocol::DeliberationProtocol;
use crate::rational::Rational;
use crate::SearchCaps;

/// A deterministic own-outcome profile that conceals with positive probability and
/// whose Bayesian posteriors equal `posteriors`, if one exists.
pub fn deliberation_witness(
    posteriors: &[Rational],
    dist: &JointDistribution,
    protocol: &DeliberationProtocol,
    caps: &SearchCaps,
) -> Result<Option<DisclosureProfile>, EquilibriumError> {
    let space = dist.space();
    check_team(protocol, space)?;
    if posteriors.len() != space.members() {
        return Err(EquilibriumError::PosteriorLength {
            got: posteriors.len(),
            expected: space.members(),
        });
    }
    let masses = ScaledMasses::new(dist);
    let found = deterministic_profiles(&masses, caps)?.find(|bits| {
        let sums = masses.sums(protocol, |i, k| bits[i][k]);
        if sums.nd.is_zero() {
            return false;
        }
        posteriors.iter().enumerate().all(|(i, target)| {
            // mass_i / (scale_i * nd) == numer / denom
            &sums.mass[i] * target.denom() == target.numer() * &masses.scale[i] * &sums.nd
        })
    });
    Ok(found.map(|bits| bits_to_profile(&bits)))
}

/// Whether some deterministic deliberation outcome justifies `posteriors`.
pub fn consistent_with_deliberation(
    posteriors: &[Rational],
    dist: &JointDistribution,
    protocol: &DeliberationProtocol,
    caps: &SearchCaps,
) -> Result<bool, EquilibriumError> {
    Ok(deliberation_witness(posteriors, dist, protocol, caps)?.is_some())
}

/// Closed-form criterion: a full-disclosure equilibrium with deliberation-consistent
/// off-path beliefs exists unless disclosure requires more consensus.
pub fn full_disclosure_is_plausible(protocol: &DeliberationProtocol) -> bool {
    !protocol.disclosure_requires_more_consensus()
}

/// Full-disclosure equilibrium together with the profile justifying its beliefs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PlausibleFullDisclosure {
    /// Deterministic profile whose concealment yields the posteriors.
    pub justification: DisclosureProfile,
    /// The full-disclosure equilibrium.
    pub equilibrium: Equilibrium,
}

/// Brute-force counterpart of [`full_disclosure_is_plausible`]: enumerates every
/// justified posterior vector and looks for a full-disclosure equilibrium
/// supported by it.
pub fn plausible_full_disclosure_search(
    protocol: &DeliberationProtocol,
    dist: &JointDistribution,
    caps: &SearchCaps,
) -> Result<Option<PlausibleFullDisclosure>, EquilibriumError> {
    let space = dist.space();
    check_team(protocol, space)?;
    let masses = ScaledMasses::new(dist);
    let mut tried: BTreeSet<Vec<Rational>> = BTreeSet::new();
    for bits in deterministic_profiles(&masses, caps)? {
        let sums = masses.sums(protocol, |i, k| bits[i][k]);
        if sums.nd.is_zero() {
            continue;
        }
        let nd = Rational::from_integer(sums.nd.clone());
        let posteriors: Vec<Rational> = (0..masses.members())
            .map(|i| masses.posterior(i, &nd, &Rational::from_integer(sums.mass[i].clone())))
            .collect();
        if !tried.insert(posteriors.clone()) {
            continue;
        }
        if let Some(equilibrium) = full_disclosure_with(protocol, dist, &posteriors)? {
            return Ok(Some(PlausibleFullDisclosure {
                justification: bits_to_profile(&bits),
                equilibrium,
            }));
        }
    }
    Ok(None)
}

/// Full-disclosure equilibrium supported by the given posteriors, if any.
fn full_disclosure_with(
    protocol: &DeliberationProtocol,
    dist: &JointDistribution,
    posteriors: &[Rational],
) -> Result<Option<Equilibrium>, EquilibriumError> {
    let space = dist.space();
    let n = space.members();
    // Off path: indifferent members vote to disclose, which maximizes disclosure.
    let votes: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            space
                .grid(i)
                .iter()
                .map(|v| {
                    if *v >= posteriors[i] {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();
    let profile = DisclosureProfile::new(space, votes)?;
    if let Some(eq) = accept_full(protocol, dist, profile, posteriors)? {
        return Ok(Some(eq));
    }
    // On path: a single concealed cell equal to the posterior vector.
    let atoms: Option<Vec<usize>> = (0..n)
        .map(|i| space.grid(i).iter().position(|v| *v == posteriors[i]))
        .collect();
    let Some(atoms) = atoms else {
        return Ok(None);
    };
    let levels = [
        Rational::zero(),
        Rational::new(1.into(), 2.into()),
        Rational::one(),
    ];
    for pattern in mixed_radix(&vec![levels.len(); n]) {
        let votes: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                (0..space.size(i))
                    .map(|k| match k.cmp(&atoms[i]) {
                        std::cmp::Ordering::Less => Rational::zero(),
                        std::cmp::Ordering::Greater => Rational::one(),
                        std::cmp::Ordering::Equal => levels[pattern[i]].clone(),
                    })
                    .collect()
            })
            .collect();
        let profile = DisclosureProfile::new(space, votes)?;
        if let Some(eq) = accept_full(protocol, dist, profile, posteriors)? {
            return Ok(Some(eq));
        }
    }
    Ok(None)
}

fn accept_full(
    protocol: &DeliberationProtocol,
    dist: &JointDistribution,
    profile: DisclosureProfile,
    posteriors: &[Rational],
) -> Result<Option<Equilibrium>, EquilibriumError> {
    let rule = TeamRule::from_profile(protocol, dist.space(), &profile)?;
    if classify(&rule, dist.space()) != Classification::Full {
        return Ok(None);
    }
    let report = verify_equilibrium(protocol, dist, &profile, posteriors)?;
    Ok(report.is_equilibrium().then(|| Equilibrium {
        profile,
        posteriors: posteriors.to_vec(),
        rule,
        on_path: report.on_path,
        classification: Classification::Full,
    }))
}

fn deterministic_profiles<'a>(
    masses: &'a ScaledMasses,
    caps: &SearchCaps,
) -> Result<impl Iterator<Item = Vec<Vec<bool>>> + 'a, EquilibriumError> {
    let total: usize = masses.sizes.iter().sum();
    if total > caps.max_profile_bits {
        return Err(EquilibriumError::ComputeCap {
            what: "deterministic profile bits",
            limit: caps.max_profile_bits,
            got: total,
        });
    }
    Ok((0u64..1u64 << total).map(move |mask| {
        let mut offset = 0;
        masses
            .sizes
            .iter()
            .map(|&m| {
                let bits = (0..m).map(|k| mask >> (offset + k) & 1 == 1).collect();
                offset += m;
                bits
            })
            .collect()
    }))
}

fn bits_to_profile(bits: &[Vec<bool>]) -> DisclosureProfile {
    DisclosureProfile {
        votes: bits
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&x| if x { Rational::one() } else { Rational::zero() })
                    .collect()
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn unilateral_full_disclosure_is_plausible() {
        let d = DeliberationProtocol::unilateral(2).unwrap();
        let f = JointDistribution::independent_binary(&vec![ratio(1, 2); 2]).unwrap();
        let caps = SearchCaps::default();
        assert!(full_disclosure_is_plausible(&d));
        let found = plausible_full_disclosure_search(&d, &f, &caps)
            .unwrap()
            .unwrap();
        assert_eq!(found.equilibrium.classification, Classification::Full);
        let justified = deliberation_witness(&found.equilibrium.posteriors, &f, &d, &caps).unwrap();
        assert!(justified.is_some());
    }

    #[test]
    fn consensus_full_disclosure_is_not_plausible() {
        let d = DeliberationProtocol::consensus(2).unwrap();
        let f = JointDistribution::independent_binary(&vec![ratio(1, 2); 2]).unwrap();
        let caps = SearchCaps::default();
        assert!(!full_disclosure_is_plausible(&d));
        assert!(plausible_full_disclosure_search(&d, &f, &caps)
            .unwrap()
            .is_none());
        // Skeptical beliefs cannot be produced by any deliberation outcome.
        assert!(!consistent_with_deliberation(&[ratio(0, 1), ratio(0, 1)], &f, &d, &caps).unwrap());
        assert!(consistent_with_deliberation(&[ratio(1, 3), ratio(1, 3)], &f, &d, &caps).unwrap());
    }
}
