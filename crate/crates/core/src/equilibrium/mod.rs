//! Team disclosure equilibria: strategy profiles, coalitional verification,
//! exhaustive search and classification.

mod refinement;
mod search;

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::outcomes::{JointDistribution, OutcomeError, OutcomeSpace};
use crate::protocol::{Coalition, DeliberationProtocol, ProtocolError};
use crate::rational::{in_unit_interval, Rational};

pub use refinement::{
    consistent_with_deliberation, deliberation_witness, full_disclosure_is_plausible,
    plausible_full_disclosure_search, PlausibleFullDisclosure,
};
pub use search::find_equilibria;

/// Errors from equilibrium computations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquilibriumError {
    /// Invalid protocol input.
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    /// Invalid outcome input.
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    /// Protocol and distribution disagree on the team size.
    #[error("protocol has {protocol} members but the distribution has {distribution}")]
    TeamMismatch {
        /// Members in the protocol.
        protocol: usize,
        /// Members in the distribution.
        distribution: usize,
    },
    /// Profile does not match the outcome grids.
    #[error("profile entry for member {0} does not match its outcome grid")]
    ProfileShape(usize),
    /// Vote probability outside `[0, 1]`.
    #[error("vote probability of member {member} at outcome {outcome} outside [0, 1]")]
    ProfileRange {
        /// Zero-based member.
        member: usize,
        /// Outcome index.
        outcome: usize,
    },
    /// Posterior vector of the wrong length.
    #[error("expected {expected} posteriors, got {got}")]
    PosteriorLength {
        /// Posteriors supplied.
        got: usize,
        /// Team size.
        expected: usize,
    },
    /// Instance exceeds a configured computational cap.
    #[error("{what} is {got}, above the cap of {limit}")]
    ComputeCap {
        /// Capped quantity.
        what: &'static str,
        /// Configured limit.
        limit: usize,
        /// Requested size.
        got: usize,
    },
}

impl EquilibriumError {
    /// Whether the instance was rejected for size rather than content.
    pub fn is_compute_cap(&self) -> bool {
        matches!(self, EquilibriumError::ComputeCap { .. })
    }
}

/// Each member's probability of voting to disclose at each of their outcomes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DisclosureProfile {
    votes: Vec<Vec<Rational>>,
}

impl DisclosureProfile {
    /// Profile with `votes[i][k]` the disclosure probability at member `i`'s `k`-th outcome.
    pub fn new(space: &OutcomeSpace, votes: Vec<Vec<Rational>>) -> Result<Self, EquilibriumError> {
        if votes.len() != space.members() {
            return Err(EquilibriumError::ProfileShape(
                votes.len().min(space.members()),
            ));
        }
        for (i, v) in votes.iter().enumerate() {
            if v.len() != space.size(i) {
                return Err(EquilibriumError::ProfileShape(i));
            }
            if let Some(k) = v.iter().position(|x| !in_unit_interval(x)) {
                return Err(EquilibriumError::ProfileRange {
                    member: i,
                    outcome: k,
                });
            }
        }
        Ok(Self { votes })
    }

    /// Every member always votes to disclose.
    pub fn full_disclosure(space: &OutcomeSpace) -> Self {
        Self {
            votes: (0..space.members())
                .map(|i| vec![Rational::one(); space.size(i)])
                .collect(),
        }
    }

    /// Deterministic cut profile: member `i` discloses exactly at outcome indices `>= cuts[i]`.
    pub fn from_cuts(space: &OutcomeSpace, cuts: &[usize]) -> Self {
        Self {
            votes: (0..space.members())
                .map(|i| {
                    (0..space.size(i))
                        .map(|k| {
                            if k >= cuts[i] {
                                Rational::one()
                            } else {
                                Rational::zero()
                            }
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Disclosure probabilities per member and outcome index.
    pub fn votes(&self) -> &[Vec<Rational>] {
        &self.votes
    }

    /// Vote vector at a cell given by per-member outcome indices.
    pub fn at(&self, outcome: &[usize]) -> Vec<Rational> {
        outcome
            .iter()
            .enumerate()
            .map(|(i, &k)| self.votes[i][k].clone())
            .collect()
    }

    /// Whether every vote is 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.votes
            .iter()
            .flatten()
            .all(|v| v.is_zero() || v.is_one())
    }

    /// Disclose above the posterior, conceal below it.
    pub fn is_threshold_form(&self, space: &OutcomeSpace, posteriors: &[Rational]) -> bool {
        self.votes.iter().enumerate().all(|(i, v)| {
            v.iter()
                .zip(space.grid(i))
                .all(|(x, value)| match value.cmp(&posteriors[i]) {
                    Ordering::Greater => x.is_one(),
                    Ordering::Less => x.is_zero(),
                    Ordering::Equal => true,
                })
        })
    }
}

/// Probability of disclosure at every cell of the outcome space.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TeamRule {
    values: Vec<Rational>,
}

impl TeamRule {
    /// Rule from per-cell disclosure probabilities.
    pub fn new(values: Vec<Rational>) -> Result<Self, EquilibriumError> {
        if let Some(c) = values.iter().position(|v| !in_unit_interval(v)) {
            return Err(EquilibriumError::Protocol(ProtocolError::VoteRange(c)));
        }
        Ok(Self { values })
    }

    /// Rule induced by a profile under a protocol.
    pub fn from_profile(
        protocol: &DeliberationProtocol,
        space: &OutcomeSpace,
        profile: &DisclosureProfile,
    ) -> Result<Self, EquilibriumError> {
        check_team(protocol, space)?;
        let values = space
            .cells()
            .map(|o| protocol.evaluate_unchecked(&profile.at(&o)))
            .collect();
        Ok(Self { values })
    }

    /// Always disclose.
    pub fn full_disclosure(space: &OutcomeSpace) -> Self {
        Self {
            values: vec![Rational::one(); space.cell_count()],
        }
    }

    /// Disclosure probabilities in cell order.
    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// Cells concealed with positive probability.
    pub fn concealing_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_one())
            .map(|(c, _)| c)
    }

    /// Whether the rule is pointwise at least `other`.
    pub fn dominates(&self, other: &TeamRule) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a >= b)
    }
}

/// Equilibrium type by how much of the outcome space is concealed.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Classification {
    /// At most one outcome profile is ever concealed.
    Full,
    /// Some concealment, but not for all members on non-trivial outcome ranges.
    Partial,
    /// Every member has concealed outcomes at two different own values.
    Interior,
}

impl Classification {
    /// Partial or interior.
    pub fn is_partial(self) -> bool {
        self != Classification::Full
    }

    /// Lower-case label.
    pub fn label(self) -> &'static str {
        match self {
            Classification::Full => "full",
            Classification::Partial => "partial",
            Classification::Interior => "interior",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Classifies a team rule.
pub fn classify(rule: &TeamRule, space: &OutcomeSpace) -> Classification {
    let concealed: Vec<usize> = rule.concealing_cells().collect();
    if concealed.len() <= 1 {
        return Classification::Full;
    }
    let interior = (0..space.members()).all(|i| {
        let first = space.component(concealed[0], i);
        concealed.iter().any(|&c| space.component(c, i) != first)
    });
    if interior {
        Classification::Interior
    } else {
        Classification::Partial
    }
}

/// A verified equilibrium: profile, observer posteriors and induced rule.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Equilibrium {
    /// Members' disclosure votes.
    pub profile: DisclosureProfile,
    /// Observer's expected outcomes after concealment.
    pub posteriors: Vec<Rational>,
    /// Team disclosure rule.
    pub rule: TeamRule,
    /// Whether concealment happens with positive probability.
    pub on_path: bool,
    /// Equilibrium type.
    pub classification: Classification,
}

/// Direction a coalition would deviate in.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Deviation {
    /// All members beat their posterior but the coalition does not disclose.
    ShouldDisclose,
    /// All members fall short of their posterior but the coalition does not conceal.
    ShouldConceal,
}

/// A profitable joint deviation at one cell.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CoalitionViolation {
    /// Per-member outcome indices.
    pub outcome: Vec<usize>,
    /// The deviating coalition.
    pub coalition: Coalition,
    /// Deviation direction.
    pub deviation: Deviation,
}

/// Result of checking a candidate equilibrium.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VerificationReport {
    /// Induced team rule.
    pub rule: TeamRule,
    /// Whether concealment has positive probability.
    pub on_path: bool,
    /// Bayes-consistent posteriors, when on path.
    pub bayes_posteriors: Option<Vec<Rational>>,
    /// Whether the supplied posteriors match Bayes' rule (vacuous off path).
    pub bayes_consistent: bool,
    /// Profitable coalitional deviations.
    pub violations: Vec<CoalitionViolation>,
}

impl VerificationReport {
    /// Both conditions hold.
    pub fn is_equilibrium(&self) -> bool {
        self.bayes_consistent && self.violations.is_empty()
    }
}

pub(crate) fn check_team(
    protocol: &DeliberationProtocol,
    space: &OutcomeSpace,
) -> Result<(), EquilibriumError> {
    if protocol.members() == space.members() {
        Ok(())
    } else {
        Err(EquilibriumError::TeamMismatch {
            protocol: protocol.members(),
            distribution: space.members(),
        })
    }
}

/// Checks coalition-proof disclosure and Bayes consistency of `(profile, posteriors)`.
pub fn verify_equilibrium(
    protocol: &DeliberationProtocol,
    dist: &JointDistribution,
    profile: &DisclosureProfile,
    posteriors: &[Rational],
) -> Result<VerificationReport, EquilibriumError> {
    let space = dist.space();
    let n = space.members();
    check_team(protocol, space)?;
    DisclosureProfile::new(space, profile.votes.clone())?;
    if posteriors.len() != n {
        return Err(EquilibriumError::PosteriorLength {
            got: posteriors.len(),
            expected: n,
        });
    }
    let rule = TeamRule::from_profile(protocol, space, profile)?;
    let mut violations = Vec::new();
    for outcome in space.cells() {
        let x = profile.at(&outcome);
        let mut above = Coalition::EMPTY;
        let mut below = Coalition::EMPTY;
        for i in 0..n {
            match space.grid(i)[outcome[i]].cmp(&posteriors[i]) {
                Ordering::Greater => above = above.with(i),
                Ordering::Less => below = below.with(i),
                Ordering::Equal => {}
            }
        }
        let sides = [
            (above, Deviation::ShouldDisclose, Rational::one()),
            (below, Deviation::ShouldConceal, Rational::zero()),
        ];
        for (side, deviation, target) in sides {
            for coalition in side
                .strict_subsets()
                .chain([side])
                .filter(|c| !c.is_empty())
            {
                if coalition.members().all(|i| x[i] == target) {
                    continue;
                }
                if pivotal_at(protocol, &x, coalition) {
                    violations.push(CoalitionViolation {
                        outcome: outcome.clone(),
                        coalition,
                        deviation,
                    });
                }
            }
        }
    }
    let (on_path, bayes_posteriors, bayes_consistent) = match dist.posterior_no_disclosure(&rule) {
        Ok(post) => {
            let consistent = post == posteriors;
            (true, Some(post), consistent)
        }
        Err(OutcomeError::OffPath) => (false, None, true),
        Err(e) => return Err(e.into()),
    };
    Ok(VerificationReport {
        rule,
        on_path,
        bayes_posteriors,
        bayes_consistent,
        violations,
    })
}

/// `D(1_I, x_-I) > D(0_I, x_-I)`.
fn pivotal_at(protocol: &DeliberationProtocol, x: &[Rational], coalition: Coalition) -> bool {
    let mut yes = x.to_vec();
    let mut no = x.to_vec();
    for i in coalition.members() {
        yes[i] = Rational::one();
        no[i] = Rational::zero();
    }
    protocol.evaluate_unchecked(&yes) > protocol.evaluate_unchecked(&no)
}

/// Posteriors at every member's worst outcome.
pub fn skeptical_posteriors(space: &OutcomeSpace) -> Vec<Rational> {
    (0..space.members()).map(|i| space.min(i).clone()).collect()
}

/// Everyone always votes to disclose; off-path posteriors are skeptical.
pub fn full_disclosure_equilibrium(
    protocol: &DeliberationProtocol,
    dist: &JointDistribution,
) -> Result<Equilibrium, EquilibriumError> {
    let space = dist.space();
    check_team(protocol, space)?;
    let profile = DisclosureProfile::full_disclosure(space);
    let rule = TeamRule::from_profile(protocol, space, &profile)?;
    Ok(Equilibrium {
        profile,
        posteriors: skeptical_posteriors(space),
        rule,
        on_path: false,
        classification: Classification::Full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn half_binary(n: usize) -> JointDistribution {
        JointDistribution::independent_binary(&vec![ratio(1, 2); n]).unwrap()
    }

    #[test]
    fn consensus_interior_equilibrium_verifies() {
        let d = DeliberationProtocol::consensus(2).unwrap();
        let f = half_binary(2);
        let profile = DisclosureProfile::from_cuts(f.space(), &[1, 1]);
        let post = vec![ratio(1, 3), ratio(1, 3)];
        let report = verify_equilibrium(&d, &f, &profile, &post).unwrap();
        assert!(report.is_equilibrium(), "{report:?}");
        assert_eq!(classify(&report.rule, f.space()), Classification::Interior);
    }

    #[test]
    fn wrong_posterior_breaks_bayes_consistency() {
        let d = DeliberationProtocol::consensus(2).unwrap();
        let f = half_binary(2);
        let profile = DisclosureProfile::from_cuts(f.space(), &[1, 1]);
        let report = verify_equilibrium(&d, &f, &profile, &[ratio(1, 2), ratio(1, 3)]).unwrap();
        assert!(!report.bayes_consistent);
    }

    #[test]
    fn coalition_deviation_is_detected() {
        // Under consensus, both always concealing is individually stable but the
        // pair of high types jointly prefers to disclose.
        let d = DeliberationProtocol::consensus(2).unwrap();
        let f = half_binary(2);
        let profile = DisclosureProfile::from_cuts(f.space(), &[2, 2]);
        let post = vec![ratio(1, 2), ratio(1, 2)];
        let report = verify_equilibrium(&d, &f, &profile, &post).unwrap();
        assert!(report.bayes_consistent);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].coalition, Coalition::full(2));
        assert_eq!(report.violations[0].deviation, Deviation::ShouldDisclose);
    }

    #[test]
    fn full_disclosure_is_an_equilibrium_for_every_protocol() {
        let f = half_binary(3);
        for d in DeliberationProtocol::enumerate_all(3).unwrap() {
            let eq = full_disclosure_equilibrium(&d, &f).unwrap();
            let report = verify_equilibrium(&d, &f, &eq.profile, &eq.posteriors).unwrap();
            assert!(report.is_equilibrium());
            assert!(!report.on_path);
        }
    }

    #[test]
    fn classification_boundaries() {
        let space = OutcomeSpace::binary(2).unwrap();
        let rule = |v: [i64; 4]| TeamRule::new(v.iter().map(|&x| ratio(x, 1)).collect()).unwrap();
        assert_eq!(classify(&rule([1, 1, 1, 1]), &space), Classification::Full);
        assert_eq!(classify(&rule([0, 1, 1, 1]), &space), Classification::Full);
        assert_eq!(
            classify(&rule([0, 0, 1, 1]), &space),
            Classification::Partial
        );
        assert_eq!(
            classify(&rule([0, 0, 0, 1]), &space),
            Classification::Interior
        );
    }
}
