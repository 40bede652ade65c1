//! Effort incentives: career-concern gains from full effort, full-effort sets,
//! protocol dominance and the structural effort conditions behind it.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::equilibrium::{
    consistent_with_deliberation, find_equilibria, verify_equilibrium, DisclosureProfile,
    Equilibrium, EquilibriumError, TeamRule,
};
use crate::outcomes::{
    fosd_dominates, fosd_strictly_everywhere, JointDistribution, Measure, OutcomeError,
    OutcomeSpace,
};
use crate::protocol::{Coalition, DeliberationProtocol};
use crate::rational::{ratio, Rational};
use crate::SearchCaps;

/// Set of members exerting effort, as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Effort(pub Coalition);

impl Effort {
    /// Everyone works.
    pub fn full(n: usize) -> Self {
        Effort(Coalition::full(n))
    }

    /// Everyone but `member` works.
    pub fn all_but(n: usize, member: usize) -> Self {
        Effort(Coalition::full(n).without(member))
    }

    /// Whether `member` works.
    pub fn contains(self, member: usize) -> bool {
        self.0.contains(member)
    }

    /// This profile with `member` shirking.
    pub fn without(self, member: usize) -> Self {
        Effort(self.0.without(member))
    }
}

impl fmt::Display for Effort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Errors from incentive computations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IncentiveError {
    /// Invalid outcome data.
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    /// Equilibrium computation failed.
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    /// The model lacks a distribution for this effort profile.
    #[error("no outcome distribution for effort profile {0}")]
    MissingEffort(Effort),
    /// Effort distributions live on different spaces.
    #[error("effort distributions are defined on different outcome spaces")]
    SpaceMismatch,
    /// Cost vector has the wrong length or a non-positive entry.
    #[error("costs must be {0} positive values")]
    Costs(usize),
    /// Removing a member's effort improves outcomes.
    #[error("effort is not productive: {with} does not dominate {without}")]
    NotProductive {
        /// Profile with the member working.
        with: Effort,
        /// Same profile with the member shirking.
        without: Effort,
    },
    /// Concealment has positive probability only after a deviation.
    #[error("member {0}'s deviation reaches concealment that is off path at full effort")]
    OffPathBracket(usize),
    /// Operation needs every effort profile.
    #[error("operation needs distributions for all effort profiles")]
    Incomplete,
    /// Member index out of range.
    #[error("member {member} outside a team of size {n}")]
    Member {
        /// Zero-based member.
        member: usize,
        /// Team size.
        n: usize,
    },
    /// The dominance indicator is not monotone on the scan grid.
    #[error("dominance indicator is not monotone in the mixing weight (switches near {0})")]
    NonMonotone(String),
}

impl IncentiveError {
    /// Whether the instance was rejected for size rather than content.
    pub fn is_compute_cap(&self) -> bool {
        matches!(self, IncentiveError::Equilibrium(e) if e.is_compute_cap())
    }
}

/// Outcome distributions indexed by effort profile, plus effort costs.
///
/// Full effort and every single-member deviation from it are required; other
/// profiles are optional.
#[derive(Clone, Debug)]
pub struct EffortModel {
    n: usize,
    dists: BTreeMap<Effort, JointDistribution>,
    costs: Vec<Rational>,
}

impl EffortModel {
    /// Model whose effort is productive: adding one member's effort yields a
    /// first-order dominant outcome distribution wherever both profiles are given.
    pub fn new(
        dists: BTreeMap<Effort, JointDistribution>,
        costs: Vec<Rational>,
    ) -> Result<Self, IncentiveError> {
        let model = Self::without_productivity_check(dists, costs)?;
        for (&e, f) in &model.dists {
            for i in e.0.members() {
                if let Some(g) = model.dists.get(&e.without(i)) {
                    if !fosd_dominates(f, g, false)? {
                        return Err(IncentiveError::NotProductive {
                            with: e,
                            without: e.without(i),
                        });
                    }
                }
            }
        }
        Ok(model)
    }

    /// Model without the productivity check, for exploratory parameterizations.
    pub fn without_productivity_check(
        dists: BTreeMap<Effort, JointDistribution>,
        costs: Vec<Rational>,
    ) -> Result<Self, IncentiveError> {
        let first = dists.values().next().ok_or(IncentiveError::Incomplete)?;
        let n = first.space().members();
        if dists.values().any(|d| d.space() != first.space()) {
            return Err(IncentiveError::SpaceMismatch);
        }
        if costs.len() != n || costs.iter().any(|c| !c.is_positive()) {
            return Err(IncentiveError::Costs(n));
        }
        for e in std::iter::once(Effort::full(n)).chain((0..n).map(|i| Effort::all_but(n, i))) {
            if !dists.contains_key(&e) {
                return Err(IncentiveError::MissingEffort(e));
            }
        }
        Ok(Self { n, dists, costs })
    }

    /// Team size.
    pub fn members(&self) -> usize {
        self.n
    }

    /// Common outcome space.
    pub fn space(&self) -> &OutcomeSpace {
        self.full_effort().space()
    }

    /// Effort costs.
    pub fn costs(&self) -> &[Rational] {
        &self.costs
    }

    /// Distribution under an effort profile.
    pub fn dist_of(&self, e: Effort) -> Result<&JointDistribution, IncentiveError> {
        self.dists.get(&e).ok_or(IncentiveError::MissingEffort(e))
    }

    /// Distribution under full effort.
    pub fn full_effort(&self) -> &JointDistribution {
        &self.dists[&Effort::full(self.n)]
    }

    /// Distribution when only `member` shirks.
    pub fn deviation(&self, member: usize) -> Result<&JointDistribution, IncentiveError> {
        self.check_member(member)?;
        self.dist_of(Effort::all_but(self.n, member))
    }

    /// All profiles present.
    pub fn profiles(&self) -> impl Iterator<Item = (&Effort, &JointDistribution)> {
        self.dists.iter()
    }

    /// Same model with a different full-effort distribution.
    pub fn with_full_effort(&self, dist: JointDistribution) -> Result<Self, IncentiveError> {
        let mut dists = self.dists.clone();
        dists.insert(Effort::full(self.n), dist);
        Self::new(dists, self.costs.clone())
    }

    /// Same model with different costs.
    pub fn with_costs(&self, costs: Vec<Rational>) -> Result<Self, IncentiveError> {
        Self::without_productivity_check(self.dists.clone(), costs)
    }

    fn check_member(&self, member: usize) -> Result<(), IncentiveError> {
        if member < self.n {
            Ok(())
        } else {
            Err(IncentiveError::Member { member, n: self.n })
        }
    }
}

/// Moments of a rule under one distribution, for one member.
struct Moments {
    mean: Rational,
    nd: Rational,
    /// `E[w_i (1 - d)]`.
    concealed_mass: Rational,
}

fn moments(dist: &JointDistribution, rule: &TeamRule, i: usize) -> Result<Moments, IncentiveError> {
    let nd = dist.prob_no_disclosure(rule)?;
    let space = dist.space();
    let concealed_mass = dist
        .pmf()
        .iter()
        .zip(rule.values())
        .enumerate()
        .map(|(c, (p, d))| p * (Rational::one() - d) * space.value(c, i))
        .sum();
    Ok(Moments {
        mean: dist.mean(i),
        nd,
        concealed_mass,
    })
}

/// Member `i`'s gain from working rather than shirking, holding the rule and the
/// observer's full-effort posterior fixed.
pub fn effort_gain(
    model: &EffortModel,
    rule: &TeamRule,
    i: usize,
) -> Result<Rational, IncentiveError> {
    let full = moments(model.full_effort(), rule, i)?;
    let dev = moments(model.deviation(i)?, rule, i)?;
    if dev.nd.is_zero() {
        return Ok(full.mean - dev.mean);
    }
    if full.nd.is_zero() {
        return Err(IncentiveError::OffPathBracket(i));
    }
    let post_full = &full.concealed_mass / &full.nd;
    let post_dev = &dev.concealed_mass / &dev.nd;
    Ok(full.mean - dev.mean - dev.nd * (post_full - post_dev))
}

/// The same gain written through covariances between own outcome and disclosure.
pub fn effort_gain_cov(
    model: &EffortModel,
    rule: &TeamRule,
    i: usize,
) -> Result<Rational, IncentiveError> {
    let full = moments(model.full_effort(), rule, i)?;
    let dev = moments(model.deviation(i)?, rule, i)?;
    if full.nd.is_zero() {
        return if dev.nd.is_zero() {
            Ok(full.mean - dev.mean)
        } else {
            Err(IncentiveError::OffPathBracket(i))
        };
    }
    // Cov(w_i, d) = E[w_i] P(ND) - E[w_i (1 - d)].
    let cov_full = &full.mean * &full.nd - &full.concealed_mass;
    let cov_dev = &dev.mean * &dev.nd - &dev.concealed_mass;
    Ok(
        (Rational::one() - &dev.nd) * (&full.mean - &dev.mean) + &dev.nd / &full.nd * cov_full
            - cov_dev,
    )
}

/// Expected-payoff difference computed cell by cell for a given posterior after
/// concealment; usable when that posterior is off path.
pub fn effort_gain_with_posterior(
    model: &EffortModel,
    rule: &TeamRule,
    i: usize,
    posterior: &Rational,
) -> Result<Rational, IncentiveError> {
    let payoff = |dist: &JointDistribution| -> Rational {
        let space = dist.space();
        dist.pmf()
            .iter()
            .zip(rule.values())
            .enumerate()
            .map(|(c, (p, d))| p * (d * space.value(c, i) + (Rational::one() - d) * posterior))
            .sum()
    };
    Ok(payoff(model.full_effort()) - payoff(model.deviation(i)?))
}

/// Gains of all members.
pub fn gain_vector(model: &EffortModel, rule: &TeamRule) -> Result<Vec<Rational>, IncentiveError> {
    (0..model.members())
        .map(|i| effort_gain(model, rule, i))
        .collect()
}

/// Whether the model's costs sustain full effort under `rule`.
pub fn full_effort_set_contains(
    model: &EffortModel,
    rule: &TeamRule,
) -> Result<bool, IncentiveError> {
    let gains = gain_vector(model, rule)?;
    Ok(model.costs().iter().zip(&gains).all(|(c, g)| c <= g))
}

/// An equilibrium at full effort and the gain vector it induces.
#[derive(Clone, Debug)]
pub struct Corner {
    /// The equilibrium.
    pub equilibrium: Equilibrium,
    /// Per-member gains; the full-effort costs it supports form the box below this vector.
    pub gains: Vec<Rational>,
}

/// Gain vectors of every equilibrium at full effort; with `refine`, only
/// equilibria whose beliefs are on path or consistent with deliberation.
pub fn protocol_full_effort_corners(
    protocol: &DeliberationProtocol,
    model: &EffortModel,
    refine: bool,
    caps: &SearchCaps,
) -> Result<Vec<Corner>, IncentiveError> {
    let dist = model.full_effort();
    let mut corners = Vec::new();
    for equilibrium in find_equilibria(protocol, dist, caps)? {
        if refine
            && !equilibrium.on_path
            && !consistent_with_deliberation(&equilibrium.posteriors, dist, protocol, caps)?
        {
            continue;
        }
        let gains = gain_vector(model, &equilibrium.rule)?;
        corners.push(Corner { equilibrium, gains });
    }
    Ok(corners)
}

/// Comparison of two full-effort sets.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DominanceReport {
    /// The first set contains the second.
    pub dominates: bool,
    /// Containment is strict.
    pub strictly: bool,
    /// A cost vector in the first set but not the second.
    pub witness: Option<Vec<Rational>>,
}

/// Compares unions of boxes `{c > 0 : c <= corner}`.
pub fn compare_corners(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> DominanceReport {
    let nonempty = |c: &&Vec<Rational>| c.iter().all(Signed::is_positive);
    let below = |c: &[Rational], s: &[Rational]| c.iter().zip(s).all(|(x, y)| x <= y);
    let dominates = b
        .iter()
        .filter(nonempty)
        .all(|c| a.iter().filter(nonempty).any(|s| below(c, s)));
    let b_nonempty: Vec<&Vec<Rational>> = b.iter().filter(nonempty).collect();
    let witness = a
        .iter()
        .filter(nonempty)
        .find(|c| !b_nonempty.iter().any(|s| below(c, s)))
        .map(|c| {
            // Midpoint between the corner and the largest lower b-coordinate.
            c.iter()
                .enumerate()
                .map(|(j, cj)| {
                    let floor = b_nonempty
                        .iter()
                        .map(|s| &s[j])
                        .filter(|sj| *sj < cj)
                        .max()
                        .cloned()
                        .unwrap_or_else(Rational::zero)
                        .max(Rational::zero());
                    (cj + floor) * ratio(1, 2)
                })
                .collect::<Vec<Rational>>()
        });
    DominanceReport {
        dominates,
        strictly: dominates && witness.is_some(),
        witness,
    }
}

/// Whether protocol `a` sustains full effort for every cost vector `b` does.
pub fn dominance(
    a: &DeliberationProtocol,
    b: &DeliberationProtocol,
    model: &EffortModel,
    refine: bool,
    caps: &SearchCaps,
) -> Result<DominanceReport, IncentiveError> {
    let gains = |p| -> Result<Vec<Vec<Rational>>, IncentiveError> {
        Ok(protocol_full_effort_corners(p, model, refine, caps)?
            .into_iter()
            .map(|c| c.gains)
            .collect())
    };
    Ok(compare_corners(&gains(a)?, &gains(b)?))
}

/// Weak (or, with `strict`, strict) dominance of `a` over `b`.
pub fn dominates(
    a: &DeliberationProtocol,
    b: &DeliberationProtocol,
    model: &EffortModel,
    refine: bool,
    strict: bool,
    caps: &SearchCaps,
) -> Result<bool, IncentiveError> {
    let report = dominance(a, b, model, refine, caps)?;
    Ok(if strict {
        report.strictly
    } else {
        report.dominates
    })
}

/// How effort shapes outcomes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EffortClass {
    /// Effort improves only one's own outcome.
    SelfImproving,
    /// Effort improves only teammates' outcomes.
    TeamImproving,
    /// Neither pattern holds.
    Neither,
}

/// Classifies a model defined on every effort profile.
///
/// Improvements are strict on every upper set other than the empty set and the
/// whole space.
pub fn classify_effort(model: &EffortModel) -> Result<EffortClass, IncentiveError> {
    let n = model.members();
    let profiles: Vec<Effort> = Coalition::all(n).map(Effort).collect();
    if profiles.iter().any(|e| !model.dists.contains_key(e)) {
        return Err(IncentiveError::Incomplete);
    }
    let pairs: Vec<(usize, Effort)> = profiles
        .iter()
        .flat_map(|&e| e.0.members().map(move |i| (i, e)))
        .collect();
    let mut self_improving = true;
    let mut team_improving = n >= 2;
    for &(i, e) in &pairs {
        let with = model.dist_of(e)?;
        let without = model.dist_of(e.without(i))?;
        if self_improving {
            self_improving = improves(with, without, i, true)?;
        }
        if team_improving {
            team_improving = improves(with, without, i, false)?;
        }
    }
    Ok(if self_improving {
        EffortClass::SelfImproving
    } else if team_improving {
        EffortClass::TeamImproving
    } else {
        EffortClass::Neither
    })
}

/// `own = true`: teammates' law unchanged and own outcome strictly better given
/// every teammate profile. `own = false`: own law unchanged and teammates strictly
/// better given every own outcome.
fn improves(
    with: &JointDistribution,
    without: &JointDistribution,
    i: usize,
    own: bool,
) -> Result<bool, IncentiveError> {
    let space = with.space();
    let n = space.members();
    let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    if n == 1 {
        return Ok(own && fosd_strictly_everywhere(with, without)?);
    }
    let (fixed, moving) = if own {
        (others.clone(), vec![i])
    } else {
        (vec![i], others.clone())
    };
    if with.marginal(&fixed)?.pmf() != without.marginal(&fixed)?.pmf() {
        return Ok(false);
    }
    let fixed_space = space.project(&fixed)?;
    for condition in fixed_space.cells() {
        let given: Vec<(usize, usize)> = fixed.iter().copied().zip(condition).collect();
        let a: Measure = with.as_measure().conditional(&given)?;
        let b: Measure = without.as_measure().conditional(&given)?;
        debug_assert_eq!(a.space().members(), moving.len());
        if !fosd_strictly_everywhere(&a, &b)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether bad news about `leader` is worse news about every teammate at full
/// effort than when that teammate shirks.
pub fn effective_team_leader(model: &EffortModel, leader: usize) -> Result<bool, IncentiveError> {
    model.check_member(leader)?;
    let n = model.members();
    let given = [(leader, 0usize)];
    for j in (0..n).filter(|&j| j != leader) {
        let pos = if j < leader { j } else { j - 1 };
        let full = model.full_effort().conditional(&given)?.mean(pos);
        let dev = model.deviation(j)?.conditional(&given)?.mean(pos);
        if full >= dev {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Threshold mixing weight above which a protocol dominates unilateral disclosure.
#[derive(Clone, Debug)]
pub struct EpsilonBar {
    /// Bisection estimate, accurate to `1e-6`.
    pub value: Rational,
    /// Scan grid and indicator values.
    pub scan: Vec<(Rational, bool)>,
}

/// Scans `eps` in `{0, 0.01, ..., 0.99}` and bisects the switch point of:
/// "concealing exactly each member's worst outcome is an equilibrium of
/// `protocol` at `(1 - eps) F + eps G`, and its gains weakly exceed the
/// full-disclosure gains for everyone and strictly for someone".
///
/// Returns `None` when the indicator never holds on the grid.
pub fn find_epsilon_bar(
    base: &EffortModel,
    g: &Measure,
    protocol: &DeliberationProtocol,
) -> Result<Option<EpsilonBar>, IncentiveError> {
    let scan: Vec<(Rational, bool)> = (0..100)
        .map(|k| {
            let eps = ratio(k, 100);
            dominance_indicator(base, g, protocol, &eps).map(|ok| (eps, ok))
        })
        .collect::<Result<_, _>>()?;
    let first_true = scan.iter().position(|(_, ok)| *ok);
    let Some(first) = first_true else {
        return Ok(None);
    };
    if let Some((eps, _)) = scan[first..].iter().find(|(_, ok)| !ok) {
        return Err(IncentiveError::NonMonotone(eps.to_string()));
    }
    if first == 0 {
        return Ok(Some(EpsilonBar {
            value: Rational::zero(),
            scan,
        }));
    }
    let mut lo = scan[first - 1].0.clone();
    let mut hi = scan[first].0.clone();
    let tolerance = ratio(1, 1_000_000);
    while &hi - &lo > tolerance {
        let mid = (&lo + &hi) * ratio(1, 2);
        if dominance_indicator(base, g, protocol, &mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(EpsilonBar { value: hi, scan }))
}

/// The indicator used by [`find_epsilon_bar`] at one mixing weight.
pub fn dominance_indicator(
    base: &EffortModel,
    g: &Measure,
    protocol: &DeliberationProtocol,
    eps: &Rational,
) -> Result<bool, IncentiveError> {
    let mixed = JointDistribution::mix(base.full_effort(), g, eps)?;
    let model = base.with_full_effort(mixed)?;
    let dist = model.full_effort();
    let space = dist.space();
    let votes = (0..space.members())
        .map(|i| {
            (0..space.size(i))
                .map(|k| {
                    if k == 0 {
                        Rational::zero()
                    } else {
                        Rational::one()
                    }
                })
                .collect()
        })
        .collect();
    let profile = DisclosureProfile::new(space, votes)?;
    let rule = TeamRule::from_profile(protocol, space, &profile)?;
    let posteriors = match dist.posterior_no_disclosure(&rule) {
        Ok(p) => p,
        Err(OutcomeError::OffPath) => return Ok(false),
        Err(e) => return Err(e.into()),
    };
    if !verify_equilibrium(protocol, dist, &profile, &posteriors)?.is_equilibrium() {
        return Ok(false);
    }
    let gains = gain_vector(&model, &rule)?;
    let full = gain_vector(&model, &TeamRule::full_disclosure(space))?;
    let weakly = gains.iter().zip(&full).all(|(a, b)| a >= b);
    let somewhere = gains.iter().zip(&full).any(|(a, b)| a > b);
    Ok(weakly && somewhere)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two binary members; each member's high probability is `a` when the other
    /// works and `b` otherwise.
    fn team_improving(a: Rational, b: Rational) -> EffortModel {
        let mut dists = BTreeMap::new();
        for mask in 0..4u32 {
            let e = Effort(Coalition(mask));
            let q0 = if e.contains(1) { a.clone() } else { b.clone() };
            let q1 = if e.contains(0) { a.clone() } else { b.clone() };
            dists.insert(e, JointDistribution::independent_binary(&[q0, q1]).unwrap());
        }
        EffortModel::new(dists, vec![ratio(1, 100); 2]).unwrap()
    }

    #[test]
    fn consensual_gain_in_the_worked_example() {
        let model = team_improving(ratio(3, 5), ratio(1, 2));
        assert_eq!(classify_effort(&model).unwrap(), EffortClass::TeamImproving);
        let consensus = DeliberationProtocol::consensus(2).unwrap();
        let unilateral = DeliberationProtocol::unilateral(2).unwrap();
        let caps = SearchCaps::default();
        let corners = protocol_full_effort_corners(&consensus, &model, false, &caps).unwrap();
        let gains: Vec<Vec<Rational>> = corners.iter().map(|c| c.gains.clone()).collect();
        assert!(gains.contains(&vec![ratio(3, 80), ratio(3, 80)]));
        let uni = protocol_full_effort_corners(&unilateral, &model, false, &caps).unwrap();
        assert!(uni
            .iter()
            .all(|c| c.gains == vec![ratio(0, 1), ratio(0, 1)]));
        let report = dominance(&consensus, &unilateral, &model, false, &caps).unwrap();
        assert!(report.strictly);
        assert_eq!(report.witness, Some(vec![ratio(3, 160), ratio(3, 160)]));
    }

    #[test]
    fn corner_comparison_examples() {
        let v = |a: i64, b: i64| vec![ratio(a, 10), ratio(b, 10)];
        let r = compare_corners(&[v(3, 1), v(1, 3)], &[v(2, 1)]);
        assert!(r.dominates && r.strictly);
        let w = r.witness.unwrap();
        assert!(w[0] > ratio(2, 10) || w[1] > ratio(1, 10));
        let r = compare_corners(&[v(2, 2)], &[v(3, 1)]);
        assert!(!r.dominates);
        let r = compare_corners(&[v(2, 2)], &[v(2, 2), v(0, 5)]);
        assert!(r.dominates && !r.strictly);
    }

    #[test]
    fn productivity_is_validated() {
        let mut dists = BTreeMap::new();
        dists.insert(
            Effort::full(1),
            JointDistribution::independent_binary(&[ratio(1, 3)]).unwrap(),
        );
        dists.insert(
            Effort::all_but(1, 0),
            JointDistribution::independent_binary(&[ratio(1, 2)]).unwrap(),
        );
        assert!(matches!(
            EffortModel::new(dists, vec![ratio(1, 10)]),
            Err(IncentiveError::NotProductive { .. })
        ));
    }
}
