//! JSON views of library results. Rationals are written as exact strings and
//! members and coalitions are one-based.

use serde::Serialize;

use crate::equilibrium::{
    CoalitionViolation, Deviation, Equilibrium, PlausibleFullDisclosure, TeamRule,
    VerificationReport,
};
use crate::incentives::{Corner, DominanceReport};
use crate::outcomes::OutcomeSpace;
use crate::protocol::{Coalition, DeliberationProtocol};
use crate::rational::{to_exact_string, Rational};

fn exact(values: &[Rational]) -> Vec<String> {
    values.iter().map(to_exact_string).collect()
}

fn members(c: Coalition) -> Vec<usize> {
    c.members().map(|m| m + 1).collect()
}

fn cell_label(space: &OutcomeSpace, outcome: &[usize]) -> String {
    outcome
        .iter()
        .enumerate()
        .map(|(i, &k)| to_exact_string(&space.grid(i)[k]))
        .collect::<Vec<_>>()
        .join(",")
}

/// Protocol summary.
#[derive(Debug, Serialize)]
pub struct ProtocolView {
    /// Team size.
    pub n: usize,
    /// Display form.
    pub name: String,
    /// Minimal winning coalitions.
    pub minimal_winning: Vec<Vec<usize>>,
    /// Members who can force disclosure alone.
    pub unilateral_members: Vec<usize>,
    /// Refinement predicate.
    pub disclosure_requires_more_consensus: bool,
}

impl ProtocolView {
    /// View of `protocol`.
    pub fn new(protocol: &DeliberationProtocol) -> Self {
        Self {
            n: protocol.members(),
            name: protocol.to_string(),
            minimal_winning: protocol
                .minimal_winning()
                .iter()
                .map(|&c| members(c))
                .collect(),
            unilateral_members: members(protocol.unilateral_members()),
            disclosure_requires_more_consensus: protocol.disclosure_requires_more_consensus(),
        }
    }
}

/// Disclosure probability at one cell.
#[derive(Debug, Serialize)]
pub struct RuleCell {
    /// Outcome values.
    pub outcome: String,
    /// Probability the team discloses.
    pub disclose: String,
}

fn rule_cells(rule: &TeamRule, space: &OutcomeSpace) -> Vec<RuleCell> {
    space
        .cells()
        .zip(rule.values())
        .map(|(o, v)| RuleCell {
            outcome: cell_label(space, &o),
            disclose: to_exact_string(v),
        })
        .collect()
}

/// Equilibrium summary.
#[derive(Debug, Serialize)]
pub struct EquilibriumView {
    /// `full`, `partial` or `interior`.
    pub classification: &'static str,
    /// Whether concealment has positive probability.
    pub on_path: bool,
    /// Observer's expected outcome per member after concealment.
    pub posteriors: Vec<String>,
    /// Per member, disclosure probability at each own outcome.
    pub votes: Vec<Vec<String>>,
    /// Team disclosure rule.
    pub rule: Vec<RuleCell>,
}

impl EquilibriumView {
    /// View of `eq` on `space`.
    pub fn new(eq: &Equilibrium, space: &OutcomeSpace) -> Self {
        Self {
            classification: eq.classification.label(),
            on_path: eq.on_path,
            posteriors: exact(&eq.posteriors),
            votes: eq.profile.votes().iter().map(|v| exact(v)).collect(),
            rule: rule_cells(&eq.rule, space),
        }
    }
}

/// One profitable deviation.
#[derive(Debug, Serialize)]
pub struct ViolationView {
    /// Outcome values.
    pub outcome: String,
    /// Deviating members.
    pub coalition: Vec<usize>,
    /// `should_disclose` or `should_conceal`.
    pub deviation: &'static str,
}

impl ViolationView {
    fn new(v: &CoalitionViolation, space: &OutcomeSpace) -> Self {
        Self {
            outcome: cell_label(space, &v.outcome),
            coalition: members(v.coalition),
            deviation: match v.deviation {
                Deviation::ShouldDisclose => "should_disclose",
                Deviation::ShouldConceal => "should_conceal",
            },
        }
    }
}

/// Verification summary.
#[derive(Debug, Serialize)]
pub struct VerificationView {
    /// Both conditions hold.
    pub is_equilibrium: bool,
    /// Concealment has positive probability.
    pub on_path: bool,
    /// Supplied posteriors agree with Bayes' rule.
    pub bayes_consistent: bool,
    /// Bayes posteriors when on path.
    pub bayes_posteriors: Option<Vec<String>>,
    /// Profitable coalitional deviations.
    pub violations: Vec<ViolationView>,
    /// Induced team rule.
    pub rule: Vec<RuleCell>,
}

impl VerificationView {
    /// View of `report` on `space`.
    pub fn new(report: &VerificationReport, space: &OutcomeSpace) -> Self {
        Self {
            is_equilibrium: report.is_equilibrium(),
            on_path: report.on_path,
            bayes_consistent: report.bayes_consistent,
            bayes_posteriors: report.bayes_posteriors.as_deref().map(exact),
            violations: report
                .violations
                .iter()
                .map(|v| ViolationView::new(v, space))
                .collect(),
            rule: rule_cells(&report.rule, space),
        }
    }
}

/// Refinement summary.
#[derive(Debug, Serialize)]
pub struct RefinementView {
    /// The protocol.
    pub protocol: ProtocolView,
    /// Closed-form answer: full disclosure survives the refinement.
    pub full_disclosure_plausible: bool,
    /// Brute-force answer, when a distribution is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_found: Option<bool>,
    /// Justifying profile and its posteriors, when found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub justification: Option<Justification>,
}

/// Deliberation outcome that justifies off-path beliefs.
#[derive(Debug, Serialize)]
pub struct Justification {
    /// Deterministic votes.
    pub votes: Vec<Vec<String>>,
    /// Posteriors it produces.
    pub posteriors: Vec<String>,
}

impl Justification {
    /// View of a search result.
    pub fn new(found: &PlausibleFullDisclosure) -> Self {
        Self {
            votes: found
                .justification
                .votes()
                .iter()
                .map(|v| exact(v))
                .collect(),
            posteriors: exact(&found.equilibrium.posteriors),
        }
    }
}

/// One equilibrium at full effort with its gains.
#[derive(Debug, Serialize)]
pub struct CornerView {
    /// The equilibrium.
    pub equilibrium: EquilibriumView,
    /// Per-member effort gains.
    pub gains: Vec<String>,
    /// Every cost vector below the gains sustains full effort.
    pub sustains_positive_costs: bool,
}

impl CornerView {
    /// View of `corner` on `space`.
    pub fn new(corner: &Corner, space: &OutcomeSpace) -> Self {
        use num_traits::Signed;
        Self {
            equilibrium: EquilibriumView::new(&corner.equilibrium, space),
            gains: exact(&corner.gains),
            sustains_positive_costs: corner.gains.iter().all(Signed::is_positive),
        }
    }
}

/// Dominance summary.
#[derive(Debug, Serialize)]
pub struct DominanceView {
    /// First protocol.
    pub a: ProtocolView,
    /// Second protocol.
    pub b: ProtocolView,
    /// Only belief-refined equilibria were used.
    pub refined: bool,
    /// `a` sustains full effort whenever `b` does.
    pub dominates: bool,
    /// And for some cost vector `b` does not.
    pub strictly: bool,
    /// Such a cost vector.
    pub witness: Option<Vec<String>>,
    /// Gains per equilibrium under `a`.
    pub corners_a: Vec<Vec<String>>,
    /// Gains per equilibrium under `b`.
    pub corners_b: Vec<Vec<String>>,
}

impl DominanceView {
    /// Assembles the view.
    pub fn new(
        a: &DeliberationProtocol,
        b: &DeliberationProtocol,
        refined: bool,
        report: &DominanceReport,
        corners_a: &[Vec<Rational>],
        corners_b: &[Vec<Rational>],
    ) -> Self {
        Self {
            a: ProtocolView::new(a),
            b: ProtocolView::new(b),
            refined,
            dominates: report.dominates,
            strictly: report.strictly,
            witness: report.witness.as_deref().map(exact),
            corners_a: corners_a.iter().map(|c| exact(c)).collect(),
            corners_b: corners_b.iter().map(|c| exact(c)).collect(),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("views serialize");
    s.push('\n');
    s
}
