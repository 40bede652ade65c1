//! Randomized and exhaustive audits of the equilibrium and incentive results.
//!
//! Each claim draws its instances from its own ChaCha stream, keyed by the seed
//! and the claim's position, so reports do not depend on scheduling.

mod claims;
pub mod gen;

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SearchCaps;

pub use claims::{correlation_model, experiment_grid, EXPERIMENT_TEAM};

/// Unknown claim identifier.
#[derive(Debug, Error)]
#[error("unknown claim `{0}`")]
pub struct UnknownClaim(pub String);

/// Audited statements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Claim {
    /// Equilibrium existence and interiority by protocol type.
    T1,
    /// Refinement predicate against brute-force belief justification.
    T2,
    /// Threshold form of every equilibrium.
    P1a,
    /// Interior rules on binary outcomes.
    #[serde(rename = "P_binary_interior")]
    PBinaryInterior,
    /// Nested protocols and pointwise disclosure.
    C2,
    /// Correlation and the interior rule.
    C3,
    /// Agreement of the three effort-gain forms.
    #[serde(rename = "T3_identity")]
    T3Identity,
    /// Ranking by effort type.
    P3,
    /// Correlation threshold for consensual dominance.
    P4,
    /// Effective team leaders.
    P5,
    /// Binary closed forms and consensus rankings.
    #[serde(rename = "P_bin")]
    PBin,
    /// Optimal-consensus traces.
    NR,
}

impl Claim {
    /// Every claim in report order.
    pub const ALL: [Claim; 12] = [
        Claim::T1,
        Claim::T2,
        Claim::P1a,
        Claim::PBinaryInterior,
        Claim::C2,
        Claim::C3,
        Claim::T3Identity,
        Claim::P3,
        Claim::P4,
        Claim::P5,
        Claim::PBin,
        Claim::NR,
    ];

    /// Identifier used in configs and reports.
    pub fn id(self) -> &'static str {
        match self {
            Claim::T1 => "T1",
            Claim::T2 => "T2",
            Claim::P1a => "P1a",
            Claim::PBinaryInterior => "P_binary_interior",
            Claim::C2 => "C2",
            Claim::C3 => "C3",
            Claim::T3Identity => "T3_identity",
            Claim::P3 => "P3",
            Claim::P4 => "P4",
            Claim::P5 => "P5",
            Claim::PBin => "P_bin",
            Claim::NR => "NR",
        }
    }

    /// One-line statement of what is checked.
    pub fn statement(self) -> &'static str {
        match self {
            Claim::T1 => "full disclosure is always an equilibrium; partial disclosure exists iff some member cannot force disclosure; partial equilibria are interior iff nobody can force disclosure",
            Claim::T2 => "a full-disclosure equilibrium with deliberation-consistent beliefs exists iff disclosure does not require more consensus than concealment",
            Claim::P1a => "every equilibrium found uses own-outcome threshold strategies",
            Claim::PBinaryInterior => "with binary outcomes an interior equilibrium discloses exactly when the high-outcome members win",
            Claim::C2 => "a protocol that makes disclosure easier has an equilibrium disclosing pointwise at least as much",
            Claim::C3 => "more correlation with equal marginals keeps the interior rule and aligns disclosure with each outcome",
            Claim::T3Identity => "direct, covariance and payoff-difference forms of the effort gain agree exactly",
            Claim::P3 => "self-improving effort favors unilateral disclosure, team-improving effort favors consensual disclosure",
            Claim::P4 => "enough perfect correlation in full-effort outcomes makes consensual disclosure strictly dominate unilateral",
            Claim::P5 => "a leader whose worst outcome is worse news for working teammates strictly beats unilateral disclosure",
            Claim::PBin => "binary closed forms match enumeration; consensus levels rank by effort channel; the no-disclosure posterior moves as stated",
            Claim::NR => "optimal consensus traces: rises then falls in the teammate effect, falls with the common-branch effect, rises with the own and common-high deviation values",
        }
    }

    /// Instances at desk scale.
    pub fn default_count(self) -> usize {
        match self {
            Claim::T1 => 200,
            Claim::T2 => 100,
            Claim::P1a | Claim::PBinaryInterior => 200,
            Claim::C2 | Claim::C3 => 100,
            Claim::T3Identity => 500,
            Claim::P3 => 40,
            Claim::P4 => 10,
            Claim::P5 => 60,
            Claim::PBin => 1000,
            Claim::NR => 4,
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&c| c == self).expect("listed") as u64
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Claim {
    type Err = UnknownClaim;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownClaim(s.to_owned()))
    }
}

/// Audit parameters.
#[derive(Clone, Debug)]
pub struct AuditConfig {
    /// Root of every instance stream.
    pub seed: u64,
    /// Claims to run, in report order.
    pub claims: Vec<Claim>,
    /// Multiplies each claim's default instance count, in percent.
    pub scale_percent: usize,
    /// Largest generated team.
    pub n_max: usize,
    /// Largest generated per-member grid.
    pub grid_max: usize,
    /// Caps handed to equilibrium searches.
    pub caps: SearchCaps,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            claims: Claim::ALL.to_vec(),
            scale_percent: 100,
            n_max: 6,
            grid_max: 4,
            caps: SearchCaps::default(),
        }
    }
}

impl AuditConfig {
    /// Instances for `claim` after scaling, at least one.
    pub fn count(&self, claim: Claim) -> usize {
        (claim.default_count() * self.scale_percent / 100).max(1)
    }
}

/// Outcome of one instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The claim holds.
    Pass,
    /// The claim holds; the note records a secondary observation.
    PassWithNote(String),
    /// The instance falls outside the claim's hypothesis.
    Skip,
    /// Counterexample or error.
    Fail(String),
}

/// Per-claim tally.
#[derive(Clone, Debug, PartialEq)]
pub struct ClaimReport {
    /// The claim.
    pub claim: Claim,
    /// Instances satisfying the claim.
    pub passed: usize,
    /// Instances outside the hypothesis.
    pub skipped: usize,
    /// Counterexamples in instance order.
    pub failures: Vec<String>,
    /// Secondary observations in instance order.
    pub notes: Vec<String>,
    /// Wall-clock seconds; excluded from the rendered report.
    pub seconds: f64,
}

impl ClaimReport {
    /// Whether no instance failed and at least one applied.
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.passed > 0
    }
}

/// Full audit outcome.
#[derive(Clone, Debug)]
pub struct AuditReport {
    /// Seed used.
    pub seed: u64,
    /// Per-claim tallies in config order.
    pub claims: Vec<ClaimReport>,
}

/// Counterexamples printed per claim.
const SHOWN_FAILURES: usize = 5;

impl AuditReport {
    /// Whether every claim passed.
    pub fn passed(&self) -> bool {
        self.claims.iter().all(ClaimReport::passed)
    }

    /// Deterministic text rendering.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "team-disclosure audit, seed {}", self.seed);
        for c in &self.claims {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(out);
            let _ = writeln!(out, "[{status}] {}: {}", c.claim, c.claim.statement());
            let _ = writeln!(
                out,
                "  passed {}, failed {}, outside hypothesis {}",
                c.passed,
                c.failures.len(),
                c.skipped
            );
            for f in c.failures.iter().take(SHOWN_FAILURES) {
                let _ = writeln!(out, "  counterexample: {f}");
            }
            if c.failures.len() > SHOWN_FAILURES {
                let _ = writeln!(out, "  ... {} more", c.failures.len() - SHOWN_FAILURES);
            }
            for n in &c.notes {
                let _ = writeln!(out, "  note: {n}");
            }
        }
        let _ = writeln!(out);
        let failed: Vec<&str> = self
            .claims
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.claim.id())
            .collect();
        if failed.is_empty() {
            let _ = writeln!(out, "all {} claims passed", self.claims.len());
        } else {
            let _ = writeln!(out, "failed claims: {}", failed.join(", "));
        }
        out
    }
}

type Generator = fn(&AuditConfig, &mut ChaCha8Rng, usize) -> Vec<claims::Check>;

fn generator(claim: Claim) -> Generator {
    match claim {
        Claim::T1 => claims::equilibrium_existence,
        Claim::T2 => claims::refinement_characterization,
        Claim::P1a => claims::threshold_strategies,
        Claim::PBinaryInterior => claims::binary_interior_rule,
        Claim::C2 => claims::nested_protocols,
        Claim::C3 => claims::correlation_comparative_statics,
        Claim::T3Identity => claims::gain_identity,
        Claim::P3 => claims::effort_type_ranking,
        Claim::P4 => claims::correlation_threshold,
        Claim::P5 => claims::effective_leader,
        Claim::PBin => claims::binary_rankings,
        Claim::NR => claims::optimal_consensus,
    }
}

/// Audits one claim.
pub fn run_claim(config: &AuditConfig, claim: Claim) -> ClaimReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(claim.index());
    let checks = generator(claim)(config, &mut rng, config.count(claim));
    let verdicts: Vec<Verdict> = checks.par_iter().map(|check| check()).collect();
    let mut report = ClaimReport {
        claim,
        passed: 0,
        skipped: 0,
        failures: Vec::new(),
        notes: Vec::new(),
        seconds: 0.0,
    };
    for v in verdicts {
        match v {
            Verdict::Pass => report.passed += 1,
            Verdict::PassWithNote(n) => {
                report.passed += 1;
                report.notes.push(n);
            }
            Verdict::Skip => report.skipped += 1,
            Verdict::Fail(f) => report.failures.push(f),
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    report
}

/// Audits every configured claim.
pub fn run_audit(config: &AuditConfig) -> AuditReport {
    let claims = config
        .claims
        .par_iter()
        .map(|&c| run_claim(config, c))
        .collect();
    AuditReport {
        seed: config.seed,
        claims,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_ids_round_trip() {
        for c in Claim::ALL {
            assert_eq!(c.id().parse::<Claim>().unwrap(), c);
            assert_eq!(
                serde_json::to_string(&c).unwrap(),
                format!("\"{}\"", c.id())
            );
        }
        assert!("T9".parse::<Claim>().is_err());
    }

    #[test]
    fn small_audit_is_reproducible() {
        let cfg = AuditConfig {
            claims: vec![Claim::T3Identity, Claim::PBin],
            scale_percent: 2,
            ..AuditConfig::default()
        };
        let a = run_audit(&cfg).render();
        let b = run_audit(&cfg).render();
        assert_eq!(a, b);
        assert!(a.contains("[PASS] T3_identity"), "{a}");
    }
}
