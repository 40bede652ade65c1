//! Text and JSON forms of protocols, distributions, effort models and binary
//! environments. Members are one-based in every text form.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::de::{self, Deserializer};
use serde::Deserialize;
use thiserror::Error;

use crate::binary::{BinaryEnv, BinaryError, BinaryParams};
use crate::equilibrium::{DisclosureProfile, EquilibriumError};
use crate::incentives::{Effort, EffortModel, IncentiveError};
use crate::outcomes::{JointDistribution, OutcomeError, OutcomeSpace};
use crate::protocol::{Coalition, DeliberationProtocol, ProtocolError};
use crate::rational::{parse_rational, ParseRationalError, Rational};

/// Malformed or inconsistent input.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// Unrecognized shorthand.
    #[error("cannot parse {what} `{input}`: {reason}")]
    Shorthand {
        /// Kind of value.
        what: &'static str,
        /// Offending text.
        input: String,
        /// Explanation.
        reason: String,
    },
    /// Invalid JSON or schema mismatch.
    #[error("invalid {what}: {source}")]
    Json {
        /// Kind of value.
        what: &'static str,
        /// Underlying error.
        source: serde_json::Error,
    },
    /// Number that is not a rational.
    #[error(transparent)]
    Rational(#[from] ParseRationalError),
    /// Member number outside the team.
    #[error("member {member} outside 1..={n}")]
    Member {
        /// One-based member.
        member: usize,
        /// Team size.
        n: usize,
    },
    /// Cell label that does not match the grid.
    #[error("cell `{0}` is not a point of the outcome grid")]
    Cell(String),
    /// Cell given twice.
    #[error("cell `{0}` listed twice")]
    DuplicateCell(String),
    /// Team size cannot be inferred.
    #[error("{0} needs a team size; give the protocol first or list one value per member")]
    TeamSize(&'static str),
    /// Reading an input file failed.
    #[error("cannot read {path}: {source}")]
    Read {
        /// File path.
        path: String,
        /// Underlying error.
        source: std::io::Error,
    },
    /// Invalid protocol.
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    /// Invalid distribution.
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    /// Invalid profile.
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    /// Invalid effort model.
    #[error(transparent)]
    Incentive(#[from] IncentiveError),
    /// Invalid binary environment.
    #[error(transparent)]
    Binary(#[from] BinaryError),
}

fn shorthand(what: &'static str, input: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Shorthand {
        what,
        input: input.to_owned(),
        reason: reason.into(),
    }
}

/// Exact number written as a JSON number or string (`"1/3"`, `"0.51"`, `2`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Num(pub Rational);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(serde_json::Number),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(s) => s,
            Raw::Number(n) => n.to_string(),
        };
        parse_rational(&text).map(Num).map_err(de::Error::custom)
    }
}

fn nums(v: Vec<Num>) -> Vec<Rational> {
    v.into_iter().map(|n| n.0).collect()
}

fn parse_list(input: &str) -> Result<Vec<Rational>, ConfigError> {
    input
        .split(',')
        .map(|s| parse_rational(s.trim()).map_err(ConfigError::from))
        .collect()
}

fn parse_usizes(what: &'static str, input: &str) -> Result<Vec<usize>, ConfigError> {
    input
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| shorthand(what, input, e.to_string()))
        })
        .collect()
}

fn zero_based(member: usize, n: usize) -> Result<usize, ConfigError> {
    if member == 0 || member > n {
        return Err(ConfigError::Member { member, n });
    }
    Ok(member - 1)
}

/// JSON form of a protocol.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ProtocolSpec {
    /// Shorthand text.
    Text(String),
    /// Named family.
    Named(NamedProtocol),
    /// Generating winning coalitions.
    Custom(CustomProtocol),
}

/// Named protocol family.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NamedProtocol {
    /// At least `k` yes votes.
    KMajority {
        /// Team size.
        n: usize,
        /// Votes needed.
        k: usize,
    },
    /// Any single yes vote.
    Unilateral {
        /// Team size.
        n: usize,
    },
    /// Every vote yes.
    Consensus {
        /// Team size.
        n: usize,
    },
    /// One member decides.
    Leader {
        /// Team size.
        n: usize,
        /// One-based leader.
        leader: usize,
    },
}

/// Protocol from winning coalitions, closed upward.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProtocol {
    /// Team size.
    pub n: usize,
    /// One-based member lists.
    pub winning: Vec<Vec<usize>>,
}

impl ProtocolSpec {
    /// Builds the protocol.
    pub fn build(&self) -> Result<DeliberationProtocol, ConfigError> {
        match self {
            ProtocolSpec::Text(s) => parse_protocol(s),
            ProtocolSpec::Named(p) => Ok(match *p {
                NamedProtocol::KMajority { n, k } => DeliberationProtocol::k_majority(n, k)?,
                NamedProtocol::Unilateral { n } => DeliberationProtocol::unilateral(n)?,
                NamedProtocol::Consensus { n } => DeliberationProtocol::consensus(n)?,
                NamedProtocol::Leader { n, leader } => {
                    DeliberationProtocol::leader(n, zero_based(leader, n)?)?
                }
            }),
            ProtocolSpec::Custom(c) => {
                let sets = c
                    .winning
                    .iter()
                    .map(|set| {
                        set.iter()
                            .map(|&m| zero_based(m, c.n))
                            .collect::<Result<Vec<_>, _>>()
                            .map(Coalition::from_members)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(DeliberationProtocol::from_winning_sets(c.n, sets)?)
            }
        }
    }
}

/// Parses `k_majority:n,k`, `unilateral:n`, `consensus:n`, `leader:n,i` or
/// `custom:n;1,2;2,3`, or a JSON object.
pub fn parse_protocol(input: &str) -> Result<DeliberationProtocol, ConfigError> {
    let input = input.trim();
    if input.starts_with('{') {
        return serde_json::from_str::<ProtocolSpec>(input)
            .map_err(|source| ConfigError::Json {
                what: "protocol",
                source,
            })?
            .build();
    }
    let (kind, args) = input
        .split_once(':')
        .ok_or_else(|| shorthand("protocol", input, "expected kind:arguments"))?;
    let numbers = |expected: usize| -> Result<Vec<usize>, ConfigError> {
        let v = parse_usizes("protocol", args)?;
        if v.len() != expected {
            return Err(shorthand(
                "protocol",
                input,
                format!("expected {expected} numbers"),
            ));
        }
        Ok(v)
    };
    match kind.trim() {
        "k_majority" | "majority" => {
            let v = numbers(2)?;
            Ok(DeliberationProtocol::k_majority(v[0], v[1])?)
        }
        "unilateral" => Ok(DeliberationProtocol::unilateral(numbers(1)?[0])?),
        "consensus" => Ok(DeliberationProtocol::consensus(numbers(1)?[0])?),
        "leader" => {
            let v = numbers(2)?;
            Ok(DeliberationProtocol::leader(v[0], zero_based(v[1], v[0])?)?)
        }
        "custom" => {
            let mut parts = args.split(';');
            let n: usize = parts
                .next()
                .unwrap_or_default()
                .trim()
                .parse()
                .map_err(|_| shorthand("protocol", input, "custom needs a team size first"))?;
            let spec = CustomProtocol {
                n,
                winning: parts
                    .map(|p| parse_usizes("protocol", p))
                    .collect::<Result<_, _>>()?,
            };
            ProtocolSpec::Custom(spec).build()
        }
        other => Err(shorthand(
            "protocol",
            input,
            format!("unknown kind `{other}`"),
        )),
    }
}

/// JSON form of an outcome distribution.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum DistSpec {
    /// Shorthand text.
    Text(String),
    /// Named generator.
    Generator(DistGenerator),
    /// Explicit grid and probabilities.
    Explicit(ExplicitDist),
}

/// Distribution generators.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistGenerator {
    /// Independent members; binary `{0,1}` outcomes when `grid` is absent, in
    /// which case `q` lists high probabilities.
    Independent {
        /// Per-member grids.
        #[serde(default)]
        grid: Option<Vec<Vec<Num>>>,
        /// Per-member marginals over the grid.
        #[serde(default)]
        marginals: Option<Vec<Vec<Num>>>,
        /// High probabilities for binary outcomes.
        #[serde(default)]
        q: Option<Vec<Num>>,
    },
    /// Common outcome with probability `p`, otherwise independent binary.
    CommonMixture {
        /// Probability of the common branch.
        p: Num,
        /// High probability of the common outcome.
        q_common: Num,
        /// Independent high probabilities.
        q: Vec<Num>,
    },
}

/// Explicit distribution.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitDist {
    /// Per-member outcome grids, increasing.
    pub grid: Vec<Vec<Num>>,
    /// Probabilities in cell order (first member slowest), or `[cell, prob]`
    /// pairs with cells written as comma-separated outcome values.
    pub pmf: PmfSpec,
}

/// Probability listing.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PmfSpec {
    /// One probability per cell in order.
    Dense(Vec<Num>),
    /// Labeled cells; unlisted cells get zero.
    Labeled(Vec<(String, Num)>),
}

impl DistSpec {
    /// Builds the distribution; `n` resolves shorthand with a single value.
    pub fn build(&self, n: Option<usize>) -> Result<JointDistribution, ConfigError> {
        match self {
            DistSpec::Text(s) => parse_dist(s, n),
            DistSpec::Generator(DistGenerator::Independent { grid, marginals, q }) => {
                match (grid, marginals, q) {
                    (None, None, Some(q)) => Ok(JointDistribution::independent_binary(
                        &broadcast(nums(q.clone()), n, "independent distribution")?,
                    )?),
                    (Some(grid), Some(marginals), None) => Ok(JointDistribution::independent(
                        grid.iter().map(|g| nums(g.clone())).collect(),
                        &marginals
                            .iter()
                            .map(|m| nums(m.clone()))
                            .collect::<Vec<_>>(),
                    )?),
                    _ => Err(shorthand(
                        "distribution",
                        "independent",
                        "give either `q` or both `grid` and `marginals`",
                    )),
                }
            }
            DistSpec::Generator(DistGenerator::CommonMixture { p, q_common, q }) => {
                let q = broadcast(nums(q.clone()), n, "common mixture")?;
                Ok(JointDistribution::common_mixture(&p.0, &q_common.0, &q)?)
            }
            DistSpec::Explicit(e) => e.build(),
        }
    }
}

impl ExplicitDist {
    fn build(&self) -> Result<JointDistribution, ConfigError> {
        let space = OutcomeSpace::new(self.grid.iter().map(|g| nums(g.clone())).collect())?;
        let pmf = match &self.pmf {
            PmfSpec::Dense(v) => nums(v.clone()),
            PmfSpec::Labeled(cells) => {
                let mut pmf: Vec<Option<Rational>> = vec![None; space.cell_count()];
                for (label, p) in cells {
                    let values = parse_list(label)?;
                    if values.len() != space.members() {
                        return Err(ConfigError::Cell(label.clone()));
                    }
                    let outcome = values
                        .iter()
                        .enumerate()
                        .map(|(i, v)| space.grid(i).iter().position(|g| g == v))
                        .collect::<Option<Vec<usize>>>()
                        .ok_or_else(|| ConfigError::Cell(label.clone()))?;
                    let slot = &mut pmf[space.index_of(&outcome)];
                    if slot.is_some() {
                        return Err(ConfigError::DuplicateCell(label.clone()));
                    }
                    *slot = Some(p.0.clone());
                }
                pmf.into_iter()
                    .map(|p| p.unwrap_or_else(Rational::zero))
                    .collect()
            }
        };
        Ok(JointDistribution::new(space, pmf)?)
    }
}

fn broadcast(
    values: Vec<Rational>,
    n: Option<usize>,
    what: &'static str,
) -> Result<Vec<Rational>, ConfigError> {
    match (values.len(), n) {
        (1, Some(n)) => Ok(vec![values[0].clone(); n]),
        (1, None) => Err(ConfigError::TeamSize(what)),
        _ => Ok(values),
    }
}

/// Parses `independent:q[,q2,...]`, `common_mixture:p,q_common,q[,...]` or a
/// JSON object. A single `q` is repeated for `n` members.
pub fn parse_dist(input: &str, n: Option<usize>) -> Result<JointDistribution, ConfigError> {
    let input = input.trim();
    if input.starts_with('{') {
        return serde_json::from_str::<DistSpec>(input)
            .map_err(|source| ConfigError::Json {
                what: "distribution",
                source,
            })?
            .build(n);
    }
    let (kind, args) = input
        .split_once(':')
        .ok_or_else(|| shorthand("distribution", input, "expected kind:arguments"))?;
    let values = parse_list(args)?;
    match kind.trim() {
        "independent" => Ok(JointDistribution::independent_binary(&broadcast(
            values,
            n,
            "independent distribution",
        )?)?),
        "common_mixture" => {
            if values.len() < 3 {
                return Err(shorthand("distribution", input, "expected p,q_common,q..."));
            }
            let q = broadcast(values[2..].to_vec(), n, "common mixture")?;
            Ok(JointDistribution::common_mixture(
                &values[0], &values[1], &q,
            )?)
        }
        other => Err(shorthand(
            "distribution",
            input,
            format!("unknown kind `{other}`"),
        )),
    }
}

/// Reads a value that is either inline text or `@path` / a path to a `.json` file.
pub fn read_inline_or_file(input: &str) -> Result<String, ConfigError> {
    let path = input
        .strip_prefix('@')
        .or_else(|| input.ends_with(".json").then_some(input));
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
            path: p.to_owned(),
            source,
        }),
        None => Ok(input.to_owned()),
    }
}

/// Votes per member as a JSON matrix `[[x_1(w) for w in grid_1], ...]`.
pub fn parse_profile(input: &str, space: &OutcomeSpace) -> Result<DisclosureProfile, ConfigError> {
    let votes: Vec<Vec<Num>> = serde_json::from_str(input).map_err(|source| ConfigError::Json {
        what: "profile",
        source,
    })?;
    Ok(DisclosureProfile::new(
        space,
        votes.into_iter().map(nums).collect(),
    )?)
}

/// Comma-separated rationals.
pub fn parse_rationals(input: &str) -> Result<Vec<Rational>, ConfigError> {
    parse_list(input)
}

/// JSON effort model.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Distribution per effort profile.
    pub profiles: Vec<EffortProfileSpec>,
    /// Effort costs, one per member.
    pub costs: Vec<Num>,
    /// Require each added effort to yield a dominant distribution.
    #[serde(default = "yes")]
    pub check_productivity: bool,
}

fn yes() -> bool {
    true
}

/// One effort profile.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffortProfileSpec {
    /// One-based members exerting effort.
    pub effort: Vec<usize>,
    /// Outcome distribution under that effort.
    pub dist: DistSpec,
}

impl ModelSpec {
    /// Builds the model.
    pub fn build(&self) -> Result<EffortModel, ConfigError> {
        let n = self.costs.len();
        let mut dists = BTreeMap::new();
        for p in &self.profiles {
            let members = p
                .effort
                .iter()
                .map(|&m| zero_based(m, n))
                .collect::<Result<Vec<_>, _>>()?;
            dists.insert(
                Effort(Coalition::from_members(members)),
                p.dist.build(Some(n))?,
            );
        }
        let costs = nums(self.costs.clone());
        Ok(if self.check_productivity {
            EffortModel::new(dists, costs)?
        } else {
            EffortModel::without_productivity_check(dists, costs)?
        })
    }
}

/// Parses an effort model from JSON text.
pub fn parse_model(input: &str) -> Result<EffortModel, ConfigError> {
    serde_json::from_str::<ModelSpec>(input)
        .map_err(|source| ConfigError::Json {
            what: "effort model",
            source,
        })?
        .build()
}

/// Binary parameters under one effort profile.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    /// Probability of the common branch.
    pub p: Num,
    /// High probability of the common outcome.
    pub q_common: Num,
    /// Focal member's independent high probability.
    pub q_own: Num,
    /// Others' independent high probability.
    pub q_other: Num,
}

/// Binary environment.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    /// Team size.
    pub n: usize,
    /// Full-effort parameters.
    pub full: ParamsSpec,
    /// Parameters when the focal member shirks.
    pub deviation: ParamsSpec,
}

impl EnvSpec {
    /// Builds the environment.
    pub fn build(&self) -> Result<BinaryEnv, ConfigError> {
        let params = |s: &ParamsSpec| {
            BinaryParams::new(
                self.n,
                s.p.0.clone(),
                s.q_common.0.clone(),
                s.q_own.0.clone(),
                s.q_other.0.clone(),
            )
        };
        Ok(BinaryEnv::new(
            params(&self.full)?,
            params(&self.deviation)?,
        )?)
    }
}

/// Parses a binary environment from JSON text.
pub fn parse_env(input: &str) -> Result<BinaryEnv, ConfigError> {
    serde_json::from_str::<EnvSpec>(input)
        .map_err(|source| ConfigError::Json {
            what: "binary environment",
            source,
        })?
        .build()
}

/// Inclusive arithmetic grid `lo:hi:step`.
pub fn parse_grid(input: &str) -> Result<Vec<Rational>, ConfigError> {
    let parts: Vec<&str> = input.split(':').collect();
    if parts.len() != 3 {
        return Err(shorthand("grid", input, "expected lo:hi:step"));
    }
    let lo = parse_rational(parts[0].trim())?;
    let hi = parse_rational(parts[1].trim())?;
    let step = parse_rational(parts[2].trim())?;
    if !step.is_positive() || hi < lo {
        return Err(shorthand(
            "grid",
            input,
            "need lo <= hi and a positive step",
        ));
    }
    let mut out = Vec::new();
    let mut v = lo;
    while v <= hi {
        out.push(v.clone());
        v += &step;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn protocol_shorthands() {
        assert_eq!(
            parse_protocol("k_majority:3,2").unwrap(),
            DeliberationProtocol::k_majority(3, 2).unwrap()
        );
        assert_eq!(
            parse_protocol("leader:2,2").unwrap(),
            DeliberationProtocol::leader(2, 1).unwrap()
        );
        assert_eq!(
            parse_protocol("custom:3;1,2;2,3").unwrap(),
            parse_protocol(r#"{"n":3,"winning":[[1,2],[2,3]]}"#).unwrap()
        );
        assert_eq!(
            parse_protocol(r#"{"kind":"consensus","n":2}"#).unwrap(),
            DeliberationProtocol::consensus(2).unwrap()
        );
        assert!(parse_protocol("leader:2,0").is_err());
        assert!(parse_protocol("majority:2").is_err());
        assert!(parse_protocol(r#"{"kind":"consensus","n":2,"extra":1}"#).is_err());
    }

    #[test]
    fn distribution_forms_agree() {
        let a = parse_dist("independent:0.5", Some(2)).unwrap();
        let b = parse_dist(r#"{"grid":[[0,1],[0,1]],"pmf":[["0,0","1/4"],["0,1","1/4"],["1,0","1/4"],["1,1","1/4"]]}"#, None).unwrap();
        let c = parse_dist(r#"{"kind":"independent","q":["1/2"]}"#, Some(2)).unwrap();
        let d = parse_dist(
            r#"{"grid":[[0,1],[0,1]],"pmf":[0.25,0.25,0.25,0.25]}"#,
            None,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a, d);
        assert!(parse_dist("independent:0.5", None).is_err());
        assert!(parse_dist(r#"{"grid":[[0,1]],"pmf":[["2","1"]]}"#, None).is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("0.30:0.50:0.02").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[10], ratio(1, 2));
        assert!(parse_grid("1:0:1").is_err());
    }
}
