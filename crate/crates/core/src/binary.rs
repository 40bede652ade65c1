//! Closed forms for symmetric binary teams under K-majority deliberation.
//!
//! With probability `p` every member receives a common outcome, high with
//! probability `q_common`. Otherwise outcomes are independent: the focal member
//! (index 0) is high with probability `q_own`, every other member with `q_other`.
//! Outcomes are 0 or 1. The team rule is the least-disclosure K-majority
//! equilibrium: disclose iff at least `k` members drew a high outcome.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::equilibrium::TeamRule;
use crate::outcomes::{JointDistribution, OutcomeError};
use crate::rational::{
    binomial, in_open_unit_interval, pow, to_decimal_string, to_exact_string, Rational,
};

/// Errors from the binary closed forms.
#[derive(Debug, Error)]
pub enum BinaryError {
    /// A probability parameter on the boundary or outside the unit interval.
    #[error("{name} = {value} must lie strictly between 0 and 1")]
    Probability {
        /// Parameter name.
        name: &'static str,
        /// Offending value.
        value: String,
    },
    /// Zero members.
    #[error("a team needs at least one member")]
    EmptyTeam,
    /// Consensus level outside `1..=n`.
    #[error("consensus level {k} outside 1..={n}")]
    ConsensusLevel {
        /// Requested level.
        k: usize,
        /// Team size.
        n: usize,
    },
    /// Effort profiles disagree on the team size.
    #[error(
        "full-effort and deviation parameters describe teams of {full} and {deviation} members"
    )]
    TeamSize {
        /// Size under full effort.
        full: usize,
        /// Size under the deviation.
        deviation: usize,
    },
    /// Axis name not recognized.
    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),
    /// Distribution construction failed.
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    /// CSV serialization failed.
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    /// Writing output failed.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Outcome-distribution parameters under one effort profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryParams {
    n: usize,
    p: Rational,
    q_common: Rational,
    q_own: Rational,
    q_other: Rational,
}

impl BinaryParams {
    /// Validated parameters with full support.
    pub fn new(
        n: usize,
        p: Rational,
        q_common: Rational,
        q_own: Rational,
        q_other: Rational,
    ) -> Result<Self, BinaryError> {
        if n == 0 {
            return Err(BinaryError::EmptyTeam);
        }
        for (name, v) in [
            ("p", &p),
            ("q_common", &q_common),
            ("q_own", &q_own),
            ("q_other", &q_other),
        ] {
            if !in_open_unit_interval(v) {
                return Err(BinaryError::Probability {
                    name,
                    value: to_exact_string(v),
                });
            }
        }
        Ok(Self {
            n,
            p,
            q_common,
            q_own,
            q_other,
        })
    }

    /// Team size.
    pub fn members(&self) -> usize {
        self.n
    }

    /// Probability of the common-outcome branch.
    pub fn p(&self) -> &Rational {
        &self.p
    }

    /// High probability of the common outcome.
    pub fn q_common(&self) -> &Rational {
        &self.q_common
    }

    /// Focal member's independent high probability.
    pub fn q_own(&self) -> &Rational {
        &self.q_own
    }

    /// Other members' independent high probability.
    pub fn q_other(&self) -> &Rational {
        &self.q_other
    }

    fn check_k(&self, k: usize) -> Result<u32, BinaryError> {
        if k == 0 || k > self.n {
            return Err(BinaryError::ConsensusLevel { k, n: self.n });
        }
        Ok(k as u32)
    }

    /// Probability that at least `n - k + 1` of the other members draw low
    /// independently. Empty, hence zero, when `k = 1`.
    fn others_block(&self, k: u32) -> Rational {
        let n = self.n as u32;
        let low = Rational::one() - &self.q_other;
        (n - k + 1..n)
            .map(|m| {
                Rational::from_integer(binomial(n - 1, m))
                    * pow(&low, m)
                    * pow(&self.q_other, n - 1 - m)
            })
            .sum()
    }

    /// Probability that exactly `n - k` others draw low, so the focal vote decides.
    fn focal_pivotal(&self, k: u32) -> Rational {
        let n = self.n as u32;
        Rational::from_integer(binomial(n - 1, n - k))
            * pow(&(Rational::one() - &self.q_other), n - k)
            * pow(&self.q_other, k - 1)
    }

    /// `P(focal member high and no disclosure)` under `k`-majority.
    pub fn prob_high_and_nd(&self, k: usize) -> Result<Rational, BinaryError> {
        let k = self.check_k(k)?;
        Ok((Rational::one() - &self.p) * &self.q_own * self.others_block(k))
    }

    /// `P(no disclosure)` under `k`-majority.
    pub fn prob_nd(&self, k: usize) -> Result<Rational, BinaryError> {
        let k = self.check_k(k)?;
        let one = Rational::one();
        let independent = &one - &self.p;
        Ok(&self.p * (&one - &self.q_common)
            + &independent * self.others_block(k)
            + &independent * (&one - &self.q_own) * self.focal_pivotal(k))
    }

    /// Observer's posterior mean of the focal outcome after no disclosure.
    pub fn cond_mean_nd(&self, k: usize) -> Result<Rational, BinaryError> {
        Ok(self.prob_high_and_nd(k)? / self.prob_nd(k)?)
    }

    /// The same posterior through its reciprocal, written in odds of the others'
    /// low draws. Agrees exactly with [`Self::cond_mean_nd`].
    pub fn cond_mean_nd_inverted(&self, k: usize) -> Result<Rational, BinaryError> {
        let k32 = self.check_k(k)?;
        if k32 == 1 {
            return Ok(Rational::zero());
        }
        let n = self.n as u32;
        let one = Rational::one();
        let odds = (&one - &self.q_other) / &self.q_other;
        let odds_sum: Rational = (n - k32 + 1..n)
            .map(|m| Rational::from_integer(binomial(n - 1, m)) * pow(&odds, m - (n - k32)))
            .sum();
        let reciprocal = &self.p * (&one - &self.q_common)
            / ((&one - &self.p) * &self.q_own * self.others_block(k32))
            + one.clone() / &self.q_own
            + (&one - &self.q_own) * Rational::from_integer(binomial(n - 1, n - k32))
                / (&self.q_own * odds_sum);
        Ok(reciprocal.recip())
    }

    /// Whether the `k`-majority rule is an interior equilibrium: the focal
    /// posterior lies strictly inside the outcome range.
    pub fn is_interior(&self, k: usize) -> Result<bool, BinaryError> {
        Ok(in_open_unit_interval(&self.cond_mean_nd(k)?))
    }

    /// Unconditional mean of the focal outcome.
    pub fn mean(&self) -> Rational {
        &self.p * &self.q_common + (Rational::one() - &self.p) * &self.q_own
    }

    /// The mixture as a joint distribution with `focal` as the focal member.
    pub fn joint_distribution(&self, focal: usize) -> Result<JointDistribution, BinaryError> {
        let q: Vec<Rational> = (0..self.n)
            .map(|j| {
                if j == focal {
                    self.q_own.clone()
                } else {
                    self.q_other.clone()
                }
            })
            .collect();
        Ok(JointDistribution::common_mixture(
            &self.p,
            &self.q_common,
            &q,
        )?)
    }

    /// Copy with one parameter replaced.
    pub fn with(&self, axis: Axis, value: Rational) -> Result<Self, BinaryError> {
        let mut next = self.clone();
        *match axis {
            Axis::QOther => &mut next.q_other,
            Axis::P => &mut next.p,
            Axis::QOwn => &mut next.q_own,
            Axis::QCommon => &mut next.q_common,
        } = value;
        Self::new(next.n, next.p, next.q_common, next.q_own, next.q_other)
    }
}

/// The `k`-majority team rule over the binary outcome space of `n` members.
pub fn k_majority_rule(n: usize, k: usize) -> Result<TeamRule, BinaryError> {
    if k == 0 || k > n {
        return Err(BinaryError::ConsensusLevel { k, n });
    }
    let values = (0..1usize << n)
        .map(|cell| {
            if cell.count_ones() as usize >= k {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .collect();
    Ok(TeamRule::new(values).expect("indicator values"))
}

/// Parameters under full effort and under the focal member's deviation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryEnv {
    /// Everyone exerts effort.
    pub full: BinaryParams,
    /// Everyone but the focal member exerts effort.
    pub deviation: BinaryParams,
}

impl BinaryEnv {
    /// Pair of parameter sets for the same team.
    pub fn new(full: BinaryParams, deviation: BinaryParams) -> Result<Self, BinaryError> {
        if full.n != deviation.n {
            return Err(BinaryError::TeamSize {
                full: full.n,
                deviation: deviation.n,
            });
        }
        Ok(Self { full, deviation })
    }

    /// Baseline of the optimal-consensus experiment: `p = 1/2` throughout, high
    /// probabilities `51/100` under full effort and `1/2` after a deviation.
    pub fn experiment_baseline(n: usize) -> Result<Self, BinaryError> {
        let half = Rational::new(1.into(), 2.into());
        let hi = Rational::new(51.into(), 100.into());
        Self::new(
            BinaryParams::new(n, half.clone(), hi.clone(), hi.clone(), hi)?,
            BinaryParams::new(n, half.clone(), half.clone(), half.clone(), half)?,
        )
    }

    /// Team size.
    pub fn members(&self) -> usize {
        self.full.n
    }

    /// Focal member's gain from effort under the `k`-majority rule, with the
    /// observer's no-disclosure belief fixed at its full-effort value.
    pub fn gain(&self, k: usize) -> Result<Rational, BinaryError> {
        let shift = self.full.cond_mean_nd(k)? - self.deviation.cond_mean_nd(k)?;
        Ok(self.full.mean() - self.deviation.mean() - self.deviation.prob_nd(k)? * shift)
    }

    /// Gains for `k = 1..=n`.
    pub fn gains(&self) -> Result<Vec<Rational>, BinaryError> {
        (1..=self.members()).map(|k| self.gain(k)).collect()
    }

    /// Consensus level with the largest gain, ties to the smallest level.
    pub fn optimal_k(&self) -> Result<usize, BinaryError> {
        Ok(argmax(&self.gains()?))
    }
}

fn argmax(gains: &[Rational]) -> usize {
    let mut best = 0;
    for (i, g) in gains.iter().enumerate() {
        if *g > gains[best] {
            best = i;
        }
    }
    best + 1
}

/// Parameter varied in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Others' independent high probability.
    QOther,
    /// Probability of the common branch.
    P,
    /// Focal member's independent high probability.
    QOwn,
    /// High probability of the common outcome.
    QCommon,
}

impl Axis {
    /// Every axis in panel order.
    pub const ALL: [Axis; 4] = [Axis::QOther, Axis::P, Axis::QOwn, Axis::QCommon];

    /// Name of the deviation-side parameter.
    pub fn name(self) -> &'static str {
        match self {
            Axis::QOther => "q_other_dev",
            Axis::P => "p_dev",
            Axis::QOwn => "q_own_dev",
            Axis::QCommon => "q_T_dev",
        }
    }

    /// Panel letter of the experiment.
    pub fn panel(self) -> char {
        match self {
            Axis::QOther => 'a',
            Axis::P => 'b',
            Axis::QOwn => 'c',
            Axis::QCommon => 'd',
        }
    }

    /// Axis for a panel letter.
    pub fn from_panel(panel: char) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.panel() == panel.to_ascii_lowercase())
    }

    /// Optimal-consensus shape as stated against the deviation value.
    pub fn stated_shape(self) -> Shape {
        match self {
            Axis::QOther => Shape::RiseThenFall,
            _ => Shape::Decreasing,
        }
    }

    /// Optimal-consensus shape implied by the stated direction in the size of
    /// the effort effect (full-effort value minus deviation value).
    pub fn effect_shape(self) -> Shape {
        match self {
            Axis::QOther => Shape::RiseThenFall,
            Axis::P => Shape::Decreasing,
            Axis::QOwn | Axis::QCommon => Shape::Increasing,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = BinaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if let Some(axis) = Self::from_panel(c) {
                return Ok(axis);
            }
        }
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| BinaryError::UnknownAxis(s.to_owned()))
    }
}

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    /// Deviation value of the swept parameter.
    pub axis_value: Rational,
    /// Gain for each consensus level, starting at 1.
    pub gains: Vec<Rational>,
    /// Optimal consensus level.
    pub k_star: usize,
}

/// Varies the deviation value of `axis` over `grid`, keeping full effort fixed.
/// Rows follow grid order.
pub fn sweep(
    base: &BinaryEnv,
    axis: Axis,
    grid: &[Rational],
) -> Result<Vec<SweepRow>, BinaryError> {
    grid.par_iter()
        .map(|v| {
            let env = BinaryEnv::new(base.full.clone(), base.deviation.with(axis, v.clone())?)?;
            let gains = env.gains()?;
            Ok(SweepRow {
                axis_value: v.clone(),
                k_star: argmax(&gains),
                gains,
            })
        })
        .collect()
}

/// Writes sweep rows as CSV, one record per (axis value, consensus level).
/// Decimals carry 12 significant digits; the last column is exact.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), BinaryError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis_value", "K", "gain", "is_optimal", "gain_exact"])?;
    for row in rows {
        let axis_value = to_decimal_string(&row.axis_value, 12);
        for (idx, g) in row.gains.iter().enumerate() {
            let k = idx + 1;
            w.write_record([
                axis_value.clone(),
                k.to_string(),
                to_decimal_string(g, 12),
                (k == row.k_star).to_string(),
                to_exact_string(g),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Qualitative shape of a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// Never rises.
    Decreasing,
    /// Never falls.
    Increasing,
    /// Rises at least once, then falls at least once, never rising again.
    RiseThenFall,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Decreasing => "weakly decreasing",
            Shape::Increasing => "weakly increasing",
            Shape::RiseThenFall => "rises then falls",
        })
    }
}

impl Shape {
    /// Indices `j` such that the step from `j - 1` to `j` breaks the shape.
    /// A rise-then-fall sequence that never rises or never falls reports its
    /// last index.
    pub fn violations(self, seq: &[usize]) -> Vec<usize> {
        let steps = (1..seq.len()).map(|j| (j, seq[j - 1], seq[j]));
        match self {
            Shape::Decreasing => steps.filter(|&(_, a, b)| b > a).map(|(j, ..)| j).collect(),
            Shape::Increasing => steps.filter(|&(_, a, b)| b < a).map(|(j, ..)| j).collect(),
            Shape::RiseThenFall => {
                let mut bad = Vec::new();
                let (mut rose, mut fell) = (false, false);
                for (j, a, b) in steps {
                    if b > a {
                        if fell {
                            bad.push(j);
                        }
                        rose = true;
                    } else if b < a {
                        if !rose {
                            bad.push(j);
                        }
                        fell = true;
                    }
                }
                if (!rose || !fell) && bad.is_empty() && !seq.is_empty() {
                    bad.push(seq.len() - 1);
                }
                bad
            }
        }
    }

    /// Whether `seq` has this shape.
    pub fn holds(self, seq: &[usize]) -> bool {
        self.violations(seq).is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn halves(n: usize) -> BinaryParams {
        let h = ratio(1, 2);
        BinaryParams::new(n, h.clone(), h.clone(), h.clone(), h).unwrap()
    }

    #[test]
    fn worked_instance() {
        let b = halves(3);
        assert_eq!(b.prob_nd(2).unwrap(), ratio(1, 2));
        assert_eq!(b.prob_high_and_nd(2).unwrap(), ratio(1, 16));
        assert_eq!(b.cond_mean_nd(2).unwrap(), ratio(1, 8));
        assert_eq!(b.cond_mean_nd_inverted(2).unwrap(), ratio(1, 8));
        assert_eq!(b.prob_high_and_nd(1).unwrap(), ratio(0, 1));
        assert!(!b.is_interior(1).unwrap());
        assert!(b.is_interior(3).unwrap());
    }

    #[test]
    fn unilateral_gain_is_mean_shift() {
        let env = BinaryEnv::experiment_baseline(5).unwrap();
        assert_eq!(env.gain(1).unwrap(), env.full.mean() - env.deviation.mean());
    }

    #[test]
    fn rejects_bad_parameters() {
        let h = ratio(1, 2);
        assert!(BinaryParams::new(3, ratio(1, 1), h.clone(), h.clone(), h.clone()).is_err());
        assert!(BinaryParams::new(0, h.clone(), h.clone(), h.clone(), h).is_err());
        assert!(halves(3).prob_nd(4).is_err());
        assert!(halves(3).prob_nd(0).is_err());
    }

    #[test]
    fn shapes() {
        assert!(Shape::Decreasing.holds(&[3, 3, 2, 1]));
        assert_eq!(Shape::Decreasing.violations(&[3, 4, 2]), vec![1]);
        assert!(Shape::RiseThenFall.holds(&[1, 2, 2, 3, 1]));
        assert!(!Shape::RiseThenFall.holds(&[1, 2, 3]));
        assert_eq!(Shape::RiseThenFall.violations(&[2, 1, 2]), vec![1, 2]);
        assert!(Shape::Increasing.holds(&[1, 1, 2]));
    }

    #[test]
    fn axis_parsing() {
        assert_eq!("b".parse::<Axis>().unwrap(), Axis::P);
        assert_eq!("q_T_dev".parse::<Axis>().unwrap(), Axis::QCommon);
        assert!("z".parse::<Axis>().is_err());
    }

    #[test]
    fn csv_layout() {
        let env = BinaryEnv::experiment_baseline(2).unwrap();
        let rows = sweep(&env, Axis::P, &[ratio(2, 5)]).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "axis_value,K,gain,is_optimal,gain_exact");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.4,1,"));
    }
}
