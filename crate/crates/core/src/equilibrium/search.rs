//! Exhaustive threshold search.
//!
//! Every equilibrium is equivalent to one in threshold strategies, so each member
//! either cuts between two adjacent outcomes or mixes at a single indifference
//! atom. A member's own indifference condition does not involve their own
//! mixing weight, which makes the mixer equations affine one weight at a time
//! and lets all weights be solved exactly.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{
    check_team, classify, full_disclosure_equilibrium, verify_equilibrium, DisclosureProfile,
    Equilibrium, EquilibriumError,
};
use crate::outcomes::JointDistribution;
use crate::protocol::{Coalition, DeliberationProtocol};
use crate::rational::{common_denominator, Rational};
use crate::SearchCaps;

/// Cell masses and outcome values scaled to integers by common denominators.
pub(crate) struct ScaledMasses {
    pub(crate) sizes: Vec<usize>,
    pub(crate) outcomes: Vec<Vec<usize>>,
    pub(crate) weight: Vec<BigInt>,
    /// `level[i][k] = grid[i][k] * scale[i]`.
    pub(crate) level: Vec<Vec<BigInt>>,
    pub(crate) scale: Vec<BigInt>,
}

/// Concealment mass `nd` and per-member outcome-weighted concealment masses.
#[derive(Clone, Debug)]
pub(crate) struct Sums {
    pub(crate) nd: BigInt,
    pub(crate) mass: Vec<BigInt>,
}

impl ScaledMasses {
    pub(crate) fn new(dist: &JointDistribution) -> Self {
        let space = dist.space();
        let q = common_denominator(dist.pmf());
        let weight = dist
            .pmf()
            .iter()
            .map(|p| (p * Rational::from_integer(q.clone())).to_integer())
            .collect();
        let scale: Vec<BigInt> = (0..space.members())
            .map(|i| common_denominator(space.grid(i)))
            .collect();
        let level = (0..space.members())
            .map(|i| {
                space
                    .grid(i)
                    .iter()
                    .map(|v| (v * Rational::from_integer(scale[i].clone())).to_integer())
                    .collect()
            })
            .collect();
        Self {
            sizes: (0..space.members()).map(|i| space.size(i)).collect(),
            outcomes: space.cells().collect(),
            weight,
            level,
            scale,
        }
    }

    pub(crate) fn members(&self) -> usize {
        self.sizes.len()
    }

    /// Sums over concealed cells of a deterministic own-outcome profile.
    pub(crate) fn sums(
        &self,
        protocol: &DeliberationProtocol,
        yes: impl Fn(usize, usize) -> bool,
    ) -> Sums {
        let n = self.members();
        let mut sums = Sums {
            nd: BigInt::zero(),
            mass: vec![BigInt::zero(); n],
        };
        for (c, o) in self.outcomes.iter().enumerate() {
            let votes = Coalition::from_members((0..n).filter(|&i| yes(i, o[i])));
            if !protocol.is_winning(votes) {
                let w = &self.weight[c];
                sums.nd += w;
                for (i, m) in sums.mass.iter_mut().enumerate() {
                    *m += w * &self.level[i][o[i]];
                }
            }
        }
        sums
    }

    /// Posterior of member `i` as an exact rational; requires positive concealment mass.
    pub(crate) fn posterior(&self, i: usize, nd: &Rational, mass: &Rational) -> Rational {
        mass / (nd * Rational::from_integer(self.scale[i].clone()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Choice {
    /// Disclose exactly at outcome indices `>= cut`.
    Cut(usize),
    /// Conceal below `atom`, disclose above it, mix at it.
    Mix(usize),
}

fn choices(size: usize) -> impl Iterator<Item = Choice> {
    (0..=size)
        .map(Choice::Cut)
        .chain((0..size).map(Choice::Mix))
}

/// Multilinear function of the mixing weights, stored by its values at the corners
/// of the unit cube (bit `p` of a corner = weight of mixer `p` is one).
struct Multilinear(Vec<Rational>);

impl Multilinear {
    fn eval(&self, w: &[Rational]) -> Rational {
        self.0
            .iter()
            .enumerate()
            .map(|(corner, value)| {
                w.iter().enumerate().fold(value.clone(), |acc, (p, wp)| {
                    if corner >> p & 1 == 1 {
                        acc * wp
                    } else {
                        acc * (Rational::one() - wp)
                    }
                })
            })
            .sum()
    }

    /// Restriction to one variable with the rest fixed: `(value at 0, slope)`.
    fn affine_in(&self, var: usize, w: &[Rational]) -> (Rational, Rational) {
        let mut at = w.to_vec();
        at[var] = Rational::zero();
        let a = self.eval(&at);
        at[var] = Rational::one();
        let b = self.eval(&at);
        let slope = b - &a;
        (a, slope)
    }

    fn depends_on(&self, var: usize) -> bool {
        (0..self.0.len())
            .filter(|c| c >> var & 1 == 0)
            .any(|c| self.0[c] != self.0[c | 1 << var])
    }
}

/// All equilibria reachable by threshold strategies with at most
/// `caps.max_mixers` indifferent members, plus full disclosure with skeptical
/// posteriors. Results are verified exactly, de-duplicated by team rule and
/// sorted by type and rule.
pub fn find_equilibria(
    protocol: &DeliberationProtocol,
    dist: &JointDistribution,
    caps: &SearchCaps,
) -> Result<Vec<Equilibrium>, EquilibriumError> {
    let space = dist.space();
    check_team(protocol, space)?;
    caps.check_members(space.members())?;
    for i in 0..space.members() {
        caps.check_grid(space.size(i))?;
    }
    let masses = ScaledMasses::new(dist);
    let n = masses.members();
    let cut_radix: Vec<usize> = masses.sizes.iter().map(|m| m + 1).collect();
    let cut_sums: Vec<Sums> = mixed_radix(&cut_radix)
        .map(|cuts| masses.sums(protocol, |i, k| k >= cuts[i]))
        .collect();

    let mut found = vec![full_disclosure_equilibrium(protocol, dist)?];
    let mut seen: HashSet<Vec<Rational>> = HashSet::from([found[0].rule.values().to_vec()]);
    let options: Vec<Vec<Choice>> = masses.sizes.iter().map(|&m| choices(m).collect()).collect();
    let option_radix: Vec<usize> = options.iter().map(Vec::len).collect();

    for pick in mixed_radix(&option_radix) {
        let config: Vec<Choice> = (0..n).map(|i| options[i][pick[i]]).collect();
        let mixers: Vec<usize> = (0..n)
            .filter(|&i| matches!(config[i], Choice::Mix(_)))
            .collect();
        if mixers.len() > caps.max_mixers {
            continue;
        }
        let Some((profile, posteriors)) =
            solve_config(&masses, &config, &mixers, &cut_sums, &cut_radix)
        else {
            continue;
        };
        let report = verify_equilibrium(protocol, dist, &profile, &posteriors)?;
        if !report.is_equilibrium() || !report.on_path {
            continue;
        }
        if seen.insert(report.rule.values().to_vec()) {
            let classification = classify(&report.rule, space);
            found.push(Equilibrium {
                profile,
                posteriors,
                rule: report.rule,
                on_path: true,
                classification,
            });
        }
    }
    found.sort_by(|a, b| {
        a.classification
            .cmp(&b.classification)
            .then_with(|| b.rule.values().cmp(a.rule.values()))
    });
    Ok(found)
}

/// Solves the fixed-point conditions of one configuration exactly.
fn solve_config(
    masses: &ScaledMasses,
    config: &[Choice],
    mixers: &[usize],
    cut_sums: &[Sums],
    cut_radix: &[usize],
) -> Option<(DisclosureProfile, Vec<Rational>)> {
    let n = masses.members();
    let k = mixers.len();
    // Corner sums: a mixer at atom `a` with weight 1 cuts at `a`, with weight 0 at `a + 1`.
    let corner_sums: Vec<&Sums> = (0..1usize << k)
        .map(|corner| {
            let cuts: Vec<usize> = config
                .iter()
                .enumerate()
                .map(|(i, choice)| match *choice {
                    Choice::Cut(c) => c,
                    Choice::Mix(a) => {
                        let p = mixers.iter().position(|&m| m == i).unwrap_or_default();
                        if corner >> p & 1 == 1 {
                            a
                        } else {
                            a + 1
                        }
                    }
                })
                .collect();
            &cut_sums[radix_index(&cuts, cut_radix)]
        })
        .collect();
    let as_rational = |v: &BigInt| Rational::from_integer(v.clone());
    let nd = Multilinear(corner_sums.iter().map(|s| as_rational(&s.nd)).collect());
    let mass: Vec<Multilinear> = (0..n)
        .map(|i| {
            Multilinear(
                corner_sums
                    .iter()
                    .map(|s| as_rational(&s.mass[i]))
                    .collect(),
            )
        })
        .collect();
    // level[i][k] * nd, the scaled value of "posterior_i == grid_i[k]".
    let at_level = |i: usize, idx: usize| {
        let l = as_rational(&masses.level[i][idx]);
        Multilinear(nd.0.iter().map(|v| v * &l).collect())
    };
    let diff = |a: &Multilinear, b: &Multilinear| {
        Multilinear(a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect())
    };

    // Indifference conditions of the mixers.
    let conditions: Vec<Multilinear> = mixers
        .iter()
        .map(|&m| match config[m] {
            Choice::Mix(a) => diff(&mass[m], &at_level(m, a)),
            Choice::Cut(_) => unreachable!("mixers only"),
        })
        .collect();
    // Inequalities of pure members: each expression must be >= 0.
    let mut inequalities: Vec<Multilinear> = Vec::new();
    for i in (0..n).filter(|i| !mixers.contains(i)) {
        if let Choice::Cut(c) = config[i] {
            if c >= 1 {
                inequalities.push(diff(&mass[i], &at_level(i, c - 1)));
            }
            if c < masses.sizes[i] {
                inequalities.push(diff(&at_level(i, c), &mass[i]));
            }
        }
    }

    let weights = solve_weights(&conditions, &inequalities, &nd, k)?;
    if !nd.eval(&weights).is_positive() {
        return None;
    }
    if conditions.iter().any(|c| !c.eval(&weights).is_zero())
        || inequalities.iter().any(|c| c.eval(&weights).is_negative())
    {
        return None;
    }
    let nd_value = nd.eval(&weights);
    let posteriors: Vec<Rational> = (0..n)
        .map(|i| masses.posterior(i, &nd_value, &mass[i].eval(&weights)))
        .collect();
    let votes = (0..n)
        .map(|i| {
            (0..masses.sizes[i])
                .map(|idx| match config[i] {
                    Choice::Cut(c) => bool_to_rational(idx >= c),
                    Choice::Mix(a) if idx == a => {
                        let p = mixers.iter().position(|&m| m == i).unwrap_or(0);
                        weights[p].clone()
                    }
                    Choice::Mix(a) => bool_to_rational(idx > a),
                })
                .collect()
        })
        .collect();
    let profile = DisclosureProfile { votes };
    Some((profile, posteriors))
}

/// Finds mixing weights in `(0, 1)` solving every condition exactly.
///
/// Conditions are resolved one at a time while one of them is affine in a single
/// unknown. Weights left free are placed at the midpoint of the interval allowed
/// by the inequalities (earlier free weights at one half).
fn solve_weights(
    conditions: &[Multilinear],
    inequalities: &[Multilinear],
    nd: &Multilinear,
    k: usize,
) -> Option<Vec<Rational>> {
    let half = Rational::new(1.into(), 2.into());
    let mut known: Vec<Option<Rational>> = vec![None; k];
    let mut pending: Vec<usize> = (0..conditions.len()).collect();
    loop {
        let mut progressed = false;
        let mut still = Vec::new();
        for &ci in &pending {
            let unknown: Vec<usize> = (0..k)
                .filter(|&v| known[v].is_none() && conditions[ci].depends_on(v))
                .collect();
            match unknown.as_slice() {
                [] => {
                    let w: Vec<Rational> = known
                        .iter()
                        .map(|x| x.clone().unwrap_or_default())
                        .collect();
                    if !conditions[ci].eval(&w).is_zero() {
                        return None;
                    }
                    progressed = true;
                }
                [v] => {
                    let w: Vec<Rational> = known
                        .iter()
                        .map(|x| x.clone().unwrap_or_default())
                        .collect();
                    let (a, slope) = conditions[ci].affine_in(*v, &w);
                    progressed = true;
                    if slope.is_zero() {
                        if a.is_zero() {
                            continue;
                        }
                        return None;
                    }
                    let value = -a / slope;
                    if !value.is_positive() || value >= Rational::one() {
                        return None;
                    }
                    known[*v] = Some(value);
                }
                _ => still.push(ci),
            }
        }
        pending = still;
        if pending.is_empty() || !progressed {
            break;
        }
    }
    if pending.iter().any(|&ci| {
        (0..k)
            .filter(|&v| known[v].is_none() && conditions[ci].depends_on(v))
            .count()
            > 1
    }) {
        return None;
    }
    // Free weights: earlier ones at one half, the last one inside its feasible interval.
    let free: Vec<usize> = (0..k).filter(|&v| known[v].is_none()).collect();
    for (idx, &v) in free.iter().enumerate() {
        if idx + 1 < free.len() {
            known[v] = Some(half.clone());
            continue;
        }
        let w: Vec<Rational> = known
            .iter()
            .map(|x| x.clone().unwrap_or_else(Rational::zero))
            .collect();
        known[v] = Some(feasible_point(v, &w, inequalities, nd)?);
    }
    Some(known.into_iter().map(Option::unwrap_or_default).collect())
}

fn feasible_point(
    var: usize,
    w: &[Rational],
    inequalities: &[Multilinear],
    nd: &Multilinear,
) -> Option<Rational> {
    let mut lo = Rational::zero();
    let mut hi = Rational::one();
    for expr in inequalities.iter().chain(std::iter::once(nd)) {
        let (a, slope) = expr.affine_in(var, w);
        if slope.is_zero() {
            if a.is_negative() {
                return None;
            }
            continue;
        }
        let root = -a / &slope;
        if slope.is_positive() {
            lo = lo.max(root);
        } else {
            hi = hi.min(root);
        }
    }
    if lo < hi {
        Some((lo + hi) / Rational::from_integer(2.into()))
    } else if lo == hi && lo.is_positive() && lo < Rational::one() {
        Some(lo)
    } else {
        None
    }
}

fn bool_to_rational(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

pub(crate) fn mixed_radix(radix: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = radix.iter().product();
    (0..total).map(move |mut idx| {
        let mut digits = vec![0; radix.len()];
        for (d, &r) in digits.iter_mut().zip(radix).rev() {
            *d = idx % r;
            idx /= r;
        }
        digits
    })
}

fn radix_index(digits: &[usize], radix: &[usize]) -> usize {
    digits.iter().zip(radix).fold(0, |acc, (d, r)| acc * r + d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::Classification;
    use crate::rational::ratio;

    fn caps() -> SearchCaps {
        SearchCaps::default()
    }

    #[test]
    fn radix_round_trip() {
        let radix = [3, 2, 4];
        for (i, d) in mixed_radix(&radix).enumerate() {
            assert_eq!(radix_index(&d, &radix), i);
        }
    }

    #[test]
    fn consensus_pair_has_full_and_interior() {
        let d = DeliberationProtocol::consensus(2).unwrap();
        let f = JointDistribution::independent_binary(&vec![ratio(1, 2); 2]).unwrap();
        let eqs = find_equilibria(&d, &f, &caps()).unwrap();
        let kinds: Vec<Classification> = eqs.iter().map(|e| e.classification).collect();
        assert_eq!(kinds, vec![Classification::Full, Classification::Interior]);
        assert_eq!(eqs[1].posteriors, vec![ratio(1, 3), ratio(1, 3)]);
    }

    #[test]
    fn unilateral_pair_has_only_full_disclosure() {
        let d = DeliberationProtocol::unilateral(2).unwrap();
        let f = JointDistribution::independent_binary(&vec![ratio(1, 2); 2]).unwrap();
        let eqs = find_equilibria(&d, &f, &caps()).unwrap();
        assert!(eqs.iter().all(|e| e.classification == Classification::Full));
    }

    #[test]
    fn leader_pair_has_a_partial_equilibrium() {
        let d = DeliberationProtocol::leader(2, 0).unwrap();
        let f = JointDistribution::independent_binary(&vec![ratio(1, 2); 2]).unwrap();
        let eqs = find_equilibria(&d, &f, &caps()).unwrap();
        assert!(eqs
            .iter()
            .any(|e| e.classification == Classification::Partial));
        assert!(eqs
            .iter()
            .all(|e| e.classification != Classification::Interior));
    }

    #[test]
    fn caps_are_enforced() {
        let d = DeliberationProtocol::consensus(5).unwrap();
        let f = JointDistribution::independent_binary(&vec![ratio(1, 2); 5]).unwrap();
        assert!(matches!(
            find_equilibria(&d, &f, &caps()),
            Err(EquilibriumError::ComputeCap { .. })
        ));
    }
}
