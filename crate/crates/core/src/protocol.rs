//! Deliberation protocols: monotone voting rules over team members and their
//! multilinear extension to randomized votes.

use std::fmt;

use num_traits::Num;
use thiserror::Error;

/// Largest supported team.
pub const MAX_MEMBERS: usize = 12;

/// Largest team for which every protocol can be enumerated.
pub const MAX_ENUMERABLE_MEMBERS: usize = 5;

/// A set of members encoded as a bitmask (bit `i` is member `i`, zero-based).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Coalition(pub u32);

impl Coalition {
    /// The empty coalition.
    pub const EMPTY: Coalition = Coalition(0);

    /// All members of a team of size `n`.
    pub fn full(n: usize) -> Self {
        Coalition(((1u64 << n) - 1) as u32)
    }

    /// The coalition containing only `member`.
    pub fn singleton(member: usize) -> Self {
        Coalition(1 << member)
    }

    /// Builds a coalition from zero-based member indices.
    pub fn from_members(members: impl IntoIterator<Item = usize>) -> Self {
        Coalition(members.into_iter().fold(0, |acc, m| acc | (1 << m)))
    }

    /// Whether `member` belongs to the coalition.
    pub fn contains(self, member: usize) -> bool {
        self.0 >> member & 1 == 1
    }

    /// Number of members.
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Whether the coalition has no members.
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Subset test.
    pub fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members outside the coalition within a team of size `n`.
    pub fn complement(self, n: usize) -> Self {
        Coalition(!self.0 & Coalition::full(n).0)
    }

    /// Coalition with `member` added.
    pub fn with(self, member: usize) -> Self {
        Coalition(self.0 | (1 << member))
    }

    /// Coalition with `member` removed.
    pub fn without(self, member: usize) -> Self {
        Coalition(self.0 & !(1 << member))
    }

    /// Zero-based member indices in increasing order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.contains(i))
    }

    /// All coalitions of a team of size `n`, by bitmask.
    pub fn all(n: usize) -> impl Iterator<Item = Coalition> {
        (0..(1u32 << n)).map(Coalition)
    }

    /// All strict subsets of `self`, including the empty one.
    pub fn strict_subsets(self) -> impl Iterator<Item = Coalition> {
        let full = self.0;
        let mut next = Some(full);
        std::iter::from_fn(move || {
            let current = next?;
            next = if current == 0 {
                None
            } else {
                Some((current - 1) & full)
            };
            Some(Coalition(current))
        })
        .skip(1)
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.members().map(|m| (m + 1).to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Invalid protocol construction or evaluation input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    /// Team size is zero or too large.
    #[error("team size {0} outside 1..={MAX_MEMBERS}")]
    TeamSize(usize),
    /// Threshold outside `1..=n`.
    #[error("threshold k={k} outside 1..={n}")]
    Threshold {
        /// Team size.
        n: usize,
        /// Requested threshold.
        k: usize,
    },
    /// Member index not in the team.
    #[error("member {member} outside a team of size {n}")]
    Member {
        /// Zero-based member index.
        member: usize,
        /// Team size.
        n: usize,
    },
    /// The empty coalition would win, so silence is impossible.
    #[error("the empty coalition cannot be winning")]
    EmptyWinning,
    /// No coalition wins, so disclosure is impossible.
    #[error("the full team must be winning")]
    NothingWins,
    /// Truth table length is not `2^n`.
    #[error("truth table has {got} entries, expected {expected}")]
    TableLength {
        /// Entries supplied.
        got: usize,
        /// Entries required.
        expected: usize,
    },
    /// A winning coalition has a losing superset.
    #[error("not monotone: {winner} wins but its superset {superset} loses")]
    NotMonotone {
        /// The winning coalition.
        winner: Coalition,
        /// Its losing superset.
        superset: Coalition,
    },
    /// Vote vector of the wrong length.
    #[error("vote vector has {got} entries, expected {expected}")]
    Arity {
        /// Entries supplied.
        got: usize,
        /// Team size.
        expected: usize,
    },
    /// Vote probability outside `[0, 1]`.
    #[error("vote probability of member {0} outside [0, 1]")]
    VoteRange(usize),
    /// Enumeration requested for too large a team.
    #[error("cannot enumerate protocols for {0} members (limit {MAX_ENUMERABLE_MEMBERS})")]
    TooLargeToEnumerate(usize),
}

/// A monotone rule mapping the team's disclosure votes to a disclosure decision.
///
/// Stored canonically as its antichain of minimal winning coalitions; the
/// truth table is derived at construction.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct DeliberationProtocol {
    n: usize,
    minimal: Vec<Coalition>,
    winning: Vec<bool>,
}

impl DeliberationProtocol {
    /// Disclose iff at least `k` of `n` members vote to disclose.
    pub fn k_majority(n: usize, k: usize) -> Result<Self, ProtocolError> {
        check_size(n)?;
        if k == 0 || k > n {
            return Err(ProtocolError::Threshold { n, k });
        }
        Self::from_predicate(n, |c| c.len() >= k)
    }

    /// Any single member can force disclosure.
    pub fn unilateral(n: usize) -> Result<Self, ProtocolError> {
        Self::k_majority(n, 1)
    }

    /// Disclosure needs every member.
    pub fn consensus(n: usize) -> Result<Self, ProtocolError> {
        Self::k_majority(n, n)
    }

    /// Only `leader`'s vote matters.
    pub fn leader(n: usize, leader: usize) -> Result<Self, ProtocolError> {
        check_size(n)?;
        check_member(n, leader)?;
        Self::from_predicate(n, |c| c.contains(leader))
    }

    /// Upward closure of the given winning coalitions.
    pub fn from_winning_sets(
        n: usize,
        sets: impl IntoIterator<Item = Coalition>,
    ) -> Result<Self, ProtocolError> {
        check_size(n)?;
        let full = Coalition::full(n);
        let sets: Vec<Coalition> = sets.into_iter().collect();
        for s in &sets {
            if let Some(m) = s.members().find(|&m| m >= n) {
                return Err(ProtocolError::Member { member: m, n });
            }
            debug_assert!(s.is_subset_of(full));
        }
        Self::from_predicate(n, |c| sets.iter().any(|s| s.is_subset_of(c)))
    }

    /// Protocol from an explicit truth table indexed by coalition bitmask.
    pub fn from_truth_table(n: usize, table: Vec<bool>) -> Result<Self, ProtocolError> {
        check_size(n)?;
        if table.len() != 1 << n {
            return Err(ProtocolError::TableLength {
                got: table.len(),
                expected: 1 << n,
            });
        }
        for c in Coalition::all(n).filter(|c| table[c.0 as usize]) {
            for m in c.complement(n).members() {
                let sup = c.with(m);
                if !table[sup.0 as usize] {
                    return Err(ProtocolError::NotMonotone {
                        winner: c,
                        superset: sup,
                    });
                }
            }
        }
        Self::from_table_unchecked(n, table)
    }

    fn from_predicate(n: usize, pred: impl Fn(Coalition) -> bool) -> Result<Self, ProtocolError> {
        Self::from_table_unchecked(n, Coalition::all(n).map(pred).collect())
    }

    fn from_table_unchecked(n: usize, winning: Vec<bool>) -> Result<Self, ProtocolError> {
        if winning[0] {
            return Err(ProtocolError::EmptyWinning);
        }
        if !winning[Coalition::full(n).0 as usize] {
            return Err(ProtocolError::NothingWins);
        }
        let minimal = Coalition::all(n)
            .filter(|c| winning[c.0 as usize])
            .filter(|c| c.members().all(|m| !winning[c.without(m).0 as usize]))
            .collect();
        Ok(Self {
            n,
            minimal,
            winning,
        })
    }

    /// Every valid protocol (monotone, empty loses, full wins) for a team of size `n`.
    pub fn enumerate_all(n: usize) -> Result<Vec<Self>, ProtocolError> {
        check_size(n)?;
        if n > MAX_ENUMERABLE_MEMBERS {
            return Err(ProtocolError::TooLargeToEnumerate(n));
        }
        let tables = monotone_tables(n);
        Ok(tables
            .into_iter()
            .filter_map(|t| Self::from_table_unchecked(n, t).ok())
            .collect())
    }

    /// Team size.
    pub fn members(&self) -> usize {
        self.n
    }

    /// Minimal winning coalitions in increasing bitmask order.
    pub fn minimal_winning(&self) -> &[Coalition] {
        &self.minimal
    }

    /// Truth table indexed by coalition bitmask.
    pub fn truth_table(&self) -> &[bool] {
        &self.winning
    }

    /// Decision when exactly the members of `yes` vote to disclose.
    pub fn is_winning(&self, yes: Coalition) -> bool {
        self.winning[yes.0 as usize]
    }

    /// Disclosure probability when member `i` votes to disclose with probability `x[i]`.
    pub fn evaluate<T>(&self, x: &[T]) -> Result<T, ProtocolError>
    where
        T: Clone + Num + PartialOrd,
    {
        if x.len() != self.n {
            return Err(ProtocolError::Arity {
                got: x.len(),
                expected: self.n,
            });
        }
        if let Some(i) = x.iter().position(|v| *v < T::zero() || *v > T::one()) {
            return Err(ProtocolError::VoteRange(i));
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked<T>(&self, x: &[T]) -> T
    where
        T: Clone + Num,
    {
        // Shannon expansion over members keeps the cost at 2^n multiplications.
        let mut layer: Vec<T> = self
            .winning
            .iter()
            .map(|&w| if w { T::one() } else { T::zero() })
            .collect();
        for i in (0..self.n).rev() {
            let half = 1 << i;
            let xi = &x[i];
            let next: Vec<T> = (0..half)
                .map(|low| {
                    let off = layer[low].clone();
                    let on = layer[low | half].clone();
                    off.clone() + xi.clone() * (on - off)
                })
                .collect();
            layer = next;
        }
        layer.pop().unwrap_or_else(T::zero)
    }

    /// Whether `member` alone is a winning coalition.
    pub fn can_unilaterally_disclose(&self, member: usize) -> bool {
        member < self.n && self.is_winning(Coalition::singleton(member))
    }

    /// Members that can force disclosure alone.
    pub fn unilateral_members(&self) -> Coalition {
        Coalition::from_members((0..self.n).filter(|&m| self.can_unilaterally_disclose(m)))
    }

    /// Coalitions that win when only they vote yes and lose when only they vote no.
    pub fn pivotal_subgroups(&self) -> Vec<Coalition> {
        Coalition::all(self.n)
            .filter(|&c| self.is_pivotal(c))
            .collect()
    }

    fn is_pivotal(&self, c: Coalition) -> bool {
        self.is_winning(c) && !self.is_winning(c.complement(self.n))
    }

    /// True iff every pivotal subgroup contains a strict subgroup that can block
    /// disclosure on its own.
    pub fn disclosure_requires_more_consensus(&self) -> bool {
        Coalition::all(self.n)
            .filter(|&c| self.is_pivotal(c))
            .all(|c| {
                c.strict_subsets()
                    .any(|j| !self.is_winning(j.complement(self.n)))
            })
    }

    /// Whether every winning coalition here also wins under `other`.
    pub fn is_nested_in(&self, other: &DeliberationProtocol) -> bool {
        self.n == other.n
            && self
                .winning
                .iter()
                .zip(&other.winning)
                .all(|(&a, &b)| !a || b)
    }

    /// Whether this is the `k`-majority rule for some `k`; returns that `k`.
    pub fn as_k_majority(&self) -> Option<usize> {
        let k = self.minimal.first()?.len();
        let matches = Coalition::all(self.n).all(|c| self.is_winning(c) == (c.len() >= k));
        matches.then_some(k)
    }
}

impl fmt::Display for DeliberationProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(k) = self.as_k_majority() {
            return write!(f, "k_majority({},{})", self.n, k);
        }
        let sets: Vec<String> = self.minimal.iter().map(ToString::to_string).collect();
        write!(f, "custom({}; {})", self.n, sets.join(" "))
    }
}

fn check_size(n: usize) -> Result<(), ProtocolError> {
    if n == 0 || n > MAX_MEMBERS {
        Err(ProtocolError::TeamSize(n))
    } else {
        Ok(())
    }
}

fn check_member(n: usize, member: usize) -> Result<(), ProtocolError> {
    if member >= n {
        Err(ProtocolError::Member { member, n })
    } else {
        Ok(())
    }
}

/// All monotone truth tables on `n` variables, built from pairs `f0 <= f1` on `n-1`.
fn monotone_tables(n: usize) -> Vec<Vec<bool>> {
    if n == 0 {
        return vec![vec![false], vec![true]];
    }
    let smaller = monotone_tables(n - 1);
    let mut out = Vec::new();
    for f0 in &smaller {
        for f1 in &smaller {
            if f0.iter().zip(f1).all(|(&a, &b)| !a || b) {
                // Bit n-1 is the new top variable.
                let mut t = f0.clone();
                t.extend_from_slice(f1);
                out.push(t);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ratio, Rational};

    #[test]
    fn enumeration_counts_follow_dedekind_numbers() {
        // Monotone functions minus the two constants.
        let counts: Vec<usize> = (1..=4)
            .map(|n| DeliberationProtocol::enumerate_all(n).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 4, 18, 166]);
    }

    #[test]
    fn k_majority_multilinear_value() {
        let d = DeliberationProtocol::k_majority(3, 2).unwrap();
        let half = ratio(1, 2);
        let v = d.evaluate(&[half.clone(), half.clone(), half]).unwrap();
        assert_eq!(v, ratio(1, 2));
        let v = d
            .evaluate(&[ratio(1, 3), ratio(1, 2), ratio(1, 1)])
            .unwrap();
        // P(at least one of the first two) = 1 - 2/3 * 1/2
        assert_eq!(v, ratio(2, 3));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            DeliberationProtocol::k_majority(3, 0),
            Err(ProtocolError::Threshold { n: 3, k: 0 })
        );
        assert!(DeliberationProtocol::from_winning_sets(2, [Coalition::EMPTY]).is_err());
        assert!(DeliberationProtocol::from_winning_sets(2, []).is_err());
        let bad = vec![false, true, false, false];
        assert!(matches!(
            DeliberationProtocol::from_truth_table(2, bad),
            Err(ProtocolError::NotMonotone { .. })
        ));
        let d = DeliberationProtocol::consensus(2).unwrap();
        assert_eq!(
            d.evaluate(&[Rational::from_integer(2.into()), ratio(0, 1)]),
            Err(ProtocolError::VoteRange(0))
        );
    }

    #[test]
    fn consensus_predicates() {
        let unilateral = DeliberationProtocol::unilateral(3).unwrap();
        let consensus = DeliberationProtocol::consensus(3).unwrap();
        let leader = DeliberationProtocol::leader(2, 0).unwrap();
        assert!(!unilateral.disclosure_requires_more_consensus());
        assert!(consensus.disclosure_requires_more_consensus());
        assert!(!leader.disclosure_requires_more_consensus());
        assert!(unilateral.can_unilaterally_disclose(2));
        assert!(!consensus.can_unilaterally_disclose(0));
        assert_eq!(leader.unilateral_members(), Coalition::singleton(0));
    }

    #[test]
    fn majority_requires_more_consensus_past_half_plus_one() {
        // 2-of-3: the pivotal pair {1,2} has no proper part that blocks alone.
        for n in 1..=7 {
            for k in 1..=n {
                let d = DeliberationProtocol::k_majority(n, k).unwrap();
                assert_eq!(
                    d.disclosure_requires_more_consensus(),
                    2 * k >= n + 2,
                    "n={n} k={k}"
                );
            }
        }
    }

    #[test]
    fn custom_generators_close_upward() {
        let d = DeliberationProtocol::from_winning_sets(
            3,
            [
                Coalition::from_members([0, 1]),
                Coalition::from_members([0, 2]),
            ],
        )
        .unwrap();
        assert!(d.is_winning(Coalition::full(3)));
        assert!(!d.is_winning(Coalition::from_members([1, 2])));
        assert_eq!(d.minimal_winning().len(), 2);
        assert_eq!(d.to_string(), "custom(3; {1,2} {1,3})");
        assert_eq!(
            DeliberationProtocol::k_majority(3, 2).unwrap().to_string(),
            "k_majority(3,2)"
        );
    }

    #[test]
    fn strict_subsets_enumerates_proper_subsets() {
        let c = Coalition::from_members([0, 2, 3]);
        let subs: Vec<_> = c.strict_subsets().collect();
        assert_eq!(subs.len(), 7);
        assert!(subs.iter().all(|s| s.is_subset_of(c) && *s != c));
    }
}
