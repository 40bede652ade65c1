//! Outcome spaces, joint outcome distributions and the stochastic orders on them.

use std::collections::VecDeque;
use std::ops::Deref;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::equilibrium::TeamRule;
use crate::rational::{in_unit_interval, Rational};

/// Upper-set enumeration is used below this many cells regardless of team size.
const ENUMERATION_CELL_LIMIT: usize = 12;

/// Cap on staircase enumeration for two-member spaces before falling back to flows.
const STAIRCASE_LIMIT: u64 = 200_000;

/// Invalid outcome data or an undefined operation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OutcomeError {
    /// No members.
    #[error("outcome space needs at least one member")]
    NoMembers,
    /// A member has no outcomes.
    #[error("member {0} has an empty outcome grid")]
    EmptyGrid(usize),
    /// Grid values are not strictly increasing.
    #[error("outcome grid of member {0} is not strictly increasing")]
    NotIncreasing(usize),
    /// Probability vector length mismatch.
    #[error("pmf has {got} entries, space has {expected} cells")]
    PmfLength {
        /// Entries supplied.
        got: usize,
        /// Cells in the space.
        expected: usize,
    },
    /// Negative mass.
    #[error("negative probability at cell {0}")]
    Negative(usize),
    /// Mass does not sum to one.
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(String),
    /// Zero mass where full support is required.
    #[error("cell {0} has zero probability but full support is required")]
    NotFullSupport(usize),
    /// Two objects live on different spaces.
    #[error("distributions are defined on different outcome spaces")]
    SpaceMismatch,
    /// Member index out of range.
    #[error("member {member} outside a team of size {n}")]
    Member {
        /// Zero-based member.
        member: usize,
        /// Team size.
        n: usize,
    },
    /// Outcome index out of range.
    #[error("outcome index {index} outside the grid of member {member}")]
    OutcomeIndex {
        /// Zero-based member.
        member: usize,
        /// Offending index.
        index: usize,
    },
    /// A conditioning event has probability zero, or leaves no members.
    #[error("conditioning event is empty or leaves no free members")]
    BadCondition,
    /// Operation needs two outcomes per member.
    #[error("operation requires binary outcome grids")]
    NotBinary,
    /// Marginals differ where they must coincide.
    #[error("marginals of member {0} differ")]
    MarginalsDiffer(usize),
    /// Mixing weight outside `[0, 1]`.
    #[error("mixing weight {0} outside [0, 1]")]
    MixWeight(String),
    /// Probability parameter outside its range.
    #[error("parameter {name} = {value} outside {range}")]
    Parameter {
        /// Parameter name.
        name: &'static str,
        /// Offending value.
        value: String,
        /// Admissible range.
        range: &'static str,
    },
    /// Concealment has probability zero, so the posterior is off path.
    #[error("no-disclosure event has probability zero; posterior is off path")]
    OffPath,
    /// Rule defined on a different number of cells.
    #[error("team rule covers {got} cells, space has {expected}")]
    RuleLength {
        /// Cells in the rule.
        got: usize,
        /// Cells in the space.
        expected: usize,
    },
    /// The requested check is too large for exhaustive enumeration.
    #[error("too many upper sets to enumerate for this space")]
    TooLarge,
}

/// Product of per-member ordered outcome grids.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OutcomeSpace {
    grids: Vec<Vec<Rational>>,
    strides: Vec<usize>,
    cells: usize,
}

impl OutcomeSpace {
    /// Space from strictly increasing per-member grids.
    pub fn new(grids: Vec<Vec<Rational>>) -> Result<Self, OutcomeError> {
        if grids.is_empty() {
            return Err(OutcomeError::NoMembers);
        }
        for (i, g) in grids.iter().enumerate() {
            if g.is_empty() {
                return Err(OutcomeError::EmptyGrid(i));
            }
            if g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(OutcomeError::NotIncreasing(i));
            }
        }
        let mut strides = vec![1; grids.len()];
        for i in (0..grids.len() - 1).rev() {
            strides[i] = strides[i + 1] * grids[i + 1].len();
        }
        let cells = strides[0] * grids[0].len();
        Ok(Self {
            grids,
            strides,
            cells,
        })
    }

    /// `n` members with outcomes `{0, 1}`.
    pub fn binary(n: usize) -> Result<Self, OutcomeError> {
        Self::new(vec![vec![Rational::zero(), Rational::one()]; n])
    }

    /// Number of members.
    pub fn members(&self) -> usize {
        self.grids.len()
    }

    /// Outcome grid of member `i`.
    pub fn grid(&self, i: usize) -> &[Rational] {
        &self.grids[i]
    }

    /// All grids.
    pub fn grids(&self) -> &[Vec<Rational>] {
        &self.grids
    }

    /// Number of outcomes of member `i`.
    pub fn size(&self, i: usize) -> usize {
        self.grids[i].len()
    }

    /// Number of cells in the product.
    pub fn cell_count(&self) -> usize {
        self.cells
    }

    /// Whether every member has exactly two outcomes.
    pub fn is_binary(&self) -> bool {
        self.grids.iter().all(|g| g.len() == 2)
    }

    /// Worst outcome of member `i`.
    pub fn min(&self, i: usize) -> &Rational {
        &self.grids[i][0]
    }

    /// Cell index of per-member outcome indices; member 0 varies slowest.
    pub fn index_of(&self, outcome: &[usize]) -> usize {
        outcome.iter().zip(&self.strides).map(|(o, s)| o * s).sum()
    }

    /// Per-member outcome indices of a cell.
    pub fn outcome_of(&self, cell: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.grids)
            .map(|(s, g)| cell / s % g.len())
            .collect()
    }

    /// Outcome index of member `i` in `cell`.
    pub fn component(&self, cell: usize, i: usize) -> usize {
        cell / self.strides[i] % self.grids[i].len()
    }

    /// Outcome value of member `i` in `cell`.
    pub fn value(&self, cell: usize, i: usize) -> &Rational {
        &self.grids[i][self.component(cell, i)]
    }

    /// Per-member outcome indices of every cell, in cell order.
    pub fn cells(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.cells).map(|c| self.outcome_of(c))
    }

    /// Cell one step below `cell` in member `i`'s coordinate, if any.
    pub fn step_down(&self, cell: usize, i: usize) -> Option<usize> {
        (self.component(cell, i) > 0).then(|| cell - self.strides[i])
    }

    /// Subspace made of the listed members, in the given order.
    pub fn project(&self, members: &[usize]) -> Result<OutcomeSpace, OutcomeError> {
        for &m in members {
            self.check_member(m)?;
        }
        OutcomeSpace::new(members.iter().map(|&m| self.grids[m].clone()).collect())
    }

    fn check_member(&self, member: usize) -> Result<(), OutcomeError> {
        if member < self.members() {
            Ok(())
        } else {
            Err(OutcomeError::Member {
                member,
                n: self.members(),
            })
        }
    }
}

/// Probability measure on an outcome space; zero cells allowed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Measure {
    space: OutcomeSpace,
    pmf: Vec<Rational>,
}

impl Measure {
    /// Measure with non-negative masses summing to one.
    pub fn new(space: OutcomeSpace, pmf: Vec<Rational>) -> Result<Self, OutcomeError> {
        if pmf.len() != space.cell_count() {
            return Err(OutcomeError::PmfLength {
                got: pmf.len(),
                expected: space.cell_count(),
            });
        }
        if let Some(c) = pmf.iter().position(Signed::is_negative) {
            return Err(OutcomeError::Negative(c));
        }
        let total: Rational = pmf.iter().sum();
        if !total.is_one() {
            return Err(OutcomeError::NotNormalized(total.to_string()));
        }
        Ok(Self { space, pmf })
    }

    /// Point mass at the cell with the given outcome indices.
    pub fn point(space: OutcomeSpace, outcome: &[usize]) -> Result<Self, OutcomeError> {
        let mut pmf = vec![Rational::zero(); space.cell_count()];
        for (m, &o) in outcome.iter().enumerate() {
            if o >= space.size(m) {
                return Err(OutcomeError::OutcomeIndex {
                    member: m,
                    index: o,
                });
            }
        }
        pmf[space.index_of(outcome)] = Rational::one();
        Self::new(space, pmf)
    }

    /// Underlying space.
    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    /// Masses in cell order.
    pub fn pmf(&self) -> &[Rational] {
        &self.pmf
    }

    /// Mass of one cell.
    pub fn prob(&self, cell: usize) -> &Rational {
        &self.pmf[cell]
    }

    /// Whether every cell has positive mass.
    pub fn has_full_support(&self) -> bool {
        self.pmf.iter().all(Signed::is_positive)
    }

    /// Expected outcome of member `i`.
    pub fn mean(&self, i: usize) -> Rational {
        self.pmf
            .iter()
            .enumerate()
            .map(|(c, p)| p * self.space.value(c, i))
            .sum()
    }

    /// Joint law of the listed members (sorted, distinct).
    pub fn marginal(&self, members: &[usize]) -> Result<Measure, OutcomeError> {
        let sub = self.space.project(members)?;
        let mut pmf = vec![Rational::zero(); sub.cell_count()];
        for (c, p) in self.pmf.iter().enumerate() {
            let target: Vec<usize> = members
                .iter()
                .map(|&m| self.space.component(c, m))
                .collect();
            pmf[sub.index_of(&target)] += p;
        }
        Ok(Measure { space: sub, pmf })
    }

    /// Law of the remaining members given `(member, outcome index)` pairs.
    pub fn conditional(&self, given: &[(usize, usize)]) -> Result<Measure, OutcomeError> {
        for &(m, o) in given {
            self.space.check_member(m)?;
            if o >= self.space.size(m) {
                return Err(OutcomeError::OutcomeIndex {
                    member: m,
                    index: o,
                });
            }
        }
        let rest: Vec<usize> = (0..self.space.members())
            .filter(|m| given.iter().all(|(g, _)| g != m))
            .collect();
        if rest.is_empty() {
            return Err(OutcomeError::BadCondition);
        }
        let sub = self.space.project(&rest)?;
        let mut pmf = vec![Rational::zero(); sub.cell_count()];
        let mut total = Rational::zero();
        for (c, p) in self.pmf.iter().enumerate() {
            if given.iter().all(|&(m, o)| self.space.component(c, m) == o) {
                let target: Vec<usize> = rest.iter().map(|&m| self.space.component(c, m)).collect();
                pmf[sub.index_of(&target)] += p;
                total += p;
            }
        }
        if total.is_zero() {
            return Err(OutcomeError::BadCondition);
        }
        for p in &mut pmf {
            *p /= &total;
        }
        Ok(Measure { space: sub, pmf })
    }

    /// Probability of a set of cells given as a membership mask.
    pub fn prob_of(&self, set: &[bool]) -> Rational {
        self.pmf
            .iter()
            .zip(set)
            .filter(|(_, &inside)| inside)
            .map(|(p, _)| p)
            .sum()
    }
}

/// Joint outcome distribution with full support.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct JointDistribution(Measure);

impl Deref for JointDistribution {
    type Target = Measure;

    fn deref(&self) -> &Measure {
        &self.0
    }
}

impl JointDistribution {
    /// Full-support distribution from explicit masses.
    pub fn new(space: OutcomeSpace, pmf: Vec<Rational>) -> Result<Self, OutcomeError> {
        Self::from_measure(Measure::new(space, pmf)?)
    }

    /// Promotes a measure that has full support.
    pub fn from_measure(measure: Measure) -> Result<Self, OutcomeError> {
        match measure.pmf.iter().position(|p| !p.is_positive()) {
            Some(c) => Err(OutcomeError::NotFullSupport(c)),
            None => Ok(Self(measure)),
        }
    }

    /// The underlying measure.
    pub fn as_measure(&self) -> &Measure {
        &self.0
    }

    /// Product of independent per-member marginals over the given grids.
    pub fn independent(
        grids: Vec<Vec<Rational>>,
        marginals: &[Vec<Rational>],
    ) -> Result<Self, OutcomeError> {
        let space = OutcomeSpace::new(grids)?;
        if marginals.len() != space.members() {
            return Err(OutcomeError::PmfLength {
                got: marginals.len(),
                expected: space.members(),
            });
        }
        for (i, m) in marginals.iter().enumerate() {
            Measure::new(OutcomeSpace::new(vec![space.grid(i).to_vec()])?, m.clone())?;
        }
        let pmf = (0..space.cell_count())
            .map(|c| {
                (0..space.members())
                    .map(|i| marginals[i][space.component(c, i)].clone())
                    .product()
            })
            .collect();
        Self::new(space, pmf)
    }

    /// Independent binary outcomes `{0, 1}` with high probabilities `q`.
    pub fn independent_binary(q: &[Rational]) -> Result<Self, OutcomeError> {
        for v in q {
            check_open_unit("q", v)?;
        }
        let marginals: Vec<Vec<Rational>> = q
            .iter()
            .map(|qi| vec![Rational::one() - qi, qi.clone()])
            .collect();
        Self::independent(OutcomeSpace::binary(q.len())?.grids, &marginals)
    }

    /// Binary mixture: with probability `p` all members share one outcome that is
    /// high with probability `q_common`; otherwise members are independent with `q`.
    pub fn common_mixture(
        p: &Rational,
        q_common: &Rational,
        q: &[Rational],
    ) -> Result<Self, OutcomeError> {
        check_unit("p", p)?;
        check_unit("q_common", q_common)?;
        for v in q {
            check_unit("q", v)?;
        }
        let space = OutcomeSpace::binary(q.len())?;
        let one = Rational::one();
        let all_high = space.cell_count() - 1;
        let pmf = (0..space.cell_count())
            .map(|c| {
                let independent: Rational = q
                    .iter()
                    .enumerate()
                    .map(|(i, qi)| {
                        if space.component(c, i) == 1 {
                            qi.clone()
                        } else {
                            &one - qi
                        }
                    })
                    .product();
                let common = match c {
                    0 => &one - q_common,
                    c if c == all_high => q_common.clone(),
                    _ => Rational::zero(),
                };
                p * common + (&one - p) * independent
            })
            .collect();
        Self::new(space, pmf)
    }

    /// Joint law of the listed members.
    pub fn marginal(&self, members: &[usize]) -> Result<JointDistribution, OutcomeError> {
        self.0.marginal(members).map(Self)
    }

    /// Law of the remaining members given `(member, outcome index)` pairs.
    pub fn conditional(&self, given: &[(usize, usize)]) -> Result<JointDistribution, OutcomeError> {
        self.0.conditional(given).map(Self)
    }

    /// `(1 - eps) f + eps g`; the result must keep full support.
    pub fn mix(
        f: &JointDistribution,
        g: &Measure,
        eps: &Rational,
    ) -> Result<JointDistribution, OutcomeError> {
        if f.space != g.space {
            return Err(OutcomeError::SpaceMismatch);
        }
        if !in_unit_interval(eps) {
            return Err(OutcomeError::MixWeight(eps.to_string()));
        }
        let keep = Rational::one() - eps;
        let pmf = f
            .pmf
            .iter()
            .zip(&g.pmf)
            .map(|(a, b)| &keep * a + eps * b)
            .collect();
        Self::new(f.space.clone(), pmf)
    }

    /// Probability that the team conceals under `rule`.
    pub fn prob_no_disclosure(&self, rule: &TeamRule) -> Result<Rational, OutcomeError> {
        self.check_rule(rule)?;
        Ok(self
            .pmf
            .iter()
            .zip(rule.values())
            .map(|(p, d)| p * (Rational::one() - d))
            .sum())
    }

    /// Observer's expected outcome of each member given that the team concealed.
    pub fn posterior_no_disclosure(&self, rule: &TeamRule) -> Result<Vec<Rational>, OutcomeError> {
        let nd = self.prob_no_disclosure(rule)?;
        if nd.is_zero() {
            return Err(OutcomeError::OffPath);
        }
        Ok((0..self.space.members())
            .map(|i| {
                let mass: Rational = self
                    .pmf
                    .iter()
                    .zip(rule.values())
                    .enumerate()
                    .map(|(c, (p, d))| p * (Rational::one() - d) * self.space.value(c, i))
                    .sum();
                mass / &nd
            })
            .collect())
    }

    fn check_rule(&self, rule: &TeamRule) -> Result<(), OutcomeError> {
        if rule.values().len() == self.space.cell_count() {
            Ok(())
        } else {
            Err(OutcomeError::RuleLength {
                got: rule.values().len(),
                expected: self.space.cell_count(),
            })
        }
    }
}

fn check_unit(name: &'static str, v: &Rational) -> Result<(), OutcomeError> {
    if in_unit_interval(v) {
        Ok(())
    } else {
        Err(OutcomeError::Parameter {
            name,
            value: v.to_string(),
            range: "[0, 1]",
        })
    }
}

fn check_open_unit(name: &'static str, v: &Rational) -> Result<(), OutcomeError> {
    if v.is_positive() && *v < Rational::one() {
        Ok(())
    } else {
        Err(OutcomeError::Parameter {
            name,
            value: v.to_string(),
            range: "(0, 1)",
        })
    }
}

/// First-order stochastic dominance of `f` over `g` in the product order.
///
/// Weak: `P_f(U) >= P_g(U)` for every upper set `U`. With `strict`, additionally
/// `P_f(U) > P_g(U)` for at least one `U`.
pub fn fosd_dominates(f: &Measure, g: &Measure, strict: bool) -> Result<bool, OutcomeError> {
    if f.space != g.space {
        return Err(OutcomeError::SpaceMismatch);
    }
    let weak = if enumeration_feasible(&f.space) {
        let mut holds = true;
        for_each_upper_set(&f.space, |u| {
            holds = f.prob_of(u) >= g.prob_of(u);
            holds
        });
        holds
    } else {
        coupling_exists(f, g)
    };
    // Upper-set probabilities determine the measure, so a strict gap exists iff f != g.
    Ok(weak && (!strict || f.pmf != g.pmf))
}

/// `P_f(U) > P_g(U)` for every upper set other than the empty set and the whole space.
pub fn fosd_strictly_everywhere(f: &Measure, g: &Measure) -> Result<bool, OutcomeError> {
    if f.space != g.space {
        return Err(OutcomeError::SpaceMismatch);
    }
    if !enumeration_feasible(&f.space) {
        return Err(OutcomeError::TooLarge);
    }
    let cells = f.space.cell_count();
    let mut holds = true;
    for_each_upper_set(&f.space, |u| {
        let size = u.iter().filter(|&&b| b).count();
        if size > 0 && size < cells {
            holds = f.prob_of(u) > g.prob_of(u);
        }
        holds
    });
    Ok(holds)
}

/// Whether `f_prime` is more correlated than `f`: equal marginals, and for every
/// pair `i != j`, both `P(w_i low | w_j low)` and `P(w_i high | w_j high)` weakly rise.
pub fn more_correlated(f_prime: &Measure, f: &Measure) -> Result<bool, OutcomeError> {
    if f_prime.space != f.space {
        return Err(OutcomeError::SpaceMismatch);
    }
    if !f.space.is_binary() {
        return Err(OutcomeError::NotBinary);
    }
    let n = f.space.members();
    for i in 0..n {
        if f_prime.marginal(&[i])?.pmf != f.marginal(&[i])?.pmf {
            return Err(OutcomeError::MarginalsDiffer(i));
        }
    }
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            for level in 0..2 {
                let a = f_prime.conditional(&[(j, level)])?;
                let b = f.conditional(&[(j, level)])?;
                let pos = if i < j { i } else { i - 1 };
                let pa = a.marginal(&[pos])?.pmf[level].clone();
                let pb = b.marginal(&[pos])?.pmf[level].clone();
                if pa < pb {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn staircase_count(space: &OutcomeSpace) -> u64 {
    // Number of upper sets of a two-member grid is C(m1 + m2, m1).
    let (a, b) = (space.size(0) as u64, space.size(1) as u64);
    let mut count: u64 = 1;
    for j in 0..a.min(b) {
        count = count.saturating_mul(a + b - j) / (j + 1);
        if count > STAIRCASE_LIMIT {
            return u64::MAX;
        }
    }
    count
}

fn enumeration_feasible(space: &OutcomeSpace) -> bool {
    match space.members() {
        1 => true,
        2 => staircase_count(space) <= STAIRCASE_LIMIT,
        _ => space.cell_count() <= ENUMERATION_CELL_LIMIT,
    }
}

/// Visits upper sets (as cell masks) until `visit` returns false.
pub(crate) fn for_each_upper_set(space: &OutcomeSpace, mut visit: impl FnMut(&[bool]) -> bool) {
    let cells = space.cell_count();
    match space.members() {
        1 => {
            for t in 0..=cells {
                let set: Vec<bool> = (0..cells).map(|c| c >= t).collect();
                if !visit(&set) {
                    return;
                }
            }
        }
        2 => {
            let (rows, cols) = (space.size(0), space.size(1));
            // thresholds[r]: first column included in row r; non-increasing in r.
            let mut thresholds = vec![cols; rows];
            staircase(space, &mut thresholds, 0, cols, &mut visit);
        }
        _ => {
            let covers: Vec<Vec<usize>> = (0..cells)
                .map(|c| {
                    (0..space.members())
                        .filter(|&i| space.component(c, i) + 1 < space.size(i))
                        .map(|i| c + space.strides[i])
                        .collect()
                })
                .collect();
            let mut set = vec![false; cells];
            for mask in 0u64..(1u64 << cells) {
                for (c, slot) in set.iter_mut().enumerate() {
                    *slot = mask >> c & 1 == 1;
                }
                let closed = (0..cells)
                    .filter(|&c| set[c])
                    .all(|c| covers[c].iter().all(|&u| set[u]));
                if closed && !visit(&set) {
                    return;
                }
            }
        }
    }
}

fn staircase(
    space: &OutcomeSpace,
    thresholds: &mut Vec<usize>,
    row: usize,
    max: usize,
    visit: &mut impl FnMut(&[bool]) -> bool,
) -> bool {
    if row == thresholds.len() {
        let set: Vec<bool> = (0..space.cell_count())
            .map(|c| space.component(c, 1) >= thresholds[space.component(c, 0)])
            .collect();
        return visit(&set);
    }
    for t in (0..=max).rev() {
        thresholds[row] = t;
        if !staircase(space, thresholds, row + 1, t, visit) {
            return false;
        }
    }
    true
}

/// Strassen's criterion: a monotone coupling moving `f`-mass downward onto `g`
/// exists iff the max flow through the order network saturates.
fn coupling_exists(f: &Measure, g: &Measure) -> bool {
    let space = &f.space;
    let cells = space.cell_count();
    let (source, sink) = (cells, cells + 1);
    let mut net = FlowNetwork::new(cells + 2);
    for c in 0..cells {
        if f.pmf[c].is_positive() {
            net.add_edge(source, c, f.pmf[c].clone());
        }
        if g.pmf[c].is_positive() {
            net.add_edge(c, sink, g.pmf[c].clone());
        }
        for i in 0..space.members() {
            if let Some(below) = space.step_down(c, i) {
                net.add_edge(c, below, Rational::one());
            }
        }
    }
    net.max_flow(source, sink).is_one()
}

struct FlowNetwork {
    adjacency: Vec<Vec<usize>>,
    to: Vec<usize>,
    residual: Vec<Rational>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); nodes],
            to: Vec::new(),
            residual: Vec::new(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, capacity: Rational) {
        self.adjacency[from].push(self.to.len());
        self.to.push(to);
        self.residual.push(capacity);
        self.adjacency[to].push(self.to.len());
        self.to.push(from);
        self.residual.push(Rational::zero());
    }

    /// Edmonds-Karp; exact arithmetic guarantees termination.
    fn max_flow(&mut self, source: usize, sink: usize) -> Rational {
        let mut total = Rational::zero();
        loop {
            let mut via = vec![usize::MAX; self.adjacency.len()];
            let mut queue = VecDeque::from([source]);
            let mut seen = vec![false; self.adjacency.len()];
            seen[source] = true;
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for &e in &self.adjacency[u] {
                    let v = self.to[e];
                    if !seen[v] && self.residual[e].is_positive() {
                        seen[v] = true;
                        via[v] = e;
                        queue.push_back(v);
                    }
                }
            }
            if !seen[sink] {
                return total;
            }
            let mut path = Vec::new();
            let mut v = sink;
            while v != source {
                let e = via[v];
                path.push(e);
                v = self.to[e ^ 1];
            }
            let bottleneck = path
                .iter()
                .map(|&e| &self.residual[e])
                .min()
                .cloned()
                .unwrap_or_else(Rational::zero);
            for &e in &path {
                self.residual[e] -= &bottleneck;
                self.residual[e ^ 1] += &bottleneck;
            }
            total += bottleneck;
        }
    }
}

#[cfg(test)]
pub(crate) fn coupling_exists_for_tests(f: &Measure, g: &Measure) -> bool {
    coupling_exists(f, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn grid(values: &[i64]) -> Vec<Rational> {
        values.iter().map(|&v| int(v)).collect()
    }

    #[test]
    fn cell_indexing_round_trips() {
        let space = OutcomeSpace::new(vec![grid(&[0, 1, 2]), grid(&[5, 7])]).unwrap();
        assert_eq!(space.cell_count(), 6);
        for c in 0..6 {
            assert_eq!(space.index_of(&space.outcome_of(c)), c);
        }
        assert_eq!(space.outcome_of(3), vec![1, 1]);
        assert_eq!(space.value(3, 1), &int(7));
        assert_eq!(space.step_down(3, 0), Some(1));
        assert_eq!(space.step_down(2, 1), None);
    }

    #[test]
    fn rejects_invalid_distributions() {
        let space = OutcomeSpace::binary(2).unwrap();
        let quarter = ratio(1, 4);
        assert!(matches!(
            JointDistribution::new(space.clone(), vec![quarter.clone(); 3]),
            Err(OutcomeError::PmfLength { .. })
        ));
        assert!(matches!(
            JointDistribution::new(
                space.clone(),
                vec![quarter.clone(); 3]
                    .into_iter()
                    .chain([ratio(1, 3)])
                    .collect()
            ),
            Err(OutcomeError::NotNormalized(_))
        ));
        assert!(matches!(
            JointDistribution::new(space, vec![ratio(1, 2), ratio(1, 2), int(0), int(0)]),
            Err(OutcomeError::NotFullSupport(2))
        ));
        assert!(OutcomeSpace::new(vec![grid(&[1, 1])]).is_err());
    }

    #[test]
    fn marginal_and_conditional_of_mixture() {
        let f =
            JointDistribution::common_mixture(&ratio(1, 2), &ratio(1, 2), &vec![ratio(1, 2); 2])
                .unwrap();
        assert_eq!(f.prob(0), &ratio(3, 8));
        assert_eq!(f.prob(1), &ratio(1, 8));
        let m = f.marginal(&[1]).unwrap();
        assert_eq!(m.pmf(), &[ratio(1, 2), ratio(1, 2)]);
        let c = f.conditional(&[(0, 0)]).unwrap();
        assert_eq!(c.pmf(), &[ratio(3, 4), ratio(1, 4)]);
    }

    #[test]
    fn fosd_on_a_line_and_a_square() {
        let line = OutcomeSpace::new(vec![grid(&[0, 1, 2])]).unwrap();
        let hi = Measure::new(line.clone(), vec![ratio(1, 4), ratio(1, 4), ratio(1, 2)]).unwrap();
        let lo = Measure::new(line, vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)]).unwrap();
        assert!(fosd_dominates(&hi, &lo, true).unwrap());
        assert!(!fosd_dominates(&lo, &hi, false).unwrap());
        assert!(fosd_dominates(&hi, &hi, false).unwrap());
        assert!(!fosd_dominates(&hi, &hi, true).unwrap());

        // Independent quarters vs. the diagonal: incomparable.
        let sq = OutcomeSpace::binary(2).unwrap();
        let indep = Measure::new(sq.clone(), vec![ratio(1, 4); 4]).unwrap();
        let diag = Measure::new(sq, vec![ratio(1, 2), int(0), int(0), ratio(1, 2)]).unwrap();
        assert!(!fosd_dominates(&indep, &diag, false).unwrap());
        assert!(!fosd_dominates(&diag, &indep, false).unwrap());
        assert!(coupling_exists_for_tests(&indep, &indep));
        assert!(!coupling_exists_for_tests(&indep, &diag));
    }

    #[test]
    fn upper_set_counts() {
        let count = |space: &OutcomeSpace| {
            let mut n = 0;
            for_each_upper_set(space, |_| {
                n += 1;
                true
            });
            n
        };
        assert_eq!(
            count(&OutcomeSpace::new(vec![grid(&[0, 1, 2]), grid(&[0, 1])]).unwrap()),
            10
        );
        // Free distributive lattice on three generators plus its extremes.
        assert_eq!(count(&OutcomeSpace::binary(3).unwrap()), 20);
    }

    #[test]
    fn correlation_order_on_binary_pairs() {
        let sq = OutcomeSpace::binary(2).unwrap();
        let indep = Measure::new(sq.clone(), vec![ratio(1, 4); 4]).unwrap();
        let corr = Measure::new(
            sq.clone(),
            vec![ratio(3, 8), ratio(1, 8), ratio(1, 8), ratio(3, 8)],
        )
        .unwrap();
        assert!(more_correlated(&corr, &indep).unwrap());
        assert!(!more_correlated(&indep, &corr).unwrap());
        let skew =
            Measure::new(sq, vec![ratio(1, 2), ratio(1, 4), ratio(1, 8), ratio(1, 8)]).unwrap();
        assert_eq!(
            more_correlated(&skew, &indep),
            Err(OutcomeError::MarginalsDiffer(0))
        );
    }

    #[test]
    fn mixing_requires_full_support() {
        let f = JointDistribution::independent_binary(&vec![ratio(1, 2); 2]).unwrap();
        let g = Measure::point(OutcomeSpace::binary(2).unwrap(), &[1, 1]).unwrap();
        let m = JointDistribution::mix(&f, &g, &ratio(1, 2)).unwrap();
        assert_eq!(m.prob(3), &ratio(5, 8));
        assert!(JointDistribution::mix(&f, &g, &int(1)).is_err());
        assert!(JointDistribution::mix(&f, &g, &int(2)).is_err());
    }
}
