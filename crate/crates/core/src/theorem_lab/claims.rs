//! Instance generation and checks per claim.

use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::gen;
use super::{AuditConfig, Verdict};
use crate::binary::{k_majority_rule, Axis, BinaryEnv, BinaryParams};
use crate::equilibrium::{
    consistent_with_deliberation, find_equilibria, full_disclosure_is_plausible,
    plausible_full_disclosure_search, Classification, DisclosureProfile, TeamRule,
};
use crate::incentives::{
    classify_effort, dominance, dominates, effective_team_leader, effort_gain, effort_gain_cov,
    effort_gain_with_posterior, find_epsilon_bar, EffortClass, EffortModel,
};
use crate::outcomes::{more_correlated, JointDistribution, Measure, OutcomeSpace};
use crate::protocol::DeliberationProtocol;
use crate::rational::{ratio, to_exact_string, Rational};
use crate::SearchCaps;

/// A unit of work produced by a claim's generator and checked independently.
pub(super) type Check = Box<dyn Fn() -> Verdict + Send + Sync>;

fn fail(msg: impl Into<String>) -> Verdict {
    Verdict::Fail(msg.into())
}

fn error(e: impl std::fmt::Display) -> Verdict {
    Verdict::Fail(format!("error: {e}"))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return error(e),
        }
    };
}

/// Compact JSON rendering of a distribution for counterexample reports.
pub(super) fn describe(dist: &JointDistribution) -> String {
    let space = dist.space();
    json!({
        "grid": space.grids().iter().map(|g| g.iter().map(to_exact_string).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "pmf": dist.pmf().iter().map(to_exact_string).collect::<Vec<_>>(),
    })
    .to_string()
}

fn describe_model(model: &EffortModel) -> String {
    let profiles: Vec<serde_json::Value> = model
        .profiles()
        .map(|(e, f)| json!({ "effort": e.0.to_string(), "dist": describe(f) }))
        .collect();
    serde_json::Value::Array(profiles).to_string()
}

fn sizes_up_to(cfg: &AuditConfig, wanted: &[usize]) -> Vec<usize> {
    let v: Vec<usize> = wanted
        .iter()
        .copied()
        .filter(|&s| s <= cfg.grid_max)
        .collect();
    if v.is_empty() {
        vec![2]
    } else {
        v
    }
}

fn team_sizes(cfg: &AuditConfig, lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi.min(cfg.n_max)).collect()
}

/// Full disclosure always, partial iff some member cannot force disclosure,
/// and interiority determined by whether anyone can force disclosure.
pub(super) fn equilibrium_existence(
    cfg: &AuditConfig,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<Check> {
    let sizes = sizes_up_to(cfg, &[2, 3]);
    let caps = cfg.caps.clone();
    let mut checks: Vec<Check> = Vec::new();
    for n in team_sizes(cfg, 2, 3) {
        let protocols = DeliberationProtocol::enumerate_all(n).expect("small team");
        for _ in 0..count {
            let space = gen::space(rng, n, &sizes);
            let dist = gen::distribution(rng, &space);
            for d in &protocols {
                let (d, dist, caps) = (d.clone(), dist.clone(), caps.clone());
                checks.push(Box::new(move || {
                    let eqs = tri!(find_equilibria(&d, &dist, &caps));
                    let here = || format!("protocol {d}, dist {}", describe(&dist));
                    if !eqs.iter().any(|e| e.classification == Classification::Full) {
                        return fail(format!("no full-disclosure equilibrium: {}", here()));
                    }
                    let all_unilateral = d.unilateral_members().len() == d.members();
                    let partial = eqs.iter().any(|e| e.classification.is_partial());
                    if partial == all_unilateral {
                        return fail(format!("partial equilibrium found = {partial}: {}", here()));
                    }
                    let none_unilateral = d.unilateral_members().is_empty();
                    for e in eqs.iter().filter(|e| e.classification.is_partial()) {
                        let interior = e.classification == Classification::Interior;
                        if interior != none_unilateral {
                            return fail(format!(
                                "partial equilibrium with posteriors {} has interior = {interior}: {}",
                                posteriors(&e.posteriors),
                                here()
                            ));
                        }
                    }
                    Verdict::Pass
                }));
            }
        }
    }
    checks
}

fn posteriors(p: &[Rational]) -> String {
    let parts: Vec<String> = p.iter().map(to_exact_string).collect();
    format!("({})", parts.join(", "))
}

/// The closed-form refinement predicate matches a brute-force search for a
/// full-disclosure equilibrium with deliberation-consistent beliefs.
pub(super) fn refinement_characterization(
    cfg: &AuditConfig,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<Check> {
    let caps = cfg.caps.clone();
    let mut checks: Vec<Check> = Vec::new();
    for n in team_sizes(cfg, 1, 3) {
        let protocols = DeliberationProtocol::enumerate_all(n).expect("small team");
        for _ in 0..count {
            let dist = gen::binary_distribution(rng, n);
            for d in &protocols {
                let (d, dist, caps) = (d.clone(), dist.clone(), caps.clone());
                checks.push(Box::new(move || {
                    let found = tri!(plausible_full_disclosure_search(&d, &dist, &caps));
                    let predicted = full_disclosure_is_plausible(&d);
                    if found.is_some() != predicted {
                        return fail(format!(
                            "predicate {predicted}, search {}: protocol {d}, dist {}",
                            found.is_some(),
                            describe(&dist)
                        ));
                    }
                    if let Some(f) = found {
                        if !tri!(consistent_with_deliberation(
                            &f.equilibrium.posteriors,
                            &dist,
                            &d,
                            &caps
                        )) {
                            return fail(format!("search result not justified: protocol {d}"));
                        }
                    }
                    Verdict::Pass
                }));
            }
        }
    }
    checks
}

/// Every equilibrium found uses threshold strategies.
pub(super) fn threshold_strategies(
    cfg: &AuditConfig,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<Check> {
    let sizes = sizes_up_to(cfg, &[2, 3, 4]);
    let ns = team_sizes(cfg, 2, 3);
    (0..count)
        .map(|_| {
            let n = ns[rng.gen_range(0..ns.len())];
            let d = gen::protocol(rng, n);
            let space = gen::space(rng, n, &sizes);
            let dist = gen::distribution(rng, &space);
            let caps = cfg.caps.clone();
            Box::new(move || {
                for e in tri!(find_equilibria(&d, &dist, &caps)) {
                    if !e.profile.is_threshold_form(dist.space(), &e.posteriors) {
                        return fail(format!(
                            "non-threshold profile at posteriors {}: protocol {d}, dist {}",
                            posteriors(&e.posteriors),
                            describe(&dist)
                        ));
                    }
                }
                Verdict::Pass
            }) as Check
        })
        .collect()
}

fn high_low_rule(d: &DeliberationProtocol, space: &OutcomeSpace) -> TeamRule {
    let profile = DisclosureProfile::from_cuts(space, &vec![1; space.members()]);
    TeamRule::from_profile(d, space, &profile).expect("matching team")
}

/// On binary outcomes, every interior equilibrium discloses exactly when the
/// high-outcome members form a winning coalition.
pub(super) fn binary_interior_rule(
    cfg: &AuditConfig,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<Check> {
    let ns = team_sizes(cfg, 2, 4);
    (0..count)
        .map(|_| {
            let n = ns[rng.gen_range(0..ns.len())];
            let d = gen::protocol(rng, n);
            let dist = gen::binary_distribution(rng, n);
            let caps = cfg.caps.clone();
            Box::new(move || {
                let expected = high_low_rule(&d, dist.space());
                for e in tri!(find_equilibria(&d, &dist, &caps)) {
                    if e.classification == Classification::Interior && e.rule != expected {
                        return fail(format!(
                            "interior rule differs from high-coalition rule: protocol {d}, dist {}",
                            describe(&dist)
                        ));
                    }
                }
                Verdict::Pass
            }) as Check
        })
        .collect()
}

/// Easier disclosure never removes disclosure: each equilibrium rule under a
/// protocol is matched pointwise from above under any protocol containing it.
pub(super) fn nested_protocols(
    cfg: &AuditConfig,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<Check> {
    let ns = team_sizes(cfg, 2, 3);
    let pairs: Vec<Vec<(DeliberationProtocol, DeliberationProtocol)>> = ns
        .iter()
        .map(|&n| {
            let all = DeliberationProtocol::enumerate_all(n).expect("small team");
            let mut v = Vec::new();
            for a in &all {
                for b in &all {
                    if a != b && a.is_nested_in(b) {
                        v.push((a.clone(), b.clone()));
                    }
                }
            }
            v
        })
        .collect();
    (0..count)
        .map(|_| {
            let which = rng.gen_range(0..ns.len());
            let (d, d2) = pairs[which][rng.gen_range(0..pairs[which].len())].clone();
            let dist = gen::binary_distribution(rng, ns[which]);
            let caps = cfg.caps.clone();
            Box::new(move || {
                let wider = tri!(find_equilibria(&d2, &dist, &caps));
                for e in tri!(find_equilibria(&d, &dist, &caps)) {
                    if !wider.iter().any(|w| w.rule.dominates(&e.rule)) {
                        return fail(format!(
                            "no matching equilibrium under {d2} for posteriors {} under {d}: dist {}",
                            posteriors(&e.posteriors),
                            describe(&dist)
                        ));
                    }
                }
                Verdict::Pass
            }) as Check
        })
        .collect()
}

fn joint_prob(
    dist: &JointDistribution,
    rule: &TeamRule,
    i: usize,
    disclosed: bool,
    high: usize,
) -> Rational {
    let space = dist.space();
    (0..space.cell_count())
        .filter(|&c| space.component(c, i) == high)
        .map(|c| {
            let d = &rule.values()[c];
            let weight = if disclosed {
                d.clone()
            } else {
                Rational::one() - d
            };
            dist.prob(c) * weight
        })
        .sum()
}

/// Raising correlation with fixed marginals keeps the interior rule and makes
/// disclosure track each member's outcome more closely.
pub(super) fn correlation_comparative_statics(
    cfg: &AuditConfig,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<Check> {
    let ns = team_sizes(cfg, 2, 3);
    let protocols: Vec<Vec<DeliberationProtocol>> = ns
        .iter()
        .map(|&n| {
            DeliberationProtocol::enumerate_all(n)
                .expect("small team")
                .into_iter()
                .filter(|d| d.unilateral_members().is_empty())
                .collect()
        })
        .collect();
    (0..count)
        .map(|_| {
            let which = rng.gen_range(0..ns.len());
            let d = protocols[which][rng.gen_range(0..protocols[which].len())].clone();
            let f = gen::binary_distribution(rng, ns[which]);
            let t = ratio(rng.gen_range(1..=3), 4);
            let caps = cfg.caps.clone();
            Box::new(move || {
                let coupling = gen::comonotone_coupling(&f);
                let f2 = tri!(JointDistribution::mix(&f, &coupling, &t));
                if !tri!(more_correlated(&f2, &f)) {
                    return fail(format!("mixture not more correlated: dist {}", describe(&f)));
                }
                let interior = |dist: &JointDistribution| -> Result<Vec<TeamRule>, String> {
                    Ok(find_equilibria(&d, dist, &caps)
                        .map_err(|e| e.to_string())?
                        .into_iter()
                        .filter(|e| e.classification == Classification::Interior)
                        .map(|e| e.rule)
                        .collect())
                };
                let before = tri!(interior(&f));
                let after = tri!(interior(&f2));
                let Some(rule) = before.first() else {
                    return fail(format!("no interior equilibrium: protocol {d}, dist {}", describe(&f)));
                };
                if !after.contains(rule) {
                    return fail(format!(
                        "interior rule not preserved: protocol {d}, dist {}, t {}",
                        describe(&f),
                        to_exact_string(&t)
                    ));
                }
                for i in 0..d.members() {
                    let hi_before = joint_prob(&f, rule, i, true, 1);
                    let hi_after = joint_prob(&f2, rule, i, true, 1);
                    let lo_before = joint_prob(&f, rule, i, false, 0);
                    let lo_after = joint_prob(&f2, rule, i, false, 0);
                    if hi_after < hi_before || lo_after < lo_before {
                        let msg = format!(
                            "member {} disclosure less aligned with outcome at t {}: protocol {d}, dist {}",
                            i + 1,
                            to_exact_string(&t),
                            describe(&f)
                        );
                        // Pairwise correlation does not control three-way events.
                        return if d.members() == 2 { fail(msg) } else { Verdict::PassWithNote(msg) };
                    }
                }
                Verdict::Pass
            }) as Check
        })
        .collect()
}

/// Direct, covariance and enumerated-payoff forms of the effort gain coincide.
pub(super) fn gain_identity(cfg: &AuditConfig, rng: &mut ChaCha8Rng, count: usize) -> Vec<Check> {
    let sizes = sizes_up_to(cfg, &[2, 3]);
    let ns = team_sizes(cfg, 2, 3);
    (0..count)
        .map(|_| {
            let n = ns[rng.gen_range(0..ns.len())];
            let model = gen::arbitrary_model(rng, n, &sizes);
            let cells = model.space().cell_count();
            let mut values: Vec<Rational> = (0..cells)
                .map(|_| match rng.gen_range(0..4) {
                    0 => Rational::zero(),
                    1 => Rational::one(),
                    2 => ratio(1, 2),
                    _ => gen::open_probability(rng, 10),
                })
                .collect();
            values[rng.gen_range(0..cells)] = Rational::zero();
            let rule = TeamRule::new(values).expect("values in the unit interval");
            Box::new(move || {
                let post = tri!(model.full_effort().posterior_no_disclosure(&rule));
                for (i, post_i) in post.iter().enumerate() {
                    let direct = tri!(effort_gain(&model, &rule, i));
                    let cov = tri!(effort_gain_cov(&model, &rule, i));
                    let payoff = tri!(effort_gain_with_posterior(&model, &rule, i, post_i));
                    if direct != cov || direct != payoff {
                        return fail(format!(
                            "member {}: gain {}, covariance form {}, payoff difference {}: model {}",
                            i + 1,
                            to_exact_string(&direct),
                            to_exact_string(&cov),
                            to_exact_string(&payoff),
                            describe_model(&model)
                        ));
                    }
                }
                Verdict::Pass
            }) as Check
        })
        .collect()
}

/// Self-improving effort favors unilateral disclosure; team-improving effort
/// favors consensual disclosure.
pub(super) fn effort_type_ranking(
    cfg: &AuditConfig,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<Check> {
    let sizes = sizes_up_to(cfg, &[2, 3]);
    let ns = team_sizes(cfg, 2, 3);
    let caps = cfg.caps.clone();
    let mut checks: Vec<Check> = vec![Box::new({
        let caps = caps.clone();
        move || worked_team_improving_example(&caps)
    })];
    for idx in 0..count {
        let n = ns[rng.gen_range(0..ns.len())];
        let other = gen::protocol(rng, n);
        let caps = caps.clone();
        if idx % 2 == 0 {
            let model = gen::self_improving_model(rng, n, &sizes);
            checks.push(Box::new(move || self_improving_case(&model, &other, &caps)));
        } else {
            let model = gen::team_improving_model(rng, n, &[2]);
            checks.push(Box::new(move || team_improving_case(&model, &other, &caps)));
        }
    }
    checks
}

fn worked_team_improving_example(caps: &SearchCaps) -> Verdict {
    use crate::incentives::Effort;
    use crate::protocol::Coalition;
    let (a, b) = (ratio(3, 5), ratio(1, 2));
    let mut dists = std::collections::BTreeMap::new();
    for mask in 0..4u32 {
        let e = Effort(Coalition(mask));
        let q0 = if e.contains(1) { a.clone() } else { b.clone() };
        let q1 = if e.contains(0) { a.clone() } else { b.clone() };
        dists.insert(e, tri!(JointDistribution::independent_binary(&[q0, q1])));
    }
    let model = tri!(EffortModel::new(dists, vec![ratio(1, 100); 2]));
    let consensus = DeliberationProtocol::consensus(2).expect("two members");
    let unilateral = DeliberationProtocol::unilateral(2).expect("two members");
    let interior = high_low_rule(&consensus, model.space());
    let gains: Vec<Rational> = tri!((0..2)
        .map(|i| effort_gain(&model, &interior, i))
        .collect::<Result<_, _>>());
    if gains != vec![ratio(3, 80); 2] {
        return fail(format!("consensual gains {}", posteriors(&gains)));
    }
    let full = TeamRule::full_disclosure(model.space());
    let uni: Vec<Rational> = tri!((0..2)
        .map(|i| effort_gain(&model, &full, i))
        .collect::<Result<_, _>>());
    if uni != vec![Rational::zero(); 2] {
        return fail(format!("unilateral gains {}", posteriors(&uni)));
    }
    let report = tri!(dominance(&consensus, &unilateral, &model, false, caps));
    if !report.strictly || report.witness.is_none() {
        return fail("worked example: consensual protocol does not strictly dominate");
    }
    Verdict::Pass
}

fn self_improving_case(
    model: &EffortModel,
    other: &DeliberationProtocol,
    caps: &SearchCaps,
) -> Verdict {
    let here = || format!("protocol {other}, model {}", describe_model(model));
    if tri!(classify_effort(model)) != EffortClass::SelfImproving {
        return fail(format!(
            "generator did not produce self-improving effort: {}",
            here()
        ));
    }
    let n = model.members();
    let unilateral = DeliberationProtocol::unilateral(n).expect("n >= 1");
    if !tri!(dominates(&unilateral, other, model, false, false, caps)) {
        return fail(format!("unilateral does not dominate: {}", here()));
    }
    if other.disclosure_requires_more_consensus()
        && !tri!(dominates(&unilateral, other, model, true, true, caps))
    {
        return fail(format!(
            "unilateral does not strictly dominate after refinement: {}",
            here()
        ));
    }
    Verdict::Pass
}

fn team_improving_case(
    model: &EffortModel,
    other: &DeliberationProtocol,
    caps: &SearchCaps,
) -> Verdict {
    let here = || format!("protocol {other}, model {}", describe_model(model));
    if tri!(classify_effort(model)) != EffortClass::TeamImproving {
        return fail(format!(
            "generator did not produce team-improving effort: {}",
            here()
        ));
    }
    let n = model.members();
    let unilateral = DeliberationProtocol::unilateral(n).expect("n >= 1");
    let consensus = DeliberationProtocol::consensus(n).expect("n >= 1");
    if !tri!(dominates(&consensus, &unilateral, model, false, true, caps)) {
        return fail(format!(
            "consensual does not strictly dominate unilateral: {}",
            here()
        ));
    }
    if !other.unilateral_members().is_empty()
        && tri!(dominates(other, &consensus, model, false, false, caps))
    {
        return fail(format!(
            "consensual dominated by a protocol with a unilateral member: {}",
            here()
        ));
    }
    Verdict::Pass
}

/// Mixing enough perfect correlation into full-effort outcomes makes consensual
/// disclosure strictly better than unilateral disclosure.
pub(super) fn correlation_threshold(
    cfg: &AuditConfig,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<Check> {
    let caps = cfg.caps.clone();
    (0..count)
        .map(|_| {
            let q: Vec<Rational> = (0..2).map(|_| ratio(rng.gen_range(6..=14), 20)).collect();
            let drop: Vec<Rational> = (0..2).map(|_| ratio(rng.gen_range(1..=4), 20)).collect();
            let caps = caps.clone();
            Box::new(move || {
                let (model, g) = tri!(correlation_model(&q, &drop));
                let consensus = DeliberationProtocol::consensus(2).expect("two members");
                let unilateral = DeliberationProtocol::unilateral(2).expect("two members");
                let Some(bar) = tri!(find_epsilon_bar(&model, &g, &consensus)) else {
                    return fail(format!(
                        "no threshold below 1: model {}",
                        describe_model(&model)
                    ));
                };
                if bar.value >= Rational::one() {
                    return fail("threshold not below 1");
                }
                let mut eps = &bar.value + ratio(1, 100);
                while eps <= ratio(99, 100) {
                    let mixed = tri!(JointDistribution::mix(model.full_effort(), &g, &eps));
                    let m = tri!(model.with_full_effort(mixed));
                    if !tri!(dominates(&consensus, &unilateral, &m, false, true, &caps)) {
                        return fail(format!(
                            "no strict dominance at eps {}: model {}",
                            to_exact_string(&eps),
                            describe_model(&model)
                        ));
                    }
                    eps += ratio(1, 100);
                }
                Verdict::Pass
            }) as Check
        })
        .collect()
}

/// Two binary members, independent with high probabilities `q` at full effort;
/// a member's own high probability falls by `drop` when they shirk. The
/// perfectly correlated target puts mass on both-high and both-low only.
pub fn correlation_model(
    q: &[Rational],
    drop: &[Rational],
) -> Result<(EffortModel, Measure), String> {
    use crate::incentives::Effort;
    let mut dists = std::collections::BTreeMap::new();
    let full = JointDistribution::independent_binary(q).map_err(|e| e.to_string())?;
    dists.insert(Effort::full(2), full.clone());
    for i in 0..2 {
        let mut qd = q.to_vec();
        qd[i] = &qd[i] - &drop[i];
        let f = JointDistribution::independent_binary(&qd).map_err(|e| e.to_string())?;
        dists.insert(Effort::all_but(2, i), f);
    }
    let model = EffortModel::new(dists, vec![Rational::one(); 2]).map_err(|e| e.to_string())?;
    let not_both_low = Rational::one() - full.prob(0);
    let top = (Rational::one() + not_both_low) * ratio(1, 2);
    let space = full.space().clone();
    let mut pmf = vec![Rational::zero(); 4];
    pmf[3] = top.clone();
    pmf[0] = Rational::one() - top;
    let g = Measure::new(space, pmf).map_err(|e| e.to_string())?;
    Ok((model, g))
}

/// A leader whose worst outcome is worse news for each teammate at full
/// effort makes the leader protocol strictly better than unilateral disclosure.
///
/// Full effort mixes the shirking distribution with a perfectly correlated one
/// that puts mass `a <= F(worst cell)` on everyone's worst outcome and the rest
/// on everyone's best, which keeps effort productive.
pub(super) fn effective_leader(
    cfg: &AuditConfig,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<Check> {
    let sizes = sizes_up_to(cfg, &[2, 3]);
    let ns = team_sizes(cfg, 2, 3);
    let caps = cfg.caps.clone();
    (0..count)
        .map(|_| {
            let n = ns[rng.gen_range(0..ns.len())];
            let m = sizes[rng.gen_range(0..sizes.len())];
            let space = gen::space(rng, n, &[m]);
            let lazy = gen::distribution(rng, &space);
            let share = ratio(rng.gen_range(1..=4), 4);
            let t = ratio(rng.gen_range(1..=3), 4);
            let leader = rng.gen_range(0..n);
            let caps = caps.clone();
            Box::new(move || {
                let space = lazy.space().clone();
                let n = space.members();
                let worst = lazy.prob(0) * &share;
                let mut pmf = vec![Rational::zero(); space.cell_count()];
                pmf[space.cell_count() - 1] = Rational::one() - &worst;
                pmf[0] = worst;
                let g = tri!(Measure::new(space, pmf));
                let full = tri!(JointDistribution::mix(&lazy, &g, &t));
                let mut dists = std::collections::BTreeMap::new();
                dists.insert(crate::incentives::Effort::full(n), full);
                for j in 0..n {
                    dists.insert(crate::incentives::Effort::all_but(n, j), lazy.clone());
                }
                let model = tri!(EffortModel::new(dists, vec![Rational::one(); n]));
                if !tri!(effective_team_leader(&model, leader)) {
                    return Verdict::Skip;
                }
                let lead = DeliberationProtocol::leader(n, leader).expect("member in range");
                let unilateral = DeliberationProtocol::unilateral(n).expect("n >= 1");
                if !tri!(dominates(&lead, &unilateral, &model, false, true, &caps)) {
                    return fail(format!(
                        "leader {} not effective: model {}",
                        leader + 1,
                        describe_model(&model)
                    ));
                }
                Verdict::Pass
            }) as Check
        })
        .collect()
}

fn random_params<R: Rng>(rng: &mut R, n: usize) -> BinaryParams {
    let mut p = || gen::open_probability(rng, 20);
    BinaryParams::new(n, p(), p(), p(), p()).expect("open probabilities")
}

/// Closed forms agree with enumeration; consensus levels rank as stated for
/// each effort channel; the no-disclosure posterior moves in the stated
/// direction with each parameter.
pub(super) fn binary_rankings(cfg: &AuditConfig, rng: &mut ChaCha8Rng, count: usize) -> Vec<Check> {
    let ns = team_sizes(cfg, 2, 6);
    (0..count)
        .map(|_| {
            let n = ns[rng.gen_range(0..ns.len())];
            let full = random_params(rng, n);
            let axis = Axis::ALL[rng.gen_range(0..4)];
            Box::new(move || binary_case(&full, axis)) as Check
        })
        .collect()
}

fn axis_value(p: &BinaryParams, axis: Axis) -> &Rational {
    match axis {
        Axis::QOther => p.q_other(),
        Axis::P => p.p(),
        Axis::QOwn => p.q_own(),
        Axis::QCommon => p.q_common(),
    }
}

fn binary_case(full: &BinaryParams, axis: Axis) -> Verdict {
    let n = full.members();
    let here = || format!("n {n}, axis {axis}, params {full:?}");
    let joint = tri!(full.joint_distribution(0));
    for k in 1..=n {
        let rule = tri!(k_majority_rule(n, k));
        let nd = tri!(joint.prob_no_disclosure(&rule));
        let hi_nd = joint_prob(&joint, &rule, 0, false, 1);
        let post = tri!(joint.posterior_no_disclosure(&rule))[0].clone();
        if nd != tri!(full.prob_nd(k))
            || hi_nd != tri!(full.prob_high_and_nd(k))
            || post != tri!(full.cond_mean_nd(k))
            || post != tri!(full.cond_mean_nd_inverted(k))
        {
            return fail(format!(
                "closed form differs from enumeration at K={k}: {}",
                here()
            ));
        }
    }
    // Lower the swept parameter under the deviation and compare consensus levels.
    let value = axis_value(full, axis);
    let lowered = value * ratio(1, 2);
    let env = tri!(BinaryEnv::new(
        full.clone(),
        tri!(full.with(axis, lowered.clone()))
    ));
    let gains = tri!(env.gains());
    let favors_consensus = matches!(axis, Axis::QOther | Axis::P);
    for k in 2..=n {
        let ok = if favors_consensus {
            gains[k - 1] > gains[0]
        } else {
            gains[0] >= gains[k - 1]
        };
        if !ok {
            return fail(format!(
                "K={k} vs K=1 gains {} and {}: {}",
                to_exact_string(&gains[k - 1]),
                to_exact_string(&gains[0]),
                here()
            ));
        }
    }
    let shifted = tri!(full.with(axis, lowered));
    for k in 2..=n {
        let hi = tri!(full.cond_mean_nd(k));
        let lo = tri!(shifted.cond_mean_nd(k));
        let decreasing = matches!(axis, Axis::QOther | Axis::P);
        if (decreasing && hi >= lo) || (!decreasing && hi <= lo) {
            return fail(format!(
                "posterior moves the wrong way at K={k}: {}",
                here()
            ));
        }
    }
    Verdict::Pass
}

/// Grid over one axis of the optimal-consensus experiment.
pub fn experiment_grid(axis: Axis) -> Vec<Rational> {
    let lo = if axis == Axis::QOther { 1 } else { 15 };
    (lo..=25).map(|k| ratio(k, 50)).collect()
}

/// Team size of the optimal-consensus experiment.
pub const EXPERIMENT_TEAM: usize = 6;

/// Optimal consensus traces have the stated shape in the size of each effort
/// effect on the experiment's baseline.
pub(super) fn optimal_consensus(
    cfg: &AuditConfig,
    _rng: &mut ChaCha8Rng,
    _count: usize,
) -> Vec<Check> {
    let n = EXPERIMENT_TEAM.min(cfg.n_max.max(2));
    Axis::ALL
        .into_iter()
        .map(|axis| {
            Box::new(move || {
                let base = tri!(BinaryEnv::experiment_baseline(n));
                let rows = tri!(crate::binary::sweep(&base, axis, &experiment_grid(axis)));
                let trace: Vec<usize> = rows.iter().map(|r| r.k_star).collect();
                let bad = axis.effect_shape().violations(&trace);
                if bad.is_empty() {
                    let stated = axis.stated_shape().violations(&trace);
                    if stated.is_empty() {
                        Verdict::Pass
                    } else {
                        Verdict::PassWithNote(format!(
                            "panel {}: trace {:?} is not {} against the deviation value (violations at {})",
                            axis.panel(),
                            trace,
                            axis.stated_shape(),
                            rows_at(&rows, &stated)
                        ))
                    }
                } else {
                    fail(format!(
                        "panel {}: trace {:?} is not {} (violations at {})",
                        axis.panel(),
                        trace,
                        axis.effect_shape(),
                        rows_at(&rows, &bad)
                    ))
                }
            }) as Check
        })
        .collect()
}

fn rows_at(rows: &[crate::binary::SweepRow], idx: &[usize]) -> String {
    idx.iter()
        .map(|&j| {
            format!(
                "{}->{}",
                crate::rational::to_decimal_string(&rows[j].axis_value, 12),
                rows[j].k_star
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}
