//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use team_disclosure::binary::{k_majority_rule, sweep, Axis, BinaryEnv, BinaryParams};
use team_disclosure::incentives::find_epsilon_bar;
use team_disclosure::protocol::DeliberationProtocol;
use team_disclosure::rational::{ratio, to_decimal_string, to_exact_string};
use team_disclosure::theorem_lab::{
    correlation_model, experiment_grid, run_claim, AuditConfig, Claim, ClaimReport, EXPERIMENT_TEAM,
};

type Outcome = Result<String, String>;

/// Title, time limit in seconds, check.
type Criterion = (&'static str, Option<u64>, Box<dyn Fn() -> Outcome>);

fn claim(c: Claim, minimum: usize) -> Outcome {
    let cfg = AuditConfig::default();
    if cfg.count(c) < minimum {
        return Err(format!(
            "{c} runs {} instances, fewer than {minimum}",
            cfg.count(c)
        ));
    }
    summarize(&run_claim(&cfg, c))
}

fn summarize(r: &ClaimReport) -> Outcome {
    let line = format!(
        "{}: {} passed, {} outside hypothesis",
        r.claim, r.passed, r.skipped
    );
    if r.passed() {
        Ok(line)
    } else {
        Err(format!(
            "{line}, {} failed; first: {}",
            r.failures.len(),
            r.failures.first().map_or("-", String::as_str)
        ))
    }
}

fn binary_closed_forms() -> Outcome {
    let h = ratio(1, 2);
    let b = BinaryParams::new(3, h.clone(), h.clone(), h.clone(), h).map_err(|e| e.to_string())?;
    let f = b.joint_distribution(0).map_err(|e| e.to_string())?;
    let rule = k_majority_rule(3, 2).map_err(|e| e.to_string())?;
    let nd = f.prob_no_disclosure(&rule).map_err(|e| e.to_string())?;
    let post = f
        .posterior_no_disclosure(&rule)
        .map_err(|e| e.to_string())?;
    let closed = (
        b.prob_nd(2).map_err(|e| e.to_string())?,
        b.prob_high_and_nd(2).map_err(|e| e.to_string())?,
        b.cond_mean_nd(2).map_err(|e| e.to_string())?,
    );
    let expected = (ratio(1, 2), ratio(1, 16), ratio(1, 8));
    if closed != expected || nd != expected.0 || post[0] != expected.2 {
        return Err(format!(
            "worked instance gave P(ND)={}, P(high,ND)={}, E[w|ND]={}",
            to_exact_string(&closed.0),
            to_exact_string(&closed.1),
            to_exact_string(&closed.2)
        ));
    }
    let grid = claim(Claim::PBin, 1000)?;
    Ok(format!("worked instance 1/2, 1/16, 1/8 exact; {grid}"))
}

fn proposition_three() -> Outcome {
    use std::collections::BTreeMap;
    use team_disclosure::incentives::{dominance, effort_gain, Effort, EffortModel};
    use team_disclosure::outcomes::JointDistribution;
    use team_disclosure::protocol::Coalition;

    let (a, b) = (ratio(3, 5), ratio(1, 2));
    let mut dists = BTreeMap::new();
    for mask in 0..4u32 {
        let e = Effort(Coalition(mask));
        let q0 = if e.contains(1) { a.clone() } else { b.clone() };
        let q1 = if e.contains(0) { a.clone() } else { b.clone() };
        dists.insert(
            e,
            JointDistribution::independent_binary(&[q0, q1]).map_err(|e| e.to_string())?,
        );
    }
    let model = EffortModel::new(dists, vec![ratio(1, 100); 2]).map_err(|e| e.to_string())?;
    let consensus = DeliberationProtocol::consensus(2).map_err(|e| e.to_string())?;
    let unilateral = DeliberationProtocol::unilateral(2).map_err(|e| e.to_string())?;
    let interior = k_majority_rule(2, 2).map_err(|e| e.to_string())?;
    let full = k_majority_rule(2, 1).map_err(|e| e.to_string())?;
    let g_cons = effort_gain(&model, &interior, 0).map_err(|e| e.to_string())?;
    let g_uni = effort_gain(&model, &full, 0).map_err(|e| e.to_string())?;
    let report = dominance(&consensus, &unilateral, &model, false, &Default::default())
        .map_err(|e| e.to_string())?;
    let Some(witness) = report.witness.filter(|_| report.strictly) else {
        return Err("consensus does not strictly dominate unilateral in the worked example".into());
    };
    if g_cons != ratio(3, 80) || g_uni != ratio(0, 1) {
        return Err(format!(
            "worked gains {} and {}",
            to_exact_string(&g_cons),
            to_exact_string(&g_uni)
        ));
    }
    let sampled = claim(Claim::P3, 40)?;
    Ok(format!(
        "worked example gains 3/80 vs 0, witness costs ({}); {sampled}",
        witness
            .iter()
            .map(to_exact_string)
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

fn proposition_four() -> Outcome {
    let (model, g) = correlation_model(&[ratio(1, 2), ratio(1, 2)], &[ratio(1, 10), ratio(1, 10)])?;
    let consensus = DeliberationProtocol::consensus(2).map_err(|e| e.to_string())?;
    let bar = find_epsilon_bar(&model, &g, &consensus)
        .map_err(|e| e.to_string())?
        .ok_or("no threshold below 1")?;
    let sampled = claim(Claim::P4, 10)?;
    Ok(format!(
        "example threshold {}; {sampled}",
        to_decimal_string(&bar.value, 6)
    ))
}

fn figure_two() -> Outcome {
    let base = BinaryEnv::experiment_baseline(EXPERIMENT_TEAM).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut failed = Vec::new();
    for axis in Axis::ALL {
        let grid = experiment_grid(axis);
        let rows = sweep(&base, axis, &grid).map_err(|e| e.to_string())?;
        let trace: Vec<usize> = rows.iter().map(|r| r.k_star).collect();
        let rows_at = |idx: Vec<usize>| -> String {
            idx.into_iter()
                .map(|j| {
                    format!(
                        "{} -> {}",
                        to_decimal_string(&rows[j].axis_value, 2),
                        rows[j].k_star
                    )
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        let stated = axis.stated_shape().violations(&trace);
        let effect = axis.effect_shape().violations(&trace);
        let literal = if stated.is_empty() {
            format!("literal {}: PASS", axis.stated_shape())
        } else {
            format!(
                "literal {}: FAIL at {}",
                axis.stated_shape(),
                rows_at(stated)
            )
        };
        if !effect.is_empty() {
            failed.push(format!(
                "panel {} not {} in the effect size at {}",
                axis.panel(),
                axis.effect_shape(),
                rows_at(effect)
            ));
        }
        let timer = Instant::now();
        let big = BinaryEnv::experiment_baseline(10).map_err(|e| e.to_string())?;
        sweep(&big, axis, &grid).map_err(|e| e.to_string())?;
        if timer.elapsed() > Duration::from_secs(60) {
            failed.push(format!(
                "panel {} at N = 10 took {:.1}s",
                axis.panel(),
                timer.elapsed().as_secs_f64()
            ));
        }
        parts.push(format!("({}) {:?} [{literal}]", axis.panel(), trace));
    }
    let line = parts.join("; ");
    if failed.is_empty() {
        Ok(format!("effect-size reading holds; {line}"))
    } else {
        Err(format!("{}; {line}", failed.join("; ")))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for name in ["first.txt", "second.txt"] {
        let out = Command::new(env!("CARGO_BIN_EXE_team-disclosure"))
            .args(["audit", "--seed", "0", "--out", name])
            .current_dir(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.code() != Some(0) {
            return Err(format!(
                "audit exited with {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stdout)
            ));
        }
        reports.push(std::fs::read(dir.path().join(name)).map_err(|e| e.to_string())?);
    }
    if reports[0] != reports[1] {
        return Err("reports differ".into());
    }
    Ok(format!(
        "two runs exit 0 with identical {}-byte reports",
        reports[0].len()
    ))
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (
            "binary closed forms",
            Some(10),
            Box::new(binary_closed_forms),
        ),
        (
            "equilibrium existence and interiority",
            Some(120),
            Box::new(|| claim(Claim::T1, 200)),
        ),
        (
            "refinement predicate vs brute force",
            Some(120),
            Box::new(|| claim(Claim::T2, 100)),
        ),
        (
            "effort gain identity",
            None,
            Box::new(|| claim(Claim::T3Identity, 500)),
        ),
        ("effort type rankings", None, Box::new(proposition_three)),
        ("correlation threshold", None, Box::new(proposition_four)),
        (
            "binary consensus rankings",
            None,
            Box::new(|| claim(Claim::PBin, 1000)),
        ),
        ("optimal consensus traces", None, Box::new(figure_two)),
        ("audit determinism", None, Box::new(determinism)),
    ];
    let mut all = true;
    for (idx, (title, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = check();
        let secs = start.elapsed().as_secs_f64();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if secs > *limit as f64 {
                outcome = Err(format!("took {secs:.1}s, limit {limit}s"));
            }
        }
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        all &= outcome.is_ok();
        println!(
            "criterion {} [{status}] {title} ({secs:.1}s): {detail}",
            idx + 1
        );
    }
    println!(
        "acceptance: {}",
        if all {
            "all criteria passed"
        } else {
            "some criteria failed"
        }
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
