use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::{json, Map, Value};

use team_disclosure::binary::{sweep, write_sweep_csv, Axis, BinaryEnv, BinaryError};
use team_disclosure::config::{
    parse_dist, parse_env, parse_grid, parse_model, parse_profile, parse_protocol, parse_rationals,
    read_inline_or_file, ConfigError,
};
use team_disclosure::equilibrium::{
    find_equilibria, full_disclosure_is_plausible, plausible_full_disclosure_search,
    verify_equilibrium, EquilibriumError,
};
use team_disclosure::incentives::{compare_corners, protocol_full_effort_corners, IncentiveError};
use team_disclosure::rational::{to_decimal_string, to_exact_string};
use team_disclosure::report::{
    to_json, CornerView, DominanceView, EquilibriumView, Justification, ProtocolView,
    RefinementView, VerificationView,
};
use team_disclosure::theorem_lab::{
    experiment_grid, run_audit, AuditConfig, Claim, EXPERIMENT_TEAM,
};
use team_disclosure::SearchCaps;

/// Equilibria and effort incentives of team disclosure under deliberation protocols.
#[derive(Debug, Parser)]
#[command(name = "team-disclosure", version, args_override_self = true)]
struct Cli {
    /// JSON run configuration: `command` plus any flag names as keys. Flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the number of processors.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every equilibrium of a protocol under a distribution.
    Solve(SolveArgs),
    /// Checks a strategy profile and posteriors.
    Verify(VerifyArgs),
    /// Whether full disclosure survives deliberation-consistent beliefs.
    Refine(RefineArgs),
    /// Effort gains at each full-effort equilibrium.
    Gains(GainsArgs),
    /// Compares the full-effort cost sets of two protocols.
    Dominance(DominanceArgs),
    /// Effort gain per consensus level in a binary environment.
    OptimalK(OptimalKArgs),
    /// Optimal consensus across deviation values of one parameter.
    Sweep(SweepArgs),
    /// Randomized audit of the theory.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
struct CapArgs {
    /// Largest team for equilibrium search.
    #[arg(long)]
    max_members: Option<usize>,
    /// Largest per-member outcome grid for equilibrium search.
    #[arg(long)]
    max_grid: Option<usize>,
    /// Most members mixing at once.
    #[arg(long)]
    max_mixers: Option<usize>,
}

impl CapArgs {
    fn caps(&self) -> SearchCaps {
        let d = SearchCaps::default();
        SearchCaps {
            max_members: self.max_members.unwrap_or(d.max_members),
            max_grid: self.max_grid.unwrap_or(d.max_grid),
            max_mixers: self.max_mixers.unwrap_or(d.max_mixers),
            max_profile_bits: d.max_profile_bits,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Protocol, e.g. `k_majority:3,2` or JSON.
    #[arg(long)]
    protocol: String,
    /// Distribution, e.g. `independent:0.5`, JSON, or `@file`.
    #[arg(long)]
    dist: String,
    /// Report path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    protocol: String,
    #[arg(long)]
    dist: String,
    /// Votes per member per own outcome, as JSON or `@file`.
    #[arg(long)]
    profile: String,
    /// Comma-separated posteriors, one per member.
    #[arg(long)]
    posteriors: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[arg(long)]
    protocol: String,
    /// Distribution for the brute-force search; omit for the closed form only.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Debug, Args)]
struct GainsArgs {
    /// Effort model as JSON or `@file`.
    #[arg(long)]
    model: String,
    #[arg(long)]
    protocol: String,
    /// Keep only equilibria with deliberation-consistent beliefs.
    #[arg(long)]
    refine: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Debug, Args)]
struct DominanceArgs {
    #[arg(long)]
    model: String,
    /// Candidate dominant protocol.
    #[arg(long)]
    protocol_a: String,
    /// Protocol compared against.
    #[arg(long)]
    protocol_b: String,
    #[arg(long)]
    refine: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Debug, Args)]
struct OptimalKArgs {
    /// Binary environment as JSON or `@file`; defaults to the experiment baseline.
    #[arg(long)]
    env: Option<String>,
    /// Team size of the baseline environment.
    #[arg(long, default_value_t = EXPERIMENT_TEAM)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Panel letter `a`-`d` or parameter name such as `p_dev`.
    #[arg(long)]
    panel: String,
    /// Deviation values `lo:hi:step`; defaults to the experiment grid.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = EXPERIMENT_TEAM)]
    n: usize,
    #[arg(long)]
    env: Option<String>,
    /// CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance counts in percent of the defaults.
    #[arg(long, default_value_t = 100)]
    scale: usize,
    /// Comma-separated claim identifiers; defaults to all.
    #[arg(long, value_delimiter = ',')]
    claims: Vec<String>,
    /// Report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Cap(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Cap(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match &e {
            ConfigError::Equilibrium(inner) if inner.is_compute_cap() => {
                Failure::Cap(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<EquilibriumError> for Failure {
    fn from(e: EquilibriumError) -> Self {
        if e.is_compute_cap() {
            Failure::Cap(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<IncentiveError> for Failure {
    fn from(e: IncentiveError) -> Self {
        if e.is_compute_cap() {
            Failure::Cap(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<BinaryError> for Failure {
    fn from(e: BinaryError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match parse_cli(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(Err(e)) => e.exit(),
        Err(Ok(f)) => return report_failure(f),
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            return report_failure(Failure::Input(e.to_string()));
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => report_failure(f),
    }
}

fn report_failure(f: Failure) -> ExitCode {
    let (Failure::Input(msg) | Failure::Cap(msg)) = &f;
    eprintln!("error: {msg}");
    ExitCode::from(f.code())
}

/// Parses the command line, splicing the config file's keys in as flags that
/// precede (and are therefore overridden by) the explicit ones.
fn parse_cli(argv: Vec<OsString>) -> Result<Cli, Result<Failure, clap::Error>> {
    let Some(config) = config_path(&argv) else {
        return Cli::try_parse_from(argv).map_err(Err);
    };
    let text = fs::read_to_string(&config).map_err(|e| {
        Ok(Failure::Input(format!(
            "cannot read {}: {e}",
            config.display()
        )))
    })?;
    let Value::Object(mut map) = serde_json::from_str(&text).map_err(|e| {
        Ok(Failure::Input(format!(
            "invalid config {}: {e}",
            config.display()
        )))
    })?
    else {
        return Err(Ok(Failure::Input("config must be a JSON object".into())));
    };
    let names: Vec<String> = Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_owned())
        .collect();
    let given = argv
        .iter()
        .skip(1)
        .position(|a| names.iter().any(|n| a == n.as_str()));
    let from_config = match map.remove("command") {
        Some(Value::String(s)) => Some(s),
        None => None,
        Some(other) => {
            return Err(Ok(Failure::Input(format!(
                "config command must be a string, got {other}"
            ))))
        }
    };
    let command = match (given, from_config) {
        (Some(i), _) => argv[i + 1].clone(),
        (None, Some(c)) => OsString::from(c),
        (None, None) => {
            return Err(Ok(Failure::Input(
                "no command given on the command line or in the config".into(),
            )))
        }
    };
    let mut spliced = vec![argv[0].clone(), command];
    spliced.extend(config_flags(map).map_err(|e| Ok(Failure::Input(e)))?);
    spliced.extend(
        argv.into_iter()
            .enumerate()
            .skip(1)
            .filter(|(i, _)| Some(*i) != given.map(|g| g + 1))
            .map(|(_, a)| a),
    );
    Cli::try_parse_from(spliced).map_err(Err)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut args = argv.iter().skip(1);
    while let Some(a) = args.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return args.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn config_flags(map: Map<String, Value>) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (key, value) in map {
        if key == "config" {
            return Err("config files cannot include other config files".into());
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let text = match value {
            Value::Null | Value::Bool(false) => continue,
            Value::Bool(true) => {
                out.push(flag.into());
                continue;
            }
            Value::String(s) => s,
            Value::Number(n) => n.to_string(),
            Value::Array(items) if items.iter().all(|v| v.is_string() || v.is_number()) => items
                .iter()
                .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_owned))
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        };
        out.push(flag.into());
        out.push(text.into());
    }
    Ok(out)
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Refine(a) => refine(a),
        Command::Gains(a) => gains(a),
        Command::Dominance(a) => dominance(a),
        Command::OptimalK(a) => optimal_k(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Audit(a) => audit(a),
    }
}

/// Inputs given as `@file` or `*.json` paths, for the no-overwrite check.
fn input_paths<'a>(inputs: impl IntoIterator<Item = &'a str>) -> Vec<PathBuf> {
    inputs
        .into_iter()
        .filter_map(|s| {
            s.strip_prefix('@')
                .or_else(|| s.ends_with(".json").then_some(s))
        })
        .map(PathBuf::from)
        .collect()
}

fn check_out(out: Option<&Path>, inputs: &[PathBuf]) -> Result<(), Failure> {
    let Some(out) = out else { return Ok(()) };
    if out.is_dir() {
        return Err(Failure::Input(format!(
            "output {} is a directory",
            out.display()
        )));
    }
    let parent = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(Failure::Input(format!(
            "output directory {} does not exist",
            parent.display()
        )));
    }
    if let Ok(target) = out.canonicalize() {
        if inputs
            .iter()
            .filter_map(|p| p.canonicalize().ok())
            .any(|p| p == target)
        {
            return Err(Failure::Input(format!(
                "output {} would overwrite an input",
                out.display()
            )));
        }
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| Failure::Input(e.to_string()))?;
    Ok(())
}

/// Writes `body` to `out`, or embeds it under `key` when there is no output path,
/// then prints the summary.
fn emit(
    mut summary: Map<String, Value>,
    out: Option<&Path>,
    key: &str,
    body: String,
    embed: Value,
) -> Result<(), Failure> {
    match out {
        Some(path) => {
            write_atomic(path, body.as_bytes())?;
            summary.insert("out".into(), Value::String(path.display().to_string()));
        }
        None => {
            summary.insert(key.into(), embed);
        }
    }
    println!("{}", Value::Object(summary));
    Ok(())
}

fn summary(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), Value::String(command.into()));
    m
}

fn solve(a: SolveArgs) -> Result<u8, Failure> {
    check_out(
        a.out.as_deref(),
        &input_paths([a.protocol.as_str(), &a.dist]),
    )?;
    let protocol = parse_protocol(&read_inline_or_file(&a.protocol)?)?;
    let dist = parse_dist(&read_inline_or_file(&a.dist)?, Some(protocol.members()))?;
    let eqs = find_equilibria(&protocol, &dist, &a.caps.caps())?;
    let views: Vec<EquilibriumView> = eqs
        .iter()
        .map(|e| EquilibriumView::new(e, dist.space()))
        .collect();
    let report = json!({ "protocol": ProtocolView::new(&protocol), "equilibria": views });
    let mut s = summary("solve");
    s.insert("equilibria".into(), json!(views.len()));
    s.insert(
        "classifications".into(),
        json!(views.iter().map(|v| v.classification).collect::<Vec<_>>()),
    );
    emit(s, a.out.as_deref(), "report", to_json(&report), report)?;
    Ok(0)
}

fn verify(a: VerifyArgs) -> Result<u8, Failure> {
    check_out(
        a.out.as_deref(),
        &input_paths([a.protocol.as_str(), &a.dist, &a.profile]),
    )?;
    let protocol = parse_protocol(&read_inline_or_file(&a.protocol)?)?;
    let dist = parse_dist(&read_inline_or_file(&a.dist)?, Some(protocol.members()))?;
    let profile = parse_profile(&read_inline_or_file(&a.profile)?, dist.space())?;
    let posteriors = parse_rationals(&a.posteriors)?;
    let report = verify_equilibrium(&protocol, &dist, &profile, &posteriors)?;
    let view = VerificationView::new(&report, dist.space());
    let mut s = summary("verify");
    s.insert("is_equilibrium".into(), json!(view.is_equilibrium));
    s.insert("violations".into(), json!(view.violations.len()));
    let embed = json!(view);
    emit(s, a.out.as_deref(), "report", to_json(&view), embed)?;
    Ok(0)
}

fn refine(a: RefineArgs) -> Result<u8, Failure> {
    let inputs: Vec<&str> = std::iter::once(a.protocol.as_str())
        .chain(a.dist.as_deref())
        .collect();
    check_out(a.out.as_deref(), &input_paths(inputs))?;
    let protocol = parse_protocol(&read_inline_or_file(&a.protocol)?)?;
    let found = match &a.dist {
        Some(d) => {
            let dist = parse_dist(&read_inline_or_file(d)?, Some(protocol.members()))?;
            Some(plausible_full_disclosure_search(
                &protocol,
                &dist,
                &a.caps.caps(),
            )?)
        }
        None => None,
    };
    let view = RefinementView {
        protocol: ProtocolView::new(&protocol),
        full_disclosure_plausible: full_disclosure_is_plausible(&protocol),
        search_found: found.as_ref().map(Option::is_some),
        justification: found
            .as_ref()
            .and_then(|f| f.as_ref())
            .map(Justification::new),
    };
    let mut s = summary("refine");
    s.insert(
        "full_disclosure_plausible".into(),
        json!(view.full_disclosure_plausible),
    );
    if let Some(found) = view.search_found {
        s.insert("search_found".into(), json!(found));
    }
    let embed = json!(view);
    emit(s, a.out.as_deref(), "report", to_json(&view), embed)?;
    Ok(0)
}

fn gains(a: GainsArgs) -> Result<u8, Failure> {
    check_out(
        a.out.as_deref(),
        &input_paths([a.model.as_str(), &a.protocol]),
    )?;
    let model = parse_model(&read_inline_or_file(&a.model)?)?;
    let protocol = parse_protocol(&read_inline_or_file(&a.protocol)?)?;
    let corners = protocol_full_effort_corners(&protocol, &model, a.refine, &a.caps.caps())?;
    let views: Vec<CornerView> = corners
        .iter()
        .map(|c| CornerView::new(c, model.space()))
        .collect();
    let report = json!({
        "protocol": ProtocolView::new(&protocol),
        "refined": a.refine,
        "costs": model.costs().iter().map(to_exact_string).collect::<Vec<_>>(),
        "corners": views,
    });
    let mut s = summary("gains");
    s.insert("corners".into(), json!(views.len()));
    emit(s, a.out.as_deref(), "report", to_json(&report), report)?;
    Ok(0)
}

fn dominance(a: DominanceArgs) -> Result<u8, Failure> {
    check_out(
        a.out.as_deref(),
        &input_paths([a.model.as_str(), &a.protocol_a, &a.protocol_b]),
    )?;
    let model = parse_model(&read_inline_or_file(&a.model)?)?;
    let pa = parse_protocol(&read_inline_or_file(&a.protocol_a)?)?;
    let pb = parse_protocol(&read_inline_or_file(&a.protocol_b)?)?;
    let caps = a.caps.caps();
    let corners = |p| -> Result<Vec<_>, IncentiveError> {
        Ok(protocol_full_effort_corners(p, &model, a.refine, &caps)?
            .into_iter()
            .map(|c| c.gains)
            .collect())
    };
    let (ca, cb) = (corners(&pa)?, corners(&pb)?);
    let report = compare_corners(&ca, &cb);
    let view = DominanceView::new(&pa, &pb, a.refine, &report, &ca, &cb);
    let mut s = summary("dominance");
    s.insert("dominates".into(), json!(view.dominates));
    s.insert("strictly".into(), json!(view.strictly));
    let embed = json!(view);
    emit(s, a.out.as_deref(), "report", to_json(&view), embed)?;
    Ok(0)
}

fn load_env(env: Option<&str>, n: usize) -> Result<BinaryEnv, Failure> {
    Ok(match env {
        Some(e) => parse_env(&read_inline_or_file(e)?)?,
        None => BinaryEnv::experiment_baseline(n)?,
    })
}

fn optimal_k(a: OptimalKArgs) -> Result<u8, Failure> {
    check_out(a.out.as_deref(), &input_paths(a.env.as_deref()))?;
    let env = load_env(a.env.as_deref(), a.n)?;
    let gains = env.gains()?;
    let k_star = env.optimal_k()?;
    let report = json!({
        "n": env.members(),
        "gains": gains.iter().enumerate().map(|(i, g)| json!({
            "k": i + 1,
            "gain": to_exact_string(g),
            "gain_decimal": to_decimal_string(g, 12),
        })).collect::<Vec<_>>(),
        "k_star": k_star,
    });
    let mut s = summary("optimal-k");
    s.insert("k_star".into(), json!(k_star));
    emit(s, a.out.as_deref(), "report", to_json(&report), report)?;
    Ok(0)
}

fn sweep_cmd(a: SweepArgs) -> Result<u8, Failure> {
    check_out(a.out.as_deref(), &input_paths(a.env.as_deref()))?;
    let axis: Axis = a.panel.parse()?;
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => experiment_grid(axis),
    };
    let env = load_env(a.env.as_deref(), a.n)?;
    let rows = sweep(&env, axis, &grid)?;
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv)?;
    let csv = String::from_utf8(csv).expect("csv output is utf-8");
    let trace: Vec<usize> = rows.iter().map(|r| r.k_star).collect();
    let offending = |shape: team_disclosure::binary::Shape| -> Value {
        shape
            .violations(&trace)
            .into_iter()
            .map(|j| json!({ "axis_value": to_decimal_string(&rows[j].axis_value, 12), "k_star": rows[j].k_star }))
            .collect()
    };
    let mut s = summary("sweep");
    s.insert("panel".into(), json!(axis.panel().to_string()));
    s.insert("axis".into(), json!(axis.name()));
    s.insert("n".into(), json!(env.members()));
    s.insert("k_star".into(), json!(trace));
    s.insert(
        "stated_shape".into(),
        json!(axis.stated_shape().to_string()),
    );
    s.insert(
        "stated_shape_violations".into(),
        offending(axis.stated_shape()),
    );
    s.insert(
        "effect_shape".into(),
        json!(axis.effect_shape().to_string()),
    );
    s.insert(
        "effect_shape_violations".into(),
        offending(axis.effect_shape()),
    );
    let embed = Value::String(csv.clone());
    emit(s, a.out.as_deref(), "csv", csv, embed)?;
    Ok(0)
}

fn audit(a: AuditArgs) -> Result<u8, Failure> {
    check_out(a.out.as_deref(), &[])?;
    let claims = if a.claims.is_empty() {
        Claim::ALL.to_vec()
    } else {
        a.claims
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<Claim>()
                    .map_err(|e| Failure::Input(e.to_string()))
            })
            .collect::<Result<_, _>>()?
    };
    if a.scale == 0 {
        return Err(Failure::Input("scale must be positive".into()));
    }
    let config = AuditConfig {
        seed: a.seed,
        claims,
        scale_percent: a.scale,
        ..AuditConfig::default()
    };
    let report = run_audit(&config);
    let text = report.render();
    let mut s = summary("audit");
    s.insert("seed".into(), json!(a.seed));
    s.insert("passed".into(), json!(report.passed()));
    s.insert(
        "claims".into(),
        report
            .claims
            .iter()
            .map(|c| {
                json!({
                    "claim": c.claim.id(),
                    "passed": c.passed(),
                    "instances_passed": c.passed,
                    "failed": c.failures.len(),
                    "skipped": c.skipped,
                })
            })
            .collect(),
    );
    let embed = Value::String(text.clone());
    emit(s, a.out.as_deref(), "report", text, embed)?;
    Ok(if report.passed() { 0 } else { 1 })
}
