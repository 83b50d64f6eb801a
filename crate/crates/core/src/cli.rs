//! Command-line front end.
//!
//! Exit codes: 0 when every requested check passes or converges, 1 when a
//! counterexample or non-convergence is found (the report is still written),
//! 2 for configuration, usage and I/O errors.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::catalog;
use crate::comparison::Phi1Verdict;
use crate::config::{RunConfig, DEFAULT_SEED};
use crate::contraction::ConditionKind;
use crate::pipeline;
use crate::report::{self, LambdaSection, Meta, Report, SolveSummary, UniquenessSummary};
use crate::solver::TraceRow;
use crate::space::SampleSet;
use crate::{Error, Result};

/// Environment variable holding the default sampling seed.
pub const SEED_ENV: &str = "PERTFIX_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDING: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pertfix",
    version,
    about = "Fixed-point certification in perturbed metric spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the perturbed-metric axioms and, if phi is given, the comparison function
    Audit(Common),
    /// Check contraction conditions on sampled pairs or a single pair
    Verify {
        #[command(flatten)]
        common: Common,
        /// phi, kannan, banach, kannan-exact, banach-exact or a full condition id; repeatable
        #[arg(long = "condition")]
        conditions: Vec<String>,
        /// Check only this pair
        #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
        pair: Option<Vec<f64>>,
    },
    /// Run Picard iteration from every start with a-priori bounds
    Solve(Common),
    /// Run every stage
    Classify(Common),
    /// Estimate the smallest admissible contraction constant
    EstimateLambda {
        #[command(flatten)]
        common: Common,
        /// Condition kind to estimate; repeatable
        #[arg(long = "kind")]
        kinds: Vec<String>,
        /// Scan an N x N grid over the domain instead of the sampled pairs
        #[arg(long, value_name = "N")]
        grid: Option<usize>,
    },
    /// Inspect the built-in instances
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Debug, Subcommand)]
enum CatalogAction {
    /// Print every id with a one-line description
    List,
    /// Print an instance as a JSON config
    Show { id: String },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "builtin",
        required_unless_present = "builtin"
    )]
    config: Option<PathBuf>,
    /// Built-in instance id (see `catalog list`)
    #[arg(long, value_name = "ID")]
    builtin: Option<String>,
    /// Sampling seed [default: config seed, then $PERTFIX_SEED, then 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of standard output
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Write the first start's iteration trace as CSV
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Treat inconclusive summability verdicts as failures
    #[arg(long)]
    strict: bool,
    /// Absolute tolerance for all inequality checks
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,
    /// Override the contraction constant
    #[arg(long)]
    lambda: Option<f64>,
    /// Override the comparison function, e.g. "t/3"
    #[arg(long)]
    phi: Option<String>,
}

struct Loaded {
    config: RunConfig,
    source: String,
    notes: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<Loaded> {
        let (mut config, source, notes) = match (&self.config, &self.builtin) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                (
                    RunConfig::from_json(&text)?,
                    format!("config:{}", path.display()),
                    Vec::new(),
                )
            }
            (None, Some(id)) => {
                let e = catalog::builtin(id)?;
                (e.config, format!("builtin:{id}"), e.notes)
            }
            (None, None) => {
                return Err(Error::Config(
                    "one of --config or --builtin is required".into(),
                ))
            }
        };
        if let Some(seed) = self.seed {
            config.sampling.seed = Some(seed);
        }
        if let Some(tol) = self.tol {
            config.tolerance = tol;
        }
        if let Some(l) = self.lambda {
            config.lambda = Some(l);
        }
        if let Some(phi) = &self.phi {
            config.phi = Some(phi.clone());
        }
        Ok(Loaded {
            config,
            source,
            notes,
        })
    }
}

fn default_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn parse_kind(name: &str) -> Result<ConditionKind> {
    let kind = match name {
        "phi" => Some(ConditionKind::PhiPerturbed),
        "kannan" => Some(ConditionKind::KannanPerturbed),
        "banach" => Some(ConditionKind::BanachPerturbed),
        "kannan-exact" => Some(ConditionKind::KannanExact),
        "banach-exact" => Some(ConditionKind::BanachExact),
        other => ConditionKind::from_id(other),
    };
    kind.ok_or_else(|| {
        let ids: Vec<&str> = ConditionKind::ALL.iter().map(|k| k.id()).collect();
        Error::Config(format!(
            "unknown condition `{name}` (expected phi, kannan, banach, kannan-exact, banach-exact, {})",
            ids.join(", ")
        ))
    })
}

/// What a command produced, before anything is written.
struct Outcome {
    report: Report,
    trace: Option<Vec<TraceRow>>,
    findings: Vec<String>,
    warnings: Vec<String>,
}

impl Outcome {
    fn new(report: Report) -> Self {
        Outcome {
            report,
            trace: None,
            findings: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", line.trim_start_matches("error: "));
            return EXIT_ERROR;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            EXIT_ERROR
        }
    }
}

fn one_line(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        src = s.source();
    }
    msg.replace('\n', " ")
}

fn dispatch(command: Command) -> Result<i32> {
    let (common, outcome) = match command {
        Command::Catalog { action } => return catalog_command(action),
        Command::Audit(c) => {
            let o = audit(&c)?;
            (c, o)
        }
        Command::Verify {
            common,
            conditions,
            pair,
        } => {
            let o = verify(&common, &conditions, pair.as_deref())?;
            (common, o)
        }
        Command::Solve(c) => {
            let o = solve(&c)?;
            (c, o)
        }
        Command::Classify(c) => {
            let o = classify(&c)?;
            (c, o)
        }
        Command::EstimateLambda {
            common,
            kinds,
            grid,
        } => {
            let o = estimate(&common, &kinds, grid)?;
            (common, o)
        }
    };
    emit(&common, outcome)
}

fn catalog_command(action: CatalogAction) -> Result<i32> {
    match action {
        CatalogAction::List => {
            for e in catalog::all() {
                println!("{:<24} {}", e.id, e.description);
            }
        }
        CatalogAction::Show { id } => {
            let e = catalog::builtin(&id)?;
            print!("{}", report::to_json(&e.config)?);
        }
    }
    Ok(EXIT_OK)
}

fn emit(common: &Common, outcome: Outcome) -> Result<i32> {
    let Outcome {
        report,
        trace,
        findings,
        warnings,
    } = outcome;
    let loaded = common.load()?;
    let report_path = common.report.clone().or(loaded.config.output.report);
    let trace_path = common.trace.clone().or(loaded.config.output.trace);

    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if let (Some(path), Some(rows)) = (&trace_path, &trace) {
        report::write_trace(rows, path)?;
    } else if trace_path.is_some() {
        eprintln!("warning: this command produces no trace; --trace ignored");
    }
    match &report_path {
        Some(path) => {
            report.write(path)?;
            for f in &findings {
                println!("FAIL {f}");
            }
            if findings.is_empty() {
                println!("ok: all requested checks passed");
            }
        }
        None => print!("{}", report.to_json()?),
    }
    Ok(if findings.is_empty() {
        EXIT_OK
    } else {
        EXIT_FINDING
    })
}

fn prepare(common: &Common, command: &str) -> Result<(crate::config::Problem, Meta)> {
    let loaded = common.load()?;
    let problem = loaded.config.build(default_seed()?)?;
    let mut meta = Meta::new(command, &loaded.source, &problem);
    meta.notes = loaded.notes;
    Ok((problem, meta))
}

fn comparison_findings(
    report: &crate::comparison::ComparisonReport,
    strict: bool,
    out: &mut Outcome,
) {
    if let Phi1Verdict::Counterexample { t1, t2, .. } = report.phi1 {
        out.findings
            .push(format!("phi is not nondecreasing: phi({t1}) > phi({t2})"));
    }
    for f in &report.phi2 {
        let t = f.t;
        if f.verdict.is_diverging() {
            out.findings
                .push(format!("sum of phi iterates diverges at t = {t}"));
        } else if !f.verdict.is_converged() {
            let msg = format!("summability of phi iterates inconclusive at t = {t}");
            if strict {
                out.findings.push(msg);
            } else {
                out.warnings.push(msg);
            }
        }
    }
    if !report.rus.all_pass() {
        out.findings
            .push("phi fails a necessary property of comparison functions".into());
    }
}

fn audit(common: &Common) -> Result<Outcome> {
    let (problem, meta) = prepare(common, "audit")?;
    let samples = pipeline::samples(&problem);
    let mut out = Outcome::new(Report::new(meta.sampled(&samples)));
    let axioms = pipeline::axioms(&problem, &samples);
    for v in axioms
        .verdicts
        .iter()
        .filter(|v| v.status == crate::axioms::AxiomStatus::Fail)
    {
        out.findings.push(format!(
            "axiom {} violated on {} samples",
            v.axiom, v.violations
        ));
    }
    out.report.axioms = Some(axioms);
    if let Some(c) = pipeline::comparison(&problem)? {
        comparison_findings(&c, common.strict, &mut out);
        out.report.comparison = Some(c);
    }
    Ok(out)
}

fn verify(common: &Common, names: &[String], pair: Option<&[f64]>) -> Result<Outcome> {
    let (problem, meta) = prepare(common, "verify")?;
    let samples = match pair {
        Some(&[x, y]) => {
            let dom = problem.space.domain;
            if !dom.contains(x) || !dom.contains(y) {
                return Err(Error::Config(format!(
                    "pair ({x}, {y}) lies outside the domain {dom}"
                )));
            }
            SampleSet::from_pairs(vec![(x, y)])
        }
        Some(_) => return Err(Error::Config("--pair takes two values".into())),
        None => pipeline::samples(&problem),
    };
    let kinds: Vec<ConditionKind> = if names.is_empty() {
        let mut k = Vec::new();
        if problem.phi.is_some() {
            k.push(ConditionKind::PhiPerturbed);
        }
        if let Some(l) = problem.lambda {
            if l < 0.5 {
                k.push(ConditionKind::KannanPerturbed);
            }
            if l > 0.0 {
                k.push(ConditionKind::BanachPerturbed);
            }
        }
        if k.is_empty() {
            return Err(Error::Config(
                "nothing to verify: give `phi` or `lambda`".into(),
            ));
        }
        k
    } else {
        names.iter().map(|n| parse_kind(n)).collect::<Result<_>>()?
    };

    let mut out = Outcome::new(Report::new(meta.sampled(&samples)));
    let mut verdicts = Vec::new();
    for kind in kinds {
        let v = pipeline::condition(&problem, kind, &samples.pairs)?;
        if let Some(w) = &v.witness {
            out.findings.push(format!(
                "{kind}: counterexample at ({}, {}): lhs {} > rhs {}",
                w.x, w.y, w.lhs, w.rhs
            ));
        }
        verdicts.push(v);
    }
    out.report.conditions = Some(verdicts);
    Ok(out)
}

fn solve_into(problem: &crate::config::Problem, out: &mut Outcome) -> Result<()> {
    let (runs, uniqueness) = pipeline::solve(problem)?;
    for r in &runs {
        if !r.accepted {
            out.findings.push(format!(
                "start {}: no fixed point within {} iterations (d residual {})",
                r.x0, problem.solver.max_iterations, r.residual.exact
            ));
        } else if !r.perturbed_residual_zero {
            out.warnings.push(format!(
                "start {}: d(x*, Tx*) vanishes but D(x*, Tx*) = {}",
                r.x0, r.residual.perturbed
            ));
        }
        if r.bound_truncated {
            out.warnings.push(format!(
                "start {}: phi tail bound truncated at the horizon",
                r.x0
            ));
        }
    }
    if let Some(u) = &uniqueness {
        if !u.consistent && runs.iter().all(|r| r.accepted) {
            out.findings.push(format!(
                "starts reach different limits: {:?}",
                u.distinct_limits
            ));
        }
    }
    out.trace = runs.first().map(|r| r.trace.clone());
    out.report.solve = Some(runs.iter().map(SolveSummary::from).collect());
    out.report.uniqueness = uniqueness.as_ref().map(UniquenessSummary::from);
    Ok(())
}

fn solve(common: &Common) -> Result<Outcome> {
    let (problem, meta) = prepare(common, "solve")?;
    let mut out = Outcome::new(Report::new(meta));
    solve_into(&problem, &mut out)?;
    Ok(out)
}

fn classify(common: &Common) -> Result<Outcome> {
    let (problem, meta) = prepare(common, "classify")?;
    let samples = pipeline::samples(&problem);
    let mut out = Outcome::new(Report::new(meta.sampled(&samples)));

    let axioms = pipeline::axioms(&problem, &samples);
    if axioms.any_fail() {
        out.findings.push("perturbed-metric axioms violated".into());
    }
    out.report.axioms = Some(axioms);

    if let Some(c) = pipeline::comparison(&problem)? {
        comparison_findings(&c, common.strict, &mut out);
        out.report.comparison = Some(c);
    }

    let classification = pipeline::conditions(&problem, &samples)?;
    if classification.holds.is_empty() {
        out.findings
            .push("no perturbed contraction condition holds on the samples".into());
    }
    // individual failures only classify; the run fails when nothing holds
    for v in &classification.conditions {
        if let Some(w) = &v.witness {
            out.warnings.push(format!(
                "{}: counterexample at ({}, {}): lhs {} > rhs {}",
                v.condition, w.x, w.y, w.lhs, w.rhs
            ));
        }
    }

    let (estimates, skipped) =
        pipeline::lambda_estimates(&problem, &samples, &pipeline::ESTIMATE_KINDS)?;
    out.report.lambda_estimate = Some(LambdaSection { estimates, skipped });
    out.report.conditions = Some(classification.conditions);
    out.report.continuity = Some(classification.continuity);

    solve_into(&problem, &mut out)?;
    Ok(out)
}

fn estimate(common: &Common, names: &[String], grid: Option<usize>) -> Result<Outcome> {
    let (problem, meta) = prepare(common, "estimate-lambda")?;
    let samples = match grid {
        Some(n) if n >= 2 => SampleSet::grid_pairs(&problem.space.domain, n),
        Some(n) => {
            return Err(Error::Config(format!(
                "--grid needs at least 2 points, got {n}"
            )))
        }
        None => pipeline::samples(&problem),
    };
    let kinds: Vec<ConditionKind> = if names.is_empty() {
        pipeline::ESTIMATE_KINDS.to_vec()
    } else {
        names.iter().map(|n| parse_kind(n)).collect::<Result<_>>()?
    };
    if kinds.contains(&ConditionKind::PhiPerturbed) {
        return Err(Error::Config(
            "phi-perturbed has no constant to estimate".into(),
        ));
    }
    let mut out = Outcome::new(Report::new(meta.sampled(&samples)));
    let (estimates, skipped) = pipeline::lambda_estimates(&problem, &samples, &kinds)?;
    if !estimates.iter().any(|e| e.admissible) {
        out.findings
            .push("no requested condition admits a constant in its range".into());
    }
    for s in &skipped {
        out.warnings.push(format!("skipped {s}"));
    }
    out.report.lambda_estimate = Some(LambdaSection { estimates, skipped });
    Ok(out)
}
