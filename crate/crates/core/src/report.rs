//! JSON reports and CSV traces.
//!
//! Report sections always appear in the order `meta`, `axioms`,
//! `comparison`, `conditions`, `lambda_estimate`, `continuity`, `solve`,
//! `uniqueness`; sections that were not computed are omitted. Floats are
//! written with 17 significant digits so identical runs give identical bytes.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::axioms::AxiomReport;
use crate::comparison::ComparisonReport;
use crate::config::Problem;
use crate::contraction::{ConditionVerdict, ContinuityProbe, LambdaEstimate};
use crate::solver::{Residual, SolveResult, StopReason, TraceRow, UniquenessReport};
use crate::space::SampleSet;
use crate::{Error, Result};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counts {
    pub points: usize,
    pub pairs: usize,
    pub triples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub source: String,
    pub seed: u64,
    pub counts: Counts,
    pub tolerance: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub domain: [f64; 2],
    pub strategy: Option<String>,
    pub assumptions: Vec<String>,
    pub notes: Vec<String>,
}

impl Meta {
    pub fn new(command: &str, source: &str, problem: &Problem) -> Self {
        Meta {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            source: source.to_string(),
            seed: problem.seed,
            counts: Counts {
                points: problem.counts.points,
                pairs: problem.counts.pairs,
                triples: problem.counts.triples,
            },
            tolerance: problem.tolerance,
            epsilon: problem.solver.epsilon,
            max_iterations: problem.solver.max_iterations,
            domain: [problem.space.domain.lo, problem.space.domain.hi],
            strategy: None,
            assumptions: vec![
                format!(
                    "checks cover the box {} only; passing results mean no counterexample among the samples",
                    problem.space.domain
                ),
                "the space is assumed complete".to_string(),
            ],
            notes: Vec::new(),
        }
    }

    pub fn sampled(mut self, samples: &SampleSet) -> Self {
        self.strategy = Some(samples.strategy.clone());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaSection {
    pub estimates: Vec<LambdaEstimate>,
    pub skipped: Vec<String>,
}

/// A solve run without its trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub x0: f64,
    pub mode: String,
    pub iterations: usize,
    pub stop: StopReason,
    pub fixed_point: f64,
    pub residual: Residual,
    pub accepted: bool,
    pub perturbed_residual_zero: bool,
    pub d0: f64,
    pub final_bound: Option<f64>,
    pub bound_truncated: bool,
}

impl From<&SolveResult> for SolveSummary {
    fn from(r: &SolveResult) -> Self {
        SolveSummary {
            x0: r.x0,
            mode: r.mode.clone(),
            iterations: r.trace.len().saturating_sub(1),
            stop: r.stop,
            fixed_point: r.fixed_point,
            residual: r.residual,
            accepted: r.accepted,
            perturbed_residual_zero: r.perturbed_residual_zero,
            d0: r.d0,
            final_bound: r.trace.last().and_then(|row| row.bound),
            bound_truncated: r.bound_truncated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessSummary {
    pub starts: Vec<f64>,
    pub consistent: bool,
    pub distinct_limits: Vec<f64>,
    pub agreement_tolerance: f64,
}

impl From<&UniquenessReport> for UniquenessSummary {
    fn from(u: &UniquenessReport) -> Self {
        UniquenessSummary {
            starts: u.runs.iter().map(|r| r.x0).collect(),
            consistent: u.consistent,
            distinct_limits: u.distinct_limits.clone(),
            agreement_tolerance: u.agreement_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub meta: Meta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axioms: Option<AxiomReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<Vec<ConditionVerdict>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_estimate: Option<LambdaSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity: Option<Vec<ContinuityProbe>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<Vec<SolveSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessSummary>,
}

impl Report {
    pub fn new(meta: Meta) -> Self {
        Report {
            meta,
            axioms: None,
            comparison: None,
            conditions: None,
            lambda_estimate: None,
            continuity: None,
            solve: None,
            uniqueness: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json()?.as_bytes())
    }
}

/// Writes a float with 17 significant digits, e.g. `3.3333333333333331e-1`.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of negative zero out of reports
        return format!("{:.16e}", 0.0);
    }
    format!("{v:.16e}")
}

/// Pretty JSON whose floats use [`format_f64`].
struct FixedDigits(PrettyFormatter<'static>);

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value the way reports are written.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// CSV with columns `n, x_n, D_step, d_step, bound`; `bound` is empty when
/// the mode has no a-priori bound.
pub fn trace_csv(trace: &[TraceRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "x_n", "D_step", "d_step", "bound"])?;
    for row in trace {
        w.write_record([
            row.n.to_string(),
            format_f64(row.x),
            format_f64(row.perturbed_step),
            format_f64(row.exact_step),
            opt(row.bound),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<trace buffer>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv of ASCII fields"))
}

pub fn write_trace(trace: &[TraceRow], path: &Path) -> Result<()> {
    write_file(path, trace_csv(trace)?.as_bytes())
}
