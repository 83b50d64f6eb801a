//! Numerical audit of comparison functions φ : [0, ∞) → [0, ∞).
//!
//! A comparison function must be nondecreasing and have a summable iterate
//! series `Σ φⁿ(t)` for every `t ≥ 0`. Both properties quantify over the
//! whole half-line, so the checks here only ever report what a finite grid
//! shows. Summability in particular gets a three-valued heuristic verdict.

use rayon::prelude::*;
use serde::Serialize;

use crate::expr::{EvalError, Expr};
use crate::{Error, Result};

pub const DEFAULT_T_GRID: [f64; 6] = [1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_MAX_TERMS: usize = 200;
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

/// Partial sums beyond this are treated as divergence.
const OVERFLOW_GUARD: f64 = 1e150;
/// Slack on consecutive values in the monotonicity check.
const MONOTONE_SLACK: f64 = 1e-12;

pub fn default_eps_grid() -> Vec<f64> {
    (1..=8).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone)]
pub struct ComparisonCandidate {
    pub phi: Expr,
    pub label: String,
}

impl ComparisonCandidate {
    pub fn new(src: &str, label: &str) -> Result<Self> {
        let phi: Expr = src.parse().map_err(|source| Error::Expr {
            what: "phi".to_string(),
            source,
        })?;
        let stray = phi.stray_variables(&["t"]);
        if !stray.is_empty() {
            return Err(Error::Config(format!(
                "phi uses unknown variable(s) {} (allowed: t)",
                stray.join(", ")
            )));
        }
        Ok(ComparisonCandidate {
            phi,
            label: label.to_string(),
        })
    }

    /// `φ(t) = λ·t`.
    pub fn linear(lambda: f64) -> Self {
        ComparisonCandidate {
            phi: Expr::binary(
                crate::expr::BinOp::Mul,
                Expr::constant(lambda),
                Expr::var("t"),
            ),
            label: format!("{lambda}*t"),
        }
    }

    pub fn value(&self, t: f64) -> Result<f64, EvalError> {
        self.phi.eval(&[("t", t)])
    }

    /// `φⁿ(t)`, the n-fold composition.
    pub fn iterate(&self, t: f64, n: usize) -> Result<f64, EvalError> {
        (0..n).try_fold(t, |s, _| self.value(s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Phi1Verdict {
    Pass {
        checked: usize,
    },
    Counterexample {
        t1: f64,
        t2: f64,
        phi_t1: f64,
        phi_t2: f64,
    },
}

impl Phi1Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Phi1Verdict::Pass { .. })
    }
}

/// Nondecreasing check over consecutive grid points.
pub fn check_phi1(candidate: &ComparisonCandidate, grid: &[f64]) -> Result<Phi1Verdict> {
    if grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Parameter("phi1 grid must be nonnegative".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Parameter(
            "phi1 grid must be sorted ascending".into(),
        ));
    }
    let values = grid
        .iter()
        .map(|&t| candidate.value(t))
        .collect::<Result<Vec<_>, _>>()?;
    for i in 0..values.len().saturating_sub(1) {
        if values[i] > values[i + 1] + MONOTONE_SLACK {
            return Ok(Phi1Verdict::Counterexample {
                t1: grid[i],
                t2: grid[i + 1],
                phi_t1: values[i],
                phi_t2: values[i + 1],
            });
        }
    }
    Ok(Phi1Verdict::Pass {
        checked: grid.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Phi2Verdict {
    Converged {
        partial_sum: f64,
        terms: usize,
        tail_ratio: f64,
    },
    Diverging {
        partial_sum: f64,
        terms: usize,
        evidence: String,
    },
    Inconclusive {
        partial_sum: f64,
        terms: usize,
        last_term: f64,
        tail_ratio: f64,
    },
}

impl Phi2Verdict {
    pub fn is_converged(&self) -> bool {
        matches!(self, Phi2Verdict::Converged { .. })
    }

    pub fn is_diverging(&self) -> bool {
        matches!(self, Phi2Verdict::Diverging { .. })
    }

    pub fn partial_sum(&self) -> f64 {
        match self {
            Phi2Verdict::Converged { partial_sum, .. }
            | Phi2Verdict::Diverging { partial_sum, .. }
            | Phi2Verdict::Inconclusive { partial_sum, .. } => *partial_sum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phi2Finding {
    pub t: f64,
    pub verdict: Phi2Verdict,
}

/// Heuristic summability check of `Σ_{n≥1} φⁿ(t)` at each grid point.
///
/// Converged: the last ⌈N/10⌉ terms are all below
/// `tail_tolerance · max(1, S)` and every consecutive ratio in that window is
/// below 1. Diverging: the partial sum blows past the overflow guard, or the
/// terms do not decrease over the run (last term not below the first, or
/// flat across the tail window). Anything else is inconclusive.
pub fn check_phi2(
    candidate: &ComparisonCandidate,
    t_grid: &[f64],
    max_terms: usize,
    tail_tolerance: f64,
) -> Result<Vec<Phi2Finding>> {
    if max_terms < 10 {
        return Err(Error::Parameter(format!(
            "phi2 needs at least 10 terms, got {max_terms}"
        )));
    }
    t_grid
        .par_iter()
        .map(|&t| {
            let verdict = phi2_at(candidate, t, max_terms, tail_tolerance)?;
            Ok(Phi2Finding { t, verdict })
        })
        .collect()
}

fn phi2_at(
    candidate: &ComparisonCandidate,
    t: f64,
    max_terms: usize,
    tail_tolerance: f64,
) -> Result<Phi2Verdict> {
    let mut terms = Vec::with_capacity(max_terms);
    let mut s = t;
    let mut sum = 0.0;
    for _ in 0..max_terms {
        s = candidate.value(s)?;
        sum += s;
        terms.push(s);
        if !(sum <= OVERFLOW_GUARD) {
            return Ok(Phi2Verdict::Diverging {
                partial_sum: sum,
                terms: terms.len(),
                evidence: format!("partial sum exceeded {OVERFLOW_GUARD:e}"),
            });
        }
    }

    let window = max_terms.div_ceil(10);
    let tail = &terms[max_terms - window..];
    let tail_ratio = tail_ratio(&terms[max_terms - window - 1..]);
    let threshold = tail_tolerance * sum.max(1.0);
    let first = terms[0];
    let last = terms[max_terms - 1];

    if tail.iter().all(|&v| v < threshold) && tail_ratio < 1.0 {
        return Ok(Phi2Verdict::Converged {
            partial_sum: sum,
            terms: max_terms,
            tail_ratio,
        });
    }
    if last > 0.0 && last >= first {
        return Ok(Phi2Verdict::Diverging {
            partial_sum: sum,
            terms: max_terms,
            evidence: format!("terms did not decrease: first {first:e}, last {last:e}"),
        });
    }
    if last > 0.0 && tail_ratio >= 1.0 {
        return Ok(Phi2Verdict::Diverging {
            partial_sum: sum,
            terms: max_terms,
            evidence: format!("terms stalled at {last:e} over the last {window} steps"),
        });
    }
    Ok(Phi2Verdict::Inconclusive {
        partial_sum: sum,
        terms: max_terms,
        last_term: last,
        tail_ratio,
    })
}

// Largest ratio of consecutive terms; a zero predecessor counts as ratio 0
// when the successor is also zero.
fn tail_ratio(window: &[f64]) -> f64 {
    window
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 {
                w[1] / w[0]
            } else if w[1] > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateDecay {
    pub t: f64,
    pub pass: bool,
    /// First n with φⁿ(t) below the threshold.
    pub reached_at: Option<usize>,
    pub last_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BelowIdentity {
    pub t: f64,
    pub phi_t: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityAtZero {
    pub pass: bool,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RusReport {
    pub iterates_vanish: Vec<IterateDecay>,
    pub below_identity: Vec<BelowIdentity>,
    pub continuous_at_zero: ContinuityAtZero,
}

impl RusReport {
    pub fn iterates_vanish_pass(&self) -> bool {
        self.iterates_vanish.iter().all(|r| r.pass)
    }

    pub fn below_identity_pass(&self) -> bool {
        self.below_identity.iter().all(|r| r.pass)
    }

    pub fn all_pass(&self) -> bool {
        self.iterates_vanish_pass() && self.below_identity_pass() && self.continuous_at_zero.pass
    }
}

const VANISH_THRESHOLD: f64 = 1e-8;
const ZERO_LIMIT_THRESHOLD: f64 = 1e-6;

/// Checks the three consequences of membership in the comparison family:
/// `φⁿ(t) → 0`, `φ(t) < t` for `t > 0`, and continuity of φ at 0.
pub fn check_rus_properties(
    candidate: &ComparisonCandidate,
    t_grid: &[f64],
    n_max: usize,
    eps_grid: &[f64],
) -> Result<RusReport> {
    if n_max < 50 {
        return Err(Error::Parameter(format!(
            "n_max must be at least 50, got {n_max}"
        )));
    }
    if t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Parameter(
            "Rus t grid must be strictly positive".into(),
        ));
    }

    let mut iterates_vanish = Vec::with_capacity(t_grid.len());
    let mut below_identity = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut s = t;
        let mut reached_at = None;
        for n in 1..=n_max {
            s = candidate.value(s)?;
            if s < VANISH_THRESHOLD {
                reached_at = Some(n);
                break;
            }
            if s > OVERFLOW_GUARD {
                break;
            }
        }
        iterates_vanish.push(IterateDecay {
            t,
            pass: reached_at.is_some(),
            reached_at,
            last_value: s,
        });

        let phi_t = candidate.value(t)?;
        below_identity.push(BelowIdentity {
            t,
            phi_t,
            pass: phi_t < t,
        });
    }

    let mut eps = eps_grid.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let values = eps
        .iter()
        .map(|&e| candidate.value(e))
        .collect::<Result<Vec<_>, _>>()?;
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK);
    let small = values
        .last()
        .is_some_and(|v| v.abs() < ZERO_LIMIT_THRESHOLD);

    Ok(RusReport {
        iterates_vanish,
        below_identity,
        continuous_at_zero: ContinuityAtZero {
            pass: monotone && small,
            eps,
            values,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub candidate: String,
    pub phi1: Phi1Verdict,
    pub phi2: Vec<Phi2Finding>,
    pub rus: RusReport,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn phi2_any_diverging(&self) -> bool {
        self.phi2.iter().any(|f| f.verdict.is_diverging())
    }

    pub fn phi2_all_converged(&self) -> bool {
        self.phi2.iter().all(|f| f.verdict.is_converged())
    }
}

/// Full audit with the default grids and tolerances.
pub fn audit(candidate: &ComparisonCandidate) -> Result<ComparisonReport> {
    let mut phi1_grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.1).collect();
    phi1_grid.extend(DEFAULT_T_GRID);
    phi1_grid.sort_by(f64::total_cmp);
    phi1_grid.dedup();

    Ok(ComparisonReport {
        candidate: candidate.phi.to_string(),
        phi1: check_phi1(candidate, &phi1_grid)?,
        phi2: check_phi2(candidate, &DEFAULT_T_GRID, DEFAULT_MAX_TERMS, DEFAULT_TAIL_TOLERANCE)?,
        rus: check_rus_properties(candidate, &DEFAULT_T_GRID, DEFAULT_MAX_TERMS, &default_eps_grid())?,
        notes: vec![
            "summability verdicts are heuristic: a finite number of terms cannot certify convergence".into(),
            format!(
                "checked on the finite grid t in {:?}; the requirement for every t >= 0 is not certified",
                DEFAULT_T_GRID
            ),
        ],
    })
}
