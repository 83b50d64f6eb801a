//! Picard iteration `x_{n+1} = T x_n` with a-priori error envelopes.
//!
//! Along the iteration `D₀ = D(x₀, x₁)` and, depending on the hypothesis,
//!
//! * Kannan (`λ ∈ [0, ½)`, `γ = λ/(1−λ)`): `D(x_n, x_{n+1}) ≤ γⁿ D₀` and
//!   `d(x_n, x*) ≤ γⁿ/(1−γ) · D₀`,
//! * φ-contraction: `D(x_n, x_{n+1}) ≤ φⁿ(D₀)` and
//!   `d(x_n, x*) ≤ Σ_{k≥n} φᵏ(D₀)`,
//! * Banach (`λ ∈ (0, 1)`): the φ case with `φ(t) = λt`, i.e.
//!   `d(x_n, x*) ≤ λⁿ/(1−λ) · D₀`.
//!
//! The distance-to-limit bounds come from `d(x_n, x_{n+p})` bounds by letting
//! `p → ∞`, which is valid because `d` is continuous in its arguments.

use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::ComparisonCandidate;
use crate::expr::EvalError;
use crate::space::{PerturbedSpace, SelfMap};
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
pub const DEFAULT_HORIZON: usize = 200;
/// Consecutive exactly-zero steps that end the iteration.
pub const ZERO_STEPS_TO_STOP: usize = 3;
/// `D(x*, Tx*)` at or below this counts as zero.
pub const RESIDUAL_ZERO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum SolveMode {
    Phi(ComparisonCandidate),
    Kannan(f64),
    Banach(f64),
    ResidualOnly,
}

impl SolveMode {
    pub fn name(&self) -> &'static str {
        match self {
            SolveMode::Phi(_) => "phi",
            SolveMode::Kannan(_) => "kannan",
            SolveMode::Banach(_) => "banach",
            SolveMode::ResidualOnly => "residual-only",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SolveMode::Kannan(l) if !(0.0..0.5).contains(&l) => Err(Error::Parameter(format!(
                "kannan mode needs 0 <= lambda < 1/2, got {l}"
            ))),
            SolveMode::Banach(l) if !(l > 0.0 && l < 1.0) => Err(Error::Parameter(format!(
                "banach mode needs 0 < lambda < 1, got {l}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverParams {
    pub x0: f64,
    pub max_iterations: usize,
    pub epsilon: f64,
    pub mode: SolveMode,
    pub horizon: usize,
}

impl SolverParams {
    pub fn new(x0: f64, mode: SolveMode) -> Self {
        SolverParams {
            x0,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            epsilon: DEFAULT_EPSILON,
            mode,
            horizon: DEFAULT_HORIZON,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Parameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Parameter("max_iterations must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Parameter("bound horizon must be at least 1".into()));
        }
        self.mode.validate()
    }
}

/// One Picard step: `x_n`, the distances to `x_{n+1}`, the step envelope
/// (`γⁿD₀` or `φⁿ(D₀)`) and the a-priori bound on `d(x_n, x*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub x: f64,
    pub perturbed_step: f64,
    pub exact_step: f64,
    pub envelope: Option<f64>,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    BoundMet,
    ResidualZero,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub perturbed: f64,
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub x0: f64,
    pub mode: String,
    pub trace: Vec<TraceRow>,
    pub stop: StopReason,
    pub fixed_point: f64,
    pub residual: Residual,
    /// `d(x*, Tx*) ≤ ε`.
    pub accepted: bool,
    /// `D(x*, Tx*)` vanishes within tolerance as well.
    pub perturbed_residual_zero: bool,
    pub d0: f64,
    /// Set when a φ-mode bound could not be certified by the ratio test.
    pub bound_truncated: bool,
}

/// `γⁿ/(1−γ)·D₀` with `γ = λ/(1−λ)`: the bound on `d(x_n, x*)` for a
/// perturbed Kannan map.
pub fn apriori_bound_kannan(lambda: f64, d0: f64, n: usize) -> Result<f64> {
    if !(0.0..0.5).contains(&lambda) {
        return Err(Error::Parameter(format!(
            "Kannan constant must satisfy 0 <= lambda < 1/2, got {lambda}"
        )));
    }
    let gamma = lambda / (1.0 - lambda);
    Ok(gamma.powi(exponent(n)) / (1.0 - gamma) * d0)
}

fn exponent(n: usize) -> i32 {
    i32::try_from(n).unwrap_or(i32::MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiBound {
    pub bound: f64,
    pub truncated: bool,
}

/// `Σ_{k=n}^{n+K−1} φᵏ(D₀)` plus a geometric remainder estimate.
pub fn apriori_bound_phi(
    phi: &ComparisonCandidate,
    d0: f64,
    n: usize,
    horizon: usize,
) -> Result<PhiBound> {
    if horizon == 0 {
        return Err(Error::Parameter("bound horizon must be at least 1".into()));
    }
    let start = phi.iterate(d0, n)?;
    Ok(phi_tail(phi, start, horizon)?)
}

// Sum of `horizon` terms starting at `first`, with a remainder of
// `last·ρ/(1−ρ)` when the final ratio `ρ` is below one.
fn phi_tail(phi: &ComparisonCandidate, first: f64, horizon: usize) -> Result<PhiBound, EvalError> {
    let mut sum = first;
    let mut prev = first;
    let mut last = first;
    for _ in 1..horizon {
        prev = last;
        last = phi.value(last)?;
        sum += last;
    }
    if last == 0.0 {
        return Ok(PhiBound {
            bound: sum,
            truncated: false,
        });
    }
    if horizon < 2 || prev <= 0.0 {
        return Ok(PhiBound {
            bound: sum,
            truncated: true,
        });
    }
    let rho = last / prev;
    if rho < 1.0 {
        Ok(PhiBound {
            bound: sum + last * rho / (1.0 - rho),
            truncated: false,
        })
    } else {
        Ok(PhiBound {
            bound: sum,
            truncated: true,
        })
    }
}

/// `(D(x, Tx), d(x, Tx))`.
pub fn residual(space: &PerturbedSpace, map: &SelfMap, x: f64) -> Result<Residual> {
    let tx = map.apply(x)?;
    Ok(Residual {
        perturbed: space.perturbed(x, tx)?,
        exact: space.exact_distance(x, tx)?,
    })
}

struct Envelope<'a> {
    mode: &'a SolveMode,
    d0: f64,
    horizon: usize,
    /// `φⁿ(D₀)` in φ mode.
    phi_iterate: f64,
    truncated: bool,
}

impl Envelope<'_> {
    /// Step envelope and distance bound at index `n`; advances φ state.
    fn at(&mut self, n: usize) -> Result<(Option<f64>, Option<f64>)> {
        let k = exponent(n);
        Ok(match self.mode {
            SolveMode::ResidualOnly => (None, None),
            SolveMode::Kannan(l) => {
                let gamma = l / (1.0 - l);
                (
                    Some(gamma.powi(k) * self.d0),
                    Some(apriori_bound_kannan(*l, self.d0, n)?),
                )
            }
            SolveMode::Banach(l) => (
                Some(l.powi(k) * self.d0),
                Some(l.powi(k) / (1.0 - l) * self.d0),
            ),
            SolveMode::Phi(phi) => {
                if n > 0 {
                    self.phi_iterate = phi.value(self.phi_iterate)?;
                }
                let tail = phi_tail(phi, self.phi_iterate, self.horizon)?;
                self.truncated |= tail.truncated;
                (Some(self.phi_iterate), Some(tail.bound))
            }
        })
    }
}

/// Runs Picard iteration from `params.x0`.
///
/// Stops when the a-priori bound drops below `ε`, when `d(x_n, x_{n+1})` is
/// exactly zero for three consecutive steps, or after `max_iterations`
/// steps. The candidate fixed point is the last computed iterate.
pub fn iterate(
    space: &PerturbedSpace,
    map: &SelfMap,
    params: &SolverParams,
) -> Result<SolveResult> {
    params.validate()?;
    let dom = space.domain;
    if !dom.contains(params.x0) {
        return Err(Error::DomainEscape {
            step: 0,
            value: params.x0,
            lo: dom.lo,
            hi: dom.hi,
        });
    }

    let mut x = params.x0;
    let mut trace = Vec::new();
    let mut zero_run = 0;
    let mut d0 = 0.0;
    let mut envelope: Option<Envelope> = None;
    let mut stop = StopReason::MaxIterations;

    for n in 0..params.max_iterations {
        let next = map.apply(x)?;
        if !dom.contains(next) {
            return Err(Error::DomainEscape {
                step: n + 1,
                value: next,
                lo: dom.lo,
                hi: dom.hi,
            });
        }
        let perturbed_step = space.perturbed(x, next)?;
        let exact_step = space.exact_distance(x, next)?;
        let env = envelope.get_or_insert_with(|| {
            d0 = perturbed_step;
            Envelope {
                mode: &params.mode,
                d0,
                horizon: params.horizon,
                phi_iterate: d0,
                truncated: false,
            }
        });
        let (step_envelope, bound) = env.at(n)?;
        trace.push(TraceRow {
            n,
            x,
            perturbed_step,
            exact_step,
            envelope: step_envelope,
            bound,
        });
        x = next;

        zero_run = if exact_step == 0.0 { zero_run + 1 } else { 0 };
        if bound.is_some_and(|b| b < params.epsilon) {
            stop = StopReason::BoundMet;
            break;
        }
        if zero_run >= ZERO_STEPS_TO_STOP {
            stop = StopReason::ResidualZero;
            break;
        }
    }

    let res = residual(space, map, x)?;
    Ok(SolveResult {
        x0: params.x0,
        mode: params.mode.name().to_string(),
        trace,
        stop,
        fixed_point: x,
        residual: res,
        accepted: res.exact.abs() <= params.epsilon,
        perturbed_residual_zero: res.perturbed.abs() <= RESIDUAL_ZERO_TOLERANCE,
        d0,
        bound_truncated: envelope.is_some_and(|e| e.truncated),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub runs: Vec<SolveResult>,
    pub consistent: bool,
    pub distinct_limits: Vec<f64>,
    pub agreement_tolerance: f64,
}

/// Solves from every start and compares the accepted limits in `d`.
///
/// Consistent when every run is accepted and all limits lie within
/// `10·ε` of each other.
pub fn uniqueness_probe(
    space: &PerturbedSpace,
    map: &SelfMap,
    starts: &[f64],
    params: &SolverParams,
) -> Result<UniquenessReport> {
    if starts.len() < 2 {
        return Err(Error::Parameter(
            "uniqueness probe needs at least two starts".into(),
        ));
    }
    let runs = starts
        .par_iter()
        .map(|&x0| {
            let p = SolverParams {
                x0,
                ..params.clone()
            };
            iterate(space, map, &p).map_err(|e| Error::Probe {
                start: x0,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let agreement = 10.0 * params.epsilon;
    let mut distinct: Vec<f64> = Vec::new();
    for r in runs.iter().filter(|r| r.accepted) {
        let mut seen = false;
        for &l in &distinct {
            if space.exact_distance(l, r.fixed_point)?.abs() <= agreement {
                seen = true;
                break;
            }
        }
        if !seen {
            distinct.push(r.fixed_point);
        }
    }
    let consistent = runs.iter().all(|r| r.accepted) && distinct.len() == 1;
    Ok(UniquenessReport {
        runs,
        consistent,
        distinct_limits: distinct,
        agreement_tolerance: agreement,
    })
}
