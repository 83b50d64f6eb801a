//! Sampled certification of contraction conditions for a self-map.
//!
//! Conditions, for all sampled pairs `(x, y)`:
//!
//! | id                 | inequality                                   |
//! |--------------------|----------------------------------------------|
//! | `phi-perturbed`    | `D(Tx, Ty) ≤ φ(D(x, y))`                     |
//! | `banach-perturbed` | `D(Tx, Ty) ≤ λ·D(x, y)`, `λ ∈ (0, 1)`        |
//! | `kannan-perturbed` | `D(Tx, Ty) ≤ λ·[D(x, Tx) + D(y, Ty)]`, `λ ∈ [0, ½)` |
//! | `banach-exact`     | as banach, with `d = D − P`                  |
//! | `kannan-exact`     | as kannan, with `d = D − P`                  |
//!
//! A pair passes when `lhs ≤ rhs + tol + 1e−12·|rhs|`.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::ComparisonCandidate;
use crate::expr::EvalError;
use crate::space::{PerturbedSpace, SampleSet, SelfMap};
use crate::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const RELATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    PhiPerturbed,
    KannanPerturbed,
    BanachPerturbed,
    KannanExact,
    BanachExact,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 5] = [
        ConditionKind::PhiPerturbed,
        ConditionKind::KannanPerturbed,
        ConditionKind::BanachPerturbed,
        ConditionKind::KannanExact,
        ConditionKind::BanachExact,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ConditionKind::PhiPerturbed => "phi-perturbed",
            ConditionKind::KannanPerturbed => "kannan-perturbed",
            ConditionKind::BanachPerturbed => "banach-perturbed",
            ConditionKind::KannanExact => "kannan-exact",
            ConditionKind::BanachExact => "banach-exact",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        ConditionKind::ALL.into_iter().find(|k| k.id() == id)
    }

    /// Conditions measured with the exact metric rather than `D`.
    pub fn is_exact(self) -> bool {
        matches!(
            self,
            ConditionKind::KannanExact | ConditionKind::BanachExact
        )
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameter {
    Lambda(f64),
    Phi(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionStatus {
    HoldsOnSamples,
    Counterexample,
}

/// A checked pair. `margin = rhs − lhs`; negative means violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub x: f64,
    pub y: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Witness {
    fn new(x: f64, y: f64, lhs: f64, rhs: f64) -> Self {
        Witness {
            x,
            y,
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }

    fn allowance(&self, tol: f64) -> f64 {
        tol + RELATIVE_TOLERANCE * self.rhs.abs()
    }

    pub fn violates(&self, tol: f64) -> bool {
        self.lhs > self.rhs + self.allowance(tol)
    }
}

fn pair_order(a: &Witness, b: &Witness) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub condition: ConditionKind,
    pub status: ConditionStatus,
    pub parameter: Parameter,
    /// Largest violation; `None` when the condition holds on the samples.
    pub witness: Option<Witness>,
    pub first_violation: Option<Witness>,
    pub violations: usize,
    /// Passing pair with a nonzero left side and the smallest margin.
    pub tightest: Option<Witness>,
    pub pairs_checked: usize,
    pub indeterminate: usize,
    pub tolerance: f64,
}

impl ConditionVerdict {
    pub fn holds(&self) -> bool {
        self.status == ConditionStatus::HoldsOnSamples
    }
}

fn aggregate(
    condition: ConditionKind,
    parameter: Parameter,
    pairs: &[(f64, f64)],
    tol: f64,
    eval: impl Fn(f64, f64) -> Result<(f64, f64), EvalError> + Sync,
) -> ConditionVerdict {
    let results: Vec<Result<Witness, EvalError>> = pairs
        .par_iter()
        .map(|&(x, y)| eval(x, y).map(|(lhs, rhs)| Witness::new(x, y, lhs, rhs)))
        .collect();

    let mut worst: Option<Witness> = None;
    let mut first: Option<Witness> = None;
    let mut tightest: Option<Witness> = None;
    let mut violations = 0;
    let mut indeterminate = 0;
    for r in results {
        let Ok(w) = r else {
            indeterminate += 1;
            continue;
        };
        // smaller margin is worse; ties go to the lexicographically smaller pair
        let worse = |cur: &Option<Witness>| match cur {
            None => true,
            Some(c) => w
                .margin
                .total_cmp(&c.margin)
                .then_with(|| pair_order(&w, c))
                .is_lt(),
        };
        if w.violates(tol) {
            violations += 1;
            if first.is_none() {
                first = Some(w);
            }
            if worse(&worst) {
                worst = Some(w);
            }
        } else if w.lhs > tol && worse(&tightest) {
            tightest = Some(w);
        }
    }

    ConditionVerdict {
        condition,
        status: if violations == 0 {
            ConditionStatus::HoldsOnSamples
        } else {
            ConditionStatus::Counterexample
        },
        parameter,
        witness: worst,
        first_violation: first,
        violations,
        tightest,
        pairs_checked: pairs.len(),
        indeterminate,
        tolerance: tol,
    }
}

fn kannan_range(lambda: f64) -> Result<()> {
    if (0.0..0.5).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "Kannan constant must satisfy 0 <= lambda < 1/2, got {lambda}"
        )))
    }
}

fn banach_range(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "Banach constant must satisfy 0 < lambda < 1, got {lambda}"
        )))
    }
}

/// `D(Tx, Ty) ≤ φ(D(x, y))`. Continuity of `T` is not required.
pub fn verify_phi_contraction(
    space: &PerturbedSpace,
    map: &SelfMap,
    phi: &ComparisonCandidate,
    pairs: &[(f64, f64)],
    tol: f64,
) -> ConditionVerdict {
    aggregate(
        ConditionKind::PhiPerturbed,
        Parameter::Phi(phi.label.clone()),
        pairs,
        tol,
        |x, y| {
            let lhs = space.perturbed(map.apply(x)?, map.apply(y)?)?;
            let rhs = phi.value(space.perturbed(x, y)?)?;
            Ok((lhs, rhs))
        },
    )
}

/// `D(Tx, Ty) ≤ λ·D(x, y)`, checked as the φ condition with `φ(t) = λt`.
pub fn verify_banach_perturbed(
    space: &PerturbedSpace,
    map: &SelfMap,
    lambda: f64,
    pairs: &[(f64, f64)],
    tol: f64,
) -> Result<ConditionVerdict> {
    banach_range(lambda)?;
    let phi = ComparisonCandidate::linear(lambda);
    let mut v = verify_phi_contraction(space, map, &phi, pairs, tol);
    v.condition = ConditionKind::BanachPerturbed;
    v.parameter = Parameter::Lambda(lambda);
    Ok(v)
}

/// `D(Tx, Ty) ≤ λ·[D(x, Tx) + D(y, Ty)]` with `λ ∈ [0, ½)`.
///
/// When both points are fixed the right side is zero and the pair only
/// passes if `D(Tx, Ty) ≤ tol`.
pub fn verify_kannan_perturbed(
    space: &PerturbedSpace,
    map: &SelfMap,
    lambda: f64,
    pairs: &[(f64, f64)],
    tol: f64,
) -> Result<ConditionVerdict> {
    kannan_range(lambda)?;
    Ok(aggregate(
        ConditionKind::KannanPerturbed,
        Parameter::Lambda(lambda),
        pairs,
        tol,
        |x, y| {
            let (lhs, sum) = kannan_terms(x, y, map, |a, b| space.perturbed(a, b))?;
            Ok((lhs, lambda * sum))
        },
    ))
}

/// Classical Kannan condition in the exact metric `d = D − P`.
pub fn verify_kannan_exact(
    space: &PerturbedSpace,
    map: &SelfMap,
    lambda: f64,
    pairs: &[(f64, f64)],
    tol: f64,
) -> Result<ConditionVerdict> {
    kannan_range(lambda)?;
    Ok(aggregate(
        ConditionKind::KannanExact,
        Parameter::Lambda(lambda),
        pairs,
        tol,
        |x, y| {
            let (lhs, sum) = kannan_terms(x, y, map, |a, b| space.exact_distance(a, b))?;
            Ok((lhs, lambda * sum))
        },
    ))
}

/// Classical Banach condition in the exact metric.
pub fn verify_banach_exact(
    space: &PerturbedSpace,
    map: &SelfMap,
    lambda: f64,
    pairs: &[(f64, f64)],
    tol: f64,
) -> Result<ConditionVerdict> {
    banach_range(lambda)?;
    Ok(aggregate(
        ConditionKind::BanachExact,
        Parameter::Lambda(lambda),
        pairs,
        tol,
        |x, y| {
            let lhs = space.exact_distance(map.apply(x)?, map.apply(y)?)?;
            Ok((lhs, lambda * space.exact_distance(x, y)?))
        },
    ))
}

/// `(m(Tx, Ty), m(x, Tx) + m(y, Ty))` for the metric-like function `m`.
fn kannan_terms(
    x: f64,
    y: f64,
    map: &SelfMap,
    m: impl Fn(f64, f64) -> Result<f64, EvalError>,
) -> Result<(f64, f64), EvalError> {
    let tx = map.apply(x)?;
    let ty = map.apply(y)?;
    Ok((m(tx, ty)?, m(x, tx)? + m(y, ty)?))
}

/// `(lhs, rhs)` of the ratio `lhs / rhs` whose supremum is the minimal constant.
fn ratio_terms(
    space: &PerturbedSpace,
    map: &SelfMap,
    kind: ConditionKind,
    x: f64,
    y: f64,
) -> Result<(f64, f64), EvalError> {
    match kind {
        ConditionKind::KannanPerturbed => kannan_terms(x, y, map, |a, b| space.perturbed(a, b)),
        ConditionKind::KannanExact => kannan_terms(x, y, map, |a, b| space.exact_distance(a, b)),
        ConditionKind::BanachPerturbed | ConditionKind::PhiPerturbed => Ok((
            space.perturbed(map.apply(x)?, map.apply(y)?)?,
            space.perturbed(x, y)?,
        )),
        ConditionKind::BanachExact => Ok((
            space.exact_distance(map.apply(x)?, map.apply(y)?)?,
            space.exact_distance(x, y)?,
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardViolation {
    pub x: f64,
    pub y: f64,
    pub lhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaEstimate {
    pub kind: ConditionKind,
    pub lambda: f64,
    pub attained_at: (f64, f64),
    pub pairs_scanned: usize,
    pub degenerate_skipped: usize,
    /// Pairs with vanishing denominator but positive left side: no finite
    /// constant covers them.
    pub hard_violations: usize,
    pub first_hard_violation: Option<HardViolation>,
    pub indeterminate: usize,
    /// Whether the estimate lies in the admissible range of the condition.
    pub admissible: bool,
}

/// Smallest constant consistent with the sampled pairs: the maximum of
/// `lhs / rhs` over pairs with `rhs > tol`.
///
/// This is a lower bound on the true supremum. Pairs where both sides are
/// at most `tol` are skipped as degenerate.
pub fn estimate_min_lambda(
    space: &PerturbedSpace,
    map: &SelfMap,
    pairs: &[(f64, f64)],
    kind: ConditionKind,
    tol: f64,
) -> Result<LambdaEstimate> {
    if kind == ConditionKind::PhiPerturbed {
        return Err(Error::Parameter(
            "phi-perturbed has no scalar constant; use banach-perturbed".into(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::Estimate("no pairs to scan".into()));
    }
    let results: Vec<_> = pairs
        .par_iter()
        .map(|&(x, y)| (x, y, ratio_terms(space, map, kind, x, y)))
        .collect();

    let mut best: Option<(f64, f64, f64)> = None;
    let mut degenerate = 0;
    let mut hard = 0;
    let mut first_hard = None;
    let mut indeterminate = 0;
    for (x, y, r) in results {
        let Ok((lhs, rhs)) = r else {
            indeterminate += 1;
            continue;
        };
        if rhs > tol {
            let ratio = lhs / rhs;
            let better = match best {
                None => true,
                Some((b, bx, by)) => ratio
                    .total_cmp(&b)
                    .then_with(|| bx.total_cmp(&x).then(by.total_cmp(&y)))
                    .is_gt(),
            };
            if better {
                best = Some((ratio, x, y));
            }
        } else if lhs > tol {
            hard += 1;
            first_hard.get_or_insert(HardViolation { x, y, lhs });
        } else {
            degenerate += 1;
        }
    }

    let Some((lambda, x, y)) = best else {
        return Err(Error::Estimate(format!(
            "all {} pairs are degenerate or violate with zero denominator",
            pairs.len()
        )));
    };
    let admissible = hard == 0
        && match kind {
            ConditionKind::KannanPerturbed | ConditionKind::KannanExact => lambda < 0.5,
            _ => lambda < 1.0,
        };
    Ok(LambdaEstimate {
        kind,
        lambda,
        attained_at: (x, y),
        pairs_scanned: pairs.len(),
        degenerate_skipped: degenerate,
        hard_violations: hard,
        first_hard_violation: first_hard,
        indeterminate,
        admissible,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeMetric {
    Exact,
    PerturbedD,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityProbe {
    pub point: f64,
    pub jump: f64,
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    pub metric: ProbeMetric,
    pub discontinuous: bool,
}

pub fn default_deltas() -> Vec<f64> {
    (1..=10).map(|k| 10f64.powi(-k)).collect()
}

/// Evaluates `m(T(p − δ), T(p + δ))` along the decreasing deltas. The jump
/// estimate is the last value; the map is flagged discontinuous at `p` when
/// it exceeds `10³·tol`.
pub fn probe_continuity(
    space: &PerturbedSpace,
    map: &SelfMap,
    point: f64,
    deltas: &[f64],
    metric: ProbeMetric,
    tol: f64,
) -> Result<ContinuityProbe> {
    if deltas.is_empty()
        || deltas.iter().any(|d| !(*d > 0.0))
        || deltas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::Parameter(
            "deltas must be positive and strictly decreasing".into(),
        ));
    }
    let dom = space.domain;
    if !(dom.contains(point - deltas[0]) && dom.contains(point + deltas[0])) {
        return Err(Error::Parameter(format!(
            "probe point {point} with delta {} is not interior to {dom}",
            deltas[0]
        )));
    }
    let values = deltas
        .iter()
        .map(|&delta| {
            let a = map.apply(point - delta)?;
            let b = map.apply(point + delta)?;
            match metric {
                ProbeMetric::Exact => space.exact_distance(a, b),
                ProbeMetric::PerturbedD => space.perturbed(a, b),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let jump = *values.last().expect("non-empty deltas");
    Ok(ContinuityProbe {
        point,
        jump,
        deltas: deltas.to_vec(),
        values,
        metric,
        discontinuous: jump > 1e3 * tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub conditions: Vec<ConditionVerdict>,
    pub continuity: Vec<ContinuityProbe>,
    /// Perturbed conditions holding on the samples.
    pub holds: Vec<ConditionKind>,
    /// Exact-metric conditions that fail while a perturbed one holds.
    pub perturbed_only: Vec<ConditionKind>,
}

impl Classification {
    pub fn verdict(&self, kind: ConditionKind) -> Option<&ConditionVerdict> {
        self.conditions.iter().find(|v| v.condition == kind)
    }

    pub fn any_perturbed_holds(&self) -> bool {
        !self.holds.is_empty()
    }
}

/// Points at which to probe continuity: the map's branch thresholds that are
/// interior to the domain, or the domain midpoint if there are none.
pub fn probe_points(space: &PerturbedSpace, map: &SelfMap) -> Vec<f64> {
    let dom = space.domain;
    let margin = default_deltas()[0];
    let pts: Vec<f64> = map
        .thresholds(&dom)
        .into_iter()
        .filter(|&t| dom.contains(t - margin) && dom.contains(t + margin))
        .collect();
    if pts.is_empty() {
        vec![0.5 * (dom.lo + dom.hi)]
    } else {
        pts
    }
}

/// Runs every condition applicable to the supplied parameters.
///
/// `φ` enables `phi-perturbed`; `λ < ½` enables both Kannan checks and
/// `λ ∈ (0, 1)` enables both Banach checks.
pub fn classify(
    space: &PerturbedSpace,
    map: &SelfMap,
    phi: Option<&ComparisonCandidate>,
    lambda: Option<f64>,
    samples: &SampleSet,
    tol: f64,
) -> Result<Classification> {
    if phi.is_none() && lambda.is_none() {
        return Err(Error::Parameter(
            "classification needs phi or lambda".into(),
        ));
    }
    let pairs = &samples.pairs;
    let mut conditions = Vec::new();
    if let Some(phi) = phi {
        conditions.push(verify_phi_contraction(space, map, phi, pairs, tol));
    }
    if let Some(l) = lambda {
        if kannan_range(l).is_ok() {
            conditions.push(verify_kannan_perturbed(space, map, l, pairs, tol)?);
            conditions.push(verify_kannan_exact(space, map, l, pairs, tol)?);
        }
        if banach_range(l).is_ok() {
            conditions.push(verify_banach_perturbed(space, map, l, pairs, tol)?);
            conditions.push(verify_banach_exact(space, map, l, pairs, tol)?);
        }
        if kannan_range(l).is_err() && banach_range(l).is_err() {
            return Err(Error::Parameter(format!(
                "lambda {l} is admissible for no condition"
            )));
        }
    }
    conditions.sort_by_key(|v| v.condition);

    let continuity = probe_points(space, map)
        .into_iter()
        .map(|p| probe_continuity(space, map, p, &default_deltas(), ProbeMetric::Exact, tol))
        .collect::<Result<Vec<_>>>()?;

    let holds: Vec<ConditionKind> = conditions
        .iter()
        .filter(|v| v.holds() && !v.condition.is_exact())
        .map(|v| v.condition)
        .collect();
    let perturbed_only = if holds.is_empty() {
        Vec::new()
    } else {
        conditions
            .iter()
            .filter(|v| v.condition.is_exact() && !v.holds())
            .map(|v| v.condition)
            .collect()
    };

    Ok(Classification {
        conditions,
        continuity,
        holds,
        perturbed_only,
    })
}
