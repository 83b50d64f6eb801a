//! Sampled audit of the metric axioms for the exact metric `d = D − P`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::space::{PerturbedSpace, SampleSet};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Pairs with `d ≤ tol` but `|x − y|` above this multiple of `tol` break
/// identity of indiscernibles.
pub const INDISCERNIBLE_FACTOR: f64 = 1e3;
/// Counterexamples kept per axiom (the largest violations).
pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Nonnegativity,
    Identity,
    Symmetry,
    Triangle,
}

impl Axiom {
    pub const ALL: [Axiom; 4] = [
        Axiom::Nonnegativity,
        Axiom::Identity,
        Axiom::Symmetry,
        Axiom::Triangle,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Axiom::Nonnegativity => "nonnegativity",
            Axiom::Identity => "identity",
            Axiom::Symmetry => "symmetry",
            Axiom::Triangle => "triangle",
        }
    }
}

impl std::fmt::Display for Axiom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxiomStatus {
    Pass,
    Fail,
    /// No violation found but some samples could not be evaluated.
    Indeterminate,
}

/// A violating sample. `witness` is `[x]`, `[x, y]` or `[x, y, z]`, where
/// `z` is the intermediate point of the triangle inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCounterexample {
    pub axiom: Axiom,
    pub witness: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndeterminateSample {
    pub axiom: Axiom,
    pub witness: Vec<f64>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomVerdict {
    pub axiom: Axiom,
    pub status: AxiomStatus,
    pub violations: usize,
    pub checked: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplesChecked {
    pub points: usize,
    pub pairs: usize,
    pub triples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub verdicts: Vec<AxiomVerdict>,
    pub counterexamples: Vec<AxiomCounterexample>,
    pub indeterminate: Vec<IndeterminateSample>,
    pub samples_checked: SamplesChecked,
    pub tolerance: f64,
    pub assumptions: Vec<String>,
}

impl AxiomReport {
    pub fn verdict(&self, axiom: Axiom) -> &AxiomVerdict {
        self.verdicts
            .iter()
            .find(|v| v.axiom == axiom)
            .expect("all axioms present")
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == AxiomStatus::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == AxiomStatus::Fail)
    }
}

enum Outcome {
    Ok,
    Violation(AxiomCounterexample),
    Error(IndeterminateSample),
}

fn judge(axiom: Axiom, witness: Vec<f64>, result: Result<(f64, f64, f64), String>) -> Outcome {
    match result {
        Ok((lhs, rhs, margin)) if margin > 0.0 => Outcome::Violation(AxiomCounterexample {
            axiom,
            witness,
            lhs,
            rhs,
            margin,
        }),
        Ok(_) => Outcome::Ok,
        Err(error) => Outcome::Error(IndeterminateSample {
            axiom,
            witness,
            error,
        }),
    }
}

/// Checks, within `tol`:
///
/// 1. `d(x, y) ≥ −tol` on pairs,
/// 2. `|d(x, x)| ≤ tol` on points, and no pair with `d(x, y) ≤ tol` but
///    `|x − y| > 10³·tol`,
/// 3. `|d(x, y) − d(y, x)| ≤ tol` on pairs,
/// 4. `d(x, y) ≤ d(x, z) + d(z, y) + tol` on triples `(x, y, z)`.
///
/// Each counterexample carries its margin, the amount by which the
/// inequality misses after subtracting `tol`.
pub fn audit_metric_axioms(space: &PerturbedSpace, samples: &SampleSet, tol: f64) -> AxiomReport {
    let d = |a: f64, b: f64| space.exact_distance(a, b).map_err(|e| e.to_string());

    let mut outcomes: Vec<Outcome> = Vec::new();

    outcomes.extend(
        samples
            .points
            .par_iter()
            .map(|&x| {
                judge(
                    Axiom::Identity,
                    vec![x],
                    d(x, x).map(|v| (v.abs(), tol, v.abs() - tol)),
                )
            })
            .collect::<Vec<_>>(),
    );

    let pair_outcomes: Vec<[Outcome; 3]> = samples
        .pairs
        .par_iter()
        .map(|&(x, y)| {
            let dxy = d(x, y);
            let nonneg = judge(
                Axiom::Nonnegativity,
                vec![x, y],
                dxy.clone().map(|v| (v, -tol, -tol - v)),
            );
            let identity = judge(
                Axiom::Identity,
                vec![x, y],
                dxy.clone().map(|v| {
                    let gap = (x - y).abs();
                    if v <= tol && gap > INDISCERNIBLE_FACTOR * tol {
                        (v, gap, gap - INDISCERNIBLE_FACTOR * tol)
                    } else {
                        (v, gap, 0.0)
                    }
                }),
            );
            let symmetry = judge(
                Axiom::Symmetry,
                vec![x, y],
                dxy.and_then(|a| d(y, x).map(|b| (a, b, (a - b).abs() - tol))),
            );
            [nonneg, identity, symmetry]
        })
        .collect();
    outcomes.extend(pair_outcomes.into_iter().flatten());

    outcomes.extend(
        samples
            .triples
            .par_iter()
            .map(|&(x, y, z)| {
                let r = d(x, y).and_then(|xy| {
                    let xz = d(x, z)?;
                    let zy = d(z, y)?;
                    Ok((xy, xz + zy, xy - (xz + zy) - tol))
                });
                judge(Axiom::Triangle, vec![x, y, z], r)
            })
            .collect::<Vec<_>>(),
    );

    let mut counterexamples = Vec::new();
    let mut indeterminate = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Ok => {}
            Outcome::Violation(c) => counterexamples.push(c),
            Outcome::Error(e) => indeterminate.push(e),
        }
    }

    let checked = |axiom: Axiom| match axiom {
        Axiom::Nonnegativity | Axiom::Symmetry => samples.pairs.len(),
        Axiom::Identity => samples.points.len() + samples.pairs.len(),
        Axiom::Triangle => samples.triples.len(),
    };
    let verdicts = Axiom::ALL
        .iter()
        .map(|&axiom| {
            let violations = counterexamples.iter().filter(|c| c.axiom == axiom).count();
            let errors = indeterminate.iter().any(|e| e.axiom == axiom);
            let status = if violations > 0 {
                AxiomStatus::Fail
            } else if errors {
                AxiomStatus::Indeterminate
            } else {
                AxiomStatus::Pass
            };
            AxiomVerdict {
                axiom,
                status,
                violations,
                checked: checked(axiom),
            }
        })
        .collect();

    AxiomReport {
        verdicts,
        counterexamples: canonical_witnesses(counterexamples),
        indeterminate,
        samples_checked: SamplesChecked {
            points: samples.points.len(),
            pairs: samples.pairs.len(),
            triples: samples.triples.len(),
        },
        tolerance: tol,
        assumptions: vec![
            "passing verdicts mean no counterexample among the checked samples".into(),
            "completeness of (X, d) is assumed, not checked".into(),
        ],
    }
}

fn witness_order(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(p, q)| p.total_cmp(q))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

// Keeps the largest violations per axiom, then orders by axiom and witness.
fn canonical_witnesses(mut all: Vec<AxiomCounterexample>) -> Vec<AxiomCounterexample> {
    all.sort_by(|a, b| {
        a.axiom
            .cmp(&b.axiom)
            .then(b.margin.total_cmp(&a.margin))
            .then_with(|| witness_order(&a.witness, &b.witness))
    });
    let mut kept = Vec::new();
    for axiom in Axiom::ALL {
        kept.extend(
            all.iter()
                .filter(|c| c.axiom == axiom)
                .take(MAX_WITNESSES)
                .cloned(),
        );
    }
    kept.sort_by(|a, b| {
        a.axiom
            .cmp(&b.axiom)
            .then_with(|| witness_order(&a.witness, &b.witness))
    });
    kept
}
