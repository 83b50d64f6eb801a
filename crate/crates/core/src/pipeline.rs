//! Runs the analysis stages over a validated [`Problem`].

use crate::axioms::{audit_metric_axioms, AxiomReport};
use crate::comparison::{self, ComparisonReport};
use crate::config::Problem;
use crate::contraction::{
    self, classify, estimate_min_lambda, probe_continuity, probe_points, Classification,
    ConditionKind, ConditionVerdict, ContinuityProbe, LambdaEstimate, ProbeMetric,
};
use crate::solver::{iterate, uniqueness_probe, SolveResult, UniquenessReport};
use crate::space::{sample_points, SampleSet};
use crate::{Error, Result};

/// Kinds scanned by [`lambda_estimates`].
pub const ESTIMATE_KINDS: [ConditionKind; 3] = [
    ConditionKind::KannanPerturbed,
    ConditionKind::KannanExact,
    ConditionKind::BanachPerturbed,
];

pub fn samples(problem: &Problem) -> SampleSet {
    sample_points(
        &problem.space,
        Some(&problem.map),
        problem.counts,
        problem.seed,
    )
    .with_anchors(&problem.anchors)
}

pub fn axioms(problem: &Problem, samples: &SampleSet) -> AxiomReport {
    audit_metric_axioms(&problem.space, samples, problem.tolerance)
}

pub fn comparison(problem: &Problem) -> Result<Option<ComparisonReport>> {
    problem.phi.as_ref().map(comparison::audit).transpose()
}

pub fn conditions(problem: &Problem, samples: &SampleSet) -> Result<Classification> {
    let mut c = classify(
        &problem.space,
        &problem.map,
        problem.phi.as_ref(),
        problem.lambda,
        samples,
        problem.tolerance,
    )?;
    if problem.probes.is_some() {
        c.continuity = continuity(problem)?;
    }
    Ok(c)
}

/// Runs a single condition. λ-based conditions need `lambda`.
pub fn condition(
    problem: &Problem,
    kind: ConditionKind,
    pairs: &[(f64, f64)],
) -> Result<ConditionVerdict> {
    let (space, map, tol) = (&problem.space, &problem.map, problem.tolerance);
    let lambda = || {
        problem
            .lambda
            .ok_or_else(|| Error::Config(format!("condition `{kind}` needs `lambda`")))
    };
    match kind {
        ConditionKind::PhiPerturbed => {
            let phi = problem
                .phi
                .as_ref()
                .ok_or_else(|| Error::Config("condition `phi-perturbed` needs `phi`".into()))?;
            Ok(contraction::verify_phi_contraction(
                space, map, phi, pairs, tol,
            ))
        }
        ConditionKind::KannanPerturbed => {
            contraction::verify_kannan_perturbed(space, map, lambda()?, pairs, tol)
        }
        ConditionKind::KannanExact => {
            contraction::verify_kannan_exact(space, map, lambda()?, pairs, tol)
        }
        ConditionKind::BanachPerturbed => {
            contraction::verify_banach_perturbed(space, map, lambda()?, pairs, tol)
        }
        ConditionKind::BanachExact => {
            contraction::verify_banach_exact(space, map, lambda()?, pairs, tol)
        }
    }
}

/// Estimates for each kind; kinds with no usable pair are skipped and
/// reported in the second element.
pub fn lambda_estimates(
    problem: &Problem,
    samples: &SampleSet,
    kinds: &[ConditionKind],
) -> Result<(Vec<LambdaEstimate>, Vec<String>)> {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for &kind in kinds {
        match estimate_min_lambda(
            &problem.space,
            &problem.map,
            &samples.pairs,
            kind,
            problem.tolerance,
        ) {
            Ok(e) => out.push(e),
            Err(Error::Estimate(msg)) => skipped.push(format!("{kind}: {msg}")),
            Err(e) => return Err(e),
        }
    }
    Ok((out, skipped))
}

pub fn continuity(problem: &Problem) -> Result<Vec<ContinuityProbe>> {
    let points = problem
        .probes
        .clone()
        .unwrap_or_else(|| probe_points(&problem.space, &problem.map));
    points
        .into_iter()
        .map(|p| {
            probe_continuity(
                &problem.space,
                &problem.map,
                p,
                &contraction::default_deltas(),
                ProbeMetric::Exact,
                problem.tolerance,
            )
        })
        .collect()
}

/// Solves from every start; with two or more starts also checks that the
/// limits agree.
pub fn solve(problem: &Problem) -> Result<(Vec<SolveResult>, Option<UniquenessReport>)> {
    if problem.starts.len() >= 2 {
        let u = uniqueness_probe(
            &problem.space,
            &problem.map,
            &problem.starts,
            &problem.solver,
        )?;
        Ok((u.runs.clone(), Some(u)))
    } else {
        Ok((
            vec![iterate(&problem.space, &problem.map, &problem.solver)?],
            None,
        ))
    }
}
