//! Built-in problem instances with their expected findings.

use serde::Serialize;

use crate::axioms::AxiomReport;
use crate::config::{
    MapConfig, ModeName, Problem, RunConfig, SamplingConfig, SolveConfig, SpaceConfig,
    DEFAULT_TOLERANCE,
};
use crate::contraction::{Classification, ConditionKind};
use crate::solver::{SolveResult, UniquenessReport};
use crate::{Error, Result};

const D_SUM: &str = "abs(x-y)+x^2*y^2";
const P_PRODUCT: &str = "x^2*y^2";

/// What the live modules must report for an entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedFindings {
    pub axioms_hold: bool,
    pub holds: Vec<ConditionKind>,
    pub fails: Vec<ConditionKind>,
    /// Common limit of all starts, when the fixed point is unique.
    pub fixed_point: Option<f64>,
    pub unique: bool,
    pub discontinuities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub config: RunConfig,
    /// Open interval of admissible λ, when known.
    pub lambda_range: Option<(f64, f64)>,
    pub expected: ExpectedFindings,
    pub notes: Vec<String>,
}

pub const IDS: [&str; 5] = [
    "jleli-phi",
    "kannan-step",
    "banach-quarter",
    "identity-noncontractive",
    "squared-nonmetric",
];

#[allow(clippy::too_many_arguments)]
fn config(
    domain: [f64; 2],
    d: &str,
    p: &str,
    t: &str,
    phi: Option<&str>,
    lambda: Option<f64>,
    x0: &[f64],
    mode: ModeName,
    anchors: &[f64],
) -> RunConfig {
    RunConfig {
        space: SpaceConfig {
            domain,
            distance: d.into(),
            perturbation: p.into(),
            label: None,
        },
        map: MapConfig {
            map: t.into(),
            label: None,
        },
        phi: phi.map(str::to_string),
        lambda,
        sampling: SamplingConfig {
            anchors: anchors.to_vec(),
            ..SamplingConfig::default()
        },
        solve: SolveConfig {
            x0: x0.to_vec(),
            mode: Some(mode),
            ..SolveConfig::default()
        },
        tolerance: DEFAULT_TOLERANCE,
        probes: None,
        output: Default::default(),
    }
}

fn labelled(mut cfg: RunConfig, space: &str, map: &str) -> RunConfig {
    cfg.space.label = Some(space.into());
    cfg.map.label = Some(map.into());
    cfg
}

/// Looks up a built-in instance by id.
pub fn builtin(id: &str) -> Result<CatalogEntry> {
    use ConditionKind::*;
    let box10 = [-10.0, 10.0];
    let entry = match id {
        "jleli-phi" => CatalogEntry {
            id: "jleli-phi",
            description: "piecewise map x/3 (x >= 1), 0 (x < 1) with phi(t) = t/3 on D = |x-y| + x^2 y^2",
            config: labelled(
                config(
                    box10,
                    D_SUM,
                    P_PRODUCT,
                    "if(x>=1, x/3, 0)",
                    Some("t/3"),
                    None,
                    &[-5.0, 0.5, 2.0, 9.0],
                    ModeName::Phi,
                    &[0.0, 0.5, 1.0, 3.0],
                ),
                "D = |x-y| + x^2 y^2, P = x^2 y^2",
                "T(x) = x/3 for x >= 1, 0 otherwise",
            ),
            lambda_range: None,
            expected: ExpectedFindings {
                axioms_hold: true,
                holds: vec![],
                fails: vec![PhiPerturbed],
                fixed_point: Some(0.0),
                unique: true,
                discontinuities: vec![1.0],
            },
            notes: vec![
                "phi(t) = t/3 is violated for 0 < x < 1 <= y with x*y^2 < 1, e.g. (0.5, 1): D(T0.5, T1) = 1/3 > D(0.5, 1)/3 = 0.25".into(),
                "the smallest linear constant over the real line is 4/9, attained at (1/2, 1)".into(),
                "pair (0, 3) is tight: D(T0, T3) = phi(D(0, 3)) = 1".into(),
            ],
        },
        "kannan-step" => CatalogEntry {
            id: "kannan-step",
            description: "step map 0 (x < 2), 1 (x >= 2): perturbed Kannan but not Kannan in the exact metric",
            config: labelled(
                config(
                    box10,
                    D_SUM,
                    P_PRODUCT,
                    "if(x<2, 0, 1)",
                    None,
                    Some(0.45),
                    &[-3.0, 1.9, 2.0, 5.0],
                    ModeName::Kannan,
                    &[0.0, 1.0, 2.0],
                ),
                "D = |x-y| + x^2 y^2, P = x^2 y^2",
                "T(x) = 0 for x < 2, 1 otherwise",
            ),
            lambda_range: Some((0.4, 0.5)),
            expected: ExpectedFindings {
                axioms_hold: true,
                holds: vec![KannanPerturbed],
                fails: vec![KannanExact],
                fixed_point: Some(0.0),
                unique: true,
                discontinuities: vec![2.0],
            },
            notes: vec![
                "for x < 2 <= y, D(Tx, Ty) = D(0, 1) = 1 (not 2)".into(),
                "exact-metric certificate at (1, 2): d(T1, T2) = 1 while d(1, T1) + d(2, T2) = 2, so no lambda < 1/2 works".into(),
                "lambda = 0.45 is a representative value inside the admissible range (2/5, 1/2)".into(),
            ],
        },
        "banach-quarter" => CatalogEntry {
            id: "banach-quarter",
            description: "continuous contraction x/4 with lambda = 1/4 on D = |x-y| + x^2 y^2",
            config: labelled(
                config(
                    box10,
                    D_SUM,
                    P_PRODUCT,
                    "x/4",
                    None,
                    Some(0.25),
                    &[-10.0, -1.0, 3.0, 10.0],
                    ModeName::Banach,
                    &[],
                ),
                "D = |x-y| + x^2 y^2, P = x^2 y^2",
                "T(x) = x/4",
            ),
            lambda_range: Some((0.25, 1.0)),
            expected: ExpectedFindings {
                axioms_hold: true,
                holds: vec![BanachPerturbed, BanachExact],
                fails: vec![KannanPerturbed, KannanExact],
                fixed_point: Some(0.0),
                unique: true,
                discontinuities: vec![],
            },
            notes: vec!["D(x/4, y/4) = |x-y|/4 + x^2 y^2/256 <= D(x, y)/4".into()],
        },
        "identity-noncontractive" => CatalogEntry {
            id: "identity-noncontractive",
            description: "identity map: every point is fixed and no contraction condition holds",
            config: labelled(
                config(
                    box10,
                    D_SUM,
                    P_PRODUCT,
                    "x",
                    Some("t/3"),
                    Some(0.45),
                    &[-5.0, 0.5, 2.0, 9.0],
                    ModeName::ResidualOnly,
                    &[0.0, 0.5],
                ),
                "D = |x-y| + x^2 y^2, P = x^2 y^2",
                "T(x) = x",
            ),
            lambda_range: None,
            expected: ExpectedFindings {
                axioms_hold: true,
                holds: vec![],
                fails: ConditionKind::ALL.to_vec(),
                fixed_point: None,
                unique: false,
                discontinuities: vec![],
            },
            notes: vec![],
        },
        "squared-nonmetric" => CatalogEntry {
            id: "squared-nonmetric",
            description: "D = (x-y)^2 with P = 0 is not a perturbed metric: the triangle inequality fails",
            config: labelled(
                config(
                    [0.0, 3.0],
                    "(x-y)^2",
                    "0",
                    "x/2",
                    None,
                    Some(0.3),
                    &[0.0, 1.5, 3.0],
                    ModeName::Banach,
                    &[0.0, 1.5, 3.0],
                ),
                "D = (x-y)^2, P = 0",
                "T(x) = x/2",
            ),
            lambda_range: None,
            expected: ExpectedFindings {
                axioms_hold: false,
                holds: vec![BanachPerturbed, BanachExact],
                fails: vec![KannanPerturbed, KannanExact],
                fixed_point: Some(0.0),
                unique: true,
                discontinuities: vec![],
            },
            notes: vec!["d(0, 3) = 9 > d(0, 1.5) + d(1.5, 3) = 4.5".into()],
        },
        _ => {
            return Err(Error::UnknownBuiltin {
                id: id.to_string(),
                available: IDS.join(", "),
            })
        }
    };
    Ok(entry)
}

pub fn all() -> Vec<CatalogEntry> {
    IDS.iter()
        .map(|id| builtin(id).expect("listed ids exist"))
        .collect()
}

/// Live results to compare against [`ExpectedFindings`].
pub struct Findings<'a> {
    pub problem: &'a Problem,
    pub axioms: &'a AxiomReport,
    pub classification: &'a Classification,
    pub runs: &'a [SolveResult],
    pub uniqueness: Option<&'a UniquenessReport>,
}

impl ExpectedFindings {
    /// Every expectation that the live results contradict.
    pub fn mismatches(&self, found: &Findings<'_>) -> Vec<String> {
        let mut out = Vec::new();
        if found.axioms.all_pass() != self.axioms_hold {
            out.push(format!("axioms: expected all-pass = {}", self.axioms_hold));
        }
        for kind in &self.holds {
            match found.classification.verdict(*kind) {
                Some(v) if v.holds() => {}
                Some(_) => out.push(format!("{kind}: expected to hold, found counterexample")),
                None => out.push(format!("{kind}: expected to hold, not checked")),
            }
        }
        for kind in &self.fails {
            match found.classification.verdict(*kind) {
                Some(v) if !v.holds() => {}
                Some(_) => out.push(format!("{kind}: expected counterexample, holds on samples")),
                None => out.push(format!("{kind}: expected counterexample, not checked")),
            }
        }
        if let Some(fp) = self.fixed_point {
            let tol = 10.0 * found.problem.solver.epsilon;
            for r in found.runs {
                let off = found.problem.space.exact_distance(r.fixed_point, fp);
                if !r.accepted || !off.is_ok_and(|d| d <= tol) {
                    out.push(format!(
                        "start {}: expected limit {fp}, got {}",
                        r.x0, r.fixed_point
                    ));
                }
            }
        }
        let unique = found.uniqueness.is_some_and(|u| u.consistent);
        if found.uniqueness.is_some() && unique != self.unique {
            out.push(format!("uniqueness: expected consistent = {}", self.unique));
        }
        let mut jumps: Vec<f64> = found
            .classification
            .continuity
            .iter()
            .filter(|p| p.discontinuous)
            .map(|p| p.point)
            .collect();
        jumps.sort_by(f64::total_cmp);
        if jumps != self.discontinuities {
            out.push(format!(
                "discontinuities: expected {:?}, found {:?}",
                self.discontinuities, jumps
            ));
        }
        out
    }
}
