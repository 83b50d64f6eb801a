//! JSON run configuration.
//!
//! ```json
//! {
//!   "space":    { "domain": [-10, 10], "D": "abs(x-y)+x^2*y^2", "P": "x^2*y^2", "label": "..." },
//!   "map":      { "T": "if(x<2, 0, 1)", "label": "..." },
//!   "phi":      "t/3",
//!   "lambda":   0.45,
//!   "sampling": { "points": 64, "pairs": 4096, "triples": 4096, "seed": 42, "anchors": [0, 1, 2] },
//!   "solve":    { "x0": [-3, 1.9, 2, 5], "epsilon": 1e-8, "max_iterations": 10000,
//!                 "mode": "kannan", "horizon": 200 },
//!   "tolerance": 1e-9,
//!   "probes":   [2.0],
//!   "output":   { "report": "report.json", "trace": "trace.csv" }
//! }
//! ```
//!
//! Only `space` and `map` are required. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::comparison::ComparisonCandidate;
use crate::solver::{
    SolveMode, SolverParams, DEFAULT_EPSILON, DEFAULT_HORIZON, DEFAULT_MAX_ITERATIONS,
};
use crate::space::{PerturbedSpace, SampleCounts, SelfMap};
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub domain: [f64; 2],
    #[serde(rename = "D")]
    pub distance: String,
    #[serde(rename = "P")]
    pub perturbation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    #[serde(rename = "T")]
    pub map: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub points: usize,
    pub pairs: usize,
    pub triples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Points whose pairs are always checked, ahead of the drawn samples.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub anchors: Vec<f64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let c = SampleCounts::default();
        SamplingConfig {
            points: c.points,
            pairs: c.pairs,
            triples: c.triples,
            seed: None,
            anchors: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Phi,
    Kannan,
    Banach,
    ResidualOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub x0: Vec<f64>,
    pub epsilon: f64,
    pub max_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeName>,
    pub horizon: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            x0: Vec::new(),
            epsilon: DEFAULT_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            mode: None,
            horizon: DEFAULT_HORIZON,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

impl OutputConfig {
    fn is_empty(&self) -> bool {
        self.report.is_none() && self.trace.is_none()
    }
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceConfig,
    pub map: MapConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "OutputConfig::is_empty")]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Validates the configuration and builds the runtime objects.
    /// `seed_default` applies when the config does not name a seed.
    pub fn build(&self, seed_default: u64) -> Result<Problem> {
        let space = PerturbedSpace::from_config(&self.space)?;
        let map = SelfMap::from_config(&self.map)?;
        let phi = self
            .phi
            .as_deref()
            .map(|src| ComparisonCandidate::new(src, src))
            .transpose()?;
        if let Some(l) = self.lambda {
            if !(0.0..1.0).contains(&l) {
                return Err(Error::Config(format!("lambda must lie in [0, 1), got {l}")));
            }
        }
        let s = &self.sampling;
        if s.points == 0 || s.pairs == 0 || s.triples == 0 {
            return Err(Error::Config("sample counts must be at least 1".into()));
        }
        if let Some(bad) = s.anchors.iter().find(|a| !space.domain.contains(**a)) {
            return Err(Error::Config(format!(
                "anchor {bad} lies outside the domain {}",
                space.domain
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }

        let mode = match self.solve.mode.unwrap_or_else(|| self.default_mode()) {
            ModeName::Phi => SolveMode::Phi(phi.clone().ok_or_else(|| {
                Error::Config("solve mode `phi` needs a `phi` expression".into())
            })?),
            ModeName::Kannan => SolveMode::Kannan(
                self.lambda
                    .ok_or_else(|| Error::Config("solve mode `kannan` needs `lambda`".into()))?,
            ),
            ModeName::Banach => SolveMode::Banach(
                self.lambda
                    .ok_or_else(|| Error::Config("solve mode `banach` needs `lambda`".into()))?,
            ),
            ModeName::ResidualOnly => SolveMode::ResidualOnly,
        };

        let dom = space.domain;
        let starts = if self.solve.x0.is_empty() {
            vec![dom.lo, 0.5 * (dom.lo + dom.hi), dom.hi]
        } else {
            self.solve.x0.clone()
        };
        if let Some(bad) = starts.iter().find(|x| !dom.contains(**x)) {
            return Err(Error::Config(format!(
                "start {bad} lies outside the domain {dom}"
            )));
        }

        let solver = SolverParams {
            x0: starts[0],
            max_iterations: self.solve.max_iterations,
            epsilon: self.solve.epsilon,
            mode,
            horizon: self.solve.horizon,
        };
        if !(solver.epsilon > 0.0) || solver.max_iterations == 0 || solver.horizon == 0 {
            return Err(Error::Config(
                "solve needs epsilon > 0, max_iterations >= 1 and horizon >= 1".into(),
            ));
        }

        Ok(Problem {
            space,
            map,
            phi,
            lambda: self.lambda,
            counts: SampleCounts {
                points: s.points,
                pairs: s.pairs,
                triples: s.triples,
            },
            seed: s.seed.unwrap_or(seed_default),
            anchors: s.anchors.clone(),
            tolerance: self.tolerance,
            solver,
            starts,
            probes: self.probes.clone(),
        })
    }

    fn default_mode(&self) -> ModeName {
        match (self.phi.is_some(), self.lambda) {
            (true, _) => ModeName::Phi,
            (false, Some(l)) if l < 0.5 => ModeName::Kannan,
            (false, Some(l)) if l > 0.0 && l < 1.0 => ModeName::Banach,
            _ => ModeName::ResidualOnly,
        }
    }
}

/// A validated configuration with parsed expressions and resolved defaults.
#[derive(Debug, Clone)]
pub struct Problem {
    pub space: PerturbedSpace,
    pub map: SelfMap,
    pub phi: Option<ComparisonCandidate>,
    pub lambda: Option<f64>,
    pub counts: SampleCounts,
    pub seed: u64,
    pub anchors: Vec<f64>,
    pub tolerance: f64,
    /// Solver settings; `x0` is the first start.
    pub solver: SolverParams,
    pub starts: Vec<f64>,
    pub probes: Option<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "space": {"domain": [0, 1], "D": "abs(x-y)", "P": "0"},
        "map": {"T": "x/2"}
    }"#;

    #[test]
    fn defaults_apply() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        let p = cfg.build(DEFAULT_SEED).unwrap();
        assert_eq!(p.seed, 42);
        assert_eq!(
            p.counts,
            SampleCounts {
                points: 64,
                pairs: 4096,
                triples: 4096
            }
        );
        assert_eq!(p.solver.epsilon, 1e-8);
        assert_eq!(p.solver.max_iterations, 10_000);
        assert_eq!(p.starts, vec![0.0, 0.5, 1.0]);
        assert_eq!(p.solver.mode.name(), "residual-only");
        assert_eq!(p.tolerance, 1e-9);
    }

    #[test]
    fn seed_precedence() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.build(7).unwrap().seed, 7);
        let mut cfg = cfg;
        cfg.sampling.seed = Some(3);
        assert_eq!(cfg.build(7).unwrap().seed, 3);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"space": {"domain": [0, 1], "D": "abs(x-y)", "P": "0"}, "map": {"T": "x"}, "extra": 1}"#;
        assert!(matches!(RunConfig::from_json(text), Err(Error::Config(_))));
        let text = r#"{"space": {"domain": [0, 1], "D": "abs(x-y)", "P": "0", "Q": "1"}, "map": {"T": "x"}}"#;
        assert!(RunConfig::from_json(text).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.solve.mode = Some(ModeName::Kannan);
        assert!(cfg.build(1).is_err());
        cfg.lambda = Some(1.5);
        assert!(cfg.build(1).is_err());

        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.solve.x0 = vec![2.0];
        assert!(cfg.build(1).is_err());

        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.space.distance = "abs(x-w)".into();
        assert!(matches!(cfg.build(1), Err(Error::Config(_))));

        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.phi = Some("x/3".into());
        assert!(cfg.build(1).is_err());
    }

    #[test]
    fn mode_follows_parameters() {
        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.lambda = Some(0.45);
        assert_eq!(cfg.build(1).unwrap().solver.mode.name(), "kannan");
        cfg.lambda = Some(0.75);
        assert_eq!(cfg.build(1).unwrap().solver.mode.name(), "banach");
        cfg.phi = Some("t/2".into());
        assert_eq!(cfg.build(1).unwrap().solver.mode.name(), "phi");
    }

    #[test]
    fn json_roundtrip() {
        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.lambda = Some(0.25);
        cfg.solve.x0 = vec![0.25, 0.75];
        let again = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}
