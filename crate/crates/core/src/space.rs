//! Perturbed metric spaces over a bounded interval, self-maps and samples.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{MapConfig, SpaceConfig};
use crate::expr::{EvalError, Expr};
use crate::{Error, Result};

/// Closed interval `[lo, hi]` with finite bounds and `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!(
                "bounds must be finite, got [{lo}, {hi}]"
            )));
        }
        if lo >= hi {
            return Err(Error::Domain(format!(
                "empty domain: lo = {lo} is not below hi = {hi}"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `n` evenly spaced points including both endpoints (`n >= 2`).
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        let step = self.width() / (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// `(X, D, P)` with `X` a bounded interval. The exact metric is `d = D − P`.
#[derive(Debug, Clone)]
pub struct PerturbedSpace {
    pub domain: Interval,
    pub distance: Expr,
    pub perturbation: Expr,
    pub label: String,
}

const PAIR_VARS: [&str; 2] = ["x", "y"];

fn parse_in(src: &str, what: &str, allowed: &[&str]) -> Result<Expr> {
    let expr: Expr = src.parse().map_err(|source| Error::Expr {
        what: what.to_string(),
        source,
    })?;
    let stray = expr.stray_variables(allowed);
    if !stray.is_empty() {
        return Err(Error::Config(format!(
            "{what} uses unknown variable(s) {} (allowed: {})",
            stray.join(", "),
            allowed.join(", ")
        )));
    }
    Ok(expr)
}

impl PerturbedSpace {
    pub fn new(lo: f64, hi: f64, distance: &str, perturbation: &str, label: &str) -> Result<Self> {
        let domain = Interval::new(lo, hi)?;
        Ok(PerturbedSpace {
            domain,
            distance: parse_in(distance, "D", &PAIR_VARS)?,
            perturbation: parse_in(perturbation, "P", &PAIR_VARS)?,
            label: label.to_string(),
        })
    }

    pub fn from_config(cfg: &SpaceConfig) -> Result<Self> {
        let label = cfg.label.as_deref().unwrap_or("space");
        Self::new(
            cfg.domain[0],
            cfg.domain[1],
            &cfg.distance,
            &cfg.perturbation,
            label,
        )
    }

    /// `D(x, y)`.
    pub fn perturbed(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.distance.eval(&[("x", x), ("y", y)])
    }

    /// `P(x, y)`.
    pub fn perturbation(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.perturbation.eval(&[("x", x), ("y", y)])
    }

    /// `d(x, y) = D(x, y) − P(x, y)`.
    pub fn exact_distance(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Ok(self.perturbed(x, y)? - self.perturbation(x, y)?)
    }

    /// Branch thresholds of `D` and `P` that fall inside the domain.
    pub fn thresholds(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .distance
            .branch_thresholds()
            .into_iter()
            .chain(self.perturbation.branch_thresholds())
            .map(|(_, t)| t)
            .filter(|t| self.domain.contains(*t))
            .collect();
        sort_dedup(&mut out);
        out
    }
}

/// A self-map `T : X → X` given by an expression in `x`.
#[derive(Debug, Clone)]
pub struct SelfMap {
    pub expr: Expr,
    pub label: String,
}

impl SelfMap {
    pub fn new(src: &str, label: &str) -> Result<Self> {
        Ok(SelfMap {
            expr: parse_in(src, "T", &["x"])?,
            label: label.to_string(),
        })
    }

    pub fn from_config(cfg: &MapConfig) -> Result<Self> {
        Self::new(&cfg.map, cfg.label.as_deref().unwrap_or("T"))
    }

    pub fn apply(&self, x: f64) -> Result<f64, EvalError> {
        self.expr.eval(&[("x", x)])
    }

    pub fn thresholds(&self, domain: &Interval) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .expr
            .branch_thresholds()
            .into_iter()
            .map(|(_, t)| t)
            .filter(|t| domain.contains(*t))
            .collect();
        sort_dedup(&mut out);
        out
    }

    /// First sampled point whose image leaves the domain, if any.
    pub fn first_escape(
        &self,
        domain: &Interval,
        points: &[f64],
    ) -> Result<Option<(f64, f64)>, EvalError> {
        for &x in points {
            let tx = self.apply(x)?;
            if !domain.contains(tx) {
                return Ok(Some((x, tx)));
            }
        }
        Ok(None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleCounts {
    pub points: usize,
    pub pairs: usize,
    pub triples: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            points: 64,
            pairs: 4096,
            triples: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub triples: Vec<(f64, f64, f64)>,
    pub seed: u64,
    pub strategy: String,
}

impl SampleSet {
    /// A sample set holding only the given pairs (and their coordinates).
    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Self {
        let mut points: Vec<f64> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
        sort_dedup(&mut points);
        SampleSet {
            points,
            pairs,
            triples: Vec::new(),
            seed: 0,
            strategy: "explicit pairs".to_string(),
        }
    }

    /// Full `n × n` product of an evenly spaced grid on `domain`.
    pub fn grid_pairs(domain: &Interval, n: usize) -> Self {
        let grid = domain.linspace(n);
        let pairs = grid
            .iter()
            .flat_map(|&x| grid.iter().map(move |&y| (x, y)))
            .collect();
        SampleSet {
            points: grid,
            pairs,
            triples: Vec::new(),
            seed: 0,
            strategy: format!("grid product {n}x{n} on {domain}"),
        }
    }
}

impl SampleSet {
    /// Puts every pair of `anchors` first, keeping the pair count unchanged
    /// unless the anchor product alone is larger.
    pub fn with_anchors(mut self, anchors: &[f64]) -> Self {
        if anchors.is_empty() {
            return self;
        }
        let mut a = anchors.to_vec();
        sort_dedup(&mut a);
        let n = self.pairs.len().max(a.len() * a.len());
        let mut pairs: Vec<(f64, f64)> = a
            .iter()
            .flat_map(|&x| a.iter().map(move |&y| (x, y)))
            .collect();
        pairs.extend(
            self.pairs
                .iter()
                .filter(|p| !(a.contains(&p.0) && a.contains(&p.1))),
        );
        pairs.truncate(n);
        self.pairs = pairs;
        self.points.extend(a);
        sort_dedup(&mut self.points);
        self
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| a == b);
}

/// Offset used around branch thresholds: `1e−6 · (hi − lo)`.
pub fn boundary_offset(domain: &Interval) -> f64 {
    1e-6 * domain.width()
}

/// Builds a deterministic sample set for `space` (and `map`, if given).
///
/// The point pool is the union of an evenly spaced grid with both endpoints,
/// `counts.points` seeded uniform draws, and adversarial points around every
/// branch threshold `t` of `D`, `P` and `T`: `t`, `t ± δ` and `t` nudged by a
/// few ulps. Pairs and triples first enumerate all combinations of the
/// adversarial points and the endpoints, then are filled with seeded draws
/// from the pool (or the full product when it fits).
pub fn sample_points(
    space: &PerturbedSpace,
    map: Option<&SelfMap>,
    counts: SampleCounts,
    seed: u64,
) -> SampleSet {
    let domain = space.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = counts.points.max(1);

    let grid = domain.linspace(n);
    let random: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(domain.lo..=domain.hi))
        .collect();

    let mut thresholds = space.thresholds();
    if let Some(m) = map {
        thresholds.extend(m.thresholds(&domain));
    }
    sort_dedup(&mut thresholds);

    let delta = boundary_offset(&domain);
    let mut adversarial = Vec::new();
    for &t in &thresholds {
        let nudge = 4.0 * f64::EPSILON * t.abs().max(1.0);
        for c in [t - delta, t - nudge, t, t + nudge, t + delta] {
            if domain.contains(c) {
                adversarial.push(c);
            }
        }
    }
    sort_dedup(&mut adversarial);

    let mut priority = adversarial.clone();
    priority.extend([domain.lo, domain.hi]);
    sort_dedup(&mut priority);

    let mut pool: Vec<f64> = grid
        .iter()
        .chain(&random)
        .chain(&adversarial)
        .copied()
        .collect();
    sort_dedup(&mut pool);

    let pairs = draw_pairs(&pool, &priority, counts.pairs, &mut rng);
    let triples = draw_triples(&pool, &priority, counts.triples, &mut rng);

    SampleSet {
        points: pool,
        pairs,
        triples,
        seed,
        strategy: format!(
            "grid({n}) + uniform({n}) + boundaries({} thresholds, delta={delta:e}); pairs/triples: boundary products then uniform draws from pool",
            thresholds.len()
        ),
    }
}

fn draw_pairs(pool: &[f64], priority: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    if pool.len().saturating_mul(pool.len()) <= n {
        return pool
            .iter()
            .flat_map(|&x| pool.iter().map(move |&y| (x, y)))
            .collect();
    }
    let mut out: Vec<(f64, f64)> = priority
        .iter()
        .flat_map(|&x| priority.iter().map(move |&y| (x, y)))
        .take(n)
        .collect();
    while out.len() < n {
        let x = pool[rng.gen_range(0..pool.len())];
        let y = pool[rng.gen_range(0..pool.len())];
        out.push((x, y));
    }
    out
}

fn draw_triples(
    pool: &[f64],
    priority: &[f64],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(f64, f64, f64)> {
    let cube = |s: &[f64]| -> Vec<(f64, f64, f64)> {
        let mut v = Vec::with_capacity(s.len().pow(3));
        for &a in s {
            for &b in s {
                for &c in s {
                    v.push((a, b, c));
                }
            }
        }
        v
    };
    if pool.len().saturating_pow(3) <= n {
        return cube(pool);
    }
    let mut out = cube(priority);
    out.truncate(n);
    while out.len() < n {
        let a = pool[rng.gen_range(0..pool.len())];
        let b = pool[rng.gen_range(0..pool.len())];
        let c = pool[rng.gen_range(0..pool.len())];
        out.push((a, b, c));
    }
    out
}
