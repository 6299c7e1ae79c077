//! JSON experiment configuration: schema types, validation and
//! conversion into core objects.
//!
//! Exact quantities (perturbation intervals, gap sizes) are written as
//! strings, either `"9/1000"` or a decimal like `"0.25"`, and parsed into
//! exact rationals.

use anyhow::{anyhow, bail, Context, Result};
use cml_core::interact::InteractionRule;
use cml_core::maps::{self, PerturbationMapSpec, PiecewiseAffineMap};
use cml_core::sim::{Arithmetic, InitialCondition, SimulationSpec};
use cml_core::space::{Configuration, Space, Topology};
use cml_core::Rat;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Top-level experiment file: a kind tag, a kind-specific parameter
/// object, a seed and output options.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: String,
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

pub const EXPERIMENT_KINDS: [&str; 12] = [
    "simulate",
    "ensemble",
    "lemma5",
    "shrink",
    "ulam",
    "ly_check",
    "perturb_check",
    "invariant",
    "convergence_study",
    "meanfield",
    "diag_bounds",
    "contraction_check",
];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| anyhow!("config schema error at `{}`: {}", e.path(), e.inner()))?;
        if !EXPERIMENT_KINDS.contains(&config.kind.as_str()) {
            bail!(
                "config schema error at `kind`: unknown experiment kind `{}` (expected one of {})",
                config.kind,
                EXPERIMENT_KINDS.join(", ")
            );
        }
        Ok(config)
    }

    /// Parses the kind-specific parameter object, reporting the offending
    /// field path on failure.
    pub fn params_as<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        let de = self.params.clone();
        serde_path_to_error::deserialize(de).map_err(|e| {
            anyhow!(
                "config schema error at `params.{}`: {}",
                e.path(),
                e.inner()
            )
        })
    }
}

/// Parses `"9/1000"`, `"0.25"` or `"3"` into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).with_context(|| format!("bad numerator in `{s}`"))?;
        let d = BigInt::from_str(d.trim()).with_context(|| format!("bad denominator in `{s}`"))?;
        if d.is_zero() {
            bail!("zero denominator in `{s}`");
        }
        return Ok(Rat::new(n, d));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    let int_part = if int_part.is_empty() { "0" } else { int_part };
    let num_str = format!("{int_part}{frac_part}");
    let num = BigInt::from_str(&num_str).with_context(|| format!("bad rational `{s}`"))?;
    let mut den = BigInt::one();
    for _ in 0..frac_part.len() {
        den *= 10;
    }
    Ok(Rat::new(num * sign, den))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyCfg {
    Interval,
    Circle,
}

fn default_dim() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceCfg {
    pub topology: TopologyCfg,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

impl SpaceCfg {
    pub fn build(&self) -> Result<Space> {
        let topology = match self.topology {
            TopologyCfg::Interval => Topology::Interval,
            TopologyCfg::Circle => Topology::Circle,
        };
        Ok(Space::new(topology, self.dim)?)
    }
}

/// Local map selection: a named catalog entry, explicit piece lists, or a
/// perturbation spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapCfg {
    Doubling,
    Tripling,
    Identity,
    Tent,
    FullBranch {
        branches: u32,
    },
    Pieces {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        intercepts: Vec<f64>,
        #[serde(default)]
        wraparound: bool,
    },
    Perturbation {
        intervals: Vec<(String, String)>,
        slopes: Vec<String>,
        #[serde(default)]
        intercepts: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationCfg {
    /// Interval endpoint pairs, e.g. `[["1/4", "1/2"]]`.
    pub intervals: Vec<(String, String)>,
    pub slopes: Vec<String>,
    /// Defaults to the midpoint-fixing intercepts.
    #[serde(default)]
    pub intercepts: Option<Vec<String>>,
}

impl PerturbationCfg {
    pub fn build(&self) -> Result<PerturbationMapSpec> {
        let intervals: Result<Vec<(Rat, Rat)>> = self
            .intervals
            .iter()
            .map(|(a, b)| Ok((parse_rat(a)?, parse_rat(b)?)))
            .collect();
        let slopes: Result<Vec<Rat>> = self.slopes.iter().map(|s| parse_rat(s)).collect();
        let spec = match &self.intercepts {
            Some(cs) => {
                let cs: Result<Vec<Rat>> = cs.iter().map(|s| parse_rat(s)).collect();
                PerturbationMapSpec::new(intervals?, slopes?, cs?)?
            }
            None => PerturbationMapSpec::with_midpoint_intercepts(intervals?, slopes?)?,
        };
        Ok(spec)
    }
}

impl MapCfg {
    pub fn build(&self) -> Result<PiecewiseAffineMap> {
        Ok(match self {
            MapCfg::Doubling => maps::doubling(),
            MapCfg::Tripling => maps::tripling(),
            MapCfg::Identity => maps::identity(),
            MapCfg::Tent => maps::tent(),
            MapCfg::FullBranch { branches } => {
                if *branches == 0 {
                    bail!("full_branch needs at least one branch");
                }
                maps::full_branch(*branches)
            }
            MapCfg::Pieces {
                breakpoints,
                slopes,
                intercepts,
                wraparound,
            } => PiecewiseAffineMap::from_f64(breakpoints, slopes, intercepts, *wraparound)?,
            MapCfg::Perturbation {
                intervals,
                slopes,
                intercepts,
            } => {
                let cfg = PerturbationCfg {
                    intervals: intervals.clone(),
                    slopes: slopes.clone(),
                    intercepts: intercepts.clone(),
                };
                maps::build_perturbation_map(&cfg.build()?)?
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitCfg {
    Fixed { positions: Vec<Vec<f64>> },
    Random { n: usize },
    RandomCluster { n: usize, spread: f64 },
}

impl InitCfg {
    pub fn build(&self, space: &Space) -> Result<InitialCondition> {
        Ok(match self {
            InitCfg::Fixed { positions } => {
                InitialCondition::Fixed(Configuration::new(positions.clone(), space)?)
            }
            InitCfg::Random { n } => InitialCondition::Random { n: *n },
            InitCfg::RandomCluster { n, spread } => InitialCondition::RandomCluster {
                n: *n,
                spread: *spread,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ArithmeticCfg {
    #[default]
    Double,
    Rational,
    Quantized {
        bits: u32,
    },
}

impl ArithmeticCfg {
    pub fn build(&self) -> Arithmetic {
        match self {
            ArithmeticCfg::Double => Arithmetic::Double,
            ArithmeticCfg::Rational => Arithmetic::Rational,
            ArithmeticCfg::Quantized { bits } => Arithmetic::Quantized { bits: *bits },
        }
    }
}

fn default_horizon() -> usize {
    cml_core::sim::DEFAULT_HORIZON
}

fn default_sync_tolerance() -> f64 {
    cml_core::sim::DEFAULT_SYNC_TOLERANCE
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub space: SpaceCfg,
    pub map: MapCfg,
    pub rule: InteractionRule,
    pub init: InitCfg,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_sync_tolerance")]
    pub sync_tolerance: f64,
    #[serde(default)]
    pub arithmetic: ArithmeticCfg,
}

impl SimulateParams {
    pub fn build(&self) -> Result<SimulationSpec> {
        let space = self.space.build()?;
        Ok(SimulationSpec {
            space,
            maps: vec![self.map.build()?],
            rule: self.rule.clone(),
            init: self.init.build(&space)?,
            horizon: self.horizon,
            sync_tolerance: self.sync_tolerance,
            arithmetic: self.arithmetic.build(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleParams {
    pub sim: SimulateParams,
    pub trials: usize,
    /// When set, every run must satisfy
    /// `diameter(t) <= factor^t * diameter(0)`.
    #[serde(default)]
    pub verify_decay_factor: Option<f64>,
    /// When set, the synced fraction must equal this value exactly.
    #[serde(default)]
    pub expect_synced_fraction: Option<f64>,
    /// When set, the mean hitting time must fall in `[lo, hi]`.
    #[serde(default)]
    pub expect_mean_hit_between: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Lemma5Mode {
    Distance,
    Position,
}

fn default_lemma5_steps() -> usize {
    10_000
}

fn default_position_trials() -> usize {
    12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma5Params {
    pub mode: Lemma5Mode,
    pub a0: String,
    pub b0: String,
    pub epsilon: String,
    #[serde(default = "default_lemma5_steps")]
    pub steps: usize,
    /// Position mode: lattice quantization (default) or exact.
    #[serde(default = "default_roundoff_arithmetic")]
    pub arithmetic: ArithmeticCfg,
    /// Position mode: number of seeded runs.
    #[serde(default = "default_position_trials")]
    pub trials: usize,
    /// Position mode: horizon of the exact counterpart run.
    #[serde(default = "default_exact_horizon")]
    pub exact_horizon: usize,
}

fn default_roundoff_arithmetic() -> ArithmeticCfg {
    ArithmeticCfg::Quantized { bits: 10 }
}

fn default_exact_horizon() -> usize {
    1000
}

fn default_shrink_ns() -> Vec<usize> {
    (3..=12).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShrinkParams {
    #[serde(default = "default_shrink_ns")]
    pub n_values: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UlamParams {
    pub map: MapCfg,
    pub n_bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyCheckParams {
    pub map: MapCfg,
    pub n_bins: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbCheckParams {
    pub intervals: Vec<(String, String)>,
    pub slopes: Vec<String>,
    #[serde(default)]
    pub intercepts: Option<Vec<String>>,
    pub n_bins: usize,
    pub trials: usize,
}

impl PerturbCheckParams {
    pub fn spec(&self) -> Result<PerturbationMapSpec> {
        PerturbationCfg {
            intervals: self.intervals.clone(),
            slopes: self.slopes.clone(),
            intercepts: self.intercepts.clone(),
        }
        .build()
    }
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iters() -> usize {
    100_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantParams {
    pub map: MapCfg,
    /// Optional perturbation composed after the map.
    #[serde(default)]
    pub perturbation: Option<PerturbationCfg>,
    pub n_bins: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceParams {
    pub base: MapCfg,
    /// Left endpoint of the perturbation interval.
    pub interval_start: String,
    pub slope: String,
    pub deltas: Vec<String>,
    pub n_bins: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureInitCfg {
    Lebesgue,
    /// Lebesgue with a sinusoidal density perturbation.
    PerturbedLebesgue {
        amplitude: f64,
    },
    /// Uniform measure on a periodic orbit of the local map.
    Orbit {
        x0: String,
        period: usize,
    },
    /// Explicit atoms as (position, mass) rational strings.
    Atoms {
        atoms: Vec<(String, String)>,
    },
}

fn default_n_bins() -> usize {
    256
}

fn default_resolutions() -> Vec<usize> {
    vec![16]
}

fn default_mf_steps() -> usize {
    1
}

fn default_map_cfg() -> MapCfg {
    MapCfg::Doubling
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldParams {
    pub epsilon: f64,
    pub gamma: f64,
    #[serde(default = "default_map_cfg")]
    pub map: MapCfg,
    pub init: MeasureInitCfg,
    #[serde(default = "default_n_bins")]
    pub n_bins: usize,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_mf_steps")]
    pub steps: usize,
    /// Grid mode: assert the Lebesgue residual bound `2/resolution` and
    /// its decay across the listed resolutions.
    #[serde(default)]
    pub check_lebesgue_residual: bool,
    /// Atomic mode: assert the measure is exactly invariant.
    #[serde(default)]
    pub expect_invariant: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagBoundsParams {
    pub n_bins: usize,
    pub n_particles: usize,
    pub epsilon: f64,
    pub samples: usize,
    #[serde(default)]
    pub expect_lower_sum: Option<f64>,
    /// (target, tolerance) for the Monte Carlo estimate.
    #[serde(default)]
    pub expect_mc: Option<(f64, f64)>,
}

fn default_contraction_ns() -> Vec<usize> {
    (2..=10).collect()
}

fn default_contraction_gammas() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn default_contraction_samples() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionCheckParams {
    #[serde(default = "default_contraction_ns")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_contraction_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_contraction_samples")]
    pub samples: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rat_forms() {
        assert_eq!(
            parse_rat("9/1000").unwrap(),
            Rat::new(9.into(), 1000.into())
        );
        assert_eq!(parse_rat("0.25").unwrap(), Rat::new(1.into(), 4.into()));
        assert_eq!(parse_rat("3").unwrap(), Rat::new(3.into(), 1.into()));
        assert_eq!(parse_rat("-0.5").unwrap(), Rat::new((-1).into(), 2.into()));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let bad = r#"{"kind": "shrink", "params": {}, "bogus": 1}"#;
        let err = ExperimentConfig::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn config_rejects_unknown_kind() {
        let bad = r#"{"kind": "frobnicate", "params": {}}"#;
        let err = ExperimentConfig::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("frobnicate"), "{err}");
    }

    #[test]
    fn params_error_has_field_path() {
        let cfg = ExperimentConfig::from_json(
            r#"{"kind": "ly_check", "params": {"map": {"kind": "tripling"}, "n_bins": "x", "trials": 3}}"#,
        )
        .unwrap();
        let err = cfg.params_as::<LyCheckParams>().unwrap_err().to_string();
        assert!(err.contains("params.n_bins"), "{err}");
    }

    #[test]
    fn map_cfg_builds_catalog() {
        for cfg in [
            MapCfg::Doubling,
            MapCfg::Tripling,
            MapCfg::Identity,
            MapCfg::Tent,
        ] {
            cfg.build().unwrap();
        }
        let p = MapCfg::Perturbation {
            intervals: vec![("1/4".into(), "1/2".into())],
            slopes: vec!["1/2".into()],
            intercepts: None,
        };
        p.build().unwrap();
    }
}
