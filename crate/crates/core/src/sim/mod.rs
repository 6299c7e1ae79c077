//! Lattice simulator: iterates the composition of interaction and local
//! map, records diagnostics, runs seeded ensembles, and hosts the
//! special-purpose exact experiments (rational and lattice-quantized
//! arithmetic, the uniform-ring shrink factor, the three-particle
//! gap-recurrence runs).

pub mod desync;
pub mod exact;
pub mod quantized;
pub mod shrink;

use crate::interact::{
    apply_diffusive, apply_interaction, apply_potential_interaction, epsilon_chain_clusters,
    InteractionError, InteractionMode, InteractionRule,
};
use crate::maps::{MapError, PiecewiseAffineMap};
use crate::space::{diameter, Configuration, Space, SpaceError, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("horizon must be at least 1")]
    BadHorizon,
    #[error("{0} local maps for {1} particles")]
    MapCountMismatch(usize, usize),
    #[error("{mode} arithmetic supports {what} only")]
    UnsupportedInMode {
        mode: &'static str,
        what: &'static str,
    },
    #[error("quantized mode needs 1 <= bits <= 52, got {0}")]
    BadQuantization(u32),
    #[error("start ({a}, {b}) outside the domain 0 < a,b <= eps < a+b")]
    StartOutsideDomain { a: f64, b: f64 },
    #[error("ring shrink factor needs n >= 3, got {0}")]
    RingTooSmall(usize),
}

/// Number representation used by a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    Double,
    Rational,
    Quantized { bits: u32 },
}

#[derive(Debug, Clone, Serialize)]
pub enum InitialCondition {
    Fixed(Configuration),
    /// Uniform i.i.d. positions for `n` particles, drawn from the run seed.
    Random {
        n: usize,
    },
    /// A random base point with all `n` particles within `spread` of it:
    /// samples the diagonal neighborhood.
    RandomCluster {
        n: usize,
        spread: f64,
    },
}

/// Everything needed to run one lattice trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationSpec {
    pub space: Space,
    /// One shared map, or one map per particle.
    #[serde(skip)]
    pub maps: Vec<PiecewiseAffineMap>,
    pub rule: InteractionRule,
    pub init: InitialCondition,
    pub horizon: usize,
    /// Sync detection threshold for soft interactions; rigid runs use
    /// exact coincidence.
    pub sync_tolerance: f64,
    pub arithmetic: Arithmetic,
}

pub const DEFAULT_SYNC_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_HORIZON: usize = 100_000;

impl SimulationSpec {
    pub fn is_rigid(&self) -> bool {
        self.rule.gamma == 0.0
            && matches!(
                self.rule.mode,
                InteractionMode::Threshold
                    | InteractionMode::Closest
                    | InteractionMode::GraphThreshold
            )
    }

    fn map_for(&self, particle: usize) -> &PiecewiseAffineMap {
        if self.maps.len() == 1 {
            &self.maps[0]
        } else {
            &self.maps[particle]
        }
    }
}

/// Diagnostics of one run. Series include the initial state, so their
/// length is at most `horizon + 1`; a rigid run stops early once the
/// configuration collapses onto the diagonal.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub diameters: Vec<f64>,
    pub cluster_counts: Vec<usize>,
    /// First time the diameter reached the sync threshold (exact zero for
    /// rigid runs).
    pub sync_time: Option<usize>,
    /// First time the diameter was within the interaction radius.
    pub hit_time: Option<usize>,
    pub final_config: Configuration,
}

/// SplitMix64 step; derives statistically independent per-trial seeds
/// from a master seed so ensembles are reproducible across thread counts.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        ^ index
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x1234_5678);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One lattice step: interaction first, then the local map applied
/// coordinate-wise.
pub fn step(config: &Configuration, spec: &SimulationSpec) -> Result<Configuration, SimError> {
    if spec.maps.len() != 1 && spec.maps.len() != config.len() {
        return Err(SimError::MapCountMismatch(spec.maps.len(), config.len()));
    }
    let interacted = match spec.rule.mode {
        InteractionMode::Threshold | InteractionMode::Closest | InteractionMode::GraphThreshold => {
            apply_interaction(config, &spec.space, &spec.rule)?
        }
        InteractionMode::Potential => apply_potential_interaction(config, &spec.space, &spec.rule)?,
        InteractionMode::Diffusive => apply_diffusive(config, &spec.space, &spec.rule)?,
    };
    let mut out = Vec::with_capacity(config.len());
    for (i, p) in interacted.positions().iter().enumerate() {
        let map = spec.map_for(i);
        out.push(p.iter().map(|&c| map.eval(c)).collect());
    }
    Ok(Configuration::new(out, &spec.space)?)
}

fn initial_config(spec: &SimulationSpec, seed: u64) -> Result<Configuration, SimError> {
    match &spec.init {
        InitialCondition::Fixed(c) => Ok(c.clone()),
        InitialCondition::Random { n } => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let pts = (0..*n)
                .map(|_| (0..spec.space.dim).map(|_| rng.gen::<f64>()).collect())
                .collect();
            Ok(Configuration::new(pts, &spec.space)?)
        }
        InitialCondition::RandomCluster { n, spread } => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let base: Vec<f64> = (0..spec.space.dim)
                .map(|_| match spec.space.topology {
                    Topology::Circle => rng.gen::<f64>(),
                    // keep the whole cluster inside the interval
                    Topology::Interval => rng.gen::<f64>() * (1.0 - spread),
                })
                .collect();
            let pts = (0..*n)
                .map(|_| {
                    base.iter()
                        .map(|b| match spec.space.topology {
                            Topology::Circle => (b + rng.gen::<f64>() * spread) % 1.0,
                            Topology::Interval => b + rng.gen::<f64>() * spread,
                        })
                        .collect()
                })
                .collect();
            Ok(Configuration::new(pts, &spec.space)?)
        }
    }
}

/// Runs one trajectory. The seed is only consumed by random initial
/// conditions; fixed starts ignore it.
pub fn run(spec: &SimulationSpec, seed: u64) -> Result<RunRecord, SimError> {
    if spec.horizon == 0 {
        return Err(SimError::BadHorizon);
    }
    match spec.arithmetic {
        Arithmetic::Double => run_double(spec, seed),
        Arithmetic::Rational => exact::run_spec(spec, seed),
        Arithmetic::Quantized { bits } => quantized::run_spec(spec, seed, bits),
    }
}

fn run_double(spec: &SimulationSpec, seed: u64) -> Result<RunRecord, SimError> {
    let mut config = initial_config(spec, seed)?;
    let rigid = spec.is_rigid();
    let mut diameters = Vec::new();
    let mut cluster_counts = Vec::new();
    let mut sync_time = None;
    let mut hit_time = None;

    let record = |config: &Configuration,
                  t: usize,
                  diameters: &mut Vec<f64>,
                  cluster_counts: &mut Vec<usize>,
                  sync_time: &mut Option<usize>,
                  hit_time: &mut Option<usize>|
     -> Result<bool, SimError> {
        let d = diameter(config, &spec.space)?;
        diameters.push(d);
        cluster_counts.push(epsilon_chain_clusters(config, &spec.space, spec.rule.epsilon)?.len());
        if hit_time.is_none() && d <= spec.rule.epsilon {
            *hit_time = Some(t);
        }
        let synced = if rigid {
            d == 0.0
        } else {
            d <= spec.sync_tolerance
        };
        if sync_time.is_none() && synced {
            *sync_time = Some(t);
        }
        // the diagonal is forward-invariant: a collapsed rigid run stays
        // collapsed, so stop early
        Ok(rigid && d == 0.0)
    };

    let mut done = record(
        &config,
        0,
        &mut diameters,
        &mut cluster_counts,
        &mut sync_time,
        &mut hit_time,
    )?;
    let mut t = 0;
    while !done && t < spec.horizon {
        t += 1;
        config = step(&config, spec)?;
        done = record(
            &config,
            t,
            &mut diameters,
            &mut cluster_counts,
            &mut sync_time,
            &mut hit_time,
        )?;
    }
    Ok(RunRecord {
        diameters,
        cluster_counts,
        sync_time,
        hit_time,
        final_config: config,
    })
}

/// Summary statistics of an ensemble of seeded runs.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub trials: usize,
    pub synced_fraction: f64,
    pub hit_fraction: f64,
    pub mean_hit_time: Option<f64>,
    pub median_hit_time: Option<f64>,
    pub mean_sync_time: Option<f64>,
}

/// Runs `trials` independent trajectories with per-trial seeds derived
/// deterministically from the master seed. Results are bit-identical
/// regardless of thread count.
pub fn ensemble(
    spec: &SimulationSpec,
    trials: usize,
    master_seed: u64,
) -> Result<(Vec<RunRecord>, EnsembleSummary), SimError> {
    let records: Result<Vec<RunRecord>, SimError> = (0..trials)
        .into_par_iter()
        .map(|i| run(spec, derive_seed(master_seed, i as u64)))
        .collect();
    let records = records?;
    let summary = summarize(&records);
    Ok((records, summary))
}

fn summarize(records: &[RunRecord]) -> EnsembleSummary {
    let trials = records.len();
    let synced = records.iter().filter(|r| r.sync_time.is_some()).count();
    let mut hits: Vec<f64> = records
        .iter()
        .filter_map(|r| r.hit_time.map(|t| t as f64))
        .collect();
    hits.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean_hit = if hits.is_empty() {
        None
    } else {
        Some(hits.iter().sum::<f64>() / hits.len() as f64)
    };
    let median_hit = if hits.is_empty() {
        None
    } else {
        Some(hits[hits.len() / 2])
    };
    let syncs: Vec<f64> = records
        .iter()
        .filter_map(|r| r.sync_time.map(|t| t as f64))
        .collect();
    let mean_sync = if syncs.is_empty() {
        None
    } else {
        Some(syncs.iter().sum::<f64>() / syncs.len() as f64)
    };
    EnsembleSummary {
        trials,
        synced_fraction: synced as f64 / trials.max(1) as f64,
        hit_fraction: hits.len() as f64 / trials.max(1) as f64,
        mean_hit_time: mean_hit,
        median_hit_time: median_hit,
        mean_sync_time: mean_sync,
    }
}

pub(crate) fn topology_1d(spec: &SimulationSpec) -> Result<Topology, SimError> {
    if spec.space.dim != 1 {
        return Err(SimError::UnsupportedInMode {
            mode: "exact",
            what: "one-dimensional spaces",
        });
    }
    Ok(spec.space.topology)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::doubling;
    use approx::assert_abs_diff_eq;

    fn rigid_spec(eps: f64, n: usize) -> SimulationSpec {
        SimulationSpec {
            space: Space::circle(),
            maps: vec![doubling()],
            rule: InteractionRule::threshold(eps, 0.0),
            init: InitialCondition::Random { n },
            horizon: DEFAULT_HORIZON,
            sync_tolerance: DEFAULT_SYNC_TOLERANCE,
            arithmetic: Arithmetic::Double,
        }
    }

    #[test]
    fn step_composition_example() {
        // Q takes (0.10, 0.105) to the common center, T doubles it
        let spec = SimulationSpec {
            space: Space::interval(),
            init: InitialCondition::Fixed(
                Configuration::from_scalars(&[0.10, 0.105], &Space::interval()).unwrap(),
            ),
            rule: InteractionRule::threshold(0.01, 0.0),
            ..rigid_spec(0.01, 2)
        };
        let c0 = Configuration::from_scalars(&[0.10, 0.105], &Space::interval()).unwrap();
        let c1 = step(&c0, &spec).unwrap();
        assert_abs_diff_eq!(c1.position(0)[0], 0.205, epsilon = 1e-15);
        assert_eq!(c1.position(0)[0], c1.position(1)[0]);
    }

    #[test]
    fn gamma_one_step_is_free_motion() {
        let s = Space::circle();
        let c0 = Configuration::from_scalars(&[0.10, 0.105], &s).unwrap();
        let mut spec = rigid_spec(0.01, 2);
        spec.rule.gamma = 1.0;
        spec.init = InitialCondition::Fixed(c0.clone());
        let c1 = step(&c0, &spec).unwrap();
        assert_eq!(c1.position(0)[0], doubling().eval(0.10));
        assert_eq!(c1.position(1)[0], doubling().eval(0.105));
    }

    #[test]
    fn diagonal_is_invariant() {
        let s = Space::circle();
        let c0 = Configuration::from_scalars(&[0.37, 0.37, 0.37], &s).unwrap();
        let mut spec = rigid_spec(0.01, 3);
        spec.init = InitialCondition::Fixed(c0.clone());
        let mut c = c0;
        for _ in 0..20 {
            c = step(&c, &spec).unwrap();
            assert_eq!(c.position(0), c.position(1));
            assert_eq!(c.position(0), c.position(2));
        }
    }

    #[test]
    fn start_on_diagonal_syncs_at_zero() {
        let s = Space::circle();
        let mut spec = rigid_spec(0.01, 2);
        spec.init = InitialCondition::Fixed(Configuration::from_scalars(&[0.4, 0.4], &s).unwrap());
        let rec = run(&spec, 0).unwrap();
        assert_eq!(rec.sync_time, Some(0));
        assert_eq!(rec.diameters.len(), 1);
    }

    #[test]
    fn rigid_absorption_pair() {
        // once within eps the pair collapses and stays collapsed
        let mut spec = rigid_spec(0.01, 2);
        spec.horizon = 2000;
        let rec = run(&spec, 12345).unwrap();
        let hit = rec.hit_time.expect("pair hits the diagonal neighborhood");
        let sync = rec.sync_time.expect("pair synchronizes");
        assert!(sync <= hit + 1);
        for &d in &rec.diameters[sync..] {
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn no_interaction_equivalence_until_hit() {
        // before the first hit, the rigid trajectory equals free motion
        let mut rigid = rigid_spec(0.01, 2);
        rigid.horizon = 500;
        let seed = 999;
        let rec = run(&rigid, seed).unwrap();
        let hit = rec.hit_time.unwrap_or(rec.diameters.len() - 1);
        let mut free = rigid.clone();
        free.rule.gamma = 1.0;
        let free_rec = run(&free, seed).unwrap();
        for t in 0..=hit {
            assert_eq!(rec.diameters[t], free_rec.diameters[t]);
        }
    }

    #[test]
    fn ensemble_deterministic_across_calls() {
        let mut spec = rigid_spec(0.01, 2);
        spec.horizon = 5000;
        let (rec_a, sum_a) = ensemble(&spec, 32, 77).unwrap();
        let (rec_b, sum_b) = ensemble(&spec, 32, 77).unwrap();
        assert_eq!(sum_a.synced_fraction, sum_b.synced_fraction);
        assert_eq!(sum_a.mean_hit_time, sum_b.mean_hit_time);
        for (a, b) in rec_a.iter().zip(&rec_b) {
            assert_eq!(a.diameters, b.diameters);
            assert_eq!(a.final_config, b.final_config);
        }
    }

    #[test]
    fn ensemble_single_trial_matches_run() {
        let mut spec = rigid_spec(0.01, 2);
        spec.horizon = 5000;
        let (recs, _) = ensemble(&spec, 1, 42).unwrap();
        let direct = run(&spec, derive_seed(42, 0)).unwrap();
        assert_eq!(recs[0].diameters, direct.diameters);
    }

    #[test]
    fn eps_zero_never_syncs() {
        // horizon short of the f64 mantissa depth: past ~53 doublings the
        // positions lose all low bits and collapse to 0 as a pure
        // floating-point artifact
        let mut spec = rigid_spec(0.0, 2);
        spec.horizon = 30;
        let (_, summary) = ensemble(&spec, 16, 3).unwrap();
        assert_eq!(summary.synced_fraction, 0.0);
    }

    #[test]
    fn float_and_exact_runners_agree() {
        // the same soft threshold trajectory through the independent f64
        // and rational implementations
        let s = Space::circle();
        let start = Configuration::from_scalars(&[0.30, 0.3025, 0.3075], &s).unwrap();
        let mut spec = rigid_spec(0.01, 3);
        spec.rule.gamma = 0.25;
        spec.horizon = 25;
        spec.init = InitialCondition::Fixed(start);
        let float_rec = run(&spec, 0).unwrap();
        spec.arithmetic = Arithmetic::Rational;
        let exact_rec = run(&spec, 0).unwrap();
        assert_eq!(float_rec.diameters.len(), exact_rec.diameters.len());
        for (a, b) in float_rec.diameters.iter().zip(&exact_rec.diameters) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert_eq!(float_rec.cluster_counts, exact_rec.cluster_counts);
    }

    #[test]
    fn two_dimensional_product_dynamics() {
        // coordinate-wise doubling on the torus with a rigid threshold rule
        let space = Space::new(crate::space::Topology::Circle, 2).unwrap();
        let c0 = Configuration::new(vec![vec![0.30, 0.70], vec![0.304, 0.703]], &space).unwrap();
        let spec = SimulationSpec {
            space,
            maps: vec![doubling()],
            rule: InteractionRule::threshold(0.01, 0.0),
            init: InitialCondition::Fixed(c0),
            horizon: 10,
            sync_tolerance: 0.0,
            arithmetic: Arithmetic::Double,
        };
        let rec = run(&spec, 0).unwrap();
        // max-metric diameter 0.004 <= eps: the pair collapses in one step
        assert_eq!(rec.hit_time, Some(0));
        assert_eq!(rec.sync_time, Some(1));
    }

    #[test]
    fn bad_horizon_rejected() {
        let mut spec = rigid_spec(0.01, 2);
        spec.horizon = 0;
        assert!(matches!(run(&spec, 0), Err(SimError::BadHorizon)));
    }
}
