//! Lattice-quantized runner: positions live on the dyadic grid
//! `{ j / 2^bits }` and every step is followed by rounding to the nearest
//! grid point (ties up). The step itself is computed exactly in rational
//! arithmetic, so the quantization is the only source of round-off and is
//! fully reproducible.

use super::exact::{cluster_count_rat, diameter_rat, interaction_step, map_step};
use super::{RunRecord, SimError, SimulationSpec};
use crate::interact::InteractionMode;
use crate::maps::PiecewiseAffineMap;
use crate::numutil::ratio;
use crate::space::{Configuration, Topology};
use crate::Rat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

/// Rounds to the nearest multiple of `2^-bits`, ties toward the larger
/// value, reduced mod 1.
pub fn quantize(x: &Rat, bits: u32) -> Rat {
    let scale = BigInt::from(1u64) << bits;
    let scaled = x * Rat::from_integer(scale.clone());
    // floor(scaled + 1/2) rounds half up
    let q = (scaled + ratio(1, 2)).floor().to_integer();
    let q = q.mod_floor(&scale);
    Rat::new(q, scale)
}

/// Quantized trajectory diagnostics; positions are lattice points.
#[derive(Debug, Clone)]
pub struct QuantizedRun {
    pub diameters: Vec<f64>,
    pub cluster_counts: Vec<usize>,
    pub sync_time: Option<usize>,
    pub hit_time: Option<usize>,
    pub final_positions: Vec<Rat>,
}

/// Runs threshold dynamics on the `2^bits` lattice: exact interaction and
/// map evaluation, then rounding of every coordinate.
pub fn run_threshold_quantized(
    start: Vec<Rat>,
    topology: Topology,
    map: &PiecewiseAffineMap,
    eps: &Rat,
    gamma: &Rat,
    horizon: usize,
    bits: u32,
) -> Result<QuantizedRun, SimError> {
    if bits == 0 || bits > 52 {
        return Err(SimError::BadQuantization(bits));
    }
    let mut positions: Vec<Rat> = start.iter().map(|x| quantize(x, bits)).collect();
    let mut diameters = Vec::with_capacity(horizon + 1);
    let mut cluster_counts = Vec::with_capacity(horizon + 1);
    let mut sync_time = None;
    let mut hit_time = None;
    let rigid = gamma.is_zero();
    for t in 0..=horizon {
        if t > 0 {
            let stepped = map_step(&interaction_step(&positions, topology, eps, gamma), map);
            positions = stepped.iter().map(|x| quantize(x, bits)).collect();
        }
        let d = diameter_rat(&positions, topology);
        if hit_time.is_none() && d <= *eps {
            hit_time = Some(t);
        }
        if sync_time.is_none() && d.is_zero() {
            sync_time = Some(t);
        }
        let stop = rigid && d.is_zero();
        diameters.push(d.to_f64().unwrap_or(f64::NAN));
        cluster_counts.push(cluster_count_rat(&positions, topology, eps));
        if stop {
            break;
        }
    }
    Ok(QuantizedRun {
        diameters,
        cluster_counts,
        sync_time,
        hit_time,
        final_positions: positions,
    })
}

pub(super) fn run_spec(spec: &SimulationSpec, seed: u64, bits: u32) -> Result<RunRecord, SimError> {
    let topology = super::topology_1d(spec)?;
    if spec.rule.mode != InteractionMode::Threshold {
        return Err(SimError::UnsupportedInMode {
            mode: "quantized",
            what: "threshold interactions",
        });
    }
    if spec.maps.len() != 1 {
        return Err(SimError::UnsupportedInMode {
            mode: "quantized",
            what: "one shared map",
        });
    }
    let init = super::initial_config(spec, seed)?;
    let start: Vec<Rat> = init
        .positions()
        .iter()
        .map(|p| Rat::from_float(p[0]).unwrap())
        .collect();
    let eps = Rat::from_float(spec.rule.epsilon).unwrap();
    let gamma = Rat::from_float(spec.rule.gamma).unwrap();
    let q = run_threshold_quantized(
        start,
        topology,
        &spec.maps[0],
        &eps,
        &gamma,
        spec.horizon,
        bits,
    )?;
    let final_config = Configuration::new(
        q.final_positions
            .iter()
            .map(|x| vec![x.to_f64().unwrap()])
            .collect(),
        &spec.space,
    )?;
    Ok(RunRecord {
        diameters: q.diameters,
        cluster_counts: q.cluster_counts,
        sync_time: q.sync_time,
        hit_time: q.hit_time,
        final_config,
    })
}

/// True when `x` is a multiple of `2^-bits`.
pub fn on_lattice(x: &Rat, bits: u32) -> bool {
    (x * Rat::from_integer(BigInt::from(1u64) << bits)).is_integer()
}
