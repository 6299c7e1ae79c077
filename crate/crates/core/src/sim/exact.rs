//! Exact rational arithmetic runner for one-dimensional threshold
//! dynamics. Positions, distances and the interaction averaging are all
//! `BigRational`, so set-membership and conservation statements can be
//! checked without floating-point slack.

use super::{RunRecord, SimError, SimulationSpec};
use crate::interact::InteractionMode;
use crate::maps::PiecewiseAffineMap;
use crate::numutil::{rat_int, rat_to_f64, ratio};
use crate::space::{Configuration, Topology};
use crate::Rat;
use num_traits::{Signed, Zero};

pub fn interval_dist_rat(x: &Rat, y: &Rat) -> Rat {
    (x - y).abs()
}

pub fn circle_dist_rat(x: &Rat, y: &Rat) -> Rat {
    let d = (x - y).abs();
    let wrapped = Rat::from_integer(1.into()) - &d;
    if d <= wrapped {
        d
    } else {
        wrapped
    }
}

pub fn dist_rat(topology: Topology, x: &Rat, y: &Rat) -> Rat {
    match topology {
        Topology::Interval => interval_dist_rat(x, y),
        Topology::Circle => circle_dist_rat(x, y),
    }
}

/// Signed circle displacement from `from` to `to`, in `(-1/2, 1/2]`.
fn signed_disp_rat(topology: Topology, from: &Rat, to: &Rat) -> Rat {
    let mut d = to - from;
    if topology == Topology::Circle {
        let half = ratio(1, 2);
        if d > half {
            d -= rat_int(1);
        } else if d <= -half {
            d += rat_int(1);
        }
    }
    d
}

fn wrap_rat(topology: Topology, x: Rat) -> Rat {
    match topology {
        Topology::Interval => x,
        Topology::Circle => {
            let one = rat_int(1);
            let mut y = x;
            while y < Rat::zero() {
                y += &one;
            }
            while y >= one {
                y -= &one;
            }
            y
        }
    }
}

pub fn diameter_rat(positions: &[Rat], topology: Topology) -> Rat {
    let mut d = Rat::zero();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let dd = dist_rat(topology, &positions[i], &positions[j]);
            if dd > d {
                d = dd;
            }
        }
    }
    d
}

/// Number of chain clusters at threshold `eps`, by exact distance
/// comparisons.
pub fn cluster_count_rat(positions: &[Rat], topology: Topology, eps: &Rat) -> usize {
    let n = positions.len();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if dist_rat(topology, &positions[i], &positions[j]) <= *eps && label[i] != label[j]
                {
                    let m = label[i].min(label[j]);
                    label[i] = m;
                    label[j] = m;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut roots: Vec<usize> = label;
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Threshold interaction, exact: each particle moves toward the center
/// of gravity of the particles within `eps` with self-weight `gamma`.
pub fn interaction_step(positions: &[Rat], topology: Topology, eps: &Rat, gamma: &Rat) -> Vec<Rat> {
    let n = positions.len();
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut set = vec![i];
        for j in 0..n {
            if j != i && dist_rat(topology, &positions[i], &positions[j]) <= *eps {
                set.push(j);
            }
        }
        set.sort_unstable();
        sets.push(set);
    }
    let mut centers: std::collections::BTreeMap<Vec<usize>, Rat> =
        std::collections::BTreeMap::new();
    for set in &sets {
        if set.len() > 1 && !centers.contains_key(set) {
            let anchor = &positions[set[0]];
            let sum: Rat = set
                .iter()
                .map(|&j| anchor + signed_disp_rat(topology, anchor, &positions[j]))
                .fold(Rat::zero(), |a, b| a + b);
            let center = wrap_rat(topology, sum / rat_int(set.len() as i64));
            centers.insert(set.clone(), center);
        }
    }
    let one = rat_int(1);
    sets.iter()
        .enumerate()
        .map(|(i, set)| {
            if set.len() == 1 {
                positions[i].clone()
            } else {
                let center = &centers[set];
                if gamma.is_zero() {
                    center.clone()
                } else {
                    let d = signed_disp_rat(topology, &positions[i], center);
                    wrap_rat(topology, &positions[i] + (&one - gamma) * d)
                }
            }
        })
        .collect()
}

pub fn map_step(positions: &[Rat], map: &PiecewiseAffineMap) -> Vec<Rat> {
    positions.iter().map(|x| map.eval_exact(x)).collect()
}

/// One full lattice step in exact arithmetic.
pub fn threshold_step(
    positions: &[Rat],
    topology: Topology,
    map: &PiecewiseAffineMap,
    eps: &Rat,
    gamma: &Rat,
) -> Vec<Rat> {
    map_step(&interaction_step(positions, topology, eps, gamma), map)
}

/// Trajectory diagnostics with exact diameters.
#[derive(Debug, Clone)]
pub struct ExactRun {
    pub diameters: Vec<Rat>,
    pub cluster_counts: Vec<usize>,
    pub sync_time: Option<usize>,
    pub hit_time: Option<usize>,
    pub final_positions: Vec<Rat>,
}

/// Runs the threshold dynamics exactly. Sync is exact coincidence for
/// `gamma = 0`, otherwise diameter at most `sync_tol`. Rigid runs stop
/// early once collapsed.
pub fn run_threshold(
    start: Vec<Rat>,
    topology: Topology,
    map: &PiecewiseAffineMap,
    eps: &Rat,
    gamma: &Rat,
    horizon: usize,
    sync_tol: &Rat,
) -> ExactRun {
    let mut positions = start;
    let mut diameters = Vec::with_capacity(horizon + 1);
    let mut cluster_counts = Vec::with_capacity(horizon + 1);
    let mut sync_time = None;
    let mut hit_time = None;
    let rigid = gamma.is_zero();
    for t in 0..=horizon {
        if t > 0 {
            positions = threshold_step(&positions, topology, map, eps, gamma);
        }
        let d = diameter_rat(&positions, topology);
        if hit_time.is_none() && d <= *eps {
            hit_time = Some(t);
        }
        let synced = if rigid { d.is_zero() } else { d <= *sync_tol };
        if sync_time.is_none() && synced {
            sync_time = Some(t);
        }
        let stop = rigid && d.is_zero();
        diameters.push(d);
        cluster_counts.push(cluster_count_rat(&positions, topology, eps));
        if stop {
            break;
        }
    }
    ExactRun {
        diameters,
        cluster_counts,
        sync_time,
        hit_time,
        final_positions: positions,
    }
}

/// Adapter used by [`super::run`] for the rational arithmetic mode:
/// supports one-dimensional threshold dynamics with a single shared map.
pub(super) fn run_spec(spec: &SimulationSpec, seed: u64) -> Result<RunRecord, SimError> {
    let topology = super::topology_1d(spec)?;
    if spec.rule.mode != InteractionMode::Threshold {
        return Err(SimError::UnsupportedInMode {
            mode: "rational",
            what: "threshold interactions",
        });
    }
    if spec.maps.len() != 1 {
        return Err(SimError::UnsupportedInMode {
            mode: "rational",
            what: "one shared map",
        });
    }
    // build the f64 initial condition, then lift it exactly
    let init = super::initial_config(spec, seed)?;
    let start: Vec<Rat> = init
        .positions()
        .iter()
        .map(|p| Rat::from_float(p[0]).unwrap())
        .collect();
    let eps = Rat::from_float(spec.rule.epsilon).unwrap();
    let gamma = Rat::from_float(spec.rule.gamma).unwrap();
    let tol = Rat::from_float(spec.sync_tolerance).unwrap();
    let exact = run_threshold(
        start,
        topology,
        &spec.maps[0],
        &eps,
        &gamma,
        spec.horizon,
        &tol,
    );
    exact_to_record(exact, spec, topology)
}

pub(super) fn exact_to_record(
    exact: ExactRun,
    spec: &SimulationSpec,
    _topology: Topology,
) -> Result<RunRecord, SimError> {
    let positions_f64: Vec<Vec<f64>> = exact
        .final_positions
        .iter()
        .map(|x| vec![rat_to_f64(x)])
        .collect();
    let final_config = Configuration::new(positions_f64, &spec.space)?;
    Ok(RunRecord {
        diameters: exact.diameters.iter().map(rat_to_f64).collect(),
        cluster_counts: exact.cluster_counts,
        sync_time: exact.sync_time,
        hit_time: exact.hit_time,
        final_config,
    })
}
