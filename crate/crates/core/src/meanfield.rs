//! Nonlinear mean-field transfer operator on the circle.
//!
//! One step first pushes the measure through the local map's transfer
//! operator and then transports it through the measure-dependent
//! interaction `x -> gamma x + (1-gamma) * barycenter(mu on B_eps(x))`,
//! where the conditioning measure is the already-pushed one.
//!
//! Grid measures and atomic measures are kept as separate representations
//! (mixtures are rejected): grid transport subdivides every bin into
//! `resolution` samples, moves each sample and re-bins it; atomic
//! measures are moved exactly in rational arithmetic, which keeps
//! measures on periodic orbits invariant to exact equality.

use crate::maps::PiecewiseAffineMap;
use crate::measure::{Boundary, GridMeasure, MeasureError};
use crate::numutil::{rat_int, rat_to_f64, ratio};
use crate::sim::exact::circle_dist_rat;
use crate::ulam::{ulam, OperatorError, UlamOperator};
use crate::Rat;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error("epsilon {0} outside (0, 1/4): circle arcs must be unambiguous")]
    BadEpsilon(f64),
    #[error("gamma {0} outside [0,1]")]
    BadGamma(f64),
    #[error("resolution must be positive")]
    BadResolution,
    #[error("measure of the arc around {0} vanishes; the operator is undefined there")]
    EmptyArc(f64),
    #[error("atom masses must be positive and positions in [0,1)")]
    BadAtom,
    #[error("atoms at {0} and {1} are closer than 2 epsilon without coinciding")]
    AtomsTooClose(f64, f64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// A purely atomic measure with exact rational positions and masses.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<(Rat, Rat)>,
}

impl AtomicMeasure {
    /// Positions must lie in `[0,1)` with positive masses; atoms at the
    /// same position are merged.
    pub fn new(mut atoms: Vec<(Rat, Rat)>) -> Result<Self, MeanFieldError> {
        if atoms.is_empty() {
            return Err(MeanFieldError::BadAtom);
        }
        for (p, m) in &atoms {
            if *p < Rat::zero() || *p >= Rat::one() || *m <= Rat::zero() {
                return Err(MeanFieldError::BadAtom);
            }
        }
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Rat, Rat)> = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            match merged.last_mut() {
                Some((lp, lm)) if *lp == p => *lm = &*lm + &m,
                _ => merged.push((p, m)),
            }
        }
        Ok(AtomicMeasure { atoms: merged })
    }

    pub fn from_f64(atoms: &[(f64, f64)]) -> Result<Self, MeanFieldError> {
        let conv: Option<Vec<(Rat, Rat)>> = atoms
            .iter()
            .map(|&(p, m)| Some((Rat::from_float(p)?, Rat::from_float(m)?)))
            .collect();
        Self::new(conv.ok_or(MeanFieldError::BadAtom)?)
    }

    /// The uniform measure on the forward orbit of `x0` under `map`,
    /// assuming (and verifying) that the orbit closes after `period`
    /// steps.
    pub fn periodic_orbit(
        x0: &Rat,
        map: &PiecewiseAffineMap,
        period: usize,
    ) -> Result<Self, MeanFieldError> {
        let mut atoms = Vec::with_capacity(period);
        let mass = rat_int(period as i64).recip();
        let mut x = x0.clone();
        for _ in 0..period {
            atoms.push((x.clone(), mass.clone()));
            x = map.eval_exact(&x);
        }
        if x != *x0 {
            return Err(MeanFieldError::BadAtom);
        }
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[(Rat, Rat)] {
        &self.atoms
    }

    pub fn mass(&self) -> Rat {
        self.atoms
            .iter()
            .map(|(_, m)| m.clone())
            .fold(Rat::zero(), |a, b| a + b)
    }

    /// Total-variation distance between the atom lists.
    pub fn tv_distance(&self, other: &Self) -> Rat {
        let mut dist = Rat::zero();
        let mut i = 0;
        let mut j = 0;
        while i < self.atoms.len() || j < other.atoms.len() {
            let (pi, pj) = (self.atoms.get(i), other.atoms.get(j));
            match (pi, pj) {
                (Some((p, m)), Some((q, w))) => {
                    if p == q {
                        dist += (m - w).abs();
                        i += 1;
                        j += 1;
                    } else if p < q {
                        dist += m.abs();
                        i += 1;
                    } else {
                        dist += w.abs();
                        j += 1;
                    }
                }
                (Some((_, m)), None) => {
                    dist += m.abs();
                    i += 1;
                }
                (None, Some((_, w))) => {
                    dist += w.abs();
                    j += 1;
                }
                (None, None) => break,
            }
        }
        dist
    }
}

/// Parameters of the mean-field operator.
#[derive(Debug, Clone)]
pub struct MeanFieldParams {
    pub epsilon: f64,
    pub gamma: f64,
    pub map: PiecewiseAffineMap,
}

impl MeanFieldParams {
    pub fn new(epsilon: f64, gamma: f64, map: PiecewiseAffineMap) -> Result<Self, MeanFieldError> {
        if !(epsilon > 0.0 && epsilon < 0.25) {
            return Err(MeanFieldError::BadEpsilon(epsilon));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(MeanFieldError::BadGamma(gamma));
        }
        Ok(MeanFieldParams {
            epsilon,
            gamma,
            map,
        })
    }

    /// Default operator: doubling map.
    pub fn doubling(epsilon: f64, gamma: f64) -> Result<Self, MeanFieldError> {
        Self::new(epsilon, gamma, crate::maps::doubling())
    }
}

/// Moves one point: `gamma x + (1-gamma) * barycenter` of the grid
/// measure on the arc `[x - eps, x + eps]`, computed in the chart
/// centered at `x` by exact partial-bin integration.
pub fn point_update_grid(
    x: f64,
    mu: &GridMeasure<f64>,
    params: &MeanFieldParams,
) -> Result<f64, MeanFieldError> {
    let n = mu.n_bins() as f64;
    let eps = params.epsilon;
    let lo = x - eps;
    let hi = x + eps;
    let k_lo = (lo * n).floor() as i64;
    let k_hi = (hi * n).ceil() as i64;
    let mut mass = 0.0;
    let mut moment = 0.0;
    for k in k_lo..k_hi {
        let cell_lo = k as f64 / n;
        let cell_hi = (k + 1) as f64 / n;
        let a = cell_lo.max(lo);
        let b = cell_hi.min(hi);
        if a >= b {
            continue;
        }
        let bin = (k.rem_euclid(mu.n_bins() as i64)) as usize;
        let f = *mu.density(bin);
        let len = b - a;
        mass += f * len;
        moment += f * len * ((a + b) / 2.0 - x);
    }
    if mass <= 0.0 {
        return Err(MeanFieldError::EmptyArc(x));
    }
    Ok(crate::space::wrap_unit(
        x + (1.0 - params.gamma) * moment / mass,
    ))
}

/// Exact point update conditioned on an atomic measure.
pub fn point_update_atomic(
    x: &Rat,
    mu: &AtomicMeasure,
    eps: &Rat,
    gamma: &Rat,
) -> Result<Rat, MeanFieldError> {
    let half = ratio(1, 2);
    let mut mass = Rat::zero();
    let mut moment = Rat::zero();
    for (p, m) in &mu.atoms {
        if circle_dist_rat(x, p) <= *eps {
            let mut d = p - x;
            if d > half {
                d -= rat_int(1);
            } else if d < -half.clone() {
                d += rat_int(1);
            }
            mass += m;
            moment += m * d;
        }
    }
    if mass <= Rat::zero() {
        return Err(MeanFieldError::EmptyArc(rat_to_f64(x)));
    }
    let mut y = x + (Rat::one() - gamma) * moment / mass;
    let one = Rat::one();
    while y < Rat::zero() {
        y += &one;
    }
    while y >= one {
        y -= &one;
    }
    Ok(y)
}

/// One mean-field step of a grid measure: Ulam push through the local
/// map, then sample transport at `resolution` samples per bin.
pub fn step_grid(
    mu: &GridMeasure<f64>,
    params: &MeanFieldParams,
    resolution: usize,
) -> Result<GridMeasure<f64>, MeanFieldError> {
    let op = ulam(&params.map, mu.n_bins())?;
    step_grid_with_op(mu, params, resolution, &op)
}

fn step_grid_with_op(
    mu: &GridMeasure<f64>,
    params: &MeanFieldParams,
    resolution: usize,
    op: &UlamOperator,
) -> Result<GridMeasure<f64>, MeanFieldError> {
    if resolution == 0 {
        return Err(MeanFieldError::BadResolution);
    }
    let pushed = op.push_f64(mu)?;
    let n = pushed.n_bins();
    let mut acc = vec![0.0f64; n];
    for bin in 0..n {
        let bin_mass = pushed.density(bin) / n as f64;
        if bin_mass == 0.0 {
            continue;
        }
        let sample_mass = bin_mass / resolution as f64;
        for s in 0..resolution {
            let pos = (bin as f64 + (s as f64 + 0.5) / resolution as f64) / n as f64;
            let moved = point_update_grid(pos, &pushed, params)?;
            let target = ((moved * n as f64).floor() as usize).min(n - 1);
            acc[target] += sample_mass;
        }
    }
    let densities = acc.into_iter().map(|m| m * n as f64).collect();
    Ok(GridMeasure::new(densities, Boundary::Periodic)?)
}

/// One mean-field step of an atomic measure, exact. Requires distinct
/// atoms (after the map) to be farther than `2 eps` apart so the arcs are
/// unambiguous.
pub fn step_atomic(
    mu: &AtomicMeasure,
    params: &MeanFieldParams,
) -> Result<AtomicMeasure, MeanFieldError> {
    let eps = Rat::from_float(params.epsilon).ok_or(MeanFieldError::BadEpsilon(params.epsilon))?;
    let gamma = Rat::from_float(params.gamma).ok_or(MeanFieldError::BadGamma(params.gamma))?;
    // direct image under the local map, merging collisions
    let pushed = AtomicMeasure::new(
        mu.atoms
            .iter()
            .map(|(p, m)| (params.map.eval_exact(p), m.clone()))
            .collect(),
    )?;
    let two_eps = &eps * rat_int(2);
    for i in 0..pushed.atoms.len() {
        for j in (i + 1)..pushed.atoms.len() {
            let d = circle_dist_rat(&pushed.atoms[i].0, &pushed.atoms[j].0);
            if d <= two_eps && !d.is_zero() {
                return Err(MeanFieldError::AtomsTooClose(
                    rat_to_f64(&pushed.atoms[i].0),
                    rat_to_f64(&pushed.atoms[j].0),
                ));
            }
        }
    }
    let moved: Result<Vec<(Rat, Rat)>, MeanFieldError> = pushed
        .atoms
        .iter()
        .map(|(p, m)| Ok((point_update_atomic(p, &pushed, &eps, &gamma)?, m.clone())))
        .collect();
    AtomicMeasure::new(moved?)
}

/// Trajectory of a grid measure under repeated mean-field steps, with the
/// weak distance between successive iterates.
#[derive(Debug, Clone, Serialize)]
pub struct GridTrajectory {
    pub steps: usize,
    pub successive_weak_distances: Vec<f64>,
    #[serde(skip)]
    pub measures: Vec<GridMeasure<f64>>,
}

pub fn iterate_grid(
    mu0: &GridMeasure<f64>,
    params: &MeanFieldParams,
    steps: usize,
    resolution: usize,
) -> Result<GridTrajectory, MeanFieldError> {
    let op = ulam(&params.map, mu0.n_bins())?;
    let mut measures = vec![mu0.clone()];
    let mut dists = Vec::with_capacity(steps);
    for _ in 0..steps {
        let next = step_grid_with_op(measures.last().unwrap(), params, resolution, &op)?;
        dists.push(next.weak_distance(measures.last().unwrap())?);
        measures.push(next);
    }
    Ok(GridTrajectory {
        steps,
        successive_weak_distances: dists,
        measures,
    })
}

/// Trajectory of an atomic measure; distances are total-variation.
#[derive(Debug, Clone)]
pub struct AtomicTrajectory {
    pub successive_tv_distances: Vec<Rat>,
    pub measures: Vec<AtomicMeasure>,
}

pub fn iterate_atomic(
    mu0: &AtomicMeasure,
    params: &MeanFieldParams,
    steps: usize,
) -> Result<AtomicTrajectory, MeanFieldError> {
    let mut measures = vec![mu0.clone()];
    let mut dists = Vec::with_capacity(steps);
    for _ in 0..steps {
        let next = step_atomic(measures.last().unwrap(), params)?;
        dists.push(next.tv_distance(measures.last().unwrap()));
        measures.push(next);
    }
    Ok(AtomicTrajectory {
        successive_tv_distances: dists,
        measures,
    })
}
