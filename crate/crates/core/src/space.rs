//! Phase spaces, configurations and geometric primitives.
//!
//! Supported spaces are the unit interval `[0,1)`, the unit circle
//! (interval with wraparound metric) and their finite coordinate-wise
//! products. The point metric is the maximum over coordinates and the
//! configuration metric is the maximum over coordinates and particles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {value} outside [0,1)")]
    InvalidCoordinate { value: f64 },
    #[error("empty point set")]
    EmptyPointSet,
    #[error("circle point set spread {spread} >= 1/2: no unambiguous chart")]
    ChartAmbiguity { spread: f64 },
    #[error("space dimension must be positive")]
    ZeroDimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Interval,
    Circle,
}

/// A product phase space: `dim` copies of the interval or circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    pub topology: Topology,
    pub dim: usize,
}

impl Space {
    pub fn new(topology: Topology, dim: usize) -> Result<Self, SpaceError> {
        if dim == 0 {
            return Err(SpaceError::ZeroDimension);
        }
        Ok(Space { topology, dim })
    }

    pub fn interval() -> Self {
        Space {
            topology: Topology::Interval,
            dim: 1,
        }
    }

    pub fn circle() -> Self {
        Space {
            topology: Topology::Circle,
            dim: 1,
        }
    }
}

/// An ordered list of particle positions; the state of the lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    positions: Vec<Vec<f64>>,
}

impl Configuration {
    pub fn new(positions: Vec<Vec<f64>>, space: &Space) -> Result<Self, SpaceError> {
        if positions.is_empty() {
            return Err(SpaceError::EmptyPointSet);
        }
        for p in &positions {
            check_point(p, space)?;
        }
        Ok(Configuration { positions })
    }

    /// One-dimensional convenience constructor.
    pub fn from_scalars(xs: &[f64], space: &Space) -> Result<Self, SpaceError> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), space)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i]
    }
}

pub(crate) fn check_point(p: &[f64], space: &Space) -> Result<(), SpaceError> {
    if p.len() != space.dim {
        return Err(SpaceError::DimensionMismatch {
            expected: space.dim,
            got: p.len(),
        });
    }
    for &c in p {
        if !(0.0..1.0).contains(&c) {
            return Err(SpaceError::InvalidCoordinate { value: c });
        }
    }
    Ok(())
}

/// Per-coordinate distance on the interval.
#[inline]
pub fn interval_coord_dist(x: f64, y: f64) -> f64 {
    (x - y).abs()
}

/// Per-coordinate distance on the circle (wraparound metric).
#[inline]
pub fn circle_coord_dist(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

/// Signed circle displacement from `from` to `to`, in `(-1/2, 1/2]`.
#[inline]
pub fn circle_signed_disp(from: f64, to: f64) -> f64 {
    let mut d = to - from;
    if d > 0.5 {
        d -= 1.0;
    } else if d <= -0.5 {
        d += 1.0;
    }
    d
}

#[inline]
pub(crate) fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Metric between two points: max over per-coordinate distances.
pub fn dist(space: &Space, x: &[f64], y: &[f64]) -> Result<f64, SpaceError> {
    if x.len() != y.len() {
        return Err(SpaceError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() != space.dim {
        return Err(SpaceError::DimensionMismatch {
            expected: space.dim,
            got: x.len(),
        });
    }
    let coord = match space.topology {
        Topology::Interval => interval_coord_dist,
        Topology::Circle => circle_coord_dist,
    };
    Ok(x.iter()
        .zip(y)
        .map(|(&a, &b)| coord(a, b))
        .fold(0.0, f64::max))
}

/// Largest pairwise distance in the configuration; 0 for a single particle.
pub fn diameter(config: &Configuration, space: &Space) -> Result<f64, SpaceError> {
    let pts = config.positions();
    let mut d = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            d = f64::max(d, dist(space, &pts[i], &pts[j])?);
        }
    }
    Ok(d)
}

/// Arithmetic mean of a point set.
///
/// On the circle each coordinate is lifted to the chart anchored at the
/// first point (others shifted into `(anchor-1/2, anchor+1/2]`); a spread
/// of 1/2 or more leaves the chart ambiguous and is an error.
pub fn center_of_gravity(points: &[Vec<f64>], space: &Space) -> Result<Vec<f64>, SpaceError> {
    if points.is_empty() {
        return Err(SpaceError::EmptyPointSet);
    }
    for p in points {
        check_point(p, space)?;
    }
    let n = points.len() as f64;
    let mut out = Vec::with_capacity(space.dim);
    for c in 0..space.dim {
        match space.topology {
            Topology::Interval => {
                out.push(points.iter().map(|p| p[c]).sum::<f64>() / n);
            }
            Topology::Circle => {
                let anchor = points[0][c];
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut sum = 0.0;
                for p in points {
                    let lifted = anchor + circle_signed_disp(anchor, p[c]);
                    lo = lo.min(lifted);
                    hi = hi.max(lifted);
                    sum += lifted;
                }
                if hi - lo >= 0.5 {
                    return Err(SpaceError::ChartAmbiguity { spread: hi - lo });
                }
                out.push(wrap_unit(sum / n));
            }
        }
    }
    Ok(out)
}

/// True iff the configuration lies within `eps` of the diagonal, i.e. its
/// diameter is at most `eps`.
pub fn in_diagonal_neighborhood(
    config: &Configuration,
    space: &Space,
    eps: f64,
) -> Result<bool, SpaceError> {
    Ok(diameter(config, space)? <= eps)
}
