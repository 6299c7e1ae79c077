//! Signed measures on a uniform grid over `[0,1)` represented by
//! piecewise-constant densities, with the two variation functionals and
//! the weak (L1) norm.
//!
//! For this class the test-function suprema defining the norms have
//! closed forms: under zero extension the strong variation is
//! `|f_1| + sum |f_{i+1} - f_i| + |f_n|`, the inner variation drops the
//! boundary terms, and the weak norm is `sum |f_i| / n`. With the
//! periodic convention both variations equal the cyclic jump sum.
//!
//! The scalar type is generic so the same code serves f64 measures and
//! exact rational certification measures.

use crate::space::{circle_coord_dist, interval_coord_dist, Space, Topology};
use num_traits::{FromPrimitive, Num, Signed};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("measure needs at least one bin")]
    Empty,
    #[error("bin count mismatch: {0} vs {1}")]
    BinMismatch(usize, usize),
    #[error("bin range {0}..{1} out of bounds for {2} bins")]
    BadBinRange(usize, usize, usize),
    #[error("interval [{0}, {1}] is not aligned to the {2}-bin grid")]
    Misaligned(f64, f64, usize),
    #[error("epsilon {0} does not tile the {1}-bin grid into whole blocks")]
    BadBlockSize(f64, usize),
    #[error("operation requires a probabilistic measure")]
    NotProbabilistic,
}

/// Value taken by the density outside the sampled bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Density continues as zero outside `[0,1]` (interval convention).
    ZeroExtension,
    /// Bins wrap around (circle convention).
    Periodic,
}

/// Scalar types usable as density coefficients.
pub trait Coeff: Clone + Num + Signed + FromPrimitive + PartialOrd {}
impl<T: Clone + Num + Signed + FromPrimitive + PartialOrd> Coeff for T {}

/// A signed measure with piecewise-constant density on `n` uniform bins;
/// bin `i` covers `[i/n, (i+1)/n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure<S = f64> {
    densities: Vec<S>,
    boundary: Boundary,
}

/// The three norms of a grid measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport<S> {
    /// Variation of the density extended by zero (or cyclically).
    pub strong: S,
    /// Variation ignoring the boundary values.
    pub inner: S,
    /// L1 norm of the density.
    pub weak: S,
}

impl<S: Coeff> GridMeasure<S> {
    pub fn new(densities: Vec<S>, boundary: Boundary) -> Result<Self, MeasureError> {
        if densities.is_empty() {
            return Err(MeasureError::Empty);
        }
        Ok(GridMeasure {
            densities,
            boundary,
        })
    }

    /// The Lebesgue measure: density one everywhere.
    pub fn lebesgue(n_bins: usize, boundary: Boundary) -> Self {
        GridMeasure {
            densities: vec![S::one(); n_bins],
            boundary,
        }
    }

    pub fn zero(n_bins: usize, boundary: Boundary) -> Self {
        GridMeasure {
            densities: vec![S::zero(); n_bins],
            boundary,
        }
    }

    /// Unit mass concentrated (uniformly) in a single bin.
    pub fn point_mass(n_bins: usize, bin: usize, boundary: Boundary) -> Self {
        let mut d = vec![S::zero(); n_bins];
        d[bin] = S::from_usize(n_bins).unwrap();
        GridMeasure {
            densities: d,
            boundary,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.densities.len()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn densities(&self) -> &[S] {
        &self.densities
    }

    pub fn density(&self, bin: usize) -> &S {
        &self.densities[bin]
    }

    /// Total mass `sum f_i / n`.
    pub fn mass(&self) -> S {
        let n = S::from_usize(self.n_bins()).unwrap();
        self.densities.iter().fold(S::zero(), |a, f| a + f.clone()) / n
    }

    pub fn is_probabilistic(&self) -> bool
    where
        S: PartialEq,
    {
        self.densities.iter().all(|f| *f >= S::zero()) && self.mass() == S::one()
    }

    /// Closed-form evaluation of the norms.
    pub fn norms(&self) -> NormReport<S> {
        let f = &self.densities;
        let n = S::from_usize(f.len()).unwrap();
        let inner: S = f
            .windows(2)
            .map(|w| (w[1].clone() - w[0].clone()).abs())
            .fold(S::zero(), |a, b| a + b);
        let weak: S = f.iter().map(|x| x.abs()).fold(S::zero(), |a, b| a + b) / n;
        let strong = match self.boundary {
            Boundary::ZeroExtension => {
                inner.clone() + f.first().unwrap().abs() + f.last().unwrap().abs()
            }
            Boundary::Periodic => {
                inner.clone() + (f.first().unwrap().clone() - f.last().unwrap().clone()).abs()
            }
        };
        let inner = match self.boundary {
            Boundary::ZeroExtension => inner,
            Boundary::Periodic => strong.clone(),
        };
        NormReport {
            strong,
            inner,
            weak,
        }
    }

    /// Densities zeroed outside the given union of bin ranges.
    pub fn restrict_bins(&self, ranges: &[std::ops::Range<usize>]) -> Result<Self, MeasureError> {
        let n = self.n_bins();
        for r in ranges {
            if r.end > n || r.start > r.end {
                return Err(MeasureError::BadBinRange(r.start, r.end, n));
            }
        }
        let mut d = vec![S::zero(); n];
        for r in ranges {
            for i in r.clone() {
                d[i] = self.densities[i].clone();
            }
        }
        Ok(GridMeasure {
            densities: d,
            boundary: self.boundary,
        })
    }

    /// Restriction to a bin-aligned subinterval `[a, b]`.
    pub fn restrict_interval(&self, a: f64, b: f64) -> Result<Self, MeasureError> {
        let r = self.interval_to_bins(a, b)?;
        self.restrict_bins(&[r])
    }

    pub(crate) fn interval_to_bins(
        &self,
        a: f64,
        b: f64,
    ) -> Result<std::ops::Range<usize>, MeasureError> {
        let n = self.n_bins();
        let lo = a * n as f64;
        let hi = b * n as f64;
        let (li, hi_i) = (lo.round(), hi.round());
        if (lo - li).abs() > 1e-9 || (hi - hi_i).abs() > 1e-9 || li < 0.0 || hi_i > n as f64 {
            return Err(MeasureError::Misaligned(a, b, n));
        }
        Ok(li as usize..hi_i as usize)
    }

    pub fn linear_comb(&self, a: &S, other: &Self, b: &S) -> Result<Self, MeasureError> {
        if self.n_bins() != other.n_bins() {
            return Err(MeasureError::BinMismatch(self.n_bins(), other.n_bins()));
        }
        let d = self
            .densities
            .iter()
            .zip(&other.densities)
            .map(|(x, y)| a.clone() * x.clone() + b.clone() * y.clone())
            .collect();
        Ok(GridMeasure {
            densities: d,
            boundary: self.boundary,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MeasureError> {
        self.linear_comb(&S::one(), other, &(S::zero() - S::one()))
    }
}

impl GridMeasure<f64> {
    /// L1 distance to another measure of the same resolution.
    pub fn weak_distance(&self, other: &Self) -> Result<f64, MeasureError> {
        Ok(self.sub(other)?.norms().weak)
    }
}

/// Outcome of checking the three variation inequalities for a
/// measure and a bin-aligned window `Y`:
/// (a) `V(mu|Y) <= V(mu)`,
/// (b) `V0(mu|Y) <= V(mu|Y) <= 2 V0(mu|Y) + 2 weak(mu|Y)/m(Y)`,
/// (c) `weak(mu|Y) <= m(Y) V(mu) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationReport {
    pub restriction_bounded: bool,
    pub inner_outer_sandwich: bool,
    pub weak_vs_window: bool,
}

impl VariationReport {
    pub fn all_hold(&self) -> bool {
        self.restriction_bounded && self.inner_outer_sandwich && self.weak_vs_window
    }
}

pub fn check_variation_inequalities<S: Coeff>(
    mu: &GridMeasure<S>,
    window: std::ops::Range<usize>,
) -> Result<VariationReport, MeasureError> {
    let restricted = mu.restrict_bins(std::slice::from_ref(&window))?;
    let full = mu.norms();
    let r = restricted.norms();
    let a = r.strong <= full.strong;
    let len = window.end - window.start;
    let b = if len == 0 {
        // empty window: restriction is the zero measure, all norms vanish
        true
    } else {
        let m_y = S::from_usize(len).unwrap() / S::from_usize(mu.n_bins()).unwrap();
        let two = S::one() + S::one();
        r.inner <= r.strong
            && r.strong <= two.clone() * r.inner.clone() + two * r.weak.clone() / m_y
    };
    let m_y = S::from_usize(len).unwrap() / S::from_usize(mu.n_bins()).unwrap();
    let c = r.weak <= m_y * full.strong / (S::one() + S::one());
    Ok(VariationReport {
        restriction_bounded: a,
        inner_outer_sandwich: b,
        weak_vs_window: c,
    })
}

/// Report of the diagonal-mass estimate: the partition lower bound
/// `sum_blocks (block mass)^N` against a Monte Carlo estimate of the
/// product-measure mass of the diagonal neighborhood.
#[derive(Debug, Clone, Serialize)]
pub struct DiagonalMassReport {
    pub blocks: usize,
    pub lower_sum: f64,
    pub mc_estimate: f64,
    pub mc_sigma: f64,
    pub mc_samples: usize,
    /// `blocks^(1-N)`: the uniform-measure value of the lower bound.
    pub uniform_floor: f64,
    /// `mc_estimate >= lower_sum - 3 sigma`
    pub consistent: bool,
    /// `lower_sum >= blocks^(1-N)`, the power-mean floor; equality holds
    /// exactly at the uniform measure.
    pub floor_respected: bool,
}

/// Estimates the product-measure mass of the diagonal `eps`-neighborhood
/// for `n_particles` i.i.d. draws from `mu` and compares it with the
/// partition lower bound. `eps` must tile the grid into whole blocks.
pub fn diagonal_mass_bounds<R: Rng>(
    mu: &GridMeasure<f64>,
    space: &Space,
    n_particles: usize,
    eps: f64,
    mc_samples: usize,
    rng: &mut R,
) -> Result<DiagonalMassReport, MeasureError> {
    if !mu.is_probabilistic_approx(1e-9) {
        return Err(MeasureError::NotProbabilistic);
    }
    let n = mu.n_bins();
    let per_block_f = eps * n as f64;
    let per_block = per_block_f.round() as usize;
    if per_block == 0
        || (per_block_f - per_block as f64).abs() > 1e-9
        || !n.is_multiple_of(per_block)
    {
        return Err(MeasureError::BadBlockSize(eps, n));
    }
    let blocks = n / per_block;

    // the partition bound is computed exactly: f64 densities are dyadic
    // rationals, so the block masses and their powers are exact
    let masses: Vec<f64> = mu.densities().iter().map(|f| f / n as f64).collect();
    let lower_sum = {
        use crate::Rat;
        use num_traits::{Pow, Zero};
        let n_rat = crate::numutil::rat_int(n as i64);
        let mut total = Rat::zero();
        for b in 0..blocks {
            let block_mass: Rat = mu.densities()[b * per_block..(b + 1) * per_block]
                .iter()
                .map(|&f| Rat::from_float(f).unwrap_or_else(Rat::zero))
                .fold(Rat::zero(), |a, x| a + x)
                / &n_rat;
            total += block_mass.pow(n_particles as i32);
        }
        crate::numutil::rat_to_f64(&total)
    };

    // inverse-CDF sampler over bins, uniform within a bin
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for m in &masses {
        acc += m;
        cdf.push(acc);
    }
    let coord = match space.topology {
        Topology::Interval => interval_coord_dist,
        Topology::Circle => circle_coord_dist,
    };
    let mut hits = 0usize;
    let mut draws = vec![0.0f64; n_particles];
    for _ in 0..mc_samples {
        for d in draws.iter_mut() {
            let u: f64 = rng.gen();
            let bin = cdf.partition_point(|c| *c < u).min(n - 1);
            *d = (bin as f64 + rng.gen::<f64>()) / n as f64;
        }
        let mut diam: f64 = 0.0;
        for i in 0..n_particles {
            for j in (i + 1)..n_particles {
                diam = diam.max(coord(draws[i], draws[j]));
            }
        }
        if diam <= eps {
            hits += 1;
        }
    }
    let p = hits as f64 / mc_samples as f64;
    let sigma = (p * (1.0 - p) / mc_samples as f64).sqrt();
    let uniform_floor = (blocks as f64).powi(1 - n_particles as i32);
    Ok(DiagonalMassReport {
        blocks,
        lower_sum,
        mc_estimate: p,
        mc_sigma: sigma,
        mc_samples,
        uniform_floor,
        consistent: p >= lower_sum - 3.0 * sigma,
        floor_respected: lower_sum >= uniform_floor - 1e-12,
    })
}

impl GridMeasure<f64> {
    pub fn is_probabilistic_approx(&self, tol: f64) -> bool {
        self.densities.iter().all(|&f| f >= -tol) && (self.mass() - 1.0).abs() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numutil::{rat_int, ratio};
    use crate::Rat;
    use approx::assert_abs_diff_eq;
    use num_traits::Zero;
    use rand::SeedableRng;

    #[test]
    fn lebesgue_norms() {
        let m: GridMeasure = GridMeasure::lebesgue(256, Boundary::ZeroExtension);
        let r = m.norms();
        assert_eq!(r.strong, 2.0);
        assert_eq!(r.inner, 0.0);
        assert_eq!(r.weak, 1.0);
    }

    #[test]
    fn point_mass_norms() {
        // f = [4,0,0,0] on 4 bins: V = 8, V0 = 4, weak = 1
        let m: GridMeasure = GridMeasure::point_mass(4, 0, Boundary::ZeroExtension);
        let r = m.norms();
        assert_eq!(r.strong, 8.0);
        assert_eq!(r.inner, 4.0);
        assert_eq!(r.weak, 1.0);
        assert!(m.is_probabilistic());
    }

    #[test]
    fn zero_measure_norms() {
        let m: GridMeasure = GridMeasure::zero(16, Boundary::ZeroExtension);
        let r = m.norms();
        assert_eq!((r.strong, r.inner, r.weak), (0.0, 0.0, 0.0));
    }

    #[test]
    fn periodic_norms() {
        let m = GridMeasure::new(vec![1.0, 3.0, 1.0, 1.0], Boundary::Periodic).unwrap();
        let r = m.norms();
        assert_eq!(r.strong, 4.0); // cyclic jumps 2+2+0+0
        assert_eq!(r.inner, 4.0);
    }

    #[test]
    fn rational_norms_exact() {
        let m = GridMeasure::new(
            vec![rat_int(4), Rat::zero(), Rat::zero(), Rat::zero()],
            Boundary::ZeroExtension,
        )
        .unwrap();
        let r = m.norms();
        assert_eq!(r.strong, rat_int(8));
        assert_eq!(r.inner, rat_int(4));
        assert_eq!(r.weak, rat_int(1));
        assert_eq!(m.mass(), rat_int(1));
    }

    #[test]
    #[allow(clippy::single_range_in_vec_init)]
    fn restrict_full_is_identity() {
        let m = GridMeasure::new(vec![1.0, 2.0, 0.5, 1.5], Boundary::ZeroExtension).unwrap();
        assert_eq!(m.restrict_bins(&[0..4]).unwrap(), m);
    }

    #[test]
    #[allow(clippy::single_range_in_vec_init)]
    fn restrict_lebesgue_quarter() {
        let m: GridMeasure = GridMeasure::lebesgue(4, Boundary::ZeroExtension);
        let r = m.restrict_interval(0.0, 0.25).unwrap();
        assert_eq!(r.densities(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.norms().strong, 2.0);
    }

    #[test]
    fn restrict_empty_union() {
        let m: GridMeasure = GridMeasure::lebesgue(4, Boundary::ZeroExtension);
        let r = m.restrict_bins(&[]).unwrap();
        assert_eq!(r, GridMeasure::zero(4, Boundary::ZeroExtension));
    }

    #[test]
    fn restrict_misaligned_errors() {
        let m: GridMeasure = GridMeasure::lebesgue(4, Boundary::ZeroExtension);
        assert!(matches!(
            m.restrict_interval(0.0, 0.3),
            Err(MeasureError::Misaligned(..))
        ));
    }

    #[test]
    #[allow(clippy::single_range_in_vec_init)]
    fn variation_inequalities_lebesgue_quarter() {
        // part (c) reads 0.25 <= 0.5 * 0.25 * 2 with equality
        let m: GridMeasure = GridMeasure::lebesgue(4, Boundary::ZeroExtension);
        let rep = check_variation_inequalities(&m, 0..1).unwrap();
        assert!(rep.all_hold());
        let restricted = m.restrict_bins(&[0..1]).unwrap();
        assert_eq!(restricted.norms().weak, 0.25);
    }

    #[test]
    fn variation_inequalities_full_window() {
        let m: GridMeasure = GridMeasure::lebesgue(8, Boundary::ZeroExtension);
        assert!(check_variation_inequalities(&m, 0..8).unwrap().all_hold());
    }

    #[test]
    fn variation_inequalities_zero_measure() {
        let m: GridMeasure = GridMeasure::zero(8, Boundary::ZeroExtension);
        assert!(check_variation_inequalities(&m, 2..5).unwrap().all_hold());
    }

    #[test]
    fn diagonal_bounds_uniform() {
        let m: GridMeasure = GridMeasure::lebesgue(100, Boundary::ZeroExtension);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let rep = diagonal_mass_bounds(&m, &Space::interval(), 2, 0.1, 200_000, &mut rng).unwrap();
        assert_abs_diff_eq!(rep.lower_sum, 0.1, epsilon = 1e-12);
        assert_eq!(rep.uniform_floor, 0.1);
        // true value for the interval is 2 eps - eps^2 = 0.19
        assert_abs_diff_eq!(rep.mc_estimate, 0.19, epsilon = 0.01);
        assert!(rep.consistent);
    }

    #[test]
    fn diagonal_bounds_point_mass() {
        let m: GridMeasure = GridMeasure::point_mass(100, 37, Boundary::ZeroExtension);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let rep = diagonal_mass_bounds(&m, &Space::interval(), 5, 0.1, 10_000, &mut rng).unwrap();
        assert_abs_diff_eq!(rep.lower_sum, 1.0, epsilon = 1e-12);
        assert_eq!(rep.mc_estimate, 1.0);
    }

    #[test]
    fn diagonal_bounds_single_particle() {
        let m: GridMeasure = GridMeasure::lebesgue(100, Boundary::ZeroExtension);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let rep = diagonal_mass_bounds(&m, &Space::interval(), 1, 0.1, 1000, &mut rng).unwrap();
        assert_abs_diff_eq!(rep.lower_sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_bounds_misaligned_eps() {
        let m: GridMeasure = GridMeasure::lebesgue(256, Boundary::ZeroExtension);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        assert!(matches!(
            diagonal_mass_bounds(&m, &Space::interval(), 2, 0.1, 10, &mut rng),
            Err(MeasureError::BadBlockSize(..))
        ));
    }

    #[test]
    fn floor_respected_for_skewed_measure() {
        let mut d = vec![0.2; 100];
        d[17] = 40.0;
        let total: f64 = d.iter().sum::<f64>() / 100.0;
        let m = GridMeasure::new(
            d.into_iter().map(|f| f / total).collect(),
            Boundary::ZeroExtension,
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let rep = diagonal_mass_bounds(&m, &Space::interval(), 3, 0.1, 100, &mut rng).unwrap();
        assert!(rep.floor_respected);
        assert!(rep.lower_sum > rep.uniform_floor);
    }

    #[test]
    fn lower_sum_monotone_in_particle_count() {
        let m = GridMeasure::new(vec![0.4, 3.0, 0.3, 0.3], Boundary::ZeroExtension).unwrap();
        let m = {
            // normalize to mass 1
            let total = m.mass();
            GridMeasure::new(
                m.densities().iter().map(|f| f / total).collect(),
                Boundary::ZeroExtension,
            )
            .unwrap()
        };
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let mut prev = f64::INFINITY;
        for n_particles in 1..=6 {
            let rep = diagonal_mass_bounds(&m, &Space::interval(), n_particles, 0.25, 10, &mut rng)
                .unwrap();
            assert!(rep.lower_sum <= prev + 1e-12);
            prev = rep.lower_sum;
        }
    }

    #[test]
    fn weak_at_most_half_strong_rational() {
        let m = GridMeasure::new(
            vec![ratio(3, 2), ratio(-1, 3), ratio(7, 5), Rat::zero()],
            Boundary::ZeroExtension,
        )
        .unwrap();
        let r = m.norms();
        assert!(r.weak <= r.strong.clone() / rat_int(2));
        assert!(r.inner <= r.strong);
    }
}
