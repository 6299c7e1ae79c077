//! Ulam discretization of transfer operators for piecewise-affine maps
//! and the certification experiments built on top of it: the
//! Lasota-Yorke inequality, the discontinuous-perturbation bounds with
//! their sharpness identity, invariant-measure computation for composed
//! maps, and the norm bounds of the interaction block matrix.
//!
//! Matrix entries are the preimage-overlap fractions
//! `P[i][j] = m(bin_i intersect T^{-1} bin_j) / m(bin_i)`, computed by
//! exact interval arithmetic on the rational piece data. The `exact` flag
//! records whether the operator restricted to grid densities coincides
//! with the true transfer operator (it does when piece endpoints and the
//! images of interior grid cuts all land on the grid).
//!
//! Certification experiments that need the true operator on arbitrary
//! step densities use [`StepDensity`], an exact piecewise-constant
//! density on rational cuts with closed-form norms.

use crate::maps::{build_perturbation_map, MapError, PerturbationMapSpec, PiecewiseAffineMap};
use crate::measure::{Boundary, GridMeasure, MeasureError};
use crate::numutil::{rat_int, rat_to_f64, ratio};
use crate::sim::derive_seed;
use crate::Rat;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("map has a zero-slope piece; its pushforward has an atomic part")]
    ZeroSlope,
    #[error("need at least {pieces} bins, got {bins}")]
    TooFewBins { bins: usize, pieces: usize },
    #[error("bin count mismatch: operator {0}, measure {1}")]
    BinCountMismatch(usize, usize),
    #[error("map is not expanding: lambda = {0} <= 1")]
    NonExpanding(f64),
    #[error("operator is not exact on the {0}-bin grid; certification requires alignment")]
    InexactOperator(usize),
    #[error("{what} is not aligned to the {bins}-bin grid")]
    Misaligned { what: String, bins: usize },
    #[error("no convergence after {iters} iterations (residual {residual})")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("hypothesis 2(n+1+sum 1/a_i) < lambda violated: {factor} >= {lambda}")]
    HypothesisViolated { factor: f64, lambda: f64 },
    #[error("gamma = {0} outside (0,1]: the operator bound 1/gamma is unbounded")]
    BadGamma(f64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Dense-in-effect linear operator stored as sparse rows of exact
/// rational preimage-overlap fractions.
#[derive(Debug, Clone)]
pub struct UlamOperator {
    n_bins: usize,
    rows: Vec<Vec<(usize, Rat)>>,
    rows_f64: Vec<Vec<(usize, f64)>>,
    exact: bool,
}

impl UlamOperator {
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// True when the operator acting on grid densities reproduces the
    /// transfer operator exactly.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn rows(&self) -> &[Vec<(usize, Rat)>] {
        &self.rows
    }

    /// Checks that every row is nonnegative and sums to one, exactly.
    pub fn is_row_stochastic(&self) -> bool {
        self.rows.iter().all(|row| {
            row.iter().all(|(_, p)| *p >= Rat::zero())
                && row
                    .iter()
                    .map(|(_, p)| p.clone())
                    .fold(Rat::zero(), |a, b| a + b)
                    == Rat::one()
        })
    }

    /// Mass-preserving pushforward of an exact density.
    pub fn push(&self, mu: &GridMeasure<Rat>) -> Result<GridMeasure<Rat>, OperatorError> {
        if mu.n_bins() != self.n_bins {
            return Err(OperatorError::BinCountMismatch(self.n_bins, mu.n_bins()));
        }
        let mut out = vec![Rat::zero(); self.n_bins];
        for (i, row) in self.rows.iter().enumerate() {
            let f = mu.density(i);
            if f.is_zero() {
                continue;
            }
            for (j, p) in row {
                out[*j] = &out[*j] + &(f * p);
            }
        }
        Ok(GridMeasure::new(out, mu.boundary())?)
    }

    /// Pushforward of an f64 density.
    pub fn push_f64(&self, mu: &GridMeasure<f64>) -> Result<GridMeasure<f64>, OperatorError> {
        if mu.n_bins() != self.n_bins {
            return Err(OperatorError::BinCountMismatch(self.n_bins, mu.n_bins()));
        }
        let mut out = vec![0.0; self.n_bins];
        for (i, row) in self.rows_f64.iter().enumerate() {
            let f = mu.density(i);
            if *f == 0.0 {
                continue;
            }
            for (j, p) in row {
                out[*j] += f * p;
            }
        }
        Ok(GridMeasure::new(out, mu.boundary())?)
    }
}

fn aligned(x: &Rat, n_bins: usize) -> bool {
    (x * rat_int(n_bins as i64)).is_integer()
}

/// Builds the Ulam operator of a piecewise-affine map on `n_bins` uniform
/// bins.
#[allow(clippy::needless_range_loop)]
pub fn ulam(map: &PiecewiseAffineMap, n_bins: usize) -> Result<UlamOperator, OperatorError> {
    let pieces = map.pieces();
    if n_bins < pieces.len() {
        return Err(OperatorError::TooFewBins {
            bins: n_bins,
            pieces: pieces.len(),
        });
    }
    let n_rat = rat_int(n_bins as i64);
    let width = n_rat.recip();
    let mut rows = vec![Vec::new(); n_bins];
    let mut exact = true;

    for p in pieces {
        if p.slope.is_zero() {
            return Err(OperatorError::ZeroSlope);
        }
        exact &= aligned(&p.lo, n_bins) && aligned(&p.hi, n_bins);
        // images of interior grid cuts must land on the grid for exactness
        if exact {
            let k_lo = (&p.lo * &n_rat).ceil().to_integer();
            let k_hi = (&p.hi * &n_rat).floor().to_integer();
            let mut k = k_lo;
            while k <= k_hi && exact {
                let x = Rat::new(k.clone(), n_rat.numer().clone());
                exact &= aligned(&(&p.slope * &x + &p.intercept), n_bins);
                k += 1;
            }
        }
        let abs_slope = p.slope.abs();
        let i_lo = (&p.lo * &n_rat).floor().to_integer().to_usize().unwrap();
        let i_hi = {
            let h = (&p.hi * &n_rat).ceil().to_integer().to_usize().unwrap();
            h.min(n_bins)
        };
        for i in i_lo..i_hi {
            let bin_lo = Rat::new(i.into(), n_rat.numer().clone());
            let bin_hi = Rat::new((i + 1).into(), n_rat.numer().clone());
            let a = if p.lo > bin_lo { p.lo.clone() } else { bin_lo };
            let b = if p.hi < bin_hi { p.hi.clone() } else { bin_hi };
            if a >= b {
                continue;
            }
            let ya = &p.slope * &a + &p.intercept;
            let yb = &p.slope * &b + &p.intercept;
            let (y_lo, y_hi) = if ya <= yb { (ya, yb) } else { (yb, ya) };
            let j_lo = (&y_lo * &n_rat)
                .floor()
                .to_integer()
                .to_usize()
                .unwrap_or(0);
            let j_hi = (&y_hi * &n_rat)
                .ceil()
                .to_integer()
                .to_usize()
                .unwrap_or(0)
                .min(n_bins);
            for j in j_lo..j_hi {
                let tgt_lo = Rat::new(j.into(), n_rat.numer().clone());
                let tgt_hi = Rat::new((j + 1).into(), n_rat.numer().clone());
                let lo = if y_lo > tgt_lo { y_lo.clone() } else { tgt_lo };
                let hi = if y_hi < tgt_hi { y_hi.clone() } else { tgt_hi };
                if lo >= hi {
                    continue;
                }
                let frac = (hi - lo) / (&abs_slope * &width);
                push_entry(&mut rows[i], j, frac);
            }
        }
    }
    let rows_f64 = rows
        .iter()
        .map(|row| row.iter().map(|(j, p)| (*j, rat_to_f64(p))).collect())
        .collect();
    Ok(UlamOperator {
        n_bins,
        rows,
        rows_f64,
        exact,
    })
}

fn push_entry(row: &mut Vec<(usize, Rat)>, j: usize, frac: Rat) {
    if let Some(e) = row.iter_mut().find(|(jj, _)| *jj == j) {
        e.1 = &e.1 + &frac;
    } else {
        row.push((j, frac));
    }
}

// ---------------------------------------------------------------------
// Exact step densities
// ---------------------------------------------------------------------

/// A piecewise-constant density on rational cuts of `[0,1]`, closed under
/// exact pushforward through piecewise-affine maps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDensity {
    cuts: Vec<Rat>,
    values: Vec<Rat>,
}

impl StepDensity {
    pub fn new(cuts: Vec<Rat>, values: Vec<Rat>) -> Self {
        assert!(cuts.len() == values.len() + 1, "cuts must bracket values");
        StepDensity { cuts, values }
    }

    pub fn from_grid(mu: &GridMeasure<Rat>) -> Self {
        let n = mu.n_bins();
        let cuts = (0..=n).map(|i| ratio(i as i64, n as i64)).collect();
        StepDensity {
            cuts,
            values: mu.densities().to_vec(),
        }
    }

    pub fn lebesgue() -> Self {
        StepDensity {
            cuts: vec![Rat::zero(), Rat::one()],
            values: vec![Rat::one()],
        }
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// Exact pushforward: each affine branch contributes `f/|slope|` on
    /// the image of every source cell it covers.
    pub fn pushforward(&self, map: &PiecewiseAffineMap) -> Result<StepDensity, OperatorError> {
        let mut contrib: Vec<(Rat, Rat, Rat)> = Vec::new();
        for p in map.pieces() {
            if p.slope.is_zero() {
                return Err(OperatorError::ZeroSlope);
            }
            let inv = p.slope.abs().recip();
            for c in 0..self.values.len() {
                let a = if self.cuts[c] > p.lo {
                    self.cuts[c].clone()
                } else {
                    p.lo.clone()
                };
                let b = if self.cuts[c + 1] < p.hi {
                    self.cuts[c + 1].clone()
                } else {
                    p.hi.clone()
                };
                if a >= b || self.values[c].is_zero() {
                    continue;
                }
                let ya = &p.slope * &a + &p.intercept;
                let yb = &p.slope * &b + &p.intercept;
                let (lo, hi) = if ya <= yb { (ya, yb) } else { (yb, ya) };
                contrib.push((lo, hi, &self.values[c] * &inv));
            }
        }
        let mut cuts: Vec<Rat> = vec![Rat::zero(), Rat::one()];
        for (lo, hi, _) in &contrib {
            cuts.push(lo.clone());
            cuts.push(hi.clone());
        }
        cuts.sort();
        cuts.dedup();
        let mut values = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let mid = (&w[0] + &w[1]) / rat_int(2);
            let mut v = Rat::zero();
            for (lo, hi, val) in &contrib {
                if *lo <= mid && mid < *hi {
                    v += val.clone();
                }
            }
            values.push(v);
        }
        Ok(StepDensity { cuts, values })
    }

    /// Variation of the density extended by zero outside `[0,1]`.
    pub fn strong_norm(&self) -> Rat {
        let mut v = self
            .values
            .first()
            .map(|x| x.abs())
            .unwrap_or_else(Rat::zero);
        for w in self.values.windows(2) {
            v += (&w[1] - &w[0]).abs();
        }
        v + self
            .values
            .last()
            .map(|x| x.abs())
            .unwrap_or_else(Rat::zero)
    }

    /// L1 norm.
    pub fn weak_norm(&self) -> Rat {
        self.values
            .iter()
            .zip(self.cuts.windows(2))
            .map(|(v, w)| v.abs() * (&w[1] - &w[0]))
            .fold(Rat::zero(), |a, b| a + b)
    }

    /// Pointwise difference on the merged cut set.
    pub fn sub(&self, other: &StepDensity) -> StepDensity {
        let mut cuts: Vec<Rat> = self.cuts.iter().chain(&other.cuts).cloned().collect();
        cuts.sort();
        cuts.dedup();
        let mut values = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let mid = (&w[0] + &w[1]) / rat_int(2);
            values.push(self.value_at(&mid) - other.value_at(&mid));
        }
        StepDensity { cuts, values }
    }

    fn value_at(&self, x: &Rat) -> Rat {
        match self.cuts.binary_search_by(|c| c.partial_cmp(x).unwrap()) {
            Ok(i) => {
                if i < self.values.len() {
                    self.values[i].clone()
                } else {
                    Rat::zero()
                }
            }
            Err(i) => {
                if i == 0 || i > self.values.len() {
                    Rat::zero()
                } else {
                    self.values[i - 1].clone()
                }
            }
        }
    }
}

// ---------------------------------------------------------------------
// Invariant measures
// ---------------------------------------------------------------------

/// Computes a probabilistic fixed density of the composition of the given
/// operators (applied left to right each step) by damped power iteration
/// from Lebesgue: `nu <- (nu + P nu)/2`, a binomially weighted average of
/// the operator powers that suppresses peripheral spectrum. Stops when
/// the weak-norm change drops below `tol`.
pub fn invariant_measure(
    ops: &[&UlamOperator],
    tol: f64,
    max_iters: usize,
) -> Result<GridMeasure<f64>, OperatorError> {
    assert!(!ops.is_empty());
    let n = ops[0].n_bins();
    for op in ops {
        if op.n_bins() != n {
            return Err(OperatorError::BinCountMismatch(n, op.n_bins()));
        }
    }
    let mut nu: GridMeasure<f64> = GridMeasure::lebesgue(n, Boundary::ZeroExtension);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let mut pushed = nu.clone();
        for op in ops {
            pushed = op.push_f64(&pushed)?;
        }
        let next = nu.linear_comb(&0.5, &pushed, &0.5)?;
        residual = next.weak_distance(&nu)?;
        nu = next;
        if residual < tol {
            // renormalize drift in total mass from float accumulation
            let mass = nu.mass();
            let d = nu.densities().iter().map(|f| f / mass).collect();
            return Ok(GridMeasure::new(d, Boundary::ZeroExtension)?);
        }
    }
    Err(OperatorError::NonConvergence {
        iters: max_iters,
        residual,
    })
}

// ---------------------------------------------------------------------
// Certification experiments
// ---------------------------------------------------------------------

pub(crate) fn random_rational_measure<R: Rng>(
    rng: &mut R,
    n_bins: usize,
    boundary: Boundary,
) -> GridMeasure<Rat> {
    let d = (0..n_bins)
        .map(|_| ratio(rng.gen_range(-999i64..=999), 8))
        .collect();
    GridMeasure::new(d, boundary).unwrap()
}

/// Result of checking `V(T* mu) <= theta V(mu) + beta weak(mu)` on random
/// signed measures, in exact rational arithmetic.
#[derive(Debug, Clone, Serialize)]
pub struct LyReport {
    pub theta: f64,
    pub beta: f64,
    pub n_bins: usize,
    pub trials: usize,
    pub violations: usize,
    /// Largest observed `V(T* mu) / (theta V(mu) + beta weak(mu))`.
    pub max_ratio: f64,
}

pub fn verify_lasota_yorke(
    map: &PiecewiseAffineMap,
    n_bins: usize,
    trials: usize,
    seed: u64,
) -> Result<LyReport, OperatorError> {
    let e = map.expansion_data()?;
    if e.lambda <= Rat::one() {
        return Err(OperatorError::NonExpanding(e.lambda_f64()));
    }
    let op = ulam(map, n_bins)?;
    if !op.is_exact() {
        return Err(OperatorError::InexactOperator(n_bins));
    }
    let theta = rat_int(2) / e.lambda.clone();
    let beta = e.beta();

    let results: Vec<(bool, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, t as u64));
            let mu = random_rational_measure(&mut rng, n_bins, Boundary::ZeroExtension);
            let pushed = op.push(&mu).expect("bin counts match");
            let lhs = pushed.norms().strong;
            let norms = mu.norms();
            let rhs = &theta * &norms.strong + &beta * &norms.weak;
            let ok = lhs <= rhs;
            let ratio = if rhs.is_zero() {
                0.0
            } else {
                rat_to_f64(&(lhs / rhs))
            };
            (ok, ratio)
        })
        .collect();

    let violations = results.iter().filter(|(ok, _)| !ok).count();
    let max_ratio = results.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    Ok(LyReport {
        theta: rat_to_f64(&theta),
        beta: rat_to_f64(&beta),
        n_bins,
        trials,
        violations,
        max_ratio,
    })
}

/// Result of checking the perturbation bounds
/// `V(tau* mu) <= (n+1+sum 1/a_i) V(mu)` and
/// `weak(mu - tau* mu) <= (n+2+sum 1/a_i) m(A) V(mu) / 2`,
/// plus the exact sharpness identity on Lebesgue.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbReport {
    pub strong_factor: f64,
    pub weak_factor: f64,
    pub trials: usize,
    pub strong_violations: usize,
    pub weak_violations: usize,
    /// `V(tau* m) == 2 (n+1+sum 1/a_i)` exactly.
    pub sharpness_exact: bool,
    pub pushed_lebesgue_strong: f64,
    pub lebesgue_weak_diff: f64,
}

pub fn verify_perturbation_bounds(
    spec: &PerturbationMapSpec,
    n_bins: usize,
    trials: usize,
    seed: u64,
) -> Result<PerturbReport, OperatorError> {
    for (k, (a, b)) in spec.intervals.iter().enumerate() {
        let img_a = &spec.slopes[k] * a + &spec.intercepts[k];
        let img_b = &spec.slopes[k] * b + &spec.intercepts[k];
        for (what, x) in [("interval endpoint", a), ("interval endpoint", b)] {
            if !aligned(x, n_bins) {
                return Err(OperatorError::Misaligned {
                    what: what.into(),
                    bins: n_bins,
                });
            }
        }
        if !aligned(&img_a, n_bins) || !aligned(&img_b, n_bins) {
            return Err(OperatorError::Misaligned {
                what: "interval image endpoint".into(),
                bins: n_bins,
            });
        }
    }
    let map = build_perturbation_map(spec)?;
    let strong_factor = spec.strong_factor();
    let weak_factor = spec.weak_factor();

    let leb = StepDensity::lebesgue();
    let pushed_leb = leb.pushforward(&map)?;
    let v_pushed = pushed_leb.strong_norm();
    let sharpness_exact = v_pushed == rat_int(2) * &strong_factor;
    let leb_weak_diff = leb.sub(&pushed_leb).weak_norm();

    let results: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, t as u64));
            let mu = random_rational_measure(&mut rng, n_bins, Boundary::ZeroExtension);
            let dens = StepDensity::from_grid(&mu);
            let pushed = dens.pushforward(&map).expect("no zero slopes");
            let v_mu = dens.strong_norm();
            let strong_ok = pushed.strong_norm() <= &strong_factor * &v_mu;
            let weak_ok = dens.sub(&pushed).weak_norm() <= &weak_factor * &v_mu;
            (strong_ok, weak_ok)
        })
        .collect();

    Ok(PerturbReport {
        strong_factor: rat_to_f64(&strong_factor),
        weak_factor: rat_to_f64(&weak_factor),
        trials,
        strong_violations: results.iter().filter(|(s, _)| !s).count(),
        weak_violations: results.iter().filter(|(_, w)| !w).count(),
        sharpness_exact,
        pushed_lebesgue_strong: rat_to_f64(&v_pushed),
        lebesgue_weak_diff: rat_to_f64(&leb_weak_diff),
    })
}

/// One row of a perturbed-convergence study: the perturbation size and
/// the weak distance from the perturbed to the unperturbed invariant
/// measure.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub weak_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub lambda: f64,
    pub hypothesis_factor: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Smallest constant with `weak_distance <= c * delta` for all rows.
    pub fitted_c: f64,
    pub strictly_decreasing: bool,
}

/// Computes invariant measures of `tau_delta` composed with the base map
/// for a family of perturbation sizes and reports how the weak distance
/// to the unperturbed invariant measure scales with `delta`.
pub fn perturbed_convergence_study(
    base: &PiecewiseAffineMap,
    family: &[PerturbationMapSpec],
    n_bins: usize,
    tol: f64,
    max_iters: usize,
) -> Result<ConvergenceStudy, OperatorError> {
    let e = base.expansion_data()?;
    let mut factor_max = Rat::zero();
    for spec in family {
        let f = rat_int(2) * spec.strong_factor();
        if f >= e.lambda {
            return Err(OperatorError::HypothesisViolated {
                factor: rat_to_f64(&f),
                lambda: e.lambda_f64(),
            });
        }
        if f > factor_max {
            factor_max = f;
        }
        for (k, (a, b)) in spec.intervals.iter().enumerate() {
            let img_a = &spec.slopes[k] * a + &spec.intercepts[k];
            let img_b = &spec.slopes[k] * b + &spec.intercepts[k];
            if ![a, b, &img_a, &img_b]
                .into_iter()
                .all(|x| aligned(x, n_bins))
            {
                return Err(OperatorError::Misaligned {
                    what: "perturbation interval".into(),
                    bins: n_bins,
                });
            }
        }
    }
    let base_op = ulam(base, n_bins)?;
    let mu_base = invariant_measure(&[&base_op], tol, max_iters)?;
    let mut rows = Vec::with_capacity(family.len());
    for spec in family {
        let tau_op = ulam(&build_perturbation_map(spec)?, n_bins)?;
        let mu_delta = invariant_measure(&[&base_op, &tau_op], tol, max_iters)?;
        rows.push(ConvergenceRow {
            delta: rat_to_f64(&spec.total_length()),
            weak_distance: mu_delta.weak_distance(&mu_base)?,
        });
    }
    rows.sort_by(|a, b| b.delta.partial_cmp(&a.delta).unwrap());
    let fitted_c = rows
        .iter()
        .map(|r| r.weak_distance / r.delta)
        .fold(0.0, f64::max);
    let strictly_decreasing = rows
        .windows(2)
        .all(|w| w[1].weak_distance < w[0].weak_distance);
    Ok(ConvergenceStudy {
        lambda: e.lambda_f64(),
        hypothesis_factor: rat_to_f64(&factor_max),
        rows,
        fitted_c,
        strictly_decreasing,
    })
}

/// Measured norm bounds of the interaction block matrix
/// `G = gamma I + ((1-gamma)/n) E`.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub n: usize,
    pub gamma: f64,
    /// Smallest eigenvalue from an independent symmetric eigensolve; for
    /// this positive-definite matrix it is the Euclidean minimum gain.
    pub euclid_min_gain: f64,
    /// Largest deviation of the eigenvalue multiset from
    /// `{gamma (n-1 times), 1}`.
    pub eigen_error: f64,
    pub sampled_min_euclid: f64,
    /// Global sampled minima in the max and sum norms. For n >= 3 these
    /// dip below gamma (see the mean-zero minima for the subspace where
    /// the gain bound is tight).
    pub sampled_min_max_norm: f64,
    pub sampled_min_sum_norm: f64,
    pub meanzero_min_max_norm: f64,
    pub meanzero_min_sum_norm: f64,
    /// Violations of `V(push) <= (1/gamma) V` for the 1-d affine
    /// contraction `x -> gamma x + (1-gamma)/2`, checked exactly.
    pub affine_violations: usize,
    /// The pushforward of Lebesgue attains `V = (1/gamma) V(m)` exactly.
    pub affine_lebesgue_sharp: bool,
}

pub fn verify_interaction_contraction(
    n: usize,
    gamma: f64,
    samples: usize,
    seed: u64,
) -> Result<ContractionReport, OperatorError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(OperatorError::BadGamma(gamma));
    }
    let g = crate::interact::interaction_block_matrix(n, gamma);
    let eig = nalgebra::linalg::SymmetricEigen::new(g.clone());
    let mut evs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut eigen_error: f64 = (evs[n - 1] - 1.0).abs();
    for ev in &evs[..n - 1] {
        eigen_error = eigen_error.max((ev - gamma).abs());
    }
    let euclid_min_gain = evs[0].min(1.0);

    let norm_max = |v: &nalgebra::DVector<f64>| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let norm_sum = |v: &nalgebra::DVector<f64>| v.iter().map(|x| x.abs()).sum::<f64>();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut min_e = f64::INFINITY;
    let mut min_m = f64::INFINITY;
    let mut min_s = f64::INFINITY;
    let mut mz_m = f64::INFINITY;
    let mut mz_s = f64::INFINITY;
    for _ in 0..samples {
        let xi = nalgebra::DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        if xi.norm() < 1e-9 {
            continue;
        }
        let gx = &g * &xi;
        min_e = min_e.min(gx.norm() / xi.norm());
        min_m = min_m.min(norm_max(&gx) / norm_max(&xi));
        min_s = min_s.min(norm_sum(&gx) / norm_sum(&xi));
        let mean = xi.mean();
        let mz = xi.map(|x| x - mean);
        if norm_max(&mz) > 1e-9 {
            let gmz = &g * &mz;
            mz_m = mz_m.min(norm_max(&gmz) / norm_max(&mz));
            mz_s = mz_s.min(norm_sum(&gmz) / norm_sum(&mz));
        }
    }

    // 1-d affine contraction route, exact: x -> gamma x + (1-gamma)/2
    let gamma_rat = Rat::from_float(gamma).unwrap();
    let intercept = (Rat::one() - &gamma_rat) / rat_int(2);
    let affine = PiecewiseAffineMap::new(
        vec![Rat::zero(), Rat::one()],
        vec![gamma_rat.clone()],
        vec![intercept],
        false,
    )?;
    let bound = gamma_rat.recip();
    let mut affine_violations = 0;
    for t in 0..16u64 {
        let mut trng = ChaCha12Rng::seed_from_u64(derive_seed(seed, t));
        let mu = random_rational_measure(&mut trng, 16, Boundary::ZeroExtension);
        let dens = StepDensity::from_grid(&mu);
        let pushed = dens.pushforward(&affine)?;
        if pushed.strong_norm() > &bound * dens.strong_norm() {
            affine_violations += 1;
        }
    }
    let leb_pushed = StepDensity::lebesgue().pushforward(&affine)?;
    let affine_lebesgue_sharp = leb_pushed.strong_norm() == &bound * rat_int(2);

    Ok(ContractionReport {
        n,
        gamma,
        euclid_min_gain,
        eigen_error,
        sampled_min_euclid: min_e,
        sampled_min_max_norm: min_m,
        sampled_min_sum_norm: min_s,
        meanzero_min_max_norm: mz_m,
        meanzero_min_sum_norm: mz_s,
        affine_violations,
        affine_lebesgue_sharp,
    })
}

/// Measured strong-norm growth of one lattice step in the pair-difference
/// coordinate (the N = 2 product reduction): the contraction toward the
/// diagonal acts there as an affine squeeze on `[1/2-eps, 1/2+eps]` and
/// the doubling map as a shifted full-branch map. The growth is compared
/// against `2^N theta / gamma` with `N = 2`.
#[derive(Debug, Clone, Serialize)]
pub struct BlockGrowthReport {
    pub gamma: f64,
    pub epsilon: f64,
    pub bound: f64,
    pub max_growth: f64,
    pub violations: usize,
}

pub fn composite_block_growth(
    gamma: f64,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<BlockGrowthReport, OperatorError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(OperatorError::BadGamma(gamma));
    }
    let gamma_rat = Rat::from_float(gamma).unwrap();
    let eps_rat = Rat::from_float(epsilon).unwrap();
    let half = ratio(1, 2);
    let squeeze = PerturbationMapSpec::with_midpoint_intercepts(
        vec![(&half - &eps_rat, &half + &eps_rat)],
        vec![gamma_rat.clone()],
    )?;
    let squeeze_map = build_perturbation_map(&squeeze)?;
    // doubling in the centered difference coordinate: u -> 2u - 1/2 mod 1
    let shifted_doubling = PiecewiseAffineMap::new(
        vec![Rat::zero(), Rat::one()],
        vec![rat_int(2)],
        vec![ratio(-1, 2)],
        true,
    )?;
    let theta = rat_int(2) / shifted_doubling.expansion_data()?.lambda;
    let bound = rat_int(4) * theta / &gamma_rat;

    let mut max_growth = Rat::zero();
    let mut violations = 0;
    for t in 0..trials as u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, t));
        let mu = random_rational_measure(&mut rng, 32, Boundary::ZeroExtension);
        let dens = StepDensity::from_grid(&mu);
        let v0 = dens.strong_norm();
        if v0.is_zero() {
            continue;
        }
        let stepped = dens
            .pushforward(&squeeze_map)?
            .pushforward(&shifted_doubling)?;
        let growth = stepped.strong_norm() / v0;
        if growth > bound {
            violations += 1;
        }
        if growth > max_growth {
            max_growth = growth;
        }
    }
    Ok(BlockGrowthReport {
        gamma,
        epsilon,
        bound: rat_to_f64(&bound),
        max_growth: rat_to_f64(&max_growth),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{doubling, identity, tripling};
    use approx::assert_abs_diff_eq;

    #[test]
    fn doubling_four_bins_pushforward() {
        let op = ulam(&doubling(), 4).unwrap();
        assert!(op.is_exact());
        assert!(op.is_row_stochastic());
        let mu = GridMeasure::new(
            vec![rat_int(4), Rat::zero(), Rat::zero(), Rat::zero()],
            Boundary::ZeroExtension,
        )
        .unwrap();
        let out = op.push(&mu).unwrap();
        assert_eq!(
            out.densities(),
            &[rat_int(2), rat_int(2), Rat::zero(), Rat::zero()]
        );
    }

    #[test]
    fn identity_operator() {
        let op = ulam(&identity(), 8).unwrap();
        assert!(op.is_exact());
        let mu = random_rational_measure(
            &mut ChaCha12Rng::seed_from_u64(1),
            8,
            Boundary::ZeroExtension,
        );
        assert_eq!(op.push(&mu).unwrap(), mu);
    }

    #[test]
    fn catalog_operators_are_row_stochastic() {
        let squeeze = PerturbationMapSpec::with_midpoint_intercepts(
            vec![(ratio(1, 4), ratio(1, 2))],
            vec![ratio(1, 2)],
        )
        .unwrap();
        for (map, bins) in [
            (doubling(), 32),
            (tripling(), 27),
            (crate::maps::tent(), 16),
            (identity(), 8),
            (crate::maps::full_branch(8), 64),
            (build_perturbation_map(&squeeze).unwrap(), 16),
        ] {
            let op = ulam(&map, bins).unwrap();
            assert!(
                op.is_row_stochastic(),
                "map with {} pieces",
                map.pieces().len()
            );
        }
    }

    #[test]
    fn lebesgue_fixed_by_doubling() {
        let op = ulam(&doubling(), 16).unwrap();
        let leb: GridMeasure<Rat> = GridMeasure::lebesgue(16, Boundary::ZeroExtension);
        assert_eq!(op.push(&leb).unwrap(), leb);
    }

    #[test]
    fn push_preserves_mass_exactly() {
        let op = ulam(&tripling(), 27).unwrap();
        let mu = random_rational_measure(
            &mut ChaCha12Rng::seed_from_u64(5),
            27,
            Boundary::ZeroExtension,
        );
        assert_eq!(op.push(&mu).unwrap().mass(), mu.mass());
    }

    #[test]
    fn positive_density_stays_positive_same_mass() {
        let op = ulam(&doubling(), 32).unwrap();
        let d: Vec<f64> = (0..32)
            .map(|i| 0.5 + (i as f64 * 0.83).sin().abs())
            .collect();
        let mu = GridMeasure::new(d, Boundary::ZeroExtension).unwrap();
        let out = op.push_f64(&mu).unwrap();
        assert!(out.densities().iter().all(|&f| f >= 0.0));
        assert_abs_diff_eq!(out.mass(), mu.mass(), epsilon = 1e-12);
    }

    #[test]
    fn step_density_matches_ulam_for_exact_maps() {
        let op = ulam(&tripling(), 9).unwrap();
        assert!(op.is_exact());
        let mu = random_rational_measure(
            &mut ChaCha12Rng::seed_from_u64(9),
            9,
            Boundary::ZeroExtension,
        );
        let via_op = op.push(&mu).unwrap();
        let via_step = StepDensity::from_grid(&mu)
            .pushforward(&tripling())
            .unwrap();
        let diff = via_step.sub(&StepDensity::from_grid(&via_op));
        assert_eq!(diff.weak_norm(), Rat::zero());
        assert_eq!(diff.strong_norm(), Rat::zero());
    }

    #[test]
    fn invariant_measure_doubling_is_lebesgue() {
        let op = ulam(&doubling(), 64).unwrap();
        let inv = invariant_measure(&[&op], 1e-10, 100_000).unwrap();
        let leb: GridMeasure<f64> = GridMeasure::lebesgue(64, Boundary::ZeroExtension);
        assert!(inv.weak_distance(&leb).unwrap() < 1e-9);
    }

    #[test]
    fn invariant_measure_tripling_is_lebesgue() {
        let op = ulam(&tripling(), 81).unwrap();
        let inv = invariant_measure(&[&op], 1e-10, 100_000).unwrap();
        let leb: GridMeasure<f64> = GridMeasure::lebesgue(81, Boundary::ZeroExtension);
        assert!(inv.weak_distance(&leb).unwrap() < 1e-9);
    }

    #[test]
    fn ly_small_run_no_violations() {
        let rep = verify_lasota_yorke(&tripling(), 81, 50, 42).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_ratio <= 1.0);
        assert_abs_diff_eq!(rep.theta, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.beta, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn ly_holds_for_other_expanding_maps() {
        for (map, bins) in [(doubling(), 64), (crate::maps::tent(), 32)] {
            let rep = verify_lasota_yorke(&map, bins, 100, 5).unwrap();
            assert_eq!(rep.violations, 0, "{} pieces", map.pieces().len());
        }
    }

    #[test]
    fn ly_lebesgue_under_tripling() {
        // V(push) = 2 <= (2/3)*2 + 2*1
        let op = ulam(&tripling(), 81).unwrap();
        let leb: GridMeasure<Rat> = GridMeasure::lebesgue(81, Boundary::ZeroExtension);
        let pushed = op.push(&leb).unwrap();
        assert_eq!(pushed.norms().strong, rat_int(2));
    }

    #[test]
    fn ly_rejects_non_expanding() {
        assert!(matches!(
            verify_lasota_yorke(&identity(), 16, 5, 0),
            Err(OperatorError::NonExpanding(_))
        ));
    }

    #[test]
    fn perturbation_reference_spec() {
        let spec = PerturbationMapSpec::with_midpoint_intercepts(
            vec![(ratio(1, 4), ratio(1, 2))],
            vec![ratio(1, 2)],
        )
        .unwrap();
        let rep = verify_perturbation_bounds(&spec, 16, 50, 7).unwrap();
        assert!(rep.sharpness_exact);
        assert_abs_diff_eq!(rep.pushed_lebesgue_strong, 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.lebesgue_weak_diff, 0.25, epsilon = 1e-15);
        assert_eq!(rep.strong_violations, 0);
        assert_eq!(rep.weak_violations, 0);
    }

    #[test]
    fn perturbation_identity_spec_trivial() {
        let spec = PerturbationMapSpec::new(vec![], vec![], vec![]).unwrap();
        let rep = verify_perturbation_bounds(&spec, 16, 20, 7).unwrap();
        assert_eq!(rep.strong_violations, 0);
        assert_eq!(rep.weak_violations, 0);
        assert_abs_diff_eq!(rep.lebesgue_weak_diff, 0.0, epsilon = 1e-15);
        // factor collapses to n+1 = 1, sharpness reads V(m) = 2
        assert!(rep.sharpness_exact);
    }

    #[test]
    fn perturbation_misaligned_errors() {
        let spec = PerturbationMapSpec::with_midpoint_intercepts(
            vec![(ratio(1, 3), ratio(1, 2))],
            vec![ratio(1, 2)],
        )
        .unwrap();
        assert!(matches!(
            verify_perturbation_bounds(&spec, 16, 5, 7),
            Err(OperatorError::Misaligned { .. })
        ));
    }

    #[test]
    fn contraction_report_n2() {
        let rep = verify_interaction_contraction(2, 0.5, 2000, 11).unwrap();
        assert_abs_diff_eq!(rep.euclid_min_gain, 0.5, epsilon = 1e-10);
        assert!(rep.eigen_error < 1e-10);
        assert!(rep.sampled_min_euclid >= 0.5 - 1e-9);
        // for n = 2 the bound holds in every norm
        assert!(rep.sampled_min_max_norm >= 0.5 - 1e-9);
        assert!(rep.sampled_min_sum_norm >= 0.5 - 1e-9);
        assert_eq!(rep.affine_violations, 0);
        assert!(rep.affine_lebesgue_sharp);
    }

    #[test]
    fn contraction_gamma_one_identity() {
        let rep = verify_interaction_contraction(4, 1.0, 500, 11).unwrap();
        assert_abs_diff_eq!(rep.euclid_min_gain, 1.0, epsilon = 1e-10);
        assert!(rep.sampled_min_euclid >= 1.0 - 1e-9);
    }

    #[test]
    fn contraction_meanzero_gain_at_least_gamma() {
        // on mean-zero vectors G acts as gamma I: every norm gain is gamma
        for n in [3, 5, 8] {
            let rep = verify_interaction_contraction(n, 0.3, 3000, 13).unwrap();
            assert!(rep.meanzero_min_max_norm >= 0.3 - 1e-9);
            assert!(rep.meanzero_min_sum_norm >= 0.3 - 1e-9);
        }
    }

    #[test]
    fn contraction_max_norm_dips_below_gamma_for_n3() {
        // the n = 3 counterexample direction (1, -5/7, -5/7) has max-norm
        // gain 3/7 < 1/2; sampling finds ratios below gamma
        let rep = verify_interaction_contraction(3, 0.5, 20_000, 17).unwrap();
        assert!(rep.sampled_min_max_norm < 0.5);
        assert!(rep.sampled_min_max_norm >= 3.0 / 7.0 - 1e-9);
    }

    #[test]
    fn contraction_rejects_gamma_zero() {
        assert!(matches!(
            verify_interaction_contraction(3, 0.0, 10, 0),
            Err(OperatorError::BadGamma(_))
        ));
    }

    #[test]
    fn block_growth_within_bound() {
        let rep = composite_block_growth(0.5, 1.0 / 16.0, 64, 23).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_growth <= rep.bound);
        assert_abs_diff_eq!(rep.bound, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn convergence_study_smoke() {
        let base = crate::maps::full_branch(8);
        let family: Vec<PerturbationMapSpec> = [ratio(1, 10), ratio(1, 20)]
            .into_iter()
            .map(|delta| {
                let a = ratio(1, 4);
                PerturbationMapSpec::with_midpoint_intercepts(
                    vec![(a.clone(), a + delta)],
                    vec![ratio(2, 3)],
                )
                .unwrap()
            })
            .collect();
        let study = perturbed_convergence_study(&base, &family, 480, 1e-10, 100_000).unwrap();
        assert_eq!(study.rows.len(), 2);
        assert!(study.rows[0].weak_distance > 0.0);
        assert!(study.strictly_decreasing);
    }

    #[test]
    fn convergence_study_hypothesis_check() {
        // alpha = 1/4 gives 2(1+1+4) = 12 >= 8
        let base = crate::maps::full_branch(8);
        let spec = PerturbationMapSpec::with_midpoint_intercepts(
            vec![(ratio(1, 4), ratio(3, 8))],
            vec![ratio(1, 4)],
        )
        .unwrap();
        assert!(matches!(
            perturbed_convergence_study(&base, &[spec], 480, 1e-10, 1000),
            Err(OperatorError::HypothesisViolated { .. })
        ));
    }
}
