//! Piecewise-affine local maps of the interval/circle with expansion
//! metadata.
//!
//! Map data (breakpoints, slopes, intercepts) is stored as exact
//! rationals so Ulam matrices and certification pushforwards can be
//! computed without floating-point slack. Wraparound (circle) maps are
//! canonicalized at construction: pieces are split at the preimages of
//! integers and intercepts reduced so that every piece image lies in
//! `[0,1]`.
//!
//! The catalog constructors cover the maps used throughout the
//! experiments. Doubling, tripling and the tent map are classically known
//! to be (weak) mixing with Lebesgue as the unique absolutely continuous
//! invariant measure; the workbench treats mixing as an assumption rather
//! than a verified property.

use crate::numutil::{rat_int, rat_to_f64, ratio};
use crate::Rat;
use num_traits::{FromPrimitive, One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("breakpoints must start at 0, end at 1 and be strictly increasing")]
    BadBreakpoints,
    #[error("{0} slopes/intercepts for {1} pieces")]
    PieceCountMismatch(usize, usize),
    #[error("piece {0} has zero slope")]
    ZeroSlope(usize),
    #[error("piece {0} image [{1}, {2}] escapes [0,1] (no wraparound)")]
    ImageEscapes(usize, f64, f64),
    #[error("perturbation intervals must be disjoint, ordered and inside [0,1]")]
    BadIntervals,
    #[error("perturbation slope must be positive")]
    NonPositiveSlope,
    #[error("containment violated: piece {0} maps [{1}, {2}] outside itself")]
    ContainmentViolated(usize, f64, f64),
}

/// One affine piece `x -> slope*x + intercept` on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lo: Rat,
    pub hi: Rat,
    pub slope: Rat,
    pub intercept: Rat,
}

impl Piece {
    /// Image endpoints in increasing order.
    pub fn image(&self) -> (Rat, Rat) {
        let a = &self.slope * &self.lo + &self.intercept;
        let b = &self.slope * &self.hi + &self.intercept;
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// Expansion and Lasota-Yorke data of a piecewise-affine map.
///
/// `lambda` is the smallest slope modulus, `lipschitz` the largest,
/// `beta1 = 2/(lambda * min piece length)` and `beta2` the supremum of
/// `|(1/T')'|`, which vanishes for affine pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionData {
    pub lambda: Rat,
    pub beta1: Rat,
    pub beta2: Rat,
    pub lipschitz: Rat,
}

impl ExpansionData {
    pub fn beta(&self) -> Rat {
        &self.beta1 + &self.beta2
    }

    pub fn lambda_f64(&self) -> f64 {
        rat_to_f64(&self.lambda)
    }

    pub fn beta_f64(&self) -> f64 {
        rat_to_f64(&self.beta())
    }

    pub fn lipschitz_f64(&self) -> f64 {
        rat_to_f64(&self.lipschitz)
    }
}

/// A piecewise-affine map of `[0,1)` given by an interval partition with
/// one affine branch per piece.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffineMap {
    pieces: Vec<Piece>,
    wraparound: bool,
    // f64 mirrors for fast evaluation
    lo_f: Vec<f64>,
    slope_f: Vec<f64>,
    intercept_f: Vec<f64>,
}

impl PiecewiseAffineMap {
    /// Builds a map from breakpoints `0 = b_0 < ... < b_k = 1`, one slope
    /// and intercept per piece. With `wraparound` the branch values are
    /// reduced mod 1 (pieces are split at preimages of integers).
    pub fn new(
        breakpoints: Vec<Rat>,
        slopes: Vec<Rat>,
        intercepts: Vec<Rat>,
        wraparound: bool,
    ) -> Result<Self, MapError> {
        if breakpoints.len() < 2
            || breakpoints[0] != Rat::zero()
            || *breakpoints.last().unwrap() != Rat::one()
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(MapError::BadBreakpoints);
        }
        let k = breakpoints.len() - 1;
        if slopes.len() != k || intercepts.len() != k {
            return Err(MapError::PieceCountMismatch(
                slopes.len().min(intercepts.len()),
                k,
            ));
        }
        let mut pieces = Vec::new();
        for i in 0..k {
            let piece = Piece {
                lo: breakpoints[i].clone(),
                hi: breakpoints[i + 1].clone(),
                slope: slopes[i].clone(),
                intercept: intercepts[i].clone(),
            };
            if wraparound && !piece.slope.is_zero() {
                split_mod_one(piece, &mut pieces);
            } else {
                pieces.push(piece);
            }
        }
        let m = Self::from_pieces_internal(pieces, wraparound)?;
        Ok(m)
    }

    fn from_pieces_internal(pieces: Vec<Piece>, wraparound: bool) -> Result<Self, MapError> {
        let zero = Rat::zero();
        let one = Rat::one();
        for (i, p) in pieces.iter().enumerate() {
            let (lo, hi) = p.image();
            if lo < zero || hi > one {
                return Err(MapError::ImageEscapes(i, rat_to_f64(&lo), rat_to_f64(&hi)));
            }
        }
        let lo_f = pieces.iter().map(|p| rat_to_f64(&p.lo)).collect();
        let slope_f = pieces.iter().map(|p| rat_to_f64(&p.slope)).collect();
        let intercept_f = pieces.iter().map(|p| rat_to_f64(&p.intercept)).collect();
        Ok(PiecewiseAffineMap {
            pieces,
            wraparound,
            lo_f,
            slope_f,
            intercept_f,
        })
    }

    /// Convenience constructor from f64 data (converted exactly; every
    /// finite f64 is a dyadic rational).
    pub fn from_f64(
        breakpoints: &[f64],
        slopes: &[f64],
        intercepts: &[f64],
        wraparound: bool,
    ) -> Result<Self, MapError> {
        let conv = |xs: &[f64]| -> Result<Vec<Rat>, MapError> {
            xs.iter()
                .map(|&x| Rat::from_f64(x).ok_or(MapError::BadBreakpoints))
                .collect()
        };
        Self::new(
            conv(breakpoints)?,
            conv(slopes)?,
            conv(intercepts)?,
            wraparound,
        )
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn wraparound(&self) -> bool {
        self.wraparound
    }

    /// Affine evaluation on the containing piece; breakpoint ties resolve
    /// to the right-hand piece. Values equal to 1 fold to 0.
    pub fn eval(&self, x: f64) -> f64 {
        let i = match self.lo_f.binary_search_by(|lo| lo.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let y = self.slope_f[i] * x + self.intercept_f[i];
        if y >= 1.0 {
            y - 1.0
        } else if y < 0.0 {
            0.0
        } else {
            y
        }
    }

    /// Exact rational evaluation.
    pub fn eval_exact(&self, x: &Rat) -> Rat {
        let i = self.pieces.iter().rposition(|p| &p.lo <= x).unwrap_or(0);
        let p = &self.pieces[i];
        let y = &p.slope * x + &p.intercept;
        if y >= Rat::one() {
            y - Rat::one()
        } else {
            y
        }
    }

    /// Expansion constants computed from the piece list.
    pub fn expansion_data(&self) -> Result<ExpansionData, MapError> {
        let mut lambda: Option<Rat> = None;
        let mut lipschitz: Option<Rat> = None;
        let mut min_len: Option<Rat> = None;
        for (i, p) in self.pieces.iter().enumerate() {
            if p.slope.is_zero() {
                return Err(MapError::ZeroSlope(i));
            }
            let a = p.slope.abs();
            let len = &p.hi - &p.lo;
            lambda = Some(match lambda {
                Some(l) if l <= a => l,
                _ => a.clone(),
            });
            lipschitz = Some(match lipschitz {
                Some(l) if l >= a => l,
                _ => a,
            });
            min_len = Some(match min_len {
                Some(m) if m <= len => m,
                _ => len,
            });
        }
        let lambda = lambda.unwrap();
        let min_len = min_len.unwrap();
        let beta1 = rat_int(2) / (&lambda * &min_len);
        Ok(ExpansionData {
            lambda,
            beta1,
            beta2: Rat::zero(),
            lipschitz: lipschitz.unwrap(),
        })
    }
}

fn split_mod_one(piece: Piece, out: &mut Vec<Piece>) {
    // Split [lo,hi) at preimages of integers so each sub-piece image lies
    // within one unit interval, then shift the intercept back into [0,1].
    let (img_lo, img_hi) = piece.image();
    let k_lo = img_lo.floor().to_integer();
    let k_hi = img_hi.ceil().to_integer();
    let mut cuts = vec![piece.lo.clone()];
    let mut k: num_bigint::BigInt = &k_lo + 1;
    while Rat::from_integer(k.clone()) < img_hi {
        let pre = (Rat::from_integer(k.clone()) - &piece.intercept) / &piece.slope;
        if pre > piece.lo && pre < piece.hi {
            cuts.push(pre);
        }
        k += 1;
    }
    let _ = k_hi;
    cuts.push(piece.hi.clone());
    cuts.sort();
    cuts.dedup();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0].clone(), w[1].clone());
        let mid = (&lo + &hi) / rat_int(2);
        let val = &piece.slope * mid + &piece.intercept;
        let shift = val.floor().to_integer();
        out.push(Piece {
            lo,
            hi,
            slope: piece.slope.clone(),
            intercept: &piece.intercept - Rat::from_integer(shift),
        });
    }
}

// ---------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------

/// Angle-doubling map `x -> 2x mod 1` (two full branches).
pub fn doubling() -> PiecewiseAffineMap {
    full_branch(2)
}

/// `x -> 3x mod 1` (three full branches).
pub fn tripling() -> PiecewiseAffineMap {
    full_branch(3)
}

/// `x -> kx mod 1` with `k >= 1` full affine branches of slope `k`.
pub fn full_branch(k: u32) -> PiecewiseAffineMap {
    assert!(k >= 1);
    let k = k as i64;
    let breakpoints = (0..=k).map(|i| ratio(i, k)).collect();
    let slopes = vec![rat_int(k); k as usize];
    let intercepts = (0..k).map(|i| rat_int(-i)).collect();
    PiecewiseAffineMap::new(breakpoints, slopes, intercepts, false).unwrap()
}

pub fn identity() -> PiecewiseAffineMap {
    PiecewiseAffineMap::new(
        vec![Rat::zero(), Rat::one()],
        vec![Rat::one()],
        vec![Rat::zero()],
        false,
    )
    .unwrap()
}

/// Tent map: `2x` on `[0,1/2)`, `2-2x` on `[1/2,1)`.
pub fn tent() -> PiecewiseAffineMap {
    PiecewiseAffineMap::new(
        vec![Rat::zero(), ratio(1, 2), Rat::one()],
        vec![rat_int(2), rat_int(-2)],
        vec![Rat::zero(), rat_int(2)],
        false,
    )
    .unwrap()
}

// ---------------------------------------------------------------------
// Perturbation family
// ---------------------------------------------------------------------

/// Specification of a piecewise-affine perturbation: affine contractions
/// `x -> slope_i * x + intercept_i` on disjoint intervals `[a_i, a'_i]`,
/// identity elsewhere, with each branch mapping its interval into itself.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationMapSpec {
    pub intervals: Vec<(Rat, Rat)>,
    pub slopes: Vec<Rat>,
    pub intercepts: Vec<Rat>,
}

impl PerturbationMapSpec {
    pub fn new(
        intervals: Vec<(Rat, Rat)>,
        slopes: Vec<Rat>,
        intercepts: Vec<Rat>,
    ) -> Result<Self, MapError> {
        let n = intervals.len();
        if slopes.len() != n || intercepts.len() != n {
            return Err(MapError::PieceCountMismatch(
                slopes.len().min(intercepts.len()),
                n,
            ));
        }
        let zero = Rat::zero();
        let one = Rat::one();
        let mut prev_hi = zero.clone();
        for (i, (a, b)) in intervals.iter().enumerate() {
            if a >= b || *a < zero || *b > one || (i > 0 && *a < prev_hi) {
                return Err(MapError::BadIntervals);
            }
            prev_hi = b.clone();
        }
        for s in &slopes {
            if *s <= zero {
                return Err(MapError::NonPositiveSlope);
            }
        }
        for i in 0..n {
            let (a, b) = &intervals[i];
            let ia = &slopes[i] * a + &intercepts[i];
            let ib = &slopes[i] * b + &intercepts[i];
            if ia < *a || ib > *b {
                return Err(MapError::ContainmentViolated(
                    i,
                    rat_to_f64(&ia),
                    rat_to_f64(&ib),
                ));
            }
        }
        Ok(PerturbationMapSpec {
            intervals,
            slopes,
            intercepts,
        })
    }

    /// Builds the spec with midpoint-fixing intercepts
    /// `c_i = (1 - slope_i) * (a_i + a'_i) / 2`, which always satisfy the
    /// containment requirement for slopes in `(0, 1]`.
    pub fn with_midpoint_intercepts(
        intervals: Vec<(Rat, Rat)>,
        slopes: Vec<Rat>,
    ) -> Result<Self, MapError> {
        let intercepts = intervals
            .iter()
            .zip(&slopes)
            .map(|((a, b), s)| (Rat::one() - s) * (a + b) / rat_int(2))
            .collect();
        Self::new(intervals, slopes, intercepts)
    }

    pub fn piece_count(&self) -> usize {
        self.intervals.len()
    }

    /// Total length of the perturbed region `A`.
    pub fn total_length(&self) -> Rat {
        self.intervals
            .iter()
            .map(|(a, b)| b - a)
            .fold(Rat::zero(), |acc, l| acc + l)
    }

    /// `n + 1 + sum_i 1/slope_i`: the strong-norm growth factor of the
    /// induced transfer operator.
    pub fn strong_factor(&self) -> Rat {
        let n = rat_int(self.piece_count() as i64);
        let inv: Rat = self
            .slopes
            .iter()
            .map(|s| s.recip())
            .fold(Rat::zero(), |a, b| a + b);
        n + Rat::one() + inv
    }

    /// `(n + 2 + sum_i 1/slope_i) * |A| / 2`: the weak-distance factor.
    pub fn weak_factor(&self) -> Rat {
        let n = rat_int(self.piece_count() as i64);
        let inv: Rat = self
            .slopes
            .iter()
            .map(|s| s.recip())
            .fold(Rat::zero(), |a, b| a + b);
        (n + rat_int(2) + inv) * self.total_length() / rat_int(2)
    }
}

/// Realizes the spec as a piecewise-affine map: identity outside the
/// union of the intervals, the given affine branches inside.
pub fn build_perturbation_map(spec: &PerturbationMapSpec) -> Result<PiecewiseAffineMap, MapError> {
    let zero = Rat::zero();
    let one = Rat::one();
    let mut breakpoints = vec![zero.clone()];
    let mut slopes = Vec::new();
    let mut intercepts = Vec::new();
    let mut cursor = zero;
    for (i, (a, b)) in spec.intervals.iter().enumerate() {
        if *a > cursor {
            breakpoints.push(a.clone());
            slopes.push(Rat::one());
            intercepts.push(Rat::zero());
        }
        breakpoints.push(b.clone());
        slopes.push(spec.slopes[i].clone());
        intercepts.push(spec.intercepts[i].clone());
        cursor = b.clone();
    }
    if cursor < one {
        breakpoints.push(one);
        slopes.push(Rat::one());
        intercepts.push(Rat::zero());
    } else {
        // last interval ends exactly at 1
        if *breakpoints.last().unwrap() != one {
            breakpoints.push(one);
        }
    }
    // dedup possible zero-length identity gap when an interval starts at 0
    PiecewiseAffineMap::new(breakpoints, slopes, intercepts, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn doubling_eval() {
        let m = doubling();
        assert_abs_diff_eq!(m.eval(0.3), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(m.eval(0.7), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn identity_eval() {
        let m = identity();
        for &x in &[0.0, 0.25, 0.9999] {
            assert_eq!(m.eval(x), x);
        }
    }

    #[test]
    fn eval_exact_matches_f64_on_dyadics() {
        let m = tripling();
        for &x in &[0.0, 0.125, 0.5, 0.875] {
            let ex = m.eval_exact(&Rat::from_f64(x).unwrap());
            assert_eq!(rat_to_f64(&ex), m.eval(x));
        }
    }

    #[test]
    fn tripling_expansion_data() {
        let e = tripling().expansion_data().unwrap();
        assert_eq!(e.lambda, rat_int(3));
        assert_eq!(e.beta1, rat_int(2));
        assert_eq!(e.beta2, Rat::zero());
        assert_eq!(e.beta(), rat_int(2));
    }

    #[test]
    fn doubling_expansion_data() {
        let e = doubling().expansion_data().unwrap();
        assert_eq!(e.lambda, rat_int(2));
        assert_eq!(e.beta1, rat_int(2));
        assert_eq!(e.lipschitz, rat_int(2));
    }

    #[test]
    fn identity_expansion_data() {
        let e = identity().expansion_data().unwrap();
        assert_eq!(e.lambda, Rat::one());
        assert_eq!(e.lipschitz, Rat::one());
    }

    #[test]
    fn tent_expansion() {
        let e = tent().expansion_data().unwrap();
        assert_eq!(e.lambda, rat_int(2));
        assert_eq!(e.beta2, Rat::zero());
    }

    #[test]
    fn perturbation_midpoint_intercept() {
        // [0.25, 0.5] with slope 1/2: intercept 3/16, image [5/16, 7/16]
        let spec = PerturbationMapSpec::with_midpoint_intercepts(
            vec![(ratio(1, 4), ratio(1, 2))],
            vec![ratio(1, 2)],
        )
        .unwrap();
        assert_eq!(spec.intercepts[0], ratio(3, 16));
        let m = build_perturbation_map(&spec).unwrap();
        assert_abs_diff_eq!(m.eval(0.25), 0.3125, epsilon = 1e-15);
        assert_abs_diff_eq!(m.eval(0.375), 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(m.eval(0.1), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(m.eval(0.9), 0.9, epsilon = 1e-15);
        // the interval stays invariant under composition
        let mut x = Rat::from_f64(0.3).unwrap();
        for _ in 0..10 {
            x = m.eval_exact(&x);
            assert!(x >= ratio(1, 4) && x <= ratio(1, 2));
        }
    }

    #[test]
    fn perturbation_empty_spec_is_identity() {
        let spec = PerturbationMapSpec::new(vec![], vec![], vec![]).unwrap();
        let m = build_perturbation_map(&spec).unwrap();
        assert_eq!(m, identity());
    }

    #[test]
    fn perturbation_expanding_slope_rejected() {
        // slope 2 on [0, 0.1] cannot map the interval into itself
        let r = PerturbationMapSpec::with_midpoint_intercepts(
            vec![(Rat::zero(), ratio(1, 10))],
            vec![rat_int(2)],
        );
        assert!(matches!(r, Err(MapError::ContainmentViolated(..))));
    }

    #[test]
    fn perturbation_overlapping_intervals_rejected() {
        let r = PerturbationMapSpec::with_midpoint_intercepts(
            vec![(ratio(1, 4), ratio(1, 2)), (ratio(2, 5), ratio(3, 5))],
            vec![ratio(1, 2), ratio(1, 2)],
        );
        assert!(matches!(r, Err(MapError::BadIntervals)));
    }

    #[test]
    fn perturbation_factors() {
        let spec = PerturbationMapSpec::with_midpoint_intercepts(
            vec![(ratio(1, 4), ratio(1, 2))],
            vec![ratio(1, 2)],
        )
        .unwrap();
        assert_eq!(spec.strong_factor(), rat_int(4)); // 1 + 1 + 2
        assert_eq!(spec.weak_factor(), ratio(5, 8)); // (1+2+2) * 1/4 / 2
        assert_eq!(spec.total_length(), ratio(1, 4));
    }

    #[test]
    fn wraparound_canonicalization() {
        // single piece of slope 2 with wraparound splits into two branches
        let m = PiecewiseAffineMap::new(
            vec![Rat::zero(), Rat::one()],
            vec![rat_int(2)],
            vec![Rat::zero()],
            true,
        )
        .unwrap();
        assert_eq!(m.pieces(), doubling().pieces());
        assert_abs_diff_eq!(m.eval(0.7), 0.4, epsilon = 1e-15);
    }
}
