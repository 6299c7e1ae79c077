//! Shrink factor of a ring of particles under one rigid interaction.
//!
//! With `n` particles uniformly spaced on a planar circle of radius
//! `r_n = (eps/2)/sin(pi/n)`, each particle has exactly its two ring
//! neighbors at Euclidean distance `eps`. A rigid interaction moves every
//! particle to the centroid of itself and those neighbors, leaving a
//! uniform ring of radius `r_n (1 + 2 cos(2 pi / n)) / 3`. For `n = 3`
//! all particles are mutual neighbors and the ring collapses to a point.

use super::SimError;

/// `cos(2 pi / n)`, exact at the angles with rational cosine.
fn cos_two_pi_over(n: usize) -> f64 {
    match n {
        1 => 1.0,
        2 => -1.0,
        3 => -0.5,
        4 => 0.0,
        6 => 0.5,
        _ => (2.0 * std::f64::consts::PI / n as f64).cos(),
    }
}

/// Closed-form ratio of the ring radius after one rigid interaction to
/// the radius before, clamped to `[0,1]`.
pub fn shrink_factor_closed(n: usize) -> Result<f64, SimError> {
    if n < 3 {
        return Err(SimError::RingTooSmall(n));
    }
    Ok(((1.0 + 2.0 * cos_two_pi_over(n)) / 3.0).max(0.0))
}

/// Point `k` of an `n`-ring of radius `r`; coordinates are exact at the
/// quarter-turn angles.
fn ring_point(r: f64, k: usize, n: usize) -> (f64, f64) {
    let q = 4 * k;
    if q.is_multiple_of(n) {
        match (q / n) % 4 {
            0 => (r, 0.0),
            1 => (0.0, r),
            2 => (-r, 0.0),
            _ => (0.0, -r),
        }
    } else {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        (r * t.cos(), r * t.sin())
    }
}

/// Direct planar simulation: places the ring, finds the threshold
/// neighbor sets under the Euclidean metric, applies one rigid averaging
/// step and measures the radius ratio.
pub fn shrink_factor_simulated(n: usize) -> Result<f64, SimError> {
    if n < 3 {
        return Err(SimError::RingTooSmall(n));
    }
    let r = 3.0;
    let pts: Vec<(f64, f64)> = (0..n).map(|k| ring_point(r, k, n)).collect();
    // interaction radius: the exact ring-neighbor chord, with an
    // ulp-scale slack so the neighbors at distance exactly eps stay in
    let eps = 2.0 * r * (std::f64::consts::PI / n as f64).sin() * (1.0 + 1e-9);
    let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();

    let mut new_pts = Vec::with_capacity(n);
    for i in 0..n {
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut count = 0.0;
        for j in 0..n {
            if i == j || dist(pts[i], pts[j]) <= eps {
                sx += pts[j].0;
                sy += pts[j].1;
                count += 1.0;
            }
        }
        new_pts.push((sx / count, sy / count));
    }
    let centroid = new_pts
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let centroid = (centroid.0 / n as f64, centroid.1 / n as f64);
    let new_r = new_pts
        .iter()
        .map(|&p| dist(p, centroid))
        .fold(0.0, f64::max);
    Ok(new_r / r)
}
