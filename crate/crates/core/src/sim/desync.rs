//! Three-particle gap recurrence on the circle under the doubling map
//! with rigid threshold interaction.
//!
//! For gaps `(a, b)` with `0 < a, b <= eps < a + b`, one lattice step
//! sends `(a, b)` to `((a + 2b)/3, (2a + b)/3)`: the sum is conserved and
//! the difference flips sign and shrinks by 3, so the gaps converge to
//! `((a+b)/2, (a+b)/2)` while the configuration diameter stays at
//! `a + b > eps` forever. In exact arithmetic the trajectory therefore
//! never synchronizes; under coarse rounding it may.

use super::exact::run_threshold;
use super::quantized::run_threshold_quantized;
use super::{Arithmetic, RunRecord, SimError, SimulationSpec};
use crate::maps::doubling;
use crate::numutil::{rat_int, rat_to_f64};
use crate::space::{Configuration, Space, Topology};
use crate::Rat;
use num_traits::{One, Signed, ToPrimitive, Zero};

fn in_domain(a: &Rat, b: &Rat, eps: &Rat) -> bool {
    a > &Rat::zero() && b > &Rat::zero() && a <= eps && b <= eps && &(a + b) > eps
}

/// Orbit of the gap recurrence, tracked exactly.
#[derive(Debug, Clone)]
pub struct DistanceOrbit {
    /// Every iterate satisfied `0 < a, b <= eps < a + b`.
    pub stays_in_domain: bool,
    pub first_exit: Option<usize>,
    /// `a + b` was exactly equal to its initial value at every step.
    pub sum_conserved: bool,
    /// f64 shadow of the orbit for plotting, one pair per step (including
    /// step 0); the domain and conservation checks above are exact.
    pub pairs: Vec<(f64, f64)>,
    pub final_pair: (Rat, Rat),
}

/// Iterates `(a, b) -> ((a + 2b)/3, (2a + b)/3)` exactly for `steps`
/// steps. The start must lie in the domain.
///
/// Internally the pair is kept as integer numerators over the common
/// denominator `d * 3^t`, which avoids gcd reduction entirely.
pub fn distance_orbit(
    a0: &Rat,
    b0: &Rat,
    eps: &Rat,
    steps: usize,
) -> Result<DistanceOrbit, SimError> {
    if !in_domain(a0, b0, eps) {
        return Err(SimError::StartOutsideDomain {
            a: rat_to_f64(a0),
            b: rat_to_f64(b0),
        });
    }
    // common denominator d: a = A/d, b = B/d, eps = E/d
    let d = a0.denom() * b0.denom() * eps.denom();
    let mut a = a0.numer() * (&d / a0.denom());
    let mut b = b0.numer() * (&d / b0.denom());
    let mut e = eps.numer() * (&d / eps.denom());
    let sum0 = &a + &b;
    let mut sum_target = sum0.clone();
    let mut stays = true;
    let mut first_exit = None;
    let mut sum_conserved = true;
    let mut pairs = Vec::with_capacity(steps + 1);
    let mut denom = d.clone();

    let mut af = rat_to_f64(a0);
    let mut bf = rat_to_f64(b0);
    pairs.push((af, bf));

    for t in 1..=steps {
        // (a, b) <- (a + 2b, 2a + b), denominator gains a factor 3
        let na = &a + &b * 2;
        let nb = &a * 2 + &b;
        a = na;
        b = nb;
        e *= 3;
        denom *= 3;
        sum_target *= 3;
        if &a + &b != sum_target {
            sum_conserved = false;
        }
        let inside = a.is_positive() && b.is_positive() && a <= e && b <= e && &a + &b > e;
        if !inside && first_exit.is_none() {
            stays = false;
            first_exit = Some(t);
        }
        let naf = (af + 2.0 * bf) / 3.0;
        bf = (2.0 * af + bf) / 3.0;
        af = naf;
        pairs.push((af, bf));
    }
    Ok(DistanceOrbit {
        stays_in_domain: stays,
        first_exit,
        sum_conserved,
        pairs,
        final_pair: (Rat::new(a, denom.clone()), Rat::new(b, denom)),
    })
}

/// Full three-particle position run: particles at `x1`, `x1 + a0`,
/// `x1 + a0 + b0` on the circle under rigid threshold doubling dynamics,
/// in the requested arithmetic.
#[derive(Debug, Clone)]
pub struct PositionRun {
    pub record: RunRecord,
    /// Exact-mode only: every recorded diameter exceeded `eps`.
    pub all_diameters_exceed_eps: Option<bool>,
}

pub fn position_run(
    x1: &Rat,
    a0: &Rat,
    b0: &Rat,
    eps: &Rat,
    horizon: usize,
    arithmetic: Arithmetic,
) -> Result<PositionRun, SimError> {
    let start = vec![x1.clone(), x1 + a0, x1 + a0 + b0];
    let start = start
        .into_iter()
        .map(|x| {
            let mut y = x;
            while y >= Rat::one() {
                y -= rat_int(1);
            }
            y
        })
        .collect::<Vec<Rat>>();
    let space = Space::circle();
    match arithmetic {
        Arithmetic::Rational => {
            let exact = run_threshold(
                start,
                Topology::Circle,
                &doubling(),
                eps,
                &Rat::zero(),
                horizon,
                &Rat::zero(),
            );
            let all_exceed = exact.diameters.iter().all(|d| d > eps);
            let final_config = Configuration::new(
                exact
                    .final_positions
                    .iter()
                    .map(|x| vec![rat_to_f64(x)])
                    .collect(),
                &space,
            )?;
            Ok(PositionRun {
                record: RunRecord {
                    diameters: exact.diameters.iter().map(rat_to_f64).collect(),
                    cluster_counts: exact.cluster_counts,
                    sync_time: exact.sync_time,
                    hit_time: exact.hit_time,
                    final_config,
                },
                all_diameters_exceed_eps: Some(all_exceed),
            })
        }
        Arithmetic::Quantized { bits } => {
            let q = run_threshold_quantized(
                start,
                Topology::Circle,
                &doubling(),
                eps,
                &Rat::zero(),
                horizon,
                bits,
            )?;
            let final_config = Configuration::new(
                q.final_positions
                    .iter()
                    .map(|x| vec![x.to_f64().unwrap()])
                    .collect(),
                &space,
            )?;
            Ok(PositionRun {
                record: RunRecord {
                    diameters: q.diameters,
                    cluster_counts: q.cluster_counts,
                    sync_time: q.sync_time,
                    hit_time: q.hit_time,
                    final_config,
                },
                all_diameters_exceed_eps: None,
            })
        }
        Arithmetic::Double => {
            let spec = SimulationSpec {
                space,
                maps: vec![doubling()],
                rule: crate::interact::InteractionRule::threshold(rat_to_f64(eps), 0.0),
                init: super::InitialCondition::Fixed(Configuration::new(
                    start.iter().map(|x| vec![rat_to_f64(x)]).collect(),
                    &Space::circle(),
                )?),
                horizon,
                sync_tolerance: 0.0,
                arithmetic: Arithmetic::Double,
            };
            Ok(PositionRun {
                record: super::run(&spec, 0)?,
                all_diameters_exceed_eps: None,
            })
        }
    }
}

/// Reference values: the fixed point of the gap recurrence is
/// `((a0 + b0)/2, (a0 + b0)/2)`.
pub fn gap_fixed_point(a0: &Rat, b0: &Rat) -> (Rat, Rat) {
    let half_sum = (a0 + b0) / rat_int(2);
    (half_sum.clone(), half_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numutil::ratio;
    use num_bigint::BigInt;

    fn eps() -> Rat {
        ratio(1, 100)
    }

    #[test]
    fn fixed_point_stays() {
        // (0.6 eps, 0.6 eps) is a fixed point
        let a = ratio(6, 1000);
        let orbit = distance_orbit(&a, &a, &eps(), 20).unwrap();
        assert!(orbit.stays_in_domain);
        assert!(orbit.sum_conserved);
        assert_eq!(orbit.final_pair.0, a);
        assert_eq!(orbit.final_pair.1, a);
    }

    #[test]
    fn one_step_values() {
        // (0.9 eps, 0.2 eps) -> ((a+2b)/3, (2a+b)/3) = (13/3, 20/3) * eps/10
        let a = ratio(9, 1000);
        let b = ratio(2, 1000);
        let orbit = distance_orbit(&a, &b, &eps(), 1).unwrap();
        assert_eq!(orbit.final_pair.0, ratio(13, 3000));
        assert_eq!(orbit.final_pair.1, ratio(20, 3000));
        assert!(orbit.sum_conserved);
    }

    #[test]
    fn converges_to_half_sum() {
        let a = ratio(9, 1000);
        let b = ratio(2, 1000);
        let orbit = distance_orbit(&a, &b, &eps(), 60).unwrap();
        let (fa, fb) = gap_fixed_point(&a, &b);
        let da = (&orbit.final_pair.0 - &fa).abs();
        let db = (&orbit.final_pair.1 - &fb).abs();
        let tol = Rat::new(1.into(), BigInt::from(10u64).pow(12));
        assert!(da <= tol && db <= tol);
    }

    #[test]
    fn start_outside_domain_rejected() {
        // a + b <= eps
        let a = ratio(4, 1000);
        let b = ratio(5, 1000);
        assert!(matches!(
            distance_orbit(&a, &b, &eps(), 5),
            Err(SimError::StartOutsideDomain { .. })
        ));
    }

    #[test]
    fn exact_position_run_never_syncs() {
        let run = position_run(
            &ratio(1, 7),
            &ratio(9, 1000),
            &ratio(2, 1000),
            &eps(),
            200,
            Arithmetic::Rational,
        )
        .unwrap();
        assert_eq!(run.record.sync_time, None);
        assert_eq!(run.all_diameters_exceed_eps, Some(true));
    }

    #[test]
    fn quantized_position_run_completes() {
        let run = position_run(
            &ratio(1, 7),
            &ratio(9, 1000),
            &ratio(2, 1000),
            &eps(),
            2000,
            Arithmetic::Quantized { bits: 10 },
        )
        .unwrap();
        assert!(!run.record.diameters.is_empty());
    }

    #[test]
    fn position_gaps_follow_distance_orbit() {
        // the diameter of the position run equals a + b, conserved
        let a = ratio(9, 1000);
        let b = ratio(2, 1000);
        let run = position_run(&ratio(3, 10), &a, &b, &eps(), 50, Arithmetic::Rational).unwrap();
        let sum = rat_to_f64(&(&a + &b));
        for &d in &run.record.diameters {
            assert!((d - sum).abs() < 1e-15);
        }
    }
}
