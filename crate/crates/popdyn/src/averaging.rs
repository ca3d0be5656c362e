//! Averaging near the zero-Hopf thresholds of the reduced two-prey systems.
//!
//! Near a zero-Hopf point the translated system is written in cylindrical
//! coordinates `x = rho cos(theta)`, `y = rho sin(theta)`, the radial and
//! axial equations are rescaled by a small amplitude and averaged over
//! `theta`. The averaged planar system has a unique fixed point at the
//! origin whose (diagonal) Jacobian predicts the existence and stability of
//! a periodic orbit of the full system. A numeric Poincare return map
//! validates the prediction.

use crate::bifurcation::{Ch4Reduced, SymmetricReduced};
use crate::error::{Error, Result};
use crate::integrate::{integrate_to, IntOptions};
use crate::model::OdeSystem;

/// Default relative distance from the zero-Hopf parameter values within
/// which the averaged approximation is considered meaningful.
pub const DEFAULT_NEARNESS: f64 = 0.01;

/// Number of composite-Simpson nodes used for the quadrature cross-check.
const SIMPSON_NODES: usize = 1024;

/// The averaged planar system `rho' = a rho`, `z' = b z` (the off-diagonal
/// averages vanish identically for both families).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct AveragedSystem {
    /// Coefficient of `rho` in the averaged radial equation.
    pub f1_rho_coefficient: f64,
    /// Coefficient of `z` in the averaged axial equation.
    pub f2_z_coefficient: f64,
}

impl AveragedSystem {
    /// Whether the averaged Jacobian `diag(a, b)` is degenerate (a zero
    /// diagonal entry defeats the nondegeneracy hypothesis of the averaging
    /// theorem).
    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.f1_rho_coefficient.abs() <= tol || self.f2_z_coefficient.abs() <= tol
    }
}

/// Stability verdict for the averaged periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Attracting,
    Unstable,
    Undecided,
}

/// Existence/stability prediction for the periodic orbit born at the
/// zero-Hopf point.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct OrbitPrediction {
    pub exists: bool,
    pub stability: Stability,
    pub averaged: AveragedSystem,
}

fn check_near(name: &str, value: f64, target: f64, rel_tol: f64) -> Result<()> {
    if (value - target).abs() > rel_tol * (1.0 + target.abs()) {
        return Err(Error::Precondition(format!(
            "{name} = {value} is not within {rel_tol:e} (relative) of the \
             zero-Hopf value {target}"
        )));
    }
    Ok(())
}

/// Zero-Hopf parameter values `(c1, m)` of the reduced two-prey system for
/// given rates, without the spectrum gate (the averaged formulas stay
/// meaningful on both sides of the `K2` threshold).
pub fn zero_hopf_parameters_ch4(r1: f64, r2: f64, k2: f64) -> (f64, f64) {
    let c1 = (4.0 + r2 * (8.0 * k2 * (8.0 * k2 + 1.0) - 31.0) / (r1 * k2 * (2.0 * k2 - 3.0)))
        / 45.0;
    let m = r2 / 5.0 - r1 / 10.0 - 3.0 * r2 / (10.0 * k2);
    (c1, m)
}

/// Cylindrical-coordinate integrands `(F1, F2)(theta)` of the reduced
/// two-prey system at radial/axial amplitudes `(rho, z)`.
pub fn integrands_ch4(sys: &Ch4Reduced, theta: f64, rho: f64, z: f64) -> (f64, f64) {
    let (r1, r2, k2, c1, m) = (sys.r1, sys.r2, sys.k2, sys.c1, sys.m);
    let (s, c) = theta.sin_cos();
    let f1 = -r1 / 10.0 * rho * c * c + r2 * (2.0 * k2 - 3.0) / (10.0 * k2) * rho * s * s
        - 3.0 * r1 / 16.0 * z * c
        + r2 * (1.0 - 4.0 * k2) / (16.0 * k2) * z * s;
    let f2 = 3.0 * c1 * r1 / 5.0 * rho * c + r2 * (4.0 * k2 - 1.0) / (5.0 * k2) * rho * s
        - m * z;
    (f1, f2)
}

/// Cylindrical-coordinate integrands `(F1, F2)(theta)` of the symmetric
/// variant at radial/axial amplitudes `(rho, z)`.
pub fn integrands_symmetric(sys: &SymmetricReduced, theta: f64, rho: f64, z: f64) -> (f64, f64) {
    let (r1, r2, c1, m) = (sys.r1, sys.r2, sys.c1, sys.m);
    let (s, c) = theta.sin_cos();
    let f1 = rho * (-2.0 * r1 * c * c + (r1 + r2) * c * s - 2.0 * r2 * s * s)
        - 3.0 * z * (r1 * c + r2 * s);
    let f2 = c1 * ((2.0 * r1 - r2) * rho * c + (2.0 * r2 - r1) * rho * s) - 3.0 * m * z;
    (f1, f2)
}

/// Mean of a periodic integrand over `[0, 2 pi]` by composite Simpson.
pub fn simpson_mean(f: impl Fn(f64) -> f64) -> f64 {
    let n = SIMPSON_NODES; // even
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let mut acc = f(0.0) + f(2.0 * std::f64::consts::PI);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0 / (2.0 * std::f64::consts::PI)
}

/// Averaged system for the reduced two-prey family, in closed form. Errors
/// if `(c1, m)` is farther than `rel_tol` (relative) from the zero-Hopf
/// values.
pub fn average_ch4(sys: &Ch4Reduced, rel_tol: f64) -> Result<AveragedSystem> {
    let (c1_star, m_star) = zero_hopf_parameters_ch4(sys.r1, sys.r2, sys.k2);
    check_near("c1", sys.c1, c1_star, rel_tol)?;
    check_near("m", sys.m, m_star, rel_tol)?;
    Ok(AveragedSystem {
        f1_rho_coefficient: (-sys.r1 + sys.r2 * (2.0 - 3.0 / sys.k2)) / 20.0,
        f2_z_coefficient: -sys.m,
    })
}

/// Averaged system for the reduced two-prey family by numeric quadrature of
/// the cylindrical integrands (cross-check for the closed form).
pub fn average_ch4_quadrature(sys: &Ch4Reduced) -> AveragedSystem {
    AveragedSystem {
        f1_rho_coefficient: simpson_mean(|t| integrands_ch4(sys, t, 1.0, 0.0).0),
        f2_z_coefficient: simpson_mean(|t| integrands_ch4(sys, t, 0.0, 1.0).1),
    }
}

/// Averaged system for the symmetric variant, in closed form. Errors if
/// `(c1, m)` is farther than `rel_tol` (relative) from the degenerate
/// threshold `(2/3, -(2/3)(r1 + r2))`.
pub fn average_symmetric(sys: &SymmetricReduced, rel_tol: f64) -> Result<AveragedSystem> {
    check_near("c1", sys.c1, 2.0 / 3.0, rel_tol)?;
    check_near("m", sys.m, -2.0 / 3.0 * (sys.r1 + sys.r2), rel_tol)?;
    Ok(AveragedSystem {
        f1_rho_coefficient: -(sys.r1 + sys.r2),
        f2_z_coefficient: -3.0 * sys.m,
    })
}

/// Averaged system for the symmetric variant by numeric quadrature.
pub fn average_symmetric_quadrature(sys: &SymmetricReduced) -> AveragedSystem {
    AveragedSystem {
        f1_rho_coefficient: simpson_mean(|t| integrands_symmetric(sys, t, 1.0, 0.0).0),
        f2_z_coefficient: simpson_mean(|t| integrands_symmetric(sys, t, 0.0, 1.0).1),
    }
}

/// Existence and stability of the periodic orbit predicted by averaging for
/// the reduced two-prey family: the orbit exists when the averaged Jacobian
/// is nondegenerate, and is attracting exactly when `r1 > r2 (2 - 3/K2)`.
pub fn periodic_orbit_prediction_ch4(sys: &Ch4Reduced, rel_tol: f64) -> Result<OrbitPrediction> {
    let averaged = average_ch4(sys, rel_tol)?;
    let tol = 1e-12 * (1.0 + sys.r1.abs() + sys.r2.abs());
    if averaged.is_degenerate(tol) {
        return Err(Error::Precondition(
            "averaged Jacobian is degenerate; the averaging theorem does not apply".into(),
        ));
    }
    let margin = sys.r1 - sys.r2 * (2.0 - 3.0 / sys.k2);
    let stability = if margin > tol {
        Stability::Attracting
    } else if margin < -tol {
        Stability::Unstable
    } else {
        Stability::Undecided
    };
    Ok(OrbitPrediction {
        exists: true,
        stability,
        averaged,
    })
}

/// Existence and stability of the periodic orbit predicted by averaging for
/// the symmetric variant: it exists whenever the rates are positive, and is
/// always unstable (`m` has the opposite sign of `r1 + r2`, so the averaged
/// Jacobian is a saddle).
pub fn periodic_orbit_prediction_symmetric(
    sys: &SymmetricReduced,
    rel_tol: f64,
) -> Result<OrbitPrediction> {
    let averaged = average_symmetric(sys, rel_tol)?;
    let tol = 1e-12 * (1.0 + sys.r1.abs() + sys.r2.abs());
    if averaged.is_degenerate(tol) {
        return Err(Error::Precondition(
            "averaged Jacobian is degenerate; the averaging theorem does not apply".into(),
        ));
    }
    Ok(OrbitPrediction {
        exists: true,
        stability: Stability::Unstable,
        averaged,
    })
}

/// A planar Poincare section `{ x : normal . (x - point) = 0 }`, crossed in
/// the direction of positive `normal . x'`.
#[derive(Debug, Clone)]
pub struct Section {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
}

impl Section {
    fn value(&self, x: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(x.iter().zip(self.point.iter()))
            .map(|(n, (xi, pi))| n * (xi - pi))
            .sum()
    }
}

/// Result of a numeric Poincare return-map validation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PoincareResult {
    /// Mean return time over the recorded crossings.
    pub period: f64,
    /// Estimated magnitude of the dominant multiplier of the return map
    /// (geometric mean of successive crossing-displacement ratios).
    pub multiplier: f64,
    /// Number of section crossings recorded.
    pub crossings: usize,
    /// Sampled states at which the cylindrical angle was not increasing
    /// (the averaging step assumes `theta' > 0`).
    pub theta_dot_violations: usize,
}

/// Iterate the Poincare return map of `sys` on `section` starting from `x0`,
/// recording up to `n_iterates` positively-oriented crossings within
/// `max_time`. `center` is the equilibrium around which the cylindrical
/// angle (first two coordinates) is measured for the `theta' > 0` check.
pub fn poincare_validate<S: OdeSystem>(
    sys: &S,
    x0: &[f64],
    center: &[f64],
    section: &Section,
    n_iterates: usize,
    max_time: f64,
    opts: &IntOptions,
) -> Result<PoincareResult> {
    if section.normal.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidScenario("section normal is zero".into()));
    }
    let dt = max_time / 50_000.0;
    let mut t = 0.0;
    let mut x = x0.to_vec();
    let mut g = section.value(&x);
    let mut crossing_times: Vec<f64> = Vec::new();
    let mut crossing_states: Vec<Vec<f64>> = Vec::new();
    let mut theta_dot_violations = 0usize;
    let mut dx = vec![0.0; sys.dim()];
    while t < max_time && crossing_times.len() < n_iterates {
        let t_next = t + dt;
        let x_next = integrate_to(sys, &x, t, t_next, opts)?;
        let g_next = section.value(&x_next);
        sys.eval(&x_next, &mut dx);
        let rx = x_next[0] - center[0];
        let ry = x_next[1] - center[1];
        if rx * rx + ry * ry > 1e-24 && ry.mul_add(-dx[0], rx * dx[1]) <= 0.0 {
            theta_dot_violations += 1;
        }
        if g < 0.0 && g_next >= 0.0 {
            // Refine the crossing time by bisection on the bracketing step.
            let (mut lo, mut hi) = (t, t_next);
            let mut x_lo = x.clone();
            let mut x_hi = x_next.clone();
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                let x_mid = integrate_to(sys, &x_lo, lo, mid, opts)?;
                if section.value(&x_mid) < 0.0 {
                    lo = mid;
                    x_lo = x_mid;
                } else {
                    hi = mid;
                    x_hi = x_mid;
                }
                if hi - lo < 1e-12 * (1.0 + hi.abs()) {
                    break;
                }
            }
            crossing_times.push(hi);
            crossing_states.push(x_hi);
        }
        t = t_next;
        x = x_next;
        g = g_next;
    }
    if crossing_times.len() < 3 {
        return Err(Error::Numeric(format!(
            "no return: only {} section crossing(s) within t = {max_time}",
            crossing_times.len()
        )));
    }
    let n = crossing_times.len();
    let period = (crossing_times[n - 1] - crossing_times[0]) / (n - 1) as f64;
    // Successive displacements between crossings; their ratio estimates the
    // dominant multiplier magnitude. Displacements at round-off level are
    // dropped (the map has effectively converged).
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    };
    let scale = crossing_states[0]
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    let mut log_sum = 0.0;
    let mut count = 0usize;
    for w in crossing_states.windows(3) {
        let d0 = dist(&w[1], &w[0]);
        let d1 = dist(&w[2], &w[1]);
        if d0 > 1e-13 * (1.0 + scale) && d1 > 1e-13 * (1.0 + scale) {
            log_sum += (d1 / d0).ln();
            count += 1;
        }
    }
    let multiplier = if count > 0 {
        (log_sum / count as f64).exp()
    } else {
        // All displacements at round-off: the iterates have converged onto
        // a fixed point of the return map.
        0.0
    };
    Ok(PoincareResult {
        period,
        multiplier,
        crossings: n,
        theta_dot_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifurcation::zero_hopf_ch4;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn ch4_at_threshold(r1: f64, r2: f64, k2: f64) -> Ch4Reduced {
        let (c1, m) = zero_hopf_parameters_ch4(r1, r2, k2);
        Ch4Reduced { r1, r2, k2, c1, m }
    }

    #[test]
    fn averaged_coefficients_match_reference_example() {
        let sys = ch4_at_threshold(1.0, 1.7, 2.3);
        let avg = average_ch4(&sys, DEFAULT_NEARNESS).unwrap();
        assert_relative_eq!(
            avg.f1_rho_coefficient,
            (-1.0 + 1.7 * (2.0 - 3.0 / 2.3)) / 20.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(avg.f1_rho_coefficient, 0.0091304, epsilon = 1e-7);
        assert_relative_eq!(avg.f2_z_coefficient, -sys.m, max_relative = 1e-12);
    }

    #[test]
    fn symmetric_averaged_coefficients() {
        let sys = SymmetricReduced {
            r1: 1.0,
            r2: 1.0,
            c1: 2.0 / 3.0,
            m: -4.0 / 3.0,
        };
        let avg = average_symmetric(&sys, DEFAULT_NEARNESS).unwrap();
        assert_relative_eq!(avg.f1_rho_coefficient, -2.0, max_relative = 1e-12);
        assert_relative_eq!(avg.f2_z_coefficient, -3.0 * sys.m, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_forms_on_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let r1 = rng.gen_range(0.5..3.0);
            let r2 = rng.gen_range(0.5..3.0);
            let k2 = rng.gen_range(1.6..6.0);
            let sys = ch4_at_threshold(r1, r2, k2);
            let closed = average_ch4(&sys, DEFAULT_NEARNESS).unwrap();
            let quad = average_ch4_quadrature(&sys);
            assert!((closed.f1_rho_coefficient - quad.f1_rho_coefficient).abs() < 1e-8);
            assert!((closed.f2_z_coefficient - quad.f2_z_coefficient).abs() < 1e-8);
            // Off-diagonal averages vanish.
            assert!(simpson_mean(|t| integrands_ch4(&sys, t, 0.0, 1.0).0).abs() < 1e-8);
            assert!(simpson_mean(|t| integrands_ch4(&sys, t, 1.0, 0.0).1).abs() < 1e-8);

            let sym = SymmetricReduced {
                r1,
                r2,
                c1: 2.0 / 3.0,
                m: -2.0 / 3.0 * (r1 + r2),
            };
            let closed = average_symmetric(&sym, DEFAULT_NEARNESS).unwrap();
            let quad = average_symmetric_quadrature(&sym);
            assert!((closed.f1_rho_coefficient - quad.f1_rho_coefficient).abs() < 1e-8);
            assert!((closed.f2_z_coefficient - quad.f2_z_coefficient).abs() < 1e-8);
        }
    }

    #[test]
    fn nearness_gate_rejects_distant_parameters() {
        let mut sys = ch4_at_threshold(1.0, 1.7, 2.3);
        sys.m += 0.5;
        assert!(average_ch4(&sys, DEFAULT_NEARNESS).is_err());
        let sym = SymmetricReduced {
            r1: 1.0,
            r2: 1.0,
            c1: 0.9,
            m: -4.0 / 3.0,
        };
        assert!(average_symmetric(&sym, DEFAULT_NEARNESS).is_err());
    }

    #[test]
    fn prediction_follows_the_stability_inequality() {
        // r1 = 2 > 1.7 (2 - 3/2.3) = 1.18261: attracting side.
        let p = periodic_orbit_prediction_ch4(&ch4_at_threshold(2.0, 1.7, 2.3), DEFAULT_NEARNESS)
            .unwrap();
        assert!(p.exists);
        assert_eq!(p.stability, Stability::Attracting);
        // r1 = 1 < 1.18261: unstable side.
        let p = periodic_orbit_prediction_ch4(&ch4_at_threshold(1.0, 1.7, 2.3), DEFAULT_NEARNESS)
            .unwrap();
        assert!(p.exists);
        assert_eq!(p.stability, Stability::Unstable);
        // The symmetric variant is always unstable.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let r1 = rng.gen_range(0.3..3.0);
            let r2 = rng.gen_range(0.3..3.0);
            let sym = SymmetricReduced {
                r1,
                r2,
                c1: 2.0 / 3.0,
                m: -2.0 / 3.0 * (r1 + r2),
            };
            let p = periodic_orbit_prediction_symmetric(&sym, DEFAULT_NEARNESS).unwrap();
            assert_eq!(p.stability, Stability::Unstable);
        }
    }

    #[test]
    fn cylindrical_transform_identity_along_trajectory() {
        // rho' = x' cos(theta) + y' sin(theta) measured around the
        // equilibrium on a sampled trajectory.
        let sys = ch4_at_threshold(1.0, 1.7, 2.3);
        let center = [0.25, 0.25, 1.0];
        let traj = crate::integrate::sample(
            &sys,
            &[0.26, 0.25, 1.01],
            0.0,
            20.0,
            0.1,
            &IntOptions::default(),
        )
        .unwrap();
        let mut dx = [0.0; 3];
        for s in &traj.states {
            let (rx, ry) = (s[0] - center[0], s[1] - center[1]);
            let rho = rx.hypot(ry);
            if rho < 1e-6 {
                continue;
            }
            let (ct, st) = (rx / rho, ry / rho);
            sys.eval(s, &mut dx);
            let rho_dot_direct = (rx * dx[0] + ry * dx[1]) / rho;
            let rho_dot_cyl = dx[0] * ct + dx[1] * st;
            assert!((rho_dot_direct - rho_dot_cyl).abs() < 1e-10);
        }
    }

    /// Section through the post-transient state, with the flow direction as
    /// normal (the orbit center drifts along the slow direction, so a
    /// section anchored at the equilibrium can miss it entirely).
    fn flow_section(sys: &Ch4Reduced, x0: &[f64], t_transient: f64) -> (Vec<f64>, Section) {
        let xt =
            integrate_to(sys, x0, 0.0, t_transient, &IntOptions::default()).unwrap();
        let mut f = [0.0; 3];
        sys.eval(&xt, &mut f);
        (
            xt.clone(),
            Section {
                point: xt,
                normal: f.to_vec(),
            },
        )
    }

    #[test]
    fn poincare_agrees_with_predictions_and_hopf_frequency() {
        let center = [0.25, 0.25, 1.0];
        let opts = IntOptions::default();

        // Attracting side: r1 = 2 > r2 (2 - 3/K2).
        let sys = ch4_at_threshold(2.0, 1.7, 2.3);
        let (x0, section) = flow_section(&sys, &[0.27, 0.25, 1.0], 200.0);
        let res = poincare_validate(&sys, &x0, &center, &section, 40, 600.0, &opts).unwrap();
        assert!(res.multiplier < 1.0, "multiplier = {}", res.multiplier);
        // Return time tracks the frequency of the imaginary pair at the
        // equilibrium within 20%.
        let j = nalgebra::DMatrix::from_iterator(
            3,
            3,
            sys.jacobian_at_center().iter().copied(),
        );
        let omega = j
            .complex_eigenvalues()
            .iter()
            .map(|e| e.im.abs())
            .fold(0.0f64, f64::max);
        let expected = 2.0 * std::f64::consts::PI / omega;
        assert!(
            (res.period - expected).abs() < 0.2 * expected,
            "period = {}, 2 pi / omega = {expected}",
            res.period
        );

        // Unstable side: r1 = 1 < r2 (2 - 3/K2); the iterates drift away.
        let sys = ch4_at_threshold(1.0, 1.7, 2.3);
        let (x0, section) = flow_section(&sys, &[0.27, 0.25, 1.0], 200.0);
        let res = poincare_validate(&sys, &x0, &center, &section, 30, 600.0, &opts).unwrap();
        assert!(res.multiplier > 1.0, "multiplier = {}", res.multiplier);
        let zh = zero_hopf_ch4(1.0, 1.7, 2.3).unwrap();
        let expected = 2.0 * std::f64::consts::PI / zh.omega;
        assert!(
            (res.period - expected).abs() < 0.2 * expected,
            "period = {}, 2 pi / omega = {expected}",
            res.period
        );
    }

    #[test]
    fn poincare_no_return_for_equilibrium_regime() {
        // Starting essentially at the equilibrium, the section is never
        // crossed and the validator reports the absence of returns.
        let sys = ch4_at_threshold(1.0, 1.7, 2.3);
        let center = [0.25, 0.25, 1.0];
        let section = Section {
            point: center.to_vec(),
            normal: vec![1.0, 0.0, 0.0],
        };
        let err = poincare_validate(
            &sys,
            &[0.25, 0.25, 1.0],
            &center,
            &section,
            5,
            50.0,
            &IntOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numeric(msg) if msg.contains("no return")));
    }
}
