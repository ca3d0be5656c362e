//! Adaptive explicit integration (Dormand-Prince 4(5)).
//!
//! The stepper treats non-finite stage values as a failed step and retries
//! with a smaller step, which makes it robust to growth laws that are
//! singular at the origin.

use crate::error::{Error, Result};
use crate::model::{Bazykin, Competition, OdeSystem, TwoPredator, TwoPrey};
use crate::growth::Growth;
use serde::Serialize;

/// Integration options.
#[derive(Debug, Clone, Copy)]
pub struct IntOptions {
    /// Relative tolerance of the embedded error estimate.
    pub rtol: f64,
    /// Absolute tolerance of the embedded error estimate.
    pub atol: f64,
    /// Initial step size (sign-adjusted internally).
    pub h0: f64,
    /// Upper bound for the step size.
    pub h_max: f64,
    /// Hard cap on accepted+rejected steps.
    pub max_steps: usize,
    /// Population semantics: clamp negative overshoots below `atol` to zero
    /// and abort on larger ones.
    pub nonnegative: bool,
}

impl Default for IntOptions {
    fn default() -> Self {
        IntOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h0: 1e-3,
            h_max: 1.0,
            max_steps: 50_000_000,
            nonnegative: false,
        }
    }
}

impl IntOptions {
    /// Defaults with population (non-negative state) semantics enabled.
    pub fn population() -> Self {
        IntOptions {
            nonnegative: true,
            ..IntOptions::default()
        }
    }
}

/// A sampled trajectory on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    /// Column `i` of the trajectory as a plain vector.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }
}

// Dormand-Prince 4(5) coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Low-level adaptive stepper. `observe` is called after every accepted step
/// with `(t_prev, x_prev, t_new, x_new)`.
fn drive<S, F>(sys: &S, x0: &[f64], t0: f64, t1: f64, opts: &IntOptions, mut observe: F) -> Result<Vec<f64>>
where
    S: OdeSystem,
    F: FnMut(f64, &[f64], f64, &[f64]),
{
    let n = sys.dim();
    if x0.len() != n {
        return Err(Error::InvalidScenario(format!(
            "initial state has {} components, system has {}",
            x0.len(),
            n
        )));
    }
    if t1 == t0 {
        return Ok(x0.to_vec());
    }
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut x = x0.to_vec();
    let mut h = opts.h0.abs().min(opts.h_max).max(1e-12) * dir;
    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut x5 = vec![0.0; n];
    let mut x4 = vec![0.0; n];
    let mut steps = 0usize;

    sys.eval(&x, &mut k[0]);
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Numeric(format!(
                "step limit {} exceeded at t={t}",
                opts.max_steps
            )));
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        // Stages (FSAL: k[0] already holds f(t, x)).
        let mut ok = true;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                stage[i] = x[i] + h * acc;
            }
            let (done, rest) = k.split_at_mut(s);
            let _ = done;
            sys.eval(&stage, &mut rest[0]);
            let _ = C[s];
            if rest[0].iter().any(|v| !v.is_finite()) {
                ok = false;
                break;
            }
        }
        let mut err = 0.0f64;
        if ok {
            for i in 0..n {
                let mut s5 = 0.0;
                let mut s4 = 0.0;
                for j in 0..7 {
                    s5 += B5[j] * k[j][i];
                    s4 += B4[j] * k[j][i];
                }
                x5[i] = x[i] + h * s5;
                x4[i] = x[i] + h * s4;
                let sc = opts.atol + opts.rtol * x[i].abs().max(x5[i].abs());
                let e = (x5[i] - x4[i]) / sc;
                err += e * e;
            }
            err = (err / n as f64).sqrt();
            if !err.is_finite() || x5.iter().any(|v| !v.is_finite()) {
                ok = false;
            }
        }
        if ok && err <= 1.0 {
            let mut clamped = false;
            if opts.nonnegative {
                for v in x5.iter_mut() {
                    if *v < 0.0 {
                        if -*v < opts.atol {
                            *v = 0.0;
                            clamped = true;
                        } else {
                            return Err(Error::Numeric(format!(
                                "state went negative ({v:.3e}) at t={t}; not an overshoot"
                            )));
                        }
                    }
                }
            }
            let t_new = t + h;
            observe(t, &x, t_new, &x5);
            t = t_new;
            x.copy_from_slice(&x5);
            if clamped {
                // The FSAL stage was evaluated at the unclamped point.
                sys.eval(&x, &mut k[6]);
            }
            let (head, tail) = k.split_at_mut(1);
            head[0].copy_from_slice(&tail[5]); // FSAL
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * factor).clamp(-opts.h_max, opts.h_max);
            if h == 0.0 {
                h = 1e-12 * dir;
            }
        } else {
            let factor = if ok { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.25 };
            h *= factor;
            if h.abs() < 1e-14 {
                return Err(Error::Numeric(format!("step size underflow at t={t}")));
            }
        }
    }
    Ok(x)
}

/// Integrate from `t0` to `t1` and return the final state.
pub fn integrate_to<S: OdeSystem>(
    sys: &S,
    x0: &[f64],
    t0: f64,
    t1: f64,
    opts: &IntOptions,
) -> Result<Vec<f64>> {
    drive(sys, x0, t0, t1, opts, |_, _, _, _| {})
}

/// Integrate from `t0` to `t1`, sampling the solution on the uniform grid
/// `t0, t0+dt, ..., t1` (grid points are hit exactly by step clipping).
pub fn sample<S: OdeSystem>(
    sys: &S,
    x0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
    opts: &IntOptions,
) -> Result<Trajectory> {
    if dt <= 0.0 || t1 <= t0 {
        return Err(Error::InvalidScenario(
            "sampling requires dt > 0 and t1 > t0".into(),
        ));
    }
    let steps = ((t1 - t0) / dt).round() as usize;
    let mut t = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    t.push(t0);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    for i in 1..=steps {
        let target = t0 + dt * i as f64;
        x = integrate_to(sys, &x, t[i - 1], target, opts)?;
        t.push(target);
        states.push(x.clone());
    }
    Ok(Trajectory { t, states })
}

/// A system augmented with running integrals of scalar observables. The
/// integrals are carried as extra states so they share the integrator's
/// order of accuracy.
struct Quadrature<'a, S> {
    base: &'a S,
    observables: &'a [Box<dyn Fn(&[f64]) -> f64 + 'a>],
}

impl<S: OdeSystem> OdeSystem for Quadrature<'_, S> {
    fn dim(&self) -> usize {
        self.base.dim() + self.observables.len()
    }
    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        let n = self.base.dim();
        self.base.eval(&x[..n], &mut dx[..n]);
        for (i, obs) in self.observables.iter().enumerate() {
            dx[n + i] = obs(&x[..n]);
        }
    }
    fn jacobian(&self, _x: &[f64]) -> nalgebra::DMatrix<f64> {
        // The stepper never needs a Jacobian; quadrature wrappers are not
        // meant for linearized analysis.
        unimplemented!("Jacobian of a quadrature-augmented system")
    }
}

/// Long-run time averages of scalar observables: discard `t_transient`, then
/// average each observable over a window of length `t_window`.
pub fn observable_averages<S: OdeSystem>(
    sys: &S,
    x0: &[f64],
    t_transient: f64,
    t_window: f64,
    opts: &IntOptions,
    observables: &[Box<dyn Fn(&[f64]) -> f64 + '_>],
) -> Result<Vec<f64>> {
    let x = integrate_to(sys, x0, 0.0, t_transient, opts)?;
    let aug = Quadrature {
        base: sys,
        observables,
    };
    let mut x_aug = x;
    x_aug.extend(std::iter::repeat(0.0).take(observables.len()));
    let out = integrate_to(&aug, &x_aug, t_transient, t_transient + t_window, opts)?;
    Ok(out[sys.dim()..].iter().map(|v| v / t_window).collect())
}

/// Long-run time averages of the state components themselves, computed by
/// high-order quadrature along a fresh integration.
pub fn long_run_average<S: OdeSystem>(
    sys: &S,
    x0: &[f64],
    t_transient: f64,
    t_window: f64,
    opts: &IntOptions,
) -> Result<Vec<f64>> {
    let obs: Vec<Box<dyn Fn(&[f64]) -> f64>> = (0..sys.dim())
        .map(|i| Box::new(move |x: &[f64]| x[i]) as Box<dyn Fn(&[f64]) -> f64>)
        .collect();
    observable_averages(sys, x0, t_transient, t_window, opts, &obs)
}

/// Trapezoidal time mean of each coordinate of a sampled trajectory, after
/// discarding the first `burn_in_fraction` of the time span.
pub fn time_average(traj: &Trajectory, burn_in_fraction: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(Error::InvalidScenario(format!(
            "burn_in_fraction must be in [0, 1), got {burn_in_fraction}"
        )));
    }
    let t0 = traj.t[0] + burn_in_fraction * (traj.t[traj.t.len() - 1] - traj.t[0]);
    let idx: Vec<usize> = (0..traj.t.len()).filter(|&i| traj.t[i] >= t0).collect();
    if idx.len() < 2 {
        return Err(Error::InvalidScenario(
            "post-burn-in window contains fewer than two samples".into(),
        ));
    }
    let dim = traj.states[0].len();
    let mut acc = vec![0.0; dim];
    let mut span = 0.0;
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        let dt = traj.t[j] - traj.t[i];
        span += dt;
        for d in 0..dim {
            acc[d] += 0.5 * dt * (traj.states[i][d] + traj.states[j][d]);
        }
    }
    Ok(acc.into_iter().map(|v| v / span).collect())
}

/// Minimum over post-burn-in samples of the smallest state coordinate: a
/// positive value is numerical evidence of uniform persistence.
pub fn persistence_probe(traj: &Trajectory, burn_in_fraction: f64) -> f64 {
    let t0 = traj.t[0] + burn_in_fraction * (traj.t[traj.t.len() - 1] - traj.t[0]);
    traj.t
        .iter()
        .zip(&traj.states)
        .filter(|(&t, _)| t >= t0)
        .map(|(_, s)| s.iter().cloned().fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min)
}

/// A dissipativity certificate: along solutions, the linear functional
/// `w(state) = weights . state` eventually satisfies `w <= rho / phi`.
#[derive(Debug, Clone, Serialize)]
pub struct AbsorbingBound {
    pub weights: Vec<f64>,
    pub phi: f64,
    pub rho: f64,
    /// The absorbing level `rho / phi`.
    pub bound: f64,
}

impl AbsorbingBound {
    /// Evaluate the functional at a state.
    pub fn value(&self, state: &[f64]) -> f64 {
        self.weights.iter().zip(state).map(|(w, s)| w * s).sum()
    }

    fn new(weights: Vec<f64>, phi: f64, rho: f64) -> Self {
        AbsorbingBound {
            weights,
            phi,
            rho,
            bound: rho / phi,
        }
    }
}

fn check_phi(phi: f64, mu_min: f64) -> Result<()> {
    if phi <= 0.0 || phi > mu_min {
        return Err(Error::Precondition(format!(
            "phi must lie in (0, min mu] = (0, {mu_min}], got {phi}"
        )));
    }
    Ok(())
}

/// The peak of `x (r + phi - r x / K)` over x >= 0.
fn logistic_source_peak(r: f64, k: f64, phi: f64) -> f64 {
    k * (r + phi).powi(2) / (4.0 * r)
}

/// Absorbing bound for the competition model with `w = x + sum c_i^-1 y_i`.
/// Only the logistic growth law carries the quadratic source estimate; other
/// laws report the bound as unavailable.
pub fn absorbing_bound_competition(m: &Competition, phi: f64) -> Result<AbsorbingBound> {
    if m.growth != Growth::Logistic {
        return Err(Error::InvalidScenario(format!(
            "absorbing bound unavailable for {} growth",
            m.growth.name()
        )));
    }
    let mu_min = m.mu.iter().cloned().fold(f64::INFINITY, f64::min);
    check_phi(phi, mu_min)?;
    let mut weights = vec![1.0];
    weights.extend(m.c.iter().map(|c| 1.0 / c));
    Ok(AbsorbingBound::new(
        weights,
        phi,
        logistic_source_peak(m.r, m.k, phi),
    ))
}

/// Absorbing bound for the two-predator model with `w = x + y/c1 + z/c2`.
pub fn absorbing_bound_two_predator(m: &TwoPredator, phi: f64) -> Result<AbsorbingBound> {
    check_phi(phi, m.mu1.min(m.mu2))?;
    Ok(AbsorbingBound::new(
        vec![1.0, 1.0 / m.c1, 1.0 / m.c2],
        phi,
        logistic_source_peak(m.r, m.k, phi),
    ))
}

/// Absorbing bound for the two-prey model with `w = c1 x + c2 y + z`.
pub fn absorbing_bound_two_prey(m: &TwoPrey, phi: f64) -> Result<AbsorbingBound> {
    check_phi(phi, m.mu)?;
    Ok(AbsorbingBound::new(
        vec![m.c1, m.c2, 1.0],
        phi,
        m.c1 * logistic_source_peak(m.r1, m.k1, phi)
            + m.c2 * logistic_source_peak(m.r2, m.k2, phi),
    ))
}

/// Absorbing bound for Bazykin's model with `w = x + y/c`.
pub fn absorbing_bound_bazykin(m: &Bazykin, phi: f64) -> Result<AbsorbingBound> {
    check_phi(phi, m.mu)?;
    Ok(AbsorbingBound::new(
        vec![1.0, 1.0 / m.c],
        phi,
        logistic_source_peak(m.r, m.k, phi),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Bazykin;
    use nalgebra::DMatrix;

    /// Harmonic oscillator as a 2-D linear system: exact solution oracle.
    struct Oscillator;
    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &[f64], dx: &mut [f64]) {
            dx[0] = x[1];
            dx[1] = -x[0];
        }
        fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
        }
    }

    /// Logistic scalar equation with closed-form solution.
    struct Logistic;
    impl OdeSystem for Logistic {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, x: &[f64], dx: &mut [f64]) {
            dx[0] = x[0] * (1.0 - x[0]);
        }
        fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(1, 1, &[1.0 - 2.0 * x[0]])
        }
    }

    #[test]
    fn oscillator_matches_exact_solution() {
        let opts = IntOptions::default();
        let x = integrate_to(&Oscillator, &[1.0, 0.0], 0.0, 10.0, &opts).unwrap();
        assert!((x[0] - 10.0f64.cos()).abs() < 1e-7);
        assert!((x[1] + 10.0f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn logistic_matches_exact_solution() {
        let opts = IntOptions::default();
        let x0 = 0.02;
        let t = 5.0f64;
        let exact = x0 * (t.exp()) / (1.0 - x0 + x0 * t.exp());
        let x = integrate_to(&Logistic, &[x0], 0.0, t, &opts).unwrap();
        assert!((x[0] - exact).abs() < 1e-9, "{} vs {}", x[0], exact);
    }

    #[test]
    fn sampling_grid_is_uniform_and_consistent() {
        let opts = IntOptions::default();
        let traj = sample(&Oscillator, &[1.0, 0.0], 0.0, 6.0, 0.25, &opts).unwrap();
        assert_eq!(traj.t.len(), 25);
        for (i, &ti) in traj.t.iter().enumerate() {
            assert!((ti - 0.25 * i as f64).abs() < 1e-12);
            assert!((traj.states[i][0] - ti.cos()).abs() < 1e-7);
        }
    }

    #[test]
    fn oscillator_time_average_is_zero() {
        let opts = IntOptions::default();
        // Average of cos over whole periods vanishes.
        let avg =
            long_run_average(&Oscillator, &[1.0, 0.0], 0.0, 8.0 * std::f64::consts::PI, &opts)
                .unwrap();
        assert!(avg[0].abs() < 1e-8 && avg[1].abs() < 1e-8);
    }

    #[test]
    fn bazykin_attractor_average_matches_equilibrium() {
        // With a stable focus, the long-run average converges to the
        // equilibrium itself.
        let sys = Bazykin {
            r: 1.0,
            k: 1.5,
            q: 1.0,
            a: 0.5,
            c: 2.0,
            mu: 1.0,
            m: 1.0,
        };
        let opts = IntOptions::default();
        let avg = long_run_average(&sys, &[1.0, 0.5], 400.0, 200.0, &opts).unwrap();
        // Equilibrium of this parameter set (submodel used in the invasion
        // studies): (1.09652, 0.416458).
        assert!((avg[0] - 1.09652).abs() < 1e-4, "avg {avg:?}");
        assert!((avg[1] - 0.416458).abs() < 1e-4, "avg {avg:?}");
    }

    fn ch2_table_scenario() -> Competition {
        Competition {
            growth: Growth::Logistic,
            r: 3.0,
            k: 8.0,
            c: vec![1.0, 1.2],
            q: vec![4.0, 2.0],
            mu: vec![3.0, 1.0],
            m: vec![vec![1.5, 0.25], vec![1.0, 2.0]],
        }
    }

    #[test]
    fn ch2_logistic_converges_to_table_point() {
        let sys = ch2_table_scenario();
        let opts = IntOptions::population();
        let x = integrate_to(&sys, &[1.0, 0.8, 0.6], 0.0, 500.0, &opts).unwrap();
        assert!((x[0] - 0.947).abs() < 1e-3, "{x:?}");
        assert!((x[1] - 0.4574).abs() < 1e-3, "{x:?}");
        assert!((x[2] - 0.4077).abs() < 1e-3, "{x:?}");
    }

    #[test]
    fn zero_state_stays_zero() {
        let sys = ch2_table_scenario();
        let opts = IntOptions::population();
        let traj = sample(&sys, &[0.0, 0.0, 0.0], 0.0, 10.0, 1.0, &opts).unwrap();
        for s in &traj.states {
            assert!(s.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn prey_axis_matches_logistic_closed_form() {
        // On the x-axis the two-prey system reduces to x' = x(1 - x); the
        // solution through x0 = 2 is psi(t) = 1 / (1 - 0.5 e^{-t}).
        let sys = crate::model::TwoPrey::chaotic();
        let opts = IntOptions::population();
        let traj = sample(&sys, &[2.0, 0.0, 0.0], 0.0, 10.0, 0.5, &opts).unwrap();
        for (t, s) in traj.t.iter().zip(&traj.states) {
            let exact = 1.0 / (1.0 - 0.5 * (-t).exp());
            assert!((s[0] - exact).abs() < 1e-6, "t={t}: {} vs {exact}", s[0]);
            assert_eq!(s[1], 0.0);
            assert_eq!(s[2], 0.0);
        }
    }

    #[test]
    fn halved_tolerances_barely_move_terminal_state() {
        let sys = ch2_table_scenario();
        let opts = IntOptions {
            rtol: 1e-8,
            atol: 1e-10,
            ..IntOptions::population()
        };
        let tight = IntOptions {
            rtol: opts.rtol / 2.0,
            atol: opts.atol / 2.0,
            ..opts
        };
        let a = integrate_to(&sys, &[1.0, 0.8, 0.6], 0.0, 50.0, &opts).unwrap();
        let b = integrate_to(&sys, &[1.0, 0.8, 0.6], 0.0, 50.0, &tight).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 10.0 * opts.rtol);
        }
    }

    #[test]
    fn absorbing_bound_values_and_trajectories() {
        let sys = ch2_table_scenario();
        let b = absorbing_bound_competition(&sys, 1.0).unwrap();
        assert!((b.rho - 8.0 * 16.0 / 12.0).abs() < 1e-12);
        assert!((b.bound - 10.666666666666666).abs() < 1e-12);
        assert_eq!(b.weights.len(), 3);

        // phi out of range (> min mu) is rejected; Gompertz has no bound.
        assert!(absorbing_bound_competition(&sys, 1.5).is_err());
        let mut gomp = ch2_table_scenario();
        gomp.growth = Growth::Gompertz;
        assert!(absorbing_bound_competition(&gomp, 1.0).is_err());

        // Along trajectories the functional drops under the level and stays.
        let opts = IntOptions {
            rtol: 1e-7,
            atol: 1e-10,
            ..IntOptions::population()
        };
        for seed in 0..6u32 {
            let f = seed as f64;
            let x0 = [0.5 + f, 0.2 + 0.3 * f, 0.1 + 0.5 * f];
            let traj = sample(&sys, &x0, 0.0, 80.0, 1.0, &opts).unwrap();
            for (t, s) in traj.t.iter().zip(&traj.states) {
                if *t >= 40.0 {
                    assert!(b.value(s) <= b.bound + 1e-2, "w={} at t={t}", b.value(s));
                }
            }
        }

        // Two-prey variant: the source peak is the weighted sum of the two
        // logistic peaks.
        let tp = crate::model::TwoPrey::chaotic();
        let b = absorbing_bound_two_prey(&tp, 1.0).unwrap();
        assert!((b.rho - (0.5 + 0.5)).abs() < 1e-12); // c K (r+1)^2/(4r) = 0.5 each
        assert_eq!(b.weights, vec![0.5, 0.5, 1.0]);
    }

    #[test]
    fn trajectory_time_average() {
        // Constant trajectory: the average is the value itself.
        let traj = Trajectory {
            t: (0..=10).map(|i| i as f64).collect(),
            states: (0..=10).map(|_| vec![1.5, 0.25]).collect(),
        };
        let avg = time_average(&traj, 0.3).unwrap();
        assert!((avg[0] - 1.5).abs() < 1e-14 && (avg[1] - 0.25).abs() < 1e-14);

        // Sine wave with offset over whole periods: the mean is the offset.
        let n = 4000usize;
        let period = 2.0 * std::f64::consts::PI;
        let t: Vec<f64> = (0..=n).map(|i| 4.0 * period * i as f64 / n as f64).collect();
        let states: Vec<Vec<f64>> = t.iter().map(|&t| vec![0.7 + t.sin()]).collect();
        let traj = Trajectory { t, states };
        let avg = time_average(&traj, 0.5).unwrap();
        assert!((avg[0] - 0.7).abs() < 1e-6, "{avg:?}");

        assert!(time_average(&traj, 1.0).is_err());
    }

    #[test]
    fn persistence_probe_cases() {
        let opts = IntOptions {
            rtol: 1e-7,
            atol: 1e-10,
            ..IntOptions::population()
        };
        // Single consumer below its break-even capacity: uniform persistence.
        let persistent = Competition {
            growth: Growth::Logistic,
            r: 3.0,
            k: 8.0,
            c: vec![1.0],
            q: vec![4.0],
            mu: vec![3.0],
            m: vec![vec![1.5]],
        };
        let traj = sample(&persistent, &[1.0, 0.5], 0.0, 200.0, 0.5, &opts).unwrap();
        assert!(persistence_probe(&traj, 0.5) > 1e-2);

        // Consumer with break-even above K: it dies out and the probe
        // collapses to zero.
        let doomed = Competition {
            mu: vec![40.0],
            ..persistent
        };
        let traj = sample(&doomed, &[1.0, 0.5], 0.0, 200.0, 0.5, &opts).unwrap();
        assert!(persistence_probe(&traj, 0.8) < 1e-6);
    }

    #[test]
    fn two_prey_face_equals_bazykin_submodel() {
        let sys = crate::model::TwoPrey::chaotic();
        let sub = sys.prey_x_submodel();
        let opts = IntOptions::population();
        let a = integrate_to(&sys, &[0.3, 0.0, 0.2], 0.0, 50.0, &opts).unwrap();
        let b = integrate_to(&sub, &[0.3, 0.2], 0.0, 50.0, &opts).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-7, "{a:?} vs {b:?}");
        assert!((a[2] - b[1]).abs() < 1e-7, "{a:?} vs {b:?}");
        assert_eq!(a[1], 0.0);
    }
}
