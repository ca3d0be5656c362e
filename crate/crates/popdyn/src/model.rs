//! The model families studied by the library.
//!
//! All models are autonomous ODE systems on the open positive orthant. Each
//! family implements [`OdeSystem`], exposing the vector field and an analytic
//! Jacobian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::growth::Growth;

/// An autonomous ODE system with an analytic Jacobian.
pub trait OdeSystem {
    /// Phase-space dimension.
    fn dim(&self) -> usize;

    /// Evaluate the vector field at `x`, writing into `dx`.
    fn eval(&self, x: &[f64], dx: &mut [f64]);

    /// Analytic Jacobian matrix at `x`.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;

    /// Convenience: vector field as a freshly allocated vector.
    fn eval_vec(&self, x: &[f64]) -> DVector<f64> {
        let mut dx = vec![0.0; self.dim()];
        self.eval(x, &mut dx);
        DVector::from_vec(dx)
    }
}

impl<S: OdeSystem + ?Sized> OdeSystem for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        (**self).eval(x, dx)
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        (**self).jacobian(x)
    }
}

/// One resource and `n` consumers with a general growth law and
/// intra/inter-specific consumer competition:
///
/// ```text
/// x'   = x (r g(x) - sum_i q_i y_i)
/// y_i' = y_i (c_i q_i x - mu_i - sum_j m_ij y_j)
/// ```
///
/// State layout: `[x, y_1, ..., y_n]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Competition {
    pub growth: Growth,
    pub r: f64,
    pub k: f64,
    pub c: Vec<f64>,
    pub q: Vec<f64>,
    pub mu: Vec<f64>,
    /// Row-major `n x n` competition matrix `m_ij`.
    pub m: Vec<Vec<f64>>,
}

impl Competition {
    /// Number of consumer species.
    pub fn n_consumers(&self) -> usize {
        self.c.len()
    }

    /// Break-even resource level of consumer `i`: `x_i^b = mu_i / (c_i q_i)`.
    pub fn break_even(&self, i: usize) -> f64 {
        self.mu[i] / (self.c[i] * self.q[i])
    }
}

impl OdeSystem for Competition {
    fn dim(&self) -> usize {
        1 + self.n_consumers()
    }

    fn eval(&self, s: &[f64], dx: &mut [f64]) {
        let n = self.n_consumers();
        let x = s[0];
        let y = &s[1..];
        let predation: f64 = (0..n).map(|i| self.q[i] * y[i]).sum();
        dx[0] = x * (self.r * self.growth.g(x, self.k) - predation);
        for i in 0..n {
            let crowd: f64 = (0..n).map(|j| self.m[i][j] * y[j]).sum();
            dx[1 + i] = y[i] * (self.c[i] * self.q[i] * x - self.mu[i] - crowd);
        }
    }

    fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
        let n = self.n_consumers();
        let x = s[0];
        let y = &s[1..];
        let mut j = DMatrix::zeros(1 + n, 1 + n);
        let predation: f64 = (0..n).map(|i| self.q[i] * y[i]).sum();
        let g = self.growth.g(x, self.k);
        let dg = self.growth.dg(x, self.k);
        j[(0, 0)] = self.r * (g + x * dg) - predation;
        for i in 0..n {
            j[(0, 1 + i)] = -x * self.q[i];
            j[(1 + i, 0)] = y[i] * self.c[i] * self.q[i];
            let crowd: f64 = (0..n).map(|k| self.m[i][k] * y[k]).sum();
            for k in 0..n {
                let mut v = -y[i] * self.m[i][k];
                if i == k {
                    v += self.c[i] * self.q[i] * x - self.mu[i] - crowd;
                }
                j[(1 + i, 1 + k)] = v;
            }
        }
        j
    }
}

/// Logistic prey with two Holling-II predators that also self-interfere:
///
/// ```text
/// x' = x (r (1 - x/K) - q1 y / (1 + a1 x) - q2 z / (1 + a2 x))
/// y' = y (c1 q1 x / (1 + a1 x) - mu1 - m1 y)
/// z' = z (c2 q2 x / (1 + a2 x) - mu2 - m2 z)
/// ```
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPredator {
    pub r: f64,
    pub k: f64,
    pub q1: f64,
    pub a1: f64,
    pub q2: f64,
    pub a2: f64,
    pub c1: f64,
    pub c2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub m1: f64,
    pub m2: f64,
}

impl TwoPredator {
    /// Break-even resource levels `y^b`, `z^b` of the two predators (the
    /// resource densities at which each predator's net per-capita growth at
    /// vanishing density is zero).
    pub fn break_even(&self) -> (f64, f64) {
        (
            self.mu1 / (self.c1 * self.q1 - self.a1 * self.mu1),
            self.mu2 / (self.c2 * self.q2 - self.a2 * self.mu2),
        )
    }
}

impl OdeSystem for TwoPredator {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, s: &[f64], dx: &mut [f64]) {
        let (x, y, z) = (s[0], s[1], s[2]);
        let d1 = 1.0 + self.a1 * x;
        let d2 = 1.0 + self.a2 * x;
        dx[0] = x * (self.r * (1.0 - x / self.k) - self.q1 * y / d1 - self.q2 * z / d2);
        dx[1] = y * (self.c1 * self.q1 * x / d1 - self.mu1 - self.m1 * y);
        dx[2] = z * (self.c2 * self.q2 * x / d2 - self.mu2 - self.m2 * z);
    }

    fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
        let (x, y, z) = (s[0], s[1], s[2]);
        let d1 = 1.0 + self.a1 * x;
        let d2 = 1.0 + self.a2 * x;
        let f = self.r * (1.0 - x / self.k) - self.q1 * y / d1 - self.q2 * z / d2;
        // d/dx of (q y / (1 + a x)) = -q a y / d^2; of (c q x / d) = c q / d^2.
        let fx = -self.r / self.k + self.a1 * self.q1 * y / (d1 * d1)
            + self.a2 * self.q2 * z / (d2 * d2);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                f + x * fx,
                -x * self.q1 / d1,
                -x * self.q2 / d2,
                y * self.c1 * self.q1 / (d1 * d1),
                self.c1 * self.q1 * x / d1 - self.mu1 - 2.0 * self.m1 * y,
                0.0,
                z * self.c2 * self.q2 / (d2 * d2),
                0.0,
                self.c2 * self.q2 * x / d2 - self.mu2 - 2.0 * self.m2 * z,
            ],
        )
    }
}

/// Two competing logistic prey sharing one Holling-II predator:
///
/// ```text
/// x' = x (r1 (1 - x/K1) - alpha12 y - q1 z / (1 + a1 x))
/// y' = y (r2 (1 - y/K2) - alpha21 x - q2 z / (1 + a2 y))
/// z' = z (c1 q1 x / (1 + a1 x) + c2 q2 y / (1 + a2 y) - mu - m z)
/// ```
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPrey {
    pub r1: f64,
    pub k1: f64,
    pub q1: f64,
    pub a1: f64,
    pub c1: f64,
    pub r2: f64,
    pub k2: f64,
    pub q2: f64,
    pub a2: f64,
    pub c2: f64,
    pub alpha12: f64,
    pub alpha21: f64,
    pub mu: f64,
    pub m: f64,
}

impl TwoPrey {
    /// The parameter set used throughout the chaos studies.
    ///
    /// The saturation constants are a1 = 0.02, a2 = 0.01: the published
    /// equilibria and spectra (E5, E*, the eigenvalues at E1 and E2) are all
    /// consistent with this assignment and not with the swapped one.
    pub fn chaotic() -> Self {
        TwoPrey {
            r1: 1.0,
            k1: 1.0,
            q1: 10.0,
            a1: 0.02,
            c1: 0.5,
            r2: 1.0,
            k2: 1.0,
            q2: 1.0,
            a2: 0.01,
            c2: 0.5,
            alpha12: 1.0,
            alpha21: 1.5,
            mu: 1.0,
            m: 0.1,
        }
    }

    /// The prey-x / predator subsystem obtained by removing prey `y`.
    pub fn prey_x_submodel(&self) -> Bazykin {
        Bazykin {
            r: self.r1,
            k: self.k1,
            q: self.q1,
            a: self.a1,
            c: self.c1,
            mu: self.mu,
            m: self.m,
        }
    }
}

impl OdeSystem for TwoPrey {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, s: &[f64], dx: &mut [f64]) {
        let (x, y, z) = (s[0], s[1], s[2]);
        let d1 = 1.0 + self.a1 * x;
        let d2 = 1.0 + self.a2 * y;
        dx[0] = x * (self.r1 * (1.0 - x / self.k1) - self.alpha12 * y - self.q1 * z / d1);
        dx[1] = y * (self.r2 * (1.0 - y / self.k2) - self.alpha21 * x - self.q2 * z / d2);
        dx[2] = z
            * (self.c1 * self.q1 * x / d1 + self.c2 * self.q2 * y / d2 - self.mu - self.m * z);
    }

    fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
        let (x, y, z) = (s[0], s[1], s[2]);
        let d1 = 1.0 + self.a1 * x;
        let d2 = 1.0 + self.a2 * y;
        let f = self.r1 * (1.0 - x / self.k1) - self.alpha12 * y - self.q1 * z / d1;
        let g = self.r2 * (1.0 - y / self.k2) - self.alpha21 * x - self.q2 * z / d2;
        let h = self.c1 * self.q1 * x / d1 + self.c2 * self.q2 * y / d2 - self.mu - self.m * z;
        let fx = -self.r1 / self.k1 + self.a1 * self.q1 * z / (d1 * d1);
        let gy = -self.r2 / self.k2 + self.a2 * self.q2 * z / (d2 * d2);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                f + x * fx,
                -x * self.alpha12,
                -x * self.q1 / d1,
                -y * self.alpha21,
                g + y * gy,
                -y * self.q2 / d2,
                z * self.c1 * self.q1 / (d1 * d1),
                z * self.c2 * self.q2 / (d2 * d2),
                h - self.m * z,
            ],
        )
    }
}

/// Bazykin's predator-prey model (one logistic prey, one Holling-II predator
/// with self-interference):
///
/// ```text
/// x' = x (r (1 - x/K) - q y / (1 + a x))
/// y' = y (c q x / (1 + a x) - mu - m y)
/// ```
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bazykin {
    pub r: f64,
    pub k: f64,
    pub q: f64,
    pub a: f64,
    pub c: f64,
    pub mu: f64,
    pub m: f64,
}

impl Bazykin {
    /// Break-even prey level `y^b = mu / (c q - a mu)`.
    pub fn break_even(&self) -> f64 {
        self.mu / (self.c * self.q - self.a * self.mu)
    }

    /// Prey isocline `f(x) = (r/q)(1 - x/K)(1 + a x)`.
    pub fn prey_isocline(&self, x: f64) -> f64 {
        self.r / self.q * (1.0 - x / self.k) * (1.0 + self.a * x)
    }

    /// Predator isocline `g(x) = (1/m)(c q x / (1 + a x) - mu)`.
    pub fn predator_isocline(&self, x: f64) -> f64 {
        (self.c * self.q * x / (1.0 + self.a * x) - self.mu) / self.m
    }
}

impl OdeSystem for Bazykin {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, s: &[f64], dx: &mut [f64]) {
        let (x, y) = (s[0], s[1]);
        let d = 1.0 + self.a * x;
        dx[0] = x * (self.r * (1.0 - x / self.k) - self.q * y / d);
        dx[1] = y * (self.c * self.q * x / d - self.mu - self.m * y);
    }

    fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
        let (x, y) = (s[0], s[1]);
        let d = 1.0 + self.a * x;
        let f = self.r * (1.0 - x / self.k) - self.q * y / d;
        let fx = -self.r / self.k + self.a * self.q * y / (d * d);
        DMatrix::from_row_slice(
            2,
            2,
            &[
                f + x * fx,
                -x * self.q / d,
                y * self.c * self.q / (d * d),
                self.c * self.q * x / d - self.mu - 2.0 * self.m * y,
            ],
        )
    }
}

/// Finite-difference Jacobian, used by tests as an oracle for the analytic
/// Jacobians above.
pub fn jacobian_fd<S: OdeSystem>(sys: &S, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = sys.dim();
    let mut j = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for col in 0..n {
        let step = h * (1.0 + x[col].abs());
        xp[col] = x[col] + step;
        xm[col] = x[col] - step;
        sys.eval(&xp, &mut fp);
        sys.eval(&xm, &mut fm);
        for row in 0..n {
            j[(row, col)] = (fp[row] - fm[row]) / (2.0 * step);
        }
        xp[col] = x[col];
        xm[col] = x[col];
    }
    j
}
