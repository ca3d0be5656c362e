//! Hopf and zero-Hopf bifurcation analysis.
//!
//! Closed-form Hopf thresholds for the reduced one-prey/two-predator system
//! and the reduced two-prey/one-predator system, the Bazykin Hopf condition,
//! numeric transversality with eigenvalue-pairing continuity, the normal-form
//! pipeline producing first Lyapunov coefficients, eigenbasis diagonalization
//! at an equilibrium, one-dimensional center manifolds, and two-parameter
//! Hopf-curve tracing.

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Bazykin, OdeSystem, TwoPredator, TwoPrey};
use crate::poly::Poly3;

/// Tolerance below which the real part of the complex pair must sit at a
/// returned Hopf threshold.
pub const THRESHOLD_RE_EPS: f64 = 1e-7;

/// Sign of the first Lyapunov coefficient, mapped to the Hopf criticality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    /// `l1 < 0`: stable limit cycle branches off.
    Supercritical,
    /// `l1 > 0`: unstable limit cycle branches off.
    Subcritical,
    /// `l1` numerically indistinguishable from zero.
    Undecided,
}

impl Criticality {
    fn from_l1(l1: f64) -> Self {
        if l1 < -1e-12 {
            Criticality::Supercritical
        } else if l1 > 1e-12 {
            Criticality::Subcritical
        } else {
            Criticality::Undecided
        }
    }
}

/// A Hopf threshold together with its certification data.
#[derive(Debug, Clone, Serialize)]
pub struct BifurcationPoint {
    /// Value of the bifurcation parameter at the threshold.
    pub param: f64,
    /// Spectrum `{nu, eps + i omega, eps - i omega}` at the threshold.
    pub spectrum: [(f64, f64); 3],
    /// The real eigenvalue.
    pub nu: f64,
    /// Positive imaginary part of the complex pair.
    pub omega: f64,
    /// Derivative of the real part of the complex pair with respect to the
    /// bifurcation parameter.
    pub transversality: f64,
    /// First Lyapunov coefficient.
    pub l1: f64,
    pub criticality: Criticality,
}

/// A model whose vector field can be written as a polynomial around a given
/// point after clearing the Holling-II denominators by an orbit-preserving
/// time rescaling.
pub trait PolynomialForm {
    /// Polynomial vector field in displacement coordinates around `point`
    /// (the point maps to the origin).
    fn polynomial_form(&self, point: &[f64]) -> Result<[Poly3; 3]>;
}

// ---------------------------------------------------------------------------
// Reduced one-prey / two-predator family (three free parameters K, q1, m2).
// ---------------------------------------------------------------------------

/// The normalized one-prey/two-predator system with the positive equilibrium
/// moved to `(1,1,1)` and all parameters but `K`, `q1`, `m2` eliminated:
///
/// ```text
/// x' = x (R (1 - x/K) - q1 y / (1+x) - z / (1+x)),   R = K(q1+1)/(2(K-1))
/// y' = y (q1 x / (1+x) - (q1-2)/2 - y)
/// z' = z (x / (1+x) - (1/2 - m2) - m2 z)
/// ```
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ch3Reduced {
    pub k: f64,
    pub q1: f64,
    pub m2: f64,
}

impl Ch3Reduced {
    /// Growth rate `R = K(q1+1)/(2(K-1))` implied by the normalization.
    pub fn r(&self) -> f64 {
        self.k * (self.q1 + 1.0) / (2.0 * (self.k - 1.0))
    }

    /// The system as a general two-predator model.
    pub fn as_two_predator(&self) -> TwoPredator {
        TwoPredator {
            r: self.r(),
            k: self.k,
            q1: self.q1,
            a1: 1.0,
            q2: 1.0,
            a2: 1.0,
            c1: 1.0,
            c2: 1.0,
            mu1: (self.q1 - 2.0) / 2.0,
            mu2: 0.5 - self.m2,
            m1: 1.0,
            m2: self.m2,
        }
    }

    /// Jacobian at the equilibrium `(1,1,1)` in closed form.
    pub fn jacobian_at_center(&self) -> Matrix3<f64> {
        let (k, q1, m2) = (self.k, self.q1, self.m2);
        Matrix3::new(
            (k - 3.0) * (q1 + 1.0) / (4.0 * (k - 1.0)),
            -q1 / 2.0,
            -0.5,
            q1 / 4.0,
            -1.0,
            0.0,
            0.25,
            0.0,
            -m2,
        )
    }

    /// Coefficients `(A, B, C)` of the characteristic polynomial
    /// `P(l) = -l^3 + A l^2 + B l + C` at `(1,1,1)`.
    pub fn char_coeffs(&self) -> (f64, f64, f64) {
        let (k, q1, m2) = (self.k, self.q1, self.m2);
        let a = (k - 3.0) * (q1 + 1.0) / (4.0 * (k - 1.0)) - m2 - 1.0;
        let b = (2.0 * (k - 3.0) * (m2 + 1.0) * q1 - 6.0 * k * m2 - (k - 1.0) * q1 * q1 + k
            + 2.0 * m2
            - 5.0)
            / (8.0 * (k - 1.0));
        let c = (k - 3.0) * m2 * (q1 + 1.0) / (4.0 * (k - 1.0)) - m2 * q1 * q1 / 8.0 - 0.125;
        (a, b, c)
    }
}

impl OdeSystem for Ch3Reduced {
    fn dim(&self) -> usize {
        3
    }
    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        self.as_two_predator().eval(x, dx)
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.as_two_predator().jacobian(x)
    }
}

impl PolynomialForm for Ch3Reduced {
    /// Polynomial form around `(1,1,1)` after multiplying the field by the
    /// shared Holling denominator `(1+x)`.
    fn polynomial_form(&self, point: &[f64]) -> Result<[Poly3; 3]> {
        check_equilibrium(self, point)?;
        let (k, q1, m2) = (self.k, self.q1, self.m2);
        let r = self.r();
        let mu1 = (q1 - 2.0) / 2.0;
        let mu2 = 0.5 - m2;
        // Displacement coordinates: x = p0 + X, etc.
        let x = Poly3::affine(point[0], [1.0, 0.0, 0.0]);
        let y = Poly3::affine(point[1], [0.0, 1.0, 0.0]);
        let z = Poly3::affine(point[2], [0.0, 0.0, 1.0]);
        let d = Poly3::constant(1.0).add(&x); // 1 + x
        // x' (1+x) = x (R (1 - x/K)(1+x) - q1 y - z)
        let growth = x.scale(-1.0 / k).add(&Poly3::constant(1.0)).scale(r).mul(&d);
        let fx = x.mul(&growth.sub(&y.scale(q1)).sub(&z));
        // y' (1+x) = y (q1 x - (mu1 + y)(1+x))
        let fy = y.mul(&x.scale(q1).sub(&y.add(&Poly3::constant(mu1)).mul(&d)));
        // z' (1+x) = z (x - (mu2 + m2 z)(1+x))
        let fz = z.mul(&x.sub(&z.scale(m2).add(&Poly3::constant(mu2)).mul(&d)));
        Ok([fx, fy, fz])
    }
}

/// Discriminant under the square root in the closed-form `m2` of the reduced
/// one-prey/two-predator Hopf threshold (also the theorem's hypothesis gate).
pub fn ch3_discriminant(k: f64, q1: f64) -> f64 {
    q1 * (q1
        * ((k - 3.0) * q1 * (4.0 * (k * (k * (13.0 * k - 37.0) + 47.0) - 31.0)
            - (k - 3.0) * (k * (7.0 * k - 10.0) - 1.0) * q1)
            + 2.0 * k * (k * (-51.0 * (k - 4.0) * k - 322.0) + 140.0)
            + 154.0)
        - 4.0 * (k - 3.0).powi(2) * (k * (17.0 * k - 30.0) + 9.0))
        + (k * (17.0 * k - 30.0) + 9.0).powi(2)
}

/// Both branches of the closed-form solution of `-AB = C` for `m2`.
pub fn ch3_m2_candidates(k: f64, q1: f64) -> Result<[f64; 2]> {
    let disc = ch3_discriminant(k, q1);
    if disc < 0.0 {
        return Err(Error::Precondition(format!(
            "discriminant is negative ({disc:.6}); no real Hopf threshold"
        )));
    }
    let s = disc.sqrt();
    let pre = 1.0 / (8.0 * (k - 1.0) * ((k - 3.0) * q1 - 3.0 * k + 1.0));
    let base = (k - 3.0).powi(2) * q1 * q1 - 2.0 * (k - 3.0) * (3.0 * k - 1.0) * q1
        + k * (11.0 * k - 10.0)
        + 3.0;
    Ok([pre * (base + s), pre * (base - s)])
}

/// Closed-form Hopf threshold `m2` for the reduced one-prey/two-predator
/// system, certified by the spectrum at `(1,1,1)` and equipped with the
/// transversality derivative and the first Lyapunov coefficient.
pub fn hopf_threshold_ch3(k: f64, q1: f64) -> Result<BifurcationPoint> {
    if k <= 1.0 {
        return Err(Error::Precondition(format!("K = {k} must exceed 1")));
    }
    if q1 <= 2.0 {
        return Err(Error::Precondition(format!("q1 = {q1} must exceed 2")));
    }
    let candidates = ch3_m2_candidates(k, q1)?;
    let mut valid: Vec<(f64, [(f64, f64); 3])> = Vec::new();
    for &m2 in &candidates {
        let sys = Ch3Reduced { k, q1, m2 };
        let j = DMatrix::from_iterator(3, 3, sys.jacobian_at_center().iter().copied());
        if let Ok(spec) = hopf_spectrum(&j) {
            valid.push((m2, spec));
        }
    }
    // Prefer the branch where the real eigenvalue is stable, so the
    // threshold is a genuine stability exchange of the complex pair; break
    // ties toward the ecologically meaningful (larger) m2.
    valid.sort_by(|a, b| {
        (a.1[0].0 >= 0.0)
            .cmp(&(b.1[0].0 >= 0.0))
            .then(b.0.partial_cmp(&a.0).unwrap())
    });
    let (m2, spectrum) = valid.into_iter().next().ok_or_else(|| {
        Error::Precondition("neither closed-form branch yields a {nu, +-i omega} spectrum".into())
    })?;
    let transversality = transversality_ch3(k, q1, m2, 1e-6 * (1.0 + m2.abs()))?;
    let sys = Ch3Reduced { k, q1, m2 };
    let l1 = first_lyapunov_coefficient(&sys, &[1.0, 1.0, 1.0])?;
    Ok(BifurcationPoint {
        param: m2,
        spectrum,
        nu: spectrum[0].0,
        omega: spectrum[1].1,
        transversality,
        l1,
        criticality: Criticality::from_l1(l1),
    })
}

/// Derivative of the real part of the complex eigenvalue pair at `(1,1,1)`
/// with respect to `m2`, for the polynomialized reduced one-prey/two-predator
/// system (field multiplied by the shared Holling denominator `1+x`, which is
/// 2 at the equilibrium). This is the convention used by the normal-form
/// computation, so values are comparable with the first Lyapunov
/// coefficients.
pub fn transversality_ch3(k: f64, q1: f64, m2: f64, delta: f64) -> Result<f64> {
    re_pair_derivative(
        |m| {
            let sys = Ch3Reduced { k, q1, m2: m };
            DMatrix::from_iterator(3, 3, sys.jacobian_at_center().iter().copied()) * 2.0
        },
        m2,
        delta,
    )
}

// ---------------------------------------------------------------------------
// Reduced two-prey / one-predator family (r1, r2, K2, c1, m).
// ---------------------------------------------------------------------------

/// The normalized two-prey/one-predator system with the positive equilibrium
/// at `(1/4, 1/4, 1)` and the remaining free parameters `r1, r2, K2, c1, m`:
///
/// ```text
/// x' = x (r1 (1 - x) - 15 r1 z / (16 (1+x)))
/// y' = y (r2 (1 - y/K2) - 5 r2 (4K2-1) z / (16 K2 (1+y)))
/// z' = z (15 c1 r1 x / (16(1+x)) + 5 r2 (4K2-1) y / (16 K2 (1+y)) - mu - m z)
/// ```
///
/// with `mu = 3 c1 r1 / 16 + r2 (4K2-1)/(16 K2) - m`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ch4Reduced {
    pub r1: f64,
    pub r2: f64,
    pub k2: f64,
    pub c1: f64,
    pub m: f64,
}

impl Ch4Reduced {
    /// Predator mortality implied by the normalization.
    pub fn mu(&self) -> f64 {
        3.0 * self.c1 * self.r1 / 16.0 + self.r2 * (4.0 * self.k2 - 1.0) / (16.0 * self.k2)
            - self.m
    }

    /// The system as a general two-prey model.
    pub fn as_two_prey(&self) -> TwoPrey {
        TwoPrey {
            r1: self.r1,
            k1: 1.0,
            q1: 15.0 * self.r1 / 16.0,
            a1: 1.0,
            c1: self.c1,
            r2: self.r2,
            k2: self.k2,
            q2: 5.0 * self.r2 * (4.0 * self.k2 - 1.0) / (16.0 * self.k2),
            a2: 1.0,
            c2: 1.0,
            alpha12: 0.0,
            alpha21: 0.0,
            mu: self.mu(),
            m: self.m,
        }
    }

    /// Jacobian at the equilibrium `(1/4, 1/4, 1)` in closed form.
    pub fn jacobian_at_center(&self) -> Matrix3<f64> {
        let (r1, r2, k2, c1, m) = (self.r1, self.r2, self.k2, self.c1, self.m);
        Matrix3::new(
            -r1 / 10.0,
            0.0,
            -3.0 * r1 / 16.0,
            0.0,
            r2 * (2.0 * k2 - 3.0) / (10.0 * k2),
            r2 * (1.0 - 4.0 * k2) / (16.0 * k2),
            3.0 * c1 * r1 / 5.0,
            r2 * (4.0 * k2 - 1.0) / (5.0 * k2),
            -m,
        )
    }

    /// Jacobian of the polynomialized (time-rescaled) field at the
    /// equilibrium: the closed form carries the factor `256 K2 (1+x)(1+y)`
    /// evaluated at the equilibrium.
    pub fn scaled_jacobian_at_center(&self) -> Matrix3<f64> {
        let (r1, r2, k2, c1, m) = (self.r1, self.r2, self.k2, self.c1, self.m);
        Matrix3::new(
            -40.0 * r1 * k2,
            0.0,
            -75.0 * r1 * k2,
            0.0,
            40.0 * r2 * (2.0 * k2 - 3.0),
            25.0 * r2 * (1.0 - 4.0 * k2),
            240.0 * c1 * k2 * r1,
            80.0 * r2 * (4.0 * k2 - 1.0),
            -400.0 * k2 * m,
        )
    }

    /// Coefficients `(A, B, C)` of the characteristic polynomial
    /// `P(l) = -l^3 + A l^2 + B l + C` at `(1/4, 1/4, 1)`.
    pub fn char_coeffs(&self) -> (f64, f64, f64) {
        let (r1, r2, k2, c1, m) = (self.r1, self.r2, self.k2, self.c1, self.m);
        let a = ((2.0 - 3.0 / k2) * r2 - r1 - 10.0 * m) / 10.0;
        let b = (4.0 * r2 * k2 * (2.0 * k2 - 3.0) * (r1 + 10.0 * m)
            - 5.0 * (r1 * k2 * k2 * (9.0 * c1 * r1 + 8.0 * m)
                + r2 * r2 * (1.0 - 4.0 * k2).powi(2)))
            / (400.0 * k2 * k2);
        let c = r1 * r2
            * (k2 * (9.0 * c1 * r1 + 8.0 * m) * (2.0 * k2 - 3.0)
                - r2 * (1.0 - 4.0 * k2).powi(2))
            / (800.0 * k2 * k2);
        (a, b, c)
    }
}

impl OdeSystem for Ch4Reduced {
    fn dim(&self) -> usize {
        3
    }
    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        self.as_two_prey().eval(x, dx)
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.as_two_prey().jacobian(x)
    }
}

impl PolynomialForm for Ch4Reduced {
    /// Polynomial form around `(1/4, 1/4, 1)` after multiplying the field by
    /// `16(1+x) * 16 K2 (1+y)`, the literal denominator product.
    fn polynomial_form(&self, point: &[f64]) -> Result<[Poly3; 3]> {
        check_equilibrium(self, point)?;
        let (r1, r2, k2, c1, m) = (self.r1, self.r2, self.k2, self.c1, self.m);
        let mu = self.mu();
        let x = Poly3::affine(point[0], [1.0, 0.0, 0.0]);
        let y = Poly3::affine(point[1], [0.0, 1.0, 0.0]);
        let z = Poly3::affine(point[2], [0.0, 0.0, 1.0]);
        let dx = Poly3::constant(1.0).add(&x);
        let dy = Poly3::constant(1.0).add(&y);
        // x' * 256 K2 (1+x)(1+y)
        //   = 256 K2 x (1+y) (r1 (1-x)(1+x) - 15 r1 z / 16)
        let fx = x
            .mul(&dy)
            .mul(
                &Poly3::constant(1.0)
                    .sub(&x)
                    .mul(&dx)
                    .scale(r1)
                    .sub(&z.scale(15.0 * r1 / 16.0)),
            )
            .scale(256.0 * k2);
        // y' * 256 K2 (1+x)(1+y)
        //   = y (1+x) (256 K2 r2 (1 - y/K2)(1+y) - 80 r2 (4K2-1) z)
        let fy = y.mul(&dx).mul(
            &y.scale(-1.0 / k2)
                .add(&Poly3::constant(1.0))
                .mul(&dy)
                .scale(256.0 * k2 * r2)
                .sub(&z.scale(80.0 * r2 * (4.0 * k2 - 1.0))),
        );
        // z' * 256 K2 (1+x)(1+y)
        //   = z (240 c1 r1 K2 x (1+y) + 80 r2 (4K2-1) y (1+x)
        //        - (mu + m z) 256 K2 (1+x)(1+y))
        let fz = z.mul(
            &x.mul(&dy)
                .scale(240.0 * c1 * r1 * k2)
                .add(&y.mul(&dx).scale(80.0 * r2 * (4.0 * k2 - 1.0)))
                .sub(
                    &z.scale(m)
                        .add(&Poly3::constant(mu))
                        .mul(&dx)
                        .mul(&dy)
                        .scale(256.0 * k2),
                ),
        );
        Ok([fx, fy, fz])
    }
}

/// Upper bound on `c1` in the chapter-4 Hopf theorem.
pub fn ch4_c1_bound(r1: f64, r2: f64, k2: f64) -> f64 {
    r2 * (2.0 * k2 - 3.0)
        * (4.0 * r1 * r1 * k2 * k2 + 4.0 * r1 * r2 * k2 * (3.0 - 2.0 * k2)
            + 5.0 * r2 * r2 * (1.0 - 4.0 * k2).powi(2))
        / (45.0 * r1.powi(3) * k2.powi(3))
}

/// The closed-form Hopf threshold `m0` for the reduced two-prey system,
/// evaluated without hypothesis checks.
pub fn ch4_m0(r1: f64, r2: f64, k2: f64, c1: f64) -> Result<f64> {
    let den = 80.0 * k2 * (k2 * (r1 - 2.0 * r2) + 3.0 * r2);
    let arg = r1.powi(4) * k2.powi(4) * (4.0 - 45.0 * c1).powi(2)
        + 2.0
            * r1.powi(2)
            * r2.powi(2)
            * k2.powi(2)
            * (45.0 * c1 * (41.0 - 88.0 * k2 + 96.0 * k2 * k2) + 32.0 * k2 * (1.0 + 8.0 * k2)
                - 124.0)
        + r2.powi(4) * (31.0 - 8.0 * k2 * (1.0 + 8.0 * k2)).powi(2);
    if arg < 0.0 {
        return Err(Error::Numeric(format!(
            "square-root argument of m0 is negative ({arg:.6})"
        )));
    }
    Ok((arg.sqrt() + r2 * r2 * (-96.0 * k2 * k2 + 88.0 * k2 - 41.0)
        + 8.0 * r1 * r2 * k2 * (2.0 * k2 - 3.0)
        - r1 * r1 * k2 * k2 * (4.0 + 45.0 * c1))
        / den)
}

/// Hopf threshold of the reduced two-prey system, with the admissible `c1`
/// upper bound.
#[derive(Debug, Clone, Serialize)]
pub struct Ch4Hopf {
    pub point: BifurcationPoint,
    /// Upper bound `c1 <` of the theorem hypothesis.
    pub c1_bound: f64,
}

/// Closed-form Hopf threshold `m0` for the reduced two-prey/one-predator
/// system, certified by the spectrum at `(1/4, 1/4, 1)`.
pub fn hopf_threshold_ch4(r1: f64, r2: f64, k2: f64, c1: f64) -> Result<Ch4Hopf> {
    if r1 <= 0.0 {
        return Err(Error::Precondition(format!("r1 = {r1} must be positive")));
    }
    if r2 <= r1 / 2.0 {
        return Err(Error::Precondition(format!(
            "r2 = {r2} must exceed r1/2 = {}",
            r1 / 2.0
        )));
    }
    let k2_min = 3.0 * r2 / (2.0 * r2 - r1);
    if k2 <= k2_min {
        return Err(Error::Precondition(format!(
            "K2 = {k2} must exceed 3 r2 / (2 r2 - r1) = {k2_min}"
        )));
    }
    let c1_bound = ch4_c1_bound(r1, r2, k2);
    if c1 <= 0.0 || c1 >= c1_bound {
        return Err(Error::Precondition(format!(
            "c1 = {c1} must lie in (0, {c1_bound})"
        )));
    }
    let m0 = ch4_m0(r1, r2, k2, c1)?;
    let m_cap = 3.0 * c1 * r1 / 16.0 + r2 * (4.0 * k2 - 1.0) / (16.0 * k2);
    if !(m0 > 0.0 && m0 < m_cap) {
        return Err(Error::Precondition(format!(
            "threshold m0 = {m0} falls outside the admissible interval (0, {m_cap})"
        )));
    }
    let sys = Ch4Reduced { r1, r2, k2, c1, m: m0 };
    let j = DMatrix::from_iterator(3, 3, sys.jacobian_at_center().iter().copied());
    let spectrum = hopf_spectrum(&j)?;
    let transversality = transversality_ch4(r1, r2, k2, c1, m0, 1e-6 * (1.0 + m0.abs()))?;
    let l1 = first_lyapunov_coefficient(&sys, &[0.25, 0.25, 1.0])?;
    Ok(Ch4Hopf {
        point: BifurcationPoint {
            param: m0,
            spectrum,
            nu: spectrum[0].0,
            omega: spectrum[1].1,
            transversality,
            l1,
            criticality: Criticality::from_l1(l1),
        },
        c1_bound,
    })
}

/// Derivative of the real part of the complex pair with respect to `m` for
/// the polynomialized (time-rescaled) reduced two-prey system; this is the
/// convention used by the normal-form computation, so values are comparable
/// with the first Lyapunov coefficients.
pub fn transversality_ch4(
    r1: f64,
    r2: f64,
    k2: f64,
    c1: f64,
    m: f64,
    delta: f64,
) -> Result<f64> {
    re_pair_derivative(
        |mm| {
            let sys = Ch4Reduced { r1, r2, k2, c1, m: mm };
            DMatrix::from_iterator(3, 3, sys.scaled_jacobian_at_center().iter().copied())
        },
        m,
        delta,
    )
}

/// Zero-Hopf parameter pair `(c1, m)` for the reduced two-prey system.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroHopf {
    pub c1: f64,
    pub m: f64,
    /// Angular frequency of the pure-imaginary pair.
    pub omega: f64,
    /// Spectrum `{0, +-i omega}` as certified by the eigen solve.
    pub spectrum: [(f64, f64); 3],
}

/// Closed-form zero-Hopf threshold of the reduced two-prey system: returns
/// the `(c1, m)` pair at which the spectrum at `(1/4,1/4,1)` is
/// `{0, +i omega, -i omega}`.
pub fn zero_hopf_ch4(r1: f64, r2: f64, k2: f64) -> Result<ZeroHopf> {
    if r1 <= 0.0 || r2 <= 0.0 {
        return Err(Error::Precondition(
            "growth rates r1, r2 must be positive".into(),
        ));
    }
    let k2_min = 3.0 * r2 / (2.0 * r2 - r1);
    if 2.0 * r2 - r1 <= 0.0 || k2 <= k2_min {
        return Err(Error::Precondition(format!(
            "K2 = {k2} must exceed 3 r2 / (2 r2 - r1)"
        )));
    }
    let c1 = (4.0
        + r2 * (8.0 * k2 * (8.0 * k2 + 1.0) - 31.0) / (r1 * k2 * (2.0 * k2 - 3.0)))
        / 45.0;
    let m = r2 / 5.0 - r1 / 10.0 - 3.0 * r2 / (10.0 * k2);
    let sys = Ch4Reduced { r1, r2, k2, c1, m };
    let (a, b, c) = sys.char_coeffs();
    // With A = C = 0 the spectrum is {0, +-sqrt(B)}, pure imaginary
    // exactly when B < 0.
    let scale = 1.0 + b.abs();
    if a.abs() > 1e-9 * scale || c.abs() > 1e-9 * scale || b >= 0.0 {
        return Err(Error::Numeric(format!(
            "zero-Hopf conditions not met: A = {a:.3e}, B = {b:.3e}, C = {c:.3e}"
        )));
    }
    let omega = (-b).sqrt();
    Ok(ZeroHopf {
        c1,
        m,
        omega,
        spectrum: [(0.0, 0.0), (0.0, omega), (0.0, -omega)],
    })
}

// ---------------------------------------------------------------------------
// Symmetric variant used by the averaging analysis.
// ---------------------------------------------------------------------------

/// The symmetric two-prey variant with a shared Holling denominator:
///
/// ```text
/// x' = x (r1 (2 - x) - 3 r1 z / (1 + x + y))
/// y' = y (r2 (2 - y) - 3 r2 z / (1 + x + y))
/// z' = z (3 c1 (r1 x + r2 y) / (1 + x + y) - (c1 (r1 + r2) - m) - m z)
/// ```
///
/// with an equilibrium at `(1,1,1)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymmetricReduced {
    pub r1: f64,
    pub r2: f64,
    pub c1: f64,
    pub m: f64,
}

impl SymmetricReduced {
    /// Jacobian at `(1,1,1)` in closed form.
    pub fn jacobian_at_center(&self) -> Matrix3<f64> {
        let (r1, r2, c1, m) = (self.r1, self.r2, self.c1, self.m);
        Matrix3::new(
            -2.0 * r1,
            r1,
            -3.0 * r1,
            r2,
            -2.0 * r2,
            -3.0 * r2,
            c1 * (2.0 * r1 - r2),
            c1 * (2.0 * r2 - r1),
            -3.0 * m,
        )
    }
}

impl OdeSystem for SymmetricReduced {
    fn dim(&self) -> usize {
        3
    }
    fn eval(&self, s: &[f64], dx: &mut [f64]) {
        let (x, y, z) = (s[0], s[1], s[2]);
        let d = 1.0 + x + y;
        dx[0] = x * (self.r1 * (2.0 - x) - 3.0 * self.r1 * z / d);
        dx[1] = y * (self.r2 * (2.0 - y) - 3.0 * self.r2 * z / d);
        dx[2] = z
            * (3.0 * self.c1 * (self.r1 * x + self.r2 * y) / d
                - (self.c1 * (self.r1 + self.r2) - self.m)
                - self.m * z);
    }
    fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
        crate::model::jacobian_fd(self, s, 1e-7)
    }
}

impl PolynomialForm for SymmetricReduced {
    /// Polynomial form around `point` after multiplying by `(1 + x + y)`.
    fn polynomial_form(&self, point: &[f64]) -> Result<[Poly3; 3]> {
        check_equilibrium(self, point)?;
        let (r1, r2, c1, m) = (self.r1, self.r2, self.c1, self.m);
        let x = Poly3::affine(point[0], [1.0, 0.0, 0.0]);
        let y = Poly3::affine(point[1], [0.0, 1.0, 0.0]);
        let z = Poly3::affine(point[2], [0.0, 0.0, 1.0]);
        let d = Poly3::constant(1.0).add(&x).add(&y);
        let fx = x.mul(
            &Poly3::constant(2.0)
                .sub(&x)
                .scale(r1)
                .mul(&d)
                .sub(&z.scale(3.0 * r1)),
        );
        let fy = y.mul(
            &Poly3::constant(2.0)
                .sub(&y)
                .scale(r2)
                .mul(&d)
                .sub(&z.scale(3.0 * r2)),
        );
        let fz = z.mul(
            &x.scale(r1)
                .add(&y.scale(r2))
                .scale(3.0 * c1)
                .sub(
                    &z.scale(m)
                        .add(&Poly3::constant(c1 * (r1 + r2) - m))
                        .mul(&d),
                ),
        );
        Ok([fx, fy, fz])
    }
}

/// Degenerate threshold of the symmetric variant at `(1,1,1)`.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetricThreshold {
    pub c1: f64,
    pub m: f64,
    /// Spectrum of the Jacobian at `(1,1,1)` as `(re, im)` triples, zero
    /// eigenvalue first.
    pub spectrum: [(f64, f64); 3],
}

/// Degenerate threshold `(c1, m) = (2/3, -(2/3)(r1 + r2))` of the symmetric
/// variant: the Jacobian at `(1,1,1)` has both zero trace and zero
/// determinant there.
///
/// Despite the construction, the resulting spectrum is *not* `{0, +-i
/// omega}`: with the trace and determinant pinned to zero the remaining
/// invariant is the second elementary symmetric function of the eigenvalues,
/// which evaluates to `-9 r1 r2 < 0` for all positive growth rates, so the
/// spectrum is `{0, +3 sqrt(r1 r2), -3 sqrt(r1 r2)}` — a zero eigenvalue
/// together with a symmetric *real* pair. The averaging analysis of this
/// family works in the sector where the angular velocity stays positive and
/// does not require a rotation in the linear part; the returned data
/// certifies the degeneracy that actually holds (zero trace, zero
/// determinant, real symmetric pair).
pub fn zero_hopf_symmetric(r1: f64, r2: f64) -> Result<SymmetricThreshold> {
    if r1 <= 0.0 || r2 <= 0.0 {
        return Err(Error::Precondition(
            "growth rates r1, r2 must be positive".into(),
        ));
    }
    let c1 = 2.0 / 3.0;
    let m = -2.0 / 3.0 * (r1 + r2);
    let sys = SymmetricReduced { r1, r2, c1, m };
    let jm = sys.jacobian_at_center();
    let j = DMatrix::from_iterator(3, 3, jm.iter().copied());
    let scale = j.amax();
    if jm.trace().abs() > 1e-9 * scale || jm.determinant().abs() > 1e-9 * scale.powi(3) {
        return Err(Error::Numeric(format!(
            "trace/determinant do not vanish at the threshold (tr = {:.3e}, det = {:.3e})",
            jm.trace(),
            jm.determinant()
        )));
    }
    let s = 3.0 * (r1 * r2).sqrt();
    // Certify the spectrum {0, +s, -s} against the eigen solve.
    let mut eig: Vec<f64> = j.complex_eigenvalues().iter().map(|l| l.re).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (got, want) in eig.iter().zip([-s, 0.0, s]) {
        if (got - want).abs() > 1e-8 * (1.0 + scale) {
            return Err(Error::Numeric(format!(
                "eigenvalue {got:.6} does not match the closed form {want:.6}"
            )));
        }
    }
    Ok(SymmetricThreshold {
        c1,
        m,
        spectrum: [(0.0, 0.0), (s, 0.0), (-s, 0.0)],
    })
}

// ---------------------------------------------------------------------------
// Bazykin Hopf condition (zero-interference limit).
// ---------------------------------------------------------------------------

/// The Bazykin Hopf threshold data at `m = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct BazykinHopf {
    /// Break-even prey level `y^b`.
    pub y_b: f64,
    /// Abscissa of the prey-isocline vertex, `(K - 1/a)/2`.
    pub vertex: f64,
    /// Trace of the scaled Jacobian at the positive equilibrium.
    pub trace: f64,
    /// Determinant of the scaled Jacobian (always positive on `(0, K)`).
    pub det: f64,
    /// True when `y_b` is within the eigen tolerance of the vertex, so the
    /// eigenvalues are `+-i sqrt(det)`.
    pub at_threshold: bool,
    /// True when the equilibrium sits right of the vertex (stable side).
    pub stable_side: bool,
}

/// Hopf condition for the Bazykin model without predator self-interference:
/// the threshold sits exactly where the break-even level `y^b` crosses the
/// prey-isocline vertex `(K - 1/a)/2`.
pub fn bazykin_hopf(model: &Bazykin) -> Result<BazykinHopf> {
    if model.m != 0.0 {
        return Err(Error::Precondition(format!(
            "the closed-form Hopf condition requires m = 0 (got m = {})",
            model.m
        )));
    }
    let y_b = model.break_even();
    if !(y_b > 0.0 && y_b < model.k) {
        return Err(Error::Precondition(format!(
            "break-even level {y_b} must lie in (0, K = {})",
            model.k
        )));
    }
    let (r, k, q, a, c) = (model.r, model.k, model.q, model.a, model.c);
    let trace = r / k * (a * k - 2.0 * a * y_b - 1.0) * y_b;
    let det = c * q * r * y_b * (1.0 - y_b / k);
    let vertex = (k - 1.0 / a) / 2.0;
    Ok(BazykinHopf {
        y_b,
        vertex,
        trace,
        det,
        at_threshold: (y_b - vertex).abs() < 1e-9 * (1.0 + vertex.abs()),
        stable_side: y_b > vertex,
    })
}

// ---------------------------------------------------------------------------
// Transversality by eigenvalue continuity.
// ---------------------------------------------------------------------------

/// Central difference of the real part of the complex eigenvalue pair of a
/// parameter-dependent Jacobian. The pair is tracked across the perturbation
/// by matching in the complex plane; if the perturbed spectra cannot be
/// paired unambiguously, an error is raised.
pub fn re_pair_derivative(
    jac: impl Fn(f64) -> DMatrix<f64>,
    p0: f64,
    delta: f64,
) -> Result<f64> {
    if delta <= 0.0 {
        return Err(Error::InvalidScenario("delta must be positive".into()));
    }
    let pair_at = |p: f64, reference: Option<Complex64>| -> Result<Complex64> {
        let eig = jac(p).complex_eigenvalues();
        let candidates: Vec<Complex64> = eig.iter().filter(|l| l.im > 0.0).copied().collect();
        match (candidates.len(), reference) {
            (0, _) => Err(Error::Numeric(format!(
                "no complex pair at parameter {p}; eigenvalue pairing failed"
            ))),
            (1, _) => Ok(candidates[0]),
            (_, Some(r)) => {
                let mut sorted = candidates;
                sorted.sort_by(|a, b| {
                    (a - r).norm().partial_cmp(&(b - r).norm()).unwrap()
                });
                let (d0, d1) = ((sorted[0] - r).norm(), (sorted[1] - r).norm());
                if d0 > 0.9 * d1 {
                    return Err(Error::Numeric(
                        "ambiguous eigenvalue pairing across the perturbation".into(),
                    ));
                }
                Ok(sorted[0])
            }
            (_, None) => Err(Error::Numeric(
                "multiple complex pairs with no reference for continuity".into(),
            )),
        }
    };
    let center = pair_at(p0, None)?;
    let plus = pair_at(p0 + delta, Some(center))?;
    let minus = pair_at(p0 - delta, Some(center))?;
    Ok((plus.re - minus.re) / (2.0 * delta))
}

// ---------------------------------------------------------------------------
// Normal-form pipeline.
// ---------------------------------------------------------------------------

/// A vector field in eigenbasis coordinates around an equilibrium at the
/// origin, together with the change-of-basis data and (for Hopf points) the
/// center-manifold quadratic coefficients.
#[derive(Debug, Clone)]
pub struct NormalFormData {
    /// Eigenvalues as `(re, im)`, ordered to match the transformed
    /// coordinates (for Hopf data: pair first, real eigenvalue third).
    pub eigenvalues: [(f64, f64); 3],
    /// Change-of-basis matrix: original = `q` * transformed.
    pub q: Matrix3<f64>,
    /// Transformed linear part `q^{-1} J q`.
    pub linear: Matrix3<f64>,
    /// Transformed polynomial components.
    pub components: [Poly3; 3],
    /// `(phi_xx, phi_xy, phi_yy)` of the quadratic center-manifold graph
    /// `z = phi(x, y)`; present only on the Hopf path.
    pub phi: Option<(f64, f64, f64)>,
    /// Positive angular frequency (0 when there is no complex pair).
    pub omega: f64,
}

fn check_equilibrium<S: OdeSystem>(sys: &S, point: &[f64]) -> Result<()> {
    let f = sys.eval_vec(point);
    let scale = 1.0 + point.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if f.amax() > 1e-8 * scale {
        return Err(Error::Precondition(format!(
            "point {point:?} is not an equilibrium (|f| = {:.3e})",
            f.amax()
        )));
    }
    Ok(())
}

/// Linear part of a polynomial vector field with the equilibrium at the
/// origin.
fn linear_part(polys: &[Poly3; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| {
        let mut e = [0u8; 3];
        e[j] = 1;
        polys[i].coeff(e)
    })
}

/// Nullspace vector of `j - lambda I` for a simple eigenvalue, via the
/// largest pairwise cross product of the rows.
fn eigvec(j: &Matrix3<f64>, lambda: Complex64) -> Result<[Complex64; 3]> {
    let row = |i: usize| -> [Complex64; 3] {
        let mut r = [
            Complex64::new(j[(i, 0)], 0.0),
            Complex64::new(j[(i, 1)], 0.0),
            Complex64::new(j[(i, 2)], 0.0),
        ];
        r[i] -= lambda;
        r
    };
    let cross = |a: [Complex64; 3], b: [Complex64; 3]| -> [Complex64; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let norm = |v: &[Complex64; 3]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let (r0, r1, r2) = (row(0), row(1), row(2));
    let candidates = [cross(r0, r1), cross(r1, r2), cross(r0, r2)];
    let best = candidates
        .into_iter()
        .max_by(|a, b| norm(a).partial_cmp(&norm(b)).unwrap())
        .unwrap();
    let scale = j.amax() + lambda.norm();
    if norm(&best) < 1e-12 * scale * scale {
        return Err(Error::Numeric(format!(
            "defective Jacobian: no simple eigenvector for eigenvalue {lambda}"
        )));
    }
    Ok(best)
}

/// Transform polynomial components into a new basis: returns
/// `q^{-1} F(q u)` componentwise.
fn change_basis(polys: &[Poly3; 3], q: &Matrix3<f64>) -> Result<[Poly3; 3]> {
    let qinv = q
        .try_inverse()
        .ok_or_else(|| Error::Numeric("change-of-basis matrix is singular".into()))?;
    let subs = [
        Poly3::affine(0.0, [q[(0, 0)], q[(0, 1)], q[(0, 2)]]),
        Poly3::affine(0.0, [q[(1, 0)], q[(1, 1)], q[(1, 2)]]),
        Poly3::affine(0.0, [q[(2, 0)], q[(2, 1)], q[(2, 2)]]),
    ];
    let composed: Vec<Poly3> = polys.iter().map(|p| p.substitute(&subs)).collect();
    let mut out = [Poly3::zero(), Poly3::zero(), Poly3::zero()];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = Poly3::zero();
        for (k, comp) in composed.iter().enumerate() {
            acc = acc.add(&comp.scale(qinv[(i, k)]));
        }
        *slot = acc;
    }
    Ok(out)
}

/// Spectrum of a Jacobian at a Hopf threshold: `{nu, eps + i omega,
/// eps - i omega}` with `|eps| < THRESHOLD_RE_EPS` relative to the matrix
/// scale. The real eigenvalue comes first.
pub fn hopf_spectrum(j: &DMatrix<f64>) -> Result<[(f64, f64); 3]> {
    let eig = j.complex_eigenvalues();
    let mut real = None;
    let mut pair = None;
    for l in eig.iter() {
        if l.im.abs() < 1e-9 * (1.0 + l.norm()) {
            real = Some(l.re);
        } else if l.im > 0.0 {
            pair = Some((l.re, l.im));
        }
    }
    let (nu, (eps, om)) = match (real, pair) {
        (Some(n), Some(p)) => (n, p),
        _ => {
            return Err(Error::Numeric(
                "spectrum does not split into a real eigenvalue and a complex pair".into(),
            ))
        }
    };
    let scale = j.amax();
    if eps.abs() > THRESHOLD_RE_EPS * (1.0 + scale) {
        return Err(Error::Numeric(format!(
            "complex pair has nonvanishing real part {eps:.3e}"
        )));
    }
    Ok([(nu, 0.0), (eps, om), (eps, -om)])
}

/// Build the Hopf eigenbasis of a polynomial vector field: coordinates
/// `(x, y)` span the center plane (linear part `[[eps, -omega], [omega,
/// eps]]` with `omega > 0`) and `z` the real eigendirection.
pub fn hopf_normal_form(polys: &[Poly3; 3]) -> Result<NormalFormData> {
    let j = linear_part(polys);
    let jd = DMatrix::from_iterator(3, 3, j.iter().copied());
    let eig = jd.complex_eigenvalues();
    let mut real = None;
    let mut pair = None;
    for l in eig.iter() {
        if l.im.abs() < 1e-9 * (1.0 + l.norm()) {
            real = Some(l.re);
        } else if l.im > 0.0 {
            pair = Some(*l);
        }
    }
    let (nu, lambda) = match (real, pair) {
        (Some(n), Some(p)) => (n, p),
        _ => {
            return Err(Error::Numeric(
                "spectrum does not contain a complex pair; not a Hopf point".into(),
            ))
        }
    };
    if lambda.im.abs() < 1e-10 * (1.0 + j.amax()) {
        return Err(Error::Numeric("omega is numerically zero".into()));
    }

    // Eigenvectors, normalized to third component 1 when possible (the
    // largest component otherwise).
    let normalize = |v: [Complex64; 3]| -> [Complex64; 3] {
        let n = v.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let pivot = if v[2].norm() > 1e-10 * n {
            v[2]
        } else {
            *v.iter().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap()
        };
        [v[0] / pivot, v[1] / pivot, v[2] / pivot]
    };
    let u = normalize(eigvec(&j, lambda)?);
    let w = normalize(eigvec(&j, Complex64::new(nu, 0.0))?);

    let mut q = Matrix3::new(
        u[0].re, u[0].im, w[0].re, u[1].re, u[1].im, w[1].re, u[2].re, u[2].im, w[2].re,
    );
    // Orient the center plane so the rotation reads x' = -omega y,
    // y' = omega x.
    let qinv = q
        .try_inverse()
        .ok_or_else(|| Error::Numeric("eigenbasis is singular".into()))?;
    let t = qinv * j * q;
    if t[(0, 1)] > 0.0 {
        q[(0, 1)] = -q[(0, 1)];
        q[(1, 1)] = -q[(1, 1)];
        q[(2, 1)] = -q[(2, 1)];
    }
    let components = change_basis(polys, &q)?;
    let linear = linear_part(&components);

    // The eigenbasis must block-diagonalize the linear part.
    let scale = j.amax();
    for &(r, c) in &[(0usize, 2usize), (1, 2), (2, 0), (2, 1)] {
        if linear[(r, c)].abs() > 1e-8 * (1.0 + scale) {
            return Err(Error::Numeric(format!(
                "eigenbasis failed to block-diagonalize the linear part \
                 (entry ({r},{c}) = {:.3e})",
                linear[(r, c)]
            )));
        }
    }
    let omega = linear[(1, 0)];
    if omega <= 0.0 {
        return Err(Error::Numeric(
            "center-plane orientation failed (omega <= 0)".into(),
        ));
    }

    // Quadratic center manifold z = phi(x, y) from the invariance equation.
    let h = &components[2];
    let hxx = 2.0 * h.coeff([2, 0, 0]);
    let hxy = h.coeff([1, 1, 0]);
    let hyy = 2.0 * h.coeff([0, 2, 0]);
    let t33 = linear[(2, 2)];
    let delta = t33 * (t33 * t33 + 4.0 * omega * omega);
    if delta.abs() < 1e-12 * (1.0 + scale).powi(3) {
        return Err(Error::Numeric(
            "center-manifold solve is singular (Delta ~ 0)".into(),
        ));
    }
    // Adjugate form of the solve: phi = P (-hxx, -hxy, -hyy)^T / Delta with
    // the linear block reduced to pure rotation (t11 = t22 = 0, t12 = -omega,
    // t21 = omega, t33 = nu).
    let adj = Matrix3::new(
        2.0 * omega * omega + t33 * t33,
        -2.0 * omega * t33,
        2.0 * omega * omega,
        omega * t33,
        t33 * t33,
        -omega * t33,
        2.0 * omega * omega,
        2.0 * omega * t33,
        2.0 * omega * omega + t33 * t33,
    );
    let phi = adj * Vector3::new(-hxx, -hxy, -hyy) / delta;

    Ok(NormalFormData {
        eigenvalues: [
            (linear[(0, 0)], omega),
            (linear[(1, 1)], -omega),
            (nu, 0.0),
        ],
        q,
        linear,
        components,
        phi: Some((phi[0], phi[1], phi[2])),
        omega,
    })
}

/// First Lyapunov coefficient of a polynomial vector field at a Hopf point
/// (equilibrium at the origin, spectrum `{nu, +-i omega}`), via the
/// Marsden-McCracken reduction onto the quadratic center manifold.
pub fn first_lyapunov_coefficient_poly(polys: &[Poly3; 3]) -> Result<f64> {
    let nf = hopf_normal_form(polys)?;
    Ok(l1_from_normal_form(&nf))
}

/// The Marsden-McCracken sum evaluated on prepared normal-form data.
pub fn l1_from_normal_form(nf: &NormalFormData) -> f64 {
    let f = &nf.components[0];
    let g = &nf.components[1];
    let (pxx, pxy, pyy) = nf.phi.expect("normal-form data lacks center-manifold terms");
    let c = |p: &Poly3, e: [u8; 3], mult: f64| mult * p.coeff(e);
    let fxx = c(f, [2, 0, 0], 2.0);
    let fxy = c(f, [1, 1, 0], 1.0);
    let fyy = c(f, [0, 2, 0], 2.0);
    let fxz = c(f, [1, 0, 1], 1.0);
    let fyz = c(f, [0, 1, 1], 1.0);
    let fxxx = c(f, [3, 0, 0], 6.0);
    let fxyy = c(f, [1, 2, 0], 2.0);
    let gxx = c(g, [2, 0, 0], 2.0);
    let gxy = c(g, [1, 1, 0], 1.0);
    let gyy = c(g, [0, 2, 0], 2.0);
    let gxz = c(g, [1, 0, 1], 1.0);
    let gyz = c(g, [0, 1, 1], 1.0);
    let gxxy = c(g, [2, 1, 0], 2.0);
    let gyyy = c(g, [0, 3, 0], 6.0);

    let a_fxxx = fxxx + 3.0 * fxz * pxx;
    let a_fxyy = fxyy + 2.0 * fyz * pxy + fxz * pyy;
    let a_gxxy = gxxy + 2.0 * gxz * pxy + gyz * pxx;
    let a_gyyy = gyyy + 3.0 * gyz * pyy;

    let cubic = a_fxxx + a_fxyy + a_gxxy + a_gyyy;
    // Quadratic products carry the usual 1/omega weight of the planar
    // reduction.
    let quadratic =
        -fxx * fxy + gyy * gxy + gxx * gxy - fyy * fxy + fxx * gxx - fyy * gyy;
    3.0 * std::f64::consts::PI / (4.0 * nf.omega) * (cubic + quadratic / nf.omega)
}

/// First Lyapunov coefficient of a model at a Hopf equilibrium, running the
/// full pipeline: translate, polynomialize, change to the eigenbasis, reduce
/// to the center manifold and evaluate the Marsden-McCracken sum.
pub fn first_lyapunov_coefficient<S: PolynomialForm>(model: &S, point: &[f64]) -> Result<f64> {
    first_lyapunov_coefficient_poly(&model.polynomial_form(point)?)
}

// ---------------------------------------------------------------------------
// Real diagonalization and the one-dimensional center manifold.
// ---------------------------------------------------------------------------

/// Translate, polynomialize and diagonalize a model at an equilibrium with
/// real, distinct eigenvalues. Eigenvectors are normalized so their third
/// component is 1 when possible (first significant component otherwise), and
/// columns are matched to the original coordinates.
pub fn diagonalize_at_equilibrium<S: PolynomialForm>(
    model: &S,
    point: &[f64],
) -> Result<NormalFormData> {
    let polys = model.polynomial_form(point)?;
    let j = linear_part(&polys);
    let jd = DMatrix::from_iterator(3, 3, j.iter().copied());
    let eig = jd.complex_eigenvalues();
    let scale = j.amax();
    let mut lambdas = Vec::new();
    for l in eig.iter() {
        if l.im.abs() > 1e-9 * (1.0 + scale) {
            return Err(Error::Numeric(
                "spectrum has a complex pair; real diagonalization does not apply".into(),
            ));
        }
        lambdas.push(l.re);
    }
    for i in 0..3 {
        for k in i + 1..3 {
            if (lambdas[i] - lambdas[k]).abs() < 1e-10 * (1.0 + scale) {
                return Err(Error::Numeric(
                    "repeated eigenvalue; Jacobian may be defective".into(),
                ));
            }
        }
    }

    let mut vecs = Vec::new();
    for &l in &lambdas {
        let v = eigvec(&j, Complex64::new(l, 0.0))?;
        let mut rv = [v[0].re, v[1].re, v[2].re];
        let n = rv.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        // Normalize: third component to 1 when significant, else the first
        // significant component to 1.
        let pivot = if rv[2].abs() > 1e-9 * n {
            2
        } else if rv[0].abs() > 1e-9 * n {
            0
        } else {
            1
        };
        let p = rv[pivot];
        for x in rv.iter_mut() {
            *x /= p;
        }
        vecs.push(rv);
    }

    // Match each eigenvector to a distinct coordinate axis so the new
    // variables keep their original meaning: choose the permutation with the
    // largest diagonal weight.
    let mut best: Option<([usize; 3], f64)> = None;
    for perm in [
        [0usize, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ] {
        // perm[col] = which eigenvector occupies column col.
        let score: f64 = (0..3)
            .map(|col| {
                let v = &vecs[perm[col]];
                let n = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
                v[col].abs() / n
            })
            .product();
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((perm, score));
        }
    }
    let (perm, score) = best.unwrap();
    if score == 0.0 {
        return Err(Error::Numeric(
            "could not associate eigenvectors with coordinates".into(),
        ));
    }

    let q = Matrix3::from_fn(|r, cidx| vecs[perm[cidx]][r]);
    let components = change_basis(&polys, &q)?;
    let linear = linear_part(&components);
    Ok(NormalFormData {
        eigenvalues: [
            (lambdas[perm[0]], 0.0),
            (lambdas[perm[1]], 0.0),
            (lambdas[perm[2]], 0.0),
        ],
        q,
        linear,
        components,
        phi: None,
        omega: 0.0,
    })
}

/// A one-dimensional quadratic center-manifold approximation `y = phi(x)`
/// in diagonalized coordinates.
#[derive(Debug, Clone)]
pub struct CenterManifold {
    /// Diagonalized system (center coordinate first).
    pub data: NormalFormData,
    /// Quadratic coefficients of the two stable components of the graph.
    pub coefficients: [f64; 2],
}

impl CenterManifold {
    /// Residual of the invariance operator `M_phi` at center coordinate `x`:
    /// must be `O(x^3)`.
    pub fn residual(&self, x: f64) -> [f64; 2] {
        let phi1 = self.coefficients[0] * x * x;
        let phi2 = self.coefficients[1] * x * x;
        let state = [x, phi1, phi2];
        let dx = self.data.components[0].eval(state);
        let dphi = [2.0 * self.coefficients[0] * x, 2.0 * self.coefficients[1] * x];
        [
            dphi[0] * dx - self.data.components[1].eval(state),
            dphi[1] * dx - self.data.components[2].eval(state),
        ]
    }
}

/// Quadratic center-manifold approximation at an equilibrium with exactly
/// one eigenvalue at zero (within `eps`) and the others stable.
pub fn center_manifold_quadratic<S: PolynomialForm>(
    model: &S,
    point: &[f64],
    eps: f64,
) -> Result<CenterManifold> {
    let data = diagonalize_at_equilibrium(model, point)?;
    let scale = 1.0
        + data
            .eigenvalues
            .iter()
            .fold(0.0f64, |a, &(re, _)| a.max(re.abs()));
    let center: Vec<usize> = (0..3)
        .filter(|&i| data.eigenvalues[i].0.abs() < eps * scale)
        .collect();
    if center.len() != 1 {
        return Err(Error::Precondition(format!(
            "center dimension is {} (need exactly 1)",
            center.len()
        )));
    }
    let c = center[0];
    let stable: Vec<usize> = (0..3).filter(|&i| i != c).collect();
    for &i in &stable {
        if data.eigenvalues[i].0 >= 0.0 {
            return Err(Error::Precondition(format!(
                "non-center eigenvalue {} is not stable",
                data.eigenvalues[i].0
            )));
        }
    }

    // Reorder coordinates center-first by permuting the basis columns.
    let order = [c, stable[0], stable[1]];
    let q = Matrix3::from_fn(|r, cidx| data.q[(r, order[cidx])]);
    let components = change_basis(
        &[
            data.components[order[0]].clone(),
            data.components[order[1]].clone(),
            data.components[order[2]].clone(),
        ],
        &Matrix3::identity(),
    )?;
    // The reorder above permutes equations; variables must be permuted too.
    let subs_perm = {
        let mut subs = [Poly3::zero(), Poly3::zero(), Poly3::zero()];
        for (new, &old) in order.iter().enumerate() {
            // old variable index -> new variable position
            subs[old] = Poly3::var(new);
        }
        subs
    };
    let components = [
        components[0].substitute(&subs_perm),
        components[1].substitute(&subs_perm),
        components[2].substitute(&subs_perm),
    ];
    let linear = linear_part(&components);
    let data = NormalFormData {
        eigenvalues: [
            data.eigenvalues[order[0]],
            data.eigenvalues[order[1]],
            data.eigenvalues[order[2]],
        ],
        q,
        linear,
        components,
        phi: None,
        omega: 0.0,
    };

    // Solve B c = -s for the x^2 coefficients, with B the stable block and s
    // the x^2 sources of the stable components.
    let b = nalgebra::Matrix2::new(
        data.linear[(1, 1)],
        data.linear[(1, 2)],
        data.linear[(2, 1)],
        data.linear[(2, 2)],
    );
    let s = nalgebra::Vector2::new(
        data.components[1].coeff([2, 0, 0]),
        data.components[2].coeff([2, 0, 0]),
    );
    let coeffs = b
        .lu()
        .solve(&(-s))
        .ok_or_else(|| Error::Numeric("stable block is singular".into()))?;
    Ok(CenterManifold {
        data,
        coefficients: [coeffs[0], coeffs[1]],
    })
}

impl PolynomialForm for TwoPrey {
    /// Polynomial form around `point` after multiplying the field by the
    /// denominator product `(1 + a1 x)(1 + a2 y)`.
    fn polynomial_form(&self, point: &[f64]) -> Result<[Poly3; 3]> {
        check_equilibrium(self, point)?;
        let x = Poly3::affine(point[0], [1.0, 0.0, 0.0]);
        let y = Poly3::affine(point[1], [0.0, 1.0, 0.0]);
        let z = Poly3::affine(point[2], [0.0, 0.0, 1.0]);
        let d1 = x.scale(self.a1).add(&Poly3::constant(1.0));
        let d2 = y.scale(self.a2).add(&Poly3::constant(1.0));
        // x' (1+a1 x)(1+a2 y)
        //   = x ((r1 (1-x/K1) - alpha12 y)(1+a1 x) - q1 z)(1+a2 y)
        let fx = x.mul(
            &x.scale(-self.r1 / self.k1)
                .add(&Poly3::constant(self.r1))
                .sub(&y.scale(self.alpha12))
                .mul(&d1)
                .sub(&z.scale(self.q1)),
        )
        .mul(&d2);
        let fy = y
            .mul(
                &y.scale(-self.r2 / self.k2)
                    .add(&Poly3::constant(self.r2))
                    .sub(&x.scale(self.alpha21))
                    .mul(&d2)
                    .sub(&z.scale(self.q2)),
            )
            .mul(&d1);
        // z' (1+a1 x)(1+a2 y)
        //   = z (c1 q1 x (1+a2 y) + c2 q2 y (1+a1 x)
        //        - (mu + m z)(1+a1 x)(1+a2 y))
        let fz = z.mul(
            &x.scale(self.c1 * self.q1)
                .mul(&d2)
                .add(&y.scale(self.c2 * self.q2).mul(&d1))
                .sub(&z.scale(self.m).add(&Poly3::constant(self.mu)).mul(&d1).mul(&d2)),
        );
        Ok([fx, fy, fz])
    }
}

// ---------------------------------------------------------------------------
// Hopf curve tracing.
// ---------------------------------------------------------------------------

/// A family with a closed-form Hopf threshold, traced along one parameter.
#[derive(Debug, Clone, Copy)]
pub enum HopfFamily {
    /// The reduced one-prey/two-predator family at fixed `q1`, sweeping `K`;
    /// points are `(K, m2)`.
    Ch3 { q1: f64 },
    /// The reduced two-prey family at fixed `(r1, r2, K2)`, sweeping `c1`;
    /// points are `(m0, c1)`.
    Ch4 { r1: f64, r2: f64, k2: f64 },
}

/// One traced Hopf-curve point.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub p1: f64,
    pub p2: f64,
    pub omega: f64,
    pub nu: f64,
    pub l1: f64,
}

/// Evaluate the closed-form Hopf threshold on a uniform sweep; points where
/// the theorem hypotheses fail are skipped. Errors if the hypothesis region
/// is empty over the whole sweep.
pub fn hopf_curve_trace(
    family: HopfFamily,
    range: (f64, f64),
    steps: usize,
) -> Result<Vec<CurvePoint>> {
    if steps < 1 {
        return Err(Error::InvalidScenario("need at least one sweep step".into()));
    }
    let coord = |i: usize| {
        if steps == 1 {
            0.5 * (range.0 + range.1)
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (steps - 1) as f64
        }
    };
    let points: Vec<CurvePoint> = (0..steps)
        .into_par_iter()
        .filter_map(|i| {
            let p = coord(i);
            match family {
                HopfFamily::Ch3 { q1 } => hopf_threshold_ch3(p, q1).ok().map(|b| CurvePoint {
                    p1: p,
                    p2: b.param,
                    omega: b.omega,
                    nu: b.nu,
                    l1: b.l1,
                }),
                HopfFamily::Ch4 { r1, r2, k2 } => {
                    hopf_threshold_ch4(r1, r2, k2, p).ok().map(|b| CurvePoint {
                        p1: b.point.param,
                        p2: p,
                        omega: b.point.omega,
                        nu: b.point.nu,
                        l1: b.point.l1,
                    })
                }
            }
        })
        .collect();
    if points.is_empty() {
        return Err(Error::Precondition(
            "hypothesis region is empty over the requested sweep".into(),
        ));
    }
    Ok(points)
}

/// Render traced curve points as CSV (`param1,param2,omega,nu,l1`).
pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("param1,param2,omega,nu,l1\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.p1, p.p2, p.omega, p.nu, p.l1
        ));
    }
    out
}
