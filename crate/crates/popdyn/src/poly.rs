//! Sparse trivariate polynomials.
//!
//! The normal-form computations (eigenbasis changes, center manifolds, first
//! Lyapunov coefficients) all operate on vector fields written as polynomials
//! in three variables. This module provides the small amount of polynomial
//! arithmetic they need: addition, multiplication, affine substitution and
//! coefficient access.

use std::collections::BTreeMap;

/// A polynomial in three variables with `f64` coefficients, stored sparsely
/// by exponent triple.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly3 {
    terms: BTreeMap<[u8; 3], f64>,
}

impl Poly3 {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Poly3::default()
    }

    /// A constant polynomial.
    pub fn constant(c: f64) -> Self {
        let mut p = Poly3::zero();
        p.add_term([0, 0, 0], c);
        p
    }

    /// The variable with index `i` (0, 1 or 2).
    pub fn var(i: usize) -> Self {
        let mut e = [0u8; 3];
        e[i] = 1;
        let mut p = Poly3::zero();
        p.add_term(e, 1.0);
        p
    }

    /// An affine form `c0 + c1 x + c2 y + c3 z`.
    pub fn affine(c0: f64, c: [f64; 3]) -> Self {
        let mut p = Poly3::constant(c0);
        for (i, &ci) in c.iter().enumerate() {
            let mut e = [0u8; 3];
            e[i] = 1;
            p.add_term(e, ci);
        }
        p
    }

    /// Add `coeff * x^e0 y^e1 z^e2` in place.
    pub fn add_term(&mut self, exps: [u8; 3], coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let slot = self.terms.entry(exps).or_insert(0.0);
        *slot += coeff;
        if *slot == 0.0 {
            self.terms.remove(&exps);
        }
    }

    /// Coefficient of the monomial with the given exponents.
    pub fn coeff(&self, exps: [u8; 3]) -> f64 {
        self.terms.get(&exps).copied().unwrap_or(0.0)
    }

    /// Iterate over `(exponents, coefficient)` pairs in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = ([u8; 3], f64)> + '_ {
        self.terms.iter().map(|(&e, &c)| (e, c))
    }

    /// Total degree of the polynomial (0 for the zero polynomial).
    pub fn degree(&self) -> u8 {
        self.terms
            .keys()
            .map(|e| e[0] + e[1] + e[2])
            .max()
            .unwrap_or(0)
    }

    /// Sum of two polynomials.
    pub fn add(&self, other: &Poly3) -> Poly3 {
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(e, c);
        }
        out
    }

    /// Difference of two polynomials.
    pub fn sub(&self, other: &Poly3) -> Poly3 {
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(e, -c);
        }
        out
    }

    /// Product with a scalar.
    pub fn scale(&self, s: f64) -> Poly3 {
        let mut out = Poly3::zero();
        for (e, c) in self.terms() {
            out.add_term(e, c * s);
        }
        out
    }

    /// Product of two polynomials.
    pub fn mul(&self, other: &Poly3) -> Poly3 {
        let mut out = Poly3::zero();
        for (ea, ca) in self.terms() {
            for (eb, cb) in other.terms() {
                out.add_term([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]], ca * cb);
            }
        }
        out
    }

    /// Integer power.
    pub fn pow(&self, n: u8) -> Poly3 {
        let mut out = Poly3::constant(1.0);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Evaluate at a point.
    pub fn eval(&self, p: [f64; 3]) -> f64 {
        self.terms()
            .map(|(e, c)| {
                c * p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32) * p[2].powi(e[2] as i32)
            })
            .sum()
    }

    /// Substitute each variable with an affine form: `x_i -> subs[i]`.
    pub fn substitute(&self, subs: &[Poly3; 3]) -> Poly3 {
        let mut out = Poly3::zero();
        for (e, c) in self.terms() {
            let term = subs[0]
                .pow(e[0])
                .mul(&subs[1].pow(e[1]))
                .mul(&subs[2].pow(e[2]));
            out = out.add(&term.scale(c));
        }
        out
    }

    /// Partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Poly3 {
        let mut out = Poly3::zero();
        for (e, c) in self.terms() {
            if e[i] == 0 {
                continue;
            }
            let mut en = e;
            en[i] -= 1;
            out.add_term(en, c * e[i] as f64);
        }
        out
    }

    /// Drop terms whose coefficient magnitude is at most `tol`, and terms of
    /// total degree above `max_degree`.
    pub fn truncate(&self, max_degree: u8, tol: f64) -> Poly3 {
        let mut out = Poly3::zero();
        for (e, c) in self.terms() {
            if e[0] + e[1] + e[2] <= max_degree && c.abs() > tol {
                out.add_term(e, c);
            }
        }
        out
    }
}
