//! Prey growth laws.
//!
//! All five laws share the normalization g(K) = 0 and g > 0 on (0, K). They
//! differ in their behaviour near the origin: the limit
//! `beta = lim_{x->0+} x g'(x) + g(x)` is finite (equal to 1) for all laws
//! except the Gompertz law, for which the per-capita growth rate blows up at
//! the origin.

use serde::{Deserialize, Serialize};

/// A prey growth law `g(x)` with carrying capacity `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Logistic: `1 - x/K`.
    Logistic,
    /// Richards (theta = 2): `1 - (x/K)^2`.
    Richards,
    /// Gompertz: `ln(K/x) / ln(K)`.
    Gompertz,
    /// Modified Gompertz: `ln((K+1)/(x+1)) / ln(K+1)`.
    GompertzModified,
    /// Schoener: `((K+1)/(x+1) - 1) / K`.
    Schoener,
}

impl Growth {
    /// All five laws, in conventional presentation order.
    pub const ALL: [Growth; 5] = [
        Growth::Logistic,
        Growth::Richards,
        Growth::Gompertz,
        Growth::GompertzModified,
        Growth::Schoener,
    ];

    /// Evaluate `g(x)` for carrying capacity `k`.
    pub fn g(self, x: f64, k: f64) -> f64 {
        match self {
            Growth::Logistic => 1.0 - x / k,
            Growth::Richards => 1.0 - (x / k).powi(2),
            Growth::Gompertz => (k / x).ln() / k.ln(),
            Growth::GompertzModified => ((k + 1.0) / (x + 1.0)).ln() / (k + 1.0).ln(),
            Growth::Schoener => ((k + 1.0) / (x + 1.0) - 1.0) / k,
        }
    }

    /// Evaluate `g'(x)` for carrying capacity `k`.
    pub fn dg(self, x: f64, k: f64) -> f64 {
        match self {
            Growth::Logistic => -1.0 / k,
            Growth::Richards => -2.0 * x / (k * k),
            Growth::Gompertz => -1.0 / (x * k.ln()),
            Growth::GompertzModified => -1.0 / ((x + 1.0) * (k + 1.0).ln()),
            Growth::Schoener => -(k + 1.0) / (k * (x + 1.0) * (x + 1.0)),
        }
    }

    /// The origin limit `beta = lim_{x->0+} (x g(x))' = lim x g'(x) + g(x)`.
    ///
    /// Finite (and equal to 1) for every law except Gompertz, where the
    /// per-capita rate diverges at the origin; `None` in that case.
    pub fn beta(self, _k: f64) -> Option<f64> {
        match self {
            Growth::Gompertz => None,
            _ => Some(1.0),
        }
    }

    /// Stable short name used in tables and CLI output.
    pub fn name(self) -> &'static str {
        match self {
            Growth::Logistic => "logistic",
            Growth::Richards => "richards",
            Growth::Gompertz => "gompertz",
            Growth::GompertzModified => "gompertz_modified",
            Growth::Schoener => "schoener",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_at_carrying_capacity() {
        for law in Growth::ALL {
            // Gompertz needs K > 1 (ln K in the denominator); the others are
            // fine for any positive K.
            for k in [1.5, 4.0, 8.0] {
                assert!(law.g(k, k).abs() < 1e-14, "{law:?} g(K) != 0 at K={k}");
            }
        }
    }

    #[test]
    fn positive_below_capacity_and_decreasing() {
        for law in Growth::ALL {
            let k = 8.0;
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let x = k * i as f64 / 200.0;
                let g = law.g(x, k);
                assert!(g > -1e-14, "{law:?} negative inside (0,K)");
                assert!(g < prev, "{law:?} not strictly decreasing");
                assert!(law.dg(x, k) < 0.0, "{law:?} derivative not negative");
                prev = g;
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let h = 1e-6;
        for law in Growth::ALL {
            for k in [2.0, 8.0] {
                for x in [0.3, 1.0, 2.5, k * 0.9] {
                    let fd = (law.g(x + h, k) - law.g(x - h, k)) / (2.0 * h);
                    assert_relative_eq!(law.dg(x, k), fd, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn origin_limit() {
        // beta = lim x g'(x) + g(x): 1 for all laws except Gompertz.
        for law in Growth::ALL {
            let k = 8.0;
            let x = 1e-9;
            let numeric = x * law.dg(x, k) + law.g(x, k);
            match law.beta(k) {
                Some(beta) => assert_relative_eq!(numeric, beta, epsilon = 1e-6),
                None => {
                    // Gompertz diverges logarithmically as x -> 0+.
                    let closer = 1e-18 * Growth::Gompertz.g(1e-18, k) / 1e-18;
                    assert!(numeric > 5.0 && closer > numeric);
                }
            }
        }
    }
}
