//! Competition-matrix analysis for the resource + n consumers model.
//!
//! Covers the balance vector, the resource equilibrium through the scalar
//! function h, the sensitivity of the resource level to competition
//! coefficients, the global-stability certificate based on the symmetrized
//! matrix L_c(M), and the invasion inequality for a third consumer.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Competition, OdeSystem};

/// Solve M alpha = q (the competitive balance vector). Errors on singular M;
/// the solution residual is verified to 1e-10.
pub fn balance_vector(m: &DMatrix<f64>, q: &[f64]) -> Result<Vec<f64>> {
    let qv = DVector::from_row_slice(q);
    let lu = m.clone().lu();
    let alpha = lu
        .solve(&qv)
        .ok_or_else(|| Error::InvalidScenario("competition matrix is singular".into()))?;
    let res = (m * &alpha - &qv).amax();
    if res > 1e-10 * (1.0 + qv.amax()) {
        return Err(Error::Numeric(format!(
            "balance-vector solve residual {res:.3e}"
        )));
    }
    Ok(alpha.iter().cloned().collect())
}

fn matrix_of(model: &Competition) -> DMatrix<f64> {
    let n = model.n_consumers();
    DMatrix::from_fn(n, n, |i, j| model.m[i][j])
}

/// Consumer levels y(x) = M^{-1}(x kappa - mu) at resource level x, where
/// kappa_i = c_i q_i.
fn consumer_levels(model: &Competition, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, x: f64) -> Option<DVector<f64>> {
    let n = model.n_consumers();
    let rhs = DVector::from_fn(n, |i, _| x * model.c[i] * model.q[i] - model.mu[i]);
    lu.solve(&rhs)
}

/// The scalar equilibrium function h(x) = q M^{-1}(x kappa - mu) - r g(x);
/// its roots in (0, K) are the resource coordinates of equilibria with all
/// consumers on their isoclines.
fn h_eval(model: &Competition, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, x: f64) -> Option<f64> {
    let y = consumer_levels(model, lu, x)?;
    let qy: f64 = model.q.iter().zip(y.iter()).map(|(q, y)| q * y).sum();
    Some(qy - model.r * model.growth.g(x, model.k))
}

/// h'(x) = q M^{-1} kappa - r g'(x).
fn h_prime(model: &Competition, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, x: f64) -> Option<f64> {
    let n = model.n_consumers();
    let kappa = DVector::from_fn(n, |i, _| model.c[i] * model.q[i]);
    let v = lu.solve(&kappa)?;
    let qv: f64 = model.q.iter().zip(v.iter()).map(|(q, v)| q * v).sum();
    Some(qv - model.r * model.growth.dg(x, model.k))
}

/// An equilibrium candidate with every consumer on its isocline.
#[derive(Debug, Clone, Serialize)]
pub struct ResourceEquilibrium {
    pub x: f64,
    pub y: Vec<f64>,
    /// All consumer levels strictly positive.
    pub y_positive: bool,
}

/// All roots of h on (0, K), each with its consumer levels and positivity
/// flag, ascending in x. Errors on singular M or when no root exists.
pub fn resource_equilibria(model: &Competition) -> Result<Vec<ResourceEquilibrium>> {
    let m = matrix_of(model);
    let lu = m.lu();
    if !lu.is_invertible() {
        return Err(Error::InvalidScenario("competition matrix is singular".into()));
    }
    // Scan for sign changes; the lower end is kept away from 0 because the
    // Gompertz law diverges there (h -> -infinity, no root is lost).
    let lo = 1e-9 * model.k;
    let n_scan = 2000;
    let mut roots: Vec<f64> = Vec::new();
    let xs: Vec<f64> = (0..=n_scan)
        .map(|i| lo + (model.k - lo) * i as f64 / n_scan as f64)
        .collect();
    let hs: Vec<f64> = xs
        .iter()
        .map(|&x| h_eval(model, &lu, x).unwrap_or(f64::NAN))
        .collect();
    for i in 0..n_scan {
        let (ha, hb) = (hs[i], hs[i + 1]);
        if !ha.is_finite() || !hb.is_finite() {
            continue;
        }
        if ha == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if ha * hb < 0.0 {
            // Bisection to locate, Newton to polish.
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            let mut fa = ha;
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                let fm = h_eval(model, &lu, mid).unwrap();
                if fa * fm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            let mut x = 0.5 * (a + b);
            for _ in 0..5 {
                let f = h_eval(model, &lu, x).unwrap();
                let d = h_prime(model, &lu, x).unwrap();
                if d.abs() < 1e-14 {
                    break;
                }
                x -= f / d;
            }
            if x.is_finite() && x > 0.0 && x < model.k {
                roots.push(x);
            }
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * model.k);
    if roots.is_empty() {
        return Err(Error::Precondition("no positive equilibrium".into()));
    }
    Ok(roots
        .into_iter()
        .map(|x| {
            let y = consumer_levels(model, &lu, x).unwrap();
            let y_positive = y.iter().all(|&v| v > 0.0);
            ResourceEquilibrium {
                x,
                y: y.iter().cloned().collect(),
                y_positive,
            }
        })
        .collect())
}

/// The positive equilibrium (unique root of h with all consumers positive).
/// Errors when none exists.
pub fn resource_equilibrium(model: &Competition) -> Result<ResourceEquilibrium> {
    let all = resource_equilibria(model)?;
    all.into_iter()
        .find(|e| e.y_positive)
        .ok_or_else(|| Error::Precondition("no positive equilibrium".into()))
}

/// Sensitivity of the resource equilibrium to the competition coefficient
/// m_ij: d x* / d m_ij = (q M^{-1})_i y_j* / h'(x*).
///
/// Note the row solve: the vector multiplying y_j* solves M^T v = q, which
/// coincides with the balance vector only for symmetric M.
pub fn sensitivity(model: &Competition, i: usize, j: usize) -> Result<f64> {
    let n = model.n_consumers();
    if i >= n || j >= n {
        return Err(Error::InvalidScenario(format!(
            "index ({i},{j}) out of range for {n} consumers"
        )));
    }
    let eq = resource_equilibrium(model)?;
    let m = matrix_of(model);
    let lu = m.clone().lu();
    let hp = h_prime(model, &lu, eq.x).unwrap();
    if hp.abs() < 1e-12 {
        return Err(Error::Numeric("h'(x*) vanishes; sensitivity degenerate".into()));
    }
    let q = DVector::from_fn(n, |r, _| model.q[r]);
    let v = m
        .transpose()
        .lu()
        .solve(&q)
        .ok_or_else(|| Error::InvalidScenario("competition matrix is singular".into()))?;
    Ok(v[i] * eq.y[j] / hp)
}

/// The symmetrized competition matrix L_c(M): diagonal m_ii / c_i,
/// off-diagonal (m_ij / c_i + m_ji / c_j) / 2.
pub fn lc_matrix(c: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            m[(i, i)] / c[i]
        } else {
            0.5 * (m[(i, j)] / c[i] + m[(j, i)] / c[j])
        }
    })
}

/// Positive-definiteness certificate for L_c(M); PD implies the positive
/// equilibrium is a global attractor of the interior.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityCertificate {
    pub lc: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub positive_definite: bool,
}

/// Build L_c(M) and test positive definiteness by symmetric eigensolve.
pub fn global_stability_certificate(model: &Competition) -> StabilityCertificate {
    let lc = lc_matrix(&model.c, &matrix_of(model));
    let eig = lc.clone().symmetric_eigen();
    let min_eigenvalue = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    StabilityCertificate {
        lc: (0..lc.nrows())
            .map(|i| (0..lc.ncols()).map(|j| lc[(i, j)]).collect())
            .collect(),
        min_eigenvalue,
        positive_definite: min_eigenvalue > 0.0,
    }
}

/// The n = 2 AM-GM shortcut: L_c is PD iff
/// (c2 m12 + c1 m21) / 2 < sqrt(c1 m11 c2 m22).
pub fn cor_2_20_holds(model: &Competition) -> Option<bool> {
    if model.n_consumers() != 2 {
        return None;
    }
    let (c1, c2) = (model.c[0], model.c[1]);
    let m = &model.m;
    Some(0.5 * (c2 * m[0][1] + c1 * m[1][0]) < (c1 * m[0][0] * c2 * m[1][1]).sqrt())
}

/// Parameters of a prospective third consumer.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Newcomer {
    pub c3: f64,
    pub m13: f64,
    pub m31: f64,
    pub m23: f64,
    pub m32: f64,
    pub m33: f64,
}

/// Invasion inequality for a third consumer: with the 2x2 community PD-stable
/// (Cor 2.20 precondition), the enlarged L_c stays PD iff
///
/// 4 m11 m22 / (c1 c2) - w^2 >
///     (c3 / m33) ((m11/c1) v^2 + (m22/c2) u^2 - u v w),
///
/// where u = m13/c1 + m31/c3, v = m23/c2 + m32/c3, w = m12/c1 + m21/c2.
pub fn third_consumer_invasion(model: &Competition, nc: &Newcomer) -> Result<bool> {
    if model.n_consumers() != 2 {
        return Err(Error::InvalidScenario(
            "invasion inequality applies to a two-consumer base community".into(),
        ));
    }
    if cor_2_20_holds(model) != Some(true) {
        return Err(Error::Precondition(
            "base community does not satisfy the n=2 stability shortcut".into(),
        ));
    }
    let (c1, c2, c3) = (model.c[0], model.c[1], nc.c3);
    let m = &model.m;
    let u = nc.m13 / c1 + nc.m31 / c3;
    let v = nc.m23 / c2 + nc.m32 / c3;
    let w = m[0][1] / c1 + m[1][0] / c2;
    let lhs = 4.0 * m[0][0] * m[1][1] / (c1 * c2) - w * w;
    let rhs = (c3 / nc.m33)
        * ((m[0][0] / c1) * v * v + (m[1][1] / c2) * u * u - u * v * w);
    Ok(lhs > rhs)
}

/// Pointwise surrogate of the coexistence-region membership: the bundle of
/// conclusions (positive equilibrium, positive sensitivities, PD certificate)
/// all hold at this model.
#[derive(Debug, Clone, Serialize)]
pub struct Membership {
    pub member: bool,
    /// First failed condition, when not a member.
    pub reason: Option<String>,
}

/// Test coexistence-region membership at the given model.
pub fn coexistence_membership(model: &Competition) -> Membership {
    let fail = |reason: String| Membership {
        member: false,
        reason: Some(reason),
    };
    let eq = match resource_equilibrium(model) {
        Ok(eq) => eq,
        Err(e) => return fail(format!("no positive equilibrium: {e}")),
    };
    if !eq.y_positive {
        return fail("consumer levels not all positive".into());
    }
    let n = model.n_consumers();
    for i in 0..n {
        for j in 0..n {
            match sensitivity(model, i, j) {
                Ok(s) if s > 0.0 => {}
                Ok(s) => return fail(format!("sensitivity ({i},{j}) = {s} not positive")),
                Err(e) => return fail(format!("sensitivity ({i},{j}) failed: {e}")),
            }
        }
    }
    let cert = global_stability_certificate(model);
    if !cert.positive_definite {
        return fail(format!(
            "L_c not positive definite (min eigenvalue {})",
            cert.min_eigenvalue
        ));
    }
    Membership {
        member: true,
        reason: None,
    }
}

/// Gradient of the Lyapunov function of the global-stability theorem
/// (weights 1 for the resource and 1/c_i for the consumers), dotted with the
/// vector field: dV/dt at the given state.
pub fn lyapunov_derivative(model: &Competition, eq: &ResourceEquilibrium, state: &[f64]) -> f64 {
    let n = model.n_consumers();
    let mut f = vec![0.0; n + 1];
    model.eval(state, &mut f);
    let mut dv = (1.0 - eq.x / state[0]) * f[0];
    for i in 0..n {
        dv += (1.0 - eq.y[i] / state[i + 1]) * f[i + 1] / model.c[i];
    }
    dv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::Growth;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// The two-consumer logistic scenario studied in the sensitivity section.
    fn scenario(m12: f64, m21: f64) -> Competition {
        Competition {
            growth: Growth::Logistic,
            r: 3.0,
            k: 8.0,
            c: vec![1.0, 1.2],
            q: vec![4.0, 2.0],
            mu: vec![3.0, 1.0],
            m: vec![vec![1.5, m12], vec![m21, 2.0]],
        }
    }

    /// Closed-form x* of the scenario.
    fn scenario_xstar(m12: f64, m21: f64) -> f64 {
        8.0 * (36.0 - 4.0 * m12 - 6.0 * m21 - 3.0 * m12 * m21)
            / (322.6 - 76.8 * m12 - 64.0 * m21 - 3.0 * m12 * m21)
    }

    #[test]
    fn balance_vector_cases() {
        let id = DMatrix::identity(3, 3);
        let alpha = balance_vector(&id, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(alpha, vec![1.0, 2.0, 3.0]);

        let diag = DMatrix::from_diagonal(&DVector::from_row_slice(&[2.0, 4.0]));
        let alpha = balance_vector(&diag, &[4.0, 2.0]).unwrap();
        assert!(alpha.iter().all(|&a| a > 0.0));

        let m = DMatrix::from_row_slice(2, 2, &[1.5, 0.25, 1.0, 2.0]);
        let q = [4.0, 2.0];
        let alpha = balance_vector(&m, &q).unwrap();
        let av = DVector::from_row_slice(&alpha);
        assert!((m * av - DVector::from_row_slice(&q)).amax() < 1e-12);

        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(balance_vector(&singular, &q).is_err());
    }

    #[test]
    fn resource_equilibrium_closed_form() {
        let eq = resource_equilibrium(&scenario(0.25, 1.0)).unwrap();
        assert_relative_eq!(eq.x, scenario_xstar(0.25, 1.0), epsilon = 1e-9);
        assert!((eq.x - 0.9470).abs() < 1e-4);
        assert!((eq.y[0] - 0.4574).abs() < 1e-4, "{:?}", eq.y);
        assert!((eq.y[1] - 0.4077).abs() < 1e-4, "{:?}", eq.y);

        let eq = resource_equilibrium(&scenario(0.25, 2.0)).unwrap();
        assert!((eq.x - 0.9891).abs() < 1e-4);
        assert!((eq.y[0] - 0.6277).abs() < 1e-4);
        assert!((eq.y[1] - 0.0592).abs() < 1e-4);

        // Richards growth with the strong m21 has no positive equilibrium.
        let mut richards = scenario(0.25, 2.0);
        richards.growth = Growth::Richards;
        assert!(resource_equilibrium(&richards).is_err());
    }

    #[test]
    fn sensitivity_positive_for_diagonal() {
        let model = Competition {
            m: vec![vec![1.5, 0.0], vec![0.0, 2.0]],
            ..scenario(0.0, 0.0)
        };
        for i in 0..2 {
            for j in 0..2 {
                assert!(sensitivity(&model, i, j).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn sensitivity_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut tested = 0;
        while tested < 50 {
            let m12 = rng.gen_range(0.0..1.5);
            let m21 = rng.gen_range(0.0..1.5);
            let model = scenario(m12, m21);
            if resource_equilibrium(&model).is_err() {
                continue;
            }
            let (i, j) = (rng.gen_range(0..2), rng.gen_range(0..2));
            let s = sensitivity(&model, i, j).unwrap();
            let delta = 1e-5;
            let mut plus = model.clone();
            plus.m[i][j] += delta;
            let mut minus = model.clone();
            minus.m[i][j] -= delta;
            let (xp, xm) = match (resource_equilibrium(&plus), resource_equilibrium(&minus)) {
                (Ok(p), Ok(m)) => (p.x, m.x),
                _ => continue,
            };
            let fd = (xp - xm) / (2.0 * delta);
            assert!(
                (s - fd).abs() <= 1e-4 * fd.abs().max(1e-6),
                "closed form {s} vs fd {fd} at m=({m12},{m21}), ({i},{j})"
            );
            tested += 1;
        }
    }

    #[test]
    fn sensitivity_positivity_region() {
        // Both off-diagonal partials are positive exactly on
        // [0, 0.75) x [0, 2.1183) within the existence region.
        // (m12 m21 = 3 makes M singular; the grid avoids those pairs.)
        for &m12 in &[0.1, 0.5, 0.74, 0.8, 1.2, 2.0] {
            for &m21 in &[0.5, 1.4, 2.0] {
                if (3.0 - m12 * m21 as f64).abs() < 0.2 {
                    continue;
                }
                let model = scenario(m12, m21);
                let s12 = sensitivity(&model, 0, 1).unwrap();
                let s21 = sensitivity(&model, 1, 0).unwrap();
                let expected = m12 < 0.75 && m21 < 2.1183;
                assert_eq!(
                    s12 > 0.0 && s21 > 0.0,
                    expected,
                    "m=({m12},{m21}): s12={s12}, s21={s21}"
                );
            }
        }
    }

    #[test]
    fn stability_certificate_matches_shortcut() {
        // PD iff (1.2 m12 + m21)/2 < sqrt(3.6) for this scenario.
        for &m12 in &[0.0, 0.25, 1.0, 2.0, 3.0] {
            for &m21 in &[0.0, 1.0, 2.0, 3.5] {
                let model = scenario(m12, m21);
                let cert = global_stability_certificate(&model);
                let shortcut = 0.5 * (1.2 * m12 + m21) < 3.6f64.sqrt();
                assert_eq!(cert.positive_definite, shortcut, "m=({m12},{m21})");
                assert_eq!(cor_2_20_holds(&model), Some(shortcut));
            }
        }
        // The reference point is comfortably PD: 0.65 < 1.8974.
        assert!(global_stability_certificate(&scenario(0.25, 1.0)).positive_definite);

        // Diagonal M with positive diagonal is always PD.
        let diag = Competition {
            m: vec![vec![1.5, 0.0], vec![0.0, 2.0]],
            ..scenario(0.0, 0.0)
        };
        assert!(global_stability_certificate(&diag).positive_definite);
    }

    #[test]
    fn pd_implies_positive_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = vec![
                vec![rng.gen_range(0.1..3.0), rng.gen_range(0.0..3.0)],
                vec![rng.gen_range(0.0..3.0), rng.gen_range(0.1..3.0)],
            ];
            let model = Competition {
                m: m.clone(),
                ..scenario(0.0, 0.0)
            };
            if global_stability_certificate(&model).positive_definite {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                assert!(det > 0.0, "{m:?}");
                // Cor 2.20 also implies the geometric-mean consequence.
                assert!(m[0][1] * m[1][0] < m[0][0] * m[1][1] || m[0][1] * m[1][0] == 0.0);
            }
        }
    }

    #[test]
    fn third_consumer_inequality() {
        let base = scenario(0.25, 1.0);

        // Decoupled newcomer: inequality reduces to the (positive) 2x2 part.
        let decoupled = Newcomer {
            c3: 1.0,
            m13: 0.0,
            m31: 0.0,
            m23: 0.0,
            m32: 0.0,
            m33: 0.5,
        };
        assert!(third_consumer_invasion(&base, &decoupled).unwrap());

        // Strong intraspecific competition of the newcomer always admits it.
        let strong_self = Newcomer {
            c3: 1.0,
            m13: 0.5,
            m31: 0.5,
            m23: 0.5,
            m32: 0.5,
            m33: 500.0,
        };
        assert!(third_consumer_invasion(&base, &strong_self).unwrap());

        // Unstable base community violates the precondition.
        assert!(third_consumer_invasion(&scenario(3.0, 3.0), &decoupled).is_err());
    }

    #[test]
    fn third_consumer_inequality_equals_pd_of_enlarged_lc() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut tested = 0;
        while tested < 100 {
            let m12 = rng.gen_range(0.0..1.2);
            let m21 = rng.gen_range(0.0..1.2);
            let base = scenario(m12, m21);
            if cor_2_20_holds(&base) != Some(true) {
                continue;
            }
            let nc = Newcomer {
                c3: rng.gen_range(0.2..2.0),
                m13: rng.gen_range(0.0..1.5),
                m31: rng.gen_range(0.0..1.5),
                m23: rng.gen_range(0.0..1.5),
                m32: rng.gen_range(0.0..1.5),
                m33: rng.gen_range(0.05..2.0),
            };
            let verdict = third_consumer_invasion(&base, &nc).unwrap();

            // Oracle: PD of the full 3x3 L_c. Given the PD 2x2 leading block,
            // PD is equivalent to det > 0 (Sylvester), which is what the
            // inequality encodes.
            let c = vec![base.c[0], base.c[1], nc.c3];
            let m3 = DMatrix::from_row_slice(
                3,
                3,
                &[
                    base.m[0][0],
                    base.m[0][1],
                    nc.m13,
                    base.m[1][0],
                    base.m[1][1],
                    nc.m23,
                    nc.m31,
                    nc.m32,
                    nc.m33,
                ],
            );
            let lc = lc_matrix(&c, &m3);
            let min_eig = lc
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert_eq!(verdict, min_eig > 0.0, "m=({m12},{m21}), {nc:?}");
            tested += 1;
        }
    }

    #[test]
    fn coexistence_membership_cases() {
        // Diagonal stable community: member.
        let diag = Competition {
            m: vec![vec![1.5, 0.0], vec![0.0, 2.0]],
            ..scenario(0.0, 0.0)
        };
        assert!(coexistence_membership(&diag).member);

        // Reference scenario inside all three parameter regions: member.
        assert!(coexistence_membership(&scenario(0.25, 1.0)).member);

        // Singular matrix: not a member, with a reason.
        let singular = Competition {
            m: vec![vec![1.0, 2.0], vec![1.0, 2.0]],
            ..scenario(0.0, 0.0)
        };
        let res = coexistence_membership(&singular);
        assert!(!res.member && res.reason.is_some());

        // Outside the sensitivity-positivity region: not a member.
        assert!(!coexistence_membership(&scenario(1.5, 0.5)).member);
    }

    #[test]
    fn lyapunov_derivative_nonpositive_under_pd() {
        let model = scenario(0.25, 1.0);
        let eq = resource_equilibrium(&model).unwrap();
        assert!(global_stability_certificate(&model).positive_definite);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let state = [
                rng.gen_range(0.05..3.0),
                rng.gen_range(0.05..3.0),
                rng.gen_range(0.05..3.0),
            ];
            let dv = lyapunov_derivative(&model, &eq, &state);
            assert!(dv <= 1e-12, "dV/dt = {dv} at {state:?}");
        }
        // Zero exactly at the equilibrium.
        let mut at_eq = vec![eq.x];
        at_eq.extend(eq.y.iter());
        assert!(lyapunov_derivative(&model, &eq, &at_eq).abs() < 1e-12);
    }
}
