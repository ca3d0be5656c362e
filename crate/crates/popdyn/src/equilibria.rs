//! Location and classification of equilibria.
//!
//! Boundary equilibria are found face by face (each face of the positive
//! orthant restricts the system to a lower-dimensional subproblem), interior
//! equilibria by grid-seeded damped Newton iteration. Classification uses the
//! eigenvalues of the analytic Jacobian together with Routh-Hurwitz margins
//! for three-dimensional systems. The module also provides the closed-form
//! existence threshold for the two-predator model, the isocline hyperbola
//! geometry of the two-prey model, and the cubic analysis of Bazykin's model
//! (root structure, Cardano cross-check and the triple-equilibrium window).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Bazykin, Competition, OdeSystem, TwoPredator, TwoPrey};

/// Default threshold on |Re lambda| below which an equilibrium is reported as
/// non-hyperbolic.
pub const DEFAULT_HYPERBOLICITY_EPS: f64 = 1e-6;

/// Positions closer than this (max-norm) are merged as duplicates.
const DEDUP_TOL: f64 = 1e-7;

/// A coordinate must exceed this to count as interior on its face. Along a
/// face with a non-hyperbolic equilibrium on its rim, the Newton iteration
/// can stall at pseudo-roots with one coordinate of order 1e-6; those belong
/// to the rim equilibrium and are rejected here.
const INTERIOR_TOL: f64 = 1e-5;

/// Break-even ("energy efficiency") thresholds, one per consumer.
///
/// `None` marks a consumer whose net conversion is non-positive at every prey
/// density, so it cannot persist regardless of the resource level.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyThresholds {
    pub values: Vec<Option<f64>>,
}

impl EnergyThresholds {
    fn from_ratios(pairs: &[(f64, f64)]) -> Self {
        // Each pair is (mu, denominator); the threshold is mu / denominator
        // when the denominator is positive.
        EnergyThresholds {
            values: pairs
                .iter()
                .map(|&(mu, den)| if den > 0.0 { Some(mu / den) } else { None })
                .collect(),
        }
    }

    /// Thresholds `x_i^b = mu_i / (c_i q_i)` of the competition model.
    pub fn of_competition(m: &Competition) -> Self {
        let pairs: Vec<_> = (0..m.n_consumers())
            .map(|i| (m.mu[i], m.c[i] * m.q[i]))
            .collect();
        Self::from_ratios(&pairs)
    }

    /// Thresholds `y^b`, `z^b` of the two-predator model.
    pub fn of_two_predator(m: &TwoPredator) -> Self {
        Self::from_ratios(&[
            (m.mu1, m.c1 * m.q1 - m.a1 * m.mu1),
            (m.mu2, m.c2 * m.q2 - m.a2 * m.mu2),
        ])
    }

    /// Thresholds `x^b`, `y^b` of the two-prey model.
    pub fn of_two_prey(m: &TwoPrey) -> Self {
        Self::from_ratios(&[
            (m.mu, m.c1 * m.q1 - m.a1 * m.mu),
            (m.mu, m.c2 * m.q2 - m.a2 * m.mu),
        ])
    }

    /// Threshold `y^b` of Bazykin's model.
    pub fn of_bazykin(m: &Bazykin) -> Self {
        Self::from_ratios(&[(m.mu, m.c * m.q - m.a * m.mu)])
    }
}

/// Topological type of an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EqKind {
    Node,
    Focus,
    Saddle,
    NonHyperbolic,
}

/// Tri-state stability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Undecided,
}

/// A located equilibrium together with its linearization data.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub location: Vec<f64>,
    /// `true` where the coordinate is (exactly) zero.
    pub boundary_pattern: Vec<bool>,
    /// Eigenvalues of the Jacobian as (re, im) pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    pub kind: EqKind,
    pub stability: Stability,
    /// Routh-Hurwitz margins (Omega0, Omega2, Omega2*Omega1 - Omega0) of the
    /// characteristic cubic, for three-dimensional systems only.
    pub routh_hurwitz: Option<(f64, f64, f64)>,
}

impl EquilibriumReport {
    /// True when no coordinate vanishes.
    pub fn is_interior(&self) -> bool {
        self.boundary_pattern.iter().all(|&z| !z)
    }
}

/// Classify the equilibrium of `sys` located at `point`.
///
/// Errors if `point` is not an equilibrium (vector-field residual above
/// 1e-6). `eps` is the hyperbolicity threshold on |Re lambda|.
pub fn classify<S: OdeSystem>(sys: &S, point: &[f64], eps: f64) -> Result<EquilibriumReport> {
    let mut f = vec![0.0; sys.dim()];
    sys.eval(point, &mut f);
    let scale = 1.0 + point.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let residual = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if residual > 1e-6 * scale {
        return Err(Error::Precondition(format!(
            "point {point:?} is not an equilibrium (residual {residual:.3e})"
        )));
    }
    Ok(report_at(sys, point, eps))
}

/// Build a report at a point already known to be an equilibrium.
fn report_at<S: OdeSystem>(sys: &S, point: &[f64], eps: f64) -> EquilibriumReport {
    let j = sys.jacobian(point);
    let eig = j.clone().complex_eigenvalues();
    let eigenvalues: Vec<(f64, f64)> = eig.iter().map(|l| (l.re, l.im)).collect();

    let min_abs_re = eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &(re, _)| a.min(re.abs()));
    let has_pos = eigenvalues.iter().any(|&(re, _)| re > eps);
    let has_neg = eigenvalues.iter().any(|&(re, _)| re < -eps);
    let has_imag = eigenvalues.iter().any(|&(_, im)| im.abs() > eps);

    let kind = if min_abs_re < eps {
        EqKind::NonHyperbolic
    } else if has_pos && has_neg {
        EqKind::Saddle
    } else if has_imag {
        EqKind::Focus
    } else {
        EqKind::Node
    };
    let stability = if has_pos {
        Stability::Unstable
    } else if min_abs_re >= eps {
        Stability::Stable
    } else {
        Stability::Undecided
    };

    let routh_hurwitz = (sys.dim() == 3).then(|| {
        // Characteristic cubic l^3 + O2 l^2 + O1 l + O0 of -J's companion
        // convention: O2 = -tr J, O1 = sum of principal 2x2 minors, O0 = -det.
        let tr = j[(0, 0)] + j[(1, 1)] + j[(2, 2)];
        let minors = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)]
            + j[(0, 0)] * j[(2, 2)]
            - j[(0, 2)] * j[(2, 0)]
            + j[(1, 1)] * j[(2, 2)]
            - j[(1, 2)] * j[(2, 1)];
        let det = j.determinant();
        let (o2, o1, o0) = (-tr, minors, -det);
        (o0, o2, o2 * o1 - o0)
    });

    EquilibriumReport {
        location: point.to_vec(),
        boundary_pattern: point.iter().map(|&v| v == 0.0).collect(),
        eigenvalues,
        kind,
        stability,
        routh_hurwitz,
    }
}

/// Damped Newton iteration on the coordinates listed in `free`, holding every
/// other coordinate at exactly zero. Returns the converged state or `None`.
fn newton_masked<S: OdeSystem>(sys: &S, x0: &[f64], free: &[usize]) -> Option<Vec<f64>> {
    let dim = sys.dim();
    let nf = free.len();
    let mut x = vec![0.0; dim];
    for (slot, &i) in free.iter().enumerate() {
        let _ = slot;
        x[i] = x0[i];
    }
    let mut f = vec![0.0; dim];
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, w| a.max(w.abs()));

    sys.eval(&x, &mut f);
    let mut fnorm = norm(&f);
    for _ in 0..50 {
        if !fnorm.is_finite() {
            return None;
        }
        if fnorm < 1e-12 {
            return Some(x);
        }
        let j = sys.jacobian(&x);
        let mut jf = DMatrix::zeros(nf, nf);
        let mut rhs = nalgebra::DVector::zeros(nf);
        for (r, &i) in free.iter().enumerate() {
            rhs[r] = -f[i];
            for (c, &k) in free.iter().enumerate() {
                jf[(r, c)] = j[(i, k)];
            }
        }
        let step = jf.lu().solve(&rhs)?;
        // Backtracking line search on the residual norm.
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..8 {
            let mut xt = x.clone();
            for (r, &i) in free.iter().enumerate() {
                xt[i] += scale * step[r];
            }
            sys.eval(&xt, &mut f);
            let fn_t = norm(&f);
            if fn_t.is_finite() && fn_t < fnorm {
                x = xt;
                fnorm = fn_t;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (fnorm < 1e-12).then_some(x)
}

/// Grid-seeded search for equilibria with the coordinates in `free` strictly
/// positive and the rest fixed at zero. `upper` bounds the search box.
fn search_face<S: OdeSystem>(
    sys: &S,
    free: &[usize],
    upper: &[f64],
    grid: usize,
) -> Vec<Vec<f64>> {
    let dim = sys.dim();
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut counters = vec![0usize; free.len()];
    loop {
        let mut seed = vec![0.0; dim];
        for (slot, &i) in free.iter().enumerate() {
            seed[i] = (counters[slot] as f64 + 0.5) / grid as f64 * upper[i];
        }
        if let Some(x) = newton_masked(sys, &seed, free) {
            let inside = free
                .iter()
                .all(|&i| x[i] > INTERIOR_TOL && x[i] <= upper[i] * (1.0 + 1e-9));
            let dup = found
                .iter()
                .any(|p| p.iter().zip(&x).all(|(a, b)| (a - b).abs() < DEDUP_TOL));
            if inside && !dup {
                found.push(x);
            }
        }
        // Advance the mixed-radix counter over the grid.
        let mut slot = 0;
        loop {
            if slot == counters.len() {
                found.sort_by(|a, b| a.partial_cmp(b).unwrap());
                return found;
            }
            counters[slot] += 1;
            if counters[slot] < grid {
                break;
            }
            counters[slot] = 0;
            slot += 1;
        }
    }
}

/// Per-family search box used to seed equilibrium hunts.
pub trait StateBox {
    /// Upper bound of the box (component-wise) that contains all equilibria.
    fn state_box(&self) -> Vec<f64>;
}

impl StateBox for Competition {
    fn state_box(&self) -> Vec<f64> {
        let mut b = vec![1.5 * self.k];
        for i in 0..self.n_consumers() {
            let cap = self.c[i] * self.q[i] * 1.5 * self.k / self.m[i][i];
            b.push(cap.max(1.0) * 1.5);
        }
        b
    }
}

impl StateBox for TwoPredator {
    fn state_box(&self) -> Vec<f64> {
        let gain1 = self.c1 * self.q1 * self.k / (1.0 + self.a1 * self.k);
        let gain2 = self.c2 * self.q2 * self.k / (1.0 + self.a2 * self.k);
        vec![
            1.5 * self.k,
            (((gain1 - self.mu1) / self.m1).max(1.0)) * 1.5,
            (((gain2 - self.mu2) / self.m2).max(1.0)) * 1.5,
        ]
    }
}

impl StateBox for TwoPrey {
    fn state_box(&self) -> Vec<f64> {
        let gain = self.c1 * self.q1 * self.k1 / (1.0 + self.a1 * self.k1)
            + self.c2 * self.q2 * self.k2 / (1.0 + self.a2 * self.k2);
        vec![
            1.5 * self.k1,
            1.5 * self.k2,
            (((gain - self.mu) / self.m).max(1.0)) * 1.5,
        ]
    }
}

impl StateBox for Bazykin {
    fn state_box(&self) -> Vec<f64> {
        // The prey isocline peaks at the parabola vertex (when interior).
        let vertex = ((self.k - 1.0 / self.a) / 2.0).clamp(0.0, self.k);
        let ymax = self
            .prey_isocline(vertex)
            .max(self.prey_isocline(0.0))
            .max(1.0);
        vec![1.5 * self.k, 1.5 * ymax]
    }
}

/// All equilibria with at least one zero coordinate, classified and sorted
/// lexicographically by location.
pub fn boundary_equilibria<S: OdeSystem + StateBox>(sys: &S) -> Vec<EquilibriumReport> {
    let dim = sys.dim();
    let upper = sys.state_box();
    let mut reports: Vec<EquilibriumReport> = Vec::new();

    // The origin is always an equilibrium of these models.
    let origin = vec![0.0; dim];
    let mut f = vec![0.0; dim];
    sys.eval(&origin, &mut f);
    if f.iter().all(|v| v.abs() < 1e-12) {
        reports.push(report_at(sys, &origin, DEFAULT_HYPERBOLICITY_EPS));
    }

    // Every proper non-empty subset of coordinates spans one face.
    for mask in 1..(1u32 << dim) - 1 {
        let free: Vec<usize> = (0..dim).filter(|i| mask & (1 << i) != 0).collect();
        let grid = match free.len() {
            1 => 64,
            2 => 24,
            _ => 10,
        };
        for x in search_face(sys, &free, &upper, grid) {
            let dup = reports.iter().any(|r| {
                r.location
                    .iter()
                    .zip(&x)
                    .all(|(a, b)| (a - b).abs() < DEDUP_TOL)
            });
            if !dup {
                reports.push(report_at(sys, &x, DEFAULT_HYPERBOLICITY_EPS));
            }
        }
    }
    reports.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
    reports
}

/// All interior (strictly positive) equilibria, classified and sorted.
///
/// `grid_density` controls the seeding grid per dimension; at least 8.
pub fn positive_equilibria<S: OdeSystem + StateBox>(
    sys: &S,
    grid_density: usize,
) -> Result<Vec<EquilibriumReport>> {
    if grid_density < 8 {
        return Err(Error::InvalidScenario(format!(
            "grid_density must be at least 8, got {grid_density}"
        )));
    }
    let dim = sys.dim();
    let upper = sys.state_box();
    let free: Vec<usize> = (0..dim).collect();
    let mut reports: Vec<EquilibriumReport> = search_face(sys, &free, &upper, grid_density)
        .into_iter()
        .map(|x| report_at(sys, &x, DEFAULT_HYPERBOLICITY_EPS))
        .collect();
    reports.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
    Ok(reports)
}

/// The two algebraic forms of the positive-equilibrium existence threshold of
/// the two-predator model. The system has a positive equilibrium iff
/// `r > threshold`. Predators are relabeled internally so that the
/// weaker-ordering precondition `0 < y^b < z^b < K` holds.
pub fn ch3_existence_threshold_forms(m: &TwoPredator) -> Result<(f64, f64)> {
    let thresholds = EnergyThresholds::of_two_predator(m);
    let (yb, zb) = match (thresholds.values[0], thresholds.values[1]) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Precondition(
                "a predator cannot persist at any prey density (c q - a mu <= 0)".into(),
            ))
        }
    };
    // The predator roles are symmetric; relabel so predator 1 is the more
    // efficient one (smaller break-even level).
    let mut s = *m;
    let (yb, zb) = if yb <= zb {
        (yb, zb)
    } else {
        std::mem::swap(&mut s.q1, &mut s.q2);
        std::mem::swap(&mut s.a1, &mut s.a2);
        std::mem::swap(&mut s.c1, &mut s.c2);
        std::mem::swap(&mut s.mu1, &mut s.mu2);
        std::mem::swap(&mut s.m1, &mut s.m2);
        (zb, yb)
    };
    if !(yb > 0.0 && yb < zb && zb < s.k) {
        return Err(Error::Precondition(format!(
            "threshold requires 0 < y^b < z^b < K, got y^b={yb}, z^b={zb}, K={}",
            s.k
        )));
    }
    let d2 = s.c2 * s.q2 - s.a2 * s.mu2;
    let form_a = (d2 / (s.a1 * s.mu2 - s.a2 * s.mu2 + s.c2 * s.q2)).powi(2)
        * (s.k * s.q1 * (s.mu2 * (s.c1 * s.q1 - s.a1 * s.mu1) - s.mu1 * d2))
        / (s.m1 * (s.k * d2 - s.mu2));
    let form_b = (1.0 / (s.a1 * zb + 1.0)).powi(2) * s.k * s.q1 * s.mu1 * (zb - yb)
        / (s.m1 * yb * (s.k - zb));
    Ok((form_a, form_b))
}

/// Existence threshold for a positive equilibrium of the two-predator model.
pub fn ch3_existence_threshold(m: &TwoPredator) -> Result<f64> {
    let (a, b) = ch3_existence_threshold_forms(m)?;
    if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
        return Err(Error::Numeric(format!(
            "threshold forms disagree: {a} vs {b}"
        )));
    }
    Ok(a)
}

/// Which of the three generic hyperbola layouts is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperbolaCase {
    /// Only the X-axis intersection exists.
    NoYIntersection,
    /// The two Y-axis points lie on the same branch.
    P0P2SameBranch,
    /// The lower Y-axis point shares a branch with the X-axis point.
    P0P1SameBranch,
}

/// Geometry of the prey-isocline hyperbola of the two-prey model.
#[derive(Debug, Clone, Serialize)]
pub struct HyperbolaGeometry {
    /// Joint prey equilibrium `P = (x3, y3)` (the predator-free interior
    /// point when positive).
    pub p: (f64, f64),
    /// Whether both coordinates of `P` are positive.
    pub p_positive: bool,
    /// X-axis intersection `P1 = (x_H, 0)`, when real and positive.
    pub p1: Option<(f64, f64)>,
    /// Lower Y-axis intersection `P0 = (0, y~_H)`.
    pub p0: Option<(f64, f64)>,
    /// Upper Y-axis intersection `P2 = (0, y_H)`.
    pub p2: Option<(f64, f64)>,
    /// True when the conic fails the non-degeneracy test.
    pub degenerate: bool,
    pub case: HyperbolaCase,
}

/// Coefficients of the conic C(x,y) = A x^2 + B xy + C y^2 + D x + E y + F
/// obtained by eliminating z between the two prey isocline surfaces.
fn hyperbola_conic(m: &TwoPrey) -> [f64; 6] {
    let a = -m.r1 * m.a1 / (m.k1 * m.q1);
    let b = -m.alpha12 * m.a1 / m.q1 + m.alpha21 * m.a2 / m.q2;
    let c = m.r2 * m.a2 / (m.k2 * m.q2);
    let d = (m.r1 * m.a1 - m.r1 / m.k1) / m.q1 + m.alpha21 / m.q2;
    let e = -m.alpha12 / m.q1 - (m.r2 * m.a2 - m.r2 / m.k2) / m.q2;
    let f = m.r1 / m.q1 - m.r2 / m.q2;
    [a, b, c, d, e, f]
}

/// Evaluate the conic at a point.
fn conic_eval(k: &[f64; 6], x: f64, y: f64) -> f64 {
    k[0] * x * x + k[1] * x * y + k[2] * y * y + k[3] * x + k[4] * y + k[5]
}

/// Whether two points lie on the same branch of the hyperbola: both must be
/// inside the same pair of vertical angles cut out by the asymptotes.
fn same_branch(k: &[f64; 6], p: (f64, f64), q: (f64, f64)) -> bool {
    let (a, b, c, d, e) = (k[0], k[1], k[2], k[3], k[4]);
    // Center: gradient of the quadratic form vanishes.
    let det = 4.0 * a * c - b * b;
    let cx = (b * e - 2.0 * c * d) / det;
    let cy = (b * d - 2.0 * a * e) / det;
    // Asymptote directions solve A t^2 + B t + C = 0 for slope dy/dx = t
    // (or a vertical direction when A vanishes).
    let dirs: [(f64, f64); 2] = if a.abs() > 1e-14 {
        let disc = (b * b - 4.0 * a * c).sqrt();
        let t1 = (-b + disc) / (2.0 * a);
        let t2 = (-b - disc) / (2.0 * a);
        [(1.0, t1), (1.0, t2)]
    } else {
        [(0.0, 1.0), (c, -b)]
    };
    dirs.iter().all(|&(dx, dy)| {
        let side = |pt: (f64, f64)| -dy * (pt.0 - cx) + dx * (pt.1 - cy);
        side(p) * side(q) > 0.0
    })
}

/// Compute the hyperbola geometry of the two-prey model: the joint prey point
/// `P`, the axis intersections, degeneracy, and the generic case realized.
pub fn hyperbola(m: &TwoPrey) -> Result<HyperbolaGeometry> {
    let k = hyperbola_conic(m);

    // Non-degeneracy expression of section 4.4.
    let nd = 0.25
        * (m.a1 * m.r1 / (m.k1 * m.q1)
            * (m.r1 / (m.k1 * m.q1) - m.a1 * m.r1 / m.q1 - m.alpha21 / m.q2).powi(2)
            + m.a2 * m.r2 / (m.k2 * m.q2)
                * (m.r2 / (m.k2 * m.q2) - m.a2 * m.r2 / m.q2 - m.alpha12 / m.q1).powi(2))
        - m.r1 / m.q1
        + m.r2 / m.q2;
    let degenerate = nd.abs() < 1e-12 || k[1] * k[1] - 4.0 * k[0] * k[2] <= 0.0;

    // Joint prey equilibrium from the linear isoclines.
    let den = m.r1 * m.r2 / (m.k1 * m.k2) - m.alpha12 * m.alpha21;
    if den.abs() < 1e-14 {
        return Err(Error::Numeric(
            "prey isoclines are parallel; P undefined".into(),
        ));
    }
    let x3 = m.r2 * (m.r1 / m.k2 - m.alpha12) / den;
    let y3 = m.r1 * (m.r2 / m.k1 - m.alpha21) / den;
    let p_positive = x3 > 0.0 && y3 > 0.0;

    // X-axis intersection: positive root of O2 x^2 + O1 x + O0 (Lemma form).
    let p1 = {
        let o2 = m.a1 * m.q2 * m.r1;
        let o1 = (1.0 - m.a1 * m.k1) * m.q2 * m.r1 - m.k1 * m.q1 * m.alpha21;
        let o0 = m.k1 * (m.q1 * m.r2 - m.q2 * m.r1);
        let disc = o1 * o1 - 4.0 * o2 * o0;
        if disc >= 0.0 {
            let x_h = (-o1 + disc.sqrt()) / (2.0 * o2);
            (x_h > 0.0).then_some((x_h, 0.0))
        } else {
            None
        }
    };

    // Y-axis intersections: roots of the symmetric quadratic.
    let (p0, p2) = {
        let o2 = m.a2 * m.q1 * m.r2;
        let o1 = (1.0 - m.a2 * m.k2) * m.q1 * m.r2 - m.k2 * m.q2 * m.alpha12;
        let o0 = m.k2 * (m.q2 * m.r1 - m.q1 * m.r2);
        let disc = o1 * o1 - 4.0 * o2 * o0;
        if disc >= 0.0 {
            let lo = (-o1 - disc.sqrt()) / (2.0 * o2);
            let hi = (-o1 + disc.sqrt()) / (2.0 * o2);
            (
                (lo > 0.0).then_some((0.0, lo)),
                (hi > 0.0).then_some((0.0, hi)),
            )
        } else {
            (None, None)
        }
    };

    // Sanity: every located point satisfies the conic to high accuracy.
    for pt in [Some((x3, y3)), p1, p0, p2].into_iter().flatten() {
        let res = conic_eval(&k, pt.0, pt.1);
        if res.abs() > 1e-9 * (1.0 + pt.0.abs() + pt.1.abs()) {
            return Err(Error::Numeric(format!(
                "hyperbola point {pt:?} misses the conic (residual {res:.3e})"
            )));
        }
    }

    let case = match (p0, p2, degenerate) {
        (Some(p0v), Some(p2v), false) => {
            if same_branch(&k, p0v, p2v) {
                HyperbolaCase::P0P2SameBranch
            } else {
                HyperbolaCase::P0P1SameBranch
            }
        }
        _ => HyperbolaCase::NoYIntersection,
    };

    Ok(HyperbolaGeometry {
        p: (x3, y3),
        p_positive,
        p1,
        p0,
        p2,
        degenerate,
        case,
    })
}

/// Result of the sufficient-condition check for a positive equilibrium of the
/// two-prey model: the chain `c1 p1(K1) < mu < c1 p1(x3) + c2 p2(y3)`.
#[derive(Debug, Clone, Serialize)]
pub struct Ch4Existence {
    pub holds: bool,
    /// Lower end `c1 p1(K1)`.
    pub lower: f64,
    pub mu: f64,
    /// Upper end `c1 p1(x3) + c2 p2(y3)`.
    pub upper: f64,
    pub x3: f64,
    pub y3: f64,
}

/// Evaluate the existence chain of the two-prey model.
pub fn ch4_existence_check(m: &TwoPrey) -> Result<Ch4Existence> {
    if !(m.r2 / m.k1 > m.alpha21 && m.r1 / m.k2 > m.alpha12) {
        return Err(Error::Precondition(
            "existence chain requires r2/K1 > alpha21 and r1/K2 > alpha12".into(),
        ));
    }
    let geometry = hyperbola(m)?;
    let (x3, y3) = geometry.p;
    let p1 = |x: f64| m.q1 * x / (1.0 + m.a1 * x);
    let p2 = |y: f64| m.q2 * y / (1.0 + m.a2 * y);
    let lower = m.c1 * p1(m.k1);
    let upper = m.c1 * p1(x3) + m.c2 * p2(y3);
    Ok(Ch4Existence {
        holds: lower < m.mu && m.mu < upper,
        lower,
        mu: m.mu,
        upper,
        x3,
        y3,
    })
}

/// The equilibrium cubic of Bazykin's model together with the window of
/// intraspecific-competition values yielding three positive equilibria.
#[derive(Debug, Clone, Serialize)]
pub struct BazykinCubic {
    /// Coefficients `[Omega3, Omega2, Omega1, Omega0]` of
    /// `P(x) = Omega3 x^3 + Omega2 x^2 + Omega1 x + Omega0`.
    pub coefficients: [f64; 4],
    /// Positive real roots (prey coordinates of positive equilibria),
    /// ascending.
    pub roots: Vec<f64>,
    /// Raw window data `(m1, eps, m2)` when the capacity condition holds.
    pub window: Option<(f64, f64, f64)>,
    /// Effective m-interval `(max(m1 - eps, m2), m1 + eps)` when non-empty.
    pub triple_interval: Option<(f64, f64)>,
}

/// Full analysis of Bazykin's model.
#[derive(Debug, Clone, Serialize)]
pub struct BazykinAnalysis {
    pub cubic: BazykinCubic,
    /// Classified positive equilibria `(x, f(x))`, ascending in `x`.
    pub equilibria: Vec<EquilibriumReport>,
    /// Break-even prey level `y^b`.
    pub break_even: f64,
    /// Uniqueness + local attraction per the isocline criterion
    /// `(K - 1/a)/2 <= y^b < K`.
    pub unique_local_attractor: bool,
    /// Global attraction per the Bendixson-Dulac conditions `r < mu` and
    /// `q < (2 - aK(r - mu))/c` (on top of the uniqueness criterion).
    pub global_attractor: bool,
}

/// All real roots of a polynomial with ascending coefficients, via the
/// companion matrix.
fn real_poly_roots(coeffs: &[f64]) -> Vec<f64> {
    // Trim negligible leading coefficients.
    let scale = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].abs() < 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let mut companion = DMatrix::zeros(deg, deg);
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
        if i + 1 < deg {
            companion[(i + 1, i)] = 1.0;
        }
    }
    let eig = companion.complex_eigenvalues();
    let mut roots: Vec<f64> = eig
        .iter()
        .filter(|l| l.im.abs() < 1e-8 * (1.0 + l.re.abs()))
        .map(|l| l.re)
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Real roots of the Bazykin equilibrium cubic obtained from the closed-form
/// Cardano expression (all branch combinations evaluated in complex
/// arithmetic). Used as an independent cross-check of the companion solver.
pub fn bazykin_cardano_roots(b: &Bazykin) -> Vec<f64> {
    let (r, k, q, a, c, mu, m) = (b.r, b.k, b.q, b.a, b.c, b.mu, b.m);
    if m == 0.0 {
        // Degenerate (quadratic term vanishes): single positive root at y^b.
        return vec![mu / (c * q - a * mu)];
    }
    let chi = a * a * k * m * r - 2.0 * a * m * r;
    let phi = 3.0 * a * a * m * r * (c * k * q * q + m * r - 2.0 * a * k * m * r - a * k * q * mu);
    let psi = -18.0 * a.powi(3) * c * k * m * m * q * q * r * r
        + 9.0 * a.powi(4) * c * k * k * m * m * q * q * r * r
        - 2.0 * a.powi(3) * m.powi(3) * r.powi(3)
        - 6.0 * a.powi(5) * k * k * m.powi(3) * r.powi(3)
        - 6.0 * a.powi(4) * k * m.powi(3) * r.powi(3)
        - 2.0 * a.powi(6) * k.powi(3) * m.powi(3) * r.powi(3)
        - 9.0 * a.powi(4) * k * m * m * q * r * r * mu
        - 9.0 * a.powi(5) * k * k * m * m * q * r * r * mu;
    let lead = 3.0 * a * a * r * m;
    let inner = phi - chi * chi;
    let disc = Complex64::new(psi * psi + 4.0 * inner.powi(3), 0.0).sqrt();
    let cbrt2 = 2.0f64.cbrt();
    let mut roots: Vec<f64> = Vec::new();
    for sign in [1.0, -1.0] {
        let base = Complex64::new(psi, 0.0) + disc * sign;
        if base.norm() < 1e-300 {
            continue;
        }
        let w0 = base.powf(1.0 / 3.0);
        for j in 0..3 {
            let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / 3.0);
            let w = w0 * rot;
            let x = Complex64::new(chi / lead, 0.0) - w / (3.0 * cbrt2 * a * a * r * m)
                + cbrt2 * inner / (w * lead);
            if x.im.abs() < 1e-6 * (1.0 + x.re.abs()) {
                let v = x.re;
                if !roots.iter().any(|&u| (u - v).abs() < 1e-6 * (1.0 + v.abs())) {
                    roots.push(v);
                }
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Analyze Bazykin's model: equilibrium cubic, positive equilibria with
/// classification, triple-equilibrium window, and the uniqueness / global
/// stability criteria.
pub fn bazykin_analysis(b: &Bazykin) -> Result<BazykinAnalysis> {
    let (r, k, q, a, c, mu, m) = (b.r, b.k, b.q, b.a, b.c, b.mu, b.m);
    if c * q - a * mu <= 0.0 {
        return Err(Error::Precondition(
            "bazykin analysis requires c q - a mu > 0".into(),
        ));
    }
    let yb = b.break_even();

    let coefficients = [
        mu * k * q + k * m * r,                           // Omega0
        a * mu * k * q - c * k * q * q - m * r + 2.0 * a * k * m * r, // Omega1
        -2.0 * a * m * r + a * a * k * m * r,             // Omega2
        -a * a * m * r,                                   // Omega3
    ];
    let mut roots: Vec<f64> = real_poly_roots(&coefficients)
        .into_iter()
        .filter(|&x| x > INTERIOR_TOL)
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Triple-equilibrium window (Theorem-level capacity condition).
    let window = (k > (8.0 * c * q + a * mu) / (a * c * q - a * a * mu)).then(|| {
        let m1 = (8.0 * c * (1.0 + a * k).powi(3) * r).recip()
            * (-2.0 * a.powi(3) * c * mu * k.powi(3) * q - 22.0 * a * a * c * mu * k * k * q
                + a * a * mu * mu * k * (a * k + 1.0).powi(2)
                + c * c * k * q * q * (a * k * (a * k + 20.0) - 8.0)
                - 20.0 * a * c * mu * k * q);
        let eps_arg = a * k * k * (a * mu * k - c * k * q + mu)
            * (c * q * (8.0 - a * k) + a * mu * (a * k + 1.0)).powi(3)
            / (c * c * r * r * (a * k + 1.0).powi(6));
        let eps = 0.125 * eps_arg.max(0.0).sqrt();
        let m2 = 3.0 * k * q * (c * q - a * mu) / (a * k * r * (a * k + 2.0) + r);
        (m1, eps, m2)
    });
    let triple_interval = window.and_then(|(m1, eps, m2)| {
        let lo = (m1 - eps).max(m2);
        let hi = m1 + eps;
        (lo < hi).then_some((lo, hi))
    });

    // Classified positive equilibria; the consumer coordinate comes from the
    // prey isocline (strictly positive only below carrying capacity).
    let mut equilibria = Vec::new();
    for &x in &roots {
        let y = b.prey_isocline(x);
        if y > INTERIOR_TOL {
            equilibria.push(report_at(b, &[x, y], DEFAULT_HYPERBOLICITY_EPS));
        }
    }

    let unique_local_attractor = (k - 1.0 / a) / 2.0 <= yb && yb < k;
    let global_attractor =
        unique_local_attractor && r < mu && q < (2.0 - a * k * (r - mu)) / c;

    Ok(BazykinAnalysis {
        cubic: BazykinCubic {
            coefficients: [coefficients[3], coefficients[2], coefficients[1], coefficients[0]],
            roots,
            window,
            triple_interval,
        },
        equilibria,
        break_even: yb,
        unique_local_attractor,
        global_attractor,
    })
}
