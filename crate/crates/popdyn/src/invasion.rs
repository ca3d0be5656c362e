//! Invasion analysis for the two-prey model: growth-rate thresholds for a
//! migrant prey entering a resident prey-predator community, and outcome
//! sweeps over the migrant's carrying capacity and the predator's handling
//! time.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibria::{bazykin_analysis, bazykin_cardano_roots};
use crate::error::{Error, Result};
use crate::integrate::{integrate_to, time_average, IntOptions, Trajectory};
use crate::model::TwoPrey;

/// Invasion threshold of a migrant prey against residents at equilibrium.
#[derive(Debug, Clone, Serialize)]
pub struct InvasionThreshold {
    /// Resident prey level at the submodel attractor.
    pub x_tilde: f64,
    /// Resident predator level at the submodel attractor.
    pub z_tilde: f64,
    /// Minimal migrant growth rate: invasion succeeds iff r2 exceeds this.
    pub r2_min: f64,
    /// Other positive submodel equilibria (prey coordinates), if any.
    pub other_roots: Vec<f64>,
}

/// Compute the invasion threshold r2_min = alpha21 x~ + (r1 q2 / q1)
/// (1 - x~/K1)(1 + a1 x~) where (x~, z~) is the resident (x, z) submodel
/// equilibrium reached from `s0_xz`.
pub fn invasion_threshold(model: &TwoPrey, s0_xz: (f64, f64)) -> Result<InvasionThreshold> {
    let sub = model.prey_x_submodel();
    let analysis = bazykin_analysis(&sub)?;
    let mut roots: Vec<f64> = analysis
        .equilibria
        .iter()
        .map(|e| e.location[0])
        .collect();
    if roots.is_empty() {
        return Err(Error::Precondition(
            "resident submodel has no positive equilibrium".into(),
        ));
    }

    // Cross-check the root set against the closed-form Cardano expression.
    let cardano = bazykin_cardano_roots(&sub);
    for r in &roots {
        if !cardano.iter().any(|c| (c - r).abs() < 1e-6 * (1.0 + r.abs())) {
            return Err(Error::Numeric(format!(
                "submodel root {r} not confirmed by the analytic cubic solution"
            )));
        }
    }

    // With several candidates, use the one the configured start converges to.
    let x_tilde = if roots.len() == 1 {
        roots.remove(0)
    } else {
        let opts = IntOptions::population();
        let end = integrate_to(&sub, &[s0_xz.0, s0_xz.1], 0.0, 500.0, &opts)?;
        let (pos, _) = roots
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - end[0]).abs().partial_cmp(&(*b - end[0]).abs()).unwrap()
            })
            .unwrap();
        roots.remove(pos)
    };
    let z_tilde = sub.prey_isocline(x_tilde);
    let r2_min = model.alpha21 * x_tilde
        + (model.r1 * model.q2 / model.q1) * (1.0 - x_tilde / model.k1) * (1.0 + model.a1 * x_tilde);
    Ok(InvasionThreshold {
        x_tilde,
        z_tilde,
        r2_min,
        other_roots: roots,
    })
}

/// Invasion threshold when the residents fluctuate on a limit cycle, in its
/// two algebraic forms: `alpha21 <x> + q2 <z>` and
/// `alpha21 <x> + (r1 q2 / q1) <(1 - x/K1)(1 + a1 x)>`. The forms agree
/// exactly only at an equilibrium; on a cycle they differ slightly.
#[derive(Debug, Clone, Serialize)]
pub struct FluctuatingThreshold {
    pub from_predator_mean: f64,
    pub from_prey_mean: f64,
}

/// Evaluate both fluctuating-threshold forms on a resident (x, z) submodel
/// trajectory, discarding the first `burn_in_fraction` of the time span.
pub fn invasion_threshold_fluctuating(
    model: &TwoPrey,
    traj: &Trajectory,
    burn_in_fraction: f64,
) -> Result<FluctuatingThreshold> {
    let means = time_average(traj, burn_in_fraction)?;
    let (x_mean, z_mean) = (means[0], means[1]);

    // Second form averages the nonlinear prey expression along the orbit.
    let t0 = traj.t[0] + burn_in_fraction * (traj.t[traj.t.len() - 1] - traj.t[0]);
    let mut acc = 0.0;
    let mut span = 0.0;
    let expr = |x: f64| (1.0 - x / model.k1) * (1.0 + model.a1 * x);
    for i in 0..traj.t.len() - 1 {
        if traj.t[i] < t0 {
            continue;
        }
        let dt = traj.t[i + 1] - traj.t[i];
        acc += 0.5 * dt * (expr(traj.states[i][0]) + expr(traj.states[i + 1][0]));
        span += dt;
    }
    if span <= 0.0 {
        return Err(Error::InvalidScenario(
            "post-burn-in window is empty".into(),
        ));
    }
    Ok(FluctuatingThreshold {
        from_predator_mean: model.alpha21 * x_mean + model.q2 * z_mean,
        from_prey_mean: model.alpha21 * x_mean
            + (model.r1 * model.q2 / model.q1) * (acc / span),
    })
}

/// Terminal classification of an invasion experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    Coexistence,
    PredatorExtinct,
    InvaderExtinct,
    OnlyInvader,
    ResidentPreyExtinct,
}

impl OutcomeLabel {
    /// Short name used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            OutcomeLabel::Coexistence => "coexistence",
            OutcomeLabel::PredatorExtinct => "predator_extinct",
            OutcomeLabel::InvaderExtinct => "invader_extinct",
            OutcomeLabel::OnlyInvader => "only_invader",
            OutcomeLabel::ResidentPreyExtinct => "resident_prey_extinct",
        }
    }
}

/// Outcome of one invasion experiment: the label and the terminal distances
/// to the three boundary faces (the coordinates at probe time).
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub label: OutcomeLabel,
    pub distances: [f64; 3],
}

/// Integrate to time `T` and label the outcome by which coordinates fall
/// below `extinct_eps`.
pub fn classify_outcome(
    model: &TwoPrey,
    s0: &[f64; 3],
    t_probe: f64,
    extinct_eps: f64,
    opts: &IntOptions,
) -> Result<Outcome> {
    if t_probe <= 0.0 {
        return Err(Error::InvalidScenario("probe time must be positive".into()));
    }
    let end = integrate_to(model, s0, 0.0, t_probe, opts)?;
    let alive = [
        end[0] >= extinct_eps,
        end[1] >= extinct_eps,
        end[2] >= extinct_eps,
    ];
    let label = match alive {
        [true, true, true] => OutcomeLabel::Coexistence,
        [true, false, true] => OutcomeLabel::InvaderExtinct,
        [false, true, false] => OutcomeLabel::OnlyInvader,
        [false, _, _] => OutcomeLabel::ResidentPreyExtinct,
        // Remaining patterns all have the predator gone.
        [true, _, false] => OutcomeLabel::PredatorExtinct,
    };
    Ok(Outcome {
        label,
        distances: [end[0], end[1], end[2]],
    })
}

/// One cell of a (K2, a2) outcome sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub k2: f64,
    pub a2: f64,
    pub label: OutcomeLabel,
    pub distances: [f64; 3],
}

/// Classify invasion outcomes over a uniform (K2, a2) grid. Cells run in
/// parallel; the output is row-major in K2 (outer) then a2 (inner).
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    base: &TwoPrey,
    s0: &[f64; 3],
    k2_range: (f64, f64),
    a2_range: (f64, f64),
    grid: (usize, usize),
    t_probe: f64,
    extinct_eps: f64,
    opts: &IntOptions,
) -> Result<Vec<SweepCell>> {
    let (nk, na) = grid;
    if nk < 1 || na < 1 {
        return Err(Error::InvalidScenario("sweep grid must be at least 1x1".into()));
    }
    let coord = |range: (f64, f64), n: usize, i: usize| {
        if n == 1 {
            0.5 * (range.0 + range.1)
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
        }
    };
    let cells: Vec<(f64, f64)> = (0..nk)
        .flat_map(|i| {
            (0..na).map(move |j| (coord(k2_range, nk, i), coord(a2_range, na, j)))
        })
        .collect();
    cells
        .into_par_iter()
        .map(|(k2, a2)| {
            let model = TwoPrey { k2, a2, ..*base };
            let outcome = classify_outcome(&model, s0, t_probe, extinct_eps, opts)?;
            Ok(SweepCell {
                k2,
                a2,
                label: outcome.label,
                distances: outcome.distances,
            })
        })
        .collect()
}
