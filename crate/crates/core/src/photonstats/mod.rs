//! Worst-case received photon statistics from detector-decoy click rates.
//!
//! Bob varies an attenuator in front of his threshold detector. Each setting
//! gives one observed click rate `Q_k`, which must match the click
//! probability `T_k(p)` of the unknown arriving distribution `p`. Minimizing
//! the probability that exactly one photon is registered, `G(p)`, over all
//! distributions consistent with the observations yields the bound `G_min`
//! used by the key-rate formula.

pub mod lp;
mod simplex;

pub use lp::{
    ActiveConstraint, InfeasibilityCertificate, LpProblem, LpRow, LpSolution, LpStatus, Relation,
};

use crate::error::{Error, Result};
use crate::model::{self, ChannelParams, DetectorParams, PhotonDistribution};

/// Default two-sided tolerance on `|T_k(p) - Q_k|`.
pub const DEFAULT_SLACK: f64 = 1e-9;

/// Solves a photon-number LP exactly (dense two-phase simplex).
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    simplex::solve(problem)
}

/// Coefficients `n eta_d (1 - eta_d)^(n-1)` of the single-photon detection
/// probability, with the `n = 0` coefficient exactly zero.
pub fn g_objective(eta_d: f64, n_max: usize) -> Vec<f64> {
    (0..=n_max)
        .map(|n| match n {
            0 => 0.0,
            _ => n as f64 * eta_d * (1.0 - eta_d).powi(n as i32 - 1),
        })
        .collect()
}

/// Single-photon detection probability `G(p)` of a distribution.
pub fn g_value(dist: &PhotonDistribution, eta_d: f64) -> f64 {
    g_objective(eta_d, dist.n_max()).iter().zip(dist.probs()).map(|(c, p)| c * p).sum()
}

/// Coefficients of `T_k(p)` on the simplex `sum p = 1`:
/// `p_d + (1 - p_d)(1 - (1 - eta_k eta_d)^n)`.
fn click_row(detector: &DetectorParams, eta_k: f64, n_max: usize) -> Vec<f64> {
    let eta = eta_k * detector.eta_d;
    (0..=n_max)
        .map(|n| {
            let detected = if n == 0 {
                0.0
            } else if eta >= 1.0 {
                1.0
            } else {
                -(n as f64 * (-eta).ln_1p()).exp_m1()
            };
            detector.p_d + (1.0 - detector.p_d) * detected
        })
        .collect()
}

/// Builds the LP `min G(p)` subject to the click-rate observations.
///
/// Rows: normalization first, then per decoy setting either one equality
/// (`slack == 0`) or the pair `T_k <= Q_k + slack`, `T_k >= Q_k - slack`.
pub fn build_constraints(
    observed_gains: &[f64],
    detector: &DetectorParams,
    n_max: usize,
    slack: f64,
) -> Result<LpProblem> {
    detector.check()?;
    if observed_gains.len() != detector.decoy_settings.len() {
        return Err(Error::Validation(format!(
            "{} observed gains for {} decoy settings",
            observed_gains.len(),
            detector.decoy_settings.len()
        )));
    }
    if !(slack >= 0.0 && slack.is_finite()) {
        return Err(Error::Validation(format!("slack {slack} must be finite and >= 0")));
    }
    if let Some(q) = observed_gains.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::Validation(format!("observed gain {q} is not a probability")));
    }

    let mut problem = LpProblem::over_distributions(g_objective(detector.eta_d, n_max));
    for (&eta_k, &q) in detector.decoy_settings.iter().zip(observed_gains) {
        let row = click_row(detector, eta_k, n_max);
        if slack == 0.0 {
            problem.rows.push(LpRow::new(row, Relation::Eq, q));
        } else {
            problem.rows.push(LpRow::new(row.clone(), Relation::Le, q + slack));
            problem.rows.push(LpRow::new(row, Relation::Ge, q - slack));
        }
    }
    Ok(problem)
}

/// Result of the worst-case single-photon analysis at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SinglePhotonBound {
    pub g_min: f64,
    pub witness: PhotonDistribution,
    pub active_basis: Vec<ActiveConstraint>,
    pub observed_gains: Vec<f64>,
    /// Set when `eta_d = 0`: the objective vanishes and no LP was solved.
    pub degenerate_objective: bool,
}

/// `G_min` for a source of mean `mu` over `channel`: observed gains from the
/// decoy model, constraints, objective, solve.
pub fn min_single_photon_gain(
    mu: f64,
    channel: &ChannelParams,
    detector: &DetectorParams,
    n_max: usize,
    slack: f64,
) -> Result<SinglePhotonBound> {
    let observed_gains = (0..detector.decoy_settings.len())
        .map(|k| model::decoy_gain(mu, channel, detector, k))
        .collect::<Result<Vec<_>>>()?;
    if detector.eta_d == 0.0 {
        return Ok(SinglePhotonBound {
            g_min: 0.0,
            witness: PhotonDistribution::vacuum(n_max),
            active_basis: Vec::new(),
            observed_gains,
            degenerate_objective: true,
        });
    }
    let problem = build_constraints(&observed_gains, detector, n_max, slack)?;
    let solution = solve_lp(&problem)?;
    let (value, witness) = solution.optimum()?;
    Ok(SinglePhotonBound {
        g_min: value.max(0.0),
        witness: witness.clone(),
        active_basis: solution.active_basis.clone(),
        observed_gains,
        degenerate_objective: false,
    })
}
