//! Per-site Gaussian hazard beliefs.
//!
//! Observed sites are re-estimated each round with a time-weighted Bayesian
//! update: past observations get exponentially decaying weights, the decayed
//! evidence is summarized by its effective sample size, and a Gaussian
//! conjugate update folds it into the prior. Unobserved sites extrapolate
//! their mean along a smoothed gradient while variance inflates toward a cap.

use serde::{Deserialize, Serialize};

use crate::env::Observation;
use crate::{Error, Result};

/// Observations whose decay weight falls below this are dropped from history.
const WEIGHT_FLOOR: f64 = 1e-9;

/// Variance assigned when a site is confirmed fully eliminated.
const COLLAPSED_VARIANCE: f64 = 1e-6;

/// Parameters of the belief machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeliefParams {
    /// Time-decay rate lambda for observation weights.
    pub decay: f64,
    /// Observation noise variance (sigma_eps squared).
    pub noise_var: f64,
    /// Variance inflation rate gamma for unobserved sites.
    pub inflation: f64,
    /// Variance saturation limit.
    pub var_cap: f64,
    /// Gradient smoothing factor alpha.
    pub smoothing: f64,
    /// Uncertainty boost zeta applied on residual-hazard reports.
    pub boost: f64,
    /// Prior belief mean.
    pub prior_mean: f64,
    /// Prior belief variance.
    pub prior_var: f64,
    /// Upper clamp for the belief mean (the hazard saturation threshold).
    pub mean_cap: f64,
}

impl Default for BeliefParams {
    fn default() -> Self {
        Self {
            decay: 0.5,
            noise_var: 25.0,
            inflation: 0.5,
            var_cap: 400.0,
            smoothing: 0.3,
            boost: 100.0,
            prior_mean: 0.0,
            prior_var: 100.0,
            mean_cap: 200.0,
        }
    }
}

/// Gaussian belief over one site's hazard level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteBelief {
    pub mean: f64,
    pub variance: f64,
    /// Smoothed hazard trend, hazard units per round.
    pub gradient: f64,
    /// Retained observations, sorted by time (nondecreasing).
    pub history: Vec<Observation>,
    pub last_obs_round: Option<u32>,
}

impl SiteBelief {
    pub fn new(params: &BeliefParams) -> Self {
        Self {
            mean: params.prior_mean,
            variance: params.prior_var,
            gradient: 0.0,
            history: Vec::new(),
            last_obs_round: None,
        }
    }

    /// Appends an observation. Panics in debug builds if time order breaks.
    pub fn push_observation(&mut self, obs: Observation) {
        debug_assert!(self
            .history
            .last()
            .map(|prev| prev.time <= obs.time)
            .unwrap_or(true));
        self.history.push(obs);
    }

    /// Collapses the belief after a confirmed full elimination: mean zero,
    /// near-zero variance, history dropped. Scores computed from the
    /// collapsed belief are effectively zero, so the site stops attracting
    /// either fleet without a special case in scoring.
    pub fn collapse_confirmed_clean(&mut self) {
        self.mean = 0.0;
        self.variance = COLLAPSED_VARIANCE;
        self.gradient = 0.0;
        self.history.clear();
    }
}

/// Time-weighted Bayesian update over the belief's retained history.
///
/// Weights `w_k = exp(-decay * (now - tau_k))`, weighted mean, effective
/// sample size `(sum w)^2 / sum w^2`, then the Gaussian conjugate update
/// with the current belief as prior. The mean is clamped to `[0, mean_cap]`.
pub fn tw_bayes_update(belief: &SiteBelief, now: u32, params: &BeliefParams) -> Result<SiteBelief> {
    let mut updated = belief.clone();
    updated
        .history
        .retain(|obs| weight(params.decay, now, obs.time) >= WEIGHT_FLOOR);
    if updated.history.is_empty() {
        return Err(Error::Contract(
            "tw_bayes_update requires a nonempty observation history".into(),
        ));
    }

    let mut sum_w = 0.0;
    let mut sum_w2 = 0.0;
    let mut sum_wy = 0.0;
    for obs in &updated.history {
        let w = weight(params.decay, now, obs.time);
        sum_w += w;
        sum_w2 += w * w;
        sum_wy += w * obs.value;
    }
    let weighted_mean = sum_wy / sum_w;
    let n_eff = sum_w * sum_w / sum_w2;

    let prior_mean = belief.mean;
    let prior_var = belief.variance;
    let post_var = 1.0 / (1.0 / prior_var + n_eff / params.noise_var);
    let post_mean = post_var * (prior_mean / prior_var + n_eff * weighted_mean / params.noise_var);

    updated.mean = post_mean.clamp(0.0, params.mean_cap);
    updated.variance = post_var;
    updated.last_obs_round = updated.history.iter().map(|o| o.time).max();
    Ok(updated)
}

/// Effective sample size of a weighted history at round `now`.
/// Exposed for direct inspection in tests and diagnostics.
pub fn effective_sample_size(history: &[Observation], now: u32, decay: f64) -> f64 {
    let mut sum_w = 0.0;
    let mut sum_w2 = 0.0;
    for obs in history {
        let w = weight(decay, now, obs.time);
        sum_w += w;
        sum_w2 += w * w;
    }
    sum_w * sum_w / sum_w2
}

fn weight(decay: f64, now: u32, tau: u32) -> f64 {
    (-decay * (now.saturating_sub(tau) as f64)).exp()
}

/// Extrapolates a belief `dt` rounds past its last refresh: linear variance
/// inflation up to the cap, mean moved along the gradient and clamped.
pub fn propagate_unobserved(belief: &SiteBelief, dt: u32, params: &BeliefParams) -> SiteBelief {
    let mut updated = belief.clone();
    let dt = dt as f64;
    updated.variance = ((1.0 + params.inflation * dt) * belief.variance).min(params.var_cap);
    updated.mean = (belief.mean + belief.gradient * dt).clamp(0.0, params.mean_cap);
    updated
}

/// Exponentially smoothed gradient refresh from the two most recent raw
/// observations, `dt` rounds apart.
pub fn update_gradient(
    belief: &SiteBelief,
    y_new: f64,
    y_prev: f64,
    dt: u32,
    params: &BeliefParams,
) -> Result<SiteBelief> {
    if dt == 0 {
        return Err(Error::Contract(
            "update_gradient requires at least one round between observations".into(),
        ));
    }
    let mut updated = belief.clone();
    let instantaneous = (y_new - y_prev) / dt as f64;
    updated.gradient = params.smoothing * instantaneous + (1.0 - params.smoothing) * belief.gradient;
    Ok(updated)
}

/// Variance boost applied when a site believed clean turns out to still be
/// hazardous, re-attracting future sensing.
pub fn boost_uncertainty(belief: &SiteBelief, params: &BeliefParams) -> SiteBelief {
    let mut updated = belief.clone();
    updated.variance = (belief.variance + params.boost).min(params.var_cap);
    updated
}
