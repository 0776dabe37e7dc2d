//! Turns beliefs (or baseline rules) into per-site visit values.
//!
//! The sensing phase scores sites with a distance-adjusted Bayesian Upper
//! Confidence Bound; the cleaning phase converts belief means into expected
//! hazard-reduction rewards and demands. Random, round-robin, and oracle
//! baselines swap out only the sensing score.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::SiteBelief;
use crate::env::{EnvState, SiteGeometry};
use crate::{Error, Result};

/// Sensing score for one site, before and after the distance adjustment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingScore {
    pub site: usize,
    pub raw: f64,
    pub adjusted: f64,
}

/// Cleaning-phase value triple for one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningTarget {
    pub site: usize,
    /// Expected hazard reduction if visited: mean times removable.
    pub reward: f64,
    /// Capacity consumed by one visit.
    pub demand: f64,
    /// Hazard one visit can remove: `min(mean, Q_unit)`.
    pub removable: f64,
}

/// Sensing strategy with its per-episode running state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Distance-adjusted BUCB scores from current beliefs.
    Bucb,
    /// Uniform(0, 1) score per non-cleared site.
    Random,
    /// Favors sites with fewer cumulative sensing visits.
    RoundRobin { counts: Vec<u32> },
    /// Beliefs pinned to ground truth each round; upper-bound reference.
    Oracle,
}

impl StrategyKind {
    /// Bumps round-robin counts for sites actually visited by sensing
    /// vehicles. No-op for the other strategies.
    pub fn record_sensing_visits(&mut self, sites: &[usize]) {
        if let StrategyKind::RoundRobin { counts } = self {
            for &s in sites {
                counts[s] += 1;
            }
        }
    }
}

/// BUCB index: `mean + beta * sqrt(variance)`.
pub fn bucb_score(mean: f64, variance: f64, beta: f64) -> Result<f64> {
    if variance < 0.0 {
        return Err(Error::Contract(format!(
            "bucb_score requires nonnegative variance, got {variance}"
        )));
    }
    Ok(mean + beta * variance.sqrt())
}

/// Depot-distance penalty: `raw / (1 + kappa * d)`.
pub fn distance_adjust(raw: f64, depot_distance: f64, kappa: f64) -> f64 {
    raw / (1.0 + kappa * depot_distance)
}

/// Raw and adjusted BUCB scores for every site.
pub fn bucb_sensing_scores(
    beliefs: &[SiteBelief],
    geometry: &[SiteGeometry],
    beta: f64,
    kappa: f64,
) -> Result<Vec<SensingScore>> {
    beliefs
        .iter()
        .zip(geometry)
        .map(|(b, g)| {
            let raw = bucb_score(b.mean, b.variance, beta)?;
            Ok(SensingScore {
                site: g.id,
                raw,
                adjusted: distance_adjust(raw, g.depot_distance, kappa),
            })
        })
        .collect()
}

/// Cleaning targets for every eligible site with a positive belief mean.
///
/// `removable = min(mean, q_unit)`, `reward = mean * removable`,
/// `demand = removable`. Sites with zero mean or `eligible[i] == false`
/// (confirmed clean) are omitted.
pub fn cleaning_targets(
    beliefs: &[SiteBelief],
    q_unit: f64,
    eligible: &[bool],
) -> Vec<CleaningTarget> {
    beliefs
        .iter()
        .enumerate()
        .filter(|(i, b)| eligible[*i] && b.mean > 0.0)
        .map(|(site, b)| {
            let removable = b.mean.min(q_unit);
            CleaningTarget {
                site,
                reward: b.mean * removable,
                demand: removable,
                removable,
            }
        })
        .collect()
}

/// Per-site sensing visit values for the requested strategy.
///
/// Cleared sites get value zero under every strategy, which drops them from
/// the sensing VRPP node set. The oracle overwrites beliefs with ground truth
/// (zero variance) before scoring and therefore requires truth access.
pub fn sensing_values(
    strategy: &StrategyKind,
    beliefs: &mut [SiteBelief],
    geometry: &[SiteGeometry],
    cleared: &[bool],
    truth: Option<&EnvState>,
    beta: f64,
    kappa: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let n = beliefs.len();
    let mut values = vec![0.0; n];
    match strategy {
        StrategyKind::Bucb => {
            let scores = bucb_sensing_scores(beliefs, geometry, beta, kappa)?;
            for s in scores {
                if !cleared[s.site] {
                    values[s.site] = s.adjusted;
                }
            }
        }
        StrategyKind::Random => {
            for i in 0..n {
                if !cleared[i] {
                    values[i] = rng.gen_range(0.0..1.0);
                }
            }
        }
        StrategyKind::RoundRobin { counts } => {
            let c_max = counts
                .iter()
                .zip(cleared)
                .filter(|(_, &c)| !c)
                .map(|(&v, _)| v)
                .max()
                .unwrap_or(0);
            for i in 0..n {
                if !cleared[i] {
                    values[i] = (c_max - counts[i] + 1) as f64 / (c_max + 1) as f64;
                }
            }
        }
        StrategyKind::Oracle => {
            let truth = truth.ok_or_else(|| {
                Error::Config("oracle strategy requires ground-truth access".into())
            })?;
            for i in 0..n {
                beliefs[i].mean = truth.hazards[i];
                beliefs[i].variance = 0.0;
                if !cleared[i] {
                    values[i] = distance_adjust(truth.hazards[i], geometry[i].depot_distance, kappa);
                }
            }
        }
    }
    Ok(values)
}
