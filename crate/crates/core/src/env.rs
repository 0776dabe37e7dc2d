//! Ground truth: site geometry, hazard evolution, noisy observation
//! generation, and physical cleaning application.
//!
//! Hazard at a non-cleared site evolves as
//!
//! ```text
//! H' = H + rho * H * (1 - H/K) + phi * sum_j H_j / (scale * d_ij + 1)
//! ```
//!
//! then clamps to `[0, K]`. Sites confirmed fully eliminated are frozen at
//! zero and drop out of the spatial coupling entirely.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Environment dynamics parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    /// Hazard saturation threshold K (maximum tolerable hazard level).
    pub saturation: f64,
    /// Spatial influence coefficient phi.
    pub spatial_coeff: f64,
    /// Multiplier applied to km distances inside the spatial coupling
    /// denominator `(scale * d + 1)`. The scenario presets use 1000
    /// (meter-scale kernel); 1.0 gives a km-scale kernel.
    pub spatial_scale: f64,
    /// Lower bound of the per-site intrinsic growth rate range.
    pub growth_rate_min: f64,
    /// Upper bound of the per-site intrinsic growth rate range.
    pub growth_rate_max: f64,
    /// Sensor noise standard deviation (sigma_eps).
    pub noise_std: f64,
    /// Lower corner of the square site region, km.
    pub map_min: f64,
    /// Upper corner of the square site region, km.
    pub map_max: f64,
    /// Upper bound of the initial hazard range (sampled uniform from 0).
    pub init_hazard_max: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            saturation: 200.0,
            spatial_coeff: 0.01,
            spatial_scale: 1000.0,
            growth_rate_min: 0.0,
            growth_rate_max: 0.1,
            noise_std: 5.0,
            map_min: -0.5,
            map_max: 0.5,
            init_hazard_max: 100.0,
        }
    }
}

/// Static site geometry. The depot sits at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteGeometry {
    /// Site index in `0..N`.
    pub id: usize,
    /// 2-D position in km.
    pub position: [f64; 2],
    /// Euclidean distance from the depot (origin) in km.
    pub depot_distance: f64,
}

/// Euclidean distance between two points, km.
pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Ground-truth environment state (hidden from the planner).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    /// Per-site real hazard level H_i.
    pub hazards: Vec<f64>,
    /// Per-site intrinsic growth rate rho_i.
    pub growth_rates: Vec<f64>,
    /// Saturation threshold K.
    pub saturation: f64,
    /// Spatial influence coefficient phi.
    pub spatial_coeff: f64,
    /// Distance multiplier in the coupling denominator.
    pub spatial_scale: f64,
    /// Sensor noise standard deviation.
    pub noise_std: f64,
    /// Number of evolution steps applied.
    pub round: u32,
    /// Per-site confirmed-fully-eliminated flag.
    pub cleared: Vec<bool>,
    /// Pairwise site distances in km, row-major N x N.
    site_distances: Vec<f64>,
}

/// One noisy hazard measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub site: usize,
    /// Measured hazard. Raw sensor reading; may be negative.
    pub value: f64,
    /// Round at which the observation was collected.
    pub time: u32,
}

/// One planned (and, after execution, actual) cleaning action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningVisit {
    pub vehicle: usize,
    pub site: usize,
    /// Hazard quantity this visit intends to remove (<= Q_unit).
    pub planned_removal: f64,
    /// Hazard actually removed; filled in by execution.
    pub actual_removal: f64,
}

/// Samples site positions, initial hazards, and growth rates.
///
/// Positions are uniform over the configured square, hazards uniform over
/// `[0, init_hazard_max]`, growth rates uniform over the configured range.
pub fn init_environment(
    num_sites: usize,
    params: &EnvParams,
    rng: &mut ChaCha8Rng,
) -> Result<(EnvState, Vec<SiteGeometry>)> {
    if num_sites == 0 {
        return Err(Error::Config("num_sites must be at least 1".into()));
    }
    if !params.map_min.is_finite() || !params.map_max.is_finite() {
        return Err(Error::Config("map bounds must be finite".into()));
    }
    // A zero-side square is a valid degenerate map; only inverted bounds fail.
    if params.map_min > params.map_max {
        return Err(Error::Config(format!(
            "invalid map bounds: map_min {} exceeds map_max {}",
            params.map_min, params.map_max
        )));
    }

    let coord = |rng: &mut ChaCha8Rng| -> f64 {
        if params.map_min == params.map_max {
            params.map_min
        } else {
            rng.gen_range(params.map_min..params.map_max)
        }
    };
    let geometry: Vec<SiteGeometry> = (0..num_sites)
        .map(|id| {
            let position = [coord(rng), coord(rng)];
            SiteGeometry {
                id,
                position,
                depot_distance: distance(position, [0.0, 0.0]),
            }
        })
        .collect();

    let hazards: Vec<f64> = (0..num_sites)
        .map(|_| {
            if params.init_hazard_max == 0.0 {
                0.0
            } else {
                rng.gen_range(0.0..params.init_hazard_max)
            }
        })
        .collect();
    let growth_rates: Vec<f64> = (0..num_sites)
        .map(|_| {
            if params.growth_rate_min == params.growth_rate_max {
                params.growth_rate_min
            } else {
                rng.gen_range(params.growth_rate_min..params.growth_rate_max)
            }
        })
        .collect();

    let mut site_distances = vec![0.0; num_sites * num_sites];
    for i in 0..num_sites {
        for j in (i + 1)..num_sites {
            let d = distance(geometry[i].position, geometry[j].position);
            site_distances[i * num_sites + j] = d;
            site_distances[j * num_sites + i] = d;
        }
    }

    let state = EnvState {
        hazards,
        growth_rates,
        saturation: params.saturation,
        spatial_coeff: params.spatial_coeff,
        spatial_scale: params.spatial_scale,
        noise_std: params.noise_std,
        round: 0,
        cleared: vec![false; num_sites],
        site_distances,
    };
    Ok((state, geometry))
}

impl EnvState {
    pub fn num_sites(&self) -> usize {
        self.hazards.len()
    }

    /// Pairwise site distance in km.
    pub fn site_distance(&self, i: usize, j: usize) -> f64 {
        self.site_distances[i * self.num_sites() + j]
    }

    /// Advances every non-cleared hazard by one round of logistic growth
    /// plus distance-attenuated spillover, clamped to `[0, K]`.
    /// Cleared sites stay at zero and neither emit nor receive influence.
    pub fn step_hazards(&mut self) {
        let n = self.num_sites();
        let k = self.saturation;
        let mut next = vec![0.0; n];
        for i in 0..n {
            if self.cleared[i] {
                continue;
            }
            let h = self.hazards[i];
            let logistic = self.growth_rates[i] * h * (1.0 - h / k);
            let mut spatial = 0.0;
            for j in 0..n {
                if j == i || self.cleared[j] {
                    continue;
                }
                spatial += self.hazards[j] / (self.spatial_scale * self.site_distance(i, j) + 1.0);
            }
            next[i] = (h + logistic + self.spatial_coeff * spatial).clamp(0.0, k);
        }
        self.hazards = next;
        self.round += 1;
    }

    /// Draws one noisy observation per requested site, in request order.
    pub fn observe(&self, sites: &[usize], rng: &mut ChaCha8Rng) -> Result<Vec<Observation>> {
        for &s in sites {
            if s >= self.num_sites() {
                return Err(Error::InvalidInput(format!(
                    "observation site index {s} out of range (have {} sites)",
                    self.num_sites()
                )));
            }
        }
        let noise = Normal::new(0.0, self.noise_std)
            .map_err(|e| Error::Config(format!("bad noise std: {e}")))?;
        Ok(sites
            .iter()
            .map(|&site| Observation {
                site,
                value: self.hazards[site] + noise.sample(rng),
                time: self.round,
            })
            .collect())
    }

    /// Executes cleaning visits sequentially in list order.
    ///
    /// Each visit removes `min(planned, current hazard)` and records it in
    /// `actual_removal`. Returns the per-site fully-eliminated report: `true`
    /// iff the site was visited and ended the pass at exactly zero. Reported
    /// sites get their `cleared` flag set.
    pub fn apply_cleaning(&mut self, visits: &mut [CleaningVisit]) -> Vec<bool> {
        let mut report = vec![false; self.num_sites()];
        for visit in visits.iter_mut() {
            let h = self.hazards[visit.site];
            let removed = visit.planned_removal.min(h);
            visit.actual_removal = removed;
            self.hazards[visit.site] = h - removed;
            report[visit.site] = self.hazards[visit.site] == 0.0;
        }
        for (site, &full) in report.iter().enumerate() {
            if full {
                self.cleared[site] = true;
            }
        }
        report
    }

    /// True once every site's hazard is exactly zero.
    pub fn all_clear(&self) -> bool {
        self.hazards.iter().all(|&h| h == 0.0)
    }
}
