//! End-to-end round loop: score, route sensing, observe, update beliefs,
//! route cleaning, clean, handle residuals, check termination, evolve.
//!
//! Round order within [`Episode::run_round`]:
//!
//! 1. sensing values from the strategy (oracle pins beliefs to truth first);
//! 2. sensing VRPP solved, routes executed, observations collected;
//! 3. observed sites re-estimated, unobserved sites propagated;
//! 4. cleaning targets computed from the updated beliefs;
//! 5. cleaning VRPP solved, visits executed against ground truth;
//! 6. beliefs decremented by planned removals; confirmed-clean sites
//!    collapsed; residual sites (belief zero, truth positive) boosted;
//! 7. termination checked (all true hazards exactly zero);
//! 8. hazards evolved if the episode continues.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{self, SiteBelief};
use crate::config::ScenarioConfig;
use crate::env::{self, CleaningVisit, EnvState, Observation, SiteGeometry};
use crate::policy::{self, StrategyKind};
use crate::rng::{substream, Stream};
use crate::vrpp::{self, Vehicle, VisitValue, VrppMode, VrppSolution};
use crate::{Error, Result};

/// Weight on the configured travel cost inside the per-round routing
/// instances. Visit selection must stay value-driven: with scores on the
/// hazard scale and uniform baseline scores in (0, 1], a km-scale cost
/// would veto low-value visits outright and strand small residual hazards
/// past the round limit. At this weight the cost term still breaks ties
/// toward compact routes but cannot override a positive visit value.
const ROUTING_COST_WEIGHT: f64 = 1e-3;

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: u32,
    pub sensing_routes: VrppSolution,
    pub cleaning_routes: VrppSolution,
    pub observations: Vec<Observation>,
    /// Executed cleaning visits in (vehicle, route position) order.
    pub cleaning_visits: Vec<CleaningVisit>,
    /// Ground truth at the start of the round (what its decisions faced).
    pub hazard_start: Vec<f64>,
    /// Ground truth after cleaning, before any evolution.
    pub hazard_end: Vec<f64>,
    /// Belief means right after the sensing update, before any cleaning
    /// bookkeeping: the round's hazard estimate.
    pub estimate_mean: Vec<f64>,
    /// Belief variances right after the sensing update.
    pub estimate_var: Vec<f64>,
    /// Post-round belief means.
    pub belief_mean: Vec<f64>,
    /// Post-round belief variances.
    pub belief_var: Vec<f64>,
    /// Total hazard actually removed this round (C_t).
    pub removed_this_round: f64,
    /// Hazard removed by each cleaning vehicle.
    pub removed_per_vehicle: Vec<f64>,
    /// Sensing visits over distinct sites visited by either fleet;
    /// absent when neither fleet visited anything.
    pub sensing_ratio: Option<f64>,
    /// Sites whose variance was boosted after a residual-hazard report.
    pub residual_boost_sites: Vec<usize>,
}

impl RoundRecord {
    pub fn all_clear(&self) -> bool {
        self.hazard_end.iter().all(|&h| h == 0.0)
    }
}

/// Per-round metric series extracted from the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    /// Mean post-cleaning hazard across sites.
    pub remaining_hazard: Vec<f64>,
    /// Mean absolute error between belief means and post-cleaning truth.
    pub mae: Vec<f64>,
    /// Mean posterior variance across sites.
    pub mean_variance: Vec<f64>,
    pub sensing_ratio: Vec<Option<f64>>,
    /// Hazard removed per cleaning vehicle per round.
    pub per_vehicle_removed: Vec<Vec<f64>>,
}

/// Headline metrics of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// First round whose post-cleaning truth was identically zero, else T.
    pub termination_round: u32,
    /// Sum of start-of-round truth over rounds 1..=T_end.
    pub cumulative_hazard: f64,
    /// Total removed over termination_round rounds.
    pub cleaning_rate: f64,
    /// Mean |belief - truth| at the termination round.
    pub final_mae: f64,
    pub series: MetricSeries,
}

/// Full per-round trace plus metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub config: ScenarioConfig,
    pub records: Vec<RoundRecord>,
    pub metrics: Metrics,
}

/// Live state of one episode.
pub struct Episode {
    config: ScenarioConfig,
    geometry: Vec<SiteGeometry>,
    env: EnvState,
    beliefs: Vec<SiteBelief>,
    strategy: StrategyKind,
    noise_rng: ChaCha8Rng,
    solver_rng: ChaCha8Rng,
    score_rng: ChaCha8Rng,
    round: u32,
    terminated: bool,
}

impl Episode {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let mut init_rng = substream(config.seed, Stream::Init);
        let (env, geometry) = env::init_environment(config.num_sites, &config.env, &mut init_rng)?;
        let beliefs = vec![SiteBelief::new(&config.belief); config.num_sites];
        let strategy = config.strategy.kind(config.num_sites);
        Ok(Self {
            geometry,
            env,
            beliefs,
            strategy,
            noise_rng: substream(config.seed, Stream::Noise),
            solver_rng: substream(config.seed, Stream::Solver),
            score_rng: substream(config.seed, Stream::Score),
            round: 1,
            terminated: false,
            config,
        })
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn env(&self) -> &EnvState {
        &self.env
    }

    pub fn beliefs(&self) -> &[SiteBelief] {
        &self.beliefs
    }

    fn uav_fleet(&self) -> Vec<Vehicle> {
        vec![
            Vehicle {
                max_distance: self.config.vehicles.uav_max_distance,
                capacity: f64::INFINITY,
            };
            self.config.num_uavs
        ]
    }

    fn ugv_fleet(&self) -> Vec<Vehicle> {
        vec![
            Vehicle {
                max_distance: f64::INFINITY,
                capacity: self.config.vehicles.ugv_capacity,
            };
            self.config.num_ugvs
        ]
    }

    /// Executes one full round. Errors if the episode already terminated.
    pub fn run_round(&mut self) -> Result<RoundRecord> {
        if self.terminated {
            return Err(Error::Contract("episode already terminated".into()));
        }
        let round = self.round;
        let n = self.config.num_sites;
        let hazard_start = self.env.hazards.clone();
        let oracle = self.strategy == StrategyKind::Oracle;

        // (1) Sensing values. The oracle overwrites beliefs with truth here.
        let values = policy::sensing_values(
            &self.strategy,
            &mut self.beliefs,
            &self.geometry,
            &self.env.cleared,
            if oracle { Some(&self.env) } else { None },
            self.config.vehicles.beta,
            self.config.vehicles.distance_penalty,
            &mut self.score_rng,
        )?;

        // (2) Sensing VRPP; executing the routes yields observations.
        let sensing_values: Vec<VisitValue> = values
            .iter()
            .enumerate()
            .map(|(site, &value)| VisitValue { site, value, demand: 0.0 })
            .collect();
        let sensing_instance = vrpp::build_instance(
            &sensing_values,
            &self.geometry,
            self.uav_fleet(),
            VrppMode::Sensing,
            self.config.vehicles.travel_cost * ROUTING_COST_WEIGHT,
        )?;
        let sensing_routes =
            vrpp::solve_heuristic(&sensing_instance, &mut self.solver_rng, self.config.solver_budget);
        let sensed_sites: Vec<usize> = sensing_routes.routes.iter().flatten().copied().collect();
        let observations = self.env.observe(&sensed_sites, &mut self.noise_rng)?;
        self.strategy.record_sensing_visits(&sensed_sites);

        // (3) Belief refresh. The oracle discards observations: its beliefs
        // are pinned to truth at scoring time every round.
        if !oracle {
            let mut observed = vec![false; n];
            for obs in &observations {
                observed[obs.site] = true;
                self.beliefs[obs.site].push_observation(obs.clone());
            }
            for site in 0..n {
                if self.env.cleared[site] {
                    continue;
                }
                if observed[site] {
                    let history = &self.beliefs[site].history;
                    if history.len() >= 2 {
                        let newest = &history[history.len() - 1];
                        let previous = &history[history.len() - 2];
                        let dt = newest.time - previous.time;
                        if dt >= 1 {
                            self.beliefs[site] = belief::update_gradient(
                                &self.beliefs[site],
                                newest.value,
                                previous.value,
                                dt,
                                &self.config.belief,
                            )?;
                        }
                    }
                    self.beliefs[site] =
                        belief::tw_bayes_update(&self.beliefs[site], round, &self.config.belief)?;
                } else {
                    self.beliefs[site] =
                        belief::propagate_unobserved(&self.beliefs[site], 1, &self.config.belief);
                }
            }
        }

        // The estimator snapshot: beliefs as of the sensing update, judged
        // later against the truth those estimates were tracking.
        let estimate_mean: Vec<f64> = self.beliefs.iter().map(|b| b.mean).collect();
        let estimate_var: Vec<f64> = self.beliefs.iter().map(|b| b.variance).collect();

        // (4) Cleaning targets from the refreshed beliefs. The BUCB strategy
        // incorporates uncertainty into its cleaning decisions too: planned
        // mass covers one posterior standard deviation above the mean, so an
        // under-estimated site gets finished instead of shedding sub-noise
        // residuals round after round. Baselines rely on the mean alone and
        // the oracle's variance is zero, so both reduce to the plain mean.
        // Sites never observed keep their prior and are not cleaning targets.
        let eligible: Vec<bool> = self.env.cleared.iter().map(|&c| !c).collect();
        let planning_beliefs: Vec<SiteBelief> = if self.strategy == StrategyKind::Bucb {
            self.beliefs
                .iter()
                .map(|b| {
                    let mut planning = b.clone();
                    if planning.last_obs_round.is_some() {
                        planning.mean = (planning.mean + 1.5 * planning.variance.sqrt())
                            .min(self.config.belief.mean_cap);
                    }
                    planning
                })
                .collect()
        } else {
            self.beliefs.clone()
        };
        let targets = policy::cleaning_targets(
            &planning_beliefs,
            self.config.vehicles.unit_capacity,
            &eligible,
        );

        // (5) Cleaning VRPP over single-use visit slots. A site whose
        // believed mass exceeds the per-visit cap is offered as several
        // equal-demand slots with diminishing marginal rewards (multiple
        // visits only where the hazard level requires more than one effort),
        // so the fleet never plans removal beyond the believed mass. The
        // slot count is capped by the fleet size: extra visits beyond that
        // cannot happen within one round anyway.
        let q_unit = self.config.vehicles.unit_capacity;
        let mut cleaning_values: Vec<VisitValue> = Vec::new();
        let mut planned_chunk = vec![0.0; n];
        for t in &targets {
            let mean = planning_beliefs[t.site].mean;
            let needed = (mean / q_unit).ceil().max(1.0) as usize;
            let slots = needed.min(self.config.num_ugvs);
            let chunk = (mean / slots as f64).min(q_unit);
            planned_chunk[t.site] = chunk;
            for k in 0..slots {
                let residual = mean - chunk * k as f64;
                cleaning_values.push(VisitValue {
                    site: t.site,
                    value: residual * chunk,
                    demand: chunk,
                });
            }
        }
        let mut cleaning_instance = vrpp::build_instance(
            &cleaning_values,
            &self.geometry,
            self.ugv_fleet(),
            VrppMode::Cleaning,
            self.config.vehicles.travel_cost * ROUTING_COST_WEIGHT,
        )?;
        cleaning_instance.require_unique_visits();
        let cleaning_routes =
            vrpp::solve_heuristic(&cleaning_instance, &mut self.solver_rng, self.config.solver_budget);
        let mut cleaning_visits: Vec<CleaningVisit> = cleaning_routes
            .routes
            .iter()
            .enumerate()
            .flat_map(|(vehicle, route)| {
                route.iter().map(move |&site| (vehicle, site))
            })
            .map(|(vehicle, site)| CleaningVisit {
                vehicle,
                site,
                planned_removal: planned_chunk[site],
                actual_removal: 0.0,
            })
            .collect();
        let fully_clean = self.env.apply_cleaning(&mut cleaning_visits);

        // (6) Belief bookkeeping after cleaning.
        let mut planned_at_site = vec![0.0; n];
        let mut visited_by_ugv = vec![false; n];
        for visit in &cleaning_visits {
            planned_at_site[visit.site] += visit.planned_removal;
            visited_by_ugv[visit.site] = true;
        }
        for site in 0..n {
            if planned_at_site[site] > 0.0 {
                self.beliefs[site].mean = (self.beliefs[site].mean - planned_at_site[site]).max(0.0);
            }
        }
        let mut residual_boost_sites = Vec::new();
        for site in 0..n {
            if fully_clean[site] {
                self.beliefs[site].collapse_confirmed_clean();
            } else if visited_by_ugv[site]
                && self.beliefs[site].mean == 0.0
                && self.env.hazards[site] > 0.0
            {
                self.beliefs[site] = belief::boost_uncertainty(&self.beliefs[site], &self.config.belief);
                residual_boost_sites.push(site);
            }
        }

        // (7) Termination: all true hazards exactly zero.
        let all_clear = self.env.all_clear();

        let removed_per_vehicle: Vec<f64> = (0..self.config.num_ugvs)
            .map(|v| {
                cleaning_visits
                    .iter()
                    .filter(|visit| visit.vehicle == v)
                    .map(|visit| visit.actual_removal)
                    .sum()
            })
            .collect();
        let removed_this_round: f64 = removed_per_vehicle.iter().sum();
        let cleaned_sites = cleaning_routes.visited_sites();
        let mut either: Vec<usize> = sensed_sites.iter().copied().chain(cleaned_sites).collect();
        either.sort_unstable();
        either.dedup();
        let sensing_ratio = if either.is_empty() {
            None
        } else {
            Some(sensed_sites.len() as f64 / either.len() as f64)
        };

        let record = RoundRecord {
            round,
            sensing_routes,
            cleaning_routes,
            observations,
            cleaning_visits,
            hazard_start,
            hazard_end: self.env.hazards.clone(),
            estimate_mean,
            estimate_var,
            belief_mean: self.beliefs.iter().map(|b| b.mean).collect(),
            belief_var: self.beliefs.iter().map(|b| b.variance).collect(),
            removed_this_round,
            removed_per_vehicle,
            sensing_ratio,
            residual_boost_sites,
        };

        // (8) Evolve hazards only if the episode continues.
        if all_clear || round >= self.config.max_rounds {
            self.terminated = true;
        } else {
            self.env.step_hazards();
        }
        self.round += 1;
        Ok(record)
    }
}

/// Runs a full episode: rounds until all hazards are zero or the limit.
pub fn run_episode(config: &ScenarioConfig) -> Result<EpisodeResult> {
    let mut episode = Episode::new(config.clone())?;
    let mut records = Vec::new();
    while !episode.terminated() {
        records.push(episode.run_round()?);
    }
    let metrics = compute_metrics(&records, config)?;
    Ok(EpisodeResult {
        config: config.clone(),
        records,
        metrics,
    })
}

/// Aggregates round records into the headline metrics and series.
pub fn compute_metrics(records: &[RoundRecord], config: &ScenarioConfig) -> Result<Metrics> {
    if records.is_empty() {
        return Err(Error::Contract("compute_metrics requires at least one round".into()));
    }
    let n = config.num_sites as f64;
    let termination_round = records
        .iter()
        .find(|r| r.all_clear())
        .map(|r| r.round)
        .unwrap_or(config.max_rounds);
    let cumulative_hazard: f64 = records
        .iter()
        .filter(|r| r.round <= termination_round)
        .map(|r| r.hazard_start.iter().sum::<f64>())
        .sum();
    let total_removed: f64 = records
        .iter()
        .filter(|r| r.round <= termination_round)
        .map(|r| r.removed_this_round)
        .sum();
    let final_record = records
        .iter()
        .find(|r| r.round == termination_round)
        .unwrap_or_else(|| records.last().unwrap());
    let final_mae = final_record
        .estimate_mean
        .iter()
        .zip(&final_record.hazard_start)
        .map(|(m, h)| (m - h).abs())
        .sum::<f64>()
        / n;
    let series = MetricSeries {
        remaining_hazard: records
            .iter()
            .map(|r| r.hazard_end.iter().sum::<f64>() / n)
            .collect(),
        mae: records
            .iter()
            .map(|r| {
                r.estimate_mean
                    .iter()
                    .zip(&r.hazard_start)
                    .map(|(m, h)| (m - h).abs())
                    .sum::<f64>()
                    / n
            })
            .collect(),
        mean_variance: records
            .iter()
            .map(|r| r.estimate_var.iter().sum::<f64>() / n)
            .collect(),
        sensing_ratio: records.iter().map(|r| r.sensing_ratio).collect(),
        per_vehicle_removed: records.iter().map(|r| r.removed_per_vehicle.clone()).collect(),
    };
    Ok(Metrics {
        termination_round,
        cumulative_hazard,
        cleaning_rate: total_removed / termination_round as f64,
        final_mae,
        series,
    })
}
