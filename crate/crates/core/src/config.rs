//! Scenario configuration: defaults, presets, file parsing, validation.
//!
//! Config files are TOML. Unknown keys are rejected; unspecified fields take
//! the experiment defaults. The three presets pin the published scenario
//! layouts (site count and fleet sizes) on top of those defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::belief::BeliefParams;
use crate::env::EnvParams;
use crate::policy::StrategyKind;
use crate::{Error, Result};

/// Sensing strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Bucb,
    Random,
    RoundRobin,
    Oracle,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Bucb,
        Strategy::Random,
        Strategy::RoundRobin,
        Strategy::Oracle,
    ];

    /// Fresh runtime state for this strategy.
    pub fn kind(&self, num_sites: usize) -> StrategyKind {
        match self {
            Strategy::Bucb => StrategyKind::Bucb,
            Strategy::Random => StrategyKind::Random,
            Strategy::RoundRobin => StrategyKind::RoundRobin { counts: vec![0; num_sites] },
            Strategy::Oracle => StrategyKind::Oracle,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Strategy::Bucb => "bucb",
            Strategy::Random => "random",
            Strategy::RoundRobin => "round_robin",
            Strategy::Oracle => "oracle",
        };
        f.write_str(name)
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bucb" => Ok(Strategy::Bucb),
            "random" => Ok(Strategy::Random),
            "round_robin" => Ok(Strategy::RoundRobin),
            "oracle" => Ok(Strategy::Oracle),
            other => Err(Error::Config(format!(
                "strategy: unknown value {other:?} (expected bucb|random|round_robin|oracle)"
            ))),
        }
    }
}

/// Vehicle and routing parameters shared by both phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Max route distance per UAV, km (D_m).
    pub uav_max_distance: f64,
    /// Cleaning capacity per UGV (Q_m).
    pub ugv_capacity: f64,
    /// Max hazard cleaned per site visit (Q_unit).
    pub unit_capacity: f64,
    /// Travel cost per km (c).
    pub travel_cost: f64,
    /// Sensing-score distance penalty per km (kappa).
    pub distance_penalty: f64,
    /// BUCB exploration coefficient (beta).
    pub beta: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            uav_max_distance: 1.5,
            ugv_capacity: 100.0,
            unit_capacity: 25.0,
            travel_cost: 1.0,
            distance_penalty: 0.1,
            beta: 20.0,
        }
    }
}

/// Complete configuration of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_sites: usize,
    pub num_uavs: usize,
    pub num_ugvs: usize,
    /// Round limit T.
    pub max_rounds: u32,
    pub strategy: Strategy,
    pub seed: u64,
    /// Heuristic solver restarts per routing problem.
    pub solver_budget: u32,
    pub env: EnvParams,
    pub belief: BeliefParams,
    pub vehicles: VehicleParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_sites: 20,
            num_uavs: 2,
            num_ugvs: 2,
            max_rounds: 50,
            strategy: Strategy::Bucb,
            seed: 0,
            solver_budget: 6,
            env: EnvParams::default(),
            belief: BeliefParams::default(),
            vehicles: VehicleParams::default(),
        }
    }
}

/// Named preset configurations matching the published scenario table.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let (num_sites, num_uavs, num_ugvs) = match name {
        "scenario1" => (20, 2, 2),
        "scenario2" => (50, 2, 2),
        "scenario3" => (50, 2, 3),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?} (expected scenario1|scenario2|scenario3)"
            )))
        }
    };
    Ok(ScenarioConfig {
        num_sites,
        num_uavs,
        num_ugvs,
        ..ScenarioConfig::default()
    })
}

/// Parses and validates a TOML config file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parses and validates config text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    if text.trim().is_empty() {
        return Err(Error::Config("config file is empty".into()));
    }
    let config: ScenarioConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("config syntax: {e}")))?;
    config.validate()?;
    Ok(config)
}

impl ScenarioConfig {
    /// Serializes to the same TOML schema `parse_config` reads.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize config: {e}")))
    }

    /// Checks every field against its documented range. Error messages name
    /// the offending key.
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, key: &str, requirement: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{key}: {requirement}")))
            }
        }
        check(self.num_sites >= 1, "num_sites", "must be at least 1")?;
        check(self.num_uavs >= 1, "num_uavs", "must be at least 1")?;
        check(self.num_ugvs >= 1, "num_ugvs", "must be at least 1")?;
        check(self.max_rounds >= 1, "max_rounds", "must be at least 1")?;
        check(self.solver_budget >= 1, "solver_budget", "must be at least 1")?;

        let e = &self.env;
        check(e.saturation > 0.0 && e.saturation.is_finite(), "env.saturation", "must be positive and finite")?;
        check(e.spatial_coeff >= 0.0, "env.spatial_coeff", "must be nonnegative")?;
        check(e.spatial_scale > 0.0, "env.spatial_scale", "must be positive")?;
        check(
            e.growth_rate_min >= 0.0 && e.growth_rate_min <= e.growth_rate_max,
            "env.growth_rate_min",
            "must satisfy 0 <= growth_rate_min <= growth_rate_max",
        )?;
        check(e.noise_std >= 0.0, "env.noise_std", "must be nonnegative")?;
        check(
            e.map_min.is_finite() && e.map_max.is_finite(),
            "env.map_min",
            "map bounds must be finite",
        )?;
        check(e.map_min <= e.map_max, "env.map_min", "must not exceed env.map_max")?;
        check(
            e.init_hazard_max >= 0.0 && e.init_hazard_max <= e.saturation,
            "env.init_hazard_max",
            "must lie in [0, env.saturation]",
        )?;

        let b = &self.belief;
        check(b.decay > 0.0, "belief.decay", "must be positive")?;
        check(b.noise_var > 0.0, "belief.noise_var", "must be positive")?;
        check(b.inflation >= 0.0, "belief.inflation", "must be nonnegative")?;
        check(
            (0.0..=1.0).contains(&b.smoothing),
            "belief.smoothing",
            "must lie in [0, 1]",
        )?;
        check(b.boost >= 0.0, "belief.boost", "must be nonnegative")?;
        check(
            b.prior_var > 0.0 && b.prior_var <= b.var_cap,
            "belief.prior_var",
            "must lie in (0, belief.var_cap]",
        )?;
        check(
            b.prior_mean >= 0.0 && b.prior_mean <= b.mean_cap,
            "belief.prior_mean",
            "must lie in [0, belief.mean_cap]",
        )?;

        let v = &self.vehicles;
        check(v.uav_max_distance > 0.0, "vehicles.uav_max_distance", "must be positive")?;
        check(v.ugv_capacity > 0.0, "vehicles.ugv_capacity", "must be positive")?;
        check(v.unit_capacity > 0.0, "vehicles.unit_capacity", "must be positive")?;
        check(v.travel_cost >= 0.0, "vehicles.travel_cost", "must be nonnegative")?;
        check(v.distance_penalty >= 0.0, "vehicles.distance_penalty", "must be nonnegative")?;
        check(v.beta >= 0.0, "vehicles.beta", "must be nonnegative")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_scenario_table() {
        let s1 = preset("scenario1").unwrap();
        assert_eq!((s1.num_sites, s1.num_uavs, s1.num_ugvs), (20, 2, 2));
        let s2 = preset("scenario2").unwrap();
        assert_eq!((s2.num_sites, s2.num_uavs, s2.num_ugvs), (50, 2, 2));
        let s3 = preset("scenario3").unwrap();
        assert_eq!((s3.num_sites, s3.num_uavs, s3.num_ugvs), (50, 2, 3));
        for cfg in [&s1, &s2, &s3] {
            assert_eq!(cfg.max_rounds, 50);
            assert_eq!(cfg.env.saturation, 200.0);
            assert_eq!(cfg.env.spatial_coeff, 0.01);
            assert_eq!(cfg.env.growth_rate_min, 0.0);
            assert_eq!(cfg.env.growth_rate_max, 0.1);
            assert_eq!(cfg.env.noise_std, 5.0);
            assert_eq!(cfg.env.init_hazard_max, 100.0);
            assert_eq!((cfg.env.map_min, cfg.env.map_max), (-0.5, 0.5));
            assert_eq!(cfg.belief.prior_mean, 0.0);
            assert_eq!(cfg.belief.prior_var, 100.0);
            assert_eq!(cfg.belief.decay, 0.5);
            assert_eq!(cfg.belief.inflation, 0.5);
            assert_eq!(cfg.belief.smoothing, 0.3);
            assert_eq!(cfg.belief.boost, 100.0);
            assert_eq!(cfg.vehicles.uav_max_distance, 1.5);
            assert_eq!(cfg.vehicles.ugv_capacity, 100.0);
            assert_eq!(cfg.vehicles.unit_capacity, 25.0);
            assert_eq!(cfg.vehicles.travel_cost, 1.0);
            assert_eq!(cfg.vehicles.distance_penalty, 0.1);
            assert_eq!(cfg.vehicles.beta, 20.0);
        }
    }

    #[test]
    fn unknown_preset_is_config_error() {
        assert!(matches!(preset("scenario9"), Err(Error::Config(_))));
    }

    #[test]
    fn toml_round_trip_preserves_config() {
        let mut cfg = preset("scenario2").unwrap();
        cfg.seed = 123;
        cfg.strategy = Strategy::RoundRobin;
        cfg.belief.decay = 0.7;
        let text = cfg.to_toml().unwrap();
        let parsed = parse_config_str(&text).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn negative_decay_names_the_key() {
        let cfg = ScenarioConfig::default();
        let mut text = cfg.to_toml().unwrap();
        text = text.replace("decay = 0.5", "decay = -1.0");
        let err = parse_config_str(&text).unwrap_err();
        assert!(err.to_string().contains("decay"), "got: {err}");
    }

    #[test]
    fn empty_config_is_syntax_error() {
        let err = parse_config_str("   \n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = parse_config_str("bogus_knob = 3\n").unwrap_err();
        assert!(err.to_string().contains("bogus_knob"), "got: {err}");
    }

    #[test]
    fn partial_config_takes_defaults() {
        let cfg = parse_config_str("num_sites = 5\n").unwrap();
        assert_eq!(cfg.num_sites, 5);
        assert_eq!(cfg.num_uavs, 2);
        assert_eq!(cfg.vehicles.beta, 20.0);
    }

    #[test]
    fn strategy_parses_from_str() {
        assert_eq!(Strategy::from_str("bucb").unwrap(), Strategy::Bucb);
        assert_eq!(Strategy::from_str("round_robin").unwrap(), Strategy::RoundRobin);
        assert!(Strategy::from_str("greedy").is_err());
        assert_eq!(Strategy::Oracle.to_string(), "oracle");
    }
}
