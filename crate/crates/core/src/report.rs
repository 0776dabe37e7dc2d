//! Machine-readable outputs: per-episode trace (CSV), per-episode summary
//! (JSON), multi-run comparison reports (JSON), and standalone VRPP
//! instance/solution files (JSON).
//!
//! All writers emit deterministic bytes for identical inputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioConfig, Strategy};
use crate::dispatch::{run_episode, EpisodeResult, Metrics};
use crate::vrpp::{SiteNode, Vehicle, VrppInstance, VrppMode, VrppSolution};
use crate::{Error, Result};

/// Relative tolerance for the aggregate-consistency check on report load.
const AGGREGATE_TOL: f64 = 1e-9;

/// One episode run within a replication matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub strategy: Strategy,
    pub seed: u64,
    pub result: EpisodeResult,
}

/// Runs every (strategy, seed) pair of the matrix in parallel.
/// Output order is the deterministic input order (strategy-major).
pub fn replicate(
    base: &ScenarioConfig,
    strategies: &[Strategy],
    seeds: &[u64],
) -> Result<Vec<EpisodeOutcome>> {
    let jobs: Vec<(Strategy, u64)> = strategies
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    jobs.into_par_iter()
        .map(|(strategy, seed)| {
            let config = ScenarioConfig { strategy, seed, ..base.clone() };
            Ok(EpisodeOutcome { strategy, seed, result: run_episode(&config)? })
        })
        .collect()
}

/// Writes the per-round, per-site trace table.
///
/// Columns: round, site, hazard (start of round), belief_mean, belief_var
/// (post-round), sensed (0/1), removed (actual, this round).
pub fn write_trace(mut w: impl Write, result: &EpisodeResult) -> std::io::Result<()> {
    writeln!(w, "round,site,hazard,belief_mean,belief_var,sensed,removed")?;
    for record in &result.records {
        let n = record.hazard_start.len();
        let mut sensed = vec![0u8; n];
        for route in &record.sensing_routes.routes {
            for &site in route {
                sensed[site] = 1;
            }
        }
        let mut removed = vec![0.0f64; n];
        for visit in &record.cleaning_visits {
            removed[visit.site] += visit.actual_removal;
        }
        for site in 0..n {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                record.round,
                site,
                record.hazard_start[site],
                record.belief_mean[site],
                record.belief_var[site],
                sensed[site],
                removed[site],
            )?;
        }
    }
    Ok(())
}

/// Per-episode summary file payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub strategy: Strategy,
    pub seed: u64,
    pub metrics: Metrics,
}

/// Serializes any payload as pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Mean, sample standard deviation, and median of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

impl MetricAggregate {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        };
        Self { mean, std, median }
    }

    fn close_to(&self, other: &Self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= AGGREGATE_TOL * b.abs().max(1.0);
        close(self.mean, other.mean) && close(self.std, other.std) && close(self.median, other.median)
    }
}

/// Aggregates for one strategy over all its seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyAggregate {
    pub strategy: Strategy,
    pub runs: usize,
    pub termination_round: MetricAggregate,
    pub cumulative_hazard: MetricAggregate,
    pub cleaning_rate: MetricAggregate,
    pub final_mae: MetricAggregate,
}

/// One (strategy, seed) row of a comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub strategy: Strategy,
    pub seed: u64,
    pub termination_round: u32,
    pub cumulative_hazard: f64,
    pub cleaning_rate: f64,
    pub final_mae: f64,
}

/// Percent reduction in mean termination rounds achieved by BUCB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub bucb_vs_random_pct: Option<f64>,
    pub bucb_vs_round_robin_pct: Option<f64>,
}

/// Cross-strategy comparison over a common seed range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<StrategyAggregate>,
    pub improvement: Improvement,
    /// Per metric, the non-oracle strategy whose mean lands closest to the
    /// oracle's. Empty when the oracle was not part of the comparison.
    pub closest_to_oracle: BTreeMap<String, String>,
}

impl Report {
    pub fn build(outcomes: &[EpisodeOutcome]) -> Self {
        let rows: Vec<ReportRow> = outcomes
            .iter()
            .map(|o| ReportRow {
                strategy: o.strategy,
                seed: o.seed,
                termination_round: o.result.metrics.termination_round,
                cumulative_hazard: o.result.metrics.cumulative_hazard,
                cleaning_rate: o.result.metrics.cleaning_rate,
                final_mae: o.result.metrics.final_mae,
            })
            .collect();
        let aggregates = aggregate_rows(&rows);
        let mean_t = |s: Strategy| -> Option<f64> {
            aggregates
                .iter()
                .find(|a| a.strategy == s)
                .map(|a| a.termination_round.mean)
        };
        let reduction = |baseline: Option<f64>, bucb: Option<f64>| -> Option<f64> {
            match (baseline, bucb) {
                (Some(b), Some(u)) if b > 0.0 => Some(100.0 * (b - u) / b),
                _ => None,
            }
        };
        let improvement = Improvement {
            bucb_vs_random_pct: reduction(mean_t(Strategy::Random), mean_t(Strategy::Bucb)),
            bucb_vs_round_robin_pct: reduction(mean_t(Strategy::RoundRobin), mean_t(Strategy::Bucb)),
        };
        let mut closest_to_oracle = BTreeMap::new();
        if let Some(oracle) = aggregates.iter().find(|a| a.strategy == Strategy::Oracle) {
            let metrics: [(&str, fn(&StrategyAggregate) -> f64); 4] = [
                ("termination_round", |a| a.termination_round.mean),
                ("cumulative_hazard", |a| a.cumulative_hazard.mean),
                ("cleaning_rate", |a| a.cleaning_rate.mean),
                ("final_mae", |a| a.final_mae.mean),
            ];
            for (name, get) in metrics {
                let winner = aggregates
                    .iter()
                    .filter(|a| a.strategy != Strategy::Oracle)
                    .min_by(|a, b| {
                        (get(a) - get(oracle))
                            .abs()
                            .total_cmp(&(get(b) - get(oracle)).abs())
                    });
                if let Some(w) = winner {
                    closest_to_oracle.insert(name.to_string(), w.strategy.to_string());
                }
            }
        }
        Self { rows, aggregates, improvement, closest_to_oracle }
    }

    /// Parses a report and re-derives the aggregates from its rows,
    /// rejecting the file if they disagree.
    pub fn from_json(text: &str) -> Result<Self> {
        let report: Report = serde_json::from_str(text)?;
        let recomputed = aggregate_rows(&report.rows);
        if recomputed.len() != report.aggregates.len() {
            return Err(Error::InvalidInput(
                "report aggregates do not match its rows".into(),
            ));
        }
        for (a, b) in report.aggregates.iter().zip(&recomputed) {
            let ok = a.strategy == b.strategy
                && a.runs == b.runs
                && a.termination_round.close_to(&b.termination_round)
                && a.cumulative_hazard.close_to(&b.cumulative_hazard)
                && a.cleaning_rate.close_to(&b.cleaning_rate)
                && a.final_mae.close_to(&b.final_mae);
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "report aggregates for {} are not recomputable from its rows",
                    a.strategy
                )));
            }
        }
        Ok(report)
    }
}

fn aggregate_rows(rows: &[ReportRow]) -> Vec<StrategyAggregate> {
    let mut order: Vec<Strategy> = Vec::new();
    for row in rows {
        if !order.contains(&row.strategy) {
            order.push(row.strategy);
        }
    }
    order
        .into_iter()
        .map(|strategy| {
            let of = |get: fn(&ReportRow) -> f64| -> Vec<f64> {
                rows.iter().filter(|r| r.strategy == strategy).map(get).collect()
            };
            let t = of(|r| r.termination_round as f64);
            StrategyAggregate {
                strategy,
                runs: t.len(),
                termination_round: MetricAggregate::of(&t),
                cumulative_hazard: MetricAggregate::of(&of(|r| r.cumulative_hazard)),
                cleaning_rate: MetricAggregate::of(&of(|r| r.cleaning_rate)),
                final_mae: MetricAggregate::of(&of(|r| r.final_mae)),
            }
        })
        .collect()
}

/// On-disk schema for a standalone VRPP instance. Distances are not stored;
/// they are re-derived from positions (Euclidean, km) on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub mode: VrppMode,
    pub travel_cost: f64,
    #[serde(default)]
    pub depot: [f64; 2],
    pub sites: Vec<SiteNode>,
    pub fleet: Vec<Vehicle>,
}

impl InstanceFile {
    pub fn from_instance(instance: &VrppInstance) -> Self {
        Self {
            mode: instance.mode,
            travel_cost: instance.travel_cost,
            depot: instance.depot,
            sites: instance.sites.clone(),
            fleet: instance.fleet.clone(),
        }
    }

    pub fn into_instance(self) -> Result<VrppInstance> {
        VrppInstance::new(self.mode, self.depot, self.sites, self.fleet, self.travel_cost)
    }
}

pub fn read_instance(path: &Path) -> Result<VrppInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidInput(format!("cannot read instance file {}: {e}", path.display()))
    })?;
    let file: InstanceFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("malformed instance file: {e}")))?;
    file.into_instance()
}

pub fn read_solution(path: &Path) -> Result<VrppSolution> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidInput(format!("cannot read solution file {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("malformed solution file: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    fn outcome(strategy: Strategy, seed: u64) -> EpisodeOutcome {
        let config = ScenarioConfig {
            num_sites: 6,
            strategy,
            seed,
            solver_budget: 2,
            ..preset("scenario1").unwrap()
        };
        EpisodeOutcome { strategy, seed, result: run_episode(&config).unwrap() }
    }

    #[test]
    fn trace_covers_every_round_and_site_once() {
        let o = outcome(Strategy::Bucb, 3);
        let mut bytes = Vec::new();
        write_trace(&mut bytes, &o.result).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "round,site,hazard,belief_mean,belief_var,sensed,removed"
        );
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), o.result.records.len() * 6);
        let mut seen = std::collections::BTreeSet::new();
        for line in &body {
            let mut cells = line.split(',');
            let round: u32 = cells.next().unwrap().parse().unwrap();
            let site: usize = cells.next().unwrap().parse().unwrap();
            assert!(seen.insert((round, site)), "duplicate ({round},{site})");
        }
        // Per-round removed sums in the trace match the metrics numerator.
        let removed_from_trace: f64 = body
            .iter()
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        let removed_from_metrics: f64 = o
            .result
            .records
            .iter()
            .map(|r| r.removed_this_round)
            .sum();
        assert!((removed_from_trace - removed_from_metrics).abs() < 1e-9);
    }

    #[test]
    fn report_round_trips_and_checks_aggregates() {
        let outcomes = vec![
            outcome(Strategy::Bucb, 0),
            outcome(Strategy::Bucb, 1),
            outcome(Strategy::Random, 0),
            outcome(Strategy::Random, 1),
            outcome(Strategy::Oracle, 0),
            outcome(Strategy::Oracle, 1),
        ];
        let report = Report::build(&outcomes);
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.aggregates.len(), 3);
        assert!(report.improvement.bucb_vs_random_pct.is_some());
        assert!(report.improvement.bucb_vs_round_robin_pct.is_none());
        assert_eq!(report.closest_to_oracle.len(), 4);

        let json = String::from_utf8(to_json_bytes(&report).unwrap()).unwrap();
        let loaded = Report::from_json(&json).unwrap();
        assert_eq!(loaded, report);

        // Corrupt an aggregate: load must fail.
        let mut tampered: Report = serde_json::from_str(&json).unwrap();
        tampered.aggregates[0].termination_round.mean += 1.0;
        let tampered_json = serde_json::to_string(&tampered).unwrap();
        assert!(Report::from_json(&tampered_json).is_err());
    }

    #[test]
    fn identical_strategy_lists_aggregate_identically() {
        let a = vec![outcome(Strategy::Bucb, 0), outcome(Strategy::Bucb, 1)];
        let report = Report::build(&a);
        let again = Report::build(&a);
        assert_eq!(report.aggregates, again.aggregates);
    }

    #[test]
    fn replicate_is_ordered_and_deterministic() {
        let base = ScenarioConfig { num_sites: 5, solver_budget: 2, ..ScenarioConfig::default() };
        let strategies = [Strategy::Bucb, Strategy::Random];
        let seeds = [0, 1, 2];
        let a = replicate(&base, &strategies, &seeds).unwrap();
        let b = replicate(&base, &strategies, &seeds).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(
            a.iter().map(|o| (o.strategy, o.seed)).collect::<Vec<_>>(),
            vec![
                (Strategy::Bucb, 0),
                (Strategy::Bucb, 1),
                (Strategy::Bucb, 2),
                (Strategy::Random, 0),
                (Strategy::Random, 1),
                (Strategy::Random, 2),
            ]
        );
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn instance_file_round_trip() {
        use crate::env::SiteGeometry;
        use crate::vrpp::{build_instance, VisitValue};
        let geometry = vec![
            SiteGeometry { id: 0, position: [0.0, 0.1], depot_distance: 0.1 },
            SiteGeometry { id: 1, position: [0.2, 0.0], depot_distance: 0.2 },
        ];
        let values = vec![
            VisitValue { site: 0, value: 10.0, demand: 5.0 },
            VisitValue { site: 1, value: 3.0, demand: 2.0 },
        ];
        let inst = build_instance(
            &values,
            &geometry,
            vec![Vehicle { max_distance: f64::INFINITY, capacity: 100.0 }],
            VrppMode::Cleaning,
            1.0,
        )
        .unwrap();
        let file = InstanceFile::from_instance(&inst);
        let json = String::from_utf8(to_json_bytes(&file).unwrap()).unwrap();
        let parsed: InstanceFile = serde_json::from_str(&json).unwrap();
        let rebuilt = parsed.into_instance().unwrap();
        assert_eq!(rebuilt, inst);
    }
}
