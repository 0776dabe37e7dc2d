//! Vehicle routing with profits for the sensing and cleaning phases.
//!
//! Both phases maximize collected visit value minus travel cost over a fleet
//! of depot-anchored routes. Sensing restricts each site to at most one visit
//! across the fleet and caps each route's length; cleaning allows several
//! vehicles to service one site and caps each route's summed demand instead.
//! Subtour-freeness is structural: a route is an ordered site list implicitly
//! closed through the depot.

mod exact;
mod heuristic;

pub use exact::{solve_exact, DEFAULT_EXACT_SITE_LIMIT};
pub use heuristic::solve_heuristic;

use serde::{Deserialize, Serialize};

use crate::env::{distance, SiteGeometry};
use crate::{Error, Result};

/// Which phase's constraint set applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VrppMode {
    Sensing,
    Cleaning,
}

/// One vehicle's operating limits. Inapplicable limits are infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    /// Route length budget in km (sensing).
    #[serde(default = "f64_inf", skip_serializing_if = "is_inf")]
    pub max_distance: f64,
    /// Total demand budget (cleaning).
    #[serde(default = "f64_inf", skip_serializing_if = "is_inf")]
    pub capacity: f64,
}

fn f64_inf() -> f64 {
    f64::INFINITY
}

fn is_inf(x: &f64) -> bool {
    x.is_infinite()
}

/// A visitable site node: value collected per visit, demand consumed per
/// visit (cleaning), and its position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteNode {
    pub id: usize,
    pub position: [f64; 2],
    pub value: f64,
    #[serde(default)]
    pub demand: f64,
}

/// Per-site value/demand input to [`build_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct VisitValue {
    pub site: usize,
    pub value: f64,
    pub demand: f64,
}

/// A prize-collecting routing instance. Node 0 is the depot; site nodes are
/// indexed `1..=n` in [`SiteNode`] order. Distances are Euclidean in km.
#[derive(Debug, Clone, PartialEq)]
pub struct VrppInstance {
    pub mode: VrppMode,
    pub depot: [f64; 2],
    pub sites: Vec<SiteNode>,
    pub fleet: Vec<Vehicle>,
    /// Travel cost per km.
    pub travel_cost: f64,
    /// Each node may be visited at most once across the whole fleet.
    /// Always true in sensing mode; a cleaning instance may opt in when its
    /// nodes represent single-use visit slots rather than sites.
    unique_visits: bool,
    /// Row-major (n+1) x (n+1) distance matrix.
    dist: Vec<f64>,
}

/// Per-vehicle ordered routes (site ids) with the achieved objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrppSolution {
    pub routes: Vec<Vec<usize>>,
    pub objective: f64,
}

impl VrppSolution {
    pub fn empty(num_vehicles: usize) -> Self {
        Self {
            routes: vec![Vec::new(); num_vehicles],
            objective: 0.0,
        }
    }

    /// Distinct visited site ids, ascending.
    pub fn visited_sites(&self) -> Vec<usize> {
        let mut sites: Vec<usize> = self.routes.iter().flatten().copied().collect();
        sites.sort_unstable();
        sites.dedup();
        sites
    }
}

/// Feasibility tolerance: a budget or capacity counts as exceeded only past
/// this absolute slack, so exactly-full routes survive float-summation noise.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// One constraint breach found by [`validate_solution`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("route {vehicle} visits unknown site {site}")]
    UnknownSite { vehicle: usize, site: usize },
    #[error("route {vehicle} visits site {site} more than once")]
    RepeatedInRoute { vehicle: usize, site: usize },
    #[error("site {site} appears in more than one sensing route")]
    MultipleRoutes { site: usize },
    #[error("route {vehicle} length {length:.6} km exceeds budget {limit:.6} km")]
    DistanceExceeded { vehicle: usize, length: f64, limit: f64 },
    #[error("route {vehicle} demand {demand:.6} exceeds capacity {limit:.6}")]
    CapacityExceeded { vehicle: usize, demand: f64, limit: f64 },
    #[error("solution has {routes} routes but the fleet has {fleet} vehicles")]
    FleetMismatch { routes: usize, fleet: usize },
}

impl VrppInstance {
    /// Builds an instance from explicit nodes, normalizing limits for the
    /// mode: sensing zeroes demands and lifts capacities, cleaning lifts
    /// distance budgets.
    pub fn new(
        mode: VrppMode,
        depot: [f64; 2],
        mut sites: Vec<SiteNode>,
        mut fleet: Vec<Vehicle>,
        travel_cost: f64,
    ) -> Result<Self> {
        if fleet.is_empty() {
            return Err(Error::Config("VRPP fleet must not be empty".into()));
        }
        for s in &sites {
            if !s.value.is_finite() || s.value < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "site {} has invalid visit value {}",
                    s.id, s.value
                )));
            }
            if !s.demand.is_finite() || s.demand < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "site {} has invalid demand {}",
                    s.id, s.demand
                )));
            }
        }
        match mode {
            VrppMode::Sensing => {
                for s in &mut sites {
                    s.demand = 0.0;
                }
                for v in &mut fleet {
                    v.capacity = f64::INFINITY;
                }
            }
            VrppMode::Cleaning => {
                for v in &mut fleet {
                    v.max_distance = f64::INFINITY;
                }
            }
        }
        let n = sites.len();
        let mut dist = vec![0.0; (n + 1) * (n + 1)];
        let pos = |node: usize, sites: &[SiteNode]| -> [f64; 2] {
            if node == 0 {
                depot
            } else {
                sites[node - 1].position
            }
        };
        for i in 0..=n {
            for j in (i + 1)..=n {
                let d = distance(pos(i, &sites), pos(j, &sites));
                dist[i * (n + 1) + j] = d;
                dist[j * (n + 1) + i] = d;
            }
        }
        Ok(Self {
            unique_visits: mode == VrppMode::Sensing,
            mode,
            depot,
            sites,
            fleet,
            travel_cost,
            dist,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    /// Whether every node admits at most one visit fleet-wide.
    pub fn unique_visits(&self) -> bool {
        self.unique_visits
    }

    /// Restricts every node to a single visit across the fleet (the sensing
    /// rule) while keeping this instance's other mode semantics.
    pub fn require_unique_visits(&mut self) {
        self.unique_visits = true;
    }

    /// Distance between nodes (0 = depot, `1..=n` = sites), km.
    pub fn node_distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * (self.sites.len() + 1) + j]
    }

    /// Node index for a site id, if present.
    pub fn node_of(&self, site_id: usize) -> Option<usize> {
        self.sites.iter().position(|s| s.id == site_id).map(|p| p + 1)
    }

    /// Length of a depot-anchored route over node indices, km.
    /// Empty routes have length zero (the vehicle stays at the depot).
    pub fn route_length(&self, nodes: &[usize]) -> f64 {
        if nodes.is_empty() {
            return 0.0;
        }
        let mut len = self.node_distance(0, nodes[0]);
        for w in nodes.windows(2) {
            len += self.node_distance(w[0], w[1]);
        }
        len + self.node_distance(*nodes.last().unwrap(), 0)
    }

    /// Converts a route of site ids into node indices.
    fn route_nodes(&self, route: &[usize]) -> Result<Vec<usize>> {
        route
            .iter()
            .map(|&id| {
                self.node_of(id)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown site index {id}")))
            })
            .collect()
    }
}

/// Assembles a VRPP instance from per-site visit values and geometry.
/// Sites with value zero are excluded from the node set.
pub fn build_instance(
    values: &[VisitValue],
    geometry: &[SiteGeometry],
    fleet: Vec<Vehicle>,
    mode: VrppMode,
    travel_cost: f64,
) -> Result<VrppInstance> {
    let sites: Vec<SiteNode> = values
        .iter()
        .filter(|v| v.value > 0.0)
        .map(|v| {
            geometry
                .get(v.site)
                .filter(|g| g.id == v.site)
                .map(|g| SiteNode {
                    id: v.site,
                    position: g.position,
                    value: v.value,
                    demand: v.demand,
                })
                .ok_or_else(|| Error::InvalidInput(format!("no geometry for site {}", v.site)))
        })
        .collect::<Result<_>>()?;
    VrppInstance::new(mode, [0.0, 0.0], sites, fleet, travel_cost)
}

/// Objective of a structurally valid solution: collected values (per visiting
/// vehicle) minus travel cost over all routes, depot legs included.
pub fn objective_value(instance: &VrppInstance, solution: &VrppSolution) -> Result<f64> {
    let mut total = 0.0;
    for route in &solution.routes {
        let nodes = instance.route_nodes(route)?;
        let value: f64 = nodes.iter().map(|&n| instance.sites[n - 1].value).sum();
        total += value - instance.travel_cost * instance.route_length(&nodes);
    }
    Ok(total)
}

/// Checks every mode-applicable constraint; an empty report means feasible.
pub fn validate_solution(instance: &VrppInstance, solution: &VrppSolution) -> Vec<Violation> {
    let mut violations = Vec::new();
    if solution.routes.len() > instance.fleet.len() {
        violations.push(Violation::FleetMismatch {
            routes: solution.routes.len(),
            fleet: instance.fleet.len(),
        });
    }
    let mut seen_in: Vec<Vec<usize>> = vec![Vec::new(); instance.num_sites() + 1];
    for (vehicle, route) in solution.routes.iter().enumerate() {
        let limit = instance
            .fleet
            .get(vehicle)
            .cloned()
            .unwrap_or(Vehicle { max_distance: f64::INFINITY, capacity: f64::INFINITY });
        let mut nodes = Vec::with_capacity(route.len());
        let mut demand = 0.0;
        let mut in_route: Vec<usize> = Vec::new();
        for &site in route {
            match instance.node_of(site) {
                None => violations.push(Violation::UnknownSite { vehicle, site }),
                Some(node) => {
                    if in_route.contains(&node) {
                        violations.push(Violation::RepeatedInRoute { vehicle, site });
                    }
                    in_route.push(node);
                    nodes.push(node);
                    demand += instance.sites[node - 1].demand;
                    seen_in[node].push(vehicle);
                }
            }
        }
        let length = instance.route_length(&nodes);
        if length > limit.max_distance + FEASIBILITY_TOL {
            violations.push(Violation::DistanceExceeded {
                vehicle,
                length,
                limit: limit.max_distance,
            });
        }
        if demand > limit.capacity + FEASIBILITY_TOL {
            violations.push(Violation::CapacityExceeded {
                vehicle,
                demand,
                limit: limit.capacity,
            });
        }
    }
    if instance.unique_visits {
        for (node, vehicles) in seen_in.iter().enumerate().skip(1) {
            let mut distinct = vehicles.clone();
            distinct.dedup();
            if distinct.len() > 1 {
                violations.push(Violation::MultipleRoutes {
                    site: instance.sites[node - 1].id,
                });
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometry(positions: &[[f64; 2]]) -> Vec<SiteGeometry> {
        positions
            .iter()
            .enumerate()
            .map(|(id, &position)| SiteGeometry {
                id,
                position,
                depot_distance: distance(position, [0.0, 0.0]),
            })
            .collect()
    }

    fn uav(max_distance: f64) -> Vehicle {
        Vehicle { max_distance, capacity: f64::INFINITY }
    }

    fn ugv(capacity: f64) -> Vehicle {
        Vehicle { max_distance: f64::INFINITY, capacity }
    }

    #[test]
    fn build_excludes_zero_value_sites() {
        let geo = geometry(&[[0.0, 0.1], [0.0, 0.2], [0.0, 0.3]]);
        let values = vec![
            VisitValue { site: 0, value: 5.0, demand: 0.0 },
            VisitValue { site: 1, value: 0.0, demand: 0.0 },
            VisitValue { site: 2, value: 2.0, demand: 0.0 },
        ];
        let inst = build_instance(&values, &geo, vec![uav(1.5)], VrppMode::Sensing, 1.0).unwrap();
        assert_eq!(inst.num_sites(), 2);
        assert_eq!(inst.sites[0].id, 0);
        assert_eq!(inst.sites[1].id, 2);
    }

    #[test]
    fn mode_normalization_follows_phase() {
        let geo = geometry(&[[0.0, 0.1]]);
        let values = vec![VisitValue { site: 0, value: 5.0, demand: 7.0 }];
        let sensing = build_instance(
            &values,
            &geo,
            vec![uav(1.5), uav(1.5)],
            VrppMode::Sensing,
            1.0,
        )
        .unwrap();
        assert!(sensing.fleet.iter().all(|v| v.capacity.is_infinite()));
        assert!(sensing.fleet.iter().all(|v| v.max_distance == 1.5));
        assert!(sensing.sites.iter().all(|s| s.demand == 0.0));

        let cleaning = build_instance(
            &values,
            &geo,
            vec![ugv(100.0), ugv(100.0)],
            VrppMode::Cleaning,
            1.0,
        )
        .unwrap();
        assert!(cleaning.fleet.iter().all(|v| v.max_distance.is_infinite()));
        assert!(cleaning.fleet.iter().all(|v| v.capacity == 100.0));
        assert_eq!(cleaning.sites[0].demand, 7.0);
    }

    #[test]
    fn empty_fleet_is_config_error() {
        let geo = geometry(&[[0.0, 0.1]]);
        let values = vec![VisitValue { site: 0, value: 5.0, demand: 0.0 }];
        assert!(matches!(
            build_instance(&values, &geo, vec![], VrppMode::Sensing, 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn objective_empty_solution_is_zero() {
        let geo = geometry(&[[0.0, 0.1]]);
        let values = vec![VisitValue { site: 0, value: 10.0, demand: 0.0 }];
        let inst = build_instance(&values, &geo, vec![uav(1.5)], VrppMode::Sensing, 1.0).unwrap();
        let sol = VrppSolution::empty(1);
        assert_eq!(objective_value(&inst, &sol).unwrap(), 0.0);
    }

    #[test]
    fn objective_single_route_includes_depot_legs() {
        let geo = geometry(&[[0.0, 0.1]]);
        let values = vec![VisitValue { site: 0, value: 10.0, demand: 0.0 }];
        let inst = build_instance(&values, &geo, vec![uav(1.5)], VrppMode::Sensing, 1.0).unwrap();
        let sol = VrppSolution { routes: vec![vec![0]], objective: 0.0 };
        let obj = objective_value(&inst, &sol).unwrap();
        assert!((obj - 9.8).abs() < 1e-12);
    }

    #[test]
    fn objective_cleaning_counts_value_per_visit() {
        // Degenerate geometry: site at the depot, zero travel.
        let geo = geometry(&[[0.0, 0.0]]);
        let values = vec![VisitValue { site: 0, value: 7.0, demand: 1.0 }];
        let inst =
            build_instance(&values, &geo, vec![ugv(10.0), ugv(10.0)], VrppMode::Cleaning, 1.0)
                .unwrap();
        let sol = VrppSolution { routes: vec![vec![0], vec![0]], objective: 0.0 };
        assert_eq!(objective_value(&inst, &sol).unwrap(), 14.0);
    }

    #[test]
    fn objective_rejects_unknown_site() {
        let geo = geometry(&[[0.0, 0.1]]);
        let values = vec![VisitValue { site: 0, value: 10.0, demand: 0.0 }];
        let inst = build_instance(&values, &geo, vec![uav(1.5)], VrppMode::Sensing, 1.0).unwrap();
        let sol = VrppSolution { routes: vec![vec![3]], objective: 0.0 };
        assert!(matches!(
            objective_value(&inst, &sol),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn validate_accepts_empty_solution() {
        let geo = geometry(&[[0.0, 0.1]]);
        let values = vec![VisitValue { site: 0, value: 10.0, demand: 0.0 }];
        let inst = build_instance(&values, &geo, vec![uav(1.5)], VrppMode::Sensing, 1.0).unwrap();
        assert!(validate_solution(&inst, &VrppSolution::empty(1)).is_empty());
    }

    #[test]
    fn validate_reports_distance_violation() {
        let geo = geometry(&[[0.0, 0.9]]);
        let values = vec![VisitValue { site: 0, value: 10.0, demand: 0.0 }];
        let inst = build_instance(&values, &geo, vec![uav(1.5)], VrppMode::Sensing, 1.0).unwrap();
        // Round trip 1.8 km against a 1.5 km budget.
        let sol = VrppSolution { routes: vec![vec![0]], objective: 0.0 };
        let report = validate_solution(&inst, &sol);
        assert_eq!(report.len(), 1);
        assert!(matches!(report[0], Violation::DistanceExceeded { .. }));
    }

    #[test]
    fn validate_reports_cross_route_duplicate_in_sensing() {
        let geo = geometry(&[[0.0, 0.1], [0.1, 0.0]]);
        let values = vec![
            VisitValue { site: 0, value: 1.0, demand: 0.0 },
            VisitValue { site: 1, value: 1.0, demand: 0.0 },
        ];
        let inst = build_instance(
            &values,
            &geo,
            vec![uav(5.0), uav(5.0)],
            VrppMode::Sensing,
            1.0,
        )
        .unwrap();
        let sol = VrppSolution { routes: vec![vec![1], vec![1]], objective: 0.0 };
        let report = validate_solution(&inst, &sol);
        assert_eq!(report, vec![Violation::MultipleRoutes { site: 1 }]);

        // The same duplication is legal in cleaning mode.
        let cinst = build_instance(
            &values,
            &geo,
            vec![ugv(10.0), ugv(10.0)],
            VrppMode::Cleaning,
            1.0,
        )
        .unwrap();
        assert!(validate_solution(&cinst, &sol).is_empty());
    }

    #[test]
    fn validate_reports_capacity_violation() {
        let geo = geometry(&[[0.0, 0.1], [0.1, 0.0]]);
        let values = vec![
            VisitValue { site: 0, value: 10.0, demand: 60.0 },
            VisitValue { site: 1, value: 10.0, demand: 60.0 },
        ];
        let inst =
            build_instance(&values, &geo, vec![ugv(100.0)], VrppMode::Cleaning, 1.0).unwrap();
        let sol = VrppSolution { routes: vec![vec![0, 1]], objective: 0.0 };
        let report = validate_solution(&inst, &sol);
        assert_eq!(report.len(), 1);
        assert!(matches!(report[0], Violation::CapacityExceeded { .. }));
    }

    #[test]
    fn validate_reports_repeat_within_route() {
        let geo = geometry(&[[0.0, 0.1]]);
        let values = vec![VisitValue { site: 0, value: 10.0, demand: 1.0 }];
        let inst =
            build_instance(&values, &geo, vec![ugv(100.0)], VrppMode::Cleaning, 1.0).unwrap();
        let sol = VrppSolution { routes: vec![vec![0, 0]], objective: 0.0 };
        let report = validate_solution(&inst, &sol);
        assert!(report
            .iter()
            .any(|v| matches!(v, Violation::RepeatedInRoute { .. })));
    }
}
