//! Exhaustive-enumeration solver for small instances; the test oracle.
//!
//! For every subset of site nodes the best visiting order is found once by
//! depth-first permutation search (lexicographic order, strict improvement,
//! so ties keep the lexicographically smallest order) and memoized. Sensing
//! then enumerates all site-to-vehicle assignments; cleaning optimizes each
//! vehicle independently, which is exact because a visit's value and demand
//! are per-vehicle and routes share no coupling constraint.

use super::{VrppInstance, VrppMode, VrppSolution};
use crate::{Error, Result};

/// Largest site count the exact solver accepts by default.
pub const DEFAULT_EXACT_SITE_LIMIT: usize = 8;

/// Provably optimal solution by exhaustive enumeration.
///
/// Ties are broken toward fewer visited sites, then the lexicographically
/// smallest route vector (site ids, vehicle by vehicle).
pub fn solve_exact(instance: &VrppInstance, site_limit: usize) -> Result<VrppSolution> {
    let n = instance.num_sites();
    if n > site_limit {
        return Err(Error::TooLarge { sites: n, limit: site_limit });
    }
    let tours = best_tours(instance);
    let (routes, objective) = if instance.unique_visits() {
        exact_unique(instance, &tours)
    } else {
        debug_assert_eq!(instance.mode, VrppMode::Cleaning);
        exact_cleaning(instance, &tours)
    };
    let routes = routes
        .into_iter()
        .map(|nodes| nodes.into_iter().map(|v| instance.sites[v - 1].id).collect())
        .collect();
    Ok(VrppSolution { routes, objective })
}

/// Best (shortest) depot-anchored tour for every node subset mask.
/// `mask` bit `i` covers node `i + 1`.
fn best_tours(instance: &VrppInstance) -> Vec<(f64, Vec<usize>)> {
    let n = instance.num_sites();
    let mut tours = vec![(0.0, Vec::new()); 1 << n];
    for (mask, slot) in tours.iter_mut().enumerate().skip(1) {
        let nodes: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
        let mut best = (f64::INFINITY, Vec::new());
        let mut path = Vec::with_capacity(nodes.len());
        let mut used = vec![false; nodes.len()];
        search_orders(instance, &nodes, &mut used, 0, 0.0, &mut path, &mut best);
        *slot = best;
    }
    tours
}

fn search_orders(
    instance: &VrppInstance,
    nodes: &[usize],
    used: &mut [bool],
    last: usize,
    len: f64,
    path: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    if len >= best.0 {
        return; // cannot strictly improve; keeps the first (lex-least) optimum
    }
    if path.len() == nodes.len() {
        let total = len + instance.node_distance(last, 0);
        if total < best.0 {
            *best = (total, path.clone());
        }
        return;
    }
    for (k, &node) in nodes.iter().enumerate() {
        if used[k] {
            continue;
        }
        used[k] = true;
        path.push(node);
        search_orders(
            instance,
            nodes,
            used,
            node,
            len + instance.node_distance(last, node),
            path,
            best,
        );
        path.pop();
        used[k] = false;
    }
}

struct Best {
    objective: f64,
    visits: usize,
    routes: Vec<Vec<usize>>,
}

impl Best {
    fn consider(&mut self, objective: f64, visits: usize, routes: impl FnOnce() -> Vec<Vec<usize>>) {
        if objective > self.objective {
            self.objective = objective;
            self.visits = visits;
            self.routes = routes();
        } else if objective == self.objective {
            let candidate = routes();
            if visits < self.visits || (visits == self.visits && candidate < self.routes) {
                self.visits = visits;
                self.routes = candidate;
            }
        }
    }
}

/// Unique-visit instances: enumerate every assignment of nodes to
/// `{unvisited} + fleet`, checking each vehicle's distance budget, capacity,
/// and one-stop-per-site rule.
fn exact_unique(
    instance: &VrppInstance,
    tours: &[(f64, Vec<usize>)],
) -> (Vec<Vec<usize>>, f64) {
    let n = instance.num_sites();
    let m = instance.fleet.len();
    let mut assignment = vec![0usize; n]; // 0 = unvisited, v = vehicle v-1
    let mut best = Best {
        objective: 0.0,
        visits: 0,
        routes: vec![Vec::new(); m],
    };
    loop {
        let mut masks = vec![0usize; m];
        let mut visits = 0usize;
        let mut value = 0.0;
        for (i, &a) in assignment.iter().enumerate() {
            if a > 0 {
                masks[a - 1] |= 1 << i;
                visits += 1;
                value += instance.sites[i].value;
            }
        }
        let mut cost = 0.0;
        let mut feasible = true;
        for (v, &mask) in masks.iter().enumerate() {
            let (len, _) = tours[mask];
            let demand: f64 = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| instance.sites[i].demand)
                .sum();
            if len > instance.fleet[v].max_distance
                || demand > instance.fleet[v].capacity
                || has_duplicate_site(instance, mask)
            {
                feasible = false;
                break;
            }
            cost += instance.travel_cost * len;
        }
        if feasible {
            best.consider(value - cost, visits, || {
                masks.iter().map(|&mask| tours[mask].1.clone()).collect()
            });
        }
        // Mixed-radix increment over (m + 1)^n assignments.
        let mut pos = 0;
        loop {
            if pos == n {
                return (best.routes, best.objective);
            }
            assignment[pos] += 1;
            if assignment[pos] <= m {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

fn has_duplicate_site(instance: &VrppInstance, mask: usize) -> bool {
    let mut ids: Vec<usize> = (0..instance.num_sites())
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| instance.sites[i].id)
        .collect();
    ids.sort_unstable();
    ids.windows(2).any(|w| w[0] == w[1])
}

/// Cleaning: per-vehicle independent subset choice under its capacity.
fn exact_cleaning(
    instance: &VrppInstance,
    tours: &[(f64, Vec<usize>)],
) -> (Vec<Vec<usize>>, f64) {
    let n = instance.num_sites();
    let masks = 1usize << n;
    let mut value = vec![0.0; masks];
    let mut demand = vec![0.0; masks];
    for mask in 1..masks {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        value[mask] = value[rest] + instance.sites[low].value;
        demand[mask] = demand[rest] + instance.sites[low].demand;
    }
    let mut routes = Vec::with_capacity(instance.fleet.len());
    let mut objective = 0.0;
    for vehicle in &instance.fleet {
        let mut best = Best {
            objective: 0.0,
            visits: 0,
            routes: vec![Vec::new()],
        };
        for mask in 0..masks {
            if demand[mask] > vehicle.capacity {
                continue;
            }
            let obj = value[mask] - instance.travel_cost * tours[mask].0;
            best.consider(obj, mask.count_ones() as usize, || vec![tours[mask].1.clone()]);
        }
        objective += best.objective;
        routes.push(best.routes.remove(0));
    }
    (routes, objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vrpp::{build_instance, validate_solution, Vehicle, VisitValue};
    use crate::env::SiteGeometry;

    fn geometry(positions: &[[f64; 2]]) -> Vec<SiteGeometry> {
        positions
            .iter()
            .enumerate()
            .map(|(id, &position)| SiteGeometry {
                id,
                position,
                depot_distance: crate::env::distance(position, [0.0, 0.0]),
            })
            .collect()
    }

    #[test]
    fn empty_instance_yields_empty_optimum() {
        let inst = build_instance(
            &[],
            &geometry(&[]),
            vec![Vehicle { max_distance: 1.5, capacity: f64::INFINITY }],
            VrppMode::Sensing,
            1.0,
        )
        .unwrap();
        let sol = solve_exact(&inst, 8).unwrap();
        assert_eq!(sol.routes, vec![Vec::<usize>::new()]);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn budget_forces_single_profitable_site() {
        // A at 0.1 km (value 10) fits; B at 0.4 km (value 1) alone needs
        // 0.8 km and jointly at least 0.8 km, both over the 0.5 km budget.
        let geo = geometry(&[[0.0, 0.1], [0.0, 0.4]]);
        let values = vec![
            VisitValue { site: 0, value: 10.0, demand: 0.0 },
            VisitValue { site: 1, value: 1.0, demand: 0.0 },
        ];
        let inst = build_instance(
            &values,
            &geo,
            vec![Vehicle { max_distance: 0.5, capacity: f64::INFINITY }],
            VrppMode::Sensing,
            1.0,
        )
        .unwrap();
        let sol = solve_exact(&inst, 8).unwrap();
        assert_eq!(sol.routes, vec![vec![0]]);
        assert!((sol.objective - 9.8).abs() < 1e-12);
        assert!(validate_solution(&inst, &sol).is_empty());
    }

    #[test]
    fn profit_negative_site_is_skipped() {
        let geo = geometry(&[[0.0, 0.2]]);
        let values = vec![VisitValue { site: 0, value: 0.05, demand: 0.0 }];
        let inst = build_instance(
            &values,
            &geo,
            vec![Vehicle { max_distance: 10.0, capacity: f64::INFINITY }],
            VrppMode::Sensing,
            1.0,
        )
        .unwrap();
        let sol = solve_exact(&inst, 8).unwrap();
        assert_eq!(sol.routes, vec![Vec::<usize>::new()]);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn cleaning_duplicates_profitable_site_across_vehicles() {
        let geo = geometry(&[[0.0, 0.1]]);
        let values = vec![VisitValue { site: 0, value: 50.0, demand: 25.0 }];
        let inst = build_instance(
            &values,
            &geo,
            vec![
                Vehicle { max_distance: f64::INFINITY, capacity: 100.0 },
                Vehicle { max_distance: f64::INFINITY, capacity: 100.0 },
            ],
            VrppMode::Cleaning,
            1.0,
        )
        .unwrap();
        let sol = solve_exact(&inst, 8).unwrap();
        assert_eq!(sol.routes, vec![vec![0], vec![0]]);
        assert!((sol.objective - (2.0 * (50.0 - 0.2))).abs() < 1e-12);
    }

    #[test]
    fn size_guard_rejects_large_instances() {
        let positions: Vec<[f64; 2]> = (0..9).map(|i| [0.01 * i as f64, 0.0]).collect();
        let geo = geometry(&positions);
        let values: Vec<VisitValue> = (0..9)
            .map(|site| VisitValue { site, value: 1.0, demand: 0.0 })
            .collect();
        let inst = build_instance(
            &values,
            &geo,
            vec![Vehicle { max_distance: 10.0, capacity: f64::INFINITY }],
            VrppMode::Sensing,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            solve_exact(&inst, 8),
            Err(Error::TooLarge { sites: 9, limit: 8 })
        ));
    }

    #[test]
    fn zero_value_site_cannot_change_the_optimum() {
        let geo = geometry(&[[0.0, 0.1], [0.0, -0.2]]);
        let with = vec![
            VisitValue { site: 0, value: 10.0, demand: 0.0 },
            VisitValue { site: 1, value: 0.0, demand: 0.0 },
        ];
        let without = vec![VisitValue { site: 0, value: 10.0, demand: 0.0 }];
        let fleet = || vec![Vehicle { max_distance: 3.0, capacity: f64::INFINITY }];
        let a = solve_exact(
            &build_instance(&with, &geo, fleet(), VrppMode::Sensing, 1.0).unwrap(),
            8,
        )
        .unwrap();
        let b = solve_exact(
            &build_instance(&without, &geo, fleet(), VrppMode::Sensing, 1.0).unwrap(),
            8,
        )
        .unwrap();
        assert_eq!(a.objective, b.objective);
    }
}
