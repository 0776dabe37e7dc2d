//! GRASP-style heuristic: greedy randomized value-per-marginal-cost
//! insertion, then local search over add, drop, relocate, swap, and
//! intra-route 2-opt, restarted until the budget is exhausted.
//!
//! The first restart constructs purely greedily, so the final objective is
//! never below the pure-greedy construction's. All scans run in fixed index
//! order and accept strictly better moves only, making the result a
//! deterministic function of (instance, seed, budget).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{VrppInstance, VrppMode, VrppSolution};

/// Minimum objective gain for a move to count as improving.
const GAIN_MARGIN: f64 = 1e-9;

/// Candidates considered by the randomized construction's restricted list.
const RCL_SIZE: usize = 3;

/// Feasible solution by randomized construction plus local search.
/// `budget` counts construction restarts; at least one always runs.
pub fn solve_heuristic(
    instance: &VrppInstance,
    rng: &mut ChaCha8Rng,
    budget: u32,
) -> VrppSolution {
    let restarts = budget.max(1);
    let mut best: Option<(f64, usize, Vec<Vec<usize>>)> = None;
    for restart in 0..restarts {
        let mut search = Search::new(instance);
        if restart == 0 {
            search.construct(None);
        } else {
            search.construct(Some(rng));
        }
        search.improve();
        let objective = search.objective();
        let visits: usize = search.routes.iter().map(|r| r.len()).sum();
        let routes_ids: Vec<Vec<usize>> = search
            .routes
            .iter()
            .map(|r| r.iter().map(|&n| instance.sites[n - 1].id).collect())
            .collect();
        let better = match &best {
            None => true,
            Some((obj, v, routes)) => {
                objective > obj + 1e-12
                    || ((objective - obj).abs() <= 1e-12
                        && (visits < *v || (visits == *v && routes_ids < *routes)))
            }
        };
        if better {
            best = Some((objective, visits, routes_ids));
        }
    }
    let (objective, _, routes) = best.unwrap();
    VrppSolution { routes, objective }
}

/// One candidate move with its objective gain.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    Add { node: usize, vehicle: usize, pos: usize },
    Drop { vehicle: usize, pos: usize },
    /// Replace the visit at `pos` with an unvisited `node`, same slot.
    Replace { vehicle: usize, pos: usize, node: usize },
    Relocate { from: usize, pos: usize, to: usize, to_pos: usize },
    Swap { v1: usize, p1: usize, v2: usize, p2: usize },
    TwoOpt { vehicle: usize, i: usize, j: usize },
}

struct Search<'a> {
    inst: &'a VrppInstance,
    routes: Vec<Vec<usize>>,
    route_len: Vec<f64>,
    route_demand: Vec<f64>,
    /// Sensing: vehicle currently visiting each node, if any.
    assigned: Vec<Option<usize>>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a VrppInstance) -> Self {
        let m = inst.fleet.len();
        Self {
            inst,
            routes: vec![Vec::new(); m],
            route_len: vec![0.0; m],
            route_demand: vec![0.0; m],
            assigned: vec![None; inst.num_sites() + 1],
        }
    }

    fn objective(&self) -> f64 {
        let mut total = 0.0;
        for (v, route) in self.routes.iter().enumerate() {
            let value: f64 = route.iter().map(|&n| self.inst.sites[n - 1].value).sum();
            total += value - self.inst.travel_cost * self.route_len[v];
        }
        total
    }

    fn refresh_route(&mut self, v: usize) {
        self.route_len[v] = self.inst.route_length(&self.routes[v]);
        self.route_demand[v] = self.routes[v]
            .iter()
            .map(|&n| self.inst.sites[n - 1].demand)
            .sum();
    }

    fn node_value(&self, node: usize) -> f64 {
        self.inst.sites[node - 1].value
    }

    fn node_demand(&self, node: usize) -> f64 {
        self.inst.sites[node - 1].demand
    }

    fn node_site(&self, node: usize) -> usize {
        self.inst.sites[node - 1].id
    }

    /// Does route `v` already stop at the site `node` belongs to? Distinct
    /// nodes may share a site id (visit slots); one stop per site per route.
    fn route_has_site(&self, v: usize, site: usize, skip_pos: Option<usize>) -> bool {
        self.routes[v]
            .iter()
            .enumerate()
            .any(|(p, &n)| Some(p) != skip_pos && self.node_site(n) == site)
    }

    /// May `node` be inserted into route `v` at all?
    fn insertable(&self, node: usize, v: usize) -> bool {
        if self.inst.unique_visits() && self.assigned[node].is_some() {
            return false;
        }
        !self.route_has_site(v, self.node_site(node), None)
    }

    /// Distance delta of inserting `node` before position `pos` of route `v`.
    fn insertion_delta(&self, node: usize, v: usize, pos: usize) -> f64 {
        let route = &self.routes[v];
        let prev = if pos == 0 { 0 } else { route[pos - 1] };
        let next = if pos == route.len() { 0 } else { route[pos] };
        self.inst.node_distance(prev, node) + self.inst.node_distance(node, next)
            - self.inst.node_distance(prev, next)
    }

    /// Distance saved by removing position `pos` of route `v`.
    fn removal_saving(&self, v: usize, pos: usize) -> f64 {
        let route = &self.routes[v];
        let node = route[pos];
        let prev = if pos == 0 { 0 } else { route[pos - 1] };
        let next = if pos + 1 == route.len() { 0 } else { route[pos + 1] };
        self.inst.node_distance(prev, node) + self.inst.node_distance(node, next)
            - self.inst.node_distance(prev, next)
    }

    /// Cheapest feasible insertion slot for `node` in route `v`.
    fn best_insertion(&self, node: usize, v: usize) -> Option<(usize, f64)> {
        if self.inst.mode == VrppMode::Cleaning
            && self.route_demand[v] + self.node_demand(node)
                > self.inst.fleet[v].capacity
        {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for pos in 0..=self.routes[v].len() {
            let delta = self.insertion_delta(node, v, pos);
            if self.route_len[v] + delta > self.inst.fleet[v].max_distance {
                continue;
            }
            if best.map(|(_, d)| delta < d).unwrap_or(true) {
                best = Some((pos, delta));
            }
        }
        best
    }

    /// Greedy (optionally randomized) insertion by value per marginal cost.
    fn construct(&mut self, mut rng: Option<&mut ChaCha8Rng>) {
        loop {
            // (ratio, node, vehicle, pos) for every positive-gain insertion.
            let mut candidates: Vec<(f64, usize, usize, usize)> = Vec::new();
            for node in 1..=self.inst.num_sites() {
                for v in 0..self.inst.fleet.len() {
                    if !self.insertable(node, v) {
                        continue;
                    }
                    if let Some((pos, delta)) = self.best_insertion(node, v) {
                        let gain = self.node_value(node) - self.inst.travel_cost * delta;
                        if gain > GAIN_MARGIN {
                            let ratio =
                                self.node_value(node) / (self.inst.travel_cost * delta + 1e-9);
                            candidates.push((ratio, node, v, pos));
                        }
                    }
                }
            }
            if candidates.is_empty() {
                return;
            }
            candidates.sort_by(|a, b| {
                b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
            });
            let pick = match rng.as_deref_mut() {
                None => 0,
                Some(r) => r.gen_range(0..candidates.len().min(RCL_SIZE)),
            };
            let (_, node, v, pos) = candidates[pick];
            self.apply(Move::Add { node, vehicle: v, pos });
        }
    }

    /// Best-improvement local search to a fixed point.
    fn improve(&mut self) {
        // Generous cap; fixed points arrive in far fewer passes.
        for _ in 0..10_000 {
            match self.best_move() {
                Some((mv, _)) => self.apply(mv),
                None => return,
            }
        }
    }

    fn best_move(&self) -> Option<(Move, f64)> {
        let mut best: Option<(Move, f64)> = None;
        let consider = |mv: Move, gain: f64, best: &mut Option<(Move, f64)>| {
            if gain > GAIN_MARGIN && best.map(|(_, g)| gain > g).unwrap_or(true) {
                *best = Some((mv, gain));
            }
        };
        let c = self.inst.travel_cost;
        let m = self.inst.fleet.len();

        // Add an unvisited site.
        for node in 1..=self.inst.num_sites() {
            for v in 0..m {
                if !self.insertable(node, v) {
                    continue;
                }
                if let Some((pos, delta)) = self.best_insertion(node, v) {
                    let gain = self.node_value(node) - c * delta;
                    consider(Move::Add { node, vehicle: v, pos }, gain, &mut best);
                }
            }
        }
        // Drop a visited site.
        for v in 0..m {
            for pos in 0..self.routes[v].len() {
                let node = self.routes[v][pos];
                let gain = c * self.removal_saving(v, pos) - self.node_value(node);
                consider(Move::Drop { vehicle: v, pos }, gain, &mut best);
            }
        }
        // Replace a visit with an unvisited site in the same slot. This is
        // the only exchange available to a route pinned at its capacity.
        for v in 0..m {
            for pos in 0..self.routes[v].len() {
                let old = self.routes[v][pos];
                for node in 1..=self.inst.num_sites() {
                    if node == old
                        || (self.inst.unique_visits() && self.assigned[node].is_some())
                        || self.route_has_site(v, self.node_site(node), Some(pos))
                    {
                        continue;
                    }
                    if let Some(gain) = self.replace_gain(v, pos, node) {
                        consider(Move::Replace { vehicle: v, pos, node }, gain, &mut best);
                    }
                }
            }
        }
        // Relocate a visit to another slot.
        for from in 0..m {
            for pos in 0..self.routes[from].len() {
                let node = self.routes[from][pos];
                let saving = self.removal_saving(from, pos);
                for to in 0..m {
                    if to == from {
                        // Same-route relocation with disjoint arcs only;
                        // adjacent slots are covered by swap/2-opt.
                        for to_pos in 0..=self.routes[from].len() {
                            if to_pos >= pos && to_pos <= pos + 2 {
                                continue;
                            }
                            let delta = self.insertion_delta(node, from, to_pos);
                            if self.route_len[from] - saving + delta
                                > self.inst.fleet[from].max_distance
                            {
                                continue;
                            }
                            let gain = c * (saving - delta);
                            consider(
                                Move::Relocate { from, pos, to, to_pos },
                                gain,
                                &mut best,
                            );
                        }
                        continue;
                    }
                    if self.route_has_site(to, self.node_site(node), None) {
                        continue;
                    }
                    if self.inst.mode == VrppMode::Cleaning
                        && self.route_demand[to] + self.node_demand(node)
                            > self.inst.fleet[to].capacity
                    {
                        continue;
                    }
                    for to_pos in 0..=self.routes[to].len() {
                        let delta = self.insertion_delta(node, to, to_pos);
                        if self.route_len[to] + delta
                            > self.inst.fleet[to].max_distance
                        {
                            continue;
                        }
                        let gain = c * (saving - delta);
                        consider(Move::Relocate { from, pos, to, to_pos }, gain, &mut best);
                    }
                }
            }
        }
        // Swap two visits between distinct routes.
        for v1 in 0..m {
            for p1 in 0..self.routes[v1].len() {
                for v2 in (v1 + 1)..m {
                    for p2 in 0..self.routes[v2].len() {
                        if let Some(gain) = self.swap_gain(v1, p1, v2, p2) {
                            consider(Move::Swap { v1, p1, v2, p2 }, gain, &mut best);
                        }
                    }
                }
            }
        }
        // Reverse a segment within a route.
        for v in 0..m {
            let route = &self.routes[v];
            for i in 0..route.len() {
                for j in (i + 1)..route.len() {
                    let a = if i == 0 { 0 } else { route[i - 1] };
                    let b = if j + 1 == route.len() { 0 } else { route[j + 1] };
                    let delta = self.inst.node_distance(a, route[j])
                        + self.inst.node_distance(route[i], b)
                        - self.inst.node_distance(a, route[i])
                        - self.inst.node_distance(route[j], b);
                    consider(Move::TwoOpt { vehicle: v, i, j }, -c * delta, &mut best);
                }
            }
        }
        best
    }

    fn replace_gain(&self, v: usize, pos: usize, node: usize) -> Option<f64> {
        let old = self.routes[v][pos];
        if self.inst.mode == VrppMode::Cleaning
            && self.route_demand[v] - self.node_demand(old) + self.node_demand(node)
                > self.inst.fleet[v].capacity
        {
            return None;
        }
        let route = &self.routes[v];
        let prev = if pos == 0 { 0 } else { route[pos - 1] };
        let next = if pos + 1 == route.len() { 0 } else { route[pos + 1] };
        let arc_delta = self.inst.node_distance(prev, node) + self.inst.node_distance(node, next)
            - self.inst.node_distance(prev, old)
            - self.inst.node_distance(old, next);
        if self.route_len[v] + arc_delta > self.inst.fleet[v].max_distance {
            return None;
        }
        Some(self.node_value(node) - self.node_value(old) - self.inst.travel_cost * arc_delta)
    }

    fn swap_gain(&self, v1: usize, p1: usize, v2: usize, p2: usize) -> Option<f64> {
        let n1 = self.routes[v1][p1];
        let n2 = self.routes[v2][p2];
        if n1 == n2 || self.node_site(n1) == self.node_site(n2) {
            return None;
        }
        if self.route_has_site(v2, self.node_site(n1), Some(p2))
            || self.route_has_site(v1, self.node_site(n2), Some(p1))
        {
            return None;
        }
        if self.inst.mode == VrppMode::Cleaning {
            let d1 = self.route_demand[v1] - self.node_demand(n1) + self.node_demand(n2);
            let d2 = self.route_demand[v2] - self.node_demand(n2) + self.node_demand(n1);
            if d1 > self.inst.fleet[v1].capacity
                || d2 > self.inst.fleet[v2].capacity
            {
                return None;
            }
        }
        let arc_delta = |v: usize, p: usize, old: usize, new: usize| -> f64 {
            let route = &self.routes[v];
            let prev = if p == 0 { 0 } else { route[p - 1] };
            let next = if p + 1 == route.len() { 0 } else { route[p + 1] };
            self.inst.node_distance(prev, new) + self.inst.node_distance(new, next)
                - self.inst.node_distance(prev, old)
                - self.inst.node_distance(old, next)
        };
        let delta1 = arc_delta(v1, p1, n1, n2);
        let delta2 = arc_delta(v2, p2, n2, n1);
        if self.route_len[v1] + delta1 > self.inst.fleet[v1].max_distance
            || self.route_len[v2] + delta2 > self.inst.fleet[v2].max_distance
        {
            return None;
        }
        Some(-self.inst.travel_cost * (delta1 + delta2))
    }

    fn apply(&mut self, mv: Move) {
        match mv {
            Move::Add { node, vehicle, pos } => {
                self.routes[vehicle].insert(pos, node);
                self.assigned[node] = Some(vehicle);
                self.refresh_route(vehicle);
            }
            Move::Drop { vehicle, pos } => {
                let node = self.routes[vehicle].remove(pos);
                self.assigned[node] = None;
                self.refresh_route(vehicle);
            }
            Move::Replace { vehicle, pos, node } => {
                let old = self.routes[vehicle][pos];
                self.routes[vehicle][pos] = node;
                self.assigned[old] = None;
                self.assigned[node] = Some(vehicle);
                self.refresh_route(vehicle);
            }
            Move::Relocate { from, pos, to, to_pos } => {
                let node = self.routes[from].remove(pos);
                let to_pos = if from == to && to_pos > pos { to_pos - 1 } else { to_pos };
                self.routes[to].insert(to_pos, node);
                self.assigned[node] = Some(to);
                self.refresh_route(from);
                if to != from {
                    self.refresh_route(to);
                }
            }
            Move::Swap { v1, p1, v2, p2 } => {
                let n1 = self.routes[v1][p1];
                let n2 = self.routes[v2][p2];
                self.routes[v1][p1] = n2;
                self.routes[v2][p2] = n1;
                self.assigned[n1] = Some(v2);
                self.assigned[n2] = Some(v1);
                self.refresh_route(v1);
                self.refresh_route(v2);
            }
            Move::TwoOpt { vehicle, i, j } => {
                self.routes[vehicle][i..=j].reverse();
                self.refresh_route(vehicle);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SiteGeometry;
    use crate::rng::{substream, Stream};
    use crate::vrpp::{
        build_instance, objective_value, solve_exact, validate_solution, Vehicle, VisitValue,
    };
    use rand::Rng;

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

    fn random_instance(seed: u64, n: usize, mode: VrppMode) -> VrppInstance {
        let mut rng = substream(seed, Stream::Solver);
        let positions: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)])
            .collect();
        let geo = geometry(&positions);
        let values: Vec<VisitValue> = (0..n)
            .map(|site| {
                let mean: f64 = rng.gen_range(0.0..200.0);
                match mode {
                    VrppMode::Sensing => VisitValue {
                        site,
                        value: rng.gen_range(0.0..400.0),
                        demand: 0.0,
                    },
                    VrppMode::Cleaning => {
                        let removable = mean.min(25.0);
                        VisitValue { site, value: mean * removable, demand: removable }
                    }
                }
            })
            .collect();
        let fleet = match mode {
            VrppMode::Sensing => vec![
                Vehicle { max_distance: 1.5, capacity: f64::INFINITY };
                rng.gen_range(1..=3)
            ],
            VrppMode::Cleaning => vec![
                Vehicle { max_distance: f64::INFINITY, capacity: 100.0 };
                rng.gen_range(1..=3)
            ],
        };
        build_instance(&values, &geo, fleet, mode, 1.0).unwrap()
    }

    #[test]
    fn heuristic_is_deterministic_for_fixed_seed() {
        let inst = random_instance(11, 20, VrppMode::Sensing);
        let a = solve_heuristic(&inst, &mut substream(5, Stream::Solver), 8);
        let b = solve_heuristic(&inst, &mut substream(5, Stream::Solver), 8);
        assert_eq!(a, b);
    }

    #[test]
    fn heuristic_solutions_are_always_feasible() {
        for seed in 0..30 {
            for &mode in &[VrppMode::Sensing, VrppMode::Cleaning] {
                let inst = random_instance(seed, 15, mode);
                let sol = solve_heuristic(&inst, &mut substream(seed, Stream::Solver), 4);
                let report = validate_solution(&inst, &sol);
                assert!(report.is_empty(), "seed {seed} {mode:?}: {report:?}");
                let obj = objective_value(&inst, &sol).unwrap();
                assert!((obj - sol.objective).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn heuristic_never_beats_exact_and_usually_matches() {
        let mut matches = 0;
        let total = 60;
        for seed in 0..total {
            let mode = if seed % 2 == 0 { VrppMode::Sensing } else { VrppMode::Cleaning };
            let n = 3 + (seed as usize % 6);
            let inst = random_instance(seed + 1000, n, mode);
            let exact = solve_exact(&inst, 8).unwrap();
            let heur = solve_heuristic(&inst, &mut substream(seed, Stream::Solver), 12);
            assert!(
                heur.objective <= exact.objective + 1e-9,
                "seed {seed}: heuristic {} exceeds exact {}",
                heur.objective,
                exact.objective
            );
            if (heur.objective - exact.objective).abs() <= 1e-9 {
                matches += 1;
            }
        }
        assert!(matches * 100 >= total * 95, "only {matches}/{total} matched");
    }

    #[test]
    fn final_solution_is_add_and_drop_optimal() {
        let inst = random_instance(77, 18, VrppMode::Sensing);
        let sol = solve_heuristic(&inst, &mut substream(7, Stream::Solver), 6);
        let mut search = Search::new(&inst);
        for (v, route) in sol.routes.iter().enumerate() {
            for &id in route {
                let node = inst.node_of(id).unwrap();
                let pos = search.routes[v].len();
                search.apply(Move::Add { node, vehicle: v, pos });
            }
        }
        // No single add or drop may still carry a positive gain.
        for node in 1..=inst.num_sites() {
            for v in 0..inst.fleet.len() {
                if !search.insertable(node, v) {
                    continue;
                }
                if let Some((_, delta)) = search.best_insertion(node, v) {
                    let gain = search.node_value(node) - inst.travel_cost * delta;
                    assert!(gain <= 1e-6, "addable node {node} with gain {gain}");
                }
            }
        }
        for v in 0..inst.fleet.len() {
            for pos in 0..search.routes[v].len() {
                let node = search.routes[v][pos];
                let gain =
                    inst.travel_cost * search.removal_saving(v, pos) - search.node_value(node);
                assert!(gain <= 1e-6, "droppable node {node} with gain {gain}");
            }
        }
    }

    #[test]
    fn large_instance_solves_quickly_and_feasibly() {
        let inst = random_instance(3, 50, VrppMode::Sensing);
        let start = std::time::Instant::now();
        let sol = solve_heuristic(&inst, &mut substream(3, Stream::Solver), 8);
        assert!(start.elapsed().as_secs_f64() < 1.0);
        assert!(validate_solution(&inst, &sol).is_empty());
        assert!(sol.objective > 0.0);
    }
}
