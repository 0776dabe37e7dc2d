// scratch diagnostic — per-round capacity accounting
use hazard_dispatch::config::{preset, Strategy};
use hazard_dispatch::dispatch::Episode;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario = args.get(1).map(|s| s.as_str()).unwrap_or("scenario3");
    let strat = args.get(2).map(|s| s.as_str()).unwrap_or("oracle");
    let mut config = preset(scenario).unwrap();
    config.strategy = match strat {
        "oracle" => Strategy::Oracle,
        "bucb" => Strategy::Bucb,
        "random" => Strategy::Random,
        _ => Strategy::RoundRobin,
    };
    config.seed = 0;
    let capacity = config.vehicles.ugv_capacity * config.num_ugvs as f64;
    let mut ep = Episode::new(config).unwrap();
    println!("round | planned  actual   waste | capacity | total_H  targets dup_sites");
    while !ep.terminated() {
        let rec = ep.run_round().unwrap();
        let planned: f64 = rec.cleaning_visits.iter().map(|v| v.planned_removal).sum();
        let actual = rec.removed_this_round;
        let total_h: f64 = rec.hazard_start.iter().sum();
        let mut per_site = std::collections::BTreeMap::new();
        for v in &rec.cleaning_visits {
            *per_site.entry(v.site).or_insert(0usize) += 1;
        }
        let dups = per_site.values().filter(|&&c| c > 1).count();
        println!(
            "{:>5} | {:>7.1} {:>7.1} {:>7.1} | {:>8.0} | {:>8.1} {:>7} {:>6}",
            rec.round, planned, actual, planned - actual, capacity, total_h,
            per_site.len(), dups
        );
    }
}
