// scratch diagnostic — scenario reproduction check
use hazard_dispatch::config::{preset, Strategy};
use hazard_dispatch::report::{replicate, Report};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario = args.get(1).map(|s| s.as_str()).unwrap_or("scenario1");
    let n_seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20);
    let base = preset(scenario).unwrap();
    let seeds: Vec<u64> = (0..n_seeds).collect();
    let strategies = [Strategy::Oracle, Strategy::Bucb, Strategy::Random, Strategy::RoundRobin];
    let t0 = std::time::Instant::now();
    let outcomes = replicate(&base, &strategies, &seeds).unwrap();
    let report = Report::build(&outcomes);
    println!("{scenario} over {n_seeds} seeds in {:.1}s", t0.elapsed().as_secs_f64());
    for agg in &report.aggregates {
        println!(
            "  {:<12} T_end {:>6.2} +- {:>5.2}  cumul {:>9.2}  rate {:>7.2}  mae {:>6.3}",
            agg.strategy.to_string(),
            agg.termination_round.mean, agg.termination_round.std,
            agg.cumulative_hazard.mean, agg.cleaning_rate.mean, agg.final_mae.mean,
        );
    }
    let capped = report.rows.iter().filter(|r| r.termination_round >= 50).count();
    println!("  runs at the 50-round cap: {capped}");
}
