//! Both mechanisms on the same scenarios, averaged over seeds.
//!
//!     cargo run --release --example compare_mechanisms -- [low|high] [n_type_a] [n_type_b] [seeds]

use rayon::prelude::*;
use ridesense::auction::Mechanism;
use ridesense::scenario::{generate_synthetic, DemandLevel, ScenarioConfig};
use ridesense::simulator::{run, Aggregates};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let demand = match args.first().map(String::as_str) {
        Some("high") => DemandLevel::High,
        _ => DemandLevel::Low,
    };
    let arg = |i: usize, default: usize| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (n_type_a, n_type_b, seeds) = (arg(1, 120), arg(2, 20), arg(3, 5) as u64);

    println!("{demand:?} demand, {n_type_a} type-A, {n_type_b} type-B, {seeds} seeds");
    println!("{:>4} {:>9} {:>9} {:>6} {:>7} {:>6} {:>8} {:>8}", "mech", "SS", "RB", "CR", "AWT", "ATR", "AP-A", "AP-B");
    for mechanism in [Mechanism::Vcg, Mechanism::Rbc] {
        let runs: Vec<Aggregates> = (0..seeds)
            .into_par_iter()
            .map(|seed| {
                let cfg = ScenarioConfig { n_type_a, n_type_b, demand_level: demand, seed, ..Default::default() };
                let scenario = generate_synthetic(&cfg).expect("valid config");
                run(&scenario, mechanism, seed).expect("run completes").aggregates
            })
            .collect();
        let avg = |f: fn(&Aggregates) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
        println!(
            "{:>4} {:>9.1} {:>9.1} {:>6.3} {:>7.1} {:>6.3} {:>8.1} {:>8.1}",
            mechanism.to_string(),
            avg(|a| a.ss),
            avg(|a| a.rb),
            avg(|a| a.cr),
            avg(|a| a.awt_s),
            avg(|a| a.atr),
            avg(|a| a.ap_a),
            avg(|a| a.ap_b),
        );
    }
}
