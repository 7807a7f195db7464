//! Two simulated hours of a 140-vehicle fleet with 80 sensing tasks, printing
//! every plan cycle's auction and the final indicators.
//!
//!     cargo run --release --example simulate -- [vcg|rbc] [seed]

use ridesense::auction::Mechanism;
use ridesense::scenario::{generate_synthetic, ScenarioConfig};
use ridesense::simulator::run;

fn main() {
    let mut args = std::env::args().skip(1);
    let mechanism: Mechanism = args.next().map(|s| s.parse().expect("vcg or rbc")).unwrap_or(Mechanism::Rbc);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let cfg = ScenarioConfig { seed, ..Default::default() };
    let scenario = generate_synthetic(&cfg).expect("default config is valid");
    println!(
        "{} riders, {} type-A + {} type-B drivers, {} tasks, depot at ({:.1}, {:.1})",
        scenario.requests.len(),
        cfg.n_type_a,
        cfg.n_type_b,
        scenario.tasks.len(),
        scenario.depot.x,
        scenario.depot.y
    );

    let report = run(&scenario, mechanism, seed).expect("run completes");
    println!("cycle released assigned    theta  omega_t objective");
    for c in report.cycles.iter().filter(|c| c.released > 0) {
        let omega = c.omega_t.map(|o| format!("{o:8.2}")).unwrap_or_else(|| "       -".into());
        println!("{:5} {:8} {:8} {:8.2} {omega} {:9.2}", c.cycle, c.released, c.assigned, c.theta, c.objective);
    }
    let a = &report.aggregates;
    let t = &report.totals;
    println!("{mechanism}: SS {:.2}, RB {:.2}, CR {:.3}", a.ss, a.rb, a.cr);
    println!(
        "riders: {} of {} matched (ATR {:.3}), mean wait {:.1} s",
        t.riders_matched, t.riders_released, a.atr, a.awt_s
    );
    println!("mean earnings: type-A {:.2}, type-B {:.2}", a.ap_a, a.ap_b);
}
