//! Runs every property suite on random instances and prints a summary.
//!
//!     cargo run --release --example verify_properties -- 300

use ridesense::auction::Mechanism;
use ridesense::domain::Params;
use ridesense::verify::{run_suite, Suite};

fn main() {
    let instances = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let p = Params::default();
    for suite in Suite::ALL {
        let report = run_suite(suite, instances, 7, &p);
        println!(
            "{suite:>6}: {} checks, {} violations{}{}",
            report.checks,
            report.violations.len(),
            report.max_budget_ratio.map(|r| format!(", max spend/budget {r:.3}")).unwrap_or_default(),
            report.max_ic_gain.map(|g| format!(", max deviation gain {g}")).unwrap_or_default(),
        );
        for mechanism in [Mechanism::Vcg, Mechanism::Rbc] {
            let mut found = report.violations_for(mechanism);
            if let Some(v) = found.next() {
                println!("        {mechanism}: {} violations, e.g. #{}: {}", 1 + found.count(), v.instance, v.detail);
            }
        }
    }
}
