//! Replays a trip-record file instead of synthetic demand.
//!
//!     cargo run --release --example load_trips -- trips.csv
//!
//! The file needs the header `release_s,pu_zone,do_zone,distance_km`. Without
//! an argument a small file is written to a temporary directory first.

use std::path::PathBuf;

use ridesense::auction::Mechanism;
use ridesense::scenario::{generate_synthetic, read_trip_records, ScenarioConfig};
use ridesense::simulator::run;

fn demo_file() -> PathBuf {
    let path = std::env::temp_dir().join("ridesense_demo_trips.csv");
    let mut body = String::from("release_s,pu_zone,do_zone,distance_km\n");
    for i in 0..1200u32 {
        let pu = 16 + (i * 7) % 16;
        let dz = 16 + (pu + 3 + i % 7) % 16;
        body.push_str(&format!("{},{pu},{dz},{:.1}\n", i * 6, 1.0 + (i % 50) as f64 / 10.0));
    }
    body.push_str("7000,3,99,2.0\n");
    std::fs::write(&path, body).expect("temp dir is writable");
    path
}

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(demo_file);
    let cfg = ScenarioConfig { trip_file: Some(path.clone()), ..Default::default() };

    let file = match read_trip_records(&path, &cfg.grid) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    println!("{}: {} trips, {} rejected rows", path.display(), file.records.len(), file.rejected.len());
    for r in &file.rejected {
        println!("  line {}: {}", r.line, r.reason);
    }

    let scenario = generate_synthetic(&cfg).expect("trip file already validated");
    for mechanism in [Mechanism::Vcg, Mechanism::Rbc] {
        let a = run(&scenario, mechanism, cfg.seed).expect("run completes").aggregates;
        println!("{mechanism}: ATR {:.3}, AWT {:.1} s, CR {:.3}, SS {:.2}, RB {:.2}", a.atr, a.awt_s, a.cr, a.ss, a.rb);
    }
}
