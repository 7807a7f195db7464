//! Matches four idle drivers to three waiting riders on a small grid and
//! prints the pickups chosen.
//!
//!     cargo run --example trip_matching

use ridesense::domain::{
    Driver, DriverId, DriverKind, Geometry, Location, Metric, Params, RiderId, TripRequest, ZoneGrid,
};
use ridesense::pricing::ZoneStats;
use ridesense::trip_matching::{build_candidate_edges, match_edges};

fn at(x: f64, y: f64) -> Location {
    Location::new(x, y).expect("finite")
}

fn main() {
    let p = Params::default();
    let geometry = Geometry { grid: ZoneGrid::new(6.0, 6.0, 3, 3).expect("valid grid"), metric: Metric::Manhattan };
    // busy zones everywhere: low cruising cost, every rider is worth serving
    let stats: Vec<ZoneStats> = (0..9)
        .map(|z| ZoneStats { zone: ridesense::domain::ZoneId(z), expected_requests: 12.0, expected_taxis: 3.0 })
        .collect();

    let drivers = [
        Driver::new(DriverId(0), DriverKind::TypeA, at(1.0, 1.0)),
        Driver::new(DriverId(1), DriverKind::TypeA, at(2.5, 1.2)),
        Driver::new(DriverId(2), DriverKind::TypeB, at(4.0, 4.0)),
        Driver::new(DriverId(3), DriverKind::TypeA, at(5.8, 0.2)),
    ];
    let riders = [
        TripRequest::new(RiderId(0), 0, at(1.5, 1.0), at(4.5, 5.0), 7.0, &p, 600),
        TripRequest::new(RiderId(1), 0, at(2.0, 1.5), at(0.5, 0.5), 2.5, &p, 600),
        TripRequest::new(RiderId(2), 0, at(3.8, 4.6), at(3.0, 2.0), 3.4, &p, 600),
    ];

    let edges = build_candidate_edges(&drivers, &riders, &stats, &p, &geometry);
    println!("{} feasible edges (pickup <= {} km):", edges.len(), p.max_pickup_km);
    for e in &edges {
        println!("  {} -> {}: pickup {:.2} km, saving {:.2} km", e.driver, e.rider, e.pickup_km, e.saved_km);
    }
    let m = match_edges(&edges);
    println!("matched {} riders, total pickup {:.2} km", m.len(), m.total_pickup_km());
    for e in &m.pairs {
        println!("  {} picks up {}", e.driver, e.rider);
    }
}
