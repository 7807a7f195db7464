//! Driver–rider assignment for one matching interval.
//!
//! Every feasible pair is weighted by its saved pickup distance
//! `σ = L_max − L`, where `L_max` is the largest pickup distance among the
//! surviving edges. Maximising Σσ is the same as minimising total pickup
//! distance plus `L_max` per unserved rider, so both readings of the problem
//! give the same matching.

use serde::{Deserialize, Serialize};

use crate::domain::{Driver, DriverId, Geometry, Params, RiderId, TripRequest};
use crate::hungarian::max_weight_matching;
use crate::money::Money;
use crate::pricing::{trip_margin, ZoneStats};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateEdge {
    pub driver: DriverId,
    pub rider: RiderId,
    pub pickup_km: f64,
    pub saved_km: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<CandidateEdge>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Σσ over the matched pairs.
    pub fn total_weight(&self) -> f64 {
        self.pairs.iter().map(|e| e.saved_km).sum()
    }

    pub fn total_pickup_km(&self) -> f64 {
        self.pairs.iter().map(|e| e.pickup_km).sum()
    }

    pub fn driver_of(&self, rider: RiderId) -> Option<DriverId> {
        self.pairs.iter().find(|e| e.rider == rider).map(|e| e.driver)
    }

    pub fn rider_of(&self, driver: DriverId) -> Option<RiderId> {
        self.pairs.iter().find(|e| e.driver == driver).map(|e| e.rider)
    }

    pub fn ids(&self) -> Vec<(DriverId, RiderId)> {
        self.pairs.iter().map(|e| (e.driver, e.rider)).collect()
    }
}

/// Whether the platform earns a non-negative margin on this rider. Does not
/// depend on which driver serves the trip.
pub fn rider_is_profitable(rider: &TripRequest, stats: &[ZoneStats], p: &Params, geometry: &Geometry) -> bool {
    let dest = ZoneStats::lookup(stats, geometry.zone_of(rider.destination));
    trip_margin(rider.od_distance_km, rider.od_travel_time_min, &dest, p).is_ok_and(|m| m >= Money::ZERO)
}

/// Feasible driver–rider edges ordered by (driver id, rider id).
pub fn build_candidate_edges<'a>(
    drivers: impl IntoIterator<Item = &'a Driver>,
    riders: &[TripRequest],
    stats: &[ZoneStats],
    p: &Params,
    geometry: &Geometry,
) -> Vec<CandidateEdge> {
    let mut drivers: Vec<&Driver> = drivers.into_iter().collect();
    drivers.sort_by_key(|d| d.id);
    let mut riders: Vec<&TripRequest> = riders.iter().filter(|r| rider_is_profitable(r, stats, p, geometry)).collect();
    riders.sort_by_key(|r| r.id);

    let mut edges = Vec::new();
    for d in &drivers {
        for r in &riders {
            let pickup_km = geometry.distance(d.location, r.origin);
            if pickup_km <= p.max_pickup_km {
                edges.push(CandidateEdge { driver: d.id, rider: r.id, pickup_km, saved_km: 0.0 });
            }
        }
    }
    let l_max = edges.iter().map(|e| e.pickup_km).fold(0.0, f64::max);
    for e in &mut edges {
        e.saved_km = l_max - e.pickup_km;
    }
    edges
}

/// Optimal matching over a prepared edge set.
pub fn match_edges(edges: &[CandidateEdge]) -> Matching {
    let mut drivers: Vec<DriverId> = edges.iter().map(|e| e.driver).collect();
    drivers.sort();
    drivers.dedup();
    let mut riders: Vec<RiderId> = edges.iter().map(|e| e.rider).collect();
    riders.sort();
    riders.dedup();
    if edges.is_empty() {
        return Matching::default();
    }

    let cols = riders.len();
    let mut table: Vec<Option<(i64, &CandidateEdge)>> = vec![None; drivers.len() * cols];
    let to_units = |km: f64| (km * 1e4).round() as i64;
    let l_max = edges.iter().map(|e| to_units(e.pickup_km)).max().unwrap_or(0);
    // Σσ decides; among equal Σσ the +1 per pair prefers more matches.
    let per_unit = drivers.len().min(cols) as i64 + 1;
    for e in edges {
        let r = drivers.binary_search(&e.driver).unwrap();
        let c = riders.binary_search(&e.rider).unwrap();
        table[r * cols + c] = Some(((l_max - to_units(e.pickup_km)) * per_unit + 1, e));
    }

    let chosen = max_weight_matching(drivers.len(), cols, |r, c| table[r * cols + c].map(|(w, _)| w));
    Matching { pairs: chosen.into_iter().map(|(r, c)| *table[r * cols + c].unwrap().1).collect() }
}

pub fn match_trips<'a>(
    drivers: impl IntoIterator<Item = &'a Driver>,
    riders: &[TripRequest],
    stats: &[ZoneStats],
    p: &Params,
    geometry: &Geometry,
) -> Matching {
    match_edges(&build_candidate_edges(drivers, riders, stats, p, geometry))
}
