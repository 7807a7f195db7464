//! Repairing trip matches whose driver just won a sensing task.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::domain::{Driver, DriverId, Geometry, Params, RiderId, TripRequest};
use crate::pricing::ZoneStats;
use crate::trip_matching::{CandidateEdge, Matching};

/// Everything trip matching needs at settlement time.
#[derive(Clone, Debug)]
pub struct TripContext<'a> {
    /// All idle drivers of both types.
    pub drivers: Vec<&'a Driver>,
    pub riders: &'a [TripRequest],
    pub stats: &'a [ZoneStats],
    pub params: &'a Params,
    pub geometry: &'a Geometry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "fix", content = "driver")]
pub enum TripFix {
    Reassigned(DriverId),
    Dropped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplacedTrip {
    pub rider: RiderId,
    pub old_driver: DriverId,
    pub fix: TripFix,
}

/// Hands every rider matched to a winner to the nearest idle driver that is
/// neither a winner nor already matched and is within the pickup limit
/// (ties to the smallest id). Riders without such a driver lose their match.
pub fn resolve_conflicts(
    matching: Matching,
    winners: &BTreeSet<DriverId>,
    ctx: &TripContext<'_>,
) -> (Matching, Vec<DisplacedTrip>) {
    let mut busy: BTreeSet<DriverId> = matching.pairs.iter().map(|e| e.driver).chain(winners.iter().copied()).collect();
    let mut fixes = Vec::new();
    let mut pairs = Vec::with_capacity(matching.len());
    for edge in matching.pairs {
        if !winners.contains(&edge.driver) {
            pairs.push(edge);
            continue;
        }
        let Some(rider) = ctx.riders.iter().find(|r| r.id == edge.rider) else {
            fixes.push(DisplacedTrip { rider: edge.rider, old_driver: edge.driver, fix: TripFix::Dropped });
            continue;
        };
        let substitute = ctx
            .drivers
            .iter()
            .filter(|d| !busy.contains(&d.id))
            .map(|d| (ctx.geometry.distance(d.location, rider.origin), d.id))
            .filter(|&(l, _)| l <= ctx.params.max_pickup_km)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let fix = match substitute {
            Some((pickup_km, id)) => {
                busy.insert(id);
                pairs.push(CandidateEdge {
                    driver: id,
                    rider: edge.rider,
                    pickup_km,
                    saved_km: edge.saved_km + edge.pickup_km - pickup_km,
                });
                TripFix::Reassigned(id)
            }
            None => TripFix::Dropped,
        };
        fixes.push(DisplacedTrip { rider: edge.rider, old_driver: edge.driver, fix });
    }
    pairs.sort_by_key(|e| (e.driver, e.rider));
    (Matching { pairs }, fixes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DriverKind, Location, Metric, ZoneGrid};

    fn geo() -> Geometry {
        Geometry { grid: ZoneGrid::new(10.0, 10.0, 10, 10).unwrap(), metric: Metric::Euclidean }
    }

    fn driver(id: u32, kind: DriverKind, x: f64) -> Driver {
        Driver::new(DriverId(id), kind, Location::new(x, 5.0).unwrap())
    }

    fn setup() -> (Vec<TripRequest>, Params) {
        let p = Params::default();
        let origin = Location::new(5.0, 5.0).unwrap();
        let dest = Location::new(5.0, 8.0).unwrap();
        (vec![TripRequest::new(RiderId(0), 0, origin, dest, 3.0, &p, 600)], p)
    }

    fn matched(d: u32, pickup_km: f64) -> Matching {
        Matching { pairs: vec![CandidateEdge { driver: DriverId(d), rider: RiderId(0), pickup_km, saved_km: 0.5 }] }
    }

    #[test]
    fn winner_replaced_by_nearest_free_driver() {
        let drivers =
            [driver(1, DriverKind::TypeB, 5.0), driver(2, DriverKind::TypeA, 3.5), driver(3, DriverKind::TypeA, 2.0)];
        let (riders, p) = setup();
        let g = geo();
        let ctx =
            TripContext { drivers: drivers.iter().collect(), riders: &riders, stats: &[], params: &p, geometry: &g };
        let (m, fixes) = resolve_conflicts(matched(1, 0.0), &BTreeSet::from([DriverId(1)]), &ctx);
        assert_eq!(m.ids(), vec![(DriverId(2), RiderId(0))]);
        assert_eq!(m.pairs[0].pickup_km, 1.5);
        assert_eq!(
            fixes,
            vec![DisplacedTrip { rider: RiderId(0), old_driver: DriverId(1), fix: TripFix::Reassigned(DriverId(2)) }]
        );
    }

    #[test]
    fn winner_match_dropped_without_substitute() {
        let drivers = [driver(1, DriverKind::TypeB, 5.0), driver(3, DriverKind::TypeA, 2.0)];
        let (riders, p) = setup();
        let g = geo();
        let ctx =
            TripContext { drivers: drivers.iter().collect(), riders: &riders, stats: &[], params: &p, geometry: &g };
        let (m, fixes) = resolve_conflicts(matched(1, 0.0), &BTreeSet::from([DriverId(1)]), &ctx);
        assert!(m.is_empty());
        assert_eq!(fixes[0].fix, TripFix::Dropped);
    }

    #[test]
    fn other_winners_are_not_substitutes() {
        let drivers =
            [driver(1, DriverKind::TypeB, 5.0), driver(2, DriverKind::TypeB, 4.0), driver(4, DriverKind::TypeA, 6.0)];
        let (riders, p) = setup();
        let g = geo();
        let ctx =
            TripContext { drivers: drivers.iter().collect(), riders: &riders, stats: &[], params: &p, geometry: &g };
        let (m, _) = resolve_conflicts(matched(1, 0.0), &BTreeSet::from([DriverId(1), DriverId(2)]), &ctx);
        // drivers 2 and 4 are equally near; 2 won a task
        assert_eq!(m.ids(), vec![(DriverId(4), RiderId(0))]);
    }

    #[test]
    fn no_winners_leaves_matching_alone() {
        let drivers = [driver(1, DriverKind::TypeB, 5.0)];
        let (riders, p) = setup();
        let g = geo();
        let ctx =
            TripContext { drivers: drivers.iter().collect(), riders: &riders, stats: &[], params: &p, geometry: &g };
        let (m, fixes) = resolve_conflicts(matched(1, 0.0), &BTreeSet::new(), &ctx);
        assert_eq!(m, matched(1, 0.0));
        assert!(fixes.is_empty());
    }
}
