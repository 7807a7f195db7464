//! Money-valued formulas: rider fares, driver trip earnings, opportunity
//! costs, and the valuation stack used for sensing-task bids.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Params, ZoneId};
use crate::money::Money;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("{what} must be a non-negative finite number, got {value}")]
    Negative { what: &'static str, value: f64 },
    #[error("bid {bid} outside the valid range [{lb}, {ub}]")]
    BidOutOfRange { bid: f64, lb: f64, ub: f64 },
}

fn non_negative(what: &'static str, value: f64) -> Result<f64, PricingError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(PricingError::Negative { what, value })
    }
}

/// Expected demand and supply in one zone over one plan cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneStats {
    pub zone: ZoneId,
    pub expected_requests: f64,
    pub expected_taxis: f64,
}

impl ZoneStats {
    /// Used for zones without history: one request and one taxi per cycle.
    pub fn fallback(zone: ZoneId) -> Self {
        ZoneStats { zone, expected_requests: 1.0, expected_taxis: 1.0 }
    }

    /// Stats for `zone` from a table indexed by zone id.
    pub fn lookup(table: &[ZoneStats], zone: ZoneId) -> ZoneStats {
        table.get(zone.0).copied().unwrap_or_else(|| ZoneStats::fallback(zone))
    }
}

pub fn rider_fare(distance_km: f64, time_min: f64, p: &Params) -> Result<Money, PricingError> {
    let l = non_negative("trip distance", distance_km)?;
    let t = non_negative("trip time", time_min)?;
    let fare = p.base_fare + (p.beta1 * (l - p.base_distance_km)).max(0.0) + (p.beta2 * (t - p.base_time_min)).max(0.0);
    Ok(Money::from_f64(fare))
}

/// Subsidy for the expected cruising time at the destination zone, capped
/// at `opportunity_cap`. A zone with no expected requests gets the cap.
pub fn trip_opportunity_cost(stats: &ZoneStats, p: &Params) -> Money {
    if stats.expected_requests <= 0.0 {
        return Money::from_f64(p.opportunity_cap);
    }
    let cruising =
        p.alpha * p.mean_speed_kmh * p.cycle_hours() * (stats.expected_taxis + 1.0) / (2.0 * stats.expected_requests);
    Money::from_f64(cruising.min(p.opportunity_cap))
}

pub fn driver_trip_earning(distance_km: f64, dest_stats: &ZoneStats, p: &Params) -> Money {
    debug_assert!(distance_km >= 0.0);
    Money::from_f64(p.alpha * distance_km) + trip_opportunity_cost(dest_stats, p)
}

/// Platform revenue of serving a rider: fare minus the driver's earning.
/// Independent of which driver serves the trip.
pub fn trip_margin(distance_km: f64, time_min: f64, dest_stats: &ZoneStats, p: &Params) -> Result<Money, PricingError> {
    Ok(rider_fare(distance_km, time_min, p)? - driver_trip_earning(distance_km, dest_stats, p))
}

pub fn sensing_opportunity_cost(distance_km: f64, p: &Params) -> Money {
    Money::from_f64((p.mu * (distance_km - p.mean_trip_km)).max(0.0))
}

/// Payoff a driver expects from a hailing order of the same distance as the task.
pub fn hidden_valuation(distance_km: f64, p: &Params) -> Money {
    let l = distance_km;
    let value = if l <= p.mean_trip_km {
        p.alpha * l
    } else {
        p.alpha * p.mean_trip_km + (p.alpha + p.mu) * (l - p.mean_trip_km)
    };
    Money::from_f64(value)
}

pub fn stated_valuation(bid: f64, distance_km: f64, p: &Params) -> Money {
    Money::from_f64(p.task_base_reward + bid * distance_km)
}

/// Distance beyond which the stated valuation of a bid falls below the hidden
/// valuation; `None` when the bid is at least `alpha + mu` and never does.
pub fn compensation_threshold(bid: f64, p: &Params) -> Option<f64> {
    let slope_gap = p.alpha + p.mu - bid;
    (slope_gap > 0.0).then(|| (p.task_base_reward + p.mu * p.mean_trip_km) / slope_gap)
}

fn check_bid(bid: f64, p: &Params) -> Result<f64, PricingError> {
    const EPS: f64 = 1e-9;
    if bid.is_finite() && bid >= p.bid_lb - EPS && bid <= p.bid_ub + EPS {
        Ok(bid)
    } else {
        Err(PricingError::BidOutOfRange { bid, lb: p.bid_lb, ub: p.bid_ub })
    }
}

fn unchecked_compensation(bid: f64, distance_km: f64, p: &Params) -> Money {
    (hidden_valuation(distance_km, p) - stated_valuation(bid, distance_km, p)).max(Money::ZERO)
}

/// Amount lifting a stated valuation up to the hidden valuation. Positive
/// exactly when `bid < alpha + mu` and the distance exceeds the threshold.
pub fn compensation(bid: f64, distance_km: f64, p: &Params) -> Result<Money, PricingError> {
    let bid = check_bid(bid, p)?;
    let l = non_negative("task distance", distance_km)?;
    Ok(unchecked_compensation(bid, l, p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Valuation {
    pub hidden: Money,
    pub stated: Money,
    pub compensation: Money,
    pub adjusted: Money,
    /// Adjusted valuation at the highest admissible bid.
    pub upper_bound: Money,
}

pub fn adjusted_valuation(bid: f64, distance_km: f64, p: &Params) -> Result<Valuation, PricingError> {
    let compensation = compensation(bid, distance_km, p)?;
    let stated = stated_valuation(bid, distance_km, p);
    let upper_bound = stated_valuation(p.bid_ub, distance_km, p) + unchecked_compensation(p.bid_ub, distance_km, p);
    Ok(Valuation {
        hidden: hidden_valuation(distance_km, p),
        stated,
        compensation,
        adjusted: stated + compensation,
        upper_bound,
    })
}

/// Cost reduction from using a taxi instead of a dedicated vehicle; may be negative.
pub fn cost_saving(depot_distance_km: f64, adjusted: Money, p: &Params) -> Money {
    Money::from_f64(p.dedicated_cost_per_km * depot_distance_km) - adjusted
}
