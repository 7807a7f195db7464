//! Entity types, planar geometry with a zone overlay, and the distance
//! provider shared by every other module.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Money;

/// Simulation time in whole seconds from the start of the horizon.
pub type Seconds = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("location ({x}, {y}) is not finite")]
    NonFiniteLocation { x: f64, y: f64 },
    #[error("zone {zone} out of range for a grid of {count} zones")]
    ZoneOutOfRange { zone: usize, count: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("driver {driver}: illegal transition from {from} to {to}")]
    IllegalTransition { driver: DriverId, from: &'static str, to: &'static str },
    #[error("driver {driver}: occupancy ends at {until}s, before current time {now}s")]
    OccupancyInPast { driver: DriverId, until: Seconds, now: Seconds },
}

/// Planar position in kilometres (x east, y north).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(x: f64, y: f64) -> Result<Self, DomainError> {
        if x.is_finite() && y.is_finite() {
            Ok(Location { x, y })
        } else {
            Err(DomainError::NonFiniteLocation { x, y })
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
}

impl Metric {
    /// Distance in km between two locations under this metric.
    pub fn distance(self, a: Location, b: Location) -> f64 {
        let dx = (a.x - b.x).abs();
        let dy = (a.y - b.y).abs();
        match self {
            Metric::Euclidean => dx.hypot(dy),
            Metric::Manhattan => dx + dy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub usize);

/// Rectangular grid of equally sized zones covering `[0, width] x [0, height]`,
/// indexed row-major from the south-west corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneGrid {
    pub width_km: f64,
    pub height_km: f64,
    pub cols: usize,
    pub rows: usize,
}

impl ZoneGrid {
    pub fn new(width_km: f64, height_km: f64, cols: usize, rows: usize) -> Result<Self, DomainError> {
        let grid = ZoneGrid { width_km, height_km, cols, rows };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.width_km.is_finite() && self.width_km > 0.0 && self.height_km.is_finite() && self.height_km > 0.0) {
            return Err(DomainError::InvalidGrid(format!(
                "extent {}x{} km must be positive",
                self.width_km, self.height_km
            )));
        }
        if self.cols == 0 || self.rows == 0 {
            return Err(DomainError::InvalidGrid("grid needs at least one row and one column".into()));
        }
        Ok(())
    }

    pub fn zone_count(&self) -> usize {
        self.cols * self.rows
    }

    fn cell_w(&self) -> f64 {
        self.width_km / self.cols as f64
    }

    fn cell_h(&self) -> f64 {
        self.height_km / self.rows as f64
    }

    /// Zone containing `loc`; points outside the bounding box clamp to the
    /// nearest boundary zone.
    pub fn zone_of(&self, loc: Location) -> ZoneId {
        let col = ((loc.x / self.cell_w()).floor().max(0.0) as usize).min(self.cols - 1);
        let row = ((loc.y / self.cell_h()).floor().max(0.0) as usize).min(self.rows - 1);
        ZoneId(row * self.cols + col)
    }

    pub fn centroid(&self, zone: ZoneId) -> Result<Location, DomainError> {
        if zone.0 >= self.zone_count() {
            return Err(DomainError::ZoneOutOfRange { zone: zone.0, count: self.zone_count() });
        }
        let (row, col) = (zone.0 / self.cols, zone.0 % self.cols);
        Ok(Location { x: (col as f64 + 0.5) * self.cell_w(), y: (row as f64 + 0.5) * self.cell_h() })
    }

    pub fn center(&self) -> Location {
        Location { x: self.width_km / 2.0, y: self.height_km / 2.0 }
    }

    pub fn clamp(&self, loc: Location) -> Location {
        Location { x: loc.x.clamp(0.0, self.width_km), y: loc.y.clamp(0.0, self.height_km) }
    }
}

/// Zone grid plus the active distance metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub grid: ZoneGrid,
    pub metric: Metric,
}

impl Geometry {
    pub fn distance(&self, a: Location, b: Location) -> f64 {
        self.metric.distance(a, b)
    }

    pub fn zone_of(&self, loc: Location) -> ZoneId {
        self.grid.zone_of(loc)
    }
}

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(DriverId, "d");
id_type!(RiderId, "r");
id_type!(TaskId, "k");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverKind {
    /// Ride-hailing only.
    TypeA,
    /// Sensing-equipped; serves riders and mobile sensing tasks.
    TypeB,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum DriverState {
    Idle,
    OnTrip { until: Seconds },
    OnTask { until: Seconds },
    AwaitingAuction,
}

impl DriverState {
    fn name(&self) -> &'static str {
        match self {
            DriverState::Idle => "idle",
            DriverState::OnTrip { .. } => "on_trip",
            DriverState::OnTask { .. } => "on_task",
            DriverState::AwaitingAuction => "awaiting_auction",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Driver {
    pub id: DriverId,
    pub kind: DriverKind,
    pub location: Location,
    pub state: DriverState,
    pub cumulative_earnings: Money,
    /// Sum of the adjusted valuations of the sensing tasks this driver performed.
    pub cumulative_cost_basis: Money,
}

impl Driver {
    pub fn new(id: DriverId, kind: DriverKind, location: Location) -> Self {
        Driver {
            id,
            kind,
            location,
            state: DriverState::Idle,
            cumulative_earnings: Money::ZERO,
            cumulative_cost_basis: Money::ZERO,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.state == DriverState::Idle
    }

    /// Idle or waiting for the auction outcome: either way free to take work.
    pub fn is_available(&self) -> bool {
        matches!(self.state, DriverState::Idle | DriverState::AwaitingAuction)
    }

    fn illegal(&self, to: &'static str) -> DomainError {
        DomainError::IllegalTransition { driver: self.id, from: self.state.name(), to }
    }

    fn check_until(&self, now: Seconds, until: Seconds) -> Result<(), DomainError> {
        if until < now {
            return Err(DomainError::OccupancyInPast { driver: self.id, until, now });
        }
        Ok(())
    }

    pub fn begin_trip(&mut self, now: Seconds, until: Seconds, destination: Location) -> Result<(), DomainError> {
        if !self.is_available() {
            return Err(self.illegal("on_trip"));
        }
        self.check_until(now, until)?;
        self.state = DriverState::OnTrip { until };
        self.location = destination;
        Ok(())
    }

    pub fn begin_task(&mut self, now: Seconds, until: Seconds, poi: Location) -> Result<(), DomainError> {
        if self.kind != DriverKind::TypeB || !self.is_available() {
            return Err(self.illegal("on_task"));
        }
        self.check_until(now, until)?;
        self.state = DriverState::OnTask { until };
        self.location = poi;
        Ok(())
    }

    pub fn await_auction(&mut self) -> Result<(), DomainError> {
        if self.kind != DriverKind::TypeB || self.state != DriverState::Idle {
            return Err(self.illegal("awaiting_auction"));
        }
        self.state = DriverState::AwaitingAuction;
        Ok(())
    }

    /// Back to idle when the current occupancy has ended at `now`, or when an
    /// auction round closes without work for this driver.
    pub fn release(&mut self, now: Seconds) -> bool {
        match self.state {
            DriverState::OnTrip { until } | DriverState::OnTask { until } if until <= now => {
                self.state = DriverState::Idle;
                true
            }
            DriverState::AwaitingAuction => {
                self.state = DriverState::Idle;
                true
            }
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripRequest {
    pub id: RiderId,
    pub release_time: Seconds,
    pub origin: Location,
    pub destination: Location,
    pub od_distance_km: f64,
    pub od_travel_time_min: f64,
    pub expiry_time: Seconds,
}

impl TripRequest {
    /// Builds a request whose travel time follows from the mean speed.
    pub fn new(
        id: RiderId,
        release_time: Seconds,
        origin: Location,
        destination: Location,
        od_distance_km: f64,
        params: &Params,
        ttl: Seconds,
    ) -> Self {
        TripRequest {
            id,
            release_time,
            origin,
            destination,
            od_distance_km,
            od_travel_time_min: params.travel_minutes(od_distance_km),
            expiry_time: release_time.saturating_add(ttl),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum TaskState {
    Pending,
    Assigned { driver: DriverId },
    Fallback,
    Deferred,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingTask {
    pub id: TaskId,
    pub poi: Location,
    pub release_cycle: u32,
    /// Distance from the dedicated-vehicle depot to the point of interest.
    pub depot_distance_km: f64,
    pub state: TaskState,
}

impl SensingTask {
    pub fn new(id: TaskId, poi: Location, release_cycle: u32, depot: Location, geometry: &Geometry) -> Self {
        SensingTask {
            id,
            poi,
            release_cycle,
            depot_distance_km: geometry.distance(depot, poi),
            state: TaskState::Pending,
        }
    }
}

/// Economic and operational constants. Defaults are the published parameter
/// values plus the documented fallbacks for the opportunity-cost cap, budget
/// and cycle length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Base fare charged to a matched rider.
    pub base_fare: f64,
    /// Distance surcharge per km beyond `base_distance_km`.
    pub beta1: f64,
    /// Time surcharge per minute beyond `base_time_min`.
    pub beta2: f64,
    pub base_distance_km: f64,
    pub base_time_min: f64,
    /// Maximum pickup distance.
    pub max_pickup_km: f64,
    pub mean_speed_kmh: f64,
    /// Driver payoff per km of passenger service.
    pub alpha: f64,
    pub bid_lb: f64,
    pub bid_ub: f64,
    /// Sensing opportunity-cost coefficient per km beyond `mean_trip_km`.
    pub mu: f64,
    /// Dedicated sensing vehicle cost per km.
    pub dedicated_cost_per_km: f64,
    /// Base reward for completing a sensing task.
    pub task_base_reward: f64,
    /// Mean trip distance.
    pub mean_trip_km: f64,
    /// Cap on the trip opportunity cost.
    pub opportunity_cap: f64,
    /// Total sensing budget over the horizon.
    pub total_budget: f64,
    /// Plan-cycle length in minutes.
    pub cycle_min: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            base_fare: 12.0,
            beta1: 1.70,
            beta2: 0.50,
            base_distance_km: 3.0,
            base_time_min: 10.0,
            max_pickup_km: 2.0,
            mean_speed_kmh: 35.0,
            alpha: 2.0,
            bid_lb: 2.0,
            bid_ub: 4.0,
            mu: 1.0,
            dedicated_cost_per_km: 8.0,
            task_base_reward: 15.0,
            mean_trip_km: 3.0,
            opportunity_cap: 10.0,
            total_budget: 2000.0,
            cycle_min: 5.0,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), DomainError> {
        let positive: [(&'static str, f64); 13] = [
            ("base_fare", self.base_fare),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("base_distance_km", self.base_distance_km),
            ("base_time_min", self.base_time_min),
            ("max_pickup_km", self.max_pickup_km),
            ("mean_speed_kmh", self.mean_speed_kmh),
            ("alpha", self.alpha),
            ("mu", self.mu),
            ("dedicated_cost_per_km", self.dedicated_cost_per_km),
            ("mean_trip_km", self.mean_trip_km),
            ("opportunity_cap", self.opportunity_cap),
            ("cycle_min", self.cycle_min),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(DomainError::InvalidParam { field, reason: format!("must be positive, got {value}") });
            }
        }
        for (field, value) in [("task_base_reward", self.task_base_reward), ("total_budget", self.total_budget)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(DomainError::InvalidParam { field, reason: format!("must be non-negative, got {value}") });
            }
        }
        if !(self.alpha <= self.bid_lb && self.bid_lb <= self.bid_ub && self.bid_ub <= self.dedicated_cost_per_km) {
            return Err(DomainError::InvalidParam {
                field: "bid_lb",
                reason: format!(
                    "need alpha <= bid_lb <= bid_ub <= dedicated_cost_per_km, got {} <= {} <= {} <= {}",
                    self.alpha, self.bid_lb, self.bid_ub, self.dedicated_cost_per_km
                ),
            });
        }
        Ok(())
    }

    pub fn travel_minutes(&self, km: f64) -> f64 {
        60.0 * km / self.mean_speed_kmh
    }

    pub fn travel_seconds(&self, km: f64) -> Seconds {
        (3600.0 * km / self.mean_speed_kmh).ceil() as Seconds
    }

    pub fn cycle_hours(&self) -> f64 {
        self.cycle_min / 60.0
    }
}
