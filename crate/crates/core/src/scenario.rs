//! Scenario construction: validated configuration, trip-record ingestion and
//! a synthetic generator for a long, narrow, centre-heavy city.

use std::fs;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    DomainError, Driver, DriverId, DriverKind, Geometry, Location, Metric, Params, RiderId, Seconds, SensingTask,
    TaskId, TripRequest, ZoneGrid, ZoneId,
};
use crate::pricing::ZoneStats;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: header must be `{expected}`, found `{found}`")]
    BadHeader { path: PathBuf, expected: &'static str, found: String },
    #[error("{path}: {bad} of {total} rows malformed (first at line {first_line}: {first_reason})")]
    TooManyMalformed { path: PathBuf, bad: usize, total: usize, first_line: u64, first_reason: String },
}

impl ScenarioError {
    /// Whether the failure came from reading or writing files rather than
    /// from the content.
    pub fn is_io(&self) -> bool {
        matches!(self, ScenarioError::Io { .. })
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field, reason: reason.into() }
}

/// Trip volume over the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandLevel {
    /// 1000 trips.
    Low,
    /// 2000 trips.
    High,
    Total(u32),
}

impl DemandLevel {
    pub fn total(self) -> u32 {
        match self {
            DemandLevel::Low => 1000,
            DemandLevel::High => 2000,
            DemandLevel::Total(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub horizon_s: Seconds,
    pub n_type_a: usize,
    pub n_type_b: usize,
    pub n_tasks: usize,
    pub demand_level: DemandLevel,
    pub params: Params,
    pub grid: ZoneGrid,
    pub metric: Metric,
    /// Dedicated-vehicle depot; drawn uniformly when absent.
    pub depot: Option<Location>,
    pub seed: u64,
    /// Share of tasks placed farther from the centre than the median trip origin.
    pub outskirt_bias: f64,
    /// Spread of the centre-weighted origin density.
    pub origin_spread_km: f64,
    pub rider_ttl_s: Seconds,
    /// Time spent at a point of interest after arriving.
    pub task_dwell_s: Seconds,
    pub max_bids: usize,
    pub bid_radius_km: Option<f64>,
    /// Size of the history used for zone statistics relative to the
    /// simulated demand (the simulated trips are a sample of the city's).
    pub history_multiplier: f64,
    /// Expected taxis per zone per cycle; derived from the fleet when absent.
    pub taxi_counts: Option<Vec<f64>>,
    /// Trip records to replay instead of synthetic demand.
    pub trip_file: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            horizon_s: 7200,
            n_type_a: 120,
            n_type_b: 20,
            n_tasks: 80,
            demand_level: DemandLevel::Low,
            params: Params::default(),
            grid: ZoneGrid { width_km: 4.0, height_km: 12.0, cols: 4, rows: 12 },
            metric: Metric::Manhattan,
            depot: None,
            seed: 1,
            outskirt_bias: 0.5,
            origin_spread_km: 6.0,
            rider_ttl_s: 600,
            task_dwell_s: 120,
            max_bids: 5,
            bid_radius_km: None,
            history_multiplier: 10.0,
            taxi_counts: None,
            trip_file: None,
        }
    }
}

impl ScenarioConfig {
    pub fn cycle_s(&self) -> Seconds {
        (self.params.cycle_min * 60.0).round() as Seconds
    }

    pub fn geometry(&self) -> Geometry {
        Geometry { grid: self.grid.clone(), metric: self.metric }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.params.validate()?;
        self.grid.validate()?;
        if self.n_type_a + self.n_type_b == 0 {
            return Err(invalid("n_type_a", "the fleet needs at least one driver"));
        }
        let cycle = self.params.cycle_min * 60.0;
        if cycle.fract() != 0.0 || !(cycle as Seconds).is_multiple_of(30) {
            return Err(invalid("params.cycle_min", "cycle length must be a whole multiple of 30 s"));
        }
        if self.horizon_s == 0 || !self.horizon_s.is_multiple_of(self.cycle_s()) {
            return Err(invalid("horizon_s", format!("must be a positive multiple of the {} s cycle", self.cycle_s())));
        }
        if !(0.0..=1.0).contains(&self.outskirt_bias) {
            return Err(invalid("outskirt_bias", "must lie in [0, 1]"));
        }
        if !(self.origin_spread_km.is_finite() && self.origin_spread_km > 0.0) {
            return Err(invalid("origin_spread_km", "must be positive"));
        }
        if !(self.history_multiplier.is_finite() && self.history_multiplier >= 0.0) {
            return Err(invalid("history_multiplier", "must be non-negative"));
        }
        if self.max_bids == 0 {
            return Err(invalid("max_bids", "drivers must be allowed at least one bid"));
        }
        if self.rider_ttl_s == 0 {
            return Err(invalid("rider_ttl_s", "must be positive"));
        }
        if self.bid_radius_km.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
            return Err(invalid("bid_radius_km", "must be positive"));
        }
        if let Some(counts) = &self.taxi_counts {
            if counts.len() != self.grid.zone_count() {
                return Err(invalid("taxi_counts", format!("need one count per zone ({})", self.grid.zone_count())));
            }
            if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(invalid("taxi_counts", "counts must be non-negative"));
            }
        }
        if let Some(d) = self.depot {
            let inside = (0.0..=self.grid.width_km).contains(&d.x) && (0.0..=self.grid.height_km).contains(&d.y);
            if !inside {
                return Err(invalid("depot", "must lie inside the grid"));
            }
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
        let cfg: ScenarioConfig =
            serde_json::from_str(&text).map_err(|source| ScenarioError::Json { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One row of a trip file: `release_s,pu_zone,do_zone,distance_km`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub release_s: Seconds,
    pub pu_zone: usize,
    pub do_zone: usize,
    pub distance_km: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripFile {
    pub records: Vec<TripRecord>,
    pub rejected: Vec<RowError>,
}

const TRIP_HEADER: &str = "release_s,pu_zone,do_zone,distance_km";

/// Reads and validates a trip file. Malformed rows are collected; more than
/// 10% of them aborts. Records come back ordered by release time.
pub fn read_trip_records(path: &Path, grid: &ZoneGrid) -> Result<TripFile, ScenarioError> {
    let csv_err = |source| ScenarioError::Csv { path: path.into(), source };
    let file = fs::File::open(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(file);
    let header = reader.headers().map_err(csv_err)?.iter().collect::<Vec<_>>().join(",");
    if header != TRIP_HEADER {
        return Err(ScenarioError::BadHeader { path: path.into(), expected: TRIP_HEADER, found: header });
    }

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line());
        match parse_row(&row, grid) {
            Ok(r) => records.push(r),
            Err(reason) => rejected.push(RowError { line, reason }),
        }
    }
    let total = records.len() + rejected.len();
    if rejected.len() * 10 > total {
        let first = &rejected[0];
        return Err(ScenarioError::TooManyMalformed {
            path: path.into(),
            bad: rejected.len(),
            total,
            first_line: first.line,
            first_reason: first.reason.clone(),
        });
    }
    records.sort_by_key(|r| r.release_s);
    Ok(TripFile { records, rejected })
}

fn parse_row(row: &csv::StringRecord, grid: &ZoneGrid) -> Result<TripRecord, String> {
    if row.len() != 4 {
        return Err(format!("expected 4 fields, found {}", row.len()));
    }
    let release_s: Seconds =
        row[0].parse().map_err(|_| format!("release_s `{}` is not a whole number of seconds", &row[0]))?;
    let zone = |i: usize, name: &str| -> Result<usize, String> {
        let z: usize = row[i].parse().map_err(|_| format!("{name} `{}` is not a zone id", &row[i]))?;
        if z >= grid.zone_count() {
            return Err(format!("{name} {z} outside the {} zones", grid.zone_count()));
        }
        Ok(z)
    };
    let pu_zone = zone(1, "pu_zone")?;
    let do_zone = zone(2, "do_zone")?;
    let distance_km: f64 = row[3].parse().map_err(|_| format!("distance_km `{}` is not a number", &row[3]))?;
    if !(distance_km.is_finite() && distance_km >= 0.0) {
        return Err(format!("distance_km {distance_km} must be non-negative"));
    }
    Ok(TripRecord { release_s, pu_zone, do_zone, distance_km })
}

/// Requests at zone centroids, ids in release order.
pub fn records_to_requests(
    records: &[TripRecord],
    grid: &ZoneGrid,
    p: &Params,
    ttl: Seconds,
) -> Result<Vec<TripRequest>, ScenarioError> {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| r.release_s);
    sorted
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let origin = grid.centroid(ZoneId(r.pu_zone))?;
            let dest = grid.centroid(ZoneId(r.do_zone))?;
            Ok(TripRequest::new(RiderId(i as u32), r.release_s, origin, dest, r.distance_km, p, ttl))
        })
        .collect()
}

pub fn load_trip_records(
    path: &Path,
    grid: &ZoneGrid,
    p: &Params,
    ttl: Seconds,
) -> Result<Vec<TripRequest>, ScenarioError> {
    records_to_requests(&read_trip_records(path, grid)?.records, grid, p, ttl)
}

/// A fully materialised scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub depot: Location,
    pub requests: Vec<TripRequest>,
    pub drivers: Vec<Driver>,
    pub tasks: Vec<SensingTask>,
    pub zone_stats: Vec<ZoneStats>,
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn geometry(&self) -> Geometry {
        self.config.geometry()
    }
}

/// Sampling window of a trip history.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryWindow {
    pub horizon_s: Seconds,
    pub cycle_s: Seconds,
}

impl HistoryWindow {
    pub fn cycles(&self) -> f64 {
        (self.horizon_s as f64 / self.cycle_s as f64).max(1.0)
    }
}

/// Mean requests per zone per cycle from `history`. Taxi counts are the
/// supplied ones, or the fleet spread over zones by drop-off share. An empty
/// history yields one request and one taxi everywhere.
pub fn estimate_zone_stats(
    history: &[TripRecord],
    grid: &ZoneGrid,
    window: HistoryWindow,
    fleet: usize,
    taxi_counts: Option<&[f64]>,
) -> Vec<ZoneStats> {
    let zones = grid.zone_count();
    if history.is_empty() {
        return (0..zones).map(|z| ZoneStats::fallback(ZoneId(z))).collect();
    }
    let mut origins = vec![0usize; zones];
    let mut drops = vec![0usize; zones];
    for r in history {
        origins[r.pu_zone.min(zones - 1)] += 1;
        drops[r.do_zone.min(zones - 1)] += 1;
    }
    let cycles = window.cycles();
    (0..zones)
        .map(|z| ZoneStats {
            zone: ZoneId(z),
            expected_requests: origins[z] as f64 / cycles,
            expected_taxis: match taxi_counts {
                Some(c) => c[z],
                None => fleet as f64 * drops[z] as f64 / history.len() as f64,
            },
        })
        .collect()
}

mod streams {
    pub const REQUESTS: u64 = 1;
    pub const TASKS: u64 = 2;
    pub const DRIVERS: u64 = 3;
    pub const HISTORY: u64 = 4;
    pub const DEPOT: u64 = 5;
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform_point(rng: &mut impl Rng, grid: &ZoneGrid) -> Location {
    Location { x: rng.random_range(0.0..grid.width_km), y: rng.random_range(0.0..grid.height_km) }
}

/// Centre-heavy trip generator with OD distances calibrated to the mean trip length.
struct DemandModel<'a> {
    grid: &'a ZoneGrid,
    metric: Metric,
    zone_weights: WeightedIndex<f64>,
    target_km: f64,
}

/// A trip before its displacement is scaled.
struct RawTrip {
    release_s: Seconds,
    origin: Location,
    direction: f64,
    length: f64,
}

impl<'a> DemandModel<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        let center = cfg.grid.center();
        let weights: Vec<f64> = (0..cfg.grid.zone_count())
            .map(|z| {
                let c = cfg.grid.centroid(ZoneId(z)).unwrap();
                let d2 = (c.x - center.x).powi(2) + (c.y - center.y).powi(2);
                (-d2 / (2.0 * cfg.origin_spread_km.powi(2))).exp()
            })
            .collect();
        DemandModel {
            grid: &cfg.grid,
            metric: cfg.metric,
            zone_weights: WeightedIndex::new(weights).expect("positive zone weights"),
            target_km: cfg.params.mean_trip_km,
        }
    }

    fn draw(&self, rng: &mut impl Rng, expected: f64, horizon_s: Seconds) -> Vec<RawTrip> {
        let n = if expected > 0.0 { Poisson::new(expected).unwrap().sample(rng) as usize } else { 0 };
        let shape = Gamma::new(2.0, 1.0).unwrap();
        let cols = self.grid.cols as f64;
        let rows = self.grid.rows as f64;
        let mut trips: Vec<RawTrip> = (0..n)
            .map(|_| {
                let zone = self.zone_weights.sample(rng);
                let (row, col) = ((zone / self.grid.cols) as f64, (zone % self.grid.cols) as f64);
                let origin = Location {
                    x: (col + rng.random::<f64>()) * self.grid.width_km / cols,
                    y: (row + rng.random::<f64>()) * self.grid.height_km / rows,
                };
                RawTrip {
                    release_s: rng.random_range(0..horizon_s),
                    origin,
                    direction: rng.random_range(0.0..std::f64::consts::TAU),
                    length: shape.sample(rng),
                }
            })
            .collect();
        trips.sort_by_key(|t| t.release_s);
        trips
    }

    fn destination(&self, t: &RawTrip, scale: f64) -> Location {
        let d = t.length * scale;
        self.grid.clamp(Location { x: t.origin.x + d * t.direction.cos(), y: t.origin.y + d * t.direction.sin() })
    }

    /// Scale at which the mean clamped OD distance is close to the target.
    fn calibrate(&self, trips: &[RawTrip]) -> f64 {
        if trips.is_empty() {
            return 1.0;
        }
        let mut scale = self.target_km / 2.0;
        for _ in 0..12 {
            let mean = trips.iter().map(|t| self.metric.distance(t.origin, self.destination(t, scale))).sum::<f64>()
                / trips.len() as f64;
            if mean <= 0.0 {
                break;
            }
            scale *= self.target_km / mean;
        }
        scale
    }

    fn records(&self, trips: &[RawTrip], scale: f64) -> Vec<TripRecord> {
        trips
            .iter()
            .map(|t| {
                let dest = self.destination(t, scale);
                TripRecord {
                    release_s: t.release_s,
                    pu_zone: self.grid.zone_of(t.origin).0,
                    do_zone: self.grid.zone_of(dest).0,
                    distance_km: self.metric.distance(t.origin, dest),
                }
            })
            .collect()
    }
}

/// Median distance of the generated trip origins from the grid centre.
fn median_origin_radius(requests: &[TripRequest], grid: &ZoneGrid, metric: Metric) -> f64 {
    let center = grid.center();
    let mut r: Vec<f64> = requests.iter().map(|q| metric.distance(q.origin, center)).collect();
    if r.is_empty() {
        return 0.0;
    }
    r.sort_by(f64::total_cmp);
    r[r.len() / 2]
}

/// Builds requests, drivers, tasks and zone statistics from `cfg` and its seed.
pub fn generate_synthetic(cfg: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
    cfg.validate()?;
    let geometry = cfg.geometry();
    let p = &cfg.params;
    let model = DemandModel::new(cfg);
    let window = HistoryWindow { horizon_s: cfg.horizon_s, cycle_s: cfg.cycle_s() };

    let (requests, history, history_scale) = match &cfg.trip_file {
        Some(path) => {
            let file = read_trip_records(path, &cfg.grid)?;
            let requests = records_to_requests(&file.records, &cfg.grid, p, cfg.rider_ttl_s)?;
            (requests, file.records, cfg.history_multiplier)
        }
        None => {
            let mut rng = stream(cfg.seed, streams::REQUESTS);
            let trips = model.draw(&mut rng, cfg.demand_level.total() as f64, cfg.horizon_s);
            let scale = model.calibrate(&trips);
            let requests = trips
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let dest = model.destination(t, scale);
                    let l = cfg.metric.distance(t.origin, dest);
                    TripRequest::new(RiderId(i as u32), t.release_s, t.origin, dest, l, p, cfg.rider_ttl_s)
                })
                .collect::<Vec<_>>();
            let mut rng = stream(cfg.seed, streams::HISTORY);
            let expected = cfg.demand_level.total() as f64 * cfg.history_multiplier;
            let past = model.draw(&mut rng, expected, cfg.horizon_s);
            let history = model.records(&past, model.calibrate(&past));
            (requests, history, 1.0)
        }
    };
    let fleet = cfg.n_type_a + cfg.n_type_b;
    let mut zone_stats = estimate_zone_stats(&history, &cfg.grid, window, fleet, cfg.taxi_counts.as_deref());
    if !history.is_empty() {
        // a replayed file is itself the sample; scale it up to the city's demand
        for z in &mut zone_stats {
            z.expected_requests *= history_scale;
        }
    }

    let depot = match cfg.depot {
        Some(d) => d,
        None => uniform_point(&mut stream(cfg.seed, streams::DEPOT), &cfg.grid),
    };

    let mut rng = stream(cfg.seed, streams::TASKS);
    let outskirt = median_origin_radius(&requests, &cfg.grid, cfg.metric);
    let center = cfg.grid.center();
    let tasks = (0..cfg.n_tasks as u32)
        .map(|k| {
            let mut poi = uniform_point(&mut rng, &cfg.grid);
            if rng.random_bool(cfg.outskirt_bias) {
                for _ in 0..100 {
                    if cfg.metric.distance(poi, center) >= outskirt {
                        break;
                    }
                    poi = uniform_point(&mut rng, &cfg.grid);
                }
            }
            SensingTask::new(TaskId(k), poi, 0, depot, &geometry)
        })
        .collect();

    let mut rng = stream(cfg.seed, streams::DRIVERS);
    let drivers = (0..fleet)
        .map(|i| {
            let kind = if i < cfg.n_type_a { DriverKind::TypeA } else { DriverKind::TypeB };
            Driver::new(DriverId(i as u32), kind, uniform_point(&mut rng, &cfg.grid))
        })
        .collect();

    Ok(Scenario { config: cfg.clone(), depot, requests, drivers, tasks, zone_stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn grid() -> ZoneGrid {
        ZoneGrid::new(4.0, 12.0, 4, 12).unwrap()
    }

    #[test]
    fn header_only_file_is_empty() {
        let f = write_tmp("release_s,pu_zone,do_zone,distance_km\n");
        let t = read_trip_records(f.path(), &grid()).unwrap();
        assert!(t.records.is_empty() && t.rejected.is_empty());
    }

    #[test]
    fn single_row_maps_to_request() {
        let f = write_tmp("release_s,pu_zone,do_zone,distance_km\n60,2,5,3.1\n");
        let p = Params::default();
        let reqs = load_trip_records(f.path(), &grid(), &p, 600).unwrap();
        assert_eq!(reqs.len(), 1);
        let r = &reqs[0];
        assert_eq!((r.release_time, r.od_distance_km, r.expiry_time), (60, 3.1, 660));
        assert_eq!(r.origin, grid().centroid(ZoneId(2)).unwrap());
        assert_eq!(r.destination, grid().centroid(ZoneId(5)).unwrap());
    }

    #[test]
    fn malformed_rows_are_reported_with_lines() {
        let mut body = String::from("release_s,pu_zone,do_zone,distance_km\n");
        for i in 0..20 {
            body.push_str(&format!("{},1,2,1.5\n", 100 - i));
        }
        body.push_str("30,1,2,-4\n");
        let f = write_tmp(&body);
        let t = read_trip_records(f.path(), &grid()).unwrap();
        assert_eq!(t.records.len(), 20);
        assert_eq!(t.rejected.len(), 1);
        assert_eq!(t.rejected[0].line, 22);
        assert!(t.rejected[0].reason.contains("non-negative"));
        assert!(t.records.windows(2).all(|w| w[0].release_s <= w[1].release_s));
    }

    #[test]
    fn mostly_malformed_file_aborts() {
        let f = write_tmp("release_s,pu_zone,do_zone,distance_km\n1,1,1,1\nx,1,1,1\n2,99,1,1\n");
        assert!(matches!(
            read_trip_records(f.path(), &grid()),
            Err(ScenarioError::TooManyMalformed { bad: 2, total: 3, .. })
        ));
    }

    #[test]
    fn wrong_header_and_missing_file() {
        let f = write_tmp("t,a,b,c\n");
        assert!(matches!(read_trip_records(f.path(), &grid()), Err(ScenarioError::BadHeader { .. })));
        let err = read_trip_records(Path::new("/nonexistent/trips.csv"), &grid()).unwrap_err();
        assert!(err.is_io(), "{err}");
    }

    #[test]
    fn zone_stats_means_and_fallbacks() {
        let history: Vec<TripRecord> =
            (0..120).map(|i| TripRecord { release_s: i, pu_zone: 3, do_zone: 5, distance_km: 1.0 }).collect();
        let window = HistoryWindow { horizon_s: 3600, cycle_s: 300 };
        let stats = estimate_zone_stats(&history, &grid(), window, 140, None);
        assert_eq!(stats[3].expected_requests, 10.0);
        assert_eq!(stats[7].expected_requests, 0.0);
        assert_eq!(stats[5].expected_taxis, 140.0);
        let single =
            estimate_zone_stats(&history[..4], &grid(), HistoryWindow { horizon_s: 300, cycle_s: 300 }, 1, None);
        assert_eq!(single[3].expected_requests, 4.0);
        let empty = estimate_zone_stats(&[], &grid(), window, 140, None);
        assert!(empty.iter().all(|s| s.expected_requests == 1.0 && s.expected_taxis == 1.0));
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        let bad = ScenarioConfig { n_type_a: 0, n_type_b: 0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ScenarioError::Invalid { field: "n_type_a", .. })));
        let bad = ScenarioConfig { horizon_s: 7000, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ScenarioError::Invalid { field: "horizon_s", .. })));
        let bad = ScenarioConfig { taxi_counts: Some(vec![1.0; 3]), ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn synthetic_scenario_shape() {
        let cfg = ScenarioConfig { seed: 5, ..Default::default() };
        let s = generate_synthetic(&cfg).unwrap();
        assert_eq!(s.drivers.len(), 140);
        assert_eq!(s.drivers.iter().filter(|d| d.kind == DriverKind::TypeB).count(), 20);
        assert!(s.drivers[..120].iter().all(|d| d.kind == DriverKind::TypeA));
        assert_eq!(s.tasks.len(), 80);
        assert!(s.requests.windows(2).all(|w| w[0].release_time <= w[1].release_time));
        assert!(s.requests.iter().all(|r| r.release_time < cfg.horizon_s));
        assert_eq!(s.zone_stats.len(), 48);
    }

    #[test]
    fn no_tasks_is_allowed() {
        let s = generate_synthetic(&ScenarioConfig { n_tasks: 0, ..Default::default() }).unwrap();
        assert!(s.tasks.is_empty());
    }
}
