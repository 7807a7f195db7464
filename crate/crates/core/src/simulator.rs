//! Two-track timeline: trip matching every 30 s for all idle drivers, and a
//! plan cycle for sensing-equipped drivers split into trip matching (T1),
//! task release and bidding (T2) and auction settlement (T3).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::auction::{
    run_rbc_round, run_vcg_round, AuctionError, AuctionInstance, Bid, BudgetLedger, Mechanism, RoundOutcome,
    TripContext, TripFix,
};
use crate::domain::{
    DomainError, Driver, DriverId, DriverKind, DriverState, Geometry, Params, RiderId, Seconds, SensingTask, TaskId,
    TaskState, TripRequest,
};
use crate::money::Money;
use crate::pricing::{driver_trip_earning, ZoneStats};
use crate::scenario::{Scenario, ScenarioError};
use crate::trip_matching::{match_trips, Matching};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("invariant violated at t={t}s: {detail}")]
    Invariant { t: Seconds, detail: String },
}

/// Which part of a plan cycle a tick falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    TripMatching,
    Bidding,
    Settlement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clock {
    pub now: Seconds,
    pub trip_interval: Seconds,
    pub cycle_length: Seconds,
    pub phase_durations: (Seconds, Seconds, Seconds),
}

impl Clock {
    pub fn new(trip_interval: Seconds, phase_durations: (Seconds, Seconds, Seconds)) -> Result<Self, SimError> {
        let (t1, t2, t3) = phase_durations;
        let cycle_length = t1 + t2 + t3;
        if trip_interval == 0 || [t1, t2, t3].iter().any(|&p| p == 0 || p % trip_interval != 0) {
            return Err(SimError::Config(format!(
                "phases {t1}/{t2}/{t3} s must be positive multiples of the {trip_interval} s matching interval"
            )));
        }
        Ok(Clock { now: 0, trip_interval, cycle_length, phase_durations })
    }

    /// The 3 : 1.5 : 0.5 split of a plan cycle, on a 30 s matching grid.
    pub fn for_cycle(cycle_length: Seconds) -> Result<Self, SimError> {
        Clock::new(30, (cycle_length * 3 / 5, cycle_length * 3 / 10, cycle_length / 10))
    }

    pub fn cycle(&self) -> u32 {
        self.now / self.cycle_length
    }

    pub fn offset(&self) -> Seconds {
        self.now % self.cycle_length
    }

    pub fn phase(&self) -> Phase {
        let (t1, t2, _) = self.phase_durations;
        match self.offset() {
            o if o < t1 => Phase::TripMatching,
            o if o < t1 + t2 => Phase::Bidding,
            _ => Phase::Settlement,
        }
    }

    /// First tick of the bidding phase.
    pub fn is_bidding_start(&self) -> bool {
        self.offset() == self.phase_durations.0
    }

    /// First tick of the settlement phase.
    pub fn is_settlement_start(&self) -> bool {
        self.offset() == self.phase_durations.0 + self.phase_durations.1
    }

    pub fn advance(&mut self) {
        self.now += self.trip_interval;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiddingPolicy {
    pub bid_lb: f64,
    pub bid_ub: f64,
    pub max_bids_per_driver: usize,
    pub bid_radius_km: Option<f64>,
}

impl BiddingPolicy {
    pub fn from_params(p: &Params, max_bids: usize, bid_radius_km: Option<f64>) -> Self {
        BiddingPolicy { bid_lb: p.bid_lb, bid_ub: p.bid_ub, max_bids_per_driver: max_bids, bid_radius_km }
    }
}

/// Random source for one driver's bids in one cycle, independent of the
/// order in which drivers are visited.
pub fn bid_rng(seed: u64, cycle: u32, driver: DriverId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cycle as u64) << 32) | driver.0 as u64);
    rng
}

/// One unit price for the cycle, applied to the nearest visible tasks.
pub fn generate_bids(
    driver: &Driver,
    visible: &[&SensingTask],
    policy: &BiddingPolicy,
    rng: &mut impl Rng,
    geometry: &Geometry,
) -> Vec<Bid> {
    if visible.is_empty() || policy.max_bids_per_driver == 0 {
        return Vec::new();
    }
    let unit_price = rng.random_range(policy.bid_lb..=policy.bid_ub);
    let mut near: Vec<(f64, TaskId)> = visible
        .iter()
        .map(|t| (geometry.distance(driver.location, t.poi), t.id))
        .filter(|&(l, _)| policy.bid_radius_km.is_none_or(|r| l <= r))
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    near.truncate(policy.max_bids_per_driver);
    near.into_iter().map(|(distance_km, task)| Bid { driver: driver.id, task, unit_price, distance_km }).collect()
}

/// One winning pair of a round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Award {
    pub driver: DriverId,
    pub task: TaskId,
    pub payment: f64,
    pub valuation: f64,
    pub dedicated_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: u32,
    /// Tasks released into this cycle's auction.
    pub released: usize,
    pub assigned: usize,
    pub theta: f64,
    pub omega_t: Option<f64>,
    /// Π or Ψ′ of the round.
    pub objective: f64,
    pub bids: usize,
    pub awards: Vec<Award>,
    pub trips_reassigned: usize,
    pub trips_dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Savings against the dedicated vehicle on the tasks drivers performed.
    pub ss: f64,
    /// Dedicated cost of every task minus all payments.
    pub ss_all_tasks: f64,
    pub rb: f64,
    pub cr: f64,
    /// No tasks existed; `cr` is reported as 1.
    pub cr_vacuous: bool,
    pub awt_s: f64,
    pub atr: f64,
    pub ap_a: f64,
    pub ap_b: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub riders_released: usize,
    pub riders_matched: usize,
    pub riders_expired: usize,
    pub tasks: usize,
    pub tasks_assigned: usize,
    pub tasks_fallback: usize,
    pub payments: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config_digest: String,
    pub seed: u64,
    pub mechanism: Mechanism,
    pub aggregates: Aggregates,
    pub totals: Totals,
    pub cycles: Vec<CycleRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    RiderMatched { t: Seconds, rider: RiderId, driver: DriverId, wait_s: Seconds, pickup_km: f64 },
    RiderExpired { t: Seconds, rider: RiderId },
    TasksReleased { t: Seconds, cycle: u32, tasks: Vec<TaskId>, drivers: Vec<DriverId> },
    BidsCollected { t: Seconds, cycle: u32, bids: Vec<Bid> },
    RoundSettled { t: Seconds, cycle: u32, awards: Vec<Award>, theta: f64, omega_t: Option<f64> },
    TripDisplaced { t: Seconds, rider: RiderId, old_driver: DriverId, fix: TripFix },
    TaskFallback { t: Seconds, task: TaskId },
}

/// Raw quantities the aggregate metrics are computed from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog {
    pub omega: Money,
    /// Dedicated cost of every task.
    pub dedicated_costs: Vec<Money>,
    /// (dedicated cost, payment) of every assigned task.
    pub awarded: Vec<(Money, Money)>,
    pub thetas: Vec<Money>,
    pub riders_released: usize,
    pub waits_s: Vec<Seconds>,
    pub earnings_a: Vec<Money>,
    pub earnings_b: Vec<Money>,
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

pub fn compute_metrics(log: &RunLog) -> Aggregates {
    let paid: Money = log.awarded.iter().map(|a| a.1).sum();
    let ss: Money = log.awarded.iter().map(|&(c, p)| c - p).sum();
    let all: Money = log.dedicated_costs.iter().sum();
    let spent: Money = log.thetas.iter().sum();
    let n_tasks = log.dedicated_costs.len();
    Aggregates {
        ss: ss.to_f64(),
        ss_all_tasks: (all - paid).to_f64(),
        rb: (log.omega - spent).to_f64(),
        cr: if n_tasks == 0 { 1.0 } else { log.awarded.len() as f64 / n_tasks as f64 },
        cr_vacuous: n_tasks == 0,
        awt_s: mean(log.waits_s.iter().map(|&w| w as f64)),
        atr: if log.riders_released == 0 { 1.0 } else { log.waits_s.len() as f64 / log.riders_released as f64 },
        ap_a: mean(log.earnings_a.iter().map(|m| m.to_f64())),
        ap_b: mean(log.earnings_b.iter().map(|m| m.to_f64())),
    }
}

pub fn config_digest(scenario: &Scenario) -> String {
    let json = serde_json::to_vec(&scenario.config).expect("config serialises");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

struct Sim<'a, F: FnMut(&Event)> {
    scenario: &'a Scenario,
    mechanism: Mechanism,
    seed: u64,
    geometry: Geometry,
    clock: Clock,
    policy: BiddingPolicy,
    drivers: Vec<Driver>,
    tasks: Vec<SensingTask>,
    /// Tasks not yet assigned, previously auctioned ones first.
    pool: VecDeque<usize>,
    batch: Vec<usize>,
    next_request: usize,
    waiting: Vec<TripRequest>,
    ledger: BudgetLedger,
    log: RunLog,
    totals: Totals,
    cycles: Vec<CycleRecord>,
    emit: F,
}

impl<F: FnMut(&Event)> Sim<'_, F> {
    fn params(&self) -> &Params {
        &self.scenario.config.params
    }

    fn stats(&self) -> &[ZoneStats] {
        &self.scenario.zone_stats
    }

    fn tick(&mut self) -> Result<(), SimError> {
        let now = self.clock.now;
        for d in &mut self.drivers {
            if !matches!(d.state, DriverState::AwaitingAuction) {
                d.release(now);
            }
        }
        self.admit_riders(now);

        if self.clock.is_bidding_start() {
            self.open_round(now)?;
        }
        if self.clock.is_settlement_start() && !self.batch.is_empty() {
            self.settle_round(now)?;
        } else {
            if self.clock.is_settlement_start() {
                self.record_empty_round();
            }
            let matching = {
                let drivers = self.drivers.iter().filter(|d| d.is_idle());
                match_trips(drivers, &self.waiting, self.stats(), self.params(), &self.geometry)
            };
            self.apply_matching(now, &matching)?;
        }
        self.check_invariants(now)
    }

    fn admit_riders(&mut self, now: Seconds) {
        let requests = &self.scenario.requests;
        while self.next_request < requests.len() && requests[self.next_request].release_time <= now {
            self.waiting.push(requests[self.next_request].clone());
            self.next_request += 1;
        }
        let emit = &mut self.emit;
        let totals = &mut self.totals;
        self.waiting.retain(|r| {
            let alive = r.expiry_time > now;
            if !alive {
                totals.riders_expired += 1;
                emit(&Event::RiderExpired { t: now, rider: r.id });
            }
            alive
        });
    }

    fn apply_matching(&mut self, now: Seconds, matching: &Matching) -> Result<(), SimError> {
        if matching.is_empty() {
            return Ok(());
        }
        let riders: BTreeMap<RiderId, usize> = self.waiting.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        let mut served = BTreeSet::new();
        for edge in &matching.pairs {
            let rider = &self.waiting[riders[&edge.rider]];
            let d = &mut self.drivers[edge.driver.0 as usize];
            let p = &self.scenario.config.params;
            let until = now + p.travel_seconds(edge.pickup_km + rider.od_distance_km);
            d.begin_trip(now, until, rider.destination)?;
            let dest = ZoneStats::lookup(&self.scenario.zone_stats, self.geometry.zone_of(rider.destination));
            d.cumulative_earnings += driver_trip_earning(rider.od_distance_km, &dest, p);
            let wait_s = now - rider.release_time;
            self.log.waits_s.push(wait_s);
            served.insert(edge.rider);
            (self.emit)(&Event::RiderMatched {
                t: now,
                rider: edge.rider,
                driver: edge.driver,
                wait_s,
                pickup_km: edge.pickup_km,
            });
        }
        self.totals.riders_matched += served.len();
        self.waiting.retain(|r| !served.contains(&r.id));
        Ok(())
    }

    fn open_round(&mut self, now: Seconds) -> Result<(), SimError> {
        let idle_b: Vec<usize> = (0..self.drivers.len())
            .filter(|&i| self.drivers[i].kind == DriverKind::TypeB && self.drivers[i].is_idle())
            .collect();
        let size = idle_b.len().min(self.pool.len());
        self.batch = self.pool.drain(..size).collect();
        if self.batch.is_empty() {
            return Ok(());
        }
        for &i in &idle_b {
            self.drivers[i].await_auction()?;
        }
        (self.emit)(&Event::TasksReleased {
            t: now,
            cycle: self.clock.cycle(),
            tasks: self.batch.iter().map(|&k| self.tasks[k].id).collect(),
            drivers: idle_b.iter().map(|&i| self.drivers[i].id).collect(),
        });
        Ok(())
    }

    fn collect_bids(&self) -> Vec<Bid> {
        let visible: Vec<&SensingTask> = self.batch.iter().map(|&k| &self.tasks[k]).collect();
        let cycle = self.clock.cycle();
        self.drivers
            .iter()
            .filter(|d| d.state == DriverState::AwaitingAuction)
            .flat_map(|d| {
                let mut rng = bid_rng(self.seed, cycle, d.id);
                generate_bids(d, &visible, &self.policy, &mut rng, &self.geometry)
            })
            .collect()
    }

    fn settle_round(&mut self, now: Seconds) -> Result<(), SimError> {
        let cycle = self.clock.cycle();
        let bids = self.collect_bids();
        (self.emit)(&Event::BidsCollected { t: now, cycle, bids: bids.clone() });
        let bidders: Vec<DriverId> =
            self.drivers.iter().filter(|d| d.state == DriverState::AwaitingAuction).map(|d| d.id).collect();
        let task_list: Vec<(TaskId, f64)> =
            self.batch.iter().map(|&k| (self.tasks[k].id, self.tasks[k].depot_distance_km)).collect();
        let inst = AuctionInstance::from_bids(&bidders, &task_list, &bids, self.params())?;

        let (outcome, matching) = {
            let ctx = TripContext {
                drivers: self.drivers.iter().filter(|d| d.is_available()).collect(),
                riders: &self.waiting,
                stats: &self.scenario.zone_stats,
                params: &self.scenario.config.params,
                geometry: &self.geometry,
            };
            match self.mechanism {
                Mechanism::Vcg => {
                    let r = run_vcg_round(&inst, &ctx)?;
                    self.ledger.record(r.0.expenditure);
                    r
                }
                Mechanism::Rbc => {
                    self.ledger.released_this_round = self.batch.len();
                    self.ledger.remaining_tasks = self.batch.len() + self.pool.len();
                    run_rbc_round(&inst, &ctx, &mut self.ledger)?
                }
            }
        };
        let record = self.apply_outcome(now, &inst, &outcome, bids.len())?;
        for fix in &outcome.displaced_trip_fixes {
            (self.emit)(&Event::TripDisplaced { t: now, rider: fix.rider, old_driver: fix.old_driver, fix: fix.fix });
        }
        self.apply_matching(now, &matching)?;
        for d in &mut self.drivers {
            if d.state == DriverState::AwaitingAuction {
                d.release(now);
            }
        }
        (self.emit)(&Event::RoundSettled {
            t: now,
            cycle,
            awards: record.awards.clone(),
            theta: record.theta,
            omega_t: record.omega_t,
        });
        self.cycles.push(record);
        Ok(())
    }

    fn apply_outcome(
        &mut self,
        now: Seconds,
        inst: &AuctionInstance,
        outcome: &RoundOutcome,
        n_bids: usize,
    ) -> Result<CycleRecord, SimError> {
        let dwell = self.scenario.config.task_dwell_s;
        let mut awards = Vec::new();
        let mut assigned = BTreeSet::new();
        for &(driver, task) in &outcome.assignment {
            let (d, k) = (inst.driver_index(driver).unwrap(), inst.task_index(task).unwrap());
            let entry = inst.entry(d, k).expect("winning pair has a bid");
            let l = inst.distance_km[d * inst.n_tasks() + k].expect("winning bid has a distance");
            let payment = outcome.payments[&driver];
            let idx = self.batch.iter().copied().find(|&i| self.tasks[i].id == task).expect("task in batch");
            let until = now + self.params().travel_seconds(l) + dwell;
            let drv = &mut self.drivers[driver.0 as usize];
            drv.begin_task(now, until, self.tasks[idx].poi)?;
            drv.cumulative_earnings += payment;
            drv.cumulative_cost_basis += entry.adjusted;
            self.tasks[idx].state = TaskState::Assigned { driver };
            self.log.awarded.push((inst.dedicated_cost[k], payment));
            assigned.insert(idx);
            awards.push(Award {
                driver,
                task,
                payment: payment.to_f64(),
                valuation: entry.adjusted.to_f64(),
                dedicated_cost: inst.dedicated_cost[k].to_f64(),
            });
        }
        let mut deferred: Vec<usize> = self.batch.drain(..).filter(|i| !assigned.contains(i)).collect();
        for &i in &deferred {
            self.tasks[i].state = TaskState::Deferred;
        }
        deferred.extend(self.pool.drain(..));
        self.pool = deferred.into();
        self.totals.tasks_assigned += assigned.len();

        let fixes = &outcome.displaced_trip_fixes;
        let reassigned = fixes.iter().filter(|f| matches!(f.fix, TripFix::Reassigned(_))).count();
        Ok(CycleRecord {
            cycle: self.clock.cycle(),
            released: inst.n_tasks(),
            assigned: assigned.len(),
            theta: outcome.expenditure.to_f64(),
            omega_t: outcome.omega_t.map(Money::to_f64),
            objective: outcome.objective.to_f64(),
            bids: n_bids,
            awards,
            trips_reassigned: reassigned,
            trips_dropped: fixes.len() - reassigned,
        })
    }

    fn record_empty_round(&mut self) {
        self.ledger.record(Money::ZERO);
        self.cycles.push(CycleRecord {
            cycle: self.clock.cycle(),
            released: 0,
            assigned: 0,
            theta: 0.0,
            omega_t: (self.mechanism == Mechanism::Rbc).then_some(0.0),
            objective: 0.0,
            bids: 0,
            awards: Vec::new(),
            trips_reassigned: 0,
            trips_dropped: 0,
        });
    }

    fn check_invariants(&self, now: Seconds) -> Result<(), SimError> {
        let fail = |detail: String| Err(SimError::Invariant { t: now, detail });
        for d in &self.drivers {
            if d.kind == DriverKind::TypeA
                && matches!(d.state, DriverState::OnTask { .. } | DriverState::AwaitingAuction)
            {
                return fail(format!("type-A driver {} entered the auction path", d.id));
            }
        }
        let spent = self.ledger.total_spent();
        if self.ledger.remaining_budget() + spent != self.ledger.omega_total {
            return fail(format!("budget identity broken: spent {spent}"));
        }
        let assigned = self.tasks.iter().filter(|t| matches!(t.state, TaskState::Assigned { .. })).count();
        if assigned + self.pool.len() + self.batch.len() != self.tasks.len() {
            return fail(format!(
                "{} tasks assigned, {} pooled, {} batched of {}",
                assigned,
                self.pool.len(),
                self.batch.len(),
                self.tasks.len()
            ));
        }
        Ok(())
    }

    fn finish(mut self) -> SimulationReport {
        let end = self.scenario.config.horizon_s;
        for &i in self.pool.iter().chain(&self.batch) {
            self.tasks[i].state = TaskState::Fallback;
            (self.emit)(&Event::TaskFallback { t: end, task: self.tasks[i].id });
        }
        self.totals.tasks_fallback = self.pool.len() + self.batch.len();
        self.totals.tasks = self.tasks.len();
        self.totals.riders_released = self.scenario.requests.iter().filter(|r| r.release_time < end).count();
        self.totals.payments = self.log.awarded.iter().map(|a| a.1).sum::<Money>().to_f64();

        let p = &self.scenario.config.params;
        self.log.omega = Money::from_f64(p.total_budget);
        self.log.dedicated_costs =
            self.tasks.iter().map(|t| Money::from_f64(p.dedicated_cost_per_km * t.depot_distance_km)).collect();
        self.log.thetas = self.ledger.spent_per_round.clone();
        self.log.riders_released = self.totals.riders_released;
        for d in &self.drivers {
            match d.kind {
                DriverKind::TypeA => self.log.earnings_a.push(d.cumulative_earnings),
                DriverKind::TypeB => self.log.earnings_b.push(d.cumulative_earnings),
            }
        }
        SimulationReport {
            config_digest: config_digest(self.scenario),
            seed: self.seed,
            mechanism: self.mechanism,
            aggregates: compute_metrics(&self.log),
            totals: self.totals,
            cycles: self.cycles,
        }
    }
}

fn check_scenario(s: &Scenario) -> Result<(), SimError> {
    s.config.validate()?;
    for (i, d) in s.drivers.iter().enumerate() {
        if d.id.0 as usize != i {
            return Err(SimError::Config(format!("driver at position {i} has id {}", d.id)));
        }
        if d.state != DriverState::Idle {
            return Err(SimError::Config(format!("driver {} does not start idle", d.id)));
        }
    }
    if s.requests.windows(2).any(|w| w[0].release_time > w[1].release_time) {
        return Err(SimError::Config("requests must be ordered by release time".into()));
    }
    if s.zone_stats.len() != s.config.grid.zone_count() {
        return Err(SimError::Config(format!(
            "{} zone statistics for {} zones",
            s.zone_stats.len(),
            s.config.grid.zone_count()
        )));
    }
    Ok(())
}

/// Runs the scenario and reports every state change to `emit`.
pub fn run_with_events(
    scenario: &Scenario,
    mechanism: Mechanism,
    seed: u64,
    emit: impl FnMut(&Event),
) -> Result<SimulationReport, SimError> {
    check_scenario(scenario)?;
    let cfg = &scenario.config;
    let clock = Clock::for_cycle(cfg.cycle_s())?;
    let mut sim = Sim {
        scenario,
        mechanism,
        seed,
        geometry: cfg.geometry(),
        clock,
        policy: BiddingPolicy::from_params(&cfg.params, cfg.max_bids, cfg.bid_radius_km),
        drivers: scenario.drivers.clone(),
        tasks: scenario.tasks.clone(),
        pool: (0..scenario.tasks.len()).collect(),
        batch: Vec::new(),
        next_request: 0,
        waiting: Vec::new(),
        ledger: BudgetLedger::new(Money::from_f64(cfg.params.total_budget), scenario.tasks.len()),
        log: RunLog::default(),
        totals: Totals::default(),
        cycles: Vec::new(),
        emit,
    };
    while sim.clock.now < cfg.horizon_s {
        sim.tick()?;
        sim.clock.advance();
    }
    Ok(sim.finish())
}

pub fn run(scenario: &Scenario, mechanism: Mechanism, seed: u64) -> Result<SimulationReport, SimError> {
    run_with_events(scenario, mechanism, seed, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Location, Metric, ZoneGrid};
    use crate::scenario::{generate_synthetic, ScenarioConfig};

    fn geo() -> Geometry {
        Geometry { grid: ZoneGrid::new(20.0, 2.0, 20, 2).unwrap(), metric: Metric::Euclidean }
    }

    fn task(id: u32, x: f64) -> SensingTask {
        SensingTask::new(TaskId(id), Location::new(x, 1.0).unwrap(), 0, Location::new(0.0, 0.0).unwrap(), &geo())
    }

    #[test]
    fn clock_phases() {
        let mut c = Clock::for_cycle(300).unwrap();
        assert_eq!(c.phase_durations, (180, 90, 30));
        assert_eq!(c.phase(), Phase::TripMatching);
        for _ in 0..6 {
            c.advance();
        }
        assert!(c.is_bidding_start());
        assert_eq!(c.phase(), Phase::Bidding);
        for _ in 0..3 {
            c.advance();
        }
        assert!(c.is_settlement_start());
        c.advance();
        assert_eq!((c.cycle(), c.phase()), (1, Phase::TripMatching));
        assert!(Clock::new(30, (180, 100, 20)).is_err());
    }

    #[test]
    fn bids_go_to_nearest_tasks() {
        let tasks: Vec<SensingTask> = (0..10).map(|i| task(i, 2.0 * i as f64 + 1.0)).collect();
        let visible: Vec<&SensingTask> = tasks.iter().collect();
        let d = Driver::new(DriverId(3), DriverKind::TypeB, Location::new(6.0, 1.0).unwrap());
        let policy = BiddingPolicy { bid_lb: 2.0, bid_ub: 4.0, max_bids_per_driver: 5, bid_radius_km: None };
        let bids = generate_bids(&d, &visible, &policy, &mut bid_rng(9, 0, d.id), &geo());
        let ids: Vec<u32> = bids.iter().map(|b| b.task.0).collect();
        assert_eq!(ids, vec![2, 3, 1, 4, 0]);
        assert!(bids.iter().all(|b| b.unit_price == bids[0].unit_price && (2.0..=4.0).contains(&b.unit_price)));
        let again = generate_bids(&d, &visible, &policy, &mut bid_rng(9, 0, d.id), &geo());
        assert_eq!(bids, again);
        assert!(generate_bids(&d, &[], &policy, &mut bid_rng(9, 0, d.id), &geo()).is_empty());
        let near = BiddingPolicy { bid_radius_km: Some(1.5), ..policy };
        assert_eq!(generate_bids(&d, &visible, &near, &mut bid_rng(9, 0, d.id), &geo()).len(), 2);
    }

    #[test]
    fn metric_examples() {
        let log = RunLog {
            omega: Money::whole(2000),
            dedicated_costs: vec![Money::whole(50), Money::whole(50)],
            awarded: vec![(Money::whole(50), Money::whole(30)), (Money::whole(50), Money::whole(30))],
            thetas: vec![Money::ZERO, Money::whole(60)],
            ..Default::default()
        };
        let a = compute_metrics(&log);
        assert_eq!((a.ss, a.ss_all_tasks, a.rb, a.cr), (40.0, 40.0, 1940.0, 1.0));

        let log = RunLog {
            omega: Money::whole(2000),
            dedicated_costs: vec![Money::whole(1); 80],
            awarded: vec![(Money::whole(1), Money::ZERO); 72],
            ..Default::default()
        };
        assert!((compute_metrics(&log).cr - 0.9).abs() < 1e-12);

        let empty = compute_metrics(&RunLog { omega: Money::whole(2000), ..Default::default() });
        assert_eq!((empty.rb, empty.cr, empty.cr_vacuous), (2000.0, 1.0, true));
    }

    fn small() -> Scenario {
        let cfg = ScenarioConfig {
            horizon_s: 1800,
            n_type_a: 30,
            n_type_b: 8,
            n_tasks: 20,
            demand_level: crate::scenario::DemandLevel::Total(200),
            seed: 3,
            ..Default::default()
        };
        generate_synthetic(&cfg).unwrap()
    }

    #[test]
    fn runs_are_deterministic() {
        let s = small();
        for m in [Mechanism::Vcg, Mechanism::Rbc] {
            let a = serde_json::to_string(&run(&s, m, 11).unwrap()).unwrap();
            let b = serde_json::to_string(&run(&s, m, 11).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn tasks_are_conserved_and_budget_adds_up() {
        let s = small();
        for m in [Mechanism::Vcg, Mechanism::Rbc] {
            let r = run(&s, m, 2).unwrap();
            assert_eq!(r.totals.tasks_assigned + r.totals.tasks_fallback, 20);
            let theta: f64 = r.cycles.iter().map(|c| c.theta).sum();
            assert!((r.aggregates.rb + theta - 2000.0).abs() < 1e-6);
            assert_eq!(r.cycles.len(), 6);
        }
    }

    #[test]
    fn no_sensing_drivers_means_no_auctions() {
        let mut s = small();
        s.drivers.retain(|d| d.kind == DriverKind::TypeA);
        s.config.n_type_b = 0;
        let v = run(&s, Mechanism::Vcg, 1).unwrap();
        let r = run(&s, Mechanism::Rbc, 1).unwrap();
        assert_eq!(v.aggregates.cr, 0.0);
        assert_eq!(v.aggregates.atr, r.aggregates.atr);
        assert_eq!(v.aggregates.awt_s, r.aggregates.awt_s);
        assert_eq!(v.aggregates.ap_a, r.aggregates.ap_a);
    }

    #[test]
    fn events_track_matches() {
        let s = small();
        let mut matched = 0;
        let report = run_with_events(&s, Mechanism::Rbc, 4, |e| {
            if matches!(e, Event::RiderMatched { .. }) {
                matched += 1;
            }
        })
        .unwrap();
        assert_eq!(matched, report.totals.riders_matched);
    }
}
