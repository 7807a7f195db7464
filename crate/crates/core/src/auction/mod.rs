//! Reverse auctions for sensing tasks among idle Type-B drivers.
//!
//! Both mechanisms share the instance layout, the coverage-aware assignment
//! solver and the trip-conflict repair step. They differ in the objective
//! (maximum cost saving vs minimum adjusted valuation), in budget handling
//! and in payments.

pub mod conflict;
pub mod rbc;
pub mod vcg;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DriverId, Params, TaskId};
use crate::hungarian::max_cardinality_matching;
use crate::money::Money;
use crate::pricing::{adjusted_valuation, PricingError};

pub use conflict::{resolve_conflicts, DisplacedTrip, TripContext, TripFix};
pub use rbc::{
    rbc_payment, rbc_settle, round_budget, run_rbc_round, select_winners_rbc, BudgetLedger, RbcSelection, TabuList,
};
pub use vcg::{run_vcg_round, select_winners_vcg, vcg_payment, vcg_settle, VcgSelection};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuctionError {
    #[error("driver {0} did not win a task")]
    NotAWinner(DriverId),
    #[error("driver {0} is not part of this auction")]
    UnknownDriver(DriverId),
    #[error("task {0} is not part of this auction")]
    UnknownTask(TaskId),
    #[error("{released} tasks released but only {remaining} remain")]
    InconsistentLedger { released: usize, remaining: usize },
    #[error(transparent)]
    Pricing(#[from] PricingError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    #[default]
    Vcg,
    Rbc,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Vcg => "vcg",
            Mechanism::Rbc => "rbc",
        })
    }
}

impl FromStr for Mechanism {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "vcg" => Ok(Mechanism::Vcg),
            "rbc" => Ok(Mechanism::Rbc),
            other => Err(format!("unknown mechanism `{other}` (expected vcg or rbc)")),
        }
    }
}

/// A driver's offer to perform one task at its cycle unit price.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub driver: DriverId,
    pub task: TaskId,
    pub unit_price: f64,
    pub distance_km: f64,
}

/// Valuation data of one valid (driver, task) bid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub adjusted: Money,
    pub upper_bound: Money,
}

/// Dense drivers × tasks bid table for one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuctionInstance {
    pub drivers: Vec<DriverId>,
    pub tasks: Vec<TaskId>,
    /// Dedicated-vehicle cost `c_q · l_qk` per task.
    pub dedicated_cost: Vec<Money>,
    /// Unit price of each driver's bids; `None` for hand-built instances.
    pub unit_price: Vec<Option<f64>>,
    /// Driver-to-task distance of each valid bid.
    pub distance_km: Vec<Option<f64>>,
    entries: Vec<Option<Entry>>,
}

impl AuctionInstance {
    /// Instance from explicit valuations. `entries[d][k]` is `None` where
    /// driver `d` did not bid on task `k`.
    pub fn from_entries(dedicated_cost: Vec<Money>, entries: Vec<Vec<Option<Entry>>>) -> Self {
        let n_tasks = dedicated_cost.len();
        let n_drivers = entries.len();
        assert!(entries.iter().all(|row| row.len() == n_tasks), "entry rows must have one cell per task");
        AuctionInstance {
            drivers: (0..n_drivers as u32).map(DriverId).collect(),
            tasks: (0..n_tasks as u32).map(TaskId).collect(),
            dedicated_cost,
            unit_price: vec![None; n_drivers],
            distance_km: vec![None; n_drivers * n_tasks],
            entries: entries.into_iter().flatten().collect(),
        }
    }

    /// Instance from bids. Drivers without bids are kept but can never win.
    pub fn from_bids(
        drivers: &[DriverId],
        tasks: &[(TaskId, f64)],
        bids: &[Bid],
        p: &Params,
    ) -> Result<Self, AuctionError> {
        let n_tasks = tasks.len();
        let mut inst = AuctionInstance {
            drivers: drivers.to_vec(),
            tasks: tasks.iter().map(|t| t.0).collect(),
            dedicated_cost: tasks.iter().map(|t| Money::from_f64(p.dedicated_cost_per_km * t.1)).collect(),
            unit_price: vec![None; drivers.len()],
            distance_km: vec![None; drivers.len() * n_tasks],
            entries: vec![None; drivers.len() * n_tasks],
        };
        for bid in bids {
            let d = inst.driver_index(bid.driver).ok_or(AuctionError::UnknownDriver(bid.driver))?;
            let k = inst.task_index(bid.task).ok_or(AuctionError::UnknownTask(bid.task))?;
            let v = adjusted_valuation(bid.unit_price, bid.distance_km, p)?;
            inst.unit_price[d] = Some(bid.unit_price);
            inst.distance_km[d * n_tasks + k] = Some(bid.distance_km);
            inst.entries[d * n_tasks + k] = Some(Entry { adjusted: v.adjusted, upper_bound: v.upper_bound });
        }
        Ok(inst)
    }

    /// Same instance with driver `d` (by index) bidding `unit_price` on the
    /// same tasks. Hand-built instances have no distances and are returned
    /// unchanged.
    pub fn with_unit_price(&self, d: usize, unit_price: f64, p: &Params) -> Result<Self, AuctionError> {
        let mut out = self.clone();
        for k in 0..self.n_tasks() {
            if let Some(l) = self.distance_km[d * self.n_tasks() + k] {
                let v = adjusted_valuation(unit_price, l, p)?;
                out.entries[d * self.n_tasks() + k] = Some(Entry { adjusted: v.adjusted, upper_bound: v.upper_bound });
                out.unit_price[d] = Some(unit_price);
            }
        }
        Ok(out)
    }

    pub fn n_drivers(&self) -> usize {
        self.drivers.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn driver_index(&self, id: DriverId) -> Option<usize> {
        self.drivers.iter().position(|&d| d == id)
    }

    pub fn task_index(&self, id: TaskId) -> Option<usize> {
        self.tasks.iter().position(|&k| k == id)
    }

    pub fn entry(&self, d: usize, k: usize) -> Option<Entry> {
        self.entries[d * self.n_tasks() + k]
    }

    /// Cost saving `c_q · l_qk − v` of a valid bid.
    pub fn saving(&self, d: usize, k: usize) -> Option<Money> {
        self.entry(d, k).map(|e| self.dedicated_cost[k] - e.adjusted)
    }

    pub fn bidders(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_drivers()).filter(move |&d| self.entry(d, k).is_some())
    }
}

/// Maximum-coverage assignment over the allowed bids, optimal in `score`
/// (larger is better) among those of maximum coverage. Pairs are
/// (driver index, task index), sorted by driver.
pub(crate) fn cover_tasks(
    inst: &AuctionInstance,
    allowed: impl Fn(usize, usize) -> bool,
    score: impl Fn(usize, usize, Entry) -> Money,
) -> Vec<(usize, usize)> {
    max_cardinality_matching(inst.n_drivers(), inst.n_tasks(), |d, k| {
        let e = inst.entry(d, k)?;
        allowed(d, k).then(|| score(d, k, e).units())
    })
}

/// Number of tasks with at least one allowed bid.
pub(crate) fn biddable_tasks(inst: &AuctionInstance, allowed: impl Fn(usize, usize) -> bool) -> usize {
    (0..inst.n_tasks()).filter(|&k| inst.bidders(k).any(|d| allowed(d, k))).count()
}

/// Winners, payments and trip repairs of one auction round.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub mechanism: Mechanism,
    pub assignment: Vec<(DriverId, TaskId)>,
    pub payments: BTreeMap<DriverId, Money>,
    pub utilities: BTreeMap<DriverId, Money>,
    /// Π for VCG, Ψ′ for RBC.
    pub objective: Money,
    pub expenditure: Money,
    pub displaced_trip_fixes: Vec<DisplacedTrip>,
    /// Some biddable task could not be covered for lack of drivers.
    pub coverage_shortfall: bool,
    /// Round budget; only set by the budgeted mechanism.
    pub omega_t: Option<Money>,
    pub tabu: Option<TabuList>,
}

impl RoundOutcome {
    pub fn winners(&self) -> BTreeSet<DriverId> {
        self.assignment.iter().map(|p| p.0).collect()
    }

    pub fn task_of(&self, driver: DriverId) -> Option<TaskId> {
        self.assignment.iter().find(|p| p.0 == driver).map(|p| p.1)
    }
}

/// Winner selection and payments of either mechanism, without trip matching.
/// `omega_t` is ignored by the unbudgeted mechanism.
pub fn settle_round(
    mechanism: Mechanism,
    inst: &AuctionInstance,
    omega_t: Money,
) -> Result<RoundOutcome, AuctionError> {
    match mechanism {
        Mechanism::Vcg => vcg::vcg_settle(inst),
        Mechanism::Rbc => rbc::rbc_settle(inst, omega_t),
    }
}

/// Payments and utilities for the index-level pairs of a selection.
pub(crate) fn settle(
    inst: &AuctionInstance,
    mechanism: Mechanism,
    pairs: &[(usize, usize)],
    objective: Money,
    pay: impl Fn(usize) -> Result<Money, AuctionError>,
) -> Result<RoundOutcome, AuctionError> {
    let mut out = RoundOutcome { mechanism, objective, ..Default::default() };
    for &(d, k) in pairs {
        let id = inst.drivers[d];
        let payment = pay(d)?;
        let v = inst.entry(d, k).expect("winning pair has a bid").adjusted;
        out.assignment.push((id, inst.tasks[k]));
        out.payments.insert(id, payment);
        out.utilities.insert(id, payment - v);
        out.expenditure += payment;
    }
    Ok(out)
}
