//! Budget-controlled assignment: minimum total valuation, greedy tabu pruning
//! against the round budget, and payments capped at the valuation upper bound.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::conflict::{resolve_conflicts, TripContext};
use super::{biddable_tasks, cover_tasks, settle, AuctionError, AuctionInstance, Mechanism, RoundOutcome};
use crate::domain::{DriverId, TaskId};
use crate::money::Money;
use crate::trip_matching::{match_trips, Matching};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub omega_total: Money,
    /// Θ per round, starting with Θ₀ = 0.
    pub spent_per_round: Vec<Money>,
    /// Tasks not yet assigned, including this round's batch.
    pub remaining_tasks: usize,
    pub released_this_round: usize,
}

impl BudgetLedger {
    pub fn new(omega_total: Money, total_tasks: usize) -> Self {
        BudgetLedger {
            omega_total,
            spent_per_round: vec![Money::ZERO],
            remaining_tasks: total_tasks,
            released_this_round: 0,
        }
    }

    pub fn total_spent(&self) -> Money {
        self.spent_per_round.iter().sum()
    }

    pub fn remaining_budget(&self) -> Money {
        self.omega_total - self.total_spent()
    }

    pub fn record(&mut self, theta: Money) {
        self.spent_per_round.push(theta);
    }
}

/// `Ω_T = K_T / K_r · (Ω − ΣΘ)`, rounded down to the money unit.
pub fn round_budget(ledger: &BudgetLedger) -> Result<Money, AuctionError> {
    let (k_t, k_r) = (ledger.released_this_round, ledger.remaining_tasks);
    if k_t == 0 {
        return Ok(Money::ZERO);
    }
    if k_r < k_t {
        return Err(AuctionError::InconsistentLedger { released: k_t, remaining: k_r });
    }
    let left = ledger.remaining_budget().units().max(0) as i128;
    Ok(Money::from_units((left * k_t as i128 / k_r as i128) as i64))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabuList {
    pub forbidden: BTreeSet<(DriverId, TaskId)>,
    /// Tasks whose every bidder is forbidden; they no longer need covering.
    pub relaxed_tasks: BTreeSet<TaskId>,
}

impl TabuList {
    fn allows(&self, inst: &AuctionInstance, d: usize, k: usize) -> bool {
        !self.forbidden.contains(&(inst.drivers[d], inst.tasks[k]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbcSelection {
    /// (driver index, task index) pairs.
    pub pairs: Vec<(usize, usize)>,
    /// Ψ′: total adjusted valuation of the assignment.
    pub objective: Money,
    pub tabu: TabuList,
    pub iterations: usize,
    pub coverage_shortfall: bool,
}

fn solve(inst: &AuctionInstance, tabu: &TabuList, excluded: Option<usize>) -> (Vec<(usize, usize)>, Money) {
    let pairs = cover_tasks(inst, |d, k| Some(d) != excluded && tabu.allows(inst, d, k), |_, _, e| -e.adjusted);
    let psi = pairs.iter().map(|&(d, k)| inst.entry(d, k).unwrap().adjusted).sum();
    (pairs, psi)
}

/// Cheapest full-coverage assignment, pruned pair by pair until the sum of
/// valuation upper bounds fits in `omega_t`.
pub fn select_winners_rbc(inst: &AuctionInstance, omega_t: Money) -> RbcSelection {
    let mut tabu = TabuList::default();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (pairs, objective) = solve(inst, &tabu, None);
        let bound: Money = pairs.iter().map(|&(d, k)| inst.entry(d, k).unwrap().upper_bound).sum();
        if bound <= omega_t {
            let coverage_shortfall = pairs.len() < biddable_tasks(inst, |d, k| tabu.allows(inst, d, k));
            return RbcSelection { pairs, objective, tabu, iterations, coverage_shortfall };
        }
        let &(d, k) = pairs
            .iter()
            .max_by_key(|&&(d, k)| {
                let e = inst.entry(d, k).unwrap();
                (e.adjusted, e.upper_bound, inst.drivers[d])
            })
            .expect("a non-empty assignment exceeds the budget");
        tabu.forbidden.insert((inst.drivers[d], inst.tasks[k]));
        if inst.bidders(k).all(|b| !tabu.allows(inst, b, k)) {
            tabu.relaxed_tasks.insert(inst.tasks[k]);
        }
    }
}

/// Pays `v̄` when removing the winner lowers Ψ′, otherwise the marginal
/// payment `v + Ψ′(D∖{d}) − Ψ′` capped at `v̄`. The tabu list stays fixed
/// and the budget is not re-applied.
pub fn rbc_payment(inst: &AuctionInstance, selection: &RbcSelection, driver: DriverId) -> Result<Money, AuctionError> {
    let d = inst.driver_index(driver).ok_or(AuctionError::UnknownDriver(driver))?;
    let &(_, k) = selection.pairs.iter().find(|p| p.0 == d).ok_or(AuctionError::NotAWinner(driver))?;
    let entry = inst.entry(d, k).unwrap();
    let (_, without) = solve(inst, &selection.tabu, Some(d));
    if without < selection.objective {
        Ok(entry.upper_bound)
    } else {
        Ok((entry.adjusted + without - selection.objective).min(entry.upper_bound))
    }
}

/// Winner selection and payments under a fixed round budget.
pub fn rbc_settle(inst: &AuctionInstance, omega_t: Money) -> Result<RoundOutcome, AuctionError> {
    let selection = select_winners_rbc(inst, omega_t);
    let mut out = settle(inst, Mechanism::Rbc, &selection.pairs, selection.objective, |d| {
        rbc_payment(inst, &selection, inst.drivers[d])
    })?;
    out.coverage_shortfall = selection.coverage_shortfall;
    out.omega_t = Some(omega_t);
    out.tabu = Some(selection.tabu);
    Ok(out)
}

/// A full round: allocate the round budget, settle, repair trip matches and
/// book the expenditure. The caller sets `released_this_round` and
/// `remaining_tasks` on the ledger beforehand.
pub fn run_rbc_round(
    inst: &AuctionInstance,
    ctx: &TripContext<'_>,
    ledger: &mut BudgetLedger,
) -> Result<(RoundOutcome, Matching), AuctionError> {
    let omega_t = round_budget(ledger)?;
    let mut outcome = rbc_settle(inst, omega_t)?;
    let matching = match_trips(ctx.drivers.iter().copied(), ctx.riders, ctx.stats, ctx.params, ctx.geometry);
    let (matching, fixes) = resolve_conflicts(matching, &outcome.winners(), ctx);
    outcome.displaced_trip_fixes = fixes;
    ledger.record(outcome.expenditure);
    Ok((outcome, matching))
}
