//! Welfare-maximising assignment with VCG payments.

use serde::{Deserialize, Serialize};

use super::conflict::{resolve_conflicts, TripContext};
use super::{biddable_tasks, cover_tasks, settle, AuctionError, AuctionInstance, Mechanism, RoundOutcome};
use crate::domain::DriverId;
use crate::money::Money;
use crate::trip_matching::{match_trips, Matching};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VcgSelection {
    /// (driver index, task index) pairs.
    pub pairs: Vec<(usize, usize)>,
    /// Π: total cost saving of the assignment.
    pub objective: Money,
    pub coverage_shortfall: bool,
}

fn solve(inst: &AuctionInstance, excluded: Option<usize>) -> VcgSelection {
    let allowed = |d: usize, _k: usize| Some(d) != excluded;
    let pairs = cover_tasks(inst, allowed, |d, k, _| inst.saving(d, k).unwrap());
    let objective = pairs.iter().map(|&(d, k)| inst.saving(d, k).unwrap()).sum();
    let coverage_shortfall = pairs.len() < biddable_tasks(inst, allowed);
    VcgSelection { pairs, objective, coverage_shortfall }
}

/// Assignment maximising Π among those covering as many biddable tasks as possible.
pub fn select_winners_vcg(inst: &AuctionInstance) -> VcgSelection {
    solve(inst, None)
}

/// `v + Π(D) − Π(D∖{d})`, with coverage re-evaluated without `d`.
pub fn vcg_payment(inst: &AuctionInstance, selection: &VcgSelection, driver: DriverId) -> Result<Money, AuctionError> {
    let d = inst.driver_index(driver).ok_or(AuctionError::UnknownDriver(driver))?;
    let &(_, k) = selection.pairs.iter().find(|p| p.0 == d).ok_or(AuctionError::NotAWinner(driver))?;
    let without = solve(inst, Some(d)).objective;
    Ok(inst.entry(d, k).unwrap().adjusted + selection.objective - without)
}

/// Winner selection and payments, without touching trip matching.
pub fn vcg_settle(inst: &AuctionInstance) -> Result<RoundOutcome, AuctionError> {
    let selection = select_winners_vcg(inst);
    let mut out = settle(inst, Mechanism::Vcg, &selection.pairs, selection.objective, |d| {
        vcg_payment(inst, &selection, inst.drivers[d])
    })?;
    out.coverage_shortfall = selection.coverage_shortfall;
    Ok(out)
}

/// A full round: settle the auction, match trips over every idle driver and
/// hand any rider matched to a winner to another idle driver.
pub fn run_vcg_round(inst: &AuctionInstance, ctx: &TripContext<'_>) -> Result<(RoundOutcome, Matching), AuctionError> {
    let mut outcome = vcg_settle(inst)?;
    let matching = match_trips(ctx.drivers.iter().copied(), ctx.riders, ctx.stats, ctx.params, ctx.geometry);
    let (matching, fixes) = resolve_conflicts(matching, &outcome.winners(), ctx);
    outcome.displaced_trip_fixes = fixes;
    Ok((outcome, matching))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::Entry;

    /// Hand-built instance from cost savings against a dedicated cost of 100.
    fn from_savings(savings: &[&[Option<i64>]]) -> AuctionInstance {
        let n_tasks = savings[0].len();
        let entries = savings
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| s.map(|s| Entry { adjusted: Money::whole(100 - s), upper_bound: Money::whole(200) }))
                    .collect()
            })
            .collect();
        AuctionInstance::from_entries(vec![Money::whole(100); n_tasks], entries)
    }

    #[test]
    fn two_by_two_welfare() {
        let inst = from_savings(&[&[Some(20), Some(15)], &[Some(18), Some(25)]]);
        let sel = select_winners_vcg(&inst);
        assert_eq!(sel.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(sel.objective, Money::whole(45));
        assert!(!sel.coverage_shortfall);
    }

    #[test]
    fn coverage_forces_losing_pair() {
        let inst = from_savings(&[&[Some(-5)]]);
        let sel = select_winners_vcg(&inst);
        assert_eq!((sel.pairs.clone(), sel.objective), (vec![(0, 0)], Money::whole(-5)));
        // sole bidder is paid the dedicated-vehicle cost
        assert_eq!(vcg_payment(&inst, &sel, DriverId(0)), Ok(Money::whole(100)));
    }

    #[test]
    fn no_bids() {
        let inst = from_savings(&[&[None, None]]);
        let sel = select_winners_vcg(&inst);
        assert!(sel.pairs.is_empty());
        assert_eq!(sel.objective, Money::ZERO);
    }

    fn one_task(values: &[i64], cost: i64) -> AuctionInstance {
        let entries = values
            .iter()
            .map(|&v| vec![Some(Entry { adjusted: Money::whole(v), upper_bound: Money::whole(v + 13) })])
            .collect();
        AuctionInstance::from_entries(vec![Money::whole(cost)], entries)
    }

    #[test]
    fn second_price_payment() {
        let inst = one_task(&[10, 15], 30);
        let out = vcg_settle(&inst).unwrap();
        assert_eq!(out.assignment, vec![(DriverId(0), crate::domain::TaskId(0))]);
        assert_eq!(out.payments[&DriverId(0)], Money::whole(15));
        assert_eq!(out.utilities[&DriverId(0)], Money::whole(5));
    }

    #[test]
    fn sole_bidder_paid_dedicated_cost() {
        let inst = one_task(&[10], 30);
        let out = vcg_settle(&inst).unwrap();
        assert_eq!(out.payments[&DriverId(0)], Money::whole(30));
    }

    #[test]
    fn symmetric_bidders_get_nothing_extra() {
        let out = vcg_settle(&one_task(&[12, 12], 30)).unwrap();
        assert_eq!(out.utilities.values().copied().collect::<Vec<_>>(), vec![Money::ZERO]);
    }

    #[test]
    fn loser_has_no_payment() {
        let inst = one_task(&[10, 15], 30);
        let sel = select_winners_vcg(&inst);
        assert_eq!(vcg_payment(&inst, &sel, DriverId(1)), Err(AuctionError::NotAWinner(DriverId(1))));
    }

    #[test]
    fn more_tasks_than_drivers_flags_shortfall() {
        let inst = from_savings(&[&[Some(1), Some(30)]]);
        let sel = select_winners_vcg(&inst);
        assert_eq!(sel.pairs, vec![(0, 1)]);
        assert!(sel.coverage_shortfall);
    }
}
