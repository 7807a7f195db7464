//! One round of the budget-controlled mechanism. The cheapest full cover is
//! computed first; while its valuation upper bounds exceed the round budget,
//! the most expensive pair is struck out. Payments never exceed a winner's
//! upper bound, so spending stays inside the round budget.
//!
//!     cargo run --example rbc_round -- [round budget]

use ridesense::auction::{rbc_settle, round_budget, select_winners_rbc, AuctionInstance, Bid, BudgetLedger};
use ridesense::domain::{DriverId, Params, TaskId};
use ridesense::money::Money;

fn main() {
    let p = Params::default();
    let drivers = [DriverId(0), DriverId(1), DriverId(2), DriverId(3)];
    let tasks = [(TaskId(0), 5.0), (TaskId(1), 3.0), (TaskId(2), 7.5)];
    let mut bids = Vec::new();
    for (d, price, dists) in
        [(0, 2.2, [1.0, 2.5, 4.0]), (1, 3.5, [0.6, 1.1, 3.0]), (2, 2.8, [2.0, 0.7, 1.2]), (3, 3.9, [3.3, 2.9, 0.5])]
    {
        for (k, l) in dists.into_iter().enumerate() {
            bids.push(Bid { driver: DriverId(d), task: TaskId(k as u32), unit_price: price, distance_km: l });
        }
    }
    let inst = AuctionInstance::from_bids(&drivers, &tasks, &bids, &p).expect("bids within bounds");

    // 3 of 10 remaining tasks released, 600 of the budget left
    let mut ledger = BudgetLedger::new(Money::whole(2000), 10);
    ledger.record(Money::whole(1400));
    ledger.released_this_round = 3;
    let omega_t = match std::env::args().nth(1).and_then(|s| s.parse::<f64>().ok()) {
        Some(b) => Money::from_f64(b),
        None => round_budget(&ledger).expect("consistent ledger"),
    };
    println!("round budget {omega_t}");

    let sel = select_winners_rbc(&inst, omega_t);
    println!("{} iterations, Psi' = {}", sel.iterations, sel.objective);
    for (d, k) in &sel.tabu.forbidden {
        println!("  pruned ({d}, {k})");
    }
    for k in &sel.tabu.relaxed_tasks {
        println!("  {k} no longer needs covering");
    }
    let out = rbc_settle(&inst, omega_t).expect("winners have payments");
    for (d, k) in &out.assignment {
        println!("  {d} performs {k}: paid {}, utility {}", out.payments[d], out.utilities[d]);
    }
    println!("spent {} of {}", out.expenditure, omega_t);
}
