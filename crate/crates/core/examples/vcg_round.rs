//! One sealed-bid round under the welfare-maximising mechanism: three
//! sensing drivers bid on two tasks, the platform keeps the assignment with
//! the largest saving against the dedicated vehicle and pays each winner its
//! externality.
//!
//!     cargo run --example vcg_round

use ridesense::auction::{select_winners_vcg, vcg_settle, AuctionInstance, Bid};
use ridesense::domain::{DriverId, Params, TaskId};

fn main() {
    let p = Params::default();
    let drivers = [DriverId(0), DriverId(1), DriverId(2)];
    // (task, distance from the depot)
    let tasks = [(TaskId(0), 6.0), (TaskId(1), 4.0)];
    let bids = [
        Bid { driver: DriverId(0), task: TaskId(0), unit_price: 2.4, distance_km: 1.5 },
        Bid { driver: DriverId(0), task: TaskId(1), unit_price: 2.4, distance_km: 2.0 },
        Bid { driver: DriverId(1), task: TaskId(0), unit_price: 3.1, distance_km: 0.8 },
        Bid { driver: DriverId(2), task: TaskId(1), unit_price: 3.8, distance_km: 1.0 },
    ];
    let inst = AuctionInstance::from_bids(&drivers, &tasks, &bids, &p).expect("bids within bounds");

    println!("adjusted valuation / saving per bid:");
    for d in 0..inst.n_drivers() {
        for k in 0..inst.n_tasks() {
            if let (Some(e), Some(s)) = (inst.entry(d, k), inst.saving(d, k)) {
                println!("  {} on {}: v = {}, delta = {}", inst.drivers[d], inst.tasks[k], e.adjusted, s);
            }
        }
    }

    let sel = select_winners_vcg(&inst);
    println!("Pi = {}", sel.objective);
    let out = vcg_settle(&inst).expect("winners have payments");
    for (d, k) in &out.assignment {
        println!("  {d} performs {k}: paid {}, utility {}", out.payments[d], out.utilities[d]);
    }
    println!("platform spends {}", out.expenditure);
}
