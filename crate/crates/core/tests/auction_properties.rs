use proptest::prelude::*;

use ridesense::auction::{
    rbc_settle, round_budget, select_winners_rbc, select_winners_vcg, settle_round, vcg_settle, AuctionInstance, Bid,
    BudgetLedger, Mechanism,
};
use ridesense::domain::{DriverId, Params, TaskId};
use ridesense::hungarian::km_solve;
use ridesense::money::Money;
use ridesense::oracle::{brute_force_matching, brute_force_winner_selection, ic_probe, Constraints, Objective};
use ridesense::pricing::adjusted_valuation;
use ridesense::verify::bid_grid;

/// Drivers' unit prices and per-(driver, task) distances, `None` for no bid.
fn auction() -> impl Strategy<Value = AuctionInstance> {
    (1..=5usize, 1..=5usize).prop_flat_map(|(n_d, n_k)| {
        (
            prop::collection::vec(2.0..=4.0f64, n_d),
            prop::collection::vec(prop::option::weighted(0.7, 0.1..30.0f64), n_d * n_k),
            prop::collection::vec(0.5..15.0f64, n_k),
        )
            .prop_map(move |(prices, dists, depot)| {
                let p = Params::default();
                let drivers: Vec<DriverId> = (0..n_d as u32).map(DriverId).collect();
                let tasks: Vec<(TaskId, f64)> = depot.iter().enumerate().map(|(k, &l)| (TaskId(k as u32), l)).collect();
                let bids: Vec<Bid> = (0..n_d)
                    .flat_map(|d| {
                        let prices = &prices;
                        dists[d * n_k..(d + 1) * n_k].iter().enumerate().filter_map(move |(k, l)| {
                            l.map(|distance_km| Bid {
                                driver: DriverId(d as u32),
                                task: TaskId(k as u32),
                                unit_price: prices[d],
                                distance_km,
                            })
                        })
                    })
                    .collect();
                AuctionInstance::from_bids(&drivers, &tasks, &bids, &p).unwrap()
            })
    })
}

fn upper_bounds(inst: &AuctionInstance) -> Money {
    (0..inst.n_drivers())
        .flat_map(|d| (0..inst.n_tasks()).filter_map(move |k| inst.entry(d, k)))
        .map(|e| e.upper_bound)
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rbc_spends_within_round_budget(inst in auction(), frac in 0.0..1.2f64) {
        let omega_t = Money::from_f64(upper_bounds(&inst).to_f64() * frac);
        let out = rbc_settle(&inst, omega_t).unwrap();
        prop_assert!(out.expenditure <= omega_t);
        for (&d, &pay) in &out.payments {
            let k = inst.task_index(out.task_of(d).unwrap()).unwrap();
            let e = inst.entry(inst.driver_index(d).unwrap(), k).unwrap();
            prop_assert!(pay >= e.adjusted, "payment {} below valuation {}", pay, e.adjusted);
            prop_assert!(pay <= e.upper_bound, "payment {} above bound {}", pay, e.upper_bound);
        }
    }

    #[test]
    fn winners_form_a_matching(inst in auction(), frac in 0.0..1.2f64) {
        let omega_t = Money::from_f64(upper_bounds(&inst).to_f64() * frac);
        for m in [Mechanism::Vcg, Mechanism::Rbc] {
            let out = settle_round(m, &inst, omega_t).unwrap();
            let mut drivers: Vec<_> = out.assignment.iter().map(|p| p.0).collect();
            let mut tasks: Vec<_> = out.assignment.iter().map(|p| p.1).collect();
            drivers.dedup();
            tasks.sort();
            tasks.dedup();
            prop_assert_eq!(drivers.len(), out.assignment.len());
            prop_assert_eq!(tasks.len(), out.assignment.len());
        }
    }

    #[test]
    fn vcg_matches_exhaustive_welfare(inst in auction()) {
        let sel = select_winners_vcg(&inst);
        let best = brute_force_winner_selection(&inst, Objective::MaxSaving, Constraints { coverage: true, ..Default::default() }).unwrap();
        prop_assert_eq!(sel.objective, best.value);
        prop_assert_eq!(sel.pairs.len(), best.pairs.len());
    }

    #[test]
    fn rbc_matches_exhaustive_under_its_tabu_list(inst in auction(), frac in 0.0..1.2f64) {
        let omega_t = Money::from_f64(upper_bounds(&inst).to_f64() * frac);
        let sel = select_winners_rbc(&inst, omega_t);
        let c = Constraints { coverage: true, tabu: Some(&sel.tabu), ..Default::default() };
        let best = brute_force_winner_selection(&inst, Objective::MinValuation, c).unwrap();
        prop_assert_eq!(sel.objective, best.value);
        let bound: Money = sel.pairs.iter().map(|&(d, k)| inst.entry(d, k).unwrap().upper_bound).sum();
        prop_assert!(bound <= omega_t);
    }

    #[test]
    fn rbc_is_individually_rational(inst in auction(), frac in 0.0..1.2f64) {
        let omega_t = Money::from_f64(upper_bounds(&inst).to_f64() * frac);
        let out = rbc_settle(&inst, omega_t).unwrap();
        prop_assert!(out.utilities.values().all(|u| !u.is_negative()));
    }

    #[test]
    fn vcg_is_truthful_on_the_bid_grid(inst in auction()) {
        let p = Params::default();
        for d in 0..inst.n_drivers() {
            let probe = ic_probe(Mechanism::Vcg, &inst, d, &bid_grid(&p), &p, Money::ZERO).unwrap();
            prop_assert!(probe.gain <= Money::ZERO, "driver {} gains {} at {:?}", d, probe.gain, probe.best_deviation);
        }
    }

    #[test]
    fn km_matches_brute_force(w in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, -50.0..50.0f64), 1..=6), 1..=6)) {
        let cols = w.iter().map(Vec::len).min().unwrap();
        let w: Vec<Vec<f64>> = w.iter().map(|r| r[..cols].iter().map(|c| c.unwrap_or(f64::NEG_INFINITY)).collect()).collect();
        let fast = km_solve(&w).unwrap();
        let slow = brute_force_matching(&w).unwrap();
        prop_assert!((fast.total - slow.total).abs() < 1e-6, "{} vs {}", fast.total, slow.total);
    }

    #[test]
    fn upper_bound_dominates_adjusted_valuation(b in 2.0..=4.0f64, l in 0.0..60.0f64) {
        let v = adjusted_valuation(b, l, &Params::default()).unwrap();
        prop_assert!(v.upper_bound >= v.adjusted);
        prop_assert!(v.adjusted >= v.hidden);
    }

    #[test]
    fn round_budget_never_exceeds_what_is_left(omega in 0i64..5000, spent in 0i64..5000, k_t in 0usize..20, extra in 0usize..60) {
        let mut ledger = BudgetLedger::new(Money::whole(omega), k_t + extra);
        ledger.record(Money::whole(spent.min(omega)));
        ledger.released_this_round = k_t;
        let omega_t = round_budget(&ledger).unwrap();
        prop_assert!(omega_t >= Money::ZERO);
        prop_assert!(omega_t <= ledger.remaining_budget().max(Money::ZERO));
    }
}

fn bid(d: u32, k: u32, b: f64, l: f64) -> Bid {
    Bid { driver: DriverId(d), task: TaskId(k), unit_price: b, distance_km: l }
}

#[test]
fn vcg_sole_bidder_is_paid_the_dedicated_cost() {
    let p = Params::default();
    let inst = AuctionInstance::from_bids(&[DriverId(0)], &[(TaskId(0), 5.0)], &[bid(0, 0, 2.5, 3.0)], &p).unwrap();
    let out = vcg_settle(&inst).unwrap();
    assert_eq!(out.payments[&DriverId(0)], Money::whole(40));
}

#[test]
fn rbc_sole_bidder_is_paid_the_upper_bound() {
    let p = Params::default();
    let inst = AuctionInstance::from_bids(&[DriverId(0)], &[(TaskId(0), 5.0)], &[bid(0, 0, 2.5, 3.0)], &p).unwrap();
    let out = rbc_settle(&inst, Money::whole(1000)).unwrap();
    assert_eq!(out.payments[&DriverId(0)], Money::whole(27));
}

/// Coverage can force a winner whose cost saving is negative; its VCG
/// payment then falls short of its valuation.
#[test]
fn vcg_forced_cover_pays_below_valuation() {
    let p = Params::default();
    // dedicated cost 8 against v = 15 + 2·2 = 19: saving −11
    let inst = AuctionInstance::from_bids(&[DriverId(0)], &[(TaskId(0), 1.0)], &[bid(0, 0, 2.0, 2.0)], &p).unwrap();
    let out = vcg_settle(&inst).unwrap();
    assert_eq!(out.utilities[&DriverId(0)], Money::whole(-11));
}

/// Lowering the unit price moves driver 0 onto the longer task, where the
/// capped payment exceeds its true valuation by more than before.
#[test]
fn rbc_underbid_can_steer_the_assignment() {
    let p = Params::default();
    let tasks = [(TaskId(0), 10.0), (TaskId(1), 10.0)];
    let truthful = [bid(0, 0, 3.0, 1.0), bid(0, 1, 3.0, 3.0), bid(1, 0, 3.5, 1.0), bid(1, 1, 3.5, 2.5)];
    let inst = AuctionInstance::from_bids(&[DriverId(0), DriverId(1)], &tasks, &truthful, &p).unwrap();
    let out = rbc_settle(&inst, Money::whole(1000)).unwrap();
    assert_eq!(out.task_of(DriverId(0)), Some(TaskId(0)));
    assert_eq!(out.utilities[&DriverId(0)], Money::whole(1));

    let probe = ic_probe(Mechanism::Rbc, &inst, 0, &[2.0], &p, Money::whole(1000)).unwrap();
    assert_eq!(probe.gain, Money::whole(2));
    let deviant = inst.with_unit_price(0, 2.0, &p).unwrap();
    let out = rbc_settle(&deviant, Money::whole(1000)).unwrap();
    assert_eq!(out.task_of(DriverId(0)), Some(TaskId(1)));
    assert_eq!(out.payments[&DriverId(0)], Money::whole(27));
}

/// Underbidding to displace a cheaper rival on a shared task loses money.
#[test]
fn rbc_underbid_against_cheaper_rival_loses() {
    let p = Params::default();
    let bids = [bid(0, 0, 4.0, 2.0), bid(1, 0, 2.0, 2.0)];
    let inst = AuctionInstance::from_bids(&[DriverId(0), DriverId(1)], &[(TaskId(0), 10.0)], &bids, &p).unwrap();
    let probe = ic_probe(Mechanism::Rbc, &inst, 0, &[2.0], &p, Money::whole(1000)).unwrap();
    assert_eq!(probe.truthful_utility, Money::ZERO);
    assert!(probe.gain < Money::ZERO);
}
