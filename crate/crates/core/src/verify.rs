//! Randomised property suites over small auction and matching instances.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{select_winners_rbc, select_winners_vcg, settle_round, AuctionInstance, Bid, Mechanism, TabuList};
use crate::domain::{DriverId, Params, RiderId, TaskId};
use crate::hungarian::km_solve;
use crate::money::Money;
use crate::oracle::{brute_force_matching, brute_force_winner_selection, ic_probe, Constraints, Objective};
use crate::trip_matching::{match_edges, CandidateEdge};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Ir,
    Ic,
    Bb,
    Ae,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Ir, Suite::Ic, Suite::Bb, Suite::Ae, Suite::Oracle];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Ir => "ir",
            Suite::Ic => "ic",
            Suite::Bb => "bb",
            Suite::Ae => "ae",
            Suite::Oracle => "oracle",
        })
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown suite `{s}` (expected ir, ic, bb, ae or oracle)"))
    }
}

/// One failed check, with enough data to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub instance: usize,
    pub mechanism: Option<Mechanism>,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auction: Option<AuctionInstance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_t: Option<Money>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<Option<f64>>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Option<Suite>,
    pub instances: usize,
    pub checks: usize,
    pub violations: Vec<Violation>,
    /// Largest Σ payments / Ω_T seen by the budget suite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_budget_ratio: Option<f64>,
    /// Largest deviation gain seen by the truthfulness suite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ic_gain: Option<Money>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn merge(mut self, other: SuiteReport) -> SuiteReport {
        self.instances += other.instances;
        self.checks += other.checks;
        self.violations.extend(other.violations);
        self.max_budget_ratio = max_opt(self.max_budget_ratio, other.max_budget_ratio, f64::max);
        self.max_ic_gain = max_opt(self.max_ic_gain, other.max_ic_gain, Money::max);
        self
    }

    /// Violations restricted to one mechanism.
    pub fn violations_for(&self, mechanism: Mechanism) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.mechanism == Some(mechanism))
    }
}

fn max_opt<T: Copy>(a: Option<T>, b: Option<T>, f: fn(T, T) -> T) -> Option<T> {
    match (a, b) {
        (Some(x), Some(y)) => Some(f(x, y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Independent stream per (seed, instance).
pub fn instance_rng(seed: u64, instance: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance as u64);
    rng
}

/// Random bid-built auction: every driver has one unit price, and each
/// (driver, task) bid exists with probability `bid_prob`.
pub fn random_auction(
    rng: &mut impl Rng,
    max_drivers: usize,
    max_tasks: usize,
    bid_prob: f64,
    p: &Params,
) -> AuctionInstance {
    let n_drivers = rng.random_range(1..=max_drivers);
    let n_tasks = rng.random_range(1..=max_tasks);
    let drivers: Vec<DriverId> = (0..n_drivers as u32).map(DriverId).collect();
    let tasks: Vec<(TaskId, f64)> = (0..n_tasks as u32).map(|k| (TaskId(k), rng.random_range(0.5..15.0))).collect();
    let mut bids = Vec::new();
    for &driver in &drivers {
        let unit_price = rng.random_range(p.bid_lb..=p.bid_ub);
        for &(task, _) in &tasks {
            if rng.random_bool(bid_prob) {
                bids.push(Bid { driver, task, unit_price, distance_km: rng.random_range(0.1..30.0) });
            }
        }
    }
    AuctionInstance::from_bids(&drivers, &tasks, &bids, p).expect("generated bids are within bounds")
}

/// Round budget between zero and a little over the cost of paying every
/// driver's most expensive bid, so it binds in some instances only.
pub fn random_round_budget(rng: &mut impl Rng, inst: &AuctionInstance) -> Money {
    let ceiling: i64 = (0..inst.n_drivers())
        .filter_map(|d| (0..inst.n_tasks()).filter_map(|k| inst.entry(d, k)).map(|e| e.upper_bound.units()).max())
        .sum();
    Money::from_units(rng.random_range(0..=ceiling + ceiling / 5 + 1))
}

/// Weights on a 1e-3 grid, a fifth of them missing.
pub fn random_weights(rng: &mut impl Rng, max_side: usize) -> Vec<Vec<f64>> {
    let rows = rng.random_range(1..=max_side);
    let cols = rng.random_range(1..=max_side);
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.random_bool(0.2) {
                        f64::NEG_INFINITY
                    } else {
                        rng.random_range(-2000..=10_000) as f64 / 1000.0
                    }
                })
                .collect()
        })
        .collect()
}

fn encode(weights: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    weights.iter().map(|r| r.iter().map(|&w| w.is_finite().then_some(w)).collect()).collect()
}

fn violation(instance: usize, mechanism: Option<Mechanism>, detail: String) -> Violation {
    Violation { instance, mechanism, detail, auction: None, omega_t: None, weights: None }
}

/// Runs `suite` on `instances` random instances derived from `seed`.
pub fn run_suite(suite: Suite, instances: usize, seed: u64, p: &Params) -> SuiteReport {
    let report = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            let mut r = match suite {
                Suite::Oracle => check_matching(i, &mut rng),
                Suite::Ae => check_efficiency(i, &mut rng, p),
                Suite::Ir => check_rationality(i, &mut rng, p),
                Suite::Ic => check_truthfulness(i, &mut rng, p),
                Suite::Bb => check_budget(i, &mut rng, p),
            };
            r.instances = 1;
            r
        })
        .reduce(SuiteReport::default, SuiteReport::merge);
    let mut report = SuiteReport { suite: Some(suite), ..report };
    report.violations.sort_by_key(|v| v.instance);
    report
}

/// Solver against exhaustive search for dense matching, plus the
/// saved-distance / penalised-pickup equivalence of trip matching.
fn check_matching(i: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let mut r = SuiteReport { checks: 2, ..Default::default() };
    let w = random_weights(rng, 7);
    let fast = km_solve(&w).expect("finite or missing weights");
    let slow = brute_force_matching(&w).expect("within size limit");
    if (fast.total - slow.total).abs() > 1e-9 {
        r.violations.push(Violation {
            weights: Some(encode(&w)),
            ..violation(i, None, format!("km_solve total {} vs exhaustive {}", fast.total, slow.total))
        });
    }

    // pickup distances; missing edges stand for the pickup limit
    let rows = rng.random_range(1..=7usize);
    let cols = rng.random_range(1..=7usize);
    let mut edges = Vec::new();
    for d in 0..rows {
        for c in 0..cols {
            if rng.random_bool(0.7) {
                let pickup_km = rng.random_range(0..=2000) as f64 / 1000.0;
                edges.push(CandidateEdge {
                    driver: DriverId(d as u32),
                    rider: RiderId(c as u32),
                    pickup_km,
                    saved_km: 0.0,
                });
            }
        }
    }
    let l_max = edges.iter().map(|e| e.pickup_km).fold(0.0, f64::max);
    for e in &mut edges {
        e.saved_km = l_max - e.pickup_km;
    }
    let m = match_edges(&edges);
    let penalised = |pickup: f64, matched: usize| pickup + l_max * (cols - matched) as f64;
    let solver_cost = penalised(m.total_pickup_km(), m.len());
    let mut grid = vec![vec![f64::NEG_INFINITY; cols]; rows];
    for e in &edges {
        grid[e.driver.0 as usize][e.rider.0 as usize] = e.pickup_km;
    }
    let best_cost = min_penalised_cost(&grid, l_max);
    if (solver_cost - best_cost).abs() > 1e-9 {
        r.violations.push(Violation {
            weights: Some(encode(&grid)),
            ..violation(i, None, format!("trip matching penalised cost {solver_cost} vs exhaustive {best_cost}"))
        });
    }
    r
}

fn min_penalised_cost(pickup: &[Vec<f64>], l_max: f64) -> f64 {
    fn go(p: &[Vec<f64>], row: usize, used: &mut [bool], cost: f64, matched: usize, l_max: f64, best: &mut f64) {
        if row == p.len() {
            *best = best.min(cost + l_max * (used.len() - matched) as f64);
            return;
        }
        go(p, row + 1, used, cost, matched, l_max, best);
        for c in 0..used.len() {
            if !used[c] && p[row][c].is_finite() {
                used[c] = true;
                go(p, row + 1, used, cost + p[row][c], matched + 1, l_max, best);
                used[c] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(pickup, 0, &mut vec![false; pickup.first().map_or(0, Vec::len)], 0.0, 0, l_max, &mut best);
    best
}

fn auction_violation(
    i: usize,
    mechanism: Mechanism,
    inst: &AuctionInstance,
    omega_t: Option<Money>,
    detail: String,
) -> Violation {
    Violation { auction: Some(inst.clone()), omega_t, ..violation(i, Some(mechanism), detail) }
}

/// Both winner-selection solvers against exhaustive search.
fn check_efficiency(i: usize, rng: &mut ChaCha8Rng, p: &Params) -> SuiteReport {
    let mut r = SuiteReport { checks: 3, ..Default::default() };
    let inst = random_auction(rng, 7, 7, 0.7, p);
    let omega_t = random_round_budget(rng, &inst);
    let coverage = Constraints { coverage: true, ..Default::default() };

    let vcg = select_winners_vcg(&inst);
    let best = brute_force_winner_selection(&inst, Objective::MaxSaving, coverage).unwrap();
    if vcg.objective != best.value || vcg.pairs.len() != best.pairs.len() {
        let detail = format!(
            "welfare {} over {} pairs vs exhaustive {} over {}",
            vcg.objective,
            vcg.pairs.len(),
            best.value,
            best.pairs.len()
        );
        r.violations.push(auction_violation(i, Mechanism::Vcg, &inst, None, detail));
    }

    let rbc = select_winners_rbc(&inst, omega_t);
    let fixed = Constraints { tabu: Some(&rbc.tabu), ..coverage };
    let best = brute_force_winner_selection(&inst, Objective::MinValuation, fixed).unwrap();
    let bound: Money = rbc.pairs.iter().map(|&(d, k)| inst.entry(d, k).unwrap().upper_bound).sum();
    if rbc.objective != best.value || rbc.pairs.len() != best.pairs.len() || bound > omega_t {
        let detail = format!(
            "valuation {} over {} pairs (bound {bound}) vs exhaustive {} over {}",
            rbc.objective,
            rbc.pairs.len(),
            best.value,
            best.pairs.len()
        );
        r.violations.push(auction_violation(i, Mechanism::Rbc, &inst, Some(omega_t), detail));
    }

    // replay the pruning loop with exhaustive inner solves; ties make the
    // path ambiguous, so only unambiguous replays are compared
    if let Some(replayed) = replay_pruning(&inst, omega_t) {
        if replayed != rbc.tabu {
            let detail =
                format!("pruning diverged: solver {:?} vs replay {:?}", rbc.tabu.forbidden, replayed.forbidden);
            r.violations.push(auction_violation(i, Mechanism::Rbc, &inst, Some(omega_t), detail));
        }
    }
    r
}

fn replay_pruning(inst: &AuctionInstance, omega_t: Money) -> Option<TabuList> {
    let mut tabu = TabuList::default();
    loop {
        let c = Constraints { coverage: true, tabu: Some(&tabu), ..Default::default() };
        let opt = brute_force_winner_selection(inst, Objective::MinValuation, c).unwrap();
        if opt.ties > 1 {
            return None;
        }
        let bound: Money = opt.pairs.iter().map(|&(d, k)| inst.entry(d, k).unwrap().upper_bound).sum();
        if bound <= omega_t {
            return Some(tabu);
        }
        let &(d, k) = opt.pairs.iter().max_by_key(|&&(d, k)| {
            let e = inst.entry(d, k).unwrap();
            (e.adjusted, e.upper_bound, inst.drivers[d])
        })?;
        tabu.forbidden.insert((inst.drivers[d], inst.tasks[k]));
        if inst.bidders(k).all(|b| tabu.forbidden.contains(&(inst.drivers[b], inst.tasks[k]))) {
            tabu.relaxed_tasks.insert(inst.tasks[k]);
        }
    }
}

/// No winner is paid less than its adjusted valuation.
fn check_rationality(i: usize, rng: &mut ChaCha8Rng, p: &Params) -> SuiteReport {
    let mut r = SuiteReport { checks: 2, ..Default::default() };
    let inst = random_auction(rng, 7, 7, 0.7, p);
    let omega_t = random_round_budget(rng, &inst);
    for mechanism in [Mechanism::Vcg, Mechanism::Rbc] {
        let out = settle_round(mechanism, &inst, omega_t).unwrap();
        if let Some((d, u)) = out.utilities.iter().find(|(_, u)| u.is_negative()) {
            let detail = format!("winner {d} has utility {u}");
            r.violations.push(auction_violation(i, mechanism, &inst, Some(omega_t), detail));
        }
    }
    r
}

/// Nine-point unit-price grid over the admissible bid range.
pub fn bid_grid(p: &Params) -> Vec<f64> {
    (0..9).map(|j| p.bid_lb + (p.bid_ub - p.bid_lb) * j as f64 / 8.0).collect()
}

/// No driver gains by deviating on the bid grid.
fn check_truthfulness(i: usize, rng: &mut ChaCha8Rng, p: &Params) -> SuiteReport {
    let mut r = SuiteReport::default();
    let grid = bid_grid(p);
    for (mechanism, side) in [(Mechanism::Vcg, 5), (Mechanism::Rbc, 4)] {
        let inst = random_auction(rng, side, side, 0.7, p);
        let omega_t = random_round_budget(rng, &inst);
        let mut worst: Option<(usize, crate::oracle::IcProbe)> = None;
        for d in 0..inst.n_drivers() {
            if inst.unit_price[d].is_none() {
                continue;
            }
            r.checks += 1;
            let probe = ic_probe(mechanism, &inst, d, &grid, p, omega_t).unwrap();
            r.max_ic_gain = max_opt(r.max_ic_gain, Some(probe.gain), Money::max);
            if worst.as_ref().is_none_or(|w| probe.gain > w.1.gain) {
                worst = Some((d, probe));
            }
        }
        if let Some((d, probe)) = worst.filter(|w| w.1.gain > Money::ZERO) {
            let detail = format!(
                "driver {} gains {} by bidding {:?} instead of {:?}",
                inst.drivers[d],
                probe.gain,
                probe.best_deviation.unwrap_or_default(),
                inst.unit_price[d].unwrap_or_default()
            );
            r.violations.push(auction_violation(i, mechanism, &inst, Some(omega_t), detail));
        }
    }
    r
}

/// Budgeted rounds never spend more than their allocation, and no payment
/// exceeds its valuation upper bound.
fn check_budget(i: usize, rng: &mut ChaCha8Rng, p: &Params) -> SuiteReport {
    let mut r = SuiteReport { checks: 1, ..Default::default() };
    let inst = random_auction(rng, 7, 7, 0.7, p);
    let omega_t = random_round_budget(rng, &inst);
    let out = settle_round(Mechanism::Rbc, &inst, omega_t).unwrap();
    if omega_t > Money::ZERO {
        r.max_budget_ratio = Some(out.expenditure.to_f64() / omega_t.to_f64());
    }
    let over_cap = out.assignment.iter().find(|(d, k)| {
        let e = inst.entry(inst.driver_index(*d).unwrap(), inst.task_index(*k).unwrap()).unwrap();
        out.payments[d] > e.upper_bound
    });
    if out.expenditure > omega_t || over_cap.is_some() {
        let detail = format!("spent {} of {omega_t}; over-cap winner {:?}", out.expenditure, over_cap.map(|p| p.0));
        r.violations.push(auction_violation(i, Mechanism::Rbc, &inst, Some(omega_t), detail));
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.to_string().parse::<Suite>(), Ok(s));
        }
        assert!("xx".parse::<Suite>().is_err());
    }

    #[test]
    fn suites_are_deterministic() {
        let p = Params::default();
        assert_eq!(run_suite(Suite::Ae, 20, 9, &p), run_suite(Suite::Ae, 20, 9, &p));
    }

    #[test]
    fn grid_spans_bid_range() {
        let g = bid_grid(&Params::default());
        assert_eq!(g.len(), 9);
        assert_eq!((g[0], g[4], g[8]), (2.0, 3.0, 4.0));
    }
}
