//! Exhaustive reference solvers and the truthfulness probe.
//!
//! Everything here enumerates; nothing is clever. Use only on small inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auction::{settle_round, AuctionError, AuctionInstance, Mechanism, TabuList};
use crate::domain::Params;
use crate::hungarian::Assignment;
use crate::money::Money;

pub const MAX_MATCHING_SIDE: usize = 8;
pub const MAX_AUCTION_SIDE: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{rows}x{cols} is too large for exhaustive search (limit {limit}x{limit})")]
    TooLarge { rows: usize, cols: usize, limit: usize },
    #[error(transparent)]
    Auction(#[from] AuctionError),
}

fn guard(rows: usize, cols: usize, limit: usize) -> Result<(), OracleError> {
    if rows > limit || cols > limit {
        return Err(OracleError::TooLarge { rows, cols, limit });
    }
    Ok(())
}

/// Best matching over every partial matching of the finite entries.
pub fn brute_force_matching(weights: &[Vec<f64>]) -> Result<Assignment, OracleError> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    guard(rows, cols, MAX_MATCHING_SIDE)?;

    fn go(
        w: &[Vec<f64>],
        row: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        sum: f64,
        best: &mut Assignment,
    ) {
        if row == w.len() {
            if sum > best.total {
                *best = Assignment { pairs: cur.clone(), total: sum };
            }
            return;
        }
        go(w, row + 1, used, cur, sum, best);
        for c in 0..used.len() {
            if !used[c] && w[row][c].is_finite() {
                used[c] = true;
                cur.push((row, c));
                go(w, row + 1, used, cur, sum + w[row][c], best);
                cur.pop();
                used[c] = false;
            }
        }
    }

    let mut best = Assignment::default();
    go(weights, 0, &mut vec![false; cols], &mut Vec::new(), 0.0, &mut best);
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Maximise Σ (c_q·l_qk − v).
    MaxSaving,
    /// Minimise Σ v.
    MinValuation,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Constraints<'a> {
    /// Cover as many biddable tasks as possible before optimising.
    pub coverage: bool,
    /// Cap on Σ v̄ over the chosen pairs.
    pub budget: Option<Money>,
    pub tabu: Option<&'a TabuList>,
    /// Driver index left out of the auction.
    pub excluded: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Optimum {
    pub pairs: Vec<(usize, usize)>,
    /// Σ saving for `MaxSaving`, Σ valuation for `MinValuation`.
    pub value: Money,
    /// Number of distinct assignments reaching the optimum.
    pub ties: usize,
}

pub fn brute_force_winner_selection(
    inst: &AuctionInstance,
    objective: Objective,
    constraints: Constraints<'_>,
) -> Result<Optimum, OracleError> {
    guard(inst.n_drivers(), inst.n_tasks(), MAX_AUCTION_SIDE)?;
    let allowed = |d: usize, k: usize| {
        inst.entry(d, k).is_some()
            && constraints.excluded != Some(d)
            && constraints.tabu.is_none_or(|t| !t.forbidden.contains(&(inst.drivers[d], inst.tasks[k])))
    };

    /// (pairs, objective) of the best selection and the selection itself.
    type Best = ((usize, Money), Vec<(usize, usize)>);

    struct Search<'a, F> {
        inst: &'a AuctionInstance,
        allowed: F,
        objective: Objective,
        coverage: bool,
        budget: Option<Money>,
        best: Option<Best>,
        ties: usize,
    }

    impl<F: Fn(usize, usize) -> bool> Search<'_, F> {
        fn go(&mut self, d: usize, used: &mut [bool], cur: &mut Vec<(usize, usize)>, spend: Money) {
            if d == self.inst.n_drivers() {
                if self.budget.is_some_and(|b| spend > b) {
                    return;
                }
                let value: Money = cur
                    .iter()
                    .map(|&(d, k)| match self.objective {
                        Objective::MaxSaving => self.inst.saving(d, k).unwrap(),
                        Objective::MinValuation => -self.inst.entry(d, k).unwrap().adjusted,
                    })
                    .sum();
                let key = (if self.coverage { cur.len() } else { 0 }, value);
                match &self.best {
                    Some((best, _)) if key < *best => {}
                    Some((best, _)) if key == *best => self.ties += 1,
                    _ => {
                        self.best = Some((key, cur.clone()));
                        self.ties = 1;
                    }
                }
                return;
            }
            self.go(d + 1, used, cur, spend);
            for k in 0..used.len() {
                if !used[k] && (self.allowed)(d, k) {
                    used[k] = true;
                    cur.push((d, k));
                    let ub = self.inst.entry(d, k).unwrap().upper_bound;
                    self.go(d + 1, used, cur, spend + ub);
                    cur.pop();
                    used[k] = false;
                }
            }
        }
    }

    let mut search = Search {
        inst,
        allowed,
        objective,
        coverage: constraints.coverage,
        budget: constraints.budget,
        best: None,
        ties: 0,
    };
    search.go(0, &mut vec![false; inst.n_tasks()], &mut Vec::new(), Money::ZERO);
    // the empty assignment is always feasible, so there is a best
    let ((_, value), pairs) = search.best.expect("empty assignment is feasible");
    let value = match objective {
        Objective::MaxSaving => value,
        Objective::MinValuation => -value,
    };
    Ok(Optimum { pairs, value, ties: search.ties })
}

/// Result of probing one driver's unit-price deviations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcProbe {
    /// Largest deviant utility minus truthful utility over the grid.
    pub gain: Money,
    /// Unit price achieving it.
    pub best_deviation: Option<f64>,
    pub truthful_utility: Money,
}

/// Sweeps driver `d`'s unit price over `grid` with everyone else truthful.
/// Utility is always measured against the truthful adjusted valuation.
pub fn ic_probe(
    mechanism: Mechanism,
    inst: &AuctionInstance,
    d: usize,
    grid: &[f64],
    p: &Params,
    omega_t: Money,
) -> Result<IcProbe, OracleError> {
    guard(inst.n_drivers(), inst.n_tasks(), MAX_AUCTION_SIDE)?;
    let id = inst.drivers[d];
    let utility = |outcome: &crate::auction::RoundOutcome| -> Money {
        match outcome.task_of(id) {
            Some(task) => {
                let k = inst.task_index(task).unwrap();
                outcome.payments[&id] - inst.entry(d, k).unwrap().adjusted
            }
            None => Money::ZERO,
        }
    };
    let truthful_utility = utility(&settle_round(mechanism, inst, omega_t)?);
    let mut probe = IcProbe { gain: Money::from_units(i64::MIN), best_deviation: None, truthful_utility };
    for &b in grid {
        let deviant = inst.with_unit_price(d, b, p)?;
        let gain = utility(&settle_round(mechanism, &deviant, omega_t)?) - truthful_utility;
        if gain > probe.gain {
            probe.gain = gain;
            probe.best_deviation = Some(b);
        }
    }
    if probe.best_deviation.is_none() {
        probe.gain = Money::ZERO;
    }
    Ok(probe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{Bid, Entry};
    use crate::domain::{DriverId, TaskId};

    const NO: f64 = f64::NEG_INFINITY;

    #[test]
    fn matching_examples() {
        assert_eq!(brute_force_matching(&[vec![5.0, 2.0], vec![3.0, 4.0]]).unwrap().total, 9.0);
        let a = brute_force_matching(&[vec![NO, NO], vec![NO, NO]]).unwrap();
        assert!(a.pairs.is_empty());
        assert_eq!(a.total, 0.0);
        let a = brute_force_matching(&[vec![7.0, 1.0, 2.0]]).unwrap();
        assert_eq!((a.pairs, a.total), (vec![(0, 0)], 7.0));
        assert!(matches!(brute_force_matching(&vec![vec![0.0; 9]; 2]), Err(OracleError::TooLarge { .. })));
    }

    fn inst(cells: &[&[Option<(i64, i64)>]], cost: i64) -> AuctionInstance {
        let n = cells[0].len();
        let entries = cells
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| c.map(|(v, ub)| Entry { adjusted: Money::whole(v), upper_bound: Money::whole(ub) }))
                    .collect()
            })
            .collect();
        AuctionInstance::from_entries(vec![Money::whole(cost); n], entries)
    }

    #[test]
    fn welfare_example() {
        // savings [[20,15],[18,25]] against a cost of 100
        let i = inst(&[&[Some((80, 90)), Some((85, 90))], &[Some((82, 90)), Some((75, 90))]], 100);
        let opt = brute_force_winner_selection(
            &i,
            Objective::MaxSaving,
            Constraints { coverage: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!((opt.pairs, opt.value, opt.ties), (vec![(0, 0), (1, 1)], Money::whole(45), 1));
    }

    #[test]
    fn coverage_forces_sole_bidder() {
        let i = inst(&[&[Some((40, 50)), None], &[Some((10, 20)), Some((200, 250))]], 100);
        let opt = brute_force_winner_selection(
            &i,
            Objective::MinValuation,
            Constraints { coverage: true, ..Default::default() },
        )
        .unwrap();
        assert!(opt.pairs.contains(&(1, 1)));
        let free = brute_force_winner_selection(&i, Objective::MinValuation, Constraints::default()).unwrap();
        assert!(free.pairs.is_empty());
    }

    #[test]
    fn tight_budget_empties_assignment() {
        let i = inst(&[&[Some((10, 23))], &[Some((12, 25))]], 100);
        let c = Constraints { coverage: true, budget: Some(Money::whole(20)), ..Default::default() };
        let opt = brute_force_winner_selection(&i, Objective::MinValuation, c).unwrap();
        assert!(opt.pairs.is_empty());
        assert_eq!(opt.value, Money::ZERO);
    }

    #[test]
    fn sole_bidder_gains_nothing_under_vcg() {
        let p = Params::default();
        let bids = [Bid { driver: DriverId(0), task: TaskId(0), unit_price: 3.0, distance_km: 4.0 }];
        let i = AuctionInstance::from_bids(&[DriverId(0)], &[(TaskId(0), 6.0)], &bids, &p).unwrap();
        let grid: Vec<f64> = (0..9).map(|j| 2.0 + 0.25 * j as f64).collect();
        let probe = ic_probe(Mechanism::Vcg, &i, 0, &grid, &p, Money::ZERO).unwrap();
        assert_eq!(probe.gain, Money::ZERO);
    }

    #[test]
    fn rbc_underbidder_takes_a_loss() {
        // d values the task at 15 + 4·2 = 23, l at 15 + 3·2 = 21
        let p = Params::default();
        let bids = [
            Bid { driver: DriverId(0), task: TaskId(0), unit_price: 4.0, distance_km: 2.0 },
            Bid { driver: DriverId(1), task: TaskId(0), unit_price: 3.0, distance_km: 2.0 },
        ];
        let i = AuctionInstance::from_bids(&[DriverId(0), DriverId(1)], &[(TaskId(0), 10.0)], &bids, &p).unwrap();
        let omega = Money::whole(1000);
        let truthful = settle_round(Mechanism::Rbc, &i, omega).unwrap();
        assert_eq!(truthful.winners().into_iter().collect::<Vec<_>>(), vec![DriverId(1)]);
        // bidding 2 makes d the winner at payment 15 + 3·2 = 21 < 23
        let deviant = settle_round(Mechanism::Rbc, &i.with_unit_price(0, 2.0, &p).unwrap(), omega).unwrap();
        assert_eq!(deviant.task_of(DriverId(0)), Some(TaskId(0)));
        let true_utility = deviant.payments[&DriverId(0)] - i.entry(0, 0).unwrap().adjusted;
        assert_eq!(true_utility, Money::whole(-2));
        let probe = ic_probe(Mechanism::Rbc, &i, 0, &[2.0, 2.5, 3.5, 4.0], &p, omega).unwrap();
        assert!(probe.gain <= Money::ZERO);
    }
}
