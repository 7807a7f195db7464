//! Acceptance criteria for the mechanisms and the simulator, each reduced
//! to a pass/fail verdict with a one-line summary of the evidence.

use std::time::Instant;

use rayon::prelude::*;

use ridesense::auction::{rbc_settle, vcg_settle, AuctionInstance, Bid, Mechanism};
use ridesense::domain::{DriverId, Params, TaskId};
use ridesense::money::Money;
use ridesense::pricing::adjusted_valuation;
use ridesense::scenario::{generate_synthetic, DemandLevel, ScenarioConfig};
use ridesense::simulator::{run, Aggregates, SimulationReport};
use ridesense::verify::{run_suite, Suite};

pub const SEEDS: u64 = 5;

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

pub fn simulate(
    n_type_a: usize,
    n_type_b: usize,
    demand_level: DemandLevel,
    mechanism: Mechanism,
    seed: u64,
) -> SimulationReport {
    let cfg = ScenarioConfig { n_type_a, n_type_b, demand_level, seed, ..Default::default() };
    run(&generate_synthetic(&cfg).expect("valid scenario"), mechanism, seed).expect("run completes")
}

/// Seed-averaged aggregates of one configuration.
pub fn mean_over_seeds(n_type_a: usize, n_type_b: usize, demand: DemandLevel, mechanism: Mechanism) -> Aggregates {
    let runs: Vec<Aggregates> =
        (0..SEEDS).into_par_iter().map(|s| simulate(n_type_a, n_type_b, demand, mechanism, s).aggregates).collect();
    let avg = |f: fn(&Aggregates) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
    Aggregates {
        ss: avg(|a| a.ss),
        ss_all_tasks: avg(|a| a.ss_all_tasks),
        rb: avg(|a| a.rb),
        cr: avg(|a| a.cr),
        cr_vacuous: runs.iter().all(|a| a.cr_vacuous),
        awt_s: avg(|a| a.awt_s),
        atr: avg(|a| a.atr),
        ap_a: avg(|a| a.ap_a),
        ap_b: avg(|a| a.ap_b),
    }
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Steps that go against the expected direction.
pub fn inversions(xs: &[f64], increasing: bool) -> usize {
    xs.windows(2).filter(|w| if increasing { w[1] < w[0] } else { w[1] > w[0] }).count()
}

fn fmt_series(xs: &[f64], prec: usize) -> String {
    xs.iter().map(|x| format!("{x:.prec$}")).collect::<Vec<_>>().join(" ")
}

pub fn oracle_equivalence() -> Verdict {
    let p = Params::default();
    let start = Instant::now();
    let matching = run_suite(Suite::Oracle, 1000, 11, &p);
    let selection = run_suite(Suite::Ae, 1000, 12, &p);
    let secs = start.elapsed().as_secs_f64();
    let bad = matching.violations.len() + selection.violations.len();
    verdict(
        bad == 0 && secs < 60.0,
        format!("matching 1000 + winner selection 1000 instances up to 7x7, {bad} mismatches, {secs:.1} s"),
    )
}

pub fn individual_rationality() -> Verdict {
    let r = run_suite(Suite::Ir, 1000, 21, &Params::default());
    let vcg = r.violations_for(Mechanism::Vcg).count();
    let rbc = r.violations_for(Mechanism::Rbc).count();
    let first =
        r.violations_for(Mechanism::Vcg).next().map(|v| format!("; first vcg: {}", v.detail)).unwrap_or_default();
    verdict(vcg + rbc == 0, format!("1000 instances per mechanism, negative utilities: vcg {vcg}, rbc {rbc}{first}"))
}

pub fn budget_balance() -> Verdict {
    let runs: Vec<(usize, bool)> = (0..200u64)
        .into_par_iter()
        .map(|s| {
            let demand = if s % 2 == 0 { DemandLevel::Low } else { DemandLevel::High };
            let r = simulate(120, 20, demand, Mechanism::Rbc, 1000 + s);
            let over = r.cycles.iter().filter(|c| c.omega_t.is_none_or(|o| c.theta > o)).count();
            (over, r.aggregates.rb >= 0.0)
        })
        .collect();
    let over: usize = runs.iter().map(|r| r.0).sum();
    let negative = runs.iter().filter(|r| !r.1).count();
    verdict(
        over == 0 && negative == 0,
        format!("200 rbc runs with total budget 2000: {over} rounds over budget, {negative} runs ending below zero"),
    )
}

pub fn incentive_compatibility() -> Verdict {
    let r = run_suite(Suite::Ic, 200, 31, &Params::default());
    let vcg = r.violations_for(Mechanism::Vcg).count();
    let rbc = r.violations_for(Mechanism::Rbc).count();
    let worst = r.max_ic_gain.unwrap_or(Money::ZERO);
    verdict(
        vcg + rbc == 0,
        format!(
            "200 instances x 9-point grid per mechanism, profitable deviations: vcg {vcg}, rbc {rbc}, max gain {worst}"
        ),
    )
}

pub fn upper_bound_dominance() -> Verdict {
    let base = Params::default();
    let regimes = [
        ("b_ub >= alpha+mu", base.clone()),
        ("b_ub < alpha+mu", Params { bid_ub: base.alpha + base.mu / 2.0, ..base.clone() }),
    ];
    let mut checked = 0;
    let mut bad = 0;
    for (_, p) in &regimes {
        assert!(p.validate().is_ok());
        for i in 0..=200 {
            let b = p.bid_lb + (p.bid_ub - p.bid_lb) * i as f64 / 200.0;
            for j in 0..=600 {
                let l = j as f64 * 0.1;
                let v = adjusted_valuation(b, l, p).expect("bid in range");
                checked += 1;
                if v.upper_bound < v.adjusted {
                    bad += 1;
                }
            }
        }
    }
    let names: Vec<&str> = regimes.iter().map(|r| r.0).collect();
    verdict(bad == 0, format!("{checked} (B, l) points over regimes [{}], {bad} violations", names.join(", ")))
}

pub fn payment_sanity() -> Verdict {
    let p = Params::default();
    let mut cases = 0;
    let mut bad = Vec::new();
    for &b in &[p.bid_lb, 2.5, 3.0, 3.7, p.bid_ub] {
        for &l in &[0.2, 1.0, 3.0, 7.5, 20.0] {
            for &depot in &[0.5, 5.0, 12.0] {
                cases += 1;
                let bid = Bid { driver: DriverId(0), task: TaskId(0), unit_price: b, distance_km: l };
                let inst = AuctionInstance::from_bids(&[DriverId(0)], &[(TaskId(0), depot)], &[bid], &p).unwrap();
                let dedicated = Money::from_f64(p.dedicated_cost_per_km * depot);
                let vcg = vcg_settle(&inst).unwrap().payments[&DriverId(0)];
                let bound = adjusted_valuation(b, l, &p).unwrap().upper_bound;
                let rbc = rbc_settle(&inst, bound).unwrap().payments.get(&DriverId(0)).copied();
                if vcg != dedicated {
                    bad.push(format!("vcg paid {vcg} vs {dedicated}"));
                }
                if rbc != Some(bound) {
                    bad.push(format!("rbc paid {rbc:?} vs {bound}"));
                }
            }
        }
    }
    let first = bad.first().map(|b| format!("; first: {b}")).unwrap_or_default();
    verdict(bad.is_empty(), format!("{cases} sole-bidder rounds, {} mismatches{first}", bad.len()))
}

pub fn low_demand_comparison() -> Verdict {
    let vcg = mean_over_seeds(120, 20, DemandLevel::Low, Mechanism::Vcg);
    let rbc = mean_over_seeds(120, 20, DemandLevel::Low, Mechanism::Rbc);
    verdict(
        rbc.rb >= vcg.rb && rbc.ss >= vcg.ss && vcg.cr >= rbc.cr,
        format!(
            "RB rbc {:.1} vs vcg {:.1}; SS rbc {:.1} vs vcg {:.1}; CR vcg {:.3} vs rbc {:.3}",
            rbc.rb, vcg.rb, rbc.ss, vcg.ss, vcg.cr, rbc.cr
        ),
    )
}

pub fn sensing_fleet_sweep() -> Verdict {
    let n_b = [20usize, 25, 30, 35, 40];
    let runs: Vec<Aggregates> =
        n_b.iter().map(|&b| mean_over_seeds(140 - b, b, DemandLevel::Low, Mechanism::Rbc)).collect();
    let crs: Vec<f64> = runs.iter().map(|a| a.cr).collect();
    let gaps: Vec<f64> = runs.iter().map(|a| a.ap_b - a.ap_a).collect();
    let rho = spearman(&n_b.map(|b| b as f64), &gaps);
    let pass = crs.iter().all(|&c| c >= 0.95) && runs[0].ap_b > runs[0].ap_a && rho <= 0.0;
    verdict(
        pass,
        format!(
            "N_B 20..40: CR [{}]; AP-B {:.1} vs AP-A {:.1} at 20; gap [{}], rank corr {rho:.2}",
            fmt_series(&crs, 3),
            runs[0].ap_b,
            runs[0].ap_a,
            fmt_series(&gaps, 1)
        ),
    )
}

pub fn demand_contrast() -> Verdict {
    let low = mean_over_seeds(120, 20, DemandLevel::Low, Mechanism::Rbc);
    let high = mean_over_seeds(120, 20, DemandLevel::High, Mechanism::Rbc);
    let gap = low.cr - high.cr;
    verdict(
        gap >= 0.20 && high.atr < low.atr && high.awt_s > low.awt_s,
        format!(
            "CR low {:.3} vs high {:.3} (gap {:.1} pp, need 20); ATR {:.3} -> {:.3}; AWT {:.1} s -> {:.1} s",
            low.cr,
            high.cr,
            gap * 100.0,
            low.atr,
            high.atr,
            low.awt_s,
            high.awt_s
        ),
    )
}

pub fn ride_fleet_sweep() -> Verdict {
    let n_a: Vec<usize> = (40..=160).step_by(20).collect();
    let runs: Vec<Aggregates> = n_a.iter().map(|&a| mean_over_seeds(a, 20, DemandLevel::Low, Mechanism::Rbc)).collect();
    let atr: Vec<f64> = runs.iter().map(|a| a.atr).collect();
    let awt: Vec<f64> = runs.iter().map(|a| a.awt_s).collect();
    let ss: Vec<f64> = runs.iter().map(|a| a.ss).collect();
    let gains: Vec<f64> = ss.windows(2).map(|w| (w[1] - w[0]) / w[0].abs()).collect();
    // first fleet size after which no step gains 5% or more
    let onset = (0..gains.len()).find(|&i| gains[i..].iter().all(|&g| g < 0.05)).map(|i| n_a[i] + 20);
    let plateau =
        *gains.last().unwrap() < 0.05 && ss.last() > ss.first() && onset.is_some_and(|t| (100..=140).contains(&t));
    let pass = inversions(&atr, true) <= 1 && inversions(&awt, false) <= 1 && plateau;
    verdict(
        pass,
        format!(
            "N_A 40..160: ATR [{}]; AWT [{}]; SS [{}], plateau from total fleet {}",
            fmt_series(&atr, 3),
            fmt_series(&awt, 1),
            fmt_series(&ss, 0),
            onset.map_or("none".into(), |t| t.to_string())
        ),
    )
}

pub type Check = fn() -> Verdict;

pub const CRITERIA: [(&str, Check); 10] = [
    ("oracle equivalence", oracle_equivalence),
    ("individual rationality", individual_rationality),
    ("budget balance", budget_balance),
    ("incentive compatibility", incentive_compatibility),
    ("valuation upper bound", upper_bound_dominance),
    ("sole-bidder payments", payment_sanity),
    ("low demand: rbc vs vcg", low_demand_comparison),
    ("sensing fleet sweep", sensing_fleet_sweep),
    ("high vs low demand", demand_contrast),
    ("ride fleet sweep", ride_fleet_sweep),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_correlation_of_monotone_series() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &[10.0, 8.0, 5.0, 1.0]), -1.0);
        assert_eq!(spearman(&x, &[1.0, 8.0, 9.0, 30.0]), 1.0);
        assert!(spearman(&x, &[2.0, 2.0, 2.0, 1.0]) < 0.0);
    }

    #[test]
    fn counts_steps_against_the_trend() {
        assert_eq!(inversions(&[1.0, 2.0, 1.5, 3.0], true), 1);
        assert_eq!(inversions(&[5.0, 4.0, 4.0, 1.0], false), 0);
        assert_eq!(inversions(&[1.0, 2.0, 3.0], false), 2);
    }
}
