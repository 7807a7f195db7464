//! Command-line front end: single runs, mechanism comparison, parameter
//! sweeps and the property suites.
//!
//! Exit codes: 0 ok, 1 property violation, 2 configuration error, 3 I/O error.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::auction::Mechanism;
use crate::domain::Params;
use crate::scenario::{generate_synthetic, DemandLevel, ScenarioConfig, ScenarioError};
use crate::simulator::{run, run_with_events, Aggregates, SimError, SimulationReport};
use crate::verify::{run_suite, Suite, SuiteReport};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Scenario(s) => s.into(),
            e => CliError::Config(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(name = "ridesense", version, about = "Ride-hailing simulator with auctioned sensing tasks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate one scenario under one mechanism.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "vcg")]
        mechanism: Mechanism,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Both mechanisms over consecutive seeds, averaged.
    Compare {
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// One run per (value, seed, mechanism), in long format.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated; bid bounds as `lb:ub`.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Restrict to one mechanism.
        #[arg(long)]
        mechanism: Option<Mechanism>,
        /// Hold the total fleet constant when sweeping one driver type.
        #[arg(long)]
        keep_fleet: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Random-instance property suite; exits 1 on a violation.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Only count violations of this mechanism.
        #[arg(long)]
        mechanism: Option<Mechanism>,
        /// Scenario config whose parameters to use.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    Ok(ScenarioConfig::from_json_file(path)?)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialise");
    }
    w.into_inner().expect("in-memory writer")
}

#[derive(Serialize)]
struct MetricsRow {
    cycle: u32,
    released: usize,
    assigned: usize,
    theta: f64,
    omega_t: Option<f64>,
    objective: f64,
}

pub fn metrics_csv(report: &SimulationReport) -> Vec<u8> {
    let rows: Vec<MetricsRow> = report
        .cycles
        .iter()
        .map(|c| MetricsRow {
            cycle: c.cycle,
            released: c.released,
            assigned: c.assigned,
            theta: c.theta,
            omega_t: c.omega_t,
            objective: c.objective,
        })
        .collect();
    if rows.is_empty() {
        return b"cycle,released,assigned,theta,omega_t,objective\n".to_vec();
    }
    csv_bytes(&rows)
}

/// Files of one run: `report.json`, `events.ndjson`, `metrics.csv`.
pub fn cmd_run(cfg: &ScenarioConfig, mechanism: Mechanism, out: &Path) -> Result<SimulationReport, CliError> {
    let scenario = generate_synthetic(cfg)?;
    let mut events = Vec::new();
    let report = run_with_events(&scenario, mechanism, cfg.seed, |e| {
        serde_json::to_writer(&mut events, e).expect("event serialises");
        events.push(b'\n');
    })?;
    let mut json = serde_json::to_vec_pretty(&report).expect("report serialises");
    json.push(b'\n');
    write_atomic(&out.join("report.json"), &json)?;
    write_atomic(&out.join("events.ndjson"), &events)?;
    write_atomic(&out.join("metrics.csv"), &metrics_csv(&report))?;
    Ok(report)
}

/// Seeds `base, base + 1, ..`; each seeds both the scenario and the bids.
pub fn seed_list(base: u64, count: u64) -> Vec<u64> {
    (0..count).map(|i| base.wrapping_add(i)).collect()
}

pub fn simulate(cfg: &ScenarioConfig, mechanism: Mechanism, seed: u64) -> Result<Aggregates, CliError> {
    let cfg = ScenarioConfig { seed, ..cfg.clone() };
    let scenario = generate_synthetic(&cfg)?;
    Ok(run(&scenario, mechanism, seed)?.aggregates)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub mechanism: Mechanism,
    #[serde(rename = "SS_mean")]
    pub ss_mean: f64,
    #[serde(rename = "RB_mean")]
    pub rb_mean: f64,
    #[serde(rename = "CR_mean")]
    pub cr_mean: f64,
    #[serde(rename = "AWT_mean")]
    pub awt_mean: f64,
    #[serde(rename = "ATR_mean")]
    pub atr_mean: f64,
    #[serde(rename = "AP_A_mean")]
    pub ap_a_mean: f64,
    #[serde(rename = "AP_B_mean")]
    pub ap_b_mean: f64,
}

impl CompareRow {
    pub fn from_runs(mechanism: Mechanism, runs: &[Aggregates]) -> Self {
        let n = runs.len().max(1) as f64;
        // rounded so summation noise does not leak into the table
        let avg = |f: fn(&Aggregates) -> f64| (runs.iter().map(f).sum::<f64>() / n * 1e6).round() / 1e6;
        CompareRow {
            mechanism,
            ss_mean: avg(|a| a.ss),
            rb_mean: avg(|a| a.rb),
            cr_mean: avg(|a| a.cr),
            awt_mean: avg(|a| a.awt_s),
            atr_mean: avg(|a| a.atr),
            ap_a_mean: avg(|a| a.ap_a),
            ap_b_mean: avg(|a| a.ap_b),
        }
    }
}

pub struct Comparison {
    pub rows: Vec<CompareRow>,
    pub runs: usize,
}

pub fn cmd_compare(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<Comparison, CliError> {
    let jobs: Vec<(Mechanism, u64)> =
        [Mechanism::Vcg, Mechanism::Rbc].into_iter().flat_map(|m| seeds.iter().map(move |&s| (m, s))).collect();
    let results = jobs.par_iter().map(|&(m, s)| simulate(cfg, m, s)).collect::<Result<Vec<_>, _>>()?;
    let rows = [Mechanism::Vcg, Mechanism::Rbc]
        .into_iter()
        .map(|m| {
            let runs: Vec<Aggregates> =
                jobs.iter().zip(&results).filter(|(j, _)| j.0 == m).map(|(_, a)| a.clone()).collect();
            CompareRow::from_runs(m, &runs)
        })
        .collect();
    Ok(Comparison { rows, runs: jobs.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    NTypeA,
    NTypeB,
    BidBounds,
    DemandLevel,
    Omega,
}

impl FromStr for SweepParam {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "n_type_a" => SweepParam::NTypeA,
            "n_type_b" => SweepParam::NTypeB,
            "bid_bounds" => SweepParam::BidBounds,
            "demand_level" => SweepParam::DemandLevel,
            "omega" => SweepParam::Omega,
            other => {
                return Err(CliError::Config(format!(
                    "unknown sweep parameter `{other}` (expected n_type_a, n_type_b, bid_bounds, demand_level or omega)"
                )))
            }
        })
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::NTypeA => "n_type_a",
            SweepParam::NTypeB => "n_type_b",
            SweepParam::BidBounds => "bid_bounds",
            SweepParam::DemandLevel => "demand_level",
            SweepParam::Omega => "omega",
        })
    }
}

impl SweepParam {
    /// `cfg` with this parameter set to `value`. With `keep_fleet`, changing
    /// one driver type moves the other so the total stays put.
    pub fn apply(self, cfg: &ScenarioConfig, value: &str, keep_fleet: bool) -> Result<ScenarioConfig, CliError> {
        let bad = |why: &str| CliError::Config(format!("{self} value `{value}`: {why}"));
        let count = || value.trim().parse::<usize>().map_err(|_| bad("expected a whole number"));
        let fleet = cfg.n_type_a + cfg.n_type_b;
        let mut out = cfg.clone();
        match self {
            SweepParam::NTypeA => {
                out.n_type_a = count()?;
                if keep_fleet {
                    out.n_type_b = fleet.checked_sub(out.n_type_a).ok_or_else(|| bad("exceeds the fleet"))?;
                }
            }
            SweepParam::NTypeB => {
                out.n_type_b = count()?;
                if keep_fleet {
                    out.n_type_a = fleet.checked_sub(out.n_type_b).ok_or_else(|| bad("exceeds the fleet"))?;
                }
            }
            SweepParam::BidBounds => {
                let (lb, ub) = value.split_once(':').ok_or_else(|| bad("expected lb:ub"))?;
                out.params.bid_lb = lb.trim().parse().map_err(|_| bad("lower bound is not a number"))?;
                out.params.bid_ub = ub.trim().parse().map_err(|_| bad("upper bound is not a number"))?;
            }
            SweepParam::DemandLevel => {
                out.demand_level = match value.trim() {
                    "low" => DemandLevel::Low,
                    "high" => DemandLevel::High,
                    n => DemandLevel::Total(n.parse().map_err(|_| bad("expected low, high or a trip count"))?),
                };
            }
            SweepParam::Omega => {
                out.params.total_budget = value.trim().parse().map_err(|_| bad("expected a number"))?;
            }
        }
        out.validate().map_err(|e| bad(&e.to_string()))?;
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: String,
    pub value: String,
    pub seed: u64,
    pub mechanism: Mechanism,
    pub ss: f64,
    pub ss_all_tasks: f64,
    pub rb: f64,
    pub cr: f64,
    pub awt_s: f64,
    pub atr: f64,
    pub ap_a: f64,
    pub ap_b: f64,
}

pub fn cmd_sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[String],
    seeds: &[u64],
    mechanisms: &[Mechanism],
    keep_fleet: bool,
) -> Result<Vec<SweepRow>, CliError> {
    let configs = values.iter().map(|v| param.apply(cfg, v, keep_fleet)).collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, u64, Mechanism)> = (0..values.len())
        .flat_map(|i| seeds.iter().flat_map(move |&s| mechanisms.iter().map(move |&m| (i, s, m))))
        .collect();
    jobs.par_iter()
        .map(|&(i, seed, mechanism)| {
            let a = simulate(&configs[i], mechanism, seed)?;
            Ok(SweepRow {
                param: param.to_string(),
                value: values[i].clone(),
                seed,
                mechanism,
                ss: a.ss,
                ss_all_tasks: a.ss_all_tasks,
                rb: a.rb,
                cr: a.cr,
                awt_s: a.awt_s,
                atr: a.atr,
                ap_a: a.ap_a,
                ap_b: a.ap_b,
            })
        })
        .collect()
}

/// Runs the suite; violations of other mechanisms than `only` are dropped.
pub fn cmd_verify(suite: Suite, instances: usize, seed: u64, only: Option<Mechanism>, p: &Params) -> SuiteReport {
    let mut report = run_suite(suite, instances, seed, p);
    if let Some(m) = only {
        report.violations.retain(|v| v.mechanism.is_none_or(|vm| vm == m));
    }
    report
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run { config, mechanism, seed, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let r = cmd_run(&cfg, mechanism, &out)?;
            let a = &r.aggregates;
            println!(
                "{} seed {}: SS {:.2} RB {:.2} CR {:.3} AWT {:.1}s ATR {:.3} AP-A {:.2} AP-B {:.2}",
                r.mechanism, r.seed, a.ss, a.rb, a.cr, a.awt_s, a.atr, a.ap_a, a.ap_b
            );
            println!("wrote {}/{{report.json,events.ndjson,metrics.csv}}", out.display());
            Ok(0)
        }
        Command::Compare { config, seeds, out } => {
            let cfg = load_config(&config)?;
            let c = cmd_compare(&cfg, &seed_list(cfg.seed, seeds))?;
            eprintln!("ran {} simulations", c.runs);
            let bytes = csv_bytes(&c.rows);
            write_atomic(&out.join("compare.csv"), &bytes)?;
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(0)
        }
        Command::Sweep { config, param, values, seeds, mechanism, keep_fleet, out } => {
            let param: SweepParam = param.parse()?;
            let cfg = load_config(&config)?;
            if values.is_empty() {
                return Err(CliError::Config("--values needs at least one value".into()));
            }
            let mechanisms = match mechanism {
                Some(m) => vec![m],
                None => vec![Mechanism::Vcg, Mechanism::Rbc],
            };
            let rows = cmd_sweep(&cfg, param, &values, &seed_list(cfg.seed, seeds), &mechanisms, keep_fleet)?;
            let path = out.join(format!("sweep_{param}.csv"));
            write_atomic(&path, &csv_bytes(&rows))?;
            println!("{} rows written to {}", rows.len(), path.display());
            Ok(0)
        }
        Command::Verify { suite, instances, seed, mechanism, config, out } => {
            let p = match config {
                Some(path) => load_config(&path)?.params,
                None => Params::default(),
            };
            let report = cmd_verify(suite, instances, seed, mechanism, &p);
            println!(
                "{suite}: {} instances, {} checks, {} violations",
                report.instances,
                report.checks,
                report.violations.len()
            );
            if let Some(r) = report.max_budget_ratio {
                println!("max spend / round budget: {r:.4}");
            }
            if let Some(g) = report.max_ic_gain {
                println!("max deviation gain: {g}");
            }
            if report.passed() {
                return Ok(0);
            }
            let path = out.join(format!("counterexample_{suite}.json"));
            let mut json = serde_json::to_vec_pretty(&report).expect("report serialises");
            json.push(b'\n');
            write_atomic(&path, &json)?;
            let first = &report.violations[0];
            println!("first violation (instance {}): {}", first.instance, first.detail);
            println!("counterexamples written to {}", path.display());
            Ok(1)
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values_apply() {
        let cfg = ScenarioConfig::default();
        let c = SweepParam::NTypeB.apply(&cfg, "30", true).unwrap();
        assert_eq!((c.n_type_a, c.n_type_b), (110, 30));
        let c = SweepParam::NTypeA.apply(&cfg, "40", false).unwrap();
        assert_eq!((c.n_type_a, c.n_type_b), (40, 20));
        let c = SweepParam::BidBounds.apply(&cfg, "3:5", false).unwrap();
        assert_eq!((c.params.bid_lb, c.params.bid_ub), (3.0, 5.0));
        assert_eq!(SweepParam::DemandLevel.apply(&cfg, "high", false).unwrap().demand_level, DemandLevel::High);
        assert_eq!(SweepParam::Omega.apply(&cfg, "500", false).unwrap().params.total_budget, 500.0);
        assert!(SweepParam::BidBounds.apply(&cfg, "5:3", false).is_err());
        assert!(SweepParam::NTypeB.apply(&cfg, "200", true).is_err());
        assert!("fleet".parse::<SweepParam>().is_err());
    }

    #[test]
    fn metrics_header_is_fixed() {
        let r = SimulationReport {
            config_digest: String::new(),
            seed: 0,
            mechanism: Mechanism::Vcg,
            aggregates: crate::simulator::compute_metrics(&Default::default()),
            totals: Default::default(),
            cycles: Vec::new(),
        };
        assert_eq!(metrics_csv(&r), b"cycle,released,assigned,theta,omega_t,objective\n");
    }
}
