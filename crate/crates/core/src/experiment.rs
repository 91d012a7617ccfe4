//! Monte-Carlo driver: paired joint/fixed runs per trial and SNR, and the
//! CSV files summarizing them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::config::{GameMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::game::{run, trace_row, GameTrace, TRACE_COLUMNS};
use crate::network::build_scenario;
use crate::rates::{sum_utility, NetworkState};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub trials: u64,
    pub snr_db: Vec<f64>,
    pub modes: Vec<GameMode>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            trials: 5,
            snr_db: vec![0.0, 10.0, 20.0, 30.0],
            modes: vec![GameMode::Joint, GameMode::Fixed],
        }
    }
}

/// One game run.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub snr_db: f64,
    pub trial: u64,
    pub mode: GameMode,
    pub channel_hash: String,
    pub trace: GameTrace,
    pub final_association: Vec<usize>,
    /// Nats.
    pub rates: Vec<f64>,
    pub sum_utility: f64,
}

impl TrialResult {
    pub fn switched_users(&self) -> usize {
        self.trace
            .initial_association
            .iter()
            .zip(&self.final_association)
            .filter(|(a, b)| a != b)
            .count()
    }
}

fn finish(
    snr_db: f64,
    trial: u64,
    mode: GameMode,
    channel_hash: String,
    state: NetworkState,
    trace: GameTrace,
    net: &crate::network::Network,
) -> Result<TrialResult> {
    let report = sum_utility(net, &state)?;
    Ok(TrialResult {
        snr_db,
        trial,
        mode,
        channel_hash,
        trace,
        final_association: state.association,
        rates: report.per_user_rate,
        sum_utility: report.sum_utility,
    })
}

/// Runs every (SNR, trial, mode) combination. Both modes of a trial see
/// the same channel draw. A run that hits the sweep limit is kept with
/// `trace.converged == false`.
pub fn run_experiment(cfg: &ScenarioConfig, plan: &ExperimentPlan) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let jobs: Vec<(f64, u64)> = plan
        .snr_db
        .iter()
        .flat_map(|&snr| (0..plan.trials).map(move |t| (snr, t)))
        .collect();
    let nested: Vec<Vec<TrialResult>> = jobs
        .par_iter()
        .map(|&(snr, trial)| {
            let cfg = ScenarioConfig {
                snr_db: snr,
                ..cfg.clone()
            };
            let (_, net) = build_scenario(&cfg, trial)?;
            let hash = net.channels.fingerprint();
            plan.modes
                .iter()
                .map(|&mode| {
                    let cfg = ScenarioConfig { mode, ..cfg.clone() };
                    let (state, trace) = match run(&net, &cfg, trial) {
                        Ok(v) => v,
                        Err(Error::MaxSweepsExceeded { state, trace, .. }) => (*state, *trace),
                        Err(e) => return Err(e),
                    };
                    finish(snr, trial, mode, hash.clone(), state, trace, &net)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn mode_name(mode: GameMode) -> String {
    mode.to_string()
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(dir.join(name))?)))
}

fn bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Writes `run.csv`, `rates.csv`, `assoc.csv`, `cdf.csv`, `summary.csv` and
/// `trials.log` into `dir`.
pub fn emit_outputs(results: &[TrialResult], dir: &Path) -> Result<()> {
    assert!(!results.is_empty(), "no results to write");
    fs::create_dir_all(dir)?;

    let mut run = writer(dir, "run.csv")?;
    let mut header = vec!["snr_db", "trial", "mode"];
    header.extend(TRACE_COLUMNS);
    run.write_record(&header)?;
    for r in results {
        for rec in &r.trace.records {
            let mut row = vec![r.snr_db.to_string(), r.trial.to_string(), mode_name(r.mode)];
            row.extend(trace_row(rec));
            run.write_record(&row)?;
        }
    }
    run.flush()?;

    let mut rates = writer(dir, "rates.csv")?;
    rates.write_record(["snr_db", "trial", "mode", "user", "rate_bits"])?;
    for r in results {
        for (u, rate) in r.rates.iter().enumerate() {
            rates.write_record([
                r.snr_db.to_string(),
                r.trial.to_string(),
                mode_name(r.mode),
                u.to_string(),
                format!("{:.9}", bits(*rate)),
            ])?;
        }
    }
    rates.flush()?;

    let mut assoc = writer(dir, "assoc.csv")?;
    assoc.write_record(["snr_db", "trial", "mode", "user", "initial_bs", "final_bs", "switched"])?;
    for r in results {
        for (u, (a0, a)) in r.trace.initial_association.iter().zip(&r.final_association).enumerate() {
            assoc.write_record([
                r.snr_db.to_string(),
                r.trial.to_string(),
                mode_name(r.mode),
                u.to_string(),
                a0.to_string(),
                a.to_string(),
                u8::from(a0 != a).to_string(),
            ])?;
        }
    }
    assoc.flush()?;

    let groups = group_keys(results);

    let mut cdf = writer(dir, "cdf.csv")?;
    cdf.write_record(["snr_db", "mode", "rate_bits", "cdf"])?;
    for &(snr, mode) in &groups {
        let mut all: Vec<f64> = members(results, snr, mode)
            .flat_map(|r| r.rates.iter().map(|&x| bits(x)))
            .collect();
        all.sort_by(f64::total_cmp);
        let n = all.len() as f64;
        for (i, x) in all.iter().enumerate() {
            cdf.write_record([
                snr.to_string(),
                mode_name(mode),
                format!("{x:.9}"),
                format!("{:.9}", (i + 1) as f64 / n),
            ])?;
        }
    }
    cdf.flush()?;

    let mut summary = writer(dir, "summary.csv")?;
    summary.write_record([
        "snr_db",
        "mode",
        "trials",
        "mean_sum_rate_bits",
        "mean_user_rate_bits",
        "mean_sum_utility",
        "mean_switched_users",
        "mean_sweeps",
        "unconverged",
    ])?;
    for &(snr, mode) in &groups {
        let rs: Vec<&TrialResult> = members(results, snr, mode).collect();
        let k = rs.len() as f64;
        let mean = |f: &dyn Fn(&TrialResult) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / k;
        let sum_rate = mean(&|r| bits(r.rates.iter().sum()));
        let user_rate = mean(&|r| bits(r.rates.iter().sum::<f64>() / r.rates.len() as f64));
        summary.write_record([
            snr.to_string(),
            mode_name(mode),
            rs.len().to_string(),
            format!("{sum_rate:.9}"),
            format!("{user_rate:.9}"),
            format!("{:.9}", mean(&|r| r.sum_utility)),
            format!("{:.4}", mean(&|r| r.switched_users() as f64)),
            format!("{:.4}", mean(&|r| r.trace.sweeps as f64)),
            rs.iter().filter(|r| !r.trace.converged).count().to_string(),
        ])?;
    }
    summary.flush()?;

    let mut log = BufWriter::new(File::create(dir.join("trials.log"))?);
    for r in results {
        writeln!(
            log,
            "snr_db={} trial={} mode={} channel_hash={} sweeps={} converged={} sum_utility={:.9} switched_users={}",
            r.snr_db,
            r.trial,
            mode_name(r.mode),
            r.channel_hash,
            r.trace.sweeps,
            r.trace.converged,
            r.sum_utility,
            r.switched_users()
        )?;
    }
    log.flush()?;
    Ok(())
}

fn group_keys(results: &[TrialResult]) -> Vec<(f64, GameMode)> {
    let mut keys: Vec<(f64, GameMode)> = Vec::new();
    for r in results {
        if !keys.iter().any(|&(s, m)| s == r.snr_db && m == r.mode) {
            keys.push((r.snr_db, r.mode));
        }
    }
    keys
}

fn members(results: &[TrialResult], snr: f64, mode: GameMode) -> impl Iterator<Item = &TrialResult> {
    results.iter().filter(move |r| r.snr_db == snr && r.mode == mode)
}
