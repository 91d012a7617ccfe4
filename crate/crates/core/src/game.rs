//! Gauss–Seidel best-response dynamics, convergence detection, and the
//! equilibrium and stationarity checks applied to its output.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::best_response::{inner_problem, select_best_bs, solve_user_covariance};
use crate::config::{GameMode, InitMode, ScenarioConfig, UserOrder};
use crate::error::{Error, Result};
use crate::linalg::{fd_gradient, project_power_set, HermitianMatrix};
use crate::network::{substream, Network, Stream};
use crate::pricing::{all_prices, refresh_prices};
use crate::rates::{system_utility, NetworkState};

/// One user update.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based update counter.
    pub iteration: usize,
    pub sweep: usize,
    pub user: usize,
    /// `f(S, a)` after the update, nats.
    pub sum_utility: f64,
    pub association: Vec<usize>,
    /// Association switches so far.
    pub switches: usize,
    /// Acting user's gain in `Ū_n` at frozen prices.
    pub gap: f64,
    /// Largest `gap` so far in the current sweep.
    pub max_gap: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GameTrace {
    pub initial_utility: f64,
    pub initial_association: Vec<usize>,
    pub records: Vec<TraceRecord>,
    pub sweeps: usize,
    pub converged: bool,
}

impl GameTrace {
    pub fn final_utility(&self) -> f64 {
        self.records.last().map_or(self.initial_utility, |r| r.sum_utility)
    }

    pub fn total_switches(&self) -> usize {
        self.records.last().map_or(0, |r| r.switches)
    }

    /// Largest drop of the sum utility between consecutive records.
    pub fn worst_decrease(&self) -> f64 {
        let mut prev = self.initial_utility;
        let mut worst: f64 = 0.0;
        for r in &self.records {
            worst = worst.max(prev - r.sum_utility);
            prev = r.sum_utility;
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_COLUMNS)?;
        for r in &self.records {
            w.write_record(trace_row(r))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const TRACE_COLUMNS: [&str; 6] = [
    "iter",
    "user",
    "sum_utility_nats",
    "sum_utility_bits_equiv",
    "switches",
    "max_gap",
];

pub fn trace_row(r: &TraceRecord) -> [String; 6] {
    [
        r.iteration.to_string(),
        r.user.to_string(),
        format!("{:.12e}", r.sum_utility),
        format!("{:.12e}", r.sum_utility / std::f64::consts::LN_2),
        r.switches.to_string(),
        format!("{:.6e}", r.max_gap),
    ]
}

/// Starting profile: scaled-identity covariances at `0.9·p̄` on the strongest
/// candidate BS, or random ones on a random candidate. Prices are zero.
pub fn init_state(net: &Network, cfg: &ScenarioConfig, trial: u64) -> NetworkState {
    let users = 0..net.num_users();
    match cfg.init {
        InitMode::Strongest => {
            let cov = users
                .clone()
                .map(|n| HermitianMatrix::scaled_identity(net.tx(n), 0.9 * net.power[n] / net.tx(n) as f64))
                .collect();
            let assoc = users.map(|n| net.candidates[n][0]).collect();
            NetworkState::new(net, cov, assoc)
        }
        InitMode::Random => {
            let mut rng = substream(cfg.seed, trial, Stream::Init);
            let mut cov = Vec::with_capacity(net.num_users());
            let mut assoc = Vec::with_capacity(net.num_users());
            for n in users {
                let t = net.tx(n);
                let a = crate::linalg::ComplexMatrix::from_fn(t, t, |_, _| {
                    num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                let s = HermitianMatrix::symmetrize(&a * a.adjoint());
                let frac: f64 = rng.random_range(0.1..1.0);
                let tr = s.trace_re();
                cov.push(if tr > 0.0 { s.scale(frac * net.power[n] / tr) } else { s });
                let c = &net.candidates[n];
                assoc.push(c[rng.random_range(0..c.len())]);
            }
            NetworkState::new(net, cov, assoc)
        }
    }
}

/// Result of one user update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub switched: bool,
    /// `Ū_n(new) − Ū_n(old)` at the prices the user saw.
    pub gap: f64,
}

fn candidates_with_current(net: &Network, state: &NetworkState, user: usize) -> Vec<usize> {
    let mut c = net.candidates[user].clone();
    if !c.contains(&state.association[user]) {
        c.push(state.association[user]);
    }
    c
}

/// `Ū_n` of the user's current strategy at the state's prices.
pub fn current_value(net: &Network, state: &NetworkState, user: usize) -> Result<f64> {
    inner_problem(net, state, user, state.association[user]).objective(&state.covariances[user])
}

/// Best response of `user`, followed by a full price update.
pub fn step(net: &Network, state: &mut NetworkState, user: usize, mode: GameMode, eps: f64) -> Result<StepOutcome> {
    let before = current_value(net, state, user)?;
    let old_bs = state.association[user];
    let (s, bs, value) = match mode {
        GameMode::Joint => {
            let br = select_best_bs(net, state, user, &candidates_with_current(net, state, user), eps)?;
            (br.covariance, br.bs, br.value)
        }
        GameMode::Fixed => {
            let p = inner_problem(net, state, user, old_bs);
            let (s, _) = solve_user_covariance(&p, eps)?;
            let v = p.objective(&s)?;
            (s, old_bs, v)
        }
    };
    state.covariances[user] = s;
    state.association[user] = bs;
    refresh_prices(net, state)?;
    Ok(StepOutcome {
        switched: bs != old_bs,
        gap: value - before,
    })
}

/// Runs the dynamics from [`init_state`] until a full sweep improves no
/// user by `convergence_eps` and switches no association.
pub fn run(net: &Network, cfg: &ScenarioConfig, trial: u64) -> Result<(NetworkState, GameTrace)> {
    run_from(net, cfg, trial, init_state(net, cfg, trial))
}

/// Same as [`run`] from a given starting profile.
pub fn run_from(
    net: &Network,
    cfg: &ScenarioConfig,
    trial: u64,
    mut state: NetworkState,
) -> Result<(NetworkState, GameTrace)> {
    let tol = cfg.tolerances;
    refresh_prices(net, &mut state)?;
    let mut trace = GameTrace {
        initial_utility: system_utility(net, &state)?,
        initial_association: state.association.clone(),
        ..GameTrace::default()
    };
    let mut order: Vec<usize> = (0..net.num_users()).collect();
    let mut order_rng = substream(cfg.seed, trial, Stream::UserOrder);
    let mut switches = 0;
    for sweep in 1..=tol.max_sweeps {
        if cfg.user_order == UserOrder::RandomPermutation {
            order.shuffle(&mut order_rng);
        }
        let mut max_gap = f64::NEG_INFINITY;
        let mut sweep_switches = 0;
        for &n in &order {
            let out = step(net, &mut state, n, cfg.mode, tol.bisection_eps)?;
            if out.switched {
                switches += 1;
                sweep_switches += 1;
            }
            max_gap = max_gap.max(out.gap);
            trace.records.push(TraceRecord {
                iteration: trace.records.len() + 1,
                sweep,
                user: n,
                sum_utility: system_utility(net, &state)?,
                association: state.association.clone(),
                switches,
                gap: out.gap,
                max_gap,
            });
        }
        trace.sweeps = sweep;
        if max_gap < tol.convergence_eps && sweep_switches == 0 {
            trace.converged = true;
            return Ok((state, trace));
        }
    }
    Err(Error::MaxSweepsExceeded {
        sweeps: tol.max_sweeps,
        state: Box::new(state),
        trace: Box::new(trace),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeReport {
    pub max_user_gap: f64,
    pub max_price_residual: f64,
    pub is_ne: bool,
}

/// Re-solves every user's best response against the state and compares the
/// stored prices with freshly computed ones.
pub fn verify_ne(net: &Network, state: &NetworkState, mode: GameMode, tol: f64) -> Result<NeReport> {
    let mut max_user_gap: f64 = 0.0;
    for n in 0..net.num_users() {
        let current = current_value(net, state, n)?;
        let best = match mode {
            GameMode::Joint => select_best_bs(net, state, n, &candidates_with_current(net, state, n), 0.0)?.value,
            GameMode::Fixed => {
                let p = inner_problem(net, state, n, state.association[n]);
                p.objective(&solve_user_covariance(&p, 1e-12)?.0)?
            }
        };
        max_user_gap = max_user_gap.max(best - current);
    }
    let fresh = all_prices(net, state)?;
    let max_price_residual = fresh
        .iter()
        .zip(&state.prices)
        .map(|(a, b)| (a.as_matrix() - b.as_matrix()).norm())
        .fold(0.0, f64::max);
    Ok(NeReport {
        max_user_gap,
        max_price_residual,
        is_ne: max_user_gap <= tol && max_price_residual <= tol,
    })
}

/// Stationarity residual of every user's covariance for `max f(S; a)` over
/// `{S_n ⪰ 0, Tr S_n ≤ p̄_n}`: `‖S − Proj(S + ∇f)‖_F` plus the
/// complementarity slack `μ̂ |p̄ − Tr S|` with `μ̂ = max(0, λ_max(∇f))`.
/// The gradient is taken by central differences.
pub fn kkt_residual(net: &Network, state: &NetworkState) -> Result<Vec<f64>> {
    (0..net.num_users())
        .map(|n| {
            let s = &state.covariances[n];
            let objective = |x: &HermitianMatrix| {
                let mut probe = state.clone();
                probe.covariances[n] = x.clone();
                system_utility(net, &probe)
            };
            let grad = fd_gradient(objective, s, 1e-5 * (1.0 + s.frobenius()))?;
            let moved = project_power_set(&s.add(&grad), net.power[n]);
            let natural = (s.as_matrix() - moved.as_matrix()).norm();
            let mu = grad.eigenvalues().last().copied().unwrap_or(0.0).max(0.0);
            Ok(natural + mu * (net.power[n] - s.trace_re()).abs())
        })
        .collect()
}
