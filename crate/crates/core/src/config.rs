//! Scenario configuration and its flat `key = value` file format.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. List
//! valued keys take comma separated values; a single value is broadcast to
//! every user (or BS). Unknown and duplicate keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::utility::{UtilityKind, UtilitySpec, DEFAULT_RATE_FLOOR};

#[derive(Debug, Clone, PartialEq)]
pub enum UserPlacement {
    /// Half of the users at 90–100 m from BS 0, the rest at 90–100 m from the other BSs.
    CellEdgeCongested,
    /// Same split as above but 20–100 m from the home BS, uniform over the annulus.
    Uniform,
    /// Positions supplied in the `user_positions` key.
    Explicit(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameMode {
    /// Users pick their BS and covariance.
    Joint,
    /// Association frozen at the initial strongest-channel choice.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserOrder {
    RoundRobin,
    /// Fresh seeded permutation every sweep.
    RandomPermutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Strongest candidate BS, scaled-identity covariance.
    Strongest,
    /// Random candidate BS, random feasible covariance.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative accuracy of the multiplier and water-level searches.
    pub bisection_eps: f64,
    pub convergence_eps: f64,
    pub max_sweeps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bisection_eps: 1e-12,
            convergence_eps: 1e-6,
            max_sweeps: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub num_bs: usize,
    /// One entry per user, or a single broadcast value.
    pub tx_antennas: Vec<usize>,
    /// One entry per BS, or a single broadcast value.
    pub rx_antennas: Vec<usize>,
    /// Watts per user. Empty means derive from `snr_db`.
    pub power_budget: Vec<f64>,
    /// Watts per BS.
    pub noise_power: Vec<f64>,
    pub weights: Vec<f64>,
    pub utility_kind: UtilityKind,
    pub rate_floor: f64,
    /// 0 means every BS is a candidate.
    pub candidate_bs_limit: usize,
    pub bs_spacing: f64,
    pub user_placement: UserPlacement,
    pub snr_db: f64,
    /// Standard deviation of the log-normal shadowing, in dB.
    pub shadowing_db: f64,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub mode: GameMode,
    pub user_order: UserOrder,
    pub init: InitMode,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_users: 16,
            num_bs: 7,
            tx_antennas: vec![2],
            rx_antennas: vec![4],
            power_budget: Vec::new(),
            noise_power: vec![1.0],
            weights: vec![1.0],
            utility_kind: UtilityKind::ProportionalFair,
            rate_floor: DEFAULT_RATE_FLOOR,
            candidate_bs_limit: 3,
            bs_spacing: 200.0,
            user_placement: UserPlacement::CellEdgeCongested,
            snr_db: 30.0,
            shadowing_db: 8.0,
            seed: 1,
            tolerances: Tolerances::default(),
            mode: GameMode::Joint,
            user_order: UserOrder::RoundRobin,
            init: InitMode::Strongest,
        }
    }
}

const KEYS: &[&str] = &[
    "num_users",
    "num_bs",
    "tx_antennas",
    "rx_antennas",
    "power_budget",
    "noise_power",
    "weights",
    "utility_kind",
    "rate_floor",
    "candidate_bs_limit",
    "bs_spacing",
    "user_placement",
    "user_positions",
    "snr_db",
    "shadowing_db",
    "seed",
    "bisection_eps",
    "convergence_eps",
    "max_sweeps",
    "mode",
    "user_order",
    "init",
];

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| parse_scalar(key, v))
        .collect()
}

fn broadcast<T: Copy>(values: &[T], idx: usize) -> T {
    if values.len() == 1 {
        values[0]
    } else {
        values[idx]
    }
}

impl ScenarioConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses the flat key/value format; missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(invalid(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(invalid(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }

        let mut cfg = ScenarioConfig::default();
        let mut positions: Option<Vec<(f64, f64)>> = None;
        let mut placement: Option<String> = None;
        for (key, value) in &entries {
            let v = value.as_str();
            match key.as_str() {
                "num_users" => cfg.num_users = parse_scalar(key, v)?,
                "num_bs" => cfg.num_bs = parse_scalar(key, v)?,
                "tx_antennas" => cfg.tx_antennas = parse_list(key, v)?,
                "rx_antennas" => cfg.rx_antennas = parse_list(key, v)?,
                "power_budget" => cfg.power_budget = parse_list(key, v)?,
                "noise_power" => cfg.noise_power = parse_list(key, v)?,
                "weights" => cfg.weights = parse_list(key, v)?,
                "utility_kind" => cfg.utility_kind = v.parse()?,
                "rate_floor" => cfg.rate_floor = parse_scalar(key, v)?,
                "candidate_bs_limit" => cfg.candidate_bs_limit = parse_scalar(key, v)?,
                "bs_spacing" => cfg.bs_spacing = parse_scalar(key, v)?,
                "user_placement" => placement = Some(v.to_string()),
                "user_positions" => positions = Some(parse_positions(v)?),
                "snr_db" => cfg.snr_db = parse_scalar(key, v)?,
                "shadowing_db" => cfg.shadowing_db = parse_scalar(key, v)?,
                "seed" => cfg.seed = parse_scalar(key, v)?,
                "bisection_eps" => cfg.tolerances.bisection_eps = parse_scalar(key, v)?,
                "convergence_eps" => cfg.tolerances.convergence_eps = parse_scalar(key, v)?,
                "max_sweeps" => cfg.tolerances.max_sweeps = parse_scalar(key, v)?,
                "mode" => cfg.mode = v.parse()?,
                "user_order" => {
                    cfg.user_order = match v {
                        "round_robin" => UserOrder::RoundRobin,
                        "random" => UserOrder::RandomPermutation,
                        other => return Err(invalid(format!("unknown user_order `{other}`"))),
                    }
                }
                "init" => {
                    cfg.init = match v {
                        "strongest" => InitMode::Strongest,
                        "random" => InitMode::Random,
                        other => return Err(invalid(format!("unknown init `{other}`"))),
                    }
                }
                _ => unreachable!("key list checked above"),
            }
        }

        cfg.user_placement = match (placement.as_deref(), positions) {
            (Some("explicit"), Some(p)) => UserPlacement::Explicit(p),
            (Some("explicit"), None) => {
                return Err(Error::InvalidPlacement(
                    "explicit placement requires `user_positions`".into(),
                ))
            }
            (_, Some(_)) => {
                return Err(invalid("`user_positions` is only valid with explicit placement"))
            }
            (Some("cell_edge_congested") | None, None) => UserPlacement::CellEdgeCongested,
            (Some("uniform"), None) => UserPlacement::Uniform,
            (Some(other), None) => return Err(invalid(format!("unknown user_placement `{other}`"))),
        };

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, q) = (self.num_users, self.num_bs);
        if n == 0 || q == 0 {
            return Err(invalid("num_users and num_bs must be positive"));
        }
        let check_len = |name: &str, len: usize, want: usize, allow_empty: bool| -> Result<()> {
            if len == 1 || len == want || (allow_empty && len == 0) {
                Ok(())
            } else {
                Err(invalid(format!("`{name}` has {len} entries, expected 1 or {want}")))
            }
        };
        check_len("tx_antennas", self.tx_antennas.len(), n, false)?;
        check_len("rx_antennas", self.rx_antennas.len(), q, false)?;
        check_len("power_budget", self.power_budget.len(), n, true)?;
        check_len("noise_power", self.noise_power.len(), q, false)?;
        check_len("weights", self.weights.len(), n, false)?;

        for user in 0..n {
            let t = self.tx(user);
            if t == 0 {
                return Err(invalid("tx_antennas must be positive"));
            }
            for bs in 0..q {
                if t > self.rx(bs) {
                    return Err(invalid(format!(
                        "user {user} has {t} antennas but BS {bs} only {}; channels must be tall",
                        self.rx(bs)
                    )));
                }
            }
            let p = self.power(user);
            if !(p > 0.0 && p.is_finite()) {
                return Err(invalid(format!("power budget of user {user} must be positive")));
            }
            if !(self.weight(user) >= 0.0) {
                return Err(invalid("weights must be nonnegative"));
            }
        }
        for bs in 0..q {
            if !(self.noise(bs) > 0.0) {
                return Err(invalid("noise_power must be positive"));
            }
        }
        if self.candidate_bs_limit > q {
            return Err(invalid("candidate_bs_limit exceeds num_bs"));
        }
        if !(self.bs_spacing > 0.0) {
            return Err(invalid("bs_spacing must be positive"));
        }
        if !(self.rate_floor > 0.0) {
            return Err(invalid("rate_floor must be positive"));
        }
        let tol = &self.tolerances;
        if !(tol.bisection_eps > 0.0 && tol.convergence_eps > 0.0) || tol.max_sweeps == 0 {
            return Err(invalid("tolerances must be positive"));
        }
        if let UserPlacement::Explicit(p) = &self.user_placement {
            if p.len() != n {
                return Err(Error::InvalidPlacement(format!(
                    "{} positions given for {n} users",
                    p.len()
                )));
            }
        }
        Ok(())
    }

    pub fn tx(&self, user: usize) -> usize {
        broadcast(&self.tx_antennas, user)
    }

    pub fn rx(&self, bs: usize) -> usize {
        broadcast(&self.rx_antennas, bs)
    }

    pub fn noise(&self, bs: usize) -> f64 {
        broadcast(&self.noise_power, bs)
    }

    pub fn weight(&self, user: usize) -> f64 {
        broadcast(&self.weights, user)
    }

    /// Explicit budget if configured, otherwise `10^(snr_db/10)` (noise normalized to 1).
    pub fn power(&self, user: usize) -> f64 {
        if self.power_budget.is_empty() {
            10f64.powf(self.snr_db / 10.0)
        } else {
            broadcast(&self.power_budget, user)
        }
    }

    pub fn utility(&self, user: usize) -> UtilitySpec {
        UtilitySpec {
            kind: self.utility_kind,
            weight: self.weight(user),
            rate_floor: self.rate_floor,
        }
    }
}

fn parse_positions(value: &str) -> Result<Vec<(f64, f64)>> {
    value
        .split(',')
        .map(|pair| {
            let (x, y) = pair
                .split_once(':')
                .ok_or_else(|| Error::InvalidPlacement(format!("expected `x:y`, got `{pair}`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidPlacement(format!("bad coordinate `{s}`")))
            };
            Ok((parse(x)?, parse(y)?))
        })
        .collect()
}

impl FromStr for GameMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(GameMode::Joint),
            "fixed" => Ok(GameMode::Fixed),
            other => Err(invalid(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for GameMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameMode::Joint => "joint",
            GameMode::Fixed => "fixed",
        })
    }
}
