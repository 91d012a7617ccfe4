//! The single-antenna network built from a 3-SAT formula whose maximum sum
//! rate reaches `3(M+N)` bits exactly when the formula is satisfiable, with
//! an exhaustive search that certifies this on small instances.
//!
//! BS layout: clause BS `c^i_m` is `3m + i`, variable BS `x_n` is `3M + n`.
//! User layout: clause user `C_m` is `m`, `X_n` is `M + 2n`, `X̄_n` is `M + 2n + 1`.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::network::{ChannelSet, Network};
use crate::utility::UtilitySpec;

/// Largest search space [`brute_force_max_sum_rate`] accepts.
pub const MAX_CONFIGS: f64 = (1u64 << 40) as f64;

const STRONG_GAIN: f64 = 7.0;
const CROSS_GAIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, negated: true }
    }

    pub fn holds(&self, assignment: &[bool]) -> bool {
        assignment[self.var] != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.var as i64 + 1;
        write!(f, "{}", if self.negated { -v } else { v })
    }
}

/// A 3-CNF formula. Literals within a clause may repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreeSatInstance {
    pub num_vars: usize,
    pub clauses: Vec<[Literal; 3]>,
}

impl ThreeSatInstance {
    pub fn new(num_vars: usize, clauses: Vec<[Literal; 3]>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::InvalidCnf("no variables".into()));
        }
        for (m, c) in clauses.iter().enumerate() {
            if let Some(l) = c.iter().find(|l| l.var >= num_vars) {
                return Err(Error::InvalidCnf(format!("clause {}: literal {l} out of range", m + 1)));
            }
        }
        Ok(Self { num_vars, clauses })
    }

    /// Parses DIMACS CNF: `c` comment lines, a `p cnf N M` header, then
    /// `M` clauses of three nonzero literals each terminated by `0`.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidCnf(msg);
        let mut header = None;
        let mut tokens = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if header.is_some() || parts.len() != 4 || parts[1] != "cnf" {
                    return Err(bad(format!("bad header `{line}`")));
                }
                let n: usize = parts[2].parse().map_err(|_| bad(format!("bad variable count `{}`", parts[2])))?;
                let m: usize = parts[3].parse().map_err(|_| bad(format!("bad clause count `{}`", parts[3])))?;
                header = Some((n, m));
                continue;
            }
            if header.is_none() {
                return Err(bad("clause before header".into()));
            }
            for tok in line.split_whitespace() {
                tokens.push(tok.parse::<i64>().map_err(|_| bad(format!("bad literal `{tok}`")))?);
            }
        }
        let (n, m) = header.ok_or_else(|| bad("missing `p cnf` header".into()))?;
        let mut clauses = Vec::with_capacity(m);
        let mut current = Vec::new();
        for t in tokens {
            if t == 0 {
                let lits: [Literal; 3] = current
                    .as_slice()
                    .try_into()
                    .map_err(|_| bad(format!("clause {} has {} literals, expected 3", clauses.len() + 1, current.len())))?;
                clauses.push(lits);
                current.clear();
                continue;
            }
            let var = t.unsigned_abs() as usize;
            if var > n {
                return Err(bad(format!("literal {t} exceeds {n} variables")));
            }
            current.push(Literal {
                var: var - 1,
                negated: t < 0,
            });
        }
        if !current.is_empty() {
            return Err(bad("last clause is not terminated by 0".into()));
        }
        if clauses.len() != m {
            return Err(bad(format!("header announces {m} clauses, found {}", clauses.len())));
        }
        Self::new(n, clauses)
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| l.holds(assignment)))
    }

    /// First satisfying assignment in lexicographic order, if any.
    pub fn solve(&self) -> Option<Vec<bool>> {
        (0u64..1 << self.num_vars)
            .map(|bits| (0..self.num_vars).map(|v| bits >> v & 1 == 1).collect::<Vec<_>>())
            .find(|a| self.is_satisfied_by(a))
    }
}

/// The scalar network of the reduction, with `σ² = 1`, `p̄ = 1`, unit weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GadgetNetwork {
    pub num_vars: usize,
    pub num_clauses: usize,
    /// `|h[q][u]|²`, row-major by BS.
    pub gains: Vec<f64>,
}

impl GadgetNetwork {
    pub fn num_bs(&self) -> usize {
        3 * self.num_clauses + self.num_vars
    }

    pub fn num_users(&self) -> usize {
        self.num_clauses + 2 * self.num_vars
    }

    pub fn clause_bs(&self, clause: usize, i: usize) -> usize {
        3 * clause + i
    }

    pub fn var_bs(&self, var: usize) -> usize {
        3 * self.num_clauses + var
    }

    pub fn clause_user(&self, clause: usize) -> usize {
        clause
    }

    /// User `X_n` (`negated = false`) or `X̄_n`.
    pub fn var_user(&self, var: usize, negated: bool) -> usize {
        self.num_clauses + 2 * var + negated as usize
    }

    pub fn gain(&self, bs: usize, user: usize) -> f64 {
        self.gains[bs * self.num_users() + user]
    }

    /// `h[q][u]`.
    pub fn channel(&self, bs: usize, user: usize) -> f64 {
        self.gain(bs, user).sqrt()
    }

    pub fn is_clause_bs(&self, bs: usize) -> bool {
        bs < 3 * self.num_clauses
    }

    pub fn is_clause_user(&self, user: usize) -> bool {
        user < self.num_clauses
    }

    /// BSs with a nonzero channel to `user`.
    pub fn reachable(&self, user: usize) -> Vec<usize> {
        (0..self.num_bs()).filter(|&q| self.gain(q, user) > 0.0).collect()
    }

    /// The same network as a general [`Network`] with unit-weight sum rate utilities.
    pub fn to_network(&self) -> Network {
        let (qs, us) = (self.num_bs(), self.num_users());
        let channels = (0..qs)
            .flat_map(|q| (0..us).map(move |u| (q, u)))
            .map(|(q, u)| ComplexMatrix::from_element(1, 1, Complex64::new(self.channel(q, u), 0.0)))
            .collect();
        Network::new(
            ChannelSet::new(qs, us, channels),
            vec![1.0; qs],
            vec![1.0; us],
            vec![UtilitySpec::wsr(1.0); us],
        )
    }
}

pub fn build_network(sat: &ThreeSatInstance) -> GadgetNetwork {
    let mut net = GadgetNetwork {
        num_vars: sat.num_vars,
        num_clauses: sat.num_clauses(),
        gains: Vec::new(),
    };
    let users = net.num_users();
    net.gains = vec![0.0; net.num_bs() * users];
    for (m, clause) in sat.clauses.iter().enumerate() {
        for (i, lit) in clause.iter().enumerate() {
            let q = net.clause_bs(m, i);
            let u = net.clause_user(m);
            net.gains[q * users + u] = STRONG_GAIN;
            // the user of the opposite literal leaks into this clause BS
            let u = net.var_user(lit.var, !lit.negated);
            net.gains[q * users + u] = CROSS_GAIN;
        }
    }
    for v in 0..sat.num_vars {
        let q = net.var_bs(v);
        for negated in [false, true] {
            let u = net.var_user(v, negated);
            net.gains[q * users + u] = STRONG_GAIN;
        }
    }
    net
}

/// Transmit powers tried per user.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerSearch {
    /// `{0, p̄}`.
    OnOff,
    /// `{0, p̄/(k−1), …, p̄}` with `k` levels.
    Grid(usize),
}

impl PowerSearch {
    fn levels(&self) -> Vec<f64> {
        match *self {
            PowerSearch::OnOff => vec![1.0],
            PowerSearch::Grid(k) => {
                assert!(k >= 2, "power grid needs at least two levels");
                (1..k).map(|i| i as f64 / (k - 1) as f64).collect()
            }
        }
    }
}

/// A user's choice in a brute-force configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Choice {
    Off,
    On { bs: usize, power: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub max_rate_bits: f64,
    pub assignment: Vec<Choice>,
    pub configs: u64,
}

/// Sum rate in bits of a configuration, interference treated as noise.
pub fn sum_rate_bits(net: &GadgetNetwork, choices: &[Choice]) -> f64 {
    let mut received = vec![1.0; net.num_bs()];
    for (u, c) in choices.iter().enumerate() {
        if let Choice::On { power, .. } = *c {
            for (q, r) in received.iter_mut().enumerate() {
                *r += net.gain(q, u) * power;
            }
        }
    }
    choices
        .iter()
        .enumerate()
        .map(|(u, c)| match *c {
            Choice::Off => 0.0,
            Choice::On { bs, power } => {
                let total = received[bs];
                (total / (total - net.gain(bs, u) * power)).log2()
            }
        })
        .sum()
}

/// Exhaustive maximum of the sum rate over on/off power (or a power grid)
/// and every reachable BS per user.
pub fn brute_force_max_sum_rate(net: &GadgetNetwork, power: &PowerSearch) -> Result<BruteForceResult> {
    let levels = power.levels();
    let options: Vec<Vec<Choice>> = (0..net.num_users())
        .map(|u| {
            let mut opts = vec![Choice::Off];
            for q in net.reachable(u) {
                opts.extend(levels.iter().map(|&p| Choice::On { bs: q, power: p }));
            }
            opts
        })
        .collect();
    let space: f64 = options.iter().map(|o| o.len() as f64).product();
    if space > MAX_CONFIGS {
        return Err(Error::TooLarge { configs: space });
    }
    let total = space as u64;
    let decode = |mut idx: u64, out: &mut Vec<Choice>| {
        out.clear();
        for opts in &options {
            let k = opts.len() as u64;
            out.push(opts[(idx % k) as usize]);
            idx /= k;
        }
    };
    let (best_rate, best_idx) = (0..total)
        .into_par_iter()
        .map_init(Vec::new, |buf, idx| {
            decode(idx, buf);
            (sum_rate_bits(net, buf), idx)
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let mut assignment = Vec::new();
    decode(best_idx, &mut assignment);
    Ok(BruteForceResult {
        max_rate_bits: best_rate,
        assignment,
        configs: total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub sat_decision: bool,
    pub witness: Option<Vec<bool>>,
    pub max_rate_bits: f64,
    /// `3(M+N)`.
    pub target_bits: f64,
    pub rate_matches: bool,
    pub optimum: BruteForceResult,
}

/// Compares the truth-table decision with the brute-force sum rate threshold.
pub fn check_reduction(sat: &ThreeSatInstance) -> Result<ReductionReport> {
    let witness = sat.solve();
    let net = build_network(sat);
    let optimum = brute_force_max_sum_rate(&net, &PowerSearch::OnOff)?;
    let target_bits = 3.0 * (sat.num_clauses() + sat.num_vars) as f64;
    let reaches = optimum.max_rate_bits >= target_bits - 1e-9;
    Ok(ReductionReport {
        sat_decision: witness.is_some(),
        max_rate_bits: optimum.max_rate_bits,
        target_bits,
        rate_matches: reaches == witness.is_some(),
        witness,
        optimum,
    })
}

impl ReductionReport {
    /// One verdict line followed by the achieving configuration.
    pub fn verdict(&self) -> String {
        let mut out = format!(
            "{} max_sum_rate={:.9} bits target={} bits rate_matches={}\n",
            if self.sat_decision { "SATISFIABLE" } else { "UNSATISFIABLE" },
            self.max_rate_bits,
            self.target_bits,
            self.rate_matches
        );
        let config: Vec<String> = self
            .optimum
            .assignment
            .iter()
            .enumerate()
            .map(|(u, c)| match c {
                Choice::Off => format!("u{u}:off"),
                Choice::On { bs, power } => format!("u{u}:bs{bs}@{power}"),
            })
            .collect();
        out.push_str(&format!("assignment {}\n", config.join(" ")));
        if let Some(w) = &self.witness {
            let lits: Vec<String> = w
                .iter()
                .enumerate()
                .map(|(v, &b)| Literal { var: v, negated: !b }.to_string())
                .collect();
            out.push_str(&format!("witness {}\n", lits.join(" ")));
        }
        out
    }
}

/// `(1 + 7/(1+7p))(1+p)`.
pub fn frontier_product(p: f64) -> f64 {
    (1.0 + 7.0 / (1.0 + 7.0 * p)) * (1.0 + p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierReport {
    pub at_zero: f64,
    pub at_one: f64,
    /// Maximum over the grid `p = k·1e-4`, `k = 1..=10⁴`.
    pub grid_max: f64,
    /// Grid point of the minimum.
    pub argmin: f64,
}

impl FrontierReport {
    pub fn holds(&self) -> bool {
        self.at_zero == 8.0 && self.at_one == 3.75 && self.grid_max < 8.0
    }
}

pub fn two_user_frontier_check() -> FrontierReport {
    let grid = (1..=10_000).map(|k| k as f64 * 1e-4);
    let (mut grid_max, mut min, mut argmin) = (f64::NEG_INFINITY, f64::INFINITY, 0.0);
    for p in grid {
        let f = frontier_product(p);
        grid_max = grid_max.max(f);
        if f < min {
            min = f;
            argmin = p;
        }
    }
    FrontierReport {
        at_zero: frontier_product(0.0),
        at_one: frontier_product(1.0),
        grid_max,
        argmin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianMatrix;
    use crate::rates::{rate_at, NetworkState};
    use Literal as L;

    #[test]
    fn fig5_clause_channels() {
        let sat = ThreeSatInstance::new(3, vec![[L::pos(0), L::neg(1), L::pos(2)]]).unwrap();
        let net = build_network(&sat);
        assert_eq!((net.num_bs(), net.num_users()), (3 + 3, 1 + 6));
        assert_eq!(net.channel(net.clause_bs(0, 0), net.var_user(0, true)), 1.0);
        assert_eq!(net.channel(net.clause_bs(0, 1), net.var_user(1, false)), 1.0);
        assert_eq!(net.channel(net.clause_bs(0, 2), net.var_user(2, true)), 1.0);
        assert_eq!(net.channel(net.clause_bs(0, 0), net.var_user(0, false)), 0.0);
        for i in 0..3 {
            assert_eq!(net.gain(net.clause_bs(0, i), 0), 7.0);
        }
        for v in 0..3 {
            for neg in [false, true] {
                let u = net.var_user(v, neg);
                let strong: Vec<usize> = (0..net.num_bs()).filter(|&q| net.gain(q, u) == 7.0).collect();
                assert_eq!(strong, vec![net.var_bs(v)]);
            }
        }
    }

    #[test]
    fn lone_variable_and_empty_formula() {
        let one = build_network(&ThreeSatInstance::new(1, vec![]).unwrap());
        let r = brute_force_max_sum_rate(&one, &PowerSearch::OnOff).unwrap();
        assert!((r.max_rate_bits - 3.0).abs() < 1e-12);

        let rep = check_reduction(&ThreeSatInstance::new(2, vec![]).unwrap()).unwrap();
        assert!((rep.max_rate_bits - 6.0).abs() < 1e-12 && rep.rate_matches && rep.sat_decision);
    }

    #[test]
    fn shared_variable_bs_loses() {
        let net = build_network(&ThreeSatInstance::new(1, vec![]).unwrap());
        let both = [Choice::On { bs: 0, power: 1.0 }; 2];
        let each = (1.0f64 + 7.0 / 8.0).log2();
        assert!((sum_rate_bits(&net, &both) - 2.0 * each).abs() < 1e-12);
        assert!(2.0 * each < 3.0);
    }

    #[test]
    fn satisfiable_clause_reaches_target() {
        let sat = ThreeSatInstance::new(3, vec![[L::pos(0), L::pos(1), L::pos(2)]]).unwrap();
        let rep = check_reduction(&sat).unwrap();
        assert!(rep.sat_decision && rep.rate_matches);
        assert!((rep.max_rate_bits - 12.0).abs() < 1e-9);
        let net = build_network(&sat);
        for (u, c) in rep.optimum.assignment.iter().enumerate() {
            if let Choice::On { bs, .. } = c {
                assert!(net.is_clause_user(u) || !net.is_clause_bs(*bs));
            }
        }
    }

    #[test]
    fn contradiction_falls_short() {
        let x = [L::pos(0); 3];
        let nx = [L::neg(0); 3];
        let sat = ThreeSatInstance::new(2, vec![x, nx]).unwrap();
        let rep = check_reduction(&sat).unwrap();
        assert!(!rep.sat_decision && rep.rate_matches);
        assert!(rep.max_rate_bits < rep.target_bits - 1e-3);
        assert!(rep.verdict().starts_with("UNSATISFIABLE"));
    }

    #[test]
    fn brute_force_rates_agree_with_rate_engine() {
        let sat = ThreeSatInstance::new(2, vec![[L::pos(0), L::neg(1), L::neg(0)]]).unwrap();
        let g = build_network(&sat);
        let net = g.to_network();
        let choices: Vec<Choice> = (0..g.num_users())
            .map(|u| {
                let r = g.reachable(u);
                if u % 3 == 2 {
                    Choice::Off
                } else {
                    Choice::On { bs: r[u % r.len()], power: 1.0 }
                }
            })
            .collect();
        let cov = choices
            .iter()
            .map(|c| match c {
                Choice::Off => HermitianMatrix::zeros(1),
                Choice::On { power, .. } => HermitianMatrix::scaled_identity(1, *power),
            })
            .collect();
        let assoc = choices
            .iter()
            .map(|c| match c {
                Choice::Off => 0,
                Choice::On { bs, .. } => *bs,
            })
            .collect();
        let st = NetworkState::new(&net, cov, assoc);
        let engine: f64 = (0..g.num_users())
            .map(|u| rate_at(&net, &st, u, st.association[u]).unwrap())
            .sum::<f64>()
            / std::f64::consts::LN_2;
        assert!((engine - sum_rate_bits(&g, &choices)).abs() < 1e-12);
    }

    #[test]
    fn power_grid_agrees_with_on_off() {
        let sat = ThreeSatInstance::new(2, vec![[L::pos(0), L::neg(1), L::pos(1)]]).unwrap();
        let net = build_network(&sat);
        let on_off = brute_force_max_sum_rate(&net, &PowerSearch::OnOff).unwrap();
        let grid = brute_force_max_sum_rate(&net, &PowerSearch::Grid(5)).unwrap();
        assert!((grid.max_rate_bits - on_off.max_rate_bits).abs() < 1e-9);
    }

    #[test]
    fn too_large_is_rejected() {
        let sat = ThreeSatInstance::new(
            12,
            (0..8).map(|m| [L::pos(m), L::neg(m + 1), L::pos(m + 2)]).collect(),
        )
        .unwrap();
        assert!(matches!(
            brute_force_max_sum_rate(&build_network(&sat), &PowerSearch::OnOff),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn dimacs_round_trip() {
        let text = "c example\np cnf 3 2\n1 -2 3 0\n-1 2\n 2 0\n";
        let sat = ThreeSatInstance::parse_dimacs(text).unwrap();
        assert_eq!(sat.num_vars, 3);
        assert_eq!(sat.clauses[0], [L::pos(0), L::neg(1), L::pos(2)]);
        assert_eq!(sat.clauses[1], [L::neg(0), L::pos(1), L::pos(1)]);
        for bad in ["1 2 3 0", "p cnf 2 1\n1 2 3 0", "p cnf 3 1\n1 2 0", "p cnf 3 2\n1 2 3 0", "p cnf 3 1\n1 2 3"] {
            assert!(ThreeSatInstance::parse_dimacs(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn frontier_values() {
        let f = two_user_frontier_check();
        assert_eq!(f.at_zero, 8.0);
        assert_eq!(f.at_one, 3.75);
        assert!(f.grid_max < 8.0);
        assert!(f.holds());
        let critical = (42f64.sqrt() - 1.0) / 7.0;
        assert!((f.argmin - critical).abs() < 1e-4);
    }
}
