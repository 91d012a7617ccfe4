//! Per-user best response: the Lagrangian diagonalization, the water level
//! search, the power multiplier search, and the choice of serving BS.

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_factor, congruence, logdet, lower_triangular_inverse, svd, ComplexMatrix, HermitianMatrix,
};
use crate::network::Network;
use crate::rates::{interference_cov, NetworkState};
use crate::utility::{UtilityKind, UtilitySpec};

/// Regularizer used in place of `μ = 0` when the total price is singular.
pub const MU_FLOOR: f64 = 1e-10;

/// Doublings allowed when bracketing the power multiplier.
pub const MAX_DOUBLINGS: usize = 60;

const MAX_BISECTIONS: usize = 400;

/// User `n`'s problem at one candidate BS:
/// `max f(log|I + H S Hᴴ C⁻¹|) − Tr[A S]` over `S ⪰ 0, Tr S ≤ p̄`.
#[derive(Debug, Clone)]
pub struct InnerProblem {
    pub channel: ComplexMatrix,
    pub interference: HermitianMatrix,
    pub total_price: HermitianMatrix,
    pub power_budget: f64,
    pub utility: UtilitySpec,
}

impl InnerProblem {
    pub fn tx(&self) -> usize {
        self.channel.ncols()
    }

    /// Rate in nats reached with covariance `s`.
    pub fn rate(&self, s: &HermitianMatrix) -> Result<f64> {
        let c = &self.interference;
        let g = c.add(&congruence(&self.channel, s));
        Ok((logdet(&g)? - logdet(c)?).max(0.0))
    }

    /// `Ū = f(R) − Tr[A S]`.
    pub fn objective(&self, s: &HermitianMatrix) -> Result<f64> {
        Ok(self.utility.eval(self.rate(s)?) - self.total_price.inner(s))
    }

    /// Lagrangian `Ū − μ (Tr S − p̄)`.
    pub fn lagrangian(&self, s: &HermitianMatrix, mu: f64) -> Result<f64> {
        Ok(self.objective(s)? - mu * (s.trace_re() - self.power_budget))
    }

    /// Gradient of [`objective`](Self::objective): `α(R) Hᴴ (C + H S Hᴴ)⁻¹ H − A`.
    pub fn gradient(&self, s: &HermitianMatrix) -> Result<HermitianMatrix> {
        let g = self.interference.add(&congruence(&self.channel, s));
        let g_inv = crate::linalg::hermitian_inverse(&g)?;
        let alpha = self.utility.alpha(self.rate(s)?);
        Ok(crate::linalg::adjoint_congruence(&self.channel, &g_inv)
            .scale(alpha)
            .sub(&self.total_price))
    }
}

/// The problem after the change of variables `Ŝ = Mᴴ L S Lᴴ M`, in which it
/// decouples into scalar water-filling over the gains `Δ_ii`.
#[derive(Debug, Clone)]
pub struct DiagonalizedProblem {
    /// `Δ_ii`, nonincreasing.
    pub gains: Vec<f64>,
    /// `L⁻¹` with `A + μI = Lᴴ L`.
    pub l_inv: ComplexMatrix,
    /// Right singular vectors of `B⁻¹ H L⁻¹`.
    pub m: ComplexMatrix,
    pub c3: f64,
}

impl DiagonalizedProblem {
    /// `Σ_{cΔ²>1} ln(cΔ²) + c₃`.
    pub fn rate_at_level(&self, c: f64) -> f64 {
        self.gains
            .iter()
            .map(|d| c * d * d)
            .filter(|&x| x > 1.0)
            .map(f64::ln)
            .sum::<f64>()
            + self.c3
    }

    /// `s_i = [c − 1/Δ²]⁺`.
    pub fn powers(&self, c: f64) -> Vec<f64> {
        self.gains
            .iter()
            .map(|&d| if d > 0.0 { (c - 1.0 / (d * d)).max(0.0) } else { 0.0 })
            .collect()
    }

    /// `ζ_i = [1 − cΔ²]⁺`.
    pub fn slacks(&self, c: f64) -> Vec<f64> {
        self.gains.iter().map(|&d| (1.0 - c * d * d).max(0.0)).collect()
    }

    /// Maps diagonal powers back to `S = L⁻¹ M diag(s) Mᴴ L⁻ᴴ`.
    pub fn covariance(&self, powers: &[f64]) -> HermitianMatrix {
        let t = self.m.ncols();
        let transform = &self.l_inv * &self.m;
        let mut diag = powers.to_vec();
        diag.resize(t, 0.0);
        congruence(&transform, &HermitianMatrix::from_real_diagonal(&diag))
    }
}

pub fn diagonalize(p: &InnerProblem, mu: f64) -> Result<DiagonalizedProblem> {
    let t = p.tx();
    let shifted = p.total_price.add(&HermitianMatrix::scaled_identity(t, mu));
    let lower = cholesky_factor(&shifted).map_err(|e| if mu == 0.0 { Error::DegenerateRegularizer } else { e })?;
    // A + μI = K Kᴴ with K lower, so L = Kᴴ and L⁻¹ = K⁻ᴴ
    let l_inv = lower_triangular_inverse(&lower).adjoint();
    let b_inv = lower_triangular_inverse(&cholesky_factor(&p.interference)?);
    let w = &b_inv * &p.channel * &l_inv;
    let dec = svd(&w);
    Ok(DiagonalizedProblem {
        gains: dec.singular_values,
        l_inv,
        m: dec.v,
        c3: 0.0,
    })
}

/// One evaluation of the water-level predicate `α(R(c)) > c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelProbe {
    pub c: f64,
    pub above: bool,
}

/// Water level `c*` solving `c = α(R(c))`.
pub fn solve_c_star(dp: &DiagonalizedProblem, utility: &UtilitySpec, eps: f64) -> Result<f64> {
    solve_c_star_traced(dp, utility, eps).map(|(c, _)| c)
}

/// [`solve_c_star`] together with every predicate evaluation it made.
pub fn solve_c_star_traced(
    dp: &DiagonalizedProblem,
    utility: &UtilitySpec,
    eps: f64,
) -> Result<(f64, Vec<LevelProbe>)> {
    if dp.gains.iter().all(|&d| d <= 0.0) {
        return Err(Error::NoPositiveGain);
    }
    if utility.kind == UtilityKind::WeightedSumRate {
        return Ok((utility.weight, Vec::new()));
    }
    let mut trace = Vec::new();
    let mut probe = |c: f64| {
        let value = utility.alpha(dp.rate_at_level(c));
        let above = value > c;
        trace.push(LevelProbe { c, above });
        (above, value - c)
    };

    let mut lo = 0.0;
    let mut hi = utility.alpha(dp.c3) + 1.0;
    let mut doublings = 0;
    while probe(hi).0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::BracketFailure { doublings });
        }
    }
    let mut c = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTIONS {
        c = 0.5 * (lo + hi);
        let (above, gap) = probe(c);
        if gap.abs() <= eps * c.max(1.0) || hi - lo <= eps * hi {
            break;
        }
        if above {
            lo = c;
        } else {
            hi = c;
        }
    }
    Ok((c, trace))
}

/// Unique maximizer of the Lagrangian at multiplier `μ`, and its trace.
pub fn solve_inner_covariance(p: &InnerProblem, mu: f64) -> Result<(HermitianMatrix, f64)> {
    solve_inner_with_eps(p, mu, 1e-12)
}

fn solve_inner_with_eps(p: &InnerProblem, mu: f64, eps: f64) -> Result<(HermitianMatrix, f64)> {
    let dp = diagonalize(p, mu)?;
    let c = match solve_c_star(&dp, &p.utility, eps) {
        Ok(c) => c,
        Err(Error::NoPositiveGain) => return Ok((HermitianMatrix::zeros(p.tx()), 0.0)),
        Err(e) => return Err(e),
    };
    let s = dp.covariance(&dp.powers(c));
    let tr = s.trace_re();
    Ok((s, tr))
}

/// Optimal covariance under the power budget and the multiplier `μ*`.
pub fn solve_user_covariance(p: &InnerProblem, eps: f64) -> Result<(HermitianMatrix, f64)> {
    let budget = p.power_budget;
    let mu0 = if cholesky_factor(&p.total_price).is_ok() { 0.0 } else { MU_FLOOR };
    let (s0, tr0) = solve_inner_with_eps(p, mu0, eps)?;
    if tr0 <= budget {
        return Ok((s0, 0.0));
    }

    let mut lo = mu0;
    let mut hi = 1.0;
    let mut doublings = 0;
    let mut upper = loop {
        let (s, tr) = solve_inner_with_eps(p, hi, eps)?;
        if tr <= budget {
            break s;
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::BracketFailure { doublings });
        }
    };

    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= eps * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (s, tr) = match solve_inner_with_eps(p, mid, eps) {
            Ok(v) => v,
            Err(Error::NotPositiveDefinite { .. }) => {
                lo = mid;
                continue;
            }
            Err(e) => return Err(e),
        };
        if (tr - budget).abs() <= eps * budget {
            let s = if tr > budget { s.scale(budget / tr) } else { s };
            return Ok((s, mid));
        }
        if tr > budget {
            lo = mid;
        } else {
            hi = mid;
            upper = s;
        }
    }
    Ok((upper, hi))
}

/// Outcome of a user's best response.
#[derive(Debug, Clone)]
pub struct BestResponse {
    pub covariance: HermitianMatrix,
    pub bs: usize,
    /// `Ū_n` at the chosen BS.
    pub value: f64,
    pub mu: f64,
}

/// Inner problem of `user` if it were served by `bs`, at the state's prices.
pub fn inner_problem(net: &Network, state: &NetworkState, user: usize, bs: usize) -> InnerProblem {
    InnerProblem {
        channel: net.channel(bs, user).clone(),
        interference: interference_cov(net, state, user, bs),
        total_price: state.total_price(user),
        power_budget: net.power[user],
        utility: net.utilities[user],
    }
}

/// Solves the inner problem at every candidate and keeps the best BS;
/// the current BS wins any tie within `eps`.
pub fn select_best_bs(
    net: &Network,
    state: &NetworkState,
    user: usize,
    candidates: &[usize],
    eps: f64,
) -> Result<BestResponse> {
    assert!(!candidates.is_empty(), "no candidate BS");
    let current = state.association[user];
    let mut best: Option<BestResponse> = None;
    let mut at_current: Option<BestResponse> = None;
    for &q in candidates {
        let p = inner_problem(net, state, user, q);
        let (s, mu) = solve_user_covariance(&p, 1e-12)?;
        let value = p.objective(&s)?;
        let br = BestResponse {
            covariance: s,
            bs: q,
            value,
            mu,
        };
        if q == current {
            at_current = Some(br.clone());
        }
        if best.as_ref().is_none_or(|b| br.value > b.value) {
            best = Some(br);
        }
    }
    let best = best.expect("candidates nonempty");
    Ok(match at_current {
        Some(cur) if cur.value >= best.value - eps => cur,
        _ => best,
    })
}
