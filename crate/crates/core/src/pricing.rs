//! Interference prices charged by the BSs.
//!
//! `T[q][n]` is the negative gradient, with respect to `S_n`, of the summed
//! utility of the users served by BS `q` other than `n`. It is PSD and does
//! not depend on which BS `n` itself is attached to.

use crate::error::{Error, Result};
use crate::linalg::{adjoint_congruence, congruence, hermitian_inverse, psd_sqrt, HermitianMatrix};
use crate::network::Network;
use crate::rates::{received_cov, user_rate, NetworkState};

/// Inverse of `G_q`.
fn received_inverse(net: &Network, state: &NetworkState, bs: usize) -> Result<HermitianMatrix> {
    hermitian_inverse(&received_cov(net, state, bs)).map_err(|_| Error::SingularReceivedCovariance { bs })
}

/// `α_m G⁻¹ H S^{1/2} E_m⁻¹ (S^{1/2})ᴴ Hᴴ G⁻¹` for a user `m` served by `bs`.
fn influence(
    net: &Network,
    state: &NetworkState,
    bs: usize,
    g_inv: &HermitianMatrix,
    user: usize,
) -> Result<HermitianMatrix> {
    let rate = user_rate(net, state, user)?;
    let alpha = net.utilities[user].alpha(rate);
    let root = psd_sqrt(&state.covariances[user]);
    let hs = net.channel(bs, user) * root.as_matrix();
    let e = HermitianMatrix::identity(net.tx(user)).sub(&adjoint_congruence(&hs, g_inv));
    let e_inv = hermitian_inverse(&e).map_err(|_| Error::SingularReceivedCovariance { bs })?;
    let left = g_inv.as_matrix() * &hs;
    Ok(congruence(&left, &e_inv).scale(alpha))
}

/// Price BS `bs` charges user `user`.
pub fn price_matrix(net: &Network, state: &NetworkState, bs: usize, user: usize) -> Result<HermitianMatrix> {
    let rx = net.rx(bs);
    let mut acc = HermitianMatrix::zeros(rx);
    let mut any = false;
    let mut g_inv = None;
    for m in state.served_by(bs).filter(|&m| m != user) {
        if g_inv.is_none() {
            g_inv = Some(received_inverse(net, state, bs)?);
        }
        acc = acc.add(&influence(net, state, bs, g_inv.as_ref().unwrap(), m)?);
        any = true;
    }
    if !any {
        return Ok(HermitianMatrix::zeros(net.tx(user)));
    }
    Ok(adjoint_congruence(net.channel(bs, user), &acc))
}

/// Every `T[q][n]`, row-major by BS.
pub fn all_prices(net: &Network, state: &NetworkState) -> Result<Vec<HermitianMatrix>> {
    let (qs, ns) = (net.num_bs(), net.num_users());
    let mut prices = Vec::with_capacity(qs * ns);
    for q in 0..qs {
        let served: Vec<usize> = state.served_by(q).collect();
        if served.is_empty() {
            prices.extend((0..ns).map(|n| HermitianMatrix::zeros(net.tx(n))));
            continue;
        }
        let g_inv = received_inverse(net, state, q)?;
        let mut terms = vec![None; ns];
        let mut total = HermitianMatrix::zeros(net.rx(q));
        for &m in &served {
            let k = influence(net, state, q, &g_inv, m)?;
            total = total.add(&k);
            terms[m] = Some(k);
        }
        for (n, own) in terms.iter().enumerate() {
            let others = match own {
                Some(k) if served.len() == 1 => {
                    let _ = k;
                    prices.push(HermitianMatrix::zeros(net.tx(n)));
                    continue;
                }
                Some(k) => total.sub(k),
                None => total.clone(),
            };
            prices.push(adjoint_congruence(net.channel(q, n), &others));
        }
    }
    Ok(prices)
}

/// Recomputes the prices stored in `state`.
pub fn refresh_prices(net: &Network, state: &mut NetworkState) -> Result<()> {
    state.prices = all_prices(net, state)?;
    Ok(())
}

/// Divided second differences of `t ↦ −Tr[E_m(Ŝ)⁻¹ E_m(S_n + tD)]` over
/// consecutive triples of `steps`; `Ŝ` is the given state.
pub fn lemma2_convexity_probe(
    net: &Network,
    state: &NetworkState,
    m: usize,
    n: usize,
    direction: &HermitianMatrix,
    steps: &[f64],
) -> Result<Vec<f64>> {
    assert_ne!(m, n, "probe needs two distinct users");
    let bs = state.association[m];
    let e_hat = mmse_at(net, state, bs, m)?;
    let e_hat_inv = hermitian_inverse(&e_hat).map_err(|_| Error::SingularReceivedCovariance { bs })?;

    let mut values = Vec::with_capacity(steps.len());
    let mut probe = state.clone();
    for &t in steps {
        let moved = state.covariances[n].add(&direction.scale(t));
        if moved.min_eigenvalue() < -1e-12 {
            return Err(Error::InfeasibleDirection { t });
        }
        probe.covariances[n] = moved;
        let e = mmse_at(net, &probe, bs, m)?;
        values.push(-e_hat_inv.inner(&e));
    }

    Ok(steps
        .windows(3)
        .zip(values.windows(3))
        .map(|(t, v)| {
            let left = (v[1] - v[0]) / (t[1] - t[0]);
            let right = (v[2] - v[1]) / (t[2] - t[1]);
            2.0 * (right - left) / (t[2] - t[0])
        })
        .collect())
}

fn mmse_at(net: &Network, state: &NetworkState, bs: usize, user: usize) -> Result<HermitianMatrix> {
    let g_inv = received_inverse(net, state, bs)?;
    let root = psd_sqrt(&state.covariances[user]);
    let hs = net.channel(bs, user) * root.as_matrix();
    Ok(HermitianMatrix::identity(net.tx(user)).sub(&adjoint_congruence(&hs, &g_inv)))
}
