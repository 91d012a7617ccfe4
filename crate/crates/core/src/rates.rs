//! Interference and received-signal covariances, MMSE matrices, rates and
//! the system utility.

use crate::error::{Error, Result};
use crate::linalg::{
    adjoint_congruence, congruence, hermitian_inverse, logdet, psd_sqrt, HermitianMatrix,
};
use crate::network::Network;

/// One full strategy profile: covariances, association and prices.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    /// `S_n`, `T_n × T_n`.
    pub covariances: Vec<HermitianMatrix>,
    /// Serving BS per user.
    pub association: Vec<usize>,
    /// `T[q][n]` row-major, each `T_n × T_n`.
    pub prices: Vec<HermitianMatrix>,
    num_bs: usize,
}

impl NetworkState {
    /// Covariances and association as given, all prices zero.
    pub fn new(net: &Network, covariances: Vec<HermitianMatrix>, association: Vec<usize>) -> Self {
        let (q, n) = (net.num_bs(), net.num_users());
        assert_eq!(covariances.len(), n);
        assert_eq!(association.len(), n);
        let prices = (0..q)
            .flat_map(|_| (0..n).map(|u| HermitianMatrix::zeros(net.tx(u))))
            .collect();
        Self {
            covariances,
            association,
            prices,
            num_bs: q,
        }
    }

    pub fn num_users(&self) -> usize {
        self.covariances.len()
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn price(&self, bs: usize, user: usize) -> &HermitianMatrix {
        &self.prices[bs * self.num_users() + user]
    }

    /// `A_n = Σ_q T[q][n]`.
    pub fn total_price(&self, user: usize) -> HermitianMatrix {
        let mut acc = self.price(0, user).clone();
        for q in 1..self.num_bs {
            acc = acc.add(self.price(q, user));
        }
        acc
    }

    /// Users currently served by `bs`.
    pub fn served_by(&self, bs: usize) -> impl Iterator<Item = usize> + '_ {
        self.association
            .iter()
            .enumerate()
            .filter(move |(_, &a)| a == bs)
            .map(|(n, _)| n)
    }

    /// Checks PSD-ness, the power budgets and the association range.
    pub fn check_feasible(&self, net: &Network, tol: f64) -> bool {
        self.covariances.iter().enumerate().all(|(n, s)| {
            s.min_eigenvalue() >= -tol && s.trace_re() <= net.power[n] + 1e-9f64.max(tol)
        }) && self.association.iter().all(|&a| a < self.num_bs)
    }
}

/// Per-user rates (nats) and utilities.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_user_rate: Vec<f64>,
    pub per_user_utility: Vec<f64>,
    pub sum_utility: f64,
}

fn signal_term(net: &Network, state: &NetworkState, bs: usize, user: usize) -> HermitianMatrix {
    congruence(net.channel(bs, user), &state.covariances[user])
}

/// Interference-plus-noise covariance user `n` would see at BS `q`.
pub fn interference_cov(net: &Network, state: &NetworkState, user: usize, bs: usize) -> HermitianMatrix {
    let mut c = HermitianMatrix::scaled_identity(net.rx(bs), net.noise[bs]);
    for m in (0..net.num_users()).filter(|&m| m != user) {
        c = c.add(&signal_term(net, state, bs, m));
    }
    c
}

/// Total received covariance `G_q`.
pub fn received_cov(net: &Network, state: &NetworkState, bs: usize) -> HermitianMatrix {
    let mut g = HermitianMatrix::scaled_identity(net.rx(bs), net.noise[bs]);
    for m in 0..net.num_users() {
        g = g.add(&signal_term(net, state, bs, m));
    }
    g
}

/// `E_n = I − (S^{1/2})ᴴ Hᴴ G⁻¹ H S^{1/2}` at the serving BS.
pub fn mmse_matrix(net: &Network, state: &NetworkState, user: usize) -> Result<HermitianMatrix> {
    let bs = state.association[user];
    let g_inv = hermitian_inverse(&received_cov(net, state, bs))
        .map_err(|_| Error::SingularReceivedCovariance { bs })?;
    let root = psd_sqrt(&state.covariances[user]);
    let hs = net.channel(bs, user) * root.as_matrix();
    let inner = adjoint_congruence(&hs, &g_inv);
    Ok(HermitianMatrix::identity(net.tx(user)).sub(&inner))
}

/// Rate of `user` if it were served by `bs`, holding everyone else fixed.
pub fn rate_at(net: &Network, state: &NetworkState, user: usize, bs: usize) -> Result<f64> {
    let c = interference_cov(net, state, user, bs);
    let g = c.add(&signal_term(net, state, bs, user));
    let singular = |_| Error::SingularInterferenceCovariance { user };
    let r = logdet(&g).map_err(singular)? - logdet(&c).map_err(singular)?;
    Ok(r.max(0.0))
}

/// `R_n = log|I + H S Hᴴ C⁻¹|` at the serving BS, in nats.
pub fn user_rate(net: &Network, state: &NetworkState, user: usize) -> Result<f64> {
    rate_at(net, state, user, state.association[user])
}

/// Same rate through `−log|E_n|`.
pub fn user_rate_via_mmse(net: &Network, state: &NetworkState, user: usize) -> Result<f64> {
    let e = mmse_matrix(net, state, user)?;
    Ok(-logdet(&e).map_err(|_| Error::SingularReceivedCovariance {
        bs: state.association[user],
    })?)
}

pub fn sum_utility(net: &Network, state: &NetworkState) -> Result<RateReport> {
    let per_user_rate = (0..net.num_users())
        .map(|n| user_rate(net, state, n))
        .collect::<Result<Vec<_>>>()?;
    let per_user_utility: Vec<f64> = per_user_rate
        .iter()
        .zip(&net.utilities)
        .map(|(r, u)| u.eval(*r))
        .collect();
    let sum_utility = per_user_utility.iter().sum();
    Ok(RateReport {
        per_user_rate,
        per_user_utility,
        sum_utility,
    })
}

/// Shorthand for `sum_utility(..).sum_utility`.
pub fn system_utility(net: &Network, state: &NetworkState) -> Result<f64> {
    Ok(sum_utility(net, state)?.sum_utility)
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use crate::utility::UtilitySpec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wsr(n: usize) -> Vec<UtilitySpec> {
        vec![UtilitySpec::wsr(1.0); n]
    }

    #[test]
    fn lone_user_sees_noise_only() {
        let net = scalar_network(&[&[7f64.sqrt()]], 1.0, wsr(1));
        let st = scalar_state(&net, &[1.0], vec![0]);
        let c = interference_cov(&net, &st, 0, 0);
        assert_eq!(c.as_matrix()[(0, 0)].re, 1.0);
        let r = user_rate(&net, &st, 0).unwrap();
        assert!((r - 8f64.ln()).abs() < 1e-14);
        assert!((r / std::f64::consts::LN_2 - 3.0).abs() < 1e-13);
        let zero = scalar_state(&net, &[0.0], vec![0]);
        assert_eq!(user_rate(&net, &zero, 0).unwrap(), 0.0);
    }

    #[test]
    fn scalar_two_user_values() {
        let net = scalar_network(&[&[1.0, 1.0]], 1.0, wsr(2));
        let st = scalar_state(&net, &[1.0, 1.0], vec![0, 0]);
        assert_eq!(interference_cov(&net, &st, 0, 0).as_matrix()[(0, 0)].re, 2.0);
        assert_eq!(received_cov(&net, &st, 0).as_matrix()[(0, 0)].re, 3.0);
        let e = mmse_matrix(&net, &st, 1).unwrap();
        assert!((e.as_matrix()[(0, 0)].re - 2.0 / 3.0).abs() < 1e-15);
        assert!((user_rate(&net, &st, 0).unwrap() - 1.5f64.ln()).abs() < 1e-15);

        let off = scalar_state(&net, &[0.0, 0.0], vec![0, 0]);
        assert_eq!(received_cov(&net, &off, 0).as_matrix()[(0, 0)].re, 1.0);
        assert_eq!(mmse_matrix(&net, &off, 0).unwrap(), HermitianMatrix::identity(1));
    }

    #[test]
    fn interference_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let net = random_network(&mut rng, 3, 2, 2, 3, UtilitySpec::wsr(1.0));
        let st = random_state(&mut rng, &net);
        for q in 0..2 {
            for n in 0..3 {
                let mut direct = crate::linalg::ComplexMatrix::identity(3, 3).scale(net.noise[q]);
                for m in 0..3 {
                    if m != n {
                        let h = net.channel(q, m);
                        direct += h * st.covariances[m].as_matrix() * h.adjoint();
                    }
                }
                let c = interference_cov(&net, &st, n, q);
                assert!((c.as_matrix() - direct).norm() <= 1e-12 * (1.0 + c.frobenius()));
            }
        }
    }

    #[test]
    fn sum_utility_examples() {
        let net = scalar_network(&[&[7f64.sqrt(), 0.0], &[0.0, 7f64.sqrt()]], 1.0, wsr(2));
        let st = scalar_state(&net, &[1.0, 1.0], vec![0, 1]);
        let rep = sum_utility(&net, &st).unwrap();
        assert!((rep.sum_utility - 2.0 * 8f64.ln()).abs() < 1e-13);

        // rate e nats for a lone PF user: h^2 = e^e - 1
        let h = (std::f64::consts::E.exp() - 1.0).sqrt();
        let net = scalar_network(&[&[h]], 1.0, vec![UtilitySpec::proportional_fair()]);
        let st = scalar_state(&net, &[1.0], vec![0]);
        assert!((sum_utility(&net, &st).unwrap().sum_utility - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn rate_forms_agree(seed in any::<u64>(), users in 1usize..5, bss in 1usize..4, tx in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = random_network(&mut rng, users, bss, tx, tx + 1, UtilitySpec::proportional_fair());
            let st = random_state(&mut rng, &net);
            for n in 0..users {
                let a = user_rate(&net, &st, n).unwrap();
                let b = user_rate_via_mmse(&net, &st, n).unwrap();
                prop_assert!(a >= 0.0);
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a), "{} vs {}", a, b);
            }
            let rep = sum_utility(&net, &st).unwrap();
            let direct: f64 = (0..users).map(|n| net.utilities[n].eval(user_rate(&net, &st, n).unwrap())).sum();
            prop_assert!((rep.sum_utility - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }

        #[test]
        fn received_minus_interference_is_signal(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = random_network(&mut rng, 3, 2, 2, 2, UtilitySpec::wsr(1.0));
            let st = random_state(&mut rng, &net);
            for n in 0..3 {
                let q = st.association[n];
                let g = received_cov(&net, &st, q);
                let c = interference_cov(&net, &st, n, q);
                let diff = g.sub(&c);
                let sig = congruence(net.channel(q, n), &st.covariances[n]);
                prop_assert!((diff.as_matrix() - sig.as_matrix()).norm() <= 1e-10 * (1.0 + g.frobenius()));
                // Loewner order G ⪰ C
                prop_assert!(diff.min_eigenvalue() >= -1e-9 * (1.0 + g.frobenius()));
                let e = mmse_matrix(&net, &st, n).unwrap();
                prop_assert!(e.min_eigenvalue() > 0.0);
            }
        }
    }
}
