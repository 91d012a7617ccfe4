#![allow(dead_code)]

use bsgame_core::best_response::InnerProblem;
use bsgame_core::linalg::{hermitian_inverse, project_power_set};
use bsgame_core::network::ChannelSet;
use bsgame_core::{ComplexMatrix, HermitianMatrix, Network, NetworkState, UtilityKind, UtilitySpec};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn complex_gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
    })
}

pub fn random_psd<R: Rng>(rng: &mut R, dim: usize, trace: f64) -> HermitianMatrix {
    let a = complex_gaussian(rng, dim, dim);
    let s = HermitianMatrix::symmetrize(&a * a.adjoint());
    s.scale(trace / s.trace_re())
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrize(complex_gaussian(rng, dim, dim))
}

/// Network with iid Rayleigh links scaled by a log-uniform large-scale gain
/// in [0.1, 10], every BS a candidate.
pub fn random_network<R: Rng>(
    rng: &mut R,
    users: usize,
    bss: usize,
    tx: usize,
    rx: usize,
    utility: UtilitySpec,
) -> Network {
    let channels = (0..bss * users)
        .map(|_| {
            let g = 10f64.powf(rng.random_range(-1.0..1.0));
            complex_gaussian(rng, rx, tx) * Complex64::new(g.sqrt(), 0.0)
        })
        .collect();
    let power = (0..users).map(|_| rng.random_range(0.5..5.0)).collect();
    let noise = (0..bss).map(|_| rng.random_range(0.5..1.5)).collect();
    Network::new(ChannelSet::new(bss, users, channels), noise, power, vec![utility; users])
}

pub fn random_state<R: Rng>(rng: &mut R, net: &Network) -> NetworkState {
    let cov = (0..net.num_users())
        .map(|n| {
            let tr = net.power[n] * rng.random_range(0.1..1.0);
            random_psd(rng, net.tx(n), tr)
        })
        .collect();
    let assoc = (0..net.num_users()).map(|_| rng.random_range(0..net.num_bs())).collect();
    NetworkState::new(net, cov, assoc)
}

pub fn random_kind<R: Rng>(rng: &mut R) -> UtilityKind {
    UtilityKind::ALL[rng.random_range(0..UtilityKind::ALL.len())]
}

pub fn random_inner_problem<R: Rng>(rng: &mut R, tx: usize, rx: usize, utility: UtilitySpec) -> InnerProblem {
    let price_scale = rng.random_range(0.0..0.5);
    InnerProblem {
        channel: complex_gaussian(rng, rx, tx),
        interference: random_psd(rng, rx, rx as f64).add(&HermitianMatrix::scaled_identity(rx, 0.2)),
        total_price: random_psd(rng, tx, price_scale * tx as f64),
        power_budget: rng.random_range(0.5..4.0),
        utility,
    }
}

fn rate(p: &InnerProblem, s: &HermitianMatrix) -> f64 {
    let g = p.interference.add(&bsgame_core::linalg::congruence(&p.channel, s));
    let ev = |m: &HermitianMatrix| m.eigenvalues().iter().map(|l| l.ln()).sum::<f64>();
    (ev(&g) - ev(&p.interference)).max(0.0)
}

/// `f(R(S)) − Tr[A S]`, computed through eigenvalues.
pub fn oracle_objective(p: &InnerProblem, s: &HermitianMatrix) -> f64 {
    p.utility.eval(rate(p, s)) - p.total_price.inner(s)
}

fn oracle_gradient(p: &InnerProblem, s: &HermitianMatrix) -> HermitianMatrix {
    let g = p.interference.add(&bsgame_core::linalg::congruence(&p.channel, s));
    let g_inv = hermitian_inverse(&g).expect("received covariance is PD");
    let hgh = HermitianMatrix::symmetrize(p.channel.adjoint() * g_inv.as_matrix() * &p.channel);
    hgh.scale(p.utility.alpha(rate(p, s))).sub(&p.total_price)
}

/// Accelerated projected gradient ascent over `{S ⪰ 0, Tr S ≤ p̄}` with
/// backtracking and restarts. Returns the best point and its objective.
pub fn projected_gradient_oracle(p: &InnerProblem, iterations: usize) -> (HermitianMatrix, f64) {
    let t = p.channel.ncols();
    let budget = p.power_budget;
    let mut x = HermitianMatrix::scaled_identity(t, 0.5 * budget / t as f64);
    let mut y = x.clone();
    let mut fx = oracle_objective(p, &x);
    let mut momentum = 1.0f64;
    let mut step = 1.0f64;
    for _ in 0..iterations {
        let fy = oracle_objective(p, &y);
        let gy = oracle_gradient(p, &y);
        let mut next;
        loop {
            next = project_power_set(&y.add(&gy.scale(step)), budget);
            let d = next.sub(&y);
            let quad = fy + gy.inner(&d) - d.inner(&d) / (2.0 * step);
            if oracle_objective(p, &next) >= quad - 1e-15 || step < 1e-14 {
                break;
            }
            step *= 0.5;
        }
        let fnext = oracle_objective(p, &next);
        if fnext < fx {
            // restart the momentum
            momentum = 1.0;
            y = x.clone();
            continue;
        }
        let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / m_next;
        let moved = next.sub(&x);
        y = project_power_set(&next.add(&moved.scale(beta)), budget);
        let improvement = fnext - fx;
        x = next;
        fx = fnext;
        momentum = m_next;
        step *= 1.5;
        if improvement.abs() < 1e-15 && moved.frobenius() < 1e-12 {
            break;
        }
    }
    (x, fx)
}
