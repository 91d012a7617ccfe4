//! Topology, channel generation and the assembled network description.

use std::cmp::Ordering;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use sha2::{Digest, Sha256};

use crate::config::{ScenarioConfig, UserPlacement};
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, ComplexMatrix};
use crate::utility::UtilitySpec;

/// Reference distance of the path-loss law, in meters.
pub const PATH_LOSS_REFERENCE_M: f64 = 200.0;
pub const PATH_LOSS_EXPONENT: f64 = 3.5;

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology = 1,
    Channels = 2,
    UserOrder = 3,
    Init = 4,
}

/// Deterministic generator for `(seed, trial, purpose)`.
pub fn substream(seed: u64, trial: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17));
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub bs_positions: Vec<(f64, f64)>,
    pub user_positions: Vec<(f64, f64)>,
    /// BS the user was dropped around (placement bookkeeping only).
    pub home_bs: Vec<usize>,
    /// Row-major `[bs][user]`.
    distances: Vec<f64>,
}

impl Topology {
    pub fn new(bs_positions: Vec<(f64, f64)>, user_positions: Vec<(f64, f64)>) -> Result<Self> {
        let n = user_positions.len();
        let mut distances = Vec::with_capacity(bs_positions.len() * n);
        for (q, b) in bs_positions.iter().enumerate() {
            for (u, p) in user_positions.iter().enumerate() {
                let d = ((b.0 - p.0).powi(2) + (b.1 - p.1).powi(2)).sqrt();
                if !(d > 0.0) {
                    return Err(Error::InvalidPlacement(format!(
                        "user {u} coincides with BS {q}"
                    )));
                }
                distances.push(d);
            }
        }
        let home_bs = (0..n)
            .map(|u| {
                (0..bs_positions.len())
                    .min_by(|&a, &b| distances[a * n + u].total_cmp(&distances[b * n + u]))
                    .unwrap_or(0)
            })
            .collect();
        Ok(Self {
            bs_positions,
            user_positions,
            home_bs,
            distances,
        })
    }

    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn distance(&self, bs: usize, user: usize) -> f64 {
        self.distances[bs * self.num_users() + user]
    }
}

/// First `count` sites of a hexagonal lattice, center first, then ring by ring.
pub fn hexagonal_sites(count: usize, spacing: f64) -> Vec<(f64, f64)> {
    let mut radius = 1i64;
    loop {
        let mut sites = Vec::new();
        for i in -radius..=radius {
            for j in -radius..=radius {
                let x = spacing * (i as f64 + 0.5 * j as f64);
                let y = spacing * (j as f64) * 3f64.sqrt() / 2.0;
                sites.push((x, y));
            }
        }
        let key = |p: &(f64, f64)| {
            let ring = ((p.0 * p.0 + p.1 * p.1).sqrt() / spacing * 1e6).round() as i64;
            let angle = p.1.atan2(p.0).rem_euclid(std::f64::consts::TAU);
            let angle = (angle * 1e9).round() as i64;
            (ring, angle)
        };
        sites.sort_by_key(key);
        // sites beyond the inscribed circle of this window are incomplete rings
        let full = sites
            .iter()
            .filter(|p| (p.0 * p.0 + p.1 * p.1).sqrt() <= spacing * radius as f64 * 0.8660254 + 1e-9)
            .count();
        if full >= count {
            sites.truncate(count);
            for p in &mut sites {
                // scrub -0.0 so outputs are byte-stable
                p.0 += 0.0;
                p.1 += 0.0;
            }
            return sites;
        }
        radius += 1;
    }
}

fn home_assignment(num_users: usize, num_bs: usize) -> Vec<usize> {
    let congested = num_users.div_ceil(2);
    (0..num_users)
        .map(|u| {
            if u < congested || num_bs == 1 {
                0
            } else {
                1 + (u - congested) % (num_bs - 1)
            }
        })
        .collect()
}

pub fn generate_topology<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Topology> {
    let bs = hexagonal_sites(cfg.num_bs, cfg.bs_spacing);
    let (r_min, r_max, area_uniform) = match &cfg.user_placement {
        UserPlacement::Explicit(positions) => {
            if positions.len() != cfg.num_users {
                return Err(Error::InvalidPlacement(format!(
                    "{} positions given for {} users",
                    positions.len(),
                    cfg.num_users
                )));
            }
            if positions.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
                return Err(Error::InvalidPlacement("non-finite coordinate".into()));
            }
            return Topology::new(bs, positions.clone());
        }
        UserPlacement::CellEdgeCongested => (90.0, 100.0, false),
        UserPlacement::Uniform => (20.0, 100.0, true),
    };
    let homes = home_assignment(cfg.num_users, cfg.num_bs);
    let users = homes
        .iter()
        .map(|&h| {
            let r = if area_uniform {
                rng.random_range::<f64, _>(r_min * r_min..=r_max * r_max).sqrt()
            } else {
                rng.random_range(r_min..=r_max)
            };
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            (bs[h].0 + r * theta.cos(), bs[h].1 + r * theta.sin())
        })
        .collect();
    let mut top = Topology::new(bs, users)?;
    top.home_bs = homes;
    Ok(top)
}

/// Per-entry standard deviation `(d0/d)^3.5 · L` with `L = 10^(shadow_db/10)`.
pub fn channel_std(distance: f64, shadow_db: f64) -> f64 {
    (PATH_LOSS_REFERENCE_M / distance).powf(PATH_LOSS_EXPONENT) * 10f64.powf(shadow_db / 10.0)
}

/// All channel matrices `H[q][n]`, each `R_q × T_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    num_bs: usize,
    num_users: usize,
    channels: Vec<ComplexMatrix>,
}

impl ChannelSet {
    /// `channels` in row-major `[bs][user]` order.
    pub fn new(num_bs: usize, num_users: usize, channels: Vec<ComplexMatrix>) -> Self {
        assert_eq!(channels.len(), num_bs * num_users, "channel count mismatch");
        Self {
            num_bs,
            num_users,
            channels,
        }
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn get(&self, bs: usize, user: usize) -> &ComplexMatrix {
        &self.channels[bs * self.num_users + user]
    }

    pub fn get_mut(&mut self, bs: usize, user: usize) -> &mut ComplexMatrix {
        &mut self.channels[bs * self.num_users + user]
    }

    /// SHA-256 over the little-endian bytes of every entry, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for h in &self.channels {
            hasher.update((h.nrows() as u64).to_le_bytes());
            hasher.update((h.ncols() as u64).to_le_bytes());
            for z in h.iter() {
                hasher.update(z.re.to_le_bytes());
                hasher.update(z.im.to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .take(16)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn generate_channels<R: Rng>(top: &Topology, cfg: &ScenarioConfig, rng: &mut R) -> ChannelSet {
    let shadow = Normal::new(0.0, cfg.shadowing_db.max(0.0)).expect("finite shadowing std");
    let mut channels = Vec::with_capacity(cfg.num_bs * cfg.num_users);
    for q in 0..cfg.num_bs {
        for n in 0..cfg.num_users {
            let shadow_db = if cfg.shadowing_db > 0.0 { rng.sample(shadow) } else { 0.0 };
            let std = channel_std(top.distance(q, n), shadow_db);
            let scale = std / 2f64.sqrt();
            let h = ComplexMatrix::from_fn(cfg.rx(q), cfg.tx(n), |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(scale * re, scale * im)
            });
            channels.push(h);
        }
    }
    ChannelSet::new(cfg.num_bs, cfg.num_users, channels)
}

/// BSs ordered by descending spectral norm of `H[q][user]`, lower index on ties.
pub fn candidate_bs(ch: &ChannelSet, user: usize, limit: usize) -> Vec<usize> {
    let norms: Vec<f64> = (0..ch.num_bs()).map(|q| spectral_norm(ch.get(q, user))).collect();
    let mut order: Vec<usize> = (0..ch.num_bs()).collect();
    order.sort_by(|&a, &b| match norms[b].total_cmp(&norms[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    if limit > 0 {
        order.truncate(limit);
    }
    order
}

/// Everything the game needs besides the mutable strategy profile.
#[derive(Debug, Clone)]
pub struct Network {
    pub channels: ChannelSet,
    /// `σ²_q`
    pub noise: Vec<f64>,
    /// `p̄_n`
    pub power: Vec<f64>,
    pub utilities: Vec<UtilitySpec>,
    /// Candidate BSs per user, strongest first.
    pub candidates: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(
        channels: ChannelSet,
        noise: Vec<f64>,
        power: Vec<f64>,
        utilities: Vec<UtilitySpec>,
    ) -> Self {
        assert_eq!(noise.len(), channels.num_bs());
        assert_eq!(power.len(), channels.num_users());
        assert_eq!(utilities.len(), channels.num_users());
        let candidates = (0..channels.num_users())
            .map(|n| candidate_bs(&channels, n, 0))
            .collect();
        Self {
            channels,
            noise,
            power,
            utilities,
            candidates,
        }
    }

    pub fn from_config(cfg: &ScenarioConfig, channels: ChannelSet) -> Self {
        let noise = (0..cfg.num_bs).map(|q| cfg.noise(q)).collect();
        let power = (0..cfg.num_users).map(|n| cfg.power(n)).collect();
        let utilities = (0..cfg.num_users).map(|n| cfg.utility(n)).collect();
        let mut net = Self::new(channels, noise, power, utilities);
        net.candidates = (0..cfg.num_users)
            .map(|n| candidate_bs(&net.channels, n, cfg.candidate_bs_limit))
            .collect();
        net
    }

    pub fn num_users(&self) -> usize {
        self.channels.num_users()
    }

    pub fn num_bs(&self) -> usize {
        self.channels.num_bs()
    }

    pub fn tx(&self, user: usize) -> usize {
        self.channels.get(0, user).ncols()
    }

    pub fn rx(&self, bs: usize) -> usize {
        self.channels.get(bs, 0).nrows()
    }

    pub fn channel(&self, bs: usize, user: usize) -> &ComplexMatrix {
        self.channels.get(bs, user)
    }
}

/// Builds the network for one trial from the config and its seeded substreams.
pub fn build_scenario(cfg: &ScenarioConfig, trial: u64) -> Result<(Topology, Network)> {
    cfg.validate()?;
    let top = generate_topology(cfg, &mut substream(cfg.seed, trial, Stream::Topology))?;
    let ch = generate_channels(&top, cfg, &mut substream(cfg.seed, trial, Stream::Channels));
    Ok((top, Network::from_config(cfg, ch)))
}
