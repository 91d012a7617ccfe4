//! Per-user rate utilities and their derivatives.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Guard for utilities that diverge at zero rate (nats).
pub const DEFAULT_RATE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UtilityKind {
    /// `w·R`
    WeightedSumRate,
    /// `ln R`
    ProportionalFair,
    /// `-1/R`
    HarmonicMean,
}

impl UtilityKind {
    pub const ALL: [UtilityKind; 3] = [
        UtilityKind::WeightedSumRate,
        UtilityKind::ProportionalFair,
        UtilityKind::HarmonicMean,
    ];
}

impl fmt::Display for UtilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UtilityKind::WeightedSumRate => "wsr",
            UtilityKind::ProportionalFair => "proportional_fair",
            UtilityKind::HarmonicMean => "harmonic_mean",
        })
    }
}

impl FromStr for UtilityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "wsr" => Ok(UtilityKind::WeightedSumRate),
            "proportional_fair" | "pf" => Ok(UtilityKind::ProportionalFair),
            "harmonic_mean" => Ok(UtilityKind::HarmonicMean),
            other => Err(Error::InvalidConfig(format!("unknown utility kind `{other}`"))),
        }
    }
}

/// Utility of one user as a function of its rate in nats.
///
/// The weight only enters the weighted-sum-rate kind; proportional fair and
/// harmonic mean are unweighted, matching their usual definitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilitySpec {
    pub kind: UtilityKind,
    pub weight: f64,
    pub rate_floor: f64,
}

impl UtilitySpec {
    pub fn new(kind: UtilityKind, weight: f64) -> Self {
        Self {
            kind,
            weight,
            rate_floor: DEFAULT_RATE_FLOOR,
        }
    }

    pub fn wsr(weight: f64) -> Self {
        Self::new(UtilityKind::WeightedSumRate, weight)
    }

    pub fn proportional_fair() -> Self {
        Self::new(UtilityKind::ProportionalFair, 1.0)
    }

    pub fn harmonic_mean() -> Self {
        Self::new(UtilityKind::HarmonicMean, 1.0)
    }

    pub fn eval(&self, rate: f64) -> f64 {
        match self.kind {
            UtilityKind::WeightedSumRate => self.weight * rate,
            UtilityKind::ProportionalFair => rate.max(self.rate_floor).ln(),
            UtilityKind::HarmonicMean => -1.0 / rate.max(self.rate_floor),
        }
    }

    /// Derivative of [`eval`](Self::eval) with respect to the rate.
    pub fn alpha(&self, rate: f64) -> f64 {
        match self.kind {
            UtilityKind::WeightedSumRate => self.weight,
            UtilityKind::ProportionalFair => 1.0 / rate.max(self.rate_floor),
            UtilityKind::HarmonicMean => {
                let r = rate.max(self.rate_floor);
                1.0 / (r * r)
            }
        }
    }
}
