//! Sample estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Sign;
use crate::protocols::RoundTranscript;
use crate::quantum::JointDist;

/// Transcripts needed before [`estimate_joint`] will report errors.
pub const MIN_TRANSCRIPTS: usize = 1000;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A sample mean with its standard error `sd / √n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl EstimateWithError {
    /// From `n` samples in {−1, +1} summing to `sum`.
    pub fn from_pm1(n: u64, sum: i64) -> Option<Self> {
        if n < 2 {
            return None;
        }
        let nf = n as f64;
        let mean = sum as f64 / nf;
        // Σx² = n for ±1 samples.
        let var = ((nf - sum as f64 * mean) / (nf - 1.0)).max(0.0);
        Some(Self {
            mean,
            stderr: (var / nf).sqrt(),
            n,
        })
    }

    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let n = samples.len();
        if n < 2 {
            return None;
        }
        let nf = n as f64;
        let mean = compensated_sum(samples.iter().copied()) / nf;
        let ss = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
        Some(Self {
            mean,
            stderr: (ss / (nf - 1.0) / nf).sqrt(),
            n: n as u64,
        })
    }

    /// `|mean − target| / stderr`; zero when both numerator and stderr vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY
        } else {
            diff / self.stderr
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z_score(target) <= sigmas
    }
}

/// Outcome counts in the order of [`crate::quantum::OUTCOMES`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCounts(pub [u64; 4]);

impl JointCounts {
    pub fn add(&mut self, alpha: Sign, beta: Sign) {
        self.0[outcome_index(alpha, beta)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn merge(&mut self, other: &JointCounts) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

pub fn outcome_index(alpha: Sign, beta: Sign) -> usize {
    match (alpha, beta) {
        (Sign::Plus, Sign::Plus) => 0,
        (Sign::Plus, Sign::Minus) => 1,
        (Sign::Minus, Sign::Plus) => 2,
        (Sign::Minus, Sign::Minus) => 3,
    }
}

/// Empirical frequencies with multinomial standard errors `√(p̂(1 − p̂)/n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointEstimate {
    pub dist: JointDist,
    pub stderr: [f64; 4],
    pub n: u64,
}

impl JointEstimate {
    pub fn from_counts(counts: &JointCounts) -> Result<Self> {
        let n = counts.total();
        if n == 0 {
            return Err(Error::InvalidInput("no samples".into()));
        }
        let nf = n as f64;
        let freq = counts.0.map(|k| k as f64 / nf);
        Ok(Self {
            dist: JointDist::from_array(freq),
            stderr: freq.map(|p| (p * (1.0 - p) / nf).sqrt()),
            n,
        })
    }
}

/// Empirical joint distribution of the final outputs of `transcripts`, which
/// must all come from the same protocol, settings, γ and completion rule.
pub fn estimate_joint(transcripts: &[RoundTranscript]) -> Result<JointEstimate> {
    let first = transcripts
        .first()
        .ok_or_else(|| Error::InvalidInput("no transcripts".into()))?;
    if transcripts.len() < MIN_TRANSCRIPTS {
        return Err(Error::InvalidInput(format!(
            "{} transcripts, need at least {MIN_TRANSCRIPTS}",
            transcripts.len()
        )));
    }
    let mut counts = JointCounts::default();
    for t in transcripts {
        if !t.same_experiment(first) {
            return Err(Error::MixedSettings);
        }
        counts.add(t.outputs[0], t.outputs[1]);
    }
    JointEstimate::from_counts(&counts)
}
