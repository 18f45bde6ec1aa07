//! Correlated local flips.
//!
//! Each party turns an output of −1 into +1 with its own probability, and both
//! compare against the same shared uniform `r`. The coupling is what makes the
//! post-flip correlation affine in the pre-flip one: for `f_b ≥ f_a`,
//! `⟨αβ⟩ = f_a + (1 − f_b) C₀`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Sign;
use crate::quantum::{JointDist, OUTCOMES};

/// Flip probabilities for Alice and Bob.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipSpec {
    pub f_a: f64,
    pub f_b: f64,
}

impl FlipSpec {
    pub const NONE: FlipSpec = FlipSpec { f_a: 0.0, f_b: 0.0 };

    pub fn new(f_a: f64, f_b: f64) -> Result<Self> {
        for f in [f_a, f_b] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidInput(format!(
                    "flip probability {f} outside [0, 1]"
                )));
            }
        }
        Ok(Self { f_a, f_b })
    }
}

pub fn correlated_flip(alpha0: Sign, beta0: Sign, spec: FlipSpec, r: f64) -> (Sign, Sign) {
    let alpha = if alpha0 == Sign::Minus && r < spec.f_a {
        Sign::Plus
    } else {
        alpha0
    };
    let beta = if beta0 == Sign::Minus && r < spec.f_b {
        Sign::Plus
    } else {
        beta0
    };
    (alpha, beta)
}

/// Exact post-flip distribution when the pre-flip outputs follow
/// `¼ (1 + α₀β₀ C₀)`.
///
/// `r` only matters through which flip thresholds it lies below, so the unit
/// interval splits into at most three bands and each band is represented by
/// its lower end. Every (band, pre-flip outcome) cell is pushed through
/// [`correlated_flip`] and weighted by its probability; no sampling.
pub fn exact_flip_distribution(c0: f64, spec: FlipSpec) -> JointDist {
    let lo = spec.f_a.min(spec.f_b);
    let hi = spec.f_a.max(spec.f_b);
    let bands = [(0.0, lo), (lo, hi), (hi, 1.0)];

    let mut out = [0.0; 4];
    for (start, end) in bands {
        let width = end - start;
        if width <= 0.0 {
            continue;
        }
        for (a0, b0) in OUTCOMES {
            let p0 = 0.25 * (1.0 + (a0 * b0).value() * c0);
            let (a, b) = correlated_flip(a0, b0, spec, start);
            let slot = OUTCOMES.iter().position(|&o| o == (a, b)).unwrap();
            out[slot] += width * p0;
        }
    }
    JointDist::from_array(out)
}
