//! Closed-form moments of the correlated flip.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::protocols::{exact_flip_distribution, FlipSpec};

/// Post-flip moments `(⟨α⟩, ⟨β⟩, ⟨αβ⟩)` from unbiased pre-flip outputs with
/// correlation `c0`. The larger flip probability sets the surviving weight
/// `1 − max(f_a, f_b)` and the smaller one the always-agreeing mass.
pub fn flip_moments(c0: f64, spec: FlipSpec) -> (f64, f64, f64) {
    let lo = spec.f_a.min(spec.f_b);
    let hi = spec.f_a.max(spec.f_b);
    (spec.f_a, spec.f_b, lo + (1.0 - hi) * c0)
}

/// Largest deviation between [`exact_flip_distribution`] and
/// [`flip_moments`] over `samples` random `(C₀, f_a, f_b)`, including the
/// normalization of the enumerated distribution.
pub fn flip_algebra_residual(samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let c0 = rng.random_range(-1.0..=1.0);
        let spec = FlipSpec {
            f_a: rng.random::<f64>(),
            f_b: rng.random::<f64>(),
        };
        let d = exact_flip_distribution(c0, spec);
        let (ma, mb, corr) = flip_moments(c0, spec);
        worst = worst
            .max((d.mean_alpha() - ma).abs())
            .max((d.mean_beta() - mb).abs())
            .max((d.correlation() - corr).abs())
            .max((d.total() - 1.0).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_orderings() {
        // f_b ≥ f_a and the mirror case
        let (_, _, c) = flip_moments(0.5, FlipSpec { f_a: 0.2, f_b: 0.6 });
        assert!((c - (0.2 + 0.4 * 0.5)).abs() < 1e-16);
        let (_, _, c) = flip_moments(0.5, FlipSpec { f_a: 0.6, f_b: 0.2 });
        assert!((c - (0.2 + 0.4 * 0.5)).abs() < 1e-16);
    }

    #[test]
    fn enumeration_matches_closed_form() {
        assert!(flip_algebra_residual(1000, 11) <= 1e-15);
    }

    #[test]
    fn independent_flips_would_not() {
        // Independent coins give ⟨αβ⟩ with an f_a f_b cross term instead.
        let (fa, fb, c0) = (0.3, 0.5, 0.2);
        let independent = fa * fb + (1.0 - fa) * (1.0 - fb) * c0;
        let (_, _, coupled) = flip_moments(c0, FlipSpec { f_a: fa, f_b: fb });
        assert!((independent - coupled).abs() > 0.05);
    }
}
