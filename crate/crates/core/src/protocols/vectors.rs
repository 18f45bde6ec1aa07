//! The direction sums each party feeds into its sign functions.
//!
//! The μ̂ vectors enter only through `sgn(ẑ·μ̂ᵢ)`. Alice's and Bob's sums share
//! some of these signs, and the pairing is what lets the correlation survive
//! the average over μ̂:
//!
//! ```text
//! û₁ = σ₁ â + σ₂ Â + a⃗₁          v̂₁ = σ₃ b̂ + σ₁ B̂ + σ₅ b⃗₁
//! û₂ = σ₄ â + σ₃ Â + a⃗₂          v̂₂ = σ₂ b̂ + σ₄ B̂ + σ₅ b⃗₂
//! û₀ = (σ₁ + σ₄ + σ₆) â + a⃗₀     v̂₀ = (σ₂ + σ₃ + σ₆) b̂′ + σ₇ b⃗₀
//! ```
//!
//! with `σᵢ = sgn(ẑ·μ̂ᵢ)`. The completion vectors `a⃗`, `b⃗` come from a
//! [`CompletionStrategy`]. Bob's σ₅ / σ₇ multiply only the part of his
//! completion orthogonal to the sum; a collinear completion (plain
//! normalization) cannot change sign without leaving the sphere, so there
//! these signs have no effect.

use crate::geometry::{completion_parts, CompletionStrategy, Sign, UnitVector3};
use crate::protocols::SharedRandomness;

/// `û₁` when `p = +1`, `û₂` when `p = −1`. `hat_a` is Alice's flip-target
/// direction for the protocol in use; `â` is the fallback for a vanishing sum.
pub fn build_u(
    a: UnitVector3,
    hat_a: UnitVector3,
    p: Sign,
    shared: &SharedRandomness,
    strategy: CompletionStrategy,
) -> UnitVector3 {
    let (on_a, on_hat) = match p {
        Sign::Plus => (shared.mu_sign(1), shared.mu_sign(2)),
        Sign::Minus => (shared.mu_sign(4), shared.mu_sign(3)),
    };
    let w = a.as_vec() * on_a.value() + hat_a.as_vec() * on_hat.value();
    completion_parts(w, strategy, a, shared.extra_signs[0]).unit()
}

/// `v̂₁` when `q = +1`, `v̂₂` when `q = −1`. `b_main` is `b̂` in the first
/// protocol and `b̂′` in the second; it is also the fallback.
pub fn build_v(
    b_main: UnitVector3,
    hat_b: UnitVector3,
    q: Sign,
    shared: &SharedRandomness,
    strategy: CompletionStrategy,
) -> UnitVector3 {
    let (on_b, on_hat) = match q {
        Sign::Plus => (shared.mu_sign(3), shared.mu_sign(1)),
        Sign::Minus => (shared.mu_sign(2), shared.mu_sign(4)),
    };
    let w = b_main.as_vec() * on_b.value() + hat_b.as_vec() * on_hat.value();
    completion_parts(w, strategy, b_main, shared.extra_signs[1]).with_orth_sign(shared.mu_sign(5))
}

/// Alice's slice-side direction `û₀`.
pub fn build_u0(
    a: UnitVector3,
    shared: &SharedRandomness,
    strategy: CompletionStrategy,
) -> UnitVector3 {
    let k = majority_weight([shared.mu_sign(1), shared.mu_sign(4), shared.mu_sign(6)]);
    completion_parts(a.as_vec() * k, strategy, a, shared.extra_signs[0]).unit()
}

/// Bob's slice-side direction `v̂₀`, built on `b̂′`.
pub fn build_v0(
    b_prime: UnitVector3,
    shared: &SharedRandomness,
    strategy: CompletionStrategy,
) -> UnitVector3 {
    let k = majority_weight([shared.mu_sign(2), shared.mu_sign(3), shared.mu_sign(6)]);
    completion_parts(b_prime.as_vec() * k, strategy, b_prime, shared.extra_signs[1])
        .with_orth_sign(shared.mu_sign(7))
}

/// Sum of three signs, one of −3, −1, 1, 3.
fn majority_weight(signs: [Sign; 3]) -> f64 {
    signs.iter().map(|s| s.value()).sum()
}
