//! Exact averages over the μ̂ signs.
//!
//! The directions `û`, `v̂` depend on each μ̂ᵢ only through `sgn(ẑ·μ̂ᵢ)`, and
//! the λ-average of the kernel is `û·v̂`. The pre-flip correlation for a fixed
//! box branch is therefore a finite average over sign tuples, which this
//! module enumerates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_unit_sphere, CompletionKind, CompletionStrategy, Sign, UnitVector3};
use crate::protocols::{plan_round, symmetrize, ProtocolId, SharedRandomness};
use crate::quantum::{b_prime, hat_a_p1, hat_a_p2, hat_b, EntanglementParam};
use crate::verify::compensated_sum;

/// How many μ̂ signs a protocol reads.
pub fn mu_count(protocol: ProtocolId) -> Result<usize> {
    match protocol {
        ProtocolId::P1 => Ok(5),
        ProtocolId::P2 => Ok(7),
        ProtocolId::Tb => Err(Error::InvalidInput("the bare kernel reads no μ̂".into())),
    }
}

fn sign_tuple<const N: usize>(bits: u32) -> [Sign; N] {
    std::array::from_fn(|i| if bits >> i & 1 == 1 { Sign::Minus } else { Sign::Plus })
}

/// Exact `⟨α₀β₀⟩` for the branch `(p, q)` on reduced settings.
pub fn exact_mu_average(
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    strategy: CompletionStrategy,
    p: Sign,
    q: Sign,
    protocol: ProtocolId,
) -> Result<f64> {
    if a.z() < 0.0 || b.z() < 0.0 {
        return Err(Error::InvalidInput(
            "settings must be symmetrized (a_z, b_z >= 0)".into(),
        ));
    }
    let n_mu = mu_count(protocol)?;
    let n_extra = if strategy.kind == CompletionKind::OrthoSign { 2 } else { 0 };
    let mut terms = Vec::with_capacity(1 << (n_mu + n_extra));
    for mu_bits in 0..1u32 << n_mu {
        for extra_bits in 0..1u32 << n_extra {
            let shared = SharedRandomness::from_signs(sign_tuple(mu_bits), sign_tuple(extra_bits));
            let plan = plan_round(protocol, param, a, b, [p, q], &shared, strategy)?;
            terms.push(plan.u.dot(plan.v));
        }
    }
    Ok(compensated_sum(terms.iter().copied()) / terms.len() as f64)
}

/// The closed-form branch correlation the protocol is designed to produce:
/// `â·B̂` when `pq = +1` and `Â·b̂` when `pq = −1` for the first protocol; for
/// the second, `â·B̂′`-style terms per slice case (see [`predicted_case`]).
pub fn predicted_correlation(
    protocol: ProtocolId,
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    pq: Sign,
) -> Result<f64> {
    match protocol {
        ProtocolId::P1 => match pq {
            Sign::Plus => Ok(a.dot(hat_b(param, b)?)),
            Sign::Minus => Ok(hat_a_p1(param, a)?.dot(b)),
        },
        ProtocolId::P2 => {
            let case = predicted_case(param, a, b, pq);
            let bp = b_prime(b);
            match case {
                SliceCase::BothInside => Ok(a.dot(bp)),
                SliceCase::AliceInside | SliceCase::BothOutsidePlus => Ok(a.dot(hat_b(param, b)?)),
                SliceCase::BobInside | SliceCase::BothOutsideMinus => {
                    Ok(hat_a_p2(param, a)?.dot(bp))
                }
            }
        }
        ProtocolId::Tb => Err(Error::InvalidInput("the bare kernel has no branches".into())),
    }
}

/// Which product the second protocol's design predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceCase {
    BothInside,
    AliceInside,
    BobInside,
    BothOutsidePlus,
    BothOutsideMinus,
}

pub fn predicted_case(param: &EntanglementParam, a: UnitVector3, b: UnitVector3, pq: Sign) -> SliceCase {
    match (param.in_slice(a.z()), param.in_slice(b.z()), pq) {
        (true, true, _) => SliceCase::BothInside,
        (true, false, _) => SliceCase::AliceInside,
        (false, true, _) => SliceCase::BobInside,
        (false, false, Sign::Plus) => SliceCase::BothOutsidePlus,
        (false, false, Sign::Minus) => SliceCase::BothOutsideMinus,
    }
}

/// Worst disagreement between [`exact_mu_average`] and
/// [`predicted_correlation`] over a batch of settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub protocol: ProtocolId,
    pub gamma: f64,
    pub completion: CompletionKind,
    pub settings: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub worst: WorstCase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub a: UnitVector3,
    pub b: UnitVector3,
    pub p: Sign,
    pub q: Sign,
    pub oracle: f64,
    pub prediction: f64,
}

/// Residuals for `n_settings` random reduced settings and all four branch
/// pairs, deterministic in `seed`.
pub fn residual_row(
    protocol: ProtocolId,
    param: &EntanglementParam,
    kind: CompletionKind,
    n_settings: usize,
    seed: u64,
) -> Result<ResidualRow> {
    let strategy = CompletionStrategy::from(kind);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residuals = Vec::with_capacity(4 * n_settings);
    let mut worst: Option<(f64, WorstCase)> = None;
    for _ in 0..n_settings {
        let (a, b, _, _) = symmetrize(sample_unit_sphere(&mut rng), sample_unit_sphere(&mut rng));
        for p in Sign::BOTH {
            for q in Sign::BOTH {
                let oracle = exact_mu_average(param, a, b, strategy, p, q, protocol)?;
                let prediction = predicted_correlation(protocol, param, a, b, p * q)?;
                let r = (oracle - prediction).abs();
                residuals.push(r);
                if worst.as_ref().map_or(true, |(w, _)| r > *w) {
                    worst = Some((r, WorstCase { a, b, p, q, oracle, prediction }));
                }
            }
        }
    }
    let (max_residual, worst) = worst.ok_or_else(|| Error::InvalidInput("no settings".into()))?;
    Ok(ResidualRow {
        protocol,
        gamma: param.gamma(),
        completion: kind,
        settings: n_settings,
        max_residual,
        mean_residual: compensated_sum(residuals.iter().copied()) / residuals.len() as f64,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn unit(x: f64, y: f64, z: f64) -> UnitVector3 {
        UnitVector3::new(x, y, z).unwrap()
    }

    #[test]
    fn maximal_state_on_z() {
        // â = Â = B̂ = ẑ and p = q = +1: û ∝ (σ₁ + σ₂) ẑ and v̂ ∝ (σ₃ + σ₁) ẑ,
        // each falling back to ẑ when its two signs cancel. σ₄, σ₅ are unused.
        let p = EntanglementParam::new(FRAC_PI_4).unwrap();
        let z = UnitVector3::Z;
        let strat = CompletionKind::Normalize.into();
        let v = exact_mu_average(&p, z, z, strat, Sign::Plus, Sign::Plus, ProtocolId::P1).unwrap();
        let mut sum = 0.0;
        for bits in 0..8u32 {
            let s: [f64; 3] = std::array::from_fn(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 });
            let u = if s[0] + s[1] == 0.0 { 1.0 } else { s[0] };
            let w = if s[2] + s[0] == 0.0 { 1.0 } else { s[0] };
            sum += u * w;
        }
        assert_eq!(v, sum / 8.0);
        assert_eq!(predicted_correlation(ProtocolId::P1, &p, z, z, Sign::Plus).unwrap(), 1.0);
    }

    #[test]
    fn in_slice_majority_pairs_share_one_sign() {
        // û₀ = maj(σ₁,σ₄,σ₆) â and v̂₀ = maj(σ₂,σ₃,σ₆) b̂′ share only σ₆, and a
        // three-way majority agrees with each input with correlation ½.
        let p = EntanglementParam::new(FRAC_PI_8).unwrap();
        let a = unit(0.6, 0.8, 0.0);
        let b = unit(0.8, 0.6, 0.0);
        for kind in CompletionKind::ALL {
            let v = exact_mu_average(&p, a, b, kind.into(), Sign::Plus, Sign::Plus, ProtocolId::P2).unwrap();
            assert!((v - 0.25 * a.dot(b_prime(b))).abs() <= 1e-15, "{kind:?}: {v}");
        }
    }

    #[test]
    fn rejects_unreduced_settings() {
        let p = EntanglementParam::new(0.3).unwrap();
        let r = exact_mu_average(&p, -UnitVector3::Z, UnitVector3::Z, CompletionKind::Ortho.into(), Sign::Plus, Sign::Plus, ProtocolId::P1);
        assert!(r.is_err());
    }

    #[test]
    fn ortho_sign_enumerates_extra_signs() {
        // Results for ortho-sign are averages over the ortho results with
        // reflected orthogonal parts; all three are finite and in [−1, 1].
        let p = EntanglementParam::new(0.4).unwrap();
        let a = unit(0.48, 0.6, 0.64);
        let b = unit(-0.6, 0.0, 0.8);
        for kind in CompletionKind::ALL {
            for protocol in [ProtocolId::P1, ProtocolId::P2] {
                for s in Sign::BOTH {
                    let v = exact_mu_average(&p, a, b, kind.into(), s, -s, protocol).unwrap();
                    assert!(v.abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn residual_rows_are_reproducible() {
        let p = EntanglementParam::new(FRAC_PI_8).unwrap();
        let r1 = residual_row(ProtocolId::P1, &p, CompletionKind::Ortho, 20, 5).unwrap();
        let r2 = residual_row(ProtocolId::P1, &p, CompletionKind::Ortho, 20, 5).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.max_residual >= r1.mean_residual);
    }
}
