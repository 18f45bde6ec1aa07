//! One round of each simulation protocol.
//!
//! A round takes the measurement settings, the shared hidden variables of that
//! round and the M-box's private randomness, and produces a
//! [`RoundTranscript`]: every message, box output, flip decision and output,
//! plus the resources spent.
//!
//! Both protocols share the same skeleton:
//!
//! 1. reduce to `a_z, b_z ≥ 0` (negating an output mirrors negating its
//!    setting's z-component in the target distribution);
//! 2. feed `a_z` and `b_z` to the M-box;
//! 3. Alice outputs `α₀ = sgn(û·λ̂₁)` and sends `c_a = sgn(û·λ̂₁) sgn(û·λ̂₂)`;
//! 4. Bob outputs `β₀ = sgn(v̂·(λ̂₁ + c_a λ̂₂))`;
//! 5. both apply correlated flips and undo the reduction.
//!
//! Steps 3–4 are the single-cbit kernel, [`tb_round`], whose λ-average is
//! `⟨α₀β₀⟩ = û·v̂`.
//!
//! The M-box yields `p = q` exactly when `a_z > b_z`, which is the opposite of
//! the pairing the direction sums need (the `â·B̂` term is required when
//! `b_z ≥ a_z`). Bob therefore reads his branch as `−q`, so the branch signs
//! used below agree exactly when `a_z ≤ b_z`. Flipping one party's reading of
//! its own box output is a local relabeling and costs nothing.

mod flip;
mod vectors;

pub use flip::{correlated_flip, exact_flip_distribution, FlipSpec};
pub use vectors::{build_u, build_u0, build_v, build_v0};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boxes::{mbox_call, send_cbit, MBoxOutcome, ResourceLedger, RoundBudget};
use crate::error::{Error, Result};
use crate::geometry::{sample_unit_sphere, CompletionKind, CompletionStrategy, Sign, UnitVector3, Vec3};
use crate::quantum::{b_prime, epr2_big_f, hat_a_p1, hat_a_p2, hat_b, EntanglementParam};

/// Flip probabilities this close to 1 make the flip-target direction irrelevant.
const CERTAIN_FLIP: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolId {
    /// Full quantum distribution, one cbit and one M-box.
    P1,
    /// Nonlocal part of the decomposition, one cbit and one M-box.
    P2,
    /// The single-cbit kernel on the maximally entangled member of the family.
    Tb,
}

impl ProtocolId {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolId::P1 => "p1",
            ProtocolId::P2 => "p2",
            ProtocolId::Tb => "tb",
        }
    }

    pub fn budget(self) -> RoundBudget {
        match self {
            ProtocolId::P1 | ProtocolId::P2 => RoundBudget::CBIT_AND_MBOX,
            ProtocolId::Tb => RoundBudget::CBIT_ONLY,
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p1" => Ok(ProtocolId::P1),
            "p2" => Ok(ProtocolId::P2),
            "tb" => Ok(ProtocolId::Tb),
            other => Err(Error::InvalidInput(format!(
                "unknown protocol {other:?} (expected p1, p2 or tb)"
            ))),
        }
    }
}

/// The hidden variables of one round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharedRandomness {
    pub lambda1: UnitVector3,
    pub lambda2: UnitVector3,
    /// μ̂₁…μ̂₇; the first protocol reads μ̂₁…μ̂₅.
    pub mu: [UnitVector3; 7],
    /// Coupling uniform for the correlated flips, in `[0, 1)`.
    pub flip_r: f64,
    /// Extra completion signs for Alice and Bob (`ortho-sign` only).
    pub extra_signs: [Sign; 2],
}

impl SharedRandomness {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let lambda1 = sample_unit_sphere(rng);
        let lambda2 = sample_unit_sphere(rng);
        let mu = std::array::from_fn(|_| sample_unit_sphere(rng));
        let flip_r = rng.random::<f64>();
        let extra_signs = std::array::from_fn(|_| {
            if rng.random::<bool>() {
                Sign::Plus
            } else {
                Sign::Minus
            }
        });
        Self {
            lambda1,
            lambda2,
            mu,
            flip_r,
            extra_signs,
        }
    }

    /// A bundle whose μ̂ᵢ are `±ẑ`, realizing the given hemisphere signs.
    /// λ̂ and `flip_r` are placeholders.
    pub fn from_signs(mu_signs: [Sign; 7], extra_signs: [Sign; 2]) -> Self {
        Self {
            lambda1: UnitVector3::Z,
            lambda2: UnitVector3::X,
            mu: mu_signs.map(|s| UnitVector3::Z * s),
            flip_r: 0.0,
            extra_signs,
        }
    }

    /// `sgn(ẑ·μ̂ᵢ)` for the 1-based index `i`.
    #[inline]
    pub fn mu_sign(&self, i: usize) -> Sign {
        Sign::of(self.mu[i - 1].z())
    }
}

/// Everything that happened in one round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub protocol: ProtocolId,
    pub gamma: f64,
    pub a: UnitVector3,
    pub b: UnitVector3,
    pub completion: CompletionKind,
    /// Signs that mapped the settings into `a_z, b_z ≥ 0`.
    pub reduction: [Sign; 2],
    pub mbox: Option<MBoxOutcome>,
    /// Branch signs `(p, q)` selecting Alice's and Bob's direction sums.
    pub branch: Option<[Sign; 2]>,
    /// For the second protocol: whether each party's setting lies in the slice.
    pub in_slice: Option<[bool; 2]>,
    pub cbit: Sign,
    /// `(α₀, β₀)` in the reduced frame, before flipping.
    pub pre_flip: [Sign; 2],
    pub flip: FlipSpec,
    pub flipped: [bool; 2],
    /// Final `(α, β)` for the original settings.
    pub outputs: [Sign; 2],
    pub ledger: ResourceLedger,
}

impl RoundTranscript {
    pub fn budget_ok(&self) -> bool {
        self.ledger.matches(self.protocol.budget())
    }

    pub fn same_experiment(&self, other: &RoundTranscript) -> bool {
        self.protocol == other.protocol
            && self.gamma == other.gamma
            && self.a == other.a
            && self.b == other.b
            && self.completion == other.completion
    }
}

/// The single-cbit kernel. Returns `(α, β, c)` with
/// `α = sgn(u·λ̂₁)`, `c = sgn(u·λ̂₁) sgn(u·λ̂₂)`, `β = sgn(v·(λ̂₁ + c λ̂₂))`.
/// Averaged over uniform λ̂₁, λ̂₂, `⟨αβ⟩ = u·v` and both marginals vanish.
#[inline]
pub fn tb_round(
    u: UnitVector3,
    v: UnitVector3,
    lambda1: UnitVector3,
    lambda2: UnitVector3,
) -> (Sign, Sign, Sign) {
    let alpha = Sign::of(u.dot(lambda1));
    let cbit = alpha * Sign::of(u.dot(lambda2));
    let beta = Sign::of(v.as_vec().dot(lambda1.as_vec() + lambda2.as_vec() * cbit.value()));
    (alpha, beta, cbit)
}

/// Maps settings into the upper hemisphere: `a′ = sgn(a_z) â`, likewise for `b̂`.
pub fn symmetrize(a: UnitVector3, b: UnitVector3) -> (UnitVector3, UnitVector3, Sign, Sign) {
    let sa = Sign::of(a.z());
    let sb = Sign::of(b.z());
    (a * sa, b * sb, sa, sb)
}

/// Clamps a reduced z-component into the M-box domain.
fn box_input(z: f64) -> f64 {
    z.clamp(0.0, 1.0)
}

struct Kernel {
    alpha0: Sign,
    beta0: Sign,
    cbit: Sign,
}

/// Alice's output and message from `u`, Bob's output from `v`.
fn run_kernel(
    u: UnitVector3,
    v: UnitVector3,
    shared: &SharedRandomness,
    ledger: &mut ResourceLedger,
) -> Result<Kernel> {
    let alpha0 = Sign::of(u.dot(shared.lambda1));
    let message = alpha0 * Sign::of(u.dot(shared.lambda2));
    let cbit = send_cbit(message, ledger)?;
    let mixed = shared.lambda1.as_vec() + shared.lambda2.as_vec() * cbit.value();
    let beta0 = Sign::of(v.as_vec().dot(mixed));
    Ok(Kernel {
        alpha0,
        beta0,
        cbit,
    })
}

struct Finish {
    pre_flip: [Sign; 2],
    flip: FlipSpec,
    flipped: [bool; 2],
    outputs: [Sign; 2],
}

fn finish(k: &Kernel, flip: FlipSpec, r: f64, reduction: [Sign; 2]) -> Finish {
    let (alpha, beta) = correlated_flip(k.alpha0, k.beta0, flip, r);
    Finish {
        pre_flip: [k.alpha0, k.beta0],
        flip,
        flipped: [alpha != k.alpha0, beta != k.beta0],
        outputs: [alpha * reduction[0], beta * reduction[1]],
    }
}

/// Kernel directions, flip probabilities and slice flags for one round, given
/// reduced settings (`a_z, b_z ≥ 0`) and the branch signs `(p, q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundPlan {
    pub u: UnitVector3,
    pub v: UnitVector3,
    pub flip: FlipSpec,
    pub in_slice: Option<[bool; 2]>,
}

/// Builds [`RoundPlan`] for either box-assisted protocol. Everything here is
/// local: Alice's half reads only `ra` and `p`, Bob's only `rb` and `q`.
pub fn plan_round(
    protocol: ProtocolId,
    param: &EntanglementParam,
    ra: UnitVector3,
    rb: UnitVector3,
    branch: [Sign; 2],
    shared: &SharedRandomness,
    strategy: CompletionStrategy,
) -> Result<RoundPlan> {
    let [p, q] = branch;
    match protocol {
        ProtocolId::P1 => {
            let c = param.c();
            let flip = FlipSpec::new(c * ra.z(), c * rb.z())?;
            // A certain flip makes α (β) constant, so the direction only has
            // to be some unit vector; the map itself may be singular there.
            let u = if flip.f_a >= CERTAIN_FLIP {
                ra
            } else {
                let hat = hat_a_p1(param, ra).unwrap_or(ra);
                build_u(ra, hat, p, shared, strategy)
            };
            let v = if flip.f_b >= CERTAIN_FLIP {
                rb
            } else {
                let hat = hat_b(param, rb).unwrap_or(rb);
                build_v(rb, hat, q, shared, strategy)
            };
            Ok(RoundPlan {
                u,
                v,
                flip,
                in_slice: None,
            })
        }
        ProtocolId::P2 => {
            if param.is_separable() {
                return Err(Error::InvalidInput("protocol 2 requires gamma > 0".into()));
            }
            let alice_inside = param.in_slice(ra.z());
            let bob_inside = param.in_slice(rb.z());
            let rb_prime = b_prime(rb);
            let u = if alice_inside {
                build_u0(ra, shared, strategy)
            } else {
                build_u(ra, hat_a_p2(param, ra)?, p, shared, strategy)
            };
            let v = if bob_inside {
                build_v0(rb_prime, shared, strategy)
            } else {
                build_v(rb_prime, hat_b(param, rb)?, q, shared, strategy)
            };
            let flip = FlipSpec::new(epr2_big_f(param, ra.z()), epr2_big_f(param, rb.z()))?;
            Ok(RoundPlan {
                u,
                v,
                flip,
                in_slice: Some([alice_inside, bob_inside]),
            })
        }
        ProtocolId::Tb => Err(Error::InvalidInput(
            "the bare kernel has no branch-dependent directions".into(),
        )),
    }
}

fn box_round<R: Rng + ?Sized>(
    protocol: ProtocolId,
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    shared: &SharedRandomness,
    strategy: CompletionStrategy,
    box_rng: &mut R,
) -> Result<RoundTranscript> {
    if protocol == ProtocolId::P2 && param.is_separable() {
        return Err(Error::InvalidInput("protocol 2 requires gamma > 0".into()));
    }
    let (ra, rb, sa, sb) = symmetrize(a, b);
    let mut ledger = ResourceLedger::new();
    let mbox = mbox_call(box_input(ra.z()), box_input(rb.z()), box_rng, &mut ledger)?;
    let branch = [mbox.p, -mbox.q];
    let plan = plan_round(protocol, param, ra, rb, branch, shared, strategy)?;
    let kernel = run_kernel(plan.u, plan.v, shared, &mut ledger)?;
    let done = finish(&kernel, plan.flip, shared.flip_r, [sa, sb]);
    ledger.check(RoundBudget::CBIT_AND_MBOX)?;
    Ok(RoundTranscript {
        protocol,
        gamma: param.gamma(),
        a,
        b,
        completion: strategy.kind,
        reduction: [sa, sb],
        mbox: Some(mbox),
        branch: Some(branch),
        in_slice: plan.in_slice,
        cbit: kernel.cbit,
        pre_flip: done.pre_flip,
        flip: done.flip,
        flipped: done.flipped,
        outputs: done.outputs,
        ledger,
    })
}

/// The first protocol: simulates the full distribution `P_QM`.
///
/// `box_rng` is the M-box's private randomness.
pub fn protocol1_round<R: Rng + ?Sized>(
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    shared: &SharedRandomness,
    strategy: CompletionStrategy,
    box_rng: &mut R,
) -> Result<RoundTranscript> {
    box_round(ProtocolId::P1, param, a, b, shared, strategy, box_rng)
}

/// The second protocol: simulates the nonlocal part `P_NL`.
pub fn protocol2_round<R: Rng + ?Sized>(
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    shared: &SharedRandomness,
    strategy: CompletionStrategy,
    box_rng: &mut R,
) -> Result<RoundTranscript> {
    box_round(ProtocolId::P2, param, a, b, shared, strategy, box_rng)
}

/// Bob's kernel direction for the maximally entangled state: with it,
/// `⟨αβ⟩ = â·(b_x, −b_y, b_z)`, the correlation at γ = π/4.
pub fn tb_partner(b: UnitVector3) -> UnitVector3 {
    UnitVector3::from_unit_unchecked(Vec3::new(b.x(), -b.y(), b.z()))
}

/// The bare single-cbit kernel on `(â, tb_partner(b̂))`: no box, no flips.
pub fn tb_protocol_round(
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    shared: &SharedRandomness,
    strategy: CompletionStrategy,
) -> Result<RoundTranscript> {
    let mut ledger = ResourceLedger::new();
    let kernel = run_kernel(a, tb_partner(b), shared, &mut ledger)?;
    ledger.check(RoundBudget::CBIT_ONLY)?;
    let outputs = [kernel.alpha0, kernel.beta0];
    Ok(RoundTranscript {
        protocol: ProtocolId::Tb,
        gamma: param.gamma(),
        a,
        b,
        completion: strategy.kind,
        reduction: [Sign::Plus, Sign::Plus],
        mbox: None,
        branch: None,
        in_slice: None,
        cbit: kernel.cbit,
        pre_flip: outputs,
        flip: FlipSpec::NONE,
        flipped: [false, false],
        outputs,
        ledger,
    })
}

/// Dispatches one round of `protocol`.
pub fn run_round<R: Rng + ?Sized>(
    protocol: ProtocolId,
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    shared: &SharedRandomness,
    strategy: CompletionStrategy,
    box_rng: &mut R,
) -> Result<RoundTranscript> {
    match protocol {
        ProtocolId::P1 => protocol1_round(param, a, b, shared, strategy, box_rng),
        ProtocolId::P2 => protocol2_round(param, a, b, shared, strategy, box_rng),
        ProtocolId::Tb => tb_protocol_round(param, a, b, shared, strategy),
    }
}
