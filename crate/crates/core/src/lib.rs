//! Classical simulation of the partially entangled two-qubit states
//! `cos γ|00⟩ + sin γ|11⟩` with shared randomness, one bit of communication
//! and one use of an M-box, plus the machinery that checks every step.
//!
//! ```
//! use mboxsim::{p_qm, EntanglementParam, UnitVector3};
//!
//! let param = EntanglementParam::new(std::f64::consts::FRAC_PI_4).unwrap();
//! let d = p_qm(&param, UnitVector3::Z, UnitVector3::Z);
//! assert_eq!(d.to_array(), [0.5, 0.0, 0.0, 0.5]);
//! ```

pub mod boxes;
pub mod error;
pub mod geometry;
pub mod protocols;
pub mod quantum;
pub mod runtime;
pub mod suites;
pub mod verify;

pub use boxes::{mbox_call, send_cbit, MBoxOutcome, ResourceLedger, RoundBudget};
pub use error::{Error, Result};
pub use geometry::{
    complete_to_unit, sample_unit_sphere, sgn, spherical_grid, CompletionKind, CompletionStrategy,
    Sign, UnitVector3, Vec3,
};
pub use protocols::{
    correlated_flip, protocol1_round, protocol2_round, run_round, symmetrize, tb_round, FlipSpec,
    ProtocolId, RoundTranscript, SharedRandomness,
};
pub use quantum::{
    b_prime, chsh_value, correlation, epr2_big_f, epr2_f, epr2_g, hat_a_p1, hat_a_p2, hat_b, p_nl,
    p_qm, reconstruct_local, EntanglementParam, Epr2Components, JointDist,
};
pub use runtime::{run_experiment, ExperimentConfig, SettingsSource};
pub use verify::{compare, epr2_suite, estimate_joint, exact_mu_average, quadrature_kernel, ComparisonReport};

/// Book chapters compiled as doc-tests so their snippets cannot drift.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/targets.md")]
    mod targets {}
    #[doc = include_str!("../../../book/src/mbox.md")]
    mod mbox {}
    #[doc = include_str!("../../../book/src/kernel.md")]
    mod kernel {}
    #[doc = include_str!("../../../book/src/protocols.md")]
    mod protocols {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
