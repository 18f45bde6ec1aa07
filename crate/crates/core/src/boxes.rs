//! The M-box and the per-round resource ledger.
//!
//! An M-box takes a real input from each party, `x` from Alice and `y` from
//! Bob, both in `[0, 1]`, and returns bits `m` to Alice and `n` to Bob with
//! `m ⊕ n = [x ≤ y]`. Each output alone is a fair coin, so the box cannot be
//! used to signal.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Sign;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MBoxOutcome {
    pub m: u8,
    pub n: u8,
    /// `2m − 1`.
    pub p: Sign,
    /// `2n − 1`.
    pub q: Sign,
}

impl MBoxOutcome {
    fn from_bits(m: u8, n: u8) -> Self {
        let to_sign = |bit| if bit == 1 { Sign::Plus } else { Sign::Minus };
        Self {
            m,
            n,
            p: to_sign(m),
            q: to_sign(n),
        }
    }

    pub fn xor(&self) -> u8 {
        self.m ^ self.n
    }
}

/// Resources consumed so far in one round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub cbits_a_to_b: u64,
    pub cbits_b_to_a: u64,
    pub mbox_calls: u64,
}

/// What a single round is allowed to spend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundBudget {
    pub cbits_a_to_b: u64,
    pub cbits_b_to_a: u64,
    pub mbox_calls: u64,
}

impl RoundBudget {
    /// One cbit from Alice to Bob and one M-box use.
    pub const CBIT_AND_MBOX: RoundBudget = RoundBudget {
        cbits_a_to_b: 1,
        cbits_b_to_a: 0,
        mbox_calls: 1,
    };

    /// The single-cbit kernel with no box.
    pub const CBIT_ONLY: RoundBudget = RoundBudget {
        cbits_a_to_b: 1,
        cbits_b_to_a: 0,
        mbox_calls: 0,
    };
}

impl ResourceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// True when the ledger spent exactly the budget.
    pub fn matches(&self, budget: RoundBudget) -> bool {
        self.cbits_a_to_b == budget.cbits_a_to_b
            && self.cbits_b_to_a == budget.cbits_b_to_a
            && self.mbox_calls == budget.mbox_calls
    }

    pub fn check(&self, budget: RoundBudget) -> Result<()> {
        if self.matches(budget) {
            Ok(())
        } else {
            Err(Error::BudgetViolation(format!(
                "round spent {self:?}, budget is {budget:?}"
            )))
        }
    }
}

/// Queries the M-box. `m` is a fair bit from `rng`, the box's private
/// randomness; `n = m ⊕ [x ≤ y]`.
pub fn mbox_call<R: Rng + ?Sized>(
    x: f64,
    y: f64,
    rng: &mut R,
    ledger: &mut ResourceLedger,
) -> Result<MBoxOutcome> {
    for (name, value) in [("x", x), ("y", y)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::BoxInput { name, value });
        }
    }
    if ledger.mbox_calls > 0 {
        return Err(Error::BudgetViolation("second M-box call in one round".into()));
    }
    ledger.mbox_calls += 1;
    let m = u8::from(rng.random::<bool>());
    let n = m ^ u8::from(x <= y);
    Ok(MBoxOutcome::from_bits(m, n))
}

/// Alice's single message to Bob.
pub fn send_cbit(bit: Sign, ledger: &mut ResourceLedger) -> Result<Sign> {
    if ledger.cbits_a_to_b > 0 {
        return Err(Error::BudgetViolation("second cbit from Alice in one round".into()));
    }
    ledger.cbits_a_to_b += 1;
    Ok(bit)
}
