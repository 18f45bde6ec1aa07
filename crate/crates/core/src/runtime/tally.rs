//! Integer aggregates of round transcripts. Merging is exact, so the result
//! never depends on how rounds were split across workers.

use crate::boxes::ResourceLedger;
use crate::geometry::Sign;
use crate::protocols::RoundTranscript;
use crate::verify::{EstimateWithError, JointCounts, Moments};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BranchTally {
    pub rounds: u64,
    /// Pre-flip outcomes within the branch.
    pub pre_flip: JointCounts,
}

impl BranchTally {
    pub fn correlation(&self) -> Option<EstimateWithError> {
        let c = self.pre_flip.0;
        EstimateWithError::from_pm1(self.rounds, c[0] as i64 + c[3] as i64 - c[1] as i64 - c[2] as i64)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SettingTally {
    pub rounds: u64,
    pub outputs: JointCounts,
    pub pre_flip: JointCounts,
    /// Indexed by `(p, q)`, `+` first.
    pub branches: [[BranchTally; 2]; 2],
    pub resources: ResourceLedger,
    pub budget_violations: u64,
}

fn slot(s: Sign) -> usize {
    match s {
        Sign::Plus => 0,
        Sign::Minus => 1,
    }
}

fn moments(counts: &JointCounts) -> Moments {
    let [pp, pm, mp, mm] = counts.0.map(|k| k as i64);
    let n = counts.total();
    Moments {
        alpha: EstimateWithError::from_pm1(n, pp + pm - mp - mm),
        beta: EstimateWithError::from_pm1(n, pp + mp - pm - mm),
        correlation: EstimateWithError::from_pm1(n, pp + mm - pm - mp),
    }
}

impl SettingTally {
    pub fn record(&mut self, t: &RoundTranscript) {
        self.rounds += 1;
        self.outputs.add(t.outputs[0], t.outputs[1]);
        self.pre_flip.add(t.pre_flip[0], t.pre_flip[1]);
        if let Some([p, q]) = t.branch {
            let b = &mut self.branches[slot(p)][slot(q)];
            b.rounds += 1;
            b.pre_flip.add(t.pre_flip[0], t.pre_flip[1]);
        }
        self.resources.cbits_a_to_b += t.ledger.cbits_a_to_b;
        self.resources.cbits_b_to_a += t.ledger.cbits_b_to_a;
        self.resources.mbox_calls += t.ledger.mbox_calls;
        if !t.budget_ok() {
            self.budget_violations += 1;
        }
    }

    pub fn merge(&mut self, other: &SettingTally) {
        self.rounds += other.rounds;
        self.outputs.merge(&other.outputs);
        self.pre_flip.merge(&other.pre_flip);
        for (mine, theirs) in self.branches.iter_mut().flatten().zip(other.branches.iter().flatten()) {
            mine.rounds += theirs.rounds;
            mine.pre_flip.merge(&theirs.pre_flip);
        }
        self.resources.cbits_a_to_b += other.resources.cbits_a_to_b;
        self.resources.cbits_b_to_a += other.resources.cbits_b_to_a;
        self.resources.mbox_calls += other.resources.mbox_calls;
        self.budget_violations += other.budget_violations;
    }

    pub fn branch(&self, p: Sign, q: Sign) -> BranchTally {
        self.branches[slot(p)][slot(q)]
    }

    pub fn output_moments(&self) -> Moments {
        moments(&self.outputs)
    }

    /// Moments of `(α₀, β₀)` in the reduced frame.
    pub fn pre_flip_moments(&self) -> Moments {
        moments(&self.pre_flip)
    }
}
