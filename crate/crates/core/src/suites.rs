//! Verification suites shared by the command line and the acceptance tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boxes::{mbox_call, ResourceLedger};
use crate::error::Result;
use crate::geometry::{sample_unit_sphere, CompletionKind, CompletionStrategy, Sign, UnitVector3};
use crate::protocols::{symmetrize, tb_round, ProtocolId};
use crate::quantum::EntanglementParam;
use crate::runtime::{simulate_setting, stream, Domain, SettingTally, CHUNK};
use crate::verify::{
    epr2_suite, exact_mu_average, flip_algebra_residual, protocol1_flip_residual,
    quadrature_kernel, residual_row, Check, EstimateWithError, ResidualRow,
};

/// Acceptance band for sampled quantities, in standard errors.
pub const SIGMAS: f64 = 4.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub checks: Vec<Check>,
    /// Protocol transcripts produced while running the suite.
    pub transcripts: u64,
    pub budget_violations: u64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn absorb(&mut self, tally: &SettingTally) {
        self.transcripts += tally.rounds;
        self.budget_violations += tally.budget_violations;
    }

    pub fn extend(&mut self, other: SuiteResult) {
        self.checks.extend(other.checks);
        self.transcripts += other.transcripts;
        self.budget_violations += other.budget_violations;
    }
}

/// The `index`-th random setting pair of `seed`.
pub fn random_pair(seed: u64, index: u64) -> (UnitVector3, UnitVector3) {
    let mut rng = stream(seed, Domain::Settings, index, 0);
    let a = sample_unit_sphere(&mut rng);
    (a, sample_unit_sphere(&mut rng))
}

/// Monte-Carlo mean of the kernel's `αβ` at fixed `(u, v)`.
pub fn kernel_mc(u: UnitVector3, v: UnitVector3, rounds: u64, seed: u64, index: u64) -> EstimateWithError {
    let sum: i64 = (0..rounds.div_ceil(CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, Domain::Shared, index, k);
            let n = CHUNK.min(rounds - k * CHUNK);
            (0..n)
                .map(|_| {
                    let l1 = sample_unit_sphere(&mut rng);
                    let l2 = sample_unit_sphere(&mut rng);
                    let (alpha, beta, _) = tb_round(u, v, l1, l2);
                    (alpha * beta).as_i8() as i64
                })
                .sum::<i64>()
        })
        .sum();
    EstimateWithError::from_pm1(rounds, sum).expect("at least two rounds")
}

/// Kernel identity `E[αβ] = u·v` by sampling and by quadrature.
pub fn kernel_suite(pairs: u64, rounds: u64, nodes: usize, seed: u64) -> Result<SuiteResult> {
    let mut out = SuiteResult::default();
    let mut worst_z = 0.0f64;
    let mut worst_q = 0.0f64;
    for i in 0..pairs {
        let (u, v) = random_pair(seed, i);
        let target = u.dot(v);
        worst_z = worst_z.max(kernel_mc(u, v, rounds, seed, i).z_score(target));
        worst_q = worst_q.max((quadrature_kernel(u, v, nodes)? - target).abs());
    }
    out.checks.push(Check::at_most(
        format!("kernel MC max |z| over {pairs} pairs at {rounds} rounds"),
        worst_z,
        SIGMAS,
    ));
    out.checks.push(Check::at_most(
        format!("kernel quadrature max |err| at {nodes} nodes"),
        worst_q,
        2e-3,
    ));
    Ok(out)
}

/// Closed-form flip moments against the exact enumeration.
pub fn flip_suite(samples: usize, seed: u64) -> SuiteResult {
    SuiteResult {
        checks: vec![Check::at_most(
            format!("flip algebra residual over {samples} draws"),
            flip_algebra_residual(samples, seed),
            1e-15,
        )],
        ..Default::default()
    }
}

/// XOR contract on a 21×21 grid and uniformity of both box outputs.
pub fn mbox_suite(calls: u64, seed: u64) -> Result<SuiteResult> {
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let mut contract = true;
    let mut rng = stream(seed, Domain::Box, u64::MAX, 0);
    for &x in &grid {
        for &y in &grid {
            let mut ledger = ResourceLedger::new();
            let o = mbox_call(x, y, &mut rng, &mut ledger)?;
            contract &= o.xor() == u8::from(x <= y) && ledger.mbox_calls == 1;
        }
    }

    let per_y = calls / grid.len() as u64;
    let mut worst_m = 0.0f64;
    let mut worst_n = 0.0f64;
    for (j, &y) in grid.iter().enumerate() {
        let mut rng = stream(seed, Domain::Box, j as u64, 0);
        let (mut sm, mut sn) = (0i64, 0i64);
        for _ in 0..per_y {
            let mut ledger = ResourceLedger::new();
            let o = mbox_call(0.5, y, &mut rng, &mut ledger)?;
            sm += 2 * o.m as i64 - 1;
            sn += 2 * o.n as i64 - 1;
        }
        worst_m = worst_m.max(EstimateWithError::from_pm1(per_y, sm).expect("calls").z_score(0.0));
        worst_n = worst_n.max(EstimateWithError::from_pm1(per_y, sn).expect("calls").z_score(0.0));
    }
    Ok(SuiteResult {
        checks: vec![
            Check::holds("M-box XOR contract on 21×21 grid", contract),
            Check::at_most(format!("M-box m uniform, max |z| over 21 y ({} calls)", per_y * 21), worst_m, SIGMAS),
            Check::at_most(format!("M-box n uniform, max |z| over 21 y ({} calls)", per_y * 21), worst_n, SIGMAS),
        ],
        ..Default::default()
    })
}

/// Decomposition checks at each γ, plus the informational diagnostics.
pub fn epr2_checks(gammas: &[f64], grid: usize) -> Result<SuiteResult> {
    let mut out = SuiteResult::default();
    for &g in gammas {
        let param = EntanglementParam::new(g)?;
        let report = epr2_suite(&param, grid)?;
        out.checks.extend(report.checks());
        out.checks.extend(report.diagnostics());
        if !param.is_maximal() {
            let (literal, reflected) = protocol1_flip_residual(&param, grid)?;
            out.checks.push(Check::info(format!("epr2 γ={g:.10} first-protocol flip identity, literal B̂"), literal));
            out.checks.push(Check::info(format!("epr2 γ={g:.10} first-protocol flip identity, reflected B̂"), reflected));
        }
    }
    Ok(out)
}

/// Per-setting statistics for one protocol and strategy.
pub struct SettingRun {
    pub a: UnitVector3,
    pub b: UnitVector3,
    pub tally: SettingTally,
}

pub fn run_settings(
    protocol: ProtocolId,
    param: &EntanglementParam,
    kind: CompletionKind,
    settings: u64,
    rounds: u64,
    seed: u64,
) -> Result<Vec<SettingRun>> {
    let strategy = CompletionStrategy::from(kind);
    (0..settings)
        .map(|i| {
            let (a, b) = random_pair(seed, i);
            let tally = simulate_setting(protocol, param, a, b, strategy, seed, i, rounds)?;
            Ok(SettingRun { a, b, tally })
        })
        .collect()
}

/// `|z|` of the pre-flip marginals (target 0) for each run.
pub fn pre_flip_marginal_z(runs: &[SettingRun]) -> f64 {
    runs.iter()
        .flat_map(|r| {
            let m = r.tally.pre_flip_moments();
            [m.alpha, m.beta]
        })
        .map(|e| e.map_or(f64::INFINITY, |e| e.z_score(0.0)))
        .fold(0.0, f64::max)
}

/// `|z|` of the final marginals against `(c a_z, c b_z)`.
pub fn post_flip_marginal_z(param: &EntanglementParam, runs: &[SettingRun]) -> f64 {
    runs.iter()
        .flat_map(|r| {
            let m = r.tally.output_moments();
            [(m.alpha, param.c() * r.a.z()), (m.beta, param.c() * r.b.z())]
        })
        .map(|(e, t)| e.map_or(f64::INFINITY, |e| e.z_score(t)))
        .fold(0.0, f64::max)
}

/// `|z|` of each sampled branch correlation against [`exact_mu_average`].
pub fn oracle_z(
    protocol: ProtocolId,
    param: &EntanglementParam,
    kind: CompletionKind,
    runs: &[SettingRun],
) -> Result<f64> {
    let strategy = CompletionStrategy::from(kind);
    let mut worst = 0.0f64;
    for r in runs {
        let (ra, rb, _, _) = symmetrize(r.a, r.b);
        for p in Sign::BOTH {
            for q in Sign::BOTH {
                let branch = r.tally.branch(p, q);
                if branch.rounds < 2 {
                    continue;
                }
                let oracle = exact_mu_average(param, ra, rb, strategy, p, q, protocol)?;
                let est = branch.correlation().expect("two or more rounds");
                worst = worst.max(est.z_score(oracle));
            }
        }
    }
    Ok(worst)
}

/// Conditional sampled correlations against the exact oracle.
pub fn oracle_suite(
    protocols: &[ProtocolId],
    gamma: f64,
    settings: u64,
    rounds: u64,
    seed: u64,
) -> Result<SuiteResult> {
    let param = EntanglementParam::new(gamma)?;
    let mut out = SuiteResult::default();
    for &protocol in protocols {
        for kind in CompletionKind::ALL {
            let runs = run_settings(protocol, &param, kind, settings, rounds, seed)?;
            for r in &runs {
                out.absorb(&r.tally);
            }
            out.checks.push(Check::at_most(
                format!("oracle {protocol} {kind} γ={gamma:.10}: max |z| over {settings} settings"),
                oracle_z(protocol, &param, kind, &runs)?,
                SIGMAS,
            ));
        }
    }
    out.checks.push(Check::at_most("oracle runs: budget violations", out.budget_violations as f64, 0.0));
    Ok(out)
}

/// Oracle-versus-design residual rows for every protocol, γ and strategy.
pub fn residual_report(gammas: &[f64], settings: usize, seed: u64) -> Result<Vec<ResidualRow>> {
    let mut rows = Vec::new();
    for protocol in [ProtocolId::P1, ProtocolId::P2] {
        for &g in gammas {
            let param = EntanglementParam::new(g)?;
            for kind in CompletionKind::ALL {
                rows.push(residual_row(protocol, &param, kind, settings, seed)?);
            }
        }
    }
    Ok(rows)
}
