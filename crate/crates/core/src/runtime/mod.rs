//! Batch execution: settings sweeps, deterministic parallel rounds and
//! per-setting aggregation.

mod settings;
mod streams;
mod tally;

pub use settings::{read_settings_csv, SettingsSource};
pub use streams::{round_streams, stream, Domain};
pub use tally::{BranchTally, SettingTally};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CompletionKind, CompletionStrategy, Sign, UnitVector3};
use crate::protocols::{run_round, symmetrize, ProtocolId, RoundTranscript, SharedRandomness};
use crate::quantum::{p_nl, p_qm, EntanglementParam, JointDist};
use crate::verify::{
    compare, exact_mu_average, predicted_correlation, BranchRow, ComparisonReport, JointEstimate,
    ReportMetadata, SettingRow,
};

/// Rounds per work unit. Fixed, so the split never depends on the worker count.
pub const CHUNK: u64 = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub protocol: ProtocolId,
    pub gamma: f64,
    pub settings: SettingsSource,
    pub rounds: u64,
    pub seed: u64,
    pub completion: CompletionKind,
    /// Worker threads; `None` uses rayon's default. Never affects results.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<EntanglementParam> {
        if self.rounds < 1 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        let param = EntanglementParam::new(self.gamma).map_err(|e| Error::Config(e.to_string()))?;
        if self.protocol == ProtocolId::P2 && param.is_separable() {
            return Err(Error::Config("protocol 2 requires gamma > 0".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if let SettingsSource::Random(0) = self.settings {
            return Err(Error::Config("random settings count must be at least 1".into()));
        }
        Ok(param)
    }

    fn target(&self, param: &EntanglementParam, a: UnitVector3, b: UnitVector3) -> Result<JointDist> {
        match self.protocol {
            ProtocolId::P1 | ProtocolId::Tb => Ok(p_qm(param, a, b)),
            ProtocolId::P2 => p_nl(param, a, b),
        }
    }

    fn target_name(&self) -> &'static str {
        match self.protocol {
            ProtocolId::P1 | ProtocolId::Tb => "p_qm",
            ProtocolId::P2 => "p_nl",
        }
    }
}

/// Runs one round with the streams for `(seed, setting, round)`.
#[allow(clippy::too_many_arguments)]
pub fn replay_round(
    protocol: ProtocolId,
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    strategy: CompletionStrategy,
    seed: u64,
    setting: u64,
    round: u64,
) -> Result<RoundTranscript> {
    let (mut shared_rng, mut box_rng) = round_streams(seed, setting, round);
    let shared = SharedRandomness::sample(&mut shared_rng);
    run_round(protocol, param, a, b, &shared, strategy, &mut box_rng)
}

/// Tally of rounds `[start, end)` for one setting.
#[allow(clippy::too_many_arguments)]
fn run_chunk(
    protocol: ProtocolId,
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    strategy: CompletionStrategy,
    seed: u64,
    setting: u64,
    start: u64,
    end: u64,
) -> Result<SettingTally> {
    let mut tally = SettingTally::default();
    for round in start..end {
        let t = replay_round(protocol, param, a, b, strategy, seed, setting, round)?;
        tally.record(&t);
    }
    Ok(tally)
}

/// Runs `rounds` rounds at one setting on the current rayon pool.
#[allow(clippy::too_many_arguments)]
pub fn simulate_setting(
    protocol: ProtocolId,
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    strategy: CompletionStrategy,
    seed: u64,
    setting: u64,
    rounds: u64,
) -> Result<SettingTally> {
    let chunks: Vec<(u64, u64)> = (0..rounds.div_ceil(CHUNK))
        .map(|k| (k * CHUNK, ((k + 1) * CHUNK).min(rounds)))
        .collect();
    let parts: Vec<Result<SettingTally>> = chunks
        .par_iter()
        .map(|&(s, e)| run_chunk(protocol, param, a, b, strategy, seed, setting, s, e))
        .collect();
    let mut total = SettingTally::default();
    for part in parts {
        total.merge(&part?);
    }
    Ok(total)
}

fn branch_rows(
    config: &ExperimentConfig,
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
    strategy: CompletionStrategy,
    tally: &SettingTally,
) -> Result<Vec<BranchRow>> {
    if config.protocol == ProtocolId::Tb {
        return Ok(Vec::new());
    }
    let (ra, rb, _, _) = symmetrize(a, b);
    let mut rows = Vec::new();
    for p in Sign::BOTH {
        for q in Sign::BOTH {
            let bt = tally.branch(p, q);
            if bt.rounds == 0 {
                continue;
            }
            rows.push(BranchRow {
                p,
                q,
                rounds: bt.rounds,
                correlation: bt.correlation(),
                oracle: exact_mu_average(param, ra, rb, strategy, p, q, config.protocol)?,
                prediction: predicted_correlation(config.protocol, param, ra, rb, p * q).ok(),
            });
        }
    }
    Ok(rows)
}

/// Runs every setting of `config` and compares each with its target.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ComparisonReport> {
    let param = config.validate()?;
    let settings = config.settings.resolve(config.seed)?;
    let strategy = CompletionStrategy::from(config.completion);

    let run = || -> Result<Vec<SettingTally>> {
        settings
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                simulate_setting(config.protocol, &param, a, b, strategy, config.seed, i as u64, config.rounds)
            })
            .collect()
    };
    let tallies = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let mut rows = Vec::with_capacity(settings.len());
    for (index, (&(a, b), tally)) in settings.iter().zip(&tallies).enumerate() {
        let target = config.target(&param, a, b)?;
        let estimate = JointEstimate::from_counts(&tally.outputs)?;
        if tally.budget_violations > 0 {
            log::error!("setting {index}: {} rounds broke the budget", tally.budget_violations);
        }
        rows.push(SettingRow {
            index,
            a,
            b,
            rounds: tally.rounds,
            counts: tally.outputs,
            target,
            empirical: estimate.dist,
            stderr: estimate.stderr,
            comparison: compare(&target, &estimate),
            outputs: tally.output_moments(),
            pre_flip: tally.pre_flip_moments(),
            branches: branch_rows(config, &param, a, b, strategy, tally)?,
            resources: tally.resources,
            budget_violations: tally.budget_violations,
        });
    }

    let metadata = ReportMetadata {
        tool: "mboxsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        protocol: config.protocol,
        gamma: config.gamma,
        completion: config.completion,
        seed: config.seed,
        rounds: config.rounds,
        settings_source: config.settings.describe(),
        settings_count: settings.len(),
        target: config.target_name().into(),
    };
    Ok(ComparisonReport::new(metadata, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::ResourceLedger;
    use std::f64::consts::FRAC_PI_4;

    fn config(protocol: ProtocolId, rounds: u64) -> ExperimentConfig {
        ExperimentConfig {
            protocol,
            gamma: 0.4,
            settings: SettingsSource::Random(3),
            rounds,
            seed: 17,
            completion: CompletionKind::Ortho,
            workers: Some(2),
        }
    }

    #[test]
    fn single_round_report() {
        let r = run_experiment(&config(ProtocolId::P1, 1)).unwrap();
        assert_eq!(r.rows.len(), 3);
        for row in &r.rows {
            assert_eq!(row.rounds, 1);
            assert_eq!(row.counts.total(), 1);
            assert_eq!(row.resources, ResourceLedger { cbits_a_to_b: 1, cbits_b_to_a: 0, mbox_calls: 1 });
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let c = config(ProtocolId::P2, 3000);
        assert_eq!(run_experiment(&c).unwrap().to_json().unwrap(), run_experiment(&c).unwrap().to_json().unwrap());
    }

    #[test]
    fn worker_count_does_not_matter() {
        let mut c = config(ProtocolId::P1, 2 * CHUNK + 77);
        c.workers = Some(1);
        let one = run_experiment(&c).unwrap().to_json().unwrap();
        c.workers = Some(5);
        assert_eq!(one, run_experiment(&c).unwrap().to_json().unwrap());
    }

    #[test]
    fn validation() {
        let mut c = config(ProtocolId::P2, 10);
        c.gamma = 0.0;
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.contains("protocol 2 requires gamma > 0")));
        let mut c = config(ProtocolId::P1, 0);
        assert!(c.validate().is_err());
        c.rounds = 1;
        c.gamma = 1.0;
        assert!(c.validate().is_err());
        c.gamma = FRAC_PI_4;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn replay_matches_batch() {
        let c = config(ProtocolId::P1, 50);
        let param = c.validate().unwrap();
        let settings = c.settings.resolve(c.seed).unwrap();
        let (a, b) = settings[1];
        let strategy = CompletionStrategy::from(c.completion);
        let tally = simulate_setting(c.protocol, &param, a, b, strategy, c.seed, 1, 50).unwrap();
        let mut again = SettingTally::default();
        for round in (0..50).rev() {
            again.record(&replay_round(c.protocol, &param, a, b, strategy, c.seed, 1, round).unwrap());
        }
        assert_eq!(tally, again);
    }
}
