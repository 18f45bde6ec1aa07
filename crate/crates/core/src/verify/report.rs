//! Target-versus-empirical comparison and the report written by experiments.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boxes::ResourceLedger;
use crate::error::Result;
use crate::geometry::{CompletionKind, Sign, UnitVector3};
use crate::protocols::ProtocolId;
use crate::quantum::JointDist;
use crate::verify::estimate::{EstimateWithError, JointCounts, JointEstimate};

/// JSON Schema (draft 7) that every [`ComparisonReport`] satisfies.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// Distance and z-scores of one empirical distribution against its target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub tv: f64,
    /// Per-entry `(p̂ − p) / σ` with `σ = √(p(1 − p)/n)` under the target,
    /// floored at one count (`1/n`) so degenerate entries stay finite.
    pub z: [f64; 4],
    pub max_abs_z: f64,
}

pub fn compare(target: &JointDist, empirical: &JointEstimate) -> ComparisonRow {
    let t = target.clamped().to_array();
    let e = empirical.dist.to_array();
    let n = empirical.n as f64;
    let tv = (0.5 * t.iter().zip(e).map(|(x, y)| (x - y).abs()).sum::<f64>()).clamp(0.0, 1.0);
    let z: [f64; 4] = std::array::from_fn(|i| {
        let diff = e[i] - t[i];
        if diff == 0.0 {
            0.0
        } else {
            let sigma = (t[i] * (1.0 - t[i]) / n).sqrt().max(1.0 / n);
            diff / sigma
        }
    });
    let max_abs_z = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ComparisonRow { tv, z, max_abs_z }
}

/// Reproduction recipe for a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool: String,
    pub version: String,
    pub protocol: ProtocolId,
    pub gamma: f64,
    pub completion: CompletionKind,
    pub seed: u64,
    pub rounds: u64,
    /// `random:N`, `file:<path>` or `explicit:N`.
    pub settings_source: String,
    pub settings_count: usize,
    /// The distribution each row is compared with: `p_qm` or `p_nl`.
    pub target: String,
}

/// Sample moments of `±1` outputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub alpha: Option<EstimateWithError>,
    pub beta: Option<EstimateWithError>,
    pub correlation: Option<EstimateWithError>,
}

/// Pre-flip correlation restricted to one box branch, with the exact oracle
/// value and the designed prediction for that branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub p: Sign,
    pub q: Sign,
    pub rounds: u64,
    pub correlation: Option<EstimateWithError>,
    pub oracle: f64,
    /// Absent where a flip-target map is singular.
    pub prediction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingRow {
    pub index: usize,
    pub a: UnitVector3,
    pub b: UnitVector3,
    pub rounds: u64,
    pub counts: JointCounts,
    pub target: JointDist,
    pub empirical: JointDist,
    pub stderr: [f64; 4],
    #[serde(flatten)]
    pub comparison: ComparisonRow,
    pub outputs: Moments,
    /// Moments of `(α₀, β₀)` in the reduced frame.
    pub pre_flip: Moments,
    pub branches: Vec<BranchRow>,
    /// Resources summed over the rounds.
    pub resources: ResourceLedger,
    pub budget_violations: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub settings: usize,
    pub total_rounds: u64,
    pub max_tv: f64,
    pub max_abs_z: f64,
    pub budget_violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<SettingRow>,
    pub summary: ReportSummary,
}

impl ComparisonReport {
    pub fn new(metadata: ReportMetadata, rows: Vec<SettingRow>) -> Self {
        let summary = ReportSummary {
            settings: rows.len(),
            total_rounds: rows.iter().map(|r| r.rounds).sum(),
            max_tv: rows.iter().fold(0.0, |m, r| f64::max(m, r.comparison.tv)),
            max_abs_z: rows.iter().fold(0.0, |m, r| f64::max(m, r.comparison.max_abs_z)),
            budget_violations: rows.iter().map(|r| r.budget_violations).sum(),
        };
        Self {
            metadata,
            rows,
            summary,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// One flat record per setting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(CsvRecord::from(row))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[derive(Serialize)]
struct CsvRecord {
    index: usize,
    ax: f64,
    ay: f64,
    az: f64,
    bx: f64,
    by: f64,
    bz: f64,
    rounds: u64,
    target_pp: f64,
    target_pm: f64,
    target_mp: f64,
    target_mm: f64,
    empirical_pp: f64,
    empirical_pm: f64,
    empirical_mp: f64,
    empirical_mm: f64,
    tv: f64,
    max_abs_z: f64,
    budget_violations: u64,
}

impl From<&SettingRow> for CsvRecord {
    fn from(r: &SettingRow) -> Self {
        let [target_pp, target_pm, target_mp, target_mm] = r.target.to_array();
        let [empirical_pp, empirical_pm, empirical_mp, empirical_mm] = r.empirical.to_array();
        Self {
            index: r.index,
            ax: r.a.x(),
            ay: r.a.y(),
            az: r.a.z(),
            bx: r.b.x(),
            by: r.b.y(),
            bz: r.b.z(),
            rounds: r.rounds,
            target_pp,
            target_pm,
            target_mp,
            target_mm,
            empirical_pp,
            empirical_pm,
            empirical_mp,
            empirical_mm,
            tv: r.comparison.tv,
            max_abs_z: r.comparison.max_abs_z,
            budget_violations: r.budget_violations,
        }
    }
}
