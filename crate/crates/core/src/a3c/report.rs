use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One gradient push by one worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub episode: u64,
    pub worker: usize,
    pub loss_pi: f64,
    pub loss_v: f64,
    /// Mean policy entropy over the trained steps.
    pub entropy: f64,
    pub reward_sum: f64,
    pub staleness: u64,
    pub version: u64,
}

/// One environment episode of online training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    /// Sum over steps of the mean reward of the live agents.
    pub reward: f64,
    pub steps: usize,
    pub stabilized: bool,
    pub fault: bool,
    /// Mean over steps and agents of the largest action probability.
    pub mean_max_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportLine {
    Update(UpdateRecord),
    Episode(EpisodeRecord),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    pub lines: Vec<ReportLine>,
    pub attempted_pushes: u64,
    pub applied_pushes: u64,
    pub final_version: u64,
    /// Set when online training stopped on the smooth-policy rule.
    pub converged_at: Option<u64>,
}

impl TrainingReport {
    pub fn updates(&self) -> impl Iterator<Item = &UpdateRecord> {
        self.lines.iter().filter_map(|l| match l {
            ReportLine::Update(u) => Some(u),
            _ => None,
        })
    }

    pub fn episodes(&self) -> impl Iterator<Item = &EpisodeRecord> {
        self.lines.iter().filter_map(|l| match l {
            ReportLine::Episode(e) => Some(e),
            _ => None,
        })
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for line in &self.lines {
            serde_json::to_writer(&mut out, line).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}
