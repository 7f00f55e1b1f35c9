//! Run records: the JSON report and the flat per-trial metrics table.

use anyhow::Result;
use floatbody::pipeline::PrivacyLedger;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl ThresholdCheck {
    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        ThresholdCheck { name: name.into(), value, limit, pass: value <= limit }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub threads: usize,
    pub trials: Vec<BTreeMap<String, f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<ThresholdCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger: Option<PrivacyLedger>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_secs: Option<f64>,
    pub pass: bool,
}

impl RunRecord {
    pub fn new(command: &str, config_digest: String, seed: u64, threads: usize) -> Self {
        let mut r = RunRecord { command: command.into(), config_digest, seed, threads, ..Default::default() };
        if threads > 1 {
            r.notes.push("parallel: metrics reproducible, byte order not".into());
        }
        r
    }

    pub fn check(&mut self, c: ThresholdCheck) {
        self.checks.push(c);
    }

    pub fn finish(&mut self) {
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    /// Header row from the union of trial keys, then one row per trial.
    pub fn write_trials_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut keys: Vec<&String> = self.trials.iter().flat_map(|t| t.keys()).collect();
        keys.sort();
        keys.dedup();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["trial".to_string()];
        header.extend(keys.iter().map(|k| k.to_string()));
        w.write_record(&header)?;
        for (i, t) in self.trials.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(keys.iter().map(|k| t.get(*k).map_or(String::new(), |v| v.to_string())));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
