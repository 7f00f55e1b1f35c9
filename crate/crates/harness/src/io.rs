//! Point-cloud files: headerless CSV with one row per point, and JSON.

use anyhow::{bail, Context, Result};
use floatbody::quantile::Sample;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Writes rows with Rust's shortest round-trip float formatting.
pub fn write_csv<W: Write>(out: W, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("line {}", i + 1))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().with_context(|| format!("line {}: cannot parse {f:?} as a number", i + 1)))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first().map(|r: &Vec<f64>| r.len()) {
            if row.len() != first {
                bail!("line {}: expected {first} columns, found {}", i + 1, row.len());
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_sample(path: &Path) -> Result<Sample> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = read_csv(f).with_context(|| format!("reading {}", path.display()))?;
    if rows.is_empty() {
        bail!("{} has no rows", path.display());
    }
    Ok(Sample::from_rows(&rows)?)
}

pub fn sample_rows(x: &Sample) -> Vec<Vec<f64>> {
    x.rows().map(|r| r.to_vec()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub n: usize,
    pub d: usize,
    pub points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        PointCloud { n: points.len(), d: points.first().map_or(0, |p| p.len()), points }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}
