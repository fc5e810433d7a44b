//! Schema-stamped CSV tables.
//!
//! Every file starts with a line `#schema <name> v<version>` followed by a
//! regular CSV header. Readers reject files whose schema line does not
//! match, so a plot or analysis never silently consumes the wrong table.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::active::{RunOutcome, SessionLog};
use crate::error::{Error, Result};
use crate::stats::{mean, sd};

pub const SCHEMA_VERSION: u32 = 1;

pub fn schema_line(name: &str) -> String {
    format!("#schema {name} v{SCHEMA_VERSION}")
}

pub fn to_csv<T: Serialize>(schema: &str, rows: &[T]) -> Result<Vec<u8>> {
    let mut out = schema_line(schema).into_bytes();
    out.push(b'\n');
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv buffer: {e}")))
}

pub fn from_csv<T: DeserializeOwned>(schema: &str, bytes: &[u8]) -> Result<Vec<T>> {
    let expected = schema_line(schema);
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .unwrap_or(bytes.len());
    let first = String::from_utf8_lossy(&bytes[..end]);
    if first.trim_end() != expected {
        return Err(Error::InvalidArgument(format!(
            "expected `{expected}`, found `{}`",
            first.trim_end()
        )));
    }
    let body = bytes.get(end + 1..).unwrap_or(&[]);
    let mut r = csv::Reader::from_reader(body);
    let rows: std::result::Result<Vec<T>, _> = r.deserialize().collect();
    Ok(rows?)
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, schema: &str, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv(schema, rows)?).map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>, schema: &str) -> Result<Vec<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_csv(schema, &bytes)
}

/// One learning-curve point of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub experiment: String,
    pub strategy: String,
    pub activation: String,
    /// Sweep coordinate, e.g. `depth=3` or `mix=250`; empty when unswept.
    pub param: String,
    pub seed: u64,
    /// 0 is the untrained baseline.
    pub session: usize,
    pub mean_r2: f64,
    pub median_r2: f64,
    pub min_r2: f64,
    pub max_r2: f64,
    pub train_loss: f64,
}

/// Identifies the run a set of curve rows belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunKey {
    pub experiment: String,
    pub strategy: String,
    pub activation: String,
    pub param: String,
}

impl CurveRow {
    pub fn key(&self) -> RunKey {
        RunKey {
            experiment: self.experiment.clone(),
            strategy: self.strategy.clone(),
            activation: self.activation.clone(),
            param: self.param.clone(),
        }
    }
}

/// Learning curves of every run of an experiment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<CurveRow>,
}

pub const CURVES_SCHEMA: &str = "curves";

impl ResultTable {
    pub fn push_run(&mut self, key: &RunKey, seed: u64, outcome: &RunOutcome) {
        let mut add = |l: &SessionLog| {
            self.rows.push(CurveRow {
                experiment: key.experiment.clone(),
                strategy: key.strategy.clone(),
                activation: key.activation.clone(),
                param: key.param.clone(),
                seed,
                session: l.session,
                mean_r2: l.mean_r2,
                median_r2: l.median_r2,
                min_r2: l.min_r2,
                max_r2: l.max_r2,
                train_loss: l.train_loss,
            })
        };
        add(&outcome.baseline);
        outcome.logs.iter().for_each(add);
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        to_csv(CURVES_SCHEMA, &self.rows)
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        Ok(ResultTable {
            rows: from_csv(CURVES_SCHEMA, bytes)?,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_csv(path, CURVES_SCHEMA, &self.rows)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(ResultTable {
            rows: read_csv(path, CURVES_SCHEMA)?,
        })
    }

    /// Distinct run keys in first-appearance order.
    pub fn keys(&self) -> Vec<RunKey> {
        let mut seen = Vec::new();
        for r in &self.rows {
            let k = r.key();
            if !seen.contains(&k) {
                seen.push(k);
            }
        }
        seen
    }

    /// `(seed, mean R²)` at the last session of every seed of `key`.
    pub fn finals(&self, key: &RunKey) -> Vec<(u64, f64)> {
        let mut out: Vec<(u64, usize, f64)> = Vec::new();
        for r in self.rows.iter().filter(|r| &r.key() == key) {
            match out.iter_mut().find(|(s, _, _)| *s == r.seed) {
                Some(e) if r.session >= e.1 => *e = (r.seed, r.session, r.mean_r2),
                Some(_) => {}
                None => out.push((r.seed, r.session, r.mean_r2)),
            }
        }
        out.into_iter().map(|(s, _, v)| (s, v)).collect()
    }

    /// Per-session mean and s.d. of mean R² across seeds of `key`.
    pub fn summary(&self, key: &RunKey) -> Vec<SummaryPoint> {
        let mut sessions: Vec<usize> = self
            .rows
            .iter()
            .filter(|r| &r.key() == key)
            .map(|r| r.session)
            .collect();
        sessions.sort_unstable();
        sessions.dedup();
        sessions
            .into_iter()
            .map(|s| {
                let v: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| &r.key() == key && r.session == s)
                    .map(|r| r.mean_r2)
                    .collect();
                SummaryPoint {
                    session: s,
                    mean: mean(&v),
                    sd: sd(&v),
                    runs: v.len(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryPoint {
    pub session: usize,
    pub mean: f64,
    pub sd: f64,
    pub runs: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(strategy: &str, seed: u64, session: usize, r2: f64) -> CurveRow {
        CurveRow {
            experiment: "readout".into(),
            strategy: strategy.into(),
            activation: "relu".into(),
            param: String::new(),
            seed,
            session,
            mean_r2: r2,
            median_r2: r2,
            min_r2: r2,
            max_r2: r2,
            train_loss: f64::NAN,
        }
    }

    #[test]
    fn csv_round_trip_keeps_schema() {
        let t = ResultTable {
            rows: vec![row("normal", 0, 0, 0.0), row("normal", 0, 1, 0.25)],
        };
        let bytes = t.to_csv().unwrap();
        assert!(bytes.starts_with(b"#schema curves v1\nexperiment,strategy,"));
        let back = ResultTable::from_csv(&bytes).unwrap();
        assert_eq!(back.rows.len(), 2);
        assert_eq!(back.rows[1].mean_r2, 0.25);
        assert!(back.rows[0].train_loss.is_nan());
        assert!(from_csv::<CurveRow>("spectra", &bytes).is_err());
    }

    #[test]
    fn finals_and_summary() {
        let t = ResultTable {
            rows: vec![
                row("gaudy", 0, 1, 0.1),
                row("gaudy", 0, 2, 0.3),
                row("gaudy", 1, 1, 0.2),
                row("gaudy", 1, 2, 0.5),
                row("normal", 0, 2, 0.9),
            ],
        };
        let key = t.keys()[0].clone();
        assert_eq!(t.keys().len(), 2);
        assert_eq!(t.finals(&key), vec![(0, 0.3), (1, 0.5)]);
        let s = t.summary(&key);
        assert_eq!(s.len(), 2);
        assert!((s[1].mean - 0.4).abs() < 1e-12);
        assert!((s[1].sd - 0.02f64.sqrt()).abs() < 1e-12);
    }
}
