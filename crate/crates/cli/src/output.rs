//! Output directory layout, CLI-level CSV schemas and the timestamp sidecar.
//!
//! Everything under the output directory is a deterministic function of the
//! resolved config except `meta.toml`, which holds wall-clock timestamps.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use gaudy_core::experiments::table::write_csv;
use gaudy_core::experiments::{ResultTable, RunKey};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const CURVES: &str = "curves.csv";
pub const FINALS: &str = "finals.csv";
pub const COSINES: &str = "cosines.csv";
pub const SPECTRUM: &str = "spectrum.csv";
pub const OBJECTIVES: &str = "objectives.csv";
pub const OED_SUMMARY: &str = "oed_summary.csv";
pub const SCATTER: &str = "scatter.csv";
pub const DISAGREEMENT: &str = "disagreement.csv";
pub const CORRELATION: &str = "correlation.csv";
pub const MANIFEST: &str = "manifest.csv";
pub const CONFIG: &str = "config.toml";
pub const META: &str = "meta.toml";

/// Final-session mean R² across runs of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRow {
    pub experiment: String,
    pub strategy: String,
    pub activation: String,
    pub param: String,
    pub mean_r2: f64,
    pub sd_r2: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OedSummaryRow {
    pub reference: usize,
    pub candidates: usize,
    pub ratio_spearman: f64,
    /// Fraction of components where the gaudy variance is at least the normal one.
    pub gaudy_spectrum_dominance: f64,
    pub gaudy_wins: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterOutRow {
    pub strategy: String,
    pub activation: String,
    pub neuron: usize,
    pub image: usize,
    pub truth: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub ensemble: usize,
    pub sessions: usize,
    pub images: usize,
    pub pearson: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub input: String,
    pub output: String,
    pub transform: String,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

/// Schema name stamped into a CSV file, from its file name.
pub fn schema_of(file: &str) -> &str {
    file.trim_end_matches(".csv")
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    pub fn table<T: Serialize>(&self, file: &str, rows: &[T]) -> Result<()> {
        Ok(write_csv(self.path(file), schema_of(file), rows)?)
    }

    pub fn text(&self, file: impl AsRef<Path>, body: &str) -> Result<()> {
        let p = self.root.join(file);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(&p, body).map_err(|e| CliError::io(&p, e))
    }

    /// Writes the curve table, its per-arm finals, and one directory per
    /// run under `runs/`, numbered in seed order.
    pub fn curves(&self, table: &ResultTable) -> Result<()> {
        table.write(self.path(CURVES))?;
        self.table(FINALS, &finals(table))?;
        for key in table.keys() {
            let mut seeds: Vec<u64> = table
                .rows
                .iter()
                .filter(|r| r.key() == key)
                .map(|r| r.seed)
                .collect();
            seeds.dedup();
            for (index, seed) in seeds.into_iter().enumerate() {
                let run = ResultTable {
                    rows: table
                        .rows
                        .iter()
                        .filter(|r| r.key() == key && r.seed == seed)
                        .cloned()
                        .collect(),
                };
                let dir = self.root.join("runs").join(run_slug(&key, index));
                std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                run.write(dir.join(CURVES))?;
            }
        }
        Ok(())
    }

    pub fn config(&self, cfg: &ExperimentConfig) -> Result<()> {
        self.text(CONFIG, &cfg.to_toml()?)
    }
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn run_slug(key: &RunKey, run: usize) -> String {
    let mut parts = vec![
        slug(&key.experiment),
        slug(&key.strategy),
        slug(&key.activation),
    ];
    if !key.param.is_empty() {
        parts.push(slug(&key.param));
    }
    parts.push(format!("run{run}"));
    parts.join("-")
}

pub fn finals(table: &ResultTable) -> Vec<FinalRow> {
    table
        .keys()
        .into_iter()
        .map(|key| {
            let v: Vec<f64> = table.finals(&key).into_iter().map(|(_, r)| r).collect();
            FinalRow {
                mean_r2: gaudy_core::stats::mean(&v),
                sd_r2: gaudy_core::stats::sd(&v),
                runs: v.len(),
                experiment: key.experiment,
                strategy: key.strategy,
                activation: key.activation,
                param: key.param,
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    command: &'a str,
    version: &'a str,
    started_unix_ms: u64,
    finished_unix_ms: u64,
    elapsed_ms: u64,
}

/// Wall-clock record for the sidecar.
pub struct Clock {
    started: SystemTime,
    timer: Instant,
}

impl Clock {
    pub fn start() -> Self {
        Clock {
            started: SystemTime::now(),
            timer: Instant::now(),
        }
    }

    pub fn write_sidecar(&self, out: &OutDir, command: &str) -> Result<()> {
        let ms = |t: SystemTime| {
            t.duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_millis() as u64)
        };
        let elapsed = self.timer.elapsed();
        let meta = Meta {
            command,
            version: env!("CARGO_PKG_VERSION"),
            started_unix_ms: ms(self.started),
            finished_unix_ms: ms(self.started + elapsed),
            elapsed_ms: elapsed.as_millis() as u64,
        };
        let body = toml::to_string(&meta).map_err(|e| CliError::Config(e.to_string()))?;
        out.text(META, &body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_file_safe() {
        let key = RunKey {
            experiment: "edges".into(),
            strategy: "top-edges:10".into(),
            activation: "relu".into(),
            param: "percent=10".into(),
        };
        assert_eq!(run_slug(&key, 7), "edges-top-edges_10-relu-percent_10-run7");
    }
}
