//! Resumable run state kept next to each run's curves.
//!
//! After every `checkpoint_every` sessions, and after the last one, a run
//! writes `runs/<slug>/state.ckpt` together with `state.key`, the config
//! it belongs to. The final session also writes the trained model as
//! `model.ckpt`. With `--resume` a run whose `state.key` matches the
//! current config continues from its state; finished runs are not retrained.

use std::collections::BTreeMap;
use std::path::PathBuf;

use gaudy_core::active::{RunState, Snapshot};
use gaudy_core::experiments::{RunKey, RunStore};
use gaudy_core::models::save_checkpoint;
use gaudy_core::Error;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{run_slug, OutDir};

pub const STATE: &str = "state.ckpt";
pub const STATE_KEY: &str = "state.key";
pub const MODEL: &str = "model.ckpt";

pub struct RunDirs {
    root: PathBuf,
    fingerprint: String,
    runs: BTreeMap<u64, usize>,
    every: usize,
    sessions: usize,
    resume: bool,
}

/// The parts of a resolved config that fix what a run computes. Session
/// count, run count, strategy list and scheduling may change between a run
/// and its resumption.
fn fingerprint(cfg: &ExperimentConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.out = None;
    c.threads = None;
    c.runs = None;
    c.strategies = None;
    c.checkpoint_every = None;
    c.train.sessions = None;
    c.to_toml()
}

impl RunDirs {
    pub fn new(cfg: &ExperimentConfig, out: &OutDir, resume: bool) -> Result<Self> {
        Ok(RunDirs {
            root: out.path("runs"),
            fingerprint: fingerprint(cfg)?,
            runs: cfg
                .run_seeds()
                .into_iter()
                .enumerate()
                .map(|(i, s)| (s, i))
                .collect(),
            every: cfg.checkpoint_every(),
            sessions: cfg.sessions(),
            resume,
        })
    }

    fn dir(&self, key: &RunKey, seed: u64) -> gaudy_core::Result<PathBuf> {
        let index = self.runs.get(&seed).ok_or_else(|| {
            Error::InvalidArgument(format!("seed {seed} is not a configured run seed"))
        })?;
        Ok(self.root.join(run_slug(key, *index)))
    }
}

fn io(path: PathBuf, source: std::io::Error) -> Error {
    Error::Io { path, source }
}

impl RunStore for RunDirs {
    fn load(&self, key: &RunKey, seed: u64) -> gaudy_core::Result<Option<RunState>> {
        if !self.resume {
            return Ok(None);
        }
        let dir = self.dir(key, seed)?;
        let path = dir.join(STATE);
        if !path.is_file() {
            return Ok(None);
        }
        let key_path = dir.join(STATE_KEY);
        let saved = std::fs::read_to_string(&key_path).map_err(|e| io(key_path, e))?;
        if saved != self.fingerprint {
            return Err(Error::InvalidArgument(format!(
                "{} was written under a different config; rerun without --resume",
                path.display()
            )));
        }
        let state = RunState::load(&path)?;
        log::info!(
            "resuming {} after {} sessions",
            dir.display(),
            state.sessions()
        );
        Ok(Some(state))
    }

    fn save(&self, key: &RunKey, seed: u64, snap: &Snapshot) -> gaudy_core::Result<()> {
        let done = snap.sessions();
        let last = done == self.sessions;
        if self.every == 0 || (!done.is_multiple_of(self.every) && !last) {
            return Ok(());
        }
        let dir = self.dir(key, seed)?;
        std::fs::create_dir_all(&dir).map_err(|e| io(dir.clone(), e))?;
        let key_path = dir.join(STATE_KEY);
        std::fs::write(&key_path, &self.fingerprint).map_err(|e| io(key_path, e))?;
        let state = snap.state();
        state.save(dir.join(STATE))?;
        if last {
            save_checkpoint(&state.model, dir.join(MODEL))?;
        }
        Ok(())
    }
}
