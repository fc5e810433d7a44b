//! Experiment drivers shared by the command line and the test suites:
//! GLM learning curves, readout and active-learning comparisons, and the
//! pixel-space design scan.

mod glm;
mod readout;
mod scan;
pub mod table;

pub use glm::{run_glm, run_glm_with, CosineRow, GlmArm, GlmExperiment, GlmReport};
pub use readout::{
    disagreement_vs_error, median_neuron_scatter, run_readout, run_readouts, DisagreementReport,
    DisagreementRow, ReadoutArch, ReadoutJob, ReadoutSetup, ScatterRow,
};
pub use scan::{oed_scan, ObjectiveRow, OedScan, OedScanConfig, SpectrumRow};
pub use table::{CurveRow, ResultTable, RunKey, SummaryPoint};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::active::{RunState, Snapshot};
use crate::error::Result;

/// Persistence for runs in progress, keyed by arm and run seed.
pub trait RunStore: Sync {
    /// Saved state to continue the run from, if any.
    fn load(&self, key: &RunKey, seed: u64) -> Result<Option<RunState>>;
    /// Called after every completed session.
    fn save(&self, key: &RunKey, seed: u64, snapshot: &Snapshot) -> Result<()>;
}

/// Keeps nothing; every run starts fresh.
pub struct NoStore;

impl RunStore for NoStore {
    fn load(&self, _: &RunKey, _: u64) -> Result<Option<RunState>> {
        Ok(None)
    }
    fn save(&self, _: &RunKey, _: u64, _: &Snapshot) -> Result<()> {
        Ok(())
    }
}

/// Maps `f` over `items` on up to `threads` scoped threads. Output order
/// follows input order whatever the thread count.
pub fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("no poisoned workers")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..37).collect();
        let serial = parallel_map(&items, 1, |x| x * x);
        assert_eq!(parallel_map(&items, 4, |x| x * x), serial);
        assert!(parallel_map(&Vec::<u64>::new(), 3, |x| *x).is_empty());
    }
}
