mod active;
mod glm;
mod readout;
mod scan;
mod transform;

pub use active::cmd_al_compare;
pub use glm::cmd_glm;
pub use readout::cmd_readout;
pub use scan::cmd_oed_scan;
pub use transform::{cmd_transform, resolve_spec};

use gaudy_core::experiments::ReadoutSetup;
use gaudy_core::models::GroundTruthConfig;
use gaudy_core::oed::NoiseModel;

use crate::config::{ExperimentConfig, Kind};
use crate::error::{CliError, Result};
use crate::output::{Clock, OutDir};
use crate::plots::render_all;
use crate::store::RunDirs;

/// Runs the experiment named by the resolved config's kind. With `resume`,
/// runs continue from state saved by an earlier invocation.
pub fn run(cfg: &ExperimentConfig, resume: bool) -> Result<()> {
    let kind = cfg
        .kind
        .ok_or_else(|| CliError::Config("config has no kind".into()))?;
    let clock = Clock::start();
    let out = OutDir::create(cfg.out())?;
    out.config(cfg)?;
    let store = RunDirs::new(cfg, &out, resume)?;
    match kind {
        Kind::Glm => cmd_glm(cfg, &out, &store)?,
        Kind::Readout => cmd_readout(cfg, &out, &store)?,
        Kind::AlCompare => cmd_al_compare(cfg, &out, &store)?,
        Kind::OedScan => cmd_oed_scan(cfg, &out)?,
        Kind::TransformScan => cmd_transform(cfg, &out)?,
    }
    let figures = render_all(&out)?;
    log::info!(
        "wrote {} figures to {}",
        figures.len(),
        out.root().display()
    );
    clock.write_sidecar(&out, kind.verb())
}

/// Frozen ground truth and cached dataset for the readout experiments.
fn readout_setup(cfg: &ExperimentConfig) -> Result<ReadoutSetup> {
    let images = cfg.load_corpus()?;
    let first = images
        .first()
        .ok_or_else(|| CliError::Config("corpus is empty".into()))?;
    let g = &cfg.ground_truth;
    let gt = GroundTruthConfig {
        image_side: first.width(),
        channels: first.channels(),
        feature_dim: g.feature_dim,
        n_neurons: g.neurons,
        noise: NoiseModel::new(g.noise_variance)?,
        ..GroundTruthConfig::default()
    };
    log::info!(
        "building ground truth from {} reference images",
        g.reference
    );
    Ok(ReadoutSetup::build(
        images,
        &gt,
        cfg.seed(),
        g.reference,
        g.heldout,
    )?)
}
