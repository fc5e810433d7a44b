use gaudy_core::experiments::{run_glm_with, GlmArm, GlmExperiment, RunStore};
use gaudy_core::oed::NoiseModel;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{OutDir, COSINES};

/// GLM learning curves for every activation and strategy.
pub fn cmd_glm(cfg: &ExperimentConfig, out: &OutDir, store: &dyn RunStore) -> Result<()> {
    let images = cfg.load_corpus()?;
    let arms = cfg
        .glm
        .activations
        .iter()
        .map(|&k| {
            let desk = GlmArm::desk(k);
            GlmArm {
                learning_rate: cfg.train.learning_rate.unwrap_or(desk.learning_rate),
                momentum: cfg.train.momentum.unwrap_or(desk.momentum),
                ..desk
            }
        })
        .collect();
    let exp = GlmExperiment {
        arms,
        strategies: cfg.strategies().to_vec(),
        seeds: cfg.run_seeds(),
        train: cfg.train_config(None, 0),
        heldout: cfg.glm.heldout,
        gabor: None,
        noise: NoiseModel::new(cfg.glm.noise_variance)?,
        threads: cfg.threads(),
    };
    let report = run_glm_with(&exp, &images, store)?;
    out.curves(&report.table)?;
    out.table(COSINES, &report.cosines)?;
    Ok(())
}
