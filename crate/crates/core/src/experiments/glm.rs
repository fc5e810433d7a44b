use serde::{Deserialize, Serialize};

use super::table::{ResultTable, RunKey};
use super::{parallel_map, NoStore, RunStore};
use crate::active::{run_experiment, Dataset, GaborTeacher, StrategyRegistry};
use crate::error::{Error, Result};
use crate::image::{to_grayscale, Image};
use crate::models::{gabor_filter, Activation, ActivationKind, GaborParams, Glm, TrainConfig};
use crate::oed::NoiseModel;
use crate::rng::{tag, Stream};

/// Activation and optimizer settings for one GLM family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlmArm {
    pub activation: ActivationKind,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Sigmoid input scale; ignored by the other activations.
    pub pre_scale: f64,
}

impl GlmArm {
    /// Rates that bring normal-image training to R² ≈ 0.5 by session 30 on
    /// the bundled 28×28 synthetic corpus.
    pub fn desk(kind: ActivationKind) -> Self {
        let (learning_rate, momentum) = match kind {
            ActivationKind::Linear => (1e-10, 0.99),
            ActivationKind::Relu => (4.5e-10, 0.99),
            ActivationKind::Sigmoid => (0.06, 0.7),
        };
        GlmArm {
            activation: kind,
            learning_rate,
            momentum,
            pre_scale: 1000.0,
        }
    }

    pub fn activation(&self) -> Result<Activation> {
        match self.activation {
            ActivationKind::Sigmoid => Activation::new(self.activation, self.pre_scale),
            k => Ok(Activation::plain(k)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmExperiment {
    pub arms: Vec<GlmArm>,
    pub strategies: Vec<String>,
    pub seeds: Vec<u64>,
    /// Protocol settings; the arm overrides rate, momentum and seed.
    pub train: TrainConfig,
    pub heldout: usize,
    /// `None` uses the standard filter for the image size.
    pub gabor: Option<GaborParams>,
    pub noise: NoiseModel,
    pub threads: usize,
}

impl Default for GlmExperiment {
    fn default() -> Self {
        GlmExperiment {
            arms: [
                ActivationKind::Linear,
                ActivationKind::Relu,
                ActivationKind::Sigmoid,
            ]
            .into_iter()
            .map(GlmArm::desk)
            .collect(),
            strategies: vec!["normal".into(), "gaudy".into()],
            seeds: (0..5).collect(),
            train: TrainConfig {
                mix_fraction: 1.0,
                ..TrainConfig::default()
            },
            heldout: 4000,
            gabor: None,
            noise: NoiseModel::noiseless(),
            threads: 1,
        }
    }
}

/// Cosine similarity of learned to true filter at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineRow {
    pub strategy: String,
    pub activation: String,
    pub seed: u64,
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmReport {
    pub table: ResultTable,
    pub cosines: Vec<CosineRow>,
}

/// Trains GLMs against a Gabor ground truth of the same activation, for
/// every arm, strategy and seed. Color images are converted to grayscale.
pub fn run_glm(exp: &GlmExperiment, images: &[Image]) -> Result<GlmReport> {
    run_glm_with(exp, images, &NoStore)
}

/// [`run_glm`] with runs saved to and continued from `store`.
pub fn run_glm_with(
    exp: &GlmExperiment,
    images: &[Image],
    store: &dyn RunStore,
) -> Result<GlmReport> {
    let first = images.first().ok_or(Error::Empty("GLM corpus"))?;
    let side = first.width();
    if first.height() != side {
        return Err(Error::InvalidArgument(format!(
            "GLM images must be square, got {}x{}",
            side,
            first.height()
        )));
    }
    let gray: Vec<Image> = images
        .iter()
        .map(|i| {
            if i.channels() == 1 {
                i.clone()
            } else {
                to_grayscale(i)
            }
        })
        .collect();
    let filter = gabor_filter(&exp.gabor.unwrap_or_else(|| GaborParams::standard(side)))?;
    let registry = StrategyRegistry::default();
    let strategies = exp
        .strategies
        .iter()
        .map(|s| registry.build(s))
        .collect::<Result<Vec<_>>>()?;
    let mut report = GlmReport {
        table: ResultTable::default(),
        cosines: Vec::new(),
    };
    for arm in &exp.arms {
        let act = arm.activation()?;
        let teacher = GaborTeacher::new(&filter, act, exp.noise);
        let data = Dataset::new(gray.clone(), &teacher, exp.heldout, 0)?;
        let jobs: Vec<(usize, u64)> = (0..strategies.len())
            .flat_map(|s| exp.seeds.iter().map(move |&seed| (s, seed)))
            .collect();
        let key = |s: usize| RunKey {
            experiment: "glm".into(),
            strategy: strategies[s].name(),
            activation: arm.activation.tag().into(),
            param: String::new(),
        };
        let results = parallel_map(&jobs, exp.threads, |&(s, seed)| -> Result<_> {
            let cfg = TrainConfig {
                learning_rate: arm.learning_rate,
                momentum: arm.momentum,
                seed,
                ..exp.train.clone()
            };
            let mut init = Stream::new(seed).child(0, tag::INIT);
            let mut model = Glm::random(teacher.truth.dim(), act, &mut init);
            let key = key(s);
            let out = run_experiment(
                &cfg,
                strategies[s].as_ref(),
                &data,
                &teacher,
                &mut model,
                store.load(&key, seed)?,
                &mut |snap| store.save(&key, seed, snap),
            )?;
            let cosine = model.weights.dot(&teacher.truth.weights)
                / (model.weights.norm() * teacher.truth.weights.norm());
            Ok((out, cosine))
        });
        for (&(s, seed), res) in jobs.iter().zip(results) {
            let (out, cosine) = res?;
            let key = key(s);
            report.table.push_run(&key, seed, &out);
            report.cosines.push(CosineRow {
                strategy: key.strategy,
                activation: key.activation,
                seed,
                cosine,
            });
        }
    }
    Ok(report)
}
