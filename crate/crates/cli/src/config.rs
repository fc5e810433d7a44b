//! Experiment configuration: a TOML file with one section per concern.
//!
//! Every key is optional. Unset protocol keys fall back to per-experiment
//! defaults, and command-line flags override the file.

use std::path::{Path, PathBuf};

use gaudy_core::active::{StrategyParams, StrategyRegistry};
use gaudy_core::corpus::{load_corpus_dir, synthetic_corpus, CorpusConfig};
use gaudy_core::image::Image;
use gaudy_core::models::{ActivationKind, TrainConfig};
use gaudy_core::rng::{derive_seed, tag};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Glm,
    Readout,
    AlCompare,
    TransformScan,
    OedScan,
}

impl Kind {
    pub fn verb(self) -> &'static str {
        match self {
            Kind::Glm => "glm",
            Kind::Readout => "readout",
            Kind::AlCompare => "al-compare",
            Kind::TransformScan => "transform",
            Kind::OedScan => "oed-scan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    /// Experiment seed; required here or via `--seed`.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Independent runs per arm, each with its own derived seed.
    pub runs: Option<usize>,
    pub strategies: Option<Vec<String>>,
    /// Save resumable run state every this many sessions; 0 disables.
    pub checkpoint_every: Option<usize>,
    pub corpus: CorpusSection,
    pub train: TrainSection,
    pub transform: TransformSection,
    pub ground_truth: GroundTruthSection,
    pub readout: ReadoutSection,
    pub al: AlSection,
    pub glm: GlmSection,
    pub oed: OedSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSection {
    /// Directory of PGM/PPM images; the synthetic corpus is used when unset.
    pub path: Option<PathBuf>,
    /// Images to use; derived from the protocol when unset.
    pub size: Option<usize>,
    pub side: usize,
    pub seed: u64,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            path: None,
            size: None,
            side: 28,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub sessions: Option<usize>,
    pub images_per_session: Option<usize>,
    pub epochs_per_session: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub mix_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
    /// Image file or directory to transform.
    pub input: Option<PathBuf>,
    /// Transform names, with or without a `:param` suffix.
    pub names: Vec<String>,
    pub sigma: Option<f64>,
    pub percent: Option<f64>,
    pub contrast: Option<f64>,
    pub variant: Option<String>,
}

impl Default for TransformSection {
    fn default() -> Self {
        TransformSection {
            input: None,
            names: vec!["gaudy".into()],
            sigma: None,
            percent: None,
            contrast: None,
            variant: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundTruthSection {
    /// Leading images used to fit the ground truth's PCA readout.
    pub reference: usize,
    /// Leading images held out for evaluation.
    pub heldout: usize,
    pub feature_dim: usize,
    pub neurons: usize,
    pub noise_variance: f64,
}

impl Default for GroundTruthSection {
    fn default() -> Self {
        GroundTruthSection {
            reference: 5000,
            heldout: 2000,
            feature_dim: 256,
            neurons: 100,
            noise_variance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutSection {
    pub activations: Vec<ActivationKind>,
    pub width: usize,
    pub depth: usize,
    pub ensemble: usize,
    /// Also train a single linear layer on the features.
    pub linear: bool,
    /// Emit truth/prediction pairs for the median neuron.
    pub scatter: bool,
    /// Special images per session, e.g. `[0, 250, 500]`.
    pub mix_sweep: Vec<usize>,
    pub depth_sweep: Vec<usize>,
    /// Edge percentiles for top- and bottom-edge strategies.
    pub edge_sweep: Vec<f64>,
    /// Smoothing sigmas applied after the gaudy transform.
    pub smoothing_sweep: Vec<f64>,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        ReadoutSection {
            activations: vec![ActivationKind::Relu, ActivationKind::Sigmoid],
            width: 128,
            depth: 2,
            ensemble: 1,
            linear: false,
            scatter: true,
            mix_sweep: Vec::new(),
            depth_sweep: Vec::new(),
            edge_sweep: Vec::new(),
            smoothing_sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlSection {
    pub activation: ActivationKind,
    pub ensemble: usize,
    pub ensemble_sweep: Vec<usize>,
    pub pool: usize,
    pub shortlist: usize,
    /// Heldout images in the disagreement-versus-error scatter.
    pub disagreement_images: usize,
    /// Sessions of normal training before the scatter is taken.
    pub disagreement_sessions: usize,
}

impl Default for AlSection {
    fn default() -> Self {
        let p = StrategyParams::default();
        AlSection {
            activation: ActivationKind::Relu,
            ensemble: 25,
            ensemble_sweep: Vec::new(),
            pool: p.pool,
            shortlist: p.shortlist,
            disagreement_images: 500,
            disagreement_sessions: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlmSection {
    pub activations: Vec<ActivationKind>,
    pub heldout: usize,
    pub noise_variance: f64,
}

impl Default for GlmSection {
    fn default() -> Self {
        GlmSection {
            activations: vec![
                ActivationKind::Linear,
                ActivationKind::Relu,
                ActivationKind::Sigmoid,
            ],
            heldout: 4000,
            noise_variance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OedSection {
    pub reference: usize,
    pub candidates: usize,
    pub components: usize,
    pub ridge: f64,
    pub permutations: usize,
}

impl Default for OedSection {
    fn default() -> Self {
        OedSection {
            reference: 2000,
            candidates: 1000,
            components: 200,
            ridge: gaudy_core::oed::DEFAULT_RIDGE,
            permutations: 10_000,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Applies overrides, checks the kind matches the verb, and fills in
    /// every per-experiment default so the result is fully explicit.
    pub fn resolve(mut self, kind: Kind, o: &Overrides) -> Result<Self> {
        match self.kind {
            Some(k) if k != kind => {
                return Err(CliError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    k.verb(),
                    kind.verb()
                )))
            }
            _ => self.kind = Some(kind),
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if self.seed.is_none() {
            return Err(CliError::Config(
                "a seed is required (`seed = N` in the config or --seed N)".into(),
            ));
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        if self.out.is_none() {
            self.out = Some(PathBuf::from("out").join(kind.verb()));
        }
        if o.threads.is_some() {
            self.threads = o.threads;
        }
        let threads = self.threads.get_or_insert(1);
        *threads = (*threads).max(1);
        self.runs.get_or_insert(5);
        self.checkpoint_every.get_or_insert(1);
        if self.strategies.is_none() {
            let names: &[&str] = match kind {
                Kind::AlCompare => &["normal", "gaudy", "pool-ensdis", "coreset"],
                _ => &["normal", "gaudy"],
            };
            self.strategies = Some(names.iter().map(|s| s.to_string()).collect());
        }
        let t = &mut self.train;
        t.sessions.get_or_insert(match kind {
            Kind::Glm => 30,
            _ => 20,
        });
        t.images_per_session.get_or_insert(500);
        let base = TrainConfig::default();
        t.epochs_per_session.get_or_insert(base.epochs_per_session);
        t.batch_size.get_or_insert(base.batch_size);
        t.mix_fraction.get_or_insert(match kind {
            Kind::Glm => 1.0,
            _ => base.mix_fraction,
        });
        if self.corpus.size.is_none() {
            self.corpus.size = Some(self.default_corpus_size(kind));
        }
        self.validate(kind)?;
        Ok(self)
    }

    /// Enough images for the heldout set, every session's draws, and (for
    /// the pool strategies) pools that stay a small share of what is left.
    fn default_corpus_size(&self, kind: Kind) -> usize {
        let drawn = self.sessions() * self.images_per_session();
        let gt = &self.ground_truth;
        match kind {
            Kind::Glm => self.glm.heldout + drawn + 1000,
            Kind::Readout => gt.reference.max(gt.heldout + drawn + 4000),
            Kind::AlCompare => gt.reference.max(gt.heldout + drawn + 7 * self.al.pool),
            Kind::OedScan => self.oed.reference + self.oed.candidates,
            Kind::TransformScan => 0,
        }
    }

    fn validate(&self, kind: Kind) -> Result<()> {
        if let Some(p) = &self.corpus.path {
            if !p.is_dir() {
                return Err(CliError::Config(format!(
                    "corpus directory {} does not exist",
                    p.display()
                )));
            }
        }
        if kind == Kind::TransformScan {
            match &self.transform.input {
                Some(p) if p.exists() => {}
                Some(p) => {
                    return Err(CliError::Config(format!(
                        "transform input {} does not exist",
                        p.display()
                    )))
                }
                None => return Err(CliError::Config("transform needs an input path".into())),
            }
        }
        if self.runs() == 0 {
            return Err(CliError::Config("runs must be >= 1".into()));
        }
        if kind == Kind::AlCompare && self.al.ensemble < 2 {
            return Err(CliError::Config(format!(
                "al-compare needs an ensemble of at least 2, got {}",
                self.al.ensemble
            )));
        }
        if matches!(kind, Kind::Glm | Kind::Readout | Kind::AlCompare) {
            self.train_config(None, 0).validate()?;
            let registry = StrategyRegistry::new(self.strategy_params());
            for s in self.strategies() {
                registry.build(s)?;
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("resolved config has a seed")
    }

    pub fn out(&self) -> &Path {
        self.out
            .as_deref()
            .expect("resolved config has an output directory")
    }

    pub fn threads(&self) -> usize {
        self.threads.unwrap_or(1)
    }

    pub fn runs(&self) -> usize {
        self.runs.unwrap_or(5)
    }

    pub fn checkpoint_every(&self) -> usize {
        self.checkpoint_every.unwrap_or(1)
    }

    pub fn strategies(&self) -> &[String] {
        self.strategies.as_deref().unwrap_or(&[])
    }

    pub fn sessions(&self) -> usize {
        self.train.sessions.unwrap_or(20)
    }

    pub fn images_per_session(&self) -> usize {
        self.train.images_per_session.unwrap_or(500)
    }

    /// Seed of run `i`, derived from the experiment seed.
    pub fn run_seed(&self, i: usize) -> u64 {
        derive_seed(self.seed(), i as u64, tag::RUN)
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.runs()).map(|i| self.run_seed(i)).collect()
    }

    pub fn strategy_params(&self) -> StrategyParams {
        StrategyParams {
            pool: self.al.pool,
            shortlist: self.al.shortlist,
        }
    }

    /// Protocol for one run. `rate` is the fallback learning rate when the
    /// config leaves it unset.
    pub fn train_config(&self, rate: Option<f64>, seed: u64) -> TrainConfig {
        let base = TrainConfig::default();
        let t = &self.train;
        TrainConfig {
            sessions: self.sessions(),
            images_per_session: self.images_per_session(),
            epochs_per_session: t.epochs_per_session.unwrap_or(base.epochs_per_session),
            batch_size: t.batch_size.unwrap_or(base.batch_size),
            learning_rate: t.learning_rate.or(rate).unwrap_or(base.learning_rate),
            momentum: t.momentum.unwrap_or(base.momentum),
            mix_fraction: t.mix_fraction.unwrap_or(base.mix_fraction),
            seed,
        }
    }

    /// Loads the corpus directory or generates the synthetic corpus.
    pub fn load_corpus(&self) -> Result<Vec<Image>> {
        let size = self.corpus.size.unwrap_or(0);
        let images = match &self.corpus.path {
            Some(dir) => {
                let mut all = load_corpus_dir(dir, self.corpus.side, self.corpus.seed)?;
                if size > 0 && all.len() > size {
                    all.truncate(size);
                }
                all
            }
            None => synthetic_corpus(&CorpusConfig {
                size,
                side: self.corpus.side,
                seed: self.corpus.seed,
            }),
        };
        log::info!("corpus: {} images at {}px", images.len(), self.corpus.side);
        Ok(images)
    }
}
