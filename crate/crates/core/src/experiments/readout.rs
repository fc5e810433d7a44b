use serde::{Deserialize, Serialize};

use super::table::{ResultTable, RunKey};
use super::{parallel_map, NoStore, RunStore};
use crate::active::{
    pool_disagreement, run_experiment, Dataset, DisagreementScore, Ensemble, RunOutcome,
    SessionModel, StrategyParams, StrategyRegistry,
};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::models::{
    make_ground_truth, r_squared, Activation, ActivationKind, GroundTruth, GroundTruthConfig,
    TrainConfig,
};
use crate::rng::{tag, Stream};
use crate::stats::pearson;

/// Frozen ground truth plus the corpus with cached features and responses.
#[derive(Debug, Clone)]
pub struct ReadoutSetup {
    pub ground_truth: GroundTruth,
    pub dataset: Dataset,
}

impl ReadoutSetup {
    /// Fits the ground truth's PCA readout on the first `reference` images
    /// and holds out the first `heldout` images for evaluation.
    pub fn build(
        images: Vec<Image>,
        config: &GroundTruthConfig,
        seed: u64,
        reference: usize,
        heldout: usize,
    ) -> Result<Self> {
        if reference > images.len() {
            return Err(Error::CorpusTooSmall(format!(
                "{} images cannot supply a reference set of {reference}",
                images.len()
            )));
        }
        let ground_truth = make_ground_truth(seed, config, &images[..reference])?;
        let dataset = Dataset::new(images, &ground_truth, heldout, seed)?;
        Ok(ReadoutSetup {
            ground_truth,
            dataset,
        })
    }
}

/// Readout network shape; `ensemble = 1` is a single network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutArch {
    pub activation: ActivationKind,
    pub width: usize,
    pub depth: usize,
    pub ensemble: usize,
}

impl ReadoutArch {
    /// Learning rate that leaves normal-image training well short of its
    /// plateau after 20 to 30 sessions on the bundled synthetic setup.
    pub fn desk_learning_rate(kind: ActivationKind) -> f64 {
        match kind {
            ActivationKind::Relu => 0.05,
            ActivationKind::Sigmoid => 0.3,
            ActivationKind::Linear => 0.01,
        }
    }
}

impl Default for ReadoutArch {
    fn default() -> Self {
        ReadoutArch {
            activation: ActivationKind::Relu,
            width: 128,
            depth: 2,
            ensemble: 1,
        }
    }
}

/// One training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutJob {
    pub experiment: String,
    pub strategy: String,
    pub param: String,
    pub arch: ReadoutArch,
    pub train: TrainConfig,
}

impl ReadoutJob {
    pub fn key(&self) -> RunKey {
        RunKey {
            experiment: self.experiment.clone(),
            strategy: self.strategy.clone(),
            activation: self.arch.activation.tag().into(),
            param: self.param.clone(),
        }
    }
}

/// Trains one readout (or ensemble) and returns its curve and final state.
/// Members are initialized from `train.seed`, so runs that differ only in
/// strategy start from the same weights. A state held by `store` is
/// continued rather than restarted.
pub fn run_readout(
    setup: &ReadoutSetup,
    job: &ReadoutJob,
    params: StrategyParams,
    store: &dyn RunStore,
) -> Result<(RunOutcome, Ensemble)> {
    let strategy = StrategyRegistry::new(params).build(&job.strategy)?;
    let gt = &setup.ground_truth;
    let root = Stream::new(job.train.seed).child(0, tag::INIT);
    let mut model = Ensemble::readouts(
        job.arch.ensemble,
        gt.config.feature_dim,
        job.arch.width,
        job.arch.depth,
        gt.config.n_neurons,
        Activation::plain(job.arch.activation),
        &root,
    )?;
    let key = job.key();
    let seed = job.train.seed;
    let out = run_experiment(
        &job.train,
        strategy.as_ref(),
        &setup.dataset,
        gt,
        &mut model,
        store.load(&key, seed)?,
        &mut |snap| store.save(&key, seed, snap),
    )?;
    Ok((out, model))
}

/// Runs every job and collects the curves in job order.
pub fn run_readouts(
    setup: &ReadoutSetup,
    jobs: &[ReadoutJob],
    params: StrategyParams,
    threads: usize,
) -> Result<ResultTable> {
    let results = parallel_map(jobs, threads, |job| {
        run_readout(setup, job, params, &NoStore).map(|(out, _)| out)
    });
    let mut table = ResultTable::default();
    for (job, res) in jobs.iter().zip(results) {
        table.push_run(&job.key(), job.train.seed, &res?);
    }
    Ok(table)
}

/// One heldout image's true and predicted response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub neuron: usize,
    pub image: usize,
    pub truth: f64,
    pub prediction: f64,
}

/// Heldout truth/prediction pairs for the neuron with the median R²
/// (the lower middle neuron for an even count).
pub fn median_neuron_scatter(
    model: &dyn SessionModel,
    dataset: &Dataset,
) -> Result<Vec<ScatterRow>> {
    let pred = model.predict(&dataset.heldout_inputs)?;
    let r2 = r_squared(&pred, &dataset.heldout_responses)?;
    let mut order: Vec<(usize, f64)> = r2
        .per_neuron
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    if order.is_empty() {
        return Err(Error::Empty("neurons with defined R²"));
    }
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let neuron = order[(order.len() - 1) / 2].0;
    Ok(dataset
        .heldout
        .iter()
        .enumerate()
        .map(|(j, &image)| ScatterRow {
            neuron,
            image,
            truth: dataset.heldout_responses[(neuron, j)],
            prediction: pred[(neuron, j)],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementRow {
    pub image: usize,
    pub disagreement: f64,
    /// Euclidean distance between the ensemble prediction and the truth.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisagreementReport {
    pub rows: Vec<DisagreementRow>,
    pub pearson: f64,
}

impl DisagreementReport {
    pub fn scores(&self) -> Vec<DisagreementScore> {
        self.rows
            .iter()
            .map(|r| DisagreementScore {
                id: r.image,
                score: r.disagreement,
            })
            .collect()
    }
}

/// Ensemble disagreement against prediction error on the first `n`
/// heldout images.
pub fn disagreement_vs_error(
    ensemble: &Ensemble,
    dataset: &Dataset,
    n: usize,
) -> Result<DisagreementReport> {
    let n = n.min(dataset.heldout.len());
    let ids: Vec<usize> = (0..n).collect();
    let x = dataset.heldout_inputs.select_columns(&ids);
    let y = dataset.heldout_responses.select_columns(&ids);
    let dis = pool_disagreement(&ensemble.members, &x)?;
    let pred = ensemble.predict(&x)?;
    let rows: Vec<DisagreementRow> = (0..n)
        .map(|j| DisagreementRow {
            image: dataset.heldout[j],
            disagreement: dis[j],
            error: (pred.column(j) - y.column(j)).norm(),
        })
        .collect();
    let d: Vec<f64> = rows.iter().map(|r| r.disagreement).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(DisagreementReport {
        pearson: pearson(&d, &e)?,
        rows,
    })
}
