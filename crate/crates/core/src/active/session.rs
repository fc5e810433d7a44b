use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::state::RunState;
use super::strategy::{BatchStrategy, SelectionContext};
use super::BatchPlan;
use crate::error::{Error, Result};
use crate::image::{Image, DEFAULT_OFFSET};
use crate::models::{
    r_squared, Activation, Checkpoint, Glm, GroundTruth, Mlp, RSquared, TrainConfig,
};
use crate::oed::NoiseModel;
use crate::rng::{tag, Stream};

/// Source of ground-truth responses.
pub trait Teacher: Send + Sync {
    /// Model inputs and responses for `images`, one column per image.
    fn observe(&self, images: &[Image], rng: &mut Stream) -> Result<(DMatrix<f64>, DMatrix<f64>)>;
}

/// A Gabor GLM over re-centered grayscale pixels.
#[derive(Debug, Clone)]
pub struct GaborTeacher {
    pub truth: Glm,
    pub noise: NoiseModel,
}

impl GaborTeacher {
    /// Wraps a `side × side` filter, flattened row-major to match pixel order.
    pub fn new(filter: &DMatrix<f64>, activation: Activation, noise: NoiseModel) -> Self {
        let w = nalgebra::DVector::from_row_slice(filter.transpose().as_slice());
        GaborTeacher {
            truth: Glm::new(w, activation),
            noise,
        }
    }

    pub fn encode(&self, images: &[Image]) -> Result<DMatrix<f64>> {
        let k = self.truth.dim();
        let mut x = DMatrix::zeros(k, images.len());
        for (j, img) in images.iter().enumerate() {
            if img.channels() != 1 || img.data().len() != k {
                return Err(Error::InvalidArgument(format!(
                    "GLM expects {k}-pixel grayscale images, got {}x{}x{}",
                    img.width(),
                    img.height(),
                    img.channels()
                )));
            }
            for (i, &p) in img.data().iter().enumerate() {
                x[(i, j)] = f64::from(p) - DEFAULT_OFFSET;
            }
        }
        Ok(x)
    }
}

fn add_noise(y: &mut DMatrix<f64>, noise: &NoiseModel, rng: &mut Stream) {
    let sd = noise.variance().sqrt();
    if sd > 0.0 {
        y.iter_mut().for_each(|v| *v += sd * rng.normal());
    }
}

impl Teacher for GaborTeacher {
    fn observe(&self, images: &[Image], rng: &mut Stream) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let x = self.encode(images)?;
        let mut y = self.truth.forward_batch(&x)?;
        add_noise(&mut y, &self.noise, rng);
        Ok((x, y))
    }
}

impl Teacher for GroundTruth {
    fn observe(&self, images: &[Image], rng: &mut Stream) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (x, mut y) = self.features_and_responses(images)?;
        self.add_noise(&mut y, rng);
        Ok((x, y))
    }
}

/// A corpus with cached inputs and responses for every normal image and a
/// fixed heldout split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Vec<Image>,
    /// Model inputs, one column per corpus id.
    pub inputs: DMatrix<f64>,
    pub responses: DMatrix<f64>,
    /// The first `heldout` corpus ids.
    pub heldout: Vec<usize>,
    pub heldout_inputs: DMatrix<f64>,
    pub heldout_responses: DMatrix<f64>,
}

const ENCODE_CHUNK: usize = 1000;

impl Dataset {
    pub fn new(
        images: Vec<Image>,
        teacher: &dyn Teacher,
        heldout: usize,
        seed: u64,
    ) -> Result<Self> {
        if heldout >= images.len() {
            return Err(Error::CorpusTooSmall(format!(
                "{} images cannot supply {heldout} heldout images plus training images",
                images.len()
            )));
        }
        let mut rng = Stream::new(seed).child(0, tag::NOISE);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for chunk in images.chunks(ENCODE_CHUNK) {
            let (x, y) = teacher.observe(chunk, &mut rng)?;
            xs.push(x);
            ys.push(y);
        }
        let inputs = hcat(&xs);
        let responses = hcat(&ys);
        let held: Vec<usize> = (0..heldout).collect();
        Ok(Dataset {
            heldout_inputs: inputs.select_columns(&held),
            heldout_responses: responses.select_columns(&held),
            heldout: held,
            images,
            inputs,
            responses,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Corpus ids available for training.
    pub fn train_ids(&self) -> Vec<usize> {
        (self.heldout.len()..self.len()).collect()
    }
}

fn hcat(parts: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts.first().map_or(0, |p| p.nrows());
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for p in parts {
        out.columns_mut(c, p.ncols()).copy_from(p);
        c += p.ncols();
    }
    out
}

/// Draws corpus ids without replacement over a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct IdSampler {
    remaining: Vec<usize>,
    rng: Stream,
}

impl IdSampler {
    pub fn new(ids: Vec<usize>, rng: Stream) -> Self {
        IdSampler {
            remaining: ids,
            rng,
        }
    }

    pub fn remaining(&self) -> usize {
        self.remaining.len()
    }

    /// Unused ids in their internal order, and the draw stream.
    pub fn parts(&self) -> (&[usize], &Stream) {
        (&self.remaining, &self.rng)
    }

    /// Removes and returns `n` uniformly chosen ids.
    pub fn draw(&mut self, n: usize) -> Result<Vec<usize>> {
        if n > self.remaining.len() {
            return Err(Error::CorpusTooSmall(format!(
                "corpus exhausted: need {n} more images, {} remain",
                self.remaining.len()
            )));
        }
        Ok((0..n)
            .map(|_| {
                let j = self.rng.below(self.remaining.len());
                self.remaining.swap_remove(j)
            })
            .collect())
    }

    /// A fresh random pool of up to `n` unused ids; nothing is removed.
    pub fn pool(&mut self, n: usize) -> Vec<usize> {
        let n = if n > self.remaining.len() {
            log::warn!(
                "pool of {n} requested but only {} unused images remain",
                self.remaining.len()
            );
            self.remaining.len()
        } else {
            n
        };
        self.rng
            .sample_distinct(self.remaining.len(), n)
            .into_iter()
            .map(|j| self.remaining[j])
            .collect()
    }

    /// Removes `ids` from the unused set.
    pub fn consume(&mut self, ids: &[usize]) {
        let gone: HashSet<usize> = ids.iter().copied().collect();
        self.remaining.retain(|id| !gone.contains(id));
    }
}

/// A trainable predictor driven session by session.
pub trait SessionModel {
    /// One session of training; returns the final-epoch loss.
    fn train(
        &mut self,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        cfg: &TrainConfig,
        rng: &mut Stream,
    ) -> Result<f64>;
    fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>>;
    /// Ensemble members, empty for single models.
    fn members(&self) -> &[Mlp] {
        &[]
    }
    fn checkpoint(&self) -> Checkpoint;
    /// Private streams the model advances while training.
    fn streams(&self) -> Vec<Stream> {
        Vec::new()
    }
    /// Replaces parameters and streams with a saved state of the same shape.
    fn restore(&mut self, ckpt: &Checkpoint, streams: &[Stream]) -> Result<()>;
}

fn mismatch(what: &str) -> Error {
    Error::Checkpoint(format!("saved model does not match the configured {what}"))
}

fn same_shape(a: &Mlp, b: &Mlp) -> bool {
    a.layers().len() == b.layers().len()
        && a.layers().iter().zip(b.layers()).all(|(x, y)| {
            x.inputs() == y.inputs() && x.outputs() == y.outputs() && x.activation == y.activation
        })
}

impl SessionModel for Glm {
    fn train(
        &mut self,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        cfg: &TrainConfig,
        rng: &mut Stream,
    ) -> Result<f64> {
        if y.nrows() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: y.nrows(),
            });
        }
        self.train_session(x, y.as_slice(), cfg, rng)
    }
    fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.forward_batch(x)
    }
    fn checkpoint(&self) -> Checkpoint {
        Checkpoint::Glm(self.clone())
    }
    fn restore(&mut self, ckpt: &Checkpoint, streams: &[Stream]) -> Result<()> {
        match ckpt {
            Checkpoint::Glm(g)
                if g.dim() == self.dim()
                    && g.activation == self.activation
                    && streams.is_empty() =>
            {
                *self = g.clone();
                Ok(())
            }
            _ => Err(mismatch("GLM")),
        }
    }
}

impl SessionModel for Mlp {
    fn train(
        &mut self,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        cfg: &TrainConfig,
        rng: &mut Stream,
    ) -> Result<f64> {
        self.train_session(x, y, cfg, rng)
    }
    fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.forward_batch(x)
    }
    fn checkpoint(&self) -> Checkpoint {
        Checkpoint::Mlp(self.clone())
    }
    fn restore(&mut self, ckpt: &Checkpoint, streams: &[Stream]) -> Result<()> {
        match ckpt {
            Checkpoint::Mlp(m) if same_shape(m, self) && streams.is_empty() => {
                *self = m.clone();
                Ok(())
            }
            _ => Err(mismatch("network")),
        }
    }
}

/// Independently initialized readouts trained on the same batches; the
/// prediction is the member mean.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub members: Vec<Mlp>,
    streams: Vec<Stream>,
}

impl Ensemble {
    /// `size` readouts, each seeded from its own member stream of `root`.
    pub fn readouts(
        size: usize,
        input_dim: usize,
        width: usize,
        depth: usize,
        output_dim: usize,
        activation: Activation,
        root: &Stream,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("ensemble size must be >= 1".into()));
        }
        let mut members = Vec::with_capacity(size);
        let mut streams = Vec::with_capacity(size);
        for m in 0..size {
            let member = root.child(m as u64, tag::MEMBER);
            let mut init = member.child(0, tag::INIT);
            members.push(Mlp::readout(
                input_dim, width, depth, output_dim, activation, &mut init,
            ));
            streams.push(member.child(0, tag::SHUFFLE));
        }
        Ok(Ensemble { members, streams })
    }
}

impl SessionModel for Ensemble {
    /// Each member shuffles with its own stream; `rng` is unused.
    fn train(
        &mut self,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        cfg: &TrainConfig,
        _rng: &mut Stream,
    ) -> Result<f64> {
        let mut total = 0.0;
        for (m, s) in self.members.iter_mut().zip(&mut self.streams) {
            total += m.train_session(x, y, cfg, s)?;
        }
        Ok(total / self.members.len() as f64)
    }
    fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        crate::models::ensemble_predict(&self.members, x)
    }
    fn members(&self) -> &[Mlp] {
        &self.members
    }
    fn checkpoint(&self) -> Checkpoint {
        Checkpoint::Ensemble(self.members.clone())
    }
    fn streams(&self) -> Vec<Stream> {
        self.streams.clone()
    }
    fn restore(&mut self, ckpt: &Checkpoint, streams: &[Stream]) -> Result<()> {
        match ckpt {
            Checkpoint::Ensemble(members)
                if members.len() == self.members.len()
                    && streams.len() == self.streams.len()
                    && members
                        .iter()
                        .zip(&self.members)
                        .all(|(a, b)| same_shape(a, b)) =>
            {
                self.members = members.clone();
                self.streams = streams.to_vec();
                Ok(())
            }
            _ => Err(mismatch("ensemble")),
        }
    }
}

/// Normal images first, then the strategy's share.
pub fn compose_session_batch(
    strategy: &dyn BatchStrategy,
    cfg: &TrainConfig,
    ctx: &mut SelectionContext,
) -> Result<BatchPlan> {
    cfg.validate()?;
    let special = cfg.special_count();
    let normal_ids = ctx.sampler.draw(cfg.images_per_session - special)?;
    let special_ids = strategy.select(special, ctx)?;
    Ok(BatchPlan {
        session: ctx.session,
        normal_ids,
        special_ids,
    })
}

/// Heldout performance after one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    /// 1-based.
    pub session: usize,
    pub mean_r2: f64,
    pub median_r2: f64,
    pub min_r2: f64,
    pub max_r2: f64,
    pub train_loss: f64,
    pub normal_images: usize,
    pub special_images: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// The untrained model, logged as session 0 with a NaN loss.
    pub baseline: SessionLog,
    pub logs: Vec<SessionLog>,
}

impl RunOutcome {
    /// Mean R² after the last session, or the baseline if none ran.
    pub fn final_r2(&self) -> f64 {
        self.logs.last().unwrap_or(&self.baseline).mean_r2
    }
}

fn session_log(session: usize, r2: &RSquared, loss: f64, plan: Option<&BatchPlan>) -> SessionLog {
    SessionLog {
        session,
        mean_r2: r2.mean,
        median_r2: r2.median(),
        min_r2: r2.min(),
        max_r2: r2.max(),
        train_loss: loss,
        normal_images: plan.map_or(0, |p| p.normal_ids.len()),
        special_images: plan.map_or(0, |p| p.special_ids.len()),
    }
}

/// A run between sessions, as seen by the `on_session` callback.
pub struct Snapshot<'a> {
    baseline: &'a SessionLog,
    logs: &'a [SessionLog],
    model: &'a dyn SessionModel,
    sampler: &'a IdSampler,
    shuffle: &'a Stream,
    noise: &'a Stream,
    trained: &'a [usize],
}

impl Snapshot<'_> {
    /// The session just completed.
    pub fn log(&self) -> &SessionLog {
        self.logs.last().expect("snapshots follow a session")
    }

    /// Completed sessions.
    pub fn sessions(&self) -> usize {
        self.logs.len()
    }

    /// Owned copy of everything needed to resume from here.
    pub fn state(&self) -> RunState {
        RunState {
            baseline: self.baseline.clone(),
            logs: self.logs.to_vec(),
            model: self.model.checkpoint(),
            model_streams: self.model.streams(),
            sampler: self.sampler.clone(),
            shuffle: self.shuffle.clone(),
            noise: self.noise.clone(),
            trained: self.trained.to_vec(),
        }
    }
}

/// Rejects a saved state that cannot belong to this dataset and protocol.
fn check_resume(state: &RunState, cfg: &TrainConfig, dataset: &Dataset) -> Result<()> {
    if state.sessions() > cfg.sessions {
        return Err(Error::Checkpoint(format!(
            "saved run has {} sessions but only {} are configured",
            state.sessions(),
            cfg.sessions
        )));
    }
    let train: HashSet<usize> = dataset.train_ids().into_iter().collect();
    let (remaining, _) = state.sampler.parts();
    if !remaining
        .iter()
        .chain(&state.trained)
        .all(|id| train.contains(id))
    {
        return Err(Error::Checkpoint(
            "saved run refers to images outside the training set".into(),
        ));
    }
    Ok(())
}

/// Runs `cfg.sessions` sessions of compose, observe, train and evaluate.
///
/// Sampling, shuffling and response noise use streams derived from
/// `cfg.seed`; the model is initialized by the caller. With `resume` the
/// run continues from a saved state instead, and finishes bit-identical to
/// an uninterrupted run. `on_session` sees every session as soon as it
/// completes, so progress survives a later failure.
pub fn run_experiment(
    cfg: &TrainConfig,
    strategy: &dyn BatchStrategy,
    dataset: &Dataset,
    teacher: &dyn Teacher,
    model: &mut dyn SessionModel,
    resume: Option<RunState>,
    on_session: &mut dyn FnMut(&Snapshot) -> Result<()>,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let evaluate = |model: &dyn SessionModel| -> Result<_> {
        r_squared(
            &model.predict(&dataset.heldout_inputs)?,
            &dataset.heldout_responses,
        )
    };
    let (baseline, mut logs, mut sampler, mut shuffle, mut noise, mut trained) = match resume {
        Some(state) => {
            check_resume(&state, cfg, dataset)?;
            model.restore(&state.model, &state.model_streams)?;
            (
                state.baseline,
                state.logs,
                state.sampler,
                state.shuffle,
                state.noise,
                state.trained,
            )
        }
        None => {
            let root = Stream::new(cfg.seed);
            (
                session_log(0, &evaluate(&*model)?, f64::NAN, None),
                Vec::with_capacity(cfg.sessions),
                IdSampler::new(dataset.train_ids(), root.child(0, tag::SAMPLE)),
                root.child(0, tag::SHUFFLE),
                root.child(0, tag::NOISE),
                Vec::new(),
            )
        }
    };
    for session in logs.len()..cfg.sessions {
        let plan = {
            let mut ctx = SelectionContext {
                session,
                dataset,
                model: &*model,
                trained: &trained,
                sampler: &mut sampler,
            };
            compose_session_batch(strategy, cfg, &mut ctx)?
        };
        let (x, y) = session_data(&plan, strategy, dataset, teacher, &mut noise)?;
        let loss = model.train(&x, &y, cfg, &mut shuffle)?;
        trained.extend_from_slice(&plan.normal_ids);
        if strategy.transform().is_none() {
            trained.extend_from_slice(&plan.special_ids);
        }
        logs.push(session_log(
            session + 1,
            &evaluate(&*model)?,
            loss,
            Some(&plan),
        ));
        on_session(&Snapshot {
            baseline: &baseline,
            logs: &logs,
            model: &*model,
            sampler: &sampler,
            shuffle: &shuffle,
            noise: &noise,
            trained: &trained,
        })?;
    }
    Ok(RunOutcome { baseline, logs })
}

fn session_data(
    plan: &BatchPlan,
    strategy: &dyn BatchStrategy,
    dataset: &Dataset,
    teacher: &dyn Teacher,
    noise: &mut Stream,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let normal_x = dataset.inputs.select_columns(&plan.normal_ids);
    let normal_y = dataset.responses.select_columns(&plan.normal_ids);
    let (special_x, special_y) = match strategy.transform() {
        Some(t) => {
            let images: Result<Vec<Image>> = plan
                .special_ids
                .iter()
                .map(|&i| t.apply(&dataset.images[i]))
                .collect();
            let images = images?;
            if images.is_empty() {
                (
                    DMatrix::zeros(normal_x.nrows(), 0),
                    DMatrix::zeros(normal_y.nrows(), 0),
                )
            } else {
                teacher.observe(&images, noise)?
            }
        }
        None => (
            dataset.inputs.select_columns(&plan.special_ids),
            dataset.responses.select_columns(&plan.special_ids),
        ),
    };
    Ok((hcat(&[normal_x, special_x]), hcat(&[normal_y, special_y])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::active::StrategyRegistry;
    use crate::models::{gabor_filter, GaborParams};

    fn gray_corpus(n: usize, side: usize) -> Vec<Image> {
        (0..n as u64)
            .map(|i| crate::image::to_grayscale(&crate::corpus::synthetic_image(3, i, side)))
            .collect()
    }

    fn setup() -> (Dataset, GaborTeacher) {
        let teacher = GaborTeacher::new(
            &gabor_filter(&GaborParams::standard(8)).unwrap(),
            Activation::LINEAR,
            NoiseModel::noiseless(),
        );
        let ds = Dataset::new(gray_corpus(300, 8), &teacher, 50, 0).unwrap();
        (ds, teacher)
    }

    fn small_cfg(sessions: usize, mix: f64) -> TrainConfig {
        TrainConfig {
            sessions,
            images_per_session: 20,
            epochs_per_session: 2,
            batch_size: 8,
            learning_rate: 1e-6,
            momentum: 0.5,
            mix_fraction: mix,
            seed: 4,
        }
    }

    #[test]
    fn sampler_never_repeats_and_reports_exhaustion() {
        let mut s = IdSampler::new((0..10).collect(), Stream::new(1));
        let mut a = s.draw(6).unwrap();
        let pool = s.pool(10);
        assert_eq!(pool.len(), 4);
        s.consume(&pool[..2]);
        a.extend(s.draw(2).unwrap());
        a.extend_from_slice(&pool[..2]);
        a.sort();
        assert_eq!(a, (0..10).collect::<Vec<_>>());
        assert!(matches!(s.draw(1), Err(Error::CorpusTooSmall(_))));
    }

    #[test]
    fn batches_split_by_mix_and_are_deterministic() {
        let (ds, _) = setup();
        let model = Glm::new(nalgebra::DVector::zeros(64), Activation::LINEAR);
        let reg = StrategyRegistry::default();
        let plan_for = |name: &str, mix: f64| {
            let mut sampler = IdSampler::new(ds.train_ids(), Stream::new(2));
            let mut ctx = SelectionContext {
                session: 0,
                dataset: &ds,
                model: &model,
                trained: &[],
                sampler: &mut sampler,
            };
            compose_session_batch(
                reg.build(name).unwrap().as_ref(),
                &small_cfg(1, mix),
                &mut ctx,
            )
            .unwrap()
        };
        let p = plan_for("gaudy", 0.5);
        assert_eq!((p.normal_ids.len(), p.special_ids.len()), (10, 10));
        assert_eq!(p, plan_for("gaudy", 0.5));
        let all = plan_for("gaudy", 1.0);
        assert_eq!((all.normal_ids.len(), all.special_ids.len()), (0, 20));
        let mut ids: Vec<usize> = p.normal_ids.iter().chain(&p.special_ids).copied().collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 20);
        assert!(ids.iter().all(|&i| i >= 50));
    }

    #[test]
    fn zero_sessions_give_empty_log_and_baseline() {
        let (ds, teacher) = setup();
        let mut model = Glm::new(nalgebra::DVector::zeros(64), Activation::LINEAR);
        let reg = StrategyRegistry::default();
        let out = run_experiment(
            &small_cfg(0, 0.5),
            reg.build("normal").unwrap().as_ref(),
            &ds,
            &teacher,
            &mut model,
            None,
            &mut |_| Ok(()),
        )
        .unwrap();
        assert!(out.logs.is_empty());
        assert!(out.baseline.mean_r2.is_finite());
        assert_eq!(out.final_r2(), out.baseline.mean_r2);
    }

    #[test]
    fn runs_repeat_exactly_and_stream_every_session() {
        let (ds, teacher) = setup();
        let reg = StrategyRegistry::default();
        let run = || {
            let mut model = Glm::random(64, Activation::LINEAR, &mut Stream::new(9));
            let mut seen = 0;
            let out = run_experiment(
                &small_cfg(5, 0.5),
                reg.build("gaudy").unwrap().as_ref(),
                &ds,
                &teacher,
                &mut model,
                None,
                &mut |snap| {
                    seen += 1;
                    assert_eq!(snap.log().session, seen);
                    Ok(())
                },
            )
            .unwrap();
            assert_eq!(seen, 5);
            out
        };
        let (a, b) = (run(), run());
        assert_eq!(a.logs, b.logs);
        assert_eq!(a.baseline.mean_r2, b.baseline.mean_r2);
    }

    #[test]
    fn exhausted_corpus_is_an_error() {
        let (ds, teacher) = setup();
        let mut model = Glm::new(nalgebra::DVector::zeros(64), Activation::LINEAR);
        let mut logged = 0;
        let err = run_experiment(
            &small_cfg(20, 0.5),
            StrategyRegistry::default()
                .build("normal")
                .unwrap()
                .as_ref(),
            &ds,
            &teacher,
            &mut model,
            None,
            &mut |_| {
                logged += 1;
                Ok(())
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::CorpusTooSmall(_)));
        assert_eq!(logged, 12);
    }
}
