//! Frozen surrogate networks that stand in for pre-trained backbones.
//!
//! The feature network is a bank of local filters tiled over the image
//! (zero-mean oriented edge detectors plus colour blobs, relu, stored as a
//! dense layer) followed by a random linear projection, centred and
//! globally scaled on a reference corpus. The target network extends the
//! feature network with random relu and linear layers. Simulated neurons
//! are the top principal components of the target network's outputs on
//! the reference corpus, each scaled to mean 0 and s.d. 1 there.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{Activation, Dense, Mlp};
use crate::error::{Error, Result};
use crate::image::{Image, DEFAULT_OFFSET};
use crate::oed::{NoiseModel, Pca};
use crate::rng::{tag, Stream};

/// Leading layers the target network shares with the feature network.
const SHARED_LAYERS: usize = 2;

/// Divisor applied after re-centering, before the frozen networks.
pub const GROUND_TRUTH_INPUT_SCALE: f64 = 128.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthConfig {
    pub image_side: usize,
    pub channels: usize,
    pub feature_dim: usize,
    /// Widths of the target network after the filter bank; the last entry
    /// is the linear layer PCA is applied to.
    pub hidden_dims: Vec<usize>,
    pub n_neurons: usize,
    pub filters: usize,
    /// How many of `filters` are colour blobs that keep their mean
    /// (the rest are zero-mean oriented edge detectors).
    pub blob_filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub noise: NoiseModel,
}

impl Default for GroundTruthConfig {
    fn default() -> Self {
        GroundTruthConfig {
            image_side: 28,
            channels: 3,
            feature_dim: 256,
            hidden_dims: vec![512, 256],
            n_neurons: 100,
            filters: 8,
            blob_filters: 3,
            kernel: 7,
            stride: 3,
            noise: NoiseModel::noiseless(),
        }
    }
}

impl GroundTruthConfig {
    pub fn input_dim(&self) -> usize {
        self.image_side * self.image_side * self.channels
    }

    fn positions(&self) -> usize {
        if self.kernel > self.image_side {
            return 0;
        }
        (self.image_side - self.kernel) / self.stride + 1
    }

    pub fn filter_units(&self) -> usize {
        self.positions() * self.positions() * self.filters
    }
}

/// Frozen feature extractor, frozen target network and PCA readout.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub config: GroundTruthConfig,
    pub feature_net: Mlp,
    pub target_net: Mlp,
    /// `n_neurons × hidden` projection with the per-neuron scaling folded in.
    pub readout: DMatrix<f64>,
    pub readout_offset: DVector<f64>,
    /// Variance of each principal component before normalization.
    pub pc_variances: Vec<f64>,
    bank: SparseBank,
}

/// Nonzero entries of the shared filter-bank layer, one list per unit.
#[derive(Debug, Clone)]
struct SparseBank {
    rows: Vec<Vec<(usize, f64)>>,
    bias: Vec<f64>,
}

impl SparseBank {
    fn from_dense(layer: &Dense) -> Self {
        let rows = (0..layer.outputs())
            .map(|r| {
                (0..layer.inputs())
                    .filter_map(|c| {
                        let w = layer.weights[(r, c)];
                        (w != 0.0).then_some((c, w))
                    })
                    .collect()
            })
            .collect();
        SparseBank {
            rows,
            bias: layer.bias.iter().copied().collect(),
        }
    }

    /// Relu filter-bank activations, `units × n`.
    fn forward(&self, images: &[Image]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows.len(), images.len());
        let mut x = Vec::new();
        for (j, img) in images.iter().enumerate() {
            x.clear();
            x.extend(
                img.data()
                    .iter()
                    .map(|&v| (f64::from(v) - DEFAULT_OFFSET) / GROUND_TRUTH_INPUT_SCALE),
            );
            for (u, row) in self.rows.iter().enumerate() {
                let a = row.iter().fold(self.bias[u], |acc, &(c, w)| acc + w * x[c]);
                out[(u, j)] = a.max(0.0);
            }
        }
        out
    }
}

fn local_filter_bank(cfg: &GroundTruthConfig, rng: &mut Stream) -> Dense {
    let side = cfg.image_side;
    let k = cfg.kernel;
    let c = cfg.channels;
    let positions = cfg.positions();
    let mut kernels = Vec::with_capacity(cfg.filters);
    for f in 0..cfg.filters {
        let blob = f < cfg.blob_filters;
        let theta = rng.uniform() * PI;
        let freq = (rng.uniform_range(0.04f64.ln(), 0.45f64.ln())).exp();
        let phase = rng.uniform() * 2.0 * PI;
        let sigma = k as f64 / 4.0;
        let color: Vec<f64> = if c == 1 {
            vec![1.0]
        } else if blob {
            // luminance or colour-opponent blob
            (0..c).map(|_| rng.normal()).collect()
        } else {
            (0..c).map(|_| 1.0 + 0.5 * rng.normal()).collect()
        };
        let mid = (k as f64 - 1.0) / 2.0;
        let mut kern = vec![0.0; k * k * c];
        for r in 0..k {
            for col in 0..k {
                let (y, x) = (r as f64 - mid, col as f64 - mid);
                let xr = x * theta.cos() + y * theta.sin();
                let env = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
                let v = if blob {
                    env
                } else {
                    env * (2.0 * PI * freq * xr + phase).cos()
                };
                for ch in 0..c {
                    kern[(r * k + col) * c + ch] = v * color[ch];
                }
            }
        }
        if !blob {
            let mean = kern.iter().sum::<f64>() / kern.len() as f64;
            kern.iter_mut().for_each(|v| *v -= mean);
        }
        let norm = kern.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        kern.iter_mut().for_each(|v| *v /= norm);
        kernels.push(kern);
    }
    let units = cfg.filter_units();
    let mut w = DMatrix::zeros(units, cfg.input_dim());
    let mut unit = 0;
    for pr in 0..positions {
        for pc in 0..positions {
            for kern in &kernels {
                for r in 0..k {
                    for col in 0..k {
                        for ch in 0..c {
                            let row = pr * cfg.stride + r;
                            let cc = pc * cfg.stride + col;
                            w[(unit, (row * side + cc) * c + ch)] = kern[(r * k + col) * c + ch];
                        }
                    }
                }
                unit += 1;
            }
        }
    }
    Dense {
        weights: w,
        bias: DVector::zeros(units),
        activation: Activation::RELU,
    }
}

fn random_dense(inputs: usize, outputs: usize, act: Activation, rng: &mut Stream) -> Dense {
    // He-style normal weights keep relu activations at a stable scale.
    let sd = (2.0 / inputs as f64).sqrt();
    Dense {
        weights: DMatrix::from_fn(outputs, inputs, |_, _| rng.normal() * sd),
        bias: DVector::zeros(outputs),
        activation: act,
    }
}

fn check_images(cfg: &GroundTruthConfig, images: &[Image]) -> Result<()> {
    for img in images {
        if img.width() != cfg.image_side
            || img.height() != cfg.image_side
            || img.channels() != cfg.channels
        {
            return Err(Error::InvalidArgument(format!(
                "ground truth expects {0}x{0}x{1} images, got {2}x{3}x{4}",
                cfg.image_side,
                cfg.channels,
                img.width(),
                img.height(),
                img.channels()
            )));
        }
    }
    Ok(())
}

/// Network input matrix: one re-centered, scaled image per column.
pub fn encode_images(images: &[Image], dim: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(dim, images.len());
    for (j, img) in images.iter().enumerate() {
        for (i, &v) in img.data().iter().enumerate() {
            x[(i, j)] = (f64::from(v) - DEFAULT_OFFSET) / GROUND_TRUTH_INPUT_SCALE;
        }
    }
    x
}

fn standardize_rows(values: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = values.ncols() as f64;
    let mean = values.column_mean();
    let sd = DVector::from_iterator(
        values.nrows(),
        values.row_iter().zip(mean.iter()).map(|(row, m)| {
            (row.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
                .sqrt()
                .max(1e-12)
        }),
    );
    (mean, sd)
}

/// Builds the frozen networks and fits the normalized PCA readout on `reference`.
pub fn make_ground_truth(
    seed: u64,
    cfg: &GroundTruthConfig,
    reference: &[Image],
) -> Result<GroundTruth> {
    if reference.len() < 10 * cfg.n_neurons {
        return Err(Error::CorpusTooSmall(format!(
            "{} reference images for {} neurons (need >= {})",
            reference.len(),
            cfg.n_neurons,
            10 * cfg.n_neurons
        )));
    }
    let width = *cfg
        .hidden_dims
        .last()
        .ok_or_else(|| Error::InvalidArgument("hidden_dims must be nonempty".into()))?;
    if cfg.n_neurons > width || cfg.filter_units() == 0 {
        return Err(Error::InvalidArgument(
            "n_neurons must not exceed the last hidden width, and the filter bank must fit".into(),
        ));
    }
    check_images(cfg, reference)?;
    let root = Stream::new(seed);
    let mut net_rng = root.child(0, tag::NETWORK);
    let bank = local_filter_bank(cfg, &mut net_rng);
    let units = bank.outputs();

    let mut feature_net = Mlp::new(vec![
        bank.clone(),
        random_dense(units, cfg.feature_dim, Activation::LINEAR, &mut net_rng),
    ])?;

    let sparse = SparseBank::from_dense(&feature_net.layers()[0]);
    let first = sparse.forward(reference);

    // Fold centering and one global scale (mean feature variance 1) into
    // the last feature layer; relative feature variances are kept.
    let raw = feature_net.forward_from(first.clone(), 1);
    let (mean, sd) = standardize_rows(&raw);
    let scale = (sd.iter().map(|s| s * s).sum::<f64>() / sd.len() as f64).sqrt();
    {
        let last = feature_net.layers_mut().last_mut().expect("two layers");
        last.weights /= scale;
        for i in 0..last.outputs() {
            last.bias[i] = (last.bias[i] - mean[i]) / scale;
        }
    }

    // The target network extends the frozen feature network.
    let mut layers = feature_net.layers().to_vec();
    let mut prev = cfg.feature_dim;
    for (i, &h) in cfg.hidden_dims.iter().enumerate() {
        let act = if i + 1 == cfg.hidden_dims.len() {
            Activation::LINEAR
        } else {
            Activation::RELU
        };
        layers.push(random_dense(prev, h, act, &mut net_rng));
        prev = h;
    }
    let target_net = Mlp::new(layers)?;

    let features = feature_net.forward_from(first, 1);
    let hidden = target_net.forward_from(features, SHARED_LAYERS);
    let pca = Pca::fit(&hidden, cfg.n_neurons)?;
    let projected = pca.project(&hidden);
    let (pmean, psd) = standardize_rows(&projected);
    let mut readout = pca.components.clone();
    let mut offset = DVector::zeros(cfg.n_neurons);
    let base = &pca.components * &pca.mean;
    for i in 0..cfg.n_neurons {
        readout.row_mut(i).scale_mut(1.0 / psd[i]);
        offset[i] = -(base[i] + pmean[i]) / psd[i];
    }
    Ok(GroundTruth {
        config: cfg.clone(),
        feature_net,
        target_net,
        readout,
        readout_offset: offset,
        pc_variances: pca.variances,
        bank: sparse,
    })
}

impl GroundTruth {
    pub fn encode(&self, images: &[Image]) -> Result<DMatrix<f64>> {
        check_images(&self.config, images)?;
        Ok(encode_images(images, self.config.input_dim()))
    }

    /// Frozen features, `feature_dim × n`.
    pub fn features(&self, images: &[Image]) -> Result<DMatrix<f64>> {
        check_images(&self.config, images)?;
        Ok(self.feature_net.forward_from(self.bank.forward(images), 1))
    }

    /// Noiseless simulated responses, `n_neurons × n`.
    pub fn responses(&self, images: &[Image]) -> Result<DMatrix<f64>> {
        Ok(self.features_and_responses(images)?.1)
    }

    /// Features and responses sharing one filter-bank pass.
    pub fn features_and_responses(&self, images: &[Image]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        check_images(&self.config, images)?;
        let first = self.bank.forward(images);
        let features = self.feature_net.forward_from(first, 1);
        let hidden = self
            .target_net
            .forward_from(features.clone(), SHARED_LAYERS);
        let mut r = &self.readout * hidden;
        for mut col in r.column_iter_mut() {
            col += &self.readout_offset;
        }
        Ok((features, r))
    }

    /// Adds response noise drawn from the configured noise model.
    pub fn add_noise(&self, responses: &mut DMatrix<f64>, rng: &mut Stream) {
        let sd = self.config.noise.variance().sqrt();
        if sd > 0.0 {
            responses.iter_mut().for_each(|v| *v += sd * rng.normal());
        }
    }
}
