use nalgebra::{DMatrix, DVector};

use super::{Activation, TrainConfig};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Fully connected layer; `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot(inputs: usize, outputs: usize, activation: Activation, rng: &mut Stream) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Dense {
            weights: DMatrix::from_fn(outputs, inputs, |_, _| rng.uniform_range(-limit, limit)),
            bias: DVector::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn pre_activation(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.weights * x;
        for mut col in z.column_iter_mut() {
            col += &self.bias;
        }
        z
    }
}

/// Per-layer gradients of the mean-squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub bias: Vec<DVector<f64>>,
    pub loss: f64,
}

/// Layered network with a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
    velocity_w: Vec<DMatrix<f64>>,
    velocity_b: Vec<DVector<f64>>,
}

impl Mlp {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("layers"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].outputs(),
                    got: pair[1].inputs(),
                });
            }
        }
        if layers.last().map(|l| l.activation.kind) != Some(super::ActivationKind::Linear) {
            return Err(Error::InvalidArgument("final layer must be linear".into()));
        }
        let velocity_w = layers
            .iter()
            .map(|l| DMatrix::zeros(l.outputs(), l.inputs()))
            .collect();
        let velocity_b = layers.iter().map(|l| DVector::zeros(l.outputs())).collect();
        Ok(Mlp {
            layers,
            velocity_w,
            velocity_b,
        })
    }

    /// Readout network: `depth` hidden layers of `width` units with
    /// `activation`, then a linear output layer. `depth = 0` gives a single
    /// linear map from input to output.
    pub fn readout(
        input_dim: usize,
        width: usize,
        depth: usize,
        output_dim: usize,
        activation: Activation,
        rng: &mut Stream,
    ) -> Self {
        let mut layers = Vec::with_capacity(depth + 1);
        let mut prev = input_dim;
        for _ in 0..depth {
            layers.push(Dense::glorot(prev, width, activation, rng));
            prev = width;
        }
        layers.push(Dense::glorot(prev, output_dim, Activation::LINEAR, rng));
        Mlp::new(layers).expect("valid layers")
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    fn check_input(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.nrows(),
            });
        }
        Ok(())
    }

    /// Outputs for the columns of `x`.
    pub fn forward_batch(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        Ok(self.forward_from(x.clone(), 0))
    }

    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        let x = DMatrix::from_column_slice(features.len(), 1, features);
        Ok(self.forward_batch(&x)?.as_slice().to_vec())
    }

    /// Applies layers `start..` to activations `a` that already passed
    /// layers `..start`.
    pub(crate) fn forward_from(&self, mut a: DMatrix<f64>, start: usize) -> DMatrix<f64> {
        for layer in &self.layers[start..] {
            let act = layer.activation;
            a = layer.pre_activation(&a);
            if act.kind != super::ActivationKind::Linear {
                a.apply(|v| *v = act.apply(*v));
            }
        }
        a
    }

    /// Post-activation output of layer `layer` for the columns of `x`.
    pub fn layer_output(&self, x: &DMatrix<f64>, layer: usize) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        if layer >= self.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "layer {layer} out of range for depth {}",
                self.layers.len()
            )));
        }
        let mut a = x.clone();
        for l in &self.layers[..=layer] {
            let act = l.activation;
            a = l.pre_activation(&a).map(|v| act.apply(v));
        }
        Ok(a)
    }

    /// Gradients of `mean((ŷ − y)²)` over every output and column.
    pub fn backward(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Gradients> {
        self.check_input(x)?;
        if y.nrows() != self.output_dim() || y.ncols() != x.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim() * x.ncols(),
                got: y.len(),
            });
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        post.push(x.clone());
        for layer in &self.layers {
            let act = layer.activation;
            let z = layer.pre_activation(post.last().expect("input present"));
            post.push(z.map(|v| act.apply(v)));
            pre.push(z);
        }
        let out = post.last().expect("output present");
        let diff = out - y;
        let n = diff.len() as f64;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let mut grad_a = diff * (2.0 / n);

        let count = self.layers.len();
        let mut gw = vec![DMatrix::zeros(0, 0); count];
        let mut gb = vec![DVector::zeros(0); count];
        for l in (0..count).rev() {
            let layer = &self.layers[l];
            let act = layer.activation;
            let delta = if act.kind == super::ActivationKind::Linear {
                grad_a
            } else {
                grad_a.zip_map(&pre[l], |g, z| g * act.derivative(z))
            };
            gw[l] = &delta * post[l].transpose();
            gb[l] = delta.column_sum();
            if l > 0 {
                grad_a = layer.weights.transpose() * &delta;
            } else {
                grad_a = DMatrix::zeros(0, 0);
            }
        }
        Ok(Gradients {
            weights: gw,
            bias: gb,
            loss,
        })
    }

    pub fn apply_gradients(&mut self, grads: &Gradients, cfg: &TrainConfig) -> Result<()> {
        if !grads.loss.is_finite() {
            return Err(Error::NonFinite("network training loss".into()));
        }
        let sgd = cfg.sgd();
        for (l, layer) in self.layers.iter_mut().enumerate() {
            sgd.step(
                layer.weights.as_mut_slice(),
                self.velocity_w[l].as_mut_slice(),
                grads.weights[l].as_slice(),
            );
            sgd.step(
                layer.bias.as_mut_slice(),
                self.velocity_b[l].as_mut_slice(),
                grads.bias[l].as_slice(),
            );
        }
        Ok(())
    }

    /// One session of mini-batch SGD over the columns of `x`/`y`. Returns
    /// the mean loss of the final epoch.
    pub fn train_session(
        &mut self,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        cfg: &TrainConfig,
        rng: &mut Stream,
    ) -> Result<f64> {
        self.check_input(x)?;
        let mut order: Vec<usize> = (0..x.ncols()).collect();
        let mut epoch_loss = 0.0;
        for _ in 0..cfg.epochs_per_session {
            rng.shuffle(&mut order);
            let mut total = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                let bx = x.select_columns(batch);
                let by = y.select_columns(batch);
                let grads = self.backward(&bx, &by)?;
                self.apply_gradients(&grads, cfg)?;
                total += grads.loss * batch.len() as f64;
            }
            epoch_loss = total / x.ncols().max(1) as f64;
        }
        Ok(epoch_loss)
    }

    pub(crate) fn velocities(&self) -> (&[DMatrix<f64>], &[DVector<f64>]) {
        (&self.velocity_w, &self.velocity_b)
    }

    pub(crate) fn set_velocities(&mut self, w: Vec<DMatrix<f64>>, b: Vec<DVector<f64>>) {
        self.velocity_w = w;
        self.velocity_b = b;
    }

    /// Mutable access for frozen-network construction and tests.
    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }
}

/// Elementwise mean of the members' outputs.
pub fn ensemble_predict(members: &[Mlp], x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let first = members.first().ok_or(Error::Empty("ensemble"))?;
    let mut sum = first.forward_batch(x)?;
    for m in &members[1..] {
        let out = m.forward_batch(x)?;
        if out.shape() != sum.shape() {
            return Err(Error::DimensionMismatch {
                expected: sum.nrows(),
                got: out.nrows(),
            });
        }
        sum += out;
    }
    Ok(sum / members.len() as f64)
}

/// Sample variance (N − 1) of every unit of `layer` across the columns of `x`.
pub fn activation_variance(net: &Mlp, x: &DMatrix<f64>, layer: usize) -> Result<Vec<f64>> {
    let a = net.layer_output(x, layer)?;
    let n = a.ncols();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "variance needs at least 2 inputs".into(),
        ));
    }
    Ok(a.row_iter()
        .map(|row| {
            // shifted by the first value so identical inputs give exactly 0
            let s = row[0];
            let m = row.iter().map(|v| v - s).sum::<f64>() / n as f64;
            row.iter().map(|v| (v - s - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)
        })
        .collect())
}
