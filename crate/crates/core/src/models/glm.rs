use nalgebra::{DMatrix, DVector};

use super::{Activation, SgdMomentum, TrainConfig};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// A single linear filter followed by a pointwise activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Glm {
    pub weights: DVector<f64>,
    pub activation: Activation,
    pub(crate) velocity: DVector<f64>,
}

impl Glm {
    pub fn new(weights: DVector<f64>, activation: Activation) -> Self {
        let velocity = DVector::zeros(weights.len());
        Glm {
            weights,
            activation,
            velocity,
        }
    }

    /// Glorot-uniform weights on `±√(6 / (K + 1))`.
    pub fn random(dim: usize, activation: Activation, rng: &mut Stream) -> Self {
        let limit = (6.0 / (dim as f64 + 1.0)).sqrt();
        let w = DVector::from_fn(dim, |_, _| rng.uniform_range(-limit, limit));
        Glm::new(w, activation)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let a: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum();
        Ok(self.activation.apply(a))
    }

    /// Outputs for the columns of `inputs` as a `1 × n` matrix.
    pub fn forward_batch(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if inputs.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: inputs.nrows(),
            });
        }
        let a = self.weights.transpose() * inputs;
        let a = a.map(|v| self.activation.apply(v));
        Ok(DMatrix::from_row_slice(1, a.len(), a.as_slice()))
    }

    /// Mean-squared-error gradient over the listed columns.
    fn gradient(
        &self,
        inputs: &DMatrix<f64>,
        targets: &[f64],
        cols: &[usize],
    ) -> (DVector<f64>, f64) {
        let mut grad = DVector::zeros(self.dim());
        let mut loss = 0.0;
        let scale = 2.0 / cols.len() as f64;
        for &j in cols {
            let x = inputs.column(j);
            let a = self.weights.dot(&x);
            let err = self.activation.apply(a) - targets[j];
            loss += err * err;
            grad.axpy(scale * err * self.activation.derivative(a), &x, 1.0);
        }
        (grad, loss / cols.len() as f64)
    }

    /// One session of mini-batch SGD with momentum over the columns of
    /// `inputs`. Velocity carries over between sessions. Returns the mean
    /// training loss of the final epoch.
    pub fn train_session(
        &mut self,
        inputs: &DMatrix<f64>,
        targets: &[f64],
        cfg: &TrainConfig,
        rng: &mut Stream,
    ) -> Result<f64> {
        if inputs.ncols() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.ncols(),
                got: targets.len(),
            });
        }
        let sgd: SgdMomentum = cfg.sgd();
        let mut order: Vec<usize> = (0..targets.len()).collect();
        let mut epoch_loss = 0.0;
        for _ in 0..cfg.epochs_per_session {
            rng.shuffle(&mut order);
            let mut total = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                let (grad, loss) = self.gradient(inputs, targets, batch);
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::NonFinite("GLM training loss".into()));
                }
                total += loss * batch.len() as f64;
                sgd.step(
                    self.weights.as_mut_slice(),
                    self.velocity.as_mut_slice(),
                    grad.as_slice(),
                );
            }
            epoch_loss = total / targets.len().max(1) as f64;
        }
        Ok(epoch_loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ActivationKind;

    #[test]
    fn forward_examples() {
        let x = [3.0, -1.0];
        assert_eq!(
            Glm::new(DVector::zeros(2), Activation::LINEAR)
                .forward(&x)
                .unwrap(),
            0.0
        );
        assert_eq!(
            Glm::new(DVector::zeros(2), Activation::RELU)
                .forward(&x)
                .unwrap(),
            0.0
        );
        let sig = Activation::new(ActivationKind::Sigmoid, 1000.0).unwrap();
        assert_eq!(Glm::new(DVector::zeros(2), sig).forward(&x).unwrap(), 0.5);
        let relu = Glm::new(DVector::from_vec(vec![-1.0, 0.0]), Activation::RELU);
        assert_eq!(relu.forward(&x).unwrap(), 0.0);
        let s = Glm::new(DVector::from_vec(vec![1000.0]), sig);
        assert!((s.forward(&[1.0]).unwrap() - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!(s.forward(&[1.0, 2.0]).is_err());
    }

    fn cfg(lr: f64, mu: f64, batch: usize) -> TrainConfig {
        TrainConfig {
            learning_rate: lr,
            momentum: mu,
            batch_size: batch,
            epochs_per_session: 1,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_leaves_weights() {
        let mut rng = Stream::new(1);
        let mut g = Glm::random(4, Activation::RELU, &mut rng);
        let before = g.weights.clone();
        let x = DMatrix::from_fn(4, 10, |r, c| (r * c) as f64 - 3.0);
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        g.train_session(&x, &y, &cfg(0.0, 0.9, 3), &mut rng)
            .unwrap();
        assert_eq!(g.weights, before);
    }

    #[test]
    fn single_step_hand_gradient() {
        // loss (y − wx)², gradient −2x(y − wx) = −4 at w = 0, so w = 0 − 0.1·(−4).
        let mut g = Glm::new(DVector::zeros(1), Activation::LINEAR);
        let x = DMatrix::from_element(1, 1, 1.0);
        g.train_session(&x, &[2.0], &cfg(0.1, 0.0, 1), &mut Stream::new(0))
            .unwrap();
        assert!((g.weights[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn full_batch_loss_is_non_increasing() {
        let mut rng = Stream::new(4);
        let x = DMatrix::from_fn(5, 40, |_, _| rng.normal());
        let truth = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0, 3.0]);
        let y: Vec<f64> = (0..40).map(|j| truth.dot(&x.column(j))).collect();
        let mut g = Glm::new(DVector::zeros(5), Activation::LINEAR);
        let c = cfg(0.05, 0.0, 40);
        let mut last = f64::INFINITY;
        for _ in 0..50 {
            let (_, before) = g.gradient(&x, &y, &(0..40).collect::<Vec<_>>());
            assert!(before <= last + 1e-12);
            last = before;
            g.train_session(&x, &y, &c, &mut rng).unwrap();
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn divergence_is_reported() {
        let mut g = Glm::new(DVector::from_vec(vec![1.0]), Activation::LINEAR);
        let x = DMatrix::from_element(1, 1, 1e3);
        let mut c = cfg(10.0, 0.0, 1);
        c.epochs_per_session = 400;
        let r = g.train_session(&x, &[1.0], &c, &mut Stream::new(0));
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
