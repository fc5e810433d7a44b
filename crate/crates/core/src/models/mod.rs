//! Ground-truth generators, trainable predictors, and the R² metric.

pub(crate) mod checkpoint;
mod gabor;
mod glm;
mod ground_truth;
mod mlp;
mod sgd;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use gabor::{gabor_filter, GaborParams};
pub use glm::Glm;
pub use ground_truth::{
    make_ground_truth, GroundTruth, GroundTruthConfig, GROUND_TRUTH_INPUT_SCALE,
};
pub use mlp::{activation_variance, ensemble_predict, Dense, Gradients, Mlp};
pub use sgd::{SgdMomentum, TrainConfig};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Linear,
    Relu,
    Sigmoid,
}

impl ActivationKind {
    pub fn tag(self) -> &'static str {
        match self {
            ActivationKind::Linear => "linear",
            ActivationKind::Relu => "relu",
            ActivationKind::Sigmoid => "sigmoid",
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            ActivationKind::Linear => 0,
            ActivationKind::Relu => 1,
            ActivationKind::Sigmoid => 2,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(ActivationKind::Linear),
            1 => Some(ActivationKind::Relu),
            2 => Some(ActivationKind::Sigmoid),
            _ => None,
        }
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ActivationKind::Linear),
            "relu" => Ok(ActivationKind::Relu),
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            other => Err(Error::Unknown {
                kind: "activation",
                name: other.to_string(),
            }),
        }
    }
}

/// Pointwise nonlinearity. The sigmoid divides its input by `pre_scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activation {
    pub kind: ActivationKind,
    pub pre_scale: f64,
}

impl Activation {
    pub const LINEAR: Activation = Activation {
        kind: ActivationKind::Linear,
        pre_scale: 1.0,
    };
    pub const RELU: Activation = Activation {
        kind: ActivationKind::Relu,
        pre_scale: 1.0,
    };
    pub const SIGMOID: Activation = Activation {
        kind: ActivationKind::Sigmoid,
        pre_scale: 1.0,
    };

    pub fn new(kind: ActivationKind, pre_scale: f64) -> Result<Self> {
        if !(pre_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "pre_scale must be > 0, got {pre_scale}"
            )));
        }
        Ok(Activation { kind, pre_scale })
    }

    pub fn plain(kind: ActivationKind) -> Self {
        Activation {
            kind,
            pre_scale: 1.0,
        }
    }

    #[inline]
    pub fn apply(&self, a: f64) -> f64 {
        match self.kind {
            ActivationKind::Linear => a,
            ActivationKind::Relu => a.max(0.0),
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-a / self.pre_scale).exp()),
        }
    }

    /// Derivative with respect to the pre-activation `a`.
    #[inline]
    pub fn derivative(&self, a: f64) -> f64 {
        match self.kind {
            ActivationKind::Linear => 1.0,
            ActivationKind::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Sigmoid => {
                let s = self.apply(a);
                s * (1.0 - s) / self.pre_scale
            }
        }
    }
}

/// Coefficient of determination per output row and its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RSquared {
    pub mean: f64,
    /// `None` where the truth has zero variance.
    pub per_neuron: Vec<Option<f64>>,
}

impl RSquared {
    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.per_neuron.iter().flatten().copied()
    }

    pub fn median(&self) -> f64 {
        crate::stats::median(&self.defined().collect::<Vec<_>>())
    }

    pub fn min(&self) -> f64 {
        self.defined().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.defined().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `1 − SS_res / SS_tot` for every row (neuron) of `truth` (neurons × samples).
pub fn r_squared(pred: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<RSquared> {
    if pred.shape() != truth.shape() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.ncols() < 2 {
        return Err(Error::InvalidArgument("R² needs at least 2 samples".into()));
    }
    let per_neuron: Vec<Option<f64>> = (0..truth.nrows())
        .map(|i| {
            let t = truth.row(i);
            let p = pred.row(i);
            let mean = t.mean();
            let ss_tot: f64 = t.iter().map(|v| (v - mean).powi(2)).sum();
            let ss_res: f64 = t.iter().zip(p.iter()).map(|(a, b)| (a - b).powi(2)).sum();
            (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot)
        })
        .collect();
    let defined: Vec<f64> = per_neuron.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::InvalidArgument(
            "every neuron has zero variance".into(),
        ));
    }
    Ok(RSquared {
        mean: defined.iter().sum::<f64>() / defined.len() as f64,
        per_neuron,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activation_values() {
        assert_eq!(Activation::RELU.apply(-3.0), 0.0);
        assert_eq!(Activation::SIGMOID.apply(0.0), 0.5);
        let s = Activation::new(ActivationKind::Sigmoid, 1000.0).unwrap();
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((s.apply(1000.0) - expected).abs() < 1e-15);
        assert!((expected - 0.7311).abs() < 1e-4);
        assert!(Activation::new(ActivationKind::Sigmoid, 0.0).is_err());
    }

    #[test]
    fn activation_derivatives_match_differences() {
        for act in [
            Activation::LINEAR,
            Activation::RELU,
            Activation::new(ActivationKind::Sigmoid, 7.0).unwrap(),
        ] {
            for a in [-2.3, -0.4, 0.7, 3.1] {
                let h = 1e-6;
                let fd = (act.apply(a + h) - act.apply(a - h)) / (2.0 * h);
                assert!((fd - act.derivative(a)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn r_squared_examples() {
        let t = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        assert_eq!(r_squared(&t, &t).unwrap().mean, 1.0);
        let m = DMatrix::from_row_slice(1, 3, &[2.0, 2.0, 2.0]);
        assert_eq!(r_squared(&m, &t).unwrap().mean, 0.0);
        let p = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 4.0]);
        assert_eq!(r_squared(&p, &t).unwrap().mean, 0.5);
    }

    #[test]
    fn r_squared_skips_constant_neurons() {
        let t = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 5.0, 5.0, 5.0]);
        let p = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 4.0, 0.0, 0.0, 0.0]);
        let r = r_squared(&p, &t).unwrap();
        assert_eq!(r.per_neuron, vec![Some(0.5), None]);
        assert_eq!(r.mean, 0.5);
        assert!(r_squared(&p.columns(0, 1).into_owned(), &t.columns(0, 1).into_owned()).is_err());
    }
}
