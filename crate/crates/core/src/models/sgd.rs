use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Session protocol and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub sessions: usize,
    pub images_per_session: usize,
    pub epochs_per_session: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Fraction of each session's images that come from the strategy.
    pub mix_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sessions: 30,
            images_per_session: 500,
            epochs_per_session: 5,
            batch_size: 64,
            learning_rate: 1e-2,
            momentum: 0.7,
            mix_fraction: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.images_per_session == 0 || self.epochs_per_session == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "images_per_session, epochs_per_session and batch_size must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mix_fraction) {
            return Err(Error::InvalidArgument(format!(
                "mix_fraction must be in [0, 1], got {}",
                self.mix_fraction
            )));
        }
        if !(self.learning_rate >= 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(
                "learning_rate must be >= 0 and momentum in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Images per session drawn by the strategy rather than as plain normals.
    pub fn special_count(&self) -> usize {
        (self.mix_fraction * self.images_per_session as f64).round() as usize
    }

    pub fn sgd(&self) -> SgdMomentum {
        SgdMomentum {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
        }
    }
}

/// Heavy-ball momentum: `v ← μv − η∇`, `w ← w + v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdMomentum {
    pub learning_rate: f64,
    pub momentum: f64,
}

impl SgdMomentum {
    pub fn step(&self, params: &mut [f64], velocity: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        debug_assert_eq!(params.len(), velocity.len());
        for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grad) {
            *v = self.momentum * *v - self.learning_rate * g;
            *p += *v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn momentum_accumulates() {
        let sgd = SgdMomentum {
            learning_rate: 0.1,
            momentum: 0.5,
        };
        let (mut p, mut v) = ([0.0], [0.0]);
        sgd.step(&mut p, &mut v, &[1.0]);
        assert!((p[0] + 0.1).abs() < 1e-15);
        sgd.step(&mut p, &mut v, &[1.0]);
        // v = 0.5 * -0.1 - 0.1 = -0.15
        assert!((p[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn special_count_rounds() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.special_count(), 250);
        let all = TrainConfig {
            mix_fraction: 1.0,
            ..cfg.clone()
        };
        assert_eq!(all.special_count(), 500);
        assert!(TrainConfig {
            mix_fraction: 1.5,
            ..cfg
        }
        .validate()
        .is_err());
    }
}
