use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Oriented Gabor receptive field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    /// cycles per pixel
    pub spatial_frequency: f64,
    /// half-magnitude bandwidth in octaves
    pub bandwidth: f64,
    /// degrees, counter-clockwise from the column axis
    pub orientation: f64,
    /// (row, col); `None` places it at `(size / 2, size / 2)`
    pub center: Option<(f64, f64)>,
    /// radians
    pub phase: f64,
    pub size: usize,
}

impl GaborParams {
    /// 0.1 cycles/pixel, 0.5 octaves, 45°, centred, phase 0.
    pub fn standard(size: usize) -> Self {
        GaborParams {
            spatial_frequency: 0.1,
            bandwidth: 0.5,
            orientation: 45.0,
            center: None,
            phase: 0.0,
            size,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
            .unwrap_or(((self.size / 2) as f64, (self.size / 2) as f64))
    }

    /// Envelope s.d. from frequency and octave bandwidth:
    /// `σ f = (1/π) √(ln 2 / 2) (2ᵇ + 1) / (2ᵇ − 1)`.
    pub fn envelope_sigma(&self) -> f64 {
        let b = 2f64.powf(self.bandwidth);
        (1.0 / PI) * (2f64.ln() / 2.0).sqrt() * (b + 1.0) / (b - 1.0) / self.spatial_frequency
    }

    pub fn value_at(&self, row: f64, col: f64) -> f64 {
        let (cr, cc) = self.center();
        let x = col - cc;
        let y = cr - row;
        let theta = self.orientation.to_radians();
        let xr = x * theta.cos() + y * theta.sin();
        let yr = -x * theta.sin() + y * theta.cos();
        let sigma = self.envelope_sigma();
        (-(xr * xr + yr * yr) / (2.0 * sigma * sigma)).exp()
            * (2.0 * PI * self.spatial_frequency * xr + self.phase).cos()
    }
}

pub fn gabor_filter(p: &GaborParams) -> Result<DMatrix<f64>> {
    if p.size == 0 {
        return Err(Error::InvalidArgument("gabor size must be >= 1".into()));
    }
    if !(p.spatial_frequency > 0.0) || !(p.bandwidth > 0.0) {
        return Err(Error::InvalidArgument(
            "spatial frequency and bandwidth must be > 0".into(),
        ));
    }
    Ok(DMatrix::from_fn(p.size, p.size, |r, c| {
        p.value_at(r as f64, c as f64)
    }))
}
