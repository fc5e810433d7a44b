use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{recenter, to_grayscale, Image, DEFAULT_OFFSET};
use crate::oed::{pca_variance_spectrum, CovarianceState, DEFAULT_RIDGE};
use crate::rng::{tag, Stream};
use crate::stats::{sign_flip_test, spearman};
use crate::transforms::gaudy;

#[derive(Debug, Clone, PartialEq)]
pub struct OedScanConfig {
    /// Normal images whose covariance defines the design state.
    pub reference: usize,
    /// Further images scored as normal and gaudy candidates.
    pub candidates: usize,
    /// Principal components in the spectra.
    pub components: usize,
    pub ridge: f64,
    pub permutations: usize,
    pub seed: u64,
}

impl Default for OedScanConfig {
    fn default() -> Self {
        OedScanConfig {
            reference: 2000,
            candidates: 1000,
            components: 200,
            ridge: DEFAULT_RIDGE,
            permutations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    /// 1-based principal-component index.
    pub component: usize,
    pub normal: f64,
    pub gaudy: f64,
    pub ratio: f64,
}

/// Design objective of one candidate image before and after the transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveRow {
    pub image: usize,
    pub normal: f64,
    pub gaudy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OedScan {
    pub spectrum: Vec<SpectrumRow>,
    pub objectives: Vec<ObjectiveRow>,
    /// Spearman correlation of the variance ratio with component index.
    pub ratio_trend: f64,
    /// Fraction of candidates whose gaudy version scores higher.
    pub gaudy_wins: f64,
    /// One-sided sign-flip p-value for gaudy > normal.
    pub p_value: f64,
}

/// Compares normal and gaudy grayscale images in pixel space: their PCA
/// spectra, and the design objective each would achieve as the next
/// training image given the reference images' covariance.
pub fn oed_scan(images: &[Image], cfg: &OedScanConfig) -> Result<OedScan> {
    let need = cfg.reference + cfg.candidates;
    if images.len() < need.max(100) {
        return Err(Error::CorpusTooSmall(format!(
            "design scan needs {} images, got {}",
            need.max(100),
            images.len()
        )));
    }
    let vectors = |imgs: &[Image], transform: bool| -> Vec<Vec<f64>> {
        imgs.iter()
            .map(|i| {
                let g = if i.channels() == 1 {
                    i.clone()
                } else {
                    to_grayscale(i)
                };
                let g = if transform { gaudy(&g) } else { g };
                recenter(&g, DEFAULT_OFFSET).values
            })
            .collect()
    };
    let reference = &images[..cfg.reference];
    let ref_normal = vectors(reference, false);
    let ref_gaudy = vectors(reference, true);
    let components = cfg.components.min(ref_normal[0].len());
    let sn = pca_variance_spectrum(&ref_normal, components)?;
    let sg = pca_variance_spectrum(&ref_gaudy, components)?;
    let spectrum: Vec<SpectrumRow> = sn
        .variances
        .iter()
        .zip(&sg.variances)
        .enumerate()
        .map(|(i, (&n, &g))| SpectrumRow {
            component: i + 1,
            normal: n,
            gaudy: g,
            ratio: if n > 0.0 { g / n } else { f64::NAN },
        })
        .collect();
    let (idx, ratios): (Vec<f64>, Vec<f64>) = spectrum
        .iter()
        .filter(|r| r.ratio.is_finite())
        .map(|r| (r.component as f64, r.ratio))
        .unzip();
    let ratio_trend = spearman(&idx, &ratios)?;

    let state = CovarianceState::from_vectors(&ref_normal, cfg.ridge)?;
    let cand = &images[cfg.reference..need];
    let mut objectives = Vec::with_capacity(cand.len());
    for (k, (n, g)) in vectors(cand, false)
        .iter()
        .zip(&vectors(cand, true))
        .enumerate()
    {
        objectives.push(ObjectiveRow {
            image: cfg.reference + k,
            normal: state.objective_next(n)?,
            gaudy: state.objective_next(g)?,
        });
    }
    let diffs: Vec<f64> = objectives.iter().map(|o| o.gaudy - o.normal).collect();
    let wins = diffs.iter().filter(|&&d| d > 0.0).count();
    let mut rng = Stream::new(cfg.seed).child(0, tag::PERMUTATION);
    Ok(OedScan {
        p_value: sign_flip_test(&diffs, cfg.permutations, &mut rng)?,
        gaudy_wins: wins as f64 / diffs.len().max(1) as f64,
        spectrum,
        objectives,
        ratio_trend,
    })
}
