use gaudy_core::experiments::{oed_scan, OedScanConfig};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{OedSummaryRow, OutDir, OBJECTIVES, OED_SUMMARY, SPECTRUM};

/// Pixel-space variance spectra and design objectives, normal against gaudy.
pub fn cmd_oed_scan(cfg: &ExperimentConfig, out: &OutDir) -> Result<()> {
    let images = cfg.load_corpus()?;
    let o = &cfg.oed;
    let scan = oed_scan(
        &images,
        &OedScanConfig {
            reference: o.reference,
            candidates: o.candidates,
            components: o.components,
            ridge: o.ridge,
            permutations: o.permutations,
            seed: cfg.seed(),
        },
    )?;
    let dominant = scan.spectrum.iter().filter(|r| r.gaudy >= r.normal).count();
    let summary = OedSummaryRow {
        reference: o.reference,
        candidates: o.candidates,
        ratio_spearman: scan.ratio_trend,
        gaudy_spectrum_dominance: dominant as f64 / scan.spectrum.len().max(1) as f64,
        gaudy_wins: scan.gaudy_wins,
        p_value: scan.p_value,
    };
    log::info!(
        "ratio trend {:.3}, gaudy wins {:.1}%, p = {:.2e}",
        summary.ratio_spearman,
        100.0 * summary.gaudy_wins,
        summary.p_value
    );
    out.table(SPECTRUM, &scan.spectrum)?;
    out.table(OBJECTIVES, &scan.objectives)?;
    out.table(OED_SUMMARY, &[summary])?;
    Ok(())
}
