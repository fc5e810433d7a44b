use std::path::{Path, PathBuf};

use gaudy_core::image::{load_image, save_image};
use gaudy_core::transforms::TransformRegistry;

use crate::config::{ExperimentConfig, TransformSection};
use crate::error::{CliError, Result};
use crate::output::{ManifestRow, OutDir, MANIFEST};

/// Full transform spec for `name`, taking a missing parameter from the
/// matching config key (`percent`, `sigma`, `contrast` or `variant`).
pub fn resolve_spec(name: &str, t: &TransformSection) -> String {
    if name.contains(':') {
        return name.to_string();
    }
    let param = match name {
        "top-edges" | "bottom-edges" => t.percent.map(|v| v.to_string()),
        "smooth" | "gaudy-smooth" | "smooth-gaudy" => t.sigma.map(|v| v.to_string()),
        "contrast" => t.contrast.map(|v| v.to_string()),
        "variant" => t.variant.clone(),
        _ => None,
    };
    match param {
        Some(p) => format!("{name}:{p}"),
        None => name.to_string(),
    }
}

fn is_pnm(p: &Path) -> bool {
    matches!(
        p.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("pgm" | "ppm" | "pnm")
    )
}

fn inputs(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| CliError::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_pnm(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!(
            "no PGM/PPM images in {}",
            path.display()
        )));
    }
    Ok(files)
}

/// Applies each configured transform to every input image. Outputs go to
/// `<out>/<transform>/` and are listed in the manifest.
pub fn cmd_transform(cfg: &ExperimentConfig, out: &OutDir) -> Result<()> {
    let t = &cfg.transform;
    let input = t
        .input
        .as_deref()
        .ok_or_else(|| CliError::Config("transform needs an input path".into()))?;
    let registry = TransformRegistry::with_builtins();
    let transforms = t
        .names
        .iter()
        .map(|n| registry.build(&resolve_spec(n, t)))
        .collect::<gaudy_core::Result<Vec<_>>>()?;
    let files = inputs(input)?;
    let mut manifest = Vec::new();
    for tf in &transforms {
        let dir: String = tf
            .name()
            .chars()
            .map(|c| if c == ':' { '_' } else { c })
            .collect();
        for file in &files {
            let img = load_image(file)?;
            let result = tf.apply(&img)?;
            let ext = if result.channels() == 1 { "pgm" } else { "ppm" };
            let stem = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "image".into());
            let rel = format!("{dir}/{stem}.{ext}");
            let target = out.path(&rel);
            if let Some(parent) = target.parent() {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            save_image(&result, &target)?;
            manifest.push(ManifestRow {
                input: file.display().to_string(),
                output: rel,
                transform: tf.name(),
                width: result.width(),
                height: result.height(),
                channels: result.channels(),
            });
        }
    }
    log::info!("transformed {} images", manifest.len());
    out.table(MANIFEST, &manifest)
}
