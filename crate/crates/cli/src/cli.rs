//! Argument parsing and verb dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use gaudy_core::corpus::synthetic_image;
use gaudy_core::image::save_image;

use crate::commands;
use crate::config::{ExperimentConfig, Kind, Overrides};
use crate::error::{CliError, Result};
use crate::output::{Clock, OutDir};
use crate::plots::render_all;

#[derive(Debug, Parser)]
#[command(name = "gaudy", version, about = "Gaudy-image training experiments")]
pub struct Args {
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Experiment seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Continue runs from the state saved in the output directory.
    #[arg(long, global = true)]
    pub resume: bool,
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Apply image transforms to a file or directory of PGM/PPM images.
    Transform {
        /// Image file or directory.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Transform name or `name:param`; repeatable.
        #[arg(long = "transform", short = 't')]
        transforms: Vec<String>,
        /// Smoothing sigma in pixels, for transforms given without one.
        #[arg(long)]
        sigma: Option<f64>,
        /// Edge percentage, for transforms given without one.
        #[arg(long)]
        percent: Option<f64>,
        /// Contrast increase in percent.
        #[arg(long)]
        contrast: Option<f64>,
        /// Colour variant tag, e.g. `red-only`.
        #[arg(long)]
        variant: Option<String>,
    },
    /// GLM learning curves against a Gabor ground truth.
    Glm,
    /// Pixel-space variance spectra and design objectives.
    OedScan,
    /// Readout learning curves, sweeps and scatter diagnostics.
    Readout,
    /// Gaudy images against active-learning strategies.
    AlCompare,
    /// Run whatever experiment the config's `kind` names.
    Run,
    /// Regenerate figures from the CSVs in the output directory.
    Plot,
    /// Write the synthetic corpus as PPM files.
    Corpus {
        #[arg(long, default_value_t = 2000)]
        size: usize,
        #[arg(long, default_value_t = 28)]
        side: usize,
    },
}

fn load(args: &Args) -> Result<ExperimentConfig> {
    match &args.config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn overrides(args: &Args) -> Overrides {
    Overrides {
        seed: args.seed,
        out: args.out.clone(),
        threads: args.threads,
    }
}

pub fn execute(args: Args) -> Result<()> {
    let mut cfg = load(&args)?;
    let kind = match &args.verb {
        Verb::Transform {
            input,
            transforms,
            sigma,
            percent,
            contrast,
            variant,
        } => {
            let t = &mut cfg.transform;
            if input.is_some() {
                t.input = input.clone();
            }
            if !transforms.is_empty() {
                t.names = transforms.clone();
            }
            t.sigma = sigma.or(t.sigma);
            t.percent = percent.or(t.percent);
            t.contrast = contrast.or(t.contrast);
            if variant.is_some() {
                t.variant = variant.clone();
            }
            Kind::TransformScan
        }
        Verb::Glm => Kind::Glm,
        Verb::OedScan => Kind::OedScan,
        Verb::Readout => Kind::Readout,
        Verb::AlCompare => Kind::AlCompare,
        Verb::Run => cfg
            .kind
            .ok_or_else(|| CliError::Config("`run` needs a config with a `kind`".into()))?,
        Verb::Plot => {
            let dir = args
                .out
                .clone()
                .or(cfg.out.clone())
                .ok_or_else(|| CliError::Config("`plot` needs --out".into()))?;
            if !dir.is_dir() {
                return Err(CliError::Config(format!(
                    "output directory {} does not exist",
                    dir.display()
                )));
            }
            let written = render_all(&OutDir::create(&dir)?)?;
            log::info!("regenerated {} figures", written.len());
            return Ok(());
        }
        Verb::Corpus { size, side } => return write_corpus(&args, *size, *side),
    };
    let cfg = cfg.resolve(kind, &overrides(&args))?;
    commands::run(&cfg, args.resume)
}

fn write_corpus(args: &Args, size: usize, side: usize) -> Result<()> {
    let dir = args
        .out
        .clone()
        .ok_or_else(|| CliError::Config("`corpus` needs --out".into()))?;
    let seed = args.seed.unwrap_or(0);
    let clock = Clock::start();
    let out = OutDir::create(&dir)?;
    for i in 0..size {
        let img = synthetic_image(seed, i as u64, side);
        save_image(&img, out.path(&format!("img{i:05}.ppm")))?;
    }
    log::info!("wrote {size} images to {}", dir.display());
    clock.write_sidecar(&out, "corpus")
}
