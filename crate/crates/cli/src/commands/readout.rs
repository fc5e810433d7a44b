use gaudy_core::active::StrategyParams;
use gaudy_core::experiments::{
    median_neuron_scatter, parallel_map, run_readout, ReadoutArch, ReadoutJob, ReadoutSetup,
    ResultTable, RunStore,
};
use gaudy_core::models::ActivationKind;

use super::readout_setup;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{OutDir, ScatterOutRow, SCATTER};

/// One job per run seed.
pub(crate) fn seeded_jobs(
    cfg: &ExperimentConfig,
    experiment: &str,
    strategy: &str,
    param: String,
    arch: ReadoutArch,
    mix_fraction: Option<f64>,
) -> Vec<ReadoutJob> {
    let rate = ReadoutArch::desk_learning_rate(arch.activation);
    cfg.run_seeds()
        .into_iter()
        .map(|seed| {
            let mut train = cfg.train_config(Some(rate), seed);
            if let Some(m) = mix_fraction {
                train.mix_fraction = m;
            }
            ReadoutJob {
                experiment: experiment.into(),
                strategy: strategy.into(),
                param: param.clone(),
                arch,
                train,
            }
        })
        .collect()
}

/// A job plus whether to keep its median-neuron scatter.
pub(crate) struct Planned {
    pub job: ReadoutJob,
    pub scatter: bool,
}

/// Runs every job and merges the curves in job order.
pub(crate) fn execute(
    setup: &ReadoutSetup,
    plan: &[Planned],
    params: StrategyParams,
    threads: usize,
    store: &dyn RunStore,
) -> Result<(ResultTable, Vec<ScatterOutRow>)> {
    log::info!("running {} training runs on {threads} threads", plan.len());
    let results = parallel_map(plan, threads, |p| -> gaudy_core::Result<_> {
        let (out, model) = run_readout(setup, &p.job, params, store)?;
        let scatter = if p.scatter {
            Some(median_neuron_scatter(&model, &setup.dataset)?)
        } else {
            None
        };
        Ok((out, scatter))
    });
    let mut table = ResultTable::default();
    let mut scatter = Vec::new();
    for (p, res) in plan.iter().zip(results) {
        let (out, rows) = res?;
        table.push_run(&p.job.key(), p.job.train.seed, &out);
        for r in rows.into_iter().flatten() {
            scatter.push(ScatterOutRow {
                strategy: p.job.strategy.clone(),
                activation: p.job.arch.activation.tag().into(),
                neuron: r.neuron,
                image: r.image,
                truth: r.truth,
                prediction: r.prediction,
            });
        }
    }
    Ok((table, scatter))
}

fn plan(cfg: &ExperimentConfig) -> Vec<Planned> {
    let r = &cfg.readout;
    let first_seed = cfg.run_seed(0);
    let mut plan = Vec::new();
    let mut add = |jobs: Vec<ReadoutJob>, scatter: bool| {
        plan.extend(jobs.into_iter().map(|job| Planned {
            scatter: scatter && job.train.seed == first_seed,
            job,
        }))
    };
    let ips = cfg.images_per_session();
    for &activation in &r.activations {
        let arch = ReadoutArch {
            activation,
            width: r.width,
            depth: r.depth,
            ensemble: r.ensemble,
        };
        for s in cfg.strategies() {
            add(
                seeded_jobs(cfg, "readout", s, String::new(), arch, None),
                r.scatter,
            );
        }
        for &count in &r.mix_sweep {
            let mix = count as f64 / ips as f64;
            add(
                seeded_jobs(cfg, "mix", "gaudy", format!("mix={count}"), arch, Some(mix)),
                false,
            );
        }
        for &depth in &r.depth_sweep {
            for s in cfg.strategies() {
                let arch = ReadoutArch { depth, ..arch };
                add(
                    seeded_jobs(cfg, "depth", s, format!("depth={depth}"), arch, None),
                    false,
                );
            }
        }
        for &p in &r.edge_sweep {
            for side in ["top-edges", "bottom-edges"] {
                let s = format!("{side}:{p}");
                add(
                    seeded_jobs(cfg, "edges", &s, format!("percent={p}"), arch, None),
                    false,
                );
            }
        }
        for &sigma in &r.smoothing_sweep {
            let s = format!("gaudy-smooth:{sigma}");
            add(
                seeded_jobs(cfg, "smoothing", &s, format!("sigma={sigma}"), arch, None),
                false,
            );
        }
    }
    if r.linear {
        let arch = ReadoutArch {
            activation: ActivationKind::Linear,
            width: r.width,
            depth: 0,
            ensemble: 1,
        };
        for s in cfg.strategies() {
            add(
                seeded_jobs(cfg, "linear", s, String::new(), arch, None),
                r.scatter,
            );
        }
    }
    plan
}

/// Readout learning curves with the configured sweeps and diagnostics.
pub fn cmd_readout(cfg: &ExperimentConfig, out: &OutDir, store: &dyn RunStore) -> Result<()> {
    let setup = readout_setup(cfg)?;
    let params = cfg.strategy_params();
    let (table, scatter) = execute(&setup, &plan(cfg), params, cfg.threads(), store)?;
    out.curves(&table)?;
    if cfg.readout.scatter {
        out.table(SCATTER, &scatter)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Kind, Overrides};

    #[test]
    fn plan_covers_sweeps() {
        let text = "seed = 1\nruns = 2\n[readout]\nactivations = [\"relu\"]\n\
                    mix_sweep = [0, 500]\nedge_sweep = [0, 100]\nlinear = true";
        let cfg = ExperimentConfig::parse(text)
            .unwrap()
            .resolve(Kind::Readout, &Overrides::default())
            .unwrap();
        let p = plan(&cfg);
        // 2 strategies + 2 mix + 4 edge arms + 2 linear, 2 runs each
        assert_eq!(p.len(), 20);
        assert_eq!(p.iter().filter(|p| p.scatter).count(), 4);
        let mix: Vec<f64> = p
            .iter()
            .filter(|p| p.job.experiment == "mix")
            .map(|p| p.job.train.mix_fraction)
            .collect();
        assert_eq!(mix, vec![0.0, 0.0, 1.0, 1.0]);
        assert!(p
            .iter()
            .any(|p| p.job.strategy == "bottom-edges:100" && p.job.param == "percent=100"));
        let lin = p.iter().find(|p| p.job.experiment == "linear").unwrap();
        assert_eq!(lin.job.arch.depth, 0);
    }
}
