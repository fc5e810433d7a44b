use gaudy_core::experiments::{
    disagreement_vs_error, run_readout, NoStore, ReadoutArch, ReadoutJob, RunStore,
};

use super::readout::{execute, seeded_jobs, Planned};
use super::readout_setup;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{CorrelationRow, OutDir, CORRELATION, DISAGREEMENT};

fn plan(cfg: &ExperimentConfig) -> Vec<Planned> {
    let al = &cfg.al;
    let arch = |ensemble| ReadoutArch {
        activation: al.activation,
        width: cfg.readout.width,
        depth: cfg.readout.depth,
        ensemble,
    };
    let mut plan = Vec::new();
    for s in cfg.strategies() {
        plan.extend(seeded_jobs(
            cfg,
            "al-compare",
            s,
            String::new(),
            arch(al.ensemble),
            None,
        ));
    }
    for &size in &al.ensemble_sweep {
        for s in cfg.strategies() {
            if size < 2 && s == "pool-ensdis" {
                log::warn!("skipping pool-ensdis at ensemble size {size}: needs 2 members");
                continue;
            }
            plan.extend(seeded_jobs(
                cfg,
                "ensemble",
                s,
                format!("ensemble={size}"),
                arch(size),
                None,
            ));
        }
    }
    plan.into_iter()
        .map(|job| Planned {
            job,
            scatter: false,
        })
        .collect()
}

/// Strategy comparison with ensemble readouts, an optional ensemble-size
/// sweep, and the disagreement-versus-error diagnostic.
pub fn cmd_al_compare(cfg: &ExperimentConfig, out: &OutDir, store: &dyn RunStore) -> Result<()> {
    let setup = readout_setup(cfg)?;
    let params = cfg.strategy_params();
    let (table, _) = execute(&setup, &plan(cfg), params, cfg.threads(), store)?;
    out.curves(&table)?;

    let al = &cfg.al;
    let arch = ReadoutArch {
        activation: al.activation,
        width: cfg.readout.width,
        depth: cfg.readout.depth,
        ensemble: al.ensemble,
    };
    let mut train = cfg.train_config(
        Some(ReadoutArch::desk_learning_rate(al.activation)),
        cfg.run_seed(0),
    );
    train.sessions = al.disagreement_sessions;
    let job = ReadoutJob {
        experiment: "disagreement".into(),
        strategy: "normal".into(),
        param: String::new(),
        arch,
        train,
    };
    let (_, ensemble) = run_readout(&setup, &job, params, &NoStore)?;
    let report = disagreement_vs_error(&ensemble, &setup.dataset, al.disagreement_images)?;
    log::info!(
        "disagreement against error: Pearson {:.3} on {} images",
        report.pearson,
        report.rows.len()
    );
    out.table(DISAGREEMENT, &report.rows)?;
    out.table(
        CORRELATION,
        &[CorrelationRow {
            ensemble: al.ensemble,
            sessions: al.disagreement_sessions,
            images: report.rows.len(),
            pearson: report.pearson,
        }],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Kind, Overrides};

    #[test]
    fn sweep_skips_single_member_disagreement() {
        let text = "seed = 0\nruns = 1\n[al]\nensemble_sweep = [1, 5]";
        let cfg = ExperimentConfig::parse(text)
            .unwrap()
            .resolve(Kind::AlCompare, &Overrides::default())
            .unwrap();
        let p = plan(&cfg);
        assert_eq!(p.len(), 4 + 3 + 4);
        assert!(p
            .iter()
            .all(|p| p.job.arch.ensemble != 1 || p.job.strategy != "pool-ensdis"));
        assert_eq!(p[0].job.arch.ensemble, 25);
    }
}
