//! Figures rendered from the CSVs in an output directory. Nothing here
//! reads experiment state, so `gaudy plot` can regenerate them offline.

use std::collections::BTreeMap;

use gaudy_core::experiments::table::read_csv;
use gaudy_core::experiments::DisagreementRow;
use gaudy_core::experiments::{ObjectiveRow, ResultTable, RunKey, SpectrumRow};

use crate::error::Result;
use crate::output::{
    schema_of, CorrelationRow, FinalRow, OutDir, ScatterOutRow, CORRELATION, CURVES, DISAGREEMENT,
    FINALS, OBJECTIVES, SCATTER, SPECTRUM,
};
use crate::svg::{BarChart, LineChart, ScatterChart, Series};

/// Renders every figure whose source CSV exists. Returns the files written.
pub fn render_all(out: &OutDir) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        out.text(&name, &body)?;
        written.push(name);
        Ok(())
    };
    let exists = |f: &str| out.path(f).is_file();

    if exists(CURVES) {
        let table = ResultTable::read(out.path(CURVES))?;
        for (name, chart) in curve_charts(&table) {
            emit(name, chart.render())?;
        }
    }
    if exists(FINALS) {
        let rows: Vec<FinalRow> = read_csv(out.path(FINALS), schema_of(FINALS))?;
        for (name, chart) in bar_charts(&rows) {
            emit(name, chart.render())?;
        }
    }
    if exists(SPECTRUM) {
        let rows: Vec<SpectrumRow> = read_csv(out.path(SPECTRUM), schema_of(SPECTRUM))?;
        let (spectrum, ratio) = spectrum_charts(&rows);
        emit("spectrum.svg".into(), spectrum.render())?;
        emit("ratio.svg".into(), ratio.render())?;
    }
    if exists(OBJECTIVES) {
        let rows: Vec<ObjectiveRow> = read_csv(out.path(OBJECTIVES), schema_of(OBJECTIVES))?;
        let chart = ScatterChart {
            title: "Design objective per image".into(),
            x_label: "normal".into(),
            y_label: "gaudy".into(),
            points: rows.iter().map(|r| (r.normal, r.gaudy)).collect(),
            diagonal: true,
        };
        emit("objectives.svg".into(), chart.render())?;
    }
    if exists(SCATTER) {
        let rows: Vec<ScatterOutRow> = read_csv(out.path(SCATTER), schema_of(SCATTER))?;
        let mut groups: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
        let mut neuron = BTreeMap::new();
        for r in &rows {
            let k = (r.strategy.clone(), r.activation.clone());
            neuron.insert(k.clone(), r.neuron);
            groups.entry(k).or_default().push((r.truth, r.prediction));
        }
        for ((strategy, activation), points) in groups {
            let n = neuron[&(strategy.clone(), activation.clone())];
            let chart = ScatterChart {
                title: format!("{strategy}, {activation}: median neuron {n}"),
                x_label: "true response".into(),
                y_label: "predicted response".into(),
                points,
                diagonal: true,
            };
            emit(
                format!("scatter_{strategy}_{activation}.svg"),
                chart.render(),
            )?;
        }
    }
    if exists(DISAGREEMENT) {
        let rows: Vec<DisagreementRow> = read_csv(out.path(DISAGREEMENT), schema_of(DISAGREEMENT))?;
        let rho = if exists(CORRELATION) {
            let c: Vec<CorrelationRow> = read_csv(out.path(CORRELATION), schema_of(CORRELATION))?;
            c.first().map(|c| format!(" (Pearson {:.3})", c.pearson))
        } else {
            None
        };
        let chart = ScatterChart {
            title: format!("Disagreement against error{}", rho.unwrap_or_default()),
            x_label: "ensemble disagreement".into(),
            y_label: "prediction error".into(),
            points: rows.iter().map(|r| (r.disagreement, r.error)).collect(),
            diagonal: false,
        };
        emit("disagreement.svg".into(), chart.render())?;
    }
    Ok(written)
}

/// Numeric value of a `name=value` sweep coordinate.
fn sweep_value(param: &str) -> Option<f64> {
    param.split_once('=').and_then(|(_, v)| v.parse().ok())
}

fn base_strategy(s: &str) -> &str {
    s.split(':').next().unwrap_or(s)
}

fn file_part(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Learning curves for unswept experiments and final-R²-versus-parameter
/// charts for sweeps, one chart per experiment and activation.
pub fn curve_charts(table: &ResultTable) -> Vec<(String, LineChart)> {
    let mut groups: BTreeMap<(String, String), Vec<RunKey>> = BTreeMap::new();
    for k in table.keys() {
        groups
            .entry((k.experiment.clone(), k.activation.clone()))
            .or_default()
            .push(k);
    }
    let mut charts = Vec::new();
    for ((experiment, activation), keys) in groups {
        let sweep = keys.iter().all(|k| sweep_value(&k.param).is_some());
        let name = format!("{}_{}.svg", file_part(&experiment), file_part(&activation));
        if sweep {
            let mut series: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
            for k in &keys {
                let v: Vec<f64> = table.finals(k).into_iter().map(|(_, r)| r).collect();
                series
                    .entry(base_strategy(&k.strategy).to_string())
                    .or_default()
                    .push((
                        sweep_value(&k.param).unwrap_or(f64::NAN),
                        gaudy_core::stats::mean(&v),
                        gaudy_core::stats::sd(&v),
                    ));
            }
            let param = keys[0].param.split('=').next().unwrap_or("").to_string();
            let series = series
                .into_iter()
                .map(|(name, mut pts)| {
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Series {
                        name,
                        points: pts.iter().map(|p| (p.0, p.1)).collect(),
                        band: Some(pts.iter().map(|p| p.2).collect()),
                    }
                })
                .collect();
            charts.push((
                format!("sweep_{name}"),
                LineChart {
                    title: format!("{experiment} sweep, {activation}"),
                    x_label: param,
                    y_label: "final mean R²".into(),
                    series,
                    log_y: false,
                },
            ));
        } else {
            let series = keys
                .iter()
                .map(|k| {
                    let s = table.summary(k);
                    let label = if k.param.is_empty() {
                        k.strategy.clone()
                    } else {
                        format!("{} {}", k.strategy, k.param)
                    };
                    Series {
                        name: label,
                        points: s.iter().map(|p| (p.session as f64, p.mean)).collect(),
                        band: Some(s.iter().map(|p| p.sd).collect()),
                    }
                })
                .collect();
            charts.push((
                format!("curves_{name}"),
                LineChart {
                    title: format!("{experiment}, {activation}"),
                    x_label: "session".into(),
                    y_label: "mean R² (±1 s.d.)".into(),
                    series,
                    log_y: false,
                },
            ));
        }
    }
    charts
}

/// Final-session bars for every unswept experiment with several strategies.
pub fn bar_charts(rows: &[FinalRow]) -> Vec<(String, BarChart)> {
    let mut groups: BTreeMap<(String, String), Vec<&FinalRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.param.is_empty()) {
        groups
            .entry((r.experiment.clone(), r.activation.clone()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|((experiment, activation), v)| {
            (
                format!(
                    "bars_{}_{}.svg",
                    file_part(&experiment),
                    file_part(&activation)
                ),
                BarChart {
                    title: format!("{experiment}, {activation}: final session"),
                    y_label: "mean R² (±1 s.d.)".into(),
                    bars: v
                        .iter()
                        .map(|r| (r.strategy.clone(), r.mean_r2, r.sd_r2))
                        .collect(),
                },
            )
        })
        .collect()
}

pub fn spectrum_charts(rows: &[SpectrumRow]) -> (LineChart, LineChart) {
    let pc = |f: fn(&SpectrumRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.component as f64, f(r))).collect()
    };
    let spectrum = LineChart {
        title: "Variance per principal component".into(),
        x_label: "component".into(),
        y_label: "variance".into(),
        series: vec![
            Series {
                name: "normal".into(),
                points: pc(|r| r.normal),
                band: None,
            },
            Series {
                name: "gaudy".into(),
                points: pc(|r| r.gaudy),
                band: None,
            },
        ],
        log_y: true,
    };
    let ratio = LineChart {
        title: "Gaudy to normal variance ratio".into(),
        x_label: "component".into(),
        y_label: "ratio".into(),
        series: vec![Series {
            name: "ratio".into(),
            points: pc(|r| r.ratio),
            band: None,
        }],
        log_y: false,
    };
    (spectrum, ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gaudy_core::experiments::CurveRow;

    fn row(
        experiment: &str,
        strategy: &str,
        param: &str,
        seed: u64,
        session: usize,
        r2: f64,
    ) -> CurveRow {
        CurveRow {
            experiment: experiment.into(),
            strategy: strategy.into(),
            activation: "relu".into(),
            param: param.into(),
            seed,
            session,
            mean_r2: r2,
            median_r2: r2,
            min_r2: r2,
            max_r2: r2,
            train_loss: 0.0,
        }
    }

    #[test]
    fn sweeps_become_parameter_charts() {
        let table = ResultTable {
            rows: vec![
                row("edges", "top-edges:10", "percent=10", 0, 1, 0.3),
                row("edges", "top-edges:50", "percent=50", 0, 1, 0.4),
                row("edges", "bottom-edges:10", "percent=10", 0, 1, 0.2),
                row("readout", "normal", "", 0, 0, 0.0),
                row("readout", "normal", "", 0, 1, 0.5),
            ],
        };
        let charts = curve_charts(&table);
        assert_eq!(charts.len(), 2);
        let (name, sweep) = &charts[0];
        assert_eq!(name, "sweep_edges_relu.svg");
        assert_eq!(sweep.series.len(), 2);
        assert_eq!(sweep.series[1].name, "top-edges");
        assert_eq!(sweep.series[1].points, vec![(10.0, 0.3), (50.0, 0.4)]);
        assert_eq!(charts[1].0, "curves_readout_relu.svg");
        assert_eq!(charts[1].1.series[0].points.len(), 2);
    }
}
