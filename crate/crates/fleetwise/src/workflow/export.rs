//! Plot-ready CSV and JSON artifacts for every workflow result.

use fleetwise_core::bnn::WeightStatHistory;
use fleetwise_core::nnet::TrainHistory;
use fleetwise_core::stats::BoxStats;

use super::experiments::{ComparisonTable, PeriodStudyResult, SweepResult};
use super::report::UncertaintyReport;
use super::selfcheck::SelfcheckReport;
use crate::error::Result;
use crate::output::{num, opt, OutputDir};

const BOX_HEADER: [&str; 10] = ["turbine", "metric", "channel", "count", "p2_5", "p25", "median", "p75", "p97_5", "mean"];

fn box_row(turbine: &str, metric: &str, channel: &str, b: &BoxStats) -> Vec<String> {
    vec![
        turbine.to_string(),
        metric.to_string(),
        channel.to_string(),
        b.count.to_string(),
        num(b.p2_5),
        num(b.p25),
        num(b.median),
        num(b.p75),
        num(b.p97_5),
        num(b.mean),
    ]
}

pub fn history(out: &mut OutputDir, name: &str, h: &TrainHistory) -> Result<()> {
    let rows: Vec<Vec<String>> = h
        .epochs
        .iter()
        .enumerate()
        .map(|(i, e)| vec![(i + 1).to_string(), num(e.training_loss), opt(e.validation_loss)])
        .collect();
    out.csv(name, &["epoch", "training_loss", "validation_loss"], &rows)
}

pub fn weight_stats(out: &mut OutputDir, name: &str, w: &WeightStatHistory) -> Result<()> {
    let mut rows = Vec::new();
    for t in &w.traces {
        let kind = match t.param.kind {
            fleetwise_core::bnn::ParamKind::Weight => "weight",
            fleetwise_core::bnn::ParamKind::Bias => "bias",
        };
        for s in &t.stats {
            rows.push(vec![
                t.param.layer.to_string(),
                kind.to_string(),
                t.param.index.to_string(),
                s.epoch.to_string(),
                num(s.mu),
                num(s.sd),
                num(s.cov),
            ]);
        }
    }
    out.csv(name, &["layer", "kind", "index", "epoch", "mu", "sd", "cov"], &rows)
}

/// `reports.json`, `box_stats.csv`, `histogram.csv`, `marginals.csv` and
/// one `rows/<turbine>.csv` per turbine.
pub fn deployment(out: &mut OutputDir, reports: &[UncertaintyReport]) -> Result<()> {
    out.json("reports.json", reports)?;
    let mut boxes = Vec::new();
    let mut hist = Vec::new();
    let mut marg = Vec::new();
    for r in reports {
        let id = r.turbine_id.as_str();
        boxes.push(box_row(id, "r_min", "", &r.r_min));
        if let Some(ll) = &r.log_likelihood {
            boxes.push(box_row(id, "log_likelihood", "", ll));
        }
        for c in &r.channels {
            boxes.push(box_row(id, "expected_mu", &c.channel, &c.expected_mu));
            if let Some(b) = &c.cov_mu {
                boxes.push(box_row(id, "cov_mu", &c.channel, b));
            }
            for (k, b) in c.histogram.iter().enumerate() {
                hist.push(vec![
                    id.to_string(),
                    c.channel.clone(),
                    k.to_string(),
                    num(b.lower),
                    num(b.upper),
                    b.count.to_string(),
                    num(b.probability),
                    opt(b.mean_cov_mu),
                ]);
            }
        }
        for m in &r.marginals {
            boxes.push(box_row(id, "input", &m.column, &m.summary));
            let width = (m.upper - m.lower) / m.density.len() as f64;
            for (k, d) in m.density.iter().enumerate() {
                marg.push(vec![
                    id.to_string(),
                    m.column.clone(),
                    k.to_string(),
                    num(m.lower + k as f64 * width),
                    num(if k + 1 == m.density.len() { m.upper } else { m.lower + (k + 1) as f64 * width }),
                    num(*d),
                    num(m.ks_statistic),
                    num(m.ks_p_value),
                ]);
            }
        }
        per_row(out, r)?;
    }
    out.csv("box_stats.csv", &BOX_HEADER, &boxes)?;
    out.csv(
        "histogram.csv",
        &["turbine", "channel", "bin", "lower", "upper", "count", "probability", "mean_cov_mu"],
        &hist,
    )?;
    out.csv(
        "marginals.csv",
        &["turbine", "column", "bin", "lower", "upper", "density", "ks_statistic", "ks_p_value"],
        &marg,
    )
}

fn per_row(out: &mut OutputDir, r: &UncertaintyReport) -> Result<()> {
    let channels: Vec<&str> = r.channels.iter().map(|c| c.channel.as_str()).collect();
    let mut header = vec!["timestamp".to_string()];
    for prefix in ["expected_mu", "cov_mu", "aleatory_var", "epistemic_var"] {
        header.extend(channels.iter().map(|c| format!("{prefix}[{c}]")));
    }
    header.push("r_min".into());
    header.push("log_likelihood".into());
    let rows: Vec<Vec<String>> = r
        .per_row
        .iter()
        .map(|row| {
            let mut cells = vec![row.timestamp.to_string()];
            cells.extend(row.expected_mu.iter().map(|v| num(*v)));
            cells.extend(row.cov_mu.iter().map(|v| opt(*v)));
            cells.extend(row.aleatory_var.iter().map(|v| num(*v)));
            cells.extend(row.epistemic_var.iter().map(|v| num(*v)));
            cells.push(num(row.r_min));
            cells.push(opt(row.log_likelihood));
            cells
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(&format!("rows/{}.csv", r.turbine_id), &header, &rows)
}

pub fn period_study(out: &mut OutputDir, p: &PeriodStudyResult) -> Result<()> {
    out.json("period_study.json", p)?;
    let rows: Vec<Vec<String>> = p
        .entries
        .iter()
        .map(|e| {
            vec![
                e.months.to_string(),
                e.rows_used.to_string(),
                e.skipped.to_string(),
                e.epochs.to_string(),
                opt(e.mean_cov_mu),
                opt(e.expected_ll),
            ]
        })
        .collect();
    out.csv(
        "period_metrics.csv",
        &["months", "rows_used", "skipped", "epochs", "mean_cov_mu", "expected_ll"],
        &rows,
    )
}

pub fn sweep(out: &mut OutputDir, s: &SweepResult) -> Result<()> {
    out.json("sweep.json", s)?;
    let pe = |v: &Option<Vec<Option<f64>>>, c: usize| v.as_ref().map(|p| opt(p[c])).unwrap_or_default();
    let rows: Vec<Vec<String>> = s
        .entries
        .iter()
        .map(|e| {
            let p = if e.kind.is_bayesian() { &e.bnn_percent_error } else { &e.dnn_percent_error };
            vec![
                e.input_config.to_string(),
                e.label.clone(),
                e.kind.to_string(),
                e.epochs.to_string(),
                pe(p, 0),
                pe(p, 1),
                opt(e.bnn_expected_ll),
            ]
        })
        .collect();
    out.csv(
        "sweep.csv",
        &["input_config", "label", "kind", "epochs", "percent_error[DEM_tl]", "percent_error[DEM_tn]", "expected_ll"],
        &rows,
    )
}

pub fn comparison(out: &mut OutputDir, t: &ComparisonTable) -> Result<()> {
    out.json("comparison.json", t)?;
    let mut rows = Vec::new();
    for turbine in &t.turbines {
        for m in &turbine.models {
            let pe = |c: usize| m.percent_error.as_ref().map(|p| opt(p[c])).unwrap_or_default();
            rows.push(vec![
                turbine.turbine_id.clone(),
                m.kind.to_string(),
                pe(0),
                pe(1),
                opt(m.mean_cov_mu),
                opt(m.expected_ll),
            ]);
        }
    }
    out.csv(
        "comparison.csv",
        &["turbine", "kind", "percent_error[DEM_tl]", "percent_error[DEM_tn]", "mean_cov_mu", "expected_ll"],
        &rows,
    )
}

pub fn selfcheck(out: &mut OutputDir, r: &SelfcheckReport) -> Result<()> {
    out.json("selfcheck.json", r)
}
