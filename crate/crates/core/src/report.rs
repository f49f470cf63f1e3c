//! CSV and JSON writers. Numbers are written at full precision in Rust's
//! shortest round-trip form, so identical inputs give identical bytes.

use std::io::Write;

use serde::Serialize;

use crate::cashflow::ScenarioSet;
use crate::distribution::{OmegaResult, Summary};
use crate::error::Result;
use crate::ranking::{EvaluatedProject, Metric, RankingReport};

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

/// `t0..tT`, preceded by a `weight` column unless the weights are uniform.
pub fn write_scenarios<W: Write>(set: &ScenarioSet, out: W) -> Result<()> {
    let weights = set.weights();
    let weighted = weights.iter().any(|w| *w != weights[0]);
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = Vec::with_capacity(set.horizon() + 2);
    if weighted {
        header.push("weight".into());
    }
    header.extend((0..=set.horizon()).map(|t| format!("t{t}")));
    wtr.write_record(&header)?;
    for (s, w) in set.scenarios().iter().zip(weights) {
        let mut row = Vec::with_capacity(header.len());
        if weighted {
            row.push(num(*w));
        }
        row.extend(s.flows().iter().map(|f| num(*f)));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_evaluations<W: Write>(project: &EvaluatedProject, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "scenario",
        "npv",
        "profit",
        "terminal_return",
        "mu",
        "pi",
        "premium_npv",
        "premium_return",
        "total_outlay",
    ])?;
    for (i, e) in project.evaluations().iter().enumerate() {
        wtr.write_record([
            i.to_string(),
            num(e.npv),
            num(e.terminal_profit),
            num(e.terminal_return),
            num(e.annualized_return),
            num(e.profitability_index),
            num(e.premium_npv),
            num(e.premium_return),
            num(e.replication.total_outlay),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// One row per metric; an undefined skewness is written as `nan`.
pub fn write_summary<W: Write>(rows: &[(&str, Summary)], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["metric", "mean", "median", "std", "skewness"])?;
    for (name, s) in rows {
        wtr.write_record([
            name.to_string(),
            num(s.mean),
            num(s.median),
            num(s.std_dev),
            num(s.skewness.unwrap_or(f64::NAN)),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// NPV and μ summaries of a project.
pub fn project_summaries(project: &EvaluatedProject) -> Vec<(&'static str, Summary)> {
    [Metric::Npv, Metric::Mu]
        .into_iter()
        .map(|m| (m.as_str(), project.distribution(m).summarize()))
        .collect()
}

pub fn write_omega_curve<W: Write>(curve: &[OmegaResult], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["threshold", "call", "put", "omega"])?;
    for r in curve {
        wtr.write_record([num(r.threshold), num(r.call), num(r.put), r.omega.to_csv_field()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_ranking_csv<W: Write>(report: &RankingReport, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["rank", "project", "omega", "call", "put", "threshold", "accept"])?;
    for e in &report.entries {
        wtr.write_record([
            e.rank.to_string(),
            e.project_id.clone(),
            e.omega.to_csv_field(),
            num(e.call),
            num(e.put),
            num(e.threshold),
            e.accept.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline. Non-finite floats become `null`.
pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}
