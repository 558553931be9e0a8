//! File artifacts: long-form CSV traces, plot data and JSON reports.
//!
//! | file | columns |
//! |------|---------|
//! | `trace.csv` | `step, agent, x0..x{n-1}, error_norm, consensus_deviation, triggered` |
//! | `triggers.csv` | `step, agent, triggered` (one row per broadcast, forced `t = 0` included) |
//! | `plot_error_agent{i}.csv` | `step, value` with `value = ‖x_i(t) − θ‖` |
//! | `plot_average_estimate_{k}.csv` | `step, value` with `value = x_avg(t)[k]` |
//! | `plot_average_error.csv` | `step, value` with `value = ‖x_avg(t) − θ‖` |
//! | `plot_centralized_error.csv` | `step, value` with `value = ‖u(t) − θ‖` (when present) |
//! | `plot_triggers_agent{i}.csv` | `step, value` with `value = 1` at every triggering instant |
//! | `metrics.json` | [`MetricsReport`] |
//! | `trace.json` | [`TraceSummary`]: config echo, seed, metrics |
//! | `summary.json` | [`RunSummary`] |

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::Result;
use crate::metrics::MetricsReport;
use crate::schedules::ConditionReport;
use crate::simulation::{distance, SimTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub config: SimConfig,
    pub seed: u64,
    pub stream: u64,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: SimConfig,
    pub seed: u64,
    pub conditions: ConditionReport,
    pub metrics: MetricsReport,
    /// Files written by this run.
    pub manifest: Vec<String>,
    pub wall_clock_seconds: f64,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, value).map_err(std::io::Error::from)?;
    Ok(())
}

pub fn write_trace_csv(trace: &SimTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let n = trace.config.theta.len();
    let mut header = vec!["step".to_string(), "agent".to_string()];
    header.extend((0..n).map(|k| format!("x{k}")));
    header.extend(["error_norm", "consensus_deviation", "triggered"].map(String::from));
    w.write_record(&header)?;
    for r in &trace.records {
        for (i, x) in r.estimates.iter().enumerate() {
            let mut row = vec![r.t.to_string(), i.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            row.push(r.error_norms[i].to_string());
            row.push(r.consensus_deviation[i].to_string());
            row.push(u8::from(r.triggered.get(i).copied().unwrap_or(false)).to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_triggers_csv(trace: &SimTrace, path: &Path) -> Result<()> {
    let mut events: Vec<(usize, usize)> =
        trace.trigger_times.iter().enumerate().flat_map(|(i, times)| times.iter().map(move |&t| (t, i))).collect();
    events.sort_unstable();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "agent", "triggered"])?;
    for (t, i) in events {
        w.write_record([t.to_string(), i.to_string(), "1".to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_series(path: &Path, series: impl Iterator<Item = (usize, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "value"])?;
    for (t, v) in series {
        w.write_record([t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one `(step, value)` file per plotted quantity; returns the paths.
pub fn write_plot_data(trace: &SimTrace, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let theta = &trace.config.theta;
    let has_distributed = !trace.last().estimates.is_empty();
    if has_distributed {
        for i in 0..trace.last().estimates.len() {
            let p = dir.join(format!("plot_error_agent{i}.csv"));
            write_series(&p, trace.records.iter().map(|r| (r.t, r.error_norms[i])))?;
            written.push(p);
        }
        for k in 0..theta.len() {
            let p = dir.join(format!("plot_average_estimate_{k}.csv"));
            write_series(&p, trace.records.iter().map(|r| (r.t, r.average()[k])))?;
            written.push(p);
        }
        let p = dir.join("plot_average_error.csv");
        write_series(&p, trace.records.iter().map(|r| (r.t, distance(&r.average(), theta))))?;
        written.push(p);
    }
    if trace.last().centralized.is_some() {
        let p = dir.join("plot_centralized_error.csv");
        write_series(
            &p,
            trace.records.iter().map(|r| (r.t, distance(r.centralized.as_deref().unwrap_or_default(), theta))),
        )?;
        written.push(p);
    }
    for (i, times) in trace.trigger_times.iter().enumerate() {
        let p = dir.join(format!("plot_triggers_agent{i}.csv"));
        write_series(&p, times.iter().map(|&t| (t, 1.0)))?;
        written.push(p);
    }
    Ok(written)
}
