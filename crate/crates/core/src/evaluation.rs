//! Per-state forecast quality: precision, spread and distance.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::engine::{ForecastRecord, Outcome};
use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "state,n_forecasts,n_resolved,precision,mean_spread,mean_distance";

#[derive(Debug, Clone, PartialEq)]
pub struct StateMetrics {
    pub state: usize,
    pub n_forecasts: usize,
    /// Hits plus misses; unresolved forecasts are left out.
    pub n_resolved: usize,
    /// `hits / n_resolved`, absent when nothing resolved.
    pub precision: Option<f64>,
    pub mean_spread: f64,
    pub mean_distance: f64,
}

#[derive(Default)]
struct Acc {
    n: usize,
    hits: usize,
    misses: usize,
    spread: usize,
    distance: usize,
}

/// Groups forecasts by state, ascending.
pub fn evaluate(forecasts: &[ForecastRecord]) -> Vec<StateMetrics> {
    let mut by_state: BTreeMap<usize, Acc> = BTreeMap::new();
    for f in forecasts {
        let acc = by_state.entry(f.state).or_default();
        acc.n += 1;
        acc.spread += f.interval.spread();
        acc.distance += f.interval.distance();
        match f.outcome {
            Some(Outcome::Hit) => acc.hits += 1,
            Some(Outcome::Miss) => acc.misses += 1,
            Some(Outcome::Unresolved) | None => {}
        }
    }
    by_state
        .into_iter()
        .map(|(state, a)| {
            let resolved = a.hits + a.misses;
            StateMetrics {
                state,
                n_forecasts: a.n,
                n_resolved: resolved,
                precision: (resolved > 0).then(|| a.hits as f64 / resolved as f64),
                mean_spread: a.spread as f64 / a.n as f64,
                mean_distance: a.distance as f64 / a.n as f64,
            }
        })
        .collect()
}

pub fn write_metrics_csv(metrics: &[StateMetrics], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for m in metrics {
        let precision = m.precision.map(|p| p.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            m.state, m.n_forecasts, m.n_resolved, precision, m.mean_spread, m.mean_distance
        )?;
    }
    Ok(())
}

pub fn export_metrics(metrics: &[StateMetrics], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_metrics_csv(metrics, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<StateMetrics>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == METRICS_HEADER => {}
        _ => {
            return Err(Error::Malformed {
                line: 1,
                message: format!("expected header `{METRICS_HEADER}`"),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Malformed {
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 fields, got {}", fields.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        out.push(StateMetrics {
            state: int(fields[0])?,
            n_forecasts: int(fields[1])?,
            n_resolved: int(fields[2])?,
            precision: if fields[3].is_empty() {
                None
            } else {
                Some(real(fields[3])?)
            },
            mean_spread: real(fields[4])?,
            mean_distance: real(fields[5])?,
        });
    }
    Ok(out)
}
