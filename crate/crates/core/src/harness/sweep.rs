//! Cartesian-product parameter sweeps over a base configuration.
//!
//! Grid axes address config fields by dotted path (e.g. `oracle.sigma`,
//! `steps.eta_x`, `stop.epsilon`). Each cell runs with a seed derived from
//! `(base seed, cell index)`; rows are ordered by cell index regardless of
//! execution order, so the output is independent of the parallelism degree.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::RunConfig;
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("grid axis path '{0}' does not address a config field")]
    BadPath(String),
    #[error("grid axis '{0}' has no values")]
    EmptyAxis(String),
    #[error("config error: {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub overrides: Vec<(String, Value)>,
    pub seed: u64,
    pub steps: Option<u64>,
    pub stop_reason: Option<String>,
    pub first_hit: Option<u64>,
    pub final_measure: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), SweepError> {
    let mut cursor = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = cursor
            .as_object_mut()
            .ok_or_else(|| SweepError::BadPath(path.to_string()))?;
        if i + 1 == parts.len() {
            map.insert((*part).to_string(), value);
            return Ok(());
        }
        cursor = map
            .entry((*part).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(SweepError::BadPath(path.to_string()))
}

/// Run the full Cartesian product. Individual run failures are recorded in
/// their row and never abort the sweep.
pub fn run_sweep(
    base: &RunConfig,
    grid: &SweepGrid,
    jobs: usize,
) -> Result<SweepTable, SweepError> {
    for axis in &grid.axes {
        if axis.values.is_empty() {
            return Err(SweepError::EmptyAxis(axis.path.clone()));
        }
    }
    let total: usize = grid
        .axes
        .iter()
        .map(|a| a.values.len())
        .product::<usize>()
        .max(1);
    let base_value = serde_json::to_value(base)?;

    let indices: Vec<usize> = (0..total).collect();
    let build_row = |index: usize| -> SweepRow {
        let mut value = base_value.clone();
        let mut overrides = Vec::new();
        let mut rest = index;
        for axis in &grid.axes {
            let k = rest % axis.values.len();
            rest /= axis.values.len();
            overrides.push((axis.path.clone(), axis.values[k].clone()));
            if let Err(e) = set_path(&mut value, &axis.path, axis.values[k].clone()) {
                return SweepRow {
                    index,
                    overrides,
                    seed: 0,
                    steps: None,
                    stop_reason: None,
                    first_hit: None,
                    final_measure: None,
                    error: Some(e.to_string()),
                };
            }
        }
        let seed = derive_seed(base.seed, index as u64);
        if let Err(e) = set_path(&mut value, "seed", Value::from(seed)) {
            return SweepRow {
                index,
                overrides,
                seed,
                steps: None,
                stop_reason: None,
                first_hit: None,
                final_measure: None,
                error: Some(e.to_string()),
            };
        }
        let outcome = serde_json::from_value::<RunConfig>(value)
            .map_err(|e| e.to_string())
            .and_then(|cfg| {
                cfg.validate().map_err(|e| e.to_string())?;
                cfg.resolve().map_err(|e| e.to_string())
            })
            .and_then(|rr| super::execute(&rr).map_err(|e| e.to_string()));
        match outcome {
            Ok((_, summary)) => SweepRow {
                index,
                overrides,
                seed,
                steps: Some(summary.steps),
                stop_reason: Some(format!("{:?}", summary.stop_reason)),
                first_hit: summary.first_hit,
                final_measure: Some(summary.final_measure),
                error: None,
            },
            Err(e) => SweepRow {
                index,
                overrides,
                seed,
                steps: None,
                stop_reason: None,
                first_hit: None,
                final_measure: None,
                error: Some(e),
            },
        }
    };

    let mut rows: Vec<SweepRow> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| indices.par_iter().map(|i| build_row(*i)).collect())
    } else {
        indices.iter().map(|i| build_row(*i)).collect()
    };
    rows.sort_by_key(|r| r.index);
    Ok(SweepTable { rows })
}

/// CSV rendering of a sweep table (header + one line per row, LF endings).
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::new();
    let axis_names: Vec<String> = table
        .rows
        .first()
        .map(|r| r.overrides.iter().map(|(p, _)| p.clone()).collect())
        .unwrap_or_default();
    out.push_str("index,");
    for name in &axis_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("seed,steps,stop_reason,first_hit,final_measure,error\n");
    for row in &table.rows {
        out.push_str(&format!("{},", row.index));
        for (_, v) in &row.overrides {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.seed,
            row.steps.map(|s| s.to_string()).unwrap_or_default(),
            row.stop_reason.clone().unwrap_or_default(),
            row.first_hit.map(|s| s.to_string()).unwrap_or_default(),
            row.final_measure
                .map(super::emit::fmt_f64)
                .unwrap_or_default(),
            row.error.clone().unwrap_or_default()
        ));
    }
    out
}
