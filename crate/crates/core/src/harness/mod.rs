//! Experiment orchestration: executing resolved configs, CSV/JSON
//! emission, parameter sweeps, log-log rate fitting and the named
//! reproduction recipes.

mod emit;
mod ratefit;
mod recipes;
mod sweep;

pub use emit::{emit_json, emit_trajectory_csv, EmitMeta};
pub use ratefit::{fit_rate, RateFit, RateFitError};
pub use recipes::{run_recipe, RecipeError, RecipeOutcome, RecipeParams, RECIPES};
pub use sweep::{run_sweep, sweep_csv, SweepAxis, SweepError, SweepGrid, SweepRow, SweepTable};

use serde::Serialize;

use crate::config::ResolvedRun;
use crate::optimizers::{run, OptError, StopReason, Trajectory};

/// Version string recorded in emitted artifact headers.
pub const LIB_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Summary of one run, serialized alongside the trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub steps: u64,
    pub stop_reason: StopReason,
    pub first_hit: Option<u64>,
    pub final_measure: f64,
    pub returned_index: u64,
    pub returned_x: Vec<f64>,
    pub last_x: Vec<f64>,
    pub last_y: Vec<f64>,
}

/// Execute a resolved configuration.
pub fn execute(rr: &ResolvedRun) -> Result<(Trajectory, RunSummary), OptError> {
    let traj = run(
        &rr.instance,
        rr.method,
        &rr.steps,
        &rr.oracle,
        rr.init.clone(),
        &rr.stop,
        &rr.record,
    )?;
    let first_hit = rr.stop.epsilon.and_then(|eps| traj.first_hit(eps));
    let summary = RunSummary {
        config_hash: rr.config_hash.clone(),
        seed: rr.seed,
        version: LIB_VERSION.to_string(),
        steps: traj.steps,
        stop_reason: traj.stop_reason,
        first_hit,
        final_measure: *traj.measure.last().expect("measure recorded"),
        returned_index: traj.returned_index,
        returned_x: traj.returned.x.clone(),
        last_x: traj.last.x.clone(),
        last_y: traj.last.y.clone(),
    };
    Ok((traj, summary))
}
