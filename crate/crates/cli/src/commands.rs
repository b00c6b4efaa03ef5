use std::path::Path;

use mulab_core::blowup::{evaluate_with_fit, BlowupReport};
use mulab_core::{PeriodicGrid, Termination};
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::error::{exit, CliResult};
use crate::output::{artifact, ensure_dir, write_json, write_timeseries, ModelInfo, RunSummary};

pub fn exit_code_for(termination: Termination) -> i32 {
    match termination {
        Termination::ReachedTmax => exit::OK,
        Termination::SlopeStopHit | Termination::DtCollapse => exit::BLOWUP,
        Termination::Corruption => exit::CORRUPTION,
    }
}

/// Integrates the configured datum and writes `<prefix>_timeseries.csv` and
/// `<prefix>_summary.json`.
pub fn simulate(cfg: &LoadedConfig) -> CliResult<(i32, RunSummary)> {
    let run = &cfg.run;
    let grid = PeriodicGrid::new(run.grid.n)?;
    let u0 = cfg.datum()?.field(&grid)?;
    let solver = run.solver_config();
    log::info!("simulating lambda = {} on n = {} to t = {}", run.model.lambda, solver.n, solver.t_max);
    let (report, record) = evaluate_with_fit(&u0, run.model.lambda, Some(&solver), &run.fit_config())?;
    let record = record.expect("a run was requested");
    let summary = RunSummary::new(&record, &report);

    let dir = &run.outputs.dir;
    ensure_dir(dir)?;
    write_timeseries(&artifact(dir, &run.outputs.prefix, "_timeseries.csv"), &record.diagnostics)?;
    write_json(&artifact(dir, &run.outputs.prefix, "_summary.json"), &summary)?;
    log::info!(
        "{:?} at t = {} after {} steps",
        record.termination,
        record.final_time,
        record.accepted_steps
    );
    Ok((exit_code_for(record.termination), summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct CriteriaOutput {
    pub model: ModelInfo,
    #[serde(flatten)]
    pub report: BlowupReport,
}

/// Evaluates every criterion on the initial datum without integrating.
pub fn criteria(cfg: &LoadedConfig) -> CliResult<CriteriaOutput> {
    let run = &cfg.run;
    let grid = PeriodicGrid::new(run.grid.n)?;
    let u0 = cfg.datum()?.field(&grid)?;
    let (report, _) = evaluate_with_fit(&u0, run.model.lambda, None, &run.fit_config())?;
    let out = CriteriaOutput {
        model: ModelInfo::new(run.model.lambda),
        report,
    };
    let dir: &Path = &run.outputs.dir;
    ensure_dir(dir)?;
    write_json(&artifact(dir, &run.outputs.prefix, "_criteria.json"), &out)?;
    Ok(out)
}
