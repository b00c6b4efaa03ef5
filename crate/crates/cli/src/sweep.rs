//! Parameter sweeps: the Cartesian product of overrides, run on a bounded worker pool.

use std::path::{Path, PathBuf};

use mulab_core::blowup::{evaluate_with_fit, TheoremEntry, CH_ENERGY, CH_HAMILTONIAN, CH_STEEP_SLOPE, DP_ENERGY, DP_SIGN};
use mulab_core::{ModelParams, PeriodicGrid, Termination};
use rayon::prelude::*;

use crate::config::{InitialDatum, LoadedConfig};
use crate::error::{CliError, CliResult};
use crate::output::{artifact, ensure_dir, fmt_f64, fmt_opt, write_csv, write_json, write_timeseries, RunSummary};

const THEOREM_ORDER: [&str; 5] = [CH_ENERGY, CH_STEEP_SLOPE, CH_HAMILTONIAN, DP_ENERGY, DP_SIGN];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCase {
    pub id: String,
    pub config: LoadedConfig,
}

/// Expands the sweep section in the order lambda, n, mean, amplitude.
pub fn expand(base: &LoadedConfig) -> Vec<SweepCase> {
    let s = &base.run.sweep;
    let lambdas = s.lambda.clone().unwrap_or_else(|| vec![base.run.model.lambda]);
    let ns = s.n.clone().unwrap_or_else(|| vec![base.run.grid.n]);
    let means: Vec<Option<f64>> = s.mean.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
    let amps: Vec<Option<f64>> = s
        .amplitude
        .as_ref()
        .map_or(vec![None], |v| v.iter().copied().map(Some).collect());

    let mut cases = Vec::new();
    for &lambda in &lambdas {
        for &n in &ns {
            for &mean in &means {
                for &amp in &amps {
                    let mut cfg = base.clone();
                    cfg.run.model.lambda = lambda;
                    cfg.run.grid.n = n;
                    if let Some(InitialDatum::Fourier(f)) = &mut cfg.init {
                        if let Some(m) = mean {
                            f.mean = m;
                        }
                        if let Some(a) = amp {
                            for mode in &mut f.modes {
                                mode.cos_amp *= a;
                                mode.sin_amp *= a;
                            }
                        }
                    }
                    cases.push(SweepCase {
                        id: format!("case_{:04}", cases.len()),
                        config: cfg,
                    });
                }
            }
        }
    }
    cases
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub id: String,
    pub params: ModelParams,
    pub n: usize,
    pub theorems: Vec<TheoremEntry>,
    pub termination: Option<Termination>,
    pub final_time: Option<f64>,
    pub t_star: Option<f64>,
    pub rate_sigma: Option<f64>,
}

fn run_case(case: &SweepCase, dir: &Path, simulate: bool) -> CliResult<SweepRow> {
    let run = &case.config.run;
    if let Some(InitialDatum::Samples(v)) = &case.config.init {
        if v.len() != run.grid.n {
            return Err(CliError::Config(format!(
                "{}: samples datum has {} values but n = {}",
                case.id,
                v.len(),
                run.grid.n
            )));
        }
    }
    run.solver_config()
        .validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", case.id)))?;
    let grid = PeriodicGrid::new(run.grid.n)?;
    let u0 = case.config.datum()?.field(&grid)?;
    let solver = run.solver_config();
    let (report, record) = evaluate_with_fit(&u0, run.model.lambda, simulate.then_some(&solver), &run.fit_config())?;
    let case_dir = dir.join(&case.id);
    ensure_dir(&case_dir)?;
    let obs = report.observed.as_ref();
    match &record {
        Some(rec) => {
            write_timeseries(&case_dir.join("timeseries.csv"), &rec.diagnostics)?;
            write_json(&case_dir.join("summary.json"), &RunSummary::new(rec, &report))?;
        }
        None => write_json(&case_dir.join("criteria.json"), &report)?,
    }
    log::info!("{} done", case.id);
    Ok(SweepRow {
        id: case.id.clone(),
        params: report.params,
        n: run.grid.n,
        theorems: report.theorems.clone(),
        termination: obs.map(|o| o.termination),
        final_time: obs.map(|o| o.final_time),
        t_star: obs.and_then(|o| o.t_star),
        rate_sigma: obs.and_then(|o| o.rate_sigma),
    })
}

pub fn master_header() -> Vec<String> {
    let mut h: Vec<String> = ["case_id", "lambda", "n", "mu0", "mu1", "mu2"].map(String::from).to_vec();
    for id in THEOREM_ORDER {
        h.push(format!("{id}_holds"));
        h.push(format!("{id}_t_bound"));
    }
    h.extend(["termination", "final_time", "t_star", "rate_sigma"].map(String::from));
    h
}

fn master_row(r: &SweepRow) -> Vec<String> {
    let mut row = vec![
        r.id.clone(),
        fmt_f64(r.params.lambda),
        r.n.to_string(),
        fmt_f64(r.params.mu0),
        fmt_f64(r.params.mu1),
        fmt_f64(r.params.mu2),
    ];
    for id in THEOREM_ORDER {
        let e = r.theorems.iter().find(|e| e.id == id);
        row.push(e.map_or(String::new(), |e| e.hypothesis_holds.to_string()));
        row.push(fmt_opt(e.and_then(|e| e.t_bound)));
    }
    row.push(r.termination.map_or(String::new(), termination_name));
    row.push(fmt_opt(r.final_time));
    row.push(fmt_opt(r.t_star));
    row.push(fmt_opt(r.rate_sigma));
    row
}

pub fn termination_name(t: Termination) -> String {
    match serde_json::to_value(t) {
        Ok(serde_json::Value::String(s)) => s,
        _ => format!("{t:?}"),
    }
}

/// Result of a sweep: where the master CSV went and its rows in case order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub master: PathBuf,
    pub rows: Vec<SweepRow>,
}

/// Runs every case on `jobs` workers (all available when `None`) and writes
/// `<prefix>_sweep.csv` plus one subdirectory per case under `<prefix>_sweep/`.
pub fn run(base: &LoadedConfig, jobs: Option<usize>) -> CliResult<SweepOutcome> {
    base.datum()?;
    let cases = expand(base);
    let out = &base.run.outputs;
    let dir = artifact(&out.dir, &out.prefix, "_sweep");
    ensure_dir(&dir)?;
    let simulate = base.run.sweep.simulate;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    log::info!("sweeping {} cases", cases.len());
    let results: Vec<CliResult<SweepRow>> =
        pool.install(|| cases.par_iter().map(|c| run_case(c, &dir, simulate)).collect());
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let master = artifact(&out.dir, &out.prefix, "_sweep.csv");
    let header = master_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&master, &header, rows.iter().map(master_row))?;
    Ok(SweepOutcome { master, rows })
}
