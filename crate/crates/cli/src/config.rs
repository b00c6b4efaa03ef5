//! Run configuration: TOML (or JSON when the file ends in `.json`).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use mulab_core::blowup::FitConfig;
use mulab_core::peakon::{multipeakon_field, one_peakon, PeakonConfig};
use mulab_core::{PeriodicField, PeriodicGrid, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    /// Optional only so that a missing section is reported as a config error.
    pub init: Option<InitSection>,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub blowup: BlowupSection,
    #[serde(default)]
    pub outputs: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub fourier: Option<FourierInit>,
    pub peakon: Option<OnePeakonInit>,
    pub multipeakon: Option<PeakonConfig>,
    /// CSV with a single column of `n` values, relative to the config file.
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierInit {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub modes: Vec<FourierMode>,
}

/// `cos_amp cos(2 pi k x) + sin_amp sin(2 pi k x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub k: u32,
    #[serde(default)]
    pub cos_amp: f64,
    #[serde(default)]
    pub sin_amp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnePeakonInit {
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub t_max: f64,
    pub dt0: f64,
    pub dt_min: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub record_every: usize,
    pub cfl: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            t_max: s.t_max,
            dt0: s.dt0,
            dt_min: s.dt_min,
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            record_every: s.record_every,
            cfl: s.cfl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupSection {
    pub slope_stop: f64,
    pub w_gate: f64,
    pub min_resolvedness: f64,
}

impl Default for BlowupSection {
    fn default() -> Self {
        let f = FitConfig::default();
        Self {
            slope_stop: SolverConfig::default().slope_stop,
            w_gate: f.w_gate,
            min_resolvedness: f.min_resolvedness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            prefix: "run".into(),
        }
    }
}

/// Cartesian product of overrides; an absent list keeps the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lambda: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    /// Replaces the mean of a Fourier initial datum.
    pub mean: Option<Vec<f64>>,
    /// Multiplies every Fourier mode amplitude.
    pub amplitude: Option<Vec<f64>>,
    /// When false only the criteria are evaluated.
    pub simulate: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lambda: None,
            n: None,
            mean: None,
            amplitude: None,
            simulate: true,
        }
    }
}

/// Replaces the `dt` coefficient of one affine Maurer-Cartan entry; a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablePerturbation {
    pub row: usize,
    pub col: usize,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub seed: u64,
    /// Random fields for the operator suite.
    pub cases: usize,
    /// Random polynomials for the inequality suite.
    pub oracle_cases: usize,
    pub lambda_spec: Vec<f64>,
    pub peakon_c: f64,
    pub exclusion: f64,
    pub perturb_affine: Option<TablePerturbation>,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            seed: 1,
            cases: 20,
            oracle_cases: 100,
            lambda_spec: vec![0.5, 1.0, -2.0],
            peakon_c: 1.3,
            exclusion: 0.1,
            perturb_affine: None,
        }
    }
}

/// The initial datum, resolved against the file system.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDatum {
    Fourier(FourierInit),
    Peakon(OnePeakonInit),
    Multipeakon(PeakonConfig),
    Samples(Vec<f64>),
}

impl FourierInit {
    pub fn eval(&self, x: f64) -> f64 {
        self.mean
            + self
                .modes
                .iter()
                .map(|m| {
                    let arg = 2.0 * PI * f64::from(m.k) * x;
                    m.cos_amp * arg.cos() + m.sin_amp * arg.sin()
                })
                .sum::<f64>()
    }
}

impl InitialDatum {
    pub fn field(&self, grid: &PeriodicGrid) -> CliResult<PeriodicField> {
        Ok(match self {
            InitialDatum::Fourier(f) => PeriodicField::from_fn(grid, |x| f.eval(x)),
            InitialDatum::Peakon(p) => one_peakon(p.c, grid),
            InitialDatum::Multipeakon(cfg) => multipeakon_field(cfg, grid)?,
            InitialDatum::Samples(v) => PeriodicField::new(grid, v.clone())?,
        })
    }
}

/// A parsed configuration with its initial datum loaded, when one is configured.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub run: RunConfig,
    pub init: Option<InitialDatum>,
}

impl LoadedConfig {
    pub fn datum(&self) -> CliResult<&InitialDatum> {
        self.init.as_ref().ok_or_else(|| config_err("missing [init] section"))
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn validate_init(init: &InitSection) -> CliResult<()> {
    let count = [
        init.fourier.is_some(),
        init.peakon.is_some(),
        init.multipeakon.is_some(),
        init.samples.is_some(),
    ]
    .iter()
    .filter(|b| **b)
    .count();
    if count != 1 {
        return Err(config_err(format!(
            "[init] needs exactly one of fourier, peakon, multipeakon, samples; found {count}"
        )));
    }
    if let Some(f) = &init.fourier {
        if f.modes.iter().any(|m| m.k == 0) {
            return Err(config_err("Fourier modes start at k = 1; use `mean` for k = 0"));
        }
        let all = f.modes.iter().flat_map(|m| [m.cos_amp, m.sin_amp]);
        if !f.mean.is_finite() || all.clone().any(|a| !a.is_finite()) {
            return Err(config_err("non-finite Fourier coefficient"));
        }
    }
    if let Some(p) = &init.multipeakon {
        p.validate().map_err(|e| config_err(e.to_string()))?;
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str, json: bool) -> CliResult<Self> {
        if json {
            serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| config_err(e.to_string()))
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            n: self.grid.n,
            dt0: self.time.dt0,
            rel_tol: self.time.rel_tol,
            abs_tol: self.time.abs_tol,
            slope_stop: self.blowup.slope_stop,
            dt_min: self.time.dt_min,
            t_max: self.time.t_max,
            record_every: self.time.record_every,
            cfl: self.time.cfl,
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            w_gate: self.blowup.w_gate,
            min_resolvedness: self.blowup.min_resolvedness,
            ..FitConfig::default()
        }
    }

    /// Checks everything that does not need the file system.
    pub fn validate(&self) -> CliResult<()> {
        if !self.model.lambda.is_finite() {
            return Err(config_err("model.lambda must be finite"));
        }
        self.solver_config()
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        if !(self.blowup.w_gate < 0.0) {
            return Err(config_err("blowup.w_gate must be negative"));
        }
        if !(0.0..=1.0).contains(&self.blowup.min_resolvedness) {
            return Err(config_err("blowup.min_resolvedness must lie in [0, 1]"));
        }
        if self.outputs.prefix.is_empty() || self.outputs.prefix.contains(['/', '\\']) {
            return Err(config_err("outputs.prefix must be a non-empty file name"));
        }
        if let Some(init) = &self.init {
            validate_init(init)?;
        }
        if self.verify.cases == 0 || self.verify.oracle_cases == 0 {
            return Err(config_err("verify.cases and verify.oracle_cases must be at least 1"));
        }
        if self.verify.lambda_spec.iter().any(|l| *l == 0.0 || !l.is_finite()) {
            return Err(config_err("verify.lambda_spec entries must be finite and nonzero"));
        }
        if let Some(p) = self.verify.perturb_affine {
            if !(1..=3).contains(&p.row) || !(1..=3).contains(&p.col) {
                return Err(config_err("verify.perturb_affine row and col must lie in 1..=3"));
            }
        }
        if self.sweep.mean.is_some() || self.sweep.amplitude.is_some() {
            if !self.init.as_ref().is_some_and(|i| i.fourier.is_some()) {
                return Err(config_err("sweep.mean and sweep.amplitude need a Fourier initial datum"));
            }
        }
        Ok(())
    }

    /// Resolves the initial datum; sample paths are relative to `base_dir`.
    pub fn load_init(&self, base_dir: &Path) -> CliResult<InitialDatum> {
        self.validate()?;
        let init = self.init.as_ref().ok_or_else(|| config_err("missing [init] section"))?;
        if let Some(f) = &init.fourier {
            return Ok(InitialDatum::Fourier(f.clone()));
        }
        if let Some(p) = init.peakon {
            return Ok(InitialDatum::Peakon(p));
        }
        if let Some(p) = &init.multipeakon {
            return Ok(InitialDatum::Multipeakon(p.clone()));
        }
        let rel = init.samples.as_ref().expect("validated");
        let path = base_dir.join(rel);
        if !path.is_file() {
            return Err(config_err(format!("samples file {} does not exist", path.display())));
        }
        let values = read_samples(&path)?;
        if values.len() != self.grid.n {
            return Err(config_err(format!(
                "samples file has {} values but grid.n = {}",
                values.len(),
                self.grid.n
            )));
        }
        Ok(InitialDatum::Samples(values))
    }
}

/// Reads a single-column CSV of reals. A non-numeric first row is taken as a header.
pub fn read_samples(path: &Path) -> CliResult<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != 1 {
            return Err(config_err(format!("{}: row {} has {} columns", path.display(), i + 1, rec.len())));
        }
        match rec[0].parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => return Err(config_err(format!("{}: non-finite value {v}", path.display()))),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(config_err(format!("{}: row {} is not a number", path.display(), i + 1))),
        }
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        config_err(format!("{}: {e}", path.display()))
    }
}

/// Reads and validates a configuration file, applying command-line overrides.
pub fn load(path: &Path, out: Option<&Path>, n: Option<usize>) -> CliResult<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut run = RunConfig::parse(&text, json)?;
    if let Some(dir) = out {
        run.outputs.dir = dir.to_path_buf();
    }
    if let Some(n) = n {
        run.grid.n = n;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    run.validate()?;
    let init = match run.init {
        Some(_) => Some(run.load_init(base)?),
        None => None,
    };
    Ok(LoadedConfig { run, init })
}
