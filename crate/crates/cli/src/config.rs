use std::f64::consts::{FRAC_PI_2, PI};

use esoc_core::dynamics::{PhaseConvention, TimeGrid};
use esoc_core::model::{
    beta_from_kelvin, langevin_system, reduce_to_normal_modes, BathConfig, DuschinskiiSystem, LangevinSpec,
    QuadraticVibronic,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Points per angle axis in the default sweeps.
pub const DEFAULT_AXIS_POINTS: usize = 24;

/// Config file as written: every field optional, unknown keys rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    figure: Option<String>,
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    numerics: NumericsSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    marcus: MarcusSection,
    #[serde(default)]
    bath_convergence: BathSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    langevin: Option<LangevinSection>,
    raw: Option<RawModel>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LangevinSection {
    omega1: Option<f64>,
    omega2: Option<f64>,
    gamma: Option<f64>,
    theta: Option<f64>,
    phi: Option<f64>,
    eta: Option<f64>,
    d: Option<f64>,
    w: Option<f64>,
    delta_g: Option<f64>,
    v: Option<f64>,
    v_im: Option<f64>,
    beta: Option<f64>,
    temperature_k: Option<f64>,
    modes_per_bath: Option<usize>,
    cutoff: Option<f64>,
}

/// A quadratic two-state Hamiltonian in arbitrary coordinates; matrices are row lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub omega2_g: Vec<Vec<f64>>,
    pub omega2_e: Vec<Vec<f64>>,
    pub lambda_g: Vec<f64>,
    pub lambda_e: Vec<f64>,
    #[serde(default)]
    pub e_g: f64,
    #[serde(default)]
    pub e_e: f64,
    pub v: f64,
    #[serde(default)]
    pub v_im: f64,
    pub w: Vec<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    t_max: Option<f64>,
    steps: Option<usize>,
    dt: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NumericsSection {
    phase_convention: Option<PhaseConvention>,
}

/// Either explicit values or `points` evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AxisSpec {
    Values(Vec<f64>),
    Range(AxisRange),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisRange {
    start: f64,
    stop: f64,
    points: usize,
}

impl AxisSpec {
    fn resolve(&self, name: &str) -> CliResult<Vec<f64>> {
        let values = match self {
            AxisSpec::Values(v) => v.clone(),
            AxisSpec::Range(r) => {
                if r.points == 0 {
                    return Err(CliError::Validation(format!("{name} axis needs at least one point")));
                }
                linspace(r.start, r.stop, r.points)
            }
        };
        if values.is_empty() {
            return Err(CliError::Validation(format!("{name} axis is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Validation(format!("{name} axis has non-finite values")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    phi: Option<AxisSpec>,
    eta: Option<AxisSpec>,
    temperature_k: Option<AxisSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarcusSection {
    dg_min: Option<f64>,
    dg_max: Option<f64>,
    points: Option<usize>,
    w_values: Option<Vec<f64>>,
    phi_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BathSection {
    modes: Option<Vec<usize>>,
    cutoffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<String>,
    run_id: Option<String>,
}

/// The model a run works on.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Langevin(LangevinSpec),
    Raw(RawModel),
}

impl Model {
    pub fn beta(&self) -> f64 {
        match self {
            Model::Langevin(s) => s.beta,
            Model::Raw(r) => r.beta,
        }
    }

    pub fn langevin(&self) -> CliResult<&LangevinSpec> {
        match self {
            Model::Langevin(s) => Ok(s),
            Model::Raw(_) => Err(CliError::Validation(
                "this command sweeps Langevin parameters and needs [model.langevin]".into(),
            )),
        }
    }

    /// Reduced normal-mode system.
    pub fn system(&self) -> CliResult<DuschinskiiSystem> {
        match self {
            Model::Langevin(s) => Ok(langevin_system(s)?),
            Model::Raw(r) => Ok(reduce_to_normal_modes(&r.to_vibronic()?)?),
        }
    }
}

impl RawModel {
    pub fn to_vibronic(&self) -> CliResult<QuadraticVibronic> {
        let n = self.lambda_g.len();
        let matrix = |name: &str, rows: &[Vec<f64>]| -> CliResult<DMatrix<f64>> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(CliError::Validation(format!("{name} must be {n}x{n}")));
            }
            Ok(DMatrix::from_row_iterator(n, n, rows.iter().flatten().copied()))
        };
        if self.lambda_e.len() != n || self.w.len() != n {
            return Err(CliError::Validation(format!(
                "lambda_e and w must have length {n} like lambda_g"
            )));
        }
        let h = QuadraticVibronic {
            omega2_g: matrix("omega2_g", &self.omega2_g)?,
            omega2_e: matrix("omega2_e", &self.omega2_e)?,
            lambda_g: DVector::from_vec(self.lambda_g.clone()),
            lambda_e: DVector::from_vec(self.lambda_e.clone()),
            e_g: self.e_g,
            e_e: self.e_e,
            v: Complex64::new(self.v, self.v_im),
            w: DVector::from_vec(self.w.clone()),
        };
        h.validate()?;
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxes {
    pub phi: Vec<f64>,
    pub eta: Vec<f64>,
    pub temperature_k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarcusRange {
    pub dg_min: f64,
    pub dg_max: f64,
    pub points: usize,
    /// Spin-orbit magnitudes `|W|`, one rate column each.
    pub w_values: Vec<f64>,
    /// Langevin `φ` values; empty for raw models.
    pub phi_values: Vec<f64>,
}

impl MarcusRange {
    pub fn delta_gs(&self) -> Vec<f64> {
        linspace(self.dg_min, self.dg_max, self.points)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.dg_min.is_finite() && self.dg_max.is_finite() && self.dg_min < self.dg_max) {
            return Err(CliError::Validation("marcus range needs dg_min < dg_max".into()));
        }
        if self.points < 3 {
            return Err(CliError::Validation("marcus curve needs at least 3 points".into()));
        }
        if self.w_values.is_empty() || self.w_values.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(CliError::Validation("marcus w_values must be non-negative magnitudes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BathStudy {
    pub modes: Vec<usize>,
    pub cutoffs: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OutputSettings {
    /// Not part of the content hash.
    #[serde(skip)]
    pub dir: Option<String>,
    pub run_id: Option<String>,
}

/// A validated run configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub figure: Option<String>,
    pub model: Model,
    pub grid: TimeGrid,
    pub phase_convention: PhaseConvention,
    pub sweep: SweepAxes,
    pub marcus: MarcusRange,
    pub bath_convergence: BathStudy,
    pub output: OutputSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("the empty config is valid")
    }
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|k| start + (stop - start) * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn validation(e: esoc_core::Error) -> CliError {
    match e {
        esoc_core::Error::InvalidParameter(msg) | esoc_core::Error::Dimension(msg) => CliError::Validation(msg),
        other => CliError::Physics(other),
    }
}

fn resolve_langevin(s: &LangevinSection) -> CliResult<LangevinSpec> {
    let d = LangevinSpec::default();
    let omega1 = s.omega1.unwrap_or(d.omega1);
    let omega2 = s.omega2.unwrap_or(d.omega2);
    let default_bath = BathConfig::for_primary(omega1, omega2);
    let beta = match (s.beta, s.temperature_k) {
        (Some(_), Some(_)) => {
            return Err(CliError::Validation("give either beta or temperature_k, not both".into()))
        }
        (_, Some(t)) if !(t > 0.0 && t.is_finite()) => {
            return Err(CliError::Validation("temperature_k must be positive".into()))
        }
        (_, Some(t)) => beta_from_kelvin(t),
        (Some(b), None) => b,
        (None, None) => d.beta,
    };
    let spec = LangevinSpec {
        omega1,
        omega2,
        gamma: s.gamma.unwrap_or(d.gamma),
        theta: s.theta.unwrap_or(d.theta),
        phi: s.phi.unwrap_or(d.phi),
        eta: s.eta.unwrap_or(d.eta),
        d_mag: s.d.unwrap_or(d.d_mag),
        w_mag: s.w.unwrap_or(d.w_mag),
        delta_g: s.delta_g.unwrap_or(d.delta_g),
        v: Complex64::new(s.v.unwrap_or(d.v.re), s.v_im.unwrap_or(d.v.im)),
        beta,
        bath: BathConfig {
            modes_per_bath: s.modes_per_bath.unwrap_or(default_bath.modes_per_bath),
            cutoff: s.cutoff.unwrap_or(default_bath.cutoff),
        },
    };
    spec.validate().map_err(validation)?;
    Ok(spec)
}

fn resolve_raw(r: &RawModel) -> CliResult<RawModel> {
    if !(r.beta > 0.0 && r.beta.is_finite()) {
        return Err(CliError::Validation("beta must be positive".into()));
    }
    r.to_vibronic()?;
    Ok(r.clone())
}

fn resolve_grid(g: &GridSection) -> CliResult<TimeGrid> {
    let default = TimeGrid::default();
    let t_max = g.t_max.unwrap_or(default.t_max);
    let grid = match (g.steps, g.dt) {
        (Some(_), Some(_)) => return Err(CliError::Validation("give either grid.steps or grid.dt, not both".into())),
        (Some(steps), None) => TimeGrid::new(t_max, steps),
        (None, Some(dt)) => TimeGrid::with_spacing(t_max, dt),
        (None, None) => TimeGrid::new(t_max, default.steps),
    };
    grid.map_err(validation)
}

/// Parses and validates a TOML run configuration, filling defaults.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let model = match (&raw.model.langevin, &raw.model.raw) {
        (Some(_), Some(_)) => {
            return Err(CliError::Validation(
                "exactly one of [model.langevin] and [model.raw] may be given".into(),
            ))
        }
        (None, Some(r)) => Model::Raw(resolve_raw(r)?),
        (l, None) => Model::Langevin(resolve_langevin(&l.clone().unwrap_or_default())?),
    };
    let grid = resolve_grid(&raw.grid)?;

    let axis = |spec: &Option<AxisSpec>, name: &str, default: Vec<f64>| match spec {
        Some(a) => a.resolve(name),
        None => Ok(default),
    };
    let sweep = SweepAxes {
        phi: axis(&raw.sweep.phi, "phi", linspace(-FRAC_PI_2, FRAC_PI_2, DEFAULT_AXIS_POINTS))?,
        eta: axis(&raw.sweep.eta, "eta", linspace(0.0, PI, DEFAULT_AXIS_POINTS))?,
        temperature_k: axis(&raw.sweep.temperature_k, "temperature_k", linspace(100.0, 1000.0, 10))?,
    };
    if sweep.temperature_k.iter().any(|t| *t <= 0.0) {
        return Err(CliError::Validation("temperatures must be positive".into()));
    }

    let m = &raw.marcus;
    let (w_default, phi_default) = match &model {
        Model::Langevin(s) => (vec![0.0, s.w_mag], vec![s.phi]),
        Model::Raw(r) => (vec![0.0, r.w.iter().map(|x| x * x).sum::<f64>().sqrt()], Vec::new()),
    };
    let phi_values = m.phi_values.clone().unwrap_or(phi_default);
    if matches!(model, Model::Raw(_)) && !phi_values.is_empty() {
        return Err(CliError::Validation("marcus.phi_values needs a Langevin model".into()));
    }
    let marcus = MarcusRange {
        dg_min: m.dg_min.unwrap_or(-0.04),
        dg_max: m.dg_max.unwrap_or(0.0),
        points: m.points.unwrap_or(40),
        w_values: m.w_values.clone().unwrap_or(w_default),
        phi_values,
    };
    marcus.validate()?;

    let cutoff_default = match &model {
        Model::Langevin(s) => vec![s.bath.cutoff],
        Model::Raw(_) => Vec::new(),
    };
    let bath_convergence = BathStudy {
        modes: raw.bath_convergence.modes.clone().unwrap_or_else(|| vec![5, 10, 20, 40]),
        cutoffs: raw.bath_convergence.cutoffs.clone().unwrap_or(cutoff_default),
    };

    if let Some(id) = &raw.output.run_id {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(CliError::Validation(
                "output.run_id may only contain letters, digits, '-', '_' and '.'".into(),
            ));
        }
    }

    Ok(RunConfig {
        figure: raw.figure,
        model,
        grid,
        phase_convention: raw.numerics.phase_convention.unwrap_or_default(),
        sweep,
        marcus,
        bath_convergence,
        output: OutputSettings {
            dir: raw.output.dir,
            run_id: raw.output.run_id,
        },
    })
}
