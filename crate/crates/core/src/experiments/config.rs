//! Scenario configuration: a TOML file with `[system]`, `[solver]`, `[sweep]`
//! and `[output]` sections. Frequencies are entered in Hz (cycles per
//! second) and converted to angular units here.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{resonant_delta, SystemParams};

const TWO_PI: f64 = 2.0 * PI;

/// Model parameters as entered by a user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub omega0_hz: f64,
    pub g_hz: f64,
    pub omega_p_hz: f64,
    /// Qubit drive detuning; resonant with the renormalized resonator when
    /// absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_hz: Option<f64>,
    pub epsilon_hz: f64,
    pub delta_d_hz: f64,
    pub gamma_hz: f64,
    pub gamma_phi_hz: f64,
    /// κ = ω₀/Q unless `kappa_hz` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_hz: Option<f64>,
    pub n_th: f64,
    pub fock_dim: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            omega0_hz: 1e9,
            g_hz: 80e6,
            omega_p_hz: 100e6,
            delta_hz: None,
            epsilon_hz: 0.2e6,
            delta_d_hz: 0.0,
            gamma_hz: 1e6,
            gamma_phi_hz: 0.0,
            quality_factor: None,
            kappa_hz: None,
            n_th: 0.0,
            fock_dim: 10,
        }
    }
}

pub const DEFAULT_QUALITY: f64 = 5e3;

/// Parameter names accepted as sweep axes and by [`SystemConfig::set`].
pub const SYSTEM_PARAMS: &[&str] = &[
    "omega0_hz",
    "g_hz",
    "omega_p_hz",
    "delta_hz",
    "epsilon_hz",
    "delta_d_hz",
    "gamma_hz",
    "gamma_phi_hz",
    "quality_factor",
    "kappa_hz",
    "n_th",
    "fock_dim",
];

impl SystemConfig {
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "omega0_hz" => self.omega0_hz = value,
            "g_hz" => self.g_hz = value,
            "omega_p_hz" => self.omega_p_hz = value,
            "delta_hz" => self.delta_hz = Some(value),
            "epsilon_hz" => self.epsilon_hz = value,
            "delta_d_hz" => self.delta_d_hz = value,
            "gamma_hz" => self.gamma_hz = value,
            "gamma_phi_hz" => self.gamma_phi_hz = value,
            "quality_factor" => {
                self.quality_factor = Some(value);
                self.kappa_hz = None;
            }
            "kappa_hz" => {
                self.kappa_hz = Some(value);
                self.quality_factor = None;
            }
            "n_th" => self.n_th = value,
            "fock_dim" => {
                if !(value >= 2.0 && value.fract() == 0.0 && value <= 1e4) {
                    return Err(Error::Config(format!("fock_dim must be an integer >= 2, got {value}")));
                }
                self.fock_dim = value as usize;
            }
            other => return Err(Error::Config(format!("unknown system parameter '{other}'"))),
        }
        Ok(())
    }

    pub fn kappa(&self) -> Result<f64> {
        match (self.kappa_hz, self.quality_factor) {
            (Some(_), Some(_)) => Err(Error::Config("give either kappa_hz or quality_factor, not both".into())),
            (Some(k), None) => Ok(TWO_PI * k),
            (None, q) => {
                let q = q.unwrap_or(DEFAULT_QUALITY);
                if !(q > 0.0) {
                    return Err(Error::Config(format!("quality_factor must be positive, got {q}")));
                }
                Ok(TWO_PI * self.omega0_hz / q)
            }
        }
    }

    pub fn to_params(&self) -> Result<SystemParams> {
        let mut p = SystemParams {
            omega0: TWO_PI * self.omega0_hz,
            g: TWO_PI * self.g_hz,
            omega_p_drive: TWO_PI * self.omega_p_hz,
            delta: 0.0,
            epsilon: TWO_PI * self.epsilon_hz,
            delta_d: TWO_PI * self.delta_d_hz,
            gamma: TWO_PI * self.gamma_hz,
            gamma_phi: TWO_PI * self.gamma_phi_hz,
            kappa: self.kappa()?,
            n_th: self.n_th,
            fock_dim: self.fock_dim,
        };
        p.delta = match self.delta_hz {
            Some(d) => TWO_PI * d,
            None => resonant_delta(&p)?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Transient length in units of 1/κ.
    pub transient_kappa: f64,
    /// Averaging window in drive periods.
    pub window_periods: f64,
    pub samples: usize,
    pub drift_tol: f64,
    /// Start phases averaged over for driven g₂(τ).
    pub phases: usize,
    /// Cover the transient with powers of the one-period propagator.
    pub accelerate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 50_000_000,
            transient_kappa: 20.0,
            window_periods: 10.0,
            samples: 200,
            drift_tol: 0.01,
            phases: 8,
            accelerate: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Steady-state observables over a parameter grid.
    Sweep,
    /// Time traces from an initial state.
    Evolution,
    /// Steady-state g₂(τ).
    Correlation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// Full time-dependent lab Hamiltonian with all dissipation channels.
    LabFrame,
    /// Static effective Hamiltonian in the drive frame.
    EffectiveStatic,
    /// Closed-form four-state expressions.
    Analytic,
    /// Exact solve of the four-state amplitude equations.
    Oracle,
}

impl std::str::FromStr for Pipeline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lab-frame" => Ok(Pipeline::LabFrame),
            "effective-static" => Ok(Pipeline::EffectiveStatic),
            "analytic" => Ok(Pipeline::Analytic),
            "oracle" => Ok(Pipeline::Oracle),
            _ => Err(Error::Config(format!(
                "unknown pipeline '{s}' (expected lab-frame, effective-static, analytic or oracle)"
            ))),
        }
    }
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pipeline::LabFrame => "lab-frame",
            Pipeline::EffectiveStatic => "effective-static",
            Pipeline::Analytic => "analytic",
            Pipeline::Oracle => "oracle",
        })
    }
}

/// The grid is given either as `values`, or as `start`/`stop` with `step`
/// or `num`. Parsing resolves it to `values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: Kind,
    pub pipeline: Pipeline,
    /// A system parameter for sweeps; `time_s` or `kappa_t` for evolutions;
    /// `tau_s` or `kappa_tau` for correlations.
    pub param: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num: Option<usize>,
    /// Optional outer parameter producing one curve per value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_param: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series_values: Vec<f64>,
    /// Initial product state for evolutions, e.g. `"g0"` or `"e0"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
}

impl SweepConfig {
    pub fn new(kind: Kind, pipeline: Pipeline, param: &str, values: Vec<f64>) -> Self {
        SweepConfig {
            kind,
            pipeline,
            param: param.into(),
            values,
            start: None,
            stop: None,
            step: None,
            num: None,
            series_param: None,
            series_values: Vec::new(),
            initial: None,
        }
    }

    pub fn with_series(mut self, param: &str, values: Vec<f64>) -> Self {
        self.series_param = Some(param.into());
        self.series_values = values;
        self
    }

    /// Replaces `start`/`stop`/`step`/`num` by the explicit grid.
    fn resolve_grid(&mut self) -> Result<()> {
        let range = (self.start, self.stop, self.step, self.num);
        match range {
            (None, None, None, None) => {}
            _ if !self.values.is_empty() => {
                return Err(Error::Config("give either values or start/stop, not both".into()));
            }
            (Some(a), Some(b), Some(h), None) => {
                if !(h > 0.0) || !(b >= a) {
                    return Err(Error::Config("need step > 0 and stop >= start".into()));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize;
                self.values = (0..=n).map(|k| a + k as f64 * h).collect();
            }
            (Some(a), Some(b), None, Some(n)) => {
                self.values = match n {
                    0 => Vec::new(),
                    1 => vec![a],
                    _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
                };
            }
            _ => return Err(Error::Config("a range needs start, stop and exactly one of step or num".into())),
        }
        self.start = None;
        self.stop = None;
        self.step = None;
        self.num = None;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub observables: Vec<String>,
    /// File name inside the output directory; `<name>.csv` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

/// A runnable experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

/// Observables available per scenario kind.
pub fn observables_for(kind: Kind, pipeline: Pipeline) -> &'static [&'static str] {
    match (kind, pipeline) {
        (Kind::Sweep, Pipeline::LabFrame) => {
            &["n_mean", "g2_0", "fidelity", "p_e", "p2", "ratio", "n_ptp", "g2_analytic", "blockade_ratio"]
        }
        (Kind::Sweep, Pipeline::EffectiveStatic) => {
            &["n_mean", "g2_0", "fidelity", "p_e", "p2", "ratio", "g2_analytic", "blockade_ratio"]
        }
        (Kind::Sweep, _) => &["n_mean", "g2_0", "p_e", "p2", "ratio", "g2_analytic", "blockade_ratio"],
        (Kind::Evolution, Pipeline::LabFrame | Pipeline::EffectiveStatic) => {
            &["p0", "p1", "p2", "p3", "n_mean", "p_0e", "p_2g", "p_e"]
        }
        (Kind::Correlation, Pipeline::LabFrame | Pipeline::EffectiveStatic) => &["g2_tau"],
        _ => &[],
    }
}

fn axis_params(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Sweep => SYSTEM_PARAMS,
        Kind::Evolution => &["time_s", "kappa_t"],
        Kind::Correlation => &["tau_s", "kappa_tau"],
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.sweep.resolve_grid()?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Scenario::from_toml(&text)
    }

    /// Canonical TOML form; the config hash is taken over this text.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn config_hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn name(&self) -> &str {
        &self.output.name
    }

    pub fn file_name(&self) -> String {
        self.output.file.clone().unwrap_or_else(|| format!("{}.csv", self.output.name))
    }

    /// Grid, axis and observable compatibility, and that the base and every
    /// series point map to valid model parameters.
    pub fn validate(&self) -> Result<()> {
        let sw = &self.sweep;
        if sw.values.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if !strictly_increasing(&sw.values) {
            return Err(Error::Config("sweep grid must be finite and strictly increasing".into()));
        }
        if !axis_params(sw.kind).contains(&sw.param.as_str()) {
            return Err(Error::Config(format!(
                "axis '{}' is not valid for a {:?} scenario (expected one of {:?})",
                sw.param,
                sw.kind,
                axis_params(sw.kind)
            )));
        }
        if sw.kind != Kind::Evolution && sw.values.iter().any(|&v| v < 0.0) && sw.param != "delta_d_hz" && sw.param != "delta_hz" {
            return Err(Error::Config(format!("axis '{}' must be non-negative", sw.param)));
        }
        if sw.kind == Kind::Evolution && sw.values[0] < 0.0 {
            return Err(Error::Config("evolution times must be non-negative".into()));
        }
        match (&sw.series_param, sw.series_values.is_empty()) {
            (Some(p), false) => {
                if !SYSTEM_PARAMS.contains(&p.as_str()) {
                    return Err(Error::Config(format!("unknown series parameter '{p}'")));
                }
                if sw.kind == Kind::Sweep && *p == sw.param {
                    return Err(Error::Config("series and axis parameters must differ".into()));
                }
            }
            (Some(_), true) => return Err(Error::Config("series_param given without series_values".into())),
            (None, false) => return Err(Error::Config("series_values given without series_param".into())),
            (None, true) => {}
        }
        let allowed = observables_for(sw.kind, sw.pipeline);
        if allowed.is_empty() {
            return Err(Error::Config(format!("pipeline {} cannot run a {:?} scenario", sw.pipeline, sw.kind)));
        }
        if self.output.observables.is_empty() {
            return Err(Error::Config("no observables requested".into()));
        }
        for o in &self.output.observables {
            if !allowed.contains(&o.as_str()) {
                return Err(Error::Config(format!(
                    "observable '{o}' is not available for a {:?} scenario with the {} pipeline (available: {allowed:?})",
                    sw.kind, sw.pipeline
                )));
            }
        }
        if self.output.name.is_empty() || self.output.name.contains(['/', '\\']) {
            return Err(Error::Config("output name must be a non-empty plain file stem".into()));
        }
        if let Some(init) = &sw.initial {
            parse_initial(init, self.system.fock_dim)?;
        }
        let s = &self.solver;
        if !(s.rtol > 0.0 && s.atol > 0.0 && s.window_periods > 0.0 && s.samples >= 2 && s.phases >= 1 && s.drift_tol > 0.0) {
            return Err(Error::Config("solver settings out of range".into()));
        }
        if !(s.transient_kappa >= 0.0) {
            return Err(Error::Config("transient_kappa must be non-negative".into()));
        }
        for sys in self.series_systems()? {
            sys.to_params()?;
        }
        Ok(())
    }

    /// The base system for every series value (just the base without a series).
    pub fn series_systems(&self) -> Result<Vec<SystemConfig>> {
        match &self.sweep.series_param {
            None => Ok(vec![self.system.clone()]),
            Some(p) => self
                .sweep
                .series_values
                .iter()
                .map(|&v| {
                    let mut s = self.system.clone();
                    s.set(p, v)?;
                    Ok(s)
                })
                .collect(),
        }
    }
}

/// Parses `"g0"`, `"e2"`, … into (qubit, phonon) indices.
pub fn parse_initial(s: &str, fock_dim: usize) -> Result<(usize, usize)> {
    let mut chars = s.chars();
    let q = match chars.next() {
        Some('g') => 0,
        Some('e') => 1,
        _ => return Err(Error::Config(format!("initial state '{s}' must look like g0 or e0"))),
    };
    let n: usize = chars
        .as_str()
        .parse()
        .map_err(|_| Error::Config(format!("initial state '{s}' must look like g0 or e0")))?;
    if n >= fock_dim {
        return Err(Error::Config(format!("initial phonon number {n} exceeds fock_dim {fock_dim}")));
    }
    Ok((q, n))
}
