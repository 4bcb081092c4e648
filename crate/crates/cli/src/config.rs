//! Run configuration. One JSON document; every physical quantity carries its
//! unit in the key name, and angular frequencies are given as ω/2π.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xkerr::cavity::{AtomCloud, CavityError, CavityParams};
use xkerr::conditioning::{ConditioningError, DetectionChannel};
use xkerr::dwell::{DwellError, PulseKind, PulseShape};
use xkerr::tomography::{DensityMatrix4, DensityMatrixJson};
use xkerr::units;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config {path}: at `{field}`: {reason}")]
    Parse { path: String, field: String, reason: String },
    #[error("config: `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityConfig {
    pub kappa0_over_2pi_khz: f64,
    pub g_over_2pi_mhz: f64,
    pub gamma_over_2pi_mhz: f64,
    pub eta: f64,
    pub delta_c_over_2pi_khz: f64,
    pub finesse: f64,
    pub waist_um: f64,
    pub wavelength_nm: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        let p = CavityParams::experiment();
        Self {
            kappa0_over_2pi_khz: units::to_khz(p.kappa0),
            g_over_2pi_mhz: units::to_mhz(p.g),
            gamma_over_2pi_mhz: units::to_mhz(p.gamma),
            eta: p.eta,
            delta_c_over_2pi_khz: units::to_khz(p.delta_c),
            finesse: p.finesse,
            waist_um: p.waist * 1e6,
            wavelength_nm: p.wavelength * 1e9,
        }
    }
}

impl CavityConfig {
    pub fn params(&self) -> Result<CavityParams, ConfigError> {
        let p = CavityParams {
            kappa0: units::khz(self.kappa0_over_2pi_khz),
            g: units::mhz(self.g_over_2pi_mhz),
            gamma: units::mhz(self.gamma_over_2pi_mhz),
            eta: self.eta,
            delta_c: units::khz(self.delta_c_over_2pi_khz),
            finesse: self.finesse,
            waist: self.waist_um * 1e-6,
            wavelength: self.wavelength_nm * 1e-9,
        };
        p.validate().map_err(|e| match e {
            CavityError::InvalidParam { field, reason } => invalid(format!("cavity.{}", cavity_key(field)), reason),
            other => invalid("cavity", other.to_string()),
        })?;
        Ok(p)
    }
}

fn cavity_key(field: &str) -> &str {
    match field {
        "kappa0" => "kappa0_over_2pi_khz",
        "g" => "g_over_2pi_mhz",
        "gamma" => "gamma_over_2pi_mhz",
        "delta_c" => "delta_c_over_2pi_khz",
        "waist" => "waist_um",
        "wavelength" => "wavelength_nm",
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudConfig {
    pub sigma_radial_um: f64,
    pub sigma_axial_um: f64,
    pub offset_um: [f64; 3],
}

impl Default for CloudConfig {
    fn default() -> Self {
        let c = AtomCloud::experiment();
        Self { sigma_radial_um: c.sigma_radial * 1e6, sigma_axial_um: c.sigma_axial * 1e6, offset_um: c.offset.map(|v| v * 1e6) }
    }
}

impl CloudConfig {
    pub fn cloud(&self) -> Result<AtomCloud, ConfigError> {
        let c = AtomCloud {
            sigma_radial: self.sigma_radial_um * 1e-6,
            sigma_axial: self.sigma_axial_um * 1e-6,
            offset: self.offset_um.map(|v| v * 1e-6),
        };
        c.validate().map_err(|e| match e {
            CavityError::InvalidCloud { field, reason } => invalid(format!("cloud.{field}_um"), reason),
            other => invalid("cloud", other.to_string()),
        })?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub efficiency: f64,
    pub background_rate_per_s: f64,
    pub window_us: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { efficiency: 0.2, background_rate_per_s: 0.0, window_us: 0.5 }
    }
}

impl ChannelConfig {
    pub fn channel(&self) -> Result<DetectionChannel, ConfigError> {
        DetectionChannel::new(self.efficiency, self.background_rate_per_s, units::micros(self.window_us)).map_err(|e| match e {
            ConditioningError::Invalid { field, reason } => invalid(format!("channel.{}", channel_key(field)), reason),
            other => invalid("channel", other.to_string()),
        })
    }
}

fn channel_key(field: &str) -> &str {
    match field {
        "background_rate" => "background_rate_per_s",
        "window" => "window_us",
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    pub kind: PulseKind,
    /// Length of a square pulse, FWHM of a Gaussian one.
    pub duration_ns: f64,
    pub mean_photons: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self { kind: PulseKind::Square, duration_ns: 200.0, mean_photons: 0.05 }
    }
}

impl PulseConfig {
    pub fn pulse(&self) -> Result<PulseShape, ConfigError> {
        let duration = self.duration_ns * 1e-9;
        let p = match self.kind {
            PulseKind::Square => PulseShape::square(duration, self.mean_photons),
            PulseKind::Gaussian => PulseShape::gaussian(duration, self.mean_photons),
        };
        p.validate().map_err(|e| match e {
            DwellError::Invalid { field, reason } => invalid(format!("pulse.{}", pulse_key(field)), reason),
            other => invalid("pulse", other.to_string()),
        })?;
        Ok(p)
    }
}

fn pulse_key(field: &str) -> &str {
    match field {
        "duration" => "duration_ns",
        "amplitude" => "mean_photons",
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    #[serde(rename = "delta_over_2pi_mhz")]
    DeltaOver2piMhz,
    ControlMeanPhotons,
    ConditioningTimeUs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|k| if k + 1 == self.points { self.stop } else { self.start + step * k as f64 }).collect()
    }

    fn default_for(variable: SweepVariable) -> Self {
        match variable {
            SweepVariable::DeltaOver2piMhz => Sweep { variable, start: -20.0, stop: 20.0, points: 81 },
            SweepVariable::ControlMeanPhotons => Sweep { variable, start: 0.0, stop: 1.5, points: 16 },
            SweepVariable::ConditioningTimeUs => Sweep { variable, start: 0.25, stop: 6.0, points: 24 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditioningConfig {
    /// Control-atom detuning that sets the single-photon phase.
    pub delta_over_2pi_mhz: f64,
    /// Overrides the single-photon phase from the cavity model.
    pub single_photon_phase_rad: Option<f64>,
    pub detected_photons: u32,
}

impl Default for ConditioningConfig {
    fn default() -> Self {
        Self { delta_over_2pi_mhz: -8.0, single_photon_phase_rad: None, detected_photons: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwellConfig {
    pub trials: u64,
    /// Control-atom detuning that sets the light shift.
    pub delta_over_2pi_mhz: f64,
    /// Span over which background clicks are drawn.
    pub observation_us: f64,
}

impl Default for DwellConfig {
    fn default() -> Self {
        Self { trials: 1_000_000, delta_over_2pi_mhz: -8.0, observation_us: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    MaximallyMixed,
    /// The tabulated physical estimate.
    Measured,
    PhaseEntangled { theta_rad: f64, signal_mean_photons: f64, control_mean_photons: f64 },
    Density { re: Box<[[f64; 4]; 4]>, im: Box<[[f64; 4]; 4]> },
}

impl StateConfig {
    pub fn density(&self) -> Result<DensityMatrix4, ConfigError> {
        let field = "tomography.simulate.state";
        match self {
            StateConfig::MaximallyMixed => Ok(DensityMatrix4::maximally_mixed()),
            StateConfig::Measured => Ok(xkerr::tomography::reference::measured_physical()),
            StateConfig::PhaseEntangled { theta_rad, signal_mean_photons, control_mean_photons } => {
                xkerr::tomography::two_mode_state(*theta_rad, *signal_mean_photons, *control_mean_photons)
                    .map_err(|e| invalid(field, e.to_string()))
            }
            StateConfig::Density { re, im } => {
                let rho = DensityMatrix4::try_from(&DensityMatrixJson { re: **re, im: **im }).map_err(|e| invalid(field, e.to_string()))?;
                if !rho.is_psd() {
                    return Err(invalid(field, format!("not positive semidefinite (min eigenvalue {:e})", rho.min_eigenvalue())));
                }
                Ok(rho)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub state: StateConfig,
    /// Expected coincidences summed over the four direct settings.
    pub counts_scale: f64,
    pub noise: xkerr::synth::Noise,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { state: StateConfig::Measured, counts_scale: 1e4, noise: xkerr::synth::Noise::None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    pub detection_efficiency: f64,
    /// Reference fringe contrast per interference setting.
    pub contrast_ref: [f64; 12],
    /// Conditioning events behind each fringe; when absent, the direct
    /// coincidence total corrected for detection efficiency, per sample.
    pub conditioning_totals: Option<[f64; 12]>,
    pub bootstrap_resamples: usize,
    pub max_evaluations: usize,
    pub simulate: SimulateConfig,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            detection_efficiency: 1.0,
            contrast_ref: [1.0; 12],
            conditioning_totals: None,
            bootstrap_resamples: 100,
            max_evaluations: 100_000,
            simulate: SimulateConfig::default(),
        }
    }
}

impl TomographyConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(invalid("tomography.detection_efficiency", format!("must lie in (0, 1], got {}", self.detection_efficiency)));
        }
        if let Some(k) = self.contrast_ref.iter().position(|c| !(*c > 0.0 && *c <= 1.0)) {
            return Err(invalid(format!("tomography.contrast_ref[{k}]"), format!("must lie in (0, 1], got {}", self.contrast_ref[k])));
        }
        if let Some(totals) = &self.conditioning_totals {
            if let Some(k) = totals.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
                return Err(invalid(format!("tomography.conditioning_totals[{k}]"), format!("must be > 0, got {}", totals[k])));
            }
        }
        if self.bootstrap_resamples == 1 {
            return Err(invalid("tomography.bootstrap_resamples", "must be 0 (off) or >= 2"));
        }
        if self.max_evaluations == 0 {
            return Err(invalid("tomography.max_evaluations", "must be >= 1"));
        }
        let sim = &self.simulate;
        if !(sim.counts_scale.is_finite() && sim.counts_scale > 0.0) {
            return Err(invalid("tomography.simulate.counts_scale", format!("must be > 0, got {}", sim.counts_scale)));
        }
        sim.state.density()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cavity: CavityConfig,
    pub cloud: CloudConfig,
    pub channel: ChannelConfig,
    pub pulse: PulseConfig,
    pub sweeps: Vec<Sweep>,
    pub seed: u64,
    pub output: OutputConfig,
    pub conditioning: ConditioningConfig,
    pub dwell: DwellConfig,
    pub tomography: TomographyConfig,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            field: e.path().to_string(),
            reason: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Checks every block, reporting the first offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.cavity.params()?;
        self.cloud.cloud()?;
        self.channel.channel()?;
        self.pulse.pulse()?;
        for (k, s) in self.sweeps.iter().enumerate() {
            if s.points < 2 {
                return Err(invalid(format!("sweeps[{k}].points"), format!("must be >= 2, got {}", s.points)));
            }
            if !(s.start.is_finite() && s.stop.is_finite()) {
                return Err(invalid(format!("sweeps[{k}]"), "start and stop must be finite"));
            }
            if self.sweeps[..k].iter().any(|o| o.variable == s.variable) {
                return Err(invalid(format!("sweeps[{k}].variable"), "swept more than once"));
            }
            let nonneg = matches!(s.variable, SweepVariable::ControlMeanPhotons | SweepVariable::ConditioningTimeUs);
            if nonneg && s.start.min(s.stop) < 0.0 {
                return Err(invalid(format!("sweeps[{k}]"), "range must be non-negative"));
            }
        }
        if let Some(phi) = self.conditioning.single_photon_phase_rad {
            if !phi.is_finite() {
                return Err(invalid("conditioning.single_photon_phase_rad", "must be finite"));
            }
        }
        if !self.conditioning.delta_over_2pi_mhz.is_finite() {
            return Err(invalid("conditioning.delta_over_2pi_mhz", "must be finite"));
        }
        if self.dwell.trials == 0 {
            return Err(invalid("dwell.trials", "must be >= 1"));
        }
        if !self.dwell.delta_over_2pi_mhz.is_finite() {
            return Err(invalid("dwell.delta_over_2pi_mhz", "must be finite"));
        }
        if !(self.dwell.observation_us.is_finite() && self.dwell.observation_us > 0.0) {
            return Err(invalid("dwell.observation_us", "must be > 0"));
        }
        self.tomography.validate()
    }

    /// The configured sweep of `variable`, or its default range.
    pub fn sweep(&self, variable: SweepVariable) -> Sweep {
        self.sweeps.iter().copied().find(|s| s.variable == variable).unwrap_or_else(|| Sweep::default_for(variable))
    }
}
