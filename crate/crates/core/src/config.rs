//! Experiment configuration: file schema, defaults, and unit normalisation.
//!
//! Configuration files are TOML (JSON is accepted as well). Every key carries
//! its unit in the name, e.g. `trap_depth_uK` or `fwhm_us`; loading converts
//! to SI and the in-memory [`ExperimentConfig`] only holds SI values.
//!
//! ```toml
//! schema_version = 1
//! species = "Rb87"
//!
//! [lattice]
//! trap_depth_uK = 740.0
//!
//! [medium]
//! od_fiber = 5.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{joule_to_kelvin, kelvin_to_joule, TWO_PI};
use crate::conveyor::{RampSegment, TrajectorySpec};
use crate::eit::ProbePulse;
use crate::medium::{MediumModel, OdScaleParams};
use crate::species::AtomSpecies;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unit error: {0}")]
    Unit(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// m
    pub lambda: f64,
    /// U0 in J.
    pub trap_depth: f64,
    /// rad/s
    pub omega_z: f64,
    /// rad/s
    pub omega_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudState {
    pub atom_number: f64,
    /// Axial center, m (fiber tip at the fiber's `tip_position`).
    pub center: f64,
    /// 1/e half-width along the axis, m.
    pub width_1e: f64,
    /// K
    pub temperature_radial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberGeometry {
    /// Axial coordinate of the entrance tip, m.
    pub tip_position: f64,
    /// m
    pub length: f64,
    /// m
    pub mode_field_diameter: f64,
    /// MOT center to tip, m.
    pub mot_distance: f64,
}

/// Control-field settings shared by every protocol. Schedules are built from
/// these per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSettings {
    /// On-level Rabi frequency Ω_c, rad/s.
    pub rabi: f64,
    /// Time at which the switch-off ramp starts, s.
    pub switch_off: f64,
    /// Duration of every switch edge, s.
    pub ramp: f64,
    /// Span after re-on that counts as retrieved light, s.
    pub retrieval_window: f64,
    /// Two-photon detuning δ, rad/s.
    pub two_photon_detuning: f64,
}

/// Scenario parameters for the scripted protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSettings {
    /// Storage time T for store/retrieve, s.
    pub storage_time: f64,
    /// Cloud center for in-fiber storage, m.
    pub storage_position: f64,
    /// Total duration of the in-fiber transport, s.
    pub transport_time: f64,
    /// Cruise speed of stored-light transport, m/s.
    pub transport_speed: f64,
    /// Accelerate/decelerate ramp duration, s.
    pub ramp_time: f64,
    /// Fraction of a_max allowed.
    pub safety: f64,
    /// Storage position for inward transport (negative = outside), m.
    pub inward_start: f64,
    /// Storage position for outward transport, m.
    pub outward_start: f64,
    /// Transport distances for interface scans, m.
    pub interface_distances: Vec<f64>,
    /// m/s
    pub comoving_speed: f64,
    /// Storage time of the co-moving protocol, s.
    pub comoving_storage_time: f64,
    /// Lifetime for the in-fiber transport scenario, s.
    pub tau_transport: f64,
    /// Lifetime for the co-moving scenario, s.
    pub tau_comoving: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    /// Grid points per cloud 1/e half-width.
    pub points_per_width: f64,
    /// Half-window size in cloud widths.
    pub window_widths: f64,
    /// dt = min(1/Γ, edge)/dt_divisor.
    pub dt_divisor: f64,
    /// Wait after the control is off before the storage interval starts, s.
    pub settle: f64,
    /// Keep every n-th step in output series.
    pub output_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub species: AtomSpecies,
    pub lattice: LatticeConfig,
    pub cloud: CloudState,
    pub fiber: FiberGeometry,
    pub medium: MediumModel,
    pub probe: ProbePulse,
    pub control: ControlSettings,
    pub trajectory_spec: TrajectorySpec,
    pub protocol: ProtocolSettings,
    pub numerics: Numerics,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ConfigFile::default().resolve().expect("built-in defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        load_config(path)
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(s).map_err(|e| classify(e.message().to_string()))?;
        file.resolve()
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = serde_json::from_str(s).map_err(|e| classify(e.to_string()))?;
        file.resolve()
    }

    /// File form with every float rounded to 15 significant digits, so that
    /// saving and reloading a config is an exact fixed point even though the
    /// unit conversions are not exactly invertible.
    pub fn to_file(&self) -> ConfigFile {
        let mut doc = serde_json::to_value(ConfigFile::from_config(self)).expect("config serialises");
        round_floats(&mut doc);
        serde_json::from_value(doc).expect("rounded config deserialises")
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serialises")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("config serialises")
    }

    /// Applies a dotted-path override in file units, e.g. `medium.tau_storage_ms = 2.0`.
    pub fn with_override(&self, path: &str, value: serde_json::Value) -> Result<Self, ConfigError> {
        let mut doc = self.to_json_value();
        let mut node = &mut doc;
        let mut parts = path.split('.').peekable();
        while let Some(key) = parts.next() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| ConfigError::Schema(format!("`{path}` does not name a config key")))?;
            if !obj.contains_key(key) {
                return Err(ConfigError::Schema(format!("unknown config key `{path}`")));
            }
            if parts.peek().is_none() {
                obj.insert(key.to_string(), value);
                break;
            }
            node = obj.get_mut(key).expect("checked");
        }
        let file: ConfigFile = serde_json::from_value(doc).map_err(|e| classify(e.to_string()))?;
        file.resolve()
    }

    /// Field-by-field comparison with a relative tolerance on every number.
    pub fn approx_eq(&self, other: &Self, rel: f64) -> bool {
        let a = serde_json::to_value(self).expect("serialisable");
        let b = serde_json::to_value(other).expect("serialisable");
        json_approx_eq(&a, &b, rel)
    }
}

fn json_approx_eq(a: &serde_json::Value, b: &serde_json::Value, rel: f64) -> bool {
    use serde_json::Value::*;
    match (a, b) {
        (Number(x), Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            x == y || (x - y).abs() <= rel * x.abs().max(y.abs())
        }
        (Array(x), Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_approx_eq(p, q, rel)),
        (Object(x), Object(y)) => {
            x.len() == y.len()
                && x.iter()
                    .all(|(k, v)| y.get(k).is_some_and(|w| json_approx_eq(v, w, rel)))
        }
        _ => a == b,
    }
}

fn round_floats(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let r: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
            *v = serde_json::json!(r);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_floats),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn classify(msg: String) -> ConfigError {
    if msg.contains("unknown field") || msg.contains("missing field") || msg.contains("unknown variant") {
        ConfigError::Schema(msg)
    } else {
        ConfigError::Parse(msg)
    }
}

/// Reads a TOML or JSON config file, applies defaults and converts to SI.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    if is_json {
        ExperimentConfig::from_json_str(&text)
    } else {
        ExperimentConfig::from_toml_str(&text)
    }
}

// ---------------------------------------------------------------------------
// file schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpeciesEntry {
    Name(String),
    Table(SpeciesFile),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesFile {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    /// Γ/2π
    #[serde(rename = "linewidth_MHz", skip_serializing_if = "Option::is_none")]
    pub linewidth_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_probe_nm: Option<f64>,
    #[serde(rename = "hyperfine_GHz", skip_serializing_if = "Option::is_none")]
    pub hyperfine_ghz: Option<f64>,
    #[serde(rename = "saturation_intensity_mW_cm2", skip_serializing_if = "Option::is_none")]
    pub saturation_intensity_mw_cm2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeFile {
    pub lambda_nm: f64,
    #[serde(rename = "trap_depth_uK")]
    pub trap_depth_uk: f64,
    /// ω_z/2π
    #[serde(rename = "omega_z_kHz")]
    pub omega_z_khz: f64,
    #[serde(rename = "omega_r_kHz")]
    pub omega_r_khz: f64,
}

impl Default for LatticeFile {
    fn default() -> Self {
        Self {
            lambda_nm: 810.0,
            trap_depth_uk: 740.0,
            omega_z_khz: 460.0,
            omega_r_khz: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudFile {
    pub atom_number: f64,
    pub center_mm: f64,
    pub width_1e_mm: f64,
    #[serde(rename = "temperature_radial_uK")]
    pub temperature_radial_uk: f64,
}

impl Default for CloudFile {
    fn default() -> Self {
        Self {
            atom_number: 1.2e5,
            center_mm: 1.0,
            // 1.2 mm full 1/e width
            width_1e_mm: 0.6,
            temperature_radial_uk: 190.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberFile {
    pub tip_position_mm: f64,
    pub length_mm: f64,
    pub mode_field_diameter_um: f64,
    pub mot_distance_mm: f64,
}

impl Default for FiberFile {
    fn default() -> Self {
        Self {
            tip_position_mm: 0.0,
            length_mm: 100.0,
            mode_field_diameter_um: 42.0,
            mot_distance_mm: 6.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumFile {
    pub od_fiber: f64,
    pub od_reference_atoms: f64,
    pub tau_storage_ms: f64,
    pub ramp_penalty_eps: f64,
    pub x_r_mm: f64,
    pub od_floor: f64,
    pub loss_rate_per_s: f64,
    /// γs in 1/s
    pub spin_decoherence_per_s: f64,
}

impl Default for MediumFile {
    fn default() -> Self {
        let m = MediumModel::default();
        Self {
            od_fiber: m.od_fiber,
            od_reference_atoms: m.od_reference_atoms,
            tau_storage_ms: m.tau_storage * 1e3,
            ramp_penalty_eps: m.ramp_penalty_eps,
            x_r_mm: m.od_scale.x_r * 1e3,
            od_floor: m.od_scale.floor,
            loss_rate_per_s: m.loss_rate,
            spin_decoherence_per_s: m.spin_decoherence,
        }
    }
}

/// Used when neither a Rabi frequency nor a power is given.
const DEFAULT_PROBE_RABI_GAMMA: f64 = 0.01;
const DEFAULT_CONTROL_RABI_GAMMA: f64 = 1.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeFile {
    /// Ω_p0 in units of Γ. Takes precedence over `peak_power_nW`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_peak_gamma: Option<f64>,
    #[serde(rename = "peak_power_nW", skip_serializing_if = "Option::is_none")]
    pub peak_power_nw: Option<f64>,
    pub center_us: f64,
    pub fwhm_us: f64,
    /// Δ/2π
    #[serde(rename = "detuning_MHz")]
    pub detuning_mhz: f64,
}

impl Default for ProbeFile {
    fn default() -> Self {
        Self {
            rabi_peak_gamma: None,
            peak_power_nw: None,
            center_us: 1.5,
            fwhm_us: 0.4,
            detuning_mhz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlFile {
    /// Ω_c in units of Γ. Takes precedence over `power_uW`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_gamma: Option<f64>,
    #[serde(rename = "power_uW", skip_serializing_if = "Option::is_none")]
    pub power_uw: Option<f64>,
    pub switch_off_us: f64,
    pub ramp_us: f64,
    pub retrieval_window_us: f64,
    /// δ/2π
    #[serde(rename = "two_photon_detuning_kHz")]
    pub two_photon_detuning_khz: f64,
}

impl Default for ControlFile {
    fn default() -> Self {
        Self {
            rabi_gamma: None,
            power_uw: None,
            switch_off_us: 1.5,
            ramp_us: 0.05,
            retrieval_window_us: 5.0,
            two_photon_detuning_khz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampFile {
    pub duration_ms: f64,
    #[serde(rename = "detuning_start_kHz")]
    pub detuning_start_khz: f64,
    #[serde(rename = "detuning_end_kHz")]
    pub detuning_end_khz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryFile {
    pub direction: f64,
    pub segments: Vec<RampFile>,
}

impl Default for TrajectoryFile {
    fn default() -> Self {
        Self::from_spec(&TrajectorySpec::mot_to_fiber())
    }
}

impl TrajectoryFile {
    fn from_spec(spec: &TrajectorySpec) -> Self {
        Self {
            direction: spec.direction,
            segments: spec
                .segments
                .iter()
                .map(|s| RampFile {
                    duration_ms: s.duration * 1e3,
                    detuning_start_khz: s.detuning_start * 1e-3,
                    detuning_end_khz: s.detuning_end * 1e-3,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolFile {
    pub storage_time_us: f64,
    pub storage_position_mm: f64,
    pub transport_time_ms: f64,
    pub transport_speed_mps: f64,
    pub ramp_ms: f64,
    pub safety: f64,
    pub inward_start_mm: f64,
    pub outward_start_mm: f64,
    pub interface_distances_mm: Vec<f64>,
    pub comoving_speed_mps: f64,
    pub comoving_storage_ms: f64,
    pub tau_transport_ms: f64,
    pub tau_comoving_ms: f64,
}

impl Default for ProtocolFile {
    fn default() -> Self {
        Self {
            storage_time_us: 5.0,
            storage_position_mm: 1.0,
            transport_time_ms: 3.0,
            transport_speed_mps: 0.496,
            ramp_ms: 0.1,
            safety: 0.9,
            inward_start_mm: -1.0,
            outward_start_mm: 0.5,
            interface_distances_mm: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            comoving_speed_mps: 0.496,
            // 1.26 mm at 0.496 m/s
            comoving_storage_ms: 1.26 / 0.496,
            tau_transport_ms: 3.1,
            tau_comoving_ms: 2.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsFile {
    pub points_per_width: f64,
    pub window_widths: f64,
    pub dt_divisor: f64,
    pub settle_us: f64,
    pub output_stride: usize,
}

impl Default for NumericsFile {
    fn default() -> Self {
        Self {
            points_per_width: 25.0,
            window_widths: 5.0,
            dt_divisor: 20.0,
            settle_us: 1.0,
            output_stride: 1,
        }
    }
}

/// On-disk representation. Every section is optional and defaults to the
/// reference parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    /// Magnetic bias field, documentation only.
    #[serde(rename = "bias_field_G", default, skip_serializing_if = "Option::is_none")]
    pub bias_field_g: Option<f64>,
    #[serde(default = "default_species")]
    pub species: SpeciesEntry,
    #[serde(default)]
    pub lattice: LatticeFile,
    #[serde(default)]
    pub cloud: CloudFile,
    #[serde(default)]
    pub fiber: FiberFile,
    #[serde(default)]
    pub medium: MediumFile,
    #[serde(default)]
    pub probe: ProbeFile,
    #[serde(default)]
    pub control: ControlFile,
    #[serde(default)]
    pub trajectory: TrajectoryFile,
    #[serde(default)]
    pub protocol: ProtocolFile,
    #[serde(default)]
    pub numerics: NumericsFile,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

fn default_species() -> SpeciesEntry {
    SpeciesEntry::Name("Rb87".into())
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            bias_field_g: None,
            species: default_species(),
            lattice: LatticeFile::default(),
            cloud: CloudFile::default(),
            fiber: FiberFile::default(),
            medium: MediumFile::default(),
            probe: ProbeFile::default(),
            control: ControlFile::default(),
            trajectory: TrajectoryFile::default(),
            protocol: ProtocolFile::default(),
            numerics: NumericsFile::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::Unit(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn non_negative(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::Unit(format!(
            "{name} must be non-negative and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::Unit(format!("{name} must be finite, got {v}")))
    }
}

impl ConfigFile {
    /// Applies species defaults and converts every field to SI.
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let sp = match &self.species {
            SpeciesEntry::Name(n) => SpeciesFile {
                name: n.clone(),
                ..Default::default()
            },
            SpeciesEntry::Table(t) => t.clone(),
        };
        let base = AtomSpecies::builtin(&sp.name);
        let pick = |over: Option<f64>, scale: f64, fallback: Option<f64>, key: &str| -> Result<f64, ConfigError> {
            match (over, fallback) {
                (Some(v), _) => positive(key, v * scale),
                (None, Some(v)) => Ok(v),
                (None, None) => Err(ConfigError::Schema(format!(
                    "species `{}` has no built-in data; `{key}` is required",
                    sp.name
                ))),
            }
        };
        let species = AtomSpecies {
            name: sp.name.clone(),
            mass: pick(sp.mass_kg, 1.0, base.as_ref().map(|b| b.mass), "mass_kg")?,
            gamma: pick(
                sp.linewidth_mhz,
                TWO_PI * 1e6,
                base.as_ref().map(|b| b.gamma),
                "linewidth_MHz",
            )?,
            lambda_probe: pick(
                sp.lambda_probe_nm,
                1e-9,
                base.as_ref().map(|b| b.lambda_probe),
                "lambda_probe_nm",
            )?,
            delta_hf: pick(
                sp.hyperfine_ghz,
                1e9,
                base.as_ref().map(|b| b.delta_hf),
                "hyperfine_GHz",
            )?,
            saturation_intensity: pick(
                sp.saturation_intensity_mw_cm2,
                10.0,
                base.as_ref().map(|b| b.saturation_intensity),
                "saturation_intensity_mW_cm2",
            )?,
        };

        let l = &self.lattice;
        let lattice = LatticeConfig {
            lambda: positive("lattice.lambda_nm", l.lambda_nm)? * 1e-9,
            trap_depth: kelvin_to_joule(positive("lattice.trap_depth_uK", l.trap_depth_uk)? * 1e-6),
            omega_z: TWO_PI * non_negative("lattice.omega_z_kHz", l.omega_z_khz)? * 1e3,
            omega_r: TWO_PI * non_negative("lattice.omega_r_kHz", l.omega_r_khz)? * 1e3,
        };

        let c = &self.cloud;
        let cloud = CloudState {
            atom_number: non_negative("cloud.atom_number", c.atom_number)?,
            center: finite("cloud.center_mm", c.center_mm)? * 1e-3,
            width_1e: positive("cloud.width_1e_mm", c.width_1e_mm)? * 1e-3,
            temperature_radial: non_negative("cloud.temperature_radial_uK", c.temperature_radial_uk)? * 1e-6,
        };

        let f = &self.fiber;
        let fiber = FiberGeometry {
            tip_position: finite("fiber.tip_position_mm", f.tip_position_mm)? * 1e-3,
            length: positive("fiber.length_mm", f.length_mm)? * 1e-3,
            mode_field_diameter: positive("fiber.mode_field_diameter_um", f.mode_field_diameter_um)? * 1e-6,
            mot_distance: positive("fiber.mot_distance_mm", f.mot_distance_mm)? * 1e-3,
        };

        let m = &self.medium;
        let eps = m.ramp_penalty_eps;
        if !(0.0..=1.0).contains(&eps) {
            return Err(ConfigError::Unit(format!(
                "medium.ramp_penalty_eps must lie in [0, 1], got {eps}"
            )));
        }
        let medium = MediumModel {
            od_fiber: non_negative("medium.od_fiber", m.od_fiber)?,
            od_reference_atoms: positive("medium.od_reference_atoms", m.od_reference_atoms)?,
            tau_storage: positive("medium.tau_storage_ms", m.tau_storage_ms)? * 1e-3,
            ramp_penalty_eps: eps,
            od_scale: OdScaleParams {
                x_r: positive("medium.x_r_mm", m.x_r_mm)? * 1e-3,
                floor: non_negative("medium.od_floor", m.od_floor)?,
            },
            loss_rate: non_negative("medium.loss_rate_per_s", m.loss_rate_per_s)?,
            spin_decoherence: non_negative("medium.spin_decoherence_per_s", m.spin_decoherence_per_s)?,
        };

        let p = &self.probe;
        let rabi_peak = match (p.rabi_peak_gamma, p.peak_power_nw) {
            (Some(r), _) => non_negative("probe.rabi_peak_gamma", r)? * species.gamma,
            (None, Some(pw)) => species.rabi_from_power(
                non_negative("probe.peak_power_nW", pw)? * 1e-9,
                fiber.mode_field_diameter,
            ),
            (None, None) => DEFAULT_PROBE_RABI_GAMMA * species.gamma,
        };
        let probe = ProbePulse {
            rabi_peak,
            center: finite("probe.center_us", p.center_us)? * 1e-6,
            fwhm: positive("probe.fwhm_us", p.fwhm_us)? * 1e-6,
            detuning: TWO_PI * finite("probe.detuning_MHz", p.detuning_mhz)? * 1e6,
        };

        let k = &self.control;
        let rabi = match (k.rabi_gamma, k.power_uw) {
            (Some(r), _) => non_negative("control.rabi_gamma", r)? * species.gamma,
            (None, Some(pw)) => {
                species.rabi_from_power(non_negative("control.power_uW", pw)? * 1e-6, fiber.mode_field_diameter)
            }
            (None, None) => DEFAULT_CONTROL_RABI_GAMMA * species.gamma,
        };
        let control = ControlSettings {
            rabi,
            switch_off: finite("control.switch_off_us", k.switch_off_us)? * 1e-6,
            ramp: non_negative("control.ramp_us", k.ramp_us)? * 1e-6,
            retrieval_window: positive("control.retrieval_window_us", k.retrieval_window_us)? * 1e-6,
            two_photon_detuning: TWO_PI * finite("control.two_photon_detuning_kHz", k.two_photon_detuning_khz)? * 1e3,
        };

        let t = &self.trajectory;
        let trajectory_spec = TrajectorySpec {
            direction: t.direction,
            segments: t
                .segments
                .iter()
                .map(|s| RampSegment {
                    duration: s.duration_ms * 1e-3,
                    detuning_start: s.detuning_start_khz * 1e3,
                    detuning_end: s.detuning_end_khz * 1e3,
                })
                .collect(),
        };

        // Protocol timings are checked by validate_config, so a bad value
        // still loads and gets reported there.
        let q = &self.protocol;
        let protocol = ProtocolSettings {
            storage_time: finite("protocol.storage_time_us", q.storage_time_us)? * 1e-6,
            storage_position: finite("protocol.storage_position_mm", q.storage_position_mm)? * 1e-3,
            transport_time: finite("protocol.transport_time_ms", q.transport_time_ms)? * 1e-3,
            transport_speed: finite("protocol.transport_speed_mps", q.transport_speed_mps)?,
            ramp_time: finite("protocol.ramp_ms", q.ramp_ms)? * 1e-3,
            safety: finite("protocol.safety", q.safety)?,
            inward_start: finite("protocol.inward_start_mm", q.inward_start_mm)? * 1e-3,
            outward_start: finite("protocol.outward_start_mm", q.outward_start_mm)? * 1e-3,
            interface_distances: q
                .interface_distances_mm
                .iter()
                .map(|d| finite("protocol.interface_distances_mm", *d).map(|d| d * 1e-3))
                .collect::<Result<_, _>>()?,
            comoving_speed: finite("protocol.comoving_speed_mps", q.comoving_speed_mps)?,
            comoving_storage_time: finite("protocol.comoving_storage_ms", q.comoving_storage_ms)? * 1e-3,
            tau_transport: positive("protocol.tau_transport_ms", q.tau_transport_ms)? * 1e-3,
            tau_comoving: positive("protocol.tau_comoving_ms", q.tau_comoving_ms)? * 1e-3,
        };

        let n = &self.numerics;
        let numerics = Numerics {
            points_per_width: positive("numerics.points_per_width", n.points_per_width)?,
            window_widths: positive("numerics.window_widths", n.window_widths)?,
            dt_divisor: positive("numerics.dt_divisor", n.dt_divisor)?,
            settle: non_negative("numerics.settle_us", n.settle_us)? * 1e-6,
            output_stride: n.output_stride.max(1),
        };

        Ok(ExperimentConfig {
            species,
            lattice,
            cloud,
            fiber,
            medium,
            probe,
            control,
            trajectory_spec,
            protocol,
            numerics,
        })
    }

    /// Inverse of [`resolve`](Self::resolve).
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let s = &cfg.species;
        let g = s.gamma;
        Self {
            schema_version: SCHEMA_VERSION,
            bias_field_g: None,
            species: SpeciesEntry::Table(SpeciesFile {
                name: s.name.clone(),
                mass_kg: Some(s.mass),
                linewidth_mhz: Some(s.gamma / TWO_PI * 1e-6),
                lambda_probe_nm: Some(s.lambda_probe * 1e9),
                hyperfine_ghz: Some(s.delta_hf * 1e-9),
                saturation_intensity_mw_cm2: Some(s.saturation_intensity / 10.0),
            }),
            lattice: LatticeFile {
                lambda_nm: cfg.lattice.lambda * 1e9,
                trap_depth_uk: joule_to_kelvin(cfg.lattice.trap_depth) * 1e6,
                omega_z_khz: cfg.lattice.omega_z / TWO_PI * 1e-3,
                omega_r_khz: cfg.lattice.omega_r / TWO_PI * 1e-3,
            },
            cloud: CloudFile {
                atom_number: cfg.cloud.atom_number,
                center_mm: cfg.cloud.center * 1e3,
                width_1e_mm: cfg.cloud.width_1e * 1e3,
                temperature_radial_uk: cfg.cloud.temperature_radial * 1e6,
            },
            fiber: FiberFile {
                tip_position_mm: cfg.fiber.tip_position * 1e3,
                length_mm: cfg.fiber.length * 1e3,
                mode_field_diameter_um: cfg.fiber.mode_field_diameter * 1e6,
                mot_distance_mm: cfg.fiber.mot_distance * 1e3,
            },
            medium: MediumFile {
                od_fiber: cfg.medium.od_fiber,
                od_reference_atoms: cfg.medium.od_reference_atoms,
                tau_storage_ms: cfg.medium.tau_storage * 1e3,
                ramp_penalty_eps: cfg.medium.ramp_penalty_eps,
                x_r_mm: cfg.medium.od_scale.x_r * 1e3,
                od_floor: cfg.medium.od_scale.floor,
                loss_rate_per_s: cfg.medium.loss_rate,
                spin_decoherence_per_s: cfg.medium.spin_decoherence,
            },
            probe: ProbeFile {
                rabi_peak_gamma: Some(cfg.probe.rabi_peak / g),
                peak_power_nw: None,
                center_us: cfg.probe.center * 1e6,
                fwhm_us: cfg.probe.fwhm * 1e6,
                detuning_mhz: cfg.probe.detuning / TWO_PI * 1e-6,
            },
            control: ControlFile {
                rabi_gamma: Some(cfg.control.rabi / g),
                power_uw: None,
                switch_off_us: cfg.control.switch_off * 1e6,
                ramp_us: cfg.control.ramp * 1e6,
                retrieval_window_us: cfg.control.retrieval_window * 1e6,
                two_photon_detuning_khz: cfg.control.two_photon_detuning / TWO_PI * 1e-3,
            },
            trajectory: TrajectoryFile::from_spec(&cfg.trajectory_spec),
            protocol: ProtocolFile {
                storage_time_us: cfg.protocol.storage_time * 1e6,
                storage_position_mm: cfg.protocol.storage_position * 1e3,
                transport_time_ms: cfg.protocol.transport_time * 1e3,
                transport_speed_mps: cfg.protocol.transport_speed,
                ramp_ms: cfg.protocol.ramp_time * 1e3,
                safety: cfg.protocol.safety,
                inward_start_mm: cfg.protocol.inward_start * 1e3,
                outward_start_mm: cfg.protocol.outward_start * 1e3,
                interface_distances_mm: cfg.protocol.interface_distances.iter().map(|d| d * 1e3).collect(),
                comoving_speed_mps: cfg.protocol.comoving_speed,
                comoving_storage_ms: cfg.protocol.comoving_storage_time * 1e3,
                tau_transport_ms: cfg.protocol.tau_transport * 1e3,
                tau_comoving_ms: cfg.protocol.tau_comoving * 1e3,
            },
            numerics: NumericsFile {
                points_per_width: cfg.numerics.points_per_width,
                window_widths: cfg.numerics.window_widths,
                dt_divisor: cfg.numerics.dt_divisor,
                settle_us: cfg.numerics.settle * 1e6,
                output_stride: cfg.numerics.output_stride,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PHYS;

    #[test]
    fn minimal_config_gets_species_defaults() {
        let cfg = ExperimentConfig::from_toml_str("species = \"Rb87\"\n").unwrap();
        assert_eq!(cfg.species, AtomSpecies::rb87());
        let table = ExperimentConfig::from_toml_str("[species]\nname = \"Rb87\"\n").unwrap();
        assert_eq!(table.species, AtomSpecies::rb87());
    }

    #[test]
    fn trap_depth_is_stored_in_joules() {
        let cfg = ExperimentConfig::from_toml_str("[lattice]\ntrap_depth_uK = 740.0\n").unwrap();
        assert!((cfg.lattice.trap_depth - PHYS.k_b * 740e-6).abs() < 1e-35);
    }

    #[test]
    fn zero_width_is_a_unit_error() {
        let err = ExperimentConfig::from_toml_str("[cloud]\nwidth_1e_mm = 0.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Unit(_)), "{err}");
    }

    #[test]
    fn unknown_key_is_a_schema_error() {
        let err = ExperimentConfig::from_toml_str("[cloud]\nwidth = 1.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Schema(_)), "{err}");
        let err = ExperimentConfig::from_toml_str("schema_version = 7\n").unwrap_err();
        assert!(matches!(err, ConfigError::Schema(_)));
        let err = ExperimentConfig::from_toml_str("species = \"Xe\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Schema(_)));
    }

    #[test]
    fn malformed_file_is_a_parse_error() {
        let err = ExperimentConfig::from_toml_str("[cloud\nwidth_1e_mm = ").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default();
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert!(cfg.approx_eq(&again, 1e-12));
        let json = serde_json::to_string(&cfg.to_file()).unwrap();
        let from_json = ExperimentConfig::from_json_str(&json).unwrap();
        assert!(cfg.approx_eq(&from_json, 1e-12));
    }

    #[test]
    fn saved_file_is_a_fixed_point() {
        let mut cfg = ExperimentConfig::default();
        cfg.control.ramp = 0.104_745_954_938_624_9e-6;
        let text = cfg.to_toml_string();
        let mut again = ExperimentConfig::from_toml_str(&text).unwrap();
        for _ in 0..3 {
            assert_eq!(again.to_toml_string(), text);
            again = ExperimentConfig::from_toml_str(&again.to_toml_string()).unwrap();
        }
        assert_eq!(again.to_json_value(), cfg.to_json_value());
    }

    #[test]
    fn overrides_follow_dotted_paths() {
        let cfg = ExperimentConfig::default();
        let o = cfg
            .with_override("medium.tau_storage_ms", serde_json::json!(2.0))
            .unwrap();
        assert!((o.medium.tau_storage - 2e-3).abs() < 1e-15);
        assert!(matches!(
            cfg.with_override("medium.nope", serde_json::json!(1.0)),
            Err(ConfigError::Schema(_))
        ));
    }

    #[test]
    fn power_converts_when_rabi_absent() {
        let cfg = ExperimentConfig::from_toml_str("[control]\npower_uW = 2.7\n").unwrap();
        let expect = AtomSpecies::rb87().rabi_from_power(2.7e-6, 42e-6);
        assert!((cfg.control.rabi - expect).abs() < 1e-6);
        let both = ExperimentConfig::from_toml_str("[control]\npower_uW = 2.7\nrabi_gamma = 1.4\n").unwrap();
        assert!((both.control.rabi / both.species.gamma - 1.4).abs() < 1e-12);
    }
}
