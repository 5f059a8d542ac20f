//! Experiment configuration: parsing, defaults and validation.
//!
//! Powers are accepted either as linear watts (`total_power`) or in dBm
//! (`total_power_dbm`) and are always stored in watts after validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{jakes_corr, JakesMapping};
use crate::lls::amc::{ModCodePair, Modulation};
use crate::radar::{desired_pattern, PatternShape, RadarSpec};

pub const SPEED_OF_LIGHT: f64 = 3e8;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum AccessMode {
    #[serde(rename = "RSMA", alias = "rsma")]
    Rsma,
    #[serde(rename = "SDMA", alias = "sdma")]
    Sdma,
    #[serde(rename = "NOMA", alias = "noma")]
    Noma,
}

impl AccessMode {
    pub const ALL: [AccessMode; 3] = [AccessMode::Rsma, AccessMode::Sdma, AccessMode::Noma];

    pub fn as_str(self) -> &'static str {
        match self {
            AccessMode::Rsma => "RSMA",
            AccessMode::Sdma => "SDMA",
            AccessMode::Noma => "NOMA",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RSMA" => Some(AccessMode::Rsma),
            "SDMA" => Some(AccessMode::Sdma),
            "NOMA" => Some(AccessMode::Noma),
            _ => None,
        }
    }

    /// Whether the first precoder column carries a common stream.
    pub fn has_common(self) -> bool {
        self == AccessMode::Rsma
    }
}

impl fmt::Display for AccessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_users: usize,
    /// Antenna spacing in wavelengths.
    pub spacing: f64,
    /// Watts.
    pub total_power: f64,
    /// Watts.
    pub noise_power_user: f64,
    /// bps/Hz per user.
    pub qos_rate: f64,
    pub weights: Vec<f64>,
    pub lambda_reg: f64,
    pub access_mode: AccessMode,
}

impl SystemConfig {
    /// Transmit power in units of the user noise power, the scale every
    /// optimizer works in.
    pub fn normalized_power(&self) -> f64 {
        self.total_power / self.noise_power_user
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    /// Seconds.
    pub sample_interval: f64,
    /// m/s.
    pub user_speed: f64,
    /// Hz.
    pub carrier_freq: f64,
    pub csit_error_var: Option<f64>,
    pub jakes_mapping: JakesMapping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub admm_penalty: f64,
    pub admm_tol: f64,
    pub ao_tol: f64,
    pub max_admm_iters: usize,
    pub max_ao_iters: usize,
    pub saa_samples: usize,
    pub rng_seed: u64,
    /// Interior-point duality-gap tolerance (relative).
    pub conic_gap_tol: f64,
    /// Largest constraint violation accepted from the interior-point solver.
    pub conic_feas_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlsConfig {
    pub block_symbols: usize,
    pub codeword_bits: usize,
    pub blocks: usize,
    pub amc_table: Vec<ModCodePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    pub modes: Vec<AccessMode>,
    pub profiles: Vec<String>,
    pub realizations: usize,
}

/// A named mobility preset.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityProfile {
    pub name: &'static str,
    pub user_speed: f64,
    pub csit_error_var: f64,
}

pub const PROFILES: [MobilityProfile; 3] = [
    MobilityProfile {
        name: "perfect-csit",
        user_speed: 0.0,
        csit_error_var: 0.0,
    },
    MobilityProfile {
        name: "low-mobility",
        user_speed: 3.0 / 3.6,
        csit_error_var: 0.417,
    },
    MobilityProfile {
        name: "high-mobility",
        user_speed: 30.0 / 3.6,
        csit_error_var: 0.984,
    },
];

/// `"configured"` is the `[mobility]` section as written.
pub const CONFIGURED_PROFILE: &str = "configured";

pub fn profile(name: &str) -> Option<&'static MobilityProfile> {
    PROFILES.iter().find(|p| p.name == name)
}

fn known_profile(name: &str) -> bool {
    name == CONFIGURED_PROFILE || profile(name).is_some()
}

// ---------------------------------------------------------------------------
// Raw, file-level configuration.

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawSystem {
    pub n_tx: Option<usize>,
    pub n_users: Option<usize>,
    pub spacing: Option<f64>,
    pub total_power: Option<f64>,
    pub total_power_dbm: Option<f64>,
    pub noise_power_user: Option<f64>,
    pub noise_power_user_dbm: Option<f64>,
    pub qos_rate: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub lambda_reg: Option<f64>,
    pub access_mode: Option<AccessMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawMobility {
    pub sample_interval: Option<f64>,
    pub user_speed: Option<f64>,
    pub carrier_freq: Option<f64>,
    pub csit_error_var: Option<f64>,
    pub jakes_mapping: Option<JakesMapping>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawSolver {
    pub admm_penalty: Option<f64>,
    pub admm_tol: Option<f64>,
    pub ao_tol: Option<f64>,
    pub max_admm_iters: Option<usize>,
    pub max_ao_iters: Option<usize>,
    pub saa_samples: Option<usize>,
    pub rng_seed: Option<u64>,
    pub conic_gap_tol: Option<f64>,
    pub conic_feas_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawRadar {
    /// Explicit grid in degrees; overrides `grid_min/grid_max/grid_step`.
    pub angle_grid: Option<Vec<f64>>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_step: Option<f64>,
    pub target_angle: Option<f64>,
    pub beam_halfwidth: Option<f64>,
    pub pattern: Option<PatternShape>,
    pub target_range: Option<f64>,
    pub target_speed: Option<f64>,
    pub carrier_freq: Option<f64>,
    pub rx_noise_power: Option<f64>,
    pub rx_noise_power_dbm: Option<f64>,
    pub two_way: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawLls {
    pub block_symbols: Option<usize>,
    pub codeword_bits: Option<usize>,
    pub blocks: Option<usize>,
    pub amc_table: Option<Vec<ModCodePair>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawSweep {
    pub lambdas: Option<Vec<f64>>,
    pub modes: Option<Vec<AccessMode>>,
    pub profiles: Option<Vec<String>>,
    pub realizations: Option<usize>,
}

/// Configuration file contents. Every key is optional; missing keys take
/// defaults during [`validate`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    pub system: RawSystem,
    pub mobility: RawMobility,
    pub solver: RawSolver,
    pub radar: RawRadar,
    pub lls: RawLls,
    pub sweep: RawSweep,
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }
}

// ---------------------------------------------------------------------------
// Validation.

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

impl ConfigError {
    pub fn field_errors(&self) -> &[FieldError] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScenario {
    pub system: SystemConfig,
    pub mobility: MobilityConfig,
    pub solver: SolverConfig,
    pub radar: RadarSpec,
    pub lls: LlsConfig,
    pub sweep: SweepConfig,
    /// Time correlation between consecutive channel samples.
    pub corr_coeff: f64,
    /// CSIT error variance σ_e², from the override or the Jakes mapping.
    pub csit_error_var: f64,
}

struct Checker {
    errors: Vec<FieldError>,
}

impl Checker {
    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.errors.push(FieldError {
            field: field.to_string(),
            message: message.into(),
        });
    }

    /// Records one error for `field` when `ok` is false.
    fn check(&mut self, field: &str, ok: bool, message: &str) {
        if !ok {
            self.fail(field, message);
        }
    }

    fn positive(&mut self, field: &str, v: f64) {
        let name = field.rsplit('.').next().unwrap_or(field);
        self.check(field, v.is_finite() && v > 0.0, &format!("{name} must be positive"));
    }

    fn nonnegative(&mut self, field: &str, v: f64) {
        let name = field.rsplit('.').next().unwrap_or(field);
        self.check(field, v.is_finite() && v >= 0.0, &format!("{name} must be nonnegative"));
    }
}

/// Linear value from the watts or dBm spelling; both set is an error.
fn power_field(c: &mut Checker, field: &str, watts: Option<f64>, dbm: Option<f64>, default: f64) -> f64 {
    match (watts, dbm) {
        (Some(_), Some(_)) => {
            c.fail(field, format!("set either {0} or {0}_dbm, not both", field.rsplit('.').next().unwrap()));
            default
        }
        (Some(w), None) => {
            c.positive(field, w);
            w
        }
        (None, Some(d)) => {
            let w = dbm_to_watts(d);
            c.check(field, d.is_finite(), &format!("{}_dbm must be finite", field.rsplit('.').next().unwrap()));
            w
        }
        (None, None) => default,
    }
}

pub fn default_amc_table() -> Vec<ModCodePair> {
    use Modulation::*;
    [
        (Qpsk, 1, 4),
        (Qpsk, 1, 2),
        (Qpsk, 3, 4),
        (Qam16, 1, 2),
        (Qam16, 3, 4),
        (Qam64, 1, 2),
        (Qam64, 2, 3),
        (Qam64, 3, 4),
        (Qam64, 5, 6),
        (Qam256, 3, 4),
        (Qam256, 5, 6),
    ]
    .into_iter()
    .map(|(modulation, num, den)| ModCodePair {
        modulation,
        rate_num: num,
        rate_den: den,
    })
    .collect()
}

pub fn validate(raw: &RawConfig) -> Result<ValidatedScenario, ConfigError> {
    let mut c = Checker { errors: Vec::new() };

    // [system]
    let s = &raw.system;
    let n_tx = s.n_tx.unwrap_or(8);
    c.check("system.n_tx", n_tx >= 1, "n_tx must be at least 1");
    let n_users = s.n_users.unwrap_or(4);
    c.check("system.n_users", n_users >= 1, "n_users must be at least 1");
    let spacing = s.spacing.unwrap_or(0.5);
    c.positive("system.spacing", spacing);
    let total_power = power_field(&mut c, "system.total_power", s.total_power, s.total_power_dbm, dbm_to_watts(20.0));
    let noise_power_user = power_field(
        &mut c,
        "system.noise_power_user",
        s.noise_power_user,
        s.noise_power_user_dbm,
        dbm_to_watts(0.0),
    );
    let qos_rate = s.qos_rate.unwrap_or(0.1);
    c.nonnegative("system.qos_rate", qos_rate);
    let weights = s.weights.clone().unwrap_or_else(|| vec![1.0; n_users]);
    if weights.len() != n_users {
        c.fail("system.weights", format!("expected {n_users} weights, got {}", weights.len()));
    } else {
        c.check(
            "system.weights",
            weights.iter().all(|w| w.is_finite() && *w > 0.0),
            "weights must be positive",
        );
    }
    let lambda_reg = s.lambda_reg.unwrap_or(1e-3);
    c.nonnegative("system.lambda_reg", lambda_reg);
    let system = SystemConfig {
        n_tx,
        n_users,
        spacing,
        total_power,
        noise_power_user,
        qos_rate,
        weights,
        lambda_reg,
        access_mode: s.access_mode.unwrap_or(AccessMode::Rsma),
    };

    // [mobility]
    let m = &raw.mobility;
    let mobility = MobilityConfig {
        sample_interval: m.sample_interval.unwrap_or(0.01),
        user_speed: m.user_speed.unwrap_or(3.0 / 3.6),
        carrier_freq: m.carrier_freq.unwrap_or(2e9),
        csit_error_var: m.csit_error_var,
        jakes_mapping: m.jakes_mapping.unwrap_or_default(),
    };
    c.positive("mobility.sample_interval", mobility.sample_interval);
    c.positive("mobility.user_speed", mobility.user_speed);
    c.positive("mobility.carrier_freq", mobility.carrier_freq);
    if let Some(v) = mobility.csit_error_var {
        c.check(
            "mobility.csit_error_var",
            v.is_finite() && (0.0..1.0).contains(&v),
            "csit_error_var must lie in [0, 1)",
        );
    }

    // [solver]
    let so = &raw.solver;
    let solver = SolverConfig {
        admm_penalty: so.admm_penalty.unwrap_or(1.0),
        admm_tol: so.admm_tol.unwrap_or(1e-4),
        ao_tol: so.ao_tol.unwrap_or(1e-4),
        max_admm_iters: so.max_admm_iters.unwrap_or(300),
        max_ao_iters: so.max_ao_iters.unwrap_or(200),
        saa_samples: so.saa_samples.unwrap_or(100),
        rng_seed: so.rng_seed.unwrap_or(2024),
        conic_gap_tol: so.conic_gap_tol.unwrap_or(1e-9),
        conic_feas_tol: so.conic_feas_tol.unwrap_or(1e-6),
    };
    c.positive("solver.admm_penalty", solver.admm_penalty);
    c.positive("solver.admm_tol", solver.admm_tol);
    c.positive("solver.ao_tol", solver.ao_tol);
    c.check("solver.max_admm_iters", solver.max_admm_iters >= 1, "max_admm_iters must be at least 1");
    c.check("solver.max_ao_iters", solver.max_ao_iters >= 1, "max_ao_iters must be at least 1");
    c.check("solver.saa_samples", solver.saa_samples >= 1, "saa_samples must be at least 1");
    c.positive("solver.conic_gap_tol", solver.conic_gap_tol);
    c.positive("solver.conic_feas_tol", solver.conic_feas_tol);

    // [radar]
    let r = &raw.radar;
    let angle_grid = match &r.angle_grid {
        Some(g) => g.clone(),
        None => {
            let lo = r.grid_min.unwrap_or(-90.0);
            let hi = r.grid_max.unwrap_or(90.0);
            let step = r.grid_step.unwrap_or(1.0);
            if step.is_finite() && step > 0.0 && lo.is_finite() && hi.is_finite() && hi >= lo {
                let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| lo + step * i as f64).collect()
            } else {
                c.fail("radar.grid_step", "grid needs finite bounds, grid_max ≥ grid_min and grid_step > 0");
                vec![]
            }
        }
    };
    let grid_ok = !angle_grid.is_empty()
        && angle_grid.windows(2).all(|w| w[1] > w[0])
        && angle_grid.iter().all(|a| a.is_finite() && (-90.0..=90.0).contains(a));
    if !angle_grid.is_empty() || r.angle_grid.is_some() {
        c.check(
            "radar.angle_grid",
            grid_ok,
            "angle grid must be nonempty, strictly increasing and within [-90, 90] degrees",
        );
    }
    let target_angle = r.target_angle.unwrap_or(0.0);
    if grid_ok {
        c.check(
            "radar.target_angle",
            angle_grid.iter().any(|a| (a - target_angle).abs() < 1e-9),
            "target_angle must lie on the angle grid",
        );
    }
    let beam_halfwidth = r.beam_halfwidth.unwrap_or(8.0);
    c.positive("radar.beam_halfwidth", beam_halfwidth);
    let target_range = r.target_range.unwrap_or(50.0);
    c.positive("radar.target_range", target_range);
    let target_speed = r.target_speed.unwrap_or(3.0);
    c.nonnegative("radar.target_speed", target_speed);
    let radar_fc = r.carrier_freq.unwrap_or(2e9);
    c.positive("radar.carrier_freq", radar_fc);
    let rx_noise_power = power_field(&mut c, "radar.rx_noise_power", r.rx_noise_power, r.rx_noise_power_dbm, dbm_to_watts(-150.0));
    let pattern = r.pattern.unwrap_or_default();
    let mut radar = RadarSpec {
        angle_grid,
        target_angle,
        desired_pattern: vec![],
        target_range,
        target_speed,
        carrier_freq: radar_fc,
        rx_noise_power,
        beam_halfwidth,
        pattern,
        two_way: r.two_way.unwrap_or(false),
    };
    if grid_ok && beam_halfwidth > 0.0 {
        radar.desired_pattern = desired_pattern(&radar);
    }

    // [lls]
    let l = &raw.lls;
    let lls = LlsConfig {
        block_symbols: l.block_symbols.unwrap_or(256),
        codeword_bits: l.codeword_bits.unwrap_or(512),
        blocks: l.blocks.unwrap_or(20),
        amc_table: l.amc_table.clone().unwrap_or_else(default_amc_table),
    };
    c.check("lls.block_symbols", lls.block_symbols >= 1, "block_symbols must be at least 1");
    c.check(
        "lls.codeword_bits",
        lls.codeword_bits >= 64 && lls.codeword_bits.is_power_of_two(),
        "codeword_bits must be a power of two no smaller than 64",
    );
    c.check("lls.blocks", lls.blocks >= 1, "blocks must be at least 1");
    c.check(
        "lls.amc_table",
        !lls.amc_table.is_empty() && lls.amc_table.iter().all(|e| e.rate_num >= 1 && e.rate_num < e.rate_den),
        "amc_table needs at least one entry, each with 0 < rate < 1",
    );

    // [sweep]
    let sw = &raw.sweep;
    let sweep = SweepConfig {
        lambdas: sw.lambdas.clone().unwrap_or_else(|| vec![1e-9, 1e-7, 1e-5, 1e-3, 1e-2, 1e-1]),
        modes: sw.modes.clone().unwrap_or_else(|| AccessMode::ALL.to_vec()),
        profiles: sw
            .profiles
            .clone()
            .unwrap_or_else(|| vec!["low-mobility".into(), "high-mobility".into()]),
        realizations: sw.realizations.unwrap_or(20),
    };
    c.check(
        "sweep.lambdas",
        !sweep.lambdas.is_empty() && sweep.lambdas.iter().all(|l| l.is_finite() && *l >= 0.0),
        "lambdas must be a nonempty list of nonnegative values",
    );
    c.check("sweep.modes", !sweep.modes.is_empty(), "modes must be nonempty");
    c.check(
        "sweep.profiles",
        !sweep.profiles.is_empty() && sweep.profiles.iter().all(|p| known_profile(p)),
        "profiles must be nonempty and name configured, perfect-csit, low-mobility or high-mobility",
    );
    c.check("sweep.realizations", sweep.realizations >= 1, "realizations must be at least 1");

    if !c.errors.is_empty() {
        return Err(ConfigError::Invalid(c.errors));
    }
    let (corr_coeff, csit_error_var) = derive_csit(&mobility);
    Ok(ValidatedScenario {
        system,
        mobility,
        solver,
        radar,
        lls,
        sweep,
        corr_coeff,
        csit_error_var,
    })
}

/// Correlation coefficient and error variance for a mobility section. With
/// an override, the correlation is chosen so that `ρ² + σ_e² = 1`.
fn derive_csit(m: &MobilityConfig) -> (f64, f64) {
    match m.csit_error_var {
        Some(v) => ((1.0 - v).sqrt(), v),
        None => {
            let rho = jakes_corr(m.user_speed, m.carrier_freq, m.sample_interval);
            (rho, m.jakes_mapping.error_var(rho))
        }
    }
}

impl ValidatedScenario {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        validate(&RawConfig::from_toml(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        validate(&RawConfig::from_file(path)?)
    }

    /// Paper-scale defaults.
    pub fn default_scenario() -> Self {
        validate(&RawConfig::default()).expect("defaults are valid")
    }

    /// Fully explicit raw form; `validate(s.to_raw()) == s`.
    pub fn to_raw(&self) -> RawConfig {
        let s = &self.system;
        let m = &self.mobility;
        let so = &self.solver;
        let r = &self.radar;
        RawConfig {
            system: RawSystem {
                n_tx: Some(s.n_tx),
                n_users: Some(s.n_users),
                spacing: Some(s.spacing),
                total_power: Some(s.total_power),
                total_power_dbm: None,
                noise_power_user: Some(s.noise_power_user),
                noise_power_user_dbm: None,
                qos_rate: Some(s.qos_rate),
                weights: Some(s.weights.clone()),
                lambda_reg: Some(s.lambda_reg),
                access_mode: Some(s.access_mode),
            },
            mobility: RawMobility {
                sample_interval: Some(m.sample_interval),
                user_speed: Some(m.user_speed),
                carrier_freq: Some(m.carrier_freq),
                csit_error_var: m.csit_error_var,
                jakes_mapping: Some(m.jakes_mapping),
            },
            solver: RawSolver {
                admm_penalty: Some(so.admm_penalty),
                admm_tol: Some(so.admm_tol),
                ao_tol: Some(so.ao_tol),
                max_admm_iters: Some(so.max_admm_iters),
                max_ao_iters: Some(so.max_ao_iters),
                saa_samples: Some(so.saa_samples),
                rng_seed: Some(so.rng_seed),
                conic_gap_tol: Some(so.conic_gap_tol),
                conic_feas_tol: Some(so.conic_feas_tol),
            },
            radar: RawRadar {
                angle_grid: Some(r.angle_grid.clone()),
                grid_min: None,
                grid_max: None,
                grid_step: None,
                target_angle: Some(r.target_angle),
                beam_halfwidth: Some(r.beam_halfwidth),
                pattern: Some(r.pattern),
                target_range: Some(r.target_range),
                target_speed: Some(r.target_speed),
                carrier_freq: Some(r.carrier_freq),
                rx_noise_power: Some(r.rx_noise_power),
                rx_noise_power_dbm: None,
                two_way: Some(r.two_way),
            },
            lls: RawLls {
                block_symbols: Some(self.lls.block_symbols),
                codeword_bits: Some(self.lls.codeword_bits),
                blocks: Some(self.lls.blocks),
                amc_table: Some(self.lls.amc_table.clone()),
            },
            sweep: RawSweep {
                lambdas: Some(self.sweep.lambdas.clone()),
                modes: Some(self.sweep.modes.clone()),
                profiles: Some(self.sweep.profiles.clone()),
                realizations: Some(self.sweep.realizations),
            },
        }
    }

    /// Copy with the mobility section replaced by a named profile.
    /// `"configured"` returns the scenario unchanged.
    pub fn with_profile(&self, name: &str) -> Option<Self> {
        if name == CONFIGURED_PROFILE {
            return Some(self.clone());
        }
        let p = profile(name)?;
        let mut out = self.clone();
        out.mobility.user_speed = p.user_speed.max(f64::MIN_POSITIVE);
        out.mobility.csit_error_var = Some(p.csit_error_var);
        let (rho, var) = derive_csit(&out.mobility);
        out.corr_coeff = rho;
        out.csit_error_var = var;
        Some(out)
    }

    pub fn with_mode(&self, mode: AccessMode) -> Self {
        let mut out = self.clone();
        out.system.access_mode = mode;
        out
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.system.lambda_reg = lambda;
        out
    }

    /// Per-antenna power budget in noise-normalized units.
    pub fn per_antenna_power(&self) -> f64 {
        self.system.normalized_power() / self.system.n_tx as f64
    }
}
