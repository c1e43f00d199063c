//! `key = value` run configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use dlab_core::model::{IndexModel, SlabCalibration, SystemConfig, SPEED_OF_LIGHT};
use dlab_core::numerics::FrequencyGrid;

use crate::CliError;

pub const POINTS_ENV: &str = "DLAB_POINTS";

const KNOWN_KEYS: &[&str] = &[
    "d_m",
    "air_path_m",
    "theta_deg",
    "beta_deg",
    "index_te",
    "index_tm",
    "half_wave_ghz",
    "f_min_ghz",
    "f_max_ghz",
    "points",
    "interior_fraction",
    "exclusion_ghz",
    "correct",
    "carrier_ghz",
    "sigma_ns",
    "window_ns",
    "samples",
    "front_ns",
    "causality_threshold",
];

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub beta_deg: Option<f64>,
    pub correct: bool,
    pub points_env: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KkSettings {
    pub interior_fraction: f64,
    /// Half-width in rad/s; `None` leaves the default to the engine.
    pub exclusion_halfwidth: Option<f64>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrontSetting {
    /// `window/2 − 4σ`
    Default,
    None,
    At(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSettings {
    /// rad/s; `None` picks the in-band half-waveplate frequency.
    pub carrier: Option<f64>,
    pub sigma: f64,
    pub window: f64,
    pub samples: usize,
    pub front: FrontSetting,
    pub causality_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub grid: FrequencyGrid,
    pub kk: KkSettings,
    pub pulse: PulseSettings,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut pairs = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected `key = value`", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(config_err(format!("line {}: unknown key `{key}`", i + 1)));
        }
        if value.is_empty() {
            return Err(config_err(format!("line {}: `{key}` has no value", i + 1)));
        }
        if pairs.insert(key.to_string(), value.to_string()).is_some() {
            return Err(config_err(format!("line {}: `{key}` given twice", i + 1)));
        }
    }
    Ok(pairs)
}

fn number(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| config_err(format!("`{key}`: `{value}` is not a finite number")))
}

fn count(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .parse::<usize>()
        .map_err(|_| config_err(format!("`{key}`: `{value}` is not a non-negative integer")))
}

fn boolean(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_err(format!("`{key}`: `{value}` is not a boolean"))),
    }
}

/// `constant n` | `linear n0 slope omega_ref` | `lorentz n_inf strength omega0 gamma`
pub fn parse_index(key: &str, value: &str) -> Result<IndexModel, CliError> {
    let mut words = value.split_whitespace();
    let kind = words.next().unwrap_or("");
    let args = words
        .map(|w| number(key, w))
        .collect::<Result<Vec<_>, _>>()?;
    let model = match (kind, args.as_slice()) {
        ("constant", &[n]) => IndexModel::constant(n),
        ("linear", &[n0, slope, omega_ref]) => IndexModel::linear(n0, slope, omega_ref),
        ("lorentz", &[n_inf, strength, omega0, gamma]) => {
            IndexModel::lorentz(n_inf, strength, omega0, gamma)
        }
        _ => {
            return Err(config_err(format!(
                "`{key}`: expected `constant n`, `linear n0 slope omega_ref` or \
                 `lorentz n_inf strength omega0 gamma`, got `{value}`"
            )))
        }
    };
    model.validate().map_err(|e| config_err(format!("`{key}`: {e}")))?;
    Ok(model)
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text, overrides)
    }

    pub fn from_text(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let pairs = parse_pairs(text)?;
        let get = |key: &str| pairs.get(key).map(String::as_str);
        let num_or = |key: &str, default: f64| get(key).map_or(Ok(default), |v| number(key, v));

        let cal = SlabCalibration::default();
        let thickness = num_or("d_m", cal.thickness)?;
        let air_path = num_or("air_path_m", cal.air_path)?;
        let theta = num_or("theta_deg", 45.0)?.to_radians();
        let beta = match overrides.beta_deg {
            Some(b) => b,
            None => num_or("beta_deg", 40.0)?,
        }
        .to_radians();

        let index_tm = match get("index_tm") {
            Some(v) => parse_index("index_tm", v)?,
            None => IndexModel::constant(cal.index_tm),
        };
        let index_te = match (get("index_te"), get("half_wave_ghz")) {
            (Some(_), Some(_)) => {
                return Err(config_err("give either `index_te` or `half_wave_ghz`, not both"))
            }
            (Some(v), None) => parse_index("index_te", v)?,
            (None, half_wave) => {
                let f = match half_wave {
                    Some(v) => number("half_wave_ghz", v)? * 1e9,
                    None => cal.half_wave_hz,
                };
                let IndexModel::Constant { n0 } = index_tm else {
                    return Err(config_err(
                        "calibrating `index_te` from `half_wave_ghz` needs a constant `index_tm`",
                    ));
                };
                if !(f > 0.0 && thickness > 0.0) {
                    return Err(config_err("`half_wave_ghz` and `d_m` must be positive"));
                }
                IndexModel::constant(n0 + SPEED_OF_LIGHT / (2.0 * f * thickness))
            }
        };
        let system = SystemConfig::new(thickness, air_path, theta, beta, index_te, index_tm)
            .map_err(|e| config_err(e.to_string()))?;

        let points = match (&overrides.points_env, get("points")) {
            (Some(env), _) => count(POINTS_ENV, env.trim())?,
            (None, Some(v)) => count("points", v)?,
            (None, None) => 2048,
        };
        let grid = FrequencyGrid::from_hz(
            num_or("f_min_ghz", 13.0)? * 1e9,
            num_or("f_max_ghz", 20.0)? * 1e9,
            points,
        )
        .map_err(|e| config_err(e.to_string()))?;

        let kk = KkSettings {
            interior_fraction: num_or("interior_fraction", 0.6)?,
            exclusion_halfwidth: get("exclusion_ghz")
                .map(|v| number("exclusion_ghz", v).map(|g| 2.0 * PI * g * 1e9))
                .transpose()?,
            correct: overrides.correct
                || get("correct").map_or(Ok(false), |v| boolean("correct", v))?,
        };

        let front = match get("front_ns") {
            None => FrontSetting::Default,
            Some("none") => FrontSetting::None,
            Some(v) => FrontSetting::At(number("front_ns", v)? * 1e-9),
        };
        let pulse = PulseSettings {
            carrier: get("carrier_ghz")
                .map(|v| number("carrier_ghz", v).map(|g| 2.0 * PI * g * 1e9))
                .transpose()?,
            sigma: num_or("sigma_ns", 5.0)? * 1e-9,
            window: num_or("window_ns", 200.0)? * 1e-9,
            samples: get("samples").map_or(Ok(1 << 16), |v| count("samples", v))?,
            front,
            causality_threshold: num_or("causality_threshold", 1e-10)?,
        };

        Ok(Self {
            system,
            grid,
            kk,
            pulse,
        })
    }
}
