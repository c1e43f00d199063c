//! Birefringent slab between two linear polarizers.
//!
//! The slab is described by a diagonal Green's matrix `diag(e^{iφ_TE}, e^{iφ_TM})`
//! with `φ_mode(ω) = n_mode(ω)·ω·d/c + ω·L/c`. An input polarized at angle
//! `θ` and an analyzer at angle `β` (both measured so that the unit vectors
//! are `(sin, cos)` in the TE/TM basis) give the scalar transfer function
//!
//! ```text
//! H(ω) = sin β sin θ e^{iφ_TE(ω)} + cos β cos θ e^{iφ_TM(ω)}
//! ```
//!
//! Phase convention: fields carry `e^{-iωt}`, so `e^{+iφ}` with `φ > 0` is a
//! forward delay and the group delay is `+∂ arg H/∂ω`.

use std::f64::consts::{FRAC_PI_4, PI};
use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{unwrap, FrequencyGrid, RealSeries};

/// Vacuum speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Magnitudes at or below this are treated as exact transmission zeros.
pub const ZERO_TRANSMISSION: f64 = 1e-13;

const TWO_PI: f64 = 2.0 * PI;
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Parametric refractive index of one polarization mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexModel {
    /// `n(ω) = n0`
    Constant { n0: f64 },
    /// `n(ω) = n0 + slope·(ω − omega_ref)`
    Linear { n0: f64, slope: f64, omega_ref: f64 },
    /// `n(ω) = n_inf + A·(Ω₀² − ω²)/((Ω₀² − ω²)² + γ²ω²)`
    Lorentz {
        n_inf: f64,
        strength: f64,
        omega0: f64,
        gamma: f64,
    },
}

impl IndexModel {
    pub fn constant(n0: f64) -> Self {
        Self::Constant { n0 }
    }

    pub fn linear(n0: f64, slope: f64, omega_ref: f64) -> Self {
        Self::Linear {
            n0,
            slope,
            omega_ref,
        }
    }

    pub fn lorentz(n_inf: f64, strength: f64, omega0: f64, gamma: f64) -> Self {
        Self::Lorentz {
            n_inf,
            strength,
            omega0,
            gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            Self::Constant { n0 } => n0.is_finite(),
            Self::Linear {
                n0,
                slope,
                omega_ref,
            } => n0.is_finite() && slope.is_finite() && omega_ref.is_finite(),
            Self::Lorentz {
                n_inf,
                strength,
                omega0,
                gamma,
            } => {
                if !(omega0 > 0.0) || !(gamma > 0.0) {
                    return Err(Error::InvalidIndexModel(
                        "Lorentz resonance and width must be positive".into(),
                    ));
                }
                n_inf.is_finite() && strength.is_finite() && omega0.is_finite() && gamma.is_finite()
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidIndexModel("parameters must be finite".into()))
        }
    }

    /// Index at a (possibly complex) frequency. The Lorentz form is continued
    /// off the real axis as the same rational function.
    pub fn index_at(&self, z: Complex64) -> Complex64 {
        match *self {
            Self::Constant { n0 } => Complex64::new(n0, 0.0),
            Self::Linear {
                n0,
                slope,
                omega_ref,
            } => n0 + slope * (z - omega_ref),
            Self::Lorentz {
                n_inf,
                strength,
                omega0,
                gamma,
            } => {
                let u = omega0 * omega0 - z * z;
                n_inf + strength * u / (u * u + gamma * gamma * z * z)
            }
        }
    }

    /// `dn/dω` at a (possibly complex) frequency.
    pub fn index_slope_at(&self, z: Complex64) -> Complex64 {
        match *self {
            Self::Constant { .. } => Complex64::new(0.0, 0.0),
            Self::Linear { slope, .. } => Complex64::new(slope, 0.0),
            Self::Lorentz {
                strength,
                omega0,
                gamma,
                ..
            } => {
                let u = omega0 * omega0 - z * z;
                let du = -2.0 * z;
                let den = u * u + gamma * gamma * z * z;
                let dden = 2.0 * u * du + 2.0 * gamma * gamma * z;
                strength * (du * den - u * dden) / (den * den)
            }
        }
    }

    pub fn index(&self, omega: f64) -> f64 {
        self.index_at(Complex64::new(omega, 0.0)).re
    }

    pub fn index_slope(&self, omega: f64) -> f64 {
        self.index_slope_at(Complex64::new(omega, 0.0)).re
    }
}

/// Polarization mode of the slab.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Te,
    Tm,
}

/// Slab, air path and polarizer geometry.
///
/// Angles are in radians and unrestricted; operations that need
/// `0 < β < π/2` check it themselves. Evaluating the crossed analyzer
/// `β + π/2` is therefore possible with the same type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    thickness: f64,
    air_path: f64,
    theta: f64,
    beta: f64,
    index_te: IndexModel,
    index_tm: IndexModel,
}

impl SystemConfig {
    pub fn new(
        thickness: f64,
        air_path: f64,
        theta: f64,
        beta: f64,
        index_te: IndexModel,
        index_tm: IndexModel,
    ) -> Result<Self> {
        if !(thickness > 0.0) || !thickness.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "slab thickness must be positive, got {thickness}"
            )));
        }
        if !(air_path >= 0.0) || !air_path.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "air path must be non-negative, got {air_path}"
            )));
        }
        if !theta.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidConfig("angles must be finite".into()));
        }
        index_te.validate()?;
        index_tm.validate()?;
        Ok(Self {
            thickness,
            air_path,
            theta,
            beta,
            index_te,
            index_tm,
        })
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn air_path(&self) -> f64 {
        self.air_path
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn index_te(&self) -> IndexModel {
        self.index_te
    }

    pub fn index_tm(&self) -> IndexModel {
        self.index_tm
    }

    pub fn index(&self, mode: Mode) -> IndexModel {
        match mode {
            Mode::Te => self.index_te,
            Mode::Tm => self.index_tm,
        }
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.thickness, self.air_path, self.theta, beta, self.index_te, self.index_tm)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.thickness, self.air_path, theta, self.beta, self.index_te, self.index_tm)
    }

    pub fn with_air_path(&self, air_path: f64) -> Result<Self> {
        Self::new(self.thickness, air_path, self.theta, self.beta, self.index_te, self.index_tm)
    }

    /// Weights `(cos β cos θ, sin β sin θ)` of the TM and TE paths.
    pub fn path_weights(&self) -> (f64, f64) {
        (
            self.beta.cos() * self.theta.cos(),
            self.beta.sin() * self.theta.sin(),
        )
    }

    /// Checks `0 < β < π/2` and `0 < θ < π/2`.
    pub fn require_open_quadrant(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 0.5 * PI;
        if open(self.beta) && open(self.theta) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "angles must lie in (0, π/2): theta = {}, beta = {}",
                self.theta, self.beta
            )))
        }
    }
}

/// Builds the constant-index slab whose first half-waveplate order sits at a
/// chosen frequency: `n_TE − n_TM = c/(2·f·d)` so that `Δφ = π` at `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabCalibration {
    pub half_wave_hz: f64,
    pub thickness: f64,
    pub index_tm: f64,
    pub air_path: f64,
}

impl SlabCalibration {
    pub const PAPER_HALF_WAVE_HZ: f64 = 16.75e9;
    pub const DEFAULT_THICKNESS: f64 = 0.2;
    pub const DEFAULT_INDEX_TM: f64 = 1.34;
    /// Transmitter horn spacing, far field at these wavelengths.
    pub const DEFAULT_AIR_PATH: f64 = 1.0;

    pub fn birefringence(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.half_wave_hz * self.thickness)
    }

    pub fn index_models(&self) -> (IndexModel, IndexModel) {
        (
            IndexModel::constant(self.index_tm + self.birefringence()),
            IndexModel::constant(self.index_tm),
        )
    }

    pub fn config(&self, theta: f64, beta: f64) -> Result<SystemConfig> {
        let (te, tm) = self.index_models();
        SystemConfig::new(self.thickness, self.air_path, theta, beta, te, tm)
    }
}

impl Default for SlabCalibration {
    fn default() -> Self {
        Self {
            half_wave_hz: Self::PAPER_HALF_WAVE_HZ,
            thickness: Self::DEFAULT_THICKNESS,
            index_tm: Self::DEFAULT_INDEX_TM,
            air_path: Self::DEFAULT_AIR_PATH,
        }
    }
}

fn mode_phase_at(config: &SystemConfig, mode: Mode, z: Complex64) -> Complex64 {
    let n = config.index(mode).index_at(z);
    (n * config.thickness + config.air_path) * z / SPEED_OF_LIGHT
}

fn mode_phase_slope_at(config: &SystemConfig, mode: Mode, z: Complex64) -> Complex64 {
    let model = config.index(mode);
    let n = model.index_at(z);
    let dn = model.index_slope_at(z);
    ((n + dn * z) * config.thickness + config.air_path) / SPEED_OF_LIGHT
}

fn delta_phi_at(config: &SystemConfig, z: Complex64) -> Complex64 {
    let dn = config.index_te.index_at(z) - config.index_tm.index_at(z);
    dn * z * config.thickness / SPEED_OF_LIGHT
}

fn delta_phi_slope_at(config: &SystemConfig, z: Complex64) -> Complex64 {
    let dn = config.index_te.index_at(z) - config.index_tm.index_at(z);
    let ddn = config.index_te.index_slope_at(z) - config.index_tm.index_slope_at(z);
    (dn + ddn * z) * config.thickness / SPEED_OF_LIGHT
}

/// Continuous phase `φ_mode(ω)` (rad).
pub fn mode_phase(config: &SystemConfig, mode: Mode, omega: f64) -> f64 {
    mode_phase_at(config, mode, Complex64::new(omega, 0.0)).re
}

/// `dφ_mode/dω` (s).
pub fn mode_phase_slope(config: &SystemConfig, mode: Mode, omega: f64) -> f64 {
    mode_phase_slope_at(config, mode, Complex64::new(omega, 0.0)).re
}

/// `Δφ = φ_TE − φ_TM`; the air path cancels identically.
pub fn delta_phi(config: &SystemConfig, omega: f64) -> f64 {
    delta_phi_at(config, Complex64::new(omega, 0.0)).re
}

/// `dΔφ/dω` (s).
pub fn delta_phi_slope(config: &SystemConfig, omega: f64) -> f64 {
    delta_phi_slope_at(config, Complex64::new(omega, 0.0)).re
}

/// `H` written in terms of the two mode phases.
pub fn transfer_from_phases(theta: f64, beta: f64, phi_te: f64, phi_tm: f64) -> Complex64 {
    beta.sin() * theta.sin() * Complex64::from_polar(1.0, phi_te)
        + beta.cos() * theta.cos() * Complex64::from_polar(1.0, phi_tm)
}

pub fn transfer_h(config: &SystemConfig, omega: f64) -> Complex64 {
    transfer_from_phases(
        config.theta,
        config.beta,
        mode_phase(config, Mode::Te, omega),
        mode_phase(config, Mode::Tm, omega),
    )
}

/// Analytic continuation of `H` to complex frequency.
pub fn transfer_h_at(config: &SystemConfig, z: Complex64) -> Complex64 {
    let (a, b) = config.path_weights();
    b * (I * mode_phase_at(config, Mode::Te, z)).exp() + a * (I * mode_phase_at(config, Mode::Tm, z)).exp()
}

/// `H·e^{−iφ_TM} = cos β cos θ + sin β sin θ e^{iΔφ}`. The dropped factor is
/// entire and zero-free, so this has exactly the zeros of `H` while staying
/// O(1) off the real axis.
pub fn reduced_transfer_at(config: &SystemConfig, z: Complex64) -> Complex64 {
    let (a, b) = config.path_weights();
    a + b * (I * delta_phi_at(config, z)).exp()
}

fn reduced_transfer_slope_at(config: &SystemConfig, z: Complex64) -> Complex64 {
    let (_, b) = config.path_weights();
    I * b * delta_phi_slope_at(config, z) * (I * delta_phi_at(config, z)).exp()
}

/// `|H(ω)| = |cos β cos θ + sin β sin θ e^{iΔφ}|`, evaluated without the
/// cancellation of the squared form so exact nulls stay near zero.
pub fn magnitude_h(config: &SystemConfig, omega: f64) -> f64 {
    let (a, b) = config.path_weights();
    let dphi = delta_phi(config, omega);
    (a + b * dphi.cos()).hypot(b * dphi.sin())
}

pub fn magnitude_series(config: &SystemConfig, grid: &FrequencyGrid) -> Result<RealSeries> {
    RealSeries::from_fn(*grid, |w| magnitude_h(config, w))
}

/// Unwrapped `arg H` along the grid, anchored so the first sample lies in
/// `(−π, π]`.
pub fn arg_h(config: &SystemConfig, grid: &FrequencyGrid) -> Result<RealSeries> {
    let mut raw = Vec::with_capacity(grid.count());
    for omega in grid.omegas() {
        let h = transfer_h(config, omega);
        let magnitude = h.norm();
        if magnitude < ZERO_TRANSMISSION {
            return Err(Error::ZeroTransmission { omega, magnitude });
        }
        raw.push(h.arg());
    }
    RealSeries::new(*grid, unwrap(&raw))
}

/// Continuous closed-form `arg H(ω)` followed from `ω = 0`, where every index
/// model gives `φ = 0`. This is the absolute phase a real impulse response
/// carries; [`arg_h`] agrees with it up to a constant multiple of `2π`.
pub fn absolute_phase(config: &SystemConfig, omega: f64) -> f64 {
    let (a, b) = config.path_weights();
    let phi_tm = mode_phase(config, Mode::Tm, omega);
    let dphi = delta_phi(config, omega);
    let sign_phase = |x: f64| if x < 0.0 { PI } else { 0.0 };
    // factor out the dominant path so the remaining argument never wraps
    let interference = if b.abs() < a.abs() {
        let r = b / a;
        sign_phase(a) + Complex64::new(1.0 + r * dphi.cos(), r * dphi.sin()).arg()
    } else if b.abs() > a.abs() {
        let r = a / b;
        sign_phase(b) + dphi + Complex64::new(1.0 + r * dphi.cos(), -r * dphi.sin()).arg()
    } else {
        // balanced paths: H ∝ cos(Δφ/2) e^{iΔφ/2}, undefined only at the nulls
        sign_phase(a) + 0.5 * dphi
    };
    phi_tm + interference
}

pub fn absolute_phase_series(config: &SystemConfig, grid: &FrequencyGrid) -> Result<RealSeries> {
    RealSeries::from_fn(*grid, |w| absolute_phase(config, w))
}

/// Group delay with a flag set when `|H|` is at or below [`ZERO_TRANSMISSION`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupDelay {
    pub seconds: f64,
    pub near_singular: bool,
}

/// Closed-form `τ_g = ∂ arg H/∂ω`:
///
/// `τ_g = φ′_TM + Δφ′ · b(b + a cos Δφ) / |a + b e^{iΔφ}|²`
///
/// with `a = cos β cos θ`, `b = sin β sin θ`. At `θ = π/4` this is
/// `φ′_TM + Δφ′(1 + cot β cos Δφ)/(1 + cot²β + 2 cot β cos Δφ)`.
pub fn group_delay(config: &SystemConfig, omega: f64) -> GroupDelay {
    let (a, b) = config.path_weights();
    let dphi = delta_phi(config, omega);
    let re = a + b * dphi.cos();
    let im = b * dphi.sin();
    let mag = re.hypot(im);
    let seconds = mode_phase_slope(config, Mode::Tm, omega)
        + delta_phi_slope(config, omega) * b * (b + a * dphi.cos()) / (mag * mag);
    GroupDelay {
        seconds,
        near_singular: mag <= ZERO_TRANSMISSION,
    }
}

/// Earliest time at which any output may appear: vacuum transit of the slab
/// plus the air path.
pub fn relativistic_front_time(config: &SystemConfig) -> f64 {
    (config.thickness + config.air_path) / SPEED_OF_LIGHT
}

/// One half-waveplate frequency: `Δφ(ω) = (2m + 1)π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfWaveplate {
    pub order: i64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfWaveplateSearch {
    pub roots: Vec<HalfWaveplate>,
    /// False when `Δφ` changes direction inside the band; every crossing is
    /// still reported.
    pub monotone: bool,
}

const HALF_WAVE_TOLERANCE: f64 = 1e-10;

/// Locates every `ω` in the grid's band with `Δφ(ω) = (2m + 1)π` for `m` in
/// `orders`, by bracketing on the grid, bisection and a Newton polish.
pub fn half_waveplate_frequencies(
    config: &SystemConfig,
    grid: &FrequencyGrid,
    orders: RangeInclusive<i64>,
) -> HalfWaveplateSearch {
    let omegas = grid.omegas();
    let dphi: Vec<f64> = omegas.iter().map(|&w| delta_phi(config, w)).collect();
    let steps: Vec<f64> = dphi.windows(2).map(|p| p[1] - p[0]).collect();
    let monotone = steps.iter().all(|&s| s > 0.0) || steps.iter().all(|&s| s < 0.0);

    let mut roots = Vec::new();
    for m in orders {
        let target = (2 * m + 1) as f64 * PI;
        let g = |w: f64| delta_phi(config, w) - target;
        for k in 0..omegas.len() - 1 {
            let (g0, g1) = (dphi[k] - target, dphi[k + 1] - target);
            if g0 == 0.0 {
                roots.push(HalfWaveplate { order: m, omega: omegas[k] });
                continue;
            }
            if k + 2 == omegas.len() && g1 == 0.0 {
                roots.push(HalfWaveplate { order: m, omega: omegas[k + 1] });
                continue;
            }
            if g0.signum() == g1.signum() {
                continue;
            }
            let (mut lo, mut hi) = (omegas[k], omegas[k + 1]);
            let mut glo = g0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
                if (hi - lo) < 1e-6 * grid.spacing() {
                    break;
                }
            }
            let mut w = 0.5 * (lo + hi);
            for _ in 0..20 {
                let gw = g(w);
                if gw.abs() < 0.01 * HALF_WAVE_TOLERANCE {
                    break;
                }
                let slope = delta_phi_slope(config, w);
                if slope == 0.0 {
                    break;
                }
                let next = w - gw / slope;
                if !(next >= lo && next <= hi) {
                    break;
                }
                w = next;
            }
            roots.push(HalfWaveplate { order: m, omega: w });
        }
    }
    roots.sort_by(|p, q| p.omega.total_cmp(&q.omega));
    HalfWaveplateSearch { roots, monotone }
}

/// Leading-order behaviour near a half-waveplate frequency for `β = π/4 ± ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonPrediction {
    pub epsilon: f64,
    /// `+1` for `β = π/4 + ε`, `−1` for `β = π/4 − ε`.
    pub sign: f64,
    /// `|H(ω_m)| ≈ ε`
    pub magnitude: f64,
    /// `τ_g(ω_m) ≈ φ′_TM(ω_m) ± Δφ′(ω_m)/(2ε)`
    pub group_delay: f64,
}

pub fn epsilon_expansion(config: &SystemConfig, omega_m: f64) -> Result<EpsilonPrediction> {
    if (config.theta - FRAC_PI_4).abs() > 1e-12 {
        return Err(Error::InvalidConfig(
            "the ε-expansion assumes θ = π/4".into(),
        ));
    }
    let offset = config.beta - FRAC_PI_4;
    let epsilon = offset.abs();
    if !(epsilon > 0.0 && epsilon < 0.1) {
        return Err(Error::InvalidConfig(format!(
            "β must lie within 0.1 rad of π/4 (excluding π/4), ε = {epsilon}"
        )));
    }
    let sign = offset.signum();
    Ok(EpsilonPrediction {
        epsilon,
        sign,
        magnitude: epsilon,
        group_delay: mode_phase_slope(config, Mode::Tm, omega_m)
            + sign * delta_phi_slope(config, omega_m) / (2.0 * epsilon),
    })
}

/// Half of the complex frequency plane a zero lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfPlane {
    Upper,
    Lower,
}

impl HalfPlane {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Upper => "upper",
            Self::Lower => "lower",
        }
    }
}

/// A zero `ω̃_n` of `H` in the complex frequency plane, where
/// `Δφ(ω̃_n) = −i ln|cot β cot θ| + 2π(n + 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexZero {
    pub n: i64,
    pub omega: Complex64,
    pub half_plane: HalfPlane,
    /// `|H(ω̃)·e^{−iφ_TM(ω̃)}|` relative to the band maximum of `|H|`.
    pub residual: f64,
}

/// A branch whose Newton polish did not converge.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedZero {
    pub n: i64,
    pub last_estimate: Complex64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSearch {
    pub zeros: Vec<ComplexZero>,
    pub rejected: Vec<RejectedZero>,
}

impl ZeroSearch {
    /// Zeros whose real part lies inside `[lo, hi]`.
    pub fn with_real_part_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = &ComplexZero> {
        self.zeros
            .iter()
            .filter(move |z| z.omega.re >= lo && z.omega.re <= hi)
    }
}

/// Residual accepted for a polished zero, relative to the band maximum of `|H|`.
pub const ZERO_RESIDUAL_LIMIT: f64 = 1e-9;
const NEWTON_MAX_ITERATIONS: usize = 50;

/// `ln(a/b)` for the path weights: zero on the boundary where the two paths
/// balance and the zeros sit on the real axis.
fn weight_log_ratio(config: &SystemConfig) -> f64 {
    let (a, b) = config.path_weights();
    (a / b).abs().ln()
}

fn is_balanced(config: &SystemConfig) -> bool {
    weight_log_ratio(config).abs() < 1e-12
}

/// Order range whose zeros can have real parts inside the band.
pub fn zero_orders_for_band(config: &SystemConfig, grid: &FrequencyGrid) -> RangeInclusive<i64> {
    let (lo, hi) = grid
        .omegas()
        .iter()
        .map(|&w| delta_phi(config, w))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    let n_lo = (lo / TWO_PI - 0.5).floor() as i64 - 1;
    let n_hi = (hi / TWO_PI - 0.5).ceil() as i64 + 1;
    n_lo..=n_hi
}

/// Initial estimates of `ω̃_n` from `Δφ(ω) = target`. Constant and linear
/// index models are solved exactly (`Δφ` is linear or quadratic in `ω`);
/// Lorentz models use a straight-line fit of `Δφ` over the band followed by a
/// complex Newton iteration on `Δφ` itself.
fn zero_seeds(config: &SystemConfig, grid: &FrequencyGrid, target: Complex64) -> Vec<Complex64> {
    let scale = config.thickness / SPEED_OF_LIGHT;
    match (config.index_te, config.index_tm) {
        (IndexModel::Constant { n0: te }, IndexModel::Constant { n0: tm }) => {
            let slope = (te - tm) * scale;
            if slope == 0.0 {
                Vec::new()
            } else {
                vec![target / slope]
            }
        }
        (
            IndexModel::Constant { .. } | IndexModel::Linear { .. },
            IndexModel::Constant { .. } | IndexModel::Linear { .. },
        ) => {
            // Δn(ω) = p + q·ω
            let coeffs = |m: IndexModel| match m {
                IndexModel::Constant { n0 } => (n0, 0.0),
                IndexModel::Linear {
                    n0,
                    slope,
                    omega_ref,
                } => (n0 - slope * omega_ref, slope),
                IndexModel::Lorentz { .. } => unreachable!(),
            };
            let (pe, qe) = coeffs(config.index_te);
            let (pm, qm) = coeffs(config.index_tm);
            let (p, q) = ((pe - pm) * scale, (qe - qm) * scale);
            if q == 0.0 {
                return if p == 0.0 { Vec::new() } else { vec![target / p] };
            }
            // q ω² + p ω − target = 0
            let disc = (p * p + 4.0 * q * target).sqrt();
            vec![(-p + disc) / (2.0 * q), (-p - disc) / (2.0 * q)]
                .into_iter()
                .filter(|z| z.re > 0.0)
                .collect()
        }
        _ => {
            let omegas = grid.omegas();
            let n = omegas.len() as f64;
            let ys: Vec<f64> = omegas.iter().map(|&w| delta_phi(config, w)).collect();
            let (sx, sy) = (omegas.iter().sum::<f64>(), ys.iter().sum::<f64>());
            let sxy: f64 = omegas.iter().zip(&ys).map(|(x, y)| x * y).sum();
            let sxx: f64 = omegas.iter().map(|x| x * x).sum();
            let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            let intercept = (sy - slope * sx) / n;
            if slope == 0.0 || !slope.is_finite() {
                return Vec::new();
            }
            let mut z = (target - intercept) / slope;
            for _ in 0..NEWTON_MAX_ITERATIONS {
                let step = (delta_phi_at(config, z) - target) / delta_phi_slope_at(config, z);
                if !step.is_finite() {
                    break;
                }
                z -= step;
                if step.norm() <= 1e-14 * z.norm() {
                    break;
                }
            }
            vec![z]
        }
    }
}

/// Zeros of `H` for branch indices `orders`, Newton-polished on `H` itself
/// (through the zero-free reduced form). `grid` supplies the band used for the
/// residual normalisation and, for Lorentz models, the seed.
///
/// At the balanced angle (β = π/4 for θ = π/4) the zeros are real and tagged
/// [`HalfPlane::Lower`]. At `β ∈ {0, π/2}` one path vanishes and there are no
/// zeros.
pub fn transfer_zeros(
    config: &SystemConfig,
    grid: &FrequencyGrid,
    orders: RangeInclusive<i64>,
) -> Result<ZeroSearch> {
    let (a, b) = config.path_weights();
    let mut search = ZeroSearch {
        zeros: Vec::new(),
        rejected: Vec::new(),
    };
    if a.abs() < 1e-15 || b.abs() < 1e-15 {
        return Ok(search);
    }
    config.require_open_quadrant()?;
    let band_max = grid
        .omegas()
        .iter()
        .map(|&w| magnitude_h(config, w))
        .fold(0.0, f64::max);
    let balanced = is_balanced(config);
    let log_ratio = if balanced { 0.0 } else { weight_log_ratio(config) };

    for n in orders {
        let target = Complex64::new(TWO_PI * (n as f64 + 0.5), -log_ratio);
        for seed in zero_seeds(config, grid, target) {
            let mut z = seed;
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITERATIONS {
                let f = reduced_transfer_at(config, z);
                let df = reduced_transfer_slope_at(config, z);
                let step = f / df;
                if !step.is_finite() {
                    break;
                }
                z -= step;
                if balanced {
                    z.im = 0.0;
                }
                if step.norm() <= 1e-15 * z.norm() {
                    converged = true;
                    break;
                }
            }
            let residual = reduced_transfer_at(config, z).norm() / band_max;
            if !(residual < ZERO_RESIDUAL_LIMIT) || !z.is_finite() {
                search.rejected.push(RejectedZero {
                    n,
                    last_estimate: z,
                    reason: if converged {
                        format!("residual {residual:e} above limit")
                    } else {
                        format!(
                            "Newton did not converge in {NEWTON_MAX_ITERATIONS} iterations (residual {residual:e})"
                        )
                    },
                });
                continue;
            }
            let half_plane = if z.im > 0.0 {
                HalfPlane::Upper
            } else {
                HalfPlane::Lower
            };
            search.zeros.push(ComplexZero {
                n,
                omega: z,
                half_plane,
                residual,
            });
        }
    }
    search.zeros.sort_by(|p, q| p.omega.re.total_cmp(&q.omega.re));
    Ok(search)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_config(beta: f64) -> SystemConfig {
        SystemConfig::new(
            1.0,
            0.0,
            FRAC_PI_4,
            beta,
            IndexModel::constant(1.0),
            IndexModel::constant(1.0),
        )
        .unwrap()
    }

    fn paper(beta_deg: f64) -> SystemConfig {
        SlabCalibration::default()
            .config(FRAC_PI_4, beta_deg.to_radians())
            .unwrap()
    }

    #[test]
    fn unit_propagation_phase() {
        let c = unit_config(FRAC_PI_4);
        assert!((mode_phase(&c, Mode::Te, SPEED_OF_LIGHT) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slab_phase_arithmetic() {
        let c = SystemConfig::new(
            0.2,
            0.0,
            FRAC_PI_4,
            FRAC_PI_4,
            IndexModel::constant(1.5),
            IndexModel::constant(1.5),
        )
        .unwrap();
        let w = TWO_PI * 16.75e9;
        // 1.5 · 2π · 16.75e9 · 0.2 / 299792458
        let expected = 105.316_212_353_072;
        assert!((mode_phase(&c, Mode::Tm, w) - expected).abs() < 1e-9);
        assert!((mode_phase(&c, Mode::Tm, w) - 105.28).abs() < 0.05, "within 0.05 rad of the quoted 105.28");
    }

    #[test]
    fn air_path_is_additive_and_cancels_in_delta() {
        let base = paper(40.0).with_air_path(0.0).unwrap();
        let air = base.with_air_path(0.5).unwrap();
        let w = TWO_PI * 15e9;
        for mode in [Mode::Te, Mode::Tm] {
            let diff = mode_phase(&air, mode, w) - mode_phase(&base, mode, w);
            assert!((diff - w * 0.5 / SPEED_OF_LIGHT).abs() < 1e-12 * diff);
        }
        assert_eq!(delta_phi(&air, w), delta_phi(&base, w));
    }

    #[test]
    fn identical_modes_have_no_phase_difference() {
        let c = unit_config(0.3);
        for w in [1e9, 5e10, 1e11] {
            assert_eq!(delta_phi(&c, w), 0.0);
        }
    }

    #[test]
    fn calibrated_birefringence_puts_half_wave_at_target() {
        let cal = SlabCalibration::default();
        assert!((cal.birefringence() - 0.0448).abs() < 2e-4);
        let c = paper(40.0);
        let w = TWO_PI * 16.75e9;
        assert!((delta_phi(&c, w) - PI).abs() < 1e-12);
        // the TM axis is the fast axis, so Δφ grows with ω
        assert!(delta_phi_slope(&c, w) > 0.0);
    }

    #[test]
    fn linear_models_slope_matches_finite_difference() {
        let c = SystemConfig::new(
            0.2,
            0.3,
            FRAC_PI_4,
            0.6,
            IndexModel::linear(1.4, 2e-13, 1e11),
            IndexModel::linear(1.35, -1e-13, 1e11),
        )
        .unwrap();
        for w in [8e10, 1e11, 1.2e11] {
            let h = 1e3;
            let fd = (delta_phi(&c, w + h) - delta_phi(&c, w - h)) / (2.0 * h);
            assert!((fd - delta_phi_slope(&c, w)).abs() < 1e-7 * fd.abs());
            for mode in [Mode::Te, Mode::Tm] {
                let fd = (mode_phase(&c, mode, w + h) - mode_phase(&c, mode, w - h)) / (2.0 * h);
                assert!((fd - mode_phase_slope(&c, mode, w)).abs() < 1e-7 * fd.abs());
            }
        }
    }

    #[test]
    fn lorentz_slope_matches_finite_difference() {
        let m = IndexModel::lorentz(1.3, 1e20, 1e11, 5e9);
        for w in [5e10, 9.5e10, 1.05e11, 2e11] {
            let h = 1e5;
            let fd = (m.index(w + h) - m.index(w - h)) / (2.0 * h);
            assert!((fd - m.index_slope(w)).abs() < 1e-6 * fd.abs());
        }
        assert!(IndexModel::lorentz(1.3, 1.0, 0.0, 1.0).validate().is_err());
        assert!(IndexModel::lorentz(1.3, 1.0, 1.0, -1.0).validate().is_err());
    }

    #[test]
    fn constructive_interference_at_zero_delta() {
        let c = unit_config(FRAC_PI_4);
        let w = 3e10;
        let h = transfer_h(&c, w);
        assert!((h.norm() - 1.0).abs() < 1e-15);
        let arg_tm = Complex64::from_polar(1.0, mode_phase(&c, Mode::Tm, w)).arg();
        assert!((h.arg() - arg_tm).abs() < 1e-12);
    }

    #[test]
    fn half_wave_nulls_at_balanced_analyzer() {
        let c = paper(45.0);
        let w = TWO_PI * 16.75e9;
        assert!(transfer_h(&c, w).norm() < 1e-12);
        assert!(magnitude_h(&c, w) < 1e-12);
    }

    #[test]
    fn forty_degree_minimum_depth() {
        let c = paper(40.0);
        let w = TWO_PI * 16.75e9;
        let expected = ((1.0 - 80f64.to_radians().sin()) / 2.0).sqrt();
        assert!((magnitude_h(&c, w) - expected).abs() < 1e-12);
        assert!((expected - 0.0872).abs() < 1e-4);
    }

    #[test]
    fn magnitude_agrees_with_transfer() {
        let c = paper(40.0).with_theta(0.3).unwrap();
        for k in 0..200 {
            let w = TWO_PI * (13e9 + k as f64 * 35e6);
            assert!((magnitude_h(&c, w) - transfer_h(&c, w).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn arg_matches_closed_form_up_to_whole_turns() {
        let grid = FrequencyGrid::from_hz(13e9, 20e9, 2048).unwrap();
        for beta in [20.0, 40.0, 50.0, 70.0] {
            let c = paper(beta);
            let phase = arg_h(&c, &grid).unwrap();
            assert!(phase.values()[0] > -PI && phase.values()[0] <= PI);
            let closed = absolute_phase_series(&c, &grid).unwrap();
            let offset = closed.values()[0] - phase.values()[0];
            assert!(((offset / TWO_PI).round() * TWO_PI - offset).abs() < 1e-9);
            for (p, q) in phase.values().iter().zip(closed.values()) {
                assert!((q - p - offset).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn arg_refuses_exact_null() {
        // 16.75 GHz is sample 4096 of this grid
        let grid = FrequencyGrid::from_hz(13e9, 20.5e9, 8193).unwrap();
        assert!(matches!(
            arg_h(&paper(45.0), &grid),
            Err(Error::ZeroTransmission { .. })
        ));
    }

    #[test]
    fn group_delay_reduces_to_tm_when_analyzer_passes_tm_only() {
        let c = paper(40.0).with_beta(0.0).unwrap();
        for w in [TWO_PI * 14e9, TWO_PI * 16.75e9] {
            assert_eq!(group_delay(&c, w).seconds, mode_phase_slope(&c, Mode::Tm, w));
        }
    }

    #[test]
    fn group_delay_is_large_and_negative_near_balance() {
        let eps = 1e-3;
        let c = paper(45.0).with_beta(FRAC_PI_4 - eps).unwrap();
        let w = TWO_PI * 16.75e9;
        let tau = group_delay(&c, w);
        let lead = mode_phase_slope(&c, Mode::Tm, w) - delta_phi_slope(&c, w) / (2.0 * eps);
        assert!(tau.seconds < 0.0);
        assert!(!tau.near_singular);
        assert!((tau.seconds - lead).abs() < 0.01 * lead.abs());
        assert!(group_delay(&paper(45.0), w).near_singular);
    }

    #[test]
    fn group_delay_matches_finite_difference() {
        for (beta, theta) in [(40.0, 45.0), (50.0, 45.0), (20.0, 30.0), (75.0, 60.0)] {
            let c = paper(beta).with_theta(f64::to_radians(theta)).unwrap();
            for k in 0..50 {
                let w = TWO_PI * (13.1e9 + k as f64 * 0.13e9);
                let h = 1e6;
                let fd = (absolute_phase(&c, w + h) - absolute_phase(&c, w - h)) / (2.0 * h);
                let tau = group_delay(&c, w).seconds;
                assert!((fd - tau).abs() < 1e-6 * tau.abs(), "β={beta} ω={w}: {fd} vs {tau}");
            }
        }
    }

    #[test]
    fn half_waveplate_linear_closed_form() {
        let c = paper(40.0).with_air_path(0.0).unwrap();
        let a = delta_phi_slope(&c, 1.0);
        let grid = FrequencyGrid::from_hz(5e9, 60e9, 512).unwrap();
        let found = half_waveplate_frequencies(&c, &grid, 0..=0);
        assert!(found.monotone);
        assert_eq!(found.roots.len(), 1);
        assert!((found.roots[0].omega - PI / a).abs() < 1e-9 * PI / a);
    }

    #[test]
    fn half_waveplate_in_paper_band() {
        let grid = FrequencyGrid::from_hz(13e9, 20e9, 8192).unwrap();
        let c = paper(40.0);
        let found = half_waveplate_frequencies(&c, &grid, -3..=3);
        assert_eq!(found.roots.len(), 1);
        let root = found.roots[0];
        assert_eq!(root.order, 0);
        let f = root.omega / TWO_PI;
        assert!((16.5e9..=17.0e9).contains(&f));
        assert!((delta_phi(&c, root.omega) - PI).abs() < 1e-10);
    }

    #[test]
    fn half_waveplate_absent_for_constant_delta() {
        let grid = FrequencyGrid::from_hz(13e9, 20e9, 256).unwrap();
        let c = unit_config(0.5);
        assert!(half_waveplate_frequencies(&c, &grid, -5..=5).roots.is_empty());
    }

    #[test]
    fn half_waveplate_reports_non_monotone_phase() {
        // resonance inside the band turns Δφ around
        let c = SystemConfig::new(
            0.2,
            0.0,
            FRAC_PI_4,
            0.7,
            IndexModel::lorentz(1.4, 4e19, TWO_PI * 16e9, TWO_PI * 0.3e9),
            IndexModel::constant(1.38),
        )
        .unwrap();
        let grid = FrequencyGrid::from_hz(13e9, 20e9, 4096).unwrap();
        let found = half_waveplate_frequencies(&c, &grid, -10..=10);
        assert!(!found.monotone);
        for r in &found.roots {
            let target = (2 * r.order + 1) as f64 * PI;
            assert!((delta_phi(&c, r.omega) - target).abs() < 1e-10);
        }
        assert!(found.roots.len() >= 2);
    }

    #[test]
    fn epsilon_expansion_leading_terms() {
        let w = TWO_PI * 16.75e9;
        let eps = 5f64.to_radians();
        let c = paper(40.0);
        let pred = epsilon_expansion(&c, w).unwrap();
        assert!((pred.epsilon - eps).abs() < 1e-15);
        assert!((pred.magnitude - 0.0873).abs() < 1e-4);
        assert!((magnitude_h(&c, w) - 0.0872).abs() < 1e-4);
        assert_eq!(pred.sign, -1.0);

        let c = paper(45.0).with_beta(FRAC_PI_4 + 1e-3).unwrap();
        let pred = epsilon_expansion(&c, w).unwrap();
        let dominant = pred.group_delay - mode_phase_slope(&c, Mode::Tm, w);
        assert!((dominant - delta_phi_slope(&c, w) / 2e-3).abs() < 1e-20);
        assert!(epsilon_expansion(&paper(45.0), w).is_err());
        assert!(epsilon_expansion(&paper(30.0), w).is_err());
    }

    #[test]
    fn epsilon_magnitude_error_is_cubic() {
        let w = TWO_PI * 16.75e9;
        let err = |eps: f64| {
            let c = paper(45.0).with_beta(FRAC_PI_4 - eps).unwrap();
            (magnitude_h(&c, w) - epsilon_expansion(&c, w).unwrap().magnitude).abs()
        };
        for eps in [0.04, 0.02] {
            let ratio = err(eps) / err(eps / 2.0);
            assert!((ratio / 8.0 - 1.0).abs() < 0.05, "ratio {ratio}");
        }
    }

    #[test]
    fn zeros_for_linear_phase_follow_cot_beta() {
        let c = paper(50.0).with_air_path(0.0).unwrap();
        let grid = FrequencyGrid::from_hz(13e9, 20e9, 256).unwrap();
        let a = delta_phi_slope(&c, 1.0);
        assert!(((50f64.to_radians().tan().recip()).ln() + 0.1754).abs() < 1e-4);
        let z50 = transfer_zeros(&c, &grid, 0..=0).unwrap();
        assert_eq!(z50.zeros.len(), 1);
        let z = z50.zeros[0];
        assert!((z.omega.im - 0.175_4 / a).abs() < 1e-3 / a);
        assert!((z.omega.re - PI / a).abs() < 1e-9 * PI / a);
        assert_eq!(z.half_plane, HalfPlane::Upper);

        let z40 = transfer_zeros(&c.with_beta(40f64.to_radians()).unwrap(), &grid, 0..=0).unwrap();
        let w = z40.zeros[0];
        assert_eq!(w.half_plane, HalfPlane::Lower);
        assert!((w.omega.im + z.omega.im).abs() < 1e-9 * z.omega.im.abs());
    }

    #[test]
    fn zeros_are_not_conjugate_symmetric() {
        let grid = FrequencyGrid::from_hz(13e9, 20e9, 512).unwrap();
        for beta in [30.0, 44.0, 46.0, 60.0] {
            let c = paper(beta);
            let found = transfer_zeros(&c, &grid, -2..=2).unwrap();
            assert!(found.rejected.is_empty());
            for z in &found.zeros {
                let at_zero = reduced_transfer_at(&c, z.omega).norm();
                let mirrored = reduced_transfer_at(&c, z.omega.conj()).norm();
                assert!(mirrored > 1e3 * at_zero);
                assert!(z.residual < ZERO_RESIDUAL_LIMIT);
                // reduced form differs from H by a zero-free factor
                let full = transfer_h_at(&c, z.omega);
                let factor = (I * mode_phase_at(&c, Mode::Tm, z.omega)).exp();
                assert!((full / factor - reduced_transfer_at(&c, z.omega)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn balanced_zeros_are_real_and_lower() {
        let grid = FrequencyGrid::from_hz(13e9, 20e9, 512).unwrap();
        let found = transfer_zeros(&paper(45.0), &grid, 0..=0).unwrap();
        assert_eq!(found.zeros.len(), 1);
        assert_eq!(found.zeros[0].omega.im, 0.0);
        assert_eq!(found.zeros[0].half_plane, HalfPlane::Lower);
        assert!((found.zeros[0].omega.re / TWO_PI - 16.75e9).abs() < 1.0);
    }

    #[test]
    fn single_path_has_no_zeros() {
        let grid = FrequencyGrid::from_hz(13e9, 20e9, 64).unwrap();
        for beta in [0.0, FRAC_PI_2] {
            let found = transfer_zeros(&paper(40.0).with_beta(beta).unwrap(), &grid, -3..=3).unwrap();
            assert!(found.zeros.is_empty());
        }
    }

    #[test]
    fn zeros_of_quadratic_and_lorentz_models() {
        let grid = FrequencyGrid::from_hz(13e9, 20e9, 512).unwrap();
        let quad = SystemConfig::new(
            0.2,
            0.1,
            FRAC_PI_4,
            50f64.to_radians(),
            IndexModel::linear(1.39, 1e-13, TWO_PI * 16e9),
            IndexModel::constant(1.34),
        )
        .unwrap();
        let lorentz = SystemConfig::new(
            0.2,
            0.1,
            FRAC_PI_4,
            40f64.to_radians(),
            IndexModel::lorentz(1.38, 5e19, TWO_PI * 40e9, TWO_PI * 1e9),
            IndexModel::constant(1.34),
        )
        .unwrap();
        for c in [quad, lorentz] {
            let orders = zero_orders_for_band(&c, &grid);
            let found = transfer_zeros(&c, &grid, orders).unwrap();
            assert!(found.rejected.is_empty(), "{:?}", found.rejected);
            let in_band: Vec<_> = found
                .with_real_part_in(grid.omega_min(), grid.omega_max())
                .collect();
            assert!(!in_band.is_empty());
            for z in in_band {
                assert!(z.residual < ZERO_RESIDUAL_LIMIT);
            }
        }
    }
}
