//! Band-truncated Kramers-Kronig transforms and amplitude-to-phase
//! reconstruction.
//!
//! For a causal response with real impulse response:
//!
//! ```text
//! Re G(ω) =  (2/π)  P∫ Ω·Im G(Ω)/(Ω² − ω²) dΩ
//! Im G(ω) = −(2ω/π) P∫ Re G(Ω)/(Ω² − ω²) dΩ
//! arg H(ω) = d₀ω − (2ω/π) P∫ ln|H(Ω)|/(Ω² − ω²) dΩ      (minimum phase)
//! ```
//!
//! All integrals run over the sampled band only. The results are trusted in
//! the central part of the band ([`KkBand`]); the neglected tails are mostly
//! absorbed by the fitted linear term. Samples within one grid spacing of the
//! edges are never evaluated and stay `None`.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    self, absolute_phase, half_waveplate_frequencies, magnitude_h, transfer_zeros,
    zero_orders_for_band, ComplexZero, HalfPlane, SystemConfig, ZERO_TRANSMISSION,
};
use crate::numerics::{pv_kernel_integral, FrequencyGrid, PartialSeries, RealSeries};
use crate::Complex64;

/// Fraction of the band, centred, where truncated transforms are trusted.
pub const DEFAULT_INTERIOR_FRACTION: f64 = 0.6;

/// Fewest samples accepted by a linear-term fit.
pub const MIN_FIT_POINTS: usize = 8;

/// A sampled band together with its trusted central sub-band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KkBand {
    grid: FrequencyGrid,
    interior_fraction: f64,
}

impl KkBand {
    pub fn new(grid: FrequencyGrid, interior_fraction: f64) -> Result<Self> {
        if !(interior_fraction > 0.0 && interior_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "interior fraction must lie in (0, 1], got {interior_fraction}"
            )));
        }
        let band = Self {
            grid,
            interior_fraction,
        };
        if band.interior_indices().is_empty() {
            return Err(Error::BandTooNarrow);
        }
        Ok(band)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn interior_fraction(&self) -> f64 {
        self.interior_fraction
    }

    /// `[lo, hi]` of the trusted sub-band.
    pub fn interior_range(&self) -> (f64, f64) {
        let half = 0.5 * self.interior_fraction * (self.grid.omega_max() - self.grid.omega_min());
        (self.grid.center() - half, self.grid.center() + half)
    }

    pub fn is_interior(&self, omega: f64) -> bool {
        let (lo, hi) = self.interior_range();
        let slack = 1e-9 * self.grid.spacing();
        omega >= lo - slack && omega <= hi + slack
    }

    /// Interior sample indices, never including the two edge samples.
    pub fn interior_indices(&self) -> Vec<usize> {
        let n = self.grid.count();
        (1..n - 1)
            .filter(|&k| self.is_interior(self.grid.omega(k)))
            .collect()
    }
}

fn transform(f: &RealSeries, finish: impl Fn(f64, f64) -> f64 + Sync) -> Result<PartialSeries> {
    let grid = *f.grid();
    let n = grid.count();
    let values: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            if k == 0 || k == n - 1 {
                return Ok(None);
            }
            let omega = grid.omega(k);
            match pv_kernel_integral(f, omega) {
                Ok(pv) => Ok(Some(finish(omega, pv))),
                Err(Error::EndpointProximity { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let out = PartialSeries::new(grid, values)?;
    if out.evaluated_count() == 0 {
        return Err(Error::BandTooNarrow);
    }
    Ok(out)
}

/// `Re G` from `Im G` over the band.
pub fn kk_re_from_im(im: &RealSeries) -> Result<PartialSeries> {
    let weighted = im.map(|w, v| w * v)?;
    transform(&weighted, |_, pv| 2.0 / PI * pv)
}

/// `Im G` from `Re G` over the band.
pub fn kk_im_from_re(re: &RealSeries) -> Result<PartialSeries> {
    transform(re, |w, pv| -2.0 * w / PI * pv)
}

/// Phase recovered from a magnitude record.
///
/// `phase = base + d0·ω + offset`, where `base` is the band-truncated
/// log-magnitude transform plus any all-pass corrections.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReconstruction {
    magnitude: RealSeries,
    base: PartialSeries,
    phase: PartialSeries,
    d0: f64,
    offset: f64,
    correction_applied: bool,
    zeros_used: Vec<ComplexZero>,
}

impl PhaseReconstruction {
    fn assemble(
        magnitude: RealSeries,
        base: PartialSeries,
        d0: f64,
        offset: f64,
        zeros_used: Vec<ComplexZero>,
    ) -> Result<Self> {
        let phase = base.map(|w, v| v + d0 * w + offset)?;
        Ok(Self {
            magnitude,
            base,
            phase,
            d0,
            offset,
            correction_applied: !zeros_used.is_empty(),
            zeros_used,
        })
    }

    pub fn phase(&self) -> &PartialSeries {
        &self.phase
    }

    /// The magnitude the phase was reconstructed from. All-pass corrections
    /// leave it untouched.
    pub fn magnitude(&self) -> &RealSeries {
        &self.magnitude
    }

    /// Phase without the linear term `d0·ω + offset`.
    pub fn base(&self) -> &PartialSeries {
        &self.base
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn correction_applied(&self) -> bool {
        self.correction_applied
    }

    pub fn zeros_used(&self) -> &[ComplexZero] {
        &self.zeros_used
    }

    pub fn with_linear_term(&self, d0: f64, offset: f64) -> Result<Self> {
        Self::assemble(
            self.magnitude.clone(),
            self.base.clone(),
            d0,
            offset,
            self.zeros_used.clone(),
        )
    }
}

/// Minimum-phase reconstruction `d0·ω − (2ω/π) P∫ ln|H(Ω)|/(Ω² − ω²) dΩ`.
pub fn phase_from_magnitude(mag: &RealSeries, d0: f64) -> Result<PhaseReconstruction> {
    let grid = *mag.grid();
    if let Some(k) = mag.values().iter().position(|&m| m <= ZERO_TRANSMISSION) {
        return Err(Error::ZeroTransmission {
            omega: grid.omega(k),
            magnitude: mag.values()[k],
        });
    }
    let log_mag = mag.map(|_, m| m.ln())?;
    let base = transform(&log_mag, |w, pv| -2.0 * w / PI * pv)?;
    PhaseReconstruction::assemble(mag.clone(), base, d0, 0.0, Vec::new())
}

/// Samples within `halfwidth` of `center` are left out of a linear-term fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exclusion {
    pub center: f64,
    pub halfwidth: f64,
}

/// Least-squares linear term `d0·ω + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D0Fit {
    pub d0: f64,
    pub offset: f64,
    pub points_used: usize,
}

/// Fits `d0·ω + offset ≈ reference − base` over interior samples outside the
/// exclusion window. The offset absorbs the arbitrary `2π` anchoring of
/// measured phase and the constant part of the truncation error.
pub fn fit_linear_term(
    recon: &PhaseReconstruction,
    reference: &RealSeries,
    band: &KkBand,
    exclusion: Exclusion,
) -> Result<D0Fit> {
    if reference.grid() != recon.base.grid() || band.grid() != recon.base.grid() {
        return Err(Error::ContractViolation(
            "reconstruction, reference and band must share one grid".into(),
        ));
    }
    let mut points = Vec::new();
    for (k, w, base) in recon.base.evaluated() {
        if band.is_interior(w) && (w - exclusion.center).abs() > exclusion.halfwidth {
            points.push((w, reference.values()[k] - base));
        }
    }
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            available: points.len(),
            required: MIN_FIT_POINTS,
        });
    }
    // centre ω for conditioning
    let n = points.len() as f64;
    let mean_w = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(w, y) in &points {
        sxy += (w - mean_w) * (y - mean_y);
        sxx += (w - mean_w) * (w - mean_w);
    }
    let d0 = sxy / sxx;
    Ok(D0Fit {
        d0,
        offset: mean_y - d0 * mean_w,
        points_used: points.len(),
    })
}

/// Fits `d0` by comparing the zero-`d0` reconstruction of `mag` with
/// `reference` away from the transmission dip. The exclusion window is
/// centred on the interior magnitude minimum.
pub fn fit_d0(
    mag: &RealSeries,
    reference: &RealSeries,
    band: &KkBand,
    exclusion_halfwidth: f64,
) -> Result<D0Fit> {
    let recon = phase_from_magnitude(mag, 0.0)?;
    let center = band
        .interior_indices()
        .into_iter()
        .min_by(|&p, &q| mag.values()[p].total_cmp(&mag.values()[q]))
        .map(|k| band.grid().omega(k))
        .unwrap_or_else(|| band.grid().center());
    fit_linear_term(
        &recon,
        reference,
        band,
        Exclusion {
            center,
            halfwidth: exclusion_halfwidth,
        },
    )
}

/// Whether the magnitude alone determines the phase over a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// No zeros with real part in band lie in the upper half-plane.
    MinimumPhase,
    /// Some in-band zero lies in the upper half-plane.
    NonMinimumPhase,
    /// The two paths balance (β = π/4 at θ = π/4): zeros sit on the real axis.
    Boundary,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::MinimumPhase => "MinimumPhase",
            Self::NonMinimumPhase => "NonMinimumPhase",
            Self::Boundary => "Boundary",
        }
    }
}

/// True when `|cot β cot θ − 1| < 1e-12`.
pub fn is_boundary(config: &SystemConfig) -> bool {
    let (a, b) = config.path_weights();
    b != 0.0 && (a / b - 1.0).abs() < 1e-12
}

pub fn classify_minimum_phase(config: &SystemConfig, grid: &FrequencyGrid) -> Result<Classification> {
    if is_boundary(config) {
        return Ok(Classification::Boundary);
    }
    let found = transfer_zeros(config, grid, zero_orders_for_band(config, grid))?;
    let upper = found
        .with_real_part_in(grid.omega_min(), grid.omega_max())
        .any(|z| z.half_plane == HalfPlane::Upper);
    Ok(if upper {
        Classification::NonMinimumPhase
    } else {
        Classification::MinimumPhase
    })
}

/// `(ω − z)/(ω − z̄)`, unit modulus for real `ω`.
pub fn allpass_factor(zero: Complex64, omega: f64) -> Complex64 {
    (omega - zero) / (omega - zero.conj())
}

/// Continuous phase of [`allpass_factor`] for an upper-half-plane zero,
/// rising by `2π` from `0` at `ω → −∞` to `2π` at `ω → +∞`.
pub fn allpass_phase(zero: Complex64, omega: f64) -> f64 {
    2.0 * zero.im.atan2(zero.re - omega)
}

/// Adds the all-pass phase of each upper-half-plane zero to a minimum-phase
/// reconstruction. Magnitudes are untouched.
pub fn allpass_phase_correction(
    recon: &PhaseReconstruction,
    zeros: &[ComplexZero],
) -> Result<PhaseReconstruction> {
    if let Some(z) = zeros.iter().find(|z| z.half_plane != HalfPlane::Upper) {
        return Err(Error::ContractViolation(format!(
            "all-pass correction needs upper-half-plane zeros, got {} (n = {})",
            z.omega, z.n
        )));
    }
    let base = recon
        .base
        .map(|w, v| v + zeros.iter().map(|z| allpass_phase(z.omega, w)).sum::<f64>())?;
    let mut used = recon.zeros_used.clone();
    used.extend_from_slice(zeros);
    PhaseReconstruction::assemble(recon.magnitude.clone(), base, recon.d0, recon.offset, used)
}

/// Upper-half-plane zeros whose real part lies within the band widened 1.5×
/// about its centre. More distant zeros add near-linear phase that the fitted
/// `d0` already carries.
pub fn select_correction_zeros(zeros: &[ComplexZero], grid: &FrequencyGrid) -> Vec<ComplexZero> {
    let half = 0.75 * (grid.omega_max() - grid.omega_min());
    let (lo, hi) = (grid.center() - half, grid.center() + half);
    zeros
        .iter()
        .filter(|z| z.half_plane == HalfPlane::Upper && z.omega.re >= lo && z.omega.re <= hi)
        .copied()
        .collect()
}

/// Continuous phase of the minimum-phase system with the same magnitude as
/// `config`: the dominant path is kept as the reference, so no zeros cross
/// into the upper half-plane.
pub fn minimum_phase_partner_phase(config: &SystemConfig, omega: f64) -> f64 {
    let (a, b) = config.path_weights();
    if b.abs() <= a.abs() {
        return absolute_phase(config, omega);
    }
    let phi_tm = model::mode_phase(config, model::Mode::Tm, omega);
    let dphi = model::delta_phi(config, omega);
    let r = a / b;
    let sign = if b < 0.0 { PI } else { 0.0 };
    phi_tm + sign + Complex64::new(1.0 + r * dphi.cos(), r * dphi.sin()).arg()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KkOptions {
    pub interior_fraction: f64,
    /// Half-width of the window around the transmission dip left out of the
    /// `d0` fit. `None` uses 5% of the dip frequency.
    pub exclusion_halfwidth: Option<f64>,
    /// Apply the all-pass correction when the band is not minimum phase.
    pub correct: bool,
}

impl Default for KkOptions {
    fn default() -> Self {
        Self {
            interior_fraction: DEFAULT_INTERIOR_FRACTION,
            exclusion_halfwidth: None,
            correct: false,
        }
    }
}

/// Amplitude-to-phase reconstruction of the model compared with its
/// closed-form phase.
#[derive(Debug, Clone, PartialEq)]
pub struct KkComparison {
    pub band: KkBand,
    pub classification: Classification,
    pub reconstruction: PhaseReconstruction,
    pub fit: D0Fit,
    pub exclusion: Exclusion,
    /// Closed-form absolute phase of the configured system.
    pub model_phase: RealSeries,
    /// `model_phase − reconstruction`, on evaluated samples.
    pub residual: PartialSeries,
}

impl KkComparison {
    /// Largest `|residual|` over the trusted interior.
    pub fn max_interior_residual(&self) -> f64 {
        self.residual
            .evaluated()
            .filter(|&(_, w, _)| self.band.is_interior(w))
            .map(|(_, _, r)| r.abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|residual|` within `halfwidth` of `center`.
    pub fn max_residual_near(&self, center: f64, halfwidth: f64) -> f64 {
        self.residual
            .evaluated()
            .filter(|&(_, w, _)| (w - center).abs() <= halfwidth)
            .map(|(_, _, r)| r.abs())
            .fold(0.0, f64::max)
    }
}

/// Reconstructs the phase of `config` from its magnitude on `grid`.
///
/// The linear term is fitted against the phase of the system the
/// reconstruction represents: the minimum-phase partner sharing this
/// magnitude when no correction is applied, the configured system itself once
/// the all-pass factors of its upper-half-plane zeros are included.
pub fn reconstruct_model_phase(
    config: &SystemConfig,
    grid: &FrequencyGrid,
    options: KkOptions,
) -> Result<KkComparison> {
    let band = KkBand::new(*grid, options.interior_fraction)?;
    let classification = classify_minimum_phase(config, grid)?;
    let dips = half_waveplate_frequencies(config, grid, zero_orders_for_band(config, grid));
    if classification == Classification::Boundary {
        if let Some(root) = dips.roots.first() {
            return Err(Error::ZeroTransmission {
                omega: root.omega,
                magnitude: magnitude_h(config, root.omega),
            });
        }
    }
    let magnitude = model::magnitude_series(config, grid)?;
    let mut recon = phase_from_magnitude(&magnitude, 0.0)?;

    let center = dips
        .roots
        .iter()
        .map(|r| r.omega)
        .min_by(|p, q| (p - grid.center()).abs().total_cmp(&(q - grid.center()).abs()))
        .unwrap_or_else(|| grid.center());
    let exclusion = Exclusion {
        center,
        halfwidth: options.exclusion_halfwidth.unwrap_or(0.05 * center),
    };

    let model_phase = model::absolute_phase_series(config, grid)?;
    let corrected = options.correct && classification == Classification::NonMinimumPhase;
    let reference = if corrected {
        let found = transfer_zeros(config, grid, zero_orders_for_band(config, grid))?;
        let zeros = select_correction_zeros(&found.zeros, grid);
        recon = allpass_phase_correction(&recon, &zeros)?;
        model_phase.clone()
    } else {
        RealSeries::from_fn(*grid, |w| minimum_phase_partner_phase(config, w))?
    };
    let fit = fit_linear_term(&recon, &reference, &band, exclusion)?;
    let reconstruction = recon.with_linear_term(fit.d0, fit.offset)?;
    let residual = reconstruction
        .phase()
        .map(|w, v| absolute_phase(config, w) - v)?;
    Ok(KkComparison {
        band,
        classification,
        reconstruction,
        fit,
        exclusion,
        model_phase,
        residual,
    })
}

/// `β` whose transfer magnitude matches `β` at `θ = π/4`.
pub fn mirrored_beta(beta: f64) -> f64 {
    FRAC_PI_2 - beta
}
