//! Spectral pulse propagation through a transfer function.
//!
//! Time runs over `[0, window)` in `samples` steps. Fields carry `e^{-iωt}`,
//! so a transfer `e^{iωτ}` delays by `τ`. The FFT bin with index `k > N/2`
//! holds the physical frequency `+2π(N − k)/window` and is multiplied by
//! `H(ω)`; bins `0 < k < N/2` hold negative frequencies and take `conj H`.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{self, SystemConfig};
use crate::numerics::FrequencyGrid;
use crate::Complex64;

/// Smallest accepted `carrier·σ`.
pub const MIN_CYCLES: f64 = 20.0;
/// Smallest accepted `window/σ`.
pub const MIN_WINDOW_SIGMAS: f64 = 12.0;
/// Largest spectral energy fraction allowed outside the model band.
pub const BAND_LEAKAGE_LIMIT: f64 = 1e-3;
pub const DEFAULT_CAUSALITY_THRESHOLD: f64 = 1e-10;
/// Half-width, in samples, of the log-envelope peak fit.
const PEAK_FIT_HALF_WIDTH: usize = 5;

/// Gaussian-enveloped carrier centred in its window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Carrier angular frequency, rad/s.
    pub carrier: f64,
    /// Envelope standard deviation, s.
    pub envelope_sigma: f64,
    /// Samples before this time are zeroed, giving a hard front.
    pub front_time: Option<f64>,
    /// Simulated duration, s.
    pub window: f64,
    /// Sample count, a power of two.
    pub samples: usize,
}

impl PulseSpec {
    pub fn new(carrier: f64, envelope_sigma: f64, window: f64, samples: usize) -> Result<Self> {
        let spec = Self {
            carrier,
            envelope_sigma,
            front_time: None,
            window,
            samples,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_front(mut self, front_time: f64) -> Result<Self> {
        self.front_time = Some(front_time);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPulse(m));
        if !(self.carrier.is_finite() && self.carrier > 0.0) {
            return bad(format!("carrier must be positive, got {}", self.carrier));
        }
        if !(self.envelope_sigma.is_finite() && self.envelope_sigma > 0.0) {
            return bad(format!("envelope sigma must be positive, got {}", self.envelope_sigma));
        }
        if self.carrier * self.envelope_sigma < MIN_CYCLES {
            return bad(format!(
                "carrier*sigma = {:.3} is below {MIN_CYCLES}; the pulse is not narrowband",
                self.carrier * self.envelope_sigma
            ));
        }
        if !(self.window.is_finite() && self.window >= MIN_WINDOW_SIGMAS * self.envelope_sigma) {
            return bad(format!(
                "window {} s is shorter than {MIN_WINDOW_SIGMAS} sigma",
                self.window
            ));
        }
        if self.samples < 2 || !self.samples.is_power_of_two() {
            return bad(format!("samples must be a power of two, got {}", self.samples));
        }
        if PI / self.dt() <= self.carrier {
            return bad("sampling is too coarse for the carrier".into());
        }
        if let Some(t) = self.front_time {
            if !(t.is_finite() && t >= 0.0 && t < self.window) {
                return bad(format!("front time {t} s lies outside the window"));
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.window / self.samples as f64
    }

    /// Envelope peak time, `window/2`.
    pub fn center(&self) -> f64 {
        0.5 * self.window
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|j| j as f64 * self.dt()).collect()
    }
}

/// A sampled real pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    spec: PulseSpec,
    values: Vec<f64>,
}

impl Pulse {
    pub fn spec(&self) -> &PulseSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Forward DFT scaled by `dt`, approximating the continuous spectrum.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = to_complex(&self.values);
        FftPlanner::new()
            .plan_fft_forward(buf.len())
            .process(&mut buf);
        let dt = self.spec.dt();
        buf.iter_mut().for_each(|x| *x *= dt);
        buf
    }

    pub fn envelope(&self) -> Vec<f64> {
        let mut buf = to_complex(&self.values);
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(buf.len()).process(&mut buf);
        envelope_from_spectrum(&mut planner, buf)
    }
}

/// `|ω|` of FFT bin `k` for `n` samples spanning `window`.
pub fn bin_frequency(k: usize, n: usize, window: f64) -> f64 {
    let m = if k <= n / 2 { k } else { n - k };
    2.0 * PI * m as f64 / window
}

pub fn synth_pulse(spec: &PulseSpec) -> Result<Pulse> {
    spec.validate()?;
    let (tc, dt, s) = (spec.center(), spec.dt(), spec.envelope_sigma);
    let values = (0..spec.samples)
        .map(|j| {
            let t = j as f64 * dt;
            if spec.front_time.is_some_and(|f| t < f) {
                return 0.0;
            }
            let u = (t - tc) / s;
            (-0.5 * u * u).exp() * (spec.carrier * (t - tc)).cos()
        })
        .collect();
    Ok(Pulse {
        spec: *spec,
        values,
    })
}

fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// `|analytic signal|` from a forward spectrum (consumed).
fn envelope_from_spectrum(planner: &mut FftPlanner<f64>, mut spec: Vec<Complex64>) -> Vec<f64> {
    let n = spec.len();
    for (k, x) in spec.iter_mut().enumerate() {
        if k == 0 || k == n / 2 {
            continue;
        }
        *x *= if k > n / 2 { 2.0 } else { 0.0 };
    }
    planner.plan_fft_inverse(n).process(&mut spec);
    let scale = 1.0 / n as f64;
    spec.iter().map(|z| z.norm() * scale).collect()
}

/// Peak time from a quadratic least-squares fit to `ln envelope` over
/// `±5` samples around the maximum.
pub fn peak_time(envelope: &[f64], dt: f64) -> Result<f64> {
    let (k, _) = envelope
        .iter()
        .enumerate()
        .max_by(|p, q| p.1.total_cmp(q.1))
        .ok_or_else(|| Error::InvalidPulse("empty envelope".into()))?;
    let h = PEAK_FIT_HALF_WIDTH;
    if k < h || k + h >= envelope.len() {
        return Err(Error::InvalidPulse(
            "envelope peak lies at the window edge".into(),
        ));
    }
    // normal equations for y = c0 + c1 x + c2 x², x symmetric about 0
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let (mut sx2, mut sx4) = (0.0, 0.0);
    for i in 0..=2 * h {
        let x = i as f64 - h as f64;
        let v = envelope[k + i - h];
        if v <= 0.0 {
            return Err(Error::InvalidPulse("envelope vanishes near its peak".into()));
        }
        let y = v.ln();
        s0 += y;
        s1 += x * y;
        s2 += x * x * y;
        sx2 += x * x;
        sx4 += x * x * x * x;
    }
    let m = (2 * h + 1) as f64;
    let c1 = s1 / sx2;
    let c2 = (m * s2 - sx2 * s0) / (m * sx4 - sx2 * sx2);
    let offset = if c2 < 0.0 { (-c1 / (2.0 * c2)).clamp(-1.0, 1.0) } else { 0.0 };
    Ok((k as f64 + offset) * dt)
}

/// What [`propagate_through`] needs besides the transfer function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationContext {
    /// `[ω_min, ω_max]` where the transfer function is trusted.
    pub band: Option<(f64, f64)>,
    pub predicted_group_delay: f64,
    /// Earliest possible response delay.
    pub front_delay: f64,
    pub leakage_limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub dt: f64,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub input_envelope: Vec<f64>,
    pub output_envelope: Vec<f64>,
    pub input_peak_time: f64,
    pub peak_time: f64,
    pub predicted_group_delay: f64,
    pub front_time: Option<f64>,
    pub front_delay: f64,
    /// Output energy before `front_time + front_delay` over total output energy.
    pub pre_front_energy_ratio: Option<f64>,
    /// Input spectral energy fraction outside the band.
    pub band_leakage: f64,
    pub warnings: Vec<String>,
}

impl PropagationResult {
    pub fn measured_delay(&self) -> f64 {
        self.peak_time - self.input_peak_time
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.output.len()).map(|j| j as f64 * self.dt).collect()
    }

    pub fn input_energy(&self) -> f64 {
        self.input.iter().map(|v| v * v).sum::<f64>() * self.dt
    }

    pub fn output_energy(&self) -> f64 {
        self.output.iter().map(|v| v * v).sum::<f64>() * self.dt
    }
}

/// Propagates through `config`, trusting the model over `band`.
///
/// Out-of-band leakage above [`BAND_LEAKAGE_LIMIT`] is an error for frontless
/// pulses. Fronted pulses are broadband by construction; for them the excess
/// is reported as a warning and the analytic transfer is used everywhere.
pub fn propagate(pulse: &Pulse, config: &SystemConfig, band: &FrequencyGrid) -> Result<PropagationResult> {
    let ctx = PropagationContext {
        band: Some((band.omega_min(), band.omega_max())),
        predicted_group_delay: model::group_delay(config, pulse.spec.carrier).seconds,
        front_delay: model::relativistic_front_time(config),
        leakage_limit: BAND_LEAKAGE_LIMIT,
    };
    propagate_through(pulse, |w| model::transfer_h(config, w), ctx)
}

/// Propagates through an arbitrary transfer `H(ω)`, `ω ≥ 0`, of a system
/// with real impulse response.
pub fn propagate_through(
    pulse: &Pulse,
    transfer: impl Fn(f64) -> Complex64 + Sync,
    ctx: PropagationContext,
) -> Result<PropagationResult> {
    let spec = pulse.spec;
    let n = spec.samples;
    let dt = spec.dt();
    let mut planner = FftPlanner::new();
    let mut spectrum = to_complex(&pulse.values);
    planner.plan_fft_forward(n).process(&mut spectrum);

    let mut warnings = Vec::new();
    let band_leakage = match ctx.band {
        Some((lo, hi)) => {
            let (mut outside, mut total) = (0.0, 0.0);
            for (k, x) in spectrum.iter().enumerate() {
                let e = x.norm_sqr();
                total += e;
                let w = bin_frequency(k, n, spec.window);
                if w < lo || w > hi {
                    outside += e;
                }
            }
            if total > 0.0 { outside / total } else { 0.0 }
        }
        None => 0.0,
    };
    if band_leakage > ctx.leakage_limit {
        if spec.front_time.is_none() {
            return Err(Error::BandViolation {
                leakage: band_leakage,
                limit: ctx.leakage_limit,
            });
        }
        warnings.push(format!(
            "{band_leakage:.3e} of the input energy lies outside the model band; \
             the transfer function is extended analytically"
        ));
    }

    let input_envelope = envelope_from_spectrum(&mut planner, spectrum.clone());

    spectrum.par_iter_mut().enumerate().for_each(|(k, x)| {
        let h = transfer(bin_frequency(k, n, spec.window));
        *x *= if k == 0 || k == n / 2 {
            Complex64::new(h.re, 0.0)
        } else if k > n / 2 {
            h
        } else {
            h.conj()
        };
    });
    let output_envelope = envelope_from_spectrum(&mut planner, spectrum.clone());
    planner.plan_fft_inverse(n).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    let output: Vec<f64> = spectrum.iter().map(|z| z.re * scale).collect();

    let pre_front_energy_ratio = spec.front_time.map(|front| {
        let cutoff = front + ctx.front_delay;
        let (mut before, mut total) = (0.0, 0.0);
        for (j, v) in output.iter().enumerate() {
            let e = v * v;
            total += e;
            if (j as f64) * dt < cutoff {
                before += e;
            }
        }
        if total > 0.0 { (before / total).clamp(0.0, 1.0) } else { 0.0 }
    });

    Ok(PropagationResult {
        dt,
        input: pulse.values.clone(),
        input_peak_time: peak_time(&input_envelope, dt)?,
        peak_time: peak_time(&output_envelope, dt)?,
        output,
        input_envelope,
        output_envelope,
        predicted_group_delay: ctx.predicted_group_delay,
        front_time: spec.front_time,
        front_delay: ctx.front_delay,
        pre_front_energy_ratio,
        band_leakage,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalityReport {
    pub ratio: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Passes iff the pre-front energy ratio is strictly below `threshold`.
pub fn front_causality_check(result: &PropagationResult, threshold: f64) -> Result<CausalityReport> {
    let ratio = result.pre_front_energy_ratio.ok_or_else(|| {
        Error::ContractViolation("front causality needs a pulse with a front".into())
    })?;
    Ok(CausalityReport {
        ratio,
        threshold,
        pass: ratio < threshold,
    })
}
