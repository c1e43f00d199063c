//! Frequency grids, sampled series, phase unwrapping and the principal-value
//! kernel integral shared by every dispersion transform in the crate.
//!
//! The kernel integral is `P∫ f(Ω)/(Ω² − ω²) dΩ` over the grid's band. It is
//! evaluated by subtracting the singular part analytically:
//!
//! ```text
//! ∫ [f(Ω) − f(ω)]/(Ω² − ω²) dΩ + f(ω)/(2ω) · ln|((ω₂−ω)(ω₁+ω)) / ((ω₂+ω)(ω₁−ω))|
//! ```
//!
//! The remaining integrand is continuous, so the trapezoidal rule converges at
//! second order. At `Ω = ω` it takes the limit `f′(ω)/(2ω)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest number of samples accepted for a grid.
pub const MIN_GRID_COUNT: usize = 16;

const TWO_PI: f64 = 2.0 * PI;

/// Uniform sampling of a positive angular-frequency band `[omega_min, omega_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    omega_min: f64,
    omega_max: f64,
    count: usize,
}

impl FrequencyGrid {
    pub fn new(omega_min: f64, omega_max: f64, count: usize) -> Result<Self> {
        if !omega_min.is_finite() || !omega_max.is_finite() {
            return Err(Error::InvalidGrid("band edges must be finite".into()));
        }
        if omega_min <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "omega_min must be positive, got {omega_min}"
            )));
        }
        if omega_max <= omega_min {
            return Err(Error::InvalidGrid(format!(
                "omega_max ({omega_max}) must exceed omega_min ({omega_min})"
            )));
        }
        if count < MIN_GRID_COUNT {
            return Err(Error::InvalidGrid(format!(
                "count must be at least {MIN_GRID_COUNT}, got {count}"
            )));
        }
        Ok(Self {
            omega_min,
            omega_max,
            count,
        })
    }

    /// Grid specified by ordinary frequencies in Hz.
    pub fn from_hz(f_min: f64, f_max: f64, count: usize) -> Result<Self> {
        Self::new(TWO_PI * f_min, TWO_PI * f_max, count)
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Sample spacing `Δω = (omega_max − omega_min)/(count − 1)`.
    pub fn spacing(&self) -> f64 {
        (self.omega_max - self.omega_min) / (self.count - 1) as f64
    }

    /// Sample `k`, defined as `omega_min + k·Δω`.
    pub fn omega(&self, k: usize) -> f64 {
        self.omega_min + k as f64 * self.spacing()
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.omega(k)).collect()
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.omega_min + self.omega_max)
    }

    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.omega_min && omega <= self.omega_max
    }

    /// Fractional sample position of `omega`.
    fn position(&self, omega: f64) -> f64 {
        (omega - self.omega_min) / self.spacing()
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Real samples, one per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSeries {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

impl RealSeries {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::LengthMismatch {
                len: values.len(),
                count: grid.count(),
            });
        }
        check_finite(&values)?;
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.omegas().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.grid.omega(k), v))
            .collect();
        Self::new(self.grid, values)
    }
}

/// Complex samples, one per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    grid: FrequencyGrid,
    values: Vec<num_complex::Complex64>,
}

impl ComplexSeries {
    pub fn new(grid: FrequencyGrid, values: Vec<num_complex::Complex64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::LengthMismatch {
                len: values.len(),
                count: grid.count(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[num_complex::Complex64] {
        &self.values
    }

    pub fn magnitude(&self) -> RealSeries {
        RealSeries {
            grid: self.grid,
            values: self.values.iter().map(|z| z.norm()).collect(),
        }
    }

    pub fn real(&self) -> RealSeries {
        RealSeries {
            grid: self.grid,
            values: self.values.iter().map(|z| z.re).collect(),
        }
    }

    pub fn imag(&self) -> RealSeries {
        RealSeries {
            grid: self.grid,
            values: self.values.iter().map(|z| z.im).collect(),
        }
    }

    /// Unwrapped argument along the grid.
    pub fn unwrapped_phase(&self) -> RealSeries {
        let raw: Vec<f64> = self.values.iter().map(|z| z.arg()).collect();
        RealSeries {
            grid: self.grid,
            values: unwrap(&raw),
        }
    }
}

/// A series where some samples were not evaluated, e.g. transforms near the
/// band edges. Missing samples stay `None` through every operation.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSeries {
    grid: FrequencyGrid,
    values: Vec<Option<f64>>,
}

impl PartialSeries {
    pub fn new(grid: FrequencyGrid, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::LengthMismatch {
                len: values.len(),
                count: grid.count(),
            });
        }
        if let Some(index) = values.iter().position(|v| matches!(v, Some(x) if !x.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.values.get(k).copied().flatten()
    }

    /// `(k, ω_k, value)` for every evaluated sample.
    pub fn evaluated(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(k, v)| v.map(|x| (k, self.grid.omega(k), x)))
    }

    pub fn evaluated_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Applies `f(ω, value)` to evaluated samples; missing samples stay missing.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v.map(|x| f(self.grid.omega(k), x)))
            .collect();
        Self::new(self.grid, values)
    }

    /// The longest contiguous run of evaluated samples, re-gridded onto its
    /// own sub-band. `None` if the run is shorter than a valid grid.
    pub fn evaluated_subseries(&self) -> Option<RealSeries> {
        let mut best = (0usize, 0usize);
        let mut start = None;
        for k in 0..=self.values.len() {
            let present = k < self.values.len() && self.values[k].is_some();
            match (present, start) {
                (true, None) => start = Some(k),
                (false, Some(s)) => {
                    if k - s > best.1 - best.0 {
                        best = (s, k);
                    }
                    start = None;
                }
                _ => {}
            }
        }
        let (lo, hi) = best;
        let grid = FrequencyGrid::new(self.grid.omega(lo), self.grid.omega(hi - 1), hi - lo).ok()?;
        let values = self.values[lo..hi].iter().map(|v| v.unwrap()).collect();
        RealSeries::new(grid, values).ok()
    }
}

/// Removes `2π` jumps from a sequence of principal-value phases.
///
/// The output differs from the input by an exact integer multiple of `2π` at
/// every sample, and consecutive output samples differ by at most `π`.
pub fn unwrap(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut turns = 0.0_f64;
    for (k, &x) in raw.iter().enumerate() {
        if k > 0 {
            let step = x - raw[k - 1];
            turns -= (step / TWO_PI).round();
        }
        out.push(x + turns * TWO_PI);
    }
    out
}

pub fn unwrap_phase(raw: &RealSeries) -> RealSeries {
    RealSeries {
        grid: raw.grid,
        values: unwrap(&raw.values),
    }
}

/// `f′` at interior node `k`: fourth-order central stencil where the two
/// neighbours on each side exist, second-order one-sided at `k = 1` and
/// `k = n − 2`.
fn node_derivative(f: &[f64], k: usize, h: f64) -> f64 {
    let n = f.len();
    debug_assert!(k >= 1 && k + 2 <= n);
    if k >= 2 && k + 2 < n {
        (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h)
    } else if k == 1 {
        (-3.0 * f[1] + 4.0 * f[2] - f[3]) / (2.0 * h)
    } else {
        (3.0 * f[k] - 4.0 * f[k - 1] + f[k - 2]) / (2.0 * h)
    }
}

/// Cubic Lagrange interpolant through the four nodes around `pos`.
/// Returns `(p(pos), p′(pos))` in sample units (derivative per sample).
fn cubic_local(f: &[f64], pos: f64) -> (usize, [f64; 4]) {
    let n = f.len();
    let j0 = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    (j0, [f[j0], f[j0 + 1], f[j0 + 2], f[j0 + 3]])
}

fn cubic_value(nodes: &[f64; 4], t: f64) -> f64 {
    // t measured from the first node, nodes at 0, 1, 2, 3
    let [y0, y1, y2, y3] = *nodes;
    let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3
}

fn cubic_slope(nodes: &[f64; 4], t: f64) -> f64 {
    let [y0, y1, y2, y3] = *nodes;
    let d0 = -(3.0 * t * t - 12.0 * t + 11.0) / 6.0;
    let d1 = (3.0 * t * t - 10.0 * t + 6.0) / 2.0;
    let d2 = -(3.0 * t * t - 8.0 * t + 3.0) / 2.0;
    let d3 = (3.0 * t * t - 6.0 * t + 2.0) / 6.0;
    y0 * d0 + y1 * d1 + y2 * d2 + y3 * d3
}

/// Tolerance, in samples, for treating `omega` as lying on a grid node.
const NODE_TOLERANCE: f64 = 1e-9;

/// Principal value of `∫ f(Ω)/(Ω² − ω²) dΩ` over the band of `f`'s grid.
///
/// `omega` must sit strictly inside the band and at least one grid spacing
/// away from either edge. Off-node values of `omega` use a local cubic
/// interpolant for `f(ω)` and for the subtracted integrand at the two
/// bracketing nodes.
pub fn pv_kernel_integral(f: &RealSeries, omega: f64) -> Result<f64> {
    let grid = f.grid();
    let (w1, w2) = (grid.omega_min(), grid.omega_max());
    if !(omega > w1 && omega < w2) {
        return Err(Error::OutsideBand {
            omega,
            omega_min: w1,
            omega_max: w2,
        });
    }
    let n = grid.count();
    let h = grid.spacing();
    let last = (n - 1) as f64;
    let pos = grid.position(omega);
    if pos < 1.0 - NODE_TOLERANCE || pos > last - 1.0 + NODE_TOLERANCE {
        return Err(Error::EndpointProximity { omega });
    }
    let values = f.values();
    let nearest = pos.round();

    let mut sum = 0.0;
    let f_at;
    let omega_eval;
    if (pos - nearest).abs() <= NODE_TOLERANCE {
        let k = nearest as usize;
        omega_eval = grid.omega(k);
        f_at = values[k];
        for (j, &fj) in values.iter().enumerate() {
            let g = if j == k {
                node_derivative(values, k, h) / (2.0 * omega_eval)
            } else {
                let dist = (j as f64 - k as f64) * h;
                (fj - f_at) / (dist * (grid.omega(j) + omega_eval))
            };
            sum += if j == 0 || j == n - 1 { 0.5 * g } else { g };
        }
        return Ok(h * sum + f_at * log_term(w1, w2, omega_eval, k as f64 * h, last * h - k as f64 * h));
    }

    omega_eval = omega;
    let (j0, nodes) = cubic_local(values, pos);
    f_at = cubic_value(&nodes, pos - j0 as f64);
    for (j, &fj) in values.iter().enumerate() {
        let offset = j as f64 - pos;
        let g = if offset.abs() < 1.0 {
            // divided difference through the local cubic, taken at the midpoint
            let slope = cubic_slope(&nodes, 0.5 * (pos + j as f64) - j0 as f64) / h;
            slope / (grid.omega(j) + omega_eval)
        } else {
            (fj - f_at) / (offset * h * (grid.omega(j) + omega_eval))
        };
        sum += if j == 0 || j == n - 1 { 0.5 * g } else { g };
    }
    Ok(h * sum + f_at * log_term(w1, w2, omega_eval, pos * h, (last - pos) * h))
}

/// `(1/2ω) ln|((ω₂−ω)(ω₁+ω)) / ((ω₂+ω)(ω₁−ω))|`, the principal value of the
/// kernel integral of a constant. The edge distances are passed separately to
/// keep them exact.
fn log_term(w1: f64, w2: f64, omega: f64, from_low: f64, to_high: f64) -> f64 {
    ((to_high * (w1 + omega)) / ((w2 + omega) * from_low)).abs().ln() / (2.0 * omega)
}
