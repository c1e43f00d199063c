use std::f64::consts::PI;
use std::fmt::Write;

use dlab_core::kk::{self, Classification, KkOptions};
use dlab_core::model::{
    self, group_delay, half_waveplate_frequencies, magnitude_h, mode_phase_slope,
    relativistic_front_time, transfer_zeros, zero_orders_for_band, Mode, SPEED_OF_LIGHT,
    ZERO_TRANSMISSION,
};
use dlab_core::pulse::{self, PulseSpec};

use crate::config::{FrontSetting, RunConfig};
use crate::plot::PlotKind;
use crate::CliError;

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub csv: String,
    pub report: String,
    pub plot: PlotKind,
    /// The run completed but its physical check did not pass.
    pub check_failed: bool,
}

/// `{:.16e}`, or `nan` for an undefined value.
pub fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.16e}"),
        _ => "nan".to_string(),
    }
}

fn ghz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e9)
}

fn describe(run: &RunConfig, out: &mut String) {
    let s = &run.system;
    let _ = writeln!(
        out,
        "system: d = {} m, air path = {} m, theta = {:.4} deg, beta = {:.4} deg",
        s.thickness(),
        s.air_path(),
        s.theta().to_degrees(),
        s.beta().to_degrees()
    );
    let _ = writeln!(
        out,
        "band: {:.6}-{:.6} GHz, {} points",
        ghz(run.grid.omega_min()),
        ghz(run.grid.omega_max()),
        run.grid.count()
    );
}

fn in_band_dips(run: &RunConfig) -> Vec<f64> {
    half_waveplate_frequencies(&run.system, &run.grid, zero_orders_for_band(&run.system, &run.grid))
        .roots
        .iter()
        .map(|r| r.omega)
        .collect()
}

pub fn sweep(run: &RunConfig) -> Result<Output, CliError> {
    let s = &run.system;
    let mut csv = String::from("frequency_hz,magnitude,phase_rad,group_delay_s\n");
    let mut min = (f64::INFINITY, 0.0);
    let mut fastest = (f64::INFINITY, 0.0);
    for w in run.grid.omegas() {
        let mag = magnitude_h(s, w);
        let defined = mag > ZERO_TRANSMISSION;
        let tau = group_delay(s, w).seconds;
        if mag < min.0 {
            min = (mag, w);
        }
        if defined && tau < fastest.0 {
            fastest = (tau, w);
        }
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            num(Some(w / (2.0 * PI))),
            num(Some(mag)),
            num(defined.then(|| model::absolute_phase(s, w))),
            num(defined.then_some(tau))
        );
    }
    let mut report = String::from("sweep\n");
    describe(run, &mut report);
    for w in in_band_dips(run) {
        let _ = writeln!(report, "half-waveplate frequency: {:.9} GHz", ghz(w));
    }
    let _ = writeln!(
        report,
        "minimum |H| = {:.6e} at {:.6} GHz",
        min.0,
        ghz(min.1)
    );
    if fastest.0.is_finite() {
        let vacuum = relativistic_front_time(s);
        let _ = writeln!(
            report,
            "minimum group delay = {:.6e} s at {:.6} GHz (vacuum transit {:.6e} s){}",
            fastest.0,
            ghz(fastest.1),
            vacuum,
            if fastest.0 < vacuum { ", superluminal" } else { "" }
        );
    }
    Ok(Output {
        csv,
        report,
        plot: PlotKind::Sweep,
        check_failed: false,
    })
}

pub fn kk(run: &RunConfig) -> Result<Output, CliError> {
    let options = KkOptions {
        interior_fraction: run.kk.interior_fraction,
        exclusion_halfwidth: run.kk.exclusion_halfwidth,
        correct: run.kk.correct,
    };
    let cmp = kk::reconstruct_model_phase(&run.system, &run.grid, options)?;
    let mut csv = String::from("frequency_hz,phase_model_rad,phase_kk_rad,residual_rad\n");
    for (k, w) in run.grid.omegas().into_iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            num(Some(w / (2.0 * PI))),
            num(Some(cmp.model_phase.values()[k])),
            num(cmp.reconstruction.phase().get(k)),
            num(cmp.residual.get(k))
        );
    }
    let mut report = String::from("kk\n");
    describe(run, &mut report);
    let _ = writeln!(report, "classification: {}", cmp.classification.as_str());
    let _ = writeln!(
        report,
        "fitted d0 = {:.9e} s ({:.6} d/c), offset = {:.6} rad, {} fit points",
        cmp.fit.d0,
        cmp.fit.d0 * SPEED_OF_LIGHT / run.system.thickness(),
        cmp.fit.offset,
        cmp.fit.points_used
    );
    let (lo, hi) = cmp.band.interior_range();
    let _ = writeln!(
        report,
        "max |residual| over interior {:.6}-{:.6} GHz = {:.6} rad",
        ghz(lo),
        ghz(hi),
        cmp.max_interior_residual()
    );
    let ex = cmp.exclusion;
    let _ = writeln!(
        report,
        "max |residual| within {:.6} GHz of {:.6} GHz = {:.6} rad",
        ghz(ex.halfwidth),
        ghz(ex.center),
        cmp.max_residual_near(ex.center, ex.halfwidth)
    );
    if cmp.reconstruction.correction_applied() {
        for z in cmp.reconstruction.zeros_used() {
            let _ = writeln!(
                report,
                "all-pass zero n = {}: {:.9} {:+.9}i GHz",
                z.n,
                ghz(z.omega.re),
                ghz(z.omega.im)
            );
        }
    } else if cmp.classification == Classification::NonMinimumPhase {
        let _ = writeln!(
            report,
            "upper-half-plane zeros present; the magnitude alone does not determine this phase (see --correct)"
        );
    }
    Ok(Output {
        csv,
        report,
        plot: PlotKind::Kk,
        check_failed: false,
    })
}

pub fn zeros(run: &RunConfig) -> Result<Output, CliError> {
    let s = &run.system;
    let g = &run.grid;
    let found = transfer_zeros(s, g, zero_orders_for_band(s, g))?;
    let boundary = kk::is_boundary(s);
    let mut csv = String::from("n,re_hz,im_hz,half_plane,residual\n");
    let in_band: Vec<_> = found.with_real_part_in(g.omega_min(), g.omega_max()).collect();
    for z in &in_band {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            z.n,
            num(Some(z.omega.re / (2.0 * PI))),
            num(Some(z.omega.im / (2.0 * PI))),
            if boundary { "boundary" } else { z.half_plane.as_str() },
            num(Some(z.residual))
        );
    }
    let mut report = String::from("zeros\n");
    describe(run, &mut report);
    let class = kk::classify_minimum_phase(s, g)?;
    let _ = writeln!(
        report,
        "{} zeros with real part in band; classification: {}",
        in_band.len(),
        class.as_str()
    );
    for r in &found.rejected {
        let _ = writeln!(report, "warning: branch n = {} rejected: {}", r.n, r.reason);
    }
    Ok(Output {
        csv,
        report,
        plot: PlotKind::Zeros,
        check_failed: false,
    })
}

pub fn pulse(run: &RunConfig) -> Result<Output, CliError> {
    let s = &run.system;
    let p = &run.pulse;
    let carrier = match p.carrier {
        Some(c) => c,
        None => in_band_dips(run)
            .into_iter()
            .min_by(|a, b| {
                (a - run.grid.center())
                    .abs()
                    .total_cmp(&(b - run.grid.center()).abs())
            })
            .unwrap_or_else(|| run.grid.center()),
    };
    let mut spec = PulseSpec::new(carrier, p.sigma, p.window, p.samples)?;
    spec = match p.front {
        FrontSetting::None => spec,
        FrontSetting::Default => spec.with_front(spec.center() - 4.0 * p.sigma)?,
        FrontSetting::At(t) => spec.with_front(t)?,
    };
    let input = pulse::synth_pulse(&spec)?;
    let result = pulse::propagate(&input, s, &run.grid)?;

    let mut csv = String::from("time_s,input_envelope,output_envelope\n");
    for (j, t) in result.times().into_iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{}",
            num(Some(t)),
            num(Some(result.input_envelope[j])),
            num(Some(result.output_envelope[j]))
        );
    }

    let tm = mode_phase_slope(s, Mode::Tm, carrier);
    let mut report = String::from("pulse\n");
    describe(run, &mut report);
    let _ = writeln!(
        report,
        "carrier = {:.9} GHz, sigma = {:.6e} s, window = {:.6e} s, {} samples",
        ghz(carrier),
        p.sigma,
        p.window,
        p.samples
    );
    let _ = writeln!(report, "input peak_time = {:.9e} s", result.input_peak_time);
    let _ = writeln!(report, "peak_time = {:.9e} s", result.peak_time);
    let _ = writeln!(report, "measured delay = {:.9e} s", result.measured_delay());
    let _ = writeln!(
        report,
        "predicted_group_delay = {:.9e} s",
        result.predicted_group_delay
    );
    let _ = writeln!(
        report,
        "TM-only delay = {tm:.9e} s, peak delay relative to TM = {:.9e} s",
        result.measured_delay() - tm
    );
    let _ = writeln!(
        report,
        "vacuum transit = {:.9e} s",
        relativistic_front_time(s)
    );
    let _ = writeln!(report, "band leakage = {:.3e}", result.band_leakage);
    for w in &result.warnings {
        let _ = writeln!(report, "warning: {w}");
    }
    let mut check_failed = false;
    match pulse::front_causality_check(&result, p.causality_threshold) {
        Ok(c) => {
            check_failed = !c.pass;
            let _ = writeln!(
                report,
                "pre_front_energy_ratio = {:.3e}, threshold {:.1e}: causality {}",
                c.ratio,
                c.threshold,
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        Err(_) => {
            let _ = writeln!(report, "no front set; causality not checked");
        }
    }
    Ok(Output {
        csv,
        report,
        plot: PlotKind::Pulse,
        check_failed,
    })
}
