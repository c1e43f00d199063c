//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dlab_core::kk::{self, KkBand, KkOptions, DEFAULT_INTERIOR_FRACTION};
use dlab_core::model::{
    self, group_delay, half_waveplate_frequencies, magnitude_h, mode_phase_slope,
    transfer_from_phases, transfer_zeros, zero_orders_for_band, HalfPlane, Mode, SlabCalibration,
    SystemConfig, SPEED_OF_LIGHT,
};
use dlab_core::numerics::{unwrap_phase, FrequencyGrid, RealSeries};
use dlab_core::pulse::{self, PulseSpec, DEFAULT_CAUSALITY_THRESHOLD};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const F_M: f64 = 16.75e9;
const W_M: f64 = 2.0 * PI * F_M;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn paper(beta_deg: f64) -> SystemConfig {
    SlabCalibration::default()
        .config(FRAC_PI_4, beta_deg.to_radians())
        .expect("calibrated slab")
}

fn band(points: usize) -> FrequencyGrid {
    FrequencyGrid::from_hz(13e9, 20e9, points).expect("band grid")
}

fn within_budget(elapsed: Duration, budget: f64) -> bool {
    elapsed.as_secs_f64() < budget
}

fn magnitude_phase_asymmetry() -> Outcome {
    let start = Instant::now();
    let grid = band(8192);
    let (c40, c50) = (paper(40.0), paper(50.0));
    let m40 = model::magnitude_series(&c40, &grid).unwrap();
    let m50 = model::magnitude_series(&c50, &grid).unwrap();
    let mag_diff = m40
        .values()
        .iter()
        .zip(m50.values())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    let p40 = unwrap_phase(&model::arg_h(&c40, &grid).unwrap());
    let p50 = unwrap_phase(&model::arg_h(&c50, &grid).unwrap());
    let phase_diff = grid
        .omegas()
        .iter()
        .enumerate()
        .filter(|(_, &w)| (w - W_M).abs() <= 0.05 * W_M)
        .map(|(k, _)| (p40.values()[k] - p50.values()[k]).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        mag_diff <= 1e-12 && phase_diff > FRAC_PI_2 && within_budget(elapsed, 1.0),
        format!(
            "max |Δ|H|| = {mag_diff:.2e}, max |Δ arg H| near ω_m = {phase_diff:.4} rad, {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn half_waveplate_placement() -> Outcome {
    let grid = band(8192);
    let search = half_waveplate_frequencies(&paper(40.0), &grid, 0..=0);
    match search.roots.as_slice() {
        [root] => {
            let f = root.omega / (2.0 * PI);
            outcome(
                (f - F_M).abs() < 1e3 && (16.5e9..=17e9).contains(&f),
                format!("f_m = {f:.3} Hz, offset {:.3e} Hz", f - F_M),
            )
        }
        roots => outcome(false, format!("expected one root, found {}", roots.len())),
    }
}

fn epsilon_expansion() -> Outcome {
    let eps = [0.04, 0.02, 0.01];
    let mut detail = Vec::new();
    let mut pass = true;
    let mut errors = Vec::new();
    for &e in &eps {
        let lower = paper(45.0).with_beta(FRAC_PI_4 - e).unwrap();
        errors.push((magnitude_h(&lower, W_M) - e).abs());
        for cfg in [lower, paper(45.0).with_beta(FRAC_PI_4 + e).unwrap()] {
            let pred = model::epsilon_expansion(&cfg, W_M).unwrap();
            let tau = group_delay(&cfg, W_M).seconds;
            let rel = (tau - pred.group_delay).abs() / pred.group_delay.abs();
            pass &= rel < 0.01;
            detail.push(format!("τ rel err(ε={e}, {:+}) = {rel:.2e}", pred.sign));
        }
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        pass &= (4.0..=16.0).contains(&ratio);
        detail.push(format!("|H| error ratio = {ratio:.3}"));
    }
    outcome(pass, detail.join(", "))
}

fn group_delay_oracle() -> Outcome {
    let grid = band(4096);
    let cfg = paper(40.0);
    let phase = unwrap_phase(&model::arg_h(&cfg, &grid).unwrap());
    let h = grid.spacing();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 1..grid.count() - 1 {
        let w = grid.omega(k);
        if (w - W_M).abs() <= 0.1 * W_M {
            continue;
        }
        let fd = (phase.values()[k + 1] - phase.values()[k - 1]) / (2.0 * h);
        let tau = group_delay(&cfg, w).seconds;
        worst = worst.max((fd - tau).abs() / tau.abs());
        checked += 1;
    }
    outcome(
        worst < 1e-6,
        format!("max relative error {worst:.2e} over {checked} points"),
    )
}

fn zero_classification() -> Outcome {
    let grid = band(2048);
    let mut pass = true;
    let mut detail = Vec::new();
    for (beta, expected) in [
        (30.0, HalfPlane::Lower),
        (40.0, HalfPlane::Lower),
        (44.0, HalfPlane::Lower),
        (46.0, HalfPlane::Upper),
        (50.0, HalfPlane::Upper),
        (60.0, HalfPlane::Upper),
    ] {
        let cfg = paper(beta);
        let found = transfer_zeros(&cfg, &grid, zero_orders_for_band(&cfg, &grid)).unwrap();
        let in_band: Vec<_> = found
            .with_real_part_in(grid.omega_min(), grid.omega_max())
            .collect();
        let ok = !in_band.is_empty()
            && found.rejected.is_empty()
            && in_band.iter().all(|z| z.half_plane == expected);
        let worst = found.zeros.iter().map(|z| z.residual).fold(0.0, f64::max);
        pass &= ok && worst < model::ZERO_RESIDUAL_LIMIT;
        detail.push(format!(
            "β={beta}°: {} in band {}, residual {worst:.1e}",
            in_band.len(),
            expected.as_str()
        ));
    }
    outcome(pass, detail.join("; "))
}

fn lorentz(w: f64) -> (f64, f64) {
    let (w0, g) = (1.0, 0.1);
    let d = (w0 * w0 - w * w).powi(2) + g * g * w * w;
    ((w0 * w0 - w * w) / d, g * w / d)
}

fn kk_analytic_pair() -> Outcome {
    let start = Instant::now();
    let grid = FrequencyGrid::new(0.1, 10.0, 16384).unwrap();
    let band = KkBand::new(grid, DEFAULT_INTERIOR_FRACTION).unwrap();
    let re = RealSeries::from_fn(grid, |w| lorentz(w).0).unwrap();
    let im = RealSeries::from_fn(grid, |w| lorentz(w).1).unwrap();
    let scale = |f: fn(f64) -> f64| grid.omegas().iter().map(|&w| f(w).abs()).fold(0.0, f64::max);
    let (re_scale, im_scale) = (scale(|w| lorentz(w).0), scale(|w| lorentz(w).1));

    let interior_err = |series: &dlab_core::numerics::PartialSeries, exact: fn(f64) -> f64| {
        series
            .evaluated()
            .filter(|&(_, w, _)| band.is_interior(w))
            .map(|(_, w, v)| (v - exact(w)).abs())
            .fold(0.0, f64::max)
    };
    let im_kk = kk::kk_im_from_re(&re).unwrap();
    let re_kk = kk::kk_re_from_im(&im).unwrap();
    let round_trip = kk::kk_re_from_im(&im_kk.evaluated_subseries().unwrap()).unwrap();
    let err_im = interior_err(&im_kk, |w| lorentz(w).1) / im_scale;
    let err_re = interior_err(&re_kk, |w| lorentz(w).0) / re_scale;
    let err_rt = interior_err(&round_trip, |w| lorentz(w).0) / re_scale;
    let elapsed = start.elapsed();
    outcome(
        err_rt < 0.02 && err_re < 0.02 && err_im < 0.02 && within_budget(elapsed, 30.0),
        format!(
            "round trip {:.3}%, Re←Im {:.3}%, Im←Re {:.3}% (of band max), {:.2} s",
            100.0 * err_rt,
            100.0 * err_re,
            100.0 * err_im,
            elapsed.as_secs_f64()
        ),
    )
}

fn amplitude_phase_reconstruction() -> Outcome {
    let grid = band(4096);
    let run = |beta: f64, correct: bool| {
        kk::reconstruct_model_phase(
            &paper(beta),
            &grid,
            KkOptions {
                correct,
                ..KkOptions::default()
            },
        )
        .unwrap()
    };
    let r40 = run(40.0, false);
    let r50 = run(50.0, false);
    let r50c = run(50.0, true);
    let same_mag = r40
        .reconstruction
        .magnitude()
        .values()
        .iter()
        .zip(r50.reconstruction.magnitude().values())
        .all(|(p, q)| (p - q).abs() <= 1e-12);
    let e40 = r40.max_interior_residual();
    let e50 = r50.max_residual_near(W_M, 0.05 * W_M);
    let e50c = r50c.max_interior_residual();
    outcome(
        same_mag && e40 < 0.05 && e50 > FRAC_PI_2 && e50c < 0.05,
        format!(
            "β=40° {} residual {e40:.4} rad (d₀ = {:.4}·d/c); β=50° {} uncorrected {e50:.3} rad, corrected {e50c:.4} rad ({} zeros)",
            r40.classification.as_str(),
            r40.fit.d0 * SPEED_OF_LIGHT / 0.2,
            r50.classification.as_str(),
            r50c.reconstruction.zeros_used().len()
        ),
    )
}

fn d0_fit_sanity() -> Outcome {
    let grid = band(4096);
    let cfg = paper(40.0).with_air_path(0.0).unwrap();
    let kb = KkBand::new(grid, DEFAULT_INTERIOR_FRACTION).unwrap();
    let mag = model::magnitude_series(&cfg, &grid).unwrap();
    let reference = model::absolute_phase_series(&cfg, &grid).unwrap();
    let fit = kk::fit_d0(&mag, &reference, &kb, 0.05 * W_M).unwrap();
    let target = 1.34 * cfg.thickness() / SPEED_OF_LIGHT;
    let rel = (fit.d0 - target) / target;
    outcome(
        rel.abs() < 0.05,
        format!(
            "d₀ = {:.4e} s = {:.4}·d/c, target 1.34·d/c, off by {:+.2}%",
            fit.d0,
            fit.d0 * SPEED_OF_LIGHT / cfg.thickness(),
            100.0 * rel
        ),
    )
}

fn pulse_causality() -> Outcome {
    let start = Instant::now();
    let cfg = paper(40.0);
    let sigma = 5e-9;
    let window = 200e-9;
    let spec = PulseSpec::new(W_M, sigma, window, 1 << 20)
        .and_then(|s| s.with_front(0.5 * window - 4.0 * sigma))
        .unwrap();
    let input = pulse::synth_pulse(&spec).unwrap();
    let result = pulse::propagate(&input, &cfg, &band(64)).unwrap();
    let report = pulse::front_causality_check(&result, DEFAULT_CAUSALITY_THRESHOLD).unwrap();
    let elapsed = start.elapsed();

    let tm = mode_phase_slope(&cfg, Mode::Tm, W_M);
    let measured = result.measured_delay() - tm;
    let predicted = result.predicted_group_delay - tm;
    let leading = model::epsilon_expansion(&cfg, W_M).unwrap().group_delay - tm;
    let rel = (measured - predicted).abs() / predicted.abs();
    outcome(
        rel < 0.02 && report.pass && within_budget(elapsed, 5.0),
        format!(
            "advance {:.4} ps vs predicted {:.4} ps ({:.2}%; leading order {:.4} ps), pre-front ratio {:.2e}, {:.2} s",
            measured * 1e12,
            predicted * 1e12,
            100.0 * rel,
            leading * 1e12,
            report.ratio,
            elapsed.as_secs_f64()
        ),
    )
}

fn energy_conservation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let theta = rng.random_range(0.0..PI);
        let beta = rng.random_range(0.0..PI);
        let dphi = rng.random_range(-4.0 * PI..4.0 * PI);
        let p = transfer_from_phases(theta, beta, dphi, 0.0).norm_sqr();
        let q = transfer_from_phases(theta, beta + FRAC_PI_2, dphi, 0.0).norm_sqr();
        worst = worst.max((p + q - 1.0).abs());
    }
    outcome(worst < 1e-12, format!("max ||H_β|² + |H_β+π/2|² − 1| = {worst:.2e}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("magnitude/phase asymmetry", magnitude_phase_asymmetry),
        ("half-waveplate placement", half_waveplate_placement),
        ("epsilon expansion", epsilon_expansion),
        ("group-delay oracle", group_delay_oracle),
        ("zero classification", zero_classification),
        ("K-K analytic pair", kk_analytic_pair),
        ("amplitude-phase reconstruction", amplitude_phase_reconstruction),
        ("d0 fit sanity", d0_fit_sanity),
        ("pulse causality", pulse_causality),
        ("energy conservation", energy_conservation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "AC{:<2} {} {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
