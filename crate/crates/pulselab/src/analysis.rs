//! Quantitative analysis of simulated trajectories: Fourier harmonics and
//! phase locking, per-pulse statistics, and the power-law extrapolation of
//! the pulse area to its fast-limit value.

use serde::Serialize;

use crate::dde::{self, HistoryTrajectory};
use crate::error::{Error, Result};
use crate::exec::{run_indexed, ExecMode};
use crate::models::ModelInstance;

/// Fourier data of one period in the cosine convention
/// `A(t) = A0 + sum A_n cos(2 pi n t / tau + phi_n)`, amplitudes
/// nonnegative, phases in `(-pi, pi]`.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicSet {
    pub period: f64,
    pub mean: f64,
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
    /// Mean square of the analyzed window, for Parseval checks.
    pub mean_square: f64,
    /// Absolute time of the window start (a pulse peak).
    pub window_start: f64,
}

impl HarmonicSet {
    pub fn n_harmonics(&self) -> usize {
        self.amplitudes.len()
    }

    /// Relative gap in the Parseval identity
    /// `mean_square = A0^2 + sum A_n^2 / 2`.
    pub fn parseval_gap(&self) -> f64 {
        let sum: f64 = self.mean * self.mean
            + self.amplitudes.iter().map(|a| 0.5 * a * a).sum::<f64>();
        (self.mean_square - sum).abs() / self.mean_square.max(1e-300)
    }

    /// Synthesis of the truncated series at time `t` past the window start.
    pub fn synthesize(&self, t: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI / self.period;
        let mut v = self.mean;
        for (n, (a, phi)) in self.amplitudes.iter().zip(&self.phases).enumerate() {
            v += a * ((n as f64 + 1.0) * w * t + phi).cos();
        }
        v
    }

    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "n,amplitude,phase")?;
        for (n, (a, phi)) in self.amplitudes.iter().zip(&self.phases).enumerate() {
            writeln!(
                w,
                "{},{},{}",
                n + 1,
                crate::io::fmt_sig(*a),
                crate::io::fmt_sig(*phi)
            )?;
        }
        Ok(())
    }
}

/// Fourier harmonics over exactly one measured period starting at a pulse
/// peak, by the periodic trapezoid rule on the dense interpolant.
pub fn fourier_harmonics(traj: &HistoryTrajectory, component: usize, n_harmonics: usize) -> Result<HarmonicSet> {
    let est = dde::estimate_period(traj, component)?;
    let tau = est.period;
    let peaks = dde::peak_train(traj, component);
    let margin = traj.step();
    let start = peaks
        .iter()
        .rev()
        .map(|(t, _)| *t)
        .find(|t| t + tau <= traj.t1() - margin)
        .ok_or(Error::TooFewPeaks { found: peaks.len(), needed: 5 })?;

    let m = ((tau / traj.step()).round() as usize).max(16 * n_harmonics).max(256);
    let mut samples = Vec::with_capacity(m);
    for j in 0..m {
        samples.push(traj.eval_component(component, start + tau * j as f64 / m as f64)?);
    }
    let mut h = harmonics_of_samples(&samples, tau, n_harmonics);
    h.window_start = start;
    Ok(h)
}

/// Harmonics of one uniformly sampled period (endpoint excluded).
pub fn harmonics_of_samples(samples: &[f64], period: f64, n_harmonics: usize) -> HarmonicSet {
    let m = samples.len();
    let mean = samples.iter().sum::<f64>() / m as f64;
    let mean_square = samples.iter().map(|v| v * v).sum::<f64>() / m as f64;
    let mut amplitudes = Vec::with_capacity(n_harmonics);
    let mut phases = Vec::with_capacity(n_harmonics);
    for n in 1..=n_harmonics {
        let mut ac = 0.0;
        let mut bs = 0.0;
        for (j, v) in samples.iter().enumerate() {
            let arg = 2.0 * std::f64::consts::PI * n as f64 * j as f64 / m as f64;
            ac += v * arg.cos();
            bs += v * arg.sin();
        }
        ac *= 2.0 / m as f64;
        bs *= 2.0 / m as f64;
        amplitudes.push(ac.hypot(bs));
        phases.push((-bs).atan2(ac));
    }
    HarmonicSet { period, mean, amplitudes, phases, mean_square, window_start: 0.0 }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseAlignment {
    /// `max_n |phi_n|` after the time shift that zeroes `phi_1`.
    pub max_phase_deviation: f64,
    /// Phases after the shift, wrapped to `(-pi, pi]`.
    pub aligned_phases: Vec<f64>,
    /// `A_n / A_1`.
    pub amplitude_ratios: Vec<f64>,
}

fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x % two_pi;
    if y > std::f64::consts::PI {
        y -= two_pi;
    } else if y <= -std::f64::consts::PI {
        y += two_pi;
    }
    y
}

/// Chooses the time shift that zeroes the first phase and reports how far
/// the remaining phases sit from zero, plus the amplitude growth profile.
///
/// Harmonics below `1e-9 A_1` carry no phase information (their phases are
/// quadrature noise) and are left out of the deviation.
pub fn phase_alignment(h: &HarmonicSet) -> Result<PhaseAlignment> {
    if h.n_harmonics() < 5 {
        return Err(Error::Invalid("need at least 5 harmonics for phase alignment".into()));
    }
    let phi1 = h.phases[0];
    let a1 = h.amplitudes[0];
    if a1 == 0.0 {
        return Err(Error::Invalid("vanishing fundamental amplitude".into()));
    }
    let aligned: Vec<f64> = h
        .phases
        .iter()
        .enumerate()
        .map(|(i, phi)| wrap_angle(phi - (i as f64 + 1.0) * phi1))
        .collect();
    let max_phase_deviation = aligned
        .iter()
        .zip(&h.amplitudes)
        .filter(|(_, a)| **a > 1e-9 * a1)
        .map(|(p, _)| p.abs())
        .fold(0.0, f64::max);
    let amplitude_ratios = h.amplitudes.iter().map(|a| a / a1).collect();
    Ok(PhaseAlignment { max_phase_deviation, aligned_phases: aligned, amplitude_ratios })
}

/// Power-law fit `p(gamma) = pstar_hat + b gamma^(-beta)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerLawFit {
    pub pstar_hat: f64,
    pub b: f64,
    pub beta: f64,
    /// L2 norm of the fit residuals.
    pub residual: f64,
}

fn linear_fit_at_beta(points: &[(f64, f64)], beta: f64) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (g, p) in points {
        let x = g.powf(-beta);
        sx += x;
        sy += p;
        sxx += x * x;
        sxy += x * p;
    }
    let det = n * sxx - sx * sx;
    let b = (n * sxy - sx * sy) / det;
    let c = (sy - b * sx) / n;
    let mut ss = 0.0;
    for (g, p) in points {
        let r = p - c - b * g.powf(-beta);
        ss += r * r;
    }
    (c, b, ss)
}

/// Grid search over the exponent with linear least squares for the other
/// two parameters, refined by golden-section around the grid minimizer.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} points, need at least 4", points.len())));
    }
    let mut gammas: Vec<f64> = points.iter().map(|(g, _)| *g).collect();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    if gammas.len() < 3 {
        return Err(Error::DegenerateFit("need at least 3 distinct gamma values".into()));
    }

    let (mut best_beta, mut best_ss) = (f64::NAN, f64::INFINITY);
    let mut beta = 0.25;
    while beta <= 3.0 + 1e-12 {
        let (_, _, ss) = linear_fit_at_beta(points, beta);
        if ss < best_ss {
            best_ss = ss;
            best_beta = beta;
        }
        beta += 1e-3;
    }
    // Golden-section refinement on the bracketing grid cell.
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ((best_beta - 1e-3).max(0.25), (best_beta + 1e-3).min(3.0));
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = linear_fit_at_beta(points, x1).2;
    let mut f2 = linear_fit_at_beta(points, x2).2;
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = linear_fit_at_beta(points, x1).2;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = linear_fit_at_beta(points, x2).2;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let beta = 0.5 * (lo + hi);
    let (pstar_hat, b, ss) = linear_fit_at_beta(points, beta);
    Ok(PowerLawFit { pstar_hat, b, beta, residual: ss.sqrt() })
}

/// Per-pulse statistics of a settled pulsating trajectory, averaged over
/// all full inter-peak windows in the analysis tail.
#[derive(Debug, Clone, Serialize)]
pub struct PulseMetrics {
    pub amplitude: f64,
    pub fwhm: f64,
    /// Max of the pulse component between pulses.
    pub floor: f64,
    /// Min of the competitor during the pulse (three-species models only).
    pub q_collapse: Option<f64>,
    /// Median of the competitor between pulses.
    pub q_plateau: Option<f64>,
    pub period: f64,
    pub pulse_count: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn half_crossing(traj: &HistoryTrajectory, component: usize, half: f64, t_peak: f64, dir: f64) -> Result<f64> {
    let h = traj.step();
    let mut t = t_peak;
    let limit = if dir > 0.0 { traj.t1() } else { traj.t0() };
    loop {
        let t_next = t + dir * h;
        if (dir > 0.0 && t_next > limit) || (dir < 0.0 && t_next < limit) {
            return Err(Error::Invalid("half-maximum crossing not found".into()));
        }
        if traj.eval_component(component, t_next)? < half {
            // Bisect inside [t, t_next] (or reversed) on the interpolant.
            let (mut a, mut b) = (t, t_next);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if traj.eval_component(component, mid)? >= half {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        t = t_next;
    }
}

pub fn pulse_metrics(traj: &HistoryTrajectory, component: usize) -> Result<PulseMetrics> {
    let est = dde::estimate_period(traj, component)?;
    // Keep peaks whose neighborhood (half a period each side) is stored, so
    // the half-maximum flanks never run off the window edges.
    let peaks: Vec<(f64, f64)> = dde::peak_train(traj, component)
        .into_iter()
        .filter(|(t, _)| *t - 0.5 * est.period >= traj.t0() && *t + 0.5 * est.period <= traj.t1())
        .collect();
    if peaks.len() < 2 {
        return Err(Error::TooFewPeaks { found: peaks.len(), needed: 2 });
    }
    let has_q = traj.dim() == 3;

    let mut amp = 0.0;
    let mut fwhm = 0.0;
    let mut floor: f64 = f64::NEG_INFINITY;
    let mut collapse: f64 = f64::INFINITY;
    let mut plateau_samples = Vec::new();
    let n_windows = peaks.len() - 1;
    for w in peaks.windows(2) {
        let (t0, height) = w[0];
        let t1 = w[1].0;
        amp += height;
        let half = 0.5 * height;
        let left = half_crossing(traj, component, half, t0, -1.0)?;
        let right = half_crossing(traj, component, half, t0, 1.0)?;
        fwhm += right - left;

        // Inter-pulse region: the middle of the window, away from both cores.
        let margin = 0.2 * (t1 - t0);
        let (a, b) = (t0 + margin, t1 - margin);
        let i0 = ((a - traj.t0()) / traj.step()).ceil() as usize;
        let i1 = ((b - traj.t0()) / traj.step()).floor() as usize;
        for i in i0..=i1 {
            floor = floor.max(traj.component(component)[i]);
            if has_q {
                plateau_samples.push(traj.component(1)[i]);
            }
        }
        if has_q {
            let j0 = ((t0 - traj.t0()) / traj.step()).floor() as usize;
            let j1 = (((t1 - traj.t0()) / traj.step()).ceil() as usize).min(traj.len() - 1);
            let mut i_min = j0;
            for i in j0..=j1 {
                if traj.component(1)[i] < traj.component(1)[i_min] {
                    i_min = i;
                }
            }
            // The dip is a cusp narrower than the grid; refine its bottom on
            // the dense interpolant around the minimal sample.
            let around = traj.time(i_min);
            for j in 0..=400 {
                let t = around + traj.step() * (j as f64 / 100.0 - 2.0);
                if t >= traj.t0() && t <= traj.t1() {
                    collapse = collapse.min(traj.eval_component(1, t)?.max(0.0));
                }
            }
        }
    }
    Ok(PulseMetrics {
        amplitude: amp / n_windows as f64,
        fwhm: fwhm / n_windows as f64,
        floor,
        q_collapse: has_q.then_some(collapse),
        q_plateau: has_q.then(|| median(&mut plateau_samples)),
        period: est.period,
        pulse_count: peaks.len(),
    })
}

/// One point of the gamma sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub gamma: f64,
    /// Integral of the pulse component over one period (peak to peak).
    pub p: f64,
    pub period: f64,
    pub peak: f64,
    pub fwhm: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub transient_periods: f64,
    pub record_periods: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        // Pulse-seeded runs lock within tens of periods at moderate gamma;
        // the largest sweep points need on the order of a hundred.
        SweepConfig { transient_periods: 100.0, record_periods: 10.0 }
    }
}

/// Simulates the model over a list of gamma values (whole runs in parallel)
/// and measures the per-period area, period, peak height and pulse width.
pub fn gamma_sweep(
    base: &ModelInstance,
    gammas: &[f64],
    cfg: &SweepConfig,
    mode: ExecMode,
) -> Result<Vec<SweepPoint>> {
    let delay = crate::dde::DelaySystem::delay(base);
    let results = run_indexed(mode, gammas.len(), |i| -> Result<SweepPoint> {
        let gamma = gammas[i];
        let model = base.with_gamma(gamma);
        let config = crate::dde::IntegratorConfig::new(
            crate::dde::IntegratorConfig::step_bound(delay, gamma),
            cfg.transient_periods * delay,
            cfg.record_periods * delay,
        );
        let traj = dde::integrate_pulsating(&model, &config, true)?;
        let metrics = pulse_metrics(&traj, 0)?;
        let peaks = dde::peak_train(&traj, 0);
        let (w0, w1) = (peaks[peaks.len() - 2].0, peaks[peaks.len() - 1].0);
        let p = dde::integrate_component_over_period(&traj, 0, (w0, w1))?;
        Ok(SweepPoint { gamma, p, period: metrics.period, peak: metrics.amplitude, fwhm: metrics.fwhm })
    });
    results.into_iter().collect()
}

pub fn write_sweep_csv<W: std::io::Write>(w: &mut W, points: &[SweepPoint]) -> std::io::Result<()> {
    writeln!(w, "gamma,p,period,peak,fwhm")?;
    for pt in points {
        crate::io::write_row(w, &[pt.gamma, pt.p, pt.period, pt.peak, pt.fwhm])?;
    }
    Ok(())
}
