//! Fixed-step integration of retarded delay differential equations with a
//! single discrete delay, dense cubic-Hermite output, and the trace
//! primitives built on it (peaks, period, per-period integrals).
//!
//! The integrator is classical RK4 over the method of steps: the delayed
//! state at `t + c_i h - T` is read from the dense interpolant of the
//! already-computed history, which is always available because `h <= T`.
//! Runs are deterministic; two integrations with the same configuration
//! produce bit-identical trajectories.

use crate::error::{Error, Result};

/// A retarded system `y'(t) = f(t, y(t), y(t - T))` with one discrete delay.
pub trait DelaySystem: Sync {
    fn dim(&self) -> usize;
    fn delay(&self) -> f64;
    fn rhs(&self, t: f64, y: &[f64], y_delayed: &[f64], dydt: &mut [f64]);
}

const MAXD: usize = crate::models::MAX_DIM;

/// Integration settings. `transient + record` is the integrated span; the
/// transient is marked on the trajectory so analyses use only the tail.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub step: f64,
    pub transient: f64,
    pub record: f64,
    pub clamp_positive: bool,
}

impl IntegratorConfig {
    pub fn new(step: f64, transient: f64, record: f64) -> Self {
        IntegratorConfig { step, transient, record, clamp_positive: false }
    }

    /// Step bound `min(T/1000, 1/(50 gamma))` that resolves both the delay
    /// grid and the O(1/gamma) pulse width.
    pub fn step_bound(delay: f64, gamma: f64) -> f64 {
        (delay / 1000.0).min(1.0 / (50.0 * gamma))
    }

    /// Defaults for a model run: bound step, 50 delay periods of transient,
    /// 10 periods of analysis window.
    pub fn for_model(model: &crate::models::ModelInstance) -> Self {
        use crate::models::ModelInstance as M;
        let (delay, gamma) = match model {
            M::Prototype(p) | M::LogisticQ(p) | M::LogisticQG(p) => (p.delay, p.gamma),
            M::CompetingFast(p) => (p.delay, p.gamma),
            M::ReducedA(p) | M::ReducedB(p) => (p.delay, p.gamma),
        };
        IntegratorConfig::new(Self::step_bound(delay, gamma), 50.0 * delay, 10.0 * delay)
    }
}

/// Dense, interpolable record of a DDE run. Per component the node values
/// and node derivatives are stored; evaluation between nodes is cubic
/// Hermite, exact at the grid points and C1 across them.
#[derive(Debug, Clone)]
pub struct HistoryTrajectory {
    t0: f64,
    t1: f64,
    h: f64,
    analysis_start: f64,
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

impl HistoryTrajectory {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Number of grid nodes, `(t1 - t0)/h + 1`.
    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Start of the analysis window (end of the transient).
    pub fn analysis_start(&self) -> f64 {
        self.analysis_start
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.h * i as f64
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.values[c]
    }

    pub fn component_derivs(&self, c: usize) -> &[f64] {
        &self.derivs[c]
    }

    /// Builds a trajectory by sampling closures for values and derivatives;
    /// used for synthetic signals in analyses and tests.
    pub fn from_fn<F, D>(t0: f64, t1: f64, h: f64, dim: usize, f: F, df: D) -> Self
    where
        F: Fn(f64, usize) -> f64,
        D: Fn(f64, usize) -> f64,
    {
        let n = ((t1 - t0) / h).round() as usize;
        let mut values = vec![Vec::with_capacity(n + 1); dim];
        let mut derivs = vec![Vec::with_capacity(n + 1); dim];
        for i in 0..=n {
            let t = t0 + h * i as f64;
            for c in 0..dim {
                values[c].push(f(t, c));
                derivs[c].push(df(t, c));
            }
        }
        HistoryTrajectory { t0, t1: t0 + h * n as f64, h, analysis_start: t0, values, derivs }
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let n = self.len();
        if t < self.t0 - 1e-9 * self.h || t > self.t1 + 1e-9 * self.h {
            return Err(Error::OutOfRange { t, t0: self.t0, t1: self.t1 });
        }
        let mut i = ((t - self.t0) / self.h).floor() as isize;
        i = i.clamp(0, n as isize - 2);
        let theta = (t - self.time(i as usize)) / self.h;
        Ok((i as usize, theta.clamp(0.0, 1.0)))
    }

    /// Dense evaluation of one component.
    pub fn eval_component(&self, c: usize, t: f64) -> Result<f64> {
        let (i, th) = self.locate(t)?;
        Ok(hermite(
            self.values[c][i],
            self.values[c][i + 1],
            self.derivs[c][i],
            self.derivs[c][i + 1],
            self.h,
            th,
        ))
    }

    /// Dense evaluation of the full state into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (i, th) = self.locate(t)?;
        for (c, slot) in out[..self.dim()].iter_mut().enumerate() {
            *slot = hermite(
                self.values[c][i],
                self.values[c][i + 1],
                self.derivs[c][i],
                self.derivs[c][i + 1],
                self.h,
                th,
            );
        }
        Ok(())
    }

    pub fn eval_dense(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// CSV export with header `t,A,Q,G` (or `t,A,G`), 15 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W, names: &[&str]) -> std::io::Result<()> {
        write!(w, "t")?;
        for name in names {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        let mut row = Vec::with_capacity(1 + self.dim());
        for i in 0..self.len() {
            row.clear();
            row.push(self.time(i));
            for c in 0..self.dim() {
                row.push(self.values[c][i]);
            }
            crate::io::write_row(w, &row)?;
        }
        Ok(())
    }
}

fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, th: f64) -> f64 {
    let th2 = th * th;
    let th3 = th2 * th;
    y0 * (2.0 * th3 - 3.0 * th2 + 1.0)
        + y1 * (-2.0 * th3 + 3.0 * th2)
        + h * d0 * (th3 - 2.0 * th2 + th)
        + h * d1 * (th3 - th2)
}

struct Engine<'a, S: DelaySystem + ?Sized, H: Fn(f64, &mut [f64])> {
    system: &'a S,
    history: &'a H,
    dim: usize,
    delay: f64,
    h: f64,
    /// Node states and derivatives from global index `base` on.
    values: Vec<[f64; MAXD]>,
    derivs: Vec<[f64; MAXD]>,
    base: usize,
}

impl<'a, S: DelaySystem + ?Sized, H: Fn(f64, &mut [f64])> Engine<'a, S, H> {
    fn lookup(&self, tau: f64, out: &mut [f64]) {
        if tau <= 0.0 {
            (self.history)(tau, out);
            return;
        }
        let mut g = (tau / self.h).floor() as isize;
        let last = (self.base + self.values.len() - 1) as isize;
        g = g.clamp(self.base as isize, last - 1);
        let i = g as usize - self.base;
        let th = ((tau - self.h * g as f64) / self.h).clamp(0.0, 1.0);
        for (c, slot) in out[..self.dim].iter_mut().enumerate() {
            *slot = hermite(
                self.values[i][c],
                self.values[i + 1][c],
                self.derivs[i][c],
                self.derivs[i + 1][c],
                self.h,
                th,
            );
        }
    }

    fn deriv(&self, t: f64, y: &[f64; MAXD], out: &mut [f64; MAXD]) {
        let mut yd = [0.0; MAXD];
        self.lookup(t - self.delay, &mut yd);
        self.system.rhs(t, &y[..self.dim], &yd[..self.dim], &mut out[..self.dim]);
    }
}

/// Node values, node derivatives, and the global index of the first kept node.
type RawNodes = (Vec<[f64; MAXD]>, Vec<[f64; MAXD]>, usize);

fn run_stepper<S, H, P>(
    system: &S,
    history: &H,
    h: f64,
    n_steps: usize,
    keep_from: usize,
    clamp_positive: bool,
    mut stop: P,
) -> Result<RawNodes>
where
    S: DelaySystem + ?Sized,
    H: Fn(f64, &mut [f64]),
    P: FnMut(f64, &[f64]) -> bool,
{
    let dim = system.dim();
    let delay = system.delay();
    if h > delay {
        return Err(Error::StepTooLarge { step: h, delay });
    }
    let window = (delay / h).ceil() as usize + 2;

    let mut eng = Engine {
        system,
        history,
        dim,
        delay,
        h,
        values: Vec::new(),
        derivs: Vec::new(),
        base: 0,
    };

    let mut y0 = [0.0; MAXD];
    (history)(0.0, &mut y0[..dim]);
    let mut d0 = [0.0; MAXD];
    eng.values.push(y0);
    eng.derivs.push([0.0; MAXD]);
    eng.deriv(0.0, &y0, &mut d0);
    eng.derivs[0] = d0;

    let mut stopped_at = n_steps;
    for i in 0..n_steps {
        let t = h * i as f64;
        let y = eng.values[i - eng.base];
        let k1 = eng.derivs[i - eng.base];

        let mut ytmp = [0.0; MAXD];
        let mut k2 = [0.0; MAXD];
        for c in 0..dim {
            ytmp[c] = y[c] + 0.5 * h * k1[c];
        }
        eng.deriv(t + 0.5 * h, &ytmp, &mut k2);

        let mut k3 = [0.0; MAXD];
        for c in 0..dim {
            ytmp[c] = y[c] + 0.5 * h * k2[c];
        }
        eng.deriv(t + 0.5 * h, &ytmp, &mut k3);

        let mut k4 = [0.0; MAXD];
        for c in 0..dim {
            ytmp[c] = y[c] + h * k3[c];
        }
        eng.deriv(t + h, &ytmp, &mut k4);

        let mut ynew = [0.0; MAXD];
        for c in 0..dim {
            ynew[c] = y[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            if clamp_positive && ynew[c] < 0.0 {
                ynew[c] = 0.0;
            }
        }
        let tnew = h * (i + 1) as f64;
        if ynew[..dim].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t: tnew });
        }
        eng.values.push(ynew);
        eng.derivs.push([0.0; MAXD]);
        let mut dnew = [0.0; MAXD];
        eng.deriv(tnew, &ynew, &mut dnew);
        let last = eng.values.len() - 1;
        eng.derivs[last] = dnew;

        // Trim the transient part no longer reachable by delayed lookups.
        let next_global = i + 2;
        if next_global < keep_from && eng.values.len() > 2 * window {
            let drop = eng.values.len() - window;
            let drop = drop.min(keep_from.saturating_sub(eng.base));
            if drop > 0 {
                eng.values.drain(..drop);
                eng.derivs.drain(..drop);
                eng.base += drop;
            }
        }

        if stop(tnew, &ynew[..dim]) {
            stopped_at = i + 1;
            break;
        }
    }

    let start = keep_from.min(stopped_at).saturating_sub(eng.base);
    let values = eng.values.split_off(start);
    let derivs = eng.derivs.split_off(start);
    Ok((values, derivs, keep_from.min(stopped_at)))
}

fn pack(
    values: Vec<[f64; MAXD]>,
    derivs: Vec<[f64; MAXD]>,
    dim: usize,
    t0: f64,
    h: f64,
    analysis_start: f64,
) -> HistoryTrajectory {
    let n = values.len();
    let mut vs = vec![Vec::with_capacity(n); dim];
    let mut ds = vec![Vec::with_capacity(n); dim];
    for i in 0..n {
        for c in 0..dim {
            vs[c].push(values[i][c]);
            ds[c].push(derivs[i][c]);
        }
    }
    HistoryTrajectory {
        t0,
        t1: t0 + h * (n - 1) as f64,
        h,
        analysis_start,
        values: vs,
        derivs: ds,
    }
}

fn plan(config: &IntegratorConfig) -> Result<(f64, usize, usize)> {
    if config.step <= 0.0 || !config.step.is_finite() {
        return Err(Error::Invalid(format!("step must be positive and finite, got {}", config.step)));
    }
    let span = config.transient + config.record;
    if span <= 0.0 || !span.is_finite() {
        return Err(Error::Invalid(format!("span must be positive and finite, got {span}")));
    }
    let n_steps = (span / config.step - 1e-9).ceil().max(1.0) as usize;
    let h = span / n_steps as f64;
    // The analysis window must cover at least the requested record length.
    let rec_steps = (config.record / h - 1e-9).ceil() as usize;
    Ok((h, n_steps, n_steps - rec_steps.min(n_steps)))
}

/// Integrates over `[0, transient + record]` from an initial history defined
/// on `[-T, 0]`, returning the full dense trajectory with the transient end
/// marked.
pub fn integrate<S, H>(system: &S, history: &H, config: &IntegratorConfig) -> Result<HistoryTrajectory>
where
    S: DelaySystem + ?Sized,
    H: Fn(f64, &mut [f64]),
{
    let (h, n_steps, trans_steps) = plan(config)?;
    let (values, derivs, _) =
        run_stepper(system, history, h, n_steps, 0, config.clamp_positive, |_, _| false)?;
    Ok(pack(values, derivs, system.dim(), 0.0, h, h * trans_steps as f64))
}

/// Like [`integrate`] but stores only the record window; the transient is
/// integrated with a rolling buffer of one delay span. Use for long runs and
/// large `gamma` where the full trajectory would not fit comfortably.
pub fn integrate_tail<S, H>(system: &S, history: &H, config: &IntegratorConfig) -> Result<HistoryTrajectory>
where
    S: DelaySystem + ?Sized,
    H: Fn(f64, &mut [f64]),
{
    let (h, n_steps, trans_steps) = plan(config)?;
    let (values, derivs, kept) =
        run_stepper(system, history, h, n_steps, trans_steps, config.clamp_positive, |_, _| false)?;
    let t0 = h * kept as f64;
    Ok(pack(values, derivs, system.dim(), t0, h, t0))
}

/// Integrates until `stop(t, y)` is true or `max_span` is exhausted.
pub fn integrate_until<S, H, P>(
    system: &S,
    history: &H,
    step: f64,
    max_span: f64,
    stop: P,
) -> Result<HistoryTrajectory>
where
    S: DelaySystem + ?Sized,
    H: Fn(f64, &mut [f64]),
    P: FnMut(f64, &[f64]) -> bool,
{
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::Invalid(format!("step must be positive and finite, got {step}")));
    }
    let n_steps = (max_span / step - 1e-9).ceil().max(1.0) as usize;
    let h = max_span / n_steps as f64;
    let (values, derivs, _) = run_stepper(system, history, h, n_steps, 0, false, stop)?;
    Ok(pack(values, derivs, system.dim(), 0.0, h, 0.0))
}

/// Local maxima of a component above `threshold`, with the peak time and
/// height refined by the quadratic through the three surrounding samples.
pub fn find_peaks(traj: &HistoryTrajectory, component: usize, threshold: f64) -> Vec<(f64, f64)> {
    let y = traj.component(component);
    let mut peaks = Vec::new();
    for i in 1..y.len() - 1 {
        if y[i] > threshold && y[i] >= y[i - 1] && y[i] > y[i + 1] {
            let denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
            let (dt, height) = if denom.abs() > 0.0 {
                let off = 0.5 * (y[i - 1] - y[i + 1]) / denom;
                let off = off.clamp(-0.5, 0.5);
                (
                    off * traj.step(),
                    y[i] - 0.25 * (y[i - 1] - y[i + 1]) * off,
                )
            } else {
                (0.0, y[i])
            };
            peaks.push((traj.time(i) + dt, height));
        }
    }
    peaks
}

/// Peaks of a component inside the analysis window, using the mid-range of
/// the signal there as the threshold.
pub fn peak_train(traj: &HistoryTrajectory, component: usize) -> Vec<(f64, f64)> {
    let y = traj.component(component);
    let start = ((traj.analysis_start() - traj.t0()) / traj.step()).round() as usize;
    let tail = &y[start.min(y.len() - 1)..];
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = lo + 0.5 * (hi - lo);
    find_peaks(traj, component, threshold)
        .into_iter()
        .filter(|(t, _)| *t >= traj.analysis_start())
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct PeriodEstimate {
    pub period: f64,
    /// Max deviation of the successive peak spacings from the median, a
    /// periodicity diagnostic.
    pub max_deviation: f64,
    pub peak_count: usize,
}

/// Median of successive peak-time differences over the analysis window.
pub fn estimate_period(traj: &HistoryTrajectory, component: usize) -> Result<PeriodEstimate> {
    let peaks = peak_train(traj, component);
    if peaks.len() < 5 {
        return Err(Error::TooFewPeaks { found: peaks.len(), needed: 5 });
    }
    let mut diffs: Vec<f64> = peaks.windows(2).map(|w| w[1].0 - w[0].0).collect();
    diffs.sort_by(f64::total_cmp);
    let mid = diffs.len() / 2;
    let period = if diffs.len() % 2 == 1 {
        diffs[mid]
    } else {
        0.5 * (diffs[mid - 1] + diffs[mid])
    };
    let max_deviation = diffs.iter().map(|d| (d - period).abs()).fold(0.0, f64::max);
    Ok(PeriodEstimate { period, max_deviation, peak_count: peaks.len() })
}

/// Composite Simpson integral of one component over a window of the dense
/// interpolant.
pub fn integrate_component_over_period(
    traj: &HistoryTrajectory,
    component: usize,
    window: (f64, f64),
) -> Result<f64> {
    let (a, b) = window;
    if a < traj.t0() - 1e-9 * traj.step() || b > traj.t1() + 1e-9 * traj.step() || b <= a {
        return Err(Error::OutOfRange { t: if a < traj.t0() { a } else { b }, t0: traj.t0(), t1: traj.t1() });
    }
    let mut n = ((b - a) / traj.step()).ceil() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    n = n.max(2);
    let hh = (b - a) / n as f64;
    let mut sum = traj.eval_component(component, a)? + traj.eval_component(component, b)?;
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * traj.eval_component(component, a + hh * j as f64)?;
    }
    Ok(sum * hh / 3.0)
}

/// Convenience: integrate a model from its default small-predator history.
pub fn integrate_model(
    model: &crate::models::ModelInstance,
    config: &IntegratorConfig,
    tail_only: bool,
) -> Result<HistoryTrajectory> {
    let y0 = model.default_history()?;
    let history = move |_t: f64, out: &mut [f64]| out.copy_from_slice(&y0);
    if tail_only {
        integrate_tail(model, &history, config)
    } else {
        integrate(model, &history, config)
    }
}

/// Integrates a model into its fundamental pulsating regime: the history
/// carries a single localized pulse (area from the fast-limit fixed point
/// where the reduction applies), which locks onto the one-pulse-per-period
/// attractor within tens of delay periods.
///
/// Pulse peaks grow like `gamma`, so the stability rate of the fast rows
/// scales like `gamma^2` and can exceed what the default step bound
/// resolves; a blow-up is retried with the step halved (deterministic for
/// a given configuration).
pub fn integrate_pulsating(
    model: &crate::models::ModelInstance,
    config: &IntegratorConfig,
    tail_only: bool,
) -> Result<HistoryTrajectory> {
    // Models outside the fast-limit reduction get a modest seed; a large
    // one would crush the competitor so deep it underflows to the absorbing
    // zero of its logistic equation.
    let area = crate::pulse::PulseTheory::from_model(model)
        .and_then(|t| crate::pulse::solve_pstar(&t))
        .unwrap_or(0.1);
    let history = model.pulse_seed_history(area)?;
    let mut cfg = *config;
    for _ in 0..5 {
        let run = if tail_only {
            integrate_tail(model, &history, &cfg)
        } else {
            integrate(model, &history, &cfg)
        };
        match run {
            Err(Error::NonFiniteState { .. }) => cfg.step *= 0.5,
            other => return other,
        }
    }
    integrate_tail(model, &history, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets;

    /// y'(t) = -y(t-1), y == 1 on [-1, 0]. Piecewise-polynomial solution by
    /// the method of steps; used as the integrator oracle.
    struct TestDde;

    impl DelaySystem for TestDde {
        fn dim(&self) -> usize {
            1
        }
        fn delay(&self) -> f64 {
            1.0
        }
        fn rhs(&self, _t: f64, _y: &[f64], yd: &[f64], dydt: &mut [f64]) {
            dydt[0] = -yd[0];
        }
    }

    fn const_one(_t: f64, out: &mut [f64]) {
        out[0] = 1.0;
    }

    /// Exact solution of the test DDE on [0, 5], extended interval by
    /// interval: y(t) = 1 - t on [0,1], then each next segment integrates
    /// the previous one.
    fn exact_test_dde(t: f64) -> f64 {
        assert!((0.0..=5.0).contains(&t));
        // Coefficients of y on [n, n+1] in powers of (t - n).
        let mut coeff = vec![1.0f64, -1.0];
        let mut seg = 0.0;
        while t > seg + 1.0 {
            // y_next(s) = y(seg+1) - int_0^s y_prev(u) du, s = t - seg - 1.
            let y_end: f64 = coeff.iter().sum();
            let mut next = vec![y_end];
            for (p, c) in coeff.iter().enumerate() {
                next.push(-c / (p as f64 + 1.0));
            }
            coeff = next;
            seg += 1.0;
        }
        let s = t - seg;
        coeff.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    fn run_test_dde(h: f64, span: f64) -> HistoryTrajectory {
        let cfg = IntegratorConfig::new(h, 0.0, span);
        integrate(&TestDde, &const_one, &cfg).unwrap()
    }

    #[test]
    fn method_of_steps_is_exact_on_low_degree_segments() {
        let traj = run_test_dde(1e-2, 2.0);
        let y1 = traj.eval_component(0, 1.0).unwrap();
        let y2 = traj.eval_component(0, 2.0).unwrap();
        assert!(y1.abs() < 1e-10, "y(1) = {y1:e}");
        // On [1,2] the solution is 1 - t + (t-1)^2/2, so y(2) = -1/2.
        assert!((y2 - (-0.5)).abs() < 1e-10, "y(2) = {y2}");
        assert!((exact_test_dde(2.0) - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn dense_eval_matches_linear_segment() {
        let traj = run_test_dde(1e-2, 2.0);
        let y = traj.eval_component(0, 0.5).unwrap();
        assert!((y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_arithmetic_invariants() {
        let m = presets::fig4();
        let cfg = IntegratorConfig::new(3e-4, 1.7, 2.4);
        let traj = integrate_model(&m, &cfg, false).unwrap();
        // Span is an integer multiple of the step; counts line up.
        let n = traj.len();
        assert_eq!(n, ((traj.t1() - traj.t0()) / traj.step()).round() as usize + 1);
        assert!((traj.t0() + traj.step() * (n - 1) as f64 - traj.t1()).abs() < 1e-12);
        assert!((traj.t1() - traj.t0() - 4.1).abs() < 1e-12);
        // The transient mark sits on the grid and leaves the record window.
        let k = (traj.analysis_start() - traj.t0()) / traj.step();
        assert!((k - k.round()).abs() < 1e-9);
        assert!(traj.t1() - traj.analysis_start() >= 2.4 - 1e-9);
    }

    #[test]
    fn dense_eval_exact_at_grid_points() {
        let traj = run_test_dde(1e-2, 2.0);
        for i in [0, 7, 42, traj.len() - 1] {
            let t = traj.time(i);
            let v = traj.eval_component(0, t).unwrap();
            assert_eq!(v, traj.component(0)[i]);
        }
    }

    #[test]
    fn eval_out_of_range_errors() {
        let traj = run_test_dde(1e-2, 2.0);
        assert!(traj.eval_component(0, -0.5).is_err());
        assert!(traj.eval_component(0, 2.5).is_err());
    }

    #[test]
    fn order_four_convergence_on_test_dde() {
        // The solution only reaches polynomial degree > 3 from t = 4 on, so
        // the asymptotic h^4 error is measured at t = 5.
        let exact = exact_test_dde(5.0);
        let errors: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&h| (run_test_dde(h, 5.0).eval_component(0, 5.0).unwrap() - exact).abs())
            .collect();
        let slope = (errors[0] / errors[2]).ln() / 4.0f64.ln();
        assert!((slope - 4.0).abs() < 0.2, "slope {slope}, errors {errors:?}");
    }

    #[test]
    fn midstep_eval_consistent_under_step_halving() {
        let h = 1e-2;
        let coarse = run_test_dde(h, 5.0);
        let fine = run_test_dde(h / 2.0, 5.0);
        let t = 4.5 + h / 2.0; // mid-step point of the coarse grid
        let diff = (coarse.eval_component(0, t).unwrap() - fine.eval_component(0, t).unwrap()).abs();
        assert!(diff < 100.0 * h.powi(4), "diff {diff:e}");
        assert!(diff > 0.0);
    }

    #[test]
    fn step_larger_than_delay_is_rejected() {
        let cfg = IntegratorConfig::new(1.5, 0.0, 3.0);
        match integrate(&TestDde, &const_one, &cfg) {
            Err(Error::StepTooLarge { .. }) => {}
            other => panic!("expected StepTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn blowup_is_reported_with_time() {
        struct Explode;
        impl DelaySystem for Explode {
            fn dim(&self) -> usize {
                1
            }
            fn delay(&self) -> f64 {
                1.0
            }
            fn rhs(&self, _t: f64, y: &[f64], _yd: &[f64], dydt: &mut [f64]) {
                dydt[0] = y[0] * y[0];
            }
        }
        let cfg = IntegratorConfig::new(0.01, 0.0, 10.0);
        match integrate(&Explode, &|_t, out: &mut [f64]| out[0] = 5.0, &cfg) {
            Err(Error::NonFiniteState { t }) => assert!(t > 0.0 && t < 10.0),
            other => panic!("expected NonFiniteState, got {other:?}"),
        }
    }

    #[test]
    fn positivity_clamp_floors_components_at_zero() {
        struct Drain;
        impl DelaySystem for Drain {
            fn dim(&self) -> usize {
                1
            }
            fn delay(&self) -> f64 {
                1.0
            }
            fn rhs(&self, _t: f64, _y: &[f64], _yd: &[f64], dydt: &mut [f64]) {
                dydt[0] = -1.0;
            }
        }
        let history = |_t: f64, out: &mut [f64]| out[0] = 0.005;
        let mut cfg = IntegratorConfig::new(0.01, 0.0, 2.0);
        let free = integrate(&Drain, &history, &cfg).unwrap();
        assert!(free.component(0).iter().any(|v| *v < 0.0));
        cfg.clamp_positive = true;
        let clamped = integrate(&Drain, &history, &cfg).unwrap();
        assert!(clamped.component(0).iter().all(|v| *v >= 0.0));
        assert_eq!(*clamped.component(0).last().unwrap(), 0.0);
    }

    #[test]
    fn integration_is_deterministic_bitwise() {
        let m = presets::fig4();
        let cfg = IntegratorConfig::new(1e-3, 2.0, 3.0);
        let a = integrate_model(&m, &cfg, false).unwrap();
        let b = integrate_model(&m, &cfg, false).unwrap();
        for c in 0..a.dim() {
            for (x, y) in a.component(c).iter().zip(b.component(c)) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn tail_matches_full_integration() {
        let m = presets::fig4();
        let cfg = IntegratorConfig::new(1e-3, 5.0, 3.0);
        let full = integrate_model(&m, &cfg, false).unwrap();
        let tail = integrate_model(&m, &cfg, true).unwrap();
        assert!((tail.t0() - full.analysis_start()).abs() < 1e-12);
        let i0 = ((tail.t0() - full.t0()) / full.step()).round() as usize;
        for c in 0..full.dim() {
            for j in 0..tail.len() {
                assert_eq!(
                    full.component(c)[i0 + j].to_bits(),
                    tail.component(c)[j].to_bits(),
                    "component {c} node {j}"
                );
            }
        }
    }

    #[test]
    fn positivity_preserved_without_clamp() {
        let m = presets::fig4();
        let cfg = IntegratorConfig::new(IntegratorConfig::step_bound(1.0, 200.0), 20.0, 10.0);
        let traj = integrate_model(&m, &cfg, false).unwrap();
        for c in 0..traj.dim() {
            for v in traj.component(c) {
                assert!(*v >= -1e-12, "component {c} dipped to {v:e}");
            }
        }
    }

    #[test]
    fn sine_peaks_are_located() {
        let traj = HistoryTrajectory::from_fn(
            0.0,
            3.0,
            1e-3,
            1,
            |t, _| (2.0 * std::f64::consts::PI * t).sin(),
            |t, _| 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * t).cos(),
        );
        let peaks = find_peaks(&traj, 0, 0.5);
        assert_eq!(peaks.len(), 3);
        for (i, expect) in [0.25, 1.25, 2.25].iter().enumerate() {
            assert!((peaks[i].0 - expect).abs() < 1e-3);
            assert!((peaks[i].1 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_trace_has_no_peaks() {
        let traj = HistoryTrajectory::from_fn(0.0, 3.0, 1e-2, 1, |_, _| 2.0, |_, _| 0.0);
        assert!(find_peaks(&traj, 0, 0.0).is_empty());
    }

    #[test]
    fn cosine_period_estimate() {
        let h = 1e-3;
        let tau = 1.5;
        let traj = HistoryTrajectory::from_fn(
            0.0,
            12.0,
            h,
            1,
            |t, _| (2.0 * std::f64::consts::PI * t / tau).cos(),
            |t, _| -(2.0 * std::f64::consts::PI / tau) * (2.0 * std::f64::consts::PI * t / tau).sin(),
        );
        let est = estimate_period(&traj, 0).unwrap();
        assert!((est.period - tau).abs() < 2.0 * h);
        assert!(est.max_deviation < 2.0 * h);
    }

    #[test]
    fn too_few_peaks_is_an_error() {
        let traj = HistoryTrajectory::from_fn(0.0, 3.0, 1e-2, 1, |_, _| 1.0, |_, _| 0.0);
        match estimate_period(&traj, 0) {
            Err(Error::TooFewPeaks { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simpson_exact_on_constant() {
        let traj = HistoryTrajectory::from_fn(0.0, 4.0, 1e-2, 1, |_, _| 2.5, |_, _| 0.0);
        let v = integrate_component_over_period(&traj, 0, (0.5, 3.25)).unwrap();
        assert!((v - 2.5 * 2.75).abs() < 1e-12);
    }

    #[test]
    fn simpson_window_outside_errors() {
        let traj = HistoryTrajectory::from_fn(0.0, 1.0, 1e-2, 1, |_, _| 1.0, |_, _| 0.0);
        assert!(integrate_component_over_period(&traj, 0, (0.5, 1.5)).is_err());
    }
}
