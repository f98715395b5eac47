//! Asymptotic pulse machinery: the area fixed point, the prey bounds over
//! one cycle, the Dirac-comb limit, the heteroclinic profile equation with
//! its linearizations, and the rescaling of the profile to physical time.
//!
//! The profile equation is a scalar retarded DDE in the fast reversed time
//! `theta`; its connecting orbit between the equilibria `p*` and `0` gives
//! the pulse shape, and the derivative of the connection is the pulse.

use num_complex::Complex64;

use crate::dde::{self, DelaySystem, HistoryTrajectory};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::models::ModelInstance;
use crate::spectrum::{find_roots, CharFunction, GridDensity, RootBox};

/// The slow-stage parameters the pulse asymptotics depend on. Only models
/// whose prey equation has the constant-recruitment form and whose predator
/// death rate is scaled to one support this reduction.
#[derive(Debug, Clone, Copy)]
pub struct PulseTheory {
    pub kappa: f64,
    pub g0: f64,
    pub alpha: f64,
    pub k: f64,
    pub delay: f64,
    /// Competitor plateau `q0/beta` for three-species models.
    pub q_plateau: Option<f64>,
}

impl PulseTheory {
    pub fn from_model(model: &ModelInstance) -> Result<Self> {
        match model {
            ModelInstance::Prototype(p) | ModelInstance::LogisticQ(p) => Ok(PulseTheory {
                kappa: p.kappa,
                g0: p.g0,
                alpha: p.alpha,
                k: p.k,
                delay: p.delay,
                q_plateau: Some(p.q0 / p.beta),
            }),
            ModelInstance::ReducedA(p) => Ok(PulseTheory {
                kappa: p.kappa,
                g0: p.g0,
                alpha: p.alpha,
                k: p.k,
                delay: p.delay,
                q_plateau: None,
            }),
            _ => Err(Error::Invalid(format!(
                "pulse asymptotics not available for model {:?}",
                model.id()
            ))),
        }
    }

    fn prefactor(&self) -> f64 {
        self.kappa * self.g0 * (-(-self.alpha * self.delay).exp_m1()) / (self.alpha * self.k)
    }
}

/// The area map whose unique positive fixed point is the pulse area `p*`.
/// Increasing and concave on `p > 0` with slope `kappa g0 / alpha` at zero.
pub fn eta(theory: &PulseTheory, p: f64) -> f64 {
    debug_assert!(p >= 0.0);
    if p == 0.0 {
        return 0.0;
    }
    let num = -(-theory.k * p).exp_m1();
    let den = -(-theory.alpha * theory.delay - theory.k * p).exp_m1();
    theory.prefactor() * num / den
}

fn eta_prime(theory: &PulseTheory, p: f64) -> f64 {
    let u = (-theory.k * p).exp();
    let v = (-theory.alpha * theory.delay).exp();
    theory.prefactor() * theory.k * u * (1.0 - v) / ((1.0 - v * u) * (1.0 - v * u))
}

/// Unique positive fixed point of `eta`: bisection to 1e-12 on a bracket
/// that always contains it, then a Newton polish.
pub fn solve_pstar(theory: &PulseTheory) -> Result<f64> {
    let ratio = theory.kappa * theory.g0 / theory.alpha;
    if ratio <= 1.0 {
        return Err(Error::NoPositiveFixedPoint { ratio });
    }
    let f = |p: f64| eta(theory, p) - p;
    let mut lo = 1e-12;
    let mut hi = theory.prefactor() + 1.0;
    debug_assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-12 {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut p = 0.5 * (lo + hi);
    for _ in 0..8 {
        let d = eta_prime(theory, p) - 1.0;
        if d == 0.0 {
            break;
        }
        let step = f(p) / d;
        p -= step;
        if step.abs() < 1e-16 * p.max(1.0) {
            break;
        }
    }
    Ok(p)
}

/// Prey values at pulse begin and end, and the profile-equation coefficient
/// `a = kappa G_b`.
#[derive(Debug, Clone, Copy)]
pub struct GBounds {
    pub g_b: f64,
    pub g_e: f64,
    pub a: f64,
}

pub fn g_bounds(theory: &PulseTheory, pstar: f64) -> GBounds {
    let num = theory.g0 * (-(-theory.alpha * theory.delay).exp_m1());
    let den = theory.alpha * (-(-theory.alpha * theory.delay - theory.k * pstar).exp_m1());
    let g_b = num / den;
    let g_e = g_b * (-theory.k * pstar).exp();
    GBounds { g_b, g_e, a: theory.kappa * g_b }
}

/// The `gamma -> infinity` idealization: the predator becomes a Dirac comb
/// of area `p*`, the competitor sits at its plateau between pulses, and the
/// prey relaxes along an explicit exponential between consecutive pulses.
#[derive(Debug, Clone, Copy)]
pub struct CombLimit {
    pub pstar: f64,
    pub g_b: f64,
    pub g_e: f64,
    pub q_plateau: Option<f64>,
    g0_over_alpha: f64,
    alpha: f64,
}

impl CombLimit {
    /// Prey value at time `dt` past a pulse, `0 <= dt <= T`.
    pub fn g_between_pulses(&self, dt: f64) -> f64 {
        self.g0_over_alpha - (self.g0_over_alpha - self.g_e) * (-self.alpha * dt).exp()
    }
}

pub fn dirac_comb_limit(theory: &PulseTheory) -> Result<CombLimit> {
    let pstar = solve_pstar(theory)?;
    let b = g_bounds(theory, pstar);
    Ok(CombLimit {
        pstar,
        g_b: b.g_b,
        g_e: b.g_e,
        q_plateau: theory.q_plateau,
        g0_over_alpha: theory.g0 / theory.alpha,
        alpha: theory.alpha,
    })
}

/// Scalar characteristic function `1 - lambda - coeff e^(-lambda c)` of the
/// profile-equation linearizations.
struct DelayLinearChar {
    coeff: f64,
    c: f64,
}

impl CharFunction for DelayLinearChar {
    fn eval_d(&self, z: Complex64) -> (Complex64, Complex64) {
        let e = (-z * self.c).exp();
        (
            Complex64::new(1.0, 0.0) - z - self.coeff * e,
            -Complex64::new(1.0, 0.0) + self.coeff * self.c * e,
        )
    }
    fn im_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.c
    }
}

fn positive_real_root(coeff: f64, c: f64) -> Result<f64> {
    // g(x) = 1 - x - coeff e^(-xc) with coeff < 1: g(0) > 0, g(1) < 0.
    if coeff >= 1.0 {
        return Err(Error::Invalid(format!("contraction coefficient {coeff} >= 1")));
    }
    let g = |x: f64| 1.0 - x - coeff * (-x * c).exp();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-16 {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Roots of the profile-equation linearizations at `0` and at `p*`, plus
/// the validity flags of the stated stability conditions.
#[derive(Debug, Clone, Copy)]
pub struct LinearizationRoots {
    /// Rightmost root of the linearization at the zero equilibrium.
    pub zero_leading: Complex64,
    /// The single positive real root of the linearization at `p*`.
    pub lambda_plus: f64,
    pub ac_lt_one: bool,
    pub contraction_lt_one: bool,
    pub zero_leading_real: bool,
}

pub fn profile_linearization_roots(a: f64, k: f64, c: f64, pstar: f64) -> Result<LinearizationRoots> {
    let b = a * (-k * pstar).exp();
    let lambda_plus = positive_real_root(b, c)?;

    // Leading root at zero: scan expanding boxes; any root with real part
    // above the box floor has imaginary part below a e^(-x_lo c), so a
    // nonempty scan already contains the global leading root.
    let f = DelayLinearChar { coeff: a, c };
    let mut x_lo = -2.0;
    let zero_leading = loop {
        let cap = a * (-x_lo * c).exp() + 1.0;
        let roots = find_roots(
            &f,
            &RootBox::upper(x_lo, 0.75, cap),
            GridDensity { nx: 40, ny: 60 },
            ExecMode::default(),
        )?;
        if let Some(r) = roots.iter().max_by(|p, q| {
            p.lambda
                .re
                .total_cmp(&q.lambda.re)
                .then(q.lambda.im.total_cmp(&p.lambda.im))
        }) {
            break r.lambda;
        }
        x_lo -= 2.0;
        if x_lo < -60.0 {
            return Err(Error::NoConvergence("no root of the zero linearization found".into()));
        }
    };

    Ok(LinearizationRoots {
        zero_leading,
        lambda_plus,
        ac_lt_one: a * c < 1.0,
        contraction_lt_one: b < 1.0,
        zero_leading_real: zero_leading.im == 0.0,
    })
}

/// The profile equation `-P'(theta) + P(theta) = (a/k)(1 - e^(-k P(theta - c)))`
/// integrated as a retarded DDE in increasing `theta`.
struct ProfileEquation {
    a: f64,
    k: f64,
    c: f64,
}

impl DelaySystem for ProfileEquation {
    fn dim(&self) -> usize {
        1
    }
    fn delay(&self) -> f64 {
        self.c
    }
    fn rhs(&self, _t: f64, y: &[f64], yd: &[f64], dydt: &mut [f64]) {
        dydt[0] = y[0] - self.a / self.k * (-(-self.k * yd[0]).exp_m1());
    }
}

/// Heteroclinic profile between `p*` and `0` with its derivative pulse.
/// `theta` is shifted so the extremum of `|abar|` sits at zero.
#[derive(Debug, Clone)]
pub struct PulseProfile {
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub abar: Vec<f64>,
    pub pstar: f64,
    pub lambda_plus: f64,
}

impl PulseProfile {
    /// Total variation area `int |abar| d theta` (trapezoid).
    pub fn area(&self) -> f64 {
        let mut sum = 0.0;
        for i in 1..self.theta.len() {
            sum += 0.5 * (self.abar[i - 1].abs() + self.abar[i].abs()) * (self.theta[i] - self.theta[i - 1]);
        }
        sum
    }

    /// Linear interpolation on the (uniform) grid; `None` outside it.
    pub fn value_at(&self, theta: f64) -> Option<f64> {
        let h = self.theta[1] - self.theta[0];
        let x = (theta - self.theta[0]) / h;
        if x < 0.0 || x > (self.theta.len() - 1) as f64 {
            return None;
        }
        let i = (x.floor() as usize).min(self.theta.len() - 2);
        let w = x - i as f64;
        Some(self.p[i] * (1.0 - w) + self.p[i + 1] * w)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "theta,P,Abar")?;
        for i in 0..self.theta.len() {
            crate::io::write_row(w, &[self.theta[i], self.p[i], self.abar[i]])?;
        }
        Ok(())
    }
}

pub fn solve_heteroclinic(a: f64, k: f64, c: f64, pstar: f64, theta_span: f64) -> Result<PulseProfile> {
    solve_heteroclinic_with_seed(a, k, c, pstar, theta_span, 1e-6)
}

/// As [`solve_heteroclinic`] with an explicit seed offset along the unstable
/// eigendirection of `p*`. Halving the seed must leave the shifted profile
/// unchanged to below 1e-4 (shift invariance), which the tests assert.
pub fn solve_heteroclinic_with_seed(
    a: f64,
    k: f64,
    c: f64,
    pstar: f64,
    theta_span: f64,
    eps: f64,
) -> Result<PulseProfile> {
    let fp_residual = (a / k * (-(-k * pstar).exp_m1()) - pstar).abs();
    if fp_residual > 1e-6 * pstar.max(1.0) {
        return Err(Error::Invalid(format!(
            "p* = {pstar} is not a fixed point for a = {a}, k = {k} (residual {fp_residual:e})"
        )));
    }
    if a * c >= 1.0 {
        return Err(Error::Heteroclinic(format!(
            "zero equilibrium not certifiably stable: a c = {} >= 1",
            a * c
        )));
    }
    let lambda_plus = positive_real_root(a * (-k * pstar).exp(), c)?;

    let eq = ProfileEquation { a, k, c };
    let history = move |theta: f64, out: &mut [f64]| {
        out[0] = pstar - eps * (lambda_plus * theta).exp();
    };
    let h = (c / 256.0).min(5e-3);
    let ceiling = pstar + 1.0;
    let mut escaped = false;
    let traj = dde::integrate_until(&eq, &history, h, theta_span, |_t, y| {
        if y[0] < 1e-8 {
            return true;
        }
        if y[0] > ceiling {
            escaped = true;
            return true;
        }
        false
    })?;
    if escaped {
        return Err(Error::Heteroclinic(
            "trajectory left the trust region; no connection for these (a, k, c)".into(),
        ));
    }
    let mut p: Vec<f64> = traj.component(0).to_vec();
    let mut abar: Vec<f64> = traj.component_derivs(0).to_vec();
    let mut times: Vec<f64> = (0..p.len()).map(|i| traj.time(i)).collect();
    if *p.last().unwrap() >= 1e-8 {
        return Err(Error::Heteroclinic(format!(
            "profile did not reach zero within the span (P = {:e}); increase theta_span",
            p.last().unwrap()
        )));
    }
    // The stopping step may overshoot (oscillating tails cross zero between
    // nodes); refine the endpoint to P = 1e-8 on the dense interpolant.
    {
        let n = p.len();
        let (mut lo, mut hi) = (traj.time(n - 2), traj.time(n - 1));
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if traj.eval_component(0, mid)? >= 1e-8 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t_end = 0.5 * (lo + hi);
        let p_end = traj.eval_component(0, t_end)?;
        let p_delayed = if t_end - c >= 0.0 {
            traj.eval_component(0, t_end - c)?
        } else {
            pstar - eps * (lambda_plus * (t_end - c)).exp()
        };
        p[n - 1] = p_end;
        abar[n - 1] = p_end - a / k * (-(-k * p_delayed).exp_m1());
        times[n - 1] = t_end;
    }

    // Shift theta so the pulse extremum sits at zero.
    let i_min = abar
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap();
    let mut peak_t = times[i_min];
    if i_min > 0 && i_min + 2 < abar.len() {
        let denom = abar[i_min - 1] - 2.0 * abar[i_min] + abar[i_min + 1];
        if denom.abs() > 0.0 {
            let off = (0.5 * (abar[i_min - 1] - abar[i_min + 1]) / denom).clamp(-0.5, 0.5);
            peak_t += off * traj.step();
        }
    }
    let theta: Vec<f64> = times.iter().map(|t| t - peak_t).collect();
    Ok(PulseProfile { theta, p, abar, pstar, lambda_plus })
}

/// The pulse in physical time: `t = theta / gamma` with the axis flipped so
/// the pulse rises then falls, amplitude scaled by `gamma`. Area is
/// invariant under the rescaling.
#[derive(Debug, Clone)]
pub struct RescaledPulse {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
}

impl RescaledPulse {
    pub fn peak(&self) -> f64 {
        self.a.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn area(&self) -> f64 {
        let mut sum = 0.0;
        for i in 1..self.t.len() {
            sum += 0.5 * (self.a[i - 1] + self.a[i]) * (self.t[i] - self.t[i - 1]);
        }
        sum
    }

    /// Full width at half maximum by linear interpolation of the crossings.
    pub fn fwhm(&self) -> Option<f64> {
        let peak = self.peak();
        let i_pk = self.a.iter().position(|v| *v == peak)?;
        let half = 0.5 * peak;
        let cross = |i0: usize, i1: usize| {
            let (a0, a1) = (self.a[i0], self.a[i1]);
            let w = (half - a0) / (a1 - a0);
            self.t[i0] + w * (self.t[i1] - self.t[i0])
        };
        let mut left = None;
        for i in (0..i_pk).rev() {
            if self.a[i] < half {
                left = Some(cross(i, i + 1));
                break;
            }
        }
        let mut right = None;
        for i in i_pk + 1..self.a.len() {
            if self.a[i] < half {
                right = Some(cross(i - 1, i));
                break;
            }
        }
        Some(right? - left?)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,A")?;
        for i in 0..self.t.len() {
            crate::io::write_row(w, &[self.t[i], self.a[i]])?;
        }
        Ok(())
    }
}

pub fn rescale_pulse(profile: &PulseProfile, gamma: f64) -> RescaledPulse {
    let n = profile.theta.len();
    let mut t = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    for i in (0..n).rev() {
        t.push(-profile.theta[i] / gamma);
        a.push(-gamma * profile.abar[i]);
    }
    RescaledPulse { t, a }
}

/// Source for the period-offset constant `c` in `tau = T (1 + c/(gamma T))`.
pub enum CSource<'a> {
    /// Near-threshold value from the first Hopf frequency of the positive
    /// equilibrium.
    Asymptotic,
    /// `gamma (tau_measured - T)` from a settled periodic trajectory.
    Simulation(&'a HistoryTrajectory),
}

pub fn c_parameter(model: &ModelInstance, source: CSource<'_>) -> Result<f64> {
    let gamma = model.gamma();
    let t = DelaySystem::delay(model);
    match source {
        CSource::Asymptotic => {
            let omega1 = crate::hopf::hopf_positive_asymptotic(model, 1)?.omega;
            Ok(gamma * t * (2.0 * std::f64::consts::PI / (omega1 * t) - 1.0))
        }
        CSource::Simulation(traj) => {
            let period = dde::estimate_period(traj, 0)?.period;
            Ok(gamma * (period - t))
        }
    }
}

/// Aggregate of the pulse asymptotics for one parameter set.
#[derive(Debug, Clone)]
pub struct PulseAsymptotics {
    pub pstar: f64,
    pub g_b: f64,
    pub g_e: f64,
    pub a: f64,
    pub c: f64,
    pub lambda_plus: f64,
    pub zero_leading: Complex64,
    pub ac_lt_one: bool,
    pub contraction_lt_one: bool,
    pub profile: PulseProfile,
}

pub fn analyze(theory: &PulseTheory, c: f64, theta_span: f64) -> Result<PulseAsymptotics> {
    let pstar = solve_pstar(theory)?;
    let bounds = g_bounds(theory, pstar);
    let lin = profile_linearization_roots(bounds.a, theory.k, c, pstar)?;
    let profile = solve_heteroclinic(bounds.a, theory.k, c, pstar, theta_span)?;
    Ok(PulseAsymptotics {
        pstar,
        g_b: bounds.g_b,
        g_e: bounds.g_e,
        a: bounds.a,
        c,
        lambda_plus: lin.lambda_plus,
        zero_leading: lin.zero_leading,
        ac_lt_one: lin.ac_lt_one,
        contraction_lt_one: lin.contraction_lt_one,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets;

    fn fig10_theory() -> PulseTheory {
        PulseTheory::from_model(&presets::fig10()).unwrap()
    }

    fn fig4_theory() -> PulseTheory {
        PulseTheory::from_model(&presets::fig4()).unwrap()
    }

    /// Independent bisection on p = eta(p) written directly from the area
    /// map, used to freeze the derived fixed points.
    fn pstar_oracle(kappa: f64, g0: f64, alpha: f64, k: f64, t: f64) -> f64 {
        let eta = |p: f64| {
            kappa * g0 * (1.0 - (-alpha * t).exp()) * (1.0 - (-k * p).exp())
                / (alpha * k * (1.0 - (-alpha * t - k * p).exp()))
        };
        let (mut lo, mut hi) = (1e-12, kappa * g0 / (alpha * k) + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eta(mid) > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn eta_at_zero_and_slope() {
        let th = fig10_theory();
        assert_eq!(eta(&th, 0.0), 0.0);
        let p = 1e-7;
        let slope = eta(&th, p) / p;
        assert!((slope - 0.6 * 5.672).abs() < 1e-5, "slope {slope}");
    }

    #[test]
    fn eta_is_increasing_and_concave() {
        let th = fig10_theory();
        let h = 1e-4;
        for i in 1..60 {
            let p = 0.1 * i as f64;
            let d1 = (eta(&th, p + h) - eta(&th, p - h)) / (2.0 * h);
            let d2 = (eta(&th, p + h) - 2.0 * eta(&th, p) + eta(&th, p - h)) / (h * h);
            assert!(d1 > 0.0);
            assert!(d2 < 1e-6);
        }
    }

    #[test]
    fn fig10_pstar_matches_published_value() {
        let th = fig10_theory();
        // The published p* is (approximately) a fixed point of eta.
        assert!((eta(&th, 1.9463) - 1.9463).abs() < 2e-4);
        let p = solve_pstar(&th).unwrap();
        assert!((p - 1.9463).abs() < 1e-4, "pstar {p}");
        let oracle = pstar_oracle(0.6, 5.672, 1.0, 1.0, 1.0);
        assert!((p - oracle).abs() < 1e-10);
        // Fixed-point residual and the equivalent contraction identity.
        assert!((eta(&th, p) - p).abs() < 1e-10);
        let b = g_bounds(&th, p);
        assert!((b.a / th.k * (1.0 - (-th.k * p).exp()) - p).abs() < 1e-10);
    }

    #[test]
    fn fig4_pstar_frozen() {
        let th = fig4_theory();
        let p = solve_pstar(&th).unwrap();
        let oracle = pstar_oracle(0.5, 3.1, 1.0, 1.0, 1.0);
        assert!((p - oracle).abs() < 1e-10);
        assert!((p - 0.48999).abs() < 2e-4, "pstar {p}");
    }

    #[test]
    fn pstar_vanishes_at_the_fast_limit_threshold() {
        let th = PulseTheory {
            kappa: (1.0 + 1e-6) / 5.672,
            g0: 5.672,
            alpha: 1.0,
            k: 1.0,
            delay: 1.0,
            q_plateau: None,
        };
        let p = solve_pstar(&th).unwrap();
        assert!(p > 0.0 && p < 1e-4, "pstar {p}");

        let below = PulseTheory { kappa: 0.9 / 5.672, ..th };
        assert!(matches!(solve_pstar(&below), Err(Error::NoPositiveFixedPoint { .. })));
    }

    #[test]
    fn fig10_bounds_match_published_a() {
        let th = fig10_theory();
        let p = solve_pstar(&th).unwrap();
        let b = g_bounds(&th, p);
        assert!((b.a - 2.2705).abs() < 1e-3, "a = {}", b.a);
        assert!((b.g_b - 3.7840).abs() < 1e-3, "G_b = {}", b.g_b);
        assert!(b.g_e < b.g_b && b.g_e > 0.0);
    }

    #[test]
    fn fig4_bounds_frozen() {
        let th = fig4_theory();
        let p = solve_pstar(&th).unwrap();
        let b = g_bounds(&th, p);
        assert!((b.g_b - 2.5297).abs() < 1e-3);
        assert!((b.g_e - 1.5499).abs() < 1e-3);
        assert!((b.a - 1.2649).abs() < 1e-3);
    }

    #[test]
    fn g_b_tends_to_unpredated_prey_as_pstar_vanishes() {
        let th = fig10_theory();
        let b = g_bounds(&th, 1e-9);
        assert!((b.g_b - th.g0 / th.alpha).abs() < 1e-6);
    }

    #[test]
    fn comb_limit_endpoints_are_consistent() {
        let th = fig4_theory();
        let comb = dirac_comb_limit(&th).unwrap();
        assert!((comb.g_between_pulses(0.0) - comb.g_e).abs() < 1e-14);
        assert!((comb.g_between_pulses(th.delay) - comb.g_b).abs() < 1e-12);
        assert_eq!(comb.q_plateau, Some(1.0));
    }

    #[test]
    fn fig10_linearization_roots() {
        // Published rounded inputs; the positive root of the p* linearization
        // is checked against an in-test scalar Newton oracle.
        let (a, k, c, pstar): (f64, f64, f64, f64) = (2.2705, 1.0, 0.097, 1.9463);
        let b = a * (-k * pstar).exp();
        let mut x: f64 = 0.5;
        for _ in 0..60 {
            let e = (-x * c).exp();
            x -= (1.0 - x - b * e) / (-1.0 + b * c * e);
        }
        let lin = profile_linearization_roots(a, k, c, pstar).unwrap();
        assert!((lin.lambda_plus - x).abs() < 1e-10);
        assert!((lin.lambda_plus - 0.6969).abs() < 1e-3, "lambda+ = {}", lin.lambda_plus);
        assert!(lin.ac_lt_one && (a * c - 0.2202).abs() < 1e-3);
        assert!(lin.contraction_lt_one && (b - 0.3242).abs() < 1e-3);
        assert!(lin.zero_leading_real);
        assert!(lin.zero_leading.re < 0.0);
    }

    #[test]
    fn linearization_roots_reduce_to_delay_free_values_as_c_vanishes() {
        let (a, k, pstar): (f64, f64, f64) = (2.2705, 1.0, 1.9463);
        let lin = profile_linearization_roots(a, k, 1e-9, pstar).unwrap();
        assert!((lin.zero_leading.re - (1.0 - a)).abs() < 1e-6);
        assert_eq!(lin.zero_leading.im, 0.0);
        let b = a * (-k * pstar).exp();
        assert!((lin.lambda_plus - (1.0 - b)).abs() < 1e-6);
    }

    fn consistent_pstar(a: f64, k: f64) -> f64 {
        // Fixed point of p = (a/k)(1 - e^(-k p)) for profile tests.
        let (mut lo, mut hi) = (1e-9, a / k);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if a / k * (1.0 - (-k * mid).exp()) > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn heteroclinic_connects_pstar_to_zero_with_area_pstar() {
        let th = fig10_theory();
        let pstar = solve_pstar(&th).unwrap();
        let b = g_bounds(&th, pstar);
        let prof = solve_heteroclinic(b.a, th.k, 0.097, pstar, 200.0).unwrap();
        assert!((prof.p[0] - pstar).abs() < 1e-5);
        assert!(prof.p.last().unwrap().abs() < 1e-7);
        assert!((prof.area() - pstar).abs() < 1e-4);
        // Real leading root at zero: the profile decays monotonically.
        for w in prof.p.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn heteroclinic_with_complex_zero_root_oscillates_mildly() {
        let (a, c, k) = (1.5, 0.6, 1.0);
        let pstar = consistent_pstar(a, k);
        let lin = profile_linearization_roots(a, k, c, pstar).unwrap();
        assert!(!lin.zero_leading_real);
        let prof = solve_heteroclinic(a, k, c, pstar, 400.0).unwrap();
        let max_up = prof
            .p
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .fold(0.0, f64::max);
        assert!(max_up < 1e-3 * pstar, "upward wiggle {max_up:e}");
        assert!(prof.p.last().unwrap().abs() < 1e-7);
    }

    #[test]
    fn seed_halving_leaves_shifted_profile_unchanged() {
        let th = fig10_theory();
        let pstar = solve_pstar(&th).unwrap();
        let b = g_bounds(&th, pstar);
        let p1 = solve_heteroclinic_with_seed(b.a, th.k, 0.097, pstar, 200.0, 1e-6).unwrap();
        let p2 = solve_heteroclinic_with_seed(b.a, th.k, 0.097, pstar, 200.0, 5e-7).unwrap();
        let mut sup: f64 = 0.0;
        for (i, &th_i) in p1.theta.iter().enumerate() {
            if let Some(v) = p2.value_at(th_i) {
                sup = sup.max((p1.p[i] - v).abs());
            }
        }
        assert!(sup < 1e-4, "sup diff {sup:e}");
    }

    #[test]
    fn rescaled_pulse_preserves_area_and_halves_width() {
        let th = fig10_theory();
        let pstar = solve_pstar(&th).unwrap();
        let b = g_bounds(&th, pstar);
        let prof = solve_heteroclinic(b.a, th.k, 0.097, pstar, 200.0).unwrap();
        let r1 = rescale_pulse(&prof, 100.0);
        let r2 = rescale_pulse(&prof, 200.0);
        assert!((r1.area() - pstar).abs() < 1e-4);
        assert!((r2.area() - pstar).abs() < 1e-4);
        let ratio = r1.fwhm().unwrap() / r2.fwhm().unwrap();
        assert!((ratio - 2.0).abs() < 1e-9);
        // Peak scales linearly with gamma and sits at t = 0.
        assert!((r2.peak() / r1.peak() - 2.0).abs() < 1e-12);
        let i_pk = r1.a.iter().position(|v| *v == r1.peak()).unwrap();
        assert!(r1.t[i_pk].abs() < 2.0 * (r1.t[1] - r1.t[0]).abs());
    }

    #[test]
    fn asymptotic_c_near_threshold_value() {
        let c = c_parameter(&presets::fig4(), CSource::Asymptotic).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 0.01, "c = {c}");
    }

    #[test]
    fn inconsistent_fixed_point_is_rejected() {
        assert!(solve_heteroclinic(2.0, 1.0, 0.1, 1.0, 50.0).is_err());
    }
}
