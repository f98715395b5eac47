//! Characteristic functions of the model equilibria, complex root finding
//! with argument-principle verification, and the analytic curves that carry
//! the weak (pseudocontinuous) and strong parts of the spectrum.
//!
//! The characteristic function of a (model, equilibrium) pair is the
//! determinant of `diag(dscale) lambda - J0 - e^(-lambda T) Jd` built from
//! the analytic linearization. This "cleared" form is entire in `lambda`,
//! and specializes to the per-model product/quotient forms (tested below).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{run_indexed, ExecMode};
use crate::models::{EquilibriumKind, EquilibriumMode, Linearization, ModelInstance, MAX_DIM};

/// Complex dual number: value and derivative with respect to `lambda`.
/// Gives exact Newton derivatives for every characteristic function.
#[derive(Debug, Clone, Copy)]
struct CDual {
    v: Complex64,
    d: Complex64,
}

impl CDual {
    fn var(z: Complex64) -> Self {
        CDual { v: z, d: Complex64::new(1.0, 0.0) }
    }

    fn con(x: f64) -> Self {
        CDual { v: Complex64::new(x, 0.0), d: Complex64::new(0.0, 0.0) }
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        CDual { v: e, d: e * self.d }
    }

    fn scale(self, x: f64) -> Self {
        CDual { v: self.v * x, d: self.d * x }
    }
}

impl std::ops::Add for CDual {
    type Output = CDual;
    fn add(self, o: CDual) -> CDual {
        CDual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl std::ops::Sub for CDual {
    type Output = CDual;
    fn sub(self, o: CDual) -> CDual {
        CDual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl std::ops::Mul for CDual {
    type Output = CDual;
    fn mul(self, o: CDual) -> CDual {
        CDual { v: self.v * o.v, d: self.v * o.d + self.d * o.v }
    }
}

fn det2(m: &[[CDual; 2]; 2]) -> CDual {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn det3(m: &[[CDual; 3]; 3]) -> CDual {
    let c0 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c1 = m[1][0] * m[2][2] - m[1][2] * m[2][0];
    let c2 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    m[0][0] * c0 - m[0][1] * c1 + m[0][2] * c2
}

/// A scalar complex-analytic function whose zeros are sought.
pub trait CharFunction: Sync {
    /// Value and derivative at `lambda`.
    fn eval_d(&self, lambda: Complex64) -> (Complex64, Complex64);

    fn eval(&self, lambda: Complex64) -> Complex64 {
        self.eval_d(lambda).0
    }

    /// Oscillation period along the imaginary axis (`2 pi / T` for a single
    /// delay `T`); used to size contour sampling.
    fn im_period(&self) -> f64;
}

/// Characteristic function of one (model, equilibrium) pair.
pub struct ModelChar {
    lin: Linearization,
    delay: f64,
}

impl ModelChar {
    pub fn linearization(&self) -> &Linearization {
        &self.lin
    }

    /// Gershgorin-type bound: any characteristic root with real part at
    /// least `x` has imaginary part at most this value.
    pub fn im_bound(&self, x: f64) -> f64 {
        let u = (-x * self.delay).exp();
        let mut bound: f64 = 0.0;
        for i in 0..self.lin.dim {
            let mut off = 0.0;
            let mut dl = 0.0;
            for j in 0..self.lin.dim {
                if j != i {
                    off += self.lin.j0[i][j].abs();
                }
                dl += self.lin.jd[i][j].abs();
            }
            bound = bound.max((off + u * dl) / self.lin.dscale[i]);
        }
        bound
    }
}

impl CharFunction for ModelChar {
    #[allow(clippy::needless_range_loop)] // matrix assembly reads clearest indexed
    fn eval_d(&self, lambda: Complex64) -> (Complex64, Complex64) {
        let lam = CDual::var(lambda);
        let t = self.delay;
        // For very negative real parts the A-row is multiplied through by
        // e^(lambda T) instead (delayed entries live in that row only), which
        // has the same zeros and avoids overflow of e^(-lambda T).
        let rescale = lambda.re * t < -300.0;
        let u = if rescale { CDual::con(0.0) } else { lam.scale(-t).exp() };
        let et = if rescale { lam.scale(t).exp() } else { CDual::con(0.0) };

        let mut m = [[CDual::con(0.0); MAX_DIM]; MAX_DIM];
        let dim = self.lin.dim;
        for i in 0..dim {
            for j in 0..dim {
                let diag = if i == j { lam.scale(self.lin.dscale[i]) } else { CDual::con(0.0) };
                let base = diag - CDual::con(self.lin.j0[i][j]);
                m[i][j] = if i == 0 {
                    if rescale {
                        et * base - CDual::con(self.lin.jd[0][j])
                    } else {
                        base - u * CDual::con(self.lin.jd[0][j])
                    }
                } else {
                    base
                };
            }
        }
        let det = if dim == 2 {
            det2(&[[m[0][0], m[0][1]], [m[1][0], m[1][1]]])
        } else {
            det3(&m)
        };
        (det.v, det.d)
    }

    fn im_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.delay
    }
}

/// Builds the characteristic function for a model equilibrium. The positive
/// equilibrium is solved exactly first; delayed entries appear only in the
/// predator row.
pub fn char_function(model: &ModelInstance, kind: EquilibriumKind) -> Result<ModelChar> {
    let eq = match kind {
        EquilibriumKind::ZeroA => model.zero_a_equilibrium()?,
        EquilibriumKind::Positive => model.positive_equilibrium(EquilibriumMode::Exact)?,
    };
    let lin = model.linearization(&eq.components);
    for i in 1..lin.dim {
        for j in 0..lin.dim {
            debug_assert_eq!(lin.jd[i][j], 0.0);
        }
    }
    Ok(ModelChar { lin, delay: crate::dde::DelaySystem::delay(model) })
}

/// Convenience: characteristic function value at one point.
pub fn char_value(model: &ModelInstance, kind: EquilibriumKind, lambda: Complex64) -> Result<Complex64> {
    Ok(char_function(model, kind)?.eval(lambda))
}

/// Characteristic function of the linearization at an arbitrary state —
/// e.g. the non-positive continuation of an equilibrium below threshold.
pub fn char_function_at(model: &ModelInstance, components: &[f64]) -> ModelChar {
    ModelChar {
        lin: model.linearization(components),
        delay: crate::dde::DelaySystem::delay(model),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Neutral,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Neutral => "neutral",
        }
    }
}

/// A characteristic root `lambda = x + i omega` with `omega >= 0`; the
/// conjugate partner is implied.
#[derive(Debug, Clone, Copy)]
pub struct ComplexRoot {
    pub lambda: Complex64,
    /// `|F(lambda)|` relative to the local derivative scale.
    pub residual: f64,
    pub class: Stability,
}

fn classify(x: f64) -> Stability {
    if x.abs() < 1e-8 {
        Stability::Neutral
    } else if x < 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

/// Search region `[x_min, x_max] x [omega_min, omega_max]` (imaginary part
/// nonnegative; conjugates are implied).
#[derive(Debug, Clone, Copy)]
pub struct RootBox {
    pub x_min: f64,
    pub x_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl RootBox {
    pub fn upper(x_min: f64, x_max: f64, omega_max: f64) -> Self {
        RootBox { x_min, x_max, omega_min: 0.0, omega_max }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GridDensity {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridDensity {
    fn default() -> Self {
        GridDensity { nx: 200, ny: 200 }
    }
}

fn newton_root(f: &dyn CharFunction, seed: Complex64) -> Option<(Complex64, f64)> {
    let mut z = seed;
    for _ in 0..80 {
        let (v, d) = f.eval_d(z);
        if !v.is_finite() || !d.is_finite() || d.norm() == 0.0 {
            return None;
        }
        let step = v / d;
        z -= step;
        if !z.is_finite() || z.norm() > 1e9 {
            return None;
        }
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            let (v, d) = f.eval_d(z);
            let res = v.norm() / d.norm().max(1.0);
            if res < 1e-9 {
                return Some((z, res));
            }
            return None;
        }
    }
    None
}

fn contour_integral(f: &dyn CharFunction, a: Complex64, b: Complex64, n: usize) -> Option<Complex64> {
    let dz = (b - a) / n as f64;
    let logd = |z: Complex64| -> Option<Complex64> {
        let (v, d) = f.eval_d(z);
        if !v.is_finite() || !d.is_finite() || v.norm() == 0.0 {
            None
        } else {
            Some(d / v)
        }
    };
    let mut sum = Complex64::new(0.0, 0.0);
    let mut prev = logd(a)?;
    for j in 1..=n {
        let z = a + dz * j as f64;
        let g = logd(z)?;
        sum += (prev + g) * 0.5 * dz;
        prev = g;
    }
    Some(sum)
}

fn winding_number(f: &dyn CharFunction, x0: f64, x1: f64, y0: f64, y1: f64, refine: usize) -> Option<i64> {
    let per_osc = 32.0 * (1 << refine) as f64;
    let base = 2500 * (1 << refine);
    let n_v = base.max((per_osc * (y1 - y0) / f.im_period()) as usize + 16);
    // Along horizontal sides the function only grows like e^(|x| T); sample
    // on the 1/T length scale.
    let n_h = base.max((per_osc * (x1 - x0) * 2.0 * std::f64::consts::PI / f.im_period()) as usize + 16);
    let c = [
        Complex64::new(x0, y0),
        Complex64::new(x1, y0),
        Complex64::new(x1, y1),
        Complex64::new(x0, y1),
    ];
    let mut total = Complex64::new(0.0, 0.0);
    for (i, n) in [(0, n_h), (1, n_v), (2, n_h), (3, n_v)] {
        total += contour_integral(f, c[i], c[(i + 1) % 4], n)?;
    }
    let w = total / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let rounded = w.re.round();
    if (w.re - rounded).abs() < 0.15 && w.im.abs() < 0.15 && rounded >= 0.0 {
        Some(rounded as i64)
    } else {
        None
    }
}

/// Smallest multiple of `unit`, at least `start`, by which a side can be
/// pulled inward so the contour clears every coordinate in `coords` by at
/// least `unit`.
fn clear_offset(coords: &[f64], side: f64, inward: f64, unit: f64, start: usize) -> Option<f64> {
    'outer: for k in start..start + 32 {
        let c = side + inward * k as f64 * unit;
        for v in coords {
            if (v - c).abs() < unit {
                continue 'outer;
            }
        }
        return Some(inward * k as f64 * unit);
    }
    None
}

/// Finds all roots in a box: Newton polishing from a uniform seed grid,
/// deterministic dedup, then verification of the count against the
/// argument-principle winding number over the box boundary.
pub fn find_roots(
    f: &dyn CharFunction,
    region: &RootBox,
    grid: GridDensity,
    mode: ExecMode,
) -> Result<Vec<ComplexRoot>> {
    let nx = grid.nx.max(2);
    let ny = grid.ny.max(2);
    let span_x = region.x_max - region.x_min;
    let span_y = region.omega_max - region.omega_min;
    if !(span_x > 0.0 && span_y > 0.0) || region.omega_min < 0.0 {
        return Err(Error::Invalid(format!("bad root box {region:?}")));
    }

    let candidates: Vec<Option<(Complex64, f64)>> = run_indexed(mode, nx * ny, |idx| {
        let i = idx % nx;
        let j = idx / nx;
        let seed = Complex64::new(
            region.x_min + span_x * i as f64 / (nx - 1) as f64,
            region.omega_min + span_y * j as f64 / (ny - 1) as f64,
        );
        newton_root(f, seed)
    });

    let edge = 1e-9 * (1.0 + span_x.max(span_y));
    let mut kept: Vec<(Complex64, f64)> = Vec::new();
    for (mut z, res) in candidates.into_iter().flatten() {
        if z.im < 0.0 {
            z = z.conj(); // real coefficients: roots come in conjugate pairs
        }
        if z.im.abs() < 1e-9 * z.re.abs().max(1.0) {
            z.im = 0.0;
        }
        if z.re < region.x_min - edge
            || z.re > region.x_max + edge
            || z.im < region.omega_min - edge
            || z.im > region.omega_max + edge
        {
            continue;
        }
        kept.push((z, res));
    }
    kept.sort_by(|a, b| {
        a.0.re
            .total_cmp(&b.0.re)
            .then(a.0.im.total_cmp(&b.0.im))
            .then(a.1.total_cmp(&b.1))
    });
    let mut roots: Vec<ComplexRoot> = Vec::new();
    for (z, res) in kept {
        let tol = 1e-6 * z.norm().max(1.0);
        let dup = roots.iter().position(|r| (r.lambda - z).norm() < tol);
        match dup {
            Some(i) => {
                if res < roots[i].residual {
                    roots[i] = ComplexRoot { lambda: z, residual: res, class: classify(z.re) };
                }
            }
            None => roots.push(ComplexRoot { lambda: z, residual: res, class: classify(z.re) }),
        }
    }

    // Winding verification against the argument principle. The contour is
    // pulled inward, side by side, until it clears every found root by a
    // few sample spacings: roots on or next to the requested boundary are
    // then exempt from the count instead of poisoning the integral, and a
    // deflated contour can never pick up unknown roots from outside the
    // box. A persisting mismatch means the seed grid missed a root.
    let symmetric = region.omega_min == 0.0;
    let res: Vec<f64> = roots.iter().map(|r| r.lambda.re).collect();
    let ims: Vec<f64> = roots.iter().map(|r| r.lambda.im).collect();
    let mut last = (roots.len() as i64, -1i64);
    for refine in 0..4usize {
        // Clearance must cover the sample spacing measured along each side:
        // vertical sides are sampled over the omega span, horizontal sides
        // over the x span.
        let per_osc = 32.0 * (1 << refine) as f64;
        let n_side = 2500usize << refine;
        let full_y = if symmetric { 2.0 * region.omega_max } else { span_y };
        let sv = full_y / (n_side as f64).max(per_osc * full_y / f.im_period());
        let sh = span_x
            / (n_side as f64).max(per_osc * span_x * 2.0 * std::f64::consts::PI / f.im_period());
        let ux = 4.0 * sv;
        let uy = 4.0 * sh;
        // Later attempts pull every side further inward, escaping roots the
        // seeding may have missed just outside the requested boundary.
        let start = refine * 8;
        let (Some(ex0), Some(ex1), Some(ey1)) = (
            clear_offset(&res, region.x_min, 1.0, ux, start),
            clear_offset(&res, region.x_max, -1.0, ux, start),
            clear_offset(&ims, region.omega_max, -1.0, uy, start),
        ) else {
            continue;
        };
        let (x0, x1, y1) = (region.x_min + ex0, region.x_max + ex1, region.omega_max + ey1);
        let y0 = if symmetric {
            -y1
        } else {
            match clear_offset(&ims, region.omega_min, 1.0, uy, start) {
                Some(ey0) => region.omega_min + ey0,
                None => continue,
            }
        };
        if x1 - x0 < 4.0 * ux || y1 <= y0.max(0.0) {
            continue;
        }
        let expected: i64 = roots
            .iter()
            .filter(|r| {
                r.lambda.re > x0 && r.lambda.re < x1 && r.lambda.im < y1 && (symmetric || r.lambda.im > y0)
            })
            .map(|r| if r.lambda.im == 0.0 || !symmetric { 1 } else { 2 })
            .sum();
        if let Some(w) = winding_number(f, x0, x1, y0, y1, refine) {
            last = (expected, w);
            if w == expected {
                return Ok(roots);
            }
        }
    }
    Err(Error::WindingMismatch { found: last.0 as usize, winding: last.1 })
}

/// Spec'd entry point: roots of the characteristic function of one model
/// equilibrium inside the box.
pub fn find_roots_in_box(
    model: &ModelInstance,
    kind: EquilibriumKind,
    region: &RootBox,
    grid: GridDensity,
    mode: ExecMode,
) -> Result<Vec<ComplexRoot>> {
    let f = char_function(model, kind)?;
    find_roots(&f, region, grid, mode)
}

/// Root with maximal real part inside the standard box `x` in `[-5, 5]`,
/// `omega` in `[0, 4 pi gamma / T]`.
///
/// The box is scanned in strips from the real axis up; the scan stops early
/// once the Gershgorin bound shows no root above the current strip can beat
/// the best real part found so far. Ties broken by larger `x`, then smaller
/// `omega`.
pub fn leading_root(model: &ModelInstance, kind: EquilibriumKind, mode: ExecMode) -> Result<ComplexRoot> {
    let f = char_function(model, kind)?;
    let delay = crate::dde::DelaySystem::delay(model);
    let gamma = model.gamma();
    let (x_min, x_max) = (-5.0, 5.0);
    let omega_top = 4.0 * std::f64::consts::PI * gamma / delay;
    let strip = 2.0 * std::f64::consts::PI / delay;
    let nx = ((x_max - x_min) / 0.2_f64).ceil() as usize + 1;
    let ny = 14;

    let mut best: Option<ComplexRoot> = None;
    let mut bottom = 0.0;
    while bottom < omega_top {
        if let Some(b) = &best {
            if bottom > f.im_bound(b.lambda.re) {
                break;
            }
        }
        let top = (bottom + strip).min(omega_top);
        let region = RootBox { x_min, x_max, omega_min: bottom, omega_max: top };
        let roots = find_roots(&f, &region, GridDensity { nx, ny }, mode)?;
        for r in roots {
            let better = match &best {
                None => true,
                Some(b) => {
                    r.lambda.re > b.lambda.re + 1e-12
                        || ((r.lambda.re - b.lambda.re).abs() <= 1e-12 && r.lambda.im < b.lambda.im)
                }
            };
            if better {
                best = Some(r);
            }
        }
        bottom = top;
    }
    best.ok_or_else(|| Error::NoConvergence("no characteristic root in the standard box".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    WeakZero,
    WeakPositive,
    StrongPositive,
}

/// Sampled `(omega, x)` pairs of an analytic spectrum curve. For weak curves
/// `omega` is the scaled imaginary part (`lambda = x + i gamma omega`); for
/// the strong curve it is the plain imaginary part.
#[derive(Debug, Clone)]
pub struct SpectrumCurve {
    pub kind: CurveKind,
    pub points: Vec<(f64, f64)>,
}

impl SpectrumCurve {
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "omega,x")?;
        for (omega, x) in &self.points {
            crate::io::write_row(w, &[*omega, *x])?;
        }
        Ok(())
    }
}

/// Closed-form curve carrying the weak spectrum.
pub fn weak_curve(model: &ModelInstance, kind: EquilibriumKind, omegas: &[f64]) -> Result<SpectrumCurve> {
    use crate::models::ModelInstance as M;
    match kind {
        EquilibriumKind::ZeroA => {
            let (t, ratio) = match model {
                M::Prototype(p) | M::LogisticQ(p) | M::LogisticQG(p) => {
                    let g0s = model.threshold()?;
                    // kappa g0 / alpha = (g0/g0*) kappa g0*/alpha and
                    // kappa g0*/alpha = 1 + mu q0/beta.
                    (p.delay, (p.kappa * p.g0 / p.alpha, p.kappa * g0s / p.alpha))
                }
                M::ReducedA(p) | M::ReducedB(p) => (p.delay, (p.kappa * p.g0 / p.alpha, 1.0)),
                M::CompetingFast(p) => {
                    let eq = model.zero_a_equilibrium()?;
                    let (qs, gs) = (eq.components[1], eq.components[2]);
                    (p.delay, (p.kappa * gs, p.tau_death + p.mu * qs))
                }
            };
            let (num, den) = ratio;
            let points = omegas
                .iter()
                .map(|&w| {
                    let x = (num / (den * den + w * w).sqrt()).ln() / t;
                    (w, x)
                })
                .collect();
            Ok(SpectrumCurve { kind: CurveKind::WeakZero, points })
        }
        EquilibriumKind::Positive => {
            let p = match model {
                M::Prototype(p) => p,
                _ => {
                    return Err(Error::Invalid(
                        "weak curve of the positive equilibrium is available for the prototype model".into(),
                    ))
                }
            };
            let eq = model.positive_equilibrium(EquilibriumMode::Exact)?;
            let (a, q, g) = (eq.components[0], eq.components[1], eq.components[2]);
            let sa = a * p.s + p.beta;
            let den0 = sa + p.beta * p.mu * q;
            let w2 = 2.0 * a * p.s * (p.beta + p.mu * q) + a * a * p.s * p.s + p.beta * p.beta
                + (p.mu * q + 1.0) * (p.mu * q + 1.0);
            let points = omegas
                .iter()
                .map(|&w| {
                    let num = g * g * p.kappa * p.kappa * (sa * sa + w * w);
                    let den = den0 * den0 + w2 * w * w + w.powi(4);
                    (w, (num / den).ln() / (2.0 * p.delay))
                })
                .collect();
            Ok(SpectrumCurve { kind: CurveKind::WeakPositive, points })
        }
    }
}

/// Implicit curve carrying the strong spectrum of the positive prototype
/// equilibrium; solved for `x(omega)` by bisection on `[-20, 5]`. Points
/// without a sign change are skipped.
pub fn strong_curve(model: &ModelInstance, omegas: &[f64]) -> Result<SpectrumCurve> {
    use crate::models::ModelInstance as M;
    let p = match model {
        M::Prototype(p) => p,
        _ => return Err(Error::Invalid("strong curve is available for the prototype model".into())),
    };
    let eq = model.positive_equilibrium(EquilibriumMode::Exact)?;
    let (a, q, g) = (eq.components[0], eq.components[1], eq.components[2]);
    let sa = a * p.s + p.beta;
    let den0 = sa + p.beta * p.mu * q;
    let phi = |x: f64, w: f64| {
        g * g * p.kappa * p.kappa * sa * sa * ((p.alpha + x) * (p.alpha + x) + w * w)
            - (2.0 * p.delay * x).exp() * ((a * p.k + p.alpha + x) * (a * p.k + p.alpha + x) + w * w) * den0 * den0
    };
    let mut points = Vec::new();
    for &w in omegas {
        let (mut lo, mut hi) = (-20.0, 5.0);
        let (flo, fhi) = (phi(lo, w), phi(hi, w));
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo < 1e-13 * (1.0 + mid.abs()) {
                break;
            }
            if phi(mid, w).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        points.push((w, 0.5 * (lo + hi)));
    }
    Ok(SpectrumCurve { kind: CurveKind::StrongPositive, points })
}

/// CSV export `re,im,residual,class`, one row per stored root.
pub fn write_roots_csv<W: std::io::Write>(w: &mut W, roots: &[ComplexRoot]) -> std::io::Result<()> {
    writeln!(w, "re,im,residual,class")?;
    for r in roots {
        writeln!(
            w,
            "{},{},{},{}",
            crate::io::fmt_sig(r.lambda.re),
            crate::io::fmt_sig(r.lambda.im),
            crate::io::fmt_sig(r.residual),
            r.class.as_str()
        )?;
    }
    Ok(())
}
