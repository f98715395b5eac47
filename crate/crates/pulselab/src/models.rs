//! The six delayed predator-prey models: right-hand sides, transcritical
//! thresholds, equilibria (exact and first-order), parameter conditions,
//! and the linearization data used by the spectrum module.
//!
//! All models share the structure of a fast predator `A` whose reproduction
//! is delayed by the maturity time `T`, coupled to a slow prey `G` and (in
//! the three-species variants) a fast competitor `Q`. The time-scale ratio
//! `gamma` multiplies the fast equations.

use serde::Serialize;

use crate::dde::DelaySystem;
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ModelId {
    Prototype,
    LogisticQ,
    LogisticQG,
    CompetingFast,
    ReducedA,
    ReducedB,
}

impl ModelId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelId::Prototype => "prototype",
            ModelId::LogisticQ => "logisticQ",
            ModelId::LogisticQG => "logisticQG",
            ModelId::CompetingFast => "competingFast",
            ModelId::ReducedA => "reducedA",
            ModelId::ReducedB => "reducedB",
        }
    }

    pub fn parse(s: &str) -> Option<ModelId> {
        match s {
            "prototype" => Some(ModelId::Prototype),
            "logisticQ" => Some(ModelId::LogisticQ),
            "logisticQG" => Some(ModelId::LogisticQG),
            "competingFast" => Some(ModelId::CompetingFast),
            "reducedA" => Some(ModelId::ReducedA),
            "reducedB" => Some(ModelId::ReducedB),
            _ => None,
        }
    }
}

/// Parameters of the three-species models (prototype and the two logistic
/// variants). `delay` is the maturity delay of the predator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeSpeciesParams {
    pub gamma: f64,
    pub delay: f64,
    pub kappa: f64,
    pub mu: f64,
    pub q0: f64,
    pub beta: f64,
    pub s: f64,
    pub k: f64,
    pub g0: f64,
    pub alpha: f64,
}

/// Parameters of the competing-fast-species model. The natural death rate
/// `tau_death` of the predator is the bifurcation parameter here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompetingParams {
    pub gamma: f64,
    pub delay: f64,
    pub kappa: f64,
    pub mu: f64,
    pub nu: f64,
    pub beta: f64,
    pub s: f64,
    pub k: f64,
    pub r: f64,
    pub m: f64,
    pub f: f64,
    pub g0: f64,
    pub alpha: f64,
    pub tau_death: f64,
}

/// Parameters of the two-species reduced models (no competitor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSpeciesParams {
    pub gamma: f64,
    pub delay: f64,
    pub kappa: f64,
    pub k: f64,
    pub g0: f64,
    pub alpha: f64,
}

/// A model identifier together with its parameter record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ModelInstance {
    Prototype(ThreeSpeciesParams),
    LogisticQ(ThreeSpeciesParams),
    LogisticQG(ThreeSpeciesParams),
    CompetingFast(CompetingParams),
    ReducedA(TwoSpeciesParams),
    ReducedB(TwoSpeciesParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    ZeroA,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumMode {
    Exact,
    Asymptotic,
}

/// An equilibrium with its first-order correction coefficients (where the
/// model admits them), the threshold of the transcritical bifurcation and
/// the signed offset of the current parameters from it.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumInfo {
    pub kind: EquilibriumKind,
    /// `(A, Q, G)` for three-species models, `(A, G)` for two-species ones.
    pub components: Vec<f64>,
    /// First-order coefficients of the expansion in the offset.
    pub correction: Option<Vec<f64>>,
    /// `g0*` for the g0-driven models, `tau*` for the competing model.
    pub threshold: f64,
    /// `g0 - g0*`, or `tau* - tau_death` for the competing model.
    pub offset: f64,
}

/// One named parameter inequality with both sides evaluated numerically.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub lhs: f64,
    pub relation: &'static str,
    pub rhs: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub model: ModelId,
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Linearization at an equilibrium, in the scaled form
/// `diag(dscale) * y' = J0 * y + Jd * y(t - T)`.
///
/// `dscale` is `1/gamma` on the fast rows and `1` on the slow row, so the
/// entries of `J0`/`Jd` stay O(1) and the characteristic determinant is
/// numerically well behaved.
#[derive(Debug, Clone, Copy)]
pub struct Linearization {
    pub dim: usize,
    pub dscale: [f64; MAX_DIM],
    pub j0: [[f64; MAX_DIM]; MAX_DIM],
    pub jd: [[f64; MAX_DIM]; MAX_DIM],
}

fn gt(name: &str, lhs: f64, rhs: f64) -> ConditionCheck {
    ConditionCheck {
        name: name.to_string(),
        lhs,
        relation: ">",
        rhs,
        satisfied: lhs > rhs,
    }
}

fn lt(name: &str, lhs: f64, rhs: f64) -> ConditionCheck {
    ConditionCheck {
        name: name.to_string(),
        lhs,
        relation: "<",
        rhs,
        satisfied: lhs < rhs,
    }
}

impl ModelInstance {
    pub fn id(&self) -> ModelId {
        match self {
            ModelInstance::Prototype(_) => ModelId::Prototype,
            ModelInstance::LogisticQ(_) => ModelId::LogisticQ,
            ModelInstance::LogisticQG(_) => ModelId::LogisticQG,
            ModelInstance::CompetingFast(_) => ModelId::CompetingFast,
            ModelInstance::ReducedA(_) => ModelId::ReducedA,
            ModelInstance::ReducedB(_) => ModelId::ReducedB,
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            ModelInstance::Prototype(p) | ModelInstance::LogisticQ(p) | ModelInstance::LogisticQG(p) => p.gamma,
            ModelInstance::CompetingFast(p) => p.gamma,
            ModelInstance::ReducedA(p) | ModelInstance::ReducedB(p) => p.gamma,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        match &mut self {
            ModelInstance::Prototype(p) | ModelInstance::LogisticQ(p) | ModelInstance::LogisticQG(p) => p.gamma = gamma,
            ModelInstance::CompetingFast(p) => p.gamma = gamma,
            ModelInstance::ReducedA(p) | ModelInstance::ReducedB(p) => p.gamma = gamma,
        }
        self
    }

    /// The bifurcation parameter: `g0`, or `tau_death` for the competing model.
    pub fn bifurcation_parameter(&self) -> f64 {
        match self {
            ModelInstance::CompetingFast(p) => p.tau_death,
            ModelInstance::Prototype(p) | ModelInstance::LogisticQ(p) | ModelInstance::LogisticQG(p) => p.g0,
            ModelInstance::ReducedA(p) | ModelInstance::ReducedB(p) => p.g0,
        }
    }

    pub fn with_bifurcation_parameter(mut self, v: f64) -> Self {
        match &mut self {
            ModelInstance::CompetingFast(p) => p.tau_death = v,
            ModelInstance::Prototype(p) | ModelInstance::LogisticQ(p) | ModelInstance::LogisticQG(p) => p.g0 = v,
            ModelInstance::ReducedA(p) | ModelInstance::ReducedB(p) => p.g0 = v,
        }
        self
    }

    pub fn component_names(&self) -> &'static [&'static str] {
        if self.dim() == 3 {
            &["A", "Q", "G"]
        } else {
            &["A", "G"]
        }
    }

    /// Threshold of the transcritical bifurcation: `g0*` or `tau*`.
    pub fn threshold(&self) -> Result<f64> {
        match self {
            ModelInstance::Prototype(p) | ModelInstance::LogisticQ(p) | ModelInstance::LogisticQG(p) => {
                Ok(p.alpha * (1.0 + p.mu * p.q0 / p.beta) / p.kappa)
            }
            ModelInstance::CompetingFast(p) => {
                let (qs, gs) = self.competing_zero_a()?;
                Ok(p.kappa * gs - p.mu * qs)
            }
            ModelInstance::ReducedA(p) | ModelInstance::ReducedB(p) => Ok(p.alpha / p.kappa),
        }
    }

    /// Signed distance from the threshold: `g0 - g0*`, or `tau* - tau_death`.
    pub fn offset(&self) -> Result<f64> {
        let thr = self.threshold()?;
        Ok(match self {
            ModelInstance::CompetingFast(p) => thr - p.tau_death,
            _ => self.bifurcation_parameter() - thr,
        })
    }

    /// `(Q*, G*)` of the zero-A equilibrium of the competing model, from the
    /// quadratic `m nu G^2 + (alpha r - m beta) G - g0 r = 0`.
    fn competing_zero_a(&self) -> Result<(f64, f64)> {
        let p = match self {
            ModelInstance::CompetingFast(p) => p,
            _ => return Err(Error::Invalid("not the competing-fast model".into())),
        };
        if p.nu * p.g0 <= p.alpha * p.beta {
            return Err(Error::NoEquilibrium(format!(
                "nu*g0 = {} <= alpha*beta = {}: no positive zero-A equilibrium",
                p.nu * p.g0,
                p.alpha * p.beta
            )));
        }
        let a = p.m * p.nu;
        let b = p.alpha * p.r - p.m * p.beta;
        let c = -p.g0 * p.r;
        let gs = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
        let qs = (p.nu * gs - p.beta) / p.r;
        Ok((qs, gs))
    }

    /// The equilibrium with extinct predator.
    pub fn zero_a_equilibrium(&self) -> Result<EquilibriumInfo> {
        let threshold = self.threshold()?;
        let offset = self.offset()?;
        let components = match self {
            ModelInstance::Prototype(p) | ModelInstance::LogisticQ(p) | ModelInstance::LogisticQG(p) => {
                vec![0.0, p.q0 / p.beta, p.g0 / p.alpha]
            }
            ModelInstance::CompetingFast(_) => {
                let (qs, gs) = self.competing_zero_a()?;
                vec![0.0, qs, gs]
            }
            ModelInstance::ReducedA(p) | ModelInstance::ReducedB(p) => vec![0.0, p.g0 / p.alpha],
        };
        Ok(EquilibriumInfo {
            kind: EquilibriumKind::ZeroA,
            components,
            correction: None,
            threshold,
            offset,
        })
    }

    /// Additional degenerate equilibria some variants carry (all with more
    /// than one extinct species); they are unstable for every `g0 > 0`.
    pub fn other_equilibria(&self) -> Vec<Vec<f64>> {
        match self {
            ModelInstance::LogisticQ(p) => vec![vec![0.0, 0.0, p.g0 / p.alpha]],
            ModelInstance::LogisticQG(p) => vec![vec![0.0, 0.0, p.g0 / p.alpha], vec![0.0, 0.0, 0.0]],
            ModelInstance::ReducedB(_) => vec![vec![0.0, 0.0]],
            _ => Vec::new(),
        }
    }

    /// First-order correction coefficients of the positive equilibrium in
    /// the threshold offset. For the two logistic-G / reduced models these
    /// coefficients are exact, not only first order.
    pub fn correction_coefficients(&self) -> Result<Vec<f64>> {
        match self {
            ModelInstance::Prototype(p) => {
                let g0s = self.threshold()?;
                let at = 1.0 / (p.k * g0s / p.alpha - p.alpha * p.mu * p.s * p.q0 / (p.kappa * p.beta * p.beta));
                let qt = 1.0 / (p.alpha * p.mu / p.kappa - p.k * g0s * p.beta * p.beta / (p.alpha * p.s * p.q0));
                let gt = p.mu / p.kappa * qt;
                Ok(vec![at, qt, gt])
            }
            ModelInstance::LogisticQ(p) => {
                let g0s = self.threshold()?;
                let at = 1.0 / (p.k * g0s / p.alpha - p.alpha * p.s * p.mu / (p.beta * p.kappa));
                let qt = 1.0 / (p.mu * p.alpha / p.kappa - p.k * g0s * p.beta / (p.alpha * p.s));
                let gt = p.mu / p.kappa * qt;
                Ok(vec![at, qt, gt])
            }
            ModelInstance::LogisticQG(p) => {
                let d = p.k * p.beta * p.kappa - p.s * p.alpha * p.mu;
                let at = p.beta * p.kappa / d;
                let qt = -p.kappa * p.s / d;
                let gt = -p.mu * p.s / d;
                Ok(vec![at, qt, gt])
            }
            ModelInstance::CompetingFast(p) => {
                let (qs, gs) = self.competing_zero_a()?;
                let fstar = self.competing_fstar(qs, gs);
                let b1 = p.g0 * p.r / gs + gs * p.m * p.nu;
                let b2 = p.g0 * p.s / gs + gs * p.k * p.nu;
                Ok(vec![b1 / fstar, -b2 / fstar, gs * (p.m * p.s - p.k * p.r) / fstar])
            }
            ModelInstance::ReducedA(p) => Ok(vec![p.kappa / p.k, 0.0]),
            ModelInstance::ReducedB(p) => Ok(vec![1.0 / p.k, 0.0]),
        }
    }

    fn competing_fstar(&self, qs: f64, gs: f64) -> f64 {
        let p = match self {
            ModelInstance::CompetingFast(p) => p,
            _ => unreachable!(),
        };
        let _ = qs;
        p.f * (p.g0 * p.r / gs + gs * p.m * p.nu) - p.mu * (p.g0 * p.s / gs + gs * p.k * p.nu)
            + p.kappa * gs * (p.k * p.r - p.m * p.s)
    }

    /// The positive (coexistence) equilibrium.
    ///
    /// Exact mode reduces each model to a scalar equation in `A` (the
    /// remaining components are explicit in `A`), brackets a sign change and
    /// polishes with Newton. Asymptotic mode evaluates the first-order
    /// expansion around the threshold.
    pub fn positive_equilibrium(&self, mode: EquilibriumMode) -> Result<EquilibriumInfo> {
        let threshold = self.threshold()?;
        let offset = self.offset()?;
        let correction = self.correction_coefficients()?;
        let components = match mode {
            EquilibriumMode::Asymptotic => {
                let base = match self {
                    ModelInstance::Prototype(p) | ModelInstance::LogisticQ(p) | ModelInstance::LogisticQG(p) => {
                        vec![0.0, p.q0 / p.beta, threshold / p.alpha]
                    }
                    ModelInstance::CompetingFast(_) => {
                        let (qs, gs) = self.competing_zero_a()?;
                        vec![0.0, qs, gs]
                    }
                    ModelInstance::ReducedA(p) | ModelInstance::ReducedB(p) => {
                        vec![0.0, threshold / p.alpha]
                    }
                };
                base.iter().zip(&correction).map(|(b, c)| b + c * offset).collect()
            }
            EquilibriumMode::Exact => self.positive_equilibrium_exact()?,
        };
        Ok(EquilibriumInfo {
            kind: EquilibriumKind::Positive,
            components,
            correction: Some(correction),
            threshold,
            offset,
        })
    }

    fn positive_equilibrium_exact(&self) -> Result<Vec<f64>> {
        match self {
            // Closed forms first.
            ModelInstance::LogisticQG(p) => {
                let delta = self.offset()?;
                let d = p.k * p.beta * p.kappa - p.s * p.alpha * p.mu;
                let a = p.beta * p.kappa * delta / d;
                let q = p.q0 / p.beta - p.kappa * p.s * delta / d;
                let g = self.threshold()? / p.alpha - p.mu * p.s * delta / d;
                if a <= 0.0 || q <= 0.0 || g <= 0.0 {
                    return Err(Error::NoEquilibrium(format!(
                        "no positive equilibrium at g0 = {} (components {a}, {q}, {g})",
                        p.g0
                    )));
                }
                Ok(vec![a, q, g])
            }
            ModelInstance::ReducedA(p) => {
                let delta = self.offset()?;
                if delta <= 0.0 {
                    return Err(Error::NoEquilibrium(format!("g0 = {} at or below threshold", p.g0)));
                }
                Ok(vec![p.kappa * delta / p.k, 1.0 / p.kappa])
            }
            ModelInstance::ReducedB(p) => {
                let delta = self.offset()?;
                if delta <= 0.0 {
                    return Err(Error::NoEquilibrium(format!("g0 = {} at or below threshold", p.g0)));
                }
                Ok(vec![delta / p.k, 1.0 / p.kappa])
            }
            // Scalar reductions solved numerically.
            ModelInstance::Prototype(p) => {
                let residual = |a: f64| p.kappa * p.g0 / (p.alpha + p.k * a) - p.mu * p.q0 / (p.beta + p.s * a) - 1.0;
                let a_max = p.kappa * p.g0 / (p.k * p.alpha) + 1.0;
                let a = solve_scalar_equilibrium(&residual, a_max)?;
                Ok(vec![a, p.q0 / (p.beta + p.s * a), p.g0 / (p.alpha + p.k * a)])
            }
            ModelInstance::LogisticQ(p) => {
                let residual = |a: f64| p.kappa * p.g0 / (p.alpha + p.k * a) - p.mu * (p.q0 - p.s * a) / p.beta - 1.0;
                let a_max = (p.kappa * p.g0 / (p.k * p.alpha) + 1.0).min(p.q0 / p.s * (1.0 - 1e-12));
                let a = solve_scalar_equilibrium(&residual, a_max)?;
                Ok(vec![a, (p.q0 - p.s * a) / p.beta, p.g0 / (p.alpha + p.k * a)])
            }
            ModelInstance::CompetingFast(p) => {
                let denom = p.mu * p.nu - p.kappa * p.r;
                if denom.abs() < 1e-14 {
                    return Err(Error::Invalid("mu*nu == kappa*r: scalar reduction degenerate".into()));
                }
                let g_of = |a: f64| (p.mu * p.beta - p.tau_death * p.r + a * (p.mu * p.s - p.f * p.r)) / denom;
                let q_of = |a: f64, g: f64| (p.kappa * g - p.tau_death - p.f * a) / p.mu;
                let residual = |a: f64| {
                    let g = g_of(a);
                    let q = q_of(a, g);
                    p.g0 - g * (p.alpha + p.k * a + p.m * q)
                };
                let a_max = p.kappa * p.g0 / (p.k * p.alpha) + 1.0;
                let a = solve_scalar_equilibrium(&residual, a_max)?;
                let g = g_of(a);
                let q = q_of(a, g);
                if q <= 0.0 || g <= 0.0 {
                    return Err(Error::NoEquilibrium(format!(
                        "equilibrium not positive at tau_death = {} (components {a}, {q}, {g})",
                        p.tau_death
                    )));
                }
                Ok(vec![a, q, g])
            }
        }
    }

    /// Evaluates every parameter inequality relevant to the model, returning
    /// both sides numerically so margins can be asserted.
    pub fn check_conditions(&self) -> Result<ConditionReport> {
        let checks = match self {
            ModelInstance::Prototype(p) => {
                let g0s = self.threshold()?;
                let w = 2.0 * std::f64::consts::PI / p.delay;
                vec![
                    gt(
                        "positive_exists_above_threshold",
                        p.k * g0s / (p.alpha * p.alpha),
                        p.mu * p.s * p.q0 / (p.kappa * p.beta * p.beta),
                    ),
                    gt(
                        "positive_hopf_cascade",
                        p.mu * p.q0 * p.s,
                        p.beta * p.beta * g0s * p.kappa * p.k / (p.alpha * p.alpha + w * w),
                    ),
                ]
            }
            ModelInstance::LogisticQ(p) => {
                let g0s = self.threshold()?;
                let w = 2.0 * std::f64::consts::PI / p.delay;
                vec![
                    gt(
                        "positive_exists_above_threshold",
                        p.k * g0s / (p.alpha * p.alpha),
                        p.s * p.mu / (p.beta * p.kappa),
                    ),
                    lt(
                        "positive_hopf_cascade",
                        p.k * g0s / (p.alpha * p.alpha + w * w),
                        p.s * p.mu / (p.beta * p.kappa),
                    ),
                ]
            }
            ModelInstance::LogisticQG(p) => {
                let g0s = self.threshold()?;
                let w = 2.0 * std::f64::consts::PI / p.delay;
                vec![
                    gt("positive_exists_above_threshold", p.k * p.beta * p.kappa, p.s * p.alpha * p.mu),
                    gt(
                        "positive_hopf_cascade",
                        p.alpha * p.mu * p.s,
                        g0s * g0s * p.kappa * p.beta * p.k / (g0s * g0s + w * w),
                    ),
                ]
            }
            ModelInstance::CompetingFast(p) => {
                let (qs, gs) = self.competing_zero_a()?;
                let _ = qs;
                let fstar = self.competing_fstar(qs, gs);
                let w = 2.0 * std::f64::consts::PI / p.delay;
                vec![
                    gt("zero_a_positive", p.nu * p.g0, p.alpha * p.beta),
                    gt("interspecific_dominates", p.mu * p.s, p.f * p.r),
                    gt("positive_exists_below_threshold", fstar, 0.0),
                    lt(
                        "positive_hopf_cascade",
                        fstar,
                        w * w * p.r * (p.mu * p.s - p.f * p.r) / (p.g0 * p.r / gs + gs * p.m * p.nu),
                    ),
                ]
            }
            ModelInstance::ReducedA(_) | ModelInstance::ReducedB(_) => {
                // For the reduced models the Hopf points of the positive
                // equilibrium sit below the threshold (negative offset), so
                // the cascade-above-threshold condition fails structurally.
                let d1 = crate::hopf::hopf_positive_asymptotic(self, 1)?.delta;
                vec![gt("positive_hopf_cascade", d1, 0.0)]
            }
        };
        Ok(ConditionReport { model: self.id(), checks })
    }

    /// Linearization `diag(dscale) y' = J0 y + Jd y(t-T)` at an equilibrium
    /// point (given by its components).
    pub fn linearization(&self, at: &[f64]) -> Linearization {
        let mut lin = Linearization {
            dim: self.dim(),
            dscale: [1.0; MAX_DIM],
            j0: [[0.0; MAX_DIM]; MAX_DIM],
            jd: [[0.0; MAX_DIM]; MAX_DIM],
        };
        match self {
            ModelInstance::Prototype(p) | ModelInstance::LogisticQ(p) | ModelInstance::LogisticQG(p) => {
                let (a, q, g) = (at[0], at[1], at[2]);
                lin.dscale = [1.0 / p.gamma, 1.0 / p.gamma, 1.0];
                lin.j0[0][0] = -1.0 - p.mu * q;
                lin.j0[0][1] = -p.mu * a;
                lin.jd[0][0] = p.kappa * g;
                lin.jd[0][2] = p.kappa * a;
                match self {
                    ModelInstance::Prototype(_) => {
                        lin.j0[1][0] = -p.s * q;
                        lin.j0[1][1] = -p.beta - p.s * a;
                    }
                    _ => {
                        lin.j0[1][0] = -p.s * q;
                        lin.j0[1][1] = p.q0 - 2.0 * p.beta * q - p.s * a;
                    }
                }
                match self {
                    ModelInstance::LogisticQG(_) => {
                        lin.j0[2][0] = -p.k * g;
                        lin.j0[2][2] = p.g0 - 2.0 * p.alpha * g - p.k * a;
                    }
                    _ => {
                        lin.j0[2][0] = -p.k * g;
                        lin.j0[2][2] = -p.alpha - p.k * a;
                    }
                }
            }
            ModelInstance::CompetingFast(p) => {
                let (a, q, g) = (at[0], at[1], at[2]);
                lin.dscale = [1.0 / p.gamma, 1.0 / p.gamma, 1.0];
                lin.j0[0][0] = -p.tau_death - p.mu * q - 2.0 * p.f * a;
                lin.j0[0][1] = -p.mu * a;
                lin.jd[0][0] = p.kappa * g;
                lin.jd[0][2] = p.kappa * a;
                lin.j0[1][0] = -p.s * q;
                lin.j0[1][1] = p.nu * g - p.beta - p.s * a - 2.0 * p.r * q;
                lin.j0[1][2] = p.nu * q;
                lin.j0[2][0] = -p.k * g;
                lin.j0[2][1] = -p.m * g;
                lin.j0[2][2] = -p.alpha - p.k * a - p.m * q;
            }
            ModelInstance::ReducedA(p) => {
                let (a, g) = (at[0], at[1]);
                lin.dscale = [1.0 / p.gamma, 1.0, 1.0];
                lin.j0[0][0] = -1.0;
                lin.jd[0][0] = p.kappa * g;
                lin.jd[0][1] = p.kappa * a;
                lin.j0[1][0] = -p.k * g;
                lin.j0[1][1] = -p.alpha - p.k * a;
            }
            ModelInstance::ReducedB(p) => {
                let (a, g) = (at[0], at[1]);
                lin.dscale = [1.0 / p.gamma, 1.0, 1.0];
                lin.j0[0][0] = -1.0;
                lin.jd[0][0] = p.kappa * g;
                lin.jd[0][1] = p.kappa * a;
                lin.j0[1][0] = -p.k * g;
                lin.j0[1][1] = p.g0 - 2.0 * p.alpha * g - p.k * a;
            }
        }
        lin
    }

    /// Default initial history: the zero-A equilibrium with a small positive
    /// predator seed, which lies in the basin of the pulsating attractor.
    pub fn default_history(&self) -> Result<Vec<f64>> {
        let mut y = self.zero_a_equilibrium()?.components;
        y[0] = 1e-3;
        Ok(y)
    }

    /// History seeding the fundamental one-pulse-per-period train: the
    /// zero-A equilibrium plus a single narrow predator bump of the given
    /// area. Constant histories escape the weakly unstable equilibrium only
    /// after hundreds of delay periods and, far from threshold, can land on
    /// multi-pulse attractors; a localized seed locks within tens of
    /// periods.
    pub fn pulse_seed_history(&self, area: f64) -> Result<impl Fn(f64, &mut [f64]) + Sync + Clone> {
        use crate::dde::DelaySystem;
        let base = self.zero_a_equilibrium()?.components;
        let delay = self.delay();
        let width = delay / 20.0;
        let center = -0.5 * delay;
        Ok(move |t: f64, out: &mut [f64]| {
            out.copy_from_slice(&base);
            let z = (t - center) / width;
            out[0] = area / (width * std::f64::consts::PI.sqrt()) * (-z * z).exp();
        })
    }
}

impl DelaySystem for ModelInstance {
    fn dim(&self) -> usize {
        match self {
            ModelInstance::ReducedA(_) | ModelInstance::ReducedB(_) => 2,
            _ => 3,
        }
    }

    fn delay(&self) -> f64 {
        match self {
            ModelInstance::Prototype(p) | ModelInstance::LogisticQ(p) | ModelInstance::LogisticQG(p) => p.delay,
            ModelInstance::CompetingFast(p) => p.delay,
            ModelInstance::ReducedA(p) | ModelInstance::ReducedB(p) => p.delay,
        }
    }

    fn rhs(&self, _t: f64, y: &[f64], yd: &[f64], dydt: &mut [f64]) {
        match self {
            ModelInstance::Prototype(p) => {
                let (a, q, g) = (y[0], y[1], y[2]);
                dydt[0] = p.gamma * (-a + p.kappa * yd[2] * yd[0] - p.mu * q * a);
                dydt[1] = p.gamma * (p.q0 - p.beta * q - p.s * a * q);
                dydt[2] = p.g0 - p.alpha * g - p.k * a * g;
            }
            ModelInstance::LogisticQ(p) => {
                let (a, q, g) = (y[0], y[1], y[2]);
                dydt[0] = p.gamma * (-a + p.kappa * yd[2] * yd[0] - p.mu * q * a);
                dydt[1] = p.gamma * (p.q0 * q - p.beta * q * q - p.s * a * q);
                dydt[2] = p.g0 - p.alpha * g - p.k * a * g;
            }
            ModelInstance::LogisticQG(p) => {
                let (a, q, g) = (y[0], y[1], y[2]);
                dydt[0] = p.gamma * (-a + p.kappa * yd[2] * yd[0] - p.mu * q * a);
                dydt[1] = p.gamma * (p.q0 * q - p.beta * q * q - p.s * a * q);
                dydt[2] = p.g0 * g - p.alpha * g * g - p.k * a * g;
            }
            ModelInstance::CompetingFast(p) => {
                let (a, q, g) = (y[0], y[1], y[2]);
                dydt[0] = p.gamma * (p.kappa * yd[2] * yd[0] - p.tau_death * a - p.mu * q * a - p.f * a * a);
                dydt[1] = p.gamma * (p.nu * g * q - p.beta * q - p.s * a * q - p.r * q * q);
                dydt[2] = p.g0 - p.alpha * g - p.k * a * g - p.m * q * g;
            }
            ModelInstance::ReducedA(p) => {
                let (a, g) = (y[0], y[1]);
                dydt[0] = p.gamma * (-a + p.kappa * yd[1] * yd[0]);
                dydt[1] = p.g0 - p.alpha * g - p.k * a * g;
            }
            ModelInstance::ReducedB(p) => {
                let (a, g) = (y[0], y[1]);
                dydt[0] = p.gamma * (-a + p.kappa * yd[1] * yd[0]);
                dydt[1] = p.g0 * g - p.alpha * g * g - p.k * a * g;
            }
        }
    }
}

/// Bracket a sign change of `f` on `(0, a_max]` and bisect + Newton-polish
/// the root. The residual at `0+` has the sign of the threshold offset, so a
/// coarse forward scan is enough to find the bracket.
fn solve_scalar_equilibrium(f: &dyn Fn(f64) -> f64, a_max: f64) -> Result<f64> {
    const SCAN: usize = 512;
    let f0 = f(1e-300);
    let mut lo = 0.0;
    let mut flo = f0;
    let mut hi = None;
    for i in 1..=SCAN {
        let a = a_max * i as f64 / SCAN as f64;
        let fa = f(a);
        if fa == 0.0 {
            return Ok(a);
        }
        if fa.signum() != flo.signum() {
            hi = Some((a, fa));
            break;
        }
        lo = a;
        flo = fa;
    }
    let (mut hi, mut fhi) = hi.ok_or_else(|| {
        Error::NoEquilibrium(format!("no sign change of the equilibrium equation in (0, {a_max}]"))
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-15 * (1.0 + mid.abs()) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let _ = fhi;
    // Newton polish with a central difference slope.
    let mut a = 0.5 * (lo + hi);
    for _ in 0..8 {
        let h = 1e-8 * (1.0 + a.abs());
        let d = (f(a + h) - f(a - h)) / (2.0 * h);
        if d == 0.0 {
            break;
        }
        let step = f(a) / d;
        let next = a - step;
        if !next.is_finite() || next < lo - (hi - lo) || next > hi + (hi - lo) {
            break;
        }
        a = next;
        if step.abs() < 1e-16 * (1.0 + a.abs()) {
            break;
        }
    }
    Ok(a)
}

/// Named parameter presets used throughout the test suites and shipped as
/// CLI presets.
pub mod presets {
    use super::*;

    /// Prototype set with the pulsating attractor (threshold `g0* = 3`).
    pub fn fig4() -> ModelInstance {
        ModelInstance::Prototype(ThreeSpeciesParams {
            gamma: 200.0,
            delay: 1.0,
            kappa: 0.5,
            mu: 0.5,
            q0: 1.0,
            beta: 1.0,
            s: 1.0,
            k: 1.0,
            g0: 3.1,
            alpha: 1.0,
        })
    }

    /// Competing-fast-species set, on the pulsating side of the threshold.
    pub fn fig7() -> ModelInstance {
        ModelInstance::CompetingFast(CompetingParams {
            gamma: 200.0,
            delay: 1.0,
            kappa: 2.0,
            mu: 1.0,
            nu: 2.0,
            beta: 1.0,
            s: 3.0,
            k: 4.0,
            r: 3.0,
            m: 0.1,
            f: 0.05,
            g0: 0.6,
            alpha: 0.3,
            tau_death: 2.0,
        })
    }

    /// Prototype set far from threshold, used for the pulse-profile overlay.
    pub fn fig10() -> ModelInstance {
        ModelInstance::Prototype(ThreeSpeciesParams {
            gamma: 100.0,
            delay: 1.0,
            kappa: 0.6,
            mu: 0.5,
            q0: 1.0,
            beta: 1.0,
            s: 1.7,
            k: 1.0,
            g0: 5.672,
            alpha: 1.0,
        })
    }

    /// Base set for the gamma-scaling sweep (same parameters as `fig4`).
    pub fn scaling_base() -> ModelInstance {
        fig4()
    }
}
