//! The four bivariate models: a correlated normal pair and two independent
//! shifted exponentials (location families), and independent gamma and
//! power-family variables (scale families).
//!
//! For each model this module exposes sampling of (X1, X2), the density of
//! the contrast statistic D (X2 - X1 for location, X2 / X1 for scale), and
//! the conditional law of the pivot Z_i given D = t as a CDF and a median.
//! The conditional quantities depend on the parameters only through the gap
//! λ (θ2 - θ1 or θ2 / θ1).

pub mod variates;

use std::f64::consts::LN_2;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quadrature::{integrate, truncation_window, QuadOptions};
use crate::specfun::{gamma_median, ln_gamma, normal_cdf, normal_pdf, regularized_gamma_p};

/// ln(1e16): integrands are cut where they fall below 1e-16 of their peak.
const LN_CUTOFF: f64 = 36.841_361_487_904_734;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Location,
    Scale,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemKind::Location => f.write_str("location"),
            ProblemKind::Scale => f.write_str("scale"),
        }
    }
}

/// Which of the two ordered parameters is being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    First,
    Second,
}

impl Component {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Component::First),
            2 => Ok(Component::Second),
            _ => domain(format!("component must be 1 or 2, got {i}")),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Component::First => 1,
            Component::Second => 2,
        }
    }
}

/// An ordered parameter pair θ1 ≤ θ2 (with θ1 > 0 for scale problems).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedParams {
    theta1: f64,
    theta2: f64,
    kind: ProblemKind,
}

impl RestrictedParams {
    pub fn location(theta1: f64, theta2: f64) -> Result<Self> {
        if !theta1.is_finite() || !theta2.is_finite() {
            return domain("location parameters must be finite");
        }
        if theta1 > theta2 {
            return domain(format!("order restriction violated: {theta1} > {theta2}"));
        }
        Ok(Self {
            theta1,
            theta2,
            kind: ProblemKind::Location,
        })
    }

    pub fn scale(theta1: f64, theta2: f64) -> Result<Self> {
        if !(theta1 > 0.0) || !theta1.is_finite() || !theta2.is_finite() {
            return domain("scale parameters must be positive and finite");
        }
        if theta1 > theta2 {
            return domain(format!("order restriction violated: {theta1} > {theta2}"));
        }
        Ok(Self {
            theta1,
            theta2,
            kind: ProblemKind::Scale,
        })
    }

    /// Representative parameters for a gap: θ1 is pinned at 0 (location) or 1 (scale).
    pub fn from_gap(kind: ProblemKind, gap: f64) -> Result<Self> {
        match kind {
            ProblemKind::Location => Self::location(0.0, gap),
            ProblemKind::Scale => Self::scale(1.0, gap),
        }
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn theta(&self, component: Component) -> f64 {
        match component {
            Component::First => self.theta1,
            Component::Second => self.theta2,
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    /// λ = θ2 - θ1 for location, θ2 / θ1 for scale.
    pub fn gap(&self) -> f64 {
        match self.kind {
            ProblemKind::Location => self.theta2 - self.theta1,
            ProblemKind::Scale => self.theta2 / self.theta1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub x1: f64,
    pub x2: f64,
}

impl Observation {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn component(&self, c: Component) -> f64 {
        match c {
            Component::First => self.x1,
            Component::Second => self.x2,
        }
    }

    /// The contrast statistic D.
    #[inline]
    pub fn contrast(&self, kind: ProblemKind) -> f64 {
        match kind {
            ProblemKind::Location => self.x2 - self.x1,
            ProblemKind::Scale => self.x2 / self.x1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BivariateNormalSpec {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl BivariateNormalSpec {
    pub fn new(sigma1: f64, sigma2: f64, rho: f64) -> Result<Self> {
        let s = Self { sigma1, sigma2, rho };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma1 > 0.0 && self.sigma1.is_finite()) {
            return domain(format!("sigma1 must be positive, got {}", self.sigma1));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return domain(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return domain(format!("rho must lie in (-1, 1), got {}", self.rho));
        }
        Ok(())
    }

    /// τ² = Var(X2 - X1).
    pub fn tau2(&self) -> f64 {
        let (s1, s2, r) = (self.sigma1, self.sigma2, self.rho);
        s1 * s1 + s2 * s2 - 2.0 * r * s1 * s2
    }

    /// α = σ2(σ2 - ρσ1)/τ², the regression weight that drives the case analysis.
    pub fn alpha(&self) -> f64 {
        self.sigma2 * (self.sigma2 - self.rho * self.sigma1) / self.tau2()
    }

    /// Var(Z_i | D = t), the same for both components.
    pub fn cond_var(&self) -> f64 {
        let (s1, s2, r) = (self.sigma1, self.sigma2, self.rho);
        (1.0 - r * r) * s1 * s1 * s2 * s2 / self.tau2()
    }

    fn cond_mean(&self, component: Component, lambda: f64, t: f64) -> f64 {
        let a = self.alpha();
        match component {
            Component::First => (1.0 - a) * (lambda - t),
            Component::Second => a * (t - lambda),
        }
    }

    fn joint_pdf(&self, z1: f64, z2: f64) -> f64 {
        let (s1, s2, r) = (self.sigma1, self.sigma2, self.rho);
        let one_m_r2 = 1.0 - r * r;
        let (u, v) = (z1 / s1, z2 / s2);
        let q = (u * u - 2.0 * r * u * v + v * v) / one_m_r2;
        (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * s1 * s2 * one_m_r2.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpLocationSpec {
    pub sigma1: f64,
    pub sigma2: f64,
}

impl ExpLocationSpec {
    pub fn new(sigma1: f64, sigma2: f64) -> Result<Self> {
        let s = Self { sigma1, sigma2 };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma1 > 0.0 && self.sigma1.is_finite()) {
            return domain(format!("sigma1 must be positive, got {}", self.sigma1));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return domain(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        Ok(())
    }

    /// σ1σ2/(σ1+σ2), the mean of the conditional exponential excess.
    pub fn pooled_scale(&self) -> f64 {
        self.sigma1 * self.sigma2 / (self.sigma1 + self.sigma2)
    }

    /// σ1σ2/(σ1+σ2) · ln 2.
    pub fn pooled_median(&self) -> f64 {
        self.pooled_scale() * LN_2
    }

    fn cond_shift(component: Component, lambda: f64, t: f64) -> f64 {
        match component {
            Component::First => (lambda - t).max(0.0),
            Component::Second => (t - lambda).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaScaleSpec {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl GammaScaleSpec {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        let s = Self { alpha1, alpha2 };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        shapes_valid(self.alpha1, self.alpha2)
    }

    pub fn total_shape(&self) -> f64 {
        self.alpha1 + self.alpha2
    }

    /// Rate of the conditional gamma law of Z_i given D = t.
    fn cond_rate(component: Component, lambda: f64, t: f64) -> f64 {
        match component {
            Component::First => 1.0 + t / lambda,
            Component::Second => 1.0 + lambda / t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerScaleSpec {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl PowerScaleSpec {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        let s = Self { alpha1, alpha2 };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        shapes_valid(self.alpha1, self.alpha2)
    }

    pub fn total_shape(&self) -> f64 {
        self.alpha1 + self.alpha2
    }

    /// Upper end of the conditional support of Z_i given D = t.
    fn cond_upper(component: Component, lambda: f64, t: f64) -> f64 {
        match component {
            Component::First => (lambda / t).min(1.0),
            Component::Second => (t / lambda).min(1.0),
        }
    }
}

fn shapes_valid(a1: f64, a2: f64) -> Result<()> {
    if !(a1 > 0.0 && a1.is_finite()) {
        return domain(format!("alpha1 must be positive, got {a1}"));
    }
    if !(a2 > 0.0 && a2.is_finite()) {
        return domain(format!("alpha2 must be positive, got {a2}"));
    }
    Ok(())
}

/// One of the four concrete bivariate models with its fixed hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ModelSpec {
    Normal(BivariateNormalSpec),
    Exponential(ExpLocationSpec),
    Gamma(GammaScaleSpec),
    Power(PowerScaleSpec),
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Normal(m) => write!(
                f,
                "normal[sigma1={};sigma2={};rho={}]",
                m.sigma1, m.sigma2, m.rho
            ),
            ModelSpec::Exponential(m) => {
                write!(f, "exponential[sigma1={};sigma2={}]", m.sigma1, m.sigma2)
            }
            ModelSpec::Gamma(m) => write!(f, "gamma[alpha1={};alpha2={}]", m.alpha1, m.alpha2),
            ModelSpec::Power(m) => write!(f, "power[alpha1={};alpha2={}]", m.alpha1, m.alpha2),
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Normal(m) => m.validate(),
            ModelSpec::Exponential(m) => m.validate(),
            ModelSpec::Gamma(m) => m.validate(),
            ModelSpec::Power(m) => m.validate(),
        }
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            ModelSpec::Normal(_) | ModelSpec::Exponential(_) => ProblemKind::Location,
            ModelSpec::Gamma(_) | ModelSpec::Power(_) => ProblemKind::Scale,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Normal(_) => "normal",
            ModelSpec::Exponential(_) => "exponential",
            ModelSpec::Gamma(_) => "gamma",
            ModelSpec::Power(_) => "power",
        }
    }

    pub fn check_gap(&self, lambda: f64) -> Result<()> {
        match self.kind() {
            ProblemKind::Location if !(lambda >= 0.0 && lambda.is_finite()) => {
                domain(format!("location gap must be finite and >= 0, got {lambda}"))
            }
            ProblemKind::Scale if !(lambda >= 1.0 && lambda.is_finite()) => {
                domain(format!("scale gap must be finite and >= 1, got {lambda}"))
            }
            _ => Ok(()),
        }
    }

    fn check_contrast(&self, t: f64) -> Result<()> {
        match self.kind() {
            ProblemKind::Location if !t.is_finite() => {
                domain(format!("contrast must be finite, got {t}"))
            }
            ProblemKind::Scale if !(t > 0.0 && t.is_finite()) => {
                domain(format!("scale contrast must be positive and finite, got {t}"))
            }
            _ => Ok(()),
        }
    }

    /// Draws the pivot (Z1, Z2) of the unshifted / unscaled model.
    #[inline]
    pub fn sample_pivot<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            ModelSpec::Normal(m) => {
                // Cholesky factor of [[σ1², ρσ1σ2], [ρσ1σ2, σ2²]].
                let n1 = variates::standard_normal(rng);
                let n2 = variates::standard_normal(rng);
                let z1 = m.sigma1 * n1;
                let z2 = m.sigma2 * (m.rho * n1 + (1.0 - m.rho * m.rho).sqrt() * n2);
                (z1, z2)
            }
            ModelSpec::Exponential(m) => (
                variates::exponential(rng, m.sigma1),
                variates::exponential(rng, m.sigma2),
            ),
            ModelSpec::Gamma(m) => (
                variates::gamma(rng, m.alpha1),
                variates::gamma(rng, m.alpha2),
            ),
            ModelSpec::Power(m) => (
                variates::power(rng, m.alpha1),
                variates::power(rng, m.alpha2),
            ),
        }
    }

    /// One draw of (X1, X2) under the given parameters.
    pub fn sample<R: Rng + ?Sized>(&self, params: &RestrictedParams, rng: &mut R) -> Result<Observation> {
        if params.kind() != self.kind() {
            return Err(crate::error::GpnError::KindMismatch(format!(
                "{} model given {} parameters",
                self.kind(),
                params.kind()
            )));
        }
        let (z1, z2) = self.sample_pivot(rng);
        Ok(apply_params(self.kind(), params, z1, z2))
    }

    /// Median of Z_i given D = t.
    pub fn cond_median(&self, component: Component, lambda: f64, t: f64) -> Result<f64> {
        self.check_gap(lambda)?;
        self.check_contrast(t)?;
        Ok(match self {
            ModelSpec::Normal(m) => m.cond_mean(component, lambda, t),
            ModelSpec::Exponential(m) => {
                ExpLocationSpec::cond_shift(component, lambda, t) + m.pooled_median()
            }
            ModelSpec::Gamma(m) => {
                gamma_median(m.total_shape())? / GammaScaleSpec::cond_rate(component, lambda, t)
            }
            ModelSpec::Power(m) => {
                (-1.0 / m.total_shape()).exp2() * PowerScaleSpec::cond_upper(component, lambda, t)
            }
        })
    }

    /// P(Z_i ≤ s | D = t).
    pub fn cond_cdf(&self, component: Component, lambda: f64, t: f64, s: f64) -> Result<f64> {
        self.check_gap(lambda)?;
        self.check_contrast(t)?;
        if s.is_nan() {
            return domain("conditional CDF evaluated at NaN");
        }
        Ok(match self {
            ModelSpec::Normal(m) => {
                let sd = m.cond_var().sqrt();
                normal_cdf((s - m.cond_mean(component, lambda, t)) / sd)
            }
            ModelSpec::Exponential(m) => {
                let excess = s - ExpLocationSpec::cond_shift(component, lambda, t);
                if excess <= 0.0 {
                    0.0
                } else {
                    -(-excess / m.pooled_scale()).exp_m1()
                }
            }
            ModelSpec::Gamma(m) => {
                if s <= 0.0 {
                    0.0
                } else if s == f64::INFINITY {
                    1.0
                } else {
                    let rate = GammaScaleSpec::cond_rate(component, lambda, t);
                    regularized_gamma_p(m.total_shape(), rate * s)?
                }
            }
            ModelSpec::Power(m) => {
                let upper = PowerScaleSpec::cond_upper(component, lambda, t);
                if s <= 0.0 {
                    0.0
                } else if s >= upper {
                    1.0
                } else {
                    (s / upper).powf(m.total_shape())
                }
            }
        })
    }

    /// Density of D at t, in closed form.
    pub fn d_density(&self, lambda: f64, t: f64) -> Result<f64> {
        self.check_gap(lambda)?;
        self.check_contrast(t)?;
        Ok(match self {
            ModelSpec::Normal(m) => {
                let tau = m.tau2().sqrt();
                normal_pdf((t - lambda) / tau) / tau
            }
            ModelSpec::Exponential(m) => {
                // X2 - X1 - λ is asymmetric Laplace.
                let v = t - lambda;
                let norm = m.sigma1 + m.sigma2;
                if v >= 0.0 {
                    (-v / m.sigma2).exp() / norm
                } else {
                    (v / m.sigma1).exp() / norm
                }
            }
            ModelSpec::Gamma(m) => {
                // D / λ is beta-prime(α2, α1).
                let w = t / lambda;
                let ln_beta = ln_gamma(m.alpha1) + ln_gamma(m.alpha2) - ln_gamma(m.total_shape());
                ((m.alpha2 - 1.0) * w.ln() - m.total_shape() * w.ln_1p() - ln_beta).exp() / lambda
            }
            ModelSpec::Power(m) => {
                let w = t / lambda;
                let a = m.total_shape();
                let tail = if w > 1.0 { w.powf(-a) } else { 1.0 };
                m.alpha1 * m.alpha2 / a * w.powf(m.alpha2 - 1.0) * tail / lambda
            }
        })
    }

    /// Density of D at t from its defining one-dimensional integral over
    /// the joint pivot density, evaluated by adaptive quadrature.
    pub fn d_density_integral(&self, lambda: f64, t: f64) -> Result<f64> {
        self.check_gap(lambda)?;
        self.check_contrast(t)?;
        let opts = QuadOptions {
            abs_tol: 1e-300,
            rel_tol: 1e-12,
            max_panels: 4000,
        };
        match self {
            ModelSpec::Normal(m) => {
                // ∫ f(y, y + t - λ) dy over the real line.
                let f = |y: f64| m.joint_pdf(y, y + t - lambda);
                let center = m.cond_mean(Component::First, lambda, t);
                let sd = m.cond_var().sqrt();
                let (lo, hi, _) = truncation_window(
                    &f,
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    center,
                    sd,
                    (-LN_CUTOFF).exp(),
                );
                Ok(integrate(f, lo, hi, &[center], opts)?.value)
            }
            ModelSpec::Exponential(m) => {
                let f = |y: f64| {
                    let z2 = y + t - lambda;
                    if y < 0.0 || z2 < 0.0 {
                        0.0
                    } else {
                        (-y / m.sigma1 - z2 / m.sigma2).exp() / (m.sigma1 * m.sigma2)
                    }
                };
                let lo = (lambda - t).max(0.0);
                let hi = lo + LN_CUTOFF * m.pooled_scale();
                Ok(integrate(f, lo, hi, &[], opts)?.value)
            }
            ModelSpec::Gamma(m) => {
                // ∫₀^∞ (y/λ) f(y, yt/λ) dy with y = eᵘ.
                let ln_norm = ln_gamma(m.alpha1) + ln_gamma(m.alpha2);
                let w = t / lambda;
                let f = |u: f64| {
                    let y = u.exp();
                    let ln_f = (m.alpha1 - 1.0) * u + (m.alpha2 - 1.0) * (u + w.ln())
                        - y
                        - y * w
                        - ln_norm;
                    (2.0 * u - lambda.ln() + ln_f).exp()
                };
                let mode = (m.total_shape() / (1.0 + w)).ln();
                let width = 1.0 + 1.0 / m.total_shape();
                let (lo, hi, _) = truncation_window(
                    &f,
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    mode,
                    width,
                    (-LN_CUTOFF).exp(),
                );
                Ok(integrate(f, lo, hi, &[mode], opts)?.value)
            }
            ModelSpec::Power(m) => {
                // y ranges over (0, min(1, λ/t)); with y = eᵘ the integrand is ∝ e^{(α1+α2)u}.
                let w = t / lambda;
                let upper = (1.0 / w).min(1.0).ln();
                let f = |u: f64| {
                    let y = u.exp();
                    m.alpha1 * m.alpha2 * y.powf(m.alpha1 - 1.0) * (y * w).powf(m.alpha2 - 1.0) * y * y
                        / lambda
                };
                let lower = upper - LN_CUTOFF / m.total_shape();
                Ok(integrate(f, lower, upper, &[], opts)?.value)
            }
        }
    }
}

#[inline]
pub(crate) fn apply_params(kind: ProblemKind, params: &RestrictedParams, z1: f64, z2: f64) -> Observation {
    match kind {
        ProblemKind::Location => Observation::new(params.theta1 + z1, params.theta2 + z2),
        ProblemKind::Scale => Observation::new(params.theta1 * z1, params.theta2 * z2),
    }
}
