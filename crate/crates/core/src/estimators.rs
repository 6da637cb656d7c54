//! Equivariant estimators, the loss functions they are compared under, and
//! the clamp that projects an estimator kernel onto the band spanned by the
//! conditional-median bounds.

use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GpnError, Result};
use crate::models::{
    BivariateNormalSpec, Component, ExpLocationSpec, GammaScaleSpec, ModelSpec, Observation,
    PowerScaleSpec, ProblemKind,
};
use crate::specfun::gamma_median;

pub type Kernel = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFn {
    LocationAbs,
    LocationSquared,
    ScaleAbs,
    ScaleSquared,
}

impl LossFn {
    pub const ALL: [LossFn; 4] = [
        LossFn::LocationAbs,
        LossFn::LocationSquared,
        LossFn::ScaleAbs,
        LossFn::ScaleSquared,
    ];

    pub fn kind(self) -> ProblemKind {
        match self {
            LossFn::LocationAbs | LossFn::LocationSquared => ProblemKind::Location,
            LossFn::ScaleAbs | LossFn::ScaleSquared => ProblemKind::Scale,
        }
    }

    pub fn is_absolute(self) -> bool {
        matches!(self, LossFn::LocationAbs | LossFn::ScaleAbs)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossFn::LocationAbs => "location_abs",
            LossFn::LocationSquared => "location_squared",
            LossFn::ScaleAbs => "scale_abs",
            LossFn::ScaleSquared => "scale_squared",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == name)
    }

    /// The absolute-error loss of the given problem kind.
    pub fn absolute(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::Location => LossFn::LocationAbs,
            ProblemKind::Scale => LossFn::ScaleAbs,
        }
    }

    /// W(a - θ) for location losses, W(a / θ) for scale losses.
    #[inline]
    pub fn evaluate(self, estimate: f64, theta: f64) -> f64 {
        match self {
            LossFn::LocationAbs => (estimate - theta).abs(),
            LossFn::LocationSquared => (estimate - theta).powi(2),
            LossFn::ScaleAbs => (estimate / theta - 1.0).abs(),
            LossFn::ScaleSquared => (estimate / theta - 1.0).powi(2),
        }
    }
}

impl fmt::Display for LossFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A real number or one of the two infinities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Reciprocal of a nonnegative extended real with 1/0 = +∞ and 1/∞ = 0.
    pub fn recip(self) -> Result<ExtReal> {
        match self {
            ExtReal::PosInf => Ok(ExtReal::Finite(0.0)),
            ExtReal::Finite(x) if x == 0.0 => Ok(ExtReal::PosInf),
            ExtReal::Finite(x) if x > 0.0 => Ok(ExtReal::Finite(1.0 / x)),
            other => Err(GpnError::Domain(format!(
                "scale bound must be nonnegative, got {other:?}"
            ))),
        }
    }
}

/// One arm of a clamp band: a constant infinity or a finite function of t.
#[derive(Clone)]
pub enum Bound {
    NegInf,
    PosInf,
    Finite(Kernel),
}

impl Bound {
    pub fn finite(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Bound::Finite(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> ExtReal {
        match self {
            Bound::NegInf => ExtReal::NegInf,
            Bound::PosInf => ExtReal::PosInf,
            Bound::Finite(f) => ExtReal::Finite(f(t)),
        }
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => f.write_str("-inf"),
            Bound::PosInf => f.write_str("+inf"),
            Bound::Finite(_) => f.write_str("finite(t)"),
        }
    }
}

/// Lower and upper bounds (l(t), u(t)) on the conditional median.
#[derive(Clone, Debug)]
pub struct ClampBounds {
    pub lower: Bound,
    pub upper: Bound,
    /// Points in t where l or u has a kink.
    pub breakpoints: Vec<f64>,
}

impl ClampBounds {
    pub fn new(lower: Bound, upper: Bound) -> Self {
        Self {
            lower,
            upper,
            breakpoints: Vec::new(),
        }
    }

    fn with_breakpoints(mut self, b: &[f64]) -> Self {
        self.breakpoints.extend_from_slice(b);
        self
    }
}

/// An equivariant estimator δ = X_i - ψ(D) (location) or δ = ψ(D)·X_i (scale).
#[derive(Clone)]
pub struct Estimator {
    name: String,
    target: Component,
    kind: ProblemKind,
    kernel: Kernel,
    breakpoints: Vec<f64>,
    nu: Option<f64>,
}

impl fmt::Debug for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Estimator")
            .field("name", &self.name)
            .field("target", &self.target)
            .field("kind", &self.kind)
            .field("nu", &self.nu)
            .finish()
    }
}

impl Estimator {
    pub fn new(
        name: impl Into<String>,
        target: Component,
        kind: ProblemKind,
        kernel: impl Fn(f64) -> f64 + Send + Sync + 'static,
        breakpoints: Vec<f64>,
    ) -> Self {
        Self {
            name: name.into(),
            target,
            kind,
            kernel: Arc::new(kernel),
            breakpoints,
            nu: None,
        }
    }

    fn with_nu(mut self, nu: f64) -> Self {
        self.nu = Some(nu);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Name plus the family parameter, when there is one.
    pub fn label(&self) -> String {
        match self.nu {
            Some(nu) => format!("{}[nu={}]", self.name, nu),
            None => self.name.clone(),
        }
    }

    pub fn target(&self) -> Component {
        self.target
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn nu(&self) -> Option<f64> {
        self.nu
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    #[inline]
    pub fn psi(&self, t: f64) -> f64 {
        (self.kernel)(t)
    }

    #[inline]
    pub fn evaluate(&self, obs: &Observation) -> f64 {
        let x = obs.component(self.target);
        match self.kind {
            ProblemKind::Location => x - self.psi(obs.x2 - obs.x1),
            ProblemKind::Scale => self.psi(obs.x2 / obs.x1) * x,
        }
    }
}

fn merged_breakpoints(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().chain(b).copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn star_name(base: &str) -> String {
    format!("{base}_star")
}

/// ψ*(t) = max{l(t), min{ψ(t), u(t)}}.
pub fn clamp_location(base: &Estimator, bounds: &ClampBounds) -> Result<Estimator> {
    if base.kind != ProblemKind::Location {
        return Err(GpnError::KindMismatch(format!(
            "clamp_location applied to {} estimator `{}`",
            base.kind, base.name
        )));
    }
    let psi = base.kernel.clone();
    let (lower, upper) = (bounds.lower.clone(), bounds.upper.clone());
    let kernel = move |t: f64| {
        let u = upper.eval(t).to_f64();
        let l = lower.eval(t).to_f64();
        l.max(psi(t).min(u))
    };
    Ok(Estimator {
        name: star_name(&base.name),
        target: base.target,
        kind: base.kind,
        kernel: Arc::new(kernel),
        breakpoints: merged_breakpoints(&base.breakpoints, &bounds.breakpoints),
        nu: base.nu,
    })
}

/// ψ*(t) = max{1/u(t), min{ψ(t), 1/l(t)}} with 1/0 = +∞ and 1/∞ = 0.
pub fn clamp_scale(base: &Estimator, bounds: &ClampBounds) -> Result<Estimator> {
    if base.kind != ProblemKind::Scale {
        return Err(GpnError::KindMismatch(format!(
            "clamp_scale applied to {} estimator `{}`",
            base.kind, base.name
        )));
    }
    if matches!(bounds.lower, Bound::NegInf) || matches!(bounds.upper, Bound::NegInf) {
        return Err(GpnError::Domain("scale bounds cannot be -inf".into()));
    }
    let psi = base.kernel.clone();
    let (lower, upper) = (bounds.lower.clone(), bounds.upper.clone());
    let kernel = move |t: f64| {
        // Negative finite bounds would violate the band invariant; treat them as 0.
        let recip = |b: ExtReal| match b {
            ExtReal::Finite(x) if x <= 0.0 => f64::INFINITY,
            other => other.recip().map(ExtReal::to_f64).unwrap_or(f64::INFINITY),
        };
        let hi = recip(lower.eval(t));
        let lo = recip(upper.eval(t));
        lo.max(psi(t).min(hi))
    };
    Ok(Estimator {
        name: star_name(&base.name),
        target: base.target,
        kind: base.kind,
        kernel: Arc::new(kernel),
        breakpoints: merged_breakpoints(&base.breakpoints, &bounds.breakpoints),
        nu: base.nu,
    })
}

/// Dispatches to the clamp matching the estimator's problem kind.
pub fn clamp(base: &Estimator, bounds: &ClampBounds) -> Result<Estimator> {
    match base.kind {
        ProblemKind::Location => clamp_location(base, bounds),
        ProblemKind::Scale => clamp_scale(base, bounds),
    }
}

/// β(α) = min{1, max{0, α}}.
pub fn beta_weight(alpha: f64) -> f64 {
    alpha.clamp(0.0, 1.0)
}

pub fn default_bounds(model: &ModelSpec, component: Component) -> Result<ClampBounds> {
    Ok(match (model, component) {
        (ModelSpec::Normal(m), Component::First) => {
            let a = m.alpha();
            let arm = move |t: f64| -(1.0 - a) * t;
            let lower = if a <= 1.0 { Bound::finite(arm) } else { Bound::NegInf };
            let upper = if a >= 1.0 { Bound::finite(arm) } else { Bound::PosInf };
            ClampBounds::new(lower, upper)
        }
        (ModelSpec::Normal(m), Component::Second) => {
            let a = m.alpha();
            let arm = move |t: f64| a * t;
            if a <= 0.0 {
                ClampBounds::new(Bound::finite(arm), Bound::PosInf)
            } else {
                ClampBounds::new(Bound::NegInf, Bound::finite(arm))
            }
        }
        (ModelSpec::Exponential(m), Component::First) => {
            let k = m.pooled_median();
            ClampBounds::new(Bound::finite(move |t: f64| (-t).max(0.0) + k), Bound::PosInf)
                .with_breakpoints(&[0.0])
        }
        (ModelSpec::Exponential(m), Component::Second) => {
            let k = m.pooled_median();
            ClampBounds::new(
                Bound::finite(move |_| k),
                Bound::finite(move |t: f64| t.max(0.0) + k),
            )
            .with_breakpoints(&[0.0])
        }
        (ModelSpec::Gamma(m), Component::First) => {
            let nu = gamma_median(m.total_shape())?;
            ClampBounds::new(
                Bound::finite(move |t: f64| nu / (1.0 + t)),
                Bound::finite(move |_| nu),
            )
        }
        (ModelSpec::Gamma(m), Component::Second) => {
            let nu = gamma_median(m.total_shape())?;
            ClampBounds::new(
                Bound::finite(|_| 0.0),
                Bound::finite(move |t: f64| t * nu / (1.0 + t)),
            )
        }
        (ModelSpec::Power(m), Component::First) => {
            let c = (-1.0 / m.total_shape()).exp2();
            ClampBounds::new(
                Bound::finite(move |t: f64| c * (1.0 / t).min(1.0)),
                Bound::finite(move |_| c),
            )
            .with_breakpoints(&[1.0])
        }
        (ModelSpec::Power(m), Component::Second) => {
            let c = (-1.0 / m.total_shape()).exp2();
            ClampBounds::new(
                Bound::finite(|_| 0.0),
                Bound::finite(move |t: f64| c * t.min(1.0)),
            )
            .with_breakpoints(&[1.0])
        }
    })
}

fn loc(name: &str, c: Component, f: impl Fn(f64) -> f64 + Send + Sync + 'static, bp: &[f64]) -> Estimator {
    Estimator::new(name, c, ProblemKind::Location, f, bp.to_vec())
}

fn scl(name: &str, c: Component, f: impl Fn(f64) -> f64 + Send + Sync + 'static, bp: &[f64]) -> Estimator {
    Estimator::new(name, c, ProblemKind::Scale, f, bp.to_vec())
}

fn normal_bases(m: &BivariateNormalSpec, c: Component) -> Vec<Estimator> {
    let a = m.alpha();
    let b = beta_weight(a);
    match c {
        Component::First => vec![
            loc("pnlee", c, |_| 0.0, &[]),
            loc("rmle", c, move |t| (1.0 - a) * (-t).max(0.0), &[0.0]),
            loc("hp", c, move |t| ((a - 1.0) * t).max(0.0), &[0.0]),
            loc("pdt", c, move |t| (1.0 - b) * (-t).max(0.0), &[0.0]),
        ],
        Component::Second => vec![
            loc("pnlee", c, |_| 0.0, &[]),
            loc("rmle", c, move |t| -a * (-t).max(0.0), &[0.0]),
            loc("hp", c, move |t| -(-a * t).max(0.0), &[0.0]),
            loc("pdt", c, move |t| -b * (-t).max(0.0), &[0.0]),
        ],
    }
}

fn exponential_bases(m: &ExpLocationSpec, c: Component) -> Vec<Estimator> {
    match c {
        Component::First => {
            let k = m.sigma1 * LN_2;
            vec![
                loc("pnlee", c, move |_| k, &[]),
                loc("rmle", c, |t| (-t).max(0.0), &[0.0]),
            ]
        }
        Component::Second => {
            let k = m.sigma2 * LN_2;
            vec![
                loc("pnlee", c, move |_| k, &[]),
                loc("rmle", c, |_| 0.0, &[]),
            ]
        }
    }
}

fn gamma_bases(m: &GammaScaleSpec, c: Component) -> Result<Vec<Estimator>> {
    let a = m.total_shape();
    let switch = m.alpha2 / m.alpha1;
    Ok(match c {
        Component::First => {
            let (a1, nu1) = (m.alpha1, gamma_median(m.alpha1)?);
            vec![
                scl("ue", c, move |_| 1.0 / a1, &[]),
                scl("pnsee", c, move |_| 1.0 / nu1, &[]),
                scl("rmle", c, move |t| (1.0 / a1).min((1.0 + t) / a), &[switch]),
            ]
        }
        Component::Second => {
            let (a2, nu2) = (m.alpha2, gamma_median(m.alpha2)?);
            vec![
                scl("ue", c, move |_| 1.0 / a2, &[]),
                scl("pnsee", c, move |_| 1.0 / nu2, &[]),
                scl("rmle", c, move |t| (1.0 / a2).max((1.0 + t) / (t * a)), &[switch]),
            ]
        }
    })
}

fn power_bases(m: &PowerScaleSpec, c: Component) -> Vec<Estimator> {
    let k = match c {
        Component::First => (1.0 / m.alpha1).exp2(),
        Component::Second => (1.0 / m.alpha2).exp2(),
    };
    vec![scl("pnsee", c, move |_| k, &[])]
}

fn base_estimators(model: &ModelSpec, component: Component) -> Result<Vec<Estimator>> {
    Ok(match model {
        ModelSpec::Normal(m) => normal_bases(m, component),
        ModelSpec::Exponential(m) => exponential_bases(m, component),
        ModelSpec::Gamma(m) => gamma_bases(m, component)?,
        ModelSpec::Power(m) => power_bases(m, component),
    })
}

/// Every named estimator for the model and component: the baseline
/// estimators followed by their clamped `_star` versions.
pub fn catalog(model: &ModelSpec, component: Component) -> Result<Vec<Estimator>> {
    model.validate()?;
    let bases = base_estimators(model, component)?;
    let bounds = default_bounds(model, component)?;
    let mut out = bases.clone();
    for b in &bases {
        out.push(clamp(b, &bounds)?);
    }
    Ok(out)
}

/// Names of the one-parameter families available for the model and component.
pub fn family_names(model: &ModelSpec, component: Component) -> Vec<&'static str> {
    match (model, component) {
        (ModelSpec::Normal(m), Component::First) => {
            let a = m.alpha();
            if a > 1.0 {
                vec!["psi_nu", "psi_nu_hp"]
            } else if a < 1.0 {
                vec!["psi_nu"]
            } else {
                vec![]
            }
        }
        _ => vec![],
    }
}

/// Closed range of ν admitted by `psi_nu` for the normal model's α.
pub fn psi_nu_range(alpha: f64) -> Result<(f64, f64)> {
    if alpha < 0.0 {
        Ok((alpha, 0.0))
    } else if alpha < 1.0 {
        Ok((alpha, 1.0))
    } else if alpha > 1.0 {
        Ok((1.0, alpha))
    } else {
        Err(GpnError::Unsupported(
            "no psi_nu family when alpha = 1: every kernel but zero is dominated".into(),
        ))
    }
}

fn check_nu(nu: f64, (lo, hi): (f64, f64), family: &str) -> Result<()> {
    if !(nu >= lo && nu <= hi) {
        return Err(GpnError::Domain(format!(
            "{family} requires nu in [{lo}, {hi}], got {nu}"
        )));
    }
    Ok(())
}

/// ψ_ν(t) = -(1-ν)t for t ≤ 0 and 0 for t > 0 (normal model, first component).
pub fn psi_nu(model: &BivariateNormalSpec, nu: f64) -> Result<Estimator> {
    check_nu(nu, psi_nu_range(model.alpha())?, "psi_nu")?;
    Ok(loc(
        "psi_nu",
        Component::First,
        move |t| (1.0 - nu) * (-t).max(0.0),
        &[0.0],
    )
    .with_nu(nu))
}

/// ψ_ν(t) = -(1-ν)t for t ≤ 0 and -(1-α)t for t > 0, for α > 1.
pub fn psi_nu_hp(model: &BivariateNormalSpec, nu: f64) -> Result<Estimator> {
    let a = model.alpha();
    if !(a > 1.0) {
        return Err(GpnError::Unsupported(format!(
            "psi_nu_hp requires alpha > 1, got {a}"
        )));
    }
    check_nu(nu, (1.0, a), "psi_nu_hp")?;
    Ok(loc(
        "psi_nu_hp",
        Component::First,
        move |t| if t <= 0.0 { (nu - 1.0) * t } else { (a - 1.0) * t },
        &[0.0],
    )
    .with_nu(nu))
}

/// Resolves an estimator by name, including the ν-indexed families.
pub fn lookup(model: &ModelSpec, component: Component, name: &str, nu: Option<f64>) -> Result<Estimator> {
    let cat = catalog(model, component)?;
    let families = family_names(model, component);
    if let (ModelSpec::Normal(m), true) = (model, families.contains(&name)) {
        let nu = nu.ok_or_else(|| GpnError::Domain(format!("estimator `{name}` needs a value for nu")))?;
        return match name {
            "psi_nu" => psi_nu(m, nu),
            _ => psi_nu_hp(m, nu),
        };
    }
    if let Some(e) = cat.into_iter().find(|e| e.name() == name) {
        if nu.is_some() {
            return Err(GpnError::Domain(format!("estimator `{name}` takes no nu parameter")));
        }
        return Ok(e);
    }
    Err(GpnError::UnknownEstimator {
        name: name.to_string(),
        valid: valid_names(model, component)?,
    })
}

pub fn valid_names(model: &ModelSpec, component: Component) -> Result<Vec<String>> {
    let mut names: Vec<String> = catalog(model, component)?
        .iter()
        .map(|e| e.name().to_string())
        .collect();
    names.extend(family_names(model, component).iter().map(|s| s.to_string()));
    Ok(names)
}

/// (improved, base) pairs for which the model's worked example asserts the
/// first estimator is Pitman nearer than the second.
pub fn improvement_pairs(model: &ModelSpec, component: Component) -> Result<Vec<(Estimator, Estimator)>> {
    let get = |n: &str| lookup(model, component, n, None);
    let pair = |a: &str, b: &str| -> Result<(Estimator, Estimator)> { Ok((get(a)?, get(b)?)) };
    let mut out = Vec::new();
    match (model, component) {
        (ModelSpec::Normal(m), Component::First) => {
            let a = m.alpha();
            if (0.0..1.0).contains(&a) {
                out.push(pair("rmle", "pnlee")?);
                for nu in [a, 0.5 * (a + 1.0)] {
                    out.push((psi_nu(m, nu)?, get("pnlee")?));
                }
            } else if a > 1.0 {
                out.push(pair("rmle", "pnlee")?);
                out.push(pair("rmle", "pdt")?);
                out.push(pair("hp_star", "hp")?);
                for nu in [a, 0.5 * (a + 1.0)] {
                    out.push((psi_nu(m, nu)?, get("pnlee")?));
                    out.push((psi_nu_hp(m, nu)?, get("hp")?));
                }
            } else if a < 0.0 {
                out.push(pair("rmle", "pnlee")?);
                out.push(pair("pdt", "pnlee")?);
                out.push(pair("rmle", "pdt")?);
                for nu in [a, 0.5 * a] {
                    out.push((psi_nu(m, nu)?, get("pnlee")?));
                    out.push((psi_nu(m, nu)?, get("pdt")?));
                }
            }
        }
        (ModelSpec::Normal(m), Component::Second) => {
            if m.alpha() != 0.0 {
                out.push(pair("pnlee_star", "pnlee")?);
            }
        }
        (ModelSpec::Exponential(_), _) => {
            out.push(pair("pnlee_star", "pnlee")?);
            out.push(pair("rmle_star", "rmle")?);
        }
        (ModelSpec::Gamma(g), Component::First) => {
            out.push(pair("rmle_star", "rmle")?);
            out.push(pair("pnsee_star", "pnsee")?);
            out.push(pair("ue_star", "ue")?);
            if gamma_median(g.total_shape())? <= g.alpha1 {
                out.push(pair("ue", "rmle")?);
            }
        }
        (ModelSpec::Gamma(_), Component::Second) => {
            out.push(pair("rmle_star", "rmle")?);
            out.push(pair("pnsee_star", "pnsee")?);
            out.push(pair("rmle", "ue")?);
        }
        (ModelSpec::Power(_), _) => {
            out.push(pair("pnsee_star", "pnsee")?);
        }
    }
    Ok(out)
}
