//! Special functions: log-gamma, the regularized lower incomplete gamma
//! function, the gamma median, and the standard normal CDF / quantile.
//!
//! Everything here works in binary64 and is pure, so it can be called from
//! any thread.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{domain, GpnError, Result};

/// Tolerance and iteration budget for the iterative special functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision {
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for Precision {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            max_iter: 200,
        }
    }
}

impl Precision {
    pub fn new(abs_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !abs_tol.is_finite() {
            return domain(format!("abs_tol must be positive and finite, got {abs_tol}"));
        }
        if max_iter == 0 {
            return domain("max_iter must be at least 1");
        }
        Ok(Self { abs_tol, max_iter })
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7, n = 9; reflection below 1/2).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut sum = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Regularized lower incomplete gamma function P(α, x).
pub fn regularized_gamma_p(alpha: f64, x: f64) -> Result<f64> {
    regularized_gamma_p_with(alpha, x, Precision::default())
}

pub fn regularized_gamma_p_with(alpha: f64, x: f64, prec: Precision) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("gamma shape must be positive and finite, got {alpha}"));
    }
    if !(x >= 0.0) {
        return domain(format!("incomplete gamma argument must be nonnegative, got {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let log_prefactor = alpha * x.ln() - x - ln_gamma(alpha);
    if x < alpha + 1.0 {
        let series = lower_series(alpha, x, prec)?;
        Ok((log_prefactor.exp() * series).clamp(0.0, 1.0))
    } else {
        let cf = upper_continued_fraction(alpha, x, prec)?;
        Ok((1.0 - log_prefactor.exp() * cf).clamp(0.0, 1.0))
    }
}

/// Σ xⁿ / (α(α+1)…(α+n)); multiplied by xᵅe⁻ˣ/Γ(α) this is P(α, x).
fn lower_series(alpha: f64, x: f64, prec: Precision) -> Result<f64> {
    let mut denom = alpha;
    let mut term = 1.0 / alpha;
    let mut sum = term;
    // Relative stopping rule; the prefactor is at most O(1) on this branch.
    let eps = (prec.abs_tol * 1e-3).max(f64::EPSILON);
    for _ in 0..prec.max_iter.max(8) * 4 {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * eps {
            return Ok(sum);
        }
    }
    Err(GpnError::Convergence {
        what: "incomplete gamma series",
        residual: term.abs() / sum.abs(),
    })
}

/// Modified Lentz evaluation of the continued fraction for Q(α, x).
fn upper_continued_fraction(alpha: f64, x: f64, prec: Precision) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let eps = (prec.abs_tol * 1e-3).max(f64::EPSILON);
    let mut b = x + 1.0 - alpha;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delta = 0.0;
    for i in 1..=prec.max_iter {
        let an = -(i as f64) * (i as f64 - alpha);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < eps {
            return Ok(h);
        }
    }
    Err(GpnError::Convergence {
        what: "incomplete gamma continued fraction",
        residual: (delta - 1.0).abs(),
    })
}

/// Density of Gamma(α, 1) at x.
pub fn gamma_pdf(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ((alpha - 1.0) * x.ln() - x - ln_gamma(alpha)).exp()
}

/// Median ν(α) of the Gamma(α, 1) distribution.
pub fn gamma_median(alpha: f64) -> Result<f64> {
    gamma_median_with(alpha, Precision::default())
}

pub fn gamma_median_with(alpha: f64, prec: Precision) -> Result<f64> {
    const RESIDUAL_TOL: f64 = 1e-12;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("gamma shape must be positive and finite, got {alpha}"));
    }
    let cdf = |x: f64| regularized_gamma_p_with(alpha, x, prec);

    let mut lo = (alpha - 1.0 / 3.0).max(f64::MIN_POSITIVE);
    let mut hi = alpha;
    while cdf(lo)? > 0.5 {
        lo *= 0.5;
    }
    while cdf(hi)? < 0.5 {
        hi *= 2.0;
    }

    for _ in 0..prec.max_iter * 8 {
        if hi - lo <= 1e-8 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if cdf(mid)? < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut x = 0.5 * (lo + hi);
    let mut residual = cdf(x)? - 0.5;
    for _ in 0..prec.max_iter {
        if residual.abs() <= RESIDUAL_TOL * 0.1 {
            break;
        }
        let slope = gamma_pdf(alpha, x);
        if !(slope > 0.0) {
            break;
        }
        let next = x - residual / slope;
        if !(next > lo && next < hi) || next == x {
            break;
        }
        x = next;
        residual = cdf(x)? - 0.5;
        if residual < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
    }
    if residual.abs() > RESIDUAL_TOL {
        return Err(GpnError::Convergence {
            what: "gamma median",
            residual: residual.abs(),
        });
    }
    Ok(x)
}

/// Standard normal CDF Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal density φ(z).
pub fn normal_pdf(z: f64) -> f64 {
    const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal quantile Φ⁻¹(p): Acklam's rational approximation
/// polished by Halley steps on the erfc-based CDF.
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("normal quantile requires p in (0, 1), got {p}"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work in the lower half and reflect, which makes Φ⁻¹(1-p) = -Φ⁻¹(p).
    if p > 0.5 {
        return normal_quantile_lower(1.0 - p, p).map(|z| -z);
    }
    normal_quantile_lower(p, 1.0 - p)
}

#[allow(clippy::excessive_precision)]
fn normal_quantile_lower(p: f64, upper_p: f64) -> Result<f64> {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let mut z = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // z < 0 here, so Φ(z) is computed without cancellation.
    for _ in 0..4 {
        let err = normal_cdf(z) - p;
        let u = err / normal_pdf(z);
        let step = u / (1.0 + 0.5 * z * u);
        z -= step;
        if step.abs() <= 1e-15 * z.abs().max(1.0) {
            break;
        }
    }
    let residual = (normal_cdf(z) - p).abs();
    if residual > 1e-12 || (normal_cdf(-z) - upper_p).abs() > 1e-12 {
        return Err(GpnError::Convergence {
            what: "normal quantile",
            residual,
        });
    }
    Ok(z)
}
