//! Random variate generators used by the model samplers.

use rand::distributions::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Exponential with mean `scale`, by inversion.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    -scale * open_uniform(rng).ln()
}

/// Gamma(shape, 1) by Marsaglia–Tsang squeeze/rejection. Shapes below one
/// are drawn as Gamma(shape + 1) · U^(1/shape).
pub fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let boost = open_uniform(rng).powf(1.0 / shape);
        return marsaglia_tsang(rng, shape + 1.0) * boost;
    }
    marsaglia_tsang(rng, shape)
}

fn marsaglia_tsang<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_uniform(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Power-family variate with CDF z^shape on (0, 1), by inversion.
#[inline]
pub fn power<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    open_uniform(rng).powf(1.0 / shape)
}
