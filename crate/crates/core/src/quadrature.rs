//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite panels, plus
//! a helper that truncates a unimodal integrand's support where it drops
//! below a fixed fraction of its peak.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{GpnError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, starting from panels split at every
/// breakpoint that falls strictly inside the interval.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(GpnError::Domain(format!(
            "quadrature limits must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in edges.windows(2) {
        let p = gauss_kronrod(&f, w[0], w[1]);
        evaluations += 15;
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }

    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_panels {
            return Err(GpnError::Convergence {
                what: "adaptive quadrature",
                residual: total_err,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel cannot be split further in floating point.
            heap.push(Panel { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let left = gauss_kronrod(&f, worst.a, mid);
        let right = gauss_kronrod(&f, mid, worst.b);
        evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if total_err < 0.0 {
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }

    // Re-sum from the panels to shed accumulated update drift.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let abs_error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value: sign * value,
        abs_error,
        evaluations,
    })
}

/// Finds a finite window `[lo, hi]` inside `(support_lo, support_hi)` outside
/// of which the unimodal function `f` stays below `ratio` times its peak.
///
/// `start` must lie in the support and `scale` is a characteristic width
/// used for the initial peak search.
pub fn truncation_window<F: Fn(f64) -> f64>(
    f: &F,
    support_lo: f64,
    support_hi: f64,
    start: f64,
    scale: f64,
    ratio: f64,
) -> (f64, f64, f64) {
    // Coarse peak search on a symmetric grid around `start`.
    let mut peak_x = start;
    let mut peak = f(start);
    for k in -400..=400 {
        let x = start + scale * k as f64 / 20.0;
        if x <= support_lo || x >= support_hi {
            continue;
        }
        let v = f(x);
        if v > peak {
            peak = v;
            peak_x = x;
        }
    }
    let threshold = peak * ratio;

    let walk = |dir: f64, bound: f64| -> f64 {
        let mut step = scale;
        let mut inside = peak_x;
        loop {
            let x = peak_x + dir * step;
            if (dir < 0.0 && x <= bound) || (dir > 0.0 && x >= bound) {
                return bound;
            }
            if f(x) < threshold {
                // Bisect between the last point above and the first below.
                let (mut a, mut b) = (inside, x);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if f(m) < threshold {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                return b;
            }
            inside = x;
            step *= 2.0;
            if !step.is_finite() {
                return bound;
            }
        }
    };
    let lo = walk(-1.0, support_lo);
    let hi = walk(1.0, support_hi);
    (lo, hi, peak)
}
