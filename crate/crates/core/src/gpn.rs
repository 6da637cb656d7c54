//! Generalized Pitman nearness: P[L1 < L2] + ½·P[L1 = L2].
//!
//! Two evaluators are provided. `gpn_monte_carlo` draws paired observations
//! from the model. `gpn_oracle` integrates the conditional win probability
//! given D = t against the density of D, which is exact up to quadrature
//! error for absolute-error losses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{GpnError, Result};
use crate::estimators::{Estimator, LossFn};
use crate::models::{apply_params, ModelSpec, ProblemKind, RestrictedParams};
use crate::quadrature::{integrate, truncation_window, QuadOptions};

/// Relative tolerance under which two losses count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Fraction of the peak of the density of D below which its tails are dropped.
const ORACLE_TAIL_RATIO: f64 = 1e-14;

/// Grid size of the scan that locates switches between win/tie/loss regimes.
const REGIME_SCAN_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpnResult {
    pub estimate: f64,
    pub win_fraction: f64,
    pub tie_fraction: f64,
    pub n_samples: u64,
    pub std_error: f64,
    pub seed: u64,
    pub wins: u64,
    pub ties: u64,
}

impl GpnResult {
    fn from_counts(wins: u64, ties: u64, n: u64, seed: u64) -> Self {
        let nf = n as f64;
        let estimate = (2 * wins + ties) as f64 / (2.0 * nf);
        Self {
            estimate,
            win_fraction: wins as f64 / nf,
            tie_fraction: ties as f64 / nf,
            n_samples: n,
            std_error: (estimate * (1.0 - estimate) / nf).sqrt(),
            seed,
            wins,
            ties,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonTask {
    pub model: ModelSpec,
    pub params: RestrictedParams,
    pub candidate: Estimator,
    pub reference: Estimator,
    pub loss: LossFn,
    pub n_samples: u64,
    pub seed: u64,
}

impl ComparisonTask {
    pub fn new(
        model: ModelSpec,
        params: RestrictedParams,
        candidate: Estimator,
        reference: Estimator,
        loss: LossFn,
        n_samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let task = Self {
            model,
            params,
            candidate,
            reference,
            loss,
            n_samples,
            seed,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.model.kind();
        let bad = |msg: String| Err(GpnError::InvalidTask(msg));
        self.model.validate()?;
        if self.n_samples == 0 {
            return bad("n_samples must be positive".into());
        }
        if self.params.kind() != kind {
            return bad(format!("{} parameters for a {kind} model", self.params.kind()));
        }
        if self.loss.kind() != kind {
            return bad(format!("loss {} does not fit a {kind} model", self.loss));
        }
        for e in [&self.candidate, &self.reference] {
            if e.kind() != kind {
                return bad(format!("estimator `{}` is {}, model is {kind}", e.name(), e.kind()));
            }
        }
        if self.candidate.target() != self.reference.target() {
            return bad(format!(
                "`{}` targets theta{} but `{}` targets theta{}",
                self.candidate.name(),
                self.candidate.target().index(),
                self.reference.name(),
                self.reference.target().index()
            ));
        }
        Ok(())
    }
}

#[inline]
fn losses_tied(l1: f64, l2: f64) -> bool {
    (l1 - l2).abs() <= TIE_TOLERANCE * 1f64.max(l1.abs()).max(l2.abs())
}

/// Paired Monte Carlo estimate of GPN(candidate, reference).
pub fn gpn_monte_carlo(task: &ComparisonTask) -> Result<GpnResult> {
    task.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let kind = task.model.kind();
    let target = task.candidate.target();
    let theta = task.params.theta(target);
    let (mut wins, mut ties) = (0u64, 0u64);
    for _ in 0..task.n_samples {
        let (z1, z2) = task.model.sample_pivot(&mut rng);
        let obs = apply_params(kind, &task.params, z1, z2);
        let l1 = task.loss.evaluate(task.candidate.evaluate(&obs), theta);
        let l2 = task.loss.evaluate(task.reference.evaluate(&obs), theta);
        if losses_tied(l1, l2) {
            ties += 1;
        } else if l1 < l2 {
            wins += 1;
        }
    }
    Ok(GpnResult::from_counts(wins, ties, task.n_samples, task.seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub abs_error: f64,
}

/// Regime of the kernel pair at t: -1 when ξ < ψ, 0 when tied, +1 when ξ > ψ.
#[inline]
fn regime(xi: f64, psi: f64) -> i8 {
    if losses_tied(xi, psi) {
        0
    } else if xi < psi {
        -1
    } else {
        1
    }
}

/// Deterministic GPN for absolute-error losses by integrating over D.
pub fn gpn_oracle(task: &ComparisonTask) -> Result<f64> {
    Ok(gpn_oracle_with_error(task)?.value)
}

pub fn gpn_oracle_with_error(task: &ComparisonTask) -> Result<OracleResult> {
    task.validate()?;
    if !task.loss.is_absolute() {
        return Err(GpnError::Unsupported(format!(
            "the oracle handles absolute-error losses only, got {}",
            task.loss
        )));
    }
    let model = &task.model;
    let kind = model.kind();
    let lambda = task.params.gap();
    model.check_gap(lambda)?;
    let comp = task.candidate.target();
    let (xi_e, psi_e) = (&task.candidate, &task.reference);

    // Integration variable x: t itself for location, ln t for scale.
    let to_t = |x: f64| match kind {
        ProblemKind::Location => x,
        ProblemKind::Scale => x.exp(),
    };
    let weight = |x: f64| -> f64 {
        let t = to_t(x);
        match kind {
            ProblemKind::Location => model.d_density(lambda, t).unwrap_or(0.0),
            ProblemKind::Scale if t > 0.0 && t.is_finite() => {
                model.d_density(lambda, t).unwrap_or(0.0) * t
            }
            ProblemKind::Scale => 0.0,
        }
    };
    let excess_at = |x: f64| -> f64 {
        let w = weight(x);
        if w == 0.0 {
            return 0.0;
        }
        let t = to_t(x);
        let (xi, psi) = (xi_e.psi(t), psi_e.psi(t));
        let r = regime(xi, psi);
        if r == 0 {
            return 0.0;
        }
        let g = match kind {
            ProblemKind::Location => {
                let f = model.cond_cdf(comp, lambda, t, 0.5 * (xi + psi)).unwrap_or(f64::NAN);
                if r < 0 { f } else { 1.0 - f }
            }
            ProblemKind::Scale => {
                let f = model.cond_cdf(comp, lambda, t, 2.0 / (xi + psi)).unwrap_or(f64::NAN);
                if r > 0 { f } else { 1.0 - f }
            }
        };
        (g - 0.5) * w
    };

    let (start, width) = match model {
        ModelSpec::Normal(m) => (lambda, m.tau2().sqrt()),
        ModelSpec::Exponential(m) => (lambda, m.sigma1 + m.sigma2),
        ModelSpec::Gamma(m) => (lambda.ln(), 1.0 + 1.0 / m.alpha1.min(m.alpha2)),
        ModelSpec::Power(m) => (lambda.ln(), 1.0 + 1.0 / m.alpha1.min(m.alpha2)),
    };
    let (lo, hi, peak) = truncation_window(
        &weight,
        f64::NEG_INFINITY,
        f64::INFINITY,
        start,
        width,
        ORACLE_TAIL_RATIO,
    );
    if !(peak > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(GpnError::Convergence {
            what: "oracle truncation window",
            residual: peak,
        });
    }

    let to_x = |t: f64| match kind {
        ProblemKind::Location => Some(t),
        ProblemKind::Scale if t > 0.0 => Some(t.ln()),
        ProblemKind::Scale => None,
    };
    let mut breaks: Vec<f64> = xi_e
        .breakpoints()
        .iter()
        .chain(psi_e.breakpoints())
        .filter_map(|&t| to_x(t))
        .collect();
    breaks.push(start);

    // Locate switches between win, tie and loss regimes by scan and bisection,
    // since the conditional win probability jumps there.
    let reg = |x: f64| {
        let t = to_t(x);
        regime(xi_e.psi(t), psi_e.psi(t))
    };
    let step = (hi - lo) / REGIME_SCAN_POINTS as f64;
    let mut prev_x = lo;
    let mut prev_r = reg(lo);
    for k in 1..=REGIME_SCAN_POINTS {
        let x = if k == REGIME_SCAN_POINTS { hi } else { lo + step * k as f64 };
        let r = reg(x);
        if r != prev_r {
            let (mut a, mut b) = (prev_x, x);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if reg(m) == prev_r {
                    a = m;
                } else {
                    b = m;
                }
            }
            breaks.push(0.5 * (a + b));
        }
        prev_x = x;
        prev_r = r;
    }

    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 0.0,
        max_panels: 50_000,
    };
    let res = integrate(excess_at, lo, hi, &breaks, opts)?;
    if !res.value.is_finite() {
        return Err(GpnError::Convergence {
            what: "oracle integrand",
            residual: f64::NAN,
        });
    }
    Ok(OracleResult {
        value: (0.5 + res.value).clamp(0.0, 1.0),
        abs_error: res.abs_error,
    })
}

/// SplitMix64 finalizer, used to decorrelate per-cell seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sweep cell (pair, gap): base ⊕ hash(pair, gap).
pub fn cell_seed(base_seed: u64, pair_index: usize, gap_index: usize) -> u64 {
    base_seed ^ splitmix64(((pair_index as u64) << 32) | gap_index as u64)
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub pair_index: usize,
    pub gap_index: usize,
    pub gap: f64,
    pub result: GpnResult,
    pub oracle: Option<f64>,
}

pub fn gpn_sweep(
    model: &ModelSpec,
    pairs: &[(Estimator, Estimator)],
    gaps: &[f64],
    loss: LossFn,
    n_samples: u64,
    base_seed: u64,
) -> Result<Vec<SweepCell>> {
    gpn_sweep_with_oracle(model, pairs, gaps, loss, n_samples, base_seed, false)
}

/// One cell per (pair, gap) in row-major order; cells run in parallel.
pub fn gpn_sweep_with_oracle(
    model: &ModelSpec,
    pairs: &[(Estimator, Estimator)],
    gaps: &[f64],
    loss: LossFn,
    n_samples: u64,
    base_seed: u64,
    oracle: bool,
) -> Result<Vec<SweepCell>> {
    let jobs: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|p| (0..gaps.len()).map(move |g| (p, g)))
        .collect();
    jobs.par_iter()
        .map(|&(p, g)| {
            let gap = gaps[g];
            let params = RestrictedParams::from_gap(model.kind(), gap)?;
            model.check_gap(gap)?;
            let (cand, refe) = &pairs[p];
            let task = ComparisonTask::new(
                *model,
                params,
                cand.clone(),
                refe.clone(),
                loss,
                n_samples,
                cell_seed(base_seed, p, g),
            )?;
            let result = gpn_monte_carlo(&task)?;
            let oracle = if oracle { Some(gpn_oracle(&task)?) } else { None };
            Ok(SweepCell {
                pair_index: p,
                gap_index: g,
                gap,
                result,
                oracle,
            })
        })
        .collect()
}
