#![allow(dead_code)]

use gpn_core::estimators::{catalog, clamp, default_bounds, lookup, Estimator, LossFn};
use gpn_core::gpn::{gpn_monte_carlo, ComparisonTask};
use gpn_core::models::{
    BivariateNormalSpec, Component, ExpLocationSpec, GammaScaleSpec, ModelSpec, Observation,
    PowerScaleSpec, ProblemKind, RestrictedParams,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PROPERTY_CASES: u32 = 1000;

pub fn normal(s1: f64, s2: f64, rho: f64) -> ModelSpec {
    ModelSpec::Normal(BivariateNormalSpec::new(s1, s2, rho).unwrap())
}

pub fn exp(s1: f64, s2: f64) -> ModelSpec {
    ModelSpec::Exponential(ExpLocationSpec::new(s1, s2).unwrap())
}

pub fn gamma(a1: f64, a2: f64) -> ModelSpec {
    ModelSpec::Gamma(GammaScaleSpec::new(a1, a2).unwrap())
}

pub fn power(a1: f64, a2: f64) -> ModelSpec {
    ModelSpec::Power(PowerScaleSpec::new(a1, a2).unwrap())
}

pub const NORMAL_TABLE_CONFIGS: [(f64, f64, f64); 18] = [
    (3.0, 0.5, -0.9),
    (0.5, 5.0, -0.5),
    (1.0, 1.0, 0.0),
    (15.0, 2.0, 0.2),
    (1.0, 30.0, 0.5),
    (30.0, 1.0, 0.9),
    (0.1, 5.0, 0.2),
    (1.0, 25.0, 0.2),
    (0.5, 2.0, 0.5),
    (5.0, 15.0, 0.5),
    (0.5, 5.0, 0.9),
    (2.0, 15.0, 0.9),
    (5.0, 0.1, 0.2),
    (25.0, 1.0, 0.2),
    (2.0, 0.5, 0.5),
    (15.0, 5.0, 0.5),
    (5.0, 0.5, 0.9),
    (15.0, 2.0, 0.9),
];

pub const GAMMA_TABLE_CONFIGS: [(f64, f64); 6] =
    [(0.5, 0.2), (0.2, 0.8), (1.0, 1.0), (5.0, 2.0), (1.0, 30.0), (30.0, 1.0)];

/// Table configurations plus a few extra exponential, gamma and power points.
pub fn reference_models() -> Vec<ModelSpec> {
    let mut v: Vec<ModelSpec> = NORMAL_TABLE_CONFIGS.iter().map(|&(a, b, r)| normal(a, b, r)).collect();
    v.extend([(1.0, 1.0), (1.0, 2.0), (2.0, 0.5)].iter().map(|&(a, b)| exp(a, b)));
    v.extend(GAMMA_TABLE_CONFIGS.iter().map(|&(a, b)| gamma(a, b)));
    v.push(gamma(1.0, 0.1));
    v.extend([(1.0, 1.0), (0.5, 2.0), (3.0, 1.0)].iter().map(|&(a, b)| power(a, b)));
    v
}

pub fn location_dominance_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.25).chain([10.0, 100.0]).collect()
}

pub fn scale_dominance_grid() -> Vec<f64> {
    (0..=16).map(|i| 1.0 + i as f64 * 0.25).chain([10.0, 100.0]).collect()
}

pub fn dominance_grid(kind: ProblemKind) -> Vec<f64> {
    match kind {
        ProblemKind::Location => location_dominance_grid(),
        ProblemKind::Scale => scale_dominance_grid(),
    }
}

pub fn arb_model() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        (0.1f64..30.0, 0.1f64..30.0, -0.95f64..0.95).prop_map(|(a, b, r)| normal(a, b, r)),
        (0.1f64..10.0, 0.1f64..10.0).prop_map(|(a, b)| exp(a, b)),
        (0.1f64..30.0, 0.1f64..30.0).prop_map(|(a, b)| gamma(a, b)),
        (0.1f64..10.0, 0.1f64..10.0).prop_map(|(a, b)| power(a, b)),
    ]
}

pub fn arb_component() -> impl Strategy<Value = Component> {
    prop_oneof![Just(Component::First), Just(Component::Second)]
}

/// A model gap: θ2 − θ1 ∈ [0, 5] or θ2/θ1 ∈ [1, 6].
pub fn gap_for(kind: ProblemKind, u: f64) -> f64 {
    match kind {
        ProblemKind::Location => 5.0 * u,
        ProblemKind::Scale => 1.0 + 5.0 * u,
    }
}

pub fn contrast_for(kind: ProblemKind, u: f64) -> f64 {
    match kind {
        ProblemKind::Location => -6.0 + 12.0 * u,
        ProblemKind::Scale => (-4.0 + 8.0 * u).exp(),
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

pub fn check_reflexive(
    model: ModelSpec,
    comp: Component,
    pick: usize,
    u: f64,
    seed: u64,
) -> Result<(), TestCaseError> {
    let cat = catalog(&model, comp).unwrap();
    let e = cat[pick % cat.len()].clone();
    let params = RestrictedParams::from_gap(model.kind(), gap_for(model.kind(), u)).unwrap();
    let task = ComparisonTask::new(model, params, e.clone(), e, LossFn::absolute(model.kind()), 64, seed).unwrap();
    let r = gpn_monte_carlo(&task).unwrap();
    prop_assert_eq!(r.estimate, 0.5);
    prop_assert_eq!(r.tie_fraction, 1.0);
    Ok(())
}

pub fn check_complement(
    model: ModelSpec,
    comp: Component,
    picks: (usize, usize),
    u: f64,
    squared: bool,
    seed: u64,
) -> Result<(), TestCaseError> {
    let cat = catalog(&model, comp).unwrap();
    let a = cat[picks.0 % cat.len()].clone();
    let b = cat[picks.1 % cat.len()].clone();
    let loss = match (model.kind(), squared) {
        (ProblemKind::Location, false) => LossFn::LocationAbs,
        (ProblemKind::Location, true) => LossFn::LocationSquared,
        (ProblemKind::Scale, false) => LossFn::ScaleAbs,
        (ProblemKind::Scale, true) => LossFn::ScaleSquared,
    };
    let params = RestrictedParams::from_gap(model.kind(), gap_for(model.kind(), u)).unwrap();
    let ab = gpn_monte_carlo(&ComparisonTask::new(model, params, a.clone(), b.clone(), loss, 64, seed).unwrap()).unwrap();
    let ba = gpn_monte_carlo(&ComparisonTask::new(model, params, b, a, loss, 64, seed).unwrap()).unwrap();
    prop_assert_eq!(ab.ties, ba.ties);
    prop_assert_eq!(ab.wins + ab.ties + ba.wins, ab.n_samples);
    prop_assert!((ab.estimate + ba.estimate - 1.0).abs() <= 1e-15);
    Ok(())
}

pub fn check_clamp_idempotent(model: ModelSpec, comp: Component, pick: usize, u: f64) -> Result<(), TestCaseError> {
    let cat = catalog(&model, comp).unwrap();
    let base = cat[pick % cat.len()].clone();
    let bounds = default_bounds(&model, comp).unwrap();
    let once = clamp(&base, &bounds).unwrap();
    let twice = clamp(&once, &bounds).unwrap();
    let t = contrast_for(model.kind(), u);
    let (p1, p2) = (once.psi(t), twice.psi(t));
    prop_assert!(p1 == p2, "t={} once={} twice={}", t, p1, p2);
    Ok(())
}

/// δ(x + c) = δ(x) + c for location estimators, δ(c·x) = c·δ(x) for scale ones,
/// and the sampler maps one pivot stream to shifted/scaled data.
pub fn check_equivariance(
    model: ModelSpec,
    comp: Component,
    pick: usize,
    x: (f64, f64),
    c: f64,
    seed: u64,
) -> Result<(), TestCaseError> {
    let cat = catalog(&model, comp).unwrap();
    let e = cat[pick % cat.len()].clone();
    match model.kind() {
        ProblemKind::Location => {
            let (x1, x2) = (-10.0 + 20.0 * x.0, -10.0 + 20.0 * x.1);
            let shift = -20.0 + 40.0 * c;
            let base = e.evaluate(&Observation::new(x1, x2));
            let moved = e.evaluate(&Observation::new(x1 + shift, x2 + shift));
            prop_assert!(close(moved, base + shift, 1e-9), "{} vs {}", moved, base + shift);

            let p = RestrictedParams::location(0.0, 1.0).unwrap();
            let q = RestrictedParams::location(shift, 1.0 + shift).unwrap();
            let o1 = model.sample(&p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let o2 = model.sample(&q, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert!(close(o2.x1, o1.x1 + shift, 1e-12) && close(o2.x2, o1.x2 + shift, 1e-12));
        }
        ProblemKind::Scale => {
            let (x1, x2) = ((-5.0 + 10.0 * x.0).exp(), (-5.0 + 10.0 * x.1).exp());
            let factor = (-3.0 + 6.0 * c).exp();
            let base = e.evaluate(&Observation::new(x1, x2));
            let moved = e.evaluate(&Observation::new(factor * x1, factor * x2));
            prop_assert!(close(moved, factor * base, 1e-9), "{} vs {}", moved, factor * base);

            let p = RestrictedParams::scale(1.0, 2.0).unwrap();
            let q = RestrictedParams::scale(factor, 2.0 * factor).unwrap();
            let o1 = model.sample(&p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let o2 = model.sample(&q, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert!(close(o2.x1, factor * o1.x1, 1e-12) && close(o2.x2, factor * o1.x2, 1e-12));
        }
    }
    Ok(())
}

fn named(model: &ModelSpec, name: &str) -> Estimator {
    lookup(model, Component::First, name, None).unwrap()
}

/// Normal θ1 estimators that coincide in each range of α:
/// 0 ≤ α < 1: HP = PDT = RMLE; α > 1: PDT = PNLEE; α < 0: HP = RMLE.
pub fn check_case_coincidences(s1: f64, s2: f64, rho: f64, x: (f64, f64)) -> Result<(), TestCaseError> {
    let model = normal(s1, s2, rho);
    let alpha = match model {
        ModelSpec::Normal(m) => m.alpha(),
        _ => unreachable!(),
    };
    let obs = Observation::new(-10.0 + 20.0 * x.0, -10.0 + 20.0 * x.1);
    let val = |n: &str| named(&model, n).evaluate(&obs);
    let (hp, pdt, rmle, pnlee) = (val("hp"), val("pdt"), val("rmle"), val("pnlee"));
    if (0.0..1.0).contains(&alpha) {
        prop_assert!(close(hp, rmle, 1e-12) && close(pdt, rmle, 1e-12), "alpha={} hp={} pdt={} rmle={}", alpha, hp, pdt, rmle);
    } else if alpha > 1.0 {
        prop_assert!(close(pdt, pnlee, 1e-12), "alpha={} pdt={} pnlee={}", alpha, pdt, pnlee);
    } else if alpha < 0.0 {
        prop_assert!(close(hp, rmle, 1e-12), "alpha={} hp={} rmle={}", alpha, hp, rmle);
    }
    Ok(())
}

/// Parameter draws that land in each α range with comparable frequency.
pub fn arb_normal_params() -> impl Strategy<Value = (f64, f64, f64)> {
    prop_oneof![
        (0.1f64..30.0, 0.1f64..30.0, -0.95f64..0.95),
        // σ2 < ρσ1 gives α < 0
        (1.0f64..30.0, 0.05f64..1.0, 0.5f64..0.95).prop_map(|(a, f, r)| (a, f * r * a, r)),
        // σ1 < ρσ2 gives α > 1
        (1.0f64..30.0, 0.05f64..1.0, 0.5f64..0.95).prop_map(|(b, f, r)| (f * r * b, b, r)),
    ]
}
