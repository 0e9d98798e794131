mod common;

use proptest::prelude::*;
use wkde::quad;
use wkde::{MixtureModel, ModelId};

fn model(i: usize) -> MixtureModel {
    [MixtureModel::f1(), MixtureModel::f2(), MixtureModel::f3()][i].clone()
}

#[test]
fn f2_mean_within_three_se() {
    let m = MixtureModel::f2();
    let x = m.sample(100_000, 1);
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mu = quad::simpson_split(0.0, 1.0, &[0.7], 1e-12, &|t| t * m.mixture_pdf(t).unwrap());
    let m2 = quad::simpson_split(0.0, 1.0, &[0.7], 1e-12, &|t| t * t * m.mixture_pdf(t).unwrap());
    let se = ((m2 - mu * mu) / n).sqrt();
    assert!((mean - mu).abs() < 3.0 * se, "mean {mean}, target {mu}, se {se}");
}

#[test]
fn f3_ks_below_one_percent_critical_value() {
    let m = MixtureModel::f3();
    let x = m.sample(100_000, 2);
    let d = common::ks_statistic(&x, |t| m.mixture_cdf(t).unwrap());
    assert!(d < common::ks_critical_1pct(x.len()), "D = {d}");
}

#[test]
fn every_model_ks_at_large_n() {
    for id in [ModelId::F1, ModelId::F2, ModelId::F3] {
        let m = MixtureModel::from_id(id).unwrap();
        let x = m.sample(50_000, 40);
        let d = common::ks_statistic(&x, |t| m.theta() * t + (1.0 - m.theta()) * m.component_cdf(t).unwrap());
        assert!(d < common::ks_critical_1pct(x.len()), "{id}: D = {d}");
    }
}

#[test]
fn component_density_integrates_to_one() {
    for i in 0..3 {
        let m = model(i);
        let mass = m.integrate(0.0, 1.0, &|t| m.component_pdf(t).unwrap());
        assert!((mass - 1.0).abs() < 1e-6);
    }
}

#[test]
fn f2_inverse_round_trip_via_quadrature_cdf() {
    let m = MixtureModel::f2();
    let u = quad::simpson(0.0, 0.35, 1e-13, &|t| m.component_pdf(t).unwrap());
    assert!((m.component_cdf_inverse(u).unwrap() - 0.35).abs() < 1e-9);
}

#[test]
fn f32_sampling_is_reproducible() {
    let m = wkde::MixtureModel32::f3();
    let a = m.sample(1000, 9);
    assert_eq!(a, m.sample(1000, 9));
    assert!(a.iter().all(|&x| (0.0..=1.0).contains(&x)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_reproducible_and_in_unit_interval(i in 0usize..3, n in 1usize..500, seed in any::<u64>()) {
        let m = model(i);
        let a = m.sample(n, seed);
        prop_assert_eq!(a.len(), n);
        prop_assert!(a.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert_eq!(a, m.sample(n, seed));
    }

    #[test]
    fn mixture_density_at_least_theta(i in 0usize..3, x in 0.0f64..=1.0) {
        let m = model(i);
        let g = m.mixture_pdf(x).unwrap();
        prop_assert!(g >= m.theta());
        prop_assert!((g - (m.theta() + (1.0 - m.theta()) * m.component_pdf(x).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn inverse_cdf_round_trips(i in 0usize..3, u in 0.0f64..=1.0) {
        let m = model(i);
        let x = m.component_cdf_inverse(u).unwrap();
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!((m.component_cdf(x).unwrap() - u).abs() < 1e-9);
    }

    #[test]
    fn out_of_domain_rejected(i in 0usize..3, x in 1.0001f64..5.0) {
        let m = model(i);
        prop_assert!(m.component_pdf(x).is_err());
        prop_assert!(m.mixture_pdf(-x).is_err());
        prop_assert!(m.component_cdf_inverse(x).is_err());
    }
}
