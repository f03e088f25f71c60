use std::f64::consts::PI;

use cvnn_core::init::{he_circular_normal, rayleigh_phase_init, rayleigh_sigma, xavier_circular_uniform, Criterion};
use cvnn_core::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn phase_uniformity_p(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    let mut bins = [0usize; 16];
    for a in values {
        bins[(((a + PI) / (2.0 * PI) * 16.0) as usize).min(15)] += 1;
    }
    let e = n as f64 / 16.0;
    let chi2: f64 = bins.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new(15.0).unwrap().cdf(chi2)
}

#[test]
fn circular_inits_have_uniform_phase() {
    let n = 50_000;
    let xa = xavier_circular_uniform(20, 40, &[n], &mut Rng::seed(1)).unwrap();
    let he = he_circular_normal(30, &[n], &mut Rng::seed(2)).unwrap();
    let ra = rayleigh_phase_init(Criterion::Glorot, 30, 10, &[n], &mut Rng::seed(3)).unwrap();
    for t in [xa, he, ra] {
        let p = phase_uniformity_p(t.iter().map(|z| z.arg()), n);
        assert!(p > 0.001, "phase χ² p = {p}");
    }
}

#[test]
fn second_moments_match_targets() {
    let n = 100_000;
    let e = |t: &cvnn_core::ComplexTensor| t.norm_sqr() / n as f64;
    let xa = xavier_circular_uniform(20, 40, &[n], &mut Rng::seed(4)).unwrap();
    assert!((e(&xa) / (3.0 / 60.0) - 1.0).abs() < 0.03);
    let he = he_circular_normal(30, &[n], &mut Rng::seed(5)).unwrap();
    assert!((e(&he) / (4.0 / 30.0) - 1.0).abs() < 0.03);
    for crit in [Criterion::Glorot, Criterion::He] {
        let s = rayleigh_sigma(crit, 30, 10);
        let ra = rayleigh_phase_init(crit, 30, 10, &[n], &mut Rng::seed(6)).unwrap();
        assert!((e(&ra) / (2.0 * s * s) - 1.0).abs() < 0.03);
    }
    assert!((rayleigh_sigma(Criterion::He, 25, 7) - 0.2).abs() < 1e-15);
}

#[test]
fn xavier_circular_stays_in_disc() {
    let t = xavier_circular_uniform(8, 8, &[10_000], &mut Rng::seed(7)).unwrap();
    let r = (6.0f64 / 16.0).sqrt();
    assert!(t.iter().all(|z| z.norm() <= r + 1e-12));
}
