//! Shared fixtures for the criterion benchmarks.

use cvnn_core::{ComplexTensor, Rng};

pub fn random_tensor(shape: &[usize], seed: u64) -> ComplexTensor {
    let mut rng = Rng::seed(seed);
    let mut t = ComplexTensor::zeros(shape).expect("valid bench shape");
    let (re, im) = t.planes_mut();
    rng.fill_normal(re, 1.0);
    rng.fill_normal(im, 1.0);
    t
}

pub fn random_signal(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::seed(seed);
    (0..len).map(|_| rng.uniform_range(-1.0, 1.0)).collect()
}
