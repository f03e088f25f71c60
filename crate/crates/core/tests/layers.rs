use cvnn_core::activations::{cardioid, crelu, modrelu, smooth_zrelu, zrelu};
use cvnn_core::layers::{complex_avgpool, complex_batchnorm_forward, complex_conv2d, BatchNormConfig, BatchNormState, Conv2dParams, PoolSpec};
use cvnn_core::{Complex64, ComplexTensor, RealTensor, Rng};
use proptest::prelude::*;

fn randc(shape: &[usize], seed: u64) -> ComplexTensor {
    let mut rng = Rng::seed(seed);
    let mut t = ComplexTensor::zeros(shape).unwrap();
    let (re, im) = t.planes_mut();
    rng.fill_normal(re, 1.0);
    rng.fill_normal(im, 1.0);
    t
}

/// Direct complex cross-correlation with zero padding.
fn naive_conv(x: &ComplexTensor, w: &ComplexTensor, b: &ComplexTensor, stride: (usize, usize), pad: (usize, usize)) -> ComplexTensor {
    let (xs, ws) = (x.shape(), w.shape());
    let (n, c, h, wd) = (xs[0], xs[1], xs[2], xs[3]);
    let (o, kh, kw) = (ws[0], ws[2], ws[3]);
    let ho = (h + 2 * pad.0 - kh) / stride.0 + 1;
    let wo = (wd + 2 * pad.1 - kw) / stride.1 + 1;
    let mut out = Vec::with_capacity(n * o * ho * wo);
    for bi in 0..n {
        for oc in 0..o {
            for i in 0..ho {
                for j in 0..wo {
                    let mut s = b.get(oc);
                    for ic in 0..c {
                        for a in 0..kh {
                            for d in 0..kw {
                                let y = (i * stride.0 + a) as isize - pad.0 as isize;
                                let z = (j * stride.1 + d) as isize - pad.1 as isize;
                                if y >= 0 && z >= 0 && (y as usize) < h && (z as usize) < wd {
                                    s += x.get(((bi * c + ic) * h + y as usize) * wd + z as usize) * w.get(((oc * c + ic) * kh + a) * kw + d);
                                }
                            }
                        }
                    }
                    out.push(s);
                }
            }
        }
    }
    ComplexTensor::from_complex(&[n, o, ho, wo], &out).unwrap()
}

fn max_diff(a: &ComplexTensor, b: &ComplexTensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

#[test]
fn conv_matches_direct_sum() {
    let mut rng = Rng::seed(11);
    for case in 0..30u64 {
        let (n, c, o) = (1 + rng.below(2), 1 + rng.below(3), 1 + rng.below(3));
        let (h, w) = (2 + rng.below(6), 2 + rng.below(6));
        let (kh, kw) = (1 + rng.below(h), 1 + rng.below(w));
        let stride = (1 + rng.below(2), 1 + rng.below(3));
        let pad = (rng.below(2), rng.below(3));
        let x = randc(&[n, c, h, w], case);
        let p = Conv2dParams {
            weight: randc(&[o, c, kh, kw], case + 100),
            bias: randc(&[o], case + 200),
            stride,
            padding: pad,
        };
        let got = complex_conv2d(&x, &p).unwrap();
        assert!(max_diff(&got, &naive_conv(&x, &p.weight, &p.bias, stride, pad)) < 1e-10, "case {case}");
    }
}

#[test]
fn whitening_reaches_identity_covariance() {
    let (n, c) = (5000, 2);
    let mut rng = Rng::seed(4);
    let mut x = ComplexTensor::zeros(&[n, c]).unwrap();
    for i in 0..n {
        for ch in 0..c {
            let (g1, g2) = (rng.normal(), rng.normal());
            x.set(i * c + ch, Complex64::new(2.0 + 3.0 * g1, -1.0 + 0.8 * g1 + 0.3 * g2));
        }
    }
    let mut st = BatchNormState::new(c, BatchNormConfig::default()).unwrap();
    let gd = ComplexTensor::from_planes(&[c], vec![1.0; c], vec![1.0; c]).unwrap();
    let zero = ComplexTensor::zeros(&[c]).unwrap();
    let y = complex_batchnorm_forward(&x, &gd, &zero, &zero, &mut st).unwrap();
    for ch in 0..c {
        let vals: Vec<Complex64> = (0..n).map(|i| y.get(i * c + ch)).collect();
        let mean: Complex64 = vals.iter().sum::<Complex64>() / n as f64;
        let rr = vals.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
        let ii = vals.iter().map(|z| z.im * z.im).sum::<f64>() / n as f64;
        let ri = vals.iter().map(|z| z.re * z.im).sum::<f64>() / n as f64;
        assert!(mean.norm() < 1e-10);
        assert!((rr - 1.0).abs() < 5e-3 && (ii - 1.0).abs() < 5e-3 && ri.abs() < 5e-3, "{rr} {ii} {ri}");
    }
}

fn complex_vec(len: usize) -> impl Strategy<Value = ComplexTensor> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), len).prop_map(move |v| {
        let (re, im) = v.into_iter().unzip();
        ComplexTensor::from_planes(&[len], re, im).unwrap()
    })
}

proptest! {
    #[test]
    fn conv_is_linear_in_input(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let x = randc(&[1, 2, 5, 4], seed);
        let y = randc(&[1, 2, 5, 4], seed + 1);
        let p = Conv2dParams { weight: randc(&[3, 2, 2, 3], seed + 2), bias: ComplexTensor::zeros(&[3]).unwrap(), stride: (1, 2), padding: (1, 0) };
        let mix = x.scale(a).add(&y.scale(b)).unwrap();
        let lhs = complex_conv2d(&mix, &p).unwrap();
        let rhs = complex_conv2d(&x, &p).unwrap().scale(a).add(&complex_conv2d(&y, &p).unwrap().scale(b)).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn rectifiers_are_idempotent(z in complex_vec(16)) {
        prop_assert_eq!(crelu(&crelu(&z)), crelu(&z));
        prop_assert_eq!(zrelu(&zrelu(&z)), zrelu(&z));
    }

    #[test]
    fn magnitude_never_grows(z in complex_vec(16), b in -2.0f64..2.0) {
        let z = z.reshape(&[16, 1]).unwrap();
        let b = b.min(0.0);
        for out in [cardioid(&z), modrelu(&z, &[b]).unwrap(), smooth_zrelu(&z, 2.0).unwrap(), crelu(&z)] {
            for (o, x) in out.iter().zip(z.iter()) {
                prop_assert!(o.norm() <= x.norm() + 1e-12);
            }
        }
    }

    #[test]
    fn batchnorm_output_is_centred(seed in 0u64..500, shift in -10.0f64..10.0) {
        let x = randc(&[8, 3, 2, 2], seed).map(|z| z + shift);
        let mut st = BatchNormState::new(3, BatchNormConfig::default()).unwrap();
        let gd = randc(&[3], seed + 7);
        let go = randc(&[3], seed + 8);
        let zero = ComplexTensor::zeros(&[3]).unwrap();
        let y = complex_batchnorm_forward(&x, &gd, &go, &zero, &mut st).unwrap();
        for ch in 0..3 {
            let mut m = Complex64::new(0.0, 0.0);
            for b in 0..8 {
                for k in 0..4 {
                    m += y.get((b * 3 + ch) * 4 + k);
                }
            }
            prop_assert!(m.norm() / 32.0 < 1e-9);
        }
    }

    #[test]
    fn avgpool_keeps_constants(re in -4.0f64..4.0, im in -4.0f64..4.0) {
        let x = ComplexTensor::from_planes(&[2, 2, 4, 6], vec![re; 96], vec![im; 96]).unwrap();
        let y = complex_avgpool(&x, PoolSpec::square(2)).unwrap();
        prop_assert_eq!(y.shape(), &[2, 2, 2, 3]);
        prop_assert!(y.iter().all(|z| (z - Complex64::new(re, im)).norm() < 1e-12));
    }

    #[test]
    fn tensor_bytes_roundtrip(z in complex_vec(9)) {
        let t = z.reshape(&[3, 3]).unwrap();
        let back = ComplexTensor::read_from(&mut t.to_bytes().as_slice()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn polar_roundtrip(mag in prop::collection::vec(0.01f64..5.0, 6), ph in prop::collection::vec(-3.1f64..3.1, 6)) {
        let t = ComplexTensor::from_polar(&RealTensor::from_vec(mag.clone()), &RealTensor::from_vec(ph.clone())).unwrap();
        for (i, z) in t.iter().enumerate() {
            prop_assert!((z.norm() - mag[i]).abs() < 1e-12);
            prop_assert!((z.arg() - ph[i]).abs() < 1e-12);
        }
    }
}
