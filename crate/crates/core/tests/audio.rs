use std::f64::consts::PI;

use cvnn_core::audio::{mel_filterbank, mel_scale, mel_to_hz, stft, MfccConfig, StftConfig};
use cvnn_core::data::{synth_audio_dataset, SynthKind, SynthSpec};
use cvnn_core::{Complex64, Rng};
use proptest::prelude::*;

fn naive_frame(frame: &[f64], k: usize) -> Complex64 {
    let n = frame.len();
    frame
        .iter()
        .enumerate()
        .map(|(t, &x)| x * Complex64::from_polar(1.0, -2.0 * PI * (k * t % n) as f64 / n as f64))
        .sum()
}

#[test]
fn stft_matches_direct_dft() {
    let cfg = StftConfig::new(64, 16).unwrap();
    let mut rng = Rng::seed(8);
    let x: Vec<f64> = (0..300).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let s = stft(&x, &cfg, 8000).unwrap();
    let frames = (300 - 64) / 16 + 1;
    assert_eq!(s.n_frames(), frames);
    assert_eq!(s.n_bins(), 33);
    for f in 0..frames {
        let seg: Vec<f64> = (0..64)
            .map(|i| x[f * 16 + i] * (0.5 - 0.5 * (2.0 * PI * i as f64 / 63.0).cos()))
            .collect();
        for k in 0..33 {
            let want = naive_frame(&seg, k);
            assert!((s.data.get(k * frames + f) - want).norm() < 1e-10, "frame {f} bin {k}");
        }
    }
}

#[test]
fn filterbank_covers_interior_bins() {
    let cfg = MfccConfig::default();
    let fb = mel_filterbank(&cfg, 22050).unwrap();
    let c = fb.centers();
    for bin in c[0]..=c[c.len() - 1] {
        let s: f64 = (0..fb.n_mels()).map(|m| fb.row(m)[bin]).sum();
        assert!(s > 0.0 && s <= 2.0 + 1e-12, "bin {bin}: {s}");
    }
    assert!(c.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn pure_tone_peaks_at_its_bin() {
    let cfg = StftConfig::default();
    let sr = 22050;
    for f0 in [220.0, 1000.0, 3517.0, 8000.0] {
        let x: Vec<f64> = (0..sr).map(|t| (2.0 * PI * f0 * t as f64 / sr as f64).sin()).collect();
        let s = stft(&x, &cfg, sr as u32).unwrap();
        let frames = s.n_frames();
        let p = s.power();
        let peak = (0..s.n_bins())
            .max_by(|&a, &b| p[a * frames].partial_cmp(&p[b * frames]).unwrap())
            .unwrap();
        let expect = f0 * cfg.n_fft as f64 / sr as f64;
        assert!((peak as f64 - expect).abs() <= 1.0, "{f0} Hz: bin {peak}, expected {expect}");
    }
}

#[test]
fn phase_coded_classes_differ_only_in_phase() {
    let spec = SynthSpec {
        kind: SynthKind::PhaseCoded,
        n_per_class: 2,
        duration: 0.5,
        ..SynthSpec::default()
    };
    let clips = synth_audio_dataset(&spec, &mut Rng::seed(3)).unwrap();
    let cfg = StftConfig::default();
    for pair in clips.chunks(2) {
        let a = stft(&pair[0].samples, &cfg, spec.sample_rate).unwrap();
        let b = stft(&pair[1].samples, &cfg, spec.sample_rate).unwrap();
        let (pa, pb) = (a.power(), b.power());
        let peak = pa.iter().cloned().fold(0.0, f64::max);
        assert!(pa.iter().zip(&pb).all(|(x, y)| (x - y).abs() <= 1e-6 * peak));
        let phase_gap: f64 = a.data.iter().zip(b.data.iter()).filter(|(z, _)| z.norm_sqr() > 1e-3 * peak).map(|(z, w)| (z.arg() - w.arg()).sin().abs()).sum();
        assert!(phase_gap > 1.0);
    }
}

proptest! {
    #[test]
    fn mel_inverse_roundtrip(f in 0.0f64..20000.0) {
        prop_assert!((mel_to_hz(mel_scale(f).unwrap()) - f).abs() < 1e-8 * (1.0 + f));
    }

    #[test]
    fn mel_is_increasing(a in 0.0f64..10000.0, d in 0.001f64..5000.0) {
        prop_assert!(mel_scale(a + d).unwrap() > mel_scale(a).unwrap());
    }
}
