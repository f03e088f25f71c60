use std::f64::consts::PI;

use super::AudioClip;
use crate::audio::{mel_filterbank, MfccConfig, StftConfig};
use crate::{Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Class 0 harmonic tones, class 1 filtered noise bursts.
    TonalPercussive,
    /// Class pairs with equal magnitude spectrograms and different phase.
    PhaseCoded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n_per_class: usize,
    pub duration: f64,
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            kind: SynthKind::TonalPercussive,
            n_per_class: 200,
            duration: 3.0,
            sample_rate: 22050,
            n_fft: 2048,
            hop: 512,
        }
    }
}

/// Generates `n_per_class` clips for each of the two classes, in pairs
/// `(class 0, class 1)`.
pub fn synth_audio_dataset(spec: &SynthSpec, rng: &mut Rng) -> Result<Vec<AudioClip>> {
    let len = (spec.duration * spec.sample_rate as f64).round() as usize;
    if len == 0 || spec.n_per_class == 0 {
        return Err(Error::InvalidArgument("synthetic dataset needs a positive duration and count".into()));
    }
    let mut clips = Vec::with_capacity(2 * spec.n_per_class);
    match spec.kind {
        SynthKind::TonalPercussive => {
            for i in 0..spec.n_per_class {
                let mut r = rng.fork();
                let clip = |samples, label, tag: &str| AudioClip {
                    samples,
                    sample_rate: spec.sample_rate,
                    label,
                    source_id: format!("{tag}-{i:04}"),
                };
                clips.push(clip(tonal(len, spec.sample_rate, &mut r), 0, "tonal"));
                clips.push(clip(percussive(len, spec.sample_rate, &mut r), 1, "percussive"));
            }
        }
        SynthKind::PhaseCoded => {
            let bins = phase_coded_bins(spec)?;
            let step = spec.n_fft / spec.hop;
            let q: Vec<usize> = bins.iter().map(|b| b / step).collect();
            for i in 0..spec.n_per_class {
                let mut r = rng.fork();
                let amp: Vec<f64> = q.iter().map(|_| r.uniform_range(0.5, 1.0)).collect();
                let theta_a: Vec<f64> = q.iter().map(|_| r.uniform_range(-0.3, 0.3)).collect();
                // Reversing each analysis frame conjugates its spectrum up to a
                // linear phase, so the magnitudes match while the relative
                // phases between bands change.
                let theta_b: Vec<f64> = theta_a
                    .iter()
                    .zip(&q)
                    .map(|(t, &qq)| -t - 2.0 * PI * ((qq * (spec.n_fft - 1)) % spec.hop) as f64 / spec.hop as f64)
                    .collect();
                for (label, theta) in [(0, &theta_a), (1, &theta_b)] {
                    clips.push(AudioClip {
                        samples: periodic_tones(len, spec.hop, &q, &amp, theta),
                        sample_rate: spec.sample_rate,
                        label,
                        source_id: format!("phase-{i:04}-{}", ["a", "b"][label]),
                    });
                }
            }
        }
    }
    Ok(clips)
}

/// Tone bins for the phase-coded set: each mel band centre rounded to a
/// multiple of `n_fft/hop`, so every tone completes a whole number of cycles
/// per hop and its frame-local phase is the same in every frame.
pub fn phase_coded_bins(spec: &SynthSpec) -> Result<Vec<usize>> {
    if spec.hop == 0 || !spec.n_fft.is_multiple_of(spec.hop) {
        return Err(Error::InvalidArgument("phase-coded synthesis needs hop dividing n_fft".into()));
    }
    let cfg = MfccConfig::with_stft(StftConfig::new(spec.n_fft, spec.hop)?);
    let fb = mel_filterbank(&cfg, spec.sample_rate)?;
    let step = spec.n_fft / spec.hop;
    let max_bin = spec.n_fft / 2 - step;
    let mut bins: Vec<usize> = fb
        .centers()
        .iter()
        .map(|&c| ((c as f64 / step as f64).round() as usize * step).clamp(step, max_bin))
        .collect();
    bins.dedup();
    Ok(bins)
}

/// `Σ a_j cos(2π q_j t / hop + θ_j) / J`, built from one exact period.
fn periodic_tones(len: usize, hop: usize, q: &[usize], amp: &[f64], theta: &[f64]) -> Vec<f64> {
    let scale = 0.8 / q.len() as f64;
    let period: Vec<f64> = (0..hop)
        .map(|t| {
            q.iter()
                .zip(amp)
                .zip(theta)
                .map(|((&qq, a), th)| a * (2.0 * PI * ((qq * t) % hop) as f64 / hop as f64 + th).cos())
                .sum::<f64>()
                * scale
        })
        .collect();
    (0..len).map(|t| period[t % hop]).collect()
}

fn normalise(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
}

/// Harmonic stack on a fundamental in `[200, 600]` Hz with light noise.
fn tonal(len: usize, sr: u32, rng: &mut Rng) -> Vec<f64> {
    let f0 = rng.uniform_range(200.0, 600.0);
    let harmonics = 3 + rng.below(3);
    let parts: Vec<(f64, f64, f64)> = (1..=harmonics)
        .map(|k| (k as f64 * f0, rng.uniform_range(0.6, 1.0) / k as f64, rng.uniform_range(-PI, PI)))
        .collect();
    let mut x: Vec<f64> = (0..len)
        .map(|t| {
            let time = t as f64 / sr as f64;
            parts.iter().map(|(f, a, p)| a * (2.0 * PI * f * time + p).sin()).sum::<f64>() + 0.01 * rng.normal()
        })
        .collect();
    normalise(&mut x, 0.8);
    x
}

/// Low-passed noise bursts with exponential decay envelopes.
fn percussive(len: usize, sr: u32, rng: &mut Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..len).map(|_| 0.005 * rng.normal()).collect();
    let bursts = 3 + rng.below(6);
    for _ in 0..bursts {
        let onset = rng.below(len);
        let tau = rng.uniform_range(0.01, 0.08) * sr as f64;
        let dur = (rng.uniform_range(0.05, 0.3) * sr as f64) as usize;
        let alpha = rng.uniform_range(0.0, 0.9);
        let gain = rng.uniform_range(0.5, 1.0);
        let mut y = 0.0;
        for t in 0..dur.min(len - onset) {
            y = alpha * y + (1.0 - alpha) * rng.normal();
            x[onset + t] += gain * y * (-(t as f64) / tau).exp();
        }
    }
    normalise(&mut x, 0.8);
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::stft;

    fn small(kind: SynthKind) -> SynthSpec {
        SynthSpec {
            kind,
            n_per_class: 3,
            duration: 0.5,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn balanced_and_deterministic() {
        for kind in [SynthKind::TonalPercussive, SynthKind::PhaseCoded] {
            let a = synth_audio_dataset(&small(kind), &mut Rng::seed(9)).unwrap();
            let b = synth_audio_dataset(&small(kind), &mut Rng::seed(9)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.iter().filter(|c| c.label == 0).count(), 3);
            assert_eq!(a.iter().filter(|c| c.label == 1).count(), 3);
            assert!(a.iter().all(|c| c.samples.len() == 11025 && c.samples.iter().all(|v| v.abs() <= 1.0)));
        }
    }

    #[test]
    fn phase_coded_pair_shares_magnitude() {
        let spec = small(SynthKind::PhaseCoded);
        let clips = synth_audio_dataset(&spec, &mut Rng::seed(2)).unwrap();
        let cfg = StftConfig::default();
        let sa = stft(&clips[0].samples, &cfg, spec.sample_rate).unwrap();
        let sb = stft(&clips[1].samples, &cfg, spec.sample_rate).unwrap();
        let (ma, mb) = (sa.data.magnitude(), sb.data.magnitude());
        let max_diff = ma.data().iter().zip(mb.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max_diff < 1e-8, "{max_diff}");
        let phase_diff = sa.data.phase().data().iter().zip(sb.data.phase().data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(phase_diff > 0.5);
    }

    #[test]
    fn zero_duration_rejected() {
        let spec = SynthSpec {
            duration: 0.0,
            ..SynthSpec::default()
        };
        assert!(synth_audio_dataset(&spec, &mut Rng::seed(0)).is_err());
    }
}
