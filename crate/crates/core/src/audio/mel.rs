use super::MfccConfig;
use crate::{Error, RealTensor, Result};

/// `2595·log₁₀(1 + f/700)`.
pub fn mel_scale(f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::InvalidArgument(format!("frequency must be >= 0, got {f}")));
    }
    Ok(2595.0 * (1.0 + f / 700.0).log10())
}

/// Inverse of [`mel_scale`].
pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// STFT bin index `floor((N+1)·f/sr)`.
pub fn hz_to_bin(f: f64, n_fft: usize, sample_rate: u32) -> usize {
    ((n_fft + 1) as f64 * f / sample_rate as f64).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    /// `(n_mels, n_bins)` triangular weights.
    pub weights: RealTensor,
    /// Bin edges `f(0), …, f(n_mels + 1)`; filter `m` peaks at `points[m + 1]`.
    pub points: Vec<usize>,
}

impl MelFilterbank {
    pub fn n_mels(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn n_bins(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn centers(&self) -> &[usize] {
        &self.points[1..self.points.len() - 1]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let b = self.n_bins();
        &self.weights.data()[m * b..(m + 1) * b]
    }

    /// `H·P` for `P` laid out `(n_bins, n_frames)`; returns `(n_mels, n_frames)`.
    pub fn apply(&self, power: &[f64], frames: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_mels() * frames];
        for m in 0..self.n_mels() {
            let (lo, hi) = (self.points[m], self.points[m + 2]);
            let row = self.row(m);
            let dst = &mut out[m * frames..(m + 1) * frames];
            for i in lo..=hi {
                let w = row[i];
                if w == 0.0 {
                    continue;
                }
                for (d, p) in dst.iter_mut().zip(&power[i * frames..(i + 1) * frames]) {
                    *d += w * p;
                }
            }
        }
        out
    }
}

/// Triangular filters with centres equally spaced on the mel scale.
pub fn mel_filterbank(cfg: &MfccConfig, sample_rate: u32) -> Result<MelFilterbank> {
    let fmax = cfg.fmax_for(sample_rate)?;
    let n_bins = cfg.stft.n_bins();
    let m = cfg.n_mels;
    let lo = mel_scale(cfg.fmin)?;
    let hi = mel_scale(fmax)?;
    let points: Vec<usize> = (0..m + 2)
        .map(|j| {
            let mel = lo + (hi - lo) * j as f64 / (m + 1) as f64;
            hz_to_bin(mel_to_hz(mel), cfg.stft.n_fft, sample_rate).min(n_bins - 1)
        })
        .collect();
    if let Some(j) = (1..points.len()).find(|&j| points[j] <= points[j - 1]) {
        return Err(Error::InvalidArgument(format!(
            "mel filter edges {} and {} both fall on STFT bin {}; use fewer mels or a larger n_fft",
            j - 1,
            j,
            points[j]
        )));
    }
    let mut w = vec![0.0; m * n_bins];
    for f in 0..m {
        let (a, c, b) = (points[f], points[f + 1], points[f + 2]);
        let row = &mut w[f * n_bins..(f + 1) * n_bins];
        for i in a..=c {
            row[i] = (i - a) as f64 / (c - a) as f64;
        }
        for i in c..=b {
            row[i] = (b - i) as f64 / (b - c) as f64;
        }
    }
    Ok(MelFilterbank {
        weights: RealTensor::new(&[m, n_bins], w)?,
        points,
    })
}
