use std::f64::consts::PI;

use super::Fft;
use crate::{ComplexTensor, Error, Result};

/// Symmetric Hann window `½(1 − cos(2πi/(n−1)))`.
pub fn hann_window(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("Hann window needs n >= 2, got {n}")));
    }
    let d = (n - 1) as f64;
    Ok((0..n).map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / d).cos())).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StftConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub window: Vec<f64>,
}

impl StftConfig {
    /// Hann-windowed configuration.
    pub fn new(n_fft: usize, hop: usize) -> Result<Self> {
        Self::with_window(n_fft, hop, hann_window(n_fft)?)
    }

    pub fn with_window(n_fft: usize, hop: usize, window: Vec<f64>) -> Result<Self> {
        if hop == 0 || hop > n_fft {
            return Err(Error::InvalidArgument(format!("hop {hop} must be in 1..={n_fft}")));
        }
        if window.len() != n_fft {
            return Err(Error::InvalidArgument(format!(
                "window length {} does not match n_fft {n_fft}",
                window.len()
            )));
        }
        if window.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidArgument("window values must lie in [0, 1]".into()));
        }
        if !n_fft.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("n_fft {n_fft} must be a power of two")));
        }
        Ok(Self { n_fft, hop, window })
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn n_frames(&self, len: usize) -> usize {
        if len < self.n_fft {
            0
        } else {
            (len - self.n_fft) / self.hop + 1
        }
    }
}

impl Default for StftConfig {
    fn default() -> Self {
        Self::new(2048, 512).expect("default STFT configuration is valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    /// `(n_bins, n_frames)`.
    pub data: ComplexTensor,
    pub sample_rate: u32,
}

impl ComplexSpectrogram {
    pub fn n_bins(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn n_frames(&self) -> usize {
        self.data.shape()[1]
    }

    /// `|ĥ|²`, same layout.
    pub fn power(&self) -> Vec<f64> {
        self.data.re().iter().zip(self.data.im()).map(|(r, i)| r * r + i * i).collect()
    }
}

/// Short-time Fourier transform with frames starting at multiples of `hop`;
/// the DFT phase is referenced to each frame's first sample.
pub fn stft(x: &[f64], cfg: &StftConfig, sample_rate: u32) -> Result<ComplexSpectrogram> {
    let n = cfg.n_fft;
    if x.len() < n {
        return Err(Error::InvalidArgument(format!(
            "signal of {} samples is shorter than the {n}-point window",
            x.len()
        )));
    }
    let frames = cfg.n_frames(x.len());
    let bins = cfg.n_bins();
    let fft = Fft::new(n)?;
    let mut out = ComplexTensor::zeros(&[bins, frames])?;
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for f in 0..frames {
        let frame = &x[f * cfg.hop..f * cfg.hop + n];
        for i in 0..n {
            re[i] = frame[i] * cfg.window[i];
            im[i] = 0.0;
        }
        fft.forward(&mut re, &mut im);
        let (or, oi) = out.planes_mut();
        for k in 0..bins {
            or[k * frames + f] = re[k];
            oi[k * frames + f] = im[k];
        }
    }
    Ok(ComplexSpectrogram { data: out, sample_rate })
}
