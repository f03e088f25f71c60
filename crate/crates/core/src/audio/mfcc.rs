use std::f64::consts::PI;
use std::str::FromStr;

use super::{mel_filterbank, stft, ComplexSpectrogram, MelFilterbank, StftConfig};
use crate::{ComplexTensor, Error, RealTensor, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub stft: StftConfig,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub fmin: f64,
    /// Defaults to the Nyquist frequency.
    pub fmax: Option<f64>,
    /// Added to mel energies before the natural log.
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self::with_stft(StftConfig::default())
    }
}

impl MfccConfig {
    pub fn with_stft(stft: StftConfig) -> Self {
        Self {
            stft,
            n_mels: 26,
            n_mfcc: 13,
            fmin: 0.0,
            fmax: None,
            log_floor: 1e-10,
        }
    }

    /// Validated upper frequency for `sample_rate`.
    pub fn fmax_for(&self, sample_rate: u32) -> Result<f64> {
        let nyquist = sample_rate as f64 / 2.0;
        let fmax = self.fmax.unwrap_or(nyquist);
        if !(self.fmin >= 0.0 && self.fmin < fmax && fmax <= nyquist) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got fmin {} fmax {fmax}",
                self.fmin
            )));
        }
        if self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return Err(Error::InvalidArgument(format!(
                "n_mfcc {} must be in 1..={}",
                self.n_mfcc, self.n_mels
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::InvalidArgument("log_floor must be > 0".into()));
        }
        Ok(fmax)
    }
}

/// Orthonormal DCT-II basis, first `n_out` rows of the `n_in`-point transform.
pub fn dct_matrix(n_out: usize, n_in: usize) -> RealTensor {
    let n = n_in as f64;
    let mut c = vec![0.0; n_out * n_in];
    for k in 0..n_out {
        let s = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for j in 0..n_in {
            c[k * n_in + j] = s * (PI * k as f64 * (2 * j + 1) as f64 / (2.0 * n)).cos();
        }
    }
    RealTensor::new(&[n_out, n_in], c).expect("DCT sizes are positive")
}

/// Full orthonormal DCT-II of `x`.
pub fn dct_ii(x: &[f64]) -> Vec<f64> {
    let c = dct_matrix(x.len(), x.len());
    c.data().chunks(x.len()).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// `C·L` over `(rows, frames)` data, keeping `c.shape()[0]` output rows.
fn dct_columns(c: &RealTensor, l: &[f64], frames: usize) -> Vec<f64> {
    let (n_out, n_in) = (c.shape()[0], c.shape()[1]);
    let mut out = vec![0.0; n_out * frames];
    for k in 0..n_out {
        for m in 0..n_in {
            let w = c.data()[k * n_in + m];
            for t in 0..frames {
                out[k * frames + t] += w * l[m * frames + t];
            }
        }
    }
    out
}

/// `ln(H·|ĥ|² + floor)` laid out `(n_mels, n_frames)`.
pub fn log_mel_energies(spec: &ComplexSpectrogram, fb: &MelFilterbank, log_floor: f64) -> Vec<f64> {
    fb.apply(&spec.power(), spec.n_frames())
        .into_iter()
        .map(|e| (e + log_floor).ln())
        .collect()
}

fn analyse(x: &[f64], cfg: &MfccConfig, sample_rate: u32) -> Result<(ComplexSpectrogram, MelFilterbank)> {
    let fb = mel_filterbank(cfg, sample_rate)?;
    Ok((stft(x, &cfg.stft, sample_rate)?, fb))
}

/// Standard MFCCs, `(n_mfcc, n_frames)`.
pub fn mfcc(x: &[f64], cfg: &MfccConfig, sample_rate: u32) -> Result<RealTensor> {
    let (spec, fb) = analyse(x, cfg, sample_rate)?;
    let frames = spec.n_frames();
    let l = log_mel_energies(&spec, &fb, cfg.log_floor);
    let c = dct_matrix(cfg.n_mfcc, cfg.n_mels);
    RealTensor::new(&[cfg.n_mfcc, frames], dct_columns(&c, &l, frames))
}

/// The raw complex STFT, `(n_bins, n_frames)`.
pub fn complex_mfcc_workflow1(x: &[f64], cfg: &StftConfig, sample_rate: u32) -> Result<ComplexTensor> {
    Ok(stft(x, cfg, sample_rate)?.data)
}

/// Log-mel magnitudes carrying a per-filter phase, then a DCT of each plane.
///
/// The phase of filter `m` is `arg Σ_i H_m(i)·ĥ(i, τ)`, the circular mean of
/// bin phases weighted by filter gain and bin magnitude.
pub fn complex_mfcc_workflow2(x: &[f64], cfg: &MfccConfig, sample_rate: u32) -> Result<ComplexTensor> {
    let (spec, fb) = analyse(x, cfg, sample_rate)?;
    let frames = spec.n_frames();
    let l = log_mel_energies(&spec, &fb, cfg.log_floor);
    let phase_re = fb.apply(spec.data.re(), frames);
    let phase_im = fb.apply(spec.data.im(), frames);
    let mut re = vec![0.0; l.len()];
    let mut im = vec![0.0; l.len()];
    for i in 0..l.len() {
        let phi = crate::tensor::principal_arg(phase_re[i], phase_im[i]);
        re[i] = l[i] * phi.cos();
        im[i] = l[i] * phi.sin();
    }
    let c = dct_matrix(cfg.n_mfcc, cfg.n_mels);
    ComplexTensor::from_planes(
        &[cfg.n_mfcc, frames],
        dct_columns(&c, &re, frames),
        dct_columns(&c, &im, frames),
    )
}

/// Which feature pipeline feeds a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workflow {
    /// Real MFCCs, imaginary plane zero.
    Mfcc,
    /// Raw complex STFT.
    Stft,
    /// Phase-carrying complex MFCCs.
    PhaseMfcc,
}

impl Workflow {
    pub fn extract(&self, x: &[f64], cfg: &MfccConfig, sample_rate: u32) -> Result<ComplexTensor> {
        match self {
            Workflow::Mfcc => Ok(ComplexTensor::from_real(&mfcc(x, cfg, sample_rate)?)),
            Workflow::Stft => complex_mfcc_workflow1(x, &cfg.stft, sample_rate),
            Workflow::PhaseMfcc => complex_mfcc_workflow2(x, cfg, sample_rate),
        }
    }
}

impl FromStr for Workflow {
    type Err = Error;

    /// `mfcc`, `workflow1` or `workflow2`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mfcc" => Ok(Workflow::Mfcc),
            "workflow1" => Ok(Workflow::Stft),
            "workflow2" => Ok(Workflow::PhaseMfcc),
            other => Err(Error::InvalidArgument(format!("unknown feature workflow `{other}`"))),
        }
    }
}
