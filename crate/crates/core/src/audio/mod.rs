//! Spectral audio features: STFT, mel filterbank, MFCC and the two complex
//! MFCC variants.
//!
//! Spectrograms are laid out `(n_bins, n_frames)`; cepstra `(n_mfcc, n_frames)`.

mod export;
mod fft;
mod mel;
mod mfcc;
mod stft;
mod wav;

pub use export::{write_features_csv, write_real_features_csv};
pub use fft::Fft;
pub use mel::{hz_to_bin, mel_filterbank, mel_scale, mel_to_hz, MelFilterbank};
pub use mfcc::{
    complex_mfcc_workflow1, complex_mfcc_workflow2, dct_ii, dct_matrix, log_mel_energies, mfcc, MfccConfig, Workflow,
};
pub use stft::{hann_window, stft, ComplexSpectrogram, StftConfig};
pub use wav::{read_wav, write_wav};
