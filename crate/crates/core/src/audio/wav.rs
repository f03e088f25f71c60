use std::path::Path;

use crate::{Error, Result};

fn unsupported(path: &Path, reason: impl Into<String>) -> Error {
    Error::UnsupportedAudio {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads a mono 16-bit PCM WAV file, returning samples scaled to `[-1, 1)` and
/// the sample rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32)> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => unsupported(path, other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(unsupported(path, format!("{} channels, expected mono", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(unsupported(
            path,
            format!("{:?} {}-bit samples, expected 16-bit PCM", spec.sample_format, spec.bits_per_sample),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| unsupported(path, e.to_string()))?;
    Ok((samples, spec.sample_rate))
}

/// Writes `samples` (clamped to `[-1, 1]`) as mono 16-bit PCM.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => unsupported(path, other.to_string()),
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for &s in samples {
        w.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16).map_err(wrap)?;
    }
    w.finalize().map_err(wrap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_within_quantisation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.01).sin() * 0.9).collect();
        write_wav(&p, &x, 22050).unwrap();
        let (y, sr) = read_wav(&p).unwrap();
        assert_eq!(sr, 22050);
        assert_eq!(y.len(), x.len());
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-4));
    }

    #[test]
    fn stereo_and_float_rejected() {
        let dir = tempfile::tempdir().unwrap();
        for (name, channels, bits, format) in [
            ("stereo.wav", 2, 16, hound::SampleFormat::Int),
            ("float.wav", 1, 32, hound::SampleFormat::Float),
        ] {
            let p = dir.path().join(name);
            let spec = hound::WavSpec {
                channels,
                sample_rate: 8000,
                bits_per_sample: bits,
                sample_format: format,
            };
            let mut w = hound::WavWriter::create(&p, spec).unwrap();
            for _ in 0..channels {
                if format == hound::SampleFormat::Float {
                    w.write_sample(0.0f32).unwrap();
                } else {
                    w.write_sample(0i16).unwrap();
                }
            }
            w.finalize().unwrap();
            assert!(matches!(read_wav(&p), Err(Error::UnsupportedAudio { .. })), "{name}");
        }
    }

    #[test]
    fn garbage_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        std::fs::write(&p, b"not a wav file at all").unwrap();
        assert!(matches!(read_wav(&p), Err(Error::UnsupportedAudio { .. })));
    }
}
