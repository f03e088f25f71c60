use std::fmt;
use std::str::FromStr;

use super::Split;
use crate::{ComplexTensor, Error, RealTensor, Result, Rng};

/// Constant imaginary part added by [`Setting::FixedImag`].
pub const IMAG_VALUE: f64 = 0.1;
/// Constant phase in radians applied by [`Setting::FixedPhase`].
pub const PHASE_VALUE: f64 = 0.5;
/// Half-width of the uniform noise added by [`Setting::RandomPerturb`].
pub const NOISE_SCALE: f64 = 1e-5;

/// The five image input configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    /// Real CNN on real pixels; never goes through the complex path.
    RealBaseline,
    /// CVCNN on real pixels with a zero imaginary plane.
    CvRealInput,
    FixedImag,
    FixedPhase,
    RandomPerturb,
}

impl Setting {
    pub const ALL: [Setting; 5] = [
        Setting::RealBaseline,
        Setting::CvRealInput,
        Setting::FixedImag,
        Setting::FixedPhase,
        Setting::RandomPerturb,
    ];

    pub fn number(&self) -> u8 {
        *self as u8 + 1
    }

    pub fn name(&self) -> &'static str {
        match self {
            Setting::RealBaseline => "real_cnn_baseline",
            Setting::CvRealInput => "cv_real_input",
            Setting::FixedImag => "fixed_imag",
            Setting::FixedPhase => "fixed_phase",
            Setting::RandomPerturb => "random_perturb",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    /// Accepts the setting number (`"1"`–`"5"`) or its name.
    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|st| st.name() == s || st.number().to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown input setting `{s}`")))
    }
}

/// Lifts real images into the complex input for `setting`.
///
/// Transforms apply to the training split only; test images always come
/// back with a zero imaginary plane.
pub fn apply_perturbation(images: &RealTensor, setting: Setting, split: Split, rng: &mut Rng) -> Result<ComplexTensor> {
    let mut out = ComplexTensor::from_real(images);
    if split == Split::Test {
        return match setting {
            Setting::RealBaseline => Err(real_baseline()),
            _ => Ok(out),
        };
    }
    match setting {
        Setting::RealBaseline => return Err(real_baseline()),
        Setting::CvRealInput => {}
        Setting::FixedImag => out.im_mut().iter_mut().for_each(|v| *v = IMAG_VALUE),
        Setting::FixedPhase => {
            let (c, s) = (PHASE_VALUE.cos(), PHASE_VALUE.sin());
            let (re, im) = out.planes_mut();
            for (r, i) in re.iter_mut().zip(im.iter_mut()) {
                *i = *r * s;
                *r *= c;
            }
        }
        Setting::RandomPerturb => {
            let (re, im) = out.planes_mut();
            for v in re.iter_mut().chain(im.iter_mut()) {
                *v += rng.uniform_range(-NOISE_SCALE, NOISE_SCALE);
            }
        }
    }
    Ok(out)
}

fn real_baseline() -> Error {
    Error::InvalidArgument("setting 1 (real CNN baseline) does not use the complex input path".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pixels() -> RealTensor {
        RealTensor::new(&[1, 1, 2, 2], vec![1.0, 0.0, 0.25, 0.5]).unwrap()
    }

    #[test]
    fn fixed_phase_examples() {
        let out = apply_perturbation(&pixels(), Setting::FixedPhase, Split::Train, &mut Rng::seed(0)).unwrap();
        assert!((out.re()[0] - 0.877583).abs() < 1e-6);
        assert!((out.im()[0] - 0.479426).abs() < 1e-6);
        assert_eq!((out.re()[1], out.im()[1]), (0.0, 0.0));
    }

    #[test]
    fn fixed_imag_adds_constant() {
        let out = apply_perturbation(&pixels(), Setting::FixedImag, Split::Train, &mut Rng::seed(0)).unwrap();
        assert_eq!(out.re(), pixels().data());
        assert!(out.im().iter().all(|&v| v == 0.1));
    }

    #[test]
    fn test_split_untouched() {
        for s in [Setting::CvRealInput, Setting::FixedImag, Setting::FixedPhase, Setting::RandomPerturb] {
            let out = apply_perturbation(&pixels(), s, Split::Test, &mut Rng::seed(0)).unwrap();
            assert_eq!(out, ComplexTensor::from_real(&pixels()));
        }
    }

    #[test]
    fn baseline_rejected_and_parsing() {
        assert!(apply_perturbation(&pixels(), Setting::RealBaseline, Split::Train, &mut Rng::seed(0)).is_err());
        assert_eq!("4".parse::<Setting>().unwrap(), Setting::FixedPhase);
        assert_eq!("random_perturb".parse::<Setting>().unwrap(), Setting::RandomPerturb);
        assert!("6".parse::<Setting>().is_err());
    }
}
