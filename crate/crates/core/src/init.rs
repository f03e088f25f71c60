//! Complex weight initialisers.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::{ComplexTensor, Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Glorot,
    He,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glorot" => Ok(Criterion::Glorot),
            "he" => Ok(Criterion::He),
            other => Err(Error::InvalidArgument(format!("unknown init criterion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    XavierCircular,
    /// Real Xavier bounds applied to each plane independently.
    XavierSplit,
    HeCircular,
    RayleighPhase(Criterion),
}

impl FromStr for InitScheme {
    type Err = Error;

    /// Accepts `xavier_circular`, `xavier_split`, `he_circular`, `rayleigh_phase`
    /// (He criterion) and `rayleigh_phase:glorot|he`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "xavier_circular" => InitScheme::XavierCircular,
            "xavier_split" => InitScheme::XavierSplit,
            "he_circular" => InitScheme::HeCircular,
            "rayleigh_phase" => InitScheme::RayleighPhase(Criterion::He),
            other => match other.strip_prefix("rayleigh_phase:") {
                Some(c) => InitScheme::RayleighPhase(c.parse()?),
                None => return Err(Error::InvalidArgument(format!("unknown init scheme `{other}`"))),
            },
        })
    }
}

impl InitScheme {
    pub fn sample(&self, fan_in: usize, fan_out: usize, shape: &[usize], rng: &mut Rng) -> Result<ComplexTensor> {
        match *self {
            InitScheme::XavierCircular => xavier_circular_uniform(fan_in, fan_out, shape, rng),
            InitScheme::XavierSplit => xavier_split(fan_in, fan_out, shape, rng),
            InitScheme::HeCircular => he_circular_normal(fan_in, shape, rng),
            InitScheme::RayleighPhase(c) => rayleigh_phase_init(c, fan_in, fan_out, shape, rng),
        }
    }
}

/// `(fan_in, fan_out)` of a dense `(out, in)` or conv `(out, in, kh, kw)` weight.
pub fn fans(shape: &[usize]) -> (usize, usize) {
    match shape {
        [out, inp] => (*inp, *out),
        [out, inp, rest @ ..] => {
            let field: usize = rest.iter().product();
            (inp * field, out * field)
        }
        [n] => (*n, *n),
        [] => (1, 1),
    }
}

fn check_fans(fan_in: usize, fan_out: usize) -> Result<()> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::InvalidArgument("fan_in and fan_out must be >= 1".into()));
    }
    Ok(())
}

fn polar(shape: &[usize], rng: &mut Rng, mut radius: impl FnMut(&mut Rng) -> f64) -> Result<ComplexTensor> {
    let mut t = ComplexTensor::zeros(shape)?;
    let (re, im) = t.planes_mut();
    for (x, y) in re.iter_mut().zip(im.iter_mut()) {
        let r = radius(rng);
        let theta = rng.uniform_range(-PI, PI);
        *x = r * theta.cos();
        *y = r * theta.sin();
    }
    Ok(t)
}

/// Uniform on the disk of radius `√(6/(n+m))`.
pub fn xavier_circular_uniform(n: usize, m: usize, shape: &[usize], rng: &mut Rng) -> Result<ComplexTensor> {
    check_fans(n, m)?;
    let big_r = (6.0 / (n + m) as f64).sqrt();
    polar(shape, rng, |rng| big_r * rng.uniform().sqrt())
}

/// Each plane uniform on `±√(6/(n+m))`.
pub fn xavier_split(n: usize, m: usize, shape: &[usize], rng: &mut Rng) -> Result<ComplexTensor> {
    check_fans(n, m)?;
    let bound = (6.0 / (n + m) as f64).sqrt();
    let mut t = ComplexTensor::zeros(shape)?;
    let (re, im) = t.planes_mut();
    rng.fill_uniform(re, -bound, bound);
    rng.fill_uniform(im, -bound, bound);
    Ok(t)
}

/// Independent Gaussian planes with variance `2/n` each.
pub fn he_circular_normal(n: usize, shape: &[usize], rng: &mut Rng) -> Result<ComplexTensor> {
    check_fans(n, 1)?;
    let std = (2.0 / n as f64).sqrt();
    let mut t = ComplexTensor::zeros(shape)?;
    let (re, im) = t.planes_mut();
    rng.fill_normal(re, std);
    rng.fill_normal(im, std);
    Ok(t)
}

/// Rayleigh mode giving `E|W|² = 2/fan_in` (He) or `2/(fan_in + fan_out)` (Glorot).
pub fn rayleigh_sigma(criterion: Criterion, fan_in: usize, fan_out: usize) -> f64 {
    match criterion {
        Criterion::He => 1.0 / (fan_in as f64).sqrt(),
        Criterion::Glorot => 1.0 / ((fan_in + fan_out) as f64).sqrt(),
    }
}

/// `r·e^{iθ}` with `r ~ Rayleigh(σ)` and `θ ~ U[−π, π)`.
pub fn rayleigh_phase_init(
    criterion: Criterion,
    fan_in: usize,
    fan_out: usize,
    shape: &[usize],
    rng: &mut Rng,
) -> Result<ComplexTensor> {
    check_fans(fan_in, fan_out)?;
    let sigma = rayleigh_sigma(criterion, fan_in, fan_out);
    // inverse CDF; 1 − u lies in (0, 1] so the log is finite
    polar(shape, rng, |rng| sigma * (-2.0 * (1.0 - rng.uniform()).ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_support() {
        let w = xavier_circular_uniform(3, 3, &[1000], &mut Rng::seed(1)).unwrap();
        assert!(w.iter().all(|z| z.norm() <= 1.0));
    }

    #[test]
    fn same_seed_same_weights() {
        for scheme in ["xavier_circular", "xavier_split", "he_circular", "rayleigh_phase:glorot"] {
            let s: InitScheme = scheme.parse().unwrap();
            let a = s.sample(9, 4, &[4, 1, 3, 3], &mut Rng::seed(5)).unwrap();
            let b = s.sample(9, 4, &[4, 1, 3, 3], &mut Rng::seed(5)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn errors() {
        assert!("rayleigh_phase:lecun".parse::<InitScheme>().is_err());
        assert!("orthogonal".parse::<InitScheme>().is_err());
        assert!(he_circular_normal(0, &[2], &mut Rng::seed(0)).is_err());
        assert!(xavier_circular_uniform(1, 1, &[], &mut Rng::seed(0)).is_err());
    }

    #[test]
    fn conv_fans() {
        assert_eq!(fans(&[16, 3, 3, 3]), (27, 144));
        assert_eq!(fans(&[10, 128]), (128, 10));
    }
}
