use rayon::prelude::*;

use crate::{ComplexTensor, Error, Result};

use super::{Tape, Var};

/// Magnitude below which gradient differences are compared absolutely.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

fn loss_at<F>(f: &F, x: ComplexTensor) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let v = tape.constant(x);
    let l = f(&mut tape, v)?;
    let value = tape.value(l)?;
    if value.len() != 1 {
        return Err(Error::NonScalarLoss(format!("shape {:?}", value.shape())));
    }
    Ok(value.re()[0])
}

fn check<F>(f: &F, x0: &ComplexTensor, eps: f64, include_imag: bool) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var> + Sync,
{
    if !(1e-8..=1e-3).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "grad_check eps {eps} outside [1e-8, 1e-3]"
        )));
    }
    let mut tape = Tape::new();
    let x = tape.param(x0.clone());
    let l = f(&mut tape, x)?;
    let analytic = tape
        .backward(l)?
        .take(x)
        .unwrap_or_else(|| ComplexTensor::zeros(x0.shape()).unwrap());

    let n = x0.len();
    let planes = if include_imag { 2 } else { 1 };
    let errors: Vec<f64> = (0..n * planes)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let (plane, i) = (k / n, k % n);
            let probe = |delta: f64| {
                let mut xp = x0.clone();
                if plane == 0 {
                    xp.re_mut()[i] += delta;
                } else {
                    xp.im_mut()[i] += delta;
                }
                loss_at(f, xp)
            };
            let (lp, lm) = (probe(eps)?, probe(-eps)?);
            if !lp.is_finite() || !lm.is_finite() {
                let which = if plane == 0 { "re" } else { "im" };
                return Err(Error::NonFinite(format!("grad_check probe {which}[{i}]")));
            }
            let numeric = (lp - lm) / (2.0 * eps);
            let exact = if plane == 0 {
                analytic.re()[i]
            } else {
                analytic.im()[i]
            };
            let denom = exact.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
            Ok((exact - numeric).abs() / denom)
        })
        .collect::<Result<_>>()?;
    Ok(errors.into_iter().fold(0.0, f64::max))
}

/// Largest relative error between the tape gradient of `f` at `x0` and
/// central differences over every real and imaginary coordinate.
///
/// Relative error is `|g − fd| / max(|g|, |fd|, GRAD_CHECK_FLOOR)`.
pub fn grad_check<F>(f: F, x0: &ComplexTensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var> + Sync,
{
    check(&f, x0, eps, true)
}

/// As [`grad_check`], probing only the real plane (for real-valued models).
pub fn grad_check_real<F>(f: F, x0: &ComplexTensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var> + Sync,
{
    check(&f, x0, eps, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;

    fn random(shape: &[usize], seed: u64) -> ComplexTensor {
        let mut rng = Rng::seed(seed);
        let mut t = ComplexTensor::zeros(shape).unwrap();
        let (re, im) = t.planes_mut();
        rng.fill_normal(re, 1.0);
        rng.fill_normal(im, 1.0);
        t
    }

    #[test]
    fn linear_function_is_exact() {
        let err = grad_check(
            |t, z| {
                let r = t.real_part(z)?;
                t.sum(r)
            },
            &random(&[3, 4], 1),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn squared_magnitude() {
        let err = grad_check(
            |t, z| {
                let a = t.abs_sq(z)?;
                t.sum(a)
            },
            &random(&[5], 2),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn eps_out_of_range() {
        let x = random(&[1], 3);
        let f = |t: &mut Tape, z: Var| t.real_part(z);
        assert!(grad_check(f, &x, 1e-2).is_err());
        assert!(grad_check(f, &x, 1e-9).is_err());
    }

    #[test]
    fn non_finite_probe_is_reported() {
        // 1/Re(z) evaluated at Re(z) = eps blows up on the minus probe
        let x = ComplexTensor::scalar(crate::Complex64::new(1e-5, 0.0));
        let f = |t: &mut Tape, z: Var| {
            let v = t.value(z)?.clone();
            let r = v.re()[0];
            t.record("recip", &[z], v.map(|_| (1.0 / r).into()), move |g, _| {
                vec![Some(g.scale(-1.0 / (r * r)))]
            })
        };
        let err = grad_check(f, &x, 1e-5).unwrap_err();
        assert!(matches!(err, Error::NonFinite(ref s) if s.contains("re[0]")), "{err}");
    }
}
