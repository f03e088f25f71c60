use crate::{ComplexTensor, Error, Result, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
}

impl PoolSpec {
    /// Square non-overlapping window.
    pub fn square(k: usize) -> Self {
        Self {
            kernel: (k, k),
            stride: (k, k),
        }
    }

    fn output(&self, shape: &[usize]) -> Result<(usize, usize, usize, usize)> {
        if shape.len() != 4 {
            return Err(Error::InvalidShape {
                shape: shape.to_vec(),
                reason: "pooling expects NCHW".into(),
            });
        }
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        if kh == 0 || kw == 0 || sh == 0 || sw == 0 {
            return Err(Error::InvalidArgument("pool kernel and stride must be >= 1".into()));
        }
        if kh > shape[2] || kw > shape[3] {
            return Err(Error::InvalidArgument(format!(
                "pool window {kh}x{kw} larger than input {}x{}",
                shape[2], shape[3]
            )));
        }
        Ok((
            shape[0] * shape[1],
            shape[2],
            (shape[2] - kh) / sh + 1,
            (shape[3] - kw) / sw + 1,
        ))
    }
}

/// For each output element, the flat input index its window selects.
fn select(x: &ComplexTensor, s: PoolSpec, key: impl Fn(f64, f64) -> f64) -> Result<(Vec<usize>, Vec<usize>)> {
    let shape = x.shape();
    let (planes, h, ho, wo) = s.output(shape)?;
    let w = shape[3];
    let mut picks = Vec::with_capacity(planes * ho * wo);
    for p in 0..planes {
        let base = p * h * w;
        for oy in 0..ho {
            for ox in 0..wo {
                let mut best = usize::MAX;
                let mut best_key = f64::NEG_INFINITY;
                for ky in 0..s.kernel.0 {
                    for kx in 0..s.kernel.1 {
                        let i = base + (oy * s.stride.0 + ky) * w + ox * s.stride.1 + kx;
                        let k = key(x.re()[i], x.im()[i]);
                        // strict comparison keeps the lowest row-major index on ties
                        if best == usize::MAX || k > best_key {
                            best = i;
                            best_key = k;
                        }
                    }
                }
                picks.push(best);
            }
        }
    }
    Ok((picks, vec![shape[0], shape[1], ho, wo]))
}

fn gather(x: &ComplexTensor, picks: &[usize], shape: &[usize]) -> Result<ComplexTensor> {
    let re = picks.iter().map(|&i| x.re()[i]).collect();
    let im = picks.iter().map(|&i| x.im()[i]).collect();
    ComplexTensor::from_planes(shape, re, im)
}

/// Per window, the element of largest `|z|` with its phase intact.
pub fn complex_maxpool_mag(x: &ComplexTensor, s: PoolSpec) -> Result<ComplexTensor> {
    let (picks, shape) = select(x, s, |r, i| r * r + i * i)?;
    gather(x, &picks, &shape)
}

/// Per window, the mean of the real plane plus `i` times the mean of the imaginary plane.
pub fn complex_avgpool(x: &ComplexTensor, s: PoolSpec) -> Result<ComplexTensor> {
    let shape = x.shape();
    let (planes, h, ho, wo) = s.output(shape)?;
    let w = shape[3];
    let area = (s.kernel.0 * s.kernel.1) as f64;
    let mut out = ComplexTensor::zeros(&[shape[0], shape[1], ho, wo])?;
    let mut o = 0;
    for p in 0..planes {
        let base = p * h * w;
        for oy in 0..ho {
            for ox in 0..wo {
                let (mut re, mut im) = (0.0, 0.0);
                for ky in 0..s.kernel.0 {
                    for kx in 0..s.kernel.1 {
                        let i = base + (oy * s.stride.0 + ky) * w + ox * s.stride.1 + kx;
                        re += x.re()[i];
                        im += x.im()[i];
                    }
                }
                out.re_mut()[o] = re / area;
                out.im_mut()[o] = im / area;
                o += 1;
            }
        }
    }
    Ok(out)
}

fn record_selection(tape: &mut Tape, kind: &'static str, x: Var, picks: Vec<usize>, shape: Vec<usize>) -> Result<Var> {
    let xv = tape.value(x)?;
    let in_shape = xv.shape().to_vec();
    let value = gather(xv, &picks, &shape)?;
    tape.record(kind, &[x], value, move |g, _| {
        let mut gx = ComplexTensor::zeros(&in_shape).unwrap();
        let (re, im) = gx.planes_mut();
        for (o, &i) in picks.iter().enumerate() {
            re[i] += g.re()[o];
            im[i] += g.im()[o];
        }
        vec![Some(gx)]
    })
}

/// Recorded [`complex_maxpool_mag`]; the gradient flows to the selected element.
pub fn maxpool_mag(tape: &mut Tape, x: Var, s: PoolSpec) -> Result<Var> {
    let (picks, shape) = select(tape.value(x)?, s, |r, i| r * r + i * i)?;
    record_selection(tape, "complex_maxpool_mag", x, picks, shape)
}

/// Max pooling by real value, for real-valued baselines.
pub fn maxpool_real(tape: &mut Tape, x: Var, s: PoolSpec) -> Result<Var> {
    let (picks, shape) = select(tape.value(x)?, s, |r, _| r)?;
    record_selection(tape, "maxpool_real", x, picks, shape)
}

/// Recorded [`complex_avgpool`].
pub fn avgpool(tape: &mut Tape, x: Var, s: PoolSpec) -> Result<Var> {
    let xv = tape.value(x)?;
    let in_shape = xv.shape().to_vec();
    let value = complex_avgpool(xv, s)?;
    let (ho, wo) = (value.shape()[2], value.shape()[3]);
    tape.record("complex_avgpool", &[x], value, move |g, _| {
        let (h, w) = (in_shape[2], in_shape[3]);
        let planes = in_shape[0] * in_shape[1];
        let area = (s.kernel.0 * s.kernel.1) as f64;
        let mut gx = ComplexTensor::zeros(&in_shape).unwrap();
        let (re, im) = gx.planes_mut();
        let mut o = 0;
        for p in 0..planes {
            for oy in 0..ho {
                for ox in 0..wo {
                    for ky in 0..s.kernel.0 {
                        for kx in 0..s.kernel.1 {
                            let i = p * h * w + (oy * s.stride.0 + ky) * w + ox * s.stride.1 + kx;
                            re[i] += g.re()[o] / area;
                            im[i] += g.im()[o] / area;
                        }
                    }
                    o += 1;
                }
            }
        }
        vec![Some(gx)]
    })
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;

    fn window(values: &[(f64, f64)]) -> ComplexTensor {
        let v: Vec<Complex64> = values.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        ComplexTensor::from_complex(&[1, 1, 1, v.len()], &v).unwrap()
    }

    fn whole(n: usize) -> PoolSpec {
        PoolSpec {
            kernel: (1, n),
            stride: (1, n),
        }
    }

    #[test]
    fn maxpool_picks_largest_magnitude() {
        let out = complex_maxpool_mag(&window(&[(1.0, 0.0), (0.0, 2.0)]), whole(2)).unwrap();
        assert_eq!(out.get(0), Complex64::new(0.0, 2.0));
    }

    #[test]
    fn maxpool_ties_take_lowest_index() {
        let out = complex_maxpool_mag(&window(&[(1.0, 0.0), (0.0, 1.0)]), whole(2)).unwrap();
        assert_eq!(out.get(0), Complex64::new(1.0, 0.0));
        let out = complex_maxpool_mag(&window(&[(0.0, 0.0), (0.0, 0.0)]), whole(2)).unwrap();
        assert_eq!(out.get(0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn avgpool_examples() {
        let out = complex_avgpool(&window(&[(1.0, 1.0), (3.0, 3.0)]), whole(2)).unwrap();
        assert_eq!(out.get(0), Complex64::new(2.0, 2.0));
        let out = complex_avgpool(&window(&[(0.7, -0.2); 4]), whole(4)).unwrap();
        assert!((out.get(0) - Complex64::new(0.7, -0.2)).norm() < 1e-15);
        let out = complex_avgpool(&window(&[(1.0, 0.0), (0.0, 1.0)]), whole(2)).unwrap();
        assert_eq!(out.get(0), Complex64::new(0.5, 0.5));
    }

    #[test]
    fn window_larger_than_input() {
        let x = window(&[(1.0, 0.0), (2.0, 0.0)]);
        assert!(complex_maxpool_mag(&x, whole(3)).is_err());
        assert!(complex_avgpool(&x, PoolSpec::square(2)).is_err());
    }

    #[test]
    fn output_shape_floor_rule() {
        let x = ComplexTensor::zeros(&[2, 3, 7, 5]).unwrap();
        let out = complex_maxpool_mag(&x, PoolSpec::square(2)).unwrap();
        assert_eq!(out.shape(), &[2, 3, 3, 2]);
    }
}
