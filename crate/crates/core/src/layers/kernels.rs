//! Dense loops behind convolution and matrix products.
//!
//! Kernels are generic over [`Scalar`] so the same code serves complex data
//! and the all-real fast path taken when every operand has a zero imaginary
//! plane.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::{ComplexTensor, Result};

pub(crate) trait Scalar:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    const ZERO: Self;
    fn conj(self) -> Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    #[inline(always)]
    fn conj(self) -> Self {
        self
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    #[inline(always)]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
}

pub(crate) fn interleave(t: &ComplexTensor) -> Vec<Complex64> {
    t.iter().collect()
}

pub(crate) fn from_interleaved(shape: &[usize], v: &[Complex64]) -> Result<ComplexTensor> {
    ComplexTensor::from_complex(shape, v)
}

pub(crate) fn from_real(shape: &[usize], v: Vec<f64>) -> Result<ComplexTensor> {
    let n = v.len();
    ComplexTensor::from_planes(shape, v, vec![0.0; n])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub n: usize,
    pub cin: usize,
    pub h: usize,
    pub w: usize,
    pub cout: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: (usize, usize),
    pub pad: (usize, usize),
    pub ho: usize,
    pub wo: usize,
}

impl ConvGeom {
    /// Output columns `ox` whose input column `ox·s + kx − p` lies inside `[0, w)`.
    #[inline]
    fn col_range(&self, kx: usize) -> (usize, usize) {
        let (s, p) = (self.stride.1, self.pad.1);
        let lo = if kx >= p { 0 } else { (p - kx).div_ceil(s) };
        // largest ox with ox·s + kx − p <= w − 1
        let limit = self.w + p;
        let hi = if limit > kx {
            ((limit - kx - 1) / s + 1).min(self.wo)
        } else {
            0
        };
        (lo.min(hi), hi)
    }

    #[inline]
    fn in_row(&self, oy: usize, ky: usize) -> Option<usize> {
        let iy = (oy * self.stride.0 + ky) as isize - self.pad.0 as isize;
        (iy >= 0 && (iy as usize) < self.h).then_some(iy as usize)
    }
}

/// `out[n, co] = Σ_ci Σ_ky,kx w[co, ci, ky, kx]·x[n, ci, ·+ky, ·+kx]` (cross-correlation).
pub(crate) fn conv_forward<T: Scalar>(g: &ConvGeom, x: &[T], w: &[T]) -> Vec<T> {
    let out_per = g.cout * g.ho * g.wo;
    let in_per = g.cin * g.h * g.w;
    let mut out = vec![T::ZERO; g.n * out_per];
    out.par_chunks_mut(out_per)
        .zip(x.par_chunks(in_per))
        .for_each(|(out, x)| {
            for co in 0..g.cout {
                let out_c = &mut out[co * g.ho * g.wo..(co + 1) * g.ho * g.wo];
                for ci in 0..g.cin {
                    let x_c = &x[ci * g.h * g.w..(ci + 1) * g.h * g.w];
                    for ky in 0..g.kh {
                        for kx in 0..g.kw {
                            let wv = w[((co * g.cin + ci) * g.kh + ky) * g.kw + kx];
                            let (lo, hi) = g.col_range(kx);
                            for oy in 0..g.ho {
                                let Some(iy) = g.in_row(oy, ky) else { continue };
                                let orow = &mut out_c[oy * g.wo..(oy + 1) * g.wo];
                                let xrow = &x_c[iy * g.w..(iy + 1) * g.w];
                                for ox in lo..hi {
                                    let ix = ox * g.stride.1 + kx - g.pad.1;
                                    orow[ox] += wv * xrow[ix];
                                }
                            }
                        }
                    }
                }
            }
        });
    out
}

/// Adjoint with respect to the input: `Σ g·conj(w)` scattered back.
pub(crate) fn conv_backward_input<T: Scalar>(g: &ConvGeom, grad: &[T], w: &[T]) -> Vec<T> {
    let out_per = g.cout * g.ho * g.wo;
    let in_per = g.cin * g.h * g.w;
    let mut gx = vec![T::ZERO; g.n * in_per];
    gx.par_chunks_mut(in_per)
        .zip(grad.par_chunks(out_per))
        .for_each(|(gx, grad)| {
            for co in 0..g.cout {
                let g_c = &grad[co * g.ho * g.wo..(co + 1) * g.ho * g.wo];
                for ci in 0..g.cin {
                    let gx_c = &mut gx[ci * g.h * g.w..(ci + 1) * g.h * g.w];
                    for ky in 0..g.kh {
                        for kx in 0..g.kw {
                            let wv = w[((co * g.cin + ci) * g.kh + ky) * g.kw + kx].conj();
                            let (lo, hi) = g.col_range(kx);
                            for oy in 0..g.ho {
                                let Some(iy) = g.in_row(oy, ky) else { continue };
                                let grow = &g_c[oy * g.wo..(oy + 1) * g.wo];
                                let xrow = &mut gx_c[iy * g.w..(iy + 1) * g.w];
                                for ox in lo..hi {
                                    let ix = ox * g.stride.1 + kx - g.pad.1;
                                    xrow[ix] += grow[ox] * wv;
                                }
                            }
                        }
                    }
                }
            }
        });
    gx
}

/// Adjoint with respect to the kernel: `Σ_n,oy,ox g·conj(x)`.
pub(crate) fn conv_backward_weight<T: Scalar>(g: &ConvGeom, grad: &[T], x: &[T]) -> Vec<T> {
    let w_per = g.cin * g.kh * g.kw;
    let out_per = g.cout * g.ho * g.wo;
    let in_per = g.cin * g.h * g.w;
    let mut gw = vec![T::ZERO; g.cout * w_per];
    gw.par_chunks_mut(w_per).enumerate().for_each(|(co, gw)| {
        for n in 0..g.n {
            let g_c = &grad[n * out_per + co * g.ho * g.wo..][..g.ho * g.wo];
            for ci in 0..g.cin {
                let x_c = &x[n * in_per + ci * g.h * g.w..][..g.h * g.w];
                for ky in 0..g.kh {
                    for kx in 0..g.kw {
                        let (lo, hi) = g.col_range(kx);
                        let mut acc = T::ZERO;
                        for oy in 0..g.ho {
                            let Some(iy) = g.in_row(oy, ky) else { continue };
                            let grow = &g_c[oy * g.wo..(oy + 1) * g.wo];
                            let xrow = &x_c[iy * g.w..(iy + 1) * g.w];
                            for ox in lo..hi {
                                let ix = ox * g.stride.1 + kx - g.pad.1;
                                acc += grow[ox] * xrow[ix].conj();
                            }
                        }
                        gw[(ci * g.kh + ky) * g.kw + kx] += acc;
                    }
                }
            }
        }
    });
    gw
}

/// `y[n, o] = Σ_i w[o, i]·x[n, i]`.
pub(crate) fn matmul_nt<T: Scalar>(x: &[T], w: &[T], n: usize, din: usize, dout: usize) -> Vec<T> {
    let mut y = vec![T::ZERO; n * dout];
    y.par_chunks_mut(dout)
        .zip(x.par_chunks(din))
        .for_each(|(y, x)| {
            for (o, yo) in y.iter_mut().enumerate() {
                let wrow = &w[o * din..(o + 1) * din];
                let mut acc = T::ZERO;
                for i in 0..din {
                    acc += wrow[i] * x[i];
                }
                *yo = acc;
            }
        });
    y
}

/// `gx[n, i] = Σ_o g[n, o]·conj(w[o, i])`.
pub(crate) fn matmul_backward_input<T: Scalar>(
    grad: &[T],
    w: &[T],
    n: usize,
    din: usize,
    dout: usize,
) -> Vec<T> {
    let mut gx = vec![T::ZERO; n * din];
    gx.par_chunks_mut(din)
        .zip(grad.par_chunks(dout))
        .for_each(|(gx, g)| {
            for o in 0..dout {
                let go = g[o];
                let wrow = &w[o * din..(o + 1) * din];
                for i in 0..din {
                    gx[i] += go * wrow[i].conj();
                }
            }
        });
    gx
}

/// `gw[o, i] = Σ_n g[n, o]·conj(x[n, i])`.
pub(crate) fn matmul_backward_weight<T: Scalar>(
    grad: &[T],
    x: &[T],
    n: usize,
    din: usize,
    dout: usize,
) -> Vec<T> {
    let mut gw = vec![T::ZERO; dout * din];
    gw.par_chunks_mut(din).enumerate().for_each(|(o, gw)| {
        for s in 0..n {
            let go = grad[s * dout + o];
            let xrow = &x[s * din..(s + 1) * din];
            for i in 0..din {
                gw[i] += go * xrow[i].conj();
            }
        }
    });
    gw
}
