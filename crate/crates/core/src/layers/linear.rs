use super::kernels;
use crate::{ComplexTensor, Error, Result, Tape, Var};

fn dims(x: &[usize], w: &[usize], b: &[usize]) -> Result<(usize, usize, usize)> {
    if x.len() != 2 || w.len() != 2 || x[1] != w[1] {
        return Err(Error::shape("complex_linear", x, w));
    }
    if b != [w[0]] {
        return Err(Error::shape("complex_linear bias", b, &[w[0]]));
    }
    Ok((x[0], w[1], w[0]))
}

fn forward(x: &ComplexTensor, w: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor> {
    let (n, din, dout) = dims(x.shape(), w.shape(), b.shape())?;
    if x.is_real() && w.is_real() && b.is_real() {
        let mut y = kernels::matmul_nt(x.re(), w.re(), n, din, dout);
        for row in y.chunks_mut(dout) {
            row.iter_mut().zip(b.re()).for_each(|(v, bb)| *v += bb);
        }
        return kernels::from_real(&[n, dout], y);
    }
    let bv = kernels::interleave(b);
    let mut y = kernels::matmul_nt(&kernels::interleave(x), &kernels::interleave(w), n, din, dout);
    for row in y.chunks_mut(dout) {
        row.iter_mut().zip(&bv).for_each(|(v, bb)| *v += bb);
    }
    kernels::from_interleaved(&[n, dout], &y)
}

/// `y = x·Wᵀ + b` for `x` of shape `(N, d_in)` and `W` of shape `(d_out, d_in)`.
pub fn complex_linear(x: &ComplexTensor, w: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor> {
    forward(x, w, b)
}

/// Recorded [`complex_linear`].
pub fn linear(tape: &mut Tape, x: Var, weight: Var, bias: Var) -> Result<Var> {
    let xv = tape.shared(x)?;
    let wv = tape.shared(weight)?;
    let value = forward(&xv, &wv, tape.value(bias)?)?;
    let (n, din, dout) = (xv.shape()[0], wv.shape()[1], wv.shape()[0]);
    tape.record("complex_linear", &[x, weight, bias], value, move |g, need| {
        let all_real = g.is_real() && xv.is_real() && wv.is_real();
        let gx = need[0].then(|| {
            if all_real {
                kernels::from_real(&[n, din], kernels::matmul_backward_input(g.re(), wv.re(), n, din, dout))
            } else {
                let v = kernels::matmul_backward_input(&kernels::interleave(g), &kernels::interleave(&wv), n, din, dout);
                kernels::from_interleaved(&[n, din], &v)
            }
            .unwrap()
        });
        let gw = need[1].then(|| {
            if all_real {
                kernels::from_real(&[dout, din], kernels::matmul_backward_weight(g.re(), xv.re(), n, din, dout))
            } else {
                let v = kernels::matmul_backward_weight(&kernels::interleave(g), &kernels::interleave(&xv), n, din, dout);
                kernels::from_interleaved(&[dout, din], &v)
            }
            .unwrap()
        });
        let gb = need[2].then(|| {
            let mut re = vec![0.0; dout];
            let mut im = vec![0.0; dout];
            for s in 0..n {
                for o in 0..dout {
                    re[o] += g.re()[s * dout + o];
                    im[o] += g.im()[s * dout + o];
                }
            }
            ComplexTensor::from_planes(&[dout], re, im).unwrap()
        });
        vec![gx, gw, gb]
    })
}

/// `A·h` for a constant `(R, N)` matrix `A` and `h` of shape `(N, F)`.
pub fn left_matmul_const(tape: &mut Tape, a: &ComplexTensor, h: Var) -> Result<Var> {
    let hv = tape.value(h)?;
    let (sa, sh) = (a.shape(), hv.shape());
    if sa.len() != 2 || sh.len() != 2 || sa[1] != sh[0] {
        return Err(Error::shape("left_matmul_const", sa, sh));
    }
    let (r, n, f) = (sa[0], sa[1], sh[1]);
    let at = transpose(a);
    // (A·h)ᵀ = hᵀ·Aᵀ, so reuse the row-major product on transposed operands
    let value = transpose(&forward(&transpose(hv), a, &ComplexTensor::zeros(&[r])?)?);
    tape.record("left_matmul_const", &[h], value, move |g, _| {
        // dL/dh = conj(A)ᵀ·g
        let gt = transpose(g);
        let zero = ComplexTensor::zeros(&[n]).unwrap();
        let out = forward(&gt, &at.conj(), &zero).unwrap();
        debug_assert_eq!(out.shape(), &[f, n]);
        vec![Some(transpose(&out))]
    })
}

pub(crate) fn transpose(t: &ComplexTensor) -> ComplexTensor {
    let s = t.shape();
    let (r, c) = (s[0], s[1]);
    let mut out = ComplexTensor::zeros(&[c, r]).unwrap();
    for i in 0..r {
        for j in 0..c {
            out.set(j * r + i, t.get(i * c + j));
        }
    }
    out
}
