use num_complex::Complex64;

use super::kernels::{self, ConvGeom};
use crate::{ComplexTensor, Error, Result, Tape, Var};

/// Kernel `W = A + iB` of shape `(out_ch, in_ch, kh, kw)` with per-channel bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2dParams {
    pub weight: ComplexTensor,
    pub bias: ComplexTensor,
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

fn geometry(
    x: &[usize],
    w: &[usize],
    b: &[usize],
    stride: (usize, usize),
    padding: (usize, usize),
) -> Result<ConvGeom> {
    if x.len() != 4 || w.len() != 4 {
        return Err(Error::shape("complex_conv2d", x, w));
    }
    if x[1] != w[1] {
        return Err(Error::InvalidArgument(format!(
            "complex_conv2d: input has {} channels, kernel expects {}",
            x[1], w[1]
        )));
    }
    if b != [w[0]] {
        return Err(Error::shape("complex_conv2d bias", b, &[w[0]]));
    }
    if stride.0 == 0 || stride.1 == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    let (hp, wp) = (x[2] + 2 * padding.0, x[3] + 2 * padding.1);
    if w[2] > hp || w[3] > wp {
        return Err(Error::InvalidArgument(format!(
            "complex_conv2d: kernel {}x{} larger than padded input {hp}x{wp}",
            w[2], w[3]
        )));
    }
    Ok(ConvGeom {
        n: x[0],
        cin: x[1],
        h: x[2],
        w: x[3],
        cout: w[0],
        kh: w[2],
        kw: w[3],
        stride,
        pad: padding,
        ho: (hp - w[2]) / stride.0 + 1,
        wo: (wp - w[3]) / stride.1 + 1,
    })
}

fn add_bias_real(out: &mut [f64], bias: &[f64], plane: usize) {
    for (chunk, i) in out.chunks_mut(plane).zip(0..) {
        let b = bias[i % bias.len()];
        chunk.iter_mut().for_each(|v| *v += b);
    }
}

fn forward(g: &ConvGeom, x: &ComplexTensor, w: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor> {
    let shape = [g.n, g.cout, g.ho, g.wo];
    let plane = g.ho * g.wo;
    if x.is_real() && w.is_real() && b.is_real() {
        let mut out = kernels::conv_forward(g, x.re(), w.re());
        add_bias_real(&mut out, b.re(), plane);
        return kernels::from_real(&shape, out);
    }
    let mut out = kernels::conv_forward(g, &kernels::interleave(x), &kernels::interleave(w));
    for (chunk, i) in out.chunks_mut(plane).zip(0..) {
        let bv = b.get(i % g.cout);
        chunk.iter_mut().for_each(|v| *v += bv);
    }
    kernels::from_interleaved(&shape, &out)
}

/// Complex cross-correlation of an NCHW input.
///
/// Real plane `A₁∗A₂ − B₁∗B₂`, imaginary plane `B₁∗A₂ + A₁∗B₂` for input
/// `A₁ + iB₁` and kernel `A₂ + iB₂`; zero padding on both planes.
pub fn complex_conv2d(x: &ComplexTensor, p: &Conv2dParams) -> Result<ComplexTensor> {
    let g = geometry(x.shape(), p.weight.shape(), p.bias.shape(), p.stride, p.padding)?;
    forward(&g, x, &p.weight, &p.bias)
}

/// Output spatial size `floor((size + 2·pad − k)/stride) + 1`.
pub fn conv_output_size(size: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (size + 2 * pad - kernel) / stride + 1
}

/// Recorded [`complex_conv2d`].
pub fn conv2d(
    tape: &mut Tape,
    x: Var,
    weight: Var,
    bias: Var,
    stride: (usize, usize),
    padding: (usize, usize),
) -> Result<Var> {
    let xv = tape.shared(x)?;
    let wv = tape.shared(weight)?;
    let bv = tape.value(bias)?;
    let g = geometry(xv.shape(), wv.shape(), bv.shape(), stride, padding)?;
    let value = forward(&g, &xv, &wv, bv)?;
    let w_shape = wv.shape().to_vec();
    let x_shape = xv.shape().to_vec();
    tape.record("complex_conv2d", &[x, weight, bias], value, move |grad, need| {
        let all_real = grad.is_real() && xv.is_real() && wv.is_real();
        let gx = need[0].then(|| {
            if all_real {
                kernels::from_real(&x_shape, kernels::conv_backward_input(&g, grad.re(), wv.re()))
            } else {
                let v = kernels::conv_backward_input(&g, &kernels::interleave(grad), &kernels::interleave(&wv));
                kernels::from_interleaved(&x_shape, &v)
            }
            .unwrap()
        });
        let gw = need[1].then(|| {
            if all_real {
                kernels::from_real(&w_shape, kernels::conv_backward_weight(&g, grad.re(), xv.re()))
            } else {
                let v = kernels::conv_backward_weight(&g, &kernels::interleave(grad), &kernels::interleave(&xv));
                kernels::from_interleaved(&w_shape, &v)
            }
            .unwrap()
        });
        let gb = need[2].then(|| {
            let plane = g.ho * g.wo;
            let mut acc = vec![Complex64::new(0.0, 0.0); g.cout];
            for n in 0..g.n {
                for (co, a) in acc.iter_mut().enumerate() {
                    let off = (n * g.cout + co) * plane;
                    let re: f64 = grad.re()[off..off + plane].iter().sum();
                    let im: f64 = grad.im()[off..off + plane].iter().sum();
                    *a += Complex64::new(re, im);
                }
            }
            ComplexTensor::from_complex(&[g.cout], &acc).unwrap()
        });
        vec![gx, gw, gb]
    })
}
