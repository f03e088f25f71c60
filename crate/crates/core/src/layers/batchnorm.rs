//! Complex batch normalization by 2×2 whitening, plus a real baseline variant.
//!
//! Per channel the `(Re, Im)` pairs are centred, whitened by the inverse
//! principal square root of their covariance `V + λI`, then mapped through a
//! learnable symmetric 2×2 matrix `Γ` and shifted by `β`.

use num_complex::Complex64;

use crate::{ComplexTensor, Error, ParamSet, Result, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Shape of the learnable scale `Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaMode {
    /// Symmetric matrix `[[γ_rr, γ_ri], [γ_ri, γ_ii]]`.
    Matrix,
    /// `γ·I` with `γ` taken from the real part of the diagonal parameter.
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchNormConfig {
    pub lambda: f64,
    pub momentum: f64,
    pub gamma: GammaMode,
}

impl Default for BatchNormConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-5,
            momentum: 0.1,
            gamma: GammaMode::Matrix,
        }
    }
}

/// Running statistics for one normalization layer.
///
/// `running_cov[c]` holds `[V_rr, V_ri, V_ii]` without the `λ` shift; `V_ir`
/// equals `V_ri` and is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState {
    pub config: BatchNormConfig,
    pub mode: Mode,
    pub running_mean: Vec<Complex64>,
    pub running_cov: Vec<[f64; 3]>,
}

impl BatchNormState {
    pub fn new(channels: usize, config: BatchNormConfig) -> Result<Self> {
        if config.lambda <= 0.0 {
            return Err(Error::InvalidArgument("batchnorm lambda must be > 0".into()));
        }
        if !(0.0..1.0).contains(&config.momentum) || config.momentum == 0.0 {
            return Err(Error::InvalidArgument("batchnorm momentum must be in (0, 1)".into()));
        }
        Ok(Self {
            config,
            mode: Mode::Train,
            running_mean: vec![Complex64::new(0.0, 0.0); channels],
            running_cov: vec![[0.5, 0.0, 0.5]; channels],
        })
    }

    pub fn channels(&self) -> usize {
        self.running_mean.len()
    }

    /// Adds `{prefix}.gamma_diag` (`γ_rr + iγ_ii`, both `1/√2`),
    /// `{prefix}.gamma_off` (`γ_ri = 0`) and `{prefix}.beta` (`0`).
    pub fn init_params(&self, prefix: &str, params: &mut ParamSet) -> Result<()> {
        let c = self.channels();
        let d = std::f64::consts::FRAC_1_SQRT_2;
        params.insert(
            format!("{prefix}.gamma_diag"),
            ComplexTensor::from_planes(&[c], vec![d; c], vec![d; c])?,
        )?;
        params.insert(format!("{prefix}.gamma_off"), ComplexTensor::zeros(&[c])?)?;
        params.insert(format!("{prefix}.beta"), ComplexTensor::zeros(&[c])?)
    }

    /// Running statistics as tensors, for checkpoints.
    pub fn buffers(&self) -> (ComplexTensor, ComplexTensor) {
        let c = self.channels();
        let mean = ComplexTensor::from_complex(&[c], &self.running_mean).unwrap();
        let mut cov = ComplexTensor::zeros(&[3, c]).unwrap();
        for (i, v) in self.running_cov.iter().enumerate() {
            for k in 0..3 {
                cov.re_mut()[k * c + i] = v[k];
            }
        }
        (mean, cov)
    }

    pub fn load_buffers(&mut self, mean: &ComplexTensor, cov: &ComplexTensor) -> Result<()> {
        let c = self.channels();
        if mean.shape() != [c] || cov.shape() != [3, c] {
            return Err(Error::shape("batchnorm buffers", mean.shape(), cov.shape()));
        }
        self.running_mean = mean.to_vec();
        for i in 0..c {
            self.running_cov[i] = [cov.re()[i], cov.re()[c + i], cov.re()[2 * c + i]];
        }
        Ok(())
    }
}

/// Inverse principal square root of the SPD matrix `[[p, q], [q, r]]`.
///
/// With `s = √det` and `t = √(tr + 2s)`, `M^{-1/2} = (adj M + sI)/(s·t)`.
/// Returns `(w11, w12, w22)`.
pub fn inv_sqrt_2x2(p: f64, q: f64, r: f64) -> (f64, f64, f64) {
    let det = p * r - q * q;
    assert!(det > 0.0 && p > 0.0, "matrix is not positive definite");
    let s = det.sqrt();
    let t = (p + r + 2.0 * s).sqrt();
    let d = s * t;
    ((r + s) / d, -q / d, (p + s) / d)
}

/// Pullback of `(dW11, dW12, dW22)` through [`inv_sqrt_2x2`] to `(dp, dq, dr)`.
fn inv_sqrt_2x2_adjoint(p: f64, q: f64, r: f64, dw: (f64, f64, f64)) -> (f64, f64, f64) {
    let s = (p * r - q * q).sqrt();
    let t = (p + r + 2.0 * s).sqrt();
    let d = s * t;
    // partials of s, tr with respect to (p, q, r)
    let ds = [r / (2.0 * s), -q / s, p / (2.0 * s)];
    let dtr = [1.0, 0.0, 1.0];
    let mut out = [0.0; 3];
    for k in 0..3 {
        let dt = (dtr[k] + 2.0 * ds[k]) / (2.0 * t);
        let dd = t * ds[k] + s * dt;
        let dp = [1.0, 0.0, 0.0][k];
        let dq = [0.0, 1.0, 0.0][k];
        let dr = [0.0, 0.0, 1.0][k];
        let w11 = (dr + ds[k]) / d - (r + s) * dd / (d * d);
        let w12 = -dq / d + q * dd / (d * d);
        let w22 = (dp + ds[k]) / d - (p + s) * dd / (d * d);
        out[k] = dw.0 * w11 + dw.1 * w12 + dw.2 * w22;
    }
    (out[0], out[1], out[2])
}

struct Layout {
    n: usize,
    c: usize,
    spatial: usize,
}

impl Layout {
    fn of(shape: &[usize]) -> Result<Self> {
        if shape.len() < 2 {
            return Err(Error::InvalidShape {
                shape: shape.to_vec(),
                reason: "batchnorm expects (N, C, ...)".into(),
            });
        }
        Ok(Self {
            n: shape[0],
            c: shape[1],
            spatial: shape[2..].iter().product(),
        })
    }

    fn count(&self) -> usize {
        self.n * self.spatial
    }

    fn indices(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).flat_map(move |n| {
            let base = (n * self.c + c) * self.spatial;
            base..base + self.spatial
        })
    }
}

#[derive(Clone, Copy)]
struct ChannelStats {
    mean: Complex64,
    /// whitening matrix `(w11, w12, w22)`
    w: (f64, f64, f64),
    /// `V + λI` entries, kept for the adjoint
    v: (f64, f64, f64),
}

/// Recorded complex batch normalization.
///
/// `gamma_diag` holds `γ_rr + iγ_ii`, `gamma_off` holds `γ_ri` in its real
/// part, `beta` is complex; all are per-channel. Train mode normalizes by
/// batch statistics (biased covariance) and updates the running averages;
/// eval mode uses the running averages.
pub fn complex_batchnorm(
    tape: &mut Tape,
    x: Var,
    gamma_diag: Var,
    gamma_off: Var,
    beta: Var,
    state: &mut BatchNormState,
) -> Result<Var> {
    let xv = tape.shared(x)?;
    let layout = Layout::of(xv.shape())?;
    let c = layout.c;
    if c != state.channels() {
        return Err(Error::shape("complex_batchnorm", xv.shape(), &[state.channels()]));
    }
    let gd = tape.value(gamma_diag)?.clone();
    let go = tape.value(gamma_off)?.clone();
    let bt = tape.value(beta)?.clone();
    for t in [&gd, &go, &bt] {
        if t.shape() != [c] {
            return Err(Error::shape("complex_batchnorm params", t.shape(), &[c]));
        }
    }
    let train = state.mode == Mode::Train;
    if train && layout.n < 2 {
        return Err(Error::InvalidArgument("batchnorm needs batch size >= 2 in train mode".into()));
    }
    let lambda = state.config.lambda;
    let scalar_gamma = state.config.gamma == GammaMode::Scalar;
    let m = layout.count() as f64;

    let mut stats = Vec::with_capacity(c);
    for ch in 0..c {
        let (mean, cov) = if train {
            let (mut sr, mut si) = (0.0, 0.0);
            for i in layout.indices(ch) {
                sr += xv.re()[i];
                si += xv.im()[i];
            }
            let mean = Complex64::new(sr / m, si / m);
            let (mut vrr, mut vri, mut vii) = (0.0, 0.0, 0.0);
            for i in layout.indices(ch) {
                let a = xv.re()[i] - mean.re;
                let b = xv.im()[i] - mean.im;
                vrr += a * a;
                vri += a * b;
                vii += b * b;
            }
            let cov = [vrr / m, vri / m, vii / m];
            let mom = state.config.momentum;
            let rm = &mut state.running_mean[ch];
            *rm = *rm * (1.0 - mom) + mean * mom;
            for k in 0..3 {
                state.running_cov[ch][k] = (1.0 - mom) * state.running_cov[ch][k] + mom * cov[k];
            }
            (mean, cov)
        } else {
            (state.running_mean[ch], state.running_cov[ch])
        };
        let v = (cov[0] + lambda, cov[1], cov[2] + lambda);
        if !(v.0 * v.2 - v.1 * v.1 > 0.0) {
            return Err(Error::NonFinite(format!("batchnorm covariance of channel {ch}")));
        }
        stats.push(ChannelStats {
            mean,
            w: inv_sqrt_2x2(v.0, v.1, v.2),
            v,
        });
    }

    let gamma = move |ch: usize| -> (f64, f64, f64) {
        if scalar_gamma {
            (gd.re()[ch], 0.0, gd.re()[ch])
        } else {
            (gd.re()[ch], go.re()[ch], gd.im()[ch])
        }
    };

    // whitened values, kept for the adjoint
    let len = xv.len();
    let mut wr = vec![0.0; len];
    let mut wi = vec![0.0; len];
    let mut out_re = vec![0.0; len];
    let mut out_im = vec![0.0; len];
    for (ch, st) in stats.iter().enumerate() {
        let (g11, g12, g22) = gamma(ch);
        let b = bt.get(ch);
        let (w11, w12, w22) = st.w;
        for i in layout.indices(ch) {
            let a = xv.re()[i] - st.mean.re;
            let bb = xv.im()[i] - st.mean.im;
            let xr = w11 * a + w12 * bb;
            let xi = w12 * a + w22 * bb;
            wr[i] = xr;
            wi[i] = xi;
            out_re[i] = g11 * xr + g12 * xi + b.re;
            out_im[i] = g12 * xr + g22 * xi + b.im;
        }
    }
    let value = ComplexTensor::from_planes(xv.shape(), out_re, out_im)?;

    tape.record(
        "complex_batchnorm",
        &[x, gamma_diag, gamma_off, beta],
        value,
        move |g, need| {
            let mut gx = ComplexTensor::zeros(xv.shape()).unwrap();
            let mut g_diag = ComplexTensor::zeros(&[c]).unwrap();
            let mut g_off = ComplexTensor::zeros(&[c]).unwrap();
            let mut g_beta = ComplexTensor::zeros(&[c]).unwrap();
            for (ch, st) in stats.iter().enumerate() {
                let (g11, g12, g22) = gamma(ch);
                let (w11, w12, w22) = st.w;
                let (mut db_r, mut db_i) = (0.0, 0.0);
                let (mut dg11, mut dg12, mut dg22) = (0.0, 0.0, 0.0);
                // S = Σ h·cᵀ with h = Γ·g, c the centred input
                let (mut s11, mut s12, mut s21, mut s22) = (0.0, 0.0, 0.0, 0.0);
                for i in layout.indices(ch) {
                    let (gu, gv) = (g.re()[i], g.im()[i]);
                    db_r += gu;
                    db_i += gv;
                    dg11 += gu * wr[i];
                    dg22 += gv * wi[i];
                    dg12 += gu * wi[i] + gv * wr[i];
                    let hx = g11 * gu + g12 * gv;
                    let hy = g12 * gu + g22 * gv;
                    let a = xv.re()[i] - st.mean.re;
                    let b = xv.im()[i] - st.mean.im;
                    s11 += hx * a;
                    s12 += hx * b;
                    s21 += hy * a;
                    s22 += hy * b;
                    gx.re_mut()[i] = w11 * hx + w12 * hy;
                    gx.im_mut()[i] = w12 * hx + w22 * hy;
                }
                g_beta.set(ch, Complex64::new(db_r, db_i));
                if scalar_gamma {
                    g_diag.re_mut()[ch] = dg11 + dg22;
                } else {
                    g_diag.set(ch, Complex64::new(dg11, dg22));
                    g_off.re_mut()[ch] = dg12;
                }
                if !(need[0] && train) {
                    continue;
                }
                let (dp, dq, dr) = inv_sqrt_2x2_adjoint(st.v.0, st.v.1, st.v.2, (s11, s12 + s21, s22));
                let (mut mean_r, mut mean_i) = (0.0, 0.0);
                for i in layout.indices(ch) {
                    let a = xv.re()[i] - st.mean.re;
                    let b = xv.im()[i] - st.mean.im;
                    let dr_i = gx.re()[i] + (2.0 * dp * a + dq * b) / m;
                    let di_i = gx.im()[i] + (2.0 * dr * b + dq * a) / m;
                    gx.re_mut()[i] = dr_i;
                    gx.im_mut()[i] = di_i;
                    mean_r += dr_i;
                    mean_i += di_i;
                }
                let (mean_r, mean_i) = (mean_r / m, mean_i / m);
                for i in layout.indices(ch) {
                    gx.re_mut()[i] -= mean_r;
                    gx.im_mut()[i] -= mean_i;
                }
            }
            vec![
                need[0].then_some(gx),
                need[1].then_some(g_diag),
                need[2].then_some(g_off),
                need[3].then_some(g_beta),
            ]
        },
    )
}

/// Standard per-channel batch normalization on the real plane, for the real
/// baselines. Uses `running_mean[c].re` and `running_cov[c][0]` as the running
/// mean and variance, `gamma.re` and `beta.re` as the affine parameters.
pub fn real_batchnorm(tape: &mut Tape, x: Var, gamma: Var, beta: Var, state: &mut BatchNormState) -> Result<Var> {
    let xv = tape.shared(x)?;
    let layout = Layout::of(xv.shape())?;
    let c = layout.c;
    if c != state.channels() {
        return Err(Error::shape("real_batchnorm", xv.shape(), &[state.channels()]));
    }
    let gm = tape.value(gamma)?.re().to_vec();
    let bt = tape.value(beta)?.re().to_vec();
    if gm.len() != c || bt.len() != c {
        return Err(Error::shape("real_batchnorm params", &[gm.len()], &[c]));
    }
    let train = state.mode == Mode::Train;
    if train && layout.n < 2 {
        return Err(Error::InvalidArgument("batchnorm needs batch size >= 2 in train mode".into()));
    }
    let m = layout.count() as f64;
    let eps = state.config.lambda;
    let mut inv_std = vec![0.0; c];
    let mut xhat = vec![0.0; xv.len()];
    let mut out = vec![0.0; xv.len()];
    for ch in 0..c {
        let (mean, var) = if train {
            let mean = layout.indices(ch).map(|i| xv.re()[i]).sum::<f64>() / m;
            let var = layout.indices(ch).map(|i| (xv.re()[i] - mean).powi(2)).sum::<f64>() / m;
            let mom = state.config.momentum;
            state.running_mean[ch].re = (1.0 - mom) * state.running_mean[ch].re + mom * mean;
            state.running_cov[ch][0] = (1.0 - mom) * state.running_cov[ch][0] + mom * var;
            (mean, var)
        } else {
            (state.running_mean[ch].re, state.running_cov[ch][0])
        };
        inv_std[ch] = 1.0 / (var + eps).sqrt();
        for i in layout.indices(ch) {
            xhat[i] = (xv.re()[i] - mean) * inv_std[ch];
            out[i] = gm[ch] * xhat[i] + bt[ch];
        }
    }
    let value = ComplexTensor::from_planes(xv.shape(), out, vec![0.0; xv.len()])?;
    tape.record("real_batchnorm", &[x, gamma, beta], value, move |g, need| {
        let mut gx = ComplexTensor::zeros(xv.shape()).unwrap();
        let mut gg = ComplexTensor::zeros(&[c]).unwrap();
        let mut gb = ComplexTensor::zeros(&[c]).unwrap();
        for ch in 0..c {
            let (mut sum_g, mut sum_gx) = (0.0, 0.0);
            for i in layout.indices(ch) {
                sum_g += g.re()[i];
                sum_gx += g.re()[i] * xhat[i];
            }
            gg.re_mut()[ch] = sum_gx;
            gb.re_mut()[ch] = sum_g;
            if !need[0] {
                continue;
            }
            let k = gm[ch] * inv_std[ch];
            for i in layout.indices(ch) {
                gx.re_mut()[i] = if train {
                    k * (g.re()[i] - sum_g / m - xhat[i] * sum_gx / m)
                } else {
                    k * g.re()[i]
                };
            }
        }
        vec![need[0].then_some(gx), need[1].then_some(gg), need[2].then_some(gb)]
    })
}

/// Applies [`complex_batchnorm`] outside of training, returning a plain tensor.
pub fn complex_batchnorm_forward(
    x: &ComplexTensor,
    gamma_diag: &ComplexTensor,
    gamma_off: &ComplexTensor,
    beta: &ComplexTensor,
    state: &mut BatchNormState,
) -> Result<ComplexTensor> {
    let mut tape = Tape::new();
    let xs = tape.constant(x.clone());
    let gd = tape.constant(gamma_diag.clone());
    let go = tape.constant(gamma_off.clone());
    let bt = tape.constant(beta.clone());
    let y = complex_batchnorm(&mut tape, xs, gd, go, bt, state)?;
    Ok(tape.value(y)?.clone())
}
