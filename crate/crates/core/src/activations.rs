//! Complex activation functions.
//!
//! Each activation exists as a plain tensor map and as a recorded tape op.
//! Adjoints are the transposed real Jacobians `∂(u, v)/∂(x, y)`. At points
//! where an activation is not differentiable the derivative of the active
//! branch is used when the point belongs to it, otherwise zero.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::{ComplexTensor, Error, Result, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    CRelu,
    /// Per-channel learnable bias supplied at call time.
    ModRelu,
    ZRelu,
    SmoothZRelu { alpha: f64 },
    SplitTanh,
    Cardioid,
}

impl Activation {
    pub const ALL: [&'static str; 6] = ["crelu", "modrelu", "zrelu", "smooth_zrelu", "split_tanh", "cardioid"];

    pub fn name(&self) -> &'static str {
        match self {
            Activation::CRelu => "crelu",
            Activation::ModRelu => "modrelu",
            Activation::ZRelu => "zrelu",
            Activation::SmoothZRelu { .. } => "smooth_zrelu",
            Activation::SplitTanh => "split_tanh",
            Activation::Cardioid => "cardioid",
        }
    }

    pub fn has_bias(&self) -> bool {
        matches!(self, Activation::ModRelu)
    }

    /// Records the activation; `bias` is required for modReLU and ignored otherwise.
    pub fn apply(&self, tape: &mut Tape, x: Var, bias: Option<Var>) -> Result<Var> {
        match *self {
            Activation::CRelu => record_crelu(tape, x),
            Activation::ModRelu => {
                let b = bias.ok_or_else(|| Error::InvalidArgument("modrelu needs a bias".into()))?;
                record_modrelu(tape, x, b)
            }
            Activation::ZRelu => record_zrelu(tape, x),
            Activation::SmoothZRelu { alpha } => record_smooth_zrelu(tape, x, alpha),
            Activation::SplitTanh => record_split_tanh(tape, x),
            Activation::Cardioid => record_cardioid(tape, x),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "crelu" => Activation::CRelu,
            "modrelu" => Activation::ModRelu,
            "zrelu" => Activation::ZRelu,
            "smooth_zrelu" => Activation::SmoothZRelu { alpha: 1.0 },
            "split_tanh" => Activation::SplitTanh,
            "cardioid" => Activation::Cardioid,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown activation `{other}` (expected one of {})",
                    Activation::ALL.join("|")
                )))
            }
        })
    }
}

/// `(u, v)` and the Jacobian `[∂u/∂x, ∂u/∂y, ∂v/∂x, ∂v/∂y]` at `(x, y)`.
type Pointwise = fn(f64, f64, f64) -> ((f64, f64), [f64; 4]);

fn map_pointwise(z: &ComplexTensor, f: Pointwise, param: f64) -> ComplexTensor {
    z.map(|w| {
        let ((u, v), _) = f(w.re, w.im, param);
        Complex64::new(u, v)
    })
}

fn record_pointwise(tape: &mut Tape, kind: &'static str, x: Var, f: Pointwise, param: f64) -> Result<Var> {
    let xv = tape.shared(x)?;
    let value = map_pointwise(&xv, f, param);
    tape.record(kind, &[x], value, move |g, _| {
        let mut gx = ComplexTensor::zeros(xv.shape()).unwrap();
        for i in 0..xv.len() {
            let (_, [ux, uy, vx, vy]) = f(xv.re()[i], xv.im()[i], param);
            let (gu, gv) = (g.re()[i], g.im()[i]);
            gx.re_mut()[i] = gu * ux + gv * vx;
            gx.im_mut()[i] = gu * uy + gv * vy;
        }
        vec![Some(gx)]
    })
}

fn relu_parts(x: f64) -> (f64, f64) {
    if x > 0.0 {
        (x, 1.0)
    } else if x == 0.0 {
        (0.0, 1.0)
    } else {
        (0.0, 0.0)
    }
}

fn crelu_point(x: f64, y: f64, _: f64) -> ((f64, f64), [f64; 4]) {
    let (u, du) = relu_parts(x);
    let (v, dv) = relu_parts(y);
    ((u, v), [du, 0.0, 0.0, dv])
}

fn zrelu_point(x: f64, y: f64, _: f64) -> ((f64, f64), [f64; 4]) {
    if x >= 0.0 && y >= 0.0 {
        ((x, y), [1.0, 0.0, 0.0, 1.0])
    } else {
        ((0.0, 0.0), [0.0; 4])
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn smooth_zrelu_point(x: f64, y: f64, alpha: f64) -> ((f64, f64), [f64; 4]) {
    let (sx, sy) = (sigmoid(alpha * x), sigmoid(alpha * y));
    let m = sx * sy;
    let mx = alpha * sx * (1.0 - sx) * sy;
    let my = alpha * sy * (1.0 - sy) * sx;
    ((x * m, y * m), [m + x * mx, x * my, y * mx, m + y * my])
}

fn split_tanh_point(x: f64, y: f64, _: f64) -> ((f64, f64), [f64; 4]) {
    let (tx, ty) = (x.tanh(), y.tanh());
    ((tx, ty), [1.0 - tx * tx, 0.0, 0.0, 1.0 - ty * ty])
}

fn cardioid_point(x: f64, y: f64, _: f64) -> ((f64, f64), [f64; 4]) {
    let r = x.hypot(y);
    if r == 0.0 {
        // cos φ is undefined at the origin; use the φ = π/2 slope
        return ((0.0, 0.0), [0.5, 0.0, 0.0, 0.5]);
    }
    let c = x / r;
    let r3 = r * r * r;
    (
        (0.5 * (x + x * c), 0.5 * (y + y * c)),
        [
            0.5 * (1.0 + x * (x * x + 2.0 * y * y) / r3),
            -0.5 * x * x * y / r3,
            0.5 * y * y * y / r3,
            0.5 * (1.0 + x * x * x / r3),
        ],
    )
}

/// `ReLU(Re z) + i·ReLU(Im z)`.
pub fn crelu(z: &ComplexTensor) -> ComplexTensor {
    map_pointwise(z, crelu_point, 0.0)
}

/// `z` where both parts are nonnegative, else `0`.
pub fn zrelu(z: &ComplexTensor) -> ComplexTensor {
    map_pointwise(z, zrelu_point, 0.0)
}

/// `z·σ(α·Re z)·σ(α·Im z)`.
pub fn smooth_zrelu(z: &ComplexTensor, alpha: f64) -> Result<ComplexTensor> {
    check_alpha(alpha)?;
    Ok(map_pointwise(z, smooth_zrelu_point, alpha))
}

/// `tanh(Re z) + i·tanh(Im z)`.
pub fn split_tanh(z: &ComplexTensor) -> ComplexTensor {
    map_pointwise(z, split_tanh_point, 0.0)
}

/// `(z/2)(1 + cos φ_z)`, with `cardioid(0) = 0`.
pub fn cardioid(z: &ComplexTensor) -> ComplexTensor {
    map_pointwise(z, cardioid_point, 0.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("smooth_zrelu alpha must be > 0, got {alpha}")))
    }
}

pub fn record_crelu(tape: &mut Tape, x: Var) -> Result<Var> {
    record_pointwise(tape, "crelu", x, crelu_point, 0.0)
}

pub fn record_zrelu(tape: &mut Tape, x: Var) -> Result<Var> {
    record_pointwise(tape, "zrelu", x, zrelu_point, 0.0)
}

pub fn record_smooth_zrelu(tape: &mut Tape, x: Var, alpha: f64) -> Result<Var> {
    check_alpha(alpha)?;
    record_pointwise(tape, "smooth_zrelu", x, smooth_zrelu_point, alpha)
}

pub fn record_split_tanh(tape: &mut Tape, x: Var) -> Result<Var> {
    record_pointwise(tape, "split_tanh", x, split_tanh_point, 0.0)
}

pub fn record_cardioid(tape: &mut Tape, x: Var) -> Result<Var> {
    record_pointwise(tape, "cardioid", x, cardioid_point, 0.0)
}

fn channel_layout(shape: &[usize], channels: usize) -> Result<(usize, usize)> {
    if shape.len() < 2 || shape[1] != channels {
        return Err(Error::shape("modrelu bias", shape, &[channels]));
    }
    Ok((shape[1], shape[2..].iter().product()))
}

/// `ReLU(|z| + b)·e^{iφ}`, `b` indexed by channel (axis 1). Zero at `z = 0`.
pub fn modrelu(z: &ComplexTensor, b: &[f64]) -> Result<ComplexTensor> {
    let (c, spatial) = channel_layout(z.shape(), b.len())?;
    let mut out = z.clone();
    for i in 0..z.len() {
        out.set(i, modrelu_point(z.get(i), b[(i / spatial) % c]).0);
    }
    Ok(out)
}

/// Value, Jacobian `[ux, uy, vx, vy]` and `[∂u/∂b, ∂v/∂b]`.
fn modrelu_point(z: Complex64, b: f64) -> (Complex64, [f64; 4], [f64; 2]) {
    let r = z.norm();
    if r == 0.0 || r + b < 0.0 {
        return (Complex64::new(0.0, 0.0), [0.0; 4], [0.0; 2]);
    }
    let (x, y) = (z.re, z.im);
    let k = (r + b) / r;
    let r3 = r * r * r;
    (
        z * k,
        [1.0 + b * y * y / r3, -b * x * y / r3, -b * x * y / r3, 1.0 + b * x * x / r3],
        [x / r, y / r],
    )
}

/// Recorded [`modrelu`]; `b` is a per-channel tensor whose real part is the bias.
pub fn record_modrelu(tape: &mut Tape, x: Var, b: Var) -> Result<Var> {
    let xv = tape.shared(x)?;
    let bias = tape.value(b)?.re().to_vec();
    let (c, spatial) = channel_layout(xv.shape(), bias.len())?;
    let value = modrelu(&xv, &bias)?;
    tape.record("modrelu", &[x, b], value, move |g, _| {
        let mut gx = ComplexTensor::zeros(xv.shape()).unwrap();
        let mut gb = ComplexTensor::zeros(&[c]).unwrap();
        for i in 0..xv.len() {
            let ch = (i / spatial) % c;
            let (_, [ux, uy, vx, vy], [ub, vb]) = modrelu_point(xv.get(i), bias[ch]);
            let (gu, gv) = (g.re()[i], g.im()[i]);
            gx.re_mut()[i] = gu * ux + gv * vx;
            gx.im_mut()[i] = gu * uy + gv * vy;
            gb.re_mut()[ch] += gu * ub + gv * vb;
        }
        vec![Some(gx), Some(gb)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(re: f64, im: f64) -> ComplexTensor {
        ComplexTensor::scalar(Complex64::new(re, im))
    }

    fn close(a: &ComplexTensor, re: f64, im: f64, tol: f64) -> bool {
        (a.get(0) - Complex64::new(re, im)).norm() <= tol
    }

    #[test]
    fn crelu_examples() {
        assert!(close(&crelu(&one(-1.0, 2.0)), 0.0, 2.0, 0.0));
        assert!(close(&crelu(&one(3.0, -4.0)), 3.0, 0.0, 0.0));
        assert!(close(&crelu(&one(-1.0, -1.0)), 0.0, 0.0, 0.0));
    }

    #[test]
    fn modrelu_examples() {
        let z = one(3.0, 4.0).reshape(&[1, 1]).unwrap();
        let out = modrelu(&z, &[-1.0]).unwrap();
        assert!(close(&out, 2.4, 3.2, 1e-12));
        let out = modrelu(&one(1.0, 0.0).reshape(&[1, 1]).unwrap(), &[-2.0]).unwrap();
        assert!(close(&out, 0.0, 0.0, 0.0));
        let z = one(-0.3, 1.7).reshape(&[1, 1]).unwrap();
        assert!(close(&modrelu(&z, &[0.0]).unwrap(), -0.3, 1.7, 1e-15));
        let z = one(0.0, 0.0).reshape(&[1, 1]).unwrap();
        assert!(close(&modrelu(&z, &[5.0]).unwrap(), 0.0, 0.0, 0.0));
    }

    #[test]
    fn modrelu_bias_is_per_channel() {
        let z = ComplexTensor::from_complex(&[1, 2], &[Complex64::new(2.0, 0.0); 2]).unwrap();
        let out = modrelu(&z, &[1.0, -1.0]).unwrap();
        assert_eq!(out.get(0), Complex64::new(3.0, 0.0));
        assert_eq!(out.get(1), Complex64::new(1.0, 0.0));
        assert!(modrelu(&z, &[1.0]).is_err());
    }

    #[test]
    fn zrelu_examples() {
        assert!(close(&zrelu(&one(1.0, 2.0)), 1.0, 2.0, 0.0));
        assert!(close(&zrelu(&one(-1.0, 2.0)), 0.0, 0.0, 0.0));
        assert!(close(&zrelu(&one(1.0, -0.5)), 0.0, 0.0, 0.0));
        // boundary belongs to the active set
        assert!(close(&zrelu(&one(0.0, 2.0)), 0.0, 2.0, 0.0));
    }

    #[test]
    fn smooth_zrelu_examples() {
        assert!(close(&smooth_zrelu(&one(0.0, 0.0), 1.0).unwrap(), 0.0, 0.0, 0.0));
        let s1 = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((s1 - 0.731059).abs() < 1e-6);
        let out = smooth_zrelu(&one(1.0, 1.0), 1.0).unwrap();
        assert!(close(&out, s1 * s1, s1 * s1, 1e-15));
        assert!(close(&out, 0.534447, 0.534447, 1e-6));
        assert!(close(&smooth_zrelu(&one(50.0, 60.0), 1.0).unwrap(), 50.0, 60.0, 1e-12));
        assert!(smooth_zrelu(&one(1.0, 1.0), 0.0).is_err());
        assert!(smooth_zrelu(&one(1.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn split_tanh_examples() {
        assert!(close(&split_tanh(&one(0.0, 0.0)), 0.0, 0.0, 0.0));
        assert!(close(&split_tanh(&one(1.0, 0.0)), 0.761594, 0.0, 1e-6));
        assert!(close(&split_tanh(&one(100.0, 100.0)), 1.0, 1.0, 1e-12));
    }

    #[test]
    fn cardioid_examples() {
        assert!(close(&cardioid(&one(2.5, 0.0)), 2.5, 0.0, 0.0));
        assert!(close(&cardioid(&one(-2.5, 0.0)), 0.0, 0.0, 0.0));
        assert!(close(&cardioid(&one(0.0, 2.0)), 0.0, 1.0, 1e-15));
        assert!(close(&cardioid(&one(0.0, 0.0)), 0.0, 0.0, 0.0));
    }

    #[test]
    fn parse_names() {
        for name in Activation::ALL {
            assert_eq!(name.parse::<Activation>().unwrap().name(), name);
        }
        assert!("tanh".parse::<Activation>().is_err());
    }
}
