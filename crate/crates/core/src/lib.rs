//! Complex-valued neural network toolkit.
//!
//! Values are [`ComplexTensor`]s stored as split real/imaginary planes. Every
//! layer and activation records itself on a [`Tape`]; gradients are reported
//! in the `dL/dx + i·dL/dy` convention (twice the conjugate Wirtinger
//! derivative), which is what the optimizers in [`optim`] consume.

pub mod activations;
pub mod audio;
pub mod autodiff;
pub mod checkpoint;
pub mod data;
mod error;
pub mod graph;
pub mod init;
pub mod layers;
pub mod optim;
pub mod params;
mod rng;
pub mod tensor;

pub use autodiff::{grad_check, grad_check_real, GradStore, Tape, Var};
pub use error::{Error, Result};
pub use params::ParamSet;
pub use rng::Rng;
pub use tensor::{ComplexTensor, RealTensor};

pub use num_complex::Complex64;
