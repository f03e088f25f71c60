//! Reverse-mode differentiation over complex tensors.
//!
//! Every complex operation is treated as a real map on its `(x, y)` planes.
//! Local adjoints are the transposed real Jacobians of those maps, so the
//! gradient reaching a leaf is `dL/dx + i·dL/dy` for a real loss `L`. This is
//! `2·∂L/∂z̄` in Wirtinger notation; the factor 2 is left to the learning rate.

mod gradcheck;
mod ops;
mod tape;

pub use gradcheck::{grad_check, grad_check_real, GRAD_CHECK_FLOOR};
pub use tape::{Backward, GradStore, Tape, Var};
