//! Complex network layers: convolution, dense, pooling, batch normalization
//! and the magnitude log-softmax classifier head.

mod batchnorm;
mod conv;
mod head;
pub(crate) mod kernels;
mod linear;
mod pool;

pub use batchnorm::{
    complex_batchnorm, complex_batchnorm_forward, inv_sqrt_2x2, real_batchnorm, BatchNormConfig,
    BatchNormState, GammaMode, Mode,
};
pub use conv::{complex_conv2d, conv2d, conv_output_size, Conv2dParams};
pub use head::{abs_log_softmax, abs_logsoftmax_head, log_softmax, nll, nll_loss};
pub use linear::{complex_linear, left_matmul_const, linear};
pub use pool::{avgpool, complex_avgpool, complex_maxpool_mag, maxpool_mag, maxpool_real, PoolSpec};
