//! Low-rank plus sparse decomposition of third-order tensors.
//!
//! The crate provides tensor algebra under an invertible mode-3 transform
//! (DFT, DCT or a Daubechies wavelet), the t-SVD built on it, an ADMM solver
//! for tensor robust PCA, and a multi-slice driver that decomposes stacks of
//! aligned 3D volumes segment by segment.

pub mod error;
pub mod metrics;
pub mod multislice;
mod parallel;
pub mod tensor;
pub mod tpcp;
pub mod transform;
pub mod tsvd;
pub mod volume;

pub use error::{Error, Result};
pub use parallel::with_workers;
pub use tensor::{ComplexTensor3, Dims, Tensor3};
pub use tpcp::{tpcp_solve, Lambda, TpcpConfig, TpcpResult};
pub use multislice::{ms_lrtd, plan_segments, MultiSliceResult, SegmentPlan};
pub use transform::{Spectrum, TransformKind, TransformSpec};
pub use tsvd::{shrink, tnn, tsvd, tsvt, TsvdFactors};
