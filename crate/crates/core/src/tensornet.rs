//! Minimal dense complex tensor-network core: multi-leg tensors, pairwise
//! contraction, SVD with relative truncation, and the matrix-product-state
//! machinery used by the process-tensor builder and applier.

pub mod mps;
pub mod tensor;

pub use mps::{
    apply_mpo_column_and_compress, ColumnOp, CompressionReport, MatrixProductState,
};
pub use tensor::{contract, truncated_svd, SvdResult, Tensor, TensorError, TruncationPolicy};
