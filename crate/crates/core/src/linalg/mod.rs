//! Dense complex linear algebra and quantum-state primitives.
//!
//! Every type here is immutable after construction and validated on entry,
//! so values can be shared freely across worker threads.

pub mod matrix;
pub mod operators;
pub mod ops;
pub mod random;
pub mod spectral;

pub use matrix::ComplexMatrix;
pub use operators::{DensityMatrix, HermitianOperator, StateVector, UnitaryOperator};
pub use ops::{conjugate, partial_trace, partial_trace_matrix, projector_from_state, tensor_product, Keep};
pub use spectral::{eigh, matrix_exponential, spectral_decompose, spectral_decompose_default, SpectralDecomposition};
