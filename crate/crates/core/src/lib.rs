//! Expansion coefficients of Volterra-type kernels in orthonormal bases,
//! trace identities for their diagonals, and Monte Carlo checks of the
//! resulting approximations of iterated stochastic integrals.

pub mod basis;
pub mod coeffs;
pub mod error;
pub mod kernel;
pub mod quadrature;
pub mod report;
mod scalar;
pub mod stochastic;
pub mod trace;

pub use basis::{BasisFamily, Interval, OrthonormalBasis};
pub use coeffs::{
    coefficient, coefficient_diagonal, coefficient_matrix, kernel_coefficient, kernel_coefficient_complex,
    kernel_diagonal, kernel_matrix, tensor_coefficients, CoefficientMatrix, CoefficientTensor,
};
pub use error::{Error, Result};
pub use kernel::{
    default_epsilon_schedule, factorization_residual, DiagonalTrace, FactorPair, KernelKind, KernelSpec, TrigTerm,
    WeightFunction,
};
pub use quadrature::QuadratureConfig;
pub use trace::{
    basis_independence, inner_product, tensor_neighbor_trace, tensor_nonneighbor_trace, verify_eq7, verify_theorem1,
    verify_theorem2, NeighborPair, TraceReport,
};
pub use stochastic::{
    brownian_midpoint_oracle, build_truncated_path, ito_from_stratonovich, mc_campaign, simulate_stratonovich_pair,
    smooth_path_oracle, GaussianDraw, MCReport, McConfig, SmoothPathOracle,
};
