//! Numerical kernel shared by the tests, generators and harness.

mod distributions;
mod linalg;
mod moments;
mod ranks;
mod rng;

pub use distributions::{
    chi2_cdf, chi2_isf, chi2_quantile, chi2_sf, gamma_p, gamma_q, ln_gamma, normal_cdf,
    normal_quantile,
};
pub use linalg::{kronecker, SymEigen, SymMatrix};
pub use moments::{column_mean, column_var, cov_matrix, VarMode};
pub use ranks::ranks;
pub use rng::{fnv1a64, RngStream};
