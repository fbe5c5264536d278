//! Testing the Missing-Completely-At-Random hypothesis.
//!
//! The crate provides
//!
//! * a dataset model with an explicit missingness mask ([`datamodel`]),
//! * a small numerical kernel: moments, symmetric eigen-solvers, chi-squared and
//!   normal distribution functions, ranks and reproducible random streams
//!   ([`numerics`]),
//! * the U-statistic based `A_n` test, its bivariate `D_n` special case and
//!   Little's `d²` test in both the univariate-nonresponse closed form and the
//!   general EM-based form ([`mcar`]),
//! * synthetic data generators and amputation mechanisms ([`synthesis`]),
//! * a deterministic, parallel Monte-Carlo harness for empirical size and power
//!   studies ([`harness`]).
//!
//! ```
//! use mcar_core::datamodel::{ColumnRoles, Dataset};
//! use mcar_core::mcar::a_n_test;
//!
//! let ds = Dataset::new(
//!     vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.5, 0.0, 1.5, 0.2]],
//!     vec![vec![true; 4], vec![true, true, false, true]],
//!     vec!["x".into(), "y".into()],
//! )
//! .unwrap();
//! let roles = ColumnRoles::infer(&ds).unwrap();
//! let result = a_n_test(&ds, &roles, 0.05).unwrap();
//! assert_eq!(result.df, 1);
//! ```

pub mod datamodel;
pub mod error;
pub mod harness;
pub mod mcar;
pub mod numerics;
pub mod synthesis;

pub use error::{Error, Result};
