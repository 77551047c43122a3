//! Replica-symmetric and one-step replica-symmetry-breaking computations for
//! the multi-species Sherrington–Kirkpatrick model.
//!
//! The crate is organized bottom-up:
//!
//! - [`quadrature`]: Gaussian expectations, one- and two-level.
//! - [`model`]: species proportions, the variance matrix and validation.
//! - [`parisi`]: the generic `k`-level Parisi functional.
//! - [`rs`]: the replica-symmetric functional and its fixed-point solver.
//! - [`atline`]: the Hessian test and the two-species threshold algebra.
//! - [`onersb`]: the closed-form 1RSB functional and RSB certificates.
//! - [`simulate`]: exact enumeration and Monte Carlo at finite `N`.
//! - [`cli`]: the `msk` command-line surface.

pub mod atline;
pub mod cli;
pub mod error;
pub mod model;
pub mod onersb;
pub mod parisi;
pub mod quadrature;
pub mod rs;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use model::{ModelSpec, TempField, ValidationMode};
pub use quadrature::QuadRule;
