//! Exponential Rosenbrock integrators for stiff matrix Riccati and Sylvester
//! differential equations.
//!
//! `X' = A·X + X·D + Q − X·G·X` is integrated with the exponential Euler and
//! the third-order `Erow3` schemes, built on the Fréchet linearization at the
//! current step. Dense, Sylvester-solve and low-rank `L·D·Lᵀ` realizations
//! are provided, with the exact Radon-linearization solution as reference.

pub mod dense;
pub mod error;
pub mod integrators;
pub mod krylov;
pub mod lowrank;
pub mod oracle;
pub mod phifun;
pub mod problems;
pub mod sylvop;

pub use dense::RealMatrix;
pub use error::{Error, Result};
