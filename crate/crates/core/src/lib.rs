//! Time-periodic solutions of the forced Kirchhoff equation
//!
//! ```text
//! ω² u_tt − Δu (1 + μ ∫_Ω |∇u|² dx) = μ g(x, t)
//! ```
//!
//! by a Nash-Moser iteration in coefficient space. The crate is organized
//! bottom-up:
//!
//! - [`basis`]: Laplacian spectra of intervals, boxes and flat tori.
//! - [`field`]: time profiles, space-time fields, `X_{σ,s}` norms and the
//!   gradient-energy integrals.
//! - [`kirchhoff`]: the nonlinear map `F` and its derivatives.
//! - [`hill`]: weighted Hill eigenproblems and the Liouville oracle.
//! - [`linsolve`]: small-divisor screening and inversion of `F'(u)`.
//! - [`nashmoser`]: the outer iteration, verification and uniqueness probes.
//! - [`sweep`]: parameter-plane sweeps and measure estimates.

pub mod basis;
pub mod error;
pub mod field;
pub mod hill;
pub mod kirchhoff;
pub mod linsolve;
pub mod nashmoser;
pub mod sweep;

pub use error::{Error, Result};
