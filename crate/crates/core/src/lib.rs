//! Exact laws of hitting times and fastest strong stationary times for finite
//! Markov chains, computed through a pure-birth dual built from the
//! eigenvalues of the kernel.
//!
//! The pipeline is
//!
//! 1. [`chain`]: validate a kernel or generator and move the target last;
//! 2. [`spectral`]: order the eigenvalues and form the spectral polynomials;
//! 3. [`duality`]: build the link, the dual kernel and the mixture weights;
//! 4. [`dist`]: expose the resulting law (CDF, mean, quantiles, transforms);
//! 5. [`coupling`]: simulate the dual alongside the chain and test it.
//!
//! ```
//! use ssd_core::chain::{InitialLaw, TransitionKernel};
//! use ssd_core::dist::absorption_law;
//!
//! let p = TransitionKernel::from_rows(&[
//!     vec![0.5, 0.5, 0.0],
//!     vec![0.25, 0.5, 0.25],
//!     vec![0.0, 0.0, 1.0],
//! ])?;
//! let law = absorption_law(&p, &InitialLaw::delta(3, 0))?;
//! assert!((law.cdf(2.0)? - 0.125).abs() < 1e-14);
//! assert!((law.mean()? - 8.0).abs() < 1e-12);
//! # Ok::<(), ssd_core::error::Error>(())
//! ```

pub mod chain;
pub mod coupling;
pub mod dist;
pub mod duality;
pub mod error;
pub mod linalg;
pub mod spectral;
pub mod tol;

pub use nalgebra;
pub use num_complex;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/chains.md")]
    mod chains {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/duality.md")]
    mod duality {}
    #[doc = include_str!("../../../book/src/absorption.md")]
    mod absorption {}
    #[doc = include_str!("../../../book/src/stationary.md")]
    mod stationary {}
    #[doc = include_str!("../../../book/src/continuous.md")]
    mod continuous {}
    #[doc = include_str!("../../../book/src/coupling.md")]
    mod coupling {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
