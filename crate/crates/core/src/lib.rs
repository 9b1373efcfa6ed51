//! Deciding, certifying and falsifying spectral boundedness of elementary
//! operators `S(x) = Σ aᵢ x bᵢ` on the full matrix algebra `M_n(ℂ)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`matcore`]: dense complex matrix primitives and spectral quantities.
//! * [`elop`]: the elementary-operator data model.
//! * [`nilspace`]: nilpotent matrix subspaces and common flags.
//! * [`specnorm`]: spectral-ratio estimation and blowup witnesses.
//! * [`classify`]: necessary and sufficient conditions with certificates.
//! * [`gen`], [`json`], [`selftest`]: generators, wire formats and the
//!   property suites used by the CLI and the acceptance tests.

pub mod classify;
pub mod elop;
mod error;
pub mod gen;
pub mod json;
pub mod matcore;
pub mod nilspace;
pub mod rng;
pub mod selftest;
pub mod specnorm;

pub use error::{Error, Result};
pub use matcore::{CMat, CVec, Tolerance, C64};
