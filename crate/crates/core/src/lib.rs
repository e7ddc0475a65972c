//! Numerical toolkit for ternary divisor sums in arithmetic progressions.
//!
//! The crate has three layers:
//!
//! * exact finite-field arithmetic and complete-sum transforms over `Z/p`
//!   ([`ff`], [`trace`]): additive characters, discrete Fourier transforms,
//!   hyper-Kloosterman sums and the two-variable Bessel-type transform;
//! * smooth archimedean machinery ([`windows`]): bump windows, logarithmic
//!   partitions of unity, continuous Fourier transforms with certified
//!   truncation of dual sums;
//! * the arithmetic experiments built on top ([`divisor`], [`identities`],
//!   [`cancellation`], [`experiments`]): divisor-function tables, dual-sum
//!   identity checks with explicit tails, and error-term scans for d3 in
//!   progressions to prime moduli.
//!
//! Everything is plain `f64`/`Complex64`; sums that feed assertions use
//! compensated accumulation in a fixed order so results are reproducible
//! bit-for-bit across runs and thread counts.

pub mod cancellation;
pub mod config;
pub mod csvout;
pub mod divisor;
pub mod error;
pub mod experiments;
pub mod ff;
pub mod identities;
pub mod jet;
pub mod kahan;
pub mod selftest;
pub mod trace;
pub mod windows;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
