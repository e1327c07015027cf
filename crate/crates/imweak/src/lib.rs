//! Numerical engine for weak measurements with imaginary weak values.
//!
//! The central object is the post-selection probability of a two-state system
//! evolved by `e^{-ikC}`, where the coupling `k` is a classical random
//! variable with a tabulated distribution. Conditioning that distribution on
//! a successful post-selection (a Bayes update with the exact quantum
//! likelihood) shifts its mean by `2·Im C_w·Var(k)` to first order; this
//! crate computes both the exact and the first-order shift, checks when the
//! weak regime holds, realizes the same physics with a discretized quantum
//! meter wavefunction, and ships four experiment geometries (white-light
//! phase estimation, femtosecond interferometry, atomic spontaneous emission,
//! Doppler velocimetry) as presets.
//!
//! Modules:
//! - [`qcore`]: states, Hermitian observables, weak values, exact propagation;
//! - [`dist`]: tabulated densities of the coupling parameter with trapezoid
//!   quadrature, moment laws and CSV interchange;
//! - [`postselect`]: the Bayes engine, exact vs first-order shifts, validity
//!   diagnostics and a seeded Monte-Carlo oracle;
//! - [`metersim`]: quantum-meter realization on a wavefunction grid and the
//!   exact cross-formalism equivalence with the Bayes engine;
//! - [`scenarios`]: the four experiment presets in physical units.
//!
//! # Example
//!
//! The canonical qubit (`C = diag(0, 1)`, `Ψ = (1,1)/√2`, `Φ = (1,-i)/√2`)
//! has `Im C_w = 1/2`, so a centered Gaussian coupling of width σ shifts by
//! ≈ σ² under post-selection:
//!
//! ```
//! use imweak::dist::GridDistribution;
//! use imweak::postselect::{self, canonical_qubit, ReportOptions};
//!
//! let (observable, tsv) = canonical_qubit();
//! let prior = GridDistribution::gaussian(0.0, 0.05, 2001, 8.0)?;
//! let report = postselect::report(&prior, &observable, &tsv, ReportOptions::default())?;
//!
//! assert!((report.analytic_shift - 0.0025).abs() < 1e-9);
//! assert!((report.exact_shift - report.analytic_shift).abs() / report.exact_shift < 2e-3);
//! assert!(report.weak_ok);
//! # Ok::<(), imweak::Error>(())
//! ```

// Parameter checks use `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod metersim;
pub mod postselect;
pub mod qcore;
pub mod scenarios;

pub use error::{Error, Result};
