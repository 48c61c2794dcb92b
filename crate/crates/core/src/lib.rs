//! Stieltjes differential calculus on a finite window.
//!
//! Everything is driven by a [`Derivator`] `g`: a non-decreasing,
//! left-continuous function stored as a piecewise-linear continuous part plus
//! finitely many jump atoms. On top of it the crate offers
//!
//! - Lebesgue–Stieltjes integration against `μ_g` and numerical
//!   g-derivatives ([`calculus`]),
//! - g-continuity moduli, factorization through `g` and polynomial fits in
//!   `g` ([`gfunc`]),
//! - g-exponentials and the exponential-tail extension operator
//!   ([`exponential`]),
//! - finite-scale compactness certificates ([`compactness`]),
//! - additive and multiplicative jump decompositions ([`decompose`]).
//!
//! ```
//! use stj_core::{calculus, Derivator, GFunction};
//!
//! let g = Derivator::new(vec![-1.0, 0.5, 1.0, 2.0], vec![-1.0, 0.5, 0.5, 1.5], [(0.0, 1.0)])?;
//! let f = GFunction::continuous("t", |t| t);
//! let value = calculus::integrate(&f, &g, -1.0, 2.0, 1e-10)?;
//! assert!((value - 1.125).abs() < 1e-10);
//! # Ok::<(), stj_core::Error>(())
//! ```

pub mod calculus;
pub mod compactness;
pub mod decompose;
pub mod derivator;
pub mod error;
pub mod exponential;
pub mod function;
pub mod gfunc;
pub mod grid;
pub mod quad;

pub use derivator::{Derivator, DerivatorSpec, Jump, PointClassification, Pseudoinverse, SplitParts};
pub use error::{Error, Result};
pub use function::{GFunction, SobolevFunction};

/// Default tolerance used when a caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-8;
