//! Numerical laboratory for the late-time behaviour of small-data solutions
//! of the spherically symmetric semilinear wave equation `□u = F(u)`,
//! `F(u) = u^p + c·u^(p+k)`.
//!
//! For data `(εf, εg)` the late-time field is, to leading order,
//!
//! ```text
//! u(t, r) ≈ ε·u0(t, r) + ε^p·W(t, r),
//! W(t, r) = A_p·Θ(t−r)/r · [(t−r)^−(p−2) − (t+r)^−(p−2)],
//! A_p = 2^(p−3)·C_p/(p−2),   C_p = ∫ h(x)^p dx,
//! ```
//!
//! where `u0 = [h(t−r) − h(t+r)]/r` is the free wave built from the profile
//! `h`. The crate evolves the full field and the remainder `w = u − εu0` on
//! a lattice, evaluates the closed forms, and provides the norms, fits and
//! scaling regressions used to compare the two.
//!
//! Module map:
//! - [`model`]: nonlinearity, radial data profiles, run configuration.
//! - [`linear`]: the profile `h` and the free solution `u0`.
//! - [`constants`]: moments of `h` and the asymptotic parameter bundle.
//! - [`evolve`]: leapfrog evolution of `u` and `w`, Richardson ladders.
//! - [`greenfn`]: spherical Duhamel operator, `W`, `Φ_p`, shell deficits.
//! - [`analysis`]: weighted norms, rescaling, tail and scaling fits.
//! - [`cli`]: command orchestration and artifact writing.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod constants;
pub mod error;
pub mod evolve;
pub mod greenfn;
pub mod linear;
pub mod model;
pub mod quad;

pub use error::{Error, Result};
