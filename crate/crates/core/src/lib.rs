//! Inverse problem of the calculus of variations for second-order systems on
//! surfaces.
//!
//! Given a source form ε = (ε_x ω^x + ε_y ω^y) ∧ dt on the second jet of a
//! fibration ℝ × M → ℝ over a 2-manifold M, this crate decides local
//! variationality (Helmholtz conditions), builds the Lepage equivalent and its
//! splitting α_ε = α₀ ∧ dt + α′, and assembles a global Lagrangian
//! h(μ₀ + κ + η), solving ω = dη with a partition-of-unity construction when
//! the obstruction 2-form ω does not vanish.
//!
//! The crate is `no_std` (it needs `alloc`); file formats and the command line
//! driver live in the `globvar` crate.

#![cfg_attr(not(test), no_std)]
// NaN-aware comparisons (`!(r < tol)`) are deliberate throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

extern crate alloc;

pub mod atlas;
pub mod cohomology;
pub mod expr;
pub mod globalize;
pub mod jet;
pub mod lagrange;
pub mod lepage;
pub mod num;
pub mod quad;
pub mod sample;
pub mod varcheck;

#[cfg(test)]
mod testdata;

pub use expr::{Binding, Env, EvalError, Expression, Func, ParseError, Scope};
pub use jet::{Coord, DifferentialForm, FormValue, JetPoint, JetVar, Lagrangian};
