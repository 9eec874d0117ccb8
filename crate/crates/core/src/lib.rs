//! Dynamics of torus maps in the Dehn twist class.
//!
//! The crate works with the shear-composition family
//! `f = V ∘ H ∘ T_k`, where `T_k(x,y) = (x + k·y, y)` is a Dehn twist,
//! `H(x,y) = (x + h(y), y)` is a horizontal shear and
//! `V(x,y) = (x, y + v(x))` a vertical one, with `h` and `v` 1-periodic
//! trigonometric polynomials (`v` may carry a constant drift). Every member
//! is an area-preserving homeomorphism of the torus homotopic to the twist
//! `(x,y) ↦ (x + k·y, y)`, with explicit lifts to the cylinder and plane.
//!
//! On top of the map model the crate provides:
//!
//! * [`constants`] — the ledger of displacement bounds (`A_f`, `B_f`) and
//!   every constant derived from them, with certified upper bounds;
//! * [`rotation`] — empirical vertical rotation intervals and the rotation
//!   number of Lebesgue measure;
//! * [`basins`] — finite-horizon masks of the half-plane-confined sets and
//!   their column height profiles;
//! * [`bricks`] — translation-invariant free brick decompositions for
//!   `g = f^{n0} - (0, m0)`, shift-labeled transition graphs and the
//!   closed-chain search;
//! * [`certify`] — displacement-based certificate pipelines (interior
//!   rotation interval / bounded displacement / exactness / the combined
//!   dichotomy verdict).

pub mod basins;
pub mod bricks;
pub mod certify;
pub mod constants;
pub mod map;
pub mod rng;
pub mod rotation;

mod error;

pub use error::Error;

/// Convenient alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
