//! Random access with signature codes, physical-layer network coding and
//! tree splitting.
//!
//! The crate is layered bottom-up:
//!
//! - [`finite_field`]: `F_M` / `F_{M^K}` arithmetic, primitive polynomials,
//!   discrete logarithms and base-field root finding.
//! - [`signature_code`]: Lindström K-out-of-M signature codebooks and the
//!   algebraic decoder for integer column sums.
//! - [`channel`]: the ideal adder channel a PLNC receiver is assumed to see.
//! - [`protocol`]: the slotted contention-resolution engine.
//! - [`analysis`]: exact expected slot counts and closed-form rate bounds.

mod arith;

pub mod analysis;
pub mod channel;
pub mod finite_field;
pub mod protocol;
pub mod signature_code;

pub use arith::{factorize, is_prime};
