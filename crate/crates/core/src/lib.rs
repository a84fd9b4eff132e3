//! Exact computations in the elementary orthogonal group of a quadratic
//! space `Q ⟂ H(P)` over a commutative ring with 2 invertible.

pub mod checks;
pub mod cli;
pub mod eichler;
pub mod fdg;
pub mod grouplab;
pub mod error;
pub mod matrix;
pub mod normalizer;
pub mod quadspace;
pub mod relations;
pub mod ring;
pub mod transvect;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use quadspace::{OrthMatrix, QuadSetup};
pub use ring::{Rationals, Ring, RingSpec, ZMod};

/// Quadratic spaces over the rationals.
pub type RationalSetup = QuadSetup<Rationals>;
/// Quadratic spaces over `Z/nZ`.
pub type ZModSetup = QuadSetup<ZMod>;
