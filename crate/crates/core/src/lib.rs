//! Monomial-map decompositions of weighted Bergman kernels on Reinhardt domains.
//!
//! The pipeline starts from a non-singular integer matrix `A`, builds the deck
//! group of the monomial map `Φ_A`, splits functions into character components
//! and evaluates weighted Bergman kernels by monomial series so that the
//! resulting kernel identities can be checked numerically.

pub mod bergman;
pub mod domains;
pub mod error;
pub mod group;
pub mod identities;
pub mod intlin;
pub mod laurent;
pub mod monomial;
pub mod projection;
pub mod quadrature;
pub mod rational;

pub use error::{Error, Result};
pub use rational::Q;
