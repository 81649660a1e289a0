//! Finite-quotient machinery for groups acting on spherically homogeneous
//! rooted trees.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! its inputs: tree addressing ([`tree`]), finite-depth automorphisms
//! ([`portrait`]), wreath-recursive group definitions ([`recursion`]), realized
//! quotients `π_k(G)` with their stabilizer subgroups ([`quotient`]), Haar
//! measure censuses on those quotients ([`measure`]) and the built-in groups
//! ([`catalog`]).
//!
//! Letters are 0-based everywhere, and a product `gh` acts right to left:
//! `(gh)(v) = g(h(v))`.
#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod catalog;
pub mod error;
pub mod measure;
pub mod perm;
pub mod portrait;
pub mod quotient;
pub mod recursion;
pub mod ring;
pub mod stabchain;
pub mod tree;

pub use error::{Error, ParseError, Result};
pub use measure::Rational;
pub use perm::Perm;
pub use portrait::Portrait;
pub use quotient::{FiniteQuotient, Subgroup};
pub use recursion::{GroupDef, Projector, Word};
pub use tree::{TreeShape, Vertex};

/// Element cap used when a caller does not supply one.
pub const DEFAULT_ELEMENT_CAP: u64 = 10_000_000;

/// Seed used when a caller does not supply one.
pub const DEFAULT_SEED: u64 = 0;
