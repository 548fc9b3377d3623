//! Left orderings on inductive limits of amalgamated free products of
//! infinite cyclic groups.
//!
//! The chain groups `G_(m) = ⟨g_{-m},…,g_m | g_{j-1}^{k_j} = g_j^{l_j}⟩` carry
//! isolated positive cones `P_(m)`; their union `P̃` orders the limit `G̃`.
//! This crate decides equality, certified signs and comparisons in these
//! groups, replays the convexity arguments behind the density of `P̃`, and
//! searches for conjugate orderings that agree with `P̃` on a finite set.

pub mod chaingroup;
pub mod cone;
pub mod convexity;
pub mod ito;
pub mod orderprobes;
pub mod presentations;
pub mod rewriting;
pub mod words;

use thiserror::Error;

pub use words::{GenRef, Word, WordError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("spec is not invariant under a shift by {0}")]
    NotShiftInvariant(i32),
    #[error("resource exhausted: {0}")]
    Resource(String),
    #[error("rewrite system is not complete")]
    Incomplete,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("exponent arithmetic overflowed")]
    Overflow,
}
