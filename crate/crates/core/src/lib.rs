//! Resource theory of non-Markovianity for tripartite states shared by
//! Alice, Bob and Eve.
//!
//! The crate provides labeled dense tensors ([`tensor`]), quantum channels and
//! reversibility checks ([`channels`]), entropic quantities ([`entropy`]),
//! Markov-chain tests and Petz recovery ([`markov`]), the non-Markovianity
//! monotones with seeded variational estimators ([`monotones`]), the free
//! operation classes and protocol runner ([`freeops`]), the named state
//! catalog ([`catalog`]), the classical analogue ([`classical`]) and the
//! reporting suites used by the command line tool ([`suites`]).
//!
//! Conventions used throughout: logarithms are base 2 (entropies in bits),
//! composite indices are row-major with the leftmost label slowest, and a
//! Choi matrix is normalized to unit trace.

pub mod catalog;
pub mod channels;
pub mod classical;
pub mod entropy;
pub mod error;
pub mod freeops;
pub mod markov;
pub mod monotones;
mod optimize;
pub mod suites;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{CMatrix, CVector, Complex64, MultipartiteState, PureState};
