//! Isomorphism testing for chordal graphs of bounded leafage (T-graphs).
//!
//! The pipeline is: chordal primitives ([`graph`]) feed a canonical level
//! decomposition into interval fragments ([`decompose`]); fragments are
//! compared with PQ-tree based marked-set machinery ([`interval`],
//! [`setfamily`]); the permutation-group engine ([`perm`]) runs the
//! tower-of-groups computation that decides isomorphism ([`iso`]).
//! [`harness`] holds brute-force oracles and a certified random generator.

pub mod decompose;
pub mod graph;
pub mod harness;
pub mod interval;
pub mod iso;
pub mod perm;
pub mod selftest;
pub mod setfamily;

pub use graph::Graph;
pub use iso::{is_isomorphic, is_isomorphic_upto, Verdict};
pub use perm::{GeneratedGroup, Permutation};
