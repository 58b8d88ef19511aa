//! Classification of tame totally ramified maximal tori of a reductive
//! p-adic group at the level of root data and finite group theory.
//!
//! The library enumerates tame elliptic twisted conjugacy classes of a Weyl
//! group, assigns each class its unique point in the fundamental alcove
//! (normalized Kac coordinates) by eigenvalue matching in the adjoint
//! representation, and computes, for each class, the number of stable
//! classes, rational classes, and rational embeddings of the corresponding
//! torus, including transfer of those counts across central isogenies.
//!
//! Everything is exact: integer and rational arithmetic only, Smith normal
//! forms for finite abelian quotients, and brute-force orbit enumeration on
//! finite twisted normalizer groups.

pub mod chevalley;
pub mod classify;
pub mod cli;
pub mod error;
pub mod intlin;
pub mod kac;
pub mod mat;
pub mod rootdata;
pub mod selftest;
pub mod weyl;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
