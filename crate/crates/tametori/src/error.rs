//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Cartan matrix: {0}")]
    InvalidCartan(String),
    #[error("invalid cocharacter lattice: {0}")]
    InvalidLattice(String),
    #[error("residue characteristic {p} divides the extended Weyl group order {order}")]
    TamenessViolation { p: u64, order: u64 },
    #[error("diagram twists incompatible: {0}")]
    IncompatibleTwists(String),
    #[error("unsupported twist: {0}")]
    UnsupportedTwist(String),
    #[error("unsupported type: {0}")]
    UnsupportedType(String),
    #[error("Weyl group larger than the configured bound {bound}")]
    GroupTooLarge { bound: usize },
    #[error("cokernel is infinite")]
    InfiniteCokernel,
    #[error("endomorphism is not elliptic: det(m - 1) = 0")]
    NonElliptic,
    #[error("endomorphism does not respect the relations of the group")]
    IllDefinedEndo,
    #[error("matrix is not of finite multiplicative order")]
    NonTorsion,
    #[error("eigenvalue multiset is not closed under Galois conjugation")]
    NotGaloisStable,
    #[error("sign pattern is not realized by any coweight mod 2: structure constant corruption")]
    DecodingFailure,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("no candidate cocharacter matches the eigenvalue profile")]
    NoMatch,
    #[error("eigenvalue matching is ambiguous: candidates {0:?}")]
    AmbiguousMatch(Vec<String>),
    #[error("class is not stable under the Frobenius norm map: the orbit contains no rational torus")]
    NotDefinedOverK,
    #[error("no solution to the Frobenius descent equation")]
    NoSolution,
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("internal inconsistency: Frobenius normalizer equation has no solution")]
    NFNotFound,
    #[error("bad isogeny kernel: {0}")]
    BadKernel(String),
    #[error("consistency check failed: {0}")]
    CheckFailed(String),
    #[error("relative apartment rank {0} exceeds 2, cannot draw")]
    RankTooLarge(usize),
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for input errors, 1 for failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) => 2,
            Error::InvalidCartan(_)
            | Error::InvalidLattice(_)
            | Error::TamenessViolation { .. }
            | Error::IncompatibleTwists(_)
            | Error::UnsupportedType(_) => 2,
            _ => 1,
        }
    }
}
