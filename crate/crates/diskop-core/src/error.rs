//! Crate-wide error type.

use crate::config::MembershipLevel;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid block structure: {0}")]
    Structure(String),

    #[error("block structure mismatch: {0}")]
    BlockMismatch(String),

    #[error("invalid matrix: {0}")]
    Matrix(String),

    #[error("invalid group data: {0}")]
    Group(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("arity mismatch: {0}")]
    Arity(String),

    #[error("index out of range: {0}")]
    IndexRange(String),

    #[error("permutation is not a bijection")]
    NotBijective,

    #[error("domain is not invariant under subgroup element {element}")]
    DomainNotInvariant { element: String },

    #[error("recomposition does not reproduce the target at component {component}")]
    Recomposition { component: usize },

    #[error("quotient {slot} fails validation at level {level:?}")]
    QuotientValidation { slot: usize, level: MembershipLevel },

    #[error("correspondence hypothesis violated: {side} index {index} intersects nothing")]
    NoCorrespondent { side: &'static str, index: usize },

    #[error("input is not separated")]
    NotSeparated,

    #[error("input is not star-valid")]
    NotStarValid,

    #[error("malformed tree: {0}")]
    Tree(String),

    #[error("flow parameter out of range: {0}")]
    FlowRange(f64),

    #[error("flow precondition violated: {0}")]
    FlowPrecondition(String),

    #[error("exact-mode entry time is irrational: {0}")]
    IrrationalEntryTime(String),

    #[error("square root: {0}")]
    Sqrt(#[from] crate::scalar::SqrtError),

    #[error("empty common intersection in {factor} block {block}")]
    EmptyCommonIntersection { factor: &'static str, block: usize },

    #[error("no separated enclosure found for the {factor} factor")]
    NoSeparatedEnclosure { factor: &'static str },

    #[error("exact-mode common-point certificate unsupported: {0}")]
    ExactCertificateUnsupported(String),

    #[error("witness invalid: components {first} and {second} share separator cell ({row}, {col})")]
    StraddledCell {
        first: usize,
        second: usize,
        row: usize,
        col: usize,
    },

    #[error("core form {which} {index} has no unary cell")]
    EmptyLine { which: &'static str, index: usize },

    #[error("disk family does not have transitive intersections ({0})")]
    NonTransitive(String),

    #[error("config {0} is not in the shrunk class")]
    NotShrunk(usize),

    #[error("entry-time search exhausted the step cap at t = {last_t}")]
    StepCapExhausted { last_t: f64 },

    #[error("scene error at {path}: {message}")]
    Scene { path: String, message: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
