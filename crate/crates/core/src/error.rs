use thiserror::Error;

use crate::combinatorics::TripleIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: value {value} of `{key}` is outside [0, 1]")]
    OutOfRange { line: usize, key: String, value: f64 },
    #[error("line {line}: `{key}` = {value} conflicts with its mirror `{mirror}` = {mirror_value}")]
    MirrorConflict {
        line: usize,
        key: String,
        value: f64,
        mirror: String,
        mirror_value: f64,
    },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("{triple} is not a member of {set}")]
    NotInSet { triple: TripleIndex, set: &'static str },
    #[error("{0:?} is not a permutation of the three roles")]
    InvalidPermutation([usize; 3]),
    #[error("distribution is invalid: {0}")]
    InvalidDistribution(String),
    #[error("conditions not satisfied: {}", .0.join(", "))]
    ConditionsViolated(Vec<String>),
    #[error("degenerate certificate: x-exponent {0} is not positive")]
    DegenerateCertificate(f64),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}
