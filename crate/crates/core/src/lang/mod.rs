//! The specification language: syntax, pretty printing, name resolution and
//! actor compilation.

pub mod ast;
mod compile;
pub(crate) mod lexer;
mod parser;
pub mod pretty;
mod resolve;

use thiserror::Error;

pub use compile::compile_actor;
pub use parser::parse_spec;
pub use pretty::pretty;
pub use resolve::{resolve, PRELUDE_CODECS};

use crate::pattern::PatternError;
use crate::spec::ResolvedSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("{context}: unknown {kind} `{name}`")]
    UnknownName {
        kind: &'static str,
        name: String,
        context: String,
    },
    #[error("duplicate {kind} `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("{context}: `{name}` depends on itself")]
    CyclicDependency { context: String, name: String },
    #[error("{record}.{field}: refers to `{name}`, which is declared later")]
    ForwardReference {
        record: String,
        field: String,
        name: String,
    },
    #[error("{context}: {message}")]
    InvalidArgument { context: String, message: String },
    #[error("{context}: codec {codec} cannot encode {ty}")]
    CodecMismatch {
        context: String,
        codec: String,
        ty: String,
    },
    #[error("{context}: {source}")]
    Pattern {
        context: String,
        source: PatternError,
    },
    #[error("actor {actor}: {message}")]
    InitialState { actor: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("resolution error: {0}")]
    Resolve(#[from] ResolveError),
}

/// Parses and resolves a specification source.
pub fn load_spec(text: &str) -> Result<ResolvedSpec, SpecError> {
    Ok(resolve(&parse_spec(text)?)?)
}
