//! Parsers for the explicit-state model format and the property grammar,
//! plus formula normalisation and model/formula cross-validation.

pub mod model;
pub mod property;

pub use model::{parse_model, print_model, ModelSpec};
pub use property::{normalize, parse_property, print_property, validate, Formula};

/// A position in a source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A parse or validation error with a source location.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("{pos}: {message}")]
pub struct LangError {
    pub pos: Pos,
    pub message: String,
}

impl LangError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        LangError {
            pos,
            message: message.into(),
        }
    }
}
