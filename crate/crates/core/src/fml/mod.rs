//! FML (IEEE 1855 subset) knowledge/rule base model, parser, serializer and validator.

mod model;
mod parse;
mod serialize;
mod validate;

pub use model::*;
pub use parse::parse_fml;
pub use serialize::{format_real, serialize_fml};
pub use validate::{first_coverage_gap, validate_controller, Violation, KNOWN_DOMAINS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("malformed XML at line {line}: {message}")]
    Xml { line: usize, message: String },
    #[error("<{element}> at line {line} is missing required attribute {attribute:?}")]
    MissingAttribute {
        element: String,
        attribute: String,
        line: usize,
    },
    #[error("<{element}> at line {line}: invalid {attribute}={value:?} ({reason})")]
    InvalidAttribute {
        element: String,
        attribute: String,
        value: String,
        line: usize,
        reason: String,
    },
    #[error(
        "unsupported membership shape <{element}> at line {line}; only TrapezoidShape is supported"
    )]
    UnsupportedShape { element: String, line: usize },
    #[error("unexpected element <{element}> inside <{parent}> at line {line}")]
    UnexpectedElement {
        element: String,
        parent: String,
        line: usize,
    },
    #[error("<{element}> at line {line} has no <{child}> child")]
    MissingElement {
        element: String,
        child: String,
        line: usize,
    },
}
