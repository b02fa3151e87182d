//! Concrete syntax: lexing, parsing and printing. Elaboration of parsed
//! modules into core lives in [`crate::typing`].

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;

use std::fmt;

pub use ast::Span;
pub use parser::{parse_expr, parse_kind, parse_module, parse_type};
pub use pretty::{print_kind, print_term, print_type};

/// Data types available in every module.
pub const PRELUDE: &str = "\
data Nat {m} = Zero | Succ (Nat{m})
data List {m} (a : Type@m) = Nil | Cons a (List{m} a)
";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "expected ")?;
        match self.expected.as_slice() {
            [] => write!(f, "something else")?,
            [one] => write!(f, "{one}")?,
            [init @ .., last] => write!(f, "{} or {last}", init.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for ParseError {}
