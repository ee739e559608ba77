//! Text grammar for transseries and germs, plus the serializers.
//!
//! Grammar: `x`, `l` (= -1/log x), `l2` (= l(l)), `u` (= 1/l = -log x),
//! `+ - * /`, parentheses, `^` with a rational exponent, and the functions
//! `log`, `exp`, `sqrt` and `flow`. A literal exponent `p/q` binds as one
//! number, so `x^1/2` is the square root of x.

mod expr;
mod germ;
mod lexer;
mod machine;

use std::fmt;

use thiserror::Error;

pub use expr::{parse_expr, BinOp, Expr, Func, SeriesCtx, Var};
pub use germ::{parse_dulac, parse_germ_file, to_germ_file, DulacGermSpec, NumericSource};
pub use machine::{parse_machine, serialize, Format};

use crate::series::{SeriesError, Transseries, XExp};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("logarithm depth above 2 is not supported ({0})")]
    LogDepth(String),
    #[error("exponent is not a rational constant")]
    NonRationalExponent,
    #[error("not parabolic: {0}")]
    NotParabolic(String),
    #[error("not a Dulac series: {0}")]
    NotDulac(String),
    #[error("expression has no finite expansion; give a truncation order")]
    NeedsTruncation,
    #[error("generator: {0}")]
    Generator(String),
    #[error(transparent)]
    Series(SeriesError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input, when the error has a location.
    pub pos: Option<usize>,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(pos: usize, kind: ParseErrorKind) -> Self {
        ParseError { pos: Some(pos), kind }
    }

    pub(crate) fn kind(kind: ParseErrorKind) -> Self {
        ParseError { pos: None, kind }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "at column {}: {}", p + 1, self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl std::error::Error for ParseError {}

/// Parse a transseries with a finite, exact expansion.
pub fn parse_transseries(text: &str) -> Result<Transseries, ParseError> {
    parse_expr(text)?.to_series(SeriesCtx::exact())
}

/// Parse and expand through x^n with `m` l-terms per block.
pub fn parse_transseries_truncated(text: &str, n: XExp, m: u32) -> Result<Transseries, ParseError> {
    parse_expr(text)?.to_series(SeriesCtx::truncated(n, m))
}
