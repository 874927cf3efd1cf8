//! Source positions and compiler diagnostics.
//!
//! Every rejection the compiler can produce carries a [`Span`] pointing at
//! the offending source text, so that a failed compile is always actionable
//! from the command line. Internal invariant violations (states the pipeline
//! is supposed to make unreachable) use [`Error::internal`] and are bugs.

use std::fmt;

/// A half-open byte range in the source text plus its line/column start.
///
/// Lines and columns are 1-based, columns count characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub len: u32,
}

impl Span {
    pub fn new(line: u32, col: u32, len: u32) -> Self {
        Span { line, col, len }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Broad classification of a rejection, used for exit codes and testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Lexical or syntactic error.
    Parse,
    /// Name resolution: unknown or doubly defined identifiers.
    Name,
    /// Simple type error (int/bool/tuple structure).
    Type,
    /// Instantaneous dependency cycle.
    Causality,
    /// Clock unification failure or underconstrained clocks.
    Clock,
    /// Program shape the task extraction cannot translate.
    Extraction,
    /// The deadline calculus produced an unschedulable word.
    Infeasible,
    /// Arithmetic guard tripped (hyperperiod or tick blow-up).
    Overflow,
    /// Malformed command-line input or input file: bad flag combination,
    /// unreadable file, or a task set file that does not parse.
    Usage,
    /// A pipeline invariant broke; always a bug in the compiler itself.
    Internal,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorKind::Parse => "parse",
            ErrorKind::Name => "name",
            ErrorKind::Type => "type",
            ErrorKind::Causality => "causality",
            ErrorKind::Clock => "clock",
            ErrorKind::Extraction => "extraction",
            ErrorKind::Infeasible => "infeasible",
            ErrorKind::Overflow => "overflow",
            ErrorKind::Usage => "usage",
            ErrorKind::Internal => "internal",
        };
        f.write_str(s)
    }
}

/// A compile-time rejection with an optional source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Error {
    pub kind: ErrorKind,
    pub message: String,
    pub span: Option<Span>,
}

impl Error {
    pub fn new(kind: ErrorKind, span: Span, message: impl Into<String>) -> Self {
        Error {
            kind,
            message: message.into(),
            span: Some(span),
        }
    }

    pub fn spanless(kind: ErrorKind, message: impl Into<String>) -> Self {
        Error {
            kind,
            message: message.into(),
            span: None,
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::spanless(ErrorKind::Internal, message)
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(span) => write!(f, "{}: error[{}]: {}", span, self.kind, self.message),
            None => write!(f, "error[{}]: {}", self.kind, self.message),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
