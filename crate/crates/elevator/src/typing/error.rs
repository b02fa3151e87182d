use std::fmt;

use crate::frontend::Span;
use crate::subst::SubstError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    UnboundVariable,
    UnboundName,
    ModeAccessViolation,
    LinearityViolation,
    WeakeningViolation,
    KindMismatch,
    TypeMismatch,
    ContextMismatch,
    RecursionForbidden,
    DomainMismatch,
    AnnotationRequired,
    PatternMismatch,
    ElabError,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnboundVariable => "UnboundVariable",
            ErrorCode::UnboundName => "UnboundName",
            ErrorCode::ModeAccessViolation => "ModeAccessViolation",
            ErrorCode::LinearityViolation => "LinearityViolation",
            ErrorCode::WeakeningViolation => "WeakeningViolation",
            ErrorCode::KindMismatch => "KindMismatch",
            ErrorCode::TypeMismatch => "TypeMismatch",
            ErrorCode::ContextMismatch => "ContextMismatch",
            ErrorCode::RecursionForbidden => "RecursionForbidden",
            ErrorCode::DomainMismatch => "DomainMismatch",
            ErrorCode::AnnotationRequired => "AnnotationRequired",
            ErrorCode::PatternMismatch => "PatternMismatch",
            ErrorCode::ElabError => "ElabError",
        }
    }

    /// Errors in names or declarations rather than in typing proper.
    pub fn is_elaboration(self) -> bool {
        matches!(self, ErrorCode::UnboundName | ErrorCode::ElabError)
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypingError {
    pub code: ErrorCode,
    pub message: String,
    pub span: Option<Span>,
    /// The top-level definition being checked, when known.
    pub def: Option<String>,
}

impl TypingError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> TypingError {
        TypingError {
            code,
            message: message.into(),
            span: None,
            def: None,
        }
    }

    pub fn at(code: ErrorCode, span: Span, message: impl Into<String>) -> TypingError {
        TypingError {
            code,
            message: message.into(),
            span: Some(span),
            def: None,
        }
    }

    /// Attaches `span` unless a more precise one is already present.
    pub fn or_at(mut self, span: Span) -> TypingError {
        self.span.get_or_insert(span);
        self
    }

    pub fn in_def(mut self, name: &str) -> TypingError {
        self.def.get_or_insert_with(|| name.to_string());
        self
    }
}

impl fmt::Display for TypingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.def {
            Some(d) => write!(f, "{} in `{d}`: {}", self.code, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

impl std::error::Error for TypingError {}

impl From<SubstError> for TypingError {
    fn from(e: SubstError) -> TypingError {
        TypingError::new(ErrorCode::KindMismatch, format!("substitution failed: {e}"))
    }
}
