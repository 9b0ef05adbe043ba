use thiserror::Error;

/// Source location, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RtlError {
    #[error("syntax error at {span}: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("combinational loop: {}", .0.join(" -> "))]
    CombinationalLoop(Vec<String>),
    #[error("width mismatch: {0}")]
    WidthMismatch(String),
    #[error("net `{0}` has more than one driver")]
    MultipleDrivers(String),
    #[error("net `{0}` is never driven")]
    Undriven(String),
}

impl RtlError {
    pub(crate) fn syntax(span: Span, msg: impl Into<String>) -> Self {
        RtlError::Syntax {
            span,
            msg: msg.into(),
        }
    }

    /// Stable error-code name, used by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            RtlError::Syntax { .. } => "SyntaxError",
            RtlError::CombinationalLoop(_) => "CombinationalLoop",
            RtlError::WidthMismatch(_) => "WidthMismatch",
            RtlError::MultipleDrivers(_) => "MultipleDrivers",
            RtlError::Undriven(_) => "Undriven",
        }
    }
}

pub type Result<T> = std::result::Result<T, RtlError>;
