use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Position of a run of characters in source text. Line and column are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    pub len: usize,
}

impl Span {
    pub fn new(line: usize, column: usize, len: usize) -> Self {
        Span { line, column, len }
    }
}

/// A positioned message. Diagnostics produced from an in-memory scene have no
/// span until a [`SourceMap`] locates them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Option<Span>,
    /// Indices of the rules the diagnostic cites.
    #[serde(skip)]
    pub rules: Vec<usize>,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            span: None,
            rules: Vec::new(),
        }
    }

    pub fn warning(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(message)
        }
    }

    pub fn at(mut self, span: Span) -> Self {
        self.span = Some(span);
        self
    }

    pub fn citing(mut self, rules: Vec<usize>) -> Self {
        self.rules = rules;
        self
    }

    pub fn line(&self) -> Option<usize> {
        self.span.map(|s| s.line)
    }

    pub fn column(&self) -> Option<usize> {
        self.span.map(|s| s.column)
    }

    pub fn span_length(&self) -> usize {
        self.span.map_or(0, |s| s.len)
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `file:line:col: error: message`, optionally with ANSI color.
    pub fn render(&self, file: &str, color: bool) -> String {
        let (sev, code) = match self.severity {
            Severity::Error => ("error", "31"),
            Severity::Warning => ("warning", "33"),
        };
        let sev = if color {
            format!("\x1b[1;{code}m{sev}\x1b[0m")
        } else {
            sev.to_string()
        };
        match self.span {
            Some(s) => format!("{file}:{}:{}: {sev}: {}", s.line, s.column, self.message),
            None => format!("{file}: {sev}: {}", self.message),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{}:{}: {}", s.line, s.column, self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Source positions of a parsed scene's rules, kept apart from the scene so
/// that structural equality ignores layout.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    pub rules: Vec<Span>,
}

impl SourceMap {
    /// Point unpositioned diagnostics at the first rule they cite.
    pub fn locate(&self, diagnostics: &mut [Diagnostic]) {
        for d in diagnostics.iter_mut() {
            if d.span.is_none() {
                d.span = d.rules.first().and_then(|i| self.rules.get(*i)).copied();
            }
        }
    }
}
