use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::model::SourceSpan;
use crate::world::InstanceWorld;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

/// A rule violation or lint finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostic {
    pub rule_id: String,
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
    pub related: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<InstanceWorld>,
}

impl Diagnostic {
    pub fn new(
        rule_id: impl Into<String>,
        severity: Severity,
        span: SourceSpan,
        message: impl Into<String>,
    ) -> Self {
        Diagnostic {
            rule_id: rule_id.into(),
            severity,
            message: message.into(),
            span,
            related: Vec::new(),
            witness: None,
        }
    }

    pub fn with_related<I, S>(mut self, related: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.related = related.into_iter().map(Into::into).collect();
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Orders rule ids as `R1 < R2 < ... < R10 < AP1 < AP2`.
fn rule_rank(id: &str) -> (u8, u32, &str) {
    let digits = id.trim_start_matches(|c: char| c.is_ascii_alphabetic());
    let prefix = &id[..id.len() - digits.len()];
    let family = match prefix {
        "R" => 0,
        "AP" => 1,
        _ => 2,
    };
    (family, digits.parse().unwrap_or(u32::MAX), id)
}

pub fn compare_diagnostics(a: &Diagnostic, b: &Diagnostic) -> Ordering {
    a.span
        .cmp(&b.span)
        .then_with(|| rule_rank(&a.rule_id).cmp(&rule_rank(&b.rule_id)))
        .then_with(|| a.related.cmp(&b.related))
        .then_with(|| a.message.cmp(&b.message))
}

pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(compare_diagnostics);
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} [{}]: {}",
            self.span, self.severity, self.rule_id, self.message
        )
    }
}
