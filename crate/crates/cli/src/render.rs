//! Human and JSON views of diagnostics.

use std::collections::BTreeMap;

use crala_core::{Diagnostic, Severity};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    Never,
    Always,
}

/// Where a diagnostic points, resolved against the file text.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Location {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct DiagnosticView {
    pub code: &'static str,
    pub severity: Severity,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
}

pub fn view(d: &Diagnostic, sources: &BTreeMap<String, String>) -> DiagnosticView {
    let location = d.span.as_ref().map(|s| {
        let (line, column) = sources.get(&*s.file).map_or((0, 0), |text| s.line_col(text));
        Location { file: s.file.to_string(), line, column, start: s.start, end: s.end }
    });
    DiagnosticView { code: d.code.as_str(), severity: d.severity, message: d.message.clone(), location }
}

/// `file:line:col: error[CODE]: message`, one per line.
pub fn human(diags: &[Diagnostic], sources: &BTreeMap<String, String>, color: Color) -> String {
    let mut out = String::new();
    for d in diags {
        let v = view(d, sources);
        if let Some(l) = &v.location {
            out.push_str(&format!("{}:{}:{}: ", l.file, l.line, l.column));
        }
        let (sev, paint) = match d.severity {
            Severity::Error => ("error", "\x1b[1;31m"),
            Severity::Warning => ("warning", "\x1b[1;33m"),
        };
        match color {
            Color::Always => out.push_str(&format!("{paint}{sev}[{}]\x1b[0m: {}\n", v.code, v.message)),
            Color::Never => out.push_str(&format!("{sev}[{}]: {}\n", v.code, v.message)),
        }
    }
    out
}

pub fn counts(diags: &[Diagnostic]) -> (usize, usize) {
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
    (errors, diags.len() - errors)
}
