//! Textual surface syntax (`.crala` files).
//!
//! Keywords are contextual: the lexer only knows identifiers, and the parser
//! decides by position whether an identifier is a keyword. After an error the
//! parser resynchronizes at the next member keyword of the enclosing block (or
//! the next top-level keyword), so one typo does not hide later findings.

use alloc::vec::Vec;

use crate::diag::Diagnostic;
use crate::model::Document;

mod format;
mod lexer;
mod parser;

pub use format::format;
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseResult {
    pub documents: Vec<Document>,
    /// Sorted by span.
    pub diagnostics: Vec<Diagnostic>,
    /// Set when any error was reported; documents are then best-effort.
    pub partial: bool,
}
