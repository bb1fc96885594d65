use alloc::string::String;
use alloc::vec::Vec;

use crate::diag::{Code, Diagnostic};
use crate::span::Span;
use alloc::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Int(u64),
    LBrace,
    RBrace,
    Colon,
    Arrow,
    Tilde,
    Dot,
    Eq,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        use alloc::format;
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Int(n) => format!("number {n}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

/// Splits `src` into tokens. Bad characters are reported and skipped, so the
/// token stream is always usable; it always ends with [`Tok::Eof`].
pub(crate) fn lex(src: &str, file: &Arc<str>, diags: &mut Vec<Diagnostic>) -> Vec<Token> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let span = |s, e| Some(Span::new(file.clone(), s, e));

    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'{' | b'}' | b':' | b'~' | b'.' | b'=' => {
                i += 1;
                let tok = match c {
                    b'{' => Tok::LBrace,
                    b'}' => Tok::RBrace,
                    b':' => Tok::Colon,
                    b'~' => Tok::Tilde,
                    b'.' => Tok::Dot,
                    _ => Tok::Eq,
                };
                out.push(Token { tok, start, end: i });
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 2;
                out.push(Token { tok: Tok::Arrow, start, end: i });
            }
            b'"' => {
                i += 1;
                let mut text = String::new();
                let mut closed = false;
                while i < bytes.len() {
                    match bytes[i] {
                        b'"' => {
                            i += 1;
                            closed = true;
                            break;
                        }
                        b'\n' => break,
                        b'\\' if i + 1 < bytes.len() => {
                            let esc = bytes[i + 1];
                            match esc {
                                b'"' => text.push('"'),
                                b'\\' => text.push('\\'),
                                b'n' => text.push('\n'),
                                b't' => text.push('\t'),
                                _ => diags.push(Diagnostic::new(
                                    Code::Lex01,
                                    "unknown escape sequence in string",
                                    span(i, i + 2),
                                )),
                            }
                            i += 2;
                        }
                        _ => {
                            let ch = src[i..].chars().next().unwrap_or('\u{fffd}');
                            text.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                if !closed {
                    diags.push(Diagnostic::new(Code::Lex01, "unterminated string literal", span(start, i)));
                }
                out.push(Token { tok: Tok::Str(text), start, end: i });
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                match src[start..i].parse::<u64>() {
                    Ok(n) => out.push(Token { tok: Tok::Int(n), start, end: i }),
                    Err(_) => {
                        diags.push(Diagnostic::new(Code::Lex01, "number out of range", span(start, i)));
                        out.push(Token { tok: Tok::Int(u64::MAX), start, end: i });
                    }
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(src[start..i].into()), start, end: i });
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('\u{fffd}');
                i += ch.len_utf8();
                diags.push(Diagnostic::new(
                    Code::Lex01,
                    alloc::format!("unexpected character {ch:?}"),
                    span(start, i),
                ));
            }
        }
    }
    out.push(Token { tok: Tok::Eof, start: src.len(), end: src.len() });
    out
}
