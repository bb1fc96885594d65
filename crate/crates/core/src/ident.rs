use alloc::string::String;
use core::borrow::Borrow;
use core::fmt;

/// A name matching `[A-Za-z_][A-Za-z0-9_]*`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "String", into = "String"))]
pub struct Ident(String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidIdent(pub String);

impl fmt::Display for InvalidIdent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}` is not a valid identifier", self.0)
    }
}

impl Ident {
    pub fn new(text: impl Into<String>) -> Result<Self, InvalidIdent> {
        let text = text.into();
        if is_ident(&text) {
            Ok(Ident(text))
        } else {
            Err(InvalidIdent(text))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Whether `text` is a well-formed identifier.
pub fn is_ident(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl TryFrom<String> for Ident {
    type Error = InvalidIdent;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Ident::new(s)
    }
}

impl TryFrom<&str> for Ident {
    type Error = InvalidIdent;
    fn try_from(s: &str) -> Result<Self, Self::Error> {
        Ident::new(s)
    }
}

impl From<Ident> for String {
    fn from(id: Ident) -> String {
        id.0
    }
}

impl Borrow<str> for Ident {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Ident {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for Ident {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Ident {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

/// Shorthand for building identifiers from literals known to be valid.
///
/// Panics on an invalid name; intended for tests and fixed names.
pub fn id(text: &str) -> Ident {
    match Ident::new(text) {
        Ok(i) => i,
        Err(e) => panic!("{e}"),
    }
}
