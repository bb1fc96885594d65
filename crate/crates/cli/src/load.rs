//! Reading `.crala` files from disk.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crala_core::syntax::parse;
use crala_core::{diag, Diagnostic, Document};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("cannot read `{}`: {source}", path.display())]
pub struct LoadError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// Parsed contents of a set of files. Sources are kept so diagnostics can be
/// rendered with line and column numbers.
#[derive(Debug, Default)]
pub struct Loaded {
    pub sources: BTreeMap<String, String>,
    pub documents: Vec<Document>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Loaded {
    pub fn has_errors(&self) -> bool {
        diag::has_errors(&self.diagnostics)
    }

    /// Parses in-memory sources, keyed by the label used in spans.
    pub fn from_sources<'a>(sources: impl IntoIterator<Item = (&'a str, &'a str)>) -> Loaded {
        let mut loaded = Loaded::default();
        for (label, text) in sources {
            loaded.add(label.to_string(), text.to_string());
        }
        loaded.diagnostics = diag::normalize(std::mem::take(&mut loaded.diagnostics));
        loaded
    }

    fn add(&mut self, label: String, text: String) {
        let result = parse(&text, &label);
        self.documents.extend(result.documents);
        self.diagnostics.extend(result.diagnostics);
        self.sources.insert(label, text);
    }
}

pub fn label(path: &Path) -> String {
    path.display().to_string()
}

pub fn load_files(paths: &[PathBuf]) -> Result<Loaded, LoadError> {
    let mut loaded = Loaded::default();
    for path in paths {
        let text = fs::read_to_string(path).map_err(|source| LoadError { path: path.clone(), source })?;
        loaded.add(label(path), text);
    }
    loaded.diagnostics = diag::normalize(std::mem::take(&mut loaded.diagnostics));
    Ok(loaded)
}
