//! Capability matchmaking: which repository entries can fill a role.
//!
//! Matching is nominal. An entry qualifies when it offers every interface of
//! the role (same name, same direction) and satisfies every constraint.
//! Candidates are ranked by how lean they are:
//!
//! ```text
//! score = (|role interfaces| + |preferred tags present|)
//!       / (|entry interfaces| + |preferred tags|)
//! ```
//!
//! Preferred tags come from the role annotation `prefer`, a comma-separated
//! list. Without preferences the score is `|role| / |entry|`, which is 1 for
//! an exact interface match. A `0/0` score counts as 1.
//!
//! Constraint keys:
//! * `os`: the entry has no OS requirement or requires exactly this OS;
//! * `variant`: `component_class` or `web_service`;
//! * `max_footprint_mb`: the entry declares a footprint no larger than this;
//! * anything else: the entry carries the tag `key=value`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::ident::Ident;
use crate::model::{ComponentRole, InterfaceRef, Variant};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RepositoryEntry {
    pub name: Ident,
    pub variant: Variant,
    pub interfaces: Vec<InterfaceRef>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub os_requirement: Option<String>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub footprint_mb: Option<u64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateEntry {
    pub name: Ident,
    /// Position of the second occurrence.
    pub index: usize,
}

impl fmt::Display for DuplicateEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "duplicate repository entry `{}`", self.name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Repository {
    entries: Vec<RepositoryEntry>,
}

impl Repository {
    pub fn new(entries: Vec<RepositoryEntry>) -> Result<Self, DuplicateEntry> {
        let mut seen = BTreeSet::new();
        for (index, e) in entries.iter().enumerate() {
            if !seen.insert(e.name.as_str()) {
                return Err(DuplicateEntry { name: e.name.clone(), index });
            }
        }
        Ok(Repository { entries })
    }

    pub fn entries(&self) -> &[RepositoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&RepositoryEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// A rational score in `[0, 1]`.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Score {
    pub numerator: u64,
    pub denominator: u64,
}

impl Score {
    pub const ONE: Score = Score { numerator: 1, denominator: 1 };

    fn new(numerator: u64, denominator: u64) -> Self {
        if denominator == 0 {
            Score::ONE
        } else {
            Score { numerator, denominator }
        }
    }

    pub fn as_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        (u128::from(self.numerator) * u128::from(other.denominator))
            .cmp(&(u128::from(other.numerator) * u128::from(self.denominator)))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Candidate {
    pub entry: Ident,
    pub variant: Variant,
    pub score: Score,
    /// Role interfaces the entry offers (all of them, for a candidate).
    pub matched: Vec<InterfaceRef>,
    /// Interfaces the entry offers beyond the role.
    pub surplus: Vec<InterfaceRef>,
    pub preferred_tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Rejection {
    pub entry: Ident,
    pub missing: Vec<InterfaceRef>,
    /// Constraint keys the entry violates.
    pub failed_constraints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MatchResult {
    pub role: Ident,
    /// Descending score, then ascending name.
    pub candidates: Vec<Candidate>,
    /// In repository order.
    pub rejected: Vec<Rejection>,
}

pub type Constraints = BTreeMap<String, String>;

fn satisfies(entry: &RepositoryEntry, key: &str, value: &str) -> bool {
    match key {
        "os" => entry.os_requirement.as_deref().is_none_or(|os| os == value),
        "variant" => entry.variant.as_str() == value,
        "max_footprint_mb" => match (entry.footprint_mb, value.parse::<u64>()) {
            (Some(have), Ok(limit)) => have <= limit,
            _ => false,
        },
        _ => entry.tags.contains(&format!("{key}={value}")),
    }
}

fn preferred_tags(role: &ComponentRole) -> Vec<&str> {
    let mut tags: Vec<&str> = role
        .annotations
        .get("prefer")
        .map(|s| s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect())
        .unwrap_or_default();
    tags.sort_unstable();
    tags.dedup();
    tags
}

pub fn match_role(role: &ComponentRole, repo: &Repository, constraints: &Constraints) -> MatchResult {
    let prefer = preferred_tags(role);
    let mut candidates = Vec::new();
    let mut rejected = Vec::new();

    for entry in repo.entries() {
        let missing: Vec<InterfaceRef> =
            role.interfaces.iter().filter(|i| !entry.interfaces.contains(i)).cloned().collect();
        let failed: Vec<String> =
            constraints.iter().filter(|(k, v)| !satisfies(entry, k, v)).map(|(k, _)| k.clone()).collect();
        if !missing.is_empty() || !failed.is_empty() {
            rejected.push(Rejection { entry: entry.name.clone(), missing, failed_constraints: failed });
            continue;
        }
        let hits: Vec<String> = prefer.iter().filter(|t| entry.tags.contains(**t)).map(|t| String::from(*t)).collect();
        let score = Score::new(
            (role.interfaces.len() + hits.len()) as u64,
            (entry.interfaces.len() + prefer.len()) as u64,
        );
        candidates.push(Candidate {
            entry: entry.name.clone(),
            variant: entry.variant,
            score,
            matched: role.interfaces.clone(),
            surplus: entry.interfaces.iter().filter(|i| !role.interfaces.contains(i)).cloned().collect(),
            preferred_tags: hits,
        });
    }
    candidates.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.entry.cmp(&b.entry)));
    MatchResult { role: role.name.clone(), candidates, rejected }
}
