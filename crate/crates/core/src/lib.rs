//! Core of the CRALA toolchain: the three-level architecture model
//! (specification, configuration, assembly) for cloud robotic systems,
//! together with everything that can be computed on it without touching
//! the filesystem.
//!
//! * [`syntax`] parses `.crala` text into documents and formats them back.
//! * [`workspace`] links documents across levels and resolves qualified names.
//! * [`validate`] enforces the per-level rule sets.
//! * [`refine`] checks that a configuration implements its specification and
//!   that an assembly deploys its configuration, and builds the variability
//!   graph.
//! * [`matchmaker`] searches a component repository for candidates that can
//!   fill a component role.
//! * [`planner`] places virtual machines onto physical machines, simulates
//!   failures and computes deployment metrics.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod diag;
pub mod ident;
pub mod matchmaker;
pub mod model;
pub mod planner;
pub mod refine;
pub mod span;
pub mod syntax;
pub mod validate;
pub mod workspace;

pub use diag::{Code, Diagnostic, Severity};
pub use ident::Ident;
pub use model::*;
pub use span::Span;
pub use workspace::{build_workspace, Workspace};
