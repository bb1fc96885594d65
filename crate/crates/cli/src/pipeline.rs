//! The full check: workspace links, per-level rules and every declared
//! refinement.

use crala_core::refine::{check_assembly_deploys_config, check_config_refines_spec, RefinementReport};
use crala_core::validate::{validate_assembly, validate_cloud, validate_configuration, validate_specification};
use crala_core::workspace::{Link, LinkKind};
use crala_core::{build_workspace, diag, Diagnostic, Document, Workspace};

#[derive(Debug)]
pub struct CheckReport {
    pub workspace: Workspace,
    /// Parse, workspace, rule and refinement diagnostics, sorted by file and
    /// position with duplicates removed.
    pub diagnostics: Vec<Diagnostic>,
    pub refinements: Vec<(Link, RefinementReport)>,
}

impl CheckReport {
    pub fn has_errors(&self) -> bool {
        diag::has_errors(&self.diagnostics)
    }
}

pub fn check(documents: Vec<Document>, parse_diagnostics: &[Diagnostic]) -> CheckReport {
    let ws = build_workspace(documents);
    let mut diagnostics: Vec<Diagnostic> = parse_diagnostics.to_vec();
    diagnostics.extend(ws.diagnostics().iter().cloned());

    for spec in ws.specifications() {
        diagnostics.extend(validate_specification(spec));
    }
    for config in ws.configurations() {
        diagnostics.extend(validate_configuration(config));
    }
    for ass in ws.assemblies() {
        // A dangling or misdirected `deploys` is already reported.
        if let Some(config) = ws.configuration(ass.deploys.as_str()) {
            diagnostics.extend(validate_assembly(ass, config));
        }
    }
    for cloud in ws.clouds() {
        diagnostics.extend(validate_cloud(cloud));
    }

    let mut refinements = Vec::new();
    for link in ws.links() {
        let report = match link.kind {
            LinkKind::Implements => {
                let (Some(config), Some(spec)) =
                    (ws.configuration(link.child.as_str()), ws.specification(link.parent.as_str()))
                else {
                    continue;
                };
                check_config_refines_spec(config, spec)
            }
            LinkKind::Deploys => {
                let (Some(ass), Some(config)) =
                    (ws.assembly(link.child.as_str()), ws.configuration(link.parent.as_str()))
                else {
                    continue;
                };
                check_assembly_deploys_config(ass, config)
            }
        };
        // Links come from the workspace, so the documents always match.
        if let Ok(report) = report {
            diagnostics.extend(report.diagnostics.iter().cloned());
            refinements.push((link.clone(), report));
        }
    }

    CheckReport { diagnostics: diag::normalize(diagnostics), workspace: ws, refinements }
}
