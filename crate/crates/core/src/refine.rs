//! Cross-level conformance and the variability graph.
//!
//! A configuration refines its specification when every role and concept
//! robot is realized, realizations expose at least the abstract interfaces
//! and device kinds, and the specification's links survive. An assembly
//! deploys its configuration when every VM is placed and every
//! implementation is instantiated.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::diag::{self, Code, Diagnostic};
use crate::ident::Ident;
use crate::model::*;
use crate::workspace::{Link, Workspace};

/// `abstract_element` is realized (or deployed) by `concrete`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Binding {
    #[cfg_attr(feature = "serde", serde(rename = "abstract"))]
    pub abstract_element: String,
    pub concrete: String,
}

impl Binding {
    fn new(a: impl fmt::Display, c: impl fmt::Display) -> Self {
        Binding { abstract_element: format!("{a}"), concrete: format!("{c}") }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RefinementReport {
    pub ok: bool,
    pub bindings: Vec<Binding>,
    pub diagnostics: Vec<Diagnostic>,
}

impl RefinementReport {
    fn finish(bindings: Vec<Binding>, diagnostics: Vec<Diagnostic>) -> Self {
        let diagnostics = diag::normalize(diagnostics);
        RefinementReport { ok: !diag::has_errors(&diagnostics), bindings, diagnostics }
    }
}

/// The lower document does not name the upper one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotLinked {
    pub document: Ident,
    pub names: Ident,
    pub given: Ident,
}

impl fmt::Display for NotLinked {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}` refers to `{}`, not `{}`", self.document, self.names, self.given)
    }
}

fn realizers<'a>(config: &'a Configuration, role: &'a Ident) -> impl Iterator<Item = &'a ComponentImplementation> + 'a {
    config.impls.iter().filter(move |i| &i.realizes == role)
}

fn kinds(devs: &[Device]) -> BTreeSet<&str> {
    devs.iter().map(|d| d.kind.as_str()).collect()
}

pub fn check_config_refines_spec(config: &Configuration, spec: &Specification) -> Result<RefinementReport, NotLinked> {
    if config.implements != spec.name {
        return Err(NotLinked { document: config.name.clone(), names: config.implements.clone(), given: spec.name.clone() });
    }
    let mut diags = Vec::new();
    let mut bindings = Vec::new();

    for role in &spec.roles {
        let mut any = false;
        for imp in realizers(config, &role.name) {
            any = true;
            bindings.push(Binding::new(&role.name, &imp.name));
            let missing: Vec<String> = role
                .interfaces
                .iter()
                .filter(|i| !imp.interfaces.contains(i))
                .map(|i| format!("{i}"))
                .collect();
            if !missing.is_empty() {
                diags.push(Diagnostic::new(
                    Code::Ref02,
                    format!("`{}` realizes `{}` but lacks: {}", imp.name, role.name, missing.join(", ")),
                    imp.span.clone(),
                ));
            }
        }
        if !any {
            diags.push(Diagnostic::new(
                Code::Ref01,
                format!("role `{}` of `{}` has no implementation in `{}`", role.name, spec.name, config.name),
                config.span.clone(),
            ));
        }
    }

    for robot in &spec.robots {
        let mut any = false;
        for model in config.robots.iter().filter(|r| r.realizes == robot.name) {
            any = true;
            bindings.push(Binding::new(&robot.name, &model.name));
            let have_s = kinds(&model.sensors);
            let have_a = kinds(&model.actuators);
            let mut missing: Vec<String> = kinds(&robot.sensors)
                .difference(&have_s)
                .map(|k| format!("sensor {k}"))
                .collect();
            missing.extend(kinds(&robot.actuators).difference(&have_a).map(|k| format!("actuator {k}")));
            if !missing.is_empty() {
                diags.push(Diagnostic::new(
                    Code::Ref03,
                    format!("robot `{}` realizes `{}` but lacks {}", model.name, robot.name, missing.join(", ")),
                    model.span.clone(),
                ));
            }
        }
        if !any {
            diags.push(Diagnostic::new(
                Code::Ref03,
                format!("concept robot `{}` has no robot model in `{}`", robot.name, config.name),
                config.span.clone(),
            ));
        }
    }

    for c in &spec.connections {
        let (Some(a), Some(b)) = (single_kind(spec, &c.from), single_kind(spec, &c.to)) else { continue };
        match Flavor::classify(c.arrow, a, b) {
            Some(Flavor::AbstractRobot) => {
                let (role, robot) = if a == EndKind::Role { (&c.from, &c.to) } else { (&c.to, &c.from) };
                let role = &role.path[0];
                let robot = &robot.path[0];
                let models: Vec<&Ident> = config.robots.iter().filter(|r| &r.realizes == robot).map(|r| &r.name).collect();
                let impls: Vec<&Ident> = realizers(config, role).map(|i| &i.name).collect();
                if models.is_empty() || impls.is_empty() {
                    continue;
                }
                let reached = reachable_from_robots(config, &models);
                if !impls.iter().any(|i| reached.contains(i.as_str())) {
                    diags.push(Diagnostic::new(
                        Code::Ref04,
                        format!(
                            "`connect {c}` is not realized: no implementation of `{role}` runs on or is connected to a robot realizing `{robot}`"
                        ),
                        config.span.clone(),
                    ));
                }
            }
            Some(Flavor::RoleRole) => {
                let ia: Vec<&Ident> = realizers(config, &c.from.path[0]).map(|i| &i.name).collect();
                let ib: Vec<&Ident> = realizers(config, &c.to.path[0]).map(|i| &i.name).collect();
                if ia.is_empty() || ib.is_empty() {
                    continue;
                }
                let linked = config.connections.iter().any(|k| {
                    let (Some(x), Some(y)) = (impl_end(config, &k.from), impl_end(config, &k.to)) else { return false };
                    (ia.contains(&x) && ib.contains(&y)) || (ib.contains(&x) && ia.contains(&y))
                });
                if !linked {
                    diags.push(Diagnostic::new(
                        Code::Ref05,
                        format!("`connect {c}` has no counterpart between their implementations in `{}`", config.name),
                        config.span.clone(),
                    ));
                }
            }
            _ => {}
        }
    }

    Ok(RefinementReport::finish(bindings, diags))
}

fn single_kind(spec: &Specification, end: &ConnectionEnd) -> Option<EndKind> {
    match spec.resolve_end(end).as_slice() {
        [k] => Some(*k),
        _ => None,
    }
}

fn impl_end<'a>(config: &'a Configuration, end: &ConnectionEnd) -> Option<&'a Ident> {
    match end.path.as_slice() {
        [name] => config.implementation(name.as_str()).map(|i| &i.name),
        _ => None,
    }
}

/// Implementations hosted on one of `robots`, plus everything connected to
/// them through implementation-to-implementation links (either direction).
fn reachable_from_robots<'a>(config: &'a Configuration, robots: &[&Ident]) -> BTreeSet<&'a str> {
    let mut seen: BTreeSet<&str> = config
        .impls
        .iter()
        .filter(|i| robots.contains(&&i.host) && config.vm(i.host.as_str()).is_none())
        .map(|i| i.name.as_str())
        .collect();
    let mut queue: VecDeque<&str> = seen.iter().copied().collect();
    while let Some(cur) = queue.pop_front() {
        for k in &config.connections {
            let (Some(x), Some(y)) = (impl_end(config, &k.from), impl_end(config, &k.to)) else { continue };
            let next = if x == cur {
                y
            } else if y == cur {
                x
            } else {
                continue;
            };
            if seen.insert(next.as_str()) {
                queue.push_back(next.as_str());
            }
        }
    }
    seen
}

pub fn check_assembly_deploys_config(ass: &Assembly, config: &Configuration) -> Result<RefinementReport, NotLinked> {
    if ass.deploys != config.name {
        return Err(NotLinked { document: ass.name.clone(), names: ass.deploys.clone(), given: config.name.clone() });
    }
    let mut diags = Vec::new();
    let mut bindings = Vec::new();

    for vm in &config.vms {
        match ass.placement_of(vm.name.as_str()) {
            Some(p) => bindings.push(Binding::new(&vm.name, format_args!("{}.{}", p.cloud, p.machine))),
            None => diags.push(Diagnostic::new(Code::Place01, format!("vm `{}` is not placed", vm.name), ass.span.clone())),
        }
    }
    for imp in &config.impls {
        let mut any = false;
        for inst in ass.instances.iter().filter(|i| i.of == imp.name) {
            any = true;
            bindings.push(Binding::new(&imp.name, &inst.name));
        }
        if !any {
            diags.push(Diagnostic::new(
                Code::Inst01,
                format!("`{}` has no instance in assembly `{}`", imp.name, ass.name),
                ass.span.clone(),
            ));
        }
    }
    for inst in &ass.instances {
        if config.implementation(inst.of.as_str()).is_none() {
            diags.push(Diagnostic::new(
                Code::Ref06,
                format!("instance `{}` is of `{}`, which `{}` does not declare", inst.name, inst.of, config.name),
                inst.span.clone(),
            ));
        }
    }
    Ok(RefinementReport::finish(bindings, diags))
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GraphNode {
    pub name: Ident,
    pub level: Level,
}

/// One functionality traced from role through implementation to instance.
/// Names are qualified by their document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MicroChain {
    pub role: String,
    pub implementation: String,
    /// `None` when the configuration is not deployed anywhere, or the
    /// implementation has no instance.
    pub instance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VariabilityGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<Link>,
    pub micro_edges: Vec<MicroChain>,
}

/// Declared relations between documents, whether or not the refinement
/// checks pass.
pub fn build_variability_graph(ws: &Workspace) -> VariabilityGraph {
    let nodes = ws
        .documents()
        .iter()
        .filter_map(|d| d.level().map(|level| GraphNode { name: d.name().clone(), level }))
        .collect();
    let edges = ws.links().to_vec();

    let mut micro_edges = Vec::new();
    for spec in ws.specifications() {
        for role in &spec.roles {
            let role_q = format!("{}.{}", spec.name, role.name);
            for config in ws.implementations_of(spec.name.as_str()) {
                for imp in realizers(config, &role.name) {
                    let imp_q = format!("{}.{}", config.name, imp.name);
                    let mut any = false;
                    for ass in ws.deployments_of(config.name.as_str()) {
                        for inst in ass.instances.iter().filter(|i| i.of == imp.name) {
                            any = true;
                            micro_edges.push(MicroChain {
                                role: role_q.clone(),
                                implementation: imp_q.clone(),
                                instance: Some(format!("{}.{}", ass.name, inst.name)),
                            });
                        }
                    }
                    if !any {
                        micro_edges.push(MicroChain { role: role_q.clone(), implementation: imp_q, instance: None });
                    }
                }
            }
        }
    }
    VariabilityGraph { nodes, edges, micro_edges }
}
