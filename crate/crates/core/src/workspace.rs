//! A set of documents with their cross-level links resolved.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::diag::{self, Code, Diagnostic};
use crate::ident::Ident;
use crate::model::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LinkKind {
    Implements,
    Deploys,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Implements => "implements",
            LinkKind::Deploys => "deploys",
        }
    }
}

/// `child` refines `parent`; links always point one level up.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Link {
    pub child: Ident,
    pub parent: Ident,
    pub kind: LinkKind,
}

#[derive(Debug, Clone, Default)]
pub struct Workspace {
    documents: Vec<Document>,
    links: Vec<Link>,
    diagnostics: Vec<Diagnostic>,
}

/// Links the given documents. Documents whose name is already taken are
/// dropped and reported; every other problem is reported without dropping
/// anything.
pub fn build_workspace(documents: impl IntoIterator<Item = Document>) -> Workspace {
    let mut ws = Workspace::default();
    for doc in documents {
        if let Some(first) = ws.document(doc.name().as_str()) {
            let msg = format!(
                "document `{}` is already declared as a {}",
                doc.name(),
                first.keyword()
            );
            ws.diagnostics.push(Diagnostic::new(Code::Ws01, msg, doc.span().cloned()));
            continue;
        }
        ws.documents.push(doc);
    }

    let mut diags = Vec::new();
    let mut links = Vec::new();
    for doc in &ws.documents {
        let (target, kind, wanted) = match doc {
            Document::Configuration(c) => (&c.implements, LinkKind::Implements, Level::Specification),
            Document::Assembly(a) => (&a.deploys, LinkKind::Deploys, Level::Configuration),
            _ => continue,
        };
        match ws.document(target.as_str()) {
            None => diags.push(Diagnostic::new(
                Code::Ws03,
                format!("`{}` {} unknown document `{}`", doc.name(), kind.as_str(), target),
                doc.span().cloned(),
            )),
            Some(t) if t.level() != Some(wanted) => diags.push(Diagnostic::new(
                Code::Ws02,
                format!(
                    "{} `{}` {} `{}`, which is a {} rather than a {}",
                    doc.keyword(),
                    doc.name(),
                    kind.as_str(),
                    target,
                    t.keyword(),
                    wanted.as_str()
                ),
                doc.span().cloned(),
            )),
            Some(_) => links.push(Link { child: doc.name().clone(), parent: target.clone(), kind }),
        }
    }

    // `realizes` references into the linked specification.
    for c in ws.configurations() {
        let Some(spec) = ws.specification(c.implements.as_str()) else { continue };
        for r in &c.robots {
            if spec.robot(r.realizes.as_str()).is_none() {
                diags.push(Diagnostic::new(
                    Code::Ws03,
                    format!("robot `{}` realizes `{}`, which is not a concept robot of `{}`", r.name, r.realizes, spec.name),
                    r.span.clone(),
                ));
            }
        }
        for i in &c.impls {
            if spec.role(i.realizes.as_str()).is_none() {
                diags.push(Diagnostic::new(
                    Code::Ws03,
                    format!("`{}` realizes `{}`, which is not a role of `{}`", i.name, i.realizes, spec.name),
                    i.span.clone(),
                ));
            }
        }
    }

    ws.links = links;
    ws.diagnostics.extend(diags);
    ws.diagnostics = diag::normalize(core::mem::take(&mut ws.diagnostics));
    ws
}

/// A reference to any named element of a workspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element<'a> {
    Specification(&'a Specification),
    Role(&'a ComponentRole),
    ConceptRobot(&'a ConceptRobot),
    Sensor(&'a Device),
    Actuator(&'a Device),
    Configuration(&'a Configuration),
    RobotModel(&'a RobotModel),
    VirtualMachine(&'a VirtualMachine),
    Implementation(&'a ComponentImplementation),
    Assembly(&'a Assembly),
    Cloud(&'a CloudDescription),
    Machine(&'a PhysicalMachine),
    Instance(&'a ComponentInstance),
}

impl Element<'_> {
    pub fn kind(&self) -> &'static str {
        match self {
            Element::Specification(_) => "specification",
            Element::Role(_) => "role",
            Element::ConceptRobot(_) => "concept robot",
            Element::Sensor(_) => "sensor",
            Element::Actuator(_) => "actuator",
            Element::Configuration(_) => "configuration",
            Element::RobotModel(_) => "robot",
            Element::VirtualMachine(_) => "vm",
            Element::Implementation(_) => "implementation",
            Element::Assembly(_) => "assembly",
            Element::Cloud(_) => "cloud",
            Element::Machine(_) => "machine",
            Element::Instance(_) => "instance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolveError {
    NotFound,
    /// Fully qualified paths of every match.
    Ambiguous(Vec<String>),
}

impl fmt::Display for ResolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolveError::NotFound => f.write_str("no such element"),
            ResolveError::Ambiguous(c) => write!(f, "ambiguous name, candidates: {}", c.join(", ")),
        }
    }
}

type Entry<'a> = (Vec<&'a str>, Element<'a>);

impl Workspace {
    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Diagnostics from linking, sorted by span.
    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn document(&self, name: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.name() == name)
    }

    pub fn specifications(&self) -> impl Iterator<Item = &Specification> {
        self.documents.iter().filter_map(|d| match d {
            Document::Specification(s) => Some(s),
            _ => None,
        })
    }

    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        self.documents.iter().filter_map(|d| match d {
            Document::Configuration(c) => Some(c),
            _ => None,
        })
    }

    pub fn assemblies(&self) -> impl Iterator<Item = &Assembly> {
        self.documents.iter().filter_map(|d| match d {
            Document::Assembly(a) => Some(a),
            _ => None,
        })
    }

    pub fn clouds(&self) -> impl Iterator<Item = &CloudDescription> {
        self.documents.iter().filter_map(|d| match d {
            Document::Cloud(c) => Some(c),
            _ => None,
        })
    }

    pub fn specification(&self, name: &str) -> Option<&Specification> {
        self.specifications().find(|s| s.name == name)
    }

    pub fn configuration(&self, name: &str) -> Option<&Configuration> {
        self.configurations().find(|c| c.name == name)
    }

    pub fn assembly(&self, name: &str) -> Option<&Assembly> {
        self.assemblies().find(|a| a.name == name)
    }

    /// Configurations linked to `spec`, in document order.
    pub fn implementations_of<'a>(&'a self, spec: &'a str) -> impl Iterator<Item = &'a Configuration> + 'a {
        self.links
            .iter()
            .filter(move |l| l.kind == LinkKind::Implements && l.parent == spec)
            .filter_map(|l| self.configuration(l.child.as_str()))
    }

    /// Assemblies linked to `config`, in document order.
    pub fn deployments_of<'a>(&'a self, config: &'a str) -> impl Iterator<Item = &'a Assembly> + 'a {
        self.links
            .iter()
            .filter(move |l| l.kind == LinkKind::Deploys && l.parent == config)
            .filter_map(|l| self.assembly(l.child.as_str()))
    }

    /// Looks up an element by path.
    ///
    /// A path that spells out an element's full qualified name
    /// (`document.element` or `document.owner.element`) wins; otherwise the
    /// path is matched against the tail of every qualified name, and must
    /// pick out a single element.
    pub fn resolve(&self, path: &[&str]) -> Result<Element<'_>, ResolveError> {
        if path.is_empty() {
            return Err(ResolveError::NotFound);
        }
        let all = self.elements();
        let exact: Vec<&Entry<'_>> = all.iter().filter(|(p, _)| p.as_slice() == path).collect();
        let matches = if exact.is_empty() {
            all.iter().filter(|(p, _)| p.ends_with(path)).collect()
        } else {
            exact
        };
        match matches.as_slice() {
            [] => Err(ResolveError::NotFound),
            [(_, e)] => Ok(*e),
            many => Err(ResolveError::Ambiguous(many.iter().map(|(p, _)| p.join(".")).collect())),
        }
    }

    fn elements(&self) -> Vec<Entry<'_>> {
        let mut out: Vec<Entry<'_>> = Vec::new();
        fn devices<'a>(out: &mut Vec<Entry<'a>>, base: &[&'a str], sensors: &'a [Device], actuators: &'a [Device]) {
            for d in sensors {
                out.push((with(base, d.name.as_str()), Element::Sensor(d)));
            }
            for d in actuators {
                out.push((with(base, d.name.as_str()), Element::Actuator(d)));
            }
        }
        fn cloud<'a>(out: &mut Vec<Entry<'a>>, base: &[&'a str], c: &'a CloudDescription) {
            let cb = with(base, c.name.as_str());
            out.push((cb.clone(), Element::Cloud(c)));
            for m in &c.machines {
                out.push((with(&cb, m.name.as_str()), Element::Machine(m)));
            }
        }
        for doc in &self.documents {
            let d = alloc::vec![doc.name().as_str()];
            match doc {
                Document::Specification(s) => {
                    out.push((d.clone(), Element::Specification(s)));
                    for r in &s.roles {
                        out.push((with(&d, r.name.as_str()), Element::Role(r)));
                    }
                    for r in &s.robots {
                        let rb = with(&d, r.name.as_str());
                        out.push((rb.clone(), Element::ConceptRobot(r)));
                        devices(&mut out, &rb, &r.sensors, &r.actuators);
                    }
                }
                Document::Configuration(c) => {
                    out.push((d.clone(), Element::Configuration(c)));
                    for r in &c.robots {
                        let rb = with(&d, r.name.as_str());
                        out.push((rb.clone(), Element::RobotModel(r)));
                        devices(&mut out, &rb, &r.sensors, &r.actuators);
                    }
                    for v in &c.vms {
                        out.push((with(&d, v.name.as_str()), Element::VirtualMachine(v)));
                    }
                    for i in &c.impls {
                        out.push((with(&d, i.name.as_str()), Element::Implementation(i)));
                    }
                }
                Document::Assembly(a) => {
                    out.push((d.clone(), Element::Assembly(a)));
                    for c in &a.clouds {
                        cloud(&mut out, &d, c);
                    }
                    for i in &a.instances {
                        out.push((with(&d, i.name.as_str()), Element::Instance(i)));
                    }
                }
                Document::Cloud(c) => {
                    // A standalone cloud is its own document root.
                    cloud(&mut out, &[], c);
                }
            }
        }
        out
    }
}

fn with<'a>(base: &[&'a str], last: &'a str) -> Vec<&'a str> {
    let mut v = base.to_vec();
    v.push(last);
    v
}
