//! The three architecture levels.
//!
//! A [`Specification`] names abstract component roles and concept robots.
//! A [`Configuration`] implements one specification with concrete component
//! classes or web services, robot models and virtual machines. An
//! [`Assembly`] deploys one configuration onto clouds of physical machines
//! and lists the running instances.
//!
//! Element spans are `None` for elements built in code rather than parsed.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ident::Ident;
use crate::span::Span;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

pub type Annotations = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    Provided,
    Required,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Provided => "provides",
            Direction::Required => "requires",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct InterfaceRef {
    pub name: Ident,
    pub direction: Direction,
}

impl InterfaceRef {
    pub fn provided(name: Ident) -> Self {
        InterfaceRef { name, direction: Direction::Provided }
    }

    pub fn required(name: Ident) -> Self {
        InterfaceRef { name, direction: Direction::Required }
    }
}

impl fmt::Display for InterfaceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.direction.keyword(), self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentRole {
    pub name: Ident,
    pub interfaces: Vec<InterfaceRef>,
    pub annotations: Annotations,
    pub span: Option<Span>,
}

impl ComponentRole {
    /// Roles may be left without interfaces while still being sketched out.
    pub fn is_incomplete(&self) -> bool {
        self.annotations.get("incomplete").map(String::as_str) == Some("true")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DeviceClass {
    Sensor,
    Actuator,
}

impl DeviceClass {
    pub fn keyword(self) -> &'static str {
        match self {
            DeviceClass::Sensor => "sensor",
            DeviceClass::Actuator => "actuator",
        }
    }
}

/// A sensor or actuator: a name local to its robot plus a free-form kind
/// such as `Camera` or `DifferentialDrive`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Device {
    pub name: Ident,
    pub kind: String,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptRobot {
    pub name: Ident,
    pub sensors: Vec<Device>,
    pub actuators: Vec<Device>,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Arrow {
    /// `->`: a concrete communication link.
    Directed,
    /// `~`: the specification-level link between a role and a robot.
    Abstract,
}

/// One end of a connection: a bare element name or `owner.device`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConnectionEnd {
    pub path: Vec<Ident>,
}

impl ConnectionEnd {
    pub fn new(path: Vec<Ident>) -> Self {
        ConnectionEnd { path }
    }

    pub fn single(name: Ident) -> Self {
        ConnectionEnd { path: alloc::vec![name] }
    }
}

impl fmt::Display for ConnectionEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.path.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(seg.as_str())?;
        }
        Ok(())
    }
}

/// What a connection end refers to once resolved inside its document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EndKind {
    Role,
    Robot,
    Sensor,
    Actuator,
    Component,
    Service,
    RobotModel,
}

impl EndKind {
    /// Roles and their concrete realizations play the same part in the
    /// connection taxonomy.
    pub fn is_role_like(self) -> bool {
        matches!(self, EndKind::Role | EndKind::Component | EndKind::Service)
    }

    pub fn is_robot_like(self) -> bool {
        matches!(self, EndKind::Robot | EndKind::RobotModel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Flavor {
    RoleRole,
    RoleSensor,
    RoleActuator,
    AbstractRobot,
}

impl Flavor {
    /// Classifies an end-kind pair. The pair is treated as unordered;
    /// `None` means the pair is outside the allowed taxonomy.
    pub fn classify(arrow: Arrow, a: EndKind, b: EndKind) -> Option<Flavor> {
        let (role, other) = if a.is_role_like() {
            (a, b)
        } else if b.is_role_like() {
            (b, a)
        } else {
            return None;
        };
        debug_assert!(role.is_role_like());
        match (arrow, other) {
            (Arrow::Directed, k) if k.is_role_like() => Some(Flavor::RoleRole),
            (Arrow::Directed, EndKind::Sensor) => Some(Flavor::RoleSensor),
            (Arrow::Directed, EndKind::Actuator) => Some(Flavor::RoleActuator),
            (Arrow::Abstract, k) if k.is_robot_like() => Some(Flavor::AbstractRobot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connection {
    pub from: ConnectionEnd,
    pub to: ConnectionEnd,
    pub arrow: Arrow,
    pub protocol: Option<String>,
    pub span: Option<Span>,
}

impl fmt::Display for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.arrow {
            Arrow::Directed => "->",
            Arrow::Abstract => "~",
        };
        write!(f, "{} {} {}", self.from, op, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Specification {
    pub name: Ident,
    pub roles: Vec<ComponentRole>,
    pub robots: Vec<ConceptRobot>,
    pub connections: Vec<Connection>,
    pub span: Option<Span>,
}

impl Specification {
    pub fn new(name: Ident) -> Self {
        Specification { name, roles: Vec::new(), robots: Vec::new(), connections: Vec::new(), span: None }
    }

    pub fn role(&self, name: &str) -> Option<&ComponentRole> {
        self.roles.iter().find(|r| r.name == name)
    }

    pub fn robot(&self, name: &str) -> Option<&ConceptRobot> {
        self.robots.iter().find(|r| r.name == name)
    }

    /// Every element a connection end could name, with its kind.
    pub fn resolve_end(&self, end: &ConnectionEnd) -> Vec<EndKind> {
        match end.path.as_slice() {
            [name] => {
                let mut out = Vec::new();
                if self.role(name.as_str()).is_some() {
                    out.push(EndKind::Role);
                }
                if self.robot(name.as_str()).is_some() {
                    out.push(EndKind::Robot);
                }
                out
            }
            [owner, dev] => self
                .robot(owner.as_str())
                .map(|r| device_kinds(&r.sensors, &r.actuators, dev))
                .unwrap_or_default(),
            _ => Vec::new(),
        }
    }
}

fn device_kinds(sensors: &[Device], actuators: &[Device], name: &Ident) -> Vec<EndKind> {
    let mut out = Vec::new();
    if sensors.iter().any(|d| &d.name == name) {
        out.push(EndKind::Sensor);
    }
    if actuators.iter().any(|d| &d.name == name) {
        out.push(EndKind::Actuator);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobotModel {
    pub name: Ident,
    /// Commercial model, e.g. `Pioneer3DX` or `NAO`.
    pub model: String,
    pub realizes: Ident,
    pub sensors: Vec<Device>,
    pub actuators: Vec<Device>,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualMachine {
    pub name: Ident,
    pub os: Option<String>,
    pub cpu_cores: u32,
    pub ram_mb: u64,
    pub subnet: Option<String>,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    ComponentClass,
    WebService,
}

impl Variant {
    pub fn keyword(self) -> &'static str {
        match self {
            Variant::ComponentClass => "component",
            Variant::WebService => "service",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::ComponentClass => "component_class",
            Variant::WebService => "web_service",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentImplementation {
    pub name: Ident,
    pub variant: Variant,
    pub realizes: Ident,
    pub interfaces: Vec<InterfaceRef>,
    /// A virtual machine or robot model of the same configuration.
    pub host: Ident,
    pub annotations: Annotations,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Host<'a> {
    Vm(&'a VirtualMachine),
    Robot(&'a RobotModel),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub name: Ident,
    pub implements: Ident,
    pub robots: Vec<RobotModel>,
    pub vms: Vec<VirtualMachine>,
    pub impls: Vec<ComponentImplementation>,
    pub connections: Vec<Connection>,
    pub span: Option<Span>,
}

impl Configuration {
    pub fn new(name: Ident, implements: Ident) -> Self {
        Configuration {
            name,
            implements,
            robots: Vec::new(),
            vms: Vec::new(),
            impls: Vec::new(),
            connections: Vec::new(),
            span: None,
        }
    }

    pub fn robot(&self, name: &str) -> Option<&RobotModel> {
        self.robots.iter().find(|r| r.name == name)
    }

    pub fn vm(&self, name: &str) -> Option<&VirtualMachine> {
        self.vms.iter().find(|v| v.name == name)
    }

    pub fn implementation(&self, name: &str) -> Option<&ComponentImplementation> {
        self.impls.iter().find(|i| i.name == name)
    }

    /// The host an implementation runs on, if its name picks out exactly one
    /// VM or robot model.
    pub fn host_of(&self, imp: &ComponentImplementation) -> Option<Host<'_>> {
        match (self.vm(imp.host.as_str()), self.robot(imp.host.as_str())) {
            (Some(vm), None) => Some(Host::Vm(vm)),
            (None, Some(r)) => Some(Host::Robot(r)),
            _ => None,
        }
    }

    pub fn resolve_end(&self, end: &ConnectionEnd) -> Vec<EndKind> {
        match end.path.as_slice() {
            [name] => {
                let mut out = Vec::new();
                if let Some(i) = self.implementation(name.as_str()) {
                    out.push(match i.variant {
                        Variant::ComponentClass => EndKind::Component,
                        Variant::WebService => EndKind::Service,
                    });
                }
                if self.robot(name.as_str()).is_some() {
                    out.push(EndKind::RobotModel);
                }
                out
            }
            [owner, dev] => self
                .robot(owner.as_str())
                .map(|r| device_kinds(&r.sensors, &r.actuators, dev))
                .unwrap_or_default(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysicalMachine {
    pub name: Ident,
    pub cpu_cores: u32,
    pub ram_mb: u64,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Network {
    /// Every VM shares a single bridged network.
    Flat,
    /// Software-defined networking; VMs may sit in separate subnets.
    Sdn,
}

impl Network {
    pub fn as_str(self) -> &'static str {
        match self {
            Network::Flat => "flat",
            Network::Sdn => "sdn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SchedulingPolicy {
    /// Distribute VMs over as many machines as possible.
    Spread,
    /// Consolidate VMs onto as few machines as possible.
    Pack,
}

impl SchedulingPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            SchedulingPolicy::Spread => "spread",
            SchedulingPolicy::Pack => "pack",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spread" => Some(SchedulingPolicy::Spread),
            "pack" => Some(SchedulingPolicy::Pack),
            _ => None,
        }
    }
}

impl fmt::Display for SchedulingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloudDescription {
    pub name: Ident,
    pub network: Network,
    pub scheduler: SchedulingPolicy,
    pub machines: Vec<PhysicalMachine>,
    pub span: Option<Span>,
}

impl CloudDescription {
    pub fn machine(&self, name: &str) -> Option<&PhysicalMachine> {
        self.machines.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VmPlacement {
    pub vm: Ident,
    pub machine: Ident,
    pub cloud: Ident,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum InstanceState {
    Running,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentInstance {
    pub name: Ident,
    pub of: Ident,
    pub state: InstanceState,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assembly {
    pub name: Ident,
    pub deploys: Ident,
    pub clouds: Vec<CloudDescription>,
    pub placements: Vec<VmPlacement>,
    pub instances: Vec<ComponentInstance>,
    pub span: Option<Span>,
}

impl Assembly {
    pub fn new(name: Ident, deploys: Ident) -> Self {
        Assembly {
            name,
            deploys,
            clouds: Vec::new(),
            placements: Vec::new(),
            instances: Vec::new(),
            span: None,
        }
    }

    pub fn cloud(&self, name: &str) -> Option<&CloudDescription> {
        self.clouds.iter().find(|c| c.name == name)
    }

    pub fn placement_of(&self, vm: &str) -> Option<&VmPlacement> {
        self.placements.iter().find(|p| p.vm == vm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Level {
    Specification,
    Configuration,
    Assembly,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Specification => "specification",
            Level::Configuration => "configuration",
            Level::Assembly => "assembly",
        }
    }
}

/// A top-level declaration of a `.crala` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Document {
    Specification(Specification),
    Configuration(Configuration),
    Assembly(Assembly),
    /// A standalone cloud block, used as planner input.
    Cloud(CloudDescription),
}

impl Document {
    pub fn name(&self) -> &Ident {
        match self {
            Document::Specification(d) => &d.name,
            Document::Configuration(d) => &d.name,
            Document::Assembly(d) => &d.name,
            Document::Cloud(d) => &d.name,
        }
    }

    pub fn span(&self) -> Option<&Span> {
        match self {
            Document::Specification(d) => d.span.as_ref(),
            Document::Configuration(d) => d.span.as_ref(),
            Document::Assembly(d) => d.span.as_ref(),
            Document::Cloud(d) => d.span.as_ref(),
        }
    }

    /// Architecture level; `None` for standalone clouds.
    pub fn level(&self) -> Option<Level> {
        match self {
            Document::Specification(_) => Some(Level::Specification),
            Document::Configuration(_) => Some(Level::Configuration),
            Document::Assembly(_) => Some(Level::Assembly),
            Document::Cloud(_) => None,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Document::Specification(_) => "specification",
            Document::Configuration(_) => "configuration",
            Document::Assembly(_) => "assembly",
            Document::Cloud(_) => "cloud",
        }
    }

    /// Copy of the document with every span cleared, for structural
    /// comparison.
    pub fn without_spans(&self) -> Document {
        let mut d = self.clone();
        d.clear_spans();
        d
    }

    fn clear_spans(&mut self) {
        fn devices(ds: &mut [Device]) {
            ds.iter_mut().for_each(|d| d.span = None);
        }
        fn conns(cs: &mut [Connection]) {
            cs.iter_mut().for_each(|c| c.span = None);
        }
        fn cloud(c: &mut CloudDescription) {
            c.span = None;
            c.machines.iter_mut().for_each(|m| m.span = None);
        }
        match self {
            Document::Specification(s) => {
                s.span = None;
                s.roles.iter_mut().for_each(|r| r.span = None);
                for r in &mut s.robots {
                    r.span = None;
                    devices(&mut r.sensors);
                    devices(&mut r.actuators);
                }
                conns(&mut s.connections);
            }
            Document::Configuration(c) => {
                c.span = None;
                for r in &mut c.robots {
                    r.span = None;
                    devices(&mut r.sensors);
                    devices(&mut r.actuators);
                }
                c.vms.iter_mut().for_each(|v| v.span = None);
                c.impls.iter_mut().for_each(|i| i.span = None);
                conns(&mut c.connections);
            }
            Document::Assembly(a) => {
                a.span = None;
                a.clouds.iter_mut().for_each(cloud);
                a.placements.iter_mut().for_each(|p| p.span = None);
                a.instances.iter_mut().for_each(|i| i.span = None);
            }
            Document::Cloud(c) => cloud(c),
        }
    }
}

impl From<Specification> for Document {
    fn from(d: Specification) -> Self {
        Document::Specification(d)
    }
}

impl From<Configuration> for Document {
    fn from(d: Configuration) -> Self {
        Document::Configuration(d)
    }
}

impl From<Assembly> for Document {
    fn from(d: Assembly) -> Self {
        Document::Assembly(d)
    }
}

impl From<CloudDescription> for Document {
    fn from(d: CloudDescription) -> Self {
        Document::Cloud(d)
    }
}
