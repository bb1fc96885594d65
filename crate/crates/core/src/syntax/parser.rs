use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::lexer::{lex, Tok, Token};
use super::ParseResult;
use crate::diag::{self, Code, Diagnostic};
use crate::ident::Ident;
use crate::model::*;
use crate::span::Span;

const TOP_LEVEL: &[&str] = &["specification", "configuration", "assembly", "cloud"];
const SPEC_MEMBERS: &[&str] = &["role", "concept_robot", "connect"];
const CONFIG_MEMBERS: &[&str] = &["robot", "vm", "component", "service", "connect"];
const ASSEMBLY_MEMBERS: &[&str] = &["cloud", "place", "instance"];
const ROLE_MEMBERS: &[&str] = &["provides", "requires", "annotate"];
const ROBOT_MEMBERS: &[&str] = &["sensor", "actuator"];
const VM_MEMBERS: &[&str] = &["os", "cpu", "ram", "subnet"];
const CLOUD_MEMBERS: &[&str] = &["network", "scheduler", "machine"];
const MACHINE_MEMBERS: &[&str] = &["cpu", "ram"];

/// Marker for "an error was reported; resynchronize".
struct Recover;

type PResult<T> = Result<T, Recover>;

pub fn parse(text: &str, file_name: &str) -> ParseResult {
    let file: Arc<str> = Arc::from(file_name);
    let mut diagnostics = Vec::new();
    let toks = lex(text, &file, &mut diagnostics);
    let mut p = Parser { toks, pos: 0, file, diags: diagnostics };
    let documents = p.file_body();
    let diagnostics = diag::normalize(p.diags);
    let partial = diag::has_errors(&diagnostics);
    ParseResult { documents, diagnostics, partial }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: Arc<str>,
    diags: Vec<Diagnostic>,
}

/// Tracks declared names for one namespace and reports redeclarations.
#[derive(Default)]
struct Names(BTreeSet<String>);

impl Names {
    fn fresh(&mut self, p: &mut Parser, what: &str, name: &str, span: &Span) -> bool {
        if self.0.insert(name.to_string()) {
            true
        } else {
            p.error(Code::Parse02, format!("duplicate {what} `{name}`"), span.clone());
            false
        }
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn current(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    fn span(&self, start: usize, end: usize) -> Span {
        Span::new(self.file.clone(), start, end)
    }

    fn span_from(&self, start: usize) -> Span {
        self.span(start, self.prev_end().max(start))
    }

    fn error(&mut self, code: Code, msg: String, span: Span) {
        self.diags.push(Diagnostic::new(code, msg, Some(span)));
    }

    fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let t = self.current().clone();
        self.error(
            Code::Parse01,
            format!("expected {expected}, found {}", t.tok.describe()),
            self.span(t.start, t.end),
        );
        Err(Recover)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn at_any(&self, kws: &[&str]) -> bool {
        matches!(self.peek(), Tok::Ident(s) if kws.contains(&s.as_str()))
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.at_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(Ident, Span)> {
        if let Tok::Ident(s) = self.peek() {
            // The lexer only produces well-formed identifiers.
            let id = Ident::new(s.clone()).map_err(|_| Recover)?;
            let t = self.bump();
            Ok((id, self.span(t.start, t.end)))
        } else {
            self.unexpected(what)
        }
    }

    /// A free-form value: bare identifier or string literal.
    fn text(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) => {
                let t = self.bump();
                Ok((s, self.span(t.start, t.end)))
            }
            _ => self.unexpected(what),
        }
    }

    fn int(&mut self, what: &str) -> PResult<(u64, Span)> {
        if let Tok::Int(n) = *self.peek() {
            let t = self.bump();
            Ok((n, self.span(t.start, t.end)))
        } else {
            self.unexpected(what)
        }
    }

    /// Skips to the next top-level keyword outside any braces.
    fn skip_to_top_level(&mut self) {
        let mut depth = 0usize;
        let mut first = true;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Ident(s) if !first && depth == 0 && TOP_LEVEL.contains(&s.as_str()) => return,
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth = depth.saturating_sub(1),
                _ => {}
            }
            first = false;
            self.bump();
        }
    }

    /// Skips to the next member keyword or closing brace of the current body.
    fn sync(&mut self, members: &[&str]) {
        self.sync_from(members, 0)
    }

    fn sync_from(&mut self, members: &[&str], mut depth: usize) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::RBrace if depth == 0 => return,
                Tok::Ident(s) if depth == 0 && members.contains(&s.as_str()) => return,
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth -= 1,
                _ => {}
            }
            self.bump();
        }
    }

    /// Runs `member` for each item until the closing brace of a body. The
    /// opening brace must already be consumed.
    fn body(&mut self, members: &[&str], context: &str, mut member: impl FnMut(&mut Self, &str) -> PResult<()>) {
        loop {
            match self.peek().clone() {
                Tok::RBrace => {
                    self.bump();
                    return;
                }
                Tok::Eof => {
                    let _ = self.unexpected::<()>("`}`");
                    return;
                }
                Tok::Ident(kw) if members.contains(&kw.as_str()) => {
                    if member(self, &kw).is_err() {
                        self.sync(members);
                    }
                }
                _ => {
                    let list = members.iter().map(|m| format!("`{m}`")).collect::<Vec<_>>().join(", ");
                    let _ = self.unexpected::<()>(&format!("one of {list} in {context}"));
                    let opened = self.bump().tok == Tok::LBrace;
                    self.sync_from(members, usize::from(opened));
                }
            }
        }
    }

    fn file_body(&mut self) -> Vec<Document> {
        let mut docs = Vec::new();
        loop {
            let start_pos = self.pos;
            let doc = match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) if s == "specification" => self.specification().map(Document::Specification),
                Tok::Ident(s) if s == "configuration" => self.configuration().map(Document::Configuration),
                Tok::Ident(s) if s == "assembly" => self.assembly().map(Document::Assembly),
                Tok::Ident(s) if s == "cloud" => self.cloud().map(Document::Cloud),
                _ => self.unexpected("`specification`, `configuration`, `assembly` or `cloud`"),
            };
            match doc {
                Ok(d) => docs.push(d),
                Err(Recover) => {
                    if self.pos == start_pos || !self.at_any(TOP_LEVEL) {
                        self.skip_to_top_level();
                    }
                }
            }
        }
        docs
    }

    fn specification(&mut self) -> PResult<Specification> {
        let start = self.bump().start;
        let (name, _) = self.ident("specification name")?;
        self.expect(Tok::LBrace)?;
        let mut spec = Specification::new(name);
        let (mut roles, mut robots) = (Names::default(), Names::default());
        self.body(SPEC_MEMBERS, "specification", |p, kw| {
            match kw {
                "role" => {
                    let r = p.role()?;
                    if roles.fresh(p, "role", r.name.as_str(), r.span.as_ref().unwrap()) {
                        spec.roles.push(r);
                    }
                }
                "concept_robot" => {
                    let s = p.bump().start;
                    let (name, _) = p.ident("robot name")?;
                    let (sensors, actuators) = p.devices()?;
                    let span = p.span_from(s);
                    if robots.fresh(p, "concept robot", name.as_str(), &span) {
                        spec.robots.push(ConceptRobot { name, sensors, actuators, span: Some(span) });
                    }
                }
                _ => spec.connections.push(p.connection()?),
            }
            Ok(())
        });
        spec.span = Some(self.span_from(start));
        Ok(spec)
    }

    fn role(&mut self) -> PResult<ComponentRole> {
        let start = self.bump().start;
        let (name, _) = self.ident("role name")?;
        self.expect(Tok::LBrace)?;
        let (interfaces, annotations) = self.interface_body("role")?;
        Ok(ComponentRole { name, interfaces, annotations, span: Some(self.span_from(start)) })
    }

    fn interface_body(&mut self, context: &str) -> PResult<(Vec<InterfaceRef>, Annotations)> {
        let mut interfaces: Vec<InterfaceRef> = Vec::new();
        let mut annotations = Annotations::new();
        self.body(ROLE_MEMBERS, context, |p, kw| {
            let s = p.bump().start;
            if kw == "annotate" {
                let (key, _) = p.ident("annotation key")?;
                p.expect(Tok::Eq)?;
                let (value, _) = p.text("annotation value")?;
                if annotations.contains_key(key.as_str()) {
                    p.error(Code::Parse02, format!("duplicate annotation `{key}`"), p.span_from(s));
                } else {
                    annotations.insert(key.into(), value);
                }
            } else {
                let direction = if kw == "provides" { Direction::Provided } else { Direction::Required };
                let (name, _) = p.ident("interface name")?;
                let iface = InterfaceRef { name, direction };
                if interfaces.contains(&iface) {
                    p.error(Code::Parse02, format!("duplicate interface `{iface}`"), p.span_from(s));
                } else {
                    interfaces.push(iface);
                }
            }
            Ok(())
        });
        Ok((interfaces, annotations))
    }

    /// `{ sensor NAME: KIND  actuator NAME: KIND ... }`
    fn devices(&mut self) -> PResult<(Vec<Device>, Vec<Device>)> {
        self.expect(Tok::LBrace)?;
        let mut sensors = Vec::new();
        let mut actuators = Vec::new();
        let mut names = Names::default();
        self.body(ROBOT_MEMBERS, "robot", |p, kw| {
            let s = p.bump().start;
            let (name, _) = p.ident("device name")?;
            p.expect(Tok::Colon)?;
            let (kind, kspan) = p.text("device kind")?;
            let span = p.span_from(s);
            if kind.is_empty() {
                p.error(Code::Parse04, "device kind must not be empty".into(), kspan);
                return Ok(());
            }
            if names.fresh(p, "device", name.as_str(), &span) {
                let d = Device { name, kind, span: Some(span) };
                if kw == "sensor" {
                    sensors.push(d);
                } else {
                    actuators.push(d);
                }
            }
            Ok(())
        });
        Ok((sensors, actuators))
    }

    fn path(&mut self) -> PResult<ConnectionEnd> {
        let (first, _) = self.ident("element name")?;
        let mut path = alloc::vec![first];
        while *self.peek() == Tok::Dot {
            self.bump();
            path.push(self.ident("element name")?.0);
        }
        Ok(ConnectionEnd::new(path))
    }

    fn connection(&mut self) -> PResult<Connection> {
        let start = self.bump().start;
        let from = self.path()?;
        let arrow = match self.peek() {
            Tok::Arrow => Arrow::Directed,
            Tok::Tilde => Arrow::Abstract,
            _ => return self.unexpected("`->` or `~`"),
        };
        self.bump();
        let to = self.path()?;
        let protocol = if self.at_kw("via") {
            self.bump();
            Some(self.text("protocol")?.0)
        } else {
            None
        };
        Ok(Connection { from, to, arrow, protocol, span: Some(self.span_from(start)) })
    }

    fn configuration(&mut self) -> PResult<Configuration> {
        let start = self.bump().start;
        let (name, _) = self.ident("configuration name")?;
        self.expect_kw("implements")?;
        let (implements, _) = self.ident("specification name")?;
        self.expect(Tok::LBrace)?;
        let mut cfg = Configuration::new(name, implements);
        let (mut robots, mut vms, mut impls) = (Names::default(), Names::default(), Names::default());
        self.body(CONFIG_MEMBERS, "configuration", |p, kw| {
            match kw {
                "robot" => {
                    let s = p.bump().start;
                    let (name, _) = p.ident("robot name")?;
                    p.expect(Tok::Colon)?;
                    let (model, _) = p.text("robot model")?;
                    p.expect_kw("realizes")?;
                    let (realizes, _) = p.ident("concept robot name")?;
                    let (sensors, actuators) = p.devices()?;
                    let span = p.span_from(s);
                    if robots.fresh(p, "robot", name.as_str(), &span) {
                        cfg.robots.push(RobotModel { name, model, realizes, sensors, actuators, span: Some(span) });
                    }
                }
                "vm" => {
                    let vm = p.vm()?;
                    if vms.fresh(p, "vm", vm.name.as_str(), vm.span.as_ref().unwrap()) {
                        cfg.vms.push(vm);
                    }
                }
                "component" | "service" => {
                    let s = p.bump().start;
                    let variant = if kw == "component" { Variant::ComponentClass } else { Variant::WebService };
                    let (name, _) = p.ident("implementation name")?;
                    p.expect_kw("realizes")?;
                    let (realizes, _) = p.ident("role name")?;
                    p.expect_kw("on")?;
                    let (host, _) = p.ident("host name")?;
                    p.expect(Tok::LBrace)?;
                    let (interfaces, annotations) = p.interface_body(kw)?;
                    let span = p.span_from(s);
                    if impls.fresh(p, "implementation", name.as_str(), &span) {
                        cfg.impls.push(ComponentImplementation {
                            name,
                            variant,
                            realizes,
                            interfaces,
                            host,
                            annotations,
                            span: Some(span),
                        });
                    }
                }
                _ => cfg.connections.push(p.connection()?),
            }
            Ok(())
        });
        cfg.span = Some(self.span_from(start));
        Ok(cfg)
    }

    fn vm(&mut self) -> PResult<VirtualMachine> {
        let start = self.bump().start;
        let (name, _) = self.ident("vm name")?;
        self.expect(Tok::LBrace)?;
        let mut os = None;
        let mut subnet = None;
        let mut cpu = None;
        let mut ram = None;
        self.body(VM_MEMBERS, "vm", |p, kw| {
            let s = p.bump().start;
            let dup = match kw {
                "os" => os.replace(p.text("operating system")?.0).is_some(),
                "subnet" => subnet.replace(p.text("subnet")?.0).is_some(),
                "cpu" => {
                    let (n, sp) = p.int("core count")?;
                    cpu.replace(p.positive_u32(n, sp)).is_some()
                }
                _ => {
                    let (n, sp) = p.int("memory in MB")?;
                    ram.replace(p.positive(n, sp)).is_some()
                }
            };
            if dup {
                p.error(Code::Parse02, format!("duplicate attribute `{kw}`"), p.span_from(s));
            }
            Ok(())
        });
        let span = self.span_from(start);
        let cpu_cores = self.required(cpu, "cpu", &name, &span);
        let ram_mb = self.required(ram, "ram", &name, &span);
        Ok(VirtualMachine { name, os, cpu_cores, ram_mb, subnet, span: Some(span) })
    }

    fn positive(&mut self, n: u64, span: Span) -> u64 {
        if n == 0 {
            self.error(Code::Parse04, "capacity must be at least 1".into(), span);
            1
        } else {
            n
        }
    }

    fn positive_u32(&mut self, n: u64, span: Span) -> u32 {
        match u32::try_from(n) {
            Ok(v) => self.positive(v.into(), span) as u32,
            Err(_) => {
                self.error(Code::Parse04, "core count out of range".into(), span);
                1
            }
        }
    }

    fn required<T: From<u8>>(&mut self, v: Option<T>, attr: &str, owner: &Ident, span: &Span) -> T {
        match v {
            Some(v) => v,
            None => {
                self.error(Code::Parse03, format!("`{owner}` is missing `{attr}`"), span.clone());
                T::from(1)
            }
        }
    }

    fn assembly(&mut self) -> PResult<Assembly> {
        let start = self.bump().start;
        let (name, _) = self.ident("assembly name")?;
        self.expect_kw("deploys")?;
        let (deploys, _) = self.ident("configuration name")?;
        self.expect(Tok::LBrace)?;
        let mut ass = Assembly::new(name, deploys);
        let (mut clouds, mut instances) = (Names::default(), Names::default());
        self.body(ASSEMBLY_MEMBERS, "assembly", |p, kw| {
            match kw {
                "cloud" => {
                    let c = p.cloud()?;
                    if clouds.fresh(p, "cloud", c.name.as_str(), c.span.as_ref().unwrap()) {
                        ass.clouds.push(c);
                    }
                }
                "place" => {
                    let s = p.bump().start;
                    let (vm, _) = p.ident("vm name")?;
                    p.expect_kw("on")?;
                    let (machine, _) = p.ident("machine name")?;
                    p.expect_kw("in")?;
                    let (cloud, _) = p.ident("cloud name")?;
                    ass.placements.push(VmPlacement { vm, machine, cloud, span: Some(p.span_from(s)) });
                }
                _ => {
                    let s = p.bump().start;
                    let (name, _) = p.ident("instance name")?;
                    p.expect_kw("of")?;
                    let (of, _) = p.ident("implementation name")?;
                    let state = if p.at_kw("failed") {
                        p.bump();
                        InstanceState::Failed
                    } else {
                        if p.at_kw("running") {
                            p.bump();
                        }
                        InstanceState::Running
                    };
                    let span = p.span_from(s);
                    if instances.fresh(p, "instance", name.as_str(), &span) {
                        ass.instances.push(ComponentInstance { name, of, state, span: Some(span) });
                    }
                }
            }
            Ok(())
        });
        ass.span = Some(self.span_from(start));
        Ok(ass)
    }

    fn cloud(&mut self) -> PResult<CloudDescription> {
        let start = self.bump().start;
        let (name, _) = self.ident("cloud name")?;
        self.expect(Tok::LBrace)?;
        let mut network = None;
        let mut scheduler = None;
        let mut machines: Vec<PhysicalMachine> = Vec::new();
        let mut names = Names::default();
        self.body(CLOUD_MEMBERS, "cloud", |p, kw| {
            let s = p.bump().start;
            match kw {
                "network" => {
                    let (v, sp) = p.text("`flat` or `sdn`")?;
                    let n = match v.as_str() {
                        "flat" => Network::Flat,
                        "sdn" => Network::Sdn,
                        _ => {
                            p.error(Code::Parse04, format!("unknown network mode `{v}`"), sp);
                            return Ok(());
                        }
                    };
                    if network.replace(n).is_some() {
                        p.error(Code::Parse02, "duplicate attribute `network`".into(), p.span_from(s));
                    }
                }
                "scheduler" => {
                    let (v, sp) = p.text("`spread` or `pack`")?;
                    let Some(policy) = SchedulingPolicy::parse(&v) else {
                        p.error(Code::Parse04, format!("unknown scheduling policy `{v}`"), sp);
                        return Ok(());
                    };
                    if scheduler.replace(policy).is_some() {
                        p.error(Code::Parse02, "duplicate attribute `scheduler`".into(), p.span_from(s));
                    }
                }
                _ => {
                    let (name, _) = p.ident("machine name")?;
                    p.expect(Tok::LBrace)?;
                    let mut cpu = None;
                    let mut ram = None;
                    p.body(MACHINE_MEMBERS, "machine", |p, kw| {
                        let s = p.bump().start;
                        let dup = if kw == "cpu" {
                            let (n, sp) = p.int("core count")?;
                            cpu.replace(p.positive_u32(n, sp)).is_some()
                        } else {
                            let (n, sp) = p.int("memory in MB")?;
                            ram.replace(p.positive(n, sp)).is_some()
                        };
                        if dup {
                            p.error(Code::Parse02, format!("duplicate attribute `{kw}`"), p.span_from(s));
                        }
                        Ok(())
                    });
                    let span = p.span_from(s);
                    let cpu_cores = p.required(cpu, "cpu", &name, &span);
                    let ram_mb = p.required(ram, "ram", &name, &span);
                    if names.fresh(p, "machine", name.as_str(), &span) {
                        machines.push(PhysicalMachine { name, cpu_cores, ram_mb, span: Some(span) });
                    }
                }
            }
            Ok(())
        });
        let span = self.span_from(start);
        let network = match network {
            Some(n) => n,
            None => {
                self.error(Code::Parse03, format!("cloud `{name}` is missing `network`"), span.clone());
                Network::Flat
            }
        };
        let scheduler = match scheduler {
            Some(s) => s,
            None => {
                self.error(Code::Parse03, format!("cloud `{name}` is missing `scheduler`"), span.clone());
                SchedulingPolicy::Spread
            }
        };
        Ok(CloudDescription { name, network, scheduler, machines, span: Some(span) })
    }
}
