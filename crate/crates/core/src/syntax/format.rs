use alloc::string::String;
use core::fmt::Write;

use crate::ident::is_ident;
use crate::model::*;

/// Canonical text for one document: two-space indentation, one member per
/// line, members grouped by kind in declaration order.
pub fn format(doc: &Document) -> String {
    let mut w = Writer { out: String::new(), depth: 0 };
    match doc {
        Document::Specification(s) => w.specification(s),
        Document::Configuration(c) => w.configuration(c),
        Document::Assembly(a) => w.assembly(a),
        Document::Cloud(c) => w.cloud(c),
    }
    w.out
}

struct Writer {
    out: String,
    depth: usize,
}

/// Free-form values are written bare when they lex as an identifier.
fn text(s: &str) -> String {
    if is_ident(s) {
        s.into()
    } else {
        quote(s)
    }
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

impl Writer {
    fn line(&mut self, args: core::fmt::Arguments<'_>) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        let _ = self.out.write_fmt(args);
        self.out.push('\n');
    }

    fn open(&mut self, args: core::fmt::Arguments<'_>) {
        self.line(format_args!("{args} {{"));
        self.depth += 1;
    }

    fn close(&mut self) {
        self.depth -= 1;
        self.line(format_args!("}}"));
    }

    fn specification(&mut self, s: &Specification) {
        self.open(format_args!("specification {}", s.name));
        for r in &s.roles {
            self.open(format_args!("role {}", r.name));
            self.interfaces(&r.interfaces, &r.annotations);
            self.close();
        }
        for r in &s.robots {
            self.open(format_args!("concept_robot {}", r.name));
            self.devices(&r.sensors, &r.actuators);
            self.close();
        }
        self.connections(&s.connections);
        self.close();
    }

    fn interfaces(&mut self, ifaces: &[InterfaceRef], annotations: &Annotations) {
        for i in ifaces {
            self.line(format_args!("{} {}", i.direction.keyword(), i.name));
        }
        for (k, v) in annotations {
            self.line(format_args!("annotate {k} = {}", quote(v)));
        }
    }

    fn devices(&mut self, sensors: &[Device], actuators: &[Device]) {
        for (class, list) in [(DeviceClass::Sensor, sensors), (DeviceClass::Actuator, actuators)] {
            for d in list {
                self.line(format_args!("{} {}: {}", class.keyword(), d.name, text(&d.kind)));
            }
        }
    }

    fn connections(&mut self, conns: &[Connection]) {
        for c in conns {
            match &c.protocol {
                Some(p) => self.line(format_args!("connect {c} via {}", text(p))),
                None => self.line(format_args!("connect {c}")),
            }
        }
    }

    fn configuration(&mut self, c: &Configuration) {
        self.open(format_args!("configuration {} implements {}", c.name, c.implements));
        for r in &c.robots {
            self.open(format_args!("robot {}: {} realizes {}", r.name, text(&r.model), r.realizes));
            self.devices(&r.sensors, &r.actuators);
            self.close();
        }
        for vm in &c.vms {
            self.open(format_args!("vm {}", vm.name));
            if let Some(os) = &vm.os {
                self.line(format_args!("os {}", text(os)));
            }
            self.line(format_args!("cpu {}", vm.cpu_cores));
            self.line(format_args!("ram {}", vm.ram_mb));
            if let Some(sn) = &vm.subnet {
                self.line(format_args!("subnet {}", text(sn)));
            }
            self.close();
        }
        for i in &c.impls {
            self.open(format_args!("{} {} realizes {} on {}", i.variant.keyword(), i.name, i.realizes, i.host));
            self.interfaces(&i.interfaces, &i.annotations);
            self.close();
        }
        self.connections(&c.connections);
        self.close();
    }

    fn cloud(&mut self, c: &CloudDescription) {
        self.open(format_args!("cloud {}", c.name));
        self.line(format_args!("network {}", c.network.as_str()));
        self.line(format_args!("scheduler {}", c.scheduler.as_str()));
        for m in &c.machines {
            self.open(format_args!("machine {}", m.name));
            self.line(format_args!("cpu {}", m.cpu_cores));
            self.line(format_args!("ram {}", m.ram_mb));
            self.close();
        }
        self.close();
    }

    fn assembly(&mut self, a: &Assembly) {
        self.open(format_args!("assembly {} deploys {}", a.name, a.deploys));
        for c in &a.clouds {
            self.cloud(c);
        }
        for p in &a.placements {
            self.line(format_args!("place {} on {} in {}", p.vm, p.machine, p.cloud));
        }
        for i in &a.instances {
            match i.state {
                InstanceState::Running => self.line(format_args!("instance {} of {}", i.name, i.of)),
                InstanceState::Failed => self.line(format_args!("instance {} of {} failed", i.name, i.of)),
            }
        }
        self.close();
    }
}
