//! Per-level rule sets.
//!
//! Each validator is a pure function of its inputs and returns diagnostics
//! sorted by span.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::diag::{self, Code, Diagnostic};
use crate::model::*;

pub fn validate_specification(spec: &Specification) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for role in &spec.roles {
        if role.interfaces.is_empty() && !role.is_incomplete() {
            out.push(Diagnostic::new(
                Code::Role01,
                format!("role `{}` declares no interfaces; annotate it `incomplete = \"true\"` if intended", role.name),
                role.span.clone(),
            ));
        }
    }

    let mut connected: BTreeSet<&str> = BTreeSet::new();
    for c in &spec.connections {
        if c.protocol.is_some() {
            out.push(Diagnostic::new(
                Code::Conn02,
                format!("`connect {c}` names a protocol; protocols belong to configurations"),
                c.span.clone(),
            ));
        }
        let ends = [&c.from, &c.to].map(|e| (e, spec.resolve_end(e)));
        for (e, kinds) in &ends {
            if kinds.contains(&EndKind::Role) && e.path.len() == 1 {
                connected.insert(e.path[0].as_str());
            }
        }
        let Some((a, b)) = resolved_pair(&ends, c, &mut out) else { continue };
        if Flavor::classify(c.arrow, a, b).is_none() {
            out.push(taxonomy_error(c, a, b));
        }
    }

    for role in &spec.roles {
        if !connected.contains(role.name.as_str()) {
            out.push(Diagnostic::new(
                Code::Spec01,
                format!("role `{}` is not connected to anything", role.name),
                role.span.clone(),
            ));
        }
    }
    diag::normalize(out)
}

/// Both end kinds if each end names exactly one element; reports E-CONN-04
/// otherwise.
fn resolved_pair(
    ends: &[(&ConnectionEnd, Vec<EndKind>); 2],
    c: &Connection,
    out: &mut Vec<Diagnostic>,
) -> Option<(EndKind, EndKind)> {
    let mut ok = true;
    for (e, kinds) in ends {
        if kinds.len() != 1 {
            let what = if kinds.is_empty() { "does not name any element" } else { "names more than one element" };
            out.push(Diagnostic::new(Code::Conn04, format!("connection end `{e}` {what}"), c.span.clone()));
            ok = false;
        }
    }
    ok.then(|| (ends[0].1[0], ends[1].1[0]))
}

fn kind_name(k: EndKind) -> &'static str {
    match k {
        EndKind::Role => "role",
        EndKind::Robot => "robot",
        EndKind::Sensor => "sensor",
        EndKind::Actuator => "actuator",
        EndKind::Component => "component",
        EndKind::Service => "service",
        EndKind::RobotModel => "robot",
    }
}

fn taxonomy_error(c: &Connection, a: EndKind, b: EndKind) -> Diagnostic {
    let op = match c.arrow {
        Arrow::Directed => "->",
        Arrow::Abstract => "~",
    };
    Diagnostic::new(
        Code::Conn01,
        format!(
            "`connect {c}` links a {} {op} {}; allowed are role -> role, role -> sensor, role -> actuator and role ~ robot",
            kind_name(a),
            kind_name(b)
        ),
        c.span.clone(),
    )
}

pub fn validate_configuration(config: &Configuration) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for vm in &config.vms {
        if vm.os.is_none() {
            out.push(Diagnostic::new(
                Code::Os01,
                format!("vm `{}` does not select an operating system", vm.name),
                vm.span.clone(),
            ));
        }
    }

    for imp in &config.impls {
        if config.host_of(imp).is_none() {
            let found = usize::from(config.vm(imp.host.as_str()).is_some())
                + usize::from(config.robot(imp.host.as_str()).is_some());
            let msg = if found == 0 {
                format!("`{}` is placed on `{}`, which is neither a vm nor a robot", imp.name, imp.host)
            } else {
                format!("`{}` is placed on `{}`, which names both a vm and a robot", imp.name, imp.host)
            };
            out.push(Diagnostic::new(Code::Host01, msg, imp.span.clone()));
        }
    }

    for c in &config.connections {
        let ends = [&c.from, &c.to].map(|e| (e, config.resolve_end(e)));
        let Some((a, b)) = resolved_pair(&ends, c, &mut out) else { continue };
        let robot_meets_impl = (a.is_robot_like() && b.is_role_like()) || (b.is_robot_like() && a.is_role_like());
        if robot_meets_impl {
            out.push(Diagnostic::new(
                Code::Conn03,
                format!("`connect {c}` links a robot directly to a component; below the specification, components reach robots through their sensors, actuators or by being hosted on them"),
                c.span.clone(),
            ));
            continue;
        }
        match Flavor::classify(c.arrow, a, b) {
            None => out.push(taxonomy_error(c, a, b)),
            Some(Flavor::RoleRole) if c.protocol.is_none() => {
                let host = |e: &ConnectionEnd| config.implementation(e.path[0].as_str()).and_then(|i| config.host_of(i));
                if let (Some(h1), Some(h2)) = (host(&c.from), host(&c.to)) {
                    if h1 != h2 {
                        out.push(Diagnostic::new(
                            Code::Proto01,
                            format!("`connect {c}` crosses hosts but names no protocol (add `via PROTOCOL`)"),
                            c.span.clone(),
                        ));
                    }
                }
            }
            Some(_) => {}
        }
    }
    diag::normalize(out)
}

/// Checks a cloud description on its own, as declared inside an assembly or
/// at top level.
pub fn validate_cloud(cloud: &CloudDescription) -> Vec<Diagnostic> {
    if cloud.machines.is_empty() {
        return vec![Diagnostic::new(
            Code::Cloud01,
            format!("cloud `{}` declares no physical machine", cloud.name),
            cloud.span.clone(),
        )];
    }
    Vec::new()
}

/// Checks an assembly against the configuration it deploys.
pub fn validate_assembly(ass: &Assembly, config: &Configuration) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = ass.clouds.iter().flat_map(validate_cloud).collect();

    // First valid placement of each VM: vm -> (cloud, machine).
    let mut placed: BTreeMap<&str, (&CloudDescription, &PhysicalMachine)> = BTreeMap::new();
    for p in &ass.placements {
        let Some(vm) = config.vm(p.vm.as_str()) else {
            out.push(Diagnostic::new(
                Code::Place03,
                format!("`{}` is not a vm of configuration `{}`", p.vm, config.name),
                p.span.clone(),
            ));
            continue;
        };
        let target = ass.cloud(p.cloud.as_str()).and_then(|c| c.machine(p.machine.as_str()).map(|m| (c, m)));
        let Some(target) = target else {
            out.push(Diagnostic::new(
                Code::Place02,
                format!("no machine `{}` in cloud `{}`", p.machine, p.cloud),
                p.span.clone(),
            ));
            continue;
        };
        if placed.contains_key(vm.name.as_str()) {
            out.push(Diagnostic::new(Code::Place04, format!("vm `{}` is placed more than once", p.vm), p.span.clone()));
            continue;
        }
        placed.insert(vm.name.as_str(), target);
    }

    for vm in &config.vms {
        let listed = ass.placements.iter().any(|p| p.vm == vm.name);
        if !listed {
            out.push(Diagnostic::new(Code::Place01, format!("vm `{}` is not placed", vm.name), ass.span.clone()));
        }
    }

    for cloud in &ass.clouds {
        for m in &cloud.machines {
            let used: u64 = config
                .vms
                .iter()
                .filter(|vm| {
                    placed
                        .get(vm.name.as_str())
                        .is_some_and(|(c, pm)| c.name == cloud.name && pm.name == m.name)
                })
                .map(|vm| vm.ram_mb)
                .sum();
            if used > m.ram_mb {
                out.push(Diagnostic::new(
                    Code::Cap01,
                    format!("machine `{}` holds {used} MB of vm memory but has {} MB", m.name, m.ram_mb),
                    m.span.clone(),
                ));
            }
        }
        if cloud.network == Network::Flat {
            let subnets: BTreeSet<&str> = config
                .vms
                .iter()
                .filter(|vm| placed.get(vm.name.as_str()).is_some_and(|(c, _)| c.name == cloud.name))
                .filter_map(|vm| vm.subnet.as_deref())
                .collect();
            if subnets.len() > 1 {
                let list: Vec<&str> = subnets.into_iter().collect();
                out.push(Diagnostic::new(
                    Code::Net01,
                    format!(
                        "cloud `{}` has a flat network, but its vms ask for subnets {}",
                        cloud.name,
                        list.join(", ")
                    ),
                    cloud.span.clone(),
                ));
            }
        }
    }

    for imp in &config.impls {
        if !ass.instances.iter().any(|i| i.of == imp.name) {
            out.push(Diagnostic::new(
                Code::Inst01,
                format!("`{}` has no instance in assembly `{}`", imp.name, ass.name),
                ass.span.clone(),
            ));
        }
    }
    diag::normalize(out)
}
