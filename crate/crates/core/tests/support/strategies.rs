//! Generators and property checks shared by the core property tests and
//! the acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeSet;

use crala_core::diag::has_errors;
use crala_core::matchmaker::{match_role, Constraints, Repository, RepositoryEntry};
use crala_core::planner::{plan_deployment, PlanError};
use crala_core::refine::check_assembly_deploys_config;
use crala_core::syntax::{format, parse};
use crala_core::validate::validate_assembly;
use crala_core::*;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn ident(s: String) -> Ident {
    Ident::new(s).unwrap()
}

/// Identifier stems start upper-case so they never collide with keywords;
/// callers add an index suffix to keep names unique.
pub fn stem() -> impl Strategy<Value = String> {
    "[A-Z][A-Za-z0-9_]{0,5}"
}

/// Free text: bare words, keywords, and strings that need quoting or escapes.
pub fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z][a-z0-9_-]{0,8}",
        Just("cpu".to_string()),
        Just(String::new()),
        "[ -~]{0,12}",
        "[a-zé\"\\\\\n\t ]{0,8}",
    ]
}

pub fn interfaces() -> impl Strategy<Value = Vec<InterfaceRef>> {
    prop::collection::vec((stem(), any::<bool>()), 0..4).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (s, provided))| {
                let n = ident(format!("{s}_{i}"));
                if provided {
                    InterfaceRef::provided(n)
                } else {
                    InterfaceRef::required(n)
                }
            })
            .collect()
    })
}

pub fn annotations() -> impl Strategy<Value = Annotations> {
    prop::collection::btree_map("[a-z][a-z_]{0,6}", text(), 0..3)
}

pub fn devices(prefix: &'static str) -> impl Strategy<Value = Vec<Device>> {
    let kind = text().prop_filter("device kinds are non-empty", |k| !k.is_empty());
    prop::collection::vec((stem(), kind), 0..3).prop_map(move |v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (s, kind))| Device { name: ident(format!("{prefix}{s}_{i}")), kind, span: None })
            .collect()
    })
}

pub fn end() -> impl Strategy<Value = ConnectionEnd> {
    prop::collection::vec(stem(), 1..3).prop_map(|v| ConnectionEnd::new(v.into_iter().map(ident).collect()))
}

pub fn connections() -> impl Strategy<Value = Vec<Connection>> {
    prop::collection::vec((end(), end(), any::<bool>(), prop::option::of(text())), 0..3).prop_map(|v| {
        v.into_iter()
            .map(|(from, to, directed, protocol)| Connection {
                from,
                to,
                arrow: if directed { Arrow::Directed } else { Arrow::Abstract },
                protocol,
                span: None,
            })
            .collect()
    })
}

pub fn specification() -> impl Strategy<Value = Specification> {
    (
        stem(),
        prop::collection::vec((interfaces(), annotations()), 0..4),
        prop::collection::vec((devices("S"), devices("A")), 0..3),
        connections(),
    )
        .prop_map(|(name, roles, robots, connections)| {
            let mut s = Specification::new(ident(name));
            s.roles = roles
                .into_iter()
                .enumerate()
                .map(|(i, (interfaces, annotations))| ComponentRole {
                    name: ident(format!("Role_{i}")),
                    interfaces,
                    annotations,
                    span: None,
                })
                .collect();
            s.robots = robots
                .into_iter()
                .enumerate()
                .map(|(i, (sensors, actuators))| ConceptRobot {
                    name: ident(format!("Bot_{i}")),
                    sensors,
                    actuators,
                    span: None,
                })
                .collect();
            s.connections = connections;
            s
        })
}

pub fn vms() -> impl Strategy<Value = Vec<VirtualMachine>> {
    prop::collection::vec(
        (prop::option::of(text()), 1u32..64, 1u64..100_000, prop::option::of(text())),
        0..4,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (os, cpu_cores, ram_mb, subnet))| VirtualMachine {
                name: ident(format!("VM_{i}")),
                os,
                cpu_cores,
                ram_mb,
                subnet,
                span: None,
            })
            .collect()
    })
}

pub fn configuration() -> impl Strategy<Value = Configuration> {
    (
        stem(),
        stem(),
        prop::collection::vec((text(), stem(), devices("S"), devices("A")), 0..2),
        vms(),
        prop::collection::vec((any::<bool>(), stem(), stem(), interfaces(), annotations()), 0..4),
        connections(),
    )
        .prop_map(|(name, implements, robots, vms, impls, connections)| {
            let mut c = Configuration::new(ident(name), ident(implements));
            c.robots = robots
                .into_iter()
                .enumerate()
                .map(|(i, (model, realizes, sensors, actuators))| RobotModel {
                    name: ident(format!("R_{i}")),
                    model,
                    realizes: ident(realizes),
                    sensors,
                    actuators,
                    span: None,
                })
                .collect();
            c.vms = vms;
            c.impls = impls
                .into_iter()
                .enumerate()
                .map(|(i, (service, realizes, host, interfaces, annotations))| ComponentImplementation {
                    name: ident(format!("Impl_{i}")),
                    variant: if service { Variant::WebService } else { Variant::ComponentClass },
                    realizes: ident(realizes),
                    interfaces,
                    host: ident(host),
                    annotations,
                    span: None,
                })
                .collect();
            c.connections = connections;
            c
        })
}

pub fn cloud(name: &'static str) -> impl Strategy<Value = CloudDescription> {
    (
        any::<bool>(),
        any::<bool>(),
        prop::collection::vec((1u32..64, 1u64..100_000), 0..4),
    )
        .prop_map(move |(sdn, pack, machines)| CloudDescription {
            name: ident(name.into()),
            network: if sdn { Network::Sdn } else { Network::Flat },
            scheduler: if pack { SchedulingPolicy::Pack } else { SchedulingPolicy::Spread },
            machines: machines
                .into_iter()
                .enumerate()
                .map(|(i, (cpu_cores, ram_mb))| PhysicalMachine {
                    name: ident(format!("PM_{i}")),
                    cpu_cores,
                    ram_mb,
                    span: None,
                })
                .collect(),
            span: None,
        })
}

pub fn assembly() -> impl Strategy<Value = Assembly> {
    (
        stem(),
        stem(),
        prop::collection::vec(cloud("K"), 0..2),
        prop::collection::vec((stem(), stem(), stem()), 0..3),
        prop::collection::vec((stem(), any::<bool>()), 0..3),
    )
        .prop_map(|(name, deploys, clouds, placements, instances)| {
            let mut a = Assembly::new(ident(name), ident(deploys));
            a.clouds = clouds
                .into_iter()
                .enumerate()
                .map(|(i, mut c)| {
                    c.name = ident(format!("Cloud_{i}"));
                    c
                })
                .collect();
            a.placements = placements
                .into_iter()
                .enumerate()
                .map(|(i, (_, machine, cloud))| VmPlacement {
                    vm: ident(format!("VM_{i}")),
                    machine: ident(machine),
                    cloud: ident(cloud),
                    span: None,
                })
                .collect();
            a.instances = instances
                .into_iter()
                .enumerate()
                .map(|(i, (of, failed))| ComponentInstance {
                    name: ident(format!("inst_{i}")),
                    of: ident(of),
                    state: if failed { InstanceState::Failed } else { InstanceState::Running },
                    span: None,
                })
                .collect();
            a
        })
}

pub fn document() -> impl Strategy<Value = Document> {
    prop_oneof![
        specification().prop_map(Document::from),
        configuration().prop_map(Document::from),
        assembly().prop_map(Document::from),
        cloud("Standalone").prop_map(Document::from),
    ]
}

pub fn plannable(vm_ram: &[u64], subnets: &[Option<&str>]) -> Configuration {
    let mut c = Configuration::new(ident("Gen".into()), ident("Spec".into()));
    for (i, &ram_mb) in vm_ram.iter().enumerate() {
        let name = ident(format!("VM_{i}"));
        c.vms.push(VirtualMachine {
            name: name.clone(),
            os: Some("linux".into()),
            cpu_cores: 1,
            ram_mb,
            subnet: subnets.get(i).copied().flatten().map(String::from),
            span: None,
        });
        c.impls.push(ComponentImplementation {
            name: ident(format!("Impl_{i}")),
            variant: Variant::WebService,
            realizes: ident(format!("Role_{i}")),
            interfaces: Vec::new(),
            host: name,
            annotations: Annotations::new(),
            span: None,
        });
    }
    c
}

pub fn cloud_of(machine_ram: &[u64], network: Network) -> CloudDescription {
    CloudDescription {
        name: ident("K".into()),
        network,
        scheduler: SchedulingPolicy::Spread,
        machines: machine_ram
            .iter()
            .enumerate()
            .map(|(i, &ram_mb)| PhysicalMachine { name: ident(format!("PM_{i}")), cpu_cores: 8, ram_mb, span: None })
            .collect(),
        span: None,
    }
}

/// Independent feasibility oracle: tries every assignment of VMs to machines.
pub fn some_assignment_fits(vms: &[u64], machines: &[u64]) -> bool {
    fn go(vms: &[u64], free: &mut [u64]) -> bool {
        let Some((&first, rest)) = vms.split_first() else { return true };
        for i in 0..free.len() {
            if free[i] >= first {
                free[i] -= first;
                let ok = go(rest, free);
                free[i] += first;
                if ok {
                    return true;
                }
            }
        }
        false
    }
    go(vms, &mut machines.to_vec())
}

pub fn policy() -> impl Strategy<Value = SchedulingPolicy> {
    prop_oneof![Just(SchedulingPolicy::Spread), Just(SchedulingPolicy::Pack)]
}

pub fn repo_entry(i: usize, ifaces: &[(u8, bool)], tags: &[u8], footprint: Option<u64>) -> RepositoryEntry {
    RepositoryEntry {
        name: ident(format!("E_{i}")),
        variant: if i.is_multiple_of(2) { Variant::ComponentClass } else { Variant::WebService },
        interfaces: ifaces.iter().map(|&(n, p)| iface(n, p)).collect::<BTreeSet<_>>().into_iter().collect(),
        os_requirement: None,
        footprint_mb: footprint,
        tags: tags.iter().map(|t| format!("tag{t}")).collect(),
    }
}

pub fn iface(n: u8, provided: bool) -> InterfaceRef {
    let name = ident(format!("I{n}"));
    if provided {
        InterfaceRef::provided(name)
    } else {
        InterfaceRef::required(name)
    }
}

pub fn entries() -> impl Strategy<Value = Vec<RepositoryEntry>> {
    prop::collection::vec(
        (
            prop::collection::vec((0u8..5, any::<bool>()), 0..6),
            prop::collection::vec(0u8..4, 0..3),
            prop::option::of(1u64..500),
        ),
        0..8,
    )
    .prop_map(|v| v.iter().enumerate().map(|(i, (f, t, fp))| repo_entry(i, f, t, *fp)).collect())
}

pub fn role_of(ifaces: &[(u8, bool)], prefer: &[u8]) -> ComponentRole {
    let mut annotations = Annotations::new();
    if !prefer.is_empty() {
        let tags: Vec<String> = prefer.iter().map(|t| format!("tag{t}")).collect();
        annotations.insert("prefer".into(), tags.join(","));
    }
    ComponentRole {
        name: ident("Wanted".into()),
        interfaces: ifaces.iter().map(|&(n, p)| iface(n, p)).collect::<BTreeSet<_>>().into_iter().collect(),
        annotations,
        span: None,
    }
}


/// parse(format(doc)) gives back `doc`, and formatting is a fixed point.
pub fn round_trip(doc: &Document) -> Result<(), TestCaseError> {
    let text = format(doc);
    let back = parse(&text, "gen.crala");
    prop_assert!(back.diagnostics.is_empty(), "{:?}\n{}", back.diagnostics, text);
    prop_assert!(!back.partial);
    prop_assert_eq!(back.documents.len(), 1);
    prop_assert_eq!(back.documents[0].without_spans(), doc.without_spans());
    prop_assert_eq!(format(&back.documents[0]), text);
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PlanCase {
    pub vm_ram: Vec<u64>,
    pub machine_ram: Vec<u64>,
    pub subnets: Vec<Option<usize>>,
    pub sdn: bool,
    pub policy: SchedulingPolicy,
}

pub const SUBNETS: [&str; 3] = ["10.0.0.0/24", "10.0.1.0/24", "10.0.2.0/24"];

pub fn plan_case() -> impl Strategy<Value = PlanCase> {
    (
        prop::collection::vec(1u64..4096, 0..6),
        prop::collection::vec(1u64..8192, 0..5),
        prop::collection::vec(prop::option::of(0usize..3), 6),
        any::<bool>(),
        policy(),
    )
        .prop_map(|(vm_ram, machine_ram, subnets, sdn, policy)| PlanCase { vm_ram, machine_ram, subnets, sdn, policy })
}

/// Any plan the planner returns is a valid deployment of its configuration;
/// every refusal is justified.
pub fn planned_assembly_is_valid(case: &PlanCase) -> Result<(), TestCaseError> {
    let subnets: Vec<Option<&str>> = case.subnets.iter().map(|c| c.map(|i| SUBNETS[i])).collect();
    let config = plannable(&case.vm_ram, &subnets);
    let network = if case.sdn { Network::Sdn } else { Network::Flat };
    let cloud = cloud_of(&case.machine_ram, network);
    match plan_deployment(&config, &cloud, case.policy) {
        Ok(ass) => {
            let diags = validate_assembly(&ass, &config);
            prop_assert!(!has_errors(&diags), "{:?}", diags);
            let report = check_assembly_deploys_config(&ass, &config).unwrap();
            prop_assert!(report.ok, "{:?}", report.diagnostics);
            prop_assert_eq!(ass.clouds[0].scheduler, case.policy);
        }
        Err(PlanError::NoMachines { .. }) => prop_assert!(case.machine_ram.is_empty()),
        Err(PlanError::FlatNetworkConflict { subnets, .. }) => {
            prop_assert!(!case.sdn);
            prop_assert!(subnets.len() > 1);
        }
        Err(PlanError::InsufficientCapacity { vm, ram_mb }) => {
            prop_assert_eq!(config.vm(vm.as_str()).unwrap().ram_mb, ram_mb);
            // Everything fitting on the smallest machine can never fail.
            let smallest = case.machine_ram.iter().copied().min().unwrap();
            prop_assert!(case.vm_ram.iter().sum::<u64>() > smallest);
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MatchCase {
    pub repo: Vec<RepositoryEntry>,
    pub role: Vec<(u8, bool)>,
    pub prefer: Vec<u8>,
    pub drop: prop::sample::Index,
}

pub fn match_case() -> impl Strategy<Value = MatchCase> {
    (
        entries(),
        prop::collection::vec((0u8..5, any::<bool>()), 0..4),
        prop::collection::vec(0u8..4, 0..3),
        any::<prop::sample::Index>(),
    )
        .prop_map(|(repo, role, prefer, drop)| MatchCase { repo, role, prefer, drop })
}

/// Every candidate offers all the role's interfaces, every entry is either
/// a candidate or a rejection, and the ranking follows the tie-break.
pub fn matching_is_sound(case: &MatchCase) -> Result<(), TestCaseError> {
    let role = role_of(&case.role, &case.prefer);
    let repo = Repository::new(case.repo.clone()).unwrap();
    let result = match_role(&role, &repo, &Constraints::new());
    let wanted: BTreeSet<&InterfaceRef> = role.interfaces.iter().collect();
    for c in &result.candidates {
        let have: BTreeSet<&InterfaceRef> = repo.get(c.entry.as_str()).unwrap().interfaces.iter().collect();
        prop_assert!(wanted.is_subset(&have));
        prop_assert!(c.score.numerator <= c.score.denominator);
    }
    for r in &result.rejected {
        let have: BTreeSet<&InterfaceRef> = repo.get(r.entry.as_str()).unwrap().interfaces.iter().collect();
        prop_assert!(!wanted.is_subset(&have));
    }
    prop_assert_eq!(result.candidates.len() + result.rejected.len(), repo.len());
    for w in result.candidates.windows(2) {
        prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].entry < w[1].entry));
    }
    Ok(())
}

/// Dropping an interface from the role never loses a candidate.
pub fn weaker_role_matches_more(case: &MatchCase) -> Result<(), TestCaseError> {
    let full = role_of(&case.role, &[]);
    if full.interfaces.is_empty() {
        return Ok(());
    }
    let mut weaker = full.clone();
    weaker.interfaces.remove(case.drop.index(weaker.interfaces.len()));
    let repo = Repository::new(case.repo.clone()).unwrap();
    let names = |r: &ComponentRole| -> BTreeSet<String> {
        match_role(r, &repo, &Constraints::new()).candidates.iter().map(|c| c.entry.as_str().to_string()).collect()
    };
    prop_assert!(names(&full).is_subset(&names(&weaker)));
    Ok(())
}
