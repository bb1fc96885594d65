//! Deployment planning, failure simulation and deployment metrics.
//!
//! Only virtual machines are placed; implementations hosted on robots stay
//! on their robot. Placement considers memory only.
//!
//! Both policies visit VMs by descending `ram_mb`, ties broken by name.
//! `spread` puts each VM on the machine with the most free memory that can
//! hold it (ties: declaration order), so equal machines fill round-robin.
//! `pack` is first-fit over machines in declaration order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::ident::Ident;
use crate::model::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanError {
    InsufficientCapacity { vm: Ident, ram_mb: u64 },
    /// The cloud has a flat network but the configuration asks for several
    /// subnets.
    FlatNetworkConflict { cloud: Ident, subnets: Vec<String> },
    NoMachines { cloud: Ident },
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::InsufficientCapacity { vm, ram_mb } => {
                write!(f, "insufficient capacity: no machine can hold vm `{vm}` ({ram_mb} MB)")
            }
            PlanError::FlatNetworkConflict { cloud, subnets } => write!(
                f,
                "cloud `{cloud}` has a flat network but the configuration uses subnets {}",
                subnets.join(", ")
            ),
            PlanError::NoMachines { cloud } => write!(f, "cloud `{cloud}` has no physical machine"),
        }
    }
}

/// Name given to a planned assembly: `<configuration>_<policy>`.
pub fn assembly_name(config: &Configuration, policy: SchedulingPolicy) -> Ident {
    Ident::new(format!("{}_{}", config.name, policy)).expect("identifier suffix keeps it valid")
}

/// Name given to the single instance of an implementation.
pub fn instance_name(imp: &Ident) -> Ident {
    Ident::new(format!("{imp}_1")).expect("identifier suffix keeps it valid")
}

pub fn plan_deployment(
    config: &Configuration,
    cloud: &CloudDescription,
    policy: SchedulingPolicy,
) -> Result<Assembly, PlanError> {
    if cloud.machines.is_empty() {
        return Err(PlanError::NoMachines { cloud: cloud.name.clone() });
    }
    if cloud.network == Network::Flat {
        let subnets: BTreeSet<&str> = config.vms.iter().filter_map(|v| v.subnet.as_deref()).collect();
        if subnets.len() > 1 {
            return Err(PlanError::FlatNetworkConflict {
                cloud: cloud.name.clone(),
                subnets: subnets.into_iter().map(String::from).collect(),
            });
        }
    }

    let mut order: Vec<&VirtualMachine> = config.vms.iter().collect();
    order.sort_by(|a, b| b.ram_mb.cmp(&a.ram_mb).then_with(|| a.name.cmp(&b.name)));

    let mut free: Vec<u64> = cloud.machines.iter().map(|m| m.ram_mb).collect();
    let mut placed: BTreeMap<&str, usize> = BTreeMap::new();
    for vm in order {
        let slot = match policy {
            SchedulingPolicy::Spread => (0..free.len())
                .filter(|&i| free[i] >= vm.ram_mb)
                .max_by(|&a, &b| free[a].cmp(&free[b]).then(b.cmp(&a))),
            SchedulingPolicy::Pack => (0..free.len()).find(|&i| free[i] >= vm.ram_mb),
        };
        let Some(i) = slot else {
            return Err(PlanError::InsufficientCapacity { vm: vm.name.clone(), ram_mb: vm.ram_mb });
        };
        free[i] -= vm.ram_mb;
        placed.insert(vm.name.as_str(), i);
    }

    let mut ass = Assembly::new(assembly_name(config, policy), config.name.clone());
    let mut deployed = cloud.clone();
    deployed.scheduler = policy;
    deployed.span = None;
    deployed.machines.iter_mut().for_each(|m| m.span = None);
    ass.clouds.push(deployed);
    // Placements follow the configuration's VM order.
    for vm in &config.vms {
        ass.placements.push(VmPlacement {
            vm: vm.name.clone(),
            machine: cloud.machines[placed[vm.name.as_str()]].name.clone(),
            cloud: cloud.name.clone(),
            span: None,
        });
    }
    for imp in &config.impls {
        ass.instances.push(ComponentInstance {
            name: instance_name(&imp.name),
            of: imp.name.clone(),
            state: InstanceState::Running,
            span: None,
        });
    }
    Ok(ass)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TargetKind {
    Vm,
    PhysicalMachine,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FailureEvent {
    pub target: Ident,
    pub target_kind: TargetKind,
}

impl FailureEvent {
    pub fn vm(name: Ident) -> Self {
        FailureEvent { target: name, target_kind: TargetKind::Vm }
    }

    pub fn machine(name: Ident) -> Self {
        FailureEvent { target: name, target_kind: TargetKind::PhysicalMachine }
    }

    /// Interprets a bare name as a VM of `config` or a machine of `ass`.
    pub fn for_target(name: &str, ass: &Assembly, config: &Configuration) -> Result<Self, SimulationError> {
        let is_vm = config.vm(name).is_some();
        let is_pm = ass.clouds.iter().any(|c| c.machine(name).is_some());
        let id = Ident::new(name).map_err(|_| SimulationError::UnknownTarget(name.into()))?;
        match (is_vm, is_pm) {
            (true, false) => Ok(FailureEvent::vm(id)),
            (false, true) => Ok(FailureEvent::machine(id)),
            (false, false) => Err(SimulationError::UnknownTarget(name.into())),
            (true, true) => Err(SimulationError::AmbiguousTarget(name.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimulationError {
    UnknownTarget(String),
    AmbiguousTarget(String),
}

impl fmt::Display for SimulationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimulationError::UnknownTarget(t) => write!(f, "unknown failure target `{t}`"),
            SimulationError::AmbiguousTarget(t) => write!(f, "`{t}` names both a vm and a machine"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ImpactReport {
    pub event: FailureEvent,
    pub failed_vms: Vec<Ident>,
    /// Running instances that go down.
    pub lost_instances: Vec<Ident>,
    pub surviving_instances: Vec<Ident>,
    /// Implementations that had a running instance before and none after.
    pub lost_implementations: Vec<Ident>,
    /// Roles that lose their last running realization.
    pub uncovered_roles: Vec<Ident>,
}

/// Fails a VM, or a physical machine together with every VM placed on it,
/// and reports which running instances, implementations and roles are lost.
pub fn simulate_failure(ass: &Assembly, config: &Configuration, event: &FailureEvent) -> Result<ImpactReport, SimulationError> {
    let unknown = || SimulationError::UnknownTarget(event.target.to_string());
    let failed_vms: Vec<Ident> = match event.target_kind {
        TargetKind::Vm => {
            config.vm(event.target.as_str()).ok_or_else(unknown)?;
            alloc::vec![event.target.clone()]
        }
        TargetKind::PhysicalMachine => {
            let clouds: Vec<&CloudDescription> =
                ass.clouds.iter().filter(|c| c.machine(event.target.as_str()).is_some()).collect();
            let cloud = match clouds.as_slice() {
                [] => return Err(unknown()),
                [c] => &c.name,
                _ => return Err(SimulationError::AmbiguousTarget(event.target.to_string())),
            };
            config
                .vms
                .iter()
                .filter(|vm| {
                    ass.placement_of(vm.name.as_str())
                        .is_some_and(|p| p.machine == event.target && &p.cloud == cloud)
                })
                .map(|vm| vm.name.clone())
                .collect()
        }
    };

    let hosted_on_failed = |of: &Ident| {
        config
            .implementation(of.as_str())
            .is_some_and(|imp| failed_vms.contains(&imp.host) && config.vm(imp.host.as_str()).is_some())
    };
    let running: Vec<&ComponentInstance> = ass.instances.iter().filter(|i| i.state == InstanceState::Running).collect();
    let (lost, surviving): (Vec<&ComponentInstance>, Vec<&ComponentInstance>) =
        running.iter().partition(|i| hosted_on_failed(&i.of));

    let alive_before: BTreeSet<&Ident> = running.iter().map(|i| &i.of).collect();
    let alive_after: BTreeSet<&Ident> = surviving.iter().map(|i| &i.of).collect();
    let lost_implementations: Vec<Ident> =
        config.impls.iter().map(|i| &i.name).filter(|n| alive_before.contains(n) && !alive_after.contains(n)).cloned().collect();

    let role_of = |n: &Ident| config.implementation(n.as_str()).map(|i| i.realizes.clone());
    let roles_before: BTreeSet<Ident> = alive_before.iter().filter_map(|n| role_of(n)).collect();
    let roles_after: BTreeSet<Ident> = alive_after.iter().filter_map(|n| role_of(n)).collect();
    let uncovered_roles = roles_before.difference(&roles_after).cloned().collect();

    Ok(ImpactReport {
        event: event.clone(),
        failed_vms,
        lost_instances: lost.iter().map(|i| i.name.clone()).collect(),
        surviving_instances: surviving.iter().map(|i| i.name.clone()).collect(),
        lost_implementations,
        uncovered_roles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DeploymentMetrics {
    /// Unordered VM pairs sharing a physical machine.
    pub colocated_vm_pairs: u64,
    /// Implementations lost by the worst single VM failure.
    pub max_single_vm_loss: u64,
    /// Implementations lost by the worst single machine failure.
    pub max_single_pm_loss: u64,
    /// Smallest `capacity - placed VM memory` over all machines; 0 without
    /// machines.
    pub min_ram_headroom_mb: i64,
}

pub fn evaluate_metrics(ass: &Assembly, config: &Configuration) -> DeploymentMetrics {
    let mut m = DeploymentMetrics::default();
    let mut headroom: Option<i64> = None;
    for cloud in &ass.clouds {
        for pm in &cloud.machines {
            let vms: Vec<&VirtualMachine> = config
                .vms
                .iter()
                .filter(|vm| {
                    ass.placement_of(vm.name.as_str())
                        .is_some_and(|p| p.cloud == cloud.name && p.machine == pm.name)
                })
                .collect();
            let k = vms.len() as u64;
            m.colocated_vm_pairs += k * k.saturating_sub(1) / 2;
            let used: u64 = vms.iter().map(|v| v.ram_mb).sum();
            let h = pm.ram_mb as i64 - used as i64;
            headroom = Some(headroom.map_or(h, |cur| cur.min(h)));
        }
    }
    m.min_ram_headroom_mb = headroom.unwrap_or(0);

    for vm in &config.vms {
        if let Ok(r) = simulate_failure(ass, config, &FailureEvent::vm(vm.name.clone())) {
            m.max_single_vm_loss = m.max_single_vm_loss.max(r.lost_implementations.len() as u64);
        }
    }
    for cloud in &ass.clouds {
        for pm in &cloud.machines {
            if let Ok(r) = simulate_failure(ass, config, &FailureEvent::machine(pm.name.clone())) {
                m.max_single_pm_loss = m.max_single_pm_loss.max(r.lost_implementations.len() as u64);
            }
        }
    }
    m
}
