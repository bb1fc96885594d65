//! Acceptance suite: one PASS/FAIL line per criterion, then a timing line.
//!
//! Runs without the libtest harness so the report is always printed. The
//! process exits non-zero if any criterion fails.

#[path = "../../core/tests/support/strategies.rs"]
mod strategies;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use crala_cli::load::{load_files, Loaded};
use crala_cli::pipeline::{check, CheckReport};
use crala_cli::render::Color;
use crala_cli::run_with;
use crala_core::diag::has_errors;
use crala_core::planner::{evaluate_metrics, plan_deployment, simulate_failure, FailureEvent, PlanError};
use crala_core::syntax::{format, parse};
use crala_core::validate::validate_assembly;
use crala_core::*;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

/// Generated cases for every property-based criterion.
const CASES: u32 = 1000;
/// Wall-clock limit for a single criterion.
const CRITERION_BUDGET: Duration = Duration::from_secs(1);
/// Wall-clock limit for the whole suite.
const SUITE_BUDGET: Duration = Duration::from_secs(10);
/// Colocated pairs expected from spread and pack on the two-machine lab.
const SPREAD_PAIRS: u64 = 0;
const PACK_PAIRS: u64 = 1;
/// Worst single-VM loss of the one-VM and two-VM deployments.
const SHARED_VM_LOSS: u64 = 2;
const SEPARATE_VM_LOSS: u64 = 1;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn reference(name: &str) -> String {
    read(&format!("reference/{name}.crala"))
}

fn reference_paths() -> Vec<PathBuf> {
    ["spec1", "config1", "config2", "ass1", "ass2"].iter().map(|n| fixtures().join(format!("reference/{n}.crala"))).collect()
}

fn full_check(sources: &[(&str, &str)]) -> CheckReport {
    let loaded = Loaded::from_sources(sources.iter().copied());
    check(loaded.documents, &loaded.diagnostics)
}

fn codes(report: &CheckReport) -> BTreeSet<&'static str> {
    report.diagnostics.iter().map(|d| d.code.as_str()).collect()
}

fn error_codes(report: &CheckReport) -> BTreeSet<&'static str> {
    report.diagnostics.iter().filter(|d| d.is_error()).map(|d| d.code.as_str()).collect()
}

fn count(report: &CheckReport, code: &str) -> usize {
    report.diagnostics.iter().filter(|d| d.code.as_str() == code).count()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn only<T>(docs: Vec<Document>, pick: impl Fn(Document) -> Option<T>) -> T {
    docs.into_iter().find_map(pick).expect("document of the requested level")
}

fn spec_of(src: &str) -> Specification {
    only(parse(src, "s.crala").documents, |d| match d {
        Document::Specification(s) => Some(s),
        _ => None,
    })
}

fn config_of(src: &str) -> Configuration {
    only(parse(src, "c.crala").documents, |d| match d {
        Document::Configuration(c) => Some(c),
        _ => None,
    })
}

fn assembly_of(src: &str) -> Assembly {
    only(parse(src, "a.crala").documents, |d| match d {
        Document::Assembly(a) => Some(a),
        _ => None,
    })
}

fn cloud_of_text(src: &str) -> CloudDescription {
    only(parse(src, "k.crala").documents, |d| match d {
        Document::Cloud(c) => Some(c),
        _ => None,
    })
}

fn runner() -> TestRunner {
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), proptest::test_runner::TestCaseError>,
) -> Result<(), String> {
    runner().run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn reference_chain() -> Outcome {
    let loaded = load_files(&reference_paths()).map_err(|e| e.to_string())?;
    let report = check(loaded.documents, &loaded.diagnostics);
    let errors = error_codes(&report);
    ensure(errors.is_empty(), || format!("errors {errors:?}"))?;

    let links: BTreeSet<(String, &str, String)> = report
        .refinements
        .iter()
        .map(|(l, _)| (l.child.to_string(), l.kind.as_str(), l.parent.to_string()))
        .collect();
    let expected: BTreeSet<(String, &str, String)> = [
        ("Config1", "implements", "Spec1"),
        ("Config2", "implements", "Spec1"),
        ("Ass1", "deploys", "Config1"),
        ("Ass2", "deploys", "Config1"),
    ]
    .iter()
    .map(|&(c, k, p)| (c.to_string(), k, p.to_string()))
    .collect();
    ensure(links == expected, || format!("links {links:?}"))?;
    let failed: Vec<_> = report.refinements.iter().filter(|(_, r)| !r.ok).map(|(l, _)| l.child.to_string()).collect();
    ensure(failed.is_empty(), || format!("refinement failed for {failed:?}"))?;

    let spec = spec_of(&reference("spec1"));
    let kinds: Vec<&str> = spec.robots.iter().flat_map(|r| r.sensors.iter().map(|s| s.kind.as_str())).collect();
    ensure(spec.roles.len() == 3 && spec.robots.len() == 1 && kinds == ["Camera"], || {
        format!("Spec1 has {} roles, {} robots, sensors {kinds:?}", spec.roles.len(), spec.robots.len())
    })?;
    let vms = |name: &str| config_of(&reference(name)).vms.len();
    ensure(vms("config1") == 2 && vms("config2") == 1, || "Config1/Config2 VM counts".into())?;
    let machines = |name: &str| -> usize {
        assembly_of(&reference(name)).placements.iter().map(|p| p.machine.to_string()).collect::<BTreeSet<_>>().len()
    };
    ensure(machines("ass1") == 2 && machines("ass2") == 1, || "Ass1/Ass2 machine counts".into())?;
    Ok(format!("5 documents, 0 errors, {} refinements hold", report.refinements.len()))
}

fn variability_graph() -> Outcome {
    let mut args: Vec<String> = vec!["crala".into(), "graph".into()];
    args.extend(reference_paths().iter().map(|p| p.display().to_string()));
    let first = run_with(args.iter().map(String::as_str), Color::Never);
    ensure(first.exit_code == 0, || first.stderr.clone())?;
    let second = run_with(args.iter().map(String::as_str), Color::Never);
    ensure(first.stdout == second.stdout, || "output differs between runs".into())?;

    let dot = &first.stdout;
    let nodes: BTreeSet<&str> = dot
        .lines()
        .map(str::trim)
        .filter(|l| l.starts_with('"') && !l.contains("->"))
        .map(|l| l.trim_end_matches(';').trim_matches('"'))
        .collect();
    let edges: BTreeSet<(&str, &str)> = dot
        .lines()
        .filter_map(|l| {
            let (from, rest) = l.trim().split_once(" -> ")?;
            let to = rest.split_whitespace().next()?;
            Some((from.trim_matches('"'), to.trim_matches('"')))
        })
        .collect();
    let want_nodes: BTreeSet<&str> = ["Spec1", "Config1", "Config2", "Ass1", "Ass2"].into();
    let want_edges: BTreeSet<(&str, &str)> =
        [("Config1", "Spec1"), ("Config2", "Spec1"), ("Ass1", "Config1"), ("Ass2", "Config1")].into();
    ensure(nodes == want_nodes, || format!("nodes {nodes:?}"))?;
    ensure(edges == want_edges, || format!("edges {edges:?}"))?;
    Ok("5 nodes, 4 edges, byte-identical across runs".into())
}

fn violation_corpus() -> Outcome {
    let dir = fixtures().join("violations");
    let mut seen = BTreeSet::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        let code = path.file_stem().unwrap().to_str().unwrap().to_string();
        let loaded = load_files(std::slice::from_ref(&path)).map_err(|e| e.to_string())?;
        let report = check(loaded.documents, &loaded.diagnostics);
        let got = codes(&report);
        ensure(got.len() == 1 && got.contains(code.as_str()), || format!("{code}: got {got:?}"))?;
        seen.insert(code);
    }
    let missing: Vec<&str> = Code::ALL.iter().map(|c| c.as_str()).filter(|c| !seen.contains(*c)).collect();
    ensure(missing.is_empty(), || format!("no fixture for {missing:?}"))?;
    Ok(format!("{} fixtures, each yields exactly its own code", seen.len()))
}

/// Roles of the specification that no implementation claims to realize.
fn unrealized_roles(spec: &Specification, config: &Configuration) -> BTreeSet<String> {
    let realized: BTreeSet<String> = config.impls.iter().map(|i| i.realizes.to_string()).collect();
    spec.roles.iter().map(|r| r.name.to_string()).filter(|r| !realized.contains(r)).collect()
}

/// Required device kinds missing from the robot model realizing each concept.
fn uncovered_kinds(spec: &Specification, config: &Configuration) -> Vec<String> {
    let mut missing = Vec::new();
    for concept in &spec.robots {
        let models: Vec<&RobotModel> = config.robots.iter().filter(|m| m.realizes == concept.name).collect();
        let offered = |pick: fn(&RobotModel) -> &Vec<Device>| -> Vec<String> {
            models.iter().flat_map(|m| pick(m).iter().map(|d| d.kind.clone())).collect()
        };
        let sensors = offered(|m| &m.sensors);
        let actuators = offered(|m| &m.actuators);
        missing.extend(concept.sensors.iter().filter(|d| !sensors.contains(&d.kind)).map(|d| d.kind.clone()));
        missing.extend(concept.actuators.iter().filter(|d| !actuators.contains(&d.kind)).map(|d| d.kind.clone()));
    }
    missing
}

/// Connections with a robot on one side and an implementation on the other.
fn robot_to_impl_links(config: &Configuration) -> usize {
    let robots: BTreeSet<String> = config.robots.iter().map(|r| r.name.to_string()).collect();
    let impls: BTreeSet<String> = config.impls.iter().map(|i| i.name.to_string()).collect();
    config
        .connections
        .iter()
        .filter(|c| {
            let (a, b) = (c.from.to_string(), c.to.to_string());
            (robots.contains(&a) && impls.contains(&b)) || (robots.contains(&b) && impls.contains(&a))
        })
        .count()
}

fn refinement_rules() -> Outcome {
    let spec_src = reference("spec1");
    let config1 = reference("config1");
    let spec = spec_of(&spec_src);

    let block = "  service PathPlanningService realizes PathPlanning on VM2 {\n    provides Path\n    requires Pose\n  }\n";
    let link = "  connect LocalisationService -> PathPlanningService via ROS\n";
    ensure(config1.contains(block) && config1.contains(link), || "Config1 fixture changed shape".into())?;
    let deleted = config1.replace(block, "").replace(link, "");
    let report = full_check(&[("spec1.crala", &spec_src), ("config1.crala", &deleted)]);
    let oracle = unrealized_roles(&spec, &config_of(&deleted));
    ensure(oracle.len() == 1 && oracle.contains("PathPlanning"), || format!("oracle {oracle:?}"))?;
    ensure(error_codes(&report) == BTreeSet::from(["E-REF-01"]) && count(&report, "E-REF-01") == oracle.len(), || {
        format!("deletion gave {:?}", codes(&report))
    })?;

    let lidar = config1.replace("sensor cam: Camera", "sensor cam: Lidar");
    let report = full_check(&[("spec1.crala", &spec_src), ("config1.crala", &lidar)]);
    let oracle = uncovered_kinds(&spec, &config_of(&lidar));
    ensure(oracle == ["Camera"], || format!("oracle {oracle:?}"))?;
    ensure(error_codes(&report) == BTreeSet::from(["E-REF-03"]) && count(&report, "E-REF-03") == oracle.len(), || {
        format!("sensor swap gave {:?}", codes(&report))
    })?;

    let extra = config1.replacen("  connect ", "  connect R1 ~ LocalisationService\n  connect ", 1);
    let report = full_check(&[("spec1.crala", &spec_src), ("config1.crala", &extra)]);
    let oracle = robot_to_impl_links(&config_of(&extra));
    ensure(oracle == 1, || format!("oracle {oracle}"))?;
    ensure(error_codes(&report) == BTreeSet::from(["E-CONN-03"]) && count(&report, "E-CONN-03") == oracle, || {
        format!("robot link gave {:?}", codes(&report))
    })?;
    Ok("E-REF-01, E-REF-03, E-CONN-03 each agree with their oracle".into())
}

fn scheduling_contrast() -> Outcome {
    let config = config_of(&reference("config1"));
    let lab = cloud_of_text(&read("clouds/lab.crala"));
    let pairs = |policy| -> Result<u64, String> {
        let ass = plan_deployment(&config, &lab, policy).map_err(|e| e.to_string())?;
        // Oracle: count VM pairs sharing a machine directly from the placements.
        let p = &ass.placements;
        let direct = (0..p.len())
            .flat_map(|i| (i + 1..p.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| p[i].machine == p[j].machine && p[i].cloud == p[j].cloud)
            .count() as u64;
        let reported = evaluate_metrics(&ass, &config).colocated_vm_pairs;
        ensure(direct == reported, || format!("metric {reported} but {direct} pairs share a machine"))?;
        Ok(reported)
    };
    let (spread, pack) = (pairs(SchedulingPolicy::Spread)?, pairs(SchedulingPolicy::Pack)?);
    ensure(spread == SPREAD_PAIRS && pack == PACK_PAIRS, || format!("spread {spread}, pack {pack}"))?;

    property("planned assemblies validate", strategies::plan_case(), |case| {
        strategies::planned_assembly_is_valid(&case)?;
        // The printed plan parses back and still validates.
        let subnets: Vec<Option<&str>> = case.subnets.iter().map(|c| c.map(|i| strategies::SUBNETS[i])).collect();
        let config = strategies::plannable(&case.vm_ram, &subnets);
        let network = if case.sdn { Network::Sdn } else { Network::Flat };
        if let Ok(ass) = plan_deployment(&config, &strategies::cloud_of(&case.machine_ram, network), case.policy) {
            let text = format(&Document::from(ass));
            let back = parse(&text, "plan.crala");
            proptest::prop_assert!(back.diagnostics.is_empty(), "{:?}", back.diagnostics);
            let Some(Document::Assembly(again)) = back.documents.into_iter().next() else {
                return Err(proptest::test_runner::TestCaseError::fail("not an assembly"));
            };
            let diags = validate_assembly(&again, &config);
            proptest::prop_assert!(!has_errors(&diags), "{:?}", diags);
        }
        Ok(())
    })?;
    Ok(format!("spread {spread}, pack {pack}; {CASES} generated plans validate"))
}

/// Oracle: the most implementations hosted on any single VM.
fn densest_vm(config: &Configuration) -> u64 {
    config.vms.iter().map(|vm| config.impls.iter().filter(|i| i.host == vm.name).count() as u64).max().unwrap_or(0)
}

fn reliability_ordering() -> Outcome {
    let lab = cloud_of_text(&read("clouds/lab.crala"));
    let mut losses = Vec::new();
    for name in ["config2", "config1"] {
        let config = config_of(&reference(name));
        let ass = plan_deployment(&config, &lab, SchedulingPolicy::Spread).map_err(|e| e.to_string())?;
        let metric = evaluate_metrics(&ass, &config).max_single_vm_loss;
        let mut enumerated = 0;
        for vm in &config.vms {
            let report = simulate_failure(&ass, &config, &FailureEvent::vm(vm.name.clone())).map_err(|e| e.to_string())?;
            enumerated = enumerated.max(report.lost_implementations.len() as u64);
        }
        let oracle = densest_vm(&config);
        ensure(metric == enumerated && metric == oracle, || {
            format!("{name}: metric {metric}, enumeration {enumerated}, oracle {oracle}")
        })?;
        losses.push(metric);
    }
    let (shared, separate) = (losses[0], losses[1]);
    ensure(shared == SHARED_VM_LOSS && separate == SEPARATE_VM_LOSS && shared > separate, || {
        format!("Config2 {shared}, Config1 {separate}")
    })?;
    Ok(format!("max_single_vm_loss Config2 {shared} > Config1 {separate}"))
}

fn flat_network_rule() -> Outcome {
    let spec = reference("spec1");
    let config = reference("config1");
    let split = config.replacen("subnet \"10.0.0.0/24\" }", "subnet \"10.0.1.0/24\" }", 2).replacen(
        "subnet \"10.0.1.0/24\" }",
        "subnet \"10.0.0.0/24\" }",
        1,
    );
    let parsed = config_of(&split);
    let subnets: BTreeSet<&str> = parsed.vms.iter().filter_map(|v| v.subnet.as_deref()).collect();
    ensure(subnets.len() == 2, || format!("subnets {subnets:?}"))?;

    let ass = reference("ass1");
    let flat = ass.replace("network sdn", "network flat");
    let report = full_check(&[("spec1.crala", &spec), ("config1.crala", &split), ("ass1.crala", &flat)]);
    ensure(codes(&report) == BTreeSet::from(["E-NET-01"]), || format!("flat gave {:?}", codes(&report)))?;
    let report = full_check(&[("spec1.crala", &spec), ("config1.crala", &split), ("ass1.crala", &ass)]);
    ensure(codes(&report).is_empty(), || format!("sdn gave {:?}", codes(&report)))?;

    let flat_cloud = cloud_of_text(&read("clouds/flat.crala"));
    let mut sdn_cloud = flat_cloud.clone();
    sdn_cloud.network = Network::Sdn;
    let refused = matches!(
        plan_deployment(&parsed, &flat_cloud, SchedulingPolicy::Spread),
        Err(PlanError::FlatNetworkConflict { .. })
    );
    ensure(refused, || "planner accepted two subnets on a flat cloud".into())?;
    ensure(plan_deployment(&parsed, &sdn_cloud, SchedulingPolicy::Spread).is_ok(), || "planner refused sdn".into())?;
    Ok("flat cloud rejected with E-NET-01, identical model on sdn passes".into())
}

fn round_trip_and_matching() -> Outcome {
    property("round trip", strategies::document(), |d| strategies::round_trip(&d))?;
    property("matching soundness", strategies::match_case(), |c| strategies::matching_is_sound(&c))?;
    property("matching monotonicity", strategies::match_case(), |c| strategies::weaker_role_matches_more(&c))?;
    Ok(format!("{CASES} documents round-trip; matching sound and monotone over {CASES} cases each"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("reference chain validates and refines", reference_chain),
        ("variability graph structure", variability_graph),
        ("violation corpus", violation_corpus),
        ("refinement rules against oracles", refinement_rules),
        ("scheduling contrast and plan validity", scheduling_contrast),
        ("reliability ordering", reliability_ordering),
        ("flat-network rule", flat_network_rule),
        ("round trip and matchmaking properties", round_trip_and_matching),
    ];
    let suite = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > CRITERION_BUDGET => Err(format!("{detail}; took {elapsed:.2?}, budget {CRITERION_BUDGET:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} ({elapsed:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why} ({elapsed:.2?})", i + 1);
            }
        }
    }
    let total = suite.elapsed();
    if total > SUITE_BUDGET {
        failed += 1;
        println!("FAIL suite time: {total:.2?}, budget {SUITE_BUDGET:?}");
    } else {
        println!("PASS suite time: {total:.2?}, budget {SUITE_BUDGET:?}");
    }
    println!("acceptance: {} of {} checks passed", criteria.len() + 1 - failed, criteria.len() + 1);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
