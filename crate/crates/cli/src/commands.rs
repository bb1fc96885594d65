//! Subcommands and their exit-code contract: 0 success, 1 diagnostics with
//! errors, 2 usage or IO error.

use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use crala_core::matchmaker::{match_role, Candidate, Constraints, MatchResult, Rejection};
use crala_core::planner::{
    evaluate_metrics, plan_deployment, simulate_failure, DeploymentMetrics, FailureEvent, ImpactReport, PlanError,
};
use crala_core::refine::{build_variability_graph, Binding};
use crala_core::syntax::format;
use crala_core::validate::validate_configuration;
use crala_core::workspace::{Element, LinkKind, ResolveError};
use crala_core::{
    build_workspace, diag, Assembly, CloudDescription, Configuration, Diagnostic, Document, InterfaceRef,
    SchedulingPolicy, Workspace,
};
use serde::Serialize;

use crate::dot::to_dot;
use crate::load::{load_files, Loaded};
use crate::pipeline::check;
use crate::render::{self, Color, DiagnosticView};
use crate::repository::load_repository;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERRORS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Everything a command produces; `main` prints it and exits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutcome {
    fn usage(msg: impl std::fmt::Display) -> Self {
        CommandOutcome { exit_code: EXIT_USAGE, stdout: String::new(), stderr: format!("error: {msg}\n") }
    }
}

#[derive(Debug, Parser)]
#[command(name = "crala", version, about = "Check, graph, match, plan and simulate cloud robotic architectures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Policy {
    Spread,
    Pack,
}

impl From<Policy> for SchedulingPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Spread => SchedulingPolicy::Spread,
            Policy::Pack => SchedulingPolicy::Pack,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse, validate and run every refinement check over a set of files.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Emit the variability graph as Graphviz DOT.
    Graph {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Write the graph here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also draw role -> implementation -> instance chains.
        #[arg(long)]
        micro: bool,
    },
    /// Rank repository entries that can realize a role.
    Match {
        spec: PathBuf,
        repository: PathBuf,
        /// Role name, optionally qualified as `Spec.Role`.
        #[arg(long)]
        role: String,
        /// Extra requirement `key=value`; repeatable.
        #[arg(long = "constraint", value_parser = key_value)]
        constraints: Vec<(String, String)>,
        #[arg(long)]
        json: bool,
    },
    /// Derive an assembly by placing a configuration's VMs on a cloud.
    Plan {
        config: PathBuf,
        cloud: PathBuf,
        /// Defaults to the scheduler declared by the cloud.
        #[arg(long, value_enum)]
        policy: Option<Policy>,
        /// Write the assembly here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Report what a VM or physical machine failure takes down.
    Simulate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// VM or physical machine name.
        #[arg(long)]
        fail: String,
        /// Assembly to use when the files declare several.
        #[arg(long)]
        assembly: Option<String>,
        #[arg(long)]
        json: bool,
    },
}

fn key_value(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(format!("expected KEY=VALUE, got `{s}`")),
    }
}

/// Runs with the colour setting taken from `CRALA_COLOR`.
pub fn run<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let color = match std::env::var("CRALA_COLOR").as_deref() {
        Err(_) | Ok("auto") => {
            if std::io::stderr().is_terminal() {
                Color::Always
            } else {
                Color::Never
            }
        }
        Ok("never") => Color::Never,
        Ok(other) => return CommandOutcome::usage(format!("CRALA_COLOR must be `never` or `auto`, not `{other}`")),
    };
    run_with(args, color)
}

pub fn run_with<I, T>(args: I, color: Color) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutcome { exit_code: EXIT_USAGE, stdout: String::new(), stderr: text }
            } else {
                CommandOutcome { exit_code: EXIT_OK, stdout: text, stderr: String::new() }
            };
        }
    };
    match cli.command {
        Command::Check { files, json } => cmd_check(&files, json, color),
        Command::Graph { files, out, micro } => cmd_graph(&files, out.as_deref(), micro, color),
        Command::Match { spec, repository, role, constraints, json } => {
            cmd_match(&spec, &repository, &role, constraints.into_iter().collect(), json, color)
        }
        Command::Plan { config, cloud, policy, out, json } => {
            cmd_plan(&config, &cloud, policy.map(Into::into), out.as_deref(), json, color)
        }
        Command::Simulate { files, fail, assembly, json } => {
            cmd_simulate(&files, &fail, assembly.as_deref(), json, color)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn load(files: &[PathBuf]) -> Result<Loaded, CommandOutcome> {
    load_files(files).map_err(CommandOutcome::usage)
}

/// Stops with exit 1 when parsing failed.
fn parsed(files: &[PathBuf], color: Color) -> Result<Loaded, CommandOutcome> {
    let loaded = load(files)?;
    if loaded.has_errors() {
        return Err(CommandOutcome {
            exit_code: EXIT_ERRORS,
            stdout: String::new(),
            stderr: render::human(&loaded.diagnostics, &loaded.sources, color),
        });
    }
    Ok(loaded)
}

fn failed(diags: &[Diagnostic], loaded: &Loaded, color: Color) -> CommandOutcome {
    CommandOutcome {
        exit_code: EXIT_ERRORS,
        stdout: String::new(),
        stderr: render::human(diags, &loaded.sources, color),
    }
}

#[derive(Serialize)]
struct RefinementView<'a> {
    kind: LinkKind,
    child: &'a str,
    parent: &'a str,
    ok: bool,
    bindings: &'a [Binding],
}

#[derive(Serialize)]
struct CheckView<'a> {
    ok: bool,
    files: Vec<&'a str>,
    errors: usize,
    warnings: usize,
    diagnostics: Vec<DiagnosticView>,
    refinements: Vec<RefinementView<'a>>,
}

pub fn cmd_check(files: &[PathBuf], json: bool, color: Color) -> CommandOutcome {
    let loaded = match load(files) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let report = check(loaded.documents.clone(), &loaded.diagnostics);
    let (errors, warnings) = render::counts(&report.diagnostics);
    let stdout = if json {
        to_json(&CheckView {
            ok: errors == 0,
            files: loaded.sources.keys().map(String::as_str).collect(),
            errors,
            warnings,
            diagnostics: report.diagnostics.iter().map(|d| render::view(d, &loaded.sources)).collect(),
            refinements: report
                .refinements
                .iter()
                .map(|(l, r)| RefinementView {
                    kind: l.kind,
                    child: l.child.as_str(),
                    parent: l.parent.as_str(),
                    ok: r.ok,
                    bindings: &r.bindings,
                })
                .collect(),
        })
    } else {
        format!(
            "checked {} file{}: {errors} error{}, {warnings} warning{}\n",
            files.len(),
            plural(files.len()),
            plural(errors),
            plural(warnings)
        )
    };
    CommandOutcome {
        exit_code: if errors > 0 { EXIT_ERRORS } else { EXIT_OK },
        stdout,
        stderr: render::human(&report.diagnostics, &loaded.sources, color),
    }
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        ""
    } else {
        "s"
    }
}

pub fn cmd_graph(files: &[PathBuf], out: Option<&Path>, micro: bool, color: Color) -> CommandOutcome {
    let loaded = match parsed(files, color) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let ws = build_workspace(loaded.documents.clone());
    if diag::has_errors(ws.diagnostics()) {
        return failed(ws.diagnostics(), &loaded, color);
    }
    let dot = to_dot(&build_variability_graph(&ws), micro);
    let stderr = render::human(ws.diagnostics(), &loaded.sources, color);
    match out {
        Some(path) => match fs::write(path, &dot) {
            Ok(()) => CommandOutcome { exit_code: EXIT_OK, stdout: String::new(), stderr },
            Err(e) => CommandOutcome::usage(format!("cannot write `{}`: {e}", path.display())),
        },
        None => CommandOutcome { exit_code: EXIT_OK, stdout: dot, stderr },
    }
}

#[derive(Serialize)]
struct ScoreView {
    value: f64,
    exact: String,
}

#[derive(Serialize)]
struct CandidateView<'a> {
    entry: &'a str,
    variant: &'static str,
    score: ScoreView,
    matched: &'a [InterfaceRef],
    surplus: &'a [InterfaceRef],
    preferred_tags: &'a [String],
}

#[derive(Serialize)]
struct MatchView<'a> {
    role: &'a str,
    constraints: &'a Constraints,
    candidates: Vec<CandidateView<'a>>,
    rejected: &'a [Rejection],
}

fn exact(c: &Candidate) -> String {
    let (n, d) = (c.score.numerator, c.score.denominator);
    let g = gcd(n, d).max(1);
    if n == d {
        "1".into()
    } else {
        format!("{}/{}", n / g, d / g)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn interfaces(v: &[InterfaceRef]) -> String {
    if v.is_empty() {
        "-".into()
    } else {
        v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
    }
}

fn match_table(m: &MatchResult) -> String {
    let mut out = format!(
        "role {}: {} candidate{}, {} rejected\n",
        m.role,
        m.candidates.len(),
        plural(m.candidates.len()),
        m.rejected.len()
    );
    if !m.candidates.is_empty() {
        let width = m.candidates.iter().map(|c| c.entry.as_str().len()).max().unwrap_or(0).max(5);
        out.push_str(&format!("  rank  score  {:width$}  {:15}  surplus\n", "entry", "variant"));
        for (i, c) in m.candidates.iter().enumerate() {
            out.push_str(&format!(
                "  {:<4}  {:<5}  {:width$}  {:15}  {}\n",
                i + 1,
                exact(c),
                c.entry.as_str(),
                c.variant.as_str(),
                interfaces(&c.surplus)
            ));
        }
    }
    for r in &m.rejected {
        let mut why = Vec::new();
        if !r.missing.is_empty() {
            why.push(format!("missing {}", interfaces(&r.missing)));
        }
        if !r.failed_constraints.is_empty() {
            why.push(format!("fails {}", r.failed_constraints.join(", ")));
        }
        out.push_str(&format!("  rejected {}: {}\n", r.entry, why.join("; ")));
    }
    out
}

fn resolve_role<'a>(ws: &'a Workspace, name: &str) -> Result<&'a crala_core::ComponentRole, String> {
    let path: Vec<&str> = name.split('.').collect();
    match ws.resolve(&path) {
        Ok(Element::Role(r)) => Ok(r),
        Ok(other) => Err(format!("`{name}` is a {}, not a role", other.kind())),
        Err(ResolveError::NotFound) => Err(format!("no role named `{name}`")),
        Err(e @ ResolveError::Ambiguous(_)) => Err(format!("role `{name}`: {e}")),
    }
}

pub fn cmd_match(
    spec: &Path,
    repository: &Path,
    role: &str,
    constraints: Constraints,
    json: bool,
    color: Color,
) -> CommandOutcome {
    let loaded = match parsed(&[spec.to_path_buf()], color) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let ws = build_workspace(loaded.documents.clone());
    let role = match resolve_role(&ws, role) {
        Ok(r) => r,
        Err(msg) => return CommandOutcome::usage(msg),
    };
    let text = match fs::read_to_string(repository) {
        Ok(t) => t,
        Err(e) => return CommandOutcome::usage(format!("cannot read `{}`: {e}", repository.display())),
    };
    let repo = match load_repository(&text) {
        Ok(r) => r,
        Err(e) => return CommandOutcome::usage(format!("{}: {e}", repository.display())),
    };
    let result = match_role(role, &repo, &constraints);
    let stdout = if json {
        to_json(&MatchView {
            role: result.role.as_str(),
            constraints: &constraints,
            candidates: result
                .candidates
                .iter()
                .map(|c| CandidateView {
                    entry: c.entry.as_str(),
                    variant: c.variant.as_str(),
                    score: ScoreView { value: c.score.as_f64(), exact: exact(c) },
                    matched: &c.matched,
                    surplus: &c.surplus,
                    preferred_tags: &c.preferred_tags,
                })
                .collect(),
            rejected: &result.rejected,
        })
    } else {
        match_table(&result)
    };
    CommandOutcome { exit_code: EXIT_OK, stdout, stderr: String::new() }
}

/// The single document of one kind in a file.
fn single<'a, T>(
    loaded: &'a Loaded,
    path: &Path,
    what: &str,
    pick: impl Fn(&'a Document) -> Option<&'a T>,
) -> Result<&'a T, CommandOutcome> {
    let found: Vec<&T> = loaded.documents.iter().filter_map(pick).collect();
    match found.as_slice() {
        [one] => Ok(one),
        [] => Err(CommandOutcome::usage(format!("`{}` declares no {what}", path.display()))),
        _ => Err(CommandOutcome::usage(format!("`{}` declares several {what}s; keep one per file", path.display()))),
    }
}

#[derive(Serialize)]
struct PlacementView<'a> {
    vm: &'a str,
    machine: &'a str,
    cloud: &'a str,
}

#[derive(Serialize)]
struct PlanView<'a> {
    ok: bool,
    assembly: &'a str,
    policy: SchedulingPolicy,
    placements: Vec<PlacementView<'a>>,
    instances: Vec<&'a str>,
    metrics: &'a DeploymentMetrics,
    document: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    written_to: Option<String>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PlanErrorView<'a> {
    InsufficientCapacity { vm: &'a str, ram_mb: u64, message: String },
    FlatNetworkConflict { cloud: &'a str, subnets: &'a [String], message: String },
    NoMachines { cloud: &'a str, message: String },
}

#[derive(Serialize)]
struct PlanFailure<'a> {
    ok: bool,
    error: PlanErrorView<'a>,
}

fn plan_error_view(e: &PlanError) -> PlanErrorView<'_> {
    let message = e.to_string();
    match e {
        PlanError::InsufficientCapacity { vm, ram_mb } => {
            PlanErrorView::InsufficientCapacity { vm: vm.as_str(), ram_mb: *ram_mb, message }
        }
        PlanError::FlatNetworkConflict { cloud, subnets } => {
            PlanErrorView::FlatNetworkConflict { cloud: cloud.as_str(), subnets, message }
        }
        PlanError::NoMachines { cloud } => PlanErrorView::NoMachines { cloud: cloud.as_str(), message },
    }
}

fn metrics_summary(m: &DeploymentMetrics) -> String {
    format!(
        "colocated_vm_pairs: {}\nmax_single_vm_loss: {}\nmax_single_pm_loss: {}\nmin_ram_headroom_mb: {}\n",
        m.colocated_vm_pairs, m.max_single_vm_loss, m.max_single_pm_loss, m.min_ram_headroom_mb
    )
}

pub fn cmd_plan(
    config_path: &Path,
    cloud_path: &Path,
    policy: Option<SchedulingPolicy>,
    out: Option<&Path>,
    json: bool,
    color: Color,
) -> CommandOutcome {
    let loaded = match parsed(&[config_path.to_path_buf(), cloud_path.to_path_buf()], color) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let by_file = |path: &Path| {
        let label = crate::load::label(path);
        Loaded {
            documents: loaded
                .documents
                .iter()
                .filter(|d| d.span().is_some_and(|s| *s.file == *label))
                .cloned()
                .collect(),
            ..Loaded::default()
        }
    };
    let config_docs = by_file(config_path);
    let cloud_docs = by_file(cloud_path);
    let config: &Configuration = match single(&config_docs, config_path, "configuration", |d| match d {
        Document::Configuration(c) => Some(c),
        _ => None,
    }) {
        Ok(c) => c,
        Err(o) => return o,
    };
    let cloud: &CloudDescription = match single(&cloud_docs, cloud_path, "cloud", |d| match d {
        Document::Cloud(c) => Some(c),
        _ => None,
    }) {
        Ok(c) => c,
        Err(o) => return o,
    };
    let diags = validate_configuration(config);
    if diag::has_errors(&diags) {
        return failed(&diags, &loaded, color);
    }
    let warnings = render::human(&diags, &loaded.sources, color);
    let policy = policy.unwrap_or(cloud.scheduler);

    let ass = match plan_deployment(config, cloud, policy) {
        Ok(a) => a,
        Err(e) => {
            let stdout = if json { to_json(&PlanFailure { ok: false, error: plan_error_view(&e) }) } else { String::new() };
            return CommandOutcome { exit_code: EXIT_ERRORS, stdout, stderr: format!("{warnings}error: {e}\n") };
        }
    };
    let metrics = evaluate_metrics(&ass, config);
    let document = format(&Document::from(ass.clone()));
    if let Some(path) = out {
        if let Err(e) = fs::write(path, &document) {
            return CommandOutcome::usage(format!("cannot write `{}`: {e}", path.display()));
        }
    }
    let stdout = if json {
        to_json(&plan_view(&ass, policy, &metrics, &document, out))
    } else if out.is_some() {
        metrics_summary(&metrics)
    } else {
        // Metrics ride along as comments so the output still parses.
        let comments: String = metrics_summary(&metrics).lines().map(|l| format!("// {l}\n")).collect();
        format!("{document}{comments}")
    };
    CommandOutcome { exit_code: EXIT_OK, stdout, stderr: warnings }
}

fn plan_view<'a>(
    ass: &'a Assembly,
    policy: SchedulingPolicy,
    metrics: &'a DeploymentMetrics,
    document: &'a str,
    out: Option<&Path>,
) -> PlanView<'a> {
    PlanView {
        ok: true,
        assembly: ass.name.as_str(),
        policy,
        placements: ass
            .placements
            .iter()
            .map(|p| PlacementView { vm: p.vm.as_str(), machine: p.machine.as_str(), cloud: p.cloud.as_str() })
            .collect(),
        instances: ass.instances.iter().map(|i| i.name.as_str()).collect(),
        metrics,
        document,
        written_to: out.map(|p| p.display().to_string()),
    }
}

#[derive(Serialize)]
struct SimulateView<'a> {
    assembly: &'a str,
    configuration: &'a str,
    #[serde(flatten)]
    report: &'a ImpactReport,
}

fn names(v: &[crala_core::Ident]) -> String {
    if v.is_empty() {
        "none".into()
    } else {
        v.iter().map(|i| i.as_str()).collect::<Vec<_>>().join(", ")
    }
}

pub fn cmd_simulate(files: &[PathBuf], target: &str, assembly: Option<&str>, json: bool, color: Color) -> CommandOutcome {
    let loaded = match parsed(files, color) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let report = check(loaded.documents.clone(), &[]);
    let ws = &report.workspace;
    let ass = match assembly {
        Some(name) => match ws.assembly(name) {
            Some(a) => a,
            None => return CommandOutcome::usage(format!("no assembly named `{name}`")),
        },
        None => {
            let all: Vec<&Assembly> = ws.assemblies().collect();
            match all.as_slice() {
                [one] => *one,
                [] => return CommandOutcome::usage("the files declare no assembly"),
                _ => return CommandOutcome::usage("the files declare several assemblies; pick one with --assembly"),
            }
        }
    };
    let Some(config) = ws.configuration(ass.deploys.as_str()) else {
        return failed(&report.diagnostics, &loaded, color);
    };
    // Only problems with this assembly and its configuration block a run.
    let relevant: Vec<Diagnostic> = report
        .diagnostics
        .iter()
        .filter(|d| {
            d.span.is_none()
                || [ass.span.as_ref(), config.span.as_ref()]
                    .into_iter()
                    .flatten()
                    .any(|s| d.span.as_ref().is_some_and(|ds| ds.file == s.file && ds.start >= s.start && ds.end <= s.end))
        })
        .cloned()
        .collect();
    if diag::has_errors(&relevant) {
        return failed(&relevant, &loaded, color);
    }
    let event = match FailureEvent::for_target(target, ass, config) {
        Ok(e) => e,
        Err(e) => return CommandOutcome::usage(e),
    };
    let impact = match simulate_failure(ass, config, &event) {
        Ok(r) => r,
        Err(e) => return CommandOutcome::usage(e),
    };
    let stdout = if json {
        to_json(&SimulateView { assembly: ass.name.as_str(), configuration: config.name.as_str(), report: &impact })
    } else {
        let kind = match event.target_kind {
            crala_core::planner::TargetKind::Vm => "vm",
            crala_core::planner::TargetKind::PhysicalMachine => "machine",
        };
        format!(
            "failure of {kind} {} in {}\n  failed vms: {}\n  lost instances: {}\n  surviving instances: {}\n  lost implementations: {}\n  uncovered roles: {}\n",
            event.target,
            ass.name,
            names(&impact.failed_vms),
            names(&impact.lost_instances),
            names(&impact.surviving_instances),
            names(&impact.lost_implementations),
            names(&impact.uncovered_roles),
        )
    };
    CommandOutcome {
        exit_code: EXIT_OK,
        stdout,
        stderr: render::human(&relevant, &loaded.sources, color),
    }
}
