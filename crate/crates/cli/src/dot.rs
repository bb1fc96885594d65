//! Graphviz rendering of the variability graph.
//!
//! Documents are boxes grouped in one cluster per level; `implements` and
//! `deploys` links are dashed. With micro chains enabled, roles,
//! implementations and instances are added as ellipses in the cluster of
//! their level, joined by solid edges pointing towards the abstract side.

use std::collections::BTreeSet;
use std::fmt::Write;

use crala_core::refine::VariabilityGraph;
use crala_core::Level;

const LEVELS: [(Level, &str, &str); 3] = [
    (Level::Specification, "specification", "Specification"),
    (Level::Configuration, "configuration", "Configuration"),
    (Level::Assembly, "assembly", "Assembly"),
];

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn to_dot(graph: &VariabilityGraph, micro: bool) -> String {
    // Micro nodes per level, ordered by name.
    let mut elements: [BTreeSet<&str>; 3] = Default::default();
    let mut micro_edges: BTreeSet<(&str, &str, &str)> = BTreeSet::new();
    if micro {
        for chain in &graph.micro_edges {
            elements[0].insert(&chain.role);
            elements[1].insert(&chain.implementation);
            micro_edges.insert((&chain.implementation, &chain.role, "realizes"));
            if let Some(inst) = &chain.instance {
                elements[2].insert(inst);
                micro_edges.insert((inst, &chain.implementation, "instance of"));
            }
        }
    }

    let mut out = String::new();
    out.push_str("digraph variability {\n");
    out.push_str("  rankdir=BT;\n");
    out.push_str("  node [shape=box];\n");
    for (i, (level, id, label)) in LEVELS.iter().enumerate() {
        let mut docs: Vec<&str> =
            graph.nodes.iter().filter(|n| n.level == *level).map(|n| n.name.as_str()).collect();
        docs.sort_unstable();
        if docs.is_empty() && elements[i].is_empty() {
            continue;
        }
        let _ = writeln!(out, "  subgraph cluster_{id} {{");
        let _ = writeln!(out, "    label={};", quote(label));
        for d in docs {
            let _ = writeln!(out, "    {};", quote(d));
        }
        for e in &elements[i] {
            let _ = writeln!(out, "    {} [shape=ellipse];", quote(e));
        }
        out.push_str("  }\n");
    }

    let mut links: Vec<_> = graph.edges.iter().collect();
    links.sort_by(|a, b| (&a.child, &a.parent).cmp(&(&b.child, &b.parent)));
    for l in links {
        let _ = writeln!(
            out,
            "  {} -> {} [style=dashed, label={}];",
            quote(l.child.as_str()),
            quote(l.parent.as_str()),
            quote(l.kind.as_str())
        );
    }
    for (from, to, label) in micro_edges {
        let _ = writeln!(out, "  {} -> {} [style=solid, label={}];", quote(from), quote(to), quote(label));
    }
    out.push_str("}\n");
    out
}
