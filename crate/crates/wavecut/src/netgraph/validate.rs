//! Structural checks, automatic termination of open ports, cut validity, and
//! network reversal.
//!
//! A *cut* is valid when every directed path from any emitting site (declared
//! sources plus vacuum closures) to any absorbing site crosses it exactly
//! once. That definition is symmetric under reversal, so the same declared
//! cuts stay valid for backward propagation.

use std::collections::BTreeMap;

use super::model::{
    port_label, Component, ComponentKind, Edge, EdgeGroup, NetError, Network, PortDir,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureKind {
    /// Open input port, fed by a zero-amplitude vacuum source.
    VacuumSource,
    /// Open output port, drained by a virtual detector.
    VirtualDetector,
}

/// One port closure that [`normalize`] would add.
#[derive(Debug, Clone)]
pub struct AutoTermination {
    pub component: String,
    pub port: String,
    /// Name of the closure component (also the alias of its edge).
    pub closure: String,
    pub kind: ClosureKind,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
    pub auto_terminations: Vec<AutoTermination>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.iter().all(|i| i.severity != Severity::Error)
    }

    fn error(&mut self, message: impl Into<String>) {
        self.issues.push(Issue {
            severity: Severity::Error,
            message: message.into(),
        });
    }

    fn warning(&mut self, message: impl Into<String>) {
        self.issues.push(Issue {
            severity: Severity::Warning,
            message: message.into(),
        });
    }

    fn summary(&self) -> String {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Error)
            .map(|i| format!("  - {}", i.message))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Adjacency resolved per port: `in_edges[c][p]` / `out_edges[c][p]` hold the
/// edge index wired to that port, if any.
pub(crate) struct Adjacency {
    pub in_edges: Vec<Vec<Option<usize>>>,
    pub out_edges: Vec<Vec<Option<usize>>>,
}

pub(crate) fn adjacency(net: &Network) -> Adjacency {
    let mut in_edges: Vec<Vec<Option<usize>>> = net
        .components()
        .iter()
        .map(|c| vec![None; c.kind.inputs()])
        .collect();
    let mut out_edges: Vec<Vec<Option<usize>>> = net
        .components()
        .iter()
        .map(|c| vec![None; c.kind.outputs()])
        .collect();
    for (i, e) in net.edges().iter().enumerate() {
        out_edges[e.from][e.from_port] = Some(i);
        in_edges[e.to][e.to_port] = Some(i);
    }
    Adjacency { in_edges, out_edges }
}

/// Kahn topological order over components; `Err` on a directed cycle.
pub(crate) fn topo_order(net: &Network) -> Result<Vec<usize>, NetError> {
    let n = net.components().len();
    let mut indeg = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in net.edges() {
        indeg[e.to] += 1;
        succ[e.from].push(e.to);
    }
    let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(c) = queue.pop() {
        order.push(c);
        for &s in &succ[c] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                queue.push(s);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(NetError::Cyclic)
    }
}

fn closure_name(prefix: &str, comp: &str, port: &str, taken: &dyn Fn(&str) -> bool) -> String {
    let base = format!("__{}_{}_{}", prefix, comp, port);
    if !taken(&base) {
        return base;
    }
    let mut k = 2;
    loop {
        let name = format!("{}_{}", base, k);
        if !taken(&name) {
            return name;
        }
        k += 1;
    }
}

fn plan_closures(net: &Network) -> Vec<AutoTermination> {
    let adj = adjacency(net);
    let mut planned: Vec<AutoTermination> = Vec::new();
    let taken = |net: &Network, planned: &[AutoTermination], name: &str| {
        net.component_index(name).is_some() || planned.iter().any(|a| a.closure == name)
    };
    for (ci, comp) in net.components().iter().enumerate() {
        for (pi, slot) in adj.in_edges[ci].iter().enumerate() {
            if slot.is_none() {
                let port = port_label(PortDir::Input, pi, comp.kind.inputs());
                let closure = closure_name("vac", &comp.name, &port, &|n| {
                    taken(net, &planned, n)
                });
                planned.push(AutoTermination {
                    component: comp.name.clone(),
                    port,
                    closure,
                    kind: ClosureKind::VacuumSource,
                });
            }
        }
        for (pi, slot) in adj.out_edges[ci].iter().enumerate() {
            if slot.is_none() {
                let port = port_label(PortDir::Output, pi, comp.kind.outputs());
                let closure = closure_name("det", &comp.name, &port, &|n| {
                    taken(net, &planned, n)
                });
                planned.push(AutoTermination {
                    component: comp.name.clone(),
                    port,
                    closure,
                    kind: ClosureKind::VirtualDetector,
                });
            }
        }
    }
    planned
}

fn apply_closures(net: &Network, closures: &[AutoTermination]) -> Network {
    let mut out = net.clone();
    for c in closures {
        let peer = out.component_index(&c.component).expect("closure peer");
        let kind = match c.kind {
            ClosureKind::VacuumSource => ComponentKind::Source,
            ClosureKind::VirtualDetector => ComponentKind::Detector,
        };
        out.components.push(Component {
            name: c.closure.clone(),
            kind: kind.clone(),
            auto: true,
        });
        let idx = out.components.len() - 1;
        let peer_kind = &out.components[peer].kind;
        let edge = match c.kind {
            ClosureKind::VacuumSource => {
                let (_, p) = super::model::parse_port(peer_kind, &c.port).expect("closure port");
                Edge { from: idx, from_port: 0, to: peer, to_port: p, alias: Some(c.closure.clone()) }
            }
            ClosureKind::VirtualDetector => {
                let (_, p) = super::model::parse_port(peer_kind, &c.port).expect("closure port");
                Edge { from: peer, from_port: p, to: idx, to_port: 0, alias: Some(c.closure.clone()) }
            }
        };
        out.edges.push(edge);
        // Place the closure beside its peer so preset layouts stay usable.
        if let Some(&(x, y)) = out.meta.layout.get(&c.component) {
            let dy = match c.kind {
                ClosureKind::VacuumSource => -46.0,
                ClosureKind::VirtualDetector => 46.0,
            };
            out.meta.layout.insert(c.closure.clone(), (x - 34.0, y + dy));
        }
    }
    out
}

/// Suffix crossing counts for every edge, capped at 2, as 3-bit sets
/// (bit k set = some path from this edge onward crosses the cut k times,
/// counting the edge itself).
fn crossing_sets(net: &Network, order: &[usize], cut: &[usize]) -> Vec<u8> {
    let adj = adjacency(net);
    let in_cut: Vec<bool> = {
        let mut v = vec![false; net.edges().len()];
        for &e in cut {
            v[e] = true;
        }
        v
    };
    let mut sets = vec![0u8; net.edges().len()];
    // Walk components in reverse topological order so successors are done.
    for &c in order.iter().rev() {
        let downstream: u8 = if net.components()[c].kind.outputs() == 0 {
            0b001 // empty suffix: zero further crossings
        } else {
            adj.out_edges[c]
                .iter()
                .filter_map(|&o| o.map(|o| sets[o]))
                .fold(0u8, |acc, s| acc | s)
        };
        for &e in adj.in_edges[c].iter().flatten() {
            sets[e] = if in_cut[e] {
                // Shift every count up by one, capping at 2.
                ((downstream << 1) & 0b110) | (if downstream & 0b100 != 0 { 0b100 } else { 0 })
            } else {
                downstream
            };
        }
    }
    sets
}

/// Check one cut on a fully connected network. Returns `Err(message)` naming
/// a source whose paths miss or double-cross the cut.
fn check_cut(net: &Network, order: &[usize], group: &EdgeGroup) -> Result<(), String> {
    let mut cut = Vec::with_capacity(group.edges.len());
    for name in &group.edges {
        match net.resolve_edge(name) {
            Some(i) => cut.push(i),
            None => return Err(format!("cut `{}` references unknown edge `{}`", group.name, name)),
        }
    }
    let sets = crossing_sets(net, order, &cut);
    let adj = adjacency(net);
    for si in net.sources() {
        let Some(e0) = adj.out_edges[si][0] else { continue };
        if sets[e0] != 0b010 {
            let kinds = [
                (0b001, "misses the cut"),
                (0b100, "crosses it more than once"),
            ];
            let why = kinds
                .iter()
                .filter(|(bit, _)| sets[e0] & bit != 0)
                .map(|(_, msg)| *msg)
                .collect::<Vec<_>>()
                .join(" and ");
            return Err(format!(
                "cut `{}` is not a valid cross-section: some path from `{}` {}",
                group.name,
                net.components()[si].name,
                why
            ));
        }
    }
    Ok(())
}

fn check_channel(net: &Network, group: &EdgeGroup) -> Result<(), String> {
    let mut prev: Option<usize> = None;
    for name in &group.edges {
        let Some(i) = net.resolve_edge(name) else {
            return Err(format!(
                "channel `{}` references unknown edge `{}`",
                group.name, name
            ));
        };
        if let Some(p) = prev {
            if net.edges()[p].to != net.edges()[i].from {
                return Err(format!(
                    "channel `{}` is not contiguous at `{}`",
                    group.name, name
                ));
            }
        }
        prev = Some(i);
    }
    Ok(())
}

/// Validate a network without modifying it. Channel and cut references are
/// checked against the normalized form, so `__`-prefixed closure names are
/// legal in declarations.
pub fn validate(net: &Network) -> ValidationReport {
    let mut report = ValidationReport::default();

    // Port over-subscription (builder and parser prevent it; defend anyway).
    let mut seen_out: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut seen_in: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for e in net.edges() {
        if seen_out.insert((e.from, e.from_port), 1).is_some() {
            report.error(format!(
                "output port {}.{} drives more than one edge",
                net.components()[e.from].name,
                port_label(PortDir::Output, e.from_port, net.components()[e.from].kind.outputs())
            ));
        }
        if seen_in.insert((e.to, e.to_port), 1).is_some() {
            report.error(format!(
                "input port {}.{} receives more than one edge",
                net.components()[e.to].name,
                port_label(PortDir::Input, e.to_port, net.components()[e.to].kind.inputs())
            ));
        }
    }

    report.auto_terminations = plan_closures(net);

    if topo_order(net).is_err() {
        report.error("forward graph must be acyclic");
        return report;
    }

    if net.sources().is_empty() {
        report.warning("network declares no source".to_string());
    }
    if net.detectors().is_empty() {
        report.warning("network declares no detector".to_string());
    }

    if !report.ok() {
        return report;
    }

    let full = apply_closures(net, &report.auto_terminations);
    let order = topo_order(&full).expect("closure edges cannot create cycles");
    for ch in net.channels() {
        if let Err(msg) = check_channel(&full, ch) {
            report.error(msg);
        }
    }
    for cut in net.cuts() {
        if let Err(msg) = check_cut(&full, &order, cut) {
            report.error(msg);
        }
    }
    report
}

/// Validate and return the closed form of the network, with every open input
/// fed by a vacuum source and every open output drained by a virtual detector.
pub fn normalize(net: &Network) -> Result<Network, NetError> {
    let report = validate(net);
    if !report.ok() {
        return Err(NetError::Invalid(report.summary()));
    }
    Ok(apply_closures(net, &report.auto_terminations))
}

/// Reverse a network: every edge flips direction, detectors become backward
/// sources (the k-th detector is renamed `S<k><k>`), and emitting sites become
/// backward detectors (the k-th is renamed `D<k><k>`). Forward terminators
/// reverse into silent sources. All other components keep their name; their
/// scattering action is symmetric, so backward amplitudes are obtained by
/// running the ordinary propagation on the reversed network.
///
/// The rename table is recorded in `meta.site_map` as `(old, new)` pairs.
pub fn reverse(net: &Network) -> Result<Network, NetError> {
    let net = normalize(net)?;
    let n = net.components().len();

    let mut new_names: Vec<String> = net.components().iter().map(|c| c.name.clone()).collect();
    let taken = |names: &[String], cand: &str| names.iter().any(|n| n == cand);
    let rename = |names: &mut Vec<String>, idx: usize, stem: &str, k: usize| {
        let mut cand = format!("{}{}{}", stem, k, k);
        while taken(names, &cand) {
            cand.push('x');
        }
        names[idx] = cand;
    };
    for (k, di) in net.detectors().iter().enumerate() {
        rename(&mut new_names, *di, "S", k + 1);
    }
    for (k, si) in net.sources().iter().enumerate() {
        rename(&mut new_names, *si, "D", k + 1);
    }

    let mut components = Vec::with_capacity(n);
    for (i, c) in net.components().iter().enumerate() {
        let kind = match &c.kind {
            ComponentKind::Source => ComponentKind::Detector,
            ComponentKind::Detector => ComponentKind::Source,
            ComponentKind::Terminator => ComponentKind::Source,
            other => other.clone(),
        };
        components.push(Component {
            name: new_names[i].clone(),
            kind,
            auto: c.auto,
        });
    }

    // An input port at index p becomes the output port at index p, so flipped
    // edges keep their port indices.
    let edges: Vec<Edge> = net
        .edges()
        .iter()
        .map(|e| Edge {
            from: e.to,
            from_port: e.to_port,
            to: e.from,
            to_port: e.from_port,
            alias: e.alias.clone(),
        })
        .collect();

    let mut out = Network {
        components,
        edges,
        channels: Vec::new(),
        cuts: Vec::new(),
        meta: reversed_meta(&net, &new_names),
    };

    // Rewrite channel/cut references: aliases survive untouched; structural
    // names must be re-rendered against the flipped edge.
    let flipped_names: Vec<String> = (0..out.edges.len()).map(|i| out.edge_name(i)).collect();
    let rewrite = |group: &EdgeGroup| -> EdgeGroup {
        let edges = group
            .edges
            .iter()
            .map(|name| {
                let i = net.resolve_edge(name).expect("validated reference");
                flipped_names[i].clone()
            })
            .collect();
        EdgeGroup { name: group.name.clone(), edges }
    };
    // A chain of edges runs the other way after the flip, so channels keep
    // contiguity by reversing their edge order. Cuts are unordered.
    out.channels = net
        .channels()
        .iter()
        .map(|g| {
            let mut g = rewrite(g);
            g.edges.reverse();
            g
        })
        .collect();
    out.cuts = net.cuts().iter().map(rewrite).collect();
    Ok(out)
}

fn reversed_meta(net: &Network, new_names: &[String]) -> super::model::Meta {
    let mut meta = net.meta.clone();
    meta.reversed = !net.meta.reversed;
    meta.site_map = net
        .components()
        .iter()
        .zip(new_names)
        .filter(|(c, n)| c.name != **n)
        .map(|(c, n)| (c.name.clone(), n.clone()))
        .collect();
    let layout = std::mem::take(&mut meta.layout);
    meta.layout = layout
        .into_iter()
        .map(|(name, pos)| {
            match net.component_index(&name) {
                Some(i) => (new_names[i].clone(), pos),
                None => (name, pos),
            }
        })
        .collect();
    meta
}
