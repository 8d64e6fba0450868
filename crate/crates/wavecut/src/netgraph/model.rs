//! Core data model: components, ports, directed edges, named channels and
//! cuts, and the builder used by presets and tests.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised while constructing or transforming a network.
#[derive(Debug, Error)]
pub enum NetError {
    #[error("duplicate component name `{0}`")]
    DuplicateComponent(String),
    #[error("duplicate edge alias `{0}`")]
    DuplicateAlias(String),
    #[error("reference to undeclared component `{0}`")]
    UnknownComponent(String),
    #[error("component `{component}` has no port `{port}` (port arity violation)")]
    UnknownPort { component: String, port: String },
    #[error("port {component}.{port} is already connected")]
    PortInUse { component: String, port: String },
    #[error("reference to unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("duplicate channel or cut name `{0}`")]
    DuplicateGroup(String),
    #[error("invalid identifier `{0}`")]
    BadIdentifier(String),
    #[error("invalid modulator: {0}")]
    BadModulator(String),
    #[error("forward graph must be acyclic")]
    Cyclic,
    #[error("network failed validation:\n{0}")]
    Invalid(String),
}

/// Time-dependent transmission element: `tau(t) = (tau0 - eps0 cos(2 pi f t)) e^{i delta}`.
///
/// `eps0 = 0` or `freq = 0` makes the element static. `eps0 <= tau0` keeps the
/// magnitude non-negative at all times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatorSpec {
    pub tau0: f64,
    pub eps0: f64,
    pub freq: f64,
    pub delta: f64,
}

impl Default for ModulatorSpec {
    fn default() -> Self {
        Self { tau0: 1.0, eps0: 0.0, freq: 0.0, delta: 0.0 }
    }
}

impl ModulatorSpec {
    pub fn new(tau0: f64, eps0: f64, freq: f64, delta: f64) -> Result<Self, NetError> {
        let spec = Self { tau0, eps0, freq, delta };
        spec.check()?;
        Ok(spec)
    }

    pub(crate) fn check(&self) -> Result<(), NetError> {
        let all = [self.tau0, self.eps0, self.freq, self.delta];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(NetError::BadModulator("parameters must be finite".into()));
        }
        if self.tau0 < 0.0 {
            return Err(NetError::BadModulator(format!("tau0 = {} < 0", self.tau0)));
        }
        if self.eps0 < 0.0 || self.eps0 > self.tau0 {
            return Err(NetError::BadModulator(format!(
                "eps = {} outside [0, tau0 = {}]",
                self.eps0, self.tau0
            )));
        }
        if self.freq < 0.0 {
            return Err(NetError::BadModulator(format!("freq = {} < 0", self.freq)));
        }
        Ok(())
    }

    /// Instantaneous complex transmission at time `t` (seconds).
    pub fn tau(&self, t: f64) -> Complex64 {
        let mag = self.tau0 - self.eps0 * (TAU * self.freq * t).cos();
        Complex64::new(self.delta.cos(), self.delta.sin()) * mag
    }

    /// True when the element actually varies in time.
    pub fn active(&self) -> bool {
        self.eps0 > 0.0 && self.freq > 0.0
    }

    /// True when `|tau(t)| = 1` for all `t` (no absorption ever).
    pub fn lossless(&self) -> bool {
        self.tau0 == 1.0 && self.eps0 == 0.0
    }
}

/// What a component does to the field.
#[derive(Debug, Clone, PartialEq)]
pub enum ComponentKind {
    /// Emits a unit amplitude on its single output.
    Source,
    /// Absorbs and reads out `|amplitude|^2`.
    Detector,
    /// Symmetric 50:50 splitter: `out1 = t in1 + r in2`, `out2 = r in1 + t in2`
    /// with `t = 1/sqrt(2)`, `r = i/sqrt(2)`.
    BeamSplitter,
    /// Multiplies by `i`.
    Mirror,
    /// Multiplies by a (possibly time-dependent) transmission `tau(t)`.
    Modulator(ModulatorSpec),
    /// Absorbs without readout.
    Terminator,
}

impl ComponentKind {
    pub fn inputs(&self) -> usize {
        match self {
            ComponentKind::Source => 0,
            ComponentKind::BeamSplitter => 2,
            _ => 1,
        }
    }

    pub fn outputs(&self) -> usize {
        match self {
            ComponentKind::Detector | ComponentKind::Terminator => 0,
            ComponentKind::BeamSplitter => 2,
            _ => 1,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            ComponentKind::Source => "source",
            ComponentKind::Detector => "detector",
            ComponentKind::BeamSplitter => "beamsplitter",
            ComponentKind::Mirror => "mirror",
            ComponentKind::Modulator(_) => "modulator",
            ComponentKind::Terminator => "terminator",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortDir {
    Input,
    Output,
}

/// Render a port label: arity-1 sides use bare `in`/`out`, arity-2 sides use
/// `in1`/`in2` etc.
pub(crate) fn port_label(dir: PortDir, index: usize, arity: usize) -> String {
    let stem = match dir {
        PortDir::Input => "in",
        PortDir::Output => "out",
    };
    if arity <= 1 {
        stem.to_string()
    } else {
        format!("{}{}", stem, index + 1)
    }
}

/// Parse a port label against a component kind; labels must match the side's
/// arity exactly (`in` for one input, `in1`/`in2` for two).
pub(crate) fn parse_port(kind: &ComponentKind, label: &str) -> Option<(PortDir, usize)> {
    let (dir, rest) = if let Some(rest) = label.strip_prefix("in") {
        (PortDir::Input, rest)
    } else {
        let rest = label.strip_prefix("out")?;
        (PortDir::Output, rest)
    };
    let arity = match dir {
        PortDir::Input => kind.inputs(),
        PortDir::Output => kind.outputs(),
    };
    if rest.is_empty() {
        return (arity == 1).then_some((dir, 0));
    }
    let n: usize = rest.parse().ok()?;
    (arity > 1 && n >= 1 && n <= arity).then_some((dir, n - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub kind: ComponentKind,
    /// True when the component was inserted by normalization rather than
    /// declared by the user.
    pub auto: bool,
}

/// Directed connection from an output port to an input port.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub from_port: usize,
    pub to: usize,
    pub to_port: usize,
    pub alias: Option<String>,
}

/// Named list of edges (a spatial channel or a cross-section cut). Edges are
/// stored by canonical name: alias when present, otherwise the structural
/// `From.port->To.port` form.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGroup {
    pub name: String,
    pub edges: Vec<String>,
}

/// Presentation and bookkeeping data that does not affect network identity.
#[derive(Debug, Clone, Default)]
pub struct Meta {
    /// Preset name when the network came from [`build_preset`](super::build_preset).
    pub preset: Option<String>,
    /// True for networks produced by [`reverse`](super::reverse).
    pub reversed: bool,
    /// Schematic coordinates per component, in px.
    pub layout: BTreeMap<String, (f64, f64)>,
    /// Component renames applied by the last reversal: `(old, new)` pairs.
    pub site_map: Vec<(String, String)>,
}

/// A directed, acyclic port graph.
///
/// Equality compares structure only (components, edges, channels, cuts);
/// layout and other [`Meta`] fields are presentation data.
#[derive(Debug, Clone, Default)]
pub struct Network {
    pub(crate) components: Vec<Component>,
    pub(crate) edges: Vec<Edge>,
    pub(crate) channels: Vec<EdgeGroup>,
    pub(crate) cuts: Vec<EdgeGroup>,
    pub meta: Meta,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components
            && self.edges == other.edges
            && self.channels == other.channels
            && self.cuts == other.cuts
    }
}

impl Network {
    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn channels(&self) -> &[EdgeGroup] {
        &self.channels
    }

    pub fn cuts(&self) -> &[EdgeGroup] {
        &self.cuts
    }

    pub fn channel(&self, name: &str) -> Option<&EdgeGroup> {
        self.channels.iter().find(|g| g.name == name)
    }

    pub fn cut(&self, name: &str) -> Option<&EdgeGroup> {
        self.cuts.iter().find(|g| g.name == name)
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.component_index(name).map(|i| &self.components[i])
    }

    /// Structural name of edge `i`: `From.port->To.port`.
    pub fn structural_name(&self, i: usize) -> String {
        let e = &self.edges[i];
        let from = &self.components[e.from];
        let to = &self.components[e.to];
        format!(
            "{}.{}->{}.{}",
            from.name,
            port_label(PortDir::Output, e.from_port, from.kind.outputs()),
            to.name,
            port_label(PortDir::Input, e.to_port, to.kind.inputs()),
        )
    }

    /// Canonical name of edge `i`: its alias when present, else structural.
    pub fn edge_name(&self, i: usize) -> String {
        self.edges[i]
            .alias
            .clone()
            .unwrap_or_else(|| self.structural_name(i))
    }

    /// Resolve an edge reference (alias or structural name) to an index.
    pub fn resolve_edge(&self, name: &str) -> Option<usize> {
        if let Some(i) = self
            .edges
            .iter()
            .position(|e| e.alias.as_deref() == Some(name))
        {
            return Some(i);
        }
        (0..self.edges.len()).find(|&i| self.structural_name(i) == name)
    }

    /// Indices of components of a given kind discriminant, in declaration order.
    fn of_kind(&self, pred: impl Fn(&ComponentKind) -> bool) -> Vec<usize> {
        (0..self.components.len())
            .filter(|&i| pred(&self.components[i].kind))
            .collect()
    }

    pub fn sources(&self) -> Vec<usize> {
        self.of_kind(|k| matches!(k, ComponentKind::Source))
    }

    pub fn detectors(&self) -> Vec<usize> {
        self.of_kind(|k| matches!(k, ComponentKind::Detector))
    }

    pub fn terminators(&self) -> Vec<usize> {
        self.of_kind(|k| matches!(k, ComponentKind::Terminator))
    }

    /// `(component index, spec)` for every modulator, in declaration order.
    pub fn modulators(&self) -> Vec<(usize, ModulatorSpec)> {
        self.components
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match c.kind {
                ComponentKind::Modulator(spec) => Some((i, spec)),
                _ => None,
            })
            .collect()
    }

    /// True when every port of every component is connected.
    pub fn fully_connected(&self) -> bool {
        let mut used_in = vec![0usize; self.components.len()];
        let mut used_out = vec![0usize; self.components.len()];
        for e in &self.edges {
            used_out[e.from] += 1;
            used_in[e.to] += 1;
        }
        self.components.iter().enumerate().all(|(i, c)| {
            used_in[i] == c.kind.inputs() && used_out[i] == c.kind.outputs()
        })
    }

    /// Replace the drive settings of a named modulator, returning the updated network.
    pub fn with_modulator(&self, name: &str, spec: ModulatorSpec) -> Result<Network, NetError> {
        spec.check()?;
        let idx = self
            .component_index(name)
            .ok_or_else(|| NetError::UnknownComponent(name.into()))?;
        match self.components[idx].kind {
            ComponentKind::Modulator(_) => {}
            _ => {
                return Err(NetError::BadModulator(format!(
                    "`{}` is not a modulator",
                    name
                )))
            }
        }
        let mut net = self.clone();
        net.components[idx].kind = ComponentKind::Modulator(spec);
        Ok(net)
    }

    /// Scale the modulation depth of every modulator by `factor`.
    pub fn with_eps_scaled(&self, factor: f64) -> Network {
        let mut net = self.clone();
        for c in &mut net.components {
            if let ComponentKind::Modulator(ref mut spec) = c.kind {
                spec.eps0 *= factor;
            }
        }
        net
    }
}

/// Incremental construction with the same invariants as the netlist parser.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    net: Network,
}

pub(crate) fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn component(&mut self, name: &str, kind: ComponentKind) -> Result<&mut Self, NetError> {
        if !valid_identifier(name) {
            return Err(NetError::BadIdentifier(name.into()));
        }
        if self.net.component_index(name).is_some() {
            return Err(NetError::DuplicateComponent(name.into()));
        }
        if let ComponentKind::Modulator(spec) = &kind {
            spec.check()?;
        }
        self.net.components.push(Component {
            name: name.into(),
            kind,
            auto: false,
        });
        Ok(self)
    }

    pub fn source(&mut self, name: &str) -> Result<&mut Self, NetError> {
        self.component(name, ComponentKind::Source)
    }

    pub fn detector(&mut self, name: &str) -> Result<&mut Self, NetError> {
        self.component(name, ComponentKind::Detector)
    }

    pub fn beamsplitter(&mut self, name: &str) -> Result<&mut Self, NetError> {
        self.component(name, ComponentKind::BeamSplitter)
    }

    pub fn mirror(&mut self, name: &str) -> Result<&mut Self, NetError> {
        self.component(name, ComponentKind::Mirror)
    }

    pub fn modulator(&mut self, name: &str, spec: ModulatorSpec) -> Result<&mut Self, NetError> {
        self.component(name, ComponentKind::Modulator(spec))
    }

    pub fn terminator(&mut self, name: &str) -> Result<&mut Self, NetError> {
        self.component(name, ComponentKind::Terminator)
    }

    fn resolve_port(
        &self,
        comp: &str,
        port: &str,
        want: PortDir,
    ) -> Result<(usize, usize), NetError> {
        let idx = self
            .net
            .component_index(comp)
            .ok_or_else(|| NetError::UnknownComponent(comp.into()))?;
        let (dir, pidx) =
            parse_port(&self.net.components[idx].kind, port).ok_or_else(|| {
                NetError::UnknownPort {
                    component: comp.into(),
                    port: port.into(),
                }
            })?;
        if dir != want {
            return Err(NetError::UnknownPort {
                component: comp.into(),
                port: port.into(),
            });
        }
        Ok((idx, pidx))
    }

    /// Connect `from.from_port -> to.to_port`, optionally under an alias.
    pub fn connect(
        &mut self,
        from: &str,
        from_port: &str,
        to: &str,
        to_port: &str,
        alias: Option<&str>,
    ) -> Result<&mut Self, NetError> {
        let (fi, fp) = self.resolve_port(from, from_port, PortDir::Output)?;
        let (ti, tp) = self.resolve_port(to, to_port, PortDir::Input)?;
        if self
            .net
            .edges
            .iter()
            .any(|e| e.from == fi && e.from_port == fp)
        {
            return Err(NetError::PortInUse {
                component: from.into(),
                port: from_port.into(),
            });
        }
        if self.net.edges.iter().any(|e| e.to == ti && e.to_port == tp) {
            return Err(NetError::PortInUse {
                component: to.into(),
                port: to_port.into(),
            });
        }
        if let Some(a) = alias {
            if !valid_identifier(a) {
                return Err(NetError::BadIdentifier(a.into()));
            }
            if self
                .net
                .edges
                .iter()
                .any(|e| e.alias.as_deref() == Some(a))
            {
                return Err(NetError::DuplicateAlias(a.into()));
            }
        }
        self.net.edges.push(Edge {
            from: fi,
            from_port: fp,
            to: ti,
            to_port: tp,
            alias: alias.map(String::from),
        });
        Ok(self)
    }

    fn group(
        &mut self,
        into_cuts: bool,
        name: &str,
        refs: &[&str],
    ) -> Result<&mut Self, NetError> {
        if !valid_identifier(name) {
            return Err(NetError::BadIdentifier(name.into()));
        }
        let taken = self
            .net
            .channels
            .iter()
            .chain(self.net.cuts.iter())
            .any(|g| g.name == name);
        if taken {
            return Err(NetError::DuplicateGroup(name.into()));
        }
        let mut edges = Vec::with_capacity(refs.len());
        for &r in refs {
            // `__`-prefixed references name closure edges that only exist
            // after normalization; keep them verbatim.
            if let Some(i) = self.net.resolve_edge(r) {
                edges.push(self.net.edge_name(i));
            } else if r.starts_with("__") {
                edges.push(r.to_string());
            } else {
                return Err(NetError::UnknownEdge(r.into()));
            }
        }
        let group = EdgeGroup {
            name: name.into(),
            edges,
        };
        if into_cuts {
            self.net.cuts.push(group);
        } else {
            self.net.channels.push(group);
        }
        Ok(self)
    }

    pub fn channel(&mut self, name: &str, refs: &[&str]) -> Result<&mut Self, NetError> {
        self.group(false, name, refs)
    }

    pub fn cut(&mut self, name: &str, refs: &[&str]) -> Result<&mut Self, NetError> {
        self.group(true, name, refs)
    }

    pub fn layout(&mut self, name: &str, x: f64, y: f64) -> &mut Self {
        self.net.meta.layout.insert(name.into(), (x, y));
        self
    }

    pub fn build(self) -> Network {
        self.net
    }
}
