//! Single-pass amplitude propagation through a normalized network.
//!
//! Components scatter in topological order, so each edge is written exactly
//! once per run. All scattering matrices are symmetric, which is what lets
//! backward fields reuse this same pass on the reversed network.

use num_complex::Complex64;
use serde_json::json;
use thiserror::Error;

use crate::fmt17;
use crate::netgraph::{
    adjacency, normalize, topo_order, ComponentKind, ModulatorSpec, NetError, Network,
};

/// Transmission coefficient of every splitter: `1/sqrt(2)`.
pub const SPLIT_T: Complex64 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
/// Reflection coefficient of every splitter: `i/sqrt(2)`.
pub const SPLIT_R: Complex64 = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
/// Mirror reflection coefficient: `i`.
pub const MIRROR_R: Complex64 = Complex64::new(0.0, 1.0);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// 50:50 splitter action on its two inputs.
pub fn scatter_splitter(in1: Complex64, in2: Complex64) -> (Complex64, Complex64) {
    (SPLIT_T * in1 + SPLIT_R * in2, SPLIT_R * in1 + SPLIT_T * in2)
}

pub fn scatter_mirror(a: Complex64) -> Complex64 {
    MIRROR_R * a
}

pub fn scatter_modulator(a: Complex64, spec: &ModulatorSpec, t: f64) -> Complex64 {
    spec.tau(t) * a
}

#[derive(Debug, Error)]
pub enum PropagateError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("unknown seed site `{0}`")]
    UnknownSeed(String),
    #[error("seed site `{0}` is not a source")]
    NotASource(String),
    #[error("no cut named `{0}`")]
    UnknownCut(String),
    #[error("edge `{0}` not present in map")]
    UnknownEdge(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// Complex amplitude on every edge from one propagation pass.
#[derive(Debug, Clone)]
pub struct FieldMap {
    pub direction: Direction,
    /// Name of the seeded source.
    pub seed: String,
    /// For backward maps, the forward-network site the seed came from
    /// (e.g. seed `S22` has origin `D2`).
    pub origin: Option<String>,
    pub time: f64,
    /// `|amplitude|^2` injected at the seed.
    pub seed_norm: f64,
    edge_names: Vec<String>,
    amps: Vec<Complex64>,
    detector_edges: Vec<(String, usize)>,
    absorbed: Vec<(String, f64)>,
}

impl FieldMap {
    pub fn edge_names(&self) -> &[String] {
        &self.edge_names
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn index_of(&self, edge: &str) -> Option<usize> {
        self.edge_names.iter().position(|n| n == edge)
    }

    pub fn amplitude(&self, edge: &str) -> Option<Complex64> {
        self.index_of(edge).map(|i| self.amps[i])
    }

    /// `|amplitude|^2` on an edge.
    pub fn probability(&self, edge: &str) -> Option<f64> {
        self.amplitude(edge).map(|a| a.norm_sqr())
    }

    /// Detector readings `(name, p)` in declaration order.
    pub fn detector_readings(&self) -> Vec<(String, f64)> {
        self.detector_edges
            .iter()
            .map(|(name, i)| (name.clone(), self.amps[*i].norm_sqr()))
            .collect()
    }

    /// Power absorbed by each lossy modulator during this pass.
    pub fn absorbed(&self) -> &[(String, f64)] {
        &self.absorbed
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "kind": "field",
            "direction": self.direction.as_str(),
            "seed": self.seed,
            "origin": self.origin,
            "time": self.time,
            "edges": self
                .edge_names
                .iter()
                .zip(&self.amps)
                .map(|(name, a)| {
                    json!({ "edge": name, "re": a.re, "im": a.im, "p": a.norm_sqr() })
                })
                .collect::<Vec<_>>(),
            "detectors": self
                .detector_readings()
                .iter()
                .map(|(name, p)| json!({ "detector": name, "p": p }))
                .collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge,re,im,p\n");
        for (name, a) in self.edge_names.iter().zip(&self.amps) {
            out.push_str(&format!(
                "{},{},{},{}\n",
                name,
                fmt17(a.re),
                fmt17(a.im),
                fmt17(a.norm_sqr())
            ));
        }
        out
    }
}

/// `|amplitude|^2` per edge, plus detector readings.
#[derive(Debug, Clone)]
pub struct IntensityMap {
    pub direction: Direction,
    pub seed: String,
    pub time: f64,
    edge_names: Vec<String>,
    p: Vec<f64>,
    pub detectors: Vec<(String, f64)>,
}

impl IntensityMap {
    pub fn edge_names(&self) -> &[String] {
        &self.edge_names
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn probability(&self, edge: &str) -> Option<f64> {
        self.edge_names
            .iter()
            .position(|n| n == edge)
            .map(|i| self.p[i])
    }

    pub fn detector(&self, name: &str) -> Option<f64> {
        self.detectors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| *p)
    }

    /// Sum of probabilities over a list of edge names.
    pub fn sum_over(&self, names: &[String]) -> Result<f64, PropagateError> {
        names.iter().try_fold(0.0, |acc, name| {
            self.probability(name)
                .map(|p| acc + p)
                .ok_or_else(|| PropagateError::UnknownEdge(name.clone()))
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "kind": "intensity",
            "direction": self.direction.as_str(),
            "seed": self.seed,
            "time": self.time,
            "edges": self
                .edge_names
                .iter()
                .zip(&self.p)
                .map(|(name, p)| json!({ "edge": name, "p": p }))
                .collect::<Vec<_>>(),
            "detectors": self
                .detectors
                .iter()
                .map(|(name, p)| json!({ "detector": name, "p": p }))
                .collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge,p\n");
        for (name, p) in self.edge_names.iter().zip(&self.p) {
            out.push_str(&format!("{},{}\n", name, fmt17(*p)));
        }
        out
    }
}

pub fn intensities(f: &FieldMap) -> IntensityMap {
    IntensityMap {
        direction: f.direction,
        seed: f.seed.clone(),
        time: f.time,
        edge_names: f.edge_names.clone(),
        p: f.amps.iter().map(|a| a.norm_sqr()).collect(),
        detectors: f.detector_readings(),
    }
}

/// A normalized network with its traversal order and port adjacency resolved
/// once, for repeated runs at different times or seeds.
pub struct Prepared {
    net: Network,
    order: Vec<usize>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    edge_names: Vec<String>,
    detector_edges: Vec<(String, usize)>,
}

impl Prepared {
    pub fn new(net: &Network) -> Result<Self, PropagateError> {
        let net = normalize(net)?;
        let order = topo_order(&net)?;
        let adj = adjacency(&net);
        let unwrap_all = |vv: Vec<Vec<Option<usize>>>| -> Vec<Vec<usize>> {
            vv.into_iter()
                .map(|v| v.into_iter().map(|o| o.expect("normalized port")).collect())
                .collect()
        };
        let in_edges = unwrap_all(adj.in_edges);
        let out_edges = unwrap_all(adj.out_edges);
        let edge_names = (0..net.edges().len()).map(|i| net.edge_name(i)).collect();
        let detector_edges = net
            .detectors()
            .into_iter()
            .map(|d| (net.components()[d].name.clone(), in_edges[d][0]))
            .collect();
        Ok(Self { net, order, in_edges, out_edges, edge_names, detector_edges })
    }

    /// The normalized network this propagator runs on.
    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn edge_names(&self) -> &[String] {
        &self.edge_names
    }

    /// Index of an edge in the maps produced by [`Prepared::run`].
    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.net.resolve_edge(name)
    }

    /// Inject `amplitude` at the named source and scatter it through the
    /// network at time `time`.
    pub fn run(
        &self,
        seed: &str,
        amplitude: Complex64,
        time: f64,
    ) -> Result<FieldMap, PropagateError> {
        let si = self
            .net
            .component_index(seed)
            .ok_or_else(|| PropagateError::UnknownSeed(seed.into()))?;
        if !matches!(self.net.components()[si].kind, ComponentKind::Source) {
            return Err(PropagateError::NotASource(seed.into()));
        }

        let mut amps = vec![ZERO; self.edge_names.len()];
        amps[self.out_edges[si][0]] = amplitude;
        let mut absorbed = Vec::new();

        for &c in &self.order {
            match &self.net.components()[c].kind {
                ComponentKind::Source | ComponentKind::Detector | ComponentKind::Terminator => {}
                ComponentKind::BeamSplitter => {
                    let (o1, o2) = scatter_splitter(
                        amps[self.in_edges[c][0]],
                        amps[self.in_edges[c][1]],
                    );
                    amps[self.out_edges[c][0]] = o1;
                    amps[self.out_edges[c][1]] = o2;
                }
                ComponentKind::Mirror => {
                    amps[self.out_edges[c][0]] = scatter_mirror(amps[self.in_edges[c][0]]);
                }
                ComponentKind::Modulator(spec) => {
                    let input = amps[self.in_edges[c][0]];
                    let tau = spec.tau(time);
                    amps[self.out_edges[c][0]] = tau * input;
                    let loss = input.norm_sqr() * (1.0 - tau.norm_sqr());
                    if !spec.lossless() {
                        absorbed.push((self.net.components()[c].name.clone(), loss));
                    }
                }
            }
        }

        let direction = if self.net.meta.reversed {
            Direction::Backward
        } else {
            Direction::Forward
        };
        let origin = self
            .net
            .meta
            .site_map
            .iter()
            .find(|(_, new)| new.as_str() == seed)
            .map(|(old, _)| old.clone());
        Ok(FieldMap {
            direction,
            seed: seed.to_string(),
            origin,
            time,
            seed_norm: amplitude.norm_sqr(),
            edge_names: self.edge_names.clone(),
            amps,
            detector_edges: self.detector_edges.clone(),
            absorbed,
        })
    }
}

/// One-shot unit-amplitude propagation from `seed` at time `time`.
pub fn propagate(net: &Network, seed: &str, time: f64) -> Result<FieldMap, PropagateError> {
    Prepared::new(net)?.run(seed, Complex64::new(1.0, 0.0), time)
}

/// Sum of the intensity map over a declared cut.
pub fn cut_sum(net: &Network, im: &IntensityMap, cut: &str) -> Result<f64, PropagateError> {
    let group = net
        .cut(cut)
        .ok_or_else(|| PropagateError::UnknownCut(cut.into()))?;
    im.sum_over(&group.edges)
}

/// Where the injected power went: detectors plus modulator absorption.
#[derive(Debug, Clone)]
pub struct EnergyBalance {
    pub detector_total: f64,
    pub absorbed_total: f64,
    pub absorbed: Vec<(String, f64)>,
    /// `|detectors + absorbed - injected|`.
    pub residual: f64,
}

pub fn energy_balance(f: &FieldMap) -> EnergyBalance {
    let detector_total: f64 = f.detector_readings().iter().map(|(_, p)| p).sum();
    let absorbed_total: f64 = f.absorbed.iter().map(|(_, p)| p).sum();
    EnergyBalance {
        detector_total,
        absorbed_total,
        absorbed: f.absorbed.clone(),
        residual: (detector_total + absorbed_total - f.seed_norm).abs(),
    }
}
