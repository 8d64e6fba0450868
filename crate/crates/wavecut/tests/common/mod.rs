//! Shared test helpers: an independent path-enumeration oracle for edge
//! amplitudes and a seeded generator of random layered networks.
#![allow(dead_code)] // each test target uses a different subset

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use wavecut::netgraph::{normalize, ComponentKind, ModulatorSpec, Network, NetworkBuilder};

const T: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Scattering coefficient from one input port to one output port.
fn coeff(kind: &ComponentKind, in_port: usize, out_port: usize, time: f64) -> Complex64 {
    match kind {
        ComponentKind::BeamSplitter if in_port == out_port => Complex64::new(T, 0.0),
        ComponentKind::BeamSplitter => Complex64::new(0.0, T),
        ComponentKind::Mirror => Complex64::new(0.0, 1.0),
        ComponentKind::Modulator(spec) => spec.tau(time),
        other => unreachable!("{other:?} scatters nothing"),
    }
}

/// Edge amplitudes by brute force: the sum over every source-to-edge path of
/// the product of scattering coefficients along it. Exponential in network
/// depth, which is fine at test sizes, and shares no code with the library's
/// topological solver.
pub fn path_amplitudes(net: &Network, seed: &str, time: f64) -> Vec<(String, Complex64)> {
    let net = normalize(net).expect("normalizable");
    let mut acc = vec![Complex64::new(0.0, 0.0); net.edges().len()];
    let start = net.component_index(seed).expect("seed exists");
    let firsts: Vec<usize> = (0..net.edges().len())
        .filter(|&i| net.edges()[i].from == start)
        .collect();
    for i in firsts {
        walk(&net, i, Complex64::new(1.0, 0.0), time, &mut acc);
    }
    (0..net.edges().len())
        .map(|i| (net.edge_name(i), acc[i]))
        .collect()
}

fn walk(net: &Network, edge: usize, amp: Complex64, time: f64, acc: &mut [Complex64]) {
    acc[edge] += amp;
    let here = &net.edges()[edge];
    let kind = &net.components()[here.to].kind;
    if matches!(
        kind,
        ComponentKind::Detector | ComponentKind::Terminator | ComponentKind::Source
    ) {
        return;
    }
    for (j, next) in net.edges().iter().enumerate() {
        if next.from == here.to {
            let k = coeff(kind, here.to_port, next.from_port, time);
            walk(net, j, amp * k, time, acc);
        }
    }
}

/// Name of the single edge leaving `source`.
pub fn source_edge(net: &Network, source: &str) -> String {
    let si = net.component_index(source).expect("source exists");
    let i = (0..net.edges().len())
        .find(|&i| net.edges()[i].from == si)
        .expect("source is connected");
    net.edge_name(i)
}

/// Random layered network, deterministic in `seed`.
///
/// Layer zero holds 2..=4 sources (`S1` is the conventional test seed); each
/// later layer consumes the full frontier through splitters, mirrors, and
/// lossless phase modulators, and the final frontier lands on detectors.
/// Every layer boundary is recorded as a cut named `c<layer>`, so every cut
/// is a complete crossing set and all sum rules must hold exactly.
pub fn random_network(seed: u64) -> Network {
    let mut rng = StdRng::seed_from_u64(seed);
    let width = rng.random_range(2..=4usize);
    let layers = rng.random_range(2..=4usize);
    let mut b = NetworkBuilder::new();

    // (component, outgoing port label, edge alias once connected)
    let mut frontier: Vec<(String, String)> = Vec::new();
    for k in 0..width {
        let name = format!("S{}", k + 1);
        b.source(&name).unwrap();
        frontier.push((name, "out".into()));
    }

    let mut edge_no = 0;
    let alias = |edge_no: &mut usize| {
        let a = format!("e{}", *edge_no);
        *edge_no += 1;
        a
    };

    for layer in 0..layers {
        frontier.shuffle(&mut rng);
        let mut next: Vec<(String, String)> = Vec::new();
        let mut crossing: Vec<String> = Vec::new();
        let mut i = 0;
        let mut n = 0;
        while i < frontier.len() {
            let pair = i + 1 < frontier.len() && rng.random_bool(0.6);
            let name = format!("X{}_{}", layer, n);
            n += 1;
            if pair {
                b.beamsplitter(&name).unwrap();
                for (slot, (c, p)) in frontier[i..i + 2].iter().enumerate() {
                    let a = alias(&mut edge_no);
                    b.connect(c, p, &name, &format!("in{}", slot + 1), Some(&a)).unwrap();
                    crossing.push(a);
                }
                next.push((name.clone(), "out1".into()));
                next.push((name, "out2".into()));
                i += 2;
            } else {
                if rng.random_bool(0.5) {
                    b.mirror(&name).unwrap();
                } else {
                    let delta = rng.random_range(0.0..std::f64::consts::TAU);
                    let spec = ModulatorSpec::new(1.0, 0.0, 0.0, delta).unwrap();
                    b.modulator(&name, spec).unwrap();
                }
                let (c, p) = &frontier[i];
                let a = alias(&mut edge_no);
                b.connect(c, p, &name, "in", Some(&a)).unwrap();
                crossing.push(a);
                next.push((name, "out".into()));
                i += 1;
            }
        }
        let refs: Vec<&str> = crossing.iter().map(String::as_str).collect();
        b.cut(&format!("c{layer}"), &refs).unwrap();
        frontier = next;
    }

    let mut last: Vec<String> = Vec::new();
    for (k, (c, p)) in frontier.iter().enumerate() {
        let name = format!("D{}", k + 1);
        b.detector(&name).unwrap();
        let a = alias(&mut edge_no);
        b.connect(c, p, &name, "in", Some(&a)).unwrap();
        last.push(a);
    }
    let refs: Vec<&str> = last.iter().map(String::as_str).collect();
    b.cut("detectors", &refs).unwrap();
    b.build()
}
