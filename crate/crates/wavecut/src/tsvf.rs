//! Two-field quantities: backward propagation from a post-selected detector,
//! weak values on a cut, encounter probabilities, and the sum-rule audit.
//!
//! The backward field chi is obtained by seeding the reversed network at the
//! post-selected site and running the ordinary forward pass there; because
//! every scattering matrix is symmetric, that equals the adjoint propagation
//! of the detection event. The weak-value denominator `sum_cut chi psi` is
//! the forward amplitude at the post-selected detector and is independent of
//! which valid cut is used.

use num_complex::Complex64;
use serde_json::json;
use thiserror::Error;

use crate::fmt17;
use crate::netgraph::{reverse, NetError, Network};
use crate::propagate::{Direction, FieldMap, Prepared, PropagateError};
use crate::DIVERGENCE_TOL;

/// Encounter totals below this cannot be renormalized meaningfully.
const ZERO_CUT_TOL: f64 = 1e-30;

#[derive(Debug, Error)]
pub enum TsvfError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Propagate(#[from] PropagateError),
    #[error("unknown detector `{0}`")]
    UnknownDetector(String),
    #[error("no cut named `{0}`")]
    UnknownCut(String),
    #[error(
        "post-selection on `{detector}` is dark (|denominator| = {magnitude:.3e} < {tol:.1e}): weak values diverge"
    )]
    DarkPortDivergence {
        detector: String,
        magnitude: f64,
        tol: f64,
    },
    #[error("encounter probability vanishes on cut `{0}`: nothing to renormalize")]
    ZeroCutTotal(String),
    #[error("field maps are incompatible: {0}")]
    MismatchedFields(String),
}

/// Resolve a forward detector name to its seed site in the reversed network.
fn backward_seed_name(rev: &Network, detector: &str) -> Result<String, TsvfError> {
    if let Some((_, new)) = rev
        .meta
        .site_map
        .iter()
        .find(|(old, _)| old == detector)
    {
        return Ok(new.clone());
    }
    // Accept the backward name itself (e.g. `S22`).
    if rev
        .component(detector)
        .is_some_and(|c| matches!(c.kind, crate::netgraph::ComponentKind::Source))
    {
        return Ok(detector.to_string());
    }
    Err(TsvfError::UnknownDetector(detector.into()))
}

/// Backward field from post-selecting `detector` at time `time`. The result's
/// edges are index-aligned with a forward map of the same network.
pub fn backward_field(net: &Network, detector: &str, time: f64) -> Result<FieldMap, TsvfError> {
    let rev = reverse(net)?;
    let seed = backward_seed_name(&rev, detector)?;
    let prepared = Prepared::new(&rev)?;
    Ok(prepared.run(&seed, Complex64::new(1.0, 0.0), time)?)
}

fn check_pairing(psi: &FieldMap, chi: &FieldMap) -> Result<(), TsvfError> {
    if psi.direction != Direction::Forward || chi.direction != Direction::Backward {
        return Err(TsvfError::MismatchedFields(format!(
            "need one forward and one backward map, got {} and {}",
            psi.direction.as_str(),
            chi.direction.as_str()
        )));
    }
    if psi.edge_names().len() != chi.edge_names().len() {
        return Err(TsvfError::MismatchedFields(format!(
            "edge counts differ ({} vs {})",
            psi.edge_names().len(),
            chi.edge_names().len()
        )));
    }
    if psi.time != chi.time {
        return Err(TsvfError::MismatchedFields(format!(
            "times differ ({} vs {})",
            psi.time, chi.time
        )));
    }
    Ok(())
}

/// Weak value per edge for one pre/post-selected pair.
#[derive(Debug, Clone)]
pub struct WeakValueMap {
    pub forward_seed: String,
    /// Forward-network name of the post-selected detector.
    pub post_selection: String,
    /// Cut used for the denominator.
    pub cut: String,
    pub denominator: Complex64,
    pub time: f64,
    edge_names: Vec<String>,
    w: Vec<Complex64>,
}

impl WeakValueMap {
    pub fn edge_names(&self) -> &[String] {
        &self.edge_names
    }

    pub fn values(&self) -> &[Complex64] {
        &self.w
    }

    pub fn value(&self, edge: &str) -> Option<Complex64> {
        self.edge_names
            .iter()
            .position(|n| n == edge)
            .map(|i| self.w[i])
    }

    /// Sum of weak values over a list of edges (1 on any valid cut).
    pub fn sum_over(&self, names: &[String]) -> Result<Complex64, TsvfError> {
        names.iter().try_fold(Complex64::new(0.0, 0.0), |acc, n| {
            self.value(n)
                .map(|w| acc + w)
                .ok_or_else(|| TsvfError::Propagate(PropagateError::UnknownEdge(n.clone())))
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "kind": "weak",
            "forward_seed": self.forward_seed,
            "post_selection": self.post_selection,
            "cut": self.cut,
            "time": self.time,
            "denominator": { "re": self.denominator.re, "im": self.denominator.im },
            "edges": self
                .edge_names
                .iter()
                .zip(&self.w)
                .map(|(name, w)| json!({ "edge": name, "re": w.re, "im": w.im }))
                .collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge,re,im\n");
        for (name, w) in self.edge_names.iter().zip(&self.w) {
            out.push_str(&format!("{},{},{}\n", name, fmt17(w.re), fmt17(w.im)));
        }
        out
    }
}

/// Weak value of every edge: `chi_e psi_e / D` with `D = sum_cut chi psi`.
///
/// `cut` only selects where the denominator is summed; any valid cut yields
/// the same `D`. Fails with [`TsvfError::DarkPortDivergence`] when
/// `|D| < DIVERGENCE_TOL`.
pub fn weak_values(
    net: &Network,
    psi: &FieldMap,
    chi: &FieldMap,
    cut: &str,
) -> Result<WeakValueMap, TsvfError> {
    check_pairing(psi, chi)?;
    let group = net.cut(cut).ok_or_else(|| TsvfError::UnknownCut(cut.into()))?;
    let detector = chi.origin.clone().unwrap_or_else(|| chi.seed.clone());

    let mut d = Complex64::new(0.0, 0.0);
    for name in &group.edges {
        let i = psi
            .index_of(name)
            .ok_or_else(|| TsvfError::Propagate(PropagateError::UnknownEdge(name.clone())))?;
        d += chi.amplitudes()[i] * psi.amplitudes()[i];
    }
    if d.norm() < DIVERGENCE_TOL {
        return Err(TsvfError::DarkPortDivergence {
            detector,
            magnitude: d.norm(),
            tol: DIVERGENCE_TOL,
        });
    }
    let w = psi
        .amplitudes()
        .iter()
        .zip(chi.amplitudes())
        .map(|(p, c)| c * p / d)
        .collect();
    Ok(WeakValueMap {
        forward_seed: psi.seed.clone(),
        post_selection: detector,
        cut: cut.to_string(),
        denominator: d,
        time: psi.time,
        edge_names: psi.edge_names().to_vec(),
        w,
    })
}

/// Propagate both fields and form the weak-value map in one call.
pub fn weak_values_at(
    net: &Network,
    forward_seed: &str,
    detector: &str,
    cut: &str,
    time: f64,
) -> Result<WeakValueMap, TsvfError> {
    let psi = Prepared::new(net)?.run(forward_seed, Complex64::new(1.0, 0.0), time)?;
    let chi = backward_field(net, detector, time)?;
    weak_values(net, &psi, &chi, cut)
}

/// Rescaled encounter probabilities on one cut (they sum to 1 there).
#[derive(Debug, Clone)]
pub struct NormalizedEncounter {
    pub cut: String,
    pub entries: Vec<(String, f64)>,
}

impl NormalizedEncounter {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "cut": self.cut,
            "entries": self.entries.iter().map(|(name, p)| serde_json::json!({
                "edge": name,
                "p": p,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge,p\n");
        for (name, p) in &self.entries {
            out.push_str(&format!("{},{}\n", name, fmt17(*p)));
        }
        out
    }
}

/// Two-field encounter probability `P_e = |chi_e|^2 |psi_e|^2` per edge.
#[derive(Debug, Clone)]
pub struct EncounterMap {
    pub forward_seed: String,
    pub backward_seed: String,
    /// Forward-network name of the post-selected site.
    pub post_selection: String,
    pub time: f64,
    edge_names: Vec<String>,
    p: Vec<f64>,
    pub normalized: Option<NormalizedEncounter>,
}

impl EncounterMap {
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

    pub fn sum_over(&self, names: &[String]) -> Result<f64, TsvfError> {
        names.iter().try_fold(0.0, |acc, n| {
            self.probability(n)
                .map(|p| acc + p)
                .ok_or_else(|| TsvfError::Propagate(PropagateError::UnknownEdge(n.clone())))
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "kind": "encounter",
            "forward_seed": self.forward_seed,
            "backward_seed": self.backward_seed,
            "post_selection": self.post_selection,
            "time": self.time,
            "edges": self
                .edge_names
                .iter()
                .zip(&self.p)
                .map(|(name, p)| json!({ "edge": name, "p": p }))
                .collect::<Vec<_>>(),
            "normalized": self.normalized.as_ref().map(|n| {
                json!({
                    "cut": n.cut,
                    "edges": n
                        .entries
                        .iter()
                        .map(|(name, p)| json!({ "edge": name, "p": p }))
                        .collect::<Vec<_>>(),
                })
            }),
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

/// Pointwise product of intensities of a forward and a backward map.
pub fn encounter(psi: &FieldMap, chi: &FieldMap) -> Result<EncounterMap, TsvfError> {
    check_pairing(psi, chi)?;
    let p = psi
        .amplitudes()
        .iter()
        .zip(chi.amplitudes())
        .map(|(a, b)| a.norm_sqr() * b.norm_sqr())
        .collect();
    Ok(EncounterMap {
        forward_seed: psi.seed.clone(),
        backward_seed: chi.seed.clone(),
        post_selection: chi.origin.clone().unwrap_or_else(|| chi.seed.clone()),
        time: psi.time,
        edge_names: psi.edge_names().to_vec(),
        p,
        normalized: None,
    })
}

/// Propagate both fields and form the encounter map in one call.
pub fn encounter_at(
    net: &Network,
    forward_seed: &str,
    detector: &str,
    time: f64,
) -> Result<EncounterMap, TsvfError> {
    let psi = Prepared::new(net)?.run(forward_seed, Complex64::new(1.0, 0.0), time)?;
    let chi = backward_field(net, detector, time)?;
    encounter(&psi, &chi)
}

/// Conditional (post-selected) distribution across one cut: each encounter
/// probability divided by the cut total.
pub fn abl_normalize(
    em: &EncounterMap,
    net: &Network,
    cut: &str,
) -> Result<NormalizedEncounter, TsvfError> {
    let group = net.cut(cut).ok_or_else(|| TsvfError::UnknownCut(cut.into()))?;
    let total = em.sum_over(&group.edges)?;
    if total < ZERO_CUT_TOL {
        return Err(TsvfError::ZeroCutTotal(cut.into()));
    }
    let entries = group
        .edges
        .iter()
        .map(|name| (name.clone(), em.probability(name).unwrap() / total))
        .collect();
    Ok(NormalizedEncounter { cut: cut.to_string(), entries })
}

#[derive(Debug, Clone)]
pub struct CutResidual {
    pub cut: String,
    pub total: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SeedCutResidual {
    pub seed: String,
    pub cut: String,
    pub total: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct EdgeResidual {
    pub edge: String,
    pub expected: f64,
    pub total: f64,
    pub residual: f64,
}

/// Every conservation rule the model guarantees, evaluated numerically.
///
/// * `forward_cuts`: forward probability sums to 1 on each declared cut.
/// * `backward_cuts`: same for the backward field of every sink.
/// * `edge_completeness`: summed over all sinks, backward probability on any
///   single edge is 1.
/// * `encounter_edges`: encounter probability summed over sinks equals the
///   forward probability on that edge.
/// * `encounter_cuts`: encounter probability summed over sinks and over a
///   cut is 1.
///
/// All of these assume no mid-path absorption; `lossless` records whether
/// the network satisfies that (every modulator with `tau0 = 1`, `eps = 0`).
#[derive(Debug, Clone)]
pub struct SumRuleAudit {
    pub forward_seed: String,
    pub time: f64,
    pub lossless: bool,
    pub backward_seeds: Vec<String>,
    pub forward_cuts: Vec<CutResidual>,
    pub backward_cuts: Vec<SeedCutResidual>,
    pub edge_completeness: Vec<EdgeResidual>,
    pub encounter_edges: Vec<EdgeResidual>,
    pub encounter_cuts: Vec<CutResidual>,
    pub max_residual: f64,
}

impl SumRuleAudit {
    pub fn pass(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "kind": "check",
            "forward_seed": self.forward_seed,
            "time": self.time,
            "lossless": self.lossless,
            "backward_seeds": self.backward_seeds,
            "forward_cut_unit": self.forward_cuts.iter().map(|r| {
                json!({ "cut": r.cut, "total": r.total, "residual": r.residual })
            }).collect::<Vec<_>>(),
            "backward_cut_unit": self.backward_cuts.iter().map(|r| {
                json!({ "seed": r.seed, "cut": r.cut, "total": r.total, "residual": r.residual })
            }).collect::<Vec<_>>(),
            "edge_completeness": self.edge_completeness.iter().map(|r| {
                json!({ "edge": r.edge, "total": r.total, "residual": r.residual })
            }).collect::<Vec<_>>(),
            "encounter_edge_sum": self.encounter_edges.iter().map(|r| {
                json!({ "edge": r.edge, "forward_p": r.expected, "total": r.total, "residual": r.residual })
            }).collect::<Vec<_>>(),
            "encounter_cut_unit": self.encounter_cuts.iter().map(|r| {
                json!({ "cut": r.cut, "total": r.total, "residual": r.residual })
            }).collect::<Vec<_>>(),
            "max_residual": self.max_residual,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rule,subject,total,residual\n");
        for r in &self.forward_cuts {
            out.push_str(&format!(
                "forward_cut_unit,{},{},{}\n",
                r.cut,
                fmt17(r.total),
                fmt17(r.residual)
            ));
        }
        for r in &self.backward_cuts {
            out.push_str(&format!(
                "backward_cut_unit,{}:{},{},{}\n",
                r.seed,
                r.cut,
                fmt17(r.total),
                fmt17(r.residual)
            ));
        }
        for r in &self.edge_completeness {
            out.push_str(&format!(
                "edge_completeness,{},{},{}\n",
                r.edge,
                fmt17(r.total),
                fmt17(r.residual)
            ));
        }
        for r in &self.encounter_edges {
            out.push_str(&format!(
                "encounter_edge_sum,{},{},{}\n",
                r.edge,
                fmt17(r.total),
                fmt17(r.residual)
            ));
        }
        for r in &self.encounter_cuts {
            out.push_str(&format!(
                "encounter_cut_unit,{},{},{}\n",
                r.cut,
                fmt17(r.total),
                fmt17(r.residual)
            ));
        }
        out
    }
}

/// Run the complete sum-rule audit for one forward seed at time `time`.
/// Backward fields are seeded at every sink of the network, including vacuum
/// closures and terminators, so the completeness rules are exact.
pub fn audit(net: &Network, forward_seed: &str, time: f64) -> Result<SumRuleAudit, TsvfError> {
    let forward = Prepared::new(net)?;
    let psi = forward.run(forward_seed, Complex64::new(1.0, 0.0), time)?;
    let rev = reverse(net)?;
    let backward = Prepared::new(&rev)?;

    let seeds: Vec<String> = backward
        .net()
        .sources()
        .into_iter()
        .map(|i| backward.net().components()[i].name.clone())
        .collect();
    let chis: Vec<FieldMap> = seeds
        .iter()
        .map(|s| backward.run(s, Complex64::new(1.0, 0.0), time))
        .collect::<Result<_, _>>()?;

    let lossless = net
        .modulators()
        .iter()
        .all(|(_, spec)| spec.lossless());

    let mut max_residual = 0.0f64;
    let mut track = |r: f64| {
        max_residual = max_residual.max(r);
        r
    };

    let cut_indices = |group: &crate::netgraph::EdgeGroup,
                       f: &FieldMap|
     -> Result<Vec<usize>, TsvfError> {
        group
            .edges
            .iter()
            .map(|n| {
                f.index_of(n)
                    .ok_or_else(|| TsvfError::Propagate(PropagateError::UnknownEdge(n.clone())))
            })
            .collect()
    };

    let mut forward_cuts = Vec::new();
    let mut encounter_cuts = Vec::new();
    let mut backward_cuts = Vec::new();
    for group in forward.net().cuts() {
        let idx = cut_indices(group, &psi)?;
        let total: f64 = idx.iter().map(|&i| psi.amplitudes()[i].norm_sqr()).sum();
        forward_cuts.push(CutResidual {
            cut: group.name.clone(),
            total,
            residual: track((total - 1.0).abs()),
        });

        let mut enc_total = 0.0;
        for chi in &chis {
            enc_total += idx
                .iter()
                .map(|&i| psi.amplitudes()[i].norm_sqr() * chi.amplitudes()[i].norm_sqr())
                .sum::<f64>();
        }
        encounter_cuts.push(CutResidual {
            cut: group.name.clone(),
            total: enc_total,
            residual: track((enc_total - 1.0).abs()),
        });
    }
    for (seed, chi) in seeds.iter().zip(&chis) {
        for group in backward.net().cuts() {
            let idx = cut_indices(group, chi)?;
            let total: f64 = idx.iter().map(|&i| chi.amplitudes()[i].norm_sqr()).sum();
            backward_cuts.push(SeedCutResidual {
                seed: seed.clone(),
                cut: group.name.clone(),
                total,
                residual: track((total - 1.0).abs()),
            });
        }
    }

    let mut edge_completeness = Vec::new();
    let mut encounter_edges = Vec::new();
    for (i, name) in psi.edge_names().iter().enumerate() {
        let completeness: f64 = chis.iter().map(|c| c.amplitudes()[i].norm_sqr()).sum();
        edge_completeness.push(EdgeResidual {
            edge: name.clone(),
            expected: 1.0,
            total: completeness,
            residual: track((completeness - 1.0).abs()),
        });
        let forward_p = psi.amplitudes()[i].norm_sqr();
        let enc: f64 = chis
            .iter()
            .map(|c| c.amplitudes()[i].norm_sqr() * forward_p)
            .sum();
        encounter_edges.push(EdgeResidual {
            edge: name.clone(),
            expected: forward_p,
            total: enc,
            residual: track((enc - forward_p).abs()),
        });
    }

    Ok(SumRuleAudit {
        forward_seed: forward_seed.to_string(),
        time,
        lossless,
        backward_seeds: seeds,
        forward_cuts,
        backward_cuts,
        edge_completeness,
        encounter_edges,
        encounter_cuts,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{build_preset, NetworkBuilder, PresetKind};
    use crate::propagate::propagate;
    use crate::RESIDUAL_TOL;

    const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn assert_c(got: Complex64, re: f64, im: f64, what: &str) {
        assert!(
            (got.re - re).abs() < RESIDUAL_TOL && (got.im - im).abs() < RESIDUAL_TOL,
            "{}: got {} + {}i, want {} + {}i",
            what,
            got.re,
            got.im,
            re,
            im
        );
    }

    #[test]
    fn nested_backward_fields_match_hand_calculation() {
        let net = build_preset(PresetKind::Nested);

        let chi1 = backward_field(&net, "D1", 0.0).unwrap();
        assert_eq!(chi1.direction, Direction::Backward);
        assert_eq!(chi1.seed, "S11");
        assert_eq!(chi1.origin.as_deref(), Some("D1"));
        for (edge, re, im) in [
            ("d1", 1.0, 0.0),
            ("e1_b", 0.0, R),
            ("e1_a", 0.0, R),
            ("q1_c", R, 0.0),
            ("q1_b", 0.0, R),
            ("q1_a", 0.0, R),
            ("q2_c", 0.0, 0.5),
            ("q2_b", -0.5, 0.0),
            ("q2_a", -0.5, 0.0),
            ("q3_c", -0.5, 0.0),
            ("q3_b", 0.0, -0.5),
            ("q3_a", 0.0, -0.5),
            ("a1_out", 0.0, 0.0),
            ("a1_in", 0.0, 0.0),
            ("src", -0.5, 0.0),
        ] {
            assert_c(chi1.amplitude(edge).unwrap(), re, im, edge);
        }
        // Readings at the backward detectors: the source port and both vacua.
        let readings = chi1.detector_readings();
        let get = |n: &str| readings.iter().find(|(x, _)| x == n).unwrap().1;
        assert!((get("D11") - 0.25).abs() < RESIDUAL_TOL);
        assert!((get("D22") - 0.25).abs() < RESIDUAL_TOL);
        assert!((get("D33") - 0.5).abs() < RESIDUAL_TOL);

        let chi3 = backward_field(&net, "D3", 0.0).unwrap();
        assert_c(chi3.amplitude("a1_out").unwrap(), -1.0, 0.0, "a1_out");
        assert_c(chi3.amplitude("q1_c").unwrap(), 0.0, 0.0, "q1_c");
        assert_c(chi3.amplitude("q2_c").unwrap(), 0.0, R, "q2_c");
        assert_c(chi3.amplitude("q3_c").unwrap(), R, 0.0, "q3_c");
    }

    #[test]
    fn reciprocity_between_forward_and_backward_readings() {
        // p(D_k | source S1) equals p(D11 | backward seed at D_k): the source
        // port reading of the reversed run.
        for kind in [PresetKind::Simple, PresetKind::Nested, PresetKind::DoubleNested] {
            let net = build_preset(kind);
            let forward = intensitiesof(&net);
            let rev = reverse(&net).unwrap();
            for (det, p_forward) in &forward {
                let seed = backward_seed_name(&rev, det).unwrap();
                let chi = backward_field(&net, det, 0.0).unwrap();
                assert_eq!(chi.seed, seed);
                let p_back = chi
                    .detector_readings()
                    .iter()
                    .find(|(n, _)| n == "D11")
                    .unwrap()
                    .1;
                assert!(
                    (*p_forward - p_back).abs() < RESIDUAL_TOL,
                    "{:?} {}: {} vs {}",
                    kind,
                    det,
                    p_forward,
                    p_back
                );
            }
        }
    }

    fn intensitiesof(net: &Network) -> Vec<(String, f64)> {
        crate::propagate::intensities(&propagate(net, "S1", 0.0).unwrap()).detectors
    }

    #[test]
    fn weak_values_on_the_nested_mid_cut() {
        let net = build_preset(PresetKind::Nested);

        let w2 = weak_values_at(&net, "S1", "D2", "mid", 0.0).unwrap();
        assert_eq!(w2.post_selection, "D2");
        assert_c(w2.denominator, 0.0, -0.5, "denominator D2");
        assert_c(w2.value("q1_c").unwrap(), 1.0, 0.0, "W Q1");
        assert_c(w2.value("q2_c").unwrap(), -0.5, 0.0, "W Q2");
        assert_c(w2.value("q3_c").unwrap(), 0.5, 0.0, "W Q3");
        // The lead into the inner loop carries zero weak value for D2.
        let w2_l3 = weak_values_at(&net, "S1", "D2", "L3", 0.0).unwrap();
        assert_c(w2_l3.value("a1_out").unwrap(), 0.0, 0.0, "W A1 lead");
        assert_c(w2_l3.value("e1_b").unwrap(), 0.0, 0.0, "W E1");

        let w1 = weak_values_at(&net, "S1", "D1", "mid", 0.0).unwrap();
        assert_c(w1.denominator, -0.5, 0.0, "denominator D1");
        assert_c(w1.value("q1_c").unwrap(), 1.0, 0.0, "W Q1 | D1");
        assert_c(w1.value("q2_c").unwrap(), 0.5, 0.0, "W Q2 | D1");
        assert_c(w1.value("q3_c").unwrap(), -0.5, 0.0, "W Q3 | D1");

        let w3 = weak_values_at(&net, "S1", "D3", "mid", 0.0).unwrap();
        assert_c(w3.denominator, -R, 0.0, "denominator D3");
        assert_c(w3.value("q1_c").unwrap(), 0.0, 0.0, "W Q1 | D3");
        assert_c(w3.value("q2_c").unwrap(), 0.5, 0.0, "W Q2 | D3");
        assert_c(w3.value("q3_c").unwrap(), 0.5, 0.0, "W Q3 | D3");
        assert_c(w3.value("a1_out").unwrap(), 1.0, 0.0, "W A1 | D3");

        // Each map sums to exactly 1 across its cut.
        for w in [&w2, &w1, &w3] {
            let total = w.sum_over(&net.cut("mid").unwrap().edges).unwrap();
            assert_c(total, 1.0, 0.0, "cut total");
        }
    }

    #[test]
    fn denominator_is_cut_independent() {
        let net = build_preset(PresetKind::Nested);
        let psi = propagate(&net, "S1", 0.0).unwrap();
        let chi = backward_field(&net, "D2", 0.0).unwrap();
        let reference = weak_values(&net, &psi, &chi, "mid").unwrap().denominator;
        for cut in net.cuts() {
            let w = weak_values(&net, &psi, &chi, &cut.name).unwrap();
            assert!(
                (w.denominator - reference).norm() < RESIDUAL_TOL,
                "cut {}: {} vs {}",
                cut.name,
                w.denominator,
                reference
            );
        }
    }

    #[test]
    fn dark_post_selection_diverges() {
        let net = build_preset(PresetKind::Simple);
        let err = weak_values_at(&net, "S1", "D1", "mid", 0.0).unwrap_err();
        match err {
            TsvfError::DarkPortDivergence { detector, magnitude, tol } => {
                assert_eq!(detector, "D1");
                assert!(magnitude < tol);
            }
            other => panic!("expected divergence, got {:?}", other),
        }
        // The bright port is fine: both arms carry weak value 1/2.
        let w = weak_values_at(&net, "S1", "D2", "mid", 0.0).unwrap();
        assert_c(w.value("arm1b").unwrap(), 0.5, 0.0, "arm1");
        assert_c(w.value("arm2b").unwrap(), 0.5, 0.0, "arm2");

        // Both central detectors of the double-nested variant are dark.
        let dn = build_preset(PresetKind::DoubleNested);
        for det in ["D2", "D3"] {
            assert!(matches!(
                weak_values_at(&dn, "S1", det, "mid", 0.0),
                Err(TsvfError::DarkPortDivergence { .. })
            ));
        }
        // The outer ones are bright.
        assert!(weak_values_at(&dn, "S1", "D1", "mid", 0.0).is_ok());
        assert!(weak_values_at(&dn, "S1", "D4", "mid", 0.0).is_ok());
    }

    #[test]
    fn encounter_probabilities_match_hand_values() {
        let net = build_preset(PresetKind::Nested);
        let em2 = encounter_at(&net, "S1", "D2", 0.0).unwrap();
        assert_eq!(em2.backward_seed, "S22");
        assert_eq!(em2.post_selection, "D2");
        assert!((em2.probability("q1_c").unwrap() - 0.25).abs() < RESIDUAL_TOL);
        assert!((em2.probability("q2_c").unwrap() - 0.0625).abs() < RESIDUAL_TOL);
        assert!((em2.probability("q3_c").unwrap() - 0.0625).abs() < RESIDUAL_TOL);
        assert_eq!(em2.probability("a1_out").unwrap(), 0.0);
        assert_eq!(em2.probability("e1_b").unwrap(), 0.0);

        let em3 = encounter_at(&net, "S1", "D3", 0.0).unwrap();
        assert_eq!(em3.probability("q1_c").unwrap(), 0.0);
        assert!((em3.probability("q2_c").unwrap() - 0.125).abs() < RESIDUAL_TOL);
        assert!((em3.probability("q3_c").unwrap() - 0.125).abs() < RESIDUAL_TOL);

        let abl = abl_normalize(&em2, &net, "mid").unwrap();
        let get = |n: &str| abl.entries.iter().find(|(x, _)| x == n).unwrap().1;
        assert!((get("q1_c") - 2.0 / 3.0).abs() < RESIDUAL_TOL);
        assert!((get("q2_c") - 1.0 / 6.0).abs() < RESIDUAL_TOL);
        assert!((get("q3_c") - 1.0 / 6.0).abs() < RESIDUAL_TOL);
        let total: f64 = abl.entries.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < RESIDUAL_TOL);
    }

    #[test]
    fn double_nested_encounter_is_arm_local() {
        // Post-selecting a central (dark) detector: the only nonzero
        // encounter probabilities sit on the four inner arms.
        let net = build_preset(PresetKind::DoubleNested);
        let em = encounter_at(&net, "S1", "D2", 0.0).unwrap();
        for arm in ["arm_l1a", "arm_l1b", "arm_l2a", "arm_l2b", "arm_r1a", "arm_r1b", "arm_r2a", "arm_r2b"] {
            assert!(
                (em.probability(arm).unwrap() - 0.0625).abs() < RESIDUAL_TOL,
                "{}",
                arm
            );
        }
        for quiet in ["src", "lead_l", "lead_r", "d1", "d4", "dark_la", "dark_rb"] {
            assert_eq!(em.probability(quiet).unwrap(), 0.0, "{}", quiet);
        }
        // No encounter probability ever reaches the input cut, so the
        // conditional distribution there is undefined.
        assert!(matches!(
            abl_normalize(&em, &net, "L1"),
            Err(TsvfError::ZeroCutTotal(_))
        ));
        // On the arm cut (one edge per arm) it renormalizes to 1/4 each.
        let abl = abl_normalize(&em, &net, "mid").unwrap();
        assert_eq!(abl.entries.len(), 4);
        for (_, p) in &abl.entries {
            assert!((p - 0.25).abs() < RESIDUAL_TOL);
        }
    }

    #[test]
    fn audits_pass_on_all_presets() {
        for kind in [PresetKind::Simple, PresetKind::Nested, PresetKind::DoubleNested] {
            let net = build_preset(kind);
            let a = audit(&net, "S1", 0.0).unwrap();
            assert!(a.lossless);
            assert!(
                a.pass(RESIDUAL_TOL),
                "{:?}: max residual {}",
                kind,
                a.max_residual
            );
            // One backward seed per sink; these presets have no open outputs
            // or terminators, so sinks are exactly the detectors.
            assert_eq!(a.backward_seeds.len(), net.detectors().len());
        }
    }

    #[test]
    fn audit_covers_terminators_and_flags_loss() {
        // A terminator is a sink: completeness only closes if it is seeded
        // on the reversed side.
        let mut b = NetworkBuilder::new();
        b.source("S").unwrap();
        b.beamsplitter("BS").unwrap();
        b.detector("D").unwrap();
        b.terminator("T").unwrap();
        b.connect("S", "out", "BS", "in1", Some("src")).unwrap();
        b.connect("BS", "out1", "D", "in", Some("d")).unwrap();
        b.connect("BS", "out2", "T", "in", Some("t")).unwrap();
        b.cut("ends", &["d", "t"]).unwrap();
        let net = b.build();
        let a = audit(&net, "S", 0.0).unwrap();
        assert!(a.lossless);
        assert!(a.backward_seeds.contains(&"T".to_string()));
        assert!(a.pass(RESIDUAL_TOL), "max residual {}", a.max_residual);

        // An absorbing modulator breaks the sum rules and is flagged.
        let lossy = build_preset(PresetKind::Nested)
            .with_modulator(
                "A1",
                crate::netgraph::ModulatorSpec::new(0.5, 0.0, 0.0, 0.0).unwrap(),
            )
            .unwrap();
        let a = audit(&lossy, "S1", 0.0).unwrap();
        assert!(!a.lossless);
        assert!(!a.pass(RESIDUAL_TOL));
    }

    #[test]
    fn audit_reports_every_rule_family() {
        let net = build_preset(PresetKind::Nested);
        let a = audit(&net, "S1", 0.0).unwrap();
        assert_eq!(a.forward_cuts.len(), 10);
        assert_eq!(a.encounter_cuts.len(), 10);
        assert_eq!(a.backward_cuts.len(), 30); // 3 seeds x 10 cuts
        assert_eq!(a.edge_completeness.len(), 19);
        assert_eq!(a.encounter_edges.len(), 19);
        let v = a.to_json();
        assert_eq!(v["kind"], "check");
        assert_eq!(v["backward_seeds"], json!(["S11", "S22", "S33"]));
        let csv = a.to_csv();
        assert!(csv.starts_with("rule,subject,total,residual\n"));
        assert_eq!(csv.lines().count(), 1 + 10 + 10 + 30 + 19 + 19);
    }
}
