//! Canned measurement campaigns on the single-nested network.
//!
//! Each scenario drives the five modulators in a characteristic pattern,
//! classifies every detector and edge spectrum, and records enough context
//! (depths, collisions, raw series maxima) to interpret the line tables.

use std::fmt;
use std::str::FromStr;

use serde_json::json;

use super::classify::{classify_with, modulator_groups, ModulatorGroup, OrderReport, CSV_HEADER};
use super::{encounter_series_multi, time_series_multi, ModulationError, SamplingPlan};
use crate::netgraph::{build_preset, ComponentKind, ModulatorSpec, NetError, Network, PresetKind};

/// Modulation depth used by every scenario.
pub const SCENARIO_DEPTH: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// All five modulators driven at pairwise-distinct tones.
    Fig5a,
    /// Inner arms B1 and C1 share one tone, keeping the dark path dark.
    Fig5b,
    /// Outer arm blocked outright: A2 has `tau0 = 0`.
    Fig5c,
    /// Encounter probabilities against post-selection on D1, distinct tones.
    Fig5d,
    /// Encounter probabilities with the inner arms sharing one tone.
    Fig5e,
}

pub fn scenario_names() -> &'static [&'static str] {
    &["fig5a", "fig5b", "fig5c", "fig5d", "fig5e"]
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Fig5a => "fig5a",
            ScenarioKind::Fig5b => "fig5b",
            ScenarioKind::Fig5c => "fig5c",
            ScenarioKind::Fig5d => "fig5d",
            ScenarioKind::Fig5e => "fig5e",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ScenarioKind::Fig5a => {
                "five distinct tones; forward spectra of every detector and edge"
            }
            ScenarioKind::Fig5b => {
                "B1 and C1 locked to one tone with equal depth and phase; the \
                 recombined inner output cancels exactly and the E1 path stays dark"
            }
            ScenarioKind::Fig5c => {
                "outer arm blocked (tau0 = 0 on A2); the dark port carries only \
                 second-order inner-loop light"
            }
            ScenarioKind::Fig5d => {
                "encounter probabilities between the source field and the \
                 backward field from D1, five distinct tones"
            }
            ScenarioKind::Fig5e => {
                "encounter probabilities from D1 with B1 and C1 locked to one \
                 tone; the inner-loop lead and the E1 path carry exactly zero"
            }
        }
    }

    /// True for the encounter (pre- and post-selected) campaigns.
    pub fn is_encounter(&self) -> bool {
        matches!(self, ScenarioKind::Fig5d | ScenarioKind::Fig5e)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, NetError> {
        match s {
            "fig5a" => Ok(ScenarioKind::Fig5a),
            "fig5b" => Ok(ScenarioKind::Fig5b),
            "fig5c" => Ok(ScenarioKind::Fig5c),
            "fig5d" => Ok(ScenarioKind::Fig5d),
            "fig5e" => Ok(ScenarioKind::Fig5e),
            other => Err(NetError::UnknownComponent(format!("scenario `{}`", other))),
        }
    }
}

/// The nested preset with the scenario's drive pattern applied.
pub fn configured_network(kind: ScenarioKind) -> Result<Network, NetError> {
    let base = build_preset(PresetKind::Nested);
    let mut net = base.clone();
    for (i, spec) in base.modulators() {
        let name = base.components()[i].name.clone();
        let mut s = spec;
        if matches!(kind, ScenarioKind::Fig5c) && name == "A2" {
            s.tau0 = 0.0;
            s.eps0 = 0.0;
        } else {
            s.eps0 = SCENARIO_DEPTH;
        }
        if matches!(kind, ScenarioKind::Fig5b | ScenarioKind::Fig5e) && name == "C1" {
            s.freq = 7.0;
        }
        net = net.with_modulator(&name, s)?;
    }
    Ok(net)
}

/// Detector names plus every non-detector edge, in declaration order.
fn scenario_targets(net: &Network) -> Vec<String> {
    let mut targets: Vec<String> = net
        .detectors()
        .iter()
        .map(|&i| net.components()[i].name.clone())
        .collect();
    for (i, e) in net.edges().iter().enumerate() {
        if !matches!(net.components()[e.to].kind, ComponentKind::Detector) {
            targets.push(net.edge_name(i));
        }
    }
    targets
}

/// Frequencies (as sums and differences up to two tones) reachable from more
/// than one participant set — the bins where frequency arithmetic alone
/// cannot attribute a line.
fn frequency_collisions(groups: &[ModulatorGroup]) -> Vec<String> {
    use std::collections::{BTreeMap, BTreeSet};
    let mut seen: BTreeMap<u64, BTreeSet<String>> = BTreeMap::new();
    let mut note = |f: f64, who: String| {
        if f > 1e-9 {
            seen.entry((f * 1e6).round() as u64).or_default().insert(who);
        }
    };
    for (i, a) in groups.iter().enumerate() {
        note(a.freq, a.label.clone());
        for b in &groups[i..] {
            let mut pair = [a.label.clone(), b.label.clone()];
            pair.sort();
            let who = pair.join("+");
            note(a.freq + b.freq, who.clone());
            note((a.freq - b.freq).abs(), who);
        }
    }
    seen.into_iter()
        .filter(|(_, who)| who.len() > 1)
        .map(|(key, who)| {
            format!(
                "{} Hz: {}",
                key as f64 / 1e6,
                who.into_iter().collect::<Vec<_>>().join(" vs ")
            )
        })
        .collect()
}

/// Everything one scenario run produces.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub kind: ScenarioKind,
    pub description: String,
    /// Final drive settings, in declaration order.
    pub modulators: Vec<(String, ModulatorSpec)>,
    pub forward_seed: String,
    /// Post-selected detector for encounter campaigns.
    pub post_selection: Option<String>,
    pub plan: SamplingPlan,
    /// Bins reachable by more than one tone combination.
    pub collisions: Vec<String>,
    /// Largest raw sample per target; exact zero marks dead support.
    pub series_max: Vec<(String, f64)>,
    pub reports: Vec<OrderReport>,
}

impl ScenarioReport {
    pub fn report_for(&self, target: &str) -> Option<&OrderReport> {
        self.reports.iter().find(|r| r.target == target)
    }

    pub fn max_for(&self, target: &str) -> Option<f64> {
        self.series_max
            .iter()
            .find(|(t, _)| t == target)
            .map(|(_, m)| *m)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "scenario": self.kind.name(),
            "description": self.description,
            "modulators": self.modulators.iter().map(|(name, s)| json!({
                "name": name,
                "tau0": s.tau0,
                "eps": s.eps0,
                "freq": s.freq,
                "delta": s.delta,
            })).collect::<Vec<_>>(),
            "forward_seed": self.forward_seed,
            "post_selection": self.post_selection,
            "plan": {"duration": self.plan.duration, "samples": self.plan.samples},
            "collisions": self.collisions,
            "series_max": self.series_max.iter().map(|(t, m)| json!({
                "target": t,
                "max": m,
            })).collect::<Vec<_>>(),
            "reports": self.reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        for r in &self.reports {
            r.csv_rows(&mut out);
        }
        out
    }
}

/// Run a scenario with the default sampling plan.
pub fn scenario(kind: ScenarioKind) -> Result<ScenarioReport, ModulationError> {
    scenario_with_plan(kind, &SamplingPlan::default())
}

pub fn scenario_with_plan(
    kind: ScenarioKind,
    plan: &SamplingPlan,
) -> Result<ScenarioReport, ModulationError> {
    let net = configured_network(kind)?;
    let targets = scenario_targets(&net);
    let seed = "S1".to_string();
    let post = kind.is_encounter().then(|| "D1".to_string());
    let out = match &post {
        Some(detector) => classify_with(&net, &targets, plan, |n| {
            encounter_series_multi(n, &seed, detector, &targets, plan)
        })?,
        None => classify_with(&net, &targets, plan, |n| {
            time_series_multi(n, &seed, &targets, plan)
        })?,
    };
    let series_max = targets
        .iter()
        .cloned()
        .zip(out.base.iter().map(|s| s.iter().cloned().fold(0.0, f64::max)))
        .collect();
    let modulators = net
        .modulators()
        .iter()
        .map(|(i, s)| (net.components()[*i].name.clone(), *s))
        .collect();
    Ok(ScenarioReport {
        kind,
        description: kind.description().to_string(),
        modulators,
        forward_seed: seed,
        post_selection: post,
        plan: *plan,
        collisions: frequency_collisions(&modulator_groups(&net)),
        series_max,
        reports: out.reports,
    })
}
