//! Perturbation-order attribution of spectral lines.
//!
//! Rather than trusting frequency arithmetic (which is ambiguous whenever a
//! sum or difference of tones lands on another reachable bin), every line is
//! classified by how it *scales*: the run is repeated with all depths halved
//! (total order), then once per frequency group with only that group halved
//! (per-group multiplicity). Modulators that share a frequency are halved
//! together, since their individual contributions cannot be told apart from
//! the outside.

use serde_json::json;

use super::spectrum::{spectrum, Spectrum};
use super::{encounter_series_multi, time_series_multi, ModulationError, SamplingPlan};
use crate::netgraph::{ComponentKind, Network};

/// Bins dimmer than `LINE_REL * dc` (or `LINE_ABS` outright) are noise.
pub(crate) const LINE_REL: f64 = 1e-10;
pub(crate) const LINE_ABS: f64 = 1e-13;
/// A measured scaling exponent must sit this close to an integer.
const EXPONENT_TOL: f64 = 0.05;
/// Group multiplicities within this of an integer count as exact.
const MULTIPLICITY_TOL: f64 = 0.1;
/// Groups that move a line by less than this factor (in log2) are bystanders.
const PARTICIPANT_MIN: f64 = 0.1;
/// Deepest order reported; steeper scalings land in `unclassified`.
const MAX_ORDER: u32 = 3;

/// Modulators that share a drive frequency, halved as one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorGroup {
    /// `A1` for a singleton, `(B1+C1)` for a shared tone.
    pub label: String,
    pub members: Vec<String>,
    pub freq: f64,
}

/// Active modulators grouped by exact drive frequency, ascending.
pub fn modulator_groups(net: &Network) -> Vec<ModulatorGroup> {
    let mut groups: Vec<ModulatorGroup> = Vec::new();
    let mods = net.modulators();
    let mut order: Vec<usize> = (0..mods.len()).filter(|&i| mods[i].1.active()).collect();
    order.sort_by(|&a, &b| mods[a].1.freq.total_cmp(&mods[b].1.freq));
    for i in order {
        let (ci, spec) = &mods[i];
        let name = net.components()[*ci].name.clone();
        match groups.last_mut() {
            Some(g) if g.freq == spec.freq => g.members.push(name),
            _ => groups.push(ModulatorGroup {
                label: String::new(),
                members: vec![name],
                freq: spec.freq,
            }),
        }
    }
    for g in &mut groups {
        g.label = if g.members.len() == 1 {
            g.members[0].clone()
        } else {
            format!("({})", g.members.join("+"))
        };
    }
    groups
}

fn with_members_scaled(net: &Network, members: &[String], factor: f64) -> Network {
    let mut out = net.clone();
    for c in &mut out.components {
        if let ComponentKind::Modulator(ref mut spec) = c.kind {
            if members.contains(&c.name) {
                spec.eps0 *= factor;
            }
        }
    }
    out
}

/// One classified spectral line.
#[derive(Debug, Clone)]
pub struct OrderLine {
    pub frequency: f64,
    pub amplitude: f64,
    /// Total perturbation order, from the all-halved scaling exponent.
    pub order: u32,
    /// Raw `log2(base/halved)` measurement behind `order`.
    pub scaling_exponent: f64,
    /// Group labels with multiplicity for clean lines (`["A1", "B1"]`, or
    /// `["B1", "B1"]` for a second harmonic); the participant set for
    /// composite lines.
    pub combination: Vec<String>,
    /// True when several distinct combinations overlap on this bin, so the
    /// per-group multiplicities are not integers.
    pub composite: bool,
}

/// A bin above the noise floor whose scaling fits no order `1..=3`.
#[derive(Debug, Clone)]
pub struct UnclassifiedLine {
    pub frequency: f64,
    pub amplitude: f64,
    pub scaling_exponent: f64,
}

/// Classified spectrum of one target (detector or edge probability).
#[derive(Debug, Clone)]
pub struct OrderReport {
    pub target: String,
    pub dc: f64,
    pub bin_hz: f64,
    pub groups: Vec<ModulatorGroup>,
    pub lines: Vec<OrderLine>,
    pub unclassified: Vec<UnclassifiedLine>,
}

impl OrderReport {
    /// The line on the bin nearest `hz`, if classified.
    pub fn line_at(&self, hz: f64) -> Option<&OrderLine> {
        self.lines
            .iter()
            .find(|l| (l.frequency - hz).abs() < 1e-6 * self.bin_hz.max(1.0))
    }

    /// Lowest order of any line the named modulator participates in.
    pub fn lowest_order_of(&self, modulator: &str) -> Option<u32> {
        let label = self
            .groups
            .iter()
            .find(|g| g.members.iter().any(|m| m == modulator))?
            .label
            .clone();
        self.lines
            .iter()
            .filter(|l| l.combination.contains(&label))
            .map(|l| l.order)
            .min()
    }

    pub fn first_order_frequencies(&self) -> Vec<f64> {
        self.lines
            .iter()
            .filter(|l| l.order == 1)
            .map(|l| l.frequency)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let finite = |x: f64| if x.is_finite() { json!(x) } else { json!(null) };
        json!({
            "target": self.target,
            "dc": self.dc,
            "bin_hz": self.bin_hz,
            "groups": self.groups.iter().map(|g| json!({
                "label": g.label,
                "members": g.members,
                "frequency": g.freq,
            })).collect::<Vec<_>>(),
            "lines": self.lines.iter().map(|l| json!({
                "frequency": l.frequency,
                "amplitude": l.amplitude,
                "order": l.order,
                "scaling_exponent": finite(l.scaling_exponent),
                "combination": l.combination,
                "composite": l.composite,
            })).collect::<Vec<_>>(),
            "unclassified": self.unclassified.iter().map(|u| json!({
                "frequency": u.frequency,
                "amplitude": u.amplitude,
                "scaling_exponent": finite(u.scaling_exponent),
            })).collect::<Vec<_>>(),
        })
    }

    pub(crate) fn csv_rows(&self, out: &mut String) {
        use std::fmt::Write;
        for l in &self.lines {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.target,
                crate::fmt17(l.frequency),
                crate::fmt17(l.amplitude),
                l.order,
                crate::fmt17(l.scaling_exponent),
                l.combination.join("*"),
                l.composite,
            );
        }
        for u in &self.unclassified {
            let _ = writeln!(
                out,
                "{},{},{},,{},,",
                self.target,
                crate::fmt17(u.frequency),
                crate::fmt17(u.amplitude),
                if u.scaling_exponent.is_finite() {
                    crate::fmt17(u.scaling_exponent)
                } else {
                    String::new()
                },
            );
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        self.csv_rows(&mut out);
        out
    }
}

pub(crate) const CSV_HEADER: &str =
    "target,frequency_hz,amplitude,order,scaling_exponent,combination,composite\n";

/// One CSV document covering several targets, with a single header line.
pub fn reports_to_csv(reports: &[OrderReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    for r in reports {
        r.csv_rows(&mut out);
    }
    out
}

/// Can some signed sum of `freqs` land on `target`?
fn combo_reaches(freqs: &[f64], target: f64) -> bool {
    (0..1u32 << freqs.len()).any(|mask| {
        let sum: f64 = freqs
            .iter()
            .enumerate()
            .map(|(i, f)| if mask >> i & 1 == 1 { -f } else { *f })
            .sum();
        (sum.abs() - target).abs() < 1e-6
    })
}

pub(crate) struct ClassifyOutput {
    pub reports: Vec<OrderReport>,
    /// Unscaled time series, index-aligned with the targets.
    pub base: Vec<Vec<f64>>,
}

/// Shared engine: `runner` produces per-target series for a (possibly depth
/// scaled) copy of the network.
pub(crate) fn classify_with<R>(
    net: &Network,
    targets: &[String],
    plan: &SamplingPlan,
    runner: R,
) -> Result<ClassifyOutput, ModulationError>
where
    R: Fn(&Network) -> Result<Vec<Vec<f64>>, ModulationError>,
{
    let groups = modulator_groups(net);
    let base = runner(net)?;
    let half = runner(&net.with_eps_scaled(0.5))?;
    let per_group: Vec<Vec<Vec<f64>>> = groups
        .iter()
        .map(|g| runner(&with_members_scaled(net, &g.members, 0.5)))
        .collect::<Result<_, _>>()?;

    let mut reports = Vec::with_capacity(targets.len());
    for (ti, target) in targets.iter().enumerate() {
        let s0 = spectrum(&base[ti], plan.duration);
        let sh = spectrum(&half[ti], plan.duration);
        let sg: Vec<Spectrum> = per_group
            .iter()
            .map(|runs| spectrum(&runs[ti], plan.duration))
            .collect();
        let floor = (LINE_REL * s0.dc.abs()).max(LINE_ABS);
        let mut lines = Vec::new();
        let mut unclassified = Vec::new();
        for (i, &a0) in s0.amplitudes().iter().enumerate() {
            if a0 <= floor {
                continue;
            }
            let frequency = s0.frequency_of_bin(i + 1);
            let ah = sh.amplitudes()[i];
            let exponent = if ah > 0.0 { (a0 / ah).log2() } else { f64::INFINITY };
            let nearest = exponent.round();
            if !exponent.is_finite()
                || (exponent - nearest).abs() > EXPONENT_TOL
                || nearest < 1.0
                || nearest > MAX_ORDER as f64
            {
                unclassified.push(UnclassifiedLine {
                    frequency,
                    amplitude: a0,
                    scaling_exponent: exponent,
                });
                continue;
            }
            let order = nearest as u32;
            let mult: Vec<f64> = sg
                .iter()
                .map(|s| {
                    let ag = s.amplitudes()[i];
                    if ag > 0.0 { (a0 / ag).log2() } else { f64::INFINITY }
                })
                .collect();
            let rounded: Vec<i64> = mult
                .iter()
                .map(|m| if m.is_finite() { m.round() as i64 } else { -1 })
                .collect();
            let integral = mult
                .iter()
                .zip(&rounded)
                .all(|(m, &r)| r >= 0 && (m - r as f64).abs() <= MULTIPLICITY_TOL)
                && rounded.iter().sum::<i64>() == order as i64;
            let clean = integral && {
                let freqs: Vec<f64> = groups
                    .iter()
                    .zip(&rounded)
                    .flat_map(|(g, &r)| std::iter::repeat_n(g.freq, r.max(0) as usize))
                    .collect();
                combo_reaches(&freqs, frequency)
            };
            let combination: Vec<String> = if clean {
                groups
                    .iter()
                    .zip(&rounded)
                    .flat_map(|(g, &r)| std::iter::repeat_n(g.label.clone(), r.max(0) as usize))
                    .collect()
            } else {
                // Participant union: any group whose halving moves the line.
                groups
                    .iter()
                    .zip(&mult)
                    .filter(|(_, m)| !m.is_finite() || m.abs() > PARTICIPANT_MIN)
                    .map(|(g, _)| g.label.clone())
                    .collect()
            };
            lines.push(OrderLine {
                frequency,
                amplitude: a0,
                order,
                scaling_exponent: exponent,
                combination,
                composite: !clean,
            });
        }
        reports.push(OrderReport {
            target: target.clone(),
            dc: s0.dc,
            bin_hz: s0.bin_hz,
            groups: groups.clone(),
            lines,
            unclassified,
        });
    }
    Ok(ClassifyOutput { reports, base })
}

/// Classify the spectra of several forward targets at once.
pub fn classify_orders_multi(
    net: &Network,
    seed: &str,
    targets: &[String],
    plan: &SamplingPlan,
) -> Result<Vec<OrderReport>, ModulationError> {
    Ok(classify_with(net, targets, plan, |n| time_series_multi(n, seed, targets, plan))?.reports)
}

/// Classify the spectrum of one forward target.
pub fn classify_orders(
    net: &Network,
    seed: &str,
    target: &str,
    plan: &SamplingPlan,
) -> Result<OrderReport, ModulationError> {
    Ok(classify_orders_multi(net, seed, &[target.to_string()], plan)?.remove(0))
}

/// Classify encounter-probability spectra for several targets under one
/// pre/post-selected pair.
pub fn classify_encounter_orders(
    net: &Network,
    seed: &str,
    detector: &str,
    targets: &[String],
    plan: &SamplingPlan,
) -> Result<Vec<OrderReport>, ModulationError> {
    Ok(classify_with(net, targets, plan, |n| {
        encounter_series_multi(n, seed, detector, targets, plan)
    })?
    .reports)
}
