//! Time-resolved simulation under slow amplitude modulation, Fourier
//! analysis of the resulting detector and edge signals, and classification
//! of spectral lines by perturbation order.

mod classify;
mod scenario;
mod spectrum;

pub use classify::{
    classify_encounter_orders, classify_orders, classify_orders_multi, modulator_groups,
    reports_to_csv, ModulatorGroup, OrderLine, OrderReport, UnclassifiedLine,
};
pub use scenario::{
    configured_network, scenario, scenario_names, scenario_with_plan, ScenarioKind,
    ScenarioReport, SCENARIO_DEPTH,
};
pub use spectrum::{spectrum, Spectrum};

use num_complex::Complex64;
use thiserror::Error;

use crate::netgraph::{reverse, NetError, Network};
use crate::propagate::{Prepared, PropagateError};
use crate::tsvf::TsvfError;

#[derive(Debug, Error)]
pub enum ModulationError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Propagate(#[from] PropagateError),
    #[error(transparent)]
    Tsvf(#[from] TsvfError),
    #[error("unknown target `{0}` (not a detector or edge)")]
    UnknownTarget(String),
    #[error("sampling plan needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error(
        "sampling rate {rate} Hz cannot resolve third-order mixing of {fmax} Hz (need > {need} Hz)"
    )]
    UnderSampled { rate: f64, fmax: f64, need: f64 },
    #[error("duration {duration} s does not close a whole number of periods of {freq} Hz")]
    OpenPeriod { duration: f64, freq: f64 },
}

/// How long and how densely to sample the quasi-static time evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    /// Total observation window in seconds.
    pub duration: f64,
    /// Number of evenly spaced samples `t_j = j * duration / samples`.
    pub samples: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self { duration: 1.0, samples: 4096 }
    }
}

impl SamplingPlan {
    pub fn new(duration: f64, samples: usize) -> Self {
        Self { duration, samples }
    }

    /// Spacing of the resulting spectrum bins, `1/duration` Hz.
    pub fn bin_hz(&self) -> f64 {
        1.0 / self.duration
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let dt = self.duration / self.samples as f64;
        (0..self.samples).map(move |j| j as f64 * dt)
    }

    /// Reject plans that alias third-order mixing products or cut periods
    /// open. `freqs` are the active modulation frequencies.
    pub fn check(&self, freqs: &[f64]) -> Result<(), ModulationError> {
        if self.samples < 2 {
            return Err(ModulationError::TooFewSamples(self.samples));
        }
        let fmax = freqs.iter().cloned().fold(0.0, f64::max);
        if fmax == 0.0 {
            return Ok(());
        }
        let rate = self.samples as f64 / self.duration;
        let need = 2.0 * 3.0 * fmax;
        if rate <= need {
            return Err(ModulationError::UnderSampled { rate, fmax, need });
        }
        for &f in freqs {
            let periods = f * self.duration;
            if (periods - periods.round()).abs() > 1e-9 {
                return Err(ModulationError::OpenPeriod { duration: self.duration, freq: f });
            }
        }
        Ok(())
    }
}

/// What a time series tracks: a detector reading or an edge probability.
fn resolve_target(prepared: &Prepared, target: &str) -> Result<usize, ModulationError> {
    let net = prepared.net();
    if let Some(ci) = net.component_index(target) {
        if matches!(net.components()[ci].kind, crate::netgraph::ComponentKind::Detector) {
            let adj_edge = net
                .edges()
                .iter()
                .position(|e| e.to == ci)
                .expect("normalized detector has an input edge");
            return Ok(adj_edge);
        }
        return Err(ModulationError::UnknownTarget(target.into()));
    }
    prepared
        .edge_index(target)
        .ok_or_else(|| ModulationError::UnknownTarget(target.into()))
}

/// Active modulation frequencies (deduplicated) of a network.
pub fn active_frequencies(net: &Network) -> Vec<f64> {
    let mut freqs: Vec<f64> = net
        .modulators()
        .iter()
        .filter(|(_, m)| m.active())
        .map(|(_, m)| m.freq)
        .collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    freqs
}

/// Sampled probability series for several targets under one forward seed.
/// One propagation per sample covers all targets.
pub fn time_series_multi(
    net: &Network,
    seed: &str,
    targets: &[String],
    plan: &SamplingPlan,
) -> Result<Vec<Vec<f64>>, ModulationError> {
    let prepared = Prepared::new(net)?;
    plan.check(&active_frequencies(prepared.net()))?;
    let idx: Vec<usize> = targets
        .iter()
        .map(|t| resolve_target(&prepared, t))
        .collect::<Result<_, _>>()?;
    let mut series = vec![Vec::with_capacity(plan.samples); targets.len()];
    for t in plan.times() {
        let f = prepared.run(seed, Complex64::new(1.0, 0.0), t)?;
        for (s, &i) in series.iter_mut().zip(&idx) {
            s.push(f.amplitudes()[i].norm_sqr());
        }
    }
    Ok(series)
}

/// Sampled probability series for one target.
pub fn time_series(
    net: &Network,
    seed: &str,
    target: &str,
    plan: &SamplingPlan,
) -> Result<Vec<f64>, ModulationError> {
    Ok(time_series_multi(net, seed, &[target.to_string()], plan)?.remove(0))
}

/// Sampled encounter series `P_e(t) = p_forward(t) * p_backward(t)` for
/// several targets, with the backward field seeded by post-selecting
/// `detector` at every sample time.
pub fn encounter_series_multi(
    net: &Network,
    seed: &str,
    detector: &str,
    targets: &[String],
    plan: &SamplingPlan,
) -> Result<Vec<Vec<f64>>, ModulationError> {
    let forward = Prepared::new(net)?;
    plan.check(&active_frequencies(forward.net()))?;
    let rev = reverse(net)?;
    let back_seed = rev
        .meta
        .site_map
        .iter()
        .find(|(old, _)| old == detector)
        .map(|(_, new)| new.clone())
        .or_else(|| {
            rev.component(detector)
                .filter(|c| matches!(c.kind, crate::netgraph::ComponentKind::Source))
                .map(|_| detector.to_string())
        })
        .ok_or_else(|| TsvfError::UnknownDetector(detector.into()))
        .map_err(ModulationError::Tsvf)?;
    let backward = Prepared::new(&rev)?;
    let idx: Vec<usize> = targets
        .iter()
        .map(|t| resolve_target(&forward, t))
        .collect::<Result<_, _>>()?;
    let mut series = vec![Vec::with_capacity(plan.samples); targets.len()];
    for t in plan.times() {
        let psi = forward.run(seed, Complex64::new(1.0, 0.0), t)?;
        let chi = backward.run(&back_seed, Complex64::new(1.0, 0.0), t)?;
        for (s, &i) in series.iter_mut().zip(&idx) {
            s.push(psi.amplitudes()[i].norm_sqr() * chi.amplitudes()[i].norm_sqr());
        }
    }
    Ok(series)
}
