//! Scattering simulator for lossless beam-splitter networks (Mach-Zehnder
//! interferometers, including nested and double-nested variants).
//!
//! The crate models an interferometer as a directed port graph ([`netgraph`]),
//! propagates complex field amplitudes through it ([`propagate`]), combines
//! forward- and backward-propagating fields into weak values and encounter
//! probabilities ([`tsvf`]), resolves slow amplitude modulation of individual
//! elements into Fourier perturbation orders ([`modulation`]), and draws the
//! resulting maps as SVG schematics ([`render`]).
//!
//! # Quick start
//!
//! ```
//! use wavecut::netgraph::{build_preset, PresetKind};
//! use wavecut::propagate::{propagate, intensities};
//!
//! let net = build_preset(PresetKind::Nested);
//! let psi = propagate(&net, "S1", 0.0).unwrap();
//! let im = intensities(&psi);
//! assert!((im.detector("D3").unwrap() - 0.5).abs() < 1e-12);
//! ```

pub mod modulation;
pub mod netgraph;
pub mod propagate;
pub mod render;
pub mod tsvf;

/// Default tolerance for sum-rule residuals and zero classification.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Post-selections whose denominator magnitude falls below this are treated
/// as dark (the weak value diverges).
pub const DIVERGENCE_TOL: f64 = 1e-10;

/// Format a float with 17 significant digits (round-trip exact for f64).
pub(crate) fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}
