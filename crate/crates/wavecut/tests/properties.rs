//! Randomized invariants: propagation against a path-enumeration oracle,
//! conservation laws, reversal and parser round-trips, weak-value structure,
//! and transform identities.

mod common;

use common::{path_amplitudes, random_network, source_edge};
use num_complex::Complex64;
use proptest::prelude::*;
use wavecut::modulation::{configured_network, spectrum, ScenarioKind};
use wavecut::netgraph::{normalize, parse_network, reverse, to_netlist};
use wavecut::propagate::{propagate, Prepared};
use wavecut::tsvf::{audit, backward_field, weak_values_at};
use wavecut::RESIDUAL_TOL;

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagation_matches_path_enumeration(seed in 0u64..1_000_000, t in 0.0f64..1.0) {
        let net = random_network(seed);
        let f = propagate(&net, "S1", t).unwrap();
        for (name, want) in path_amplitudes(&net, "S1", t) {
            let got = f.amplitude(&name).unwrap();
            prop_assert!(close(got, want), "{}: got {}, want {}", name, got, want);
        }
    }

    #[test]
    fn modulated_propagation_matches_path_enumeration(t in 0.0f64..1.0) {
        // Repeat the oracle comparison with live modulators in the paths.
        let net = configured_network(ScenarioKind::Fig5a).unwrap();
        let f = propagate(&net, "S1", t).unwrap();
        for (name, want) in path_amplitudes(&net, "S1", t) {
            let got = f.amplitude(&name).unwrap();
            prop_assert!(close(got, want), "{}: got {}, want {}", name, got, want);
        }
    }

    #[test]
    fn sum_rules_hold_on_random_networks(seed in 0u64..1_000_000, t in 0.0f64..1.0) {
        let report = audit(&random_network(seed), "S1", t).unwrap();
        prop_assert!(report.lossless);
        prop_assert!(report.pass(RESIDUAL_TOL), "max residual {}", report.max_residual);
    }

    #[test]
    fn propagation_is_linear(
        seed in 0u64..1_000_000,
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
        t in 0.0f64..1.0,
    ) {
        let net = random_network(seed);
        let prepared = Prepared::new(&net).unwrap();
        let unit = prepared.run("S1", Complex64::new(1.0, 0.0), t).unwrap();
        let amp = Complex64::new(re, im);
        let scaled = prepared.run("S1", amp, t).unwrap();
        for (u, s) in unit.amplitudes().iter().zip(scaled.amplitudes()) {
            prop_assert!(close(*s, amp * u));
        }
    }

    #[test]
    fn detector_readings_are_reciprocal(seed in 0u64..1_000_000, t in 0.0f64..1.0) {
        // Reading at D_k from a unit seed at S1 equals the reading back at
        // S1's port when the reversed network is seeded from D_k's site.
        let net = random_network(seed);
        let src = source_edge(&net, "S1");
        let f = propagate(&net, "S1", t).unwrap();
        for (detector, p_forward) in f.detector_readings() {
            let chi = backward_field(&net, &detector, t).unwrap();
            let p_back = chi.probability(&src).unwrap();
            prop_assert!(
                (p_forward - p_back).abs() < 1e-12,
                "{}: forward {}, back {}", detector, p_forward, p_back
            );
        }
    }

    #[test]
    fn reversal_is_structurally_involutive(seed in 0u64..1_000_000) {
        let net = normalize(&random_network(seed)).unwrap();
        let back = reverse(&reverse(&net).unwrap()).unwrap();
        prop_assert_eq!(net.edges(), back.edges());
        prop_assert_eq!(net.channels(), back.channels());
        prop_assert_eq!(net.cuts(), back.cuts());
        for (a, b) in net.components().iter().zip(back.components()) {
            prop_assert_eq!(&a.kind, &b.kind);
        }
    }

    #[test]
    fn netlists_round_trip(seed in 0u64..1_000_000) {
        let net = random_network(seed);
        let text = to_netlist(&net);
        let parsed = parse_network(&text).unwrap();
        prop_assert_eq!(&parsed, &net);
        prop_assert_eq!(to_netlist(&parsed), text);
    }

    #[test]
    fn weak_value_denominator_is_cut_independent(seed in 0u64..1_000_000, t in 0.0f64..1.0) {
        let net = random_network(seed);
        let f = propagate(&net, "S1", t).unwrap();
        // The brightest detector is never dark: readings sum to 1.
        let (detector, _) = f
            .detector_readings()
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let one = Complex64::new(1.0, 0.0);
        let mut denominators = Vec::new();
        for cut in net.cuts().to_vec() {
            let w = weak_values_at(&net, "S1", &detector, &cut.name, t).unwrap();
            let total = w.sum_over(&cut.edges).unwrap();
            prop_assert!(close(total, one), "cut {} sums to {}", cut.name, total);
            denominators.push(w.denominator);
        }
        for d in &denominators[1..] {
            prop_assert!(close(*d, denominators[0]));
        }
    }

    #[test]
    fn spectrum_preserves_mean_square_power(
        samples in prop::collection::vec(-1.0f64..1.0, 8..200),
        duration in 0.1f64..10.0,
    ) {
        let sp = spectrum(&samples, duration);
        let time_domain =
            samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
        prop_assert!((sp.mean_square() - time_domain).abs() < 1e-9 * time_domain.max(1.0));
    }

    #[test]
    fn tone_amplitude_is_recovered_exactly(
        k in 1usize..20,
        amp in 0.01f64..2.0,
        phase in 0.0f64..std::f64::consts::TAU,
    ) {
        // One on-grid tone lands in one bin at its amplitude.
        let n = 256;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                amp * (std::f64::consts::TAU * k as f64 * t + phase).cos()
            })
            .collect();
        let sp = spectrum(&samples, 1.0);
        prop_assert!((sp.amplitude_at(k as f64).unwrap() - amp).abs() < 1e-12 * amp.max(1.0));
        for (j, a) in sp.amplitudes().iter().enumerate() {
            if j + 1 != k {
                prop_assert!(a.abs() < 1e-12, "leak {} in bin {}", a, j + 1);
            }
        }
    }
}
