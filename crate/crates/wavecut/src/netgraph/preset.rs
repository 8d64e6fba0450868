//! Built-in networks: a plain two-arm loop, the single-nested variant with
//! five modulators, and a double-nested variant whose central detectors sit
//! on dark fringes.

use std::fmt;
use std::str::FromStr;

use super::model::{ModulatorSpec, NetError, Network, NetworkBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    /// Balanced two-arm loop: one splitter pair, two mirrors, two detectors.
    /// D1 sits on the dark fringe.
    Simple,
    /// Inner two-arm loop (arms Q2/Q3) nested inside an outer loop whose
    /// other arm is Q1. Five modulators at pairwise-distinct frequencies
    /// (A2: 3, A1: 5, B1: 7, C1: 11, E1: 17 Hz), all with zero depth until
    /// configured.
    Nested,
    /// Two inner loops in parallel, their dark outputs recombined on a final
    /// splitter; the central detectors D2/D3 receive nothing.
    DoubleNested,
}

impl PresetKind {
    pub fn name(&self) -> &'static str {
        match self {
            PresetKind::Simple => "simple",
            PresetKind::Nested => "nested",
            PresetKind::DoubleNested => "double_nested",
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetKind {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, NetError> {
        match s {
            "simple" => Ok(PresetKind::Simple),
            "nested" => Ok(PresetKind::Nested),
            "double_nested" | "double-nested" => Ok(PresetKind::DoubleNested),
            other => Err(NetError::UnknownComponent(format!("preset `{}`", other))),
        }
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &["simple", "nested", "double_nested"]
}

fn freq(f: f64) -> ModulatorSpec {
    ModulatorSpec { freq: f, ..ModulatorSpec::default() }
}

fn simple() -> Network {
    let mut b = NetworkBuilder::new();
    b.source("S1").unwrap();
    b.beamsplitter("BS1").unwrap();
    b.mirror("M1").unwrap();
    b.mirror("M2").unwrap();
    b.beamsplitter("BS2").unwrap();
    b.detector("D1").unwrap();
    b.detector("D2").unwrap();

    b.connect("S1", "out", "BS1", "in1", Some("src")).unwrap();
    b.connect("BS1", "out1", "M1", "in", Some("arm1a")).unwrap();
    b.connect("M1", "out", "BS2", "in1", Some("arm1b")).unwrap();
    b.connect("BS1", "out2", "M2", "in", Some("arm2a")).unwrap();
    b.connect("M2", "out", "BS2", "in2", Some("arm2b")).unwrap();
    b.connect("BS2", "out1", "D1", "in", Some("d1")).unwrap();
    b.connect("BS2", "out2", "D2", "in", Some("d2")).unwrap();

    b.channel("Q1", &["arm1a", "arm1b"]).unwrap();
    b.channel("Q2", &["arm2a", "arm2b"]).unwrap();

    b.cut("L1", &["src", "__vac_BS1_in2"]).unwrap();
    b.cut("L2", &["arm1a", "arm2a"]).unwrap();
    b.cut("mid", &["arm1b", "arm2b"]).unwrap();
    b.cut("detectors", &["d1", "d2"]).unwrap();

    for (name, x, y) in [
        ("S1", 40.0, 200.0),
        ("BS1", 150.0, 200.0),
        ("M1", 260.0, 90.0),
        ("M2", 260.0, 310.0),
        ("BS2", 420.0, 200.0),
        ("D1", 540.0, 120.0),
        ("D2", 540.0, 280.0),
    ] {
        b.layout(name, x, y);
    }
    b.build()
}

fn nested() -> Network {
    let mut b = NetworkBuilder::new();
    b.source("S1").unwrap();
    b.beamsplitter("BS1").unwrap();
    b.modulator("A2", freq(3.0)).unwrap();
    b.mirror("M1").unwrap();
    b.modulator("A1", freq(5.0)).unwrap();
    b.beamsplitter("BS2").unwrap();
    b.modulator("B1", freq(7.0)).unwrap();
    b.mirror("M2").unwrap();
    b.modulator("C1", freq(11.0)).unwrap();
    b.mirror("M3").unwrap();
    b.beamsplitter("BS3").unwrap();
    b.modulator("E1", freq(17.0)).unwrap();
    b.beamsplitter("BS4").unwrap();
    b.detector("D1").unwrap();
    b.detector("D2").unwrap();
    b.detector("D3").unwrap();

    b.connect("S1", "out", "BS1", "in1", Some("src")).unwrap();
    // Outer reference arm Q1.
    b.connect("BS1", "out2", "A2", "in", Some("q1_a")).unwrap();
    b.connect("A2", "out", "M1", "in", Some("q1_b")).unwrap();
    b.connect("M1", "out", "BS4", "in2", Some("q1_c")).unwrap();
    // Lead into the inner loop.
    b.connect("BS1", "out1", "A1", "in", Some("a1_in")).unwrap();
    b.connect("A1", "out", "BS2", "in1", Some("a1_out")).unwrap();
    // Inner arms Q2 / Q3.
    b.connect("BS2", "out1", "B1", "in", Some("q2_a")).unwrap();
    b.connect("B1", "out", "M2", "in", Some("q2_b")).unwrap();
    b.connect("M2", "out", "BS3", "in1", Some("q2_c")).unwrap();
    b.connect("BS2", "out2", "C1", "in", Some("q3_a")).unwrap();
    b.connect("C1", "out", "M3", "in", Some("q3_b")).unwrap();
    b.connect("M3", "out", "BS3", "in2", Some("q3_c")).unwrap();
    // Inner dark output through E1 back to the outer recombiner.
    b.connect("BS3", "out1", "E1", "in", Some("e1_a")).unwrap();
    b.connect("E1", "out", "BS4", "in1", Some("e1_b")).unwrap();
    b.connect("BS3", "out2", "D3", "in", Some("d3")).unwrap();
    b.connect("BS4", "out1", "D2", "in", Some("d2")).unwrap();
    b.connect("BS4", "out2", "D1", "in", Some("d1")).unwrap();

    b.channel("Q1", &["q1_a", "q1_b", "q1_c"]).unwrap();
    b.channel("Q2", &["q2_a", "q2_b", "q2_c"]).unwrap();
    b.channel("Q3", &["q3_a", "q3_b", "q3_c"]).unwrap();

    b.cut("L1", &["src", "__vac_BS1_in2", "__vac_BS2_in2"]).unwrap();
    b.cut("L2", &["q1_a", "a1_in", "__vac_BS2_in2"]).unwrap();
    b.cut("L3", &["q1_b", "a1_out", "__vac_BS2_in2"]).unwrap();
    b.cut("L4", &["q1_b", "q2_a", "q3_a"]).unwrap();
    b.cut("L5", &["q1_b", "q2_b", "q3_b"]).unwrap();
    b.cut("L6", &["q1_c", "q2_c", "q3_c"]).unwrap();
    b.cut("mid", &["q1_c", "q2_c", "q3_c"]).unwrap();
    b.cut("L7", &["q1_c", "e1_a", "d3"]).unwrap();
    b.cut("L8", &["q1_c", "e1_b", "d3"]).unwrap();
    b.cut("detectors", &["d1", "d2", "d3"]).unwrap();

    for (name, x, y) in [
        ("S1", 40.0, 220.0),
        ("BS1", 140.0, 220.0),
        ("A2", 220.0, 80.0),
        ("M1", 420.0, 80.0),
        ("A1", 220.0, 220.0),
        ("BS2", 300.0, 220.0),
        ("B1", 380.0, 160.0),
        ("M2", 470.0, 160.0),
        ("C1", 380.0, 285.0),
        ("M3", 470.0, 285.0),
        ("BS3", 550.0, 220.0),
        ("E1", 625.0, 150.0),
        ("D3", 625.0, 300.0),
        ("BS4", 700.0, 80.0),
        ("D2", 820.0, 80.0),
        ("D1", 700.0, 200.0),
    ] {
        b.layout(name, x, y);
    }
    b.build()
}

fn double_nested() -> Network {
    let mut b = NetworkBuilder::new();
    b.source("S1").unwrap();
    b.beamsplitter("BS1").unwrap();
    b.beamsplitter("BS2L").unwrap();
    b.mirror("ML1").unwrap();
    b.mirror("ML2").unwrap();
    b.beamsplitter("BS3L").unwrap();
    b.mirror("M2a").unwrap();
    b.beamsplitter("BS2R").unwrap();
    b.mirror("MR1").unwrap();
    b.mirror("MR2").unwrap();
    b.beamsplitter("BS3R").unwrap();
    b.mirror("M2b").unwrap();
    b.beamsplitter("BS4").unwrap();
    b.detector("D1").unwrap();
    b.detector("D2").unwrap();
    b.detector("D3").unwrap();
    b.detector("D4").unwrap();

    b.connect("S1", "out", "BS1", "in1", Some("src")).unwrap();
    b.connect("BS1", "out1", "BS2L", "in1", Some("lead_l")).unwrap();
    b.connect("BS1", "out2", "BS2R", "in1", Some("lead_r")).unwrap();
    // Left inner loop.
    b.connect("BS2L", "out1", "ML1", "in", Some("arm_l1a")).unwrap();
    b.connect("ML1", "out", "BS3L", "in1", Some("arm_l1b")).unwrap();
    b.connect("BS2L", "out2", "ML2", "in", Some("arm_l2a")).unwrap();
    b.connect("ML2", "out", "BS3L", "in2", Some("arm_l2b")).unwrap();
    b.connect("BS3L", "out2", "D1", "in", Some("d1")).unwrap();
    b.connect("BS3L", "out1", "M2a", "in", Some("dark_la")).unwrap();
    b.connect("M2a", "out", "BS4", "in1", Some("dark_lb")).unwrap();
    // Right inner loop.
    b.connect("BS2R", "out1", "MR1", "in", Some("arm_r1a")).unwrap();
    b.connect("MR1", "out", "BS3R", "in1", Some("arm_r1b")).unwrap();
    b.connect("BS2R", "out2", "MR2", "in", Some("arm_r2a")).unwrap();
    b.connect("MR2", "out", "BS3R", "in2", Some("arm_r2b")).unwrap();
    b.connect("BS3R", "out2", "D4", "in", Some("d4")).unwrap();
    b.connect("BS3R", "out1", "M2b", "in", Some("dark_ra")).unwrap();
    b.connect("M2b", "out", "BS4", "in2", Some("dark_rb")).unwrap();
    // Central recombination of the two dark outputs.
    b.connect("BS4", "out1", "D2", "in", Some("d2")).unwrap();
    b.connect("BS4", "out2", "D3", "in", Some("d3")).unwrap();

    b.channel("Q1", &["arm_l1a", "arm_l1b"]).unwrap();
    b.channel("Q2", &["arm_l2a", "arm_l2b"]).unwrap();
    b.channel("Q3", &["arm_r1a", "arm_r1b"]).unwrap();
    b.channel("Q4", &["arm_r2a", "arm_r2b"]).unwrap();

    b.cut(
        "L1",
        &["src", "__vac_BS1_in2", "__vac_BS2L_in2", "__vac_BS2R_in2"],
    )
    .unwrap();
    b.cut(
        "L2",
        &["lead_l", "lead_r", "__vac_BS2L_in2", "__vac_BS2R_in2"],
    )
    .unwrap();
    b.cut("L3", &["arm_l1a", "arm_l2a", "arm_r1a", "arm_r2a"]).unwrap();
    b.cut("mid", &["arm_l1b", "arm_l2b", "arm_r1b", "arm_r2b"]).unwrap();
    b.cut("L5", &["d1", "dark_la", "dark_ra", "d4"]).unwrap();
    b.cut("L6", &["d1", "dark_lb", "dark_rb", "d4"]).unwrap();
    b.cut("detectors", &["d1", "d2", "d3", "d4"]).unwrap();

    for (name, x, y) in [
        ("S1", 40.0, 240.0),
        ("BS1", 130.0, 240.0),
        ("BS2L", 230.0, 130.0),
        ("ML1", 320.0, 70.0),
        ("ML2", 320.0, 190.0),
        ("BS3L", 410.0, 130.0),
        ("D1", 480.0, 60.0),
        ("M2a", 500.0, 180.0),
        ("BS2R", 230.0, 350.0),
        ("MR1", 320.0, 290.0),
        ("MR2", 320.0, 410.0),
        ("BS3R", 410.0, 350.0),
        ("D4", 480.0, 420.0),
        ("M2b", 500.0, 300.0),
        ("BS4", 590.0, 240.0),
        ("D2", 690.0, 190.0),
        ("D3", 690.0, 290.0),
    ] {
        b.layout(name, x, y);
    }
    b.build()
}

/// Construct a preset network. The result validates cleanly; open splitter
/// inputs are left for normalization to close.
pub fn build_preset(kind: PresetKind) -> Network {
    let mut net = match kind {
        PresetKind::Simple => simple(),
        PresetKind::Nested => nested(),
        PresetKind::DoubleNested => double_nested(),
    };
    net.meta.preset = Some(kind.name().to_string());
    net
}
