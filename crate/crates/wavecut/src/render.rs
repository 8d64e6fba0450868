//! Deterministic SVG rendering: network schematics with per-edge scalar
//! fields encoded in stroke width, and modulation maps showing which tones
//! flow through which edges.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::modulation::{ModulatorGroup, OrderReport};
use crate::netgraph::{ComponentKind, Network};

/// Stroke width bounds in px: `clamp(scale * |value|, MIN_STROKE, MAX_STROKE)`.
pub const MIN_STROKE: f64 = 0.5;
pub const MAX_STROKE: f64 = 12.0;
/// Values at or below this magnitude render as dashed traces.
pub const ZERO_STROKE_TOL: f64 = 1e-12;

/// Per-modulator line colors; groups beyond the palette cycle through it.
const PALETTE: [(&str, &str); 5] = [
    ("A2", "#2c6fbb"),
    ("A1", "#3fa34d"),
    ("B1", "#d43a2f"),
    ("C1", "#27b5c4"),
    ("E1", "#c62cc4"),
];

#[derive(Debug, Clone)]
pub struct RenderOptions {
    /// Legend caption, e.g. the quantity being drawn.
    pub title: Option<String>,
    /// Stroke px per unit of |value|.
    pub scale: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { title: None, scale: 10.0 }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Component positions: schematic coordinates from metadata when complete,
/// otherwise a layered left-to-right placement by longest path from sources.
fn positions(net: &Network) -> Vec<(f64, f64)> {
    let from_meta: Vec<Option<(f64, f64)>> = net
        .components()
        .iter()
        .map(|c| net.meta.layout.get(&c.name).copied())
        .collect();
    if from_meta.iter().all(|p| p.is_some()) {
        return from_meta.into_iter().map(|p| p.unwrap()).collect();
    }
    let n = net.components().len();
    let mut layer = vec![0usize; n];
    for _ in 0..n {
        for e in net.edges() {
            layer[e.to] = layer[e.to].max(layer[e.from] + 1);
        }
    }
    let mut row_count: BTreeMap<usize, usize> = BTreeMap::new();
    (0..n)
        .map(|i| {
            let row = row_count.entry(layer[i]).or_insert(0);
            let y = 60.0 + 85.0 * *row as f64;
            *row += 1;
            (60.0 + 130.0 * layer[i] as f64, y)
        })
        .collect()
}

fn bounds(pos: &[(f64, f64)]) -> (f64, f64) {
    let w = pos.iter().map(|p| p.0).fold(0.0, f64::max) + 90.0;
    let h = pos.iter().map(|p| p.1).fold(0.0, f64::max) + 60.0;
    (w.max(360.0), h.max(200.0))
}

fn svg_open(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    out.push_str(concat!(
        "<style>\n",
        ".edge { stroke: #35506b; fill: none; stroke-linecap: round; }\n",
        ".neg { stroke: #c0392b; }\n",
        ".zero { stroke-dasharray: 4 3; }\n",
        ".faint { stroke: #c8d0da; stroke-width: 1; fill: none; }\n",
        "text { font-family: monospace; font-size: 11px; fill: #222; }\n",
        ".lbl { font-size: 10px; fill: #555; }\n",
        "</style>\n",
        "<rect width=\"100%\" height=\"100%\" fill=\"#fdfdfb\"/>\n",
    ));
}

fn glyph(out: &mut String, kind: &ComponentKind, x: f64, y: f64) {
    match kind {
        ComponentKind::Source => {
            let _ = writeln!(out, r##"<circle cx="{x:.1}" cy="{y:.1}" r="7" fill="#3fa34d"/>"##);
        }
        ComponentKind::Detector => {
            let _ = writeln!(
                out,
                r##"<rect x="{:.1}" y="{:.1}" width="14" height="14" fill="#2c6fbb"/>"##,
                x - 7.0,
                y - 7.0
            );
        }
        ComponentKind::BeamSplitter => {
            let _ = writeln!(
                out,
                r##"<rect x="{:.1}" y="{:.1}" width="18" height="6" fill="#6b7b8c" transform="rotate(45 {x:.1} {y:.1})"/>"##,
                x - 9.0,
                y - 3.0
            );
        }
        ComponentKind::Mirror => {
            let _ = writeln!(
                out,
                r##"<rect x="{:.1}" y="{:.1}" width="16" height="3" fill="#444" transform="rotate(45 {x:.1} {y:.1})"/>"##,
                x - 8.0,
                y - 1.5
            );
        }
        ComponentKind::Modulator(_) => {
            let _ = writeln!(
                out,
                r##"<rect x="{:.1}" y="{:.1}" width="14" height="14" rx="3" fill="#d4a72f"/>"##,
                x - 7.0,
                y - 7.0
            );
        }
        ComponentKind::Terminator => {
            let _ = writeln!(
                out,
                r##"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="#181818"/>"##,
                x - 5.0,
                y - 5.0
            );
        }
    }
}

fn glyphs_and_labels(out: &mut String, net: &Network, pos: &[(f64, f64)]) {
    for (c, &(x, y)) in net.components().iter().zip(pos) {
        glyph(out, &c.kind, x, y);
        if !c.auto {
            let _ = writeln!(
                out,
                r#"<text class="lbl" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                x,
                y + 22.0,
                esc(&c.name)
            );
        }
    }
}

/// Render the network with one scalar per edge: stroke width encodes
/// `|value|`, dashes mark (near-)zeros, red marks negatives.
pub fn render_schematic(
    net: &Network,
    values: &[(String, f64)],
    opts: &RenderOptions,
) -> String {
    let pos = positions(net);
    let (w, h) = bounds(&pos);
    let mut out = String::new();
    svg_open(&mut out, w, h);

    let lookup: BTreeMap<&str, f64> =
        values.iter().map(|(name, v)| (name.as_str(), *v)).collect();
    for i in 0..net.edges().len() {
        let e = &net.edges()[i];
        let (x1, y1) = pos[e.from];
        let (x2, y2) = pos[e.to];
        let name = net.edge_name(i);
        let v = lookup.get(name.as_str()).copied().unwrap_or(0.0);
        let mut class = String::from("edge");
        if v < 0.0 {
            class.push_str(" neg");
        }
        if v.abs() <= ZERO_STROKE_TOL {
            class.push_str(" zero");
        }
        let width = (opts.scale * v.abs()).clamp(MIN_STROKE, MAX_STROKE);
        let _ = writeln!(
            out,
            r#"<line class="{}" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke-width="{:.3}"><title>{} = {}</title></line>"#,
            class,
            x1,
            y1,
            x2,
            y2,
            width,
            esc(&name),
            crate::fmt17(v),
        );
    }
    glyphs_and_labels(&mut out, net, &pos);

    let caption = opts.title.as_deref().unwrap_or("edge values");
    let _ = writeln!(out, r#"<text x="12" y="18">{}</text>"#, esc(caption));
    let _ = writeln!(
        out,
        r#"<text class="lbl" x="12" y="32">stroke px = clamp({} * |value|, {}, {}); dashed: |value| &lt;= 1e-12; red: negative</text>"#,
        opts.scale, MIN_STROKE, MAX_STROKE
    );
    out.push_str("</svg>\n");
    out
}

fn group_color(group: &ModulatorGroup, index: usize) -> &'static str {
    PALETTE
        .iter()
        .find(|(name, _)| group.members.iter().any(|m| m == name))
        .map(|(_, c)| *c)
        .unwrap_or(PALETTE[index % PALETTE.len()].1)
}

fn dash_for_order(order: u32) -> &'static str {
    match order {
        1 => "none",
        2 => "7 4",
        _ => "2 3",
    }
}

/// Resolve a report target (detector or edge name) to an edge index.
fn target_edge(net: &Network, target: &str) -> Option<usize> {
    if let Some(ci) = net.component_index(target) {
        if matches!(net.components()[ci].kind, ComponentKind::Detector) {
            return net.edges().iter().position(|e| e.to == ci);
        }
    }
    net.resolve_edge(target)
}

/// Render which modulation tones flow through each edge: one colored line
/// per participating modulator group, offset in parallel, dashed by the
/// lowest order that group reaches on that edge.
pub fn render_modulation(
    net: &Network,
    reports: &[OrderReport],
    opts: &RenderOptions,
) -> String {
    let pos = positions(net);
    let (w, h) = bounds(&pos);
    let mut out = String::new();
    svg_open(&mut out, w, h + 22.0);

    for i in 0..net.edges().len() {
        let e = &net.edges()[i];
        let (x1, y1) = pos[e.from];
        let (x2, y2) = pos[e.to];
        let _ = writeln!(
            out,
            r#"<line class="faint" x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}"/>"#
        );
    }

    let mut legend_groups: Vec<ModulatorGroup> = Vec::new();
    for report in reports {
        let Some(ei) = target_edge(net, &report.target) else { continue };
        let e = &net.edges()[ei];
        let (x1, y1) = pos[e.from];
        let (x2, y2) = pos[e.to];
        let (dx, dy) = (x2 - x1, y2 - y1);
        let len = (dx * dx + dy * dy).sqrt().max(1e-9);
        let (nx, ny) = (-dy / len, dx / len);
        // Which groups light this edge up, and at what lowest order.
        let present: Vec<(usize, u32)> = report
            .groups
            .iter()
            .enumerate()
            .filter_map(|(gi, g)| {
                report
                    .lines
                    .iter()
                    .filter(|l| l.combination.contains(&g.label))
                    .map(|l| l.order)
                    .min()
                    .map(|o| (gi, o))
            })
            .collect();
        for (slot, &(gi, order)) in present.iter().enumerate() {
            let group = &report.groups[gi];
            if !legend_groups.iter().any(|g| g.label == group.label) {
                legend_groups.push(group.clone());
            }
            let off = 3.5 * (slot as f64 - (present.len() as f64 - 1.0) / 2.0);
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="2" fill="none" stroke-dasharray="{}"><title>{}: {} at order {}</title></line>"#,
                x1 + nx * off,
                y1 + ny * off,
                x2 + nx * off,
                y2 + ny * off,
                group_color(group, gi),
                dash_for_order(order),
                esc(&report.target),
                esc(&group.label),
                order,
            );
        }
    }
    glyphs_and_labels(&mut out, net, &pos);

    let caption = opts.title.as_deref().unwrap_or("modulation content per edge");
    let _ = writeln!(out, r#"<text x="12" y="18">{}</text>"#, esc(caption));
    let mut x = 12.0;
    let legend_y = h + 8.0;
    for (gi, g) in legend_groups.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="3"/>"#,
            x,
            legend_y,
            x + 18.0,
            legend_y,
            group_color(g, gi),
        );
        let _ = writeln!(
            out,
            r#"<text class="lbl" x="{:.1}" y="{:.1}">{}</text>"#,
            x + 22.0,
            legend_y + 4.0,
            esc(&g.label)
        );
        x += 30.0 + 9.0 * g.label.len() as f64;
    }
    let _ = writeln!(
        out,
        r#"<text class="lbl" x="{:.1}" y="{:.1}">solid: order 1, long dash: 2, short dash: 3</text>"#,
        x + 10.0,
        legend_y + 4.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::{modulator_groups, OrderLine};
    use crate::netgraph::{build_preset, normalize, NetworkBuilder, PresetKind};

    #[test]
    fn schematic_encodes_magnitude_sign_and_zero() {
        let net = normalize(&build_preset(PresetKind::Simple)).unwrap();
        let values = vec![
            ("src".to_string(), 1.0e6),
            ("arm1a".to_string(), 0.05),
            ("arm2a".to_string(), -0.05),
            ("d1".to_string(), 0.0),
        ];
        let opts = RenderOptions { title: Some("test".into()), scale: 10.0 };
        let svg = render_schematic(&net, &values, &opts);
        assert!(svg.starts_with("<svg "));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains(r#"stroke-width="12.000""#), "clamped to max");
        assert!(svg.contains(r#"class="edge neg""#), "negative class");
        assert!(svg.contains(r#"class="edge zero""#), "zero class");
        assert!(svg.contains("arm1a = 5.0"), "hover titles carry values");
        // One <title> per edge.
        assert_eq!(svg.matches("<title>").count(), net.edges().len());
        // Deterministic output.
        assert_eq!(svg, render_schematic(&net, &values, &opts));
    }

    #[test]
    fn layered_fallback_covers_layoutless_networks() {
        let mut b = NetworkBuilder::new();
        b.source("S").unwrap();
        b.beamsplitter("BS").unwrap();
        b.detector("Da").unwrap();
        b.detector("Db").unwrap();
        b.connect("S", "out", "BS", "in1", None).unwrap();
        b.connect("BS", "out1", "Da", "in", None).unwrap();
        b.connect("BS", "out2", "Db", "in", None).unwrap();
        let net = normalize(&b.build()).unwrap();
        assert!(net.meta.layout.is_empty());
        let svg = render_schematic(&net, &[], &RenderOptions::default());
        assert!(svg.contains(">Da</text>"));
        // Vacuum closures are drawn (their edges get hover titles) but the
        // auto-inserted components are not labeled.
        assert!(svg.contains("<title>__vac_BS_in2"));
        assert!(!svg.contains(">__vac_BS_in2</text>"));
        assert_eq!(svg, render_schematic(&net, &[], &RenderOptions::default()));
    }

    #[test]
    fn modulation_map_draws_offset_group_lines() {
        let net = build_preset(PresetKind::Nested).with_eps_scaled(0.0);
        let driven = {
            let mut n = net.clone();
            for (i, mut spec) in net.modulators() {
                spec.eps0 = 0.01;
                n = n.with_modulator(&net.components()[i].name.clone(), spec).unwrap();
            }
            n
        };
        let groups = modulator_groups(&driven);
        let report = OrderReport {
            target: "q2_c".into(),
            dc: 0.25,
            bin_hz: 1.0,
            groups: groups.clone(),
            lines: vec![
                OrderLine {
                    frequency: 5.0,
                    amplitude: 0.01,
                    order: 1,
                    scaling_exponent: 1.0,
                    combination: vec!["A1".into()],
                    composite: false,
                },
                OrderLine {
                    frequency: 12.0,
                    amplitude: 1e-4,
                    order: 2,
                    scaling_exponent: 2.0,
                    combination: vec!["A1".into(), "B1".into()],
                    composite: false,
                },
            ],
            unclassified: vec![],
        };
        let svg = render_modulation(&driven, &[report], &RenderOptions::default());
        assert!(svg.contains("#3fa34d"), "A1 green present");
        assert!(svg.contains("#d43a2f"), "B1 red present");
        assert!(!svg.contains("#c62cc4"), "E1 magenta absent");
        assert!(svg.contains(r#"stroke-dasharray="none""#), "order-1 solid");
        assert!(svg.contains(r#"stroke-dasharray="7 4""#), "order-2 dashed");
        assert!(svg.contains("q2_c: A1 at order 1"));
        // A report with no lines draws no tone overlay at all.
        let empty = render_modulation(
            &driven,
            &[OrderReport {
                target: "q2_c".into(),
                dc: 0.25,
                bin_hz: 1.0,
                groups,
                lines: vec![],
                unclassified: vec![],
            }],
            &RenderOptions::default(),
        );
        assert!(!empty.contains("at order"));
    }
}
