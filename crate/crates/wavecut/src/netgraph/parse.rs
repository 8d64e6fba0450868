//! Plain-text netlist format.
//!
//! ```text
//! # comment
//! component S1 source
//! component A1 modulator tau0=1 eps=0.01 freq=5 delta=0
//! connect S1.out -> BS1.in1 as src
//! channel Q1 = q1_a, q1_b, q1_c
//! cut L1 = src, __vac_BS1_in2
//! ```
//!
//! Components must be declared before they are wired. Channel and cut lists
//! reference edges by alias or by structural name (`From.port->To.port`);
//! `__`-prefixed names may refer to closure edges that appear only after
//! normalization. [`to_netlist`] emits a canonical form that re-parses to an
//! equal network.

use std::fmt;

use super::model::{ComponentKind, ModulatorSpec, NetError, Network, NetworkBuilder};

/// Syntax or reference error, with a 1-based line and column.
#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, col {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Line<'a> {
    no: usize,
    text: &'a str,
}

impl<'a> Line<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: self.no,
            col: offset + 1,
            message: message.into(),
        })
    }

    fn err_net<T>(&self, offset: usize, e: NetError) -> Result<T, ParseError> {
        self.err(offset, e.to_string())
    }
}

/// Whitespace-separated tokens with their byte offsets.
fn tokens(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c.is_whitespace() {
            if let Some(st) = start.take() {
                out.push((st, &s[st..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        out.push((st, &s[st..]));
    }
    out
}

fn split_endpoint<'a>(line: &Line<'_>, offset: usize, s: &'a str) -> Result<(&'a str, &'a str), ParseError> {
    match s.split_once('.') {
        Some((comp, port)) if !comp.is_empty() && !port.is_empty() => Ok((comp, port)),
        _ => line.err(offset, format!("expected `component.port`, found `{}`", s)),
    }
}

fn parse_component(b: &mut NetworkBuilder, line: &Line<'_>, toks: &[(usize, &str)]) -> Result<(), ParseError> {
    let [(name_off, name), (kind_off, kind), attrs @ ..] = toks else {
        return line.err(
            toks.last().map_or(0, |(o, t)| o + t.len()),
            "expected `component <name> <kind>`",
        );
    };
    let kind = match *kind {
        "source" => ComponentKind::Source,
        "detector" => ComponentKind::Detector,
        "beamsplitter" => ComponentKind::BeamSplitter,
        "mirror" => ComponentKind::Mirror,
        "terminator" => ComponentKind::Terminator,
        "modulator" => {
            let mut spec = ModulatorSpec::default();
            let mut seen = Vec::new();
            for &(off, attr) in attrs {
                let Some((key, val)) = attr.split_once('=') else {
                    return line.err(off, format!("expected `key=value`, found `{}`", attr));
                };
                if seen.contains(&key) {
                    return line.err(off, format!("repeated attribute `{}`", key));
                }
                seen.push(key);
                let val: f64 = match val.parse() {
                    Ok(v) => v,
                    Err(_) => return line.err(off, format!("bad number `{}`", val)),
                };
                match key {
                    "tau0" => spec.tau0 = val,
                    "eps" => spec.eps0 = val,
                    "freq" => spec.freq = val,
                    "delta" => spec.delta = val,
                    other => {
                        return line.err(off, format!("unknown modulator attribute `{}`", other))
                    }
                }
            }
            if let Err(e) = spec.check() {
                return line.err_net(*kind_off, e);
            }
            ComponentKind::Modulator(spec)
        }
        other => return line.err(*kind_off, format!("unknown component kind `{}`", other)),
    };
    if !matches!(kind, ComponentKind::Modulator(_)) {
        if let Some(&(off, extra)) = attrs.first() {
            return line.err(off, format!("unexpected token `{}`", extra));
        }
    }
    b.component(name, kind).map_err(|e| ParseError {
        line: line.no,
        col: name_off + 1,
        message: e.to_string(),
    })?;
    Ok(())
}

fn parse_connect(b: &mut NetworkBuilder, line: &Line<'_>, rest_off: usize, rest: &str) -> Result<(), ParseError> {
    let Some(arrow) = rest.find("->") else {
        return line.err(rest_off, "expected `from.port -> to.port`");
    };
    let left_raw = &rest[..arrow];
    let left = left_raw.trim();
    let left_off = rest_off + (left_raw.len() - left_raw.trim_start().len());
    let after = &rest[arrow + 2..];
    let after_off = rest_off + arrow + 2;
    let toks = tokens(after);
    let (&(right_rel, right), tail) = match toks.split_first() {
        Some(pair) => pair,
        None => return line.err(after_off, "expected `to.port` after `->`"),
    };
    let right_off = after_off + right_rel;
    let alias = match tail {
        [] => None,
        [(_, "as"), (_, alias)] => Some(*alias),
        [(off, "as")] => return line.err(after_off + off, "expected alias after `as`"),
        [(off, t), ..] => return line.err(after_off + off, format!("unexpected token `{}`", t)),
    };

    let (fc, fp) = split_endpoint(line, left_off, left)?;
    let (tc, tp) = split_endpoint(line, right_off, right)?;
    b.connect(fc, fp, tc, tp, alias).map_err(|e| {
        // Point at whichever endpoint the error names; the builder checks the
        // left side first, so ties go left.
        let col = match &e {
            NetError::UnknownComponent(n) if n == fc => left_off,
            NetError::UnknownComponent(n) if n == tc => right_off,
            NetError::UnknownPort { component, port }
            | NetError::PortInUse { component, port } => {
                if component == fc && port == fp {
                    left_off
                } else {
                    right_off
                }
            }
            _ => left_off,
        };
        ParseError { line: line.no, col: col + 1, message: e.to_string() }
    })?;
    Ok(())
}

fn parse_group(
    b: &mut NetworkBuilder,
    is_cut: bool,
    line: &Line<'_>,
    rest_off: usize,
    rest: &str,
) -> Result<(), ParseError> {
    let Some(eq) = rest.find('=') else {
        return line.err(rest_off, "expected `<name> = <edge>, <edge>, ...`");
    };
    let name = rest[..eq].trim();
    let name_off = rest_off + (rest[..eq].len() - rest[..eq].trim_start().len());
    let list = &rest[eq + 1..];
    let list_off = rest_off + eq + 1;
    let mut refs = Vec::new();
    let mut cursor = 0usize;
    for part in list.split(',') {
        let trimmed = part.trim();
        let off = list_off + cursor + (part.len() - part.trim_start().len());
        if trimmed.is_empty() {
            return line.err(off, "empty edge reference");
        }
        refs.push((off, trimmed));
        cursor += part.len() + 1;
    }
    let names: Vec<&str> = refs.iter().map(|&(_, r)| r).collect();
    let result = if is_cut {
        b.cut(name, &names)
    } else {
        b.channel(name, &names)
    };
    result.map_err(|e| {
        let col = match &e {
            NetError::UnknownEdge(n) => refs
                .iter()
                .find(|&&(_, r)| r == n)
                .map_or(name_off, |&(o, _)| o),
            _ => name_off,
        };
        ParseError { line: line.no, col: col + 1, message: e.to_string() }
    })?;
    Ok(())
}

/// Parse netlist text into a [`Network`]. Statement order matters only in
/// that names must be declared before use.
pub fn parse_network(text: &str) -> Result<Network, ParseError> {
    let mut b = NetworkBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let body = match raw.find('#') {
            Some(h) => &raw[..h],
            None => raw,
        };
        let line = Line { no: i + 1, text: body };
        let toks = tokens(line.text);
        let Some(&(kw_off, kw)) = toks.first() else { continue };
        let rest_off = kw_off + kw.len();
        let rest = &line.text[rest_off..];
        match kw {
            "component" => parse_component(&mut b, &line, &toks[1..])?,
            "connect" => parse_connect(&mut b, &line, rest_off, rest)?,
            "channel" => parse_group(&mut b, false, &line, rest_off, rest)?,
            "cut" => parse_group(&mut b, true, &line, rest_off, rest)?,
            other => {
                return line.err(kw_off, format!("unknown statement `{}`", other));
            }
        }
    }
    Ok(b.build())
}

fn fmt_f64(x: f64) -> String {
    format!("{}", x)
}

/// Canonical netlist text: components, connections, channels, cuts, in
/// declaration order. `parse_network(to_netlist(n)) == n` for any valid `n`,
/// and serializing the parsed form reproduces the text byte for byte.
pub fn to_netlist(net: &Network) -> String {
    let mut out = String::new();
    for c in net.components() {
        out.push_str("component ");
        out.push_str(&c.name);
        out.push(' ');
        out.push_str(c.kind.keyword());
        if let ComponentKind::Modulator(spec) = &c.kind {
            let defaults = ModulatorSpec::default();
            for (key, val, def) in [
                ("tau0", spec.tau0, defaults.tau0),
                ("eps", spec.eps0, defaults.eps0),
                ("freq", spec.freq, defaults.freq),
                ("delta", spec.delta, defaults.delta),
            ] {
                if val != def {
                    out.push_str(&format!(" {}={}", key, fmt_f64(val)));
                }
            }
        }
        out.push('\n');
    }
    for i in 0..net.edges().len() {
        let structural = net.structural_name(i);
        let (from, to) = structural.split_once("->").expect("structural name");
        out.push_str(&format!("connect {} -> {}", from, to));
        if let Some(alias) = &net.edges()[i].alias {
            out.push_str(" as ");
            out.push_str(alias);
        }
        out.push('\n');
    }
    for (kw, groups) in [("channel", net.channels()), ("cut", net.cuts())] {
        for g in groups {
            out.push_str(&format!("{} {} = {}\n", kw, g.name, g.edges.join(", ")));
        }
    }
    out
}
