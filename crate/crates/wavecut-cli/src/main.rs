//! `wavecut` — command-line driver for the interferometer library.
//!
//! Exit codes: 0 on success, 1 for usage or input errors (bad flags,
//! unparseable netlists, unknown names), 2 for analysis failures (divergent
//! weak values, a failed sum-rule audit, `--strict` warning escalation).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wavecut::modulation::{
    classify_encounter_orders, classify_orders_multi, configured_network, reports_to_csv,
    scenario_names, scenario_with_plan, ModulationError, SamplingPlan, ScenarioKind,
};
use wavecut::netgraph::{
    build_preset, normalize, parse_network, preset_names, validate, NetError, Network,
    PresetKind, Severity,
};
use wavecut::propagate::{energy_balance, propagate, FieldMap, PropagateError};
use wavecut::render::{render_modulation, render_schematic, RenderOptions};
use wavecut::tsvf::{abl_normalize, audit, backward_field, encounter_at, weak_values_at, TsvfError};
use wavecut::RESIDUAL_TOL;

/// Simulate linear-optical interferometer networks: forward and backward
/// wavefunctions, weak values, encounter probabilities, sum-rule audits,
/// and Fourier-resolved modulation spectroscopy.
#[derive(Parser)]
#[command(name = "wavecut", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a source forward and report every edge amplitude.
    Simulate(SimulateArgs),
    /// Weak values across a cut for one post-selected detector.
    Weak(WeakArgs),
    /// Per-edge forward/backward encounter probabilities.
    Encounter(EncounterArgs),
    /// Audit all sum rules from every detector; nonzero exit on failure.
    Check(CheckArgs),
    /// Classify modulation sidebands by perturbation order.
    Modulate(ModulateArgs),
    /// Run a canned modulation-spectroscopy scenario.
    Scenario(ScenarioArgs),
    /// Draw the network as SVG, edge weights from a chosen quantity.
    Render(RenderArgs),
    /// List built-in presets and scenarios.
    Presets(PresetsArgs),
}

/// How a run failed, which fixes the exit code.
enum Failure {
    /// Bad arguments or malformed input: exit 1.
    Usage(String),
    /// The analysis itself failed on a valid network: exit 2.
    Analysis(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Analysis(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Analysis(m) => f.write_str(m),
        }
    }
}

impl From<NetError> for Failure {
    fn from(e: NetError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<PropagateError> for Failure {
    fn from(e: PropagateError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<TsvfError> for Failure {
    fn from(e: TsvfError) -> Self {
        match e {
            TsvfError::DarkPortDivergence { .. } | TsvfError::ZeroCutTotal(_) => {
                Failure::Analysis(e.to_string())
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<ModulationError> for Failure {
    fn from(e: ModulationError) -> Self {
        match e {
            ModulationError::Tsvf(inner) => inner.into(),
            other => Failure::Usage(other.to_string()),
        }
    }
}

/// Network selection shared by every analysis subcommand.
#[derive(Args)]
struct NetArgs {
    /// Built-in network preset (see `wavecut presets`).
    #[arg(long, value_name = "NAME", conflicts_with = "netlist")]
    preset: Option<String>,
    /// Netlist file to load instead of a preset.
    #[arg(long, value_name = "FILE")]
    netlist: Option<PathBuf>,
    /// Treat validation warnings as failures (exit 2).
    #[arg(long)]
    strict: bool,
}

impl NetArgs {
    fn load(&self) -> Result<Network, Failure> {
        let net = match (&self.preset, &self.netlist) {
            (Some(name), None) => {
                let kind: PresetKind = name.parse().map_err(|_| {
                    Failure::Usage(format!(
                        "unknown preset `{name}` (available: {})",
                        preset_names().join(", ")
                    ))
                })?;
                build_preset(kind)
            }
            (None, Some(path)) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))?;
                parse_network(&text)
                    .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))?
            }
            (None, None) => {
                return Err(Failure::Usage(
                    "pick a network: --preset NAME or --netlist FILE".into(),
                ))
            }
            (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
        };
        let report = validate(&net);
        let errors: Vec<&str> = report
            .issues
            .iter()
            .filter(|i| i.severity == Severity::Error)
            .map(|i| i.message.as_str())
            .collect();
        if !errors.is_empty() {
            return Err(Failure::Usage(format!("invalid network: {}", errors.join("; "))));
        }
        if self.strict {
            let mut warnings: Vec<String> = report
                .issues
                .iter()
                .filter(|i| i.severity == Severity::Warning)
                .map(|i| i.message.clone())
                .collect();
            // A strict network must be explicit about every port.
            warnings.extend(report.auto_terminations.iter().map(|t| {
                format!("open port {}.{} would be closed by `{}`", t.component, t.port, t.closure)
            }));
            if !warnings.is_empty() {
                return Err(Failure::Analysis(format!("strict: {}", warnings.join("; "))));
            }
        }
        Ok(net)
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Json,
    Csv,
}

/// Report destination and format, shared by the tabular subcommands.
#[derive(Args)]
struct OutArgs {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report to FILE instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl OutArgs {
    fn emit(&self, doc: serde_json::Value, csv: String) -> Result<(), Failure> {
        let text = match self.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => csv,
        };
        write_out(self.out.as_deref(), &text)
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {}", p.display(), e)))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn field_intensities(f: &FieldMap) -> Vec<(String, f64)> {
    f.edge_names()
        .iter()
        .zip(f.amplitudes())
        .map(|(name, a)| (name.clone(), a.norm_sqr()))
        .collect()
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Source component to excite with unit amplitude.
    #[arg(long, default_value = "S1")]
    seed: String,
    /// Evaluation time in seconds (modulators are time-dependent).
    #[arg(long, default_value_t = 0.0)]
    time: f64,
    #[command(flatten)]
    out: OutArgs,
    /// Also write an SVG schematic weighted by edge intensity.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
}

fn run_simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let net = a.net.load()?;
    let field = propagate(&net, &a.seed, a.time)?;
    let balance = energy_balance(&field);
    let mut doc = field.to_json();
    doc["energy"] = json!({
        "detected": balance.detector_total,
        "absorbed": balance.absorbed_total,
        "residual": balance.residual,
    });
    if let Some(path) = &a.svg {
        let shown = normalize(&net)?;
        let opts = RenderOptions {
            title: Some(format!("forward intensity from {}", a.seed)),
            scale: 10.0,
        };
        let svg = render_schematic(&shown, &field_intensities(&field), &opts);
        write_out(Some(path), &svg)?;
    }
    a.out.emit(doc, field.to_csv())
}

#[derive(Args)]
struct WeakArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Source component to excite.
    #[arg(long, default_value = "S1")]
    seed: String,
    /// Post-selected detector fixing the backward wavefunction.
    #[arg(long = "post-select", value_name = "DETECTOR")]
    post_select: String,
    /// Cut whose forward/backward overlap normalizes the values.
    #[arg(long, default_value = "mid")]
    cut: String,
    /// Evaluation time in seconds.
    #[arg(long, default_value_t = 0.0)]
    time: f64,
    #[command(flatten)]
    out: OutArgs,
}

fn run_weak(a: &WeakArgs) -> Result<(), Failure> {
    let net = a.net.load()?;
    let w = weak_values_at(&net, &a.seed, &a.post_select, &a.cut, a.time)?;
    a.out.emit(w.to_json(), w.to_csv())
}

#[derive(Args)]
struct EncounterArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Source component to excite.
    #[arg(long, default_value = "S1")]
    seed: String,
    /// Post-selected detector fixing the backward wavefunction.
    #[arg(long = "post-select", value_name = "DETECTOR")]
    post_select: String,
    /// Also report the distribution conditioned on crossing this cut.
    #[arg(long, value_name = "CUT")]
    cut: Option<String>,
    /// Evaluation time in seconds.
    #[arg(long, default_value_t = 0.0)]
    time: f64,
    #[command(flatten)]
    out: OutArgs,
}

fn run_encounter(a: &EncounterArgs) -> Result<(), Failure> {
    let net = a.net.load()?;
    let mut em = encounter_at(&net, &a.seed, &a.post_select, a.time)?;
    if let Some(cut) = &a.cut {
        em.normalized = Some(abl_normalize(&em, &net, cut)?);
    }
    let csv = match &em.normalized {
        Some(n) => n.to_csv(),
        None => em.to_csv(),
    };
    a.out.emit(em.to_json(), csv)
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Source component to excite.
    #[arg(long, default_value = "S1")]
    seed: String,
    /// Evaluation time in seconds.
    #[arg(long, default_value_t = 0.0)]
    time: f64,
    /// Residual tolerance (falls back to WAVECUT_TOL, then 1e-12).
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

fn residual_tol(flag: Option<f64>) -> Result<f64, Failure> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var("WAVECUT_TOL") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("WAVECUT_TOL is not a number: `{s}`"))),
        Err(_) => Ok(RESIDUAL_TOL),
    }
}

fn run_check(a: &CheckArgs) -> Result<(), Failure> {
    let net = a.net.load()?;
    let tol = residual_tol(a.tol)?;
    let report = audit(&net, &a.seed, a.time)?;
    let mut doc = report.to_json();
    doc["tol"] = json!(tol);
    doc["pass"] = json!(report.pass(tol));
    a.out.emit(doc, report.to_csv())?;
    if !report.pass(tol) {
        return Err(Failure::Analysis(format!(
            "sum rules violated: max residual {:e} exceeds tolerance {:e}",
            report.max_residual, tol
        )));
    }
    Ok(())
}

#[derive(Args)]
struct ModulateArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Source component to excite.
    #[arg(long, default_value = "S1")]
    seed: String,
    /// Classify encounter probabilities toward this detector instead of
    /// plain intensities.
    #[arg(long = "post-select", value_name = "DETECTOR")]
    post_select: Option<String>,
    /// Edge or detector to analyze (repeatable; default: every detector).
    #[arg(long, value_name = "NAME")]
    target: Vec<String>,
    /// Sampling window in seconds; tone periods must divide it.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Number of time samples (powers of two transform fastest).
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    #[command(flatten)]
    out: OutArgs,
    /// Also write an SVG overlay of lowest-order modulator reach.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
}

fn run_modulate(a: &ModulateArgs) -> Result<(), Failure> {
    let net = a.net.load()?;
    let targets: Vec<String> = if a.target.is_empty() {
        net.detectors()
            .iter()
            .map(|&i| net.components()[i].name.clone())
            .collect()
    } else {
        a.target.clone()
    };
    if targets.is_empty() {
        return Err(Failure::Usage(
            "network has no detectors; pass --target NAME".into(),
        ));
    }
    let plan = SamplingPlan::new(a.duration, a.samples);
    let reports = match &a.post_select {
        Some(detector) => classify_encounter_orders(&net, &a.seed, detector, &targets, &plan)?,
        None => classify_orders_multi(&net, &a.seed, &targets, &plan)?,
    };
    if let Some(path) = &a.svg {
        let shown = normalize(&net)?;
        let opts = RenderOptions {
            title: Some("modulation reach by lowest order".into()),
            scale: 10.0,
        };
        write_out(Some(path), &render_modulation(&shown, &reports, &opts))?;
    }
    let doc = json!({
        "kind": "modulate",
        "seed": a.seed,
        "post_selection": a.post_select,
        "plan": {"duration": plan.duration, "samples": plan.samples},
        "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    });
    a.out.emit(doc, reports_to_csv(&reports))
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario name (see `wavecut presets`).
    #[arg(value_name = "NAME")]
    name: String,
    /// Sampling window in seconds.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Number of time samples.
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    #[command(flatten)]
    out: OutArgs,
    /// Also write an SVG overlay of lowest-order modulator reach.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
}

fn run_scenario(a: &ScenarioArgs) -> Result<(), Failure> {
    let kind: ScenarioKind = a.name.parse().map_err(|_| {
        Failure::Usage(format!(
            "unknown scenario `{}` (available: {})",
            a.name,
            scenario_names().join(", ")
        ))
    })?;
    let plan = SamplingPlan::new(a.duration, a.samples);
    let report = scenario_with_plan(kind, &plan)?;
    if let Some(path) = &a.svg {
        let shown = normalize(&configured_network(kind)?)?;
        let opts = RenderOptions {
            title: Some(format!("{}: {}", kind.name(), report.description)),
            scale: 10.0,
        };
        write_out(Some(path), &render_modulation(&shown, &report.reports, &opts))?;
    }
    a.out.emit(report.to_json(), report.to_csv())
}

#[derive(ValueEnum, Clone, Copy)]
enum Quantity {
    Forward,
    Backward,
    Weak,
    Encounter,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Which per-edge scalar sets the line weights.
    #[arg(long, value_enum, default_value_t = Quantity::Forward)]
    quantity: Quantity,
    /// Source component to excite.
    #[arg(long, default_value = "S1")]
    seed: String,
    /// Detector for the backward, weak, and encounter quantities.
    #[arg(long = "post-select", value_name = "DETECTOR")]
    post_select: Option<String>,
    /// Cut whose overlap normalizes weak values.
    #[arg(long, default_value = "mid")]
    cut: String,
    /// Evaluation time in seconds.
    #[arg(long, default_value_t = 0.0)]
    time: f64,
    /// Stroke width in px per unit of the plotted quantity.
    #[arg(long, default_value_t = 10.0)]
    scale: f64,
    /// Output SVG file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn run_render(a: &RenderArgs) -> Result<(), Failure> {
    let net = a.net.load()?;
    let shown = normalize(&net)?;
    let post = match (&a.post_select, a.quantity) {
        (_, Quantity::Forward) => None,
        (Some(p), _) => Some(p.as_str()),
        (None, _) => {
            return Err(Failure::Usage(
                "--post-select is required for backward, weak, and encounter quantities".into(),
            ))
        }
    };
    let (title, values): (String, Vec<(String, f64)>) = match a.quantity {
        Quantity::Forward => (
            format!("forward intensity from {}", a.seed),
            field_intensities(&propagate(&net, &a.seed, a.time)?),
        ),
        Quantity::Backward => {
            let post = post.unwrap();
            (
                format!("backward intensity into {post}"),
                field_intensities(&backward_field(&net, post, a.time)?),
            )
        }
        Quantity::Weak => {
            let post = post.unwrap();
            let w = weak_values_at(&net, &a.seed, post, &a.cut, a.time)?;
            let values = w
                .edge_names()
                .iter()
                .cloned()
                .zip(w.values().iter().map(|v| v.re))
                .collect();
            (format!("Re weak value, {} post-selected on {post}", a.seed), values)
        }
        Quantity::Encounter => {
            let post = post.unwrap();
            let em = encounter_at(&net, &a.seed, post, a.time)?;
            let values = em
                .edge_names()
                .iter()
                .cloned()
                .zip(em.values().iter().copied())
                .collect();
            (format!("encounter probability, {} meets {post}", a.seed), values)
        }
    };
    let opts = RenderOptions { title: Some(title), scale: a.scale };
    write_out(a.out.as_deref(), &render_schematic(&shown, &values, &opts))
}

#[derive(Args)]
struct PresetsArgs {
    #[command(flatten)]
    out: OutArgs,
}

fn run_presets(a: &PresetsArgs) -> Result<(), Failure> {
    let presets: Vec<serde_json::Value> = preset_names()
        .iter()
        .map(|name| {
            let net = build_preset(name.parse::<PresetKind>().expect("listed preset"));
            json!({
                "name": name,
                "components": net.components().len(),
                "edges": net.edges().len(),
                "cuts": net.cuts().iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let scenarios: Vec<serde_json::Value> = scenario_names()
        .iter()
        .map(|name| {
            let kind: ScenarioKind = name.parse().expect("listed scenario");
            json!({ "name": name, "description": kind.description() })
        })
        .collect();
    let doc = json!({ "presets": presets, "scenarios": scenarios });
    let mut csv = String::from("kind,name\n");
    for name in preset_names() {
        csv.push_str(&format!("preset,{name}\n"));
    }
    for name in scenario_names() {
        csv.push_str(&format!("scenario,{name}\n"));
    }
    a.out.emit(doc, csv)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Weak(a) => run_weak(a),
        Command::Encounter(a) => run_encounter(a),
        Command::Check(a) => run_check(a),
        Command::Modulate(a) => run_modulate(a),
        Command::Scenario(a) => run_scenario(a),
        Command::Render(a) => run_render(a),
        Command::Presets(a) => run_presets(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here but are not failures.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
