//! Port-graph representation of an interferometer network, plus the netlist
//! text format, structural validation, reversal, and built-in presets.

mod model;
mod parse;
mod preset;
mod validate;

pub use model::{
    Component, ComponentKind, Edge, EdgeGroup, Meta, ModulatorSpec, NetError, Network,
    NetworkBuilder, PortDir,
};
pub use parse::{parse_network, to_netlist, ParseError};
pub use preset::{build_preset, preset_names, PresetKind};
pub use validate::{
    normalize, reverse, validate, AutoTermination, ClosureKind, Issue, Severity,
    ValidationReport,
};

pub(crate) use validate::{adjacency, topo_order};
