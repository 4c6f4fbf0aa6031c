//! Input documents: topologies, port groupings and source schedules.
//!
//! Exact quantities are written as `"p/q"` strings. Integers and plain
//! decimals are also accepted on input and converted exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::catalog::{catalog, CatalogEntry};
use crate::classify::PortSpec;
use crate::error::{invalid, Error, Result};
use crate::ratmat::Matrix;
use crate::scalar::{format_rational, int, parse_rational, Rational};
use crate::simulate::{fig7_schedule, Schedule, Waveform};
use crate::spectral::{
    eigenbasis, laplacian_spectrum, modal_inductive, modal_ohm, topology_basis, EigenbasisOptions, ModalMatrix,
    SpectralBasis,
};
use crate::topology::Topology;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum Number {
    Text(String),
    Int(i64),
    Float(f64),
}

impl Number {
    fn exact(&self) -> Result<Rational> {
        match self {
            Number::Text(s) => parse_rational(s),
            Number::Int(i) => Ok(int(*i)),
            Number::Float(f) if f.is_finite() => parse_rational(&f.to_string()),
            Number::Float(f) => invalid(format!("{f} is not a finite number")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum ArmValue {
    Uniform(Number),
    PerEdge(Vec<Number>),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDoc {
    n: usize,
    #[serde(default)]
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    partitions: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    g_arm: Option<ArmValue>,
    #[serde(default)]
    l_arm: Option<Number>,
    #[serde(default)]
    g_ext: Option<Vec<Option<Number>>>,
    /// Eigenvalue sequence fixing the mode order; defaults to ascending.
    #[serde(default)]
    mode_order: Option<Vec<Number>>,
}

/// A topology ready for analysis, from a file or the catalog.
#[derive(Clone, Debug)]
pub struct Input {
    pub name: String,
    pub topology: Topology,
    pub mode_order: Option<Vec<Rational>>,
    pub entry: Option<CatalogEntry>,
}

impl Input {
    pub fn from_entry(entry: CatalogEntry) -> Self {
        Self { name: entry.name.clone(), topology: entry.topology.clone(), mode_order: Some(entry.mode_order.clone()), entry: Some(entry) }
    }

    /// Eigenbasis of the arm Laplacian. With equal arm conductances this is
    /// the unit-Laplacian basis; otherwise the weighted Laplacian is used.
    pub fn basis(&self) -> Result<SpectralBasis> {
        let uniform = self.topology.uniform_conductance().is_some() || self.topology.n_edges() == 0;
        let l = if uniform { self.topology.unit_laplacian() } else { self.topology.laplacian() };
        match &self.mode_order {
            Some(order) => eigenbasis(&l, order, EigenbasisOptions::default()),
            None if uniform => topology_basis(&self.topology),
            None => {
                let exact = laplacian_spectrum(&l).exact.ok_or_else(|| {
                    Error::UnsupportedSpectrum("the weighted Laplacian has non-rational eigenvalues".into())
                })?;
                eigenbasis(&l, &exact, EigenbasisOptions::default())
            }
        }
    }

    /// `G_a · diag(λ)`; needs equal arm conductances.
    pub fn modal(&self, basis: &SpectralBasis) -> Result<ModalMatrix> {
        modal_ohm(basis, &self.arm_conductance()?)
    }

    /// `diag(λ) / L_a`; needs equal arm inductances.
    pub fn modal_inductive(&self, basis: &SpectralBasis) -> Result<ModalMatrix> {
        let l = self.topology.uniform_inductance().unwrap_or_else(|| int(1));
        if self.topology.n_edges() > 0 && self.topology.uniform_inductance().is_none() {
            return invalid("modal analysis needs equal arm inductances");
        }
        modal_inductive(basis, &l)
    }

    pub fn arm_conductance(&self) -> Result<Rational> {
        match self.topology.uniform_conductance() {
            Some(g) => Ok(g),
            None if self.topology.n_edges() == 0 => Ok(int(1)),
            None => invalid("modal analysis needs equal arm conductances"),
        }
    }
}

/// Parses a topology document.
pub fn parse_topology(text: &str) -> Result<(Topology, Option<Vec<Rational>>)> {
    let doc: TopologyDoc = serde_json::from_str(text)?;
    let mut t = Topology::new(doc.n, doc.edges)?;
    if let Some(p) = doc.partitions {
        t = t.with_partitions(p)?;
    }
    match doc.g_arm {
        Some(ArmValue::Uniform(g)) => t = t.with_arm_conductance(g.exact()?)?,
        Some(ArmValue::PerEdge(gs)) => t = t.with_edge_conductances(gs.iter().map(Number::exact).collect::<Result<_>>()?)?,
        None => {}
    }
    if let Some(l) = doc.l_arm {
        t = t.with_arm_inductance(l.exact()?)?;
    }
    if let Some(g) = doc.g_ext {
        let g = g.iter().map(|x| x.as_ref().map(Number::exact).transpose()).collect::<Result<_>>()?;
        t = t.with_external_conductance(g)?;
    }
    let order = doc.mode_order.map(|o| o.iter().map(Number::exact).collect::<Result<Vec<_>>>()).transpose()?;
    Ok((t, order))
}

/// `catalog:<name>` or a path to a topology document.
pub fn load_input(spec: &str) -> Result<Input> {
    if let Some(name) = spec.strip_prefix("catalog:") {
        return Ok(Input::from_entry(catalog(name)?));
    }
    let text = std::fs::read_to_string(spec)?;
    let (topology, mode_order) = parse_topology(&text)?;
    let name = Path::new(spec).file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Input { name, topology, mode_order, entry: None })
}

pub fn parse_ports(text: &str) -> Result<PortSpec> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_ports(path: &str) -> Result<PortSpec> {
    parse_ports(&std::fs::read_to_string(path)?)
}

/// Accepts either `{"external": {...}, "internal": {...}, "loops": {...}}` or a
/// flat map of waveforms keyed by label, where `Phi…` keys are loop sources
/// and every other key is an external modal source.
pub fn parse_schedule(text: &str) -> Result<Schedule> {
    let value: Value = serde_json::from_str(text)?;
    let structured = value
        .as_object()
        .is_some_and(|o| o.keys().all(|k| matches!(k.as_str(), "external" | "internal" | "loops")));
    if structured {
        return Ok(serde_json::from_value(value)?);
    }
    let flat: BTreeMap<String, Waveform> = serde_json::from_value(value)?;
    let mut s = Schedule::default();
    for (label, w) in flat {
        if label.starts_with("Phi") {
            s.loops.insert(label, w);
        } else {
            s.external.insert(label, w);
        }
    }
    Ok(s)
}

/// `builtin:fig7` or a path to a schedule document.
pub fn load_schedule(spec: &str) -> Result<Schedule> {
    match spec {
        "builtin:fig7" => Ok(fig7_schedule()),
        path => parse_schedule(&std::fs::read_to_string(path)?),
    }
}

pub fn rational_json(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

pub fn rationals_json(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(rational_json).collect())
}

pub fn matrix_json(m: &Matrix<Rational>) -> Value {
    serde_json::to_value(m).expect("matrices serialise")
}

/// The topology in document form.
pub fn topology_json(t: &Topology) -> Value {
    let mut doc = json!({
        "n": t.n_vertices(),
        "edges": t.edges(),
    });
    if let Some(p) = t.partitions() {
        doc["partitions"] = json!(p);
    }
    doc["g_arm"] = match t.uniform_conductance() {
        Some(g) => rational_json(&g),
        None => rationals_json(t.edge_conductance()),
    };
    if let Some(l) = t.uniform_inductance() {
        doc["l_arm"] = rational_json(&l);
    }
    if let Some(g) = t.external_conductance() {
        doc["g_ext"] = Value::Array(g.iter().map(|x| x.as_ref().map_or(Value::Null, rational_json)).collect());
    }
    doc
}
