//! Port structure: mode supports, galvanic isolation, current decoupling and
//! the star-to-Clarke transition.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ratmat::{inverse, Matrix};
use crate::scalar::Rational;
use crate::spectral::SpectralBasis;
use crate::topology::Topology;

/// Vertices where column `k` of `P` is nonzero.
pub fn mode_support(basis: &SpectralBasis, k: usize) -> Vec<usize> {
    (0..basis.len()).filter(|&r| !basis.p()[(r, k)].is_zero()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModeAssignment {
    pub mode: String,
    pub partition: usize,
    pub support: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PortGroup {
    pub partition: usize,
    pub vertices: Vec<usize>,
    pub modes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecoupledPorts {
    pub assignments: Vec<ModeAssignment>,
    /// Partitions with at least one dedicated mode.
    pub ports: Vec<PortGroup>,
}

/// Assigns every non-zero mode whose eigenvector support fits inside one
/// partition to that partition.
pub fn decoupled_ports(basis: &SpectralBasis, partitions: &[Vec<usize>]) -> DecoupledPorts {
    let zeros = basis.zero_modes();
    let mut assignments = Vec::new();
    for k in (0..basis.len()).filter(|k| !zeros.contains(k)) {
        let support = mode_support(basis, k);
        if let Some(p) = partitions.iter().position(|part| support.iter().all(|v| part.contains(v))) {
            assignments.push(ModeAssignment { mode: basis.labels()[k].clone(), partition: p, support });
        }
    }
    let ports = partitions
        .iter()
        .enumerate()
        .filter_map(|(p, vertices)| {
            let modes: Vec<String> =
                assignments.iter().filter(|a| a.partition == p).map(|a| a.mode.clone()).collect();
            (!modes.is_empty()).then(|| PortGroup { partition: p, vertices: vertices.clone(), modes })
        })
        .collect();
    DecoupledPorts { assignments, ports }
}

/// Named terminal groups. Ports must be disjoint unless `allow_shared` is set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortSpec {
    pub ports: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    pub allow_shared: bool,
    /// Port pairs whose currents are declared coupled by an external
    /// constraint that the passive graph cannot express.
    #[serde(default)]
    pub declared_couplings: Vec<(String, String)>,
}

impl PortSpec {
    pub fn new(ports: impl IntoIterator<Item = (impl Into<String>, Vec<usize>)>) -> Self {
        Self { ports: ports.into_iter().map(|(k, v)| (k.into(), v)).collect(), ..Self::default() }
    }

    pub fn allowing_shared(mut self) -> Self {
        self.allow_shared = true;
        self
    }

    pub fn declare_coupling(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.declared_couplings.push((a.into(), b.into()));
        self
    }

    pub fn validate(&self, t: &Topology) -> Result<()> {
        if self.ports.len() < 2 {
            return invalid("at least two ports are needed");
        }
        let mut owner: BTreeMap<usize, &str> = BTreeMap::new();
        for (name, vs) in &self.ports {
            if vs.is_empty() {
                return invalid(format!("port `{name}` is empty"));
            }
            for &v in vs {
                if v >= t.n_vertices() {
                    return invalid(format!("port `{name}` references vertex {v} outside 0..{}", t.n_vertices()));
                }
                if let Some(other) = owner.insert(v, name) {
                    if other == name {
                        return invalid(format!("port `{name}` lists vertex {v} twice"));
                    }
                    if !self.allow_shared {
                        return invalid(format!("ports `{other}` and `{name}` overlap at vertex {v}"));
                    }
                }
            }
        }
        for (a, b) in &self.declared_couplings {
            if !self.ports.contains_key(a) || !self.ports.contains_key(b) || a == b {
                return invalid(format!("declared coupling ({a}, {b}) does not name two distinct ports"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Category {
    #[serde(rename = "CT-1")]
    Ct1,
    #[serde(rename = "CT-2")]
    Ct2,
    #[serde(rename = "CT-3")]
    Ct3,
    #[serde(rename = "CT-4")]
    Ct4,
}

impl Category {
    pub fn from_flags(gip: bool, dcp: bool) -> Self {
        match (gip, dcp) {
            (true, false) => Category::Ct1,
            (true, true) => Category::Ct2,
            (false, true) => Category::Ct3,
            (false, false) => Category::Ct4,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Category::Ct1 => 1,
            Category::Ct2 => 2,
            Category::Ct3 => 3,
            Category::Ct4 => 4,
        };
        write!(f, "CT-{n}")
    }
}

/// Cross-port voltage caused by a unit balanced injection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transfer {
    pub from_port: String,
    pub injection: (usize, usize),
    pub to_port: String,
    pub across: (usize, usize),
    pub voltage: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub gip: bool,
    pub dcp: bool,
    pub category: Category,
    /// Nonzero cross-port transfers that break current decoupling.
    pub transfers: Vec<Transfer>,
    /// Whether every port's balanced injections are spanned by modes
    /// supported inside that port (needs a spectral basis).
    pub mode_support_dcp: Option<bool>,
    /// Set when the verdict relies on declared couplings rather than the graph.
    pub synthetic: bool,
}

/// Node voltages for injection `i` (balanced per component): each component
/// is grounded at its smallest vertex and solved exactly.
pub fn pseudo_solve(t: &Topology, i: &[Rational]) -> Result<Vec<Rational>> {
    let l = t.laplacian();
    let comp = t.components();
    let n = t.n_vertices();
    let mut u = vec![Rational::zero(); n];
    for c in 0..t.n_components() {
        let members: Vec<usize> = (0..n).filter(|&v| comp[v] == c).collect();
        let net = members.iter().fold(Rational::zero(), |acc, &v| acc + i[v].clone());
        if !net.is_zero() {
            return Err(Error::InfeasibleInjection(format!("injection into component {c} sums to {net}")));
        }
        let free = &members[1..];
        if free.is_empty() {
            continue;
        }
        let sub = l.select_rows(free).select_columns(free);
        let rhs: Vec<Rational> = free.iter().map(|&v| i[v].clone()).collect();
        let x = inverse(&sub)?.mul_vec(&rhs)?;
        for (&v, xv) in free.iter().zip(x) {
            u[v] = xv;
        }
    }
    Ok(u)
}

/// Differences between consecutive terminals of `port` that share a component.
fn balanced_pairs(port: &[usize], comp: &[usize]) -> Vec<(usize, usize)> {
    let mut by_comp: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &v in port {
        by_comp.entry(comp[v]).or_default().push(v);
    }
    by_comp.values().flat_map(|vs| vs.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>()).collect()
}

/// Galvanic isolation by connected components, current decoupling by exact
/// injection-transfer solves, and the resulting category.
pub fn classify_ports(t: &Topology, spec: &PortSpec, basis: Option<&SpectralBasis>) -> Result<Classification> {
    spec.validate(t)?;
    let comp = t.components();
    let names: Vec<&String> = spec.ports.keys().collect();
    let gip = names.iter().enumerate().all(|(a, na)| {
        names[a + 1..].iter().all(|nb| spec.ports[*na].iter().all(|&x| spec.ports[*nb].iter().all(|&y| comp[x] != comp[y])))
    });
    let mut transfers = Vec::new();
    for na in &names {
        for (p, q) in balanced_pairs(&spec.ports[*na], &comp) {
            let mut inj = vec![Rational::zero(); t.n_vertices()];
            inj[p] = Rational::from_integer(1.into());
            inj[q] = -Rational::from_integer(1.into());
            let u = pseudo_solve(t, &inj)?;
            for nb in names.iter().filter(|nb| *nb != na) {
                for (x, y) in balanced_pairs(&spec.ports[*nb], &comp) {
                    let v = u[x].clone() - u[y].clone();
                    if !v.is_zero() {
                        transfers.push(Transfer {
                            from_port: (*na).clone(),
                            injection: (p, q),
                            to_port: (*nb).clone(),
                            across: (x, y),
                            voltage: v.to_string(),
                        });
                    }
                }
            }
        }
    }
    let synthetic = !spec.declared_couplings.is_empty();
    let dcp = transfers.is_empty() && !synthetic;
    Ok(Classification {
        gip,
        dcp,
        category: Category::from_flags(gip, dcp),
        transfers,
        mode_support_dcp: basis.map(|b| mode_support_decoupled(b, spec, &comp)),
        synthetic,
    })
}

fn mode_support_decoupled(basis: &SpectralBasis, spec: &PortSpec, comp: &[usize]) -> bool {
    let zeros = basis.zero_modes();
    spec.ports.values().all(|port| {
        let needed = balanced_pairs(port, comp).len();
        let dedicated = (0..basis.len())
            .filter(|k| !zeros.contains(k))
            .filter(|&k| mode_support(basis, k).iter().all(|v| port.contains(v)))
            .count();
        dedicated >= needed
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClarkeVariant {
    /// `(2/3)·[[1, −1/2, −1/2], [0, √3/2, −√3/2], [1/2, 1/2, 1/2]]`.
    Amplitude,
    /// `√(2/3)·[[1, −1/2, −1/2], [0, √3/2, −√3/2], [1/√2, 1/√2, 1/√2]]`.
    Power,
}

pub fn clarke_matrix(variant: ClarkeVariant) -> Matrix<f64> {
    let s3 = 3f64.sqrt();
    let (k, zero) = match variant {
        ClarkeVariant::Amplitude => (2.0 / 3.0, 0.5),
        ClarkeVariant::Power => ((2.0f64 / 3.0).sqrt(), std::f64::consts::FRAC_1_SQRT_2),
    };
    Matrix::from_rows(
        vec![
            vec![k, -k / 2.0, -k / 2.0],
            vec![0.0, k * s3 / 2.0, -k * s3 / 2.0],
            vec![k * zero, k * zero, k * zero],
        ],
        3,
    )
    .expect("3x3")
}

/// `T` such that `T · source = target`, i.e. `T = target · source⁻¹`.
pub fn transition_matrix(target: &Matrix<f64>, source: &Matrix<Rational>) -> Result<Matrix<f64>> {
    target.mul(&inverse(source)?.to_f64())
}

/// `P⁻¹` of the star with the centre grounded: the centre column and the zero-mode row removed.
pub fn reduced_star_inverse(basis: &SpectralBasis, centre: usize) -> Result<Matrix<Rational>> {
    let n = basis.len();
    if centre >= n {
        return invalid(format!("centre vertex {centre} out of range"));
    }
    let zeros = basis.zero_modes();
    if zeros.len() != 1 {
        return invalid("the star must be connected");
    }
    let rows: Vec<usize> = (0..n).filter(|k| !zeros.contains(k)).collect();
    let cols: Vec<usize> = (0..n).filter(|&c| c != centre).collect();
    Ok(basis.p_inv().select_rows(&rows).select_columns(&cols))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClarkeReport {
    pub variant: ClarkeVariant,
    pub reduced: Matrix<Rational>,
    pub transition: Matrix<f64>,
    /// `‖T·P⁻¹_reduced − C‖∞`.
    pub residual: f64,
}

/// Transition from the reduced star eigenbasis to the Clarke transform.
pub fn clarke_transition(basis: &SpectralBasis, variant: ClarkeVariant) -> Result<ClarkeReport> {
    if basis.len() != 4 {
        return invalid("the Clarke transition needs the four-terminal star");
    }
    let reduced = reduced_star_inverse(basis, 0)?;
    let c = clarke_matrix(variant);
    let transition = transition_matrix(&c, &reduced)?;
    let residual = transition_residual(&transition, &reduced, &c)?;
    Ok(ClarkeReport { variant, reduced, transition, residual })
}

/// `‖T·source − target‖∞` (largest absolute entry).
pub fn transition_residual(t: &Matrix<f64>, source: &Matrix<Rational>, target: &Matrix<f64>) -> Result<f64> {
    Ok(t.mul(&source.to_f64())?.sub(target)?.max_abs())
}
