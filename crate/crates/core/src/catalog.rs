//! Reference topologies with their printed matrices, and a verifier that
//! recomputes every fixture from scratch.
//!
//! Vertices are 0-based. Each entry pins the eigenvalue order of its modal
//! basis so that labels (`alpha`, `beta`, …) line up with the printed rows.
//! Analyses use unit arm conductance; modal quantities scale linearly in `G_a`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::Zero;
use serde::Serialize;

use crate::classify::{clarke_matrix, mode_support, reduced_star_inverse, transition_residual, ClarkeVariant};
use crate::error::{Error, Result};
use crate::loops::{fundamental_cycles, loop_basis, topology_loops, LoopBasis};
use crate::power::{decoupled_power_patterns, gamma_edges, gamma_nodes_full, power_rank_basis, PowerMatrix, PowerTermLabel};
use crate::ratmat::{rank, Matrix};
use crate::scalar::{format_float, format_rational, int, parse_rational, Rational, Scalar};
use crate::spectral::{
    edge_current_map, edge_voltage_map, eigenbasis, modal_ohm, multipartite_spectrum, spectrum, EigenbasisOptions,
    ModalMatrix, SpectralBasis,
};
use crate::topology::{complete_multipartite, Topology};

pub const NAMES: [&str; 8] = ["I", "V", "D", "2V", "Y", "2Y", "K222", "K322"];

/// A printed quantity to be reproduced.
#[derive(Clone, Debug, PartialEq)]
pub enum Expected {
    Incidence(Matrix<Rational>),
    Laplacian(Matrix<Rational>),
    /// Eigenvalue multiset of the unit Laplacian.
    Spectrum(Vec<Rational>),
    /// Diagonal of `M / G_a` in the pinned mode order.
    ModalDiagonal(Vec<Rational>),
    /// `P⁻¹`, one row per mode in the pinned order.
    InverseEigenvectors(Matrix<Rational>),
    /// `B · P`.
    EdgeVoltageMap(Matrix<Rational>),
    /// `B · P · Λ⁺`, optionally followed by the loop columns.
    EdgeCurrentMap { matrix: Matrix<Rational>, with_loops: bool },
    /// Nodal coefficients over every mode pair.
    GammaNodes(PowerMatrix),
    /// Arm coefficients; unlisted columns must vanish.
    GammaEdges { gamma: PowerMatrix, with_loops: bool },
    /// Nonzero terms of the total arm power.
    Balance { terms: Vec<(PowerTermLabel, Rational)>, loop_voltage: bool },
    EdgePowerRank(usize),
    /// Rows spanning the cycle space.
    LoopSpan(Matrix<Rational>),
    /// `B_p · Γ″`; unlisted columns must vanish.
    Patterns { b_p: Matrix<Rational>, patterns: PowerMatrix, with_loops: bool },
    /// Floating `B_p · Γ″` compared to 1e-12.
    PatternsFloat { b_p: Matrix<f64>, labels: Vec<PowerTermLabel>, patterns: Matrix<f64> },
    /// Each listed mode's eigenvector is supported inside the given vertex set.
    PortSupports(Vec<(String, Vec<usize>)>),
    /// A transition `T` claimed to map the reduced star basis onto the Clarke matrix.
    ClarkeTransition { variant: ClarkeVariant, transition: Matrix<f64> },
}

impl Expected {
    pub fn kind(&self) -> &'static str {
        match self {
            Expected::Incidence(_) => "incidence",
            Expected::Laplacian(_) => "laplacian",
            Expected::Spectrum(_) => "spectrum",
            Expected::ModalDiagonal(_) => "modal_diagonal",
            Expected::InverseEigenvectors(_) => "inverse_eigenvectors",
            Expected::EdgeVoltageMap(_) => "edge_voltage_map",
            Expected::EdgeCurrentMap { .. } => "edge_current_map",
            Expected::GammaNodes(_) => "gamma_nodes",
            Expected::GammaEdges { .. } => "gamma_edges",
            Expected::Balance { .. } => "balance",
            Expected::EdgePowerRank(_) => "edge_power_rank",
            Expected::LoopSpan(_) => "loop_span",
            Expected::Patterns { .. } => "patterns",
            Expected::PatternsFloat { .. } => "patterns_float",
            Expected::PortSupports(_) => "port_supports",
            Expected::ClarkeTransition { .. } => "clarke_transition",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub id: String,
    pub expected: Expected,
}

/// A printed fixture known not to reproduce, with the reason and, where one
/// exists, the corrected value that must reproduce instead.
#[derive(Clone, Debug, PartialEq)]
pub struct Deviation {
    pub fixture: String,
    pub printed: String,
    pub derived: String,
    pub justification: String,
    pub corrected: Option<Expected>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub topology: Topology,
    pub mode_order: Vec<Rational>,
    pub fixtures: Vec<Fixture>,
    pub deviations: Vec<Deviation>,
}

impl CatalogEntry {
    pub fn fixture(&self, id: &str) -> Option<&Fixture> {
        self.fixtures.iter().find(|f| f.id == id)
    }

    pub fn deviation(&self, id: &str) -> Option<&Deviation> {
        self.deviations.iter().find(|d| d.fixture == id)
    }

    pub fn basis(&self) -> Result<SpectralBasis> {
        eigenbasis(&self.topology.unit_laplacian(), &self.mode_order, EigenbasisOptions::default())
    }

    pub fn analysis(&self) -> Result<Analysis> {
        Analysis::new(self)
    }
}

/// Everything the fixtures are checked against, computed once per entry.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub topology: Topology,
    pub basis: SpectralBasis,
    pub modal: ModalMatrix,
    pub loops: LoopBasis,
}

impl Analysis {
    pub fn new(entry: &CatalogEntry) -> Result<Self> {
        let basis = entry.basis()?;
        let modal = modal_ohm(&basis, &int(1))?;
        Ok(Self { loops: topology_loops(&entry.topology), topology: entry.topology.clone(), basis, modal })
    }
}

// ---------- fixture literals ----------

/// Parses `"1 -1/2; 0 3"` into a rational matrix.
pub fn mat(s: &str) -> Matrix<Rational> {
    let rows: Vec<Vec<Rational>> = s
        .split(';')
        .map(|r| r.split_whitespace().map(|x| parse_rational(x).expect("fixture literal")).collect())
        .collect();
    let cols = rows.first().map_or(0, Vec::len);
    Matrix::from_rows(rows, cols).expect("rectangular fixture literal")
}

fn scaled(k: &str, s: &str) -> Matrix<Rational> {
    mat(s).scale(&parse_rational(k).expect("fixture scale"))
}

fn rats(s: &str) -> Vec<Rational> {
    s.split_whitespace().map(|x| parse_rational(x).expect("fixture literal")).collect()
}

/// `"alpha.beta"` → current `alpha`, voltage `beta`.
pub fn term(s: &str) -> PowerTermLabel {
    let (c, v) = s.split_once('.').expect("term is current.voltage");
    PowerTermLabel::new(c, v)
}

fn terms(s: &str) -> Vec<PowerTermLabel> {
    s.split_whitespace().map(term).collect()
}

fn pm(labels: &str, gamma: Matrix<Rational>) -> PowerMatrix {
    let labels = terms(labels);
    assert_eq!(labels.len(), gamma.cols(), "fixture label count");
    PowerMatrix { labels, gamma }
}

/// `"alpha.alpha:2 beta.beta:6"`.
fn balance(s: &str) -> Vec<(PowerTermLabel, Rational)> {
    s.split_whitespace()
        .map(|t| {
            let (l, c) = t.split_once(':').expect("label:coeff");
            (term(l), parse_rational(c).expect("coefficient"))
        })
        .collect()
}

fn fixture(id: &str, expected: Expected) -> Fixture {
    Fixture { id: id.to_string(), expected }
}

fn deviation(fixture: &str, printed: &str, derived: &str, justification: &str, corrected: Option<Expected>) -> Deviation {
    Deviation {
        fixture: fixture.to_string(),
        printed: printed.to_string(),
        derived: derived.to_string(),
        justification: justification.to_string(),
        corrected,
    }
}

fn entry(name: &str, topology: Topology, order: &str, fixtures: Vec<Fixture>, deviations: Vec<Deviation>) -> CatalogEntry {
    CatalogEntry { name: name.to_string(), topology, mode_order: rats(order), fixtures, deviations }
}

const NODE_TERMS: &str = "alpha.alpha alpha.beta beta.alpha beta.beta 0.0 0.beta 0.alpha beta.0 alpha.0";
const TWO_MODE_TERMS: &str = "alpha.alpha alpha.beta beta.alpha beta.beta";
const THREE_MODE_TERMS: &str =
    "alpha.alpha alpha.beta beta.alpha alpha.gamma beta.beta gamma.alpha beta.gamma gamma.beta gamma.gamma";

fn graph(n: usize, edges: &[(usize, usize)], partitions: &[&[usize]]) -> Topology {
    Topology::new(n, edges.to_vec())
        .and_then(|t| t.with_partitions(partitions.iter().map(|p| p.to_vec()).collect()))
        .expect("catalog topology")
}

fn entry_i() -> CatalogEntry {
    entry(
        "I",
        graph(2, &[(0, 1)], &[&[0], &[1]]),
        "0 2",
        vec![
            fixture("incidence", Expected::Incidence(mat("-1 1"))),
            fixture("laplacian", Expected::Laplacian(mat("1 -1; -1 1"))),
            fixture("spectrum", Expected::Spectrum(rats("0 2"))),
            fixture("modal_diagonal", Expected::ModalDiagonal(rats("0 4"))),
            fixture("p_inv", Expected::InverseEigenvectors(scaled("1/2", "1 1; -1 1"))),
            fixture("balance", Expected::Balance { terms: balance("alpha.alpha:2"), loop_voltage: false }),
        ],
        vec![deviation(
            "modal_diagonal",
            "G_a·diag(0, 4)",
            "G_a·diag(0, 2)",
            "the single-arm Laplacian [[1,-1],[-1,1]] has eigenvalues 0 and 2; the printed arm power 2·u·i of the same entry also requires 2",
            Some(Expected::ModalDiagonal(rats("0 2"))),
        )],
    )
}

fn entry_v() -> CatalogEntry {
    entry(
        "V",
        graph(3, &[(0, 1), (0, 2)], &[&[0], &[1, 2]]),
        "0 1 3",
        vec![
            fixture("laplacian", Expected::Laplacian(mat("2 -1 -1; -1 1 0; -1 0 1"))),
            fixture("spectrum", Expected::Spectrum(rats("0 1 3"))),
            fixture("modal_diagonal", Expected::ModalDiagonal(rats("0 1 3"))),
            fixture("p_inv", Expected::InverseEigenvectors(scaled("1/3", "1 1 1; 0 -3/2 3/2; -1 1/2 1/2"))),
            fixture("edge_voltages", Expected::EdgeVoltageMap(mat("0 -1 3; 0 1 3"))),
            fixture("edge_currents", Expected::EdgeCurrentMap { matrix: mat("0 -1 1; 0 1 1"), with_loops: false }),
            fixture(
                "gamma_nodes",
                Expected::GammaNodes(pm(NODE_TERMS, mat("0 0 0 4 1 -2 0 -2 0; 1 -1 -1 1 1 1 -1 1 -1; 1 1 1 1 1 1 1 1 1"))),
            ),
            fixture(
                "gamma_edges",
                Expected::GammaEdges { gamma: pm(TWO_MODE_TERMS, mat("1 -3 -1 3; 1 3 1 3")), with_loops: false },
            ),
            fixture("balance", Expected::Balance { terms: balance("alpha.alpha:2 beta.beta:6"), loop_voltage: false }),
            fixture("edge_power_rank", Expected::EdgePowerRank(2)),
            fixture("patterns_orthonormal", {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let r2 = std::f64::consts::SQRT_2;
                Expected::PatternsFloat {
                    b_p: Matrix::from_rows(vec![vec![s, -s], vec![s, s]], 2).expect("2x2"),
                    labels: terms(TWO_MODE_TERMS),
                    patterns: Matrix::from_rows(vec![vec![0.0, -3.0 * r2, -r2, 0.0], vec![r2, 0.0, 0.0, 3.0 * r2]], 4)
                        .expect("2x4"),
                }
            }),
        ],
        vec![],
    )
}

fn entry_d() -> CatalogEntry {
    let printed_currents = "0 2 1; 0 -1 1; 0 1 -2";
    let currents = "0 2 1; 0 -1 1; 0 -1 -2";
    let printed_loop_currents = "0 2 1 3; 0 -1 1 3; 0 1 -2 3";
    let loop_currents = "0 2 1 3; 0 -1 1 3; 0 -1 -2 3";
    let sign = "the third arm's beta coefficient must be -1/3: it is (B·P)[2][1]/3 with (B·P)[2][1] = -1, and with +1/3 the arm currents would not sum to the nodal currents";
    let b_int = "1 1 1; 1 -1 0; 1 0 -1";
    entry(
        "D",
        graph(3, &[(0, 1), (1, 2), (2, 0)], &[&[0], &[1], &[2]]),
        "0 3 3",
        vec![
            fixture("incidence", Expected::Incidence(mat("-1 1 0; 0 -1 1; 1 0 -1"))),
            fixture("laplacian", Expected::Laplacian(mat("2 -1 -1; -1 2 -1; -1 -1 2"))),
            fixture("spectrum", Expected::Spectrum(rats("0 3 3"))),
            fixture("p_inv", Expected::InverseEigenvectors(scaled("1/3", "1 1 1; -1 2 -1; -1 -1 2"))),
            fixture("edge_voltages", Expected::EdgeVoltageMap(mat("0 2 1; 0 -1 1; 0 -1 -2"))),
            fixture(
                "edge_currents",
                Expected::EdgeCurrentMap { matrix: scaled("1/3", printed_currents), with_loops: false },
            ),
            fixture(
                "edge_currents_loops",
                Expected::EdgeCurrentMap { matrix: scaled("1/3", printed_loop_currents), with_loops: true },
            ),
            fixture(
                "gamma_nodes",
                Expected::GammaNodes(pm(NODE_TERMS, mat("1 1 1 1 1 -1 -1 -1 -1; 1 0 0 0 1 0 1 0 1; 0 0 0 1 1 1 0 1 0"))),
            ),
            fixture(
                "gamma_edges",
                Expected::GammaEdges {
                    gamma: pm(TWO_MODE_TERMS, scaled("1/3", "4 2 2 1; 1 -1 -1 1; 1 2 2 4")),
                    with_loops: false,
                },
            ),
            fixture(
                "gamma_edges_loops",
                Expected::GammaEdges {
                    gamma: pm(
                        "alpha.alpha alpha.beta beta.alpha beta.beta Phi1.alpha Phi1.beta",
                        scaled("1/3", "4 2 2 1 6 3; 1 -1 -1 1 -3 3; 1 2 2 4 -3 -6"),
                    ),
                    with_loops: true,
                },
            ),
            fixture(
                "balance",
                Expected::Balance { terms: balance("alpha.alpha:2 alpha.beta:1 beta.alpha:1 beta.beta:2"), loop_voltage: false },
            ),
            fixture(
                "balance_loop_voltage",
                Expected::Balance {
                    terms: balance("alpha.alpha:2 alpha.beta:1 beta.alpha:1 beta.beta:2 Phi1.Phi1:3"),
                    loop_voltage: true,
                },
            ),
            fixture("edge_power_rank", Expected::EdgePowerRank(3)),
            fixture("loop_span", Expected::LoopSpan(mat("1 1 1"))),
            fixture(
                "patterns_integer",
                Expected::Patterns {
                    b_p: mat(b_int),
                    patterns: pm(TWO_MODE_TERMS, mat("2 1 1 2; 1 1 1 0; 1 0 0 1")),
                    with_loops: false,
                },
            ),
        ],
        vec![
            deviation(
                "edge_currents",
                "third row (0, 1, -2)/3",
                "third row (0, -1, -2)/3",
                sign,
                Some(Expected::EdgeCurrentMap { matrix: scaled("1/3", currents), with_loops: false }),
            ),
            deviation(
                "edge_currents_loops",
                "third row (0, 1, -2, 3)/3",
                "third row (0, -1, -2, 3)/3",
                sign,
                Some(Expected::EdgeCurrentMap { matrix: scaled("1/3", loop_currents), with_loops: true }),
            ),
            deviation(
                "patterns_integer",
                "third pattern p^{alpha,alpha} + p^{beta,beta}",
                "third pattern p^{alpha,alpha} - p^{beta,beta}",
                "the third basis row (1, 0, -1) applied to the arm coefficients gives (4-1)/3 and (1-4)/3 for the alpha-alpha and beta-beta terms",
                Some(Expected::Patterns {
                    b_p: mat(b_int),
                    patterns: pm(TWO_MODE_TERMS, mat("2 1 1 2; 1 1 1 0; 1 0 0 -1")),
                    with_loops: false,
                }),
            ),
        ],
    )
}

fn entry_2v() -> CatalogEntry {
    entry(
        "2V",
        graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], &[&[0, 2], &[1, 3]]),
        "0 4 2 2",
        vec![
            fixture("laplacian", Expected::Laplacian(mat("2 -1 0 -1; -1 2 -1 0; 0 -1 2 -1; -1 0 -1 2"))),
            fixture("spectrum", Expected::Spectrum(rats("0 4 2 2"))),
            fixture("modal_diagonal", Expected::ModalDiagonal(rats("0 4 2 2"))),
            fixture(
                "p_inv",
                Expected::InverseEigenvectors(scaled("1/4", "1 1 1 1; -1 1 -1 1; -2 0 2 0; 0 -2 0 2")),
            ),
            fixture(
                "edge_voltages",
                Expected::EdgeVoltageMap(mat("0 2 1 -1; 0 -2 1 1; 0 2 -1 1; 0 -2 -1 -1")),
            ),
            fixture(
                "edge_currents_loops",
                Expected::EdgeCurrentMap {
                    matrix: mat("0 1/2 1/2 -1/2 1; 0 -1/2 1/2 1/2 1; 0 1/2 -1/2 1/2 1; 0 -1/2 -1/2 -1/2 1"),
                    with_loops: true,
                },
            ),
            fixture(
                "gamma_edges",
                Expected::GammaEdges {
                    gamma: pm(
                        THREE_MODE_TERMS,
                        scaled("1/2", "2 1 2 -1 1 -2 -1 -1 1; 2 -1 -2 -1 1 -2 1 1 1; 2 -1 -2 1 1 2 -1 -1 1; 2 1 2 1 1 2 1 1 1"),
                    ),
                    with_loops: false,
                },
            ),
            fixture(
                "balance",
                Expected::Balance { terms: balance("alpha.alpha:4 beta.beta:2 gamma.gamma:2"), loop_voltage: false },
            ),
            fixture("edge_power_rank", Expected::EdgePowerRank(4)),
            fixture("loop_span", Expected::LoopSpan(mat("1 1 1 1"))),
            fixture(
                "patterns_loops",
                Expected::Patterns {
                    b_p: scaled("1/2", "1 1 1 1; 1 -1 -1 1; -1 -1 1 1; -1 1 -1 1"),
                    patterns: pm(
                        "alpha.alpha beta.beta gamma.gamma alpha.beta beta.alpha Phi1.gamma \
                         alpha.gamma gamma.alpha Phi1.beta beta.gamma gamma.beta Phi1.alpha",
                        mat("2 1 1 0 0 0 0 0 0 0 0 0; 0 0 0 1 2 -2 0 0 0 0 0 0; \
                             0 0 0 0 0 0 1 2 -2 0 0 0; 0 0 0 0 0 0 0 0 0 1 1 -4"),
                    ),
                    with_loops: true,
                },
            ),
            fixture("port_supports", Expected::PortSupports(vec![("beta".into(), vec![0, 2]), ("gamma".into(), vec![1, 3])])),
        ],
        vec![],
    )
}

fn entry_y() -> CatalogEntry {
    let s2 = std::f64::consts::SQRT_2;
    let s3 = 3f64.sqrt();
    let printed_t = Matrix::from_rows(
        vec![
            vec![0.0, -1.0 / 3.0, -1.0 / 3.0],
            vec![4.0 * (s3 - s2) / 9.0, s3 / 9.0, -s2 / 9.0],
            vec![4.0 / 3.0, 0.0, 0.0],
        ],
        3,
    )
    .expect("3x3");
    entry(
        "Y",
        graph(4, &[(0, 1), (0, 2), (0, 3)], &[&[0], &[1, 2, 3]]),
        "0 4 1 1",
        vec![
            fixture("laplacian", Expected::Laplacian(mat("3 -1 -1 -1; -1 1 0 0; -1 0 1 0; -1 0 0 1"))),
            fixture("spectrum", Expected::Spectrum(rats("0 4 1 1"))),
            fixture("modal_diagonal", Expected::ModalDiagonal(rats("0 4 1 1"))),
            fixture(
                "p_inv",
                Expected::InverseEigenvectors(scaled(
                    "1/4",
                    "1 1 1 1; -1 1/3 1/3 1/3; 0 -4/3 8/3 -4/3; 0 -4/3 -4/3 8/3",
                )),
            ),
            fixture("edge_voltages", Expected::EdgeVoltageMap(mat("0 4 -1 -1; 0 4 1 0; 0 4 0 1"))),
            fixture(
                "edge_currents",
                Expected::EdgeCurrentMap { matrix: mat("0 1 -1 -1; 0 1 1 0; 0 1 0 1"), with_loops: false },
            ),
            fixture(
                "gamma_edges",
                Expected::GammaEdges {
                    gamma: pm(THREE_MODE_TERMS, mat("4 -1 -4 -1 1 -4 1 1 1; 4 1 4 0 1 0 0 0 0; 4 0 0 1 0 4 0 0 1")),
                    with_loops: false,
                },
            ),
            fixture("edge_power_rank", Expected::EdgePowerRank(3)),
            fixture(
                "clarke_transition",
                Expected::ClarkeTransition { variant: ClarkeVariant::Amplitude, transition: printed_t },
            ),
        ],
        vec![deviation(
            "clarke_transition",
            "T = (1/3)[[0, -1, -1], [4(√3-√2)/3, √3/3, -√2/3], [4, 0, 0]]",
            "T solved from T·P⁻¹_reduced = C; see the clarke command for both variants",
            "the solved amplitude-invariant T is [[0, -1, -1], [0, 1/√3, -1/√3], [4, 0, 0]]; the printed outer rows are a third of it and the middle row carries √2 where ±√3/9 is needed, so the printed T·P⁻¹_reduced misses C by 4/9 in the max norm",
            None,
        )],
    )
}

fn entry_2y() -> CatalogEntry {
    entry(
        "2Y",
        graph(5, &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)], &[&[0, 4], &[1, 2, 3]]),
        "0 3 5 2 2",
        vec![
            fixture("spectrum", Expected::Spectrum(rats("0 3 5 2 2"))),
            fixture("modal_diagonal", Expected::ModalDiagonal(rats("0 3 5 2 2"))),
            fixture(
                "p_inv",
                Expected::InverseEigenvectors(scaled(
                    "1/5",
                    "1 1 1 1 1; -5/2 0 0 0 5/2; 3/2 -1 -1 -1 3/2; 0 -5/3 10/3 -5/3 0; 0 -5/3 -5/3 10/3 0",
                )),
            ),
            fixture(
                "edge_voltages",
                Expected::EdgeVoltageMap(mat(
                    "0 1 -5/3 -1 -1; 0 1 -5/3 1 0; 0 1 -5/3 0 1; 0 1 5/3 1 1; 0 1 5/3 -1 0; 0 1 5/3 0 -1",
                )),
            ),
            fixture(
                "edge_currents",
                Expected::EdgeCurrentMap {
                    matrix: scaled(
                        "1/3",
                        "0 1 -1 -3/2 -3/2; 0 1 -1 3/2 0; 0 1 -1 0 3/2; 0 1 1 3/2 3/2; 0 1 1 -3/2 0; 0 1 1 0 -3/2",
                    ),
                    with_loops: false,
                },
            ),
            fixture("loop_span", Expected::LoopSpan(mat("1 0 -1 1 0 -1; 1 -1 0 1 -1 0"))),
            fixture(
                "port_supports",
                Expected::PortSupports(vec![
                    ("alpha".into(), vec![0, 4]),
                    ("gamma".into(), vec![1, 2, 3]),
                    ("delta".into(), vec![1, 2, 3]),
                ]),
            ),
        ],
        vec![],
    )
}

fn multipartite(partitions: &[&[usize]]) -> Topology {
    complete_multipartite(partitions.iter().map(|p| p.to_vec()).collect()).expect("catalog topology")
}

fn entry_k222() -> CatalogEntry {
    let p = "1 1 1 1 1 1; -1 2 -1 -1 2 {a}; -1 -1 2 -1 -1 2; -3 0 0 3 0 0; 0 -3 0 0 3 0; 0 0 -3 0 0 3";
    entry(
        "K222",
        multipartite(&[&[0, 3], &[1, 4], &[2, 5]]),
        "0 6 6 4 4 4",
        vec![
            fixture("spectrum", Expected::Spectrum(rats("0 6 6 4 4 4"))),
            fixture("modal_diagonal", Expected::ModalDiagonal(rats("0 6 6 4 4 4"))),
            fixture("p_inv", Expected::InverseEigenvectors(scaled("1/6", &p.replace("{a}", "1")))),
            fixture(
                "port_supports",
                Expected::PortSupports(vec![
                    ("gamma".into(), vec![0, 3]),
                    ("delta".into(), vec![1, 4]),
                    ("epsilon".into(), vec![2, 5]),
                ]),
            ),
        ],
        vec![deviation(
            "p_inv",
            "alpha row (-1, 2, -1, -1, 2, 1)/6",
            "alpha row (-1, 2, -1, -1, 2, -1)/6",
            "an eigenvalue-6 eigenvector must be constant on each 2-set; vertices 2 and 5 share a set, so the last entry must equal the third",
            Some(Expected::InverseEigenvectors(scaled("1/6", &p.replace("{a}", "-1")))),
        )],
    )
}

fn entry_k322() -> CatalogEntry {
    let p = "1 1 1 1 1 1 {z}; 0 -7/2 0 0 7/2 0 0; 0 0 -7/2 0 0 7/2 0; -1 -1 5/2 -1 -1 5/2 {g}; \
             4/3 -1 -1 4/3 -1 -1 4/3; -7/3 0 0 14/3 0 0 -7/3; -7/3 0 0 -7/3 0 0 14/3";
    let printed = p.replace("{z}", "0").replace("{g}", "1");
    let corrected = p.replace("{z}", "1").replace("{g}", "-1");
    entry(
        "K322",
        multipartite(&[&[0, 3, 6], &[1, 4], &[2, 5]]),
        "0 5 5 7 7 4 4",
        vec![
            fixture("spectrum", Expected::Spectrum(rats("0 7 7 4 4 5 5"))),
            fixture("modal_diagonal", Expected::ModalDiagonal(rats("0 5 5 7 7 4 4"))),
            fixture("p_inv", Expected::InverseEigenvectors(scaled("1/7", &printed))),
            fixture(
                "port_supports",
                Expected::PortSupports(vec![
                    ("alpha".into(), vec![1, 4]),
                    ("beta".into(), vec![2, 5]),
                    ("epsilon".into(), vec![0, 3, 6]),
                    ("zeta".into(), vec![0, 3, 6]),
                ]),
            ),
        ],
        vec![deviation(
            "p_inv",
            "zero row (1, 1, 1, 1, 1, 1, 0)/7 and gamma row (-1, -1, 5/2, -1, -1, 5/2, 1)/7",
            "zero row (1, 1, 1, 1, 1, 1, 1)/7 and gamma row (-1, -1, 5/2, -1, -1, 5/2, -1)/7",
            "the zero-mode row of P⁻¹ is uniform, and an eigenvalue-7 eigenvector is constant on the 3-set {0, 3, 6}; both printed rows break this at vertex 6",
            Some(Expected::InverseEigenvectors(scaled("1/7", &corrected))),
        )],
    )
}

pub fn catalog(name: &str) -> Result<CatalogEntry> {
    Ok(match name {
        "I" => entry_i(),
        "V" => entry_v(),
        "D" => entry_d(),
        "2V" => entry_2v(),
        "Y" => entry_y(),
        "2Y" => entry_2y(),
        "K222" => entry_k222(),
        "K322" => entry_k322(),
        other => return Err(Error::UnknownTopology(other.to_string())),
    })
}

pub fn all() -> Vec<CatalogEntry> {
    NAMES.iter().map(|n| catalog(n).expect("listed name")).collect()
}

// ---------- checking ----------

fn render(m: &Matrix<Rational>) -> String {
    let rows: Vec<String> =
        m.row_vecs().iter().map(|r| r.iter().map(format_rational).collect::<Vec<_>>().join(", ")).collect();
    format!("[[{}]]", rows.join("], ["))
}

fn render_vec(v: &[Rational]) -> String {
    format!("[{}]", v.iter().map(format_rational).collect::<Vec<_>>().join(", "))
}

fn compare_matrix(what: &str, got: &Matrix<Rational>, want: &Matrix<Rational>) -> Option<String> {
    (got != want).then(|| format!("{what}: computed {}, expected {}", render(got), render(want)))
}

fn sorted(v: &[Rational]) -> Vec<Rational> {
    let mut v = v.to_vec();
    v.sort();
    v
}

/// Columns of `want` must equal those of `got` by label; columns of `got`
/// absent from `want` must vanish.
fn compare_labelled(got: &PowerMatrix, want: &PowerMatrix) -> Option<String> {
    if got.gamma.rows() != want.gamma.rows() {
        return Some(format!("{} rows computed, {} expected", got.gamma.rows(), want.gamma.rows()));
    }
    let mut diffs = Vec::new();
    for (k, l) in want.labels.iter().enumerate() {
        let w = want.gamma.column(k);
        match got.column_of(l) {
            Some(g) if g == w => {}
            Some(g) => diffs.push(format!("{l}: computed {}, expected {}", render_vec(&g), render_vec(&w))),
            None if w.iter().all(Zero::is_zero) => {}
            None => diffs.push(format!("{l}: not computed, expected {}", render_vec(&w))),
        }
    }
    for (k, l) in got.labels.iter().enumerate() {
        if !want.labels.contains(l) && !got.gamma.column(k).iter().all(Zero::is_zero) {
            diffs.push(format!("{l}: computed {}, expected zero", render_vec(&got.gamma.column(k))));
        }
    }
    (!diffs.is_empty()).then(|| diffs.join("; "))
}

fn span_equal(a: &Matrix<Rational>, b: &Matrix<Rational>) -> bool {
    let (ra, rb) = (rank(a), rank(b));
    ra == rb && a.cols() == b.cols() && rank(&a.vstack(b).expect("same width")) == ra
}

fn check_inverse_eigenvectors(a: &Analysis, printed: &Matrix<Rational>) -> Option<String> {
    let b = &a.basis;
    if printed.rows() != b.len() || printed.cols() != b.len() {
        return Some(format!("shape {}x{}, expected {n}x{n}", printed.rows(), printed.cols(), n = b.len()));
    }
    let l = a.topology.unit_laplacian();
    let mut diffs = Vec::new();
    for (r, lambda) in b.eigenvalues().iter().enumerate() {
        let row = printed.row(r);
        let lr = l.mul_vec(row).expect("square");
        let want: Vec<Rational> = row.iter().map(|x| x.clone() * lambda.clone()).collect();
        if row.iter().all(Zero::is_zero) || lr != want {
            diffs.push(format!("row {r} ({}) is not an eigenvector for {}", b.labels()[r], format_rational(lambda)));
        }
    }
    let distinct: BTreeSet<Rational> = b.eigenvalues().iter().cloned().collect();
    for lambda in distinct {
        let idx: Vec<usize> = (0..b.len()).filter(|&k| b.eigenvalues()[k] == lambda).collect();
        if !span_equal(&printed.select_rows(&idx), &b.p_inv().select_rows(&idx)) {
            diffs.push(format!("eigenspace {} spans differ", format_rational(&lambda)));
        }
    }
    (!diffs.is_empty()).then(|| diffs.join("; "))
}

impl Expected {
    /// `None` when the computed quantity reproduces the expectation.
    pub fn check(&self, a: &Analysis) -> Result<Option<String>> {
        let t = &a.topology;
        let b = &a.basis;
        Ok(match self {
            Expected::Incidence(m) => compare_matrix("B", &t.incidence(), m),
            Expected::Laplacian(m) => compare_matrix("L", &t.unit_laplacian(), m),
            Expected::Spectrum(want) => {
                let got = spectrum(t).exact.ok_or_else(|| Error::Numerical("spectrum did not snap to rationals".into()))?;
                let mut diffs = Vec::new();
                if sorted(&got) != sorted(want) {
                    diffs.push(format!("computed {}, expected {}", render_vec(&sorted(&got)), render_vec(&sorted(want))));
                }
                if let Some(sizes) = t.multipartite_sizes() {
                    let closed = multipartite_spectrum(&sizes);
                    if sorted(&closed) != sorted(want) {
                        diffs.push(format!("closed form {}", render_vec(&closed)));
                    }
                }
                (!diffs.is_empty()).then(|| diffs.join("; "))
            }
            Expected::ModalDiagonal(want) => (a.modal.diagonal != *want)
                .then(|| format!("computed {}, expected {}", render_vec(&a.modal.diagonal), render_vec(want))),
            Expected::InverseEigenvectors(m) => check_inverse_eigenvectors(a, m),
            Expected::EdgeVoltageMap(m) => compare_matrix("B·P", &edge_voltage_map(t, b)?, m),
            Expected::EdgeCurrentMap { matrix, with_loops } => {
                let mut got = edge_current_map(t, b, &a.modal)?;
                if *with_loops && a.loops.rank() > 0 {
                    got = got.hstack(&a.loops.matrix())?;
                }
                compare_matrix("i_e map", &got, matrix)
            }
            Expected::GammaNodes(want) => compare_labelled(&gamma_nodes_full(b), want),
            Expected::GammaEdges { gamma, with_loops } => {
                let lb = with_loops.then_some(&a.loops);
                compare_labelled(&gamma_edges(t, b, &a.modal, lb, false)?, gamma)
            }
            Expected::Balance { terms, loop_voltage } => {
                let g = gamma_edges(t, b, &a.modal, Some(&a.loops), *loop_voltage)?;
                let sums = g.gamma.column_sums();
                let got = PowerMatrix { labels: g.labels, gamma: Matrix::from_rows(vec![sums], g.gamma.cols())? };
                let (labels, coeffs): (Vec<_>, Vec<_>) = terms.iter().cloned().unzip();
                let want = PowerMatrix { gamma: Matrix::from_rows(vec![coeffs], labels.len())?, labels };
                compare_labelled(&got, &want)
            }
            Expected::EdgePowerRank(r) => {
                let got = power_rank_basis(&gamma_edges(t, b, &a.modal, None, false)?.gamma).rank;
                (got != *r).then(|| format!("computed rank {got}, expected {r}"))
            }
            Expected::LoopSpan(m) => {
                if let Err(e) = loop_basis(t, m) {
                    Some(e.to_string())
                } else {
                    let ours = fundamental_cycles(t);
                    (!span_equal(&ours, m)).then(|| format!("cycle space {} differs from {}", render(&ours), render(m)))
                }
            }
            Expected::Patterns { b_p, patterns, with_loops } => {
                let g = gamma_edges(t, b, &a.modal, with_loops.then_some(&a.loops), false)?;
                let got = PowerMatrix { gamma: decoupled_power_patterns(b_p, &g.gamma)?, labels: g.labels };
                compare_labelled(&got, patterns)
            }
            Expected::PatternsFloat { b_p, labels, patterns } => {
                let g = gamma_edges(t, b, &a.modal, None, false)?;
                let restricted = g.restricted(labels).gamma.to_f64();
                let got = decoupled_power_patterns(b_p, &restricted)?;
                let err = got.sub(patterns)?.max_abs();
                let dropped = g.gamma.cols() != labels.len();
                (err >= 1e-12 || dropped).then(|| format!("max deviation {}", format_float(err)))
            }
            Expected::PortSupports(list) => {
                let mut diffs = Vec::new();
                for (label, want) in list {
                    match b.label_index(label) {
                        None => diffs.push(format!("no mode `{label}`")),
                        Some(k) => {
                            let got = mode_support(b, k);
                            if got.is_empty() || !got.iter().all(|v| want.contains(v)) {
                                diffs.push(format!("{label}: support {got:?} not inside {want:?}"));
                            }
                        }
                    }
                }
                (!diffs.is_empty()).then(|| diffs.join("; "))
            }
            Expected::ClarkeTransition { variant, transition } => {
                let reduced = reduced_star_inverse(b, 0)?;
                let res = transition_residual(transition, &reduced, &clarke_matrix(*variant))?;
                (res >= 1e-12).then(|| format!("‖T·P⁻¹_reduced − C‖∞ = {}", format_float(Scalar::to_f64(&res))))
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Match,
    /// Does not reproduce, but a ledgered deviation explains it and its correction reproduces.
    Deviation,
    Mismatch,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixtureResult {
    pub entry: String,
    pub fixture: String,
    pub kind: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub results: Vec<FixtureResult>,
    pub matched: usize,
    pub deviations: usize,
    pub mismatches: usize,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatches == 0
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let status = match r.status {
                Status::Match => "match",
                Status::Deviation => "deviation",
                Status::Mismatch => "MISMATCH",
            };
            let _ = write!(out, "{:<5} {:<22} {:<10}", r.entry, r.fixture, status);
            if !r.detail.is_empty() {
                let _ = write!(out, " {}", r.detail);
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "total {}: {} match, {} ledgered deviation, {} mismatch",
            self.results.len(),
            self.matched,
            self.deviations,
            self.mismatches
        );
        out
    }
}

fn verify_fixture(entry: &CatalogEntry, a: &Analysis, f: &Fixture) -> FixtureResult {
    let mk = |status, detail: String| FixtureResult {
        entry: entry.name.clone(),
        fixture: f.id.clone(),
        kind: f.expected.kind().to_string(),
        status,
        detail,
    };
    let outcome = match f.expected.check(a) {
        Ok(o) => o,
        Err(e) => return mk(Status::Mismatch, format!("error: {e}")),
    };
    match (outcome, entry.deviation(&f.id)) {
        (None, None) => mk(Status::Match, String::new()),
        (None, Some(_)) => mk(Status::Mismatch, "ledgered deviation no longer occurs".into()),
        (Some(diff), None) => mk(Status::Mismatch, diff),
        (Some(_), Some(d)) => match d.corrected.as_ref().map(|c| c.check(a)) {
            Some(Ok(None)) | None => mk(Status::Deviation, format!("printed {}; derived {}", d.printed, d.derived)),
            Some(Ok(Some(diff))) => mk(Status::Mismatch, format!("correction does not reproduce: {diff}")),
            Some(Err(e)) => mk(Status::Mismatch, format!("correction error: {e}")),
        },
    }
}

pub fn verify_entry(entry: &CatalogEntry) -> Vec<FixtureResult> {
    match entry.analysis() {
        Ok(a) => entry.fixtures.iter().map(|f| verify_fixture(entry, &a, f)).collect(),
        Err(e) => vec![FixtureResult {
            entry: entry.name.clone(),
            fixture: "analysis".into(),
            kind: "analysis".into(),
            status: Status::Mismatch,
            detail: e.to_string(),
        }],
    }
}

pub fn verify(entries: &[CatalogEntry]) -> VerifyReport {
    let results: Vec<FixtureResult> = entries.iter().flat_map(verify_entry).collect();
    let count = |s| results.iter().filter(|r| r.status == s).count();
    VerifyReport { matched: count(Status::Match), deviations: count(Status::Deviation), mismatches: count(Status::Mismatch), results }
}

pub fn verify_all() -> VerifyReport {
    verify(&all())
}
