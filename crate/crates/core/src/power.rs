//! Instantaneous power written as linear combinations of modal products.
//!
//! A term `p^{xy}` stands for `i^x · u^y`: the current of mode `x` times the
//! voltage of mode `y`. Columns are ordered current-major.

use std::fmt;

use num_traits::{Float, Zero};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::loops::LoopBasis;
use crate::ratmat::{gram_schmidt, Matrix};
use crate::scalar::{Rational, Scalar};
use crate::spectral::{edge_current_map, edge_voltage_map, ModalMatrix, SpectralBasis};
use crate::topology::Topology;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PowerTermLabel {
    pub current_mode: String,
    pub voltage_mode: String,
}

impl PowerTermLabel {
    pub fn new(current_mode: impl Into<String>, voltage_mode: impl Into<String>) -> Self {
        Self { current_mode: current_mode.into(), voltage_mode: voltage_mode.into() }
    }
}

impl fmt::Display for PowerTermLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p^{{{},{}}}", self.current_mode, self.voltage_mode)
    }
}

/// Coefficient matrix together with its column labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerMatrix {
    pub labels: Vec<PowerTermLabel>,
    pub gamma: Matrix<Rational>,
}

impl PowerMatrix {
    pub fn column_of(&self, label: &PowerTermLabel) -> Option<Vec<Rational>> {
        self.labels.iter().position(|l| l == label).map(|c| self.gamma.column(c))
    }

    /// Column sums paired with their labels.
    pub fn balance(&self) -> Vec<(PowerTermLabel, Rational)> {
        self.labels.iter().cloned().zip(self.gamma.column_sums()).collect()
    }

    /// Columns restricted to `keep` labels (in `keep` order); missing labels read as zero.
    pub fn restricted(&self, keep: &[PowerTermLabel]) -> PowerMatrix {
        let rows = self.gamma.rows();
        let cols: Vec<Vec<Rational>> = keep
            .iter()
            .map(|l| self.column_of(l).unwrap_or_else(|| vec![Rational::zero(); rows]))
            .collect();
        let gamma = if cols.is_empty() {
            Matrix::zeros(rows, 0)
        } else {
            Matrix::from_columns(&cols, rows).expect("equal lengths")
        };
        PowerMatrix { labels: keep.to_vec(), gamma }
    }
}

fn product_matrix(
    rows: usize,
    currents: &[(String, Vec<Rational>)],
    voltages: &[(String, Vec<Rational>)],
) -> PowerMatrix {
    let mut labels = Vec::new();
    let mut cols = Vec::new();
    for (cl, c) in currents {
        for (vl, v) in voltages {
            labels.push(PowerTermLabel::new(cl.clone(), vl.clone()));
            cols.push(c.iter().zip(v).map(|(a, b)| a.clone() * b.clone()).collect::<Vec<_>>());
        }
    }
    let gamma = if cols.is_empty() { Matrix::zeros(rows, 0) } else { Matrix::from_columns(&cols, rows).expect("equal lengths") };
    PowerMatrix { labels, gamma }
}

fn labelled_columns(m: &Matrix<Rational>, labels: &[String], keep: impl Fn(usize) -> bool) -> Vec<(String, Vec<Rational>)> {
    (0..m.cols()).filter(|&k| keep(k)).map(|k| (labels[k].clone(), m.column(k))).collect()
}

/// Nodal coefficients over every `(current, voltage)` mode pair: entry
/// `(k, (x, y)) = P[k,x]·P[k,y]`.
pub fn gamma_nodes_full(basis: &SpectralBasis) -> PowerMatrix {
    let all = labelled_columns(basis.p(), basis.labels(), |_| true);
    product_matrix(basis.len(), &all, &all)
}

/// Nodal coefficients without the terms carried by zero-mode currents, which
/// vanish for any admissible injection.
pub fn gamma_nodes(basis: &SpectralBasis) -> PowerMatrix {
    let zeros = basis.zero_modes();
    let all = labelled_columns(basis.p(), basis.labels(), |_| true);
    let currents = labelled_columns(basis.p(), basis.labels(), |k| !zeros.contains(&k));
    product_matrix(basis.len(), &currents, &all)
}

/// Arm coefficients. Zero modes drop out on both sides. Loop currents, if a
/// basis is given, extend the current side; loop voltages are appended only
/// when `include_loop_voltage` is set.
pub fn gamma_edges(
    t: &Topology,
    basis: &SpectralBasis,
    m: &ModalMatrix,
    lb: Option<&LoopBasis>,
    include_loop_voltage: bool,
) -> Result<PowerMatrix> {
    if include_loop_voltage && lb.is_none() {
        return invalid("loop voltage terms need a loop basis");
    }
    let rows = t.n_edges();
    let zeros = basis.zero_modes();
    let cur = edge_current_map(t, basis, m)?;
    let vol = edge_voltage_map(t, basis)?;
    let mut currents = labelled_columns(&cur, basis.labels(), |k| !zeros.contains(&k));
    let voltages = labelled_columns(&vol, basis.labels(), |k| !zeros.contains(&k));
    let loop_cols: Vec<(String, Vec<Rational>)> = lb
        .map(|lb| lb.labels().iter().cloned().zip(lb.columns().iter().cloned()).collect())
        .unwrap_or_default();
    let mut out = product_matrix(rows, &currents, &voltages);
    if !loop_cols.is_empty() {
        let extra = product_matrix(rows, &loop_cols, &voltages);
        out = append(out, extra);
        if include_loop_voltage {
            currents.extend(loop_cols.iter().cloned());
            let extra = product_matrix(rows, &currents, &loop_cols);
            out = append(out, extra);
        }
    }
    Ok(out)
}

fn append(a: PowerMatrix, b: PowerMatrix) -> PowerMatrix {
    let mut labels = a.labels;
    labels.extend(b.labels);
    PowerMatrix { labels, gamma: a.gamma.hstack(&b.gamma).expect("same row count") }
}

/// Row-space rank and a row-orthogonal basis of `Γ` (Gram–Schmidt in row order).
#[derive(Clone, Debug, PartialEq)]
pub struct PowerBasis<T> {
    pub rank: usize,
    pub basis: Matrix<T>,
    /// Squared norms of the basis rows; divide by their roots to normalise.
    pub squared_norms: Vec<T>,
}

pub fn power_rank_basis<T: Scalar>(gamma: &Matrix<T>) -> PowerBasis<T> {
    let gs = gram_schmidt(&gamma.row_vecs());
    let rank = gs.columns.len();
    let basis = if rank == 0 {
        Matrix::zeros(0, gamma.cols())
    } else {
        Matrix::from_rows(gs.columns, gamma.cols()).expect("row length")
    };
    PowerBasis { rank, basis, squared_norms: gs.squared_norms }
}

/// `B_p · Γ`: power patterns of a new set of combined node or arm powers.
pub fn decoupled_power_patterns<T: Scalar>(b_p: &Matrix<T>, gamma: &Matrix<T>) -> Result<Matrix<T>> {
    if b_p.cols() != gamma.rows() {
        return invalid(format!("basis has {} columns but Γ has {} rows", b_p.cols(), gamma.rows()));
    }
    b_p.mul(gamma)
}

/// `T · B_src`.
pub fn change_power_basis<T: Scalar>(b_src: &Matrix<T>, transition: &Matrix<T>) -> Result<Matrix<T>> {
    if !transition.is_square() || transition.cols() != b_src.rows() {
        return invalid(format!(
            "transition is {}x{} but the basis has {} rows",
            transition.rows(),
            transition.cols(),
            b_src.rows()
        ));
    }
    transition.mul(b_src)
}

/// Total arm power as a combination of modal products: the column sums of `Γ″`.
pub fn power_balance(
    t: &Topology,
    basis: &SpectralBasis,
    m: &ModalMatrix,
    lb: Option<&LoopBasis>,
    include_loop_voltage: bool,
) -> Result<Vec<(PowerTermLabel, Rational)>> {
    Ok(gamma_edges(t, basis, m, lb, include_loop_voltage)?.balance())
}

/// Nodal and arm decompositions side by side.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerDecomposition {
    pub nodes: PowerMatrix,
    pub edges: PowerMatrix,
    pub nodes_basis: PowerBasis<Rational>,
    pub edges_basis: PowerBasis<Rational>,
    pub include_loop_voltage: bool,
}

pub fn decompose(
    t: &Topology,
    basis: &SpectralBasis,
    m: &ModalMatrix,
    lb: Option<&LoopBasis>,
    include_loop_voltage: bool,
) -> Result<PowerDecomposition> {
    let nodes = gamma_nodes(basis);
    let edges = gamma_edges(t, basis, m, lb, include_loop_voltage)?;
    Ok(PowerDecomposition {
        nodes_basis: power_rank_basis(&nodes.gamma),
        edges_basis: power_rank_basis(&edges.gamma),
        nodes,
        edges,
        include_loop_voltage,
    })
}

/// Labels on which the nodal and arm balances disagree. Loop-voltage terms
/// have no nodal counterpart and are skipped.
pub fn balance_mismatches(nodes: &PowerMatrix, edges: &PowerMatrix, loop_labels: &[String]) -> Vec<PowerTermLabel> {
    let is_loop_voltage = |l: &PowerTermLabel| loop_labels.contains(&l.voltage_mode);
    let is_loop_current = |l: &PowerTermLabel| loop_labels.contains(&l.current_mode);
    let mut all: Vec<PowerTermLabel> =
        nodes.labels.iter().chain(&edges.labels).filter(|l| !is_loop_voltage(l)).cloned().collect();
    all.sort();
    all.dedup();
    let node_sum = nodes.restricted(&all).gamma.column_sums();
    let edge_sum = edges.restricted(&all).gamma.column_sums();
    all.into_iter()
        .zip(node_sum.into_iter().zip(edge_sum))
        // loop currents never reach the nodes, so their arm balance must vanish
        .filter(|(l, (a, b))| if is_loop_current(l) { !b.is_zero() } else { a != b })
        .map(|(l, _)| l)
        .collect()
}

/// Cumulative trapezoidal integral of sampled powers (`p[s][k]` is channel
/// `k` at sample `s`) starting from `e0`.
pub fn energy<F: Float>(p: &[Vec<F>], e0: &[F], dt: F) -> Result<Vec<Vec<F>>> {
    let Some(first) = p.first() else {
        return invalid("empty power series");
    };
    if first.len() != e0.len() || p.iter().any(|row| row.len() != e0.len()) {
        return invalid("power samples and initial energies differ in length");
    }
    let half = dt / (F::one() + F::one());
    let mut out = Vec::with_capacity(p.len());
    out.push(e0.to_vec());
    for w in p.windows(2) {
        let prev = out.last().expect("seeded");
        let next = prev.iter().zip(&w[0]).zip(&w[1]).map(|((&e, &a), &b)| e + half * (a + b)).collect();
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::topology_loops;
    use crate::scalar::{int, ratio};
    use crate::spectral::{eigenbasis, modal_ohm, EigenbasisOptions};
    use crate::topology::Topology;

    fn setup(t: &Topology, order: &[i64]) -> (SpectralBasis, ModalMatrix) {
        let order: Vec<Rational> = order.iter().map(|&x| int(x)).collect();
        let b = eigenbasis(&t.unit_laplacian(), &order, EigenbasisOptions::default()).unwrap();
        let m = modal_ohm(&b, &int(1)).unwrap();
        (b, m)
    }

    fn label(c: &str, v: &str) -> PowerTermLabel {
        PowerTermLabel::new(c, v)
    }

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn v_edges_and_balance() {
        let v = Topology::new(3, vec![(0, 1), (0, 2)]).unwrap();
        let (b, m) = setup(&v, &[0, 1, 3]);
        let g = gamma_edges(&v, &b, &m, None, false).unwrap();
        let names = [("alpha", "alpha"), ("alpha", "beta"), ("beta", "alpha"), ("beta", "beta")];
        assert_eq!(g.labels, names.map(|(c, u)| label(c, u)).to_vec());
        assert_eq!(g.gamma.row(0), ints(&[1, -3, -1, 3]).as_slice());
        assert_eq!(g.gamma.row(1), ints(&[1, 3, 1, 3]).as_slice());
        assert_eq!(power_rank_basis(&g.gamma).rank, 2);
        let bal = power_balance(&v, &b, &m, None, false).unwrap();
        assert_eq!(bal.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>(), ints(&[2, 0, 0, 6]));
        assert!(balance_mismatches(&gamma_nodes(&b), &g, &[]).is_empty());
    }

    #[test]
    fn v_nodal_row_by_label() {
        let v = Topology::new(3, vec![(0, 1), (0, 2)]).unwrap();
        let (b, _) = setup(&v, &[0, 1, 3]);
        let g = gamma_nodes_full(&b);
        assert_eq!(g.gamma.cols(), 9);
        // P row for v2 is (1, -1, 1): p^{xy} = P[x]·P[y]
        assert_eq!(g.gamma.row(1), ints(&[1, -1, 1, -1, 1, -1, 1, -1, 1]).as_slice());
        assert_eq!(gamma_nodes(&b).gamma.cols(), 6);
    }

    #[test]
    fn delta_with_loops() {
        let d = Topology::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let (b, m) = setup(&d, &[0, 3, 3]);
        let lb = topology_loops(&d);
        let plain = gamma_edges(&d, &b, &m, None, false).unwrap();
        let third = ratio(1, 3);
        let expected = [[4, 2, 2, 1], [1, -1, -1, 1], [1, 2, 2, 4]];
        for (r, row) in expected.iter().enumerate() {
            let want: Vec<Rational> = row.iter().map(|&x| int(x) * third.clone()).collect();
            assert_eq!(plain.gamma.row(r), want.as_slice());
        }
        let with = gamma_edges(&d, &b, &m, Some(&lb), false).unwrap();
        assert_eq!(with.column_of(&label("Phi1", "alpha")).unwrap(), ints(&[2, -1, -1]));
        assert_eq!(with.column_of(&label("Phi1", "beta")).unwrap(), ints(&[1, 1, -2]));
        let full = power_balance(&d, &b, &m, Some(&lb), true).unwrap();
        let phiphi = full.iter().find(|(l, _)| *l == label("Phi1", "Phi1")).unwrap();
        assert_eq!(phiphi.1, int(3));
        let loop_terms: Vec<_> = full.iter().filter(|(l, _)| l.current_mode == "Phi1" && l.voltage_mode != "Phi1").collect();
        assert!(loop_terms.iter().all(|(_, c)| c.is_zero()));
    }

    #[test]
    fn loop_voltage_needs_basis() {
        let d = Topology::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let (b, m) = setup(&d, &[0, 3, 3]);
        assert!(gamma_edges(&d, &b, &m, None, true).is_err());
    }

    #[test]
    fn single_vertex_power() {
        let t = Topology::new(1, vec![]).unwrap();
        let (b, _) = setup(&t, &[0]);
        let g = gamma_nodes_full(&b);
        assert_eq!(g.gamma, Matrix::identity(1));
        assert_eq!(g.labels, vec![label("0", "0")]);
    }

    #[test]
    fn patterns_and_basis_change() {
        let v = Topology::new(3, vec![(0, 1), (0, 2)]).unwrap();
        let (b, m) = setup(&v, &[0, 1, 3]);
        let g = gamma_edges(&v, &b, &m, None, false).unwrap().gamma.to_f64();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bp = Matrix::from_rows(vec![vec![s, -s], vec![s, s]], 2).unwrap();
        let p = decoupled_power_patterns(&bp, &g).unwrap();
        let r2 = 2f64.sqrt();
        let want = [[0.0, -3.0 * r2, -r2, 0.0], [r2, 0.0, 0.0, 3.0 * r2]];
        for r in 0..2 {
            for c in 0..4 {
                assert!((p[(r, c)] - want[r][c]).abs() < 1e-12);
            }
        }
        let id = Matrix::<f64>::identity(2);
        assert_eq!(change_power_basis(&bp, &id).unwrap(), bp);
        assert!(change_power_basis(&bp, &Matrix::<f64>::identity(3)).is_err());
    }

    #[test]
    fn zero_gamma_has_rank_zero() {
        let z = Matrix::<Rational>::zeros(3, 4);
        let pb = power_rank_basis(&z);
        assert_eq!(pb.rank, 0);
        assert_eq!(pb.basis.rows(), 0);
    }

    #[test]
    fn energy_integrates() {
        let dt = 1e-3;
        let p: Vec<Vec<f64>> = (0..=1000).map(|_| vec![1.0, 0.0]).collect();
        let e = energy(&p, &[0.0, 5.0], dt).unwrap();
        assert!((e[1000][0] - 1.0).abs() < 1e-12);
        assert_eq!(e[1000][1], 5.0);
        let n = 2000;
        let dt = 0.04 / n as f64;
        let sine: Vec<Vec<f64>> =
            (0..=n).map(|k| vec![(2.0 * std::f64::consts::PI * 50.0 * k as f64 * dt).sin()]).collect();
        let e = energy(&sine, &[2.0], dt).unwrap();
        assert!((e[n][0] - 2.0).abs() < dt * dt);
        assert!(energy::<f64>(&[], &[], dt).is_err());
    }
}
