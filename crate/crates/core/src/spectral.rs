//! Laplacian eigen-decomposition and the nodal normal-mode transforms.
//!
//! Nodal variables `x_v` and decoupled modal variables `x_dec` are related by
//! `x_v = P · x_dec`, where the columns of `P` are Laplacian eigenvectors. The
//! modal Ohm relation is diagonal: `M · u_dec = i_dec` with
//! `M = G_a · diag(λ)` (or `L_a⁻¹ · diag(λ)` for inductive arms).

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::eigen::jacobi_eigen;
use crate::error::{invalid, Error, Result};
use crate::ratmat::{gram_schmidt, inverse, nullspace, schur_complement, Matrix};
use crate::scalar::{int, Rational, Scalar};
use crate::topology::Topology;

const GREEK: [&str; 23] = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda", "mu", "nu",
    "xi", "omicron", "pi", "rho", "sigma", "tau", "upsilon", "chi", "psi", "omega",
];

/// Label of the `k`-th non-zero mode (0-based): `alpha`, `beta`, …
pub fn greek_label(k: usize) -> String {
    GREEK.get(k).map_or_else(|| format!("mode{}", k + 1), |s| s.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    /// Closed form for complete multipartite graphs.
    ClosedForm,
    /// Jacobi eigensolver; every eigenvalue snapped to an integer and verified exactly.
    JacobiSnapped,
    /// Jacobi eigensolver; at least one eigenvalue is not an integer.
    JacobiApproximate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Exact eigenvalues, ascending, when every eigenvalue is known exactly.
    pub exact: Option<Vec<Rational>>,
    /// Floating eigenvalues, ascending (always present).
    pub approximate: Vec<f64>,
    pub method: SpectrumMethod,
}

/// Closed-form spectrum of `K_{s1..sk}`:
/// `{0, n^(k−1)} ∪ {(n − sᵢ)^(sᵢ − 1)}`, ascending.
pub fn multipartite_spectrum(sizes: &[usize]) -> Vec<Rational> {
    let n: usize = sizes.iter().sum();
    let mut values = vec![0usize];
    values.extend(std::iter::repeat(n).take(sizes.len().saturating_sub(1)));
    for &s in sizes {
        values.extend(std::iter::repeat(n - s).take(s - 1));
    }
    values.sort_unstable();
    values.into_iter().map(|v| int(v as i64)).collect()
}

/// Spectrum of the unit-weight Laplacian of `t`.
pub fn spectrum(t: &Topology) -> Spectrum {
    if let Some(sizes) = t.multipartite_sizes() {
        let exact = multipartite_spectrum(&sizes);
        let approximate = exact.iter().map(Scalar::to_f64).collect();
        return Spectrum { exact: Some(exact), approximate, method: SpectrumMethod::ClosedForm };
    }
    laplacian_spectrum(&t.unit_laplacian())
}

/// Jacobi fallback with integer snapping for any symmetric rational matrix.
pub fn laplacian_spectrum(l: &Matrix<Rational>) -> Spectrum {
    let eig = jacobi_eigen(&l.to_f64(), 1e-12, 200);
    let approximate = eig.values.clone();
    let snapped: Option<Vec<Rational>> = approximate
        .iter()
        .map(|&x| {
            let r = x.round();
            ((x - r).abs() <= 1e-8).then(|| int(r as i64))
        })
        .collect();
    let verified = snapped.filter(|vals| multiplicities_hold(l, vals));
    match verified {
        Some(exact) => Spectrum { exact: Some(exact), approximate, method: SpectrumMethod::JacobiSnapped },
        None => Spectrum { exact: None, approximate, method: SpectrumMethod::JacobiApproximate },
    }
}

fn multiplicities_hold(l: &Matrix<Rational>, values: &[Rational]) -> bool {
    let mut counts: BTreeMap<&Rational, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    counts.into_iter().all(|(lambda, mult)| nullspace(&shifted(l, lambda)).len() == mult)
}

fn shifted(l: &Matrix<Rational>, lambda: &Rational) -> Matrix<Rational> {
    let mut m = l.clone();
    for i in 0..m.rows() {
        m[(i, i)] = m[(i, i)].clone() - lambda.clone();
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis {
    eigenvalues: Vec<Rational>,
    p: Matrix<Rational>,
    p_inv: Matrix<Rational>,
    labels: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EigenbasisOptions {
    /// Gram–Schmidt the vectors inside each degenerate eigenspace. Off by
    /// default: the plain nullspace basis keeps integer eigenvectors.
    pub orthogonalize_eigenspaces: bool,
}

impl SpectralBasis {
    pub fn eigenvalues(&self) -> &[Rational] {
        &self.eigenvalues
    }

    /// Eigenvector matrix; column `k` belongs to `eigenvalues()[k]`.
    pub fn p(&self) -> &Matrix<Rational> {
        &self.p
    }

    pub fn p_inv(&self) -> &Matrix<Rational> {
        &self.p_inv
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Indices of the zero modes (one per connected component).
    pub fn zero_modes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.eigenvalues[k].is_zero()).collect()
    }

    pub fn to_modes(&self, x_v: &[Rational]) -> Result<Vec<Rational>> {
        self.p_inv.mul_vec(x_v)
    }

    pub fn from_modes(&self, x_dec: &[Rational]) -> Result<Vec<Rational>> {
        self.p.mul_vec(x_dec)
    }
}

/// Mode labels for an eigenvalue sequence: `0`, `0_2`, … for zero modes and
/// `alpha`, `beta`, … for the rest, in order.
pub fn mode_labels(eigenvalues: &[Rational]) -> Vec<String> {
    let mut zeros = 0;
    let mut others = 0;
    eigenvalues
        .iter()
        .map(|v| {
            if v.is_zero() {
                zeros += 1;
                if zeros == 1 { "0".to_string() } else { format!("0_{zeros}") }
            } else {
                others += 1;
                greek_label(others - 1)
            }
        })
        .collect()
}

/// Builds the exact eigenbasis of `l` for the eigenvalue sequence `order`
/// (with multiplicities, in the desired column order). Within an eigenspace
/// the vectors are the RREF nullspace basis of `L − λI`, consumed in order.
pub fn eigenbasis(l: &Matrix<Rational>, order: &[Rational], opts: EigenbasisOptions) -> Result<SpectralBasis> {
    let n = l.rows();
    if !l.is_square() {
        return invalid("eigenbasis needs a square matrix");
    }
    if order.len() != n {
        return invalid(format!("{} eigenvalues given for a {n}x{n} matrix", order.len()));
    }
    let mut spaces: BTreeMap<Rational, std::vec::IntoIter<Vec<Rational>>> = BTreeMap::new();
    let mut wanted: BTreeMap<&Rational, usize> = BTreeMap::new();
    for v in order {
        *wanted.entry(v).or_default() += 1;
    }
    for (&lambda, &mult) in &wanted {
        let mut basis = nullspace(&shifted(l, lambda));
        if basis.len() != mult {
            return Err(Error::UnsupportedSpectrum(format!(
                "eigenvalue {lambda} has geometric multiplicity {} but appears {mult} times",
                basis.len()
            )));
        }
        if opts.orthogonalize_eigenspaces {
            basis = gram_schmidt(&basis).columns;
        }
        spaces.insert(lambda.clone(), basis.into_iter());
    }
    let columns: Vec<Vec<Rational>> =
        order.iter().map(|v| spaces.get_mut(v).and_then(Iterator::next).expect("multiplicity checked")).collect();
    let p = Matrix::from_columns(&columns, n)?;
    let p_inv = inverse(&p)?;
    Ok(SpectralBasis { eigenvalues: order.to_vec(), p, p_inv, labels: mode_labels(order) })
}

/// Eigenbasis of the unit Laplacian of `t`, zero modes first then ascending.
pub fn topology_basis(t: &Topology) -> Result<SpectralBasis> {
    let spec = spectrum(t);
    let exact = spec.exact.ok_or_else(|| {
        Error::UnsupportedSpectrum("the Laplacian has non-integer eigenvalues; use the floating spectrum".into())
    })?;
    eigenbasis(&t.unit_laplacian(), &exact, EigenbasisOptions::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmModel {
    Resistive,
    Inductive,
}

/// Diagonal modal matrix `scale · diag(λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalMatrix {
    pub model: ArmModel,
    /// `G_a` for resistive arms, `1 / L_a` for inductive arms.
    pub scale: Rational,
    pub diagonal: Vec<Rational>,
}

impl ModalMatrix {
    pub fn matrix(&self) -> Matrix<Rational> {
        Matrix::diagonal(&self.diagonal)
    }

    /// Diagonal pseudo-inverse: zero-mode slots stay zero.
    pub fn pseudo_inverse(&self) -> Vec<Rational> {
        self.diagonal.iter().map(|d| if d.is_zero() { Rational::zero() } else { d.recip() }).collect()
    }
}

pub fn modal_ohm(basis: &SpectralBasis, g_a: &Rational) -> Result<ModalMatrix> {
    if !g_a.is_positive() {
        return invalid("arm conductance must be positive");
    }
    Ok(ModalMatrix {
        model: ArmModel::Resistive,
        scale: g_a.clone(),
        diagonal: basis.eigenvalues.iter().map(|l| l.clone() * g_a.clone()).collect(),
    })
}

pub fn modal_inductive(basis: &SpectralBasis, l_a: &Rational) -> Result<ModalMatrix> {
    if !l_a.is_positive() {
        return invalid("arm inductance must be positive");
    }
    let scale = l_a.recip();
    Ok(ModalMatrix {
        model: ArmModel::Inductive,
        diagonal: basis.eigenvalues.iter().map(|l| l.clone() * scale.clone()).collect(),
        scale,
    })
}

/// `B · P`: arm voltages as a combination of modal voltages.
pub fn edge_voltage_map(t: &Topology, basis: &SpectralBasis) -> Result<Matrix<Rational>> {
    t.incidence().mul(basis.p())
}

/// `scale · B · P · M⁺`: arm currents driven by the nodal modal currents.
pub fn edge_current_map(t: &Topology, basis: &SpectralBasis, m: &ModalMatrix) -> Result<Matrix<Rational>> {
    let pinv: Vec<Rational> = m.pseudo_inverse().into_iter().map(|x| x * m.scale.clone()).collect();
    edge_voltage_map(t, basis)?.mul(&Matrix::diagonal(&pinv))
}

pub fn edge_voltages_from_modes(t: &Topology, basis: &SpectralBasis, u_dec: &[Rational]) -> Result<Vec<Rational>> {
    edge_voltage_map(t, basis)?.mul_vec(u_dec)
}

/// Arm currents from admissible modal currents; every zero-mode slot of
/// `i_dec` must be zero (injected currents balance per component).
pub fn edge_currents_from_modes(
    t: &Topology,
    basis: &SpectralBasis,
    m: &ModalMatrix,
    i_dec: &[Rational],
) -> Result<Vec<Rational>> {
    check_admissible(basis, i_dec)?;
    edge_current_map(t, basis, m)?.mul_vec(i_dec)
}

pub(crate) fn check_admissible(basis: &SpectralBasis, i_dec: &[Rational]) -> Result<()> {
    if i_dec.len() != basis.len() {
        return invalid(format!("modal vector has length {}, expected {}", i_dec.len(), basis.len()));
    }
    for k in basis.zero_modes() {
        if !i_dec[k].is_zero() {
            return Err(Error::InfeasibleInjection(format!(
                "zero-mode current `{}` is {}; injected currents must sum to zero",
                basis.labels[k], i_dec[k]
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeMode {
    /// Schur complement of the network extended with one auxiliary node per
    /// terminal behind its external conductance.
    KronReduction,
    /// Symmetrised `½(L·G·(L+G)⁻¹ + (L+G)⁻¹·G·L)`.
    Literal,
}

/// Laplacian seen by the external sources once their conductances are included.
pub fn composite_laplacian(t: &Topology, mode: CompositeMode) -> Result<Matrix<Rational>> {
    let l = t.laplacian();
    let n = t.n_vertices();
    let Some(ext) = t.external_conductance() else {
        return Ok(l);
    };
    match mode {
        CompositeMode::KronReduction => {
            // vertices behind a finite conductance get an auxiliary copy; ideal
            // (infinite) terminals are kept as they are
            let finite: Vec<usize> = (0..n).filter(|&v| ext[v].is_some()).collect();
            if finite.is_empty() {
                return Ok(l);
            }
            let size = n + finite.len();
            let mut aug = Matrix::<Rational>::zeros(size, size);
            for r in 0..n {
                for c in 0..n {
                    aug[(r, c)] = l[(r, c)].clone();
                }
            }
            for (k, &v) in finite.iter().enumerate() {
                let g = ext[v].clone().expect("finite");
                let a = n + k;
                aug[(v, v)] = aug[(v, v)].clone() + g.clone();
                aug[(a, a)] = g.clone();
                aug[(v, a)] = -g.clone();
                aug[(a, v)] = -g;
            }
            // terminal order is preserved: vertex v is represented by its auxiliary node if any
            let keep: Vec<usize> =
                (0..n).map(|v| finite.iter().position(|&f| f == v).map_or(v, |k| n + k)).collect();
            schur_complement(&aug, &keep)
        }
        CompositeMode::Literal => {
            let g: Vec<Rational> = ext
                .iter()
                .enumerate()
                .map(|(v, g)| {
                    g.clone().ok_or_else(|| {
                        Error::InvalidArgument(format!("literal composite needs a finite conductance at vertex {v}"))
                    })
                })
                .collect::<Result<_>>()?;
            let gm = Matrix::diagonal(&g);
            let sum_inv = inverse(&l.add(&gm)?)?;
            let left = l.mul(&gm)?.mul(&sum_inv)?;
            let right = sum_inv.mul(&gm)?.mul(&l)?;
            Ok(left.add(&right)?.scale(&(Rational::one() / int(2))))
        }
    }
}
