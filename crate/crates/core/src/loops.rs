//! Internal circulating currents: the cycle space of the arm graph.

use std::collections::VecDeque;

use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::ratmat::{dot, gram_schmidt, Matrix};
use crate::scalar::Rational;
use crate::spectral::{check_admissible, edge_current_map, ModalMatrix, SpectralBasis};
use crate::topology::Topology;

/// Loop-sign matrix with one row per non-tree edge of the BFS spanning forest
/// (roots taken in vertex order, neighbours in index order). The non-tree edge
/// carries `+1`; the closing tree path is signed by traversal direction.
pub fn fundamental_cycles(t: &Topology) -> Matrix<Rational> {
    let n = t.n_vertices();
    let m = t.n_edges();
    let adj = t.neighbours();
    // parent[v] = (parent vertex, edge index)
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    let mut tree = vec![false; m];
    for root in 0..n {
        if depth[root] != usize::MAX {
            continue;
        }
        depth[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(w, e) in &adj[v] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    parent[w] = Some((v, e));
                    tree[e] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    let edges = t.edges();
    // sign of edge e when walked from `from`
    let step = |e: usize, from: usize| if edges[e].0 == from { Rational::one() } else { -Rational::one() };
    let rows: Vec<Vec<Rational>> = (0..m)
        .filter(|&e| !tree[e])
        .map(|e| {
            let (tail, head) = edges[e];
            let mut row = vec![Rational::zero(); m];
            row[e] = Rational::one();
            // walk head → tail through the tree: climb from both ends to the common ancestor
            let (mut a, mut b) = (head, tail);
            let mut down = Vec::new();
            while a != b {
                if depth[a] >= depth[b] {
                    let (p, pe) = parent[a].expect("non-root");
                    row[pe] = row[pe].clone() + step(pe, a);
                    a = p;
                } else {
                    let (p, pe) = parent[b].expect("non-root");
                    down.push((pe, p));
                    b = p;
                }
            }
            for (pe, from) in down {
                row[pe] = row[pe].clone() + step(pe, from);
            }
            row
        })
        .collect();
    Matrix::from_rows(rows, m).expect("rows have edge length")
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopBasis {
    n_matrix: Matrix<Rational>,
    columns: Vec<Vec<Rational>>,
    squared_norms: Vec<Rational>,
    labels: Vec<String>,
}

impl LoopBasis {
    /// The loop-sign matrix the basis was built from.
    pub fn n(&self) -> &Matrix<Rational> {
        &self.n_matrix
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_matrix.cols()
    }

    /// Pairwise-orthogonal rational basis columns; divide column `k` by
    /// `sqrt(squared_norms()[k])` for the orthonormal version.
    pub fn columns(&self) -> &[Vec<Rational>] {
        &self.columns
    }

    /// `B_loop` as an `m × r` matrix.
    pub fn matrix(&self) -> Matrix<Rational> {
        Matrix::from_columns(&self.columns, self.n_edges()).expect("columns have edge length")
    }

    pub fn squared_norms(&self) -> &[Rational] {
        &self.squared_norms
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Edges with a nonzero entry in loop `k`.
    pub fn members(&self, k: usize) -> Vec<usize> {
        self.columns[k].iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(e, _)| e).collect()
    }

    /// Arm currents produced by loop synthesis coordinates: `B_loop · i_loop`.
    pub fn synthesize(&self, i_loop: &[Rational]) -> Result<Vec<Rational>> {
        if i_loop.len() != self.rank() {
            return invalid(format!("{} loop values given for {} loops", i_loop.len(), self.rank()));
        }
        let mut out = vec![Rational::zero(); self.n_edges()];
        for (c, x) in self.columns.iter().zip(i_loop) {
            for (o, ce) in out.iter_mut().zip(c) {
                *o = o.clone() + ce.clone() * x.clone();
            }
        }
        Ok(out)
    }
}

/// Loop labels `Phi1`, `Phi2`, …
pub fn loop_labels(r: usize) -> Vec<String> {
    (1..=r).map(|k| format!("Phi{k}")).collect()
}

/// Validates every row of `n` as a circulation on `t` and orthogonalises the
/// row space. Dependent rows are dropped.
pub fn loop_basis(t: &Topology, n: &Matrix<Rational>) -> Result<LoopBasis> {
    if n.cols() != t.n_edges() {
        return invalid(format!("loop matrix has {} columns, graph has {} edges", n.cols(), t.n_edges()));
    }
    let bt = t.incidence().transpose();
    for r in 0..n.rows() {
        let net = bt.mul_vec(n.row(r))?;
        if let Some(vertex) = net.iter().position(|x| !x.is_zero()) {
            return Err(Error::InvalidLoop { row: r, vertex, net: net[vertex].to_string() });
        }
    }
    let gs = gram_schmidt(&n.row_vecs());
    Ok(LoopBasis {
        n_matrix: n.clone(),
        labels: loop_labels(gs.columns.len()),
        columns: gs.columns,
        squared_norms: gs.squared_norms,
    })
}

/// Loop basis of the fundamental cycles of `t`.
pub fn topology_loops(t: &Topology) -> LoopBasis {
    loop_basis(t, &fundamental_cycles(t)).expect("fundamental cycles are circulations")
}

/// `B_loopᵀ · x_e` against the unnormalised basis.
pub fn loop_dofs(x_e: &[Rational], lb: &LoopBasis) -> Result<Vec<Rational>> {
    if x_e.len() != lb.n_edges() {
        return invalid(format!("edge vector has length {}, expected {}", x_e.len(), lb.n_edges()));
    }
    Ok(lb.columns.iter().map(|c| dot(c, x_e)).collect())
}

/// Synthesis coordinates of `x_e` in the loop basis, i.e. the `i_loop` for
/// which `B_loop · i_loop` is the loop-space component of `x_e`.
pub fn loop_coordinates(x_e: &[Rational], lb: &LoopBasis) -> Result<Vec<Rational>> {
    Ok(loop_dofs(x_e, lb)?.into_iter().zip(&lb.squared_norms).map(|(d, nn)| d / nn.clone()).collect())
}

/// `i_e = B·P·M⁺·i_dec + B_loop·i_loop` (with `M⁺` scaled back by the arm conductance).
pub fn edge_currents_full(
    t: &Topology,
    basis: &SpectralBasis,
    m: &ModalMatrix,
    i_dec: &[Rational],
    lb: &LoopBasis,
    i_loop: &[Rational],
) -> Result<Vec<Rational>> {
    check_admissible(basis, i_dec)?;
    let nodal = edge_current_map(t, basis, m)?.mul_vec(i_dec)?;
    let circ = lb.synthesize(i_loop)?;
    Ok(nodal.into_iter().zip(circ).map(|(a, b)| a + b).collect())
}

/// Expected loop count `m − n + c`.
pub fn cyclomatic_number(t: &Topology) -> usize {
    t.n_edges() + t.n_components() - t.n_vertices()
}
