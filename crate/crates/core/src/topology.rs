//! Graph model of a converter's active network.
//!
//! Vertices are converter terminals, edges are arms (a controllable source in
//! series with a conductance or inductance). Edge orientation only fixes sign
//! conventions for arm voltages and currents.

use std::collections::{BTreeSet, VecDeque};

use num_traits::{One, Zero};

use crate::error::{invalid, Result};
use crate::ratmat::Matrix;
use crate::scalar::{int, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
    partitions: Option<Vec<Vec<usize>>>,
    edge_conductance: Vec<Rational>,
    edge_inductance: Vec<Rational>,
    /// Per-vertex external conductance; `None` entries are ideal (infinite) sources.
    external_conductance: Option<Vec<Option<Rational>>>,
}

impl Topology {
    /// Unit-weight topology with the given oriented edges.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (k, &(t, h)) in edges.iter().enumerate() {
            if t >= n || h >= n {
                return invalid(format!("edge {k} ({t},{h}) references a vertex outside 0..{n}"));
            }
            if t == h {
                return invalid(format!("edge {k} is a self-loop at vertex {t}"));
            }
            if !seen.insert((t.min(h), t.max(h))) {
                return invalid(format!("edge {k} duplicates the undirected edge {{{t},{h}}}"));
            }
        }
        let m = edges.len();
        Ok(Topology {
            n,
            edges,
            partitions: None,
            edge_conductance: vec![Rational::one(); m],
            edge_inductance: vec![Rational::one(); m],
            external_conductance: None,
        })
    }

    pub fn with_partitions(mut self, partitions: Vec<Vec<usize>>) -> Result<Self> {
        let mut covered = vec![false; self.n];
        for (i, part) in partitions.iter().enumerate() {
            if part.is_empty() {
                return invalid(format!("partition {i} is empty"));
            }
            for &v in part {
                if v >= self.n {
                    return invalid(format!("partition {i} references vertex {v} outside 0..{}", self.n));
                }
                if covered[v] {
                    return invalid(format!("vertex {v} appears in more than one partition"));
                }
                covered[v] = true;
            }
        }
        if let Some(v) = covered.iter().position(|c| !c) {
            return invalid(format!("vertex {v} is not covered by any partition"));
        }
        self.partitions = Some(partitions);
        Ok(self)
    }

    /// Uniform arm conductance `G_a`.
    pub fn with_arm_conductance(self, g: Rational) -> Result<Self> {
        let m = self.edges.len();
        self.with_edge_conductances(vec![g; m])
    }

    pub fn with_edge_conductances(mut self, g: Vec<Rational>) -> Result<Self> {
        if g.len() != self.edges.len() {
            return invalid(format!("{} conductances for {} edges", g.len(), self.edges.len()));
        }
        if g.iter().any(|x| *x <= Rational::zero()) {
            return invalid("arm conductances must be positive");
        }
        self.edge_conductance = g;
        Ok(self)
    }

    pub fn with_arm_inductance(mut self, l: Rational) -> Result<Self> {
        if l <= Rational::zero() {
            return invalid("arm inductance must be positive");
        }
        self.edge_inductance = vec![l; self.edges.len()];
        Ok(self)
    }

    pub fn with_external_conductance(mut self, g: Vec<Option<Rational>>) -> Result<Self> {
        if g.len() != self.n {
            return invalid(format!("{} external conductances for {} vertices", g.len(), self.n));
        }
        if g.iter().flatten().any(|x| *x < Rational::zero()) {
            return invalid("external conductances must be non-negative");
        }
        self.external_conductance = Some(g);
        Ok(self)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn partitions(&self) -> Option<&[Vec<usize>]> {
        self.partitions.as_deref()
    }

    pub fn edge_conductance(&self) -> &[Rational] {
        &self.edge_conductance
    }

    pub fn edge_inductance(&self) -> &[Rational] {
        &self.edge_inductance
    }

    pub fn external_conductance(&self) -> Option<&[Option<Rational>]> {
        self.external_conductance.as_deref()
    }

    /// The common arm conductance, if all arms share one.
    pub fn uniform_conductance(&self) -> Option<Rational> {
        uniform(&self.edge_conductance)
    }

    pub fn uniform_inductance(&self) -> Option<Rational> {
        uniform(&self.edge_inductance)
    }

    /// `m × n` incidence matrix: −1 at the tail, +1 at the head of each edge.
    pub fn incidence(&self) -> Matrix<Rational> {
        let mut b = Matrix::zeros(self.edges.len(), self.n);
        for (k, &(t, h)) in self.edges.iter().enumerate() {
            b[(k, t)] = int(-1);
            b[(k, h)] = int(1);
        }
        b
    }

    /// Weighted Laplacian `Bᵀ · diag(G) · B` with the arm conductances as weights.
    pub fn laplacian(&self) -> Matrix<Rational> {
        self.laplacian_with(&self.edge_conductance)
    }

    /// Laplacian with unit weights, i.e. `D − A`.
    pub fn unit_laplacian(&self) -> Matrix<Rational> {
        self.laplacian_with(&vec![Rational::one(); self.edges.len()])
    }

    fn laplacian_with(&self, w: &[Rational]) -> Matrix<Rational> {
        let mut l = Matrix::<Rational>::zeros(self.n, self.n);
        for (&(t, h), wk) in self.edges.iter().zip(w) {
            l[(t, t)] = l[(t, t)].clone() + wk.clone();
            l[(h, h)] = l[(h, h)].clone() + wk.clone();
            l[(t, h)] = l[(t, h)].clone() - wk.clone();
            l[(h, t)] = l[(h, t)].clone() - wk.clone();
        }
        l
    }

    /// Degree and adjacency matrices of the underlying unweighted graph.
    pub fn degree_adjacency(&self) -> (Matrix<Rational>, Matrix<Rational>) {
        let mut d = Matrix::<Rational>::zeros(self.n, self.n);
        let mut a = Matrix::<Rational>::zeros(self.n, self.n);
        for &(t, h) in &self.edges {
            d[(t, t)] = d[(t, t)].clone() + Rational::one();
            d[(h, h)] = d[(h, h)].clone() + Rational::one();
            a[(t, h)] = Rational::one();
            a[(h, t)] = Rational::one();
        }
        (d, a)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(t, h) in &self.edges {
            deg[t] += 1;
            deg[h] += 1;
        }
        deg
    }

    /// Neighbour lists sorted by vertex index, each entry `(neighbour, edge index)`.
    pub fn neighbours(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (k, &(t, h)) in self.edges.iter().enumerate() {
            adj[t].push((h, k));
            adj[h].push((t, k));
        }
        for list in &mut adj {
            list.sort();
        }
        adj
    }

    /// Component id per vertex, numbered in order of their smallest vertex.
    pub fn components(&self) -> Vec<usize> {
        let adj = self.neighbours();
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn n_components(&self) -> usize {
        self.components().iter().copied().max().map_or(0, |c| c + 1)
    }

    /// Partition sizes when the graph is exactly the complete multipartite
    /// graph over its declared partitions (with unit weights implied by the caller).
    pub fn multipartite_sizes(&self) -> Option<Vec<usize>> {
        let parts = self.partitions.as_ref()?;
        let mut owner = vec![0; self.n];
        for (i, p) in parts.iter().enumerate() {
            for &v in p {
                owner[v] = i;
            }
        }
        let expected: usize = {
            let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
            (0..sizes.len()).flat_map(|i| ((i + 1)..sizes.len()).map(move |j| (i, j))).map(|(i, j)| sizes[i] * sizes[j]).sum()
        };
        if self.edges.len() != expected || self.edges.iter().any(|&(t, h)| owner[t] == owner[h]) {
            return None;
        }
        Some(parts.iter().map(Vec::len).collect())
    }
}

fn uniform(values: &[Rational]) -> Option<Rational> {
    let first = values.first()?;
    values.iter().all(|v| v == first).then(|| first.clone())
}

/// Complete k-partite graph `K_{s1,…,sk}` on consecutive vertex blocks.
pub fn complete_kpartite(sizes: &[usize]) -> Result<Topology> {
    if sizes.is_empty() {
        return invalid("partition size list is empty");
    }
    if sizes.contains(&0) {
        return invalid("partition sizes must be at least 1");
    }
    let mut next = 0;
    let partitions = sizes
        .iter()
        .map(|&s| {
            let block: Vec<usize> = (next..next + s).collect();
            next += s;
            block
        })
        .collect();
    complete_multipartite(partitions)
}

/// Complete multipartite graph over explicit vertex sets. Edges are ordered by
/// partition pair, then tail, then head, with the tail at the lower index.
pub fn complete_multipartite(partitions: Vec<Vec<usize>>) -> Result<Topology> {
    if partitions.is_empty() {
        return invalid("partition list is empty");
    }
    let n = partitions.iter().map(Vec::len).sum();
    let mut edges = Vec::new();
    for i in 0..partitions.len() {
        for j in (i + 1)..partitions.len() {
            let mut pair: Vec<(usize, usize)> = partitions[i]
                .iter()
                .flat_map(|&a| partitions[j].iter().map(move |&b| (a.min(b), a.max(b))))
                .collect();
            pair.sort();
            edges.extend(pair);
        }
    }
    Topology::new(n, edges)?.with_partitions(partitions)
}
