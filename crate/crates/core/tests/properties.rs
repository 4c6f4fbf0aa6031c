use std::collections::BTreeSet;

use cellgraph::classify::{classify_ports, decoupled_ports, PortSpec};
use cellgraph::loops::{cyclomatic_number, topology_loops};
use cellgraph::ratmat::Matrix;
use cellgraph::scalar::{int, Rational};
use cellgraph::spectral::{multipartite_spectrum, spectrum, topology_basis};
use cellgraph::topology::{complete_kpartite, complete_multipartite, Topology};
use num_traits::Zero;
use proptest::prelude::*;

fn arbitrary_graph() -> impl Strategy<Value = Topology> {
    (1usize..7).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        proptest::collection::vec(any::<bool>(), pairs.len()).prop_map(move |keep| {
            let edges = pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| *e).collect();
            Topology::new(n, edges).unwrap()
        })
    })
}

fn sizes() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(1usize..4, 2..4)
}

/// Partitions of `sizes` laid out over a shuffled vertex labelling.
fn relabelled(sizes: &[usize], perm: &[usize]) -> Vec<Vec<usize>> {
    let mut next = 0;
    sizes
        .iter()
        .map(|&s| {
            let part: Vec<usize> = (next..next + s).map(|v| perm[v]).collect();
            next += s;
            part
        })
        .collect()
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bipartite_spectrum_closed_form(x in 1usize..8, y in 1usize..8) {
        let t = complete_kpartite(&[x, y]).unwrap();
        let mut expected = vec![int(0), int((x + y) as i64)];
        expected.extend(std::iter::repeat(int(y as i64)).take(x - 1));
        expected.extend(std::iter::repeat(int(x as i64)).take(y - 1));
        expected.sort();
        prop_assert_eq!(spectrum(&t).exact, Some(expected.clone()));
        prop_assert_eq!(multipartite_spectrum(&[x, y]), expected);
    }

    #[test]
    fn laplacian_is_degree_minus_adjacency(t in arbitrary_graph()) {
        let (d, a) = t.degree_adjacency();
        prop_assert_eq!(t.unit_laplacian(), d.sub(&a).unwrap());
        let b = t.incidence();
        prop_assert_eq!(t.unit_laplacian(), b.transpose().mul(&b).unwrap());
        prop_assert!(t.unit_laplacian().row_sums().iter().all(Zero::is_zero));
    }

    #[test]
    fn loop_basis_orthogonal_and_divergence_free(t in arbitrary_graph()) {
        let lb = topology_loops(&t);
        prop_assert_eq!(lb.rank(), cyclomatic_number(&t));
        if lb.rank() > 0 {
            let bl = lb.matrix();
            let gram = bl.transpose().mul(&bl).unwrap();
            for i in 0..gram.rows() {
                for j in 0..gram.cols() {
                    let expected = if i == j { lb.squared_norms()[i].clone() } else { Rational::zero() };
                    prop_assert_eq!(&gram[(i, j)], &expected);
                }
            }
            prop_assert!(t.incidence().transpose().mul(&bl).unwrap().is_zero());
        }
    }

    #[test]
    fn eigenbasis_inverts_and_diagonalises(s in sizes(), seed in any::<u64>()) {
        let n: usize = s.iter().sum();
        let t = complete_multipartite(relabelled(&s, &shuffled(n, seed))).unwrap();
        let basis = topology_basis(&t).unwrap();
        prop_assert_eq!(basis.p().mul(basis.p_inv()).unwrap(), Matrix::identity(n));
        let modal = basis.p_inv().mul(&t.unit_laplacian()).unwrap().mul(basis.p()).unwrap();
        prop_assert_eq!(modal, Matrix::diagonal(basis.eigenvalues()));
    }

    #[test]
    fn decoupled_ports_follow_relabelling(s in sizes(), seed in any::<u64>()) {
        let n: usize = s.iter().sum();
        let identity: Vec<usize> = (0..n).collect();
        let perm = shuffled(n, seed);
        let base = |p: &[usize]| {
            let parts = relabelled(&s, p);
            let t = complete_multipartite(parts.clone()).unwrap();
            let ports = decoupled_ports(&topology_basis(&t).unwrap(), &parts).ports;
            ports.into_iter().map(|g| g.vertices.into_iter().collect::<BTreeSet<_>>()).collect::<BTreeSet<_>>()
        };
        let mapped: BTreeSet<BTreeSet<usize>> =
            base(&identity).into_iter().map(|g| g.into_iter().map(|v| perm[v]).collect()).collect();
        prop_assert_eq!(base(&perm), mapped);
    }

    #[test]
    fn galvanic_isolation_is_symmetric(t in arbitrary_graph(), a in 0usize..6, b in 0usize..6) {
        let n = t.n_vertices();
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let fwd = classify_ports(&t, &PortSpec::new([("P", vec![a]), ("Q", vec![b])]), None).unwrap();
        let rev = classify_ports(&t, &PortSpec::new([("P", vec![b]), ("Q", vec![a])]), None).unwrap();
        prop_assert_eq!(fwd.gip, rev.gip);
        prop_assert_eq!(fwd.gip, t.components()[a] != t.components()[b]);
    }
}
