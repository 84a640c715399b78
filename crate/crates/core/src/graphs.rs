//! Bipartite coupling graphs between the two agents and their Laplacian
//! spectra.
//!
//! * `G` pairs the agents' time steps: edges `(A_t, B_t)`.
//! * `H` pairs corresponding evaluation stages: edges `(A_i, B_i)`.
//! * `L` couples stage `i` of agent A with the cyclic successor stage of
//!   agent B: edges `(A_i, B_{(i mod m) + 1})`.
//!
//! `H` is a perfect matching and therefore disconnected for `m ≥ 2`, so its
//! algebraic connectivity is zero. `H ∪ L` is a single `2m`-cycle, whose
//! algebraic connectivity is `2 − 2cos(2π / 2m)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

/// Vertex labelled by agent side and time-step or stage index. Orders side A
/// before side B, then by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub side: Side,
    pub index: usize,
}

impl Vertex {
    pub fn a(index: usize) -> Self {
        Self { side: Side::A, index }
    }

    pub fn b(index: usize) -> Self {
        Self { side: Side::B, index }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.side, self.index)
    }
}

/// Undirected bipartite graph whose edges all join side A to side B.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CouplingGraph {
    vertices: BTreeSet<Vertex>,
    /// Stored as `(side-A endpoint, side-B endpoint)`.
    edges: BTreeSet<(Vertex, Vertex)>,
}

impl CouplingGraph {
    pub fn new(
        vertices: impl IntoIterator<Item = Vertex>,
        edges: impl IntoIterator<Item = (Vertex, Vertex)>,
    ) -> Result<Self> {
        let vertices: BTreeSet<Vertex> = vertices.into_iter().collect();
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u.side == v.side {
                return Err(Error::Input(format!("edge {u}-{v} does not cross sides")));
            }
            if !vertices.contains(&u) || !vertices.contains(&v) {
                return Err(Error::Input(format!("edge {u}-{v} references an unknown vertex")));
            }
            set.insert(if u.side == Side::A { (u, v) } else { (v, u) });
        }
        Ok(Self {
            vertices,
            edges: set,
        })
    }

    /// Vertices in canonical order.
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.vertices.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.edges.iter().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.edges.iter().filter(|(a, b)| *a == v || *b == v).count()
    }

    /// Connected components by breadth-first search.
    pub fn component_count(&self) -> usize {
        let mut adj: BTreeMap<Vertex, Vec<Vertex>> =
            self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for &(a, b) in &self.edges {
            adj.get_mut(&a).unwrap().push(b);
            adj.get_mut(&b).unwrap().push(a);
        }
        let mut seen = BTreeSet::new();
        let mut components = 0;
        for &start in &self.vertices {
            if !seen.insert(start) {
                continue;
            }
            components += 1;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[&v] {
                    if seen.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
        }
        components
    }
}

fn two_sided(indices: impl Iterator<Item = usize> + Clone) -> Vec<Vertex> {
    indices
        .clone()
        .map(Vertex::a)
        .chain(indices.map(Vertex::b))
        .collect()
}

/// Time-step matching `G` over steps `0..time_steps`.
pub fn build_time_graph(time_steps: usize) -> Result<CouplingGraph> {
    if time_steps < 1 {
        return Err(Error::Input("time graph needs at least one time step".into()));
    }
    CouplingGraph::new(
        two_sided(0..time_steps),
        (0..time_steps).map(|t| (Vertex::a(t), Vertex::b(t))),
    )
}

/// Stage pairing `H` over stages `1..=m`.
pub fn build_stage_graph(m: usize) -> Result<CouplingGraph> {
    if m < 1 {
        return Err(Error::Input("stage graph needs at least one stage".into()));
    }
    CouplingGraph::new(two_sided(1..=m), (1..=m).map(|i| (Vertex::a(i), Vertex::b(i))))
}

/// Cross-layer cyclic shift `L` over stages `1..=m`.
pub fn build_cross_layer_graph(m: usize) -> Result<CouplingGraph> {
    if m < 2 {
        return Err(Error::Input(format!(
            "cross-layer graph needs at least 2 stages, got {m}"
        )));
    }
    CouplingGraph::new(
        two_sided(1..=m),
        (1..=m).map(|i| (Vertex::a(i), Vertex::b(i % m + 1))),
    )
}

pub fn graph_union(g1: &CouplingGraph, g2: &CouplingGraph) -> CouplingGraph {
    CouplingGraph {
        vertices: g1.vertices.union(&g2.vertices).copied().collect(),
        edges: g1.edges.union(&g2.edges).copied().collect(),
    }
}

/// Dense symmetric matrix with the vertex order of its source graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    pub vertices: Vec<Vertex>,
    pub matrix: Vec<Vec<f64>>,
}

impl LaplacianMatrix {
    /// Wraps an arbitrary square matrix (vertex labels are synthesised).
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Input("matrix is not square".into()));
        }
        Ok(Self {
            vertices: (0..n).map(Vertex::a).collect(),
            matrix,
        })
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn trace(&self) -> f64 {
        (0..self.len()).map(|i| self.matrix[i][i]).sum()
    }
}

/// `D − A` in the graph's vertex order.
pub fn laplacian(g: &CouplingGraph) -> Result<LaplacianMatrix> {
    if g.vertex_count() == 0 {
        return Err(Error::Input("graph has no vertices".into()));
    }
    let vertices: Vec<Vertex> = g.vertices().collect();
    let pos: BTreeMap<Vertex, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = vertices.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for (a, b) in g.edges() {
        let (i, j) = (pos[&a], pos[&b]);
        matrix[i][j] -= 1.0;
        matrix[j][i] -= 1.0;
        matrix[i][i] += 1.0;
        matrix[j][j] += 1.0;
    }
    Ok(LaplacianMatrix { vertices, matrix })
}

/// Off-diagonal Frobenius norm at which the Jacobi iteration stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

fn off_diagonal_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j] * a[i][j])
        .sum::<f64>()
        .sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(Error::Input("matrix is not square".into()));
    }
    for i in 0..n {
        for j in 0..i {
            let (x, y) = (matrix[i][j], matrix[j][i]);
            if (x - y).abs() > 1e-12 * (1.0 + x.abs().max(y.abs())) {
                return Err(Error::Input(format!(
                    "matrix is not symmetric at ({i}, {j}): {x} vs {y}"
                )));
            }
        }
    }
    let mut a = matrix.to_vec();
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= JACOBI_TOLERANCE {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                residual: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
        sweeps += 1;
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

pub fn spectrum(lap: &LaplacianMatrix) -> Result<Vec<f64>> {
    symmetric_eigenvalues(&lap.matrix)
}

/// Second-smallest Laplacian eigenvalue (rounding noise below zero clamped).
pub fn algebraic_connectivity(lap: &LaplacianMatrix) -> Result<f64> {
    if lap.len() < 2 {
        return Err(Error::Input("algebraic connectivity needs at least 2 vertices".into()));
    }
    Ok(spectrum(lap)?[1].max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn time_graph_is_a_perfect_matching() {
        let g = build_time_graph(10).unwrap();
        assert_eq!(g.vertex_count(), 20);
        assert_eq!(g.edge_count(), 10);
        assert!(g.vertices().all(|v| g.degree(v) == 1));
        assert_eq!(build_time_graph(1).unwrap().edge_count(), 1);
        assert!(build_time_graph(0).is_err());
    }

    #[test]
    fn stage_graph_structure() {
        let h = build_stage_graph(4).unwrap();
        assert_eq!((h.vertex_count(), h.edge_count()), (8, 4));
        assert!(h.vertices().all(|v| h.degree(v) == 1));
        assert_eq!(h.component_count(), 4);
        assert_eq!(build_stage_graph(1).unwrap().edge_count(), 1);
    }

    #[test]
    fn cross_layer_graph_shifts_cyclically() {
        let l = build_cross_layer_graph(4).unwrap();
        let edges: Vec<_> = l.edges().map(|(a, b)| (a.index, b.index)).collect();
        assert_eq!(edges, vec![(1, 2), (2, 3), (3, 4), (4, 1)]);
        let l2: Vec<_> = build_cross_layer_graph(2).unwrap().edges().map(|(a, b)| (a.index, b.index)).collect();
        assert_eq!(l2, vec![(1, 2), (2, 1)]);
        assert!(build_cross_layer_graph(1).is_err());
        for m in 2..=8 {
            let h = build_stage_graph(m).unwrap();
            let l = build_cross_layer_graph(m).unwrap();
            assert!(h.edges().all(|e| !l.edges().any(|f| f == e)));
        }
    }

    #[test]
    fn union_properties() {
        let h = build_stage_graph(4).unwrap();
        let l = build_cross_layer_graph(4).unwrap();
        let hl = graph_union(&h, &l);
        assert_eq!((hl.vertex_count(), hl.edge_count()), (8, 8));
        assert!(hl.vertices().all(|v| hl.degree(v) == 2));
        assert_eq!(hl.component_count(), 1);
        assert_eq!(graph_union(&h, &h), h);
        assert_eq!(graph_union(&h, &CouplingGraph::default()), h);
    }

    #[test]
    fn union_walks_the_expected_cycle() {
        let hl = graph_union(&build_stage_graph(4).unwrap(), &build_cross_layer_graph(4).unwrap());
        let cycle = [
            Vertex::a(1), Vertex::b(1), Vertex::a(4), Vertex::b(4),
            Vertex::a(3), Vertex::b(3), Vertex::a(2), Vertex::b(2),
        ];
        for i in 0..cycle.len() {
            let (u, v) = (cycle[i], cycle[(i + 1) % cycle.len()]);
            let e = if u.side == Side::A { (u, v) } else { (v, u) };
            assert!(hl.edges().any(|f| f == e), "missing {u}-{v}");
        }
    }

    #[test]
    fn graph_validation() {
        assert!(CouplingGraph::new([Vertex::a(0), Vertex::a(1)], [(Vertex::a(0), Vertex::a(1))]).is_err());
        assert!(CouplingGraph::new([Vertex::a(0)], [(Vertex::a(0), Vertex::b(0))]).is_err());
    }

    #[test]
    fn laplacian_basics() {
        let k2 = laplacian(&build_stage_graph(1).unwrap()).unwrap();
        assert_eq!(k2.matrix, vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert!((algebraic_connectivity(&k2).unwrap() - 2.0).abs() < 1e-12);

        let hl = graph_union(&build_stage_graph(4).unwrap(), &build_cross_layer_graph(4).unwrap());
        let lap = laplacian(&hl).unwrap();
        assert!(lap.matrix.iter().all(|row| row.iter().sum::<f64>() == 0.0));
        assert_eq!(lap.trace(), 2.0 * hl.edge_count() as f64);
        assert!(laplacian(&CouplingGraph::default()).is_err());
    }

    #[test]
    fn jacobi_matches_cycle_spectrum() {
        let hl = graph_union(&build_stage_graph(4).unwrap(), &build_cross_layer_graph(4).unwrap());
        let eig = spectrum(&laplacian(&hl).unwrap()).unwrap();
        let mut expected: Vec<f64> = (0..8).map(|k| 2.0 - 2.0 * (2.0 * PI * k as f64 / 8.0).cos()).collect();
        expected.sort_by(f64::total_cmp);
        for (got, want) in eig.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        let lambda2 = algebraic_connectivity(&laplacian(&hl).unwrap()).unwrap();
        assert!((lambda2 - (2.0 - 2f64.sqrt())).abs() < 1e-9);
        let h = laplacian(&build_stage_graph(4).unwrap()).unwrap();
        assert!(algebraic_connectivity(&h).unwrap().abs() < 1e-12);
    }

    #[test]
    fn jacobi_agrees_with_nalgebra() {
        let m = vec![
            vec![4.0, 1.0, -2.0, 0.5],
            vec![1.0, 3.0, 0.0, 1.5],
            vec![-2.0, 0.0, 5.0, -1.0],
            vec![0.5, 1.5, -1.0, 2.0],
        ];
        let ours = symmetric_eigenvalues(&m).unwrap();
        let dm = nalgebra::DMatrix::from_fn(4, 4, |i, j| m[i][j]);
        let mut theirs: Vec<f64> = dm.symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let lap = LaplacianMatrix::from_matrix(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(algebraic_connectivity(&lap), Err(Error::Input(_))));
        assert!(LaplacianMatrix::from_matrix(vec![vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn zero_multiplicity_counts_components() {
        for m in 1..=8 {
            let mut graphs = vec![build_stage_graph(m).unwrap()];
            if m >= 2 {
                graphs.push(build_cross_layer_graph(m).unwrap());
                graphs.push(graph_union(&graphs[0], &graphs[1]));
            }
            for g in graphs {
                let eig = spectrum(&laplacian(&g).unwrap()).unwrap();
                assert!(eig.iter().all(|&e| e >= -1e-10));
                assert!(eig[0] <= 1e-10);
                let zeros = eig.iter().filter(|e| e.abs() <= 1e-9).count();
                assert_eq!(zeros, g.component_count(), "m = {m}");
            }
        }
    }
}
