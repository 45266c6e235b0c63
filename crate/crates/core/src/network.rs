//! Finite electrical networks.
//!
//! A [`Network`] is a connected, undirected graph whose edges carry strictly
//! positive conductances. It doubles as the reversible Markov chain that jumps
//! from `x` to `y` with probability `c_xy / c_x`. Vertices are dense integers
//! `0..n`; optional string labels ride along for reporting.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::NetworkError;

pub type VertexId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub c: f64,
}

#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    edges: Vec<Edge>,
    // CSR adjacency: neighbours of x live in offsets[x]..offsets[x + 1].
    offsets: Vec<usize>,
    neighbors: Vec<VertexId>,
    neighbor_c: Vec<f64>,
    vertex_c: Vec<f64>,
    total: f64,
    labels: Option<Vec<String>>,
}

impl Network {
    /// Builds a network on `0..=max id` from an edge list.
    ///
    /// Repeated `(u, v)` pairs (in either orientation) are merged by summing
    /// their conductances.
    pub fn from_edges<I>(edges: I) -> Result<Self, NetworkError>
    where
        I: IntoIterator<Item = (VertexId, VertexId, f64)>,
    {
        let edges: Vec<_> = edges.into_iter().collect();
        let n = edges
            .iter()
            .map(|&(u, v, _)| u.max(v) + 1)
            .max()
            .unwrap_or(0);
        Self::with_vertex_count(n, edges)
    }

    /// Builds a network on exactly `n` vertices. Every vertex must end up
    /// incident to an edge, otherwise the network is disconnected.
    pub fn with_vertex_count<I>(n: usize, edges: I) -> Result<Self, NetworkError>
    where
        I: IntoIterator<Item = (VertexId, VertexId, f64)>,
    {
        let mut merged: BTreeMap<(VertexId, VertexId), f64> = BTreeMap::new();
        for (u, v, c) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(NetworkError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(NetworkError::SelfLoop(u));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(NetworkError::NonPositiveConductance { u, v, c });
            }
            *merged.entry((u.min(v), u.max(v))).or_insert(0.0) += c;
        }
        if merged.is_empty() {
            return Err(NetworkError::Empty);
        }
        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((u, v), c)| Edge { u, v, c })
            .collect();
        Self::from_merged(n, edges, None)
    }

    fn from_merged(
        n: usize,
        edges: Vec<Edge>,
        labels: Option<Vec<String>>,
    ) -> Result<Self, NetworkError> {
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for x in 0..n {
            offsets[x + 1] = offsets[x] + degree[x];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0; offsets[n]];
        let mut neighbor_c = vec![0.0; offsets[n]];
        let mut vertex_c = vec![0.0; n];
        for e in &edges {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                neighbors[fill[a]] = b;
                neighbor_c[fill[a]] = e.c;
                fill[a] += 1;
                vertex_c[a] += e.c;
            }
        }
        let total = vertex_c.iter().sum();
        let net = Network {
            n,
            edges,
            offsets,
            neighbors,
            neighbor_c,
            vertex_c,
            total,
            labels,
        };
        let components = net.component_count();
        if components != 1 {
            return Err(NetworkError::Disconnected(components));
        }
        Ok(net)
    }

    fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for root in 0..self.n {
            if seen[root] {
                continue;
            }
            count += 1;
            seen[root] = true;
            queue.push_back(root);
            while let Some(x) = queue.pop_front() {
                for (y, _) in self.neighbors(x) {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        count
    }

    /// Attaches display labels, one per vertex.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, NetworkError> {
        if labels.len() != self.n {
            return Err(NetworkError::InvalidParam(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `c_x`, the sum of conductances incident to `x`.
    pub fn conductance(&self, x: VertexId) -> f64 {
        self.vertex_c[x]
    }

    pub fn vertex_conductances(&self) -> &[f64] {
        &self.vertex_c
    }

    /// Total conductance `Σ_x c_x`, twice the summed edge conductance.
    pub fn total_conductance(&self) -> f64 {
        self.total
    }

    /// Stationary probability `c_x / 𝒞` of the walk.
    pub fn stationary(&self, x: VertexId) -> f64 {
        self.vertex_c[x] / self.total
    }

    pub fn neighbors(&self, x: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        let range = self.offsets[x]..self.offsets[x + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.neighbor_c[range].iter().copied())
    }

    /// Neighbour ids and edge conductances of `x` as parallel slices.
    pub fn neighbor_slices(&self, x: VertexId) -> (&[VertexId], &[f64]) {
        let range = self.offsets[x]..self.offsets[x + 1];
        (&self.neighbors[range.clone()], &self.neighbor_c[range])
    }

    pub fn degree(&self, x: VertexId) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    /// Conductance of the edge `{x, y}`, zero when absent.
    pub fn edge_conductance(&self, x: VertexId, y: VertexId) -> f64 {
        self.neighbors(x)
            .find(|&(z, _)| z == y)
            .map_or(0.0, |(_, c)| c)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, x: VertexId) -> String {
        match &self.labels {
            Some(labels) => labels[x].clone(),
            None => x.to_string(),
        }
    }

    /// Vertex with the largest `c_x` (lowest index on ties).
    pub fn max_conductance_vertex(&self) -> VertexId {
        let mut best = 0;
        for x in 1..self.n {
            if self.vertex_c[x] > self.vertex_c[best] {
                best = x;
            }
        }
        best
    }

    /// Dense Laplacian. The combinatorial form is `D - A`; the normalized
    /// form divides it by `tr(D) = 𝒞`.
    pub fn laplacian(&self, normalized: bool) -> DMatrix<f64> {
        let scale = if normalized { 1.0 / self.total } else { 1.0 };
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            let c = e.c * scale;
            l[(e.u, e.v)] -= c;
            l[(e.v, e.u)] -= c;
            l[(e.u, e.u)] += c;
            l[(e.v, e.v)] += c;
        }
        l
    }

    /// Applies the combinatorial Laplacian to `f` without forming the matrix.
    pub fn laplacian_apply(&self, f: &[f64], out: &mut [f64]) {
        for x in 0..self.n {
            let mut acc = self.vertex_c[x] * f[x];
            for (y, c) in self.neighbors(x) {
                acc -= c * f[y];
            }
            out[x] = acc;
        }
    }

    /// Glues the vertex set `glued` into a single vertex.
    ///
    /// Surviving vertices keep their relative order and the glued vertex is
    /// appended last. Edges inside the set disappear; edges into it merge.
    pub fn quotient(&self, glued: &[VertexId]) -> Result<QuotientNetwork, NetworkError> {
        let mut in_set = vec![false; self.n];
        for &s in glued {
            if s >= self.n {
                return Err(NetworkError::VertexOutOfRange {
                    vertex: s,
                    n: self.n,
                });
            }
            in_set[s] = true;
        }
        let size = in_set.iter().filter(|&&b| b).count();
        if size == 0 {
            return Err(NetworkError::EmptySet);
        }
        if size == self.n {
            return Err(NetworkError::FullSet);
        }
        let glued_vertex = self.n - size;
        let mut relabel = vec![glued_vertex; self.n];
        let mut next = 0;
        for x in 0..self.n {
            if !in_set[x] {
                relabel[x] = next;
                next += 1;
            }
        }
        let edges = self.edges.iter().filter_map(|e| {
            let (a, b) = (relabel[e.u], relabel[e.v]);
            (a != b).then_some((a, b, e.c))
        });
        let mut network = Network::with_vertex_count(glued_vertex + 1, edges)?;
        if let Some(labels) = &self.labels {
            let mut out = vec![String::new(); glued_vertex + 1];
            let mut glued_names = Vec::new();
            for x in 0..self.n {
                if in_set[x] {
                    glued_names.push(labels[x].as_str());
                } else {
                    out[relabel[x]] = labels[x].clone();
                }
            }
            out[glued_vertex] = glued_names.join("+");
            network.labels = Some(out);
        }
        let mut members: Vec<_> = (0..self.n).filter(|&x| in_set[x]).collect();
        members.sort_unstable();
        Ok(QuotientNetwork {
            network,
            glued: members,
            glued_vertex,
            relabel,
        })
    }

    /// Eliminates vertex `x` by the star-mesh transform: every pair of
    /// neighbours `y, z` gains conductance `c_xy c_xz / c_x`.
    ///
    /// The transform also produces a self-loop of weight `c_xy² / c_x` at each
    /// neighbour. Networks carry no self-loops, so those weights are returned
    /// separately in [`ReducedNetwork::self_loops`]; they do not affect any
    /// effective resistance.
    pub fn star_mesh_reduce(&self, x: VertexId) -> Result<ReducedNetwork, NetworkError> {
        if self.n < 3 {
            return Err(NetworkError::TooSmall {
                needed: 3,
                have: self.n,
            });
        }
        if x >= self.n {
            return Err(NetworkError::VertexOutOfRange {
                vertex: x,
                n: self.n,
            });
        }
        if self.degree(x) == 0 {
            return Err(NetworkError::Isolated(x));
        }
        let relabel: Vec<Option<VertexId>> = (0..self.n)
            .map(|y| match y.cmp(&x) {
                std::cmp::Ordering::Less => Some(y),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(y - 1),
            })
            .collect();
        let cx = self.vertex_c[x];
        let star: Vec<(VertexId, f64)> = self.neighbors(x).collect();
        let mut edges: Vec<(VertexId, VertexId, f64)> = self
            .edges
            .iter()
            .filter(|e| e.u != x && e.v != x)
            .map(|e| (relabel[e.u].unwrap(), relabel[e.v].unwrap(), e.c))
            .collect();
        for (i, &(y, cy)) in star.iter().enumerate() {
            for &(z, cz) in &star[i + 1..] {
                edges.push((relabel[y].unwrap(), relabel[z].unwrap(), cy * cz / cx));
            }
        }
        let network = Network::with_vertex_count(self.n - 1, edges)?;
        let mut self_loops = vec![0.0; self.n - 1];
        for &(y, cy) in &star {
            self_loops[relabel[y].unwrap()] = cy * cy / cx;
        }
        let network = match &self.labels {
            Some(labels) => {
                let kept = (0..self.n).filter(|&y| y != x).map(|y| labels[y].clone());
                network.with_labels(kept.collect())?
            }
            None => network,
        };
        Ok(ReducedNetwork {
            network,
            eliminated: x,
            relabel,
            self_loops,
        })
    }
}

/// The network `G/S` obtained by gluing a vertex set into one vertex.
#[derive(Debug, Clone)]
pub struct QuotientNetwork {
    pub network: Network,
    /// Sorted members of the glued set, in base-network ids.
    pub glued: Vec<VertexId>,
    /// Id of the glued vertex in `network` (always the last vertex).
    pub glued_vertex: VertexId,
    /// Base id → quotient id; members of the set map to `glued_vertex`.
    pub relabel: Vec<VertexId>,
}

/// Result of eliminating one vertex with the star-mesh transform.
#[derive(Debug, Clone)]
pub struct ReducedNetwork {
    pub network: Network,
    pub eliminated: VertexId,
    /// Base id → reduced id (`None` for the eliminated vertex).
    pub relabel: Vec<Option<VertexId>>,
    /// Self-loop conductance dropped at each surviving vertex.
    pub self_loops: Vec<f64>,
}

impl ReducedNetwork {
    /// Conductance of a survivor including its self-loop; equals the base
    /// network's `c_v`.
    pub fn vertex_conductance(&self, v: VertexId) -> f64 {
        self.network.conductance(v) + self.self_loops[v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Network {
        Network::from_edges([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn triangle_conductances() {
        let net = triangle();
        assert_eq!(net.n(), 3);
        assert_eq!(net.edge_count(), 3);
        assert!(net.vertex_conductances().iter().all(|&c| c == 2.0));
        assert_eq!(net.total_conductance(), 6.0);
    }

    #[test]
    fn path_conductances() {
        let net = Network::from_edges([(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(net.conductance(0), 1.0);
        assert_eq!(net.conductance(1), 2.0);
        assert_eq!(net.conductance(2), 1.0);
        assert_eq!(net.total_conductance(), 4.0);
    }

    #[test]
    fn duplicate_edges_merge() {
        let net = Network::from_edges([(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.edges()[0].c, 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            Network::from_edges([(0, 1, 1.0), (2, 2, 1.0)]).unwrap_err(),
            NetworkError::SelfLoop(2)
        );
        assert!(matches!(
            Network::from_edges([(0, 1, 0.0)]).unwrap_err(),
            NetworkError::NonPositiveConductance { u: 0, v: 1, .. }
        ));
        assert_eq!(
            Network::from_edges([(0, 1, 1.0), (2, 3, 1.0)]).unwrap_err(),
            NetworkError::Disconnected(2)
        );
        assert_eq!(
            Network::from_edges(std::iter::empty()).unwrap_err(),
            NetworkError::Empty
        );
        assert_eq!(
            Network::with_vertex_count(3, [(0, 1, 1.0)]).unwrap_err(),
            NetworkError::Disconnected(2)
        );
    }

    #[test]
    fn laplacians_of_unit_edge() {
        let net = Network::from_edges([(0, 1, 1.0)]).unwrap();
        let l = net.laplacian(false);
        assert_eq!(l.as_slice(), &[1.0, -1.0, -1.0, 1.0]);
        let ln = net.laplacian(true);
        assert_eq!(ln.as_slice(), &[0.5, -0.5, -0.5, 0.5]);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let net = triangle();
        let l = net.laplacian(false);
        for i in 0..3 {
            assert!(l.row(i).sum().abs() <= 1e-12 * net.total_conductance());
        }
    }

    #[test]
    fn quotient_of_path_endpoints() {
        let net = Network::from_edges([(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let q = net.quotient(&[0, 2]).unwrap();
        assert_eq!(q.network.n(), 2);
        assert_eq!(q.glued_vertex, 1);
        assert_eq!(q.relabel, vec![1, 0, 1]);
        assert_eq!(q.network.edge_conductance(0, 1), 2.0);
    }

    #[test]
    fn quotient_drops_internal_edges() {
        let q = triangle().quotient(&[0, 1]).unwrap();
        assert_eq!(q.network.n(), 2);
        assert_eq!(q.network.edge_count(), 1);
        assert_eq!(q.network.edge_conductance(q.glued_vertex, 0), 2.0);
    }

    #[test]
    fn singleton_quotient_is_relabel() {
        let k4 = Network::from_edges(
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)].map(|(u, v)| (u, v, 1.0)),
        )
        .unwrap();
        let q = k4.quotient(&[0]).unwrap();
        assert_eq!(q.network.n(), 4);
        assert_eq!(q.network.edge_count(), 6);
        for e in k4.edges() {
            assert_eq!(
                q.network.edge_conductance(q.relabel[e.u], q.relabel[e.v]),
                e.c
            );
        }
    }

    #[test]
    fn quotient_errors() {
        let net = triangle();
        assert_eq!(net.quotient(&[]).unwrap_err(), NetworkError::EmptySet);
        assert_eq!(net.quotient(&[0, 1, 2]).unwrap_err(), NetworkError::FullSet);
    }

    #[test]
    fn star_mesh_on_path() {
        let net = Network::from_edges([(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let red = net.star_mesh_reduce(1).unwrap();
        assert_eq!(red.network.n(), 2);
        assert_eq!(red.network.edge_conductance(0, 1), 0.5);
        for v in 0..2 {
            assert_eq!(red.vertex_conductance(v), 1.0);
        }
    }

    #[test]
    fn star_mesh_on_star() {
        let net = Network::from_edges([(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap();
        let red = net.star_mesh_reduce(0).unwrap();
        assert_eq!(red.network.edge_count(), 3);
        for e in red.network.edges() {
            assert!((e.c - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(
            Network::from_edges([(0, 1, 1.0)])
                .unwrap()
                .star_mesh_reduce(0)
                .unwrap_err(),
            NetworkError::TooSmall { needed: 3, have: 2 }
        );
    }

    #[test]
    fn labels_follow_quotient() {
        let net = triangle()
            .with_labels(vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let q = net.quotient(&[0, 2]).unwrap();
        assert_eq!(q.network.labels().unwrap(), ["b", "a+c"]);
    }
}
