//! Exact electrical quantities from a grounded-Laplacian factorization.
//!
//! Removing the row and column of a ground vertex `v0` from the combinatorial
//! Laplacian leaves a symmetric positive definite matrix `Δ̃`. Its inverse is
//! the Green kernel `Γ_{v0}` of the walk killed at `v0`, which is also the
//! covariance of the Gaussian free field pinned at `v0`. Every resistance,
//! commute time and escape probability below is read off that kernel.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::error::{NetworkError, NumericalError, Result};
use crate::network::{Network, VertexId};

/// Above this many vertices the grounded system is solved by conjugate
/// gradients instead of a dense Cholesky factor.
pub const DENSE_LIMIT: usize = 4000;

const CG_TOLERANCE: f64 = 1e-10;

enum Backend {
    Dense(Cholesky<f64, Dyn>),
    Iterative { inv_diag: Vec<f64> },
}

/// `Δ̃ x = b` for the Laplacian grounded at one vertex.
pub(crate) struct GroundedSystem {
    ground: VertexId,
    // vertex -> row of Δ̃ (ground maps to usize::MAX)
    row_of: Vec<usize>,
    row_vertex: Vec<VertexId>,
    backend: Backend,
    jittered: bool,
}

impl GroundedSystem {
    pub(crate) fn new(net: &Network, ground: VertexId, dense_limit: usize) -> Result<Self> {
        let n = net.n();
        let mut row_of = vec![usize::MAX; n];
        let row_vertex: Vec<VertexId> = (0..n).filter(|&x| x != ground).collect();
        for (row, &x) in row_vertex.iter().enumerate() {
            row_of[x] = row;
        }
        if n > dense_limit {
            let inv_diag = row_vertex
                .iter()
                .map(|&x| 1.0 / net.conductance(x))
                .collect();
            return Ok(GroundedSystem {
                ground,
                row_of,
                row_vertex,
                backend: Backend::Iterative { inv_diag },
                jittered: false,
            });
        }
        let m = n - 1;
        let mut a = DMatrix::zeros(m, m);
        for (row, &x) in row_vertex.iter().enumerate() {
            a[(row, row)] = net.conductance(x);
            for (y, c) in net.neighbors(x) {
                if y != ground {
                    a[(row, row_of[y])] -= c;
                }
            }
        }
        let (chol, jittered) = match Cholesky::new(a.clone()) {
            Some(chol) => (chol, false),
            None => {
                let jitter = 1e-12 * a.trace();
                let condition = diagonal_spread(&a);
                for i in 0..m {
                    a[(i, i)] += jitter;
                }
                let chol =
                    Cholesky::new(a).ok_or(NumericalError::FactorizationFailure { condition })?;
                (chol, true)
            }
        };
        Ok(GroundedSystem {
            ground,
            row_of,
            row_vertex,
            backend: Backend::Dense(chol),
            jittered,
        })
    }

    fn dim(&self) -> usize {
        self.row_vertex.len()
    }

    fn restrict(&self, b: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.row_vertex.iter().map(|&x| b[x]))
    }

    fn extend(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.row_of.len()];
        for (row, &v) in self.row_vertex.iter().enumerate() {
            out[v] = x[row];
        }
        out
    }

    /// Solves with the ground entry of `b` ignored; the ground entry of the
    /// returned full-length vector is zero.
    pub(crate) fn solve(&self, net: &Network, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = self.restrict(b);
        let x = match &self.backend {
            Backend::Dense(chol) => chol.solve(&rhs),
            Backend::Iterative { inv_diag } => self.conjugate_gradient(net, &rhs, inv_diag)?,
        };
        Ok(self.extend(&x))
    }

    fn apply(&self, net: &Network, x: &DVector<f64>, out: &mut DVector<f64>) {
        for (row, &v) in self.row_vertex.iter().enumerate() {
            let mut acc = net.conductance(v) * x[row];
            for (y, c) in net.neighbors(v) {
                if y != self.ground {
                    acc -= c * x[self.row_of[y]];
                }
            }
            out[row] = acc;
        }
    }

    fn conjugate_gradient(
        &self,
        net: &Network,
        b: &DVector<f64>,
        inv_diag: &[f64],
    ) -> Result<DVector<f64>> {
        let m = self.dim();
        let b_norm = b.norm();
        let mut x = DVector::zeros(m);
        if b_norm == 0.0 {
            return Ok(x);
        }
        let mut r = b.clone();
        let mut z = DVector::from_iterator(m, r.iter().zip(inv_diag).map(|(r, d)| r * d));
        let mut p = z.clone();
        let mut ap = DVector::zeros(m);
        let mut rz = r.dot(&z);
        let max_iter = 20 * m + 100;
        for _ in 0..max_iter {
            self.apply(net, &p, &mut ap);
            let alpha = rz / p.dot(&ap);
            x.axpy(alpha, &p, 1.0);
            r.axpy(-alpha, &ap, 1.0);
            if r.norm() <= CG_TOLERANCE * b_norm {
                return Ok(x);
            }
            for i in 0..m {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = r.dot(&z);
            p *= rz_next / rz;
            p += &z;
            rz = rz_next;
        }
        Err(NumericalError::NoConvergence {
            iterations: max_iter,
            residual: r.norm() / b_norm,
        }
        .into())
    }
}

fn diagonal_spread(a: &DMatrix<f64>) -> f64 {
    let diag = a.diagonal();
    let max = diag.iter().cloned().fold(f64::MIN, f64::max);
    let min = diag.iter().cloned().fold(f64::MAX, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Green kernel, effective resistances and commute times of one network.
pub struct ResistanceOracle {
    net: Network,
    system: GroundedSystem,
    green: OnceLock<DMatrix<f64>>,
}

impl ResistanceOracle {
    /// Grounds at the vertex of largest conductance.
    pub fn new(net: &Network) -> Result<Self> {
        Self::with_ground(net, net.max_conductance_vertex())
    }

    pub fn with_ground(net: &Network, ground: VertexId) -> Result<Self> {
        Self::with_options(net, ground, DENSE_LIMIT)
    }

    pub fn with_options(net: &Network, ground: VertexId, dense_limit: usize) -> Result<Self> {
        if ground >= net.n() {
            return Err(crate::error::NetworkError::VertexOutOfRange {
                vertex: ground,
                n: net.n(),
            }
            .into());
        }
        Ok(ResistanceOracle {
            net: net.clone(),
            system: GroundedSystem::new(net, ground, dense_limit)?,
            green: OnceLock::new(),
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn ground(&self) -> VertexId {
        self.system.ground
    }

    /// True when the factorization only succeeded after diagonal jitter.
    pub fn jittered(&self) -> bool {
        self.system.jittered
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.system.backend, Backend::Dense(_))
    }

    /// Lower Cholesky factor `L` of `Δ̃ = L Lᵀ` (dense backend only).
    pub fn cholesky_factor(&self) -> Option<DMatrix<f64>> {
        match &self.system.backend {
            Backend::Dense(chol) => Some(chol.l()),
            Backend::Iterative { .. } => None,
        }
    }

    /// Non-ground vertices in the row order of `Δ̃` and [`Self::green`].
    pub fn grounded_vertices(&self) -> &[VertexId] {
        &self.system.row_vertex
    }

    /// Solves `Δ̃ x = b` and returns the full-length potential with
    /// `x[ground] = 0`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.system.solve(&self.net, b)
    }

    /// Dense `Γ_{v0} = Δ̃⁻¹`, computed once on first use.
    pub fn green(&self) -> Result<&DMatrix<f64>> {
        if let Some(g) = self.green.get() {
            return Ok(g);
        }
        let g = match &self.system.backend {
            Backend::Dense(chol) => chol.inverse(),
            Backend::Iterative { .. } => {
                return Err(NumericalError::DenseRequired {
                    n: self.net.n(),
                    limit: DENSE_LIMIT,
                }
                .into())
            }
        };
        Ok(self.green.get_or_init(|| g))
    }

    /// `Γ_{v0}(x, y)` with the convention `Γ(v0, ·) = 0`.
    pub fn green_entry(&self, x: VertexId, y: VertexId) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        let (rx, ry) = (self.system.row_of[x], self.system.row_of[y]);
        if rx == usize::MAX || ry == usize::MAX {
            return Ok(0.0);
        }
        Ok(self.green()?[(rx, ry)])
    }

    fn check(&self, v: VertexId) -> Result<()> {
        let n = self.net.n();
        if v >= n {
            return Err(NetworkError::VertexOutOfRange { vertex: v, n }.into());
        }
        Ok(())
    }

    pub fn r_eff(&self, x: VertexId, y: VertexId) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        if x == y {
            return Ok(0.0);
        }
        if let Some(g) = self.green.get() {
            let row = &self.system.row_of;
            let at = |a: usize, b: usize| {
                if row[a] == usize::MAX || row[b] == usize::MAX {
                    0.0
                } else {
                    g[(row[a], row[b])]
                }
            };
            return Ok(at(x, x) + at(y, y) - 2.0 * at(x, y));
        }
        let mut b = vec![0.0; self.net.n()];
        b[x] += 1.0;
        b[y] -= 1.0;
        let phi = self.solve(&b)?;
        Ok(phi[x] - phi[y])
    }

    /// Commute time `κ(x, y) = 𝒞 · R_eff(x, y)`.
    pub fn commute(&self, x: VertexId, y: VertexId) -> Result<f64> {
        Ok(self.net.total_conductance() * self.r_eff(x, y)?)
    }

    /// All pairwise effective resistances as an `n × n` matrix.
    pub fn resistance_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.net.n();
        let mut diag = vec![0.0; n];
        for x in 0..n {
            diag[x] = self.green_entry(x, x)?;
        }
        let mut r = DMatrix::zeros(n, n);
        for x in 0..n {
            for y in x + 1..n {
                let v = diag[x] + diag[y] - 2.0 * self.green_entry(x, y)?;
                r[(x, y)] = v;
                r[(y, x)] = v;
            }
        }
        Ok(r)
    }

    /// Resistance diameter `max_{x,y} √R_eff(x, y)`.
    pub fn resistance_diameter(&self) -> Result<f64> {
        let r = self.resistance_matrix()?;
        Ok(r.iter().cloned().fold(0.0, f64::max).sqrt())
    }

    /// `P_v(walk from v hits u before returning to v) = 1 / (c_v R_eff(u, v))`.
    pub fn escape_probability(&self, v: VertexId, u: VertexId) -> Result<f64> {
        let r = self.r_eff(u, v)?;
        Ok(1.0 / (self.net.conductance(v) * r))
    }

    /// Effective conductance, the reciprocal of `R_eff`.
    pub fn c_eff(&self, x: VertexId, y: VertexId) -> Result<f64> {
        Ok(1.0 / self.r_eff(x, y)?)
    }
}

/// `R_eff(v, S)`: resistance from `v` to the vertex obtained by gluing `S`.
pub fn r_eff_set(net: &Network, v: VertexId, set: &[VertexId]) -> Result<f64> {
    if set.contains(&v) {
        return Ok(0.0);
    }
    let q = net.quotient(set)?;
    let oracle = ResistanceOracle::with_ground(&q.network, q.glued_vertex)?;
    oracle.r_eff(q.relabel[v], q.glued_vertex)
}

/// Resistance between two disjoint vertex sets, each glued to a point.
pub fn r_eff_between(net: &Network, a: &[VertexId], b: &[VertexId]) -> Result<f64> {
    let qa = net.quotient(a)?;
    let mapped: Vec<VertexId> = b.iter().map(|&x| qa.relabel[x]).collect();
    r_eff_set(&qa.network, qa.glued_vertex, &mapped)
}

/// `Σ_edges c_uv R_eff(u, v) − (n − 1)`, which vanishes on every connected
/// network.
pub fn foster_residual(net: &Network) -> Result<f64> {
    let oracle = ResistanceOracle::new(net)?;
    let mut sum = 0.0;
    for e in net.edges() {
        sum += e.c * oracle.r_eff(e.u, e.v)?;
    }
    Ok(sum - (net.n() as f64 - 1.0))
}

/// Expected discrete hitting times, one grounded solve per target.
#[derive(Debug, Clone)]
pub struct HittingTimeTable {
    /// `h[(u, v)]` is the expected number of steps from `u` to `v`.
    pub h: DMatrix<f64>,
}

impl HittingTimeTable {
    /// For each target `v` solves `c_x H(x) − Σ_y c_xy H(y) = c_x` for `x ≠ v`,
    /// i.e. the first-step equations multiplied through by `c_x`.
    pub fn compute(net: &Network) -> Result<Self> {
        let n = net.n();
        let rhs = net.vertex_conductances().to_vec();
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|v| GroundedSystem::new(net, v, DENSE_LIMIT)?.solve(net, &rhs))
            .collect::<Result<_>>()?;
        let h = DMatrix::from_fn(n, n, |u, v| columns[v][u]);
        Ok(HittingTimeTable { h })
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn get(&self, u: VertexId, v: VertexId) -> f64 {
        self.h[(u, v)]
    }

    /// `t_hit = max_{u,v} H(u, v)`.
    pub fn t_hit(&self) -> f64 {
        self.h.iter().cloned().fold(0.0, f64::max)
    }

    /// Vertex whose farthest target is farthest away in hitting time
    /// (lowest index on ties).
    pub fn eccentric_vertex(&self) -> VertexId {
        let ecc = |u: usize| self.h.row(u).iter().cloned().fold(0.0, f64::max);
        let mut best = 0;
        for u in 1..self.n() {
            if ecc(u) > ecc(best) {
                best = u;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{random_connected, Family};

    fn path3() -> Network {
        Family::Path(3).generate().unwrap()
    }

    /// Gauss-Jordan inverse, independent of the Cholesky route.
    fn brute_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = a.len();
        let mut aug: Vec<Vec<f64>> = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..m).map(|j| if i == j { 1.0 } else { 0.0 }));
                r
            })
            .collect();
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
                .unwrap();
            aug.swap(col, piv);
            let p = aug[col][col];
            for v in aug[col].iter_mut() {
                *v /= p;
            }
            for row in 0..m {
                if row != col {
                    let f = aug[row][col];
                    let pivot_row = aug[col].clone();
                    for (v, pv) in aug[row].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        aug.into_iter().map(|r| r[m..].to_vec()).collect()
    }

    #[test]
    fn green_of_single_edge() {
        let net = Family::Path(2).generate().unwrap();
        let oracle = ResistanceOracle::with_ground(&net, 0).unwrap();
        assert_eq!(oracle.green().unwrap().as_slice(), &[1.0]);
    }

    #[test]
    fn green_of_path_matches_brute_inverse() {
        let oracle = ResistanceOracle::with_ground(&path3(), 0).unwrap();
        let expected = brute_inverse(&[vec![2.0, -1.0], vec![-1.0, 1.0]]);
        assert_eq!(expected, vec![vec![1.0, 1.0], vec![1.0, 2.0]]);
        let g = oracle.green().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[(i, j)] - expected[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn green_of_triangle_diagonal() {
        let net = Family::Complete(3).generate().unwrap();
        let oracle = ResistanceOracle::with_ground(&net, 0).unwrap();
        let expected = brute_inverse(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let g = oracle.green().unwrap();
        for i in 0..2 {
            assert!((expected[i][i] - 2.0 / 3.0).abs() < 1e-12);
            assert!((g[(i, i)] - 2.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn series_and_parallel_resistances() {
        let oracle = ResistanceOracle::new(&path3()).unwrap();
        assert!((oracle.r_eff(0, 2).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(oracle.r_eff(1, 1).unwrap(), 0.0);
        let double = Network::from_edges([(0, 1, 1.0), (0, 1, 1.0)]).unwrap();
        let oracle = ResistanceOracle::new(&double).unwrap();
        assert!((oracle.r_eff(0, 1).unwrap() - 0.5).abs() < 1e-12);
        for n in [3, 5, 9] {
            let k = Family::Complete(n).generate().unwrap();
            let oracle = ResistanceOracle::new(&k).unwrap();
            assert!((oracle.r_eff(0, n - 1).unwrap() - 2.0 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn commute_times() {
        let k3 = Family::Complete(3).generate().unwrap();
        let oracle = ResistanceOracle::new(&k3).unwrap();
        assert!((oracle.commute(0, 1).unwrap() - 4.0).abs() < 1e-12);
        let oracle = ResistanceOracle::new(&path3()).unwrap();
        assert!((oracle.commute(0, 2).unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(oracle.commute(2, 2).unwrap(), 0.0);
    }

    #[test]
    fn green_identity_with_resistances() {
        let net = random_connected(12, 0.3, 4).unwrap();
        let oracle = ResistanceOracle::with_ground(&net, 3).unwrap();
        for x in 0..12 {
            for y in 0..12 {
                let lhs = oracle.green_entry(x, y).unwrap();
                let rhs = 0.5
                    * (oracle.r_eff(x, 3).unwrap() + oracle.r_eff(3, y).unwrap()
                        - oracle.r_eff(x, y).unwrap());
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn set_resistances() {
        let net = path3();
        assert!((r_eff_set(&net, 1, &[0, 2]).unwrap() - 0.5).abs() < 1e-12);
        // Star with leaves glued: each leaf edge is a parallel branch.
        let star = Network::from_edges([(0, 1, 2.0), (0, 2, 3.0), (0, 3, 5.0)]).unwrap();
        assert!((r_eff_set(&star, 0, &[1, 2, 3]).unwrap() - 0.1).abs() < 1e-12);
        assert!(r_eff_set(&net, 1, &[]).is_err());
    }

    #[test]
    fn hitting_time_examples() {
        let edge = Family::Path(2).generate().unwrap();
        assert!((HittingTimeTable::compute(&edge).unwrap().get(0, 1) - 1.0).abs() < 1e-12);
        let k3 = Family::Complete(3).generate().unwrap();
        let table = HittingTimeTable::compute(&k3).unwrap();
        assert!((table.get(0, 2) - 2.0).abs() < 1e-12);
        assert_eq!(table.get(1, 1), 0.0);
        let c4 = Family::Cycle(4).generate().unwrap();
        let table = HittingTimeTable::compute(&c4).unwrap();
        assert!((table.get(0, 2) - 4.0).abs() < 1e-12);
        assert!((table.get(0, 1) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn foster_on_trees_and_complete() {
        let tree = Family::BaryTree { b: 3, h: 3 }.generate().unwrap();
        assert!(foster_residual(&tree).unwrap().abs() < 1e-9);
        let k5 = Family::Complete(5).generate().unwrap();
        assert!(foster_residual(&k5).unwrap().abs() < 1e-12);
        let er = Family::ErdosRenyi {
            n: 20,
            p: 0.3,
            seed: 1,
        }
        .generate()
        .unwrap();
        assert!(foster_residual(&er).unwrap().abs() < 1e-8);
    }

    #[test]
    fn escape_probabilities() {
        let edge = Family::Path(2).generate().unwrap();
        let oracle = ResistanceOracle::new(&edge).unwrap();
        assert!((oracle.escape_probability(0, 1).unwrap() - 1.0).abs() < 1e-12);
        let oracle = ResistanceOracle::new(&path3()).unwrap();
        assert!((oracle.escape_probability(0, 2).unwrap() - 0.5).abs() < 1e-12);
        let k3 = Family::Complete(3).generate().unwrap();
        let oracle = ResistanceOracle::new(&k3).unwrap();
        assert!((oracle.escape_probability(0, 1).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn iterative_backend_agrees_with_dense() {
        let net = random_connected(40, 0.1, 11).unwrap();
        let dense = ResistanceOracle::with_options(&net, 0, DENSE_LIMIT).unwrap();
        let cg = ResistanceOracle::with_options(&net, 0, 10).unwrap();
        assert!(!cg.is_dense());
        for (x, y) in [(1, 2), (5, 39), (0, 17)] {
            let (a, b) = (dense.r_eff(x, y).unwrap(), cg.r_eff(x, y).unwrap());
            assert!((a - b).abs() <= 1e-8 * a);
        }
        assert!(cg.green().is_err());
    }

    #[test]
    fn default_ground_is_max_conductance() {
        let star = Network::from_edges([(0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(ResistanceOracle::new(&star).unwrap().ground(), 3);
    }
}
