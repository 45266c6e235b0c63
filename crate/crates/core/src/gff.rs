//! Gaussian free field sampling, Monte Carlo estimates of its supremum, the
//! pseudoinverse-root process and the randomized resistance sketch.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{NumericalError, Result};
use crate::montecarlo::{par_blocks, stream, MeanEstimate};
use crate::network::{Network, VertexId};
use crate::resistance::ResistanceOracle;

/// Draws per RNG stream in the blocked samplers.
const BLOCK: usize = 256;

/// Largest network for which the pseudoinverse is formed by eigendecomposition.
pub const PSEUDOROOT_LIMIT: usize = 2000;

/// Monte Carlo estimate of `E max_v η_v`.
#[derive(Debug, Clone, Serialize)]
pub struct SupEstimate {
    pub mean: f64,
    /// `min(sample sd, σ) / √samples`.
    pub stderr: f64,
    /// Raw `sample sd / √samples`.
    pub sample_stderr: f64,
    pub samples: usize,
    /// `σ = max_x √Var(η_x)`.
    pub sigma: f64,
}

impl SupEstimate {
    /// Gaussian concentration bound `P(|sup − E sup| > α) ≤ 2 exp(−α²/2σ²)`.
    pub fn concentration_bound(&self, alpha: f64) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        (2.0 * (-alpha * alpha / (2.0 * self.sigma * self.sigma)).exp()).min(1.0)
    }
}

/// Monte Carlo statistics of `‖X‖_∞` for a centred Gaussian vector `X`.
#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate {
    /// `E ‖X‖²_∞`.
    pub sq_mean: f64,
    pub sq_stderr: f64,
    /// `E ‖X‖_∞`.
    pub abs_mean: f64,
    pub abs_stderr: f64,
    /// `E max_i X_i`, the signed maximum.
    pub max_mean: f64,
    pub samples: usize,
}

impl NormEstimate {
    fn from_draws(sq: &[f64], abs: &[f64], max: &[f64]) -> Self {
        let sq_est = MeanEstimate::from_samples(sq);
        let abs_est = MeanEstimate::from_samples(abs);
        NormEstimate {
            sq_mean: sq_est.mean,
            sq_stderr: sq_est.stderr,
            abs_mean: abs_est.mean,
            abs_stderr: abs_est.stderr,
            max_mean: MeanEstimate::from_samples(max).mean,
            samples: sq.len(),
        }
    }
}

/// Sampler for the free field pinned at the oracle's ground vertex.
///
/// With `Δ̃ = L Lᵀ`, the field on the non-ground vertices is `L⁻ᵀ z` for a
/// standard Gaussian `z`, whose covariance is `L⁻ᵀ L⁻¹ = Γ_{v0}`.
pub struct GffSampler<'a> {
    oracle: &'a ResistanceOracle,
    // Upper-triangular L⁻ᵀ.
    root: DMatrix<f64>,
    sigma: f64,
}

impl<'a> GffSampler<'a> {
    pub fn new(oracle: &'a ResistanceOracle) -> Result<Self> {
        let l = oracle
            .cholesky_factor()
            .ok_or(NumericalError::DenseRequired {
                n: oracle.network().n(),
                limit: crate::resistance::DENSE_LIMIT,
            })?;
        let m = l.nrows();
        let mut root = DMatrix::identity(m, m);
        if !l.tr_solve_lower_triangular_mut(&mut root) {
            return Err(NumericalError::FactorizationFailure {
                condition: f64::INFINITY,
            }
            .into());
        }
        let sigma = root
            .row_iter()
            .map(|row| row.norm_squared())
            .fold(0.0, f64::max)
            .sqrt();
        Ok(GffSampler {
            oracle,
            root,
            sigma,
        })
    }

    pub fn oracle(&self) -> &ResistanceOracle {
        self.oracle
    }

    /// `max_x √Γ(x, x)`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Draws `count` fields as columns of an `(n − 1) × count` matrix in
    /// the oracle's grounded row order.
    fn draw_block<R: Rng>(&self, rng: &mut R, count: usize) -> DMatrix<f64> {
        let m = self.root.nrows();
        let z = DMatrix::from_fn(m, count, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.root * z
    }

    /// One full-length draw with `η[ground] = 0`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let col = self.draw_block(rng, 1);
        let mut eta = vec![0.0; self.oracle.network().n()];
        for (row, &v) in self.oracle.grounded_vertices().iter().enumerate() {
            eta[v] = col[(row, 0)];
        }
        eta
    }

    /// `count` full-length draws, reproducible from `seed`.
    pub fn samples(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let n = self.oracle.network().n();
        let verts = self.oracle.grounded_vertices();
        par_blocks(count, BLOCK, |b, range| {
            let block = self.draw_block(&mut stream(seed, b), range.len());
            (0..range.len())
                .map(|j| {
                    let mut eta = vec![0.0; n];
                    for (row, &v) in verts.iter().enumerate() {
                        eta[v] = block[(row, j)];
                    }
                    eta
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// `max_v η_v` for each of `count` draws (the ground contributes 0).
    pub fn sup_samples(&self, count: usize, seed: u64) -> Vec<f64> {
        par_blocks(count, BLOCK, |b, range| {
            let block = self.draw_block(&mut stream(seed, b), range.len());
            block
                .column_iter()
                .map(|col| col.iter().cloned().fold(0.0, f64::max))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    pub fn estimate_sup(&self, count: usize, seed: u64) -> SupEstimate {
        let sups = self.sup_samples(count.max(2), seed);
        let est = MeanEstimate::from_samples(&sups);
        let root_n = (est.samples as f64).sqrt();
        SupEstimate {
            mean: est.mean,
            stderr: est.sd().min(self.sigma) / root_n,
            sample_stderr: est.stderr,
            samples: est.samples,
            sigma: self.sigma,
        }
    }
}

/// Sampler for `√(L_G⁺) g` with `L_G = (D − A)/tr(D)`.
pub struct PseudorootSampler {
    root: DMatrix<f64>,
}

impl PseudorootSampler {
    pub fn new(net: &Network) -> Result<Self> {
        let n = net.n();
        if n > PSEUDOROOT_LIMIT {
            return Err(NumericalError::DenseRequired {
                n,
                limit: PSEUDOROOT_LIMIT,
            }
            .into());
        }
        let eig = SymmetricEigen::new(net.laplacian(true));
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let inv_sqrt = eig.eigenvalues.map(|l| {
            if l > 1e-10 * top {
                l.sqrt().recip()
            } else {
                0.0
            }
        });
        let u = &eig.eigenvectors;
        let root = u * DMatrix::from_diagonal(&inv_sqrt) * u.transpose();
        Ok(PseudorootSampler { root })
    }

    /// `√(L_G⁺)`, symmetric.
    pub fn root(&self) -> &DMatrix<f64> {
        &self.root
    }

    /// `L_G⁺ = √(L_G⁺)²`.
    pub fn pseudoinverse(&self) -> DMatrix<f64> {
        &self.root * &self.root
    }

    fn draw_block<R: Rng>(&self, rng: &mut R, count: usize) -> DMatrix<f64> {
        let n = self.root.nrows();
        let g = DMatrix::from_fn(n, count, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.root * g
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.draw_block(rng, 1).column(0).iter().copied().collect()
    }

    pub fn samples(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        par_blocks(count, BLOCK, |b, range| {
            let block = self.draw_block(&mut stream(seed, b), range.len());
            block
                .column_iter()
                .map(|c| c.iter().copied().collect::<Vec<_>>())
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// Monte Carlo `E ‖√(L_G⁺) g‖²_∞` and companions.
    pub fn estimate(&self, count: usize, seed: u64) -> NormEstimate {
        norm_estimate(count, seed, |rng, k| self.draw_block(rng, k))
    }
}

fn norm_estimate<F>(count: usize, seed: u64, draw: F) -> NormEstimate
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, usize) -> DMatrix<f64> + Sync,
{
    let per_block = par_blocks(count.max(2), BLOCK, |b, range| {
        let block = draw(&mut stream(seed, b), range.len());
        block
            .column_iter()
            .map(|col| {
                let abs = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (abs * abs, abs, max)
            })
            .collect::<Vec<_>>()
    });
    let flat: Vec<(f64, f64, f64)> = per_block.into_iter().flatten().collect();
    let sq: Vec<f64> = flat.iter().map(|t| t.0).collect();
    let abs: Vec<f64> = flat.iter().map(|t| t.1).collect();
    let max: Vec<f64> = flat.iter().map(|t| t.2).collect();
    NormEstimate::from_draws(&sq, &abs, &max)
}

/// How a sketch was checked against exact commute times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCheck {
    AllPairs,
    /// Check this many random pairs.
    Sampled(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct SketchConfig {
    /// Rows of the projection; `None` means `⌈24 ln n⌉`.
    pub rows: Option<usize>,
    pub check: PairCheck,
    /// Tightens the acceptance window to `[(1 + slack)κ, (2 − slack)κ]`.
    pub slack: f64,
    /// Fresh projections tried before the row count grows by half.
    pub attempts_per_size: usize,
    pub max_growths: usize,
}

impl Default for SketchConfig {
    fn default() -> Self {
        SketchConfig {
            rows: None,
            check: PairCheck::AllPairs,
            slack: 0.0,
            attempts_per_size: 8,
            max_growths: 6,
        }
    }
}

/// `k × n` matrix `Z` whose column differences approximate commute times:
/// `κ(i, j) ≤ ‖Z(e_i − e_j)‖² ≤ 2κ(i, j)`.
#[derive(Debug, Clone)]
pub struct ResistanceSketch {
    pub z: DMatrix<f64>,
    pub validated: bool,
    pub check: PairCheck,
    pub attempts: usize,
    /// Extremes of `‖Z(e_i − e_j)‖² / κ(i, j)` over the checked pairs.
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl ResistanceSketch {
    pub fn rows(&self) -> usize {
        self.z.nrows()
    }

    pub fn pair_norm_sq(&self, i: VertexId, j: VertexId) -> f64 {
        (self.z.column(i) - self.z.column(j)).norm_squared()
    }

    /// Monte Carlo `E ‖Zᵀ g‖²_∞` for a `k`-dimensional standard Gaussian `g`.
    pub fn sup_estimate(&self, count: usize, seed: u64) -> NormEstimate {
        let zt = self.z.transpose();
        norm_estimate(count, seed, |rng, k| {
            let g = DMatrix::from_fn(zt.ncols(), k, |_, _| rng.sample::<f64, _>(StandardNormal));
            &zt * g
        })
    }
}

pub fn default_sketch_rows(n: usize) -> usize {
    ((24.0 * (n as f64).ln()).ceil() as usize).max(1)
}

/// Builds `Z = √(4𝒞/3) · Q √W B Δ⁺` and validates it against exact commute
/// times, redrawing `Q` (and eventually growing it) until every checked pair
/// lands inside `[κ, 2κ]`.
///
/// `Q` has `±1/√k` entries, so `‖Q √W B Δ⁺ (e_i − e_j)‖²` concentrates around
/// `R_eff(i, j)`; the `4/3` factor centres the `[3/4, 3/2]` distortion band
/// on the target window.
pub fn build_sketch(
    oracle: &ResistanceOracle,
    config: &SketchConfig,
    seed: u64,
) -> Result<ResistanceSketch> {
    let net = oracle.network();
    let n = net.n();
    let resist = oracle.resistance_matrix()?;
    let total = net.total_conductance();
    let scale = (4.0 * total / 3.0).sqrt();
    let lo = 1.0 + config.slack;
    let hi = 2.0 - config.slack;

    let pairs: Vec<(VertexId, VertexId)> = match config.check {
        PairCheck::AllPairs => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect(),
        PairCheck::Sampled(count) => {
            let mut rng = stream(seed, u64::MAX);
            (0..count)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    let mut j = rng.random_range(0..n - 1);
                    if j >= i {
                        j += 1;
                    }
                    (i.min(j), i.max(j))
                })
                .collect()
        }
    };

    let mut rows = config.rows.unwrap_or_else(|| default_sketch_rows(n));
    let mut attempts = 0;
    let mut worst = 0.0f64;
    for _ in 0..=config.max_growths {
        for _ in 0..config.attempts_per_size {
            let mut rng = stream(seed, attempts as u64);
            attempts += 1;
            let z = sketch_matrix(oracle, rows, &mut rng)? * scale;
            let (mut min_ratio, mut max_ratio) = (f64::INFINITY, 0.0f64);
            for &(i, j) in &pairs {
                let kappa = total * resist[(i, j)];
                let ratio = (z.column(i) - z.column(j)).norm_squared() / kappa;
                min_ratio = min_ratio.min(ratio);
                max_ratio = max_ratio.max(ratio);
            }
            if min_ratio >= lo && max_ratio <= hi {
                return Ok(ResistanceSketch {
                    z,
                    validated: true,
                    check: config.check,
                    attempts,
                    min_ratio,
                    max_ratio,
                });
            }
            let miss = if min_ratio < lo { min_ratio } else { max_ratio };
            if (miss - 1.5).abs() > (worst - 1.5).abs() || worst == 0.0 {
                worst = miss;
            }
        }
        rows = (rows * 3).div_ceil(2);
    }
    Err(NumericalError::SketchValidationFailed {
        attempts,
        worst_ratio: worst,
    }
    .into())
}

/// Unscaled `Q √W B Δ⁺`: each row of `Q √W B` has zero sum, so `Δ⁺` applied
/// to it is the grounded solution shifted to mean zero.
fn sketch_matrix<R: Rng>(
    oracle: &ResistanceOracle,
    rows: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let net = oracle.network();
    let n = net.n();
    let entry = 1.0 / (rows as f64).sqrt();
    let mut m = DMatrix::zeros(rows, n);
    for e in net.edges() {
        let w = e.c.sqrt();
        for r in 0..rows {
            let q = if rng.random::<bool>() { entry } else { -entry };
            m[(r, e.u)] += q * w;
            m[(r, e.v)] -= q * w;
        }
    }
    let mut z = DMatrix::zeros(rows, n);
    for r in 0..rows {
        let b: Vec<f64> = m.row(r).iter().copied().collect();
        let x = oracle.solve(&b)?;
        let mean = x.iter().sum::<f64>() / n as f64;
        for (col, v) in x.iter().enumerate() {
            z[(r, col)] = v - mean;
        }
    }
    Ok(z)
}

/// `L²` distance from `η_w` to the affine hull of `{η_u : u ∈ S}`.
///
/// The field is grounded at the first member of `S`, which makes the affine
/// hull a linear span; the squared distance is the Schur complement
/// `Γ_ww − bᵀ G⁻¹ b` with `G = Γ[S′, S′]`, `b = Γ[S′, w]`.
pub fn affine_hull_distance(net: &Network, w: VertexId, set: &[VertexId]) -> Result<f64> {
    let ground = *set.first().ok_or(crate::error::NetworkError::EmptySet)?;
    if set.contains(&w) {
        return Ok(0.0);
    }
    let oracle = ResistanceOracle::with_ground(net, ground)?;
    let rest: Vec<VertexId> = set.iter().copied().filter(|&u| u != ground).collect();
    let gww = oracle.green_entry(w, w)?;
    if rest.is_empty() {
        return Ok(gww.sqrt());
    }
    let k = rest.len();
    let mut g = DMatrix::zeros(k, k);
    let mut b = nalgebra::DVector::zeros(k);
    for (i, &u) in rest.iter().enumerate() {
        b[i] = oracle.green_entry(u, w)?;
        for (j, &v) in rest.iter().enumerate() {
            g[(i, j)] = oracle.green_entry(u, v)?;
        }
    }
    let chol = nalgebra::Cholesky::new(g).ok_or(NumericalError::FactorizationFailure {
        condition: f64::INFINITY,
    })?;
    let coef = chol.solve(&b);
    Ok((gww - b.dot(&coef)).max(0.0).sqrt())
}
