//! Deterministic approximation of Talagrand's γ₂ functional.
//!
//! [`gamma2_approx`] runs a multiscale recursion over maps `φ_j : X → ℝ₊`.
//! At scale `j` it builds a greedy `r^{j−1}/3`-net ordered by `φ_{j−2}`, then
//! sets `φ_j(x)` either to `φ_{j−1}(x)` (when the annulus
//! `B(g_j(x), 4r^j) \ B(g_j(x), r^{j−2}/16)` is empty) or to
//!
//! ```text
//! max( max_k [ r^j √ln k + min_{i≤k} φ_{j−2}(y_{ℓ_i}) ],  max_{z ∈ B(x, r^{j−1}/3)} φ_{j−1}(z) )
//! ```
//!
//! where `y_{ℓ_1}, …, y_{ℓ_h}` are the net points of `B(x, 2r^j)` in insertion
//! order. The result `φ_M(x₀)` is within constant factors of `γ₂(X, d)`.
//! The maximizers are kept so that a separated-tree lower-bound certificate
//! can be read back with [`extract_certificate`].

use std::sync::Arc;

use serde::Serialize;

use crate::error::{MetricError, Result};
use crate::network::Network;
use crate::resistance::ResistanceOracle;

pub const DEFAULT_R: u32 = 16;

/// Largest metric accepted by [`brute_force_gamma2`].
pub const BRUTE_FORCE_LIMIT: usize = 10;

const TRIANGLE_SLACK: f64 = 1e-9;

/// Finite metric given by a dense symmetric distance table. Zero distances
/// between distinct points are allowed and treated as duplicates.
#[derive(Debug, Clone)]
pub struct FiniteMetric {
    n: usize,
    d: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl FiniteMetric {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let n = rows.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(MetricError::NotSquare {
                    rows: n,
                    row,
                    len: r.len(),
                });
            }
        }
        let d: Vec<f64> = rows.into_iter().flatten().collect();
        let metric = FiniteMetric { n, d, labels: None };
        metric.validate()?;
        Ok(metric)
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, MetricError> {
        Self::new((0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect())
    }

    /// Resistance metric `d(x, y) = √R_eff(x, y)` of a network.
    pub fn from_network(net: &Network) -> Result<Self> {
        let oracle = ResistanceOracle::new(net)?;
        Self::from_oracle(&oracle)
    }

    pub fn from_oracle(oracle: &ResistanceOracle) -> Result<Self> {
        let r = oracle.resistance_matrix()?;
        let n = r.nrows();
        let d = (0..n * n)
            .map(|k| r[(k / n, k % n)].max(0.0).sqrt())
            .collect();
        let labels = oracle.network().labels().map(<[String]>::to_vec);
        Ok(FiniteMetric { n, d, labels })
    }

    /// Parses a dense distance table, one comma-separated row per line.
    pub fn from_csv(text: &str) -> Result<Self, MetricError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| MetricError::Csv(e.to_string()))?;
            let row = record
                .iter()
                .filter(|f| !f.is_empty())
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| MetricError::Csv(format!("'{f}': {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if !row.is_empty() {
                rows.push(row);
            }
        }
        Self::new(rows)
    }

    fn validate(&self) -> Result<(), MetricError> {
        let n = self.n;
        for i in 0..n {
            if self.dist(i, i) != 0.0 {
                return Err(MetricError::NonzeroDiagonal(i));
            }
            for j in 0..n {
                let v = self.dist(i, j);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(MetricError::InvalidDistance { i, j, value: v });
                }
                if v != self.dist(j, i) {
                    return Err(MetricError::Asymmetric { i, j });
                }
            }
        }
        let slack = TRIANGLE_SLACK * self.diameter().max(1.0);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.dist(i, k) > self.dist(i, j) + self.dist(j, k) + slack {
                        return Err(MetricError::Triangle { i, j, k });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().cloned().fold(0.0, f64::max)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// The metric `λ·d`.
    pub fn scaled(&self, lambda: f64) -> Self {
        FiniteMetric {
            n: self.n,
            d: self.d.iter().map(|v| v * lambda).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Lowest-index representative of every zero-distance class.
    fn representatives(&self) -> Vec<usize> {
        let mut reps: Vec<usize> = Vec::new();
        for i in 0..self.n {
            if reps.iter().all(|&r| self.dist(r, i) > 0.0) {
                reps.push(i);
            }
        }
        reps
    }
}

/// How `φ_j(x)` was obtained; the back-pointer used for certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    /// Empty annulus: `φ_j(x) = φ_{j−1}(x)`.
    Copy,
    /// `φ_j(x) = φ_{j−1}(z)` for a nearby `z`.
    Descend(usize),
    /// `φ_j(x) = r^j √ln k + min_{i≤k} φ_{j−2}(y_i)` over these net points.
    Branch(Vec<usize>),
}

/// One computed scale of the recursion. Point indices are original metric
/// indices.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleLevel {
    pub scale: i32,
    /// Net points in insertion order.
    pub net: Vec<usize>,
    /// `g_j(x)` for each representative point, in representative order.
    pub assignment: Vec<usize>,
    pub phi: Arc<Vec<f64>>,
    pub choice: Vec<Choice>,
}

/// The maps `φ_j` for every scale the recursion actually evaluated.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleMaps {
    pub r: u32,
    /// Top scale `M`.
    pub top_scale: i32,
    /// Factor `λ` with working distances `λ·d`.
    pub rescale: f64,
    /// Representative points (duplicates removed), original indices.
    pub points: Vec<usize>,
    pub levels: Vec<ScaleLevel>,
    /// Scales in `2..=M` skipped because no pair distance falls in
    /// `[r^{j−3}, r^{j+1}]`.
    pub skipped: Vec<i32>,
    pub diameter: f64,
}

impl ScaleMaps {
    fn position(&self, point: usize) -> Option<usize> {
        self.points.iter().position(|&p| p == point)
    }

    fn level(&self, scale: i32) -> Option<&ScaleLevel> {
        self.levels
            .binary_search_by_key(&scale, |l| l.scale)
            .ok()
            .map(|i| &self.levels[i])
    }

    /// `φ_j` in representative order; skipped scales repeat the last computed
    /// map and scales below 2 are identically zero.
    pub fn phi(&self, scale: i32) -> Vec<f64> {
        self.levels
            .iter()
            .rev()
            .find(|l| l.scale <= scale)
            .map(|l| l.phi.as_ref().clone())
            .unwrap_or_else(|| vec![0.0; self.points.len()])
    }

    /// `φ_M(x₀)` in working units.
    pub fn top_value(&self) -> f64 {
        self.phi(self.top_scale)[0]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Gamma2Estimate {
    /// `A(X, d)`, in the units of the input metric.
    pub value: f64,
    pub maps: ScaleMaps,
}

fn pow_r(r: f64, j: i32) -> f64 {
    r.powi(j)
}

/// Runs the multiscale recursion with base `r ≥ 16` from `x₀ = 0`.
///
/// Distances are rescaled by `λ = r^M / diam(X)` where `M ≥ 2` is the least
/// integer for which the smallest positive distance exceeds `r/3` after
/// rescaling. The working metric then satisfies `1 ≤ d ≤ r^M`, and the first
/// evaluated scale (`j = 2`, net radius `r/3`) already separates every pair
/// of points. Output is multiplied back by `1/λ`, so the result is
/// homogeneous of degree one in `d`.
pub fn gamma2_approx(metric: &FiniteMetric, r: u32) -> Result<Gamma2Estimate, MetricError> {
    if r < 16 {
        return Err(MetricError::InvalidR(r));
    }
    let rf = r as f64;
    let points = metric.representatives();
    let m = points.len();
    let diameter = metric.diameter();
    if m == 1 {
        return Ok(Gamma2Estimate {
            value: 0.0,
            maps: ScaleMaps {
                r,
                top_scale: 0,
                rescale: 1.0,
                points,
                levels: Vec::new(),
                skipped: Vec::new(),
                diameter,
            },
        });
    }

    let mut min_pos = f64::INFINITY;
    for a in 0..m {
        for b in a + 1..m {
            min_pos = min_pos.min(metric.dist(points[a], points[b]));
        }
    }
    let mut top = 2;
    while pow_r(rf, top) * min_pos / diameter <= rf / 3.0 {
        top += 1;
    }
    let lambda = pow_r(rf, top) / diameter;
    let d: Vec<f64> = (0..m * m)
        .map(|k| lambda * metric.dist(points[k / m], points[k % m]))
        .collect();
    let dist = |a: usize, b: usize| d[a * m + b];

    let mut pair_d: Vec<f64> = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            pair_d.push(dist(a, b));
        }
    }
    pair_d.sort_by(f64::total_cmp);
    // Slightly widened so that round-off can only cause extra evaluation,
    // never a wrong skip.
    let active = |j: i32| {
        let lo = pow_r(rf, j - 3) * (1.0 - 1e-9);
        let hi = pow_r(rf, j + 1) * (1.0 + 1e-9);
        let first = pair_d.partition_point(|&v| v < lo);
        first < pair_d.len() && pair_d[first] <= hi
    };

    let zeros = Arc::new(vec![0.0; m]);
    // phi_prev2 = φ_{j−2}, phi_prev1 = φ_{j−1}
    let mut phi_prev2 = zeros.clone();
    let mut phi_prev1 = zeros;
    let mut levels = Vec::new();
    let mut skipped = Vec::new();

    for j in 2..=top {
        if !active(j) {
            skipped.push(j);
            phi_prev2 = phi_prev1.clone();
            continue;
        }
        let net_radius = pow_r(rf, j - 1) / 3.0;
        let ball_radius = 2.0 * pow_r(rf, j);
        let annulus_outer = 4.0 * pow_r(rf, j);
        let annulus_inner = pow_r(rf, j - 2) / 16.0;
        let scale_weight = pow_r(rf, j);

        // Greedy net ordered by φ_{j−2}, ties to the lowest index.
        let mut covered = vec![false; m];
        let mut net: Vec<usize> = Vec::new();
        loop {
            let mut pick: Option<usize> = None;
            for y in 0..m {
                if !covered[y] && pick.is_none_or(|p| phi_prev2[y] > phi_prev2[p]) {
                    pick = Some(y);
                }
            }
            let Some(y) = pick else { break };
            net.push(y);
            for x in 0..m {
                if dist(x, y) <= net_radius {
                    covered[x] = true;
                }
            }
        }
        let assignment: Vec<usize> = (0..m)
            .map(|x| {
                *net.iter()
                    .find(|&&y| dist(x, y) <= net_radius)
                    .expect("net covers every point")
            })
            .collect();

        let mut phi = vec![0.0; m];
        let mut choice = Vec::with_capacity(m);
        for x in 0..m {
            let g = assignment[x];
            let annulus_empty = (0..m).all(|y| {
                let v = dist(g, y);
                v <= annulus_inner || v > annulus_outer
            });
            if annulus_empty {
                phi[x] = phi_prev1[x];
                choice.push(Choice::Copy);
                continue;
            }
            let mut branch_best = f64::NEG_INFINITY;
            let mut branch_k = 0;
            let mut running_min = f64::INFINITY;
            let mut ball = Vec::new();
            for &y in &net {
                if dist(x, y) <= ball_radius {
                    ball.push(y);
                    running_min = running_min.min(phi_prev2[y]);
                    let k = ball.len();
                    let v = scale_weight * (k as f64).ln().sqrt() + running_min;
                    if v > branch_best {
                        branch_best = v;
                        branch_k = k;
                    }
                }
            }
            let near = |z: &usize| dist(x, *z) <= net_radius;
            let descend_value = (0..m)
                .filter(near)
                .map(|z| phi_prev1[z])
                .fold(0.0, f64::max);
            let descend = (0..m)
                .filter(near)
                .find(|&z| phi_prev1[z] == descend_value)
                .expect("x lies in its own ball");
            if descend_value >= branch_best {
                phi[x] = descend_value;
                choice.push(Choice::Descend(points[descend]));
            } else {
                phi[x] = branch_best;
                ball.truncate(branch_k);
                choice.push(Choice::Branch(
                    ball.into_iter().map(|y| points[y]).collect(),
                ));
            }
        }
        let phi = Arc::new(phi);
        levels.push(ScaleLevel {
            scale: j,
            net: net.iter().map(|&y| points[y]).collect(),
            assignment: assignment.iter().map(|&y| points[y]).collect(),
            phi: phi.clone(),
            choice,
        });
        phi_prev2 = std::mem::replace(&mut phi_prev1, phi);
    }

    let top_value = phi_prev1[0];
    Ok(Gamma2Estimate {
        value: top_value / lambda,
        maps: ScaleMaps {
            r,
            top_scale: top,
            rescale: lambda,
            points,
            levels,
            skipped,
            diameter,
        },
    })
}

/// `A(V, √R_eff)` for a network.
pub fn gamma2_of_network(net: &Network, r: u32) -> Result<Gamma2Estimate> {
    let metric = FiniteMetric::from_network(net)?;
    Ok(gamma2_approx(&metric, r)?)
}

/// Exact `γ₂` for at most [`BRUTE_FORCE_LIMIT`] points.
///
/// With `M₂ = 16 ≥ n`, the level-2 partition may be all singletons, which
/// zeroes every term from `k = 2` on. The infimum therefore reduces to
/// `diam(X) + √2 · min_P max_{B ∈ P} diam(B)` over partitions `P` into at most
/// four blocks, which is enumerated exhaustively.
pub fn brute_force_gamma2(metric: &FiniteMetric) -> Result<f64, MetricError> {
    let n = metric.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(MetricError::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let diam = metric.diameter();
    let mut best = f64::INFINITY;
    for_each_partition(n, 4, &mut |blocks| {
        let worst = block_diameters(metric, blocks, n)
            .into_iter()
            .fold(0.0, f64::max);
        best = best.min(diam + std::f64::consts::SQRT_2 * worst);
    });
    Ok(best)
}

/// Diameter of each block of a restricted-growth labelling.
pub(crate) fn block_diameters(metric: &FiniteMetric, labels: &[usize], n: usize) -> Vec<f64> {
    let blocks = labels.iter().copied().max().map_or(0, |b| b + 1);
    let mut diam = vec![0.0f64; blocks];
    for a in 0..n {
        for b in a + 1..n {
            if labels[a] == labels[b] {
                let blk = labels[a];
                diam[blk] = diam[blk].max(metric.dist(a, b));
            }
        }
    }
    diam
}

/// Calls `f` with every set partition of `0..n` into at most `max_blocks`
/// blocks, encoded as a restricted-growth string.
pub(crate) fn for_each_partition(n: usize, max_blocks: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(
        i: usize,
        used: usize,
        n: usize,
        max: usize,
        labels: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if i == n {
            f(labels);
            return;
        }
        for b in 0..(used + 1).min(max) {
            labels[i] = b;
            rec(i + 1, used.max(b + 1), n, max, labels, f);
        }
    }
    let mut labels = vec![0; n];
    if n == 0 {
        f(&labels);
        return;
    }
    rec(0, 0, n, max_blocks, &mut labels, f);
}

/// Node of a separated-tree certificate.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateNode {
    pub point: usize,
    pub scale: i32,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Tree read back from the maximizers of the recursion, with every maximal
/// chain `(x, j), (x, j−1), …` contracted to one node labelled by the chain's
/// lowest scale.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateTree {
    pub r: u32,
    pub rescale: f64,
    pub nodes: Vec<CertificateNode>,
    /// `val_r` in the units of the input metric.
    pub value: f64,
}

impl CertificateTree {
    pub fn root(&self) -> &CertificateNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &CertificateNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    /// `Δ(v) = |children| + 1`.
    pub fn branching(&self, node: usize) -> usize {
        self.nodes[node].children.len() + 1
    }

    /// `min over leaves of Σ_{v on root path} r^{s(v)} √ln Δ(v)`, in
    /// input units.
    pub fn val_r(&self) -> f64 {
        let rf = self.r as f64;
        let weight = |i: usize| {
            pow_r(rf, self.nodes[i].scale) * (self.branching(i) as f64).ln().sqrt() / self.rescale
        };
        // Children always have larger indices, so one reverse sweep suffices.
        let mut best = vec![0.0; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let below = self.nodes[i]
                .children
                .iter()
                .map(|&c| best[c])
                .fold(f64::INFINITY, f64::min);
            best[i] = weight(i) + if below.is_finite() { below } else { 0.0 };
        }
        best[0]
    }
}

/// Reconstructs the certificate tree rooted at `(x₀, M)`.
pub fn extract_certificate(maps: &ScaleMaps) -> CertificateTree {
    let mut nodes: Vec<CertificateNode> = Vec::new();
    // Follows same-point chains down to the node's own scale, returning its
    // scale and the (point, scale) pairs of its children.
    let resolve = |point: usize, mut scale: i32| -> (i32, Vec<(usize, i32)>) {
        loop {
            if scale <= 1 {
                return (scale, Vec::new());
            }
            let Some(level) = maps.level(scale) else {
                scale -= 1;
                continue;
            };
            let pos = maps.position(point).expect("point is a representative");
            match &level.choice[pos] {
                Choice::Copy => scale -= 1,
                Choice::Descend(z) if *z == point => scale -= 1,
                Choice::Descend(z) => return (scale, vec![(*z, scale - 1)]),
                Choice::Branch(ys) => return (scale, ys.iter().map(|&y| (y, scale - 2)).collect()),
            }
        }
    };
    let root_point = maps.points[0];
    let mut queue = std::collections::VecDeque::from([(root_point, maps.top_scale, None::<usize>)]);
    while let Some((point, scale, parent)) = queue.pop_front() {
        let (own_scale, kids) = resolve(point, scale);
        let id = nodes.len();
        nodes.push(CertificateNode {
            point,
            scale: own_scale,
            parent,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        for (child, child_scale) in kids {
            queue.push_back((child, child_scale, Some(id)));
        }
    }
    let mut tree = CertificateTree {
        r: maps.r,
        rescale: maps.rescale,
        nodes,
        value: 0.0,
    };
    tree.value = tree.val_r();
    tree
}
