//! Cover-time estimators assembled into a single report.
//!
//! Every estimate below targets the cover time up to a universal constant:
//! `𝒞 (E sup η)²` from the free field, `𝒞 A²` from the γ₂ approximation of
//! the resistance metric, `E ‖√(L⁺) g‖²_∞` from the normalized Laplacian
//! pseudoinverse and `E ‖Zᵀ g‖²_∞` from a resistance sketch. Matthews bounds
//! and direct simulation bracket them.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::gamma2::{gamma2_of_network, DEFAULT_R};
use crate::generators::Family;
use crate::gff::{build_sketch, GffSampler, PseudorootSampler, SketchConfig};
use crate::montecarlo::{sub_seed, MeanEstimate, DEFAULT_SEED};
use crate::network::{Network, VertexId};
use crate::resistance::{HittingTimeTable, ResistanceOracle};
use crate::walk::{estimate_blanket_time, estimate_cover_time};

/// Report format version.
pub const SCHEMA_VERSION: u32 = 1;

/// `t_hit · (1 + ln n)`.
pub fn matthews_upper(table: &HittingTimeTable) -> f64 {
    table.t_hit() * (1.0 + (table.n() as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatthewsLower {
    pub value: f64,
    /// Threshold `α` attaining the value.
    pub threshold: f64,
    /// Vertex set whose pairwise hitting times all exceed `α`.
    pub set: Vec<VertexId>,
}

/// Greedy lower bound `max_S min_{u≠v∈S} H(u, v) · ln(|S| − 1)`.
///
/// From every seed vertex the set grows farthest-first under
/// `m(u, v) = min(H(u, v), H(v, u))`. Each prefix of that order is the
/// greedy set for the threshold equal to its smallest insertion distance,
/// so scanning the prefixes covers every threshold.
pub fn matthews_lower(table: &HittingTimeTable) -> MatthewsLower {
    let n = table.n();
    let m = |u: usize, v: usize| table.get(u, v).min(table.get(v, u));
    let mut best = MatthewsLower {
        value: 0.0,
        threshold: 0.0,
        set: Vec::new(),
    };
    for seed in 0..n {
        let mut set = vec![seed];
        let mut reach: Vec<f64> = (0..n).map(|v| m(seed, v)).collect();
        let mut in_set = vec![false; n];
        in_set[seed] = true;
        let mut alpha = f64::INFINITY;
        while set.len() < n {
            let mut next = None;
            for v in 0..n {
                if !in_set[v] && next.is_none_or(|w: usize| reach[v] > reach[w]) {
                    next = Some(v);
                }
            }
            let v = next.expect("unvisited vertex remains");
            alpha = alpha.min(reach[v]);
            set.push(v);
            in_set[v] = true;
            for w in 0..n {
                reach[w] = reach[w].min(m(v, w));
            }
            if set.len() >= 3 {
                let value = alpha * ((set.len() - 1) as f64).ln();
                if value > best.value {
                    best = MatthewsLower {
                        value,
                        threshold: alpha,
                        set: set.clone(),
                    };
                }
            }
        }
    }
    best
}

/// Which estimators to run and with what Monte Carlo budgets.
#[derive(Debug, Clone, Serialize)]
pub struct ReportConfig {
    pub seed: u64,
    pub sup_samples: usize,
    pub cover_reps: usize,
    pub gaussian: bool,
    pub gamma2: bool,
    pub pseudoroot: bool,
    pub sketch: bool,
    pub matthews: bool,
    pub simulate: bool,
    /// Also simulate blanket times at this fraction.
    pub blanket_delta: Option<f64>,
    pub r: u32,
    /// Constant in the tight upper bound.
    pub tight_c: f64,
    pub sketch_config: SketchConfig,
    /// Record wall-clock durations. Off by default so that equal seeds give
    /// byte-identical reports.
    pub timings: bool,
    pub name: Option<String>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            seed: DEFAULT_SEED,
            sup_samples: 2000,
            cover_reps: 200,
            gaussian: true,
            gamma2: true,
            pseudoroot: true,
            sketch: true,
            matthews: true,
            simulate: true,
            blanket_delta: None,
            r: DEFAULT_R,
            tight_c: 1.0,
            sketch_config: SketchConfig::default(),
            timings: false,
            name: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub name: Option<String>,
    pub n: usize,
    pub edges: usize,
    pub total_conductance: f64,
    /// `max √R_eff(x, y)`.
    pub resistance_diameter: Option<f64>,
    pub t_hit: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianEstimate {
    /// `𝒞 (Ê sup η)²`.
    pub value: f64,
    pub sup_mean: f64,
    pub sup_stderr: f64,
    pub sigma: f64,
    pub ground: VertexId,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Gamma2Summary {
    /// `𝒞 A²`.
    pub value: f64,
    pub a: f64,
    pub r: u32,
    pub scales_evaluated: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormSummary {
    /// `Ê ‖X‖²_∞`.
    pub value: f64,
    pub stderr: f64,
    /// `(Ê ‖X‖_∞)²`.
    pub squared_mean: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SketchSummary {
    pub value: f64,
    pub stderr: f64,
    pub squared_mean: f64,
    pub rows: usize,
    pub attempts: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulatedSummary {
    pub start: VertexId,
    pub cover: MeanEstimate,
    pub cover_and_return: MeanEstimate,
    pub cover_continuous: MeanEstimate,
    /// `τ↺/2 ≤ τ_cov ≤ τ↺` within 3 standard errors.
    pub sandwich_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlanketSummary {
    pub delta: f64,
    pub weak: MeanEstimate,
    pub strong: MeanEstimate,
    pub cover: MeanEstimate,
    pub ordered: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TightUpper {
    /// `(1 + C √(t_hit / t̂_cov)) · (𝒞/2) · (Ê sup η)²`.
    pub value: f64,
    pub c: f64,
    /// Which cover-time figure stood in for `t̂_cov`.
    pub cover_source: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Estimates {
    pub gaussian: Option<GaussianEstimate>,
    pub gamma2: Option<Gamma2Summary>,
    pub pseudoroot: Option<NormSummary>,
    pub sketch: Option<SketchSummary>,
    pub matthews_upper: Option<f64>,
    pub matthews_lower: Option<MatthewsLower>,
    pub simulated: Option<SimulatedSummary>,
    pub blanket: Option<BlanketSummary>,
    pub tight_upper: Option<TightUpper>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverTimeReport {
    pub schema: u32,
    pub graph: GraphSummary,
    pub estimates: Estimates,
    /// Pairwise ratios keyed `"a/b"`.
    pub ratios: BTreeMap<String, f64>,
    pub seeds: BTreeMap<String, u64>,
    pub durations_ms: BTreeMap<String, u64>,
    /// Some selected estimator failed; see `warnings`.
    pub partial: bool,
    pub warnings: Vec<String>,
}

impl CoverTimeReport {
    /// The headline estimates that all target `t_cov` up to constants.
    pub fn headline(&self) -> Vec<(&'static str, f64)> {
        let e = &self.estimates;
        let mut out = Vec::new();
        if let Some(g) = &e.gaussian {
            out.push(("gaussian", g.value));
        }
        if let Some(g) = &e.gamma2 {
            out.push(("gamma2", g.value));
        }
        if let Some(p) = &e.pseudoroot {
            out.push(("pseudoroot", p.value));
        }
        if let Some(s) = &e.sketch {
            out.push(("sketch", s.value));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Timer {
    on: bool,
    out: BTreeMap<String, u64>,
}

impl Timer {
    fn run<T>(&mut self, key: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let value = f();
        if self.on {
            self.out
                .insert(key.to_string(), start.elapsed().as_millis() as u64);
        }
        value
    }
}

/// Runs every selected estimator. Failures of individual estimators are
/// recorded as warnings and flag the report as partial; only an invalid
/// network or a failing resistance oracle abort the whole report.
pub fn full_report(net: &Network, config: &ReportConfig) -> Result<CoverTimeReport> {
    let mut timer = Timer {
        on: config.timings,
        out: BTreeMap::new(),
    };
    let mut warnings = Vec::new();
    let mut seeds = BTreeMap::new();
    let mut est = Estimates::default();
    let total = net.total_conductance();

    let oracle = timer.run("oracle", || ResistanceOracle::new(net))?;
    let diameter = match oracle.resistance_diameter() {
        Ok(d) => Some(d),
        Err(e) => {
            warnings.push(format!("resistance diameter: {e}"));
            None
        }
    };

    let table = if config.matthews || config.simulate {
        match timer.run("hitting", || HittingTimeTable::compute(net)) {
            Ok(t) => Some(t),
            Err(e) => {
                warnings.push(format!("hitting times: {e}"));
                None
            }
        }
    } else {
        None
    };

    if config.gaussian {
        let seed = sub_seed(config.seed, 1);
        seeds.insert("gaussian".into(), seed);
        let res = timer.run("gaussian", || -> Result<GaussianEstimate> {
            let sampler = GffSampler::new(&oracle)?;
            let sup = sampler.estimate_sup(config.sup_samples, seed);
            Ok(GaussianEstimate {
                value: total * sup.mean * sup.mean,
                sup_mean: sup.mean,
                sup_stderr: sup.stderr,
                sigma: sup.sigma,
                ground: oracle.ground(),
                samples: sup.samples,
            })
        });
        match res {
            Ok(g) => est.gaussian = Some(g),
            Err(e) => warnings.push(format!("gaussian: {e}")),
        }
    }

    if config.gamma2 {
        match timer.run("gamma2", || gamma2_of_network(net, config.r)) {
            Ok(g) => {
                est.gamma2 = Some(Gamma2Summary {
                    value: total * g.value * g.value,
                    a: g.value,
                    r: config.r,
                    scales_evaluated: g.maps.levels.len(),
                })
            }
            Err(e) => warnings.push(format!("gamma2: {e}")),
        }
    }

    if config.pseudoroot {
        let seed = sub_seed(config.seed, 2);
        seeds.insert("pseudoroot".into(), seed);
        let res = timer.run("pseudoroot", || -> Result<NormSummary> {
            let s = PseudorootSampler::new(net)?.estimate(config.sup_samples, seed);
            Ok(NormSummary {
                value: s.sq_mean,
                stderr: s.sq_stderr,
                squared_mean: s.abs_mean * s.abs_mean,
                samples: s.samples,
            })
        });
        match res {
            Ok(p) => est.pseudoroot = Some(p),
            Err(e) => warnings.push(format!("pseudoroot: {e}")),
        }
    }

    if config.sketch {
        let seed = sub_seed(config.seed, 3);
        let sup_seed = sub_seed(config.seed, 4);
        seeds.insert("sketch".into(), seed);
        seeds.insert("sketch_sup".into(), sup_seed);
        let res = timer.run("sketch", || -> Result<SketchSummary> {
            let sk = build_sketch(&oracle, &config.sketch_config, seed)?;
            let s = sk.sup_estimate(config.sup_samples, sup_seed);
            Ok(SketchSummary {
                value: s.sq_mean,
                stderr: s.sq_stderr,
                squared_mean: s.abs_mean * s.abs_mean,
                rows: sk.rows(),
                attempts: sk.attempts,
                min_ratio: sk.min_ratio,
                max_ratio: sk.max_ratio,
            })
        });
        match res {
            Ok(s) => est.sketch = Some(s),
            Err(e) => warnings.push(format!("sketch: {e}")),
        }
    }

    if config.matthews {
        if let Some(t) = &table {
            let upper = matthews_upper(t);
            let lower = matthews_lower(t);
            if lower.value > upper {
                warnings.push(format!(
                    "matthews lower bound {} exceeds upper bound {upper}",
                    lower.value
                ));
            }
            est.matthews_upper = Some(upper);
            est.matthews_lower = Some(lower);
        }
    }

    let start = table.as_ref().map_or(0, HittingTimeTable::eccentric_vertex);
    if config.simulate {
        let seed = sub_seed(config.seed, 5);
        seeds.insert("simulation".into(), seed);
        match timer.run("simulation", || {
            estimate_cover_time(net, start, config.cover_reps, seed)
        }) {
            Ok(c) => {
                est.simulated = Some(SimulatedSummary {
                    start,
                    cover: c.cover,
                    cover_and_return: c.cover_and_return,
                    cover_continuous: c.cover_continuous,
                    sandwich_holds: c.sandwich.holds,
                })
            }
            Err(e) => warnings.push(format!("simulation: {e}")),
        }
    }

    if let Some(delta) = config.blanket_delta {
        let seed = sub_seed(config.seed, 6);
        seeds.insert("blanket".into(), seed);
        let reps = config.cover_reps.max(2);
        match timer.run("blanket", || {
            estimate_blanket_time(net, start, delta, reps, seed)
        }) {
            Ok(b) => {
                est.blanket = Some(BlanketSummary {
                    delta,
                    weak: b.weak,
                    strong: b.strong,
                    cover: b.cover,
                    ordered: b.ordered,
                })
            }
            Err(e) => warnings.push(format!("blanket: {e}")),
        }
    }

    if let (Some(g), Some(t)) = (&est.gaussian, &table) {
        let (cover, source) = match &est.simulated {
            Some(s) => (s.cover.mean, "simulated"),
            None => (g.value, "gaussian"),
        };
        if cover > 0.0 {
            est.tight_upper = Some(TightUpper {
                value: (1.0 + config.tight_c * (t.t_hit() / cover).sqrt())
                    * (total / 2.0)
                    * g.sup_mean
                    * g.sup_mean,
                c: config.tight_c,
                cover_source: source.into(),
            });
        }
    }

    let mut ratios = BTreeMap::new();
    let mut headline: Vec<(&str, f64)> = Vec::new();
    if let Some(s) = &est.simulated {
        headline.push(("simulated_return", s.cover_and_return.mean));
        headline.push(("simulated", s.cover.mean));
    }
    for (name, value) in [
        ("gaussian", est.gaussian.as_ref().map(|g| g.value)),
        ("gamma2", est.gamma2.as_ref().map(|g| g.value)),
        ("pseudoroot", est.pseudoroot.as_ref().map(|p| p.value)),
        ("sketch", est.sketch.as_ref().map(|s| s.value)),
    ] {
        if let Some(v) = value {
            headline.push((name, v));
        }
    }
    for (i, (a, va)) in headline.iter().enumerate() {
        for (b, vb) in &headline[i + 1..] {
            if *vb > 0.0 {
                ratios.insert(format!("{a}/{b}"), va / vb);
            }
        }
    }

    let partial = !warnings.is_empty();
    Ok(CoverTimeReport {
        schema: SCHEMA_VERSION,
        graph: GraphSummary {
            name: config.name.clone(),
            n: net.n(),
            edges: net.edge_count(),
            total_conductance: total,
            resistance_diameter: diameter,
            t_hit: table.as_ref().map(HittingTimeTable::t_hit),
        },
        estimates: est,
        ratios,
        seeds,
        durations_ms: timer.out,
        partial,
        warnings,
    })
}

/// Families with a known first-order cover-time asymptote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticFamily {
    /// `K_n`, size = n.
    Complete,
    /// Complete binary tree, size = height.
    BinaryTree,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticRow {
    pub graph: String,
    pub n: usize,
    pub edges: usize,
    pub sup_mean: f64,
    pub sup_stderr: f64,
    /// `|E| (Ê sup η)²`.
    pub gaussian_cover: f64,
    pub simulated_cover: Option<MeanEstimate>,
    /// `|E| (Ê sup η)² / simulated t_cov`; tends to 1.
    pub gaussian_over_simulated: Option<f64>,
    /// `n ln n` for `K_n`, `2 h n ln n` for the tree of height `h`.
    pub reference: f64,
    pub gaussian_over_reference: f64,
    pub simulated_over_reference: Option<f64>,
    /// `Ê sup η / √(2 ln n / n)` on complete graphs.
    pub sup_over_asymptote: Option<f64>,
    pub target: f64,
}

#[derive(Debug, Clone)]
pub struct AsymptoticConfig {
    pub seed: u64,
    pub sup_samples: usize,
    /// Zero disables simulation.
    pub cover_reps: usize,
}

impl Default for AsymptoticConfig {
    fn default() -> Self {
        AsymptoticConfig {
            seed: DEFAULT_SEED,
            sup_samples: 2000,
            cover_reps: 200,
        }
    }
}

/// Compares `|E| (E sup η)²` with simulation and with the first-order
/// asymptote across a range of sizes.
pub fn asymptotic_check(
    family: AsymptoticFamily,
    sizes: &[usize],
    config: &AsymptoticConfig,
) -> Result<Vec<AsymptoticRow>> {
    sizes
        .iter()
        .map(|&size| {
            let fam = match family {
                AsymptoticFamily::Complete => Family::Complete(size),
                AsymptoticFamily::BinaryTree => Family::BaryTree { b: 2, h: size },
            };
            let net = fam.generate()?;
            let n = net.n();
            let nf = n as f64;
            let edges = net.total_conductance() / 2.0;
            let oracle = ResistanceOracle::new(&net)?;
            let sup = GffSampler::new(&oracle)?
                .estimate_sup(config.sup_samples, sub_seed(config.seed, size as u64));
            let gaussian_cover = edges * sup.mean * sup.mean;
            let simulated_cover = if config.cover_reps > 0 {
                let start = match family {
                    AsymptoticFamily::Complete => 0,
                    AsymptoticFamily::BinaryTree => {
                        HittingTimeTable::compute(&net)?.eccentric_vertex()
                    }
                };
                let seed = sub_seed(config.seed, 1000 + size as u64);
                Some(estimate_cover_time(&net, start, config.cover_reps, seed)?.cover)
            } else {
                None
            };
            let reference = match family {
                AsymptoticFamily::Complete => nf * nf.ln(),
                AsymptoticFamily::BinaryTree => 2.0 * size as f64 * nf * nf.ln(),
            };
            Ok(AsymptoticRow {
                graph: fam.to_string(),
                n,
                edges: net.edge_count(),
                sup_mean: sup.mean,
                sup_stderr: sup.stderr,
                gaussian_cover,
                gaussian_over_simulated: simulated_cover.map(|s| gaussian_cover / s.mean),
                simulated_over_reference: simulated_cover.map(|s| s.mean / reference),
                simulated_cover,
                reference,
                gaussian_over_reference: gaussian_cover / reference,
                sup_over_asymptote: matches!(family, AsymptoticFamily::Complete)
                    .then(|| sup.mean / (2.0 * nf.ln() / nf).sqrt()),
                target: 1.0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(spec: &str) -> Network {
        spec.parse::<Family>().unwrap().generate().unwrap()
    }

    #[test]
    fn matthews_single_edge() {
        let t = HittingTimeTable::compute(&net("path:2")).unwrap();
        assert!((matthews_upper(&t) - (1.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(matthews_lower(&t).value, 0.0);
    }

    #[test]
    fn matthews_complete_graphs() {
        let t = HittingTimeTable::compute(&net("complete:3")).unwrap();
        assert!((matthews_upper(&t) - 2.0 * (1.0 + 3f64.ln())).abs() < 1e-9);
        let t = HittingTimeTable::compute(&net("complete:8")).unwrap();
        let low = matthews_lower(&t);
        assert_eq!(low.set.len(), 8);
        assert!((low.value - 7.0 * 7f64.ln()).abs() < 1e-9);
        assert!(low.value <= matthews_upper(&t));
    }

    #[test]
    fn lower_below_upper_on_random_nets() {
        for seed in 0..10 {
            let g = crate::generators::random_connected(12, 0.3, seed).unwrap();
            let t = HittingTimeTable::compute(&g).unwrap();
            assert!(matthews_lower(&t).value <= matthews_upper(&t));
        }
    }

    #[test]
    fn report_is_deterministic_and_complete() {
        let g = net("complete:16");
        let cfg = ReportConfig {
            sup_samples: 400,
            cover_reps: 50,
            blanket_delta: Some(0.5),
            ..ReportConfig::default()
        };
        let a = full_report(&g, &cfg).unwrap();
        let b = full_report(&g, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(!a.partial, "{:?}", a.warnings);
        assert!(a.durations_ms.is_empty());
        assert_eq!(a.headline().len(), 4);
        for (_, v) in a.headline() {
            assert!(v > 0.0);
        }
        let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(json["schema"], 1);
        for key in ["graph", "estimates", "ratios", "seeds", "durations_ms"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn asymptotic_rows_have_reference() {
        let rows = asymptotic_check(
            AsymptoticFamily::Complete,
            &[16, 32],
            &AsymptoticConfig {
                sup_samples: 500,
                cover_reps: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.sup_over_asymptote.unwrap() > 0.5);
            assert!(row.gaussian_over_simulated.unwrap() > 0.2);
        }
    }
}
