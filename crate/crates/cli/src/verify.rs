//! Numerical checks of the electrical and probabilistic identities.

use clap::Subcommand;
use serde::Serialize;

use covertime::gff::{build_sketch, GffSampler, SketchConfig};
use covertime::montecarlo::sub_seed;
use covertime::resistance::foster_residual;
use covertime::walk::{escape_frequency, rayknight_check};
use covertime::{HittingTimeTable, Network, ResistanceOracle, VertexId};

#[derive(Debug, Subcommand)]
pub enum Check {
    /// Sum of c_e R_eff(e) over edges equals n - 1.
    Foster,
    /// H(u,v) + H(v,u) equals total conductance times R_eff(u,v).
    Commute,
    /// Eliminating a vertex preserves resistances between survivors.
    Starmesh {
        #[arg(long, default_value_t = 0)]
        vertex: VertexId,
    },
    /// Local times at an inverse local time against the shifted squared field.
    Rayknight {
        #[arg(long, default_value_t = 0)]
        v0: VertexId,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 50_000)]
        reps: usize,
    },
    /// A validated resistance sketch distorts commute times by a factor in [1, 2].
    Sketch {
        /// Initial projection rows; defaults to ceil(24 ln n).
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long, default_value_t = 8)]
        attempts: usize,
        #[arg(long, default_value_t = 6)]
        max_growths: usize,
    },
    /// Simulated escape frequency against 1 / (c_v R_eff(u, v)).
    Escape {
        #[arg(long, default_value_t = 0)]
        v: VertexId,
        /// Target vertex; defaults to the last vertex.
        #[arg(long)]
        u: Option<VertexId>,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
    },
    /// Field increments have variance R_eff.
    Isometry {
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::Foster => "foster",
            Check::Commute => "commute",
            Check::Starmesh { .. } => "starmesh",
            Check::Rayknight { .. } => "rayknight",
            Check::Sketch { .. } => "sketch",
            Check::Escape { .. } => "escape",
            Check::Isometry { .. } => "isometry",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn at_most(check: impl Into<String>, statistic: f64, threshold: f64) -> CheckRow {
    CheckRow {
        check: check.into(),
        statistic,
        threshold,
        pass: statistic <= threshold,
    }
}

fn at_least(check: impl Into<String>, statistic: f64, threshold: f64) -> CheckRow {
    CheckRow {
        check: check.into(),
        statistic,
        threshold,
        pass: statistic >= threshold,
    }
}

pub fn run(check: &Check, net: &Network, seed: u64) -> covertime::Result<Vec<CheckRow>> {
    let n = net.n();
    Ok(match *check {
        Check::Foster => vec![at_most(
            "foster_residual",
            foster_residual(net)?.abs(),
            1e-8 * n as f64,
        )],
        Check::Commute => {
            let table = HittingTimeTable::compute(net)?;
            let oracle = ResistanceOracle::new(net)?;
            let mut worst = 0.0f64;
            for u in 0..n {
                for v in u + 1..n {
                    let kappa = oracle.commute(u, v)?;
                    worst = worst.max((table.get(u, v) + table.get(v, u) - kappa).abs() / kappa);
                }
            }
            vec![at_most("commute_rel_err", worst, 1e-8)]
        }
        Check::Starmesh { vertex } => {
            let reduced = net.star_mesh_reduce(vertex)?;
            let base = ResistanceOracle::new(net)?;
            let small = ResistanceOracle::new(&reduced.network)?;
            let mut worst = 0.0f64;
            for u in 0..n {
                for v in u + 1..n {
                    if let (Some(a), Some(b)) = (reduced.relabel[u], reduced.relabel[v]) {
                        let r0 = base.r_eff(u, v)?;
                        worst = worst.max((small.r_eff(a, b)? - r0).abs() / r0);
                    }
                }
            }
            vec![at_most("starmesh_rel_change", worst, 1e-8)]
        }
        Check::Rayknight { v0, t, reps } => {
            let r = rayknight_check(net, v0, t, reps, seed)?;
            vec![
                at_most("rayknight_local_time_z", r.max_local_z, 3.0),
                at_most("rayknight_mean_z", r.max_mean_z, 3.0),
                at_most("rayknight_second_moment_z", r.max_second_z, 4.0),
            ]
        }
        Check::Sketch {
            rows,
            attempts,
            max_growths,
        } => {
            let oracle = ResistanceOracle::new(net)?;
            let config = SketchConfig {
                rows,
                attempts_per_size: attempts,
                max_growths,
                ..SketchConfig::default()
            };
            let sk = build_sketch(&oracle, &config, seed)?;
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for i in 0..n {
                for j in i + 1..n {
                    let r = sk.pair_norm_sq(i, j) / oracle.commute(i, j)?;
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
            vec![
                at_least("sketch_min_ratio", lo, 1.0),
                at_most("sketch_max_ratio", hi, 2.0),
            ]
        }
        Check::Escape { v, u, reps } => {
            let u = u.unwrap_or(n - 1);
            let exact = ResistanceOracle::new(net)?.escape_probability(v, u)?;
            let est = escape_frequency(net, v, u, reps, seed)?;
            vec![at_most("escape_z", est.z_against_value(exact), 3.0)]
        }
        Check::Isometry { samples } => {
            let oracle = ResistanceOracle::new(net)?;
            let draws = GffSampler::new(&oracle)?.samples(samples, sub_seed(seed, 7));
            // (η_x − η_y)² / R_eff is χ²₁, with relative standard error √(2/N).
            let mut worst = 0.0f64;
            for x in 0..n {
                for y in x + 1..n {
                    let r = oracle.r_eff(x, y)?;
                    let mean =
                        draws.iter().map(|d| (d[x] - d[y]).powi(2)).sum::<f64>() / samples as f64;
                    worst = worst.max((mean / r - 1.0).abs());
                }
            }
            vec![at_most(
                "isometry_rel_err",
                worst,
                5.0 * (2.0 / samples as f64).sqrt(),
            )]
        }
    })
}
