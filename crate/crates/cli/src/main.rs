//! `covertime`: cover-time estimation and verification from the command line.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 unreadable or
//! unparseable input, 3 invalid network or parameters, 4 numerical failure.

mod output;
mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use covertime::error::{MetricError, NetworkError, WalkError};
use covertime::estimators::{
    asymptotic_check, full_report, AsymptoticConfig, AsymptoticFamily, ReportConfig,
};
use covertime::gamma2::{
    brute_force_gamma2, extract_certificate, gamma2_approx, FiniteMetric, BRUTE_FORCE_LIMIT,
};
use covertime::gff::GffSampler;
use covertime::montecarlo::{stream, DEFAULT_SEED};
use covertime::walk::{
    estimate_blanket_time, estimate_cover_time, inverse_local_times, trace_until, write_trace_csv,
    StoppingRule, Walker,
};
use covertime::{Family, HittingTimeTable, Network, ResistanceOracle, VertexId};

use output::{emit, pairs, Cell, Format, Table};

const SEED_ENV: &str = "COVERTIME_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "covertime",
    version,
    about = "Cover-time estimates for weighted graphs"
)]
struct Cli {
    /// Generator spec, e.g. complete:16, path:32, tree:2,5, grid:8, er:64,0.1,1.
    #[arg(long = "gen", global = true, conflicts_with = "input")]
    generator: Option<String>,
    /// Edge list (`u v [c]` per line) or JSON network file.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// RNG seed; falls back to $COVERTIME_SEED, then a fixed default.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads for Monte Carlo (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Basic network statistics.
    Info,
    /// Every cover-time estimator and bound in one report.
    Estimate {
        /// Free-field draws per Monte Carlo estimate.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Simulated cover-time replicas.
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = covertime::gamma2::DEFAULT_R)]
        r: u32,
        #[arg(long)]
        no_simulate: bool,
        #[arg(long)]
        no_gamma2: bool,
        #[arg(long)]
        no_pseudoroot: bool,
        #[arg(long)]
        no_sketch: bool,
        /// Also simulate blanket times at this fraction.
        #[arg(long)]
        blanket: Option<f64>,
        /// Constant in the tight upper bound.
        #[arg(long, default_value_t = 1.0)]
        tight_c: f64,
        /// Record wall-clock durations (makes output run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Monte Carlo random-walk statistics.
    Simulate {
        #[arg(long, value_enum, default_value_t = RuleKind::Cover)]
        rule: RuleKind,
        /// Start vertex; defaults to the vertex with the largest hitting-time eccentricity.
        #[arg(long)]
        start: Option<VertexId>,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Write the trajectory of one path as CSV (jump, vertex, holding).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Deterministic γ₂ approximation of the resistance metric (or a metric CSV).
    Gamma2 {
        /// Square distance matrix as CSV instead of a network.
        #[arg(long)]
        metric: Option<PathBuf>,
        #[arg(long, default_value_t = covertime::gamma2::DEFAULT_R)]
        r: u32,
        /// Write the extracted certificate tree as JSON.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Effective resistances.
    Resistance {
        /// Pairs `u,v`; all pairs when omitted.
        #[arg(long = "pair", value_parser = parse_pair)]
        pairs: Vec<(VertexId, VertexId)>,
    },
    /// Draws of the free field pinned at a ground vertex.
    GffSample {
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Ground vertex; defaults to the vertex of largest conductance.
        #[arg(long)]
        ground: Option<VertexId>,
    },
    /// Check an identity; exits 1 if it fails.
    Verify {
        #[command(subcommand)]
        check: verify::Check,
    },
    /// Compare estimates with first-order asymptotics across sizes.
    Asymptotics {
        #[arg(long, value_enum, default_value_t = FamilyKind::Complete)]
        family: FamilyKind,
        /// Sizes: n for complete graphs, height for binary trees.
        #[arg(long, value_delimiter = ',', default_values_t = vec![32, 64, 128])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 200)]
        reps: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleKind {
    Cover,
    CoverReturn,
    BlanketWeak,
    BlanketStrong,
    InverseLocal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyKind {
    Complete,
    Tree,
}

/// Errors tagged with the exit code they map to.
#[derive(Debug)]
struct Exit(u8);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn parse_pair(s: &str) -> Result<(VertexId, VertexId), String> {
    let (a, b) = s.split_once(',').ok_or("expected u,v")?;
    let p = |x: &str| x.trim().parse::<VertexId>().map_err(|e| e.to_string());
    Ok((p(a)?, p(b)?))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(Exit(code)) = cause.downcast_ref::<Exit>() {
            return *code;
        }
        if let Some(e) = cause.downcast_ref::<covertime::Error>() {
            return match e {
                covertime::Error::Network(NetworkError::Parse { .. }) => 2,
                covertime::Error::Metric(MetricError::Csv(_)) => 2,
                covertime::Error::Numerical(_) => 4,
                covertime::Error::Walk(WalkError::StepBudgetExceeded(_)) => 4,
                _ => 3,
            };
        }
        if let Some(e) = cause.downcast_ref::<NetworkError>() {
            return if matches!(e, NetworkError::Parse { .. }) {
                2
            } else {
                3
            };
        }
        if let Some(e) = cause.downcast_ref::<MetricError>() {
            return if matches!(e, MetricError::Csv(_)) {
                2
            } else {
                3
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn resolve_seed(flag: Option<u64>) -> anyhow::Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            anyhow!(Exit(2)).context(format!("{SEED_ENV}={v} is not a 64-bit integer"))
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn load_network(cli: &Cli) -> anyhow::Result<(Network, String)> {
    if let Some(spec) = &cli.generator {
        let family: Family = spec
            .parse()
            .map_err(|e: NetworkError| anyhow!(Exit(2)).context(e.to_string()))?;
        let net = family.generate()?;
        return Ok((net, family.to_string()));
    }
    if let Some(path) = &cli.input {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let net = covertime::io::parse_network(&text)
            .map_err(covertime::Error::from)
            .with_context(|| format!("loading {}", path.display()))?;
        return Ok((net, path.display().to_string()));
    }
    Err(anyhow!(Exit(2)).context("no network given: use --gen or --input"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let msg: Vec<String> = err
                .chain()
                .filter(|c| c.downcast_ref::<Exit>().is_none())
                .map(|c| c.to_string())
                .collect();
            eprintln!("error: {}", msg.join(": "));
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring thread pool")?;
    }
    let seed = resolve_seed(cli.seed)?;
    let format = cli.format;

    if let Command::Gamma2 {
        metric: Some(path),
        r,
        certificate,
    } = &cli.command
    {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let metric = FiniteMetric::from_csv(&text)?;
        gamma2_command(&metric, *r, certificate.as_ref(), None, format)?;
        return Ok(0);
    }

    if let Command::Asymptotics {
        family,
        sizes,
        samples,
        reps,
    } = &cli.command
    {
        let fam = match family {
            FamilyKind::Complete => AsymptoticFamily::Complete,
            FamilyKind::Tree => AsymptoticFamily::BinaryTree,
        };
        let config = AsymptoticConfig {
            seed,
            sup_samples: *samples,
            cover_reps: *reps,
        };
        let rows = asymptotic_check(fam, sizes, &config)?;
        let mut table = Table::new(&[
            "graph",
            "n",
            "sup_mean",
            "gaussian_cover",
            "simulated_cover",
            "gaussian/simulated",
            "gaussian/reference",
            "simulated/reference",
        ]);
        let opt = |x: Option<f64>| x.map_or(Cell::Text("-".into()), Cell::Num);
        for r in &rows {
            table.push(vec![
                r.graph.clone().into(),
                r.n.into(),
                r.sup_mean.into(),
                r.gaussian_cover.into(),
                opt(r.simulated_cover.map(|s| s.mean)),
                opt(r.gaussian_over_simulated),
                r.gaussian_over_reference.into(),
                opt(r.simulated_over_reference),
            ]);
        }
        emit(format, &rows, &table);
        return Ok(0);
    }

    let (net, name) = load_network(cli)?;
    match &cli.command {
        Command::Info => info(&net, &name, format)?,
        Command::Estimate {
            samples,
            reps,
            r,
            no_simulate,
            no_gamma2,
            no_pseudoroot,
            no_sketch,
            blanket,
            tight_c,
            timings,
        } => {
            let config = ReportConfig {
                seed,
                sup_samples: *samples,
                cover_reps: *reps,
                gamma2: !no_gamma2,
                pseudoroot: !no_pseudoroot,
                sketch: !no_sketch,
                simulate: !no_simulate,
                blanket_delta: *blanket,
                r: *r,
                tight_c: *tight_c,
                timings: *timings,
                name: Some(name),
                ..ReportConfig::default()
            };
            let report = full_report(&net, &config)?;
            let mut rows: Vec<(String, Cell)> = vec![
                ("n".into(), net.n().into()),
                ("edges".into(), net.edge_count().into()),
                ("total_conductance".into(), net.total_conductance().into()),
            ];
            if let Some(t) = report.graph.t_hit {
                rows.push(("t_hit".into(), t.into()));
            }
            for (k, v) in report.headline() {
                rows.push((k.into(), v.into()));
            }
            let e = &report.estimates;
            if let Some(v) = e.matthews_lower.as_ref() {
                rows.push(("matthews_lower".into(), v.value.into()));
            }
            if let Some(v) = e.matthews_upper {
                rows.push(("matthews_upper".into(), v.into()));
            }
            if let Some(s) = &e.simulated {
                rows.push(("simulated_cover".into(), s.cover.mean.into()));
                rows.push(("simulated_cover_stderr".into(), s.cover.stderr.into()));
                rows.push((
                    "simulated_cover_and_return".into(),
                    s.cover_and_return.mean.into(),
                ));
            }
            if let Some(b) = &e.blanket {
                rows.push(("blanket_weak".into(), b.weak.mean.into()));
                rows.push(("blanket_strong".into(), b.strong.mean.into()));
            }
            if let Some(t) = &e.tight_upper {
                rows.push(("tight_upper".into(), t.value.into()));
            }
            for (k, v) in &report.ratios {
                rows.push((format!("ratio:{k}"), (*v).into()));
            }
            for w in &report.warnings {
                rows.push(("warning".into(), w.clone().into()));
            }
            let table = pairs(rows.iter().map(|(k, v)| (k.as_str(), v.clone())).collect());
            emit(format, &report, &table);
        }
        Command::Simulate {
            rule,
            start,
            reps,
            delta,
            t,
            trace,
        } => simulate(
            &net,
            *rule,
            *start,
            *reps,
            *delta,
            *t,
            trace.as_ref(),
            seed,
            format,
        )?,
        Command::Gamma2 { r, certificate, .. } => {
            let metric = FiniteMetric::from_network(&net)?;
            gamma2_command(
                &metric,
                *r,
                certificate.as_ref(),
                Some(net.total_conductance()),
                format,
            )?;
        }
        Command::Resistance { pairs: wanted } => resistance(&net, wanted, format)?,
        Command::GffSample { count, ground } => {
            let ground = ground.unwrap_or_else(|| net.max_conductance_vertex());
            let oracle = ResistanceOracle::with_ground(&net, ground)?;
            let sampler = GffSampler::new(&oracle)?;
            let draws = sampler.samples(*count, seed);
            let header: Vec<String> = (0..net.n()).map(|v| net.label(v)).collect();
            let mut table = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
            for d in &draws {
                table.push(d.iter().map(|&x| Cell::Num(x)).collect());
            }
            #[derive(Serialize)]
            struct Out<'a> {
                ground: VertexId,
                seed: u64,
                sigma: f64,
                samples: &'a [Vec<f64>],
            }
            let out = Out {
                ground,
                seed,
                sigma: sampler.sigma(),
                samples: &draws,
            };
            emit(format, &out, &table);
        }
        Command::Verify { check } => {
            let rows = verify::run(check, &net, seed)?;
            let mut table = Table::new(&["check", "statistic", "threshold", "pass"]);
            for r in &rows {
                table.push(vec![
                    r.check.as_str().into(),
                    r.statistic.into(),
                    r.threshold.into(),
                    r.pass.into(),
                ]);
            }
            emit(format, &rows, &table);
            if rows.iter().any(|r| !r.pass) {
                eprintln!("verify {}: FAILED", check.name());
                return Ok(1);
            }
        }
        Command::Asymptotics { .. } => unreachable!("handled before loading a network"),
    }
    Ok(0)
}

fn info(net: &Network, name: &str, format: Format) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Info<'a> {
        graph: &'a str,
        n: usize,
        edges: usize,
        total_conductance: f64,
        max_conductance_vertex: VertexId,
        resistance_diameter: f64,
        t_hit: Option<f64>,
    }
    let oracle = ResistanceOracle::new(net)?;
    let t_hit = if net.n() <= 2000 {
        Some(HittingTimeTable::compute(net)?.t_hit())
    } else {
        None
    };
    let out = Info {
        graph: name,
        n: net.n(),
        edges: net.edge_count(),
        total_conductance: net.total_conductance(),
        max_conductance_vertex: net.max_conductance_vertex(),
        resistance_diameter: oracle.resistance_diameter()?,
        t_hit,
    };
    let mut rows = vec![
        ("graph", Cell::from(name)),
        ("n", out.n.into()),
        ("edges", out.edges.into()),
        ("total_conductance", out.total_conductance.into()),
        ("max_conductance_vertex", out.max_conductance_vertex.into()),
        ("resistance_diameter", out.resistance_diameter.into()),
    ];
    if let Some(t) = t_hit {
        rows.push(("t_hit", t.into()));
    }
    emit(format, &out, &pairs(rows));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    net: &Network,
    rule: RuleKind,
    start: Option<VertexId>,
    reps: usize,
    delta: f64,
    t: f64,
    trace: Option<&PathBuf>,
    seed: u64,
    format: Format,
) -> anyhow::Result<()> {
    let start = match start {
        Some(s) => s,
        None => HittingTimeTable::compute(net)?.eccentric_vertex(),
    };
    let stop = match rule {
        RuleKind::Cover => StoppingRule::Cover,
        RuleKind::CoverReturn => StoppingRule::CoverAndReturn,
        RuleKind::BlanketWeak => StoppingRule::BlanketWeak(delta),
        RuleKind::BlanketStrong => StoppingRule::BlanketStrong(delta),
        RuleKind::InverseLocal => StoppingRule::InverseLocal(t),
    };
    if let Some(path) = trace {
        let walker = Walker::new(net);
        let (_, rows) = trace_until(&walker, start, stop, &mut stream(seed, u64::MAX))?;
        let file =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_trace_csv(&rows, file).with_context(|| format!("writing {}", path.display()))?;
    }
    #[derive(Serialize)]
    struct Stat {
        statistic: String,
        mean: f64,
        stderr: f64,
        samples: usize,
    }
    let mut stats = Vec::new();
    let mut push = |name: String, m: covertime::montecarlo::MeanEstimate| {
        stats.push(Stat {
            statistic: name,
            mean: m.mean,
            stderr: m.stderr,
            samples: m.samples,
        })
    };
    match rule {
        RuleKind::Cover | RuleKind::CoverReturn => {
            let est = estimate_cover_time(net, start, reps, seed)?;
            push("cover".into(), est.cover);
            push("cover_and_return".into(), est.cover_and_return);
            push("cover_continuous".into(), est.cover_continuous);
        }
        RuleKind::BlanketWeak | RuleKind::BlanketStrong => {
            let est = estimate_blanket_time(net, start, delta, reps, seed)?;
            push("cover".into(), est.cover);
            push("blanket_weak".into(), est.weak);
            push("blanket_strong".into(), est.strong);
        }
        RuleKind::InverseLocal => {
            let est = inverse_local_times(net, start, t, reps, seed)?;
            push("tau".into(), est.tau);
            for (v, m) in est.local.iter().enumerate() {
                push(format!("local_time[{v}]"), *m);
            }
        }
    }
    let mut table = Table::new(&["statistic", "mean", "stderr", "samples"]);
    for s in &stats {
        table.push(vec![
            s.statistic.clone().into(),
            s.mean.into(),
            s.stderr.into(),
            s.samples.into(),
        ]);
    }
    #[derive(Serialize)]
    struct Out<'a> {
        start: VertexId,
        seed: u64,
        reps: usize,
        statistics: &'a [Stat],
    }
    emit(
        format,
        &Out {
            start,
            seed,
            reps,
            statistics: &stats,
        },
        &table,
    );
    Ok(())
}

fn gamma2_command(
    metric: &FiniteMetric,
    r: u32,
    certificate: Option<&PathBuf>,
    total_conductance: Option<f64>,
    format: Format,
) -> anyhow::Result<()> {
    let est = gamma2_approx(metric, r)?;
    let exact = if metric.n() <= BRUTE_FORCE_LIMIT {
        Some(brute_force_gamma2(metric)?)
    } else {
        None
    };
    if let Some(path) = certificate {
        let cert = extract_certificate(&est.maps);
        let json = serde_json::to_string_pretty(&cert)?;
        fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    #[derive(Serialize)]
    struct Out {
        value: f64,
        r: u32,
        points: usize,
        top_scale: i32,
        rescale: f64,
        exact: Option<f64>,
        cover_estimate: Option<f64>,
    }
    let out = Out {
        value: est.value,
        r,
        points: metric.n(),
        top_scale: est.maps.top_scale,
        rescale: est.maps.rescale,
        exact,
        cover_estimate: total_conductance.map(|c| c * est.value * est.value),
    };
    let mut rows = vec![
        ("value", Cell::from(out.value)),
        ("r", (r as usize).into()),
        ("points", out.points.into()),
        ("top_scale", (out.top_scale as usize).into()),
    ];
    if let Some(e) = exact {
        rows.push(("exact", e.into()));
    }
    if let Some(c) = out.cover_estimate {
        rows.push(("cover_estimate", c.into()));
    }
    emit(format, &out, &pairs(rows));
    Ok(())
}

fn resistance(
    net: &Network,
    wanted: &[(VertexId, VertexId)],
    format: Format,
) -> anyhow::Result<()> {
    let oracle = ResistanceOracle::new(net)?;
    let list: Vec<(VertexId, VertexId)> = if wanted.is_empty() {
        (0..net.n())
            .flat_map(|u| (u + 1..net.n()).map(move |v| (u, v)))
            .collect()
    } else {
        wanted.to_vec()
    };
    #[derive(Serialize)]
    struct Row {
        u: VertexId,
        v: VertexId,
        r_eff: f64,
        commute: f64,
    }
    let rows = list
        .into_iter()
        .map(|(u, v)| {
            Ok(Row {
                u,
                v,
                r_eff: oracle.r_eff(u, v)?,
                commute: oracle.commute(u, v)?,
            })
        })
        .collect::<covertime::Result<Vec<_>>>()?;
    let mut table = Table::new(&["u", "v", "r_eff", "commute"]);
    for r in &rows {
        table.push(vec![
            r.u.into(),
            r.v.into(),
            r.r_eff.into(),
            r.commute.into(),
        ]);
    }
    emit(format, &rows, &table);
    Ok(())
}
