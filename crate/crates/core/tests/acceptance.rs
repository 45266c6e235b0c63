//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails. Tolerances are fixed here.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use covertime::estimators::{
    asymptotic_check, full_report, AsymptoticConfig, AsymptoticFamily, ReportConfig,
};
use covertime::gamma2::{brute_force_gamma2, gamma2_approx, FiniteMetric};
use covertime::generators::random_connected;
use covertime::gff::{build_sketch, GffSampler, SketchConfig};
use covertime::montecarlo::{MeanEstimate, DEFAULT_SEED};
use covertime::resistance::foster_residual;
use covertime::walk::{
    estimate_blanket_time, estimate_cover_time, inverse_local_times, rayknight_check,
};
use covertime::{Family, HittingTimeTable, Network, ResistanceOracle};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn net(spec: &str) -> Network {
    spec.parse::<Family>().unwrap().generate().unwrap()
}

fn standard_family() -> Vec<(&'static str, Network)> {
    vec![
        ("path_32", net("path:32")),
        ("K_32", net("complete:32")),
        ("tree_2_5", net("tree:2,5")),
        ("grid_8x8", net("grid:8")),
        ("er_64", net("er:64,0.1,1")),
    ]
}

fn foster() -> Outcome {
    let mut worst = 0.0f64;
    for &n in &[5usize, 20, 50] {
        for seed in 0..20 {
            let g = random_connected(n, 0.2, 1000 * n as u64 + seed).unwrap();
            let r = foster_residual(&g).unwrap().abs() / n as f64;
            worst = worst.max(r);
        }
    }
    outcome(
        worst <= 1e-8,
        format!("max |residual|/n = {worst:.2e} (tol 1e-8)"),
    )
}

fn commute() -> Outcome {
    let mut worst = 0.0f64;
    for (i, &n) in [4usize, 8, 12, 17, 23, 30].iter().enumerate() {
        let g = random_connected(n, 0.25, 77 + i as u64).unwrap();
        let table = HittingTimeTable::compute(&g).unwrap();
        let oracle = ResistanceOracle::new(&g).unwrap();
        for u in 0..n {
            for v in u + 1..n {
                let kappa = oracle.commute(u, v).unwrap();
                let sum = table.get(u, v) + table.get(v, u);
                worst = worst.max((sum - kappa).abs() / kappa);
            }
        }
    }
    outcome(
        worst <= 1e-8,
        format!("max rel err = {worst:.2e} (tol 1e-8)"),
    )
}

fn star_mesh() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = rng.random_range(3..=25);
        let g = random_connected(n, 0.3, 500 + i).unwrap();
        let x = rng.random_range(0..n);
        let reduced = g.star_mesh_reduce(x).unwrap();
        let base = ResistanceOracle::new(&g).unwrap();
        let small = ResistanceOracle::new(&reduced.network).unwrap();
        for u in 0..n {
            for v in u + 1..n {
                let (Some(a), Some(b)) = (reduced.relabel[u], reduced.relabel[v]) else {
                    continue;
                };
                let r0 = base.r_eff(u, v).unwrap();
                let r1 = small.r_eff(a, b).unwrap();
                worst = worst.max((r0 - r1).abs() / r0);
            }
        }
    }
    outcome(
        worst <= 1e-8,
        format!("max rel change = {worst:.2e} (tol 1e-8)"),
    )
}

fn gff_exactness() -> Outcome {
    let k5 = net("complete:5");
    let oracle = ResistanceOracle::with_ground(&k5, 0).unwrap();
    let draws = GffSampler::new(&oracle)
        .unwrap()
        .samples(200_000, DEFAULT_SEED);
    let mut worst_var = 0.0f64;
    for v in 1..5 {
        let vals: Vec<f64> = draws.iter().map(|d| d[v]).collect();
        let est = MeanEstimate::from_samples(&vals);
        let var = est.sd().powi(2);
        worst_var = worst_var.max((var - 0.4).abs());
    }
    let edge = net("path:2");
    let oracle = ResistanceOracle::with_ground(&edge, 0).unwrap();
    let sup = GffSampler::new(&oracle)
        .unwrap()
        .estimate_sup(1_000_000, DEFAULT_SEED);
    let target = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let sup_err = (sup.mean - target).abs();
    outcome(
        worst_var <= 0.01 && sup_err <= 0.005,
        format!(
            "K_5 max |var - 0.4| = {worst_var:.4} (tol 0.01); edge |E sup - 1/sqrt(2pi)| = {sup_err:.5} (tol 0.005)"
        ),
    )
}

fn ray_knight() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, g) in [("path_4", net("path:4")), ("K_4", net("complete:4"))] {
        let r = rayknight_check(&g, 0, 1.0, 50_000, DEFAULT_SEED).unwrap();
        let ok = r.max_local_z <= 3.0 && r.max_mean_z <= 3.0 && r.max_second_z <= 4.0;
        pass &= ok;
        parts.push(format!(
            "{name}: local z {:.2}, mean z {:.2}, second z {:.2}, ks {:.4}",
            r.max_local_z, r.max_mean_z, r.max_second_z, r.max_ks
        ));
    }
    outcome(pass, format!("{} (tol 3/3/4 SE)", parts.join("; ")))
}

fn tau_tail() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, g) in [("K_8", net("complete:8")), ("path_8", net("path:8"))] {
        let diam = ResistanceOracle::new(&g)
            .unwrap()
            .resistance_diameter()
            .unwrap();
        for beta in [0.05, 0.1] {
            let t = diam * diam / (beta * beta);
            let s = inverse_local_times(&g, 0, t, 20_000, DEFAULT_SEED).unwrap();
            let p = s.tail_probability(beta * g.total_conductance() * t);
            let ok = p.mean <= 3.0 * beta + 2.0 * p.stderr;
            pass &= ok;
            parts.push(format!("{name} beta={beta}: P = {:.4}", p.mean));
        }
    }
    outcome(pass, format!("{} (bound 3 beta + 2 SE)", parts.join("; ")))
}

fn random_metric(n: usize, seed: u64) -> FiniteMetric {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match seed % 3 {
        // Points in the plane.
        0 => {
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            FiniteMetric::from_fn(n, |i, j| {
                ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt()
            })
            .unwrap()
        }
        // Clusters at very different scales on a line.
        1 => {
            let xs: Vec<f64> = (0..n)
                .map(|_| 10f64.powi(rng.random_range(0..4)) * rng.random::<f64>())
                .collect();
            FiniteMetric::from_fn(n, |i, j| {
                (xs[i] - xs[j]).abs().max(if i == j { 0.0 } else { 1e-6 })
            })
            .unwrap()
        }
        // Resistance metric of a random weighted graph.
        _ => {
            let g = random_connected(n.max(2), 0.4, seed).unwrap();
            FiniteMetric::from_network(&g).unwrap()
        }
    }
}

fn gamma2_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut worst_homog = 0.0f64;
    let mut monotone = true;
    for i in 0..100u64 {
        let n = rng.random_range(2..=8);
        let m = random_metric(n, i);
        let exact = brute_force_gamma2(&m).unwrap();
        let est = gamma2_approx(&m, 16).unwrap();
        let ratio = est.value / exact;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        let lambda = 0.1 + 37.0 * rng.random::<f64>();
        let scaled = gamma2_approx(&m.scaled(lambda), 16).unwrap().value;
        worst_homog = worst_homog.max((scaled - lambda * est.value).abs() / (lambda * est.value));
        let maps = &est.maps;
        for j in 2..=maps.top_scale {
            let (a, b) = (maps.phi(j - 1), maps.phi(j));
            monotone &= a.iter().zip(&b).all(|(x, y)| y >= x);
        }
    }
    outcome(
        lo >= 1.0 / 50.0 && hi <= 50.0 && worst_homog <= 1e-12 && monotone,
        format!(
            "A/exact in [{lo:.3}, {hi:.3}] (need [0.02, 50]); homogeneity err {worst_homog:.1e} (tol 1e-12); phi monotone: {monotone}"
        ),
    )
}

fn sandwich_and_matthews() -> (Outcome, Outcome) {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut sandwich_ok = true;
    let mut matthews_ok = true;
    let mut parts = Vec::new();
    for (name, g) in standard_family() {
        let cfg = ReportConfig {
            sup_samples: 2000,
            cover_reps: 200,
            name: Some(name.into()),
            ..ReportConfig::default()
        };
        let rep = full_report(&g, &cfg).unwrap();
        let sim = rep.estimates.simulated.as_ref().unwrap();
        let ret = sim.cover_and_return.mean;
        for (_, v) in rep.headline() {
            lo = lo.min(ret / v);
            hi = hi.max(ret / v);
        }
        sandwich_ok &= rep.headline().len() == 4 && sim.sandwich_holds;
        let cover = sim.cover;
        let upper = rep.estimates.matthews_upper.unwrap();
        let lower = rep.estimates.matthews_lower.as_ref().unwrap().value;
        let ok =
            lower - 3.0 * cover.stderr <= cover.mean && cover.mean <= upper + 3.0 * cover.stderr;
        matthews_ok &= ok;
        parts.push(format!(
            "{name}: {lower:.0} <= {:.0} <= {upper:.0}",
            cover.mean
        ));
    }
    (
        outcome(
            lo >= 1.0 / 50.0 && hi <= 50.0 && sandwich_ok,
            format!("cover-and-return / estimate in [{lo:.3}, {hi:.3}] (need [0.02, 50]); half-inequality: {sandwich_ok}"),
        ),
        outcome(matthews_ok, parts.join("; ")),
    )
}

fn sketch_guarantee() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, g) in [
        ("K_32", net("complete:32")),
        ("ER(100,0.08)", net("er:100,0.08,1")),
    ] {
        let oracle = ResistanceOracle::new(&g).unwrap();
        let sk = build_sketch(&oracle, &SketchConfig::default(), DEFAULT_SEED).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..g.n() {
            for j in i + 1..g.n() {
                let kappa = oracle.commute(i, j).unwrap();
                let r = sk.pair_norm_sq(i, j) / kappa;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        pass &= lo >= 1.0 && hi <= 2.0;
        parts.push(format!(
            "{name}: ratios in [{lo:.3}, {hi:.3}], k = {}",
            sk.rows()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn asymptotics() -> Outcome {
    let cfg = AsymptoticConfig {
        seed: DEFAULT_SEED,
        sup_samples: 50_000,
        cover_reps: 0,
    };
    let row = &asymptotic_check(AsymptoticFamily::Complete, &[512], &cfg).unwrap()[0];
    let sup_ratio = row.sup_over_asymptote.unwrap();
    let cover_ratio = row.gaussian_over_reference;
    outcome(
        (0.85..=1.15).contains(&sup_ratio) && (0.7..=1.3).contains(&cover_ratio),
        format!("K_512: sup ratio {sup_ratio:.4} (need [0.85, 1.15]); |E| sup^2/(n ln n) {cover_ratio:.4} (need [0.7, 1.3])"),
    )
}

fn blanket() -> Outcome {
    let mut worst = 0.0f64;
    let mut ordered = true;
    for (_, g) in standard_family() {
        let start = HittingTimeTable::compute(&g).unwrap().eccentric_vertex();
        let b = estimate_blanket_time(&g, start, 0.5, 200, DEFAULT_SEED).unwrap();
        let cover = estimate_cover_time(&g, start, 200, DEFAULT_SEED ^ 1).unwrap();
        ordered &= b.ordered;
        worst = worst.max(b.weak.mean / cover.cover.mean);
    }
    outcome(
        worst <= 30.0 && ordered,
        format!("max blanket/cover = {worst:.3} (need <= 30); samplewise order: {ordered}"),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, started: Instant, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {id:>2} {name}: {} ({:.1}s)",
            o.detail,
            started.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed += 1;
        }
    };

    let t = Instant::now();
    report(1, "Foster identity", t, foster());
    let t = Instant::now();
    report(2, "commute identity", t, commute());
    let t = Instant::now();
    report(3, "star-mesh invariance", t, star_mesh());
    let t = Instant::now();
    report(4, "free field exactness", t, gff_exactness());
    let t = Instant::now();
    report(5, "Ray-Knight moments", t, ray_knight());
    let t = Instant::now();
    report(6, "inverse local time tail", t, tau_tail());
    let t = Instant::now();
    report(7, "gamma2 oracle sandwich", t, gamma2_sandwich());
    let t = Instant::now();
    let (eight, nine) = sandwich_and_matthews();
    report(8, "cover-time sandwich", t, eight);
    report(9, "Matthews bracket", t, nine);
    let t = Instant::now();
    report(10, "sketch guarantee", t, sketch_guarantee());
    let t = Instant::now();
    report(11, "complete-graph asymptotics", t, asymptotics());
    let t = Instant::now();
    report(12, "blanket/cover ratio", t, blanket());

    if failed == 0 {
        println!("acceptance: all 12 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
