//! Direct simulation of the random walk on a network.
//!
//! The discrete walk jumps from `x` to `y` with probability `c_xy / c_x`.
//! The continuous-time walk uses the same jump chain and holds an Exp(1)
//! time at every visit, so `L_v = (time spent at v) / c_v` is its local time
//! and `Σ_v c_v L_v` is the elapsed time.

use std::io::Write;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Result, WalkError};
use crate::gff::GffSampler;
use crate::montecarlo::{ks_statistic, par_replicas, stream, sub_seed, MeanEstimate};
use crate::network::{Network, VertexId};
use crate::resistance::ResistanceOracle;

/// Safety cap on jumps per simulated path.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000_000;

/// Jump sampler with per-vertex cumulative conductance tables.
pub struct Walker<'a> {
    net: &'a Network,
    offsets: Vec<usize>,
    cumulative: Vec<f64>,
    budget: u64,
}

impl<'a> Walker<'a> {
    pub fn new(net: &'a Network) -> Self {
        let mut offsets = Vec::with_capacity(net.n() + 1);
        let mut cumulative = Vec::new();
        offsets.push(0);
        for x in 0..net.n() {
            let (_, cs) = net.neighbor_slices(x);
            let mut acc = 0.0;
            for &c in cs {
                acc += c;
                cumulative.push(acc);
            }
            offsets.push(cumulative.len());
        }
        Walker {
            net,
            offsets,
            cumulative,
            budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// One jump of the discrete chain from `x`.
    pub fn jump<R: Rng>(&self, x: VertexId, rng: &mut R) -> VertexId {
        let (ids, _) = self.net.neighbor_slices(x);
        let cum = &self.cumulative[self.offsets[x]..self.offsets[x + 1]];
        let u = rng.random::<f64>() * cum[cum.len() - 1];
        let i = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        ids[i]
    }
}

/// When a simulated path stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingRule {
    /// Every vertex has been visited.
    Cover,
    /// First return to the start strictly after covering.
    CoverAndReturn,
    /// The instant the start vertex's local time crosses `t`.
    InverseLocal(f64),
    /// First `t ≥ 1` with `N_v(t) ≥ δ t π(v)` for every `v`.
    BlanketWeak(f64),
    /// First `t ≥ 1` with `min N_u/π(u) ≥ δ max N_v/π(v)`.
    BlanketStrong(f64),
}

impl StoppingRule {
    fn validate(&self) -> Result<(), WalkError> {
        match *self {
            StoppingRule::InverseLocal(t) if !(t > 0.0 && t.is_finite()) => Err(
                WalkError::InvalidRule(format!("local time level {t} must be positive")),
            ),
            StoppingRule::BlanketWeak(d) | StoppingRule::BlanketStrong(d)
                if !(d > 0.0 && d < 1.0) =>
            {
                Err(WalkError::InvalidRule(format!(
                    "blanket fraction {d} must lie in (0, 1)"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Position and clocks of a walk.
#[derive(Debug, Clone, Serialize)]
pub struct WalkTrace {
    pub start: VertexId,
    pub seed: Option<u64>,
    /// Jumps taken.
    pub steps: u64,
    /// Sum of holding times drawn (possibly truncated at the stop).
    pub time: f64,
    pub current: VertexId,
}

/// Occupation statistics of a walk.
#[derive(Debug, Clone, Serialize)]
pub struct LocalTimes {
    /// `L_v`: time spent at `v` divided by `c_v`.
    pub local: Vec<f64>,
    /// `N_v`: visits to `v`, counting the starting position.
    pub visits: Vec<u64>,
    /// `π(v) = c_v / 𝒞`.
    pub stationary: Vec<f64>,
}

impl LocalTimes {
    /// `|Σ_v c_v L_v − time| / time`.
    pub fn occupation_residual(&self, net: &Network, time: f64) -> f64 {
        let total: f64 = (0..net.n())
            .map(|v| net.conductance(v) * self.local[v])
            .sum();
        if time == 0.0 {
            total.abs()
        } else {
            (total - time).abs() / time
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StoppingReport {
    pub rule: StoppingRule,
    pub stop_steps: u64,
    pub stop_time: f64,
    /// Cover time along the same path, when it was reached.
    pub cover_steps: Option<u64>,
    pub cover_time: Option<f64>,
    /// First jump at which the weak blanket criterion held, when tracked.
    pub weak_blanket_steps: Option<u64>,
    pub trace: WalkTrace,
    pub local_times: LocalTimes,
}

/// In-flight state of one path.
struct Run<'w, 'a> {
    walker: &'w Walker<'a>,
    start: VertexId,
    x: VertexId,
    steps: u64,
    time: f64,
    local: Vec<f64>,
    visits: Vec<u64>,
    inv_pi: Vec<f64>,
    unvisited: usize,
    cover: Option<(u64, f64)>,
    // Extremes of N_v / π(v); the minimum is refreshed lazily.
    argmin: VertexId,
    min_norm: f64,
    max_norm: f64,
    weak_delta: Option<f64>,
    weak_hit: Option<u64>,
}

impl<'w, 'a> Run<'w, 'a> {
    fn new(walker: &'w Walker<'a>, start: VertexId) -> Self {
        let net = walker.net;
        let n = net.n();
        let mut visits = vec![0; n];
        visits[start] = 1;
        let inv_pi: Vec<f64> = (0..n).map(|v| 1.0 / net.stationary(v)).collect();
        let mut run = Run {
            walker,
            start,
            x: start,
            steps: 0,
            time: 0.0,
            local: vec![0.0; n],
            visits,
            inv_pi,
            unvisited: n - 1,
            cover: None,
            argmin: 0,
            min_norm: 0.0,
            max_norm: 0.0,
            weak_delta: None,
            weak_hit: None,
        };
        run.max_norm = run.inv_pi[start];
        run.refresh_min();
        run
    }

    fn refresh_min(&mut self) {
        let mut best = 0;
        let mut value = f64::INFINITY;
        for v in 0..self.visits.len() {
            let norm = self.visits[v] as f64 * self.inv_pi[v];
            if norm < value {
                value = norm;
                best = v;
            }
        }
        self.argmin = best;
        self.min_norm = value;
    }

    /// Holds at the current vertex. Returns `true` if the inverse local time
    /// level was crossed during the hold, in which case the clocks are
    /// truncated at the crossing instant.
    fn hold<R: Rng>(&mut self, rng: &mut R, level: Option<f64>) -> bool {
        let h: f64 = rng.sample(Exp1);
        let c = self.walker.net.conductance(self.x);
        if let Some(t) = level {
            if self.x == self.start && self.local[self.x] + h / c > t {
                self.time += (t - self.local[self.x]) * c;
                self.local[self.x] = t;
                return true;
            }
        }
        self.time += h;
        self.local[self.x] += h / c;
        false
    }

    fn jump<R: Rng>(&mut self, rng: &mut R) -> Result<(), WalkError> {
        if self.steps >= self.walker.budget {
            return Err(WalkError::StepBudgetExceeded(self.walker.budget));
        }
        let y = self.walker.jump(self.x, rng);
        self.steps += 1;
        if self.visits[y] == 0 {
            self.unvisited -= 1;
            if self.unvisited == 0 {
                self.cover = Some((self.steps, self.time));
            }
        }
        self.visits[y] += 1;
        self.x = y;
        let norm = self.visits[y] as f64 * self.inv_pi[y];
        self.max_norm = self.max_norm.max(norm);
        if y == self.argmin {
            self.refresh_min();
        }
        if let Some(d) = self.weak_delta {
            if self.weak_hit.is_none() && self.weak_holds(d) {
                self.weak_hit = Some(self.steps);
            }
        }
        Ok(())
    }

    fn weak_holds(&self, delta: f64) -> bool {
        self.unvisited == 0 && self.min_norm >= delta * self.steps as f64
    }

    fn strong_holds(&self, delta: f64) -> bool {
        self.unvisited == 0 && self.min_norm >= delta * self.max_norm
    }

    fn stopped(&self, rule: StoppingRule) -> bool {
        match rule {
            StoppingRule::Cover => self.cover.is_some(),
            StoppingRule::CoverAndReturn => {
                matches!(self.cover, Some((s, _)) if self.steps > s && self.x == self.start)
            }
            StoppingRule::InverseLocal(_) => false,
            StoppingRule::BlanketWeak(d) => self.weak_holds(d),
            StoppingRule::BlanketStrong(d) => self.strong_holds(d),
        }
    }

    fn execute<R: Rng>(
        mut self,
        rule: StoppingRule,
        rng: &mut R,
        mut trace: Option<&mut Vec<TraceRow>>,
    ) -> Result<StoppingReport, WalkError> {
        let level = match rule {
            StoppingRule::InverseLocal(t) => Some(t),
            _ => None,
        };
        loop {
            let before = self.time;
            let crossed = self.hold(rng, level);
            if let Some(rows) = trace.as_deref_mut() {
                rows.push(TraceRow {
                    jump: self.steps,
                    vertex: self.x,
                    holding: self.time - before,
                });
            }
            if crossed {
                break;
            }
            self.jump(rng)?;
            if self.stopped(rule) {
                break;
            }
        }
        let net = self.walker.net;
        Ok(StoppingReport {
            rule,
            stop_steps: self.steps,
            stop_time: self.time,
            cover_steps: self.cover.map(|c| c.0),
            cover_time: self.cover.map(|c| c.1),
            weak_blanket_steps: self.weak_hit,
            trace: WalkTrace {
                start: self.start,
                seed: None,
                steps: self.steps,
                time: self.time,
                current: self.x,
            },
            local_times: LocalTimes {
                local: self.local,
                visits: self.visits,
                stationary: (0..net.n()).map(|v| net.stationary(v)).collect(),
            },
        })
    }
}

fn check_vertex(net: &Network, v: VertexId) -> Result<(), WalkError> {
    if v >= net.n() {
        Err(WalkError::VertexOutOfRange(v))
    } else {
        Ok(())
    }
}

/// Simulates one path from `start` until `rule` fires.
pub fn run_until<R: Rng>(
    walker: &Walker,
    start: VertexId,
    rule: StoppingRule,
    rng: &mut R,
) -> Result<StoppingReport> {
    check_vertex(walker.net, start)?;
    rule.validate()?;
    Ok(Run::new(walker, start).execute(rule, rng, None)?)
}

/// Local times frozen at `τ(t)`, the instant `L^{v0}` crosses `t`.
pub fn inverse_local_time_run<R: Rng>(
    walker: &Walker,
    v0: VertexId,
    t: f64,
    rng: &mut R,
) -> Result<StoppingReport> {
    run_until(walker, v0, StoppingRule::InverseLocal(t), rng)
}

/// One row of a trajectory dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub jump: u64,
    pub vertex: VertexId,
    pub holding: f64,
}

/// Simulates a path and records every holding interval.
pub fn trace_until<R: Rng>(
    walker: &Walker,
    start: VertexId,
    rule: StoppingRule,
    rng: &mut R,
) -> Result<(StoppingReport, Vec<TraceRow>)> {
    check_vertex(walker.net, start)?;
    rule.validate()?;
    let mut rows = Vec::new();
    let report = Run::new(walker, start).execute(rule, rng, Some(&mut rows))?;
    Ok((report, rows))
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn require_reps(reps: usize, needed: usize) -> Result<(), WalkError> {
    if reps < needed {
        Err(WalkError::TooFewReplicas { needed, got: reps })
    } else {
        Ok(())
    }
}

/// Paired check of `τ↺/2 ≤ τ_cov ≤ τ↺` in standard-error units.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichCheck {
    /// Mean of `τ_cov − τ↺/2` and its error; should not be significantly negative.
    pub lower_gap: MeanEstimate,
    /// Mean of `τ↺ − τ_cov`; nonnegative on every path.
    pub upper_gap: MeanEstimate,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverTimeEstimate {
    pub start: VertexId,
    pub seed: u64,
    /// Discrete `τ_cov`.
    pub cover: MeanEstimate,
    /// Discrete `τ_cov↺`.
    pub cover_and_return: MeanEstimate,
    /// Continuous-time `τ*_cov`.
    pub cover_continuous: MeanEstimate,
    pub sandwich: SandwichCheck,
    /// Per-replica discrete cover times, in replica order.
    pub cover_samples: Vec<f64>,
}

/// Runs `reps` cover-and-return paths from `start`, replica `i` on stream
/// `(seed, i)`.
pub fn estimate_cover_time(
    net: &Network,
    start: VertexId,
    reps: usize,
    seed: u64,
) -> Result<CoverTimeEstimate> {
    require_reps(reps, 10)?;
    check_vertex(net, start)?;
    let walker = Walker::new(net);
    let runs: Vec<Result<(f64, f64, f64)>> = par_replicas(reps, |i| {
        let r = run_until(
            &walker,
            start,
            StoppingRule::CoverAndReturn,
            &mut stream(seed, i),
        )?;
        Ok((
            r.cover_steps.unwrap_or(r.stop_steps) as f64,
            r.stop_steps as f64,
            r.cover_time.unwrap_or(r.stop_time),
        ))
    });
    let runs: Vec<(f64, f64, f64)> = runs.into_iter().collect::<Result<_>>()?;
    let cover: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let ret: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let cont: Vec<f64> = runs.iter().map(|r| r.2).collect();
    let lower: Vec<f64> = runs.iter().map(|r| r.0 - r.1 / 2.0).collect();
    let upper: Vec<f64> = runs.iter().map(|r| r.1 - r.0).collect();
    let lower_gap = MeanEstimate::from_samples(&lower);
    let upper_gap = MeanEstimate::from_samples(&upper);
    let holds =
        lower_gap.mean >= -3.0 * lower_gap.stderr && upper_gap.mean >= -3.0 * upper_gap.stderr;
    Ok(CoverTimeEstimate {
        start,
        seed,
        cover: MeanEstimate::from_samples(&cover),
        cover_and_return: MeanEstimate::from_samples(&ret),
        cover_continuous: MeanEstimate::from_samples(&cont),
        sandwich: SandwichCheck {
            lower_gap,
            upper_gap,
            holds,
        },
        cover_samples: cover,
    })
}

/// Per-path cover, weak-blanket and strong-blanket jump counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlanketSample {
    pub cover: u64,
    pub weak: u64,
    pub strong: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlanketEstimate {
    pub start: VertexId,
    pub delta: f64,
    pub seed: u64,
    pub cover: MeanEstimate,
    pub weak: MeanEstimate,
    pub strong: MeanEstimate,
    pub samples: Vec<BlanketSample>,
    /// `weak ≥ cover` and `strong ≥ weak` on every path.
    pub ordered: bool,
}

/// Runs one path until the strong criterion holds, noting when the cover
/// and weak criteria first held along the way.
pub fn blanket_sample<R: Rng>(
    walker: &Walker,
    start: VertexId,
    delta: f64,
    rng: &mut R,
) -> Result<BlanketSample> {
    check_vertex(walker.net, start)?;
    let rule = StoppingRule::BlanketStrong(delta);
    rule.validate()?;
    let mut run = Run::new(walker, start);
    run.weak_delta = Some(delta);
    let r = run.execute(rule, rng, None)?;
    Ok(BlanketSample {
        cover: r.cover_steps.unwrap_or(r.stop_steps),
        // Strong implies weak, so the weak time is always recorded by now.
        weak: r.weak_blanket_steps.unwrap_or(r.stop_steps),
        strong: r.stop_steps,
    })
}

pub fn estimate_blanket_time(
    net: &Network,
    start: VertexId,
    delta: f64,
    reps: usize,
    seed: u64,
) -> Result<BlanketEstimate> {
    require_reps(reps, 2)?;
    let walker = Walker::new(net);
    let samples: Vec<BlanketSample> = par_replicas(reps, |i| {
        blanket_sample(&walker, start, delta, &mut stream(seed, i))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let col = |f: fn(&BlanketSample) -> u64| -> Vec<f64> {
        samples.iter().map(|s| f(s) as f64).collect()
    };
    let ordered = samples
        .iter()
        .all(|s| s.weak >= s.cover && s.strong >= s.weak);
    Ok(BlanketEstimate {
        start,
        delta,
        seed,
        cover: MeanEstimate::from_samples(&col(|s| s.cover)),
        weak: MeanEstimate::from_samples(&col(|s| s.weak)),
        strong: MeanEstimate::from_samples(&col(|s| s.strong)),
        ordered,
        samples,
    })
}

/// Many inverse-local-time paths summarized.
#[derive(Debug, Clone, Serialize)]
pub struct InverseLocalSummary {
    pub v0: VertexId,
    pub t: f64,
    /// `E L^x_{τ(t)}` per vertex.
    pub local: Vec<MeanEstimate>,
    /// `E τ(t)` in continuous time.
    pub tau: MeanEstimate,
    pub tau_samples: Vec<f64>,
    /// Worst `Σ c_v L_v` vs elapsed-time mismatch over the paths.
    pub max_occupation_residual: f64,
    #[serde(skip)]
    pub local_samples: Vec<Vec<f64>>,
}

impl InverseLocalSummary {
    /// Empirical `P(τ(t) ≤ threshold)` as a mean of indicators.
    pub fn tail_probability(&self, threshold: f64) -> MeanEstimate {
        let ind: Vec<f64> = self
            .tau_samples
            .iter()
            .map(|&s| if s <= threshold { 1.0 } else { 0.0 })
            .collect();
        MeanEstimate::from_samples(&ind)
    }
}

pub fn inverse_local_times(
    net: &Network,
    v0: VertexId,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<InverseLocalSummary> {
    require_reps(reps, 2)?;
    let walker = Walker::new(net);
    let runs: Vec<StoppingReport> = par_replicas(reps, |i| {
        inverse_local_time_run(&walker, v0, t, &mut stream(seed, i))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let n = net.n();
    let local = (0..n)
        .map(|x| {
            let vals: Vec<f64> = runs.iter().map(|r| r.local_times.local[x]).collect();
            MeanEstimate::from_samples(&vals)
        })
        .collect();
    let tau_samples: Vec<f64> = runs.iter().map(|r| r.stop_time).collect();
    let max_occupation_residual = runs
        .iter()
        .map(|r| r.local_times.occupation_residual(net, r.stop_time))
        .fold(0.0, f64::max);
    Ok(InverseLocalSummary {
        v0,
        t,
        local,
        tau: MeanEstimate::from_samples(&tau_samples),
        tau_samples,
        max_occupation_residual,
        local_samples: runs.into_iter().map(|r| r.local_times.local).collect(),
    })
}

/// Per-vertex comparison of `L^x_{τ(t)} + ½η_x²` against `½(η_x + √(2t))²`.
#[derive(Debug, Clone, Serialize)]
pub struct RayKnightCoordinate {
    pub vertex: VertexId,
    pub local: MeanEstimate,
    /// `|E L^x − t|` in standard errors.
    pub local_z: f64,
    pub lhs: MeanEstimate,
    pub rhs: MeanEstimate,
    pub mean_z: f64,
    pub lhs_second: MeanEstimate,
    pub rhs_second: MeanEstimate,
    pub second_z: f64,
    /// Two-sample Kolmogorov–Smirnov distance between the two sides.
    pub ks: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RayKnightReport {
    pub v0: VertexId,
    pub t: f64,
    pub reps: usize,
    pub seed: u64,
    pub tau: MeanEstimate,
    pub coordinates: Vec<RayKnightCoordinate>,
    pub max_local_z: f64,
    pub max_mean_z: f64,
    pub max_second_z: f64,
    pub max_ks: f64,
}

impl RayKnightReport {
    pub fn passes(&self, mean_threshold: f64, second_threshold: f64) -> bool {
        self.max_local_z <= mean_threshold
            && self.max_mean_z <= mean_threshold
            && self.max_second_z <= second_threshold
    }
}

/// Compares both sides of the isomorphism coordinatewise, using independent
/// walks and two independent batches of free fields pinned at `v0`.
pub fn rayknight_check(
    net: &Network,
    v0: VertexId,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<RayKnightReport> {
    require_reps(reps, 10_000)?;
    check_vertex(net, v0)?;
    let walks = inverse_local_times(net, v0, t, reps, sub_seed(seed, 0))?;
    let oracle = ResistanceOracle::with_ground(net, v0)?;
    let sampler = GffSampler::new(&oracle)?;
    let eta_left = sampler.samples(reps, sub_seed(seed, 1));
    let eta_right = sampler.samples(reps, sub_seed(seed, 2));
    let shift = (2.0 * t).sqrt();
    let mut coordinates = Vec::with_capacity(net.n());
    for x in 0..net.n() {
        let lhs: Vec<f64> = (0..reps)
            .map(|i| walks.local_samples[i][x] + 0.5 * eta_left[i][x].powi(2))
            .collect();
        // Expanded so that η = 0 gives exactly t.
        let rhs: Vec<f64> = eta_right
            .iter()
            .map(|e| t + shift * e[x] + 0.5 * e[x] * e[x])
            .collect();
        let sq = |v: &[f64]| v.iter().map(|a| a * a).collect::<Vec<_>>();
        let lhs_est = MeanEstimate::from_samples(&lhs);
        let rhs_est = MeanEstimate::from_samples(&rhs);
        let lhs_second = MeanEstimate::from_samples(&sq(&lhs));
        let rhs_second = MeanEstimate::from_samples(&sq(&rhs));
        coordinates.push(RayKnightCoordinate {
            vertex: x,
            local: walks.local[x],
            local_z: walks.local[x].z_against_value(t),
            mean_z: lhs_est.z_against(&rhs_est),
            second_z: lhs_second.z_against(&rhs_second),
            ks: ks_statistic(&lhs, &rhs),
            lhs: lhs_est,
            rhs: rhs_est,
            lhs_second,
            rhs_second,
        });
    }
    let worst = |f: fn(&RayKnightCoordinate) -> f64| coordinates.iter().map(f).fold(0.0, f64::max);
    Ok(RayKnightReport {
        v0,
        t,
        reps,
        seed,
        tau: walks.tau,
        max_local_z: worst(|c| c.local_z),
        max_mean_z: worst(|c| c.mean_z),
        max_second_z: worst(|c| c.second_z),
        max_ks: worst(|c| c.ks),
        coordinates,
    })
}

/// Expected hitting time `E_u T_v` in jumps, estimated from `reps` paths.
pub fn hitting_time_estimate(
    net: &Network,
    u: VertexId,
    v: VertexId,
    reps: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    check_vertex(net, u)?;
    check_vertex(net, v)?;
    let walker = Walker::new(net);
    let samples: Vec<f64> = par_replicas(reps, |i| {
        let mut rng = stream(seed, i);
        let (mut x, mut steps) = (u, 0u64);
        while x != v {
            if steps >= walker.budget {
                return Err(WalkError::StepBudgetExceeded(walker.budget).into());
            }
            x = walker.jump(x, &mut rng);
            steps += 1;
        }
        Ok(steps as f64)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(MeanEstimate::from_samples(&samples))
}

/// Frequency of the walk from `v` reaching `u` before returning to `v`.
pub fn escape_frequency(
    net: &Network,
    v: VertexId,
    u: VertexId,
    reps: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    check_vertex(net, u)?;
    check_vertex(net, v)?;
    if u == v {
        return Err(WalkError::InvalidRule("escape target equals the start".into()).into());
    }
    let walker = Walker::new(net);
    let samples: Vec<f64> = par_replicas(reps, |i| {
        let mut rng = stream(seed, i);
        let mut x = walker.jump(v, &mut rng);
        let mut steps = 1u64;
        while x != u && x != v {
            if steps >= walker.budget {
                return Err(WalkError::StepBudgetExceeded(walker.budget).into());
            }
            x = walker.jump(x, &mut rng);
            steps += 1;
        }
        Ok(if x == u { 1.0 } else { 0.0 })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(MeanEstimate::from_samples(&samples))
}

/// Long-run visit frequencies with batch-means standard errors.
pub fn occupation_frequencies(
    net: &Network,
    start: VertexId,
    steps: u64,
    batches: usize,
    seed: u64,
) -> Result<Vec<MeanEstimate>> {
    check_vertex(net, start)?;
    let batches = batches.max(2);
    let per = (steps / batches as u64).max(1);
    let walker = Walker::new(net);
    let mut rng = stream(seed, 0);
    let n = net.n();
    let mut freq = vec![Vec::with_capacity(batches); n];
    let mut x = start;
    for _ in 0..batches {
        let mut counts = vec![0u64; n];
        for _ in 0..per {
            x = walker.jump(x, &mut rng);
            counts[x] += 1;
        }
        for v in 0..n {
            freq[v].push(counts[v] as f64 / per as f64);
        }
    }
    Ok(freq.iter().map(|f| MeanEstimate::from_samples(f)).collect())
}
