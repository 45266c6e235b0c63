//! Standard graph families with unit conductances.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::NetworkError;
use crate::network::{Network, VertexId};

/// Cap on Erdős–Rényi redraws before giving up on connectivity.
const MAX_ER_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Complete(usize),
    Path(usize),
    Cycle(usize),
    /// Complete `b`-ary tree of height `h` (levels `0..=h`).
    BaryTree {
        b: usize,
        h: usize,
    },
    Grid {
        rows: usize,
        cols: usize,
    },
    ErdosRenyi {
        n: usize,
        p: f64,
        seed: u64,
    },
}

impl Family {
    pub fn generate(&self) -> Result<Network, NetworkError> {
        match *self {
            Family::Complete(n) => {
                check(n >= 2, "complete graph needs n >= 2")?;
                let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v, 1.0)));
                Network::with_vertex_count(n, edges)
            }
            Family::Path(n) => {
                check(n >= 2, "path needs n >= 2")?;
                Network::with_vertex_count(n, (1..n).map(|v| (v - 1, v, 1.0)))
            }
            Family::Cycle(n) => {
                check(n >= 3, "cycle needs n >= 3")?;
                Network::with_vertex_count(n, (0..n).map(|v| (v, (v + 1) % n, 1.0)))
            }
            Family::BaryTree { b, h } => {
                check(b >= 1 && h >= 1, "tree needs b >= 1 and h >= 1")?;
                let n: usize = (0..=h).map(|level| b.pow(level as u32)).sum();
                Network::with_vertex_count(n, (1..n).map(|v| ((v - 1) / b, v, 1.0)))
            }
            Family::Grid { rows, cols } => {
                check(
                    rows >= 1 && cols >= 1 && rows * cols >= 2,
                    "grid needs >= 2 cells",
                )?;
                let id = |r: usize, c: usize| r * cols + c;
                let mut edges = Vec::new();
                for r in 0..rows {
                    for c in 0..cols {
                        if c + 1 < cols {
                            edges.push((id(r, c), id(r, c + 1), 1.0));
                        }
                        if r + 1 < rows {
                            edges.push((id(r, c), id(r + 1, c), 1.0));
                        }
                    }
                }
                Network::with_vertex_count(rows * cols, edges)
            }
            Family::ErdosRenyi { n, p, seed } => {
                check(n >= 2, "G(n, p) needs n >= 2")?;
                check(p > 0.0 && p <= 1.0, "G(n, p) needs p in (0, 1]")?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..MAX_ER_ATTEMPTS {
                    let mut edges = Vec::new();
                    for u in 0..n {
                        for v in u + 1..n {
                            if rng.random::<f64>() < p {
                                edges.push((u, v, 1.0));
                            }
                        }
                    }
                    match Network::with_vertex_count(n, edges) {
                        Ok(net) => return Ok(net),
                        Err(NetworkError::Disconnected(_) | NetworkError::Empty) => continue,
                        Err(e) => return Err(e),
                    }
                }
                Err(NetworkError::InvalidParam(format!(
                    "G({n}, {p}) stayed disconnected after {MAX_ER_ATTEMPTS} draws"
                )))
            }
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), NetworkError> {
    if ok {
        Ok(())
    } else {
        Err(NetworkError::InvalidParam(msg.to_string()))
    }
}

impl FromStr for Family {
    type Err = NetworkError;

    /// Parses generator specs such as `complete:16`, `path:4`, `cycle:8`,
    /// `tree:2,5`, `grid:8` / `grid:4,6` and `er:20,0.3,1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| NetworkError::InvalidParam(format!("generator '{s}': {msg}"));
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| bad("expected kind:params"))?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let int = |i: usize| -> Result<usize, NetworkError> {
            args.get(i)
                .ok_or_else(|| bad("missing parameter"))?
                .parse()
                .map_err(|_| bad("expected an integer"))
        };
        let arity = |k: usize| -> Result<(), NetworkError> {
            if args.len() == k {
                Ok(())
            } else {
                Err(bad(&format!("expected {k} parameter(s)")))
            }
        };
        match kind.trim() {
            "complete" | "k" => {
                arity(1)?;
                Ok(Family::Complete(int(0)?))
            }
            "path" => {
                arity(1)?;
                Ok(Family::Path(int(0)?))
            }
            "cycle" => {
                arity(1)?;
                Ok(Family::Cycle(int(0)?))
            }
            "tree" | "bary" | "bary_tree" => {
                arity(2)?;
                Ok(Family::BaryTree {
                    b: int(0)?,
                    h: int(1)?,
                })
            }
            "grid" => {
                let rows = int(0)?;
                let cols = match args.len() {
                    1 => rows,
                    2 => int(1)?,
                    _ => return Err(bad("expected 1 or 2 parameters")),
                };
                Ok(Family::Grid { rows, cols })
            }
            "er" | "erdos_renyi" | "gnp" => {
                arity(3)?;
                let p = args[1].parse().map_err(|_| bad("expected a probability"))?;
                let seed = args[2].parse().map_err(|_| bad("expected a seed"))?;
                Ok(Family::ErdosRenyi {
                    n: int(0)?,
                    p,
                    seed,
                })
            }
            other => Err(bad(&format!("unknown family '{other}'"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Complete(n) => write!(f, "complete:{n}"),
            Family::Path(n) => write!(f, "path:{n}"),
            Family::Cycle(n) => write!(f, "cycle:{n}"),
            Family::BaryTree { b, h } => write!(f, "tree:{b},{h}"),
            Family::Grid { rows, cols } => write!(f, "grid:{rows},{cols}"),
            Family::ErdosRenyi { n, p, seed } => write!(f, "er:{n},{p},{seed}"),
        }
    }
}

/// Redraws every conductance uniformly from `[lo, hi)`, keeping the topology.
pub fn randomize_conductances(
    net: &Network,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<Network, NetworkError> {
    check(0.0 < lo && lo < hi, "need 0 < lo < hi")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<(VertexId, VertexId, f64)> = net
        .edges()
        .iter()
        .map(|e| (e.u, e.v, rng.random_range(lo..hi)))
        .collect();
    Network::with_vertex_count(net.n(), edges)
}

/// Random connected weighted network: a random spanning tree plus extra
/// edges with probability `p`, conductances uniform in `[0.1, 10)`.
pub fn random_connected(n: usize, p: f64, seed: u64) -> Result<Network, NetworkError> {
    check(n >= 2, "need n >= 2")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push((u, v, rng.random_range(0.1..10.0)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v, rng.random_range(0.1..10.0)));
            }
        }
    }
    Network::with_vertex_count(n, edges)
}
