//! Synthetic graphs: noisy stochastic Kronecker (Graph500 style) and
//! Erdős–Rényi.

use std::path::Path;

use rand::seq::index;
use rand::Rng;

use crate::engine::{decode_all, derive_rng, unit_f64, Emit, Engine, JobStats, MapContext, Task, Values};
use crate::error::{Error, Result};
use crate::graph_io::{Edge, EdgeList, VertexId};

/// Candidates drawn from one random stream.
pub const BLOCK_SIZE: u64 = 1 << 16;

/// Blocks per engine map task when generating out of core.
const BLOCKS_PER_TASK: u64 = 64;

pub const JOB_DEDUP: &str = "skg-dedup";

/// Stochastic Kronecker generator parameters.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SkgConfig {
    pub scale: u32,
    pub edge_factor: u64,
    /// `[a, b; c, d]` in row-major order.
    pub matrix: [f64; 4],
    /// Per-level perturbations are uniform in `[-noise, noise]`.
    pub noise: f64,
}

impl Default for SkgConfig {
    fn default() -> Self {
        SkgConfig {
            scale: 16,
            edge_factor: 16,
            matrix: [0.57, 0.19, 0.19, 0.05],
            noise: 0.1,
        }
    }
}

impl SkgConfig {
    pub fn new(scale: u32, edge_factor: u64, noise: f64) -> Result<Self> {
        let cfg = SkgConfig {
            scale,
            edge_factor,
            noise,
            ..SkgConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=40).contains(&self.scale) {
            return Err(Error::Config(format!("scale must be in 1..=40, got {}", self.scale)));
        }
        if self.matrix.iter().any(|&x| x.is_nan() || x < 0.0) {
            return Err(Error::Config("matrix entries must be nonnegative".into()));
        }
        let sum: f64 = self.matrix.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("matrix entries sum to {sum}, not 1")));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return Err(Error::Config(format!("noise must be in [0, 0.5), got {}", self.noise)));
        }
        let [a, b, c, d] = self.matrix;
        if self.noise > 0.0 && (self.noise > b.min(c) || 2.0 * self.noise > a + d) {
            return Err(Error::Config(format!(
                "noise {} can push matrix entries below zero",
                self.noise
            )));
        }
        Ok(())
    }

    pub fn vertices(&self) -> u64 {
        1 << self.scale
    }

    /// Number of candidate edges drawn.
    pub fn candidate_count(&self) -> u64 {
        self.edge_factor << self.scale
    }

    /// The matrix used at each recursion level. Level `l` draws `mu` uniform
    /// in `[-b, b]` and uses
    /// `[a - 2 mu a / (a + d), b + mu; c + mu, d - 2 mu d / (a + d)]`,
    /// which keeps the sum at 1.
    pub fn level_matrices(&self, seed: u64) -> Vec<[f64; 4]> {
        let mut rng = derive_rng(seed, "skg-noise", 0);
        let [a, b, c, d] = self.matrix;
        (0..self.scale)
            .map(|_| {
                if self.noise == 0.0 {
                    return self.matrix;
                }
                let mu = rng.random_range(-self.noise..=self.noise);
                [a - 2.0 * mu * a / (a + d), b + mu, c + mu, d - 2.0 * mu * d / (a + d)]
            })
            .collect()
    }
}

/// Raw `(row, column)` candidates of block `block`, before symmetrization
/// and deduplication.
pub fn candidates(
    cfg: &SkgConfig,
    levels: &[[f64; 4]],
    seed: u64,
    block: u64,
) -> impl Iterator<Item = (VertexId, VertexId)> {
    let start = block * BLOCK_SIZE;
    let count = cfg.candidate_count().saturating_sub(start).min(BLOCK_SIZE);
    let mut rng = derive_rng(seed, "skg-candidates", block);
    let cum: Vec<[f64; 3]> = levels
        .iter()
        .map(|m| [m[0], m[0] + m[1], m[0] + m[1] + m[2]])
        .collect();
    (0..count).map(move |_| {
        let (mut row, mut col) = (0u64, 0u64);
        for (level, t) in cum.iter().enumerate() {
            let u = unit_f64(rng.random());
            let (r, c) = if u < t[0] {
                (0, 0)
            } else if u < t[1] {
                (0, 1)
            } else if u < t[2] {
                (1, 0)
            } else {
                (1, 1)
            };
            row |= r << level;
            col |= c << level;
        }
        (row, col)
    })
}

fn block_count(cfg: &SkgConfig) -> u64 {
    cfg.candidate_count().div_ceil(BLOCK_SIZE)
}

fn canonical(v: VertexId, w: VertexId) -> Option<(VertexId, VertexId)> {
    (v != w).then(|| (v.min(w), v.max(w)))
}

/// Generate an SKG graph in memory: self-edges and duplicates are removed and
/// edges are returned sorted with `v < w`.
pub fn generate_skg(cfg: &SkgConfig, seed: u64) -> Result<EdgeList> {
    cfg.validate()?;
    let levels = cfg.level_matrices(seed);
    let mut pairs: Vec<(VertexId, VertexId)> = (0..block_count(cfg))
        .flat_map(|b| candidates(cfg, &levels, seed, b))
        .filter_map(|(v, w)| canonical(v, w))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    Ok(EdgeList::from_pairs(&pairs))
}

/// Generate an SKG graph through the engine so duplicate removal runs as an
/// external sort. Writes part files into `out`; the edge set equals that of
/// [`generate_skg`] with the same seed.
pub fn generate_skg_to_dir(cfg: &SkgConfig, seed: u64, engine: &Engine, out: &Path) -> Result<JobStats> {
    cfg.validate()?;
    let levels = cfg.level_matrices(seed);
    let levels = &levels;
    let blocks = block_count(cfg);
    let tasks = (0..blocks.div_ceil(BLOCKS_PER_TASK))
        .map(|t| {
            Task::new(move |ctx: &mut MapContext<'_>| {
                let end = ((t + 1) * BLOCKS_PER_TASK).min(blocks);
                for b in t * BLOCKS_PER_TASK..end {
                    for (v, w) in candidates(cfg, levels, seed, b) {
                        ctx.count_input(1);
                        if let Some(e) = canonical(v, w) {
                            ctx.emit(&e, &(), &())?;
                        }
                    }
                }
                Ok(())
            })
        })
        .collect();
    engine.run_to_dir(
        JOB_DEDUP,
        tasks,
        |key: &[u8], _values: &mut Values<'_>, out: &mut Emit<'_, Edge>| {
            let (v, w): (VertexId, VertexId) = decode_all(key)?;
            out.emit(Edge::new(v, w))
        },
        out,
    )
}

/// `m` distinct edges drawn uniformly among the `C(n, 2)` vertex pairs on
/// vertices `0..n`.
pub fn generate_er<R: Rng + ?Sized>(n: u64, m: u64, rng: &mut R) -> Result<EdgeList> {
    let pairs = n as u128 * n.saturating_sub(1) as u128 / 2;
    if m as u128 > pairs {
        return Err(Error::Config(format!("{m} edges do not fit on {n} vertices")));
    }
    let space = usize::try_from(pairs)
        .map_err(|_| Error::Config(format!("{n} vertices is too many for uniform pair sampling")))?;
    let mut edges: Vec<(VertexId, VertexId)> = index::sample(rng, space, m as usize)
        .into_iter()
        .map(|i| pair_at(i as u64))
        .collect();
    edges.sort_unstable();
    Ok(EdgeList::from_pairs(&edges))
}

/// The `i`-th pair `(v, w)` with `v < w` in the order of increasing `w`.
fn pair_at(i: u64) -> (VertexId, VertexId) {
    let mut w = ((1.0 + (1.0 + 8.0 * i as f64).sqrt()) / 2.0) as u64;
    while w * (w - 1) / 2 > i {
        w -= 1;
    }
    while (w + 1) * w / 2 <= i {
        w += 1;
    }
    (i - w * (w - 1) / 2, w)
}
