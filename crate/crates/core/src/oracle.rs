//! Exact in-memory triangle statistics for graphs that fit in memory.

use num_rational::Ratio;

use crate::binning::{BinConfig, BinId};
use crate::error::{Error, Result};
use crate::graph_io::{EdgeList, VertexId};

pub type Exact = Ratio<u128>;

pub const DEFAULT_EDGE_LIMIT: u64 = 10_000_000;

/// Undirected graph in compressed sparse row form with sorted neighbor lists.
#[derive(Clone, Debug)]
pub struct Graph {
    ids: Vec<VertexId>,
    offsets: Vec<usize>,
    adj: Vec<u32>,
}

impl Graph {
    pub fn from_edges(edges: &EdgeList) -> Result<Self> {
        Self::with_limit(edges, DEFAULT_EDGE_LIMIT)
    }

    /// Build from an edge list, dropping self-edges and repeated edges.
    pub fn with_limit(edges: &EdgeList, limit: u64) -> Result<Self> {
        let m = edges.len() as u64;
        if m > limit {
            return Err(Error::OracleLimit { edges: m, limit });
        }
        let mut ids: Vec<VertexId> = edges.edges.iter().flat_map(|e| [e.v, e.w]).collect();
        ids.sort_unstable();
        ids.dedup();
        let local = |v: VertexId| ids.binary_search(&v).unwrap() as u32;
        let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(edges.len() * 2);
        for e in &edges.edges {
            if e.v == e.w {
                continue;
            }
            let (a, b) = (local(e.v), local(e.w));
            pairs.push((a, b));
            pairs.push((b, a));
        }
        pairs.sort_unstable();
        pairs.dedup();
        // Vertices that only had self-edges keep degree zero; drop them.
        let mut offsets = vec![0usize; ids.len() + 1];
        for &(a, _) in &pairs {
            offsets[a as usize + 1] += 1;
        }
        let keep: Vec<bool> = (0..ids.len()).map(|i| offsets[i + 1] > 0).collect();
        if keep.iter().all(|&k| k) {
            for i in 0..ids.len() {
                offsets[i + 1] += offsets[i];
            }
            let adj = pairs.into_iter().map(|(_, b)| b).collect();
            return Ok(Graph { ids, offsets, adj });
        }
        let kept: Vec<(VertexId, VertexId)> = pairs
            .iter()
            .filter(|(a, b)| a < b)
            .map(|&(a, b)| (ids[a as usize], ids[b as usize]))
            .collect();
        Self::with_limit(&EdgeList::from_pairs(&kept), limit)
    }

    pub fn from_pairs(pairs: &[(VertexId, VertexId)]) -> Result<Self> {
        Self::from_edges(&EdgeList::from_pairs(pairs))
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn m(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    fn neighbors_local(&self, i: usize) -> &[u32] {
        &self.adj[self.offsets[i]..self.offsets[i + 1]]
    }

    fn local(&self, v: VertexId) -> Option<usize> {
        self.ids.binary_search(&v).ok()
    }

    pub fn degree(&self, v: VertexId) -> Option<u64> {
        self.local(v)
            .map(|i| (self.offsets[i + 1] - self.offsets[i]) as u64)
    }

    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        match self.local(v) {
            Some(i) => self
                .neighbors_local(i)
                .iter()
                .map(|&j| self.ids[j as usize])
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn has_edge(&self, v: VertexId, w: VertexId) -> bool {
        match (self.local(v), self.local(w)) {
            (Some(a), Some(b)) => self.neighbors_local(a).binary_search(&(b as u32)).is_ok(),
            _ => false,
        }
    }

    pub fn max_degree(&self) -> u64 {
        (0..self.n())
            .map(|i| (self.offsets[i + 1] - self.offsets[i]) as u64)
            .max()
            .unwrap_or(0)
    }

    /// Local-index triangles `(a, b, c)` with `a < b < c`, via the forward
    /// algorithm: orient each edge toward the endpoint of higher
    /// `(degree, id)` rank and intersect out-lists.
    fn triangles_local(&self) -> Vec<[u32; 3]> {
        let n = self.n();
        let deg = |i: usize| self.offsets[i + 1] - self.offsets[i];
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_unstable_by_key(|&i| (deg(i as usize), i));
        let mut rank = vec![0u32; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i as usize] = r as u32;
        }
        let out: Vec<Vec<u32>> = (0..n)
            .map(|i| {
                let mut o: Vec<u32> = self
                    .neighbors_local(i)
                    .iter()
                    .copied()
                    .filter(|&j| rank[j as usize] > rank[i])
                    .collect();
                o.sort_unstable_by_key(|&j| rank[j as usize]);
                o
            })
            .collect();
        let mut tris = Vec::new();
        for u in 0..n {
            for &v in &out[u] {
                let (a, b) = (&out[u], &out[v as usize]);
                let (mut x, mut y) = (0, 0);
                while x < a.len() && y < b.len() {
                    let (ra, rb) = (rank[a[x] as usize], rank[b[y] as usize]);
                    if ra < rb {
                        x += 1;
                    } else if rb < ra {
                        y += 1;
                    } else {
                        let mut t = [u as u32, v, a[x]];
                        t.sort_unstable();
                        tris.push(t);
                        x += 1;
                        y += 1;
                    }
                }
            }
        }
        tris.sort_unstable();
        tris
    }

    /// Every triangle once, as ascending vertex ids, in sorted order.
    pub fn triangles(&self) -> Vec<[VertexId; 3]> {
        self.triangles_local()
            .into_iter()
            .map(|t| t.map(|i| self.ids[i as usize]))
            .collect()
    }
}

pub fn enumerate_triangles(g: &Graph) -> Vec<[VertexId; 3]> {
    g.triangles()
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeStats {
    pub vertex: VertexId,
    pub degree: u64,
    pub wedges: u64,
    pub triangles: u64,
    /// `None` when the vertex centers no wedge.
    pub cc: Option<Exact>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactBinStats {
    pub bin: BinId,
    pub vertices: u64,
    pub wedges: u64,
    /// Wedges by how many of their vertices fall in the bin: open wedges at
    /// index 0, closed wedges at 1..=3.
    pub by_kind: [u64; 4],
    pub cc: Option<Exact>,
    pub triangles: Exact,
}

impl ExactBinStats {
    /// The clustering coefficient with empty bins read as zero.
    pub fn cc_or_zero(&self) -> Exact {
        self.cc.unwrap_or_else(|| Exact::from_integer(0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactStats {
    pub n: u64,
    pub m: u64,
    pub p: u64,
    pub t: u64,
    pub cc: Option<Exact>,
    pub nodes: Vec<NodeStats>,
    pub bins: Vec<ExactBinStats>,
}

fn choose2(d: u64) -> u64 {
    d * d.saturating_sub(1) / 2
}

pub fn exact_stats(g: &Graph, cfg: &BinConfig) -> Result<ExactStats> {
    let n = g.n();
    let tris = g.triangles_local();
    let degree: Vec<u64> = (0..n)
        .map(|i| (g.offsets[i + 1] - g.offsets[i]) as u64)
        .collect();
    let bin: Vec<BinId> = degree.iter().map(|&d| cfg.bin_id(d)).collect::<Result<_>>()?;

    let mut node_tris = vec![0u64; n];
    let max_bin = bin.iter().copied().max().unwrap_or(0) as usize;
    let mut by_kind = vec![[0u64; 4]; max_bin + 1];
    for t in &tris {
        for corner in 0..3 {
            let c = t[corner] as usize;
            node_tris[c] += 1;
            let b = bin[c];
            let inside = 1
                + (0..3)
                    .filter(|&j| j != corner && bin[t[j] as usize] == b)
                    .count();
            by_kind[b as usize][inside] += 1;
        }
    }

    let mut bins: Vec<ExactBinStats> = Vec::new();
    let mut vertices = vec![0u64; max_bin + 1];
    let mut wedges = vec![0u64; max_bin + 1];
    for i in 0..n {
        vertices[bin[i] as usize] += 1;
        wedges[bin[i] as usize] += choose2(degree[i]);
    }
    for b in 1..=max_bin {
        if vertices[b] == 0 {
            continue;
        }
        let mut kinds = by_kind[b];
        let closed: u64 = kinds[1..].iter().sum();
        kinds[0] = wedges[b] - closed;
        let six_t = 6 * kinds[1] as u128 + 3 * kinds[2] as u128 + 2 * kinds[3] as u128;
        bins.push(ExactBinStats {
            bin: b as BinId,
            vertices: vertices[b],
            wedges: wedges[b],
            by_kind: kinds,
            cc: (wedges[b] > 0).then(|| Exact::new(closed as u128, wedges[b] as u128)),
            triangles: Exact::new(six_t, 6),
        });
    }

    let nodes = (0..n)
        .map(|i| {
            let p = choose2(degree[i]);
            NodeStats {
                vertex: g.ids[i],
                degree: degree[i],
                wedges: p,
                triangles: node_tris[i],
                cc: (p > 0).then(|| Exact::new(node_tris[i] as u128, p as u128)),
            }
        })
        .collect();
    let p: u64 = wedges.iter().sum();
    let t = tris.len() as u64;
    Ok(ExactStats {
        n: n as u64,
        m: g.m() as u64,
        p,
        t,
        cc: (p > 0).then(|| Exact::new(3 * t as u128, p as u128)),
        nodes,
        bins,
    })
}
