//! Deterministic Dijkstra over periodic weighted grids.
//!
//! Vertex weights; edge cost = Euclidean edge length x mean of endpoint
//! weights. Heap ties break on site index so runs are fully deterministic.

use super::{MetricError, Stencil, WeightGrid};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    site: u32,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.site.cmp(&self.site))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(super) struct StencilOffsets {
    /// per-axis offsets (-1, 0, +1) and physical edge length
    pub offsets: Vec<([i64; 4], f64)>,
}

impl StencilOffsets {
    pub fn new(d: u32, spacing: f64, stencil: Stencil) -> Self {
        let d = d as usize;
        let mut offsets = Vec::new();
        let count = 3usize.pow(d as u32);
        for code in 0..count {
            let mut c = code;
            let mut off = [0i64; 4];
            let mut norm_sq = 0i64;
            for slot in off.iter_mut().take(d) {
                let t = (c % 3) as i64 - 1;
                c /= 3;
                *slot = t;
                norm_sq += t * t;
            }
            if norm_sq == 0 {
                continue;
            }
            if stencil == Stencil::Axes && norm_sq != 1 {
                continue;
            }
            offsets.push((off, spacing * (norm_sq as f64).sqrt()));
        }
        Self { offsets }
    }
}

/// Result of one Dijkstra sweep from a source set.
pub(super) struct Sweep {
    pub dist: Vec<f64>,
    pub parent: Vec<u32>,
    /// first destination settled, if a destination set was given
    pub reached: Option<u32>,
}

/// Multi-source Dijkstra. Stops at the first settled destination when
/// `dst_mask` is provided; otherwise settles the whole (masked) graph.
pub(super) fn sweep(
    weights: &WeightGrid,
    stencil: Stencil,
    sources: &[usize],
    dst_mask: Option<&[bool]>,
    domain: Option<&[bool]>,
) -> Result<Sweep, MetricError> {
    let grid = &weights.grid;
    let n = grid.n_per_axis;
    let total = grid.total_sites();
    let d = grid.dimension_d as usize;
    debug_assert!(n.is_power_of_two());
    let shift = n.trailing_zeros();
    let mask = (n - 1) as u64;

    let offs = StencilOffsets::new(grid.dimension_d, grid.spacing, stencil);
    let mut dist = vec![f64::INFINITY; total];
    let mut parent: Vec<u32> = (0..total as u32).collect();
    let mut heap = BinaryHeap::with_capacity(sources.len() * 4);
    for &s in sources {
        if let Some(dom) = domain {
            if !dom[s] {
                return Err(MetricError::OutsideDomain(s));
            }
        }
        dist[s] = 0.0;
        heap.push(State {
            cost: 0.0,
            site: s as u32,
        });
    }

    let w = &weights.vertex_weights;
    while let Some(State { cost, site }) = heap.pop() {
        let u = site as usize;
        if cost > dist[u] {
            continue;
        }
        if let Some(dm) = dst_mask {
            if dm[u] {
                return Ok(Sweep {
                    dist,
                    parent,
                    reached: Some(site),
                });
            }
        }
        // decode coordinates (n is a power of two)
        let mut coords = [0u64; 4];
        let mut idx = u as u64;
        for axis in (0..d).rev() {
            coords[axis] = idx & mask;
            idx >>= shift;
        }
        for (off, len) in &offs.offsets {
            let mut v = 0u64;
            for axis in 0..d {
                let c = (coords[axis] as i64 + off[axis]).rem_euclid(n as i64) as u64;
                v = (v << shift) | c;
            }
            let v = v as usize;
            if let Some(dom) = domain {
                if !dom[v] {
                    continue;
                }
            }
            let next = cost + len * 0.5 * (w[u] + w[v]);
            if next < dist[v] {
                dist[v] = next;
                parent[v] = site;
                heap.push(State {
                    cost: next,
                    site: v as u32,
                });
            }
        }
    }
    Ok(Sweep {
        dist,
        parent,
        reached: None,
    })
}

/// Reconstruct the site path ending at `end` (inclusive, source first).
pub(super) fn reconstruct_path(parent: &[u32], end: usize) -> Vec<usize> {
    let mut path = vec![end];
    let mut cur = end as u32;
    while parent[cur as usize] != cur {
        cur = parent[cur as usize];
        path.push(cur as usize);
    }
    path.reverse();
    path
}

/// Reusable radius-limited Dijkstra with epoch-stamped distances, for the
/// many-ball covering loops (no per-ball reinitialization).
pub struct BallSweeper {
    dist: Vec<f64>,
    stamp: Vec<u32>,
    epoch: u32,
    heap: BinaryHeap<State>,
}

impl BallSweeper {
    pub fn new(total_sites: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; total_sites],
            stamp: vec![0; total_sites],
            epoch: 0,
            heap: BinaryHeap::new(),
        }
    }

    /// Settle every site within metric radius `limit` of `src`, invoking
    /// `visit(site, dist)` on each (including the source at 0).
    pub fn ball<F: FnMut(usize, f64)>(
        &mut self,
        weights: &WeightGrid,
        stencil: Stencil,
        src: usize,
        limit: f64,
        mut visit: F,
    ) {
        let grid = &weights.grid;
        let n = grid.n_per_axis;
        let d = grid.dimension_d as usize;
        let shift = n.trailing_zeros();
        let mask = (n - 1) as u64;
        let offs = StencilOffsets::new(grid.dimension_d, grid.spacing, stencil);
        self.epoch += 1;
        let epoch = self.epoch;
        self.heap.clear();
        self.dist[src] = 0.0;
        self.stamp[src] = epoch;
        self.heap.push(State {
            cost: 0.0,
            site: src as u32,
        });
        let w = &weights.vertex_weights;
        while let Some(State { cost, site }) = self.heap.pop() {
            let u = site as usize;
            if cost > self.dist[u] {
                continue;
            }
            visit(u, cost);
            let mut coords = [0u64; 4];
            let mut idx = u as u64;
            for axis in (0..d).rev() {
                coords[axis] = idx & mask;
                idx >>= shift;
            }
            for (off, len) in &offs.offsets {
                let mut v = 0u64;
                for axis in 0..d {
                    let c = (coords[axis] as i64 + off[axis]).rem_euclid(n as i64) as u64;
                    v = (v << shift) | c;
                }
                let v = v as usize;
                let next = cost + len * 0.5 * (w[u] + w[v]);
                if next > limit {
                    continue;
                }
                if self.stamp[v] != epoch || next < self.dist[v] {
                    self.dist[v] = next;
                    self.stamp[v] = epoch;
                    self.heap.push(State {
                        cost: next,
                        site: v as u32,
                    });
                }
            }
        }
    }
}
