//! Exponential-metric weight grids and the shortest-path distance queries
//! built on them: point/set, across-shell, around-shell (ray surrogate),
//! internal (masked), and ensemble medians.

mod dijkstra;

pub use dijkstra::BallSweeper;

use crate::field::{FieldSample, GridSpec};
use crate::numerics::stats;
use crate::rng::{stream_rng, StreamKind};
use dijkstra::{reconstruct_path, sweep};

pub const WEIGHT_EXP_LIMIT: f64 = 700.0;

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("coupling parameters invalid: {0}")]
    BadParams(String),
    #[error("field must be mollified (epsilon > 0) before weighting")]
    Unmollified,
    #[error("exp overflow: |xi h| > {WEIGHT_EXP_LIMIT} at {count} sites (first: {first:?})")]
    WeightOverflow { count: usize, first: Vec<usize> },
    #[error("empty source or destination set")]
    EmptySiteSet,
    #[error("site {0} lies outside the query domain")]
    OutsideDomain(usize),
    #[error("shell unresolvable: gap {gap} needs at least 3 x spacing {spacing}")]
    UnresolvableShell { gap: f64, spacing: f64 },
    #[error("shell invalid: {0}")]
    BadShell(String),
    #[error("ray at radius {0} leaves the half-box (box side {1})")]
    RayExit(f64, f64),
    #[error("need at least {need} rays, got {got}")]
    TooFewRays { got: usize, need: usize },
    #[error("ensemble of {got} is below the required {need}")]
    InsufficientEnsemble { got: usize, need: usize },
    #[error("sample {seed} produced an infinite distance")]
    InfiniteSample { seed: u64 },
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
    #[error(transparent)]
    Kernel(#[from] crate::kernel::KernelError),
}

/// Coupling exponents: gamma in (0, sqrt(2d)), xi > 0, Q = d/gamma + gamma/2,
/// d_gamma = gamma / xi.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CouplingParams {
    pub dimension_d: u32,
    pub gamma: f64,
    pub xi: f64,
    pub q_exponent: f64,
    pub d_gamma: f64,
}

impl CouplingParams {
    pub fn new(d: u32, gamma: f64, xi: f64) -> Result<Self, MetricError> {
        let max_gamma = (2.0 * d as f64).sqrt();
        if !(gamma > 0.0 && gamma < max_gamma) {
            return Err(MetricError::BadParams(format!(
                "gamma = {gamma} outside (0, sqrt(2d)) = (0, {max_gamma})"
            )));
        }
        if !(xi > 0.0) {
            return Err(MetricError::BadParams(format!("xi = {xi} must be > 0")));
        }
        let q_exponent = d as f64 / gamma + gamma / 2.0;
        debug_assert!(q_exponent > max_gamma);
        Ok(Self {
            dimension_d: d,
            gamma,
            xi,
            q_exponent,
            d_gamma: gamma / xi,
        })
    }

    /// The d = 2 point with a known closed form: gamma = sqrt(8/3),
    /// xi = 1/sqrt(6), Q = 5/sqrt(6), d_gamma = 4.
    pub fn brownian_map_point() -> Self {
        Self::new(2, (8.0f64 / 3.0).sqrt(), 1.0 / 6.0f64.sqrt()).unwrap()
    }

    pub fn xi_q(&self) -> f64 {
        self.xi * self.q_exponent
    }
}

/// Exponential vertex weights e^{xi h(site)}.
#[derive(Debug, Clone)]
pub struct WeightGrid {
    pub grid: GridSpec,
    pub vertex_weights: Vec<f64>,
    pub xi: f64,
    /// seed of the source field
    pub source_field_id: u64,
}

pub fn weight_grid(field: &FieldSample, params: &CouplingParams) -> Result<WeightGrid, MetricError> {
    if field.epsilon <= 0.0 {
        return Err(MetricError::Unmollified);
    }
    weight_grid_unchecked(field, params.xi)
}

/// Weight grid from arbitrary (possibly synthetic) field values.
pub fn weight_grid_unchecked(field: &FieldSample, xi: f64) -> Result<WeightGrid, MetricError> {
    let mut offending = Vec::new();
    for (i, &h) in field.values.iter().enumerate() {
        if (xi * h).abs() > WEIGHT_EXP_LIMIT {
            if offending.len() < 8 {
                offending.push(i);
            }
        }
    }
    if !offending.is_empty() {
        return Err(MetricError::WeightOverflow {
            count: offending.len(),
            first: offending,
        });
    }
    let vertex_weights: Vec<f64> = field.values.iter().map(|&h| (xi * h).exp()).collect();
    Ok(WeightGrid {
        grid: field.grid,
        vertex_weights,
        xi,
        source_field_id: field.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Stencil {
    /// all 3^d - 1 neighbors with true Euclidean edge lengths
    Moore,
    /// 2d axis neighbors (exact L1 geometry on unit weights)
    Axes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum DistanceKind {
    PointPoint,
    PointSet,
    SetSet,
    Across,
    Around,
    Internal,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DistanceResult {
    pub value: f64,
    pub kind: DistanceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_mask_id: Option<u64>,
}

fn kind_for(src: usize, dst: usize, domain: bool) -> DistanceKind {
    if domain {
        DistanceKind::Internal
    } else if src == 1 && dst == 1 {
        DistanceKind::PointPoint
    } else if src == 1 || dst == 1 {
        DistanceKind::PointSet
    } else {
        DistanceKind::SetSet
    }
}

fn mask_id(domain: Option<&[bool]>) -> Option<u64> {
    domain.map(|m| {
        let mut h: u64 = 0xcbf29ce484222325;
        for (i, &b) in m.iter().enumerate() {
            if b {
                h ^= i as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    })
}

/// Graph shortest-path distance between site sets, optionally restricted to
/// a domain mask. Disconnection yields +infinity (flagged, not an error).
pub fn distance(
    weights: &WeightGrid,
    stencil: Stencil,
    src: &[usize],
    dst: &[usize],
    domain: Option<&[bool]>,
) -> Result<DistanceResult, MetricError> {
    distance_impl(weights, stencil, src, dst, domain, false)
}

/// As `distance`, with the realizing site path recorded.
pub fn distance_with_path(
    weights: &WeightGrid,
    stencil: Stencil,
    src: &[usize],
    dst: &[usize],
    domain: Option<&[bool]>,
) -> Result<DistanceResult, MetricError> {
    distance_impl(weights, stencil, src, dst, domain, true)
}

fn distance_impl(
    weights: &WeightGrid,
    stencil: Stencil,
    src: &[usize],
    dst: &[usize],
    domain: Option<&[bool]>,
    want_path: bool,
) -> Result<DistanceResult, MetricError> {
    if src.is_empty() || dst.is_empty() {
        return Err(MetricError::EmptySiteSet);
    }
    if let Some(dom) = domain {
        for &s in src.iter().chain(dst) {
            if !dom[s] {
                return Err(MetricError::OutsideDomain(s));
            }
        }
    }
    let total = weights.grid.total_sites();
    let mut dst_mask = vec![false; total];
    for &t in dst {
        dst_mask[t] = true;
    }
    let sweep_out = sweep(weights, stencil, src, Some(&dst_mask), domain)?;
    let kind = kind_for(src.len(), dst.len(), domain.is_some());
    match sweep_out.reached {
        Some(end) => {
            let value = sweep_out.dist[end as usize];
            let path = want_path.then(|| reconstruct_path(&sweep_out.parent, end as usize));
            Ok(DistanceResult {
                value,
                kind,
                path,
                domain_mask_id: mask_id(domain),
            })
        }
        None => Ok(DistanceResult {
            value: f64::INFINITY,
            kind,
            path: None,
            domain_mask_id: mask_id(domain),
        }),
    }
}

/// Shell between two concentric spheres.
#[derive(Debug, Clone, Copy)]
pub struct ShellSpec {
    pub center: [f64; 4],
    pub r_inner: f64,
    pub r_outer: f64,
}

impl ShellSpec {
    pub fn new(center: [f64; 4], r_inner: f64, r_outer: f64) -> Result<Self, MetricError> {
        if !(0.0 < r_inner && r_inner < r_outer) {
            return Err(MetricError::BadShell(format!(
                "need 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"
            )));
        }
        Ok(Self {
            center,
            r_inner,
            r_outer,
        })
    }
}

/// Sites within spacing/2 of the sphere of the given radius.
pub fn sphere_sites(grid: &GridSpec, center: &[f64], radius: f64) -> Vec<usize> {
    let a = grid.spacing;
    let d = grid.dimension_d as usize;
    let mut out = Vec::new();
    let mut p = [0.0f64; 4];
    for idx in 0..grid.total_sites() {
        let c = grid.coords(idx);
        for i in 0..d {
            p[i] = c[i] as f64 * a;
        }
        let r = grid.torus_dist(&p[..d], &center[..d]);
        if (r - radius).abs() <= a / 2.0 {
            out.push(idx);
        }
    }
    out
}

/// Closed-shell mask: r_inner - a/2 <= dist <= r_outer + a/2.
pub fn shell_mask(grid: &GridSpec, shell: &ShellSpec) -> Vec<bool> {
    let a = grid.spacing;
    let d = grid.dimension_d as usize;
    let mut mask = vec![false; grid.total_sites()];
    let mut p = [0.0f64; 4];
    for (idx, m) in mask.iter_mut().enumerate() {
        let c = grid.coords(idx);
        for i in 0..d {
            p[i] = c[i] as f64 * a;
        }
        let r = grid.torus_dist(&p[..d], &shell.center[..d]);
        *m = r >= shell.r_inner - a / 2.0 && r <= shell.r_outer + a / 2.0;
    }
    mask
}

fn check_shell(weights: &WeightGrid, shell: &ShellSpec) -> Result<(), MetricError> {
    let a = weights.grid.spacing;
    let gap = shell.r_outer - shell.r_inner;
    if gap < 3.0 * a {
        return Err(MetricError::UnresolvableShell { gap, spacing: a });
    }
    if 2.0 * shell.r_outer > weights.grid.box_side() {
        return Err(MetricError::RayExit(shell.r_outer, weights.grid.box_side()));
    }
    Ok(())
}

/// Distance across a shell: between its boundary spheres, within the closed
/// shell.
pub fn across_distance(
    weights: &WeightGrid,
    stencil: Stencil,
    shell: &ShellSpec,
) -> Result<DistanceResult, MetricError> {
    check_shell(weights, shell)?;
    let grid = &weights.grid;
    let inner = sphere_sites(grid, &shell.center, shell.r_inner);
    let outer = sphere_sites(grid, &shell.center, shell.r_outer);
    let mask = shell_mask(grid, shell);
    let mut res = distance(weights, stencil, &inner, &outer, Some(&mask))?;
    res.kind = DistanceKind::Across;
    Ok(res)
}

/// Deterministic quasi-uniform direction sequence with nested prefixes:
/// +e1, -e1, then a golden-angle (d = 2) or Fibonacci-lattice (d = 3)
/// low-discrepancy tail.
pub fn ray_directions(d: u32, n_rays: usize) -> Vec<[f64; 4]> {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut out = Vec::with_capacity(n_rays);
    for j in 0..n_rays {
        match j {
            0 => out.push([1.0, 0.0, 0.0, 0.0]),
            1 => out.push([-1.0, 0.0, 0.0, 0.0]),
            _ => {
                let u = (j as f64 / golden).fract();
                if d == 2 {
                    let theta = 2.0 * std::f64::consts::PI * u;
                    out.push([theta.cos(), theta.sin(), 0.0, 0.0]);
                } else {
                    // van der Corput base 2 for the polar coordinate
                    let mut z = 0.0f64;
                    let mut denom = 0.5;
                    let mut k = j;
                    while k > 0 {
                        if k & 1 == 1 {
                            z += denom;
                        }
                        denom *= 0.5;
                        k >>= 1;
                    }
                    let zc = 1.0 - 2.0 * z;
                    let rho = (1.0 - zc * zc).max(0.0).sqrt();
                    let theta = 2.0 * std::f64::consts::PI * u;
                    out.push([rho * theta.cos(), rho * theta.sin(), zc, 0.0]);
                }
            }
        }
    }
    out
}

/// Discrete radial crossing path: nearest sites to the segment from
/// center + r_inner dir to center + r_outer dir, stepped at spacing/2.
pub fn ray_sites(grid: &GridSpec, shell: &ShellSpec, dir: &[f64; 4]) -> Vec<usize> {
    let a = grid.spacing;
    let d = grid.dimension_d as usize;
    let n = grid.n_per_axis;
    let steps = (2.0 * (shell.r_outer - shell.r_inner) / a).ceil() as usize + 1;
    let mut out = Vec::new();
    let mut p = [0.0f64; 4];
    for s in 0..=steps {
        let r = shell.r_inner + (shell.r_outer - shell.r_inner) * s as f64 / steps as f64;
        let mut idx = 0usize;
        for i in 0..d {
            p[i] = shell.center[i] + r * dir[i];
            let c = (p[i] / a).round().rem_euclid(n as f64) as usize % n;
            idx = idx * n + c;
        }
        if out.last() != Some(&idx) {
            out.push(idx);
        }
    }
    out
}

/// Lower-bound surrogate of the around-shell distance: the max over ray
/// pairs of the internal distance between discrete radial crossing paths.
/// Monotone nondecreasing in n_rays (prefix-nested directions).
pub fn around_distance(
    weights: &WeightGrid,
    stencil: Stencil,
    shell: &ShellSpec,
    n_rays: usize,
) -> Result<DistanceResult, MetricError> {
    if n_rays < 2 {
        return Err(MetricError::TooFewRays {
            got: n_rays,
            need: 2,
        });
    }
    check_shell(weights, shell)?;
    let grid = &weights.grid;
    let dirs = ray_directions(grid.dimension_d, n_rays);
    let rays: Vec<Vec<usize>> = dirs
        .iter()
        .map(|dir| ray_sites(grid, shell, dir))
        .collect();
    let mut mask = shell_mask(grid, shell);
    // crossing paths must live in the queried domain
    for ray in &rays {
        for &s in ray {
            mask[s] = true;
        }
    }
    let mut best = 0.0f64;
    for (i, ray) in rays.iter().enumerate() {
        let sweep_out = sweep(weights, stencil, ray, None, Some(&mask))?;
        for other in rays.iter().skip(i + 1) {
            let pair = other
                .iter()
                .map(|&s| sweep_out.dist[s])
                .fold(f64::INFINITY, f64::min);
            best = best.max(pair);
        }
    }
    Ok(DistanceResult {
        value: best,
        kind: DistanceKind::Around,
        path: None,
        domain_mask_id: mask_id(Some(&mask)),
    })
}

/// Empirical median with a seeded percentile-bootstrap interval.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MedianReport {
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// Median of an ensemble of distance values (each from an independent seed).
/// Any infinite sample is an error: the query must stay safely inside the
/// torus.
pub fn median_distance(values: &[f64], bootstrap_seed: u64) -> Result<MedianReport, MetricError> {
    if values.len() < 100 {
        return Err(MetricError::InsufficientEnsemble {
            got: values.len(),
            need: 100,
        });
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(MetricError::InfiniteSample { seed: pos as u64 });
    }
    let med = stats::median(values);
    let mut rng = stream_rng(bootstrap_seed, StreamKind::Bootstrap, 0, 0);
    let (ci_low, ci_high) = stats::bootstrap_median_ci(values, 400, 0.95, &mut rng);
    Ok(MedianReport {
        median: med,
        ci_low,
        ci_high,
        n: values.len(),
    })
}

/// Snap a physical point to its nearest site index.
pub fn site_at(grid: &GridSpec, point: &[f64]) -> usize {
    let n = grid.n_per_axis;
    let d = grid.dimension_d as usize;
    let mut idx = 0usize;
    for i in 0..d {
        let c = (point[i] / grid.spacing).round().rem_euclid(n as f64) as usize % n;
        idx = idx * n + c;
    }
    idx
}

#[cfg(test)]
mod tests;
