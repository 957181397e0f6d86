//! Ensemble drivers: seed-parallel pipelines that sample fields, build
//! metrics, and aggregate deterministic statistics.

use super::{box_counts, box_dimension, KpzReport, ScalingError};
use crate::field::{
    sample_spectral_lgf, sphere_average, FieldSample, GridKernel, GridSpec,
};
use crate::kernel::{cached_kernel, BumpProfile};
use crate::metric::{
    distance, median_distance, site_at, weight_grid, BallSweeper, CouplingParams, MedianReport,
    ShellSpec, Stencil, WeightGrid,
};
use crate::numerics::stats;
use rayon::prelude::*;

/// Shared ensemble shape: grid, mollification scale, seed range, stencil.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleConfig {
    pub grid: GridSpec,
    pub epsilon: f64,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub stencil: Stencil,
}

impl EnsembleConfig {
    pub fn seeds(&self) -> impl IndexedParallelIterator<Item = u64> {
        let base = self.base_seed;
        (0..self.n_seeds).into_par_iter().map(move |i| base + i as u64)
    }
}

/// Sample the base LGF and its mollification for one seed.
pub fn mollified_sample(
    grid: GridSpec,
    kernel: &GridKernel,
    seed: u64,
) -> Result<(FieldSample, FieldSample), ScalingError> {
    let base = sample_spectral_lgf(grid, seed)?;
    let moll = kernel.apply(&base)?;
    Ok((base, moll))
}

/// Medians of D^eps(0, e1) across the ensemble for each epsilon, reusing one
/// base field per seed across the epsilon list (common random numbers).
pub fn distance_medians(
    cfg: &EnsembleConfig,
    eps_list: &[f64],
    bump: &BumpProfile,
    params: &CouplingParams,
) -> Result<Vec<(f64, MedianReport)>, ScalingError> {
    let kernels: Vec<GridKernel> = eps_list
        .iter()
        .map(|&e| Ok(GridKernel::new(&cached_kernel(e, bump)?, cfg.grid, None)?))
        .collect::<Result<_, ScalingError>>()?;
    let d = cfg.grid.dimension_d as usize;
    let origin = [0.0f64; 4];
    let mut e1 = [0.0f64; 4];
    e1[0] = 1.0;
    let src = site_at(&cfg.grid, &origin[..d]);
    let dst = site_at(&cfg.grid, &e1[..d]);

    let rows: Vec<Result<Vec<f64>, ScalingError>> = cfg
        .seeds()
        .map(|seed| {
            let base = sample_spectral_lgf(cfg.grid, seed)?;
            let mut row = Vec::with_capacity(kernels.len());
            for kernel in &kernels {
                let moll = kernel.apply(&base)?;
                let w = weight_grid(&moll, params)?;
                let res = distance(&w, cfg.stencil, &[src], &[dst], None)?;
                row.push(res.value);
            }
            Ok(row)
        })
        .collect();
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_, _>>()?;

    let mut out = Vec::with_capacity(eps_list.len());
    for (j, &eps) in eps_list.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        out.push((eps, median_distance(&col, cfg.base_seed ^ j as u64)?));
    }
    Ok(out)
}

/// Scaling-constant check: medians of r^{-xi Q} e^{-xi h_r(0)} D(0, r e1)
/// across r, with the same statistic renormalized at a deliberately wrong
/// exponent as the negative control.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CrScalingReport {
    pub r_list: Vec<f64>,
    pub medians: Vec<f64>,
    pub ratio: f64,
    pub wrong_exponent_offset: f64,
    pub medians_wrong: Vec<f64>,
    pub ratio_wrong: f64,
}

pub fn check_c_r_scaling(
    params: &CouplingParams,
    r_list: &[f64],
    cfg: &EnsembleConfig,
    bump: &BumpProfile,
    wrong_offset: f64,
) -> Result<CrScalingReport, ScalingError> {
    for &r in r_list {
        if r * 1.0 < 2.0 * cfg.grid.spacing {
            return Err(ScalingError::ProbeUnderResolved {
                got: r,
                need: 2.0 * cfg.grid.spacing,
            });
        }
    }
    let kernel = GridKernel::new(&cached_kernel(cfg.epsilon, bump)?, cfg.grid, None)?;
    let d = cfg.grid.dimension_d as usize;
    let xi = params.xi;

    let rows: Vec<Result<Vec<(f64, f64)>, ScalingError>> = cfg
        .seeds()
        .map(|seed| {
            let (base, moll) = mollified_sample(cfg.grid, &kernel, seed)?;
            let w = weight_grid(&moll, params)?;
            let origin = [0.0f64; 4];
            let src = site_at(&cfg.grid, &origin[..d]);
            let mut row = Vec::with_capacity(r_list.len());
            for &r in r_list {
                let mut target = [0.0f64; 4];
                target[0] = r;
                let dst = site_at(&cfg.grid, &target[..d]);
                let dist = distance(&w, cfg.stencil, &[src], &[dst], None)?.value;
                let h_r = sphere_average(&base, &origin[..d], r)?;
                row.push((dist, h_r));
            }
            Ok(row)
        })
        .collect();
    let rows: Vec<Vec<(f64, f64)>> = rows.into_iter().collect::<Result<_, _>>()?;

    let normalize = |exponent: f64| -> Vec<f64> {
        r_list
            .iter()
            .enumerate()
            .map(|(j, &r)| {
                let vals: Vec<f64> = rows
                    .iter()
                    .map(|row| {
                        let (dist, h_r) = row[j];
                        r.powf(-exponent) * (-xi * h_r).exp() * dist
                    })
                    .collect();
                stats::median(&vals)
            })
            .collect()
    };
    let medians = normalize(params.xi_q());
    let medians_wrong = normalize(params.xi_q() + wrong_offset);
    let spread = |m: &[f64]| {
        let lo = m.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = m.iter().fold(0.0f64, |a, &b| a.max(b));
        hi / lo
    };
    Ok(CrScalingReport {
        r_list: r_list.to_vec(),
        medians: medians.clone(),
        ratio: spread(&medians),
        wrong_exponent_offset: wrong_offset,
        medians_wrong: medians_wrong.clone(),
        ratio_wrong: spread(&medians_wrong),
    })
}

/// Empirical moments and survival-tail slope of an ensemble of (normalized)
/// distance values.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MomentTailReport {
    pub n: usize,
    pub p_list: Vec<f64>,
    pub moments: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub survival: Vec<f64>,
    pub exceedances: Vec<usize>,
    pub tail_slope: Option<f64>,
    pub widened_uncertainty: bool,
}

pub fn moment_tail_report(
    values: &[f64],
    p_list: &[f64],
    threshold_multipliers: &[f64],
) -> Result<MomentTailReport, ScalingError> {
    if values.len() < 500 {
        return Err(ScalingError::InsufficientEnsemble {
            got: values.len(),
            need: 500,
        });
    }
    let n = values.len();
    let med = stats::median(values);
    let moments: Vec<f64> = p_list
        .iter()
        .map(|&p| values.iter().map(|&v| (v / med).powf(p)).sum::<f64>() / n as f64)
        .collect();
    let thresholds: Vec<f64> = threshold_multipliers.iter().map(|&m| m * med).collect();
    let mut survival = Vec::with_capacity(thresholds.len());
    let mut exceedances = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        let count = values.iter().filter(|&&v| v > t).count();
        exceedances.push(count);
        survival.push(count as f64 / n as f64);
    }
    let widened_uncertainty = *exceedances.last().unwrap_or(&0) < 20;
    // log-log tail slope over the thresholds with any exceedances
    let pts: Vec<(f64, f64)> = thresholds
        .iter()
        .zip(&survival)
        .filter(|&(_, &s)| s > 0.0)
        .map(|(&t, &s)| (t.ln(), s.ln()))
        .collect();
    let tail_slope = if pts.len() >= 2 {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        stats::linear_fit(&xs, &ys).ok().map(|f| f.slope)
    } else {
        None
    };
    Ok(MomentTailReport {
        n,
        p_list: p_list.to_vec(),
        moments,
        thresholds,
        survival,
        exceedances,
        tail_slope,
        widened_uncertainty,
    })
}

/// Ensemble of normalized set-to-set distances between two fixed parallel
/// segments, for the superpolynomial-concentration probe.
pub fn segment_pair_distances(
    cfg: &EnsembleConfig,
    bump: &BumpProfile,
    params: &CouplingParams,
) -> Result<Vec<f64>, ScalingError> {
    let kernel = GridKernel::new(&cached_kernel(cfg.epsilon, bump)?, cfg.grid, None)?;
    let grid = cfg.grid;
    let l = grid.box_side();
    // two horizontal segments of length L/4, separated by L/4 vertically
    let seg = |y_frac: f64| -> Vec<usize> {
        let mut sites = Vec::new();
        let steps = (l / 4.0 / grid.spacing).round() as usize;
        for s in 0..=steps {
            let p = [l * 0.375 + s as f64 * grid.spacing, l * y_frac, 0.0, 0.0];
            sites.push(site_at(&grid, &p[..grid.dimension_d as usize]));
        }
        sites.dedup();
        sites
    };
    let k1 = seg(0.375);
    let k2 = seg(0.625);
    let vals: Vec<Result<f64, ScalingError>> = cfg
        .seeds()
        .map(|seed| {
            let base = sample_spectral_lgf(grid, seed)?;
            let moll = kernel.apply(&base)?;
            let w = weight_grid(&moll, params)?;
            Ok(distance(&w, cfg.stencil, &k1, &k2, None)?.value)
        })
        .collect();
    vals.into_iter().collect()
}

/// Hoelder-exponent estimate: per anchor, regress log D(x, x + s e) on
/// log s over dyadic separations; report the distribution of fitted local
/// exponents against the band [xi (Q - sqrt(2d)), xi (Q + sqrt(2d))].
#[derive(Debug, Clone, serde::Serialize)]
pub struct HolderReport {
    pub separations: Vec<f64>,
    pub n_pairs: usize,
    pub exponent_min: f64,
    pub exponent_median: f64,
    pub exponent_max: f64,
    pub band_low: f64,
    pub band_high: f64,
    pub median_inside_band: bool,
}

pub fn holder_exponent_estimate(
    params: &CouplingParams,
    cfg: &EnsembleConfig,
    bump: &BumpProfile,
    separations: &[f64],
    anchors_per_seed: usize,
) -> Result<HolderReport, ScalingError> {
    if separations.len() < 3 {
        return Err(ScalingError::TooFewScales {
            got: separations.len(),
            need: 3,
        });
    }
    let total_pairs = anchors_per_seed * cfg.n_seeds;
    if total_pairs < 100 {
        return Err(ScalingError::TooFewPairs {
            got: total_pairs,
            need: 100,
        });
    }
    let kernel = GridKernel::new(&cached_kernel(cfg.epsilon, bump)?, cfg.grid, None)?;
    let grid = cfg.grid;
    let d = grid.dimension_d as usize;
    let l = grid.box_side();
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;

    let per_seed: Vec<Result<Vec<f64>, ScalingError>> = cfg
        .seeds()
        .map(|seed| {
            let base = sample_spectral_lgf(grid, seed)?;
            let moll = kernel.apply(&base)?;
            let w = weight_grid(&moll, params)?;
            let mut slopes = Vec::with_capacity(anchors_per_seed);
            for a_idx in 0..anchors_per_seed {
                // deterministic anchor lattice with golden-angle directions
                let u = ((a_idx as f64 + 0.5) / anchors_per_seed as f64).fract();
                let v = ((a_idx as f64) / golden).fract();
                let anchor = [l * (0.25 + 0.5 * u), l * (0.25 + 0.5 * v), l * 0.5, 0.0];
                let theta = 2.0 * std::f64::consts::PI * ((a_idx as f64 + 1.0) / golden).fract();
                let dir = [theta.cos(), theta.sin(), 0.0, 0.0];
                let src = site_at(&grid, &anchor[..d]);
                let mut xs = Vec::with_capacity(separations.len());
                let mut ys = Vec::with_capacity(separations.len());
                for &s in separations {
                    let mut target = anchor;
                    for i in 0..d {
                        target[i] += s * dir[i];
                    }
                    let dst = site_at(&grid, &target[..d]);
                    let dist = distance(&w, cfg.stencil, &[src], &[dst], None)?.value;
                    xs.push(s.ln());
                    ys.push(dist.ln());
                }
                let fit = stats::linear_fit(&xs, &ys).map_err(ScalingError::Degenerate)?;
                slopes.push(fit.slope);
            }
            Ok(slopes)
        })
        .collect();
    let mut slopes: Vec<f64> = Vec::with_capacity(total_pairs);
    for row in per_seed {
        slopes.extend(row?);
    }
    let sqrt2d = (2.0 * grid.dimension_d as f64).sqrt();
    let band_low = params.xi * (params.q_exponent - sqrt2d);
    let band_high = params.xi * (params.q_exponent + sqrt2d);
    let median = stats::median(&slopes);
    let min = slopes.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let max = slopes.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    Ok(HolderReport {
        separations: separations.to_vec(),
        n_pairs: slopes.len(),
        exponent_min: min,
        exponent_median: median,
        exponent_max: max,
        band_low,
        band_high,
        median_inside_band: band_low < median && median < band_high,
    })
}

/// Deterministic target sets for the KPZ covering (field-independent).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum TargetSet {
    FullBox,
    AxisSegment,
    /// middle-halves Cantor dust iterated along each axis
    CantorDust { levels: u32 },
}

/// Site mask of a target set, confined to the central half of the box.
pub fn target_mask(grid: &GridSpec, target: TargetSet) -> Vec<bool> {
    let n = grid.n_per_axis;
    let d = grid.dimension_d as usize;
    let mut mask = vec![false; grid.total_sites()];
    match target {
        TargetSet::FullBox => {
            for (idx, m) in mask.iter_mut().enumerate() {
                let c = grid.coords(idx);
                if (0..d).all(|i| c[i] >= n / 4 && c[i] < 3 * n / 4) {
                    *m = true;
                }
            }
        }
        TargetSet::AxisSegment => {
            for (idx, m) in mask.iter_mut().enumerate() {
                let c = grid.coords(idx);
                if c[0] >= n / 4 && c[0] < 3 * n / 4 && (1..d).all(|i| c[i] == n / 2) {
                    *m = true;
                }
            }
        }
        TargetSet::CantorDust { levels } => {
            // keep first and last quarter of each interval, recursively
            let keep = |mut x: usize, mut len: usize, lv: u32| -> bool {
                for _ in 0..lv {
                    let half = len / 2;
                    let quarter = len / 4;
                    if x < quarter {
                        len = quarter;
                    } else if x >= len - quarter {
                        x -= len - quarter;
                        len = quarter;
                    } else {
                        return false;
                    }
                    let _ = half;
                    if len == 0 {
                        return true;
                    }
                }
                true
            };
            for (idx, m) in mask.iter_mut().enumerate() {
                let c = grid.coords(idx);
                if (0..d).all(|i| {
                    c[i] >= n / 4 && c[i] < 3 * n / 4 && keep(c[i] - n / 4, n / 2, levels)
                }) {
                    *m = true;
                }
            }
        }
    }
    mask
}

/// Greedy farthest-point covering of the target by metric balls of radius
/// delta; returns the number of balls used.
pub fn greedy_ball_cover(
    weights: &WeightGrid,
    stencil: Stencil,
    target: &[bool],
    delta: f64,
    sweeper: &mut BallSweeper,
) -> usize {
    let total = target.len();
    let mut covered = vec![false; total];
    let mut count = 0usize;
    for site in 0..total {
        if !target[site] || covered[site] {
            continue;
        }
        count += 1;
        sweeper.ball(weights, stencil, site, delta, |s, _| {
            if target[s] {
                covered[s] = true;
            }
        });
        debug_assert!(covered[site]);
    }
    count
}

/// Quantum-covering dimension estimate for a deterministic target set:
/// median covering counts across the ensemble, fitted against log(1/delta).
/// Deltas are specified relative to each seed's own box-crossing distance so
/// counts are comparable across fields.
pub fn kpz_quantum_dimension(
    params: &CouplingParams,
    cfg: &EnsembleConfig,
    bump: &BumpProfile,
    target: TargetSet,
    delta_fractions: &[f64],
) -> Result<(f64, Vec<f64>), ScalingError> {
    if delta_fractions.len() < 3 {
        return Err(ScalingError::TooFewScales {
            got: delta_fractions.len(),
            need: 3,
        });
    }
    let kernel = GridKernel::new(&cached_kernel(cfg.epsilon, bump)?, cfg.grid, None)?;
    let grid = cfg.grid;
    let d = grid.dimension_d as usize;
    let mask = target_mask(&grid, target);
    let l = grid.box_side();

    let counts: Vec<Result<Vec<f64>, ScalingError>> = cfg
        .seeds()
        .map(|seed| {
            let base = sample_spectral_lgf(grid, seed)?;
            let moll = kernel.apply(&base)?;
            let w = weight_grid(&moll, params)?;
            // reference scale: crossing distance of the central half-box
            let p0 = [l * 0.25, l * 0.5, l * 0.5, 0.0];
            let p1 = [l * 0.75, l * 0.5, l * 0.5, 0.0];
            let reference = distance(
                &w,
                cfg.stencil,
                &[site_at(&grid, &p0[..d])],
                &[site_at(&grid, &p1[..d])],
                None,
            )?
            .value;
            let mut sweeper = BallSweeper::new(grid.total_sites());
            let mut row = Vec::with_capacity(delta_fractions.len());
            for &frac in delta_fractions {
                let delta = frac * reference;
                let n_balls = greedy_ball_cover(&w, cfg.stencil, &mask, delta, &mut sweeper);
                row.push(n_balls as f64);
            }
            Ok(row)
        })
        .collect();
    let counts: Vec<Vec<f64>> = counts.into_iter().collect::<Result<_, _>>()?;

    // median covering count per delta, then the log-log fit
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut med_counts = Vec::new();
    for (j, &frac) in delta_fractions.iter().enumerate() {
        let col: Vec<f64> = counts.iter().map(|r| r[j]).collect();
        let med = stats::median(&col);
        med_counts.push(med);
        xs.push((1.0 / frac).ln());
        ys.push(med.ln());
    }
    let fit = stats::linear_fit(&xs, &ys).map_err(ScalingError::Degenerate)?;
    Ok((fit.slope, med_counts))
}

/// Full KPZ consistency check for one target set.
pub fn kpz_check(
    params: &CouplingParams,
    cfg: &EnsembleConfig,
    bump: &BumpProfile,
    target: TargetSet,
    delta_fractions: &[f64],
) -> Result<KpzReport, ScalingError> {
    let mask = target_mask(&cfg.grid, target);
    let n = cfg.grid.n_per_axis;
    let sizes: Vec<usize> = [2usize, 4, 8, 16, 32]
        .iter()
        .copied()
        .filter(|&s| s <= n / 4)
        .collect();
    let (bs, bc) = box_counts(&cfg.grid, &mask, &sizes);
    let euclid = box_dimension(cfg.grid.dimension_d, &bs, &bc)?;
    let (quantum, _) = kpz_quantum_dimension(params, cfg, bump, target, delta_fractions)?;
    Ok(KpzReport::new(euclid, quantum, *params))
}

/// Shell-correlation probe: indicators of normalized across-distances
/// exceeding their ensemble medians, correlated across dyadic scales.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ShellCorrReport {
    pub radii: Vec<f64>,
    /// pairwise indicator correlations, row-major upper triangle
    pub correlations: Vec<Vec<f64>>,
    /// same-seed-offset scrambled control correlations
    pub scrambled: Vec<Vec<f64>>,
}

pub fn shell_correlation_probe(
    params: &CouplingParams,
    cfg: &EnsembleConfig,
    bump: &BumpProfile,
    radii: &[f64],
) -> Result<ShellCorrReport, ScalingError> {
    if radii.len() < 2 {
        return Err(ScalingError::TooFewScales {
            got: radii.len(),
            need: 2,
        });
    }
    let kernel = GridKernel::new(&cached_kernel(cfg.epsilon, bump)?, cfg.grid, None)?;
    let grid = cfg.grid;
    let d = grid.dimension_d as usize;
    let xi = params.xi;
    let xi_q = params.xi_q();

    let rows: Vec<Result<Vec<f64>, ScalingError>> = cfg
        .seeds()
        .map(|seed| {
            let (base, moll) = mollified_sample(grid, &kernel, seed)?;
            let w = weight_grid(&moll, params)?;
            let origin = [0.0f64; 4];
            let mut row = Vec::with_capacity(radii.len());
            for &r in radii {
                let shell = ShellSpec::new([0.0; 4], r / 2.0, r)
                    .map_err(ScalingError::Metric)?;
                let across =
                    crate::metric::across_distance(&w, cfg.stencil, &shell)?.value;
                let h_r = sphere_average(&base, &origin[..d], r)?;
                row.push(r.powf(-xi_q) * (-xi * h_r).exp() * across);
            }
            Ok(row)
        })
        .collect();
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_, _>>()?;
    let n = rows.len();

    // indicators per scale: above the ensemble median
    let k = radii.len();
    let mut indicators = vec![vec![0.0f64; n]; k];
    for (j, ind) in indicators.iter_mut().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let med = stats::median(&col);
        for (i, v) in col.iter().enumerate() {
            ind[i] = if *v > med { 1.0 } else { 0.0 };
        }
    }
    let corr = |a: &[f64], b: &[f64]| -> f64 {
        let c = stats::covariance(a, b);
        let va = stats::variance(a);
        let vb = stats::variance(b);
        if va == 0.0 || vb == 0.0 {
            0.0
        } else {
            c / (va * vb).sqrt()
        }
    };
    let mut correlations = vec![vec![0.0; k]; k];
    let mut scrambled = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            correlations[i][j] = corr(&indicators[i], &indicators[j]);
            // scrambled control: pair scale j across a one-seed shift
            let shifted: Vec<f64> = (0..n).map(|s| indicators[j][(s + 1) % n]).collect();
            scrambled[i][j] = corr(&indicators[i], &shifted);
        }
    }
    Ok(ShellCorrReport {
        radii: radii.to_vec(),
        correlations,
        scrambled,
    })
}
