//! Discretized log-correlated Gaussian fields on periodic grids: white-noise
//! layer synthesis, spectral synthesis, mollification, sphere averages, and
//! the truncated mollifications used to localize the convolution.

mod fft;
mod io;

pub use fft::GridFft;
pub use io::{read_field_binary, write_field_binary, write_sphere_trace_csv};

use crate::kernel::{BumpProfile, RadialKernel};
use crate::numerics::special::{log_kernel_constant, sphere_surface};
use crate::numerics::stats;
use crate::rng::{stream_rng, StreamKind};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

/// Grid memory guardrail (total sites).
pub const MAX_SITES: usize = 1 << 24;

/// Layer ratio of the geometric scale grid, 2^(1/4).
pub const LAYER_RATIO: f64 = 1.189207115002721;

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("grid spec invalid: {0}")]
    BadGrid(String),
    #[error("grid of {0} sites exceeds the configured cap {MAX_SITES}")]
    SiteCap(usize),
    #[error("under-resolved: {quantity} = {value} requires at least {minimum} (= {factor} x spacing)")]
    UnderResolved {
        quantity: &'static str,
        value: f64,
        minimum: f64,
        factor: f64,
    },
    #[error("periodization: R = {r} exceeds box side / 4 = {limit}")]
    Periodization { r: f64, limit: f64 },
    #[error("sphere of radius {radius} does not fit in the box (side {side})")]
    SphereTooLarge { radius: f64, side: f64 },
    #[error("sphere quadrature not implemented for d = {0}")]
    UnsupportedDimension(u32),
    #[error("ensemble of {got} samples is below the required {need}")]
    InsufficientEnsemble { got: usize, need: usize },
    #[error("scale ratio {0} is not a power of 1/2 resolvable on the grid")]
    BadScaleRatio(f64),
    #[error("kernel error: {0}")]
    Kernel(#[from] crate::kernel::KernelError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field file: {0}")]
    Format(String),
}

/// Periodic grid geometry: n sites per axis (power of two), physical spacing.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub dimension_d: u32,
    pub n_per_axis: usize,
    pub spacing: f64,
    pub periodic: bool,
}

impl GridSpec {
    pub fn new(d: u32, n_per_axis: usize, spacing: f64) -> Result<Self, FieldError> {
        if d < 2 {
            return Err(FieldError::BadGrid(format!("dimension {d} < 2")));
        }
        if !n_per_axis.is_power_of_two() {
            return Err(FieldError::BadGrid(format!(
                "n_per_axis {n_per_axis} is not a power of two"
            )));
        }
        if !(spacing > 0.0) {
            return Err(FieldError::BadGrid(format!("spacing {spacing} <= 0")));
        }
        let total = (n_per_axis as u128).pow(d);
        if total > MAX_SITES as u128 {
            return Err(FieldError::SiteCap(total as usize));
        }
        Ok(Self {
            dimension_d: d,
            n_per_axis,
            spacing,
            periodic: true,
        })
    }

    pub fn box_side(&self) -> f64 {
        self.n_per_axis as f64 * self.spacing
    }

    pub fn total_sites(&self) -> usize {
        self.n_per_axis.pow(self.dimension_d)
    }

    /// Flat row-major index of integer coordinates (axis 0 slowest).
    pub fn index(&self, coords: &[usize]) -> usize {
        let n = self.n_per_axis;
        coords[..self.dimension_d as usize]
            .iter()
            .fold(0, |acc, &c| acc * n + c)
    }

    pub fn coords(&self, mut index: usize) -> [usize; 4] {
        let n = self.n_per_axis;
        let d = self.dimension_d as usize;
        let mut out = [0usize; 4];
        for axis in (0..d).rev() {
            out[axis] = index % n;
            index /= n;
        }
        out
    }

    /// Signed wrapped frequency index.
    pub fn wrapped(&self, k: usize) -> i64 {
        let n = self.n_per_axis as i64;
        let k = k as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    /// |zeta| in cycles per physical unit for flat spectral index.
    pub fn freq_norm(&self, index: usize) -> f64 {
        let d = self.dimension_d as usize;
        let c = self.coords(index);
        let l = self.box_side();
        let mut sq = 0.0;
        for &ci in c.iter().take(d) {
            let w = self.wrapped(ci) as f64 / l;
            sq += w * w;
        }
        sq.sqrt()
    }

    /// Torus distance between physical points.
    pub fn torus_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let l = self.box_side();
        let d = self.dimension_d as usize;
        let mut sq = 0.0;
        for i in 0..d {
            let mut diff = (a[i] - b[i]).rem_euclid(l);
            if diff > l / 2.0 {
                diff = l - diff;
            }
            sq += diff * diff;
        }
        sq.sqrt()
    }

    /// Multilinear interpolation of site values at a physical point
    /// (periodic wrap).
    pub fn interp(&self, values: &[f64], point: &[f64]) -> f64 {
        let d = self.dimension_d as usize;
        let n = self.n_per_axis;
        let mut base = [0usize; 4];
        let mut frac = [0.0f64; 4];
        for i in 0..d {
            let u = (point[i] / self.spacing).rem_euclid(n as f64);
            let b = u.floor() as usize % n;
            base[i] = b;
            frac[i] = u - u.floor();
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut idx = 0usize;
            for i in 0..d {
                let hi = (corner >> i) & 1 == 1;
                weight *= if hi { frac[i] } else { 1.0 - frac[i] };
                let c = if hi { (base[i] + 1) % n } else { base[i] };
                idx = idx * n + c;
            }
            acc += weight * values[idx];
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SamplerKind {
    WhiteNoiseLayers,
    Spectral,
    Synthetic,
}

impl SamplerKind {
    pub fn id(self) -> u8 {
        match self {
            SamplerKind::WhiteNoiseLayers => 1,
            SamplerKind::Spectral => 2,
            SamplerKind::Synthetic => 0,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(SamplerKind::WhiteNoiseLayers),
            2 => Some(SamplerKind::Spectral),
            0 => Some(SamplerKind::Synthetic),
            _ => None,
        }
    }
}

/// Additive-constant anchor: the sphere average at (center, radius) has been
/// subtracted, so it evaluates to 0.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Anchor {
    pub kind: AnchorKind,
    pub center: [f64; 4],
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AnchorKind {
    SphereAvgZero,
}

/// Scalar field values on a grid with provenance.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// mollification scale; 0 means pre-mollification synthetic layers only
    pub epsilon: f64,
    pub anchor: Option<Anchor>,
    pub sampler: SamplerKind,
    pub seed: u64,
}

impl FieldSample {
    pub fn at(&self, point: &[f64]) -> f64 {
        self.grid.interp(&self.values, point)
    }

    pub fn assert_finite(&self) -> Result<(), FieldError> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(FieldError::BadGrid("non-finite field values".into()))
        }
    }
}

/// Geometric scale layers covering [epsilon, r_trunc] with ratio 2^(1/4).
/// Returns (geometric midpoint, width) per layer.
pub fn scale_layers(epsilon: f64, r_trunc: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut lo = epsilon;
    while lo < r_trunc * (1.0 - 1e-12) {
        let hi = (lo * LAYER_RATIO).min(r_trunc);
        out.push(((lo * hi).sqrt(), hi - lo));
        lo = hi;
    }
    out
}

fn fill_white_noise(rng: &mut impl Rng, out: &mut [Complex64]) {
    for v in out.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *v = Complex64::new(g, 0.0);
    }
}

/// White-noise layered field: each scale layer is an independent white noise
/// convolved with the rescaled seed bump, synthesized in Fourier space so the
/// torus covariance is exactly the periodized kappa_{eps,R} (up to the layer
/// midpoint rule and the grid's Nyquist truncation).
pub fn sample_white_noise_field(
    grid: GridSpec,
    epsilon: f64,
    r_trunc: f64,
    bump: &BumpProfile,
    seed: u64,
) -> Result<FieldSample, FieldError> {
    if epsilon < 2.0 * grid.spacing {
        return Err(FieldError::UnderResolved {
            quantity: "epsilon",
            value: epsilon,
            minimum: 2.0 * grid.spacing,
            factor: 2.0,
        });
    }
    let l = grid.box_side();
    if r_trunc > l / 4.0 {
        return Err(FieldError::Periodization {
            r: r_trunc,
            limit: l / 4.0,
        });
    }
    let data = bump.spectrum()?;
    let d = grid.dimension_d;
    let n = grid.n_per_axis;
    let total = grid.total_sites();
    let fft = GridFft::new(d, n);
    let density_norm = (n as f64 / l).powi(d as i32);

    let layers = scale_layers(epsilon, r_trunc);
    let mut accum = vec![Complex64::new(0.0, 0.0); total];
    let mut noise = vec![Complex64::new(0.0, 0.0); total];
    for (layer_idx, &(t_mid, width)) in layers.iter().enumerate() {
        let mut rng = stream_rng(seed, StreamKind::WhiteNoiseLayer, layer_idx as u64, 0);
        fill_white_noise(&mut rng, &mut noise);
        fft.forward(&mut noise);
        let scale_factor = (density_norm * t_mid.powi(d as i32 - 1) * width).sqrt();
        for (idx, v) in noise.iter().enumerate() {
            let zeta = grid.freq_norm(idx);
            let mult = scale_factor * data.spectrum.eval(t_mid * zeta).abs();
            accum[idx] += mult * v;
        }
    }
    fft.inverse(&mut accum);
    let values: Vec<f64> = accum.iter().map(|c| c.re).collect();
    let sample = FieldSample {
        grid,
        values,
        epsilon,
        anchor: None,
        sampler: SamplerKind::WhiteNoiseLayers,
        seed,
    };
    sample.assert_finite()?;
    Ok(sample)
}

/// Zero-mode-free Gaussian field with spectral density c_d / |zeta|^d over
/// the nonzero discrete frequencies, anchored so the unit sphere average at
/// the origin vanishes.
pub fn sample_spectral_lgf(grid: GridSpec, seed: u64) -> Result<FieldSample, FieldError> {
    sample_spectral_with_exponent(grid, seed, grid.dimension_d as f64)
}

/// Same synthesis with an arbitrary spectral exponent. The correct field
/// uses exponent d; other exponents exist as negative controls for the
/// statistical tests.
pub fn sample_spectral_with_exponent(
    grid: GridSpec,
    seed: u64,
    exponent: f64,
) -> Result<FieldSample, FieldError> {
    let mut sample = spectral_raw(grid, seed, exponent)?;
    anchor_sample(&mut sample)?;
    sample.assert_finite()?;
    Ok(sample)
}

pub(crate) fn spectral_raw(
    grid: GridSpec,
    seed: u64,
    exponent: f64,
) -> Result<FieldSample, FieldError> {
    let d = grid.dimension_d;
    let n = grid.n_per_axis;
    let total = grid.total_sites();
    let fft = GridFft::new(d, n);
    let c_d = log_kernel_constant(d);
    let density_norm = (n as f64 / grid.box_side()).powi(d as i32);

    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let mut rng = stream_rng(seed, StreamKind::SpectralField, 0, 0);
    fill_white_noise(&mut rng, &mut data);
    fft.forward(&mut data);
    for (idx, v) in data.iter_mut().enumerate() {
        let zeta = grid.freq_norm(idx);
        if zeta == 0.0 {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= (density_norm * c_d * zeta.powf(-exponent)).sqrt();
        }
    }
    fft.inverse(&mut data);
    let values: Vec<f64> = data.iter().map(|c| c.re).collect();
    Ok(FieldSample {
        grid,
        values,
        epsilon: 0.0,
        anchor: None,
        sampler: SamplerKind::Spectral,
        seed,
    })
}

/// Subtract the unit-sphere average at the origin and record the anchor.
/// Idempotent up to floating point: re-anchoring subtracts ~0.
pub fn anchor_sample(sample: &mut FieldSample) -> Result<(), FieldError> {
    let center = [0.0f64; 4];
    let d = sample.grid.dimension_d as usize;
    let avg = sphere_average(sample, &center[..d], 1.0)?;
    for v in sample.values.iter_mut() {
        *v -= avg;
    }
    sample.anchor = Some(Anchor {
        kind: AnchorKind::SphereAvgZero,
        center,
        radius: 1.0,
    });
    Ok(())
}

/// Deterministic quasi-uniform points on the (d-1)-sphere: equal angles for
/// d = 2, a Fibonacci lattice for d = 3.
pub fn sphere_points(d: u32, n_quad: usize) -> Result<Vec<[f64; 4]>, FieldError> {
    let mut out = Vec::with_capacity(n_quad);
    match d {
        2 => {
            for j in 0..n_quad {
                let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_quad as f64;
                out.push([theta.cos(), theta.sin(), 0.0, 0.0]);
            }
        }
        3 => {
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            for j in 0..n_quad {
                let z = 1.0 - 2.0 * (j as f64 + 0.5) / n_quad as f64;
                let rho = (1.0 - z * z).sqrt();
                let theta = 2.0 * std::f64::consts::PI * (j as f64 / golden).fract();
                out.push([rho * theta.cos(), rho * theta.sin(), z, 0.0]);
            }
        }
        other => return Err(FieldError::UnsupportedDimension(other)),
    }
    Ok(out)
}

/// Quadrature average of the field over the sphere of the given radius,
/// with multilinear interpolation. n_quad = max(64, ceil(4 pi r / spacing)).
pub fn sphere_average(
    field: &FieldSample,
    center: &[f64],
    radius: f64,
) -> Result<f64, FieldError> {
    let grid = &field.grid;
    if radius < 2.0 * grid.spacing {
        return Err(FieldError::UnderResolved {
            quantity: "sphere radius",
            value: radius,
            minimum: 2.0 * grid.spacing,
            factor: 2.0,
        });
    }
    if 2.0 * radius > grid.box_side() {
        return Err(FieldError::SphereTooLarge {
            radius,
            side: grid.box_side(),
        });
    }
    let n_quad = ((4.0 * std::f64::consts::PI * radius / grid.spacing).ceil() as usize).max(64);
    let pts = sphere_points(grid.dimension_d, n_quad)?;
    let d = grid.dimension_d as usize;
    let mut acc = 0.0;
    let mut p = [0.0f64; 4];
    for dir in &pts {
        for i in 0..d {
            p[i] = center[i] + radius * dir[i];
        }
        acc += grid.interp(&field.values, &p[..d]);
    }
    Ok(acc / n_quad as f64)
}

/// Circular convolution with the mollification kernel, as a Fourier
/// multiplier by the kernel's grid-sampled transform normalized to unit
/// discrete mass (constants are preserved exactly).
pub fn mollify(field: &FieldSample, kernel: &RadialKernel) -> Result<FieldSample, FieldError> {
    GridKernel::new(kernel, field.grid, None)?.apply(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationMode {
    /// window = 1 on sqrt(eps)/2, 0 beyond sqrt(eps); no renormalization
    BarSqrtEps,
    /// window radii eps (log 1/eps)^10 / 2 and eps (log 1/eps)^10,
    /// renormalized by the window mass
    HatLogPower,
}

/// Smooth radial window: 1 on [0, r_half], 0 beyond r_full, C^1 cosine taper
/// in between.
fn window(r: f64, r_half: f64, r_full: f64) -> f64 {
    if r <= r_half {
        1.0
    } else if r >= r_full {
        0.0
    } else {
        let u = (r - r_half) / (r_full - r_half);
        0.5 * (1.0 + (std::f64::consts::PI * u).cos())
    }
}

/// Truncation window radii (inner, outer) for a mode at scale eps.
pub fn truncation_radii(mode: TruncationMode, epsilon: f64) -> (f64, f64) {
    match mode {
        TruncationMode::BarSqrtEps => (epsilon.sqrt() / 2.0, epsilon.sqrt()),
        TruncationMode::HatLogPower => {
            let growth = (1.0f64 / epsilon).ln().powi(10);
            (epsilon * growth / 2.0, epsilon * growth)
        }
    }
}

/// The paper-side normalizer Z_eps = int window * K_eps over R^d, from the
/// kernel tabulation.
pub fn truncation_normalizer(kernel: &RadialKernel, mode: TruncationMode) -> f64 {
    let (r_half, r_full) = truncation_radii(mode, kernel.epsilon);
    let d = kernel.dimension_d;
    let s_d = sphere_surface(d);
    // piecewise GL3 against the tabulation, exact for the interpolant
    let x1 = (3.0f64 / 5.0).sqrt();
    let nodes = [-x1, 0.0, x1];
    let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let mut total = 0.0;
    let rg = &kernel.radius_grid;
    if rg[0] > 0.0 {
        total += kernel.values[0] * rg[0].powi(d as i32) / d as f64;
    }
    for w in rg.windows(2) {
        if w[0] >= r_full {
            break;
        }
        let h = 0.5 * (w[1] - w[0]);
        let mid = 0.5 * (w[0] + w[1]);
        let mut acc = 0.0;
        for i in 0..3 {
            let x = mid + h * nodes[i];
            acc += weights[i]
                * kernel.eval(x)
                * window(x, r_half, r_full)
                * x.powi(d as i32 - 1);
        }
        total += acc * h;
    }
    s_d * total
}

/// Mollification with an optional spatial truncation window. Returns the
/// field and the continuum normalizer Z_eps (1.0 when no window).
pub fn truncated_mollify(
    field: &FieldSample,
    kernel: &RadialKernel,
    mode: TruncationMode,
) -> Result<(FieldSample, f64), FieldError> {
    let (_, r_full) = truncation_radii(mode, kernel.epsilon);
    if r_full < 2.0 * field.grid.spacing {
        return Err(FieldError::UnderResolved {
            quantity: "truncation radius",
            value: r_full,
            minimum: 2.0 * field.grid.spacing,
            factor: 2.0,
        });
    }
    let z = match mode {
        TruncationMode::BarSqrtEps => 1.0,
        TruncationMode::HatLogPower => truncation_normalizer(kernel, mode),
    };
    let out = GridKernel::new(kernel, field.grid, Some(mode))?.apply(field)?;
    Ok((out, z))
}

/// A mollification kernel sampled on a torus grid, held in Fourier form for
/// repeated convolution. Normalization: plain and bar modes divide by the
/// full kernel's discrete mass; hat mode divides by the windowed discrete
/// mass (the discrete counterpart of the Z_eps^{-1} normalization).
pub struct GridKernel {
    grid: GridSpec,
    epsilon: f64,
    transfer: Vec<Complex64>,
}

impl GridKernel {
    pub fn new(
        kernel: &RadialKernel,
        grid: GridSpec,
        windowing: Option<TruncationMode>,
    ) -> Result<Self, FieldError> {
        if kernel.epsilon < 2.0 * grid.spacing {
            return Err(FieldError::UnderResolved {
                quantity: "kernel epsilon",
                value: kernel.epsilon,
                minimum: 2.0 * grid.spacing,
                factor: 2.0,
            });
        }
        let d = grid.dimension_d;
        let n = grid.n_per_axis;
        let total = grid.total_sites();
        let fft = GridFft::new(d, n);
        let a = grid.spacing;
        let radii = windowing.map(|mode| truncation_radii(mode, kernel.epsilon));

        // sample kernel (and window) at torus distances from the origin site
        let mut kern = vec![Complex64::new(0.0, 0.0); total];
        let mut full_mass = 0.0f64;
        let mut win_mass = 0.0f64;
        let origin = [0.0f64; 4];
        let mut p = [0.0f64; 4];
        for (idx, kv) in kern.iter_mut().enumerate() {
            let coords = grid.coords(idx);
            for i in 0..d as usize {
                p[i] = coords[i] as f64 * a;
            }
            let r = grid.torus_dist(&p[..d as usize], &origin[..d as usize]);
            let base = kernel.eval(r);
            full_mass += base;
            let v = match radii {
                None => base,
                Some((r_half, r_full)) => base * window(r, r_half, r_full),
            };
            win_mass += v;
            *kv = Complex64::new(v, 0.0);
        }
        let norm = match windowing {
            None | Some(TruncationMode::BarSqrtEps) => full_mass,
            Some(TruncationMode::HatLogPower) => win_mass,
        };
        for kv in kern.iter_mut() {
            *kv /= norm;
        }
        fft.forward(&mut kern);
        Ok(Self {
            grid,
            epsilon: kernel.epsilon,
            transfer: kern,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn apply(&self, field: &FieldSample) -> Result<FieldSample, FieldError> {
        assert_eq!(field.grid, self.grid, "grid mismatch");
        let fft = GridFft::new(self.grid.dimension_d, self.grid.n_per_axis);
        let mut data: Vec<Complex64> = field
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft.forward(&mut data);
        for (v, k) in data.iter_mut().zip(&self.transfer) {
            *v *= k;
        }
        fft.inverse(&mut data);
        let values: Vec<f64> = data.iter().map(|c| c.re).collect();
        let out = FieldSample {
            grid: self.grid,
            values,
            epsilon: self.epsilon,
            anchor: field.anchor.clone(),
            sampler: field.sampler,
            seed: field.seed,
        };
        out.assert_finite()?;
        Ok(out)
    }
}

/// Two-sample KS comparison of increment distributions between the rescaled
/// field h(r .) and the original h(.), per offset pair.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RescaleReport {
    pub ratio: f64,
    pub n_samples: usize,
    pub ks_statistics: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Bonferroni-corrected pass at level 0.001
    pub pass: bool,
}

/// Offset pairs used by the scale-invariance probe, in box-side units from
/// the center region.
fn rescale_pairs(l: f64) -> Vec<([f64; 4], [f64; 4])> {
    let s = l / 8.0;
    vec![
        ([0.0, 0.0, 0.0, 0.0], [s, 0.0, 0.0, 0.0]),
        ([0.0, 0.0, 0.0, 0.0], [0.0, s * 0.5, 0.0, 0.0]),
        (
            [s * 0.25, s * 0.25, 0.0, 0.0],
            [-s * 0.5, s * 0.25, 0.0, 0.0],
        ),
        ([-s * 0.5, 0.0, 0.0, 0.0], [s * 0.5, -s * 0.25, 0.0, 0.0]),
        (
            [0.0, -s * 0.75, 0.0, 0.0],
            [s * 0.375, s * 0.375, 0.0, 0.0],
        ),
    ]
}

pub fn rescale_field_check(
    ensemble: &[FieldSample],
    ratio: f64,
) -> Result<RescaleReport, FieldError> {
    if ensemble.len() < 200 {
        return Err(FieldError::InsufficientEnsemble {
            got: ensemble.len(),
            need: 200,
        });
    }
    let grid = ensemble[0].grid;
    let d = grid.dimension_d as usize;
    let mut r = ratio;
    let mut ok = (r - 1.0).abs() < 1e-12;
    while r < 1.0 - 1e-12 {
        r *= 2.0;
        if (r - 1.0).abs() < 1e-12 {
            ok = true;
            break;
        }
    }
    if !ok || ratio * grid.box_side() / 8.0 < grid.spacing {
        return Err(FieldError::BadScaleRatio(ratio));
    }
    let pairs = rescale_pairs(grid.box_side());
    // disjoint ensemble halves keep the two KS samples independent; at
    // ratio 1 the comparison is of identical values (D = 0) by construction
    let identical = (ratio - 1.0).abs() < 1e-12;
    let half = ensemble.len() / 2;
    let (scaled_part, plain_part) = if identical {
        (ensemble, ensemble)
    } else {
        (&ensemble[..half], &ensemble[half..])
    };
    let mut stats_out = Vec::new();
    let mut p_values = Vec::new();
    for (x, y) in &pairs {
        let mut scaled = Vec::with_capacity(scaled_part.len());
        let mut plain = Vec::with_capacity(plain_part.len());
        for f in scaled_part {
            let mut rx = [0.0; 4];
            let mut ry = [0.0; 4];
            for i in 0..d {
                rx[i] = ratio * x[i];
                ry[i] = ratio * y[i];
            }
            scaled.push(f.at(&rx[..d]) - f.at(&ry[..d]));
        }
        for f in plain_part {
            plain.push(f.at(&x[..d]) - f.at(&y[..d]));
        }
        let (d_stat, p) = stats::ks_two_sample(&scaled, &plain);
        stats_out.push(d_stat);
        p_values.push(p);
    }
    let bonferroni = 0.001 / pairs.len() as f64;
    let pass = p_values.iter().all(|&p| p > bonferroni);
    Ok(RescaleReport {
        ratio,
        n_samples: ensemble.len(),
        ks_statistics: stats_out,
        p_values,
        pass,
    })
}
