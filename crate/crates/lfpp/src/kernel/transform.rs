//! Radial Fourier analysis in d dimensions.
//!
//! Convention: F(f)(zeta) = int exp(-2 pi i x . zeta) f(x) dx. For a radial
//! function this reduces to a Hankel-type integral of order d/2 - 1,
//!     f_hat(rho) = 2 pi rho^{1 - d/2} int_0^inf f(r) J_{d/2-1}(2 pi r rho) r^{d/2} dr,
//! which is its own inverse on radial functions.

use super::KernelError;
use crate::numerics::bessel::bessel_j_half;
use crate::numerics::interp::CubicTable;
use crate::numerics::quadrature::{gl_integrate, integrate_converged, integrate_converged_rounds};
use crate::numerics::special::sphere_surface;
use std::f64::consts::PI;

/// Tabulated radial function of frequency, with cubic evaluation between
/// knots. Radial symmetry makes the transform real-valued.
#[derive(Debug, Clone)]
pub struct RadialSpectrum {
    pub dimension_d: u32,
    pub freq_grid: Vec<f64>,
    pub values: Vec<f64>,
    table: CubicTable,
}

impl RadialSpectrum {
    pub fn new(dimension_d: u32, freq_grid: Vec<f64>, values: Vec<f64>) -> Self {
        let table = CubicTable::new(freq_grid.clone(), values.clone());
        Self {
            dimension_d,
            freq_grid,
            values,
            table,
        }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        self.table.eval(rho)
    }

    pub fn max_freq(&self) -> f64 {
        *self.freq_grid.last().unwrap()
    }
}

/// Quadrature accuracy tier. The absolute part is scaled by a coarse
/// estimate of int |integrand|, so values near transform zeros stay honest.
#[derive(Debug, Clone, Copy)]
pub struct TransformTol {
    pub rel: f64,
    pub abs_mult: f64,
    /// initial GL16 panels per Bessel oscillation period
    pub panels_per_period: f64,
    /// refinement-round cap; when `best_effort` the capped value is accepted
    pub max_rounds: usize,
    pub best_effort: bool,
}

impl TransformTol {
    /// Default: tight enough for every tolerance asserted in this crate.
    pub const STRICT: Self = Self {
        rel: 1e-10,
        abs_mult: 1e-12,
        panels_per_period: 2.0,
        max_rounds: 12,
        best_effort: false,
    };
    /// For tabulations consumed through interpolation (kink-limited anyway).
    pub const TABLE: Self = Self {
        rel: 3e-10,
        abs_mult: 1e-11,
        panels_per_period: 2.0,
        max_rounds: 12,
        best_effort: false,
    };
}

/// One point of the radial transform: f_hat(rho) for f supported (or
/// negligible) beyond r_max.
pub fn transform_point<F: Fn(f64) -> f64>(
    f: &F,
    r_max: f64,
    d: u32,
    rho: f64,
) -> Result<f64, KernelError> {
    transform_point_tol(f, r_max, d, rho, TransformTol::STRICT)
}

pub fn transform_point_tol<F: Fn(f64) -> f64>(
    f: &F,
    r_max: f64,
    d: u32,
    rho: f64,
    tol: TransformTol,
) -> Result<f64, KernelError> {
    debug_assert!(d >= 2);
    let nu2 = d - 2; // 2 * nu with nu = d/2 - 1
    let half_d = d as f64 / 2.0;
    if rho == 0.0 {
        let s_d = sphere_surface(d);
        let g = |r: f64| f(r) * r.powi(d as i32 - 1);
        let scale = gl_integrate(&|r: f64| g(r).abs(), 0.0, r_max, 64);
        let res = integrate_converged(&g, 0.0, r_max, 8, tol.rel, tol.abs_mult * scale + 1e-300)
            .map_err(|e| KernelError::QuadratureDiverged {
                context: "radial transform at zero frequency".into(),
                residual: e.error_estimate,
            })?;
        return Ok(s_d * res.value);
    }
    // panels resolve both the Bessel oscillation and the profile's own
    // structure (the floor of 128 covers the latter)
    let panels = ((tol.panels_per_period * r_max * rho).ceil() as usize + 8)
        .max(128)
        .min(1 << 20);
    let g = |r: f64| f(r) * bessel_j_half(nu2, 2.0 * PI * r * rho) * r.powf(half_d);
    // absolute tolerance pegged to the magnitude of the oscillatory integrand,
    // not the (possibly cancelling) integral value
    let scale = gl_integrate(&|r: f64| g(r).abs(), 0.0, r_max, panels.min(512));
    let res = integrate_converged_rounds(
        &g,
        0.0,
        r_max,
        panels,
        tol.rel,
        tol.abs_mult * scale + 1e-300,
        tol.max_rounds,
    );
    let value = match res {
        Ok(q) => q.value,
        Err(q) if tol.best_effort => q.value,
        Err(q) => {
            return Err(KernelError::QuadratureDiverged {
                context: format!("radial transform at frequency {rho}"),
                residual: q.error_estimate,
            })
        }
    };
    Ok(2.0 * PI * rho.powf(1.0 - half_d) * value)
}

/// Tabulate the d-dimensional radial Fourier transform of `f` on `freq_grid`.
pub fn radial_fourier<F: Fn(f64) -> f64>(
    f: &F,
    r_max: f64,
    d: u32,
    freq_grid: &[f64],
) -> Result<RadialSpectrum, KernelError> {
    let mut values = Vec::with_capacity(freq_grid.len());
    for &rho in freq_grid {
        values.push(transform_point(f, r_max, d, rho)?);
    }
    Ok(RadialSpectrum::new(d, freq_grid.to_vec(), values))
}

/// Cumulative and tail integrals of t^{d-1} |spectrum(t)|^2, the scale-energy
/// density behind every kernel formula here. Keeping both directions avoids
/// cancellation when band integrals are taken near either end.
#[derive(Debug, Clone)]
pub struct SpectralEnergy {
    pub dimension_d: u32,
    cum: CubicTable,
    tail: CubicTable,
    pub t_max: f64,
    pub total: f64,
    /// certified bound on the neglected integral beyond t_max
    pub tail_certificate: f64,
    /// fitted envelope constant C with |spectrum(t)| <= C t^{-(d+1)}
    pub envelope_c: f64,
    t_mid: f64,
}

impl SpectralEnergy {
    pub fn from_spectrum(spec: &RadialSpectrum) -> Result<Self, KernelError> {
        let d = spec.dimension_d;
        let t_max = spec.max_freq();
        let knots = &spec.freq_grid;
        let integrand = |t: f64| {
            let v = spec.eval(t);
            t.powi(d as i32 - 1) * v * v
        };
        // cumulative integral knot to knot (integrand smooth between knots)
        let mut cum_vals = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        cum_vals.push(0.0);
        for w in knots.windows(2) {
            acc += gl_integrate(&integrand, w[0], w[1], 1);
            cum_vals.push(acc);
        }
        let total_inside = acc;

        // envelope fit |spectrum| <= C t^{-(d+1)} over the last half-decade
        let fit_from = t_max / 3.0;
        let mut envelope_c: f64 = 0.0;
        for (i, &t) in knots.iter().enumerate() {
            if t >= fit_from {
                envelope_c = envelope_c.max(spec.values[i].abs() * t.powi(d as i32 + 1));
            }
        }
        let tail_certificate =
            envelope_c * envelope_c * t_max.powi(-(d as i32 + 2)) / (d as f64 + 2.0);
        if tail_certificate > 1e-10 * total_inside {
            return Err(KernelError::QuadratureDiverged {
                context: format!(
                    "scale-energy tail beyond t = {t_max} not certified small \
                     (bound {tail_certificate:e} vs total {total_inside:e})"
                ),
                residual: tail_certificate,
            });
        }
        let total = total_inside + tail_certificate / 2.0;
        let tail_vals: Vec<f64> = cum_vals.iter().map(|&c| total - c).collect();
        let t_mid = knots[knots.len() / 2];
        Ok(Self {
            dimension_d: d,
            cum: CubicTable::new(knots.clone(), cum_vals),
            tail: CubicTable::new(knots.clone(), tail_vals),
            t_max,
            total,
            tail_certificate,
            envelope_c,
            t_mid,
        })
    }

    /// M(s) = int_s^inf t^{d-1} |spectrum|^2 dt.
    pub fn tail_from(&self, s: f64) -> f64 {
        if s >= self.t_max {
            return 0.0;
        }
        self.tail.eval(s).max(0.0)
    }

    /// Smallest tabulated s with M(s) <= q * M(0); the frequency beyond which
    /// the scale-energy is relatively negligible.
    pub fn freq_cutoff(&self, q: f64) -> f64 {
        let target = q * self.total;
        let knots = self.tail.xs();
        let vals = self.tail.ys();
        for (&s, &m) in knots.iter().zip(vals) {
            if m <= target {
                return s;
            }
        }
        self.t_max
    }

    /// Band integral int_a^b, evaluated from whichever cumulative direction
    /// keeps the subtraction well-conditioned.
    pub fn band(&self, a: f64, b: f64) -> f64 {
        debug_assert!(a <= b);
        let a = a.min(self.t_max);
        let b = b.min(self.t_max);
        if b <= self.t_mid {
            (self.cum.eval(b) - self.cum.eval(a)).max(0.0)
        } else if a >= self.t_mid {
            (self.tail.eval(a) - self.tail.eval(b)).max(0.0)
        } else {
            ((self.cum.eval(self.t_mid) - self.cum.eval(a))
                + (self.tail.eval(self.t_mid) - self.tail.eval(b)))
            .max(0.0)
        }
    }
}

/// Frequency grid adapted to a compactly supported profile of support S:
/// fine where the transform has structure, coarsening into the tail, and
/// extended adaptively until the spec's tail certificate holds.
pub fn spectrum_grid(support: f64, t_max: f64) -> Vec<f64> {
    let s = support;
    let mut grid = Vec::new();
    let mut push_range = |from: f64, to: f64, step: f64| {
        let mut t = from;
        while t < to - step * 0.5 {
            grid.push(t);
            t += step;
        }
    };
    push_range(0.0, 4.0 / s, s.recip() / 512.0);
    push_range(4.0 / s, (30.0 / s).min(t_max), s.recip() / 256.0);
    if t_max > 30.0 / s {
        push_range(30.0 / s, t_max, s.recip() / 24.0);
    }
    grid.push(t_max);
    grid
}

/// Coarse continuation knots on (from, to]; the spectrum out there is deep in
/// its superpolynomial tail and only needs enough accuracy to keep the
/// square-rooted profile free of truncation edges.
pub fn spectrum_extension_grid(support: f64, from: f64, to: f64) -> Vec<f64> {
    let step = support.recip() / 12.0;
    let mut grid = Vec::new();
    let mut t = from + step;
    while t < to {
        grid.push(t);
        t += step;
    }
    grid.push(to);
    grid
}
