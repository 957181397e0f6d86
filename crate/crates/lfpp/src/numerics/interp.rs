//! Cubic (4-point Lagrange) interpolation on a monotone knot grid.
//! Used for kernel tabulations on log-spaced radius/frequency grids.

#[derive(Debug, Clone)]
pub struct CubicTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl CubicTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 4, "cubic interpolation needs >= 4 knots");
        assert!(
            xs.windows(2).all(|w| w[0] < w[1]),
            "knots must be strictly increasing"
        );
        Self { xs, ys }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Evaluate at x. Outside the knot range the boundary value is held;
    /// kernel profiles vanish (or are tabulated far past) their useful range,
    /// so the clamp only touches negligible tails.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p => p - 1,
        };
        // window of 4 knots around interval i
        let lo = i.saturating_sub(1).min(n - 4);
        let xw = &self.xs[lo..lo + 4];
        let yw = &self.ys[lo..lo + 4];
        lagrange4(xw, yw, x)
    }
}

impl CubicTable {
    /// Exact integral of eval(x) * x^power over the knot range: the
    /// interpolant is piecewise cubic, so 3-point Gauss-Legendre per knot
    /// interval is exact for power <= 2.
    pub fn integrate_prod_power(&self, power: i32) -> f64 {
        debug_assert!((0..=2).contains(&power));
        // GL3 nodes on [-1, 1]
        let x1 = (3.0f64 / 5.0).sqrt();
        let nodes = [-x1, 0.0, x1];
        let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let mut total = 0.0;
        // leading stub [0, x_min] uses the clamped boundary value
        if self.xs[0] > 0.0 {
            let a = self.xs[0];
            total += self.ys[0] * a.powi(power + 1) / (power + 1) as f64;
        }
        for w in self.xs.windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut acc = 0.0;
            for i in 0..3 {
                let x = mid + h * nodes[i];
                acc += weights[i] * self.eval(x) * x.powi(power);
            }
            total += acc * h;
        }
        total
    }
}

fn lagrange4(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..4 {
        let mut lj = 1.0;
        for k in 0..4 {
            if k != j {
                lj *= (x - xs[k]) / (xs[j] - xs[k]);
            }
        }
        acc += ys[j] * lj;
    }
    acc
}

/// Log-spaced grid with `n` points spanning [lo, hi].
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (la, lb) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduces_cubics() {
        let xs = log_grid(0.1, 10.0, 64);
        let f = |x: f64| 2.0 * x * x * x - x + 0.5;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let t = CubicTable::new(xs, ys);
        for &x in &[0.11, 0.5, 1.0, 3.7, 9.9] {
            assert!((t.eval(x) - f(x)).abs() < 1e-9 * f(x).abs().max(1.0));
        }
    }

    #[test]
    fn smooth_function_accuracy() {
        let xs = log_grid(1e-3, 1e3, 4096);
        let f = |x: f64| (-x).exp() * (1.0 + x).ln();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let t = CubicTable::new(xs, ys);
        for &x in &[2e-3, 0.04, 0.9, 17.3, 500.0] {
            let err = (t.eval(x) - f(x)).abs();
            assert!(err < 1e-10, "x={x}: err={err}");
        }
    }
}
