//! Smoothstep blending, monotone cubic interpolation, and monotone inversion.

use crate::error::{Error, Result};

/// C² quintic smoothstep: 0 at 0, 1 at 1, zero first and second derivatives
/// at both ends; clamped outside `[0, 1]`.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

/// Derivative of [`smoothstep`]: `30·s²(1−s)²` inside `[0, 1]`.
pub fn smoothstep_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let t = s * (1.0 - s);
        30.0 * t * t
    }
}

/// Antiderivative of [`smoothstep`] vanishing at 0.
///
/// Equals `1/2` at `s = 1` (point symmetry of the smoothstep about `s = 1/2`)
/// and continues as `s − 1/2` beyond.
pub fn smoothstep_integral(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        s - 0.5
    } else {
        let s2 = s * s;
        s2 * s2 * (2.5 + s * (-3.0 + s))
    }
}

/// Solve `g(x) = target` for a nondecreasing `g` on `[lo, hi]` by bisection.
///
/// Returns the bracket midpoint once the bracket width drops below `tol`
/// (absolute, on x). Values outside the range of `g` clamp to an endpoint.
pub fn invert_increasing<F: Fn(f64) -> f64>(g: &F, lo: f64, hi: f64, target: f64, tol: f64) -> f64 {
    debug_assert!(lo <= hi && tol > 0.0);
    if g(lo) >= target {
        return lo;
    }
    if g(hi) <= target {
        return hi;
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Shape-preserving cubic interpolant (Fritsch–Carlson node slopes).
///
/// Monotone data produce a monotone interpolant; general data produce a
/// local-extremum-respecting one (no overshoot past data values). Evaluation
/// outside the node range extends linearly with the end slope.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "interpolation needs >= 2 matched nodes, got {} x {}",
                x.len(),
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite interpolation node".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "interpolation abscissae must be strictly increasing".into(),
            ));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let sec: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut slope = vec![0.0; n];
        if n == 2 {
            slope[0] = sec[0];
            slope[1] = sec[0];
        } else {
            for k in 1..n - 1 {
                if sec[k - 1] * sec[k] <= 0.0 {
                    slope[k] = 0.0;
                } else {
                    // Brodlie weighted harmonic mean keeps the interpolant
                    // within the monotonicity region.
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slope[k] = (w1 + w2) / (w1 / sec[k - 1] + w2 / sec[k]);
                }
            }
            slope[0] = edge_slope(h[0], h[1], sec[0], sec[1]);
            slope[n - 1] = edge_slope(h[n - 2], h[n - 3], sec[n - 2], sec[n - 3]);
        }
        Ok(Self { x, y, slope })
    }

    /// Index of the segment containing `t` (clamped to the end segments).
    fn segment(&self, t: f64) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.slope[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.slope[n - 1] * (t - self.x[n - 1]);
        }
        let k = self.segment(t);
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.y[k] * h00 + h * self.slope[k] * h10 + self.y[k + 1] * h01 + h * self.slope[k + 1] * h11
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.slope[0];
        }
        if t >= self.x[n - 1] {
            return self.slope[n - 1];
        }
        let k = self.segment(t);
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (self.y[k] * d00 + h * self.slope[k] * d10 + self.y[k + 1] * d01
            + h * self.slope[k + 1] * d11)
            / h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn node_values(&self) -> &[f64] {
        &self.y
    }

    pub fn node_slopes(&self) -> &[f64] {
        &self.slope
    }

    /// Coefficients `(A, B, C)` of the segment derivative as a quadratic in
    /// the *absolute* abscissa: on segment `k`, `p′(ρ) = A·ρ² + B·ρ + C`.
    ///
    /// `k = len − 1` addresses the linear extension beyond the last node.
    pub(crate) fn deriv_poly_abs(&self, k: usize) -> (f64, f64, f64) {
        let n = self.x.len();
        if k >= n - 1 {
            return (0.0, 0.0, self.slope[n - 1]);
        }
        let h = self.x[k + 1] - self.x[k];
        let (y0, y1) = (self.y[k], self.y[k + 1]);
        let (d0, d1) = (self.slope[k], self.slope[k + 1]);
        // p′(x0 + h·s) = α s² + β s + d0
        let alpha = (6.0 * (y0 - y1)) / h + 3.0 * (d0 + d1);
        let beta = (6.0 * (y1 - y0)) / h - 4.0 * d0 - 2.0 * d1;
        let x0 = self.x[k];
        let a = alpha / (h * h);
        let b = beta / h - 2.0 * alpha * x0 / (h * h);
        let c = alpha * x0 * x0 / (h * h) - beta * x0 / h + d0;
        (a, b, c)
    }
}

/// Three-point end-slope formula with the standard monotonicity clamps.
fn edge_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}
