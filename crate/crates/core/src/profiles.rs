//! Built-in radial profiles: initial data for experiments and the
//! self-similar reference solution used to validate the solver.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::smoothstep;
use crate::radial::{RadialDensity, RadialGrid};

/// Similarity exponent `α = d/(d(m−1)+2)` of the porous-medium source
/// solution.
pub fn barenblatt_alpha(d: u32, m: f64) -> f64 {
    let d = d as f64;
    d / (d * (m - 1.0) + 2.0)
}

/// Value at radius `rho` and time `t` of the Barenblatt solution
/// `t^{−α}·(C − k·ρ²·t^{−2α/d})₊^{1/(m−1)}` with `k = α(m−1)/(2md)`.
///
/// Solves `∂u/∂t = Δ(u^m)` for `m > 1` exactly; the free constant `C > 0`
/// sets the mass.
pub fn barenblatt(d: u32, m: f64, c: f64, t: f64, rho: f64) -> f64 {
    let alpha = barenblatt_alpha(d, m);
    let k = alpha * (m - 1.0) / (2.0 * m * d as f64);
    let arg = c - k * rho * rho * t.powf(-2.0 * alpha / d as f64);
    if arg <= 0.0 {
        0.0
    } else {
        t.powf(-alpha) * arg.powf(1.0 / (m - 1.0))
    }
}

/// Radius of the support of [`barenblatt`] at time `t`:
/// `sqrt(C/k)·t^{α/d}`.
pub fn barenblatt_support(d: u32, m: f64, c: f64, t: f64) -> f64 {
    let alpha = barenblatt_alpha(d, m);
    let k = alpha * (m - 1.0) / (2.0 * m * d as f64);
    (c / k).sqrt() * t.powf(alpha / d as f64)
}

/// Cell-averaged Barenblatt snapshot on a grid. Fails unless `m > 1` and
/// the support fits inside the grid.
pub fn barenblatt_density(
    grid: Arc<RadialGrid>,
    m: f64,
    c: f64,
    t: f64,
) -> Result<RadialDensity> {
    if !(m > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "self-similar source solution needs m > 1, got {m}"
        )));
    }
    if !(c > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "self-similar profile needs C > 0 and t > 0, got C={c}, t={t}"
        )));
    }
    let d = grid.dim();
    if barenblatt_support(d, m, c, t) >= grid.r_max() {
        return Err(Error::InvalidDomain(format!(
            "support radius {} does not fit inside the grid radius {}",
            barenblatt_support(d, m, c, t),
            grid.r_max()
        )));
    }
    RadialDensity::from_profile(grid, |rho| barenblatt(d, m, c, t, rho))
}

/// Plateau of height `level` on `[0, a]`, blended down to the small floor
/// `eps` over `[a, a+eps]` by a C² smoothstep, constant `eps` beyond.
///
/// This is the smooth stand-in for the indicator ball: positive everywhere
/// (so usable for fast diffusion) and radially nonincreasing.
pub fn smoothed_ball(z: f64, level: f64, a: f64, eps: f64) -> f64 {
    if z <= a {
        level
    } else if z >= a + eps {
        eps
    } else {
        level + (eps - level) * smoothstep((z - a) / eps)
    }
}

/// Cell-averaged [`smoothed_ball`] on a grid. Requires
/// `0 < a`, `a + eps ≤ r_max`, `0 < eps < level`.
pub fn smoothed_ball_density(
    grid: Arc<RadialGrid>,
    level: f64,
    a: f64,
    eps: f64,
) -> Result<RadialDensity> {
    if !(a > 0.0) || a + eps > grid.r_max() {
        return Err(Error::InvalidDomain(format!(
            "plateau [0, {a}] plus blend width {eps} must fit in [0, {}]",
            grid.r_max()
        )));
    }
    if !(eps > 0.0 && eps < level) {
        return Err(Error::InvalidParameter(format!(
            "blend width must satisfy 0 < eps < level, got eps={eps}, level={level}"
        )));
    }
    RadialDensity::from_profile(grid, |z| smoothed_ball(z, level, a, eps))
}

/// Indicator ball: constant `level` on `[0, a]`, vacuum beyond, with exact
/// partial-cell overlap at the edge.
pub fn uniform_ball_density(grid: Arc<RadialGrid>, level: f64, a: f64) -> Result<RadialDensity> {
    if !(level > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball level must be positive, got {level}"
        )));
    }
    let mass = level * grid.unit_ball() * a.powi(grid.dim() as i32);
    RadialDensity::uniform_shell(grid, 0.0, a, mass)
}

/// `amplitude·exp(−z²/(2·width²))`: an everywhere-positive bump whose
/// velocity field under linear `f` is exactly `z/width²`.
pub fn gaussian_bump(z: f64, amplitude: f64, width: f64) -> f64 {
    amplitude * (-z * z / (2.0 * width * width)).exp()
}

/// Cell-averaged [`gaussian_bump`] on a grid.
pub fn gaussian_bump_density(
    grid: Arc<RadialGrid>,
    amplitude: f64,
    width: f64,
) -> Result<RadialDensity> {
    if !(amplitude > 0.0) || !(width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bump needs positive amplitude and width, got {amplitude}, {width}"
        )));
    }
    RadialDensity::from_profile(grid, |z| gaussian_bump(z, amplitude, width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn source_solution_satisfies_the_equation() {
        // ∂_t B = ρ^{1−d} ∂_ρ(ρ^{d−1} ∂_ρ B^m), checked by central
        // differences inside the support.
        let (d, m, c) = (3u32, 2.0, 0.05);
        let h = 1e-5;
        let flux_arg = |t: f64, rho: f64| barenblatt(d, m, c, t, rho).powf(m);
        for (t, rho) in [(1.0, 0.2), (1.0, 0.5), (1.5, 0.7), (2.0, 0.4)] {
            let dt = (barenblatt(d, m, c, t + h, rho) - barenblatt(d, m, c, t - h, rho))
                / (2.0 * h);
            let grad = |r: f64| (flux_arg(t, r + h) - flux_arg(t, r - h)) / (2.0 * h);
            let d3 = d as f64;
            let lap = ((rho + h).powf(d3 - 1.0) * grad(rho + h)
                - (rho - h).powf(d3 - 1.0) * grad(rho - h))
                / (2.0 * h)
                / rho.powf(d3 - 1.0);
            assert_relative_eq!(dt, lap, max_relative = 1e-4, epsilon = 1e-8);
        }
    }

    #[test]
    fn source_solution_support_and_mass() {
        // d=3, m=2, C=0.05: α=3/5, k=1/20, so C=k puts the front at ρ=1
        // when t=1.
        assert_relative_eq!(barenblatt_alpha(3, 2.0), 0.6, max_relative = 1e-15);
        assert_relative_eq!(barenblatt_support(3, 2.0, 0.05, 1.0), 1.0, max_relative = 1e-12);
        assert_eq!(barenblatt(3, 2.0, 0.05, 1.0, 1.000001), 0.0);
        assert!(barenblatt(3, 2.0, 0.05, 1.0, 0.999) > 0.0);

        let grid = RadialGrid::uniform(3, 3.0, 1500).unwrap();
        let early = barenblatt_density(grid.clone(), 2.0, 0.05, 1.0).unwrap();
        let late = barenblatt_density(grid, 2.0, 0.05, 2.0).unwrap();
        assert_relative_eq!(early.mass(), late.mass(), max_relative = 1e-7);
    }

    #[test]
    fn source_solution_rejects_bad_parameters() {
        let grid = RadialGrid::uniform(3, 1.0, 32).unwrap();
        // Support radius 1 equals the grid radius: no room.
        assert!(barenblatt_density(grid.clone(), 2.0, 0.05, 1.0).is_err());
        assert!(barenblatt_density(grid.clone(), 0.8, 0.01, 1.0).is_err());
        assert!(barenblatt_density(grid, 2.0, -0.1, 1.0).is_err());
    }

    #[test]
    fn smoothed_ball_shape() {
        let (level, a, eps) = (2.0, 1.0, 0.01);
        assert_eq!(smoothed_ball(0.5, level, a, eps), level);
        assert_eq!(smoothed_ball(a, level, a, eps), level);
        assert_eq!(smoothed_ball(a + eps, level, a, eps), eps);
        assert_eq!(smoothed_ball(1.4, level, a, eps), eps);
        // Monotone decay across the blend.
        let mut prev = level;
        for i in 0..=100 {
            let z = a + eps * i as f64 / 100.0;
            let v = smoothed_ball(z, level, a, eps);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        // C¹ at both junctions: one-sided slopes vanish.
        let h = 1e-7;
        for z in [a, a + eps] {
            let fd = (smoothed_ball(z + h, level, a, eps) - smoothed_ball(z - h, level, a, eps)) / (2.0 * h);
            assert_abs_diff_eq!(fd, 0.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn uniform_ball_mass_is_exact() {
        let grid = RadialGrid::uniform(3, 1.5, 173).unwrap();
        let u = uniform_ball_density(grid.clone(), 2.0, 1.0).unwrap();
        assert_relative_eq!(u.mass(), 2.0 * grid.unit_ball(), max_relative = 1e-12);
        assert_relative_eq!(u.values()[0], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_bump_normalization() {
        assert_relative_eq!(gaussian_bump(0.0, 1.5, 2.0), 1.5);
        assert_relative_eq!(
            gaussian_bump(2.0, 1.5, 2.0),
            1.5 * (-0.5f64).exp(),
            max_relative = 1e-15
        );
        let grid = RadialGrid::uniform(1, 30.0, 3000).unwrap();
        let u = gaussian_bump_density(grid, 1.0, 1.0).unwrap();
        // d=1 radial mass is 2∫₀^∞ e^{−z²/2} dz = √(2π).
        assert_relative_eq!(
            u.mass(),
            (2.0 * std::f64::consts::PI).sqrt(),
            max_relative = 1e-9
        );
    }
}
