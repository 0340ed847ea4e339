//! Gauss–Legendre quadrature, adaptive refinement, and ball geometry.

use std::sync::OnceLock;

/// Volume of the unit ball in `ℝᵈ`.
///
/// Closed forms by parity (no gamma function needed): `π^{d/2}/(d/2)!` for
/// even `d`, `2·(2π)^{(d−1)/2}/d!!` for odd `d`.
pub fn unit_ball_volume(d: u32) -> f64 {
    if d % 2 == 0 {
        let mut v = 1.0;
        for k in 1..=(d / 2) {
            v *= std::f64::consts::PI / k as f64;
        }
        v
    } else {
        let mut v = 2.0;
        for _ in 0..(d / 2) {
            v *= 2.0 * std::f64::consts::PI;
        }
        let mut dd = 1.0;
        let mut k = d;
        while k > 1 {
            dd *= k as f64;
            k -= 2;
        }
        v / dd
    }
}

/// Surface area of the unit sphere in `ℝᵈ`, `σ_d = d·c_d`.
pub fn unit_sphere_area(d: u32) -> f64 {
    d as f64 * unit_ball_volume(d)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on `P_n` from asymptotic initial guesses.
fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // P_n′ from the recurrence; x = ±1 never arises for n ≥ 1 roots.
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * pp * pp)));
    }
    rule
}

fn gl16() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(16))
}

/// `∫_a^b f` by the fixed 16-point Gauss–Legendre rule.
pub fn gauss16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for &(x, w) in gl16() {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// `∫_a^b f` by an `n`-point Gauss–Legendre rule (nodes computed on demand).
pub fn gauss_n<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let rule;
    let nodes: &[(f64, f64)] = if n == 16 {
        gl16()
    } else {
        rule = legendre_rule(n);
        &rule
    };
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for &(x, w) in nodes {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// Adaptive integration of a piecewise-smooth integrand on `[a, b]`.
///
/// Bisects until the refined two-half 16-point estimate agrees with the
/// parent estimate within `max(abs_tol, rel_tol·|refined|)`; the absolute
/// budget is split between halves so the total honors `abs_tol`. Depth is
/// capped, so integrable endpoint singularities terminate with the best
/// available refinement rather than recursing forever.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gauss16(f, a, b);
    adaptive_rec(f, a, b, whole, rel_tol, abs_tol, 30)
}

fn adaptive_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gauss16(f, a, mid);
    let right = gauss16(f, mid, b);
    let refined = left + right;
    let err = (refined - whole).abs();
    if depth == 0 || err <= abs_tol.max(rel_tol * refined.abs()) || mid <= a || mid >= b {
        return refined;
    }
    adaptive_rec(f, a, mid, left, rel_tol, 0.5 * abs_tol, depth - 1)
        + adaptive_rec(f, mid, b, right, rel_tol, 0.5 * abs_tol, depth - 1)
}

/// Adaptive integration over `[pts[0], pts[last]]` with forced subdivision at
/// the interior points (kinks, blend-window edges, profile joints).
pub fn adaptive_with_breakpoints<F: Fn(f64) -> f64>(
    f: &F,
    pts: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    debug_assert!(pts.windows(2).all(|w| w[0] <= w[1]));
    let mut total = 0.0;
    let per_piece = abs_tol / pts.len().max(2) as f64;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            total += adaptive(f, w[0], w[1], rel_tol, per_piece);
        }
    }
    total
}
