//! Witness construction for failure of the contraction property.
//!
//! A plateau of density `r` on the ball of radius `a` is rearranged
//! outward by a piecewise-linear radial map with slopes `(1+δ, 1/2, 1)`.
//! Both the map and the plateau get one-sided smooth corrections of width
//! `ε`, and the pairing `I₁ + I₂` between the resulting pair is evaluated
//! by annulus quadrature. Its `ε → 0` limit is
//! `σ_d·δ·a^d·[(1+δ)^{d−1}·f(r(1+δ)^{−d}) − f(r)]`, which is positive
//! exactly where the convexity condition on `f` fails at density `r`.

use crate::error::{Error, Result};
use crate::interp::{smoothstep, smoothstep_integral};
use crate::nonlinearity::Nonlinearity;
use crate::profiles::smoothed_ball;
use crate::quad::{adaptive_with_breakpoints, gauss16, unit_ball_volume, unit_sphere_area};
use crate::radial::{RadialDensity, RadialGrid};
use crate::solver::SolverConfig;
use crate::transport::{self, CoEvolution, DissipationSample};

/// Geometry and resolution of one witness experiment.
///
/// `eps` plays two roles sharing one small parameter: the map blend
/// windows have width `ε·a`, while the density shoulder occupies
/// `[a, a+ε]` and floors at the value `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleSpec {
    pub d: u32,
    /// Plateau density on `[0, a]`.
    pub r: f64,
    pub a: f64,
    pub delta: f64,
    pub eps: f64,
    pub r_max: f64,
    /// Cells of the uniform grid the data is discretized on.
    pub n: usize,
}

impl CounterexampleSpec {
    pub fn new(
        d: u32,
        r: f64,
        a: f64,
        delta: f64,
        eps: f64,
        r_max: f64,
        n: usize,
    ) -> Result<Self> {
        let spec = Self { d, r, a, delta, eps, r_max, n };
        spec.validate()?;
        Ok(spec)
    }

    /// Largest admissible mollification width for this geometry.
    pub fn eps_ceiling(&self) -> f64 {
        self.delta.min(1.0) * self.a / 10.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "plateau density must be positive, got {}",
                self.r
            )));
        }
        if !(self.a > 0.0 && self.a < self.r_max) {
            return Err(Error::InvalidDomain(format!(
                "plateau radius {} must lie inside (0, {})",
                self.a, self.r_max
            )));
        }
        let delta_sup = (self.r_max - self.a) / (2.0 * self.a);
        if !(self.delta > 0.0 && self.delta < delta_sup) {
            return Err(Error::InvalidDomain(format!(
                "displacement {} must lie strictly inside (0, {delta_sup})",
                self.delta
            )));
        }
        if !(self.eps > 0.0 && self.eps <= self.eps_ceiling()) {
            return Err(Error::InvalidParameter(format!(
                "mollification width {} outside (0, {}]",
                self.eps,
                self.eps_ceiling()
            )));
        }
        // The two blend windows live on opposite sides of the transition
        // annulus and must not meet.
        if self.eps >= self.delta {
            return Err(Error::InvalidParameter(format!(
                "width {} must stay below the displacement {}",
                self.eps, self.delta
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter("grid needs at least two cells".into()));
        }
        Ok(())
    }
}

/// The exact rearrangement: dilation by `1+δ` up to `a`, slope `1/2`
/// across the annulus, identity beyond `(1+2δ)a`.
#[derive(Debug, Clone, Copy)]
pub struct PiecewiseMap {
    a: f64,
    delta: f64,
    c2: f64,
}

impl PiecewiseMap {
    pub fn eval(&self, z: f64) -> f64 {
        if z <= self.a {
            (1.0 + self.delta) * z
        } else if z < self.c2 {
            0.5 * (z + self.c2)
        } else {
            z
        }
    }

    pub fn slope(&self, z: f64) -> f64 {
        if z <= self.a {
            1.0 + self.delta
        } else if z < self.c2 {
            0.5
        } else {
            1.0
        }
    }

    /// The two corner radii `(a, (1+2δ)a)`.
    pub fn knees(&self) -> (f64, f64) {
        (self.a, self.c2)
    }
}

pub fn build_psi(spec: &CounterexampleSpec) -> PiecewiseMap {
    PiecewiseMap {
        a: spec.a,
        delta: spec.delta,
        c2: (1.0 + 2.0 * spec.delta) * spec.a,
    }
}

/// Normalized slope shape on a blend window: starts at 1, dips to `−κ`,
/// returns to 0. The dip makes `∫₀¹ φ = 0`, so the window's endpoint
/// values match the unmollified map; with plateau `[β, 1−β]` that forces
/// `κ = β/(2−2β)`.
#[derive(Debug, Clone, Copy)]
struct SlopeProfile {
    kappa: f64,
    beta: f64,
    gamma: f64,
}

impl SlopeProfile {
    fn new(kappa: f64) -> Self {
        let beta = 2.0 * kappa / (1.0 + 2.0 * kappa);
        Self { kappa, beta, gamma: 1.0 - beta }
    }

    fn phi(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        if s >= 1.0 {
            return 0.0;
        }
        if s < self.beta {
            1.0 - (1.0 + self.kappa) * smoothstep(s / self.beta)
        } else if s <= self.gamma {
            -self.kappa
        } else {
            -self.kappa * (1.0 - smoothstep((s - self.gamma) / (1.0 - self.gamma)))
        }
    }

    /// `∫₀^s φ`; vanishes at both endpoints.
    fn phi_int(&self, s: f64) -> f64 {
        let (k, b, g) = (self.kappa, self.beta, self.gamma);
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        if s < b {
            return s - (1.0 + k) * b * smoothstep_integral(s / b);
        }
        let v_b = b - (1.0 + k) * b * 0.5;
        if s <= g {
            return v_b - k * (s - b);
        }
        let v_g = v_b - k * (g - b);
        let tail = 1.0 - g;
        v_g - k * ((s - g) - tail * smoothstep_integral((s - g) / tail))
    }
}

/// `C¹` monotone correction of [`PiecewiseMap`], equal to it away from two
/// one-sided windows of width `ε·a` placed just outside each corner.
#[derive(Debug, Clone)]
pub struct MollifiedMap {
    psi: PiecewiseMap,
    a: f64,
    w: f64,
    c2: f64,
    r_max: f64,
    k: (f64, f64, f64),
    p1: SlopeProfile,
    p2: SlopeProfile,
    lambda: f64,
    amplitude: f64,
}

/// Sample points per window segment when certifying the construction.
const CERTIFY_SAMPLES: usize = 2000;

/// Builds the corrected map and certifies its invariants by dense
/// sampling: the derivative stays in `[1/Λ, Λ]` and `‖ψᵉ − ψ‖_∞ ≤ A·ε`.
/// The measured `Λ` and `A` are stored on the returned map.
pub fn mollify(spec: &CounterexampleSpec) -> Result<MollifiedMap> {
    spec.validate()?;
    let psi = build_psi(spec);
    let (k1, k2, k3) = (1.0 + spec.delta, 0.5, 1.0);
    let mut map = MollifiedMap {
        psi,
        a: spec.a,
        w: spec.eps * spec.a,
        c2: psi.c2,
        r_max: spec.r_max,
        k: (k1, k2, k3),
        // Cap the first dip so the slope keeps at least a quarter of k2.
        p1: SlopeProfile::new((0.75 * k2 / (k1 - k2)).min(0.5)),
        p2: SlopeProfile::new(0.5),
        lambda: 0.0,
        amplitude: 0.0,
    };

    let mut min_deriv = f64::INFINITY;
    let mut max_deriv: f64 = 0.0;
    let mut sup_diff: f64 = 0.0;
    let pts = map.breakpoints();
    for seg in pts.windows(2) {
        if seg[1] <= seg[0] {
            continue;
        }
        for i in 0..=CERTIFY_SAMPLES {
            let z = seg[0] + (seg[1] - seg[0]) * i as f64 / CERTIFY_SAMPLES as f64;
            let dv = map.deriv(z);
            min_deriv = min_deriv.min(dv);
            max_deriv = max_deriv.max(dv);
            sup_diff = sup_diff.max((map.eval(z) - psi.eval(z)).abs());
        }
    }
    if !(min_deriv > 0.0) {
        return Err(Error::Mollification(format!(
            "corrected map is not increasing: min slope {min_deriv}"
        )));
    }
    let lambda = (1.0 + spec.delta).max(1.0 / min_deriv);
    if max_deriv > lambda * (1.0 + 1e-12) {
        return Err(Error::Mollification(format!(
            "slope {max_deriv} exceeds the certified bound {lambda}"
        )));
    }
    map.lambda = lambda;
    map.amplitude = sup_diff / spec.eps;
    Ok(map)
}

impl MollifiedMap {
    pub fn eval(&self, z: f64) -> f64 {
        let (k1, k2, k3) = self.k;
        if z > self.a && z < self.a + self.w {
            let s = (z - self.a) / self.w;
            self.psi.eval(self.a) + k2 * (z - self.a) + (k1 - k2) * self.w * self.p1.phi_int(s)
        } else if z > self.c2 - self.w && z < self.c2 {
            let lead = z - (self.c2 - self.w);
            let s = lead / self.w;
            self.psi.eval(self.c2 - self.w) + k2 * lead
                - (k3 - k2) * self.w * self.p2.phi_int(1.0 - s)
        } else {
            self.psi.eval(z)
        }
    }

    pub fn deriv(&self, z: f64) -> f64 {
        let (k1, k2, k3) = self.k;
        if z > self.a && z < self.a + self.w {
            k2 + (k1 - k2) * self.p1.phi((z - self.a) / self.w)
        } else if z > self.c2 - self.w && z < self.c2 {
            k2 + (k3 - k2) * self.p2.phi(1.0 - (z - (self.c2 - self.w)) / self.w)
        } else {
            self.psi.slope(z)
        }
    }

    /// The primitive `φᵉ(z) = ∫₀^z ψᵉ`, whose radial gradient is the map.
    /// Piecewise polynomial, so per-segment Gauss nodes integrate exactly.
    pub fn primitive(&self, z: f64) -> f64 {
        let zc = z.clamp(0.0, self.r_max);
        let mut pts = vec![0.0];
        pts.extend(self.breakpoints().iter().copied().filter(|&p| p < zc));
        pts.push(zc);
        let mut total = 0.0;
        for seg in pts.windows(2) {
            if seg[1] > seg[0] {
                total += gauss16(&|t| self.eval(t), seg[0], seg[1]);
            }
        }
        total
    }

    /// Inverse map on `[0, r_max]`, by bisection with a Newton polish.
    /// Exact on the two linear tails.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= self.k.0 * self.a {
            return y / self.k.0;
        }
        if y >= self.c2 {
            return y;
        }
        let (mut lo, mut hi) = (self.a, self.c2);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        for _ in 0..3 {
            z -= (self.eval(z) - y) / self.deriv(z);
            z = z.clamp(self.a, self.c2);
        }
        z
    }

    pub fn exact(&self) -> &PiecewiseMap {
        &self.psi
    }

    /// Certified derivative bound: `ψᵉ′ ∈ [1/Λ, Λ]`, with `Λ ≥ 1+δ`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Certified deviation factor: `‖ψᵉ − ψ‖_∞ ≤ A·ε`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Joints of the piecewise-polynomial structure, ordered: the window
    /// edges and the interior profile plateau edges.
    pub fn breakpoints(&self) -> [f64; 8] {
        [
            self.a,
            self.a + self.w * self.p1.beta,
            self.a + self.w * self.p1.gamma,
            self.a + self.w,
            self.c2 - self.w,
            self.c2 - self.w * self.p2.gamma,
            self.c2 - self.w * self.p2.beta,
            self.c2,
        ]
    }
}

/// Total mass `M = c_d·a^d·r` of the witness pair.
pub fn target_mass(spec: &CounterexampleSpec) -> f64 {
    unit_ball_volume(spec.d) * spec.a.powi(spec.d as i32) * spec.r
}

/// Builds the discretized pair: the normalized shoulder profile `u₀ᵉ` and
/// its pushforward `v₀ᵉ` under the corrected map.
pub fn build_mollified_data(
    spec: &CounterexampleSpec,
) -> Result<(RadialDensity, RadialDensity)> {
    let map = mollify(spec)?;
    let grid = RadialGrid::uniform(spec.d, spec.r_max, spec.n)?;
    let di = spec.d as i32;
    let sigma = unit_sphere_area(spec.d);

    // Cell masses of the raw profile. Splitting at the two shoulder joints
    // leaves a polynomial on every piece, so the fixed rule is exact and
    // the normalized density carries mass M to rounding.
    let joints = [spec.a, spec.a + spec.eps];
    let mut masses = Vec::with_capacity(spec.n);
    for w in grid.edges().windows(2) {
        let mut pts = vec![w[0]];
        pts.extend(joints.iter().copied().filter(|&j| j > w[0] && j < w[1]));
        pts.push(w[1]);
        let mut cell = 0.0;
        for seg in pts.windows(2) {
            cell += gauss16(
                &|z: f64| smoothed_ball(z, spec.r, spec.a, spec.eps) * z.powi(di - 1),
                seg[0],
                seg[1],
            );
        }
        masses.push(sigma * cell);
    }
    let raw_total: f64 = masses.iter().sum();
    let norm = target_mass(spec) / raw_total;
    let values = masses
        .iter()
        .zip(grid.volumes())
        .map(|(m, v)| norm * m / v)
        .collect();
    let u0 = RadialDensity::from_values(grid.clone(), values)?;
    let v0 = u0.pushforward(|z| map.eval(z), grid)?;
    Ok((u0, v0))
}

/// Evaluates the two dissipation integrals `(I₁ᵉ, I₂ᵉ)` for the continuum
/// pair by integration by parts over the shoulder and the annulus.
///
/// With `w(z) = (ψᵉ(z) − z)·z^{d−1}` and `v(z) = (z − ψᵉ(z))·ψᵉ(z)^{d−1}`:
///
/// `I₂ = σ·[f(u₀)·w]_a^{a+ε} − σ·∫_a^{a+ε} f(u₀)·w′`
/// `I₁ = σ·(−f(g(a))·v(a)) − σ·∫_a^{c₂} f(g)·v′`
///
/// where `g = u₀ / (ψᵉ′·(ψᵉ/z)^{d−1})` is the pushforward density along
/// the map. Boundary terms outside these ranges vanish because the
/// integrands are supported where the map moves mass and the profile
/// varies.
pub fn dissipation_integrals(
    spec: &CounterexampleSpec,
    f: &Nonlinearity,
) -> Result<(f64, f64)> {
    spec.validate()?;
    let map = mollify(spec)?;
    let d = spec.d as f64;
    let di = spec.d as i32;
    let sigma = unit_sphere_area(spec.d);
    let (a, eps) = (spec.a, spec.eps);
    let c2 = map.c2;

    let z_total = sigma
        * adaptive_with_breakpoints(
            &|z: f64| smoothed_ball(z, spec.r, a, eps) * z.powi(di - 1),
            &[0.0, a, a + eps, spec.r_max],
            1e-13,
            1e-14,
        );
    let norm = target_mass(spec) / z_total;
    let u0 = |z: f64| norm * smoothed_ball(z, spec.r, a, eps);

    let wmap = |z: f64| (map.eval(z) - z) * z.powi(di - 1);
    let wmap_d = |z: f64| {
        (map.deriv(z) - 1.0) * z.powi(di - 1)
            + (map.eval(z) - z) * (d - 1.0) * z.powi(di - 2)
    };
    let mut pts2: Vec<f64> = vec![a, a + eps];
    pts2.extend(map.breakpoints().iter().copied().filter(|&p| p > a && p < a + eps));
    pts2.sort_by(f64::total_cmp);
    pts2.dedup();
    let i2 = sigma
        * (f.f(u0(a + eps)) * wmap(a + eps) - f.f(u0(a)) * wmap(a)
            - adaptive_with_breakpoints(&|z| f.f(u0(z)) * wmap_d(z), &pts2, 1e-13, 1e-14));

    let g = |z: f64| u0(z) / (map.deriv(z) * (map.eval(z) / z).powi(di - 1));
    let vmap = |z: f64| (z - map.eval(z)) * map.eval(z).powi(di - 1);
    let vmap_d = |z: f64| {
        (1.0 - map.deriv(z)) * map.eval(z).powi(di - 1)
            + (z - map.eval(z)) * (d - 1.0) * map.eval(z).powi(di - 2) * map.deriv(z)
    };
    let mut pts1: Vec<f64> = vec![a, a + eps, c2];
    pts1.extend(map.breakpoints().iter().copied().filter(|&p| p > a && p < c2));
    pts1.sort_by(f64::total_cmp);
    pts1.dedup();
    let i1 = sigma
        * (-f.f(g(a)) * vmap(a)
            - adaptive_with_breakpoints(&|z| f.f(g(z)) * vmap_d(z), &pts1, 1e-13, 1e-14));
    Ok((i1, i2))
}

/// The `ε → 0` limit of `I₁ + I₂`:
/// `σ_d·δ·a^d·[(1+δ)^{d−1}·f(r(1+δ)^{−d}) − f(r)]`.
pub fn closed_form_limit(spec: &CounterexampleSpec, f: &Nonlinearity) -> f64 {
    let d = spec.d as f64;
    let lam = 1.0 + spec.delta;
    let bracket = lam.powf(d - 1.0) * f.f(spec.r / lam.powf(d)) - f.f(spec.r);
    unit_sphere_area(spec.d) * spec.delta * spec.a.powi(spec.d as i32) * bracket
}

/// `[(1+δ)^{d−1}·f(r(1+δ)^{−d}) − f(r)]/δ`, the rescaled limit bracket.
/// As `δ → 0` it tends to `(d−1)f(r) − d·r·f′(r)`, the negated margin of
/// the convexity condition at `r`.
pub fn small_delta_slope(f: &Nonlinearity, d: u32, r: f64, delta: f64) -> f64 {
    let dd = d as f64;
    let lam = 1.0 + delta;
    (lam.powf(dd - 1.0) * f.f(r / lam.powf(dd)) - f.f(r)) / delta
}

/// Width ladder used for the vanishing-width extrapolation.
pub const EPS_LADDER: [f64; 4] = [1e-2, 3e-3, 1e-3, 3e-4];

#[derive(Debug, Clone)]
pub struct ExtrapolationReport {
    pub eps: Vec<f64>,
    /// `I₁ + I₂` per rung.
    pub totals: Vec<f64>,
    /// Least-squares intercept of the structured fit.
    pub limit: f64,
    /// Exponents `(p₁, p₂)` of the fit basis `{1, ε^{p₁}, ε^{p₂}}`.
    pub basis_powers: (f64, f64),
    /// Convergence order matched to the last three rungs; NaN when their
    /// difference ratio admits no order in `[0.05, 4]`.
    pub observed_order: f64,
}

fn basis_powers(f: &Nonlinearity) -> (f64, f64) {
    // Sublinear growth of f leaks an ε^m term into the shoulder
    // contribution, so the fit must carry that exponent explicitly.
    match f.power_exponent() {
        Some(m) if m < 0.999 => (m, 1.0),
        _ => (1.0, 2.0),
    }
}

/// Least-squares intercept of `totals ≈ x₀ + x₁·ε^{p₁} + x₂·ε^{p₂}` via
/// modified Gram-Schmidt on the three basis columns.
fn fit_limit(eps: &[f64], totals: &[f64], powers: (f64, f64)) -> f64 {
    let n = eps.len();
    let cols: [Vec<f64>; 3] = [
        vec![1.0; n],
        eps.iter().map(|e| e.powf(powers.0)).collect(),
        eps.iter().map(|e| e.powf(powers.1)).collect(),
    ];
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut r = [[0.0f64; 3]; 3];
    for (j, col) in cols.iter().enumerate() {
        let mut v = col.clone();
        for (i, qi) in q.iter().enumerate() {
            r[i][j] = dot(qi, &v);
            for (vk, qk) in v.iter_mut().zip(qi) {
                *vk -= r[i][j] * qk;
            }
        }
        r[j][j] = dot(&v, &v).sqrt();
        for vk in &mut v {
            *vk /= r[j][j];
        }
        q.push(v);
    }
    let b: Vec<f64> = q.iter().map(|qi| dot(qi, totals)).collect();
    let x2 = b[2] / r[2][2];
    let x1 = (b[1] - r[1][2] * x2) / r[1][1];
    (b[0] - r[0][1] * x1 - r[0][2] * x2) / r[0][0]
}

/// Fits the convergence order `p` solving
/// `(A₁−A₂)/(A₂−A₃) = (ε₁^p−ε₂^p)/(ε₂^p−ε₃^p)` over the last three rungs.
pub fn observed_order(eps: &[f64], totals: &[f64]) -> f64 {
    let n = eps.len();
    if n < 3 {
        return f64::NAN;
    }
    let (e1, e2, e3) = (eps[n - 3], eps[n - 2], eps[n - 1]);
    let (a1, a2, a3) = (totals[n - 3], totals[n - 2], totals[n - 1]);
    let fun = |p: f64| {
        (a1 - a2) / (a2 - a3) - (e1.powf(p) - e2.powf(p)) / (e2.powf(p) - e3.powf(p))
    };
    let (mut lo, mut hi) = (0.05, 4.0);
    if fun(lo) * fun(hi) > 0.0 {
        return f64::NAN;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fun(lo) * fun(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Runs the ladder of widths and extrapolates `I₁ + I₂` to zero width.
/// `ladder` entries replace `spec.eps`; the rest of `spec` is reused.
pub fn extrapolate_limit(
    spec: &CounterexampleSpec,
    f: &Nonlinearity,
    ladder: &[f64],
) -> Result<ExtrapolationReport> {
    if ladder.len() < 3 {
        return Err(Error::InvalidParameter(
            "extrapolation needs at least three widths".into(),
        ));
    }
    let mut eps = Vec::with_capacity(ladder.len());
    let mut totals = Vec::with_capacity(ladder.len());
    for &e in ladder {
        let rung = CounterexampleSpec { eps: e, ..*spec };
        let (i1, i2) = dissipation_integrals(&rung, f)?;
        eps.push(e);
        totals.push(i1 + i2);
    }
    let powers = basis_powers(f);
    let limit = fit_limit(&eps, &totals, powers);
    let order = observed_order(&eps, &totals);
    Ok(ExtrapolationReport {
        eps,
        totals,
        limit,
        basis_powers: powers,
        observed_order: order,
    })
}

/// One row of a width/exponent sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepCell {
    pub d: u32,
    pub m: f64,
    pub r: f64,
    pub a: f64,
    pub delta: f64,
    pub eps: f64,
    pub i1: f64,
    pub i2: f64,
    pub limit_formula: f64,
    pub w2_initial_sq: f64,
}

impl SweepCell {
    pub fn total(&self) -> f64 {
        self.i1 + self.i2
    }
}

/// Evaluates one sweep cell for the power nonlinearity with exponent `m`.
pub fn sweep_cell(spec: &CounterexampleSpec, m: f64) -> Result<SweepCell> {
    let f = Nonlinearity::power(m)?;
    let (i1, i2) = dissipation_integrals(spec, &f)?;
    let (u0, v0) = build_mollified_data(spec)?;
    let w2_initial_sq = transport::w2_squared(&u0, &v0, 4 * spec.n)?;
    Ok(SweepCell {
        d: spec.d,
        m,
        r: spec.r,
        a: spec.a,
        delta: spec.delta,
        eps: spec.eps,
        i1,
        i2,
        limit_formula: closed_form_limit(spec, &f),
        w2_initial_sq,
    })
}

/// Full experiment record: the quadrature pairing, its quantile-route
/// counterpart on the discretized pair, and the paired evolution.
#[derive(Debug, Clone)]
pub struct ViolationReport {
    pub i1: f64,
    pub i2: f64,
    /// `I₁ + I₂`: half the initial growth rate of `W₂²` for the continuum
    /// pair, and the quantity whose sign decides the verdict.
    pub d0: f64,
    /// The same pairing evaluated through the discrete quantile coupling.
    pub initial: DissipationSample,
    pub run: CoEvolution,
}

/// Builds the witness pair, evaluates the initial dissipation both ways,
/// and co-evolves the pair under the flow, tracking `W₂`.
pub fn contraction_violation_experiment(
    spec: &CounterexampleSpec,
    f: &Nonlinearity,
    cfg: &SolverConfig,
    bins: usize,
) -> Result<ViolationReport> {
    let (i1, i2) = dissipation_integrals(spec, f)?;
    let (u0, v0) = build_mollified_data(spec)?;
    let initial = transport::dissipation(&u0, &v0, f, bins)?;
    let run = transport::co_evolve(&u0, &v0, f, cfg, bins)?;
    Ok(ViolationReport { i1, i2, d0: i1 + i2, initial, run })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::DtControl;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn base_spec() -> CounterexampleSpec {
        CounterexampleSpec::new(3, 1.0, 1.0, 0.1, 1e-2, 1.5, 512).unwrap()
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        assert!(CounterexampleSpec::new(0, 1.0, 1.0, 0.1, 1e-2, 1.5, 512).is_err());
        assert!(CounterexampleSpec::new(3, 0.0, 1.0, 0.1, 1e-2, 1.5, 512).is_err());
        assert!(CounterexampleSpec::new(3, 1.0, 1.6, 0.1, 1e-2, 1.5, 512).is_err());
        // Displacement exactly at (R−a)/(2a) is excluded.
        assert!(CounterexampleSpec::new(3, 1.0, 1.0, 0.25, 1e-2, 1.5, 512).is_err());
        assert!(CounterexampleSpec::new(3, 1.0, 1.0, 0.0, 1e-2, 1.5, 512).is_err());
        // Width ceiling min(δ,1)·a/10 is inclusive.
        assert!(CounterexampleSpec::new(3, 1.0, 1.0, 0.1, 1e-2 + 1e-9, 1.5, 512).is_err());
        assert!(CounterexampleSpec::new(3, 1.0, 1.0, 0.1, 1e-2, 1.5, 512).is_ok());
        assert!(CounterexampleSpec::new(3, 1.0, 1.0, 0.1, 0.0, 1.5, 512).is_err());
    }

    #[test]
    fn exact_map_is_continuous_and_increasing() {
        let spec = base_spec();
        let psi = build_psi(&spec);
        let (a, c2) = psi.knees();
        // Both corner values from both adjacent formulas.
        assert_relative_eq!((1.0 + spec.delta) * a, 0.5 * (a + c2), max_relative = 1e-15);
        assert_relative_eq!(psi.eval(a), (1.0 + spec.delta) * a, max_relative = 1e-15);
        assert_relative_eq!(0.5 * (c2 + c2), psi.eval(c2), max_relative = 1e-15);
        for z in [0.3, a, 1.05, c2, 1.4] {
            assert!(psi.slope(z) > 0.0);
        }
    }

    #[test]
    fn mollified_map_matches_frozen_profile() {
        let map = mollify(&base_spec()).unwrap();
        assert_relative_eq!(map.p1.kappa, 0.5, max_relative = 1e-15);
        assert_relative_eq!(map.p1.beta, 0.5, max_relative = 1e-15);
        // Values and slopes on and around both windows, frozen from an
        // independent evaluation of the same closed forms.
        let frozen = [
            (0.5, 0.55, 1.1),
            (1.0, 1.1, 1.1),
            (1.0025, 1.102398437500000, 0.65),
            (1.005, 1.10325, 0.2),
            (1.0075, 1.103867187500000, 0.35),
            (1.01, 1.105, 0.5),
            (1.05, 1.125, 0.5),
            (1.19, 1.195, 0.5),
            (1.1925, 1.19615234375, 0.375),
            (1.195, 1.196875, 0.25),
            (1.1975, 1.19779296875, 0.625),
            (1.2, 1.2, 1.0),
            (1.5, 1.5, 1.0),
        ];
        for (z, value, slope) in frozen {
            assert_relative_eq!(map.eval(z), value, max_relative = 1e-12);
            assert_relative_eq!(map.deriv(z), slope, max_relative = 1e-12);
        }
        // Λ = max(1+δ, 1/min slope) with the dip slope 0.5 − 0.6/2 = 0.2.
        assert_relative_eq!(map.lambda(), 5.0, max_relative = 1e-12);
        assert!(map.lambda() >= 1.0 + 0.1);
        assert_relative_eq!(map.amplitude(), 0.1182135, max_relative = 1e-3);
    }

    #[test]
    fn mollified_equals_exact_outside_windows() {
        let spec = base_spec();
        let map = mollify(&spec).unwrap();
        let psi = build_psi(&spec);
        let eps_a = spec.eps * spec.a;
        for z in [
            0.0,
            spec.a / 2.0,
            spec.a,
            spec.a + eps_a,
            1.1,
            map.c2 - eps_a,
            map.c2,
            spec.r_max,
        ] {
            assert_eq!(map.eval(z), psi.eval(z), "z = {z}");
        }
    }

    #[test]
    fn mollification_error_scales_linearly_with_width() {
        let mut amps = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let spec = CounterexampleSpec::new(3, 1.0, 1.0, 0.1, eps, 1.5, 512).unwrap();
            let map = mollify(&spec).unwrap();
            assert!(map.lambda() >= 1.1);
            amps.push(map.amplitude());
        }
        // A is a shape constant; the sampled sup scales with ε up to rounding
        // in the window coordinate (z - a) / w.
        for a in &amps[1..] {
            assert_relative_eq!(*a, amps[0], max_relative = 1e-9);
        }
    }

    #[test]
    fn inverse_round_trips() {
        let map = mollify(&base_spec()).unwrap();
        for i in 0..=600 {
            let z = 1.5 * i as f64 / 600.0;
            let back = map.inverse(map.eval(z));
            assert_abs_diff_eq!(back, z, epsilon = 1e-12);
        }
        for y in [0.4, 1.099, 1.1004, 1.15, 1.1995, 1.35] {
            assert_abs_diff_eq!(map.eval(map.inverse(y)), y, epsilon = 1e-12);
        }
    }

    #[test]
    fn primitive_differentiates_back_to_the_map() {
        let map = mollify(&base_spec()).unwrap();
        assert_eq!(map.primitive(0.0), 0.0);
        let h = 1e-6;
        for z in [0.5, 1.0025, 1.05, 1.1975, 1.3] {
            let fd = (map.primitive(z + h) - map.primitive(z - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, map.eval(z), epsilon = 1e-8);
        }
    }

    #[test]
    fn normalization_matches_frozen_value() {
        // σ·∫ ũ·z² over [0, 1.5] for r=1, a=1, ε=1e−2.
        let spec = base_spec();
        let z_total = unit_sphere_area(3)
            * adaptive_with_breakpoints(
                &|z: f64| smoothed_ball(z, 1.0, 1.0, 1e-2) * z * z,
                &[0.0, 1.0, 1.01, 1.5],
                1e-13,
                1e-14,
            );
        assert_relative_eq!(z_total, 4.350833695978, max_relative = 1e-10);
        assert_relative_eq!(target_mass(&spec), 4.0 * std::f64::consts::PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn data_masses_and_bounds() {
        let spec = CounterexampleSpec::new(3, 1.0, 1.0, 0.1, 1e-2, 1.5, 2048).unwrap();
        let map = mollify(&spec).unwrap();
        let (u0, v0) = build_mollified_data(&spec).unwrap();
        let m = target_mass(&spec);
        assert_relative_eq!(u0.mass(), m, max_relative = 1e-12);
        assert!((v0.mass() - u0.mass()).abs() <= 1e-8 * m);

        // The shoulder profile only decreases outward.
        for w in u0.values().windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }

        let lam_d = map.lambda().powi(3);
        let vmax = v0.values().iter().cloned().fold(0.0f64, f64::max);
        assert!(vmax <= spec.r * lam_d * 1.05, "max {vmax}");
        // Beyond (1+δ)a + Λε the image density is bounded by ε·Λ^d.
        let tail_from = (1.0 + spec.delta) * spec.a + map.lambda() * spec.eps;
        for (j, &v) in v0.values().iter().enumerate() {
            if v0.grid().edges()[j] >= tail_from {
                assert!(v <= spec.eps * lam_d, "cell {j}: {v}");
            }
        }
    }

    #[test]
    fn dissipation_integrals_match_frozen_values() {
        // Frozen from an independent high-precision quadrature of the
        // same integrals.
        let cases = [
            (3u32, 0.4, 0.1, 1e-2, 1.5, 9.839283145852e-01, -1.026618698460e+00),
            (3u32, 2.0, 0.1, 1e-3, 1.5, 8.384811284158e-01, -1.246588048640e+00),
            (2u32, 0.3, 0.3, 1e-3, 2.0, 1.720622505109e+00, -1.645195868650e+00),
        ];
        for (d, m, delta, eps, r_max, i1_ref, i2_ref) in cases {
            let spec = CounterexampleSpec::new(d, 1.0, 1.0, delta, eps, r_max, 512).unwrap();
            let f = Nonlinearity::power(m).unwrap();
            let (i1, i2) = dissipation_integrals(&spec, &f).unwrap();
            assert_relative_eq!(i1, i1_ref, max_relative = 1e-9);
            assert_relative_eq!(i2, i2_ref, max_relative = 1e-9);
            assert_relative_eq!(i1 + i2, i1_ref + i2_ref, max_relative = 1e-7);
        }
    }

    #[test]
    fn integrals_vanish_as_the_displacement_shrinks() {
        let f = Nonlinearity::power(0.4).unwrap();
        let at = |delta: f64| {
            let spec =
                CounterexampleSpec::new(3, 1.0, 1.0, delta, delta / 20.0, 1.5, 512).unwrap();
            dissipation_integrals(&spec, &f).unwrap()
        };
        let (i1_a, i2_a) = at(1e-2);
        let (i1_b, i2_b) = at(1e-3);
        for (i, delta) in [(i1_a, 1e-2), (i2_a, 1e-2), (i1_b, 1e-3), (i2_b, 1e-3)] {
            assert!(i.abs() <= 15.0 * delta, "{i} at {delta}");
        }
        assert!(i1_b.abs() < 0.2 * i1_a.abs());
        assert!(i2_b.abs() < 0.2 * i2_a.abs());
    }

    #[test]
    fn closed_form_and_small_displacement_slope() {
        let spec = base_spec();
        let slow = Nonlinearity::power(0.4).unwrap();
        let fast = Nonlinearity::power(2.0).unwrap();
        assert_relative_eq!(
            closed_form_limit(&spec, &slow),
            9.95637883e-02,
            max_relative = 1e-8
        );
        assert_relative_eq!(
            closed_form_limit(&spec, &fast),
            -3.98337040e-01,
            max_relative = 1e-8
        );
        for f in [&slow, &fast] {
            for d in [2u32, 3] {
                for r in [0.5, 1.0, 2.0] {
                    let margin = (d as f64 - 1.0) * f.f(r) - d as f64 * r * f.f_prime(r);
                    let slope = small_delta_slope(f, d, r, 1e-5);
                    assert_relative_eq!(slope, margin, max_relative = 1e-3);
                }
            }
        }
    }

    #[test]
    fn extrapolation_reproduces_frozen_fits() {
        let spec = base_spec();

        let slow = Nonlinearity::power(0.4).unwrap();
        let rep = extrapolate_limit(&spec, &slow, &EPS_LADDER).unwrap();
        let frozen_totals = [-4.269038e-2, 2.197877e-2, 5.280065e-2, 7.181851e-2];
        for (got, want) in rep.totals.iter().zip(frozen_totals) {
            assert_relative_eq!(*got, want, max_relative = 1e-5);
        }
        assert_eq!(rep.basis_powers, (0.4, 1.0));
        assert_relative_eq!(rep.limit, 1.00063462e-01, max_relative = 1e-6);
        let target = closed_form_limit(&spec, &slow);
        assert!((rep.limit - target).abs() <= 0.007 * target.abs());
        assert!((rep.observed_order - 0.501).abs() < 0.02);

        let fast = Nonlinearity::power(2.0).unwrap();
        let rep = extrapolate_limit(&spec, &fast, &EPS_LADDER).unwrap();
        assert_eq!(rep.basis_powers, (1.0, 2.0));
        assert_relative_eq!(rep.limit, -3.98340535e-01, max_relative = 1e-6);
        let target = closed_form_limit(&spec, &fast);
        assert!((rep.limit - target).abs() <= 2e-5 * target.abs());
        assert!((rep.observed_order - 0.991).abs() < 0.02);
    }

    #[test]
    fn initial_distance_matches_the_dilation_formula() {
        // W₂² → M·δ²·a²·d/(d+2) as the widths vanish.
        let spec = CounterexampleSpec::new(3, 1.0, 1.0, 0.1, 3e-4, 1.5, 4096).unwrap();
        let (u0, v0) = build_mollified_data(&spec).unwrap();
        let got = transport::w2_squared(&u0, &v0, 4 * spec.n).unwrap();
        let want = target_mass(&spec) * 0.01 * 1.0 * 3.0 / 5.0;
        assert_relative_eq!(got, want, max_relative = 1e-2);
    }

    #[test]
    fn sweep_cell_matches_frozen_table() {
        let spec = CounterexampleSpec::new(2, 1.0, 1.0, 0.3, 1e-3, 2.0, 1024).unwrap();
        let cell = sweep_cell(&spec, 0.4).unwrap();
        assert_relative_eq!(cell.total(), 2.201412e-2, max_relative = 1e-5);
        assert_relative_eq!(cell.limit_formula, 1.015500e-1, max_relative = 1e-5);
        let w2_ref = target_mass(&spec) * 0.09 * 2.0 / 4.0;
        assert_relative_eq!(cell.w2_initial_sq, w2_ref, max_relative = 5e-2);
        assert!(cell.total() > 0.0 && cell.limit_formula > 0.0);

        let spec = CounterexampleSpec::new(3, 1.0, 1.0, 0.3, 1e-3, 2.0, 1024).unwrap();
        let cell = sweep_cell(&spec, 2.0).unwrap();
        assert_relative_eq!(cell.total(), -2.432716, max_relative = 1e-5);
        assert!(cell.limit_formula < 0.0);
    }

    #[test]
    fn violation_experiment_flags_failure_and_passes_controls() {
        let spec = CounterexampleSpec::new(3, 1.0, 1.0, 0.1, 1e-3, 1.5, 1024).unwrap();
        let cfg = SolverConfig::implicit(0.002)
            .with_dt(DtControl::Fixed(2e-4))
            .with_floor(1e-6);

        let slow = Nonlinearity::power(0.4).unwrap();
        let report = contraction_violation_experiment(&spec, &slow, &cfg, 2048).unwrap();
        assert_relative_eq!(report.d0, 5.280065e-2, max_relative = 1e-5);
        assert!(report.d0 > 0.0);
        assert!(report.run.rows.iter().all(|r| r.w2.is_finite()));

        let fast = Nonlinearity::power(2.0).unwrap();
        let cfg2 = SolverConfig::implicit(0.002).with_dt(DtControl::Fixed(2e-4));
        let report = contraction_violation_experiment(&spec, &fast, &cfg2, 2048).unwrap();
        assert!(report.d0 < 0.0);
        assert!(report.run.contractive, "max rise {:.3e}", report.run.max_step_rise);

        // In one dimension the condition is vacuous and the limit bracket
        // is nonpositive for every admissible exponent.
        let line = CounterexampleSpec::new(1, 1.0, 1.0, 0.1, 1e-3, 1.5, 512).unwrap();
        let (i1, i2) = dissipation_integrals(&line, &slow).unwrap();
        assert!(i1 + i2 <= 1e-12, "got {}", i1 + i2);
    }
}
