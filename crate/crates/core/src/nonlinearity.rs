//! The nonlinearity `f`, its entropy density `U`, and the convexity
//! conditions that decide whether the flow `∂u/∂t = Δf(u)` contracts the
//! quadratic Wasserstein distance.
//!
//! `U` is the solution of `r·U′(r) − U(r) = f(r)` with `U(0) = U′(1) = 0`;
//! for the power family `f(r) = r^m` this is `(r^m − m·r)/(m−1)` (and
//! `r·ln r − r` at `m = 1`). Tabulated nonlinearities recover `U′` by the
//! exact segment-wise integral of `f′(ρ)/ρ` under the monotone cubic model
//! of `f`, so the defining identity holds to rounding for them too.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

/// Scale-free tolerance floor for the pointwise condition checks:
/// a margin is accepted when it is `≥ −CONDITION_TOL·max(1, scale)`.
pub const CONDITION_TOL: f64 = 1e-10;

/// Power exponent below which `(d−1)·f(r) ≤ d·r·f′(r)` fails for `f = r^m`.
pub fn power_threshold(d: u32) -> f64 {
    1.0 - 1.0 / d as f64
}

#[derive(Clone)]
enum Kind {
    Power { m: f64 },
    Linear,
    Table(Arc<TableData>),
}

/// The nonlinearity `f` with derivative and entropy density.
///
/// Immutable after construction; cheap to clone and safe to share across
/// threads. The dimension `d` is supplied per query, never stored.
#[derive(Clone)]
pub struct Nonlinearity {
    kind: Kind,
}

impl Nonlinearity {
    /// `f(r) = r^m`, `m > 0`.
    pub fn power(m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power exponent must be positive and finite, got {m}"
            )));
        }
        Ok(Self { kind: Kind::Power { m } })
    }

    /// `f(r) = r` (the heat equation).
    pub fn linear() -> Self {
        Self { kind: Kind::Linear }
    }

    /// Tabulated `(r, f(r))` pairs, strictly increasing in both columns.
    ///
    /// A leading `(0, 0)` node is prepended when absent, pinning `f(0) = 0`;
    /// evaluation beyond the last node extends linearly. `source` labels the
    /// table in reports.
    pub fn from_table_points(points: &[(f64, f64)], source: &str) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        if pts.is_empty() || pts[0].0 > 0.0 {
            pts.insert(0, (0.0, 0.0));
        }
        if pts.len() < 3 {
            return Err(Error::InvalidParameter(
                "tabulated nonlinearity needs at least two positive-r rows".into(),
            ));
        }
        if pts[0] != (0.0, 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tabulated nonlinearity must satisfy f(0) = 0, got f({}) = {}",
                pts[0].0, pts[0].1
            )));
        }
        for w in pts.windows(2) {
            if !(w[1].0 > w[0].0) || !(w[1].1 > w[0].1) {
                return Err(Error::InvalidParameter(format!(
                    "table rows must increase strictly in r and f: ({}, {}) -> ({}, {})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let f = MonotoneCubic::new(xs, ys)?;
        Ok(Self {
            kind: Kind::Table(Arc::new(TableData::new(f, source.to_string()))),
        })
    }

    /// Reads a two-column decimal text table (`r f(r)` per line, increasing
    /// `r`; `#` starts a comment).
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut cols = body.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    msg: format!("line {}: expected two decimal columns", lineno + 1),
                })
            };
            let r = parse(cols.next())?;
            let v = parse(cols.next())?;
            points.push((r, v));
        }
        Self::from_table_points(&points, &path.display().to_string())
    }

    /// Parses `"power:m=<float>"`, `"linear"`, or `"table:<path>"`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "linear" {
            return Ok(Self::linear());
        }
        if let Some(rest) = spec.strip_prefix("power:") {
            let m = rest
                .strip_prefix("m=")
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "expected power:m=<float>, got {spec:?}"
                    ))
                })?;
            return Self::power(m);
        }
        if let Some(path) = spec.strip_prefix("table:") {
            return Self::from_table_file(Path::new(path.trim()));
        }
        Err(Error::InvalidParameter(format!(
            "unknown nonlinearity spec {spec:?} (expected \"power:m=..\", \"linear\", or \"table:<path>\")"
        )))
    }

    /// `f(r)`; exactly 0 at `r = 0`.
    pub fn f(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { m } => r.powf(*m),
            Kind::Linear => r,
            Kind::Table(t) => t.f.eval(r),
        }
    }

    /// `f′(r)` for `r > 0` (unbounded as `r → 0` for fast diffusion).
    pub fn f_prime(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Power { m } => m * r.powf(m - 1.0),
            Kind::Linear => 1.0,
            Kind::Table(t) => t.f.deriv(r.max(0.0)),
        }
    }

    /// Entropy density `U(r)`, normalized by `U(0) = 0`, `U′(1) = 0`.
    pub fn entropy_density(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { m } => {
                if (m - 1.0).abs() < 1e-12 {
                    r * r.ln() - r
                } else {
                    (r.powf(*m) - m * r) / (m - 1.0)
                }
            }
            Kind::Linear => r * r.ln() - r,
            Kind::Table(t) => r * t.u_prime(r) - t.f.eval(r),
        }
    }

    /// `U′(r)` for `r > 0`.
    pub fn entropy_density_prime(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Power { m } => {
                if (m - 1.0).abs() < 1e-12 {
                    r.ln()
                } else {
                    m * (r.powf(m - 1.0) - 1.0) / (m - 1.0)
                }
            }
            Kind::Linear => r.ln(),
            Kind::Table(t) => t.u_prime(r),
        }
    }

    /// The exponent for power-family closed forms (`Some(1)` for linear).
    pub fn power_exponent(&self) -> Option<f64> {
        match &self.kind {
            Kind::Power { m } => Some(*m),
            Kind::Linear => Some(1.0),
            Kind::Table(_) => None,
        }
    }

    /// Whether this is a tabulated family (no closed-form verdicts, and no
    /// smoothness certificate beyond discrete monotonicity of the table).
    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, Kind::Table(_))
    }

    /// Round-trippable spec string (`"power:m=..."`, `"linear"`,
    /// `"table:<source>"`).
    pub fn spec_string(&self) -> String {
        match &self.kind {
            Kind::Power { m } => format!("power:m={m}"),
            Kind::Linear => "linear".into(),
            Kind::Table(t) => format!("table:{}", t.source),
        }
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonlinearity({})", self.spec_string())
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

/// Tabulated `f` with the segment-wise closed-form integral that recovers
/// `U′(r) = ∫₁^r f′(ρ)/ρ dρ`.
struct TableData {
    f: MonotoneCubic,
    /// `∫_{x₁}^{x_k} f′(ρ)/ρ dρ` for each node index `k ≥ 1`.
    prefix: Vec<f64>,
    /// `∫_{x₁}^{1} f′(ρ)/ρ dρ`, so the lower limit can be rebased to 1.
    at_one: f64,
    source: String,
}

impl TableData {
    fn new(f: MonotoneCubic, source: String) -> Self {
        let n = f.nodes().len();
        let mut prefix = vec![0.0; n];
        for k in 1..n - 1 {
            let (lo, hi) = (f.nodes()[k], f.nodes()[k + 1]);
            prefix[k + 1] = prefix[k] + Self::segment_int(&f, k, lo, hi);
        }
        let mut data = Self { f, prefix, at_one: 0.0, source };
        data.at_one = data.integral_from_first_node(1.0);
        data
    }

    /// Antiderivative of `f′(ρ)/ρ` on segment `k`, where `f′` is the
    /// quadratic `Aρ² + Bρ + C`: `A·ρ²/2 + B·ρ + C·ln ρ`.
    fn segment_int(f: &MonotoneCubic, k: usize, lo: f64, hi: f64) -> f64 {
        let (a, b, c) = f.deriv_poly_abs(k);
        let g = |rho: f64| 0.5 * a * rho * rho + b * rho + c * rho.ln();
        g(hi) - g(lo)
    }

    /// Signed `∫_{x₁}^{r} f′(ρ)/ρ dρ` for any `r > 0`.
    fn integral_from_first_node(&self, r: f64) -> f64 {
        let xs = self.f.nodes();
        let n = xs.len();
        let k = match xs.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1),
        };
        if k == 0 {
            // Below x₁ (first positive node); integrate backwards from it.
            return -Self::segment_int(&self.f, 0, r, xs[1]);
        }
        self.prefix[k] + Self::segment_int(&self.f, k.min(n - 1), xs[k], r)
    }

    fn u_prime(&self, r: f64) -> f64 {
        self.integral_from_first_node(r) - self.at_one
    }
}

/// Outcome of a pointwise condition check over a sample grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub holds: bool,
    /// Sample radius attaining the worst margin.
    pub worst_r: f64,
    /// Worst signed margin; nonnegative margins mean the condition held
    /// there. The margin's scale is the checked quantity's own.
    pub worst_margin: f64,
    /// Closed-form verdict where the family admits one (power, linear).
    /// Grid sampling never overrides it.
    pub analytic: Option<bool>,
}

fn validate_grid(r_grid: &[f64], want_increasing: bool) -> Result<()> {
    if r_grid.is_empty() {
        return Err(Error::InvalidParameter("empty sample grid".into()));
    }
    if r_grid.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameter(
            "sample grid must be strictly positive and finite".into(),
        ));
    }
    if want_increasing && r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "sample grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn finish(
    f: &Nonlinearity,
    d: u32,
    grid_holds: bool,
    worst_r: f64,
    worst_margin: f64,
) -> ConditionReport {
    let analytic = f
        .power_exponent()
        .map(|m| m >= power_threshold(d) || d == 1);
    ConditionReport {
        holds: analytic.unwrap_or(grid_holds),
        worst_r,
        worst_margin,
        analytic,
    }
}

/// Differential form: `d·r·f′(r) − (d−1)·f(r) ≥ 0` on the sampled grid.
///
/// For power and linear families the holds/violated verdict is the exact
/// analytic one (`m ≥ 1 − 1/d`); the grid supplies the witness margin.
pub fn mccann_holds(f: &Nonlinearity, d: u32, r_grid: &[f64]) -> Result<ConditionReport> {
    if d < 1 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    validate_grid(r_grid, false)?;
    let mut worst = f64::INFINITY;
    let mut worst_r = r_grid[0];
    let mut holds = true;
    for &r in r_grid {
        let margin = d as f64 * r * f.f_prime(r) - (d - 1) as f64 * f.f(r);
        if margin < worst {
            worst = margin;
            worst_r = r;
        }
        if margin < -CONDITION_TOL * f.f(r).max(1.0) {
            holds = false;
        }
    }
    Ok(finish(f, d, holds, worst_r, worst))
}

/// Monotone form: `r ↦ r^{−1+1/d}·f(r)` nondecreasing across consecutive
/// grid samples. Agrees with [`mccann_holds`] by the chain rule.
pub fn mccann_monotone_form(f: &Nonlinearity, d: u32, r_grid: &[f64]) -> Result<ConditionReport> {
    if d < 1 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    validate_grid(r_grid, true)?;
    if r_grid.len() < 2 {
        return Err(Error::InvalidParameter(
            "monotonicity check needs at least two samples".into(),
        ));
    }
    let expo = -1.0 + 1.0 / d as f64;
    let g = |r: f64| r.powf(expo) * f.f(r);
    let mut worst = f64::INFINITY;
    let mut worst_r = r_grid[0];
    let mut holds = true;
    let mut prev = g(r_grid[0]);
    for w in r_grid.windows(2) {
        let next = g(w[1]);
        let margin = next - prev;
        if margin < worst {
            worst = margin;
            worst_r = w[0];
        }
        if margin < -CONDITION_TOL * prev.abs().max(next.abs()).max(1.0) {
            holds = false;
        }
        prev = next;
    }
    Ok(finish(f, d, holds, worst_r, worst))
}

/// Convexity of `ψ(r) = r^d·U(r^{−d})` as nondecreasing discrete slopes on
/// the sampled grid. Equivalent to the other two forms for smooth `f`.
pub fn psi_convexity_holds(f: &Nonlinearity, d: u32, r_grid: &[f64]) -> Result<ConditionReport> {
    if d < 1 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    validate_grid(r_grid, true)?;
    if r_grid.len() < 3 {
        return Err(Error::InvalidParameter(
            "convexity check needs at least three samples".into(),
        ));
    }
    let psi = |r: f64| -> Result<f64> {
        let arg = r.powi(-(d as i32));
        let u = f.entropy_density(arg);
        if !u.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "entropy density undefined at {arg} (psi sample r = {r})"
            )));
        }
        Ok(r.powi(d as i32) * u)
    };
    let mut worst = f64::INFINITY;
    let mut worst_r = r_grid[1];
    let mut holds = true;
    let mut prev_slope: Option<f64> = None;
    let mut prev_val = psi(r_grid[0])?;
    for w in r_grid.windows(2) {
        let val = psi(w[1])?;
        let slope = (val - prev_val) / (w[1] - w[0]);
        if let Some(ps) = prev_slope {
            let margin = slope - ps;
            if margin < worst {
                worst = margin;
                worst_r = w[0];
            }
            if margin < -CONDITION_TOL * ps.abs().max(slope.abs()).max(1.0) {
                holds = false;
            }
        }
        prev_slope = Some(slope);
        prev_val = val;
    }
    Ok(finish(f, d, holds, worst_r, worst))
}

/// The two-point bracket `p^d·f(r·p^{−d})·(S−1) + f(r)·(s−1)` that controls
/// the dissipation sign pointwise under the optimal plan.
///
/// Admissible arguments satisfy `s ≥ p` and `S ≥ 1/p` (eigenvalue bounds of
/// a convex potential's Hessian and its Legendre inverse). Whenever the
/// McCann condition holds, the bracket is bounded below by
/// [`bracket_lower_bound`], which is then nonnegative.
pub fn bracket_inequality(
    f: &Nonlinearity,
    d: u32,
    r: f64,
    p: f64,
    s: f64,
    cap_s: f64,
) -> Result<f64> {
    if d < 1 || !(r > 0.0) || !(p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bracket needs d >= 1, r > 0, p > 0 (got d={d}, r={r}, p={p})"
        )));
    }
    if s < p || cap_s < 1.0 / p {
        return Err(Error::InvalidParameter(format!(
            "inadmissible bracket arguments: need s >= p and S >= 1/p (got s={s}, p={p}, S={cap_s})"
        )));
    }
    let pd = p.powi(d as i32);
    Ok(pd * f.f(r / pd) * (cap_s - 1.0) + f.f(r) * (s - 1.0))
}

/// `(p−1)·(f(r) − p^{d−1}·f(r·p^{−d}))`: the infimum of
/// [`bracket_inequality`] over admissible `(s, S)` at fixed `(r, p)`.
pub fn bracket_lower_bound(f: &Nonlinearity, d: u32, r: f64, p: f64) -> f64 {
    let pd = p.powi(d as i32);
    (p - 1.0) * (f.f(r) - p.powi(d as i32 - 1) * f.f(r / pd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn power_entropy_closed_forms() {
        // m=2: U(2) = (4 − 4)/1 = 0 and rU′ − U = f at r = 2.
        let f = Nonlinearity::power(2.0).unwrap();
        assert_abs_diff_eq!(f.entropy_density(2.0), 0.0, epsilon = 1e-14);
        let r = 2.0;
        assert_relative_eq!(
            r * f.entropy_density_prime(r) - f.entropy_density(r),
            4.0,
            max_relative = 1e-14
        );
        // m=1: U(1) = −1, U′(1) = 0.
        let f1 = Nonlinearity::power(1.0).unwrap();
        assert_relative_eq!(f1.entropy_density(1.0), -1.0, max_relative = 1e-14);
        assert_abs_diff_eq!(f1.entropy_density_prime(1.0), 0.0, epsilon = 1e-14);
        // f(0) = 0 for any family.
        for fam in [f, f1, Nonlinearity::linear(), Nonlinearity::power(0.4).unwrap()] {
            assert_eq!(fam.f(0.0), 0.0);
            assert_eq!(fam.entropy_density(0.0), 0.0);
        }
    }

    #[test]
    fn entropy_identity_on_wide_log_grid() {
        for m in [0.3, 0.5, 1.0, 1.5, 2.0, 3.7] {
            let f = Nonlinearity::power(m).unwrap();
            for r in log_grid(1e-6, 1e6, 121) {
                let lhs = r * f.entropy_density_prime(r) - f.entropy_density(r);
                assert_relative_eq!(lhs, f.f(r), max_relative = 1e-10);
            }
        }
        let lin = Nonlinearity::linear();
        for r in log_grid(1e-6, 1e6, 121) {
            let lhs = r * lin.entropy_density_prime(r) - lin.entropy_density(r);
            assert_relative_eq!(lhs, r, max_relative = 1e-12);
        }
    }

    #[test]
    fn normalization_at_zero_and_one() {
        for m in [0.4, 1.0, 2.0] {
            let f = Nonlinearity::power(m).unwrap();
            assert_eq!(f.entropy_density(0.0), 0.0);
            assert_abs_diff_eq!(f.entropy_density_prime(1.0), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn f_prime_matches_r_times_u_second() {
        // f′(r) = r·U″(r), with U″ from a central difference of U′.
        let h = 1e-6;
        for m in [0.5, 1.0, 2.0, 3.0] {
            let f = Nonlinearity::power(m).unwrap();
            for r in [0.3, 1.0, 2.5] {
                let u2 = (f.entropy_density_prime(r + h) - f.entropy_density_prime(r - h))
                    / (2.0 * h);
                assert_relative_eq!(f.f_prime(r), r * u2, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn tabulated_family_reproduces_power_law() {
        let grid = log_grid(1e-3, 1e2, 400);
        let pts: Vec<(f64, f64)> = grid.iter().map(|&r| (r, r.powf(1.5))).collect();
        let tab = Nonlinearity::from_table_points(&pts, "synthetic").unwrap();
        let exact = Nonlinearity::power(1.5).unwrap();
        for r in [0.01, 0.1, 0.7, 1.0, 5.0, 50.0] {
            assert_relative_eq!(tab.f(r), exact.f(r), max_relative = 2e-5);
            assert_relative_eq!(tab.f_prime(r), exact.f_prime(r), max_relative = 2e-3);
            assert_relative_eq!(
                tab.entropy_density_prime(r),
                exact.entropy_density_prime(r),
                epsilon = 1e-4,
                max_relative = 1e-3
            );
        }
        // The defining identity is exact by construction, independently of
        // how well the table approximates the power law.
        for r in [0.02, 0.3, 1.7, 20.0] {
            let lhs = r * tab.entropy_density_prime(r) - tab.entropy_density(r);
            assert_relative_eq!(lhs, tab.f(r), max_relative = 1e-10);
        }
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["power:m=1.5", "linear", "power:m=0.4"] {
            let f = Nonlinearity::from_spec(s).unwrap();
            assert_eq!(f.spec_string(), s);
        }
        assert!(Nonlinearity::from_spec("power:m=-1").is_err());
        assert!(Nonlinearity::from_spec("power:m=0").is_err());
        assert!(Nonlinearity::from_spec("cubic").is_err());
    }

    #[test]
    fn table_file_parses_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        let mut body = String::from("# r f\n");
        for i in 1..=200 {
            let r = i as f64 * 0.05;
            body.push_str(&format!("{r} {}\n", r * r));
        }
        std::fs::write(&path, body).unwrap();
        let tab = Nonlinearity::from_table_file(&path).unwrap();
        assert_relative_eq!(tab.f(2.0), 4.0, max_relative = 1e-6);
        assert!(tab.is_tabulated());

        std::fs::write(&path, "0.5 1.0\n0.4 2.0\n").unwrap();
        assert!(Nonlinearity::from_table_file(&path).is_err());
    }

    #[test]
    fn threshold_flips_exactly_for_powers() {
        for d in [1u32, 2, 3, 5, 10] {
            let thr = power_threshold(d);
            let grid = log_grid(0.1, 10.0, 33);
            for dm in [-1e-3, 0.0, 1e-3] {
                let m = thr + dm;
                if m <= 0.0 {
                    continue;
                }
                let f = Nonlinearity::power(m).unwrap();
                let rep = mccann_holds(&f, d, &grid).unwrap();
                assert_eq!(rep.holds, m >= thr, "d={d} m={m}");
                assert_eq!(rep.analytic, Some(m >= thr));
            }
        }
    }

    #[test]
    fn d1_is_vacuous_and_linear_always_holds() {
        let grid = log_grid(0.01, 100.0, 64);
        let f = Nonlinearity::power(0.5).unwrap();
        assert!(mccann_holds(&f, 1, &grid).unwrap().holds);
        assert!(!mccann_holds(&f, 3, &grid).unwrap().holds);
        assert!(mccann_holds(&Nonlinearity::linear(), 7, &grid).unwrap().holds);
    }

    #[test]
    fn monotone_form_examples() {
        let grid = log_grid(0.05, 20.0, 100);
        let f = Nonlinearity::power(1.0).unwrap();
        assert!(mccann_monotone_form(&f, 2, &grid).unwrap().holds);
        let f = Nonlinearity::power(0.4).unwrap();
        let rep = mccann_monotone_form(&f, 3, &grid).unwrap();
        assert!(!rep.holds);
        assert!(rep.worst_margin < 0.0);
    }

    #[test]
    fn psi_convexity_examples() {
        let grid = log_grid(0.2, 5.0, 200);
        assert!(psi_convexity_holds(&Nonlinearity::power(2.0).unwrap(), 3, &grid).unwrap().holds);
        assert!(!psi_convexity_holds(&Nonlinearity::power(0.4).unwrap(), 3, &grid).unwrap().holds);
        for d in [1u32, 2, 4] {
            assert!(psi_convexity_holds(&Nonlinearity::linear(), d, &grid).unwrap().holds);
        }
    }

    #[test]
    fn bracket_matches_hand_arithmetic() {
        // (m=2, d=3, r=1, p=2, s=2, S=0.5): 8·(1/64)·(−0.5) + 1·1 = 0.9375.
        let f = Nonlinearity::power(2.0).unwrap();
        let v = bracket_inequality(&f, 3, 1.0, 2.0, 2.0, 0.5).unwrap();
        assert_relative_eq!(v, 0.9375, max_relative = 1e-14);
        assert_relative_eq!(bracket_lower_bound(&f, 3, 1.0, 2.0), 0.9375, max_relative = 1e-14);
        // p = 1 annihilates the lower bound.
        assert_abs_diff_eq!(bracket_lower_bound(&f, 3, 1.7, 1.0), 0.0, epsilon = 1e-15);
        assert!(bracket_inequality(&f, 3, 1.0, 2.0, 1.0, 0.5).is_err());
        assert!(bracket_inequality(&f, 3, 1.0, 2.0, 2.0, 0.4).is_err());
    }

    #[test]
    fn violating_family_admits_negative_bracket() {
        let f = Nonlinearity::power(0.4).unwrap();
        // Search over admissible tuples at the infimum S = 1/p, s = p.
        let mut found = false;
        for p in [1.5, 2.0, 4.0] {
            for r in [0.5, 1.0, 2.0] {
                if bracket_inequality(&f, 3, r, p, p, 1.0 / p).unwrap() < -1e-6 {
                    found = true;
                }
            }
        }
        assert!(found);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn checkers_agree_on_random_powers(m in 0.05f64..4.0, d in 1u32..6) {
            let f = Nonlinearity::power(m).unwrap();
            let grid = log_grid(0.05, 20.0, 120);
            let a = mccann_holds(&f, d, &grid).unwrap().holds;
            let b = mccann_monotone_form(&f, d, &grid).unwrap().holds;
            let c = psi_convexity_holds(&f, d, &grid).unwrap().holds;
            prop_assert_eq!(a, b);
            prop_assert_eq!(a, c);
        }

        #[test]
        fn bracket_nonnegative_under_condition(
            seed_m in 0.0f64..3.0,
            d in prop::sample::select(vec![2u32, 3, 5]),
            r in 0.1f64..5.0,
            p in 0.2f64..4.0,
            ds in 0.0f64..2.0,
            d_cap in 0.0f64..2.0,
        ) {
            let m = power_threshold(d) + seed_m + 1e-9;
            let f = Nonlinearity::power(m).unwrap();
            let s = p + ds;
            let cap = 1.0 / p + d_cap;
            let v = bracket_inequality(&f, d, r, p, s, cap).unwrap();
            prop_assert!(v >= -1e-12 * (1.0 + v.abs()));
            prop_assert!(bracket_lower_bound(&f, d, r, p) >= -1e-12);
            prop_assert!(v + 1e-12 * (1.0 + v.abs()) >= bracket_lower_bound(&f, d, r, p));
        }
    }
}
