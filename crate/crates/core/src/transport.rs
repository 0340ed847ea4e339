//! Quadratic Wasserstein geometry for radial measures: quantile couplings,
//! the entropy functional, its dissipation along paired flows, and
//! displacement interpolation.
//!
//! For radially symmetric measures the optimal plan pairs equal mass
//! fractions, so `W₂²(u, v) = ∫₀^M (Q_v(m) − Q_u(m))² dm` with `Q` the
//! radial quantile. All integrals over mass here use composite two-point
//! Gauss rules on uniform mass bins.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::{invert_increasing, MonotoneCubic};
use crate::nonlinearity::Nonlinearity;
use crate::radial::{RadialDensity, RadialGrid};
use crate::solver::{self, SolverConfig, SolverState};

/// Radial velocity component sampled at cell centers, evaluated anywhere
/// by shape-preserving interpolation through `(0, 0)`; the origin value is
/// pinned by symmetry.
#[derive(Debug, Clone)]
pub struct RadialVelocityField {
    grid: Arc<RadialGrid>,
    samples: Vec<f64>,
    interp: MonotoneCubic,
}

impl RadialVelocityField {
    pub fn new(grid: Arc<RadialGrid>, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_cells() {
            return Err(Error::InvalidParameter(format!(
                "field has {} samples, grid has {} cells",
                samples.len(),
                grid.n_cells()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite velocity sample".into()));
        }
        let mut xs = Vec::with_capacity(samples.len() + 1);
        let mut ys = Vec::with_capacity(samples.len() + 1);
        xs.push(0.0);
        ys.push(0.0);
        xs.extend_from_slice(grid.centers());
        ys.extend_from_slice(&samples);
        let interp = MonotoneCubic::new(xs, ys)?;
        Ok(Self { grid, samples, interp })
    }

    pub fn eval(&self, rho: f64) -> f64 {
        self.interp.eval(rho)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
}

/// `𝒰(u) = ∫ U(u) dx` over the ball, cell by cell. Vacuum cells contribute
/// zero since `U(0) = 0`.
pub fn entropy(u: &RadialDensity, f: &Nonlinearity) -> f64 {
    u.values()
        .iter()
        .zip(u.grid().volumes())
        .map(|(&v, vol)| f.entropy_density(v) * vol)
        .sum()
}

fn check_equal_masses(u: &RadialDensity, v: &RadialDensity) -> Result<f64> {
    let (mu, mv) = (u.mass(), v.mass());
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter("transport needs positive total mass".into()));
    }
    if (mu - mv).abs() > 1e-9 * mu.max(mv) {
        return Err(Error::MassMismatch(format!(
            "masses differ: {mu} vs {mv} (transport is defined for equal masses)"
        )));
    }
    // The symmetric mean keeps every plan-derived quantity exactly
    // invariant under swapping the arguments.
    Ok(0.5 * (mu + mv))
}

/// The monotone radial coupling between two equal-mass measures, sampled
/// at two-point Gauss nodes on `bins` uniform mass bins.
#[derive(Debug, Clone)]
pub struct QuantilePlan {
    mass_nodes: Vec<f64>,
    weights: Vec<f64>,
    q_u: Vec<f64>,
    q_v: Vec<f64>,
    total_mass: f64,
}

impl QuantilePlan {
    pub fn new(u: &RadialDensity, v: &RadialDensity, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameter("plan needs at least one mass bin".into()));
        }
        let total = check_equal_masses(u, v)?;
        let h = total / bins as f64;
        let off = 0.5 * h / 3.0f64.sqrt();
        let n = 2 * bins;
        let mut mass_nodes = Vec::with_capacity(n);
        let mut q_u = Vec::with_capacity(n);
        let mut q_v = Vec::with_capacity(n);
        for j in 0..bins {
            let mid = (j as f64 + 0.5) * h;
            for m in [mid - off, mid + off] {
                mass_nodes.push(m);
                q_u.push(u.quantile(m)?);
                q_v.push(v.quantile(m)?);
            }
        }
        Ok(Self {
            mass_nodes,
            weights: vec![0.5 * h; n],
            q_u,
            q_v,
            total_mass: total,
        })
    }

    pub fn w2_squared(&self) -> f64 {
        self.weights
            .iter()
            .zip(self.q_u.iter().zip(&self.q_v))
            .map(|(w, (a, b))| w * (b - a) * (b - a))
            .sum()
    }

    pub fn w2(&self) -> f64 {
        self.w2_squared().max(0.0).sqrt()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn mass_nodes(&self) -> &[f64] {
        &self.mass_nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn quantiles_u(&self) -> &[f64] {
        &self.q_u
    }

    pub fn quantiles_v(&self) -> &[f64] {
        &self.q_v
    }
}

pub fn w2_squared(u: &RadialDensity, v: &RadialDensity, bins: usize) -> Result<f64> {
    Ok(QuantilePlan::new(u, v, bins)?.w2_squared())
}

pub fn w2(u: &RadialDensity, v: &RadialDensity, bins: usize) -> Result<f64> {
    Ok(QuantilePlan::new(u, v, bins)?.w2())
}

/// One evaluation of the dissipation pairing between two states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationSample {
    /// Time label; [`dissipation`] itself is timeless and sets 0.
    pub t: f64,
    pub w2_sq: f64,
    /// `D = ∫ (ξ_v(Q_v) − ξ_u(Q_u))·(Q_v − Q_u) dm`; the full derivative
    /// of `W₂²` along the paired flows is `2D`.
    pub dissipation: f64,
    /// Central-difference estimate of `d(W₂²)/dt`, when a caller tracking
    /// a flow has one.
    pub w2_sq_rate: Option<f64>,
    pub entropy_u: f64,
    pub entropy_v: f64,
}

/// Evaluates the dissipation pairing `D` and `W₂²` for two strictly
/// positive equal-mass densities.
pub fn dissipation(
    u: &RadialDensity,
    v: &RadialDensity,
    f: &Nonlinearity,
    bins: usize,
) -> Result<DissipationSample> {
    let plan = QuantilePlan::new(u, v, bins)?;
    let xi_u = solver::velocity_field(u, f)?;
    let xi_v = solver::velocity_field(v, f)?;
    let mut d = 0.0;
    for ((w, qu), qv) in plan
        .weights
        .iter()
        .zip(&plan.q_u)
        .zip(&plan.q_v)
    {
        d += w * (xi_v.eval(*qv) - xi_u.eval(*qu)) * (qv - qu);
    }
    Ok(DissipationSample {
        t: 0.0,
        w2_sq: plan.w2_squared(),
        dissipation: d,
        w2_sq_rate: None,
        entropy_u: entropy(u, f),
        entropy_v: entropy(v, f),
    })
}

/// The displacement interpolant at `t ∈ [0, 1]`, reconstructed on
/// `target` by exact mass binning: for every target edge the enclosed mass
/// is found by inverting `m ↦ (1−t)·Q₀(m) + t·Q₁(m)`.
pub fn displacement_interpolant(
    u0: &RadialDensity,
    u1: &RadialDensity,
    t: f64,
    target: Arc<RadialGrid>,
) -> Result<RadialDensity> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "interpolation parameter must lie in [0, 1], got {t}"
        )));
    }
    let total = check_equal_masses(u0, u1)?;
    let q_t = |m: f64| -> f64 {
        let a = u0.quantile(m).expect("mass within range");
        let b = u1.quantile(m).expect("mass within range");
        (1.0 - t) * a + t * b
    };
    let top = q_t(total);
    if top > target.r_max() * (1.0 + 1e-12) {
        return Err(Error::InvalidDomain(format!(
            "interpolant support reaches {top}, beyond the target radius {}",
            target.r_max()
        )));
    }
    let mut below_prev = 0.0;
    let mut values = Vec::with_capacity(target.n_cells());
    for (k, vol) in target.volumes().iter().enumerate() {
        let edge = target.edges()[k + 1];
        let below = if edge >= top {
            total
        } else {
            invert_increasing(&q_t, 0.0, total, edge, 1e-13 * total)
        };
        values.push(((below - below_prev) / vol).max(0.0));
        below_prev = below;
    }
    RadialDensity::from_values(target, values)
}

/// Entropy along the displacement geodesic, plus its worst centered second
/// difference as a discrete convexity certificate.
#[derive(Debug, Clone)]
pub struct GeodesicScan {
    pub rows: Vec<(f64, f64)>,
    pub min_second_difference: f64,
}

/// Scans `t ↦ 𝒰(u_t)` over a uniform `t_grid` spanning `[0, 1]`.
/// Interpolants are reconstructed on the common grid of the endpoints.
pub fn geodesic_convexity_scan(
    u0: &RadialDensity,
    u1: &RadialDensity,
    f: &Nonlinearity,
    t_grid: &[f64],
) -> Result<GeodesicScan> {
    if u0.grid() != u1.grid() {
        return Err(Error::InvalidParameter(
            "geodesic scan endpoints must share a grid".into(),
        ));
    }
    if t_grid.len() < 3 || t_grid[0] != 0.0 || *t_grid.last().unwrap() != 1.0 {
        return Err(Error::InvalidParameter(
            "t grid must run from 0 to 1 with at least three points".into(),
        ));
    }
    let h = 1.0 / (t_grid.len() - 1) as f64;
    if t_grid
        .windows(2)
        .any(|w| (w[1] - w[0] - h).abs() > 1e-9)
    {
        return Err(Error::InvalidParameter("t grid must be uniform".into()));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let u_t = displacement_interpolant(u0, u1, t, u0.grid().clone())?;
        rows.push((t, entropy(&u_t, f)));
    }
    let mut min_dd = f64::INFINITY;
    for w in rows.windows(3) {
        min_dd = min_dd.min(w[2].1 - 2.0 * w[1].1 + w[0].1);
    }
    Ok(GeodesicScan { rows, min_second_difference: min_dd })
}

/// One recorded time of a paired run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub w2: f64,
    pub w2_sq: f64,
    pub entropy_u: f64,
    pub entropy_v: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    /// Dissipation pairing; absent when either state touches vacuum.
    pub dissipation: Option<f64>,
}

/// Outcome of a lockstep co-evolution of two flows under the same `f`.
#[derive(Debug, Clone)]
pub struct CoEvolution {
    /// Rows at `t = 0`, each requested snapshot, and `t_end`.
    pub rows: Vec<TraceRow>,
    /// `(t, W₂)` after every accepted step.
    pub step_trace: Vec<(f64, f64)>,
    /// Whether no step increased `W₂` by more than `1e−8·W₂(0)`.
    pub contractive: bool,
    /// Largest single-step increase of `W₂` (negative if it only fell).
    pub max_step_rise: f64,
    /// First `(t, W₂)` with `W₂ > W₂(0)·(1 + 1e−8)`, if any.
    pub first_rise: Option<(f64, f64)>,
}

/// Per-step tolerance factor for the contraction verdict.
pub const CONTRACTION_STEP_TOL: f64 = 1e-8;

fn trace_row(
    t: f64,
    u: &RadialDensity,
    v: &RadialDensity,
    f: &Nonlinearity,
    bins: usize,
) -> Result<TraceRow> {
    let plan = QuantilePlan::new(u, v, bins)?;
    let w2_sq = plan.w2_squared();
    let positive = |d: &RadialDensity| d.values().iter().all(|&x| x > 0.0);
    let diss = if positive(u) && positive(v) {
        Some(dissipation(u, v, f, bins)?.dissipation)
    } else {
        None
    };
    Ok(TraceRow {
        t,
        w2: w2_sq.max(0.0).sqrt(),
        w2_sq,
        entropy_u: entropy(u, f),
        entropy_v: entropy(v, f),
        mass_u: u.mass(),
        mass_v: v.mass(),
        dissipation: diss,
    })
}

/// Evolves `u` and `v` in lockstep (shared step sizes), recording `W₂`
/// after every step and full rows at the configured snapshot times.
pub fn co_evolve(
    u0: &RadialDensity,
    v0: &RadialDensity,
    f: &Nonlinearity,
    cfg: &SolverConfig,
    bins: usize,
) -> Result<CoEvolution> {
    cfg.validate()?;
    solver::check_data(u0, f, cfg)?;
    solver::check_data(v0, f, cfg)?;
    check_equal_masses(u0, v0)?;

    let mut rows = vec![trace_row(0.0, u0, v0, f, bins)?];
    let w2_initial = rows[0].w2;
    let rise_tol = CONTRACTION_STEP_TOL * w2_initial;
    let mut step_trace = vec![(0.0, w2_initial)];
    if cfg.t_end == 0.0 {
        return Ok(CoEvolution {
            rows,
            step_trace,
            contractive: true,
            max_step_rise: 0.0,
            first_rise: None,
        });
    }

    let mut targets: Vec<f64> = cfg.snapshots.iter().copied().filter(|&t| t > 0.0).collect();
    if targets.last().map_or(true, |&t| t < cfg.t_end) {
        targets.push(cfg.t_end);
    }
    targets.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * cfg.t_end);

    let mut su = SolverState::new(u0.clone());
    let mut sv = SolverState::new(v0.clone());
    let mut w2_prev = w2_initial;
    let mut max_rise = f64::NEG_INFINITY;
    let mut contractive = true;
    let mut first_rise = None;
    let time_eps = 1e-12 * cfg.t_end;

    for &target in &targets {
        while su.t < target - time_eps {
            let auto = solver::auto_dt(&su, f, cfg).min(solver::auto_dt(&sv, f, cfg));
            if !auto.is_finite() {
                su.t = target;
                sv.t = target;
                break;
            }
            let dt = auto.min(target - su.t);
            if dt < 1e-15 * cfg.t_end {
                return Err(Error::StepFailure(format!(
                    "paired time step collapsed to {dt:.3e} at t = {}",
                    su.t
                )));
            }
            let mut attempt = dt;
            let mut advanced = None;
            let mut last_err = None;
            for _ in 0..=8 {
                match solver::step_with_dt(&su, f, cfg, attempt)
                    .and_then(|nu| solver::step_with_dt(&sv, f, cfg, attempt).map(|nv| (nu, nv)))
                {
                    Ok(pair) => {
                        advanced = Some(pair);
                        break;
                    }
                    Err(e @ Error::StepFailure(_)) if cfg.scheme == solver::Scheme::Implicit => {
                        last_err = Some(e);
                        attempt *= 0.5;
                    }
                    Err(e) => return Err(e),
                }
            }
            let (nu, nv) = advanced.ok_or_else(|| last_err.unwrap())?;
            su = nu;
            sv = nv;
            let w2_now = w2(&su.u, &sv.u, bins)?;
            let rise = w2_now - w2_prev;
            max_rise = max_rise.max(rise);
            if rise > rise_tol {
                contractive = false;
            }
            if first_rise.is_none() && w2_now > w2_initial + rise_tol {
                first_rise = Some((su.t, w2_now));
            }
            step_trace.push((su.t, w2_now));
            w2_prev = w2_now;
        }
        su.t = target;
        sv.t = target;
        rows.push(trace_row(target, &su.u, &sv.u, f, bins)?);
    }
    Ok(CoEvolution {
        rows,
        step_trace,
        contractive,
        max_step_rise: if max_rise.is_finite() { max_rise } else { 0.0 },
        first_rise,
    })
}
