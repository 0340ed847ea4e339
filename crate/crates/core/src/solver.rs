//! Finite-volume evolution of `∂u/∂t = Δf(u)` for radial data on a ball.
//!
//! Space is discretized by the shell grid of [`RadialGrid`]: the update is
//! driven by face fluxes `−σ·r_j^{d−1}·(f(u_j) − f(u_{j−1}))/Δr`, zero at
//! the origin (symmetry) and at the outer boundary. Both boundary
//! conditions enter as zero flux of `f(u)`; for positive data and strictly
//! increasing `f` this coincides with the zero normal derivative of `u`
//! itself. Because every interior flux is added to one cell and subtracted
//! from its neighbor, total mass moves only through the (zero) boundary
//! fluxes and is conserved to rounding no matter how inaccurate a step is.
//!
//! Two schemes: explicit Euler under a diffusive CFL bound, and implicit
//! Euler solved by damped Newton on the tridiagonal system. The implicit
//! Jacobian has positive diagonal and nonpositive off-diagonals with
//! column sums equal to the cell volumes, so the no-pivot tridiagonal
//! elimination is safe.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::radial::{RadialDensity, RadialGrid};
use crate::transport::RadialVelocityField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    Implicit,
}

/// Time-step policy. `Auto` resolves to the CFL bound (explicit) or to one
/// grid spacing (implicit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtControl {
    Auto,
    Fixed(f64),
    Cfl { safety: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub dt: DtControl,
    pub t_end: f64,
    /// Times at which [`evolve`] must land exactly; sorted, within
    /// `[0, t_end]`.
    pub snapshots: Vec<f64>,
    /// Positivity floor. Must be positive when `f′` blows up at zero
    /// (fast diffusion); 0 is fine otherwise.
    pub floor: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

/// Default CFL safety factor; also safe at d = 1 where the stability
/// bound is half the nominal `Δr²/(d·max f′)`.
pub const CFL_SAFETY: f64 = 0.45;

impl SolverConfig {
    pub fn implicit(t_end: f64) -> Self {
        Self {
            scheme: Scheme::Implicit,
            dt: DtControl::Auto,
            t_end,
            snapshots: Vec::new(),
            floor: 0.0,
            newton_tol: 1e-13,
            newton_max_iter: 60,
        }
    }

    pub fn explicit(t_end: f64) -> Self {
        Self {
            scheme: Scheme::Explicit,
            ..Self::implicit(t_end)
        }
    }

    pub fn with_snapshots(mut self, times: &[f64]) -> Self {
        self.snapshots = times.to_vec();
        self
    }

    pub fn with_dt(mut self, dt: DtControl) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_end must be finite and >= 0, got {}",
                self.t_end
            )));
        }
        match self.dt {
            DtControl::Auto => {}
            DtControl::Fixed(dt) => {
                if !(dt > 0.0) || !dt.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "fixed dt must be positive, got {dt}"
                    )));
                }
            }
            DtControl::Cfl { safety } => {
                if !(safety > 0.0 && safety <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "CFL safety factor must lie in (0, 1], got {safety}"
                    )));
                }
            }
        }
        if self.snapshots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("snapshot times must be sorted".into()));
        }
        if let Some(&last) = self.snapshots.last() {
            if last > self.t_end || self.snapshots[0] < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "snapshot times must lie in [0, {}]",
                    self.t_end
                )));
            }
        }
        if !(self.floor >= 0.0) || !self.floor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "floor must be finite and >= 0, got {}",
                self.floor
            )));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::InvalidParameter(
                "Newton tolerance must be positive and iteration cap nonzero".into(),
            ));
        }
        Ok(())
    }
}

/// A point along an evolution, with the per-step diagnostics.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub u: RadialDensity,
    pub last_dt: f64,
    /// Newton iterations of the last implicit step (0 for explicit).
    pub newton_iters: usize,
    pub min_u: f64,
    pub max_u: f64,
}

impl SolverState {
    pub fn new(u: RadialDensity) -> Self {
        let (lo, hi) = min_max(u.values());
        Self { t: 0.0, u, last_dt: 0.0, newton_iters: 0, min_u: lo, max_u: hi }
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

/// Whether `f` forbids vacuum: `f′(0⁺)` unbounded, so the scheme needs a
/// strictly positive floor.
fn needs_positive_data(f: &Nonlinearity) -> bool {
    f.power_exponent().map_or(false, |m| m < 1.0)
}

/// Validates initial data against the scheme's requirements: finite
/// nonnegative values, and strict positivity above the configured floor
/// when `f` has an unbounded derivative at vacuum. `evolve` and `co_evolve`
/// run this themselves; callers that want to fail before any stepping can
/// invoke it directly.
pub fn check_data(u: &RadialDensity, f: &Nonlinearity, cfg: &SolverConfig) -> Result<()> {
    if needs_positive_data(f) {
        if !(cfg.floor > 0.0) {
            return Err(Error::InvalidParameter(
                "this nonlinearity has unbounded f'(0+); configure a positive floor".into(),
            ));
        }
        let (lo, _) = min_max(u.values());
        if lo < cfg.floor {
            return Err(Error::InvalidDomain(format!(
                "initial data reach {lo}, below the positivity floor {}",
                cfg.floor
            )));
        }
    }
    Ok(())
}

/// The stable step from the diffusive bound `safety·Δr²/(d·max f′(u))`.
pub fn stable_dt(u: &RadialDensity, f: &Nonlinearity, safety: f64) -> f64 {
    let grid = u.grid();
    let dr = grid.r_max() / grid.n_cells() as f64;
    let max_fp = u
        .values()
        .iter()
        .map(|&v| f.f_prime(v))
        .fold(0.0f64, f64::max);
    if max_fp <= 0.0 {
        f64::INFINITY
    } else {
        safety * dr * dr / (grid.dim() as f64 * max_fp)
    }
}

pub(crate) fn auto_dt(state: &SolverState, f: &Nonlinearity, cfg: &SolverConfig) -> f64 {
    let grid = state.u.grid();
    match (cfg.dt, cfg.scheme) {
        (DtControl::Fixed(dt), _) => dt,
        (DtControl::Cfl { safety }, _) => stable_dt(&state.u, f, safety),
        (DtControl::Auto, Scheme::Explicit) => stable_dt(&state.u, f, CFL_SAFETY),
        (DtControl::Auto, Scheme::Implicit) => grid.r_max() / grid.n_cells() as f64,
    }
}

/// Face coefficients `σ·r_j^{d−1}/Δr`, zero at both boundary faces.
fn face_coefficients(grid: &RadialGrid) -> Vec<f64> {
    let n = grid.n_cells();
    let dr = grid.r_max() / n as f64;
    let mut coef = vec![0.0; n + 1];
    for j in 1..n {
        coef[j] = grid.face_area(j) / dr;
    }
    coef
}

/// Net diffusive inflow `coef_{i+1}(f_{i+1}−f_i) − coef_i(f_i−f_{i−1})`
/// into each cell, from precomputed `f(x)` values.
fn net_inflow(coef: &[f64], fx: &[f64], out: &mut [f64]) {
    let n = fx.len();
    for i in 0..n {
        let left = if i == 0 { 0.0 } else { coef[i] * (fx[i] - fx[i - 1]) };
        let right = if i + 1 == n { 0.0 } else { coef[i + 1] * (fx[i + 1] - fx[i]) };
        out[i] = right - left;
    }
}

fn explicit_update(
    u: &[f64],
    coef: &[f64],
    vols: &[f64],
    f: &Nonlinearity,
    dt: f64,
) -> Result<Vec<f64>> {
    let fx: Vec<f64> = u.iter().map(|&v| f.f(v)).collect();
    let mut net = vec![0.0; u.len()];
    net_inflow(coef, &fx, &mut net);
    let mut new = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let v = u[i] + dt * net[i] / vols[i];
        if v < 0.0 {
            return Err(Error::CflViolation(format!(
                "cell {i} went negative ({v:.3e}); reduce dt below the diffusive bound"
            )));
        }
        new.push(v);
    }
    Ok(new)
}

/// Solves the tridiagonal system in place; `None` on a non-positive pivot.
fn thomas(lower: &[f64], diag: &mut [f64], upper: &[f64], rhs: &mut [f64]) -> Option<()> {
    let n = diag.len();
    for i in 1..n {
        if !(diag[i - 1] > 0.0) || !diag[i - 1].is_finite() {
            return None;
        }
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if !(diag[n - 1] > 0.0) || !diag[n - 1].is_finite() {
        return None;
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
    Some(())
}

struct ImplicitOutcome {
    values: Vec<f64>,
    newton_iters: usize,
}

fn implicit_update(
    u: &[f64],
    coef: &[f64],
    vols: &[f64],
    f: &Nonlinearity,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<ImplicitOutcome> {
    let n = u.len();
    let floor_eff = if needs_positive_data(f) { cfg.floor } else { 0.0 };
    let scale = u.iter().fold(1.0f64, |m, &v| m.max(v));
    let tol = cfg.newton_tol * scale;

    // Scaled residual F_i/V_i = (x_i − u_i) − dt·net_i(x)/V_i.
    let residual = |x: &[f64], fx: &mut [f64], net: &mut [f64], res: &mut [f64]| -> f64 {
        for i in 0..n {
            fx[i] = f.f(x[i]);
        }
        net_inflow(coef, fx, net);
        let mut worst = 0.0f64;
        for i in 0..n {
            res[i] = (x[i] - u[i]) - dt * net[i] / vols[i];
            worst = worst.max(res[i].abs());
        }
        worst
    };

    let mut x = u.to_vec();
    let (mut fx, mut net, mut res) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut fx2, mut net2, mut res2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut worst = residual(&x, &mut fx, &mut net, &mut res);
    let mut iters = 0usize;
    while worst > tol {
        if iters >= cfg.newton_max_iter {
            return Err(Error::StepFailure(format!(
                "Newton stalled at residual {worst:.3e} after {iters} iterations (dt = {dt:.3e})"
            )));
        }
        iters += 1;
        // Tridiagonal Jacobian of the scaled residual.
        let fp: Vec<f64> = x.iter().map(|&v| f.f_prime(v.max(floor_eff))).collect();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let (cl, cr) = (coef[i], coef[i + 1]);
            diag[i] = 1.0 + dt * (cl + cr) * fp[i] / vols[i];
            if i > 0 {
                lower[i] = -dt * cl * fp[i - 1] / vols[i];
            }
            if i + 1 < n {
                upper[i] = -dt * cr * fp[i + 1] / vols[i];
            }
            rhs[i] = -res[i];
        }
        thomas(&lower, &mut diag, &upper, &mut rhs).ok_or_else(|| {
            Error::StepFailure("implicit step produced a singular Jacobian".into())
        })?;
        // Backtracking line search on the residual norm, iterates clamped
        // to the admissible region.
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x
                .iter()
                .zip(&rhs)
                .map(|(&xi, &di)| (xi + lambda * di).max(floor_eff))
                .collect();
            let worst2 = residual(&trial, &mut fx2, &mut net2, &mut res2);
            if worst2 < worst || worst2 <= tol {
                x = trial;
                std::mem::swap(&mut fx, &mut fx2);
                std::mem::swap(&mut net, &mut net2);
                std::mem::swap(&mut res, &mut res2);
                worst = worst2;
                break;
            }
            lambda *= 0.5;
            if lambda < 1.0 / 1024.0 {
                return Err(Error::StepFailure(format!(
                    "Newton line search failed at residual {worst:.3e} (dt = {dt:.3e})"
                )));
            }
        }
    }

    // Final update in flux form from the converged values: interior fluxes
    // cancel in pairs, so the mass ledger is exact independently of the
    // Newton residual.
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        values.push(u[i] + dt * net[i] / vols[i]);
    }
    // The flux-form value differs from x_i by the residual; near-vacuum
    // cells can land a hair below zero. Zero them and charge the fullest
    // cell so conservation stays exact.
    let deficit_cap = 1e-8 * scale;
    let imax = (0..n).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    for i in 0..n {
        if values[i] < 0.0 {
            if values[i] < -deficit_cap || i == imax {
                return Err(Error::StepFailure(format!(
                    "implicit step left cell {i} at {:.3e}",
                    values[i]
                )));
            }
            values[imax] += values[i] * vols[i] / vols[imax];
            values[i] = 0.0;
        }
    }
    if values[imax] < 0.0 {
        return Err(Error::StepFailure("implicit step drained the fullest cell".into()));
    }
    Ok(ImplicitOutcome { values, newton_iters: iters })
}

/// One step of exactly `dt`, no internal retries. Lockstep co-evolutions
/// rely on the step either advancing by `dt` or failing.
pub fn step_with_dt(
    state: &SolverState,
    f: &Nonlinearity,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<SolverState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {dt}")));
    }
    let grid = state.u.grid().clone();
    let coef = face_coefficients(&grid);
    let vols = grid.volumes().to_vec();
    let (values, newton_iters) = match cfg.scheme {
        Scheme::Explicit => {
            let cap = stable_dt(&state.u, f, 1.0);
            if dt > cap * 1.0001 {
                return Err(Error::CflViolation(format!(
                    "dt = {dt:.3e} exceeds the diffusive bound {cap:.3e}"
                )));
            }
            (explicit_update(state.u.values(), &coef, &vols, f, dt)?, 0)
        }
        Scheme::Implicit => {
            let out = implicit_update(state.u.values(), &coef, &vols, f, cfg, dt)?;
            (out.values, out.newton_iters)
        }
    };
    let (min_u, max_u) = min_max(&values);
    Ok(SolverState {
        t: state.t + dt,
        u: RadialDensity::from_values(grid, values)?,
        last_dt: dt,
        newton_iters,
        min_u,
        max_u,
    })
}

/// One step at the configured step policy; implicit steps halve `dt` on
/// Newton failure, up to 8 times.
pub fn step(state: &SolverState, f: &Nonlinearity, cfg: &SolverConfig) -> Result<SolverState> {
    cfg.validate()?;
    check_data(&state.u, f, cfg)?;
    let mut dt = auto_dt(state, f, cfg);
    if !dt.is_finite() {
        return Err(Error::StepFailure(
            "no finite stable step: f'(u) vanishes everywhere (nothing to evolve)".into(),
        ));
    }
    let mut last_err = None;
    for _ in 0..=8 {
        match step_with_dt(state, f, cfg, dt) {
            Ok(next) => return Ok(next),
            Err(e @ Error::StepFailure(_)) if cfg.scheme == Scheme::Implicit => {
                last_err = Some(e);
                dt *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

/// Evolves `u0` to `t_end`, landing exactly on each requested snapshot
/// time. The returned list starts with `(0, u0)` and ends at `t_end`.
pub fn evolve(
    u0: &RadialDensity,
    f: &Nonlinearity,
    cfg: &SolverConfig,
) -> Result<Vec<(f64, RadialDensity)>> {
    cfg.validate()?;
    check_data(u0, f, cfg)?;
    let mut out = vec![(0.0, u0.clone())];
    if cfg.t_end == 0.0 {
        return Ok(out);
    }
    let mut targets: Vec<f64> = cfg
        .snapshots
        .iter()
        .copied()
        .filter(|&t| t > 0.0)
        .collect();
    if targets.last().map_or(true, |&t| t < cfg.t_end) {
        targets.push(cfg.t_end);
    }
    targets.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * cfg.t_end);

    let mut state = SolverState::new(u0.clone());
    let time_eps = 1e-12 * cfg.t_end;
    for &target in &targets {
        while state.t < target - time_eps {
            let auto = auto_dt(&state, f, cfg);
            if !auto.is_finite() {
                // Nothing diffuses; jump to the target.
                state.t = target;
                break;
            }
            let dt = auto.min(target - state.t);
            if dt < 1e-15 * cfg.t_end {
                return Err(Error::StepFailure(format!(
                    "time step collapsed to {dt:.3e} at t = {}",
                    state.t
                )));
            }
            let mut attempt = dt;
            let mut stepped = None;
            let mut last_err = None;
            for _ in 0..=8 {
                match step_with_dt(&state, f, cfg, attempt) {
                    Ok(next) => {
                        stepped = Some(next);
                        break;
                    }
                    Err(e @ Error::StepFailure(_)) if cfg.scheme == Scheme::Implicit => {
                        last_err = Some(e);
                        attempt *= 0.5;
                    }
                    Err(e) => return Err(e),
                }
            }
            state = stepped.ok_or_else(|| last_err.unwrap())?;
        }
        state.t = target;
        out.push((target, state.u.clone()));
    }
    Ok(out)
}

/// The transport velocity `ξ = −∇(f∘u)/u` as a radial field sampled at
/// cell centers: central differences inside, one-sided at both ends.
///
/// Requires strictly positive `u`.
pub fn velocity_field(u: &RadialDensity, f: &Nonlinearity) -> Result<RadialVelocityField> {
    let grid: &Arc<RadialGrid> = u.grid();
    let n = grid.n_cells();
    let dr = grid.r_max() / n as f64;
    let vals = u.values();
    if let Some(i) = vals.iter().position(|&v| v <= 0.0) {
        return Err(Error::DivisionGuard(format!(
            "velocity field of a density touching zero (cell {i})"
        )));
    }
    let fx: Vec<f64> = vals.iter().map(|&v| f.f(v)).collect();
    let mut xi = Vec::with_capacity(n);
    for i in 0..n {
        let grad = if i == 0 {
            (fx[1] - fx[0]) / dr
        } else if i + 1 == n {
            (fx[n - 1] - fx[n - 2]) / dr
        } else {
            (fx[i + 1] - fx[i - 1]) / (2.0 * dr)
        };
        xi.push(-grad / vals[i]);
    }
    RadialVelocityField::new(grid.clone(), xi)
}
