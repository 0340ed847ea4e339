//! Initial-data specs, grid resolution, and solver-config assembly shared by
//! the subcommands.

use std::path::PathBuf;
use std::sync::Arc;

use wassdiff::solver::DtControl;
use wassdiff::{profiles, RadialDensity, RadialGrid, SolverConfig};

use crate::config::Config;
use crate::CliError;

/// Initial data named in a config. Built-ins take positional float
/// arguments; `table:` points at a density file in the on-disk format.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    UniformBall { level: f64, radius: f64 },
    SmoothedBall { level: f64, radius: f64, eps: f64 },
    GaussianLike { amplitude: f64, width: f64 },
    Table(PathBuf),
}

pub fn parse_initial(text: &str) -> Result<InitialSpec, CliError> {
    let text = text.trim();
    if let Some(path) = text.strip_prefix("table:") {
        if path.is_empty() {
            return Err(CliError::Config("table: needs a file path".into()));
        }
        return Ok(InitialSpec::Table(PathBuf::from(path)));
    }
    let bad = || CliError::Config(format!(
        "cannot parse initial data {text:?}; expected uniform-ball(r,a), \
         smoothed-ball(r,a,eps), gaussian-like(amplitude,width), or table:<path>"
    ));
    let open = text.find('(').ok_or_else(bad)?;
    let name = &text[..open];
    let args = text[open..]
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(bad)?;
    let vals: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match (name, vals.as_slice()) {
        ("uniform-ball", [level, radius]) => Ok(InitialSpec::UniformBall {
            level: *level,
            radius: *radius,
        }),
        ("smoothed-ball", [level, radius, eps]) => Ok(InitialSpec::SmoothedBall {
            level: *level,
            radius: *radius,
            eps: *eps,
        }),
        ("gaussian-like", [amplitude, width]) => Ok(InitialSpec::GaussianLike {
            amplitude: *amplitude,
            width: *width,
        }),
        _ => Err(bad()),
    }
}

/// Grid for a run: taken from the first `table:` file if any (config keys,
/// when also present, must agree with its header), otherwise from the
/// required `d`, `r_max`, `n` keys.
pub fn resolve_grid(cfg: &Config, specs: &[&InitialSpec]) -> Result<Arc<RadialGrid>, CliError> {
    let table = specs.iter().find_map(|s| match s {
        InitialSpec::Table(path) => Some(path),
        _ => None,
    });
    if let Some(path) = table {
        let dens = RadialDensity::read_file(path).map_err(|e| CliError::Config(e.to_string()))?;
        let grid = dens.grid().clone();
        if let Some(raw) = cfg.get("d") {
            let d: u32 = raw.parse().map_err(|_| CliError::Config("bad d".into()))?;
            if d != grid.dim() {
                return Err(CliError::Config(format!(
                    "config d = {d} disagrees with table dimension {}",
                    grid.dim()
                )));
            }
        }
        if let Some(raw) = cfg.get("r_max") {
            let r_max: f64 = raw.parse().map_err(|_| CliError::Config("bad r_max".into()))?;
            if r_max != grid.r_max() {
                return Err(CliError::Config(format!(
                    "config r_max = {r_max} disagrees with table radius {}",
                    grid.r_max()
                )));
            }
        }
        if let Some(raw) = cfg.get("n") {
            let n: usize = raw.parse().map_err(|_| CliError::Config("bad n".into()))?;
            if n != grid.n_cells() {
                return Err(CliError::Config(format!(
                    "config n = {n} disagrees with table cell count {}",
                    grid.n_cells()
                )));
            }
        }
        return Ok(grid);
    }
    let d = cfg.require_u32("d")?;
    let r_max = cfg.require_f64("r_max")?;
    let n = cfg.require_usize("n")?;
    RadialGrid::uniform(d, r_max, n).map_err(|e| CliError::Config(e.to_string()))
}

pub fn build_initial(
    spec: &InitialSpec,
    grid: &Arc<RadialGrid>,
) -> Result<RadialDensity, CliError> {
    let built = match spec {
        InitialSpec::UniformBall { level, radius } => {
            profiles::uniform_ball_density(grid.clone(), *level, *radius)
        }
        InitialSpec::SmoothedBall { level, radius, eps } => {
            profiles::smoothed_ball_density(grid.clone(), *level, *radius, *eps)
        }
        InitialSpec::GaussianLike { amplitude, width } => {
            profiles::gaussian_bump_density(grid.clone(), *amplitude, *width)
        }
        InitialSpec::Table(path) => {
            let dens =
                RadialDensity::read_file(path).map_err(|e| CliError::Config(e.to_string()))?;
            if dens.grid() != grid {
                return Err(CliError::Config(format!(
                    "table {} lives on a different grid than the run",
                    path.display()
                )));
            }
            return Ok(dens);
        }
    };
    built.map_err(|e| CliError::Config(e.to_string()))
}

/// Scales a density to the run's common target mass. Returns the scaled
/// density and the factor applied, which reports echo for reproducibility.
pub fn renormalize(u: &RadialDensity, target: f64) -> Result<(RadialDensity, f64), CliError> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(CliError::Config(format!(
            "target mass must be positive and finite, got {target}"
        )));
    }
    let mass = u.mass();
    if !(mass > 0.0) {
        return Err(CliError::Config("initial data carry no mass".into()));
    }
    let factor = target / mass;
    let values: Vec<f64> = u.values().iter().map(|v| v * factor).collect();
    let scaled = RadialDensity::from_values(u.grid().clone(), values)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok((scaled, factor))
}

/// Solver settings from the shared `scheme`, `dt`, `floor` keys.
pub fn solver_config(
    cfg: &Config,
    t_end: f64,
    snapshots: &[f64],
    default_dt: Option<f64>,
    default_floor: f64,
) -> Result<SolverConfig, CliError> {
    let mut sc = match cfg.str_or("scheme", "implicit") {
        "implicit" => SolverConfig::implicit(t_end),
        "explicit" => SolverConfig::explicit(t_end),
        other => {
            return Err(CliError::Config(format!(
                "scheme must be implicit or explicit, got {other:?}"
            )))
        }
    };
    sc = sc.with_snapshots(snapshots);
    sc = match cfg.get("dt") {
        None => match default_dt {
            Some(dt) => sc.with_dt(DtControl::Fixed(dt)),
            None => sc,
        },
        Some("auto") => sc.with_dt(DtControl::Auto),
        Some(raw) => {
            let dt: f64 = raw
                .parse()
                .map_err(|_| CliError::Config(format!("dt must be `auto` or a float, got {raw:?}")))?;
            sc.with_dt(DtControl::Fixed(dt))
        }
    };
    let floor = cfg.f64("floor", default_floor)?;
    if floor > 0.0 {
        sc = sc.with_floor(floor);
    }
    sc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(sc)
}

pub fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Log-spaced sample radii for condition checks.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let ratio = hi / lo;
    (0..points)
        .map(|i| lo * ratio.powf(i as f64 / (points - 1) as f64))
        .collect()
}
