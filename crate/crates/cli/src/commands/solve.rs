//! `solve`: evolve one density, write snapshots and a manifest.

use wassdiff::{solver, transport, Nonlinearity};

use crate::config::Config;
use crate::data::{build_initial, parse_initial, resolve_grid, solver_config};
use crate::report::{sci, Report};
use crate::{CliError, Ctx};

const KEYS: &[&str] = &[
    "nonlinearity", "d", "r_max", "n", "initial", "t_end", "snapshots", "scheme", "dt", "floor",
];

/// Relative mass drift beyond this is reported as a numerical failure; the
/// flux-form update conserves mass to rounding, so anything larger means
/// the run went wrong.
const MASS_DRIFT_TOL: f64 = 1e-12;

pub fn run(cfg: &Config, ctx: &Ctx) -> Result<(), CliError> {
    cfg.allow_keys(KEYS)?;
    let f = Nonlinearity::from_spec(cfg.require("nonlinearity")?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let initial = parse_initial(cfg.require("initial")?)?;
    let grid = resolve_grid(cfg, &[&initial])?;
    let u0 = build_initial(&initial, &grid)?;
    let t_end = cfg.require_f64("t_end")?;
    let snapshots = cfg
        .f64_list("snapshots")?
        .unwrap_or_else(|| vec![t_end]);
    let sc = solver_config(cfg, t_end, &snapshots, None, 0.0)?;
    solver::check_data(&u0, &f, &sc).map_err(|e| CliError::Config(e.to_string()))?;

    let states = solver::evolve(&u0, &f, &sc).map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut manifest = Report::new("solve");
    manifest.meta_config(cfg);
    manifest.meta_f64("mass_drift_tol", MASS_DRIFT_TOL);
    manifest.header(&["index", "t", "file", "mass", "min_value", "max_value", "entropy"]);
    let m0 = states[0].1.mass();
    let mut worst_drift = 0.0f64;
    for (idx, (t, u)) in states.iter().enumerate() {
        let file = format!("snapshot_{idx:03}.dat");
        u.write_file(&ctx.out.join(&file))
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in u.values() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        worst_drift = worst_drift.max((u.mass() - m0).abs() / m0);
        manifest.row(vec![
            idx.to_string(),
            sci(*t),
            file,
            sci(u.mass()),
            sci(lo),
            sci(hi),
            sci(transport::entropy(u, &f)),
        ]);
    }
    manifest.meta_f64("mass_drift", worst_drift);
    manifest.write(&ctx.out.join("solve_manifest.csv"))?;

    println!(
        "solve: {} snapshots to t = {}, mass drift {}",
        states.len(),
        sci(states.last().unwrap().0),
        sci(worst_drift)
    );
    if worst_drift > MASS_DRIFT_TOL {
        return Err(CliError::Numerical(format!(
            "mass drifted by {} relative, above {}",
            sci(worst_drift),
            sci(MASS_DRIFT_TOL)
        )));
    }
    Ok(())
}
