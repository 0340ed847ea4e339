//! `contract`: co-evolve two densities and watch W₂ between them.

use wassdiff::transport::{self, CONTRACTION_STEP_TOL};
use wassdiff::{solver, Nonlinearity};

use crate::config::Config;
use crate::data::{build_initial, parse_initial, renormalize, resolve_grid, solver_config};
use crate::report::{sci, yes_no, Report};
use crate::{CliError, Ctx};

const KEYS: &[&str] = &[
    "nonlinearity", "d", "r_max", "n", "initial", "initial_b", "t_end", "snapshots", "scheme",
    "dt", "floor", "bins", "target_mass",
];

const MASS_DRIFT_TOL: f64 = 1e-12;

pub fn run(cfg: &Config, ctx: &Ctx) -> Result<(), CliError> {
    cfg.allow_keys(KEYS)?;
    let f = Nonlinearity::from_spec(cfg.require("nonlinearity")?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let spec_a = parse_initial(cfg.require("initial")?)?;
    let spec_b = parse_initial(cfg.require("initial_b")?)?;
    let grid = resolve_grid(cfg, &[&spec_a, &spec_b])?;
    // The distance needs equal masses, so both data are rescaled to one
    // configurable target before the run and the factors are recorded.
    let target_mass = cfg.f64("target_mass", 1.0)?;
    let (u0, factor_a) = renormalize(&build_initial(&spec_a, &grid)?, target_mass)?;
    let (v0, factor_b) = renormalize(&build_initial(&spec_b, &grid)?, target_mass)?;
    let t_end = cfg.require_f64("t_end")?;
    let snapshots = cfg
        .f64_list("snapshots")?
        .unwrap_or_else(|| (1..=8).map(|i| t_end * i as f64 / 8.0).collect());
    let bins = cfg.usize("bins", 4 * grid.n_cells())?;
    let sc = solver_config(cfg, t_end, &snapshots, None, 0.0)?;
    solver::check_data(&u0, &f, &sc).map_err(|e| CliError::Config(e.to_string()))?;
    solver::check_data(&v0, &f, &sc).map_err(|e| CliError::Config(e.to_string()))?;

    let run = transport::co_evolve(&u0, &v0, &f, &sc, bins)
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut trace = Report::new("contract");
    trace.meta_config(cfg);
    trace.meta_f64("target_mass", target_mass);
    trace.meta_f64("renormalization_a", factor_a);
    trace.meta_f64("renormalization_b", factor_b);
    trace.meta_f64("contraction_step_tol", CONTRACTION_STEP_TOL);
    trace.meta("verdict", if run.contractive { "contractive" } else { "non-contractive" });
    trace.meta_f64("max_step_rise", run.max_step_rise);
    if let Some((t, rise)) = run.first_rise {
        trace.meta_f64("first_rise_t", t);
        trace.meta_f64("first_rise", rise);
    }
    trace.header(&["t", "w2", "w2_sq", "entropy_u", "entropy_v", "mass_u", "mass_v", "dissipation"]);
    for row in &run.rows {
        trace.row(vec![
            sci(row.t),
            sci(row.w2),
            sci(row.w2_sq),
            sci(row.entropy_u),
            sci(row.entropy_v),
            sci(row.mass_u),
            sci(row.mass_v),
            row.dissipation.map(sci).unwrap_or_default(),
        ]);
    }
    trace.write(&ctx.out.join("contract_trace.csv"))?;

    let mut steps = Report::new("contract-steps");
    steps.header(&["step", "t", "w2"]);
    for (idx, (t, w2)) in run.step_trace.iter().enumerate() {
        steps.row(vec![idx.to_string(), sci(*t), sci(*w2)]);
    }
    steps.write(&ctx.out.join("contract_steps.csv"))?;

    for (label, masses) in [
        ("u", run.rows.iter().map(|r| r.mass_u).collect::<Vec<_>>()),
        ("v", run.rows.iter().map(|r| r.mass_v).collect::<Vec<_>>()),
    ] {
        let m0 = masses[0];
        for m in &masses {
            if (m - m0).abs() / m0 > MASS_DRIFT_TOL {
                return Err(CliError::Numerical(format!(
                    "mass of {label} drifted from {} to {}",
                    sci(m0),
                    sci(*m)
                )));
            }
        }
    }

    println!(
        "contract: {} over [0, {}], w2(0) = {}, w2(end) = {}",
        if run.contractive { "contractive" } else { "NON-CONTRACTIVE" },
        sci(t_end),
        sci(run.rows[0].w2),
        sci(run.rows.last().unwrap().w2),
    );
    if let Some((t, rise)) = run.first_rise {
        println!("  first recorded rise {} at t = {}", sci(rise), sci(t));
    }
    println!("  contractive = {}", yes_no(run.contractive));
    Ok(())
}
