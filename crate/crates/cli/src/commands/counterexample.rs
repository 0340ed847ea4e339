//! `counterexample`: the vanishing-width dissipation experiment on the
//! dilation pair, with the extrapolated limit, its closed form, and an
//! optional co-evolved trace.

use wassdiff::counterexample::{
    closed_form_limit, contraction_violation_experiment, dissipation_integrals,
    extrapolate_limit, CounterexampleSpec, EPS_LADDER,
};
use wassdiff::Nonlinearity;

use crate::config::Config;
use crate::data::solver_config;
use crate::report::{sci, yes_no, Report};
use crate::{CliError, Ctx};

const KEYS: &[&str] = &[
    "d", "m", "nonlinearity", "r", "a", "delta", "eps", "r_max", "n", "ladder", "bins", "t_end",
    "dt", "floor", "scheme", "snapshots",
];

pub fn run(cfg: &Config, ctx: &Ctx) -> Result<(), CliError> {
    cfg.allow_keys(KEYS)?;
    if cfg.get("m").is_some() && cfg.get("nonlinearity").is_some() {
        return Err(CliError::Config(
            "set either m (a power exponent) or nonlinearity, not both".into(),
        ));
    }
    let f = match cfg.get("nonlinearity") {
        Some(spec) => Nonlinearity::from_spec(spec).map_err(|e| CliError::Config(e.to_string()))?,
        None => Nonlinearity::power(cfg.f64("m", 0.4)?)
            .map_err(|e| CliError::Config(e.to_string()))?,
    };
    let d = cfg.u32("d", 3)?;
    let r = cfg.f64("r", 1.0)?;
    let a = cfg.f64("a", 1.0)?;
    let delta = cfg.f64("delta", 0.1)?;
    let eps = cfg.f64("eps", 1e-3)?;
    let r_max = cfg.f64("r_max", 1.5)?;
    let n = cfg.usize("n", 1024)?;
    let spec = CounterexampleSpec::new(d, r, a, delta, eps, r_max, n)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let ladder = cfg.f64_list("ladder")?.unwrap_or_else(|| EPS_LADDER.to_vec());
    for rung in &ladder {
        CounterexampleSpec::new(d, r, a, delta, *rung, r_max, n)
            .map_err(|e| CliError::Config(format!("ladder rung {rung}: {e}")))?;
    }

    let mut rungs = Vec::with_capacity(ladder.len());
    for &rung in &ladder {
        let rung_spec = CounterexampleSpec::new(d, r, a, delta, rung, r_max, n)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let (i1, i2) = dissipation_integrals(&rung_spec, &f)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        rungs.push((rung, i1, i2));
    }
    let fit = extrapolate_limit(&spec, &f, &ladder)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let closed = closed_form_limit(&spec, &f);

    let mut ladder_report = Report::new("counterexample");
    ladder_report.meta_config(cfg);
    ladder_report.meta("nonlinearity", f.spec_string());
    ladder_report.meta_f64("extrapolated_limit", fit.limit);
    ladder_report.meta_f64("closed_form_limit", closed);
    if closed != 0.0 {
        ladder_report.meta_f64("relative_gap", (fit.limit - closed).abs() / closed.abs());
    }
    ladder_report.meta_f64("basis_power_1", fit.basis_powers.0);
    ladder_report.meta_f64("basis_power_2", fit.basis_powers.1);
    ladder_report.meta_f64("observed_order", fit.observed_order);
    ladder_report.header(&["eps", "I1", "I2", "I1_plus_I2"]);
    for (rung, i1, i2) in &rungs {
        ladder_report.row(vec![sci(*rung), sci(*i1), sci(*i2), sci(i1 + i2)]);
    }
    ladder_report.write(&ctx.out.join("counterexample_ladder.csv"))?;

    println!(
        "counterexample: d={d}, {} on the dilation pair (r={r}, a={a}, delta={delta})",
        f.spec_string()
    );
    println!(
        "  limit {} extrapolated vs {} closed form",
        sci(fit.limit),
        sci(closed)
    );

    let t_end = cfg.f64("t_end", 0.002)?;
    if t_end > 0.0 {
        let snapshots = cfg.f64_list("snapshots")?.unwrap_or_else(|| vec![t_end]);
        let sc = solver_config(cfg, t_end, &snapshots, Some(2e-4), 1e-6)?;
        let bins = cfg.usize("bins", 2048)?;
        let report = contraction_violation_experiment(&spec, &f, &sc, bins)
            .map_err(|e| CliError::Numerical(e.to_string()))?;

        let violated = report.d0 > 0.0;
        let mut trace = Report::new("counterexample-trace");
        trace.meta_config(cfg);
        trace.meta("nonlinearity", f.spec_string());
        trace.meta_f64("i1", report.i1);
        trace.meta_f64("i2", report.i2);
        trace.meta_f64("d0", report.d0);
        trace.meta("verdict", if violated { "violated" } else { "contractive" });
        trace.meta_f64("w2_initial_sq", report.initial.w2_sq);
        trace.meta("trace_contractive", yes_no(report.run.contractive));
        trace.meta_f64("max_step_rise", report.run.max_step_rise);
        if let Some((t, rise)) = report.run.first_rise {
            trace.meta_f64("first_rise_t", t);
            trace.meta_f64("first_rise", rise);
        }
        trace.header(&[
            "t", "w2", "w2_sq", "entropy_u", "entropy_v", "mass_u", "mass_v", "dissipation",
        ]);
        for row in &report.run.rows {
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
        trace.write(&ctx.out.join("counterexample_trace.csv"))?;

        println!(
            "  initial pairing d0 = {} ({})",
            sci(report.d0),
            if violated { "contraction violated" } else { "contractive side" },
        );
        println!(
            "  co-evolved trace: contractive = {}, max step rise {}",
            yes_no(report.run.contractive),
            sci(report.run.max_step_rise),
        );
    }
    Ok(())
}
