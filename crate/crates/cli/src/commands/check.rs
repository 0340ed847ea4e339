//! `check`: condition checkers plus a randomized cross-agreement pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wassdiff::nonlinearity::{
    self, power_threshold, ConditionReport, CONDITION_TOL,
};
use wassdiff::Nonlinearity;

use crate::config::Config;
use crate::data::log_grid;
use crate::report::{sci, yes_no, Report};
use crate::{CliError, Ctx};

const KEYS: &[&str] = &["nonlinearity", "d", "r_min", "r_max", "r_points", "samples"];

const CHECKERS: &[(&str, fn(&Nonlinearity, u32, &[f64]) -> wassdiff::Result<ConditionReport>)] = &[
    ("mccann", nonlinearity::mccann_holds),
    ("monotone-form", nonlinearity::mccann_monotone_form),
    ("psi-convexity", nonlinearity::psi_convexity_holds),
];

pub fn run(cfg: &Config, ctx: &Ctx) -> Result<(), CliError> {
    cfg.allow_keys(KEYS)?;
    let f = Nonlinearity::from_spec(cfg.require("nonlinearity")?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let d = cfg.require_u32("d")?;
    let r_min = cfg.f64("r_min", 1e-3)?;
    let r_max = cfg.f64("r_max", 1e3)?;
    let points = cfg.usize("r_points", 601)?;
    let samples = cfg.usize("samples", 50)?;
    if !(r_min > 0.0 && r_max > r_min && points >= 2) {
        return Err(CliError::Config(format!(
            "need 0 < r_min < r_max and r_points >= 2, got {r_min}, {r_max}, {points}"
        )));
    }
    let r_grid = log_grid(r_min, r_max, points);

    let mut report = Report::new("check");
    report.meta_config(cfg);
    report.meta("seed", ctx.seed.to_string());
    report.meta_f64("condition_tol", CONDITION_TOL);
    report.header(&["family", "d", "checker", "holds", "worst_r", "worst_margin", "analytic"]);

    let mut families: Vec<(String, Nonlinearity)> = vec![
        (f.spec_string(), f.clone()),
        ("linear".into(), Nonlinearity::linear()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for _ in 0..samples {
        let m: f64 = rng.gen_range(0.05..3.0);
        let fam = Nonlinearity::power(m).map_err(|e| CliError::Numerical(e.to_string()))?;
        families.push((fam.spec_string(), fam));
    }

    let mut configured: Vec<(&str, ConditionReport)> = Vec::new();
    for (idx, (name, fam)) in families.iter().enumerate() {
        let mut verdicts = Vec::new();
        for (checker, fun) in CHECKERS {
            let rep = fun(fam, d, &r_grid).map_err(|e| CliError::Numerical(e.to_string()))?;
            report.row(vec![
                name.clone(),
                d.to_string(),
                checker.to_string(),
                yes_no(rep.holds).into(),
                sci(rep.worst_r),
                sci(rep.worst_margin),
                rep.analytic.map(yes_no).unwrap_or("").into(),
            ]);
            verdicts.push(rep.holds);
            if idx == 0 {
                configured.push((checker, rep));
            }
        }
        if verdicts.iter().any(|&v| v != verdicts[0]) {
            return Err(CliError::Numerical(format!(
                "checkers disagree on {name} in d={d}: {verdicts:?}"
            )));
        }
    }
    report.write(&ctx.out.join("check_report.csv"))?;

    println!("check {} in d={d}", families[0].0);
    for (checker, rep) in &configured {
        println!(
            "  {checker:<13} {}  worst margin {} at r = {}",
            if rep.holds { "holds   " } else { "violated" },
            sci(rep.worst_margin),
            sci(rep.worst_r),
        );
    }
    if families[0].1.power_exponent().is_some() {
        println!("  power threshold 1 - 1/d = {}", sci(power_threshold(d)));
    }
    println!(
        "  agreement: {} randomized power families plus linear, all checkers agree",
        samples
    );
    Ok(())
}
