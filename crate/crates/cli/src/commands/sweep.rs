//! `sweep`: the equivalence experiment. One cell per (d, m) runs the
//! dilation-pair dissipation integrals and compares the sign verdict with
//! the convexity condition checker; the two must agree away from the
//! threshold band.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use wassdiff::counterexample::{sweep_cell, CounterexampleSpec, SweepCell};
use wassdiff::nonlinearity::{mccann_holds, power_threshold};
use wassdiff::Nonlinearity;

use crate::config::Config;
use crate::data::log_grid;
use crate::report::{sci, Report};
use crate::{CliError, Ctx};

const KEYS: &[&str] = &[
    "d_list", "m_min", "m_max", "m_step", "r", "a", "delta", "eps", "r_max", "n",
    "marginal_band",
];

struct CellRow {
    d: u32,
    m: f64,
    threshold: f64,
    cell: SweepCell,
    condition: bool,
    contraction: bool,
    marginal: bool,
}

type CellOutcome = Result<CellRow, String>;

pub fn run(cfg: &Config, ctx: &Ctx) -> Result<(), CliError> {
    cfg.allow_keys(KEYS)?;
    let d_list = cfg.u32_list("d_list")?.unwrap_or_else(|| vec![1, 2, 3]);
    let m_min = cfg.f64("m_min", 0.3)?;
    let m_max = cfg.f64("m_max", 2.0)?;
    let m_step = cfg.f64("m_step", 0.1)?;
    let r = cfg.f64("r", 1.0)?;
    let a = cfg.f64("a", 1.0)?;
    let delta = cfg.f64("delta", 0.3)?;
    let eps = cfg.f64("eps", 1e-3)?;
    let r_max = cfg.f64("r_max", 2.0)?;
    let n = cfg.usize("n", 1024)?;
    let band = cfg.f64("marginal_band", 1e-3)?;
    if !(m_min > 0.0 && m_max >= m_min && m_step > 0.0) {
        return Err(CliError::Config(format!(
            "exponent grid needs 0 < m_min <= m_max and m_step > 0, got {m_min}, {m_max}, {m_step}"
        )));
    }
    if d_list.is_empty() {
        return Err(CliError::Config("d_list is empty".into()));
    }
    // Exponents in integer millis, so 0.3 + k*0.1 lands on clean decimals.
    let step_mi = (m_step * 1000.0).round() as i64;
    let min_mi = (m_min * 1000.0).round() as i64;
    let max_mi = (m_max * 1000.0).round() as i64;
    if step_mi == 0 {
        return Err(CliError::Config("m_step below 1e-3 resolution".into()));
    }
    let m_millis: Vec<i64> = (0..)
        .map(|k| min_mi + k * step_mi)
        .take_while(|&mi| mi <= max_mi)
        .collect();
    // Geometry errors surface before any worker starts.
    for &d in &d_list {
        CounterexampleSpec::new(d, r, a, delta, eps, r_max, n)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }

    let cells: Vec<(u32, i64)> = d_list
        .iter()
        .flat_map(|&d| m_millis.iter().map(move |&mi| (d, mi)))
        .collect();
    let results: Vec<OnceLock<CellOutcome>> = (0..cells.len()).map(|_| OnceLock::new()).collect();
    let next = AtomicUsize::new(0);
    let r_grid = log_grid(1e-3, 1e3, 201);
    let cells_dir = ctx.out.join("cells");
    std::fs::create_dir_all(&cells_dir)
        .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", cells_dir.display())))?;

    std::thread::scope(|scope| {
        for _ in 0..ctx.workers.min(cells.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= cells.len() {
                    break;
                }
                let (d, mi) = cells[idx];
                let outcome = run_cell(d, mi, r, a, delta, eps, r_max, n, band, &r_grid);
                if let Ok(row) = &outcome {
                    // Cell files are written by the worker that owns the
                    // cell; names are disjoint so no coordination is needed.
                    let _ = write_cell_file(&cells_dir, mi, row);
                }
                let _ = results[idx].set(outcome);
            });
        }
    });

    let mut table = Report::new("sweep");
    table.meta_config(cfg);
    table.meta_f64("marginal_band", band);
    table.header(&[
        "d", "m", "r", "a", "delta", "eps", "I1", "I2", "I1_plus_I2", "limit_formula",
        "w2_initial_sq",
    ]);
    let mut summary = Report::new("sweep-summary");
    summary.meta_config(cfg);
    summary.meta_f64("marginal_band", band);
    summary.header(&[
        "d", "m", "threshold", "condition_verdict", "contraction_verdict", "classification",
        "detail",
    ]);

    let mut errors = Vec::new();
    let mut mismatches = Vec::new();
    let mut marginal_count = 0usize;
    for (idx, slot) in results.iter().enumerate() {
        let (d, mi) = cells[idx];
        let m = mi as f64 / 1000.0;
        match slot.get().expect("worker filled every cell") {
            Ok(row) => {
                table.row(vec![
                    row.d.to_string(),
                    sci(row.m),
                    sci(row.cell.r),
                    sci(row.cell.a),
                    sci(row.cell.delta),
                    sci(row.cell.eps),
                    sci(row.cell.i1),
                    sci(row.cell.i2),
                    sci(row.cell.total()),
                    sci(row.cell.limit_formula),
                    sci(row.cell.w2_initial_sq),
                ]);
                let classification = if row.marginal {
                    marginal_count += 1;
                    "marginal"
                } else if row.condition == row.contraction {
                    "ok"
                } else {
                    mismatches.push(format!("d={d}, m={m}"));
                    "mismatch"
                };
                summary.row(vec![
                    row.d.to_string(),
                    sci(row.m),
                    sci(row.threshold),
                    verdict_name(row.condition).into(),
                    verdict_name(row.contraction).into(),
                    classification.into(),
                    String::new(),
                ]);
            }
            Err(msg) => {
                errors.push(format!("d={d}, m={m}: {msg}"));
                summary.row(vec![
                    d.to_string(),
                    sci(m),
                    sci(power_threshold(d)),
                    String::new(),
                    String::new(),
                    "error".into(),
                    msg.clone(),
                ]);
            }
        }
    }
    table.write(&ctx.out.join("sweep_cells.csv"))?;
    summary.write(&ctx.out.join("sweep_summary.csv"))?;

    println!(
        "sweep: {} cells over d = {:?}, m = [{}, {}] step {}",
        cells.len(),
        d_list,
        m_min,
        m_max,
        m_step
    );
    for &d in &d_list {
        let verdicts: Vec<(f64, bool)> = results
            .iter()
            .enumerate()
            .filter(|(i, _)| cells[*i].0 == d)
            .filter_map(|(_, s)| s.get().unwrap().as_ref().ok())
            .map(|row| (row.m, row.contraction))
            .collect();
        match verdicts.iter().find(|(_, c)| *c) {
            Some(&(m_first, _)) if verdicts.first().map_or(false, |(_, c)| !c) => {
                println!("  d={d}: contractive from m = {m_first} (threshold {})", power_threshold(d));
            }
            Some(_) => println!("  d={d}: contractive on the whole range"),
            None => println!("  d={d}: no contractive rows"),
        }
    }
    println!(
        "  {} marginal row(s), {} mismatch(es), {} error(s)",
        marginal_count,
        mismatches.len(),
        errors.len()
    );

    if !errors.is_empty() {
        return Err(CliError::Numerical(format!(
            "{} sweep cell(s) failed; first: {}",
            errors.len(),
            errors[0]
        )));
    }
    if !mismatches.is_empty() {
        return Err(CliError::Mismatch(format!(
            "condition and contraction verdicts disagree on non-marginal row(s): {}",
            mismatches.join("; ")
        )));
    }
    Ok(())
}

fn verdict_name(holds: bool) -> &'static str {
    if holds {
        "contractive"
    } else {
        "non-contractive"
    }
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    d: u32,
    m_milli: i64,
    r: f64,
    a: f64,
    delta: f64,
    eps: f64,
    r_max: f64,
    n: usize,
    band: f64,
    r_grid: &[f64],
) -> CellOutcome {
    let m = m_milli as f64 / 1000.0;
    let spec = CounterexampleSpec::new(d, r, a, delta, eps, r_max, n).map_err(|e| e.to_string())?;
    let cell = sweep_cell(&spec, m).map_err(|e| e.to_string())?;
    let f = Nonlinearity::power(m).map_err(|e| e.to_string())?;
    let condition = mccann_holds(&f, d, r_grid).map_err(|e| e.to_string())?.holds;
    let threshold = power_threshold(d);
    Ok(CellRow {
        d,
        m,
        threshold,
        // The dilation pair contracts exactly when the initial dissipation
        // pairing is nonpositive.
        condition,
        contraction: cell.total() <= 0.0,
        marginal: (m - threshold).abs() < band,
        cell,
    })
}

fn write_cell_file(dir: &std::path::Path, m_milli: i64, row: &CellRow) -> Result<(), CliError> {
    let mut rep = Report::new("sweep-cell");
    rep.meta("d", row.d.to_string());
    rep.meta_f64("m", row.m);
    rep.meta_f64("threshold", row.threshold);
    rep.meta("condition_verdict", verdict_name(row.condition));
    rep.meta("contraction_verdict", verdict_name(row.contraction));
    rep.meta("marginal", if row.marginal { "yes" } else { "no" });
    rep.header(&[
        "d", "m", "r", "a", "delta", "eps", "I1", "I2", "I1_plus_I2", "limit_formula",
        "w2_initial_sq",
    ]);
    rep.row(vec![
        row.d.to_string(),
        sci(row.m),
        sci(row.cell.r),
        sci(row.cell.a),
        sci(row.cell.delta),
        sci(row.cell.eps),
        sci(row.cell.i1),
        sci(row.cell.i2),
        sci(row.cell.total()),
        sci(row.cell.limit_formula),
        sci(row.cell.w2_initial_sq),
    ]);
    rep.write(&dir.join(format!("d{}_m{m_milli:04}.csv", row.d)))
}
