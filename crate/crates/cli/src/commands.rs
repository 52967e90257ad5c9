use std::path::{Path, PathBuf};

use nblab::family_classical::{residual_quadrature, ClassicalBasis};
use nblab::family_invgamma::{distance_table_invgamma, InvGammaBasis};
use nblab::family_recursive::{moment, MomentWeight, RecursiveModel, WeightVariant};
use nblab::mc::{self, McContext, McRecord};
use nblab::report::{emit_matrix, fmt_f64, write_json, CsvTable, ErrorLayout, ProvenancedValue};
use nblab::solver::{distance_from_system, DistanceReport, GramSystem};
use nblab::verify::{self, Suite};
use serde::Serialize;

use crate::config::{Family, RunConfig};
use crate::CliError;

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path, CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    Ok(&cfg.out)
}

fn tagged_table(cfg: &RunConfig, header: &[&str]) -> CsvTable {
    let mut t = CsvTable::new(header);
    t.meta("family", cfg.family);
    match cfg.family {
        Family::Invgamma => {
            t.meta("y_spec", cfg.y_spec.label());
            let o = cfg.invgamma_options();
            t.meta("gram_tol", fmt_f64(o.gram_tol)).meta("rhs_tol", fmt_f64(o.rhs_tol));
            t.meta("mellin_panels_per_unit", o.mellin_panels_per_unit).meta("tail_m", fmt_f64(o.tail_m));
        }
        Family::Recursive => {
            let o = cfg.recursive_options();
            t.meta("r", &cfg.r).meta("seed", serde_json::to_string(&cfg.seed).unwrap_or_default());
            t.meta("panels_per_unit", o.panels_per_unit).meta("cond_limit", fmt_f64(o.cond_limit));
            t.meta("frac_cut", fmt_f64(o.frac_cut)).meta("structure_tol", fmt_f64(o.structure_tol));
        }
        Family::Classical => {
            t.meta("residual_tol", fmt_f64(cfg.classical_tol()));
        }
    }
    t
}

pub fn cmd_verify(suite: &str) -> Result<(), CliError> {
    let suite: Suite = suite.parse().map_err(CliError::Usage)?;
    let checks = verify::run_suite(suite);
    for c in &checks {
        println!("{c}");
    }
    let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(())
    } else {
        eprintln!("{}", serde_json::to_string(&failed).expect("check json"));
        Err(CliError::Numerical(format!("{} of {} checks failed", failed.len(), checks.len())))
    }
}

/// Gram system of size `n` and the error estimate of each `b_k`.
fn gram_system(cfg: &RunConfig, n: usize) -> Result<(GramSystem, Vec<f64>, &'static str), CliError> {
    match cfg.family {
        Family::Classical => {
            let sys = ClassicalBasis::new(n).map_err(numerical)?.gram_system();
            Ok((sys, vec![0.0; n], "semi-analytic"))
        }
        Family::Invgamma => {
            let opts = cfg.invgamma_options();
            let sys = InvGammaBasis::new(cfg.y_spec, n).map_err(numerical)?.gram_system(&opts).map_err(numerical)?;
            Ok((sys, vec![opts.rhs_tol; n], "bernstein"))
        }
        Family::Recursive => {
            let model = RecursiveModel::build(&cfg.recursive_basis()?, cfg.recursive_options());
            let sys = model.gram(n).map_err(numerical)?;
            let errs = (0..n).map(|k| model.rhs_direct(k).map(|(b, _)| b.est_error)).collect::<Result<_, _>>();
            Ok((sys, errs.map_err(numerical)?, "plancherel"))
        }
    }
}

pub fn cmd_gram(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = prepare_out(cfg)?;
    let (sys, b_err, route) = gram_system(cfg, cfg.n_max)?;
    let m: Vec<Vec<ProvenancedValue>> = sys
        .g
        .iter()
        .zip(&sys.entry_tolerances)
        .map(|(row, tol)| {
            row.iter().zip(tol).map(|(&v, &e)| ProvenancedValue::new(v, e, route, 0.0)).collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()
        .map_err(numerical)?;
    let gram_path = out.join(format!("gram_{}.csv", cfg.family));
    emit_matrix(&m, &gram_path, ErrorLayout::Inline).map_err(io)?;

    let mut rhs = tagged_table(cfg, &["k", "b_k", "est_error"]);
    for (k, (b, e)) in sys.b.iter().zip(&b_err).enumerate() {
        rhs.push_row(vec![(k + 1).to_string(), fmt_f64(*b), fmt_f64(*e)]);
    }
    let rhs_path = out.join(format!("rhs_{}.csv", cfg.family));
    rhs.write(&rhs_path).map_err(io)?;
    Ok(vec![gram_path, rhs_path])
}

/// `Ok(report)` or the reason the row was refused.
type DistanceRow = Result<DistanceReport, String>;

fn distance_rows(cfg: &RunConfig) -> Result<(Vec<DistanceRow>, Option<RecursiveModel>), CliError> {
    match cfg.family {
        Family::Classical => {
            let (full, _, _) = gram_system(cfg, cfg.n_max)?;
            let rows = (1..=cfg.n_max)
                .map(|n| {
                    let mut r = distance_from_system(&full.leading(n), 1.0).map_err(|e| e.to_string())?;
                    let check = residual_quadrature(&r.coefficients, cfg.classical_tol()).map_err(|e| e.to_string())?;
                    r.d2_crosscheck = Some(check.value);
                    r.crosscheck_route = Some("time-domain residual quadrature".into());
                    Ok(r)
                })
                .collect();
            Ok((rows, None))
        }
        Family::Invgamma => {
            let rows = distance_table_invgamma(cfg.n_max, cfg.y_spec, &cfg.invgamma_options()).map_err(numerical)?;
            Ok((rows.into_iter().map(Ok).collect(), None))
        }
        Family::Recursive => {
            let model = RecursiveModel::build(&cfg.recursive_basis()?, cfg.recursive_options());
            let rows = model.distance_table(cfg.n_max).into_iter().map(|r| r.map_err(|e| e.to_string())).collect();
            Ok((rows, Some(model)))
        }
    }
}

pub fn distance_json_path(out: &Path, family: Family, n: usize) -> PathBuf {
    out.join(format!("distance_{family}_n{n}.json"))
}

pub fn cmd_distance(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = prepare_out(cfg)?;
    let (rows, model) = distance_rows(cfg)?;
    let mut table = tagged_table(cfg, &["n", "D2", "D2_crosscheck", "cond", "status"]);
    let mut written = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let n = i + 1;
        match row {
            Ok(r) => {
                let cc = r.d2_crosscheck.unwrap_or(f64::NAN);
                let status = if r.degraded { "degraded" } else { "ok" };
                table.push_row(vec![n.to_string(), fmt_f64(r.d2), fmt_f64(cc), fmt_f64(r.condition_estimate), status.into()]);
                let p = distance_json_path(out, cfg.family, n);
                write_json(&p, r).map_err(io)?;
                written.push(p);
            }
            Err(e) => {
                let nan = fmt_f64(f64::NAN);
                table.push_row(vec![n.to_string(), nan.clone(), nan.clone(), nan, format!("refused: {e}")]);
            }
        }
    }
    let p = out.join(format!("distance_{}.csv", cfg.family));
    table.write(&p).map_err(io)?;
    written.insert(0, p);
    if let Some(model) = model {
        let mut m = tagged_table(cfg, &["j", "m_j", "est_error"]);
        for (j, v) in model.weight.moments().iter().enumerate() {
            m.push_row(vec![j.to_string(), fmt_f64(v.value), fmt_f64(v.est_error)]);
        }
        let p = out.join("distance_recursive.moments.csv");
        m.write(&p).map_err(io)?;
        written.push(p);
    }
    Ok(written)
}

pub fn cmd_moments(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    if cfg.family != Family::Recursive {
        return Err(CliError::Usage(format!("moments needs the recursive family, got {}", cfg.family)));
    }
    let out = prepare_out(cfg)?;
    let mc = &cfg.moments;
    let ppu = cfg.recursive_options().panels_per_unit;
    let w = MomentWeight::new(WeightVariant::SeedWeight(cfg.seed.function()?), mc.j_max, ppu);
    // second route for m_0: Xi^2 for the Xi seed, a doubled grid otherwise
    let (other, other_route) = if cfg.seed.is_xi() {
        (MomentWeight::new(WeightVariant::XiSquared, 0, ppu), "xi-squared")
    } else {
        (MomentWeight::new(w.variant.clone(), 0, 2 * ppu), "refined-grid")
    };
    let m0 = w.moments()[0].value;
    let m0_other = moment(&other, 0).map_err(numerical)?;

    let mut table = tagged_table(cfg, &["j", "m_j", "est_error"]);
    table.meta("j_max", mc.j_max).meta("truncation", fmt_f64(w.moments().last().map_or(0.0, |m| m.truncation)));
    table.meta("m0_route", w.moments()[0].route.clone()).meta("m0", fmt_f64(m0));
    table.meta("m0_check_route", other_route).meta("m0_check", fmt_f64(m0_other));
    table.meta("m0_rel_diff", fmt_f64((m0 - m0_other).abs() / m0_other));
    for (j, v) in w.moments().iter().enumerate() {
        table.push_row(vec![j.to_string(), fmt_f64(v.value), fmt_f64(v.est_error)]);
    }
    let mp = out.join("moments.csv");
    table.write(&mp).map_err(io)?;

    let mut grid = CsvTable::new(&["t", "w(t)"]);
    grid.meta("weight", "|zeta(1/2+it)/(1/2+it) * seed transform|^2 / (2 pi)");
    grid.meta("gnuplot", "set datafile separator ','; plot 'weight_grid.csv' using 1:2 with lines");
    for (t, v) in w.sample_grid(mc.t_min, mc.t_max, mc.points) {
        grid.push_row(vec![fmt_f64(t), fmt_f64(v)]);
    }
    let gp = out.join("weight_grid.csv");
    grid.write(&gp).map_err(io)?;
    Ok(vec![mp, gp])
}

fn mc_coefficients(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let n = cfg.mc.n;
    if let Some(c) = &cfg.mc.coefficients {
        return Ok(c.clone());
    }
    let path = cfg.mc.coefficients_file.clone().unwrap_or_else(|| distance_json_path(&cfg.out, Family::Invgamma, n));
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "no coefficients for n = {n}: {} does not exist; run `nb-lab distance --family invgamma` \
             with the same --out first, or set mc.coefficients",
            path.display()
        )));
    }
    let rep: DistanceReport = nblab::report::read_json(&path).map_err(|e| CliError::Usage(e.to_string()))?;
    let want = format!("invgamma/{}", cfg.y_spec.label());
    if rep.family != want || rep.coefficients.len() != n {
        return Err(CliError::Usage(format!(
            "{} holds {} coefficients of family {}, need {n} of {want}",
            path.display(),
            rep.coefficients.len(),
            rep.family
        )));
    }
    Ok(rep.coefficients)
}

#[derive(Serialize)]
struct Witness<'a> {
    #[serde(flatten)]
    record: &'a McRecord,
    four_d2: f64,
    below_four_d2: bool,
    theta_min: f64,
    theta_max: f64,
}

#[derive(Serialize)]
struct McReport<'a> {
    y_spec: String,
    c: &'a [f64],
    #[serde(rename = "D2")]
    d2: f64,
    variance: Vec<mc::VarianceReport>,
    witness: Witness<'a>,
    moment_diagnostic: Vec<mc::MomentRow>,
}

pub fn mc_record_path(out: &Path, big_n: usize, seed: u64) -> PathBuf {
    out.join("mc").join(format!("N{big_n}")).join(format!("seed{seed}.json"))
}

pub fn cmd_mc(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    if cfg.family != Family::Invgamma {
        return Err(CliError::Usage(format!("mc needs the invgamma family, got {}", cfg.family)));
    }
    let c = mc_coefficients(cfg)?;
    let out = prepare_out(cfg)?;
    let ctx = McContext::new(cfg.y_spec, &c).map_err(numerical)?;
    let seeds: Vec<u64> = (0..cfg.mc.seeds as u64).map(|i| cfg.rng_seed + i).collect();
    let runs = mc::run_experiments(&ctx, &seeds, &cfg.mc.big_n).map_err(|e| match e {
        mc::McError::Guard { .. } => CliError::Usage(e.to_string()),
        e => numerical(e),
    })?;

    let mut written = Vec::new();
    let mut summary = CsvTable::new(&["N", "median_d2", "q25", "q75", "se_median", "median_r2", "mean_d2"]);
    summary.meta("y_spec", cfg.y_spec.label()).meta("n", cfg.mc.n).meta("seeds", seeds.len());
    summary.meta("first_seed", cfg.rng_seed).meta("D2", fmt_f64(ctx.d2_fixed));
    summary.meta("c", c.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" "));
    let v = mc::variance_integrals(&ctx, cfg.rng_seed, cfg.mc.variance_samples);
    let mut variance = Vec::new();
    for recs in &runs {
        for r in recs {
            let p = mc_record_path(out, r.big_n, r.seed);
            std::fs::create_dir_all(p.parent().expect("record dir")).map_err(io)?;
            write_json(&p, r).map_err(io)?;
        }
        let s = mc::summarize(recs);
        summary.push_row(
            [s.median_d2, s.q25, s.q75, s.se_median, s.median_r2, s.mean_d2]
                .iter()
                .fold(vec![s.big_n.to_string()], |mut row, x| {
                    row.push(fmt_f64(*x));
                    row
                }),
        );
        variance.push(mc::variance_bound_check(&ctx, recs, &v));
    }
    let sp = out.join("mc_summary.csv");
    summary.write(&sp).map_err(io)?;
    written.push(sp);

    let best = mc::best_witness(runs.last().expect("at least one N"));
    let thetas = best.witness_thetas.iter().flatten();
    let report = McReport {
        y_spec: cfg.y_spec.label(),
        c: &c,
        d2: ctx.d2_fixed,
        variance,
        witness: Witness {
            record: best,
            four_d2: 4.0 * ctx.d2_fixed,
            below_four_d2: best.d2 <= 4.0 * ctx.d2_fixed,
            theta_min: thetas.clone().copied().fold(f64::INFINITY, f64::min),
            theta_max: thetas.copied().fold(0.0, f64::max),
        },
        moment_diagnostic: mc::moment_diagnostic(cfg.y_spec, 20, cfg.mc.variance_samples, cfg.rng_seed),
    };
    let rp = out.join("mc_report.json");
    write_json(&rp, &report).map_err(io)?;
    written.push(rp);
    Ok(written)
}
