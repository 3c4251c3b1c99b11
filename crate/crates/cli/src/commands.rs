//! Subcommand bodies. Each returns a table and whether every check passed.

use anyhow::{bail, Context, Result};
use fused_strip::askey_wilson::{
    classify_phase, density_limit, finite_mean_density, gen_fun_aw, gen_fun_aw_model, marginal, partition_z, Phase,
    PhasePoint,
};
use fused_strip::mpa::{model_rep, stationary_mpa};
use fused_strip::scalar::Scalar;
use fused_strip::strip_model::{
    config_from_index, empirical_run, mean_density, stationarity_residual, stationary_exact,
    step_transition_matrix_capped, total_variation, DEFAULT_STATE_CAP,
};
use fused_strip::vertex_weights::{
    check_stochastic, fused_k_braided, fused_k_composed, fused_kbar_braided, fused_kbar_composed, fused_r_braided,
    fused_r_composed, fused_r_explicit, fused_weights, model_weights, reflection_residual, yang_baxter_residual,
};
use fused_strip::{ABCDParams, DownRightPath, ModelParams, Step};
use num_rational::BigRational;

use crate::config::{parse_grid, parse_list, Resolved};
use crate::output::{Cell, Table};

pub struct Outcome {
    pub table: Table,
    pub pass: bool,
}

fn config_label(tau: &[usize]) -> String {
    tau.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("-")
}

fn up_flags(path: &DownRightPath) -> Vec<bool> {
    path.steps().iter().map(|s| *s == Step::Right).collect()
}

/// A checks table: name, pass, value, tolerance, detail.
struct Checks {
    table: Table,
    pass: bool,
}

impl Checks {
    fn new() -> Self {
        Checks { table: Table::new(&["check", "pass", "value", "tolerance", "detail"]), pass: true }
    }

    fn add(&mut self, name: &str, ok: bool, value: f64, tol: f64, detail: impl Into<String>) {
        self.pass &= ok;
        self.table.push(vec![name.into(), ok.into(), value.into(), tol.into(), Cell::Text(detail.into())]);
    }

    fn residual(&mut self, name: &str, value: f64, tol: f64) {
        self.add(name, value <= tol, value, tol, "");
    }

    fn finish(mut self) -> Outcome {
        self.table.note("pass", self.pass);
        Outcome { table: self.table, pass: self.pass }
    }
}

fn fusion_residuals<S: Scalar>(p: &ModelParams, cast: impl Fn(f64) -> Result<S>) -> Result<Vec<(&'static str, f64)>> {
    let (q, k, aa, bb, cc, dd) = (cast(p.q)?, cast(p.kappa)?, cast(p.aa)?, cast(p.bb)?, cast(p.cc)?, cast(p.dd)?);
    let spin = p.spin;
    let u = k.clone() * k.clone();
    let kinv = cast(1.0)? / k.clone();
    let composed = fused_r_composed(&u, &q, spin)?;
    let explicit = fused_r_explicit(&u, &q, spin)?;
    let braided = fused_r_braided(&u, &q, spin)?;
    let kc = fused_k_composed(&k, &q, &aa, &cc, spin)?;
    let kb = fused_k_braided(&k, &q, &aa, &cc, spin)?;
    let kbc = fused_kbar_composed(&kinv, &q, &bb, &dd, spin)?;
    let kbb = fused_kbar_braided(&kinv, &q, &bb, &dd, spin)?;
    let mut out = vec![
        ("r_composed_vs_explicit", composed.max_abs_diff(&explicit)),
        ("r_composed_vs_braided", composed.max_abs_diff(&braided)),
        ("k_composed_vs_braided", kc.max_abs_diff(&kb)),
        ("kbar_composed_vs_braided", kbc.max_abs_diff(&kbb)),
    ];
    let mut yb: f64 = 0.0;
    let mut refl: f64 = 0.0;
    for (x, y) in [(0.3, 0.7), (p.kappa, p.kappa), (0.5, 0.9)] {
        let (x, y) = (cast(x)?, cast(y)?);
        yb = yb.max(yang_baxter_residual(&x, &y, &q)?);
        refl = refl.max(reflection_residual(&x, &y, &q, &aa, &cc)?);
    }
    out.push(("yang_baxter", yb));
    out.push(("reflection", refl));
    Ok(out)
}

fn to_rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).with_context(|| format!("{x} has no exact rational value"))
}

pub fn verify_fusion(res: &Resolved) -> Result<Outcome> {
    let p = res.params.model()?;
    let mut checks = Checks::new();
    let tol = if res.rational { 0.0 } else { res.tol.unwrap_or(1e-12) };
    let residuals =
        if res.rational { fusion_residuals(&p, to_rational)? } else { fusion_residuals(&p, Ok)? };
    for (name, value) in residuals {
        checks.residual(name, value, tol);
    }
    checks.table.note("mode", if res.rational { "rational" } else { "float" });
    let admissible = p.validate();
    checks.add(
        "admissible_parameters",
        admissible.is_ok(),
        f64::NAN,
        f64::NAN,
        admissible.err().map(|e| e.to_string()).unwrap_or_default(),
    );
    let rep = check_stochastic(&fused_weights(&p)?, res.tol.unwrap_or(1e-12));
    checks.add("stochasticity", rep.pass, rep.worst_row_sum_error, res.tol.unwrap_or(1e-12), rep.failures.join("; "));
    Ok(checks.finish())
}

pub fn stationary(res: &Resolved) -> Result<Outcome> {
    let p = res.params.model()?;
    let w = model_weights(&p)?;
    let path = &res.path;
    let n = path.width();
    let t = step_transition_matrix_capped(path, &w, DEFAULT_STATE_CAP)?;
    let exact = stationary_exact(&t)?;
    let mpa = stationary_mpa(path, &p, &model_rep(&p, n)?)?;
    let mc = match res.samples {
        Some(steps) => {
            let run = empirical_run(path, &w, steps, res.burn_in.unwrap_or(1000), res.seed)?;
            Some(run.distribution().context("histogram unavailable")?)
        }
        None => None,
    };
    let mut cols = vec!["index", "config", "perron", "mpa"];
    if mc.is_some() {
        cols.push("monte_carlo");
    }
    let mut table = Table::new(&cols);
    for (i, (e, m)) in exact.iter().zip(&mpa).enumerate() {
        let mut row = vec![i.into(), config_label(&config_from_index(i, n, p.spin)).into(), (*e).into(), (*m).into()];
        if let Some(mc) = &mc {
            row.push(mc[i].into());
        }
        table.push(row);
    }
    let tol = res.tol.unwrap_or(1e-10);
    let gap = exact.iter().zip(&mpa).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    table.note("max_abs_diff_perron_mpa", gap);
    table.note("stationarity_residual", stationarity_residual(&t, &exact));
    table.note("mean_density", mean_density(&exact, n, p.spin));
    let t_gen = 2.0;
    let exact_gen: f64 = exact
        .iter()
        .enumerate()
        .map(|(i, m)| m * t_gen.powi(config_from_index(i, n, p.spin).iter().sum::<usize>() as i32))
        .sum();
    let mut pass = gap <= tol;
    match gen_fun_aw(path, &p, &vec![t_gen; n]) {
        Ok(aw) => {
            let rel = ((aw - exact_gen) / exact_gen).abs();
            table.note("genfun_t", t_gen);
            table.note("genfun_perron", exact_gen);
            table.note("genfun_askey_wilson", aw);
            table.note("genfun_rel_err", rel);
            pass &= rel < 1e-6;
        }
        Err(e) => table.note("genfun_askey_wilson", format!("unavailable: {e}")),
    }
    if let Some(mc) = &mc {
        table.note("tv_monte_carlo", total_variation(mc, &exact));
        table.note("samples", res.samples.unwrap_or(0) as u64);
    }
    table.note("pass", pass);
    Ok(Outcome { table, pass })
}

pub fn simulate(res: &Resolved) -> Result<Outcome> {
    let p = res.params.model()?;
    let w = model_weights(&p)?;
    let path = &res.path;
    let n = path.width();
    let steps = res.samples.unwrap_or(100_000);
    let burn_in = res.burn_in.unwrap_or(1000);
    let run = empirical_run(path, &w, steps, burn_in, res.seed)?;
    let exact = step_transition_matrix_capped(path, &w, DEFAULT_STATE_CAP).and_then(|t| stationary_exact(&t)).ok();
    let mut table = Table::new(&["index", "config", "count", "frequency", "exact"]);
    table.note("samples", steps as u64);
    table.note("burn_in", burn_in as u64);
    table.note("mean_density", run.mean_density());
    match (&run.histogram, run.distribution()) {
        (Some(hist), Some(freq)) => {
            for (i, (&c, f)) in hist.iter().zip(&freq).enumerate() {
                let ex = exact.as_ref().map(|e| e[i]);
                table.push(vec![i.into(), config_label(&config_from_index(i, n, p.spin)).into(), c.into(), (*f).into(), ex.into()]);
            }
            if let Some(e) = &exact {
                table.note("tv_exact", total_variation(&freq, e));
            }
        }
        _ => table.note("histogram", "omitted: state space too large"),
    }
    Ok(Outcome { table, pass: true })
}

pub fn aw_check(res: &Resolved) -> Result<Outcome> {
    let m = res.params.aw()?;
    let mut checks = Checks::new();
    let tol = res.tol.unwrap_or(1e-8);
    for t in [0.8, 1.0, 1.25] {
        let meas = marginal(t, &m.abcd)?;
        let err = (meas.mass()? - 1.0).abs();
        checks.add(&format!("marginal_mass_t{t}"), err <= tol, err, tol, format!("{} atoms", meas.atoms.len()));
    }
    let up = up_flags(&res.path);
    let n = up.len();
    let unit = gen_fun_aw_model(&up, &m, &vec![1.0; n])?;
    checks.residual("genfun_unit_times", (unit - 1.0).abs(), 1e-12);
    checks.table.note("phase", classify_phase(&m.abcd).label());
    if let Ok(p) = res.params.model() {
        let w = model_weights(&p)?;
        if let Ok(t) = step_transition_matrix_capped(&res.path, &w, DEFAULT_STATE_CAP) {
            let exact = stationary_exact(&t)?;
            let exact_tol = res.tol.unwrap_or(1e-6);
            let finite = finite_mean_density(n, up.iter().filter(|&&u| u).count(), &m)?;
            let diff = (finite - mean_density(&exact, n, p.spin)).abs();
            checks.residual("mean_density_vs_exact", diff, exact_tol);
            let tg = 2.0;
            let ex: f64 = exact
                .iter()
                .enumerate()
                .map(|(i, mu)| mu * tg.powi(config_from_index(i, n, p.spin).iter().sum::<usize>() as i32))
                .sum();
            let aw = gen_fun_aw_model(&up, &m, &vec![tg; n])?;
            checks.residual("genfun_t2_vs_exact", ((aw - ex) / ex).abs(), exact_tol);
        }
    }
    Ok(checks.finish())
}

pub fn density_scan(res: &Resolved, n_list: Option<String>, lambda_list: Option<String>) -> Result<Outcome> {
    let m = res.params.aw()?;
    let ns: Vec<usize> = match n_list.or(res.file.string("n_list")?) {
        Some(s) => parse_list(&s)?.into_iter().map(|x| x as usize).collect(),
        None => vec![250, 500, 1000, 2000],
    };
    let lambdas = match lambda_list.or(res.file.string("lambda_list")?) {
        Some(s) => parse_list(&s)?,
        None => vec![0.0, 0.5, 1.0],
    };
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        bail!("lambda {l} outside [0, 1]");
    }
    let mut table = Table::new(&["n", "lambda", "n_up", "log_z", "finite_density", "limit", "gap"]);
    table.note("phase", classify_phase(&m.abcd).label());
    for &n in &ns {
        if n == 0 {
            bail!("N must be positive");
        }
        for &lambda in &lambdas {
            let n_up = (lambda * n as f64).round() as usize;
            let log_z = partition_z(n, n_up, 1.0, &m)?;
            let finite = finite_mean_density(n, n_up, &m)?;
            let limit = density_limit(&PhasePoint { abcd: m.abcd, kappa: m.kappa, spin: m.spin, lambda })?;
            table.push(vec![
                n.into(),
                lambda.into(),
                n_up.into(),
                log_z.into(),
                finite.into(),
                limit.into(),
                (finite - limit).abs().into(),
            ]);
        }
    }
    Ok(Outcome { table, pass: true })
}

pub fn phase_diagram(res: &Resolved, a_grid: Option<String>, c_grid: Option<String>, lambda: Option<f64>) -> Result<Outcome> {
    let m = res.params.aw()?;
    let a_vals = parse_grid(&a_grid.or(res.file.string("a_grid")?).unwrap_or_else(|| "0.1:2.0:20".into()))?;
    let c_vals = parse_grid(&c_grid.or(res.file.string("c_grid")?).unwrap_or_else(|| "0.1:2.0:20".into()))?;
    let lambda = match lambda {
        Some(l) => l,
        None => res.file.f64("lambda")?.unwrap_or(0.5),
    };
    let mut table = Table::new(&["a", "c", "phase", "flag", "limit"]);
    table.note("lambda", lambda);
    for &a in &a_vals {
        for &c in &c_vals {
            let abcd = ABCDParams { a, c, ..m.abcd };
            let row = |phase: &str, flag: &str, limit: Option<f64>| -> Vec<Cell> {
                vec![a.into(), c.into(), phase.into(), flag.into(), limit.into()]
            };
            if !abcd.in_fan() {
                table.push(row("skipped", "inadmissible", None));
                continue;
            }
            let phase = classify_phase(&abcd);
            if phase == Phase::Boundary {
                table.push(row(phase.label(), "boundary", None));
                continue;
            }
            let limit = density_limit(&PhasePoint { abcd, kappa: m.kappa, spin: m.spin, lambda })?;
            table.push(row(phase.label(), "ok", Some(limit)));
        }
    }
    Ok(Outcome { table, pass: true })
}
