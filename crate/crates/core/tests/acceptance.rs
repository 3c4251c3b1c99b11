//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::time::Instant;

use fused_strip::askey_wilson::{
    classify_phase, density_limit, finite_mean_density, gen_fun_aw, marginal, AwModel, PhasePoint,
};
use fused_strip::mpa::{
    consistency_residual, model_rep, stationary_mpa, usw_rep, zf_gz_residual, ABCDParams,
};
use fused_strip::strip_model::{
    config_from_index, empirical_run, floquet_transfer, mean_density, stationarity_residual, stationary_exact,
    step_transition_matrix, total_variation,
};
use fused_strip::vertex_weights::{
    check_stochastic, fused_k_composed, fused_kbar_composed, fused_r_braided, fused_r_composed, fused_r_explicit,
    model_weights, reflection_residual, unfused_k, unfused_kbar, unfused_r, yang_baxter_residual, KMatrix,
    ModelParams, RTensor, Side,
};
use fused_strip::DownRightPath;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Accuracy of the finite-difference density; smaller gaps are indistinguishable from zero.
const DERIVATIVE_FLOOR: f64 = 1e-9;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn model(spin: usize) -> ModelParams {
    ModelParams { spin, q: 0.5, kappa: 0.5, aa: 3.0, bb: 3.2, cc: 0.05, dd: 0.1 }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn fusion_equivalence() -> Outcome {
    let start = Instant::now();
    let q = r(1, 2);
    for spin in 1..=3 {
        for u in [r(1, 3), r(1, 9)] {
            let composed = fused_r_composed(&u, &q, spin).map_err(|e| e.to_string())?;
            let explicit = fused_r_explicit(&u, &q, spin).map_err(|e| e.to_string())?;
            let braided = fused_r_braided(&u, &q, spin).map_err(|e| e.to_string())?;
            if composed != explicit || composed != braided {
                return Err(format!("I={spin}, u={u}: forms differ"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 30.0, format!("I=1..3, u in {{1/3, 1/9}} exact; {secs:.2}s"))
}

fn spin_half_reduction() -> Outcome {
    let (q, u, aa, cc, bb, dd) = (r(1, 2), r(1, 3), r(3, 1), r(1, 10), r(5, 2), r(1, 5));
    let e = |x: fused_strip::Error| x.to_string();
    let rf = fused_r_composed(&u, &q, 1).map_err(e)?;
    let ru = RTensor::from_operator(1, &unfused_r(&u, &q).map_err(e)?);
    let kf = fused_k_composed(&u, &q, &aa, &cc, 1).map_err(e)?;
    let ku = KMatrix::from_operator(1, Side::Left, &unfused_k(&u, &aa, &cc).map_err(e)?);
    let kbf = fused_kbar_composed(&u, &q, &bb, &dd, 1).map_err(e)?;
    let kbu = KMatrix::from_operator(1, Side::Right, &unfused_kbar(&u, &bb, &dd).map_err(e)?);
    check(rf == ru && kf == ku && kbf == kbu, "R, K, Kbar at I=1 equal the unfused matrices exactly".into())
}

fn yang_baxter_reflection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = rng.random_range(0.1..0.95);
        let y = rng.random_range(0.1..0.95);
        let yb = yang_baxter_residual(&x, &y, &0.5).map_err(|e| e.to_string())?;
        let re = reflection_residual(&x, &y, &0.5, &3.0, &0.1).map_err(|e| e.to_string())?;
        worst = worst.max(yb).max(re);
    }
    check(worst < 1e-12, format!("max residual {worst:.2e} over 20 pairs"))
}

fn stochasticity() -> Outcome {
    let p = ModelParams { spin: 2, q: 0.5, kappa: 0.5, aa: 3.0, bb: 3.0, cc: 0.05, dd: 0.05 };
    let w = model_weights(&p).map_err(|e| e.to_string())?;
    let rep = check_stochastic(&w, 1e-12);
    let n = w.spin + 1;
    let mut below_one = true;
    for a in 0..n {
        for b in 0..n {
            let allowed = (0..n).flat_map(|c| (0..n).map(move |d| (c, d))).filter(|(c, d)| a + b == c + d).count();
            for c in 0..n {
                for d in 0..n {
                    if a + b == c + d && allowed > 1 && *w.r.get(a, b, c, d) >= 1.0 {
                        below_one = false;
                    }
                }
            }
        }
    }
    for k in [&w.left, &w.right] {
        below_one &= (0..n).all(|i| (0..n).all(|o| *k.get(i, o) < 1.0));
    }
    check(
        rep.pass && below_one && rep.conservation_violation == 0.0,
        format!(
            "row-sum error {:.1e}, min allowed entry {:.3e}, conservation zeros exact: {}",
            rep.worst_row_sum_error,
            rep.min_allowed_entry,
            rep.conservation_violation == 0.0
        ),
    )
}

fn representation_contract() -> Outcome {
    let mut worst: f64 = 0.0;
    for abcd in [ABCDParams::new(0.6, 0.0, 0.5, 0.0, 0.5), ABCDParams::new(0.6, -0.1, 0.5, -0.2, 0.5)] {
        let rep = usw_rep(&abcd, 64).map_err(|e| e.to_string())?;
        worst = worst.max(rep.algebra_residuals().max());
    }
    check(worst < 1e-10, format!("M=64, gamma=delta=0 and gamma,delta>0: max residual {worst:.2e}"))
}

fn consistency_relations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut parts = Vec::new();
    let mut ok = true;
    for (spin, tol) in [(1usize, 1e-10), (2, 1e-9)] {
        let p = model(spin);
        let rep = model_rep(&p, 6).map_err(|e| e.to_string())?;
        let c = consistency_residual(&p, &rep).map_err(|e| e.to_string())?.max();
        let mut z = zf_gz_residual(&rep, p.kappa, 1.0 / p.kappa, p.kappa, spin).map_err(|e| e.to_string())?.max();
        for _ in 0..5 {
            let (x, y, u) = (rng.random_range(0.3..0.9), rng.random_range(0.3..0.9), rng.random_range(0.3..0.9));
            z = z.max(zf_gz_residual(&rep, x, y, u, spin).map_err(|e| e.to_string())?.max());
        }
        let bad = consistency_residual(&p, &rep.perturbed(1.01)).map_err(|e| e.to_string())?.bulk;
        ok &= c < tol && z < tol && bad > 1e-3;
        parts.push(format!("I={spin}: consistency {c:.1e}, ZF/GZ {z:.1e}, perturbed {bad:.1e}"));
    }
    check(ok, parts.join("; "))
}

fn paths(n: usize) -> Vec<DownRightPath> {
    let mixed = if n == 2 { "RD" } else { "RRD" };
    vec![DownRightPath::zigzag(n), DownRightPath::horizontal(n), DownRightPath::parse(mixed).unwrap()]
}

fn stationarity_cross_check() -> Outcome {
    let (mut gap, mut res): (f64, f64) = (0.0, 0.0);
    for (n, spin) in [(2, 1), (3, 1), (2, 2)] {
        let p = model(spin);
        let w = model_weights(&p).map_err(|e| e.to_string())?;
        let rep = model_rep(&p, n).map_err(|e| e.to_string())?;
        for path in paths(n) {
            let t = step_transition_matrix(&path, &w).map_err(|e| e.to_string())?;
            let exact = stationary_exact(&t).map_err(|e| e.to_string())?;
            let mu = stationary_mpa(&path, &p, &rep).map_err(|e| e.to_string())?;
            gap = gap.max(linf(&mu, &exact));
            res = res.max(stationarity_residual(&t, &exact));
        }
    }
    check(gap < 1e-10 && res < 1e-12, format!("L-inf MPA vs Perron {gap:.2e}; |mu T - mu|_1 {res:.2e}"))
}

fn floquet() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, spin) in [(3, 1), (5, 1), (3, 2)] {
        let w = model_weights(&model(spin)).map_err(|e| e.to_string())?;
        let f = floquet_transfer(&w, n).map_err(|e| e.to_string())?;
        let t = step_transition_matrix(&DownRightPath::zigzag(n), &w).map_err(|e| e.to_string())?;
        worst = worst.max(f.max_abs_diff(&t));
    }
    check(worst < 1e-12, format!("max entrywise difference {worst:.2e}"))
}

fn phase_sets() -> [(&'static str, ABCDParams); 3] {
    [
        ("MC", ABCDParams::new(0.5, -0.05, 0.5, -0.05, 0.5)),
        ("HD", ABCDParams::new(1.5, -0.05, 0.5, -0.05, 0.5)),
        ("LD", ABCDParams::new(0.5, -0.05, 1.5, -0.05, 0.5)),
    ]
}

fn aw_normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut atoms = 0;
    for (_, abcd) in phase_sets() {
        for t in [0.8, 1.0, 1.25] {
            let m = marginal(t, &abcd).map_err(|e| e.to_string())?;
            atoms += m.atoms.len();
            worst = worst.max((m.mass().map_err(|e| e.to_string())? - 1.0).abs());
        }
    }
    check(worst < 1e-8, format!("max |mass - 1| {worst:.2e} over 9 marginals ({atoms} atoms)"))
}

fn exact_gen_fun(path: &DownRightPath, p: &ModelParams, times: &[f64]) -> Result<f64, String> {
    let w = model_weights(p).map_err(|e| e.to_string())?;
    let mu = stationary_exact(&step_transition_matrix(path, &w).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    Ok(mu
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let tau = config_from_index(i, path.width(), p.spin);
            m * tau.iter().zip(times).map(|(&k, t)| t.powi(k as i32)).product::<f64>()
        })
        .sum())
}

fn generating_function() -> Outcome {
    let mut single: f64 = 0.0;
    let path = DownRightPath::parse("DRRD").unwrap();
    for spin in [1, 2] {
        let p = model(spin);
        for t in [0.5, 1.0, 2.0] {
            let times = [t; 4];
            let aw = gen_fun_aw(&path, &p, &times).map_err(|e| e.to_string())?;
            let ex = exact_gen_fun(&path, &p, &times)?;
            single = single.max(((aw - ex) / ex).abs());
        }
    }
    let path3 = DownRightPath::parse("DRD").unwrap();
    let times = [0.9, 1.0, 1.1];
    let p = model(1);
    let aw = gen_fun_aw(&path3, &p, &times).map_err(|e| e.to_string())?;
    let ex = exact_gen_fun(&path3, &p, &times)?;
    let multi = ((aw - ex) / ex).abs();
    check(single < 1e-6 && multi < 1e-4, format!("single-time rel err {single:.2e}; multi-time rel err {multi:.2e}"))
}

fn mean_density_identity() -> Outcome {
    let p = model(1);
    let w = model_weights(&p).map_err(|e| e.to_string())?;
    let m = AwModel::from_model(&p).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for spec in ["DDR", "RDR"] {
        let path = DownRightPath::parse(spec).unwrap();
        let mu = stationary_exact(&step_transition_matrix(&path, &w).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let exact = mean_density(&mu, 3, 1);
        let aw = finite_mean_density(3, path.width() - path.horizontal_count(), &m).map_err(|e| e.to_string())?;
        worst = worst.max((aw - exact).abs());
    }
    check(worst < 1e-6, format!("max |AW - exact| {worst:.2e} for 1 and 2 up edges"))
}

fn phase_limits() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, abcd) in phase_sets() {
        let start = Instant::now();
        let mut worst_gap: f64 = 0.0;
        let mut monotone = true;
        for spin in [1, 2] {
            for lambda in [0.0, 0.5, 1.0] {
                let point = PhasePoint { abcd, kappa: 0.5, spin, lambda };
                let limit = density_limit(&point).map_err(|e| e.to_string())?;
                let mut prev = f64::INFINITY;
                for n in [250usize, 500, 1000, 2000] {
                    let n_up = (lambda * n as f64).round() as usize;
                    let finite = finite_mean_density(n, n_up, &point.model()).map_err(|e| e.to_string())?;
                    let gap = (finite - limit).abs();
                    monotone &= gap < prev || gap.max(prev) < DERIVATIVE_FLOOR;
                    prev = gap;
                    if n == 2000 {
                        worst_gap = worst_gap.max(gap);
                    }
                }
            }
        }
        let secs = start.elapsed().as_secs_f64();
        let phase_ok = classify_phase(&abcd).label() == name;
        ok &= worst_gap < 0.01 && monotone && secs < 120.0 && phase_ok;
        lines.push(format!("{name}: gap(2000) {worst_gap:.2e}, monotone {monotone}, {secs:.1}s"));
    }
    check(ok, lines.join("; "))
}

fn monte_carlo() -> Outcome {
    let p = model(1);
    let w = model_weights(&p).map_err(|e| e.to_string())?;
    let path = DownRightPath::zigzag(4);
    let exact = stationary_exact(&step_transition_matrix(&path, &w).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let run = empirical_run(&path, &w, 100_000, 1_000, 2024).map_err(|e| e.to_string())?;
    let again = empirical_run(&path, &w, 100_000, 1_000, 2024).map_err(|e| e.to_string())?;
    let tv = total_variation(&run.distribution().unwrap(), &exact);
    check(tv < 0.02 && run.histogram == again.histogram, format!("TV {tv:.2e}; reseeded histogram identical: {}", run.histogram == again.histogram))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("fusion equivalence (exact)", fusion_equivalence),
        ("spin-1/2 reduction", spin_half_reduction),
        ("Yang-Baxter and reflection residuals", yang_baxter_reflection),
        ("stochasticity of model weights", stochasticity),
        ("USW representation contract", representation_contract),
        ("consistency / ZF / GZ residuals", consistency_relations),
        ("stationarity: MPA vs Perron", stationarity_cross_check),
        ("Floquet identification", floquet),
        ("Askey-Wilson normalization", aw_normalization),
        ("generating-function identity", generating_function),
        ("mean-density identity at finite N", mean_density_identity),
        ("phase-diagram limits", phase_limits),
        ("Monte Carlo agreement", monte_carlo),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
