use fused_strip::mpa::{mps_value, model_rep, rates_from_abcd, stationary_mpa, usw_rep, AnsatzMatrices};
use fused_strip::strip_model::{config_from_index, stationary_exact, state_count, step_transition_matrix};
use fused_strip::vertex_weights::model_weights;
use fused_strip::{ABCDParams, DownRightPath, Error, ModelParams};
use nalgebra::{DMatrix, DVector};

/// `<W| w |V>` by rewriting with `<W|E = <W|/alpha`, `D|V> = |V>/beta`, `DE = qED + D + E`.
fn normal_order(word: &[bool], alpha: f64, beta: f64, q: f64) -> f64 {
    // `true` is D, `false` is E.
    if word.is_empty() {
        return 1.0;
    }
    if !word[0] {
        return normal_order(&word[1..], alpha, beta, q) / alpha;
    }
    if *word.last().unwrap() {
        return normal_order(&word[..word.len() - 1], alpha, beta, q) / beta;
    }
    let i = word.windows(2).position(|w| w[0] && !w[1]).unwrap();
    let splice = |mid: &[bool]| -> Vec<bool> { [&word[..i], mid, &word[i + 2..]].concat() };
    q * normal_order(&splice(&[false, true]), alpha, beta, q)
        + normal_order(&splice(&[true]), alpha, beta, q)
        + normal_order(&splice(&[false]), alpha, beta, q)
}

fn bracket(word: &[bool], d: &DMatrix<f64>, e: &DMatrix<f64>) -> f64 {
    let dim = d.nrows();
    let mut v = DVector::<f64>::zeros(dim);
    v[0] = 1.0;
    for &x in word.iter().rev() {
        v = if x { d * v } else { e * v };
    }
    v[0]
}

#[test]
fn words_match_hand_rewriting_without_gamma_delta() {
    let abcd = ABCDParams::new(0.6, 0.0, 0.5, 0.0, 0.3);
    let rates = rates_from_abcd(&abcd).unwrap();
    assert_eq!((rates.gamma, rates.delta), (0.0, 0.0));
    let rep = usw_rep(&abcd, 12).unwrap();
    let (d, e) = (rep.big_d(), rep.big_e());
    for len in 0..=6 {
        for bits in 0..1u32 << len {
            let word: Vec<bool> = (0..len).map(|i| bits >> i & 1 == 1).collect();
            let want = normal_order(&word, rates.alpha, rates.beta, abcd.q);
            let got = bracket(&word, &d, &e);
            assert!((got - want).abs() < 1e-11 * want.abs(), "{word:?}: {got} vs {want}");
        }
    }
}

#[test]
fn de_cubed_stable_under_doubling() {
    let abcd = ABCDParams::new(0.7, -0.3, 0.4, -0.2, 0.5);
    let word = [true, false, true, false, true, false];
    let small = usw_rep(&abcd, 10).unwrap();
    let big = usw_rep(&abcd, 20).unwrap();
    let a = bracket(&word, &small.big_d(), &small.big_e());
    let b = bracket(&word, &big.big_d(), &big.big_e());
    assert!((a - b).abs() < 1e-13 * a.abs());
}

#[test]
fn mps_value_stable_under_doubling() {
    let p = ModelParams { spin: 2, q: 0.5, kappa: 0.5, aa: 3.0, bb: 3.2, cc: 0.05, dd: 0.1 };
    let abcd = fused_strip::mpa::abcd_from_model(&p).unwrap();
    let n = 3;
    let up = [true, false, true];
    let dim = n * p.spin + 2;
    let small = AnsatzMatrices::new(p.kappa, p.spin, &usw_rep(&abcd, dim).unwrap());
    let big = AnsatzMatrices::new(p.kappa, p.spin, &usw_rep(&abcd, 2 * dim).unwrap());
    for idx in 0..state_count(n, p.spin) {
        let tau = config_from_index(idx, n, p.spin);
        let a = mps_value(&up, &tau, &small, dim).unwrap();
        let b = mps_value(&up, &tau, &big, 2 * dim).unwrap();
        assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300), "{tau:?}: {a} vs {b}");
    }
    assert_eq!(
        mps_value(&up, &[0, 0, 0], &small, dim - 1),
        Err(Error::WindowTooSmall { dim: dim - 1, needed: dim })
    );
}

#[test]
fn mpa_agrees_with_perron_on_wider_paths() {
    let p = ModelParams { spin: 1, q: 0.4, kappa: 0.6, aa: 2.5, bb: 3.0, cc: 0.2, dd: 0.0 };
    let w = model_weights(&p).unwrap();
    for spec in ["DRDRD", "RRRDD", "DDDDD"] {
        let path = DownRightPath::parse(spec).unwrap();
        let exact = stationary_exact(&step_transition_matrix(&path, &w).unwrap()).unwrap();
        let mpa = stationary_mpa(&path, &p, &model_rep(&p, path.width()).unwrap()).unwrap();
        let err = exact.iter().zip(&mpa).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{spec}: {err:e}");
    }
}

#[test]
fn stationary_mpa_rejects_small_window() {
    let p = ModelParams { spin: 1, q: 0.5, kappa: 0.5, aa: 3.0, bb: 3.2, cc: 0.05, dd: 0.1 };
    let abcd = fused_strip::mpa::abcd_from_model(&p).unwrap();
    let rep = usw_rep(&abcd, 4).unwrap();
    let path = DownRightPath::zigzag(3);
    assert!(matches!(stationary_mpa(&path, &p, &rep), Err(Error::WindowTooSmall { .. })));
}
