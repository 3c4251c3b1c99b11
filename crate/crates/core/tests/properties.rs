use fused_strip::askey_wilson::AWMeasure;
use fused_strip::mpa::{abcd_from_rates, dehp_from_boundary, rates_from_abcd, ABCDParams};
use fused_strip::qseries::{q_binomial, q_binomial_by_tinv, q_binomial_by_words, q_pochhammer};
use fused_strip::strip_model::{step_transition_matrix, DownRightPath, Step};
use fused_strip::vertex_weights::{check_stochastic, model_weights, ModelParams};
use fused_strip::AWParams;
use num_rational::BigRational;
use proptest::prelude::*;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn binomial_routes_agree_exactly() {
    for q in [r(1, 2), r(2, 3), r(5, 7)] {
        for spin in 0..=6 {
            for a in 0..=spin {
                let closed = q_binomial(spin, a, &q);
                assert_eq!(closed, q_binomial_by_words(spin, a, &q), "I={spin} a={a}");
                assert_eq!(closed, q_binomial_by_tinv(spin, a, &q), "I={spin} a={a}");
            }
        }
    }
}

/// Admissible model parameters: `kappa` below its cap, boundary gaps above theirs.
fn admissible() -> impl Strategy<Value = ModelParams> {
    (1usize..=3, 0.2f64..0.8, 0.2f64..0.95, 0.05f64..2.0, 0.05f64..2.0, 0.0f64..0.5, 0.0f64..0.5).prop_map(
        |(spin, q, kfrac, ga, gb, cc, dd)| {
            let kappa = kfrac * q.powf((spin as f64 - 1.0) / 2.0);
            let gap = q.powf((1.0 - spin as f64) / 2.0) / kappa;
            ModelParams { spin, q, kappa, aa: cc + gap + ga, bb: dd + gap + gb, cc, dd }
        },
    )
}

fn path_strategy(max: usize) -> impl Strategy<Value = DownRightPath> {
    prop::collection::vec(prop::bool::ANY, 1..=max)
        .prop_map(|bits| DownRightPath::new(bits.into_iter().map(|b| if b { Step::Right } else { Step::Down }).collect(), 8))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pochhammer_recursion(x in -3.0f64..3.0, s in -0.99f64..0.99, n in 0usize..30) {
        let lhs = q_pochhammer(&x, &s, n + 1);
        let rhs = q_pochhammer(&x, &s, n) * (1.0 - x * s.powi(n as i32));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn pochhammer_recursion_exact(num in -20i64..20, den in 1i64..20, n in 0usize..8) {
        let x = r(num, den);
        let s = r(den, num.abs() + den + 1);
        let lhs = q_pochhammer(&x, &s, n + 1);
        let rhs = q_pochhammer(&x, &s, n) * (r(1, 1) - x.clone() * num_traits::pow(s.clone(), n));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn weights_stochastic(p in admissible()) {
        let w = model_weights(&p).unwrap();
        let rep = check_stochastic(&w, 1e-12);
        prop_assert!(rep.pass, "{:?} {:?}", p, rep.failures);
        prop_assert_eq!(rep.conservation_violation, 0.0);
    }

    #[test]
    fn transition_rows_stochastic(p in admissible(), path in path_strategy(3)) {
        prop_assume!((p.spin + 1).pow(path.width() as u32) <= 64);
        let t = step_transition_matrix(&path, &model_weights(&p).unwrap()).unwrap();
        prop_assert!(t.max_row_sum_error() < 1e-12);
        prop_assert!(t.matrix.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn abcd_round_trip(a in 0.05f64..3.0, b in -0.95f64..0.0, c in 0.05f64..3.0, d in -0.95f64..0.0, q in 0.1f64..0.9) {
        let p = ABCDParams::new(a, b, c, d, q);
        let back = abcd_from_rates(&rates_from_abcd(&p).unwrap());
        for (x, y) in [(back.a, a), (back.b, b), (back.c, c), (back.d, d)] {
            prop_assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()), "{:?} vs {:?}", back, p);
        }
    }

    #[test]
    fn boundary_parameterizations_agree(p in admissible()) {
        let dehp = dehp_from_boundary(p.aa, p.bb, p.cc, p.dd, p.q).unwrap();
        prop_assert!(dehp.alpha > 0.0 && dehp.beta > 0.0);
        let abcd = abcd_from_rates(&dehp);
        let k = 1.0 - p.q;
        let back_beta = k / ((1.0 + abcd.a) * (1.0 + abcd.b));
        let back_alpha = k / ((1.0 + abcd.c) * (1.0 + abcd.d));
        prop_assert!((back_beta - dehp.beta).abs() < 1e-12);
        prop_assert!((back_alpha - dehp.alpha).abs() < 1e-12);
        prop_assert!((-abcd.a * abcd.b * back_beta - dehp.delta).abs() < 1e-12);
        prop_assert!((-abcd.c * abcd.d * back_alpha - dehp.gamma).abs() < 1e-12);
    }

    #[test]
    fn measure_permutation_symmetry(a in -0.9f64..0.9, b in -0.9f64..0.9, c in -0.9f64..0.9, d in -0.9f64..0.9) {
        let q = 0.4;
        let m1 = AWMeasure::new(AWParams::real(a, b, c, d, q)).unwrap();
        let m2 = AWMeasure::new(AWParams::real(c, a, d, b, q)).unwrap();
        let poly = |y: f64| 1.0 + y - 2.0 * y * y + 0.5 * y.powi(3);
        let (e1, e2) = (m1.expect_with_nodes(poly, 400), m2.expect_with_nodes(poly, 400));
        prop_assert!((e1 - e2).abs() < 1e-10);
    }

    #[test]
    fn expectation_linear(a in -0.9f64..0.9, c in -0.9f64..0.9, s in -3.0f64..3.0) {
        let m = AWMeasure::new(AWParams::real(a, -0.2, c, 0.1, 0.5)).unwrap();
        let f = |y: f64| y.exp();
        let g = |y: f64| y * y;
        let lhs = m.expect_with_nodes(|y| s * f(y) + g(y), 400);
        let rhs = s * m.expect_with_nodes(f, 400) + m.expect_with_nodes(g, 400);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}
