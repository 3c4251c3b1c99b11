//! q-Pochhammer symbols, q-binomials, inversion counts and the `Phi` coefficient.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default truncation threshold for infinite products.
pub const INF_PRODUCT_TOL: f64 = 1e-16;
/// Default term cap for infinite products.
pub const INF_PRODUCT_CAP: usize = 500;

/// `(x; s)_n = prod_{j<n} (1 - x s^j)`.
pub fn q_pochhammer<S: Scalar>(x: &S, s: &S, n: usize) -> S {
    let mut acc = S::one();
    let mut term = x.clone();
    for _ in 0..n {
        acc = acc * (S::one() - term.clone());
        term = term * s.clone();
    }
    acc
}

/// `(x; q)_inf` with the default cap.
pub fn q_pochhammer_inf(x: f64, q: f64, tol: f64) -> Result<f64> {
    q_pochhammer_inf_capped(x, q, tol, INF_PRODUCT_CAP)
}

/// `(x; q)_inf`, stopping once `|x q^k| < tol`.
pub fn q_pochhammer_inf_capped(x: f64, q: f64, tol: f64, cap: usize) -> Result<f64> {
    let mut acc = 1.0;
    let mut term = x;
    for _ in 0..cap {
        if term.abs() < tol {
            return Ok(acc);
        }
        acc *= 1.0 - term;
        term *= q;
    }
    if term.abs() < tol {
        Ok(acc)
    } else {
        Err(Error::NonConvergence { cap, last: term })
    }
}

/// Number of pairs `i < j` with `w_i > w_j`.
pub fn inv_count(word: &[u8]) -> usize {
    let mut ones = 0;
    let mut inv = 0;
    for &w in word {
        if w == 1 {
            ones += 1;
        } else {
            inv += ones;
        }
    }
    inv
}

/// Number of pairs `i < j` with `w_i < w_j`.
pub fn tinv_count(word: &[u8]) -> usize {
    let mut zeros = 0;
    let mut t = 0;
    for &w in word {
        if w == 0 {
            zeros += 1;
        } else {
            t += zeros;
        }
    }
    t
}

/// Binary words of length `len` as bit vectors, leftmost letter first.
pub fn binary_words(len: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..(1usize << len)).map(move |m| (0..len).map(|i| ((m >> (len - 1 - i)) & 1) as u8).collect())
}

/// Gaussian binomial `(q;q)_I / ((q;q)_a (q;q)_{I-a})`.
pub fn q_binomial<S: Scalar>(spin: usize, a: usize, q: &S) -> S {
    assert!(a <= spin, "q_binomial needs a <= I");
    let num = q_pochhammer(q, q, spin);
    let den = q_pochhammer(q, q, a) * q_pochhammer(q, q, spin - a);
    num / den
}

/// Same value as [`q_binomial`], summed as `q^inv` over words of weight `a`.
pub fn q_binomial_by_words<S: Scalar>(spin: usize, a: usize, q: &S) -> S {
    weighted_word_sum(spin, a, q, inv_count)
}

/// Sum of `q^tinv` over words of weight `a`.
pub fn q_binomial_by_tinv<S: Scalar>(spin: usize, a: usize, q: &S) -> S {
    weighted_word_sum(spin, a, q, tinv_count)
}

fn weighted_word_sum<S: Scalar>(spin: usize, a: usize, q: &S, stat: fn(&[u8]) -> usize) -> S {
    binary_words(spin)
        .filter(|w| w.iter().map(|&b| b as usize).sum::<usize>() == a)
        .fold(S::zero(), |acc, w| acc + q.powi(stat(&w) as i32))
}

/// `Phi_{q^-1}(i, j; x, y)` from the explicit fused R formula.
pub fn phi_qinv<S: Scalar>(i: usize, j: usize, x: &S, y: &S, q: &S) -> Result<S> {
    if i > j {
        return Err(Error::OutOfRange(format!("phi_qinv needs i <= j, got i={i}, j={j}")));
    }
    if x.is_negligible() {
        return Err(Error::SingularParameter("phi_qinv with x = 0".into()));
    }
    let qi = q.recip();
    let ratio = y.clone() / x.clone();
    let den_y = q_pochhammer(y, &qi, j);
    let den_i = q_pochhammer(&qi, &qi, i);
    let den_ji = q_pochhammer(&qi, &qi, j - i);
    for (name, d) in [("(y;1/q)_j", &den_y), ("(1/q;1/q)_i", &den_i), ("(1/q;1/q)_(j-i)", &den_ji)] {
        if d.is_negligible() {
            return Err(Error::SingularParameter(format!("phi_qinv: {name} vanishes")));
        }
    }
    let num = ratio.powi(i as i32)
        * q_pochhammer(x, &qi, i)
        * q_pochhammer(&ratio, &qi, j - i)
        * q_pochhammer(&qi, &qi, j);
    Ok(num / (den_y * den_i * den_ji))
}
