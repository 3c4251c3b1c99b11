//! Unfused and fused R/K matrices, built by composition, braided composition
//! and (for R) a closed formula, plus the stochastic model weights.
//!
//! Operator conventions: an `R` matrix is `(I+1)^2 x (I+1)^2` with entry
//! `[(c,d)][(a,b)] = R^{c,d}_{a,b}`, columns summing to one; a `K` matrix is
//! `[out][in]`. Tensor legs are numbered with leg 1 slowest in the flattening.

use crate::dense::{apply_leg_permutation, apply_local, swap_matrix, Mat};
use crate::error::{Error, Result};
use crate::qseries::{binary_words, inv_count, phi_qinv, q_binomial};
use crate::scalar::Scalar;

fn nonzero<S: Scalar>(den: &S, what: &str) -> Result<()> {
    if den.is_negligible() {
        Err(Error::SingularParameter(format!("{what} at a pole")))
    } else {
        Ok(())
    }
}

/// Unfused R(u) on the basis `{00, 01, 10, 11}`.
pub fn unfused_r<S: Scalar>(u: &S, q: &S) -> Result<Mat<S>> {
    let one = S::one();
    let den = one.clone() - q.clone() * u.clone();
    nonzero(&den, "unfused R: 1 - qu")?;
    let mut m = Mat::zeros(4, 4);
    m.set(0, 0, one.clone());
    m.set(3, 3, one.clone());
    m.set(1, 1, q.clone() * (one.clone() - u.clone()) / den.clone());
    m.set(1, 2, u.clone() * (one.clone() - q.clone()) / den.clone());
    m.set(2, 1, (one.clone() - q.clone()) / den.clone());
    m.set(2, 2, (one - u.clone()) / den);
    Ok(m)
}

/// Inverse of [`unfused_r`], equal to it with `q` replaced by `1/q`.
pub fn unfused_r_inv<S: Scalar>(u: &S, q: &S) -> Result<Mat<S>> {
    nonzero(&(u.clone() - q.clone()), "unfused R inverse: u - q")?;
    unfused_r(u, &q.recip())
}

/// Left boundary matrix `K(u)` with parameters `aa`, `cc`.
pub fn unfused_k<S: Scalar>(u: &S, aa: &S, cc: &S) -> Result<Mat<S>> {
    let one = S::one();
    let u2 = u.clone() * u.clone();
    let den = cc.clone() * u2.clone() + u.clone() - aa.clone();
    nonzero(&den, "unfused K denominator")?;
    let diff = cc.clone() - aa.clone();
    let mut m = Mat::zeros(2, 2);
    m.set(0, 0, (diff.clone() * u2.clone() + u.clone()) / den.clone());
    m.set(0, 1, cc.clone() * (u2.clone() - one.clone()) / den.clone());
    m.set(1, 0, aa.clone() * (u2 - one) / den.clone());
    m.set(1, 1, (diff + u.clone()) / den);
    Ok(m)
}

/// Right boundary matrix `Kbar(u)` with parameters `bb`, `dd`.
pub fn unfused_kbar<S: Scalar>(u: &S, bb: &S, dd: &S) -> Result<Mat<S>> {
    let one = S::one();
    let u2 = u.clone() * u.clone();
    let den = bb.clone() * u2.clone() - u.clone() - dd.clone();
    nonzero(&den, "unfused Kbar denominator")?;
    let diff = bb.clone() - dd.clone();
    let mut m = Mat::zeros(2, 2);
    m.set(0, 0, (diff.clone() * u2.clone() - u.clone()) / den.clone());
    m.set(0, 1, bb.clone() * (u2.clone() - one.clone()) / den.clone());
    m.set(1, 0, dd.clone() * (u2 - one) / den.clone());
    m.set(1, 1, (diff - u.clone()) / den);
    Ok(m)
}

/// Fused bulk weights `entry[a][b][c][d] = R^{c,d}_{a,b}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RTensor<S> {
    spin: usize,
    entries: Vec<S>,
}

impl<S: Scalar> RTensor<S> {
    /// Reads the tensor off an operator matrix `[(c,d)][(a,b)]`.
    pub fn from_operator(spin: usize, m: &Mat<S>) -> Self {
        let n = spin + 1;
        assert_eq!(m.rows(), n * n);
        let mut entries = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        entries.push(m.get(c * n + d, a * n + b).clone());
                    }
                }
            }
        }
        RTensor { spin, entries }
    }

    pub fn from_fn(spin: usize, mut f: impl FnMut(usize, usize, usize, usize) -> S) -> Self {
        let n = spin + 1;
        let mut entries = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        entries.push(f(a, b, c, d));
                    }
                }
            }
        }
        RTensor { spin, entries }
    }

    pub fn spin(&self) -> usize {
        self.spin
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> &S {
        let n = self.spin + 1;
        &self.entries[((a * n + b) * n + c) * n + d]
    }

    pub fn to_operator(&self) -> Mat<S> {
        let n = self.spin + 1;
        let mut m = Mat::zeros(n * n, n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        m.set(c * n + d, a * n + b, self.get(a, b, c, d).clone());
                    }
                }
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &RTensor<S>) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| (x.clone() - y.clone()).to_f64().abs())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> RTensor<f64> {
        RTensor { spin: self.spin, entries: self.entries.iter().map(Scalar::to_f64).collect() }
    }

    /// True iff every entry with `a + b != c + d` is exactly zero.
    pub fn conserves_arrows(&self) -> bool {
        let n = self.spin + 1;
        (0..n.pow(4)).all(|k| {
            let (a, b, c, d) = (k / n.pow(3), (k / n.pow(2)) % n, (k / n) % n, k % n);
            a + b == c + d || self.entries[k] == S::zero()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Boundary weights stored as `entry[in][out]`; rows sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct KMatrix<S> {
    spin: usize,
    side: Side,
    entries: Vec<S>,
}

impl<S: Scalar> KMatrix<S> {
    /// Reads the weights off an operator matrix `[out][in]`.
    pub fn from_operator(spin: usize, side: Side, m: &Mat<S>) -> Self {
        let n = spin + 1;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for o in 0..n {
                entries.push(m.get(o, i).clone());
            }
        }
        KMatrix { spin, side, entries }
    }

    pub fn spin(&self) -> usize {
        self.spin
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn get(&self, input: usize, output: usize) -> &S {
        &self.entries[input * (self.spin + 1) + output]
    }

    pub fn to_operator(&self) -> Mat<S> {
        let n = self.spin + 1;
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for o in 0..n {
                m.set(o, i, self.get(i, o).clone());
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &KMatrix<S>) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| (x.clone() - y.clone()).to_f64().abs())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> KMatrix<f64> {
        KMatrix { spin: self.spin, side: self.side, entries: self.entries.iter().map(Scalar::to_f64).collect() }
    }
}

/// The surjection onto arrow counts and its q-exchangeable section.
#[derive(Clone, Debug)]
pub struct ProjectionPair<S> {
    pub spin: usize,
    pub q: S,
    /// `(I+1) x 2^I`.
    pub pi: Mat<S>,
    /// `2^I x (I+1)`.
    pub pi_hat: Mat<S>,
}

impl<S: Scalar> ProjectionPair<S> {
    /// `F = pi_hat * pi`, the projector onto the q-exchangeable subspace.
    pub fn projector(&self) -> Mat<S> {
        self.pi_hat.mul(&self.pi)
    }
}

pub fn projection_pair<S: Scalar>(spin: usize, q: &S) -> ProjectionPair<S> {
    let dim = 1usize << spin;
    let mut pi = Mat::zeros(spin + 1, dim);
    let mut pi_hat = Mat::zeros(dim, spin + 1);
    let z: Vec<S> = (0..=spin).map(|a| q_binomial(spin, a, q)).collect();
    for (idx, w) in binary_words(spin).enumerate() {
        let weight = w.iter().map(|&b| b as usize).sum::<usize>();
        pi.set(weight, idx, S::one());
        pi_hat.set(idx, weight, q.powi(inv_count(&w) as i32) / z[weight].clone());
    }
    ProjectionPair { spin, q: q.clone(), pi, pi_hat }
}

/// Powers `q^{k/2}` for integer `k`, using a square root only when `k` is odd.
struct HalfPowers<S> {
    q: S,
    sqrt_q: Option<S>,
}

impl<S: Scalar> HalfPowers<S> {
    fn new(q: &S) -> Self {
        HalfPowers { q: q.clone(), sqrt_q: q.sqrt() }
    }

    fn pow(&self, twice: i32) -> Result<S> {
        if twice % 2 == 0 {
            return Ok(self.q.powi(twice / 2));
        }
        match &self.sqrt_q {
            Some(s) => Ok(s.powi(twice)),
            None => Err(Error::Unsupported("q^(1/2) is not representable in this backend".into())),
        }
    }
}

/// A local factor in an operator product: `op` acting on `legs` (0-based).
struct Factor<S> {
    op: Mat<S>,
    legs: Vec<usize>,
}

fn apply_factors<S: Scalar>(factors: &[Factor<S>], n: usize, start: Mat<S>) -> Mat<S> {
    factors.iter().fold(start, |acc, f| apply_local(&f.op, &f.legs, n, &acc))
}

fn braid<S: Scalar>(m: Mat<S>) -> Mat<S> {
    swap_matrix::<S>(2).mul(&m)
}

fn reversal(spin: usize) -> Vec<usize> {
    (0..spin).map(|i| spin - 1 - i).collect()
}

/// Factors of the composed R operator, in application order (rightmost first).
fn r_composed_factors<S: Scalar>(u: &S, q: &S, spin: usize) -> Result<Vec<Factor<S>>> {
    let mut out = Vec::new();
    for a in 1..=spin {
        for b in (1..=spin).rev() {
            let v = u.clone() * q.powi(b as i32 - a as i32);
            out.push(Factor { op: unfused_r(&v, q)?, legs: vec![b - 1, a + spin - 1] });
        }
    }
    Ok(out)
}

fn r_braided_factors<S: Scalar>(u: &S, q: &S, spin: usize) -> Result<Vec<Factor<S>>> {
    let mut out = Vec::new();
    for a in 1..=spin {
        for b in (a..=a + spin - 1).rev() {
            let v = u.clone() * q.powi(b as i32 + 1 - 2 * a as i32);
            out.push(Factor { op: braid(unfused_r(&v, q)?), legs: vec![b - 1, b] });
        }
    }
    Ok(out)
}

fn k_composed_factors<S: Scalar>(u: &S, q: &S, aa: &S, cc: &S, spin: usize) -> Result<Vec<Factor<S>>> {
    let hp = HalfPowers::new(q);
    let u2 = u.clone() * u.clone();
    let mut out = Vec::new();
    for a in 1..=spin {
        for b in 1..a {
            let v = u2.clone() * q.powi(spin as i32 + 1 - a as i32 - b as i32);
            out.push(Factor { op: unfused_r(&v, q)?, legs: vec![b - 1, a - 1] });
        }
        let v = u.clone() * hp.pow(spin as i32 + 1 - 2 * a as i32)?;
        out.push(Factor { op: unfused_k(&v, aa, cc)?, legs: vec![a - 1] });
    }
    Ok(out)
}

fn k_braided_factors<S: Scalar>(u: &S, q: &S, aa: &S, cc: &S, spin: usize) -> Result<Vec<Factor<S>>> {
    let hp = HalfPowers::new(q);
    let u2 = u.clone() * u.clone();
    let mut out = Vec::new();
    for a in 1..=spin {
        for b in 1..a {
            let v = u2.clone() * q.powi(spin as i32 + 1 - a as i32 - b as i32);
            out.push(Factor { op: braid(unfused_r(&v, q)?), legs: vec![a - b - 1, a - b] });
        }
        let v = u.clone() * hp.pow(spin as i32 + 1 - 2 * a as i32)?;
        out.push(Factor { op: unfused_k(&v, aa, cc)?, legs: vec![0] });
    }
    Ok(out)
}

fn kbar_composed_factors<S: Scalar>(u: &S, q: &S, bb: &S, dd: &S, spin: usize) -> Result<Vec<Factor<S>>> {
    let hp = HalfPowers::new(q);
    let u2 = u.clone() * u.clone();
    let mut out = Vec::new();
    for a in (1..=spin).rev() {
        for b in (a + 1..=spin).rev() {
            let v = u2.clone() * q.powi(spin as i32 + 1 - a as i32 - b as i32);
            out.push(Factor { op: unfused_r_inv(&v, q)?, legs: vec![b - 1, a - 1] });
        }
        let v = u.clone() * hp.pow(spin as i32 + 1 - 2 * a as i32)?;
        out.push(Factor { op: unfused_kbar(&v, bb, dd)?, legs: vec![a - 1] });
    }
    Ok(out)
}

fn kbar_braided_factors<S: Scalar>(u: &S, q: &S, bb: &S, dd: &S, spin: usize) -> Result<Vec<Factor<S>>> {
    let hp = HalfPowers::new(q);
    let u2 = u.clone() * u.clone();
    let mut out = Vec::new();
    for a in (1..=spin).rev() {
        for b in (a + 1..=spin).rev() {
            let v = u2.clone() * q.powi(spin as i32 + 1 - a as i32 - b as i32);
            let j = spin + a - b;
            let op = unfused_r_inv(&v, q)?.mul(&swap_matrix::<S>(2));
            out.push(Factor { op, legs: vec![j - 1, j] });
        }
        let v = u.clone() * hp.pow(spin as i32 + 1 - 2 * a as i32)?;
        out.push(Factor { op: unfused_kbar(&v, bb, dd)?, legs: vec![spin - 1] });
    }
    Ok(out)
}

/// The composed (unprojected) bulk operator on `(C^2)^{2I}`.
pub fn composed_r_operator<S: Scalar>(u: &S, q: &S, spin: usize) -> Result<Mat<S>> {
    let n = 2 * spin;
    Ok(apply_factors(&r_composed_factors(u, q, spin)?, n, Mat::identity(1 << n)))
}

/// The composed (unprojected) left boundary operator on `(C^2)^I`, reversal included.
pub fn composed_k_operator<S: Scalar>(u: &S, q: &S, aa: &S, cc: &S, spin: usize) -> Result<Mat<S>> {
    let body = apply_factors(&k_composed_factors(u, q, aa, cc, spin)?, spin, Mat::identity(1 << spin));
    Ok(apply_leg_permutation(&reversal(spin), &body))
}

/// The composed (unprojected) right boundary operator on `(C^2)^I`, reversal included.
pub fn composed_kbar_operator<S: Scalar>(u: &S, q: &S, bb: &S, dd: &S, spin: usize) -> Result<Mat<S>> {
    let body = apply_factors(&kbar_composed_factors(u, q, bb, dd, spin)?, spin, Mat::identity(1 << spin));
    Ok(apply_leg_permutation(&reversal(spin), &body))
}

fn project_bulk<S: Scalar>(pp: &ProjectionPair<S>, factors: &[Factor<S>]) -> Mat<S> {
    let n = 2 * pp.spin;
    let start = pp.pi_hat.kron(&pp.pi_hat);
    let body = apply_factors(factors, n, start);
    pp.pi.kron(&pp.pi).mul(&body)
}

fn project_boundary<S: Scalar>(pp: &ProjectionPair<S>, factors: &[Factor<S>], reverse: bool) -> Mat<S> {
    let body = apply_factors(factors, pp.spin, pp.pi_hat.clone());
    let body = if reverse { apply_leg_permutation(&reversal(pp.spin), &body) } else { body };
    pp.pi.mul(&body)
}

/// Fused R by projecting the composed operator.
pub fn fused_r_composed<S: Scalar>(u: &S, q: &S, spin: usize) -> Result<RTensor<S>> {
    let pp = projection_pair(spin, q);
    let m = project_bulk(&pp, &r_composed_factors(u, q, spin)?);
    Ok(RTensor::from_operator(spin, &m))
}

/// Fused R by projecting the braided product and undoing the final swap.
pub fn fused_r_braided<S: Scalar>(u: &S, q: &S, spin: usize) -> Result<RTensor<S>> {
    let pp = projection_pair(spin, q);
    let m = project_bulk(&pp, &r_braided_factors(u, q, spin)?);
    let m = swap_matrix::<S>(spin + 1).mul(&m);
    Ok(RTensor::from_operator(spin, &m))
}

/// Fused R from the closed formula with two `Phi_{q^-1}` factors.
pub fn fused_r_explicit<S: Scalar>(u: &S, q: &S, spin: usize) -> Result<RTensor<S>> {
    let qi = q.powi(spin as i32);
    let n = spin + 1;
    let mut entries = Vec::with_capacity(n.pow(4));
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    if a + b != c + d {
                        entries.push(S::zero());
                        continue;
                    }
                    let mut sum = S::zero();
                    for p in 0..=b.min(c) {
                        let left = phi_qinv(c - p, c + d - p, u, &(qi.clone() * u.clone()), q)?;
                        let right = phi_qinv(p, b, &(qi.clone() / u.clone()), &qi, q)?;
                        sum = sum + left * right;
                    }
                    let pre = u.powi(d as i32 - b as i32) * q.powi((d as i32 - a as i32) * spin as i32);
                    entries.push(pre * sum);
                }
            }
        }
    }
    Ok(RTensor { spin, entries })
}

pub fn fused_k_composed<S: Scalar>(u: &S, q: &S, aa: &S, cc: &S, spin: usize) -> Result<KMatrix<S>> {
    let pp = projection_pair(spin, q);
    let m = project_boundary(&pp, &k_composed_factors(u, q, aa, cc, spin)?, true);
    Ok(KMatrix::from_operator(spin, Side::Left, &m))
}

pub fn fused_kbar_composed<S: Scalar>(u: &S, q: &S, bb: &S, dd: &S, spin: usize) -> Result<KMatrix<S>> {
    let pp = projection_pair(spin, q);
    let m = project_boundary(&pp, &kbar_composed_factors(u, q, bb, dd, spin)?, true);
    Ok(KMatrix::from_operator(spin, Side::Right, &m))
}

pub fn fused_k_braided<S: Scalar>(u: &S, q: &S, aa: &S, cc: &S, spin: usize) -> Result<KMatrix<S>> {
    let pp = projection_pair(spin, q);
    let m = project_boundary(&pp, &k_braided_factors(u, q, aa, cc, spin)?, false);
    Ok(KMatrix::from_operator(spin, Side::Left, &m))
}

pub fn fused_kbar_braided<S: Scalar>(u: &S, q: &S, bb: &S, dd: &S, spin: usize) -> Result<KMatrix<S>> {
    let pp = projection_pair(spin, q);
    let m = project_boundary(&pp, &kbar_braided_factors(u, q, bb, dd, spin)?, false);
    Ok(KMatrix::from_operator(spin, Side::Right, &m))
}

/// Residuals of the composed operators against the q-exchangeable projector `F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExchangeResiduals {
    /// `|X F - F X F|` for `X` in (R, K, Kbar): the image of `F` is invariant.
    pub invariance: [f64; 3],
    /// `|X F - F X|`, the full commutator.
    pub commutator: [f64; 3],
}

/// Checks that the composed R, K and Kbar operators preserve `Sym_q`.
#[allow(clippy::too_many_arguments)]
pub fn q_exchangeable_commutation_check<S: Scalar>(
    spin: usize,
    q: &S,
    u: &S,
    aa: &S,
    cc: &S,
    bb: &S,
    dd: &S,
) -> Result<ExchangeResiduals> {
    let f = projection_pair(spin, q).projector();
    let ff = f.kron(&f);
    let r = composed_r_operator(u, q, spin)?;
    let k = composed_k_operator(u, q, aa, cc, spin)?;
    let kb = composed_kbar_operator(u, q, bb, dd, spin)?;
    let inv = |x: &Mat<S>, p: &Mat<S>| {
        let xp = x.mul(p);
        xp.sub(&p.mul(&xp)).max_abs()
    };
    let comm = |x: &Mat<S>, p: &Mat<S>| x.mul(p).sub(&p.mul(x)).max_abs();
    Ok(ExchangeResiduals {
        invariance: [inv(&r, &ff), inv(&k, &f), inv(&kb, &f)],
        commutator: [comm(&r, &ff), comm(&k, &f), comm(&kb, &f)],
    })
}

fn on_legs<S: Scalar>(op: &Mat<S>, legs: &[usize], n: usize, target: Mat<S>) -> Mat<S> {
    apply_local(op, legs, n, &target)
}

/// `R12(x) R13(xy) R23(y) - R23(y) R13(xy) R12(x)` in max-norm.
pub fn yang_baxter_residual<S: Scalar>(x: &S, y: &S, q: &S) -> Result<f64> {
    let rx = unfused_r(x, q)?;
    let rxy = unfused_r(&(x.clone() * y.clone()), q)?;
    let ry = unfused_r(y, q)?;
    let id = Mat::identity(8);
    let lhs = on_legs(&rx, &[0, 1], 3, on_legs(&rxy, &[0, 2], 3, on_legs(&ry, &[1, 2], 3, id.clone())));
    let rhs = on_legs(&ry, &[1, 2], 3, on_legs(&rxy, &[0, 2], 3, on_legs(&rx, &[0, 1], 3, id)));
    Ok(lhs.max_abs_diff(&rhs))
}

/// `K2(y) R12(xy) K1(x) R21(x/y) - R12(x/y) K1(x) R21(xy) K2(y)` in max-norm.
pub fn reflection_residual<S: Scalar>(x: &S, y: &S, q: &S, aa: &S, cc: &S) -> Result<f64> {
    let kx = unfused_k(x, aa, cc)?;
    let ky = unfused_k(y, aa, cc)?;
    let rxy = unfused_r(&(x.clone() * y.clone()), q)?;
    let rxdy = unfused_r(&(x.clone() / y.clone()), q)?;
    let id = Mat::identity(4);
    let lhs = on_legs(&ky, &[1], 2, on_legs(&rxy, &[0, 1], 2, on_legs(&kx, &[0], 2, on_legs(&rxdy, &[1, 0], 2, id.clone()))));
    let rhs = on_legs(&rxdy, &[0, 1], 2, on_legs(&kx, &[0], 2, on_legs(&rxy, &[1, 0], 2, on_legs(&ky, &[1], 2, id))));
    Ok(lhs.max_abs_diff(&rhs))
}

/// `(I, q, kappa, aa, bb, cc, dd)` defining a strip model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub spin: usize,
    pub q: f64,
    pub kappa: f64,
    pub aa: f64,
    pub bb: f64,
    pub cc: f64,
    pub dd: f64,
}

impl ModelParams {
    /// Checks the region where all weights are stochastic and the chain irreducible.
    pub fn validate(&self) -> Result<()> {
        let i = self.spin as f64;
        let fail = |m: String| Err(Error::InvalidParams(m));
        if self.spin == 0 {
            return fail("spin I must be positive".into());
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return fail(format!("q = {} outside (0,1)", self.q));
        }
        let kmax = self.q.powf((i - 1.0) / 2.0);
        if !(self.kappa > 0.0 && self.kappa < kmax) {
            return fail(format!("kappa = {} outside (0, {kmax})", self.kappa));
        }
        if !(self.aa > 0.0 && self.bb > 0.0 && self.cc >= 0.0 && self.dd >= 0.0) {
            return fail("boundary parameters must satisfy aa, bb > 0 and cc, dd >= 0".into());
        }
        let gap = self.q.powf((1.0 - i) / 2.0) / self.kappa;
        if self.aa - self.cc <= gap {
            return fail(format!("aa - cc = {} not above {gap}", self.aa - self.cc));
        }
        if self.bb - self.dd <= gap {
            return fail(format!("bb - dd = {} not above {gap}", self.bb - self.dd));
        }
        Ok(())
    }
}

/// Bulk and boundary weights of the strip model.
///
/// `r.get(a, b, c, d)`: bottom `a`, left `b` in; top `c`, right `d` out.
/// `left.get(a, d)`: bottom `a` in, right `d` out. `right.get(b, c)`: left `b` in, top `c` out.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedWeights {
    pub spin: usize,
    pub r: RTensor<f64>,
    pub left: KMatrix<f64>,
    pub right: KMatrix<f64>,
}

/// Weights without the admissibility check.
pub fn fused_weights(params: &ModelParams) -> Result<FusedWeights> {
    let ModelParams { spin, q, kappa, aa, bb, cc, dd } = *params;
    let ri = fused_r_composed(&(kappa * kappa), &q, spin)?;
    let r = RTensor::from_fn(spin, |a, b, c, d| *ri.get(b, a, d, c));
    let left = fused_k_composed(&kappa, &q, &aa, &cc, spin)?;
    let right = fused_kbar_composed(&(1.0 / kappa), &q, &bb, &dd, spin)?;
    Ok(FusedWeights { spin, r, left, right })
}

/// Weights of an admissible model.
pub fn model_weights(params: &ModelParams) -> Result<FusedWeights> {
    params.validate()?;
    fused_weights(params)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StochasticReport {
    pub pass: bool,
    pub worst_row_sum_error: f64,
    pub min_allowed_entry: f64,
    pub conservation_violation: f64,
    pub failures: Vec<String>,
}

/// Checks row sums, nonnegativity, conservation and strict positivity of allowed entries.
pub fn check_stochastic(w: &FusedWeights, tol: f64) -> StochasticReport {
    let n = w.spin + 1;
    let mut rep = StochasticReport { min_allowed_entry: f64::INFINITY, ..Default::default() };
    let note = |rep: &mut StochasticReport, msg: String| {
        if rep.failures.len() < 32 {
            rep.failures.push(msg);
        }
    };
    for a in 0..n {
        for b in 0..n {
            let mut sum = 0.0;
            for c in 0..n {
                for d in 0..n {
                    let v = *w.r.get(a, b, c, d);
                    sum += v;
                    if a + b != c + d {
                        rep.conservation_violation = rep.conservation_violation.max(v.abs());
                        if v != 0.0 {
                            note(&mut rep, format!("R[{a}{b}->{c}{d}] = {v:e} breaks conservation"));
                        }
                    } else {
                        rep.min_allowed_entry = rep.min_allowed_entry.min(v);
                        if v <= 0.0 {
                            note(&mut rep, format!("R[{a}{b}->{c}{d}] = {v:e} not positive"));
                        }
                    }
                }
            }
            let err = (sum - 1.0).abs();
            rep.worst_row_sum_error = rep.worst_row_sum_error.max(err);
            if err > tol {
                note(&mut rep, format!("R row ({a},{b}) sums to {sum}"));
            }
        }
    }
    for (name, k) in [("left K", &w.left), ("right K", &w.right)] {
        for i in 0..n {
            let mut sum = 0.0;
            for o in 0..n {
                let v = *k.get(i, o);
                sum += v;
                rep.min_allowed_entry = rep.min_allowed_entry.min(v);
                if v <= 0.0 {
                    note(&mut rep, format!("{name}[{i}->{o}] = {v:e} not positive"));
                }
            }
            let err = (sum - 1.0).abs();
            rep.worst_row_sum_error = rep.worst_row_sum_error.max(err);
            if err > tol {
                note(&mut rep, format!("{name} row {i} sums to {sum}"));
            }
        }
    }
    rep.pass = rep.failures.is_empty();
    rep
}
