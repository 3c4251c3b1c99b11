//! Matrix product ansatz: the tridiagonal USW representation of the
//! `d, e` algebra, the fused solution `M^I_zeta(u)`, matrix product state
//! evaluation and residual checks of the consistency, ZF and GZ relations.
//!
//! Boundary vectors are the first coordinate vectors, so `<W| X |V>` is
//! the `(0, 0)` entry of `X`.

use nalgebra::{DMatrix, RowDVector};

use crate::error::{Error, Result};
use crate::qseries::binary_words;
use crate::strip_model::{config_from_index, state_count, DownRightPath};
use crate::vertex_weights::{
    fused_k_composed, fused_kbar_composed, fused_r_composed, model_weights, FusedWeights, ModelParams,
};

/// `(alpha, beta, gamma, delta)` of the DEHP algebra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DEHPParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub q: f64,
}

impl DEHPParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha > 0.0 && self.beta > 0.0 && self.gamma >= 0.0 && self.delta >= 0.0 && (0.0..1.0).contains(&self.q) {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!("DEHP parameters {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ABCDParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub q: f64,
}

impl ABCDParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, q: f64) -> Self {
        ABCDParams { a, b, c, d, q }
    }

    /// `A, C > 0` and `B, D` in `(-1, 0]`.
    pub fn validate(&self) -> Result<()> {
        let neg = |x: f64| x > -1.0 && x <= 0.0;
        if self.a > 0.0 && self.c > 0.0 && neg(self.b) && neg(self.d) && (0.0..1.0).contains(&self.q) {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!("ABCD parameters {self:?}")))
        }
    }

    /// The fan region `AC < 1`.
    pub fn in_fan(&self) -> bool {
        self.a * self.c < 1.0
    }
}

/// Left and right boundary constants `(aa, bb, cc, dd)` of the `d, e` relations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryConstants {
    pub aa: f64,
    pub bb: f64,
    pub cc: f64,
    pub dd: f64,
}

pub fn dehp_from_boundary(aa: f64, bb: f64, cc: f64, dd: f64, q: f64) -> Result<DEHPParams> {
    let sl = aa - cc - 1.0;
    let sr = bb - dd - 1.0;
    if sl.abs() < 1e-14 || sr.abs() < 1e-14 {
        return Err(Error::DegenerateBoundary("aa - cc or bb - dd equals 1".into()));
    }
    let k = 1.0 - q;
    Ok(DEHPParams { alpha: k * aa / sl, beta: k * bb / sr, gamma: k * cc / sl, delta: k * dd / sr, q })
}

/// Inverse of [`dehp_from_boundary`].
pub fn boundary_from_dehp(p: &DEHPParams) -> Result<BoundaryConstants> {
    let k = 1.0 - p.q;
    let side = |x: f64, y: f64| -> Result<(f64, f64)> {
        let den = x - y - k;
        if den.abs() < 1e-14 {
            return Err(Error::DegenerateBoundary("alpha - gamma equals 1 - q".into()));
        }
        let s = k / den;
        Ok((x * s / k, y * s / k))
    };
    let (aa, cc) = side(p.alpha, p.gamma)?;
    let (bb, dd) = side(p.beta, p.delta)?;
    Ok(BoundaryConstants { aa, bb, cc, dd })
}

/// `kappa_+(u, v)` and `kappa_-(u, v)`.
pub fn kappa_pm(u: f64, v: f64, q: f64) -> (f64, f64) {
    let s = 1.0 - q - u + v;
    let root = (s * s + 4.0 * u * v).sqrt();
    ((s + root) / (2.0 * u), (s - root) / (2.0 * u))
}

pub fn abcd_from_rates(p: &DEHPParams) -> ABCDParams {
    let (a, b) = kappa_pm(p.beta, p.delta, p.q);
    let (c, d) = kappa_pm(p.alpha, p.gamma, p.q);
    ABCDParams { a, b, c, d, q: p.q }
}

pub fn rates_from_abcd(p: &ABCDParams) -> Result<DEHPParams> {
    p.validate()?;
    Ok(rates_from_abcd_unchecked(p))
}

fn rates_from_abcd_unchecked(p: &ABCDParams) -> DEHPParams {
    let k = 1.0 - p.q;
    let beta = k / ((1.0 + p.a) * (1.0 + p.b));
    let alpha = k / ((1.0 + p.c) * (1.0 + p.d));
    DEHPParams { alpha, beta, gamma: -p.c * p.d * alpha, delta: -p.a * p.b * beta, q: p.q }
}

/// `(A, B, C, D)` of a strip model.
pub fn abcd_from_model(params: &ModelParams) -> Result<ABCDParams> {
    Ok(abcd_from_rates(&dehp_from_boundary(params.aa, params.bb, params.cc, params.dd, params.q)?))
}

/// Tridiagonal representation on `C^M` with coordinate boundary vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedRep {
    pub dim: usize,
    pub q: f64,
    pub abcd: ABCDParams,
    pub boundary: BoundaryConstants,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

/// Inner-window residuals of `de - q ed = 1 - q`, the left and the right boundary relation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraResiduals {
    pub bulk: f64,
    pub left: f64,
    pub right: f64,
}

impl AlgebraResiduals {
    pub fn max(&self) -> f64 {
        self.bulk.max(self.left).max(self.right)
    }
}

impl BandedRep {
    pub fn d(&self) -> DMatrix<f64> {
        &self.x * (1.0 - self.q).sqrt()
    }

    pub fn e(&self) -> DMatrix<f64> {
        &self.y * (1.0 - self.q).sqrt()
    }

    /// `D = (Id + d)/(1-q)`.
    pub fn big_d(&self) -> DMatrix<f64> {
        (DMatrix::identity(self.dim, self.dim) + self.d()) / (1.0 - self.q)
    }

    pub fn big_e(&self) -> DMatrix<f64> {
        (DMatrix::identity(self.dim, self.dim) + self.e()) / (1.0 - self.q)
    }

    /// Same representation with `x` multiplied by `factor`.
    pub fn perturbed(&self, factor: f64) -> BandedRep {
        BandedRep { x: &self.x * factor, ..self.clone() }
    }

    pub fn algebra_residuals(&self) -> AlgebraResiduals {
        let (d, e) = (self.d(), self.e());
        let q = self.q;
        let id = DMatrix::<f64>::identity(self.dim, self.dim);
        let bulk = &d * &e - (&e * &d) * q - &id * (1.0 - q);
        let w = self.dim.saturating_sub(2);
        let BoundaryConstants { aa, bb, cc, dd } = self.boundary;
        let left = (&e * aa - &d * cc + &id).row(0).amax();
        let right = (&d * bb - &e * dd + &id).column(0).amax();
        AlgebraResiduals { bulk: bulk.view((0, 0), (w, w)).amax(), left, right }
    }

    /// Residuals of `DE - qED = D + E`, `<W|(alpha E - gamma D) = <W|`, `(beta D - delta E)|V> = |V>`.
    pub fn dehp_residuals(&self) -> AlgebraResiduals {
        let (dm, em) = (self.big_d(), self.big_e());
        let p = rates_from_abcd_unchecked(&self.abcd);
        let id = DMatrix::<f64>::identity(self.dim, self.dim);
        let bulk = &dm * &em - (&em * &dm) * self.q - &dm - &em;
        let w = self.dim.saturating_sub(2);
        let left = (&em * p.alpha - &dm * p.gamma - &id).row(0).amax();
        let right = (&dm * p.beta - &em * p.delta - &id).column(0).amax();
        AlgebraResiduals { bulk: bulk.view((0, 0), (w, w)).amax(), left, right }
    }
}

/// Tolerance for the construction check in [`usw_rep`].
pub const REP_TOL: f64 = 1e-10;

/// Tridiagonal representation built from the three-term recurrence of the
/// Askey-Wilson polynomials with parameters `(A sqrt t, B sqrt t, C/sqrt t, D/sqrt t)`.
pub fn usw_rep(abcd: &ABCDParams, dim: usize) -> Result<BandedRep> {
    if dim < 3 {
        return Err(Error::WindowTooSmall { dim, needed: 3 });
    }
    let q = abcd.q;
    // The recurrence is symmetric in the two right-boundary roots; put the nonzero one first.
    let (a1, a2) = if abcd.a.abs() >= abcd.b.abs() { (abcd.a, abcd.b) } else { (abcd.b, abcd.a) };
    let (c, d) = (abcd.c, abcd.d);
    if a1.abs() < 1e-300 {
        return Err(Error::DegenerateBoundary("A = B = 0".into()));
    }
    let p = a1 * a2 * c * d;
    let kn = |n: i32| {
        let qn = q.powi(n);
        (1.0 - a1 * c * qn) * (1.0 - a1 * d * qn) * (1.0 - p * q.powi(n - 1))
            / (a1 * (1.0 - p * q.powi(2 * n - 1)) * (1.0 - p * q.powi(2 * n)))
    };
    let ln = |n: i32| {
        a1 * (1.0 - q.powi(n)) * (1.0 - a2 * c * q.powi(n - 1)) * (1.0 - a2 * d * q.powi(n - 1))
            / ((1.0 - p * q.powi(2 * n - 2)) * (1.0 - p * q.powi(2 * n - 1)))
    };
    let mut dm = DMatrix::<f64>::zeros(dim, dim);
    let mut em = DMatrix::<f64>::zeros(dim, dim);
    for n in 0..dim {
        let ni = n as i32;
        let k = kn(ni);
        let l = if n == 0 { 0.0 } else { ln(ni) };
        let up = k * a1 * a2 * q.powi(ni);
        let cd = c * d * q.powi(ni - 1);
        if n + 1 < dim {
            dm[(n + 1, n)] = -up;
            em[(n + 1, n)] = k;
        }
        if n >= 1 {
            dm[(n - 1, n)] = l;
            em[(n - 1, n)] = -cd * l;
        }
        dm[(n, n)] = a1 + up - l;
        em[(n, n)] = 1.0 / a1 - k + l * cd;
    }
    let s = (1.0 - q).sqrt();
    let boundary = boundary_from_dehp(&rates_from_abcd_unchecked(abcd))?;
    let rep = BandedRep { dim, q, abcd: *abcd, boundary, x: dm / s, y: em / s };
    let res = rep.algebra_residuals();
    let worst = res.max();
    if !(worst < REP_TOL) {
        return Err(Error::RepConstructionFailure { residual: worst, tol: REP_TOL });
    }
    Ok(rep)
}

/// Default truncation `N I + 8`.
pub fn default_dim(n: usize, spin: usize) -> usize {
    n * spin + 8
}

/// `M_0(u) = u + e`, `M_1(u) = 1/u + d`.
pub fn unfused_m(u: f64, zeta: u8, rep: &BandedRep) -> DMatrix<f64> {
    let id = DMatrix::<f64>::identity(rep.dim, rep.dim);
    if zeta == 0 {
        id * u + rep.e()
    } else {
        id / u + rep.d()
    }
}

/// `M^I_zeta(u)`: sum over binary words of weight `zeta` of ordered products of `M_{zeta_a}(u q^{a-(I+1)/2})`.
pub fn fused_m(u: f64, zeta: usize, spin: usize, rep: &BandedRep) -> DMatrix<f64> {
    let factors: Vec<[DMatrix<f64>; 2]> = (1..=spin)
        .map(|a| {
            let v = u * rep.q.powf(a as f64 - (spin as f64 + 1.0) / 2.0);
            [unfused_m(v, 0, rep), unfused_m(v, 1, rep)]
        })
        .collect();
    let mut total = DMatrix::<f64>::zeros(rep.dim, rep.dim);
    for word in binary_words(spin).filter(|w| w.iter().map(|&b| b as usize).sum::<usize>() == zeta) {
        let mut prod = DMatrix::<f64>::identity(rep.dim, rep.dim);
        for (f, &b) in factors.iter().zip(&word) {
            prod *= &f[b as usize];
        }
        total += prod;
    }
    total
}

/// The `M^up_j` and `M^right_j` of a strip model.
#[derive(Clone, Debug)]
pub struct AnsatzMatrices {
    pub spin: usize,
    pub up: Vec<DMatrix<f64>>,
    pub across: Vec<DMatrix<f64>>,
}

impl AnsatzMatrices {
    pub fn new(kappa: f64, spin: usize, rep: &BandedRep) -> Self {
        let up = (0..=spin).map(|j| fused_m(1.0 / kappa, j, spin, rep)).collect();
        let across = (0..=spin).map(|j| fused_m(kappa, j, spin, rep)).collect();
        AnsatzMatrices { spin, up, across }
    }

    fn get(&self, up: bool, j: usize) -> &DMatrix<f64> {
        if up {
            &self.up[j]
        } else {
            &self.across[j]
        }
    }
}

/// `<W| prod_i M^{p_i}_{tau_i} |V>`; `up[i]` selects `M^up`.
pub fn mps_value(up: &[bool], tau: &[usize], mats: &AnsatzMatrices, dim: usize) -> Result<f64> {
    let needed = up.len() * mats.spin + 2;
    if dim < needed {
        return Err(Error::WindowTooSmall { dim, needed });
    }
    let mut row = RowDVector::<f64>::zeros(dim);
    row[0] = 1.0;
    for (&u, &t) in up.iter().zip(tau) {
        row *= mats.get(u, t);
    }
    Ok(row[0])
}

/// The matrix product measure on `path`, in big-endian configuration order.
pub fn stationary_mpa(path: &DownRightPath, params: &ModelParams, rep: &BandedRep) -> Result<Vec<f64>> {
    let n = path.width();
    let spin = params.spin;
    let needed = n * spin + 2;
    if rep.dim < needed {
        return Err(Error::WindowTooSmall { dim: rep.dim, needed });
    }
    let mats = AnsatzMatrices::new(params.kappa, spin, rep);
    let up: Vec<bool> = path.steps().iter().map(|s| *s == crate::strip_model::Step::Right).collect();
    let states = state_count(n, spin);
    let mut values = Vec::with_capacity(states);
    for idx in 0..states {
        values.push(mps_value(&up, &config_from_index(idx, n, spin), &mats, rep.dim)?);
    }
    let mut row = RowDVector::<f64>::zeros(rep.dim);
    row[0] = 1.0;
    for &u in &up {
        let sum: DMatrix<f64> = (0..=spin).map(|j| mats.get(u, j)).fold(DMatrix::zeros(rep.dim, rep.dim), |a, m| a + m);
        row *= sum;
    }
    let z = row[0];
    if z.abs() < 1e-300 || !z.is_finite() {
        return Err(Error::ZeroNormalizer);
    }
    Ok(values.into_iter().map(|v| v / z).collect())
}

/// Representation of a strip model with the default truncation for width `n`.
pub fn model_rep(params: &ModelParams, n: usize) -> Result<BandedRep> {
    usw_rep(&abcd_from_model(params)?, default_dim(n, params.spin))
}

/// Residuals of the bulk, left and right consistency relations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelationResiduals {
    pub bulk: f64,
    pub left: f64,
    pub right: f64,
}

impl RelationResiduals {
    pub fn max(&self) -> f64 {
        self.bulk.max(self.left).max(self.right)
    }
}

fn window(rep: &BandedRep, spin: usize) -> usize {
    rep.dim.saturating_sub(2 * spin + 1)
}

pub fn consistency_residual(params: &ModelParams, rep: &BandedRep) -> Result<RelationResiduals> {
    let w = model_weights(params)?;
    Ok(consistency_residual_with(&w, params.kappa, rep))
}

pub fn consistency_residual_with(w: &FusedWeights, kappa: f64, rep: &BandedRep) -> RelationResiduals {
    let spin = w.spin;
    let m = AnsatzMatrices::new(kappa, spin, rep);
    let win = window(rep, spin);
    let mut bulk: f64 = 0.0;
    for c in 0..=spin {
        for d in 0..=spin {
            let mut diff = &m.up[c] * &m.across[d];
            for a in 0..=spin {
                for b in 0..=spin {
                    diff -= (&m.across[b] * &m.up[a]) * *w.r.get(a, b, c, d);
                }
            }
            bulk = bulk.max(diff.view((0, 0), (win, win)).amax());
        }
    }
    let mut left: f64 = 0.0;
    let mut right: f64 = 0.0;
    for d in 0..=spin {
        let mut diff = m.across[d].row(0).clone_owned();
        for a in 0..=spin {
            diff -= m.up[a].row(0) * *w.left.get(a, d);
        }
        left = left.max(diff.columns(0, win).amax());
        let mut diff = m.up[d].column(0).clone_owned();
        for b in 0..=spin {
            diff -= m.across[b].column(0) * *w.right.get(b, d);
        }
        right = right.max(diff.rows(0, win).amax());
    }
    RelationResiduals { bulk, left, right }
}

/// Fused ZF residual at `(x, y)` and both GZ residuals at `u`.
pub fn zf_gz_residual(rep: &BandedRep, x: f64, y: f64, u: f64, spin: usize) -> Result<RelationResiduals> {
    let q = rep.q;
    let BoundaryConstants { aa, bb, cc, dd } = rep.boundary;
    let r = fused_r_composed(&(x / y), &q, spin)?;
    let k = fused_k_composed(&u, &q, &aa, &cc, spin)?;
    let kb = fused_kbar_composed(&u, &q, &bb, &dd, spin)?;
    let mx: Vec<_> = (0..=spin).map(|j| fused_m(x, j, spin, rep)).collect();
    let my: Vec<_> = (0..=spin).map(|j| fused_m(y, j, spin, rep)).collect();
    let mu: Vec<_> = (0..=spin).map(|j| fused_m(u, j, spin, rep)).collect();
    let minv: Vec<_> = (0..=spin).map(|j| fused_m(1.0 / u, j, spin, rep)).collect();
    let win = window(rep, spin);
    let mut bulk: f64 = 0.0;
    for c in 0..=spin {
        for d in 0..=spin {
            let mut diff = &my[c] * &mx[d];
            for a in 0..=spin {
                for b in 0..=spin {
                    diff -= (&mx[b] * &my[a]) * *r.get(b, a, d, c);
                }
            }
            bulk = bulk.max(diff.view((0, 0), (win, win)).amax());
        }
    }
    let mut left: f64 = 0.0;
    let mut right: f64 = 0.0;
    for d in 0..=spin {
        let mut diff = mu[d].row(0).clone_owned();
        let mut diff_r = mu[d].column(0).clone_owned();
        for a in 0..=spin {
            diff -= minv[a].row(0) * *k.get(a, d);
            diff_r -= minv[a].column(0) * *kb.get(a, d);
        }
        left = left.max(diff.columns(0, win).amax());
        right = right.max(diff_r.rows(0, win).amax());
    }
    Ok(RelationResiduals { bulk, left, right })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_abcd() -> ABCDParams {
        ABCDParams::new(0.6, -0.1, 0.5, -0.2, 0.5)
    }

    #[test]
    fn dehp_example() {
        let p = dehp_from_boundary(3.0, 3.0, 0.1, 0.0, 0.5).unwrap();
        assert!((p.alpha - 15.0 / 19.0).abs() < 1e-15);
        assert!((p.gamma - 1.0 / 38.0).abs() < 1e-15);
        assert_eq!(p.delta, 0.0);
        assert!(matches!(dehp_from_boundary(2.0, 3.0, 1.0, 0.0, 0.5), Err(Error::DegenerateBoundary(_))));
    }

    #[test]
    fn kappa_example() {
        let abcd = abcd_from_rates(&DEHPParams { alpha: 0.25, beta: 0.125, gamma: 0.0, delta: 0.0, q: 0.5 });
        assert!((abcd.a - 3.0).abs() < 1e-14);
        assert_eq!(abcd.b, 0.0);
    }

    #[test]
    fn abcd_round_trip() {
        let p = sample_abcd();
        let back = abcd_from_rates(&rates_from_abcd(&p).unwrap());
        assert!((back.a - p.a).abs() < 1e-12 && (back.b - p.b).abs() < 1e-12);
        assert!((back.c - p.c).abs() < 1e-12 && (back.d - p.d).abs() < 1e-12);
        assert!(rates_from_abcd(&ABCDParams::new(0.5, 0.2, 0.5, 0.0, 0.5)).is_err());
    }

    #[test]
    fn usw_residuals() {
        let rep = usw_rep(&sample_abcd(), 64).unwrap();
        assert!(rep.algebra_residuals().max() < 1e-10);
        assert!(rep.dehp_residuals().max() < 1e-9);
        let rep0 = usw_rep(&ABCDParams::new(0.6, 0.0, 0.5, 0.0, 0.5), 64).unwrap();
        assert!(rep0.algebra_residuals().max() < 1e-10);
    }

    #[test]
    fn fused_m_two_words() {
        let rep = usw_rep(&sample_abcd(), 12).unwrap();
        let u = 0.7;
        let q = rep.q;
        let lo = u * q.powf(-0.5);
        let hi = u * q.powf(0.5);
        let direct = unfused_m(lo, 0, &rep) * unfused_m(hi, 1, &rep) + unfused_m(lo, 1, &rep) * unfused_m(hi, 0, &rep);
        assert!((fused_m(u, 1, 2, &rep) - direct).amax() < 1e-13);
        assert_eq!(fused_m(u, 0, 1, &rep), unfused_m(u, 0, &rep));
    }

    #[test]
    fn window_guard() {
        let rep = usw_rep(&sample_abcd(), 5).unwrap();
        let mats = AnsatzMatrices::new(0.5, 2, &rep);
        assert!(matches!(mps_value(&[true, false], &[0, 1], &mats, 5), Err(Error::WindowTooSmall { .. })));
        assert_eq!(mps_value(&[], &[], &mats, 5).unwrap(), 1.0);
    }

    fn model(spin: usize) -> ModelParams {
        ModelParams { spin, q: 0.5, kappa: 0.5, aa: 3.0, bb: 3.2, cc: 0.05, dd: 0.1 }
    }

    #[test]
    fn consistency_small() {
        for (spin, tol) in [(1, 1e-10), (2, 1e-9)] {
            let p = model(spin);
            let rep = model_rep(&p, 6).unwrap();
            let res = consistency_residual(&p, &rep).unwrap();
            assert!(res.max() < tol, "{spin}: {res:?}");
            let bad = consistency_residual(&p, &rep.perturbed(1.01)).unwrap();
            assert!(bad.bulk > 1e-3, "{bad:?}");
            let zf = zf_gz_residual(&rep, p.kappa, 1.0 / p.kappa, p.kappa, spin).unwrap();
            assert!(zf.max() < tol, "{zf:?}");
        }
    }

    #[test]
    fn matches_perron() {
        use crate::strip_model::{stationary_exact, step_transition_matrix};
        for spin in [1, 2] {
            let p = model(spin);
            let w = model_weights(&p).unwrap();
            for path in [DownRightPath::zigzag(2), DownRightPath::horizontal(2), DownRightPath::parse("RD").unwrap()] {
                let rep = model_rep(&p, 2).unwrap();
                let mu = stationary_mpa(&path, &p, &rep).unwrap();
                let exact = stationary_exact(&step_transition_matrix(&path, &w).unwrap()).unwrap();
                let err = mu.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-10, "{spin} {path:?} {err}");
            }
        }
    }
}
