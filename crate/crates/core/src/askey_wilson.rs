//! Askey-Wilson measures and process kernels, the Askey-Wilson form of the
//! stationary generating function, the partition function `Z_N(t)` and the
//! large-`N` mean density.
//!
//! Integrals over the continuous part use Gauss-Legendre in `theta` after
//! `y = cos(theta)`, which removes the `1/sqrt(1 - y^2)` endpoint singularity.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mpa::{abcd_from_model, ABCDParams};
use crate::qseries::INF_PRODUCT_CAP;
use crate::quadrature::mapped;
use crate::strip_model::{DownRightPath, Step};
use crate::vertex_weights::ModelParams;

/// Starting node count for adaptive integration.
pub const BASE_NODES: usize = 400;
/// Largest node count tried before giving up.
pub const MAX_NODES: usize = 25_600;
/// Relative change at which node doubling stops.
pub const QUAD_TOL: f64 = 1e-9;

const IMAG_TOL: f64 = 1e-14;

/// Four parameters, real or containing conjugate pairs, and `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AWParams {
    pub params: [Complex64; 4],
    pub q: f64,
}

fn is_real(z: Complex64) -> bool {
    z.im.abs() <= IMAG_TOL * (1.0 + z.norm())
}

impl AWParams {
    pub fn real(a: f64, b: f64, c: f64, d: f64, q: f64) -> Self {
        AWParams { params: [a, b, c, d].map(|x| Complex64::new(x, 0.0)), q }
    }

    /// `c = rho e^{i psi}`, `d = rho e^{-i psi}`.
    pub fn with_pair(a: f64, b: f64, rho: f64, psi: f64, q: f64) -> Self {
        let c = Complex64::from_polar(rho, psi);
        AWParams { params: [Complex64::new(a, 0.0), Complex64::new(b, 0.0), c, c.conj()], q }
    }

    /// The ten products `ac, ad, bc, bd, q ac, q ad, q bc, q bd, abcd, q abcd` avoid `[1, inf)`.
    pub fn validate(&self) -> Result<()> {
        if !(self.q > -1.0 && self.q < 1.0) {
            return Err(Error::OutOfRange(format!("q = {}", self.q)));
        }
        let [a, b, c, d] = self.params;
        let mut prods = vec![a * c, a * d, b * c, b * d, a * b * c * d];
        let scaled: Vec<_> = prods.iter().map(|z| z * self.q).collect();
        prods.extend(scaled);
        for z in prods {
            if is_real(z) && z.re >= 1.0 {
                return Err(Error::OutOfRange(format!("parameter product {} in [1, inf)", z.re)));
            }
        }
        Ok(())
    }

    /// Same measure with parameter `slot` moved to the front.
    fn with_first(&self, slot: usize) -> [Complex64; 4] {
        let mut p = self.params;
        p.swap(0, slot);
        p
    }
}

/// `(z; q)_inf` for complex `z`.
fn cpoch_inf(z: Complex64, q: f64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut qk = 1.0;
    for _ in 0..INF_PRODUCT_CAP {
        let term = z * qk;
        acc *= Complex64::new(1.0, 0.0) - term;
        if term.norm() < 1e-17 {
            break;
        }
        qk *= q;
    }
    acc
}

/// `(z; q)_n` for complex `z`.
fn cpoch(z: Complex64, q: f64, n: usize) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut qk = 1.0;
    for _ in 0..n {
        acc *= Complex64::new(1.0, 0.0) - z * qk;
        qk *= q;
    }
    acc
}

/// `|(z; q)_inf|^2` as a product of real quadratics.
fn abs2_poch_inf(z: Complex64, q: f64) -> f64 {
    let (re, n2) = (z.re, z.norm_sqr());
    let mut acc = 1.0;
    let mut qk = 1.0;
    for _ in 0..INF_PRODUCT_CAP {
        acc *= 1.0 - 2.0 * re * qk + n2 * qk * qk;
        if n2.sqrt() * qk < 1e-17 {
            break;
        }
        qk *= q;
    }
    acc
}

/// An atom of the measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub y: f64,
    pub mass: f64,
    /// Which parameter generated it, and its index `j`.
    pub slot: usize,
    pub j: usize,
    /// `| |chi q^j| - 1 | < 1e-12`.
    pub near_boundary: bool,
}

/// Atoms of `nu(.; a, b, c, d, q)`.
pub fn aw_atoms(p: &AWParams) -> Result<Vec<Atom>> {
    let q = p.q;
    let one = Complex64::new(1.0, 0.0);
    let mut out = Vec::new();
    for slot in 0..4 {
        let chi = p.params[slot];
        if chi.norm() <= 1.0 {
            continue;
        }
        if !is_real(chi) {
            return Err(Error::Unsupported("complex parameter of modulus above 1".into()));
        }
        let [a, b, c, d] = p.with_first(slot);
        let p0 = (cpoch_inf(one / (a * a), q) * cpoch_inf(b * c, q) * cpoch_inf(b * d, q) * cpoch_inf(c * d, q))
            / (cpoch_inf(b / a, q) * cpoch_inf(c / a, q) * cpoch_inf(d / a, q) * cpoch_inf(a * b * c * d, q));
        let mut j = 0usize;
        loop {
            let x = chi.re * q.powi(j as i32);
            if x.abs() <= 1.0 {
                break;
            }
            let mass = if j == 0 {
                p0
            } else {
                let a2 = a * a;
                let num = cpoch(a2, q, j) * cpoch(a * b, q, j) * cpoch(a * c, q, j) * cpoch(a * d, q, j)
                    * (one - a2 * q.powi(2 * j as i32));
                let mut den = cpoch(Complex64::new(q, 0.0), q, j) * (one - a2);
                for chi2 in [b, c, d] {
                    for k in 1..=j {
                        den *= chi2 - a * q.powi(k as i32);
                    }
                }
                p0 * num / den * (Complex64::new(q, 0.0) / a).powi(j as i32)
            };
            out.push(Atom {
                y: 0.5 * (x + 1.0 / x),
                mass: mass.re,
                slot,
                j,
                near_boundary: (x.abs() - 1.0).abs() < 1e-12,
            });
            j += 1;
            if q == 0.0 {
                break;
            }
        }
    }
    Ok(out)
}

/// A constructed Askey-Wilson measure.
#[derive(Clone, Debug, PartialEq)]
pub struct AWMeasure {
    pub params: AWParams,
    pub atoms: Vec<Atom>,
    prefactor: f64,
}

impl AWMeasure {
    pub fn new(params: AWParams) -> Result<Self> {
        params.validate()?;
        let q = params.q;
        let [a, b, c, d] = params.params;
        let pairs = [a * b, a * c, a * d, b * c, b * d, c * d];
        let mut num = cpoch_inf(Complex64::new(q, 0.0), q);
        for z in pairs {
            num *= cpoch_inf(z, q);
        }
        let prefactor = (num / cpoch_inf(a * b * c * d, q)).re / (2.0 * PI);
        let atoms = aw_atoms(&params)?;
        Ok(AWMeasure { params, atoms, prefactor })
    }

    /// Density of the continuous part with respect to `theta` on `[0, pi]`.
    pub fn theta_density(&self, theta: f64) -> f64 {
        let q = self.params.q;
        let s = theta.sin();
        let mut top = 4.0 * s * s;
        if q != 0.0 {
            top *= abs2_poch_inf(Complex64::from_polar(q, 2.0 * theta), q);
        }
        let e = Complex64::from_polar(1.0, theta);
        let bottom: f64 = self.params.params.iter().map(|&chi| abs2_poch_inf(chi * e, q)).product();
        self.prefactor * top / bottom
    }

    /// `f(y)` on `(-1, 1)`, zero elsewhere.
    pub fn density(&self, y: f64) -> f64 {
        if y.abs() >= 1.0 {
            return 0.0;
        }
        let theta = y.acos();
        self.theta_density(theta) / theta.sin()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `E[f]` with a fixed `n`-point rule on the continuous part.
    pub fn expect_with_nodes(&self, f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let (th, w) = mapped(n, 0.0, PI);
        let cont: f64 = th.iter().zip(&w).map(|(&t, &w)| w * self.theta_density(t) * f(t.cos())).sum();
        cont + self.atoms.iter().map(|a| a.mass * f(a.y)).sum::<f64>()
    }

    /// `E[f]`, doubling the node count until the relative change is below [`QUAD_TOL`].
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut n = BASE_NODES;
        let mut prev = self.expect_with_nodes(&f, n);
        while n < MAX_NODES {
            n *= 2;
            let cur = self.expect_with_nodes(&f, n);
            if (cur - prev).abs() <= QUAD_TOL * cur.abs().max(1e-300) {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::NoConvergence(format!("quadrature did not settle by {MAX_NODES} nodes")))
    }

    pub fn mass(&self) -> Result<f64> {
        self.expect(|_| 1.0)
    }
}

/// Density `f(y; a, b, c, d, q)`.
pub fn aw_density(y: f64, params: &AWParams) -> Result<f64> {
    Ok(AWMeasure::new(*params)?.density(y))
}

/// `pi_t = nu(.; A sqrt t, B sqrt t, C / sqrt t, D / sqrt t)`.
pub fn marginal(t: f64, abcd: &ABCDParams) -> Result<AWMeasure> {
    if !(t > 0.0) {
        return Err(Error::OutOfRange(format!("time {t}")));
    }
    let s = t.sqrt();
    AWMeasure::new(AWParams::real(abcd.a * s, abcd.b * s, abcd.c / s, abcd.d / s, abcd.q))
}

/// `P_{s,t}(x, .)` for `s < t`.
pub fn transition(s: f64, t: f64, x: f64, abcd: &ABCDParams) -> Result<AWMeasure> {
    if !(s > 0.0 && s < t) {
        return Err(Error::OutOfRange(format!("transition times s = {s}, t = {t}")));
    }
    let r = (s / t).sqrt();
    let st = t.sqrt();
    let params = if x.abs() < 1.0 {
        AWParams::with_pair(abcd.a * st, abcd.b * st, r, x.acos(), abcd.q)
    } else {
        let root = (x * x - 1.0).sqrt();
        AWParams::real(abcd.a * st, abcd.b * st, r * (x + root), r * (x - root), abcd.q)
    };
    AWMeasure::new(params)
}

/// `(A, B, C, D, q)` with `kappa` and `I`: the data the Askey-Wilson side needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AwModel {
    pub abcd: ABCDParams,
    pub kappa: f64,
    pub spin: usize,
}

impl AwModel {
    pub fn from_model(params: &ModelParams) -> Result<Self> {
        Ok(AwModel { abcd: abcd_from_model(params)?, kappa: params.kappa, spin: params.spin })
    }

    /// `h^up(t, y)` (or `h^right`) as a product over `a = 1..I`.
    pub fn h(&self, t: f64, y: f64, up: bool) -> f64 {
        let (q, i) = (self.abcd.q, self.spin as f64);
        let k = if up { self.kappa } else { 1.0 / self.kappa };
        (1..=self.spin)
            .map(|a| {
                let e = (i + 1.0) / 2.0 - a as f64;
                2.0 * t.sqrt() * y + t * q.powf(e) * k + q.powf(-e) / k
            })
            .product()
    }
}

fn log_h(m: &AwModel, t: f64, y: f64, up: bool) -> Result<f64> {
    let h = m.h(t, y, up);
    if h < -1e-12 {
        return Err(Error::NegativeIntegrand(h));
    }
    Ok(if h <= 0.0 { f64::NEG_INFINITY } else { h.ln() })
}

fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log Z_N(t)` split into the continuous and the atomic contribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPartition {
    pub continuous: f64,
    pub atoms: f64,
}

impl LogPartition {
    pub fn total(&self) -> f64 {
        log_sum_exp([self.continuous, self.atoms])
    }
}

/// `log E[h^up(t, Y_t)^n_up h^right(t, Y_t)^(n - n_up)]` with a fixed rule.
pub fn log_partition_with_nodes(n: usize, n_up: usize, t: f64, m: &AwModel, nodes: usize) -> Result<LogPartition> {
    if n_up > n {
        return Err(Error::OutOfRange(format!("{n_up} up edges on width {n}")));
    }
    let meas = marginal(t, &m.abcd)?;
    let (n_up, n_across) = (n_up as f64, (n - n_up) as f64);
    let term = |y: f64| -> Result<f64> {
        let lu = if n_up > 0.0 { n_up * log_h(m, t, y, true)? } else { 0.0 };
        let la = if n_across > 0.0 { n_across * log_h(m, t, y, false)? } else { 0.0 };
        Ok(lu + la)
    };
    let (th, w) = mapped(nodes, 0.0, PI);
    let mut cont = Vec::with_capacity(nodes);
    for (&theta, &wt) in th.iter().zip(&w) {
        let g = meas.theta_density(theta);
        if g > 0.0 {
            cont.push(wt.ln() + g.ln() + term(theta.cos())?);
        }
    }
    let mut atoms = Vec::new();
    for a in &meas.atoms {
        if a.mass < -1e-300 {
            return Err(Error::NegativeIntegrand(a.mass));
        }
        if a.mass > 0.0 {
            atoms.push(a.mass.ln() + term(a.y)?);
        }
    }
    Ok(LogPartition { continuous: log_sum_exp(cont), atoms: log_sum_exp(atoms) })
}

/// Node count at which `log Z_N(t)` is stable to [`QUAD_TOL`].
pub fn settle_nodes(n: usize, n_up: usize, t: f64, m: &AwModel) -> Result<usize> {
    let mut nodes = BASE_NODES;
    let mut prev = log_partition_with_nodes(n, n_up, t, m, nodes)?.total();
    while nodes < MAX_NODES {
        nodes *= 2;
        let cur = log_partition_with_nodes(n, n_up, t, m, nodes)?.total();
        if (cur - prev).abs() <= QUAD_TOL {
            return Ok(nodes);
        }
        prev = cur;
    }
    Err(Error::NoConvergence("partition function quadrature".into()))
}

/// `log Z_N(t)`; `n_up` counts the `↑` labels of the path.
pub fn partition_z(n: usize, n_up: usize, t: f64, m: &AwModel) -> Result<f64> {
    let nodes = settle_nodes(n, n_up, t, m)?;
    Ok(log_partition_with_nodes(n, n_up, t, m, nodes)?.total())
}

/// `(d/dt) log Z_N(t)` at `t = 1`, by central differences with one Richardson step.
pub fn dlogz_dt_at_1(n: usize, n_up: usize, m: &AwModel) -> Result<f64> {
    let nodes = settle_nodes(n, n_up, 1.0, m)?;
    let lz = |t: f64| log_partition_with_nodes(n, n_up, t, m, nodes).map(|p| p.total());
    let central = |h: f64| -> Result<f64> { Ok((lz(1.0 + h)? - lz(1.0 - h)?) / (2.0 * h)) };
    let coarse = central(1e-4)?;
    let fine = central(5e-5)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `E[(1/N) sum_i tau_i]` under the stationary measure, from `Z_N`.
pub fn finite_mean_density(n: usize, n_up: usize, m: &AwModel) -> Result<f64> {
    Ok(dlogz_dt_at_1(n, n_up, m)? / n as f64)
}

/// `E_mu[prod_i t_i^tau_i]` on `path` for nondecreasing times.
pub fn gen_fun_aw(path: &DownRightPath, params: &ModelParams, times: &[f64]) -> Result<f64> {
    let up: Vec<bool> = path.steps().iter().map(|s| *s == Step::Right).collect();
    gen_fun_aw_model(&up, &AwModel::from_model(params)?, times)
}

/// As [`gen_fun_aw`] with the labels given directly (`true` for `↑`).
pub fn gen_fun_aw_model(up: &[bool], m: &AwModel, times: &[f64]) -> Result<f64> {
    let n = up.len();
    if times.len() != n {
        return Err(Error::OutOfRange(format!("{} times for width {n}", times.len())));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::OutOfRange("times must be positive and nondecreasing".into()));
    }
    let mut levels: Vec<(f64, Vec<bool>)> = Vec::new();
    for (&t, &u) in times.iter().zip(up) {
        match levels.last_mut() {
            Some((lt, group)) if *lt == t => group.push(u),
            _ => levels.push((t, vec![u])),
        }
    }
    if levels.len() > 3 {
        return Err(Error::TooManyTimes(levels.len()));
    }
    let n_up = up.iter().filter(|&&u| u).count();
    let log_den = partition_z(n, n_up, 1.0, m)?;
    if levels.len() == 1 {
        return Ok((partition_z(n, n_up, levels[0].0, m)? - log_den).exp());
    }
    let a = nested_expectation(&levels, m, BASE_NODES)?;
    let b = nested_expectation(&levels, m, 2 * BASE_NODES)?;
    if (a - b).abs() > 1e-8 * b.abs() {
        let c = nested_expectation(&levels, m, 4 * BASE_NODES)?;
        if (c - b).abs() > 1e-8 * c.abs() {
            return Err(Error::NoConvergence("multi-time quadrature".into()));
        }
        return Ok(c / log_den.exp());
    }
    Ok(b / log_den.exp())
}

/// `E[prod_l F_l(Y_{t_l})]` over the Markov chain of marginals and transitions.
fn nested_expectation(levels: &[(f64, Vec<bool>)], m: &AwModel, nodes: usize) -> Result<f64> {
    let f = |l: usize, y: f64| -> f64 {
        let t = levels[l].0;
        levels[l].1.iter().map(|&u| m.h(t, y, u)).product()
    };
    let (th, w) = mapped(nodes, 0.0, PI);
    let ys: Vec<f64> = th.iter().map(|t| t.cos()).collect();
    let count = levels.len();
    // cache[l][i] = E[F_l(Y) G_{l+1}(Y) | Y_{t_{l-1}} = ys[i]] for l >= 1
    let mut cache: Vec<Vec<f64>> = vec![Vec::new(); count];

    fn g_at(
        l: usize,
        x: f64,
        levels: &[(f64, Vec<bool>)],
        m: &AwModel,
        cache: &[Vec<f64>],
        th: &[f64],
        w: &[f64],
        f: &dyn Fn(usize, f64) -> f64,
    ) -> Result<f64> {
        let meas = transition(levels[l - 1].0, levels[l].0, x, &m.abcd)?;
        let next = l + 1 < levels.len();
        let mut acc = 0.0;
        for (i, (&t, &wt)) in th.iter().zip(w).enumerate() {
            let y = t.cos();
            let tail = if next { cache[l + 1][i] } else { 1.0 };
            acc += wt * meas.theta_density(t) * f(l, y) * tail;
        }
        for a in &meas.atoms {
            let tail = if next { g_at(l + 1, a.y, levels, m, cache, th, w, f)? } else { 1.0 };
            acc += a.mass * f(l, a.y) * tail;
        }
        Ok(acc)
    }

    for l in (1..count).rev() {
        let mut vals = Vec::with_capacity(nodes);
        for &y in &ys {
            vals.push(g_at(l, y, levels, m, &cache, &th, &w, &f)?);
        }
        cache[l] = vals;
    }
    let top = marginal(levels[0].0, &m.abcd)?;
    let mut acc = 0.0;
    for (i, (&t, &wt)) in th.iter().zip(&w).enumerate() {
        acc += wt * top.theta_density(t) * f(0, t.cos()) * cache[1][i];
    }
    for a in &top.atoms {
        acc += a.mass * f(0, a.y) * g_at(1, a.y, levels, m, &cache, &th, &w, &f)?;
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    MaximalCurrent,
    HighDensity,
    LowDensity,
    Boundary,
}

impl Phase {
    pub fn label(&self) -> &'static str {
        match self {
            Phase::MaximalCurrent => "MC",
            Phase::HighDensity => "HD",
            Phase::LowDensity => "LD",
            Phase::Boundary => "boundary",
        }
    }
}

const PHASE_TOL: f64 = 1e-9;

pub fn classify_phase(abcd: &ABCDParams) -> Phase {
    if (abcd.a - 1.0).abs() < PHASE_TOL || (abcd.c - 1.0).abs() < PHASE_TOL {
        Phase::Boundary
    } else if abcd.a > 1.0 {
        Phase::HighDensity
    } else if abcd.c > 1.0 {
        Phase::LowDensity
    } else {
        Phase::MaximalCurrent
    }
}

/// A model on the Askey-Wilson side with the limiting `↑` fraction `lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub abcd: ABCDParams,
    pub kappa: f64,
    pub spin: usize,
    pub lambda: f64,
}

impl PhasePoint {
    pub fn model(&self) -> AwModel {
        AwModel { abcd: self.abcd, kappa: self.kappa, spin: self.spin }
    }
}

/// `G(x)` of the given phase.
pub fn g_function(x: f64, phase: Phase, p: &PhasePoint) -> Result<f64> {
    let (q, i) = (p.abcd.q, p.spin as f64);
    let shift = |a: usize| q.powf(a as f64 - (i + 1.0) / 2.0);
    let terms = (1..=p.spin).map(|a| match phase {
        Phase::MaximalCurrent => Ok(x / (x + shift(a))),
        Phase::HighDensity => Ok(p.abcd.a * x / (p.abcd.a * x + shift(a))),
        Phase::LowDensity => Ok(x / (x + p.abcd.c * shift(a))),
        Phase::Boundary => Err(Error::PhaseBoundary(format!("A = {}, C = {}", p.abcd.a, p.abcd.c))),
    });
    terms.sum()
}

/// `lambda G(kappa) + (1 - lambda) G(1/kappa)`.
pub fn density_limit(p: &PhasePoint) -> Result<f64> {
    if !p.abcd.in_fan() {
        return Err(Error::OutOfRange("AC >= 1".into()));
    }
    let phase = classify_phase(&p.abcd);
    Ok(p.lambda * g_function(p.kappa, phase, p)? + (1.0 - p.lambda) * g_function(1.0 / p.kappa, phase, p)?)
}
