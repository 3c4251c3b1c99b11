//! The strip lattice `{0 <= y <= x <= y + N}`: down-right paths, exact
//! one-step transition matrices, sampling, stationary vectors and the
//! two-step transfer-matrix form on zig-zag paths.
//!
//! A path starts at the left boundary vertex `(s, s)` and makes `N` unit
//! steps. A `Down` step from `v` carries the edge leaving `v` to the right
//! (label `→`); a `Right` step into `v` carries the edge leaving `v` upward
//! (label `↑`). Configurations are indexed big-endian:
//! `tau -> sum_i tau_i (I+1)^(N-1-i)` with `i` 0-based.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vertex_weights::FusedWeights;

/// Default cap on `(I+1)^N` for dense transition matrices.
pub const DEFAULT_STATE_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    Down,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    /// `↑`
    Up,
    /// `→`
    Across,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DownRightPath {
    steps: Vec<Step>,
    anchor: i64,
}

impl DownRightPath {
    pub fn new(steps: Vec<Step>, anchor: i64) -> Self {
        DownRightPath { steps, anchor }
    }

    /// Alternating `Down, Right, Down, ...` of width `n`.
    pub fn zigzag(n: usize) -> Self {
        let steps = (0..n).map(|i| if i % 2 == 0 { Step::Down } else { Step::Right }).collect();
        DownRightPath { steps, anchor: n as i64 }
    }

    /// All `Right` steps.
    pub fn horizontal(n: usize) -> Self {
        DownRightPath { steps: vec![Step::Right; n], anchor: n as i64 }
    }

    /// Parses `D`/`R` letters, or `0` (Down) / `1` (Right).
    pub fn parse(spec: &str) -> Result<Self> {
        let steps = spec
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                'D' | 'd' | '0' => Ok(Step::Down),
                'R' | 'r' | '1' => Ok(Step::Right),
                other => Err(Error::OutOfRange(format!("path letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if steps.is_empty() {
            return Err(Error::OutOfRange("empty path".into()));
        }
        let n = steps.len() as i64;
        Ok(DownRightPath { steps, anchor: n })
    }

    pub fn width(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn anchor(&self) -> i64 {
        self.anchor
    }

    pub fn labels(&self) -> Vec<Label> {
        self.steps.iter().map(|s| if *s == Step::Down { Label::Across } else { Label::Up }).collect()
    }

    /// Number of `→` labels (Down steps).
    pub fn horizontal_count(&self) -> usize {
        self.steps.iter().filter(|s| **s == Step::Down).count()
    }

    /// Number of `↑` labels (Right steps, i.e. horizontal path edges).
    pub fn vertical_count(&self) -> usize {
        self.width() - self.horizontal_count()
    }

    /// Up-right translation by `(k, k)`.
    pub fn translate(&self, k: i64) -> Self {
        DownRightPath { steps: self.steps.clone(), anchor: self.anchor + k }
    }

    /// Path vertices `v_0, ..., v_N`.
    pub fn vertices(&self) -> Vec<(i64, i64)> {
        let mut v = Vec::with_capacity(self.width() + 1);
        let (mut x, mut y) = (self.anchor, self.anchor);
        v.push((x, y));
        for s in &self.steps {
            match s {
                Step::Down => y -= 1,
                Step::Right => x += 1,
            }
            v.push((x, y));
        }
        v
    }

    /// Whether strip vertex `(x, y)` lies strictly above the path.
    pub fn is_strictly_above(&self, x: i64, y: i64) -> bool {
        Frontier::of(self).above(x, y)
    }
}

/// Highest path vertex in each column, for repeated above-the-path queries.
struct Frontier {
    first: i64,
    tops: Vec<i64>,
}

impl Frontier {
    fn of(path: &DownRightPath) -> Self {
        let verts = path.vertices();
        let first = verts[0].0;
        let mut tops = vec![i64::MIN; (verts[verts.len() - 1].0 - first + 1) as usize];
        for (x, y) in verts {
            let t = &mut tops[(x - first) as usize];
            *t = (*t).max(y);
        }
        Frontier { first, tops }
    }

    fn above(&self, x: i64, y: i64) -> bool {
        if x < self.first {
            return false;
        }
        match self.tops.get((x - self.first) as usize) {
            Some(&top) => y > top,
            None => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Bulk,
    Left,
    Right,
}

/// A local update of the frontier labels at 0-based position `pos`
/// (for bulk moves, positions `pos` and `pos + 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub kind: VertexKind,
    pub pos: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScheduledVertex {
    pub x: i64,
    pub y: i64,
    pub kind: VertexKind,
    pub pos: usize,
}

impl ScheduledVertex {
    pub fn as_move(&self) -> Move {
        Move { kind: self.kind, pos: self.pos }
    }
}

/// Vertices between `p` and a path `q` above it, in row-then-column order.
pub fn update_schedule(p: &DownRightPath, q: &DownRightPath) -> Result<Vec<ScheduledVertex>> {
    let n = p.width();
    if q.width() != n {
        return Err(Error::PathOrder("paths of different widths".into()));
    }
    let pv = p.vertices();
    let qv = q.vertices();
    let x_lo = pv[0].0.min(qv[0].0);
    let x_hi = pv[n].0.max(qv[n].0) + 1;
    let (pf, qf) = (Frontier::of(p), Frontier::of(q));
    let mut region = BTreeSet::new();
    for x in x_lo..=x_hi {
        for y in (x - n as i64)..=x {
            let above_p = pf.above(x, y);
            let above_q = qf.above(x, y);
            if above_q && !above_p {
                return Err(Error::PathOrder(format!("({x},{y}) lies above the target but not above the source")));
            }
            if above_p && !above_q {
                region.insert((y, x));
            }
        }
    }
    let mut cur = p.clone();
    let mut out = Vec::with_capacity(region.len());
    for (y, x) in region {
        let v = cur.vertices();
        let sv = if x == y {
            if cur.steps[0] != Step::Right || (cur.anchor + 1, cur.anchor + 1) != (x, y) {
                return Err(Error::PathOrder(format!("left boundary vertex ({x},{y}) not ready")));
            }
            cur.steps[0] = Step::Down;
            cur.anchor += 1;
            ScheduledVertex { x, y, kind: VertexKind::Left, pos: 0 }
        } else if x == y + n as i64 {
            if cur.steps[n - 1] != Step::Down || v[n] != (x - 1, y - 1) {
                return Err(Error::PathOrder(format!("right boundary vertex ({x},{y}) not ready")));
            }
            cur.steps[n - 1] = Step::Right;
            ScheduledVertex { x, y, kind: VertexKind::Right, pos: n - 1 }
        } else {
            let i = (1..n)
                .find(|&i| v[i] == (x - 1, y - 1) && cur.steps[i - 1] == Step::Down && cur.steps[i] == Step::Right)
                .ok_or_else(|| Error::PathOrder(format!("bulk vertex ({x},{y}) not ready")))?;
            cur.steps[i - 1] = Step::Right;
            cur.steps[i] = Step::Down;
            ScheduledVertex { x, y, kind: VertexKind::Bulk, pos: i - 1 }
        };
        out.push(sv);
    }
    if cur != *q {
        return Err(Error::PathOrder("updates do not reach the target path".into()));
    }
    Ok(out)
}

/// Moves of one time step `P -> P + (1,1)`.
pub fn one_step_moves(path: &DownRightPath) -> Result<Vec<Move>> {
    Ok(update_schedule(path, &path.translate(1))?.iter().map(ScheduledVertex::as_move).collect())
}

pub fn state_count(n: usize, spin: usize) -> usize {
    (spin + 1).pow(n as u32)
}

pub fn config_index(tau: &[usize], spin: usize) -> usize {
    tau.iter().fold(0, |acc, &t| acc * (spin + 1) + t)
}

pub fn config_from_index(mut idx: usize, n: usize, spin: usize) -> Vec<usize> {
    let mut tau = vec![0; n];
    for slot in tau.iter_mut().rev() {
        *slot = idx % (spin + 1);
        idx /= spin + 1;
    }
    tau
}

/// Outcome distribution of a single move given the current frontier occupation.
fn local_outcomes(mv: Move, tau: &[usize], w: &FusedWeights) -> Vec<(usize, usize, f64)> {
    let m = w.spin + 1;
    let mut out = Vec::new();
    match mv.kind {
        VertexKind::Bulk => {
            let (b, a) = (tau[mv.pos], tau[mv.pos + 1]);
            for c in 0..m {
                for d in 0..m {
                    let p = *w.r.get(a, b, c, d);
                    if p != 0.0 {
                        out.push((c, d, p));
                    }
                }
            }
        }
        VertexKind::Left => {
            for d in 0..m {
                let p = *w.left.get(tau[mv.pos], d);
                if p != 0.0 {
                    out.push((d, 0, p));
                }
            }
        }
        VertexKind::Right => {
            for c in 0..m {
                let p = *w.right.get(tau[mv.pos], c);
                if p != 0.0 {
                    out.push((c, 0, p));
                }
            }
        }
    }
    out
}

fn write_outcome(mv: Move, tau: &mut [usize], first: usize, second: usize) {
    tau[mv.pos] = first;
    if mv.kind == VertexKind::Bulk {
        tau[mv.pos + 1] = second;
    }
}

/// Row-stochastic matrix on configurations of a fixed width.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    pub width: usize,
    pub spin: usize,
    pub matrix: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn states(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.matrix.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        (&self.matrix - &other.matrix).amax()
    }
}

/// Composes the kernels of `moves` into a transition matrix.
pub fn compose_moves(moves: &[Move], n: usize, w: &FusedWeights, cap: usize) -> Result<TransitionMatrix> {
    let spin = w.spin;
    let states = state_count(n, spin);
    if states > cap {
        return Err(Error::StateSpaceTooLarge { states, cap });
    }
    let mut acc = DMatrix::<f64>::identity(states, states);
    let configs: Vec<Vec<usize>> = (0..states).map(|i| config_from_index(i, n, spin)).collect();
    let mut kernel: Vec<Vec<(usize, f64)>> = vec![Vec::new(); states];
    for &mv in moves {
        for (src, tau) in configs.iter().enumerate() {
            let row = &mut kernel[src];
            row.clear();
            let mut t = tau.clone();
            for (first, second, p) in local_outcomes(mv, tau, w) {
                write_outcome(mv, &mut t, first, second);
                row.push((config_index(&t, spin), p));
            }
        }
        let mut next = DMatrix::<f64>::zeros(states, states);
        for src in 0..states {
            for (dst, p) in &kernel[src] {
                let col = acc.column(src).clone_owned();
                let mut target = next.column_mut(*dst);
                target.axpy(*p, &col, 1.0);
            }
        }
        acc = next;
    }
    Ok(TransitionMatrix { width: n, spin, matrix: acc })
}

/// Exact one-step matrix `P -> P + (1,1)`.
pub fn step_transition_matrix(path: &DownRightPath, w: &FusedWeights) -> Result<TransitionMatrix> {
    step_transition_matrix_capped(path, w, DEFAULT_STATE_CAP)
}

pub fn step_transition_matrix_capped(path: &DownRightPath, w: &FusedWeights, cap: usize) -> Result<TransitionMatrix> {
    compose_moves(&one_step_moves(path)?, path.width(), w, cap)
}

/// Samples the moves in order, updating `tau` in place.
pub fn sample_moves<R: Rng + ?Sized>(tau: &mut [usize], moves: &[Move], w: &FusedWeights, rng: &mut R) {
    for &mv in moves {
        let outcomes = local_outcomes(mv, tau, w);
        let mut r: f64 = rng.random();
        let mut chosen = outcomes[outcomes.len() - 1];
        for o in &outcomes {
            if r < o.2 {
                chosen = *o;
                break;
            }
            r -= o.2;
        }
        write_outcome(mv, tau, chosen.0, chosen.1);
    }
}

/// One random time step of the chain on `path`.
///
/// Rebuilds the schedule on every call; long runs should reuse [`one_step_moves`] with [`sample_moves`].
pub fn sample_step<R: Rng + ?Sized>(tau: &mut [usize], path: &DownRightPath, w: &FusedWeights, rng: &mut R) -> Result<()> {
    let moves = one_step_moves(path)?;
    sample_moves(tau, &moves, w, rng);
    Ok(())
}

/// Seeded stream for chain `chain_id`.
pub fn chain_rng(seed: u64, chain_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain_id);
    rng
}

fn strongly_connected(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { m[(i, j)] } else { m[(j, i)] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// `|mu T - mu|_1`.
pub fn stationarity_residual(t: &TransitionMatrix, mu: &[f64]) -> f64 {
    let v = DMatrix::from_row_slice(1, mu.len(), mu);
    let next = &v * &t.matrix;
    (next - v).iter().map(|x| x.abs()).sum()
}

/// Unique stationary vector of an irreducible chain.
pub fn stationary_exact(t: &TransitionMatrix) -> Result<Vec<f64>> {
    stationary_exact_with(t, 1e-13, 1_000_000)
}

pub fn stationary_exact_with(t: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = t.states();
    if !strongly_connected(&t.matrix) {
        return Err(Error::NotIrreducible);
    }
    let tt = t.matrix.transpose();
    let mut mu = nalgebra::DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..max_iter {
        let mut next = &tt * &mu;
        let s = next.sum();
        next /= s;
        let res: f64 = (&next - &mu).iter().map(|x| x.abs()).sum();
        mu = next;
        if res < tol {
            return Ok(mu.iter().copied().collect());
        }
    }
    let mut a = tt - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let sol = a.lu().solve(&rhs).ok_or_else(|| Error::NoConvergence("singular stationary system".into()))?;
    let out: Vec<f64> = sol.iter().copied().collect();
    if stationarity_residual(t, &out) < tol * 10.0 {
        Ok(out)
    } else {
        Err(Error::NoConvergence("power iteration and direct solve both failed".into()))
    }
}

/// `E[(1/N) sum_i tau_i]` under `dist`.
pub fn mean_density(dist: &[f64], n: usize, spin: usize) -> f64 {
    dist.iter()
        .enumerate()
        .map(|(i, p)| p * config_from_index(i, n, spin).iter().sum::<usize>() as f64)
        .sum::<f64>()
        / n as f64
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Dense operator of a local map on sites `sites` of `(C^{I+1})^{⊗N}`.
fn embed(local: &DMatrix<f64>, first_site: usize, sites: usize, n: usize, m: usize) -> DMatrix<f64> {
    let left = DMatrix::<f64>::identity(m.pow(first_site as u32), m.pow(first_site as u32));
    let rest = n - first_site - sites;
    let right = DMatrix::<f64>::identity(m.pow(rest as u32), m.pow(rest as u32));
    left.kronecker(local).kronecker(&right)
}

/// The two-step transfer matrix `U^e U^o` on odd width `n`, returned row-stochastic.
pub fn floquet_transfer(w: &FusedWeights, n: usize) -> Result<TransitionMatrix> {
    floquet_transfer_capped(w, n, DEFAULT_STATE_CAP)
}

pub fn floquet_transfer_capped(w: &FusedWeights, n: usize, cap: usize) -> Result<TransitionMatrix> {
    if n.is_multiple_of(2) {
        return Err(Error::EvenWidth(n));
    }
    let m = w.spin + 1;
    let states = state_count(n, w.spin);
    if states > cap {
        return Err(Error::StateSpaceTooLarge { states, cap });
    }
    // U = R P in column convention: U[(c,d)][(x,y)] = R^{c,d}_{y,x}.
    let mut u = DMatrix::<f64>::zeros(m * m, m * m);
    for x in 0..m {
        for y in 0..m {
            for c in 0..m {
                for d in 0..m {
                    u[(c * m + d, x * m + y)] = *w.r.get(y, x, c, d);
                }
            }
        }
    }
    let mut b = DMatrix::<f64>::zeros(m, m);
    let mut bbar = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for o in 0..m {
            b[(o, i)] = *w.left.get(i, o);
            bbar[(o, i)] = *w.right.get(i, o);
        }
    }
    let mut odd = embed(&bbar, n - 1, 1, n, m);
    for k in (0..n - 1).step_by(2) {
        odd = embed(&u, k, 2, n, m) * odd;
    }
    let mut even = DMatrix::<f64>::identity(states, states);
    for k in (1..n - 1).step_by(2) {
        even = embed(&u, k, 2, n, m) * even;
    }
    even = embed(&b, 0, 1, n, m) * even;
    let col = even * odd;
    Ok(TransitionMatrix { width: n, spin: w.spin, matrix: col.transpose() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalRun {
    pub seed: u64,
    pub chain_id: u64,
    pub steps: usize,
    pub burn_in: usize,
    /// Visit counts per configuration, when the state space is within the cap.
    pub histogram: Option<Vec<u64>>,
    /// Running mean of the density after each recorded step.
    pub density_trace: Vec<f64>,
}

impl EmpiricalRun {
    pub fn distribution(&self) -> Option<Vec<f64>> {
        self.histogram.as_ref().map(|h| {
            let total: u64 = h.iter().sum();
            h.iter().map(|&c| c as f64 / total as f64).collect()
        })
    }

    pub fn mean_density(&self) -> f64 {
        self.density_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// Runs a seeded chain from the empty configuration.
pub fn empirical_run(
    path: &DownRightPath,
    w: &FusedWeights,
    steps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<EmpiricalRun> {
    empirical_run_chain(path, w, steps, burn_in, seed, 0)
}

pub fn empirical_run_chain(
    path: &DownRightPath,
    w: &FusedWeights,
    steps: usize,
    burn_in: usize,
    seed: u64,
    chain_id: u64,
) -> Result<EmpiricalRun> {
    if steps == 0 {
        return Err(Error::EmptyRun);
    }
    let n = path.width();
    let moves = one_step_moves(path)?;
    let mut rng = chain_rng(seed, chain_id);
    let mut tau = vec![0usize; n];
    for _ in 0..burn_in {
        sample_moves(&mut tau, &moves, w, &mut rng);
    }
    let states = (w.spin as f64 + 1.0).powi(n as i32);
    let mut histogram = (states <= DEFAULT_STATE_CAP as f64).then(|| vec![0u64; state_count(n, w.spin)]);
    let mut trace = Vec::with_capacity(steps);
    let mut total = 0usize;
    for k in 0..steps {
        sample_moves(&mut tau, &moves, w, &mut rng);
        if let Some(h) = histogram.as_mut() {
            h[config_index(&tau, w.spin)] += 1;
        }
        total += tau.iter().sum::<usize>();
        trace.push(total as f64 / ((k + 1) * n) as f64);
    }
    Ok(EmpiricalRun { seed, chain_id, steps, burn_in, histogram, density_trace: trace })
}

/// Independent chains `0..chains` run on separate threads.
pub fn empirical_runs_parallel(
    path: &DownRightPath,
    w: &FusedWeights,
    steps: usize,
    burn_in: usize,
    seed: u64,
    chains: u64,
) -> Result<Vec<EmpiricalRun>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains)
            .map(|c| scope.spawn(move || empirical_run_chain(path, w, steps, burn_in, seed, c)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    })
}
