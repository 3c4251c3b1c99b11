//! Small dense matrices over a generic [`Scalar`], with local operator
//! application on tensor products of qubit-like legs.

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let data: Vec<S> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), r * c, "ragged rows");
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out: Mat<S> = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if *a == S::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if *b == S::zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> Mat<S> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// Kronecker product, `self` on the slow index.
    pub fn kron(&self, other: &Mat<S>) -> Mat<S> {
        let mut out = Mat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if *a == S::zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, a.clone() * other.get(k, l).clone());
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Mat<S>) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn to_f64(&self) -> Mat<f64> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(Scalar::to_f64).collect() }
    }
}

/// Bit of `leg` (0-based, leg 0 slowest) in a flattened index over `n` binary legs.
#[inline]
fn bit(index: usize, leg: usize, n: usize) -> usize {
    (index >> (n - 1 - leg)) & 1
}

#[inline]
fn with_bit(index: usize, leg: usize, n: usize, value: usize) -> usize {
    let shift = n - 1 - leg;
    (index & !(1 << shift)) | (value << shift)
}

/// Left-multiplies `target` (rows indexed by `n` binary legs) by `op` acting on `legs`.
///
/// `op` is `2^k x 2^k` with row-major flattening over `legs` in the given order.
pub fn apply_local<S: Scalar>(op: &Mat<S>, legs: &[usize], n: usize, target: &Mat<S>) -> Mat<S> {
    let k = legs.len();
    assert_eq!(op.rows(), 1 << k);
    assert_eq!(target.rows(), 1 << n);
    let mut out: Mat<S> = Mat::zeros(target.rows(), target.cols());
    for row in 0..target.rows() {
        let mut local_out = 0;
        for &l in legs {
            local_out = (local_out << 1) | bit(row, l, n);
        }
        for local_in in 0..(1 << k) {
            let w = op.get(local_out, local_in);
            if *w == S::zero() {
                continue;
            }
            let mut src = row;
            for (pos, &l) in legs.iter().enumerate() {
                src = with_bit(src, l, n, (local_in >> (k - 1 - pos)) & 1);
            }
            for c in 0..target.cols() {
                let t = target.get(src, c);
                if *t == S::zero() {
                    continue;
                }
                let idx = row * out.cols + c;
                out.data[idx] = out.data[idx].clone() + w.clone() * t.clone();
            }
        }
    }
    out
}

/// Applies the leg permutation sending leg `i` to position `perm[i]`.
pub fn apply_leg_permutation<S: Scalar>(perm: &[usize], target: &Mat<S>) -> Mat<S> {
    let n = perm.len();
    let mut out: Mat<S> = Mat::zeros(target.rows(), target.cols());
    for src in 0..target.rows() {
        let mut dst = 0;
        for (i, &p) in perm.iter().enumerate() {
            dst = with_bit(dst, p, n, bit(src, i, n));
        }
        for c in 0..target.cols() {
            out.set(dst, c, target.get(src, c).clone());
        }
    }
    out
}

/// Swap of two tensor factors of dimension `dim` each.
pub fn swap_matrix<S: Scalar>(dim: usize) -> Mat<S> {
    let mut p = Mat::zeros(dim * dim, dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            p.set(b * dim + a, a * dim + b, S::one());
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_matches_kron() {
        let op = Mat::from_rows(vec![
            vec![1.0, 2.0, 0.0, 0.5],
            vec![0.0, 1.0, 3.0, 0.0],
            vec![4.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.25, 0.0, 1.0],
        ]);
        let id2 = Mat::<f64>::identity(2);
        let full = op.kron(&id2);
        let target = Mat::identity(8);
        assert_eq!(apply_local(&op, &[0, 1], 3, &target), full);
        let full_b = id2.kron(&op);
        assert_eq!(apply_local(&op, &[1, 2], 3, &target), full_b);
    }

    #[test]
    fn reversed_legs_conjugate_by_swap() {
        let op = Mat::from_rows(vec![
            vec![1.0, 2.0, 0.0, 0.5],
            vec![0.0, 1.0, 3.0, 0.0],
            vec![4.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.25, 0.0, 1.0],
        ]);
        let p = swap_matrix::<f64>(2);
        let expected = p.mul(&op).mul(&p);
        assert_eq!(apply_local(&op, &[1, 0], 2, &Mat::identity(4)), expected);
    }

    #[test]
    fn permutation_swap() {
        let p = apply_leg_permutation(&[1, 0], &Mat::<f64>::identity(4));
        assert_eq!(p, swap_matrix(2));
    }
}
