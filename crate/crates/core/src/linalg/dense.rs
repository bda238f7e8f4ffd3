//! Floating-point kernels backed by nalgebra: SVD ranks, least squares and
//! the reorderable real Schur form.

use nalgebra::DMatrix;

use crate::linalg::Matrix;

pub fn to_na(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix<f64> {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Singular value decomposition with a square, complete right factor.
pub struct FullSvd {
    pub u: Matrix<f64>,
    /// Descending.
    pub sigma: Vec<f64>,
    /// Columns are right singular vectors; always `cols x cols`.
    pub v: Matrix<f64>,
}

pub fn svd(m: &Matrix<f64>) -> FullSvd {
    let (r, c) = m.shape();
    let n = r.max(c).max(1);
    // pad to square so both factors are complete
    let padded = DMatrix::from_fn(n, n, |i, j| if i < r && j < c { m[(i, j)] } else { 0.0 });
    let mut s = nalgebra::SVD::new(padded, true, true);
    s.sort_by_singular_values();
    let u = s.u.as_ref().expect("u requested");
    let vt = s.v_t.as_ref().expect("v requested");
    let k = r.min(c);
    FullSvd {
        u: Matrix::from_fn(r, k, |i, j| u[(i, j)]),
        sigma: s.singular_values.iter().take(k).copied().collect(),
        v: Matrix::from_fn(c, c, |i, j| vt[(j, i)]),
    }
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn numerical_rank(m: &Matrix<f64>, rel_tol: f64) -> usize {
    let s = svd(m);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.sigma.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Orthonormal basis of the column space.
pub fn orth(m: &Matrix<f64>, rel_tol: f64) -> Matrix<f64> {
    let s = svd(m);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let r = s.sigma.iter().filter(|&&x| smax > 0.0 && x > rel_tol * smax).count();
    s.u.select_cols(&(0..r).collect::<Vec<_>>())
}

/// Orthonormal basis of the null space.
pub fn null_space(m: &Matrix<f64>, rel_tol: f64) -> Matrix<f64> {
    let s = svd(m);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let r = s.sigma.iter().filter(|&&x| smax > 0.0 && x > rel_tol * smax).count();
    s.v.select_cols(&(r..m.cols()).collect::<Vec<_>>())
}

pub fn pinv(m: &Matrix<f64>, rel_tol: f64) -> Matrix<f64> {
    let s = svd(m);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let mut out = Matrix::zeros(m.cols(), m.rows());
    for (k, &sig) in s.sigma.iter().enumerate() {
        if smax == 0.0 || sig <= rel_tol * smax {
            continue;
        }
        for i in 0..m.cols() {
            for j in 0..m.rows() {
                out[(i, j)] += s.v[(i, k)] * s.u[(j, k)] / sig;
            }
        }
    }
    out
}

/// Least-squares solution of `a x = b` and the residual max-norm.
pub fn lstsq(a: &Matrix<f64>, b: &Matrix<f64>) -> (Matrix<f64>, f64) {
    let x = pinv(a, 1e-13).mul(b);
    let res = a.mul(&x).sub(b).max_abs();
    (x, res)
}

/// 2-norm condition number.
pub fn cond(m: &Matrix<f64>) -> f64 {
    let s = svd(m);
    match (s.sigma.first(), s.sigma.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// nalgebra's QR iteration can stall on highly derogatory matrices (a
/// repeated semisimple eigenvalue); on stalling, restart from an orthogonal
/// similarity `H A H` with a fixed Householder reflection `H`.
fn schur_with_restarts(a: &Matrix<f64>) -> (Matrix<f64>, Matrix<f64>) {
    let n = a.rows();
    let max_iter = 200 * n.max(1);
    let na = to_na(a);
    if let Some(s) = nalgebra::Schur::try_new(na.clone(), f64::EPSILON, max_iter) {
        let (q, t) = s.unpack();
        return (from_na(&q), from_na(&t));
    }
    for k in 1..=8 {
        let v = DMatrix::from_fn(n, 1, |i, _| ((i * k + 1) as f64).sqrt() * if (i + k) % 3 == 0 { -1.0 } else { 1.0 });
        let h = DMatrix::identity(n, n) - &v * v.transpose() * (2.0 / v.norm_squared());
        let b = &h * &na * &h;
        if let Some(s) = nalgebra::Schur::try_new(b, f64::EPSILON, max_iter) {
            let (q, t) = s.unpack();
            return (from_na(&(&h * q)), from_na(&t));
        }
    }
    let (q, t) = nalgebra::Schur::new(na).unpack();
    (from_na(&q), from_na(&t))
}

/// Real Schur form `A = Z T Z^T` with 1x1 and 2x2 diagonal blocks.
#[derive(Clone, Debug)]
pub struct RealSchur {
    pub z: Matrix<f64>,
    pub t: Matrix<f64>,
    /// (start, size) of each diagonal block.
    pub blocks: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eig {
    pub re: f64,
    pub im: f64,
}

impl RealSchur {
    pub fn new(a: &Matrix<f64>) -> RealSchur {
        let n = a.rows();
        if n == 0 {
            return RealSchur { z: Matrix::zeros(0, 0), t: Matrix::zeros(0, 0), blocks: vec![] };
        }
        let (z, t) = schur_with_restarts(a);
        let mut s = RealSchur { z, t, blocks: vec![] };
        s.standardize();
        s
    }

    fn standardize(&mut self) {
        let n = self.t.rows();
        let scale = self.t.max_abs().max(f64::MIN_POSITIVE);
        let mut i = 0;
        self.blocks.clear();
        while i < n {
            if i + 1 < n && self.t[(i + 1, i)].abs() > 1e-15 * scale {
                let (a, b, c, d) =
                    (self.t[(i, i)], self.t[(i, i + 1)], self.t[(i + 1, i)], self.t[(i + 1, i + 1)]);
                let half = 0.5 * (a - d);
                let disc = half * half + b * c;
                if disc >= 0.0 {
                    // real pair left coupled: rotate to upper triangular
                    let l1 = 0.5 * (a + d) + disc.sqrt() * if half >= 0.0 { 1.0 } else { -1.0 };
                    let (mut x, mut y) = (l1 - d, c);
                    if x.abs() + y.abs() < 1e-300 {
                        x = b;
                        y = l1 - a;
                    }
                    let r = x.hypot(y);
                    let (cs, sn) = (x / r, y / r);
                    let g = Matrix::from_rows(vec![vec![cs, -sn], vec![sn, cs]]);
                    self.apply_local(i, &g);
                    self.t[(i + 1, i)] = 0.0;
                    self.blocks.push((i, 1));
                    i += 1;
                    continue;
                }
                self.blocks.push((i, 2));
                i += 2;
            } else {
                if i + 1 < n {
                    self.t[(i + 1, i)] = 0.0;
                }
                self.blocks.push((i, 1));
                i += 1;
            }
        }
    }

    /// `T <- G^T T G`, `Z <- Z G` for an orthogonal `G` acting on rows and
    /// columns `k..k+g.rows()`.
    fn apply_local(&mut self, k: usize, g: &Matrix<f64>) {
        let n = self.t.rows();
        let m = g.rows();
        for j in 0..n {
            let col: Vec<f64> = (0..m).map(|r| self.t[(k + r, j)]).collect();
            for r in 0..m {
                self.t[(k + r, j)] = (0..m).map(|s| g[(s, r)] * col[s]).sum();
            }
        }
        for i in 0..n {
            let row: Vec<f64> = (0..m).map(|c| self.t[(i, k + c)]).collect();
            for c in 0..m {
                self.t[(i, k + c)] = (0..m).map(|s| row[s] * g[(s, c)]).sum();
            }
        }
        for i in 0..n {
            let row: Vec<f64> = (0..m).map(|c| self.z[(i, k + c)]).collect();
            for c in 0..m {
                self.z[(i, k + c)] = (0..m).map(|s| row[s] * g[(s, c)]).sum();
            }
        }
    }

    pub fn block_eig(&self, b: usize) -> Eig {
        let (i, size) = self.blocks[b];
        if size == 1 {
            return Eig { re: self.t[(i, i)], im: 0.0 };
        }
        let (a, bb, c, d) = (self.t[(i, i)], self.t[(i, i + 1)], self.t[(i + 1, i)], self.t[(i + 1, i + 1)]);
        let half = 0.5 * (a - d);
        let disc = half * half + bb * c;
        Eig { re: 0.5 * (a + d), im: (-disc).max(0.0).sqrt() }
    }

    /// Eigenvalues in block order; complex pairs listed as `+im` then `-im`.
    pub fn eigenvalues(&self) -> Vec<Eig> {
        let mut out = Vec::new();
        for b in 0..self.blocks.len() {
            let e = self.block_eig(b);
            out.push(e);
            if self.blocks[b].1 == 2 {
                out.push(Eig { re: e.re, im: -e.im });
            }
        }
        out
    }

    /// Swaps the adjacent blocks `b` and `b+1`. Returns false when the
    /// swap would lose accuracy.
    fn swap_blocks(&mut self, b: usize) -> bool {
        let (k, p) = self.blocks[b];
        let (_, q) = self.blocks[b + 1];
        let a = self.t.block(k, k, p, p);
        let bm = self.t.block(k + p, k + p, q, q);
        let c = self.t.block(k, k + p, p, q);
        // A X - X B = -C in column-major vec form
        let pq = p * q;
        let mut sys = DMatrix::<f64>::zeros(pq, pq);
        let mut rhs = nalgebra::DVector::<f64>::zeros(pq);
        for j in 0..q {
            for i in 0..p {
                let row = j * p + i;
                rhs[row] = -c[(i, j)];
                for l in 0..p {
                    sys[(row, j * p + l)] += a[(i, l)];
                }
                for l in 0..q {
                    sys[(row, l * p + i)] -= bm[(l, j)];
                }
            }
        }
        let Some(sol) = sys.lu().solve(&rhs) else {
            return false;
        };
        let m = p + q;
        let mut basis = DMatrix::<f64>::zeros(m, m);
        for j in 0..q {
            for i in 0..p {
                basis[(i, j)] = sol[j * p + i];
            }
            basis[(p + j, j)] = 1.0;
        }
        for i in 0..p {
            basis[(i, q + i)] = 1.0;
        }
        let qmat = from_na(&nalgebra::QR::new(basis).q());
        self.apply_local(k, &qmat);
        let scale = self.t.max_abs().max(f64::MIN_POSITIVE);
        let mut leak: f64 = 0.0;
        for i in k + q..k + m {
            for j in k..k + q {
                leak = leak.max(self.t[(i, j)].abs());
                self.t[(i, j)] = 0.0;
            }
        }
        self.blocks[b] = (k, q);
        self.blocks[b + 1] = (k + q, p);
        leak <= 1e-10 * scale
    }

    /// Moves every block whose eigenvalue satisfies `select` to the
    /// leading position; returns the dimension of the leading invariant
    /// subspace, or `None` if a swap was ill-conditioned.
    pub fn reorder(&mut self, select: impl Fn(Eig) -> bool) -> Option<usize> {
        let flags: Vec<bool> = (0..self.blocks.len()).map(|b| select(self.block_eig(b))).collect();
        let mut flags = flags;
        let mut slot = 0;
        for b in 0..self.blocks.len() {
            if !flags[b] {
                continue;
            }
            let mut cur = b;
            while cur > slot {
                if !self.swap_blocks(cur - 1) {
                    return None;
                }
                flags.swap(cur - 1, cur);
                cur -= 1;
            }
            slot += 1;
        }
        Some(self.blocks.iter().zip(&flags).filter(|(_, &f)| f).map(|(b, _)| b.1).sum())
    }

    /// Orthonormal basis of the span of the first `k` Schur vectors.
    pub fn leading_basis(&self, k: usize) -> Matrix<f64> {
        self.z.select_cols(&(0..k).collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix<f64> {
        // eigenvalues 1, 2 and the pair 0.5 +- i
        let d = Matrix::from_rows(vec![
            vec![1.0, 0.3, 0.1, 0.2],
            vec![0.0, 0.5, 1.0, 0.4],
            vec![0.0, -1.0, 0.5, 0.7],
            vec![0.0, 0.0, 0.0, 2.0],
        ]);
        let p = Matrix::from_rows(vec![
            vec![1.0, 2.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.0, 2.0],
        ]);
        let pi = crate::linalg::Matrix::inverse(&p, 1e-14).unwrap();
        p.mul(&d).mul(&pi)
    }

    #[test]
    fn reorder_yields_invariant_subspace() {
        let a = sample();
        for target in [1.0, 2.0, 0.5] {
            let mut s = RealSchur::new(&a);
            let k = s.reorder(|e| (e.re - target).abs() < 1e-6).unwrap();
            let v = s.leading_basis(k);
            // invariance: A V = V (V^T A V)
            let av = a.mul(&v);
            let h = v.transpose().mul(&av);
            assert!(av.sub(&v.mul(&h)).max_abs() < 1e-10);
            let expect = if target == 0.5 { 2 } else { 1 };
            assert_eq!(k, expect);
            // reconstruction still holds
            assert!(s.z.mul(&s.t).mul(&s.z.transpose()).sub(&a).max_abs() < 1e-10);
        }
    }

    #[test]
    fn svd_null_space_is_complete() {
        let m = Matrix::from_rows(vec![vec![1.0, 1.0, 0.0]]);
        let n = null_space(&m, 1e-12);
        assert_eq!(n.cols(), 2);
        assert!(m.mul(&n).max_abs() < 1e-14);
    }
}
