//! Graded spaces `P^k(E)` of homogeneous vector fields of polynomial
//! degree `k + 1`, the operators `ad_L` on them, the homological equation
//! and Lie transforms.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::linalg::{dense, Matrix};
use crate::poly::{Monomial, Poly, PolyMap};
use crate::scalar::Scalar;

/// Largest basis size accepted by [`hom_basis`].
pub const MAX_BASIS: usize = 20_000;
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyFieldError {
    #[error("P^{grade} in dimension {n} has {size} basis fields, above the cap {cap}")]
    SizeOverflow { n: usize, grade: usize, size: usize, cap: usize },
    #[error("singular value {sigma:e} is too close to the rank threshold")]
    RankAmbiguous { sigma: f64 },
    #[error("homological equation at grade {grade} is singular (residual {residual:e})")]
    SolveFailed { grade: usize, residual: f64 },
}

/// Basis of `P^k(E)`: monomials of degree `k + 1` (graded-lex) times unit
/// vectors, monomial-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomBasis {
    pub n: usize,
    pub grade: usize,
    pub monomials: Vec<Monomial>,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

pub fn hom_basis(n: usize, grade: usize) -> Result<HomBasis, PolyFieldError> {
    let size = n.saturating_mul(binomial(n + grade, grade + 1));
    if size > MAX_BASIS {
        return Err(PolyFieldError::SizeOverflow { n, grade, size, cap: MAX_BASIS });
    }
    Ok(HomBasis { n, grade, monomials: Monomial::of_degree(n, grade as u32 + 1) })
}

impl HomBasis {
    pub fn len(&self) -> usize {
        self.n * self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn degree(&self) -> u32 {
        self.grade as u32 + 1
    }

    pub fn element<T: Scalar>(&self, j: usize) -> PolyMap<T> {
        let (m, i) = (j / self.n, j % self.n);
        let mut outputs = vec![Poly::zero(self.n); self.n];
        outputs[i] = Poly::monomial(self.monomials[m].clone(), T::one());
        PolyMap::new(self.n, 0, outputs)
    }

    /// Coordinates of the degree `k + 1` part of `f` (parameters ignored).
    pub fn coords<T: Scalar>(&self, f: &PolyMap<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.len()];
        for (m, mono) in self.monomials.iter().enumerate() {
            let mut e = mono.0.clone();
            e.resize(f.nvars(), 0);
            let key = Monomial(e);
            for i in 0..self.n {
                out[m * self.n + i] = f.output(i).coeff(&key);
            }
        }
        out
    }

    pub fn field<T: Scalar>(&self, c: &[T]) -> PolyMap<T> {
        let mut outputs = vec![Poly::zero(self.n); self.n];
        for (m, mono) in self.monomials.iter().enumerate() {
            for (i, out) in outputs.iter_mut().enumerate() {
                let v = &c[m * self.n + i];
                if !v.is_zero() {
                    out.add_term(mono.clone(), v.clone());
                }
            }
        }
        PolyMap::new(self.n, 0, outputs)
    }
}

/// Matrix of `G -> [L x, G] = L G - DG L x` on `P^k`.
pub fn ad_operator_matrix<T: Scalar>(l: &Matrix<T>, grade: usize) -> Result<Matrix<T>, PolyFieldError> {
    let basis = hom_basis(l.rows(), grade)?;
    let lx = PolyMap::linear(l, 0);
    let cols: Vec<Vec<T>> = (0..basis.len()).map(|j| basis.coords(&lx.bracket(&basis.element(j), None).0)).collect();
    Ok(Matrix::from_columns(basis.len(), &cols))
}

/// Memo of ad matrices keyed by a hash of `(L, k)`.
#[derive(Default)]
pub struct AdCache<T> {
    map: RwLock<HashMap<u64, Arc<Matrix<T>>>>,
}

impl<T: Scalar> AdCache<T> {
    pub fn new() -> Self {
        AdCache { map: RwLock::new(HashMap::new()) }
    }

    fn key(l: &Matrix<T>, grade: usize) -> u64 {
        let mut h = DefaultHasher::new();
        (l.rows(), grade).hash(&mut h);
        for row in l.to_rows() {
            for x in row {
                x.to_text().hash(&mut h);
            }
        }
        h.finish()
    }

    pub fn get(&self, l: &Matrix<T>, grade: usize) -> Result<Arc<Matrix<T>>, PolyFieldError> {
        let key = Self::key(l, grade);
        if let Some(m) = self.map.read().expect("cache lock").get(&key) {
            return Ok(m.clone());
        }
        let m = Arc::new(ad_operator_matrix(l, grade)?);
        self.map.write().expect("cache lock").insert(key, m.clone());
        Ok(m)
    }
}

/// `P^k = im ad_{L^S} (+) ker ad_{L^S}` with the projector onto the image
/// along the kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct ImKer<T> {
    pub im: Matrix<T>,
    pub ker: Matrix<T>,
    pub projector: Matrix<T>,
}

pub fn im_ker_split<T: Scalar>(ad_s: &Matrix<T>) -> Result<ImKer<T>, PolyFieldError> {
    let n = ad_s.rows();
    let (im, ker) = if T::EXACT {
        (ad_s.column_space(0.0), ad_s.nullspace(0.0))
    } else {
        let a = ad_s.to_f64();
        let s = dense::svd(&a);
        let smax = s.sigma.first().copied().unwrap_or(0.0);
        if let Some(&sigma) = s.sigma.iter().find(|&&x| x > 1e-2 * RANK_TOL * smax && x < 1e2 * RANK_TOL * smax) {
            return Err(PolyFieldError::RankAmbiguous { sigma });
        }
        let im = dense::orth(&a, RANK_TOL);
        let ker = dense::null_space(&a, RANK_TOL);
        (im.map(|x| T::from_f64(*x)), ker.map(|x| T::from_f64(*x)))
    };
    let full = im.hstack(&ker);
    let r = im.cols();
    let inv = if full.cols() == n { full.inverse(if T::EXACT { 0.0 } else { 1e-12 }) } else { None };
    let Some(inv) = inv else {
        // im and ker fail to be complementary: not semisimple
        return Err(PolyFieldError::RankAmbiguous { sigma: 0.0 });
    };
    let projector = if n == 0 { Matrix::zeros(0, 0) } else { im.mul(&inv.block(0, 0, r, n)) };
    Ok(ImKer { im, ker, projector })
}

/// Homological equation on one grade: the unique `G` in `im ad_{L^S}`
/// with `ad_L G` equal to the image part of `F`, and `F - ad_L G`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomologicalSolution<T> {
    pub generator: Vec<T>,
    pub remainder: Vec<T>,
    /// `|ad_{L^S} remainder|`.
    pub residual: f64,
}

pub fn solve_homological<T: Scalar>(
    ad_l: &Matrix<T>,
    ad_s: &Matrix<T>,
    split: &ImKer<T>,
    f: &[T],
    grade: usize,
) -> Result<HomologicalSolution<T>, PolyFieldError> {
    let n = f.len();
    let fv = Matrix::column_vector(f.to_vec());
    if split.im.cols() == 0 {
        let residual = ad_s.mul(&fv).max_abs();
        return Ok(HomologicalSolution { generator: vec![T::zero(); n], remainder: f.to_vec(), residual });
    }
    let f_im = split.projector.mul(&fv);
    let a = ad_l.mul(&split.im);
    let y = if T::EXACT {
        a.solve(&f_im, 0.0).ok_or(PolyFieldError::SolveFailed { grade, residual: f64::INFINITY })?
    } else {
        let af = a.to_f64();
        if dense::numerical_rank(&af, RANK_TOL) < af.cols() {
            return Err(PolyFieldError::SolveFailed { grade, residual: f64::INFINITY });
        }
        let (y, res) = dense::lstsq(&af, &f_im.to_f64());
        if res > 1e-8 * (1.0 + f_im.max_abs()) {
            return Err(PolyFieldError::SolveFailed { grade, residual: res });
        }
        y.map(|x| T::from_f64(*x))
    };
    let g = split.im.mul(&y);
    let rem = fv.sub(&ad_l.mul(&g));
    let residual = ad_s.mul(&rem).max_abs();
    Ok(HomologicalSolution { generator: g.col(0), remainder: rem.col(0), residual })
}

/// `exp(ad_G) F` truncated at polynomial degree `max_degree`, where
/// `ad_G F = DG F - DF G`. For `G` of grade `k >= 1` this is the
/// pushforward of `F` by the time-one flow of `G`.
pub fn lie_transform<T: Scalar>(f: &PolyMap<T>, g: &PolyMap<T>, max_degree: u32) -> PolyMap<T> {
    if g.is_zero() {
        return f.truncate(max_degree).0;
    }
    let cap = Some(max_degree);
    let mut out = f.truncate(max_degree).0;
    let mut term = out.clone();
    let mut j = 1i64;
    loop {
        let (next, _) = g.bracket(&term, cap);
        term = next.scale(&(T::one() / T::from_i64(j)));
        if term.is_zero() {
            break;
        }
        out = out.add(&term);
        j += 1;
    }
    out
}
