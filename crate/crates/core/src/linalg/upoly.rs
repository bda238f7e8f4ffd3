use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Univariate polynomial, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq)]
pub struct UPoly<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> UPoly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UPoly { coeffs }
    }

    pub fn zero() -> Self {
        UPoly { coeffs: vec![] }
    }

    pub fn one() -> Self {
        UPoly { coeffs: vec![T::one()] }
    }

    /// `x - r`
    pub fn linear_root(r: T) -> Self {
        UPoly::new(vec![-r, T::one()])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().cloned().unwrap_or_else(T::zero)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let c = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).cloned().unwrap_or_else(T::zero);
                let b = rhs.coeffs.get(i).cloned().unwrap_or_else(T::zero);
                a + b
            })
            .collect();
        UPoly::new(c)
    }

    pub fn scale(&self, s: &T) -> Self {
        UPoly::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(&-T::one()))
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return UPoly::zero();
        }
        let mut c = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                c[i + j] = c[i + j].clone() + a.clone() * b.clone();
            }
        }
        UPoly::new(c)
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(UPoly::one(), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> Self {
        UPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.clone() * T::from_i64(i as i64))
                .collect(),
        )
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = T::one() / self.leading();
        self.scale(&inv)
    }

    /// Polynomial long division. Panics on a zero divisor.
    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut rem = self.coeffs.clone();
        let dl = d.leading();
        let dd = d.degree();
        if self.coeffs.len() < d.coeffs.len() {
            return (UPoly::zero(), self.clone());
        }
        let mut quot = vec![T::zero(); self.coeffs.len() - d.coeffs.len() + 1];
        for k in (0..quot.len()).rev() {
            let c = rem[k + dd].clone() / dl.clone();
            if c.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k + j] = rem[k + j].clone() - c.clone() * dc.clone();
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (UPoly::new(quot), UPoly::new(rem))
    }

    /// Monic gcd; meaningful for exact scalars.
    pub fn gcd(&self, rhs: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), rhs.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `p / gcd(p, p')`, the product of the distinct irreducible factors.
    pub fn squarefree_part(&self) -> Self {
        let g = self.gcd(&self.derivative());
        self.divrem(&g).0.monic()
    }

    pub fn eval(&self, x: &T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn eval_matrix(&self, m: &Matrix<T>) -> Matrix<T> {
        let n = m.rows();
        let mut acc = Matrix::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(m).add(&Matrix::identity(n).scale(c));
        }
        acc
    }

    /// Multiplicity of `d` as a factor (d must be non-constant).
    pub fn multiplicity_of(&self, d: &Self) -> usize {
        let mut p = self.clone();
        let mut k = 0;
        while !p.is_zero() {
            let (q, r) = p.divrem(d);
            if !r.is_zero() {
                break;
            }
            p = q;
            k += 1;
        }
        k
    }

    pub fn to_f64(&self) -> UPoly<f64> {
        UPoly::new(self.coeffs.iter().map(|c| c.to_f64()).collect())
    }
}

/// Characteristic polynomial `det(xI - A)` via Faddeev-LeVerrier.
pub fn char_poly<T: Scalar>(a: &Matrix<T>) -> UPoly<T> {
    let n = a.rows();
    assert!(a.is_square());
    let mut c = vec![T::zero(); n + 1];
    c[n] = T::one();
    let mut m = Matrix::<T>::zeros(n, n);
    for k in 1..=n {
        m = a.mul(&m).add(&Matrix::identity(n).scale(&c[n - k + 1]));
        let am = a.mul(&m);
        c[n - k] = -am.trace() / T::from_i64(k as i64);
    }
    UPoly::new(c)
}
