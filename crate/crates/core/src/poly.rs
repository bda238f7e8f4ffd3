//! Sparse multivariate polynomials and polynomial maps.
//!
//! A [`PolyMap`] has `state` variables followed by `params` parameter
//! variables; parameters pass unchanged through compositions.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::linalg::Matrix;
use crate::scalar::{convert, Scalar};

/// Exponent vector, ordered graded-lexicographically: lower total degree
/// first, then larger exponents on earlier variables first.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, rhs: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }

    /// All monomials of total degree `d` in `n` variables, ascending.
    pub fn of_degree(n: usize, d: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
            let n = cur.len();
            if i + 1 == n {
                cur[i] = left;
                out.push(Monomial(cur.clone()));
                return;
            }
            for e in (0..=left).rev() {
                cur[i] = e;
                rec(i + 1, left - e, cur, out);
            }
            cur[i] = 0;
        }
        if n == 0 {
            if d == 0 {
                out.push(Monomial(vec![]));
            }
            return out;
        }
        rec(0, d, &mut cur, &mut out);
        out
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).filter(|(e, _)| **e > 0).map(|(&e, v)| v.powi(e as i32)).product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Poly<T> {
    nvars: usize,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> Poly<T> {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::var(nvars, i), T::one());
        p
    }

    pub fn monomial(m: Monomial, c: T) -> Self {
        let mut p = Self::zero(m.0.len());
        p.add_term(m, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> T {
        self.terms.get(m).cloned().unwrap_or_else(T::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: T) {
        debug_assert_eq!(m.0.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).min().unwrap_or(0)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, s: &T) -> Self {
        if s.is_zero() {
            return Self::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.clone() * s.clone())).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-T::one())
    }

    /// Product, dropping terms above degree `cap`. The flag reports whether
    /// anything was dropped.
    pub fn mul_capped(&self, rhs: &Self, cap: Option<u32>) -> (Self, bool) {
        let mut out = Self::zero(self.nvars);
        let mut dropped = false;
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                if let Some(c) = cap {
                    if ma.degree() + mb.degree() > c {
                        dropped = true;
                        continue;
                    }
                }
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        (out, dropped)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        self.mul_capped(rhs, None).0
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[i] -= 1;
            out.add_term(m2, c.clone() * T::from_i64(e as i64));
        }
        out
    }

    pub fn homogeneous_part(&self, d: u32) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    /// Terms of degree at most `d`, and whether anything was removed.
    pub fn truncate(&self, d: u32) -> (Self, bool) {
        let kept: BTreeMap<_, _> =
            self.terms.iter().filter(|(m, _)| m.degree() <= d).map(|(m, c)| (m.clone(), c.clone())).collect();
        let dropped = kept.len() != self.terms.len();
        (Poly { nvars: self.nvars, terms: kept }, dropped)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (&e, v) in m.0.iter().zip(x) {
                for _ in 0..e {
                    t = t * v.clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c.to_f64() * m.eval_f64(x)).sum()
    }

    /// Substitutes `subs[i]` for variable `i`. All substitutes share one
    /// variable count. Terms above `cap` are dropped and reported.
    pub fn substitute(&self, subs: &[Poly<T>], cap: Option<u32>) -> (Poly<T>, bool) {
        assert_eq!(subs.len(), self.nvars, "substitution arity");
        let n = subs.first().map_or(0, |p| p.nvars);
        let mut dropped = false;
        let mut powers: Vec<Vec<Poly<T>>> = vec![vec![Poly::constant(n, T::one())]; self.nvars];
        let mut out = Poly::zero(n);
        for (m, c) in &self.terms {
            let mut term = Poly::constant(n, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let last = powers[i].last().unwrap().clone();
                    let (next, d) = last.mul_capped(&subs[i], cap);
                    dropped |= d;
                    powers[i].push(next);
                }
                let (t, d) = term.mul_capped(&powers[i][e as usize], cap);
                dropped |= d;
                term = t;
            }
            out = out.add(&term);
        }
        (out, dropped)
    }

    /// Re-indexes variables: variable `i` becomes `map[i]` in a space of
    /// `nvars` variables.
    pub fn remap_vars(&self, map: &[usize], nvars: usize) -> Poly<T> {
        let mut out = Poly::zero(nvars);
        for (m, c) in &self.terms {
            let mut e = vec![0u32; nvars];
            for (i, &k) in m.0.iter().enumerate() {
                e[map[i]] += k;
            }
            out.add_term(Monomial(e), c.clone());
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> Poly<U> {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), convert::<T, U>(c));
        }
        out
    }

    /// Variables that occur in some term.
    pub fn support(&self) -> Vec<bool> {
        let mut used = vec![false; self.nvars];
        for m in self.terms.keys() {
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    used[i] = true;
                }
            }
        }
        used
    }
}

/// Polynomial map from `state + params` variables to `outputs.len()` values.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyMap<T> {
    state: usize,
    params: usize,
    outputs: Vec<Poly<T>>,
}

impl<T: Scalar> PolyMap<T> {
    pub fn new(state: usize, params: usize, outputs: Vec<Poly<T>>) -> Self {
        for p in &outputs {
            assert_eq!(p.nvars(), state + params, "output variable count");
        }
        PolyMap { state, params, outputs }
    }

    pub fn zero(state: usize, params: usize, outputs: usize) -> Self {
        PolyMap { state, params, outputs: vec![Poly::zero(state + params); outputs] }
    }

    pub fn identity(state: usize, params: usize) -> Self {
        let n = state + params;
        PolyMap { state, params, outputs: (0..state).map(|i| Poly::var(n, i)).collect() }
    }

    /// `x -> m x` with `m` of shape `outputs x state`.
    pub fn linear(m: &Matrix<T>, params: usize) -> Self {
        let n = m.cols() + params;
        let outputs = (0..m.rows())
            .map(|i| {
                let mut p = Poly::zero(n);
                for j in 0..m.cols() {
                    p.add_term(Monomial::var(n, j), m[(i, j)].clone());
                }
                p
            })
            .collect();
        PolyMap { state: m.cols(), params, outputs }
    }

    pub fn state_dim(&self) -> usize {
        self.state
    }

    pub fn param_dim(&self) -> usize {
        self.params
    }

    pub fn nvars(&self) -> usize {
        self.state + self.params
    }

    pub fn out_dim(&self) -> usize {
        self.outputs.len()
    }

    pub fn outputs(&self) -> &[Poly<T>] {
        &self.outputs
    }

    pub fn output(&self, i: usize) -> &Poly<T> {
        &self.outputs[i]
    }

    pub fn is_zero(&self) -> bool {
        self.outputs.iter().all(|p| p.is_zero())
    }

    pub fn degree(&self) -> u32 {
        self.outputs.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    fn zip(&self, rhs: &Self, f: impl Fn(&Poly<T>, &Poly<T>) -> Poly<T>) -> Self {
        assert_eq!((self.state, self.params, self.outputs.len()), (rhs.state, rhs.params, rhs.outputs.len()));
        PolyMap {
            state: self.state,
            params: self.params,
            outputs: self.outputs.iter().zip(&rhs.outputs).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a.add(b))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a.sub(b))
    }

    pub fn scale(&self, s: &T) -> Self {
        PolyMap { state: self.state, params: self.params, outputs: self.outputs.iter().map(|p| p.scale(s)).collect() }
    }

    /// `m . F`, mixing outputs.
    pub fn left_linear(&self, m: &Matrix<T>) -> Self {
        assert_eq!(m.cols(), self.outputs.len());
        let n = self.nvars();
        let outputs = (0..m.rows())
            .map(|i| {
                let mut acc = Poly::zero(n);
                for j in 0..m.cols() {
                    if !m[(i, j)].is_zero() {
                        acc = acc.add(&self.outputs[j].scale(&m[(i, j)]));
                    }
                }
                acc
            })
            .collect();
        PolyMap { state: self.state, params: self.params, outputs }
    }

    /// `F(m y; lambda)` as a map of the `m.cols()` new state variables.
    pub fn right_linear(&self, m: &Matrix<T>) -> Self {
        assert_eq!(m.rows(), self.state);
        let inner = PolyMap::linear(m, self.params);
        self.compose(&inner, None).0
    }

    /// `self o inner` with parameters passed through.
    pub fn compose(&self, inner: &PolyMap<T>, cap: Option<u32>) -> (Self, bool) {
        assert_eq!(inner.outputs.len(), self.state, "composition arity");
        assert_eq!(inner.params, self.params, "parameter count");
        let n = inner.nvars();
        let mut subs: Vec<Poly<T>> = inner.outputs.clone();
        for k in 0..self.params {
            subs.push(Poly::var(n, inner.state + k));
        }
        let mut dropped = false;
        let outputs = self
            .outputs
            .iter()
            .map(|p| {
                let (q, d) = p.substitute(&subs, cap);
                dropped |= d;
                q
            })
            .collect();
        (PolyMap { state: inner.state, params: self.params, outputs }, dropped)
    }

    /// `DF . G` where derivatives are taken in the state variables.
    pub fn jacobian_apply(&self, g: &PolyMap<T>, cap: Option<u32>) -> (Self, bool) {
        assert_eq!(g.outputs.len(), self.state);
        assert_eq!(g.nvars(), self.nvars());
        let mut dropped = false;
        let outputs = self
            .outputs
            .iter()
            .map(|f| {
                let mut acc = Poly::zero(self.nvars());
                for j in 0..self.state {
                    let d = f.derivative(j);
                    if d.is_zero() || g.outputs[j].is_zero() {
                        continue;
                    }
                    let (t, dr) = d.mul_capped(&g.outputs[j], cap);
                    dropped |= dr;
                    acc = acc.add(&t);
                }
                acc
            })
            .collect();
        (PolyMap { state: self.state, params: self.params, outputs }, dropped)
    }

    /// `[F, G] = DF . G - DG . F`.
    pub fn bracket(&self, g: &PolyMap<T>, cap: Option<u32>) -> (Self, bool) {
        let (a, d1) = self.jacobian_apply(g, cap);
        let (b, d2) = g.jacobian_apply(self, cap);
        (a.sub(&b), d1 || d2)
    }

    pub fn homogeneous_part(&self, d: u32) -> Self {
        PolyMap {
            state: self.state,
            params: self.params,
            outputs: self.outputs.iter().map(|p| p.homogeneous_part(d)).collect(),
        }
    }

    pub fn truncate(&self, d: u32) -> (Self, bool) {
        let mut dropped = false;
        let outputs = self
            .outputs
            .iter()
            .map(|p| {
                let (q, dr) = p.truncate(d);
                dropped |= dr;
                q
            })
            .collect();
        (PolyMap { state: self.state, params: self.params, outputs }, dropped)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.outputs.iter().map(|p| p.max_abs_coeff()).fold(0.0, f64::max)
    }

    /// Coefficient of `x_j` in output `i` (the linear part at the origin
    /// with parameters zero).
    pub fn linear_part(&self) -> Matrix<T> {
        let n = self.nvars();
        Matrix::from_fn(self.outputs.len(), self.state, |i, j| self.outputs[i].coeff(&Monomial::var(n, j)))
    }

    /// State Jacobian at an exact point.
    pub fn jacobian_at(&self, x: &[T], lambda: &[T]) -> Matrix<T> {
        let pt: Vec<T> = x.iter().chain(lambda).cloned().collect();
        Matrix::from_fn(self.outputs.len(), self.state, |i, j| self.outputs[i].derivative(j).eval(&pt))
    }

    pub fn eval(&self, x: &[T], lambda: &[T]) -> Vec<T> {
        let pt: Vec<T> = x.iter().chain(lambda).cloned().collect();
        self.outputs.iter().map(|p| p.eval(&pt)).collect()
    }

    pub fn eval_f64(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        let pt: Vec<f64> = x.iter().chain(lambda).copied().collect();
        self.outputs.iter().map(|p| p.eval_f64(&pt)).collect()
    }

    pub fn cast<U: Scalar>(&self) -> PolyMap<U> {
        PolyMap { state: self.state, params: self.params, outputs: self.outputs.iter().map(|p| p.cast()).collect() }
    }

    /// Flat `(output, exponents, coefficient)` listing in canonical order.
    pub fn term_list(&self) -> Vec<(usize, Vec<u32>, T)> {
        let mut out = Vec::new();
        for (i, p) in self.outputs.iter().enumerate() {
            for (m, c) in p.terms() {
                out.push((i, m.0.clone(), c.clone()));
            }
        }
        out
    }

    pub fn from_term_list(state: usize, params: usize, outputs: usize, terms: &[(usize, Vec<u32>, T)]) -> Self {
        let mut map = PolyMap::zero(state, params, outputs);
        for (i, e, c) in terms {
            map.outputs[*i].add_term(Monomial(e.clone()), c.clone());
        }
        map
    }

    /// Drops the parameter variables by fixing them to zero.
    pub fn at_zero_params(&self) -> PolyMap<T> {
        let n = self.state;
        let mut subs: Vec<Poly<T>> = (0..self.state).map(|i| Poly::var(n, i)).collect();
        subs.extend((0..self.params).map(|_| Poly::zero(n)));
        PolyMap {
            state: self.state,
            params: 0,
            outputs: self.outputs.iter().map(|p| p.substitute(&subs, None).0).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn r(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    #[test]
    fn graded_lex_order() {
        let ms = Monomial::of_degree(2, 2);
        assert_eq!(ms, vec![Monomial(vec![2, 0]), Monomial(vec![1, 1]), Monomial(vec![0, 2])]);
        let mut sorted = ms.clone();
        sorted.sort();
        assert_eq!(sorted, ms);
        assert!(Monomial(vec![0, 1]) < Monomial(vec![2, 0]));
    }

    #[test]
    fn substitution_and_cap() {
        // p = x^2 y, substitute x -> x + y, y -> y
        let n = 2;
        let p = Poly::monomial(Monomial(vec![2, 1]), r(1));
        let subs = vec![Poly::var(n, 0).add(&Poly::var(n, 1)), Poly::var(n, 1)];
        let (q, dropped) = p.substitute(&subs, None);
        assert!(!dropped);
        assert_eq!(q.coeff(&Monomial(vec![1, 2])), r(2));
        assert_eq!(q.coeff(&Monomial(vec![0, 3])), r(1));
        let (_, dropped) = p.substitute(&subs, Some(2));
        assert!(dropped);
    }

    #[test]
    fn bracket_of_linear_and_quadratic() {
        // [lambda x, g x^2] = -lambda g x^2 in one variable
        let f = PolyMap::new(1, 0, vec![Poly::monomial(Monomial(vec![1]), r(3))]);
        let g = PolyMap::new(1, 0, vec![Poly::monomial(Monomial(vec![2]), r(5))]);
        let (b, _) = f.bracket(&g, None);
        assert_eq!(b.output(0).coeff(&Monomial(vec![2])), r(-15));
    }

    #[test]
    fn params_pass_through_composition() {
        // F(x; l) = l x, inner x -> 2x
        let f = PolyMap::new(1, 1, vec![Poly::monomial(Monomial(vec![1, 1]), r(1))]);
        let inner = PolyMap::linear(&Matrix::from_i64_rows(&[&[2]]), 1);
        let (c, _) = f.compose(&inner, None);
        assert_eq!(c.output(0).coeff(&Monomial(vec![1, 1])), r(2));
    }
}
