//! Quivers, representations and tuples of polynomial maps on them.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve_in_basis, Matrix};
use crate::poly::PolyMap;
use crate::scalar::Scalar;

pub const DEFAULT_DEGREE_CAP: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuiverError {
    #[error("arrow `{arrow}` refers to unknown vertex `{vertex}`")]
    DanglingArrow { arrow: String, vertex: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("exact mode needs exact scalars")]
    ModeUnavailable,
    #[error("degree {degree} exceeds cap {cap}")]
    DegreeOverflow { degree: u32, cap: u32 },
    #[error("subspace at `{at}` is not invariant (residual {residual:e})")]
    NotInvariant { at: String, residual: f64 },
}

/// Orders ids so embedded numbers compare numerically (`N2 < N10`).
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut ia, mut ib) = (a.char_indices().peekable(), b.char_indices().peekable());
    loop {
        match (ia.peek().copied(), ib.peek().copied()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some((sa, ca)), Some((sb, cb))) => {
                if ca.is_ascii_digit() && cb.is_ascii_digit() {
                    let ea = a[sa..].find(|c: char| !c.is_ascii_digit()).map_or(a.len(), |k| sa + k);
                    let eb = b[sb..].find(|c: char| !c.is_ascii_digit()).map_or(b.len(), |k| sb + k);
                    let (na, nb) = (a[sa..ea].trim_start_matches('0'), b[sb..eb].trim_start_matches('0'));
                    let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb));
                    if ord != Ordering::Equal {
                        return ord;
                    }
                    while ia.peek().is_some_and(|(i, _)| *i < ea) {
                        ia.next();
                    }
                    while ib.peek().is_some_and(|(i, _)| *i < eb) {
                        ib.next();
                    }
                } else {
                    if ca != cb {
                        return ca.cmp(&cb);
                    }
                    ia.next();
                    ib.next();
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arrow {
    pub id: String,
    pub source: usize,
    pub target: usize,
}

/// Finite directed multigraph with loops. Vertices and arrows are kept in
/// natural id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quiver {
    vertices: Vec<String>,
    arrows: Vec<Arrow>,
}

impl Quiver {
    /// Arrows are `(id, source id, target id)`.
    pub fn new(mut vertices: Vec<String>, arrows: Vec<(String, String, String)>) -> Result<Self, QuiverError> {
        vertices.sort_by(|a, b| natural_cmp(a, b));
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(QuiverError::DuplicateId(w[0].clone()));
            }
        }
        let find = |v: &str, arrow: &str| {
            vertices
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| QuiverError::DanglingArrow { arrow: arrow.to_string(), vertex: v.to_string() })
        };
        let mut out = Vec::with_capacity(arrows.len());
        for (id, s, t) in arrows {
            let source = find(&s, &id)?;
            let target = find(&t, &id)?;
            out.push(Arrow { id, source, target });
        }
        out.sort_by(|a, b| natural_cmp(&a.id, &b.id));
        for w in out.windows(2) {
            if w[0].id == w[1].id {
                return Err(QuiverError::DuplicateId(w[0].id.clone()));
            }
        }
        Ok(Quiver { vertices, arrows: out })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == id)
    }

    pub fn arrow_index(&self, id: &str) -> Option<usize> {
        self.arrows.iter().position(|a| a.id == id)
    }
}

/// Vector spaces `R^{dim}` at the vertices and linear maps on the arrows.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation<T> {
    quiver: Quiver,
    dims: Vec<usize>,
    maps: Vec<Matrix<T>>,
}

impl<T: Scalar> Representation<T> {
    /// `dims` and `maps` follow the quiver's vertex and arrow order.
    pub fn new(quiver: Quiver, dims: Vec<usize>, maps: Vec<Matrix<T>>) -> Result<Self, QuiverError> {
        if dims.len() != quiver.vertices.len() || maps.len() != quiver.arrows.len() {
            return Err(QuiverError::ShapeMismatch("dimension or map count".into()));
        }
        for (a, m) in quiver.arrows.iter().zip(&maps) {
            let want = (dims[a.target], dims[a.source]);
            if m.shape() != want {
                return Err(QuiverError::ShapeMismatch(format!(
                    "arrow `{}` has a {}x{} matrix, expected {}x{}",
                    a.id,
                    m.rows(),
                    m.cols(),
                    want.0,
                    want.1
                )));
            }
        }
        Ok(Representation { quiver, dims, maps })
    }

    /// Builds from id-keyed parts in any order.
    pub fn from_parts(
        vertices: Vec<(String, usize)>,
        arrows: Vec<(String, String, String, Matrix<T>)>,
    ) -> Result<Self, QuiverError> {
        let quiver = Quiver::new(
            vertices.iter().map(|v| v.0.clone()).collect(),
            arrows.iter().map(|a| (a.0.clone(), a.1.clone(), a.2.clone())).collect(),
        )?;
        let dims = quiver.vertices.iter().map(|v| vertices.iter().find(|x| &x.0 == v).unwrap().1).collect();
        let maps = quiver.arrows.iter().map(|a| arrows.iter().find(|x| x.0 == a.id).unwrap().3.clone()).collect();
        Representation::new(quiver, dims, maps)
    }

    pub fn quiver(&self) -> &Quiver {
        &self.quiver
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, v: usize) -> usize {
        self.dims[v]
    }

    pub fn maps(&self) -> &[Matrix<T>] {
        &self.maps
    }

    pub fn map(&self, a: usize) -> &Matrix<T> {
        &self.maps[a]
    }

    pub fn map_by_id(&self, id: &str) -> Option<&Matrix<T>> {
        self.quiver.arrow_index(id).map(|a| &self.maps[a])
    }

    pub fn cast<U: Scalar>(&self) -> Representation<U> {
        Representation { quiver: self.quiver.clone(), dims: self.dims.clone(), maps: self.maps.iter().map(|m| m.cast()).collect() }
    }
}

/// One linear map per vertex; equivariant when `R_a L_s = L_t R_a`.
pub type EndomorphismTuple<T> = Vec<Matrix<T>>;

/// Subspace `B_v` at each vertex with the coordinate matrices `C_a`
/// satisfying `R_a B_s = B_t C_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subrepresentation<T> {
    pub bases: Vec<Matrix<T>>,
    pub coords: Vec<Matrix<T>>,
    pub residual: f64,
}

impl<T: Scalar> Subrepresentation<T> {
    pub fn from_bases(rep: &Representation<T>, bases: Vec<Matrix<T>>, tol: f64) -> Result<Self, QuiverError> {
        let mut coords = Vec::new();
        let mut worst: f64 = 0.0;
        for (a, arrow) in rep.quiver.arrows.iter().enumerate() {
            let img = rep.maps[a].mul(&bases[arrow.source]);
            match solve_in_basis(&bases[arrow.target], &img, tol) {
                Some((c, res)) => {
                    worst = worst.max(res);
                    coords.push(c);
                }
                None => {
                    let res = if T::EXACT { f64::INFINITY } else { img.max_abs() };
                    return Err(QuiverError::NotInvariant { at: arrow.id.clone(), residual: res });
                }
            }
        }
        Ok(Subrepresentation { bases, coords, residual: worst })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.cols()).collect()
    }

    /// The subrepresentation as a representation in its own coordinates.
    pub fn representation(&self, rep: &Representation<T>) -> Representation<T> {
        Representation::new(rep.quiver.clone(), self.dims(), self.coords.clone()).expect("coordinate shapes")
    }
}

/// A polynomial vector field `F_v(x; lambda)` at every vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMapTuple<T> {
    rep: Representation<T>,
    params: usize,
    fields: Vec<PolyMap<T>>,
    pub cap: u32,
    pub truncated: bool,
}

impl<T: Scalar> PolyMapTuple<T> {
    pub fn new(rep: Representation<T>, params: usize, fields: Vec<PolyMap<T>>) -> Result<Self, QuiverError> {
        if fields.len() != rep.dims.len() {
            return Err(QuiverError::ShapeMismatch("one field per vertex required".into()));
        }
        for (v, f) in fields.iter().enumerate() {
            if f.state_dim() != rep.dims[v] || f.out_dim() != rep.dims[v] || f.param_dim() != params {
                return Err(QuiverError::ShapeMismatch(format!(
                    "field at `{}` does not act on R^{} with {} parameters",
                    rep.quiver.vertices[v], rep.dims[v], params
                )));
            }
        }
        Ok(PolyMapTuple { rep, params, fields, cap: DEFAULT_DEGREE_CAP, truncated: false })
    }

    pub fn rep(&self) -> &Representation<T> {
        &self.rep
    }

    pub fn params(&self) -> usize {
        self.params
    }

    pub fn fields(&self) -> &[PolyMap<T>] {
        &self.fields
    }

    pub fn field(&self, v: usize) -> &PolyMap<T> {
        &self.fields[v]
    }

    pub fn degree(&self) -> u32 {
        self.fields.iter().map(|f| f.degree()).max().unwrap_or(0)
    }

    /// Linearisations at the origin with zero parameters.
    pub fn linear_parts(&self) -> EndomorphismTuple<T> {
        self.fields.iter().map(|f| f.linear_part()).collect()
    }

    pub fn map_fields(&self, f: impl Fn(usize, &PolyMap<T>) -> PolyMap<T>) -> Self {
        PolyMapTuple {
            rep: self.rep.clone(),
            params: self.params,
            fields: self.fields.iter().enumerate().map(|(v, x)| f(v, x)).collect(),
            cap: self.cap,
            truncated: self.truncated,
        }
    }

    pub fn cast<U: Scalar>(&self) -> PolyMapTuple<U> {
        PolyMapTuple {
            rep: self.rep.cast(),
            params: self.params,
            fields: self.fields.iter().map(|f| f.cast()).collect(),
            cap: self.cap,
            truncated: self.truncated,
        }
    }

    fn same_shape(&self, g: &Self) -> Result<(), QuiverError> {
        if self.rep.dims != g.rep.dims || self.rep.quiver != g.rep.quiver || self.params != g.params {
            return Err(QuiverError::ShapeMismatch("tuples live on different representations".into()));
        }
        Ok(())
    }

    /// Vertexwise `F_v o G_v`. Exceeding the degree cap is an error unless
    /// `allow_truncation`, which drops the excess and sets `truncated`.
    pub fn compose(&self, g: &Self, allow_truncation: bool) -> Result<Self, QuiverError> {
        self.same_shape(g)?;
        let cap = self.cap.min(g.cap);
        let mut truncated = self.truncated || g.truncated;
        let mut fields = Vec::new();
        for (f, h) in self.fields.iter().zip(&g.fields) {
            let (c, dropped) = f.compose(h, Some(cap));
            if dropped {
                if !allow_truncation {
                    let full = f.compose(h, None).0.degree();
                    return Err(QuiverError::DegreeOverflow { degree: full, cap });
                }
                truncated = true;
            }
            fields.push(c);
        }
        Ok(PolyMapTuple { rep: self.rep.clone(), params: self.params, fields, cap, truncated })
    }

    /// Vertexwise Lie bracket `[F_v, G_v]`.
    pub fn bracket(&self, g: &Self, allow_truncation: bool) -> Result<Self, QuiverError> {
        self.same_shape(g)?;
        let cap = self.cap.min(g.cap);
        let mut truncated = self.truncated || g.truncated;
        let mut fields = Vec::new();
        for (f, h) in self.fields.iter().zip(&g.fields) {
            let (c, dropped) = f.bracket(h, Some(cap));
            if dropped {
                if !allow_truncation {
                    let full = f.bracket(h, None).0.degree();
                    return Err(QuiverError::DegreeOverflow { degree: full, cap });
                }
                truncated = true;
            }
            fields.push(c);
        }
        Ok(PolyMapTuple { rep: self.rep.clone(), params: self.params, fields, cap, truncated })
    }

    pub fn add(&self, g: &Self) -> Result<Self, QuiverError> {
        self.same_shape(g)?;
        Ok(self.map_fields(|v, f| f.add(&g.fields[v])))
    }

    /// Restriction to an invariant subrepresentation, in its coordinates.
    pub fn restrict(&self, sub: &Subrepresentation<T>, tol: f64) -> Result<Self, QuiverError> {
        let mut fields = Vec::new();
        for (v, f) in self.fields.iter().enumerate() {
            let b = &sub.bases[v];
            let h = f.right_linear(b);
            let terms = h.term_list();
            let mut monos: Vec<Vec<u32>> = terms.iter().map(|t| t.1.clone()).collect();
            monos.sort();
            monos.dedup();
            let mut m = Matrix::zeros(b.rows(), monos.len());
            for (i, e, c) in &terms {
                let j = monos.binary_search(e).unwrap();
                m[(*i, j)] = c.clone();
            }
            let Some((x, _)) = solve_in_basis(b, &m, tol) else {
                return Err(QuiverError::NotInvariant {
                    at: self.rep.quiver.vertices[v].clone(),
                    residual: if T::EXACT { f64::INFINITY } else { m.max_abs() },
                });
            };
            let mut k_terms = Vec::new();
            for i in 0..b.cols() {
                for (j, e) in monos.iter().enumerate() {
                    k_terms.push((i, e.clone(), x[(i, j)].clone()));
                }
            }
            fields.push(PolyMap::from_term_list(b.cols(), self.params, b.cols(), &k_terms));
        }
        let mut out = PolyMapTuple::new(sub.representation(&self.rep), self.params, fields)?;
        out.cap = self.cap;
        out.truncated = self.truncated;
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { samples: 64, seed: effective_seed(0), tol: 1e-9 }
    }
}

/// `QUIVERDYN_SEED` overrides the given seed.
pub fn effective_seed(seed: u64) -> u64 {
    std::env::var("QUIVERDYN_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(seed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckMode {
    Exact,
    Sampled(SampleConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub mode: String,
    /// Per arrow id, the largest coefficient (exact) or sampled pointwise
    /// residual.
    pub residuals: Vec<(String, f64)>,
    pub max_residual: f64,
    pub passed: bool,
    pub tol: f64,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

/// Checks `R_a o F_s = F_t o (R_a x id)` on every arrow.
pub fn check_equivariance<T: Scalar>(f: &PolyMapTuple<T>, mode: CheckMode) -> Result<EquivarianceReport, QuiverError> {
    let rep = f.rep();
    let mut residuals = Vec::new();
    match mode {
        CheckMode::Exact => {
            if !T::EXACT {
                return Err(QuiverError::ModeUnavailable);
            }
            let mut passed = true;
            for (a, arrow) in rep.quiver.arrows.iter().enumerate() {
                let r = rep.map(a);
                let lhs = f.field(arrow.source).left_linear(r);
                let rhs = f.field(arrow.target).right_linear(r);
                let diff = lhs.sub(&rhs);
                passed &= diff.is_zero();
                residuals.push((arrow.id.clone(), diff.max_abs_coeff()));
            }
            let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
            Ok(EquivarianceReport { mode: "exact".into(), residuals, max_residual, passed, tol: 0.0, seed: None, samples: None })
        }
        CheckMode::Sampled(cfg) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let p = f.params();
            for (a, arrow) in rep.quiver.arrows.iter().enumerate() {
                let r = rep.map(a).to_f64();
                let fs = f.field(arrow.source).cast::<f64>();
                let ft = f.field(arrow.target).cast::<f64>();
                let mut worst: f64 = 0.0;
                for _ in 0..cfg.samples {
                    let x: Vec<f64> = (0..rep.dim(arrow.source)).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let lam: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let lhs = r.mul_vec(&fs.eval_f64(&x, &lam));
                    let rhs = ft.eval_f64(&r.mul_vec(&x), &lam);
                    for (u, w) in lhs.iter().zip(&rhs) {
                        worst = worst.max((u - w).abs());
                    }
                }
                residuals.push((arrow.id.clone(), worst));
            }
            let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
            Ok(EquivarianceReport {
                mode: "sampled".into(),
                residuals,
                max_residual,
                passed: max_residual <= cfg.tol,
                tol: cfg.tol,
                seed: Some(cfg.seed),
                samples: Some(cfg.samples),
            })
        }
    }
}

/// Checks `R_a L_s = L_t R_a` on every arrow; returns the worst residual.
pub fn endomorphism_residual<T: Scalar>(rep: &Representation<T>, l: &EndomorphismTuple<T>) -> Vec<(String, f64)> {
    rep.quiver
        .arrows
        .iter()
        .enumerate()
        .map(|(a, arrow)| {
            let d = rep.map(a).mul(&l[arrow.source]).sub(&l[arrow.target].mul(rep.map(a)));
            (arrow.id.clone(), d.max_abs())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{Monomial, Poly};
    use crate::Rational;

    fn r(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    /// Two-vertex feedforward quiver: v1 = R, v2 = R^2, a: v2 -> v1 projects.
    fn feedforward() -> Representation<Rational> {
        Representation::from_parts(
            vec![("v1".into(), 1), ("v2".into(), 2)],
            vec![("a".into(), "v2".into(), "v1".into(), Matrix::from_i64_rows(&[&[1, 0]]))],
        )
        .unwrap()
    }

    fn ff_tuple(c: i64) -> PolyMapTuple<Rational> {
        // F1 = f(x1) = x1^2, F2 = (f(x1), x1 + c x2^2)
        let f1 = PolyMap::new(1, 0, vec![Poly::monomial(Monomial(vec![2]), r(1))]);
        let mut g = Poly::var(2, 0);
        g.add_term(Monomial(vec![0, 2]), r(c));
        let f2 = PolyMap::new(2, 0, vec![Poly::monomial(Monomial(vec![2, 0]), r(1)), g]);
        PolyMapTuple::new(feedforward(), 0, vec![f1, f2]).unwrap()
    }

    #[test]
    fn natural_order() {
        let mut v = vec!["N10", "N2", "a1", "N1"];
        v.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(v, vec!["N1", "N2", "N10", "a1"]);
    }

    #[test]
    fn dangling_and_shape_errors() {
        let e = Quiver::new(vec!["a".into()], vec![("x".into(), "a".into(), "b".into())]).unwrap_err();
        assert!(matches!(e, QuiverError::DanglingArrow { .. }));
        let e = Representation::<Rational>::from_parts(
            vec![("v1".into(), 1), ("v2".into(), 2)],
            vec![("a".into(), "v2".into(), "v1".into(), Matrix::from_i64_rows(&[&[1]]))],
        )
        .unwrap_err();
        assert!(matches!(e, QuiverError::ShapeMismatch(_)));
    }

    #[test]
    fn exact_and_sampled_checks_agree() {
        let f = ff_tuple(3);
        assert!(check_equivariance(&f, CheckMode::Exact).unwrap().passed);
        assert!(check_equivariance(&f, CheckMode::Sampled(SampleConfig::default())).unwrap().passed);
        // break the shared first component at v2
        let bad = f.map_fields(|v, x| if v == 1 { x.add(&PolyMap::identity(2, 0)) } else { x.clone() });
        assert!(!check_equivariance(&bad, CheckMode::Exact).unwrap().passed);
        assert!(!check_equivariance(&bad, CheckMode::Sampled(SampleConfig::default())).unwrap().passed);
        let fl = f.cast::<f64>();
        assert_eq!(check_equivariance(&fl, CheckMode::Exact).unwrap_err(), QuiverError::ModeUnavailable);
    }

    #[test]
    fn compose_and_bracket_stay_equivariant() {
        let f = ff_tuple(3);
        let g = ff_tuple(-2);
        let c = f.compose(&g, false).unwrap();
        assert!(check_equivariance(&c, CheckMode::Exact).unwrap().passed);
        let b = f.bracket(&g, false).unwrap();
        assert!(check_equivariance(&b, CheckMode::Exact).unwrap().passed);
        let mut low = f.clone();
        low.cap = 3;
        assert!(matches!(low.compose(&g, false), Err(QuiverError::DegreeOverflow { .. })));
        assert!(low.compose(&g, true).unwrap().truncated);
    }

    #[test]
    fn restriction_to_invariant_line() {
        // span(e2) = ker R_a at v2: F2(0, x2) = (0, 3 x2^2)
        let f = ff_tuple(3);
        let rep = f.rep().clone();
        let bases = vec![Matrix::zeros(1, 0), Matrix::from_i64_rows(&[&[0], &[1]])];
        let sub = Subrepresentation::from_bases(&rep, bases, 0.0).unwrap();
        let restricted = f.restrict(&sub, 0.0).unwrap();
        assert_eq!(restricted.field(1).output(0).coeff(&Monomial(vec![2])), r(3));
        // F2(x1, 0) = (x1^2, x1) leaves span(e1)
        let bases = vec![Matrix::identity(1), Matrix::from_i64_rows(&[&[1], &[0]])];
        let sub = Subrepresentation::from_bases(&rep, bases, 0.0).unwrap();
        assert!(matches!(f.restrict(&sub, 0.0), Err(QuiverError::NotInvariant { .. })));
    }
}
