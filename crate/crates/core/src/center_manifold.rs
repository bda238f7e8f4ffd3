//! Taylor jets of center manifolds `x^h = phi(x^c)` and the reduced fields
//! `F^c(x^c) = pi^c F(x^c + phi(x^c))`, computed at every vertex from one
//! equivariant center/hyperbolic split.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::dense::{self, RealSchur};
use crate::linalg::{solve_in_basis, Matrix};
use crate::ode::rk4;
use crate::poly::{Monomial, Poly, PolyMap};
use crate::quiver::{PolyMapTuple, QuiverError};
use crate::scalar::Scalar;
use crate::spectral::{center_hyperbolic_split, SpectralError, Split};

/// Smallest admissible `|Re|` of a hyperbolic eigenvalue.
pub const GAP_GUARD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CenterManifoldError {
    #[error("field does not vanish at the origin")]
    NotEquilibrium,
    #[error("hyperbolic eigenvalue with real part {re:e} at `{vertex}` is too close to the center spectrum")]
    SpectralGap { vertex: String, re: f64 },
    #[error("degree-{degree} equation at `{vertex}` is singular")]
    ResonantBlock { vertex: String, degree: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CMExpansion<T> {
    pub degree: usize,
    /// Center part is `split.selected`, hyperbolic part `split.complement`.
    pub split: Split<T>,
    /// Per vertex, `phi_v` from center to hyperbolic coordinates.
    pub phi: Vec<PolyMap<T>>,
    /// Per vertex, `F^c_v` in center coordinates.
    pub reduced: Vec<PolyMap<T>>,
    /// Per vertex, largest coefficient of `Dphi F^c - pi^h F(x^c + phi)`
    /// in degrees `2..=degree`.
    pub residuals: Vec<f64>,
}

impl<T: Scalar> CMExpansion<T> {
    pub fn center_basis(&self, v: usize) -> &Matrix<T> {
        &self.split.selected.bases[v]
    }

    pub fn hyperbolic_basis(&self, v: usize) -> &Matrix<T> {
        &self.split.complement.bases[v]
    }

    /// `u -> C u + H phi(u)` in ambient coordinates.
    pub fn graph(&self, v: usize) -> PolyMap<T> {
        let c = self.center_basis(v);
        let h = self.hyperbolic_basis(v);
        let id = PolyMap::identity(c.cols(), 0);
        id.left_linear(c).add(&self.phi[v].left_linear(h))
    }
}

/// Basis `u^m e_i` of degree-`d` maps from `R^c` to `R^h`.
fn jet_basis(c: usize, h: usize, d: u32) -> Vec<(Monomial, usize)> {
    Monomial::of_degree(c, d).into_iter().flat_map(|m| (0..h).map(move |i| (m.clone(), i))).collect()
}

fn jet_coords<T: Scalar>(basis: &[(Monomial, usize)], f: &PolyMap<T>) -> Vec<T> {
    basis.iter().map(|(m, i)| f.output(*i).coeff(m)).collect()
}

fn check_gap<T: Scalar>(vertex: &str, l: &Matrix<T>, centre: usize) -> Result<(), CenterManifoldError> {
    let mut re: Vec<f64> = RealSchur::new(&l.to_f64()).eigenvalues().iter().map(|e| e.re.abs()).collect();
    re.sort_by(f64::total_cmp);
    if let Some(&r) = re.get(centre) {
        if r < GAP_GUARD {
            return Err(CenterManifoldError::SpectralGap { vertex: vertex.into(), re: r });
        }
    }
    Ok(())
}

/// Jets to polynomial degree `k` of the center manifolds of every vertex,
/// for the field at zero parameters.
pub fn cm_taylor<T: Scalar>(f: &PolyMapTuple<T>, k: usize) -> Result<CMExpansion<T>, CenterManifoldError> {
    let rep = f.rep();
    let fields: Vec<PolyMap<T>> = f.fields().iter().map(|x| x.at_zero_params()).collect();
    if fields.iter().any(|x| !x.homogeneous_part(0).is_zero()) {
        return Err(CenterManifoldError::NotEquilibrium);
    }
    let linear: Vec<Matrix<T>> = fields.iter().map(|x| x.linear_part()).collect();
    let split = center_hyperbolic_split(rep, &linear)?;
    let exact_tol = if T::EXACT { 0.0 } else { 1e-10 };
    let mut phis = Vec::new();
    let mut reduced = Vec::new();
    let mut residuals = Vec::new();
    for (v, field) in fields.iter().enumerate() {
        let vertex = rep.quiver().vertices()[v].clone();
        let cb = &split.selected.bases[v];
        let hb = &split.complement.bases[v];
        let (c, h) = (cb.cols(), hb.cols());
        check_gap(&vertex, &linear[v], c)?;
        let t = cb.hstack(hb);
        let tinv = t.inverse(if T::EXACT { 0.0 } else { 1e-12 }).ok_or(CenterManifoldError::ResonantBlock {
            vertex: vertex.clone(),
            degree: 1,
        })?;
        let g = field.right_linear(&t).left_linear(&tinv);
        let lin = g.linear_part();
        let a_c = lin.block(0, 0, c, c);
        let a_h = lin.block(c, c, h, h);
        let lin_c = PolyMap::linear(&a_c, 0);
        let mut phi = PolyMap::zero(c, 0, h);
        let substitute = |phi: &PolyMap<T>, cap: u32| -> PolyMap<T> {
            let mut subs: Vec<Poly<T>> = (0..c).map(|i| Poly::var(c, i)).collect();
            subs.extend(phi.outputs().iter().cloned());
            g.compose(&PolyMap::new(c, 0, subs), Some(cap)).0
        };
        let split_outputs = |m: &PolyMap<T>| -> (PolyMap<T>, PolyMap<T>) {
            let o = m.outputs();
            (PolyMap::new(c, 0, o[..c].to_vec()), PolyMap::new(c, 0, o[c..].to_vec()))
        };
        for d in 2..=k as u32 {
            if c == 0 || h == 0 {
                break;
            }
            let (gc, gh) = split_outputs(&substitute(&phi, d));
            let fc = gc.truncate(d - 1).0;
            let rhs = gh.homogeneous_part(d).sub(&phi.jacobian_apply(&fc, Some(d)).0.homogeneous_part(d));
            let basis = jet_basis(c, h, d);
            let cols: Vec<Vec<T>> = basis
                .iter()
                .map(|(m, i)| {
                    let mut outs = vec![Poly::zero(c); h];
                    outs[*i] = Poly::monomial(m.clone(), T::one());
                    let p = PolyMap::new(c, 0, outs);
                    let img = p.jacobian_apply(&lin_c, None).0.sub(&p.left_linear(&a_h));
                    jet_coords(&basis, &img)
                })
                .collect();
            let op = Matrix::from_columns(basis.len(), &cols);
            let b = Matrix::column_vector(jet_coords(&basis, &rhs));
            let sol = if T::EXACT {
                op.solve(&b, 0.0)
            } else if dense::numerical_rank(&op.to_f64(), 1e-10) < op.cols() {
                None
            } else {
                solve_in_basis(&op, &b, 1e-9 * (1.0 + b.max_abs())).map(|x| x.0)
            };
            let sol = sol.ok_or(CenterManifoldError::ResonantBlock { vertex: vertex.clone(), degree: d as usize })?;
            let terms: Vec<(usize, Vec<u32>, T)> =
                basis.iter().zip(sol.col(0)).map(|((m, i), x)| (*i, m.0.clone(), x)).collect();
            phi = phi.add(&PolyMap::from_term_list(c, 0, h, &terms));
        }
        let top = k as u32;
        let (gc, gh) = split_outputs(&substitute(&phi, top));
        let fc = gc.truncate(top).0;
        let inv = phi.jacobian_apply(&fc, Some(top)).0.sub(&gh.truncate(top).0);
        residuals.push(inv.max_abs_coeff());
        if residuals[v] > exact_tol {
            return Err(CenterManifoldError::ResonantBlock { vertex, degree: k });
        }
        phis.push(phi);
        reduced.push(fc);
    }
    Ok(CMExpansion { degree: k, split, phi: phis, reduced, residuals })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CMEquivarianceReport {
    /// Per arrow: `|R_a phi_s - phi_t R_a|` and `|R_a F^c_s - F^c_t R_a|`.
    pub residuals: Vec<(String, f64, f64)>,
    pub max_residual: f64,
    pub passed: bool,
}

/// Coefficient-level check of `R_a o phi_s = phi_t o R_a` and
/// `R_a o F^c_s = F^c_t o R_a` on the center coordinates.
pub fn check_cm_equivariance<T: Scalar>(exp: &CMExpansion<T>, f: &PolyMapTuple<T>) -> CMEquivarianceReport {
    let top = exp.degree as u32;
    let mut residuals = Vec::new();
    for (a, arrow) in f.rep().quiver().arrows().iter().enumerate() {
        let cc = &exp.split.selected.coords[a];
        let ch = &exp.split.complement.coords[a];
        let (s, t) = (arrow.source, arrow.target);
        let d_phi = exp.phi[s].left_linear(ch).sub(&exp.phi[t].right_linear(cc).truncate(top).0);
        let d_red = exp.reduced[s].left_linear(cc).sub(&exp.reduced[t].right_linear(cc).truncate(top).0);
        residuals.push((arrow.id.clone(), d_phi.max_abs_coeff(), d_red.max_abs_coeff()));
    }
    let max_residual = residuals.iter().map(|r| r.1.max(r.2)).fold(0.0, f64::max);
    let passed = if T::EXACT { max_residual == 0.0 } else { max_residual <= 1e-10 };
    CMEquivarianceReport { residuals, max_residual, passed }
}

/// `|pi^c x(1) - u(1)|` where `x` solves the full system from the lifted
/// point `C u0 + H phi(u0)` and `u` the reduced system from `u0`.
pub fn flow_error<T: Scalar>(exp: &CMExpansion<T>, f: &PolyMapTuple<T>, v: usize, u0: &[f64]) -> f64 {
    let full: PolyMap<f64> = f.field(v).at_zero_params().cast();
    let red: PolyMap<f64> = exp.reduced[v].cast();
    let graph: PolyMap<f64> = exp.graph(v).cast();
    let cb = exp.center_basis(v).to_f64();
    let t = cb.hstack(&exp.hyperbolic_basis(v).to_f64());
    let tinv = dense::pinv(&t, 1e-14);
    let x0 = graph.eval_f64(u0, &[]);
    let x1 = rk4(|x| full.eval_f64(x, &[]), &x0, 1.0, 1000);
    let u1 = rk4(|u| red.eval_f64(u, &[]), u0, 1.0, 1000);
    let proj = tinv.mul_vec(&x1);
    u1.iter().zip(&proj).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::Representation;
    use crate::Rational;

    fn feedforward(coupled: bool) -> PolyMapTuple<Rational> {
        let one = Rational::from_i64(1);
        let rep = Representation::from_parts(
            vec![("v1".into(), 1), ("v2".into(), 2)],
            vec![("a".into(), "v2".into(), "v1".into(), Matrix::from_i64_rows(&[&[1, 0]]))],
        )
        .unwrap();
        let f1 = if coupled { PolyMap::zero(1, 0, 1) } else { PolyMap::from_term_list(1, 0, 1, &[(0, vec![2], one.clone())]) };
        let big = if coupled {
            vec![(0, vec![1, 1], one.clone()), (1, vec![0, 1], -one.clone()), (1, vec![2, 0], one.clone())]
        } else {
            vec![(0, vec![2, 0], one.clone()), (1, vec![0, 1], -one.clone()), (1, vec![2, 0], one.clone())]
        };
        let f2 = PolyMap::from_term_list(2, 0, 2, &big);
        PolyMapTuple::new(rep, 0, vec![f1, f2]).unwrap()
    }

    #[test]
    fn feedforward_jet() {
        let f = feedforward(false);
        let exp = cm_taylor(&f, 4).unwrap();
        let g = exp.graph(1);
        let y = g.output(1);
        let q = |n| Rational::from_i64(n);
        assert_eq!(y.coeff(&Monomial(vec![2])), q(1));
        assert_eq!(y.coeff(&Monomial(vec![3])), q(-2));
        assert_eq!(y.coeff(&Monomial(vec![4])), q(6));
        assert!(check_cm_equivariance(&exp, &f).passed);
    }

    #[test]
    fn flow_error_scales() {
        let f = feedforward(true).cast::<f64>();
        let exp = cm_taylor(&f, 4).unwrap();
        let e1 = flow_error(&exp, &f, 1, &[1e-2]);
        let e2 = flow_error(&exp, &f, 1, &[5e-3]);
        let ratio = e1 / e2;
        assert!((ratio / 32.0 - 1.0).abs() < 0.25, "ratio {ratio} ({e1:e}, {e2:e})");
    }
}
