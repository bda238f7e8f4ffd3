//! Equivariant normal forms: grade by grade, the unique generator in
//! `im ad_{L^S}` removes the non-resonant part and its Lie transform is
//! applied to the whole field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ode::rk4;
use crate::poly::PolyMap;
use crate::polyfield::{hom_basis, im_ker_split, lie_transform, solve_homological, AdCache, PolyFieldError};
use crate::quiver::{check_equivariance, CheckMode, EndomorphismTuple, PolyMapTuple, QuiverError, SampleConfig};
use crate::scalar::Scalar;
use crate::spectral::{sn_decomposition, SpectralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error("field does not vanish at the origin")]
    NotEquilibrium,
    #[error("normal forms take fields without parameters")]
    Parametrized,
    #[error(transparent)]
    PolyField(#[from] PolyFieldError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormResult<T> {
    pub grade: usize,
    pub linear: EndomorphismTuple<T>,
    pub semisimple: EndomorphismTuple<T>,
    /// `F-bar` up to polynomial degree `grade + 1`.
    pub field: PolyMapTuple<T>,
    /// `generators[k - 1]` is the tuple `G^k`.
    pub generators: Vec<PolyMapTuple<T>>,
    /// `residuals[k - 1][v] = |ad_{L^S} F-bar^k_v|`.
    pub residuals: Vec<Vec<f64>>,
}

impl<T: Scalar> NormalFormResult<T> {
    /// `F-bar^k` (polynomial degree `k + 1`).
    pub fn grade_part(&self, k: usize) -> PolyMapTuple<T> {
        self.field.map_fields(|_, f| f.homogeneous_part(k as u32 + 1))
    }
}

pub fn normal_form<T: Scalar>(f: &PolyMapTuple<T>, grade: usize) -> Result<NormalFormResult<T>, NormalFormError> {
    if f.params() != 0 {
        return Err(NormalFormError::Parametrized);
    }
    if f.fields().iter().any(|x| !x.homogeneous_part(0).is_zero()) {
        return Err(NormalFormError::NotEquilibrium);
    }
    let linear = f.linear_parts();
    let (semisimple, _) = sn_decomposition(&linear)?;
    let cache = AdCache::new();
    let top = grade as u32 + 1;
    let mut cur: Vec<PolyMap<T>> = f.fields().iter().map(|x| x.truncate(top).0).collect();
    let mut generators = Vec::new();
    let mut residuals = Vec::new();
    for k in 1..=grade {
        let mut gens = Vec::new();
        let mut res = Vec::new();
        for (v, field) in cur.iter_mut().enumerate() {
            let n = field.state_dim();
            if n == 0 {
                gens.push(PolyMap::zero(0, 0, 0));
                res.push(0.0);
                continue;
            }
            let basis = hom_basis(n, k)?;
            let ad_l = cache.get(&linear[v], k)?;
            let ad_s = cache.get(&semisimple[v], k)?;
            let split = im_ker_split(&ad_s)?;
            let sol = solve_homological(&ad_l, &ad_s, &split, &basis.coords(field), k)?;
            let g = basis.field(&sol.generator);
            *field = lie_transform(field, &g, top);
            gens.push(g);
            res.push(sol.residual);
        }
        generators.push(PolyMapTuple::new(f.rep().clone(), 0, gens)?);
        residuals.push(res);
    }
    let field = PolyMapTuple::new(f.rep().clone(), 0, cur)?;
    Ok(NormalFormResult { grade, linear, semisimple, field, generators, residuals })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalFormReport {
    /// Largest coefficient of `[L^S x, F-bar^k]` over grades and vertices.
    pub commutator_residual: f64,
    pub field_equivariance: f64,
    pub generator_equivariance: f64,
    pub equivariant: bool,
    /// `|Phi(x(1)) - y(1)|` for flows from `Phi`-related seeds.
    pub conjugacy_error: f64,
    pub seed: u64,
    pub passed: bool,
}

pub const COMMUTATOR_TOL: f64 = 1e-10;
pub const CONJUGACY_TOL: f64 = 1e-6;

fn flow_f64(f: &PolyMap<f64>, x: &[f64], steps: usize) -> Vec<f64> {
    rk4(|y| f.eval_f64(y, &[]), x, 1.0, steps)
}

/// Checks resonance, equivariance and (numerically) conjugacy to the
/// original field `f` at radius `1e-2`.
pub fn verify_normal_form<T: Scalar>(
    res: &NormalFormResult<T>,
    f: &PolyMapTuple<T>,
    seed: u64,
) -> Result<NormalFormReport, NormalFormError> {
    let mut commutator_residual: f64 = 0.0;
    let mut field_eq: f64 = 0.0;
    let mut gen_eq: f64 = 0.0;
    let mut equivariant = true;
    let mode = if T::EXACT {
        CheckMode::Exact
    } else {
        CheckMode::Sampled(SampleConfig { seed, ..SampleConfig::default() })
    };
    for k in 1..=res.grade {
        let part = res.grade_part(k);
        for (v, p) in part.fields().iter().enumerate() {
            let ls = PolyMap::linear(&res.semisimple[v], 0);
            commutator_residual = commutator_residual.max(ls.bracket(p, None).0.max_abs_coeff());
        }
        let r1 = check_equivariance(&part, mode)?;
        let r2 = check_equivariance(&res.generators[k - 1], mode)?;
        field_eq = field_eq.max(r1.max_residual);
        gen_eq = gen_eq.max(r2.max_residual);
        equivariant &= r1.passed && r2.passed;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conjugacy_error: f64 = 0.0;
    let top = res.grade as u32 + 1;
    for v in 0..f.rep().dims().len() {
        let n = f.rep().dim(v);
        if n == 0 {
            continue;
        }
        let mut x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = x0.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        x0.iter_mut().for_each(|x| *x *= 1e-2 / norm);
        let gens: Vec<PolyMap<f64>> = res.generators.iter().map(|g| g.field(v).cast()).collect();
        let phi = |x: &[f64]| gens.iter().fold(x.to_vec(), |acc, g| flow_f64(g, &acc, 50));
        let orig: PolyMap<f64> = f.field(v).truncate(top).0.cast();
        let bar: PolyMap<f64> = res.field.field(v).cast();
        let x1 = flow_f64(&orig, &x0, 200);
        let y1 = flow_f64(&bar, &phi(&x0), 200);
        let mapped = phi(&x1);
        for (a, b) in mapped.iter().zip(&y1) {
            conjugacy_error = conjugacy_error.max((a - b).abs());
        }
    }
    let passed = commutator_residual <= COMMUTATOR_TOL && equivariant && conjugacy_error <= CONJUGACY_TOL;
    Ok(NormalFormReport {
        commutator_residual,
        field_equivariance: field_eq,
        generator_equivariance: gen_eq,
        equivariant,
        conjugacy_error,
        seed,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::polyfield::ad_operator_matrix;
    use crate::quiver::Representation;
    use crate::Rational;

    fn hopf_field() -> PolyMapTuple<Rational> {
        let q = |n: i64, d: i64| Rational::from_ratio(n, d);
        let terms = vec![
            (0, vec![0, 1], q(-1, 1)),
            (1, vec![1, 0], q(1, 1)),
            (0, vec![2, 0], q(1, 2)),
            (0, vec![1, 1], q(-1, 3)),
            (1, vec![0, 2], q(2, 1)),
            (1, vec![1, 1], q(1, 5)),
            (0, vec![3, 0], q(1, 1)),
            (0, vec![1, 2], q(-2, 3)),
            (1, vec![2, 1], q(3, 4)),
            (1, vec![0, 3], q(1, 7)),
        ];
        let rep = Representation::from_parts(vec![("v".into(), 2)], vec![]).unwrap();
        PolyMapTuple::new(rep, 0, vec![PolyMap::from_term_list(2, 0, 2, &terms)]).unwrap()
    }

    #[test]
    fn hopf_normal_form() {
        let f = hopf_field();
        let res = normal_form(&f, 2).unwrap();
        assert!(res.grade_part(1).field(0).is_zero());
        let basis = hom_basis(2, 2).unwrap();
        let l = Matrix::<Rational>::from_i64_rows(&[&[0, -1], &[1, 0]]);
        let ker = ad_operator_matrix(&l, 2).unwrap().nullspace(0.0);
        assert_eq!(ker.cols(), 2);
        let c = Matrix::column_vector(basis.coords(res.grade_part(2).field(0)));
        assert!(ker.solve(&c, 0.0).is_some());
        let report = verify_normal_form(&res, &f, 0).unwrap();
        assert!(report.passed, "{report:?}");
        let fres = normal_form(&f.cast::<f64>(), 2).unwrap();
        let diff = fres.field.field(0).sub(&res.field.field(0).cast());
        assert!(diff.max_abs_coeff() < 1e-10);
    }
}
