//! Joint spectra of endomorphism tuples, invariant splittings into
//! subrepresentations and the semisimple-nilpotent decomposition.
//!
//! Exact scalars use exact factors of the characteristic polynomials when
//! they split into rational linear and quadratic factors; everything else
//! goes through the ordered real Schur form.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::dense::{self, Eig, RealSchur};
use crate::linalg::{char_poly, Matrix, UPoly};
use crate::quiver::{EndomorphismTuple, QuiverError, Representation, Subrepresentation};
use crate::scalar::{convert, rationalize, Scalar};

pub const EPS_EIG: f64 = 1e-8;
pub const EPS_AXIS: f64 = 1e-8;
/// Largest relative eigenvalue spread attributed to a Jordan block.
pub const MAX_DEFECT: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("eigenvalues near {re}{im:+}i are closer than the clustering resolution")]
    ClusterSplit { re: f64, im: f64 },
    #[error("eigenvalue {re}{im:+}i is too close to the imaginary axis to classify")]
    AxisAmbiguous { re: f64, im: f64 },
    #[error("semisimple part is ill-conditioned (condition estimate {cond:e})")]
    IllConditioned { cond: f64 },
    #[error(transparent)]
    Quiver(#[from] QuiverError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EndomorphismReport {
    pub residuals: Vec<(String, f64)>,
    pub max_residual: f64,
    pub passed: bool,
}

fn check_shapes<T: Scalar>(rep: &Representation<T>, l: &EndomorphismTuple<T>) -> Result<(), SpectralError> {
    if l.len() != rep.dims().len() {
        return Err(SpectralError::ShapeMismatch(format!("{} maps for {} vertices", l.len(), rep.dims().len())));
    }
    for (v, m) in l.iter().enumerate() {
        if m.shape() != (rep.dim(v), rep.dim(v)) {
            return Err(SpectralError::ShapeMismatch(format!(
                "map at `{}` is {}x{}, vertex has dimension {}",
                rep.quiver().vertices()[v],
                m.rows(),
                m.cols(),
                rep.dim(v)
            )));
        }
    }
    Ok(())
}

/// Checks `R_a L_s = L_t R_a`; exact scalars must match exactly.
pub fn check_endomorphism<T: Scalar>(
    rep: &Representation<T>,
    l: &EndomorphismTuple<T>,
    tol: f64,
) -> Result<EndomorphismReport, SpectralError> {
    check_shapes(rep, l)?;
    let residuals = crate::quiver::endomorphism_residual(rep, l);
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    let passed = if T::EXACT { max_residual == 0.0 } else { max_residual <= tol };
    Ok(EndomorphismReport { residuals, max_residual, passed })
}

/// An eigenvalue `re + i im` (or the pair `re +- i im`, stored once with
/// `im > 0`) shared by the tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCluster<T> {
    pub re: f64,
    pub im: f64,
    /// Exact monic factor over the rationals (linear or irreducible
    /// quadratic) when known.
    pub factor: Option<UPoly<T>>,
    /// Algebraic multiplicity per vertex; 0 where absent.
    pub multiplicities: Vec<usize>,
    /// Largest distance of a member eigenvalue from `re + i im`.
    pub radius: f64,
    member_re: Vec<f64>,
}

impl<T: Scalar> SpectralCluster<T> {
    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }

    /// Dimension of the real generalized eigenspace at vertex `v`.
    pub fn real_dim(&self, v: usize) -> usize {
        self.multiplicities[v] * if self.is_real() { 1 } else { 2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub clusters: Vec<SpectralCluster<T>>,
    /// True when clusters come from exact factors.
    pub exact: bool,
    pub scale: f64,
    /// Pairs of clusters closer than the resolution.
    pub unresolved: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

fn tuple_scale<T: Scalar>(l: &EndomorphismTuple<T>) -> f64 {
    l.iter().map(|m| m.max_abs()).fold(1.0, f64::max)
}

fn companion(p: &UPoly<f64>) -> Matrix<f64> {
    let d = p.degree();
    let lead = p.leading();
    Matrix::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -p.coeffs()[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    })
}

fn float_roots(p: &UPoly<f64>) -> Vec<Eig> {
    if p.degree() == 0 {
        return vec![];
    }
    RealSchur::new(&companion(p)).eigenvalues()
}

fn exact_candidates<T: Scalar>(x: f64) -> Vec<T> {
    let mut out = Vec::new();
    let mut den = 1i64;
    for _ in 0..13 {
        if let Some(r) = rationalize(x, den) {
            let t: T = convert(&r);
            if !out.contains(&t) {
                out.push(t);
            }
        }
        den *= 10;
    }
    out
}

/// Splits a squarefree rational polynomial into monic linear and
/// irreducible quadratic factors, or `None` if some factor is out of reach.
fn rational_factors<T: Scalar>(q: &UPoly<T>) -> Option<Vec<UPoly<T>>> {
    let mut rest = q.monic();
    let mut factors = Vec::new();
    let roots = float_roots(&rest.to_f64());
    for e in roots {
        if rest.degree() == 0 {
            break;
        }
        if e.im.abs() <= 1e-7 * (1.0 + e.re.abs()) {
            for r in exact_candidates::<T>(e.re) {
                let f = UPoly::linear_root(r);
                let (quo, rem) = rest.divrem(&f);
                if rem.is_zero() {
                    rest = quo;
                    factors.push(f);
                    break;
                }
            }
        } else if e.im > 0.0 {
            'outer: for s in exact_candidates::<T>(-2.0 * e.re) {
                for p in exact_candidates::<T>(e.re * e.re + e.im * e.im) {
                    let f = UPoly::new(vec![p, s.clone(), T::one()]);
                    let (quo, rem) = rest.divrem(&f);
                    if rem.is_zero() {
                        rest = quo;
                        factors.push(f);
                        break 'outer;
                    }
                }
            }
        }
    }
    (rest.degree() == 0).then_some(factors)
}

fn factor_value<T: Scalar>(f: &UPoly<T>) -> (f64, f64) {
    let c = f.to_f64();
    if f.degree() == 1 {
        (-c.coeffs()[0], 0.0)
    } else {
        let re = -0.5 * c.coeffs()[1];
        (re, (c.coeffs()[0] - re * re).max(0.0).sqrt())
    }
}

fn exact_spectrum<T: Scalar>(l: &EndomorphismTuple<T>) -> Option<Spectrum<T>> {
    let chis: Vec<UPoly<T>> = l.iter().map(char_poly).collect();
    let mut factors: Vec<UPoly<T>> = Vec::new();
    for chi in &chis {
        if chi.degree() == 0 {
            continue;
        }
        for f in rational_factors(&chi.squarefree_part())? {
            if !factors.contains(&f) {
                factors.push(f);
            }
        }
    }
    let mut clusters: Vec<SpectralCluster<T>> = factors
        .into_iter()
        .map(|f| {
            let (re, im) = factor_value(&f);
            let multiplicities = chis.iter().map(|c| if c.degree() == 0 { 0 } else { c.multiplicity_of(&f) }).collect();
            SpectralCluster { re, im, factor: Some(f), multiplicities, radius: 0.0, member_re: vec![re] }
        })
        .collect();
    clusters.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Some(Spectrum { clusters, exact: true, scale: tuple_scale(l), unresolved: vec![], warnings: vec![] })
}

/// Merge threshold for a cluster whose largest per-vertex multiplicity is
/// `m`: a defective eigenvalue of multiplicity `m` is perturbed by about
/// `eps^(1/m)`. Capped at `MAX_DEFECT` so that large multiplicities do
/// not chain distinct eigenvalues together.
fn merge_threshold(m: usize, scale: f64) -> f64 {
    let defect = (1e3 * f64::EPSILON).powf(1.0 / m.max(1) as f64).min(MAX_DEFECT);
    EPS_EIG.max(defect) * scale
}

fn float_spectrum<T: Scalar>(l: &EndomorphismTuple<T>) -> Spectrum<T> {
    let scale = tuple_scale(l);
    let nv = l.len();
    let mut points: Vec<(Eig, usize)> = Vec::new();
    for (v, m) in l.iter().enumerate() {
        for e in RealSchur::new(&m.to_f64()).eigenvalues() {
            points.push((e, v));
        }
    }
    let max_mult = |g: &[usize]| -> usize {
        (0..nv).map(|v| g.iter().filter(|&&i| points[i].1 == v).count()).max().unwrap_or(0)
    };
    let centroid = |g: &[usize]| -> (f64, f64) {
        let n = g.len() as f64;
        (g.iter().map(|&i| points[i].0.re).sum::<f64>() / n, g.iter().map(|&i| points[i].0.im).sum::<f64>() / n)
    };
    let components = |idx: &[usize], thr: f64| -> Vec<Vec<usize>> {
        let mut label: Vec<usize> = (0..idx.len()).collect();
        for a in 0..idx.len() {
            for b in a + 1..idx.len() {
                let (ea, eb) = (points[idx[a]].0, points[idx[b]].0);
                if (ea.re - eb.re).hypot(ea.im - eb.im) <= thr {
                    let (la, lb) = (label[a], label[b]);
                    label.iter_mut().filter(|l| **l == lb).for_each(|l| *l = la);
                }
            }
        }
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut seen: Vec<usize> = Vec::new();
        for (k, &l) in label.iter().enumerate() {
            match seen.iter().position(|&s| s == l) {
                Some(p) => out[p].push(idx[k]),
                None => {
                    seen.push(l);
                    out.push(vec![idx[k]]);
                }
            }
        }
        out
    };
    // link at the threshold of the largest possible multiplicity, then
    // re-split each component at the threshold its own multiplicity allows
    let mut groups = Vec::new();
    let all: Vec<usize> = (0..points.len()).collect();
    let mut stack = vec![(all.clone(), max_mult(&all))];
    while let Some((idx, cap)) = stack.pop() {
        for comp in components(&idx, merge_threshold(cap, scale)) {
            let m = max_mult(&comp);
            if m >= cap || components(&comp, merge_threshold(m, scale)).len() == 1 {
                groups.push(comp);
            } else {
                stack.push((comp, m));
            }
        }
    }
    groups.sort();
    let mut clusters = Vec::new();
    let mut thresholds = Vec::new();
    for g in &groups {
        let (re, mut im) = centroid(g);
        let thr = merge_threshold(max_mult(g), scale);
        if im < -thr {
            continue;
        }
        if im.abs() <= thr {
            im = 0.0;
        }
        let multiplicities = (0..nv).map(|v| g.iter().filter(|&&i| points[i].1 == v).count()).collect();
        let radius = g.iter().map(|&i| (points[i].0.re - re).hypot(points[i].0.im.abs() - im)).fold(0.0, f64::max);
        let member_re = g.iter().map(|&i| points[i].0.re).collect();
        clusters.push(SpectralCluster { re, im, factor: None, multiplicities, radius, member_re });
        thresholds.push(thr);
    }
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| clusters[a].re.total_cmp(&clusters[b].re).then(clusters[a].im.total_cmp(&clusters[b].im)));
    let clusters: Vec<SpectralCluster<T>> = order.iter().map(|&i| clusters[i].clone()).collect();
    let thresholds: Vec<f64> = order.iter().map(|&i| thresholds[i]).collect();
    let mut unresolved = Vec::new();
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            let d = (clusters[a].re - clusters[b].re).hypot(clusters[a].im - clusters[b].im);
            if d < 10.0 * thresholds[a].max(thresholds[b]) {
                unresolved.push((a, b));
            }
        }
    }
    Spectrum { clusters, exact: false, scale, unresolved, warnings: vec![] }
}

/// Eigenvalues of all `L_v` pooled into clusters with per-vertex
/// multiplicities.
pub fn joint_spectrum<T: Scalar>(l: &EndomorphismTuple<T>) -> Spectrum<T> {
    if T::EXACT {
        if let Some(s) = exact_spectrum(l) {
            return s;
        }
        let mut s = float_spectrum(l);
        s.warnings.push("characteristic polynomial does not split over the rationals; using floating point".into());
        return s;
    }
    float_spectrum(l)
}

/// A pair of complementary subrepresentations with the projectors onto
/// the first along the second.
#[derive(Clone, Debug, PartialEq)]
pub struct Split<T> {
    pub selected: Subrepresentation<T>,
    pub complement: Subrepresentation<T>,
    pub projectors: Vec<Matrix<T>>,
}

impl<T: Scalar> Split<T> {
    /// `max_a |R_a pi_s - pi_t R_a|`.
    pub fn projector_residual(&self, rep: &Representation<T>) -> f64 {
        crate::quiver::endomorphism_residual(rep, &self.projectors).iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

fn subrep_tol<T: Scalar>(spec: &Spectrum<T>) -> f64 {
    if T::EXACT {
        0.0
    } else {
        1e-8 * spec.scale
    }
}

fn float_bases(m: &Matrix<f64>, spec_clusters: &[(f64, f64)], selected: &[usize]) -> Option<(Matrix<f64>, Matrix<f64>)> {
    let nearest = |e: Eig| -> usize {
        (0..spec_clusters.len())
            .min_by(|&a, &b| {
                let da = (spec_clusters[a].0 - e.re).hypot(spec_clusters[a].1 - e.im.abs());
                let db = (spec_clusters[b].0 - e.re).hypot(spec_clusters[b].1 - e.im.abs());
                da.total_cmp(&db)
            })
            .unwrap()
    };
    let n = m.rows();
    let mut s1 = RealSchur::new(m);
    let k = s1.reorder(|e| selected.contains(&nearest(e)))?;
    let mut s2 = RealSchur::new(m);
    let k2 = s2.reorder(|e| !selected.contains(&nearest(e)))?;
    (k + k2 == n).then(|| (s1.leading_basis(k), s2.leading_basis(k2)))
}

/// Splits off the sum of the generalized eigenspaces of the chosen
/// clusters, with the complementary sum of the others.
pub fn invariant_split<T: Scalar>(
    rep: &Representation<T>,
    l: &EndomorphismTuple<T>,
    spec: &Spectrum<T>,
    selected: &[usize],
) -> Result<Split<T>, SpectralError> {
    check_shapes(rep, l)?;
    for &(a, b) in &spec.unresolved {
        if selected.contains(&a) != selected.contains(&b) {
            let c = &spec.clusters[a];
            return Err(SpectralError::ClusterSplit { re: c.re, im: c.im });
        }
    }
    let mut bases = Vec::new();
    let mut comps = Vec::new();
    for (v, lv) in l.iter().enumerate() {
        let n = lv.rows();
        let want: usize = selected.iter().map(|&c| spec.clusters[c].real_dim(v)).sum();
        let (b, c) = if spec.exact {
            let mut sel = Matrix::identity(n);
            for &c in selected {
                let cl = &spec.clusters[c];
                if cl.multiplicities[v] > 0 {
                    let f = cl.factor.as_ref().expect("exact cluster").pow(cl.multiplicities[v]);
                    sel = sel.mul(&f.eval_matrix(lv));
                }
            }
            (sel.nullspace(0.0), sel.column_space(0.0))
        } else {
            let reps: Vec<(f64, f64)> = spec.clusters.iter().map(|c| (c.re, c.im)).collect();
            let lf = lv.to_f64();
            let Some((b, c)) = float_bases(&lf, &reps, selected) else {
                let c = &spec.clusters[selected.first().copied().unwrap_or(0)];
                return Err(SpectralError::ClusterSplit { re: c.re, im: c.im });
            };
            (b.map(|x| T::from_f64(*x)), c.map(|x| T::from_f64(*x)))
        };
        if b.cols() != want {
            let c = &spec.clusters[selected.first().copied().unwrap_or(0)];
            return Err(SpectralError::ClusterSplit { re: c.re, im: c.im });
        }
        bases.push(b);
        comps.push(c);
    }
    finish_split(rep, bases, comps, subrep_tol(spec))
}

fn finish_split<T: Scalar>(
    rep: &Representation<T>,
    bases: Vec<Matrix<T>>,
    comps: Vec<Matrix<T>>,
    tol: f64,
) -> Result<Split<T>, SpectralError> {
    let mut projectors = Vec::new();
    for (b, c) in bases.iter().zip(&comps) {
        let n = b.rows();
        let k = b.cols();
        let full = b.hstack(c);
        let inv = full.inverse(if T::EXACT { 0.0 } else { 1e-12 }).ok_or_else(|| SpectralError::IllConditioned {
            cond: dense::cond(&full.to_f64()),
        })?;
        projectors.push(b.mul(&inv.block(0, 0, k, n)));
    }
    Ok(Split {
        selected: Subrepresentation::from_bases(rep, bases, tol)?,
        complement: Subrepresentation::from_bases(rep, comps, tol)?,
        projectors,
    })
}

/// Exact split `ker s_v(L_v) (+) im s_v(L_v)` for selector polynomials
/// `s_v` whose roots are exactly the wanted eigenvalues, with full
/// multiplicity.
fn selector_split<T: Scalar>(
    rep: &Representation<T>,
    l: &EndomorphismTuple<T>,
    selectors: &[UPoly<T>],
) -> Result<Split<T>, SpectralError> {
    let mut bases = Vec::new();
    let mut comps = Vec::new();
    for (lv, sel) in l.iter().zip(selectors) {
        let m = sel.eval_matrix(lv);
        bases.push(m.nullspace(0.0));
        comps.push(m.column_space(0.0));
    }
    finish_split(rep, bases, comps, 0.0)
}

fn reflect<T: Scalar>(p: &UPoly<T>) -> UPoly<T> {
    UPoly::new(p.coeffs().iter().enumerate().map(|(i, c)| if i % 2 == 1 { -c.clone() } else { c.clone() }).collect())
}

/// Product of the factors of `chi` with roots on the imaginary axis, or
/// `None` when that cannot be decided exactly.
fn axis_part<T: Scalar>(chi: &UPoly<T>, scale: f64) -> Result<Option<UPoly<T>>, SpectralError> {
    if chi.degree() == 0 {
        return Ok(Some(UPoly::one()));
    }
    let sf = chi.squarefree_part();
    let c = sf.gcd(&reflect(&sf));
    let rest = sf.divrem(&c).0;
    for e in float_roots(&rest.to_f64()) {
        if e.re.abs() < EPS_AXIS * scale {
            return Err(SpectralError::AxisAmbiguous { re: e.re, im: e.im });
        }
    }
    if c.degree() == 0 {
        return Ok(Some(UPoly::one()));
    }
    if let Some(fs) = rational_factors(&c) {
        let mut out = UPoly::one();
        for f in fs {
            let axis = if f.degree() == 1 { f.coeffs()[0].is_zero() } else { f.coeffs()[1].is_zero() };
            if axis {
                out = out.mul(&f);
            }
        }
        return Ok(Some(out));
    }
    let roots = float_roots(&c.to_f64());
    let on: Vec<bool> = roots.iter().map(|e| e.re.abs() < EPS_AXIS * scale).collect();
    if on.iter().all(|&b| b) {
        Ok(Some(c))
    } else if on.iter().all(|&b| !b) {
        Ok(Some(UPoly::one()))
    } else {
        Ok(None)
    }
}

/// Generalized eigenspace of one cluster at every vertex.
pub fn generalized_eigenspace_subrep<T: Scalar>(
    rep: &Representation<T>,
    l: &EndomorphismTuple<T>,
    spec: &Spectrum<T>,
    cluster: usize,
) -> Result<Subrepresentation<T>, SpectralError> {
    Ok(invariant_split(rep, l, spec, &[cluster])?.selected)
}

fn on_axis<T: Scalar>(c: &SpectralCluster<T>) -> bool {
    match &c.factor {
        Some(f) if f.degree() == 1 => f.coeffs()[0].is_zero(),
        Some(f) => f.coeffs()[1].is_zero(),
        None => c.re.abs() < EPS_AXIS,
    }
}

fn is_zero_cluster<T: Scalar>(c: &SpectralCluster<T>) -> bool {
    match &c.factor {
        Some(f) => f.degree() == 1 && f.coeffs()[0].is_zero(),
        None => c.is_real() && c.re.abs() < EPS_EIG,
    }
}

/// Center (`Re = 0`) and hyperbolic parts.
pub fn center_hyperbolic_split<T: Scalar>(rep: &Representation<T>, l: &EndomorphismTuple<T>) -> Result<Split<T>, SpectralError> {
    check_shapes(rep, l)?;
    if T::EXACT {
        let scale = tuple_scale(l);
        let mut selectors = Some(Vec::new());
        for lv in l {
            let chi = char_poly(lv);
            match (axis_part(&chi, scale)?, selectors.as_mut()) {
                (Some(a), Some(sel)) => sel.push(a.pow(lv.rows().max(1))),
                _ => selectors = None,
            }
        }
        if let Some(sel) = selectors {
            return selector_split(rep, l, &sel);
        }
    }
    let spec = joint_spectrum(l);
    let mut selected = Vec::new();
    for (i, c) in spec.clusters.iter().enumerate() {
        let centre = on_axis(c);
        if c.factor.is_none() && c.member_re.iter().any(|r| (r.abs() < EPS_AXIS * spec.scale) != centre) {
            return Err(SpectralError::AxisAmbiguous { re: c.re, im: c.im });
        }
        if centre {
            selected.push(i);
        }
    }
    invariant_split(rep, l, &spec, &selected)
}

/// Generalized kernel and reduced image.
pub fn kernel_image_split<T: Scalar>(rep: &Representation<T>, l: &EndomorphismTuple<T>) -> Result<Split<T>, SpectralError> {
    check_shapes(rep, l)?;
    if T::EXACT {
        let x = UPoly::linear_root(T::zero());
        let selectors: Vec<UPoly<T>> = l
            .iter()
            .map(|lv| {
                let chi = char_poly(lv);
                if chi.degree() == 0 {
                    UPoly::one()
                } else {
                    x.pow(chi.multiplicity_of(&x))
                }
            })
            .collect();
        return selector_split(rep, l, &selectors);
    }
    let spec = joint_spectrum(l);
    let mut selected = Vec::new();
    for (i, c) in spec.clusters.iter().enumerate() {
        let zero = is_zero_cluster(c);
        if !zero && c.re.hypot(c.im) - c.radius < EPS_EIG * spec.scale {
            return Err(SpectralError::AxisAmbiguous { re: c.re, im: c.im });
        }
        if zero {
            selected.push(i);
        }
    }
    invariant_split(rep, l, &spec, &selected)
}

fn newton_semisimple<T: Scalar>(l: &Matrix<T>, q: &UPoly<T>) -> Result<Matrix<T>, SpectralError> {
    let dq = q.derivative();
    let mut s = l.clone();
    let scale = l.max_abs().max(1.0);
    for _ in 0..64 {
        let qs = q.eval_matrix(&s);
        if T::EXACT && qs.is_zero() {
            return Ok(s);
        }
        let d = dq.eval_matrix(&s);
        let inv = if T::EXACT {
            d.inverse(0.0)
        } else {
            let c = dense::cond(&d.to_f64());
            if c > 1e12 {
                return Err(SpectralError::IllConditioned { cond: c });
            }
            d.inverse(0.0)
        };
        let inv = inv.ok_or(SpectralError::IllConditioned { cond: f64::INFINITY })?;
        let step = qs.mul(&inv);
        s = s.sub(&step);
        if !T::EXACT && step.max_abs() <= 1e-15 * scale {
            return Ok(s);
        }
    }
    if T::EXACT {
        Err(SpectralError::IllConditioned { cond: f64::INFINITY })
    } else {
        Ok(s)
    }
}

/// Jordan-Chevalley decomposition `L = L^S + L^N` at every vertex.
pub fn sn_decomposition<T: Scalar>(l: &EndomorphismTuple<T>) -> Result<(EndomorphismTuple<T>, EndomorphismTuple<T>), SpectralError> {
    let spec = if T::EXACT { None } else { Some(joint_spectrum(l)) };
    let mut ss = Vec::new();
    let mut ns = Vec::new();
    for (v, lv) in l.iter().enumerate() {
        if lv.rows() == 0 {
            ss.push(lv.clone());
            ns.push(lv.clone());
            continue;
        }
        let q: UPoly<T> = match &spec {
            None => char_poly(lv).squarefree_part(),
            Some(spec) => {
                let mut q = UPoly::one();
                for c in spec.clusters.iter().filter(|c| c.multiplicities[v] > 0) {
                    let f = if c.is_real() {
                        UPoly::new(vec![T::from_f64(-c.re), T::one()])
                    } else {
                        UPoly::new(vec![T::from_f64(c.re * c.re + c.im * c.im), T::from_f64(-2.0 * c.re), T::one()])
                    };
                    q = q.mul(&f);
                }
                q
            }
        };
        let s = newton_semisimple(lv, &q)?;
        ns.push(lv.sub(&s));
        ss.push(s);
    }
    Ok((ss, ns))
}

/// Jordan-Chevalley axioms for `L = S + N`, scaled by `max(1, |L|)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnReport {
    pub sum_residual: f64,
    pub commutator: f64,
    /// `|N^n|` at each vertex, maximized.
    pub nilpotency: f64,
    /// `|q(S)|` for the squarefree annihilator `q` of the spectrum.
    pub semisimplicity: f64,
    pub s_endomorphism: f64,
    pub n_endomorphism: f64,
    pub passed: bool,
}

pub fn check_sn<T: Scalar>(
    rep: &Representation<T>,
    l: &EndomorphismTuple<T>,
    s: &EndomorphismTuple<T>,
    n: &EndomorphismTuple<T>,
    tol: f64,
) -> Result<SnReport, SpectralError> {
    let (mut sum, mut comm, mut nil, mut semi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for v in 0..l.len() {
        let dim = l[v].rows();
        if dim == 0 {
            continue;
        }
        let scale = l[v].max_abs().max(1.0);
        sum = sum.max(l[v].sub(&s[v].add(&n[v])).max_abs() / scale);
        comm = comm.max(s[v].mul(&n[v]).sub(&n[v].mul(&s[v])).max_abs() / (scale * scale));
        nil = nil.max(n[v].pow(dim).max_abs() / scale.powi(dim as i32));
        let q = if T::EXACT {
            char_poly(&s[v]).squarefree_part()
        } else {
            let spec = joint_spectrum(&vec![s[v].clone()]);
            spec.clusters.iter().fold(UPoly::one(), |q, c| {
                q.mul(&if c.is_real() {
                    UPoly::new(vec![T::from_f64(-c.re), T::one()])
                } else {
                    UPoly::new(vec![T::from_f64(c.re * c.re + c.im * c.im), T::from_f64(-2.0 * c.re), T::one()])
                })
            })
        };
        semi = semi.max(q.eval_matrix(&s[v]).max_abs() / scale.powi(q.degree() as i32));
    }
    let se = check_endomorphism(rep, s, tol)?;
    let ne = check_endomorphism(rep, n, tol)?;
    let ok = |x: f64| if T::EXACT { x == 0.0 } else { x <= tol };
    let passed = ok(sum) && ok(comm) && ok(nil) && ok(semi) && se.passed && ne.passed;
    Ok(SnReport {
        sum_residual: sum,
        commutator: comm,
        nilpotency: nil,
        semisimplicity: semi,
        s_endomorphism: se.max_residual,
        n_endomorphism: ne.max_residual,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    fn single(dim: usize) -> Representation<Rational> {
        Representation::from_parts(vec![("v".into(), dim)], vec![]).unwrap()
    }

    #[test]
    fn jordan_block_sn() {
        let l = vec![Matrix::<Rational>::from_i64_rows(&[&[3, 1], &[0, 3]])];
        let (s, n) = sn_decomposition(&l).unwrap();
        assert_eq!(s[0], Matrix::identity(2).scale(&q(3)));
        assert_eq!(n[0], Matrix::from_i64_rows(&[&[0, 1], &[0, 0]]));
        let lf = vec![l[0].to_f64()];
        let (sf, nf) = sn_decomposition(&lf).unwrap();
        assert!(sf[0].sub(&Matrix::identity(2).scale(&3.0)).max_abs() < 1e-8);
        assert!(nf[0].mul(&nf[0]).max_abs() < 1e-8);
        let rep = single(2);
        assert!(check_sn(&rep, &l, &s, &n, 0.0).unwrap().passed);
        assert!(check_sn(&rep.cast(), &lf, &sf, &nf, 1e-8).unwrap().passed);
        // L itself is not semisimple
        let zero = vec![Matrix::zeros(2, 2)];
        assert!(!check_sn(&rep, &l, &l, &zero, 0.0).unwrap().passed);
    }

    #[test]
    fn generalized_kernel_of_jordan_block() {
        let rep = single(3);
        let l = vec![Matrix::<Rational>::from_i64_rows(&[&[0, 1, 0], &[0, 0, 0], &[0, 0, 2]])];
        let split = kernel_image_split(&rep, &l).unwrap();
        assert_eq!(split.selected.dims(), vec![2]);
        assert_eq!(split.complement.dims(), vec![1]);
        let lf = vec![l[0].to_f64()];
        let split = kernel_image_split(&rep.cast::<f64>(), &lf).unwrap();
        assert_eq!(split.selected.dims(), vec![2]);
    }

    #[test]
    fn complex_pair_exact_and_float() {
        // rotation block plus a hyperbolic direction
        let m = Matrix::<Rational>::from_i64_rows(&[&[0, -2, 0], &[2, 0, 0], &[1, 0, -1]]);
        let spec = joint_spectrum(&vec![m.clone()]);
        assert!(spec.exact);
        assert_eq!(spec.clusters.len(), 2);
        let split = center_hyperbolic_split(&single(3), &vec![m.clone()]).unwrap();
        assert_eq!(split.selected.dims(), vec![2]);
        let p = &split.projectors[0];
        assert_eq!(p.mul(p), *p);
        let fsplit = center_hyperbolic_split(&single(3).cast::<f64>(), &vec![m.to_f64()]).unwrap();
        assert_eq!(fsplit.selected.dims(), vec![2]);
        let pf = &fsplit.projectors[0];
        assert!(pf.mul(pf).sub(pf).max_abs() < 1e-10);
        assert!(pf.sub(&p.to_f64()).max_abs() < 1e-10);
    }

    #[test]
    fn exact_kernel_with_irrational_rest() {
        // x^2 (x^2 + x - 1)
        let m = Matrix::<Rational>::from_i64_rows(&[&[0, 1, 0, 0], &[0, 0, 0, 0], &[0, 0, 0, 1], &[0, 0, 1, -1]]);
        let split = kernel_image_split(&single(4), &vec![m.clone()]).unwrap();
        assert_eq!(split.selected.dims(), vec![2]);
        let split = center_hyperbolic_split(&single(4), &vec![m]).unwrap();
        assert_eq!(split.selected.dims(), vec![2]);
    }

    #[test]
    fn irrational_roots_fall_back() {
        let m = Matrix::<Rational>::from_i64_rows(&[&[0, 2], &[1, 0]]);
        let spec = joint_spectrum(&vec![m]);
        assert!(!spec.exact);
        assert_eq!(spec.warnings.len(), 1);
        assert_eq!(spec.clusters.len(), 2);
    }
}
