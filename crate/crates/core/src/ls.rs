//! Lyapunov-Schmidt reduction on every vertex of a tuple, with Newton-backed
//! evaluators for the implicit maps `phi_v` and reduced maps `f_v`, and
//! one-parameter branch extraction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::poly::{Poly, PolyMap};
use crate::quiver::{PolyMapTuple, QuiverError};
use crate::scalar::Scalar;
use crate::spectral::{kernel_image_split, SpectralError, Split};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LsError {
    #[error("base point is not an equilibrium at `{vertex}` (residual {residual:e})")]
    NotEquilibrium { vertex: String, residual: f64 },
    #[error("image block at `{vertex}` is singular")]
    SingularImageBlock { vertex: String },
    #[error("Newton iteration for phi diverged at `{vertex}` (residual {residual:e})")]
    NewtonDiverged { vertex: String, residual: f64 },
    #[error("no common neighbourhood found down to radius {radius:e}")]
    DomainTooSmall { radius: f64 },
    #[error("branch tracing needs one parameter and kernel dimension at most 3")]
    Unsupported,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonSettings {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings { max_iter: 50, tol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
struct VertexLs {
    name: String,
    field: PolyMap<f64>,
    jac: Vec<Vec<Poly<f64>>>,
    base: Vec<f64>,
    kernel: Matrix<f64>,
    image: Matrix<f64>,
    pk: Matrix<f64>,
    pw: Matrix<f64>,
    radius: f64,
}

/// Reduction of `F(x; lambda) = 0` near `(base; lambda0)`.
#[derive(Clone, Debug)]
pub struct LsReduction<T> {
    /// Generalized kernel (`selected`) and reduced image (`complement`).
    pub split: Split<T>,
    pub lambda0: Vec<f64>,
    pub newton: NewtonSettings,
    vertices: Vec<VertexLs>,
}

fn solve_small(a: &Matrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    if a.rows() == 0 {
        return Some(vec![]);
    }
    let lu = crate::linalg::dense::to_na(a).lu();
    let x = lu.solve(&nalgebra::DVector::from_column_slice(b))?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn ls_reduce<T: Scalar>(
    f: &PolyMapTuple<T>,
    base: &[Vec<T>],
    lambda0: &[T],
    newton: NewtonSettings,
) -> Result<LsReduction<T>, LsError> {
    let rep = f.rep();
    let mut linear = Vec::new();
    for (v, field) in f.fields().iter().enumerate() {
        let r = field.eval(&base[v], lambda0);
        let residual = r.iter().map(|x| x.magnitude()).fold(0.0, f64::max);
        if residual > if T::EXACT { 0.0 } else { 1e-10 } {
            return Err(LsError::NotEquilibrium { vertex: rep.quiver().vertices()[v].clone(), residual });
        }
        linear.push(field.jacobian_at(&base[v], lambda0));
    }
    let split = kernel_image_split(rep, &linear)?;
    let lam0: Vec<f64> = lambda0.iter().map(|x| x.to_f64()).collect();
    let mut vertices = Vec::new();
    for (v, field) in f.fields().iter().enumerate() {
        let name = rep.quiver().vertices()[v].clone();
        let n = field.state_dim();
        let fl: PolyMap<f64> = field.cast();
        let jac = fl.outputs().iter().map(|p| (0..n).map(|j| p.derivative(j)).collect()).collect();
        let kernel = split.selected.bases[v].to_f64();
        let image = split.complement.bases[v].to_f64();
        let k = kernel.cols();
        let inv = kernel
            .hstack(&image)
            .inverse(0.0)
            .ok_or_else(|| LsError::SingularImageBlock { vertex: name.clone() })?;
        let pk = inv.block(0, 0, k, n);
        let pw = inv.block(k, 0, n - k, n);
        let block = pw.mul(&linear[v].to_f64()).mul(&image);
        let radius = if block.rows() == 0 {
            0.1
        } else {
            let binv = block.inverse(0.0).ok_or_else(|| LsError::SingularImageBlock { vertex: name.clone() })?;
            let op_norm = crate::linalg::dense::svd(&binv).sigma.first().copied().unwrap_or(0.0);
            0.1 / op_norm.max(1.0)
        };
        vertices.push(VertexLs {
            name,
            field: fl,
            jac,
            base: base[v].iter().map(|x| x.to_f64()).collect(),
            kernel,
            image,
            pk,
            pw,
            radius,
        });
    }
    Ok(LsReduction { split, lambda0: lam0, newton, vertices })
}

impl<T: Scalar> LsReduction<T> {
    pub fn kernel_dims(&self) -> Vec<usize> {
        self.split.selected.dims()
    }

    /// Heuristic neighbourhood radius per vertex.
    pub fn radius(&self, v: usize) -> f64 {
        self.vertices[v].radius
    }

    pub fn min_radius(&self) -> f64 {
        self.vertices.iter().map(|x| x.radius).fold(f64::INFINITY, f64::min)
    }

    fn point(&self, v: usize, xi: &[f64], eta: &[f64]) -> Vec<f64> {
        let d = &self.vertices[v];
        let a = d.kernel.mul_vec(xi);
        let b = d.image.mul_vec(eta);
        d.base.iter().zip(a.iter().zip(&b)).map(|(x, (p, q))| x + p + q).collect()
    }

    fn full_lambda(&self, lambda: &[f64]) -> Vec<f64> {
        self.lambda0.iter().zip(lambda).map(|(a, b)| a + b).collect()
    }

    /// `eta = phi_v(xi; lambda)` with `lambda` measured from `lambda0`.
    pub fn phi(&self, v: usize, xi: &[f64], lambda: &[f64]) -> Result<Vec<f64>, LsError> {
        let d = &self.vertices[v];
        let m = d.image.cols();
        if m == 0 {
            return Ok(vec![]);
        }
        let lam = self.full_lambda(lambda);
        let resid = |eta: &[f64]| d.pw.mul_vec(&d.field.eval_f64(&self.point(v, xi, eta), &lam));
        let mut eta = vec![0.0; m];
        let mut r = resid(&eta);
        let mut polish = 0;
        for _ in 0..self.newton.max_iter + 3 {
            let rn = norm(&r);
            if rn <= self.newton.tol {
                polish += 1;
                if polish > 2 || rn == 0.0 {
                    return Ok(eta);
                }
            }
            let x = self.point(v, xi, &eta);
            let pt: Vec<f64> = x.iter().chain(&lam).copied().collect();
            let n = x.len();
            let jf = Matrix::from_fn(n, n, |i, j| d.jac[i][j].eval_f64(&pt));
            let j = d.pw.mul(&jf).mul(&d.image);
            let Some(mut step) = solve_small(&j, &r) else {
                return Err(LsError::NewtonDiverged { vertex: d.name.clone(), residual: rn });
            };
            let sn = norm(&step);
            if sn > d.radius {
                step.iter_mut().for_each(|s| *s *= d.radius / sn);
            }
            let mut alpha = 1.0;
            loop {
                let trial: Vec<f64> = eta.iter().zip(&step).map(|(e, s)| e - alpha * s).collect();
                let rt = resid(&trial);
                if norm(&rt) < rn || alpha < 1e-4 || rn <= self.newton.tol {
                    if polish > 0 && norm(&rt) >= rn {
                        return Ok(eta);
                    }
                    eta = trial;
                    r = rt;
                    break;
                }
                alpha *= 0.5;
            }
        }
        let rn = norm(&r);
        if rn <= self.newton.tol {
            Ok(eta)
        } else {
            Err(LsError::NewtonDiverged { vertex: d.name.clone(), residual: rn })
        }
    }

    /// Full-space point `base + K xi + W phi(xi)`.
    pub fn lift(&self, v: usize, xi: &[f64], lambda: &[f64]) -> Result<Vec<f64>, LsError> {
        let eta = self.phi(v, xi, lambda)?;
        Ok(self.point(v, xi, &eta))
    }

    /// Reduced map `f_v(xi; lambda)` in kernel coordinates.
    pub fn reduced(&self, v: usize, xi: &[f64], lambda: &[f64]) -> Result<Vec<f64>, LsError> {
        let x = self.lift(v, xi, lambda)?;
        let d = &self.vertices[v];
        Ok(d.pk.mul_vec(&d.field.eval_f64(&x, &self.full_lambda(lambda))))
    }

    /// Central-difference `d f_v[i] / d xi[j]`.
    pub fn reduced_partial(&self, v: usize, xi: &[f64], lambda: &[f64], i: usize, j: usize, h: f64) -> Result<f64, LsError> {
        let mut a = xi.to_vec();
        let mut b = xi.to_vec();
        a[j] += h;
        b[j] -= h;
        Ok((self.reduced(v, &a, lambda)?[i] - self.reduced(v, &b, lambda)?[i]) / (2.0 * h))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedEquivarianceReport {
    pub residuals: Vec<(String, f64)>,
    pub max_residual: f64,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub passed: bool,
}

/// Samples `C_a f_s(xi; lambda) - f_t(C_a xi; lambda)` on every arrow.
pub fn check_reduced_equivariance<T: Scalar>(
    red: &LsReduction<T>,
    f: &PolyMapTuple<T>,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ReducedEquivarianceReport, LsError> {
    let p = red.lambda0.len();
    let mut radius = 0.5 * red.min_radius();
    'shrink: for _ in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut residuals = Vec::new();
        for (a, arrow) in f.rep().quiver().arrows().iter().enumerate() {
            let c = red.split.selected.coords[a].to_f64();
            let ks = c.cols();
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let xi: Vec<f64> = (0..ks).map(|_| rng.gen_range(-radius..=radius) / (ks.max(1) as f64).sqrt()).collect();
                let lam: Vec<f64> = (0..p).map(|_| rng.gen_range(-radius..=radius)).collect();
                let (Ok(fs), Ok(ft)) = (red.reduced(arrow.source, &xi, &lam), red.reduced(arrow.target, &c.mul_vec(&xi), &lam))
                else {
                    radius *= 0.5;
                    continue 'shrink;
                };
                let lhs = c.mul_vec(&fs);
                for (x, y) in lhs.iter().zip(&ft) {
                    worst = worst.max((x - y).abs());
                }
            }
            residuals.push((arrow.id.clone(), worst));
        }
        let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
        return Ok(ReducedEquivarianceReport { residuals, max_residual, radius, samples, seed, passed: max_residual <= tol });
    }
    Err(LsError::DomainTooSmall { radius })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub id: usize,
    /// `"+"`, `"-"` or `"+-"`: sides of `lambda0` where the branch exists.
    pub sides: String,
    /// Fitted exponent `q` in `xi ~ c |lambda|^q`, snapped to 1 or 1/2.
    pub exponent: Option<f64>,
    pub raw_exponent: f64,
    /// Per kernel coordinate: `xi_j ~ c_j lambda` (q = 1) or
    /// `c_j sqrt|lambda|` (q = 1/2).
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub classified: bool,
    /// `(lambda, xi)` samples.
    pub points: Vec<(f64, Vec<f64>)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchSettings {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
}

impl Default for BranchSettings {
    fn default() -> Self {
        BranchSettings { lambda_min: 1e-4, lambda_max: 1e-2, points: 20 }
    }
}

fn newton_reduced<T: Scalar>(red: &LsReduction<T>, v: usize, start: &[f64], lam: f64) -> Option<Vec<f64>> {
    let k = start.len();
    let scale = lam.abs();
    let h = 1e-4 * scale;
    let mut xi = start.to_vec();
    for _ in 0..60 {
        let fx = red.reduced(v, &xi, &[lam]).ok()?;
        let mut j = Matrix::zeros(k, k);
        for c in 0..k {
            for r in 0..k {
                j[(r, c)] = red.reduced_partial(v, &xi, &[lam], r, c, h).ok()?;
            }
        }
        let step = solve_small(&j, &fx)?;
        xi.iter_mut().zip(&step).for_each(|(x, s)| *x -= s);
        if norm(&xi) > 100.0 * scale.sqrt() {
            return None;
        }
        if norm(&step) <= 1e-11 * scale {
            return Some(xi);
        }
    }
    None
}

fn roots_at<T: Scalar>(red: &LsReduction<T>, v: usize, lam: f64) -> Vec<Vec<f64>> {
    let k = red.kernel_dims()[v];
    let s = lam.abs();
    let values = [0.0, s, -s, 2.0 * s, -2.0 * s, s.sqrt(), -s.sqrt()];
    let mut roots: Vec<Vec<f64>> = Vec::new();
    let total = values.len().pow(k as u32);
    for idx in 0..total {
        let mut rem = idx;
        let start: Vec<f64> = (0..k)
            .map(|_| {
                let x = values[rem % values.len()];
                rem /= values.len();
                x
            })
            .collect();
        if let Some(r) = newton_reduced(red, v, &start, lam) {
            if !roots.iter().any(|q| norm(&q.iter().zip(&r).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-3 * s) {
                roots.push(r);
            }
        }
    }
    roots.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    roots
}

/// Links roots at consecutive `|lambda|` by predicted scaling `r` or `sqrt r`.
fn link(samples: &[(f64, Vec<Vec<f64>>)]) -> Vec<Vec<(f64, Vec<f64>)>> {
    let Some((l0, first)) = samples.first() else { return vec![] };
    let mut branches: Vec<Vec<(f64, Vec<f64>)>> = first.iter().map(|r| vec![(*l0, r.clone())]).collect();
    let mut alive = vec![true; branches.len()];
    for (lam, roots) in &samples[1..] {
        let mut used = vec![false; roots.len()];
        for (b, branch) in branches.iter_mut().enumerate() {
            if !alive[b] {
                continue;
            }
            let (lp, xp) = branch.last().unwrap();
            let ratio = lam / lp;
            let preds = [xp.iter().map(|x| x * ratio).collect::<Vec<_>>(), xp.iter().map(|x| x * ratio.abs().sqrt()).collect()];
            let tol = 0.25 * norm(&preds[0]).max(norm(&preds[1])) + 1e-3 * lam.abs();
            let best = roots
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, r)| {
                    let d = preds
                        .iter()
                        .map(|p| norm(&p.iter().zip(r).map(|(a, b)| a - b).collect::<Vec<_>>()))
                        .fold(f64::INFINITY, f64::min);
                    (i, d)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((i, d)) if d <= tol => {
                    used[i] = true;
                    branch.push((*lam, roots[i].clone()));
                }
                _ => alive[b] = false,
            }
        }
    }
    branches.into_iter().zip(alive).filter(|(_, a)| *a).map(|(b, _)| b).collect()
}

fn fit(points: &[(f64, Vec<f64>)], k: usize) -> (Option<f64>, f64, Vec<f64>, f64) {
    let zero = |j: usize| points.iter().all(|(l, x)| x[j].abs() <= 1e-6 * l.abs());
    let live: Vec<usize> = (0..k).filter(|&j| !zero(j)).collect();
    if live.is_empty() {
        return (Some(1.0), 1.0, vec![0.0; k], 1.0);
    }
    // slope of log|xi| against log|lambda|, pooled over live coordinates
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (l, x) in points {
        for &j in &live {
            let (a, b) = (l.abs().ln(), x[j].abs().max(1e-300).ln());
            sx += a;
            sy += b;
            sxx += a * a;
            sxy += a * b;
            m += 1.0;
        }
    }
    let raw = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let snapped = [1.0, 0.5].into_iter().find(|q| (raw - q).abs() < 0.1);
    let q = snapped.unwrap_or(raw);
    let g = |l: f64| if q == 1.0 { l } else { l.abs().powf(q) };
    let mut coeffs = vec![0.0; k];
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &j in &live {
        let num: f64 = points.iter().map(|(l, x)| x[j] * g(*l)).sum();
        let den: f64 = points.iter().map(|(l, _)| g(*l) * g(*l)).sum();
        coeffs[j] = num / den;
        let mean = points.iter().map(|(_, x)| x[j]).sum::<f64>() / points.len() as f64;
        for (l, x) in points {
            ss_res += (x[j] - coeffs[j] * g(*l)).powi(2);
            ss_tot += (x[j] - mean).powi(2);
        }
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (snapped, raw, coeffs, r2)
}

/// Branches of zeros of `f_v(xi; lambda)` for `|lambda - lambda0|` in the
/// settings window, fitted to `xi ~ c lambda^q` with `q` in `{1, 1/2}`.
pub fn find_branches_1param<T: Scalar>(red: &LsReduction<T>, v: usize, settings: BranchSettings) -> Result<Vec<Branch>, LsError> {
    let k = red.kernel_dims()[v];
    if red.lambda0.len() != 1 || k > 3 {
        return Err(LsError::Unsupported);
    }
    let n = settings.points.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            (settings.lambda_min.ln() * (1.0 - t) + settings.lambda_max.ln() * t).exp()
        })
        .collect();
    let mut sided = Vec::new();
    for sign in [1.0, -1.0] {
        let samples: Vec<(f64, Vec<Vec<f64>>)> = grid.iter().map(|&g| (sign * g, roots_at(red, v, sign * g))).collect();
        for pts in link(&samples) {
            let (exponent, raw, coefficients, r2) = fit(&pts, k);
            sided.push((if sign > 0.0 { "+" } else { "-" }, exponent, raw, coefficients, r2, pts));
        }
    }
    let mut out: Vec<Branch> = Vec::new();
    let mut merged = vec![false; sided.len()];
    for i in 0..sided.len() {
        if merged[i] {
            continue;
        }
        let (side, exponent, raw, coeffs, r2, pts) = sided[i].clone();
        let mut branch = Branch {
            id: out.len() + 1,
            sides: side.to_string(),
            exponent,
            raw_exponent: raw,
            coefficients: coeffs.clone(),
            r_squared: r2,
            classified: exponent.is_some(),
            points: pts,
        };
        for j in i + 1..sided.len() {
            let other = &sided[j];
            if merged[j] || other.0 == side || other.1 != exponent || exponent != Some(1.0) {
                continue;
            }
            let close = coeffs.iter().zip(&other.3).all(|(a, b)| (a - b).abs() <= 1e-2 * (1.0 + a.abs()));
            if close {
                merged[j] = true;
                branch.sides = "+-".into();
                branch.r_squared = branch.r_squared.min(other.4);
                branch.points.extend(other.5.iter().cloned());
                branch.points.sort_by(|a, b| a.0.total_cmp(&b.0));
                break;
            }
        }
        out.push(branch);
    }
    out.sort_by(|a, b| {
        a.coefficients
            .iter()
            .zip(&b.coefficients)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.sides.cmp(&b.sides))
    });
    for (i, b) in out.iter_mut().enumerate() {
        b.id = i + 1;
    }
    Ok(out)
}

/// Classes of coordinates (within each comparable group) that agree to
/// `tol` at every given point.
pub fn synchrony_classes(points: &[Vec<f64>], groups: &[Vec<usize>], tol: f64) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for g in groups {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &i in g {
            match classes.iter_mut().find(|c| points.iter().all(|p| (p[c[0]] - p[i]).abs() <= tol)) {
                Some(c) => c.push(i),
                None => classes.push(vec![i]),
            }
        }
        out.extend(classes);
    }
    out.sort();
    out
}
