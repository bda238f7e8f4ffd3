//! The three-vertex quiver `N1 -> N2 <-> N3` carrying the admissible maps
//! of a five-cell network with two node types, and the one-parameter
//! steady-state bifurcation analysis in each of its three degenerate cases.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dsl::{self, Definition, ParseError};
use crate::ls::{check_reduced_equivariance, find_branches_1param, ls_reduce, synchrony_classes, BranchSettings, LsError, NewtonSettings};
use crate::poly::{Monomial, Poly, PolyMap};
use crate::quiver::{check_equivariance, CheckMode, QuiverError};
use crate::{ExactMatrix, ExactTuple, Matrix, PolyMapTuple, Rational, Representation, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseStudyError {
    #[error("coefficients a={a}, b={b}, c={c}, d={d} do not realize case `{case}`")]
    CaseMismatch { case: String, a: String, b: String, c: String, d: String },
    #[error("f and g must vanish at the origin for lambda = 0")]
    NotEquilibrium,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Ls(#[from] LsError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    #[serde(rename = "a=0")]
    AZero,
    #[serde(rename = "b=0")]
    BZero,
    #[serde(rename = "ab-cd=0")]
    DetZero,
}

impl Case {
    pub fn tag(self) -> &'static str {
        match self {
            Case::AZero => "a=0",
            Case::BZero => "b=0",
            Case::DetZero => "ab-cd=0",
        }
    }

    pub fn parse(s: &str) -> Option<Case> {
        match s.replace(' ', "").as_str() {
            "a=0" | "1" | "case1" => Some(Case::AZero),
            "b=0" | "2" | "case2" => Some(Case::BZero),
            "ab-cd=0" | "3" | "case3" => Some(Case::DetZero),
            _ => None,
        }
    }

    /// Kernel-coordinate restrictions of `R_a1 .. R_a4`.
    pub fn expected_restrictions(self) -> Vec<ExactMatrix> {
        let m = |rows: &[&[i64]], r: usize, c: usize| if r * c == 0 { Matrix::zeros(r, c) } else { Matrix::from_i64_rows(rows) };
        match self {
            Case::AZero => vec![m(&[&[1, 0]], 1, 2), m(&[&[0, 1]], 1, 2), m(&[], 1, 0), m(&[], 0, 1)],
            Case::BZero => vec![m(&[&[1]], 1, 1), m(&[&[0]], 1, 1), m(&[&[0]], 1, 1), m(&[&[1]], 1, 1)],
            Case::DetZero => vec![m(&[&[1]], 1, 1); 4],
        }
    }

    pub fn expected_kernel_dims(self) -> Vec<usize> {
        match self {
            Case::AZero => vec![2, 1, 0],
            _ => vec![1, 1, 1],
        }
    }

    pub fn classification(self) -> &'static str {
        match self {
            Case::AZero => "double transcritical",
            Case::BZero => "transcritical",
            Case::DetZero => "saddle-node",
        }
    }
}

/// Fixture source text for each case.
pub fn fixture(case: Case) -> &'static str {
    match case {
        Case::AZero => "f(x,y) = -1*x^2 + 1*lambda*x + 1*y\ng(y,x) = -1*y + 1*x\n",
        Case::BZero => "f(x,y) = -1*x + 1*y\ng(y,x) = -1*y^2 + 1*lambda*y + 1*x\n",
        Case::DetZero => "f(x,y) = -1*x^2 + 1*lambda - 1*x + 1*y\ng(y,x) = -1*y + 1*x\n",
    }
}

pub fn quiver_representation() -> Representation<Rational> {
    let sel = |rows: usize, cols: usize, pick: &[usize]| {
        Matrix::from_fn(rows, cols, |i, j| if pick[i] == j { Rational::from_i64(1) } else { Rational::from_i64(0) })
    };
    Representation::from_parts(
        vec![("N1".into(), 5), ("N2".into(), 4), ("N3".into(), 3)],
        vec![
            ("a1".into(), "N1".into(), "N2".into(), sel(4, 5, &[0, 1, 2, 3])),
            ("a2".into(), "N1".into(), "N2".into(), sel(4, 5, &[4, 3, 2, 3])),
            ("a3".into(), "N3".into(), "N2".into(), sel(4, 3, &[1, 2, 1, 2])),
            ("a4".into(), "N2".into(), "N3".into(), sel(3, 4, &[1, 2, 3])),
        ],
    )
    .expect("case-study quiver")
}

/// `(own, input)` slots of each cell, per vertex. `true` marks an `f` cell.
fn cells() -> [Vec<(bool, usize, usize)>; 3] {
    [
        vec![(true, 0, 1), (false, 1, 2), (true, 2, 3), (false, 3, 2), (true, 4, 3)],
        vec![(true, 0, 1), (false, 1, 2), (true, 2, 3), (false, 3, 2)],
        vec![(false, 0, 1), (true, 1, 2), (false, 2, 1)],
    ]
}

fn as_poly(d: &Definition) -> Poly<Rational> {
    let mut p = Poly::zero(d.args.len() + d.params.len());
    for (e, c) in &d.terms {
        p.add_term(Monomial(e.clone()), c.clone());
    }
    p
}

/// The tuple `F = (F^N1, F^N2, F^N3)` built from `f(x, y; lambda)` and
/// `g(y, x; lambda)`.
pub fn assemble(f: &Poly<Rational>, g: &Poly<Rational>, params: usize) -> ExactTuple {
    let rep = quiver_representation();
    let fields = cells()
        .iter()
        .enumerate()
        .map(|(v, cs)| {
            let n = rep.dim(v);
            let outputs = cs
                .iter()
                .map(|&(is_f, own, input)| {
                    let mut map = vec![own, input];
                    map.extend((0..params).map(|k| n + k));
                    (if is_f { f } else { g }).remap_vars(&map, n + params)
                })
                .collect();
            PolyMap::new(n, params, outputs)
        })
        .collect();
    PolyMapTuple::new(rep, params, fields).expect("case-study tuple")
}

/// `G = (G^1, G^2, G^3)` built from `h(x1, y2, x3, y4)` and `l(y1, x2, y3)`.
pub fn hl_tuple(h: &Poly<Rational>, l: &Poly<Rational>) -> ExactTuple {
    let rep = quiver_representation();
    let hs = |vars: [usize; 4], n: usize| h.remap_vars(&vars, n);
    let ls = |vars: [usize; 3], n: usize| l.remap_vars(&vars, n);
    let g1 = vec![hs([0, 1, 2, 3], 5), ls([1, 2, 3], 5), hs([2, 3, 2, 3], 5), ls([3, 2, 3], 5), hs([4, 3, 2, 3], 5)];
    let g2 = vec![hs([0, 1, 2, 3], 4), ls([1, 2, 3], 4), hs([2, 3, 2, 3], 4), ls([3, 2, 3], 4)];
    let g3 = vec![ls([0, 1, 2], 3), hs([1, 2, 1, 2], 3), ls([2, 1, 2], 3)];
    PolyMapTuple::new(rep, 0, vec![PolyMap::new(5, 0, g1), PolyMap::new(4, 0, g2), PolyMap::new(3, 0, g3)]).expect("hl tuple")
}

/// Basis of the equivariant polynomial tuples of degree `1..=degree` (no
/// parameters), from the linear constraints `G_t R_a = R_a G_s`.
pub fn equivariant_tuple_basis<T: Scalar>(rep: &Representation<T>, degree: u32) -> Vec<PolyMapTuple<T>> {
    let nv = rep.dims().len();
    let mut unknowns: Vec<(usize, usize, Monomial)> = Vec::new();
    for v in 0..nv {
        let n = rep.dim(v);
        for d in 1..=degree {
            for m in Monomial::of_degree(n, d) {
                for i in 0..n {
                    unknowns.push((v, i, m.clone()));
                }
            }
        }
    }
    let single = |(v, i, m): &(usize, usize, Monomial)| -> Vec<PolyMap<T>> {
        (0..nv)
            .map(|w| {
                let n = rep.dim(w);
                let mut outs = vec![Poly::zero(n); n];
                if w == *v {
                    outs[*i] = Poly::monomial(m.clone(), T::one());
                }
                PolyMap::new(n, 0, outs)
            })
            .collect()
    };
    let mut rows: BTreeMap<(usize, usize, Vec<u32>), usize> = BTreeMap::new();
    let mut cols: Vec<Vec<(usize, T)>> = Vec::new();
    for u in &unknowns {
        let g = single(u);
        let mut col = Vec::new();
        for (a, arrow) in rep.quiver().arrows().iter().enumerate() {
            let r = rep.map(a);
            let res = g[arrow.target].right_linear(r).sub(&g[arrow.source].left_linear(r));
            for (i, m, c) in res.term_list() {
                let next = rows.len();
                let row = *rows.entry((a, i, m)).or_insert(next);
                col.push((row, c));
            }
        }
        cols.push(col);
    }
    let mut a = Matrix::zeros(rows.len(), unknowns.len());
    for (j, col) in cols.iter().enumerate() {
        for (i, c) in col {
            a[(*i, j)] = c.clone();
        }
    }
    let null = if rows.is_empty() { Matrix::identity(unknowns.len()) } else { a.nullspace(0.0) };
    (0..null.cols())
        .map(|k| {
            let fields = (0..nv)
                .map(|w| {
                    let n = rep.dim(w);
                    let mut outs = vec![Poly::zero(n); n];
                    for (j, (v, i, m)) in unknowns.iter().enumerate() {
                        if *v == w && !null[(j, k)].is_zero() {
                            outs[*i].add_term(m.clone(), null[(j, k)].clone());
                        }
                    }
                    PolyMap::new(n, 0, outs)
                })
                .collect();
            PolyMapTuple::new(rep.clone(), 0, fields).expect("basis tuple")
        })
        .collect()
}

/// Random integer combination of an equivariant basis.
pub fn random_equivariant<T: Scalar>(basis: &[PolyMapTuple<T>], rng: &mut ChaCha8Rng) -> Option<PolyMapTuple<T>> {
    let mut it = basis.iter();
    let first = it.next()?;
    let c0 = T::from_i64(rng.gen_range(-3..=3));
    let mut acc = first.map_fields(|_, f| f.scale(&c0));
    for b in it {
        let c = T::from_i64(rng.gen_range(-3..=3));
        acc = acc.add(&b.map_fields(|_, f| f.scale(&c))).ok()?;
    }
    Some(acc)
}

/// Reads `h = G^2_1` and `l = G^3_1` off an equivariant tuple and checks
/// that the tuple is `hl_tuple(h, l)`.
pub fn factors_through_hl(g: &ExactTuple) -> bool {
    let h = g.field(1).output(0).clone();
    let l = g.field(2).output(0).clone();
    hl_tuple(&h, &l) == *g
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchRow {
    pub id: usize,
    pub exponent: Option<f64>,
    pub raw_exponent: f64,
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub sides: String,
    pub direction: String,
    /// Coordinate classes agreeing to `1e-6` along the lifted branch.
    pub synchrony: Vec<Vec<String>>,
    pub expected_synchrony: Vec<Vec<String>>,
    pub in_expected_synchrony: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseStudyReport {
    pub case: Case,
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
    pub equivariance_residuals: Vec<(String, f64)>,
    pub kernel_dims: Vec<usize>,
    pub restricted_maps: Vec<(String, Vec<Vec<String>>)>,
    pub restrictions_match: bool,
    /// Largest finite-difference cross derivative of the reduced map.
    pub cross_derivative: Option<f64>,
    pub decoupled: Option<bool>,
    pub identity_restriction: bool,
    pub reduced_equivariance: f64,
    pub ls_radius: f64,
    pub classification: String,
    pub branches: Vec<BranchRow>,
    pub consistent: bool,
    pub seed: u64,
    pub passed: bool,
}

const NAMES: [&str; 5] = ["x1", "y2", "x3", "y4", "x5"];

fn classes_from_names(groups: &[&[&str]]) -> Vec<Vec<String>> {
    groups.iter().map(|g| g.iter().map(|s| s.to_string()).collect()).collect()
}

fn expected_synchrony(case: Case, pattern: &[bool]) -> Vec<Vec<String>> {
    let full = classes_from_names(&[&["x1", "x3", "x5"], &["y2", "y4"]]);
    match (case, pattern) {
        (Case::AZero, [false, false]) => full,
        (Case::AZero, [false, true]) => classes_from_names(&[&["x1", "x3"], &["y2", "y4"]]),
        (Case::AZero, [true, false]) => classes_from_names(&[&["x3", "x5"], &["y2", "y4"]]),
        (Case::AZero, [true, true]) => classes_from_names(&[&["x1", "x5"], &["y2", "y4"]]),
        (Case::BZero, [true]) => classes_from_names(&[&["x3", "x5"]]),
        _ => full,
    }
}

fn text_matrix(m: &ExactMatrix) -> Vec<Vec<String>> {
    m.to_rows().iter().map(|r| r.iter().map(|x| x.to_text()).collect()).collect()
}

/// The parametrized tuple for DSL text defining `f(x,y)` and `g(y,x)`.
pub fn tuple_from_source(source: &str) -> Result<ExactTuple, CaseStudyError> {
    let defs = dsl::parse_definitions(source, &["lambda"])?;
    let f = as_poly(dsl::find(&defs, "f", 2)?);
    let g = as_poly(dsl::find(&defs, "g", 2)?);
    Ok(assemble(&f, &g, 1))
}

/// Parses `f` and `g` from DSL text and runs the full pipeline.
pub fn casestudy_s10(source: &str, case: Case, seed: u64) -> Result<CaseStudyReport, CaseStudyError> {
    let defs = dsl::parse_definitions(source, &["lambda"])?;
    let fd = dsl::find(&defs, "f", 2)?;
    let gd = dsl::find(&defs, "g", 2)?;
    let (f, g) = (as_poly(fd), as_poly(gd));
    if !fd.coeff(&[0, 0, 0]).is_zero() || !gd.coeff(&[0, 0, 0]).is_zero() {
        return Err(CaseStudyError::NotEquilibrium);
    }
    let a = fd.coeff(&[1, 0, 0]);
    let c = fd.coeff(&[0, 1, 0]);
    let b = gd.coeff(&[1, 0, 0]);
    let d = gd.coeff(&[0, 1, 0]);
    let det = a.clone() * b.clone() - c.clone() * d.clone();
    let ok = match case {
        Case::AZero => a.is_zero() && !b.is_zero() && !det.is_zero(),
        Case::BZero => b.is_zero() && !a.is_zero() && !det.is_zero(),
        Case::DetZero => det.is_zero() && !a.is_zero() && !b.is_zero() && !(a.clone() + b.clone()).is_zero(),
    };
    if !ok {
        return Err(CaseStudyError::CaseMismatch {
            case: case.tag().into(),
            a: a.to_text(),
            b: b.to_text(),
            c: c.to_text(),
            d: d.to_text(),
        });
    }
    let tuple = assemble(&f, &g, 1);
    let eq = check_equivariance(&tuple, CheckMode::Exact)?;
    let zero = Rational::from_i64(0);
    let base: Vec<Vec<Rational>> = tuple.rep().dims().iter().map(|&n| vec![zero.clone(); n]).collect();
    let red = ls_reduce(&tuple, &base, &[zero], NewtonSettings::default())?;
    let kernel_dims = red.kernel_dims();
    let coords = &red.split.selected.coords;
    let expected = case.expected_restrictions();
    let restrictions_match = kernel_dims == case.expected_kernel_dims() && coords.iter().zip(&expected).all(|(x, y)| x == y);
    let restricted_maps =
        tuple.rep().quiver().arrows().iter().zip(coords).map(|(arrow, m)| (arrow.id.clone(), text_matrix(m))).collect();
    let identity_restriction = coords.iter().all(|m| m.is_square() && m.is_identity());

    let radius = red.radius(0);
    let (cross_derivative, decoupled) = if kernel_dims[0] == 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let s = 0.1 * radius;
            let xi = [rng.gen_range(-s..=s), rng.gen_range(-s..=s)];
            let lam = [rng.gen_range(-s..=s)];
            worst = worst.max(red.reduced_partial(0, &xi, &lam, 0, 1, 1e-5 * s)?.abs());
            worst = worst.max(red.reduced_partial(0, &xi, &lam, 1, 0, 1e-5 * s)?.abs());
        }
        (Some(worst), Some(worst <= 1e-8))
    } else {
        (None, None)
    };
    let reduced_eq = check_reduced_equivariance(&red, &tuple, 100, seed, 1e-8)?;

    let groups = [vec![0, 2, 4], vec![1, 3]];
    let mut rows = Vec::new();
    for br in find_branches_1param(&red, 0, BranchSettings::default())? {
        let lifted: Vec<Vec<f64>> = br.points.iter().map(|(l, xi)| red.lift(0, xi, &[*l])).collect::<Result<_, _>>()?;
        let pattern: Vec<bool> = br.coefficients.iter().map(|c| c.abs() > 1e-6).collect();
        let synchrony: Vec<Vec<String>> = synchrony_classes(&lifted, &groups, 1e-6)
            .into_iter()
            .filter(|c| c.len() > 1)
            .map(|c| c.into_iter().map(|i| NAMES[i].to_string()).collect())
            .collect();
        let want = expected_synchrony(case, &pattern);
        let index = |s: &str| NAMES.iter().position(|n| *n == s).expect("coordinate name");
        let in_expected = want.iter().all(|class| {
            lifted.iter().all(|p| class.iter().all(|s| (p[index(s)] - p[index(&class[0])]).abs() <= 1e-6))
        });
        let symbol = if br.exponent == Some(0.5) { "sqrt(lambda)" } else { "lambda" };
        let direction = format!(
            "({})",
            br.coefficients
                .iter()
                .map(|&c| if c.abs() <= 1e-6 { "0".to_string() } else if c < 0.0 { format!("-{symbol}") } else { symbol.to_string() })
                .collect::<Vec<_>>()
                .join(",")
        );
        rows.push(BranchRow {
            id: br.id,
            exponent: br.exponent,
            raw_exponent: br.raw_exponent,
            coefficients: br.coefficients.clone(),
            r_squared: br.r_squared,
            sides: br.sides.clone(),
            direction,
            synchrony,
            expected_synchrony: want,
            in_expected_synchrony: in_expected,
        });
    }
    let (count, q) = match case {
        Case::AZero => (4, 1.0),
        Case::BZero => (2, 1.0),
        Case::DetZero => (2, 0.5),
    };
    let consistent = rows.len() == count && rows.iter().all(|r| r.exponent == Some(q) && r.r_squared >= 0.999);
    let passed = eq.passed
        && restrictions_match
        && decoupled.unwrap_or(true)
        && reduced_eq.passed
        && consistent
        && rows.iter().all(|r| r.in_expected_synchrony);
    Ok(CaseStudyReport {
        case,
        a: a.to_text(),
        b: b.to_text(),
        c: c.to_text(),
        d: d.to_text(),
        equivariance_residuals: eq.residuals.clone(),
        kernel_dims,
        restricted_maps,
        restrictions_match,
        cross_derivative,
        decoupled,
        identity_restriction,
        reduced_equivariance: reduced_eq.max_residual,
        ls_radius: reduced_eq.radius,
        classification: case.classification().into(),
        branches: rows,
        consistent,
        seed,
        passed,
    })
}
