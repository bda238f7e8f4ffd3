use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quiverdyn::builders::{build_quoq, build_subq, induce_on_quotients, induce_on_subnetworks};
use quiverdyn::casestudy::{casestudy_s10, fixture, random_equivariant, equivariant_tuple_basis, quiver_representation, tuple_from_source, Case};
use quiverdyn::center_manifold::{check_cm_equivariance, cm_taylor, flow_error};
use quiverdyn::io::{parse_network, parse_tuple};
use quiverdyn::linalg::dense;
use quiverdyn::ls::{check_reduced_equivariance, find_branches_1param, ls_reduce, BranchSettings, NewtonSettings};
use quiverdyn::network::{group_elements, AdmissibleMap, ColouredNetwork};
use quiverdyn::normal_form::normal_form;
use quiverdyn::quiver::{check_equivariance, CheckMode};
use quiverdyn::spectral::{check_sn, generalized_eigenspace_subrep, joint_spectrum, sn_decomposition};
use quiverdyn::{ExactTuple, FloatMatrix, Matrix, Monomial, Poly, PolyMap, PolyMapTuple, Rational, Representation, Scalar};

type Outcome = Result<String, String>;

fn fixture_text(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn load_net(name: &str) -> ColouredNetwork {
    parse_network(&fixture_text(name)).expect("fixture network")
}

fn q(n: i64) -> Rational {
    Rational::from_i64(n)
}

/// Matrix of `x -> (x[pick[0]], x[pick[1]], ...)`.
fn selection<T: Scalar>(pick: &[usize], cols: usize) -> Matrix<T> {
    Matrix::from_fn(pick.len(), cols, |i, j| if pick[i] == j { T::one() } else { T::zero() })
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || format!("took {:.2} s, limit {limit} s", elapsed.as_secs_f64()))
}

fn subq_generators() -> Outcome {
    let net = load_net("lattice5.net.json");
    let start = Instant::now();
    let subq = build_subq::<Rational>(&net);
    within(start.elapsed(), 1.0)?;

    let n = net.len();
    let closed: Vec<u32> = (1u32..1 << n)
        .filter(|m| (0..n).filter(|i| m >> i & 1 == 1).all(|i| net.input_nodes(i).iter().all(|&j| m >> j & 1 == 1)))
        .collect();
    let pairs = closed.iter().flat_map(|a| closed.iter().map(move |b| (a, b))).filter(|(a, b)| *b & !*a == 0).count();
    let rep = &subq.rep;
    let arrows = rep.quiver().arrows();
    ensure(subq.subnetworks.len() == 5 && closed.len() == 5, || format!("{} subnetworks", subq.subnetworks.len()))?;
    ensure(arrows.len() == 15 && pairs == 15, || format!("{} arrows, oracle {pairs}", arrows.len()))?;

    let vertex_of = |k: usize| {
        let want: Vec<String> = (1..=k).map(|i| i.to_string()).collect();
        subq.subnetworks.iter().position(|s| s.iter().map(|&m| net.nodes()[m].id.clone()).collect::<Vec<_>>() == want)
    };
    let generators: [(usize, &[usize]); 8] = [
        (5, &[0, 1, 2, 3]),
        (5, &[0, 1, 2]),
        (5, &[0, 1]),
        (4, &[0, 1, 2]),
        (3, &[0, 1]),
        (4, &[0]),
        (3, &[0]),
        (2, &[0]),
    ];
    for (i, (src, pick)) in generators.iter().enumerate() {
        let (s, t) = (vertex_of(*src).ok_or("missing source")?, vertex_of(pick.len()).ok_or("missing target")?);
        let want = selection::<Rational>(pick, *src);
        let found = arrows.iter().enumerate().any(|(a, ar)| ar.source == s && ar.target == t && rep.map(a) == &want);
        ensure(found, || format!("generator a{} not reproduced", i + 1))?;
    }
    Ok("5 vertices, 15 arrows (subset oracle 15), 8/8 generators exact".into())
}

fn quoq_maps() -> Outcome {
    let net = load_net("quotients.net.json");
    let start = Instant::now();
    let quoq = build_quoq::<Rational>(&net).map_err(|e| e.to_string())?;
    within(start.elapsed(), 5.0)?;
    let rep = &quoq.rep;
    ensure(quoq.quotients.len() == 6, || format!("{} quotients", quoq.quotients.len()))?;
    let non_loops = rep.quiver().arrows().iter().filter(|a| a.source != a.target).count();
    ensure(non_loops == 12, || format!("{non_loops} non-loop arrows"))?;

    // (source, target, source dim, image pattern), vertices numbered from 1
    let maps: [(usize, usize, usize, &[usize]); 12] = [
        (6, 1, 2, &[0, 0, 0, 1, 1]),
        (2, 1, 4, &[0, 0, 1, 2, 3]),
        (6, 2, 2, &[0, 0, 1, 1]),
        (4, 2, 3, &[0, 0, 1, 2]),
        (4, 1, 3, &[0, 0, 0, 1, 2]),
        (6, 4, 2, &[0, 1, 1]),
        (3, 1, 4, &[0, 1, 0, 2, 3]),
        (4, 3, 3, &[0, 0, 1, 2]),
        (6, 3, 2, &[0, 0, 1, 1]),
        (5, 3, 3, &[0, 1, 2, 2]),
        (5, 1, 3, &[0, 1, 0, 2, 2]),
        (6, 5, 2, &[0, 0, 1]),
    ];
    let mut used = BTreeSet::new();
    for (i, (s, t, dim, pick)) in maps.iter().enumerate() {
        let want = selection::<Rational>(pick, *dim);
        let hit = rep
            .quiver()
            .arrows()
            .iter()
            .enumerate()
            .find(|(a, ar)| ar.source == s - 1 && ar.target == t - 1 && rep.map(*a) == &want && !used.contains(a));
        match hit {
            Some((a, _)) => {
                used.insert(a);
            }
            None => return Err(format!("map a{} (N{s} -> N{t}) not reproduced", i + 1)),
        }
    }
    Ok("6 vertices, 12/12 maps bit-exact".into())
}

/// Random slot-symmetric response for node `n`: a sparse polynomial of
/// degree `1..=3` summed over the slot permutations of its colour.
fn random_response(net: &ColouredNetwork, n: usize, rng: &mut ChaCha8Rng) -> PolyMap<Rational> {
    let slots = net.slots(n);
    let nv = net.slot_dim(n);
    let mut starts = Vec::new();
    let mut acc = 0;
    for s in &slots {
        starts.push(acc);
        acc += s.dim;
    }
    let perms: Vec<Vec<usize>> = group_elements(&net.interchangeable_groups(n), slots.len())
        .into_iter()
        .map(|g| {
            let mut perm = vec![0; nv];
            for (k, s) in slots.iter().enumerate() {
                for d in 0..s.dim {
                    perm[starts[k] + d] = starts[g[k]] + d;
                }
            }
            perm
        })
        .collect();
    let outputs = (0..net.node_dim(n))
        .map(|_| {
            let mut p = Poly::zero(nv);
            for _ in 0..rng.gen_range(1..=4) {
                let mut e = vec![0u32; nv];
                for _ in 0..rng.gen_range(1..=3) {
                    e[rng.gen_range(0..nv)] += 1;
                }
                let c = Rational::from_ratio(rng.gen_range(1..=4) * if rng.gen_bool(0.5) { 1 } else { -1 }, rng.gen_range(1..=3));
                p.add_term(Monomial(e), c);
            }
            perms.iter().fold(Poly::zero(nv), |s, perm| s.add(&p.remap_vars(perm, nv)))
        })
        .collect();
    PolyMap::new(nv, 0, outputs)
}

fn random_admissible(net: &ColouredNetwork, rng: &mut ChaCha8Rng) -> Result<AdmissibleMap<Rational>, String> {
    let responses: BTreeMap<String, PolyMap<Rational>> =
        net.colour_representatives().into_iter().map(|(c, n)| (c, random_response(net, n, rng))).collect();
    AdmissibleMap::from_responses(net, 0, responses).map_err(|e| e.to_string())
}

fn exact_pass(t: &ExactTuple) -> Result<bool, String> {
    Ok(check_equivariance(t, CheckMode::Exact).map_err(|e| e.to_string())?.passed)
}

fn composition_and_bracket() -> Outcome {
    const COUNT: usize = 50;
    let mut checked = 0;
    for (k, name) in ["feedforward.net.json", "lattice5.net.json", "quotients.net.json"].iter().enumerate() {
        let net = load_net(name);
        let subq = build_subq::<Rational>(&net);
        let quoq = build_quoq::<Rational>(&net).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + k as u64);
        let mut tuples: [Vec<ExactTuple>; 2] = [Vec::new(), Vec::new()];
        for _ in 0..COUNT {
            let adm = random_admissible(&net, &mut rng)?;
            let mut s = induce_on_subnetworks(&net, &adm, &subq).map_err(|e| e.to_string())?;
            let mut t = induce_on_quotients(&net, &adm, &quoq).map_err(|e| e.to_string())?;
            s.cap = 9;
            t.cap = 9;
            tuples[0].push(s);
            tuples[1].push(t);
        }
        for (kind, list) in ["SubQ", "QuoQ"].iter().zip(&tuples) {
            for i in 0..COUNT {
                let (f, g) = (&list[i], &list[(i + 1) % COUNT]);
                let comp = f.compose(g, false).map_err(|e| e.to_string())?;
                let br = f.bracket(g, false).map_err(|e| e.to_string())?;
                for (what, t) in [("tuple", f), ("composition", &comp), ("bracket", &br)] {
                    ensure(exact_pass(t)?, || format!("{name} {kind} {what} #{i} is not equivariant"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} induced tuples, compositions and brackets exactly equivariant"))
}

/// Real Jordan block: eigenvalue `re` (`im = 0`) or the pair `re +- i im`
/// in 2x2 blocks, of `size` blocks along the diagonal.
fn jordan_block(re: f64, im: f64, size: usize) -> FloatMatrix {
    let b = if im == 0.0 { 1 } else { 2 };
    let n = b * size;
    Matrix::from_fn(n, n, |i, j| {
        let (bi, bj) = (i / b, j / b);
        if bi == bj {
            if i == j {
                re
            } else if i < j {
                -im
            } else {
                im
            }
        } else if bj == bi + 1 && i % b == j % b {
            1.0
        } else {
            0.0
        }
    })
}

fn block_diag(blocks: &[FloatMatrix]) -> FloatMatrix {
    let n: usize = blocks.iter().map(|b| b.rows()).sum();
    let mut out = Matrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                out[(off + i, off + j)] = b[(i, j)];
            }
        }
        off += b.rows();
    }
    out
}

fn random_conjugator(n: usize, rng: &mut ChaCha8Rng) -> (FloatMatrix, FloatMatrix) {
    loop {
        let p = Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.5..0.5));
        if let Some(inv) = p.inverse(1e-8) {
            if dense::cond(&p) < 50.0 {
                return (p, inv);
            }
        }
    }
}

type Planted = Vec<(f64, f64, usize)>;

fn random_blocks(rng: &mut ChaCha8Rng, count: usize) -> Planted {
    (0..count)
        .map(|_| {
            if rng.gen_bool(0.3) {
                (rng.gen_range(-1..=1) as f64, rng.gen_range(1..=2) as f64, rng.gen_range(1..=2))
            } else {
                (rng.gen_range(-2..=2) as f64, 0.0, rng.gen_range(1..=3))
            }
        })
        .collect()
}

fn real_dim(blocks: &Planted, re: f64, im: f64) -> usize {
    blocks.iter().filter(|b| b.0 == re && b.1 == im).map(|b| b.2 * if b.1 == 0.0 { 1 } else { 2 }).sum()
}

/// Four vertices `D -> A -> B -> C`: `D` an invariant summand of `A`, `B`
/// conjugate to `A`, `C` the complementary quotient.
fn planted_tuple(rng: &mut ChaCha8Rng) -> (Representation<f64>, Vec<FloatMatrix>, [Planted; 4]) {
    let (c1, c2) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
    let b1 = random_blocks(rng, c1);
    let b2 = random_blocks(rng, c2);
    let j1 = block_diag(&b1.iter().map(|b| jordan_block(b.0, b.1, b.2)).collect::<Vec<_>>());
    let j2 = block_diag(&b2.iter().map(|b| jordan_block(b.0, b.1, b.2)).collect::<Vec<_>>());
    let (n1, n2) = (j1.rows(), j2.rows());
    let n = n1 + n2;
    let j = block_diag(&[j1.clone(), j2.clone()]);
    let (p, pinv) = random_conjugator(n, rng);
    let (qm, qinv) = random_conjugator(n, rng);
    let (s, sinv) = random_conjugator(n2, rng);
    let iota = selection::<f64>(&(0..n1).collect::<Vec<_>>(), n).transpose();
    let pi = selection::<f64>(&(n1..n).collect::<Vec<_>>(), n);
    let rep = Representation::from_parts(
        vec![("A".into(), n), ("B".into(), n), ("C".into(), n2), ("D".into(), n1)],
        vec![
            ("d".into(), "D".into(), "A".into(), p.mul(&iota)),
            ("b".into(), "A".into(), "B".into(), qm.mul(&pinv)),
            ("c".into(), "B".into(), "C".into(), s.mul(&pi).mul(&qinv)),
        ],
    )
    .expect("planted representation");
    let l = vec![p.mul(&j).mul(&pinv), qm.mul(&j).mul(&qinv), s.mul(&j2).mul(&sinv), j1];
    let all: Planted = b1.iter().chain(&b2).copied().collect();
    (rep, l, [all.clone(), all, b2, b1])
}

fn column_space_residual(r: &FloatMatrix, bs: &FloatMatrix, bt: &FloatMatrix) -> f64 {
    let img = r.mul(bs);
    if img.cols() == 0 || img.rows() == 0 {
        return 0.0;
    }
    if bt.cols() == 0 {
        return img.max_abs();
    }
    let proj = bt.mul(&dense::pinv(bt, 1e-12)).mul(&img);
    img.sub(&proj).max_abs()
}

fn spectral_subreps() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    let mut worst: f64 = 0.0;
    let mut worst_sn: f64 = 0.0;
    for trial in 0..50 {
        let (rep, l, planted) = planted_tuple(&mut rng);
        let spec = joint_spectrum(&l);
        for (c, cl) in spec.clusters.iter().enumerate() {
            let sub = generalized_eigenspace_subrep(&rep, &l, &spec, c).map_err(|e| format!("tuple {trial}: {e}"))?;
            let (re, im) = (cl.re.round(), cl.im.round());
            for (v, b) in sub.bases.iter().enumerate() {
                let want = real_dim(&planted[v], re, im);
                ensure(b.cols() == want, || format!("tuple {trial}: cluster {re}+{im}i has dim {} at vertex {v}, planted {want}", b.cols()))?;
            }
            for (a, ar) in rep.quiver().arrows().iter().enumerate() {
                worst = worst.max(column_space_residual(rep.map(a), &sub.bases[ar.source], &sub.bases[ar.target]));
            }
        }
        let (s, n) = sn_decomposition(&l).map_err(|e| format!("tuple {trial}: {e}"))?;
        let report = check_sn(&rep, &l, &s, &n, 1e-8).map_err(|e| e.to_string())?;
        worst_sn = worst_sn
            .max(report.sum_residual)
            .max(report.commutator)
            .max(report.nilpotency)
            .max(report.semisimplicity)
            .max(report.s_endomorphism)
            .max(report.n_endomorphism);
        ensure(report.passed, || format!("tuple {trial}: S-N check failed {report:?}"))?;
    }
    ensure(worst <= 1e-8, || format!("subrepresentation residual {worst:e}"))?;
    Ok(format!("50 tuples, eigenspace residual {worst:.1e}, S-N residual {worst_sn:.1e}"))
}

fn ls_case_one() -> Outcome {
    let start = Instant::now();
    let f = tuple_from_source(fixture(Case::AZero)).map_err(|e| e.to_string())?;
    let base: Vec<Vec<Rational>> = f.rep().dims().iter().map(|&n| vec![q(0); n]).collect();
    let red = ls_reduce(&f, &base, &[q(0)], NewtonSettings::default()).map_err(|e| e.to_string())?;
    ensure(red.kernel_dims() == [2, 1, 0], || format!("kernel dims {:?}", red.kernel_dims()))?;
    let eq = check_reduced_equivariance(&red, &f, 100, 5, 1e-8).map_err(|e| e.to_string())?;
    ensure(eq.passed, || format!("reduced equivariance {:e}", eq.max_residual))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = 0.1 * red.radius(0);
    let mut cross: f64 = 0.0;
    for _ in 0..20 {
        let xi = [rng.gen_range(-s..=s), rng.gen_range(-s..=s)];
        let lam = [rng.gen_range(-s..=s)];
        cross = cross.max(red.reduced_partial(0, &xi, &lam, 0, 1, 1e-5 * s).map_err(|e| e.to_string())?.abs());
    }
    ensure(cross <= 1e-8, || format!("cross derivative {cross:e}"))?;

    let branches = find_branches_1param(&red, 0, BranchSettings::default()).map_err(|e| e.to_string())?;
    let patterns: BTreeSet<(bool, bool)> =
        branches.iter().map(|b| (b.coefficients[0].abs() > 1e-6, b.coefficients[1].abs() > 1e-6)).collect();
    let want: BTreeSet<(bool, bool)> = [(false, false), (false, true), (true, false), (true, true)].into();
    ensure(branches.len() == 4 && patterns == want, || format!("{} branches, patterns {patterns:?}", branches.len()))?;
    for b in &branches {
        ensure(b.exponent == Some(1.0), || format!("branch {} exponent {}", b.id, b.raw_exponent))?;
        ensure(b.r_squared >= 0.999, || format!("branch {} R^2 {}", b.id, b.r_squared))?;
    }
    let min_r2 = branches.iter().map(|b| b.r_squared).fold(1.0, f64::min);
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "equivariance {:.1e} over 100 samples, cross derivative {cross:.1e}, 4 branches, min R^2 {min_r2:.6}",
        eq.max_residual
    ))
}

fn three_cases() -> Outcome {
    let one = || vec!["1".to_string()];
    let zero = || vec!["0".to_string()];
    let cases: [(Case, [usize; 3], Vec<Vec<Vec<String>>>, usize); 3] = [
        (
            Case::AZero,
            [2, 1, 0],
            vec![vec![vec!["1".into(), "0".into()]], vec![vec!["0".into(), "1".into()]], vec![vec![]], vec![]],
            4,
        ),
        (Case::BZero, [1, 1, 1], vec![vec![one()], vec![zero()], vec![zero()], vec![one()]], 2),
        (Case::DetZero, [1, 1, 1], vec![vec![one()]; 4], 2),
    ];
    let mut counts = Vec::new();
    for (case, dims, maps, count) in cases {
        let r = casestudy_s10(fixture(case), case, 0).map_err(|e| e.to_string())?;
        let tag = case.tag();
        ensure(r.kernel_dims == dims, || format!("{tag}: kernel dims {:?}", r.kernel_dims))?;
        let got: Vec<Vec<Vec<String>>> = r.restricted_maps.iter().map(|m| m.1.clone()).collect();
        ensure(got == maps, || format!("{tag}: restricted maps {got:?}"))?;
        ensure(r.branches.len() == count, || format!("{tag}: {} branches", r.branches.len()))?;
        for b in &r.branches {
            ensure(b.in_expected_synchrony, || format!("{tag}: branch {} leaves {:?}", b.direction, b.expected_synchrony))?;
        }
        counts.push(count.to_string());
    }
    Ok(format!("kernel dims, restrictions and synchrony match; branch counts {}", counts.join("/")))
}

/// `v2 -> v1`, projecting onto the first coordinate.
fn feedforward_rep() -> Representation<Rational> {
    Representation::from_parts(
        vec![("v1".into(), 1), ("v2".into(), 2)],
        vec![("a".into(), "v2".into(), "v1".into(), Matrix::from_i64_rows(&[&[1, 0]]))],
    )
    .expect("feedforward quiver")
}

fn coupled_feedforward() -> PolyMapTuple<f64> {
    let f2 = PolyMap::from_term_list(2, 0, 2, &[(0, vec![1, 1], q(1)), (1, vec![0, 1], q(-1)), (1, vec![2, 0], q(1))]);
    PolyMapTuple::new(feedforward_rep(), 0, vec![PolyMap::zero(1, 0, 1), f2]).expect("coupled fixture").cast()
}

/// SubQ tuple on the lattice network whose linearization has both zero
/// and negative eigenvalues.
fn mixed_lattice_tuple(seed: u64) -> Result<ExactTuple, String> {
    let net = load_net("lattice5.net.json");
    let subq = build_subq::<Rational>(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let own = [0, -1, 0, -2, -1];
    let mut responses = BTreeMap::new();
    for (colour, n) in net.colour_representatives() {
        let nv = net.slot_dim(n);
        let mut p = Poly::zero(nv);
        p.add_term(Monomial::var(nv, 0), q(own[n]));
        for j in 1..nv {
            p.add_term(Monomial::var(nv, j), q(rng.gen_range(-2..=2)));
        }
        for _ in 0..3 {
            let mut e = vec![0u32; nv];
            for _ in 0..rng.gen_range(2..=3) {
                e[rng.gen_range(0..nv)] += 1;
            }
            p.add_term(Monomial(e), q(rng.gen_range(-3..=3)));
        }
        responses.insert(colour, PolyMap::new(nv, 0, vec![p]));
    }
    let adm = AdmissibleMap::from_responses(&net, 0, responses).map_err(|e| e.to_string())?;
    induce_on_subnetworks(&net, &adm, &subq).map_err(|e| e.to_string())
}

fn center_manifolds() -> Outcome {
    let (ff, _, _) = parse_tuple::<Rational>(&fixture_text("feedforward.pvf.json")).map_err(|e| e.to_string())?;
    let exp = cm_taylor(&ff, 4).map_err(|e| e.to_string())?;
    // y = sum c_k x^k on x' = x^2, y' = -y + x^2: c_2 = 1, c_k = -(k - 1) c_{k-1}
    let mut oracle = vec![q(0), q(0), q(1)];
    for k in 3..=4 {
        let prev = oracle[k - 1].clone();
        oracle.push(-(q(k as i64 - 1) * prev));
    }
    let graph = exp.graph(1);
    for (k, want) in oracle.iter().enumerate().skip(2) {
        let got = graph.output(1).coeff(&Monomial(vec![k as u32]));
        ensure(&got == want, || format!("phi degree {k}: {got} != {want}"))?;
    }

    let mut fixtures: Vec<(String, ExactTuple)> = vec![("feedforward".into(), ff)];
    for case in [Case::AZero, Case::BZero, Case::DetZero] {
        let t = tuple_from_source(fixture(case)).map_err(|e| e.to_string())?;
        fixtures.push((format!("case {}", case.tag()), t));
    }
    fixtures.push(("lattice SubQ".into(), mixed_lattice_tuple(7000)?));
    for (name, t) in &fixtures {
        let exp = cm_taylor(t, 4).map_err(|e| format!("{name}: {e}"))?;
        let r = check_cm_equivariance(&exp, t);
        ensure(r.passed && r.max_residual == 0.0, || format!("{name}: residual {:e}", r.max_residual))?;
    }

    let coupled = coupled_feedforward();
    let exp = cm_taylor(&coupled, 4).map_err(|e| e.to_string())?;
    let e1 = flow_error(&exp, &coupled, 1, &[1e-2]);
    let e2 = flow_error(&exp, &coupled, 1, &[5e-3]);
    let ratio = e1 / e2;
    let want = 2f64.powi(4 + 1);
    ensure((ratio / want - 1.0).abs() <= 0.25, || format!("flow error ratio {ratio:.2}, expected {want}"))?;
    Ok(format!("phi = (1, -2, 6), exact equivariance on {} fixtures, flow ratio {ratio:.2}", fixtures.len()))
}

/// Resonant subspace of homogeneous degree-`d` fields on the plane for
/// `L x`: kernel of `p -> Dp L x - L p`, built monomial by monomial.
fn resonant_kernel(l: &Matrix<Rational>, d: u32) -> (Vec<(usize, Monomial)>, Matrix<Rational>) {
    let n = l.rows();
    let basis: Vec<(usize, Monomial)> =
        Monomial::of_degree(n, d).into_iter().flat_map(|m| (0..n).map(move |i| (i, m.clone()))).collect();
    let lin: Vec<Poly<Rational>> = (0..n)
        .map(|i| (0..n).fold(Poly::zero(n), |acc, j| acc.add(&Poly::var(n, j).scale(&l[(i, j)]))))
        .collect();
    let cols: Vec<Vec<Rational>> = basis
        .iter()
        .map(|(i, m)| {
            let p = Poly::monomial(m.clone(), q(1));
            let image: Vec<Poly<Rational>> = (0..n)
                .map(|r| {
                    let dp = if r == *i { (0..n).fold(Poly::zero(n), |acc, j| acc.add(&p.derivative(j).mul(&lin[j]))) } else { Poly::zero(n) };
                    let lp = Poly::zero(n).add(&p.scale(&l[(r, *i)]));
                    dp.sub(&lp)
                })
                .collect();
            basis.iter().map(|(r, mm)| image[*r].coeff(mm)).collect()
        })
        .collect();
    let op = Matrix::from_columns(basis.len(), &cols);
    (basis.clone(), op.nullspace(0.0))
}

fn grade_residuals<T: Scalar>(f: &PolyMapTuple<T>, grade: usize) -> Result<(f64, bool), String> {
    let res = normal_form(f, grade).map_err(|e| e.to_string())?;
    let mut comm: f64 = 0.0;
    let mut equivariant = true;
    let mode = if T::EXACT { CheckMode::Exact } else { return Err("exact scalars expected".into()) };
    for k in 1..=grade {
        let part = res.grade_part(k);
        for (v, p) in part.fields().iter().enumerate() {
            let ls = PolyMap::linear(&res.semisimple[v], 0);
            comm = comm.max(ls.bracket(p, None).0.max_abs_coeff());
        }
        equivariant &= check_equivariance(&part, mode).map_err(|e| e.to_string())?.passed;
        equivariant &= check_equivariance(&res.generators[k - 1], mode).map_err(|e| e.to_string())?.passed;
    }
    Ok((comm, equivariant))
}

fn normal_forms() -> Outcome {
    let start = Instant::now();
    let (hopf, _, _) = parse_tuple::<Rational>(&fixture_text("hopf.pvf.json")).map_err(|e| e.to_string())?;
    let res = normal_form(&hopf, 2).map_err(|e| e.to_string())?;
    ensure(res.grade_part(1).field(0).is_zero(), || "F-bar^1 is not zero".into())?;
    let (basis, ker) = resonant_kernel(&hopf.linear_parts()[0], 3);
    ensure(ker.cols() == 2, || format!("resonant span has dimension {}", ker.cols()))?;
    let coords = |f: &PolyMap<f64>| -> Vec<f64> { basis.iter().map(|(i, m)| f.output(*i).coeff(m)).collect() };
    let fres = normal_form(&hopf.cast::<f64>(), 2).map_err(|e| e.to_string())?;
    let c = Matrix::column_vector(coords(fres.grade_part(2).field(0)));
    let k = ker.to_f64();
    let (x, _) = dense::lstsq(&k, &c);
    let span_residual = k.mul(&x).sub(&c).max_abs();
    let exact_c = Matrix::column_vector(basis.iter().map(|(i, m)| res.grade_part(2).field(0).output(*i).coeff(m)).collect());
    ensure(ker.solve(&exact_c, 0.0).is_some(), || "exact F-bar^2 is not resonant".into())?;
    ensure(span_residual <= 1e-10, || format!("F-bar^2 off the resonant span by {span_residual:e}"))?;

    let net = load_net("feedforward.net.json");
    let subq = build_subq::<Rational>(&net);
    let mut inputs: Vec<(String, ExactTuple)> = vec![("Hopf".into(), hopf.clone())];
    let mut rng = ChaCha8Rng::seed_from_u64(8000);
    for i in 0..3 {
        let mut responses = BTreeMap::new();
        for (colour, n) in net.colour_representatives() {
            let mut r = random_response(&net, n, &mut rng);
            let nv = r.state_dim();
            let own = PolyMap::new(nv, 0, vec![Poly::var(nv, 0).scale(&q(-1 - n as i64))]);
            r = r.add(&own);
            responses.insert(colour, r);
        }
        let adm = AdmissibleMap::from_responses(&net, 0, responses).map_err(|e| e.to_string())?;
        inputs.push((format!("feedforward SubQ #{i}"), induce_on_subnetworks(&net, &adm, &subq).map_err(|e| e.to_string())?));
    }
    let rep = quiver_representation();
    let eq_basis = equivariant_tuple_basis(&rep, 2);
    inputs.push(("case-study quiver".into(), random_equivariant(&eq_basis, &mut rng).ok_or("empty basis")?));
    let mut worst: f64 = 0.0;
    for (name, t) in &inputs {
        let grade = if name == "case-study quiver" { 2 } else { 3 };
        let (comm, equivariant) = grade_residuals(t, grade).map_err(|e| format!("{name}: {e}"))?;
        ensure(equivariant, || format!("{name}: generator or normal form not equivariant"))?;
        ensure(comm <= 1e-10, || format!("{name}: [L^S, F-bar] = {comm:e}"))?;
        worst = worst.max(comm);
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("F-bar^2 in the 2-D resonant span ({span_residual:.1e}), {} inputs equivariant, commutator {worst:.1e}", inputs.len()))
}

fn monoid() -> Outcome {
    let picks: [[usize; 5]; 5] = [[0, 1, 2, 3, 4], [1, 3, 2, 3, 4], [2, 4, 2, 3, 4], [3, 3, 2, 3, 4], [4, 3, 2, 3, 4]];
    let sigma: Vec<Matrix<Rational>> = picks.iter().map(|p| selection(p, 5)).collect();
    let mut table = vec![vec![0usize; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            let prod = sigma[i].mul(&sigma[j]);
            let composed: Vec<usize> = (0..5).map(|r| picks[j][picks[i][r]]).collect();
            ensure(prod == selection(&composed, 5), || format!("R_s{i} R_s{j} is not a coordinate map"))?;
            table[i][j] = sigma.iter().position(|s| *s == prod).ok_or_else(|| format!("R_s{i} R_s{j} leaves the monoid"))?;
        }
    }
    ensure((0..5).all(|j| table[0][j] == j && table[j][0] == j), || "R_s0 is not a unit".into())?;

    let net = load_net("monoid.net.json");
    let rep = Representation::from_parts(
        vec![("N".into(), 5)],
        sigma.iter().enumerate().map(|(k, s)| (format!("s{k}"), "N".into(), "N".into(), s.clone())).collect(),
    )
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9000);
    let linear = PolyMap::new(3, 0, vec![Poly::var(3, 0).add(&Poly::var(3, 1).scale(&q(2))).add(&Poly::var(3, 2).scale(&q(3)))]);
    let mut samples = vec![linear];
    for _ in 0..10 {
        let mut p = Poly::zero(3);
        for _ in 0..6 {
            let mut e = vec![0u32; 3];
            for _ in 0..rng.gen_range(0..=3) {
                e[rng.gen_range(0..3)] += 1;
            }
            p.add_term(Monomial(e), Rational::from_ratio(rng.gen_range(-5..=5), rng.gen_range(1..=4)));
        }
        samples.push(PolyMap::new(3, 0, vec![p]));
    }
    let slots: [[usize; 3]; 5] = [[0, 1, 2], [1, 3, 2], [2, 4, 2], [3, 3, 2], [4, 3, 2]];
    for f in &samples {
        let outputs: Vec<Poly<Rational>> = slots.iter().map(|s| f.output(0).remap_vars(s, 5)).collect();
        let field = PolyMap::new(5, 0, outputs);
        let adm = AdmissibleMap::from_responses(&net, 0, [("cell".to_string(), f.clone())].into()).map_err(|e| e.to_string())?;
        ensure(adm.assemble(&net) == field, || "displayed form differs from the network's admissible map".into())?;
        let tuple = PolyMapTuple::new(rep.clone(), 0, vec![field]).map_err(|e| e.to_string())?;
        ensure(exact_pass(&tuple)?, || "admissible map does not commute with the monoid".into())?;
    }
    let rows: Vec<String> = table.iter().map(|r| r.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("")).collect();
    Ok(format!("closed with unit, table {}, {} admissible maps commute", rows.join("/"), samples.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("subnetwork quiver generators", subq_generators),
        ("quotient quiver maps", quoq_maps),
        ("equivariance under composition and bracket", composition_and_bracket),
        ("spectral subrepresentations and S-N", spectral_subreps),
        ("equivariant LS reduction, case 1", ls_case_one),
        ("three-case classification", three_cases),
        ("center-manifold jets", center_manifolds),
        ("equivariant normal forms", normal_forms),
        ("monoid fixture", monoid),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({secs:.2} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
