//! `quiverdyn`: command-line workbench. Every subcommand writes
//! `<out>/<command>.json` and `<out>/<command>.tsv` and prints the table.
//! Exit codes: 0 all checks pass, 1 a check failed, 2 bad input.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use quiverdyn::builders::{build_quoq, build_subq, enumerate_fibrations, verify_fibration};
use quiverdyn::casestudy::{casestudy_s10, fixture, tuple_from_source, Case, CaseStudyError};
use quiverdyn::center_manifold::{check_cm_equivariance, cm_taylor};
use quiverdyn::io::{self, IoError, TermSpec};
use quiverdyn::linalg::Matrix;
use quiverdyn::ls::{check_reduced_equivariance, find_branches_1param, ls_reduce, synchrony_classes, BranchSettings, NewtonSettings};
use quiverdyn::network::{check_admissible, ColouredNetwork};
use quiverdyn::normal_form::{normal_form, verify_normal_form};
use quiverdyn::quiver::{check_equivariance, effective_seed, CheckMode, SampleConfig};
use quiverdyn::spectral::{check_endomorphism, check_sn, joint_spectrum, sn_decomposition};
use quiverdyn::{PolyMap, PolyMapTuple, Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Exact,
    Float,
}

#[derive(Parser, Debug)]
#[command(name = "quiverdyn", version, about = "Quiver-equivariant reductions of network dynamics")]
struct Cli {
    /// Scalar arithmetic.
    #[arg(long, value_enum, default_value = "exact", global = true)]
    mode: Mode,
    /// Seed for sampled checks (`QUIVERDYN_SEED` overrides).
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Tolerance for float checks.
    #[arg(long, default_value_t = 1e-9, global = true)]
    tol: f64,
    /// Output directory.
    #[arg(long, short, default_value = ".", global = true)]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Parse and validate a network file.
    Validate { network: PathBuf },
    /// Subnetwork quiver of a network.
    Subq { network: PathBuf },
    /// Quotient-network quiver of a network.
    Quoq { network: PathBuf },
    /// Graph fibrations between two networks.
    Fibrations {
        source: PathBuf,
        target: PathBuf,
        #[arg(long)]
        surjective: bool,
    },
    /// Equivariance of a polynomial tuple.
    CheckEquivariance { pvf: PathBuf },
    /// Admissibility of the first field of a tuple file for a network.
    CheckAdmissible { network: PathBuf, pvf: PathBuf },
    /// Joint spectrum of the linearization at the base point.
    Spectrum { pvf: PathBuf },
    /// Semisimple-nilpotent decomposition of the linearization.
    Sn { pvf: PathBuf },
    /// Lyapunov-Schmidt reduction at the base point.
    LsReduce {
        pvf: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Bifurcation branches of the reduced map at one vertex.
    Branches {
        pvf: PathBuf,
        #[arg(long)]
        vertex: String,
        #[arg(long, default_value_t = 1e-4)]
        lambda_min: f64,
        #[arg(long, default_value_t = 1e-2)]
        lambda_max: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Center-manifold Taylor expansion.
    CmReduce {
        pvf: PathBuf,
        #[arg(long, default_value_t = 3)]
        degree: usize,
    },
    /// Equivariant normal form.
    NormalForm {
        pvf: PathBuf,
        #[arg(long, default_value_t = 2)]
        grade: usize,
    },
    /// Three-case bifurcation study of the two-type five-cell network.
    #[command(name = "casestudy-s10")]
    #[serde(rename = "casestudy-s10")]
    CaseStudy {
        /// `a=0`, `b=0` or `ab-cd=0`.
        #[arg(long)]
        case: String,
        /// DSL file defining `f(x,y)` and `g(y,x)`; built-in fixture if absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also write the assembled tuple to `<out>/casestudy-s10.pvf.json`.
        #[arg(long)]
        emit_pvf: bool,
    },
}

enum Failure {
    Input(String),
    Compute(String),
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn compute<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Compute(e.to_string())
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        input(e)
    }
}

struct Outcome {
    passed: bool,
    result: Value,
    table: String,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn network(path: &Path) -> Result<ColouredNetwork, Failure> {
    io::parse_network(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn tuple<T: Scalar>(path: &Path) -> Result<(PolyMapTuple<T>, Vec<Vec<T>>, Vec<T>), Failure> {
    io::parse_tuple::<T>(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn mat_text<T: Scalar>(m: &Matrix<T>) -> String {
    m.to_rows().iter().map(|r| r.iter().map(|x| x.to_text()).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("; ")
}

fn terms<T: Scalar>(f: &PolyMap<T>) -> Vec<TermSpec> {
    f.term_list().into_iter().map(|(output, exponents, c)| TermSpec { output, exponents, coeff: c.to_text() }).collect()
}

fn to_value<S: Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("serializable report")
}

fn linearization<T: Scalar>(f: &PolyMapTuple<T>, base: &[Vec<T>], lambda0: &[T]) -> Vec<Matrix<T>> {
    f.fields().iter().enumerate().map(|(v, field)| field.jacobian_at(&base[v], lambda0)).collect()
}

fn validate(path: &Path) -> Result<Outcome, Failure> {
    let net = network(path)?;
    let mut table = String::from("node\tcolour\tinputs\n");
    for (i, n) in net.nodes().iter().enumerate() {
        let inputs: Vec<&str> = net.in_edges(i).iter().map(|&e| net.nodes()[net.edges()[e].src].id.as_str()).collect();
        let _ = writeln!(table, "{}\t{}\t{}", n.id, n.colour, inputs.join(","));
    }
    let result = json!({
        "nodes": net.len(),
        "edges": net.edges().len(),
        "total_dim": net.total_dim(),
        "groupoid_size": net.symmetry_groupoid().len(),
        "network": net.to_spec(),
    });
    Ok(Outcome { passed: true, result, table })
}

fn arrow_table<T: Scalar>(rep: &quiverdyn::Representation<T>) -> String {
    let q = rep.quiver();
    let mut table = String::from("arrow\tsource\ttarget\tmatrix\n");
    for (a, m) in q.arrows().iter().zip(rep.maps()) {
        let _ = writeln!(table, "{}\t{}\t{}\t{}", a.id, q.vertices()[a.source], q.vertices()[a.target], mat_text(m));
    }
    table
}

fn subq<T: Scalar>(path: &Path) -> Result<Outcome, Failure> {
    let net = network(path)?;
    let s = build_subq::<T>(&net);
    let vertices: Vec<Value> = s
        .rep
        .quiver()
        .vertices()
        .iter()
        .zip(&s.subnetworks)
        .map(|(id, nodes)| json!({"id": id, "nodes": nodes.iter().map(|&n| net.nodes()[n].id.clone()).collect::<Vec<_>>()}))
        .collect();
    let result = json!({
        "vertex_count": vertices.len(),
        "arrow_count": s.rep.quiver().arrows().len(),
        "vertices": vertices,
        "representation": io::representation_to_file(&s.rep),
    });
    Ok(Outcome { passed: true, table: arrow_table(&s.rep), result })
}

fn quoq<T: Scalar>(path: &Path) -> Result<Outcome, Failure> {
    let net = network(path)?;
    let q = build_quoq::<T>(&net).map_err(compute)?;
    let vertices: Vec<Value> = q
        .rep
        .quiver()
        .vertices()
        .iter()
        .zip(&q.quotients)
        .map(|(id, quo)| {
            let classes: Vec<Vec<String>> =
                quo.classes.iter().map(|c| c.iter().map(|&n| net.nodes()[n].id.clone()).collect()).collect();
            json!({"id": id, "classes": classes, "network": quo.network.to_spec()})
        })
        .collect();
    let fibrations: Vec<Value> =
        q.fibrations.iter().map(|f| json!({"node_map": f.node_map, "edge_map_count": f.edge_map_count})).collect();
    let result = json!({
        "vertex_count": vertices.len(),
        "arrow_count": q.rep.quiver().arrows().len(),
        "vertices": vertices,
        "representation": io::representation_to_file(&q.rep),
        "fibrations": fibrations,
    });
    Ok(Outcome { passed: true, table: arrow_table(&q.rep), result })
}

fn fibrations(src: &Path, dst: &Path, surjective: bool) -> Result<Outcome, Failure> {
    let (a, b) = (network(src)?, network(dst)?);
    let list = enumerate_fibrations(&a, &b, surjective);
    let mut table = String::from("id\tnode_map\tedge_maps\tverified\n");
    let mut rows = Vec::new();
    let mut passed = true;
    for (i, f) in list.iter().enumerate() {
        let ok = verify_fibration(&a, &b, f);
        passed &= ok;
        let map: Vec<String> =
            f.node_map.iter().enumerate().map(|(m, &t)| format!("{}->{}", a.nodes()[m].id, b.nodes()[t].id)).collect();
        let _ = writeln!(table, "{}\t{}\t{}\t{}", i + 1, map.join(","), f.edge_map_count, ok);
        rows.push(json!({"node_map": map, "edge_map_count": f.edge_map_count, "verified": ok}));
    }
    let result = json!({"count": list.len(), "surjective": surjective, "fibrations": rows});
    Ok(Outcome { passed, result, table })
}

fn sample_mode<T: Scalar>(seed: u64, tol: f64) -> CheckMode {
    if T::EXACT {
        CheckMode::Exact
    } else {
        CheckMode::Sampled(SampleConfig { seed, tol, ..SampleConfig::default() })
    }
}

fn residual_table(rows: &[(String, f64)]) -> String {
    let mut t = String::from("arrow\tresidual\n");
    for (a, r) in rows {
        let _ = writeln!(t, "{a}\t{r:e}");
    }
    t
}

fn check_equivariance_cmd<T: Scalar>(path: &Path, seed: u64, tol: f64) -> Result<Outcome, Failure> {
    let (f, _, _) = tuple::<T>(path)?;
    let r = check_equivariance(&f, sample_mode::<T>(seed, tol)).map_err(compute)?;
    Ok(Outcome { passed: r.passed, table: residual_table(&r.residuals), result: to_value(&r) })
}

fn check_admissible_cmd<T: Scalar>(net_path: &Path, pvf: &Path, tol: f64) -> Result<Outcome, Failure> {
    let net = network(net_path)?;
    let (f, _, _) = tuple::<T>(pvf)?;
    let field = f.field(0);
    if field.state_dim() != net.total_dim() {
        return Err(Failure::Input(format!("field has dimension {}, network {}", field.state_dim(), net.total_dim())));
    }
    let (passed, result) = match check_admissible(&net, field, tol) {
        Ok(adm) => {
            let responses: serde_json::Map<String, Value> =
                adm.responses.iter().map(|(c, r)| (c.clone(), to_value(&terms(r)))).collect();
            (true, json!({"admissible": true, "responses": responses}))
        }
        Err(e) => (false, json!({"admissible": false, "reason": e.to_string()})),
    };
    let table = format!("admissible\n{passed}\n");
    Ok(Outcome { passed, result, table })
}

fn spectrum_cmd<T: Scalar>(path: &Path, tol: f64) -> Result<Outcome, Failure> {
    let (f, base, lambda0) = tuple::<T>(path)?;
    let l = linearization(&f, &base, &lambda0);
    let endo = check_endomorphism(f.rep(), &l, tol).map_err(compute)?;
    let spec = joint_spectrum(&l);
    let mut table = String::from("re\tim\tfactor\tmultiplicities\n");
    let mut clusters = Vec::new();
    for c in &spec.clusters {
        let factor = c.factor.as_ref().map(|p| p.coeffs().iter().map(|x| x.to_text()).collect::<Vec<_>>());
        let mult: Vec<String> = c.multiplicities.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(table, "{}\t{}\t{}\t{}", c.re, c.im, factor.as_ref().map(|f| f.join(" ")).unwrap_or_default(), mult.join(","));
        clusters.push(json!({"re": c.re, "im": c.im, "factor": factor, "multiplicities": c.multiplicities, "radius": c.radius}));
    }
    let passed = endo.passed && spec.unresolved.is_empty();
    let result = json!({
        "endomorphism": endo,
        "exact": spec.exact,
        "scale": spec.scale,
        "clusters": clusters,
        "unresolved": spec.unresolved,
        "warnings": spec.warnings,
    });
    Ok(Outcome { passed, result, table })
}

fn sn_cmd<T: Scalar>(path: &Path, tol: f64) -> Result<Outcome, Failure> {
    let (f, base, lambda0) = tuple::<T>(path)?;
    let l = linearization(&f, &base, &lambda0);
    let (s, n) = sn_decomposition(&l).map_err(compute)?;
    let report = check_sn(f.rep(), &l, &s, &n, tol.max(1e-8)).map_err(compute)?;
    let mut table = String::from("vertex\tS\tN\n");
    let mut parts = Vec::new();
    for (v, id) in f.rep().quiver().vertices().iter().enumerate() {
        let _ = writeln!(table, "{id}\t{}\t{}", mat_text(&s[v]), mat_text(&n[v]));
        parts.push(json!({"vertex": id, "semisimple": io::matrix_to_text(&s[v]), "nilpotent": io::matrix_to_text(&n[v])}));
    }
    Ok(Outcome { passed: report.passed, result: json!({"parts": parts, "axioms": report}), table })
}

fn ls_reduce_cmd<T: Scalar>(path: &Path, samples: usize, seed: u64) -> Result<Outcome, Failure> {
    let (f, base, lambda0) = tuple::<T>(path)?;
    let red = ls_reduce(&f, &base, &lambda0, NewtonSettings::default()).map_err(compute)?;
    let report = check_reduced_equivariance(&red, &f, samples, seed, 1e-8).map_err(compute)?;
    let q = f.rep().quiver();
    let mut table = String::from("vertex\tkernel_dim\tkernel_basis\tradius\n");
    let mut vertices = Vec::new();
    for (v, id) in q.vertices().iter().enumerate() {
        let b = &red.split.selected.bases[v];
        let _ = writeln!(table, "{id}\t{}\t{}\t{:e}", b.cols(), mat_text(b), red.radius(v));
        vertices.push(json!({"vertex": id, "kernel_basis": io::matrix_to_text(b), "radius": red.radius(v)}));
    }
    let restricted: Vec<Value> = q
        .arrows()
        .iter()
        .zip(&red.split.selected.coords)
        .map(|(a, c)| json!({"arrow": a.id, "matrix": io::matrix_to_text(c)}))
        .collect();
    let result = json!({
        "kernel_dims": red.kernel_dims(),
        "vertices": vertices,
        "restricted_maps": restricted,
        "newton": red.newton,
        "reduced_equivariance": report,
    });
    Ok(Outcome { passed: report.passed, result, table })
}

fn branches_cmd<T: Scalar>(path: &Path, vertex: &str, settings: BranchSettings) -> Result<Outcome, Failure> {
    let (f, base, lambda0) = tuple::<T>(path)?;
    let v = f.rep().quiver().vertex_index(vertex).ok_or_else(|| Failure::Input(format!("unknown vertex `{vertex}`")))?;
    let red = ls_reduce(&f, &base, &lambda0, NewtonSettings::default()).map_err(compute)?;
    let branches = find_branches_1param(&red, v, settings).map_err(compute)?;
    let all: Vec<usize> = (0..f.rep().dim(v)).collect();
    let mut table = String::from("vertex\tbranch\texponent\tcoefficients\tsynchrony\n");
    let mut rows = Vec::new();
    for b in &branches {
        let lifted: Vec<Vec<f64>> =
            b.points.iter().map(|(l, xi)| red.lift(v, xi, &[*l])).collect::<Result<_, _>>().map_err(compute)?;
        let classes: Vec<Vec<usize>> = synchrony_classes(&lifted, std::slice::from_ref(&all), 1e-6).into_iter().filter(|c| c.len() > 1).collect();
        let pattern: String = classes
            .iter()
            .map(|c| format!("{{{}}}", c.iter().map(|i| format!("x{}", i + 1)).collect::<Vec<_>>().join("=")))
            .collect();
        let exponent = b.exponent.map(|q| q.to_string()).unwrap_or_else(|| format!("raw:{:.3}", b.raw_exponent));
        let coeffs: Vec<String> = b.coefficients.iter().map(|c| format!("{c:.6}")).collect();
        let _ = writeln!(table, "{vertex}\t{}\t{exponent}\t({})\t{pattern}", b.id, coeffs.join(","));
        rows.push(json!({"branch": b, "synchrony": classes}));
    }
    let passed = branches.iter().all(|b| b.classified);
    Ok(Outcome { passed, result: json!({"vertex": vertex, "settings": settings, "branches": rows}), table })
}

fn cm_cmd<T: Scalar>(path: &Path, degree: usize) -> Result<Outcome, Failure> {
    let (f, _, _) = tuple::<T>(path)?;
    let exp = cm_taylor(&f, degree).map_err(compute)?;
    let report = check_cm_equivariance(&exp, &f);
    let mut table = String::from("vertex\tcenter_dim\tphi_terms\treduced_terms\tresidual\n");
    let mut vertices = Vec::new();
    for (v, id) in f.rep().quiver().vertices().iter().enumerate() {
        let _ = writeln!(
            table,
            "{id}\t{}\t{}\t{}\t{:e}",
            exp.center_basis(v).cols(),
            exp.phi[v].term_list().len(),
            exp.reduced[v].term_list().len(),
            exp.residuals[v]
        );
        vertices.push(json!({
            "vertex": id,
            "center_basis": io::matrix_to_text(exp.center_basis(v)),
            "hyperbolic_basis": io::matrix_to_text(exp.hyperbolic_basis(v)),
            "phi": terms(&exp.phi[v]),
            "reduced": terms(&exp.reduced[v]),
            "graph": terms(&exp.graph(v)),
            "residual": exp.residuals[v],
        }));
    }
    let result = json!({"degree": degree, "vertices": vertices, "equivariance": report});
    Ok(Outcome { passed: report.passed, result, table })
}

fn nf_cmd<T: Scalar>(path: &Path, grade: usize, seed: u64) -> Result<Outcome, Failure> {
    let (f, _, _) = tuple::<T>(path)?;
    let res = normal_form(&f, grade).map_err(compute)?;
    let report = verify_normal_form(&res, &f, seed).map_err(compute)?;
    let mut table = String::from("vertex\tgrade\tterms\n");
    let mut vertices = Vec::new();
    for (v, id) in f.rep().quiver().vertices().iter().enumerate() {
        for k in 1..=grade {
            let part = res.grade_part(k);
            let significant = part.field(v).term_list().iter().filter(|t| t.2.magnitude() > 1e-12).count();
            let _ = writeln!(table, "{id}\t{k}\t{significant}");
        }
        vertices.push(json!({
            "vertex": id,
            "semisimple": io::matrix_to_text(&res.semisimple[v]),
            "field": terms(res.field.field(v)),
            "generators": res.generators.iter().map(|g| terms(g.field(v))).collect::<Vec<_>>(),
            "residuals": res.residuals.iter().map(|r| r[v]).collect::<Vec<_>>(),
        }));
    }
    Ok(Outcome { passed: report.passed, result: json!({"grade": grade, "vertices": vertices, "report": report}), table })
}

fn casestudy_cmd(case: &str, source: Option<&Path>, emit: Option<&Path>, seed: u64) -> Result<Outcome, Failure> {
    let case = Case::parse(case).ok_or_else(|| Failure::Input(format!("unknown case `{case}`")))?;
    let text = match source {
        Some(p) => read(p)?,
        None => fixture(case).to_string(),
    };
    if let Some(out) = emit {
        let t = tuple_from_source(&text).map_err(input)?;
        let mut file = io::tuple_to_file(&t);
        file.lambda0 = Some(vec!["0".into()]);
        std::fs::create_dir_all(out).map_err(input)?;
        let body = serde_json::to_string_pretty(&file).expect("serializable") + "\n";
        std::fs::write(out.join("casestudy-s10.pvf.json"), body).map_err(input)?;
    }
    let report = casestudy_s10(&text, case, seed).map_err(|e| match e {
        CaseStudyError::Parse(_) | CaseStudyError::CaseMismatch { .. } | CaseStudyError::NotEquilibrium => input(e),
        other => compute(other),
    })?;
    let mut table = String::from("vertex\tbranch\texponent\tcoefficients\tsynchrony\n");
    for b in &report.branches {
        let coeffs: Vec<String> = b.coefficients.iter().map(|c| format!("{c:.6}")).collect();
        let sync: String = b.synchrony.iter().map(|c| format!("{{{}}}", c.join("="))).collect();
        let exponent = b.exponent.map(|q| q.to_string()).unwrap_or_else(|| format!("raw:{:.3}", b.raw_exponent));
        let _ = writeln!(table, "N1\t{}\t{exponent}\t({})\t{sync}", b.id, coeffs.join(","));
    }
    Ok(Outcome { passed: report.passed, result: to_value(&report), table })
}

fn dispatch<T: Scalar>(cli: &Cli, seed: u64) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Validate { network } => validate(network),
        Command::Subq { network } => subq::<T>(network),
        Command::Quoq { network } => quoq::<T>(network),
        Command::Fibrations { source, target, surjective } => fibrations(source, target, *surjective),
        Command::CheckEquivariance { pvf } => check_equivariance_cmd::<T>(pvf, seed, cli.tol),
        Command::CheckAdmissible { network, pvf } => check_admissible_cmd::<T>(network, pvf, cli.tol),
        Command::Spectrum { pvf } => spectrum_cmd::<T>(pvf, cli.tol),
        Command::Sn { pvf } => sn_cmd::<T>(pvf, cli.tol),
        Command::LsReduce { pvf, samples } => ls_reduce_cmd::<T>(pvf, *samples, seed),
        Command::Branches { pvf, vertex, lambda_min, lambda_max, points } => {
            branches_cmd::<T>(pvf, vertex, BranchSettings { lambda_min: *lambda_min, lambda_max: *lambda_max, points: *points })
        }
        Command::CmReduce { pvf, degree } => cm_cmd::<T>(pvf, *degree),
        Command::NormalForm { pvf, grade } => nf_cmd::<T>(pvf, *grade, seed),
        Command::CaseStudy { case, input, emit_pvf } => {
            casestudy_cmd(case, input.as_deref(), emit_pvf.then_some(cli.out.as_path()), seed)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Subq { .. } => "subq",
        Command::Quoq { .. } => "quoq",
        Command::Fibrations { .. } => "fibrations",
        Command::CheckEquivariance { .. } => "check-equivariance",
        Command::CheckAdmissible { .. } => "check-admissible",
        Command::Spectrum { .. } => "spectrum",
        Command::Sn { .. } => "sn",
        Command::LsReduce { .. } => "ls-reduce",
        Command::Branches { .. } => "branches",
        Command::CmReduce { .. } => "cm-reduce",
        Command::NormalForm { .. } => "normal-form",
        Command::CaseStudy { .. } => "casestudy-s10",
    }
}

fn input_paths(c: &Command) -> Vec<&Path> {
    match c {
        Command::Validate { network } | Command::Subq { network } | Command::Quoq { network } => vec![network],
        Command::Fibrations { source, target, .. } => vec![source, target],
        Command::CheckAdmissible { network, pvf } => vec![network, pvf],
        Command::CheckEquivariance { pvf }
        | Command::Spectrum { pvf }
        | Command::Sn { pvf }
        | Command::LsReduce { pvf, .. }
        | Command::Branches { pvf, .. }
        | Command::CmReduce { pvf, .. }
        | Command::NormalForm { pvf, .. } => vec![pvf],
        Command::CaseStudy { input, .. } => input.iter().map(|p| p.as_path()).collect(),
    }
}

/// SHA-256 over the run configuration and the contents of every input.
fn config_hash(cli: &Cli, seed: u64) -> String {
    let mut h = Sha256::new();
    let config = json!({"command": cli.command, "mode": cli.mode, "seed": seed, "tol": cli.tol});
    h.update(config.to_string().as_bytes());
    for p in input_paths(&cli.command) {
        h.update(std::fs::read(p).unwrap_or_default());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = effective_seed(cli.seed);
    let name = command_name(&cli.command);
    let outcome = match cli.mode {
        Mode::Exact => dispatch::<Rational>(&cli, seed),
        Mode::Float => dispatch::<f64>(&cli, seed),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {name}: {msg}");
            return ExitCode::from(1);
        }
    };
    let report = json!({
        "tool": "quiverdyn",
        "schema_version": io::SCHEMA_VERSION,
        "command": name,
        "mode": cli.mode,
        "seed": seed,
        "config_hash": config_hash(&cli, seed),
        "passed": outcome.passed,
        "result": outcome.result,
    });
    let write = || -> std::io::Result<()> {
        std::fs::create_dir_all(&cli.out)?;
        std::fs::write(cli.out.join(format!("{name}.json")), serde_json::to_string_pretty(&report)? + "\n")?;
        std::fs::write(cli.out.join(format!("{name}.tsv")), &outcome.table)
    };
    if let Err(e) = write() {
        eprintln!("error: cannot write reports to {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }
    let mut stdout = std::io::stdout().lock();
    let _ = write!(stdout, "{}", outcome.table);
    let _ = writeln!(stdout, "{name}: {}", if outcome.passed { "pass" } else { "FAIL" });
    ExitCode::from(if outcome.passed { 0 } else { 1 })
}
