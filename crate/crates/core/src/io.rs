//! JSON file formats. Every file carries `schema_version`; coefficients are
//! strings (`"p/q"` or decimal) so exact inputs round-trip bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{ColouredNetwork, NetworkError, NetworkSpec};
use crate::poly::PolyMap;
use crate::quiver::{PolyMapTuple, QuiverError, Subrepresentation};
use crate::{Matrix, Representation, Scalar};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported schema_version {0}")]
    Schema(u32),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
    #[error(transparent)]
    File(#[from] std::io::Error),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        let message = message.split(" at line").next().unwrap_or(&message).to_string();
        IoError::Parse { line: e.line(), column: e.column(), message }
    }
}

fn check_schema(v: u32) -> Result<(), IoError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(IoError::Schema(v))
    }
}

pub fn parse_network(text: &str) -> Result<ColouredNetwork, IoError> {
    let spec: NetworkSpec = serde_json::from_str(text)?;
    check_schema(spec.schema_version)?;
    if spec.nodes.is_empty() {
        return Err(IoError::Parse { line: 1, column: 1, message: "network has no nodes".into() });
    }
    Ok(ColouredNetwork::from_spec(&spec)?)
}

pub fn network_to_json(net: &ColouredNetwork) -> String {
    serde_json::to_string_pretty(&net.to_spec()).expect("serializable")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub id: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrowSpec {
    pub id: String,
    pub source: String,
    pub target: String,
    /// Row-major, `dim(target)` rows of `dim(source)` entries.
    pub matrix: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuiverFile {
    pub schema_version: u32,
    pub vertices: Vec<VertexSpec>,
    pub arrows: Vec<ArrowSpec>,
}

pub fn matrix_to_text<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<String>> {
    m.to_rows().iter().map(|r| r.iter().map(|x| x.to_text()).collect()).collect()
}

pub fn matrix_from_text<T: Scalar>(rows: &[Vec<String>], nrows: usize, ncols: usize, what: &str) -> Result<Matrix<T>, IoError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(IoError::Invalid(format!("{what}: expected a {nrows}x{ncols} matrix")));
    }
    let mut out = Matrix::zeros(nrows, ncols);
    for (i, r) in rows.iter().enumerate() {
        for (j, s) in r.iter().enumerate() {
            out[(i, j)] = T::parse_text(s).map_err(|e| IoError::Invalid(format!("{what}[{i}][{j}]: {e}")))?;
        }
    }
    Ok(out)
}

pub fn representation_to_file<T: Scalar>(rep: &Representation<T>) -> QuiverFile {
    let q = rep.quiver();
    QuiverFile {
        schema_version: SCHEMA_VERSION,
        vertices: q.vertices().iter().zip(rep.dims()).map(|(id, &dim)| VertexSpec { id: id.clone(), dim }).collect(),
        arrows: q
            .arrows()
            .iter()
            .zip(rep.maps())
            .map(|(a, m)| ArrowSpec {
                id: a.id.clone(),
                source: q.vertices()[a.source].clone(),
                target: q.vertices()[a.target].clone(),
                matrix: matrix_to_text(m),
            })
            .collect(),
    }
}

pub fn representation_from_file<T: Scalar>(file: &QuiverFile) -> Result<Representation<T>, IoError> {
    check_schema(file.schema_version)?;
    let dim = |id: &str| {
        file.vertices
            .iter()
            .find(|v| v.id == id)
            .map(|v| v.dim)
            .ok_or_else(|| IoError::Quiver(QuiverError::DanglingArrow { arrow: String::new(), vertex: id.to_string() }))
    };
    let mut arrows = Vec::new();
    for a in &file.arrows {
        let m = matrix_from_text(&a.matrix, dim(&a.target)?, dim(&a.source)?, &a.id)?;
        arrows.push((a.id.clone(), a.source.clone(), a.target.clone(), m));
    }
    Ok(Representation::from_parts(file.vertices.iter().map(|v| (v.id.clone(), v.dim)).collect(), arrows)?)
}

pub fn parse_representation<T: Scalar>(text: &str) -> Result<Representation<T>, IoError> {
    representation_from_file(&serde_json::from_str(text)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub output: usize,
    /// State exponents followed by parameter exponents.
    pub exponents: Vec<u32>,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub vertex: String,
    pub terms: Vec<TermSpec>,
}

/// `*.pvf.json`: a polynomial vector-field tuple on an inline quiver
/// representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvfFile {
    pub schema_version: u32,
    pub quiver: QuiverFile,
    #[serde(default)]
    pub params: usize,
    pub fields: Vec<FieldSpec>,
    /// Base point per vertex, zero when absent.
    #[serde(default)]
    pub base: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub lambda0: Option<Vec<String>>,
}

pub fn tuple_to_file<T: Scalar>(f: &PolyMapTuple<T>) -> PvfFile {
    let rep = f.rep();
    PvfFile {
        schema_version: SCHEMA_VERSION,
        quiver: representation_to_file(rep),
        params: f.params(),
        fields: rep
            .quiver()
            .vertices()
            .iter()
            .zip(f.fields())
            .map(|(v, field)| FieldSpec {
                vertex: v.clone(),
                terms: field
                    .term_list()
                    .into_iter()
                    .map(|(output, exponents, c)| TermSpec { output, exponents, coeff: c.to_text() })
                    .collect(),
            })
            .collect(),
        base: None,
        lambda0: None,
    }
}

pub fn tuple_from_file<T: Scalar>(file: &PvfFile) -> Result<PolyMapTuple<T>, IoError> {
    check_schema(file.schema_version)?;
    let rep: Representation<T> = representation_from_file(&file.quiver)?;
    let mut fields = Vec::new();
    for (v, id) in rep.quiver().vertices().iter().enumerate() {
        let n = rep.dim(v);
        let spec = file.fields.iter().find(|f| &f.vertex == id);
        let mut terms = Vec::new();
        for t in spec.map(|s| s.terms.as_slice()).unwrap_or(&[]) {
            if t.output >= n || t.exponents.len() != n + file.params {
                return Err(IoError::Invalid(format!("term at vertex `{id}` has the wrong shape")));
            }
            let c = T::parse_text(&t.coeff).map_err(|e| IoError::Invalid(format!("vertex `{id}`: {e}")))?;
            terms.push((t.output, t.exponents.clone(), c));
        }
        fields.push(PolyMap::from_term_list(n, file.params, n, &terms));
    }
    if let Some(f) = file.fields.iter().find(|f| rep.quiver().vertex_index(&f.vertex).is_none()) {
        return Err(IoError::Invalid(format!("field for unknown vertex `{}`", f.vertex)));
    }
    Ok(PolyMapTuple::new(rep, file.params, fields)?)
}

pub fn parse_tuple<T: Scalar>(text: &str) -> Result<(PolyMapTuple<T>, Vec<Vec<T>>, Vec<T>), IoError> {
    let file: PvfFile = serde_json::from_str(text)?;
    let f = tuple_from_file::<T>(&file)?;
    let dims = f.rep().dims().to_vec();
    let parse = |s: &String| T::parse_text(s).map_err(|e| IoError::Invalid(e.to_string()));
    let base = match &file.base {
        Some(b) => {
            if b.len() != dims.len() || b.iter().zip(&dims).any(|(x, &n)| x.len() != n) {
                return Err(IoError::Invalid("base point has the wrong shape".into()));
            }
            b.iter().map(|x| x.iter().map(parse).collect::<Result<Vec<_>, _>>()).collect::<Result<_, _>>()?
        }
        None => dims.iter().map(|&n| vec![T::zero(); n]).collect(),
    };
    let lambda0 = match &file.lambda0 {
        Some(l) if l.len() == file.params => l.iter().map(parse).collect::<Result<_, _>>()?,
        Some(_) => return Err(IoError::Invalid("lambda0 has the wrong length".into())),
        None => vec![T::zero(); file.params],
    };
    Ok((f, base, lambda0))
}

/// `*.subrep.json`: one basis matrix per vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubrepFile {
    pub schema_version: u32,
    pub bases: Vec<BasisSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub vertex: String,
    pub matrix: Vec<Vec<String>>,
}

pub fn subrep_to_file<T: Scalar>(rep: &Representation<T>, sub: &Subrepresentation<T>) -> SubrepFile {
    SubrepFile {
        schema_version: SCHEMA_VERSION,
        bases: rep
            .quiver()
            .vertices()
            .iter()
            .zip(&sub.bases)
            .map(|(v, b)| BasisSpec { vertex: v.clone(), matrix: matrix_to_text(b) })
            .collect(),
    }
}
