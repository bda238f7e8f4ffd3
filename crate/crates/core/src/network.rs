//! Coloured networks, their input symmetry groupoid and admissible maps.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{solve_in_basis, Matrix};
use crate::poly::{Monomial, Poly, PolyMap};
use crate::quiver::natural_cmp;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("edge `{edge}` refers to unknown node `{node}`")]
    UnknownNode { edge: String, node: String },
    #[error("edge colour `{colour}` joins incompatible node colours: {detail}")]
    EdgeColourClash { colour: String, detail: String },
    #[error("nodes `{a}` and `{b}` share a colour but not an input type")]
    InputMismatch { a: String, b: String },
    #[error("internal dimension problem for colour `{colour}`: {detail}")]
    DimClash { colour: String, detail: String },
    #[error("component of node `{node}` depends on non-input node `{variable}`")]
    DependencyViolation { node: String, variable: String },
    #[error("no response function for colour `{colour}` is invariant under its input symmetries")]
    GroupoidViolation { colour: String },
    #[error("map is not admissible: {0}")]
    NotAdmissible(String),
    #[error("induced map is ill-defined at `{0}`")]
    IllDefined(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub colour: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub src: String,
    pub dst: String,
    pub colour: String,
}

/// On-disk network description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    pub internal_dims: BTreeMap<String, usize>,
}

fn default_schema() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub colour: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub src: usize,
    pub dst: usize,
    pub colour: String,
}

/// One input slot of a node's response function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    /// `None` for the node's own state.
    pub edge: Option<usize>,
    pub source: usize,
    pub dim: usize,
}

/// Validated coloured network. The own state of a node is an implicit
/// input slot; loop edges are additional inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColouredNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    internal_dims: BTreeMap<String, usize>,
    in_edges: Vec<Vec<usize>>,
    offsets: Vec<usize>,
}

impl ColouredNetwork {
    pub fn from_spec(spec: &NetworkSpec) -> Result<Self, NetworkError> {
        let mut seen = BTreeSet::new();
        for n in &spec.nodes {
            if !seen.insert(n.id.clone()) {
                return Err(NetworkError::DuplicateId(n.id.clone()));
            }
        }
        let nodes: Vec<Node> = spec.nodes.iter().map(|n| Node { id: n.id.clone(), colour: n.colour.clone() }).collect();
        let find = |id: &str, edge: &str| {
            nodes
                .iter()
                .position(|n| n.id == id)
                .ok_or_else(|| NetworkError::UnknownNode { edge: edge.to_string(), node: id.to_string() })
        };
        let mut eseen = BTreeSet::new();
        let mut edges = Vec::new();
        for e in &spec.edges {
            if !eseen.insert(e.id.clone()) {
                return Err(NetworkError::DuplicateId(e.id.clone()));
            }
            edges.push(Edge { id: e.id.clone(), src: find(&e.src, &e.id)?, dst: find(&e.dst, &e.id)?, colour: e.colour.clone() });
        }
        Self::new(nodes, edges, spec.internal_dims.clone())
    }

    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>, internal_dims: BTreeMap<String, usize>) -> Result<Self, NetworkError> {
        for n in &nodes {
            match internal_dims.get(&n.colour) {
                None => {
                    return Err(NetworkError::DimClash { colour: n.colour.clone(), detail: "no internal dimension".into() })
                }
                Some(0) => return Err(NetworkError::DimClash { colour: n.colour.clone(), detail: "dimension 0".into() }),
                _ => {}
            }
        }
        let mut by_colour: BTreeMap<&str, (BTreeSet<&str>, BTreeSet<&str>)> = BTreeMap::new();
        for e in &edges {
            let entry = by_colour.entry(&e.colour).or_default();
            entry.0.insert(&nodes[e.src].colour);
            entry.1.insert(&nodes[e.dst].colour);
        }
        for (c, (srcs, dsts)) in &by_colour {
            if srcs.len() > 1 || dsts.len() > 1 {
                return Err(NetworkError::EdgeColourClash {
                    colour: c.to_string(),
                    detail: format!("sources {:?}, targets {:?}", srcs, dsts),
                });
            }
        }
        let mut in_edges: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            in_edges[e.dst].push(k);
        }
        for list in &mut in_edges {
            list.sort_by(|&a, &b| {
                let (ea, eb) = (&edges[a], &edges[b]);
                ea.colour
                    .cmp(&eb.colour)
                    .then_with(|| natural_cmp(&nodes[ea.src].id, &nodes[eb.src].id))
                    .then_with(|| natural_cmp(&ea.id, &eb.id))
            });
        }
        for a in 0..nodes.len() {
            for b in a + 1..nodes.len() {
                if nodes[a].colour != nodes[b].colour {
                    continue;
                }
                let ta: Vec<&str> = in_edges[a].iter().map(|&e| edges[e].colour.as_str()).collect();
                let tb: Vec<&str> = in_edges[b].iter().map(|&e| edges[e].colour.as_str()).collect();
                if ta != tb {
                    return Err(NetworkError::InputMismatch { a: nodes[a].id.clone(), b: nodes[b].id.clone() });
                }
            }
        }
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        let mut acc = 0;
        for n in &nodes {
            offsets.push(acc);
            acc += internal_dims[&n.colour];
        }
        offsets.push(acc);
        Ok(ColouredNetwork { nodes, edges, internal_dims, in_edges, offsets })
    }

    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            schema_version: 1,
            nodes: self.nodes.iter().map(|n| NodeSpec { id: n.id.clone(), colour: n.colour.clone() }).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    id: e.id.clone(),
                    src: self.nodes[e.src].id.clone(),
                    dst: self.nodes[e.dst].id.clone(),
                    colour: e.colour.clone(),
                })
                .collect(),
            internal_dims: self.internal_dims.clone(),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn internal_dims(&self) -> &BTreeMap<String, usize> {
        &self.internal_dims
    }

    pub fn node_dim(&self, n: usize) -> usize {
        self.internal_dims[&self.nodes[n].colour]
    }

    /// Offset of node `n` in the total phase space.
    pub fn offset(&self, n: usize) -> usize {
        self.offsets[n]
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Incoming edges in canonical order: edge colour, source id, edge id.
    pub fn in_edges(&self, n: usize) -> &[usize] {
        &self.in_edges[n]
    }

    /// Own state followed by the incoming edges.
    pub fn slots(&self, n: usize) -> Vec<Slot> {
        let mut out = vec![Slot { edge: None, source: n, dim: self.node_dim(n) }];
        for &e in &self.in_edges[n] {
            let s = self.edges[e].src;
            out.push(Slot { edge: Some(e), source: s, dim: self.node_dim(s) });
        }
        out
    }

    pub fn slot_dim(&self, n: usize) -> usize {
        self.slots(n).iter().map(|s| s.dim).sum()
    }

    /// Slot positions of node `n` grouped by edge colour; slots in one group
    /// may be permuted by the groupoid.
    pub fn interchangeable_groups(&self, n: usize) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut last: Option<&str> = None;
        for (k, &e) in self.in_edges[n].iter().enumerate() {
            let c = self.edges[e].colour.as_str();
            if last == Some(c) {
                groups.last_mut().unwrap().push(k + 1);
            } else {
                groups.push(vec![k + 1]);
            }
            last = Some(c);
        }
        groups
    }

    /// A node of each colour, in order of first appearance.
    pub fn colour_representatives(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for (k, n) in self.nodes.iter().enumerate() {
            if !out.iter().any(|(c, _)| c == &n.colour) {
                out.push((n.colour.clone(), k));
            }
        }
        out
    }

    /// Nodes whose state the given node reads: itself and its in-neighbours.
    pub fn input_nodes(&self, n: usize) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.in_edges[n].iter().map(|&e| self.edges[e].src).collect();
        s.insert(n);
        s
    }

    /// The full input symmetry groupoid: every colour-preserving bijection
    /// between the input sets of equally coloured nodes.
    pub fn symmetry_groupoid(&self) -> Vec<InputBijection> {
        let mut out = Vec::new();
        for a in 0..self.nodes.len() {
            for b in 0..self.nodes.len() {
                if self.nodes[a].colour != self.nodes[b].colour {
                    continue;
                }
                for perm in group_elements(&self.interchangeable_groups(a), self.in_edges[a].len() + 1) {
                    let map = (1..perm.len())
                        .map(|k| (self.in_edges[a][k - 1], self.in_edges[b][perm[k] - 1]))
                        .collect();
                    out.push(InputBijection { from: a, to: b, map });
                }
            }
        }
        out
    }
}

/// `beta: in(from) -> in(to)` as pairs of edge indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputBijection {
    pub from: usize,
    pub to: usize,
    pub map: Vec<(usize, usize)>,
}

/// All permutations of `0..k`, lexicographic.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Slot permutations (`perm[slot] = image slot`) generated by independent
/// permutations inside each group. Slot 0 is fixed.
pub fn group_elements(groups: &[Vec<usize>], nslots: usize) -> Vec<Vec<usize>> {
    let mut out = vec![(0..nslots).collect::<Vec<_>>()];
    for g in groups {
        let mut next = Vec::new();
        for base in &out {
            for p in permutations(g.len()) {
                let mut e = base.clone();
                for (i, &pi) in p.iter().enumerate() {
                    e[g[i]] = g[pi];
                }
                next.push(e);
            }
        }
        out = next;
    }
    out
}

/// Per node colour, a response function of the node's slot variables
/// (own state, inputs in canonical order, then parameters).
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleMap<T> {
    pub params: usize,
    pub responses: BTreeMap<String, PolyMap<T>>,
}

fn slot_var_perm(net: &ColouredNetwork, n: usize, slot_perm: &[usize], params: usize) -> Vec<usize> {
    let slots = net.slots(n);
    let mut starts = Vec::new();
    let mut acc = 0;
    for s in &slots {
        starts.push(acc);
        acc += s.dim;
    }
    let mut perm = vec![0; acc + params];
    for (k, s) in slots.iter().enumerate() {
        for d in 0..s.dim {
            perm[starts[k] + d] = starts[slot_perm[k]] + d;
        }
    }
    for p in 0..params {
        perm[acc + p] = acc + p;
    }
    perm
}

/// Maps slot variables of node `n` to total-space variables.
fn slot_to_total(net: &ColouredNetwork, n: usize, params: usize) -> Vec<usize> {
    let mut map = Vec::new();
    for s in net.slots(n) {
        for d in 0..s.dim {
            map.push(net.offset(s.source) + d);
        }
    }
    for p in 0..params {
        map.push(net.total_dim() + p);
    }
    map
}

impl<T: Scalar> AdmissibleMap<T> {
    /// Validates shapes and invariance of each response under the slot
    /// permutations of its colour.
    pub fn from_responses(
        net: &ColouredNetwork,
        params: usize,
        responses: BTreeMap<String, PolyMap<T>>,
    ) -> Result<Self, NetworkError> {
        for (colour, n) in net.colour_representatives() {
            let Some(r) = responses.get(&colour) else {
                return Err(NetworkError::NotAdmissible(format!("no response for colour `{colour}`")));
            };
            let d = net.internal_dims[&colour];
            if r.state_dim() != net.slot_dim(n) || r.param_dim() != params || r.out_dim() != d {
                return Err(NetworkError::NotAdmissible(format!(
                    "response for `{colour}` must map {} slot variables and {} parameters to R^{}",
                    net.slot_dim(n),
                    params,
                    d
                )));
            }
            let groups = net.interchangeable_groups(n);
            for g in group_elements(&groups, net.slots(n).len()) {
                let perm = slot_var_perm(net, n, &g, params);
                let nv = r.nvars();
                let moved: Vec<Poly<T>> = r.outputs().iter().map(|p| p.remap_vars(&perm, nv)).collect();
                if moved != r.outputs() {
                    return Err(NetworkError::GroupoidViolation { colour });
                }
            }
        }
        Ok(AdmissibleMap { params, responses })
    }

    /// The admissible vector field on the total phase space.
    pub fn assemble(&self, net: &ColouredNetwork) -> PolyMap<T> {
        let total = net.total_dim();
        let nv = total + self.params;
        let mut outputs = Vec::with_capacity(total);
        for n in 0..net.len() {
            let r = &self.responses[&net.nodes[n].colour];
            let map = slot_to_total(net, n, self.params);
            for p in r.outputs() {
                outputs.push(p.remap_vars(&map, nv));
            }
        }
        PolyMap::new(total, self.params, outputs)
    }

    /// Component of node `n` as a function of chosen node states: slot
    /// variables are sent through `node_var`, which gives the first variable
    /// of each source node in a target space of `state` variables.
    pub fn node_component(
        &self,
        net: &ColouredNetwork,
        n: usize,
        node_var: impl Fn(usize) -> usize,
        state: usize,
    ) -> Vec<Poly<T>> {
        let r = &self.responses[&net.nodes[n].colour];
        let mut map = Vec::new();
        for s in net.slots(n) {
            for d in 0..s.dim {
                map.push(node_var(s.source) + d);
            }
        }
        for p in 0..self.params {
            map.push(state + p);
        }
        r.outputs().iter().map(|p| p.remap_vars(&map, state + self.params)).collect()
    }

    pub fn cast<U: Scalar>(&self) -> AdmissibleMap<U> {
        AdmissibleMap { params: self.params, responses: self.responses.iter().map(|(k, v)| (k.clone(), v.cast())).collect() }
    }
}

/// Decides whether a total-space field is admissible and, if so, recovers
/// symmetric response functions. Dependence on non-input nodes is reported
/// first; otherwise the responses are found by solving a linear system in
/// the coefficients of slot-symmetric polynomials.
pub fn check_admissible<T: Scalar>(net: &ColouredNetwork, f: &PolyMap<T>, tol: f64) -> Result<AdmissibleMap<T>, NetworkError> {
    let total = net.total_dim();
    if f.state_dim() != total || f.out_dim() != total {
        return Err(NetworkError::NotAdmissible(format!("field must act on the total space R^{total}")));
    }
    let params = f.param_dim();
    let node_of_var = |v: usize| (0..net.len()).find(|&n| v >= net.offset(n) && v < net.offset(n + 1));
    for n in 0..net.len() {
        let allowed = net.input_nodes(n);
        for d in 0..net.node_dim(n) {
            let used = f.output(net.offset(n) + d).support();
            for (v, &u) in used.iter().enumerate().take(total) {
                if u {
                    let m = node_of_var(v).unwrap();
                    if !allowed.contains(&m) {
                        return Err(NetworkError::DependencyViolation {
                            node: net.nodes[n].id.clone(),
                            variable: net.nodes[m].id.clone(),
                        });
                    }
                }
            }
        }
    }
    let mut responses = BTreeMap::new();
    for (colour, rep) in net.colour_representatives() {
        let members: Vec<usize> = (0..net.len()).filter(|&n| net.nodes[n].colour == colour).collect();
        let dim = net.internal_dims[&colour];
        let nslot = net.slot_dim(rep);
        let nv = nslot + params;
        let deg = members
            .iter()
            .flat_map(|&n| (0..dim).map(move |d| net.offset(n) + d))
            .map(|i| f.output(i).degree())
            .max()
            .unwrap_or(0);
        let group: Vec<Vec<usize>> = group_elements(&net.interchangeable_groups(rep), net.slots(rep).len())
            .iter()
            .map(|g| slot_var_perm(net, rep, g, params))
            .collect();
        // orbit sums of monomials under the slot symmetries
        let mut orbits: Vec<Poly<T>> = Vec::new();
        let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
        for d in 0..=deg {
            for m in Monomial::of_degree(nv, d) {
                if seen.contains(&m.0) {
                    continue;
                }
                let mut orbit = Poly::zero(nv);
                let mut members_of_orbit = BTreeSet::new();
                for perm in &group {
                    let mut e = vec![0u32; nv];
                    for (i, &k) in m.0.iter().enumerate() {
                        e[perm[i]] += k;
                    }
                    members_of_orbit.insert(e);
                }
                for e in members_of_orbit {
                    seen.insert(e.clone());
                    orbit.add_term(Monomial(e), T::one());
                }
                orbits.push(orbit);
            }
        }
        let mut outputs = Vec::new();
        for d in 0..dim {
            // rows: (member, total monomial); columns: orbits
            let mut rows: BTreeMap<(usize, Monomial), usize> = BTreeMap::new();
            let mut cols: Vec<Vec<(usize, T)>> = Vec::new();
            let mut images = Vec::new();
            for &n in &members {
                let map = slot_to_total(net, n, params);
                let imgs: Vec<Poly<T>> = orbits.iter().map(|o| o.remap_vars(&map, total + params)).collect();
                images.push(imgs);
            }
            let mut targets = Vec::new();
            for (k, &n) in members.iter().enumerate() {
                for (m, _) in f.output(net.offset(n) + d).terms() {
                    let len = rows.len();
                    rows.entry((k, m.clone())).or_insert(len);
                }
                for img in &images[k] {
                    for (m, _) in img.terms() {
                        let len = rows.len();
                        rows.entry((k, m.clone())).or_insert(len);
                    }
                }
                targets.push(f.output(net.offset(n) + d).clone());
            }
            for j in 0..orbits.len() {
                let mut col = Vec::new();
                for (k, _) in members.iter().enumerate() {
                    for (m, c) in images[k][j].terms() {
                        col.push((rows[&(k, m.clone())], c.clone()));
                    }
                }
                cols.push(col);
            }
            let mut a = Matrix::<T>::zeros(rows.len(), orbits.len());
            for (j, col) in cols.iter().enumerate() {
                for (i, c) in col {
                    a[(*i, j)] = a[(*i, j)].clone() + c.clone();
                }
            }
            let mut b = Matrix::zeros(rows.len(), 1);
            for ((k, m), &i) in &rows {
                b[(i, 0)] = targets[*k].coeff(m);
            }
            let Some((u, _)) = solve_in_basis_any(&a, &b, tol) else {
                return Err(NetworkError::GroupoidViolation { colour: colour.clone() });
            };
            let mut resp = Poly::zero(nv);
            for (j, o) in orbits.iter().enumerate() {
                resp = resp.add(&o.scale(&u[(j, 0)]));
            }
            outputs.push(resp);
        }
        responses.insert(colour.clone(), PolyMap::new(nslot, params, outputs));
    }
    Ok(AdmissibleMap { params, responses })
}

/// Like [`solve_in_basis`] but allows rank-deficient systems.
fn solve_in_basis_any<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, tol: f64) -> Option<(Matrix<T>, f64)> {
    if T::EXACT {
        a.solve(b, 0.0).map(|x| (x, 0.0))
    } else if a.cols() == 0 {
        solve_in_basis(a, b, tol)
    } else {
        let (x, res) = crate::linalg::dense::lstsq(&a.to_f64(), &b.to_f64());
        (res <= tol).then(|| (x.map(|v| T::from_f64(*v)), res))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn spec(nodes: &[(&str, &str)], edges: &[(&str, &str, &str)], dims: &[(&str, usize)]) -> NetworkSpec {
        NetworkSpec {
            schema_version: 1,
            nodes: nodes.iter().map(|(i, c)| NodeSpec { id: i.to_string(), colour: c.to_string() }).collect(),
            edges: edges
                .iter()
                .enumerate()
                .map(|(k, (s, d, c))| EdgeSpec { id: format!("e{k}"), src: s.to_string(), dst: d.to_string(), colour: c.to_string() })
                .collect(),
            internal_dims: dims.iter().map(|(c, d)| (c.to_string(), *d)).collect(),
        }
    }

    fn fig5() -> ColouredNetwork {
        let y = "yellow";
        let g = "green";
        ColouredNetwork::from_spec(&spec(
            &[("1", y), ("2", y), ("3", y), ("4", g), ("5", g)],
            &[
                ("1", "3", "blue"),
                ("3", "1", "blue"),
                ("2", "3", "blue"),
                ("3", "2", "blue"),
                ("2", "2", "blue"),
                ("2", "1", "blue"),
                ("1", "4", "orange"),
                ("3", "5", "orange"),
                ("4", "5", "red"),
                ("4", "4", "red"),
            ],
            &[(y, 1), (g, 1)],
        ))
        .unwrap()
    }

    #[test]
    fn validation_errors() {
        let e = ColouredNetwork::from_spec(&spec(&[("1", "a"), ("2", "b")], &[("1", "2", "c"), ("2", "1", "c")], &[("a", 1), ("b", 1)]))
            .unwrap_err();
        assert!(matches!(e, NetworkError::EdgeColourClash { .. }));
        let e = ColouredNetwork::from_spec(&spec(&[("1", "a"), ("2", "a")], &[("1", "2", "c")], &[("a", 1)])).unwrap_err();
        assert!(matches!(e, NetworkError::InputMismatch { .. }));
        let e = ColouredNetwork::from_spec(&spec(&[("1", "a")], &[], &[])).unwrap_err();
        assert!(matches!(e, NetworkError::DimClash { .. }));
        let e = ColouredNetwork::from_spec(&spec(&[("1", "a")], &[("1", "9", "c")], &[("a", 1)])).unwrap_err();
        assert!(matches!(e, NetworkError::UnknownNode { .. }));
    }

    #[test]
    fn groupoid_sizes() {
        let net = fig5();
        let g = net.symmetry_groupoid();
        // 3x3 yellow pairs with 2 bijections each, 2x2 green pairs with 1
        assert_eq!(g.len(), 9 * 2 + 4);
    }

    fn r(v: i64) -> Rational {
        Rational::from_i64(v)
    }

    #[test]
    fn admissible_round_trip() {
        let net = fig5();
        // yellow: own x, inputs b1 b2 (symmetric): x^2 + b1 b2 - (b1 + b2)
        let mut fy = Poly::zero(3);
        fy.add_term(Monomial(vec![2, 0, 0]), r(1));
        fy.add_term(Monomial(vec![0, 1, 1]), r(1));
        fy.add_term(Monomial(vec![0, 1, 0]), r(-1));
        fy.add_term(Monomial(vec![0, 0, 1]), r(-1));
        // green: own y, orange o, red r: y r + 2 o
        let mut fg = Poly::zero(3);
        fg.add_term(Monomial(vec![1, 0, 1]), r(1));
        fg.add_term(Monomial(vec![0, 1, 0]), r(2));
        let resp: BTreeMap<String, PolyMap<Rational>> = [
            ("yellow".to_string(), PolyMap::new(3, 0, vec![fy])),
            ("green".to_string(), PolyMap::new(3, 0, vec![fg])),
        ]
        .into_iter()
        .collect();
        let adm = AdmissibleMap::from_responses(&net, 0, resp).unwrap();
        let total = adm.assemble(&net);
        let back = check_admissible(&net, &total, 0.0).unwrap();
        assert_eq!(back.assemble(&net), total);
        // node 1 reading node 4 is a dependency violation
        let mut bad = total.clone();
        let mut p = bad.output(0).clone();
        p.add_term(Monomial::var(5, 3), r(1));
        bad = PolyMap::new(5, 0, (0..5).map(|i| if i == 0 { p.clone() } else { bad.output(i).clone() }).collect());
        assert!(matches!(check_admissible(&net, &bad, 0.0), Err(NetworkError::DependencyViolation { .. })));
        // asymmetric yellow response
        let mut fy2 = Poly::zero(3);
        fy2.add_term(Monomial(vec![0, 1, 0]), r(1));
        let resp2: BTreeMap<String, PolyMap<Rational>> = [
            ("yellow".to_string(), PolyMap::new(3, 0, vec![fy2])),
            ("green".to_string(), PolyMap::new(3, 0, vec![Poly::zero(3)])),
        ]
        .into_iter()
        .collect();
        assert!(matches!(AdmissibleMap::from_responses(&net, 0, resp2), Err(NetworkError::GroupoidViolation { .. })));
    }

    #[test]
    fn non_admissible_total_field_is_rejected() {
        let net = fig5();
        // node 1 reads x2 linearly, node 3 reads x1 linearly with different weights
        let mut outs: Vec<Poly<Rational>> = (0..5).map(|_| Poly::zero(5)).collect();
        outs[0].add_term(Monomial::var(5, 1), r(1));
        outs[2].add_term(Monomial::var(5, 0), r(2));
        let f = PolyMap::new(5, 0, outs);
        assert!(matches!(check_admissible(&net, &f, 0.0), Err(NetworkError::GroupoidViolation { .. })));
    }
}
