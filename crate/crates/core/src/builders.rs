//! Quivers built from a network: the subnetwork quiver (inclusions of
//! input-closed subnetworks) and the quotient quiver (surjective graph
//! fibrations between balanced quotients).

use std::collections::BTreeSet;

use crate::linalg::Matrix;
use crate::network::{AdmissibleMap, ColouredNetwork, Edge, NetworkError, Node};
use crate::poly::PolyMap;
use crate::quiver::{natural_cmp, PolyMapTuple, QuiverError, Representation};
use crate::scalar::Scalar;

/// Input-closed node sets in canonical order: size, then node ids.
pub fn enumerate_subnetworks(net: &ColouredNetwork) -> Vec<Vec<usize>> {
    let n = net.len();
    assert!(n <= 64, "subnetwork enumeration supports up to 64 nodes");
    let closure = |start: usize| -> u64 {
        let mut set = 1u64 << start;
        let mut stack = vec![start];
        while let Some(m) = stack.pop() {
            for &e in net.in_edges(m) {
                let s = net.edges()[e].src;
                if set & (1 << s) == 0 {
                    set |= 1 << s;
                    stack.push(s);
                }
            }
        }
        set
    };
    let principal: Vec<u64> = (0..n).map(closure).collect();
    let mut found: BTreeSet<u64> = principal.iter().copied().collect();
    let mut frontier: Vec<u64> = found.iter().copied().collect();
    while let Some(s) = frontier.pop() {
        for &p in &principal {
            let u = s | p;
            if found.insert(u) {
                frontier.push(u);
            }
        }
    }
    let mut out: Vec<Vec<usize>> = found.into_iter().map(|m| (0..n).filter(|&i| m & (1 << i) != 0).collect()).collect();
    out.sort_by(|a, b| {
        a.len().cmp(&b.len()).then_with(|| {
            for (x, y) in a.iter().zip(b) {
                let o = natural_cmp(&net.nodes()[*x].id, &net.nodes()[*y].id);
                if o.is_ne() {
                    return o;
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    out
}

fn block_offsets(net: &ColouredNetwork, nodes: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    nodes
        .iter()
        .map(|&m| {
            let o = acc;
            acc += net.node_dim(m);
            o
        })
        .collect()
}

fn subset_dim(net: &ColouredNetwork, nodes: &[usize]) -> usize {
    nodes.iter().map(|&m| net.node_dim(m)).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubQ<T> {
    pub rep: Representation<T>,
    /// Node set of each vertex, in vertex order.
    pub subnetworks: Vec<Vec<usize>>,
}

/// One arrow `N' -> N''` per inclusion `N'' <= N'` (loops included) with
/// the coordinate projection as its map.
pub fn build_subq<T: Scalar>(net: &ColouredNetwork) -> SubQ<T> {
    let subs = enumerate_subnetworks(net);
    let vertices: Vec<(String, usize)> =
        subs.iter().enumerate().map(|(k, s)| (format!("N{}", k + 1), subset_dim(net, s))).collect();
    let mut arrows = Vec::new();
    for (i, big) in subs.iter().enumerate() {
        for (j, small) in subs.iter().enumerate() {
            if !small.iter().all(|m| big.contains(m)) {
                continue;
            }
            let (ob, os) = (block_offsets(net, big), block_offsets(net, small));
            let mut r = Matrix::zeros(vertices[j].1, vertices[i].1);
            for (ks, m) in small.iter().enumerate() {
                let kb = big.iter().position(|x| x == m).unwrap();
                for d in 0..net.node_dim(*m) {
                    r[(os[ks] + d, ob[kb] + d)] = T::one();
                }
            }
            arrows.push((format!("a{}", arrows.len() + 1), vertices[i].0.clone(), vertices[j].0.clone(), r));
        }
    }
    let rep = Representation::from_parts(vertices, arrows).expect("subnetwork quiver is well formed");
    SubQ { rep, subnetworks: subs }
}

/// Restrictions `F^{N'}` of an admissible map to every subnetwork.
pub fn induce_on_subnetworks<T: Scalar>(
    net: &ColouredNetwork,
    adm: &AdmissibleMap<T>,
    subq: &SubQ<T>,
) -> Result<PolyMapTuple<T>, QuiverError> {
    let mut fields = Vec::new();
    for nodes in &subq.subnetworks {
        let off = block_offsets(net, nodes);
        let dim = subset_dim(net, nodes);
        let local = |m: usize| off[nodes.iter().position(|x| *x == m).expect("input-closed subnetwork")];
        let mut outputs = Vec::new();
        for &n in nodes {
            outputs.extend(adm.node_component(net, n, local, dim));
        }
        fields.push(PolyMap::new(dim, adm.params, outputs));
    }
    PolyMapTuple::new(subq.rep.clone(), adm.params, fields)
}

/// Graph fibration `phi: src -> dst`. `edge_map` is one canonical choice
/// among `edge_map_count` edge maps with the same node map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphFibration {
    pub node_map: Vec<usize>,
    pub edge_map: Vec<usize>,
    pub edge_map_count: u64,
}

fn input_key(net: &ColouredNetwork, e: usize, image: impl Fn(usize) -> usize) -> (String, usize) {
    let edge = &net.edges()[e];
    (edge.colour.clone(), image(edge.src))
}

fn factorial(k: usize) -> u64 {
    (1..=k as u64).fold(1u64, |a, b| a.saturating_mul(b))
}

/// All graph fibrations `src -> dst`, one per node map, in lexicographic
/// order of node maps.
pub fn enumerate_fibrations(src: &ColouredNetwork, dst: &ColouredNetwork, surjective: bool) -> Vec<GraphFibration> {
    let n = src.len();
    // node n can be checked once it and all its sources are assigned
    let ready_at: Vec<usize> = (0..n)
        .map(|m| src.in_edges(m).iter().map(|&e| src.edges()[e].src).chain([m]).max().unwrap())
        .collect();
    let mut check_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    for m in 0..n {
        check_at[ready_at[m]].push(m);
    }
    let mut out = Vec::new();
    let mut phi = vec![usize::MAX; n];
    fn consistent(src: &ColouredNetwork, dst: &ColouredNetwork, phi: &[usize], m: usize) -> bool {
        let t = phi[m];
        if src.in_edges(m).len() != dst.in_edges(t).len() {
            return false;
        }
        let mut a: Vec<(String, usize)> = src.in_edges(m).iter().map(|&e| input_key(src, e, |s| phi[s])).collect();
        let mut b: Vec<(String, usize)> = dst.in_edges(t).iter().map(|&e| input_key(dst, e, |s| s)).collect();
        a.sort();
        b.sort();
        a == b
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        src: &ColouredNetwork,
        dst: &ColouredNetwork,
        phi: &mut Vec<usize>,
        check_at: &[Vec<usize>],
        surjective: bool,
        out: &mut Vec<Vec<usize>>,
    ) {
        let n = src.len();
        if surjective {
            let hit: BTreeSet<usize> = phi[..k].iter().copied().collect();
            if dst.len() - hit.len() > n - k {
                return;
            }
        }
        if k == n {
            out.push(phi.clone());
            return;
        }
        for t in 0..dst.len() {
            if dst.nodes()[t].colour != src.nodes()[k].colour {
                continue;
            }
            phi[k] = t;
            if check_at[k].iter().all(|&m| consistent(src, dst, phi, m)) {
                rec(k + 1, src, dst, phi, check_at, surjective, out);
            }
        }
        phi[k] = usize::MAX;
    }
    let mut maps = Vec::new();
    if n == 0 {
        return out;
    }
    rec(0, src, dst, &mut phi, &check_at, surjective, &mut maps);
    for node_map in maps {
        let mut edge_map = vec![usize::MAX; src.edges().len()];
        let mut count = 1u64;
        for m in 0..n {
            let t = node_map[m];
            let mut a: Vec<((String, usize), usize)> =
                src.in_edges(m).iter().map(|&e| (input_key(src, e, |s| node_map[s]), e)).collect();
            let mut b: Vec<((String, usize), usize)> = dst.in_edges(t).iter().map(|&e| (input_key(dst, e, |s| s), e)).collect();
            a.sort();
            b.sort();
            for (x, y) in a.iter().zip(&b) {
                edge_map[x.1] = y.1;
            }
            let mut run = 1;
            for w in a.windows(2) {
                if w[0].0 == w[1].0 {
                    run += 1;
                } else {
                    count = count.saturating_mul(factorial(run));
                    run = 1;
                }
            }
            if !a.is_empty() {
                count = count.saturating_mul(factorial(run));
            }
        }
        out.push(GraphFibration { node_map, edge_map, edge_map_count: count });
    }
    out
}

/// Checks the fibration conditions directly on the edge map.
pub fn verify_fibration(src: &ColouredNetwork, dst: &ColouredNetwork, f: &GraphFibration) -> bool {
    for (m, &t) in f.node_map.iter().enumerate() {
        if src.nodes()[m].colour != dst.nodes()[t].colour {
            return false;
        }
        let mut images: Vec<usize> = src.in_edges(m).iter().map(|&e| f.edge_map[e]).collect();
        images.sort();
        let mut want = dst.in_edges(t).to_vec();
        want.sort();
        if images != want {
            return false;
        }
    }
    for (e, &fe) in f.edge_map.iter().enumerate() {
        let (a, b) = (&src.edges()[e], &dst.edges()[fe]);
        if a.colour != b.colour || f.node_map[a.src] != b.src || f.node_map[a.dst] != b.dst {
            return false;
        }
    }
    true
}

/// Balanced colourings as class labels (restricted growth form), in
/// canonical order: more classes first, then lexicographic labels.
pub fn balanced_colourings(net: &ColouredNetwork) -> Vec<Vec<usize>> {
    let n = net.len();
    let ready_at: Vec<usize> = (0..n)
        .map(|m| net.in_edges(m).iter().map(|&e| net.edges()[e].src).chain([m]).max().unwrap())
        .collect();
    let mut out = Vec::new();
    let mut label = vec![0usize; n];
    fn signature(net: &ColouredNetwork, label: &[usize], m: usize) -> Vec<(String, usize)> {
        let mut s: Vec<(String, usize)> = net.in_edges(m).iter().map(|&e| input_key(net, e, |x| label[x])).collect();
        s.sort();
        s
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        classes: usize,
        net: &ColouredNetwork,
        label: &mut Vec<usize>,
        ready_at: &[usize],
        out: &mut Vec<Vec<usize>>,
    ) {
        let n = net.len();
        if k == n {
            // all pairs in a class now have fully labelled inputs
            for a in 0..n {
                for b in a + 1..n {
                    if label[a] == label[b] && signature(net, label, a) != signature(net, label, b) {
                        return;
                    }
                }
            }
            out.push(label.clone());
            return;
        }
        for c in 0..=classes {
            if c < classes {
                let rep = (0..k).find(|&m| label[m] == c).unwrap();
                if net.nodes()[rep].colour != net.nodes()[k].colour {
                    continue;
                }
            }
            label[k] = c;
            // prune on pairs whose inputs are already labelled
            let ok = (0..=k).all(|a| {
                ready_at[a] > k
                    || (0..a).all(|b| ready_at[b] > k || label[a] != label[b] || signature(net, label, a) == signature(net, label, b))
            });
            if ok {
                rec(k + 1, classes.max(c + 1), net, label, ready_at, out);
            }
        }
    }
    if n > 0 {
        rec(0, 0, net, &mut label, &ready_at, &mut out);
    }
    out.sort_by(|a, b| {
        let ca = a.iter().max().unwrap() + 1;
        let cb = b.iter().max().unwrap() + 1;
        cb.cmp(&ca).then_with(|| a.cmp(b))
    });
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quotient {
    pub network: ColouredNetwork,
    /// Original nodes of each quotient node, ascending.
    pub classes: Vec<Vec<usize>>,
    /// Quotient node of each original node.
    pub projection: Vec<usize>,
}

/// Quotient by a balanced colouring; each class inherits the inputs of its
/// smallest member.
pub fn quotient_network(net: &ColouredNetwork, label: &[usize]) -> Result<Quotient, NetworkError> {
    let k = label.iter().max().map_or(0, |m| m + 1);
    let mut classes = vec![Vec::new(); k];
    for (m, &c) in label.iter().enumerate() {
        classes[c].push(m);
    }
    let nodes: Vec<Node> = classes
        .iter()
        .map(|cl| Node {
            id: cl.iter().map(|&m| net.nodes()[m].id.as_str()).collect::<Vec<_>>().join("+"),
            colour: net.nodes()[cl[0]].colour.clone(),
        })
        .collect();
    let mut edges = Vec::new();
    for (c, cl) in classes.iter().enumerate() {
        for &e in net.in_edges(cl[0]) {
            let edge = &net.edges()[e];
            edges.push(Edge { id: edge.id.clone(), src: label[edge.src], dst: c, colour: edge.colour.clone() });
        }
    }
    let network = ColouredNetwork::new(nodes, edges, net.internal_dims().clone())?;
    Ok(Quotient { network, classes, projection: label.to_vec() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuoQ<T> {
    pub rep: Representation<T>,
    /// Pairwise non-isomorphic quotients; the first is the network itself.
    pub quotients: Vec<Quotient>,
    /// For each arrow `a: N' -> N''` (in arrow order) the fibration
    /// `N'' -> N'` that induces it.
    pub fibrations: Vec<GraphFibration>,
}

fn isomorphic(a: &ColouredNetwork, b: &ColouredNetwork) -> bool {
    a.len() == b.len() && a.edges().len() == b.edges().len() && !enumerate_fibrations(a, b, true).is_empty()
}

/// Quotient quiver: vertices are the balanced quotients up to isomorphism,
/// arrows are the surjective fibrations between them, counted by node map.
pub fn build_quoq<T: Scalar>(net: &ColouredNetwork) -> Result<QuoQ<T>, NetworkError> {
    let mut quotients: Vec<Quotient> = Vec::new();
    for label in balanced_colourings(net) {
        let q = quotient_network(net, &label)?;
        if !quotients.iter().any(|p| isomorphic(&p.network, &q.network)) {
            quotients.push(q);
        }
    }
    let vertices: Vec<(String, usize)> =
        quotients.iter().enumerate().map(|(k, q)| (format!("N{}", k + 1), q.network.total_dim())).collect();
    let mut arrows = Vec::new();
    let mut fibrations = Vec::new();
    for (s, qs) in quotients.iter().enumerate() {
        for (t, qt) in quotients.iter().enumerate() {
            for fib in enumerate_fibrations(&qt.network, &qs.network, true) {
                let mut r = Matrix::zeros(vertices[t].1, vertices[s].1);
                for (m, &img) in fib.node_map.iter().enumerate() {
                    for d in 0..qt.network.node_dim(m) {
                        r[(qt.network.offset(m) + d, qs.network.offset(img) + d)] = T::one();
                    }
                }
                arrows.push((format!("a{}", arrows.len() + 1), vertices[s].0.clone(), vertices[t].0.clone(), r));
                fibrations.push(fib);
            }
        }
    }
    let rep = Representation::from_parts(vertices, arrows).expect("quotient quiver is well formed");
    Ok(QuoQ { rep, quotients, fibrations })
}

/// Induced maps `F^{N'}` on every quotient. Each quotient node takes the
/// response of any member of its class; disagreement is `IllDefined`.
pub fn induce_on_quotients<T: Scalar>(
    net: &ColouredNetwork,
    adm: &AdmissibleMap<T>,
    quoq: &QuoQ<T>,
) -> Result<PolyMapTuple<T>, NetworkError> {
    let mut fields = Vec::new();
    for (qi, q) in quoq.quotients.iter().enumerate() {
        let dim = q.network.total_dim();
        let mut outputs = Vec::new();
        for (c, cl) in q.classes.iter().enumerate() {
            let var = |m: usize| q.network.offset(q.projection[m]);
            let first = adm.node_component(net, cl[0], var, dim);
            for &m in &cl[1..] {
                if adm.node_component(net, m, var, dim) != first {
                    return Err(NetworkError::IllDefined(format!("N{} node {}", qi + 1, q.network.nodes()[c].id)));
                }
            }
            outputs.extend(first);
        }
        fields.push(PolyMap::new(dim, adm.params, outputs));
    }
    PolyMapTuple::new(quoq.rep.clone(), adm.params, fields).map_err(|e| NetworkError::NotAdmissible(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkSpec;
    use crate::Rational;

    fn load(name: &str) -> ColouredNetwork {
        let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
        let spec: NetworkSpec = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        ColouredNetwork::from_spec(&spec).unwrap()
    }

    #[test]
    fn feedforward_subnetworks() {
        let net = load("feedforward.net.json");
        let subq = build_subq::<Rational>(&net);
        assert_eq!(subq.subnetworks, vec![vec![0], vec![0, 1]]);
        assert_eq!(subq.rep.quiver().arrows().len(), 3);
    }

    #[test]
    fn quotient_catalog_sizes() {
        let net = load("quotients.net.json");
        let cols = balanced_colourings(&net);
        assert_eq!(cols.len(), 6);
        assert_eq!(cols[0], vec![0, 1, 2, 3, 4]);
        assert_eq!(cols[5], vec![0, 0, 0, 1, 1]);
        let quoq = build_quoq::<Rational>(&net).unwrap();
        assert_eq!(quoq.quotients.len(), 6);
        // 12 proper arrows and one identity per vertex
        assert_eq!(quoq.rep.quiver().arrows().len(), 18);
        let total_edge_maps: u64 = quoq.fibrations.iter().map(|f| f.edge_map_count).sum();
        assert!(total_edge_maps > 18);
    }

    #[test]
    fn fibrations_verify() {
        let net = load("quotients.net.json");
        let quoq = build_quoq::<Rational>(&net).unwrap();
        for (a, arrow) in quoq.rep.quiver().arrows().iter().enumerate() {
            let src = &quoq.quotients[arrow.target].network;
            let dst = &quoq.quotients[arrow.source].network;
            assert!(verify_fibration(src, dst, &quoq.fibrations[a]));
        }
    }
}
