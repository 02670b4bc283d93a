//! Non-planarity certificates and disagreement witnesses.
//!
//! A type I subgraph is a theta graph: three internally disjoint paths
//! `a`, `d`, `f` from `c` to `b` whose first darts appear in the order
//! `(ca₁, cd₁, cf₁)` around `c` and whose last darts appear in the order
//! `(bf_k, ba_n, bd_m)` around `b`. A type II subgraph is a pair of cycles
//! `a`, `f` through `c`, otherwise disjoint, interleaved as
//! `(ca₁, cf_k, ca_n, cf₁)` around `c`.
//!
//! Splitting `G` at `c` along the rotation arc after `ca₁` gives an
//! H-decomposition `G = G₁ ∨_c G₂`. Kind A (type I) means `G₁` avoids
//! `V(H) ∖ {c}`; kind B (type II) means `G₁` avoids the vertices of the
//! `a` cycle. Promotion rewrites `H` until one of these holds, and the
//! witnesses for each kind are built from a tree containing most of `H`.

use serde_json::{json, Value};
use thiserror::Error;

use crate::bernardi::{self, BernardiError};
use crate::divisor::{boundary, Divisor, PicGroup};
use crate::ribbon::{
    wedge_split, Dart, EdgeId, GraphError, RibbonGraph, SpanningTree, UnionFind, Vertex, WedgeSplit,
};
use crate::rotor::{self, RotorError};
use crate::torsor::{verify_witness, DisagreementWitness, Provenance, TorsorError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("graph is planar; no type I or type II subgraph exists")]
    Planar,
    #[error("no type I or type II subgraph found in a non-planar graph")]
    SearchExhausted,
    #[error("promotion did not decrease N ({before} → {after})")]
    LoopBound { before: usize, after: usize },
    #[error("invalid subgraph: {0}")]
    InvalidSubgraph(String),
    #[error("graph has loops or multiple edges")]
    NotSimple,
    #[error("decomposition is not of kind {0:?}")]
    WrongKind(Kind),
    #[error("wedge locality violated: {0}")]
    LocalityViolation(String),
    #[error("witness failed: {0}")]
    WitnessFailed(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rotor(#[from] RotorError),
    #[error(transparent)]
    Bernardi(#[from] BernardiError),
    #[error(transparent)]
    Torsor(#[from] TorsorError),
}

type Result<T> = std::result::Result<T, DecomposeError>;

fn reversed(g: &RibbonGraph, path: &[Dart]) -> Vec<Dart> {
    path.iter().rev().map(|&d| g.alpha(d)).collect()
}

/// Vertices strictly inside a dart path.
fn interior(g: &RibbonGraph, path: &[Dart]) -> Vec<Vertex> {
    path.iter()
        .take(path.len().saturating_sub(1))
        .map(|&d| g.head(d))
        .collect()
}

fn check_walk(
    g: &RibbonGraph,
    path: &[Dart],
    from: Vertex,
    to: Vertex,
) -> std::result::Result<(), String> {
    let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
        return Err("empty path".into());
    };
    if g.tail(first) != from || g.head(last) != to {
        return Err("path has wrong endpoints".into());
    }
    if path.windows(2).any(|w| g.head(w[0]) != g.tail(w[1])) {
        return Err("path is not a walk".into());
    }
    Ok(())
}

/// Checks that the paths use distinct edges and that their interiors are
/// pairwise disjoint and avoid `ends`.
fn check_disjoint(
    g: &RibbonGraph,
    paths: &[&[Dart]],
    ends: &[Vertex],
) -> std::result::Result<(), String> {
    let mut seen_v = vec![false; g.vertex_count()];
    for &v in ends {
        seen_v[v.0] = true;
    }
    let mut seen_e = vec![false; g.dart_count()];
    for p in paths {
        for &d in p.iter() {
            let e = g.edge_of(d);
            if std::mem::replace(&mut seen_e[e.0], true) {
                return Err(format!("edge {} used twice", g.edge_name(e)));
            }
        }
        for v in interior(g, p) {
            if std::mem::replace(&mut seen_v[v.0], true) {
                return Err(format!("vertex {} used twice", g.label(v)));
            }
        }
    }
    Ok(())
}

/// Three internally disjoint `c`–`b` paths, stored as dart sequences from `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeISubgraph {
    pub c: Vertex,
    pub b: Vertex,
    pub a: Vec<Dart>,
    pub d: Vec<Dart>,
    pub f: Vec<Dart>,
}

impl TypeISubgraph {
    pub fn validate(&self, g: &RibbonGraph) -> Result<()> {
        let bad = |m: String| DecomposeError::InvalidSubgraph(m);
        if self.c == self.b {
            return Err(bad("c = b".into()));
        }
        for p in [&self.a, &self.d, &self.f] {
            check_walk(g, p, self.c, self.b).map_err(bad)?;
        }
        check_disjoint(g, &[&self.a, &self.d, &self.f], &[self.c, self.b]).map_err(bad)?;
        if !g.in_cyclic_order(self.c, &[self.a[0], self.d[0], self.f[0]]) {
            return Err(bad("order at c is not (ca1, cd1, cf1)".into()));
        }
        let end = |p: &[Dart]| g.alpha(*p.last().expect("nonempty"));
        if !g.in_cyclic_order(self.b, &[end(&self.f), end(&self.a), end(&self.d)]) {
            return Err(bad("order at b is not (bf_k, ba_n, bd_m)".into()));
        }
        Ok(())
    }

    pub fn vertices(&self, g: &RibbonGraph) -> Vec<Vertex> {
        let mut vs = vec![self.c, self.b];
        for p in [&self.a, &self.d, &self.f] {
            vs.extend(interior(g, p));
        }
        vs
    }

    pub fn edges(&self, g: &RibbonGraph) -> Vec<EdgeId> {
        [&self.a, &self.d, &self.f]
            .iter()
            .flat_map(|p| p.iter().map(|&d| g.edge_of(d)))
            .collect()
    }

    /// Labels three `c`–`b` paths by their first darts' positions around `c`.
    fn from_theta(g: &RibbonGraph, c: Vertex, b: Vertex, mut paths: [Vec<Dart>; 3]) -> Self {
        paths.sort_by_key(|p| g.rotation_index(p[0]));
        let [a, d, f] = paths;
        TypeISubgraph { c, b, a, d, f }
    }
}

/// Two cycles through `c`, stored as dart sequences from `c` back to `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeIISubgraph {
    pub c: Vertex,
    pub a: Vec<Dart>,
    pub f: Vec<Dart>,
}

impl TypeIISubgraph {
    pub fn ca1(&self) -> Dart {
        self.a[0]
    }

    pub fn can(&self, g: &RibbonGraph) -> Dart {
        g.alpha(*self.a.last().expect("nonempty"))
    }

    pub fn cf1(&self) -> Dart {
        self.f[0]
    }

    pub fn cfk(&self, g: &RibbonGraph) -> Dart {
        g.alpha(*self.f.last().expect("nonempty"))
    }

    pub fn a_vertices(&self, g: &RibbonGraph) -> Vec<Vertex> {
        interior(g, &self.a)
    }

    pub fn f_vertices(&self, g: &RibbonGraph) -> Vec<Vertex> {
        interior(g, &self.f)
    }

    pub fn validate(&self, g: &RibbonGraph) -> Result<()> {
        let bad = |m: String| DecomposeError::InvalidSubgraph(m);
        for p in [&self.a, &self.f] {
            check_walk(g, p, self.c, self.c).map_err(bad)?;
        }
        check_disjoint(g, &[&self.a, &self.f], &[self.c]).map_err(bad)?;
        let order = [self.ca1(), self.cfk(g), self.can(g), self.cf1()];
        if !g.in_cyclic_order(self.c, &order) {
            return Err(bad("order at c is not (ca1, cf_k, ca_n, cf1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    TypeI(TypeISubgraph),
    TypeII(TypeIISubgraph),
}

impl Certificate {
    pub fn c(&self) -> Vertex {
        match self {
            Certificate::TypeI(h) => h.c,
            Certificate::TypeII(h) => h.c,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    A,
    B,
}

/// `(H, G₁, G₂)` with the rotation arcs at `c`. `kind` is `None` while the
/// split does not yet satisfy the kind condition.
#[derive(Clone, Debug)]
pub struct HDecomposition {
    pub kind: Option<Kind>,
    pub h: Certificate,
    pub split: WedgeSplit,
    pub x_darts: Vec<Dart>,
    pub y_darts: Vec<Dart>,
}

impl HDecomposition {
    /// `N`, the length of the x-arc.
    pub fn n(&self) -> usize {
        self.x_darts.len()
    }

    pub fn to_json(&self, g: &RibbonGraph) -> Value {
        let names = |p: &[Dart]| -> Vec<String> {
            std::iter::once(g.tail(p[0]))
                .chain(p.iter().map(|&d| g.head(d)))
                .map(|v| g.label(v).to_string())
                .collect()
        };
        let darts = |ds: &[Dart]| -> Vec<String> {
            ds.iter()
                .map(|&d| format!("{}{}", g.label(g.tail(d)), g.label(g.head(d))))
                .collect()
        };
        let h = match &self.h {
            Certificate::TypeI(h) => json!({
                "type": "I",
                "c": g.label(h.c),
                "b": g.label(h.b),
                "a_path": names(&h.a),
                "d_path": names(&h.d),
                "f_path": names(&h.f),
            }),
            Certificate::TypeII(h) => json!({
                "type": "II",
                "c": g.label(h.c),
                "a_cycle": names(&h.a),
                "f_cycle": names(&h.f),
            }),
        };
        let labels =
            |vs: &[Vertex]| -> Vec<String> { vs.iter().map(|&v| g.label(v).to_string()).collect() };
        json!({
            "format": 1,
            "kind": self.kind.map(|k| format!("{k:?}")),
            "h": h,
            "x_darts": darts(&self.x_darts),
            "y_darts": darts(&self.y_darts),
            "g1_vertices": labels(&self.split.g1.vertex_map),
            "g2_vertices": labels(&self.split.g2.vertex_map),
        })
    }
}

fn simple_paths(g: &RibbonGraph, from: Vertex, to: Vertex) -> Vec<Vec<Dart>> {
    fn go(
        g: &RibbonGraph,
        v: Vertex,
        to: Vertex,
        seen: &mut [bool],
        path: &mut Vec<Dart>,
        out: &mut Vec<Vec<Dart>>,
    ) {
        for &d in g.rotation(v) {
            let w = g.head(d);
            if w == to {
                path.push(d);
                out.push(path.clone());
                path.pop();
            } else if !seen[w.0] {
                seen[w.0] = true;
                path.push(d);
                go(g, w, to, seen, path, out);
                path.pop();
                seen[w.0] = false;
            }
        }
    }
    let mut seen = vec![false; g.vertex_count()];
    seen[from.0] = true;
    let mut out = Vec::new();
    go(g, from, to, &mut seen, &mut Vec::new(), &mut out);
    out.sort_by(|p, q| p.len().cmp(&q.len()).then_with(|| p.cmp(q)));
    out
}

/// Simple cycles through `c`, in both directions, as dart sequences.
fn cycles_through(g: &RibbonGraph, c: Vertex) -> Vec<Vec<Dart>> {
    fn go(
        g: &RibbonGraph,
        v: Vertex,
        c: Vertex,
        seen: &mut [bool],
        used: &mut [bool],
        path: &mut Vec<Dart>,
        out: &mut Vec<Vec<Dart>>,
    ) {
        for &d in g.rotation(v) {
            let e = g.edge_of(d);
            if used[e.0] {
                continue;
            }
            let w = g.head(d);
            if w == c {
                path.push(d);
                out.push(path.clone());
                path.pop();
            } else if !seen[w.0] {
                seen[w.0] = true;
                used[e.0] = true;
                path.push(d);
                go(g, w, c, seen, used, path, out);
                path.pop();
                used[e.0] = false;
                seen[w.0] = false;
            }
        }
    }
    let mut out = Vec::new();
    for &d in g.rotation(c) {
        if g.head(d) == c {
            // a loop is a cycle on its own; take each loop once per direction
            out.push(vec![d]);
            continue;
        }
        let mut seen = vec![false; g.vertex_count()];
        seen[c.0] = true;
        seen[g.head(d).0] = true;
        let mut used = vec![false; g.dart_count()];
        used[g.edge_of(d).0] = true;
        let mut path = vec![d];
        go(g, g.head(d), c, &mut seen, &mut used, &mut path, &mut out);
    }
    out.sort_by(|p, q| p.len().cmp(&q.len()).then_with(|| p.cmp(q)));
    out
}

/// First type I subgraph in search order: pairs `c < b` ascending, then path
/// triples in (length, darts) order.
pub fn find_type_i(g: &RibbonGraph) -> Option<TypeISubgraph> {
    for c in g.vertices() {
        for b in g.vertices().filter(|&b| b > c) {
            let paths = simple_paths(g, c, b);
            for i in 0..paths.len() {
                for j in i + 1..paths.len() {
                    if check_disjoint(g, &[&paths[i], &paths[j]], &[c, b]).is_err() {
                        continue;
                    }
                    for k in j + 1..paths.len() {
                        let h = TypeISubgraph::from_theta(
                            g,
                            c,
                            b,
                            [paths[i].clone(), paths[j].clone(), paths[k].clone()],
                        );
                        if h.validate(g).is_ok() {
                            return Some(h);
                        }
                    }
                }
            }
        }
    }
    None
}

/// First type II subgraph in search order: `c` ascending, then ordered
/// cycle pairs in (length, darts) order.
pub fn find_type_ii(g: &RibbonGraph) -> Option<TypeIISubgraph> {
    for c in g.vertices() {
        let cycles = cycles_through(g, c);
        for a in &cycles {
            for f in &cycles {
                let h = TypeIISubgraph {
                    c,
                    a: a.clone(),
                    f: f.clone(),
                };
                if h.validate(g).is_ok() {
                    return Some(h);
                }
            }
        }
    }
    None
}

/// A type I subgraph if one exists, else a type II subgraph.
pub fn find_type_i_or_ii(g: &RibbonGraph) -> Result<Certificate> {
    if g.is_planar_ribbon() {
        return Err(DecomposeError::Planar);
    }
    if let Some(h) = find_type_i(g) {
        return Ok(Certificate::TypeI(h));
    }
    find_type_ii(g)
        .map(Certificate::TypeII)
        .ok_or(DecomposeError::SearchExhausted)
}

/// Builds the split for `h` and records whether it already has its kind.
pub fn h_decomposition(g: &RibbonGraph, h: &Certificate) -> Result<HDecomposition> {
    let (from, to) = match h {
        Certificate::TypeI(h) => (h.a[0], h.d[0]),
        Certificate::TypeII(h) => (h.ca1(), h.can(g)),
    };
    let x_darts = g.rotation_arc(from, to);
    let y_darts = g.rotation_arc(to, from);
    let split = wedge_split(g, h.c(), &x_darts)?;
    let mut in_g1 = vec![false; g.vertex_count()];
    for &v in &split.g1.vertex_map {
        in_g1[v.0] = true;
    }
    let kind = match h {
        Certificate::TypeI(t) => {
            let clean = t.vertices(g).iter().all(|&v| v == t.c || !in_g1[v.0]);
            clean.then_some(Kind::A)
        }
        Certificate::TypeII(t) => {
            let clean = t.a_vertices(g).iter().all(|&v| !in_g1[v.0]);
            if clean {
                debug_assert!(t.f.iter().all(|&d| split.g1.dart_to_sub(d).is_some()));
            }
            clean.then_some(Kind::B)
        }
    };
    Ok(HDecomposition {
        kind,
        h: h.clone(),
        split,
        x_darts,
        y_darts,
    })
}

/// Shortest path from `c` leaving through an x-dart, avoiding `c` and the
/// `blocked` vertices inside, ending at the first `target` vertex reached.
fn offending_path(
    g: &RibbonGraph,
    c: Vertex,
    x_darts: &[Dart],
    target: &[bool],
    blocked: &[bool],
) -> Option<Vec<Dart>> {
    let n = g.vertex_count();
    let mut parent: Vec<Option<Dart>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[c.0] = true;
    let mut queue = std::collections::VecDeque::new();
    let build = |parent: &[Option<Dart>], last: Dart| {
        let mut path = vec![last];
        let mut v = g.tail(last);
        while v != c {
            let d = parent[v.0].expect("BFS parent");
            path.push(d);
            v = g.tail(d);
        }
        path.reverse();
        path
    };
    let mut visit = |d: Dart,
                     parent: &mut Vec<Option<Dart>>,
                     queue: &mut std::collections::VecDeque<Vertex>| {
        let w = g.head(d);
        if seen[w.0] {
            return None;
        }
        if target[w.0] {
            return Some(build(parent, d));
        }
        if !blocked[w.0] {
            seen[w.0] = true;
            parent[w.0] = Some(d);
            queue.push_back(w);
        }
        None
    };
    for &d in x_darts {
        if let Some(p) = visit(d, &mut parent, &mut queue) {
            return Some(p);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &d in g.rotation(v) {
            if let Some(p) = visit(d, &mut parent, &mut queue) {
                return Some(p);
            }
        }
    }
    None
}

/// Which rewrite a promotion step applied.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum PromotionCase {
    /// Type I, path ends on the `d` path.
    EndsOnD,
    /// Type I, path ends on the `a` path.
    EndsOnA,
    /// Type I, path ends on the `f` path with order `(z, prev, next)`.
    EndsOnFBeforePrev,
    /// Type I, path ends on the `f` path with order `(z, next, prev)`.
    EndsOnFBeforeNext,
    /// Type I, path ends at `b`.
    EndsOnB,
    /// Type II, path leaves after `cf_k`: replaces the `a_n` side.
    ReplaceANSide,
    /// Type II, path leaves before `cf_k`: replaces the `a₁` side.
    ReplaceA1Side,
    /// Type II, path crosses the `f` cycle: switch to a type I subgraph.
    DivertToTypeI,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromotionStep {
    pub case: PromotionCase,
    pub n_before: usize,
    pub n_after: usize,
}

#[derive(Clone, Debug)]
pub struct Promotion {
    pub decomposition: HDecomposition,
    pub steps: Vec<PromotionStep>,
}

fn rewrite_type_i(
    g: &RibbonGraph,
    h: &TypeISubgraph,
    path: &[Dart],
) -> Result<(TypeISubgraph, PromotionCase)> {
    let z = g.head(*path.last().expect("nonempty path"));
    let position = |p: &[Dart]| (1..p.len()).find(|&j| g.head(p[j - 1]) == z);
    let candidates: Vec<(TypeISubgraph, PromotionCase)> = if z == h.b {
        vec![
            (
                TypeISubgraph {
                    d: path.to_vec(),
                    ..h.clone()
                },
                PromotionCase::EndsOnB,
            ),
            (
                TypeISubgraph {
                    a: path.to_vec(),
                    ..h.clone()
                },
                PromotionCase::EndsOnB,
            ),
        ]
    } else if let Some(j) = position(&h.d) {
        let d = path.iter().chain(&h.d[j..]).copied().collect();
        vec![(TypeISubgraph { d, ..h.clone() }, PromotionCase::EndsOnD)]
    } else if let Some(j) = position(&h.a) {
        let a = path.iter().chain(&h.a[j..]).copied().collect();
        vec![(TypeISubgraph { a, ..h.clone() }, PromotionCase::EndsOnA)]
    } else if let Some(j) = position(&h.f) {
        let zd = g.alpha(*path.last().expect("nonempty"));
        let prev = g.alpha(h.f[j - 1]);
        let next = h.f[j];
        let tail = reversed(g, &h.f[j..]);
        let f = h.f[..j].to_vec();
        if g.in_cyclic_order(z, &[zd, prev, next]) {
            let a = h.a.iter().chain(&tail).copied().collect();
            vec![(
                TypeISubgraph {
                    c: h.c,
                    b: z,
                    a,
                    d: path.to_vec(),
                    f,
                },
                PromotionCase::EndsOnFBeforePrev,
            )]
        } else {
            let d = h.d.iter().chain(&tail).copied().collect();
            vec![(
                TypeISubgraph {
                    c: h.c,
                    b: z,
                    a: path.to_vec(),
                    d,
                    f,
                },
                PromotionCase::EndsOnFBeforeNext,
            )]
        }
    } else {
        return Err(DecomposeError::InvalidSubgraph(
            "offending path ends off H".into(),
        ));
    };
    let mut last_err = None;
    for (cand, case) in candidates {
        match cand.validate(g) {
            Ok(()) => return Ok((cand, case)),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one candidate"))
}

/// Rewrites `h` until its decomposition is of kind A.
pub fn promote_type_i(g: &RibbonGraph, h: &TypeISubgraph) -> Result<Promotion> {
    h.validate(g)?;
    let mut h = h.clone();
    let mut steps = Vec::new();
    loop {
        let dec = h_decomposition(g, &Certificate::TypeI(h.clone()))?;
        if dec.kind == Some(Kind::A) {
            return Ok(Promotion {
                decomposition: dec,
                steps,
            });
        }
        let mut target = vec![false; g.vertex_count()];
        for v in h.vertices(g).into_iter().filter(|&v| v != h.c) {
            target[v.0] = true;
        }
        let path = offending_path(g, h.c, &dec.x_darts, &target, &target).ok_or_else(|| {
            DecomposeError::InvalidSubgraph("G1 touches H but no path reaches it".into())
        })?;
        let (next, case) = rewrite_type_i(g, &h, &path)?;
        let n_after = g.rotation_arc(next.a[0], next.d[0]).len();
        if n_after >= dec.n() {
            return Err(DecomposeError::LoopBound {
                before: dec.n(),
                after: n_after,
            });
        }
        steps.push(PromotionStep {
            case,
            n_before: dec.n(),
            n_after,
        });
        h = next;
    }
}

/// Type I subgraph between `c` and the last `f`-vertex on `path`.
fn divert_to_type_i(g: &RibbonGraph, h: &TypeIISubgraph, path: &[Dart]) -> Result<TypeISubgraph> {
    let fs = h.f_vertices(g);
    let zl = g.head(*path.last().expect("nonempty"));
    let jl = (1..=path.len())
        .rev()
        .find(|&j| fs.contains(&g.head(path[j - 1])))
        .ok_or_else(|| DecomposeError::InvalidSubgraph("path avoids the f cycle".into()))?;
    let w = g.head(path[jl - 1]);
    let l_rev = reversed(g, &path[jl..]);
    let jf = (1..h.f.len())
        .find(|&j| g.head(h.f[j - 1]) == w)
        .expect("w on f");
    let ia = (1..h.a.len())
        .find(|&i| g.head(h.a[i - 1]) == zl)
        .expect("z_l on a");
    let p1 = h.f[..jf].to_vec();
    let p2 = reversed(g, &h.f[jf..]);
    let keep_a1: Vec<Dart> = h.a[..ia].iter().chain(&l_rev).copied().collect();
    let keep_an: Vec<Dart> = reversed(g, &h.a[ia..])
        .into_iter()
        .chain(l_rev.iter().copied())
        .collect();
    let ld = path.get(jl).copied();
    let prefer_a1 = match ld {
        Some(ld) => g.in_cyclic_order(w, &[ld, h.f[jf], g.alpha(h.f[jf - 1])]),
        None => true,
    };
    let order = if prefer_a1 {
        [keep_a1, keep_an]
    } else {
        [keep_an, keep_a1]
    };
    let mut last_err = None;
    for p3 in order {
        let t = TypeISubgraph::from_theta(g, h.c, w, [p1.clone(), p2.clone(), p3]);
        match t.validate(g) {
            Ok(()) => return Ok(t),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("two candidates"))
}

/// Rewrites `h` until its decomposition is of kind B, or diverts to a type I
/// subgraph (kind A) when an offending path must cross the `f` cycle.
pub fn promote_type_ii(g: &RibbonGraph, h: &TypeIISubgraph) -> Result<Promotion> {
    h.validate(g)?;
    let mut h = h.clone();
    let mut steps = Vec::new();
    loop {
        let dec = h_decomposition(g, &Certificate::TypeII(h.clone()))?;
        if dec.kind == Some(Kind::B) {
            return Ok(Promotion {
                decomposition: dec,
                steps,
            });
        }
        let n = g.vertex_count();
        let mut target = vec![false; n];
        for v in h.a_vertices(g) {
            target[v.0] = true;
        }
        let mut blocked = target.clone();
        for v in h.f_vertices(g) {
            blocked[v.0] = true;
        }
        if let Some(path) = offending_path(g, h.c, &dec.x_darts, &target, &blocked) {
            let zl = g.head(*path.last().expect("nonempty"));
            let ia = (1..h.a.len())
                .find(|&i| g.head(h.a[i - 1]) == zl)
                .expect("z_l on a");
            let i = dec
                .x_darts
                .iter()
                .position(|&d| d == h.cfk(g))
                .expect("cf_k in the x-arc");
            let j = dec
                .x_darts
                .iter()
                .position(|&d| d == path[0])
                .expect("path starts in the x-arc");
            let (a, case) = if j > i {
                let a = h.a[..ia]
                    .iter()
                    .copied()
                    .chain(reversed(g, &path))
                    .collect();
                (a, PromotionCase::ReplaceANSide)
            } else {
                let a = path.iter().chain(&h.a[ia..]).copied().collect();
                (a, PromotionCase::ReplaceA1Side)
            };
            let next = TypeIISubgraph { a, ..h.clone() };
            next.validate(g)?;
            let n_after = g.rotation_arc(next.ca1(), next.can(g)).len();
            if n_after >= dec.n() {
                return Err(DecomposeError::LoopBound {
                    before: dec.n(),
                    after: n_after,
                });
            }
            steps.push(PromotionStep {
                case,
                n_before: dec.n(),
                n_after,
            });
            h = next;
            continue;
        }
        let path = offending_path(g, h.c, &dec.x_darts, &target, &target).ok_or_else(|| {
            DecomposeError::InvalidSubgraph("G1 touches the a cycle but no path reaches it".into())
        })?;
        let t = divert_to_type_i(g, &h, &path)?;
        let mut promoted = promote_type_i(g, &t)?;
        let n_after = promoted.decomposition.n();
        steps.push(PromotionStep {
            case: PromotionCase::DivertToTypeI,
            n_before: dec.n(),
            n_after,
        });
        steps.append(&mut promoted.steps);
        return Ok(Promotion {
            decomposition: promoted.decomposition,
            steps,
        });
    }
}

/// Finds a certificate and promotes it to a kind-A or kind-B decomposition.
pub fn classify(g: &RibbonGraph) -> Result<HDecomposition> {
    classify_with_steps(g).map(|p| p.decomposition)
}

pub fn classify_with_steps(g: &RibbonGraph) -> Result<Promotion> {
    match find_type_i_or_ii(g)? {
        Certificate::TypeI(h) => promote_type_i(g, &h),
        Certificate::TypeII(h) => promote_type_ii(g, &h),
    }
}

/// `2 Σ ∂(cx_i) ≁ 0` in `Pic⁰(G₁)`. All darts are in `G₁` coordinates.
pub fn lemma_l5_holds(g1: &RibbonGraph, c: Vertex, x_darts: &[Dart], y_darts: &[Dart]) -> bool {
    let mut sum = Divisor::zero(g1.vertex_count());
    for &d in x_darts {
        debug_assert_eq!(g1.tail(d), c);
        sum += &boundary(g1, d);
    }
    let pic = PicGroup::of(g1);
    if cfg!(debug_assertions) {
        // the same class as the boundary sum of {cx_i} ∪ {y_l c}
        let mut b = sum.clone();
        for &d in y_darts {
            b += &boundary(g1, g1.alpha(d));
        }
        debug_assert_eq!(pic.class(&b), pic.class(&(2 * &sum)));
    }
    !pic.is_principal(&(2 * &sum))
}

/// `lemma_l5_holds` for a kind-B decomposition, mapping the arcs into `G₁`.
pub fn lemma_l5_for(dec: &HDecomposition) -> bool {
    let g1 = &dec.split.g1;
    let x: Vec<Dart> = dec
        .x_darts
        .iter()
        .filter_map(|&d| g1.dart_to_sub(d))
        .collect();
    let y: Vec<Dart> = dec
        .y_darts
        .iter()
        .filter_map(|&d| g1.dart_to_sub(d))
        .collect();
    lemma_l5_holds(&g1.graph, dec.split.c1(), &x, &y)
}

/// Spanning tree containing `base`, completed greedily in edge-id order.
pub fn extend_tree(g: &RibbonGraph, base: &[EdgeId]) -> Result<SpanningTree> {
    let mut uf = UnionFind::new(g.vertex_count());
    let mut edges = Vec::new();
    for &e in base {
        let (u, v) = g.endpoints(e);
        if !uf.union(u.0, v.0) {
            return Err(DecomposeError::InvalidSubgraph(format!(
                "{} closes a cycle",
                g.edge_name(e)
            )));
        }
        edges.push(e);
    }
    for e in g.edges() {
        let (u, v) = g.endpoints(e);
        if uf.union(u.0, v.0) {
            edges.push(e);
        }
    }
    Ok(SpanningTree::new(g, edges)?)
}

fn sub_edge(sub: &crate::ribbon::Subgraph, d: Dart) -> EdgeId {
    sub.graph
        .edge_of(sub.dart_to_sub(d).expect("dart lies in the subgraph"))
}

fn swap_edge(t: &SpanningTree, add: EdgeId, remove: EdgeId) -> Vec<EdgeId> {
    let mut edges: Vec<EdgeId> = t.edges().iter().copied().filter(|&e| e != remove).collect();
    edges.push(add);
    edges.sort_unstable();
    edges
}

/// The witness of the kind-A argument: sink `d₁`, chip `c`, and a tree
/// containing `H` except `cd₁` and `bf_k`.
pub fn witness_prop_a(g: &RibbonGraph, dec: &HDecomposition) -> Result<DisagreementWitness> {
    if !g.is_simple() {
        return Err(DecomposeError::NotSimple);
    }
    let (Some(Kind::A), Certificate::TypeI(h)) = (dec.kind, &dec.h) else {
        return Err(DecomposeError::WrongKind(Kind::A));
    };
    let cd1 = g.edge_of(h.d[0]);
    let bfk = g.edge_of(*h.f.last().expect("nonempty"));
    let base: Vec<EdgeId> = h
        .edges(g)
        .into_iter()
        .filter(|&e| e != cd1 && e != bfk)
        .collect();
    let t = extend_tree(g, &base)?;
    let sink = g.head(h.d[0]);
    let chip = h.c;
    let t2 = rotor::rotor_route(g, &t, chip, sink)?;

    let split = &dec.split;
    let g2 = &split.g2;
    let (_, t2_before) = split.restrict_tree(g, &t);
    let (_, t2_after) = split.restrict_tree(g, &t2);
    let expect = swap_edge(&t2_before, sub_edge(g2, h.d[0]), sub_edge(g2, h.a[0]));
    if t2_after.edges() != expect.as_slice() {
        return Err(DecomposeError::LocalityViolation(
            "T2' ≠ T2 ∪ {cd1} ∖ {ca1}".into(),
        ));
    }

    // the G2 part alone already breaks the criterion
    let sink2 = g2.vertex_to_sub(sink).expect("d1 in G2");
    let e2 = g2.dart_to_sub(g.alpha(h.d[0])).expect("d1c in G2");
    let b_before = bernardi::bernardi_tour(&g2.graph, &t2_before, sink2, e2)?.divisor;
    let b_after = bernardi::bernardi_tour(&g2.graph, &t2_after, sink2, e2)?.divisor;
    let n2 = g2.graph.vertex_count();
    let gap = &(&b_after - &b_before) - &Divisor::difference(n2, split.c2(), sink2);
    if PicGroup::of(&g2.graph).is_principal(&gap) {
        return Err(DecomposeError::WitnessFailed(
            "G2 part is equivalent to (c) − (d1)".into(),
        ));
    }

    let w = DisagreementWitness {
        sink,
        chip,
        tree: t,
        provenance: Provenance::PropA,
    };
    if !verify_witness(g, &w)? {
        return Err(DecomposeError::WitnessFailed(
            "kind-A witness does not verify".into(),
        ));
    }
    Ok(w)
}

/// Intermediate data of the kind-B argument.
#[derive(Clone, Debug)]
pub struct PropBReport {
    /// The `a_n` witness when it verifies, else the sink-`c` one.
    pub witness: DisagreementWitness,
    /// `(c, x_i, T₁⁽ⁱ⁾ ∨ T₂)`, built and verified whenever `G₁` breaks the
    /// criterion, even if the `a_n` witness also verifies.
    pub sink_c_witness: Option<DisagreementWitness>,
    /// The tree containing the `a` path and its image under `((c) − (a_n))_{a_n}`.
    pub tree: SpanningTree,
    pub routed: SpanningTree,
    /// `T₁⁽¹⁾, …, T₁⁽ᴺ⁺¹⁾` in `G₁` coordinates.
    pub table: Vec<SpanningTree>,
    /// Index `i` (0-based) of the first chip `x_i` breaking the criterion in
    /// `G₁`, if any.
    pub first_violation: Option<usize>,
    /// Whether `2 Σ ∂(cx_i) ≁ 0` on `G₁`; only evaluated when no violation occurs.
    pub lemma_l5: Option<bool>,
    /// `β(T') − β(T)` for the basepoint `(a_n, a_n c)`.
    pub difference: Divisor,
    /// The `G₁` part `β¹_(c,cy₁)(T₁') − β¹_(c,cx₁)(T₁)`, lifted to `G`.
    pub g1_part: Divisor,
}

/// The witness of the kind-B argument: first `(a_n, c, T)`, and if that
/// fails, `(c, x_i, T₁⁽ⁱ⁾ ∨ T₂)` for the first `i` where `G₁` breaks the
/// criterion. Asserts the wedge-locality facts and the identities along the
/// way.
pub fn witness_prop_b(g: &RibbonGraph, dec: &HDecomposition) -> Result<PropBReport> {
    if !g.is_simple() {
        return Err(DecomposeError::NotSimple);
    }
    let (Some(Kind::B), Certificate::TypeII(h)) = (dec.kind, &dec.h) else {
        return Err(DecomposeError::WrongKind(Kind::B));
    };
    let split = &dec.split;
    let (g1, g2) = (&split.g1, &split.g2);
    let (c, c1) = (h.c, split.c1());
    let nv = g.vertex_count();

    let base: Vec<EdgeId> = h.a[..h.a.len() - 1].iter().map(|&d| g.edge_of(d)).collect();
    let t = extend_tree(g, &base)?;
    let an = g.tail(*h.a.last().expect("nonempty"));
    let t_routed = rotor::rotor_route(g, &t, c, an)?;
    let (t1, t2) = split.restrict_tree(g, &t);
    let (t1r, t2r) = split.restrict_tree(g, &t_routed);

    let expect = swap_edge(&t2, sub_edge(g2, h.can(g)), sub_edge(g2, h.ca1()));
    if t2r.edges() != expect.as_slice() {
        return Err(DecomposeError::LocalityViolation(
            "T2' ≠ T2 ∪ {ca_n} ∖ {ca1}".into(),
        ));
    }

    let xs: Vec<Dart> = dec
        .x_darts
        .iter()
        .map(|&d| g1.dart_to_sub(d).expect("x-arc lies in G1"))
        .collect();
    let mut table = vec![t1.clone()];
    for &x in &xs {
        let next = rotor::rotor_route(
            &g1.graph,
            table.last().expect("nonempty"),
            g1.graph.head(x),
            c1,
        )?;
        table.push(next);
    }
    if table.last() != Some(&t1r) {
        return Err(DecomposeError::LocalityViolation("T1' ≠ T1^(N+1)".into()));
    }

    // the decomposition of the tour difference into its two sides
    let e_an = *h.a.last().expect("nonempty");
    let cx1 = xs[0];
    let cy1 = {
        let mut d = g.sigma(h.can(g));
        while g1.dart_to_sub(d).is_none() {
            d = g.sigma(d);
        }
        g1.dart_to_sub(d).expect("in G1")
    };
    let beta = |gr: &RibbonGraph, tr: &SpanningTree, v: Vertex, e: Dart| {
        bernardi::bernardi_tour(gr, tr, v, e).map(|r| r.divisor)
    };
    let difference = &beta(g, &t_routed, an, e_an)? - &beta(g, &t, an, e_an)?;
    let an2 = g2.vertex_to_sub(an).expect("a_n in G2");
    let e_an2 = g2.dart_to_sub(e_an).expect("a_n c in G2");
    let g2_part =
        (&beta(&g2.graph, &t2r, an2, e_an2)? - &beta(&g2.graph, &t2, an2, e_an2)?).lift(g2, nv);
    let g1_part_local = &beta(&g1.graph, &t1r, c1, cy1)? - &beta(&g1.graph, &t1, c1, cx1)?;
    let g1_part = g1_part_local.lift(g1, nv);
    if difference != &g2_part + &g1_part {
        return Err(DecomposeError::LocalityViolation(
            "Bernardi tour does not split across the wedge".into(),
        ));
    }

    // β¹_(c,cy1)(T1') − β¹_(c,cx1)(T1) ∼ β¹_(c,cx1)(T1') − β¹_(c,cx1)(T1) + Σ ∂(cx_i)
    let pic1 = PicGroup::of(&g1.graph);
    let mut sum_x = Divisor::zero(g1.graph.vertex_count());
    for &x in &xs {
        sum_x += &boundary(&g1.graph, x);
    }
    let rhs = &(&beta(&g1.graph, &t1r, c1, cx1)? - &beta(&g1.graph, &t1, c1, cx1)?) + &sum_x;
    if pic1.class(&g1_part_local) != pic1.class(&rhs) {
        return Err(DecomposeError::WitnessFailed(
            "basepoint shift identity fails in G1".into(),
        ));
    }

    let betas: Vec<Divisor> = table
        .iter()
        .map(|tr| beta(&g1.graph, tr, c1, cx1))
        .collect::<std::result::Result<_, _>>()?;
    let first_violation = (0..xs.len()).find(|&i| {
        let step = &betas[i + 1] - &betas[i];
        let want = Divisor::difference(g1.graph.vertex_count(), g1.graph.head(xs[i]), c1);
        pic1.class(&step) != pic1.class(&want)
    });

    let mut lemma_l5 = None;
    if first_violation.is_none() {
        // G₁ part ∼ 2 Σ ∂(cx_i), which is not principal on a simple G₁
        if pic1.class(&g1_part_local) != pic1.class(&(2 * &sum_x)) {
            return Err(DecomposeError::WitnessFailed(
                "G1 part is not 2 Σ ∂(cx_i)".into(),
            ));
        }
        lemma_l5 = Some(lemma_l5_for(dec));
    }

    let sink_c_witness = match first_violation {
        Some(i) => {
            let w = DisagreementWitness {
                sink: c,
                chip: g1.vertex_map[g1.graph.head(xs[i]).0],
                tree: split.join_trees(&table[i], &t2),
                provenance: Provenance::PropBC,
            };
            if !verify_witness(g, &w)? {
                return Err(DecomposeError::WitnessFailed(
                    "sink-c witness does not verify".into(),
                ));
            }
            Some(w)
        }
        None => None,
    };
    let an_witness = DisagreementWitness {
        sink: an,
        chip: c,
        tree: t.clone(),
        provenance: Provenance::PropBAn,
    };
    let witness = if verify_witness(g, &an_witness)? {
        an_witness
    } else if let Some(w) = sink_c_witness.clone() {
        w
    } else {
        return Err(DecomposeError::WitnessFailed(
            "no violation in G1 and the a_n witness fails".into(),
        ));
    };
    if first_violation.is_none() && lemma_l5 != Some(true) {
        return Err(DecomposeError::WitnessFailed(
            "2 Σ ∂(cx_i) is principal on a simple G₁".into(),
        ));
    }
    Ok(PropBReport {
        witness,
        sink_c_witness,
        tree: t,
        routed: t_routed,
        table,
        first_violation,
        lemma_l5,
        difference,
        g1_part,
    })
}

/// Classifies `g` and returns the matching verified witness.
pub fn witness(g: &RibbonGraph) -> Result<(HDecomposition, DisagreementWitness)> {
    let dec = classify(g)?;
    let w = match dec.kind {
        Some(Kind::A) => witness_prop_a(g, &dec)?,
        Some(Kind::B) => witness_prop_b(g, &dec)?.witness,
        None => unreachable!("classification always assigns a kind"),
    };
    Ok((dec, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn v(g: &RibbonGraph, l: &str) -> Vertex {
        g.vertex_by_label(l).unwrap()
    }

    #[test]
    fn fig1_is_type_a_with_golden_witness() {
        let g = fixtures::g_fig1();
        let Certificate::TypeI(h) = find_type_i_or_ii(&g).unwrap() else {
            panic!("type I expected");
        };
        assert_eq!((h.c, h.b), (v(&g, "c"), v(&g, "b")));
        assert_eq!(g.head(h.a[0]), v(&g, "a"));
        assert_eq!(g.head(h.d[0]), v(&g, "d"));
        let dec = classify(&g).unwrap();
        assert_eq!(dec.kind, Some(Kind::A));
        assert_eq!(dec.n(), 0);
        let w = witness_prop_a(&g, &dec).unwrap();
        assert_eq!((w.sink, w.chip), (v(&g, "d"), v(&g, "c")));
        assert_eq!(w.tree.names(&g), vec!["ca", "cf", "ab", "bd"]);
    }

    #[test]
    fn ex2_is_type_b_case_one() {
        let g = fixtures::g_ex2();
        let Certificate::TypeII(h) = find_type_i_or_ii(&g).unwrap() else {
            panic!("type II expected");
        };
        assert_eq!(h.a_vertices(&g), vec![v(&g, "a1"), v(&g, "a2")]);
        assert_eq!(h.f_vertices(&g), vec![v(&g, "f1"), v(&g, "f2")]);
        let dec = classify(&g).unwrap();
        assert_eq!(dec.kind, Some(Kind::B));
        let g1: Vec<&str> = dec
            .split
            .g1
            .vertex_map
            .iter()
            .map(|&x| g.label(x))
            .collect();
        assert_eq!(g1, vec!["c", "f1", "f2"]);
        let rep = witness_prop_b(&g, &dec).unwrap();
        assert_eq!(rep.first_violation, None);
        assert_eq!(rep.lemma_l5, Some(true));
        assert_eq!(rep.witness.provenance, Provenance::PropBAn);
        assert_eq!(
            (rep.witness.sink, rep.witness.chip),
            (v(&g, "a2"), v(&g, "c"))
        );
        let mut names = rep.tree.names(&g);
        names.sort();
        assert_eq!(names, vec!["a1-a2", "c-a1", "c-f1", "c-f2"]);
    }

    #[test]
    fn case_two_fixture_has_sink_c_witness() {
        let g = fixtures::case2_type_b();
        let dec = classify(&g).unwrap();
        assert_eq!(dec.kind, Some(Kind::B));
        let rep = witness_prop_b(&g, &dec).unwrap();
        let i = rep.first_violation.expect("G1 breaks the criterion");
        let w = rep.sink_c_witness.expect("sink-c witness");
        assert_eq!(w.sink, v(&g, "c"));
        assert_eq!(w.provenance, Provenance::PropBC);
        assert_eq!(
            w.chip,
            dec.split.g1.vertex_map[dec
                .split
                .g1
                .graph
                .head(dec.split.g1.dart_to_sub(dec.x_darts[i]).unwrap())
                .0]
        );
        assert!(verify_witness(&g, &w).unwrap());
        assert_eq!(rep.lemma_l5, None);
    }

    #[test]
    fn multigraph_is_type_b_but_lemma_fails() {
        let g = fixtures::g_rem();
        let dec = classify(&g).unwrap();
        assert_eq!(dec.kind, Some(Kind::B));
        assert_eq!(dec.split.g1.graph.edge_count(), 2);
        assert!(!lemma_l5_for(&dec));
        assert_eq!(
            witness_prop_b(&g, &dec).unwrap_err(),
            DecomposeError::NotSimple
        );
    }

    #[test]
    fn planar_graphs_have_no_certificate() {
        assert_eq!(
            find_type_i_or_ii(&fixtures::triangle()),
            Err(DecomposeError::Planar)
        );
    }

    #[test]
    fn type_a_wedge_has_nontrivial_g1() {
        let g = fixtures::type_a_wedge();
        let p = classify_with_steps(&g).unwrap();
        assert!(p.steps.is_empty());
        let dec = p.decomposition;
        assert_eq!(dec.kind, Some(Kind::A));
        assert_eq!(dec.n(), 2);
        assert_eq!(dec.split.g1.graph.edge_count(), 3);
        let w = witness_prop_a(&g, &dec).unwrap();
        assert_eq!(g.label(w.sink), "d");
    }

    fn fig1_theta(g: &RibbonGraph) -> TypeISubgraph {
        let d = |u: &str, w: &str| g.dart_between(v(g, u), v(g, w)).unwrap();
        TypeISubgraph {
            c: v(g, "c"),
            b: v(g, "b"),
            a: vec![d("c", "a"), d("a", "b")],
            d: vec![d("c", "d"), d("d", "b")],
            f: vec![d("c", "f"), d("f", "b")],
        }
    }

    #[test]
    fn promotion_cases_for_type_i() {
        let cases = [
            ("d", "c", PromotionCase::EndsOnD),
            ("a", "c", PromotionCase::EndsOnA),
            ("b", "a", PromotionCase::EndsOnB),
            ("f", "b", PromotionCase::EndsOnFBeforePrev),
            ("f", "c", PromotionCase::EndsOnFBeforeNext),
        ];
        for (target, after, case) in cases {
            let g = fixtures::fig1_with_detour(target, after);
            let h = fig1_theta(&g);
            h.validate(&g).unwrap();
            let raw = h_decomposition(&g, &Certificate::TypeI(h.clone())).unwrap();
            assert_eq!(raw.kind, None, "{target}");
            let p = promote_type_i(&g, &h).unwrap();
            assert_eq!(p.steps.len(), 1, "{target}");
            assert_eq!(p.steps[0].case, case, "{target}");
            assert_eq!(p.decomposition.kind, Some(Kind::A));
        }
    }

    fn ex2_cycles(g: &RibbonGraph) -> TypeIISubgraph {
        let d = |u: &str, w: &str| g.dart_between(v(g, u), v(g, w)).unwrap();
        TypeIISubgraph {
            c: v(g, "c"),
            a: vec![d("c", "a1"), d("a1", "a2"), d("a2", "c")],
            f: vec![d("c", "f1"), d("f1", "f2"), d("f2", "c")],
        }
    }

    #[test]
    fn promotion_for_type_ii_substitutes_a_path() {
        let g = fixtures::ex2_with_detour();
        let h = ex2_cycles(&g);
        let p = promote_type_ii(&g, &h).unwrap();
        assert_eq!(p.steps.len(), 1);
        assert_eq!(p.steps[0].case, PromotionCase::ReplaceANSide);
        assert_eq!(p.decomposition.kind, Some(Kind::B));
    }

    #[test]
    fn promotion_for_type_ii_diverts_through_f() {
        let g = fixtures::ex2_through_f();
        let h = ex2_cycles(&g);
        let p = promote_type_ii(&g, &h).unwrap();
        assert_eq!(p.steps[0].case, PromotionCase::DivertToTypeI);
        assert_eq!(p.decomposition.kind, Some(Kind::A));
        assert!(matches!(p.decomposition.h, Certificate::TypeI(_)));
    }

    #[test]
    fn raw_candidate_has_no_kind() {
        let g = fixtures::fig1_with_detour("d", "c");
        let dec = h_decomposition(&g, &Certificate::TypeI(fig1_theta(&g))).unwrap();
        assert_eq!(dec.kind, None);
    }
}
