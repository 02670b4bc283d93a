//! Dart-based ribbon graphs (combinatorial maps).
//!
//! A ribbon graph on `2E` darts is given by two permutations: the edge
//! involution `alpha`, pairing the two darts of each edge, and the rotation
//! `sigma`, sending a dart to the next dart counterclockwise around its tail
//! vertex. Faces are the orbits of `phi = sigma ∘ alpha`.
//!
//! Edges are identified by the smaller of their two dart ids.

use std::collections::VecDeque;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::divisor::PicGroup;

/// A half-edge. Its tail is the vertex whose rotation contains it.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dart(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vertex(pub usize);

/// An undirected edge, named by the smaller id of its two darts.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl Dart {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl Vertex {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Dart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("alpha is not a fixed-point-free involution (violated at dart {0})")]
    NotInvolution(usize),
    #[error("rotation sends dart {dart} at vertex {from} to a dart at vertex {to}")]
    CrossVertexRotation { dart: usize, from: usize, to: usize },
    #[error("darts at vertex {0} do not form a single rotation cycle")]
    BrokenRotation(usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("dart {0} is out of range")]
    DartOutOfRange(usize),
    #[error("dart {0} is listed more than once")]
    DuplicateDart(usize),
    #[error("dart {0} is not assigned to any vertex")]
    UnassignedDart(usize),
    #[error("expected {expected} vertices, found {found}")]
    VertexCountMismatch { expected: usize, found: usize },
    #[error("a graph needs at least one vertex")]
    Empty,
    #[error("dart {0} is not at the cut vertex")]
    SeedNotAtCutVertex(usize),
    #[error("cut vertex is missing from one side or the merge order is inconsistent")]
    IncompatibleCutVertex,
    #[error("edge set is not a spanning tree: {0}")]
    NotASpanningTree(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("no edge between `{0}` and `{1}`")]
    UnknownEdge(String, String),
    #[error("edge between `{0}` and `{1}` is ambiguous (multi-edge)")]
    AmbiguousEdge(String, String),
}

/// An immutable, validated, connected ribbon graph.
#[derive(Clone)]
pub struct RibbonGraph {
    alpha: Vec<Dart>,
    sigma: Vec<Dart>,
    sigma_inv: Vec<Dart>,
    tail: Vec<Vertex>,
    /// Darts around each vertex in rotation order, starting at the smallest dart.
    rotations: Vec<Vec<Dart>>,
    labels: Vec<String>,
    pic: OnceLock<Arc<PicGroup>>,
}

impl fmt::Debug for RibbonGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RibbonGraph")
            .field("labels", &self.labels)
            .field("rotations", &self.rotations)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl PartialEq for RibbonGraph {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha
            && self.sigma == other.sigma
            && self.tail == other.tail
            && self.labels == other.labels
    }
}

impl Eq for RibbonGraph {}

impl RibbonGraph {
    /// Builds a graph from its two permutations. Vertices are the orbits of
    /// `sigma`, numbered by their smallest dart. A graph without darts is the
    /// single-vertex graph and requires `vertex_count == 1`.
    pub fn from_permutations(
        vertex_count: usize,
        alpha: Vec<usize>,
        sigma: Vec<usize>,
    ) -> Result<Self, GraphError> {
        let n = alpha.len();
        if sigma.len() != n {
            return Err(GraphError::DartOutOfRange(sigma.len().min(n)));
        }
        check_permutation(&sigma)?;
        let mut rotations = Vec::new();
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut d = start;
            while !seen[d] {
                seen[d] = true;
                orbit.push(d);
                d = sigma[d];
            }
            rotations.push(orbit);
        }
        let found = rotations.len().max(1);
        if found != vertex_count {
            return Err(GraphError::VertexCountMismatch {
                expected: vertex_count,
                found,
            });
        }
        if rotations.is_empty() {
            rotations.push(Vec::new());
        }
        let labels = (0..rotations.len()).map(|i| i.to_string()).collect();
        let pairs = alpha_pairs(&alpha)?;
        Self::from_rotations(labels, rotations, &pairs)
    }

    /// Builds a graph from per-vertex counterclockwise dart lists and the
    /// list of dart pairs forming edges. The first dart of each list is an
    /// arbitrary anchor; rotations are compared cyclically.
    pub fn from_rotations(
        labels: Vec<String>,
        rotations: Vec<Vec<usize>>,
        alpha_pairs: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        if rotations.is_empty() {
            return Err(GraphError::Empty);
        }
        if labels.len() != rotations.len() {
            return Err(GraphError::VertexCountMismatch {
                expected: labels.len(),
                found: rotations.len(),
            });
        }
        let n = 2 * alpha_pairs.len();
        let mut alpha = vec![usize::MAX; n];
        for &(p, q) in alpha_pairs {
            for d in [p, q] {
                if d >= n {
                    return Err(GraphError::DartOutOfRange(d));
                }
            }
            if p == q {
                return Err(GraphError::NotInvolution(p));
            }
            if alpha[p] != usize::MAX {
                return Err(GraphError::NotInvolution(p));
            }
            if alpha[q] != usize::MAX {
                return Err(GraphError::NotInvolution(q));
            }
            alpha[p] = q;
            alpha[q] = p;
        }

        let mut tail = vec![usize::MAX; n];
        let mut sigma = vec![usize::MAX; n];
        for (v, rot) in rotations.iter().enumerate() {
            for (i, &d) in rot.iter().enumerate() {
                if d >= n {
                    return Err(GraphError::DartOutOfRange(d));
                }
                if tail[d] != usize::MAX {
                    if tail[d] != v {
                        return Err(GraphError::CrossVertexRotation {
                            dart: d,
                            from: v,
                            to: tail[d],
                        });
                    }
                    return Err(GraphError::DuplicateDart(d));
                }
                tail[d] = v;
                sigma[d] = rot[(i + 1) % rot.len()];
            }
        }
        if let Some(d) = tail.iter().position(|&t| t == usize::MAX) {
            return Err(GraphError::UnassignedDart(d));
        }

        let graph = Self::assemble(labels, alpha, sigma, tail);
        graph.check_connected()?;
        Ok(graph)
    }

    /// Builds a graph from arrays already known to be consistent.
    fn assemble(
        labels: Vec<String>,
        alpha: Vec<usize>,
        sigma: Vec<usize>,
        tail: Vec<usize>,
    ) -> Self {
        let n = alpha.len();
        let vcount = labels.len();
        let mut sigma_inv = vec![Dart(0); n];
        for (d, &s) in sigma.iter().enumerate() {
            sigma_inv[s] = Dart(d);
        }
        let mut rotations = vec![Vec::new(); vcount];
        let mut first = vec![usize::MAX; vcount];
        for (d, &t) in tail.iter().enumerate() {
            if first[t] == usize::MAX {
                first[t] = d;
            }
        }
        for v in 0..vcount {
            if first[v] == usize::MAX {
                continue;
            }
            let mut d = first[v];
            loop {
                rotations[v].push(Dart(d));
                d = sigma[d];
                if d == first[v] {
                    break;
                }
            }
        }
        RibbonGraph {
            alpha: alpha.into_iter().map(Dart).collect(),
            sigma: sigma.into_iter().map(Dart).collect(),
            sigma_inv,
            tail: tail.into_iter().map(Vertex).collect(),
            rotations,
            labels,
            pic: OnceLock::new(),
        }
    }

    fn check_connected(&self) -> Result<(), GraphError> {
        for (v, rot) in self.rotations.iter().enumerate() {
            let expected = self.tail.iter().filter(|t| t.0 == v).count();
            if rot.len() != expected {
                return Err(GraphError::BrokenRotation(v));
            }
        }
        let mut seen = vec![false; self.vertex_count()];
        let mut queue = VecDeque::from([Vertex(0)]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &d in &self.rotations[v.0] {
                let w = self.head(d);
                if !seen[w.0] {
                    seen[w.0] = true;
                    queue.push_back(w);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(GraphError::Disconnected)
        }
    }

    /// The graph with one vertex and no edges.
    pub fn single_vertex(label: impl Into<String>) -> Self {
        Self::assemble(vec![label.into()], Vec::new(), Vec::new(), Vec::new())
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn dart_count(&self) -> usize {
        self.alpha.len()
    }

    pub fn edge_count(&self) -> usize {
        self.alpha.len() / 2
    }

    /// Nullity `E - V + 1`, the degree of Bernardi divisors.
    pub fn cycle_rank(&self) -> usize {
        self.edge_count() + 1 - self.vertex_count()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.vertex_count()).map(Vertex)
    }

    pub fn darts(&self) -> impl Iterator<Item = Dart> + '_ {
        (0..self.dart_count()).map(Dart)
    }

    /// Edge ids in increasing order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.darts()
            .filter(|&d| d < self.alpha(d))
            .map(|d| EdgeId(d.0))
    }

    #[inline]
    pub fn alpha(&self, d: Dart) -> Dart {
        self.alpha[d.0]
    }

    #[inline]
    pub fn sigma(&self, d: Dart) -> Dart {
        self.sigma[d.0]
    }

    #[inline]
    pub fn sigma_inv(&self, d: Dart) -> Dart {
        self.sigma_inv[d.0]
    }

    /// Face permutation `sigma ∘ alpha`.
    #[inline]
    pub fn phi(&self, d: Dart) -> Dart {
        self.sigma(self.alpha(d))
    }

    #[inline]
    pub fn tail(&self, d: Dart) -> Vertex {
        self.tail[d.0]
    }

    #[inline]
    pub fn head(&self, d: Dart) -> Vertex {
        self.tail[self.alpha[d.0].0]
    }

    #[inline]
    pub fn edge_of(&self, d: Dart) -> EdgeId {
        EdgeId(d.0.min(self.alpha[d.0].0))
    }

    /// The two darts of an edge, smaller id first.
    pub fn edge_darts(&self, e: EdgeId) -> (Dart, Dart) {
        (Dart(e.0), self.alpha(Dart(e.0)))
    }

    pub fn endpoints(&self, e: EdgeId) -> (Vertex, Vertex) {
        let (d, r) = self.edge_darts(e);
        (self.tail(d), self.tail(r))
    }

    pub fn is_edge(&self, e: EdgeId) -> bool {
        e.0 < self.dart_count() && self.alpha[e.0].0 > e.0
    }

    pub fn is_loop(&self, e: EdgeId) -> bool {
        let (u, v) = self.endpoints(e);
        u == v
    }

    /// Counterclockwise darts at `v`, starting from the smallest dart id.
    pub fn rotation(&self, v: Vertex) -> &[Dart] {
        &self.rotations[v.0]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.rotations[v.0].len()
    }

    pub fn label(&self, v: Vertex) -> &str {
        &self.labels[v.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<Vertex> {
        self.labels.iter().position(|l| l == label).map(Vertex)
    }

    /// Position of `d` in the rotation of its tail vertex.
    pub fn rotation_index(&self, d: Dart) -> usize {
        self.rotations[self.tail(d).0]
            .iter()
            .position(|&x| x == d)
            .expect("dart belongs to its tail rotation")
    }

    /// Whether `darts` (all at `v`, pairwise distinct) appear in this cyclic
    /// order around `v`.
    pub fn in_cyclic_order(&self, v: Vertex, darts: &[Dart]) -> bool {
        let deg = self.degree(v);
        if darts.iter().any(|&d| self.tail(d) != v) {
            return false;
        }
        let Some(&first) = darts.first() else {
            return true;
        };
        let p0 = self.rotation_index(first);
        let mut last = 0;
        for &d in &darts[1..] {
            let rel = (self.rotation_index(d) + deg - p0) % deg;
            if rel <= last {
                return false;
            }
            last = rel;
        }
        true
    }

    /// Darts strictly after `from` and strictly before `to` when walking the
    /// rotation at their common vertex.
    pub fn rotation_arc(&self, from: Dart, to: Dart) -> Vec<Dart> {
        let mut arc = Vec::new();
        let mut d = self.sigma(from);
        while d != to && d != from {
            arc.push(d);
            d = self.sigma(d);
        }
        arc
    }

    /// No loops and no parallel edges.
    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        for e in self.edges() {
            let (u, v) = self.endpoints(e);
            if u == v || !seen.insert((u.min(v), u.max(v))) {
                return false;
            }
        }
        true
    }

    /// Orbits of the face permutation `phi = sigma ∘ alpha`, each listed from
    /// its smallest dart.
    pub fn faces(&self) -> Vec<Vec<Dart>> {
        let mut seen = vec![false; self.dart_count()];
        let mut faces = Vec::new();
        for start in self.darts() {
            if seen[start.0] {
                continue;
            }
            let mut face = Vec::new();
            let mut d = start;
            while !seen[d.0] {
                seen[d.0] = true;
                face.push(d);
                d = self.phi(d);
            }
            faces.push(face);
        }
        faces
    }

    pub fn face_count(&self) -> usize {
        // the single-vertex graph is a sphere with one face
        self.faces().len().max(1)
    }

    /// Genus of the oriented surface the ribbon graph is cellularly embedded in.
    pub fn surface_genus(&self) -> usize {
        let chi = self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64;
        let twice = 2 - chi;
        debug_assert!(twice >= 0 && twice % 2 == 0, "Euler characteristic parity");
        (twice / 2) as usize
    }

    pub fn is_planar_ribbon(&self) -> bool {
        self.surface_genus() == 0
    }

    /// Finds the unique edge between two labelled vertices.
    pub fn find_edge(&self, u: &str, v: &str) -> Result<EdgeId, GraphError> {
        let uu = self
            .vertex_by_label(u)
            .ok_or_else(|| GraphError::UnknownVertex(u.to_string()))?;
        let vv = self
            .vertex_by_label(v)
            .ok_or_else(|| GraphError::UnknownVertex(v.to_string()))?;
        let mut found = self.rotation(uu).iter().filter(|&&d| self.head(d) == vv);
        let first = found
            .next()
            .ok_or_else(|| GraphError::UnknownEdge(u.to_string(), v.to_string()))?;
        let extra = found
            .filter(|&&d| self.edge_of(d) != self.edge_of(*first))
            .count();
        if extra > 0 {
            return Err(GraphError::AmbiguousEdge(u.to_string(), v.to_string()));
        }
        Ok(self.edge_of(*first))
    }

    /// Dart from `u` to `v` (unique in a simple graph).
    pub fn dart_between(&self, u: Vertex, v: Vertex) -> Option<Dart> {
        self.rotation(u)
            .iter()
            .copied()
            .find(|&d| self.head(d) == v)
    }

    /// Human-readable edge name, e.g. `ca` or `c-a1`.
    pub fn edge_name(&self, e: EdgeId) -> String {
        let (u, v) = self.endpoints(e);
        let (lu, lv) = (self.label(u), self.label(v));
        if lu.chars().count() == 1 && lv.chars().count() == 1 {
            format!("{lu}{lv}")
        } else {
            format!("{lu}-{lv}")
        }
    }

    pub(crate) fn pic_cache(&self) -> &OnceLock<Arc<PicGroup>> {
        &self.pic
    }

    /// Subgraph induced by an edge set, with `keep` always present. Vertices
    /// and darts keep their relative order; rotations are the inherited cyclic
    /// suborders. Returns the graph together with its vertex and dart maps
    /// into `self`.
    pub fn edge_subgraph(&self, edges: &[EdgeId], keep: Vertex) -> Subgraph {
        let mut in_sub = vec![false; self.dart_count()];
        for &e in edges {
            let (d, r) = self.edge_darts(e);
            in_sub[d.0] = true;
            in_sub[r.0] = true;
        }
        let mut vmask = vec![false; self.vertex_count()];
        vmask[keep.0] = true;
        for d in self.darts().filter(|d| in_sub[d.0]) {
            vmask[self.tail(d).0] = true;
        }
        let vertices: Vec<Vertex> = self.vertices().filter(|v| vmask[v.0]).collect();
        let darts: Vec<Dart> = self.darts().filter(|d| in_sub[d.0]).collect();
        let mut vnew = vec![usize::MAX; self.vertex_count()];
        for (i, v) in vertices.iter().enumerate() {
            vnew[v.0] = i;
        }
        let mut dnew = vec![usize::MAX; self.dart_count()];
        for (i, d) in darts.iter().enumerate() {
            dnew[d.0] = i;
        }
        let alpha = darts.iter().map(|&d| dnew[self.alpha(d).0]).collect();
        let tail = darts.iter().map(|&d| vnew[self.tail(d).0]).collect();
        let sigma = darts
            .iter()
            .map(|&d| {
                let mut s = self.sigma(d);
                while !in_sub[s.0] {
                    s = self.sigma(s);
                }
                dnew[s.0]
            })
            .collect();
        let labels = vertices
            .iter()
            .map(|&v| self.label(v).to_string())
            .collect();
        let graph = Self::assemble(labels, alpha, sigma, tail);
        Subgraph {
            graph,
            vertex_map: vertices,
            dart_map: darts,
        }
    }
}

/// A subgraph together with its embedding maps into the parent graph.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub graph: RibbonGraph,
    /// Sub-vertex id → parent vertex.
    pub vertex_map: Vec<Vertex>,
    /// Sub-dart id → parent dart.
    pub dart_map: Vec<Dart>,
}

impl Subgraph {
    pub fn vertex_to_sub(&self, v: Vertex) -> Option<Vertex> {
        self.vertex_map.iter().position(|&w| w == v).map(Vertex)
    }

    pub fn dart_to_sub(&self, d: Dart) -> Option<Dart> {
        self.dart_map.binary_search(&d).ok().map(Dart)
    }

    pub fn edge_to_parent(&self, e: EdgeId) -> EdgeId {
        let d = self.dart_map[e.0];
        let r = self.dart_map[self.graph.alpha(Dart(e.0)).0];
        EdgeId(d.0.min(r.0))
    }

    pub fn edge_to_sub(&self, e: EdgeId, parent: &RibbonGraph) -> Option<EdgeId> {
        self.dart_to_sub(Dart(e.0))
            .map(|d| self.graph.edge_of(d))
            .filter(|_| self.dart_to_sub(parent.alpha(Dart(e.0))).is_some())
    }
}

fn check_permutation(p: &[usize]) -> Result<(), GraphError> {
    let mut hit = vec![false; p.len()];
    for &x in p {
        if x >= p.len() {
            return Err(GraphError::DartOutOfRange(x));
        }
        if hit[x] {
            return Err(GraphError::DuplicateDart(x));
        }
        hit[x] = true;
    }
    Ok(())
}

fn alpha_pairs(alpha: &[usize]) -> Result<Vec<(usize, usize)>, GraphError> {
    let mut pairs = Vec::new();
    for (d, &a) in alpha.iter().enumerate() {
        if a >= alpha.len() {
            return Err(GraphError::DartOutOfRange(a));
        }
        if a == d || alpha[a] != d {
            return Err(GraphError::NotInvolution(d));
        }
        if d < a {
            pairs.push((d, a));
        }
    }
    Ok(pairs)
}

/// A spanning tree, stored as its sorted edge ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpanningTree {
    edges: Vec<EdgeId>,
}

impl SpanningTree {
    /// Validates that `edges` is a spanning tree of `g`.
    pub fn new(
        g: &RibbonGraph,
        edges: impl IntoIterator<Item = EdgeId>,
    ) -> Result<Self, GraphError> {
        let mut edges: Vec<EdgeId> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        if let Some(e) = edges.iter().find(|&&e| !g.is_edge(e)) {
            return Err(GraphError::NotASpanningTree(format!("{e} is not an edge")));
        }
        if edges.len() + 1 != g.vertex_count() {
            return Err(GraphError::NotASpanningTree(format!(
                "{} edges for {} vertices",
                edges.len(),
                g.vertex_count()
            )));
        }
        let mut uf = UnionFind::new(g.vertex_count());
        for &e in &edges {
            let (u, v) = g.endpoints(e);
            if !uf.union(u.0, v.0) {
                return Err(GraphError::NotASpanningTree(format!(
                    "{} closes a cycle",
                    g.edge_name(e)
                )));
            }
        }
        Ok(SpanningTree { edges })
    }

    /// Caller guarantees the tree property.
    pub(crate) fn from_sorted_unchecked(edges: Vec<EdgeId>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        SpanningTree { edges }
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    /// Membership mask indexed by dart id (both darts of a tree edge are set).
    pub fn dart_mask(&self, g: &RibbonGraph) -> Vec<bool> {
        let mut mask = vec![false; g.dart_count()];
        for &e in &self.edges {
            let (d, r) = g.edge_darts(e);
            mask[d.0] = true;
            mask[r.0] = true;
        }
        mask
    }

    pub fn names(&self, g: &RibbonGraph) -> Vec<String> {
        self.edges.iter().map(|&e| g.edge_name(e)).collect()
    }
}

/// Union-find over `0..n` with path halving.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// All spanning trees in lexicographic order of their sorted edge ids.
///
/// Backtracking over edges in id order: the include branch is explored before
/// the exclude branch, which yields lexicographic order directly. An edge may
/// be excluded only if the remaining edges can still connect the graph.
pub fn spanning_trees(g: &RibbonGraph) -> Vec<SpanningTree> {
    let edges: Vec<EdgeId> = g.edges().filter(|&e| !g.is_loop(e)).collect();
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(g.vertex_count());
    let uf = UnionFind::new(g.vertex_count());
    extend_trees(g, &edges, 0, &mut chosen, uf, &mut out);
    out
}

fn extend_trees(
    g: &RibbonGraph,
    edges: &[EdgeId],
    i: usize,
    chosen: &mut Vec<EdgeId>,
    uf: UnionFind,
    out: &mut Vec<SpanningTree>,
) {
    if chosen.len() + 1 == g.vertex_count() {
        out.push(SpanningTree::from_sorted_unchecked(chosen.clone()));
        return;
    }
    if i == edges.len() {
        return;
    }
    let e = edges[i];
    let (u, v) = g.endpoints(e);
    let mut with = uf.clone();
    if with.union(u.0, v.0) {
        chosen.push(e);
        extend_trees(g, edges, i + 1, chosen, with, out);
        chosen.pop();
    }
    // excluding e: the components of `chosen` must still be joinable by later edges
    let mut reach = uf.clone();
    for &f in &edges[i + 1..] {
        let (a, b) = g.endpoints(f);
        reach.union(a.0, b.0);
    }
    let root = reach.find(0);
    if (1..g.vertex_count()).all(|w| reach.find(w) == root) {
        extend_trees(g, edges, i + 1, chosen, uf, out);
    }
}

/// Which side of a wedge sum a dart at the cut vertex comes from.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    First,
    Second,
}

/// A decomposition `G = G1 ∨_c G2`.
#[derive(Clone, Debug)]
pub struct WedgeSplit {
    pub cut_vertex: Vertex,
    pub g1: Subgraph,
    pub g2: Subgraph,
}

impl WedgeSplit {
    /// Cut vertex as a vertex of `G1`.
    pub fn c1(&self) -> Vertex {
        self.g1
            .vertex_to_sub(self.cut_vertex)
            .expect("cut vertex in G1")
    }

    pub fn c2(&self) -> Vertex {
        self.g2
            .vertex_to_sub(self.cut_vertex)
            .expect("cut vertex in G2")
    }

    /// Restricts a spanning tree of `G` to the two sides.
    pub fn restrict_tree(&self, g: &RibbonGraph, t: &SpanningTree) -> (SpanningTree, SpanningTree) {
        let side = |sub: &Subgraph| {
            let mut edges: Vec<EdgeId> = t
                .edges()
                .iter()
                .filter_map(|&e| sub.edge_to_sub(e, g))
                .collect();
            edges.sort_unstable();
            SpanningTree::from_sorted_unchecked(edges)
        };
        (side(&self.g1), side(&self.g2))
    }

    /// `T1 ∨_c T2` as a spanning tree of `G`.
    pub fn join_trees(&self, t1: &SpanningTree, t2: &SpanningTree) -> SpanningTree {
        let mut edges: Vec<EdgeId> = t1
            .edges()
            .iter()
            .map(|&e| self.g1.edge_to_parent(e))
            .chain(t2.edges().iter().map(|&e| self.g2.edge_to_parent(e)))
            .collect();
        edges.sort_unstable();
        SpanningTree::from_sorted_unchecked(edges)
    }

    /// The interleaving of the two sides' darts around the cut vertex, read
    /// from `G`'s rotation starting at its smallest dart.
    pub fn merge_order(&self, g: &RibbonGraph) -> Vec<Side> {
        g.rotation(self.cut_vertex)
            .iter()
            .map(|&d| {
                if self.g1.dart_to_sub(d).is_some() {
                    Side::First
                } else {
                    Side::Second
                }
            })
            .collect()
    }

    /// Reassembles `G` with its original dart and vertex numbering.
    pub fn rejoin(&self, g: &RibbonGraph) -> Result<RibbonGraph, GraphError> {
        let mut labels = vec![String::new(); g.vertex_count()];
        let mut rotations = vec![Vec::new(); g.vertex_count()];
        let mut pairs = Vec::new();
        for sub in [&self.g1, &self.g2] {
            for v in sub.graph.vertices() {
                let pv = sub.vertex_map[v.0];
                labels[pv.0] = sub.graph.label(v).to_string();
            }
            for e in sub.graph.edges() {
                let (d, r) = sub.graph.edge_darts(e);
                pairs.push((sub.dart_map[d.0].0, sub.dart_map[r.0].0));
            }
        }
        let order = self.merge_order(g);
        for v in g.vertices() {
            if v == self.cut_vertex {
                // each side's darts appear in G's rotation in their own cyclic order;
                // start each side at the dart that comes first in G's listing
                let start1 = g.rotation(v).iter().find_map(|&d| self.g1.dart_to_sub(d));
                let start2 = g.rotation(v).iter().find_map(|&d| self.g2.dart_to_sub(d));
                let r1 = rotate_to(self.g1.graph.rotation(self.c1()), start1);
                let r2 = rotate_to(self.g2.graph.rotation(self.c2()), start2);
                let (mut i1, mut i2) = (r1.into_iter(), r2.into_iter());
                for side in &order {
                    let d = match side {
                        Side::First => {
                            self.g1.dart_map[i1.next().ok_or(GraphError::IncompatibleCutVertex)?.0]
                        }
                        Side::Second => {
                            self.g2.dart_map[i2.next().ok_or(GraphError::IncompatibleCutVertex)?.0]
                        }
                    };
                    rotations[v.0].push(d.0);
                }
            } else {
                let (sub, w) = match self.g1.vertex_to_sub(v) {
                    Some(w) => (&self.g1, w),
                    None => (
                        &self.g2,
                        self.g2
                            .vertex_to_sub(v)
                            .ok_or(GraphError::IncompatibleCutVertex)?,
                    ),
                };
                rotations[v.0] = sub
                    .graph
                    .rotation(w)
                    .iter()
                    .map(|&d| sub.dart_map[d.0].0)
                    .collect();
            }
        }
        RibbonGraph::from_rotations(labels, rotations, &pairs)
    }
}

fn rotate_to(rot: &[Dart], start: Option<Dart>) -> Vec<Dart> {
    match start.and_then(|s| rot.iter().position(|&d| d == s)) {
        Some(p) => rot[p..].iter().chain(&rot[..p]).copied().collect(),
        None => rot.to_vec(),
    }
}

/// Splits `g` at `c`: `G1` is induced by the edges reachable from the seed
/// darts along paths that touch `c` only at their ends; `G2` gets the rest.
/// An empty side is the single-vertex graph `c`.
pub fn wedge_split(g: &RibbonGraph, c: Vertex, seeds: &[Dart]) -> Result<WedgeSplit, GraphError> {
    if let Some(&d) = seeds.iter().find(|&&d| g.tail(d) != c) {
        return Err(GraphError::SeedNotAtCutVertex(d.0));
    }
    let mut in_g1 = vec![false; g.dart_count()];
    let mut visited = vec![false; g.vertex_count()];
    let mut queue = VecDeque::new();
    for &d in seeds {
        mark_edge(g, d, &mut in_g1);
        let w = g.head(d);
        if w != c && !visited[w.0] {
            visited[w.0] = true;
            queue.push_back(w);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &d in g.rotation(v) {
            mark_edge(g, d, &mut in_g1);
            let w = g.head(d);
            if w != c && !visited[w.0] {
                visited[w.0] = true;
                queue.push_back(w);
            }
        }
    }
    let (e1, e2): (Vec<EdgeId>, Vec<EdgeId>) = g.edges().partition(|e| in_g1[e.0]);
    Ok(WedgeSplit {
        cut_vertex: c,
        g1: g.edge_subgraph(&e1, c),
        g2: g.edge_subgraph(&e2, c),
    })
}

fn mark_edge(g: &RibbonGraph, d: Dart, mask: &mut [bool]) {
    mask[d.0] = true;
    mask[g.alpha(d).0] = true;
}

/// Glues `g1` and `g2` at `c1 ∈ g1`, `c2 ∈ g2`. Darts of `g1` keep their ids,
/// darts of `g2` are shifted past them; vertices of `g2` other than `c2`
/// follow those of `g1`. `merge` lists, around the glued vertex, which side
/// each successive dart comes from; each side contributes its darts in its
/// own rotation order starting from its smallest dart.
pub fn wedge_sum(
    g1: &RibbonGraph,
    c1: Vertex,
    g2: &RibbonGraph,
    c2: Vertex,
    merge: &[Side],
) -> Result<RibbonGraph, GraphError> {
    if c1.0 >= g1.vertex_count() || c2.0 >= g2.vertex_count() {
        return Err(GraphError::IncompatibleCutVertex);
    }
    let firsts = merge.iter().filter(|&&s| s == Side::First).count();
    if firsts != g1.degree(c1) || merge.len() - firsts != g2.degree(c2) {
        return Err(GraphError::IncompatibleCutVertex);
    }
    let off = g1.dart_count();
    let mut labels: Vec<String> = g1.labels().to_vec();
    let mut vmap2 = vec![c1.0; g2.vertex_count()];
    for v in g2.vertices().filter(|&v| v != c2) {
        vmap2[v.0] = labels.len();
        labels.push(g2.label(v).to_string());
    }
    let mut rotations: Vec<Vec<usize>> = g1
        .vertices()
        .map(|v| g1.rotation(v).iter().map(|d| d.0).collect())
        .collect();
    rotations.resize(labels.len(), Vec::new());
    for v in g2.vertices().filter(|&v| v != c2) {
        rotations[vmap2[v.0]] = g2.rotation(v).iter().map(|d| d.0 + off).collect();
    }
    let mut i1 = g1.rotation(c1).iter();
    let mut i2 = g2.rotation(c2).iter();
    rotations[c1.0] = merge
        .iter()
        .map(|s| match s {
            Side::First => i1.next().expect("counted").0,
            Side::Second => i2.next().expect("counted").0 + off,
        })
        .collect();
    let pairs: Vec<(usize, usize)> = g1
        .edges()
        .map(|e| {
            let (d, r) = g1.edge_darts(e);
            (d.0, r.0)
        })
        .chain(g2.edges().map(|e| {
            let (d, r) = g2.edge_darts(e);
            (d.0 + off, r.0 + off)
        }))
        .collect();
    RibbonGraph::from_rotations(labels, rotations, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_edge() -> RibbonGraph {
        RibbonGraph::from_permutations(2, vec![1, 0], vec![0, 1]).unwrap()
    }

    fn triangle() -> RibbonGraph {
        // edges 01, 12, 20 with darts (0,1), (2,3), (4,5)
        RibbonGraph::from_rotations(
            vec!["x".into(), "y".into(), "z".into()],
            vec![vec![0, 5], vec![1, 2], vec![3, 4]],
            &[(0, 1), (2, 3), (4, 5)],
        )
        .unwrap()
    }

    #[test]
    fn single_edge_is_valid() {
        let g = single_edge();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.faces().len(), 1);
        assert_eq!(g.faces()[0].len(), 2);
        assert_eq!(g.surface_genus(), 0);
        assert!(g.is_planar_ribbon());
        assert_eq!(spanning_trees(&g).len(), 1);
    }

    #[test]
    fn alpha_with_fixed_point_is_rejected() {
        let err = RibbonGraph::from_permutations(2, vec![0, 1], vec![0, 1]).unwrap_err();
        assert_eq!(err, GraphError::NotInvolution(0));
    }

    #[test]
    fn disconnected_is_rejected() {
        let err = RibbonGraph::from_rotations(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![vec![0], vec![1], vec![2], vec![3]],
            &[(0, 1), (2, 3)],
        )
        .unwrap_err();
        assert_eq!(err, GraphError::Disconnected);
    }

    #[test]
    fn dart_at_two_vertices_is_rejected() {
        let err = RibbonGraph::from_rotations(
            vec!["a".into(), "b".into()],
            vec![vec![0, 1], vec![1]],
            &[(0, 1)],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::CrossVertexRotation { .. }));
    }

    #[test]
    fn triangle_faces_and_trees() {
        let g = triangle();
        assert_eq!(g.faces().len(), 2);
        assert_eq!(g.surface_genus(), 0);
        let trees = spanning_trees(&g);
        assert_eq!(trees.len(), 3);
        assert!(trees.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cyclic_order_queries() {
        let g = RibbonGraph::from_rotations(
            vec!["c".into(), "a".into(), "b".into(), "d".into()],
            vec![vec![0, 2, 4], vec![1], vec![3], vec![5]],
            &[(0, 1), (2, 3), (4, 5)],
        )
        .unwrap();
        let c = Vertex(0);
        assert!(g.in_cyclic_order(c, &[Dart(0), Dart(2), Dart(4)]));
        assert!(g.in_cyclic_order(c, &[Dart(2), Dart(4), Dart(0)]));
        assert!(!g.in_cyclic_order(c, &[Dart(0), Dart(4), Dart(2)]));
        assert_eq!(g.rotation_arc(Dart(0), Dart(4)), vec![Dart(2)]);
        assert_eq!(g.rotation_arc(Dart(4), Dart(2)), vec![Dart(0)]);
        assert!(g.rotation_arc(Dart(0), Dart(2)).is_empty());
    }

    #[test]
    fn rotation_input_order_is_cyclic() {
        let a = RibbonGraph::from_rotations(
            vec!["c".into(), "a".into(), "b".into(), "d".into()],
            vec![vec![0, 2, 4], vec![1], vec![3], vec![5]],
            &[(0, 1), (2, 3), (4, 5)],
        )
        .unwrap();
        let b = RibbonGraph::from_rotations(
            vec!["c".into(), "a".into(), "b".into(), "d".into()],
            vec![vec![4, 0, 2], vec![1], vec![3], vec![5]],
            &[(0, 1), (2, 3), (4, 5)],
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_with_all_seeds_keeps_everything_in_g1() {
        let g = triangle();
        let c = Vertex(0);
        let seeds: Vec<Dart> = g.rotation(c).to_vec();
        let split = wedge_split(&g, c, &seeds).unwrap();
        assert_eq!(split.g1.graph.edge_count(), 3);
        assert_eq!(split.g2.graph.edge_count(), 0);
        assert_eq!(split.g2.graph.vertex_count(), 1);
        assert_eq!(split.rejoin(&g).unwrap(), g);
    }

    #[test]
    fn seed_off_cut_vertex_is_rejected() {
        let g = triangle();
        let err = wedge_split(&g, Vertex(0), &[Dart(1)]).unwrap_err();
        assert_eq!(err, GraphError::SeedNotAtCutVertex(1));
    }

    #[test]
    fn wedge_with_single_vertex_is_identity() {
        let g = triangle();
        let point = RibbonGraph::single_vertex("p");
        let merged = wedge_sum(
            &g,
            Vertex(1),
            &point,
            Vertex(0),
            &[Side::First, Side::First],
        )
        .unwrap();
        assert_eq!(merged, g);
    }

    #[test]
    fn spanning_tree_validation() {
        let g = triangle();
        assert!(SpanningTree::new(&g, [EdgeId(0), EdgeId(2)]).is_ok());
        assert!(SpanningTree::new(&g, [EdgeId(0)]).is_err());
        assert!(SpanningTree::new(&g, [EdgeId(0), EdgeId(2), EdgeId(4)]).is_err());
        assert!(SpanningTree::new(&g, [EdgeId(1), EdgeId(2)]).is_err());
    }
}
