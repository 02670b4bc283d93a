//! Exhaustive verification over small graphs and all their rotation systems.
//!
//! Graphs are labeled (no isomorphism reduction) and streamed in a fixed
//! order: vertex count, then edge multiset in counting order over the vertex
//! pairs. Rotation systems fix the smallest dart at each vertex and permute
//! the rest, so a graph has `Π_v (deg v − 1)!` of them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bernardi::{self, shift_divisor};
use crate::decompose::{self, Kind};
use crate::divisor::{
    directed_cut_decomposition, firing, pic_split, sum_boundaries, CutDecomposition, Divisor,
    PartialOrientation, PicGroup,
};
use crate::ribbon::{spanning_trees, RibbonGraph, Vertex, WedgeSplit};
use crate::torsor::{ActionTables, Provenance};

#[derive(Debug, Error)]
pub enum EnumerateError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint was written for a different specification")]
    SpecMismatch,
    #[error("bad thread count {0:?} in TORSOR_LAB_THREADS")]
    Threads(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationSpec {
    pub max_vertices: usize,
    pub max_edges: usize,
    pub simple_only: bool,
    /// Graphs with more rotation systems than this are skipped.
    pub rotation_cap: u64,
}

impl Default for EnumerationSpec {
    fn default() -> Self {
        EnumerationSpec {
            max_vertices: 5,
            max_edges: 8,
            simple_only: true,
            rotation_cap: u64::MAX,
        }
    }
}

/// A labeled graph on `0..n` with edges in pair order. Without `simple_only`
/// a pair may carry up to two parallel edges; loops are never generated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl AbstractGraph {
    fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn rotation_count(&self) -> u64 {
        self.degrees()
            .iter()
            .map(|&d| (1..d.max(1) as u64).product::<u64>())
            .try_fold(1u64, |acc, f| acc.checked_mul(f))
            .unwrap_or(u64::MAX)
    }

    pub fn is_simple(&self) -> bool {
        self.edges.windows(2).all(|w| w[0] != w[1])
    }

    /// The `index`-th anchored rotation system, in mixed-radix order with the
    /// last vertex varying fastest.
    pub fn rotation_system(&self, mut index: u64) -> RibbonGraph {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for (k, &(u, v)) in self.edges.iter().enumerate() {
            incident[u].push(2 * k);
            incident[v].push(2 * k + 1);
        }
        let mut rotations = vec![Vec::new(); self.n];
        for v in (0..self.n).rev() {
            let darts = &incident[v];
            if darts.is_empty() {
                continue;
            }
            let rest = darts.len() - 1;
            let radix: u64 = (1..=rest as u64).product();
            let mut rest_darts = nth_permutation(&darts[1..], index % radix);
            index /= radix;
            let mut rot = vec![darts[0]];
            rot.append(&mut rest_darts);
            rotations[v] = rot;
        }
        debug_assert_eq!(index, 0, "rotation index out of range");
        let labels = (0..self.n).map(|v| v.to_string()).collect();
        let pairs: Vec<(usize, usize)> =
            (0..self.edges.len()).map(|k| (2 * k, 2 * k + 1)).collect();
        if self.edges.is_empty() {
            return RibbonGraph::single_vertex("0");
        }
        RibbonGraph::from_rotations(labels, rotations, &pairs)
            .expect("enumerated rotation system is valid")
    }
}

fn nth_permutation(items: &[usize], mut k: u64) -> Vec<usize> {
    let mut pool = items.to_vec();
    let mut out = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let f: u64 = (1..pool.len() as u64).product();
        let i = (k / f) as usize;
        k %= f;
        out.push(pool.remove(i));
    }
    out
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut uf = crate::ribbon::UnionFind::new(n);
    let mut parts = n;
    for &(u, v) in edges {
        if uf.union(u, v) {
            parts -= 1;
        }
    }
    parts == 1
}

/// All connected graphs within the bounds, in canonical order.
pub fn abstract_graphs(spec: &EnumerationSpec) -> Vec<AbstractGraph> {
    let mut out = Vec::new();
    let radix: usize = if spec.simple_only { 2 } else { 3 };
    for n in 1..=spec.max_vertices {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        let total = (radix as u64).pow(pairs.len() as u32);
        for code in 0..total {
            let mut edges = Vec::new();
            let mut c = code;
            for &p in &pairs {
                for _ in 0..c % radix as u64 {
                    edges.push(p);
                }
                c /= radix as u64;
            }
            if edges.len() > spec.max_edges || edges.len() + 1 < n || !connected(n, &edges) {
                continue;
            }
            out.push(AbstractGraph { n, edges });
        }
    }
    out
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Planar ⇒ agreement; simple non-planar ⇒ verified witness.
    Theorem,
    MatrixTree,
    PrincipalActsTrivially,
    BernardiBijective,
    BasepointShift,
    CutDecomposition,
    LemmaL5,
    BasepointIndependence,
}

/// Locates a rotation system inside an enumeration.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphRef {
    pub graph: usize,
    pub rotation: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Failure {
    pub at: GraphRef,
    pub check: Check,
    pub detail: String,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub checked: u64,
    pub failed: u64,
}

const KEPT_FAILURES: usize = 16;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub graphs: u64,
    pub skipped_graphs: u64,
    pub ribbon_graphs: u64,
    pub planar_agree: u64,
    pub nonplanar_disagree: u64,
    pub multigraph_exempt: u64,
    pub kind_a: u64,
    pub kind_b: u64,
    pub promoted: u64,
    pub witnesses: BTreeMap<String, u64>,
    /// Kind-B runs where `G₁` breaks the criterion and the sink-`c` witness
    /// was built (and verified).
    pub sink_c_witnesses: u64,
    pub checks: BTreeMap<Check, Tally>,
    /// The first rotation system with a sink-`c` witness.
    pub first_sink_c_witness: Option<GraphRef>,
    pub failures: Vec<Failure>,
}

impl Summary {
    pub fn violations(&self) -> u64 {
        self.checks.get(&Check::Theorem).map_or(0, |t| t.failed)
    }

    pub fn failed_checks(&self) -> u64 {
        self.checks.values().map(|t| t.failed).sum()
    }

    fn tally(&mut self, at: GraphRef, check: Check, ok: bool, detail: impl FnOnce() -> String) {
        let t = self.checks.entry(check).or_default();
        t.checked += 1;
        if !ok {
            t.failed += 1;
            self.failures.push(Failure {
                at,
                check,
                detail: detail(),
            });
        }
    }

    pub fn merge(mut self, other: Summary) -> Summary {
        self.graphs += other.graphs;
        self.skipped_graphs += other.skipped_graphs;
        self.ribbon_graphs += other.ribbon_graphs;
        self.planar_agree += other.planar_agree;
        self.nonplanar_disagree += other.nonplanar_disagree;
        self.multigraph_exempt += other.multigraph_exempt;
        self.kind_a += other.kind_a;
        self.kind_b += other.kind_b;
        self.promoted += other.promoted;
        self.sink_c_witnesses += other.sink_c_witnesses;
        for (k, v) in other.witnesses {
            *self.witnesses.entry(k).or_default() += v;
        }
        for (k, v) in other.checks {
            let t = self.checks.entry(k).or_default();
            t.checked += v.checked;
            t.failed += v.failed;
        }
        self.first_sink_c_witness = match (self.first_sink_c_witness, other.first_sink_c_witness) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.failures.extend(other.failures);
        self.failures.sort();
        self.failures.truncate(KEPT_FAILURES);
        self
    }
}

fn provenance_key(p: Provenance) -> String {
    serde_json::to_value(p)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

/// Every check that depends on the rotation system.
pub fn check_ribbon_graph(g: &RibbonGraph, at: GraphRef) -> Summary {
    let mut s = Summary {
        ribbon_graphs: 1,
        ..Summary::default()
    };
    let planar = g.is_planar_ribbon();
    let simple = g.is_simple();
    let tables = ActionTables::build(g);
    let pic = tables.pic();
    let agrees: Vec<bool> = g.vertices().map(|y| tables.agree_at(y)).collect();
    let all_agree = agrees.iter().all(|&a| a);

    if planar {
        s.tally(at, Check::Theorem, all_agree, || {
            "planar but the torsors disagree".into()
        });
        if all_agree {
            s.planar_agree += 1;
        }
    } else {
        match decompose::classify_with_steps(g) {
            Ok(p) => {
                match p.decomposition.kind {
                    Some(Kind::A) => s.kind_a += 1,
                    Some(Kind::B) => s.kind_b += 1,
                    None => {}
                }
                if !p.steps.is_empty() {
                    s.promoted += 1;
                }
                if simple {
                    let outcome = match p.decomposition.kind {
                        Some(Kind::A) => {
                            decompose::witness_prop_a(g, &p.decomposition).map(|w| (w, None, false))
                        }
                        _ => decompose::witness_prop_b(g, &p.decomposition)
                            .map(|r| (r.witness, r.lemma_l5, r.sink_c_witness.is_some())),
                    };
                    match outcome {
                        Ok((w, l5, sink_c)) => {
                            *s.witnesses.entry(provenance_key(w.provenance)).or_default() += 1;
                            if sink_c {
                                s.sink_c_witnesses += 1;
                                s.first_sink_c_witness = Some(at);
                            }
                            if p.decomposition.kind == Some(Kind::B) {
                                let holds = decompose::lemma_l5_for(&p.decomposition);
                                s.tally(at, Check::LemmaL5, holds && l5 != Some(false), || {
                                    "2 Σ ∂(cx_i) is principal on a simple G₁".into()
                                });
                            }
                            s.tally(at, Check::Theorem, !all_agree, || {
                                "witness verified but tables agree".into()
                            });
                            if !all_agree {
                                s.nonplanar_disagree += 1;
                            }
                        }
                        Err(e) => s.tally(at, Check::Theorem, false, || e.to_string()),
                    }
                } else {
                    s.multigraph_exempt += 1;
                    s.tally(at, Check::Theorem, true, String::new);
                }
            }
            Err(e) => s.tally(at, Check::Theorem, false, || {
                format!("classification failed: {e}")
            }),
        }
    }

    // principal divisors act trivially under both torsors
    let identity: Vec<u32> = (0..tables.tree_count() as u32).collect();
    for v in g.vertices() {
        let mut ok = true;
        for u in g.vertices() {
            let f = firing(g, u);
            ok &= tables.rotor_divisor(v, &f) == identity;
            ok &= tables.bernardi_shift(v, &pic.class(&f)) == identity;
        }
        s.tally(at, Check::PrincipalActsTrivially, ok, || {
            format!("at vertex {}", g.label(v))
        });
    }

    // Bernardi bijectivity
    let order = pic.order();
    for v in g.vertices() {
        let mut cls = tables.bernardi_classes(v).to_vec();
        cls.sort();
        cls.dedup();
        let ok = num_bigint::BigInt::from(cls.len()) == order;
        s.tally(at, Check::BernardiBijective, ok, || {
            format!("at vertex {}", g.label(v))
        });
    }

    // basepoint shift for every (v, e1, e2, T)
    for v in g.vertices() {
        let darts = g.rotation(v).to_vec();
        if darts.is_empty() {
            continue;
        }
        let per_dart: Vec<Vec<_>> = darts
            .iter()
            .map(|&e| {
                tables
                    .trees
                    .iter()
                    .map(|t| pic.class(&bernardi::divisor_unchecked(g, &t.dart_mask(g), e)))
                    .collect()
            })
            .collect();
        let mut ok = true;
        for (i, &e1) in darts.iter().enumerate() {
            for (j, &e2) in darts.iter().enumerate() {
                let shift = pic.class(&shift_divisor(g, e1, e2));
                ok &= (0..tables.tree_count())
                    .all(|t| pic.sub(&per_dart[j][t], &per_dart[i][t]) == shift);
            }
        }
        s.tally(at, Check::BasepointShift, ok, || {
            format!("at vertex {}", g.label(v))
        });
    }

    // basepoint (in)dependence of the actions
    let n = g.vertex_count();
    let ok = if planar {
        (0..n).all(|v| {
            let v = Vertex(v);
            tables.torsors_equal_at(v)
                && tables.rotor_torsors_equal(Vertex(0), v)
                && (1..n).all(|x| {
                    tables.bernardi_generator(Vertex(0), Vertex(x))
                        == tables.bernardi_generator(v, Vertex(x))
                })
        })
    } else {
        (1..n).any(|w| !tables.rotor_torsors_equal(Vertex(0), Vertex(w)))
    };
    s.tally(at, Check::BasepointIndependence, ok, || {
        if planar {
            "planar but the actions depend on the basepoint".into()
        } else {
            "non-planar but the rotor action is basepoint-independent".into()
        }
    });
    s
}

/// Checks that do not depend on the rotation system: the matrix-tree count
/// and the cut decomposition of every acyclic partial orientation.
pub fn check_abstract_graph(g: &RibbonGraph, at: GraphRef) -> Summary {
    let mut s = Summary::default();
    let pic = PicGroup::of(g);
    let count = spanning_trees(g).len();
    s.tally(
        at,
        Check::MatrixTree,
        num_bigint::BigInt::from(count) == pic.order(),
        || format!("{count} trees, |Pic| = {}", pic.order()),
    );
    let edges: Vec<_> = g.edges().filter(|&e| !g.is_loop(e)).collect();
    let total = 3u64.pow(edges.len() as u32);
    let mut ok = true;
    for code in 0..total {
        let mut c = code;
        let mut darts = Vec::new();
        for &e in &edges {
            let (d, r) = g.edge_darts(e);
            match c % 3 {
                1 => darts.push(d),
                2 => darts.push(r),
                _ => {}
            }
            c /= 3;
        }
        let Ok(b) = PartialOrientation::new(g, darts) else {
            continue;
        };
        if b.has_directed_cycle(g) {
            continue;
        }
        let zero = pic.is_principal(&sum_boundaries(g, &b));
        let cuts = matches!(
            directed_cut_decomposition(g, &b),
            Ok(CutDecomposition::Cuts(_))
        );
        ok &= zero == cuts;
    }
    s.tally(at, Check::CutDecomposition, ok, || {
        "class-zero orientation without a cut decomposition".into()
    });
    s
}

/// `D ∼ 0` iff both wedge parts are principal, for every degree-0 divisor
/// with coefficients in `-bound..=bound`.
pub fn lemma_l4_holds(g: &RibbonGraph, split: &WedgeSplit, bound: i64) -> Tally {
    let n = g.vertex_count();
    let width = (2 * bound + 1) as u64;
    let pic = PicGroup::of(g);
    let (p1, p2) = (PicGroup::of(&split.g1.graph), PicGroup::of(&split.g2.graph));
    let mut t = Tally::default();
    for code in 0..width.pow(n as u32) {
        let mut c = code;
        let coeffs: Vec<i64> = (0..n)
            .map(|_| {
                let k = (c % width) as i64 - bound;
                c /= width;
                k
            })
            .collect();
        if coeffs.iter().sum::<i64>() != 0 {
            continue;
        }
        let d = Divisor::from_coeffs(coeffs);
        let (d1, d2) = pic_split(split, &d);
        t.checked += 1;
        if pic.is_principal(&d) != (p1.is_principal(&d1) && p2.is_principal(&d2)) {
            t.failed += 1;
        }
    }
    t
}

/// Number of worker threads, honouring `TORSOR_LAB_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool, EnumerateError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("TORSOR_LAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| EnumerateError::Threads(v.clone()))?;
        b = b.num_threads(n);
    }
    Ok(b.build().expect("thread pool"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: u32,
    spec: EnumerationSpec,
    next_graph: usize,
    summary: Summary,
}

fn check_graph(spec: &EnumerationSpec, index: usize, ag: &AbstractGraph) -> Summary {
    let count = ag.rotation_count();
    if count > spec.rotation_cap {
        return Summary {
            skipped_graphs: 1,
            ..Summary::default()
        };
    }
    let at0 = GraphRef {
        graph: index,
        rotation: 0,
    };
    let base = check_abstract_graph(&ag.rotation_system(0), at0);
    let per_rotation = (0..count)
        .into_par_iter()
        .map(|r| {
            check_ribbon_graph(
                &ag.rotation_system(r),
                GraphRef {
                    graph: index,
                    rotation: r,
                },
            )
        })
        .reduce(Summary::default, Summary::merge);
    let mut s = base.merge(per_rotation);
    s.graphs = 1;
    s
}

/// Runs the enumeration, resuming from and updating `checkpoint` if given.
pub fn enumerate_and_verify(
    spec: &EnumerationSpec,
    checkpoint: Option<&Path>,
    mut progress: impl FnMut(usize, usize),
) -> Result<Summary, EnumerateError> {
    let graphs = abstract_graphs(spec);
    let mut state = Checkpoint {
        format: 1,
        spec: spec.clone(),
        next_graph: 0,
        summary: Summary::default(),
    };
    if let Some(path) = checkpoint.filter(|p| p.exists()) {
        let saved: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if saved.spec != *spec {
            return Err(EnumerateError::SpecMismatch);
        }
        state = saved;
    }
    let pool = thread_pool()?;
    const CHUNK: usize = 64;
    while state.next_graph < graphs.len() {
        let end = (state.next_graph + CHUNK).min(graphs.len());
        let start = state.next_graph;
        let part = pool.install(|| {
            graphs[start..end]
                .par_iter()
                .enumerate()
                .map(|(i, ag)| check_graph(spec, start + i, ag))
                .reduce(Summary::default, Summary::merge)
        });
        state.summary = std::mem::take(&mut state.summary).merge(part);
        state.next_graph = end;
        if let Some(path) = checkpoint {
            write_atomically(path, &serde_json::to_string_pretty(&state)?)?;
        }
        progress(end, graphs.len());
    }
    Ok(state.summary)
}

fn write_atomically(path: &Path, text: &str) -> std::io::Result<()> {
    let mut tmp = PathBuf::from(path);
    tmp.set_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(tmp, path)
}

/// Rebuilds the rotation system `at` of the enumeration for `spec`.
pub fn ribbon_graph_at(spec: &EnumerationSpec, at: GraphRef) -> Option<RibbonGraph> {
    let graphs = abstract_graphs(spec);
    let ag = graphs.get(at.graph)?;
    (at.rotation < ag.rotation_count()).then(|| ag.rotation_system(at.rotation))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_small_graphs() {
        let spec = EnumerationSpec {
            max_vertices: 4,
            max_edges: 6,
            ..EnumerationSpec::default()
        };
        let gs = abstract_graphs(&spec);
        // connected labeled graphs on 1, 2, 3, 4 vertices: 1, 1, 4, 38
        assert_eq!(gs.len(), 1 + 1 + 4 + 38);
        let k4 = gs.iter().find(|g| g.edges.len() == 6).unwrap();
        assert_eq!(k4.rotation_count(), 16);
    }

    #[test]
    fn rotation_systems_are_distinct() {
        let k4 = AbstractGraph {
            n: 4,
            edges: vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        };
        let mut seen: Vec<Vec<Vec<usize>>> = (0..16)
            .map(|r| {
                let g = k4.rotation_system(r);
                g.vertices()
                    .map(|v| g.rotation(v).iter().map(|d| d.0).collect())
                    .collect()
            })
            .collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 16);
        let planar = (0..16)
            .filter(|&r| k4.rotation_system(r).is_planar_ribbon())
            .count();
        assert_eq!(planar, 2);
    }

    #[test]
    fn multigraph_mode_adds_parallel_edges() {
        let spec = EnumerationSpec {
            max_vertices: 2,
            max_edges: 2,
            simple_only: false,
            rotation_cap: u64::MAX,
        };
        let gs = abstract_graphs(&spec);
        assert_eq!(gs.len(), 3);
        assert!(!gs[2].is_simple());
    }

    #[test]
    fn three_vertices_all_agree() {
        let spec = EnumerationSpec {
            max_vertices: 3,
            max_edges: 3,
            ..EnumerationSpec::default()
        };
        let s = enumerate_and_verify(&spec, None, |_, _| {}).unwrap();
        assert_eq!(s.failed_checks(), 0, "{:?}", s.failures);
        assert_eq!(s.ribbon_graphs, s.planar_agree);
        assert_eq!(s.nonplanar_disagree, 0);
    }

    #[test]
    fn checkpoint_resumes() {
        let dir = std::env::temp_dir().join(format!("torsor-lab-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        let spec = EnumerationSpec {
            max_vertices: 4,
            max_edges: 4,
            ..EnumerationSpec::default()
        };
        let full = enumerate_and_verify(&spec, Some(&path), |_, _| {}).unwrap();
        let again = enumerate_and_verify(&spec, Some(&path), |_, _| {}).unwrap();
        assert_eq!(full, again);
        let other = EnumerationSpec {
            max_edges: 5,
            ..spec
        };
        assert!(matches!(
            enumerate_and_verify(&other, Some(&path), |_, _| {}),
            Err(EnumerateError::SpecMismatch)
        ));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
