//! Agreement of the Bernardi and rotor-routing torsors.
//!
//! `b_y = r_y` iff for every vertex `x` and tree `T`,
//! `β_(y,e)(((x) − (y))_y(T)) − β_(y,e)(T) ∼ (x) − (y)`; the generators
//! `(x) − (y)` suffice.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::bernardi::{self, anchor, BernardiError};
use crate::divisor::{Divisor, PicClass, PicGroup};
use crate::ribbon::{spanning_trees, RibbonGraph, SpanningTree, Vertex};
use crate::rotor::{self, orient_toward, RotorError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TorsorError {
    #[error("invalid witness: {0}")]
    InvalidWitnessFields(String),
    #[error(transparent)]
    Rotor(#[from] RotorError),
    #[error(transparent)]
    Bernardi(#[from] BernardiError),
}

/// A pair `(x, T)` violating the agreement criterion at some sink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub chip: Vertex,
    pub tree: SpanningTree,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexAgreement {
    pub vertex: Vertex,
    pub agrees: bool,
    pub counterexample: Option<Counterexample>,
}

/// Decides `b_y = r_y`. Chips are tried in ascending vertex order and trees
/// in lexicographic order; the first failure is returned.
pub fn torsors_agree_at(g: &RibbonGraph, y: Vertex) -> VertexAgreement {
    let agree = VertexAgreement {
        vertex: y,
        agrees: true,
        counterexample: None,
    };
    let Some(e) = anchor(g, y) else {
        return agree;
    };
    let table = bernardi::bernardi_map(g, y, Some(e)).expect("Bernardi map is bijective");
    let pic = PicGroup::of(g);
    let py = pic.point_class(y);
    for x in g.vertices().filter(|&x| x != y) {
        let want = pic.sub(&pic.point_class(x), &py);
        for (t, ct) in table.trees.iter().zip(&table.classes) {
            let routed = rotor::route_unchecked(g, orient_toward(g, t, y), x, y);
            let t2 = SpanningTree::from_sorted_unchecked(routed);
            let c2 = table
                .class_of(&t2)
                .expect("rotor-routing yields a spanning tree");
            if pic.sub(c2, ct) != want {
                return VertexAgreement {
                    vertex: y,
                    agrees: false,
                    counterexample: Some(Counterexample {
                        chip: x,
                        tree: t.clone(),
                    }),
                };
            }
        }
    }
    agree
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgreementReport {
    pub planar: bool,
    pub genus: usize,
    pub simple: bool,
    pub vertices: Vec<VertexAgreement>,
    pub theorem_consistent: bool,
}

impl AgreementReport {
    pub fn all_agree(&self) -> bool {
        self.vertices.iter().all(|v| v.agrees)
    }

    pub fn to_json(&self, g: &RibbonGraph) -> Value {
        let mut vertices = Map::new();
        for v in &self.vertices {
            let ce = v
                .counterexample
                .as_ref()
                .map(|c| json!({ "chip": g.label(c.chip), "tree": c.tree.names(g) }));
            vertices.insert(
                g.label(v.vertex).to_string(),
                json!({ "agrees": v.agrees, "counterexample": ce }),
            );
        }
        json!({
            "format": 1,
            "planar": self.planar,
            "genus": self.genus,
            "simple": self.simple,
            "vertices": vertices,
            "theorem_consistent": self.theorem_consistent,
        })
    }
}

/// Runs [`torsors_agree_at`] at every vertex and checks the result against
/// the theorem: planar graphs agree everywhere, simple non-planar graphs
/// disagree somewhere. Non-planar multigraphs are exempt.
pub fn agreement_report(g: &RibbonGraph) -> AgreementReport {
    let vertices: Vec<VertexAgreement> = g.vertices().map(|y| torsors_agree_at(g, y)).collect();
    let planar = g.is_planar_ribbon();
    let simple = g.is_simple();
    let all = vertices.iter().all(|v| v.agrees);
    let theorem_consistent = if planar { all } else { !simple || !all };
    AgreementReport {
        planar,
        genus: g.surface_genus(),
        simple,
        vertices,
        theorem_consistent,
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PropA,
    PropBAn,
    PropBC,
    Search,
}

/// `(sink, chip, tree)` certifying `b_sink ≠ r_sink`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementWitness {
    pub sink: Vertex,
    pub chip: Vertex,
    pub tree: SpanningTree,
    pub provenance: Provenance,
}

impl DisagreementWitness {
    pub fn to_json(&self, g: &RibbonGraph, verified: bool) -> Value {
        json!({
            "format": 1,
            "sink": g.label(self.sink),
            "chip": g.label(self.chip),
            "tree": self.tree.edges(),
            "tree_names": self.tree.names(g),
            "provenance": self.provenance,
            "verified": verified,
        })
    }
}

/// Recomputes the agreement criterion for one `(sink, chip, tree)` from
/// scratch, with a fresh Picard group based at the sink. Returns `true` iff
/// the criterion fails, i.e. the witness certifies disagreement.
pub fn verify_witness(g: &RibbonGraph, w: &DisagreementWitness) -> Result<bool, TorsorError> {
    let n = g.vertex_count();
    if w.sink.0 >= n || w.chip.0 >= n {
        return Err(TorsorError::InvalidWitnessFields(
            "vertex out of range".into(),
        ));
    }
    let t = SpanningTree::new(g, w.tree.edges().iter().copied())
        .map_err(|e| TorsorError::InvalidWitnessFields(e.to_string()))?;
    let Some(e) = anchor(g, w.sink) else {
        return Ok(false);
    };
    let t2 = rotor::rotor_route(g, &t, w.chip, w.sink)?;
    let b1 = bernardi::bernardi_tour(g, &t, w.sink, e)?.divisor;
    let b2 = bernardi::bernardi_tour(g, &t2, w.sink, e)?.divisor;
    let pic = PicGroup::new(g, w.sink).expect("desk-scale Picard group");
    let gap = &(&b2 - &b1) - &Divisor::difference(n, w.chip, w.sink);
    Ok(!pic.is_principal(&gap))
}

type Perm = Vec<u32>;

fn invert(p: &[u32]) -> Perm {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j as usize] = i as u32;
    }
    inv
}

fn compose(after: &[u32], before: &[u32]) -> Perm {
    before.iter().map(|&i| after[i as usize]).collect()
}

/// Both torsors at every basepoint, tabulated as permutations of the
/// spanning trees. Generators of `Div⁰` are `(x) − (q)` with `q` the
/// lowest vertex.
pub struct ActionTables {
    pub trees: Vec<SpanningTree>,
    pic: std::sync::Arc<PicGroup>,
    /// `routes[y][x][t]`: index of `((x) − (y))_y(T_t)`.
    routes: Vec<Vec<Perm>>,
    /// `classes[v][t]`: class of `β_(v, anchor)(T_t)`.
    classes: Vec<Vec<PicClass>>,
}

impl ActionTables {
    pub fn build(g: &RibbonGraph) -> Self {
        let trees = spanning_trees(g);
        let pic = PicGroup::of(g);
        let pos = |edges: Vec<_>| {
            trees
                .binary_search(&SpanningTree::from_sorted_unchecked(edges))
                .expect("rotor-routing yields a spanning tree") as u32
        };
        let mut routes = Vec::with_capacity(g.vertex_count());
        for y in g.vertices() {
            let oriented: Vec<_> = trees.iter().map(|t| orient_toward(g, t, y)).collect();
            let per_x = g
                .vertices()
                .map(|x| {
                    oriented
                        .iter()
                        .map(|r| pos(rotor::route_unchecked(g, r.clone(), x, y)))
                        .collect()
                })
                .collect();
            routes.push(per_x);
        }
        let classes = g
            .vertices()
            .map(|v| {
                trees
                    .iter()
                    .map(|t| match anchor(g, v) {
                        Some(e) => pic.class(&bernardi::divisor_unchecked(g, &t.dart_mask(g), e)),
                        None => pic.zero(),
                    })
                    .collect()
            })
            .collect();
        ActionTables {
            trees,
            pic,
            routes,
            classes,
        }
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn pic(&self) -> &PicGroup {
        &self.pic
    }

    /// `((x) − (y))_y` as a permutation.
    pub fn route(&self, y: Vertex, x: Vertex) -> &[u32] {
        &self.routes[y.0][x.0]
    }

    pub fn bernardi_classes(&self, v: Vertex) -> &[PicClass] {
        &self.classes[v.0]
    }

    /// `r_v` applied to the generator `(x) − (q)`.
    pub fn rotor_generator(&self, v: Vertex, x: Vertex) -> Perm {
        let q = Vertex(0);
        compose(&self.routes[v.0][x.0], &invert(&self.routes[v.0][q.0]))
    }

    /// `b_v` applied to the generator `(x) − (q)`.
    pub fn bernardi_generator(&self, v: Vertex, x: Vertex) -> Perm {
        let shift = self.pic.point_class(x);
        self.bernardi_shift(v, &shift)
    }

    /// `b_v` applied to a class.
    pub fn bernardi_shift(&self, v: Vertex, by: &PicClass) -> Perm {
        let cls = &self.classes[v.0];
        let index: std::collections::HashMap<&PicClass, u32> =
            cls.iter().enumerate().map(|(i, c)| (c, i as u32)).collect();
        cls.iter().map(|c| index[&self.pic.add(c, by)]).collect()
    }

    /// `r_v` applied to an arbitrary degree-0 divisor, via its generator
    /// expansion `D = Σ_x D(x)·((x) − (q))`.
    pub fn rotor_divisor(&self, v: Vertex, d: &Divisor) -> Perm {
        let n = self.trees.len();
        let mut acc: Perm = (0..n as u32).collect();
        for (x, &k) in d.coeffs().iter().enumerate() {
            if k == 0 || x == 0 {
                continue;
            }
            let gen = self.rotor_generator(v, Vertex(x));
            let step = if k > 0 { gen } else { invert(&gen) };
            for _ in 0..k.unsigned_abs() {
                acc = compose(&step, &acc);
            }
        }
        acc
    }

    /// Agreement at `y`, from the tables.
    pub fn agree_at(&self, y: Vertex) -> bool {
        let cls = &self.classes[y.0];
        let py = self.pic.point_class(y);
        (0..self.routes.len()).all(|x| {
            let want = self.pic.sub(&self.pic.point_class(Vertex(x)), &py);
            self.routes[y.0][x]
                .iter()
                .enumerate()
                .all(|(t, &t2)| self.pic.sub(&cls[t2 as usize], &cls[t]) == want)
        })
    }

    /// `r_v = r_w` as actions.
    pub fn rotor_torsors_equal(&self, v: Vertex, w: Vertex) -> bool {
        (1..self.routes.len())
            .all(|x| self.rotor_generator(v, Vertex(x)) == self.rotor_generator(w, Vertex(x)))
    }

    /// `r_v = b_v` as actions.
    pub fn torsors_equal_at(&self, v: Vertex) -> bool {
        (1..self.routes.len())
            .all(|x| self.rotor_generator(v, Vertex(x)) == self.bernardi_generator(v, Vertex(x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn tree(g: &RibbonGraph, names: &[(&str, &str)]) -> SpanningTree {
        SpanningTree::new(g, names.iter().map(|(u, v)| g.find_edge(u, v).unwrap())).unwrap()
    }

    #[test]
    fn fig1_disagrees_at_d() {
        let g = fixtures::g_fig1();
        let d = g.vertex_by_label("d").unwrap();
        let r = torsors_agree_at(&g, d);
        assert!(!r.agrees);
        let ce = r.counterexample.unwrap();
        assert_eq!(g.label(ce.chip), "c");
        assert_eq!(
            ce.tree,
            tree(&g, &[("c", "a"), ("c", "f"), ("a", "b"), ("b", "d")])
        );
    }

    #[test]
    fn triangle_agrees_everywhere() {
        let g = fixtures::triangle();
        let r = agreement_report(&g);
        assert!(r.planar && r.all_agree() && r.theorem_consistent);
    }

    #[test]
    fn multigraph_exemption() {
        let g = fixtures::g_rem();
        let r = agreement_report(&g);
        assert!(!r.planar);
        assert!(!r.simple);
        assert!(r.all_agree());
        assert!(r.theorem_consistent);
    }

    #[test]
    fn witness_verification() {
        let g = fixtures::g_fig1();
        let w = DisagreementWitness {
            sink: g.vertex_by_label("d").unwrap(),
            chip: g.vertex_by_label("c").unwrap(),
            tree: tree(&g, &[("c", "a"), ("c", "f"), ("a", "b"), ("b", "d")]),
            provenance: Provenance::Search,
        };
        assert_eq!(verify_witness(&g, &w), Ok(true));
        let bad = DisagreementWitness {
            tree: SpanningTree::from_sorted_unchecked(vec![]),
            ..w.clone()
        };
        assert!(matches!(
            verify_witness(&g, &bad),
            Err(TorsorError::InvalidWitnessFields(_))
        ));

        let p = fixtures::triangle();
        let w = DisagreementWitness {
            sink: Vertex(0),
            chip: Vertex(1),
            tree: spanning_trees(&p).remove(0),
            provenance: Provenance::Search,
        };
        assert_eq!(verify_witness(&p, &w), Ok(false));
    }

    #[test]
    fn tables_match_direct_checks() {
        for (_, g) in fixtures::corpus() {
            let tables = ActionTables::build(&g);
            for y in g.vertices() {
                assert_eq!(tables.agree_at(y), torsors_agree_at(&g, y).agrees);
                assert_eq!(tables.agree_at(y), tables.torsors_equal_at(y));
            }
        }
    }

    #[test]
    fn rotor_action_matches_tables() {
        let g = fixtures::g_ex2();
        let tables = ActionTables::build(&g);
        let n = g.vertex_count();
        for y in g.vertices() {
            for x in g.vertices() {
                let d = Divisor::difference(n, x, Vertex(0));
                let perm = tables.rotor_divisor(y, &d);
                for (i, t) in tables.trees.iter().enumerate() {
                    let direct = rotor::rotor_action(&g, t, &d, y).unwrap();
                    assert_eq!(direct, tables.trees[perm[i] as usize]);
                }
            }
        }
    }
}
