//! Rotor-routing: the chip-and-rotor process and the induced action of
//! `Div⁰(G)` on spanning trees.

use std::collections::VecDeque;

use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::divisor::{Divisor, PicGroup};
use crate::ribbon::{Dart, EdgeId, GraphError, RibbonGraph, SpanningTree, Vertex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RotorError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("the chip is already at the sink")]
    ChipAtSink,
    #[error("rotor-routing exceeded its step cap of {0}")]
    StepCapExceeded(u64),
    #[error("divisor has degree {0}, expected 0")]
    NonZeroDegree(i64),
}

/// Rotor configuration with a chip. `rotor[v]` is `None` exactly at the sink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RotorState {
    pub sink: Vertex,
    pub chip: Vertex,
    pub rotor: Vec<Option<Dart>>,
}

impl RotorState {
    pub fn is_terminal(&self) -> bool {
        self.chip == self.sink
    }

    /// Edges under the rotors, sorted.
    pub fn rotor_edges(&self, g: &RibbonGraph) -> Vec<EdgeId> {
        let mut edges: Vec<EdgeId> = self.rotor.iter().flatten().map(|&d| g.edge_of(d)).collect();
        edges.sort_unstable();
        edges
    }
}

/// One rotor-routing step, as recorded in a trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RotorStep {
    pub step: u64,
    /// Position of the chip after the step.
    pub chip: Vertex,
    pub changed_vertex: Vertex,
    pub new_rotor_dart: Dart,
}

/// For each vertex, the dart of the unique tree edge leading towards `y`.
pub fn orient_toward(g: &RibbonGraph, t: &SpanningTree, y: Vertex) -> Vec<Option<Dart>> {
    let mask = t.dart_mask(g);
    let mut rotor = vec![None; g.vertex_count()];
    let mut seen = vec![false; g.vertex_count()];
    seen[y.0] = true;
    let mut queue = VecDeque::from([y]);
    while let Some(v) = queue.pop_front() {
        for &d in g.rotation(v) {
            let w = g.head(d);
            if mask[d.0] && !seen[w.0] {
                seen[w.0] = true;
                rotor[w.0] = Some(g.alpha(d));
                queue.push_back(w);
            }
        }
    }
    rotor
}

pub fn initial_state(
    g: &RibbonGraph,
    t: &SpanningTree,
    x: Vertex,
    y: Vertex,
) -> Result<RotorState, RotorError> {
    SpanningTree::new(g, t.edges().iter().copied())?;
    Ok(RotorState {
        sink: y,
        chip: x,
        rotor: orient_toward(g, t, y),
    })
}

/// Turns the rotor at the chip to the next dart, then moves the chip along it.
pub fn rotor_step(g: &RibbonGraph, s: &RotorState) -> Result<RotorState, RotorError> {
    let mut next = s.clone();
    step_in_place(g, &mut next)?;
    Ok(next)
}

fn step_in_place(g: &RibbonGraph, s: &mut RotorState) -> Result<Dart, RotorError> {
    if s.chip == s.sink {
        return Err(RotorError::ChipAtSink);
    }
    let d = g.sigma(s.rotor[s.chip.0].expect("non-sink vertices carry a rotor"));
    s.rotor[s.chip.0] = Some(d);
    s.chip = g.head(d);
    Ok(d)
}

/// `|V|·|E|·|Pic⁰(G)|`, the hard bound on the number of steps.
pub fn step_cap(g: &RibbonGraph) -> u64 {
    let order = PicGroup::of(g).order().to_u64().unwrap_or(u64::MAX);
    (g.vertex_count() as u64)
        .saturating_mul(g.edge_count().max(1) as u64)
        .saturating_mul(order.max(1))
}

fn run(
    g: &RibbonGraph,
    s: &mut RotorState,
    mut trace: Option<&mut Vec<RotorStep>>,
) -> Result<(), RotorError> {
    let cap = step_cap(g);
    let mut steps = 0;
    while s.chip != s.sink {
        if steps == cap {
            return Err(RotorError::StepCapExceeded(cap));
        }
        let changed = s.chip;
        let d = step_in_place(g, s)?;
        steps += 1;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(RotorStep {
                step: steps,
                chip: s.chip,
                changed_vertex: changed,
                new_rotor_dart: d,
            });
        }
    }
    Ok(())
}

/// `((x) − (y))_y(T)`.
pub fn rotor_route(
    g: &RibbonGraph,
    t: &SpanningTree,
    x: Vertex,
    y: Vertex,
) -> Result<SpanningTree, RotorError> {
    let mut s = initial_state(g, t, x, y)?;
    run(g, &mut s, None)?;
    Ok(SpanningTree::from_sorted_unchecked(s.rotor_edges(g)))
}

/// [`rotor_route`] together with its step trace.
pub fn rotor_route_traced(
    g: &RibbonGraph,
    t: &SpanningTree,
    x: Vertex,
    y: Vertex,
) -> Result<(SpanningTree, Vec<RotorStep>), RotorError> {
    let mut s = initial_state(g, t, x, y)?;
    let mut trace = Vec::new();
    run(g, &mut s, Some(&mut trace))?;
    Ok((SpanningTree::from_sorted_unchecked(s.rotor_edges(g)), trace))
}

/// Routes from an already-oriented configuration, skipping validation. Used
/// by the table builders, which route every tree from every vertex.
pub(crate) fn route_unchecked(
    g: &RibbonGraph,
    rotor: Vec<Option<Dart>>,
    x: Vertex,
    y: Vertex,
) -> Vec<EdgeId> {
    let mut s = RotorState {
        sink: y,
        chip: x,
        rotor,
    };
    while s.chip != s.sink {
        let d = g.sigma(s.rotor[s.chip.0].expect("non-sink vertices carry a rotor"));
        s.rotor[s.chip.0] = Some(d);
        s.chip = g.head(d);
    }
    s.rotor_edges(g)
}

/// The rotor-routing action `r_y`: writes `D = Σ a_x ((x) − (y))` and routes
/// each generator `|a_x|` times in ascending vertex order, using
/// `ord − |a_x| mod ord` applications for negative coefficients.
pub fn rotor_action(
    g: &RibbonGraph,
    t: &SpanningTree,
    d: &Divisor,
    y: Vertex,
) -> Result<SpanningTree, RotorError> {
    if d.degree() != 0 {
        return Err(RotorError::NonZeroDegree(d.degree()));
    }
    SpanningTree::new(g, t.edges().iter().copied())?;
    let pic = PicGroup::of(g);
    let mut cur = t.clone();
    for x in g.vertices().filter(|&x| x != y) {
        let a = d.get(x);
        if a == 0 {
            continue;
        }
        let gen = pic.sub(&pic.point_class(x), &pic.point_class(y));
        let ord = pic.element_order(&gen);
        for _ in 0..a.rem_euclid(ord) {
            cur = rotor_route(g, &cur, x, y)?;
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ribbon::spanning_trees;

    fn tree(g: &RibbonGraph, names: &[(&str, &str)]) -> SpanningTree {
        SpanningTree::new(g, names.iter().map(|(u, v)| g.find_edge(u, v).unwrap())).unwrap()
    }

    #[test]
    fn fig1_route() {
        let g = fixtures::g_fig1();
        let t = tree(&g, &[("c", "a"), ("c", "f"), ("a", "b"), ("b", "d")]);
        let c = g.vertex_by_label("c").unwrap();
        let d = g.vertex_by_label("d").unwrap();
        let s0 = initial_state(&g, &t, c, d).unwrap();
        assert_eq!(
            s0.rotor[c.0],
            g.dart_between(c, g.vertex_by_label("a").unwrap())
        );
        let s1 = rotor_step(&g, &s0).unwrap();
        assert_eq!(s1.chip, d);
        assert_eq!(s1.rotor[c.0], g.dart_between(c, d));
        assert_eq!(rotor_step(&g, &s1), Err(RotorError::ChipAtSink));
        let out = rotor_route(&g, &t, c, d).unwrap();
        assert_eq!(
            out,
            tree(&g, &[("c", "d"), ("c", "f"), ("a", "b"), ("b", "d")])
        );
    }

    #[test]
    fn chip_at_sink_leaves_tree_unchanged() {
        let g = fixtures::triangle();
        for t in spanning_trees(&g) {
            assert_eq!(rotor_route(&g, &t, Vertex(1), Vertex(1)).unwrap(), t);
        }
    }

    #[test]
    fn path_rotors_point_to_sink() {
        let g = fixtures::path(4);
        let t = spanning_trees(&g).pop().unwrap();
        let s = initial_state(&g, &t, Vertex(0), Vertex(3)).unwrap();
        for v in 0..3 {
            assert_eq!(g.head(s.rotor[v].unwrap()), Vertex(v + 1));
        }
        assert_eq!(s.rotor[3], None);
    }

    #[test]
    fn degree_one_chip_bounces_back() {
        let g = fixtures::path(3);
        let t = spanning_trees(&g).pop().unwrap();
        let s = initial_state(&g, &t, Vertex(0), Vertex(2)).unwrap();
        let s1 = rotor_step(&g, &s).unwrap();
        assert_eq!(s1.rotor[0], s.rotor[0]);
        assert_eq!(s1.chip, Vertex(1));
    }

    #[test]
    fn trace_records_every_step() {
        let g = fixtures::g_ex2();
        let t = tree(&g, &[("c", "a1"), ("a1", "a2"), ("c", "f1"), ("c", "f2")]);
        let c = g.vertex_by_label("c").unwrap();
        let a2 = g.vertex_by_label("a2").unwrap();
        let (out, trace) = rotor_route_traced(&g, &t, c, a2).unwrap();
        assert_eq!(out, rotor_route(&g, &t, c, a2).unwrap());
        assert_eq!(trace.last().unwrap().chip, a2);
        assert_eq!(trace.first().unwrap().changed_vertex, c);
        assert_eq!(
            out,
            tree(&g, &[("c", "a2"), ("a1", "a2"), ("f1", "f2"), ("c", "f2")])
        );
    }

    #[test]
    fn action_of_zero_and_principal_divisors() {
        let g = fixtures::g_fig1();
        let n = g.vertex_count();
        for t in spanning_trees(&g) {
            assert_eq!(
                rotor_action(&g, &t, &Divisor::zero(n), Vertex(1)).unwrap(),
                t
            );
            for v in g.vertices() {
                let f = crate::divisor::firing(&g, v);
                assert_eq!(rotor_action(&g, &t, &f, Vertex(3)).unwrap(), t);
            }
        }
    }

    #[test]
    fn nonzero_degree_is_rejected() {
        let g = fixtures::triangle();
        let t = spanning_trees(&g).remove(0);
        let d = Divisor::point(3, Vertex(0));
        assert_eq!(
            rotor_action(&g, &t, &d, Vertex(0)),
            Err(RotorError::NonZeroDegree(1))
        );
    }
}
