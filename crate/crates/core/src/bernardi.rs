//! The Bernardi tour `β_(v,e)` and the Bernardi torsor `b_v`.
//!
//! The tour starts at the dart `e` at `v`. A tree edge is traversed and the
//! tour continues from `σ(α(d))`; a non-tree edge is cut and the tour
//! continues from `σ(d)`. The first cut of an edge drops a chip at the vertex
//! the tour is at. The tour ends when it is back at `e`.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::divisor::{boundary, Divisor, PicClass, PicGroup};
use crate::ribbon::{spanning_trees, Dart, EdgeId, GraphError, RibbonGraph, SpanningTree, Vertex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BernardiError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("dart {dart} does not start at vertex {vertex}")]
    DartNotAtBasepoint { dart: Dart, vertex: Vertex },
    #[error("trees {0:?} and {1:?} have linearly equivalent Bernardi divisors")]
    BijectivityViolation(SpanningTree, SpanningTree),
    #[error("divisor has degree {0}, expected 0")]
    NonZeroDegree(i64),
    #[error("basepoint shift from {from} to {to} does not match the tour difference")]
    ShiftMismatch { from: Dart, to: Dart },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TourAction {
    Traverse,
    Cut,
    RevisitCut,
}

/// One processed dart of a tour.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TourEvent {
    pub index: usize,
    pub dart: Dart,
    pub action: TourAction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chip_at: Option<Vertex>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BernardiRecord {
    pub divisor: Divisor,
    /// First cuts, in tour order: the edge and the vertex receiving the chip.
    pub chip_events: Vec<(EdgeId, Vertex)>,
    pub dart_order: Vec<Dart>,
}

fn tour_core(
    g: &RibbonGraph,
    mask: &[bool],
    e: Dart,
    mut visit: impl FnMut(usize, Dart, TourAction, Option<Vertex>),
) {
    let mut cut = vec![false; g.dart_count()];
    let mut cur = e;
    let mut i = 0;
    loop {
        assert!(i < g.dart_count(), "Bernardi tour failed to close");
        if mask[cur.0] {
            visit(i, cur, TourAction::Traverse, None);
            cur = g.sigma(g.alpha(cur));
        } else {
            let r = g.alpha(cur);
            if cut[r.0] {
                visit(i, cur, TourAction::RevisitCut, None);
            } else {
                visit(i, cur, TourAction::Cut, Some(g.tail(cur)));
            }
            cut[cur.0] = true;
            cur = g.sigma(cur);
        }
        i += 1;
        if cur == e {
            break;
        }
    }
    debug_assert_eq!(i, g.dart_count());
}

fn check_basepoint(g: &RibbonGraph, v: Vertex, e: Dart) -> Result<(), BernardiError> {
    if e.0 >= g.dart_count() || g.tail(e) != v {
        return Err(BernardiError::DartNotAtBasepoint { dart: e, vertex: v });
    }
    Ok(())
}

/// Runs the tour of `t` from `(v, e)`.
pub fn bernardi_tour(
    g: &RibbonGraph,
    t: &SpanningTree,
    v: Vertex,
    e: Dart,
) -> Result<BernardiRecord, BernardiError> {
    check_basepoint(g, v, e)?;
    SpanningTree::new(g, t.edges().iter().copied())?;
    let mut divisor = Divisor::zero(g.vertex_count());
    let mut chip_events = Vec::new();
    let mut dart_order = Vec::with_capacity(g.dart_count());
    tour_core(g, &t.dart_mask(g), e, |_, d, _, chip| {
        dart_order.push(d);
        if let Some(w) = chip {
            divisor.add_at(w, 1);
            chip_events.push((g.edge_of(d), w));
        }
    });
    Ok(BernardiRecord {
        divisor,
        chip_events,
        dart_order,
    })
}

/// The tour as a list of events, for traces.
pub fn bernardi_trace(
    g: &RibbonGraph,
    t: &SpanningTree,
    v: Vertex,
    e: Dart,
) -> Result<Vec<TourEvent>, BernardiError> {
    check_basepoint(g, v, e)?;
    SpanningTree::new(g, t.edges().iter().copied())?;
    let mut events = Vec::new();
    tour_core(g, &t.dart_mask(g), e, |index, dart, action, chip_at| {
        events.push(TourEvent {
            index,
            dart,
            action,
            chip_at,
        })
    });
    Ok(events)
}

/// `β_(tail(e), e)(T)` from a dart mask, without validation.
pub(crate) fn divisor_unchecked(g: &RibbonGraph, mask: &[bool], e: Dart) -> Divisor {
    let mut divisor = Divisor::zero(g.vertex_count());
    tour_core(g, mask, e, |_, _, _, chip| {
        if let Some(w) = chip {
            divisor.add_at(w, 1);
        }
    });
    divisor
}

/// `β_(v,e)(T)`. A graph without edges has only the empty tree and the zero
/// divisor, and no basepoint dart; pass `None` there.
pub fn bernardi_divisor(
    g: &RibbonGraph,
    t: &SpanningTree,
    v: Vertex,
    e: Option<Dart>,
) -> Result<Divisor, BernardiError> {
    match e {
        Some(e) => Ok(bernardi_tour(g, t, v, e)?.divisor),
        None => Ok(Divisor::zero(g.vertex_count())),
    }
}

/// All spanning trees with the classes of their Bernardi divisors.
#[derive(Clone, Debug)]
pub struct BernardiTable {
    pub vertex: Vertex,
    pub dart: Option<Dart>,
    pub trees: Vec<SpanningTree>,
    pub classes: Vec<PicClass>,
    index: HashMap<PicClass, usize>,
}

impl BernardiTable {
    /// Tree whose Bernardi divisor lies in class `c`.
    pub fn tree_of(&self, c: &PicClass) -> Option<&SpanningTree> {
        self.index.get(c).map(|&i| &self.trees[i])
    }

    pub fn position(&self, t: &SpanningTree) -> Option<usize> {
        self.trees.binary_search(t).ok()
    }

    pub fn class_of(&self, t: &SpanningTree) -> Option<&PicClass> {
        self.position(t).map(|i| &self.classes[i])
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

/// Builds the table for basepoint `(v, e)` and checks injectivity.
pub fn bernardi_map(
    g: &RibbonGraph,
    v: Vertex,
    e: Option<Dart>,
) -> Result<BernardiTable, BernardiError> {
    if let Some(e) = e {
        check_basepoint(g, v, e)?;
    }
    let trees = spanning_trees(g);
    let pic = PicGroup::of(g);
    let classes: Vec<PicClass> = trees
        .iter()
        .map(|t| match e {
            Some(e) => pic.class(&divisor_unchecked(g, &t.dart_mask(g), e)),
            None => pic.zero(),
        })
        .collect();
    let mut index = HashMap::with_capacity(trees.len());
    for (i, c) in classes.iter().enumerate() {
        if let Some(j) = index.insert(c.clone(), i) {
            return Err(BernardiError::BijectivityViolation(
                trees[j].clone(),
                trees[i].clone(),
            ));
        }
    }
    Ok(BernardiTable {
        vertex: v,
        dart: e,
        trees,
        classes,
        index,
    })
}

/// Smallest dart at `v`, the default basepoint dart.
pub fn anchor(g: &RibbonGraph, v: Vertex) -> Option<Dart> {
    g.rotation(v).first().copied()
}

/// The Bernardi action `b_v`: the tree `T'` with `β(T') ∼ β(T) + D`.
pub fn bernardi_action(
    g: &RibbonGraph,
    t: &SpanningTree,
    d: &Divisor,
    v: Vertex,
) -> Result<SpanningTree, BernardiError> {
    bernardi_action_at(g, t, d, v, anchor(g, v))
}

/// [`bernardi_action`] with an explicit basepoint dart.
pub fn bernardi_action_at(
    g: &RibbonGraph,
    t: &SpanningTree,
    d: &Divisor,
    v: Vertex,
    e: Option<Dart>,
) -> Result<SpanningTree, BernardiError> {
    if d.degree() != 0 {
        return Err(BernardiError::NonZeroDegree(d.degree()));
    }
    let table = bernardi_map(g, v, e)?;
    let pic = PicGroup::of(g);
    let c = table
        .class_of(t)
        .ok_or_else(|| GraphError::NotASpanningTree(format!("{:?}", t.edges())))?;
    let target = pic.add(c, &pic.class(d));
    Ok(table
        .tree_of(&target)
        .expect("Bernardi map is onto Pic")
        .clone())
}

/// `∂e₁ + ∂a₁ + … + ∂a_k` over `e₁` and the darts strictly between `e₁` and
/// `e₂` in the rotation at `v`, checked against
/// `β_(v,e₂)(T) − β_(v,e₁)(T)`.
pub fn basepoint_shift(
    g: &RibbonGraph,
    v: Vertex,
    e1: Dart,
    e2: Dart,
    t: &SpanningTree,
) -> Result<Divisor, BernardiError> {
    check_basepoint(g, v, e1)?;
    check_basepoint(g, v, e2)?;
    let shift = shift_divisor(g, e1, e2);
    let b1 = bernardi_tour(g, t, v, e1)?.divisor;
    let b2 = bernardi_tour(g, t, v, e2)?.divisor;
    let pic = PicGroup::of(g);
    if pic.class(&(&b2 - &b1)) != pic.class(&shift) {
        return Err(BernardiError::ShiftMismatch { from: e1, to: e2 });
    }
    Ok(shift)
}

pub(crate) fn shift_divisor(g: &RibbonGraph, e1: Dart, e2: Dart) -> Divisor {
    let mut shift = Divisor::zero(g.vertex_count());
    if e1 != e2 {
        shift += &boundary(g, e1);
        for a in g.rotation_arc(e1, e2) {
            shift += &boundary(g, a);
        }
    }
    shift
}
