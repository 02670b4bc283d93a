use proptest::prelude::*;

use torsor_lab::bernardi::{self, anchor, bernardi_action};
use torsor_lab::decompose::{self, Certificate, Kind};
use torsor_lab::divisor::{firing, pic_split, Divisor, PicGroup};
use torsor_lab::enumerate::AbstractGraph;
use torsor_lab::io;
use torsor_lab::ribbon::{spanning_trees, wedge_split, wedge_sum, RibbonGraph, Side, Vertex};
use torsor_lab::rotor::rotor_action;
use torsor_lab::torsor::{torsors_agree_at, verify_witness, ActionTables};

/// Connected simple graph on `n` vertices: a random tree plus up to
/// `max_extra` further edges, with a random rotation system.
fn build(n: usize, parents: &[usize], extra: u32, max_extra: usize, rot: u64) -> RibbonGraph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (parents[i - 1] % i, i)).collect();
    let mut added = 0;
    let mut bit = 0;
    for u in 0..n {
        for v in u + 1..n {
            if edges.contains(&(u, v)) {
                continue;
            }
            if extra >> bit & 1 == 1 && added < max_extra {
                edges.push((u, v));
                added += 1;
            }
            bit += 1;
        }
    }
    edges.sort();
    let ag = AbstractGraph { n, edges };
    ag.rotation_system(rot % ag.rotation_count())
}

fn graph(max_n: usize, max_extra: usize) -> impl Strategy<Value = RibbonGraph> {
    (
        2..=max_n,
        prop::collection::vec(0usize..8, 8),
        any::<u32>(),
        any::<u64>(),
    )
        .prop_map(move |(n, p, e, r)| build(n, &p, e, max_extra, r))
}

fn divisor(g: &RibbonGraph, raw: &[i64]) -> Divisor {
    let n = g.vertex_count();
    let mut d = Divisor::zero(n);
    for (i, &k) in raw.iter().enumerate().take(n - 1) {
        d.add_at(Vertex(i + 1), k);
        d.add_at(Vertex(0), -k);
    }
    d
}

fn relabel(g: &RibbonGraph, prefix: &str) -> RibbonGraph {
    let labels = g
        .vertices()
        .map(|v| format!("{prefix}{}", g.label(v)))
        .collect();
    let rotations = g
        .vertices()
        .map(|v| g.rotation(v).iter().map(|d| d.0).collect())
        .collect();
    let pairs: Vec<(usize, usize)> = g
        .edges()
        .map(|e| {
            let (d, r) = g.edge_darts(e);
            (d.0, r.0)
        })
        .collect();
    RibbonGraph::from_rotations(labels, rotations, &pairs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn faces_and_euler_characteristic(g in graph(7, 5)) {
        let total: usize = g.faces().iter().map(|f| f.len()).sum();
        prop_assert_eq!(total, g.dart_count());
        let chi = g.vertex_count() as i64 - g.edge_count() as i64 + g.face_count() as i64;
        prop_assert_eq!(chi, 2 - 2 * g.surface_genus() as i64);
    }

    #[test]
    fn json_round_trip_is_byte_exact(g in graph(7, 5)) {
        let text = io::to_json(&g);
        let back = io::from_json(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(io::to_json(&back), text);
    }

    #[test]
    fn matrix_tree_count(g in graph(6, 4)) {
        let trees = spanning_trees(&g).len();
        prop_assert_eq!(num_bigint::BigInt::from(trees), PicGroup::of(&g).order());
    }

    #[test]
    fn class_is_invariant_under_firing(g in graph(6, 4), raw in prop::collection::vec(-3i64..=3, 6), v in 0usize..6) {
        let pic = PicGroup::of(&g);
        let d = divisor(&g, &raw);
        let moved = &d + &firing(&g, Vertex(v % g.vertex_count()));
        prop_assert_eq!(pic.class(&d), pic.class(&moved));
    }

    #[test]
    fn rotor_action_is_a_group_action(
        g in graph(5, 3),
        a in prop::collection::vec(-2i64..=2, 5),
        b in prop::collection::vec(-2i64..=2, 5),
        t in any::<prop::sample::Index>(),
        y in 0usize..5,
    ) {
        let trees = spanning_trees(&g);
        let t = &trees[t.index(trees.len())];
        let y = Vertex(y % g.vertex_count());
        let (d1, d2) = (divisor(&g, &a), divisor(&g, &b));
        let stepwise = rotor_action(&g, &rotor_action(&g, t, &d1, y).unwrap(), &d2, y).unwrap();
        let at_once = rotor_action(&g, t, &(&d1 + &d2), y).unwrap();
        prop_assert_eq!(stepwise, at_once);
    }

    #[test]
    fn bernardi_action_is_a_group_action(
        g in graph(5, 3),
        a in prop::collection::vec(-2i64..=2, 5),
        b in prop::collection::vec(-2i64..=2, 5),
        t in any::<prop::sample::Index>(),
        v in 0usize..5,
    ) {
        let trees = spanning_trees(&g);
        let t = &trees[t.index(trees.len())];
        let v = Vertex(v % g.vertex_count());
        let (d1, d2) = (divisor(&g, &a), divisor(&g, &b));
        let stepwise = bernardi_action(&g, &bernardi_action(&g, t, &d1, v).unwrap(), &d2, v).unwrap();
        let at_once = bernardi_action(&g, t, &(&d1 + &d2), v).unwrap();
        prop_assert_eq!(&stepwise, &at_once);
        let principal = firing(&g, v);
        prop_assert_eq!(&bernardi_action(&g, t, &principal, v).unwrap(), t);
    }

    #[test]
    fn rotor_action_is_transitive(g in graph(5, 3), y in 0usize..5) {
        let tables = ActionTables::build(&g);
        let y = Vertex(y % g.vertex_count());
        let mut seen = vec![false; tables.tree_count()];
        let mut stack = vec![0u32];
        seen[0] = true;
        while let Some(t) = stack.pop() {
            for x in g.vertices() {
                let next = tables.route(y, x)[t as usize];
                if !std::mem::replace(&mut seen[next as usize], true) {
                    stack.push(next);
                }
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn tours_visit_every_dart_once(g in graph(6, 4), t in any::<prop::sample::Index>(), v in 0usize..6) {
        let trees = spanning_trees(&g);
        let t = &trees[t.index(trees.len())];
        let v = Vertex(v % g.vertex_count());
        let e = anchor(&g, v).unwrap();
        let events = bernardi::bernardi_trace(&g, t, v, e).unwrap();
        let mut darts: Vec<usize> = events.iter().map(|ev| ev.dart.0).collect();
        darts.sort_unstable();
        prop_assert_eq!(darts, (0..g.dart_count()).collect::<Vec<_>>());
        let rec = bernardi::bernardi_tour(&g, t, v, e).unwrap();
        prop_assert_eq!(rec.chip_events.len(), g.cycle_rank());
        prop_assert_eq!(rec.divisor.degree(), g.cycle_rank() as i64);
    }

    #[test]
    fn agreement_matches_direct_action_comparison(g in graph(5, 3), y in 0usize..5) {
        let y = Vertex(y % g.vertex_count());
        let fast = torsors_agree_at(&g, y).agrees;
        let tables = ActionTables::build(&g);
        prop_assert_eq!(fast, tables.agree_at(y));
        let direct = spanning_trees(&g).iter().all(|t| {
            g.vertices().all(|x| {
                let d = Divisor::difference(g.vertex_count(), x, y);
                rotor_action(&g, t, &d, y).unwrap() == bernardi_action(&g, t, &d, y).unwrap()
            })
        });
        prop_assert_eq!(fast, direct);
    }

    #[test]
    fn theorem_on_random_graphs(g in graph(6, 4)) {
        if g.is_planar_ribbon() {
            prop_assert!(g.vertices().all(|y| torsors_agree_at(&g, y).agrees));
        } else {
            let (dec, w) = decompose::witness(&g).unwrap();
            prop_assert!(verify_witness(&g, &w).unwrap());
            let g1 = &dec.split.g1.vertex_map;
            match (&dec.kind, &dec.h) {
                (Some(Kind::A), Certificate::TypeI(h)) => {
                    prop_assert!(h.vertices(&g).iter().all(|v| *v == h.c || !g1.contains(v)));
                }
                (Some(Kind::B), Certificate::TypeII(h)) => {
                    prop_assert!(h.a_vertices(&g).iter().all(|v| !g1.contains(v)));
                    prop_assert!(h.f_vertices(&g).iter().all(|v| g1.contains(v)));
                }
                other => prop_assert!(false, "unexpected {:?}", other.0),
            }
        }
    }

    #[test]
    fn wedge_round_trip_and_splitting(
        a in graph(4, 2),
        b in graph(4, 2),
        c1 in 0usize..4,
        c2 in 0usize..4,
        order in any::<u64>(),
        raw in prop::collection::vec(-2i64..=2, 8),
    ) {
        let b = relabel(&b, "w");
        let (c1, c2) = (Vertex(c1 % a.vertex_count()), Vertex(c2 % b.vertex_count()));
        let (k1, k2) = (a.degree(c1), b.degree(c2));
        // a random interleaving of k1 firsts and k2 seconds
        let mut merge = vec![Side::Second; k1 + k2];
        let mut slots: Vec<usize> = (0..k1 + k2).collect();
        let mut seed = order;
        for _ in 0..k1 {
            let i = (seed % slots.len() as u64) as usize;
            seed /= slots.len() as u64;
            merge[slots.remove(i)] = Side::First;
        }
        let g = wedge_sum(&a, c1, &b, c2, &merge).unwrap();
        let seeds: Vec<_> = g.rotation(c1).iter().copied().filter(|d| d.0 < a.dart_count()).collect();
        let split = wedge_split(&g, c1, &seeds).unwrap();
        prop_assert_eq!(split.g1.graph.edge_count(), a.edge_count());
        prop_assert_eq!(split.g2.graph.edge_count(), b.edge_count());
        prop_assert_eq!(&split.rejoin(&g).unwrap(), &g);
        let order = split.merge_order(&g);
        let n = merge.len();
        prop_assert!((0..n.max(1)).any(|r| (0..n).all(|i| order[i] == merge[(i + r) % n])));

        let pic = PicGroup::of(&g);
        prop_assert_eq!(
            pic.order(),
            PicGroup::of(&split.g1.graph).order() * PicGroup::of(&split.g2.graph).order()
        );
        let d = divisor(&g, &raw);
        let (d1, d2) = pic_split(&split, &d);
        prop_assert_eq!(&(&d1.lift(&split.g1, g.vertex_count()) + &d2.lift(&split.g2, g.vertex_count())), &d);
        let parts_zero = PicGroup::of(&split.g1.graph).is_principal(&d1) && PicGroup::of(&split.g2.graph).is_principal(&d2);
        prop_assert_eq!(pic.is_principal(&d), parts_zero);
    }
}
