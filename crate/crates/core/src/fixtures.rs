//! Named graphs used by the tests, the CLI, and the shipped `fixtures/` files.

use crate::io::from_shorthand;
use crate::ribbon::{wedge_sum, RibbonGraph, Side, Vertex};

fn shorthand(text: &str) -> RibbonGraph {
    from_shorthand(text).expect("fixture shorthand is valid")
}

/// Five vertices, six edges; rotations `c:(ca,cd,cf)` and `b:(bf,ba,bd)`.
/// Planar as an abstract graph, non-planar as a ribbon graph.
///
/// Edge ids: `ca = 0, cf = 1, ab = 2, bd = 3, cd = 4, bf = 5`.
pub fn g_fig1() -> RibbonGraph {
    RibbonGraph::from_rotations(
        ["c", "a", "b", "d", "f"].map(String::from).to_vec(),
        vec![
            vec![0, 4, 1],
            vec![6, 2],
            vec![5, 8, 3],
            vec![10, 9],
            vec![7, 11],
        ],
        &[(0, 6), (1, 7), (2, 8), (3, 9), (4, 10), (5, 11)],
    )
    .expect("fixture is valid")
}

/// Two triangles `c a1 a2` and `c f1 f2` wedged at `c` with rotation
/// `(ca1, cf2, ca2, cf1)`.
pub fn g_ex2() -> RibbonGraph {
    shorthand(
        "c: a1 f2 a2 f1
         a1: c a2
         a2: a1 c
         f1: c f2
         f2: f1 c",
    )
}

/// Doubled edges `c–a1` and `c–f1` interleaved at `c`: non-planar, but a
/// multigraph on which both torsors agree everywhere.
pub fn g_rem() -> RibbonGraph {
    RibbonGraph::from_rotations(
        vec!["c".into(), "a1".into(), "f1".into()],
        // c: (c→a1, c→f1, c→a1', c→f1')
        vec![vec![0, 1, 2, 3], vec![4, 5], vec![6, 7]],
        &[(0, 4), (2, 5), (1, 7), (3, 6)],
    )
    .expect("fixture is valid")
}

pub fn triangle() -> RibbonGraph {
    shorthand(
        "x: y z
         y: z x
         z: x y",
    )
}

/// Path `p0 – p1 – … – p(n−1)`.
pub fn path(n: usize) -> RibbonGraph {
    assert!(n >= 1);
    if n == 1 {
        return RibbonGraph::single_vertex("p0");
    }
    let mut text = String::new();
    for i in 0..n {
        let mut nbrs = Vec::new();
        if i > 0 {
            nbrs.push(format!("p{}", i - 1));
        }
        if i + 1 < n {
            nbrs.push(format!("p{}", i + 1));
        }
        text.push_str(&format!("p{i}: {}\n", nbrs.join(" ")));
    }
    shorthand(&text)
}

/// Complete graph `K4` with a genus-one rotation system.
pub fn k4_torus() -> RibbonGraph {
    shorthand(
        "0: 1 2 3
         1: 0 2 3
         2: 0 1 3
         3: 0 1 2",
    )
}

/// `G_fig1` with a triangle `c t1 t2` glued at `c` between `ca` and `cd`.
/// Type A with a nontrivial `G1` (the triangle).
pub fn type_a_wedge() -> RibbonGraph {
    let g = g_fig1();
    let t = shorthand(
        "c: t1 t2
         t1: t2 c
         t2: c t1",
    );
    let c = g.vertex_by_label("c").expect("c");
    // g's rotation at c from its smallest dart is (ca, cd, cf)
    wedge_sum(
        &g,
        c,
        &t,
        Vertex(0),
        &[
            Side::First,
            Side::Second,
            Side::Second,
            Side::First,
            Side::First,
        ],
    )
    .expect("wedge is valid")
}

/// `G_fig1` plus a vertex `p` joined to `c` (between `ca` and `cd`) and to
/// `target`. At `target` the new edge is inserted right after the neighbour
/// `after` in the rotation.
pub fn fig1_with_detour(target: &str, after: &str) -> RibbonGraph {
    let base = [
        ("c", vec!["a", "p", "d", "f"]),
        ("a", vec!["c", "b"]),
        ("b", vec!["f", "a", "d"]),
        ("d", vec!["c", "b"]),
        ("f", vec!["c", "b"]),
    ];
    let mut text = String::new();
    for (v, nbrs) in base {
        let mut nbrs: Vec<&str> = nbrs;
        if v == target {
            let pos = nbrs
                .iter()
                .position(|&u| u == after)
                .expect("neighbour present");
            nbrs.insert(pos + 1, "p");
        }
        text.push_str(&format!("{v}: {}\n", nbrs.join(" ")));
    }
    text.push_str(&format!("p: c {target}\n"));
    shorthand(&text)
}

/// `G_ex2` plus `p` adjacent to `c` (after `cf2`) and to `a1`.
pub fn ex2_with_detour() -> RibbonGraph {
    shorthand(
        "c: a1 f2 p a2 f1
         a1: c p a2
         a2: a1 c
         f1: c f2
         f2: f1 c
         p: c a1",
    )
}

/// `G_ex2` plus `p` adjacent to `f1` and `a1`: the only way from the x-arc to
/// the a-cycle passes through the f-cycle.
pub fn ex2_through_f() -> RibbonGraph {
    shorthand(
        "c: a1 f2 a2 f1
         a1: c p a2
         a2: a1 c
         f1: c p f2
         f2: f1 c
         p: f1 a1",
    )
}

/// Every named fixture, in a fixed order.
pub fn corpus() -> Vec<(&'static str, RibbonGraph)> {
    vec![
        ("g_fig1", g_fig1()),
        ("g_ex2", g_ex2()),
        ("g_rem", g_rem()),
        ("triangle", triangle()),
        ("path3", path(3)),
        ("path4", path(4)),
        ("k4_torus", k4_torus()),
        ("type_a_wedge", type_a_wedge()),
        ("case2_type_b", case2_type_b()),
    ]
}

/// `G_ex2` with a triangle `f1 p q` interleaved with the `f` cycle at `f1`.
/// Kind B, and `G1` breaks the agreement criterion at `c`, so the sink-`c`
/// witness exists alongside the `a_n` one.
pub fn case2_type_b() -> RibbonGraph {
    shorthand(
        "c: a1 f2 a2 f1
         a1: c a2
         a2: a1 c
         f1: c p f2 q
         f2: f1 c
         p: f1 q
         q: p f1",
    )
}
