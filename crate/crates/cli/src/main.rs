use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use torsor_lab::bernardi::{self, anchor};
use torsor_lab::decompose::{self, Certificate, DecomposeError, Kind};
use torsor_lab::divisor::{Divisor, PicGroup};
use torsor_lab::enumerate::{enumerate_and_verify, EnumerationSpec, Summary};
use torsor_lab::fixtures;
use torsor_lab::io::{self, parse_divisor, parse_tree, parse_vertex};
use torsor_lab::ribbon::{spanning_trees, Dart, RibbonGraph, SpanningTree, Vertex};
use torsor_lab::rotor;
use torsor_lab::torsor::{agreement_report, torsors_agree_at, verify_witness, VertexAgreement};

#[derive(Parser)]
#[command(
    name = "torsor-lab",
    version,
    about = "Rotor-routing and Bernardi torsors on ribbon graphs"
)]
struct Cli {
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sizes, genus, simplicity and the Picard group.
    Info { graph: PathBuf },
    /// Surface genus and face count.
    Genus { graph: PathBuf },
    /// All spanning trees in lexicographic order.
    Trees { graph: PathBuf },
    /// Rotor-route a chip to the sink, or apply a divisor with --divisor.
    Rotor {
        graph: PathBuf,
        #[arg(long)]
        tree: String,
        #[arg(long)]
        sink: String,
        #[arg(long, required_unless_present = "divisor")]
        chip: Option<String>,
        /// Degree-0 divisor as `label=k,...`.
        #[arg(long, conflicts_with = "chip")]
        divisor: Option<String>,
        #[arg(long, conflicts_with = "divisor")]
        trace: bool,
    },
    /// Bernardi divisor of a tree, or the Bernardi action with --divisor.
    Bernardi {
        graph: PathBuf,
        #[arg(long)]
        tree: String,
        #[arg(long)]
        vertex: String,
        /// Basepoint dart points from the vertex toward this neighbour.
        #[arg(long)]
        toward: Option<String>,
        #[arg(long)]
        divisor: Option<String>,
        #[arg(long, conflicts_with = "divisor")]
        trace: bool,
    },
    /// Agreement of the two torsors at one vertex or all vertices.
    Check {
        graph: PathBuf,
        #[arg(long)]
        vertex: Option<String>,
        /// Basepoint dart for the reported gap divisor.
        #[arg(long, requires = "vertex")]
        toward: Option<String>,
    },
    /// Type I/II certificate and its kind-A/B decomposition.
    Decompose { graph: PathBuf },
    /// A verified disagreement witness for a simple non-planar graph.
    Witness { graph: PathBuf },
    /// Checks the agreement pattern against the theorem.
    VerifyTheorem { graph: PathBuf },
    /// Exhaustive check over small graphs and all rotation systems.
    Enumerate {
        #[arg(long, default_value_t = 5)]
        max_vertices: usize,
        #[arg(long, default_value_t = 8)]
        max_edges: usize,
        /// Allow pairs of parallel edges.
        #[arg(long)]
        multigraphs: bool,
        #[arg(long)]
        rotation_cap: Option<u64>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Writes the fixture corpus as JSON files.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

enum Failure {
    /// Exit 2.
    Input(String),
    /// Exit 1: a counterexample where none should exist.
    Violation(String),
}

type CmdResult = Result<(Value, String), Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn load(path: &Path) -> Result<RibbonGraph, Failure> {
    io::load_graph(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn set(names: &[String]) -> String {
    format!("{{{}}}", names.join(", "))
}

fn dart_toward(g: &RibbonGraph, v: Vertex, toward: Option<&str>) -> Result<Option<Dart>, Failure> {
    match toward {
        None => Ok(anchor(g, v)),
        Some(u) => {
            let u = parse_vertex(g, u).map_err(input)?;
            g.dart_between(v, u)
                .map(Some)
                .ok_or_else(|| Failure::Input(format!("no edge {}{}", g.label(v), g.label(u))))
        }
    }
}

fn dart_name(g: &RibbonGraph, d: Dart) -> String {
    format!("{}{}", g.label(g.tail(d)), g.label(g.head(d)))
}

fn info(g: &RibbonGraph) -> CmdResult {
    let pic = PicGroup::of(g);
    let factors: Vec<String> = pic
        .invariant_factors()
        .iter()
        .map(|f| f.to_string())
        .collect();
    let v = json!({
        "format": 1,
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "darts": g.dart_count(),
        "faces": g.face_count(),
        "genus": g.surface_genus(),
        "planar": g.is_planar_ribbon(),
        "simple": g.is_simple(),
        "cycle_rank": g.cycle_rank(),
        "pic_order": pic.order().to_string(),
        "pic_invariant_factors": factors,
    });
    let text = format!(
        "vertices    {}\nedges       {}\nfaces       {}\ngenus       {}\nplanar      {}\nsimple      {}\ncycle rank  {}\n|Pic⁰|      {}\nfactors     [{}]",
        g.vertex_count(),
        g.edge_count(),
        g.face_count(),
        g.surface_genus(),
        g.is_planar_ribbon(),
        g.is_simple(),
        g.cycle_rank(),
        pic.order(),
        factors.join(", "),
    );
    Ok((v, text))
}

fn agreement_json(g: &RibbonGraph, a: &VertexAgreement, e: Option<Dart>) -> Value {
    let gap = a
        .counterexample
        .as_ref()
        .map(|c| gap_divisor(g, a.vertex, c.chip, &c.tree, e));
    json!({
        "format": 1,
        "vertex": g.label(a.vertex),
        "agrees": a.agrees,
        "counterexample": a.counterexample.as_ref().map(|c| json!({
            "chip": g.label(c.chip),
            "tree": c.tree.names(g),
        })),
        "basepoint": e.map(|e| dart_name(g, e)),
        "gap": gap.map(|d| d.to_label_map(g)),
    })
}

/// `β(T') − β(T) − ((x) − (y))` with basepoint dart `e` at `y`.
fn gap_divisor(
    g: &RibbonGraph,
    y: Vertex,
    x: Vertex,
    t: &SpanningTree,
    e: Option<Dart>,
) -> Divisor {
    let t2 = rotor::rotor_route(g, t, x, y).expect("valid tree");
    let b1 = bernardi::bernardi_divisor(g, t, y, e).expect("valid basepoint");
    let b2 = bernardi::bernardi_divisor(g, &t2, y, e).expect("valid basepoint");
    &(&b2 - &b1) - &Divisor::difference(g.vertex_count(), x, y)
}

fn agreement_text(g: &RibbonGraph, a: &VertexAgreement, e: Option<Dart>) -> String {
    match &a.counterexample {
        None => format!("{}: torsors agree", g.label(a.vertex)),
        Some(c) => format!(
            "{}: torsors disagree; chip {}, tree {}, gap {} ≁ 0",
            g.label(a.vertex),
            g.label(c.chip),
            set(&c.tree.names(g)),
            gap_divisor(g, a.vertex, c.chip, &c.tree, e).display(g),
        ),
    }
}

fn decompose_error(e: DecomposeError) -> Failure {
    match e {
        DecomposeError::Planar | DecomposeError::NotSimple | DecomposeError::Graph(_) => input(e),
        other => Failure::Violation(other.to_string()),
    }
}

fn summary_text(s: &Summary) -> String {
    let mut out = format!(
        "graphs {} (skipped {}), rotation systems {}\nplanar-agree {}  nonplanar-disagree {}  multigraph-exempt {}  violations {}\nkind A {}  kind B {}  promoted {}  sink-c witnesses {}\n",
        s.graphs,
        s.skipped_graphs,
        s.ribbon_graphs,
        s.planar_agree,
        s.nonplanar_disagree,
        s.multigraph_exempt,
        s.violations(),
        s.kind_a,
        s.kind_b,
        s.promoted,
        s.sink_c_witnesses,
    );
    for (check, t) in &s.checks {
        let name = serde_json::to_value(check)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        out.push_str(&format!(
            "  {name:<26} {:>8} checked {:>4} failed\n",
            t.checked, t.failed
        ));
    }
    for f in &s.failures {
        out.push_str(&format!(
            "  FAIL graph {} rotation {}: {:?} {}\n",
            f.at.graph, f.at.rotation, f.check, f.detail
        ));
    }
    out.trim_end().to_string()
}

fn run(cmd: Cmd) -> CmdResult {
    match cmd {
        Cmd::Info { graph } => info(&load(&graph)?),
        Cmd::Genus { graph } => {
            let g = load(&graph)?;
            let v = json!({"format": 1, "genus": g.surface_genus(), "faces": g.face_count(), "planar": g.is_planar_ribbon()});
            Ok((
                v,
                format!("genus {} ({} faces)", g.surface_genus(), g.face_count()),
            ))
        }
        Cmd::Trees { graph } => {
            let g = load(&graph)?;
            let trees = spanning_trees(&g);
            let names: Vec<Vec<String>> = trees.iter().map(|t| t.names(&g)).collect();
            let text = names.iter().map(|n| set(n)).collect::<Vec<_>>().join("\n");
            Ok((
                json!({"format": 1, "count": trees.len(), "trees": names}),
                format!("{text}\n{} trees", trees.len()),
            ))
        }
        Cmd::Rotor {
            graph,
            tree,
            sink,
            chip,
            divisor,
            trace,
        } => {
            let g = load(&graph)?;
            let t = parse_tree(&g, &tree).map_err(input)?;
            let y = parse_vertex(&g, &sink).map_err(input)?;
            if let Some(d) = divisor {
                let d = parse_divisor(&g, &d).map_err(input)?;
                let t2 = rotor::rotor_action(&g, &t, &d, y).map_err(input)?;
                let v = json!({"format": 1, "tree": t2.names(&g), "tree_ids": t2.edges()});
                return Ok((v, set(&t2.names(&g))));
            }
            let x = parse_vertex(&g, chip.as_deref().unwrap_or_default()).map_err(input)?;
            let (t2, steps) = rotor::rotor_route_traced(&g, &t, x, y).map_err(input)?;
            let mut v = json!({"format": 1, "tree": t2.names(&g), "tree_ids": t2.edges()});
            let mut text = set(&t2.names(&g));
            if trace {
                v["trace"] = json!(steps
                    .iter()
                    .map(|s| json!({
                        "step": s.step,
                        "rotated": g.label(s.changed_vertex),
                        "rotor": dart_name(&g, s.new_rotor_dart),
                        "chip": g.label(s.chip),
                    }))
                    .collect::<Vec<_>>());
                let lines: Vec<String> = steps
                    .iter()
                    .map(|s| {
                        format!(
                            "{:>4}  rotor at {} → {}, chip at {}",
                            s.step,
                            g.label(s.changed_vertex),
                            dart_name(&g, s.new_rotor_dart),
                            g.label(s.chip)
                        )
                    })
                    .collect();
                text = format!("{}\n{text}", lines.join("\n"));
            }
            Ok((v, text))
        }
        Cmd::Bernardi {
            graph,
            tree,
            vertex,
            toward,
            divisor,
            trace,
        } => {
            let g = load(&graph)?;
            let t = parse_tree(&g, &tree).map_err(input)?;
            let v = parse_vertex(&g, &vertex).map_err(input)?;
            let e = dart_toward(&g, v, toward.as_deref())?;
            if let Some(d) = divisor {
                let d = parse_divisor(&g, &d).map_err(input)?;
                let t2 = bernardi::bernardi_action_at(&g, &t, &d, v, e).map_err(input)?;
                let out = json!({"format": 1, "tree": t2.names(&g), "tree_ids": t2.edges()});
                return Ok((out, set(&t2.names(&g))));
            }
            let Some(e) = e else {
                return Ok((json!({"format": 1, "divisor": {}}), "0".into()));
            };
            let rec = bernardi::bernardi_tour(&g, &t, v, e).map_err(input)?;
            let mut out = json!({
                "format": 1,
                "basepoint": {"vertex": g.label(v), "dart": dart_name(&g, e)},
                "divisor": rec.divisor.to_label_map(&g),
            });
            let mut text = rec.divisor.display(&g);
            if trace {
                let events = bernardi::bernardi_trace(&g, &t, v, e).map_err(input)?;
                out["trace"] = json!(events
                    .iter()
                    .map(|ev| json!({
                        "index": ev.index,
                        "dart": dart_name(&g, ev.dart),
                        "action": ev.action,
                        "chip_at": ev.chip_at.map(|c| g.label(c).to_string()),
                    }))
                    .collect::<Vec<_>>());
                let lines: Vec<String> = events
                    .iter()
                    .map(|ev| {
                        let chip = ev
                            .chip_at
                            .map(|c| format!("  chip at {}", g.label(c)))
                            .unwrap_or_default();
                        format!(
                            "{:>4}  {:<5} {:?}{chip}",
                            ev.index,
                            dart_name(&g, ev.dart),
                            ev.action
                        )
                    })
                    .collect();
                text = format!("{}\n{text}", lines.join("\n"));
            }
            Ok((out, text))
        }
        Cmd::Check {
            graph,
            vertex,
            toward,
        } => {
            let g = load(&graph)?;
            match vertex {
                Some(y) => {
                    let y = parse_vertex(&g, &y).map_err(input)?;
                    let e = dart_toward(&g, y, toward.as_deref())?;
                    let a = torsors_agree_at(&g, y);
                    Ok((agreement_json(&g, &a, e), agreement_text(&g, &a, e)))
                }
                None => {
                    let rep = agreement_report(&g);
                    let text = rep
                        .vertices
                        .iter()
                        .map(|a| agreement_text(&g, a, anchor(&g, a.vertex)))
                        .collect::<Vec<_>>()
                        .join("\n");
                    Ok((rep.to_json(&g), text))
                }
            }
        }
        Cmd::Decompose { graph } => {
            let g = load(&graph)?;
            let p = decompose::classify_with_steps(&g).map_err(decompose_error)?;
            let mut v = p.decomposition.to_json(&g);
            v["promotion"] = json!(p
                .steps
                .iter()
                .map(|s| json!({"case": format!("{:?}", s.case), "n_before": s.n_before, "n_after": s.n_after}))
                .collect::<Vec<_>>());
            let dec = &p.decomposition;
            let kind = match dec.kind {
                Some(Kind::A) => "A",
                Some(Kind::B) => "B",
                None => "none",
            };
            let ty = match dec.h {
                Certificate::TypeI(_) => "I",
                Certificate::TypeII(_) => "II",
            };
            let g1: Vec<&str> = dec
                .split
                .g1
                .vertex_map
                .iter()
                .map(|&x| g.label(x))
                .collect();
            let text = format!(
                "type {ty} at {}, kind {kind}, N = {}, {} promotion step(s)\nG1 vertices {}",
                g.label(dec.h.c()),
                dec.n(),
                p.steps.len(),
                g1.join(" ")
            );
            Ok((v, text))
        }
        Cmd::Witness { graph } => {
            let g = load(&graph)?;
            let (_, w) = decompose::witness(&g).map_err(decompose_error)?;
            let verified = verify_witness(&g, &w).map_err(|e| Failure::Violation(e.to_string()))?;
            if !verified {
                return Err(Failure::Violation("witness does not verify".into()));
            }
            let v = w.to_json(&g, verified);
            let text = format!(
                "sink {}, chip {}, tree {} ({}), verified",
                g.label(w.sink),
                g.label(w.chip),
                set(&w.tree.names(&g)),
                v["provenance"].as_str().unwrap_or_default()
            );
            Ok((v, text))
        }
        Cmd::VerifyTheorem { graph } => {
            let g = load(&graph)?;
            let rep = agreement_report(&g);
            let verdict = if rep.theorem_consistent {
                "consistent"
            } else {
                "VIOLATION"
            };
            let mut text = format!(
                "planar {}, simple {}, genus {}: {}",
                rep.planar, rep.simple, rep.genus, verdict
            );
            if !rep.planar && !rep.simple && rep.all_agree() {
                text.push_str(" (multigraph exemption)");
            }
            if !rep.theorem_consistent {
                return Err(Failure::Violation(text));
            }
            Ok((rep.to_json(&g), text))
        }
        Cmd::Enumerate {
            max_vertices,
            max_edges,
            multigraphs,
            rotation_cap,
            checkpoint,
        } => {
            let spec = EnumerationSpec {
                max_vertices,
                max_edges,
                simple_only: !multigraphs,
                rotation_cap: rotation_cap.unwrap_or(u64::MAX),
            };
            let s = enumerate_and_verify(&spec, checkpoint.as_deref(), |done, total| {
                eprint!("\r{done}/{total} graphs");
            })
            .map_err(input)?;
            eprintln!();
            let mut v = serde_json::to_value(&s).map_err(input)?;
            v["format"] = json!(1);
            v["violations"] = json!(s.violations());
            if s.failed_checks() > 0 {
                return Err(Failure::Violation(summary_text(&s)));
            }
            Ok((v, summary_text(&s)))
        }
        Cmd::Fixtures { out } => {
            std::fs::create_dir_all(&out).map_err(input)?;
            let mut written = Vec::new();
            for (name, g) in fixtures::corpus() {
                let path = out.join(format!("{name}.json"));
                std::fs::write(&path, io::to_json(&g)).map_err(input)?;
                written.push(path.display().to_string());
            }
            Ok((json!({"format": 1, "written": written}), written.join("\n")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli.cmd) {
        Ok((v, text)) => {
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&v).expect("serializable")
                );
            } else {
                println!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
