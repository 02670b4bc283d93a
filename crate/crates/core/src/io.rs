//! Graph file formats.
//!
//! Canonical JSON:
//!
//! ```json
//! {"format": 1, "vertices": ["a", "b"], "rotations": {"a": [0], "b": [1]}, "alpha": [[0, 1]]}
//! ```
//!
//! Rotations list darts counterclockwise; the writer starts each list at its
//! smallest dart and emits `rotations` in vertex order, so a file written by
//! [`to_json`] reads back and re-serializes byte for byte.
//!
//! Shorthand for simple graphs, one line per vertex giving the counterclockwise
//! neighbour order:
//!
//! ```text
//! c: a d f
//! a: c b
//! ```
//!
//! Darts are numbered in order of appearance.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::divisor::Divisor;
use crate::ribbon::{EdgeId, GraphError, RibbonGraph, SpanningTree, Vertex};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("line {line}: {msg}")]
    Shorthand { line: usize, msg: String },
    #[error("vertex `{0}` has no rotation")]
    MissingRotation(String),
    #[error("bad edge `{0}`")]
    BadEdge(String),
    #[error("bad divisor term `{0}`")]
    BadDivisor(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Deserialize)]
struct GraphFileIn {
    #[serde(default = "default_format")]
    format: u32,
    vertices: Vec<String>,
    rotations: HashMap<String, Vec<usize>>,
    alpha: Vec<(usize, usize)>,
}

fn default_format() -> u32 {
    FORMAT_VERSION
}

#[derive(Serialize)]
struct GraphFileOut<'a> {
    format: u32,
    vertices: &'a [String],
    rotations: OrderedRotations<'a>,
    alpha: Vec<(usize, usize)>,
}

struct OrderedRotations<'a>(&'a RibbonGraph);

impl Serialize for OrderedRotations<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let g = self.0;
        let mut map = s.serialize_map(Some(g.vertex_count()))?;
        for v in g.vertices() {
            let darts: Vec<usize> = g.rotation(v).iter().map(|d| d.0).collect();
            map.serialize_entry(g.label(v), &darts)?;
        }
        map.end()
    }
}

pub fn from_json(text: &str) -> Result<RibbonGraph, IoError> {
    let file: GraphFileIn = serde_json::from_str(text)?;
    if file.format != FORMAT_VERSION {
        return Err(IoError::Version(file.format));
    }
    let mut rotations = Vec::with_capacity(file.vertices.len());
    for v in &file.vertices {
        let rot = file
            .rotations
            .get(v)
            .ok_or_else(|| IoError::MissingRotation(v.clone()))?;
        rotations.push(rot.clone());
    }
    Ok(RibbonGraph::from_rotations(
        file.vertices,
        rotations,
        &file.alpha,
    )?)
}

/// Canonical pretty JSON, newline-terminated.
pub fn to_json(g: &RibbonGraph) -> String {
    let out = GraphFileOut {
        format: FORMAT_VERSION,
        vertices: g.labels(),
        rotations: OrderedRotations(g),
        alpha: g
            .edges()
            .map(|e| {
                let (d, r) = g.edge_darts(e);
                (d.0, r.0)
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("graph serializes");
    s.push('\n');
    s
}

/// Parses the simple-graph shorthand. Multi-edges and loops are rejected.
pub fn from_shorthand(text: &str) -> Result<RibbonGraph, IoError> {
    let mut labels: Vec<String> = Vec::new();
    let mut lists: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (v, rest) = line.split_once(':').ok_or_else(|| IoError::Shorthand {
            line: i + 1,
            msg: "expected `vertex: neighbours`".into(),
        })?;
        let v = v.trim().to_string();
        if labels.contains(&v) {
            return Err(IoError::Shorthand {
                line: i + 1,
                msg: format!("vertex `{v}` listed twice"),
            });
        }
        labels.push(v);
        lists.push((i + 1, rest.split_whitespace().map(str::to_string).collect()));
    }
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();

    let mut dart_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rotations = Vec::with_capacity(labels.len());
    let mut next = 0;
    for (v, (line, nbrs)) in lists.iter().enumerate() {
        let mut rot = Vec::with_capacity(nbrs.len());
        for u in nbrs {
            let &u = index.get(u.as_str()).ok_or_else(|| IoError::Shorthand {
                line: *line,
                msg: format!("unknown vertex `{u}`"),
            })?;
            if u == v {
                return Err(IoError::Shorthand {
                    line: *line,
                    msg: "loops are not allowed in shorthand".into(),
                });
            }
            if dart_of.insert((v, u), next).is_some() {
                return Err(IoError::Shorthand {
                    line: *line,
                    msg: format!("multi-edge `{}`–`{}` in shorthand", labels[v], labels[u]),
                });
            }
            rot.push(next);
            next += 1;
        }
        rotations.push(rot);
    }
    let mut pairs = Vec::new();
    for (&(v, u), &d) in &dart_of {
        let r = *dart_of.get(&(u, v)).ok_or_else(|| IoError::Shorthand {
            line: lists[u].0,
            msg: format!("`{}` lists `{}` but not conversely", labels[v], labels[u]),
        })?;
        if d < r {
            pairs.push((d, r));
        }
    }
    Ok(RibbonGraph::from_rotations(labels, rotations, &pairs)?)
}

/// Loads JSON (detected by a leading `{`) or shorthand.
pub fn load_graph(path: &Path) -> Result<RibbonGraph, IoError> {
    let text = std::fs::read_to_string(path)?;
    parse_graph(&text)
}

pub fn parse_graph(text: &str) -> Result<RibbonGraph, IoError> {
    if text.trim_start().starts_with('{') {
        from_json(text)
    } else {
        from_shorthand(text)
    }
}

pub fn parse_vertex(g: &RibbonGraph, label: &str) -> Result<Vertex, IoError> {
    g.vertex_by_label(label.trim())
        .ok_or_else(|| GraphError::UnknownVertex(label.trim().to_string()).into())
}

/// Parses an edge as `u-v`, `uv` (when the split is unambiguous) or `#id`.
pub fn parse_edge(g: &RibbonGraph, name: &str) -> Result<EdgeId, IoError> {
    let name = name.trim();
    if let Some(id) = name.strip_prefix('#') {
        let e = id
            .parse()
            .map(EdgeId)
            .map_err(|_| IoError::BadEdge(name.into()))?;
        return if g.is_edge(e) {
            Ok(e)
        } else {
            Err(IoError::BadEdge(name.into()))
        };
    }
    if let Some((u, v)) = name.split_once('-') {
        return Ok(g.find_edge(u, v)?);
    }
    let mut found = None;
    for (i, _) in name.char_indices().skip(1) {
        let (u, v) = name.split_at(i);
        if g.vertex_by_label(u).is_some() && g.vertex_by_label(v).is_some() {
            if found.is_some() {
                return Err(IoError::BadEdge(name.into()));
            }
            found = Some(g.find_edge(u, v)?);
        }
    }
    found.ok_or_else(|| IoError::BadEdge(name.into()))
}

/// Comma-separated edge names.
pub fn parse_tree(g: &RibbonGraph, list: &str) -> Result<SpanningTree, IoError> {
    let edges = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_edge(g, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpanningTree::new(g, edges)?)
}

/// Comma-separated `label=coefficient` terms, e.g. `c=1,d=-1`.
pub fn parse_divisor(g: &RibbonGraph, text: &str) -> Result<Divisor, IoError> {
    let mut d = Divisor::zero(g.vertex_count());
    for term in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (v, k) = term
            .split_once('=')
            .ok_or_else(|| IoError::BadDivisor(term.into()))?;
        let k: i64 = k
            .trim()
            .parse()
            .map_err(|_| IoError::BadDivisor(term.into()))?;
        d.add_at(parse_vertex(g, v)?, k);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn json_round_trip_is_byte_exact() {
        for (_, g) in fixtures::corpus() {
            let text = to_json(&g);
            let back = from_json(&text).unwrap();
            assert_eq!(back, g);
            assert_eq!(to_json(&back), text);
        }
    }

    #[test]
    fn shorthand_rejects_multi_edges() {
        let err = from_shorthand("a: b b\nb: a a\n").unwrap_err();
        assert!(matches!(err, IoError::Shorthand { .. }));
    }

    #[test]
    fn shorthand_rejects_one_sided_adjacency() {
        let err = from_shorthand("a: b\nb:\n").unwrap_err();
        assert!(matches!(err, IoError::Shorthand { .. }));
    }

    #[test]
    fn json_rejects_broken_alpha() {
        let text =
            r#"{"format":1,"vertices":["a","b"],"rotations":{"a":[0],"b":[1]},"alpha":[[0,0]]}"#;
        assert!(matches!(
            from_json(text),
            Err(IoError::Graph(GraphError::NotInvolution(0)))
        ));
    }

    #[test]
    fn parses_edges_trees_and_divisors() {
        let g = fixtures::g_fig1();
        assert_eq!(parse_edge(&g, "ca").unwrap(), EdgeId(0));
        assert_eq!(parse_edge(&g, "a-c").unwrap(), EdgeId(0));
        assert_eq!(parse_edge(&g, "#4").unwrap(), EdgeId(4));
        assert!(matches!(parse_edge(&g, "cz"), Err(IoError::BadEdge(_))));
        assert!(parse_edge(&g, "ad").is_err());
        let t = parse_tree(&g, "ca,cf,ab,bd").unwrap();
        assert_eq!(t.edges(), &[EdgeId(0), EdgeId(1), EdgeId(2), EdgeId(3)]);
        assert!(parse_tree(&g, "ca,cf,ab").is_err());
        let d = parse_divisor(&g, "c=1, d=-1").unwrap();
        assert_eq!(d.display(&g), "(c) - (d)");
        assert!(parse_divisor(&g, "c1").is_err());
    }
}
