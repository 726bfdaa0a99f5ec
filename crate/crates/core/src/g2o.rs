//! Reader and writer for the planar subset of the g2o text format
//! (`VERTEX_SE2` and `EDGE_SE2`).

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::graph::{spanning_tree_solution, PoseAssignment, PoseGraph, RelativeMeasurement};
use crate::pose::Pose2D;

/// The identity in `i11 i12 i13 i22 i23 i33` order.
pub const IDENTITY_INFO: [f64; 6] = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct G2oVertex {
    pub id: i64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct G2oEdge {
    pub from: i64,
    pub to: i64,
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
    pub info: [f64; 6],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct G2oDocument {
    pub vertices: Vec<G2oVertex>,
    pub edges: Vec<G2oEdge>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Unknown tags and non-identity information matrices become errors
    /// instead of warnings.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Warning {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn numbers<const N: usize>(line: usize, fields: &[&str]) -> Result<[f64; N]> {
    if fields.len() != N {
        return Err(Error::Syntax {
            line,
            message: format!("expected {N} numeric fields, found {}", fields.len()),
        });
    }
    let mut out = [0.0_f64; N];
    for (slot, field) in out.iter_mut().zip(fields) {
        *slot = field.parse().map_err(|_| Error::Syntax {
            line,
            message: format!("`{field}` is not a number"),
        })?;
        if !slot.is_finite() {
            return Err(Error::Syntax {
                line,
                message: format!("`{field}` is not finite"),
            });
        }
    }
    Ok(out)
}

fn id(line: usize, field: &str) -> Result<i64> {
    field.parse().map_err(|_| Error::Syntax {
        line,
        message: format!("`{field}` is not an integer id"),
    })
}

/// Parses the text into a document, collecting warnings for skipped content.
pub fn parse_document(text: &str, opts: ParseOptions) -> Result<(G2oDocument, Vec<Warning>)> {
    let mut doc = G2oDocument::default();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match fields[0] {
            "VERTEX_SE2" => {
                if fields.len() != 5 {
                    return Err(Error::Syntax {
                        line,
                        message: format!("VERTEX_SE2 needs 4 fields, found {}", fields.len() - 1),
                    });
                }
                let vid = id(line, fields[1])?;
                let [x, y, theta] = numbers::<3>(line, &fields[2..])?;
                if !seen.insert(vid) {
                    return Err(Error::DuplicateVertex { line, id: vid });
                }
                doc.vertices.push(G2oVertex { id: vid, x, y, theta });
            }
            "EDGE_SE2" => {
                if fields.len() != 12 {
                    return Err(Error::Syntax {
                        line,
                        message: format!("EDGE_SE2 needs 11 fields, found {}", fields.len() - 1),
                    });
                }
                let from = id(line, fields[1])?;
                let to = id(line, fields[2])?;
                let [dx, dy, dtheta] = numbers::<3>(line, &fields[3..6])?;
                let info = numbers::<6>(line, &fields[6..])?;
                if info != IDENTITY_INFO {
                    if opts.strict {
                        return Err(Error::NonIdentityInformation { line });
                    }
                    warnings.push(Warning {
                        line,
                        message: "non-identity information matrix ignored (cost is unweighted)".into(),
                    });
                }
                doc.edges.push(G2oEdge {
                    from,
                    to,
                    dx,
                    dy,
                    dtheta,
                    info,
                });
            }
            tag => {
                if opts.strict {
                    return Err(Error::UnknownTag {
                        line,
                        tag: tag.to_string(),
                    });
                }
                warnings.push(Warning {
                    line,
                    message: format!("skipping unknown tag `{tag}`"),
                });
            }
        }
    }
    Ok((doc, warnings))
}

/// A parsed pose graph. File ids are mapped to dense indices in increasing
/// id order; `ids[i]` is the file id of node `i`.
#[derive(Debug, Clone)]
pub struct G2oGraph {
    pub graph: PoseGraph,
    /// Present when every node has a vertex line.
    pub initial: Option<PoseAssignment>,
    pub ids: Vec<i64>,
    pub warnings: Vec<Warning>,
}

impl G2oDocument {
    pub fn to_graph(&self) -> Result<(PoseGraph, Option<PoseAssignment>, Vec<i64>)> {
        let ids: Vec<i64> = self
            .vertices
            .iter()
            .map(|v| v.id)
            .chain(self.edges.iter().flat_map(|e| [e.from, e.to]))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<i64, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| RelativeMeasurement::new(index[&e.from], index[&e.to], e.dx, e.dy, e.dtheta))
            .collect();
        let graph = PoseGraph::new(ids.len(), edges)?;
        let initial = (self.vertices.len() == ids.len()).then(|| {
            let mut poses = vec![Pose2D::identity(); ids.len()];
            for v in &self.vertices {
                poses[index[&v.id]] = Pose2D::new(v.x, v.y, v.theta);
            }
            PoseAssignment(poses)
        });
        Ok((graph, initial, ids))
    }

    pub fn from_graph(graph: &PoseGraph, poses: Option<&PoseAssignment>, id_base: i64) -> Result<Self> {
        let owned;
        let poses = match poses {
            Some(p) => {
                if p.len() != graph.node_count() {
                    return Err(Error::LengthMismatch {
                        expected: graph.node_count(),
                        got: p.len(),
                    });
                }
                p
            }
            None => {
                owned = spanning_tree_solution(graph);
                &owned
            }
        };
        let label = |i: usize| id_base + i as i64;
        Ok(Self {
            vertices: poses
                .poses()
                .iter()
                .enumerate()
                .map(|(i, p)| G2oVertex {
                    id: label(i),
                    x: p.x(),
                    y: p.y(),
                    theta: p.angle(),
                })
                .collect(),
            edges: graph
                .edges()
                .iter()
                .map(|e| G2oEdge {
                    from: label(e.tail),
                    to: label(e.head),
                    dx: e.delta.x,
                    dy: e.delta.y,
                    dtheta: e.angle(),
                    info: IDENTITY_INFO,
                })
                .collect(),
        })
    }

    /// Vertices, then edges, numbers with 9 significant digits.
    pub fn write(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            out.push_str(&format!("VERTEX_SE2 {} {} {} {}\n", v.id, fmt_g(v.x), fmt_g(v.y), fmt_g(v.theta)));
        }
        for e in &self.edges {
            let info: Vec<String> = e.info.iter().map(|v| fmt_g(*v)).collect();
            out.push_str(&format!(
                "EDGE_SE2 {} {} {} {} {} {}\n",
                e.from,
                e.to,
                fmt_g(e.dx),
                fmt_g(e.dy),
                fmt_g(e.dtheta),
                info.join(" ")
            ));
        }
        out
    }
}

pub fn parse_g2o(text: &str, opts: ParseOptions) -> Result<G2oGraph> {
    let (doc, warnings) = parse_document(text, opts)?;
    let (graph, initial, ids) = doc.to_graph()?;
    Ok(G2oGraph {
        graph,
        initial,
        ids,
        warnings,
    })
}

/// Writes the graph with ids `id_base + i`. Without poses, the vertices come
/// from the spanning-tree solution.
pub fn write_g2o(graph: &PoseGraph, poses: Option<&PoseAssignment>, id_base: i64) -> Result<String> {
    Ok(G2oDocument::from_graph(graph, poses, id_base)?.write())
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros dropped,
/// scientific notation outside `[1e-4, 1e9)`.
pub fn fmt_g(v: f64) -> String {
    const P: i32 = 9;
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
