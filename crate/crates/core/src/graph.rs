//! Finite metric graphs with Neumann–Kirchhoff vertices.
//!
//! Bounded edges come in three flavours: a pendant edge `[0, ℓ]` with a free
//! Neumann end at `0` and its vertex at `ℓ`, a looping edge `[-ℓ, ℓ]` whose
//! two ends meet one vertex, and an internal edge `[-ℓ, ℓ]` running from `v-`
//! to `v+`. Half-lines `[0, ∞)` hang off a single vertex.
//!
//! Looping and internal edges are described by their *half*-length, pendants
//! by their full length, matching the parametrisations above.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeIndex = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Pendant,
    Looping,
    Internal,
    HalfLine,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EdgeKind::Pendant => "pendant",
            EdgeKind::Looping => "loop",
            EdgeKind::Internal => "internal",
            EdgeKind::HalfLine => "halfline",
        };
        f.write_str(s)
    }
}

/// Geometry and incidence of one edge.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeShape {
    Pendant {
        vertex: VertexId,
        length: f64,
    },
    Looping {
        vertex: VertexId,
        half_length: f64,
    },
    Internal {
        minus: VertexId,
        plus: VertexId,
        half_length: f64,
    },
    HalfLine {
        vertex: VertexId,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub shape: EdgeShape,
}

impl Edge {
    pub fn kind(&self) -> EdgeKind {
        match self.shape {
            EdgeShape::Pendant { .. } => EdgeKind::Pendant,
            EdgeShape::Looping { .. } => EdgeKind::Looping,
            EdgeShape::Internal { .. } => EdgeKind::Internal,
            EdgeShape::HalfLine { .. } => EdgeKind::HalfLine,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.shape, EdgeShape::HalfLine { .. })
    }

    /// Pendant length or loop/internal half-length; `∞` for a half-line.
    pub fn size(&self) -> f64 {
        match self.shape {
            EdgeShape::Pendant { length, .. } => length,
            EdgeShape::Looping { half_length, .. } | EdgeShape::Internal { half_length, .. } => {
                half_length
            }
            EdgeShape::HalfLine { .. } => f64::INFINITY,
        }
    }

    /// Total metric length of the edge.
    pub fn full_length(&self) -> f64 {
        match self.shape {
            EdgeShape::Pendant { length, .. } => length,
            EdgeShape::Looping { half_length, .. } | EdgeShape::Internal { half_length, .. } => {
                2.0 * half_length
            }
            EdgeShape::HalfLine { .. } => f64::INFINITY,
        }
    }

    /// Vertices hit by the edge's ends, with multiplicity (a loop lists its
    /// vertex twice; the free end of a pendant is not a graph vertex).
    pub fn ends(&self) -> Vec<VertexId> {
        match self.shape {
            EdgeShape::Pendant { vertex, .. } | EdgeShape::HalfLine { vertex } => vec![vertex],
            EdgeShape::Looping { vertex, .. } => vec![vertex, vertex],
            EdgeShape::Internal { minus, plus, .. } => vec![minus, plus],
        }
    }

    fn scaled(&self, factor: f64) -> Edge {
        let shape = match self.shape {
            EdgeShape::Pendant { vertex, length } => EdgeShape::Pendant {
                vertex,
                length: length * factor,
            },
            EdgeShape::Looping {
                vertex,
                half_length,
            } => EdgeShape::Looping {
                vertex,
                half_length: half_length * factor,
            },
            EdgeShape::Internal {
                minus,
                plus,
                half_length,
            } => EdgeShape::Internal {
                minus,
                plus,
                half_length: half_length * factor,
            },
            EdgeShape::HalfLine { vertex } => EdgeShape::HalfLine { vertex },
        };
        Edge {
            id: self.id.clone(),
            shape,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
}

impl MetricGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: impl Into<String>) -> VertexId {
        self.vertices.push(id.into());
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, id: impl Into<String>, shape: EdgeShape) -> EdgeIndex {
        self.edges.push(Edge {
            id: id.into(),
            shape,
        });
        self.edges.len() - 1
    }

    pub fn vertex_index(&self, id: &str) -> Option<VertexId> {
        self.vertices.iter().position(|v| v == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<EdgeIndex> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Number of edge-ends at `v`; loops count twice.
    pub fn degree(&self, v: VertexId) -> usize {
        self.edges
            .iter()
            .map(|e| e.ends().iter().filter(|&&w| w == v).count())
            .sum()
    }

    /// Edges with at least one end at `v` (each listed once).
    pub fn incident_edges(&self, v: VertexId) -> Vec<EdgeIndex> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.ends().contains(&v))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn has_half_lines(&self) -> bool {
        self.edges.iter().any(|e| !e.is_bounded())
    }

    /// Multiply every bounded length by `factor`; half-lines are untouched.
    pub fn scale(&self, factor: f64) -> Result<MetricGraph> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scaling factor must be positive and finite, got {factor}"
            )));
        }
        Ok(MetricGraph {
            vertices: self.vertices.clone(),
            edges: self.edges.iter().map(|e| e.scaled(factor)).collect(),
        })
    }

    pub fn validate(&self) -> ValidationReport {
        validate_graph(self, ValidationOptions::default())
    }
}

/// Scale every bounded edge of `g` by `eps`.
pub fn scale_graph(g: &MetricGraph, eps: f64) -> Result<MetricGraph> {
    g.scale(eps)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationOptions {
    /// Admit degree-2 vertices. Only the single-interval preset needs this.
    pub allow_fake_vertices: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateVertex(String),
    DuplicateEdge(String),
    UnknownVertex { edge: String, vertex: VertexId },
    InternalSameVertex { edge: String, vertex: String },
    BadLength { edge: String, value: f64 },
    LowDegree { vertex: String, degree: usize },
    Disconnected,
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateVertex(v) => write!(f, "vertex `{v}` declared twice"),
            Violation::DuplicateEdge(e) => write!(f, "edge `{e}` declared twice"),
            Violation::UnknownVertex { edge, vertex } => {
                write!(f, "edge `{edge}` references unknown vertex #{vertex}")
            }
            Violation::InternalSameVertex { edge, vertex } => write!(
                f,
                "internal edge `{edge}` has both ends at `{vertex}` (declare it as a loop)"
            ),
            Violation::BadLength { edge, value } => {
                write!(
                    f,
                    "edge `{edge}` has non-positive or non-finite length {value}"
                )
            }
            Violation::LowDegree { vertex, degree } => write!(
                f,
                "vertex `{vertex}` has degree {degree}; non-terminal vertices need degree >= 3"
            ),
            Violation::Disconnected => write!(f, "graph is not connected"),
            Violation::Empty => write!(f, "graph has no edges"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(
                self.violations
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }
}

pub fn validate_graph(g: &MetricGraph, opts: ValidationOptions) -> ValidationReport {
    let mut violations = Vec::new();
    let nv = g.vertices.len();

    let mut seen = BTreeSet::new();
    for v in &g.vertices {
        if !seen.insert(v.as_str()) {
            violations.push(Violation::DuplicateVertex(v.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    for e in &g.edges {
        if !seen.insert(e.id.as_str()) {
            violations.push(Violation::DuplicateEdge(e.id.clone()));
        }
    }
    if g.edges.is_empty() {
        violations.push(Violation::Empty);
    }

    let mut refs_ok = true;
    for e in &g.edges {
        for v in e.ends() {
            if v >= nv {
                refs_ok = false;
                violations.push(Violation::UnknownVertex {
                    edge: e.id.clone(),
                    vertex: v,
                });
            }
        }
        if let EdgeShape::Internal { minus, plus, .. } = e.shape {
            if minus == plus && minus < nv {
                violations.push(Violation::InternalSameVertex {
                    edge: e.id.clone(),
                    vertex: g.vertices[minus].clone(),
                });
            }
        }
        if e.is_bounded() {
            let s = e.size();
            if !(s > 0.0) || !s.is_finite() {
                violations.push(Violation::BadLength {
                    edge: e.id.clone(),
                    value: s,
                });
            }
        }
    }
    if !refs_ok {
        return ValidationReport { violations };
    }

    for (v, name) in g.vertices.iter().enumerate() {
        let d = g.degree(v);
        let ok = d >= 3 || (opts.allow_fake_vertices && d == 2);
        if !ok {
            violations.push(Violation::LowDegree {
                vertex: name.clone(),
                degree: d,
            });
        }
    }

    if nv > 1 && !is_connected(g) {
        violations.push(Violation::Disconnected);
    }
    ValidationReport { violations }
}

fn is_connected(g: &MetricGraph) -> bool {
    let nv = g.vertices.len();
    let mut adj = vec![Vec::new(); nv];
    for e in &g.edges {
        if let EdgeShape::Internal { minus, plus, .. } = e.shape {
            adj[minus].push(plus);
            adj[plus].push(minus);
        }
    }
    let mut seen = vec![false; nv];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Per-boundary-vertex bookkeeping for a chosen pulse set.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryVertex {
    pub vertex: VertexId,
    pub pendants: Vec<EdgeIndex>,
    pub loops: Vec<EdgeIndex>,
    /// Selected internal edges whose `-` end sits here.
    pub internal_minus: Vec<EdgeIndex>,
    /// Selected internal edges whose `+` end sits here.
    pub internal_plus: Vec<EdgeIndex>,
    /// Edge-ends of the remainder at this vertex (loops twice, half-lines once).
    pub remainder_degree: usize,
    /// Shortest pendant length / loop or internal half-length among the
    /// selected edges touching this vertex.
    pub l_min: f64,
}

impl BoundaryVertex {
    pub fn k(&self) -> usize {
        self.pendants.len()
    }
    pub fn l(&self) -> usize {
        self.loops.len()
    }
    pub fn m(&self) -> usize {
        self.internal_minus.len() + self.internal_plus.len()
    }
    /// Edge-ends of the pulse set at this vertex.
    pub fn selected_ends(&self) -> usize {
        self.k() + 2 * self.l() + self.m()
    }
    /// Total degree `D + K + 2L + M`.
    pub fn total_degree(&self) -> usize {
        self.remainder_degree + self.selected_ends()
    }
    pub fn internal_edges(&self) -> impl Iterator<Item = EdgeIndex> + '_ {
        self.internal_minus
            .iter()
            .chain(&self.internal_plus)
            .copied()
    }
}

/// A pulse set `E_N` and everything derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSelection {
    /// Selected edge indices, sorted.
    pub selected: Vec<EdgeIndex>,
    /// Vertices touched by selected edges, sorted by vertex index.
    pub boundary: Vec<BoundaryVertex>,
    /// Shortest full length of a bounded remainder edge (`∞` if none).
    pub l_min: f64,
    /// `min_j ℓ_{j,min}`.
    pub l_n: f64,
}

impl EdgeSelection {
    pub fn contains(&self, e: EdgeIndex) -> bool {
        self.selected.binary_search(&e).is_ok()
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn boundary_of(&self, v: VertexId) -> Option<&BoundaryVertex> {
        self.boundary.iter().find(|b| b.vertex == v)
    }

    pub fn boundary_position(&self, v: VertexId) -> Option<usize> {
        self.boundary.iter().position(|b| b.vertex == v)
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.boundary_of(v).is_some()
    }

    pub fn has_internal(&self, g: &MetricGraph) -> bool {
        self.selected
            .iter()
            .any(|&e| g.edges[e].kind() == EdgeKind::Internal)
    }
}

/// Build the selection for the edges named in `ids`.
pub fn build_selection<S: AsRef<str>>(g: &MetricGraph, ids: &[S]) -> Result<EdgeSelection> {
    if ids.is_empty() {
        return Err(Error::InvalidSelection("empty selection".into()));
    }
    let mut selected = BTreeSet::new();
    for id in ids {
        let id = id.as_ref();
        let e = g
            .edge_index(id)
            .ok_or_else(|| Error::InvalidSelection(format!("unknown edge `{id}`")))?;
        if !g.edges[e].is_bounded() {
            return Err(Error::InvalidSelection(format!(
                "half-line `{id}` cannot carry a pulse"
            )));
        }
        selected.insert(e);
    }
    Ok(selection_from_indices(g, selected.into_iter().collect()))
}

pub(crate) fn selection_from_indices(g: &MetricGraph, selected: Vec<EdgeIndex>) -> EdgeSelection {
    let is_sel = |e: EdgeIndex| selected.binary_search(&e).is_ok();
    let mut by_vertex: HashMap<VertexId, BoundaryVertex> = HashMap::new();
    let blank = |v| BoundaryVertex {
        vertex: v,
        pendants: vec![],
        loops: vec![],
        internal_minus: vec![],
        internal_plus: vec![],
        remainder_degree: 0,
        l_min: f64::INFINITY,
    };
    for &e in &selected {
        let edge = &g.edges[e];
        match edge.shape {
            EdgeShape::Pendant { vertex, .. } => by_vertex
                .entry(vertex)
                .or_insert_with(|| blank(vertex))
                .pendants
                .push(e),
            EdgeShape::Looping { vertex, .. } => by_vertex
                .entry(vertex)
                .or_insert_with(|| blank(vertex))
                .loops
                .push(e),
            EdgeShape::Internal { minus, plus, .. } => {
                by_vertex
                    .entry(minus)
                    .or_insert_with(|| blank(minus))
                    .internal_minus
                    .push(e);
                by_vertex
                    .entry(plus)
                    .or_insert_with(|| blank(plus))
                    .internal_plus
                    .push(e);
            }
            EdgeShape::HalfLine { .. } => unreachable!("half-lines are rejected earlier"),
        }
    }
    let mut boundary: Vec<BoundaryVertex> = by_vertex.into_values().collect();
    boundary.sort_by_key(|b| b.vertex);
    for b in &mut boundary {
        b.remainder_degree = g
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| !is_sel(*i))
            .map(|(_, e)| e.ends().iter().filter(|&&w| w == b.vertex).count())
            .sum();
        b.l_min = b
            .pendants
            .iter()
            .chain(&b.loops)
            .chain(&b.internal_minus)
            .chain(&b.internal_plus)
            .map(|&e| g.edges[e].size())
            .fold(f64::INFINITY, f64::min);
    }
    let l_min = g
        .edges
        .iter()
        .enumerate()
        .filter(|(i, e)| !is_sel(*i) && e.is_bounded())
        .map(|(_, e)| e.full_length())
        .fold(f64::INFINITY, f64::min);
    let l_n = boundary
        .iter()
        .map(|b| b.l_min)
        .fold(f64::INFINITY, f64::min);
    EdgeSelection {
        selected,
        boundary,
        l_min,
        l_n,
    }
}

/// Slack in the two length constraints, per boundary vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthSlackReport {
    /// `ℓ_min + min_i ℓ_{i,min} - ℓ_{j,min}` (may be `+∞`).
    pub slack_tail: Vec<f64>,
    /// `3 min_i ℓ_{i,min} - ℓ_{j,min}`.
    pub slack_cubic: Vec<f64>,
}

impl LengthSlackReport {
    pub fn passes(&self) -> bool {
        self.slack_tail
            .iter()
            .chain(&self.slack_cubic)
            .all(|&s| s > 0.0)
    }
    pub fn tail_constraint_holds(&self) -> bool {
        self.slack_tail.iter().all(|&s| s > 0.0)
    }
    pub fn cubic_constraint_holds(&self) -> bool {
        self.slack_cubic.iter().all(|&s| s > 0.0)
    }
}

pub fn check_length_slack(sel: &EdgeSelection) -> LengthSlackReport {
    let min_l = sel.l_n;
    LengthSlackReport {
        slack_tail: sel
            .boundary
            .iter()
            .map(|b| sel.l_min + min_l - b.l_min)
            .collect(),
        slack_cubic: sel.boundary.iter().map(|b| 3.0 * min_l - b.l_min).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InternalEdgeFailure {
    SharedVertex { edge: String, other: String },
    NotStrictlyShortest { edge: String, rival: String },
}

impl fmt::Display for InternalEdgeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InternalEdgeFailure::SharedVertex { edge, other } => write!(
                f,
                "internal edge `{edge}` shares a boundary vertex with internal edge `{other}`"
            ),
            InternalEdgeFailure::NotStrictlyShortest { edge, rival } => write!(
                f,
                "internal edge `{edge}` is not strictly shorter than adjacent selected edge `{rival}`"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InternalEdgeReport {
    pub failures: Vec<InternalEdgeFailure>,
}

impl InternalEdgeReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn check_internal_edges(g: &MetricGraph, sel: &EdgeSelection) -> InternalEdgeReport {
    let mut failures = Vec::new();
    for &e in &sel.selected {
        let EdgeShape::Internal {
            minus,
            plus,
            half_length,
        } = g.edges[e].shape
        else {
            continue;
        };
        for v in [minus, plus] {
            let Some(b) = sel.boundary_of(v) else {
                continue;
            };
            for other in b.internal_edges().filter(|&o| o != e) {
                let f = InternalEdgeFailure::SharedVertex {
                    edge: g.edges[e].id.clone(),
                    other: g.edges[other].id.clone(),
                };
                if !failures.contains(&f) {
                    failures.push(f);
                }
            }
            for &rival in b.pendants.iter().chain(&b.loops) {
                if half_length >= g.edges[rival].size() {
                    let f = InternalEdgeFailure::NotStrictlyShortest {
                        edge: g.edges[e].id.clone(),
                        rival: g.edges[rival].id.clone(),
                    };
                    if !failures.contains(&f) {
                        failures.push(f);
                    }
                }
            }
        }
    }
    InternalEdgeReport { failures }
}

/// A parsed graph file: the graph plus an optional `select` line.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFile {
    pub graph: MetricGraph,
    pub selection: Option<Vec<String>>,
}

impl FromStr for GraphFile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_graph(s)
    }
}

pub fn parse_graph(text: &str) -> Result<GraphFile> {
    let mut g = MetricGraph::new();
    let mut selection: Option<Vec<String>> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line, msg };
        let toks: Vec<&str> = content.split_whitespace().collect();
        let vertex = |name: &str| {
            g.vertex_index(name)
                .ok_or_else(|| err(format!("unknown vertex `{name}`")))
        };
        let keyed = |tok: &str, key: &str| -> Result<f64> {
            let value = tok
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| err(format!("expected `{key}=<value>`, found `{tok}`")))?;
            value
                .parse::<f64>()
                .map_err(|_| err(format!("bad number `{value}`")))
        };
        match toks[0] {
            "vertex" => {
                if toks.len() != 2 {
                    return Err(err("usage: vertex <id>".into()));
                }
                if g.vertex_index(toks[1]).is_some() {
                    return Err(err(format!("vertex `{}` declared twice", toks[1])));
                }
                g.add_vertex(toks[1]);
            }
            "pendant" => {
                if toks.len() != 4 {
                    return Err(err("usage: pendant <id> <vertex> length=<l>".into()));
                }
                let shape = EdgeShape::Pendant {
                    vertex: vertex(toks[2])?,
                    length: keyed(toks[3], "length")?,
                };
                g.add_edge(toks[1], shape);
            }
            "loop" => {
                if toks.len() != 4 {
                    return Err(err("usage: loop <id> <vertex> halflength=<l>".into()));
                }
                let shape = EdgeShape::Looping {
                    vertex: vertex(toks[2])?,
                    half_length: keyed(toks[3], "halflength")?,
                };
                g.add_edge(toks[1], shape);
            }
            "internal" => {
                if toks.len() != 5 {
                    return Err(err("usage: internal <id> <v-> <v+> halflength=<l>".into()));
                }
                let shape = EdgeShape::Internal {
                    minus: vertex(toks[2])?,
                    plus: vertex(toks[3])?,
                    half_length: keyed(toks[4], "halflength")?,
                };
                g.add_edge(toks[1], shape);
            }
            "halfline" => {
                if toks.len() != 3 {
                    return Err(err("usage: halfline <id> <vertex>".into()));
                }
                let shape = EdgeShape::HalfLine {
                    vertex: vertex(toks[2])?,
                };
                g.add_edge(toks[1], shape);
            }
            "select" => {
                if toks.len() < 2 {
                    return Err(err("usage: select <id> [<id> ...]".into()));
                }
                selection
                    .get_or_insert_with(Vec::new)
                    .extend(toks[1..].iter().map(|s| s.to_string()));
            }
            other => return Err(err(format!("unknown declaration `{other}`"))),
        }
        if toks[0] != "vertex" && toks[0] != "select" {
            let id = toks[1];
            if g.edges.iter().filter(|e| e.id == id).count() > 1 {
                return Err(err(format!("edge `{id}` declared twice")));
            }
        }
    }
    Ok(GraphFile {
        graph: g,
        selection,
    })
}

/// Render a graph (and selection) in the line-oriented file format.
pub fn format_graph(g: &MetricGraph, selection: Option<&[String]>) -> String {
    let mut out = String::new();
    for v in &g.vertices {
        out.push_str(&format!("vertex {v}\n"));
    }
    for e in &g.edges {
        let line = match &e.shape {
            EdgeShape::Pendant { vertex, length } => {
                format!("pendant {} {} length={}", e.id, g.vertices[*vertex], length)
            }
            EdgeShape::Looping {
                vertex,
                half_length,
            } => format!(
                "loop {} {} halflength={}",
                e.id, g.vertices[*vertex], half_length
            ),
            EdgeShape::Internal {
                minus,
                plus,
                half_length,
            } => format!(
                "internal {} {} {} halflength={}",
                e.id, g.vertices[*minus], g.vertices[*plus], half_length
            ),
            EdgeShape::HalfLine { vertex } => {
                format!("halfline {} {}", e.id, g.vertices[*vertex])
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    if let Some(sel) = selection {
        if !sel.is_empty() {
            out.push_str("select");
            for s in sel {
                out.push(' ');
                out.push_str(s);
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flower(lens: &[f64]) -> MetricGraph {
        let mut g = MetricGraph::new();
        let v = g.add_vertex("v");
        for (i, &l) in lens.iter().enumerate() {
            g.add_edge(
                format!("e{}", i + 1),
                EdgeShape::Looping {
                    vertex: v,
                    half_length: l,
                },
            );
        }
        g.add_edge("h", EdgeShape::HalfLine { vertex: v });
        g
    }

    fn dumbbell(lm: f64, lp: f64, l0: f64) -> MetricGraph {
        let mut g = MetricGraph::new();
        let a = g.add_vertex("a");
        let b = g.add_vertex("b");
        g.add_edge(
            "left",
            EdgeShape::Looping {
                vertex: a,
                half_length: lm,
            },
        );
        g.add_edge(
            "right",
            EdgeShape::Looping {
                vertex: b,
                half_length: lp,
            },
        );
        g.add_edge(
            "bar",
            EdgeShape::Internal {
                minus: a,
                plus: b,
                half_length: l0,
            },
        );
        g
    }

    #[test]
    fn flower_is_valid_with_degree_seven() {
        let g = flower(&[1.0, 1.0, 1.0]);
        assert!(g.validate().is_valid());
        assert_eq!(g.degree(0), 7);
    }

    #[test]
    fn fake_vertex_is_reported() {
        let mut g = MetricGraph::new();
        let v = g.add_vertex("mid");
        g.add_edge(
            "a",
            EdgeShape::Pendant {
                vertex: v,
                length: 1.0,
            },
        );
        g.add_edge(
            "b",
            EdgeShape::Pendant {
                vertex: v,
                length: 1.0,
            },
        );
        let rep = g.validate();
        assert_eq!(
            rep.violations,
            vec![Violation::LowDegree {
                vertex: "mid".into(),
                degree: 2
            }]
        );
        let relaxed = validate_graph(
            &g,
            ValidationOptions {
                allow_fake_vertices: true,
            },
        );
        assert!(relaxed.is_valid());
    }

    #[test]
    fn internal_edge_needs_distinct_vertices() {
        let mut g = flower(&[1.0]);
        g.add_edge(
            "x",
            EdgeShape::Internal {
                minus: 0,
                plus: 0,
                half_length: 1.0,
            },
        );
        assert!(g
            .validate()
            .violations
            .iter()
            .any(|v| matches!(v, Violation::InternalSameVertex { .. })));
    }

    #[test]
    fn bad_lengths_and_references() {
        let mut g = flower(&[1.0, 1.0]);
        g.add_edge(
            "z",
            EdgeShape::Pendant {
                vertex: 0,
                length: -1.0,
            },
        );
        g.add_edge("w", EdgeShape::HalfLine { vertex: 7 });
        let rep = g.validate();
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::BadLength { .. })));
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::UnknownVertex { .. })));
    }

    #[test]
    fn scaling() {
        let g = dumbbell(1.0, 1.0, 0.5);
        let s = scale_graph(&g, 8.0).unwrap();
        let sizes: Vec<f64> = s.edges.iter().map(Edge::size).collect();
        assert_eq!(sizes, vec![8.0, 8.0, 4.0]);
        assert_eq!(scale_graph(&g, 1.0).unwrap(), g);
        let f = scale_graph(&flower(&[1.0]), 3.0).unwrap();
        assert_eq!(f.edges[1].shape, EdgeShape::HalfLine { vertex: 0 });
        assert!(scale_graph(&g, 0.0).is_err());
        assert!(scale_graph(&g, -2.0).is_err());
    }

    #[test]
    fn flower_selection_bookkeeping() {
        let g = flower(&[1.0, 1.0, 1.0]);
        let sel = build_selection(&g, &["e1", "e2", "e3"]).unwrap();
        assert_eq!(sel.boundary.len(), 1);
        let b = &sel.boundary[0];
        assert_eq!((b.remainder_degree, b.l(), b.total_degree()), (1, 3, 7));
        assert_eq!(sel.l_min, f64::INFINITY);
        assert_eq!(b.l_min, 1.0);
    }

    #[test]
    fn dumbbell_selection_bookkeeping() {
        let g = dumbbell(1.0, 1.0, 0.5);
        let sel = build_selection(&g, &["left", "right"]).unwrap();
        assert_eq!(sel.boundary.len(), 2);
        for b in &sel.boundary {
            assert_eq!(b.remainder_degree, 1);
            assert_eq!(b.total_degree(), 3);
        }
        assert_eq!(sel.l_min, 1.0);
    }

    #[test]
    fn selection_errors() {
        let g = flower(&[1.0]);
        let none: [&str; 0] = [];
        assert!(build_selection(&g, &none).is_err());
        assert!(build_selection(&g, &["h"]).is_err());
        assert!(build_selection(&g, &["nope"]).is_err());
    }

    #[test]
    fn length_slack_cases() {
        let g = flower(&[1.0, 1.0, 1.0]);
        let sel = build_selection(&g, &["e1", "e2", "e3"]).unwrap();
        assert!(check_length_slack(&sel).passes());

        let sym = dumbbell(1.0, 1.0, 0.5);
        let sel = build_selection(&sym, &["left", "right"]).unwrap();
        assert!(check_length_slack(&sel).passes());

        let lopsided = dumbbell(1.0, 3.2, 5.0);
        let sel = build_selection(&lopsided, &["left", "right"]).unwrap();
        let rep = check_length_slack(&sel);
        assert!(!rep.cubic_constraint_holds());
        assert!(rep.tail_constraint_holds());
        assert!(!rep.passes());
    }

    #[test]
    fn internal_edge_cases() {
        let g = dumbbell(1.0, 1.5, 0.5);
        let sel = build_selection(&g, &["left", "bar"]).unwrap();
        assert!(check_internal_edges(&g, &sel).passes());

        let g = dumbbell(1.0, 1.5, 1.0);
        let sel = build_selection(&g, &["left", "bar"]).unwrap();
        assert!(!check_internal_edges(&g, &sel).passes());

        let g = flower(&[1.0, 2.0]);
        let sel = build_selection(&g, &["e1", "e2"]).unwrap();
        assert!(check_internal_edges(&g, &sel).passes());
    }

    #[test]
    fn parse_and_format_round_trip() {
        let text = "\
# dumbbell
vertex a
vertex b
loop left a halflength=1
loop right b halflength=1.5
internal bar a b halflength=0.5   # connecting edge
select left right
";
        let parsed = parse_graph(text).unwrap();
        assert_eq!(parsed.graph, dumbbell(1.0, 1.5, 0.5));
        assert_eq!(parsed.selection, Some(vec!["left".into(), "right".into()]));
        let again = parse_graph(&format_graph(&parsed.graph, parsed.selection.as_deref())).unwrap();
        assert_eq!(again, parsed);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_graph("vertex a\nloop x b halflength=1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_graph("vertex a\n\npendant p a length=abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse_graph("vertex a\nbogus\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_graph("vertex a\nvertex a\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
