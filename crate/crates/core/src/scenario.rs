//! Preset graphs with their selections, expected inertia and ε ladders, and
//! the construction of the initial state for a preset at a given ε.

use std::sync::Arc;

use crate::asymptotic::{
    build_initial_guess, dirichlet_data, dirichlet_data_unchecked, AsymptoticData,
};
use crate::error::{Error, Result};
use crate::graph::{
    build_selection, validate_graph, EdgeIndex, EdgeSelection, EdgeShape, MetricGraph,
    ValidationOptions,
};
use crate::grid::{default_step, GraphFunction, GraphGrid};
use crate::phase::soliton;
use crate::solver::MAX_ITERATIONS;

pub const DEFAULT_LADDER: [f64; 4] = [6.0, 8.0, 10.0, 12.0];

/// Expected `(n, z)`; `z = None` leaves the kernel unchecked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Expectation {
    pub n: usize,
    pub z: Option<usize>,
}

impl Expectation {
    pub fn matches(&self, n: usize, z: usize) -> bool {
        self.n == n && self.z.map_or(true, |e| e == z)
    }
}

/// Where internal-edge offsets come from.
#[derive(Debug, Clone, PartialEq)]
pub enum OffsetRule {
    /// From the degrees of the two end vertices.
    FromDegrees,
    /// Centre of a path graph `pendant(ℓ_1) - internal - pendant(ℓ_3)`:
    /// `a = ε(ℓ_3 - ℓ_1)/2`.
    IntervalCentre { l1: f64, l3: f64 },
}

/// How the Newton start is built.
#[derive(Debug, Clone, PartialEq)]
pub enum Seeding {
    Asymptotic,
    /// Sum of sech bumps, each at `(edge id, unscaled distance from the
    /// edge's first point)`, decaying with graph distance.
    Bumps(Vec<(String, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub graph: MetricGraph,
    pub selection: Vec<String>,
    pub expected: Option<Expectation>,
    pub eps_ladder: Vec<f64>,
    /// Admit degree-2 vertices and skip the assumption checks.
    pub allow_fake_vertices: bool,
    pub offsets: OffsetRule,
    pub seeding: Seeding,
    /// Newton iteration budget.
    pub max_iterations: usize,
    pub notes: Vec<String>,
}

fn check_lengths(lengths: &[f64]) -> Result<()> {
    if let Some(l) = lengths.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "edge length {l} must be positive"
        )));
    }
    Ok(())
}

fn base(
    name: &str,
    graph: MetricGraph,
    selection: Vec<String>,
    expected: Option<Expectation>,
) -> Scenario {
    Scenario {
        name: name.to_string(),
        graph,
        selection,
        expected,
        eps_ladder: DEFAULT_LADDER.to_vec(),
        allow_fake_vertices: false,
        offsets: OffsetRule::FromDegrees,
        seeding: Seeding::Asymptotic,
        max_iterations: MAX_ITERATIONS,
        notes: Vec::new(),
    }
}

/// Scenario for a user-supplied graph with no expectation attached.
pub fn custom(
    name: &str,
    graph: MetricGraph,
    selection: Vec<String>,
    allow_fake_vertices: bool,
) -> Scenario {
    let mut sc = base(name, graph, selection, None);
    sc.allow_fake_vertices = allow_fake_vertices;
    sc
}

/// `L` loops of half-lengths `lengths` and one half-line at a common vertex;
/// the first `n_selected` loops carry pulses.
pub fn flower(lengths: &[f64], n_selected: usize) -> Result<Scenario> {
    check_lengths(lengths)?;
    if n_selected == 0 || n_selected > lengths.len() {
        return Err(Error::InvalidParameter(format!(
            "select between 1 and {} loops, got {n_selected}",
            lengths.len()
        )));
    }
    let mut g = MetricGraph::new();
    let v = g.add_vertex("v");
    for (i, &l) in lengths.iter().enumerate() {
        g.add_edge(
            format!("e{}", i + 1),
            EdgeShape::Looping {
                vertex: v,
                half_length: l,
            },
        );
    }
    g.add_edge("h", EdgeShape::HalfLine { vertex: v });
    let sel = (1..=n_selected).map(|i| format!("e{i}")).collect();
    let mut sc = base(
        "flower",
        g,
        sel,
        Some(Expectation {
            n: n_selected,
            z: Some(0),
        }),
    );
    sc.notes.push(format!(
        "{} loops and a half-line, {n_selected} pulses",
        lengths.len()
    ));
    Ok(sc)
}

/// Pendants of the given lengths and one half-line at a common vertex.
pub fn star(lengths: &[f64], n_selected: usize) -> Result<Scenario> {
    check_lengths(lengths)?;
    if n_selected == 0 || n_selected > lengths.len() {
        return Err(Error::InvalidParameter(format!(
            "select between 1 and {} pendants, got {n_selected}",
            lengths.len()
        )));
    }
    let mut g = MetricGraph::new();
    let v = g.add_vertex("v");
    for (i, &l) in lengths.iter().enumerate() {
        g.add_edge(
            format!("p{}", i + 1),
            EdgeShape::Pendant {
                vertex: v,
                length: l,
            },
        );
    }
    g.add_edge("h", EdgeShape::HalfLine { vertex: v });
    let sel = (1..=n_selected).map(|i| format!("p{i}")).collect();
    Ok(base(
        "star",
        g,
        sel,
        Some(Expectation {
            n: n_selected,
            z: Some(0),
        }),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumbbellPattern {
    OneLoop,
    TwoLoops,
    Internal,
    LoopInternal,
    All,
}

/// Loops of half-lengths `l_minus`, `l_plus` joined by an internal edge of
/// half-length `l0`.
pub fn dumbbell(l_minus: f64, l_plus: f64, l0: f64, pattern: DumbbellPattern) -> Result<Scenario> {
    check_lengths(&[l_minus, l_plus, l0])?;
    let mut g = MetricGraph::new();
    let a = g.add_vertex("vl");
    let b = g.add_vertex("vr");
    g.add_edge(
        "left",
        EdgeShape::Looping {
            vertex: a,
            half_length: l_minus,
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
    g.add_edge(
        "right",
        EdgeShape::Looping {
            vertex: b,
            half_length: l_plus,
        },
    );
    let (sel, expected): (&[&str], _) = match pattern {
        DumbbellPattern::OneLoop => (&["left"], Some(1)),
        DumbbellPattern::TwoLoops => (&["left", "right"], Some(2)),
        DumbbellPattern::Internal => (&["bar"], None),
        DumbbellPattern::LoopInternal => (&["left", "bar"], None),
        DumbbellPattern::All => (&["left", "bar", "right"], None),
    };
    let mut sc = base(
        "dumbbell",
        g,
        sel.iter().map(|s| s.to_string()).collect(),
        expected.map(|n| Expectation { n, z: Some(0) }),
    );
    if expected.is_none() {
        sc.notes
            .push("selection touches the internal edge; no expected inertia".into());
    }
    Ok(sc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalPattern {
    /// One pulse on the internal edge.
    Internal,
    /// Pulses at the two pendant ends.
    Pendants,
    /// Two pulses away from the ends, seeded at the pendants' middles.
    Mid,
}

/// `pendant(ℓ_1) - internal(2ℓ_2) - pendant(ℓ_3)`: a segment cut by two
/// degree-2 vertices.
pub fn interval(l1: f64, l2: f64, l3: f64, pattern: IntervalPattern) -> Result<Scenario> {
    check_lengths(&[l1, l2, l3])?;
    let mut g = MetricGraph::new();
    let v2 = g.add_vertex("v2");
    let v3 = g.add_vertex("v3");
    g.add_edge(
        "e1",
        EdgeShape::Pendant {
            vertex: v2,
            length: l1,
        },
    );
    g.add_edge(
        "e2",
        EdgeShape::Internal {
            minus: v2,
            plus: v3,
            half_length: l2,
        },
    );
    g.add_edge(
        "e3",
        EdgeShape::Pendant {
            vertex: v3,
            length: l3,
        },
    );
    let (sel, expected): (&[&str], _) = match pattern {
        IntervalPattern::Internal => (&["e2"], Expectation { n: 2, z: Some(0) }),
        IntervalPattern::Pendants => (&["e1", "e3"], Expectation { n: 2, z: Some(0) }),
        IntervalPattern::Mid => (&["e1", "e3"], Expectation { n: 4, z: None }),
    };
    let mut sc = base(
        "interval",
        g,
        sel.iter().map(|s| s.to_string()).collect(),
        Some(expected),
    );
    sc.allow_fake_vertices = true;
    sc.offsets = OffsetRule::IntervalCentre { l1, l3 };
    sc.notes
        .push("v2 and v3 are degree-2 junctions that cut the segment into three edges".into());
    if pattern == IntervalPattern::Mid {
        sc.seeding = Seeding::Bumps(vec![("e1".into(), 0.5 * l1), ("e3".into(), 0.5 * l3)]);
        // Damped Newton walks the seeds out to the quarter points.
        sc.max_iterations = 200;
        sc.notes
            .push("pulses seeded at the pendants' middles".into());
    }
    Ok(sc)
}

/// An internal edge of half-length `l0` whose end vertices have degrees
/// `z_minus` and `z_plus`, completed by half-lines.
pub fn offset(l0: f64, z_minus: usize, z_plus: usize) -> Result<Scenario> {
    check_lengths(&[l0])?;
    if z_minus < 3 || z_plus < 3 {
        return Err(Error::InvalidParameter(
            "both degrees must be at least 3".into(),
        ));
    }
    let mut g = MetricGraph::new();
    let a = g.add_vertex("a");
    let b = g.add_vertex("b");
    g.add_edge(
        "bar",
        EdgeShape::Internal {
            minus: a,
            plus: b,
            half_length: l0,
        },
    );
    for i in 1..z_minus {
        g.add_edge(format!("ha{i}"), EdgeShape::HalfLine { vertex: a });
    }
    for i in 1..z_plus {
        g.add_edge(format!("hb{i}"), EdgeShape::HalfLine { vertex: b });
    }
    Ok(base("offset", g, vec!["bar".into()], None))
}

/// Preset names understood by [`preset`].
pub const PRESETS: [&str; 13] = [
    "flower",
    "flower-1",
    "flower-2",
    "star",
    "dumbbell",
    "dumbbell-loop",
    "dumbbell-internal",
    "dumbbell-loop-internal",
    "dumbbell-all",
    "interval-internal",
    "interval-pendants",
    "interval-mid",
    "offset",
];

/// Presets with the standard lengths.
pub fn preset(name: &str) -> Result<Scenario> {
    let mut sc = match name {
        "flower" | "flower-3" => flower(&[1.0; 3], 3),
        "flower-1" => flower(&[1.0; 3], 1),
        "flower-2" => flower(&[1.0; 3], 2),
        "star" => star(&[1.0; 3], 3),
        "dumbbell" => dumbbell(1.0, 1.0, 0.5, DumbbellPattern::TwoLoops),
        "dumbbell-loop" => dumbbell(1.0, 1.0, 0.5, DumbbellPattern::OneLoop),
        "dumbbell-internal" => dumbbell(1.0, 1.0, 0.5, DumbbellPattern::Internal),
        "dumbbell-loop-internal" => dumbbell(1.0, 1.0, 0.5, DumbbellPattern::LoopInternal),
        "dumbbell-all" => dumbbell(1.0, 1.0, 0.5, DumbbellPattern::All),
        "interval" | "interval-internal" => interval(1.0, 0.6, 1.0, IntervalPattern::Internal),
        "interval-pendants" => interval(1.0, 0.6, 1.0, IntervalPattern::Pendants),
        "interval-mid" => interval(1.0, 0.6, 1.0, IntervalPattern::Mid),
        "offset" => offset(0.5, 3, 4),
        _ => Err(Error::InvalidParameter(format!(
            "unknown scenario `{name}`; known: {}",
            PRESETS.join(", ")
        ))),
    }?;
    sc.name = name.to_string();
    Ok(sc)
}

/// Everything needed to start Newton at one ε.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub selection: EdgeSelection,
    /// `None` for seeded starts.
    pub data: Option<AsymptoticData>,
    pub guess: GraphFunction,
}

impl Scenario {
    pub fn validation(&self) -> ValidationOptions {
        ValidationOptions {
            allow_fake_vertices: self.allow_fake_vertices,
        }
    }

    pub fn build_selection(&self) -> Result<EdgeSelection> {
        validate_graph(&self.graph, self.validation()).into_result()?;
        build_selection(&self.graph, &self.selection)
    }

    /// Offset overrides implied by the scenario at `eps`.
    pub fn offset_overrides(&self, eps: f64) -> Option<Vec<(EdgeIndex, f64)>> {
        match self.offsets {
            OffsetRule::FromDegrees => None,
            OffsetRule::IntervalCentre { l1, l3 } => Some(
                self.graph
                    .edges
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| matches!(e.shape, EdgeShape::Internal { .. }))
                    .map(|(i, _)| (i, 0.5 * eps * (l3 - l1)))
                    .collect(),
            ),
        }
    }

    pub fn asymptotics(&self, sel: &EdgeSelection, eps: f64) -> Result<AsymptoticData> {
        let overrides = self.offset_overrides(eps);
        if self.allow_fake_vertices {
            dirichlet_data_unchecked(&self.graph, sel, eps, overrides.as_deref())
        } else {
            dirichlet_data(&self.graph, sel, eps, overrides.as_deref())
        }
    }

    /// Grid (step `h`, or the default) and initial guess at `eps`.
    pub fn prepare(&self, eps: f64, h: Option<f64>) -> Result<Prepared> {
        let selection = self.build_selection()?;
        let scaled = self.graph.scale(eps)?;
        let step = h.unwrap_or_else(|| default_step(&scaled));
        let grid = Arc::new(GraphGrid::new(&scaled, step)?);
        match &self.seeding {
            Seeding::Asymptotic => {
                let data = self.asymptotics(&selection, eps)?;
                let guess = build_initial_guess(&grid, &selection, &data)?;
                Ok(Prepared {
                    selection,
                    data: Some(data),
                    guess,
                })
            }
            Seeding::Bumps(bumps) => {
                let located: Vec<(EdgeIndex, f64)> = bumps
                    .iter()
                    .map(|(id, x)| {
                        self.graph
                            .edge_index(id)
                            .map(|e| (e, eps * x))
                            .ok_or_else(|| Error::InvalidSelection(format!("no edge `{id}`")))
                    })
                    .collect::<Result<_>>()?;
                Ok(Prepared {
                    selection,
                    data: None,
                    guess: seeded_guess(&grid, eps, &located),
                })
            }
        }
    }
}

/// Sum of `sech(d)` over the bumps, `d` the graph distance to each bump
/// centre. Centres are given as `(edge, scaled distance from point 0)`.
pub fn seeded_guess(grid: &Arc<GraphGrid>, eps: f64, bumps: &[(EdgeIndex, f64)]) -> GraphFunction {
    let mut values = vec![0.0; grid.n];
    for &(e, s) in bumps {
        let dist = distances_from(grid, e, s);
        for (v, d) in values.iter_mut().zip(dist) {
            *v += soliton(d);
        }
    }
    GraphFunction {
        grid: Arc::clone(grid),
        values,
        eps,
    }
}

/// Graph distance from a point on edge `e` at offset `s` from its point 0
/// to every node.
fn distances_from(grid: &GraphGrid, e: EdgeIndex, s: f64) -> Vec<f64> {
    let g = &grid.graph;
    let nv = grid.nv;
    let mut dv = vec![f64::INFINITY; nv];
    let eg = grid.edge_grid(e);
    let len = eg.length();
    if let crate::grid::End::Vertex(v) = eg.left {
        dv[v] = dv[v].min(s);
    }
    if let crate::grid::End::Vertex(v) = eg.right {
        dv[v] = dv[v].min(len - s);
    }
    // Bellman-Ford over the (few) vertices.
    for _ in 0..nv {
        for edge in &g.edges {
            if let EdgeShape::Internal {
                minus,
                plus,
                half_length,
            } = edge.shape
            {
                let w = 2.0 * half_length;
                let (a, b) = (dv[minus], dv[plus]);
                dv[plus] = dv[plus].min(a + w);
                dv[minus] = dv[minus].min(b + w);
            }
        }
    }
    let mut out = vec![f64::INFINITY; grid.n];
    out[..nv].copy_from_slice(&dv);
    for other in &grid.edges {
        let l = other.length();
        let left = match other.left {
            crate::grid::End::Vertex(v) => dv[v],
            _ => f64::INFINITY,
        };
        let right = match other.right {
            crate::grid::End::Vertex(v) => dv[v],
            _ => f64::INFINITY,
        };
        for k in 0..=other.intervals {
            let Some(node) = other.node(k) else { continue };
            let t = k as f64 * other.h;
            let mut d = (left + t).min(right + (l - t));
            if other.edge == e {
                d = d.min((t - s).abs());
            }
            out[node] = out[node].min(d);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build_and_validate() {
        for name in PRESETS {
            let sc = preset(name).unwrap();
            assert!(sc.build_selection().is_ok(), "{name}");
            assert_eq!(preset(name).unwrap(), sc, "deterministic {name}");
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn interval_needs_fake_vertices() {
        let sc = preset("interval-internal").unwrap();
        let strict = validate_graph(&sc.graph, ValidationOptions::default());
        assert!(!strict.is_valid());
        assert_eq!(sc.offset_overrides(8.0), Some(vec![(1, 0.0)]));
    }

    #[test]
    fn seeded_guess_peaks_at_seeds() {
        let sc = preset("interval-mid").unwrap();
        let p = sc.prepare(8.0, Some(0.05)).unwrap();
        let s = p.guess.edge_samples(0);
        let (zmax, umax) = s
            .iter()
            .cloned()
            .fold((0.0, 0.0), |m, x| if x.1 > m.1 { x } else { m });
        assert!(
            (zmax - 4.0).abs() < 1e-9 && (umax - 1.0).abs() < 1e-3,
            "{zmax} {umax}"
        );
        // continuity through v2 and along the internal edge
        let e2 = p.guess.edge_samples(1);
        assert!((e2[0].1 - p.guess.vertex_value(0)).abs() < 1e-15);
        assert!((e2[0].1 - soliton(4.0) - soliton(4.0 + 9.6)).abs() < 1e-12);
    }
}
