//! Uniform per-edge grids on a scaled graph and functions sampled on them.
//!
//! Vertex nodes come first (one shared unknown per vertex), followed by one
//! contiguous block of owned nodes per edge. A pendant owns its terminal
//! point; a half-line is cut at `z_cut` where the value is pinned to zero.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{EdgeIndex, EdgeShape, MetricGraph, VertexId};
use crate::linalg::{ArrowMatrix, Chain};

/// Lower bound for the half-line cut-off in scaled units.
pub const MIN_CUTOFF: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Vertex(VertexId),
    /// Free pendant end with a Neumann condition.
    Terminal,
    /// Truncated half-line end, value fixed to zero.
    Cap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGrid {
    pub edge: EdgeIndex,
    /// Coordinate of point 0.
    pub z0: f64,
    pub h: f64,
    pub intervals: usize,
    pub left: End,
    pub right: End,
    /// First owned global node.
    pub start: usize,
    /// Number of owned nodes.
    pub owned: usize,
}

impl EdgeGrid {
    pub fn z(&self, k: usize) -> f64 {
        self.z0 + k as f64 * self.h
    }

    /// Global node of point `k`, `None` at a cap.
    pub fn node(&self, k: usize) -> Option<usize> {
        if k == 0 {
            return match self.left {
                End::Vertex(v) => Some(v),
                End::Terminal => Some(self.start),
                End::Cap => None,
            };
        }
        if k == self.intervals {
            return match self.right {
                End::Vertex(v) => Some(v),
                End::Terminal => Some(self.start + self.owned - 1),
                End::Cap => None,
            };
        }
        let first = usize::from(self.left != End::Terminal);
        Some(self.start + k - first)
    }

    pub fn points(&self) -> usize {
        self.intervals + 1
    }

    pub fn length(&self) -> f64 {
        self.h * self.intervals as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphGrid {
    /// The graph the grid lives on (already scaled).
    pub graph: MetricGraph,
    pub edges: Vec<EdgeGrid>,
    pub nv: usize,
    pub n: usize,
    /// Lumped mass (quadrature weight) per node.
    pub mass: Vec<f64>,
    pub h_max: f64,
    pub z_cut: f64,
}

/// Default step: `min(0.02, shortest scaled bounded size / 50)`.
pub fn default_step(scaled: &MetricGraph) -> f64 {
    let shortest = scaled
        .edges
        .iter()
        .filter(|e| e.is_bounded())
        .map(|e| e.size())
        .fold(f64::INFINITY, f64::min);
    0.02f64.min(shortest / 50.0)
}

impl GraphGrid {
    /// Grid on an already-scaled graph with steps at most `h_max`.
    pub fn new(scaled: &MetricGraph, h_max: f64) -> Result<GraphGrid> {
        if !(h_max > 0.0) || !h_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid step {h_max} must be positive"
            )));
        }
        let longest = scaled
            .edges
            .iter()
            .filter(|e| e.is_bounded())
            .map(|e| e.size())
            .fold(0.0, f64::max);
        let z_cut = MIN_CUTOFF.max(3.0 * longest);
        Self::with_cutoff(scaled, h_max, z_cut)
    }

    pub fn with_cutoff(scaled: &MetricGraph, h_max: f64, z_cut: f64) -> Result<GraphGrid> {
        let nv = scaled.vertices.len();
        let mut next = nv;
        let mut edges = Vec::with_capacity(scaled.edges.len());
        for (i, e) in scaled.edges.iter().enumerate() {
            let (z0, length, left, right, even) = match e.shape {
                EdgeShape::Pendant { vertex, length } => {
                    (0.0, length, End::Terminal, End::Vertex(vertex), false)
                }
                EdgeShape::Looping {
                    vertex,
                    half_length,
                } => (
                    -half_length,
                    2.0 * half_length,
                    End::Vertex(vertex),
                    End::Vertex(vertex),
                    true,
                ),
                EdgeShape::Internal {
                    minus,
                    plus,
                    half_length,
                } => (
                    -half_length,
                    2.0 * half_length,
                    End::Vertex(minus),
                    End::Vertex(plus),
                    true,
                ),
                EdgeShape::HalfLine { vertex } => {
                    (0.0, z_cut, End::Vertex(vertex), End::Cap, false)
                }
            };
            if !(length > 0.0) || !length.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge `{}` has bad length",
                    e.id
                )));
            }
            let mut intervals = ((length / h_max).ceil() as usize).max(2);
            if even && intervals % 2 == 1 {
                // keep the midpoint on the grid
                intervals += 1;
            }
            let owned = intervals - 1 + usize::from(left == End::Terminal);
            edges.push(EdgeGrid {
                edge: i,
                z0,
                h: length / intervals as f64,
                intervals,
                left,
                right,
                start: next,
                owned,
            });
            next += owned;
        }
        let mut mass = vec![0.0; next];
        for eg in &edges {
            for k in 0..eg.intervals {
                for node in [eg.node(k), eg.node(k + 1)].into_iter().flatten() {
                    mass[node] += 0.5 * eg.h;
                }
            }
        }
        Ok(GraphGrid {
            graph: scaled.clone(),
            edges,
            nv,
            n: next,
            mass,
            h_max,
            z_cut,
        })
    }

    pub fn edge_grid(&self, e: EdgeIndex) -> &EdgeGrid {
        &self.edges[e]
    }

    /// Assemble `S + diag(node_diag)` where `S` is the stiffness matrix of
    /// `∫ w'²` with piecewise-linear elements.
    pub fn assemble(&self, node_diag: &[f64]) -> ArrowMatrix {
        let mut diag = node_diag.to_vec();
        let mut off = vec![0.0; self.n];
        let mut chains = Vec::with_capacity(self.edges.len());
        for eg in &self.edges {
            let inv_h = 1.0 / eg.h;
            let mut left = None;
            let mut right = None;
            for k in 0..eg.intervals {
                let a = eg.node(k);
                let b = eg.node(k + 1);
                for node in [a, b].into_iter().flatten() {
                    diag[node] += inv_h;
                }
                match (a, b) {
                    (Some(a), Some(b)) if a >= self.nv && b >= self.nv => off[a] = -inv_h,
                    (Some(v), Some(_)) if v < self.nv && k == 0 => left = Some((v, -inv_h)),
                    (Some(_), Some(v)) if v < self.nv => right = Some((v, -inv_h)),
                    _ => {}
                }
            }
            chains.push(Chain {
                start: eg.start,
                len: eg.owned,
                left,
                right,
            });
        }
        ArrowMatrix {
            nv: self.nv,
            diag,
            off,
            chains,
            fixed: vec![false; self.nv],
        }
    }

    /// Global nodes of an edge's points together with their coordinates.
    pub fn edge_points(&self, e: EdgeIndex) -> impl Iterator<Item = (f64, Option<usize>)> + '_ {
        let eg = &self.edges[e];
        (0..eg.points()).map(move |k| (eg.z(k), eg.node(k)))
    }
}

/// A scalar field on a [`GraphGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction {
    pub grid: Arc<GraphGrid>,
    pub values: Vec<f64>,
    pub eps: f64,
}

impl GraphFunction {
    pub fn zeros(grid: Arc<GraphGrid>, eps: f64) -> Self {
        let n = grid.n;
        Self {
            grid,
            values: vec![0.0; n],
            eps,
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values,
            eps: self.eps,
        }
    }

    /// Value at a point, zero at caps.
    pub fn at(&self, node: Option<usize>) -> f64 {
        node.map_or(0.0, |i| self.values[i])
    }

    /// `(z, value)` for every point of edge `e`, endpoints included.
    pub fn edge_samples(&self, e: EdgeIndex) -> Vec<(f64, f64)> {
        self.grid
            .edge_points(e)
            .map(|(z, node)| (z, self.at(node)))
            .collect()
    }

    pub fn vertex_value(&self, v: VertexId) -> f64 {
        self.values[v]
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// `∫ f² dz` over edge `e` by the trapezoid rule.
    pub fn edge_l2_sq(&self, e: EdgeIndex) -> f64 {
        let eg = &self.grid.edges[e];
        let mut s = 0.0;
        for k in 0..eg.intervals {
            let a = self.at(eg.node(k));
            let b = self.at(eg.node(k + 1));
            s += 0.5 * eg.h * (a * a + b * b);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeShape;

    fn lollipop() -> MetricGraph {
        let mut g = MetricGraph::new();
        let v = g.add_vertex("v");
        g.add_edge(
            "loop",
            EdgeShape::Looping {
                vertex: v,
                half_length: 1.0,
            },
        );
        g.add_edge(
            "p",
            EdgeShape::Pendant {
                vertex: v,
                length: 0.55,
            },
        );
        g.add_edge("h", EdgeShape::HalfLine { vertex: v });
        g
    }

    #[test]
    fn layout_and_mass() {
        let g = lollipop();
        let grid = GraphGrid::with_cutoff(&g, 0.1, 2.0).unwrap();
        let lp = grid.edge_grid(0);
        assert_eq!(lp.intervals, 20);
        assert_eq!(lp.owned, 19);
        assert_eq!(lp.node(0), Some(0));
        assert_eq!(lp.node(20), Some(0));
        assert_eq!(lp.node(10).unwrap(), lp.start + 9);
        assert!((lp.z(10)).abs() < 1e-15);
        let pe = grid.edge_grid(1);
        assert_eq!(pe.intervals, 6);
        assert_eq!(pe.owned, 6);
        assert_eq!(pe.node(0), Some(pe.start));
        assert_eq!(pe.node(6), Some(0));
        let hl = grid.edge_grid(2);
        assert_eq!(hl.node(hl.intervals), None);
        assert_eq!(grid.n, 1 + 19 + 6 + 19);
        // total weight is the total length
        let total: f64 = grid.mass.iter().sum();
        let cap_half = 0.5 * hl.h;
        assert!((total + cap_half - (2.0 + 0.55 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn stiffness_annihilates_constants_up_to_caps() {
        let g = lollipop();
        let grid = GraphGrid::with_cutoff(&g, 0.1, 2.0).unwrap();
        let k = grid.assemble(&vec![0.0; grid.n]);
        let ones = vec![1.0; grid.n];
        let y = k.matvec(&ones);
        let last_half_line = grid
            .edge_grid(2)
            .node(grid.edge_grid(2).intervals - 1)
            .unwrap();
        for (i, yi) in y.iter().enumerate() {
            if i == last_half_line {
                assert!((yi - 1.0 / grid.edge_grid(2).h).abs() < 1e-9);
            } else {
                assert!(yi.abs() < 1e-9, "node {i}: {yi}");
            }
        }
    }

    #[test]
    fn default_step_rule() {
        let g = lollipop().scale(8.0).unwrap();
        assert_eq!(default_step(&g), 0.02);
        let g = lollipop().scale(0.5).unwrap();
        assert!((default_step(&g) - 0.275 / 50.0).abs() < 1e-15);
    }
}
