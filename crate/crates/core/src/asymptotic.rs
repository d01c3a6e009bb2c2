//! Leading-order Dirichlet/Neumann data at boundary vertices, internal-edge
//! offsets, consistency audits and the initial guess for Newton.
//!
//! All quantities live on the scaled graph: a selected edge of length `ℓ`
//! carries a pulse whose distance to the vertex is `εℓ` (shifted by the
//! offset `a` on internal edges).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{
    check_internal_edges, check_length_slack, EdgeIndex, EdgeSelection, EdgeShape, MetricGraph,
    VertexId,
};
use crate::grid::{GraphFunction, GraphGrid};
use crate::phase::{shoot_bump, soliton, MIN_EPS_ELL};

/// Offsets larger than this in magnitude are flagged.
pub const A_MAX: f64 = 2.0;

/// `a = ¼ ln[(Z_j - 2) Z_k / ((Z_k - 2) Z_j)]` for an internal edge running
/// from a vertex of degree `Z_j` to one of degree `Z_k`.
pub fn internal_offset(z_j: usize, z_k: usize) -> Result<f64> {
    if z_j < 3 || z_k < 3 {
        return Err(Error::InvalidParameter(format!(
            "internal offset needs both degrees >= 3, got {z_j} and {z_k}"
        )));
    }
    // Written as a difference so that swapping the ends flips the sign exactly.
    let half = |z: usize| 0.25 * (1.0 - 2.0 / z as f64).ln();
    Ok(half(z_j) - half(z_k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InternalOffset {
    pub edge: EdgeIndex,
    pub a: f64,
    /// `|a| > A_MAX`.
    pub flagged: bool,
    /// First two explicit terms of the correction `E_0` to `e^{4a}`,
    /// evaluated at the leading-order `a`; `None` when a preset supplied `a`.
    pub e0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticData {
    pub eps: f64,
    /// Boundary vertices, in the order of `EdgeSelection::boundary`.
    pub vertices: Vec<VertexId>,
    pub p: Vec<f64>,
    /// Remainder-side flux `D_j p_j`.
    pub q1: Vec<f64>,
    /// Pulse-side flux from the leading-order bump asymptotics.
    pub q2: Vec<f64>,
    /// Pulse-side flux with each bump flux replaced by the shooting value;
    /// `None` where a bump falls outside the shooting regime.
    pub q2_refined: Vec<Option<f64>>,
    pub offsets: Vec<InternalOffset>,
}

impl AsymptoticData {
    /// `q1 + q2`, zero by construction of `p`.
    pub fn balance(&self) -> Vec<f64> {
        self.q1.iter().zip(&self.q2).map(|(a, b)| a + b).collect()
    }

    /// `|q1 + q2_refined| / p` per vertex.
    pub fn refined_balance(&self) -> Vec<Option<f64>> {
        self.q1
            .iter()
            .zip(&self.q2_refined)
            .zip(&self.p)
            .map(|((q1, q2), p)| q2.map(|q2| (q1 + q2).abs() / p))
            .collect()
    }

    pub fn p_at(&self, v: VertexId) -> Option<f64> {
        self.vertices
            .iter()
            .position(|&w| w == v)
            .map(|i| self.p[i])
    }

    pub fn offset_of(&self, e: EdgeIndex) -> Option<f64> {
        self.offsets.iter().find(|o| o.edge == e).map(|o| o.a)
    }
}

/// Distances from a boundary vertex to the pulse centres of its selected
/// edges, one entry per edge-end.
fn pulse_distances(
    g: &MetricGraph,
    eps: f64,
    v: VertexId,
    sel: &EdgeSelection,
    offsets: &[(EdgeIndex, f64)],
) -> Vec<f64> {
    let b = sel.boundary_of(v).expect("boundary vertex");
    let offset = |e: EdgeIndex| {
        offsets
            .iter()
            .find(|(x, _)| *x == e)
            .map_or(0.0, |(_, a)| *a)
    };
    let mut d = Vec::new();
    for &e in &b.pendants {
        d.push(eps * g.edges[e].size());
    }
    for &e in &b.loops {
        d.push(eps * g.edges[e].size());
        d.push(eps * g.edges[e].size());
    }
    for &e in &b.internal_minus {
        d.push(eps * g.edges[e].size() + offset(e));
    }
    for &e in &b.internal_plus {
        d.push(eps * g.edges[e].size() - offset(e));
    }
    d
}

/// Leading-order data with assumption and threshold checks.
///
/// `offsets` overrides the internal-edge offsets (used where a vertex has
/// degree below three); otherwise they come from [`internal_offset`].
pub fn dirichlet_data(
    g: &MetricGraph,
    sel: &EdgeSelection,
    eps: f64,
    offsets: Option<&[(EdgeIndex, f64)]>,
) -> Result<AsymptoticData> {
    let a1 = check_length_slack(sel);
    if !a1.passes() {
        return Err(Error::Assumption(format!(
            "length constraints fail (tail slack {:?}, cubic slack {:?})",
            a1.slack_tail, a1.slack_cubic
        )));
    }
    let a2 = check_internal_edges(g, sel);
    if !a2.passes() {
        return Err(Error::Assumption(
            a2.failures
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    if !(eps * sel.l_n >= MIN_EPS_ELL) {
        return Err(Error::OutOfRegime(format!(
            "eps * l_N = {} below {MIN_EPS_ELL}",
            eps * sel.l_n
        )));
    }
    dirichlet_data_unchecked(g, sel, eps, offsets)
}

/// Same as [`dirichlet_data`] without the assumption and regime checks.
pub fn dirichlet_data_unchecked(
    g: &MetricGraph,
    sel: &EdgeSelection,
    eps: f64,
    offsets: Option<&[(EdgeIndex, f64)]>,
) -> Result<AsymptoticData> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    for b in &sel.boundary {
        if b.m() > 1 {
            return Err(Error::Assumption(format!(
                "vertex `{}` touches {} selected internal edges; the coupled offset system is not supported",
                g.vertices[b.vertex],
                b.m()
            )));
        }
    }
    let mut offs: Vec<InternalOffset> = Vec::new();
    for &e in &sel.selected {
        let EdgeShape::Internal { minus, plus, .. } = g.edges[e].shape else {
            continue;
        };
        let given = offsets.and_then(|o| o.iter().find(|(x, _)| *x == e).map(|(_, a)| *a));
        let (a, e0) = match given {
            Some(a) => (a, None),
            None => {
                let zj = sel.boundary_of(minus).expect("boundary").total_degree();
                let zk = sel.boundary_of(plus).expect("boundary").total_degree();
                let a = internal_offset(zj, zk)?;
                (a, Some(offset_correction(g, sel, eps, e, a)))
            }
        };
        offs.push(InternalOffset {
            edge: e,
            a,
            flagged: a.abs() > A_MAX,
            e0,
        });
    }
    let pairs: Vec<(EdgeIndex, f64)> = offs.iter().map(|o| (o.edge, o.a)).collect();

    let mut data = AsymptoticData {
        eps,
        vertices: Vec::new(),
        p: Vec::new(),
        q1: Vec::new(),
        q2: Vec::new(),
        q2_refined: Vec::new(),
        offsets: offs,
    };
    for b in &sel.boundary {
        let d = pulse_distances(g, eps, b.vertex, sel, &pairs);
        let z = b.total_degree() as f64;
        let tails: f64 = d.iter().map(|x| (-x).exp()).sum();
        let p = 4.0 / z * tails;
        let ends = b.selected_ends() as f64;
        let q1 = b.remainder_degree as f64 * p;
        let q2 = ends * p - 4.0 * tails;
        let refined: Option<f64> = d
            .iter()
            .map(|&dist| shoot_bump(dist, p).ok().map(|bump| -bump.q))
            .sum();
        data.vertices.push(b.vertex);
        data.p.push(p);
        data.q1.push(q1);
        data.q2.push(q2);
        data.q2_refined.push(refined);
    }
    Ok(data)
}

fn pend_loop_sum(g: &MetricGraph, sel: &EdgeSelection, v: VertexId, eps: f64) -> f64 {
    let b = sel.boundary_of(v).expect("boundary");
    b.pendants
        .iter()
        .map(|&e| (-eps * g.edges[e].size()).exp())
        .chain(
            b.loops
                .iter()
                .map(|&e| 2.0 * (-eps * g.edges[e].size()).exp()),
        )
        .sum()
}

/// Explicit part of `E_0` at offset `a` for internal edge `e`.
fn offset_correction(g: &MetricGraph, sel: &EdgeSelection, eps: f64, e: EdgeIndex, a: f64) -> f64 {
    let EdgeShape::Internal {
        minus,
        plus,
        half_length,
    } = g.edges[e].shape
    else {
        return 0.0;
    };
    let zj = sel.boundary_of(minus).map_or(0, |b| b.total_degree()) as f64;
    let zk = sel.boundary_of(plus).map_or(0, |b| b.total_degree()) as f64;
    let l0 = eps * half_length;
    let sj = pend_loop_sum(g, sel, minus, eps);
    let sk = pend_loop_sum(g, sel, plus, eps);
    2.0 / (zk - 2.0) * (3.0 * a + l0).exp() * sk
        - 2.0 * zk / (zj * (zk - 2.0)) * (a + l0).exp() * sj
}

/// Smallness ratios of the construction; each should be `< 1` and shrink
/// with `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexAudit {
    pub vertex: VertexId,
    /// `‖p‖ e^{-εℓ_min} / e^{-εℓ_{j,min}}`.
    pub tail: f64,
    /// `‖p‖³ / e^{-εℓ_{j,min}}`.
    pub cubic: f64,
    /// `ε e^{-3εℓ_{j,min}} / e^{-εℓ_{j,min}}`.
    pub bump: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InternalAudit {
    pub edge: EdgeIndex,
    /// The six conditions that make `E_0` small, as ratios to
    /// `e^{-εℓ_{e0}}`.
    pub ratios: [f64; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub vertices: Vec<VertexAudit>,
    /// Empty when no internal edge is selected.
    pub internal: Vec<InternalAudit>,
}

impl AuditReport {
    pub fn all_below_one(&self) -> bool {
        self.vertices
            .iter()
            .all(|v| v.tail < 1.0 && v.cubic < 1.0 && v.bump < 1.0)
            && self
                .internal
                .iter()
                .all(|i| i.ratios.iter().all(|&r| r < 1.0))
    }

    /// Every ratio, in a fixed order, for comparisons across `ε`.
    pub fn flatten(&self) -> Vec<f64> {
        self.vertices
            .iter()
            .flat_map(|v| [v.tail, v.cubic, v.bump])
            .chain(self.internal.iter().flat_map(|i| i.ratios))
            .collect()
    }
}

pub fn audit_consistency(
    g: &MetricGraph,
    sel: &EdgeSelection,
    data: &AsymptoticData,
) -> AuditReport {
    let eps = data.eps;
    let pnorm = data.p.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let tail_min = (-eps * sel.l_min).exp();
    let vertices = sel
        .boundary
        .iter()
        .map(|b| {
            let lead = (-eps * b.l_min).exp();
            VertexAudit {
                vertex: b.vertex,
                tail: pnorm * tail_min / lead,
                cubic: pnorm.powi(3) / lead,
                bump: eps * (-3.0 * eps * b.l_min).exp() / lead,
            }
        })
        .collect();
    let mut internal = Vec::new();
    for &e in &sel.selected {
        let EdgeShape::Internal {
            minus,
            plus,
            half_length,
        } = g.edges[e].shape
        else {
            continue;
        };
        let lead = (-eps * half_length).exp();
        let bj = sel.boundary_of(minus).expect("boundary");
        let bk = sel.boundary_of(plus).expect("boundary");
        let rival = |b: &crate::graph::BoundaryVertex| {
            b.pendants
                .iter()
                .chain(&b.loops)
                .map(|&x| (-eps * g.edges[x].size()).exp() / lead)
                .fold(0.0, f64::max)
        };
        internal.push(InternalAudit {
            edge: e,
            ratios: [
                pnorm * tail_min / lead,
                pnorm.powi(3) / lead,
                eps * (-3.0 * eps * bj.l_min).exp() / lead,
                eps * (-3.0 * eps * bk.l_min).exp() / lead,
                rival(bj),
                rival(bk),
            ],
        });
    }
    AuditReport { vertices, internal }
}

/// `sinh(d')/sinh(L)` with `d' = L - d`, i.e. the harmonic profile equal to
/// `1` at distance `0` and `0` at distance `L`, evaluated without overflow.
fn sinh_ratio(l: f64, d: f64) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    ((-d).exp() - (-(2.0 * l - d)).exp()) / (1.0 - (-2.0 * l).exp())
}

/// `cosh(z)/cosh(L)` for `|z| ≤ L` without overflow.
fn cosh_ratio(z: f64, l: f64) -> f64 {
    let z = z.abs();
    (z - l).exp() * (1.0 + (-2.0 * z).exp()) / (1.0 + (-2.0 * l).exp())
}

/// `tanh` written out to keep large arguments finite.
fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// Remainder vertex values: boundary values are the `p_j`, the others solve
/// the Kirchhoff conditions for harmonic (`w'' = w`) edge profiles.
fn remainder_vertex_values(
    scaled: &MetricGraph,
    sel: &EdgeSelection,
    data: &AsymptoticData,
) -> Result<Vec<f64>> {
    let nv = scaled.vertices.len();
    let mut known: Vec<Option<f64>> = vec![None; nv];
    for (v, p) in data.vertices.iter().zip(&data.p) {
        known[*v] = Some(*p);
    }
    let unknown: Vec<VertexId> = (0..nv).filter(|&v| known[v].is_none()).collect();
    let idx = |v: VertexId| unknown.iter().position(|&w| w == v);
    let n = unknown.len();
    let mut a = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for (e, edge) in scaled.edges.iter().enumerate() {
        if sel.contains(e) {
            continue;
        }
        match edge.shape {
            EdgeShape::Pendant { vertex, length } => {
                if let Some(i) = idx(vertex) {
                    a[(i, i)] -= tanh(length);
                }
            }
            EdgeShape::Looping {
                vertex,
                half_length,
            } => {
                if let Some(i) = idx(vertex) {
                    a[(i, i)] -= 2.0 * tanh(half_length);
                }
            }
            EdgeShape::HalfLine { vertex } => {
                if let Some(i) = idx(vertex) {
                    a[(i, i)] -= 1.0;
                }
            }
            EdgeShape::Internal {
                minus,
                plus,
                half_length,
            } => {
                let len = 2.0 * half_length;
                let coth = 1.0 / tanh(len);
                let csch = 2.0 * (-len).exp() / (1.0 - (-2.0 * len).exp());
                for (here, there) in [(minus, plus), (plus, minus)] {
                    let Some(i) = idx(here) else { continue };
                    a[(i, i)] -= coth;
                    match idx(there) {
                        Some(j) => a[(i, j)] += csch,
                        None => rhs[i] -= csch * known[there].unwrap_or(0.0),
                    }
                }
            }
        }
    }
    let solved = if n == 0 {
        DVector::zeros(0)
    } else {
        a.lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("remainder vertex system".into()))?
    };
    Ok((0..nv)
        .map(|v| known[v].unwrap_or_else(|| solved[idx(v).expect("unknown")]))
        .collect())
}

/// Sech bumps with harmonic corrections on selected edges, harmonic
/// small-amplitude profiles on the remainder. Continuous at every vertex.
pub fn build_initial_guess(
    grid: &Arc<GraphGrid>,
    sel: &EdgeSelection,
    data: &AsymptoticData,
) -> Result<GraphFunction> {
    let scaled = &grid.graph;
    let w = remainder_vertex_values(scaled, sel, data)?;
    let mut values = vec![0.0; grid.n];
    values[..grid.nv].copy_from_slice(&w);
    for eg in &grid.edges {
        let e = eg.edge;
        let edge = &scaled.edges[e];
        let profile: Box<dyn Fn(f64) -> f64> = match (edge.shape.clone(), sel.contains(e)) {
            (EdgeShape::Pendant { vertex, length }, true) => {
                let c = w[vertex] - soliton(length);
                Box::new(move |z| soliton(z) + c * cosh_ratio(z, length))
            }
            (
                EdgeShape::Looping {
                    vertex,
                    half_length,
                },
                true,
            ) => {
                let c = w[vertex] - soliton(half_length);
                Box::new(move |z| soliton(z) + c * cosh_ratio(z, half_length))
            }
            (
                EdgeShape::Internal {
                    minus,
                    plus,
                    half_length: l,
                },
                true,
            ) => {
                let a = data.offset_of(e).unwrap_or(0.0);
                let cm = w[minus] - soliton(l + a);
                let cp = w[plus] - soliton(l - a);
                Box::new(move |z| {
                    soliton(z - a)
                        + cm * sinh_ratio(2.0 * l, z + l)
                        + cp * sinh_ratio(2.0 * l, l - z)
                })
            }
            (EdgeShape::Pendant { vertex, length }, false) => {
                let c = w[vertex];
                Box::new(move |z| c * cosh_ratio(z, length))
            }
            (
                EdgeShape::Looping {
                    vertex,
                    half_length,
                },
                false,
            ) => {
                let c = w[vertex];
                Box::new(move |z| c * cosh_ratio(z, half_length))
            }
            (
                EdgeShape::Internal {
                    minus,
                    plus,
                    half_length: l,
                },
                false,
            ) => {
                let (cm, cp) = (w[minus], w[plus]);
                Box::new(move |z| cm * sinh_ratio(2.0 * l, z + l) + cp * sinh_ratio(2.0 * l, l - z))
            }
            (EdgeShape::HalfLine { vertex }, _) => {
                let c = w[vertex];
                Box::new(move |z| c * (-z).exp())
            }
        };
        for k in 1..eg.intervals {
            if let Some(i) = eg.node(k) {
                values[i] = profile(eg.z(k));
            }
        }
        if eg.left == crate::grid::End::Terminal {
            values[eg.start] = profile(eg.z(0));
        }
    }
    Ok(GraphFunction {
        grid: Arc::clone(grid),
        values,
        eps: data.eps,
    })
}
