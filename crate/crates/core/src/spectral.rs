//! The linearised operator `L = -Δ + 1 - 6U²` about a computed state, its
//! inertia, the Robin homotopy between Kirchhoff and Dirichlet conditions at
//! boundary vertices, and the decoupled Dirichlet problems.
//!
//! Eigenvalues are those of the pencil `K - λM` with the lumped mass `M`, so
//! they approximate the continuous spectrum directly.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EdgeIndex, EdgeKind, EdgeSelection, VertexId};
use crate::grid::{End, GraphFunction};
use crate::linalg::{
    count_below, dense_pencil_eigenvalues, pencil_bounds, pencil_eigenvalue, pencil_inertia,
    ArrowMatrix, Inertia,
};
use crate::phase::{
    count_sign_changes, even_solution, linearized_pair, shoot_bump, shoot_dirichlet_full,
    BumpSolution,
};
use crate::solver::jacobian;

/// Half-width of the zero window.
///
/// Selected loops carry odd modes with eigenvalues near `3pq`, and pulses
/// far from Neumann ends carry translation modes of similar exponential
/// smallness; both are genuinely nonzero and stable under grid refinement.
/// The window sits an order of magnitude above the rounding floor of the
/// pencil at `h = 0.02`.
pub const LAMBDA_TOL: f64 = 1e-11;
/// Lower bound the remainder spectrum must clear.
pub const REMAINDER_MARGIN: f64 = 0.5;
/// Relative terminal value below which a shot solution counts as an
/// eigenfunction.
pub const STURM_ZERO_TOL: f64 = 1e-8;
const EIGEN_TOL: f64 = 1e-13;

/// Robin parameter at one boundary vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Robin {
    Finite(f64),
    /// Dirichlet condition.
    Infinite,
}

impl Robin {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Robin::Infinite)
    }

    fn scaled(self, factor: f64) -> Robin {
        match self {
            Robin::Finite(a) => Robin::Finite(a * factor),
            Robin::Infinite => Robin::Infinite,
        }
    }
}

impl fmt::Display for Robin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Robin::Finite(a) => write!(f, "{a}"),
            Robin::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Robin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Robin> {
        let t = s.trim();
        if matches!(t, "inf" | "Inf" | "infinity" | "∞") {
            return Ok(Robin::Infinite);
        }
        let a: f64 = t
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad Robin parameter `{s}`")))?;
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Robin parameter must be nonnegative or `inf`, got `{s}`"
            )));
        }
        Ok(Robin::Finite(a))
    }
}

/// Robin data over the boundary vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinSpec {
    pub vertices: Vec<VertexId>,
    pub alpha: Vec<Robin>,
}

impl RobinSpec {
    pub fn new(vertices: Vec<VertexId>, alpha: Vec<Robin>) -> Result<RobinSpec> {
        if vertices.len() != alpha.len() {
            return Err(Error::InvalidParameter(format!(
                "{} Robin parameters for {} boundary vertices",
                alpha.len(),
                vertices.len()
            )));
        }
        if let Some(a) = alpha
            .iter()
            .find(|a| matches!(a, Robin::Finite(x) if !(*x >= 0.0) || !x.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "negative Robin parameter {a}"
            )));
        }
        Ok(RobinSpec { vertices, alpha })
    }

    /// Kirchhoff conditions everywhere.
    pub fn neumann(sel: &EdgeSelection) -> RobinSpec {
        Self::uniform(sel, Robin::Finite(0.0))
    }

    pub fn dirichlet(sel: &EdgeSelection) -> RobinSpec {
        Self::uniform(sel, Robin::Infinite)
    }

    pub fn uniform(sel: &EdgeSelection, a: Robin) -> RobinSpec {
        let vertices: Vec<VertexId> = sel.boundary.iter().map(|b| b.vertex).collect();
        let alpha = vec![a; vertices.len()];
        RobinSpec { vertices, alpha }
    }
}

/// A discretised operator: stiffness-plus-potential matrix, lumped mass and
/// the grid node behind every row.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub matrix: ArrowMatrix,
    pub mass: Vec<f64>,
    /// Grid node of each matrix index.
    pub nodes: Vec<usize>,
}

impl LinearOperator {
    pub fn dim(&self) -> usize {
        self.matrix.active_dim()
    }

    /// Pencil inertia by factorisation with the zero window `|λ| ≤ tol`.
    pub fn inertia(&self, tol: f64) -> Result<Inertia> {
        pencil_inertia(&self.matrix, &self.mass, tol)
    }

    /// Same counts from a dense eigensolve.
    pub fn dense_inertia(&self, tol: f64) -> Inertia {
        let ev = self.dense_eigenvalues();
        let negative = ev.iter().filter(|&&x| x < -tol).count();
        let zero = ev.iter().filter(|&&x| x.abs() <= tol).count();
        Inertia {
            negative,
            zero,
            positive: ev.len() - negative - zero,
        }
    }

    pub fn dense_eigenvalues(&self) -> Vec<f64> {
        dense_pencil_eigenvalues(&self.matrix, &self.mass)
    }

    /// Number of eigenvalues below `sigma`.
    pub fn count_below(&self, sigma: f64) -> Result<usize> {
        count_below(&self.matrix, &self.mass, sigma)
    }

    /// The `index`-th eigenvalue (0-based, ascending).
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index >= self.dim() {
            return Err(Error::InvalidParameter(format!(
                "eigenvalue {index} requested from an operator of dimension {}",
                self.dim()
            )));
        }
        pencil_eigenvalue(
            &self.matrix,
            &self.mass,
            index,
            pencil_bounds(&self.matrix, &self.mass),
            EIGEN_TOL,
        )
    }

    pub fn lowest(&self, count: usize) -> Result<Vec<f64>> {
        (0..count.min(self.dim()))
            .map(|i| self.eigenvalue(i))
            .collect()
    }

    /// The eigenvalue of smallest magnitude.
    pub fn nearest_to_zero(&self) -> Result<f64> {
        let dim = self.dim();
        if dim == 0 {
            return Ok(f64::INFINITY);
        }
        let n = self.count_below(0.0)?;
        let below = if n > 0 {
            Some(self.eigenvalue(n - 1)?)
        } else {
            None
        };
        let above = if n < dim {
            Some(self.eigenvalue(n)?)
        } else {
            None
        };
        Ok(match (below, above) {
            (Some(a), Some(b)) if a.abs() < b.abs() => a,
            (_, Some(b)) => b,
            (Some(a), None) => a,
            (None, None) => f64::INFINITY,
        })
    }
}

/// `L` with Robin data at the boundary vertices; `α = ∞` eliminates the
/// vertex unknown.
pub fn assemble_linearized(u: &GraphFunction, spec: &RobinSpec) -> Result<LinearOperator> {
    assemble_linearized_with(u, spec, false)
}

/// As [`assemble_linearized`]; with `terminal_dirichlet` the free ends of
/// pendant edges carry a Dirichlet instead of a Neumann condition.
pub fn assemble_linearized_with(
    u: &GraphFunction,
    spec: &RobinSpec,
    terminal_dirichlet: bool,
) -> Result<LinearOperator> {
    let grid = &u.grid;
    let mut k = jacobian(u, 1.0);
    for (&v, &a) in spec.vertices.iter().zip(&spec.alpha) {
        if v >= grid.nv {
            return Err(Error::InvalidParameter(format!(
                "vertex index {v} out of range"
            )));
        }
        match a {
            Robin::Finite(a) => k.diag[v] += a,
            Robin::Infinite => k.fixed[v] = true,
        }
    }
    if !terminal_dirichlet {
        return Ok(LinearOperator {
            mass: grid.mass.clone(),
            nodes: (0..grid.n).collect(),
            matrix: k,
        });
    }
    let all: Vec<usize> = (0..grid.edges.len()).collect();
    let vertices: Vec<usize> = (0..grid.nv).collect();
    let trim: Vec<usize> = grid
        .edges
        .iter()
        .filter(|eg| eg.left == End::Terminal)
        .map(|eg| eg.edge)
        .collect();
    Ok(operator_from(&k, &grid.mass, &all, &vertices, &trim))
}

fn operator_from(
    k: &ArrowMatrix,
    mass: &[f64],
    chains: &[usize],
    vertices: &[usize],
    trim: &[usize],
) -> LinearOperator {
    let (matrix, nodes) = k.restrict_mapped(chains, vertices, trim);
    LinearOperator {
        mass: nodes.iter().map(|&i| mass[i]).collect(),
        nodes,
        matrix,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub inertia: Inertia,
    pub dim: usize,
    /// Lowest `2N + 4` eigenvalues.
    pub lowest: Vec<f64>,
    pub nearest: f64,
    /// `h²`, the size of the discretisation error in the eigenvalues.
    pub grid_error: f64,
    pub lambda_tol: f64,
}

impl SpectralReport {
    /// `(n, z)`.
    pub fn morse(&self) -> (usize, usize) {
        (self.inertia.negative, self.inertia.zero)
    }

    /// The nearest eigenvalue clears ten times the grid error.
    pub fn resolved(&self) -> bool {
        self.nearest.abs() > 10.0 * self.grid_error
    }
}

pub fn spectral_report(
    op: &LinearOperator,
    count: usize,
    h: f64,
    tol: f64,
) -> Result<SpectralReport> {
    Ok(SpectralReport {
        inertia: op.inertia(tol)?,
        dim: op.dim(),
        lowest: op.lowest(count)?,
        nearest: op.nearest_to_zero()?,
        grid_error: h * h,
        lambda_tol: tol,
    })
}

/// `n(L)` and `z(L)` with Kirchhoff conditions everywhere.
pub fn morse_index(u: &GraphFunction, sel: &EdgeSelection) -> Result<SpectralReport> {
    morse_index_with(u, sel, LAMBDA_TOL)
}

/// [`morse_index`] with an explicit zero window.
pub fn morse_index_with(
    u: &GraphFunction,
    sel: &EdgeSelection,
    tol: f64,
) -> Result<SpectralReport> {
    let op = assemble_linearized(u, &RobinSpec::neumann(sel))?;
    spectral_report(&op, 2 * sel.len() + 4, u.grid.h_max, tol)
}

/// `{0} ∪ {2^k : k = -2..8} ∪ {∞}`.
pub fn alpha_grid() -> Vec<Robin> {
    std::iter::once(Robin::Finite(0.0))
        .chain((-2..=8).map(|k| Robin::Finite(2f64.powi(k))))
        .chain(std::iter::once(Robin::Infinite))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyOptions {
    /// Increasing grid of ray parameters `t`; the ray point is `t · d`.
    pub grid: Vec<Robin>,
    /// Random directions `d` in addition to the uniform one.
    pub random_rays: usize,
    pub seed: u64,
    /// Smallest admissible `|λ|` along the trace.
    pub gap: f64,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        Self {
            grid: alpha_grid(),
            random_rays: 8,
            seed: 0,
            gap: LAMBDA_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyPoint {
    /// `0` for the uniform ray.
    pub ray: usize,
    pub t: Robin,
    pub alpha: Vec<Robin>,
    pub inertia: Inertia,
    pub nearest: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyTrace {
    pub points: Vec<HomotopyPoint>,
    pub min_gap: f64,
    /// `(n, z)` is the same at every point.
    pub constant: bool,
    pub endpoints_agree: bool,
    pub pass: bool,
}

/// Inertia and nearest eigenvalue along rays `α = t d` from Kirchhoff to
/// Dirichlet conditions at the boundary vertices.
pub fn homotopy_scan(
    u: &GraphFunction,
    sel: &EdgeSelection,
    opts: &HomotopyOptions,
) -> Result<HomotopyTrace> {
    let base = RobinSpec::neumann(sel);
    let nb = base.vertices.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rays = vec![vec![1.0; nb]];
    for _ in 0..opts.random_rays {
        rays.push((0..nb).map(|_| rng.gen_range(-2.0f64..2.0).exp()).collect());
    }
    let jobs: Vec<(usize, Robin)> = (0..rays.len())
        .flat_map(|r| opts.grid.iter().map(move |&t| (r, t)))
        .collect();
    let points: Vec<HomotopyPoint> = jobs
        .par_iter()
        .map(|&(ray, t)| {
            let alpha: Vec<Robin> = rays[ray]
                .iter()
                .map(|&d| match t {
                    Robin::Finite(x) => Robin::Finite(x * d),
                    Robin::Infinite => Robin::Infinite,
                })
                .collect();
            let spec = RobinSpec::new(base.vertices.clone(), alpha.clone())?;
            let op = assemble_linearized(u, &spec)?;
            Ok(HomotopyPoint {
                ray,
                t,
                alpha,
                inertia: op.inertia(LAMBDA_TOL)?,
                nearest: op.nearest_to_zero()?,
            })
        })
        .collect::<Result<_>>()?;
    let nz = |p: &HomotopyPoint| (p.inertia.negative, p.inertia.zero);
    let min_gap = points
        .iter()
        .map(|p| p.nearest.abs())
        .fold(f64::INFINITY, f64::min);
    let constant = points.iter().all(|p| nz(p) == nz(&points[0]));
    let at = |t: fn(&Robin) -> bool| points.iter().filter(move |p| p.ray == 0 && t(&p.t)).map(nz);
    let zero: Vec<_> = at(|t| *t == Robin::Finite(0.0)).collect();
    let inf: Vec<_> = at(Robin::is_infinite).collect();
    let endpoints_agree = !zero.is_empty() && !inf.is_empty() && zero[0] == inf[0];
    Ok(HomotopyTrace {
        pass: min_gap > opts.gap && constant && endpoints_agree,
        points,
        min_gap,
        constant,
        endpoints_agree,
    })
}

/// Uniform ray only, for quick traces.
pub fn uniform_trace(
    u: &GraphFunction,
    sel: &EdgeSelection,
    grid: &[Robin],
) -> Result<HomotopyTrace> {
    homotopy_scan(
        u,
        sel,
        &HomotopyOptions {
            grid: grid.to_vec(),
            random_rays: 0,
            ..HomotopyOptions::default()
        },
    )
}

/// Sturm count of the Dirichlet problem on one selected edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SturmCount {
    /// Negative Dirichlet eigenvalues.
    pub count: usize,
    pub zero_eigenvalue: bool,
    /// Terminal value of the shot solution relative to its maximum.
    pub terminal: f64,
}

/// Shoot `-w'' + w - 6u²w = 0` across the edge and count interior zeros.
///
/// `symmetric`: looping edge on the reflected profile with Dirichlet at both
/// ends; otherwise a pendant with a Neumann end at the maximum.
pub fn sturm_count_edge(b: &BumpSolution, symmetric: bool) -> SturmCount {
    let w = if symmetric {
        shoot_dirichlet_full(b)
    } else {
        even_solution(b).0
    };
    let n = w.len();
    let scale = w.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let terminal = w[n - 1] / scale;
    SturmCount {
        count: count_sign_changes(&w[1..n - 1]),
        zero_eigenvalue: terminal.abs() < STURM_ZERO_TOL,
        terminal,
    }
}

/// Decoupled Dirichlet block of one edge (every vertex eliminated).
pub fn edge_block(u: &GraphFunction, e: EdgeIndex) -> LinearOperator {
    let k = jacobian(u, 1.0);
    operator_from(&k, &u.grid.mass, &[e], &[], &[])
}

/// Block on the complement of the selection with Dirichlet data at the
/// boundary vertices.
pub fn remainder_operator(u: &GraphFunction, sel: &EdgeSelection) -> LinearOperator {
    let k = jacobian(u, 1.0);
    let (chains, vertices) = remainder_parts(u, sel);
    operator_from(&k, &u.grid.mass, &chains, &vertices, &[])
}

fn remainder_parts(u: &GraphFunction, sel: &EdgeSelection) -> (Vec<usize>, Vec<usize>) {
    let chains = (0..u.grid.edges.len())
        .filter(|&e| !sel.contains(e))
        .collect();
    let vertices = (0..u.grid.nv).filter(|&v| !sel.is_boundary(v)).collect();
    (chains, vertices)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderReport {
    /// `+∞` when the remainder is empty.
    pub lambda_min: f64,
    pub margin: f64,
    pub positive: bool,
}

pub fn remainder_positivity(u: &GraphFunction, sel: &EdgeSelection) -> Result<RemainderReport> {
    let op = remainder_operator(u, sel);
    let lambda_min = if op.dim() == 0 {
        f64::INFINITY
    } else {
        op.eigenvalue(0)?
    };
    Ok(RemainderReport {
        lambda_min,
        margin: REMAINDER_MARGIN,
        positive: lambda_min > REMAINDER_MARGIN,
    })
}

/// Edge-by-edge bookkeeping of `L` with Dirichlet conditions on `V_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletDecoupling {
    /// `(edge, discrete block negative count, Sturm count)`.
    pub edges: Vec<(EdgeIndex, usize, Option<SturmCount>)>,
    pub remainder: Inertia,
    pub full: Inertia,
}

impl DirichletDecoupling {
    /// Block counts add up to the full count.
    pub fn consistent(&self) -> bool {
        let blocks: usize = self.edges.iter().map(|e| e.1).sum();
        blocks + self.remainder.negative == self.full.negative
    }

    /// Sturm counts agree with the discrete blocks on every edge where the
    /// shooting is defined.
    pub fn sturm_agrees(&self) -> bool {
        self.edges
            .iter()
            .all(|(_, n, s)| s.map_or(true, |s| s.count == *n))
    }
}

pub fn dirichlet_decoupling(u: &GraphFunction, sel: &EdgeSelection) -> Result<DirichletDecoupling> {
    let grid = &u.grid;
    let mut edges = Vec::with_capacity(sel.len());
    for &e in &sel.selected {
        let block = edge_block(u, e).inertia(LAMBDA_TOL)?;
        let edge = &grid.graph.edges[e];
        let sturm = match edge.kind() {
            EdgeKind::Looping | EdgeKind::Pendant => {
                let v = edge.ends()[0];
                let symmetric = edge.kind() == EdgeKind::Looping;
                shoot_bump(edge.size(), u.vertex_value(v))
                    .ok()
                    .map(|b| sturm_count_edge(&b, symmetric))
            }
            _ => None,
        };
        edges.push((e, block.negative, sturm));
    }
    let remainder = remainder_operator(u, sel).inertia(LAMBDA_TOL)?;
    let full = assemble_linearized(u, &RobinSpec::dirichlet(sel))?.inertia(LAMBDA_TOL)?;
    Ok(DirichletDecoupling {
        edges,
        remainder,
        full,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexCertificate {
    pub vertex: VertexId,
    /// `α_±(e)` for every selected edge-end at the vertex.
    pub edge_alphas: Vec<(EdgeIndex, f64)>,
    /// Remainder Neumann datum for unit Dirichlet datum at this vertex.
    pub q: f64,
    /// Its leading-order value `D_j`.
    pub q_leading: f64,
    /// `Σ α_± - q`, the only Robin parameter admitting a kernel.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub vertices: Vec<VertexCertificate>,
    /// Every `α_±(e) < 0` and every vertex sum `< 0`.
    pub holds: bool,
}

/// Endpoint ratios from the even linearised solution on each selected edge
/// plus the remainder's discrete Dirichlet-to-Neumann diagonal.
pub fn robin_certificate(u: &GraphFunction, sel: &EdgeSelection) -> Result<CertificateReport> {
    let grid = &u.grid;
    let k = jacobian(u, 1.0);
    let (chains, free) = remainder_parts(u, sel);
    let rem = operator_from(&k, &grid.mass, &chains, &free, &[]);
    let mut inverse = vec![usize::MAX; grid.n];
    for (i, &node) in rem.nodes.iter().enumerate() {
        inverse[node] = i;
    }
    let mut vertices = Vec::with_capacity(sel.boundary.len());
    for b in &sel.boundary {
        let v = b.vertex;
        let pv = u.vertex_value(v);
        let mut edge_alphas = Vec::new();
        for &e in b.pendants.iter().chain(&b.loops) {
            let edge = &grid.graph.edges[e];
            let pair = linearized_pair(&shoot_bump(edge.size(), pv)?)?;
            let ends = if edge.kind() == EdgeKind::Looping {
                2
            } else {
                1
            };
            for _ in 0..ends {
                edge_alphas.push((e, -pair.even_ratio));
            }
        }
        if b.m() > 0 {
            return Err(Error::InvalidSelection(
                "the endpoint certificate covers pendant and looping edges only".into(),
            ));
        }
        // Remainder edge-ends at v: (adjacent node, step).
        let mut ends = Vec::new();
        for &e in &chains {
            let eg = grid.edge_grid(e);
            if eg.left == End::Vertex(v) {
                ends.push((eg.node(1), eg.h));
            }
            if eg.right == End::Vertex(v) {
                ends.push((eg.node(eg.intervals - 1), eg.h));
            }
        }
        let q = if ends.is_empty() {
            0.0
        } else {
            let mut rhs = vec![0.0; rem.nodes.len()];
            for &(node, h) in &ends {
                if let Some(n) = node {
                    rhs[inverse[n]] += 1.0 / h;
                }
            }
            let w = rem.matrix.solve(&rhs)?;
            let pot = 1.0 - 6.0 * pv * pv;
            ends.iter()
                .map(|&(node, h)| {
                    let wn = node.map_or(0.0, |n| w[inverse[n]]);
                    (1.0 - wn) / h + 0.5 * h * pot
                })
                .sum()
        };
        let alpha = edge_alphas.iter().map(|x| x.1).sum::<f64>() - q;
        vertices.push(VertexCertificate {
            vertex: v,
            edge_alphas,
            q,
            q_leading: b.remainder_degree as f64,
            alpha,
        });
    }
    let holds = vertices
        .iter()
        .all(|c| c.alpha < 0.0 && c.edge_alphas.iter().all(|x| x.1 < 0.0));
    Ok(CertificateReport { vertices, holds })
}

/// Lowest eigenvalues with Neumann and with Dirichlet conditions at the
/// pendant terminals.
#[derive(Debug, Clone, PartialEq)]
pub struct Interlacing {
    pub neumann: Vec<f64>,
    pub dirichlet: Vec<f64>,
    /// `λ_k^N ≤ λ_k^D ≤ λ_{k+1}^N` for every listed `k`, up to a relative
    /// slack of 1e-9. Strict gaps can be exponentially small in ε.
    pub holds: bool,
}

pub fn interlacing(u: &GraphFunction, sel: &EdgeSelection, count: usize) -> Result<Interlacing> {
    let spec = RobinSpec::neumann(sel);
    let neumann = assemble_linearized_with(u, &spec, false)?.lowest(count + 1)?;
    let dirichlet = assemble_linearized_with(u, &spec, true)?.lowest(count)?;
    let slack = 1e-9;
    let holds = dirichlet.iter().enumerate().all(|(k, &d)| {
        neumann[k] <= d + slack * (1.0 + d.abs())
            && neumann
                .get(k + 1)
                .map_or(true, |&n| d <= n + slack * (1.0 + n.abs()))
    });
    Ok(Interlacing {
        neumann,
        dirichlet,
        holds,
    })
}

/// Scale all finite entries of a Robin vector.
pub fn scale_alpha(alpha: &[Robin], factor: f64) -> Vec<Robin> {
    alpha.iter().map(|a| a.scaled(factor)).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::{build_selection, EdgeShape, MetricGraph};
    use crate::grid::GraphGrid;
    use crate::phase::soliton;
    use crate::solver::function_on;

    fn segment(len: f64, h: f64) -> Arc<GraphGrid> {
        let mut g = MetricGraph::new();
        let v = g.add_vertex("v");
        g.add_edge(
            "p",
            EdgeShape::Pendant {
                vertex: v,
                length: len,
            },
        );
        g.add_edge(
            "q",
            EdgeShape::Pendant {
                vertex: v,
                length: len,
            },
        );
        Arc::new(GraphGrid::new(&g, h).unwrap())
    }

    #[test]
    fn free_operator_is_positive() {
        let grid = segment(3.0, 0.05);
        let u = GraphFunction::zeros(grid, 1.0);
        let spec = RobinSpec::new(vec![], vec![]).unwrap();
        let op = assemble_linearized(&u, &spec).unwrap();
        let i = op.inertia(LAMBDA_TOL).unwrap();
        assert_eq!((i.negative, i.zero, i.positive), (0, 0, op.dim()));
        assert!((op.eigenvalue(0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn poschl_teller() {
        // Two pendants glued at their common vertex form the interval
        // [-12, 12]; the soliton centred at the vertex.
        let grid = segment(12.0, 0.02);
        let mut values = vec![0.0; grid.n];
        for eg in &grid.edges {
            for k in 0..=eg.intervals {
                if let Some(i) = eg.node(k) {
                    values[i] = soliton(eg.length() - eg.z(k));
                }
            }
        }
        let u = function_on(&grid, 1.0, values);
        let op = assemble_linearized(&u, &RobinSpec::new(vec![], vec![]).unwrap()).unwrap();
        let low = op.lowest(2).unwrap();
        assert!((low[0] + 3.0).abs() < 5e-3, "{low:?}");
        assert!(low[1].abs() < 5e-3, "{low:?}");
        let dense = op.dense_eigenvalues();
        assert!((dense[0] - low[0]).abs() < 1e-9 && (dense[1] - low[1]).abs() < 1e-9);
    }

    #[test]
    fn robin_parsing() {
        assert_eq!("inf".parse::<Robin>().unwrap(), Robin::Infinite);
        assert_eq!("2.5".parse::<Robin>().unwrap(), Robin::Finite(2.5));
        assert!("-1".parse::<Robin>().is_err());
        assert_eq!(alpha_grid().len(), 13);
        assert_eq!(alpha_grid()[1], Robin::Finite(0.25));
    }

    #[test]
    fn dirichlet_terminals_drop_rows() {
        let grid = segment(2.0, 0.1);
        let u = GraphFunction::zeros(grid.clone(), 1.0);
        let spec = RobinSpec::new(vec![], vec![]).unwrap();
        let n = assemble_linearized_with(&u, &spec, false).unwrap();
        let d = assemble_linearized_with(&u, &spec, true).unwrap();
        assert_eq!(n.dim(), d.dim() + 2);
        // −D² + 1 on [-2, 2]: Dirichlet ground state 1 + (π/4)²
        let l0 = d.eigenvalue(0).unwrap();
        assert!(
            (l0 - 1.0 - (std::f64::consts::PI / 4.0).powi(2)).abs() < 2e-3,
            "{l0}"
        );
    }

    #[test]
    fn flower_morse_homotopy_and_certificate() {
        use crate::asymptotic::{build_initial_guess, dirichlet_data};
        use crate::solver::newton_solve;
        let mut g = MetricGraph::new();
        let v = g.add_vertex("v");
        for i in 0..3 {
            g.add_edge(
                format!("e{}", i + 1),
                EdgeShape::Looping {
                    vertex: v,
                    half_length: 1.0,
                },
            );
        }
        g.add_edge("h", EdgeShape::HalfLine { vertex: v });
        let sel = build_selection(&g, &["e1", "e2"]).unwrap();
        let eps = 6.0;
        let d = dirichlet_data(&g, &sel, eps, None).unwrap();
        let grid = Arc::new(GraphGrid::new(&g.scale(eps).unwrap(), 0.05).unwrap());
        let (u, _) = newton_solve(&build_initial_guess(&grid, &sel, &d).unwrap(), 1e-10).unwrap();
        let r = morse_index(&u, &sel).unwrap();
        assert_eq!(r.morse(), (2, 0));
        let trace = uniform_trace(&u, &sel, &alpha_grid()).unwrap();
        assert!(trace.pass, "{trace:?}");
        let c = robin_certificate(&u, &sel).unwrap();
        assert!(c.holds, "{c:?}");
        assert!((c.vertices[0].q - 3.0).abs() < 0.05, "{}", c.vertices[0].q);
        let dd = dirichlet_decoupling(&u, &sel).unwrap();
        assert!(dd.consistent() && dd.sturm_agrees(), "{dd:?}");
        assert_eq!(dd.remainder.negative, 0);
        let rp = remainder_positivity(&u, &sel).unwrap();
        assert!(rp.positive && rp.lambda_min > 0.9, "{rp:?}");
    }
}
