//! Discrete stationary problem `-U'' + U - 2U³ = 0` on a scaled graph with
//! Neumann–Kirchhoff vertices, Newton's method, and diagnostics.
//!
//! The discretisation is the lumped piecewise-linear Galerkin one: with
//! stiffness `S` and lumped mass `M` the discrete energy gradient is
//! `G(U) = S U + M (c U - 2U³)`. At interior nodes `G / h` is the classical
//! central difference scheme; at a vertex `G` is the Kirchhoff sum of
//! one-sided outgoing derivatives corrected by the equation, which keeps the
//! scheme second order. The Jacobian `S + M diag(c - 6U²)` is symmetric and
//! is the discrete linearised operator used by the spectral module.

use std::sync::Arc;

use log::{debug, info};

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, EdgeSelection, VertexId};
use crate::grid::{End, GraphFunction, GraphGrid};
use crate::linalg::ArrowMatrix;
use crate::phase::shoot_bump;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 50;
const MIN_STEP: f64 = 1.0 / 1024.0;

/// Energy gradient `S U + M (c U - 2U³)`.
pub fn energy_gradient(u: &GraphFunction, coef: f64) -> Vec<f64> {
    let grid = &u.grid;
    let mut g: Vec<f64> = u
        .values
        .iter()
        .zip(&grid.mass)
        .map(|(&x, &m)| m * (coef * x - 2.0 * x * x * x))
        .collect();
    for eg in &grid.edges {
        let inv_h = 1.0 / eg.h;
        for k in 0..eg.intervals {
            let a = eg.node(k);
            let b = eg.node(k + 1);
            let flux = (u.at(a) - u.at(b)) * inv_h;
            if let Some(a) = a {
                g[a] += flux;
            }
            if let Some(b) = b {
                g[b] -= flux;
            }
        }
    }
    g
}

/// Row scaling that turns the gradient into the residual: interior rows are
/// divided by their step, vertex and terminal rows are Kirchhoff defects.
fn row_scale(grid: &GraphGrid) -> Vec<f64> {
    let mut s = vec![1.0; grid.n];
    for eg in &grid.edges {
        for k in 1..eg.intervals {
            if let Some(i) = eg.node(k) {
                s[i] = 1.0 / eg.h;
            }
        }
    }
    s
}

/// Residual of the discrete problem with the scaled coefficient `c = 1`.
///
/// Interior nodes carry `-(U_{i-1} - 2U_i + U_{i+1})/h² + U_i - 2U_i³`;
/// vertex nodes carry the Kirchhoff defect `-Σ ∂U` (outgoing derivatives);
/// pendant terminals carry `-∂U` towards the edge.
pub fn assemble_residual(u: &GraphFunction) -> GraphFunction {
    u.with_values(residual_with(u, 1.0))
}

fn residual_with(u: &GraphFunction, coef: f64) -> Vec<f64> {
    let g = energy_gradient(u, coef);
    g.iter()
        .zip(row_scale(&u.grid))
        .map(|(g, s)| g * s)
        .collect()
}

/// `S + M diag(c - 6U²)`, the Jacobian of the gradient.
pub fn jacobian(u: &GraphFunction, coef: f64) -> ArrowMatrix {
    let d: Vec<f64> = u
        .values
        .iter()
        .zip(&u.grid.mass)
        .map(|(&x, &m)| m * (coef - 6.0 * x * x))
        .collect();
    u.grid.assemble(&d)
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Sup-norm residual before each iteration and after the last one.
    pub history: Vec<f64>,
    pub residual: f64,
    /// Kirchhoff defect per vertex.
    pub nk_defect: Vec<(VertexId, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Coefficient `c` of the linear term: `1` in scaled variables, `ε²`
    /// when the unscaled equation `-Φ'' + ε²Φ - 2Φ³ = 0` is solved directly.
    pub coef: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iterations: MAX_ITERATIONS,
            coef: 1.0,
        }
    }
}

/// Damped Newton from `u0` with residual-monotone backtracking.
pub fn newton_solve(u0: &GraphFunction, tol: f64) -> Result<(GraphFunction, SolveReport)> {
    solve_with(
        u0,
        NewtonOptions {
            tol,
            ..NewtonOptions::default()
        },
    )
}

/// Newton with explicit options. Non-convergence is an error carrying the
/// last residual.
pub fn solve_with(u0: &GraphFunction, opts: NewtonOptions) -> Result<(GraphFunction, SolveReport)> {
    let (u, report) = newton_iterate(u0, opts)?;
    if report.converged {
        Ok((u, report))
    } else {
        Err(Error::NoConvergence(format!(
            "residual {:.3e} after {} iterations",
            report.residual, report.iterations
        )))
    }
}

/// Newton iteration that always returns the final iterate and its report.
pub fn newton_iterate(
    u0: &GraphFunction,
    opts: NewtonOptions,
) -> Result<(GraphFunction, SolveReport)> {
    let coef = opts.coef;
    let scale = row_scale(&u0.grid);
    let mut u = u0.clone();
    let mut g = energy_gradient(&u, coef);
    let mut res = sup_norm(&scaled(&g, &scale));
    let mut history = vec![res];
    let mut iterations = 0;
    while res > opts.tol && iterations < opts.max_iterations {
        iterations += 1;
        let k = jacobian(&u, coef);
        let neg_g: Vec<f64> = g.iter().map(|x| -x).collect();
        let delta = k.solve(&neg_g)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u
                .values
                .iter()
                .zip(&delta)
                .map(|(x, d)| x + t * d)
                .collect();
            let cand = u.with_values(trial);
            let cg = energy_gradient(&cand, coef);
            let cres = sup_norm(&scaled(&cg, &scale));
            if cres < res || t <= MIN_STEP {
                if !cres.is_finite() {
                    return Err(Error::NoConvergence("residual overflow".into()));
                }
                u = cand;
                g = cg;
                res = cres;
                break;
            }
            t *= 0.5;
        }
        debug!("newton iteration {iterations}: step {t}, residual {res:.3e}");
        history.push(res);
    }
    let nk_defect = (0..u.grid.nv).map(|v| (v, g[v])).collect();
    info!("newton finished after {iterations} iterations, residual {res:.3e}");
    Ok((
        u,
        SolveReport {
            history,
            residual: res,
            nk_defect,
            iterations,
            converged: res <= opts.tol,
        },
    ))
}

fn scaled(g: &[f64], s: &[f64]) -> Vec<f64> {
    g.iter().zip(s).map(|(a, b)| a * b).collect()
}

/// Outcome of the qualitative checks on a computed state.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub min_value: f64,
    pub positive: bool,
    /// Interior local maxima per selected edge (pendants: at the terminal).
    pub selected_maxima: Vec<(String, usize, bool)>,
    pub localization_ok: bool,
    /// Remainder edges with an interior local maximum.
    pub remainder_maxima: Vec<String>,
    pub remainder_sup: f64,
    pub selected_sup_min: f64,
    pub bounds_ok: bool,
    /// `‖U‖_{L²(remainder)} / ‖U‖_{L²(selected)}`.
    pub concentration: f64,
}

impl PropertyReport {
    pub fn passes(&self) -> bool {
        self.positive && self.localization_ok && self.remainder_maxima.is_empty() && self.bounds_ok
    }

    pub fn failures(&self) -> Vec<String> {
        let mut f = Vec::new();
        if !self.positive {
            f.push(format!("not positive (min {:.3e})", self.min_value));
        }
        if !self.localization_ok {
            f.push("wrong localisation pattern on the selected edges".into());
        }
        if !self.remainder_maxima.is_empty() {
            f.push(format!(
                "interior maxima on remainder edges {:?}",
                self.remainder_maxima
            ));
        }
        if !self.bounds_ok {
            f.push(format!(
                "amplitude bounds violated (remainder sup {:.4}, selected sup min {:.4})",
                self.remainder_sup, self.selected_sup_min
            ));
        }
        f
    }
}

fn interior_maxima(values: &[f64]) -> usize {
    (1..values.len().saturating_sub(1))
        .filter(|&k| values[k] > values[k - 1] && values[k] >= values[k + 1])
        .count()
}

/// Check positivity, the one-peak-per-selected-edge pattern, absence of
/// remainder maxima, the `1/√2` amplitude split and report concentration.
pub fn verify_state(u: &GraphFunction, sel: &EdgeSelection) -> PropertyReport {
    let grid = &u.grid;
    let threshold = std::f64::consts::FRAC_1_SQRT_2;
    let min_value = u.values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let mut selected_maxima = Vec::new();
    let mut localization_ok = true;
    let mut remainder_maxima = Vec::new();
    let mut remainder_sup = 0.0f64;
    let mut selected_sup_min = f64::INFINITY;
    let mut rem_l2 = 0.0;
    let mut sel_l2 = 0.0;
    for (e, edge) in grid.graph.edges.iter().enumerate() {
        let vals: Vec<f64> = u.edge_samples(e).into_iter().map(|(_, x)| x).collect();
        let sup = vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let count = interior_maxima(&vals);
        if sel.contains(e) {
            sel_l2 += u.edge_l2_sq(e);
            selected_sup_min = selected_sup_min.min(sup);
            let ok = match edge.kind() {
                EdgeKind::Pendant => count == 0 && vals[0] > vals[1],
                _ => count == 1,
            };
            localization_ok &= ok;
            selected_maxima.push((edge.id.clone(), count, ok));
        } else {
            rem_l2 += u.edge_l2_sq(e);
            remainder_sup = remainder_sup.max(sup);
            if count > 0 {
                remainder_maxima.push(edge.id.clone());
            }
        }
    }
    PropertyReport {
        min_value,
        positive: min_value > 0.0,
        selected_maxima,
        localization_ok,
        remainder_maxima,
        remainder_sup,
        selected_sup_min,
        bounds_ok: remainder_sup < threshold && selected_sup_min > threshold,
        concentration: if sel_l2 > 0.0 {
            (rem_l2 / sel_l2).sqrt()
        } else {
            f64::INFINITY
        },
    }
}

/// Unscaled mass and energy of `Φ(x) = εU(εx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassEnergy {
    /// `(edge id, ‖Φ‖²_{L²(e)})`.
    pub edge_mass: Vec<(String, f64)>,
    pub total_mass: f64,
    pub energy: f64,
}

impl MassEnergy {
    pub fn mass_of(&self, id: &str) -> Option<f64> {
        self.edge_mass
            .iter()
            .find(|(e, _)| e == id)
            .map(|(_, m)| *m)
    }
}

/// Trapezoid masses `ε ∫ U²` per edge and `E = ε³ (∫U'² - ∫U⁴)`.
pub fn mass_energy(u: &GraphFunction) -> MassEnergy {
    let eps = u.eps;
    let grid = &u.grid;
    let mut edge_mass = Vec::with_capacity(grid.edges.len());
    let mut grad = 0.0;
    let mut quartic = 0.0;
    for eg in &grid.edges {
        let id = grid.graph.edges[eg.edge].id.clone();
        edge_mass.push((id, eps * u.edge_l2_sq(eg.edge)));
        for k in 0..eg.intervals {
            let a = u.at(eg.node(k));
            let b = u.at(eg.node(k + 1));
            grad += (b - a) * (b - a) / eg.h;
            quartic += 0.5 * eg.h * (a.powi(4) + b.powi(4));
        }
    }
    let total_mass = edge_mass.iter().map(|(_, m)| m).sum();
    MassEnergy {
        edge_mass,
        total_mass,
        energy: eps.powi(3) * (grad - quartic),
    }
}

/// Mass of a selected pendant or looping edge reconstructed from the phase
/// plane: the bump through the computed vertex value, integrated by
/// quadrature on its level set. Free of the grid's `O(h²)` floor.
pub fn bump_mass(u: &GraphFunction, e: usize) -> Result<f64> {
    let grid = &u.grid;
    let edge = &grid.graph.edges[e];
    let eg = grid.edge_grid(e);
    let (v, factor) = match (edge.kind(), eg.right) {
        (EdgeKind::Pendant, End::Vertex(v)) => (v, 1.0),
        (EdgeKind::Looping, End::Vertex(v)) => (v, 2.0),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "bump mass is defined for pendant and looping edges, not `{}`",
                edge.id
            )))
        }
    };
    let b = shoot_bump(edge.size(), u.vertex_value(v))?;
    Ok(u.eps * factor * b.half_mass())
}

/// Samples of `Φ(x) = εU(εx)` on the unscaled graph.
#[derive(Debug, Clone, PartialEq)]
pub struct UnscaledState {
    pub eps: f64,
    /// `(edge id, x, Φ)` per edge.
    pub edges: Vec<(String, Vec<f64>, Vec<f64>)>,
}

pub fn rescale_state(u: &GraphFunction) -> UnscaledState {
    let eps = u.eps;
    let edges = u
        .grid
        .edges
        .iter()
        .map(|eg| {
            let (x, phi) = u
                .edge_samples(eg.edge)
                .into_iter()
                .map(|(z, val)| (z / eps, eps * val))
                .unzip();
            (u.grid.graph.edges[eg.edge].id.clone(), x, phi)
        })
        .collect();
    UnscaledState { eps, edges }
}

impl UnscaledState {
    /// Back to scaled samples `(z, U)` per edge.
    pub fn to_scaled(&self) -> Vec<(String, Vec<f64>, Vec<f64>)> {
        self.edges
            .iter()
            .map(|(id, x, phi)| {
                (
                    id.clone(),
                    x.iter().map(|x| x * self.eps).collect(),
                    phi.iter().map(|p| p / self.eps).collect(),
                )
            })
            .collect()
    }
}

/// Wrap raw values on a grid into a function.
pub fn function_on(grid: &Arc<GraphGrid>, eps: f64, values: Vec<f64>) -> GraphFunction {
    GraphFunction {
        grid: Arc::clone(grid),
        values,
        eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_selection, EdgeShape, MetricGraph};
    use crate::phase::soliton;

    fn interval(half: f64) -> MetricGraph {
        // two pendants glued at a fake vertex: the interval [-half, half]
        let mut g = MetricGraph::new();
        let v = g.add_vertex("m");
        g.add_edge(
            "a",
            EdgeShape::Pendant {
                vertex: v,
                length: half,
            },
        );
        g.add_edge(
            "b",
            EdgeShape::Pendant {
                vertex: v,
                length: half,
            },
        );
        g
    }

    fn sample<F: Fn(usize, f64) -> f64>(grid: &Arc<GraphGrid>, f: F) -> GraphFunction {
        let mut values = vec![0.0; grid.n];
        for eg in &grid.edges {
            for k in 0..eg.points() {
                if let Some(i) = eg.node(k) {
                    values[i] = f(eg.edge, eg.z(k));
                }
            }
        }
        function_on(grid, 1.0, values)
    }

    #[test]
    fn zero_and_constant_states() {
        let grid = Arc::new(GraphGrid::new(&interval(3.0), 0.05).unwrap());
        let zero = GraphFunction::zeros(Arc::clone(&grid), 1.0);
        assert!(assemble_residual(&zero).values.iter().all(|&x| x == 0.0));
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let constant = sample(&grid, |_, _| c);
        let r = assemble_residual(&constant);
        assert!(r.values.iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn sech_residual_is_second_order() {
        // sech centred at the shared vertex, z = 12 on both pendants
        let mut errs = Vec::new();
        for h in [0.04, 0.02, 0.01] {
            let grid = Arc::new(GraphGrid::new(&interval(12.0), h).unwrap());
            let u = sample(&grid, |_, z| soliton(12.0 - z));
            let r = assemble_residual(&u);
            let interior = grid
                .edges
                .iter()
                .flat_map(|eg| (1..eg.intervals).filter_map(|k| eg.node(k)))
                .map(|i| r.values[i].abs())
                .fold(0.0, f64::max);
            errs.push(interior);
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 1.9 && order2 > 1.9, "{errs:?}");
    }

    #[test]
    fn newton_finds_the_discrete_soliton() {
        let grid = Arc::new(GraphGrid::new(&interval(10.0), 0.02).unwrap());
        let u0 = sample(&grid, |_, z| 1.1 * soliton(10.0 - z));
        let (u, rep) = newton_solve(&u0, 1e-10).unwrap();
        assert!(rep.converged && rep.iterations <= 8, "{rep:?}");
        assert!((u.vertex_value(0) - 1.0).abs() < 1e-3);
        // restarting at the solution is a fixed point
        let (u2, rep2) = newton_solve(&u, 1e-10).unwrap();
        assert_eq!(rep2.iterations, 0);
        assert_eq!(u2.values, u.values);
        // zero stays zero
        let (z, rep3) = newton_solve(&GraphFunction::zeros(Arc::clone(&grid), 1.0), 1e-10).unwrap();
        assert_eq!(rep3.iterations, 0);
        assert!(z.values.iter().all(|&x| x == 0.0));
        let g = interval(10.0);
        let sel = build_selection(&g, &["a"]).unwrap();
        assert!(!verify_state(&z, &sel).passes());
    }

    #[test]
    fn rescale_round_trip() {
        let grid = Arc::new(GraphGrid::new(&interval(4.0), 0.1).unwrap());
        let mut u = sample(&grid, |_, z| soliton(4.0 - z));
        u.eps = 3.0;
        let phi = rescale_state(&u);
        let back = phi.to_scaled();
        for (e, (_, z, vals)) in back.iter().enumerate() {
            let orig = u.edge_samples(e);
            for ((z0, v0), (z1, v1)) in orig.iter().zip(z.iter().zip(vals)) {
                assert!((z0 - z1).abs() < 1e-13 && (v0 - v1).abs() < 1e-15);
            }
        }
        let sup_phi = phi
            .edges
            .iter()
            .flat_map(|(_, _, p)| p)
            .fold(0.0f64, |a, &b| a.max(b));
        assert_eq!(sup_phi, 3.0 * u.sup());
        let m = mass_energy(&u);
        let scaled: f64 = (0..2).map(|e| u.edge_l2_sq(e)).sum();
        assert!((m.total_mass - 3.0 * scaled).abs() < 1e-12);
    }
}
