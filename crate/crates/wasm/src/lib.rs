//! Browser bindings: single bump profile, flower solve with Morse index, and
//! the Robin homotopy trace. Errors cross the boundary as strings.

use wasm_bindgen::prelude::wasm_bindgen;

use qgnls_core::graph::EdgeSelection;
use qgnls_core::grid::GraphFunction;
use qgnls_core::phase::{period_t_plus, shoot_bump};
use qgnls_core::scenario::{flower, Scenario};
use qgnls_core::solver::{newton_iterate, NewtonOptions, SolveReport};
use qgnls_core::spectral::{alpha_grid, morse_index, robin_certificate, uniform_trace, Robin};

const MAX_LOOPS: u32 = 6;
/// Keeps the in-browser problem size a few thousand unknowns.
const MIN_H: f64 = 0.01;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Bump on `[-εℓ, εℓ]`, reflected from the computed half-profile.
#[wasm_bindgen]
pub struct BumpView {
    z: Vec<f64>,
    u: Vec<f64>,
    pub q: f64,
    pub p_plus: f64,
    pub period: f64,
    pub dtn_residual: f64,
}

#[wasm_bindgen]
impl BumpView {
    #[wasm_bindgen(getter)]
    pub fn z(&self) -> Vec<f64> {
        self.z.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn u(&self) -> Vec<f64> {
        self.u.clone()
    }
}

#[wasm_bindgen]
pub fn bump(eps: f64, ell: f64, p: f64) -> Result<BumpView, String> {
    let b = shoot_bump(eps * ell, p).map_err(err)?;
    let stride = (b.z.len() / 400).max(1);
    let last = b.z.len() - 1;
    let half: Vec<(f64, f64)> = (0..=last)
        .filter(|&i| i % stride == 0 || i == last)
        .map(|i| (b.z[i], b.u[i]))
        .collect();
    let (mut z, mut u): (Vec<f64>, Vec<f64>) = half.iter().rev().map(|&(z, u)| (-z, u)).unzip();
    z.pop();
    u.pop();
    z.extend(half.iter().map(|p| p.0));
    u.extend(half.iter().map(|p| p.1));
    Ok(BumpView {
        z,
        u,
        q: b.q,
        p_plus: b.p_plus(),
        period: period_t_plus(b.p, b.q).map_err(err)?,
        dtn_residual: b.dtn_residual(),
    })
}

/// Solved flower state: samples of all edges concatenated, with offsets.
#[wasm_bindgen]
pub struct FlowerView {
    z: Vec<f64>,
    u: Vec<f64>,
    starts: Vec<u32>,
    names: Vec<String>,
    lowest: Vec<f64>,
    pub n: u32,
    pub zero: u32,
    pub nearest: f64,
    pub converged: bool,
    pub iterations: u32,
    pub residual: f64,
    pub dim: u32,
}

#[wasm_bindgen]
impl FlowerView {
    #[wasm_bindgen(getter)]
    pub fn z(&self) -> Vec<f64> {
        self.z.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn u(&self) -> Vec<f64> {
        self.u.clone()
    }
    /// Index of each edge's first sample, plus the total length at the end.
    #[wasm_bindgen(getter)]
    pub fn starts(&self) -> Vec<u32> {
        self.starts.clone()
    }
    /// Edge ids separated by commas.
    #[wasm_bindgen(getter)]
    pub fn names(&self) -> String {
        self.names.join(",")
    }
    #[wasm_bindgen(getter)]
    pub fn lowest(&self) -> Vec<f64> {
        self.lowest.clone()
    }
}

fn flower_scenario(loops: u32, selected: u32) -> Result<Scenario, String> {
    if loops == 0 || loops > MAX_LOOPS || selected == 0 || selected > loops {
        return Err(format!("need 1 <= selected <= loops <= {MAX_LOOPS}"));
    }
    flower(&vec![1.0; loops as usize], selected as usize).map_err(err)
}

fn solve_flower(
    loops: u32,
    selected: u32,
    eps: f64,
    h: f64,
) -> Result<(EdgeSelection, GraphFunction, SolveReport), String> {
    let sc = flower_scenario(loops, selected)?;
    let p = sc.prepare(eps, Some(h.max(MIN_H))).map_err(err)?;
    let (u, report) = newton_iterate(&p.guess, NewtonOptions::default()).map_err(err)?;
    Ok((p.selection, u, report))
}

#[wasm_bindgen]
pub fn flower_solve(loops: u32, selected: u32, eps: f64, h: f64) -> Result<FlowerView, String> {
    let (sel, u, report) = solve_flower(loops, selected, eps, h)?;
    let m = morse_index(&u, &sel).map_err(err)?;
    let (mut z, mut vals, mut starts, mut names) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for eg in &u.grid.edges {
        starts.push(z.len() as u32);
        names.push(u.grid.graph.edges[eg.edge].id.clone());
        for (zz, v) in u.edge_samples(eg.edge) {
            z.push(zz);
            vals.push(v);
        }
    }
    starts.push(z.len() as u32);
    Ok(FlowerView {
        z,
        u: vals,
        starts,
        names,
        lowest: m.lowest.clone(),
        n: m.inertia.negative as u32,
        zero: m.inertia.zero as u32,
        nearest: m.nearest,
        converged: report.converged,
        iterations: report.iterations as u32,
        residual: report.residual,
        dim: m.dim as u32,
    })
}

/// Uniform Robin ray from Kirchhoff to Dirichlet; `alpha` is `Infinity` at
/// the Dirichlet end.
#[wasm_bindgen]
pub struct TraceView {
    alpha: Vec<f64>,
    n: Vec<u32>,
    zero: Vec<u32>,
    nearest: Vec<f64>,
    vertex_alpha: Vec<f64>,
    pub pass: bool,
    pub certificate: bool,
}

#[wasm_bindgen]
impl TraceView {
    #[wasm_bindgen(getter)]
    pub fn alpha(&self) -> Vec<f64> {
        self.alpha.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn n(&self) -> Vec<u32> {
        self.n.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn zero(&self) -> Vec<u32> {
        self.zero.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn nearest(&self) -> Vec<f64> {
        self.nearest.clone()
    }
    /// Certificate value per boundary vertex (negative means no kernel).
    #[wasm_bindgen(getter)]
    pub fn vertex_alpha(&self) -> Vec<f64> {
        self.vertex_alpha.clone()
    }
}

#[wasm_bindgen]
pub fn homotopy_trace(loops: u32, selected: u32, eps: f64, h: f64) -> Result<TraceView, String> {
    let (sel, u, _) = solve_flower(loops, selected, eps, h)?;
    let t = uniform_trace(&u, &sel, &alpha_grid()).map_err(err)?;
    let cert = robin_certificate(&u, &sel).map_err(err)?;
    Ok(TraceView {
        alpha: t
            .points
            .iter()
            .map(|p| match p.t {
                Robin::Finite(a) => a,
                Robin::Infinite => f64::INFINITY,
            })
            .collect(),
        n: t.points.iter().map(|p| p.inertia.negative as u32).collect(),
        zero: t.points.iter().map(|p| p.inertia.zero as u32).collect(),
        nearest: t.points.iter().map(|p| p.nearest).collect(),
        vertex_alpha: cert.vertices.iter().map(|v| v.alpha).collect(),
        pass: t.pass,
        certificate: cert.holds,
    })
}
