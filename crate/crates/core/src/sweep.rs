//! Full pipeline at one ε (asymptotics, solve, verification, spectrum,
//! homotopy) and ε-sweeps with exponential rate fits.

use log::warn;
use rayon::prelude::*;

use crate::asymptotic::AsymptoticData;
use crate::error::Result;
use crate::graph::{EdgeKind, EdgeSelection};
use crate::grid::GraphFunction;
use crate::phase::shoot_bump;
use crate::scenario::Scenario;
use crate::solver::{
    bump_mass, mass_energy, newton_iterate, verify_state, NewtonOptions, PropertyReport,
    SolveReport, DEFAULT_TOL,
};
use crate::spectral::{
    homotopy_scan, morse_index_with, HomotopyOptions, HomotopyTrace, SpectralReport, LAMBDA_TOL,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Grid step; `None` uses the default rule.
    pub h: Option<f64>,
    pub tol: f64,
    pub zero_window: f64,
    /// `None` skips the Robin homotopy.
    pub homotopy: Option<HomotopyOptions>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            h: None,
            tol: DEFAULT_TOL,
            zero_window: LAMBDA_TOL,
            homotopy: Some(HomotopyOptions::default()),
        }
    }
}

/// Mass of a selected edge against its leading-order value.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMass {
    pub edge: String,
    /// Phase-plane mass for pendants and loops, trapezoid otherwise.
    pub mass: f64,
    pub trapezoid: f64,
    /// `ε` per pulse end: `2ε` for loops and internal edges, `ε` for pendants.
    pub leading: f64,
}

impl EdgeMass {
    pub fn deviation(&self) -> f64 {
        (self.mass / self.leading - 1.0).abs()
    }
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub eps: f64,
    pub selection: EdgeSelection,
    pub data: Option<AsymptoticData>,
    pub state: GraphFunction,
    pub solve: SolveReport,
    pub properties: PropertyReport,
    pub spectrum: SpectralReport,
    pub homotopy: Option<HomotopyTrace>,
    pub masses: Vec<EdgeMass>,
    /// Single-bump DtN residual on the longest selected pendant/loop.
    pub dtn_residual: Option<f64>,
}

impl PointOutcome {
    pub fn mass_deviation(&self) -> f64 {
        self.masses
            .iter()
            .map(EdgeMass::deviation)
            .fold(0.0, f64::max)
    }
}

fn selected_masses(u: &GraphFunction, sel: &EdgeSelection) -> Vec<EdgeMass> {
    let eps = u.eps;
    let me = mass_energy(u);
    sel.selected
        .iter()
        .map(|&e| {
            let edge = &u.grid.graph.edges[e];
            let trapezoid = me.edge_mass[e].1;
            let (leading, exact) = match edge.kind() {
                EdgeKind::Pendant => (eps, bump_mass(u, e).ok()),
                EdgeKind::Looping => (2.0 * eps, bump_mass(u, e).ok()),
                _ => (2.0 * eps, None),
            };
            EdgeMass {
                edge: edge.id.clone(),
                mass: exact.unwrap_or(trapezoid),
                trapezoid,
                leading,
            }
        })
        .collect()
}

fn dtn_residual(u: &GraphFunction, sel: &EdgeSelection) -> Option<f64> {
    sel.selected
        .iter()
        .filter_map(|&e| {
            let edge = &u.grid.graph.edges[e];
            match edge.kind() {
                EdgeKind::Pendant | EdgeKind::Looping => {
                    let v = edge.ends()[0];
                    Some((edge.size(), u.vertex_value(v)))
                }
                _ => None,
            }
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .and_then(|(eps_ell, p)| shoot_bump(eps_ell, p).ok())
        .map(|b| b.dtn_residual())
}

/// Solve a scenario at `eps`; the state is returned even without
/// convergence.
pub fn solve_point(
    sc: &Scenario,
    eps: f64,
    opts: &RunOptions,
) -> Result<(crate::scenario::Prepared, GraphFunction, SolveReport)> {
    let prepared = sc.prepare(eps, opts.h)?;
    let (u, report) = newton_iterate(
        &prepared.guess,
        NewtonOptions {
            tol: opts.tol,
            max_iterations: sc.max_iterations,
            coef: 1.0,
        },
    )?;
    Ok((prepared, u, report))
}

pub fn run_point(sc: &Scenario, eps: f64, opts: &RunOptions) -> Result<PointOutcome> {
    let (prepared, u, solve) = solve_point(sc, eps, opts)?;
    if !solve.converged {
        warn!(
            "{} at eps = {eps}: no convergence, residual {:.3e}",
            sc.name, solve.residual
        );
    }
    let sel = prepared.selection;
    let spectrum = morse_index_with(&u, &sel, opts.zero_window)?;
    let homotopy = match &opts.homotopy {
        Some(h) => Some(homotopy_scan(&u, &sel, h)?),
        None => None,
    };
    Ok(PointOutcome {
        eps,
        properties: verify_state(&u, &sel),
        masses: selected_masses(&u, &sel),
        dtn_residual: dtn_residual(&u, &sel),
        selection: sel,
        data: prepared.data,
        state: u,
        solve,
        spectrum,
        homotopy,
    })
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub converged: bool,
    pub residual: f64,
    pub concentration: f64,
    pub mass_deviation: f64,
    pub masses: Vec<EdgeMass>,
    pub n: Option<usize>,
    pub z: Option<usize>,
    pub nearest: f64,
    pub homotopy: Option<bool>,
    pub dtn_residual: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(eps: f64, msg: String) -> SweepRow {
        SweepRow {
            eps,
            converged: false,
            residual: f64::NAN,
            concentration: f64::NAN,
            mass_deviation: f64::NAN,
            masses: Vec::new(),
            n: None,
            z: None,
            nearest: f64::NAN,
            homotopy: None,
            dtn_residual: None,
            error: Some(msg),
        }
    }

    fn from_outcome(o: &PointOutcome) -> SweepRow {
        SweepRow {
            eps: o.eps,
            converged: o.solve.converged,
            residual: o.solve.residual,
            concentration: o.properties.concentration,
            mass_deviation: o.mass_deviation(),
            masses: o.masses.clone(),
            n: Some(o.spectrum.inertia.negative),
            z: Some(o.spectrum.inertia.zero),
            nearest: o.spectrum.nearest,
            homotopy: o.homotopy.as_ref().map(|h| h.pass),
            dtn_residual: o.dtn_residual,
            error: None,
        }
    }
}

/// Least-squares fit `ln y = intercept + slope · ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fit of `ln y` against `x` over the pairs with finite positive `y`;
/// `None` with fewer than two such points.
pub fn fit_log_rate(name: &str, pts: &[(f64, f64)]) -> Option<RateFit> {
    let use_: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && *y > 0.0)
        .map(|&(x, y)| (x, y.ln()))
        .collect();
    let n = use_.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = use_.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = use_.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = use_.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = use_.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = use_.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(RateFit {
        name: name.to_string(),
        slope,
        intercept: my - slope * mx,
        r2,
        points: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub scenario: String,
    pub h: Option<f64>,
    pub seed: u64,
    /// Ordered by ε.
    pub rows: Vec<SweepRow>,
    /// Over converged rows only.
    pub fits: Vec<RateFit>,
}

impl SweepResult {
    /// Every converged row matches the scenario's expectation (vacuous
    /// without one), and at least one row converged.
    pub fn meets(&self, sc: &Scenario) -> bool {
        self.rows.iter().any(|r| r.converged)
            && self.rows.iter().all(|r| match (sc.expected, r.n, r.z) {
                (None, _, _) => true,
                (Some(e), Some(n), Some(z)) => r.converged && e.matches(n, z),
                _ => false,
            })
    }
}

/// Run the pipeline at every ε concurrently; failures become rows.
pub fn run_sweep(sc: &Scenario, ladder: &[f64], opts: &RunOptions) -> SweepResult {
    let mut eps: Vec<f64> = ladder.to_vec();
    eps.sort_by(f64::total_cmp);
    let rows: Vec<SweepRow> = eps
        .par_iter()
        .map(|&e| match run_point(sc, e, opts) {
            Ok(o) => SweepRow::from_outcome(&o),
            Err(err) => {
                warn!("{} at eps = {e}: {err}", sc.name);
                SweepRow::failed(e, err.to_string())
            }
        })
        .collect();
    let conv: Vec<&SweepRow> = rows.iter().filter(|r| r.converged).collect();
    let series = |f: &dyn Fn(&SweepRow) -> Option<f64>| -> Vec<(f64, f64)> {
        conv.iter()
            .filter_map(|r| f(r).map(|y| (r.eps, y)))
            .collect()
    };
    let fits = [
        fit_log_rate("concentration", &series(&|r| Some(r.concentration))),
        fit_log_rate("mass_deviation", &series(&|r| Some(r.mass_deviation))),
        fit_log_rate("dtn_residual", &series(&|r| r.dtn_residual)),
    ]
    .into_iter()
    .flatten()
    .collect();
    SweepResult {
        scenario: sc.name.clone(),
        h: opts.h,
        seed: opts.homotopy.as_ref().map_or(0, |h| h.seed),
        rows,
        fits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::preset;

    #[test]
    fn exact_exponential_fit() {
        let pts: Vec<(f64, f64)> = (0..5)
            .map(|i| (i as f64, 3.0 * (-2.0 * i as f64).exp()))
            .collect();
        let f = fit_log_rate("x", &pts).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12 && (f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(fit_log_rate("x", &pts[..1]).is_none());
        assert!(fit_log_rate("x", &[(1.0, 0.0), (2.0, -1.0)]).is_none());
    }

    #[test]
    fn small_sweep_rows_are_ordered_and_fit() {
        let sc = preset("flower-1").unwrap();
        let opts = RunOptions {
            h: Some(0.05),
            homotopy: None,
            ..RunOptions::default()
        };
        let r = run_sweep(&sc, &[8.0, 6.0], &opts);
        assert_eq!(
            r.rows.iter().map(|r| r.eps).collect::<Vec<_>>(),
            vec![6.0, 8.0]
        );
        assert!(r.meets(&sc), "{r:?}");
        let c = r.fits.iter().find(|f| f.name == "concentration").unwrap();
        assert!(c.slope < -0.9, "{c:?}");
    }

    #[test]
    fn failures_become_rows() {
        let sc = preset("flower").unwrap();
        let r = run_sweep(
            &sc,
            &[1.0],
            &RunOptions {
                homotopy: None,
                ..RunOptions::default()
            },
        );
        assert!(r.rows[0].error.is_some() && !r.rows[0].converged);
        assert!(!r.meets(&sc));
    }
}
