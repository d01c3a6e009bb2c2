//! File output: state and sweep CSV, gnuplot `.dat` profiles and traces.
//!
//! Floats are written in shortest round-trip form, so identical inputs give
//! byte-identical files and a state CSV reads back exactly.

use std::io::{BufReader, Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GraphFunction, GraphGrid};
use crate::spectral::HomotopyTrace;
use crate::sweep::SweepResult;

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Io(format!("{other:?}")),
    }
}

fn fnum(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateRow {
    pub edge: String,
    pub z: f64,
    pub u: f64,
}

/// Sampled state: every grid point of every edge, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTable {
    pub eps: f64,
    pub h: f64,
    pub residual: f64,
    pub rows: Vec<StateRow>,
}

impl StateTable {
    pub fn from_function(u: &GraphFunction, residual: f64) -> StateTable {
        let rows = u
            .grid
            .edges
            .iter()
            .flat_map(|eg| {
                let id = &u.grid.graph.edges[eg.edge].id;
                u.edge_samples(eg.edge)
                    .into_iter()
                    .map(move |(z, v)| StateRow {
                        edge: id.clone(),
                        z,
                        u: v,
                    })
            })
            .collect();
        StateTable {
            eps: u.eps,
            h: u.grid.h_max,
            residual,
            rows,
        }
    }

    /// Place the samples back on `grid`, which must have the same layout.
    pub fn to_function(&self, grid: Arc<GraphGrid>) -> Result<GraphFunction> {
        let mut out = GraphFunction::zeros(Arc::clone(&grid), self.eps);
        let mut rows = self.rows.iter();
        for eg in &grid.edges {
            let id = &grid.graph.edges[eg.edge].id;
            for (z, node) in grid.edge_points(eg.edge) {
                let r = rows.next().ok_or_else(|| {
                    Error::InvalidParameter(format!("state ends before edge {id}"))
                })?;
                if &r.edge != id || (r.z - z).abs() > 1e-9 * (1.0 + z.abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "state row ({}, {}) does not match grid point ({id}, {z})",
                        r.edge, r.z
                    )));
                }
                if let Some(i) = node {
                    out.values[i] = r.u;
                }
            }
        }
        if rows.next().is_some() {
            return Err(Error::InvalidParameter(
                "state has more rows than the grid".into(),
            ));
        }
        Ok(out)
    }
}

pub fn write_state<W: Write>(mut w: W, t: &StateTable) -> Result<()> {
    writeln!(w, "# eps={}", fnum(t.eps))?;
    writeln!(w, "# h={}", fnum(t.h))?;
    writeln!(w, "# residual={}", fnum(t.residual))?;
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["edge", "z", "U"]).map_err(csv_err)?;
    for r in &t.rows {
        c.write_record([r.edge.as_str(), &fnum(r.z), &fnum(r.u)])
            .map_err(csv_err)?;
    }
    c.flush()?;
    Ok(())
}

fn header_value(line: &str, key: &str) -> Option<f64> {
    let rest = line
        .strip_prefix('#')?
        .trim()
        .strip_prefix(key)?
        .strip_prefix('=')?;
    rest.trim().parse().ok()
}

pub fn read_state<R: Read>(r: R) -> Result<StateTable> {
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text)?;
    let (mut eps, mut h, mut residual) = (None, None, None);
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        eps = eps.or(header_value(line, "eps"));
        h = h.or(header_value(line, "h"));
        residual = residual.or(header_value(line, "residual"));
    }
    let missing = |k: &str| Error::Parse {
        line: 1,
        msg: format!("missing header {k}"),
    };
    let mut c = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in c.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |msg: &str| Error::Parse {
            line: i + 5,
            msg: msg.to_string(),
        };
        if rec.len() != 3 {
            return Err(bad("expected 3 columns"));
        }
        rows.push(StateRow {
            edge: rec[0].to_string(),
            z: rec[1].parse().map_err(|_| bad("bad z"))?,
            u: rec[2].parse().map_err(|_| bad("bad U"))?,
        });
    }
    Ok(StateTable {
        eps: eps.ok_or_else(|| missing("eps"))?,
        h: h.ok_or_else(|| missing("h"))?,
        residual: residual.ok_or_else(|| missing("residual"))?,
        rows,
    })
}

pub const SWEEP_COLUMNS: [&str; 9] = [
    "eps",
    "converged",
    "residual",
    "concentration",
    "mass_dev",
    "n",
    "z",
    "nearest_lambda",
    "homotopy",
];

/// Sweep CSV: header comments, nine columns, then `# mass`, `# error` and
/// `# fit:` footer lines.
pub fn write_sweep<W: Write>(mut w: W, s: &SweepResult) -> Result<()> {
    writeln!(w, "# scenario={}", s.scenario)?;
    writeln!(w, "# h={}", s.h.map_or("default".to_string(), fnum))?;
    writeln!(w, "# seed={}", s.seed)?;
    let mut c = csv::Writer::from_writer(&mut w);
    c.write_record(SWEEP_COLUMNS).map_err(csv_err)?;
    let opt = |x: Option<usize>| x.map_or(String::new(), |v| v.to_string());
    for r in &s.rows {
        let hom = match r.homotopy {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "",
        };
        c.write_record([
            fnum(r.eps),
            r.converged.to_string(),
            fnum(r.residual),
            fnum(r.concentration),
            fnum(r.mass_deviation),
            opt(r.n),
            opt(r.z),
            fnum(r.nearest),
            hom.to_string(),
        ])
        .map_err(csv_err)?;
    }
    c.flush()?;
    drop(c);
    for r in &s.rows {
        if !r.masses.is_empty() {
            let parts: Vec<String> = r
                .masses
                .iter()
                .map(|m| {
                    format!(
                        "{}={} trapezoid={} leading={}",
                        m.edge,
                        fnum(m.mass),
                        fnum(m.trapezoid),
                        fnum(m.leading)
                    )
                })
                .collect();
            writeln!(w, "# mass eps={} {}", fnum(r.eps), parts.join(" "))?;
        }
        if let Some(e) = &r.error {
            writeln!(w, "# error eps={}: {}", fnum(r.eps), e.replace('\n', " "))?;
        }
    }
    for f in &s.fits {
        writeln!(
            w,
            "# fit: {} slope={} intercept={} r2={} points={}",
            f.name,
            fnum(f.slope),
            fnum(f.intercept),
            fnum(f.r2),
            f.points
        )?;
    }
    Ok(())
}

/// One gnuplot data block per edge, separated by two blank lines so that
/// `index k` selects edge `k`.
pub fn write_profile_dat<W: Write>(mut w: W, u: &GraphFunction) -> Result<()> {
    writeln!(w, "# eps={} h={}", fnum(u.eps), fnum(u.grid.h_max))?;
    for (k, eg) in u.grid.edges.iter().enumerate() {
        if k > 0 {
            writeln!(w, "\n")?;
        }
        writeln!(
            w,
            "# edge {} ({})",
            u.grid.graph.edges[eg.edge].id,
            u.grid.graph.edges[eg.edge].kind()
        )?;
        writeln!(w, "# z U")?;
        for (z, v) in u.edge_samples(eg.edge) {
            writeln!(w, "{} {}", fnum(z), fnum(v))?;
        }
    }
    Ok(())
}

/// Homotopy trace: one block per ray. `k` is the position on the ray, `t`
/// is written as `inf` at the Dirichlet endpoint.
pub fn write_trace_dat<W: Write>(mut w: W, t: &HomotopyTrace) -> Result<()> {
    writeln!(
        w,
        "# min_gap={} constant={} endpoints_agree={} pass={}",
        fnum(t.min_gap),
        t.constant,
        t.endpoints_agree,
        t.pass
    )?;
    let mut ray = None;
    let mut k = 0;
    for p in &t.points {
        if ray != Some(p.ray) {
            if ray.is_some() {
                writeln!(w, "\n")?;
            }
            ray = Some(p.ray);
            k = 0;
            writeln!(w, "# ray {}", p.ray)?;
            writeln!(w, "# k t n z nearest")?;
        }
        writeln!(
            w,
            "{k} {} {} {} {}",
            p.t,
            p.inertia.negative,
            p.inertia.zero,
            fnum(p.nearest)
        )?;
        k += 1;
    }
    Ok(())
}

/// Flat CSV of a homotopy trace: `ray,alpha,n,z,nearest`.
pub fn write_trace_csv<W: Write>(w: W, t: &HomotopyTrace) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["ray", "alpha", "n", "z", "nearest"])
        .map_err(csv_err)?;
    for p in &t.points {
        c.write_record([
            p.ray.to_string(),
            p.t.to_string(),
            p.inertia.negative.to_string(),
            p.inertia.zero.to_string(),
            fnum(p.nearest),
        ])
        .map_err(csv_err)?;
    }
    c.flush()?;
    Ok(())
}

/// Lines of `text` that start with `# fit:`.
pub fn fit_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| l.starts_with("# fit:"))
}
