//! Symmetric "arrow" matrices: a few vertex unknowns coupled to independent
//! tridiagonal chains, one chain per edge.
//!
//! Every discretised operator on a graph has this shape. Chains are
//! eliminated by `LDLᵀ` without pivoting (pivot signs give their inertia),
//! the small dense vertex Schur complement is handled with `nalgebra`, and
//! Haynsworth's formula `In(K) = In(T) + In(K / T)` gives the total inertia.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Dimension up to which dense fallbacks are allowed.
pub const DENSE_LIMIT: usize = 1500;

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// Global index of the first chain node; the chain occupies
    /// `start..start + len`.
    pub start: usize,
    pub len: usize,
    /// Vertex coupled to the first node and the coupling value.
    pub left: Option<(usize, f64)>,
    /// Vertex coupled to the last node and the coupling value.
    pub right: Option<(usize, f64)>,
}

/// Symmetric matrix with vertex nodes `0..nv` and chains after them.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowMatrix {
    pub nv: usize,
    pub diag: Vec<f64>,
    /// `off[i]` couples global nodes `i` and `i + 1` inside a chain; entries
    /// at chain ends and at vertex indices are unused.
    pub off: Vec<f64>,
    pub chains: Vec<Chain>,
    /// Vertices whose unknown is eliminated (homogeneous Dirichlet).
    pub fixed: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Inertia {
    pub fn total(&self) -> usize {
        self.negative + self.zero + self.positive
    }
}

struct ChainFactor {
    /// `LDLᵀ` pivots.
    d: Vec<f64>,
}

fn factor_chain(diag: &[f64], off: &[f64]) -> Option<ChainFactor> {
    let n = diag.len();
    let mut d = Vec::with_capacity(n);
    let mut prev = 0.0;
    for i in 0..n {
        let a = diag[i];
        let di = if i == 0 {
            a
        } else {
            a - off[i - 1] * off[i - 1] / prev
        };
        let scale = a.abs() + if i > 0 { off[i - 1].abs() } else { 0.0 } + f64::MIN_POSITIVE;
        if di.abs() <= 1e-14 * scale || !di.is_finite() {
            return None;
        }
        d.push(di);
        prev = di;
    }
    Some(ChainFactor { d })
}

fn solve_chain(f: &ChainFactor, off: &[f64], rhs: &mut [f64]) {
    let n = rhs.len();
    for i in 1..n {
        rhs[i] -= off[i - 1] / f.d[i - 1] * rhs[i - 1];
    }
    rhs[n - 1] /= f.d[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / f.d[i];
    }
}

/// Factored form: chain pivots plus the dense Schur complement on the free
/// vertices.
struct Factored<'a> {
    m: &'a ArrowMatrix,
    chains: Vec<ChainFactor>,
    /// Free vertex indices in Schur order.
    free: Vec<usize>,
    schur: DMatrix<f64>,
}

impl ArrowMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn chain_slices(&self, c: &Chain) -> (&[f64], &[f64]) {
        let d = &self.diag[c.start..c.start + c.len];
        let o = &self.off[c.start..c.start + c.len.saturating_sub(1)];
        (d, o)
    }

    fn free_vertices(&self) -> Vec<usize> {
        (0..self.nv).filter(|&v| !self.fixed[v]).collect()
    }

    /// Number of unknowns after eliminating fixed vertices.
    pub fn active_dim(&self) -> usize {
        self.dim() - self.fixed.iter().filter(|&&f| f).count()
    }

    /// Couplings of a chain to free vertices, merged per vertex, as
    /// `(vertex, first-node coupling, last-node coupling)`.
    fn couplings(&self, c: &Chain) -> Vec<(usize, f64, f64)> {
        let mut out: Vec<(usize, f64, f64)> = Vec::new();
        if let Some((v, x)) = c.left {
            if !self.fixed[v] {
                out.push((v, x, 0.0));
            }
        }
        if let Some((v, x)) = c.right {
            if !self.fixed[v] {
                if let Some(entry) = out.iter_mut().find(|e| e.0 == v) {
                    entry.2 += x;
                } else {
                    out.push((v, 0.0, x));
                }
            }
        }
        out
    }

    fn coupling_vector(len: usize, first: f64, last: f64) -> Vec<f64> {
        let mut r = vec![0.0; len];
        r[0] += first;
        r[len - 1] += last;
        r
    }

    fn factor(&self) -> Option<Factored<'_>> {
        let free = self.free_vertices();
        let pos = |v: usize| free.iter().position(|&w| w == v).expect("free vertex");
        let mut schur = DMatrix::zeros(free.len(), free.len());
        for (i, &v) in free.iter().enumerate() {
            schur[(i, i)] = self.diag[v];
        }
        let mut chains = Vec::with_capacity(self.chains.len());
        for c in &self.chains {
            let (d, o) = self.chain_slices(c);
            let f = factor_chain(d, o)?;
            let cols = self.couplings(c);
            let solved: Vec<Vec<f64>> = cols
                .iter()
                .map(|&(_, a, b)| {
                    let mut r = Self::coupling_vector(c.len, a, b);
                    solve_chain(&f, o, &mut r);
                    r
                })
                .collect();
            for &(vi, ai, bi) in &cols {
                for (k, &(vk, _, _)) in cols.iter().enumerate() {
                    let x = &solved[k];
                    let dot = ai * x[0] + bi * x[c.len - 1];
                    schur[(pos(vi), pos(vk))] -= dot;
                }
            }
            chains.push(f);
        }
        // Symmetrise against rounding.
        let schur = (&schur + schur.transpose()) * 0.5;
        Some(Factored {
            m: self,
            chains,
            free,
            schur,
        })
    }

    /// Solve `K x = b` (fixed vertices get `x = 0`).
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if let Some(f) = self.factor() {
            if let Some(x) = f.solve(b) {
                return Ok(x);
            }
        }
        if self.active_dim() <= DENSE_LIMIT * 2 {
            return self.solve_dense(b);
        }
        Err(Error::Singular(format!(
            "structured factorisation broke down (dimension {})",
            self.dim()
        )))
    }

    fn solve_dense(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (a, map) = self.to_dense_active();
        let rhs = DVector::from_iterator(map.len(), map.iter().map(|&i| b[i]));
        let x = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("dense LU failed".into()))?;
        let mut out = vec![0.0; self.dim()];
        for (k, &i) in map.iter().enumerate() {
            out[i] = x[k];
        }
        Ok(out)
    }

    /// Inertia of the matrix restricted to the free unknowns.
    pub fn inertia(&self) -> Result<Inertia> {
        match self.factor() {
            Some(f) => Ok(f.inertia()),
            None if self.active_dim() <= DENSE_LIMIT => Ok(self.dense_inertia(0.0)),
            None => Err(Error::Singular(format!(
                "structured factorisation broke down (dimension {})",
                self.dim()
            ))),
        }
    }

    /// Inertia via a dense eigensolve; eigenvalues with `|λ| ≤ tol` count as zero.
    pub fn dense_inertia(&self, tol: f64) -> Inertia {
        let (a, _) = self.to_dense_active();
        count_signs(sym_eigenvalues(a), tol)
    }

    /// `self + shift · diag(weights)`.
    pub fn shifted(&self, shift: f64, weights: &[f64]) -> ArrowMatrix {
        let mut m = self.clone();
        for (d, w) in m.diag.iter_mut().zip(weights) {
            *d += shift * w;
        }
        m
    }

    /// `y = K x` over all indices (fixed vertices act as zero rows/columns).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, x)| d * x).collect();
        for v in 0..self.nv {
            if self.fixed[v] {
                y[v] = 0.0;
            }
        }
        for c in &self.chains {
            for i in c.start..c.start + c.len - 1 {
                y[i] += self.off[i] * x[i + 1];
                y[i + 1] += self.off[i] * x[i];
            }
            for (end, node) in [(c.left, c.start), (c.right, c.start + c.len - 1)] {
                if let Some((v, a)) = end {
                    if !self.fixed[v] {
                        y[node] += a * x[v];
                        y[v] += a * x[node];
                    }
                }
            }
        }
        y
    }

    /// Dense copy over the free unknowns and the map from dense to global
    /// index.
    pub fn to_dense_active(&self) -> (DMatrix<f64>, Vec<usize>) {
        let map: Vec<usize> = (0..self.dim())
            .filter(|&i| i >= self.nv || !self.fixed[i])
            .collect();
        let mut inv = vec![usize::MAX; self.dim()];
        for (k, &i) in map.iter().enumerate() {
            inv[i] = k;
        }
        let n = map.len();
        let mut a = DMatrix::zeros(n, n);
        for (k, &i) in map.iter().enumerate() {
            a[(k, k)] = self.diag[i];
        }
        for c in &self.chains {
            for i in c.start..c.start + c.len - 1 {
                let (r, s) = (inv[i], inv[i + 1]);
                a[(r, s)] = self.off[i];
                a[(s, r)] = self.off[i];
            }
            for (end, node) in [(c.left, c.start), (c.right, c.start + c.len - 1)] {
                if let Some((v, x)) = end {
                    if !self.fixed[v] {
                        let (r, s) = (inv[v], inv[node]);
                        a[(r, s)] += x;
                        a[(s, r)] += x;
                    }
                }
            }
        }
        (a, map)
    }

    /// Sub-matrix made of the listed chains and vertices only; every other
    /// vertex is treated as fixed. Vertex indices are preserved, chain nodes
    /// are renumbered contiguously.
    pub fn restrict(&self, chains: &[usize], vertices: &[usize]) -> ArrowMatrix {
        self.restrict_mapped(chains, vertices, &[]).0
    }

    /// Like [`ArrowMatrix::restrict`], additionally dropping the first node of
    /// each chain in `trim_first` (a homogeneous Dirichlet condition at a free
    /// chain end). Returns the new-to-old index map.
    pub fn restrict_mapped(
        &self,
        chains: &[usize],
        vertices: &[usize],
        trim_first: &[usize],
    ) -> (ArrowMatrix, Vec<usize>) {
        let mut fixed = vec![true; self.nv];
        for &v in vertices {
            fixed[v] = self.fixed[v];
        }
        let mut diag = self.diag[..self.nv].to_vec();
        let mut off = vec![0.0; self.nv];
        let mut map: Vec<usize> = (0..self.nv).collect();
        let mut out_chains = Vec::with_capacity(chains.len());
        for &ci in chains {
            let c = &self.chains[ci];
            let trim = trim_first.contains(&ci);
            assert!(
                !trim || c.left.is_none(),
                "only free chain ends can be trimmed"
            );
            let first = c.start + usize::from(trim);
            let last = c.start + c.len;
            if first == last {
                continue;
            }
            let start = diag.len();
            diag.extend_from_slice(&self.diag[first..last]);
            off.extend_from_slice(&self.off[first..last]);
            map.extend(first..last);
            out_chains.push(Chain {
                start,
                len: last - first,
                left: c.left,
                right: c.right,
            });
        }
        (
            ArrowMatrix {
                nv: self.nv,
                diag,
                off,
                chains: out_chains,
                fixed,
            },
            map,
        )
    }
}

impl Factored<'_> {
    fn inertia(&self) -> Inertia {
        let mut inertia = Inertia {
            negative: 0,
            zero: 0,
            positive: 0,
        };
        for f in &self.chains {
            for &d in &f.d {
                if d < 0.0 {
                    inertia.negative += 1;
                } else {
                    inertia.positive += 1;
                }
            }
        }
        if !self.free.is_empty() {
            let scale = self.schur.amax().max(1.0);
            let s = count_signs(sym_eigenvalues(self.schur.clone()), 1e-13 * scale);
            inertia.negative += s.negative;
            inertia.zero += s.zero;
            inertia.positive += s.positive;
        }
        inertia
    }

    fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let m = self.m;
        let mut x = vec![0.0; m.dim()];
        // y_c = T_c^{-1} b_c
        let mut y: Vec<Vec<f64>> = Vec::with_capacity(m.chains.len());
        for (c, f) in m.chains.iter().zip(&self.chains) {
            let (_, o) = m.chain_slices(c);
            let mut r = b[c.start..c.start + c.len].to_vec();
            solve_chain(f, o, &mut r);
            y.push(r);
        }
        if !self.free.is_empty() {
            let pos = |v: usize| self.free.iter().position(|&w| w == v).expect("free vertex");
            let mut rhs = DVector::from_iterator(self.free.len(), self.free.iter().map(|&v| b[v]));
            for (c, yc) in m.chains.iter().zip(&y) {
                for (v, a, bb) in m.couplings(c) {
                    rhs[pos(v)] -= a * yc[0] + bb * yc[c.len - 1];
                }
            }
            let xv = self.schur.clone().lu().solve(&rhs)?;
            for (k, &v) in self.free.iter().enumerate() {
                x[v] = xv[k];
            }
        }
        for ((c, f), yc) in m.chains.iter().zip(&self.chains).zip(y) {
            let (_, o) = m.chain_slices(c);
            let cols = m.couplings(c);
            let mut r = vec![0.0; c.len];
            for (v, a, bb) in cols {
                r[0] += a * x[v];
                r[c.len - 1] += bb * x[v];
            }
            if r.iter().any(|&t| t != 0.0) {
                solve_chain(f, o, &mut r);
            }
            for k in 0..c.len {
                x[c.start + k] = yc[k] - r[k];
            }
        }
        x.iter().all(|t| t.is_finite()).then_some(x)
    }
}

fn count_signs(values: impl IntoIterator<Item = f64>, tol: f64) -> Inertia {
    let mut inertia = Inertia {
        negative: 0,
        zero: 0,
        positive: 0,
    };
    for v in values {
        if v < -tol {
            inertia.negative += 1;
        } else if v > tol {
            inertia.positive += 1;
        } else {
            inertia.zero += 1;
        }
    }
    inertia
}

/// Eigenvalues of a symmetric matrix, empty for a 0×0 input.
fn sym_eigenvalues(a: DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    SymmetricEigen::new(a).eigenvalues.iter().copied().collect()
}

/// Inertia of a dense symmetric matrix with a zero window of half-width
/// `tol`, from a dense eigensolve.
pub fn dense_inertia_window(a: &DMatrix<f64>, tol: f64) -> Inertia {
    count_signs(sym_eigenvalues(a.clone()), tol)
}

/// Counts for the pencil `K - σ M` with diagonal positive `M`: the number of
/// pencil eigenvalues below `σ`.
pub fn count_below(k: &ArrowMatrix, mass: &[f64], sigma: f64) -> Result<usize> {
    let mut shift = sigma;
    for attempt in 0..4 {
        match k.shifted(-shift, mass).factor() {
            Some(f) => {
                let i = f.inertia();
                if i.zero == 0 {
                    return Ok(i.negative);
                }
            }
            None if attempt == 3 && k.active_dim() <= DENSE_LIMIT => {
                return Ok(k.shifted(-sigma, mass).dense_inertia(0.0).negative);
            }
            None => {}
        }
        // Nudge off an exact pivot breakdown; the perturbation is far below
        // any tolerance the counts are used with.
        shift = sigma + (sigma.abs() + 1e-12) * 1e-11 * (attempt as f64 + 1.0);
    }
    Err(Error::Singular(format!(
        "cannot factor shifted operator at sigma = {sigma}"
    )))
}

/// Inertia of the pencil `K - λM` with a zero window `|λ| ≤ tol`.
pub fn pencil_inertia(k: &ArrowMatrix, mass: &[f64], tol: f64) -> Result<Inertia> {
    let below_minus = count_below(k, mass, -tol)?;
    let below_plus = count_below(k, mass, tol)?;
    let n = k.active_dim();
    Ok(Inertia {
        negative: below_minus,
        zero: below_plus - below_minus,
        positive: n - below_plus,
    })
}

/// Gershgorin-type bounds on the pencil eigenvalues.
pub fn pencil_bounds(k: &ArrowMatrix, mass: &[f64]) -> (f64, f64) {
    let mut row_abs = vec![0.0; k.dim()];
    for c in &k.chains {
        for i in c.start..c.start + c.len - 1 {
            row_abs[i] += k.off[i].abs();
            row_abs[i + 1] += k.off[i].abs();
        }
        for (end, node) in [(c.left, c.start), (c.right, c.start + c.len - 1)] {
            if let Some((v, a)) = end {
                if !k.fixed[v] {
                    row_abs[node] += a.abs();
                    row_abs[v] += a.abs();
                }
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k.dim() {
        if i < k.nv && k.fixed[i] {
            continue;
        }
        let c = k.diag[i] / mass[i];
        let r = row_abs[i] / mass[i];
        lo = lo.min(c - r);
        hi = hi.max(c + r);
    }
    (lo - 1.0, hi + 1.0)
}

/// The `index`-th (0-based) pencil eigenvalue by bisection on counts.
pub fn pencil_eigenvalue(
    k: &ArrowMatrix,
    mass: &[f64],
    index: usize,
    bounds: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bounds;
    for _ in 0..200 {
        if hi - lo <= tol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if count_below(k, mass, mid)? > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dense symmetric reduction `M^{-1/2} K M^{-1/2}` over the free unknowns.
pub fn dense_pencil(k: &ArrowMatrix, mass: &[f64]) -> DMatrix<f64> {
    let (mut a, map) = k.to_dense_active();
    let s: Vec<f64> = map.iter().map(|&i| 1.0 / mass[i].sqrt()).collect();
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            a[(r, c)] *= s[r] * s[c];
        }
    }
    a
}

/// Sorted pencil eigenvalues from a dense eigensolve.
pub fn dense_pencil_eigenvalues(k: &ArrowMatrix, mass: &[f64]) -> Vec<f64> {
    let mut v = sym_eigenvalues(dense_pencil(k, mass));
    v.sort_by(f64::total_cmp);
    v
}
