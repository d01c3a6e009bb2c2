//! Phase-plane machinery for `-u'' + u - 2u³ = 0`.
//!
//! Orbits live on the level sets `v² - u² + u⁴ = β` with `v = u'`. For
//! `β ∈ (-1/4, 0)` the level set is a closed curve inside the homoclinic
//! loop `u = sech z` (`β = 0`), crossing the `u`-axis at `p_- < 1/√2 < p_+`.
//! For `β > 0` the curve encloses all three equilibria; its right half is
//! still a positive arc through `(p_+, 0)`, which is all a bump needs.
//!
//! A *bump* is the arc of such a curve that starts at its maximum `(p_+, 0)`
//! at `z = 0` and ends at `(p, -q)` at `z = εℓ`. The `z`-length of that arc
//! is the period function `T_+(p, q)`; inverting it in `q` for a given `εℓ`
//! is the single-bump Dirichlet-to-Neumann map.
//!
//! Orientation: the stored half-profile decreases on `(0, εℓ)`, so `u' < 0`
//! there. Looping and internal edges use its even reflection.

use crate::error::{Error, Result};
use crate::ode::rk4_richardson_path;
use crate::quad::integrate;

/// Largest boundary amplitude accepted by the single-bump solver.
pub const P_MAX: f64 = 0.05;
/// Largest boundary flux accepted by the single-bump solver.
pub const Q_MAX: f64 = 0.05;
/// Shortest scaled half-length accepted by the single-bump solver.
pub const MIN_EPS_ELL: f64 = 3.0;

const PERIOD_TOL: f64 = 1e-14;
/// Integration step used for bump trajectories.
const ODE_STEP: f64 = 4e-3;

/// The homoclinic orbit (`β = 0`) with its maximum at `z = 0`.
pub fn soliton(z: f64) -> f64 {
    1.0 / z.cosh()
}

/// Residual `-u'' + u - 2u³` of the stationary equation.
pub fn stationary_residual(u: f64, u_zz: f64) -> f64 {
    -u_zz + u - 2.0 * u * u * u
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub u: f64,
    pub v: f64,
}

impl PhasePoint {
    pub fn energy(&self) -> f64 {
        self.v * self.v - self.u * self.u + self.u.powi(4)
    }
}

/// A level set `E_β` with `β > -1/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLevel {
    pub beta: f64,
    /// Squared lower turning point `p_-²`; non-positive when `β ≥ 0`.
    pub p_minus_sq: f64,
    /// Squared upper turning point `p_+²`.
    pub p_plus_sq: f64,
}

impl EnergyLevel {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > -0.25) || !beta.is_finite() {
            return Err(Error::OutOfRegime(format!(
                "energy level {beta} not above -1/4"
            )));
        }
        let root = (1.0 + 4.0 * beta).sqrt();
        let p_plus_sq = 0.5 * (1.0 + root);
        // p_+² p_-² = -β; this avoids the cancellation in (1 - root) / 2.
        let p_minus_sq = -beta / p_plus_sq;
        Ok(Self {
            beta,
            p_minus_sq,
            p_plus_sq,
        })
    }

    /// Lower turning point, or `0` when the orbit has none (`β ≥ 0`).
    pub fn p_minus(&self) -> f64 {
        self.p_minus_sq.max(0.0).sqrt()
    }

    /// Whether the orbit is a periodic one inside the homoclinic loop.
    pub fn is_bounded_orbit(&self) -> bool {
        self.beta < 0.0
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus_sq.sqrt()
    }

    /// `β + u² - u⁴`, i.e. `v²` on the curve.
    pub fn v_squared(&self, u: f64) -> f64 {
        (self.p_plus_sq - u * u) * (u * u - self.p_minus_sq)
    }
}

/// Level through the boundary point `(p, -q)`.
pub fn energy_level_from_boundary(p: f64, q: f64) -> Result<EnergyLevel> {
    if !(p > 0.0) || !(q >= 0.0) || !p.is_finite() || !q.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need p > 0 and q >= 0, got p = {p}, q = {q}"
        )));
    }
    let beta = q * q - p * p + p.powi(4);
    EnergyLevel::new(beta)
}

/// `z`-length of the arc of `E_β` from `(p_+, 0)` down to `(p, -q)`.
///
/// With `u² = p_-² + (p_+² - p_-²) sin²φ` the integrand
/// `1 / sqrt(β + u² - u⁴)` becomes `1 / sqrt(p_-² + (p_+² - p_-²) sin²φ)`,
/// which has no endpoint singularity at either turning point.
pub fn period_t_plus(p: f64, q: f64) -> Result<f64> {
    let level = energy_level_from_boundary(p, q)?;
    period_on_level(&level, p, q)
}

fn period_on_level(level: &EnergyLevel, p: f64, q: f64) -> Result<f64> {
    let width = level.p_plus_sq - level.p_minus_sq;
    let gap_top = level.p_plus_sq - p * p;
    if gap_top < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "p = {p} lies above the turning point p_+ = {}",
            level.p_plus()
        )));
    }
    if q == 0.0 && p * p >= 0.5 {
        // (p, 0) is the maximum itself.
        return Ok(0.0);
    }
    // p² - p_-² = q² / (p_+² - p²), again free of cancellation.
    let sin_sq = if q == 0.0 {
        0.0
    } else {
        (q * q / gap_top / width).min(1.0)
    };
    let phi0 = sin_sq.sqrt().asin();
    let pm2 = level.p_minus_sq;
    let f = |phi: f64| {
        let s = phi.sin();
        1.0 / (pm2 + width * s * s).sqrt()
    };
    Ok(integrate(f, phi0, std::f64::consts::FRAC_PI_2, PERIOD_TOL).value)
}

/// Central finite-difference partials `(∂_p T_+, ∂_q T_+)`.
pub fn period_partials(p: f64, q: f64) -> Result<(f64, f64)> {
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "partials need q > 0, got {q}"
        )));
    }
    let dp = 1e-4 * p;
    let dq = 1e-4 * q;
    let tp = (period_t_plus(p + dp, q)? - period_t_plus(p - dp, q)?) / (2.0 * dp);
    let tq = (period_t_plus(p, q + dq)? - period_t_plus(p, q - dq)?) / (2.0 * dq);
    Ok((tp, tq))
}

/// Leading-order asymptotics `-ln((p + q) / 4)` of the period function.
pub fn period_leading_order(p: f64, q: f64) -> f64 {
    -((p + q) / 4.0).ln()
}

/// Decreasing half-profile on `[0, εℓ]` from `(p_+, 0)` to `(p, -q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSolution {
    pub eps_ell: f64,
    pub p: f64,
    pub q: f64,
    pub level: EnergyLevel,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

fn nls_rhs(_z: f64, y: &[f64; 2]) -> [f64; 2] {
    [y[1], y[0] - 2.0 * y[0].powi(3)]
}

fn steps_for(length: f64) -> usize {
    ((length / ODE_STEP).ceil() as usize).max(16)
}

/// Solve `T_+(p, q) = εℓ` for the flux `q` and sample the resulting bump.
pub fn shoot_bump(eps_ell: f64, p: f64) -> Result<BumpSolution> {
    if !(eps_ell >= MIN_EPS_ELL) || !eps_ell.is_finite() {
        return Err(Error::OutOfRegime(format!(
            "scaled half-length {eps_ell} below {MIN_EPS_ELL}"
        )));
    }
    if !(p > 0.0 && p <= P_MAX) {
        return Err(Error::OutOfRegime(format!(
            "boundary amplitude {p} outside (0, {P_MAX}]"
        )));
    }
    let q = solve_flux(eps_ell, p)?;
    if q > Q_MAX {
        return Err(Error::OutOfRegime(format!("flux {q} exceeds {Q_MAX}")));
    }
    let level = energy_level_from_boundary(p, q)?;
    let steps = steps_for(eps_ell);
    // Integrate from the tail back to the maximum: the growing mode then
    // grows no faster than the solution itself.
    let path = rk4_richardson_path(&nls_rhs, eps_ell, [p, -q], 0.0, steps);
    let n = path.len();
    let mut z = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for k in 0..n {
        let y = path[n - 1 - k];
        z.push(eps_ell * k as f64 / steps as f64);
        u.push(y[0]);
        v.push(y[1]);
    }
    Ok(BumpSolution {
        eps_ell,
        p,
        q,
        level,
        z,
        u,
        v,
    })
}

/// Bisection on the monotone map `q ↦ T_+(p, q)`.
fn solve_flux(eps_ell: f64, p: f64) -> Result<f64> {
    let g = |q: f64| period_t_plus(p, q).map(|t| t - eps_ell);
    let g_lo = g(0.0)?;
    if g_lo <= 0.0 {
        return Err(Error::OutOfRegime(format!(
            "p = {p} too large for a monotone bump of half-length {eps_ell} \
             (half-period {:.6} <= {eps_ell})",
            g_lo + eps_ell
        )));
    }
    let mut hi = p.max(1e-300);
    while g(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1.0 {
            return Err(Error::OutOfRegime(format!(
                "no flux q <= 1 reaches half-length {eps_ell} from p = {p}"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

impl BumpSolution {
    pub fn p_plus(&self) -> f64 {
        self.level.p_plus()
    }

    pub fn beta(&self) -> f64 {
        self.level.beta
    }

    pub fn step(&self) -> f64 {
        self.eps_ell / (self.z.len() - 1) as f64
    }

    /// Largest deviation of `v² - u² + u⁴` from `β` over the samples.
    pub fn energy_drift(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(&u, &v)| (PhasePoint { u, v }.energy() - self.level.beta).abs())
            .fold(0.0, f64::max)
    }

    /// Dirichlet-to-Neumann residual `|u'(εℓ) - u(εℓ) + 4 e^{-εℓ}| = |-q - p + 4e^{-εℓ}|`.
    pub fn dtn_residual(&self) -> f64 {
        (-self.q - self.p + 4.0 * (-self.eps_ell).exp()).abs()
    }

    /// Re-integrate forward from the maximum and return `(u, u')` at `εℓ`.
    pub fn reintegrate_end(&self) -> PhasePoint {
        let path = rk4_richardson_path(
            &nls_rhs,
            0.0,
            [self.p_plus(), 0.0],
            self.eps_ell,
            steps_for(self.eps_ell),
        );
        let y = path.last().copied().unwrap_or([f64::NAN; 2]);
        PhasePoint { u: y[0], v: y[1] }
    }

    /// Profile value at `|z| ≤ εℓ` (even extension), by cubic Hermite
    /// interpolation of the samples.
    pub fn value_at(&self, z: f64) -> f64 {
        let z = z.abs().min(self.eps_ell);
        let h = self.step();
        let k = ((z / h).floor() as usize).min(self.z.len() - 2);
        let t = (z - self.z[k]) / h;
        let (u0, u1) = (self.u[k], self.u[k + 1]);
        let (m0, m1) = (self.v[k] * h, self.v[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * u0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * u1
            + (t3 - t2) * m1
    }

    /// `L²` mass `∫_0^{εℓ} u² dz` of the half-profile, by quadrature on the
    /// level set (`dz = du / |v|`).
    pub fn half_mass(&self) -> f64 {
        let level = self.level;
        let width = level.p_plus_sq - level.p_minus_sq;
        let gap_top = level.p_plus_sq - self.p * self.p;
        let sin_sq = (self.q * self.q / gap_top / width).min(1.0);
        let phi0 = sin_sq.sqrt().asin();
        // dz = du / |v| = dφ / u, so u² dz = u dφ.
        let g = |phi: f64| {
            let s = phi.sin();
            (level.p_minus_sq + width * s * s).sqrt()
        };
        integrate(g, phi0, std::f64::consts::FRAC_PI_2, PERIOD_TOL).value
    }
}

/// Odd and even solutions of `-w'' + w - 6u²w = 0` along a bump.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedPair {
    pub z: Vec<f64>,
    /// `u'` on the samples (negative inside the interval).
    pub du: Vec<f64>,
    /// Even solution normalised by `s(0) = 1`, `s'(0) = 0`.
    pub s: Vec<f64>,
    pub ds: Vec<f64>,
    /// `u''(εℓ) / u'(εℓ)` in the decreasing orientation, `-p(1 - 2p²) / q`.
    pub odd_ratio: f64,
    /// Same ratio for the reflected (increasing) profile, `p(1 - 2p²) / q`.
    pub odd_ratio_reflected: f64,
    /// `s'(εℓ) / s(εℓ)`.
    pub even_ratio: f64,
    /// Sign changes of `s` on `(0, εℓ)`.
    pub s_zeros: usize,
}

fn linear_rhs(_z: f64, y: &[f64; 4]) -> [f64; 4] {
    let u = y[0];
    [y[1], u - 2.0 * u * u * u, y[3], (1.0 - 6.0 * u * u) * y[2]]
}

pub fn count_sign_changes(values: &[f64]) -> usize {
    let mut count = 0;
    let mut last = 0.0f64;
    for &x in values {
        if x == 0.0 {
            continue;
        }
        if last != 0.0 && (x > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = x;
    }
    count
}

/// Integrate the even linearised solution alongside the bump and collect the
/// endpoint Weyl–Titchmarsh ratios.
pub fn linearized_pair(b: &BumpSolution) -> Result<LinearizedPair> {
    let (s, ds) = even_solution(b);
    // Interior samples only: s(εℓ) itself is the boundary value.
    let s_zeros = count_sign_changes(&s[..s.len() - 1]);
    let end_s = *s.last().unwrap_or(&f64::NAN);
    let end_ds = *ds.last().unwrap_or(&f64::NAN);
    let (p, q) = (b.p, b.q);
    let odd_ratio_reflected = p * (1.0 - 2.0 * p * p) / q;
    let pair = LinearizedPair {
        z: b.z.clone(),
        du: b.v.clone(),
        s,
        ds,
        odd_ratio: -odd_ratio_reflected,
        odd_ratio_reflected,
        even_ratio: end_ds / end_s,
        s_zeros,
    };
    if pair.s_zeros != 1 {
        return Err(Error::OutOfRegime(format!(
            "even linearised solution has {} zeros on (0, {}), expected exactly one",
            pair.s_zeros, b.eps_ell
        )));
    }
    if pair.du[1..pair.du.len() - 1].iter().any(|&d| d >= 0.0) {
        return Err(Error::OutOfRegime("bump is not strictly decreasing".into()));
    }
    Ok(pair)
}

/// Even solution `s` of `-w'' + w - 6u²w = 0` with `s(0) = 1`, `s'(0) = 0`,
/// and its derivative, on the bump's samples.
pub fn even_solution(b: &BumpSolution) -> (Vec<f64>, Vec<f64>) {
    let steps = b.z.len() - 1;
    rk4_richardson_path(
        &linear_rhs,
        0.0,
        [b.p_plus(), 0.0, 1.0, 0.0],
        b.eps_ell,
        steps,
    )
    .into_iter()
    .map(|y| (y[2], y[3]))
    .unzip()
}

/// Profile of the orbit on level `β` started at its maximum, sampled at
/// `steps + 1` equally spaced points of `[0, length]`.
pub fn profile_from_maximum(level: &EnergyLevel, length: f64, steps: usize) -> Vec<f64> {
    rk4_richardson_path(&nls_rhs, 0.0, [level.p_plus(), 0.0], length, steps)
        .into_iter()
        .map(|y| y[0])
        .collect()
}

/// Solution of `-w'' + w - 6u²w = 0` on the even reflection of `b` over
/// `[-εℓ, εℓ]` with `w(-εℓ) = 0`, `w'(-εℓ) = 1`. Returns the samples of `w`.
pub fn shoot_dirichlet_full(b: &BumpSolution) -> Vec<f64> {
    let steps = 2 * (b.z.len() - 1);
    // Reflected profile: at -εℓ the function increases towards the maximum.
    rk4_richardson_path(
        &linear_rhs,
        -b.eps_ell,
        [b.p, b.q, 0.0, 1.0],
        b.eps_ell,
        steps,
    )
    .into_iter()
    .map(|y| y[2])
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: composite Simpson on `u = p_+ - t²`, which turns
    /// the inverse-square-root singularity at `p_+` into a smooth integrand,
    /// with geometric grading near the lower limit.
    fn period_oracle(p: f64, q: f64) -> f64 {
        let beta = q * q - p * p + p.powi(4);
        let pp = ((1.0 + (1.0 + 4.0 * beta).sqrt()) / 2.0).sqrt();
        let tmax = (pp - p).sqrt();
        let pm2 = -beta / (pp * pp);
        // β + u² - u⁴ = (p_+ - u)(p_+ + u)(u² - p_-²) and p_+ - u = t²
        let g = |t: f64| {
            let u = pp - t * t;
            2.0 / ((pp + u) * (u * u - pm2)).sqrt()
        };
        // Split [0, tmax] into geometrically shrinking pieces towards tmax.
        let mut total = 0.0;
        let mut a = 0.0;
        let mut remaining = tmax;
        for _ in 0..60 {
            let b = a + 0.5 * remaining;
            total += simpson(&g, a, b, 2000);
            remaining = tmax - b;
            a = b;
            if remaining < 1e-16 {
                break;
            }
        }
        total
    }

    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn soliton_values() {
        assert_eq!(soliton(0.0), 1.0);
        assert!((soliton(1.0) - 0.648_054_273_7).abs() < 1e-10);
        for k in 0..200 {
            let z = -10.0 + 0.1 * k as f64;
            let u = soliton(z);
            let u_zz = u - 2.0 * u.powi(3); // sech'' = sech - 2 sech³
            let t = z.tanh();
            let exact_zz = u * (t * t) - u * u * u;
            assert!((u_zz - exact_zz).abs() < 1e-14);
            assert!(stationary_residual(u, exact_zz).abs() < 1e-14);
        }
        assert!(soliton(40.0) < 1e-16 && soliton(-40.0) < 1e-16);
    }

    #[test]
    fn energy_levels() {
        let lvl = energy_level_from_boundary(0.05, 0.02).unwrap();
        assert!((lvl.beta + 0.002_093_75).abs() < 1e-15);
        // quartic root-find oracle for u⁴ - u² - β = 0 on (1/√2, 1)
        let f = |u: f64| u.powi(4) - u * u - lvl.beta;
        let (mut lo, mut hi) = (std::f64::consts::FRAC_1_SQRT_2, 1.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) < 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        assert!((lvl.p_plus() - lo).abs() < 1e-12);
        for u in [lvl.p_plus(), lvl.p_minus()] {
            assert!((PhasePoint { u, v: 0.0 }.energy() - lvl.beta).abs() < 1e-12);
        }
        assert!(lvl.p_minus() < std::f64::consts::FRAC_1_SQRT_2);
        let outside = energy_level_from_boundary(0.1, 0.1).unwrap();
        assert!(!outside.is_bounded_orbit() && outside.p_minus() == 0.0);
        assert!(EnergyLevel::new(-0.3).is_err());
        let tiny = energy_level_from_boundary(1e-6, 1e-6 * 0.999).unwrap();
        assert!(tiny.is_bounded_orbit() && (tiny.p_plus() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn period_matches_independent_quadrature() {
        for &(p, q) in &[
            (0.01, 0.01),
            (0.001, 0.003),
            (0.05, 0.02),
            (0.2, 0.1),
            (1e-4, 1e-2),
        ] {
            let t = period_t_plus(p, q).unwrap();
            let oracle = period_oracle(p, q);
            assert!((t - oracle).abs() < 1e-9, "p={p} q={q}: {t} vs {oracle}");
        }
    }

    #[test]
    fn period_examples() {
        let lvl = EnergyLevel::new(-0.1).unwrap();
        assert_eq!(period_t_plus(lvl.p_plus(), 0.0).unwrap(), 0.0);
        let t = period_t_plus(0.01, 0.01).unwrap();
        let bound = 2.0 * 1e-4 * (2.0 * 0.01f64.ln().abs());
        assert!((t - 200f64.ln()).abs() < 10.0 * bound, "{t}");
        let t = period_t_plus(0.001, 0.003).unwrap();
        assert!((t - 1000f64.ln()).abs() < 1e-3, "{t}");
    }

    #[test]
    fn partials_follow_leading_order() {
        let (tp, tq) = period_partials(0.01, 0.01).unwrap();
        assert!(
            (tp + 50.0).abs() < 1.0 && (tq + 50.0).abs() < 1.0,
            "{tp} {tq}"
        );
        let (tp, tq) = period_partials(0.001, 0.001).unwrap();
        assert!(
            (tp + 500.0).abs() < 1.0 && (tq + 500.0).abs() < 1.0,
            "{tp} {tq}"
        );
    }

    #[test]
    fn bump_for_flower_dirichlet_value() {
        let eps_ell = 5.0;
        let p = 24.0 / 7.0 * (-5f64).exp();
        let b = shoot_bump(eps_ell, p).unwrap();
        let lead = 4.0 * (-5f64).exp() - p;
        // leading order up to O(εℓ e^{-3εℓ})
        assert!(
            (b.q - lead).abs() < 50.0 * 5.0 * (-15f64).exp(),
            "{} vs {}",
            b.q,
            lead
        );
        assert!((period_t_plus(b.p, b.q).unwrap() - eps_ell).abs() < 1e-12);
        assert!(b.energy_drift() < 1e-9);
        let end = b.reintegrate_end();
        assert!((end.u - p).abs() < 1e-8 && (end.v + b.q).abs() < 1e-8);
        assert!((b.u[0] - b.p_plus()).abs() < 1e-9 && b.v[0].abs() < 1e-9);
        assert!(b.p_plus() > std::f64::consts::FRAC_1_SQRT_2);
    }

    #[test]
    fn bump_out_of_regime() {
        // p above 4 e^{-εℓ}: no decreasing bump reaches it.
        assert!(matches!(shoot_bump(8.0, 0.002), Err(Error::OutOfRegime(_))));
        // tiny p leaves the flux above the regime cap
        assert!(matches!(shoot_bump(3.0, 1e-6), Err(Error::OutOfRegime(_))));
        assert!(matches!(shoot_bump(2.0, 0.01), Err(Error::OutOfRegime(_))));
        assert!(matches!(shoot_bump(8.0, 0.5), Err(Error::OutOfRegime(_))));
        // and p = 0.001 at εℓ = 8 is admissible with q ≈ 4e^{-8} - p > 0
        let b = shoot_bump(8.0, 0.001).unwrap();
        assert!((b.q - (4.0 * (-8f64).exp() - 0.001)).abs() < 1e-6);
    }

    #[test]
    fn linearized_pair_identities() {
        let p = 24.0 / 7.0 * (-6f64).exp();
        let b = shoot_bump(6.0, p).unwrap();
        let pair = linearized_pair(&b).unwrap();
        assert_eq!(pair.s_zeros, 1);
        // u'' = u - 2u³ at the endpoint
        let expect = p * (1.0 - 2.0 * p * p) / b.q;
        assert!((pair.odd_ratio_reflected - expect).abs() < 1e-12 * expect);
        assert!(pair.odd_ratio_reflected > 0.0);
        let (tp, tq) = period_partials(b.p, b.q).unwrap();
        assert!(pair.even_ratio > 0.0);
        assert!(
            (pair.even_ratio - tp / tq).abs() < 1e-4 * (tp / tq),
            "{} vs {}",
            pair.even_ratio,
            tp / tq
        );
    }

    #[test]
    fn s_is_proportional_to_p_derivative() {
        let p = 3.0 * (-6f64).exp();
        let b = shoot_bump(6.0, p).unwrap();
        let pair = linearized_pair(&b).unwrap();
        let steps = b.z.len() - 1;
        // r = ∂_p u at fixed q: re-shoot on the perturbed levels.
        let dp = 1e-6 * p;
        let up = profile_from_maximum(
            &energy_level_from_boundary(p + dp, b.q).unwrap(),
            b.eps_ell,
            steps,
        );
        let um = profile_from_maximum(
            &energy_level_from_boundary(p - dp, b.q).unwrap(),
            b.eps_ell,
            steps,
        );
        let pp = b.p_plus();
        let s0 = -b.q / (pp * (1.0 - 2.0 * pp * pp));
        let factor = -p * (1.0 - 2.0 * p * p) / b.q;
        let scale = pair.s.iter().map(|s| (s * s0).abs()).fold(0.0, f64::max);
        for k in (0..=steps).step_by(50) {
            let r = (up[k] - um[k]) / (2.0 * dp);
            let predicted = factor * s0 * pair.s[k];
            assert!(
                (r - predicted).abs() < 1e-4 * scale.abs() * factor.abs(),
                "z={} r={r} predicted={predicted}",
                b.z[k]
            );
        }
    }

    #[test]
    fn half_mass_approaches_one() {
        let p = 2.0 * (-10f64).exp();
        let b = shoot_bump(10.0, p).unwrap();
        assert!((b.half_mass() - 1.0).abs() < 1e-6);
        // and agrees with trapezoid on the samples
        let h = b.step();
        let trap: f64 =
            b.u.windows(2)
                .map(|w| 0.5 * h * (w[0] * w[0] + w[1] * w[1]))
                .sum();
        assert!((trap - b.half_mass()).abs() < 1e-4);
    }

    #[test]
    fn hermite_sampling_matches_samples() {
        let b = shoot_bump(6.0, 0.004).unwrap();
        for k in [0, 10, 500, b.z.len() - 1] {
            assert!((b.value_at(b.z[k]) - b.u[k]).abs() < 1e-14);
            assert!((b.value_at(-b.z[k]) - b.u[k]).abs() < 1e-14);
        }
        let z = 1.2345;
        assert!((b.value_at(z) - soliton(z)).abs() < 1e-2);
    }
}
