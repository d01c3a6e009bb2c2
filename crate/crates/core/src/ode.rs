//! Fixed-step classical Runge–Kutta with one Richardson extrapolation level.

pub fn rk4_step<const N: usize, F>(f: &F, z: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let axpy = |y: &[f64; N], k: &[f64; N], c: f64| {
        let mut out = *y;
        for i in 0..N {
            out[i] += c * k[i];
        }
        out
    };
    let k1 = f(z, y);
    let k2 = f(z + 0.5 * h, &axpy(y, &k1, 0.5 * h));
    let k3 = f(z + 0.5 * h, &axpy(y, &k2, 0.5 * h));
    let k4 = f(z + h, &axpy(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// States at `z0 + k (z1 - z0) / steps`, `k = 0..=steps`.
pub fn rk4_path<const N: usize, F>(
    f: &F,
    z0: f64,
    y0: [f64; N],
    z1: f64,
    steps: usize,
) -> Vec<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let h = (z1 - z0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push(y);
    for k in 0..steps {
        y = rk4_step(f, z0 + k as f64 * h, &y, h);
        out.push(y);
    }
    out
}

/// Like [`rk4_path`], but each stored state is the Richardson combination
/// `(16 y_{h/2} - y_h) / 15` of a coarse and a doubled-resolution run.
pub fn rk4_richardson_path<const N: usize, F>(
    f: &F,
    z0: f64,
    y0: [f64; N],
    z1: f64,
    steps: usize,
) -> Vec<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let coarse = rk4_path(f, z0, y0, z1, steps);
    let fine = rk4_path(f, z0, y0, z1, 2 * steps);
    coarse
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let fi = &fine[2 * k];
            let mut out = [0.0; N];
            for i in 0..N {
                out[i] = (16.0 * fi[i] - c[i]) / 15.0;
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_z: f64, y: &[f64; 2]| [y[1], -y[0]];
        let path = rk4_richardson_path(&f, 0.0, [1.0, 0.0], 10.0, 500);
        let last = path.last().unwrap();
        assert!((last[0] - 10f64.cos()).abs() < 1e-10);
        assert!((last[1] + 10f64.sin()).abs() < 1e-10);
        let plain = rk4_path(&f, 0.0, [1.0, 0.0], 10.0, 500);
        let err = (plain.last().unwrap()[0] - 10f64.cos()).abs();
        assert!(err > (last[0] - 10f64.cos()).abs());
    }
}
