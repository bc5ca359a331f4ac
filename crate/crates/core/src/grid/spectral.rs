use num_complex::Complex64;

use super::{Field, Grid};
use crate::error::{Error, Result};

/// In-place multi-dimensional DFT (unnormalised in both directions).
pub(crate) fn fft_nd(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points();
    let dim = grid.dim();
    let plan = grid.fft(inverse);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let outer = n.pow(axis as u32);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * n * stride + inner;
                if stride == 1 {
                    plan.process_with_scratch(&mut data[base..base + n], &mut scratch);
                    continue;
                }
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

fn forward(f: &Field) -> Vec<Complex64> {
    let mut data = f.to_complex();
    fft_nd(f.grid(), &mut data, false);
    data
}

fn backward(grid: &Grid, mut data: Vec<Complex64>) -> Field {
    fft_nd(grid, &mut data, true);
    let scale = 1.0 / grid.len() as f64;
    let values = data.into_iter().map(|c| c.re * scale).collect();
    Field::from_values(grid, values).expect("length preserved by transform")
}

/// Multiplies every Fourier coefficient by `symbol(|k|^2)`.
fn apply_symbol<S: Fn(f64) -> f64>(f: &Field, symbol: S) -> Field {
    let grid = f.grid();
    let mut hat = forward(f);
    for (c, &k2) in hat.iter_mut().zip(grid.k_sq()) {
        *c *= symbol(k2);
    }
    backward(grid, hat)
}

/// Spectral Laplacian, `-|k|^2` per mode.
pub fn laplacian(f: &Field) -> Field {
    apply_symbol(f, |k2| -k2)
}

/// Solves `(Id - a Δ) w = rhs` mode-wise: `ŵ = r̂ / (1 + a|k|^2)`.
pub fn helmholtz_solve(rhs: &Field, a: f64) -> Field {
    if a == 0.0 {
        return rhs.clone();
    }
    apply_symbol(rhs, |k2| 1.0 / (1.0 + a * k2))
}

/// Rectangle rule `h^dim Σ f`, which is the trapezoid rule on a periodic lattice.
pub fn integrate(f: &Field) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

/// `∫|∇f|^2` by Parseval, using the same `|k|^2` as [`laplacian`].
pub fn grad_sq_integral(f: &Field) -> f64 {
    let grid = f.grid();
    let hat = forward(f);
    let sum: f64 = hat.iter().zip(grid.k_sq()).map(|(c, &k2)| k2 * c.norm_sqr()).sum();
    sum * grid.cell_volume() / grid.len() as f64
}

/// Spectral gradient, one field per axis. The Nyquist coefficient of a
/// first derivative is set to zero.
pub fn gradient(f: &Field) -> Vec<Field> {
    let grid = f.grid();
    let n = grid.points();
    let hat = forward(f);
    (0..grid.dim())
        .map(|axis| {
            let mut d = hat.clone();
            for (flat, c) in d.iter_mut().enumerate() {
                let j = grid.multi_index(flat)[axis];
                let k = if j == n / 2 { 0.0 } else { grid.wavenumbers()[j] };
                *c *= Complex64::new(0.0, k);
            }
            backward(grid, d)
        })
        .collect()
}

/// Trigonometric interpolation weights from an `n`-point periodic axis
/// starting at `x0` with spacing `h` onto the coordinate `y`.
fn interp_weights(n: usize, x0: f64, h: f64, half_width: f64, y: f64) -> Vec<f64> {
    let base = std::f64::consts::PI / half_width;
    let m = (n / 2 - 1) as f64;
    (0..n)
        .map(|j| {
            let a = base * (y - (x0 + j as f64 * h));
            // 1 + 2 Σ_{k=1}^{n/2-1} cos(k a) + cos(n a / 2), Dirichlet kernel in closed form
            let half = (0.5 * a).sin();
            let dirichlet = if half.abs() < 1e-14 { 2.0 * m + 1.0 } else { ((m + 0.5) * a).sin() / half };
            (dirichlet + (0.5 * n as f64 * a).cos()) / n as f64
        })
        .collect()
}

/// Evaluates the trigonometric interpolant of `f` at `pullback(axis, y)` for
/// every point `y` of `target`. The pullback must be separable (act on each
/// axis independently) and land inside the source box.
pub fn spectral_interpolate<P: Fn(usize, f64) -> f64>(
    f: &Field,
    target: &Grid,
    pullback: P,
) -> Result<Field> {
    let src = f.grid();
    let dim = src.dim();
    if target.dim() != dim {
        return Err(Error::GridMismatch(format!(
            "interpolation from dim {} to dim {}",
            dim,
            target.dim()
        )));
    }
    let n_src = src.points();
    let n_tgt = target.points();
    let l_src = src.half_width();
    let tol = 1e-12 * l_src;
    let mut shape = [1usize; 3];
    shape[..dim].fill(n_src);
    let mut data = f.values().to_vec();
    for axis in 0..dim {
        let mut weights = Vec::with_capacity(n_tgt);
        for m in 0..n_tgt {
            let y = pullback(axis, target.axis_coord(m));
            if y < -l_src - tol || y > l_src + tol {
                return Err(Error::OutOfRange(format!(
                    "pullback coordinate {y} outside source box [-{l_src}, {l_src}]"
                )));
            }
            weights.push(interp_weights(n_src, -l_src, src.spacing(), l_src, y));
        }
        let before: usize = shape[..axis].iter().product();
        let after: usize = shape[axis + 1..dim].iter().product();
        let mut out = vec![0.0; before * n_tgt * after];
        for b in 0..before {
            for (m, w) in weights.iter().enumerate() {
                for a in 0..after {
                    let mut acc = 0.0;
                    for (j, wj) in w.iter().enumerate() {
                        acc += wj * data[(b * n_src + j) * after + a];
                    }
                    out[(b * n_tgt + m) * after + a] = acc;
                }
            }
        }
        data = out;
        shape[axis] = n_tgt;
    }
    Field::from_values(target, data)
}
