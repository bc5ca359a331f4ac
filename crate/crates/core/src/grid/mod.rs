//! Periodic lattice `[-L, L)^dim` and real fields sampled on it.
//!
//! Differential operators are spectral: a Fourier mode with wavevector `k`
//! is an eigenfunction of the Laplacian with eigenvalue `-|k|^2`. The
//! Nyquist mode is kept in the Laplacian symbol (with `|k| = π/h`) so that
//! `-∫ u Δu = ∫|∇u|^2` holds exactly at the discrete level.

mod io;
mod spectral;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

pub use io::{read_binary, read_csv, write_binary, write_csv, BINARY_MAGIC, BINARY_VERSION};
pub use spectral::{
    grad_sq_integral, gradient, helmholtz_solve, integrate, laplacian, spectral_interpolate,
};

struct GridInner {
    dim: usize,
    points: usize,
    half_width: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Per-axis wavenumbers in FFT order; entry `points/2` is the Nyquist mode.
    wavenumbers: Vec<f64>,
    /// `|k|^2` for every flattened index.
    k_sq: Vec<f64>,
}

/// Cheap to clone; clones share FFT plans and wavenumber tables.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl Grid {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(invalid(format!("points per axis must be a power of two >= 2, got {points}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(invalid(format!("half width must be positive, got {half_width}")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        let base = std::f64::consts::PI / half_width;
        let wavenumbers: Vec<f64> = (0..points)
            .map(|j| {
                let m = if j <= points / 2 { j as f64 } else { j as f64 - points as f64 };
                base * m
            })
            .collect();
        let total = points.pow(dim as u32);
        let mut k_sq = vec![0.0; total];
        for (flat, slot) in k_sq.iter_mut().enumerate() {
            let mut rem = flat;
            let mut acc = 0.0;
            for _ in 0..dim {
                let k = wavenumbers[rem % points];
                acc += k * k;
                rem /= points;
            }
            *slot = acc;
        }
        Ok(Grid {
            inner: Arc::new(GridInner { dim, points, half_width, forward, inverse, wavenumbers, k_sq }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn points(&self) -> usize {
        self.inner.points
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.inner.half_width / self.inner.points as f64
    }

    /// Total number of lattice points, `points^dim`.
    pub fn len(&self) -> usize {
        self.inner.k_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of lattice index `i` along any axis.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.inner.half_width + i as f64 * self.spacing()
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    pub fn k_sq(&self) -> &[f64] {
        &self.inner.k_sq
    }

    /// Lattice multi-index of a flattened (row-major, last axis fastest) index.
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for a in (0..self.dim()).rev() {
            idx[a] = rem % self.points();
            rem /= self.points();
        }
        idx
    }

    /// Physical coordinates of a flattened index; unused axes are 0.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = self.axis_coord(idx[a]);
        }
        x
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    /// True when the two grids describe the same lattice.
    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.dim() == other.dim()
                && self.points() == other.points()
                && self.half_width() == other.half_width())
    }

    pub(crate) fn fft(&self, inverse: bool) -> &Arc<dyn Fft<f64>> {
        if inverse {
            &self.inner.inverse
        } else {
            &self.inner.forward
        }
    }

    /// Largest `|u|` over the shell `max_a |x_a| > 0.9 L`.
    pub fn boundary_max(&self, field: &Field) -> f64 {
        let cut = 0.9 * self.half_width();
        field
            .values()
            .iter()
            .enumerate()
            .filter(|(flat, _)| {
                let x = self.coords(*flat);
                x[..self.dim()].iter().any(|c| c.abs() > cut)
            })
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("points", &self.points())
            .field("half_width", &self.half_width())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// Real scalar sampled on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Field { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f` at every lattice point; the closure receives `dim` coordinates.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &Grid, f: F) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|flat| {
                let x = grid.coords(flat);
                f(&x[..dim])
            })
            .collect();
        Field { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Field { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)))
        }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
    }

    /// Discrete L² norm `sqrt(∫ f^2)`.
    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn to_complex(&self) -> Vec<Complex64> {
        self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }
}
