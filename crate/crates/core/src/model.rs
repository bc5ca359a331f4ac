//! The PDE instance: damping coefficient, source term and initial data.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{integrate, Field, Grid};

/// Right-hand side of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// `|u|^p`
    #[default]
    Power,
    /// Linear homogeneous equation.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub dim: usize,
    pub p: f64,
    pub beta: f64,
    pub b0: f64,
    pub source: Source,
}

impl Params {
    pub fn new(dim: usize, p: f64, beta: f64, b0: f64) -> Result<Self> {
        let params = Params { dim, p, beta, b0, source: Source::Power };
        params.validate()?;
        Ok(params)
    }

    pub fn linear(mut self) -> Self {
        self.source = Source::Off;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(invalid(format!("dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(invalid(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.b0 > 0.0) || !self.b0.is_finite() {
            return Err(invalid(format!("b0 must be positive, got {}", self.b0)));
        }
        if !self.beta.is_finite() {
            return Err(invalid("beta must be finite"));
        }
        Ok(())
    }
}

/// `b0 (1+t)^(-β)`.
pub fn damping_coeff(t: f64, params: &Params) -> f64 {
    params.b0 * (1.0 + t).powf(-params.beta)
}

/// Time derivative of [`damping_coeff`], `-β b0 (1+t)^(-β-1)`.
pub fn damping_coeff_dt(t: f64, params: &Params) -> f64 {
    -params.beta * params.b0 * (1.0 + t).powf(-params.beta - 1.0)
}

/// Pointwise `|u|^p`. This is the even power, not `|u|^(p-1) u`.
pub fn nonlinearity(u: &Field, p: f64) -> Result<Field> {
    let out = u.map(|v| v.abs().powf(p));
    if !out.is_finite() {
        return Err(Error::Diverged { t: f64::NAN });
    }
    Ok(out)
}

/// Standard bump profile `exp(1 - 1/(1 - s^2))` for `s < 1`, zero beyond.
pub fn bump_profile(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / q).exp()
    }
}

/// Smooth compactly supported bump `A·exp(1 - 1/(1 - |x-c|^2/r^2))`.
pub fn bump_data(grid: &Grid, amplitude: f64, center: &[f64], radius: f64) -> Result<Field> {
    if !(radius > 0.0) {
        return Err(invalid(format!("bump radius must be positive, got {radius}")));
    }
    if radius >= grid.half_width() / 2.0 {
        return Err(invalid(format!(
            "bump radius {radius} too large for box half width {}",
            grid.half_width()
        )));
    }
    if center.len() != grid.dim() {
        return Err(invalid(format!("bump center has {} coordinates, grid has {}", center.len(), grid.dim())));
    }
    if center.iter().any(|c| c.abs() + radius >= 0.9 * grid.half_width()) {
        return Err(invalid("bump support must lie strictly inside the box"));
    }
    Ok(Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
        amplitude * bump_profile((r2 / (radius * radius)).sqrt())
    }))
}

/// Lowest Fourier mode `A·Π cos(π x_a / L)`.
pub fn mode_data(grid: &Grid, amplitude: f64) -> Field {
    let k = std::f64::consts::PI / grid.half_width();
    Field::from_fn(grid, |x| amplitude * x.iter().map(|c| (k * c).cos()).product::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Bump,
    Constant,
    Mode,
}

/// Which of `(u0, u1)` receive the generated profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitTarget {
    U0,
    U1,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Field,
    pub u1: Field,
    pub mean_u1: f64,
    /// Marked as satisfying `∫ u1 > 0`; enforced by [`InitialData::theorem_data`].
    pub theorem_data: bool,
}

impl InitialData {
    pub fn new(u0: Field, u1: Field) -> Result<Self> {
        u0.check_same_grid(&u1)?;
        let mean_u1 = integrate(&u1);
        Ok(InitialData { u0, u1, mean_u1, theorem_data: false })
    }

    /// Data satisfying the sign condition `∫ u1 > 0`.
    pub fn theorem_data(u0: Field, u1: Field) -> Result<Self> {
        let mut data = Self::new(u0, u1)?;
        if !(data.mean_u1 > 0.0) {
            return Err(invalid(format!("theorem data needs ∫u1 > 0, got {}", data.mean_u1)));
        }
        data.theorem_data = true;
        Ok(data)
    }

    pub fn zero(grid: &Grid) -> Self {
        InitialData {
            u0: Field::zeros(grid),
            u1: Field::zeros(grid),
            mean_u1: 0.0,
            theorem_data: false,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u0.grid()
    }

    /// Builds data of the given kind. The default theorem-compliant choice is
    /// `u0 = 0`, `u1 = positive bump`.
    pub fn generate(
        grid: &Grid,
        kind: InitKind,
        target: InitTarget,
        amplitude: f64,
        center: &[f64],
        radius: f64,
    ) -> Result<Self> {
        let profile = match kind {
            InitKind::Bump => bump_data(grid, amplitude, center, radius)?,
            InitKind::Constant => Field::constant(grid, amplitude),
            InitKind::Mode => mode_data(grid, amplitude),
        };
        let (u0, u1) = match target {
            InitTarget::U0 => (profile, Field::zeros(grid)),
            InitTarget::U1 => (Field::zeros(grid), profile),
            InitTarget::Both => (profile.clone(), profile),
        };
        let data = Self::new(u0, u1)?;
        if data.mean_u1 > 0.0 {
            let mut data = data;
            data.theorem_data = true;
            Ok(data)
        } else {
            Ok(data)
        }
    }
}
