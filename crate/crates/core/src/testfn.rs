//! Cut-off test functions and the quantities built from them.
//!
//! The test function is `ψ(t,x) = ψ1(x)^ℓ ψ2(t)^η` with
//! `ψ1(x) = Φ(|x|/T^d)` and `ψ2(t) = Φ(t/T)`, where `Φ` is a smooth
//! non-increasing cut-off equal to 1 on `[0, ½]` and 0 on `[1, ∞)`.
//!
//! [`weak_residual`] evaluates the weak form of the damped equation against
//! `ψ`; [`term_bundle`] evaluates the eight `ψ`-integrals that bound it, and
//! [`predicted_exponents`] gives their growth rates in `T`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exponents::conjugate_exponent;
use crate::grid::{integrate, laplacian, Field, Grid};
use crate::model::{damping_coeff, damping_coeff_dt, InitialData, Params, Source};
use crate::quad::{self, fit_line};

fn bump_exp(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth step `h(s) = f(s)/(f(s)+f(1-s))` with `f(s) = exp(-1/s)`, and its
/// first two derivatives.
fn smooth_step(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if s >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let f = bump_exp(s);
    let f1 = f / (s * s);
    let f2 = f * (1.0 / s.powi(4) - 2.0 / s.powi(3));
    let r = 1.0 - s;
    let g = bump_exp(r);
    let g1 = -g / (r * r);
    let g2 = g * (1.0 / r.powi(4) - 2.0 / r.powi(3));
    let d = f + g;
    let n = f1 * g - f * g1;
    let n1 = f2 * g - f * g2;
    let d1 = f1 + g1;
    (f / d, n / (d * d), n1 / (d * d) - 2.0 * n * d1 / (d * d * d))
}

/// `Φ(r)`: 1 on `[0, ½]`, 0 on `[1, ∞)`, `h(2(1-r))` in between.
pub fn cutoff(r: f64) -> f64 {
    smooth_step(2.0 * (1.0 - r)).0
}

pub fn cutoff_d1(r: f64) -> f64 {
    -2.0 * smooth_step(2.0 * (1.0 - r)).1
}

pub fn cutoff_d2(r: f64) -> f64 {
    4.0 * smooth_step(2.0 * (1.0 - r)).2
}

/// Parameters of `ψ`: powers `ℓ`, `η`, space-scale exponent `d` and horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub ell: u32,
    pub eta: u32,
    pub d: f64,
    pub horizon: f64,
}

impl CutoffSpec {
    pub fn new(ell: u32, eta: u32, d: f64, horizon: f64) -> Result<Self> {
        let spec = CutoffSpec { ell, eta, d, horizon };
        if ell < 3 || eta < 3 {
            return Err(invalid(format!("ell and eta must be at least 3, got {ell}, {eta}")));
        }
        if !(d > 0.0) {
            return Err(invalid(format!("d must be positive, got {d}")));
        }
        if !(horizon > 1.0) {
            return Err(invalid(format!("horizon T must exceed 1, got {horizon}")));
        }
        Ok(spec)
    }

    /// `ℓ = η = ⌈2p'⌉ + 2`.
    pub fn for_exponent(p: f64, d: f64, horizon: f64) -> Result<Self> {
        let power = default_power(p)?;
        Self::new(power, power, d, horizon)
    }

    /// Checks `ℓ > 2p'` and `η > 2p'`, which keeps every power of `ψ1`, `ψ2`
    /// in the bound terms positive.
    pub fn validate_for(&self, p: f64) -> Result<()> {
        let two_pc = 2.0 * conjugate_exponent(p)?;
        if !(self.ell as f64 > two_pc) || !(self.eta as f64 > two_pc) {
            return Err(invalid(format!(
                "ell = {}, eta = {} must exceed 2p' = {two_pc}",
                self.ell, self.eta
            )));
        }
        Ok(())
    }

    /// `T^d`, the radius of the spatial support.
    pub fn space_radius(&self) -> f64 {
        self.horizon.powf(self.d)
    }

    pub fn supports(&self) -> SupportRegions {
        let r = self.space_radius();
        SupportRegions { omega_radius: 2.0 * r, shell_inner: 0.5 * r, shell_outer: r }
    }
}

pub fn default_power(p: f64) -> Result<u32> {
    Ok((2.0 * conjugate_exponent(p)?).ceil() as u32 + 2)
}

/// `Ω(T) = {|x| <= 2T^d}` and the shell `Δ(T) = {T^d/2 <= |x| <= T^d}`.
/// `ψ1` itself vanishes for `|x| >= T^d`; `Ω` is kept as a bounding region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportRegions {
    pub omega_radius: f64,
    pub shell_inner: f64,
    pub shell_outer: f64,
}

impl SupportRegions {
    pub fn shell_inside_omega(&self) -> bool {
        self.shell_inner <= self.shell_outer && self.shell_outer <= self.omega_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PsiParts {
    pub psi: f64,
    pub psi_t: f64,
    pub psi_tt: f64,
    pub lap_psi: f64,
    pub lap_psi_t: f64,
}

/// `ψ1^ℓ` and `Δ(ψ1^ℓ)` at radius `r` in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SpacePart {
    value: f64,
    lap: f64,
}

/// Radial pieces of `ψ1`: value, `|∇ψ1|` and `Δψ1 = Φ'' + (n-1)Φ'/ρ` (scaled).
fn psi1_radial(spec: &CutoffSpec, n: usize, r: f64) -> (f64, f64, f64) {
    let scale = spec.space_radius();
    let rho = r / scale;
    if rho >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    if rho <= 0.5 {
        return (1.0, 0.0, 0.0);
    }
    let d1 = cutoff_d1(rho);
    let d2 = cutoff_d2(rho);
    let lap = (d2 + (n as f64 - 1.0) * d1 / rho) / (scale * scale);
    (cutoff(rho), d1.abs() / scale, lap)
}

fn space_part(spec: &CutoffSpec, n: usize, r: f64) -> SpacePart {
    let (phi, grad, lap1) = psi1_radial(spec, n, r);
    if phi == 0.0 {
        return SpacePart { value: 0.0, lap: 0.0 };
    }
    let l = spec.ell as f64;
    let value = phi.powf(l);
    let lap = l * phi.powf(l - 1.0) * lap1 + l * (l - 1.0) * phi.powf(l - 2.0) * grad * grad;
    SpacePart { value, lap }
}

/// `ψ2^η` and its first two time derivatives.
fn time_part(spec: &CutoffSpec, t: f64) -> (f64, f64, f64) {
    let horizon = spec.horizon;
    let s = t / horizon;
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    if s <= 0.5 {
        return (1.0, 0.0, 0.0);
    }
    let e = spec.eta as f64;
    let phi = cutoff(s);
    let d1 = cutoff_d1(s) / horizon;
    let d2 = cutoff_d2(s) / (horizon * horizon);
    let value = phi.powf(e);
    let dt = e * phi.powf(e - 1.0) * d1;
    let dtt = e * phi.powf(e - 1.0) * d2 + e * (e - 1.0) * phi.powf(e - 2.0) * d1 * d1;
    (value, dt, dtt)
}

/// `ψ` and its derivatives at `(t, x)` via the chain-rule identities for
/// `(ψ2^η)_tt` and `Δ(ψ1^ℓ)`.
pub fn psi_parts(spec: &CutoffSpec, params: &Params, t: f64, x: &[f64]) -> PsiParts {
    let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let sp = space_part(spec, params.dim, r);
    let (tv, tdt, tdtt) = time_part(spec, t);
    PsiParts {
        psi: sp.value * tv,
        psi_t: sp.value * tdt,
        psi_tt: sp.value * tdtt,
        lap_psi: sp.lap * tv,
        lap_psi_t: sp.lap * tdt,
    }
}

/// `ψ1^ℓ` and `Δ(ψ1^ℓ)` sampled on a grid.
pub fn sample_space_part(spec: &CutoffSpec, grid: &Grid) -> (Field, Field) {
    let n = grid.dim();
    let value = Field::from_fn(grid, |x| space_part(spec, n, x.iter().map(|c| c * c).sum::<f64>().sqrt()).value);
    let lap = Field::from_fn(grid, |x| space_part(spec, n, x.iter().map(|c| c * c).sum::<f64>().sqrt()).lap);
    (value, lap)
}

fn check_time_grid(times: &[f64], horizon: f64) -> Result<()> {
    if times.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, have: times.len() });
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let tol = 1e-9 * horizon;
    if times[0].abs() > tol || (times[times.len() - 1] - horizon).abs() > tol {
        return Err(invalid(format!(
            "trajectory covers [{}, {}], expected [0, {horizon}]",
            times[0],
            times[times.len() - 1]
        )));
    }
    if times.iter().enumerate().any(|(i, t)| (t - i as f64 * dt).abs() > tol) {
        return Err(invalid("trajectory time grid is not uniform"));
    }
    Ok(())
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// The weak form evaluated against a sum of test functions `Σ ψ_i`, all with
/// horizon `T`: returns `LHS - RHS` of
///
/// ```text
/// ∬|u|^p ψ + ∫u1 ψ(0) - b(0)∫u0 Δψ(0) - ∫u0 ψ_t(0)
///   = ∬u ψ_tt + ∫ b(t) ∫u Δψ_t - ∬u Δψ + ∫ b'(t) ∫u Δψ
/// ```
///
/// with `b = b0 (1+t)^(-β)`; for `b0 = 1`, `b' = -β(1+t)^(-β-1)`. Space
/// integrals use [`integrate`], time integrals the trapezoid rule over the
/// samples, which must lie on a uniform grid spanning `[0, T]`.
pub fn weak_residual_sum(
    traj: &[(f64, Field)],
    data: &InitialData,
    specs: &[CutoffSpec],
    params: &Params,
) -> Result<f64> {
    let first = specs.first().ok_or_else(|| invalid("at least one test function is required"))?;
    let horizon = first.horizon;
    if specs.iter().any(|s| s.horizon != horizon) {
        return Err(invalid("all test functions must share the horizon T"));
    }
    let times: Vec<f64> = traj.iter().map(|(t, _)| *t).collect();
    check_time_grid(&times, horizon)?;
    let grid = data.grid();
    for (_, f) in traj {
        if !f.grid().same_as(grid) {
            return Err(Error::GridMismatch("trajectory and data grids differ".into()));
        }
    }
    if grid.dim() != params.dim {
        return Err(Error::GridMismatch(format!("params.dim = {} but grid dim = {}", params.dim, grid.dim())));
    }
    for s in specs {
        if s.space_radius() >= grid.half_width() {
            return Err(invalid(format!(
                "test function support radius {} does not fit in the box of half width {}",
                s.space_radius(),
                grid.half_width()
            )));
        }
    }
    let space: Vec<(Field, Field)> = specs.iter().map(|s| sample_space_part(s, grid)).collect();
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let vol = grid.cell_volume();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * vol;

    let mut lhs_source = Vec::with_capacity(traj.len());
    let mut rhs = Vec::with_capacity(traj.len());
    for (t, u) in traj {
        let up = match params.source {
            Source::Power => Some(u.map(|v| v.abs().powf(params.p))),
            Source::Off => None,
        };
        let b = damping_coeff(*t, params);
        let b1 = damping_coeff_dt(*t, params);
        let (mut src, mut r) = (0.0, 0.0);
        for (spec, (value, lap)) in specs.iter().zip(&space) {
            let (tv, tdt, tdtt) = time_part(spec, *t);
            let i_u = dot(u.values(), value.values());
            let i_lap = dot(u.values(), lap.values());
            if let Some(up) = &up {
                src += tv * dot(up.values(), value.values());
            }
            r += i_u * tdtt + b * i_lap * tdt - i_lap * tv + b1 * i_lap * tv;
        }
        lhs_source.push(src);
        rhs.push(r);
    }
    let b_init = damping_coeff(0.0, params);
    let mut lhs_data = 0.0;
    for (spec, (value, lap)) in specs.iter().zip(&space) {
        let (tv, tdt, _) = time_part(spec, 0.0);
        lhs_data += tv * dot(data.u1.values(), value.values())
            - b_init * tv * dot(data.u0.values(), lap.values())
            - tdt * dot(data.u0.values(), value.values());
    }
    Ok(trapezoid(&lhs_source, dt) + lhs_data - trapezoid(&rhs, dt))
}

/// Weak-form residual against a single test function; see [`weak_residual_sum`].
/// For an exact solution the residual vanishes; for a smooth `u` it equals
/// `-∬(u_tt - Δu - bΔu_t - |u|^p) ψ`.
pub fn weak_residual(traj: &[(f64, Field)], data: &InitialData, spec: &CutoffSpec, params: &Params) -> Result<f64> {
    weak_residual_sum(traj, data, std::slice::from_ref(spec), params)
}

/// Second route to the same quantity: `-∬ L[u] ψ` with `u_t`, `u_tt` from
/// centred differences on the trajectory (one-sided at the ends) and `Δ`
/// spectral.
pub fn strong_form_integral(traj: &[(f64, Field)], spec: &CutoffSpec, params: &Params) -> Result<f64> {
    let times: Vec<f64> = traj.iter().map(|(t, _)| *t).collect();
    check_time_grid(&times, spec.horizon)?;
    let grid = traj[0].1.grid().clone();
    let (value, _) = sample_space_part(spec, &grid);
    let n = traj.len();
    let dt = spec.horizon / (n - 1) as f64;
    let mut integrand = Vec::with_capacity(n);
    for i in 0..n {
        let (t, u) = (&traj[i].0, &traj[i].1);
        let (im, ip) = if i == 0 { (0, 2) } else if i == n - 1 { (n - 3, n - 1) } else { (i - 1, i + 1) };
        let c = if i == 0 { 1 } else if i == n - 1 { n - 2 } else { i };
        let (um, uc, up) = (traj[im].1.values(), traj[c].1.values(), traj[ip].1.values());
        let utt: Vec<f64> = um.iter().zip(uc).zip(up).map(|((a, b), c)| (a - 2.0 * b + c) / (dt * dt)).collect();
        // first derivative at sample i: centred inside, second-order one-sided at the ends
        let ut: Vec<f64> = if i == 0 {
            let (u0, u1, u2) = (traj[0].1.values(), traj[1].1.values(), traj[2].1.values());
            u0.iter().zip(u1).zip(u2).map(|((a, b), c)| (-3.0 * a + 4.0 * b - c) / (2.0 * dt)).collect()
        } else if i == n - 1 {
            let (a0, a1, a2) = (traj[n - 3].1.values(), traj[n - 2].1.values(), traj[n - 1].1.values());
            a0.iter().zip(a1).zip(a2).map(|((a, b), c)| (a - 4.0 * b + 3.0 * c) / (2.0 * dt)).collect()
        } else {
            um.iter().zip(up).map(|(a, c)| (c - a) / (2.0 * dt)).collect()
        };
        let lap_u = laplacian(u);
        let lap_ut = laplacian(&Field::from_values(&grid, ut)?);
        let b = damping_coeff(*t, params);
        let (tv, _, _) = time_part(spec, *t);
        let residual: Vec<f64> = (0..grid.len())
            .map(|j| {
                let src = match params.source {
                    Source::Power => u.values()[j].abs().powf(params.p),
                    Source::Off => 0.0,
                };
                (utt[j] - lap_u.values()[j] - b * lap_ut.values()[j] - src) * value.values()[j]
            })
            .collect();
        integrand.push(-tv * integrate(&Field::from_values(&grid, residual)?));
    }
    Ok(trapezoid(&integrand, dt))
}

/// The nine nonnegative integrals bounding the weak form, in the order of
/// the estimate: two pure-time terms, two pure-space terms, two mixed
/// terms carrying `T^(-βp')`, two terms carrying the weight
/// `(1+t)^(-(β+1)p')`, and the coefficient of `∫|u0|` in the data term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermBundle {
    pub b_tt: f64,
    pub b_t2: f64,
    pub b_dx1: f64,
    pub b_dx2: f64,
    pub b_mix1: f64,
    pub b_mix2: f64,
    pub b_beta1: f64,
    pub b_beta2: f64,
    pub d_data: f64,
}

pub const TERM_NAMES: [&str; 9] =
    ["B_tt", "B_t2", "B_dx1", "B_dx2", "B_mix1", "B_mix2", "B_beta1", "B_beta2", "D_data"];

impl TermBundle {
    pub fn values(&self) -> [f64; 9] {
        [
            self.b_tt, self.b_t2, self.b_dx1, self.b_dx2, self.b_mix1, self.b_mix2, self.b_beta1,
            self.b_beta2, self.d_data,
        ]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, f64)> {
        TERM_NAMES.into_iter().zip(self.values())
    }
}

/// Surface measure of the unit sphere, `|S^(n-1)|`.
fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("dimension validated to 1..=3"),
    }
}

const MIN_CELLS: usize = 64;
const QUAD_TOL: f64 = 1e-10;

/// Evaluates every [`TermBundle`] integral by midpoint quadrature over its
/// exact support: time terms on `(T/2, T)`, shell terms on `T^d/2 <= |x| <= T^d`,
/// in radial coordinates. Cell counts start at 64 per transition zone and
/// double until consecutive values agree.
pub fn term_bundle(spec: &CutoffSpec, params: &Params) -> Result<TermBundle> {
    params.validate()?;
    spec.validate_for(params.p)?;
    let pc = conjugate_exponent(params.p)?;
    let n = params.dim;
    let horizon = spec.horizon;
    let (l, e) = (spec.ell as f64, spec.eta as f64);
    let rad = spec.space_radius();
    let area = sphere_area(n);

    let psi2 = |t: f64| {
        let s = t / horizon;
        (cutoff(s), cutoff_d1(s).abs() / horizon, cutoff_d2(s).abs() / (horizon * horizon))
    };
    let time = |f: &dyn Fn(f64) -> f64| quad::midpoint_refined(f, 0.5 * horizon, horizon, MIN_CELLS, QUAD_TOL);
    let tau_tt = time(&|t| {
        let (v, _, d2) = psi2(t);
        v.powf(e - pc) * d2.powf(pc)
    });
    let tau_t2 = time(&|t| {
        let (v, d1, _) = psi2(t);
        v.powf(e - 2.0 * pc) * d1.powf(2.0 * pc)
    });
    let tau_mix = time(&|t| {
        let (v, d1, _) = psi2(t);
        v.powf(e - pc) * d1.powf(pc)
    });
    // ∫_0^T ψ2^η: plateau on [0, T/2] plus the transition
    let tau_full = 0.5 * horizon + time(&|t| psi2(t).0.powf(e));
    let k = -(params.beta + 1.0) * pc;
    let plateau = if (k + 1.0).abs() < 1e-14 {
        (1.0 + 0.5 * horizon).ln()
    } else {
        ((1.0 + 0.5 * horizon).powf(k + 1.0) - 1.0) / (k + 1.0)
    };
    let tau_beta = plateau + time(&|t| (1.0 + t).powf(k) * psi2(t).0.powf(e));

    let space = |f: &dyn Fn(f64) -> f64| {
        area * quad::midpoint_refined(|r| f(r) * r.powi(n as i32 - 1), 0.5 * rad, rad, MIN_CELLS, QUAD_TOL)
    };
    let ball = area * (0.5 * rad).powi(n as i32) / n as f64;
    let sigma_0 = ball + space(&|r| psi1_radial(spec, n, r).0.powf(l));
    let sigma_lap = space(&|r| {
        let (v, _, lap) = psi1_radial(spec, n, r);
        v.powf(l - pc) * lap.abs().powf(pc)
    });
    let sigma_grad = space(&|r| {
        let (v, g, _) = psi1_radial(spec, n, r);
        v.powf(l - 2.0 * pc) * g.powf(2.0 * pc)
    });

    // sup over the shell of ψ1^(ℓ-1)|Δψ1| + ψ1^(ℓ-2)|∇ψ1|^2, plus |ψ2'(0)| sup ψ1^ℓ
    let samples = 4096;
    let weight_sup = (0..=samples)
        .map(|i| {
            let r = rad * (0.5 + 0.5 * i as f64 / samples as f64);
            let (v, g, lap) = psi1_radial(spec, n, r);
            v.powf(l - 1.0) * lap.abs() + v.powf(l - 2.0) * g * g
        })
        .fold(0.0f64, f64::max);
    let d_data = weight_sup + psi2(0.0).1;

    let mix_pref = horizon.powf(-params.beta * pc);
    Ok(TermBundle {
        b_tt: sigma_0 * tau_tt,
        b_t2: sigma_0 * tau_t2,
        b_dx1: tau_full * sigma_lap,
        b_dx2: tau_full * sigma_grad,
        b_mix1: mix_pref * tau_mix * sigma_lap,
        b_mix2: mix_pref * tau_mix * sigma_grad,
        b_beta1: tau_beta * sigma_lap,
        b_beta2: tau_beta * sigma_grad,
        d_data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub r2: f64,
}

/// Least-squares slope of `log value` against `log T`.
pub fn slope_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 4 {
        return Err(Error::InsufficientSamples { needed: 4, have: points.len() });
    }
    if let Some((t, v)) = points.iter().find(|(t, v)| !(*v > 0.0) || !(*t > 0.0)) {
        return Err(invalid(format!("slope fit needs positive data, got ({t}, {v})")));
    }
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let fit = fit_line(&xs, &ys);
    Ok(SlopeFit { slope: fit.slope, r2: fit.r2 })
}

/// Growth of `∫_0^T (1+t)^(-(β+1)p') dt`: `T^(1-(β+1)p')` when `βp < -1`,
/// `ln T` when `βp = -1`, bounded when `βp > -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightGrowth {
    Power(f64),
    Log,
    Bounded,
}

pub fn weight_growth(p: f64, beta: f64) -> Result<WeightGrowth> {
    let pc = conjugate_exponent(p)?;
    let bp = beta * p;
    Ok(if (bp + 1.0).abs() < 1e-12 {
        WeightGrowth::Log
    } else if bp < -1.0 {
        WeightGrowth::Power(1.0 - (beta + 1.0) * pc)
    } else {
        WeightGrowth::Bounded
    })
}

/// Exponent of `T` for one bound term. `log` marks an extra `ln T` factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedExponent {
    pub value: f64,
    pub log: bool,
}

/// Predicted growth exponent per [`TermBundle`] field, plus `D_data_time`
/// for the `|ψ2'(0)|` part of the data term.
pub fn predicted_exponents(params: &Params, d: f64) -> Result<BTreeMap<&'static str, PredictedExponent>> {
    let pc = conjugate_exponent(params.p)?;
    let nd = params.dim as f64 * d;
    let beta = params.beta;
    let exact = |value| PredictedExponent { value, log: false };
    let time = -2.0 * pc + 1.0 + nd;
    let space = -2.0 * d * pc + 1.0 + nd;
    let mix = -beta * pc - pc - 2.0 * d * pc + 1.0 + nd;
    let weighted = match weight_growth(params.p, beta)? {
        WeightGrowth::Power(g) => exact(-2.0 * d * pc + nd + g),
        WeightGrowth::Log => PredictedExponent { value: -2.0 * d * pc + nd, log: true },
        WeightGrowth::Bounded => exact(-2.0 * d * pc + nd),
    };
    let mut map = BTreeMap::new();
    map.insert("B_tt", exact(time));
    map.insert("B_t2", exact(time));
    map.insert("B_dx1", exact(space));
    map.insert("B_dx2", exact(space));
    map.insert("B_mix1", exact(mix));
    map.insert("B_mix2", exact(mix));
    map.insert("B_beta1", weighted);
    map.insert("B_beta2", weighted);
    map.insert("D_data", exact(-2.0 * d));
    map.insert("D_data_time", exact(-1.0));
    Ok(map)
}

/// Whether an exponent belongs to a data term (excluded from the sign test).
pub fn is_data_term(name: &str) -> bool {
    name.starts_with("D_")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{beta_threshold, scaling_d};
    use proptest::prelude::*;

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff(0.3), 1.0);
        assert_eq!(cutoff(2.0), 0.0);
        assert!((cutoff(0.75) - 0.5).abs() < 1e-15);
        assert!(cutoff(0.6) > cutoff(0.9));
    }

    #[test]
    fn cutoff_derivatives_match_finite_differences() {
        let h = 1e-5;
        for r in [0.55, 0.6, 0.7, 0.75, 0.8, 0.9, 0.97] {
            let fd1 = (cutoff(r + h) - cutoff(r - h)) / (2.0 * h);
            let fd2 = (cutoff(r + h) - 2.0 * cutoff(r) + cutoff(r - h)) / (h * h);
            assert!((fd1 - cutoff_d1(r)).abs() < 1e-7, "r={r}");
            assert!((fd2 - cutoff_d2(r)).abs() < 1e-4, "r={r}");
        }
        for r in [0.5, 1.0] {
            assert!(cutoff_d1(r).abs() < 1e-12 && cutoff_d2(r).abs() < 1e-12);
        }
    }

    fn params(n: usize, p: f64, beta: f64) -> Params {
        Params::new(n, p, beta, 1.0).unwrap()
    }

    #[test]
    fn psi_outside_support_is_zero() {
        let spec = CutoffSpec::new(6, 6, 1.0, 4.0).unwrap();
        let pr = params(2, 2.0, 0.0);
        assert_eq!(psi_parts(&spec, &pr, 5.0, &[0.0, 0.0]), PsiParts::default());
        assert_eq!(psi_parts(&spec, &pr, 1.0, &[3.0, 3.0]), PsiParts::default());
    }

    #[test]
    fn psi_time_derivatives_vanish_early() {
        let spec = CutoffSpec::new(6, 6, 1.0, 4.0).unwrap();
        let pr = params(1, 2.0, 0.0);
        let parts = psi_parts(&spec, &pr, 1.5, &[2.5]);
        assert!(parts.psi > 0.0);
        assert_eq!(parts.psi_t, 0.0);
        assert_eq!(parts.psi_tt, 0.0);
    }

    #[test]
    fn psi_laplacian_vanishes_in_inner_ball() {
        let spec = CutoffSpec::new(6, 6, 1.0, 4.0).unwrap();
        let pr = params(3, 2.0, 0.0);
        let parts = psi_parts(&spec, &pr, 2.5, &[1.0, 0.5, 0.2]);
        assert_eq!(parts.lap_psi, 0.0);
        assert_eq!(parts.lap_psi_t, 0.0);
        assert_eq!(psi_parts(&spec, &pr, 2.5, &[0.0, 0.0, 0.0]).lap_psi, 0.0);
    }

    #[test]
    fn psi_time_derivatives_match_finite_differences() {
        let spec = CutoffSpec::new(6, 7, 1.0, 3.0).unwrap();
        let pr = params(2, 2.0, 0.0);
        let x = [1.0, 1.5];
        let h = 1e-4;
        for t in [1.6, 2.0, 2.3, 2.8] {
            let f = |t| psi_parts(&spec, &pr, t, &x).psi;
            let fd1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let fd2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            let parts = psi_parts(&spec, &pr, t, &x);
            assert!((fd1 - parts.psi_t).abs() < 1e-6, "t={t}: {fd1} vs {}", parts.psi_t);
            assert!((fd2 - parts.psi_tt).abs() < 1e-5, "t={t}: {fd2} vs {}", parts.psi_tt);
            let lap_fd = {
                let g = |t| psi_parts(&spec, &pr, t, &x).lap_psi;
                (g(t + h) - g(t - h)) / (2.0 * h)
            };
            assert!((lap_fd - parts.lap_psi_t).abs() < 1e-6);
        }
    }

    #[test]
    fn radial_laplacian_matches_spectral_laplacian() {
        for dim in [1usize, 2] {
            let spec = CutoffSpec::new(6, 6, 1.0, 3.0).unwrap();
            let points = if dim == 1 { 1024 } else { 512 };
            let grid = Grid::new(dim, points, 6.0).unwrap();
            let (value, lap) = sample_space_part(&spec, &grid);
            let spectral = laplacian(&value);
            let err = lap.values().iter().zip(spectral.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-4 * lap.linf(), "dim {dim}: {err}");
        }
    }

    #[test]
    fn supports_nested() {
        let spec = CutoffSpec::new(6, 6, 2.0, 3.0).unwrap();
        let s = spec.supports();
        assert!(s.shell_inside_omega());
        assert_eq!(s.shell_outer, 9.0);
        assert_eq!(s.omega_radius, 18.0);
    }

    #[test]
    fn spec_validation() {
        assert!(CutoffSpec::new(2, 6, 1.0, 4.0).is_err());
        assert!(CutoffSpec::new(6, 6, 1.0, 1.0).is_err());
        let spec = CutoffSpec::new(4, 6, 1.0, 4.0).unwrap();
        assert!(spec.validate_for(2.0).is_err());
        assert_eq!(CutoffSpec::for_exponent(2.0, 1.0, 8.0).unwrap().ell, 6);
        assert_eq!(CutoffSpec::for_exponent(3.0, 1.0, 8.0).unwrap().ell, 5);
    }

    #[test]
    fn slope_fit_examples() {
        let ts: [f64; 5] = [8.0, 16.0, 32.0, 64.0, 128.0];
        let fit = slope_fit(&ts.map(|t| (t, t.powf(-2.0)))).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12 && (fit.r2 - 1.0).abs() < 1e-12);
        let fit = slope_fit(&ts.map(|t| (t, 3.0 * t.powf(1.5)))).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        // fixed ±1% multiplicative perturbations
        let noise = [0.01, -0.01, 0.005, -0.008, 0.01];
        let pts: Vec<(f64, f64)> = ts.iter().zip(noise).map(|(&t, e)| (t, t.powf(-1.0) * (1.0 + e))).collect();
        assert!((slope_fit(&pts).unwrap().slope + 1.0).abs() < 0.02);
        assert!(slope_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)]).is_err());
        assert!(slope_fit(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn predicted_examples() {
        let m = predicted_exponents(&params(1, 2.0, 0.0), 1.0).unwrap();
        assert_eq!(m["B_tt"].value, -2.0);
        assert_eq!(m["B_dx1"].value, -2.0);
        assert_eq!(m["B_mix1"].value, -4.0);
        assert_eq!(m["B_beta1"].value, -3.0);
        let m = predicted_exponents(&params(1, 2.0, -1.0), 1.0).unwrap();
        assert_eq!(m["B_beta1"].value, -2.0 * 2.0 + 1.0 + 1.0);
        let m = predicted_exponents(&params(1, 2.0, -3.0), scaling_d(-3.0)).unwrap();
        assert_eq!(m["B_dx1"].value, -5.0);
        let m = predicted_exponents(&params(1, 2.0, -0.5), 1.0).unwrap();
        assert!(m["B_beta1"].log);
    }

    #[test]
    fn term_bundle_nonnegative_and_ell_doubling_keeps_slope() {
        let pr = params(2, 2.0, 0.5);
        let base: Vec<[f64; 9]> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&t| term_bundle(&CutoffSpec::new(6, 6, 1.0, t).unwrap(), &pr).unwrap().values())
            .collect();
        let doubled: Vec<[f64; 9]> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&t| term_bundle(&CutoffSpec::new(12, 12, 1.0, t).unwrap(), &pr).unwrap().values())
            .collect();
        for row in base.iter().chain(&doubled) {
            assert!(row.iter().all(|v| *v >= 0.0));
        }
        for term in 0..8 {
            let ratios: Vec<f64> = base.iter().zip(&doubled).map(|(a, b)| b[term] / a[term]).collect();
            let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread < 1.05, "term {term}: ratios {ratios:?}");
        }
    }

    proptest! {
        #[test]
        fn subcritical_exponents_negative(n in 1usize..=3, beta in -5.0f64..3.0, frac in 0.01f64..0.99) {
            let th = beta_threshold(n as u32, beta);
            let upper = if th.is_infinite() { 8.0 } else { th.value() };
            let p = 1.0 + frac * (upper - 1.0);
            prop_assume!(p > 1.0 + 1e-6);
            let m = predicted_exponents(&params(n, p, beta), scaling_d(beta)).unwrap();
            for (name, e) in &m {
                if !is_data_term(name) {
                    prop_assert!(e.value < 0.0, "{name}: {}", e.value);
                }
            }
        }
    }
}
