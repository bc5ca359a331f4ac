//! Scaling maps of the linear equation.
//!
//! For `β >= -1` the map is `v(t,x) = u(λ(1+t) - 1, λx)`; with `b0 = 1` and
//! `β = -1` it carries solutions to solutions. For `β > -1` the image solves
//! the equation with damping `b0 λ^(-(β+1)) (1+t)^(-β)`. For `β < -1` the
//! time factor is `μ = λ^(2/(1-β))` and the image solves
//! `v_tt - λ^(2(β+1)/(1-β)) Δv - b0 (1+t)^(-β) Δv_t = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{laplacian, spectral_interpolate, Field, Grid};
use crate::model::{damping_coeff, InitialData, Params, Source};
use crate::stepper::{advance_fixed, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScaleKind {
    Standard,
    /// Carries the `β` that fixes the time exponent `2/(1-β)`.
    Sub { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMap {
    pub lambda: f64,
    pub kind: ScaleKind,
}

impl ScaleMap {
    pub fn standard(lambda: f64) -> Result<Self> {
        Self::new(lambda, ScaleKind::Standard)
    }

    pub fn sub(lambda: f64, beta: f64) -> Result<Self> {
        if !(beta < -1.0) {
            return Err(invalid(format!("the sub-critical map needs beta < -1, got {beta}")));
        }
        Self::new(lambda, ScaleKind::Sub { beta })
    }

    /// Picks the map matching `β`.
    pub fn for_beta(lambda: f64, beta: f64) -> Result<Self> {
        if beta < -1.0 {
            Self::sub(lambda, beta)
        } else {
            Self::standard(lambda)
        }
    }

    fn new(lambda: f64, kind: ScaleKind) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(ScaleMap { lambda, kind })
    }

    /// Factor multiplying `1+t`.
    pub fn time_factor(&self) -> f64 {
        match self.kind {
            ScaleKind::Standard => self.lambda,
            ScaleKind::Sub { beta } => self.lambda.powf(2.0 / (1.0 - beta)),
        }
    }

    /// Source time `μ(1+t) - 1` for target time `t`.
    pub fn pullback_time(&self, t: f64) -> f64 {
        self.time_factor() * (1.0 + t) - 1.0
    }

    /// Coefficient of `Δv_t` in the image equation, relative to `b0 (1+t)^(-β)`.
    pub fn damping_factor(&self, beta: f64) -> f64 {
        match self.kind {
            ScaleKind::Standard => self.lambda.powf(-(beta + 1.0)),
            ScaleKind::Sub { .. } => 1.0,
        }
    }

    /// Coefficient of `Δv` in the image equation.
    pub fn wave_factor(&self) -> f64 {
        match self.kind {
            ScaleKind::Standard => 1.0,
            ScaleKind::Sub { beta } => self.lambda.powf(2.0 * (beta + 1.0) / (1.0 - beta)),
        }
    }
}

/// Lagrange weights of the cubic through `ts` evaluated at `t`.
fn lagrange_weights(ts: &[f64], t: f64) -> Vec<f64> {
    (0..ts.len())
        .map(|i| {
            ts.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, tj)| (t - tj) / (ts[i] - tj))
                .product()
        })
        .collect()
}

/// `u(s)` from samples sorted by time, by cubic interpolation on the four
/// nearest samples.
fn sample_at(traj: &[(f64, Field)], s: f64) -> Result<Field> {
    let n = traj.len();
    let (t_first, t_last) = (traj[0].0, traj[n - 1].0);
    let tol = 1e-10 * t_last.abs().max(1.0);
    if s < t_first - tol || s > t_last + tol {
        return Err(Error::OutOfRange(format!("time {s} outside the trajectory [{t_first}, {t_last}]")));
    }
    if let Some((_, f)) = traj.iter().find(|(t, _)| (t - s).abs() <= tol) {
        return Ok(f.clone());
    }
    if n < 4 {
        return Err(Error::InsufficientSamples { needed: 4, have: n });
    }
    let upper = traj.partition_point(|(t, _)| *t < s);
    let start = upper.saturating_sub(2).min(n - 4);
    let window = &traj[start..start + 4];
    let ts: Vec<f64> = window.iter().map(|(t, _)| *t).collect();
    let w = lagrange_weights(&ts, s);
    let mut values = vec![0.0; window[0].1.values().len()];
    for (wi, (_, f)) in w.iter().zip(window) {
        for (acc, v) in values.iter_mut().zip(f.values()) {
            *acc += wi * v;
        }
    }
    Field::from_values(window[0].1.grid(), values)
}

/// Samples the image of `traj` under `map` on `target_grid` at `target_times`.
pub fn rescale_trajectory(
    traj: &[(f64, Field)],
    map: &ScaleMap,
    target_grid: &Grid,
    target_times: &[f64],
) -> Result<Vec<(f64, Field)>> {
    if traj.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, have: 0 });
    }
    if traj.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(invalid("trajectory times must be strictly increasing"));
    }
    let lambda = map.lambda;
    target_times
        .iter()
        .map(|&t| {
            let u = sample_at(traj, map.pullback_time(t))?;
            Ok((t, spectral_interpolate(&u, target_grid, |_, y| lambda * y)?))
        })
        .collect()
}

/// Settings of the simulate-then-rescale versus rescale-then-simulate
/// comparison. Both simulations use the same fixed step `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceSetup {
    pub lambda: f64,
    /// Points per axis on both grids.
    pub points: usize,
    /// Half width of the target box; the source box is `λ` times larger.
    pub half_width: f64,
    /// Comparison time in target units.
    pub t_compare: f64,
    pub dt: f64,
    /// Give the second simulation the damping `b0 λ^(-(β+1))` of the image equation.
    pub rescale_damping: bool,
}

impl InvarianceSetup {
    /// Target box `[-16, 16)`, comparison at `t = 1`, step `dt = 2.56/points`.
    pub fn at_resolution(lambda: f64, points: usize) -> Self {
        InvarianceSetup {
            lambda,
            points,
            half_width: 16.0,
            t_compare: 1.0,
            dt: 2.56 / points as f64,
            rescale_damping: false,
        }
    }
}

/// Relative `L²` distance at `t_compare` between (a) the image of the
/// simulated `u` and (b) the simulation started from the image of `u` at
/// target time 0. `data` builds the initial data of `u` on the source grid.
pub fn invariance_error<F>(params: &Params, data: F, setup: &InvarianceSetup) -> Result<f64>
where
    F: Fn(&Grid) -> Result<InitialData>,
{
    params.validate()?;
    if params.source != Source::Off {
        return Err(invalid("scaling invariance concerns the linear equation; set source = off"));
    }
    let map = ScaleMap::standard(setup.lambda)?;
    let source_grid = Grid::new(params.dim, setup.points, setup.lambda * setup.half_width)?;
    let target_grid = Grid::new(params.dim, setup.points, setup.half_width)?;
    let data = data(&source_grid)?;
    if !data.grid().same_as(&source_grid) {
        return Err(Error::GridMismatch("data must live on the source grid".into()));
    }
    let lambda = setup.lambda;
    let s_start = map.pullback_time(0.0);
    let s_end = map.pullback_time(setup.t_compare);
    if s_start < 0.0 {
        return Err(invalid(format!("lambda = {lambda} pulls target time 0 back before 0")));
    }
    let to_target = |f: &Field| spectral_interpolate(f, &target_grid, |_, y| lambda * y);

    let u0 = State::initial(&data);
    let at_start = advance_fixed(&u0, params, setup.dt, s_start)?;
    let at_end = advance_fixed(&at_start, params, setup.dt, s_end)?;
    let image = to_target(&at_end.u)?;

    let mut v_params = *params;
    if setup.rescale_damping {
        v_params.b0 *= map.damping_factor(params.beta);
    }
    let v0 = State { t: 0.0, u: to_target(&at_start.u)?, v: to_target(&at_start.v)?.map(|x| lambda * x) };
    let evolved = advance_fixed(&v0, &v_params, setup.dt, setup.t_compare)?;

    let diff = image.zip_map(&evolved.u, |a, b| a - b)?;
    let norm = evolved.u.l2();
    if !(norm > 0.0) {
        return Ok(diff.l2());
    }
    Ok(diff.l2() / norm)
}

/// Size of the term the scaling limit removes, per `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub lambda: f64,
    /// Its coefficient in the image equation: `b0 λ^(-(β+1))` for the
    /// standard map, `λ^(2(β+1)/(1-β))` for the sub map.
    pub coefficient: f64,
    /// Measured ratio of that term to the one that survives.
    pub ratio: f64,
}

/// Evolves `u` once and, for each `λ`, measures the image equation at target
/// time `t_compare`: `‖b Δv_t‖ / ‖Δv‖` for the standard map (damping against
/// wave term) and its inverse for the sub map. A decaying sequence is the
/// finite-`λ` trace of the limit equation; nothing is asserted about the limit.
pub fn damping_trend(
    params: &Params,
    data: &InitialData,
    lambdas: &[f64],
    t_compare: f64,
    dt: f64,
) -> Result<Vec<TrendPoint>> {
    params.validate()?;
    let mut maps: Vec<ScaleMap> = lambdas.iter().map(|&l| ScaleMap::for_beta(l, params.beta)).collect::<Result<_>>()?;
    maps.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let mut state = State::initial(data);
    let mut out = Vec::with_capacity(maps.len());
    for map in maps {
        let s = map.pullback_time(t_compare);
        if s < state.t {
            return Err(invalid(format!("lambda = {} pulls the comparison time before 0", map.lambda)));
        }
        state = advance_fixed(&state, params, dt, s)?;
        let damping = damping_coeff(s, params) * laplacian(&state.v).l2();
        let wave = laplacian(&state.u).l2();
        let (coefficient, ratio) = match map.kind {
            ScaleKind::Standard => (params.b0 * map.damping_factor(params.beta), damping / wave),
            ScaleKind::Sub { .. } => (map.wave_factor(), wave / damping),
        };
        out.push(TrendPoint { lambda: map.lambda, coefficient, ratio });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bump_data;
    use std::f64::consts::PI;

    fn sine_traj(grid: &Grid, times: &[f64]) -> Vec<(f64, Field)> {
        let k = PI / grid.half_width();
        times
            .iter()
            .map(|&t| (t, Field::from_fn(grid, |x| (k * (x[0] - t)).cos())))
            .collect()
    }

    #[test]
    fn identity_map_is_identity() {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let times: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
        let traj = sine_traj(&g, &times);
        let map = ScaleMap::standard(1.0).unwrap();
        let out = rescale_trajectory(&traj, &map, &g, &times).unwrap();
        for ((_, a), (_, b)) in traj.iter().zip(&out) {
            let err = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn doubling_a_periodic_profile() {
        let src = Grid::new(1, 64, 8.0).unwrap();
        let tgt = Grid::new(1, 64, 4.0).unwrap();
        let u = Field::from_fn(&src, |x| (PI * x[0] / 8.0).sin());
        let traj = vec![(0.0, u.clone()), (1.0, u.clone()), (2.0, u.clone()), (3.0, u)];
        let map = ScaleMap::standard(2.0).unwrap();
        let out = rescale_trajectory(&traj, &map, &tgt, &[0.5]).unwrap();
        let expect = Field::from_fn(&tgt, |x| (PI * 2.0 * x[0] / 8.0).sin());
        let err = out[0].1.values().iter().zip(expect.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12);
    }

    #[test]
    fn traveling_wave_stays_a_solution() {
        // u = cos(k(x - t)) solves u_tt = u_xx; so does its image
        let src = Grid::new(1, 64, 4.0).unwrap();
        let tgt = Grid::new(1, 64, 2.0).unwrap();
        let times: Vec<f64> = (0..=60).map(|i| 0.05 * i as f64).collect();
        let traj = sine_traj(&src, &times);
        let map = ScaleMap::standard(2.0).unwrap();
        let h = 0.01;
        let out = rescale_trajectory(&traj, &map, &tgt, &[0.2 - h, 0.2, 0.2 + h]).unwrap();
        let (a, b, c) = (out[0].1.values(), out[1].1.values(), out[2].1.values());
        let lap = laplacian(&out[1].1);
        let res = (0..tgt.len()).map(|i| ((a[i] - 2.0 * b[i] + c[i]) / (h * h) - lap.values()[i]).abs()).fold(0.0, f64::max);
        // cubic-in-time interpolation error dominates
        assert!(res < 5e-3 * lap.linf(), "{res}");
    }

    #[test]
    fn composition_of_maps() {
        let src = Grid::new(1, 64, 8.0).unwrap();
        let mid = Grid::new(1, 64, 4.0).unwrap();
        let tgt = Grid::new(1, 64, 2.0).unwrap();
        let times: Vec<f64> = (0..=80).map(|i| 0.1 * i as f64).collect();
        let traj = sine_traj(&src, &times);
        let two = ScaleMap::standard(2.0).unwrap();
        let mid_times: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
        let once = rescale_trajectory(&traj, &two, &mid, &mid_times).unwrap();
        let twice = rescale_trajectory(&once, &two, &tgt, &[0.1]).unwrap();
        let direct = rescale_trajectory(&traj, &ScaleMap::standard(4.0).unwrap(), &tgt, &[0.1]).unwrap();
        let err = twice[0].1.values().iter().zip(direct[0].1.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn pullback_out_of_range() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let traj = sine_traj(&g, &[0.0, 1.0, 2.0, 3.0]);
        let map = ScaleMap::standard(2.0).unwrap();
        assert!(matches!(rescale_trajectory(&traj, &map, &g, &[0.0]), Err(Error::OutOfRange(_))));
        assert!(matches!(rescale_trajectory(&traj, &map, &g, &[5.0]), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn map_factors() {
        let m = ScaleMap::sub(4.0, -3.0).unwrap();
        assert!((m.time_factor() - 2.0).abs() < 1e-15);
        assert!((m.wave_factor() - 0.25).abs() < 1e-15);
        assert!(ScaleMap::sub(2.0, 0.0).is_err());
        assert!(ScaleMap::standard(0.0).is_err());
        assert_eq!(ScaleMap::standard(2.0).unwrap().damping_factor(-1.0), 1.0);
    }

    fn bump(g: &Grid) -> Result<InitialData> {
        InitialData::new(Field::zeros(g), bump_data(g, 1.0, &[0.0], 1.0)?)
    }

    #[test]
    fn unit_lambda_gives_zero_error() {
        let params = Params::new(1, 2.0, -1.0, 1.0).unwrap().linear();
        let setup = InvarianceSetup { lambda: 1.0, points: 128, half_width: 8.0, t_compare: 0.5, dt: 1e-3, rescale_damping: false };
        assert!(invariance_error(&params, bump, &setup).unwrap() < 1e-12);
    }

    #[test]
    fn nonlinear_params_rejected() {
        let params = Params::new(1, 2.0, -1.0, 1.0).unwrap();
        let setup = InvarianceSetup::at_resolution(2.0, 64);
        assert!(invariance_error(&params, bump, &setup).is_err());
    }
}
