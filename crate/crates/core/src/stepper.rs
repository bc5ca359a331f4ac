//! Time integration with implicit damping, the energy ledger, and blow-up
//! detection.
//!
//! One step from `(t, u, v)` with `b = b0 (1+t+dt)^(-β)`:
//!
//! ```text
//! v*    = v + dt (Δu + |u|^p)
//! v_new = (Id - dt b Δ)^(-1) v*
//! u_new = u + dt v_new
//! ```
//!
//! Per Fourier mode the change of `E = ½∫v² + ½∫|∇u|²` over one linear step is
//! `-½|v - v_new|² - k² dt |v_new|² (b - dt/2)`, so the discrete energy cannot
//! grow while `dt <= 2b`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{grad_sq_integral, helmholtz_solve, integrate, laplacian, Field};
use crate::model::{damping_coeff, InitialData, Params, Source};
use crate::quad::fit_line;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub v: Field,
}

impl State {
    pub fn initial(data: &InitialData) -> Self {
        State { t: 0.0, u: data.u0.clone(), v: data.u1.clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub dissipated_cum: f64,
    pub work_cum: f64,
    pub linf: f64,
    pub l2: f64,
}

impl EnergyRecord {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.potential
    }

    /// `E(t) + dissipated(t) - work(t)`; constant in time for exact solutions.
    pub fn balance(&self) -> f64 {
        self.energy() + self.dissipated_cum - self.work_cum
    }

    pub const CSV_HEADER: &'static str = "t,kinetic,potential,dissipated_cum,work_cum,linf,l2";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t, self.kinetic, self.potential, self.dissipated_cum, self.work_cum, self.linf, self.l2
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub t_star: f64,
    pub fit_quality: f64,
    pub samples_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    CompletedHorizon,
    BlowupDetected { t_stop: f64, estimate: BlowupEstimate },
    StepFloorReached { t_stop: f64 },
    BoundaryContaminated { t_flag: f64 },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::CompletedHorizon => "CompletedHorizon",
            Outcome::BlowupDetected { .. } => "BlowupDetected",
            Outcome::StepFloorReached { .. } => "StepFloorReached",
            Outcome::BoundaryContaminated { .. } => "BoundaryContaminated",
        }
    }

    /// Process exit status for the `simulate` command.
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::CompletedHorizon => 0,
            Outcome::BlowupDetected { .. } => 10,
            Outcome::StepFloorReached { .. } => 20,
            Outcome::BoundaryContaminated { .. } => 30,
        }
    }

    pub fn blowup_estimate(&self) -> Option<BlowupEstimate> {
        match self {
            Outcome::BlowupDetected { estimate, .. } => Some(*estimate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: Outcome,
    pub energy_trace: Vec<EnergyRecord>,
    pub snapshots: Vec<State>,
    pub final_state: State,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl RunReport {
    pub fn t_stop(&self) -> f64 {
        self.final_state.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub t_end: f64,
    pub dt0: f64,
    pub dt_min: f64,
    /// `‖u‖∞` above which the run is declared blown up.
    pub u_max: f64,
    /// Step-doubling error tolerance (relative to `max(1, ‖·‖∞)`).
    pub tol: f64,
    /// Record an energy row every this many accepted steps.
    pub output_every: usize,
    /// Points used by the blow-up extrapolation.
    pub fit_points: usize,
    /// When false, steps of exactly `dt0` (times `n·dt0`) without error control.
    pub adaptive: bool,
    pub snapshot_every: Option<usize>,
    pub boundary_check: bool,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            t_end: 50.0,
            dt0: 1e-3,
            dt_min: 1e-12,
            u_max: 1e8,
            tol: 1e-6,
            output_every: 1,
            fit_points: 12,
            adaptive: true,
            snapshot_every: None,
            boundary_check: true,
        }
    }
}

impl Controls {
    pub fn fixed(t_end: f64, dt: f64) -> Self {
        Controls { t_end, dt0: dt, adaptive: false, ..Controls::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_end", self.t_end),
            ("dt0", self.dt0),
            ("dt_min", self.dt_min),
            ("u_max", self.u_max),
            ("tol", self.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dt0 < self.dt_min {
            return Err(invalid(format!("dt0 = {} below dt_min = {}", self.dt0, self.dt_min)));
        }
        if self.output_every == 0 {
            return Err(invalid("output_every must be at least 1"));
        }
        if self.fit_points < 2 {
            return Err(invalid("fit_points must be at least 2"));
        }
        if self.snapshot_every == Some(0) {
            return Err(invalid("snapshot_every must be at least 1"));
        }
        Ok(())
    }
}

/// One IMEX step. Fails with [`Error::Diverged`] on non-finite output.
pub fn step(state: &State, params: &Params, dt: f64) -> Result<State> {
    if !(dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let t_new = state.t + dt;
    let b = damping_coeff(t_new, params);
    let lap_u = laplacian(&state.u);
    let mut v_star = state.v.clone();
    match params.source {
        Source::Power => {
            let p = params.p;
            for ((vs, &lu), &u) in v_star.values_mut().iter_mut().zip(lap_u.values()).zip(state.u.values()) {
                *vs += dt * (lu + u.abs().powf(p));
            }
        }
        Source::Off => {
            for (vs, &lu) in v_star.values_mut().iter_mut().zip(lap_u.values()) {
                *vs += dt * lu;
            }
        }
    }
    let v_new = helmholtz_solve(&v_star, dt * b);
    let u_new = state.u.zip_map(&v_new, |u, v| u + dt * v)?;
    let next = State { t: t_new, u: u_new, v: v_new };
    if !next.is_finite() {
        return Err(Error::Diverged { t: state.t });
    }
    Ok(next)
}

/// Repeats [`step`] with equal steps of length at most `dt` until `t_target`.
pub fn advance_fixed(state: &State, params: &Params, dt: f64, t_target: f64) -> Result<State> {
    if !(dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let span = t_target - state.t;
    if span < 0.0 {
        return Err(invalid(format!("target time {t_target} precedes state time {}", state.t)));
    }
    let steps = (span / dt - 1e-9).ceil().max(0.0) as usize;
    let mut current = state.clone();
    for i in 0..steps {
        let t_next = state.t + span * (i + 1) as f64 / steps as f64;
        current = step(&current, params, t_next - current.t)?;
        current.t = t_next;
    }
    Ok(current)
}

/// Running time integrals of the ledger, advanced by the trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Ledger {
    pub dissipated: f64,
    pub work: f64,
    last: Option<(f64, f64, f64)>,
}

/// `b(t) ∫|∇v|²` and `∫|u|^p v` at one state.
fn ledger_rates(state: &State, params: &Params) -> (f64, f64) {
    let diss = damping_coeff(state.t, params) * grad_sq_integral(&state.v);
    let work = match params.source {
        Source::Power => {
            let p = params.p;
            let w: f64 = state.u.values().iter().zip(state.v.values()).map(|(u, v)| u.abs().powf(p) * v).sum();
            w * state.u.grid().cell_volume()
        }
        Source::Off => 0.0,
    };
    (diss, work)
}

impl Ledger {
    pub fn start(state: &State, params: &Params) -> Self {
        let (d, w) = ledger_rates(state, params);
        Ledger { dissipated: 0.0, work: 0.0, last: Some((state.t, d, w)) }
    }

    pub fn advance(&mut self, state: &State, params: &Params) {
        let (d, w) = ledger_rates(state, params);
        if let Some((t0, d0, w0)) = self.last {
            let dt = state.t - t0;
            self.dissipated += 0.5 * dt * (d0 + d);
            self.work += 0.5 * dt * (w0 + w);
        }
        self.last = Some((state.t, d, w));
    }
}

pub fn energy(state: &State, ledger: &Ledger) -> EnergyRecord {
    EnergyRecord {
        t: state.t,
        kinetic: 0.5 * integrate(&state.v.map(|v| v * v)),
        potential: 0.5 * grad_sq_integral(&state.u),
        dissipated_cum: ledger.dissipated,
        work_cum: ledger.work,
        linf: state.u.linf(),
        l2: state.u.l2(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detection {
    Blowup(BlowupEstimate),
    NoBlowup,
}

/// Extrapolates the blow-up time from `(t, ‖u‖∞)` samples.
///
/// Model: `w = ‖u‖∞^(-(p-1)/2)` decays linearly to zero at `t*`, the
/// behaviour of `u'' = u^p` near its singularity. A least-squares line
/// through the last `fit_points` finite samples gives `t*` as its root and
/// `R²` as the fit quality. A trace that ends in a non-finite value is
/// treated as blown up at its last finite sample.
pub fn detect_blowup(trace: &[(f64, f64)], p: f64, fit_points: usize) -> Result<Detection> {
    const MIN_SAMPLES: usize = 8;
    if trace.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, have: trace.len() });
    }
    let finite_len = trace.iter().position(|(_, v)| !v.is_finite()).unwrap_or(trace.len());
    let diverged = finite_len < trace.len();
    let finite = &trace[..finite_len];
    let initial = finite.first().map(|s| s.1).unwrap_or(0.0);
    let grown = finite.iter().filter(|(_, v)| *v > 10.0 * initial && *v > 0.0).count();
    let fallback = |t_last: f64| BlowupEstimate { t_star: next_up(t_last), fit_quality: 0.0, samples_used: 0 };
    if grown < MIN_SAMPLES {
        return Ok(if diverged && !finite.is_empty() {
            Detection::Blowup(fallback(finite[finite.len() - 1].0))
        } else {
            Detection::NoBlowup
        });
    }
    let k = fit_points.min(grown).max(2);
    let tail = &finite[finite.len() - k..];
    let alpha = (p - 1.0) / 2.0;
    let ts: Vec<f64> = tail.iter().map(|s| s.0).collect();
    let ws: Vec<f64> = tail.iter().map(|s| s.1.powf(-alpha)).collect();
    let fit = fit_line(&ts, &ws);
    let t_last = ts[ts.len() - 1];
    if !(fit.slope < 0.0) {
        return Ok(if diverged { Detection::Blowup(fallback(t_last)) } else { Detection::NoBlowup });
    }
    let root = -fit.intercept / fit.slope;
    let t_star = if root > t_last { root } else { next_up(t_last) };
    Ok(Detection::Blowup(BlowupEstimate { t_star, fit_quality: fit.r2.clamp(0.0, 1.0), samples_used: k }))
}

fn next_up(t: f64) -> f64 {
    t + f64::EPSILON * t.abs().max(1.0)
}

/// Largest stable explicit step for the wave part, `0.5 h / sqrt(dim)`.
pub fn cfl_cap(data: &InitialData) -> f64 {
    let g = data.grid();
    0.5 * g.spacing() / (g.dim() as f64).sqrt()
}

fn is_localized(f: &Field) -> bool {
    f.grid().boundary_max(f) <= 1e-6 * f.linf()
}

/// Integrates from `t = 0` to `controls.t_end` or until blow-up, step floor or
/// boundary contamination.
pub fn simulate(params: &Params, data: &InitialData, controls: &Controls) -> Result<RunReport> {
    params.validate()?;
    controls.validate()?;
    if params.dim != data.grid().dim() {
        return Err(invalid(format!("params.dim = {} but grid dim = {}", params.dim, data.grid().dim())));
    }
    let cap = cfl_cap(data);
    let check_boundary = controls.boundary_check && is_localized(&data.u0) && is_localized(&data.u1);
    let grid = data.grid().clone();

    let mut state = State::initial(data);
    let mut ledger = Ledger::start(&state, params);
    let mut trace = vec![energy(&state, &ledger)];
    let mut history = vec![(0.0, state.u.linf())];
    let mut snapshots = Vec::new();
    if controls.snapshot_every.is_some() {
        snapshots.push(state.clone());
    }
    let mut dt = controls.dt0.min(cap);
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let t_end = controls.t_end;
    let time_eps = 1e-12 * t_end.max(1.0);

    let finish = |outcome, state: State, mut trace: Vec<EnergyRecord>, ledger: &Ledger, snapshots, accepted, rejected| {
        if trace.last().map(|r: &EnergyRecord| r.t) != Some(state.t) {
            trace.push(energy(&state, ledger));
        }
        RunReport { outcome, energy_trace: trace, snapshots, final_state: state, accepted_steps: accepted, rejected_steps: rejected }
    };

    loop {
        if state.t >= t_end - time_eps {
            return Ok(finish(Outcome::CompletedHorizon, state, trace, &ledger, snapshots, accepted, rejected));
        }
        if dt < controls.dt_min {
            let t_stop = state.t;
            return Ok(finish(Outcome::StepFloorReached { t_stop }, state, trace, &ledger, snapshots, accepted, rejected));
        }
        let (substeps, next_dt) = if controls.adaptive {
            let h = dt.min(t_end - state.t).min(cap);
            let trial = step(&state, params, h).and_then(|coarse| {
                let mid = step(&state, params, 0.5 * h)?;
                let fine = step(&mid, params, 0.5 * h)?;
                Ok((coarse, mid, fine))
            });
            match trial {
                Err(_) => {
                    rejected += 1;
                    dt = 0.5 * h;
                    continue;
                }
                Ok((coarse, mid, fine)) => {
                    let err = step_error(&coarse, &fine);
                    if err > controls.tol {
                        rejected += 1;
                        dt = 0.5 * h;
                        continue;
                    }
                    let grow = if err < controls.tol / 4.0 { 1.25 } else { 1.0 };
                    (vec![mid, fine], h * grow)
                }
            }
        } else {
            let n = accepted + 1;
            let target = (n as f64 * controls.dt0).min(t_end);
            let h = target - state.t;
            if h > cap * (1.0 + 1e-12) {
                return Err(invalid(format!("fixed dt {h} exceeds the stability cap {cap}")));
            }
            match step(&state, params, h) {
                Ok(mut next) => {
                    next.t = target;
                    (vec![next], controls.dt0)
                }
                Err(_) => {
                    let t_stop = state.t;
                    // fixed stepping cannot shrink; a non-finite step counts as blow-up
                    history.push((state.t + h, f64::INFINITY));
                    let outcome = match detect_blowup(&history, params.p, controls.fit_points) {
                        Ok(Detection::Blowup(estimate)) => Outcome::BlowupDetected { t_stop, estimate },
                        _ => Outcome::StepFloorReached { t_stop },
                    };
                    return Ok(finish(outcome, state, trace, &ledger, snapshots, accepted, rejected));
                }
            }
        };

        for s in &substeps {
            ledger.advance(s, params);
        }
        state = substeps.into_iter().last().expect("at least one substep");
        dt = next_dt;
        accepted += 1;
        let linf = state.u.linf();
        history.push((state.t, linf));

        if accepted.is_multiple_of(controls.output_every) {
            trace.push(energy(&state, &ledger));
        }
        if let Some(every) = controls.snapshot_every {
            if accepted.is_multiple_of(every) {
                snapshots.push(state.clone());
            }
        }
        if linf > controls.u_max {
            let t_stop = state.t;
            let estimate = match detect_blowup(&history, params.p, controls.fit_points)? {
                Detection::Blowup(e) => e,
                Detection::NoBlowup => BlowupEstimate { t_star: next_up(t_stop), fit_quality: 0.0, samples_used: 0 },
            };
            let outcome = Outcome::BlowupDetected { t_stop, estimate };
            return Ok(finish(outcome, state, trace, &ledger, snapshots, accepted, rejected));
        }
        if check_boundary && grid.boundary_max(&state.u) > 1e-6 * linf {
            let t_flag = state.t;
            return Ok(finish(Outcome::BoundaryContaminated { t_flag }, state, trace, &ledger, snapshots, accepted, rejected));
        }
    }
}

/// Step-doubling error, each component scaled by `max(1, ‖fine‖∞)`.
fn step_error(coarse: &State, fine: &State) -> f64 {
    let rel = |a: &Field, b: &Field| {
        let diff = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        diff / b.linf().max(1.0)
    };
    rel(&coarse.u, &fine.u).max(rel(&coarse.v, &fine.v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::model::bump_data;
    use crate::oracle::{ode_trajectory, LinearMode, OdeShape};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn p2(dim: usize) -> Params {
        Params::new(dim, 2.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        let s = State { t: 0.0, u: Field::zeros(&g), v: Field::zeros(&g) };
        let n = step(&s, &p2(1), 0.01).unwrap();
        assert_eq!(n.u.linf(), 0.0);
        assert_eq!(n.v.linf(), 0.0);
        assert_eq!(n.t, 0.01);
    }

    #[test]
    fn constant_state_follows_explicit_ode_update() {
        let g = Grid::new(2, 8, 3.0).unwrap();
        let (a, b, dt) = (1.3, -0.4, 0.02);
        let s = State { t: 0.0, u: Field::constant(&g, a), v: Field::constant(&g, b) };
        let n = step(&s, &Params::new(2, 3.0, 1.0, 2.0).unwrap(), dt).unwrap();
        let v_exp = b + dt * a.powf(3.0);
        let u_exp = a + dt * v_exp;
        for (&u, &v) in n.u.values().iter().zip(n.v.values()) {
            assert!((v - v_exp).abs() < 1e-14);
            assert!((u - u_exp).abs() < 1e-14);
        }
    }

    #[test]
    fn single_mode_matches_scalar_ode_to_first_order() {
        let l = PI;
        let g = Grid::new(1, 16, l).unwrap();
        let params = p2(1).linear();
        let t_end = 2.0;
        let mut errs = Vec::new();
        for dt in [4e-3, 2e-3] {
            let data = InitialData::new(Field::from_fn(&g, |x| (x[0]).cos()), Field::zeros(&g)).unwrap();
            let rep = simulate(&params, &data, &Controls::fixed(t_end, dt)).unwrap();
            let exact = ode_trajectory(OdeShape::Linear(LinearMode { k: 1.0, beta: 0.0, b0: 1.0 }), 1.0, 0.0, &[0.0, t_end]).unwrap();
            // mode amplitude at x = 0 (lattice point 8)
            errs.push((rep.final_state.u.values()[8] - exact[1].0).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 1.0).abs() < 0.2, "errors {errs:?}, order {order}");
    }

    #[test]
    fn zero_data_completes_with_zero_trace() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        let data = InitialData::zero(&g);
        let controls = Controls { t_end: 1.0, dt0: 0.05, ..Controls::default() };
        let rep = simulate(&p2(1), &data, &controls).unwrap();
        assert_eq!(rep.outcome, Outcome::CompletedHorizon);
        for r in &rep.energy_trace {
            assert_eq!(r.energy() + r.dissipated_cum + r.work_cum + r.linf + r.l2, 0.0);
        }
        assert!(rep.energy_trace.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn energy_of_mode() {
        let l = 2.0;
        let g = Grid::new(1, 64, l).unwrap();
        let s = State { t: 0.0, u: Field::from_fn(&g, |x| (PI * x[0] / l).cos()), v: Field::zeros(&g) };
        let e = energy(&s, &Ledger::default());
        assert_eq!(e.kinetic, 0.0);
        let k = PI / l;
        assert!((e.potential - 0.5 * k * k * l).abs() < 1e-12);
        let z = State { t: 0.0, u: Field::zeros(&g), v: Field::zeros(&g) };
        let e = energy(&z, &Ledger::default());
        assert_eq!(e.energy() + e.linf + e.l2, 0.0);
    }

    #[test]
    fn detect_exact_ode_trace() {
        let (p, t_star) = (3.0, 1.7);
        let trace: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = t_star * (1.0 - 0.5f64.powf(i as f64 / 10.0));
                (t, 2.0 * (1.0 - t / t_star).powf(-2.0 / (p - 1.0)))
            })
            .collect();
        match detect_blowup(&trace, p, 12).unwrap() {
            Detection::Blowup(e) => {
                assert!((e.t_star - t_star).abs() < 0.005 * t_star, "{e:?}");
                assert!(e.fit_quality > 0.999);
                assert_eq!(e.samples_used, 12);
            }
            Detection::NoBlowup => panic!("missed blow-up"),
        }
    }

    #[test]
    fn detect_bounded_oscillation() {
        let trace: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 * 0.1, 1.0 + 0.5 * (i as f64).sin())).collect();
        assert_eq!(detect_blowup(&trace, 2.0, 12).unwrap(), Detection::NoBlowup);
        assert!(detect_blowup(&trace[..5], 2.0, 12).is_err());
    }

    #[test]
    fn detect_non_finite_tail() {
        let mut trace: Vec<(f64, f64)> = (0..40).map(|i| {
            let t = 1.0 - 0.9f64.powi(i);
            (t, (1.0 - t).powf(-2.0))
        }).collect();
        let t_last = trace.last().unwrap().0;
        trace.push((t_last + 1e-3, f64::NAN));
        match detect_blowup(&trace, 2.0, 12).unwrap() {
            Detection::Blowup(e) => {
                assert!(e.t_star > t_last);
                assert!((e.t_star - 1.0).abs() < 1e-3);
            }
            Detection::NoBlowup => panic!("divergence must count as blow-up"),
        }
    }

    #[test]
    fn controls_contradiction_rejected() {
        let c = Controls { dt0: 1e-14, ..Controls::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn linear_energy_never_increases_per_step() {
        let g = Grid::new(1, 128, 16.0).unwrap();
        let data = InitialData::new(Field::zeros(&g), bump_data(&g, 1.0, &[0.0], 1.5).unwrap()).unwrap();
        for beta in [-1.0, 0.0, 1.0] {
            let params = Params::new(1, 2.0, beta, 1.0).unwrap().linear();
            let rep = simulate(&params, &data, &Controls { boundary_check: false, ..Controls::fixed(3.0, 5e-3) }).unwrap();
            for w in rep.energy_trace.windows(2) {
                assert!(w[1].energy() <= w[0].energy() * (1.0 + 1e-9), "beta {beta}: {:?}", w);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn constant_data_stays_constant(a in -1.0f64..1.0, b in -1.0f64..1.0, p in 1.5f64..3.0) {
            let g = Grid::new(2, 8, 2.0).unwrap();
            let params = Params::new(2, p, 0.5, 1.0).unwrap();
            let mut s = State { t: 0.0, u: Field::constant(&g, a), v: Field::constant(&g, b) };
            for _ in 0..20 {
                s = step(&s, &params, 0.01).unwrap();
            }
            let u0 = s.u.values()[0];
            prop_assert!(s.u.values().iter().all(|&u| (u - u0).abs() <= 1e-13 * u0.abs().max(1.0)));
        }
    }
}
