//! Independent references for the solver.
//!
//! Two scalar problems are covered: the spatially homogeneous reduction
//! `u'' = |u|^p`, whose blow-up time follows from energy conservation, and
//! a single Fourier mode of the linear equation,
//! `y'' + b0 (1+t)^(-β) k^2 y' + k^2 y = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad;

/// Threshold on `|u|` past which a trajectory counts as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeProblem {
    pub u0: f64,
    pub v0: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BlowupTime {
    Finite(f64),
    Infinite,
}

impl BlowupTime {
    pub fn finite(&self) -> Option<f64> {
        match self {
            BlowupTime::Finite(t) => Some(*t),
            BlowupTime::Infinite => None,
        }
    }
}

impl OdeProblem {
    pub fn new(u0: f64, v0: f64, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(invalid(format!("p must exceed 1, got {p}")));
        }
        if !u0.is_finite() || !v0.is_finite() {
            return Err(invalid("initial values must be finite"));
        }
        Ok(OdeProblem { u0, v0, p })
    }

    /// Potential `∫_0^u |s|^p ds = sign(u)|u|^(p+1)/(p+1)`.
    pub fn potential(&self, u: f64) -> f64 {
        u.signum() * u.abs().powf(self.p + 1.0) / (self.p + 1.0)
    }

    /// Conserved `½v² - potential(u)`.
    pub fn energy(&self, u: f64, v: f64) -> f64 {
        0.5 * v * v - self.potential(u)
    }

    /// `potential(u) - potential(a)` without cancellation when `u ≈ a`.
    fn potential_diff(&self, u: f64, a: f64) -> f64 {
        let q = self.p + 1.0;
        if a != 0.0 && u.signum() == a.signum() && u != 0.0 {
            let rel = (u.abs() - a.abs()) / a.abs();
            a.signum() * a.abs().powf(q) * (q * rel.ln_1p()).exp_m1() / q
        } else {
            self.potential(u) - self.potential(a)
        }
    }
}

/// `∫ du / speed(u)` from `a` to `b` (b > a), where the particle has speed
/// `va >= 0` at `a`. `va == 0` marks a turning point and is integrated with
/// the substitution `u = a + σ²`.
fn passage_time(prob: &OdeProblem, a: f64, va: f64, b: f64) -> f64 {
    let speed = |u: f64| (va * va + 2.0 * prob.potential_diff(u, a)).sqrt();
    let tol = 1e-13;
    if va == 0.0 {
        let smax = (b - a).sqrt();
        quad::adaptive(|s| 2.0 * s / speed(a + s * s), 0.0, smax, tol, 0.0)
    } else {
        quad::adaptive(|u| 1.0 / speed(u), a, b, tol, 0.0)
    }
}

/// `∫_U^∞ du / speed(u)` for `U > 0`, mapped to `(0, 1]` with
/// `u = U s^(-2/(p-1))`, which leaves a bounded integrand.
fn tail_time(prob: &OdeProblem, a: f64, va: f64, upper: f64) -> f64 {
    let p = prob.p;
    let q = 2.0 / (p - 1.0);
    let ga = prob.potential(a);
    let pre = q * upper.powf((1.0 - p) / 2.0);
    let f = |s: f64| {
        // u^-(p+1)
        let inv = upper.powf(-(p + 1.0)) * s.powf(q * (p + 1.0));
        pre / ((va * va - 2.0 * ga) * inv + 2.0 / (p + 1.0)).sqrt()
    };
    quad::adaptive(f, 0.0, 1.0, 1e-13, 0.0)
}

/// Time to reach `+∞` from `(a, va)` with `va >= 0`.
fn escape_time(prob: &OdeProblem, a: f64, va: f64) -> f64 {
    let upper = 2.0 * a.abs().max(1.0);
    passage_time(prob, a, va, upper) + tail_time(prob, a, va, upper)
}

/// Blow-up time of `u'' = |u|^p` by quadrature of the energy relation.
///
/// Every nonzero initial state escapes to `+∞` because the force is
/// nonnegative; the exceptions are the equilibrium `(0, 0)` and the
/// stable manifold `E0 = 0, u0 > 0, v0 < 0`, which creeps into the origin.
pub fn ode_blowup_time(prob: &OdeProblem) -> BlowupTime {
    let OdeProblem { u0, v0, p } = *prob;
    if u0 == 0.0 && v0 == 0.0 {
        return BlowupTime::Infinite;
    }
    if v0 >= 0.0 {
        return BlowupTime::Finite(escape_time(prob, u0, v0));
    }
    let e0 = prob.energy(u0, v0);
    if e0 == 0.0 && u0 > 0.0 {
        return BlowupTime::Infinite;
    }
    // turning point where ½v² = E0 + G(u) vanishes
    let target = -e0;
    let turn = target.signum() * ((p + 1.0) * target.abs()).powf(1.0 / (p + 1.0));
    let back = passage_time(prob, turn, 0.0, u0);
    BlowupTime::Finite(2.0 * back + escape_time(prob, u0, -v0))
}

/// Single Fourier mode of the linear damped equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMode {
    pub k: f64,
    pub beta: f64,
    pub b0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeShape {
    Power { p: f64 },
    Linear(LinearMode),
}

impl OdeShape {
    fn accel(&self, t: f64, u: f64, v: f64) -> f64 {
        match *self {
            OdeShape::Power { p } => u.abs().powf(p),
            OdeShape::Linear(m) => {
                let k2 = m.k * m.k;
                -m.b0 * (1.0 + t).powf(-m.beta) * k2 * v - k2 * u
            }
        }
    }

    fn rk4(&self, t: f64, y: [f64; 2], h: f64) -> [f64; 2] {
        let f = |t: f64, y: [f64; 2]| [y[1], self.accel(t, y[0], y[1])];
        let k1 = f(t, y);
        let k2 = f(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = f(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }

    /// RK4 with local (Richardson) extrapolation: one step of `h` against
    /// two of `h/2`.
    fn extrapolated_step(&self, t: f64, y: [f64; 2], h: f64) -> [f64; 2] {
        let full = self.rk4(t, y, h);
        let half = self.rk4(t, y, 0.5 * h);
        let two = self.rk4(t + 0.5 * h, half, 0.5 * h);
        [two[0] + (two[0] - full[0]) / 15.0, two[1] + (two[1] - full[1]) / 15.0]
    }
}

/// Samples `(u, v)` at every time of `t_grid`, starting from `(u0, v0)` at
/// `t_grid[0]`. The internal step is `1e-5` of the span.
///
/// Fails with [`Error::Diverged`] carrying the last finite time if `|u|`
/// exceeds [`DIVERGENCE_THRESHOLD`].
pub fn ode_trajectory(shape: OdeShape, u0: f64, v0: f64, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if t_grid.is_empty() {
        return Ok(Vec::new());
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("time grid must be strictly increasing"));
    }
    let t0 = t_grid[0];
    let span = t_grid[t_grid.len() - 1] - t0;
    let h_max = if span > 0.0 { 1e-5 * span } else { 1.0 };
    let mut t = t0;
    let mut y = [u0, v0];
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        while t < target {
            let remaining = target - t;
            let n = (remaining / h_max).ceil().max(1.0);
            let h = if n <= 1.0 { remaining } else { h_max };
            let next = shape.extrapolated_step(t, y, h);
            if !next[0].is_finite() || !next[1].is_finite() || next[0].abs() > DIVERGENCE_THRESHOLD {
                return Err(Error::Diverged { t });
            }
            y = next;
            t = if n <= 1.0 { target } else { t + h };
        }
        out.push((y[0], y[1]));
    }
    Ok(out)
}

/// First time `|u|` reaches `threshold` along `u'' = |u|^p`, with a step
/// that shrinks like the local blow-up time scale `|u|^(-(p-1)/2)`.
/// Returns `None` if the threshold is not reached before `t_max`.
pub fn threshold_crossing_time(prob: &OdeProblem, threshold: f64, h0: f64, t_max: f64) -> Option<f64> {
    let shape = OdeShape::Power { p: prob.p };
    let alpha = (prob.p - 1.0) / 2.0;
    let mut t = 0.0;
    let mut y = [prob.u0, prob.v0];
    if y[0].abs() >= threshold {
        return Some(0.0);
    }
    while t < t_max {
        let scale = (1.0 + y[0].abs()).powf(-alpha).min(1.0);
        let speed_scale = if y[1] != 0.0 { (y[0].abs().max(1.0) / y[1].abs()).min(1.0) } else { 1.0 };
        let h = h0 * scale.min(speed_scale);
        let next = shape.extrapolated_step(t, y, h);
        if next[0].abs() >= threshold || !next[0].is_finite() {
            if !next[0].is_finite() {
                return Some(t + h);
            }
            // interpolate in w = |u|^(-α), which is close to linear near blow-up
            let w0 = y[0].abs().powf(-alpha);
            let w1 = next[0].abs().powf(-alpha);
            let wt = threshold.powf(-alpha);
            let frac = if w0 != w1 { ((w0 - wt) / (w0 - w1)).clamp(0.0, 1.0) } else { 1.0 };
            return Some(t + frac * h);
        }
        y = next;
        t += h;
    }
    None
}

/// Blow-up time from trajectory integration: crossing times of
/// `1e10` and `1e11`, Richardson-extrapolated with the ratio `10^(-(p-1)/2)`.
pub fn trajectory_blowup_time(prob: &OdeProblem, t_max: f64) -> Option<f64> {
    let t1 = threshold_crossing_time(prob, DIVERGENCE_THRESHOLD, 1e-4, t_max)?;
    let t2 = threshold_crossing_time(prob, 10.0 * DIVERGENCE_THRESHOLD, 1e-4, t_max)?;
    let r = 10f64.powf(-(prob.p - 1.0) / 2.0);
    Some(t2 + (t2 - t1) * r / (1.0 - r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prob(u0: f64, v0: f64, p: f64) -> OdeProblem {
        OdeProblem::new(u0, v0, p).unwrap()
    }

    #[test]
    fn separatrix_closed_form() {
        let t = ode_blowup_time(&prob(1.0, (2.0f64 / 3.0).sqrt(), 2.0)).finite().unwrap();
        assert!((t - 6f64.sqrt()).abs() < 1e-9 * 6f64.sqrt(), "{t}");
    }

    #[test]
    fn from_rest_fixture_and_cross_check() {
        let t = ode_blowup_time(&prob(1.0, 0.0, 2.0)).finite().unwrap();
        // ∫_1^∞ du / sqrt(2(u^3-1)/3), pinned from this quadrature
        assert!((t - 2.974_477_425_402_176).abs() < 1e-9, "{t:.15}");
        let traj = trajectory_blowup_time(&prob(1.0, 0.0, 2.0), 10.0).unwrap();
        assert!((traj - t).abs() < 1e-6 * t, "{traj} vs {t}");
    }

    #[test]
    fn equilibrium_never_blows_up() {
        assert_eq!(ode_blowup_time(&prob(0.0, 0.0, 3.0)), BlowupTime::Infinite);
        // stable manifold into the origin
        let p: f64 = 2.0;
        let u0: f64 = 1.0;
        let v0 = -(2.0 * u0.powf(p + 1.0) / (p + 1.0)).sqrt();
        assert_eq!(ode_blowup_time(&prob(u0, v0, p)), BlowupTime::Infinite);
    }

    #[test]
    fn negative_velocity_turns_and_escapes() {
        for (u0, v0) in [(0.5, -0.3), (0.0, -1.0), (-0.5, 0.0), (-0.2, 0.4)] {
            let pr = prob(u0, v0, 2.0);
            let q = ode_blowup_time(&pr).finite().unwrap();
            let traj = trajectory_blowup_time(&pr, 50.0).unwrap();
            assert!((q - traj).abs() < 1e-6 * q, "({u0},{v0}): {q} vs {traj}");
        }
    }

    #[test]
    fn trajectory_free_particle() {
        let shape = OdeShape::Linear(LinearMode { k: 0.0, beta: 0.0, b0: 1.0 });
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let out = ode_trajectory(shape, 1.5, -0.7, &ts).unwrap();
        for (t, (u, v)) in ts.iter().zip(out) {
            assert!((u - (1.5 - 0.7 * t)).abs() < 1e-10);
            assert!((v + 0.7).abs() < 1e-10);
        }
    }

    #[test]
    fn trajectory_damped_oscillator_closed_form() {
        // y'' + y' + y = 0, y(0)=1, y'(0)=0
        let shape = OdeShape::Linear(LinearMode { k: 1.0, beta: 0.0, b0: 1.0 });
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let out = ode_trajectory(shape, 1.0, 0.0, &ts).unwrap();
        let w = 3f64.sqrt() / 2.0;
        for (t, (u, _)) in ts.iter().zip(out) {
            let exact = (-t / 2.0).exp() * ((w * t).cos() + (w * t).sin() / (2.0 * w));
            assert!((u - exact).abs() < 1e-8, "t={t}: {u} vs {exact}");
        }
    }

    #[test]
    fn trajectory_reports_divergence_near_blowup() {
        let shape = OdeShape::Power { p: 2.0 };
        let ts = [0.0, 3.0];
        match ode_trajectory(shape, 1.0, (2.0f64 / 3.0).sqrt(), &ts) {
            Err(Error::Diverged { t }) => assert!((t - 6f64.sqrt()).abs() < 1e-3, "{t}"),
            other => panic!("expected divergence, got {other:?}"),
        }
        let crossing = |m: f64| threshold_crossing_time(&prob(1.0, (2.0f64 / 3.0).sqrt(), 2.0), m, 1e-4, 10.0).unwrap();
        let gaps: Vec<f64> = [1e6, 1e8, 1e10].iter().map(|&m| 6f64.sqrt() - crossing(m)).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] > 0.0);
    }

    #[test]
    fn energy_conserved_along_trajectory() {
        let pr = prob(0.3, -0.8, 3.0);
        let ts: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let out = ode_trajectory(OdeShape::Power { p: 3.0 }, pr.u0, pr.v0, &ts).unwrap();
        let e0 = pr.energy(pr.u0, pr.v0);
        for (u, v) in out {
            if u.abs() < 1e6 {
                assert!((pr.energy(u, v) - e0).abs() < 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn blowup_time_decreases_with_data(u0 in 0.1f64..3.0, v0 in 0.0f64..3.0, du in 0.01f64..1.0, p in 1.5f64..4.0) {
            let base = ode_blowup_time(&prob(u0, v0, p)).finite().unwrap();
            let up = ode_blowup_time(&prob(u0 + du, v0, p)).finite().unwrap();
            let vp = ode_blowup_time(&prob(u0, v0 + du, p)).finite().unwrap();
            prop_assert!(up < base);
            prop_assert!(vp < base);
        }

        #[test]
        fn linear_mode_energy_non_increasing(k in 0.1f64..3.0, beta in -2.0f64..2.0, b0 in 0.1f64..2.0) {
            let shape = OdeShape::Linear(LinearMode { k, beta, b0 });
            let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
            let out = ode_trajectory(shape, 1.0, 0.5, &ts).unwrap();
            let e: Vec<f64> = out.iter().map(|(u, v)| 0.5 * (v * v + k * k * u * u)).collect();
            for w in e.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-10));
            }
        }
    }
}
