//! Parameter sweeps: one simulation per point, paired with the theorem verdict.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exponents::{classify, RegionVerdict};
use crate::grid::Grid;
use crate::model::{InitKind, InitTarget, InitialData, Params};
use crate::stepper::{simulate, Controls, Outcome};

/// Grid and data profile shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepDomain {
    pub points: usize,
    /// `None` sizes the box from the horizon and the support radius.
    pub half_width: Option<f64>,
    pub radius: f64,
    pub kind: InitKind,
    pub target: InitTarget,
}

impl Default for SweepDomain {
    fn default() -> Self {
        SweepDomain { points: 1024, half_width: None, radius: 2.0, kind: InitKind::Bump, target: InitTarget::U1 }
    }
}

impl SweepDomain {
    pub fn half_width_for(&self, t_end: f64) -> f64 {
        self.half_width.unwrap_or_else(|| auto_half_width(t_end, self.radius))
    }
}

/// `L = 1.5 (t_end + r)`: room for the front plus the diffusive tail.
pub fn auto_half_width(t_end: f64, radius: f64) -> f64 {
    1.5 * (t_end + radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepInput {
    pub params: Params,
    pub amplitude: f64,
}

/// Cartesian product in the order `n`, `p`, `β`, amplitude (last fastest).
pub fn cartesian(dims: &[usize], ps: &[f64], betas: &[f64], b0: f64, amplitudes: &[f64]) -> Result<Vec<SweepInput>> {
    let mut out = Vec::new();
    for &n in dims {
        for &p in ps {
            for &beta in betas {
                for &amplitude in amplitudes {
                    out.push(SweepInput { params: Params::new(n, p, beta, b0)?, amplitude });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub params: Params,
    pub amplitude: f64,
    pub mean_u1: f64,
    pub theorem_data: bool,
    pub verdict_theory: RegionVerdict,
    /// `Err` holds the message of a point that failed to run.
    pub outcome: std::result::Result<Outcome, String>,
    pub t_stop: Option<f64>,
    pub t_star_est: Option<f64>,
    pub fit_quality: Option<f64>,
}

impl SweepPoint {
    /// Outcome label for reports. A run that reaches `t_end` is a survivor of
    /// the horizon, not evidence of global existence.
    pub fn outcome_label(&self) -> &'static str {
        match &self.outcome {
            Ok(Outcome::CompletedHorizon) => "SurvivedHorizon",
            Ok(o) => o.label(),
            Err(_) => "Failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
}

pub const CSV_HEADER: &str =
    "n,p,beta,b0,amplitude,mean_u1,verdict_theory,outcome,t_stop,t_star_est,fit_quality";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for pt in &self.points {
            let pr = &pt.params;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                pr.dim,
                pr.p,
                pr.beta,
                pr.b0,
                pt.amplitude,
                pt.mean_u1,
                pt.verdict_theory.label(),
                pt.outcome_label(),
                opt(pt.t_stop),
                opt(pt.t_star_est),
                opt(pt.fit_quality)
            );
        }
        s
    }

    pub fn failures(&self) -> impl Iterator<Item = (usize, &str)> {
        self.points.iter().filter_map(|p| p.outcome.as_ref().err().map(|e| (p.index, e.as_str())))
    }
}

fn run_point(index: usize, input: &SweepInput, domain: &SweepDomain, controls: &Controls) -> SweepPoint {
    let params = input.params;
    let verdict_theory = classify(params.dim as u32, params.beta, params.p).unwrap_or(RegionVerdict::OutsideTheorem);
    let mut point = SweepPoint {
        index,
        params,
        amplitude: input.amplitude,
        mean_u1: 0.0,
        theorem_data: false,
        verdict_theory,
        outcome: Err(String::new()),
        t_stop: None,
        t_star_est: None,
        fit_quality: None,
    };
    let run = || -> Result<_> {
        let grid = Grid::new(params.dim, domain.points, domain.half_width_for(controls.t_end))?;
        let center = vec![0.0; params.dim];
        let data = InitialData::generate(&grid, domain.kind, domain.target, input.amplitude, &center, domain.radius)?;
        let report = simulate(&params, &data, controls)?;
        Ok((data, report))
    };
    match run() {
        Ok((data, report)) => {
            point.mean_u1 = data.mean_u1;
            point.theorem_data = data.theorem_data;
            point.t_stop = Some(report.t_stop());
            if let Some(est) = report.outcome.blowup_estimate() {
                point.t_star_est = Some(est.t_star);
                point.fit_quality = Some(est.fit_quality);
            }
            point.outcome = Ok(report.outcome);
        }
        Err(e) => point.outcome = Err(e.to_string()),
    }
    point
}

/// Runs every point on a pool of `workers` threads. Results come back in
/// input order and do not depend on `workers`; a failing point is recorded
/// and the sweep continues.
pub fn run_sweep(inputs: &[SweepInput], domain: &SweepDomain, controls: &Controls, workers: usize) -> Result<SweepReport> {
    controls.validate()?;
    if workers == 0 {
        return Err(invalid("workers must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let points = pool.install(|| {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, input)| run_point(i, input, domain, controls))
            .collect()
    });
    Ok(SweepReport { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_domain() -> SweepDomain {
        SweepDomain { points: 64, half_width: Some(16.0), ..SweepDomain::default() }
    }

    #[test]
    fn zero_amplitude_survives() {
        let inputs = cartesian(&[1], &[2.0], &[0.0], 1.0, &[0.0]).unwrap();
        let controls = Controls { t_end: 1.0, ..Controls::default() };
        let report = run_sweep(&inputs, &small_domain(), &controls, 1).unwrap();
        assert_eq!(report.points.len(), 1);
        assert_eq!(report.points[0].outcome, Ok(Outcome::CompletedHorizon));
        assert_eq!(report.points[0].outcome_label(), "SurvivedHorizon");
        assert!(report.to_csv().lines().nth(1).unwrap().contains("SurvivedHorizon"));
    }

    #[test]
    fn failures_recorded_not_fatal() {
        let mut inputs = cartesian(&[1], &[2.0], &[0.0], 1.0, &[0.0, 0.0]).unwrap();
        inputs[0].params.dim = 2;
        let domain = SweepDomain { radius: 10.0, ..small_domain() };
        let controls = Controls { t_end: 0.5, ..Controls::default() };
        let report = run_sweep(&inputs, &domain, &controls, 2).unwrap();
        assert_eq!(report.failures().count(), 2);
        let domain = small_domain();
        let report = run_sweep(&inputs, &domain, &controls, 2).unwrap();
        assert_eq!(report.points[0].index, 0);
        assert!(report.points[1].outcome.is_ok());
    }

    #[test]
    fn csv_header_and_order() {
        let inputs = cartesian(&[1], &[2.0, 3.0], &[0.0], 1.0, &[0.0]).unwrap();
        let controls = Controls { t_end: 0.5, ..Controls::default() };
        let csv = run_sweep(&inputs, &small_domain(), &controls, 2).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("1,2,0,1,0,"));
        assert!(lines[2].starts_with("1,3,0,1,0,"));
    }
}
