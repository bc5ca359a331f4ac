use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

use anyhow::{anyhow, bail, Context, Result};
use blwp_core::exponents::{beta_threshold, classify, kato_threshold, scaling_d, strauss_exponent};
use blwp_core::grid::write_binary;
use blwp_core::model::bump_data;
use blwp_core::oracle::{ode_blowup_time, trajectory_blowup_time, OdeProblem};
use blwp_core::scalelab::{damping_trend, invariance_error, InvarianceSetup};
use blwp_core::stepper::simulate;
use blwp_core::sweep::{cartesian, run_sweep, SweepDomain};
use blwp_core::testfn::{predicted_exponents, slope_fit, strong_form_integral, term_bundle, weak_residual, TERM_NAMES};
use blwp_core::{Controls, CutoffSpec, EnergyRecord, Field, Grid, InitialData, Outcome, Params};
use serde_json::json;

use crate::config::RunConfig;
use crate::manifest::{prepare_dir, write_manifest};
use crate::plot::{line_chart, Series};
use crate::{Command, RunArgs, EXIT_CONFIG};

/// Marks an error as a configuration problem (exit status 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn error_code(e: &anyhow::Error) -> u8 {
    let config = e.chain().any(|c| {
        c.downcast_ref::<ConfigError>().is_some()
            || matches!(c.downcast_ref::<blwp_core::Error>(), Some(blwp_core::Error::InvalidParam(_)))
    });
    if config {
        EXIT_CONFIG
    } else {
        1
    }
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub fn run(command: Command, overrides: &[(String, String)]) -> Result<u8> {
    let takes_config = matches!(command, Command::Simulate(_) | Command::Sweep { .. } | Command::Weakcheck(_));
    if !takes_config && !overrides.is_empty() {
        return Err(config_err("--section.key overrides only apply to simulate, sweep and weakcheck"));
    }
    match command {
        Command::Simulate(args) => cmd_simulate(&args, overrides),
        Command::Sweep { run, workers } => cmd_sweep(&run, overrides, workers),
        Command::Slopes { p, n, beta, d, ts, ell } => cmd_slopes(p, n, beta, d, &ts, ell),
        Command::Scaling { beta, lambda, resolution, rescale_damping, trend } => {
            cmd_scaling(beta, lambda, &resolution, rescale_damping, trend)
        }
        Command::Exponents { n, beta, p } => cmd_exponents(n, beta, p),
        Command::Weakcheck(args) => cmd_weakcheck(&args, overrides),
        Command::Oracle { u0, v0, p, t_max } => cmd_oracle(u0, v0, p, t_max),
    }
}

fn load(args: &RunArgs, overrides: &[(String, String)]) -> Result<RunConfig> {
    RunConfig::load(args.config.as_deref(), overrides).map_err(|e| config_err(format!("{e:#}")))
}

fn out_dir(args: &RunArgs, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    prepare_dir(&dir, args.force).map_err(|e| config_err(format!("{e:#}")))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn build_data(cfg: &RunConfig, grid: &Grid) -> Result<InitialData> {
    Ok(InitialData::generate(grid, cfg.init.kind, cfg.init.on, cfg.init.amplitude, &cfg.center(), cfg.init.radius)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_simulate(args: &RunArgs, overrides: &[(String, String)]) -> Result<u8> {
    let cfg = load(args, overrides)?;
    let dir = out_dir(args, &cfg)?;
    let (started, clock) = (SystemTime::now(), Instant::now());
    let params = cfg.params()?;
    let grid = Grid::new(cfg.grid.dim, cfg.grid.points, cfg.half_width())?;
    let data = build_data(&cfg, &grid)?;
    let report = simulate(&params, &data, &cfg.controls())?;

    let mut w = create(&dir, "energy.csv")?;
    writeln!(w, "{}", EnergyRecord::CSV_HEADER)?;
    for r in &report.energy_trace {
        writeln!(w, "{}", r.csv_row())?;
    }
    w.flush()?;

    let estimate = report.outcome.blowup_estimate();
    let verdict = classify(params.dim as u32, params.beta, params.p)?;
    let summary = json!({
        "outcome": report.outcome.label(),
        "exit_code": report.outcome.exit_code(),
        "t_stop": report.t_stop(),
        "t_star_est": estimate.map(|e| e.t_star),
        "fit_quality": estimate.map(|e| e.fit_quality),
        "accepted_steps": report.accepted_steps,
        "rejected_steps": report.rejected_steps,
        "mean_u1": data.mean_u1,
        "theorem_data": data.theorem_data,
        "verdict_theory": verdict.label(),
    });
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    let mut w = create(&dir, "u_final.bin")?;
    write_binary(&report.final_state.u, &mut w)?;
    w.flush()?;

    let mut outputs = vec!["energy.csv", "summary.json", "u_final.bin"];
    if cfg.output.plots {
        let trace = &report.energy_trace;
        let series = [
            Series { name: "E", points: trace.iter().map(|r| (r.t, r.energy())).collect() },
            Series { name: "E + dissipated - work", points: trace.iter().map(|r| (r.t, r.balance())).collect() },
        ];
        std::fs::write(dir.join("energy.svg"), line_chart("energy", "t", &series))?;
        outputs.push("energy.svg");
    }
    write_manifest(&dir, "simulate", &cfg.canonical(), started, clock.elapsed(), &outputs)?;
    println!(
        "{} t_stop={} t_star_est={}",
        report.outcome.label(),
        report.t_stop(),
        fmt_opt(estimate.map(|e| e.t_star))
    );
    Ok(report.outcome.exit_code() as u8)
}

fn worker_count(requested: Option<usize>) -> Result<usize> {
    let default = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut workers = requested.unwrap_or(default);
    if let Ok(cap) = std::env::var("BLWP_WORKERS") {
        let cap: usize = cap.trim().parse().map_err(|_| config_err(format!("BLWP_WORKERS must be a positive integer, got {cap:?}")))?;
        if cap == 0 {
            return Err(config_err("BLWP_WORKERS must be at least 1"));
        }
        workers = workers.min(cap);
    }
    if workers == 0 {
        return Err(config_err("--workers must be at least 1"));
    }
    Ok(workers)
}

fn cmd_sweep(args: &RunArgs, overrides: &[(String, String)], workers: Option<usize>) -> Result<u8> {
    let cfg = load(args, overrides)?;
    let workers = worker_count(workers)?;
    let s = &cfg.sweep;
    let inputs = cartesian(&s.dims, &s.ps, &s.betas, cfg.model.b0, &s.amplitudes)
        .map_err(|e| config_err(format!("invalid sweep point: {e}")))?;
    let dir = out_dir(args, &cfg)?;
    let (started, clock) = (SystemTime::now(), Instant::now());
    let domain = SweepDomain {
        points: cfg.grid.points,
        half_width: (cfg.grid.half_width > 0.0).then_some(cfg.grid.half_width),
        radius: cfg.init.radius,
        kind: cfg.init.kind,
        target: cfg.init.on,
    };
    let report = run_sweep(&inputs, &domain, &cfg.controls(), workers)?;
    std::fs::write(dir.join("sweep.csv"), report.to_csv())?;
    let mut outputs = vec!["sweep.csv"];
    let failures: Vec<_> = report.failures().collect();
    if !failures.is_empty() {
        let mut w = csv::Writer::from_path(dir.join("failures.csv"))?;
        w.write_record(["index", "message"])?;
        for (i, msg) in &failures {
            w.write_record([i.to_string().as_str(), msg])?;
        }
        w.flush()?;
        outputs.push("failures.csv");
        eprintln!("{} of {} points failed; see failures.csv", failures.len(), report.points.len());
    }
    write_manifest(&dir, "sweep", &cfg.canonical(), started, clock.elapsed(), &outputs)?;
    println!("{} points written to {}", report.points.len(), dir.join("sweep.csv").display());
    Ok(0)
}

fn stdout_csv() -> csv::Writer<io::Stdout> {
    csv::Writer::from_writer(io::stdout())
}

fn cmd_slopes(p: f64, n: usize, beta: f64, d: Option<f64>, ts: &[f64], ell: Option<u32>) -> Result<u8> {
    let params = Params::new(n, p, beta, 1.0)?;
    let d = d.unwrap_or_else(|| scaling_d(beta));
    let bundles = ts
        .iter()
        .map(|&t| {
            let spec = match ell {
                Some(l) => CutoffSpec::new(l, l, d, t)?,
                None => CutoffSpec::for_exponent(p, d, t)?,
            };
            term_bundle(&spec, &params)
        })
        .collect::<blwp_core::Result<Vec<_>>>()?;
    let predicted = predicted_exponents(&params, d)?;
    let mut w = stdout_csv();
    w.write_record(["term", "slope", "predicted", "log_factor", "abs_error", "r2"])?;
    for (i, name) in TERM_NAMES.iter().enumerate() {
        let pts: Vec<(f64, f64)> = ts.iter().zip(&bundles).map(|(&t, b)| (t, b.values()[i])).collect();
        let fit = slope_fit(&pts)?;
        let pred = predicted[name];
        w.write_record([
            name.to_string(),
            fit.slope.to_string(),
            pred.value.to_string(),
            pred.log.to_string(),
            (fit.slope - pred.value).abs().to_string(),
            fit.r2.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(0)
}

fn cmd_scaling(beta: f64, lambda: f64, resolution: &[usize], rescale_damping: bool, trend: bool) -> Result<u8> {
    let params = Params::new(1, 2.0, beta, 1.0)?.linear();
    let bump = |g: &Grid| -> blwp_core::Result<InitialData> { InitialData::new(Field::zeros(g), bump_data(g, 1.0, &[0.0], 1.0)?) };
    let mut w = stdout_csv();
    if trend {
        let points = *resolution.first().ok_or_else(|| config_err("--resolution needs a value"))?;
        let grid = Grid::new(1, points, 64.0)?;
        let data = bump(&grid)?;
        let trend = damping_trend(&params, &data, &[1.0, 2.0, 4.0, 8.0], 1.0, 2.56 / points as f64)?;
        w.write_record(["lambda", "coefficient", "ratio"])?;
        for tp in trend {
            w.write_record([tp.lambda.to_string(), tp.coefficient.to_string(), tp.ratio.to_string()])?;
        }
    } else {
        w.write_record(["lambda", "resolution", "error"])?;
        for &n in resolution {
            let setup = InvarianceSetup { rescale_damping, ..InvarianceSetup::at_resolution(lambda, n) };
            let err = invariance_error(&params, bump, &setup)?;
            w.write_record([lambda.to_string(), n.to_string(), err.to_string()])?;
        }
    }
    w.flush()?;
    Ok(0)
}

fn cmd_exponents(n: u32, beta: f64, p: Option<f64>) -> Result<u8> {
    if !(1..=6).contains(&n) {
        return Err(config_err(format!("--n must lie in 1..=6, got {n}")));
    }
    let strauss = if n >= 2 { strauss_exponent(n)?.to_string() } else { "inf".to_string() };
    let mut header = vec!["n", "beta", "kato", "strauss", "threshold", "d"];
    let mut row = vec![
        n.to_string(),
        beta.to_string(),
        kato_threshold(n).to_string(),
        strauss,
        beta_threshold(n, beta).to_string(),
        scaling_d(beta).to_string(),
    ];
    if let Some(p) = p {
        header.extend(["p", "verdict"]);
        row.push(p.to_string());
        row.push(classify(n, beta, p)?.label().to_string());
    }
    let mut w = stdout_csv();
    w.write_record(&header)?;
    w.write_record(&row)?;
    w.flush()?;
    Ok(0)
}

fn cmd_weakcheck(args: &RunArgs, overrides: &[(String, String)]) -> Result<u8> {
    let cfg = load(args, overrides)?;
    let dir = out_dir(args, &cfg)?;
    let (started, clock) = (SystemTime::now(), Instant::now());
    let params = cfg.params()?;
    let horizon = cfg.weak.horizon;
    let d = scaling_d(params.beta);
    let spec = if cfg.weak.ell == 0 {
        CutoffSpec::for_exponent(params.p, d, horizon)?
    } else {
        CutoffSpec::new(cfg.weak.ell, cfg.weak.ell, d, horizon)?
    };
    let grid = Grid::new(cfg.grid.dim, cfg.grid.points, cfg.half_width())?;
    let data = build_data(&cfg, &grid)?;
    if cfg.weak.steps < 2 {
        return Err(config_err("weak.steps must be at least 2"));
    }
    let controls = Controls { snapshot_every: Some(1), boundary_check: false, ..Controls::fixed(horizon, horizon / cfg.weak.steps as f64) };
    let report = simulate(&params, &data, &controls)?;
    if report.outcome != Outcome::CompletedHorizon {
        bail!("the run stopped early ({}) before reaching T = {horizon}", report.outcome.label());
    }
    let traj: Vec<(f64, Field)> = report.snapshots.into_iter().map(|s| (s.t, s.u)).collect();
    let weak = weak_residual(&traj, &data, &spec, &params)?;
    let strong = strong_form_integral(&traj, &spec, &params)?;
    let scale = weak.abs().max(strong.abs()).max(f64::MIN_POSITIVE);
    let mut w = csv::Writer::from_path(dir.join("weakcheck.csv"))?;
    let header = ["horizon", "steps", "weak_residual", "strong_form", "relative_difference"];
    let row = [
        horizon.to_string(),
        cfg.weak.steps.to_string(),
        weak.to_string(),
        strong.to_string(),
        ((weak - strong).abs() / scale).to_string(),
    ];
    w.write_record(header)?;
    w.write_record(&row)?;
    w.flush()?;
    write_manifest(&dir, "weakcheck", &cfg.canonical(), started, clock.elapsed(), &["weakcheck.csv"])?;
    println!("{}", header.join(","));
    println!("{}", row.join(","));
    Ok(0)
}

fn cmd_oracle(u0: f64, v0: f64, p: f64, t_max: f64) -> Result<u8> {
    let prob = OdeProblem::new(u0, v0, p)?;
    let quad = ode_blowup_time(&prob).finite();
    let traj = trajectory_blowup_time(&prob, t_max);
    let show = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "inf".to_string());
    let mut w = stdout_csv();
    w.write_record(["u0", "v0", "p", "t_star_quadrature", "t_star_trajectory"])?;
    w.write_record([u0.to_string(), v0.to_string(), p.to_string(), show(quad), show(traj)])?;
    w.flush()?;
    if quad.is_none() && traj.is_some() {
        return Err(anyhow!("quadrature and trajectory disagree on finiteness"));
    }
    Ok(0)
}
