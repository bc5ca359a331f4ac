use proptest::prelude::*;

use blwp_core::grid::{helmholtz_solve, integrate, laplacian, read_binary, write_binary};
use blwp_core::model::bump_data;
use blwp_core::oracle::{ode_blowup_time, OdeProblem};
use blwp_core::stepper::{simulate, step};
use blwp_core::{Controls, Field, Grid, InitialData, Outcome, Params, State};

fn linf_diff(a: &Field, b: &Field) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fourier_modes_are_eigenfunctions(k in 1usize..8, dim in 1usize..3) {
        let l = std::f64::consts::PI;
        let grid = Grid::new(dim, 32, l).unwrap();
        let f = Field::from_fn(&grid, |x| (k as f64 * x[0]).cos());
        let expected = f.map(|v| -((k * k) as f64) * v);
        prop_assert!(linf_diff(&laplacian(&f), &expected) < 1e-9);
    }

    #[test]
    fn helmholtz_inverts_its_operator(a in 0.0f64..5.0, seed in 0u64..1000) {
        let grid = Grid::new(1, 64, 8.0).unwrap();
        let f = Field::from_fn(&grid, |x| (x[0] + seed as f64).sin() * (-x[0] * x[0] / 4.0).exp());
        let u = helmholtz_solve(&f, a);
        let back = u.zip_map(&laplacian(&u), |v, lv| v - a * lv).unwrap();
        prop_assert!(linf_diff(&back, &f) < 1e-9);
    }

    #[test]
    fn binary_roundtrip_is_exact(values in proptest::collection::vec(-1e6f64..1e6, 16)) {
        let grid = Grid::new(1, 16, 1.0).unwrap();
        let f = Field::from_values(&grid, values).unwrap();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        let g = read_binary(buf.as_slice()).unwrap();
        prop_assert_eq!(f.values(), g.values());
    }

    #[test]
    fn linear_step_scales_linearly(c in -3.0f64..3.0) {
        let grid = Grid::new(1, 64, 16.0).unwrap();
        let params = Params::new(1, 2.0, 0.5, 1.0).unwrap().linear();
        let u1 = bump_data(&grid, 1.0, &[0.0], 2.0).unwrap();
        let base = step(&State::initial(&InitialData::new(Field::zeros(&grid), u1.clone()).unwrap()), &params, 1e-2).unwrap();
        let scaled = step(&State::initial(&InitialData::new(Field::zeros(&grid), u1.map(|v| c * v)).unwrap()), &params, 1e-2).unwrap();
        prop_assert!(linf_diff(&scaled.u, &base.u.map(|v| c * v)) < 1e-12);
    }
}

#[test]
fn zero_data_stays_zero() {
    let grid = Grid::new(2, 32, 8.0).unwrap();
    let report = simulate(&Params::new(2, 2.0, 0.0, 1.0).unwrap(), &InitialData::zero(&grid), &Controls { t_end: 1.0, ..Controls::default() }).unwrap();
    assert_eq!(report.outcome, Outcome::CompletedHorizon);
    assert!(report.energy_trace.iter().all(|r| r.energy() == 0.0));
    assert_eq!(report.final_state.u.linf(), 0.0);
}

#[test]
fn fixed_mode_lands_on_multiples_of_dt() {
    let grid = Grid::new(1, 32, 8.0).unwrap();
    let data = InitialData::new(Field::zeros(&grid), bump_data(&grid, 0.1, &[0.0], 2.0).unwrap()).unwrap();
    let report = simulate(&Params::new(1, 2.0, 0.0, 1.0).unwrap(), &data, &Controls { boundary_check: false, ..Controls::fixed(1.0, 0.125) }).unwrap();
    let ts: Vec<f64> = report.energy_trace.iter().map(|r| r.t).collect();
    assert_eq!(ts.len(), 9, "{:?}", report.outcome);
    for (i, t) in ts.iter().enumerate() {
        assert!((t - 0.125 * i as f64).abs() < 1e-12);
    }
}

#[test]
fn spatially_constant_run_matches_ode() {
    let grid = Grid::new(1, 8, 1.0).unwrap();
    let (u0, v0, p) = (0.5, 0.3, 3.0);
    let data = InitialData::new(Field::constant(&grid, u0), Field::constant(&grid, v0)).unwrap();
    let report = simulate(&Params::new(1, p, 0.0, 1.0).unwrap(), &data, &Controls { t_end: 50.0, ..Controls::default() }).unwrap();
    let est = report.outcome.blowup_estimate().expect("constant data blows up");
    let exact = ode_blowup_time(&OdeProblem::new(u0, v0, p).unwrap()).finite().unwrap();
    assert!((est.t_star - exact).abs() / exact < 1e-2, "{} vs {exact}", est.t_star);
}

#[test]
fn linear_run_conserves_mass_of_velocity_integral() {
    // ∫u_t is constant for the linear equation on a periodic box
    let grid = Grid::new(1, 128, 32.0).unwrap();
    let u1 = bump_data(&grid, 1.0, &[0.0], 3.0).unwrap();
    let data = InitialData::new(Field::zeros(&grid), u1.clone()).unwrap();
    let report = simulate(&Params::new(1, 2.0, 1.0, 1.0).unwrap().linear(), &data, &Controls::fixed(2.0, 1e-2)).unwrap();
    let m0 = integrate(&u1);
    let m1 = integrate(&report.final_state.v);
    assert!((m1 - m0).abs() < 1e-10 * m0.abs().max(1.0));
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    let left = (m - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + m)) + f(m));
    let right = (b - m) / 6.0 * (f(m) + 4.0 * f(0.5 * (m + b)) + f(b));
    if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, 0.5 * tol, depth - 1) + adaptive_simpson(f, m, b, 0.5 * tol, depth - 1)
    }
}

#[test]
fn bump_integral_matches_quadrature() {
    const BUMP_INTEGRAL_1D: f64 = 1.206_900_322_437_876_2;
    let profile = |s: f64| if s.abs() < 1.0 { (1.0 - 1.0 / (1.0 - s * s)).exp() } else { 0.0 };
    let oracle = adaptive_simpson(&profile, -1.0, 1.0, 1e-13, 40);
    assert!((oracle - BUMP_INTEGRAL_1D).abs() < 1e-10, "{oracle}");
    let grid = Grid::new(1, 1024, 8.0).unwrap();
    let f = bump_data(&grid, 1.0, &[0.0], 1.0).unwrap();
    assert!((integrate(&f) - oracle).abs() < 1e-8, "{}", integrate(&f));
}
