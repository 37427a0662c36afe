use dampwave::evolve::{Integrator, RunStatus, Source, StepControl};
use dampwave::torus::{FieldState, Grid, Spectral};
use dampwave::OperatorParams;
use num_complex::Complex64;
use std::f64::consts::PI;

fn bump(grid: &Grid, eps: f64) -> Vec<f64> {
    let n = grid.n as i32;
    grid.sample(|[x, y]| eps * (-(x * x + y * y) / 2.0).exp() / (2.0 * PI).powf(n as f64 / 2.0))
}

fn state_from(integ: &mut Integrator, u: &[f64], v: &[f64]) -> FieldState {
    FieldState::from_physical(integ.spectral(), u, v).unwrap()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn half_steps_compose_to_full_step() {
    let params = OperatorParams::new(0.5, 1.0, 0.5, 1).unwrap();
    let grid = Grid::new(1, 128, 10.0).unwrap();
    let mut integ = Integrator::new(params, grid).unwrap();
    let u = bump(&grid, 1.0);
    let v = grid.sample(|[x, _]| x * (-x * x).exp());
    let mut one = state_from(&mut integ, &u, &v);
    let mut two = one.clone();
    integ.linear_step(&mut one, 0.8).unwrap();
    integ.linear_step(&mut two, 0.4).unwrap();
    integ.linear_step(&mut two, 0.4).unwrap();
    assert!(max_diff(&one.uhat, &two.uhat) < 1e-12);
    assert!(max_diff(&one.vhat, &two.vhat) < 1e-12);
}

#[test]
fn zero_mode_follows_closed_form() {
    let params = OperatorParams::new(1.0, 1.0, 1.5, 1).unwrap();
    let grid = Grid::new(1, 64, 5.0).unwrap();
    let mut integ = Integrator::new(params, grid).unwrap();
    let mut st = FieldState::zeros(grid);
    st.uhat[0] = Complex64::new(0.3, 0.0);
    st.vhat[0] = Complex64::new(-1.1, 0.0);
    let h = 0.37;
    integ.linear_step(&mut st, h).unwrap();
    let expect = 0.3 + (1.0 - (-h).exp()) * -1.1;
    assert!((st.uhat[0].re - expect).abs() < 1e-15);
    assert!((st.vhat[0].re - (-1.1 * (-h).exp())).abs() < 1e-15);
}

#[test]
fn oscillating_mode_energy_decays_like_exp_minus_t() {
    // u = e^{-t/2}(A cos δt + B sin δt) keeps |u_t + u/2|² + δ²|u|² = e^{-t} E₀.
    let params = OperatorParams::new(1.0, 1.0, 0.5, 1).unwrap();
    let grid = Grid::new(1, 64, PI).unwrap();
    let mut integ = Integrator::new(params, grid).unwrap();
    let m = params.symbol(3.0);
    let delta2 = m - 0.25;
    let mut st = FieldState::zeros(grid);
    st.uhat[3] = Complex64::new(0.7, 0.0);
    st.vhat[3] = Complex64::new(0.2, 0.0);
    let energy = |s: &FieldState| (s.vhat[3] + 0.5 * s.uhat[3]).norm_sqr() + delta2 * s.uhat[3].norm_sqr();
    let e0 = energy(&st);
    for _ in 0..20 {
        integ.linear_step(&mut st, 0.45).unwrap();
        let ratio = energy(&st) / (e0 * (-st.t).exp());
        assert!((ratio - 1.0).abs() < 1e-12, "t={}: {ratio}", st.t);
    }
}

#[test]
fn linear_run_matches_single_propagation() {
    let params = OperatorParams::new(1.0, 0.3, 0.5, 1).unwrap();
    let grid = Grid::new(1, 256, 30.0).unwrap();
    let mut integ = Integrator::new(params, grid).unwrap();
    let u = bump(&grid, 1.0);
    let v = grid.sample(|[x, _]| (-(x - 1.0).powi(2)).exp());
    let start = state_from(&mut integ, &u, &v);
    let mut st = start.clone();
    let ctrl = StepControl { dt_max: 0.07, ..StepControl::new(20.0) };
    let out = integ.run(&mut st, &ctrl, &Source::Linear, |_, _, _| {}).unwrap();
    assert_eq!(out.status, RunStatus::Completed);
    assert!(out.steps > 200);
    assert!((st.t - 20.0).abs() < 1e-12);
    let radii = grid.wavenumber_radii();
    let mut err = 0.0_f64;
    let mut scale = 0.0_f64;
    for idx in 0..grid.len() {
        let kv = params.kernel_eval(20.0, radii[idx]);
        let exact = kv.k0 * start.uhat[idx] + kv.k1 * start.vhat[idx];
        err = err.max((exact - st.uhat[idx]).norm());
        scale = scale.max(exact.norm());
    }
    assert!(err <= 1e-11 * scale, "{err} vs {scale}");
}

#[test]
fn zero_data_stays_zero() {
    let params = OperatorParams::new(1.0, 1.0, 0.5, 1).unwrap();
    let grid = Grid::new(1, 64, 10.0).unwrap();
    let mut integ = Integrator::new(params, grid).unwrap();
    let mut st = FieldState::zeros(grid);
    integ.etd2_step(&mut st, 0.05, &Source::Power(3.0)).unwrap();
    assert!(st.uhat.iter().chain(&st.vhat).all(|c| c.norm() == 0.0));
    let mut st = FieldState::zeros(grid);
    let out = integ.run(&mut st, &StepControl::new(5.0), &Source::Power(1.5), |_, _, _| {}).unwrap();
    assert_eq!(out.status, RunStatus::Completed);
    assert!(out.series.rows.iter().all(|r| r.l2 == 0.0 && r.linf == 0.0));
}

fn manufactured_error(h: f64) -> f64 {
    let params = OperatorParams::new(1.0, 1.0, 0.5, 1).unwrap();
    let grid = Grid::new(1, 64, PI).unwrap();
    let mut integ = Integrator::new(params, grid).unwrap();
    let source = Source::Manufactured { p: 2.0, mode: 1 };
    let u0 = Source::manufactured_solution(&grid, 1, 0.0);
    let v0: Vec<f64> = u0.iter().map(|v| -v).collect();
    let mut st = state_from(&mut integ, &u0, &v0);
    let t_end = 1.0;
    let steps = (t_end / h).round() as usize;
    for _ in 0..steps {
        integ.etd2_step(&mut st, h, &source).unwrap();
    }
    let u = st.physical_u(integ.spectral()).unwrap();
    let exact = Source::manufactured_solution(&grid, 1, st.t);
    u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let hs = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let errs: Vec<f64> = hs.iter().map(|&h| manufactured_error(h)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&order), "errors {errs:?}");
    }
}

#[test]
fn step_doubling_defect_is_third_order() {
    // The forcing enters u through weights of size h², so the displacement
    // defect is one order smaller than the velocity defect.
    let params = OperatorParams::new(1.0, 1.0, 0.5, 1).unwrap();
    let grid = Grid::new(1, 128, 20.0).unwrap();
    let defect = |h: f64| {
        let mut integ = Integrator::new(params, grid).unwrap();
        let u = bump(&grid, 2.0);
        let mut one = state_from(&mut integ, &u, &u);
        let mut two = one.clone();
        let src = Source::Power(2.0);
        integ.etd2_step(&mut one, h, &src).unwrap();
        integ.etd2_step(&mut two, h / 2.0, &src).unwrap();
        integ.etd2_step(&mut two, h / 2.0, &src).unwrap();
        (max_diff(&one.uhat, &two.uhat), max_diff(&one.vhat, &two.vhat))
    };
    let (u1, v1) = defect(0.05);
    let (u2, v2) = defect(0.025);
    let order_v = (v1 / v2).log2();
    let order_u = (u1 / u2).log2();
    assert!((2.7..=3.3).contains(&order_v), "{v1} {v2} {order_v}");
    assert!(order_u >= 2.9, "{u1} {u2} {order_u}");
}

#[test]
fn zero_mode_obeys_scalar_duhamel_identity() {
    let params = OperatorParams::new(1.0, 1.0, 0.5, 1).unwrap();
    let grid = Grid::new(1, 512, 50.0).unwrap();
    let mut integ = Integrator::new(params, grid).unwrap();
    let u = bump(&grid, 0.5);
    let mut st = state_from(&mut integ, &u, &u);
    let out = integ
        .run(&mut st, &StepControl::new(30.0), &Source::Power(3.0), |_, _, _| {})
        .unwrap();
    assert_eq!(out.status, RunStatus::Completed);
    assert!(out.zero_mode_residual() < 1e-10, "{}", out.zero_mode_residual());
    assert!(out.mass.nonlinear_mass > 0.0);
    let rows = &out.series.rows;
    assert!(rows.windows(2).all(|w| w[1].t > w[0].t));
    assert!(rows.windows(2).all(|w| w[1].nonlinear_mass >= w[0].nonlinear_mass));
}

#[test]
fn large_positive_data_blows_up_with_ordered_crossings() {
    let params = OperatorParams::new(1.0, 1.0, 0.5, 1).unwrap();
    let grid = Grid::new(1, 512, 40.0).unwrap();
    let mut integ = Integrator::new(params, grid).unwrap();
    let u = bump(&grid, 1.0);
    let mut st = state_from(&mut integ, &u, &u);
    let ctrl = StepControl { blowup_threshold: 1e8, ..StepControl::new(200.0) };
    let out = integ.run(&mut st, &ctrl, &Source::Power(1.5), |_, _, _| {}).unwrap();
    assert_eq!(out.status, RunStatus::BlewUp);
    assert!(out.t_final < ctrl.t_end);
    let times: Vec<f64> = out.crossings.iter().map(|c| c.t).collect();
    assert_eq!(times.len(), 6);
    assert!(times.windows(2).all(|w| w[1] >= w[0]));
    assert!(out.crossing_time(1e8).unwrap() - out.crossing_time(1e4).unwrap() < 0.1 * out.t_final);
}

#[test]
fn mass_of_spectral_state_is_conserved_by_transforms() {
    let grid = Grid::new(2, 64, 8.0).unwrap();
    let mut sp = Spectral::new(grid);
    let u = bump(&grid, 1.0);
    let st = FieldState::from_physical(&mut sp, &u, &u).unwrap();
    assert!((sp.mass(&st.uhat) - 1.0).abs() < 1e-10);
}
