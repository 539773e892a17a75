use edg::analysis::conservation_report;
use edg::{
    integrate, make_state, step, DensityState, InitSpec, IntegratorConfig, Kernel, KernelSpec, KernelTable, Method,
    StopReason,
};
use proptest::prelude::*;

fn mono(n: usize) -> DensityState {
    make_state(&InitSpec::Monodisperse { density: 1.0 }, n).unwrap()
}

fn single_pair() -> Kernel {
    let mut rows = vec![vec![0.0; 3]; 3];
    rows[1][1] = 1.0;
    Kernel::new(KernelSpec::tabulated(KernelTable::from_rows(rows).unwrap())).unwrap()
}

/// Classical RK4 with a fixed small step on `f0' = f1^2, f1' = -2 f1^2, f2' = f1^2`.
fn reference_single_pair(t_end: f64, steps: usize) -> [f64; 3] {
    let rhs = |f: [f64; 3]| {
        let q = f[1] * f[1];
        [q, -2.0 * q, q]
    };
    let h = t_end / steps as f64;
    let mut y = [0.0, 1.0, 0.0];
    for _ in 0..steps {
        let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
        let k1 = rhs(y);
        let k2 = rhs(add(y, k1, h / 2.0));
        let k3 = rhs(add(y, k2, h / 2.0));
        let k4 = rhs(add(y, k3, h));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

fn single_pair_error(method: Method, rel_tol: f64) -> f64 {
    // one output interval, so the controller alone picks the steps
    let cfg = IntegratorConfig::new(2.0)
        .with_method(method)
        .with_tolerances(rel_tol, rel_tol * 1e-2)
        .with_record_every(2.0);
    let traj = integrate(&mono(2), &single_pair(), &cfg).unwrap();
    (traj.last().densities()[1] - 0.2).abs()
}

/// Errors for `rel_tol = 1e-3 / 2^i`, `i = 0..16`, and the least-squares
/// slope of `log2(error)` against `log2(rel_tol)`.
fn halving_sweep(method: Method) -> (Vec<f64>, f64) {
    let errs: Vec<f64> = (0..16).map(|i| single_pair_error(method, 1e-3 / 2f64.powi(i))).collect();
    let xs: Vec<f64> = (0..16).map(|i| -(i as f64)).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.log2()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 16.0, ys.iter().sum::<f64>() / 16.0);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (errs, sxy / sxx)
}

#[test]
fn single_pair_matches_closed_form_and_reference() {
    for method in [Method::Dopri5, Method::Rosenbrock] {
        let cfg = IntegratorConfig::new(2.0)
            .with_method(method)
            .with_tolerances(1e-11, 1e-13);
        let traj = integrate(&mono(2), &single_pair(), &cfg).unwrap();
        assert_eq!(traj.stop_reason, StopReason::ReachedTEnd);
        let end = traj.last();
        assert_eq!(end.t(), 2.0);
        let f = end.densities();
        assert!((f[1] - 0.2).abs() <= 1e-8, "{method:?}: {}", f[1]);
        let reference = reference_single_pair(2.0, 20_000);
        for i in 0..3 {
            assert!((f[i] - reference[i]).abs() <= 1e-8, "{method:?} entry {i}");
        }
    }
}

#[test]
fn reference_integrator_agrees_with_closed_form() {
    let y = reference_single_pair(2.0, 20_000);
    assert!((y[1] - 0.2).abs() < 1e-12);
    assert!((y[0] - 0.4).abs() < 1e-12);
}

// Both controllers are tolerance-proportional, so each halving of rel_tol
// cuts the error by a factor close to 2 (observed 1.8 to 2.7 for the
// explicit pair). The order check is made on the trend over 15 halvings.
#[test]
fn halving_the_tolerance_halves_the_error() {
    let (errs, slope) = halving_sweep(Method::Dopri5);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(slope >= 1.0, "error ~ rel_tol^{slope}");
    assert!(errs[0] / errs[15] >= 2f64.powi(15));

    let (errs, slope) = halving_sweep(Method::Rosenbrock);
    assert!(errs.windows(2).all(|w| w[1] < w[0] && w[0] / w[1] > 1.9), "{errs:?}");
    assert!(slope >= 0.95, "error ~ rel_tol^{slope}");
}

#[test]
fn quadratic_kernel_inverse_second_moment_is_affine() {
    let kernel = Kernel::new(KernelSpec::homogeneous(1.0, 2.0)).unwrap();
    let cfg = IntegratorConfig::new(0.45)
        .with_method(Method::Rosenbrock)
        .with_record_every(0.01);
    let traj = integrate(&mono(2048), &kernel, &cfg).unwrap();
    assert_eq!(traj.stop_reason, StopReason::ReachedTEnd);
    let m2 = traj.moments.column(2.0).unwrap();
    for (t, m) in traj.times().iter().zip(&m2) {
        if *t <= 0.35 {
            assert!((1.0 / m - (1.0 - 2.0 * t)).abs() <= 1e-5, "t = {t}");
        }
    }
    // superlinear growth: increments increase
    let inc: Vec<f64> = m2.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(inc.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn linear_kernel_conserves_tightly() {
    let kernel = Kernel::new(KernelSpec::homogeneous(1.0, 1.0)).unwrap();
    let traj = integrate(&mono(256), &kernel, &IntegratorConfig::new(1.0)).unwrap();
    let r = conservation_report(&traj);
    assert!(r.within(1e-9), "{r:?}");
    // M2 = 1 + 2 t exactly for K = jk with unit mass
    let last = traj.last();
    assert!((last.moment(2.0) - 3.0).abs() < 1e-7);
}

#[test]
fn trajectory_bookkeeping() {
    let kernel = Kernel::new(KernelSpec::homogeneous(1.0, 1.0)).unwrap();
    let cfg = IntegratorConfig::new(1.0).with_record_every(0.25);
    let traj = integrate(&mono(16), &kernel, &cfg).unwrap();
    assert_eq!(traj.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(traj.states.len(), traj.dts.len());
    assert!(traj.step_stats.accepted > 0);
    assert_eq!(traj.method, Method::Dopri5);

    let traj = integrate(&mono(16), &kernel, &IntegratorConfig::new(0.0)).unwrap();
    assert_eq!(traj.times(), &[0.0]);
}

#[test]
fn blowup_threshold_stops_the_run() {
    let kernel = Kernel::new(KernelSpec::homogeneous(1.0, 2.0)).unwrap();
    let mut cfg = IntegratorConfig::new(1.0).with_method(Method::Rosenbrock);
    cfg.blowup_threshold = 4.0;
    let traj = integrate(&mono(512), &kernel, &cfg).unwrap();
    assert_eq!(traj.stop_reason, StopReason::BlowupDetected);
    let c = traj.crossing.unwrap();
    assert!(c.value_before <= 4.0 && c.value_after > 4.0);
    // 1/M2 = 1 - 2t reaches 1/4 at t = 0.375
    assert!((c.time() - 0.375).abs() < 1e-3, "{}", c.time());
    assert_eq!(traj.last().t(), c.t_after);
}

#[test]
fn step_size_underflow_is_reported() {
    let kernel = Kernel::new(KernelSpec::homogeneous(1.0, 2.0)).unwrap();
    let mut cfg = IntegratorConfig::new(0.4);
    cfg.dt_init = 1e-2;
    cfg.dt_min = 1e-2;
    let traj = integrate(&mono(64), &kernel, &cfg).unwrap();
    assert_eq!(traj.stop_reason, StopReason::DtUnderflow);
    assert!(step(&mono(64), &kernel, 1e-2, &cfg).is_err());
}

#[test]
fn methods_agree_on_a_moderate_problem() {
    let kernel = Kernel::new(KernelSpec::product_power(0.5, 1.5, 1.0)).unwrap();
    let run = |m| {
        let cfg = IntegratorConfig::new(0.5)
            .with_method(m)
            .with_tolerances(1e-9, 1e-12)
            .with_record_every(0.1);
        integrate(&mono(40), &kernel, &cfg).unwrap()
    };
    let (a, b) = (run(Method::Dopri5), run(Method::Rosenbrock));
    for (x, y) in a.states.iter().zip(&b.states) {
        assert_eq!(x.t(), y.t());
        for (u, v) in x.densities().iter().zip(y.densities()) {
            assert!((u - v).abs() <= 1e-6, "{u} vs {v}");
        }
    }
}

#[test]
fn step_rejects_negative_overshoot() {
    // a huge step on a fast kernel overshoots far below zero
    let kernel = Kernel::new(KernelSpec::homogeneous(1.0, 2.0)).unwrap();
    let mut cfg = IntegratorConfig::new(1.0).with_tolerances(1.0, 1.0);
    cfg.dt_max = 10.0;
    let out = step(&mono(8), &kernel, 1.0, &cfg).unwrap();
    assert!(!out.accepted);
    assert_eq!(out.state.densities(), mono(8).densities());
    assert!(out.dt_next <= 0.5);
}

fn small_problem() -> impl Strategy<Value = (KernelSpec, Vec<f64>, Method)> {
    let spec = prop_oneof![
        (0.1f64..1.5, 0.0f64..1.5, 0.0f64..1.5).prop_map(|(c, mu, nu)| KernelSpec::product_power(c, mu, nu)),
        (0.1f64..1.5, 0.0f64..2.0).prop_map(|(c, e)| KernelSpec::homogeneous(c, e)),
        (0.1f64..1.0, 0.0f64..1.5).prop_map(|(c, b)| KernelSpec::sum_power(c, b)),
    ];
    let f = (3usize..24).prop_flat_map(|n| proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], n + 1));
    let method = prop_oneof![Just(Method::Dopri5), Just(Method::Rosenbrock)];
    (spec, f, method)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_conserve_stay_nonnegative_and_repeat((spec, mut f, method) in small_problem(), rel_exp in 6i32..10) {
        f[1] += 0.1;
        let kernel = Kernel::new(spec).unwrap();
        let s = DensityState::new(0.0, f).unwrap();
        let rel_tol = 10f64.powi(-rel_exp);
        let cfg = IntegratorConfig::new(0.5).with_method(method).with_tolerances(rel_tol, rel_tol * 1e-2);
        let traj = integrate(&s, &kernel, &cfg).unwrap();
        prop_assert_eq!(traj.stop_reason, StopReason::ReachedTEnd);
        let r = conservation_report(&traj);
        prop_assert!(r.within(10.0 * rel_tol), "{:?} at rel_tol {}", r, rel_tol);
        for st in &traj.states {
            prop_assert!(st.densities().iter().all(|&v| v >= 0.0));
        }
        prop_assert!(traj.times().windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(traj.times()[0], 0.0);
        let again = integrate(&s, &kernel, &cfg).unwrap();
        prop_assert!(again == traj);
    }
}
