//! Cross-module identities: the operator pipeline against the certified
//! integral constants, linearity of the solve, and tail-mass bounds.

use std::sync::Arc;

use nonlocal_neumann::certify::integral_j;
use nonlocal_neumann::measures::LevyMeasure;
use nonlocal_neumann::nonlocal_op::{eval_inner, AnalyticFn, FieldRef, SplitParams};
use nonlocal_neumann::quad::adaptive;
use nonlocal_neumann::reflect::ReflectionModel;
use nonlocal_neumann::solver::{solve_direct, Problem};

/// The logarithm is a supersolution for the censored mild-singular kernel:
/// the operator quadrature must reproduce `-I[-ln](x) x^alpha = J` through a
/// completely different route than the certified constant.
#[test]
fn censored_log_supersolution_matches_log_kernel_constant() {
    let alpha = 0.5;
    let msr = LevyMeasure::stable_1d(alpha).unwrap();
    let delta = 1.0;
    let params = SplitParams { delta, quad_cells_per_node: 8, tail_tol: 1e-6 };
    let f = |t: f64| -(t.ln());
    let df = |t: f64| -1.0 / t;
    let d2f = |t: f64| 1.0 / (t * t);
    let u = AnalyticFn { f: &f, df: &df, d2f: &d2f };
    let j = integral_j(alpha, 1).unwrap();

    for x in [0.5, 0.25] {
        // inner part through the operator machinery (x < delta, so the
        // censored downward branch is entirely inside)
        let inner = eval_inner(&FieldRef::Analytic(&u), &msr, ReflectionModel::Censored, x, &params).unwrap();
        // upward tail by direct quadrature plus the exact alpha = 1/2 remainder
        let z_cut = 50_000.0;
        let tail = adaptive(&|z: f64| (f(x + z) - f(x)) * z.powf(-1.0 - alpha), delta, z_cut, 1e-10);
        // int_Z^inf ln((x+z)/x) z^(-3/2) dz, by parts against -2 z^(-1/2)
        let remainder = 2.0 * ((x + z_cut) / x).ln() / z_cut.sqrt()
            + 4.0 / x.sqrt() * (std::f64::consts::FRAC_PI_2 - (z_cut / x).sqrt().atan());
        let total = inner + tail.value + remainder;
        let scaled = -total * x.powf(alpha);
        assert!(
            (scaled - j.value).abs() < 1e-4,
            "x={x}: operator route {scaled} vs certified {}",
            j.value
        );
    }
}

#[test]
fn direct_solver_is_linear() {
    let tol = 1e-10;
    let n = 81;
    let msr = LevyMeasure::stable_1d(1.5).unwrap();
    let f1 = Arc::new(|x: f64| (0.8 * x).sin());
    let f2 = Arc::new(|x: f64| (-x).exp() - 0.4);
    let sum = Arc::new(|x: f64| (0.8 * x).sin() + (-x).exp() - 0.4);
    let mk = |src: Arc<dyn Fn(f64) -> f64 + Send + Sync>| {
        Problem::new(msr.clone(), ReflectionModel::Projection, src, 8.0, n).unwrap()
    };
    let u1 = solve_direct(&mk(f1), None).unwrap();
    let u2 = solve_direct(&mk(f2), None).unwrap();
    let us = solve_direct(&mk(sum), None).unwrap();
    for i in 0..n {
        let lin = u1.solution.values[i] + u2.solution.values[i];
        assert!((us.solution.values[i] - lin).abs() <= 3.0 * tol, "node {i}");
    }
}

/// The normalized outer mass beyond `delta` obeys the closed bound
/// `2 (2 - alpha) delta^(-alpha) / alpha` (equality for g = 1).
#[test]
fn normalized_tail_mass_matches_bound() {
    for alpha in [1.5_f64, 1.7, 1.9, 1.95] {
        let msr = LevyMeasure::stable_1d(alpha).unwrap();
        let delta = 0.5;
        let norm = 2.0 - alpha;
        let k = msr.truncate(((1.0 / delta) as usize).max(1)).unwrap();
        let computed = norm * k.total_mass().unwrap();
        let bound = 2.0 * norm * delta.powf(-alpha) / alpha;
        let ratio = computed / bound;
        assert!((0.99..=1.01).contains(&ratio), "alpha={alpha}: ratio {ratio}");
    }
}

#[test]
fn sweep_constant_source_hits_local_solution_exactly() {
    use nonlocal_neumann::local_limit::alpha_sweep;
    let msr = LevyMeasure::stable_1d(1.5).unwrap();
    let mut template = Problem::new(msr, ReflectionModel::Censored, Arc::new(|_| 1.25), 6.0, 81).unwrap();
    template.normalized = true;
    let table = alpha_sweep(&template, &[1.5, 1.9], 1e-10).unwrap();
    for row in &table.rows {
        assert!(row.e_alpha < 1e-9, "alpha={} {:?}: e={}", row.alpha, row.model, row.e_alpha);
    }
}
