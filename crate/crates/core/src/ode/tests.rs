use super::*;
use crate::conditions::{ConditionId, Verdict};
use crate::fd::{fd_curvature_oracle, numeric_config, verify_numeric_metric};
use crate::geometry::GeometryEvaluator;
use proptest::prelude::*;

fn system(id: &str) -> RifOdeSystem {
    RifOdeSystem::builtin(id, &BTreeMap::new()).unwrap()
}

fn with(id: &str, params: &[(&str, f64)]) -> Result<RifOdeSystem, OdeError> {
    RifOdeSystem::builtin(id, &params.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

fn run(sys: &RifOdeSystem) -> NumericMetric {
    sys.integrate(&sys.default_init, sys.default_range, sys.default_step).unwrap()
}

proptest! {
    #[test]
    fn hermite_reproduces_quintics(c in prop::array::uniform6(-3.0f64..3.0), h in 0.01f64..2.0, s in 0.0f64..1.0) {
        let p = |t: f64| c.iter().rev().fold(0.0, |acc, k| acc * t + k);
        let dp = |t: f64| (1..6).rev().fold(0.0, |acc, k| acc * t + k as f64 * c[k]);
        let d2p = |t: f64| (2..6).rev().fold(0.0, |acc, k| acc * t + (k * (k - 1)) as f64 * c[k]);
        let v = hermite5(s, h, [p(0.0), dp(0.0), d2p(0.0)], [p(h), dp(h), d2p(h)]);
        prop_assert!((v - p(s * h)).abs() < 1e-9 * (1.0 + p(s * h).abs()));
    }
}

fn exp_error<T: Real>(steps: usize) -> f64 {
    let h = T::one() / T::lit(steps as f64);
    let mut f = |_t: T, y: &[T]| Ok::<_, ()>(y.to_vec());
    let mut y = vec![T::one()];
    let mut t = T::zero();
    for _ in 0..steps {
        y = rk4_step(&mut f, t, &y, h).unwrap();
        t = t + h;
    }
    (y[0].to_f64_lossy() - std::f64::consts::E).abs()
}

#[test]
fn rk4_is_fourth_order() {
    let ratio = exp_error::<f64>(10) / exp_error::<f64>(20);
    assert!((14.0..18.0).contains(&ratio), "{ratio}");
    assert!(exp_error::<f32>(10) < 1e-4);
}

#[test]
fn constant_solution_stays_constant() {
    // q'' = 0 with q(0) = 1, q'(0) = 0
    let mut f = |_t: f64, y: &[f64]| Ok::<_, ()>(vec![y[1], 0.0]);
    let mut y = vec![1.0, 0.0];
    for n in 0..100 {
        y = rk4_step(&mut f, n as f64 * 0.01, &y, 0.01).unwrap();
    }
    assert_eq!(y, vec![1.0, 0.0]);
}

#[test]
fn first_integral_drift_converges() {
    let sys = system("qe1-4d1");
    let coarse = sys.trajectory(&[1.0, 0.3], (0.0, 1.0), 1e-3).unwrap();
    let fine = sys.trajectory(&[1.0, 0.3], (0.0, 1.0), 5e-4).unwrap();
    let (dc, df) = (coarse.drift.unwrap(), fine.drift.unwrap());
    assert!(dc < 1e-8, "{dc:e}");
    assert!(dc / df >= 8.0, "{dc:e} / {df:e}");
    assert_eq!(coarse.y.len(), 1001);
    assert!(coarse.truncated_at.is_none());
    assert!(coarse.interpolation_error < 1e-10, "{:e}", coarse.interpolation_error);
}

#[test]
fn step_is_rounded_to_fit_the_range() {
    let t = system("qe1-4d1").trajectory(&[1.0, 0.3], (0.0, 0.5), 0.0031).unwrap();
    assert!((t.t_end() - 0.5).abs() < 1e-12);
    assert!((t.step - 0.5 / 161.0).abs() < 1e-15);
}

#[test]
fn quasi_einstein_warp() {
    let m = run(&system("qe1-4d1"));
    assert!(!m.experimental);
    let r = verify_numeric_metric(&m, ConditionId::Qe1, &numeric_config().with_points(12)).unwrap();
    assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
    for e in r.recovered.unwrap().eigen.unwrap() {
        let mut mult = e.multiplicities.clone();
        mult.sort();
        assert_eq!(mult, vec![1, 3]);
    }
}

#[test]
fn numeric_ricci_matches_symbolic_taylor_model() {
    let sys = system("qe1-4d1");
    let m = run(&sys);
    let t = &m.trajectory;
    for k in [250, 500, 750] {
        let tk = t.t0 + k as f64 * t.step;
        let (q, dq, d2q) = (t.y[k][0], t.dy[k][0], t.d2y[k][0]);
        let text = format!(
            "manifold taylor\ndim 4\ncoords x1 x2 x3 x4\nconst c1 = 0.5\nconst c2 = 0\nconst c3 = 1\n\
             func f(x1) = 4*c3*cosh(c1*x1 + c2)^2\n\
             func q(x4) = {q} + {dq}*(x4 - {tk}) + {}*(x4 - {tk})^2\n\
             metric diag: 1, f(x1)*q(x4), f(x1)*q(x4), f(x1)*q(x4)\n",
            0.5 * d2q
        );
        let spec = parse_manifold(&text).unwrap();
        let x = [0.3, -0.2, 0.1, tk];
        let exact = GeometryEvaluator::with_order(&spec, 2).unwrap().at::<f64>(&x).unwrap().unwrap();
        let fd = fd_curvature_oracle(&m, &x, None).unwrap();
        for (a, b) in fd.ricci.as_slice().iter().zip(exact.ricci.as_slice()) {
            assert!((a - b).abs() < 1e-5 * (1.0 + b.abs()), "t = {tk}: {a} vs {b}");
        }
    }
}

#[test]
fn conformal_quasi_einstein_pair() {
    let cfg = numeric_config().with_points(12);
    let m = run(&system("qe2-4d1"));
    assert!(m.spec.lambda.is_some());
    for id in [ConditionId::Qe2, ConditionId::Co] {
        let r = verify_numeric_metric(&m, id, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
    }
    let printed = run(&with("qe2-4d1", &[("k", 1.0)]).unwrap());
    let r = verify_numeric_metric(&printed, ConditionId::Qe2, &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Fails, "{r:?}");
}

#[test]
fn diagonal_quasi_einstein_is_not_einstein() {
    let m = run(&system("qe1-4d2"));
    let cfg = numeric_config().with_points(12);
    let r = verify_numeric_metric(&m, ConditionId::Qe1, &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
    let eigen = r.recovered.unwrap().eigen.unwrap();
    assert!(eigen.iter().all(|e| e.multiplicities.len() == 2));
}

#[test]
fn experimental_system_reports_a_verdict() {
    let sys = system("rr-4d3");
    assert!(sys.experimental);
    let m = run(&sys);
    assert!(m.experimental);
    let r = verify_numeric_metric(&m, ConditionId::Rr, &numeric_config().with_points(8)).unwrap();
    assert!(r.points_used > 0);
}

#[test]
fn errors() {
    assert!(matches!(RifOdeSystem::builtin("nope", &BTreeMap::new()), Err(OdeError::UnknownSystem(_))));
    assert!(matches!(with("qe1-4d1", &[("c9", 1.0)]), Err(OdeError::UnknownParameter { .. })));
    let sys = system("qe1-4d1");
    assert_eq!(sys.trajectory(&[1.0], (0.0, 1.0), 1e-3), Err(OdeError::BadInit { expected: 2, got: 1 }));
    assert!(matches!(sys.trajectory(&[1.0, 0.3], (1.0, 0.0), 1e-3), Err(OdeError::BadRange(..))));
    assert!(matches!(sys.trajectory(&[-1.0, 0.3], (0.0, 1.0), 1e-3), Err(OdeError::GuardViolationAtStart(g)) if g == "q"));
    assert!(matches!(sys.trajectory(&[1.0, 0.3], (0.0, 1.0), 0.25), Err(OdeError::StepTooLarge { .. })));
}

#[test]
fn guard_truncates_the_trajectory() {
    // the first full step carries q below zero
    let t = system("qe1-4d1").trajectory(&[0.05, -2.0], (0.0, 1.0), 0.05).unwrap();
    assert_eq!(t.truncated_at, Some(0.05));
    assert_eq!(t.y.len(), 1);
    assert_eq!(t.t_end(), 0.0);
    assert_eq!(t.value(0, 0.3), 0.05);
}

#[test]
fn every_system_integrates_with_defaults() {
    for id in system_ids() {
        let sys = system(id);
        let m = run(&sys);
        assert!(m.trajectory.truncated_at.is_none(), "{id}");
        assert!(m.trajectory.max_step_error < MAX_STEP_ERROR);
        assert!(m.describe(&sys.default_init).contains(&format!("manifold {id}")));
    }
}

