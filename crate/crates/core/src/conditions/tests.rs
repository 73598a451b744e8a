use proptest::prelude::*;

use super::*;
use crate::corpus::{instantiate_family, Overrides};
use crate::dsl::parse_manifold;
use crate::expr::Expr;
use crate::testutil::cubic_perturbation;

fn cfg() -> SamplingConfig {
    SamplingConfig::default()
}

fn sphere3() -> ManifoldSpec {
    parse_manifold(
        "dim 3\ncoords a b c\ndomain a in [0.3, 1.2]\ndomain b in [0.3, 1.2]\ndomain c in [0, 1]\n\
         metric diag: 1, sin(a)^2, sin(a)^2*sin(b)^2\n",
    )
    .unwrap()
}

fn flat3() -> ManifoldSpec {
    parse_manifold("dim 3\ncoords x1 x2 x3\nlambda = x1\nmetric diag: 1, 1, 1\n").unwrap()
}

fn report(reports: &[ConditionReport], id: ConditionId) -> &ConditionReport {
    reports.iter().find(|r| r.id == id).unwrap()
}

fn family(id: &str) -> ManifoldSpec {
    instantiate_family(id, &Overrides::default()).unwrap()
}

#[test]
fn three_sphere_verdicts() {
    let reports = classify(&sphere3(), &cfg()).unwrap();
    assert_eq!(reports.len(), 4, "QE2 needs a potential");
    let rr = report(&reports, ConditionId::Rr);
    assert_eq!(rr.verdict, Verdict::Fails);
    assert!(rr.max_residual < 1e-10);
    assert!(rr.notes.iter().any(|n| n == "beta vanishes"));
    assert_eq!(report(&reports, ConditionId::Prs).verdict, Verdict::Fails);
    assert_eq!(report(&reports, ConditionId::Co).verdict, Verdict::Holds);
    let qe = report(&reports, ConditionId::Qe1);
    assert_eq!(qe.verdict, Verdict::Fails);
    assert!(qe.notes.iter().any(|n| n.starts_with("Einstein")));
}

#[test]
fn flat_metric_has_vanishing_ricci() {
    let s = flat3();
    let sample = geometry_sample(&s, &cfg()).unwrap();
    assert_eq!(rr_check_sample(&sample, &cfg()), Err(ConditionError::RicciVanishes));
    assert_eq!(prs_check_sample(&sample, &cfg()), Err(ConditionError::RicciVanishes));
    let r = run_on_sample(ConditionId::Qe1, &sample, &cfg()).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    assert_eq!(r.notes, vec!["Ricci tensor vanishes".to_string()]);
    let q = qe_hessian_check(&s, &cfg()).unwrap();
    assert_eq!(q.verdict, Verdict::Holds);
}

#[test]
fn precondition_errors() {
    let s2 = parse_manifold("dim 2\ncoords t p\ndomain t in [0.3, 1.2]\nmetric diag: 1, sin(t)^2\n").unwrap();
    assert_eq!(cotton_check(&s2, &cfg()), Err(ConditionError::DimensionTooLow(2)));
    assert_eq!(qe_hessian_check(&sphere3(), &cfg()), Err(ConditionError::MissingLambda));
    let reports = classify(&s2, &cfg()).unwrap();
    assert!(reports.iter().all(|r| r.id != ConditionId::Co));
    // every 2D metric is Einstein
    assert_eq!(report(&reports, ConditionId::Qe1).verdict, Verdict::Fails);
}

#[test]
fn rank_codimension() {
    assert_eq!(sym_rank_codim(3, 1), Ok(3));
    assert_eq!(sym_rank_codim(4, 1), Ok(6));
    assert_eq!(sym_rank_codim(4, 2), Ok(3));
    for n in 1..8 {
        assert_eq!(sym_rank_codim(n, n), Ok(0));
    }
    assert_eq!(sym_rank_codim(3, 4), Err(ConditionError::InvalidRank { n: 3, r: 4 }));
}

#[test]
fn conformal_ricci_formula() {
    let c = conformal_ricci(&flat3(), &cfg()).unwrap();
    assert_eq!(c.points, 50);
    assert!(c.max_difference < 1e-9, "{}", c.max_difference);
    let mut s = cubic_perturbation(3, 5);
    s.lambda = Some(crate::dsl::parse_expression(&s, "x1*x2 + sin(x3)").unwrap());
    let c = conformal_ricci(&s, &cfg().with_points(10)).unwrap();
    assert!(c.max_difference < 1e-9, "{}", c.max_difference);
    let mut s = flat3();
    s.lambda = Some(Expr::int(2));
    let c = conformal_ricci(&s, &cfg().with_points(10)).unwrap();
    assert!(c.max_difference < 1e-12);
    assert_eq!(conformal_ricci(&sphere3(), &cfg()).unwrap_err(), ConditionError::MissingLambda);
}

#[test]
fn reports_round_trip_through_json() {
    for r in classify(&family("qe1-3d"), &cfg().with_points(5)).unwrap() {
        let text = serde_json::to_string(&r).unwrap();
        let back: ConditionReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
    assert_eq!(serde_json::to_string(&ConditionId::Qe2).unwrap(), "\"QE2\"");
    assert_eq!(serde_json::to_string(&Verdict::Inconclusive).unwrap(), "\"inconclusive\"");
    assert_eq!("prs".parse::<ConditionId>(), Ok(ConditionId::Prs));
}

#[test]
fn verdicts_survive_constant_rescaling() {
    let s = family("rr-3d");
    let base = classify(&s, &cfg()).unwrap();
    for k in [Expr::int(3), Expr::rational(1, 4)] {
        let scaled = classify(&s.scaled(k), &cfg()).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert_eq!(a.verdict, b.verdict, "{}", a.id);
        }
    }
}

#[test]
fn ricci_recurrent_structure() {
    for id in ["rr-3d", "rr-4d2"] {
        let s = family(id);
        let sample = geometry_sample(&s, &cfg()).unwrap();
        let rr = rr_check_sample(&sample, &cfg()).unwrap();
        let st = rr_structure_check(&rr, &sample, &cfg()).unwrap();
        assert!(st.points > 0);
        assert!(st.max() < 1e-8, "{id}: {st:?}");
        let prs = prs_check_sample(&sample, &cfg()).unwrap();
        assert_eq!(rr_structure_check(&prs, &sample, &cfg()), Err(ConditionError::PreconditionNotRR));
        let notes = consistency_notes(&classify_sample(&sample, &cfg()).unwrap(), s.dim());
        assert!(!notes.is_empty() && notes.iter().all(|n| n.ends_with("consistent")), "{notes:?}");
    }
}

#[test]
fn pseudo_ricci_symmetric_recovery() {
    let r = prs_check(&family("prs-3d"), &cfg()).unwrap();
    let rec = r.recovered.unwrap();
    assert!(rec.check("ricci_alpha").unwrap() < 1e-8);
    assert_eq!(rec.alpha.unwrap().len(), r.points_used);
}

#[test]
fn quasi_einstein_with_zero_a_is_orthogonal_to_alpha() {
    let s = family("prs-4d2");
    let sample = geometry_sample(&s, &cfg()).unwrap();
    let qe = qe_rank_check_sample(&sample, &cfg()).unwrap();
    let prs = prs_check_sample(&sample, &cfg()).unwrap();
    let omega = qe.recovered.unwrap().omega.unwrap();
    let alpha = prs.recovered.unwrap().alpha.unwrap();
    for (o, a) in omega.iter().zip(&alpha) {
        assert_eq!(o.point, a.point);
        let p = sample.points.iter().find(|p| p.point == o.point).unwrap();
        assert!(p.form_dot(&o.value, &a.value).abs() < 1e-8);
    }
}

#[test]
fn generic_metrics_fail_everything() {
    let s = cubic_perturbation(3, 11);
    for r in classify(&s, &cfg().with_points(20)).unwrap() {
        assert_eq!(r.verdict, Verdict::Fails, "{}", r.id);
    }
}

proptest! {
    #[test]
    fn rank_one_perturbation_of_metric(
        a in -3.0f64..3.0,
        s in prop_oneof![-2.0f64..-0.1, 0.1f64..2.0],
        v in proptest::collection::vec(-1.0f64..1.0, 3),
        d in proptest::collection::vec(0.5f64..2.0, 3),
    ) {
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 0.05);
        let g = Mat::from_fn(3, |i, j| if i == j { d[i] } else { 0.0 });
        let ri = Mat::from_fn(3, |i, j| a * g[(i, j)] + s * v[i] * v[j]);
        prop_assert!(rank_one_residual(&ri, &g, a) < 1e-12);
        prop_assert!(rank_one_residual(&ri, &g, a + 0.5) > 1e-6);
    }
}
