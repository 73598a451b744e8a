use super::*;
use crate::conditions::{classify_sample, geometry_sample, Verdict};
use crate::corpus::{instantiate_family, list_families, Overrides};
use crate::dsl::parse_manifold;
use crate::geometry::GeometryEvaluator;
use crate::testutil::{cubic_perturbation, sample};

fn sphere2() -> ManifoldSpec {
    parse_manifold("dim 2\ncoords t p\ndomain t in [0.2, 2.9]\ndomain p in [-3, 3]\nmetric diag: 1, sin(t)^2\n").unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

#[test]
fn flat_metric_has_no_curvature() {
    let s = parse_manifold("dim 3\ncoords x y z\nmetric diag: 1, 1, 1\n").unwrap();
    let f = SpecField::new(&s).unwrap();
    let p = fd_curvature_oracle(&f, &[0.1, -0.2, 0.3], None).unwrap();
    assert!(p.riemann.iter().chain(p.ricci.as_slice()).all(|v| v.abs() < 1e-10));
    assert!(p.sc.abs() < 1e-10);
}

#[test]
fn round_sphere() {
    let f = SpecField::new(&sphere2()).unwrap();
    let p = fd_curvature_oracle(&f, &[1.0, 0.0], None).unwrap();
    assert!((p.ricci[(0, 0)] - 1.0).abs() < 1e-6);
    assert!((p.sc - 2.0).abs() < 1e-6);
    let t = std::f64::consts::FRAC_PI_3;
    let p = fd_curvature_oracle(&f, &[t, 0.5], None).unwrap();
    assert!((p.ricci[(1, 1)] - 0.75).abs() < 1e-6);
    // Γ^t_{pp} = −sin t cos t
    assert!((p.christoffel[3] + t.sin() * t.cos()).abs() < 1e-6);
}

#[test]
fn stencil_must_fit_in_domain() {
    let f = SpecField::new(&sphere2()).unwrap();
    let e = fd_curvature_oracle(&f, &[0.2001, 0.0], Some(1e-3)).unwrap_err();
    assert!(matches!(e, FdError::BoundaryTooClose { coord: 0, .. }), "{e:?}");
    assert!(fd_curvature_oracle(&f, &[0.2021, 0.0], Some(1e-3)).is_ok());
    assert!(matches!(fd_geometry(&f, &[0.215, 0.0], Some(1e-3)), Err(FdError::BoundaryTooClose { .. })));
}

#[test]
fn agrees_with_exact_jets_on_perturbations() {
    for (n, seed) in [(3, 1), (4, 2)] {
        let mut s = cubic_perturbation(n, seed);
        s.lambda = Some(crate::dsl::parse_expression(&s, "x1*x2 + exp(x2)*x1^2").unwrap());
        let ev = GeometryEvaluator::new(&s).unwrap();
        let f = SpecField::new(&s).unwrap();
        for x in sample(&s, 5, seed).iter().map(|x| x.iter().map(|v| v * 0.8).collect::<Vec<_>>()) {
            let exact = ev.at(&x).unwrap().unwrap();
            let p = fd_geometry(&f, &x, None).unwrap();
            for (a, b) in p.ricci.as_slice().iter().zip(exact.ricci.as_slice()) {
                assert!(rel(*a, *b) < 1e-6, "ricci {a} vs {b}");
            }
            for (a, b) in p.dricci().iter().zip(exact.dricci()) {
                assert!(rel(*a, *b) < 1e-4, "dricci {a} vs {b}");
            }
            for (a, b) in p.dsc().iter().zip(exact.dsc()) {
                assert!(rel(*a, *b) < 1e-4, "dsc {a} vs {b}");
            }
            let (l, m) = (p.lambda.unwrap(), exact.lambda.unwrap());
            for (a, b) in l.hess.as_slice().iter().zip(m.hess.as_slice()) {
                assert!(rel(*a, *b) < 1e-6);
            }
            for (a, b) in l.dhess.unwrap().iter().zip(&m.dhess.unwrap()) {
                assert!(rel(*a, *b) < 1e-4, "dhess {a} vs {b}");
            }
        }
    }
}

#[test]
fn corpus_ricci_matches_oracle() {
    let cfg = SamplingConfig::default().with_points(20);
    for fam in list_families() {
        let s = instantiate_family(fam.id, &Overrides::default()).unwrap();
        let f = SpecField::new(&s).unwrap();
        let sample = geometry_sample(&s, &cfg).unwrap();
        for p in &sample.points {
            let Ok(q) = fd_curvature_oracle(&f, &p.point, None) else { continue };
            for (a, b) in q.ricci.as_slice().iter().zip(p.ricci.as_slice()) {
                assert!(rel(*a, *b) < 1e-5, "{}: {a} vs {b}", fam.id);
            }
        }
    }
}

#[test]
fn numeric_pipeline_reproduces_corpus_verdicts() {
    let cfg = numeric_config().with_points(20);
    for fam in list_families() {
        let id = fam.id;
        let s = instantiate_family(id, &Overrides::default()).unwrap();
        let exact = classify_sample(&geometry_sample(&s, &cfg).unwrap(), &cfg).unwrap();
        let f = SpecField::new(&s).unwrap();
        let numeric = classify_sample(&fd_sample(&f, &cfg, None).unwrap(), &cfg).unwrap();
        for (a, b) in exact.iter().zip(&numeric) {
            assert_eq!(a.verdict, b.verdict, "{id} {}: {a:?} {b:?}", a.id);
            if b.verdict == Verdict::Holds {
                assert!(b.max_residual < 1e-5, "{id} {}: {:.3e}", a.id, b.max_residual);
            }
        }
    }
}

