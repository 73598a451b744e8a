use super::*;
use crate::dsl::parse_manifold;
use crate::geometry::GeometryEvaluator;
use crate::tensor::curvature_pack;
use crate::testutil::{cubic_perturbation, sample};

#[test]
fn schouten_rejects_dimension_two() {
    let s = parse_manifold("dim 2\ncoords t p\nmetric diag: 1, sin(t)^2\n").unwrap();
    let p = GeometryEvaluator::new(&s).unwrap().at(&[1.0, 0.2]).unwrap().unwrap();
    assert_eq!(schouten(&p), Err(ClassicalError::DimensionTooLow(2)));
    let pack = curvature_pack(&s).unwrap();
    assert!(matches!(schouten_cotton(&pack), Err(TensorError::DimensionTooLow(2))));
}

#[test]
fn three_sphere_is_conformally_flat() {
    let s = parse_manifold(
        "dim 3\ncoords a b c\ndomain a in [0.3, 1.2]\ndomain b in [0.3, 1.2]\ndomain c in [0, 1]\n\
         metric diag: 1, sin(a)^2, sin(a)^2*sin(b)^2\n",
    )
    .unwrap();
    let ev = GeometryEvaluator::new(&s).unwrap();
    for x in sample(&s, 5, 2) {
        let p = ev.at(&x).unwrap().unwrap();
        let cp = classical_at(&p).unwrap();
        assert!(cp.cotton.iter().all(|c| c.normalized() < 1e-12));
        assert!(cp.weyl.iter().all(|w| *w == 0.0));
        // S = g/2 on the unit 3-sphere
        for (sij, gij) in cp.schouten.iter().zip(p.g.as_slice()) {
            assert!((sij - 0.5 * gij).abs() < 1e-12);
        }
    }
}

#[test]
fn divergence_of_weyl_matches_cotton() {
    let warped = parse_manifold(
        "dim 4\ncoords x1 x2 x3 x4\ndomain x1 in [-1, 1]\ndomain x2 in [-1, 1]\ndomain x3 in [-1, 1]\n\
         domain x4 in [-1, 1]\nmetric diag: 1, exp(x1), exp(2*x1), 1\n",
    )
    .unwrap();
    for s in [warped, cubic_perturbation(4, 21), cubic_perturbation(4, 22)] {
        let ev = GeometryEvaluator::new(&s).unwrap();
        for x in sample(&s, 6, 5) {
            let p = ev.at(&x).unwrap().unwrap();
            assert!(div_weyl_residual(&p).unwrap() < 1e-10);
        }
    }
}

#[test]
fn weyl_is_traceless_and_matches_symbolic() {
    let s = cubic_perturbation(4, 31);
    let pack = curvature_pack(&s).unwrap();
    let w = weyl_symbolic(&pack);
    let (_, c) = schouten_cotton(&pack).unwrap();
    let ev = GeometryEvaluator::new(&s).unwrap();
    let n = 4;
    for x in sample(&s, 3, 7) {
        let p = ev.at(&x).unwrap().unwrap();
        let b = s.bindings(&x).unwrap();
        let cp = classical_at(&p).unwrap();
        for (k, v) in w.eval(&b).unwrap().into_iter().enumerate() {
            assert!((v - cp.weyl[k]).abs() < 1e-9 * (1.0 + v.abs()));
        }
        for (k, v) in c.eval(&b).unwrap().into_iter().enumerate() {
            assert!((v - cp.cotton[k].sum).abs() < 1e-9 * (1.0 + cp.cotton[k].scale));
        }
        for i in 0..n {
            for j in 0..n {
                let mut acc = Acc::new();
                for h in 0..n {
                    for k in 0..n {
                        acc.push(p.ginv[(h, k)] * cp.weyl[((h * n + i) * n + j) * n + k]);
                    }
                }
                assert!(acc.normalized() < 1e-12);
            }
        }
    }
}

#[test]
fn bianchi_operator_vanishes_on_ricci() {
    let s = cubic_perturbation(4, 41);
    let ev = GeometryEvaluator::new(&s).unwrap();
    for x in sample(&s, 5, 9) {
        let p = ev.at(&x).unwrap().unwrap();
        let b = bianchi_operator(&p, p.ricci.as_slice(), p.dricci()).unwrap();
        assert!(b.iter().all(|a| a.normalized() < 1e-10));
        let mut t = p.ricci.as_slice().to_vec();
        t[1] += 1.0;
        assert_eq!(bianchi_operator(&p, &t, p.dricci()).unwrap_err(), ClassicalError::NotSymmetric);
    }
}

