use super::*;
use crate::dsl::parse_manifold;
use crate::expr::{ZeroTest, ZeroVerdict};

fn sphere2() -> ManifoldSpec {
    parse_manifold("manifold s2\ndim 2\ncoords th ph\ndomain th in [0.3, 2.8]\nmetric diag: 1, sin(th)^2\n").unwrap()
}

fn rr3d() -> ManifoldSpec {
    parse_manifold(
        "manifold rr\ndim 3\ncoords x1 x2 x3\ndomain x2 in [0.1, 1.9]\nconst m = 2\nconst c1 = 1\nconst c2 = 1\nconst c3 = 8\n\
         func f(x1) = exp(x1)\nfunc h(x2) = x2\n\
         metric diag: c2*diff(f(x1), x1)^2/f(x1), m^2*c2*f(x1)*diff(h(x2), x2)^2/(h(x2)*(c2*c3 - m^2*h(x2))), c1*f(x1)^m*h(x2)^m\n",
    )
    .unwrap()
}

fn zero_on(s: &ManifoldSpec, e: &Expr) -> bool {
    let mut zt = ZeroTest::new(s.coords.iter().copied().zip(s.domain.iter()).map(|(c, (lo, hi))| (c, *lo, *hi)).collect());
    zt.consts = s.const_values().unwrap();
    zt.check(e).unwrap().1 != ZeroVerdict::Nonzero
}

#[test]
fn calibration_is_positive_on_sphere() {
    assert_eq!(ricci_sign(), 1);
}

#[test]
fn euclidean_is_flat() {
    let s = parse_manifold("dim 3\ncoords x y z\nmetric diag: 1, 1, 1\n").unwrap();
    let p = curvature_pack(&s).unwrap();
    assert!(p.christoffel.components().iter().all(Expr::is_zero));
    assert!(p.riemann.components().iter().all(Expr::is_zero));
    assert!(p.ricci.components().iter().all(Expr::is_zero));
    assert!(p.scalar.is_zero());
}

#[test]
fn round_sphere() {
    let s = sphere2();
    let p = curvature_pack(&s).unwrap();
    let th = Expr::var("th");
    assert!(zero_on(&s, &(p.christoffel.get(&[0, 1, 1]) + th.sin() * th.cos())));
    for i in 0..2 {
        for j in 0..2 {
            assert!(zero_on(&s, &(p.ricci.get(&[i, j]) - p.metric.get(&[i, j]))));
        }
    }
    assert!(zero_on(&s, &(&p.scalar - 2)));
    let b = s.bindings(&[std::f64::consts::FRAC_PI_3, 0.0]).unwrap();
    assert!((p.ricci.get(&[1, 1]).eval(&b).unwrap() - 0.75).abs() < 1e-14);
}

#[test]
fn lowered_riemann_symmetries() {
    let s = rr3d();
    let p = curvature_pack(&s).unwrap();
    for ix in multi_indices(3, 4) {
        let (h, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
        let r = p.riemann_lowered.get(&[h, i, j, k]);
        assert!(zero_on(&s, &(r + p.riemann_lowered.get(&[i, h, j, k]))));
        assert!(zero_on(&s, &(r + p.riemann_lowered.get(&[h, i, k, j]))));
        assert!(zero_on(&s, &(r - p.riemann_lowered.get(&[j, k, h, i]))));
    }
}

#[test]
fn prs_family_ricci_matches_closed_form() {
    let s = parse_manifold(
        "dim 4\ncoords x1 x2 x3 x4\ndomain x1 in [0.5, 2]\ndomain x4 in [0, 1]\n\
         func f(x1) = x1^2\nfunc q(x4) = 1/(x4 + 1)^2\n\
         metric diag: 1, f(x1)*q(x4), f(x1)*q(x4), f(x1)*q(x4)\n",
    )
    .unwrap();
    let p = curvature_pack(&s).unwrap();
    let x4 = Expr::var("x4");
    let expected = -4 * (x4 + 1).powi(-2);
    for i in 0..4 {
        for j in 0..4 {
            let e = if i == j && i > 0 { expected.clone() } else { Expr::zero() };
            assert!(zero_on(&s, &(p.ricci.get(&[i, j]) - e)), "Ri[{i}][{j}] = {}", p.ricci.get(&[i, j]));
        }
    }
    let b = s.bindings(&[2.0, 0.0, 0.0, 1.0]).unwrap();
    assert!((p.ricci.get(&[1, 1]).eval(&b).unwrap() + 1.0).abs() < 1e-14);
}

#[test]
fn metric_is_parallel() {
    let s = sphere2();
    let p = curvature_pack(&s).unwrap();
    let dg = covariant_derivative(&p.metric, &p);
    assert_eq!(dg.components().len(), 8);
    assert!(dg.components().iter().all(|c| zero_on(&s, c)));
    let sc = TensorField::scalar(Expr::var("th").powi(2), 2);
    let d = covariant_derivative(&sc, &p);
    assert_eq!(d.get(&[0]), &(2 * Expr::var("th")));
}

#[test]
fn ricci_identity_for_one_form() {
    let s = sphere2();
    let p = curvature_pack(&s).unwrap();
    let omega = TensorField::from_fn(2, vec![Slot::Down], |ix| if ix[0] == 0 { Expr::one() } else { Expr::zero() });
    let d2 = covariant_derivative(&covariant_derivative(&omega, &p), &p);
    for ix in multi_indices(2, 3) {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        let lhs = d2.get(&[k, i, j]) - d2.get(&[k, j, i]);
        let rhs = Expr::add_all((0..2).map(|l| omega.get(&[l]) * p.riemann.get(&[l, i, j, k])));
        assert!(zero_on(&s, &(lhs - rhs)));
    }
}

#[test]
fn metric_algebra() {
    let s = rr3d();
    let p = curvature_pack(&s).unwrap();
    assert!(zero_on(&s, &(norm_squared(&p.metric, &p) - 3)));
    let tr = trace(&p.ricci, 0, 1, &p).unwrap();
    assert!(zero_on(&s, &(tr.get(&[]) - &p.scalar)));
    let up = raise(&p.ricci, 0, &p).unwrap();
    let back = lower(&up, 0, &p).unwrap();
    for ix in multi_indices(3, 2) {
        assert!(zero_on(&s, &(back.get(&ix) - p.ricci.get(&ix))));
    }
    let b = s.bindings(&[0.0, 1.0, 0.5]).unwrap();
    assert!((norm_squared(&p.ricci, &p).eval(&b).unwrap() - 2.0).abs() < 1e-12);
    assert!(matches!(raise(&up, 0, &p), Err(TensorError::WrongVariance)));
    assert!(matches!(trace(&p.ricci, 0, 2, &p), Err(TensorError::IndexOutOfRange(2))));
}

#[test]
fn non_diagonal_inverse() {
    let s = parse_manifold("dim 2\ncoords x y\nmetric g[1][1] = 2 + x^2\nmetric g[1][2] = x*y/4\nmetric g[2][2] = 1 + y^2\n").unwrap();
    let p = curvature_pack(&s).unwrap();
    let b = s.bindings(&[0.3, -0.4]).unwrap();
    let g = s.metric_at(&[0.3, -0.4]).unwrap();
    let inv = g.inverse().unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((p.inverse.get(&[i, j]).eval(&b).unwrap() - inv[(i, j)]).abs() < 1e-14);
        }
    }
    // Gaussian curvature check: sc = 2K and Ri = K g in two dimensions.
    let k = &p.scalar / 2;
    for ix in multi_indices(2, 2) {
        assert!(zero_on(&s, &(p.ricci.get(&ix) - &k * p.metric.get(&ix))));
    }
}
