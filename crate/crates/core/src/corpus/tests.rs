use super::*;
use crate::dsl::validate_spec;

fn default_cfg() -> SamplingConfig {
    SamplingConfig::default()
}

#[test]
fn twelve_families_with_unique_ids() {
    let ids: std::collections::BTreeSet<_> = list_families().iter().map(|f| f.id).collect();
    assert_eq!(ids.len(), 12);
}

#[test]
fn defaults_validate() {
    for f in list_families() {
        let s = instantiate_family(f.id, &Overrides::default()).unwrap();
        assert_eq!(s.dim(), f.dim);
        let r = validate_spec(&s, 64, 42).unwrap_or_else(|e| panic!("{}: {e}", f.id));
        assert_eq!(r.rejected_fraction(), 0.0, "{}", f.id);
    }
}

#[test]
fn export_reparses_to_same_hash() {
    for f in list_families() {
        let s = instantiate_family(f.id, &Overrides::default()).unwrap();
        let back = crate::dsl::parse_manifold(&export_family(f.id).unwrap()).unwrap();
        assert_eq!(back.spec_hash(), s.spec_hash(), "{}", f.id);
    }
}

#[test]
fn constraint_violations_are_reported() {
    let e = instantiate_family("rr-3d", &Overrides::default().param("m", 1.0)).unwrap_err();
    assert!(matches!(e, CorpusError::ParameterConstraintViolation(_)), "{e:?}");
    let e = instantiate_family("rr-3d", &Overrides::default().param("c3", 1.0)).unwrap_err();
    assert!(matches!(e, CorpusError::ParameterConstraintViolation(_)), "{e:?}");
    let e = instantiate_family("prs-3d", &Overrides::default().param("zz", 1.0)).unwrap_err();
    assert!(matches!(e, CorpusError::UnknownParameter { .. }));
    assert!(matches!(instantiate_family("nope", &Overrides::default()), Err(CorpusError::UnknownFamily(_))));
}

#[test]
fn overrides_parse() {
    let o = Overrides::parse("m=3, f=exp(2*x1)").unwrap();
    assert_eq!(o.params["m"], 3.0);
    assert_eq!(o.funcs["f"], "exp(2*x1)");
    assert!(Overrides::parse("m").is_err());
}

#[test]
fn cotton_fragment_relation() {
    assert!(cotton_3d_fragment_residual("exp(x)", 1.0, 3.0, 0.0, 1.0).unwrap() < 1e-12);
    assert!(cotton_3d_fragment_residual("1 + x^2", 0.5, 2.0, 0.1, 1.0).unwrap() < 1e-12);
}

fn verify(id: &str) {
    let t = std::time::Instant::now();
    let c = verify_family(id, &Overrides::default(), &default_cfg()).unwrap();
    eprintln!("{id}: {:?} in {:?}", c.extras, t.elapsed());
    for r in &c.reports {
        eprintln!("  {} {} {:.3e} {:?}", r.id, r.verdict, r.max_residual, r.notes);
    }
    assert!(c.passed(), "{id}: {:?}", c.mismatches);
}

macro_rules! family_tests {
    ($($name:ident => $id:literal),* $(,)?) => {
        $(#[test] fn $name() { verify($id); })*
    };
}

family_tests! {
    verify_rr_3d => "rr-3d",
    verify_prs_3d => "prs-3d",
    verify_qe1_3d => "qe1-3d",
    verify_qe2_3d => "qe2-3d",
    verify_prs_4d1_b1 => "prs-4d1-b1",
    verify_prs_4d1_b2 => "prs-4d1-b2",
    verify_co_4d1 => "co-4d1",
    verify_qe1_4d1_f => "qe1-4d1-f",
    verify_rr_4d2 => "rr-4d2",
    verify_prs_4d2 => "prs-4d2",
    verify_qe2_4d2 => "qe2-4d2",
    verify_qe2_4d3 => "qe2-4d3",
}

#[test]
fn parameter_overrides_keep_verdicts() {
    let o = Overrides::default().param("m", 3.0).param("c3", 20.0);
    let c = verify_family("rr-3d", &o, &default_cfg()).unwrap();
    assert!(c.passed(), "{:?}", c.mismatches);
    let o = Overrides::default().func("f", "x1^2 + 1");
    let c = verify_family("prs-3d", &o, &default_cfg()).unwrap();
    assert!(c.passed(), "{:?}", c.mismatches);
}
