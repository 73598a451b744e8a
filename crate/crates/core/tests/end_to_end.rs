use std::collections::BTreeMap;

use riccikit::conditions::{classify, rr_check_sample, rr_structure_check, ConditionId, Verdict};
use riccikit::dsl::parse_manifold;
use riccikit::fd::{fd_sample, numeric_config};
use riccikit::identities::contracted_bianchi;
use riccikit::ode::RifOdeSystem;
use riccikit::sampling::SamplingConfig;

const SPHERE_TIMES_LINE: &str = "\
manifold s2xr
dim 3
coords th ph z
domain th in [0.3, 2.8]
metric diag: 1, sin(th)^2, 1
";

fn verdicts(text: &str) -> BTreeMap<ConditionId, Verdict> {
    let spec = parse_manifold(text).unwrap();
    classify(&spec, &SamplingConfig::default().with_points(20)).unwrap().into_iter().map(|r| (r.id, r.verdict)).collect()
}

#[test]
fn parallel_ricci_product() {
    // Ri = diag(1, sin²θ, 0) is parallel, so β = 0 and Q = 0
    let v = verdicts(SPHERE_TIMES_LINE);
    assert_eq!(v[&ConditionId::Rr], Verdict::Fails);
    assert_eq!(v[&ConditionId::Prs], Verdict::Fails);
    assert_eq!(v[&ConditionId::Co], Verdict::Holds);
    assert_eq!(v[&ConditionId::Qe1], Verdict::Holds);
}

#[test]
fn numeric_recurrent_metric_has_split_spectrum() {
    let sys = RifOdeSystem::builtin("rr-4d3", &BTreeMap::new()).unwrap();
    let m = sys.integrate(&sys.default_init, sys.default_range, sys.default_step).unwrap();
    let cfg = numeric_config().with_points(12).with_seed(3);
    let sample = fd_sample(&m, &cfg, None).unwrap();
    let rr = rr_check_sample(&sample, &cfg).unwrap();
    assert_eq!(rr.verdict, Verdict::Holds, "{rr:?}");
    let st = rr_structure_check(&rr, &sample, &cfg).unwrap();
    assert!(st.points > 0);
    assert!(st.eigen < 1e-5, "{st:?}");
}

#[test]
fn assembled_metrics_satisfy_contracted_bianchi() {
    for id in ["qe1-4d1", "qe1-4d2", "qe2-4d1"] {
        let sys = RifOdeSystem::builtin(id, &BTreeMap::new()).unwrap();
        let m = sys.integrate(&sys.default_init, sys.default_range, sys.default_step).unwrap();
        let sample = fd_sample(&m, &numeric_config().with_points(8), None).unwrap();
        assert!(!sample.points.is_empty());
        for p in &sample.points {
            let r = contracted_bianchi(p);
            assert!(r < numeric_config().tol, "{id}: {r:e}");
        }
    }
}
