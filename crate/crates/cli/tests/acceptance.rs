//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use riccikit::classical::div_weyl_residual;
use riccikit::conditions::{
    classify, conformal_ricci, conformal_spec, geometry_sample, qe_rank_check, rr_check_sample, rr_structure_check, ConditionId,
    ConditionReport, Verdict,
};
use riccikit::corpus::{family, instantiate_family, list_families, random_perturbation, verify_family, Overrides};
use riccikit::dsl::{parse_expression, parse_manifold, DslError};
use riccikit::fd::{fd_curvature_oracle, numeric_config, verify_numeric_metric, SpecField};
use riccikit::identities::residuals;
use riccikit::ode::RifOdeSystem;
use riccikit::sampling::SamplingConfig;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spec(id: &str) -> riccikit::dsl::ManifoldSpec {
    instantiate_family(id, &Overrides::default()).unwrap()
}

fn report(reports: &[ConditionReport], id: ConditionId) -> &ConditionReport {
    reports.iter().find(|r| r.id == id).expect("condition evaluated")
}

fn riccikit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_riccikit"))
}

fn corpus_reproduction() -> Outcome {
    let start = Instant::now();
    let out = riccikit().args(["corpus", "verify", "all"]).output().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(out.status.code() == Some(0), || format!("exit {:?}\n{text}", out.status.code()))?;
    let passes = text.lines().filter(|l| l.split_whitespace().nth(1) == Some("PASS")).count();
    ensure(passes == 12, || format!("{passes} families passed\n{text}"))?;
    let cfg = SamplingConfig::default();
    for f in list_families() {
        let c = verify_family(f.id, &Overrides::default(), &cfg).map_err(|e| e.to_string())?;
        for r in c.reports.iter().filter(|r| r.verdict == Verdict::Holds) {
            ensure(r.max_residual < 1e-8 && r.points_used + r.points_skipped == 50, || format!("{} {}: {r:?}", f.id, r.id))?;
        }
    }
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("12/12 families in {:.2} s", elapsed.as_secs_f64()))
}

fn printed_formulas() -> Outcome {
    let cfg = SamplingConfig::default();
    // rr-3d: sc = (1 − m)c3/(2mfh) with the default f = e^x1, h = x2
    let s = spec("rr-3d");
    let printed = parse_expression(&s, "(1 - m)*c3/(2*m*exp(x1)*x2)").unwrap();
    let mut sc_dev = 0.0f64;
    for p in &geometry_sample(&s, &cfg).unwrap().points {
        let v = printed.eval(&s.bindings(&p.point).unwrap()).unwrap();
        sc_dev = sc_dev.max((p.sc - v).abs() / (1.0 + v.abs()));
    }
    ensure(sc_dev < 1e-12, || format!("rr-3d sc deviates by {sc_dev:e}"))?;

    // prs-4d1-b1: every Ricci component, relative
    let s = spec("prs-4d1-b1");
    let desc = family("prs-4d1-b1").unwrap();
    let n = s.dim();
    let mut table = vec![vec![None; n]; n];
    for (i, j, t) in desc.extras.ricci {
        table[*i][*j] = Some(parse_expression(&s, t).unwrap());
    }
    let mut ri_dev = 0.0f64;
    let sample = geometry_sample(&s, &cfg).unwrap();
    for p in &sample.points {
        let b = s.bindings(&p.point).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = table[i][j].as_ref().or(table[j][i].as_ref()).map_or(0.0, |e| e.eval(&b).unwrap());
                let got = p.ricci[(i, j)];
                let dev = if want == 0.0 { got.abs() } else { (got - want).abs() / want.abs() };
                ri_dev = ri_dev.max(dev);
            }
        }
    }
    ensure(sample.points.len() == 50, || "prs-4d1-b1 sample incomplete".into())?;
    ensure(ri_dev < 1e-12, || format!("prs-4d1-b1 Ricci deviates by {ri_dev:e}"))?;

    // prs-4d2: Ri44 = −c3(m + 1)²/(2c1c2m²) = −2 at the defaults
    let s = spec("prs-4d2");
    let mut r44 = 0.0f64;
    for p in &geometry_sample(&s, &cfg).unwrap().points {
        r44 = r44.max((p.ricci[(3, 3)] + 2.0).abs() / 2.0);
    }
    ensure(r44 < 1e-10, || format!("prs-4d2 Ri44 deviates by {r44:e}"))?;
    Ok(format!("sc {sc_dev:.1e}, Ri {ri_dev:.1e}, Ri44 {r44:.1e}"))
}

fn recurrent_structure() -> Outcome {
    let cfg = SamplingConfig::default();
    let sample = geometry_sample(&spec("rr-3d"), &cfg).unwrap();
    let rr = rr_check_sample(&sample, &cfg).unwrap();
    let st = rr_structure_check(&rr, &sample, &cfg).map_err(|e| e.to_string())?;
    ensure(st.points == 50, || format!("{} points", st.points))?;
    ensure(st.eigen < 1e-8, || format!("eigenvalues off by {:e}", st.eigen))?;
    ensure(st.scalar_norm < 1e-9, || format!("sc² vs 2|Ri|²: {:e}", st.scalar_norm))?;
    ensure(st.ricci_beta < 1e-9, || format!("Ri·β vs (sc/2)β: {:e}", st.ricci_beta))?;
    ensure(st.ricci_square < 1e-9, || format!("Ri² vs ½sc·Ri: {:e}", st.ricci_square))?;
    Ok(format!("worst {:.1e}", st.max()))
}

fn pseudo_symmetric_alpha() -> Outcome {
    let cfg = SamplingConfig::default();
    let mut worst = (0.0f64, 0.0f64);
    for id in ["prs-4d1-b1", "prs-4d2"] {
        let r = classify(&spec(id), &cfg).unwrap();
        let prs = report(&r, ConditionId::Prs);
        ensure(prs.verdict == Verdict::Holds, || format!("{id} PRS {}", prs.verdict))?;
        let rec = prs.recovered.as_ref().unwrap();
        let ra = rec.check("ricci_alpha").unwrap();
        let asc = rec.check("alpha_vs_half_dlog_sc").unwrap();
        ensure(ra < 1e-9, || format!("{id} |Ri·α| ratio {ra:e}"))?;
        ensure(asc < 1e-9, || format!("{id} α vs ½∇ln sc {asc:e}"))?;
        worst = (worst.0.max(ra), worst.1.max(asc));
    }
    Ok(format!("Ri·α {:.1e}, α vs ½∇ln sc {:.1e}", worst.0, worst.1))
}

fn exclusions() -> Outcome {
    let cfg = SamplingConfig::default();
    let r = classify(&spec("rr-3d"), &cfg).unwrap();
    ensure(report(&r, ConditionId::Prs).verdict == Verdict::Fails, || "rr-3d PRS does not fail".into())?;
    let co = report(&r, ConditionId::Co);
    ensure(co.verdict == Verdict::Fails && co.max_residual > 1e-3, || format!("rr-3d CO {co:?}"))?;
    ensure(report(&r, ConditionId::Qe1).verdict == Verdict::Holds, || "rr-3d QE1 does not hold".into())?;
    for f in list_families() {
        let r = classify(&spec(f.id), &cfg).unwrap();
        let both = report(&r, ConditionId::Rr).verdict == Verdict::Holds && report(&r, ConditionId::Prs).verdict == Verdict::Holds;
        ensure(!both, || format!("{} holds RR and PRS", f.id))?;
    }
    Ok(format!("rr-3d Cotton residual {:.2e}", co.max_residual))
}

fn prs_chain() -> Outcome {
    let r = classify(&spec("prs-3d"), &SamplingConfig::default()).unwrap();
    for id in [ConditionId::Prs, ConditionId::Qe1, ConditionId::Co] {
        ensure(report(&r, id).verdict == Verdict::Holds, || format!("prs-3d {id} {}", report(&r, id).verdict))?;
    }
    let a = report(&r, ConditionId::Qe1).recovered.as_ref().and_then(|r| r.a.clone()).unwrap();
    let min_a = a.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    ensure(min_a > 1e-6, || format!("a vanishes ({min_a:e})"))?;
    Ok(format!("min |a| {min_a:.3}"))
}

fn identities() -> Outcome {
    let cfg = SamplingConfig::default().with_points(20);
    let mut specs: Vec<_> = list_families().iter().map(|f| spec(f.id)).collect();
    for seed in 0..10 {
        specs.push(random_perturbation(3, seed));
        specs.push(random_perturbation(4, 100 + seed));
    }
    let (mut cb, mut sb, mut dw) = (0.0f64, 0.0f64, 0.0f64);
    for s in &specs {
        for p in &geometry_sample(s, &cfg).unwrap().points {
            let r = residuals(p);
            cb = cb.max(r.contracted_bianchi);
            sb = sb.max(r.second_bianchi);
            if p.n == 4 {
                dw = dw.max(div_weyl_residual(p).unwrap());
            }
        }
    }
    ensure(cb < 1e-8 && sb < 1e-8 && dw < 1e-8, || format!("contracted {cb:e}, second {sb:e}, div W {dw:e}"))?;
    Ok(format!("{} specs: contracted {cb:.1e}, second {sb:.1e}, div W {dw:.1e}", specs.len()))
}

fn oracle_agreement() -> Outcome {
    let cfg = SamplingConfig::default().with_points(20);
    let mut worst = 0.0f64;
    for f in list_families() {
        let s = spec(f.id);
        let field = SpecField::new(&s).unwrap();
        let mut used = 0;
        for p in &geometry_sample(&s, &cfg).unwrap().points {
            let Ok(q) = fd_curvature_oracle(&field, &p.point, None) else { continue };
            used += 1;
            for (a, b) in q.ricci.as_slice().iter().zip(p.ricci.as_slice()) {
                worst = worst.max((a - b).abs() / (1.0 + b.abs()));
            }
        }
        ensure(used >= 18, || format!("{}: only {used} interior points", f.id))?;
    }
    ensure(worst < 1e-5, || format!("deviation {worst:e}"))?;
    Ok(format!("worst {worst:.1e}"))
}

fn ode_pipeline() -> Outcome {
    let none = BTreeMap::new();
    let qe1 = RifOdeSystem::builtin("qe1-4d1", &none).map_err(|e| e.to_string())?;
    let coarse = qe1.integrate(&[1.0, 0.3], (0.0, 1.0), 1e-3).map_err(|e| e.to_string())?;
    let fine = qe1.trajectory(&[1.0, 0.3], (0.0, 1.0), 5e-4).map_err(|e| e.to_string())?;
    let (dc, df) = (coarse.trajectory.drift.unwrap(), fine.drift.unwrap());
    ensure(dc < 1e-8, || format!("drift {dc:e}"))?;
    ensure(dc / df >= 8.0, || format!("halving ratio {}", dc / df))?;
    let cfg = numeric_config().with_points(20);
    let r = verify_numeric_metric(&coarse, ConditionId::Qe1, &cfg).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Holds, || format!("qe1-4d1 QE1 {r:?}"))?;
    let qe2 = RifOdeSystem::builtin("qe2-4d1", &none).map_err(|e| e.to_string())?;
    let m = qe2.integrate(&[1.0, 0.0, 0.0, 0.0], (0.0, 0.5), 1e-3).map_err(|e| e.to_string())?;
    let mut worst = r.max_residual;
    for id in [ConditionId::Qe2, ConditionId::Co] {
        let r = verify_numeric_metric(&m, id, &cfg).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Holds, || format!("qe2-4d1 {id} {r:?}"))?;
        worst = worst.max(r.max_residual);
    }
    Ok(format!("drift {dc:.1e}, ratio {:.1}, worst numeric residual {worst:.1e}", dc / df))
}

fn conformal_construction() -> Outcome {
    let cfg = SamplingConfig::default();
    let mut diff = 0.0f64;
    for id in ["qe2-3d", "qe2-4d3"] {
        let s = spec(id);
        let c = conformal_ricci(&s, &cfg).map_err(|e| e.to_string())?;
        ensure(c.points > 0 && c.max_difference < 1e-9, || format!("{id}: {} points, difference {:e}", c.points, c.max_difference))?;
        diff = diff.max(c.max_difference);
        let hat = conformal_spec(&s).unwrap();
        let r = qe_rank_check(&hat, &cfg).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Holds, || format!("{id} conformal QE1 {r:?}"))?;
        let sample = geometry_sample(&hat, &cfg.clone().with_points(10)).unwrap();
        for p in &sample.points {
            let l = p.lambda.as_ref().unwrap();
            ensure(p.ricci.max_abs() > 1e-6, || format!("{id}: conformal Ricci vanishes"))?;
            ensure(l.grad.iter().any(|v| v.abs() > 1e-6), || format!("{id}: ∇λ vanishes"))?;
        }
    }
    Ok(format!("formula vs direct {diff:.1e}"))
}

fn parser() -> Outcome {
    for f in list_families() {
        let text = riccikit::corpus::export_family(f.id).unwrap();
        let once = parse_manifold(&text).map_err(|e| format!("{}: {e}", f.id))?;
        let twice = parse_manifold(&once.pretty()).map_err(|e| format!("{}: {e}", f.id))?;
        ensure(once.pretty() == twice.pretty() && once.spec_hash() == twice.spec_hash(), || format!("{} not stable", f.id))?;
    }
    let head = "manifold t\ndim 2\ncoords x y\n";
    let cases = [
        (format!("{head}metric diag: 1, (x +\n"), "syntax"),
        (format!("{head}metric diag: 1, z^2\n"), "undeclared"),
        (format!("{head}metric diag: 1, 1, 1\n"), "dimension"),
    ];
    for (text, kind) in &cases {
        let e = parse_manifold(text).err().ok_or_else(|| format!("{kind} case parsed"))?;
        let ok = matches!(
            (&e, *kind),
            (DslError::Syntax { .. }, "syntax") | (DslError::UndeclaredSymbol { .. }, "undeclared") | (DslError::DimensionMismatch { .. }, "dimension")
        );
        ensure(ok && e.position().0 == 4, || format!("{kind}: {e:?}"))?;
    }
    Ok("12 exports stable, 3 error classes located".into())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rfm = dir.path().join("rr-3d.rfm");
    std::fs::write(&rfm, riccikit::corpus::export_family("rr-3d").unwrap()).unwrap();
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let st = riccikit()
            .arg("check")
            .arg(&rfm)
            .args(["--condition", "classify", "--json"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(st.status.success(), || String::from_utf8_lossy(&st.stderr).into_owned())?;
        std::fs::read(&out).map_err(|e| e.to_string())
    };
    let (a, b) = (run("a.json")?, run("b.json")?);
    ensure(a == b, || "reports differ".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("corpus reproduction", corpus_reproduction),
        ("printed formulas", printed_formulas),
        ("recurrent Ricci structure", recurrent_structure),
        ("pseudo Ricci symmetric one-form", pseudo_symmetric_alpha),
        ("exclusions", exclusions),
        ("PRS, QE1 and CO together", prs_chain),
        ("universal identities", identities),
        ("oracle agreement", oracle_agreement),
        ("ODE pipeline", ode_pipeline),
        ("conformal construction", conformal_construction),
        ("parser", parser),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
