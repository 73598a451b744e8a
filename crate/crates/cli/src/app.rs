//! Command implementations, independent of argument parsing.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use riccikit::classical::{cotton, schouten, weyl};
use riccikit::conditions::{classify_sample, consistency_notes, geometry_sample, run_on_sample, ConditionId, ConditionReport, Verdict};
use riccikit::corpus::{export_family, family, list_families, verify_family, Overrides};
use riccikit::dsl::{fingerprint, parse_manifold, validate_spec, ManifoldSpec};
use riccikit::fd::{numeric_config, verify_numeric_metric};
use riccikit::geometry::GeometryEvaluator;
use riccikit::ode::RifOdeSystem;
use riccikit::sampling::SamplingConfig;

use crate::report::ReportDocument;

/// Exit status of a command that ran to completion.
pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_MISMATCH: u8 = 2;

/// Which conditions a `check` run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    One(ConditionId),
    Classify,
}

impl FromStr for Selection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("classify") {
            Ok(Selection::Classify)
        } else {
            ConditionId::from_str(s).map(Selection::One)
        }
    }
}

/// Parse, then probe the spec for validity at seeded points.
pub fn load_spec(path: &Path) -> Result<ManifoldSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = parse_manifold(&text).with_context(|| format!("parsing {}", path.display()))?;
    validate_spec(&spec, 64, 7).with_context(|| format!("validating {}", path.display()))?;
    Ok(spec)
}

pub fn check(spec: &ManifoldSpec, sel: Selection, cfg: &SamplingConfig, timing: bool) -> Result<ReportDocument> {
    let start = Instant::now();
    let sample = geometry_sample(spec, cfg)?;
    let conditions = match sel {
        Selection::One(id) => vec![run_on_sample(id, &sample, cfg)?],
        Selection::Classify => {
            let mut reports = classify_sample(&sample, cfg)?;
            attach_consistency(&mut reports, spec.dim());
            reports
        }
    };
    let mut doc = ReportDocument::new(spec.spec_hash(), conditions);
    if timing {
        doc.timing_ms = (start.elapsed().as_millis() as u64).max(1);
    }
    Ok(doc)
}

/// Consistency notes concern RR, so they go on the RR entry.
fn attach_consistency(reports: &mut [ConditionReport], n: usize) {
    let notes = consistency_notes(reports, n);
    if let Some(rr) = reports.iter_mut().find(|r| r.id == ConditionId::Rr) {
        rr.notes.extend(notes);
    }
}

pub fn expectation_met(doc: &ReportDocument, expect: Verdict) -> bool {
    doc.conditions.iter().all(|r| r.verdict == expect)
}

/// "x1=0.5,x2=1" in coordinate order.
pub fn parse_point(spec: &ManifoldSpec, text: &str) -> Result<Vec<f64>> {
    let mut given = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| anyhow!("expected name=value, got '{part}'"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("bad value in '{part}'"))?;
        given.insert(k.trim().to_string(), v);
    }
    let point = spec
        .coords
        .iter()
        .map(|c| given.remove(&*c.name()).ok_or_else(|| anyhow!("missing coordinate {}", c.name())))
        .collect::<Result<Vec<_>>>()?;
    if let Some(extra) = given.keys().next() {
        bail!("'{extra}' is not a coordinate");
    }
    Ok(point)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Christoffel,
    Riemann,
    Ricci,
    Scalar,
    Schouten,
    Cotton,
    Weyl,
}

impl FromStr for TensorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "christoffel" => TensorKind::Christoffel,
            "riemann" => TensorKind::Riemann,
            "ricci" => TensorKind::Ricci,
            "scalar" => TensorKind::Scalar,
            "schouten" => TensorKind::Schouten,
            "cotton" => TensorKind::Cotton,
            "weyl" => TensorKind::Weyl,
            _ => return Err(format!("unknown tensor '{s}'")),
        })
    }
}

/// Nonzero components of a flat row-major tensor of rank `r`, 1-based.
fn components(name: &str, n: usize, r: usize, vals: &[f64]) -> String {
    let mut s = String::new();
    for (k, v) in vals.iter().enumerate() {
        if v.abs() < 1e-14 {
            continue;
        }
        let idx: Vec<String> = (0..r).rev().map(|p| ((k / n.pow(p as u32)) % n + 1).to_string()).collect();
        let _ = writeln!(s, "{name}[{}] = {v:.12e}", idx.join(","));
    }
    if s.is_empty() {
        let _ = writeln!(s, "{name}: all components vanish");
    }
    s
}

pub fn curvature(spec: &ManifoldSpec, point: &[f64], kind: TensorKind) -> Result<String> {
    let order = if kind == TensorKind::Cotton { 3 } else { 2 };
    let ev = GeometryEvaluator::with_order(spec, order)?;
    let p = ev.at::<f64>(point)?.ok_or_else(|| anyhow!("metric is not positive definite at {point:?}"))?;
    let n = p.n;
    Ok(match kind {
        TensorKind::Christoffel => components("Gamma", n, 3, &p.christoffel),
        TensorKind::Riemann => components("R", n, 4, &p.riemann),
        TensorKind::Ricci => components("Ri", n, 2, p.ricci.as_slice()),
        TensorKind::Scalar => format!("sc = {:.12e}\n", p.sc),
        TensorKind::Schouten => components("S", n, 2, &schouten(&p)?),
        TensorKind::Cotton => components("C", n, 3, &cotton(&p)?.iter().map(|a| a.sum).collect::<Vec<_>>()),
        TensorKind::Weyl => components("W", n, 4, &weyl(&p)),
    })
}

pub fn corpus_list() -> String {
    let mut s = String::new();
    for f in list_families() {
        let expected: Vec<String> = f.expected.iter().map(|(c, v)| format!("{c} {v}")).collect();
        let _ = writeln!(s, "{:<12} {}D  {}  [{}]", f.id, f.dim, f.title, expected.join(", "));
    }
    s
}

pub fn corpus_export(id: &str, path: &Path) -> Result<()> {
    let text = export_family(id)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Verify one family (`id`) or all; returns the listing and whether every family passed.
pub fn corpus_verify(target: &str, params: &Overrides, cfg: &SamplingConfig) -> Result<(String, bool)> {
    let start = Instant::now();
    let ids: Vec<&str> = if target == "all" {
        if !params.params.is_empty() || !params.funcs.is_empty() {
            bail!("--params needs a single family id");
        }
        list_families().iter().map(|f| f.id).collect()
    } else {
        vec![family(target)?.id]
    };
    let mut s = String::new();
    let mut ok = true;
    for id in ids {
        let c = verify_family(id, params, cfg)?;
        ok &= c.passed();
        let verdicts: Vec<String> = c.reports.iter().map(|r| format!("{} {} ({:.1e})", r.id, r.verdict, r.max_residual)).collect();
        let _ = writeln!(s, "{:<12} {}  {}", id, if c.passed() { "PASS" } else { "FAIL" }, verdicts.join(", "));
        for (name, v) in &c.extras {
            let _ = writeln!(s, "    {name} deviation {v:.2e}");
        }
        for m in &c.mismatches {
            let _ = writeln!(s, "    mismatch: {m}");
        }
    }
    let _ = writeln!(s, "{} in {:.1} s", if ok { "all passed" } else { "FAILED" }, start.elapsed().as_secs_f64());
    Ok((s, ok))
}

/// "a:b"
pub fn parse_range(text: &str) -> Result<(f64, f64)> {
    let (a, b) = text.split_once(':').ok_or_else(|| anyhow!("expected a:b, got '{text}'"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number '{v}'"))).collect()
}

pub struct OdeRun {
    pub summary: String,
    pub report: Option<ReportDocument>,
}

pub struct OdeRequest<'a> {
    pub id: &'a str,
    pub params: BTreeMap<String, f64>,
    pub init: Option<Vec<f64>>,
    pub range: Option<(f64, f64)>,
    pub step: Option<f64>,
    pub verify: Option<ConditionId>,
    pub points: usize,
    pub seed: u64,
}

pub fn ode_run(req: &OdeRequest) -> Result<OdeRun> {
    let sys = RifOdeSystem::builtin(req.id, &req.params)?;
    let init = req.init.clone().unwrap_or_else(|| sys.default_init.clone());
    let range = req.range.unwrap_or(sys.default_range);
    let step = req.step.unwrap_or(sys.default_step);
    let m = sys.integrate(&init, range, step)?;
    let t = &m.trajectory;
    let mut s = String::new();
    let _ = writeln!(s, "system {}{}", sys.id, if sys.experimental { " (experimental)" } else { "" });
    let _ = writeln!(s, "{}", sys.description);
    let _ = writeln!(s, "integrated [{}, {}] in {} steps of {}", t.t0, t.t_end(), t.y.len() - 1, t.step);
    if let Some(at) = t.truncated_at {
        let _ = writeln!(s, "guard fired at t = {at}; trajectory truncated");
    }
    let _ = writeln!(s, "max step error {:.3e}, interpolation error {:.3e}", t.max_step_error, t.interpolation_error);
    if let Some(d) = t.drift {
        let _ = writeln!(s, "first integral drift {d:.3e}");
    }
    let names: Vec<String> = sys.state.iter().map(|v| v.name().to_string()).collect();
    let last = t.y.last().expect("trajectory has a knot");
    let _ = writeln!(s, "final state {}", names.iter().zip(last).map(|(n, v)| format!("{n}={v:.9}")).collect::<Vec<_>>().join(" "));
    let report = match req.verify {
        None => None,
        Some(id) => {
            let cfg = numeric_config().with_points(req.points).with_seed(req.seed);
            let mut r = verify_numeric_metric(&m, id, &cfg)?;
            if m.experimental {
                r.notes.push("experimental system: verdict reported, not asserted".into());
            }
            Some(ReportDocument::new(fingerprint(&m.describe(&init)), vec![r]))
        }
    };
    Ok(OdeRun { summary: s, report })
}
