//! Report documents and their JSON / human renderings.

use std::fmt::Write;

use riccikit::conditions::{ConditionReport, Recovered};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: String,
    pub spec_hash: String,
    pub conditions: Vec<ConditionReport>,
    /// Wall time of the run; 0 unless timing was requested, so that
    /// repeated runs stay byte-identical.
    pub timing_ms: u64,
}

impl ReportDocument {
    pub fn new(spec_hash: String, conditions: Vec<ConditionReport>) -> Self {
        ReportDocument { version: env!("CARGO_PKG_VERSION").to_string(), spec_hash, conditions, timing_ms: 0 }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_human(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "spec {}", &self.spec_hash[..self.spec_hash.len().min(16)]);
        let _ = writeln!(s, "{:<10}{:<14}{:>7}{:>9}{:>14}{:>14}", "condition", "verdict", "used", "skipped", "max resid", "mean resid");
        for r in &self.conditions {
            let _ = writeln!(
                s,
                "{:<10}{:<14}{:>7}{:>9}{:>14.3e}{:>14.3e}",
                r.id.to_string(),
                r.verdict.to_string(),
                r.points_used,
                r.points_skipped,
                r.max_residual,
                r.mean_residual
            );
            if let Some(rec) = &r.recovered {
                for line in recovered_lines(rec) {
                    let _ = writeln!(s, "    {line}");
                }
            }
            for n in &r.notes {
                let _ = writeln!(s, "    note: {n}");
            }
        }
        if self.timing_ms > 0 {
            let _ = writeln!(s, "time {} ms", self.timing_ms);
        }
        s
    }
}

fn first_form(name: &str, forms: &[riccikit::conditions::FormSample]) -> Option<String> {
    let f = forms.first()?;
    Some(format!("{name} at {:?} = {:?} ({} samples)", short(&f.point), short(&f.value), forms.len()))
}

fn short(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.6}")).collect()
}

fn recovered_lines(r: &Recovered) -> Vec<String> {
    let mut out = Vec::new();
    out.extend(r.beta.as_deref().and_then(|f| first_form("beta", f)));
    out.extend(r.alpha.as_deref().and_then(|f| first_form("alpha", f)));
    out.extend(r.omega.as_deref().and_then(|f| first_form("omega", f)));
    if let Some(a) = r.a.as_ref().and_then(|a| a.first()) {
        out.push(format!("a = {a:.6} (first sample)"));
    }
    if let Some(b) = r.b.as_ref().and_then(|b| b.first()) {
        out.push(format!("b = {b:.6} (first sample)"));
    }
    if let Some(e) = r.eigen.as_ref().and_then(|e| e.first()) {
        out.push(format!("eigenvalues {:?}, multiplicities {:?}", short(&e.values), e.multiplicities));
    }
    for (k, v) in &r.checks {
        out.push(format!("{k} = {v:.3e}"));
    }
    out
}
