use std::fmt::Write;

use crate::engine::coverage::field_hit;
use crate::engine::{TestReport, Verdict};
use crate::lts::Iolts;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    /// Line-oriented `key: value`, stable across runs.
    Machine,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn edge_text(lts: &Iolts, i: usize) -> String {
    let e = lts.edge(i);
    format!("{} -{}-> {}", lts.state_name(e.source), e.label, lts.state_name(e.target))
}

fn states_text(lts: &Iolts, r: &TestReport, step: usize) -> String {
    let names: Vec<&str> = r.trace[step].states.iter().map(|s| lts.state_name(s)).collect();
    format!("{{{}}}", names.join(","))
}

pub fn render(r: &TestReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => text(r),
        ReportFormat::Machine => machine(r),
    }
}

fn verdict_detail(v: &Verdict) -> Vec<(String, String)> {
    match v {
        Verdict::Pass => Vec::new(),
        Verdict::InvalidFormat { diagnostics, bytes } => {
            let mut out = vec![("offending_bytes".to_string(), hex(bytes))];
            for (i, (m, e)) in diagnostics.iter().enumerate() {
                out.push((format!("diagnostic.{i}"), format!("{m}: {e}")));
            }
            out
        }
        Verdict::InvalidTrace { offending } => vec![("offending".into(), offending.to_string())],
        Verdict::Inconclusive { reason } => vec![("reason".into(), reason.clone())],
    }
}

fn machine(r: &TestReport) -> String {
    let lts = &r.lts;
    let mut out = String::new();
    let _ = writeln!(out, "actor: {}", r.actor);
    let _ = writeln!(out, "seed: {}", r.seed);
    let _ = writeln!(out, "verdict: {}", r.verdict.name());
    for (k, v) in verdict_detail(&r.verdict) {
        let _ = writeln!(out, "{k}: {v}");
    }
    let _ = writeln!(out, "steps: {}", r.steps());
    let _ = writeln!(out, "peer_quit: {}", r.peer_quit);
    for (i, e) in r.trace.iter().enumerate() {
        let _ = writeln!(out, "trace.{i}: {} {} {}", e.label, hex(&e.bytes), states_text(lts, r, i));
    }
    for &i in &r.goals.edges {
        let _ = writeln!(out, "edge.{i}: {} = {}", edge_text(lts, i), r.coverage.edges[i]);
    }
    for (m, p, g) in &r.goals.fields {
        let _ = writeln!(out, "field.{m}.{p}.{}: {}", g.name(), field_hit(&r.coverage, m, p, g));
    }
    for (e, c) in &r.goals.enums {
        let _ = writeln!(out, "enum.{e}.{c}: {}", r.coverage.enum_hits(e, c));
    }
    let _ = writeln!(out, "coverage.transitions: {}", r.goals.edge_ratio(&r.coverage));
    let _ = writeln!(out, "coverage.fields: {}", r.goals.field_ratio(&r.coverage));
    let _ = writeln!(out, "coverage.enums: {}", r.goals.enum_ratio(&r.coverage));
    out
}

fn text(r: &TestReport) -> String {
    let lts = &r.lts;
    let mut out = String::new();
    let _ = writeln!(out, "== verdict");
    let _ = writeln!(out, "{} after {} steps (actor {}, seed {})", r.verdict.name(), r.steps(), r.actor, r.seed);
    for (k, v) in verdict_detail(&r.verdict) {
        let _ = writeln!(out, "  {k}: {v}");
    }
    if r.peer_quit {
        let _ = writeln!(out, "  the implementation closed the connection");
    }
    let _ = writeln!(out, "\n== trace");
    for (i, e) in r.trace.iter().enumerate() {
        let _ = writeln!(out, "{i:>5}  {:<24} {}", e.label.to_string(), states_text(lts, r, i));
    }
    let _ = writeln!(out, "\n== transitions {}", r.goals.edge_ratio(&r.coverage));
    for &i in &r.goals.edges {
        let hits = r.coverage.edges[i];
        let mark = if hits == 0 { "uncovered" } else { "" };
        let _ = writeln!(out, "{hits:>7}  {:<48} {mark}", edge_text(lts, i));
    }
    let _ = writeln!(out, "\n== fields {}", r.goals.field_ratio(&r.coverage));
    for (m, p, g) in &r.goals.fields {
        let hits = field_hit(&r.coverage, m, p, g);
        let mark = if hits == 0 { "uncovered" } else { "" };
        let _ = writeln!(out, "{hits:>7}  {:<48} {mark}", format!("{m}.{p} {}", g.name()));
    }
    let _ = writeln!(out, "\n== enumerations {}", r.goals.enum_ratio(&r.coverage));
    for (e, c) in &r.goals.enums {
        let hits = r.coverage.enum_hits(e, c);
        let mark = if hits == 0 { "uncovered" } else { "" };
        let _ = writeln!(out, "{hits:>7}  {:<48} {mark}", format!("{e}.{c}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::coverage::{goals, CoverageTable};

    #[test]
    fn empty_run_reports_zero_everywhere() {
        let spec = crate::specs::myp();
        let lts = spec.actor("Server").unwrap().lts.clone();
        let r = TestReport {
            actor: "Server".into(),
            seed: 0,
            verdict: Verdict::Pass,
            trace: Vec::new(),
            coverage: CoverageTable::new(&lts),
            goals: goals(&spec, &lts),
            lts,
            peer_quit: false,
        };
        let m = render(&r, ReportFormat::Machine);
        assert!(m.contains("coverage.transitions: 0/3 (0.0%)"), "{m}");
        assert!(m.contains("edge.2: Serving -?Done-> Serving = 0"));
        assert!(m.contains("field.Data.foot.absent: 0"));
        let t = render(&r, ReportFormat::Text);
        assert!(t.contains("Serving -?Done-> Serving"));
        assert!(t.contains("uncovered"));
    }
}
