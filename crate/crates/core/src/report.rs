//! Trajectory CSV and certificate reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certificate::{CheckId, Certificate, Verdict};
use crate::error::{Error, Result};
use crate::seed::scheme_description;
use crate::simulator::{Event, EventKind, Sample, Trajectory};

/// 17 significant digits: enough to round-trip any `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let first = traj
        .samples
        .first()
        .ok_or_else(|| Error::Precondition("cannot emit an empty trajectory".into()))?;
    let mut header = vec!["t".to_string()];
    header.extend((0..first.x.len()).map(|i| format!("x_{i}")));
    header.push("kappa".into());
    header.extend((0..first.u.len()).map(|i| format!("u_{i}")));
    header.push("g".into());
    let mut out = header.join(",");
    out.push('\n');
    for s in &traj.samples {
        let mut row = vec![num(s.t)];
        row.extend(s.x.iter().map(|v| num(*v)));
        row.push(num(s.kappa));
        row.extend(s.u.iter().map(|v| num(*v)));
        row.push(num(s.g));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    for e in &traj.events {
        let mut row = vec!["# event".to_string(), e.kind.as_str().to_string(), num(e.t)];
        row.extend(e.state.iter().map(|v| num(*v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_trajectory_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let text = trajectory_csv(traj)?;
    fs::write(path.as_ref(), text).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}

/// Parses CSV produced by [`trajectory_csv`] back into samples and events.
pub fn parse_trajectory_csv(text: &str) -> Result<(Vec<Sample>, Vec<Event>)> {
    let bad = |line: usize, what: &str| Error::Config(format!("csv line {}: {what}", line + 1));
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(0, "missing header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n = cols.iter().filter(|c| c.starts_with("x_")).count();
    let m = cols.iter().filter(|c| c.starts_with("u_")).count();
    if cols.len() != n + m + 3 {
        return Err(bad(0, "unexpected header"));
    }
    let mut samples = vec![];
    let mut events = vec![];
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(i, "bad number"));
        if let Some(rest) = line.strip_prefix("# event,") {
            let f: Vec<&str> = rest.split(',').collect();
            let kind = EventKind::parse(f[0]).ok_or_else(|| bad(i, "unknown event"))?;
            let t = parse(f.get(1).ok_or_else(|| bad(i, "missing time"))?)?;
            let state = f[2..].iter().map(|s| parse(s)).collect::<Result<_>>()?;
            events.push(Event { kind, t, state });
            continue;
        }
        if fields.len() != cols.len() {
            return Err(bad(i, "wrong field count"));
        }
        let v: Vec<f64> = fields.iter().map(|s| parse(s)).collect::<Result<_>>()?;
        samples.push(Sample {
            t: v[0],
            x: v[1..1 + n].to_vec(),
            kappa: v[1 + n],
            u: v[2 + n..2 + n + m].to_vec(),
            g: v[2 + n + m],
        });
    }
    Ok((samples, events))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    HumanText,
    MachineJson,
}

pub const NARRATIVE_INSTANTIATED: &str = "externally enforced class fails on this instance; premises certified numerically";
pub const NARRATIVE_SUBCRITICAL: &str = "subcritical regime; Theorem 1 not instantiated";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub stream_scheme: String,
    pub overall: Verdict,
    pub narrative: String,
    pub certificates: Vec<Certificate>,
}

fn find(certs: &[Certificate], check: CheckId) -> Option<&Certificate> {
    certs.iter().find(|c| c.check == check && c.subject.is_none())
}

pub fn narrative(certs: &[Certificate]) -> String {
    let a2 = find(certs, CheckId::A2);
    let lemma1 = find(certs, CheckId::Lemma1);
    let theorem = find(certs, CheckId::Theorem1);
    if let (Some(a2), Some(l1), Some(th)) = (a2, lemma1, theorem) {
        if a2.passed() && l1.passed() && th.passed() {
            return NARRATIVE_INSTANTIATED.into();
        }
    }
    if a2.is_some_and(Certificate::failed) {
        return NARRATIVE_SUBCRITICAL.into();
    }
    let failed = certs.iter().filter(|c| c.failed()).count();
    let unchecked = certs.iter().filter(|c| c.verdict == Verdict::NotCheckable).count();
    match (failed, unchecked) {
        (0, 0) => format!("all {} checks passed", certs.len()),
        (0, u) => format!("no check failed; {u} of {} could not be checked", certs.len()),
        (f, _) => format!("{f} of {} checks failed", certs.len()),
    }
}

pub fn overall(certs: &[Certificate]) -> Verdict {
    if certs.iter().any(Certificate::failed) {
        Verdict::Fail
    } else if certs.iter().all(Certificate::passed) {
        Verdict::Pass
    } else {
        Verdict::NotCheckable
    }
}

pub fn build_report(scenario: Option<&str>, seed: Option<u64>, certs: Vec<Certificate>) -> Result<Report> {
    if certs.is_empty() {
        return Err(Error::Precondition("report needs at least one certificate".into()));
    }
    Ok(Report {
        scenario: scenario.map(str::to_string),
        seed,
        stream_scheme: scheme_description(),
        overall: overall(&certs),
        narrative: narrative(&certs),
        certificates: certs,
    })
}

pub fn render_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize") + "\n"
}

pub fn render_text(report: &Report) -> String {
    let label_w = report.certificates.iter().map(|c| c.label().len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    if let Some(s) = &report.scenario {
        let _ = writeln!(out, "scenario: {s}");
    }
    if let Some(seed) = report.seed {
        let _ = writeln!(out, "seed: {seed}");
    }
    let _ = writeln!(out, "{:<label_w$}  {:<13}  summary", "check", "verdict");
    let _ = writeln!(out, "{}", "-".repeat(label_w + 2 + 13 + 2 + 7));
    for c in &report.certificates {
        let _ = writeln!(out, "{:<label_w$}  {:<13}  {}", c.label(), c.verdict.to_string(), c.summary);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "overall: {}", report.overall);
    let _ = writeln!(out, "{}", report.narrative);
    let mut declared: Vec<&String> = report.certificates.iter().flat_map(|c| &c.declarations).collect();
    declared.sort();
    declared.dedup();
    for d in declared {
        let _ = writeln!(out, "declared: {d}");
    }
    out
}

pub fn render(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::HumanText => render_text(report),
        ReportFormat::MachineJson => render_json(report),
    }
}

pub fn emit_certificate_report(certs: &[Certificate], format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let report = build_report(None, None, certs.to_vec())?;
    write_report(&report, format, path)
}

pub fn write_report(report: &Report, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path.as_ref(), render(report, format)).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::Termination;

    fn constant_traj(samples: usize) -> Trajectory {
        Trajectory {
            samples: (0..samples)
                .map(|k| Sample {
                    t: k as f64 * 0.1,
                    x: vec![0.5],
                    kappa: 1.0,
                    u: vec![0.0],
                    g: -0.75,
                })
                .collect(),
            events: vec![],
            dt: 0.1,
            terminated: Termination::Horizon,
            policy_id: "zero".into(),
            zero_policy: true,
        }
    }

    #[test]
    fn csv_shape() {
        let csv = trajectory_csv(&constant_traj(3)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "t,x_0,kappa,u_0,g");
        assert!(lines[1..].iter().all(|l| l.ends_with(&num(-0.75))));
        assert!(trajectory_csv(&constant_traj(0)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut traj = constant_traj(3);
        traj.samples[1].x[0] = 0.1 + 0.2;
        traj.samples[2].g = -1e-300;
        traj.events.push(Event {
            kind: EventKind::BoundaryCrossing,
            t: std::f64::consts::LN_2 / 2.0,
            state: vec![1.0 - 1e-16],
        });
        let csv = trajectory_csv(&traj).unwrap();
        assert!(csv.lines().last().unwrap().starts_with("# event,boundary-crossing,"));
        let (samples, events) = parse_trajectory_csv(&csv).unwrap();
        assert_eq!(samples, traj.samples);
        assert_eq!(events, traj.events);
    }

    #[test]
    fn single_certificate_report() {
        let c = Certificate::new(CheckId::H2, Verdict::Pass, "monotone");
        let r = build_report(None, None, vec![c]).unwrap();
        let text = render_text(&r);
        assert_eq!(text.lines().filter(|l| l.starts_with("H2")).count(), 1);
        assert!(build_report(None, None, vec![]).is_err());
    }

    #[test]
    fn narratives() {
        let a2 = |v| Certificate::new(CheckId::A2, v, "");
        assert_eq!(narrative(&[a2(Verdict::Fail)]), NARRATIVE_SUBCRITICAL);
        let all = [
            a2(Verdict::Pass),
            Certificate::new(CheckId::Lemma1, Verdict::Pass, ""),
            Certificate::new(CheckId::Theorem1, Verdict::Pass, ""),
        ];
        assert_eq!(narrative(&all), NARRATIVE_INSTANTIATED);
    }
}
