//! Plain-text tables.

use std::fmt::Write;

use super::metrics::FixedSetBreakdown;
use super::rubric::{Criterion, Element, RubricCounts};
use super::ExperimentReport;
use crate::bundle::Symptom;

fn pct(rate: Option<f64>) -> String {
    match rate {
        Some(r) => format!("{:.1}", r * 100.0),
        None => "-".into(),
    }
}

/// Success rate (%) per configuration, overall and per symptom.
pub fn render_success_table(report: &ExperimentReport) -> String {
    let n = report.symptoms.len();
    let wo = report.bundles_with(Symptom::WO).len();
    let te = report.bundles_with(Symptom::TE).len();
    let mut out = String::new();
    writeln!(out, "Repair success rate (%) by prompt configuration and bug type").unwrap();
    writeln!(
        out,
        "{:<8} {:>12} {:>12} {:>12}",
        "Config",
        format!("Total (n={n})"),
        format!("WO (n={wo})"),
        format!("TE (n={te})")
    )
    .unwrap();
    for c in &report.configs {
        writeln!(
            out,
            "{:<8} {:>12} {:>12} {:>12}",
            c.as_str(),
            pct(report.per_config_total_rate.get(c).copied()),
            pct(report.per_config_wo_rate.get(c).copied().flatten()),
            pct(report.per_config_te_rate.get(c).copied().flatten()),
        )
        .unwrap();
    }
    if !report.excluded.is_empty() {
        writeln!(out, "Excluded (no mutants): {}", report.excluded.join(", ")).unwrap();
    }
    out
}

pub fn render_breakdown(b: &FixedSetBreakdown) -> String {
    let mut out = String::new();
    writeln!(out, "Bundles fixed by exactly these configurations").unwrap();
    for r in &b.regions {
        let name = r.configs.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(" & ");
        let list = r.bundles.iter().cloned().collect::<Vec<_>>().join(", ");
        writeln!(out, "{name:<24} {:>3}  {list}", r.bundles.len()).unwrap();
    }
    writeln!(out, "{:<24} {:>3}", "all configurations", b.intersection.len()).unwrap();
    let unfixed = b.unfixed.iter().cloned().collect::<Vec<_>>().join(", ");
    writeln!(out, "{:<24} {:>3}  {unfixed}", "none", b.unfixed.len()).unwrap();
    out
}

/// Explanation-quality counts per criterion and element. Complexity rows
/// count explanations with unnecessary complexity (lower is better).
pub fn render_rubric_table(counts: &RubricCounts) -> String {
    let mut out = String::new();
    writeln!(out, "Explanation quality by prompt configuration").unwrap();
    write!(out, "{:<16} {:<10}", "Criterion", "Element").unwrap();
    for c in &counts.configs {
        write!(out, " {:>6}", c.as_str()).unwrap();
    }
    out.push('\n');
    for criterion in Criterion::ALL {
        for element in Element::ALL {
            let label = match criterion {
                Criterion::Complexity => format!("{criterion} (lower)"),
                _ => criterion.to_string(),
            };
            write!(out, "{label:<16} {:<10}", element.to_string()).unwrap();
            for c in &counts.configs {
                write!(out, " {:>6}", counts.get(criterion, element, *c)).unwrap();
            }
            out.push('\n');
        }
    }
    out
}
