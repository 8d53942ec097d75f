//! Human-readable summary of the runs found under an artifact root.

use crate::artifacts::{CheckClass, Summary, SUMMARY_FILE};
use std::fmt::Write as _;
use std::path::Path;

/// Summaries of every run directory directly below `root`, in directory name order.
/// Unreadable or foreign `summary.json` files are reported as warnings.
pub fn collect(root: &Path) -> (Vec<Summary>, Vec<String>) {
    let mut summaries = Vec::new();
    let mut warnings = Vec::new();
    let Ok(entries) = std::fs::read_dir(root) else {
        return (summaries, warnings);
    };
    let mut dirs: Vec<_> = entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_dir()).collect();
    dirs.sort();
    for dir in dirs {
        let path = dir.join(SUMMARY_FILE);
        let Ok(text) = std::fs::read_to_string(&path) else {
            continue;
        };
        match serde_json::from_str::<Summary>(&text) {
            Ok(s) => summaries.push(s),
            Err(e) => warnings.push(format!("skipping {}: {e}", path.display())),
        }
    }
    (summaries, warnings)
}

fn value(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into())
}

/// One table per run: check, anchor, class, measured value, tolerance, verdict.
pub fn render(summaries: &[Summary]) -> String {
    if summaries.is_empty() {
        return "nothing to report\n".into();
    }
    let mut out = String::new();
    for s in summaries {
        let _ = write!(out, "== {} ({}, seed {}, L = {}, f = {})", s.name, s.experiment, s.seed, s.max_len, s.potential);
        if let Some(p) = s.pressure {
            let _ = write!(out, "  delta^f = {:.6} +- {:.1e}", p.delta, p.err);
        }
        out.push('\n');
        let w_name = s.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let w_anchor = s.checks.iter().map(|c| c.anchor.len()).max().unwrap_or(6).max(6);
        let _ = writeln!(
            out,
            "  {:<w_name$}  {:<w_anchor$}  {:<9}  {:>10}  {:>10}  result",
            "check", "anchor", "class", "value", "tolerance"
        );
        for c in &s.checks {
            let class = match c.class {
                CheckClass::Assertion => "assertion",
                CheckClass::Trend => "trend",
            };
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let _ = write!(
                out,
                "  {:<w_name$}  {:<w_anchor$}  {:<9}  {:>10}  {:>10}  {verdict}",
                c.name,
                c.anchor,
                class,
                value(c.value),
                value(c.tolerance)
            );
            if !c.detail.is_empty() {
                let _ = write!(out, "  ({})", c.detail);
            }
            out.push('\n');
        }
        let failed: Vec<&str> = s.checks.iter().filter(|c| !c.pass).map(|c| c.anchor.as_str()).collect();
        if failed.is_empty() {
            out.push_str("  all checks pass\n");
        } else {
            let _ = writeln!(out, "  failed anchors: {}", failed.join("; "));
        }
        out.push('\n');
    }
    out
}
