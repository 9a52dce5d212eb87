use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use btplan_modelio::FinishReason;
use serde::Serialize;

use crate::config::Mode;
use crate::eval::{to_json, write, CellResult, EvalError, Report, ReportPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Json,
}

/// `passes/total` as a percentage with one decimal, rounded half up.
/// A zero total renders as `-`.
pub fn percent(passes: usize, total: usize) -> String {
    if total == 0 {
        return "-".into();
    }
    let tenths = (2 * passes * 1000 + total) / (2 * total);
    format!("{}.{}%", tenths / 10, tenths % 10)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rate {
    pub passes: usize,
    pub total: usize,
    pub percent: String,
}

impl Rate {
    fn of<'a>(cells: impl Iterator<Item = &'a CellResult>, pass: impl Fn(&CellResult) -> bool) -> Rate {
        let (mut passes, mut total) = (0, 0);
        for c in cells {
            total += 1;
            passes += usize::from(pass(c));
        }
        Rate {
            passes,
            total,
            percent: percent(passes, total),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeSummary {
    pub model: String,
    pub mode: Mode,
    pub syntactic: Rate,
    /// Some generation of this column stopped at the token cap.
    pub hit_token_cap: bool,
    pub validation: Rate,
    pub validation_sa: Option<Rate>,
}

pub fn summarize(report: &Report) -> Vec<ModeSummary> {
    let plan = &report.plan;
    let mut out = Vec::new();
    for model in &plan.models {
        for &mode in &plan.modes {
            let cells = || report.cells.iter().filter(move |c| &c.model == model && c.mode == mode);
            out.push(ModeSummary {
                model: model.clone(),
                mode,
                syntactic: Rate::of(cells(), |c| c.syntactic),
                hit_token_cap: cells().any(|c| c.finish == Some(FinishReason::Length)),
                validation: Rate::of(cells(), CellResult::validated),
                validation_sa: plan.repairs(mode).then(|| Rate::of(cells(), CellResult::validated_sa)),
            });
        }
    }
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    plan: &'a ReportPlan,
    summary: Vec<ModeSummary>,
    cells: &'a [CellResult],
}

pub fn render_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => to_json(&JsonReport {
            plan: &report.plan,
            summary: summarize(report),
            cells: &report.cells,
        }),
        ReportFormat::Markdown => markdown(report),
    }
}

/// Writes `report.md` and `report.json` into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> Result<(PathBuf, PathBuf), EvalError> {
    let md = write(&dir.join("report.md"), &render_report(report, ReportFormat::Markdown))?;
    let json = write(&dir.join("report.json"), &render_report(report, ReportFormat::Json))?;
    Ok((md, json))
}

fn row(out: &mut String, cells: &[String]) {
    out.push('|');
    for c in cells {
        let _ = write!(out, " {c} |");
    }
    out.push('\n');
}

fn header(out: &mut String, cells: &[String]) {
    row(out, cells);
    row(out, &vec!["---".to_string(); cells.len()]);
}

fn check(pass: bool) -> String {
    if pass { "✓" } else { "" }.to_string()
}

fn markdown(report: &Report) -> String {
    let plan = &report.plan;
    let summary = summarize(report);
    let find = |model: &str, mode: Mode| summary.iter().find(|s| s.model == model && s.mode == mode);
    let mut out = String::new();

    match plan.phase {
        Some(p) => {
            let _ = writeln!(out, "# Evaluation report (phase {p})\n");
        }
        None => out.push_str("# Evaluation report\n\n"),
    }
    let tasks: Vec<String> = plan.tasks.iter().map(u8::to_string).collect();
    let _ = writeln!(
        out,
        "Tasks: {}. Attempts per cell: {}. max_new_tokens: {}. temperature: {}{}.\n",
        if tasks.is_empty() { "none".into() } else { tasks.join(", ") },
        plan.attempts,
        plan.max_new_tokens,
        plan.temperature,
        if plan.temperature == 0.0 { " (greedy decoding, chosen for reproducibility)" } else { "" },
    );

    out.push_str("## Syntactic correctness\n\n");
    let mut cols = vec![String::new()];
    cols.extend(plan.models.iter().cloned());
    header(&mut out, &cols);
    let mut capped = false;
    for &mode in &plan.modes {
        let mut r = vec![mode.long_label().to_string()];
        for m in &plan.models {
            let s = find(m, mode).expect("summary per column");
            capped |= s.hit_token_cap;
            r.push(format!("{}{}", s.syntactic.percent, if s.hit_token_cap { "*" } else { "" }));
        }
        row(&mut out, &r);
    }
    if capped {
        let _ = writeln!(
            out,
            "\n\\* Some generations stopped at max_new_tokens = {}; they count as failures.",
            plan.max_new_tokens
        );
    }

    out.push_str("\n## Validation\n\n");
    let mut columns: Vec<(String, Mode, bool)> = Vec::new();
    for m in &plan.models {
        for &mode in &plan.modes {
            columns.push((m.clone(), mode, false));
            if plan.repairs(mode) {
                columns.push((m.clone(), mode, true));
            }
        }
    }
    let mut cols = vec!["Task".to_string()];
    cols.extend(
        columns
            .iter()
            .map(|(m, mode, sa)| format!("{m} {mode}{}", if *sa { "+SA" } else { "" })),
    );
    header(&mut out, &cols);
    for &t in &plan.tasks {
        let mut r = vec![format!("Task {t}")];
        for (m, mode, sa) in &columns {
            let pass = report
                .cell(m, t, *mode)
                .is_some_and(|c| if *sa { c.validated_sa() } else { c.validated() });
            r.push(check(pass));
        }
        row(&mut out, &r);
    }
    let mut total = vec!["Total".to_string()];
    for (m, mode, sa) in &columns {
        let s = find(m, *mode).expect("summary per column");
        let rate = if *sa { s.validation_sa.as_ref().expect("repair column") } else { &s.validation };
        total.push(format!("{}/{}", rate.passes, rate.total));
    }
    row(&mut out, &total);

    out.push_str("\n## Cells\n\n");
    header(
        &mut out,
        &["Model", "Task", "Mode", "Syntactic", "Finish", "Attempt", "Validation", "Repaired", "Artifacts"]
            .map(String::from),
    );
    for c in &report.cells {
        let verdict = |v: &Option<crate::eval::VerdictSummary>| match v {
            None => "-".to_string(),
            Some(v) if v.passed => "pass".into(),
            Some(v) => match v.primary {
                Some(class) => format!("fail ({class})"),
                None => "fail".into(),
            },
        };
        let finish = match c.finish {
            Some(FinishReason::Stop) => "stop",
            Some(FinishReason::Length) => "length",
            Some(FinishReason::Error) => "error",
            None => "-",
        };
        row(
            &mut out,
            &[
                c.model.clone(),
                c.task.to_string(),
                c.mode.to_string(),
                if c.syntactic { "yes" } else { "no" }.into(),
                finish.into(),
                format!("{}/{}", c.chosen_attempt, c.attempts.len()),
                verdict(&c.verdict),
                if c.repair_edits.is_some() || c.verdict_sa.is_some() { verdict(&c.verdict_sa) } else { "-".into() },
                format!("`{}`", c.artifacts),
            ],
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_rounds_half_up() {
        assert_eq!(percent(8, 9), "88.9%");
        assert_eq!(percent(6, 9), "66.7%");
        assert_eq!(percent(1, 8), "12.5%");
        assert_eq!(percent(1, 16), "6.3%");
        assert_eq!(percent(0, 0), "-");
        assert_eq!(percent(3, 3), "100.0%");
    }

    #[test]
    fn percent_matches_float_oracle() {
        for total in 1..60usize {
            for passes in 0..=total {
                // Exact in integers: 1000 * passes / total rounded half up.
                let scaled = 1000 * passes;
                let mut tenths = scaled / total;
                if 2 * (scaled % total) >= total {
                    tenths += 1;
                }
                assert_eq!(percent(passes, total), format!("{:.1}%", tenths as f64 / 10.0));
            }
        }
    }
}
