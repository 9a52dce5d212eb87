use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use btplan_core::lint::{lint_with, Diagnostic};
use btplan_core::prompt::{build_generation_prompt, extract_tree, generic_example, MessageList};
use btplan_core::repair::{repair, RepairEdit};
use btplan_core::task::{bundled_task, validate, ReasonClass, TaskSpec, Verdict};
use btplan_core::xml::{parse, serialize, TreeModel};
use btplan_modelio::{Completion, FinishReason, Provider};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{EvalPlan, ExampleSource, Mode};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0} providers given for {1} models")]
    ProviderCount(usize, usize),
    #[error("task {0} is not bundled")]
    UnknownTask(u8),
    #[error("cannot build prompt for task {task}: {message}")]
    Prompt { task: u8, message: String },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Outcome of one validation run, without the trace (kept on disk).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub passed: bool,
    pub primary: Option<ReasonClass>,
    pub reasons: Vec<String>,
    /// Path of the full verdict, relative to the output directory.
    pub artifact: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: usize,
    pub finish: Option<FinishReason>,
    pub latency_ms: u64,
    pub syntactic: bool,
    /// Why the attempt is not syntactically correct.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellResult {
    pub model: String,
    pub task: u8,
    pub mode: Mode,
    pub attempts: Vec<AttemptRecord>,
    /// 1-based index of the attempt the remaining fields describe.
    pub chosen_attempt: usize,
    pub syntactic: bool,
    pub finish: Option<FinishReason>,
    pub latency_ms: u64,
    pub lint_errors: usize,
    pub lint_warnings: usize,
    /// Unset when no tree reached validation.
    pub verdict: Option<VerdictSummary>,
    pub repair_edits: Option<usize>,
    pub verdict_sa: Option<VerdictSummary>,
    /// Cell directory, relative to the output directory.
    pub artifacts: String,
}

impl CellResult {
    pub fn validated(&self) -> bool {
        self.verdict.as_ref().is_some_and(|v| v.passed)
    }

    pub fn validated_sa(&self) -> bool {
        self.verdict_sa.as_ref().is_some_and(|v| v.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub plan: ReportPlan,
    pub cells: Vec<CellResult>,
}

/// The parts of the plan a report needs to render itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPlan {
    pub phase: Option<u8>,
    pub models: Vec<String>,
    pub tasks: Vec<u8>,
    pub modes: Vec<Mode>,
    pub repair: bool,
    pub show_zs_sa: bool,
    pub attempts: usize,
    pub max_new_tokens: u32,
    pub temperature: f64,
}

impl ReportPlan {
    pub fn from_plan(plan: &EvalPlan) -> Self {
        ReportPlan {
            phase: plan.phase,
            models: plan.models.iter().map(|m| m.label.clone()).collect(),
            tasks: plan.tasks.clone(),
            modes: plan.modes.clone(),
            repair: plan.repair,
            show_zs_sa: plan.show_zs_sa,
            attempts: plan.attempts,
            max_new_tokens: plan.params.max_new_tokens,
            temperature: plan.params.temperature,
        }
    }

    pub fn repairs(&self, mode: Mode) -> bool {
        self.repair && (mode == Mode::Os || self.show_zs_sa)
    }
}

impl Report {
    pub fn cell(&self, model: &str, task: u8, mode: Mode) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.task == task && c.mode == mode)
    }
}

struct CellJob {
    model: usize,
    task: u8,
    mode: Mode,
}

/// The prompt `plan` sends for `task` in `mode`.
pub fn cell_prompt(plan: &EvalPlan, spec: &TaskSpec, mode: Mode) -> Result<MessageList, EvalError> {
    let example = match (mode, plan.example) {
        (Mode::Zs, _) => None,
        (Mode::Os, ExampleSource::Task) => Some(spec.example.clone().unwrap_or_else(generic_example)),
        (Mode::Os, ExampleSource::Generic) => Some(generic_example()),
    };
    build_generation_prompt(&spec.prompt, example.as_ref()).map_err(|e| EvalError::Prompt {
        task: spec.id,
        message: e.to_string(),
    })
}

/// Runs every (model, task, mode) cell and writes artifacts under `out`.
/// `providers[i]` serves `plan.models[i]`.
pub fn run_eval<P: Provider>(plan: &EvalPlan, providers: &[P], out: &Path) -> Result<Report, EvalError> {
    if providers.len() != plan.models.len() {
        return Err(EvalError::ProviderCount(providers.len(), plan.models.len()));
    }
    let mut specs = Vec::new();
    for &t in &plan.tasks {
        let spec = bundled_task(t).ok_or(EvalError::UnknownTask(t))?;
        // Checks the prompts up front so cell failures are model failures.
        for &mode in &plan.modes {
            cell_prompt(plan, &spec, mode)?;
        }
        specs.push(spec);
    }
    create_dir(out)?;

    let mut queues: Vec<Vec<(usize, CellJob)>> = Vec::new();
    let mut index = 0;
    for model in 0..plan.models.len() {
        let mut queue = Vec::new();
        for &task in &plan.tasks {
            for &mode in &plan.modes {
                queue.push((index, CellJob { model, task, mode }));
                index += 1;
            }
        }
        queues.push(queue);
    }
    let results: Mutex<Vec<Option<Result<CellResult, EvalError>>>> = Mutex::new((0..index).map(|_| None).collect());

    let counters: Vec<AtomicUsize> = queues.iter().map(|_| AtomicUsize::new(0)).collect();
    thread::scope(|scope| {
        for (model, queue) in queues.iter().enumerate() {
            let provider = &providers[model];
            let next = &counters[model];
            let workers = provider.max_in_flight().min(plan.concurrency).min(queue.len()).max(1);
            for _ in 0..workers {
                let (results, specs) = (&results, &specs);
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some((slot, job)) = queue.get(i) else { break };
                    let spec = specs.iter().find(|s| s.id == job.task).expect("task loaded");
                    let result = run_cell(plan, provider, spec, job, out);
                    results.lock().expect("results lock")[*slot] = Some(result);
                });
            }
        }
    });

    let mut cells = Vec::with_capacity(index);
    for r in results.into_inner().expect("results lock") {
        cells.push(r.expect("every cell ran")?);
    }
    Ok(Report {
        plan: ReportPlan::from_plan(plan),
        cells,
    })
}

/// What one attempt produced, before validation.
struct AttemptOutput {
    record: AttemptRecord,
    completion: Option<Completion>,
    extracted: Option<String>,
    model: Option<TreeModel>,
    diagnostics: Vec<Diagnostic>,
}

fn attempt_inner(plan: &EvalPlan, provider: &impl Provider, spec: &TaskSpec, messages: &MessageList, n: usize, model_id: &str) -> AttemptOutput {
    let params = plan.params.for_model(model_id);
    let mut out = AttemptOutput {
        record: AttemptRecord {
            attempt: n,
            finish: None,
            latency_ms: 0,
            syntactic: false,
            failure: None,
        },
        completion: None,
        extracted: None,
        model: None,
        diagnostics: Vec::new(),
    };
    let completion = match provider.complete(messages, &params) {
        Ok(c) => c,
        Err(e) => {
            out.record.failure = Some(format!("model error: {e}"));
            return out;
        }
    };
    out.record.finish = Some(completion.finish);
    out.record.latency_ms = completion.latency.as_millis() as u64;
    let text = completion.text.clone();
    out.completion = Some(completion);
    let Ok(xml) = extract_tree(&text) else {
        out.record.failure = Some("no tree in response".into());
        return out;
    };
    out.extracted = Some(xml.clone());
    let model = match parse(&xml) {
        Ok(m) => m,
        Err(e) => {
            out.record.failure = Some(format!("parse error: {e}"));
            return out;
        }
    };
    out.diagnostics = lint_with(&model, &spec.catalog, plan.syntax.lint_options());
    out.model = Some(model);
    let errors = out.diagnostics.iter().filter(|d| d.is_error()).count();
    out.record.failure = match out.record.finish {
        Some(FinishReason::Length) => Some("generation hit the token cap".into()),
        Some(FinishReason::Error) => Some("generation ended with an error".into()),
        _ if errors > 0 => Some(format!("{errors} lint error(s)")),
        _ => None,
    };
    out.record.syntactic = out.record.failure.is_none();
    out
}

/// [`attempt_inner`] with the token cap reported ahead of any parse error
/// it caused.
fn attempt(plan: &EvalPlan, provider: &impl Provider, spec: &TaskSpec, messages: &MessageList, n: usize, model_id: &str) -> AttemptOutput {
    let mut out = attempt_inner(plan, provider, spec, messages, n, model_id);
    if out.record.finish == Some(FinishReason::Length) && out.model.is_none() {
        let detail = out.record.failure.take().unwrap_or_default();
        out.record.failure = Some(format!("generation hit the token cap ({detail})"));
    }
    out
}

fn run_cell(plan: &EvalPlan, provider: &impl Provider, spec: &TaskSpec, job: &CellJob, out: &Path) -> Result<CellResult, EvalError> {
    let cfg = &plan.models[job.model];
    let rel = format!("cells/{}/task{}/{}", cfg.slug(), job.task, job.mode.label().to_lowercase());
    let dir = out.join(&rel);
    // Stale artifacts from an earlier run would contradict the report.
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|source| EvalError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    create_dir(&dir)?;
    let messages = cell_prompt(plan, spec, job.mode)?;

    let mut records = Vec::new();
    let mut chosen = None;
    for n in 1..=plan.attempts {
        let a = attempt(plan, provider, spec, &messages, n, &cfg.model);
        if plan.attempts > 1 {
            if let Some(c) = &a.completion {
                write(&dir.join(format!("response-{n}.txt")), &c.text)?;
            }
        }
        records.push(a.record.clone());
        let done = a.record.syntactic;
        chosen = Some(a);
        if done {
            break;
        }
    }
    let chosen = chosen.expect("at least one attempt");

    write(&dir.join("prompt.json"), &to_json(&messages))?;
    if let Some(c) = &chosen.completion {
        write(&dir.join("response.txt"), &c.text)?;
    }
    if let Some(x) = &chosen.extracted {
        write(&dir.join("extracted.xml"), x)?;
    }
    if chosen.model.is_some() {
        write(&dir.join("diagnostics.json"), &to_json(&chosen.diagnostics))?;
    }
    write(&dir.join("attempts.json"), &to_json(&records))?;

    // A generation cut off by the token cap is not validated.
    let usable = chosen.model.as_ref().filter(|_| chosen.record.finish == Some(FinishReason::Stop));
    let mut verdict = None;
    let mut repair_edits = None;
    let mut verdict_sa = None;
    if let Some(model) = usable {
        verdict = Some(save_verdict(&validate(model, spec), &dir, &rel, "verdict.json")?);
        if plan.repairs(job.mode) {
            match repair(model, &spec.catalog) {
                Ok(outcome) => {
                    write(&dir.join("repaired.xml"), &serialize(&outcome.repaired))?;
                    write(&dir.join("edits.json"), &to_json::<Vec<RepairEdit>>(&outcome.edits))?;
                    repair_edits = Some(outcome.edits.len());
                    verdict_sa = Some(save_verdict(&validate(&outcome.repaired, spec), &dir, &rel, "verdict_sa.json")?);
                }
                Err(e) => {
                    verdict_sa = Some(VerdictSummary {
                        passed: false,
                        primary: None,
                        reasons: vec![format!("repair failed: {e}")],
                        artifact: String::new(),
                    });
                }
            }
        }
    }

    Ok(CellResult {
        model: cfg.label.clone(),
        task: job.task,
        mode: job.mode,
        chosen_attempt: chosen.record.attempt,
        syntactic: chosen.record.syntactic,
        finish: chosen.record.finish,
        latency_ms: chosen.record.latency_ms,
        lint_errors: chosen.diagnostics.iter().filter(|d| d.is_error()).count(),
        lint_warnings: chosen.diagnostics.iter().filter(|d| !d.is_error()).count(),
        attempts: records,
        verdict,
        repair_edits,
        verdict_sa,
        artifacts: rel,
    })
}

fn save_verdict(v: &Verdict, dir: &Path, rel: &str, name: &str) -> Result<VerdictSummary, EvalError> {
    write(&dir.join(name), &to_json(v))?;
    Ok(VerdictSummary {
        passed: v.passed,
        primary: v.primary_class(),
        reasons: v.reasons.iter().map(ToString::to_string).collect(),
        artifact: format!("{rel}/{name}"),
    })
}

pub(crate) fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub(crate) fn create_dir(path: &Path) -> Result<(), EvalError> {
    fs::create_dir_all(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write(path: &Path, contents: &str) -> Result<PathBuf, EvalError> {
    fs::write(path, contents).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path.to_path_buf())
}
