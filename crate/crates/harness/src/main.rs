use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use btplan_core::catalog::ActionCatalog;
use btplan_core::lint::{lint_with, LintOptions};
use btplan_core::prompt::{
    build_description_prompt, extract_tree, generic_example, read_dataset, synth_dataset,
    write_dataset, DatasetEntry, DescriptionConstraints, GENERATION_INSTRUCTION,
};
use btplan_core::repair::repair;
use btplan_core::task::{bundled_task, load_task_spec, validate_xml, TaskSpec, TASK_SCHEMA};
use btplan_core::xml::{parse, serialize, TreeModel};
use btplan_harness::config::CONFIG_EXAMPLE;
use btplan_harness::demo::write_demo_session;
use btplan_harness::eval::cell_prompt;
use btplan_harness::run::{execute, RunError, Source};
use btplan_harness::{EvalConfig, ExampleSource, Mode, SyntaxMode};
use btplan_modelio::{GenParams, HttpProvider, Provider, ReplayProvider};
use clap::{Args, Parser, Subcommand, ValueEnum};
use similar::TextDiff;

#[derive(Parser)]
#[command(name = "btplan", version, about = "Parse, lint, repair, validate and evaluate behavior-tree task plans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a tree and print its canonical form.
    Parse {
        file: PathBuf,
        /// Print the tree model as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Report diagnostics against an action catalog.
    Lint {
        file: PathBuf,
        #[command(flatten)]
        catalog: CatalogArg,
        /// Accept unknown leaf actions as custom nodes.
        #[arg(long)]
        lenient: bool,
        #[arg(long)]
        json: bool,
    },
    /// Drop unsupported nodes and ports; print a diff of the result.
    Repair {
        file: PathBuf,
        #[command(flatten)]
        catalog: CatalogArg,
        /// Write the repaired tree here.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Print the edits as JSON instead of a diff.
        #[arg(long)]
        json: bool,
    },
    /// Run a tree against a task specification.
    Validate {
        file: PathBuf,
        /// Bundled task number or a task file.
        #[arg(long)]
        task: String,
        #[arg(long)]
        json: bool,
        /// Print the action trace.
        #[arg(long)]
        trace: bool,
    },
    /// Print the messages sent for a task.
    Prompt {
        #[arg(long)]
        task: String,
        #[arg(long, value_enum, default_value = "os")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "task")]
        example: ExampleArg,
        /// Build the description prompt for this tree instead.
        #[arg(long)]
        describe: Option<PathBuf>,
    },
    /// Generate a tree for a task with one model.
    Gen {
        #[arg(long)]
        task: String,
        #[arg(long, value_enum, default_value = "os")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "task")]
        example: ExampleArg,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Build and check fine-tuning datasets.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Run an evaluation and write its report.
    Eval(EvalArgs),
    /// Write a canned replay session for trying out `eval`.
    Demo { dir: PathBuf },
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Write synthetic entries built from templates.
    Synth {
        #[arg(long, default_value_t = 600)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Check that every record is structurally valid.
    Check { file: PathBuf },
    /// Ask a model to describe trees and write the pairs as a dataset.
    Describe {
        #[arg(required = true)]
        trees: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Args)]
struct CatalogArg {
    /// `taskN`, a bundled task number, a task file or a catalog file.
    #[arg(long)]
    catalog: String,
}

#[derive(Args)]
struct ModelArgs {
    /// Chat-completions base URL, e.g. http://localhost:8000/v1.
    #[arg(long, conflicts_with = "replay", required_unless_present = "replay")]
    endpoint: Option<String>,
    /// Session directory to answer from.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    model: String,
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long, default_value_t = 1000)]
    max_new_tokens: u32,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
}

#[derive(Args)]
struct EvalArgs {
    /// Preset: 1 = tasks 1-7 without repair, 2 = tasks 1-9 with repair.
    #[arg(long)]
    phase: Option<u8>,
    /// Config file; defaults to `eval.toml` inside the replay directory.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "record")]
    replay: Option<PathBuf>,
    /// Record live completions into this directory.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long, short, default_value = "eval-out")]
    out: PathBuf,
    #[arg(long)]
    attempts: Option<usize>,
    #[arg(long)]
    show_zs_sa: bool,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long, value_enum)]
    syntax: Option<SyntaxArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Zs,
    Os,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleArg {
    Generic,
    Task,
}

#[derive(Clone, Copy, ValueEnum)]
enum SyntaxArg {
    Strict,
    Lenient,
}

/// Failures that map to exit code 2; everything domain-level exits 1.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() || e.downcast_ref::<io::Error>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn bundled_id(arg: &str) -> Option<u8> {
    arg.strip_prefix("task").unwrap_or(arg).parse().ok()
}

fn resolve_task(arg: &str) -> Result<TaskSpec> {
    if let Some(id) = bundled_id(arg) {
        return bundled_task(id).ok_or_else(|| usage(format!("no bundled task {id}; bundled tasks are 1-9")));
    }
    let text = read(Path::new(arg))?;
    load_task_spec(&text).map_err(|e| usage(format!("{arg}: {e}\n\ntask file schema:\n{TASK_SCHEMA}")))
}

fn resolve_catalog(arg: &str) -> Result<ActionCatalog> {
    if bundled_id(arg).is_some() {
        return Ok(resolve_task(arg)?.catalog);
    }
    let text = read(Path::new(arg))?;
    let value: toml::Table = toml::from_str(&text).map_err(|e| usage(format!("{arg}: {e}")))?;
    if value.contains_key("catalog") && value.contains_key("pattern") {
        return Ok(resolve_task(arg)?.catalog);
    }
    toml::from_str(&text).map_err(|e| usage(format!("{arg}: not a catalog: {e}")))
}

fn parse_file(path: &Path) -> Result<Option<TreeModel>> {
    match parse(&read(path)?) {
        Ok(m) => Ok(Some(m)),
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            Ok(None)
        }
    }
}

fn provider(args: &ModelArgs) -> Result<(Box<dyn Provider>, GenParams)> {
    let p: Box<dyn Provider> = match (&args.endpoint, &args.replay) {
        (Some(url), _) => {
            let mut p = HttpProvider::new(url).map_err(|e| usage(e.to_string()))?;
            if let Some(var) = &args.api_key_env {
                p = p.with_api_key_env(var);
            }
            Box::new(p)
        }
        (None, Some(dir)) => Box::new(ReplayProvider::open(dir).map_err(|e| usage(e.to_string()))?),
        (None, None) => return Err(usage("give --endpoint or --replay")),
    };
    let mut params = GenParams::new(&args.model);
    params.max_new_tokens = args.max_new_tokens;
    params.temperature = args.temperature;
    params.check().map_err(|e| usage(e.to_string()))?;
    Ok((p, params))
}

fn task_prompt(task: &str, mode: ModeArg, example: ExampleArg) -> Result<btplan_core::prompt::MessageList> {
    let spec = resolve_task(task)?;
    let mut config = EvalConfig {
        example: Some(match example {
            ExampleArg::Generic => ExampleSource::Generic,
            ExampleArg::Task => ExampleSource::Task,
        }),
        ..Default::default()
    };
    config.models.push(btplan_harness::ModelConfig {
        label: "cli".into(),
        model: "cli".into(),
        endpoint: None,
        replay: None,
        api_key_env: None,
        max_in_flight: None,
    });
    let plan = config.plan()?;
    let mode = match mode {
        ModeArg::Zs => Mode::Zs,
        ModeArg::Os => Mode::Os,
    };
    Ok(cell_prompt(&plan, &spec, mode)?)
}

fn run(command: Command) -> Result<bool> {
    let mut stdout = io::stdout().lock();
    match command {
        Command::Parse { file, json: as_json } => {
            let Some(model) = parse_file(&file)? else { return Ok(false) };
            if as_json {
                writeln!(stdout, "{}", json(&model))?;
            } else {
                write!(stdout, "{}", serialize(&model))?;
            }
            Ok(true)
        }
        Command::Lint { file, catalog, lenient, json: as_json } => {
            let catalog = resolve_catalog(&catalog.catalog)?;
            let Some(model) = parse_file(&file)? else { return Ok(false) };
            let options = if lenient { LintOptions::lenient() } else { LintOptions::strict() };
            let diags = lint_with(&model, &catalog, options);
            if as_json {
                writeln!(stdout, "{}", json(&diags))?;
            } else {
                for d in &diags {
                    writeln!(stdout, "{}:{d}", file.display())?;
                }
            }
            Ok(!diags.iter().any(|d| d.is_error()))
        }
        Command::Repair { file, catalog, output, json: as_json } => {
            let catalog = resolve_catalog(&catalog.catalog)?;
            let Some(model) = parse_file(&file)? else { return Ok(false) };
            let outcome = repair(&model, &catalog)?;
            let before = serialize(&model);
            let after = serialize(&outcome.repaired);
            if as_json {
                writeln!(stdout, "{}", json(&outcome.edits))?;
            } else {
                let name = file.display().to_string();
                let diff = TextDiff::from_lines(&before, &after);
                write!(stdout, "{}", diff.unified_diff().header(&name, &format!("{name} (repaired)")))?;
            }
            for t in &outcome.empty_trees {
                eprintln!("warning: tree '{t}' is empty after repair");
            }
            if let Some(path) = output {
                fs::write(&path, &after).with_context(|| format!("writing {}", path.display()))?;
            }
            let clean = !lint_with(&outcome.repaired, &catalog, LintOptions::strict())
                .iter()
                .any(|d| d.is_error());
            Ok(clean && outcome.empty_trees.is_empty())
        }
        Command::Validate { file, task, json: as_json, trace } => {
            let spec = resolve_task(&task)?;
            let verdict = validate_xml(&read(&file)?, &spec);
            if as_json {
                writeln!(stdout, "{}", json(&verdict))?;
            } else {
                let status = verdict.root_status.map_or("not run".to_string(), |s| s.to_string());
                writeln!(
                    stdout,
                    "task {}: {} (root {status}, {} ticks)",
                    spec.id,
                    if verdict.passed { "PASS" } else { "FAIL" },
                    verdict.ticks_used
                )?;
                for r in &verdict.reasons {
                    writeln!(stdout, "  {r}")?;
                }
                if trace {
                    for e in verdict.trace.action_events() {
                        let ports: Vec<String> = e.ports.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        writeln!(
                            stdout,
                            "  tick {:>3}  {} {} -> {}",
                            e.tick,
                            e.action.as_deref().unwrap_or("?"),
                            ports.join(" "),
                            e.status
                        )?;
                    }
                }
            }
            Ok(verdict.passed)
        }
        Command::Prompt { task, mode, example, describe } => {
            let messages = match describe {
                Some(tree) => {
                    let spec = resolve_task(&task)?;
                    let example = match example {
                        ExampleArg::Task => spec.example.unwrap_or_else(generic_example),
                        ExampleArg::Generic => generic_example(),
                    };
                    build_description_prompt(&read(&tree)?, &example, &DescriptionConstraints::default())
                        .map_err(|e| usage(e.to_string()))?
                }
                None => task_prompt(&task, mode, example)?,
            };
            writeln!(stdout, "{}", json(&messages))?;
            Ok(true)
        }
        Command::Gen { task, mode, example, model } => {
            let messages = task_prompt(&task, mode, example)?;
            let (provider, params) = provider(&model)?;
            let completion = provider.complete(&messages, &params)?;
            eprintln!(
                "finish: {:?}, latency: {} ms",
                completion.finish,
                completion.latency.as_millis()
            );
            match extract_tree(&completion.text) {
                Ok(xml) => {
                    writeln!(stdout, "{xml}")?;
                    Ok(parse(&xml).is_ok())
                }
                Err(_) => {
                    writeln!(stdout, "{}", completion.text)?;
                    eprintln!("no tree found in the response");
                    Ok(false)
                }
            }
        }
        Command::Dataset { command } => dataset(command, &mut stdout),
        Command::Eval(args) => eval(args, &mut stdout),
        Command::Demo { dir } => {
            let n = write_demo_session(&dir)?;
            writeln!(
                stdout,
                "wrote {n} records to {}; run `btplan eval --replay {}`",
                dir.display(),
                dir.display()
            )?;
            Ok(true)
        }
    }
}

fn dataset(command: DatasetCommand, stdout: &mut impl Write) -> Result<bool> {
    match command {
        DatasetCommand::Synth { count, seed, out } => {
            let n = write_dataset(&synth_dataset(count, seed), &out)?;
            writeln!(stdout, "wrote {n} entries to {}", out.display())?;
            Ok(true)
        }
        DatasetCommand::Check { file } => {
            let entries = match read_dataset(&file) {
                Ok(e) => e,
                Err(e) => {
                    writeln!(stdout, "{}: {e}", file.display())?;
                    return Ok(false);
                }
            };
            let canonical = entries.iter().filter(|e| e.instruction == GENERATION_INSTRUCTION).count();
            let parsed = entries.iter().filter(|e| parse(&e.output).is_ok()).count();
            writeln!(
                stdout,
                "{} entries, {canonical} with the generation instruction, {parsed} with a parseable tree",
                entries.len()
            )?;
            Ok(canonical == entries.len() && parsed == entries.len())
        }
        DatasetCommand::Describe { trees, out, model } => {
            let (provider, params) = provider(&model)?;
            let example = generic_example();
            let constraints = DescriptionConstraints::default();
            let mut entries = Vec::new();
            for path in &trees {
                let xml = read(path)?;
                let messages = match build_description_prompt(&xml, &example, &constraints) {
                    Ok(m) => m,
                    Err(e) => {
                        eprintln!("skipping {}: {e}", path.display());
                        continue;
                    }
                };
                let completion = provider.complete(&messages, &params)?;
                let entry = DatasetEntry::new(completion.text.trim(), xml);
                if let Err(e) = entry.check() {
                    eprintln!("skipping {}: {e}", path.display());
                    continue;
                }
                entries.push(entry);
            }
            let n = write_dataset(&entries, &out)?;
            writeln!(stdout, "wrote {n} of {} entries to {}", trees.len(), out.display())?;
            Ok(n == trees.len())
        }
    }
}

fn eval(args: EvalArgs, stdout: &mut impl Write) -> Result<bool> {
    let (config_path, base) = match (&args.config, &args.replay) {
        (Some(c), _) => (c.clone(), c.parent().map(Path::to_path_buf).unwrap_or_default()),
        (None, Some(dir)) => (dir.join("eval.toml"), dir.clone()),
        (None, None) => return Err(usage(format!("give --config or --replay\n\nexample config:\n{CONFIG_EXAMPLE}"))),
    };
    let mut config = EvalConfig::load(&config_path).map_err(|e| usage(format!("{e}\n\nexample config:\n{CONFIG_EXAMPLE}")))?;
    if args.phase.is_some() {
        if config.phase.is_some() && config.phase != args.phase {
            eprintln!("note: --phase overrides phase = {} in the config", config.phase.unwrap_or_default());
        }
        config.phase = args.phase;
    }
    if let Some(n) = args.attempts {
        config.attempts = Some(n);
    }
    if let Some(n) = args.concurrency {
        config.concurrency = Some(n);
    }
    if args.show_zs_sa {
        config.show_zs_sa = true;
    }
    if let Some(s) = args.syntax {
        config.syntax = match s {
            SyntaxArg::Strict => SyntaxMode::Strict,
            SyntaxArg::Lenient => SyntaxMode::Lenient,
        };
    }
    let source = match (args.replay, args.record) {
        (Some(dir), _) => Source::Replay(dir),
        (None, Some(dir)) => Source::Record(dir),
        (None, None) => Source::Config,
    };
    let report = execute(&config, &base, &source, &args.out).map_err(|e| match e {
        RunError::Config(e) => usage(format!("{e}\n\nexample config:\n{CONFIG_EXAMPLE}")),
        RunError::Provider { .. } => usage(e.to_string()),
        RunError::Eval(e) => anyhow!(e),
    })?;
    let failed = report.cells.iter().filter(|c| c.attempts.iter().all(|a| a.finish.is_none())).count();
    writeln!(
        stdout,
        "{} cells evaluated; report written to {}",
        report.cells.len(),
        args.out.join("report.md").display()
    )?;
    if failed > 0 {
        eprintln!("warning: {failed} cell(s) got no completion; see attempts.json in their directories");
    }
    Ok(true)
}
