//! A canned two-model session used by the acceptance tests and the
//! `demo` subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use btplan_core::task::bundled_task;
use btplan_modelio::{RecordedResponse, SessionRecord};
use serde::Deserialize;

use crate::config::{EvalConfig, ModelConfig, Mode, SyntaxMode};
use crate::eval::{cell_prompt, create_dir, write, EvalError};

const FIXTURES: [(&str, &str, &str); 2] = [
    ("LlamaChat", "llamachat-ft", include_str!("../fixtures/demo/llamachat.toml")),
    ("CodeLlama", "codellama-ft", include_str!("../fixtures/demo/codellama.toml")),
];

#[derive(Deserialize)]
struct Canned {
    text: String,
}

type CannedSet = BTreeMap<Mode, BTreeMap<String, Canned>>;

/// The configuration the demo session was recorded with.
pub fn demo_config() -> EvalConfig {
    EvalConfig {
        phase: Some(2),
        syntax: SyntaxMode::Lenient,
        models: FIXTURES
            .iter()
            .map(|(label, model, _)| ModelConfig {
                label: label.to_string(),
                model: model.to_string(),
                endpoint: None,
                replay: None,
                api_key_env: None,
                max_in_flight: None,
            })
            .collect(),
        ..Default::default()
    }
}

/// Writes `eval.toml` and one session directory per model into `dir`,
/// ready for `eval --replay dir`. Returns the number of records written.
pub fn write_demo_session(dir: &Path) -> Result<usize, EvalError> {
    let config = demo_config();
    let plan = config.plan().expect("demo config is valid");
    create_dir(dir)?;
    write(&dir.join("eval.toml"), &config.to_toml())?;
    let mut written = 0;
    for (model, (_, _, source)) in plan.models.iter().zip(FIXTURES) {
        let canned: CannedSet = toml::from_str(source).expect("demo fixture parses");
        let session = dir.join(model.slug());
        create_dir(&session)?;
        let params = plan.params.for_model(&model.model);
        for &task in &plan.tasks {
            let spec = bundled_task(task).expect("bundled task");
            for &mode in &plan.modes {
                let text = &canned[&mode][&task.to_string()].text;
                let messages = cell_prompt(&plan, &spec, mode)?;
                let record = SessionRecord::new(&messages, &params, RecordedResponse::canned(text.clone()));
                record.save(&session, 0).map_err(|e| EvalError::Io {
                    path: session.display().to_string(),
                    source: std::io::Error::other(e.to_string()),
                })?;
                written += 1;
            }
        }
    }
    Ok(written)
}
