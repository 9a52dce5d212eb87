//! Acceptance checks. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion does.
//!
//! Run with `cargo test -p btplan-harness --test acceptance -- --nocapture`.
//! Criterion 9 runs only when `BTPLAN_LIVE_ENDPOINT` and `BTPLAN_LIVE_MODEL`
//! name a chat-completions endpoint and model.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use btplan_core::catalog::{ActionCatalog, PortSchema};
use btplan_core::engine::{build_tree, ActionCall, FnHost, NodeStatus};
use btplan_core::lint::{lint, Severity};
use btplan_core::prompt::{
    build_generation_prompt, read_dataset, synth_catalog, synth_dataset, write_dataset, GENERATION_INSTRUCTION,
};
use btplan_core::repair::repair;
use btplan_core::task::{bundled_task, golden_xml, mutants, validate, validate_xml, MutantClass, TASK_IDS};
use btplan_core::xml::{parse, serialize, Attributes, NamedTree, RawNode, TreeModel};
use btplan_harness::demo::write_demo_session;
use btplan_harness::run::{execute, Source};
use btplan_harness::{EvalConfig, Mode, Report};
use btplan_modelio::{FinishReason, GenParams, Provider, RecordedResponse, ReplayProvider, SessionRecord};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn strict_errors(model: &TreeModel, catalog: &ActionCatalog) -> Vec<String> {
    lint(model, catalog)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.to_string())
        .collect()
}

// ---- 1: goldens and mutants ----

fn criterion_1() -> Outcome {
    let start = Instant::now();
    for id in TASK_IDS {
        let spec = bundled_task(id).unwrap();
        let v = validate_xml(golden_xml(id).unwrap(), &spec);
        ensure(v.passed, || format!("golden tree of task {id} fails: {:?}", v.reasons))?;
    }
    let golden_time = start.elapsed();
    ensure(golden_time < Duration::from_secs(1), || format!("goldens took {golden_time:?}"))?;

    let mut total = 0;
    for id in TASK_IDS {
        let spec = bundled_task(id).unwrap();
        let mut classes = BTreeSet::new();
        for m in mutants(Some(id)) {
            let v = validate_xml(m.xml, &spec);
            ensure(!v.passed, || format!("task {id} {:?} mutant passes", m.class))?;
            ensure(v.primary_class() == Some(m.expected), || {
                format!("task {id} {:?}: expected {:?}, got {:?}", m.class, m.expected, v.reasons)
            })?;
            if m.class != MutantClass::SplitParam {
                classes.insert(format!("{:?}", m.class));
            }
            total += 1;
        }
        ensure(classes.len() >= 4, || format!("task {id} has only {} mutant classes", classes.len()))?;
    }
    Ok(format!("9 goldens pass in {golden_time:.2?}; {total} mutants rejected with the expected class"))
}

// ---- 2: repair uplift ----

#[derive(Debug, Clone, Copy)]
enum Fault {
    ExtraParam,
    UnknownAction,
    EmptyCascade,
}

const UNKNOWN_ACTIONS: [&str; 4] = ["CheckReachability", "WaitForProcessing", "LogProgress", "ScanArea"];

/// Paths (below the tree root) of nodes matching `pred`.
fn node_paths(node: &RawNode, prefix: &mut Vec<usize>, pred: &dyn Fn(&RawNode) -> bool, out: &mut Vec<Vec<usize>>) {
    if pred(node) {
        out.push(prefix.clone());
    }
    for (i, c) in node.children.iter().enumerate() {
        prefix.push(i);
        node_paths(c, prefix, pred, out);
        prefix.pop();
    }
}

fn inject(golden: &TreeModel, catalog: &ActionCatalog, fault: Fault, rng: &mut ChaCha8Rng) -> TreeModel {
    let mut model = golden.clone();
    let root = model.trees[0].element.children.first_mut().unwrap();
    let mut paths = Vec::new();
    match fault {
        Fault::ExtraParam => {
            node_paths(root, &mut Vec::new(), &|n| catalog.contains(&n.element), &mut paths);
            let target = root.descendant_mut(paths.choose(rng).unwrap()).unwrap();
            let name = ["speed", "timeout_ms", "retries", "frame"].choose(rng).unwrap();
            target.attributes.set(*name, rng.random_range(1..10).to_string());
        }
        Fault::UnknownAction | Fault::EmptyCascade => {
            node_paths(root, &mut Vec::new(), &|n| matches!(n.element.as_str(), "Sequence" | "Fallback"), &mut paths);
            let target = root.descendant_mut(paths.choose(rng).unwrap()).unwrap();
            let mut node = RawNode::new(*UNKNOWN_ACTIONS.choose(rng).unwrap());
            if rng.random_bool(0.5) {
                node.attributes.set("goal", "1,1");
            }
            if let Fault::EmptyCascade = fault {
                node = RawNode::new("Fallback").with_child(RawNode::new("Sequence").with_child(node));
            }
            let at = rng.random_range(0..=target.children.len());
            target.children.insert(at, node);
        }
    }
    // Re-parse so spans match the faulty text.
    parse(&serialize(&model)).unwrap()
}

fn demo_report(root: &Path, out: &str) -> Result<Report, String> {
    let session = root.join("session");
    if !session.exists() {
        write_demo_session(&session).map_err(|e| e.to_string())?;
    }
    let config = EvalConfig::load(&session.join("eval.toml")).map_err(|e| e.to_string())?;
    execute(&config, &session, &Source::Replay(session.clone()), &root.join(out)).map_err(|e| e.to_string())
}

fn passing(report: &Report, model: &str, mode: Mode, sa: bool) -> Vec<u8> {
    report
        .cells
        .iter()
        .filter(|c| c.model == model && c.mode == mode && if sa { c.validated_sa() } else { c.validated() })
        .map(|c| c.task)
        .collect()
}

fn criterion_2(tmp: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2023);
    let mut corpus = 0;
    for id in TASK_IDS {
        let spec = bundled_task(id).unwrap();
        let golden = parse(golden_xml(id).unwrap()).unwrap();
        for fault in [Fault::ExtraParam, Fault::UnknownAction, Fault::EmptyCascade] {
            for _ in 0..2 {
                let faulty = inject(&golden, &spec.catalog, fault, &mut rng);
                ensure(!strict_errors(&faulty, &spec.catalog).is_empty(), || {
                    format!("task {id} {fault:?}: injected fault is not a lint error")
                })?;
                ensure(!validate(&faulty, &spec).passed, || format!("task {id} {fault:?}: faulty tree validates"))?;
                let once = repair(&faulty, &spec.catalog).map_err(|e| e.to_string())?;
                let errors = strict_errors(&once.repaired, &spec.catalog);
                ensure(errors.is_empty(), || format!("task {id} {fault:?}: repaired tree not clean: {errors:?}"))?;
                let twice = repair(&once.repaired, &spec.catalog).map_err(|e| e.to_string())?;
                ensure(twice.edits.is_empty() && serialize(&twice.repaired) == serialize(&once.repaired), || {
                    format!("task {id} {fault:?}: repair is not idempotent")
                })?;
                // Every injected fault is subtractive: repair restores a passing tree.
                let v = validate(&once.repaired, &spec);
                ensure(v.passed, || format!("task {id} {fault:?}: repaired tree fails: {:?}", v.reasons))?;
                corpus += 1;
            }
        }
    }
    ensure(corpus >= 20, || format!("corpus has only {corpus} trees"))?;

    let report = demo_report(tmp, "out-c2")?;
    let os = passing(&report, "LlamaChat", Mode::Os, false);
    let sa = passing(&report, "LlamaChat", Mode::Os, true);
    ensure(os.len() == 4 && sa.len() == 7 && os.iter().all(|t| sa.contains(t)), || {
        format!("LlamaChat OS {os:?} -> OS+SA {sa:?}")
    })?;
    Ok(format!(
        "{corpus} seeded faulty trees repaired, clean, idempotent and validated; LlamaChat {} -> {} tasks",
        os.len(),
        sa.len()
    ))
}

// ---- 3: parser round-trip ----

fn random_value(rng: &mut ChaCha8Rng) -> String {
    const PARTS: [&str; 12] = ["a", "{key}", "&", "<", ">", "\"", "'", "\n", "\t", " ", "ü", "3,2"];
    (0..rng.random_range(0..6)).map(|_| *PARTS.choose(rng).unwrap()).collect()
}

fn random_attrs(rng: &mut ChaCha8Rng) -> Attributes {
    const NAMES: [&str; 7] = ["goal", "name", "speed", "x", "data-id", "custom_attr", "_autoremap"];
    let mut attrs = Attributes::new();
    for _ in 0..rng.random_range(0..4) {
        attrs.set(*NAMES.choose(rng).unwrap(), random_value(rng));
    }
    attrs
}

fn random_node(rng: &mut ChaCha8Rng, depth: usize) -> RawNode {
    const ELEMENTS: [&str; 10] =
        ["Sequence", "Fallback", "Inverter", "MoveTo", "SubTree", "Teleport", "x-widget", "ns:Probe", "Node.v2", "_odd"];
    let mut node = RawNode::new(*ELEMENTS.choose(rng).unwrap());
    node.attributes = random_attrs(rng);
    if depth > 0 {
        for _ in 0..rng.random_range(0..4) {
            node.children.push(random_node(rng, depth - 1));
        }
    }
    node
}

fn random_model(rng: &mut ChaCha8Rng) -> TreeModel {
    let mut trees = Vec::new();
    for i in 0..rng.random_range(1..4) {
        let mut t = NamedTree::new(format!("Tree{i}"), None);
        for _ in 0..rng.random_range(0..3) {
            t.element.children.push(random_node(rng, 3));
        }
        trees.push(t);
    }
    let mut root_attributes = Attributes::new();
    if rng.random_bool(0.3) {
        root_attributes.set("vendor", random_value(rng));
    }
    let extras = (0..rng.random_range(0..2))
        .map(|_| {
            let mut n = random_node(rng, 2);
            n.element = "TreeNodesModel".into();
            n
        })
        .collect();
    TreeModel {
        trees,
        main_tree_id: Some("Tree0".into()),
        format_version: rng.random_bool(0.8).then(|| "4".to_string()),
        root_attributes,
        extras,
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut nodes = 0;
    for i in 0..1000 {
        let model = random_model(&mut rng);
        let text = serialize(&model);
        let parsed = parse(&text).map_err(|e| format!("model {i} does not re-parse: {e}\n{text}"))?;
        ensure(parsed.same_structure(&model), || format!("model {i}: elements or attributes changed\n{text}"))?;
        ensure(serialize(&parsed) == text, || format!("model {i}: serialize is not a fixpoint"))?;
        nodes += model.node_count();
    }
    Ok(format!("1000 random models ({nodes} nodes) round-trip unchanged"))
}

// ---- 4: engine semantics ----

#[derive(Debug, Clone)]
enum Shape {
    Leaf(NodeStatus),
    Seq(Vec<Shape>),
    Fb(Vec<Shape>),
}

/// Reference single-tick interpreter; assigns leaf ids depth-first.
fn reference(shape: &Shape) -> NodeStatus {
    match shape {
        Shape::Leaf(s) => *s,
        Shape::Seq(kids) => {
            for k in kids {
                match reference(k) {
                    NodeStatus::Success => continue,
                    other => return other,
                }
            }
            NodeStatus::Success
        }
        Shape::Fb(kids) => {
            for k in kids {
                match reference(k) {
                    NodeStatus::Failure => continue,
                    other => return other,
                }
            }
            NodeStatus::Failure
        }
    }
}

fn flip(s: NodeStatus) -> NodeStatus {
    match s {
        NodeStatus::Success => NodeStatus::Failure,
        NodeStatus::Failure => NodeStatus::Success,
        NodeStatus::Running => NodeStatus::Running,
    }
}

fn mirror(shape: &Shape) -> Shape {
    match shape {
        Shape::Leaf(s) => Shape::Leaf(flip(*s)),
        Shape::Seq(k) => Shape::Fb(k.iter().map(mirror).collect()),
        Shape::Fb(k) => Shape::Seq(k.iter().map(mirror).collect()),
    }
}

fn to_xml(shape: &Shape, leaves: &mut Vec<NodeStatus>) -> RawNode {
    match shape {
        Shape::Leaf(s) => {
            leaves.push(*s);
            RawNode::new("Step").with_attr("n", (leaves.len() - 1).to_string())
        }
        Shape::Seq(k) => k.iter().fold(RawNode::new("Sequence"), |n, c| n.with_child(to_xml(c, leaves))),
        Shape::Fb(k) => k.iter().fold(RawNode::new("Fallback"), |n, c| n.with_child(to_xml(c, leaves))),
    }
}

fn tick_engine(root: RawNode, leaves: Vec<NodeStatus>) -> Result<NodeStatus, String> {
    let catalog = ActionCatalog::new().with_action("Step", PortSchema::required(["n"]));
    let host = FnHost::new(catalog, move |c: &ActionCall<'_>| {
        leaves[c.port("n").unwrap().parse::<usize>().unwrap()].into()
    });
    let model = TreeModel {
        trees: vec![NamedTree::new("Main", Some(root))],
        main_tree_id: Some("Main".into()),
        format_version: Some("4".into()),
        ..Default::default()
    };
    let mut tree = build_tree(&model, host).map_err(|e| e.to_string())?;
    Ok(tree.tick_once())
}

fn random_shape(rng: &mut ChaCha8Rng, depth: usize) -> Shape {
    const ALL: [NodeStatus; 3] = [NodeStatus::Success, NodeStatus::Failure, NodeStatus::Running];
    if depth == 0 || rng.random_bool(0.3) {
        return Shape::Leaf(*ALL.choose(rng).unwrap());
    }
    let kids = (0..rng.random_range(1..4)).map(|_| random_shape(rng, depth - 1)).collect();
    if rng.random_bool(0.5) { Shape::Seq(kids) } else { Shape::Fb(kids) }
}

/// Expected Parallel result when children report `v` on one tick.
fn parallel_reference(v: &[NodeStatus], success: usize, failure: usize) -> NodeStatus {
    let succeeded = v.iter().filter(|s| **s == NodeStatus::Success).count();
    let failed = v.iter().filter(|s| **s == NodeStatus::Failure).count();
    // Children are visited left to right; the first threshold crossed wins.
    let (mut s, mut f) = (0, 0);
    for st in v {
        match st {
            NodeStatus::Success => s += 1,
            NodeStatus::Failure => f += 1,
            NodeStatus::Running => {}
        }
        if s >= success {
            return NodeStatus::Success;
        }
        if f >= failure || v.len() - f < success {
            return NodeStatus::Failure;
        }
    }
    debug_assert!(succeeded < success && failed < failure);
    NodeStatus::Running
}

fn criterion_4() -> Outcome {
    const ALL: [NodeStatus; 3] = [NodeStatus::Success, NodeStatus::Failure, NodeStatus::Running];
    let mut rows = 0;
    for n in 1..=3usize {
        for code in 0..3usize.pow(n as u32) {
            let v: Vec<NodeStatus> = (0..n).map(|i| ALL[code / 3usize.pow(i as u32) % 3]).collect();
            let leaves = || v.iter().map(|s| Shape::Leaf(*s)).collect::<Vec<_>>();
            for shape in [Shape::Seq(leaves()), Shape::Fb(leaves())] {
                let mut ls = Vec::new();
                let got = tick_engine(to_xml(&shape, &mut ls), ls)?;
                ensure(got == reference(&shape), || format!("{shape:?}: engine {got}"))?;
                rows += 1;
            }
            for success in 1..=n {
                for failure in 1..=n {
                    let mut node = RawNode::new("Parallel")
                        .with_attr("success_count", success.to_string())
                        .with_attr("failure_count", failure.to_string());
                    for i in 0..n {
                        node = node.with_child(RawNode::new("Step").with_attr("n", i.to_string()));
                    }
                    let got = tick_engine(node, v.clone())?;
                    let want = parallel_reference(&v, success, failure);
                    ensure(got == want, || format!("Parallel({success},{failure}) {v:?}: engine {got}, expected {want}"))?;
                    rows += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let shape = random_shape(&mut rng, 4);
        let dual = mirror(&shape);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let left = tick_engine(to_xml(&shape, &mut a), a)?;
        let right = tick_engine(to_xml(&dual, &mut b), b)?;
        ensure(left == reference(&shape), || format!("{shape:?}: engine {left}"))?;
        ensure(left == flip(right), || format!("duality fails for {shape:?}"))?;
    }
    Ok(format!("{rows} truth-table rows and 1000 random duality pairs agree with the reference"))
}

// ---- 5: harness arithmetic ----

fn criterion_5(tmp: &Path) -> Outcome {
    let report = demo_report(tmp, "out-c5")?;
    let md = fs::read_to_string(tmp.join("out-c5/report.md")).map_err(|e| e.to_string())?;
    let line = |prefix: &str| md.lines().find(|l| l.starts_with(prefix)).unwrap_or("").to_string();
    ensure(line("| Zero-Shot") == "| Zero-Shot | 88.9% | 66.7% |", || format!("got {:?}", line("| Zero-Shot")))?;
    ensure(line("| One-Shot") == "| One-Shot | 88.9% | 88.9%* |", || format!("got {:?}", line("| One-Shot")))?;
    // The LlamaChat half of the validation table, column for column.
    let expected = [
        (1, " | ✓ | ✓"),
        (2, " | ✓ | ✓"),
        (3, " |  | ✓"),
        (4, " | ✓ | ✓"),
        (5, " | ✓ | ✓"),
        (6, " |  | ✓"),
        (7, " |  | "),
        (8, " |  | ✓"),
        (9, " |  | "),
    ];
    for (task, cols) in expected {
        let row = line(&format!("| Task {task} |"));
        let want = format!("| Task {task} | {cols} |");
        ensure(row.starts_with(&want), || format!("task {task}: {row:?} does not start with {want:?}"))?;
    }
    ensure(passing(&report, "LlamaChat", Mode::Os, false) == [1, 2, 4, 5], || "LlamaChat OS column".into())?;
    ensure(passing(&report, "LlamaChat", Mode::Os, true) == [1, 2, 3, 4, 5, 6, 8], || "LlamaChat OS+SA column".into())?;
    Ok("88.9% / 66.7% rendered; LlamaChat OS = 1,2,4,5 and OS+SA = 1,2,3,4,5,6,8".into())
}

// ---- 6: replay determinism ----

fn files(dir: &Path, prefix: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            files(&p, prefix, out);
        } else {
            let rel = p.strip_prefix(prefix).unwrap().display().to_string();
            out.push((rel, fs::read(&p).unwrap()));
        }
    }
}

fn criterion_6(tmp: &Path) -> Outcome {
    demo_report(tmp, "out-c6a")?;
    demo_report(tmp, "out-c6b")?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    files(&tmp.join("out-c6a"), &tmp.join("out-c6a"), &mut a);
    files(&tmp.join("out-c6b"), &tmp.join("out-c6b"), &mut b);
    ensure(a.len() == b.len(), || format!("{} vs {} files", a.len(), b.len()))?;
    for ((pa, ca), (pb, cb)) in a.iter().zip(&b) {
        ensure(pa == pb && ca == cb, || format!("{pa} differs from {pb}"))?;
    }
    Ok(format!("two replay runs wrote {} byte-identical files, reports included", a.len()))
}

// ---- 7: token cap ----

fn criterion_7(tmp: &Path) -> Outcome {
    let dir = tmp.join("cap");
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let messages = build_generation_prompt("visit (1,1)", None).map_err(|e| e.to_string())?;
    let params = GenParams::new("capped");
    ensure(params.max_new_tokens == 1000, || "default cap is not 1000".into())?;
    let body: String = (0..1200).map(|i| format!("<MoveTo goal=\"{i},{i}\"/>\n")).collect();
    let long = format!("<root BTCPP_format=\"4\"><BehaviorTree ID=\"MainTree\"><Sequence>\n{body}</Sequence></BehaviorTree></root>");
    SessionRecord::new(&messages, &params, RecordedResponse::canned(long))
        .save(&dir, 0)
        .map_err(|e| e.to_string())?;
    let c = ReplayProvider::open(&dir).unwrap().complete(&messages, &params).map_err(|e| e.to_string())?;
    ensure(c.finish == FinishReason::Length, || format!("finish = {:?}", c.finish))?;
    ensure(c.completion_tokens == Some(1000), || format!("{:?} tokens", c.completion_tokens))?;

    let report = demo_report(tmp, "out-c7")?;
    let cell = report.cell("CodeLlama", 9, Mode::Os).ok_or("missing cell")?;
    ensure(cell.finish == Some(FinishReason::Length) && !cell.syntactic, || format!("{cell:?}"))?;
    Ok("over-length canned answer ends with finish=length and counts as a syntactic failure".into())
}

// ---- 8: dataset pipeline ----

fn criterion_8(tmp: &Path) -> Outcome {
    let start = Instant::now();
    let entries = synth_dataset(600, 8);
    let path = tmp.join("dataset.jsonl");
    let written = write_dataset(&entries, &path).map_err(|e| e.to_string())?;
    let back = read_dataset(&path).map_err(|e| e.to_string())?;
    ensure(written == 600 && back == entries, || format!("wrote {written}, read back {}", back.len()))?;
    let catalog = synth_catalog();
    for (i, e) in back.iter().enumerate() {
        ensure(e.instruction == GENERATION_INSTRUCTION, || format!("entry {i}: instruction differs"))?;
        e.check().map_err(|m| format!("entry {i}: {m}"))?;
        let model = parse(&e.output).map_err(|err| format!("entry {i}: {err}"))?;
        let errors = strict_errors(&model, &catalog);
        ensure(errors.is_empty(), || format!("entry {i}: {errors:?}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("600 entries built, round-tripped and checked in {elapsed:.2?}"))
}

// ---- 9: live smoke ----

fn criterion_9(tmp: &Path) -> Option<Outcome> {
    let endpoint = std::env::var("BTPLAN_LIVE_ENDPOINT").ok()?;
    let model = std::env::var("BTPLAN_LIVE_MODEL").unwrap_or_else(|_| "default".into());
    let text = format!("phase = 2\n\n[[models]]\nlabel = \"live\"\nmodel = \"{model}\"\nendpoint = \"{endpoint}\"\n");
    let run = || -> Outcome {
        let config = EvalConfig::from_toml(&text).map_err(|e| e.to_string())?;
        let report = execute(&config, tmp, &Source::Config, &tmp.join("out-live")).map_err(|e| e.to_string())?;
        ensure(report.cells.len() == 18, || format!("{} cells", report.cells.len()))?;
        let passes = report.cells.iter().filter(|c| c.syntactic).count();
        Ok(format!("18 cells evaluated against {endpoint}; {passes} syntactically correct"))
    };
    Some(run())
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let results: Vec<(u8, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2(t)),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5(t)),
        (6, criterion_6(t)),
        (7, criterion_7(t)),
        (8, criterion_8(t)),
    ];
    let mut failed = Vec::new();
    for (n, r) in &results {
        match r {
            Ok(msg) => println!("criterion {n}: PASS ({msg})"),
            Err(msg) => {
                println!("criterion {n}: FAIL ({msg})");
                failed.push(*n);
            }
        }
    }
    match criterion_9(t) {
        None => println!("criterion 9: SKIP (set BTPLAN_LIVE_ENDPOINT to run the live smoke test)"),
        Some(Ok(msg)) => println!("criterion 9: PASS ({msg})"),
        Some(Err(msg)) => {
            println!("criterion 9: FAIL ({msg})");
            failed.push(9);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
