use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use btplan_core::prompt::{build_generation_prompt, MessageList};
use btplan_core::task::{bundled_task, TASK_IDS};
use btplan_modelio::{
    Completion, FinishReason, GenParams, HttpProvider, ModelError, Provider, RecordedResponse, RecordingProvider,
    ReplayProvider, SessionRecord,
};

/// Serves one request with `body` and hands back the request body it saw.
fn one_shot_server(body: &'static str) -> (String, thread::JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream);
        let mut length = 0;
        let mut first = String::new();
        reader.read_line(&mut first).unwrap();
        assert!(first.starts_with("POST /v1/chat/completions "), "{first}");
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
        }
        let mut request = vec![0; length];
        reader.read_exact(&mut request).unwrap();
        let reply = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        reader.get_mut().write_all(reply.as_bytes()).unwrap();
        String::from_utf8(request).unwrap()
    });
    (url, handle)
}

fn prompt() -> MessageList {
    build_generation_prompt("visit (1,1)", None).unwrap()
}

#[test]
fn http_round_trip() {
    let (url, server) = one_shot_server(
        r#"{"choices":[{"message":{"role":"assistant","content":"<root/>"},"finish_reason":"stop"}],"usage":{"prompt_tokens":42,"completion_tokens":3}}"#,
    );
    let provider = HttpProvider::new(&url).unwrap();
    let mut params = GenParams::new("llama-chat-bt");
    params.stop = vec!["</root>".into()];
    let c = provider.complete(&prompt(), &params).unwrap();
    assert_eq!(c.text, "<root/>");
    assert_eq!(c.finish, FinishReason::Stop);
    assert_eq!((c.prompt_tokens, c.completion_tokens), (Some(42), Some(3)));
    let sent: serde_json::Value = serde_json::from_str(&server.join().unwrap()).unwrap();
    assert_eq!(sent["model"], "llama-chat-bt");
    assert_eq!(sent["max_tokens"], 1000);
    assert_eq!(sent["temperature"], 0.0);
    assert_eq!(sent["stop"][0], "</root>");
    assert_eq!(sent["messages"][0]["role"], "system");
}

#[test]
fn http_length_finish_is_surfaced() {
    let (url, server) =
        one_shot_server(r#"{"choices":[{"message":{"content":"<root><Behav"},"finish_reason":"length"}]}"#);
    let c = HttpProvider::new(&url).unwrap().complete(&prompt(), &GenParams::new("m")).unwrap();
    server.join().unwrap();
    assert_eq!(c.finish, FinishReason::Length);
    assert_eq!(c.text, "<root><Behav");
}

#[test]
fn http_malformed_body_is_protocol_error() {
    let (url, server) = one_shot_server(r#"{"result":"nope"}"#);
    let err = HttpProvider::new(&url).unwrap().complete(&prompt(), &GenParams::new("m")).unwrap_err();
    server.join().unwrap();
    assert!(matches!(err, ModelError::Protocol(_)), "{err:?}");
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    drop(listener);
    let err = HttpProvider::new(&url).unwrap().complete(&prompt(), &GenParams::new("m")).unwrap_err();
    assert!(matches!(err, ModelError::Transport(_)), "{err:?}");
}

#[test]
fn silent_server_times_out() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let server = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        thread::sleep(Duration::from_millis(2500));
        drop(stream);
    });
    let mut params = GenParams::new("m");
    params.timeout_secs = 1;
    let err = HttpProvider::new(&url).unwrap().complete(&prompt(), &params).unwrap_err();
    assert!(matches!(err, ModelError::Timeout(_)), "{err:?}");
    server.join().unwrap();
}

#[test]
fn canned_over_length_answer_hits_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let messages = prompt();
    let params = GenParams::new("m");
    let long: String = (0..1500).map(|i| format!("w{i} ")).collect();
    SessionRecord::new(&messages, &params, RecordedResponse::canned(long.clone()))
        .save(dir.path(), 0)
        .unwrap();
    let c = ReplayProvider::open(dir.path()).unwrap().complete(&messages, &params).unwrap();
    assert_eq!(c.finish, FinishReason::Length);
    assert_eq!(c.completion_tokens, Some(1000));
    assert!(long.starts_with(&c.text) && c.text.len() < long.len());
}

#[test]
fn canned_answer_replays_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let messages = prompt();
    let params = GenParams::new("m");
    SessionRecord::new(&messages, &params, RecordedResponse::canned("<root/>"))
        .save(dir.path(), 0)
        .unwrap();
    let c = ReplayProvider::open(dir.path()).unwrap().complete(&messages, &params).unwrap();
    assert_eq!((c.text.as_str(), c.finish), ("<root/>", FinishReason::Stop));
}

#[test]
fn unseen_prompt_is_missing_recording() {
    let dir = tempfile::tempdir().unwrap();
    let err = ReplayProvider::open(dir.path())
        .unwrap()
        .complete(&prompt(), &GenParams::new("m"))
        .unwrap_err();
    assert!(matches!(err, ModelError::MissingRecording { .. }));
    assert!(matches!(ReplayProvider::open(dir.path().join("nope")), Err(ModelError::Io(_))));
}

/// Deterministic stand-in for a live model.
struct Echo {
    calls: AtomicUsize,
}

impl Provider for Echo {
    fn complete(&self, messages: &MessageList, _: &GenParams) -> Result<Completion, ModelError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(Completion {
            text: format!("reply {n}: {}", messages.messages().last().unwrap().content),
            latency: Duration::from_millis(7),
            prompt_tokens: Some(10),
            completion_tokens: Some(5),
            finish: FinishReason::Stop,
        })
    }
}

#[test]
fn record_then_replay_a_session() {
    let dir = tempfile::tempdir().unwrap();
    let recorder = RecordingProvider::new(Echo { calls: AtomicUsize::new(0) }, dir.path()).unwrap();
    let params = GenParams::new("m");
    let mut requests = Vec::new();
    for id in TASK_IDS {
        let spec = bundled_task(id).unwrap();
        requests.push(build_generation_prompt(&spec.prompt, None).unwrap());
        requests.push(build_generation_prompt(&spec.prompt, spec.example.as_ref()).unwrap());
    }
    let recorded: Vec<Completion> = requests.iter().map(|m| recorder.complete(m, &params).unwrap()).collect();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 18);

    let replay = ReplayProvider::open(dir.path()).unwrap();
    for (m, original) in requests.iter().zip(&recorded) {
        let c = replay.complete(m, &params).unwrap();
        assert_eq!(&c, original);
    }
}

#[test]
fn repeated_requests_get_numbered_files() {
    let dir = tempfile::tempdir().unwrap();
    let recorder = RecordingProvider::new(Echo { calls: AtomicUsize::new(0) }, dir.path()).unwrap();
    let params = GenParams::new("m");
    let a = recorder.complete(&prompt(), &params).unwrap();
    let b = recorder.complete(&prompt(), &params).unwrap();
    assert_ne!(a.text, b.text);
    let replay = ReplayProvider::open(dir.path()).unwrap();
    assert_eq!(replay.complete(&prompt(), &params).unwrap().text, a.text);
    assert_eq!(replay.complete(&prompt(), &params).unwrap().text, b.text);
    assert!(matches!(
        replay.complete(&prompt(), &params),
        Err(ModelError::MissingRecording { .. })
    ));
}
