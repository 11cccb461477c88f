use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use talc_core::data::{ExampleRecord, ExplanationRecord};
use talc_core::{LabelSpace, TaskDescriptor, ABSTAIN};
use talc_labeler::{build_matrix, EndpointConfig, HttpCompleter, LabelMode, PromptTemplate};

#[derive(Default)]
struct Seen {
    requests: AtomicUsize,
    auth: Mutex<Vec<String>>,
    bodies: Mutex<Vec<serde_json::Value>>,
}

/// Answers each POST by looking for a keyword in the prompt. The first
/// `fail_first` requests get a 503.
fn serve(fail_first: usize) -> (String, Arc<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/complete", listener.local_addr().unwrap());
    let seen = Arc::new(Seen::default());
    let shared = Arc::clone(&seen);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let seen = Arc::clone(&shared);
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap() == 0 {
                        return;
                    }
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = line["authorization:".len()..].trim().to_string();
                    }
                }
                let mut body = vec![0u8; len];
                reader.read_exact(&mut body).unwrap();
                let n = seen.requests.fetch_add(1, Ordering::SeqCst);
                seen.auth.lock().unwrap().push(auth);
                let json: serde_json::Value = serde_json::from_slice(&body).unwrap();
                seen.bodies.lock().unwrap().push(json.clone());
                let (status, reply) = if n < fail_first {
                    ("503 Service Unavailable", String::from("{}"))
                } else {
                    let prompt = json["prompt"].as_str().unwrap();
                    let text = if prompt.contains("hmm") {
                        "I am not sure"
                    } else if prompt.contains("high") {
                        "Fake."
                    } else {
                        "original"
                    };
                    ("200 OK", serde_json::json!({ "text": text }).to_string())
                };
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            });
        }
    });
    (url, seen)
}

fn task() -> TaskDescriptor {
    let expl = |id: &str, text: &str| ExplanationRecord {
        id: id.into(),
        text: text.into(),
        accuracy_metadata: None,
        perplexity_metadata: None,
    };
    let ex = |id: &str, f: &str| ExampleRecord {
        id: id.into(),
        serialized_features: f.into(),
    };
    TaskDescriptor {
        task_name: "notes".into(),
        label_space: LabelSpace::new(["original", "fake"]).unwrap(),
        explanations: vec![expl("e1", "If variance is high, fake"), expl("e2", "hmm")],
        example_records: Some(vec![
            ex("x1", "variance equal to high"),
            ex("x2", "variance equal to low"),
            ex("x3", "variance equal to mid"),
        ]),
    }
}

fn template() -> PromptTemplate {
    PromptTemplate {
        template_text: "{explanations}\n{feature_lines}\n{question}".into(),
        explanation_separator: "\n".into(),
        question: "Answer:".into(),
        verbalizer: [("original".to_string(), 0), ("fake".to_string(), 1)]
            .into_iter()
            .collect(),
        abstain_tokens: vec![],
    }
}

fn endpoint(url: &str, cache: &std::path::Path) -> EndpointConfig {
    EndpointConfig {
        backoff_ms: 1,
        ..EndpointConfig::new(url, cache)
    }
}

#[test]
fn per_explanation_matrix_then_offline_replay() {
    let (url, seen) = serve(0);
    let dir = tempfile::tempdir().unwrap();
    let cfg = endpoint(&url, dir.path());
    let client = HttpCompleter::new(cfg.clone()).unwrap();
    let run = build_matrix(
        &task(),
        &template(),
        &cfg,
        &client,
        LabelMode::PerExplanation,
    )
    .unwrap();
    assert_eq!((run.matrix.n(), run.matrix.m()), (3, 2));
    // e1 mentions "high" so every prompt with it reads as fake.
    assert_eq!(run.matrix.cells(), &[1, ABSTAIN, 1, ABSTAIN, 1, ABSTAIN]);
    assert!(run.stats.complete);
    assert_eq!(run.stats.unmatched.len(), 3);
    assert_eq!(run.stats.unmatched[0].detail, "I am not sure");
    assert_eq!(seen.requests.load(Ordering::SeqCst), 6);
    let body = &seen.bodies.lock().unwrap()[0];
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 8);

    let offline = EndpointConfig {
        offline: true,
        base_url: "http://127.0.0.1:9/unreachable".into(),
        ..cfg.clone()
    };
    // Identity includes the URL, so an offline replay must keep the same one.
    let replay_cfg = EndpointConfig {
        offline: true,
        ..cfg.clone()
    };
    let again = build_matrix(
        &task(),
        &template(),
        &replay_cfg,
        &client,
        LabelMode::PerExplanation,
    )
    .unwrap();
    assert_eq!(again.matrix.to_csv(), run.matrix.to_csv());
    assert_eq!(again.stats.cache_hits, 6);
    assert_eq!(seen.requests.load(Ordering::SeqCst), 6);

    let missing = build_matrix(
        &task(),
        &template(),
        &offline,
        &client,
        LabelMode::PerExplanation,
    )
    .unwrap();
    assert!(!missing.stats.complete);
    assert!(missing.matrix.cells().iter().all(|&c| c == ABSTAIN));
}

#[test]
fn concat_mode_has_one_column() {
    let (url, seen) = serve(0);
    let dir = tempfile::tempdir().unwrap();
    let cfg = endpoint(&url, dir.path());
    let client = HttpCompleter::new(cfg.clone()).unwrap();
    let run = build_matrix(&task(), &template(), &cfg, &client, LabelMode::Concat).unwrap();
    assert_eq!(run.matrix.explanation_ids(), &["concat"]);
    assert_eq!(run.matrix.n(), 3);
    assert_eq!(seen.requests.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_then_succeeds_and_token_stays_out_of_cache() {
    let (url, seen) = serve(2);
    let dir = tempfile::tempdir().unwrap();
    std::env::set_var("TALC_TEST_TOKEN", "s3cret-token");
    let cfg = EndpointConfig {
        auth_token_env_var: Some("TALC_TEST_TOKEN".into()),
        max_in_flight: 1,
        max_retries: 2,
        ..endpoint(&url, dir.path())
    };
    let client = HttpCompleter::new(cfg.clone()).unwrap();
    let run = build_matrix(&task(), &template(), &cfg, &client, LabelMode::Concat).unwrap();
    assert!(run.stats.complete);
    assert_eq!(seen.requests.load(Ordering::SeqCst), 5);
    assert!(seen
        .auth
        .lock()
        .unwrap()
        .iter()
        .all(|a| a == "Bearer s3cret-token"));
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        assert!(!text.contains("s3cret"));
    }
}

#[test]
fn exhausted_retries_leave_abstains_and_flag_the_run() {
    let (url, _seen) = serve(usize::MAX);
    let dir = tempfile::tempdir().unwrap();
    let cfg = EndpointConfig {
        max_retries: 1,
        ..endpoint(&url, dir.path())
    };
    let client = HttpCompleter::new(cfg.clone()).unwrap();
    let run = build_matrix(&task(), &template(), &cfg, &client, LabelMode::Concat).unwrap();
    assert!(!run.stats.complete);
    assert_eq!(run.stats.failures.len(), 3);
    assert!(run.matrix.cells().iter().all(|&c| c == ABSTAIN));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
