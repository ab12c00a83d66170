//! HTTP backend against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use gcd_audit::formats::{build_format, Family, FormatOptions, Treatments, Variant};
use gcd_audit::harness::{
    Backend, BackendError, BenchmarkItem, BenchmarkKind, CompletionRequest, DecodeParams,
    HttpBackend, Target,
};
use serde_json::Value;

#[derive(Debug, Clone)]
struct Seen {
    headers: Vec<String>,
    body: String,
}

/// Serves one scripted `(status, body)` per connection, then stops.
fn serve(script: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Seen>>>, thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/completion", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    let handle = thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end().to_string();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push(line);
            }
            let mut buf = vec![0u8; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Seen {
                headers,
                body: String::from_utf8(buf).unwrap(),
            });
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            stream.flush().unwrap();
        }
    });
    (url, seen, handle)
}

fn item() -> BenchmarkItem {
    BenchmarkItem {
        id: "i1".into(),
        kind: BenchmarkKind::Men,
        text_a: "cooking".into(),
        text_b: "rice".into(),
        label: 0.5,
        raw_label: 25.0,
        source_range: (0.0, 50.0),
        choices: vec![],
        gold: None,
    }
}

fn call(backend: &HttpBackend, params: &DecodeParams) -> Result<String, BackendError> {
    let spec = build_format(Family::Likert, Variant::Numeric, Treatments::NONE, FormatOptions::default())
        .unwrap();
    let it = item();
    backend.complete(&CompletionRequest {
        item: &it,
        target: Target::Scale(&spec),
        prompt: "P",
        grammar: spec.gbnf(),
        params,
        repeat: 0,
    })
}

fn backend(url: &str) -> HttpBackend {
    HttpBackend::new(url, Duration::from_secs(5))
        .unwrap()
        .with_backoff(Duration::from_millis(1))
        .with_token(None)
}

#[test]
fn echo_and_wire_fields() {
    let (url, seen, h) = serve(vec![(200, r#"{"content":"3","stop":true}"#.into())]);
    let params = DecodeParams {
        temperature: Some(0.0),
        top_p: Some(0.9),
        n_predict: 1,
    };
    let b = backend(&url).with_token(Some("sekrit".into()));
    assert_eq!(call(&b, &params).unwrap(), "3");
    h.join().unwrap();
    let seen = seen.lock().unwrap();
    let body: Value = serde_json::from_str(&seen[0].body).unwrap();
    let mut keys: Vec<&str> = body.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["grammar", "n_predict", "prompt", "temperature", "top_p"]);
    assert_eq!(body["prompt"], "P");
    assert_eq!(body["grammar"], "root ::= response\nresponse ::= [1-5]");
    assert_eq!(body["n_predict"], 1);
    assert!(seen[0]
        .headers
        .iter()
        .any(|h| h.eq_ignore_ascii_case("authorization: Bearer sekrit")));
}

#[test]
fn absent_sampling_params_are_omitted() {
    let (url, seen, h) = serve(vec![(200, r#"{"content":"1"}"#.into())]);
    call(&backend(&url), &DecodeParams::default()).unwrap();
    h.join().unwrap();
    let body: Value = serde_json::from_str(&seen.lock().unwrap()[0].body).unwrap();
    assert!(body.get("temperature").is_none());
    assert!(body.get("top_p").is_none());
    assert!(!seen.lock().unwrap()[0]
        .headers
        .iter()
        .any(|h| h.to_ascii_lowercase().starts_with("authorization")));
}

#[test]
fn three_503s_surface_transport_error() {
    let (url, seen, h) = serve(vec![(503, "busy".into()); 3]);
    let err = call(&backend(&url), &DecodeParams::default()).unwrap_err();
    h.join().unwrap();
    assert!(matches!(err, BackendError::Transport { attempts: 3, .. }), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn retry_then_success() {
    let (url, _, h) = serve(vec![(503, "busy".into()), (200, r#"{"content":"4"}"#.into())]);
    assert_eq!(call(&backend(&url), &DecodeParams::default()).unwrap(), "4");
    h.join().unwrap();
}

#[test]
fn client_error_is_not_retried() {
    let (url, seen, h) = serve(vec![(400, "bad grammar".into())]);
    let err = call(&backend(&url), &DecodeParams::default()).unwrap_err();
    h.join().unwrap();
    assert!(matches!(err, BackendError::Status { status: 400, .. }), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn missing_content_field() {
    let (url, _, h) = serve(vec![(200, r#"{"text":"3"}"#.into())]);
    let err = call(&backend(&url), &DecodeParams::default()).unwrap_err();
    h.join().unwrap();
    assert!(matches!(err, BackendError::MissingContent { .. }));
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    // Bind then drop to get a port with nothing listening.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let b = backend(&format!("http://127.0.0.1:{port}/completion"));
    let err = call(&b, &DecodeParams::default()).unwrap_err();
    assert!(matches!(err, BackendError::Transport { attempts: 3, .. }));
}
