use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread::JoinHandle;
use std::time::Duration;

use mre::augment::{ApiStyle, AugmentError, CompletionTransport, GeneratorConfig, HttpCompletionClient};
use mre::providers::{HttpEmbeddingProvider, HttpScorer};
use mre_core::textnorm::normalize;
use mre_core::{EmbeddingProvider, Error, ExternalScorer};

/// Serves `responses` in order, one per connection, and returns the request bodies.
fn serve(responses: Vec<(u16, &'static str)>) -> (String, JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut request = vec![0; length];
            reader.read_exact(&mut request).unwrap();
            bodies.push(String::from_utf8(request).unwrap());
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        bodies
    });
    (url, handle)
}

fn closed_port() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    url
}

const TIMEOUT: Duration = Duration::from_secs(5);

#[test]
fn scorer_round_trip_and_malformed_reply() {
    let (url, server) = serve(vec![(200, r#"{"score": 0.25}"#), (200, r#"{"value": 1}"#), (500, "{}")]);
    let scorer = HttpScorer::new(url, TIMEOUT).unwrap();
    assert_eq!(scorer.score("cand", "ref").unwrap(), 0.25);
    assert!(matches!(scorer.score("cand", "ref"), Err(Error::Protocol(_))));
    assert!(matches!(scorer.score("cand", "ref"), Err(Error::Protocol(_))));
    let bodies = server.join().unwrap();
    let first: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(first, serde_json::json!({"candidate": "cand", "reference": "ref"}));
}

#[test]
fn unreachable_scorer_is_transport_error() {
    let scorer = HttpScorer::new(closed_port(), TIMEOUT).unwrap();
    assert!(matches!(scorer.score("a", "b"), Err(Error::Transport(_))));
}

#[test]
fn embedding_endpoint() {
    let (url, server) = serve(vec![(200, r#"{"vectors": [[1.0, 0.0], [0.0, 1.0]]}"#), (200, r#"{"vectors": "nope"}"#)]);
    let provider = HttpEmbeddingProvider::new(url, TIMEOUT).unwrap();
    let e = provider.embed(&normalize("Hello world")).unwrap();
    assert_eq!(e.tokens(), &["hello".to_string(), "world".to_string()]);
    assert!(matches!(provider.embed(&normalize("x")), Err(Error::Protocol(_))));
    assert_eq!(server.join().unwrap()[0], r#"{"text":"hello world"}"#);
}

#[test]
fn completion_client_statuses() {
    let (url, server) = serve(vec![
        (200, r#"{"choices": [{"message": {"role": "assistant", "content": "1. A?\n2. B?"}}]}"#),
        (401, r#"{"error": "bad key"}"#),
        (429, r#"{"error": "slow down"}"#),
        (200, r#"{"choices": []}"#),
    ]);
    let client = HttpCompletionClient::new(url, "test-key", TIMEOUT, 100.0).unwrap();
    let config = GeneratorConfig { api: ApiStyle::Chat, model: "gpt-3.5-turbo".into(), ..GeneratorConfig::default() };
    let request = config.request("Who is the girl?");
    assert_eq!(client.complete(&request, 0).unwrap(), "1. A?\n2. B?");
    assert!(matches!(client.complete(&request, 0), Err(AugmentError::Credential(_))));
    assert!(matches!(client.complete(&request, 0), Err(AugmentError::Transport { retryable: true, .. })));
    assert!(matches!(client.complete(&request, 0), Err(AugmentError::Protocol(_))));
    let bodies = server.join().unwrap();
    let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent, request.body());
}

#[test]
fn unreachable_completion_endpoint_is_retryable() {
    let client = HttpCompletionClient::new(closed_port(), "k", TIMEOUT, 100.0).unwrap();
    let request = GeneratorConfig::default().request("Q?");
    assert!(matches!(client.complete(&request, 0), Err(AugmentError::Transport { retryable: true, .. })));
}
