use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use semstego_core::agents::{AgentError, ChatClient, ChatMessage, EndpointConfig, SamplingParams, UreqTransport};

/// Serves one canned `(status, body)` per connection and reports each
/// request's authorization header and body.
fn serve(replies: Vec<(u16, &'static str)>) -> (String, mpsc::Receiver<(String, String)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut auth = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap_or((line, ""));
                match name.to_ascii_lowercase().as_str() {
                    "authorization" => auth = value.trim().to_string(),
                    "content-length" => length = value.trim().parse().unwrap(),
                    _ => {}
                }
            }
            let mut request = vec![0; length];
            reader.read_exact(&mut request).unwrap();
            tx.send((auth, String::from_utf8(request).unwrap())).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

fn client(url: String) -> ChatClient {
    let config = EndpointConfig {
        endpoint_url: url,
        model_name: "test-model".into(),
        max_retries: 3,
        backoff_base_ms: 1,
        timeout_ms: 5_000,
        ..EndpointConfig::default()
    };
    ChatClient::new(config, "sk-local-test".into(), Box::new(UreqTransport))
}

const OK: &str = r#"{"choices": [{"message": {"role": "assistant", "content": "Paris in spring."}}]}"#;

#[test]
fn retries_server_errors_then_succeeds() {
    let (url, requests) = serve(vec![(503, "busy"), (503, "busy"), (200, OK)]);
    let reply = client(url)
        .call(&[ChatMessage::system("be brief"), ChatMessage::user("a city")], SamplingParams::default())
        .unwrap();
    assert_eq!(reply, "Paris in spring.");
    let seen: Vec<(String, String)> = requests.iter().take(3).collect();
    assert_eq!(seen.len(), 3);
    for (auth, body) in &seen {
        assert_eq!(auth, "Bearer sk-local-test");
        let body: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["messages"][1]["content"], "a city");
    }
}

#[test]
fn auth_failure_is_not_retried() {
    let (url, requests) = serve(vec![(401, r#"{"error": "bad key sk-local-test"}"#)]);
    let err = client(url).call(&[ChatMessage::user("x")], SamplingParams::default()).unwrap_err();
    assert!(matches!(err, AgentError::Auth { status: 401 }));
    assert_eq!(requests.iter().count(), 1);
}

#[test]
fn retries_give_up_and_redact_the_key() {
    let body = "upstream said sk-local-test";
    let (url, _requests) = serve(vec![(500, body); 4]);
    let err = client(url).call(&[ChatMessage::user("x")], SamplingParams::default()).unwrap_err();
    assert!(matches!(err, AgentError::Http { status: 500, .. }));
    assert!(!err.to_string().contains("sk-local-test"));
}
