use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use shapegpt_agent::{llm_chat, ChatError, ChatTurn, RemoteClient, RemoteConfig};

/// Serves canned (status, body) replies in order, one per connection, and
/// records the request bodies.
fn serve(replies: Vec<(u16, String)>, stall: Option<Duration>) -> (String, Arc<AtomicUsize>, std::thread::JoinHandle<Vec<Value>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let h2 = hits.clone();
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            h2.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(serde_json::from_slice(&buf).unwrap());
            if let Some(d) = stall {
                std::thread::sleep(d);
                continue;
            }
            let mut s = stream;
            write!(
                s,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        bodies
    });
    (url, hits, handle)
}

fn config(url: String, retries: usize, timeout: Duration) -> RemoteConfig {
    RemoteConfig { url, model: "test-model".into(), key: Some("k".into()), timeout, retries }
}

#[test]
fn tool_call_round_trip() {
    let reply = json!({"choices": [{"message": {"role": "assistant", "content": null, "tool_calls": [
        {"id": "c9", "type": "function", "function": {"name": "buffer", "arguments": "{\"layer\":\"a\",\"distance\":5}"}}
    ]}}]});
    let (url, _, h) = serve(vec![(200, reply.to_string())], None);
    let mut client = RemoteClient::new(config(url, 0, Duration::from_secs(5)));
    let decls = vec![json!({"name": "buffer", "description": "d", "parameters": {"type": "object"}})];
    let turn = llm_chat(&mut client, &[ChatTurn::system("s"), ChatTurn::user("u")], Some(&decls)).unwrap();
    assert_eq!(turn.tool_calls[0].call.name, "buffer");
    assert_eq!(turn.tool_calls[0].call.arguments["distance"], 5);
    let bodies = h.join().unwrap();
    assert_eq!(bodies[0]["model"], "test-model");
    assert_eq!(bodies[0]["tools"][0]["function"]["name"], "buffer");
}

#[test]
fn server_errors_are_retried() {
    let ok = json!({"choices": [{"message": {"content": "hello"}}]}).to_string();
    let (url, hits, h) = serve(vec![(500, "{}".into()), (503, "{}".into()), (200, ok)], None);
    let mut client = RemoteClient::new(config(url, 2, Duration::from_secs(5)));
    let turn = llm_chat(&mut client, &[ChatTurn::system("s")], None).unwrap();
    assert_eq!(turn.content, "hello");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    h.join().unwrap();
}

#[test]
fn timeout_is_a_transport_error_after_retries() {
    let (url, hits, h) = serve(vec![(200, String::new()), (200, String::new())], Some(Duration::from_millis(600)));
    let mut client = RemoteClient::new(config(url, 1, Duration::from_millis(200)));
    let err = llm_chat(&mut client, &[ChatTurn::system("s")], None).unwrap_err();
    assert!(matches!(err, ChatError::Transport(_)), "{err}");
    h.join().unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[test]
fn garbage_completion_is_malformed() {
    let (url, _, h) = serve(vec![(200, json!({"choices": []}).to_string())], None);
    let mut client = RemoteClient::new(config(url, 0, Duration::from_secs(5)));
    let err = llm_chat(&mut client, &[ChatTurn::system("s")], None).unwrap_err();
    assert!(matches!(err, ChatError::MalformedModelOutput(_)));
    h.join().unwrap();
}
