use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::time::Duration;

use serde_json::{json, Value};

use propscope::corpus::Article;
use propscope::exec::Exec;
use propscope::features::{assemble_corpus, FeatureConfig};
use propscope::corpus::project_labels;
use propscope::providers::remote::{serve_request, HttpTransport, SubprocessTransport};
use propscope::providers::{Backend, ProviderConfig, ProviderError, Providers, RemoteProvider, Transport};

enum Behavior {
    Serve,
    Sleep(Duration),
    Status500,
}

fn handle(stream: TcpStream, behavior: &Behavior, providers: &Providers) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut out = stream;
    loop {
        let mut len = 0usize;
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        loop {
            line.clear();
            reader.read_line(&mut line)?;
            let l = line.trim_end();
            if l.is_empty() {
                break;
            }
            if let Some((k, v)) = l.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0; len];
        reader.read_exact(&mut body)?;
        let (status, payload) = match behavior {
            Behavior::Serve => {
                let req: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
                (200, serve_request(providers, &req).to_string())
            }
            Behavior::Sleep(d) => {
                std::thread::sleep(*d);
                (200, "{}".to_string())
            }
            Behavior::Status500 => (500, "boom".to_string()),
        };
        write!(
            out,
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
            payload.len()
        )?;
        out.flush()?;
    }
}

fn http_server(behavior: Behavior) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let providers = Providers::reference(64);
        for stream in listener.incoming().flatten() {
            let _ = handle(stream, &behavior, &providers);
        }
    });
    format!("http://{addr}/")
}

fn fixture_article() -> Article {
    let p = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus/articles/article101.txt");
    Article::from_raw("101", std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn http_provider_reproduces_reference_features() {
    let url = http_server(Behavior::Serve);
    let config = ProviderConfig::default().with_url_override(Some(url));
    assert_eq!(config.backend, Backend::Http);
    let remote = Providers::from_config(&config).unwrap();
    let local = Providers::reference(64);
    let article = fixture_article();
    let records = project_labels(&article, &[], 0).unwrap();
    let fc = FeatureConfig::with_embeddings();
    let a = assemble_corpus(std::slice::from_ref(&article), &records, &remote, &fc, Exec::Parallel).unwrap();
    let b = assemble_corpus(std::slice::from_ref(&article), &records, &local, &fc, Exec::Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn http_timeout_is_distinct_and_retryable() {
    let url = http_server(Behavior::Sleep(Duration::from_millis(1500)));
    let t = HttpTransport::new(&url, Duration::from_millis(200));
    let err = t.call(&json!({"op": "sentiment", "text": "x"})).unwrap_err();
    assert!(matches!(err, ProviderError::Timeout(_)), "{err:?}");
    assert!(err.is_retryable());
}

#[test]
fn http_server_error_is_unavailable() {
    let url = http_server(Behavior::Status500);
    let t = HttpTransport::new(&url, Duration::from_secs(5));
    let err = t.call(&json!({"op": "sentiment", "text": "x"})).unwrap_err();
    assert!(matches!(err, ProviderError::Unavailable(_)), "{err:?}");
}

#[test]
fn unreachable_http_is_retryable() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    let t = HttpTransport::new(&url, Duration::from_secs(2));
    assert!(t.call(&json!({"op": "encode", "text": "x"})).unwrap_err().is_retryable());
}

fn sh(script: &str) -> Vec<String> {
    vec!["sh".into(), "-c".into(), script.into()]
}

#[test]
fn subprocess_round_trip() {
    let script = r#"while read -r line; do echo '{"positive":0.25,"neutral":0.5,"negative":0.25,"compound":0.0}'; done"#;
    let t = SubprocessTransport::spawn(&sh(script), Duration::from_secs(5)).unwrap();
    let p = RemoteProvider::new(Box::new(t), 8);
    use propscope::providers::SentimentAnalyzer;
    for _ in 0..3 {
        let s = p.sentiment("anything").unwrap();
        assert_eq!((s.positive, s.neutral, s.negative, s.compound), (0.25, 0.5, 0.25, 0.0));
    }
}

#[test]
fn subprocess_timeout_then_respawn() {
    // First line times out; the respawned child answers immediately.
    let dir = tempfile::tempdir().unwrap();
    let flag = dir.path().join("slow-once");
    let script = format!(
        r#"if [ ! -e '{f}' ]; then touch '{f}'; sleep 5; fi; while read -r line; do echo '{{"score":0.5}}'; done"#,
        f = flag.display()
    );
    let t = SubprocessTransport::spawn(&sh(&script), Duration::from_millis(300)).unwrap();
    let req = json!({"op": "doc_score", "sentences": ["a"]});
    assert!(matches!(t.call(&req).unwrap_err(), ProviderError::Timeout(_)));
    assert_eq!(t.call(&req).unwrap(), json!({"score": 0.5}));
}

#[test]
fn subprocess_malformed_and_dead() {
    let t = SubprocessTransport::spawn(&sh("read -r line; echo not-json"), Duration::from_secs(5)).unwrap();
    let req = json!({"op": "encode", "text": "x"});
    assert!(matches!(t.call(&req).unwrap_err(), ProviderError::Protocol(_)));
    assert!(matches!(t.call(&req).unwrap_err(), ProviderError::Unavailable(_)));
    assert!(SubprocessTransport::spawn(&["/nonexistent/provider".to_string()], Duration::from_secs(1)).is_err());
}
