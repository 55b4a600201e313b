use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use slicebench::gateway::{CallContext, Gateway, GatewayError, GatewayOptions};
use slicebench_core::prompt::ModelConfig;

fn ctx<'a>(task: &'a str) -> CallContext<'a> {
    CallContext { experiment: "baseline", task_id: task }
}

fn fast(fixtures: Option<std::path::PathBuf>, concurrency: usize) -> Gateway {
    Gateway::new(GatewayOptions {
        fixtures,
        concurrency,
        backoff: Duration::from_millis(5),
        max_backoff: Duration::from_millis(50),
    })
}

/// Spawns a fake chat endpoint; `respond` gets the 0-based call index.
async fn fake_api<F>(respond: F) -> (String, Arc<AtomicUsize>, Arc<AtomicUsize>)
where
    F: Fn(usize) -> (StatusCode, HeaderMap, Value) + Clone + Send + Sync + 'static,
{
    let calls = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let live = Arc::new(AtomicUsize::new(0));
    let (c, p, l) = (calls.clone(), peak.clone(), live.clone());
    let app = Router::new().route(
        "/v1/chat/completions",
        post(move |Json(body): Json<Value>| {
            let (c, p, l, respond) = (c.clone(), p.clone(), l.clone(), respond.clone());
            async move {
                assert!(body["messages"][0]["content"].is_string());
                let n = c.fetch_add(1, Ordering::SeqCst);
                let now = l.fetch_add(1, Ordering::SeqCst) + 1;
                p.fetch_max(now, Ordering::SeqCst);
                tokio::time::sleep(Duration::from_millis(20)).await;
                l.fetch_sub(1, Ordering::SeqCst);
                let (s, h, v) = respond(n);
                (s, h, Json(v))
            }
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1"), calls, peak)
}

fn ok_body(text: &str) -> Value {
    json!({"choices": [{"message": {"content": text}}], "usage": {"prompt_tokens": 11, "completion_tokens": 7}})
}

fn http_model(endpoint: &str) -> ModelConfig {
    ModelConfig { endpoint: endpoint.to_string(), api_key_ref: "SLICEBENCH_TEST_NO_KEY".into(), ..ModelConfig::for_model("gpt-4o") }
}

#[tokio::test]
async fn mock_model_prefers_model_specific_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let shared = dir.path().join("baseline");
    std::fs::create_dir_all(shared.join("m1")).unwrap();
    std::fs::write(shared.join("t.static.txt"), "shared").unwrap();
    std::fs::write(shared.join("m1").join("t.static.txt"), "own").unwrap();
    let gw = fast(Some(dir.path().into()), 2);
    let a = gw.complete("p", &ModelConfig::mock("m1"), ctx("t.static")).await.unwrap();
    let b = gw.complete("p", &ModelConfig::mock("m2"), ctx("t.static")).await.unwrap();
    assert_eq!((a.text.as_str(), b.text.as_str()), ("own", "shared"));
    assert_eq!(a.meta.retry_count, 0);
    let err = gw.complete("p", &ModelConfig::mock("m1"), ctx("absent.static")).await.unwrap_err();
    assert!(matches!(err, GatewayError::MissingFixture { .. }), "{err:?}");
}

#[tokio::test]
async fn oversized_prompt_never_reaches_the_network() {
    let (url, calls, _) = fake_api(|_| (StatusCode::OK, HeaderMap::new(), ok_body("{}"))).await;
    let mut cfg = http_model(&url);
    cfg.context_window = 100;
    let prompt = "x".repeat(4000);
    let err = fast(None, 1).complete(&prompt, &cfg, ctx("t")).await.unwrap_err();
    match err {
        GatewayError::ContextOverflow { estimated, window } => {
            assert!(estimated > 100);
            assert_eq!(window, 100);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(calls.load(Ordering::SeqCst), 0);
}

#[tokio::test]
async fn rate_limit_then_success_counts_one_retry() {
    let (url, calls, _) = fake_api(|n| {
        if n == 0 {
            let mut h = HeaderMap::new();
            h.insert("retry-after", "0".parse().unwrap());
            (StatusCode::TOO_MANY_REQUESTS, h, json!({"error": "slow down"}))
        } else {
            (StatusCode::OK, HeaderMap::new(), ok_body("{\"output\": [\"3\"]}"))
        }
    })
    .await;
    let c = fast(None, 1).complete("hello", &http_model(&url), ctx("t")).await.unwrap();
    assert_eq!(c.text, "{\"output\": [\"3\"]}");
    assert_eq!(c.meta.retry_count, 1);
    assert_eq!((c.meta.prompt_tokens, c.meta.completion_tokens), (11, 7));
    assert_eq!(calls.load(Ordering::SeqCst), 2);
}

#[tokio::test]
async fn server_errors_exhaust_retries() {
    let (url, calls, _) = fake_api(|_| (StatusCode::BAD_GATEWAY, HeaderMap::new(), json!({}))).await;
    let mut cfg = http_model(&url);
    cfg.max_retries = 2;
    let err = fast(None, 1).complete("hello", &cfg, ctx("t")).await.unwrap_err();
    assert!(matches!(err, GatewayError::Api { status: 502, .. }), "{err:?}");
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let (url, calls, _) = fake_api(|_| (StatusCode::BAD_REQUEST, HeaderMap::new(), json!({"error": "bad"}))).await;
    let err = fast(None, 1).complete("hello", &http_model(&url), ctx("t")).await.unwrap_err();
    assert!(matches!(err, GatewayError::Api { status: 400, .. }), "{err:?}");
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn in_flight_requests_respect_the_concurrency_limit() {
    let (url, calls, peak) = fake_api(|_| (StatusCode::OK, HeaderMap::new(), ok_body("ok"))).await;
    let gw = fast(None, 2);
    let cfg = http_model(&url);
    let ids: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
    let futs = ids.iter().map(|id| gw.complete("hello", &cfg, ctx(id)));
    let out = futures::future::join_all(futs).await;
    assert!(out.iter().all(|r| r.is_ok()));
    assert_eq!(calls.load(Ordering::SeqCst), 8);
    assert!(peak.load(Ordering::SeqCst) <= 2, "peak {}", peak.load(Ordering::SeqCst));
}
