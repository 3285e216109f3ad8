use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use percept_core::demo::{demo_deployment, DemoDeployment};
use percept_core::perceiver::{predict_text, save_model};
use percept_core::{default_catalog, DimensionId};
use percept_service::{router, AppState, Deployment, ServiceConfig, PREDICTORS_FILE};
use serde_json::{json, Value};
use tower::ServiceExt;

fn demo() -> &'static DemoDeployment {
    static DEMO: OnceLock<DemoDeployment> = OnceLock::new();
    DEMO.get_or_init(|| demo_deployment(160, 4, &default_catalog()).unwrap())
}

fn state_with(config: ServiceConfig, predictors: bool) -> Arc<AppState> {
    let state = AppState::new(config, default_catalog());
    let d = demo();
    let predictors = if predictors { d.predictors.clone() } else { Vec::new() };
    state.install(Deployment { model: d.model.clone(), predictors }).unwrap();
    state
}

fn loaded_app() -> Router {
    router(state_with(ServiceConfig::default(), true))
}

async fn call(app: &Router, method: &str, path: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(path);
    let req = match body {
        Some(b) => builder.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => builder.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = axum::body::to_bytes(res.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap_or_else(|| panic!("not an error body: {v}"))
}

const TEXT: &str = "Landmark vaccine trial offers a surprising and important result for patients";

#[tokio::test]
async fn health_before_and_after_load() {
    let app = router(AppState::new(ServiceConfig::default(), default_catalog()));
    let (s, v) = call(&app, "GET", "/v1/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["model_loaded"], false);

    let (s, v) = call(&app, "POST", "/v1/score", Some(json!({"text": TEXT}))).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(error_code(&v), "model_not_loaded");
    let (s, _) = call(&app, "GET", "/v1/model", None).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);

    let (_, v) = call(&loaded_app(), "GET", "/v1/health", None).await;
    assert_eq!(v["model_loaded"], true);
    assert_eq!(v["predictor_loaded"], true);
}

#[tokio::test]
async fn score_matches_predict() {
    let app = loaded_app();
    let (s, v) = call(&app, "POST", "/v1/score", Some(json!({"text": TEXT}))).await;
    assert_eq!(s, StatusCode::OK);
    let scores = v["statement_scores"].as_object().unwrap();
    let profile = v["profile"].as_object().unwrap();
    assert_eq!(scores.len(), 25);
    assert_eq!(profile.len(), 12);
    assert!(scores.values().chain(profile.values()).all(|x| (1.0..=5.0).contains(&x.as_f64().unwrap())));

    let (expected, expected_profile) = predict_text(&demo().model, "x", TEXT, &default_catalog()).unwrap();
    for (k, x) in &expected.scores {
        assert_eq!(scores[k].as_f64().unwrap(), *x);
    }
    for (d, x) in &expected_profile.scores {
        assert_eq!(profile[d.name()].as_f64().unwrap(), *x);
    }
    assert_eq!(v["model_version"], demo().model.model_version());
    assert_eq!(v["catalog_version"], "1.0");

    let (_, again) = call(&app, "POST", "/v1/score", Some(json!({"text": TEXT}))).await;
    assert_eq!(v, again);
}

#[tokio::test]
async fn score_rejects_bad_input() {
    let app = router(state_with(ServiceConfig { max_text_bytes: 100, ..Default::default() }, true));
    let (s, v) = call(&app, "POST", "/v1/score", Some(json!({"text": "   "}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "empty_text");

    let (s, v) = call(&app, "POST", "/v1/score", Some(json!({"text": "x".repeat(101)}))).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(error_code(&v), "payload_too_large");

    let (s, v) = call(&app, "POST", "/v1/score", Some(json!({"txt": "hello"}))).await;
    assert_eq!(s.as_u16() / 100, 4);
    assert_eq!(error_code(&v), "invalid_json");
}

#[tokio::test]
async fn oversize_body_is_413() {
    let app = router(state_with(ServiceConfig { max_body_bytes: 256, ..Default::default() }, true));
    let (s, v) = call(&app, "POST", "/v1/score", Some(json!({"text": "word ".repeat(200)}))).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(error_code(&v), "payload_too_large");
}

#[tokio::test]
async fn title_is_part_of_the_input() {
    let app = loaded_app();
    let (_, plain) = call(&app, "POST", "/v1/score", Some(json!({"text": TEXT}))).await;
    let (s, titled) =
        call(&app, "POST", "/v1/score", Some(json!({"text": TEXT, "title": "Controversial shocking debate"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_ne!(plain["statement_scores"], titled["statement_scores"]);
    let (s, _) = call(&app, "POST", "/v1/score", Some(json!({"text": "", "title": "Only a title"}))).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn batch_preserves_order() {
    let app = loaded_app();
    let texts = ["fun quirky story", "important cancer breakthrough", "complex quantum theory", "controversial debate"];
    let (s, v) = call(&app, "POST", "/v1/score/batch", Some(json!({"texts": texts}))).await;
    assert_eq!(s, StatusCode::OK);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), texts.len());
    for (t, r) in texts.iter().zip(results) {
        let (_, single) = call(&app, "POST", "/v1/score", Some(json!({"text": t}))).await;
        assert_eq!(&single, r);
    }
    let (s, _) = call(&app, "POST", "/v1/score/batch", Some(json!({"texts": []}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = call(&app, "POST", "/v1/score/batch", Some(json!({"texts": ["ok", ""]}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"]["message"].as_str().unwrap().contains("texts[1]"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 8)]
async fn concurrent_requests_equal_sequential() {
    let app = loaded_app();
    let texts: Vec<String> = (0..100).map(|i| format!("study {i} finds surprising fun result number {}", i % 7)).collect();
    let mut sequential = Vec::new();
    for t in &texts {
        sequential.push(call(&app, "POST", "/v1/score", Some(json!({"text": t}))).await);
    }
    let handles: Vec<_> = texts
        .iter()
        .map(|t| {
            let app = app.clone();
            let body = json!({"text": t});
            tokio::spawn(async move { call(&app, "POST", "/v1/score", Some(body)).await })
        })
        .collect();
    for (h, expected) in handles.into_iter().zip(&sequential) {
        assert_eq!(&h.await.unwrap(), expected);
    }
}

fn variants(texts: &[(&str, &str)]) -> Value {
    json!({"variants": texts.iter().map(|(l, t)| json!({"label": l, "text": t})).collect::<Vec<_>>()})
}

#[tokio::test]
async fn compare_identical_variants_has_zero_deltas() {
    let app = loaded_app();
    let (s, v) = call(&app, "POST", "/v1/compare", Some(variants(&[("a", TEXT), ("b", TEXT)]))).await;
    assert_eq!(s, StatusCode::OK);
    let deltas = v["deltas"].as_array().unwrap();
    assert_eq!(deltas.len(), 1);
    assert_eq!(deltas[0]["baseline"], "a");
    assert!(deltas[0]["dimensions"].as_object().unwrap().values().all(|x| x.as_f64() == Some(0.0)));
    let engagement = deltas[0]["engagement"].as_object().unwrap();
    assert_eq!(engagement.len(), 2);
    assert!(engagement.values().all(|e| e["delta"].as_f64() == Some(0.0) && e["percent_change"].as_f64() == Some(0.0)));
    let first = &v["variants"][0]["engagement"]["log_score"];
    let (lo, mid, hi) = (first["lower"].as_f64().unwrap(), first["expected"].as_f64().unwrap(), first["upper"].as_f64().unwrap());
    assert!(lo < mid && mid < hi);
}

#[tokio::test]
async fn compare_three_variants_gives_two_rows() {
    let app = loaded_app();
    let (s, v) = call(
        &app,
        "POST",
        "/v1/compare",
        Some(variants(&[("base", TEXT), ("fun", "quirky fun playful story"), ("hard", "technical complex jargon")])),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let rows = v["deltas"].as_array().unwrap();
    assert_eq!(rows.iter().map(|r| r["label"].as_str().unwrap()).collect::<Vec<_>>(), ["fun", "hard"]);
    assert!(rows.iter().all(|r| r["baseline"] == "base"));
}

#[tokio::test]
async fn compare_engagement_is_linear_in_profile_deltas() {
    let app = loaded_app();
    let predictor = demo().predictors.iter().find(|p| p.outcome == "log_score").unwrap();
    assert!(predictor.coefficients[&DimensionId::Importance] > 0.0);
    let (s, v) = call(
        &app,
        "POST",
        "/v1/compare",
        Some(variants(&[("base", "a study of soil samples"), ("up", "a crucial vital landmark study of soil samples")])),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let row = &v["deltas"][0];
    let delta = row["engagement"]["log_score"]["delta"].as_f64().unwrap();
    let expected: f64 =
        predictor.coefficients.iter().map(|(k, b)| b * row["dimensions"][k.name()].as_f64().unwrap()).sum();
    assert!((delta - expected).abs() < 1e-9, "{delta} vs {expected}");
}

#[tokio::test]
async fn compare_errors() {
    let app = loaded_app();
    let (s, v) = call(&app, "POST", "/v1/compare", Some(variants(&[("only", TEXT)]))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "too_few_variants");
    let (s, v) = call(&app, "POST", "/v1/compare", Some(variants(&[("x", TEXT), ("x", "other")]))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "duplicate_label");

    let no_predictor = router(state_with(ServiceConfig::default(), false));
    let (s, v) = call(&no_predictor, "POST", "/v1/compare", Some(variants(&[("a", TEXT), ("b", TEXT)]))).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(error_code(&v), "predictor_not_loaded");
}

#[tokio::test]
async fn model_endpoint_and_reload_from_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_path_buf();
    save_model(&demo().model, &dir).unwrap();
    std::fs::write(dir.join(PREDICTORS_FILE), serde_json::to_string(&demo().predictors).unwrap()).unwrap();
    let metadata: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("metadata.json")).unwrap()).unwrap();

    let state = AppState::new(ServiceConfig::default(), default_catalog());
    let app = router(state.clone());
    let (s, v) = call(&app, "POST", "/v1/model/reload", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "no_model_path");

    let (s, v) = call(&app, "POST", "/v1/model/reload", Some(json!({"model_dir": dir}))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["model_loaded"], true);
    assert_eq!(v["predictor_loaded"], true);

    let (s, v) = call(&app, "GET", "/v1/model", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["catalog_hash"], metadata["catalog_hash"]);
    assert_eq!(v["metadata"]["model_version"], metadata["model_version"]);

    // A reload with no body reuses the remembered paths.
    let (s, _) = call(&app, "POST", "/v1/model/reload", None).await;
    assert_eq!(s, StatusCode::OK);

    // A broken artifact leaves the served model in place.
    let (s, v) = call(&app, "POST", "/v1/model/reload", Some(json!({"model_dir": dir.join("missing")}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&v), "model_unreadable");
    let (_, h) = call(&app, "GET", "/v1/health", None).await;
    assert_eq!(h["model_loaded"], true);
}

#[tokio::test]
async fn unknown_route_uses_error_shape() {
    let (s, v) = call(&loaded_app(), "GET", "/v2/nothing", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&v), "not_found");
}
