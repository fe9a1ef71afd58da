use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use qreward_core::corpus::{box_ground_state_fixture, Corruptor, SyntheticCorpus};
use qreward_core::fusion::{RewardBreakdown, ScoreMode};
use qreward_core::harness::stub_oracle_corpus;
use qreward_core::ses::Indicator;
use qreward_core::vrm::{train, TrainConfig};
use qreward_service::config::{JudgeKind, ServiceConfig};
use qreward_service::server::{serve_background, AppState, BonResponse, ScoreRequest, SEED_HEADER};
use qreward_service::{build_engine, load_model, LoadedModel};
use serde_json::{json, Value};

struct Fixture {
    _dir: tempfile::TempDir,
    model_path: PathBuf,
    loaded: LoadedModel,
    addr: SocketAddr,
}

fn model_file() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = stub_oracle_corpus(21, 300).unwrap();
        let model = train(&data, &TrainConfig::default()).unwrap().model;
        let model_path = dir.path().join("model.json");
        model.save(&model_path).unwrap();
        let loaded = load_model(&model_path).unwrap();
        let addr = start(&ServiceConfig::default(), &loaded);
        Fixture {
            _dir: dir,
            model_path,
            loaded,
            addr,
        }
    })
}

fn start(cfg: &ServiceConfig, loaded: &LoadedModel) -> SocketAddr {
    let engine = build_engine(cfg, loaded.model.clone()).unwrap();
    let state = Arc::new(AppState::new(
        engine,
        loaded.hash.clone(),
        cfg.max_concurrency,
        cfg.max_candidates,
        cfg.body_limit,
    ));
    serve_background("127.0.0.1:0".parse().unwrap(), state).unwrap()
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

fn post(addr: SocketAddr, path: &str, body: &str, seed: Option<&str>) -> (u16, String) {
    let mut req = agent().post(format!("http://{addr}{path}")).header("content-type", "application/json");
    if let Some(s) = seed {
        req = req.header(SEED_HEADER, s);
    }
    let mut resp = req.send(body).unwrap();
    (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
}

fn score_body(question: &str, answer: &str) -> String {
    json!({ "question": question, "answer": answer }).to_string()
}

#[test]
fn test_box_fixture_over_http() {
    let f = model_file();
    let fixture = box_ground_state_fixture();
    let (status, body) = post(f.addr, "/v1/score", &score_body(&fixture.question, &fixture.answer), None);
    assert_eq!(status, 200, "{body}");
    assert!(body.contains(r#""v":{"Corr":1,"Phys":-1,"Inst":0}"#), "{body}");
    let b: RewardBreakdown = serde_json::from_str(&body).unwrap();
    assert_eq!(b.mode, ScoreMode::Vrm);
    assert!(b.dimensions.phys.fused < 1.0 && b.dimensions.corr.fused == 1.0);
}

#[test]
fn test_empty_answer_has_no_verdicts() {
    let f = model_file();
    let (status, body) = post(f.addr, "/v1/score", &score_body("What is [a, adag]?", ""), None);
    assert_eq!(status, 200);
    let b: RewardBreakdown = serde_json::from_str(&body).unwrap();
    assert!(b.v.to_array().iter().all(|v| *v == Indicator::Unavailable));
}

#[test]
fn test_http_matches_in_process_on_random_fixtures() {
    let f = model_file();
    let engine = build_engine(&ServiceConfig::default(), f.loaded.model.clone()).unwrap();
    let mut corpus = SyntheticCorpus::new(404);
    let corruptor = Corruptor::new(1.0, 3);
    for i in 0..100u64 {
        let mut record = corpus.positive();
        if i % 2 == 1 {
            record = corruptor.corrupt(&record, i).unwrap_or(record);
        }
        let request = ScoreRequest {
            question: record.question.clone(),
            answer: record.answer.clone(),
            reference_answer: record.reference_answer.clone(),
            task_type: Some(record.task_type),
        };
        let (status, body) = post(f.addr, "/v1/score", &serde_json::to_string(&request).unwrap(), None);
        assert_eq!(status, 200);
        let remote: RewardBreakdown = serde_json::from_str(&body).unwrap();
        let local = engine.reward(&request.record()).unwrap();
        assert_eq!(remote, local, "record {i}");
        assert_eq!(remote.reward.to_bits(), local.reward.to_bits());
    }
}

#[test]
fn test_identical_requests_give_identical_bodies() {
    let f = model_file();
    let body = score_body("Find the spectrum of sigma_x.", "@claim{kind=eigenvalues, m=[[0,1],[1,0]], values=[-1,1]}");
    let first = post(f.addr, "/v1/score", &body, None);
    assert_eq!(first.0, 200, "{}", first.1);
    let handles: Vec<_> = (0..16)
        .map(|_| {
            let body = body.clone();
            let addr = f.addr;
            std::thread::spawn(move || post(addr, "/v1/score", &body, None))
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), first);
    }
    let seeded = post(f.addr, "/v1/score", &body, Some("99"));
    assert_eq!(seeded.0, 200);
    assert_eq!(post(f.addr, "/v1/score", &body, Some("99")), seeded);
}

#[test]
fn test_request_errors() {
    let f = model_file();
    assert_eq!(post(f.addr, "/v1/score", "{not json", None).0, 400);
    assert_eq!(post(f.addr, "/v1/score", r#"{"question":"q"}"#, None).0, 400);
    assert_eq!(post(f.addr, "/v1/score", &score_body("q", "a"), Some("minus-one")).0, 400);
    let huge = score_body("q", &"x".repeat(300 * 1024));
    assert_eq!(post(f.addr, "/v1/score", &huge, None).0, 413);
}

#[test]
fn test_best_of_n_endpoint() {
    let f = model_file();
    let (status, body) = post(f.addr, "/v1/bon", &json!({"question": "q", "candidates": ["only"]}).to_string(), None);
    assert_eq!(status, 200);
    assert_eq!(serde_json::from_str::<BonResponse>(&body).unwrap().selected, 0);

    assert_eq!(post(f.addr, "/v1/bon", &json!({"question": "q", "candidates": []}).to_string(), None).0, 400);
    let many: Vec<String> = (0..65).map(|i| format!("answer {i}")).collect();
    assert_eq!(post(f.addr, "/v1/bon", &json!({"question": "q", "candidates": many}).to_string(), None).0, 422);

    // one valid answer among seven corrupted copies
    let mut corpus = SyntheticCorpus::new(8);
    let corruptor = Corruptor::new(1.0, 1);
    for _ in 0..5 {
        let record = corpus.positive();
        let mut candidates: Vec<String> = (0..7u64)
            .map(|salt| corruptor.corrupt_text(&record.answer, salt).unwrap())
            .collect();
        candidates.insert(3, record.answer.clone());
        let request = json!({
            "question": record.question,
            "candidates": candidates,
            "reference_answer": record.reference_answer,
        });
        let (status, body) = post(f.addr, "/v1/bon", &request.to_string(), None);
        assert_eq!(status, 200);
        let out: BonResponse = serde_json::from_str(&body).unwrap();
        assert_eq!(out.selected, 3, "{:?}", out.breakdowns.iter().map(|b| b.reward).collect::<Vec<_>>());
        assert_eq!(out.breakdowns.len(), 8);
    }
}

#[test]
fn test_verify_endpoint() {
    let f = model_file();
    let fixture = box_ground_state_fixture();
    let (status, body) = post(f.addr, "/v1/verify", &score_body(&fixture.question, &fixture.answer), None);
    assert_eq!(status, 200);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["v"], json!({"Corr": 1, "Phys": -1, "Inst": 0}));
    assert_eq!(v["reports"].as_array().unwrap().len(), 12);
}

#[test]
fn test_healthz_hash_tracks_file_bytes() {
    let f = model_file();
    let mut resp = agent().get(format!("http://{}/healthz", f.addr)).call().unwrap();
    let health: Value = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!(health["status"], "ok");
    assert_eq!(health["model_hash"], f.loaded.hash.as_str());
    assert_eq!(health["model_version"], 1);

    let again = load_model(&f.model_path).unwrap();
    assert_eq!(again.hash, f.loaded.hash);
    let dir = tempfile::tempdir().unwrap();
    let mut other = (*f.loaded.model).clone();
    other.params[0] += 1e-3;
    let path = dir.path().join("other.json");
    other.save(&path).unwrap();
    assert_ne!(load_model(&path).unwrap().hash, f.loaded.hash);
}

#[test]
fn test_passthrough_with_unreachable_judge_is_503() {
    let f = model_file();
    let mut cfg = ServiceConfig {
        mode: ScoreMode::JudgePassthrough,
        ..ServiceConfig::default()
    };
    cfg.judge.backend = JudgeKind::Remote;
    cfg.judge.remote.endpoint = "http://127.0.0.1:9/v1/judge".into();
    cfg.judge.remote.timeout_secs = 2;
    let addr = start(&cfg, &f.loaded);
    let (status, body) = post(addr, "/v1/score", &score_body("q", "a"), None);
    assert_eq!(status, 503, "{body}");
    // the stub judge is always available
    cfg.judge.backend = JudgeKind::Stub;
    let addr = start(&cfg, &f.loaded);
    let (status, body) = post(addr, "/v1/score", &score_body("q", "a"), None);
    assert_eq!(status, 200);
    assert!(body.contains(r#""mode":"judge_passthrough""#));
}
