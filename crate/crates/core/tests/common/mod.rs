//! Helpers shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use deliberate::api::{Service, ServiceConfig};
use deliberate::backend::{
    HeuristicQuality, HeuristicStance, QualityRequest, QualityResponse, RemoteConfig, RemoteScorer, StanceRequest,
    StanceResponse,
};
use deliberate::domain::{
    CommentId, DebateId, ModuleKind, NewComment, NewDebate, ParticipantId, StanceLabel, StanceRecord,
    Suggestion, WeightVector, INDICATOR_COUNT,
};
use deliberate::pipeline::{Clock, ManualClock, Pipeline, ScoringJob};
use deliberate::recommend::Recommender;
use deliberate::store::Store;
use deliberate::Error;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use tempfile::TempDir;

pub const SECRET: &str = "test-admin-secret";

pub fn config_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("config").join(name)
}

pub fn temp_store() -> (TempDir, Arc<Store>) {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::open(dir.path()).unwrap());
    (dir, store)
}

pub fn heuristic_pipeline(store: Arc<Store>) -> Pipeline {
    Pipeline::new(
        store,
        Arc::new(HeuristicStance::default()),
        Arc::new(HeuristicQuality::default()),
        Arc::new(WeightVector::placeholder()),
    )
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .unwrap()
}

// Scripted remote scorer.

#[derive(Default)]
struct StubState {
    script: Mutex<VecDeque<u16>>,
    hits: AtomicUsize,
}

impl StubState {
    /// Next scripted status; 200 once the script is used up.
    fn next(&self) -> StatusCode {
        self.hits.fetch_add(1, Ordering::SeqCst);
        let code = self.script.lock().unwrap().pop_front().unwrap_or(200);
        StatusCode::from_u16(code).unwrap()
    }
}

/// An HTTP scorer that answers requests with a scripted sequence of status
/// codes. Successful stance answers are `in_favor` with p 0.8; successful
/// quality answers are all-0.5 predictions.
pub struct StubScorer {
    pub base_url: String,
    state: Arc<StubState>,
    _rt: tokio::runtime::Runtime,
}

impl StubScorer {
    pub fn start(script: &[u16]) -> Self {
        let state = Arc::new(StubState {
            script: Mutex::new(script.iter().copied().collect()),
            hits: AtomicUsize::new(0),
        });
        let rt = runtime();
        let s1 = Arc::clone(&state);
        let s2 = Arc::clone(&state);
        let app = Router::new()
            .route(
                "/stance",
                post(move |Json(_req): Json<StanceRequest>| {
                    let s = Arc::clone(&s1);
                    async move {
                        let status = s.next();
                        if !status.is_success() {
                            return (status, Json(json!({"error": "scripted"})));
                        }
                        let body = StanceResponse {
                            label: StanceLabel::InFavor,
                            p_favor: 0.8,
                            model_version: "stub-1".into(),
                        };
                        (status, Json(serde_json::to_value(body).unwrap()))
                    }
                }),
            )
            .route(
                "/quality",
                post(move |Json(_req): Json<QualityRequest>| {
                    let s = Arc::clone(&s2);
                    async move {
                        let status = s.next();
                        if !status.is_success() {
                            return (status, Json(json!({"error": "scripted"})));
                        }
                        let body = QualityResponse {
                            predictions: vec![0.5; INDICATOR_COUNT],
                            model_version: "stub-1".into(),
                        };
                        (status, Json(serde_json::to_value(body).unwrap()))
                    }
                }),
            )
            .route("/health", get(|| async { "ok" }));
        let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
        let addr = listener.local_addr().unwrap();
        rt.spawn(async move { axum::serve(listener, app).await.unwrap() });
        StubScorer {
            base_url: format!("http://{addr}"),
            state,
            _rt: rt,
        }
    }

    pub fn hits(&self) -> usize {
        self.state.hits.load(Ordering::SeqCst)
    }
}

// Service under test.

pub struct TestServer {
    pub base: String,
    pub pipeline: Arc<Pipeline>,
    pub dir: TempDir,
    http: ureq::Agent,
    _rt: tokio::runtime::Runtime,
}

pub struct Reply {
    pub status: u16,
    pub body: Value,
    pub text: String,
}

impl TestServer {
    /// Starts the service on an ephemeral port without background workers,
    /// so tests decide when jobs run.
    pub fn start(adjust: impl FnOnce(&mut ServiceConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ServiceConfig::new(dir.path(), SECRET);
        config.weights_file = Some(config_file("weights.placeholder.txt"));
        config.workers = 0;
        adjust(&mut config);
        let service = Service::build(&config).unwrap();
        let pipeline = Arc::clone(service.pipeline());
        let rt = runtime();
        let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
        let addr = listener.local_addr().unwrap();
        rt.spawn(service.serve(listener, std::future::pending()));
        let http = ureq::Agent::new_with_config(
            ureq::Agent::config_builder()
                .http_status_as_error(false)
                .timeout_global(Some(std::time::Duration::from_secs(30)))
                .build(),
        );
        TestServer {
            base: format!("http://{addr}"),
            pipeline,
            dir,
            http,
            _rt: rt,
        }
    }

    pub fn store(&self) -> &Arc<Store> {
        self.pipeline.store()
    }

    pub fn drain(&self) {
        self.pipeline.drain().unwrap();
    }

    pub fn request(&self, method: &str, path: &str, token: Option<&str>, body: Option<String>) -> Reply {
        let url = format!("{}{}", self.base, path);
        let auth = token.map(|t| format!("Bearer {t}"));
        let result = match method {
            "GET" => {
                let mut r = self.http.get(&url);
                if let Some(a) = &auth {
                    r = r.header("Authorization", a);
                }
                r.call()
            }
            "POST" | "PUT" => {
                let mut r = if method == "POST" { self.http.post(&url) } else { self.http.put(&url) };
                if let Some(a) = &auth {
                    r = r.header("Authorization", a);
                }
                match body {
                    Some(b) => r.header("Content-Type", "application/json").send(b),
                    None => r.send_empty(),
                }
            }
            other => panic!("unsupported method {other}"),
        };
        let mut resp = result.unwrap_or_else(|e| panic!("{method} {path}: {e}"));
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().unwrap();
        let body = serde_json::from_str(&text).unwrap_or(Value::Null);
        Reply { status, body, text }
    }

    pub fn get(&self, path: &str, token: Option<&str>) -> Reply {
        self.request("GET", path, token, None)
    }

    pub fn post(&self, path: &str, token: Option<&str>, body: Value) -> Reply {
        self.request("POST", path, token, Some(body.to_string()))
    }

    pub fn put(&self, path: &str, token: Option<&str>, body: Value) -> Reply {
        self.request("PUT", path, token, Some(body.to_string()))
    }

    pub fn session(&self, name: &str) -> (i64, String) {
        let r = self.post("/api/sessions", None, json!({ "display_name": name }));
        assert_eq!(r.status, 201, "{}", r.text);
        (
            r.body["participant_id"].as_i64().unwrap(),
            r.body["token"].as_str().unwrap().to_string(),
        )
    }

    pub fn comment(&self, debate: i64, token: &str, body: &str) -> i64 {
        let r = self.post(&format!("/api/debates/{debate}/comments"), Some(token), json!({ "body": body }));
        assert_eq!(r.status, 201, "{}", r.text);
        r.body["comment_id"].as_i64().unwrap()
    }
}

fn ids(v: &Value, key: &str) -> Vec<i64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|c| c[key].as_i64().unwrap())
        .collect()
}

/// The scripted end-to-end session over every route. Panics on the first
/// mismatch.
pub fn api_scenario() {
    let srv = TestServer::start(|_| {});
    let admin = Some(SECRET);

    let h = srv.get("/api/health", None);
    assert_eq!((h.status, h.body["status"].as_str()), (200, Some("ok")), "{}", h.text);

    let (alice, alice_t) = srv.session("alice");
    let (_bob, bob_t) = srv.session("bob");
    let (_carol, carol_t) = srv.session("carol");
    let (alice_t, bob_t, carol_t) = (alice_t.as_str(), bob_t.as_str(), carol_t.as_str());
    assert_ne!(alice_t, bob_t);

    // Rejected requests leave the store as it was.
    let before = srv.store().dump().unwrap();
    let new_debate = json!({ "question": "Should the city ban cars downtown?", "module_kind": "quality" });
    assert_eq!(srv.post("/api/debates", None, new_debate.clone()).status, 401);
    assert_eq!(srv.post("/api/debates", Some("bogus"), new_debate.clone()).status, 401);
    assert_eq!(srv.post("/api/debates", Some(alice_t), new_debate.clone()).status, 403);
    assert_eq!(srv.post("/api/debates/1/comments", None, json!({"body": "x"})).status, 401);
    assert_eq!(srv.put("/api/debates/1/stance", Some("bogus"), json!({"label": "against"})).status, 401);
    assert_eq!(
        srv.request("POST", "/api/admin/labeled-examples", Some(alice_t), Some(String::new())).status,
        403
    );
    assert_eq!(srv.store().dump().unwrap(), before);

    // Debates.
    let q = srv.post(
        "/api/debates",
        admin,
        json!({ "question": "Should the city ban cars downtown?", "module_kind": "quality", "top_k": 2, "threshold": 1.5 }),
    );
    assert_eq!(q.status, 201, "{}", q.text);
    let qd = q.body["debate_id"].as_i64().unwrap();
    let r = srv.post(
        "/api/debates",
        admin,
        json!({ "question": "Should the library open on Sundays?", "module_kind": "recommendation" }),
    );
    assert_eq!(r.status, 201, "{}", r.text);
    let rd = r.body["debate_id"].as_i64().unwrap();
    assert_eq!(r.body["top_k"], 3);
    assert_eq!(
        srv.post("/api/debates", admin, json!({ "question": " ", "module_kind": "quality" })).status,
        400
    );
    let got = srv.get(&format!("/api/debates/{qd}"), Some(bob_t));
    assert_eq!((got.status, got.body["threshold"].as_f64()), (200, Some(1.5)));
    assert_eq!(ids(&srv.get("/api/debates", Some(bob_t)).body, "debate_id"), vec![qd, rd]);
    assert_eq!(srv.get("/api/debates/999", Some(bob_t)).status, 404);

    // Quality debate. Placeholder weights: s_min = -1, s_max = 3.
    let c1 = srv.comment(qd, alice_t, "Nice weather today.");
    let c2 = srv.comment(qd, bob_t, "because we should, @anna");
    let c3 = srv.comment(qd, carol_t, "because because we should we should @a you said");
    let c4 = srv.comment(qd, alice_t, "yeah right");
    let c5 = srv.comment(qd, bob_t, "Only because.");
    let reply = srv.post(
        &format!("/api/debates/{qd}/comments"),
        Some(carol_t),
        json!({ "body": "thanks for that", "parent_id": c1 }),
    );
    assert_eq!(reply.status, 201, "{}", reply.text);
    let c6 = reply.body["comment_id"].as_i64().unwrap();
    assert_eq!(reply.body["parent_id"], c1);
    assert_eq!(
        srv.post(&format!("/api/debates/{qd}/comments"), Some(carol_t), json!({ "body": "" })).status,
        400
    );

    // Readable before scoring; nothing is top yet.
    let s = srv.get(&format!("/api/comments/{c2}/score"), Some(alice_t));
    assert_eq!((s.status, s.body["status"].as_str()), (200, Some("pending")), "{}", s.text);
    let listing = srv.get(&format!("/api/debates/{qd}/comments"), Some(alice_t));
    assert_eq!(ids(&listing.body["comments"], "comment_id"), vec![c1, c2, c3, c4, c5, c6]);
    assert!(listing.body["comments"].as_array().unwrap().iter().all(|c| c["is_top"] == false));

    srv.drain();

    // Scores 1.25, 3.125, 5.0, 0.625, 1.875, 1.25 against threshold 1.5, top 2.
    let listing = srv.get(&format!("/api/debates/{qd}/comments"), Some(alice_t));
    let comments = listing.body["comments"].as_array().unwrap();
    assert_eq!(ids(&listing.body["comments"], "comment_id"), vec![c3, c2, c1, c4, c5, c6]);
    let flags: Vec<bool> = comments.iter().map(|c| c["is_top"].as_bool().unwrap()).collect();
    assert_eq!(flags, vec![true, true, false, false, false, false]);
    let top = srv.get(&format!("/api/debates/{qd}/top"), Some(bob_t));
    assert_eq!(top.status, 200, "{}", top.text);
    assert_eq!(ids(&top.body["comments"], "comment_id"), vec![c3, c2]);
    assert_eq!(top.body["comments"][0]["normalized"].as_f64(), Some(5.0));
    assert_eq!(top.body["comments"][1]["normalized"].as_f64(), Some(3.125));
    let s = srv.get(&format!("/api/comments/{c5}/score"), Some(alice_t));
    assert_eq!(s.body["status"], "scored");
    assert_eq!(s.body["kind"], "quality");
    assert_eq!(s.body["quality"]["normalized"].as_f64(), Some(1.875));
    assert_eq!(srv.get("/api/comments/999/score", Some(alice_t)).status, 404);

    // Recommendation debate.
    assert_eq!(
        srv.put(&format!("/api/debates/{qd}/stance"), Some(alice_t), json!({ "label": "against" })).status,
        422
    );
    assert_eq!(srv.get(&format!("/api/debates/{rd}/top"), Some(alice_t)).status, 422);
    let r1 = srv.comment(rd, carol_t, "I fully support this proposal");
    let r2 = srv.comment(rd, bob_t, "I oppose this; I disagree");
    let r3 = srv.comment(rd, carol_t, "Yes, I think so.");
    let r4 = srv.comment(rd, bob_t, "Not sure what to make of it.");
    srv.drain();

    let none = srv.get(&format!("/api/debates/{rd}/stance"), Some(alice_t));
    assert_eq!((none.status, &none.body["stance"]), (200, &Value::Null));
    let early = srv.get(&format!("/api/debates/{rd}/recommendation"), Some(alice_t));
    assert_eq!((early.status, early.body["error"].as_str()), (428, Some("stance_required")));
    assert_eq!(
        srv.put(&format!("/api/debates/{rd}/stance"), Some(alice_t), json!({ "label": "maybe" })).status,
        400
    );
    let decl = srv.put(&format!("/api/debates/{rd}/stance"), Some(alice_t), json!({ "label": "against" }));
    assert_eq!(decl.status, 200, "{}", decl.text);
    assert_eq!(decl.body["source"], "declared");
    let got = srv.get(&format!("/api/debates/{rd}/stance"), Some(alice_t));
    assert_eq!(got.body["stance"]["label"], "against");
    assert_eq!(got.body["stance"]["subject"]["participant_id"], alice);

    let first = srv.get(&format!("/api/debates/{rd}/recommendation"), Some(alice_t));
    assert_eq!(first.status, 200, "{}", first.text);
    let target = first.body["comment"]["comment_id"].as_i64().unwrap();
    assert!([r1, r3].contains(&target), "suggested {target}");
    assert_eq!(first.body["suggestion"]["comment_id"], target);
    let again = srv.get(&format!("/api/debates/{rd}/recommendation"), Some(alice_t));
    assert_eq!(again.body["suggestion"], first.body["suggestion"]);
    let second = srv.post(&format!("/api/debates/{rd}/recommendation/next"), Some(alice_t), json!({}));
    let other = second.body["comment"]["comment_id"].as_i64().unwrap();
    assert_eq!(HashSet::from([target, other]), HashSet::from([r1, r3]));
    let empty = srv.post(&format!("/api/debates/{rd}/recommendation/next"), Some(alice_t), json!({}));
    assert_eq!(empty.status, 200);
    assert_eq!(empty.body, json!({ "suggestion": null, "comment": null }));

    let sid = second.body["suggestion"]["suggestion_id"].as_i64().unwrap();
    let path = format!("/api/suggestions/{sid}/reply");
    assert_eq!(srv.post(&path, Some(bob_t), json!({ "body": "not mine" })).status, 403);
    let rep = srv.post(&path, Some(alice_t), json!({ "body": "I disagree, it is harmful" }));
    assert_eq!(rep.status, 201, "{}", rep.text);
    assert_eq!(rep.body["comment"]["parent_id"], other);
    let reply_id = rep.body["comment"]["comment_id"].as_i64().unwrap();
    assert_eq!(rep.body["suggestion"]["reply_comment_id"], reply_id);
    assert_eq!(srv.post(&path, Some(alice_t), json!({ "body": "again" })).status, 409);
    assert_eq!(srv.post("/api/suggestions/999/reply", Some(alice_t), json!({ "body": "x" })).status, 404);

    let s = srv.get(&format!("/api/comments/{reply_id}/score"), Some(alice_t));
    assert_eq!(s.body["status"], "pending");
    srv.drain();
    let s = srv.get(&format!("/api/comments/{reply_id}/score"), Some(alice_t));
    assert_eq!((s.body["status"].as_str(), s.body["kind"].as_str()), (Some("scored"), Some("stance")));
    assert_eq!(s.body["stance"]["label"], "against");
    let listing = srv.get(&format!("/api/debates/{rd}/comments"), Some(bob_t));
    assert_eq!(ids(&listing.body["comments"], "comment_id"), vec![r1, r2, r3, r4, reply_id]);

    // Admin exports. Margins: r4 0, r1 and r3 about 0.231, r2 and the reply about 0.381.
    assert_eq!(srv.get(&format!("/api/admin/debates/{rd}/uncertain"), Some(alice_t)).status, 403);
    let unc = srv.get(&format!("/api/admin/debates/{rd}/uncertain"), admin);
    assert_eq!(unc.status, 200, "{}", unc.text);
    assert_eq!(ids(&unc.body, "comment_id"), vec![r4, r1, r3, r2, reply_id]);
    let margins: Vec<f64> = unc.body.as_array().unwrap().iter().map(|u| u["margin"].as_f64().unwrap()).collect();
    assert!(margins.windows(2).all(|w| w[0] <= w[1]));
    let limited = srv.get(&format!("/api/admin/debates/{rd}/uncertain?limit=2"), admin);
    assert_eq!(ids(&limited.body, "comment_id"), vec![r4, r1]);

    let file = concat!(
        r#"{"question":"Should the library open on Sundays?","body":"Yes, families need it.","label":"in_favor","origin":"synthetic"}"#,
        "\n",
        r#"{"question":"Should the library open on Sundays?","body":"Staff need a day off.","label":"against","origin":"manual"}"#,
        "\n"
    );
    let imp = srv.request("POST", "/api/admin/labeled-examples", admin, Some(file.to_string()));
    assert_eq!((imp.status, &imp.body), (200, &json!({ "stored": 2, "duplicates": 0 })), "{}", imp.text);
    let imp = srv.request("POST", "/api/admin/labeled-examples", admin, Some(file.to_string()));
    assert_eq!(imp.body, json!({ "stored": 0, "duplicates": 2 }));
    let bad = srv.request("POST", "/api/admin/labeled-examples", admin, Some(format!("{file}{{\"question\":1}}\n")));
    assert_eq!(bad.status, 400);
    let all = srv.get("/api/admin/labeled-examples", admin);
    assert_eq!(all.text, file);
    let manual = srv.get("/api/admin/labeled-examples?origin=manual", admin);
    assert_eq!(manual.text.lines().count(), 1);
    assert!(manual.text.contains("Staff need a day off."));
    assert_eq!(srv.get("/api/admin/labeled-examples?origin=bogus", admin).status, 400);

    let h = srv.get("/api/health", None);
    assert_eq!(h.status, 200);
    assert_eq!(h.body["jobs_done"], 11);
    assert_eq!(h.body["jobs_pending"], 0);
    assert_eq!(h.body["jobs_failed"], 0);
    assert_eq!(h.body["store_ok"], true);

    assert_eq!(srv.get("/api/nope", None).status, 404);
}

// Recommendation scenarios.

/// Independent reimplementation of the suggestion generator.
#[derive(Clone, Copy)]
struct ModelLcg(u32);

impl ModelLcg {
    fn pick(&mut self, len: usize) -> usize {
        self.0 = ((self.0 as u64 * 1_664_525 + 1_013_904_223) % (1u64 << 32)) as u32;
        (self.0 as u64 % len as u64) as usize
    }
}

struct ModelParticipant {
    label: StanceLabel,
    epoch: u32,
    shown: HashSet<CommentId>,
    rng: ModelLcg,
}

/// A random debate with up to 20 participants and 200 comments, driven by a
/// random sequence of declarations and suggestion requests. Every served
/// suggestion is checked against an independent model of the pool and the
/// generator; afterwards every persisted suggestion is rechecked against the
/// declaration history. Returns the persisted suggestions.
pub fn recommendation_scenario(scenario_seed: u64, lcg_seed: u32) -> Vec<Suggestion> {
    let (_dir, store) = temp_store();
    let mut rng = StdRng::seed_from_u64(scenario_seed);
    let rec = Recommender::new(Arc::clone(&store), lcg_seed);
    let debate = store
        .create_debate(&NewDebate::new("Q?", ModuleKind::Recommendation), Default::default())
        .unwrap()
        .debate_id;

    let n_participants = rng.random_range(2..=20);
    let participants: Vec<ParticipantId> = (0..n_participants)
        .map(|i| store.create_participant(&format!("p{i}"), &format!("tok-{scenario_seed}-{i}")).unwrap().participant_id)
        .collect();
    let n_comments = rng.random_range(0..=200);
    let mut author_of = HashMap::new();
    let mut predicted = HashMap::new();
    for i in 0..n_comments {
        let author = participants[rng.random_range(0..participants.len())];
        let (c, _) = store
            .append_comment_with_event(&NewComment::new(debate, author, format!("comment {i}")))
            .unwrap();
        author_of.insert(c.comment_id, author);
        // About one in ten comments stays unscored.
        if rng.random_bool(0.9) {
            let p: f64 = rng.random_range(0.01..0.99);
            let rec = StanceRecord::predicted(c.comment_id, p, "fixture").unwrap();
            predicted.insert(c.comment_id, rec.label);
            store.put_stance(&rec).unwrap();
        }
    }

    let mut model: HashMap<ParticipantId, ModelParticipant> = HashMap::new();
    let steps = rng.random_range(50..=300);
    for _ in 0..steps {
        let p = participants[rng.random_range(0..participants.len())];
        let declare = !model.contains_key(&p) && rng.random_bool(0.7) || rng.random_bool(0.05);
        if declare {
            let label = if rng.random_bool(0.5) { StanceLabel::InFavor } else { StanceLabel::Against };
            rec.declare_stance(p, debate, label).unwrap();
            let epoch = model.get(&p).map_or(1, |m| m.epoch + 1);
            model.insert(
                p,
                ModelParticipant {
                    label,
                    epoch,
                    shown: HashSet::new(),
                    rng: ModelLcg(lcg_seed),
                },
            );
            continue;
        }
        let got = rec.suggest(p, debate);
        let Some(m) = model.get_mut(&p) else {
            assert!(matches!(got, Err(Error::StanceRequired(_))), "undeclared participant got {got:?}");
            continue;
        };
        let mut pool: Vec<CommentId> = predicted
            .iter()
            .filter(|(id, label)| **label == m.label.opposite() && author_of[id] != p && !m.shown.contains(id))
            .map(|(id, _)| *id)
            .collect();
        pool.sort();
        let got = got.unwrap();
        if pool.is_empty() {
            assert!(got.is_none(), "exhausted pool served {got:?}");
            continue;
        }
        let expected = pool[m.rng.pick(pool.len())];
        let s = got.expect("non-empty pool served nothing");
        assert_eq!(s.comment_id, expected);
        assert_eq!(s.epoch, m.epoch);
        m.shown.insert(s.comment_id);
    }

    // Recheck what was persisted.
    let suggestions = store.suggestions(debate).unwrap();
    let mut seen = HashSet::new();
    for s in &suggestions {
        let history = store.declaration_history(s.participant_id, debate).unwrap();
        let decl = history.iter().find(|d| d.epoch == s.epoch).expect("suggestion without declaration");
        assert_eq!(Some(&decl.label.opposite()), predicted.get(&s.comment_id));
        assert_ne!(author_of[&s.comment_id], s.participant_id);
        assert!(seen.insert((s.participant_id, s.epoch, s.comment_id)), "repeat within an epoch");
    }
    suggestions
}

/// Comment bodies whose stance markers vary: pro and con markers, repeats,
/// casing and punctuation.
pub fn stance_corpus() -> Vec<String> {
    let pro = ["support", "agree", "in favor", "good idea", "benefit", "yes"];
    let con = ["oppose", "disagree", "against", "bad idea", "reject", "harmful"];
    let fillers = ["the plan", "honestly", "for the city", "as it stands", "overall"];
    let mut rng = StdRng::seed_from_u64(50);
    (0..50)
        .map(|i| {
            let mut words = Vec::new();
            for _ in 0..rng.random_range(0..4) {
                words.push(pro[rng.random_range(0..pro.len())].to_string());
            }
            for _ in 0..rng.random_range(0..4) {
                words.push(con[rng.random_range(0..con.len())].to_string());
            }
            words.push(fillers[i % fillers.len()].to_string());
            if i % 3 == 0 {
                words.iter_mut().for_each(|w| *w = w.to_uppercase());
            }
            // Deterministic shuffle.
            for j in (1..words.len()).rev() {
                words.swap(j, rng.random_range(0..=j));
            }
            format!("{}.", words.join(", "))
        })
        .collect()
}

pub fn debate_id(v: i64) -> DebateId {
    DebateId(v)
}

// Pipeline end to end.

pub struct PipelineRun {
    pub comments: usize,
    pub elapsed: std::time::Duration,
}

const BODIES: [&str; 10] = [
    "I support this because it helps families.",
    "I oppose this; I disagree with the plan.",
    "We should try a pilot first, @maria.",
    "Yeah right, as if that ever works.",
    "Good idea, thanks for proposing it!",
    "Is there any study on this?",
    "Honestly I am not sure.",
    "This is harmful and I reject it because of the costs.",
    "In my opinion the benefit is clear, yes.",
    "I remember last year when this was tried.",
];

/// Posts 100 comments (some of them replies) across a recommendation and a
/// quality debate, drains with heuristic backends and checks that every
/// comment has exactly one score of the right kind with the expected value,
/// then that rerunning every job and replaying every event changes nothing.
pub fn pipeline_e2e() -> PipelineRun {
    use deliberate::quality::score_comment;
    use deliberate::stance::predict_stance;

    let started = std::time::Instant::now();
    let (dir, store) = temp_store();
    let pipeline = heuristic_pipeline(Arc::clone(&store));
    let rec = store
        .create_debate(&NewDebate::new("Should the park get more benches?", ModuleKind::Recommendation), Default::default())
        .unwrap();
    let qual = store
        .create_debate(&NewDebate::new("Should the park get more benches?", ModuleKind::Quality), Default::default())
        .unwrap();
    let authors: Vec<ParticipantId> = (0..10)
        .map(|i| store.create_participant(&format!("p{i}"), &format!("e2e-{i}")).unwrap().participant_id)
        .collect();
    let mut posted = Vec::new();
    for i in 0..100usize {
        let debate = if i % 2 == 0 { &rec } else { &qual };
        let mut new = NewComment::new(debate.debate_id, authors[i % authors.len()], BODIES[i % BODIES.len()]);
        if i >= 10 && i % 5 == 0 {
            // Reply to an earlier comment of the same debate.
            let parent: &deliberate::domain::Comment = &posted[i - 10];
            new = new.reply_to(parent.comment_id);
        }
        let (c, job) = store.append_comment_with_event(&new).unwrap();
        assert_eq!(job.comment_id, c.comment_id);
        posted.push(c);
    }
    let stats = pipeline.drain().unwrap();
    assert_eq!((stats.processed, stats.failed), (100, 0));

    let conn = rusqlite::Connection::open_with_flags(
        dir.path().join(deliberate::store::DB_FILE),
        rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY,
    )
    .unwrap();
    let count = |table: &str, id: CommentId| -> i64 {
        conn.query_row(&format!("SELECT COUNT(*) FROM {table} WHERE comment_id = ?1"), [id.0], |r| r.get(0))
            .unwrap()
    };
    let stance_backend = HeuristicStance::default();
    let quality_backend = HeuristicQuality::default();
    for c in &posted {
        let (stances, scores) = (count("comment_stances", c.comment_id), count("quality_scores", c.comment_id));
        if c.debate_id == rec.debate_id {
            assert_eq!((stances, scores), (1, 0), "comment {}", c.comment_id);
            let expected = predict_stance(c.comment_id, &rec.question, &c.body, &stance_backend).unwrap();
            assert_eq!(store.comment_stance(c.comment_id).unwrap(), Some(expected));
        } else {
            assert_eq!((stances, scores), (0, 1), "comment {}", c.comment_id);
            let expected = score_comment(c, pipeline.weights(), &quality_backend).unwrap();
            assert_eq!(store.quality_score(c.comment_id).unwrap(), Some(expected));
        }
    }

    let before = store.dump().unwrap();
    assert_eq!(pipeline.reprocess_done().unwrap(), 100);
    assert_eq!(store.dump().unwrap(), before, "rerunning jobs changed the store");
    for c in &posted {
        pipeline.on_comment_created(c.comment_id).unwrap();
    }
    pipeline.drain().unwrap();
    assert_eq!(store.dump().unwrap(), before, "replayed events changed the store");
    let counts = pipeline.counts().unwrap();
    assert_eq!((counts.pending, counts.done, counts.failed), (0, 100, 0));

    PipelineRun {
        comments: posted.len(),
        elapsed: started.elapsed(),
    }
}

// Labeled examples.

pub fn labeled_fixture(n: usize) -> Vec<deliberate::stance::LabeledExample> {
    use deliberate::stance::{LabeledExample, Origin};
    let mut rng = StdRng::seed_from_u64(n as u64);
    (0..n)
        .map(|i| {
            let label = if rng.random_bool(0.5) { StanceLabel::InFavor } else { StanceLabel::Against };
            let origin = if i % 4 == 0 { Origin::Manual } else { Origin::Synthetic };
            let body = match i % 3 {
                0 => format!("Example {i}: plain text."),
                1 => format!("Example {i} with \"quotes\", a tab\tand ümlauts."),
                _ => format!("Example {i}\nspanning two lines."),
            };
            LabeledExample::new(format!("Question {}?", i % 7), body, label, origin).unwrap()
        })
        .collect()
}

/// Export of a 100-example store ingested into a fresh store reproduces it;
/// a file with one malformed line stores nothing.
pub fn labeled_round_trip() {
    use deliberate::stance::OriginFilter;
    let examples = labeled_fixture(100);
    let (_a, first) = temp_store();
    let report = first.ingest_labeled(&examples).unwrap();
    assert_eq!((report.stored, report.duplicates), (100, 0));
    let exported = first.export_labeled(OriginFilter::All).unwrap();
    assert_eq!(exported.lines().count(), 100);

    let (_b, second) = temp_store();
    assert_eq!(second.ingest_labeled_file(&exported).unwrap().stored, 100);
    assert_eq!(second.labeled_examples(OriginFilter::All).unwrap(), examples);
    assert_eq!(second.export_labeled(OriginFilter::All).unwrap(), exported);
    // Ingesting again only finds duplicates.
    let again = second.ingest_labeled_file(&exported).unwrap();
    assert_eq!((again.stored, again.duplicates), (0, 100));

    for bad in [
        r#"{"question":"q","body":"b","origin":"synthetic"}"#,
        r#"{"question":"","body":"b","label":"against","origin":"synthetic"}"#,
        r#"{"question":"q","body":"b","label":"neutral","origin":"synthetic"}"#,
        r#"not json"#,
    ] {
        let mut lines: Vec<&str> = exported.lines().collect();
        lines.insert(57, bad);
        let text = lines.join("\n") + "\n";
        let (_c, third) = temp_store();
        match third.ingest_labeled_file(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 58, "{bad}"),
            other => panic!("expected a parse error for {bad}, got {other:?}"),
        }
        assert!(third.labeled_examples(OriginFilter::All).unwrap().is_empty());
    }
}

// Scripted retries.

pub const START: i64 = 1_000_000;

/// Posts one comment into a fresh debate and drains it against a stub
/// scripted with `script`. Returns the final job, the stub's hit count and
/// the final manual-clock time.
pub fn run_scripted(kind: ModuleKind, script: &[u16]) -> (ScoringJob, usize, i64) {
    let stub = StubScorer::start(script);
    let (_dir, store) = temp_store();
    let remote = Arc::new(RemoteScorer::new(RemoteConfig::new(&stub.base_url)));
    let clock = Arc::new(ManualClock::new(START));
    let pipeline = Pipeline::new(Arc::clone(&store), remote.clone(), remote, Arc::new(WeightVector::placeholder()))
        .with_clock(clock.clone());
    let debate = store.create_debate(&NewDebate::new("Q?", kind), Default::default()).unwrap();
    let author = store.create_participant("a", "t").unwrap();
    let (comment, _) = store
        .append_comment_with_event(&NewComment::new(debate.debate_id, author.participant_id, "some text"))
        .unwrap();
    pipeline.drain().unwrap();
    let job = store.job_for_comment(comment.comment_id).unwrap().unwrap();
    (job, stub.hits(), clock.now_millis())
}

