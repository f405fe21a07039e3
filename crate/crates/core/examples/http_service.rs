//! Runs the HTTP service in-process on an ephemeral port and drives it the
//! way the web client does: sessions, a debate, stances, comments, a
//! recommendation, a reply and the top-comment listing.
//!
//! ```text
//! cargo run --example http_service
//! ```

use std::time::Duration;

use deliberate::api::{Service, ServiceConfig};
use serde_json::{json, Value};

const SECRET: &str = "example-admin-secret";

struct Client {
    base: String,
    agent: ureq::Agent,
}

impl Client {
    fn call(&self, method: &str, path: &str, token: &str, body: Option<Value>) -> (u16, Value) {
        let url = format!("{}{path}", self.base);
        let auth = format!("Bearer {token}");
        let result = match (method, body) {
            ("GET", _) => self.agent.get(&url).header("Authorization", &auth).call(),
            ("PUT", Some(b)) => self.agent.put(&url).header("Authorization", &auth).send_json(b),
            (_, Some(b)) => self.agent.post(&url).header("Authorization", &auth).send_json(b),
            (_, None) => self.agent.post(&url).header("Authorization", &auth).send_empty(),
        };
        let mut resp = result.expect("transport error");
        let status = resp.status().as_u16();
        (status, resp.body_mut().read_json().unwrap_or(Value::Null))
    }

    fn session(&self, name: &str) -> String {
        let (_, v) = self.call("POST", "/api/sessions", "", Some(json!({ "display_name": name })));
        v["token"].as_str().unwrap().to_string()
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut config = ServiceConfig::new(dir.path(), SECRET);
    config.weights_file = Some(concat!(env!("CARGO_MANIFEST_DIR"), "/config/weights.placeholder.txt").into());
    config.workers = 1;
    let service = Service::build(&config)?;

    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let client = Client {
        base: format!("http://{}", listener.local_addr()?),
        agent: ureq::Agent::new_with_config(ureq::Agent::config_builder().http_status_as_error(false).build()),
    };
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = rt.spawn(service.serve(listener, async move {
        let _ = stopped.await;
    }));

    let (_, health) = client.call("GET", "/api/health", "", None);
    println!("health {health}");

    let (_, debate) = client.call(
        "POST",
        "/api/debates",
        SECRET,
        Some(json!({ "question": "Should the park get a skate ramp?", "module_kind": "recommendation" })),
    );
    let id = debate["debate_id"].as_i64().unwrap();
    println!("created debate {id}");

    let alice = client.session("alice");
    let bob = client.session("bob");
    client.call("PUT", &format!("/api/debates/{id}/stance"), &bob, Some(json!({ "label": "against" })));
    client.call("POST", &format!("/api/debates/{id}/comments"), &bob, Some(json!({ "body": "I oppose it, too noisy." })));

    let (status, _) = client.call("GET", &format!("/api/debates/{id}/recommendation"), &alice, None);
    println!("recommendation before declaring a stance: {status}");
    client.call("PUT", &format!("/api/debates/{id}/stance"), &alice, Some(json!({ "label": "in_favor" })));

    // The worker scores bob's comment in the background.
    let path = format!("/api/debates/{id}/recommendation");
    let rec = loop {
        let (_, rec) = client.call("GET", &path, &alice, None);
        if !rec["suggestion"].is_null() {
            break rec;
        }
        std::thread::sleep(Duration::from_millis(10));
    };
    println!("alice is shown {:?}", rec["comment"]["body"].as_str().unwrap_or_default());

    let sid = rec["suggestion"]["suggestion_id"].as_i64().unwrap();
    let (status, reply) = client.call(
        "POST",
        &format!("/api/suggestions/{sid}/reply"),
        &alice,
        Some(json!({ "body": "Ramps can have quiet hours." })),
    );
    println!("reply {status}: comment {}", reply["comment"]["comment_id"]);

    let (_, next) = client.call("POST", &format!("/api/debates/{id}/recommendation/next"), &alice, None);
    println!("next suggestion: {}", next["suggestion"]);

    let (_, uncertain) = client.call("GET", &format!("/api/admin/debates/{id}/uncertain"), SECRET, None);
    println!("uncertain: {uncertain}");

    let _ = stop.send(());
    rt.block_on(server)??;
    Ok(())
}
