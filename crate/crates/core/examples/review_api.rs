//! Serve the review API over a fixture graph, then act as a reviewer:
//! list organisms, open one, log in and dismiss one evidence alert.
//!
//! ```text
//! cargo run --example review_api
//! ```

use np_alarm::api::{serve, ApiConfig, ApiState};
use np_alarm::fixtures::strictum;
use np_alarm::pipeline::{Pipeline, PipelineConfig, KG_FILE};
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let fixture = strictum::write(&dir.path().join("fixture"))?;
    let config = PipelineConfig::load(&fixture.config)?;
    let run_dir = dir.path().join("run");
    let run = tokio::task::block_in_place(|| {
        Pipeline::new(config)?.run(&fixture.identifications, &run_dir)
    })?;

    let mut api = ApiConfig::new("reviewer-secret");
    api.kg_path = Some(run_dir.join(KG_FILE));
    let state = ApiState::new(run.graph, api);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(listener, state, async {
        let _ = stopped.await;
    }));

    let http = reqwest::Client::new();
    let list: Value = http.get(format!("{base}/api/organisms")).send().await?.json().await?;
    let first = &list["items"][0];
    println!("{} organisms; first {} ({} Strong)", list["total"], first["name"], first["strong"]);

    let id = first["id"].as_str().unwrap_or_default();
    let detail: Value = http.get(format!("{base}/api/organisms/{id}")).send().await?.json().await?;
    let chemicals = detail["chemicals"].as_array().cloned().unwrap_or_default();
    for c in &chemicals {
        println!("  {} best {}", c["display"], c["best_level"]);
    }

    let session: Value = http
        .post(format!("{base}/api/session"))
        .json(&json!({"reviewer": "demo", "token": "reviewer-secret"}))
        .send()
        .await?
        .json()
        .await?;
    let bearer = session["session"].as_str().unwrap_or_default().to_string();
    if let Some(target) = chemicals.first().and_then(|c| c["evidence"][0]["id"].as_str()) {
        let status = http
            .post(format!("{base}/api/triage"))
            .bearer_auth(&bearer)
            .json(&json!({"target": target, "status": "Dismissed"}))
            .send()
            .await?
            .status();
        let view: Value = http.get(format!("{base}/api/triage/{target}")).send().await?.json().await?;
        println!("triage {status}: {} now {}", target, view["status"]);
    }

    let _ = stop.send(());
    server.await??;
    Ok(())
}
