use brickjam_cli::server::router;
use brickjam_core::analytics::{report, Dimension, Fixed2, StatReport};
use brickjam_core::fixtures::{alice_records, bird_demo, bird_demo_manifest};
use brickjam_core::project::pack_project;
use brickjam_core::share::{ShareStore, SubmissionMetadata};
use chrono::{Duration, Utc};
use reqwest::multipart::{Form, Part};
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};

struct Server {
    base: String,
    client: Client,
    _dir: tempfile::TempDir,
}

impl Server {
    async fn start() -> Server {
        let dir = tempfile::tempdir().unwrap();
        let store = ShareStore::open(dir.path()).unwrap();
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(async move { axum::serve(listener, router(store)).await.unwrap() });
        Server {
            base: format!("http://{addr}"),
            client: Client::new(),
            _dir: dir,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn upload(&self, bundle: Vec<u8>, meta: &SubmissionMetadata) -> (StatusCode, Value) {
        let form = Form::new()
            .part("bundle", Part::bytes(bundle).file_name("game.zip"))
            .text("metadata", serde_json::to_string(meta).unwrap());
        let resp = self.client.post(self.url("/projects")).multipart(form).send().await.unwrap();
        (resp.status(), resp.json().await.unwrap())
    }

    async fn get(&self, path: &str) -> (StatusCode, Value) {
        let resp = self.client.get(self.url(path)).send().await.unwrap();
        (resp.status(), resp.json().await.unwrap())
    }

    async fn post_json(&self, path: &str, body: &Value) -> (StatusCode, Value) {
        let resp = self.client.post(self.url(path)).json(body).send().await.unwrap();
        (resp.status(), resp.json().await.unwrap())
    }
}

fn meta(tool: &str, tags: &[&str]) -> SubmissionMetadata {
    let mut m = SubmissionMetadata::new(tool);
    m.title = "Flappy".into();
    m.author = "kim".into();
    m.tags = tags.iter().map(|t| t.to_string()).collect();
    m
}

fn bird_bundle() -> Vec<u8> {
    pack_project(&bird_demo()).unwrap()
}

/// The bird demo with the bird's size set to -1, packed by hand.
fn bundle_with_negative_size() -> Vec<u8> {
    use std::io::Write;
    let mut manifest: Value = serde_json::from_slice(bird_demo_manifest()).unwrap();
    manifest["objects"][0]["size"] = json!(-1.0);
    let mut zip = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
    let options = zip::write::SimpleFileOptions::default().compression_method(zip::CompressionMethod::Stored);
    zip.start_file("project.json", options).unwrap();
    zip.write_all(&serde_json::to_vec(&manifest).unwrap()).unwrap();
    for (id, bytes) in &bird_demo().assets {
        zip.start_file(format!("assets/{id}"), options).unwrap();
        zip.write_all(bytes).unwrap();
    }
    zip.finish().unwrap().into_inner()
}

fn assert_error(status: StatusCode, body: &Value, want_status: StatusCode, code: &str) {
    assert_eq!(status, want_status, "{body}");
    assert_eq!(body["code"], code, "{body}");
    assert!(body["message"].as_str().is_some_and(|m| !m.is_empty()), "{body}");
}

#[tokio::test]
async fn upload_then_fetch_record_and_bundle() {
    let s = Server::start().await;
    let bundle = bird_bundle();
    let (status, receipt) = s.upload(bundle.clone(), &meta("pocketcode", &["#AliceGameJam"])).await;
    assert_eq!(status, StatusCode::CREATED, "{receipt}");
    let id = receipt["id"].as_str().unwrap().to_string();
    assert!(receipt.get("duplicate_of").is_none());

    let (status, record) = s.get(&format!("/projects/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(record["id"], id.as_str());
    assert_eq!(record["digest"], receipt["digest"]);

    let resp = s.client.get(s.url(&format!("/projects/{id}/bundle"))).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "application/zip");
    assert_eq!(resp.bytes().await.unwrap().to_vec(), bundle);

    let (_, again) = s.upload(bundle, &meta("pocketcode", &[])).await;
    assert_eq!(again["duplicate_of"], id.as_str());
}

#[tokio::test]
async fn search_pages_through_tagged_uploads() {
    let s = Server::start().await;
    for i in 0..7 {
        let mut p = bird_demo();
        p.name = format!("bird {i}");
        let tags: &[&str] = if i % 2 == 0 { &["#even"] } else { &["#odd"] };
        let (status, body) = s.upload(pack_project(&p).unwrap(), &meta("scratch", tags)).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
    }
    let mut seen = Vec::new();
    for page in 0..3 {
        let (status, body) = s.get(&format!("/projects?tag=%23EVEN&page={page}&page_size=3")).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        assert_eq!(body["total"], 4);
        for item in body["items"].as_array().unwrap() {
            seen.push(item["id"].as_str().unwrap().to_string());
        }
    }
    seen.sort();
    assert_eq!(seen, ["sub-000001", "sub-000003", "sub-000005", "sub-000007"]);

    let (_, body) = s.get("/projects?tag=%23odd").await;
    assert_eq!(body["page_size"], 20);
    assert_eq!(body["items"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn request_errors_are_coded() {
    let s = Server::start().await;
    let (st, b) = s.get("/projects").await;
    assert_error(st, &b, StatusCode::BAD_REQUEST, "missing_tag");
    let (st, b) = s.get("/projects?tag=%23x&page_size=0").await;
    assert_error(st, &b, StatusCode::BAD_REQUEST, "invalid_page");
    let (st, b) = s.get("/projects/sub-000404").await;
    assert_error(st, &b, StatusCode::NOT_FOUND, "unknown_submission");
    let (st, b) = s.get("/projects/sub-000404/bundle").await;
    assert_error(st, &b, StatusCode::NOT_FOUND, "unknown_submission");
    let (st, b) = s.get("/nowhere").await;
    assert_error(st, &b, StatusCode::NOT_FOUND, "not_found");
    let (st, b) = s.get("/jams/jam-000404").await;
    assert_error(st, &b, StatusCode::NOT_FOUND, "unknown_jam");
    let (st, b) = s.get("/jams/jam-000404/stats").await;
    assert_error(st, &b, StatusCode::NOT_FOUND, "unknown_jam");
}

#[tokio::test]
async fn bad_uploads_are_rejected() {
    let s = Server::start().await;
    let (st, b) = s.upload(b"not a zip".to_vec(), &meta("pocketcode", &[])).await;
    assert_error(st, &b, StatusCode::UNPROCESSABLE_ENTITY, "invalid_bundle");

    let (st, b) = s.upload(bundle_with_negative_size(), &meta("pocketcode", &[])).await;
    assert_error(st, &b, StatusCode::UNPROCESSABLE_ENTITY, "invalid_bundle");
    let diags = b["diagnostics"].as_array().expect("diagnostics listed");
    assert!(diags.iter().any(|d| d["path"] == "objects[0]" && d["severity"] == "error"), "{b}");

    let (st, b) = s.upload(bird_bundle(), &meta("", &[])).await;
    assert_error(st, &b, StatusCode::BAD_REQUEST, "invalid_metadata");
    let (st, b) = s.upload(bird_bundle(), &meta("pocketcode", &["no-hash"])).await;
    assert_error(st, &b, StatusCode::BAD_REQUEST, "invalid_metadata");

    let form = Form::new()
        .part("bundle", Part::bytes(bird_bundle()))
        .text("metadata", "{not json");
    let resp = s.client.post(s.url("/projects")).multipart(form).send().await.unwrap();
    let (st, b) = (resp.status(), resp.json::<Value>().await.unwrap());
    assert_error(st, &b, StatusCode::BAD_REQUEST, "malformed_json");

    let form = Form::new().part("bundle", Part::bytes(bird_bundle()));
    let resp = s.client.post(s.url("/projects")).multipart(form).send().await.unwrap();
    let (st, b) = (resp.status(), resp.json::<Value>().await.unwrap());
    assert_error(st, &b, StatusCode::BAD_REQUEST, "missing_field");

    let form = Form::new()
        .part("bundle", Part::bytes(bird_bundle()))
        .text("metadata", serde_json::to_string(&meta("x", &[])).unwrap())
        .text("extra", "1");
    let resp = s.client.post(s.url("/projects")).multipart(form).send().await.unwrap();
    let (st, b) = (resp.status(), resp.json::<Value>().await.unwrap());
    assert_error(st, &b, StatusCode::BAD_REQUEST, "unexpected_field");

    let (_, b) = s.get("/projects?tag=%23AliceGameJam").await;
    assert_eq!(b["total"], 0, "rejected uploads must not be stored");
}

fn jam_body(tag: &str, hours_before: i64, hours_after: i64) -> Value {
    let now = Utc::now();
    json!({
        "theme": "Wonderland",
        "start": now - Duration::hours(hours_before),
        "end": now + Duration::hours(hours_after),
        "required_tag": tag,
        "max_team_size": 4,
    })
}

#[tokio::test]
async fn jam_lifecycle() {
    let s = Server::start().await;
    let (st, jam) = s.post_json("/jams", &jam_body("#AliceGameJam", 1, 1)).await;
    assert_eq!(st, StatusCode::CREATED, "{jam}");
    let jam_id = jam["id"].as_str().unwrap().to_string();

    let mut body = jam_body("#x", 1, 1);
    body["id"] = json!(jam_id);
    let (st, b) = s.post_json("/jams", &body).await;
    assert_error(st, &b, StatusCode::CONFLICT, "duplicate_jam");
    let (st, b) = s.post_json("/jams", &jam_body("#x", -1, -2)).await;
    assert_error(st, &b, StatusCode::BAD_REQUEST, "invalid_jam");
    let resp = s.client.post(s.url("/jams")).body("[").send().await.unwrap();
    let (st, b) = (resp.status(), resp.json::<Value>().await.unwrap());
    assert_error(st, &b, StatusCode::BAD_REQUEST, "malformed_json");

    let (_, tagged) = s.upload(bird_bundle(), &meta("pocketcode", &["#alicegamejam"])).await;
    let (_, untagged) = s.upload(bird_bundle(), &meta("pocketcode", &[])).await;
    let submit = format!("/jams/{jam_id}/submissions");

    let (st, out) = s.post_json(&submit, &json!({ "submission_id": tagged["id"] })).await;
    assert_eq!(st, StatusCode::OK, "{out}");
    assert_eq!(out["outcome"], "accepted", "{out}");
    let (_, out) = s.post_json(&submit, &json!({ "submission_id": untagged["id"] })).await;
    assert_eq!(out["outcome"], "rejected", "{out}");
    assert_eq!(out["rule"], "tag", "{out}");

    let (st, b) = s.post_json(&submit, &json!({ "submission_id": "sub-000404" })).await;
    assert_error(st, &b, StatusCode::NOT_FOUND, "unknown_submission");
    let (st, b) = s.post_json(&submit, &json!({ "id": tagged["id"] })).await;
    assert_error(st, &b, StatusCode::BAD_REQUEST, "malformed_json");
    let (st, b) = s.post_json("/jams/jam-000404/submissions", &json!({ "submission_id": tagged["id"] })).await;
    assert_error(st, &b, StatusCode::NOT_FOUND, "unknown_jam");

    let (st, jam) = s.get(&format!("/jams/{jam_id}")).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(jam["submissions"], json!([tagged["id"]]));
}

#[tokio::test]
async fn jam_stats_over_http_match_the_batch_report() {
    let s = Server::start().await;
    let mut body = jam_body("#AliceGameJam", 1, 1);
    body.as_object_mut().unwrap().remove("max_team_size");
    let (_, jam) = s.post_json("/jams", &body).await;
    let jam_id = jam["id"].as_str().unwrap().to_string();
    let records = alice_records();
    for record in &records {
        let mut p = bird_demo();
        p.name = record.meta.title.clone();
        let (st, receipt) = s.upload(pack_project(&p).unwrap(), &record.meta).await;
        assert_eq!(st, StatusCode::CREATED, "{receipt}");
        let (_, out) = s
            .post_json(&format!("/jams/{jam_id}/submissions"), &json!({ "submission_id": receipt["id"] }))
            .await;
        assert_eq!(out["outcome"], "accepted", "{out}");
    }
    let (st, body) = s.get(&format!("/jams/{jam_id}/stats")).await;
    assert_eq!(st, StatusCode::OK);
    let served: StatReport = serde_json::from_value(body).unwrap();
    let tool = served.dimension(Dimension::Tool);
    assert_eq!(tool.row("scratch").unwrap().percent, Some(Fixed2::from_hundredths(5474)));
    assert_eq!(tool.row("pocketcode").unwrap().percent, Some(Fixed2::from_hundredths(4526)));

    let batch = report(&records);
    assert_eq!(served.dimensions, batch.dimensions);
    assert_eq!(served.countries, batch.countries);
    assert_eq!(served.submissions, 95);
}
