//! REST contract checks shared by the api tests and the acceptance suite.

use std::path::Path;
use std::sync::Arc;

use reqwest::blocking::{multipart, Client};
use serde_json::{json, Value};
use tomigo::Service;
use tomigo_core::provider::MockProvider;

use super::*;

pub fn client() -> Client {
    Client::new()
}

pub fn problem(resp: reqwest::blocking::Response) -> (u16, Value) {
    let status = resp.status().as_u16();
    let ct = resp.headers()["content-type"].to_str().unwrap().to_string();
    assert_eq!(ct, "application/problem+json");
    (status, resp.json().unwrap())
}

/// Creates a project over REST and uploads the magician reference images.
pub fn create_with_images(server: &TestServer) -> String {
    let c = client();
    let resp = c
        .post(server.url("/projects"))
        .json(&json!({ "design_type": "book cover", "brief": magician_brief() }))
        .send()
        .unwrap();
    assert_eq!(resp.status().as_u16(), 201);
    let id = resp.json::<Value>().unwrap()["id"].as_str().unwrap().to_string();
    for (i, path) in magician_image_paths().iter().enumerate() {
        let part = multipart::Part::bytes(std::fs::read(path).unwrap())
            .file_name(format!("ref{i}.png"))
            .mime_str("image/png")
            .unwrap();
        let resp = c
            .post(server.url(&format!("/projects/{id}/images")))
            .multipart(multipart::Form::new().part("image", part))
            .send()
            .unwrap();
        assert_eq!(resp.status().as_u16(), 201);
        assert_eq!(resp.json::<Value>().unwrap()["index"], json!(i));
    }
    id
}

/// Drives every endpoint through a full magician session.
pub fn check_full_flow(server: &TestServer) {
    let c = client();
    let id = create_with_images(server);
    let url = |p: &str| server.url(&format!("/projects/{id}{p}"));

    let syn: Value = c.post(url("/synthesize")).send().unwrap().json().unwrap();
    assert_eq!(syn["graph"]["version"], json!(1));
    assert_eq!(syn["graph"]["nodes"].as_array().unwrap().len(), 10);
    assert!(syn["constraint_report"]["violations"].as_array().unwrap().is_empty());

    let graph: Value = c.get(url("/graph")).send().unwrap().json().unwrap();
    assert_eq!(graph, syn["graph"]);

    let msg: Value = c.post(url("/messages")).json(&json!({ "text": "more sparkles" })).send().unwrap().json().unwrap();
    assert_eq!(msg["summary"], json!("Updated 1 node: n6."));
    assert_eq!(msg["changed_node_ids"], json!(["n6"]));

    let q: Value = c.get(url("/questions/next")).send().unwrap().json().unwrap();
    assert!(!q["text"].as_str().unwrap().is_empty());
    assert_eq!(q["target_types"], json!(["SubjectiveImpression", "VerbalElements"]));

    let patch = json!({ "ops": [{ "op": "set_lock", "id": "n8", "locked": true }] });
    let r: Value = c.post(url("/graph/patch")).json(&patch).send().unwrap().json().unwrap();
    assert_eq!(r["graph"]["version"], json!(3));
    let edit = json!({ "ops": [{ "op": "edit_description", "id": "n8", "description": "plain" }] });
    let r: Value = c.post(url("/graph/patch")).json(&edit).send().unwrap().json().unwrap();
    assert_eq!(r["conflicts"][0]["reason"], json!("LockedNode"));
    assert_eq!(r["graph"]["version"], json!(3));

    let resp = c.post(url("/designs/generate")).send().unwrap();
    assert_eq!(resp.status().as_u16(), 201);
    assert_eq!(resp.json::<Value>().unwrap()["design_id"], json!("d1"));
    let up: Value = c.post(url("/designs/d1/update")).send().unwrap().json().unwrap();
    assert_eq!(up["design_id"], json!("d2"));
    assert_eq!(up["gaps"][0]["node_id"], json!("n9"));
    let ap: Value = c.post(url("/designs/d2/apply-node/n6")).send().unwrap().json().unwrap();
    assert_eq!(ap["design_id"], json!("d3"));

    let img = c.get(url("/designs/d3/image")).send().unwrap();
    assert_eq!(img.status().as_u16(), 200);
    assert_eq!(img.headers()["content-type"], "image/png");
    assert!(img.bytes().unwrap().starts_with(&[0x89, b'P', b'N', b'G']));

    let snap: Value = c.get(url("")).send().unwrap().json().unwrap();
    assert_eq!(snap["id"], json!(id));
    assert_eq!(snap["images"].as_array().unwrap().len(), 5);
    assert_eq!(snap["designs"].as_array().unwrap().len(), 3);
    assert_eq!(snap["designs"][2]["lineage"], json!({ "kind": "apply_node", "parent": "d2", "node": "n6" }));
    // message plus the logged question
    assert_eq!(snap["history"].as_array().unwrap().len(), 2);
}

pub fn check_problem_details(server: &TestServer) {
    let c = client();

    let (status, body) = problem(c.get(server.url("/projects/missing")).send().unwrap());
    assert_eq!(status, 404);
    assert_eq!(body["code"], json!("NotFound"));
    assert_eq!(body["status"], json!(404));

    let (status, body) = problem(
        c.post(server.url("/projects")).json(&json!({ "design_type": "poster", "brief": "" })).send().unwrap(),
    );
    assert_eq!((status, body["code"].clone()), (400, json!("InvalidBrief")));

    let (status, body) = problem(c.post(server.url("/projects")).body("{not json").send().unwrap());
    assert_eq!((status, body["code"].clone()), (400, json!("BadRequest")));

    let id = create_with_images(server);
    let (status, body) = problem(c.get(server.url(&format!("/projects/{id}/designs/d7/image"))).send().unwrap());
    assert_eq!((status, body["code"].clone()), (404, json!("NotFound")));

    // generation from an empty graph
    let (status, body) = problem(c.post(server.url(&format!("/projects/{id}/designs/generate"))).send().unwrap());
    assert_eq!((status, body["code"].clone()), (409, json!("EmptyConcept")));
}

/// Two overlapping mutations on one project: exactly one gets a 409.
pub fn check_concurrent_mutations(dir: &Path) {
    let inner = Arc::new(MockProvider::new(magician_fixtures()));
    let (gated, gate) = GatedProvider::new(inner, "interpret");
    let service = Arc::new(Service::new(dir, Arc::new(gated)));
    let id = synthesized_project(&service);
    let server = TestServer::start(service);
    let url = server.url(&format!("/projects/{id}/messages"));

    let first = {
        let url = url.clone();
        std::thread::spawn(move || {
            let r = client().post(url).json(&json!({ "text": "more sparkles" })).send().unwrap();
            (r.status().as_u16(), r.json::<Value>().unwrap())
        })
    };
    gate.entered.recv().unwrap();
    let second = client().post(&url).json(&json!({ "text": "and brighter" })).send().unwrap();
    gate.release.send(()).unwrap();
    let (s1, b1) = first.join().unwrap();
    let (s2, b2) = problem(second);

    assert_eq!(s1, 200, "{b1}");
    assert_eq!(s2, 409);
    assert_eq!(b2["code"], json!("ConcurrentMutation"));
    let snap = server.service.snapshot(&id).unwrap();
    assert_eq!(snap.history.len(), 1);
    assert_eq!(snap.graph().version, 2);
}

/// Crash between temp write and rename of the manifest: version N-1 survives,
/// both in the running server and after a restart.
pub fn check_crash_safety(dir: &Path) {
    let service = mock_service(dir);
    let id = synthesized_project(&service);
    let server = TestServer::start(service.clone());
    let c = client();

    service.crash_hook().arm("manifest");
    let patch = json!({ "ops": [{ "op": "set_lock", "id": "n3", "locked": true }] });
    let (status, body) = problem(c.post(server.url(&format!("/projects/{id}/graph/patch"))).json(&patch).send().unwrap());
    assert_eq!((status, body["code"].clone()), (500, json!("StorageError")));

    let g: Value = c.get(server.url(&format!("/projects/{id}/graph"))).send().unwrap().json().unwrap();
    assert_eq!(g["version"], json!(1));
    drop(server);

    let restarted = TestServer::start(mock_service(dir));
    let g: Value = c.get(restarted.url(&format!("/projects/{id}/graph"))).send().unwrap().json().unwrap();
    assert_eq!(g["version"], json!(1));
    assert!(g["nodes"].as_array().unwrap().iter().all(|n| n["locked"] == json!(false)));
}
