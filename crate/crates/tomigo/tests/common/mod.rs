#![allow(dead_code)]

pub mod cli;
pub mod rest;

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};

use tomigo::fixtures::load_fixtures;
use tomigo::Service;
use tomigo_core::error::ProviderError;
use tomigo_core::provider::{FixtureSet, ImageData, MockProvider, Provider, ProviderRequest, RawResponse, Transcript};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/magician")
}

pub fn responses_dir() -> PathBuf {
    fixture_dir().join("responses")
}

pub fn magician_fixtures() -> FixtureSet {
    load_fixtures(&responses_dir()).expect("magician fixtures load")
}

pub fn magician_brief() -> String {
    fs::read_to_string(fixture_dir().join("inputs/brief.txt")).unwrap().trim().to_string()
}

pub fn magician_image_paths() -> Vec<PathBuf> {
    (0..5).map(|i| fixture_dir().join(format!("inputs/ref{i}.png"))).collect()
}

pub fn magician_images() -> Vec<ImageData> {
    magician_image_paths().iter().map(|p| ImageData::new("image/png", fs::read(p).unwrap())).collect()
}

pub fn mock_service(root: &Path) -> Arc<Service> {
    Arc::new(Service::new(root, Arc::new(MockProvider::new(magician_fixtures()))))
}

/// Creates the magician project (5 images) and synthesizes its graph.
pub fn synthesized_project(service: &Service) -> String {
    let id = service.create_project(Some("magician"), "book cover", &magician_brief(), &magician_images()).unwrap();
    service.synthesize(&id).unwrap();
    id
}

/// Wraps a provider and parks the first call for `stage` until released,
/// so a test can observe a mutation while it is in flight.
pub struct GatedProvider {
    inner: Arc<dyn Provider>,
    stage: String,
    entered: Mutex<Option<Sender<()>>>,
    release: Mutex<Option<Receiver<()>>>,
}

pub struct Gate {
    pub entered: Receiver<()>,
    pub release: Sender<()>,
}

impl GatedProvider {
    pub fn new(inner: Arc<dyn Provider>, stage: &str) -> (Self, Gate) {
        let (entered_tx, entered_rx) = channel();
        let (release_tx, release_rx) = channel();
        let p = GatedProvider {
            inner,
            stage: stage.to_string(),
            entered: Mutex::new(Some(entered_tx)),
            release: Mutex::new(Some(release_rx)),
        };
        (p, Gate { entered: entered_rx, release: release_tx })
    }
}

impl Provider for GatedProvider {
    fn send(&self, request: &ProviderRequest) -> Result<RawResponse, ProviderError> {
        if request.stage == self.stage {
            if let Some(tx) = self.entered.lock().unwrap().take() {
                let rx = self.release.lock().unwrap().take().expect("gate used once");
                tx.send(()).unwrap();
                rx.recv().unwrap();
            }
        }
        self.inner.send(request)
    }

    fn transcript(&self) -> &Transcript {
        self.inner.transcript()
    }
}

/// In-process REST server on an ephemeral port, running on its own thread.
pub struct TestServer {
    pub addr: SocketAddr,
    pub service: Arc<Service>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl TestServer {
    pub fn start(service: Arc<Service>) -> Self {
        let (addr_tx, addr_rx) = channel();
        let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
        let app = tomigo::api::router(service.clone());
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = shutdown_rx.await;
                    })
                    .await
                    .unwrap();
            });
        });
        let addr = addr_rx.recv().unwrap();
        TestServer { addr, service, shutdown: Some(shutdown_tx), thread: Some(thread) }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
