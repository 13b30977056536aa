use std::net::SocketAddr;
use std::path::Path;
use std::sync::{mpsc, Arc};

use annoserve::{Service, ServiceConfig};

/// Serves `path` on an ephemeral port from a background runtime and returns
/// the base URL.
pub fn start(path: &Path, config: ServiceConfig) -> (String, Arc<Service>) {
    let svc = Arc::new(Service::open(path, config).unwrap());
    let (tx, rx) = mpsc::channel();
    let served = svc.clone();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(4)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(annoserve::serve(
            SocketAddr::from(([127, 0, 0, 1], 0)),
            served,
            move |addr| tx.send(addr).unwrap(),
        ))
        .unwrap();
    });
    let addr = rx.recv().unwrap();
    (format!("http://{addr}"), svc)
}
